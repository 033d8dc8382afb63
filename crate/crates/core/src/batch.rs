//! Per-clip batch execution shared by the manifest-level drivers.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::DatasetManifest;

#[derive(Debug)]
pub struct ClipFailure {
    pub clip_id: String,
    pub error: Error,
}

/// Output of a manifest-level run: the updated manifest plus the clips that
/// failed and were left unchanged.
#[derive(Debug)]
pub struct BatchRun {
    pub manifest: DatasetManifest,
    pub failures: Vec<ClipFailure>,
}

/// Maps `f` over `items` on a pool of `jobs` threads, preserving order.
pub fn run_parallel<T, R, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if jobs == 0 {
        return Err(Error::InvalidConfig("jobs must be at least 1".into()));
    }
    if jobs == 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}
