use std::io;

use annob_core::backend::protocol::serve;
use annob_core::backend::SyntheticBackend;
use anyhow::Result;

use super::{load_scenes, UsageError};
use crate::GlobalArgs;

pub fn run(g: &GlobalArgs) -> Result<()> {
    let path = g
        .synthetic
        .as_ref()
        .ok_or_else(|| UsageError("serve-synthetic needs --synthetic".into()))?;
    let mut backend = SyntheticBackend::new(load_scenes(path)?);
    serve(&mut backend, io::stdin().lock(), io::stdout().lock())?;
    Ok(())
}
