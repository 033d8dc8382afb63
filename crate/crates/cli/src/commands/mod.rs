pub mod budget;
pub mod evaluate;
pub mod mix;
pub mod plan;
pub mod plot_data;
pub mod propagate;
pub mod rank;
pub mod refine;
pub mod serve;
pub mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use annob_core::backend::{ProcessBackend, SyntheticBackend, SyntheticScene, BACKEND_CMD_ENV};
use annob_core::batch::BatchRun;
use annob_core::{Backend, BackendError, DatasetManifest};
use anyhow::{bail, Context, Result};

use crate::GlobalArgs;

/// Bad invocation that clap cannot detect on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// The seed of a stochastic command, echoed to stderr.
pub fn require_seed(g: &GlobalArgs) -> Result<u64> {
    let seed = g
        .seed
        .ok_or_else(|| UsageError("this command is randomized and needs --seed".into()))?;
    eprintln!("seed: {seed}");
    Ok(seed)
}

pub fn jobs(g: &GlobalArgs) -> usize {
    g.jobs as usize
}

pub type SceneMap = BTreeMap<String, SyntheticScene>;

pub fn load_scenes(path: &Path) -> Result<SceneMap> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenes: SceneMap =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    for (id, scene) in &scenes {
        scene.validate().with_context(|| format!("scene {id:?}"))?;
    }
    Ok(scenes)
}

pub type DynBackend = Box<dyn Backend>;

/// Builds one backend per worker: in-process synthetic when `--synthetic`
/// is given, otherwise a subprocess from `--backend-cmd` or the
/// environment.
pub fn backend_factory(
    g: &GlobalArgs,
) -> Result<impl Fn() -> std::result::Result<DynBackend, BackendError> + Sync> {
    enum Source {
        Synthetic(Arc<SceneMap>),
        Command(String),
    }
    let source = match (&g.synthetic, &g.backend_cmd) {
        (Some(path), _) => Source::Synthetic(Arc::new(load_scenes(path)?)),
        (None, Some(cmd)) => Source::Command(cmd.clone()),
        (None, None) => match std::env::var(BACKEND_CMD_ENV) {
            Ok(cmd) => Source::Command(cmd),
            Err(_) => {
                return Err(BackendError::Unavailable(format!(
                    "no backend: pass --synthetic or --backend-cmd, or set {BACKEND_CMD_ENV}"
                ))
                .into())
            }
        },
    };
    Ok(move || -> std::result::Result<DynBackend, BackendError> {
        Ok(match &source {
            Source::Synthetic(scenes) => Box::new(SyntheticBackend::new(Arc::clone(scenes))),
            Source::Command(cmd) => Box::new(ProcessBackend::spawn(cmd)?),
        })
    })
}

/// Directory that relative paths in a manifest are resolved against.
pub fn manifest_base(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    DatasetManifest::load(path).with_context(|| format!("loading manifest {}", path.display()))
}

/// Creates `dir` and returns its absolute form, so that paths written into
/// manifests stay valid wherever those manifests end up.
pub fn prepare_out_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(fs::canonicalize(dir)?)
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

pub fn to_json_text<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Saves the run's manifest with paths made absolute against `base`, then
/// fails if any clip failed.
pub fn finish_batch(run: &BatchRun, base: &Path, manifest_out: &Path) -> Result<()> {
    let mut manifest = run.manifest.clone();
    manifest.rebase(&fs::canonicalize(base)?);
    manifest
        .save(manifest_out)
        .with_context(|| format!("writing {}", manifest_out.display()))?;
    if run.failures.is_empty() {
        return Ok(());
    }
    for f in &run.failures {
        eprintln!("clip {}: {}", f.clip_id, f.error);
    }
    bail!(
        "{} of {} clips failed",
        run.failures.len(),
        run.manifest.clips.len()
    )
}
