//! Stage-by-stage pipeline over plain-file artifacts.
//!
//! Each stage reads its inputs (external files and upstream artifacts),
//! writes its artifacts into the output directory and records input hashes,
//! parameters, output hashes and timing in `manifest.json`. A stage whose
//! recorded hashes and parameters still match is skipped.

mod config;
mod manifest;
mod stages;

use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{
    CatalogSection, CommunitiesSection, CoupleSection, IngestSection, InputPaths, LayoutSection, MatrixSection,
    NormalizeSection, OutputSection, Overrides, PipelineConfig, ReportSection, CATALOG_ENDPOINT_ENV,
};
pub use manifest::{Manifest, StageRecord};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";
pub const LOCK: &str = ".lock";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Extract,
    Expand,
    Catalog,
    Matrix,
    Couple,
    Communities,
    Layout,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Extract,
        Stage::Expand,
        Stage::Catalog,
        Stage::Matrix,
        Stage::Couple,
        Stage::Communities,
        Stage::Layout,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Extract => "extract",
            Stage::Expand => "expand",
            Stage::Catalog => "catalog",
            Stage::Matrix => "matrix",
            Stage::Couple => "couple",
            Stage::Communities => "communities",
            Stage::Layout => "layout",
            Stage::Report => "report",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|st| st.name() == s)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    /// Inputs, parameters and outputs matched the manifest.
    UpToDate,
}

/// Exclusive ownership of an output directory for one invocation.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock(path))
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(Error::Locked(dir.to_owned())),
            Err(e) => Err(Error::io(format!("creating {}", path.display()), e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

pub struct Pipeline {
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.output.dir
    }

    /// Runs one stage; its upstream artifacts must already exist.
    pub fn run_stage(&self, stage: Stage) -> Result<Outcome> {
        let _lock = self.lock()?;
        self.exec(stage)
    }

    /// Runs every stage in order.
    pub fn run_all(&self) -> Result<Vec<(Stage, Outcome)>> {
        let _lock = self.lock()?;
        Stage::ALL.into_iter().map(|s| self.exec(s).map(|o| (s, o))).collect()
    }

    fn lock(&self) -> Result<DirLock> {
        let dir = self.out_dir();
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        DirLock::acquire(dir)
    }

    fn exec(&self, stage: Stage) -> Result<Outcome> {
        let out = self.out_dir();
        let plan = stages::plan(&self.config, stage);
        for (name, producer) in &plan.upstream {
            let path = out.join(name);
            if !path.is_file() {
                return Err(Error::MissingArtifact {
                    path,
                    stage: producer.name(),
                });
            }
        }
        let mut inputs = std::collections::BTreeMap::new();
        for (key, path) in &plan.external {
            inputs.insert(key.clone(), manifest::hash_file(path)?);
        }
        for (name, _) in &plan.upstream {
            inputs.insert((*name).to_owned(), manifest::hash_file(&out.join(name))?);
        }

        let manifest_path = out.join(MANIFEST);
        let mut manifest = Manifest::load(&manifest_path)?;
        if let Some(previous) = manifest.stages.get(stage.name()) {
            if previous.inputs == inputs && previous.params == plan.params && previous.outputs_intact(out) {
                log::info!("{stage}: up to date");
                return Ok(Outcome::UpToDate);
            }
        }

        log::info!("{stage}: running");
        let started = Instant::now();
        let produced = stages::run(&self.config, stage)?;
        let mut outputs = std::collections::BTreeMap::new();
        for name in produced {
            outputs.insert(name.clone(), manifest::hash_file(&out.join(&name))?);
        }
        manifest.stages.insert(
            stage.name().to_owned(),
            StageRecord {
                inputs,
                params: plan.params,
                outputs,
                duration_ms: started.elapsed().as_millis() as u64,
            },
        );
        manifest.save(&manifest_path)?;
        Ok(Outcome::Ran)
    }
}
