//! Files: design documents, run configuration, manifests, history CSV and
//! kinematic export.

mod design_file;
mod export;
mod history;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{SurrogateParams, EVALUATOR_IDS};
use crate::grammar::GenParams;
use crate::search::SearchConfig;
use crate::sensitivity::{default_specs, ParamSpec, SweepBase};

pub use design_file::{
    deserialize_design, parse_design_document, read_design_file, serialize_design, serialize_document,
    write_design_file, DesignDocument, FingerDocument, PalmDocument, DESIGN_SCHEMA_VERSION,
};
pub use export::{export_kinematic_tree, ExportSummary};
pub use history::{read_history_csv, write_history_csv, HistoryWriter, HISTORY_HEADER};

/// Default output directory when neither the command line nor the config names one.
pub const OUTPUT_DIR_ENV: &str = "HAND_CODESIGN_OUT";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Hands averaged per sweep sample.
    pub population: usize,
    pub degree: usize,
    /// Overrides every spec's sample count when set.
    pub samples: Option<usize>,
    /// Empty means the default twelve.
    pub specs: Vec<ParamSpec>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let base = SweepBase::default();
        AnalysisConfig { population: base.population, degree: base.degree, samples: None, specs: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub evaluator: String,
    /// Drives search, generation and sweep sampling; evaluation trials use `surrogate.seed`.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub search: SearchConfig,
    pub gen: GenParams,
    pub surrogate: SurrogateParams,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            evaluator: "rotation".into(),
            seed: 0,
            output_dir: None,
            search: SearchConfig::default(),
            gen: GenParams::default(),
            surrogate: SurrogateParams::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn check(&self) -> Result<()> {
        if !EVALUATOR_IDS.contains(&self.evaluator.as_str()) {
            return Err(Error::UnknownEvaluator(self.evaluator.clone()));
        }
        self.search.check()?;
        self.gen.check()?;
        self.surrogate.check()?;
        for s in &self.analysis.specs {
            s.check()?;
        }
        Ok(())
    }

    /// Copy with the top-level seed pushed into the search and generator.
    pub fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        c.search.seed = self.seed;
        c.gen.seed = self.seed;
        c
    }

    pub fn sweep_base(&self) -> SweepBase {
        SweepBase {
            gen: self.gen.clone(),
            surrogate: self.surrogate.clone(),
            evaluator: self.evaluator.clone(),
            population: self.analysis.population,
            seed: self.seed,
            degree: self.analysis.degree,
        }
    }

    pub fn sweep_specs(&self) -> Vec<ParamSpec> {
        let specs = if self.analysis.specs.is_empty() { default_specs() } else { self.analysis.specs.clone() };
        match self.analysis.samples {
            Some(n) => specs.into_iter().map(|s| ParamSpec { samples: n, ..s }).collect(),
            None => specs,
        }
    }

    /// Output directory: explicit value, then the config, then the environment, then `runs`.
    pub fn output_dir(&self, explicit: Option<&Path>) -> PathBuf {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"))
    }
}

pub fn parse_run_config(text: &str, source: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| Error::Parse { path: source.to_string(), message: e.to_string() })?;
    serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: format!("{source} ({})", e.path()),
        message: e.into_inner().to_string(),
    })
}

/// Reads a TOML run config, or the config snapshot inside a JSON manifest.
pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(parse_manifest(&text, &path.display().to_string())?.config);
    }
    parse_run_config(&text, &path.display().to_string())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the evaluator parameter block, so runs with different settings
/// cannot be mixed up.
pub fn params_hash(params: &SurrogateParams) -> String {
    sha256_hex(serde_json::to_string(params).expect("parameters serialize").as_bytes())
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub evaluator_params_sha256: String,
    /// Files written next to the manifest.
    pub outputs: Vec<String>,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, outputs: &[&str]) -> Manifest {
        let mut config = config.clone();
        config.output_dir = None;
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.seed,
            evaluator_params_sha256: params_hash(&config.surrogate),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            config,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifests serialize");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub fn parse_manifest(text: &str, source: &str) -> Result<Manifest> {
    let mut de = serde_json::Deserializer::from_str(text);
    let m: Manifest = serde_path_to_error::deserialize(&mut de).map_err(|e| Error::Parse {
        path: format!("{source} ({})", e.path()),
        message: e.into_inner().to_string(),
    })?;
    if m.evaluator_params_sha256 != params_hash(&m.config.surrogate) {
        return Err(Error::Config(format!("{source}: evaluator parameter hash does not match the config")));
    }
    Ok(m)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, &path.display().to_string())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
