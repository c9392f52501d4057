use crate::error::CliError;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Written to `<out>/manifest.json` by every subcommand: the exact inputs,
/// configs, seed, and tool version of the run. Field order is fixed and no
/// timestamps are recorded, so identical runs produce identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub subcommand: &'static str,
    pub inputs: Vec<PathBuf>,
    pub configs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub deterministic: bool,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, common: &crate::CommonArgs) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand,
            inputs: Vec::new(),
            configs: Vec::new(),
            out_dir: common.out.clone(),
            seed: common.seed,
            deterministic: common.deterministic,
        }
    }

    pub fn with_inputs(mut self, inputs: impl IntoIterator<Item = PathBuf>) -> Self {
        self.inputs.extend(inputs);
        self
    }

    pub fn with_configs(mut self, configs: impl IntoIterator<Item = PathBuf>) -> Self {
        self.configs.extend(configs);
        self
    }

    /// Creates the output directory and writes the manifest into it.
    pub fn write(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir)?;
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::config(format!("manifest: {e}")))?;
        std::fs::write(self.out_dir.join("manifest.json"), json + "\n")?;
        Ok(())
    }
}

/// Reads a file to a string with a path-qualified I/O error.
pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}
