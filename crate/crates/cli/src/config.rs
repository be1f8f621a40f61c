use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use serde_json::Value;

use crate::input;

/// One experiment: a subcommand, its input files, parameters and outputs.
/// Relative paths are resolved against the directory of the config file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Subcommand, e.g. `"pressure"` or `"demo escape-full-shift"`.
    pub command: String,
    pub shift: Option<PathBuf>,
    pub potential: Option<PathBuf>,
    pub measure: Option<PathBuf>,
    pub sequence: Option<PathBuf>,
    pub targets: Option<PathBuf>,
    pub candidate: Option<PathBuf>,
    /// Command-specific flags, keyed by flag name without dashes.
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

const SAMPLING: [&str; 3] = ["approximate", "dichotomy", "dualvp"];

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let cfg: ExperimentConfig = input::load(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    /// Command line equivalent to this config.
    pub fn to_args(&self, base: &Path) -> Result<Vec<OsString>> {
        let words: Vec<&str> = self.command.split_whitespace().collect();
        if words.is_empty() {
            bail!("config: field `command` is empty");
        }
        if SAMPLING.contains(&words[0]) && !self.params.contains_key("seed") {
            bail!(
                "config: command {:?} samples at random and needs `params.seed`",
                words[0]
            );
        }
        let mut args: Vec<OsString> = vec!["cms".into()];
        args.extend(words.iter().map(OsString::from));
        let files = [
            ("shift", &self.shift),
            ("potential", &self.potential),
            ("measure", &self.measure),
            ("sequence", &self.sequence),
            ("targets", &self.targets),
            ("candidate", &self.candidate),
            ("out", &self.out),
            ("csv", &self.csv),
        ];
        for (flag, path) in files {
            if let Some(p) = path {
                args.push(format!("--{flag}").into());
                args.push(base.join(p).into_os_string());
            }
        }
        for (key, value) in &self.params {
            let text = match value {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                other => bail!("config: field `params.{key}` must be a scalar, got {other}"),
            };
            args.push(format!("--{}", key.replace('_', "-")).into());
            args.push(text.into());
        }
        Ok(args)
    }
}

pub fn resolve(path: &Path) -> Result<Vec<OsString>> {
    let (cfg, base) = ExperimentConfig::load(path)?;
    cfg.to_args(&base)
        .with_context(|| format!("in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_command_line() {
        let cfg: ExperimentConfig = input::parse(
            r#"{"command":"approximate","shift":"s.json","targets":"t.json","params":{"n":512,"seed":7}}"#,
            "cfg",
        )
        .unwrap();
        let args = cfg.to_args(Path::new("runs")).unwrap();
        let shown: Vec<String> = args
            .iter()
            .map(|a| a.to_string_lossy().into_owned())
            .collect();
        assert_eq!(
            shown,
            [
                "cms",
                "approximate",
                "--shift",
                "runs/s.json",
                "--targets",
                "runs/t.json",
                "--n",
                "512",
                "--seed",
                "7"
            ]
        );
    }

    #[test]
    fn seed_is_mandatory_for_sampling() {
        let cfg: ExperimentConfig =
            input::parse(r#"{"command":"dichotomy","shift":"s.json"}"#, "cfg").unwrap();
        assert!(cfg.to_args(Path::new("")).is_err());
    }
}
