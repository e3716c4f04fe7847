//! Run settings from an optional JSON file, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use crate::experiments::InitKind;

/// Every field is optional; unset fields fall back to the command default.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub scheme: Option<String>,
    pub eps: Option<Vec<f64>>,
    pub nx: Option<Vec<usize>>,
    pub nv: Option<usize>,
    pub vmax: Option<f64>,
    pub t_end: Option<f64>,
    pub limiter: Option<bool>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub init: Option<InitKind>,
    pub z2: Option<Vec<f64>>,
    pub resolution: Option<usize>,
    pub steps: Option<usize>,
}

impl Settings {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(self, over: Settings) -> Settings {
        Settings {
            scheme: over.scheme.or(self.scheme),
            eps: over.eps.or(self.eps),
            nx: over.nx.or(self.nx),
            nv: over.nv.or(self.nv),
            vmax: over.vmax.or(self.vmax),
            t_end: over.t_end.or(self.t_end),
            limiter: over.limiter.or(self.limiter),
            threads: over.threads.or(self.threads),
            out: over.out.or(self.out),
            init: over.init.or(self.init),
            z2: over.z2.or(self.z2),
            resolution: over.resolution.or(self.resolution),
            steps: over.steps.or(self.steps),
        }
    }

    pub fn scheme_or(&self, default: &str) -> String {
        self.scheme.clone().unwrap_or_else(|| default.to_string())
    }

    /// Single value of a list setting.
    pub fn one_eps(&self, default: f64) -> Result<f64> {
        single(self.eps.as_deref(), default, "--eps")
    }

    pub fn one_nx(&self, default: usize) -> Result<usize> {
        single(self.nx.as_deref(), default, "--nx")
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn single<T: Copy>(v: Option<&[T]>, default: T, flag: &str) -> Result<T> {
    match v {
        None => Ok(default),
        Some([x]) => Ok(*x),
        Some(_) => bail!("{flag} takes a single value for this command"),
    }
}

/// `on` / `off`
pub fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(format!("expected on or off, got `{s}`")),
    }
}
