use std::path::{Path, PathBuf};

use chirrup_core::chirrup::default_parity_bits;
use chirrup_core::ost::VarianceConvention;
use chirrup_core::{CodeConfig, CodebookMode};
use serde::{Deserialize, Deserializer, Serialize};

use crate::{CliError, Result};

pub const AUTO_BISECT: &str = "auto-bisect";

/// A scalar or a list in the config file; always a list once parsed.
#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KList {
    List(Vec<usize>),
    Range { start: usize, end: usize, step: usize },
}

impl Default for KList {
    fn default() -> Self {
        KList::List(Vec::new())
    }
}

impl KList {
    /// The values, with `end` inclusive for ranges.
    pub fn values(&self) -> Vec<usize> {
        match self {
            KList::List(v) => v.clone(),
            KList::Range { start, end, step } => (*start..=*end).step_by((*step).max(1)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ebn0Plan {
    List(Vec<f64>),
    Auto(String),
}

impl Default for Ebn0Plan {
    fn default() -> Self {
        Ebn0Plan::List(Vec::new())
    }
}

impl Ebn0Plan {
    pub fn is_auto(&self) -> bool {
        matches!(self, Ebn0Plan::Auto(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OstSpec {
    /// Code length.
    pub n: usize,
    /// Message lengths for predictor curves.
    #[serde(default, deserialize_with = "one_or_many")]
    pub b: Vec<usize>,
    #[serde(default = "default_target")]
    pub epsilon: f64,
    #[serde(default, deserialize_with = "one_or_many")]
    pub ebn0_db: Vec<f64>,
    #[serde(default)]
    pub convention: VarianceConvention,
    /// Explicit codebook size for Monte-Carlo runs.
    #[serde(default)]
    pub codebook_size: Option<usize>,
}

/// Declarative description of a sweep. Scalars may be given wherever a list
/// is accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default, deserialize_with = "one_or_many")]
    pub m: Vec<usize>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub p: Vec<usize>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub r: Vec<usize>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub mode: Vec<CodebookMode>,
    /// Parity allocations; each applies to the `r` with matching length.
    /// Defaults are used for any `r` without one.
    #[serde(default)]
    pub l: Vec<Vec<usize>>,
    #[serde(default)]
    pub k: KList,
    #[serde(default)]
    pub ebn0_db: Ebn0Plan,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Skip grid points carrying fewer message bits.
    #[serde(default)]
    pub min_bits: usize,
    #[serde(default = "default_target")]
    pub target_error: f64,
    #[serde(default = "default_cycles")]
    pub cycles: usize,
    #[serde(default = "default_children")]
    pub children: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub parity_seed: u64,
    #[serde(default)]
    pub ost: Option<OstSpec>,
}

fn default_trials() -> usize {
    20
}
fn default_target() -> f64 {
    0.05
}
fn default_cycles() -> usize {
    chirrup_core::chirrup::DEFAULT_CYCLES
}
fn default_children() -> usize {
    chirrup_core::reconstruct::DEFAULT_CHILDREN
}
fn default_alpha() -> f64 {
    chirrup_core::reconstruct::DEFAULT_ALPHA
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        Self::from_toml(&text)
    }

    pub fn k_values(&self) -> Vec<usize> {
        self.k.values()
    }

    /// Every code configuration, in (mode, m, p, r, l) order, after the
    /// `min_bits` filter.
    pub fn grid(&self) -> Result<Vec<CodeConfig>> {
        let mut out = Vec::new();
        for &mode in &self.mode {
            for &m in &self.m {
                for &p in &self.p {
                    for &r in &self.r {
                        for l in self.allocations(r)? {
                            let mut config = CodeConfig::with_geometry(m, p, r, mode, l)
                                .map_err(|e| CliError::Spec(format!("m={m} p={p} r={r} {mode}: {e}")))?
                                .with_cycles(self.cycles)
                                .with_parity_seed(self.parity_seed);
                            config.decoder = config.decoder.clone().with_children(self.children).with_alpha(self.alpha);
                            if config.message_bits() >= self.min_bits.max(1) {
                                out.push(config);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn allocations(&self, r: usize) -> Result<Vec<Vec<usize>>> {
        let given: Vec<Vec<usize>> = self.l.iter().filter(|l| l.len() == 1 << r).cloned().collect();
        if !given.is_empty() {
            return Ok(given);
        }
        default_parity_bits(r)
            .map(|l| vec![l])
            .ok_or_else(|| CliError::Spec(format!("r = {r} needs an explicit l allocation")))
    }

    /// Checks everything a CHIRRUP sweep needs before any work starts.
    pub fn validate_chirrup(&self) -> Result<()> {
        if self.m.is_empty() || self.p.is_empty() || self.r.is_empty() || self.mode.is_empty() {
            return Err(CliError::Spec("m, p, r and mode must each list at least one value".into()));
        }
        if self.trials == 0 {
            return Err(CliError::Spec("trials must be positive".into()));
        }
        if !(self.target_error > 0.0 && self.target_error < 1.0) {
            return Err(CliError::Spec(format!("target_error {} outside (0, 1)", self.target_error)));
        }
        if self.k_values().contains(&0) {
            return Err(CliError::Spec("K must be positive".into()));
        }
        match &self.ebn0_db {
            Ebn0Plan::Auto(s) if s != AUTO_BISECT => {
                return Err(CliError::Spec(format!("ebn0_db must be a list or \"{AUTO_BISECT}\", got {s:?}")));
            }
            Ebn0Plan::Auto(_) if self.trials < 20 => {
                return Err(CliError::Spec("auto-bisect needs at least 20 trials".into()));
            }
            Ebn0Plan::List(v) if v.iter().any(|x| !x.is_finite()) => {
                return Err(CliError::Spec("ebn0_db values must be finite".into()));
            }
            _ => {}
        }
        for l in &self.l {
            if !self.r.iter().any(|&r| r < usize::BITS as usize && 1usize << r == l.len()) {
                return Err(CliError::Spec(format!("allocation {l:?} matches no r in the grid")));
            }
        }
        self.grid()?;
        Ok(())
    }

    pub fn ost(&self) -> Result<&OstSpec> {
        self.ost.as_ref().ok_or_else(|| CliError::Spec("missing [ost] section".into()))
    }
}

impl OstSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CliError::Spec("ost.n must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CliError::Spec(format!("ost.epsilon {} outside (0, 1)", self.epsilon)));
        }
        if self.b.contains(&0) {
            return Err(CliError::Spec("ost.b values must be positive".into()));
        }
        if self.ebn0_db.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Spec("ost.ebn0_db values must be finite".into()));
        }
        Ok(())
    }
}
