//! Config schemas, one per subcommand. All are TOML.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use wnd_core::campaigns::{CampaignConfig, DataFamily, EstimateId};
use wnd_core::flow::Scheme;
use wnd_core::spectral::{SpectralField, TorusGrid};
use wnd_core::witness::TRule;
use wnd_core::Result;

/// A datum given either by a family or by explicit `[k, re, im]` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Datum {
    Modes {
        modes: Vec<(i64, f64, f64)>,
        #[serde(default)]
        label: Option<String>,
    },
    Family(DataFamily),
}

impl Datum {
    pub fn max_mode(&self) -> usize {
        match self {
            Datum::Modes { modes, .. } => modes
                .iter()
                .map(|m| m.0.unsigned_abs() as usize)
                .max()
                .unwrap_or(0)
                .max(1),
            Datum::Family(f) => f.max_mode(),
        }
    }

    /// The datum for path `index` on a grid sized for a degree-`degree` product.
    pub fn field(&self, index: u64, degree: usize) -> Result<SpectralField> {
        let grid = TorusGrid::for_degree(self.max_mode(), degree.max(3))?;
        match self {
            Datum::Modes { modes, .. } => {
                let m: Vec<_> = modes.iter().map(|&(k, re, im)| (k, Complex64::new(re, im))).collect();
                SpectralField::from_modes(grid, &m)
            }
            Datum::Family(f) => Ok(f.datum(index)?.resample(grid)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Datum::Modes { modes, label } => label.clone().unwrap_or_else(|| {
                modes
                    .iter()
                    .map(|(k, re, im)| format!("({re}{im:+}i)e^{{i{k}x}}"))
                    .collect::<Vec<_>>()
                    .join("+")
            }),
            Datum::Family(DataFamily::SingleMode { k }) => format!("single_mode k={k}"),
            Datum::Family(DataFamily::Flat { n }) => format!("flat N={n}"),
            Datum::Family(DataFamily::Random {
                max_mode, data_seed, ..
            }) => format!("random K={max_mode} seed={data_seed}"),
        }
    }

    fn data_seed(&self) -> Option<u64> {
        match self {
            Datum::Family(DataFamily::Random { data_seed, .. }) => Some(*data_seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathEnsemble {
    pub num_paths: usize,
    pub master_seed: u64,
    pub horizon: f64,
    pub steps: usize,
}

fn default_p() -> f64 {
    3.0
}
fn default_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub data: Datum,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub scheme: SchemeName,
    pub ensemble: PathEnsemble,
    /// Record every `record_every`-th knot (the last knot is always recorded).
    #[serde(default = "default_every")]
    pub record_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Lie,
    #[default]
    Strang,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Lie => Scheme::Lie,
            SchemeName::Strang => Scheme::Strang,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub num_paths: usize,
    pub master_seed: u64,
}

/// Monte Carlo fourth moments of the linear flow against the closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    pub horizon: f64,
    pub steps: usize,
    pub ensemble: SeedSpec,
    pub data: Vec<Datum>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkjQuery {
    pub k: i64,
    pub j: i64,
    pub bound: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuinticQuery {
    pub n: i64,
    pub k: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    #[serde(default)]
    pub zero_product: Vec<u64>,
    #[serde(default)]
    pub ellipse: Vec<i64>,
    #[serde(default)]
    pub s_kj: Vec<SkjQuery>,
    #[serde(default)]
    pub quintic: Vec<QuinticQuery>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    pub n_list: Vec<i64>,
    pub t_rule: TRule,
    #[serde(default)]
    pub exact: bool,
    #[serde(default)]
    pub mc_paths: usize,
    #[serde(default = "default_mc_steps")]
    pub mc_steps: usize,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_mc_steps() -> usize {
    100
}

/// Which schema a config file follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Simulate,
    Moments,
    Campaign,
    Resonance,
    Witness,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Simulate(SimulateConfig),
    Moments(MomentsConfig),
    Campaign(CampaignConfig),
    Resonance(ResonanceConfig),
    Witness(WitnessConfig),
}

/// Guesses the schema from the top-level keys.
pub fn infer_kind(text: &str) -> std::result::Result<Kind, String> {
    let table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
    let has = |k: &str| table.contains_key(k);
    if has("estimate") {
        Ok(Kind::Campaign)
    } else if has("n_list") {
        Ok(Kind::Witness)
    } else if has("zero_product") || has("ellipse") || has("s_kj") || has("quintic") {
        Ok(Kind::Resonance)
    } else if matches!(table.get("data"), Some(toml::Value::Array(_))) {
        Ok(Kind::Moments)
    } else if has("data") {
        Ok(Kind::Simulate)
    } else {
        Err("cannot tell which config schema this file follows".into())
    }
}

pub fn parse(kind: Kind, text: &str) -> std::result::Result<Config, String> {
    let err = |e: toml::de::Error| e.to_string();
    Ok(match kind {
        Kind::Simulate => Config::Simulate(toml::from_str(text).map_err(err)?),
        Kind::Moments => Config::Moments(toml::from_str(text).map_err(err)?),
        Kind::Campaign => Config::Campaign(toml::from_str(text).map_err(err)?),
        Kind::Resonance => Config::Resonance(toml::from_str(text).map_err(err)?),
        Kind::Witness => Config::Witness(toml::from_str(text).map_err(err)?),
    })
}

fn check_ensemble(out: &mut Vec<String>, num_paths: usize, steps: usize) {
    if num_paths == 0 {
        out.push("ensemble.num_paths must be >= 1".into());
    }
    if steps == 0 {
        out.push("steps must be >= 1".into());
    }
}

impl Config {
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Config::Campaign(c) => out = c.diagnostics(),
            Config::Simulate(c) => {
                check_ensemble(&mut out, c.ensemble.num_paths, c.ensemble.steps);
                if !(c.ensemble.horizon > 0.0 && c.ensemble.horizon.is_finite()) {
                    out.push(format!("ensemble.horizon = {} must be > 0", c.ensemble.horizon));
                }
                if !(c.p >= 1.0 && c.p.is_finite()) {
                    out.push(format!("p = {} must be >= 1", c.p));
                }
                if c.record_every == 0 {
                    out.push("record_every must be >= 1".into());
                }
                if c.data.data_seed() == Some(c.ensemble.master_seed) {
                    out.push("data_seed equals master_seed; data would not be independent of W".into());
                }
            }
            Config::Moments(c) => {
                check_ensemble(&mut out, c.ensemble.num_paths, c.steps);
                if !(c.horizon > 0.0 && c.horizon.is_finite()) {
                    out.push(format!("horizon = {} must be > 0", c.horizon));
                }
                if c.data.is_empty() {
                    out.push("data is empty".into());
                }
                if c.data.iter().any(|d| d.max_mode() > 64) {
                    out.push("data bandwidth above 64".into());
                }
            }
            Config::Resonance(c) => {
                if c.zero_product.is_empty() && c.ellipse.is_empty() && c.s_kj.is_empty() && c.quintic.is_empty() {
                    out.push("no queries".into());
                }
                if c.zero_product.iter().any(|&m| m < 1) {
                    out.push("zero_product entries must be >= 1".into());
                }
            }
            Config::Witness(c) => {
                if c.n_list.is_empty() {
                    out.push("n_list is empty".into());
                }
                if c.n_list.iter().any(|&n| n < 1) {
                    out.push("n_list entries must be >= 1".into());
                }
                if c.n_list.windows(2).any(|w| w[0] >= w[1]) {
                    out.push("n_list must be strictly ascending".into());
                }
                if matches!(c.t_rule, TRule::InverseLogSquared) && c.n_list.iter().any(|&n| n < 2) {
                    out.push("t_rule inverse_log_squared needs N >= 2".into());
                }
                if let TRule::Fixed { t } = c.t_rule {
                    if !(t > 0.0 && t.is_finite()) {
                        out.push(format!("t = {t} must be > 0"));
                    }
                }
                if c.mc_paths > 0 && c.mc_steps == 0 {
                    out.push("mc_steps must be >= 1".into());
                }
            }
        }
        out
    }

    pub fn master_seed(&self) -> Option<u64> {
        match self {
            Config::Simulate(c) => Some(c.ensemble.master_seed),
            Config::Moments(c) => Some(c.ensemble.master_seed),
            Config::Campaign(c) => Some(c.ensemble.master_seed),
            Config::Witness(c) => Some(c.master_seed),
            Config::Resonance(_) => None,
        }
    }

    pub fn override_seed(&mut self, seed: u64) {
        match self {
            Config::Simulate(c) => c.ensemble.master_seed = seed,
            Config::Moments(c) => c.ensemble.master_seed = seed,
            Config::Campaign(c) => c.ensemble.master_seed = seed,
            Config::Witness(c) => c.master_seed = seed,
            Config::Resonance(_) => {}
        }
    }

    pub fn estimate(&self) -> Option<EstimateId> {
        match self {
            Config::Campaign(c) => Some(c.estimate),
            _ => None,
        }
    }
}
