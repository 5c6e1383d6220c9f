//! Bound-ratio sweeps for the stochastic Strichartz estimates, the `L⁶`
//! resonant lower bound and the `X^{0,b}_4` embedding.
//!
//! Each sweep point `T` gets its own ensemble of `steps` uniform steps on
//! `[0, T]` drawn from the configured master seed, so every point is
//! reproducible in isolation.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{duhamel_trajectory, linear_flow, power_nonlinearity, solve_linear, solve_nls, Scheme};
use crate::moments::{
    estimate_linear_mixed_norm, per_path_time_norm, trapezoid_weights, MixedNormSpec, MomentEstimate,
};
use crate::paths::{sample_path, EnsembleSpec};
use crate::spectral::{fft_friendly_odd, lp_norm_of_samples, SpectralField, TorusGrid};
use crate::stats::{linear_fit, mean_se, pairwise_sum, LinearFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateId {
    HomogL4,
    InhomogL4,
    L6,
    XsbEmbed,
}

/// Initial data. Random data are drawn from a ChaCha20 stream keyed by
/// `data_seed`, independent of the Brownian streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataFamily {
    SingleMode {
        k: i64,
    },
    /// `a_k = (g_k + i h_k) / (√2 (1 + |k|))` for `|k| <= max_mode`; one
    /// datum per path when `per_path`, else a single fixed datum.
    Random {
        max_mode: usize,
        data_seed: u64,
        #[serde(default)]
        per_path: bool,
    },
    /// `N^{-1/2} Σ_{k=0}^{N} e^{ikx}`.
    Flat {
        n: i64,
    },
}

impl Default for DataFamily {
    fn default() -> Self {
        DataFamily::SingleMode { k: 1 }
    }
}

impl DataFamily {
    pub fn max_mode(&self) -> usize {
        match *self {
            DataFamily::SingleMode { k } => k.unsigned_abs().max(1) as usize,
            DataFamily::Random { max_mode, .. } => max_mode.max(1),
            DataFamily::Flat { n } => n.max(1) as usize,
        }
    }

    /// Datum for path `index` on a grid free of cubic aliasing.
    pub fn datum(&self, index: u64) -> Result<SpectralField> {
        let grid = TorusGrid::for_degree(self.max_mode(), 3)?;
        match *self {
            DataFamily::SingleMode { k } => SpectralField::single_mode(grid, k, Complex64::new(1.0, 0.0)),
            DataFamily::Flat { n } => flat_datum(n, grid),
            DataFamily::Random {
                max_mode,
                data_seed,
                per_path,
            } => {
                let mut rng = ChaCha20Rng::seed_from_u64(data_seed);
                rng.set_stream(if per_path { index } else { 0 });
                let k = max_mode as i64;
                let modes: Vec<_> = (-k..=k)
                    .map(|m| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        let s = std::f64::consts::FRAC_1_SQRT_2 / (1.0 + m.abs() as f64);
                        (m, Complex64::new(re * s, im * s))
                    })
                    .collect();
                SpectralField::from_modes(grid, &modes)
            }
        }
    }

    fn check_adapted(&self, master_seed: u64) -> Result<()> {
        if let DataFamily::Random { data_seed, .. } = *self {
            if data_seed == master_seed {
                return Err(Error::NotAdapted(
                    "data_seed equals the path master_seed, so the data are not independent of W".into(),
                ));
            }
        }
        Ok(())
    }
}

fn flat_datum(n: i64, grid: TorusGrid) -> Result<SpectralField> {
    if n < 1 {
        return Err(Error::param("N", "must be >= 1"));
    }
    let amp = Complex64::new((n as f64).powf(-0.5), 0.0);
    let modes: Vec<_> = (0..=n).map(|k| (k, amp)).collect();
    SpectralField::from_modes(grid, &modes)
}

/// Forcing for the inhomogeneous estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingFamily {
    #[default]
    Zero,
    /// `f(s, x) = e^{ikx}`.
    SingleMode { k: i64 },
    /// `f(t_j) = |u|²u (t_{j - delay})` along the cubic solution from the
    /// configured data; a negative delay reads future values.
    Cubic {
        #[serde(default)]
        delay: i64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEnsemble {
    pub num_paths: usize,
    pub master_seed: u64,
    /// Time steps per sweep point.
    pub steps: usize,
}

fn default_alpha() -> f64 {
    1.0
}
fn default_b() -> f64 {
    0.35
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_cap() -> f64 {
    10.0
}
fn default_p() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub estimate: EstimateId,
    #[serde(default)]
    pub family: DataFamily,
    #[serde(default)]
    pub forcing: ForcingFamily,
    pub t_sweep: Vec<f64>,
    #[serde(default)]
    pub n_sweep: Vec<i64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub ensemble: SweepEnsemble,
    #[serde(default = "default_cap")]
    pub ratio_cap: f64,
    /// Nonlinearity exponent of the trajectories in the embedding campaign;
    /// `1` switches the nonlinearity off.
    #[serde(default = "default_p")]
    pub p: f64,
    /// Spatial sample count for the `L⁶` campaign; must be `>= 6N + 1`.
    #[serde(default)]
    pub phys_points: Option<usize>,
}

impl CampaignConfig {
    /// Schema and range violations, empty when the config is runnable.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.t_sweep.is_empty() {
            out.push("t_sweep is empty".to_string());
        }
        for &t in &self.t_sweep {
            if !(t > 0.0 && t.is_finite()) {
                out.push(format!("t_sweep entry {t} must be > 0"));
            } else if t.log2().fract() != 0.0 {
                out.push(format!("t_sweep entry {t} is not a power of two"));
            }
        }
        if self.ensemble.num_paths == 0 {
            out.push("ensemble.num_paths must be >= 1".to_string());
        }
        if self.ensemble.steps == 0 {
            out.push("ensemble.steps must be >= 1".to_string());
        }
        let alpha_hi = match self.estimate {
            EstimateId::HomogL4 => 2.0,
            _ => 1.0,
        };
        if self.estimate != EstimateId::XsbEmbed && !(self.alpha > 0.5 && self.alpha <= alpha_hi) {
            out.push(format!(
                "alpha = {} outside the admissible range (1/2, {alpha_hi}]",
                self.alpha
            ));
        }
        if self.estimate == EstimateId::XsbEmbed && !(self.b > 5.0 / 16.0 && self.b < 0.5) {
            out.push(format!(
                "b = {} outside (5/16, 1/2); the embedding needs b > 5/16",
                self.b
            ));
        }
        if self.estimate == EstimateId::L6 {
            if self.n_sweep.is_empty() {
                out.push("n_sweep is empty".to_string());
            }
            if self.n_sweep.iter().any(|&n| n < 1) {
                out.push("n_sweep entries must be >= 1".to_string());
            }
            if !(self.epsilon > 0.0) {
                out.push(format!("epsilon = {} must be > 0", self.epsilon));
            }
        }
        if !(self.ratio_cap > 0.0) {
            out.push(format!("ratio_cap = {} must be > 0", self.ratio_cap));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            out.push(format!("p = {} must be >= 1", self.p));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.diagnostics().into_iter().next() {
            None => Ok(()),
            Some(msg) => Err(Error::param("config", msg)),
        }
    }

    fn ensemble_at(&self, horizon: f64) -> Result<EnsembleSpec> {
        EnsembleSpec::with_steps(
            self.ensemble.num_paths,
            self.ensemble.master_seed,
            horizon,
            self.ensemble.steps,
        )
    }
}

/// One sweep point of a bound-ratio campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t: f64,
    pub n: Option<i64>,
    pub lhs: f64,
    pub lhs_std_error: f64,
    /// The analytic `T`-dependent factor of the bound (1 when there is none).
    pub envelope: f64,
    /// The data or forcing norm multiplying the envelope.
    pub data_norm: f64,
    pub rhs_envelope: f64,
    pub ratio: f64,
    pub n_paths: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub estimate: EstimateId,
    pub points: Vec<SweepPoint>,
    pub max_ratio: f64,
    pub ratio_cap: f64,
    /// Slope of `log ratio` against `log T` (per `N` for the `L⁶` sweep, the
    /// smallest is reported).
    pub trend_slope: f64,
    /// Ratios rise strictly at every step as `T` decreases.
    pub blows_up_as_t_shrinks: bool,
    pub envelope_monotone: bool,
    pub pass: bool,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else {
        0.0
    }
}

/// Trend of one `T` sweep: (slope, strictly rising as `T` shrinks,
/// envelope nondecreasing in `T`).
fn trend(points: &[&SweepPoint]) -> (f64, bool, bool) {
    let mut pts: Vec<&SweepPoint> = points.to_vec();
    pts.sort_by(|a, b| a.t.total_cmp(&b.t));
    let envelope_monotone = pts.windows(2).all(|w| w[0].envelope <= w[1].envelope);
    let usable: Vec<&&SweepPoint> = pts.iter().filter(|p| p.ratio > 0.0).collect();
    let x: Vec<f64> = usable.iter().map(|p| p.t.ln()).collect();
    let y: Vec<f64> = usable.iter().map(|p| p.ratio.ln()).collect();
    let slope = linear_fit(&x, &y).map_or(0.0, |f| f.slope);
    let rising = pts.len() >= 3 && usable.len() == pts.len() && pts.windows(2).all(|w| w[0].ratio > w[1].ratio);
    (slope, rising && slope < 0.0, envelope_monotone)
}

fn assemble(estimate: EstimateId, points: Vec<SweepPoint>, cap: f64) -> BoundReport {
    let max_ratio = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    let mut groups: Vec<Option<i64>> = points.iter().map(|p| p.n).collect();
    groups.dedup();
    let mut slope = f64::INFINITY;
    let mut blowup = false;
    let mut monotone = true;
    for g in groups {
        let members: Vec<&SweepPoint> = points.iter().filter(|p| p.n == g).collect();
        let (s, b, m) = trend(&members);
        slope = slope.min(s);
        blowup |= b;
        monotone &= m;
    }
    if !slope.is_finite() {
        slope = 0.0;
    }
    let finite = points.iter().all(|p| p.ratio.is_finite() && p.ratio >= 0.0);
    BoundReport {
        estimate,
        points,
        max_ratio,
        ratio_cap: cap,
        trend_slope: slope,
        blows_up_as_t_shrinks: blowup,
        envelope_monotone: monotone,
        pass: finite && max_ratio <= cap && !blowup && monotone,
    }
}

fn fourth_root_estimate(per_path_fourth: &[f64]) -> (f64, f64) {
    let norms: Vec<f64> = per_path_fourth.iter().map(|v| v.max(0.0).powf(0.25)).collect();
    let est = MomentEstimate::from_per_path(&norms, 4.0);
    (est.value, est.std_error)
}

fn require(cfg: &CampaignConfig, id: EstimateId) -> Result<()> {
    if cfg.estimate != id {
        return Err(Error::param(
            "estimate",
            format!("config is for {:?}, not {id:?}", cfg.estimate),
        ));
    }
    cfg.validate()?;
    cfg.family.check_adapted(cfg.ensemble.master_seed)
}

/// `‖e^{-iW_tΔ}u_0‖_{L⁴_{ω,T,x}}` against `(T + T^{1-α/2})^{1/4} ‖u_0‖_{L⁴_ω L²_x}`.
pub fn verify_homog_l4(cfg: &CampaignConfig) -> Result<BoundReport> {
    require(cfg, EstimateId::HomogL4)?;
    let mut points = Vec::new();
    for &t in &cfg.t_sweep {
        let ens = cfg.ensemble_at(t)?;
        let steps = ens.steps()?;
        let per_path = (0..ens.num_paths as u64)
            .into_par_iter()
            .map(|i| {
                let u0 = cfg.family.datum(i)?;
                let path = sample_path(&ens, i)?;
                let tr = solve_linear(&u0, &path);
                let l4 = per_path_time_norm(&tr.fields, path.dt(), steps, 4.0, 4.0)?;
                Ok((l4.powi(4), u0.l2_norm().powi(4)))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let (lhs, lhs_se) = fourth_root_estimate(&per_path.iter().map(|v| v.0).collect::<Vec<_>>());
        let (data_norm, _) = fourth_root_estimate(&per_path.iter().map(|v| v.1).collect::<Vec<_>>());
        let envelope = (t + t.powf(1.0 - cfg.alpha / 2.0)).powf(0.25);
        let rhs = envelope * data_norm;
        points.push(SweepPoint {
            t,
            n: None,
            lhs,
            lhs_std_error: lhs_se,
            envelope,
            data_norm,
            rhs_envelope: rhs,
            ratio: ratio(lhs, rhs),
            n_paths: ens.num_paths,
            master_seed: ens.master_seed,
        });
    }
    Ok(assemble(EstimateId::HomogL4, points, cfg.ratio_cap))
}

/// `|u|²u` of a field, with every mode of the product kept.
pub fn cubic_forcing(u: &SpectralField) -> SpectralField {
    let k = u.grid().max_mode();
    let grid = TorusGrid::new(3 * k, fft_friendly_odd(6 * k + 1)).expect("valid grid");
    power_nonlinearity(&u.resample(grid), 3.0)
}

fn forcing_fields(cfg: &CampaignConfig, index: u64, path: &crate::paths::BrownianPath) -> Result<Vec<SpectralField>> {
    let knots = path.steps() + 1;
    match cfg.forcing {
        ForcingFamily::Zero => {
            let grid = TorusGrid::for_degree(1, 3)?;
            Ok(vec![SpectralField::zeros(grid); knots])
        }
        ForcingFamily::SingleMode { k } => {
            let grid = TorusGrid::for_degree(k.unsigned_abs().max(1) as usize, 3)?;
            let f = SpectralField::single_mode(grid, k, Complex64::new(1.0, 0.0))?;
            Ok(vec![f; knots])
        }
        ForcingFamily::Cubic { delay } => {
            if delay < 0 {
                return Err(Error::NotAdapted(format!(
                    "forcing at t_j reads the solution at t_(j+{}), a future value",
                    -delay
                )));
            }
            let u0 = cfg.family.datum(index)?;
            let tr = solve_nls(&u0, path, 3.0, Scheme::Strang)?;
            let cubic: Vec<SpectralField> = tr.fields.iter().map(cubic_forcing).collect();
            let zero = SpectralField::zeros(cubic[0].grid());
            let d = delay as usize;
            Ok((0..knots)
                .map(|j| if j >= d { cubic[j - d].clone() } else { zero.clone() })
                .collect())
        }
    }
}

/// `‖∫_0^t e^{-i(W_t - W_s)Δ} f(s) ds‖_{L⁴_{ω,T,x}}` against
/// `(T² + T^{2-α})^{1/4} ‖f‖_{L⁴_ω L^{4/3}_{T,x}}`.
pub fn verify_inhomog_l4(cfg: &CampaignConfig) -> Result<BoundReport> {
    require(cfg, EstimateId::InhomogL4)?;
    if let ForcingFamily::Cubic { delay } = cfg.forcing {
        if delay < 0 {
            return Err(Error::NotAdapted(format!("cubic forcing with negative delay {delay}")));
        }
    }
    let mut points = Vec::new();
    for &t in &cfg.t_sweep {
        let ens = cfg.ensemble_at(t)?;
        let steps = ens.steps()?;
        let per_path = (0..ens.num_paths as u64)
            .into_par_iter()
            .map(|i| {
                let path = sample_path(&ens, i)?;
                let f = forcing_fields(cfg, i, &path)?;
                let d = duhamel_trajectory(&f, &path)?;
                let lhs = per_path_time_norm(&d, path.dt(), steps, 4.0, 4.0)?;
                let rhs = per_path_time_norm(&f, path.dt(), steps, 4.0 / 3.0, 4.0 / 3.0)?;
                Ok((lhs.powi(4), rhs.powi(4)))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let (lhs, lhs_se) = fourth_root_estimate(&per_path.iter().map(|v| v.0).collect::<Vec<_>>());
        let (data_norm, _) = fourth_root_estimate(&per_path.iter().map(|v| v.1).collect::<Vec<_>>());
        let envelope = (t * t + t.powf(2.0 - cfg.alpha)).powf(0.25);
        let rhs = envelope * data_norm;
        points.push(SweepPoint {
            t,
            n: None,
            lhs,
            lhs_std_error: lhs_se,
            envelope,
            data_norm,
            rhs_envelope: rhs,
            ratio: ratio(lhs, rhs),
            n_paths: ens.num_paths,
            master_seed: ens.master_seed,
        });
    }
    Ok(assemble(EstimateId::InhomogL4, points, cfg.ratio_cap))
}

/// Deterministic resonant sum `Σ_{k,j} |Σ_{S_{k,j}} a_{k_1} a_{k_2} a_{k-k_1-k_2}|²`
/// for `u_0 = N^{-1/2} Σ_{k=0}^N e^{ikx}`, computed two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L6LowerRow {
    pub n: i64,
    /// Grouping the triples `(k_1, k_2, k_3)` by `(k, j)`.
    pub by_grouping: f64,
    /// `(2π)^{-2} ∫_0^{2π} ∫ |e^{-itΔ}u_0|⁶ dx dt` by exact quadrature.
    pub by_time_plancherel: f64,
}

/// `Σ_{k,j} |c_{k,j}|²` with `c_{k,j} = Σ_{S_{k,j}} a_{k_1} a_{k_2} a_{k_3}`,
/// all modes in `[0, N]`.
pub fn l6_resonant_sum(n: i64) -> Result<f64> {
    if n < 1 {
        return Err(Error::param("N", "must be >= 1"));
    }
    crate::resonance::s_kj_count(0, 0, n, false)?;
    let a3 = (n as f64).powf(-1.5);
    let sums: Vec<f64> = (0..=3 * n)
        .into_par_iter()
        .map(|k| {
            let mut c: HashMap<i64, f64> = HashMap::new();
            for k1 in 0..=n {
                for k2 in 0..=n {
                    let k3 = k - k1 - k2;
                    if (0..=n).contains(&k3) {
                        *c.entry(k1 * k1 + k2 * k2 + k3 * k3).or_default() += a3;
                    }
                }
            }
            let mut v: Vec<(i64, f64)> = c.into_iter().collect();
            v.sort_by_key(|e| e.0);
            pairwise_sum(&v.iter().map(|e| e.1 * e.1).collect::<Vec<_>>())
        })
        .collect();
    Ok(pairwise_sum(&sums))
}

/// The same sum from `∫_0^{2π} ∫ |e^{-itΔ}u_0|⁶`: rectangle rules with
/// `3N² + 1` times and `M >= 6N + 1` points are exact for this
/// trigonometric polynomial, and Plancherel in `t` over a full period
/// leaves only the `j`-diagonal.
pub fn l6_resonant_sum_by_time(n: i64) -> Result<f64> {
    if n < 1 {
        return Err(Error::param("N", "must be >= 1"));
    }
    let grid = TorusGrid::new(n as usize, fft_friendly_odd(6 * n as usize + 1))?;
    let u0 = flat_datum(n, grid)?;
    let l = 3 * (n * n) as usize + 1;
    let h = 2.0 * PI / l as f64;
    let vals: Vec<f64> = (0..l)
        .into_par_iter()
        .map(|m| lp_norm_of_samples(&linear_flow(&u0, m as f64 * h).to_physical(), 6.0).powi(6))
        .collect();
    Ok(h * pairwise_sum(&vals) / (4.0 * PI * PI))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L6Report {
    pub bound: BoundReport,
    pub lower: Vec<L6LowerRow>,
    /// Resonant sum against `log N`.
    pub lower_fit: Option<LinearFit>,
}

/// Minimum spatial sample count for sextic quadrature at bandwidth `N`.
pub fn l6_min_points(n: i64) -> usize {
    6 * n as usize + 1
}

pub fn verify_l6(cfg: &CampaignConfig) -> Result<L6Report> {
    require(cfg, EstimateId::L6)?;
    for &n in &cfg.n_sweep {
        if let Some(m) = cfg.phys_points {
            if m < l6_min_points(n) {
                return Err(Error::Aliasing(format!(
                    "M = {m} < 6N + 1 = {} for the sextic integrand",
                    l6_min_points(n)
                )));
            }
        }
    }
    let mut points = Vec::new();
    for &n in &cfg.n_sweep {
        let m = cfg.phys_points.unwrap_or_else(|| fft_friendly_odd(l6_min_points(n)));
        let u0 = flat_datum(n, TorusGrid::new(n as usize, m)?)?;
        for &t in &cfg.t_sweep {
            let ens = cfg.ensemble_at(t)?;
            let est = estimate_linear_mixed_norm(&u0, &ens, &MixedNormSpec::new(6.0, 6.0, 6.0, t)?)?;
            let envelope = (t + t.powf(1.0 - cfg.alpha)).powf(1.0 / 6.0) * (n as f64).powf(cfg.epsilon);
            let data_norm = u0.l2_norm();
            let rhs = envelope * data_norm;
            points.push(SweepPoint {
                t,
                n: Some(n),
                lhs: est.value,
                lhs_std_error: est.std_error,
                envelope,
                data_norm,
                rhs_envelope: rhs,
                ratio: ratio(est.value, rhs),
                n_paths: ens.num_paths,
                master_seed: ens.master_seed,
            });
        }
    }
    let bound = assemble(EstimateId::L6, points, cfg.ratio_cap);
    let lower = cfg
        .n_sweep
        .iter()
        .map(|&n| {
            Ok(L6LowerRow {
                n,
                by_grouping: l6_resonant_sum(n)?,
                by_time_plancherel: l6_resonant_sum_by_time(n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = lower.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = lower.iter().map(|r| r.by_grouping).collect();
    Ok(L6Report {
        bound,
        lower_fit: linear_fit(&x, &y),
        lower,
    })
}

/// Discrete `‖ψ‖_{H^b_t(0,T; L²_x)}`:
/// `(Σ_j w_j ‖ψ_j‖² + Σ_{j≠j'} w_j w_{j'} ‖ψ_j - ψ_{j'}‖² / |t_j - t_{j'}|^{1+2b})^{1/2}`
/// with trapezoid weights `w_j` on knots spaced `dt`.
pub fn xsb_norm(psi: &[SpectralField], dt: f64, b: f64) -> Result<f64> {
    if !(b > 0.0 && b < 0.5) {
        return Err(Error::param("b", format!("{b} outside (0, 1/2)")));
    }
    if psi.len() < 2 {
        return Err(Error::param("psi", "need at least two knots"));
    }
    let grid = psi[0].grid();
    if psi.iter().any(|f| f.grid() != grid) {
        return Err(Error::MismatchedEnsemble("twisted fields on different grids".into()));
    }
    let w = trapezoid_weights(psi.len() - 1, dt);
    let mass: Vec<f64> = psi.iter().zip(&w).map(|(f, wj)| wj * f.l2_norm_squared()).collect();
    let expo = 1.0 + 2.0 * b;
    let rows: Vec<f64> = (0..psi.len())
        .into_par_iter()
        .map(|j| {
            let terms: Vec<f64> = (j + 1..psi.len())
                .map(|i| {
                    let d = psi[j].l2_distance(&psi[i]).expect("same grid");
                    w[j] * w[i] * d * d / (((i - j) as f64) * dt).powf(expo)
                })
                .collect();
            2.0 * pairwise_sum(&terms)
        })
        .collect();
    Ok((pairwise_sum(&mass) + pairwise_sum(&rows)).sqrt())
}

/// `‖u‖_{L⁴_{ω,T,x}} / ‖u‖_{X^{0,b}_4(T)}` over solution ensembles.
pub fn verify_xsb_embedding(cfg: &CampaignConfig) -> Result<BoundReport> {
    require(cfg, EstimateId::XsbEmbed)?;
    let mut points = Vec::new();
    for &t in &cfg.t_sweep {
        let ens = cfg.ensemble_at(t)?;
        let steps = ens.steps()?;
        let per_path = (0..ens.num_paths as u64)
            .into_par_iter()
            .map(|i| {
                let u0 = cfg.family.datum(i)?;
                let path = sample_path(&ens, i)?;
                let tr = if cfg.p == 1.0 {
                    solve_linear(&u0, &path)
                } else {
                    solve_nls(&u0, &path, cfg.p, Scheme::Strang)?
                };
                let l4 = per_path_time_norm(&tr.fields, path.dt(), steps, 4.0, 4.0)?;
                let x = xsb_norm(&tr.twisted(), path.dt(), cfg.b)?;
                Ok((l4.powi(4), x.powi(4)))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let (lhs, lhs_se) = fourth_root_estimate(&per_path.iter().map(|v| v.0).collect::<Vec<_>>());
        let (rhs, _) = fourth_root_estimate(&per_path.iter().map(|v| v.1).collect::<Vec<_>>());
        points.push(SweepPoint {
            t,
            n: None,
            lhs,
            lhs_std_error: lhs_se,
            envelope: 1.0,
            data_norm: rhs,
            rhs_envelope: rhs,
            ratio: ratio(lhs, rhs),
            n_paths: ens.num_paths,
            master_seed: ens.master_seed,
        });
    }
    Ok(assemble(EstimateId::XsbEmbed, points, cfg.ratio_cap))
}

/// Mean and standard error of per-path values, in path order.
pub fn summarize(values: &[f64]) -> (f64, f64) {
    mean_se(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::exact_fourth_moment;

    fn config(estimate: EstimateId) -> CampaignConfig {
        CampaignConfig {
            estimate,
            family: DataFamily::SingleMode { k: 1 },
            forcing: ForcingFamily::Zero,
            t_sweep: vec![0.125, 0.25, 0.5, 1.0],
            n_sweep: vec![],
            alpha: 1.0,
            b: 0.35,
            epsilon: 0.1,
            ensemble: SweepEnsemble {
                num_paths: 8,
                master_seed: 3,
                steps: 16,
            },
            ratio_cap: 10.0,
            p: 3.0,
            phys_points: None,
        }
    }

    #[test]
    fn single_mode_homog_is_closed_form() {
        let r = verify_homog_l4(&config(EstimateId::HomogL4)).unwrap();
        for p in &r.points {
            let want = (2.0 * PI * p.t).powf(0.25);
            assert!((p.lhs - want).abs() < 1e-12 * want);
            assert!(p.lhs_std_error < 1e-14 * want);
            let expect = (2.0 * PI).powf(-0.25) * (p.t / (p.t + p.t.sqrt())).powf(0.25);
            assert!((p.ratio - expect).abs() < 1e-12);
            assert!(p.ratio <= 1.0);
        }
        assert!(r.envelope_monotone && r.pass);
    }

    #[test]
    fn homog_oracle_for_fixed_random_datum() {
        let mut cfg = config(EstimateId::HomogL4);
        cfg.family = DataFamily::Random {
            max_mode: 3,
            data_seed: 99,
            per_path: false,
        };
        cfg.t_sweep = vec![0.5];
        cfg.ensemble.num_paths = 4000;
        cfg.ensemble.steps = 64;
        let r = verify_homog_l4(&cfg).unwrap();
        let u0 = cfg.family.datum(0).unwrap();
        let exact = crate::moments::exact_fourth_moment_trapezoid(&u0, 0.5, 64);
        let p = r.points[0];
        let z = (p.lhs.powi(4) - exact) / (4.0 * p.lhs.powi(3) * p.lhs_std_error);
        assert!(z.abs() < 4.0, "z = {z}");
        assert!((exact / exact_fourth_moment(&u0, 0.5) - 1.0).abs() < 0.05);
    }

    #[test]
    fn adaptedness_rejections() {
        let mut cfg = config(EstimateId::HomogL4);
        cfg.family = DataFamily::Random {
            max_mode: 3,
            data_seed: 3,
            per_path: true,
        };
        assert!(matches!(verify_homog_l4(&cfg), Err(Error::NotAdapted(_))));
        let mut inh = config(EstimateId::InhomogL4);
        inh.forcing = ForcingFamily::Cubic { delay: -1 };
        assert!(matches!(verify_inhomog_l4(&inh), Err(Error::NotAdapted(_))));
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let r = verify_inhomog_l4(&config(EstimateId::InhomogL4)).unwrap();
        assert!(r.points.iter().all(|p| p.lhs == 0.0 && p.ratio == 0.0));
    }

    #[test]
    fn single_mode_forcing_with_frozen_paths() {
        // W ≡ 0 would give |D(t)| = t; with Brownian paths |D(t)| <= t
        let mut cfg = config(EstimateId::InhomogL4);
        cfg.forcing = ForcingFamily::SingleMode { k: 1 };
        let r = verify_inhomog_l4(&cfg).unwrap();
        for p in &r.points {
            let upper = (2.0 * PI * p.t.powi(5) / 5.0).powf(0.25);
            assert!(p.lhs <= upper * (1.0 + 1e-9) && p.lhs > 0.0);
            assert!(p.ratio.is_finite() && p.ratio > 0.0);
        }
    }

    #[test]
    fn xsb_norm_examples() {
        let g = TorusGrid::new(2, 7).unwrap();
        let f = SpectralField::single_mode(g, 1, Complex64::new(0.5, 0.2)).unwrap();
        let dt = 0.05;
        let flat = vec![f.clone(); 11];
        let n = xsb_norm(&flat, dt, 0.35).unwrap();
        assert!((n - (0.5f64).sqrt() * f.l2_norm()).abs() < 1e-12);
        let rotating = |c: f64| -> Vec<SpectralField> {
            (0..11)
                .map(|j| f.scale(Complex64::from_polar(1.0, c * j as f64 * dt)))
                .collect()
        };
        let semi = |c: f64, b: f64| xsb_norm(&rotating(c), dt, b).unwrap().powi(2) - n * n;
        assert!(semi(2.0, 0.35) > semi(1.0, 0.35));
        assert!(semi(1.0, 0.35) > 0.0);
        let mut prev = f64::INFINITY;
        for b in [0.45, 0.35, 0.25, 0.1, 0.01] {
            let s = semi(3.0, b);
            assert!(s < prev);
            prev = s;
        }
        assert!(xsb_norm(&flat, dt, 0.5).is_err());
        assert!(xsb_norm(&flat, dt, 0.0).is_err());
    }

    #[test]
    fn linear_xsb_ratio_is_closed_form() {
        let mut cfg = config(EstimateId::XsbEmbed);
        cfg.p = 1.0;
        let r = verify_xsb_embedding(&cfg).unwrap();
        for p in &r.points {
            let want = (2.0 * PI * p.t).powf(0.25) / (p.t.sqrt() * (2.0 * PI).sqrt());
            assert!((p.ratio - want).abs() < 1e-10 * want, "{} {}", p.ratio, want);
        }
    }

    #[test]
    fn xsb_ratio_decreases_with_b() {
        let mut cfg = config(EstimateId::XsbEmbed);
        cfg.family = DataFamily::Random {
            max_mode: 4,
            data_seed: 11,
            per_path: true,
        };
        cfg.t_sweep = vec![0.5];
        let mut prev = f64::INFINITY;
        for b in [0.32, 0.36, 0.4, 0.45, 0.49] {
            cfg.b = b;
            let r = verify_xsb_embedding(&cfg).unwrap();
            assert!(r.max_ratio <= prev);
            prev = r.max_ratio;
        }
    }

    #[test]
    fn single_mode_sixth_power_is_linear_in_t() {
        let g = TorusGrid::for_degree(1, 6).unwrap();
        let u0 = SpectralField::single_mode(g, 1, Complex64::new(1.0, 0.0)).unwrap();
        for t in [0.25, 1.0] {
            let ens = EnsembleSpec::with_steps(6, 1, t, 8).unwrap();
            let est = estimate_linear_mixed_norm(&u0, &ens, &MixedNormSpec::new(6.0, 6.0, 6.0, t).unwrap()).unwrap();
            assert!((est.value.powi(6) - 2.0 * PI * t).abs() < 1e-10);
        }
    }

    #[test]
    fn l6_sums_agree() {
        for n in [1, 2, 5, 8, 13] {
            let a = l6_resonant_sum(n).unwrap();
            let b = l6_resonant_sum_by_time(n).unwrap();
            assert!((a - b).abs() < 1e-10 * a, "N={n}: {a} {b}");
        }
        // N = 1 has a_0 = a_1 = 1 and every triple sits alone in its class
        // except permutations: Σ over (k, j) of (#ordered triples)²
        assert!((l6_resonant_sum(1).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn l6_grouping_matches_s_kj_members() {
        let n = 6;
        let a3 = (n as f64).powf(-1.5);
        let mut total = 0.0;
        for k in 0..=3 * n {
            for j in 0..=3 * n * n {
                let s = crate::resonance::s_kj_count(k, j, n, true).unwrap();
                let c = s
                    .members
                    .unwrap()
                    .iter()
                    .filter(|(k1, k2)| *k1 >= 0 && *k2 >= 0 && k - k1 - k2 >= 0)
                    .count() as f64
                    * a3;
                total += c * c;
            }
        }
        assert!((total - l6_resonant_sum(n).unwrap()).abs() < 1e-10 * total);
    }

    #[test]
    fn l6_alias_guard_and_single_mode() {
        let mut cfg = config(EstimateId::L6);
        cfg.n_sweep = vec![4];
        cfg.phys_points = Some(20);
        assert!(matches!(verify_l6(&cfg), Err(Error::Aliasing(_))));
        cfg.phys_points = None;
        cfg.n_sweep = vec![1];
        let r = verify_l6(&cfg).unwrap();
        assert_eq!(r.lower.len(), 1);
    }

    #[test]
    fn diagnostics_cite_ranges() {
        let mut cfg = config(EstimateId::HomogL4);
        assert!(cfg.diagnostics().is_empty());
        cfg.alpha = 0.4;
        assert!(cfg.diagnostics()[0].contains("(1/2, 2]"));
        let mut x = config(EstimateId::XsbEmbed);
        x.b = 0.3;
        assert!(x.diagnostics()[0].contains("b > 5/16"));
        cfg.alpha = 1.0;
        cfg.t_sweep = vec![0.3];
        assert!(!cfg.diagnostics().is_empty());
    }
}
