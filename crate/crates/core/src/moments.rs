//! Ensemble estimates of mixed norms `L^ρ_ω L^q_T L^r_x` and the closed-form
//! fourth moment of the free evolution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{linear_flow, Trajectory};
use crate::paths::{sample_path, step_count, EnsembleSpec};
use crate::spectral::{check_exponent, SpectralField, TorusGrid};
use crate::stats::{mean_se, pairwise_sum};

/// Exponents and horizon of `L^ρ_ω L^q_T L^r_x` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub rho: f64,
    pub q: f64,
    pub r: f64,
    pub horizon: f64,
}

impl MixedNormSpec {
    pub fn new(rho: f64, q: f64, r: f64, horizon: f64) -> Result<Self> {
        let spec = Self { rho, q, r, horizon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho", self.rho), ("q", self.q), ("r", self.r)] {
            if !(v >= 1.0 && v.is_finite()) {
                return Err(Error::param(name, format!("exponent {v} must lie in [1, ∞)")));
            }
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("horizon", format!("{} must be >= 0", self.horizon)));
        }
        Ok(())
    }
}

/// Monte Carlo estimate of a mixed norm.
///
/// `raw_moment` is the mean of the per-path `ρ`-th powers and
/// `raw_std_error` its standard error; `value = raw_moment^{1/ρ}` with the
/// delta-method error `std_error`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub raw_moment: f64,
    pub raw_std_error: f64,
}

impl MomentEstimate {
    /// Estimate from per-path norms, in path order.
    pub fn from_per_path(norms: &[f64], rho: f64) -> Self {
        let powers: Vec<f64> = norms.iter().map(|x| x.powf(rho)).collect();
        let (raw, raw_se) = mean_se(&powers);
        let value = raw.powf(1.0 / rho);
        let std_error = if raw > 0.0 { raw_se * value / (rho * raw) } else { 0.0 };
        Self {
            value,
            std_error,
            n_paths: norms.len(),
            raw_moment: raw,
            raw_std_error: raw_se,
        }
    }
}

/// Trapezoid weights on `steps + 1` knots spaced `dt`.
pub fn trapezoid_weights(steps: usize, dt: f64) -> Vec<f64> {
    (0..=steps)
        .map(|j| if j == 0 || j == steps { 0.5 * dt } else { dt })
        .collect()
}

/// A grid on which the rectangle rule integrates `|u|^r` exactly when `r`
/// is an even integer (`M >= rK + 1` with `K` the field's bandwidth).
pub fn quadrature_grid(field: &SpectralField, r: f64) -> TorusGrid {
    let grid = field.grid();
    let even = r.fract() == 0.0 && (r as i64) % 2 == 0;
    if !even {
        return grid;
    }
    let k = field.bandwidth().max(1);
    let need = r as usize * k + 1;
    if grid.phys_points() >= need {
        grid
    } else {
        TorusGrid::for_degree(k, r as usize - 1).expect("valid grid")
    }
}

/// `‖u‖_{L^r_x}` with the quadrature grid enlarged as in [`quadrature_grid`].
pub fn spatial_norm(field: &SpectralField, r: f64) -> Result<f64> {
    check_exponent(r)?;
    let g = quadrature_grid(field, r);
    if g == field.grid() {
        field.lp_norm(r)
    } else {
        field.resample(g).lp_norm(r)
    }
}

/// `(Σ_j w_j ‖u_j‖^q_{L^r_x})^{1/q}` over the first `steps + 1` fields of a
/// time-ordered stream, visiting each field once.
pub fn per_path_time_norm<'a, I>(fields: I, dt: f64, steps: usize, q: f64, r: f64) -> Result<f64>
where
    I: IntoIterator<Item = &'a SpectralField>,
{
    check_exponent(q)?;
    let mut terms = Vec::with_capacity(steps + 1);
    for (j, f) in fields.into_iter().take(steps + 1).enumerate() {
        let w = if j == 0 || j == steps { 0.5 * dt } else { dt };
        terms.push(w * spatial_norm(f, r)?.powf(q));
    }
    if terms.len() != steps + 1 {
        return Err(Error::IndexOutOfRange {
            index: steps,
            len: terms.len(),
        });
    }
    if steps == 0 {
        return Ok(0.0);
    }
    Ok(pairwise_sum(&terms).powf(1.0 / q))
}

/// Number of steps of `dt` making up `horizon`, allowing `horizon = 0`.
fn steps_to(horizon: f64, dt: f64, available: usize) -> Result<usize> {
    if horizon == 0.0 {
        return Ok(0);
    }
    let n = step_count(horizon, dt)?;
    if n > available {
        return Err(Error::param(
            "horizon",
            format!("{horizon} exceeds the trajectory horizon {}", available as f64 * dt),
        ));
    }
    Ok(n)
}

/// Monte Carlo estimate of `‖u‖_{L^ρ_ω L^q_T L^r_x}` over an ensemble of
/// trajectories sharing grid and time step.
pub fn estimate_mixed_norm(trajectories: &[Trajectory], spec: &MixedNormSpec) -> Result<MomentEstimate> {
    spec.validate()?;
    let first = trajectories
        .first()
        .ok_or_else(|| Error::MismatchedEnsemble("empty ensemble".into()))?;
    let dt = first.path.dt();
    let grid = first.grid();
    for tr in trajectories {
        if tr.grid() != grid {
            return Err(Error::MismatchedEnsemble("trajectories on different grids".into()));
        }
        if (tr.path.dt() - dt).abs() > 1e-15 * dt || tr.path.steps() != first.path.steps() {
            return Err(Error::MismatchedEnsemble(
                "trajectories with different time grids".into(),
            ));
        }
    }
    let steps = steps_to(spec.horizon, dt, first.path.steps())?;
    let norms = trajectories
        .par_iter()
        .map(|tr| per_path_time_norm(&tr.fields, dt, steps, spec.q, spec.r))
        .collect::<Result<Vec<f64>>>()?;
    Ok(MomentEstimate::from_per_path(&norms, spec.rho))
}

/// Mixed-norm estimate of the free evolution `e^{-iW_tΔ}u_0` without storing
/// trajectories; path `i` is `sample_path(ensemble, i)`.
pub fn estimate_linear_mixed_norm(
    u0: &SpectralField,
    ensemble: &EnsembleSpec,
    spec: &MixedNormSpec,
) -> Result<MomentEstimate> {
    spec.validate()?;
    ensemble.validate()?;
    let steps = steps_to(spec.horizon, ensemble.dt, ensemble.steps()?)?;
    let u0 = u0.resample(quadrature_grid(u0, spec.r));
    let norms = (0..ensemble.num_paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(ensemble, i)?;
            let fields = path.values()[..=steps].iter().map(|&w| linear_flow(&u0, w));
            let owned: Vec<SpectralField> = fields.collect();
            per_path_time_norm(&owned, ensemble.dt, steps, spec.q, spec.r)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MomentEstimate::from_per_path(&norms, spec.rho))
}

/// Time weight of a quadruple with phase `2nℓ`: `∫_0^T e^{-2n²ℓ²t} dt`.
fn continuous_weight(nl: i64, horizon: f64) -> f64 {
    if nl == 0 {
        horizon
    } else {
        let c = 2.0 * (nl as f64).powi(2);
        -(-c * horizon).exp_m1() / c
    }
}

/// Trapezoid rule for the same integral on `steps` steps.
fn trapezoid_weight(nl: i64, horizon: f64, steps: usize) -> f64 {
    if steps == 0 {
        return 0.0;
    }
    if nl == 0 {
        return horizon;
    }
    let dt = horizon / steps as f64;
    let c = 2.0 * (nl as f64).powi(2);
    let q = (-c * dt).exp();
    let total = if q < 1e-300 {
        1.0
    } else {
        -(-c * dt * (steps + 1) as f64).exp_m1() / -(-c * dt).exp_m1()
    };
    dt * (total - 0.5 * (1.0 + (-c * horizon).exp()))
}

fn fourth_moment_with(u0: &SpectralField, weight: impl Fn(i64) -> f64 + Sync) -> f64 {
    let kmax = u0.grid().max_mode() as i64;
    let a = |k: i64| u0.coeff(k);
    let terms: Vec<f64> = (-kmax..=kmax)
        .into_par_iter()
        .map(|k| {
            let ak = a(k);
            if ak == Complex64::default() {
                return 0.0;
            }
            let mut s = Complex64::default();
            for n in (k - kmax)..=(k + kmax) {
                let b = a(k - n).conj();
                if b == Complex64::default() {
                    continue;
                }
                for l in (k - kmax)..=(k + kmax) {
                    let d = a(k - l).conj();
                    let c = a(k - n - l);
                    if d == Complex64::default() || c == Complex64::default() {
                        continue;
                    }
                    s += ak * b * c * d * weight(n * l);
                }
            }
            s.re
        })
        .collect();
    2.0 * PI * pairwise_sum(&terms)
}

/// `E ‖e^{-iW_tΔ}u_0‖⁴_{L⁴_{T,x}}` for deterministic `u_0`:
/// `2π Σ_{k,n,ℓ} a_k ā_{k-n} a_{k-n-ℓ} ā_{k-ℓ} ∫_0^T e^{-2n²ℓ²t} dt`.
pub fn exact_fourth_moment(u0: &SpectralField, horizon: f64) -> f64 {
    fourth_moment_with(u0, |nl| continuous_weight(nl, horizon))
}

/// The same sum with the time integral replaced by the trapezoid rule on
/// `steps` steps, which is what a trapezoid-in-time Monte Carlo estimate
/// converges to.
pub fn exact_fourth_moment_trapezoid(u0: &SpectralField, horizon: f64, steps: usize) -> f64 {
    fourth_moment_with(u0, |nl| trapezoid_weight(nl, horizon, steps))
}

/// The resonant part `2πT Σ_{nℓ=0} a_k ā_{k-n} a_{k-n-ℓ} ā_{k-ℓ}`, by direct
/// quadruple enumeration over `k_1 - k_2 + k_3 - k_4 = 0`.
pub fn resonant_fourth_coefficient(u0: &SpectralField) -> f64 {
    let modes: Vec<(i64, Complex64)> = u0.modes().filter(|(_, a)| *a != Complex64::default()).collect();
    let mut s = Complex64::default();
    for &(k1, a1) in &modes {
        for &(k2, a2) in &modes {
            for &(k3, a3) in &modes {
                let k4 = k1 - k2 + k3;
                let a4 = u0.coeff(k4);
                let phase = k1 * k1 - k2 * k2 + k3 * k3 - k4 * k4;
                if phase == 0 && a4 != Complex64::default() {
                    s += a1 * a2.conj() * a3 * a4.conj();
                }
            }
        }
    }
    2.0 * PI * s.re
}

/// Monte Carlo fourth moment against the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentCheck {
    pub mc: MomentEstimate,
    pub exact: f64,
    pub exact_trapezoid: f64,
    /// `(mc.raw_moment - exact_trapezoid) / mc.raw_std_error`.
    pub z_score: f64,
    /// The same deviation measured against the continuous-time value.
    pub z_score_continuous: f64,
}

fn z(dev: f64, se: f64, scale: f64) -> f64 {
    if se > 1e-12 * scale.abs() {
        dev / se
    } else if dev.abs() <= 1e-10 * scale.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY.copysign(dev)
    }
}

/// Estimates `E ‖e^{-iW_tΔ}u_0‖⁴_{L⁴_{T,x}}` with `n_paths` paths of
/// `steps` steps and compares it with [`exact_fourth_moment`].
pub fn mc_vs_exact_fourth(
    u0: &SpectralField,
    horizon: f64,
    n_paths: usize,
    steps: usize,
    master_seed: u64,
) -> Result<FourthMomentCheck> {
    if u0.bandwidth() > 64 {
        return Err(Error::param("u0", "bandwidth above 64"));
    }
    let exact = exact_fourth_moment(u0, horizon);
    if horizon == 0.0 {
        let mc = MomentEstimate::from_per_path(&vec![0.0; n_paths.max(1)], 4.0);
        return Ok(FourthMomentCheck {
            mc,
            exact,
            exact_trapezoid: 0.0,
            z_score: 0.0,
            z_score_continuous: 0.0,
        });
    }
    let ensemble = EnsembleSpec::with_steps(n_paths, master_seed, horizon, steps)?;
    let spec = MixedNormSpec::new(4.0, 4.0, 4.0, horizon)?;
    let mc = estimate_linear_mixed_norm(u0, &ensemble, &spec)?;
    let exact_trapezoid = exact_fourth_moment_trapezoid(u0, horizon, steps);
    Ok(FourthMomentCheck {
        mc,
        exact,
        exact_trapezoid,
        z_score: z(mc.raw_moment - exact_trapezoid, mc.raw_std_error, exact),
        z_score_continuous: z(mc.raw_moment - exact, mc.raw_std_error, exact),
    })
}

/// Finitely supported sequence `x_i` for `i = offset, offset+1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    pub offset: i64,
    pub values: Vec<Complex64>,
}

impl Sequence {
    pub fn new(offset: i64, values: Vec<Complex64>) -> Self {
        Self { offset, values }
    }

    pub fn get(&self, i: i64) -> Complex64 {
        let j = i - self.offset;
        if j >= 0 && (j as usize) < self.values.len() {
            self.values[j as usize]
        } else {
            Complex64::default()
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    fn range(&self) -> (i64, i64) {
        (self.offset, self.offset + self.values.len() as i64 - 1)
    }
}

/// Finitely supported `r_{n,ℓ}`; `rows[i][j]` is `r_{n_0 + i, ℓ_0 + j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence2 {
    pub offset_n: i64,
    pub offset_l: i64,
    pub rows: Vec<Vec<Complex64>>,
}

impl Sequence2 {
    pub fn norm(&self) -> f64 {
        self.rows.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionBound {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `‖Σ_{n,ℓ} f_{k-n} g_{k-n-ℓ} h_{k-ℓ} r_{n,ℓ}‖_{ℓ²_k}` against
/// `‖f‖‖g‖‖h‖‖r‖`.
pub fn convolution_bound_check(f: &Sequence, g: &Sequence, h: &Sequence, r: &Sequence2) -> ConvolutionBound {
    let rhs = f.norm() * g.norm() * h.norm() * r.norm();
    let (f0, f1) = f.range();
    let width = r.rows.iter().map(Vec::len).max().unwrap_or(0) as i64;
    let n_hi = r.offset_n + r.rows.len() as i64 - 1;
    let mut total = 0.0;
    if !f.values.is_empty() && !r.rows.is_empty() && width > 0 {
        for k in (f0 + r.offset_n)..=(f1 + n_hi) {
            let mut s = Complex64::default();
            for (i, row) in r.rows.iter().enumerate() {
                let n = r.offset_n + i as i64;
                let fv = f.get(k - n);
                if fv == Complex64::default() {
                    continue;
                }
                for (j, &rv) in row.iter().enumerate() {
                    let l = r.offset_l + j as i64;
                    s += fv * g.get(k - n - l) * h.get(k - l) * rv;
                }
            }
            total += s.norm_sqr();
        }
    }
    let lhs = total.sqrt();
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    ConvolutionBound { lhs, rhs, ratio }
}
