//! The quintic witness functional
//! `𝒜[φ](t) = ∫_0^t e^{-i(W_t - W_s)Δ} |e^{-iW_sΔ}φ|⁴ e^{-iW_sΔ}φ ds`
//! on the data `φ_N = N^{-1/2} Σ_{|k|<=N} e^{ikx}`.
//!
//! The expectation of `e^{-ik²W_t} 𝒜̂[φ_N](t, k)` is
//! `N^{-5/2} Σ_κ ∫_0^t e^{-sΩ(k,κ)²/2} ds` over quintuples `κ ∈ [-N, N]⁵`
//! with `κ_1 - κ_2 + κ_3 - κ_4 + κ_5 = k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::linear_flow;
use crate::moments::trapezoid_weights;
use crate::paths::{sample_path, BrownianPath, EnsembleSpec};
use crate::resonance::quintic_resonant_count;
use crate::spectral::{fft_friendly_odd, SpectralField, SpectralWorkspace, TorusGrid};
use crate::stats::{linear_fit, mean_se, pairwise_sum, pairwise_sum_vectors, LinearFit};

/// Largest `N` for which the exact expectation is summed.
pub const EXACT_CAP: i64 = 24;

/// Largest `N` accepted by [`lower_bound_norm`].
pub const LOWER_BOUND_CAP: i64 = 512;

/// Sample count needed to resolve every mode of `|v|⁴v` for bandwidth-`N` `v`.
pub fn witness_min_points(n: i64) -> usize {
    10 * n as usize + 1
}

/// Default witness grid: modes `|k| <= 5N` on an odd 7-smooth `M >= 10N + 1`.
pub fn witness_grid(n: i64) -> Result<TorusGrid> {
    if n < 1 {
        return Err(Error::param("N", "must be >= 1"));
    }
    TorusGrid::new(5 * n as usize, fft_friendly_odd(witness_min_points(n)))
}

/// `φ_N` on `grid`.
pub fn phi_n(n: i64, grid: TorusGrid) -> Result<SpectralField> {
    if n < 1 {
        return Err(Error::param("N", "must be >= 1"));
    }
    let amp = Complex64::new((n as f64).powf(-0.5), 0.0);
    let modes: Vec<_> = (-n..=n).map(|k| (k, amp)).collect();
    SpectralField::from_modes(grid, &modes)
}

// For |k| <= 5N, -2N² - k² <= Ω <= 3N², so |Ω/2| <= 14N².
const PHASE_OFFSET: i64 = 14;

/// `∫_0^t e^{-sΩ²/2} ds`.
fn psi(omega_sq: f64, t: f64) -> f64 {
    if omega_sq == 0.0 {
        t
    } else {
        let c = 0.5 * omega_sq;
        -(-c * t).exp_m1() / c
    }
}

/// Trapezoid rule for the same integral on `steps` steps.
fn psi_trapezoid(omega_sq: f64, t: f64, steps: usize) -> f64 {
    if steps == 0 || t == 0.0 {
        return 0.0;
    }
    let dt = t / steps as f64;
    let c = 0.5 * omega_sq;
    trapezoid_weights(steps, dt)
        .iter()
        .enumerate()
        .map(|(j, w)| w * (-c * j as f64 * dt).exp())
        .sum()
}

/// Histogram of `n_1 n_2 + n_3 n_4 = -Ω/2` over admissible quintuples for
/// the output mode `k`, indexed from `-PHASE_OFFSET·N²`.
fn phase_histogram(n: i64, k: i64) -> Vec<u64> {
    let off = PHASE_OFFSET * n * n;
    let mut hist = vec![0u64; (2 * off + 1) as usize];
    for n2 in -2 * n..=2 * n {
        for n4 in -2 * n..=2 * n {
            if (k - n2 - n4).abs() > n {
                continue;
            }
            let (a_lo, a_hi) = ((k - n).max(k - n2 - n), (k + n).min(k - n2 + n));
            let (c_lo, c_hi) = ((k - n2 - n).max(k - n2 - n4 - n), (k - n2 + n).min(k - n2 - n4 + n));
            for n1 in a_lo..=a_hi {
                let p = n1 * n2 + off;
                for n3 in c_lo..=c_hi {
                    hist[(p + n3 * n4) as usize] += 1;
                }
            }
        }
    }
    hist
}

fn check_exact(n: i64, t: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::param("N", "must be >= 1"));
    }
    if n > EXACT_CAP {
        return Err(Error::AboveCap {
            what: "N",
            value: n as usize,
            cap: EXACT_CAP as usize,
            advice: "use lower_bound_norm or mc_witness",
        });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("{t} must be >= 0")));
    }
    Ok(())
}

fn amplitude_with(n: i64, k: i64, weight: impl Fn(f64) -> f64) -> f64 {
    if k.abs() > 5 * n {
        return 0.0;
    }
    let off = PHASE_OFFSET * n * n;
    let terms: Vec<f64> = phase_histogram(n, k)
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| {
            let s = i as i64 - off;
            c as f64 * weight((4 * s * s) as f64)
        })
        .collect();
    (n as f64).powf(-2.5) * pairwise_sum(&terms)
}

/// `E e^{-ik²W_t} 𝒜̂[φ_N](t, k) = N^{-5/2} Σ_κ ψ(Ω(k, κ))` with
/// `ψ(0) = t`, `ψ(Ω) = 2(1 - e^{-tΩ²/2})/Ω²`.
pub fn exact_expected_amplitude(n: i64, t: f64, k: i64) -> Result<f64> {
    check_exact(n, t)?;
    Ok(amplitude_with(n, k, |w| psi(w, t)))
}

/// [`exact_expected_amplitude`] with the `s`-integral done by the trapezoid
/// rule on `steps` steps, the quantity a trapezoid Monte Carlo estimate
/// targets.
pub fn exact_expected_amplitude_trapezoid(n: i64, t: f64, k: i64, steps: usize) -> Result<f64> {
    check_exact(n, t)?;
    Ok(amplitude_with(n, k, |w| psi_trapezoid(w, t, steps)))
}

/// A norm reported as a coefficient `ℓ²` sum and as an `L²` norm
/// (`l2 = √(2π)·coeff_l2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualNorm {
    pub coeff_l2: f64,
    pub l2: f64,
}

impl DualNorm {
    fn from_coeff(coeff_l2: f64) -> Self {
        Self {
            coeff_l2,
            l2: (2.0 * PI).sqrt() * coeff_l2,
        }
    }
}

fn amplitude_norm(n: i64, amp: impl Fn(i64) -> Result<f64> + Sync) -> Result<DualNorm> {
    let sq = (-5 * n..=5 * n)
        .into_par_iter()
        .map(|k| amp(k).map(|a| a * a))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DualNorm::from_coeff(pairwise_sum(&sq).sqrt()))
}

/// `‖E e^{iW_tΔ}𝒜[φ_N](t)‖` from the exact amplitudes over `|k| <= 5N`.
pub fn exact_amplitude_norm(n: i64, t: f64) -> Result<DualNorm> {
    check_exact(n, t)?;
    amplitude_norm(n, |k| exact_expected_amplitude(n, t, k))
}

pub fn exact_amplitude_norm_trapezoid(n: i64, t: f64, steps: usize) -> Result<DualNorm> {
    check_exact(n, t)?;
    amplitude_norm(n, |k| exact_expected_amplitude_trapezoid(n, t, k, steps))
}

/// `t N^{-5/2} (Σ_{|k| <= N/4} |S_N(k)|²)^{1/2}`, with and without `√(2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub n: i64,
    pub t: f64,
    pub norm: DualNorm,
    /// `|S_N(k)|` for `k = -⌊N/4⌋..=⌊N/4⌋`.
    pub counts: Vec<u64>,
}

pub fn lower_bound_norm(n: i64, t: f64) -> Result<LowerBound> {
    if n < 1 {
        return Err(Error::param("N", "must be >= 1"));
    }
    if n > LOWER_BOUND_CAP {
        return Err(Error::AboveCap {
            what: "N",
            value: n as usize,
            cap: LOWER_BOUND_CAP as usize,
            advice: "counting cost grows like N³ log N",
        });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("{t} must be >= 0")));
    }
    let q = n / 4;
    let counts = (-q..=q)
        .into_par_iter()
        .map(|k| quintic_resonant_count(n, k))
        .collect::<Result<Vec<u64>>>()?;
    let sum_sq: f64 = counts.iter().map(|&c| (c as f64).powi(2)).sum();
    let coeff = t * (n as f64).powf(-2.5) * sum_sq.sqrt();
    Ok(LowerBound {
        n,
        t,
        norm: DualNorm::from_coeff(coeff),
        counts,
    })
}

/// `e^{iW_tΔ}𝒜[φ](t) = Σ_j w_j e^{iW_{t_j}Δ}(|v_j|⁴v_j)`, `v_j = e^{-iW_{t_j}Δ}φ`,
/// by the trapezoid rule on the path's knots. The quintic is formed on
/// `φ`'s grid; modes beyond it are dropped.
pub fn witness_functional(phi: &SpectralField, path: &BrownianPath) -> SpectralField {
    let grid = phi.grid();
    let mut ws = SpectralWorkspace::new(grid);
    let mut samples = vec![Complex64::default(); grid.phys_points()];
    let mut quintic = vec![Complex64::default(); grid.num_modes()];
    let weights = trapezoid_weights(path.steps(), path.dt());
    let mut acc = vec![Complex64::default(); grid.num_modes()];
    for (j, &w) in path.values().iter().enumerate() {
        let v = linear_flow(phi, w);
        ws.synthesize(v.coeffs(), &mut samples);
        for u in samples.iter_mut() {
            let m = u.norm_sqr();
            *u *= m * m;
        }
        ws.analyze(&mut samples, &mut quintic);
        for ((k, a), q) in grid.modes().zip(acc.iter_mut()).zip(&quintic) {
            *a += weights[j] * Complex64::from_polar(1.0, -((k * k) as f64) * w) * q;
        }
    }
    SpectralField::from_coeffs(grid, acc).expect("grid-sized coefficients")
}

/// `𝒜[φ](t)` itself: the twisted functional propagated by `e^{-iW_tΔ}`.
pub fn witness_amplitude(phi: &SpectralField, path: &BrownianPath) -> SpectralField {
    linear_flow(&witness_functional(phi, path), path.value(path.steps()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Monte Carlo witness statistics in the `L²` normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McWitness {
    pub n: i64,
    pub t: f64,
    pub n_paths: usize,
    pub steps: usize,
    /// `‖E e^{iW_tΔ}𝒜[φ_N](t)‖_{L²}` (norm of the path average).
    pub norm_of_mean: Estimate,
    /// `E‖𝒜[φ_N](t)‖_{L²}` (average of the per-path norms).
    pub mean_of_norm: Estimate,
}

/// Estimates both witness statistics from `n_paths` paths of `steps`
/// steps on `[0, t]`. `phys_points` overrides the grid size and must be at
/// least `10N + 1`.
pub fn mc_witness(
    n: i64,
    t: f64,
    n_paths: usize,
    steps: usize,
    master_seed: u64,
    phys_points: Option<usize>,
) -> Result<McWitness> {
    let grid = match phys_points {
        None => witness_grid(n)?,
        Some(m) => {
            if m < witness_min_points(n) {
                return Err(Error::Aliasing(format!(
                    "M = {m} < 10N + 1 = {} for the witness quintic",
                    witness_min_points(n)
                )));
            }
            TorusGrid::new(5 * n as usize, m)?
        }
    };
    let phi = phi_n(n, grid)?;
    let ensemble = EnsembleSpec::with_steps(n_paths, master_seed, t, steps)?;
    let twisted = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| sample_path(&ensemble, i).map(|p| witness_functional(&phi, &p).into_coeffs()))
        .collect::<Result<Vec<Vec<Complex64>>>>()?;
    let inv = 1.0 / n_paths as f64;
    let mean: Vec<Complex64> = pairwise_sum_vectors(&twisted).into_iter().map(|a| a * inv).collect();
    let l2 = |c: &[Complex64]| (2.0 * PI * c.iter().map(|a| a.norm_sqr()).sum::<f64>()).sqrt();
    let mnorm = l2(&mean);
    // delta method: d‖m‖ = 2π Re⟨m, dm⟩ / ‖m‖
    let proj: Vec<f64> = twisted
        .iter()
        .map(|x| {
            if mnorm > 0.0 {
                2.0 * PI * x.iter().zip(&mean).map(|(a, m)| (m.conj() * a).re).sum::<f64>() / mnorm
            } else {
                0.0
            }
        })
        .collect();
    let (_, proj_se) = mean_se(&proj);
    let norms: Vec<f64> = twisted.iter().map(|x| l2(x)).collect();
    let (mean_norm, norm_se) = mean_se(&norms);
    Ok(McWitness {
        n,
        t,
        n_paths,
        steps,
        norm_of_mean: Estimate {
            value: mnorm,
            std_error: if n_paths > 1 { proj_se } else { 0.0 },
        },
        mean_of_norm: Estimate {
            value: mean_norm,
            std_error: if n_paths > 1 { norm_se } else { 0.0 },
        },
    })
}

/// How the time `t` is chosen for each `N` in a growth scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TRule {
    Fixed {
        t: f64,
    },
    /// `t_N = 1 / log² N`.
    InverseLogSquared,
}

impl TRule {
    pub fn time(&self, n: i64) -> f64 {
        match *self {
            TRule::Fixed { t } => t,
            TRule::InverseLogSquared => 1.0 / (n as f64).ln().powi(2),
        }
    }
}

/// Optional work done by [`growth_scan`] beyond the lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ScanOptions {
    pub exact: bool,
    pub mc_paths: usize,
    pub mc_steps: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: i64,
    pub t: f64,
    pub lower_bound: DualNorm,
    pub exact: Option<DualNorm>,
    pub mc: Option<McWitness>,
    /// `lower_bound(t_N)·log N` at `t_N = 1/log² N`.
    pub divergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub fit: LinearFit,
    /// Width of the 95% interval for the slope over the slope.
    pub relative_ci_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    /// `lower_bound/t` against `log N`.
    pub fit_log: Option<GrowthFit>,
    /// `lower_bound/t` against `√(log N)`.
    pub fit_sqrt_log: Option<GrowthFit>,
    /// `"log"` or `"sqrt_log"`, by residual sum of squares.
    pub better_fit: Option<String>,
}

fn growth_fit(x: &[f64], y: &[f64]) -> Option<GrowthFit> {
    let fit = linear_fit(x, y)?;
    let relative_ci_width = 2.0 * 1.96 * fit.slope_se / fit.slope.abs();
    Some(GrowthFit { fit, relative_ci_width })
}

pub fn growth_scan(n_list: &[i64], t_rule: TRule, options: ScanOptions) -> Result<GrowthReport> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("N_list", "must be strictly ascending"));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let t = t_rule.time(n);
        let lb = lower_bound_norm(n, t)?;
        let exact = if options.exact && n <= EXACT_CAP {
            Some(exact_amplitude_norm(n, t)?)
        } else {
            None
        };
        let mc = if options.mc_paths > 0 {
            Some(mc_witness(
                n,
                t,
                options.mc_paths,
                options.mc_steps.max(1),
                options.master_seed,
                None,
            )?)
        } else {
            None
        };
        let log_n = (n as f64).ln();
        let divergence = if t > 0.0 {
            lb.norm.l2 / t / (log_n * log_n) * log_n
        } else {
            f64::NAN
        };
        rows.push(GrowthRow {
            n,
            t,
            lower_bound: lb.norm,
            exact,
            mc,
            divergence,
        });
    }
    let usable: Vec<&GrowthRow> = rows.iter().filter(|r| r.t > 0.0 && r.n > 1).collect();
    let y: Vec<f64> = usable.iter().map(|r| r.lower_bound.l2 / r.t).collect();
    let xl: Vec<f64> = usable.iter().map(|r| (r.n as f64).ln()).collect();
    let xs: Vec<f64> = xl.iter().map(|v| v.sqrt()).collect();
    let fit_log = growth_fit(&xl, &y);
    let fit_sqrt_log = growth_fit(&xs, &y);
    let better_fit = match (&fit_log, &fit_sqrt_log) {
        (Some(a), Some(b)) => Some(if a.fit.rss <= b.fit.rss { "log" } else { "sqrt_log" }.to_string()),
        _ => None,
    };
    Ok(GrowthReport {
        rows,
        fit_log,
        fit_sqrt_log,
        better_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn datum_mass() {
        for n in [1, 3, 8] {
            let phi = phi_n(n, witness_grid(n).unwrap()).unwrap();
            let want = 2.0 * PI * (2 * n + 1) as f64 / n as f64;
            assert!((phi.l2_norm_squared() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_examples() {
        for k in -3..=3 {
            assert_eq!(exact_expected_amplitude(1, 0.0, k).unwrap(), 0.0);
        }
        let t = 0.7;
        assert!(exact_expected_amplitude(1, t, 0).unwrap() >= t * 31.0);
        let mut prev = 0.0;
        for t in [0.1, 0.2, 0.5, 1.0, 2.0] {
            let a = exact_expected_amplitude(3, t, 1).unwrap();
            assert!(a >= prev);
            prev = a;
        }
        assert!(exact_expected_amplitude(EXACT_CAP + 1, 1.0, 0)
            .unwrap_err()
            .is_numerical_guard());
    }

    #[test]
    fn histogram_counts_every_quintuple_once() {
        // Σ_k #{κ : alternating sum k} = (2N+1)^5
        for n in 1..=4i64 {
            let total: u64 = (-5 * n..=5 * n)
                .map(|k| phase_histogram(n, k).iter().sum::<u64>())
                .sum();
            assert_eq!(total, (2 * n as u64 + 1).pow(5));
            for k in -n..=n {
                let zero = phase_histogram(n, k)[(PHASE_OFFSET * n * n) as usize];
                assert_eq!(zero, quintic_resonant_count(n, k).unwrap());
            }
        }
    }

    #[test]
    fn histogram_matches_direct_phase_sum() {
        let (n, t) = (2i64, 0.4);
        for k in -10..=10 {
            let mut s = 0.0;
            for a in -n..=n {
                for b in -n..=n {
                    for c in -n..=n {
                        for d in -n..=n {
                            let e = k - a + b - c + d;
                            if e.abs() <= n {
                                let om = crate::resonance::quintic_phase(k, [a, b, c, d, e]) as f64;
                                s += psi(om * om, t);
                            }
                        }
                    }
                }
            }
            let want = s * (n as f64).powf(-2.5);
            assert!((exact_expected_amplitude(n, t, k).unwrap() - want).abs() < 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn lower_bound_is_linear_in_t() {
        assert_eq!(lower_bound_norm(8, 0.0).unwrap().norm.l2, 0.0);
        let a = lower_bound_norm(16, 0.5).unwrap().norm;
        let b = lower_bound_norm(16, 1.0).unwrap().norm;
        assert!((2.0 * a.l2 - b.l2).abs() < 1e-12 * b.l2);
        assert!((b.l2 / b.coeff_l2 - (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_path_gives_t_times_quintic() {
        let n = 3;
        let grid = witness_grid(n).unwrap();
        let phi = phi_n(n, grid).unwrap();
        let t = 0.8;
        let path = BrownianPath::zero(t, 5).unwrap();
        let a = witness_amplitude(&phi, &path);
        let samples = phi.to_physical();
        let q: Vec<Complex64> = samples.iter().map(|u| u * u.norm_sqr().powi(2) * t).collect();
        let want = SpectralField::from_physical(&q, grid).unwrap();
        assert!(a.l2_distance(&want).unwrap() < 1e-12);
    }

    #[test]
    fn aliasing_guard() {
        let err = mc_witness(4, 0.5, 2, 4, 1, Some(40)).unwrap_err();
        assert!(matches!(err, Error::Aliasing(_)));
    }
}
