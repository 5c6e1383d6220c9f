//! Trigonometric polynomials on the torus `R / 2πZ`.
//!
//! A [`SpectralField`] stores coefficients `a_k` for `|k| <= K` of
//! `u(x) = Σ a_k e^{ikx}`, so that `a_k = (2π)^{-1} ∫ u e^{-ikx} dx`. Physical
//! samples live on the `M`-point grid `x_j = 2πj/M` of its [`TorusGrid`].

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mode range `{-K..=K}` together with the number of physical samples `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    max_mode: usize,
    phys_points: usize,
}

/// True when `n` has no prime factor above 7.
fn is_seven_smooth(mut n: usize) -> bool {
    if n == 0 {
        return false;
    }
    for p in [2, 3, 5, 7] {
        while n % p == 0 {
            n /= p;
        }
    }
    n == 1
}

/// Smallest odd 7-smooth integer `>= n`.
pub fn fft_friendly_odd(n: usize) -> usize {
    let mut m = n.max(1) | 1;
    while !is_seven_smooth(m) {
        m += 2;
    }
    m
}

impl TorusGrid {
    pub fn new(max_mode: usize, phys_points: usize) -> Result<Self> {
        if max_mode < 1 {
            return Err(Error::InvalidGrid("max_mode must be >= 1".into()));
        }
        if phys_points < 2 * max_mode + 1 {
            return Err(Error::InvalidGrid(format!(
                "phys_points {phys_points} < 2K+1 = {}",
                2 * max_mode + 1
            )));
        }
        Ok(Self { max_mode, phys_points })
    }

    /// Grid whose sample count `M >= (degree+1)K + 1` keeps the modes
    /// `|k| <= K` of a degree-`degree` pointwise product free of aliases.
    /// `M` is the smallest odd 7-smooth integer meeting the bound.
    pub fn for_degree(max_mode: usize, degree: usize) -> Result<Self> {
        let need = ((degree + 1) * max_mode + 1).max(2 * max_mode + 1);
        Self::new(max_mode, fft_friendly_odd(need))
    }

    /// Default sizing: `M >= 6K + 2`, enough for quintic products.
    pub fn with_default_padding(max_mode: usize) -> Result<Self> {
        Self::new(max_mode, fft_friendly_odd(6 * max_mode + 2))
    }

    /// The grid that keeps every discrete mode of an odd `M`-point grid,
    /// i.e. `K = (M - 1) / 2`.
    pub fn full(phys_points: usize) -> Result<Self> {
        if phys_points % 2 == 0 || phys_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "a full-mode grid needs odd M >= 3, got {phys_points}"
            )));
        }
        Self::new((phys_points - 1) / 2, phys_points)
    }

    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    pub fn phys_points(&self) -> usize {
        self.phys_points
    }

    pub fn num_modes(&self) -> usize {
        2 * self.max_mode + 1
    }

    pub fn padding_factor(&self) -> f64 {
        self.phys_points as f64 / self.num_modes() as f64
    }

    pub fn is_alias_free(&self, degree: usize) -> bool {
        self.phys_points > (degree + 1) * self.max_mode
    }

    pub fn is_full(&self) -> bool {
        self.phys_points == self.num_modes()
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> + Clone {
        let k = self.max_mode as i64;
        -k..=k
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> {
        let m = self.phys_points;
        (0..m).map(move |j| 2.0 * PI * j as f64 / m as f64)
    }

    #[inline]
    pub(crate) fn slot(&self, k: i64) -> Option<usize> {
        let kk = self.max_mode as i64;
        if k.abs() <= kk {
            Some((k + kk) as usize)
        } else {
            None
        }
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(m: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let entry = guard.entry(m).or_insert_with(|| {
        let mut planner = FftPlanner::new();
        Plans {
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    });
    (entry.forward.clone(), entry.inverse.clone())
}

/// Reusable FFT plans and buffers for one grid.
///
/// Hot loops (the solver, ensemble moments) hold one of these per worker so
/// that transforms do not allocate.
pub struct SpectralWorkspace {
    grid: TorusGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl SpectralWorkspace {
    pub fn new(grid: TorusGrid) -> Self {
        let (forward, inverse) = plans(grid.phys_points);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            grid,
            forward,
            inverse,
            scratch: vec![Complex64::default(); len],
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// Writes `Σ_k a_k e^{ikx_j}` into `samples` (length `M`).
    pub fn synthesize(&mut self, coeffs: &[Complex64], samples: &mut [Complex64]) {
        let m = self.grid.phys_points;
        let kk = self.grid.max_mode as i64;
        debug_assert_eq!(coeffs.len(), self.grid.num_modes());
        debug_assert_eq!(samples.len(), m);
        samples.fill(Complex64::default());
        for (i, &a) in coeffs.iter().enumerate() {
            let k = i as i64 - kk;
            samples[k.rem_euclid(m as i64) as usize] = a;
        }
        self.inverse.process_with_scratch(samples, &mut self.scratch);
    }

    /// Discrete Fourier coefficients of `samples` for `|k| <= K`. The buffer
    /// is overwritten with its unnormalized transform.
    pub fn analyze(&mut self, samples: &mut [Complex64], coeffs: &mut [Complex64]) {
        let m = self.grid.phys_points;
        let kk = self.grid.max_mode as i64;
        debug_assert_eq!(samples.len(), m);
        self.forward.process_with_scratch(samples, &mut self.scratch);
        let norm = 1.0 / m as f64;
        for (i, c) in coeffs.iter_mut().enumerate() {
            let k = i as i64 - kk;
            *c = samples[k.rem_euclid(m as i64) as usize] * norm;
        }
    }
}

/// Frequency cutoff used by [`SpectralField::project_leq`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Projector {
    #[default]
    Sharp,
    Smooth,
}

/// `C^∞` bump equal to 1 on `[-1, 1]` and vanishing outside `(-2, 2)`.
pub fn smooth_bump(x: f64) -> f64 {
    fn g(y: f64) -> f64 {
        if y > 0.0 {
            (-1.0 / y).exp()
        } else {
            0.0
        }
    }
    let a = x.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let up = g(2.0 - a);
        up / (up + g(a - 1.0))
    }
}

/// Complex Fourier coefficients of a function on the 2π-torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.num_modes()],
        }
    }

    /// Coefficients ordered `k = -K, ..., K`.
    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.num_modes() {
            return Err(Error::LengthMismatch {
                expected: grid.num_modes(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn from_modes(grid: TorusGrid, modes: &[(i64, Complex64)]) -> Result<Self> {
        let mut f = Self::zeros(grid);
        for &(k, a) in modes {
            let slot = grid
                .slot(k)
                .ok_or_else(|| Error::param("mode", format!("|{k}| exceeds K = {}", grid.max_mode)))?;
            f.coeffs[slot] += a;
        }
        Ok(f)
    }

    pub fn single_mode(grid: TorusGrid, k: i64, amplitude: Complex64) -> Result<Self> {
        Self::from_modes(grid, &[(k, amplitude)])
    }

    /// `to_spectral`: discrete coefficients of `M` uniform samples, truncated
    /// to `|k| <= K`.
    pub fn from_physical(samples: &[Complex64], grid: TorusGrid) -> Result<Self> {
        if samples.len() != grid.phys_points {
            return Err(Error::LengthMismatch {
                expected: grid.phys_points,
                got: samples.len(),
            });
        }
        let mut ws = SpectralWorkspace::new(grid);
        let mut buf = samples.to_vec();
        let mut f = Self::zeros(grid);
        ws.analyze(&mut buf, &mut f.coeffs);
        Ok(f)
    }

    /// `to_physical`: samples `Σ_k a_k e^{ikx_j}` on the `M`-point grid.
    pub fn to_physical(&self) -> Vec<Complex64> {
        let mut ws = SpectralWorkspace::new(self.grid);
        let mut out = vec![Complex64::default(); self.grid.phys_points];
        ws.synthesize(&self.coeffs, &mut out);
        out
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// `a_k`, or zero outside the stored range.
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.grid.slot(k).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.grid.modes().zip(self.coeffs.iter().copied())
    }

    /// Largest `|k|` with a nonzero coefficient (0 for the zero field).
    pub fn bandwidth(&self) -> usize {
        self.modes()
            .filter(|(_, a)| *a != Complex64::default())
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn l2_norm_squared(&self) -> f64 {
        2.0 * PI * self.coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// `‖u‖_{L²}` by Plancherel.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_squared().sqrt()
    }

    /// `(∫ |u|^r dx)^{1/r}` by the rectangle rule on the `M` grid; `r = ∞`
    /// gives the grid maximum.
    pub fn lp_norm(&self, r: f64) -> Result<f64> {
        check_exponent(r)?;
        Ok(lp_norm_of_samples(&self.to_physical(), r))
    }

    pub fn project_leq(&self, cutoff: usize, projector: Projector) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::param("N", "projection cutoff must be >= 1"));
        }
        let mut out = self.clone();
        let n = cutoff as f64;
        for (k, a) in self.grid.modes().zip(out.coeffs.iter_mut()) {
            let w = match projector {
                Projector::Sharp => {
                    if k.unsigned_abs() as usize <= cutoff {
                        1.0
                    } else {
                        0.0
                    }
                }
                Projector::Smooth => smooth_bump(k as f64 / n),
            };
            *a *= w;
        }
        Ok(out)
    }

    /// Copies the coefficients into `grid`, zero-padding or truncating.
    pub fn resample(&self, grid: TorusGrid) -> Self {
        let mut out = Self::zeros(grid);
        for (k, a) in self.modes() {
            if let Some(i) = grid.slot(k) {
                out.coeffs[i] = a;
            }
        }
        out
    }

    /// `u(· - y)`, i.e. `a_k ↦ e^{-iky} a_k`.
    pub fn translate(&self, y: f64) -> Self {
        let mut out = self.clone();
        for (k, a) in self.grid.modes().zip(out.coeffs.iter_mut()) {
            *a *= Complex64::from_polar(1.0, -(k as f64) * y);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|a| *a *= c);
        out
    }

    /// `self += c * other`; both fields must share a grid.
    pub fn axpy(&mut self, c: Complex64, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::MismatchedEnsemble("axpy on different grids".into()));
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
        Ok(())
    }

    /// `‖self - other‖_{L²}`.
    pub fn l2_distance(&self, other: &SpectralField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::MismatchedEnsemble("distance on different grids".into()));
        }
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((2.0 * PI * s).sqrt())
    }

    pub fn to_record(&self) -> FieldRecord {
        FieldRecord {
            max_mode: self.grid.max_mode,
            phys_points: self.grid.phys_points,
            coeffs: self.coeffs.iter().flat_map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn from_record(rec: &FieldRecord) -> Result<Self> {
        let grid = TorusGrid::new(rec.max_mode, rec.phys_points)?;
        if rec.coeffs.len() != 2 * grid.num_modes() {
            return Err(Error::LengthMismatch {
                expected: 2 * grid.num_modes(),
                got: rec.coeffs.len(),
            });
        }
        let coeffs = rec.coeffs.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        Self::from_coeffs(grid, coeffs)
    }
}

/// Flat serialized form of a field: `K`, `M`, then `re, im` pairs for
/// `k = -K..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRecord {
    #[serde(rename = "K")]
    pub max_mode: usize,
    #[serde(rename = "M")]
    pub phys_points: usize,
    pub coeffs: Vec<f64>,
}

pub(crate) fn check_exponent(r: f64) -> Result<()> {
    if r.is_nan() || r < 1.0 {
        return Err(Error::param("r", format!("exponent {r} < 1")));
    }
    Ok(())
}

/// Rectangle-rule `L^r` norm of uniform samples on the 2π-torus.
pub fn lp_norm_of_samples(samples: &[Complex64], r: f64) -> f64 {
    if r.is_infinite() {
        return samples.iter().map(|u| u.norm()).fold(0.0, f64::max);
    }
    let h = 2.0 * PI / samples.len() as f64;
    let s: f64 = if r == 2.0 {
        samples.iter().map(|u| u.norm_sqr()).sum()
    } else if r == 4.0 {
        samples.iter().map(|u| u.norm_sqr().powi(2)).sum()
    } else if r == 6.0 {
        samples.iter().map(|u| u.norm_sqr().powi(3)).sum()
    } else {
        samples.iter().map(|u| u.norm().powf(r)).sum()
    };
    (h * s).powf(1.0 / r)
}

/// `to_physical` as a free function.
pub fn to_physical(field: &SpectralField) -> Vec<Complex64> {
    field.to_physical()
}

/// `to_spectral` as a free function.
pub fn to_spectral(samples: &[Complex64], grid: TorusGrid) -> Result<SpectralField> {
    SpectralField::from_physical(samples, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_field(grid: TorusGrid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..grid.num_modes())
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SpectralField::from_coeffs(grid, coeffs).unwrap()
    }

    #[test]
    fn grid_rules() {
        assert!(TorusGrid::new(0, 8).is_err());
        assert!(TorusGrid::new(4, 8).is_err());
        let g = TorusGrid::new(4, 9).unwrap();
        assert!(g.is_full());
        let g = TorusGrid::for_degree(16, 3).unwrap();
        assert!(g.phys_points() >= 65 && g.phys_points() % 2 == 1);
        assert!(g.is_alias_free(3));
        let g = TorusGrid::with_default_padding(8).unwrap();
        assert!(g.phys_points() >= 50);
        assert!(g.is_alias_free(5));
        assert_eq!(fft_friendly_odd(97), 105);
        assert!(TorusGrid::full(10).is_err());
    }

    #[test]
    fn physical_samples_of_simple_fields() {
        let g = TorusGrid::new(3, 16).unwrap();
        let one = SpectralField::single_mode(g, 0, c(1.0, 0.0)).unwrap();
        for u in one.to_physical() {
            assert!((u - c(1.0, 0.0)).norm() < 1e-15);
        }
        let e1 = SpectralField::single_mode(g, 1, c(1.0, 0.0)).unwrap();
        for (u, x) in e1.to_physical().into_iter().zip(g.nodes()) {
            assert!((u - Complex64::from_polar(1.0, x)).norm() < 1e-14);
        }
    }

    #[test]
    fn spectral_coefficients_of_samples() {
        let g = TorusGrid::new(3, 16).unwrap();
        let ones = vec![c(1.0, 0.0); 16];
        let f = to_spectral(&ones, g).unwrap();
        assert!((f.coeff(0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(f.coeffs().iter().skip(4).all(|a| a.norm() < 1e-15));

        let e2: Vec<_> = g.nodes().map(|x| Complex64::from_polar(1.0, 2.0 * x)).collect();
        let f = to_spectral(&e2, g).unwrap();
        for (k, a) in f.modes() {
            let want = if k == 2 { 1.0 } else { 0.0 };
            assert!((a - c(want, 0.0)).norm() < 1e-14, "k={k}");
        }

        // (1 + e^{ix})^2 = 1 + 2e^{ix} + e^{2ix}
        let g2 = TorusGrid::new(2, 8).unwrap();
        let sq: Vec<_> = g2
            .nodes()
            .map(|x| {
                let v = c(1.0, 0.0) + Complex64::from_polar(1.0, x);
                v * v
            })
            .collect();
        let f = to_spectral(&sq, g2).unwrap();
        let want = [0.0, 0.0, 1.0, 2.0, 1.0];
        for (a, w) in f.coeffs().iter().zip(want) {
            assert!((a - c(w, 0.0)).norm() < 1e-14);
        }

        assert_eq!(
            to_spectral(&ones[..5], g),
            Err(Error::LengthMismatch { expected: 16, got: 5 })
        );
    }

    #[test]
    fn round_trip_k8_m64() {
        let g = TorusGrid::new(8, 64).unwrap();
        let f = random_field(g, 7);
        let back = to_spectral(&f.to_physical(), g).unwrap();
        let scale = f.coeffs().iter().map(|a| a.norm()).fold(0.0, f64::max);
        for (a, b) in f.coeffs().iter().zip(back.coeffs()) {
            assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn lp_norm_examples() {
        let g = TorusGrid::with_default_padding(2).unwrap();
        let e1 = SpectralField::single_mode(g, 1, c(1.0, 0.0)).unwrap();
        let want = (2.0 * PI).powf(0.25);
        assert!((e1.lp_norm(4.0).unwrap() - want).abs() < 1e-13);

        let f = SpectralField::from_modes(g, &[(0, c(1.0, 0.0)), (1, c(1.0, 0.0))]).unwrap();
        assert!((f.lp_norm(2.0).unwrap() - 2.0 * PI.sqrt()).abs() < 1e-13);
        assert!((f.lp_norm(4.0).unwrap() - (12.0 * PI).powf(0.25)).abs() < 1e-13);
        assert!((f.lp_norm(f64::INFINITY).unwrap() - 2.0).abs() < 1e-14);
        assert!(f.lp_norm(0.5).is_err());
    }

    #[test]
    fn projections() {
        let g = TorusGrid::new(3, 16).unwrap();
        let modes: Vec<_> = (-3..=3).map(|k| (k, c(1.0, 0.0))).collect();
        let f = SpectralField::from_modes(g, &modes).unwrap();
        let p = f.project_leq(1, Projector::Sharp).unwrap();
        for (k, a) in p.modes() {
            assert_eq!(a.norm() > 0.0, k.abs() <= 1);
        }
        assert_eq!(p.project_leq(1, Projector::Sharp).unwrap(), p);

        let a2 = SpectralField::single_mode(g, 2, c(1.0, 0.0)).unwrap();
        let s = a2.project_leq(1, Projector::Smooth).unwrap();
        assert_eq!(s.coeff(2).norm(), 0.0);
        assert!(f.project_leq(0, Projector::Sharp).is_err());

        assert_eq!(smooth_bump(0.5), 1.0);
        assert_eq!(smooth_bump(-2.0), 0.0);
        assert!((smooth_bump(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = smooth_bump(1.0 + i as f64 / 100.0);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn records_round_trip() {
        let g = TorusGrid::new(2, 7).unwrap();
        let f = random_field(g, 3);
        let rec = f.to_record();
        assert_eq!(rec.coeffs.len(), 10);
        assert_eq!(SpectralField::from_record(&rec).unwrap(), f);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn plancherel_and_l2_agree(k in 1usize..=64, seed in any::<u64>()) {
                let g = TorusGrid::with_default_padding(k).unwrap();
                let f = random_field(g, seed);
                let samples = f.to_physical();
                let quad = 2.0 * PI / g.phys_points() as f64
                    * samples.iter().map(|u| u.norm_sqr()).sum::<f64>();
                let planch = f.l2_norm_squared();
                prop_assert!((quad - planch).abs() <= 1e-12 * planch);
                let l2 = f.lp_norm(2.0).unwrap();
                prop_assert!((l2 - f.l2_norm()).abs() <= 1e-10 * f.l2_norm());
            }

            #[test]
            fn sharp_projection_contracts(k in 1usize..=32, n in 1usize..=40, seed in any::<u64>()) {
                let g = TorusGrid::new(k, 2 * k + 1).unwrap();
                let f = random_field(g, seed);
                let p = f.project_leq(n, Projector::Sharp).unwrap();
                prop_assert!(p.l2_norm() <= f.l2_norm() + 1e-15);
                prop_assert_eq!(p.project_leq(n, Projector::Sharp).unwrap(), p);
            }

            #[test]
            fn even_lp_norms_are_exact(k in 1usize..=12, seed in any::<u64>()) {
                // |u|^4 has bandwidth 4K, so M >= 4K+1 makes the rectangle
                // rule exact: ∫|u|^4 = 2π Σ_m |Σ_k a_k a_{m-k}|^2.
                let g = TorusGrid::for_degree(k, 3).unwrap();
                let f = random_field(g, seed);
                let kk = k as i64;
                let mut sum = 0.0;
                for m in -2 * kk..=2 * kk {
                    let conv: Complex64 = (-kk..=kk).map(|j| f.coeff(j) * f.coeff(m - j)).sum();
                    sum += conv.norm_sqr();
                }
                let exact = (2.0 * PI * sum).powf(0.25);
                prop_assert!((f.lp_norm(4.0).unwrap() - exact).abs() <= 1e-10 * exact);
            }
        }
    }
}
