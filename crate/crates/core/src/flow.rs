//! Propagators for `i du = Δu ∘ dW_t + |u|^{p-1} u dt`.
//!
//! The dispersive part is the Fourier multiplier `e^{ik²(W_t - W_s)}`; the
//! nonlinear part `i ∂_t u = |u|^{p-1} u` keeps `|u|` fixed pointwise and is
//! solved exactly by a phase rotation. The splitting solver composes the two
//! exact flows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::BrownianPath;
use crate::spectral::{fft_friendly_odd, SpectralField, SpectralWorkspace, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Lie,
    #[default]
    Strang,
}

/// Power nonlinearity `|u|^{p-1} u`, or none (pure dispersion).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Nonlinearity {
    Off,
    Power(f64),
}

impl Nonlinearity {
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::param("p", format!("exponent {p} must be >= 1")));
        }
        Ok(Nonlinearity::Power(p))
    }

    /// Polynomial degree of `|u|^{p-1}u` for odd integer `p`.
    pub fn polynomial_degree(&self) -> Option<usize> {
        match *self {
            Nonlinearity::Power(p) if p.fract() == 0.0 && (p as i64) % 2 == 1 => Some(p as usize),
            _ => None,
        }
    }
}

#[inline]
fn modulus_power(u: Complex64, p: f64) -> f64 {
    if p == 1.0 {
        1.0
    } else if p == 3.0 {
        u.norm_sqr()
    } else if p == 5.0 {
        u.norm_sqr() * u.norm_sqr()
    } else {
        u.norm().powf(p - 1.0)
    }
}

/// `a_k ↦ e^{ik² dW} a_k`, the exact propagator over a Brownian increment.
pub fn linear_flow(field: &SpectralField, dw: f64) -> SpectralField {
    let mut out = field.clone();
    apply_linear(out.coeffs_mut(), field.grid(), dw);
    out
}

fn apply_linear(coeffs: &mut [Complex64], grid: TorusGrid, dw: f64) {
    for (k, a) in grid.modes().zip(coeffs.iter_mut()) {
        let k2 = (k * k) as f64;
        *a *= Complex64::from_polar(1.0, k2 * dw);
    }
}

fn apply_nonlinear(ws: &mut SpectralWorkspace, samples: &mut [Complex64], coeffs: &mut [Complex64], h: f64, p: f64) {
    ws.synthesize(coeffs, samples);
    for u in samples.iter_mut() {
        *u *= Complex64::from_polar(1.0, -h * modulus_power(*u, p));
    }
    ws.analyze(samples, coeffs);
}

/// Exact flow of `i ∂_t u = |u|^{p-1} u` over time `h`, applied on the
/// physical grid and re-truncated to the field's modes.
pub fn nonlinear_flow(field: &SpectralField, h: f64, p: f64) -> Result<SpectralField> {
    if !(h >= 0.0) {
        return Err(Error::param("h", format!("step {h} must be >= 0")));
    }
    Nonlinearity::power(p)?;
    if h == 0.0 {
        return Ok(field.clone());
    }
    let grid = field.grid();
    let mut ws = SpectralWorkspace::new(grid);
    let mut samples = vec![Complex64::default(); grid.phys_points()];
    let mut out = field.clone();
    apply_nonlinear(&mut ws, &mut samples, out.coeffs_mut(), h, p);
    Ok(out)
}

/// Fields of one solve at every knot of its path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub path: BrownianPath,
    pub fields: Vec<SpectralField>,
    pub nonlinearity: Nonlinearity,
    pub scheme: Scheme,
}

impl Trajectory {
    pub fn grid(&self) -> TorusGrid {
        self.fields[0].grid()
    }

    pub fn final_field(&self) -> &SpectralField {
        self.fields.last().expect("trajectory has at least one knot")
    }

    /// Largest `|‖u_j‖ - ‖u_0‖| / ‖u_0‖` along the trajectory.
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.fields[0].l2_norm();
        self.fields
            .iter()
            .map(|f| (f.l2_norm() - m0).abs() / m0)
            .fold(0.0, f64::max)
    }

    /// `ψ_j = e^{iW_{t_j}Δ} u_j`, the field with the free evolution removed.
    pub fn twisted(&self) -> Vec<SpectralField> {
        self.fields
            .iter()
            .zip(self.path.values())
            .map(|(f, &w)| linear_flow(f, -w))
            .collect()
    }
}

/// The grid the solver steps on: every discrete mode of an odd grid with at
/// least as many samples as `grid`. On it both substeps are exactly unitary.
pub fn solver_grid(grid: TorusGrid) -> TorusGrid {
    if grid.is_full() {
        grid
    } else {
        TorusGrid::full(fft_friendly_odd(grid.phys_points())).expect("odd grid")
    }
}

/// Splitting solver along one Brownian path.
///
/// The datum's grid must satisfy the alias rule `M >= (p+1)K + 1` when `p` is
/// an odd integer. The state is carried on [`solver_grid`], so the stored
/// fields keep every mode the nonlinearity excites on the grid.
pub fn solve_nls(u0: &SpectralField, path: &BrownianPath, p: f64, scheme: Scheme) -> Result<Trajectory> {
    let nl = Nonlinearity::power(p)?;
    if let Some(d) = nl.polynomial_degree() {
        let g = u0.grid();
        if !g.is_full() && !g.is_alias_free(d) {
            return Err(Error::Aliasing(format!(
                "M = {} < {}K + 1 = {} for p = {p}",
                g.phys_points(),
                d + 1,
                (d + 1) * g.max_mode() + 1
            )));
        }
    }
    let grid = solver_grid(u0.grid());
    let mut ws = SpectralWorkspace::new(grid);
    let mut samples = vec![Complex64::default(); grid.phys_points()];
    let dt = path.dt();
    let mut state = u0.resample(grid);
    let mut fields = Vec::with_capacity(path.steps() + 1);
    fields.push(state.clone());
    for j in 0..path.steps() {
        let dw = path.increment(j);
        let c = state.coeffs_mut();
        match scheme {
            Scheme::Lie => {
                apply_linear(c, grid, dw);
                apply_nonlinear(&mut ws, &mut samples, c, dt, p);
            }
            Scheme::Strang => {
                apply_nonlinear(&mut ws, &mut samples, c, 0.5 * dt, p);
                apply_linear(c, grid, dw);
                apply_nonlinear(&mut ws, &mut samples, c, 0.5 * dt, p);
            }
        }
        fields.push(state.clone());
    }
    Ok(Trajectory {
        path: path.clone(),
        fields,
        nonlinearity: nl,
        scheme,
    })
}

/// `u_j = e^{-iW_{t_j}Δ} u_0` at every knot, on the datum's own grid.
pub fn solve_linear(u0: &SpectralField, path: &BrownianPath) -> Trajectory {
    let fields = path.values().iter().map(|&w| linear_flow(u0, w)).collect();
    Trajectory {
        path: path.clone(),
        fields,
        nonlinearity: Nonlinearity::Off,
        scheme: Scheme::Strang,
    }
}

fn trapezoid_weight(i: usize, last: usize, dt: f64) -> f64 {
    if i == 0 || i == last {
        0.5 * dt
    } else {
        dt
    }
}

/// `∫_0^{t} e^{-i(W_t - W_s)Δ} F(s) ds` at `t = t_index·dt`, by the
/// trapezoid rule on the path's knots.
pub fn duhamel(forcing: &[SpectralField], path: &BrownianPath, t_index: usize) -> Result<SpectralField> {
    if t_index > path.steps() || t_index >= forcing.len() {
        return Err(Error::IndexOutOfRange {
            index: t_index,
            len: forcing.len().min(path.steps() + 1),
        });
    }
    let grid = forcing[0].grid();
    let mut acc = SpectralField::zeros(grid);
    if t_index == 0 {
        return Ok(acc);
    }
    let wt = path.value(t_index);
    for (i, f) in forcing.iter().enumerate().take(t_index + 1) {
        let w = trapezoid_weight(i, t_index, path.dt());
        acc.axpy(Complex64::new(w, 0.0), &linear_flow(f, wt - path.value(i)))?;
    }
    Ok(acc)
}

/// The Duhamel integral at every knot, by the recursion
/// `D_{j+1} = e^{ik²ΔW_j}(D_j + dt/2 F_j) + dt/2 F_{j+1}`; agrees with
/// [`duhamel`] knot by knot.
pub fn duhamel_trajectory(forcing: &[SpectralField], path: &BrownianPath) -> Result<Vec<SpectralField>> {
    if forcing.len() != path.steps() + 1 {
        return Err(Error::MismatchedEnsemble(format!(
            "{} forcing fields for {} knots",
            forcing.len(),
            path.steps() + 1
        )));
    }
    let grid = forcing[0].grid();
    let half = Complex64::new(0.5 * path.dt(), 0.0);
    let mut out = Vec::with_capacity(forcing.len());
    let mut d = SpectralField::zeros(grid);
    out.push(d.clone());
    for j in 0..path.steps() {
        d.axpy(half, &forcing[j])?;
        apply_linear(d.coeffs_mut(), grid, path.increment(j));
        d.axpy(half, &forcing[j + 1])?;
        out.push(d.clone());
    }
    Ok(out)
}

/// Pointwise `|u|^{p-1} u` of a field, re-analyzed on its own grid.
pub fn power_nonlinearity(field: &SpectralField, p: f64) -> SpectralField {
    let grid = field.grid();
    let mut ws = SpectralWorkspace::new(grid);
    let mut samples = vec![Complex64::default(); grid.phys_points()];
    ws.synthesize(field.coeffs(), &mut samples);
    for u in samples.iter_mut() {
        *u *= modulus_power(*u, p);
    }
    let mut out = SpectralField::zeros(grid);
    ws.analyze(&mut samples, out.coeffs_mut());
    out
}

/// Pathwise self-convergence: `‖u^{dt}(T) - u^{dt/2}(T)‖_{L²}` for
/// `levels` successive bridge refinements of `path`.
pub fn self_convergence(
    u0: &SpectralField,
    path: &BrownianPath,
    p: f64,
    scheme: Scheme,
    levels: usize,
) -> Result<Vec<f64>> {
    let mut current = path.clone();
    let mut prev = solve_nls(u0, &current, p, scheme)?;
    let mut diffs = Vec::with_capacity(levels);
    for _ in 0..levels {
        current = current.refine();
        let next = solve_nls(u0, &current, p, scheme)?;
        diffs.push(prev.final_field().l2_distance(next.final_field())?);
        prev = next;
    }
    Ok(diffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{sample_path, EnsembleSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_field(grid: TorusGrid, k: i64, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<_> = (-k..=k)
            .map(|m| (m, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
            .collect();
        let f = SpectralField::from_modes(grid, &modes).unwrap();
        f.scale(c(1.0 / f.l2_norm(), 0.0))
    }

    #[test]
    fn linear_flow_examples() {
        let g = TorusGrid::new(2, 7).unwrap();
        let e1 = SpectralField::single_mode(g, 1, c(1.0, 0.0)).unwrap();
        let out = linear_flow(&e1, 0.7);
        assert!((out.coeff(1) - Complex64::from_polar(1.0, 0.7)).norm() < 1e-15);
        let one = SpectralField::single_mode(g, 0, c(1.0, 0.0)).unwrap();
        assert_eq!(linear_flow(&one, 3.0), one);
        let f = random_field(g, 2, 1);
        assert!((linear_flow(&f, 1.3).l2_norm() - f.l2_norm()).abs() < 1e-14);
    }

    #[test]
    fn nonlinear_flow_examples() {
        let g = TorusGrid::for_degree(4, 3).unwrap();
        let f = random_field(g, 4, 2);
        assert_eq!(nonlinear_flow(&f, 0.0, 3.0).unwrap(), f);
        assert!(nonlinear_flow(&f, -0.1, 3.0).is_err());
        assert!(nonlinear_flow(&f, 0.1, 0.5).is_err());

        let cst = c(0.6, -0.3);
        let cf = SpectralField::single_mode(g, 0, cst).unwrap();
        let out = nonlinear_flow(&cf, 0.4, 3.0).unwrap();
        let want = cst * Complex64::from_polar(1.0, -0.4 * cst.norm_sqr());
        assert!((out.coeff(0) - want).norm() < 1e-15);

        // Full-mode grid: re-truncation is the identity and the flow is unitary.
        let full = TorusGrid::full(g.phys_points()).unwrap();
        let ff = f.resample(full);
        let out = nonlinear_flow(&ff, 0.3, 3.0).unwrap();
        assert!((out.l2_norm() - ff.l2_norm()).abs() < 1e-11 * ff.l2_norm());
        let before = ff.to_physical();
        let after = out.to_physical();
        for (a, b) in before.iter().zip(&after) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_closed_form() {
        let spec = EnsembleSpec::new(1, 5, 1.0, 1.0 / 200.0).unwrap();
        let path = sample_path(&spec, 0).unwrap();
        for scheme in [Scheme::Lie, Scheme::Strang] {
            for k in 1..=3i64 {
                let g = TorusGrid::for_degree(3, 3).unwrap();
                let u0 = SpectralField::single_mode(g, k, c(1.0, 0.0)).unwrap();
                let traj = solve_nls(&u0, &path, 3.0, scheme).unwrap();
                for (j, f) in traj.fields.iter().enumerate() {
                    let phase = (k * k) as f64 * path.value(j) - path.time(j);
                    let want = u0.resample(f.grid()).scale(Complex64::from_polar(1.0, phase));
                    assert!(f.l2_distance(&want).unwrap() < 1e-10);
                }
                // p = 1: the nonlinearity is the identity coefficient.
                let traj = solve_nls(&u0.scale(c(0.5, 0.2)), &path, 1.0, scheme).unwrap();
                let j = path.steps();
                let want = u0
                    .scale(c(0.5, 0.2))
                    .resample(traj.grid())
                    .scale(Complex64::from_polar(1.0, (k * k) as f64 * path.value(j) - 1.0));
                assert!(traj.final_field().l2_distance(&want).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn alias_guard() {
        let g = TorusGrid::new(8, 20).unwrap();
        let u0 = random_field(g, 8, 3);
        let path = BrownianPath::zero(1.0, 4).unwrap();
        assert!(matches!(
            solve_nls(&u0, &path, 3.0, Scheme::Strang),
            Err(Error::Aliasing(_))
        ));
        // non-polynomial nonlinearity: no degree, no guard
        assert!(solve_nls(&u0, &path, 2.0, Scheme::Strang).is_ok());
    }

    #[test]
    fn mass_conserved_over_many_steps() {
        let spec = EnsembleSpec::new(1, 11, 1.0, 1e-3).unwrap();
        let path = sample_path(&spec, 0).unwrap();
        let g = TorusGrid::with_default_padding(16).unwrap();
        let u0 = random_field(g, 16, 4);
        for p in [2.0, 3.0] {
            let traj = solve_nls(&u0, &path, p, Scheme::Strang).unwrap();
            assert!(traj.max_mass_drift() < 1e-11, "p={p}: {}", traj.max_mass_drift());
            assert_eq!(traj.fields[0].resample(g), u0);
        }
    }

    #[test]
    fn commutes_with_grid_translations() {
        let spec = EnsembleSpec::new(1, 12, 0.5, 1.0 / 256.0).unwrap();
        let path = sample_path(&spec, 0).unwrap();
        let g = TorusGrid::with_default_padding(8).unwrap();
        let u0 = random_field(g, 8, 5).scale(c(2.0, 0.0));
        let base = solve_nls(&u0, &path, 3.0, Scheme::Strang).unwrap();
        for shift in [1usize, 7, 20] {
            let y = 2.0 * PI * shift as f64 / g.phys_points() as f64;
            let moved = solve_nls(&u0.translate(y), &path, 3.0, Scheme::Strang).unwrap();
            let want = base.final_field().translate(y);
            assert!(moved.final_field().l2_distance(&want).unwrap() < 1e-10);
        }
    }

    #[test]
    fn duhamel_examples() {
        let g = TorusGrid::new(3, 9).unwrap();
        let spec = EnsembleSpec::new(1, 13, 1.0, 1.0 / 64.0).unwrap();
        let path = sample_path(&spec, 0).unwrap();
        let n = path.steps() + 1;

        let zeros = vec![SpectralField::zeros(g); n];
        assert_eq!(duhamel(&zeros, &path, 10).unwrap(), SpectralField::zeros(g));
        assert!(duhamel(&zeros, &path, n).is_err());

        let f = random_field(g, 3, 6);
        let flat = BrownianPath::zero(1.0, 64).unwrap();
        let constant = vec![f.clone(); n];
        let d = duhamel(&constant, &flat, 64).unwrap();
        assert!(d.l2_distance(&f).unwrap() < 1e-14);
        let d = duhamel(&constant, &flat, 32).unwrap();
        assert!(d.l2_distance(&f.scale(c(0.5, 0.0))).unwrap() < 1e-14);

        // single mode e^{ix} with scalar profile g(s) = cos(3s) + i s
        let g_of = |s: f64| c((3.0 * s).cos(), s);
        let forcing: Vec<_> = (0..n)
            .map(|j| SpectralField::single_mode(g, 1, g_of(path.time(j))).unwrap())
            .collect();
        let t = 40;
        let d = duhamel(&forcing, &path, t).unwrap();
        let mut scalar = c(0.0, 0.0);
        for i in 0..=t {
            let w = if i == 0 || i == t { 0.5 } else { 1.0 } * path.dt();
            scalar += w * Complex64::from_polar(1.0, path.value(t) - path.value(i)) * g_of(path.time(i));
        }
        assert!((d.coeff(1) - scalar).norm() < 1e-12);
        assert!(d.coeff(0).norm() < 1e-15);

        let rec = duhamel_trajectory(&forcing, &path).unwrap();
        for j in [0, 1, 17, 64] {
            let direct = duhamel(&forcing, &path, j).unwrap();
            assert!(rec[j].l2_distance(&direct).unwrap() < 1e-12);
        }
    }
}
