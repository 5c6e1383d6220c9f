//! Seeded Brownian paths.
//!
//! Path `i` of an ensemble draws its increments from a ChaCha20 stream keyed
//! by the master seed with stream id `i`, so any single path can be
//! regenerated on its own and the ensemble does not depend on scheduling.
//! Bridge refinements use a separate key per refinement level.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{mean_var, pairwise_sum_complex};

/// Identifier recorded in run manifests.
pub const GENERATOR_ID: &str =
    "chacha20(key=splitmix64(master_seed,level),stream=path_index)+standard_normal(rand_distr-0.5)";

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(master_seed: u64, level: u32, path_index: u64) -> ChaCha20Rng {
    let key = splitmix64(master_seed ^ (level as u64).wrapping_mul(GOLDEN));
    let mut rng = ChaCha20Rng::seed_from_u64(key);
    rng.set_stream(path_index);
    rng
}

/// Number of steps `T/dt`, rejecting non-integer ratios.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("horizon", format!("{horizon} must be > 0")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("{dt} must be > 0")));
    }
    let ratio = horizon / dt;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::NonIntegerSteps { horizon, dt });
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub num_paths: usize,
    pub master_seed: u64,
    pub horizon: f64,
    pub dt: f64,
}

impl EnsembleSpec {
    pub fn new(num_paths: usize, master_seed: u64, horizon: f64, dt: f64) -> Result<Self> {
        let spec = Self {
            num_paths,
            master_seed,
            horizon,
            dt,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec with `steps` uniform steps on `[0, horizon]`.
    pub fn with_steps(num_paths: usize, master_seed: u64, horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::param("steps", "must be >= 1"));
        }
        Self::new(num_paths, master_seed, horizon, horizon / steps as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_paths == 0 {
            return Err(Error::param("num_paths", "must be >= 1"));
        }
        step_count(self.horizon, self.dt).map(|_| ())
    }

    pub fn steps(&self) -> Result<usize> {
        step_count(self.horizon, self.dt)
    }
}

/// Sampled Wiener trajectory on `t_j = j dt`, `j = 0..=steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    horizon: f64,
    dt: f64,
    values: Vec<f64>,
    seed: u64,
    path_index: u64,
    level: u32,
}

impl BrownianPath {
    /// A path given explicitly by its knot values (`values[0]` must be 0).
    pub fn from_values(horizon: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::param("values", "need at least two knots"));
        }
        if values[0] != 0.0 {
            return Err(Error::param("values", "W_0 must be 0"));
        }
        let steps = values.len() - 1;
        let dt = horizon / steps as f64;
        step_count(horizon, dt)?;
        Ok(Self {
            horizon,
            dt,
            values,
            seed: 0,
            path_index: 0,
            level: 0,
        })
    }

    /// The degenerate path `W ≡ 0`.
    pub fn zero(horizon: f64, steps: usize) -> Result<Self> {
        Self::from_values(horizon, vec![0.0; steps + 1])
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn increment(&self, j: usize) -> f64 {
        self.values[j + 1] - self.values[j]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Brownian-bridge midpoint insertion; halves `dt` and keeps every
    /// existing knot.
    pub fn refine(&self) -> Self {
        let level = self.level + 1;
        let mut rng = stream(self.seed, level, self.path_index);
        let sd = (self.dt / 4.0).sqrt();
        let mut values = Vec::with_capacity(2 * self.values.len() - 1);
        for w in self.values.windows(2) {
            values.push(w[0]);
            let z: f64 = rng.sample(StandardNormal);
            values.push(0.5 * (w[0] + w[1]) + sd * z);
        }
        values.push(*self.values.last().unwrap());
        Self {
            horizon: self.horizon,
            dt: self.dt / 2.0,
            values,
            seed: self.seed,
            path_index: self.path_index,
            level,
        }
    }

    /// Every other knot; inverse of [`refine`](Self::refine) on the knots.
    pub fn coarsen(&self) -> Result<Self> {
        if self.steps() % 2 != 0 {
            return Err(Error::param("path", "odd step count cannot be coarsened"));
        }
        Ok(Self {
            horizon: self.horizon,
            dt: self.dt * 2.0,
            values: self.values.iter().copied().step_by(2).collect(),
            seed: self.seed,
            path_index: self.path_index,
            level: self.level.saturating_sub(1),
        })
    }

    /// The restriction to `[0, steps·dt]`.
    pub fn prefix(&self, steps: usize) -> Result<Self> {
        if steps == 0 || steps > self.steps() {
            return Err(Error::IndexOutOfRange {
                index: steps,
                len: self.values.len(),
            });
        }
        Ok(Self {
            horizon: steps as f64 * self.dt,
            dt: self.dt,
            values: self.values[..=steps].to_vec(),
            seed: self.seed,
            path_index: self.path_index,
            level: self.level,
        })
    }
}

/// Path `path_index` of the ensemble `spec`.
pub fn sample_path(spec: &EnsembleSpec, path_index: u64) -> Result<BrownianPath> {
    let steps = spec.steps()?;
    let mut rng = stream(spec.master_seed, 0, path_index);
    let sd = spec.dt.sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let mut w = 0.0;
    values.push(w);
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        values.push(w);
    }
    Ok(BrownianPath {
        horizon: spec.horizon,
        dt: spec.dt,
        values,
        seed: spec.master_seed,
        path_index,
        level: 0,
    })
}

/// All paths of an ensemble, generated in parallel.
pub fn sample_ensemble(spec: &EnsembleSpec) -> Result<Vec<BrownianPath>> {
    spec.validate()?;
    (0..spec.num_paths as u64)
        .into_par_iter()
        .map(|i| sample_path(spec, i))
        .collect()
}

/// Monte Carlo check of `E e^{iaW_t} = e^{-a²t/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicCheck {
    pub empirical: Complex64,
    pub reference: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub n_paths: usize,
}

pub fn characteristic_check(a: f64, t: f64, n_paths: usize, master_seed: u64) -> Result<CharacteristicCheck> {
    if n_paths < 100 {
        return Err(Error::param("n_paths", format!("{n_paths} < 100")));
    }
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("{t} must be >= 0")));
    }
    let reference = (-0.5 * a * a * t).exp();
    let samples: Vec<Complex64> = if t == 0.0 {
        vec![Complex64::new(1.0, 0.0); n_paths]
    } else {
        let spec = EnsembleSpec::new(n_paths, master_seed, t, t)?;
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let w = sample_path(&spec, i).map(|p| p.value(1))?;
                Ok(Complex64::from_polar(1.0, a * w))
            })
            .collect::<Result<_>>()?
    };
    let n = n_paths as f64;
    let empirical = pairwise_sum_complex(&samples) / n;
    let (_, var_re) = mean_var(&samples.iter().map(|z| z.re).collect::<Vec<_>>());
    let (_, var_im) = mean_var(&samples.iter().map(|z| z.im).collect::<Vec<_>>());
    let std_error = ((var_re + var_im) / n).sqrt();
    let dev = (empirical - Complex64::new(reference, 0.0)).norm();
    let z_score = if dev == 0.0 { 0.0 } else { dev / std_error };
    Ok(CharacteristicCheck {
        empirical,
        reference,
        std_error,
        z_score,
        n_paths,
    })
}
