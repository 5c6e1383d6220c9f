use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wnd_core::flow::{self_convergence, Scheme};
use wnd_core::paths::{sample_path, EnsembleSpec};
use wnd_core::spectral::{SpectralField, TorusGrid};

fn datum(k: i64, seed: u64) -> SpectralField {
    let grid = TorusGrid::for_degree(k as usize, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<_> = (-k..=k)
        .map(|m| {
            let a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (m, a / (1.0 + (m * m) as f64))
        })
        .collect();
    let f = SpectralField::from_modes(grid, &modes).unwrap();
    f.scale(Complex64::new(1.0 / f.l2_norm(), 0.0))
}

#[test]
fn strang_rms_error_drops_by_half_order_per_refinement() {
    let u0 = datum(16, 11);
    let spec = EnsembleSpec::with_steps(16, 2024, 0.5, 1024).unwrap();
    let levels = 4;
    let diffs: Vec<Vec<f64>> = (0..spec.num_paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(&spec, i).unwrap();
            self_convergence(&u0, &path, 3.0, Scheme::Strang, levels).unwrap()
        })
        .collect();
    let rms: Vec<f64> = (0..levels)
        .map(|l| (diffs.iter().map(|d| d[l] * d[l]).sum::<f64>() / diffs.len() as f64).sqrt())
        .collect();
    for w in rms.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio >= 1.5, "rms {rms:?}, ratio {ratio}");
    }
}
