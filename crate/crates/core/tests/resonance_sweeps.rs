use wnd_core::resonance::*;

#[test]
fn correspondence_holds_on_the_full_sweep() {
    for k in -8i64..=8 {
        for j in 0..=200 {
            let c = ellipse_correspondence_check(k, j, 40).unwrap();
            assert!(c.holds, "k={k} j={j}: {c:?}");
        }
    }
}

#[test]
fn histogram_matches_brute_force_up_to_twenty() {
    for m in 0..=20 {
        let z = zero_product_count(m).unwrap();
        assert_eq!(z.brute_force, Some(z.count), "M={m}");
    }
}

#[test]
fn zero_product_growth_band() {
    let ratios: Vec<f64> = [8u64, 16, 32, 64]
        .iter()
        .map(|&m| zero_product_count_histogram(m).unwrap() as f64 / ((m * m) as f64 * (m as f64).ln()))
        .collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(hi <= 4.0 * lo, "{ratios:?}");
}

#[test]
fn quintic_methods_agree_up_to_eight() {
    for n in 1..=8i64 {
        for k in -n..=n {
            let direct = quintic_resonant_count_direct(n, k, false).unwrap().count;
            assert_eq!(quintic_resonant_count_reparam(n, k).unwrap(), direct, "N={n} k={k}");
            assert_eq!(quintic_resonant_count(n, k).unwrap(), direct, "N={n} k={k}");
        }
    }
}

#[test]
fn s_kj_bounded_by_ellipse_points() {
    for k in -6i64..=6 {
        for j in 0..=120 {
            let t = 6 * j - 2 * k * k;
            if t < 0 {
                continue;
            }
            let s = s_kj_count(k, j, 12, false).unwrap().count;
            assert!(s <= ellipse_points(t).unwrap());
        }
    }
}

#[test]
fn s_kj_maximum_grows_slower_than_square_root() {
    let g = s_kj_growth(&[8, 16, 32, 64]).unwrap();
    assert!(g.maxima.windows(2).all(|w| w[0] <= w[1]), "{g:?}");
    assert!(g.exponent < 0.5, "{g:?}");
    let last = *g.maxima.last().unwrap() as f64;
    assert!(last / g.maxima[0] as f64 <= 8f64.sqrt(), "{g:?}");
}
