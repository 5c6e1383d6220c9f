//! Exact lattice counts behind the resonance arguments: the cubic sets
//! `S_{k,j}`, the ellipse `X² + 3Y² = t`, the divisor function, zero-product
//! quadruples and the quintic resonant set `S_N(k)`.
//!
//! All arithmetic is in `i64`/`u64`. Mode bounds are capped at `2^15` so that
//! every product formed here fits with room to spare.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_BOUND: i64 = 1 << 15;

/// Largest `M` accepted by the histogram form of [`zero_product_count`].
pub const MAX_HISTOGRAM_M: u64 = 4096;

/// Largest `M` accepted by the brute-force form.
pub const MAX_BRUTE_FORCE_M: u64 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResonanceParams {
    Cubic { k: i64, j: i64, bound: i64 },
    Quintic { n: i64, k: i64 },
}

/// Size of a resonance set, optionally with its members.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceCount<T> {
    pub count: u64,
    pub members: Option<Vec<T>>,
    pub params: ResonanceParams,
}

fn check_bound(name: &'static str, v: i64) -> Result<()> {
    if v.abs() > MAX_BOUND {
        return Err(Error::Overflow(format!("|{name}| = {} exceeds 2^15", v.abs())));
    }
    Ok(())
}

/// `S_{k,j} = {(k_1, k_2) : k_1² + k_2² + (k - k_1 - k_2)² = j}` with all three
/// modes in `[-B, B]`.
pub fn s_kj_count(k: i64, j: i64, bound: i64, keep_members: bool) -> Result<ResonanceCount<(i64, i64)>> {
    check_bound("k", k)?;
    check_bound("B", bound)?;
    if bound < 1 {
        return Err(Error::param("B", "mode bound must be >= 1"));
    }
    let mut count = 0;
    let mut members = keep_members.then(Vec::new);
    for k1 in -bound..=bound {
        for k2 in -bound..=bound {
            let k3 = k - k1 - k2;
            if k3.abs() <= bound && k1 * k1 + k2 * k2 + k3 * k3 == j {
                count += 1;
                if let Some(m) = members.as_mut() {
                    m.push((k1, k2));
                }
            }
        }
    }
    Ok(ResonanceCount {
        count,
        members,
        params: ResonanceParams::Cubic { k, j, bound },
    })
}

fn isqrt(n: i64) -> i64 {
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Integer points `(X, Y)` with `X² + 3Y² = t`.
pub fn ellipse_points(t: i64) -> Result<u64> {
    if t < 0 {
        return Err(Error::param("t", format!("{t} must be >= 0")));
    }
    if t > 3 * (3 * MAX_BOUND).pow(2) * 2 {
        return Err(Error::Overflow(format!("t = {t} beyond the supported range")));
    }
    let mut count = 0;
    let mut y = 0;
    while 3 * y * y <= t {
        let rest = t - 3 * y * y;
        let x = isqrt(rest);
        if x * x == rest {
            let xs = if x == 0 { 1 } else { 2 };
            let ys = if y == 0 { 1 } else { 2 };
            count += xs * ys;
        }
        y += 1;
    }
    Ok(count)
}

/// Outcome of checking `(k_1, k_2) ↦ (3k_1 + 3k_2 - 2k, k_1 - k_2)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrespondenceCheck {
    pub holds: bool,
    pub s_count: u64,
    pub ellipse_count: u64,
    pub t: i64,
    /// A member that misses the ellipse or collides with another member.
    pub counterexample: Option<(i64, i64)>,
}

/// Checks that the map sends `S_{k,j}` injectively into the lattice points
/// of `X² + 3Y² = 6j - 2k²`, and hence that `|S_{k,j}|` is at most their
/// number. For `6j < 2k²` the ellipse is empty and so must be `S_{k,j}`.
pub fn ellipse_correspondence_check(k: i64, j: i64, bound: i64) -> Result<CorrespondenceCheck> {
    check_bound("k", k)?;
    let t = 6 * j - 2 * k * k;
    let s = s_kj_count(k, j, bound, true)?;
    let ellipse_count = if t < 0 { 0 } else { ellipse_points(t)? };
    let mut seen = HashSet::new();
    let mut counterexample = None;
    for &(k1, k2) in s.members.as_deref().unwrap_or_default() {
        let x = 3 * k1 + 3 * k2 - 2 * k;
        let y = k1 - k2;
        if x * x + 3 * y * y != t || !seen.insert((x, y)) {
            counterexample = Some((k1, k2));
            break;
        }
    }
    let holds = counterexample.is_none() && s.count <= ellipse_count;
    Ok(CorrespondenceCheck {
        holds,
        s_count: s.count,
        ellipse_count,
        t,
        counterexample,
    })
}

/// Number of divisors of `n`.
pub fn divisor_tau(n: u64) -> Result<u64> {
    if n < 1 {
        return Err(Error::param("n", "must be >= 1"));
    }
    let mut count = 0;
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            count += if d * d == n { 1 } else { 2 };
        }
        d += 1;
    }
    Ok(count)
}

/// `#{(n_1, n_2, n_3, n_4) ∈ [-M, M]⁴ : n_1 n_2 + n_3 n_4 = 0}` by direct
/// enumeration.
pub fn zero_product_count_brute(m: u64) -> Result<u64> {
    if m > MAX_BRUTE_FORCE_M {
        return Err(Error::AboveCap {
            what: "M",
            value: m as usize,
            cap: MAX_BRUTE_FORCE_M as usize,
            advice: "use the histogram form",
        });
    }
    let m = m as i64;
    let count = (-m..=m)
        .into_par_iter()
        .map(|n1| {
            let mut c = 0u64;
            for n2 in -m..=m {
                let p = n1 * n2;
                for n3 in -m..=m {
                    for n4 in -m..=m {
                        if p + n3 * n4 == 0 {
                            c += 1;
                        }
                    }
                }
            }
            c
        })
        .sum();
    Ok(count)
}

/// The same count through the product histogram
/// `Σ_m h(m) h(-m)`, `h(m) = #{(a, b) ∈ [-M, M]² : ab = m}`.
pub fn zero_product_count_histogram(m: u64) -> Result<u64> {
    if m > MAX_HISTOGRAM_M {
        return Err(Error::AboveCap {
            what: "M",
            value: m as usize,
            cap: MAX_HISTOGRAM_M as usize,
            advice: "the product histogram needs O(M²) memory",
        });
    }
    if m == 0 {
        return Ok(1);
    }
    let mm = (m * m) as usize;
    // positive-positive factorizations of each product 1..=M²
    let mut h = vec![0u32; mm + 1];
    for a in 1..=m as usize {
        for b in 1..=m as usize {
            h[a * b] += 1;
        }
    }
    // h(m) = h(-m) = 2 h⁺(m) for m != 0, and h(0) = 4M + 1
    let zero = 4 * m + 1;
    let tail: u64 = h.iter().map(|&v| 4 * (v as u64) * (v as u64)).sum();
    Ok(zero * zero + 2 * tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroProductCount {
    pub m: u64,
    pub count: u64,
    /// Brute-force count, computed when `M <= 20`.
    pub brute_force: Option<u64>,
}

/// Histogram count, cross-checked by enumeration for `M <= 20`.
pub fn zero_product_count(m: u64) -> Result<ZeroProductCount> {
    let count = zero_product_count_histogram(m)?;
    let brute_force = if m <= 20 {
        let b = zero_product_count_brute(m)?;
        if b != count {
            return Err(Error::Overflow(format!(
                "zero-product methods disagree at M = {m}: {count} vs {b}"
            )));
        }
        Some(b)
    } else {
        None
    };
    Ok(ZeroProductCount { m, count, brute_force })
}

/// `Ω(k, κ) = κ_1² - κ_2² + κ_3² - κ_4² + κ_5² - k²`.
pub fn quintic_phase(k: i64, kappa: [i64; 5]) -> i64 {
    let [a, b, c, d, e] = kappa;
    a * a - b * b + c * c - d * d + e * e - k * k
}

/// `κ = (k - n_1, k - n_1 - n_2, k - n_2 - n_3, k - n_2 - n_3 - n_4, k - n_2 - n_4)`,
/// a bijection onto quintuples with `κ_1 - κ_2 + κ_3 - κ_4 + κ_5 = k` under
/// which `Ω(k, κ) = -2(n_1 n_2 + n_3 n_4)`.
pub fn kappa_from_params(k: i64, n: [i64; 4]) -> [i64; 5] {
    let [n1, n2, n3, n4] = n;
    [k - n1, k - n1 - n2, k - n2 - n3, k - n2 - n3 - n4, k - n2 - n4]
}

/// Inverse of [`kappa_from_params`].
pub fn params_from_kappa(k: i64, kappa: [i64; 5]) -> [i64; 4] {
    let [a, b, c, d, _] = kappa;
    let n1 = k - a;
    let n2 = a - b;
    let n3 = k - n2 - c;
    let n4 = c - d;
    [n1, n2, n3, n4]
}

fn check_quintic(n: i64, k: i64) -> Result<()> {
    if n < 1 {
        return Err(Error::param("N", "must be >= 1"));
    }
    check_bound("N", n)?;
    if k.abs() > n {
        return Err(Error::param("k", format!("|k| = {} exceeds N = {n}", k.abs())));
    }
    Ok(())
}

/// `S_N(k)` by enumerating `κ_1..κ_4 ∈ [-N, N]` and solving for `κ_5`.
pub fn quintic_resonant_count_direct(n: i64, k: i64, keep_members: bool) -> Result<ResonanceCount<[i64; 5]>> {
    check_quintic(n, k)?;
    let mut count = 0;
    let mut members = keep_members.then(Vec::new);
    for a in -n..=n {
        for b in -n..=n {
            for c in -n..=n {
                for d in -n..=n {
                    let e = k - a + b - c + d;
                    if e.abs() <= n && quintic_phase(k, [a, b, c, d, e]) == 0 {
                        count += 1;
                        if let Some(m) = members.as_mut() {
                            m.push([a, b, c, d, e]);
                        }
                    }
                }
            }
        }
    }
    Ok(ResonanceCount {
        count,
        members,
        params: ResonanceParams::Quintic { n, k },
    })
}

/// `S_N(k)` by enumerating `(n_1, .., n_4)` with `n_1 n_2 + n_3 n_4 = 0` and
/// all five components of `κ` in `[-N, N]`.
pub fn quintic_resonant_count_reparam(n: i64, k: i64) -> Result<u64> {
    check_quintic(n, k)?;
    let count = (-2 * n..=2 * n)
        .into_par_iter()
        .map(|n2| {
            let mut c = 0u64;
            for n4 in -2 * n..=2 * n {
                for n1 in (k - n)..=(k + n) {
                    for n3 in -2 * n..=2 * n {
                        if n1 * n2 + n3 * n4 != 0 {
                            continue;
                        }
                        if kappa_from_params(k, [n1, n2, n3, n4]).iter().all(|x| x.abs() <= n) {
                            c += 1;
                        }
                    }
                }
            }
            c
        })
        .sum();
    Ok(count)
}

fn interval_len(lo: i64, hi: i64) -> u64 {
    if hi >= lo {
        (hi - lo + 1) as u64
    } else {
        0
    }
}

/// `{m : lo <= a m <= hi}` for `a != 0`, as an inclusive range.
fn multiples_in(lo: i64, hi: i64, a: i64) -> (i64, i64) {
    let (lo, hi, a) = if a > 0 { (lo, hi, a) } else { (-hi, -lo, -a) };
    (lo.div_euclid(a) + i64::from(lo.rem_euclid(a) != 0), hi.div_euclid(a))
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `|S_N(k)|` in `O(N² log N)`: for fixed `(n_2, n_4)` the admissible
/// `(n_1, n_3)` form a box, and `n_1 n_2 + n_3 n_4 = 0` is a lattice line
/// through the origin.
pub fn quintic_resonant_count(n: i64, k: i64) -> Result<u64> {
    check_quintic(n, k)?;
    let mut count = 0u64;
    for n2 in -2 * n..=2 * n {
        for n4 in -2 * n..=2 * n {
            if (k - n2 - n4).abs() > n {
                continue;
            }
            let (a_lo, a_hi) = ((k - n).max(k - n2 - n), (k + n).min(k - n2 + n));
            let (c_lo, c_hi) = ((k - n2 - n).max(k - n2 - n4 - n), (k - n2 + n).min(k - n2 - n4 + n));
            count += match (n2 == 0, n4 == 0) {
                (true, true) => interval_len(a_lo, a_hi) * interval_len(c_lo, c_hi),
                (true, false) => u64::from(c_lo <= 0 && 0 <= c_hi) * interval_len(a_lo, a_hi),
                (false, true) => u64::from(a_lo <= 0 && 0 <= a_hi) * interval_len(c_lo, c_hi),
                (false, false) => {
                    let g = gcd(n2, n4);
                    let (p, q) = (-n4 / g, n2 / g);
                    let (m1, m2) = multiples_in(a_lo, a_hi, p);
                    let (m3, m4) = multiples_in(c_lo, c_hi, q);
                    interval_len(m1.max(m3), m2.min(m4))
                }
            };
        }
    }
    Ok(count)
}

/// Largest `|S_{k,j}|` over `|k| <= B`, `0 <= j <= 2B²`, all modes in
/// `[-B, B]`.
pub fn max_s_kj(bound: i64) -> Result<u64> {
    check_bound("B", bound)?;
    if bound < 1 {
        return Err(Error::param("B", "mode bound must be >= 1"));
    }
    let jmax = 2 * bound * bound;
    let best = (-bound..=bound)
        .into_par_iter()
        .map(|k| {
            let mut hist = vec![0u64; jmax as usize + 1];
            for k1 in -bound..=bound {
                for k2 in -bound..=bound {
                    let k3 = k - k1 - k2;
                    let j = k1 * k1 + k2 * k2 + k3 * k3;
                    if k3.abs() <= bound && j <= jmax {
                        hist[j as usize] += 1;
                    }
                }
            }
            hist.into_iter().max().unwrap_or(0)
        })
        .max()
        .unwrap_or(0);
    Ok(best)
}

/// Growth of [`max_s_kj`] across bounds with the fitted log-log exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorGrowth {
    pub bounds: Vec<i64>,
    pub maxima: Vec<u64>,
    pub exponent: f64,
}

pub fn s_kj_growth(bounds: &[i64]) -> Result<DivisorGrowth> {
    let maxima = bounds.iter().map(|&b| max_s_kj(b)).collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = bounds.iter().map(|&b| (b as f64).ln()).collect();
    let y: Vec<f64> = maxima.iter().map(|&m| (m as f64).ln()).collect();
    let exponent = crate::stats::linear_fit(&x, &y).map_or(f64::NAN, |f| f.slope);
    Ok(DivisorGrowth {
        bounds: bounds.to_vec(),
        maxima,
        exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_kj_examples() {
        for b in [1, 3, 10] {
            assert_eq!(s_kj_count(0, 0, b, false).unwrap().count, 1);
            assert_eq!(s_kj_count(0, 2, b, false).unwrap().count, 6);
        }
        for j in (1..60).step_by(2) {
            assert_eq!(s_kj_count(0, j, 10, false).unwrap().count, 0);
        }
        let s = s_kj_count(0, 2, 3, true).unwrap();
        let mut m = s.members.unwrap();
        m.sort();
        assert_eq!(m, vec![(-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0)]);
    }

    #[test]
    fn ellipse_examples() {
        assert_eq!(ellipse_points(0).unwrap(), 1);
        assert_eq!(ellipse_points(1).unwrap(), 2);
        assert_eq!(ellipse_points(12).unwrap(), 6);
        assert!(ellipse_points(-1).is_err());
        let c = ellipse_correspondence_check(0, 2, 5).unwrap();
        assert!(c.holds);
        assert_eq!((c.s_count, c.ellipse_count, c.t), (6, 6, 12));
        let c0 = ellipse_correspondence_check(0, 0, 5).unwrap();
        assert!(c0.holds && c0.s_count == 1);
        let empty = ellipse_correspondence_check(3, 1, 5).unwrap();
        assert!(empty.holds && empty.s_count == 0 && empty.ellipse_count == 0 && empty.t < 0);
    }

    #[test]
    fn ellipse_map_identity() {
        // (3k_1 + 3k_2 - 2k)² + 3(k_1 - k_2)² = 6(k_1² + k_2² + k_3²) - 2k²
        for k in -6i64..=6 {
            for k1 in -9i64..=9 {
                for k2 in -9i64..=9 {
                    let k3 = k - k1 - k2;
                    let x = 3 * k1 + 3 * k2 - 2 * k;
                    let y = k1 - k2;
                    assert_eq!(x * x + 3 * y * y, 6 * (k1 * k1 + k2 * k2 + k3 * k3) - 2 * k * k);
                }
            }
        }
    }

    #[test]
    fn divisor_examples() {
        assert_eq!(divisor_tau(1).unwrap(), 1);
        assert_eq!(divisor_tau(12).unwrap(), 6);
        assert_eq!(divisor_tau(97).unwrap(), 2);
        assert_eq!(divisor_tau(36).unwrap(), 9);
        assert!(divisor_tau(0).is_err());
    }

    #[test]
    fn zero_product_small() {
        assert_eq!(zero_product_count_brute(0).unwrap(), 1);
        assert_eq!(zero_product_count_histogram(0).unwrap(), 1);
        assert_eq!(zero_product_count_brute(1).unwrap(), 33);
        assert_eq!(zero_product_count(1).unwrap().count, 33);
        for m in 0..=8 {
            assert_eq!(
                zero_product_count_brute(m).unwrap(),
                zero_product_count_histogram(m).unwrap()
            );
        }
        assert!(zero_product_count_histogram(MAX_HISTOGRAM_M + 1)
            .unwrap_err()
            .is_numerical_guard());
    }

    #[test]
    fn reparametrization_identity() {
        for k in -5..=5 {
            for n1 in -6..=6 {
                for n2 in -6..=6 {
                    for n3 in -6..=6 {
                        for n4 in -6..=6 {
                            let kappa = kappa_from_params(k, [n1, n2, n3, n4]);
                            assert_eq!(quintic_phase(k, kappa), -2 * (n1 * n2 + n3 * n4));
                            let [a, b, c, d, e] = kappa;
                            assert_eq!(a - b + c - d + e, k);
                            assert_eq!(params_from_kappa(k, kappa), [n1, n2, n3, n4]);
                        }
                    }
                }
            }
        }
        assert_eq!(quintic_phase(0, kappa_from_params(0, [1, 1, 0, 0])), -2);
    }

    #[test]
    fn quintic_small_counts() {
        assert_eq!(quintic_resonant_count_direct(1, 0, false).unwrap().count, 31);
        assert_eq!(quintic_resonant_count_reparam(1, 0).unwrap(), 31);
        assert_eq!(quintic_resonant_count(1, 0).unwrap(), 31);
        for (n, k, want) in [(2, 1, 115), (3, -2, 256), (4, 0, 451), (4, 3, 454)] {
            assert_eq!(quintic_resonant_count(n, k).unwrap(), want);
            assert_eq!(quintic_resonant_count_direct(n, k, false).unwrap().count, want);
        }
        let s = quintic_resonant_count_direct(2, 0, true).unwrap();
        assert_eq!(s.members.as_ref().unwrap().len() as u64, s.count);
        assert!(quintic_resonant_count(3, 4).is_err());
        assert!(quintic_resonant_count(MAX_BOUND + 1, 0)
            .unwrap_err()
            .is_numerical_guard());
    }

    #[test]
    fn quintic_count_dominates_small_box() {
        for n in [4, 8, 12, 16] {
            let box_count = zero_product_count_histogram((n / 4) as u64).unwrap();
            for k in -(n / 4)..=(n / 4) {
                assert!(quintic_resonant_count(n, k).unwrap() >= box_count);
            }
        }
    }

    #[test]
    fn multiples_in_handles_signs() {
        for a in [-5i64, -2, -1, 1, 3, 7] {
            for lo in -12..=12 {
                for hi in lo..=lo + 15 {
                    let (m1, m2) = multiples_in(lo, hi, a);
                    let want: Vec<i64> = (-40..=40).filter(|m| lo <= a * m && a * m <= hi).collect();
                    let got: Vec<i64> = (m1..=m2).collect();
                    assert_eq!(got, want, "a={a} lo={lo} hi={hi}");
                }
            }
        }
    }
}
