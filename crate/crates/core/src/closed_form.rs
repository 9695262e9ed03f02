//! Closed-form efficiency and first-moment functions of the threshold
//! simulation, and the boundary curve they trace out.
//!
//! `T_d(t)` is the probability that the covariant parent outcome clicks
//! (largest squared modulus at least `t`), and `A_d(t)` is `d` times the
//! first moment of the winning component over that event:
//!
//! ```text
//! T_d(t) = d  Σ_m C(d-1, m) (-1)^(d-1-m) (t(m+1) - 1)^(d-1) / (m+1)
//! A_d(t) =    Σ_m C(d-1, m) (-1)^(d-1-m) ((d-1) t (m+1) + 1) (t(m+1) - 1)^(d-1) / (m+1)^2
//! ```
//!
//! with `m` running from 0 to `min(floor(1/t - 1), d - 1)`, i.e. over every
//! `m` with `t(m+1) <= 1` (all `d` terms at `t = 0`).
//!
//! The sums alternate and their terms grow like `C(d-1, m)`, so a naive double
//! evaluation loses about eight digits at `d = 30`. Both floating modes therefore
//! build each term with error-free products and accumulate in double-double;
//! the exact mode works in big rationals and is the reference.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::precision::DoubleDouble;
use crate::types::{BoundarySample, Dimension, Threshold};

/// Arithmetic used to evaluate the alternating sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EvalMode {
    /// Double result; terms formed with error-free transformations.
    Float64,
    /// Double-double throughout, rounded to double on return.
    Extended,
    /// Big-rational arithmetic on the exact binary value of `t`.
    ExactRational,
}

/// Row `C(n, 0..=n)` of exact binomial coefficients.
pub fn binomial_row(n: usize) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for m in 0..n {
        c = c * BigUint::from(n - m) / BigUint::from(m + 1);
        row.push(c.clone());
    }
    row
}

/// Largest summation index: the last `m <= d - 1` with `t (m + 1) <= 1`, decided exactly.
fn last_index(d: usize, t: f64) -> usize {
    if t == 0.0 {
        return d - 1;
    }
    let mut last = 0;
    for m in 1..d {
        let (p, e) = crate::precision::two_prod(t, (m + 1) as f64);
        if p < 1.0 || (p == 1.0 && e <= 0.0) {
            last = m;
        } else {
            break;
        }
    }
    last
}

fn last_index_exact(d: usize, t: &BigRational) -> usize {
    if t.is_zero() {
        return d - 1;
    }
    let one = BigRational::one();
    (0..d)
        .take_while(|&m| t * BigRational::from_integer(BigInt::from(m + 1)) <= one)
        .last()
        .unwrap_or(0)
}

/// `(1 - t(m+1))` in double-double; exact since the product is exact.
fn gap_dd(t: f64, m: usize) -> DoubleDouble {
    DoubleDouble::ONE - DoubleDouble::from_product(t, (m + 1) as f64)
}

/// Both sums at once in double-double: `(T_d(t), A_d(t))`.
///
/// Uses `(-1)^(d-1-m) (t(m+1)-1)^(d-1) = (-1)^m (1 - t(m+1))^(d-1)`.
pub fn moments_extended(d: Dimension, t: Threshold) -> (DoubleDouble, DoubleDouble) {
    let d = d.get();
    let t = t.get();
    let n = d - 1;
    let row = binomial_row(n);
    let mut total = DoubleDouble::ZERO;
    let mut first = DoubleDouble::ZERO;
    for (m, c) in row.iter().enumerate().take(last_index(d, t) + 1) {
        let k = (m + 1) as f64;
        let power = gap_dd(t, m).powi(n as u32);
        let mut term = DoubleDouble::from_biguint(c) * power / k;
        if m % 2 == 1 {
            term = -term;
        }
        total = total + term;
        // (1 + (d-1) t (m+1)) / (m+1) on top of the zeroth-moment term.
        let lift = DoubleDouble::ONE + DoubleDouble::from_product(t, k) * n as f64;
        first = first + term * lift / k;
    }
    (total * d as f64, first)
}

/// Exact `(T_d(t), A_d(t))` for rational `t` in `[0, 1]`.
pub fn moments_exact(d: Dimension, t: &BigRational) -> Result<(BigRational, BigRational)> {
    if t.is_negative() || *t > BigRational::one() {
        return Err(Error::OutOfUnitInterval {
            name: "t",
            value: t.to_f64().unwrap_or(f64::NAN),
        });
    }
    let d = d.get();
    let n = d - 1;
    let row = binomial_row(n);
    let one = BigRational::one();
    let mut total = BigRational::zero();
    let mut first = BigRational::zero();
    for (m, c) in row.iter().enumerate().take(last_index_exact(d, t) + 1) {
        let k = BigRational::from_integer(BigInt::from(m + 1));
        let gap = &one - t * &k;
        let mut term =
            BigRational::from_integer(BigInt::from(c.clone())) * num_traits::pow(gap, n) / &k;
        if m % 2 == 1 {
            term = -term;
        }
        let lift = &one + t * &k * BigRational::from_integer(BigInt::from(n));
        first += &term * lift / &k;
        total += term;
    }
    Ok((total * BigRational::from_integer(BigInt::from(d)), first))
}

fn exact_threshold(t: Threshold) -> BigRational {
    BigRational::from_float(t.get()).expect("thresholds are finite")
}

/// Efficiency `T_d(t)` of the threshold simulation.
pub fn eval_t(d: Dimension, t: Threshold, mode: EvalMode) -> f64 {
    match mode {
        EvalMode::Float64 | EvalMode::Extended => moments_extended(d, t).0.to_f64(),
        EvalMode::ExactRational => moments_exact(d, &exact_threshold(t))
            .map(|(total, _)| total.to_f64().unwrap_or(f64::NAN))
            .expect("threshold already validated"),
    }
}

/// First-moment function `A_d(t)` of the threshold simulation.
pub fn eval_a(d: Dimension, t: Threshold, mode: EvalMode) -> f64 {
    match mode {
        EvalMode::Float64 | EvalMode::Extended => moments_extended(d, t).1.to_f64(),
        EvalMode::ExactRational => moments_exact(d, &exact_threshold(t))
            .map(|(_, first)| first.to_f64().unwrap_or(f64::NAN))
            .expect("threshold already validated"),
    }
}

/// Term-by-term double evaluation of `T_d(t)` without error-free transformations.
///
/// Kept as a diagnostic: its distance from [`EvalMode::ExactRational`] measures
/// the cancellation in the alternating sum.
pub fn eval_t_uncompensated(d: Dimension, t: Threshold) -> f64 {
    let (d, t) = (d.get(), t.get());
    let n = d - 1;
    let row = binomial_row(n);
    let sum: f64 = row
        .iter()
        .enumerate()
        .take(last_index(d, t) + 1)
        .map(|(m, c)| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let k = (m + 1) as f64;
            sign * c.to_f64().unwrap_or(f64::INFINITY) * (1.0 - t * k).powi(n as i32) / k
        })
        .sum();
    sum * d as f64
}

/// Boundary visibility `(d A - T) / ((d-1) T)`.
fn visibility_dd(d: usize, total: DoubleDouble, first: DoubleDouble) -> DoubleDouble {
    (first * d as f64 - total) / (total * (d - 1) as f64)
}

/// Point `(t, T_d(t), p(t))` of the boundary curve.
pub fn boundary_point(d: Dimension, t: Threshold, mode: EvalMode) -> Result<BoundarySample> {
    match mode {
        EvalMode::Float64 | EvalMode::Extended => {
            let (total, first) = moments_extended(d, t);
            if t.get() >= 1.0 || total.to_f64() <= 0.0 {
                return Err(Error::DegenerateEndpoint);
            }
            Ok(BoundarySample {
                t,
                eta: total.to_f64(),
                p: visibility_dd(d.get(), total, first).to_f64(),
            })
        }
        EvalMode::ExactRational => {
            let (eta, p) = boundary_point_exact(d, &exact_threshold(t))?;
            Ok(BoundarySample {
                t,
                eta: eta.to_f64().unwrap_or(f64::NAN),
                p: p.to_f64().unwrap_or(f64::NAN),
            })
        }
    }
}

/// Exact `(eta, p)` on the boundary for rational `t < 1`.
pub fn boundary_point_exact(d: Dimension, t: &BigRational) -> Result<(BigRational, BigRational)> {
    let (total, first) = moments_exact(d, t)?;
    if total.is_zero() {
        return Err(Error::DegenerateEndpoint);
    }
    let dd = BigRational::from_integer(BigInt::from(d.get()));
    let dm1 = BigRational::from_integer(BigInt::from(d.get() - 1));
    let p = (&dd * first - &total) / (dm1 * &total);
    Ok((total, p))
}

/// Boundary efficiency `d (1-p)^(d-1)` for visibilities above one half.
pub fn simple_regime_eta(d: Dimension, p: f64) -> Result<f64> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(Error::OutsideSimpleRegime(p));
    }
    Ok(d.as_f64() * (1.0 - p).powi(d.get() as i32 - 1))
}

/// Sufficient-only efficiency bound `(1-p)^d` known for all POVMs.
pub fn povm_bound_eta(d: Dimension, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfUnitInterval {
            name: "p",
            value: p,
        });
    }
    Ok((1.0 - p).powi(d.get() as i32))
}

/// Exact harmonic number `H_d = 1 + 1/2 + ... + 1/d`.
pub fn harmonic(d: usize) -> BigRational {
    (1..=d).fold(BigRational::zero(), |acc, k| {
        acc + BigRational::new(BigInt::one(), BigInt::from(k))
    })
}

/// Visibility `(H_d - 1) / (d - 1)` of the unit-efficiency end of the boundary.
pub fn unit_efficiency_visibility_exact(d: Dimension) -> BigRational {
    (harmonic(d.get()) - BigRational::one()) / BigRational::from_integer(BigInt::from(d.get() - 1))
}

pub fn unit_efficiency_visibility(d: Dimension) -> f64 {
    unit_efficiency_visibility_exact(d)
        .to_f64()
        .unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(d: usize) -> Dimension {
        Dimension::new(d).unwrap()
    }

    fn th(t: f64) -> Threshold {
        Threshold::new(t).unwrap()
    }

    fn ratio(n: i64, m: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(m))
    }

    const MODES: [EvalMode; 3] = [
        EvalMode::Float64,
        EvalMode::Extended,
        EvalMode::ExactRational,
    ];

    #[test]
    fn efficiency_at_zero_threshold_is_one() {
        for d in 2..=20 {
            for mode in MODES {
                assert!(
                    (eval_t(dim(d), Threshold::ZERO, mode) - 1.0).abs() < 1e-14,
                    "d={d}"
                );
            }
        }
    }

    #[test]
    fn both_functions_vanish_at_one() {
        for d in 2..=12 {
            for mode in MODES {
                assert_eq!(eval_t(dim(d), Threshold::ONE, mode), 0.0);
                assert_eq!(eval_a(dim(d), Threshold::ONE, mode), 0.0);
            }
        }
    }

    #[test]
    fn qubit_three_quarters() {
        for mode in MODES {
            assert!((eval_t(dim(2), th(0.75), mode) - 0.5).abs() < 1e-15);
            assert!((eval_a(dim(2), th(0.75), mode) - 0.4375).abs() < 1e-15);
        }
        let (total, first) = moments_exact(dim(2), &ratio(3, 4)).unwrap();
        assert_eq!(total, ratio(1, 2));
        assert_eq!(first, ratio(7, 16));
    }

    #[test]
    fn qubit_first_moment_at_zero() {
        let (_, first) = moments_exact(dim(2), &BigRational::zero()).unwrap();
        assert_eq!(first, ratio(3, 4));
    }

    #[test]
    fn boundary_examples() {
        let b = boundary_point(dim(2), th(0.75), EvalMode::Float64).unwrap();
        assert!((b.eta - 0.5).abs() < 1e-15 && (b.p - 0.75).abs() < 1e-15);

        let b = boundary_point(dim(2), Threshold::ZERO, EvalMode::Float64).unwrap();
        assert_eq!((b.eta, b.p), (1.0, 0.5));

        let (eta, p) = boundary_point_exact(dim(3), &ratio(3, 5)).unwrap();
        assert_eq!(eta, ratio(12, 25));
        assert_eq!(p, ratio(3, 5));
    }

    #[test]
    fn boundary_rejects_endpoint() {
        for mode in MODES {
            assert_eq!(
                boundary_point(dim(3), Threshold::ONE, mode),
                Err(Error::DegenerateEndpoint)
            );
        }
    }

    #[test]
    fn boundary_visibility_equals_threshold_above_half() {
        for d in [2, 3, 7, 30] {
            for k in 1..50 {
                let t = 0.5 + k as f64 / 100.0;
                let b = boundary_point(dim(d), th(t), EvalMode::Float64).unwrap();
                assert!((b.p - t).abs() <= 1e-15, "d={d} t={t} p={}", b.p);
            }
        }
    }

    #[test]
    fn simple_regime_examples() {
        assert!((simple_regime_eta(dim(2), 0.6).unwrap() - 0.8).abs() < 1e-15);
        assert!((simple_regime_eta(dim(3), 0.6).unwrap() - 0.48).abs() < 1e-15);
        assert_eq!(simple_regime_eta(dim(9), 1.0).unwrap(), 0.0);
        assert_eq!(
            simple_regime_eta(dim(2), 0.5),
            Err(Error::OutsideSimpleRegime(0.5))
        );
        assert!(simple_regime_eta(dim(2), 1.2).is_err());
    }

    #[test]
    fn povm_bound_examples() {
        assert!((povm_bound_eta(dim(2), 0.6).unwrap() - 0.16).abs() < 1e-15);
        assert_eq!(povm_bound_eta(dim(7), 0.0).unwrap(), 1.0);
        assert!((povm_bound_eta(dim(3), 0.5).unwrap() - 0.125).abs() < 1e-15);
        assert!(povm_bound_eta(dim(3), -0.1).is_err());
        for d in 2..10 {
            for k in 51..=100 {
                let p = k as f64 / 100.0;
                assert!(
                    povm_bound_eta(dim(d), p).unwrap() <= simple_regime_eta(dim(d), p).unwrap()
                );
            }
        }
    }

    #[test]
    fn harmonic_numbers() {
        assert_eq!(harmonic(1), ratio(1, 1));
        assert_eq!(harmonic(2), ratio(3, 2));
        assert_eq!(harmonic(3), ratio(11, 6));
        assert_eq!(harmonic(5), ratio(137, 60));
    }

    #[test]
    fn unit_efficiency_visibilities() {
        assert_eq!(unit_efficiency_visibility_exact(dim(2)), ratio(1, 2));
        assert_eq!(unit_efficiency_visibility_exact(dim(3)), ratio(5, 12));
    }

    #[test]
    fn summation_limit_is_decided_exactly() {
        // 1/3 as a double is slightly below 1/3, so 3t < 1 and m = 2 is included.
        assert_eq!(last_index(5, 1.0 / 3.0), 2);
        assert_eq!(last_index(5, 0.5), 1);
        assert_eq!(last_index(5, 0.25), 3);
        // 0.2 as a double is slightly above 1/5, so 5t > 1 and m = 4 is excluded.
        assert_eq!(last_index(5, 0.2), 3);
        assert_eq!(last_index(5, 0.125), 4);
        assert_eq!(last_index(3, 0.0), 2);
        assert_eq!(last_index_exact(5, &ratio(1, 3)), 2);
        assert_eq!(last_index_exact(5, &ratio(1, 2)), 1);
    }

    #[test]
    fn naive_evaluation_loses_digits_at_thirty() {
        let d = dim(30);
        let t = th(0.05);
        let exact = eval_t(d, t, EvalMode::ExactRational);
        let compensated = eval_t(d, t, EvalMode::Float64);
        let naive = eval_t_uncompensated(d, t);
        assert!((compensated - exact).abs() < 1e-15);
        assert!((naive - exact).abs() > (compensated - exact).abs());
    }
}
