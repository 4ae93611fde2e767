//! Exact water-filling solve for the uniform rule's common level λ.
//!
//! `F(λ) = Σ min(p_j, λ)` and `G(λ) = Σ max(p_j, λ)` are monotone and
//! piecewise linear with breakpoints at the peaks, so sorting the peaks and
//! scanning the segments gives λ in closed form.

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};
use std::cmp::Ordering;

fn sorted<T: Scalar>(peaks: &[T]) -> Vec<T> {
    let mut v = peaks.to_vec();
    v.sort_by(|a, b| a.approx_cmp(b));
    v
}

/// λ with `Σ min(p_j, λ) = omega` under excess demand (`Σ p ≥ omega`).
///
/// In the balanced case every λ ≥ max p works; the maximum peak is returned.
pub fn solve_lambda_demand<T: Scalar>(peaks: &[T], omega: &T) -> Result<T> {
    if peaks.is_empty() {
        return Err(Error::Infeasible("no agents".into()));
    }
    let total: T = peaks.iter().cloned().sum();
    match total.approx_cmp(omega) {
        Ordering::Less => {
            return Err(Error::Infeasible(format!(
                "sum of peaks {total} is below the endowment {omega}"
            )))
        }
        Ordering::Equal => return Ok(sorted(peaks).pop().expect("nonempty")),
        Ordering::Greater => {}
    }
    let asc = sorted(peaks);
    let n = asc.len();
    // `below` is the sum of the k smallest peaks, all fully served at λ.
    let mut below = T::zero();
    for (k, p) in asc.iter().enumerate() {
        let lambda = (omega.clone() - below.clone()) / T::of_usize(n - k);
        if scalar::le(&lambda, p) {
            return Ok(lambda);
        }
        below = below + p.clone();
    }
    Err(Error::Internal("demand breakpoint scan fell through".into()))
}

/// λ with `Σ max(p_j, λ) = omega` under excess supply (`Σ p ≤ omega`).
///
/// In the balanced case λ = 0 is returned.
pub fn solve_lambda_supply<T: Scalar>(peaks: &[T], omega: &T) -> Result<T> {
    if peaks.is_empty() {
        return Err(Error::Infeasible("no agents".into()));
    }
    let total: T = peaks.iter().cloned().sum();
    match total.approx_cmp(omega) {
        Ordering::Greater => {
            return Err(Error::Infeasible(format!(
                "sum of peaks {total} exceeds the endowment {omega}"
            )))
        }
        Ordering::Equal => return Ok(T::zero()),
        Ordering::Less => {}
    }
    let mut desc = sorted(peaks);
    desc.reverse();
    let n = desc.len();
    // `above` is the sum of the k largest peaks, all kept at their peak.
    let mut above = T::zero();
    for (k, p) in desc.iter().enumerate() {
        let lambda = (omega.clone() - above.clone()) / T::of_usize(n - k);
        if scalar::le(p, &lambda) {
            return Ok(lambda);
        }
        above = above + p.clone();
    }
    Err(Error::Internal("supply breakpoint scan fell through".into()))
}

/// Bisection for a nondecreasing `f` on `[lo, hi]`.
///
/// Returns λ with `|f(λ) - target| <= tol`. Intended as an independent check
/// on the closed-form solver.
pub fn bisection_oracle<T, F>(f: F, target: &T, lo: &T, hi: &T, tol: &T) -> Result<T>
where
    T: Scalar,
    F: Fn(&T) -> T,
{
    const MAX_ITERATIONS: usize = 4096;
    if *tol <= T::zero() {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let close = |v: &T| (v.clone() - target.clone()).abs() <= *tol;
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo.clone() - target.clone() > *tol || target.clone() - f_hi.clone() > *tol {
        return Err(Error::Bracket {
            lo: f_lo.to_string(),
            hi: f_hi.to_string(),
            target: target.to_string(),
        });
    }
    if close(&f_lo) {
        return Ok(lo.clone());
    }
    if close(&f_hi) {
        return Ok(hi.clone());
    }
    let (mut a, mut b) = (lo.clone(), hi.clone());
    for _ in 0..MAX_ITERATIONS {
        let mid = (a.clone() + b.clone()) / T::two();
        let v = f(&mid);
        if close(&v) {
            return Ok(mid);
        }
        if v < *target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(Error::NoConvergence(MAX_ITERATIONS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rational};
    use num_traits::Signed;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        ratio(n, d)
    }

    fn ints(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    fn sum_min(peaks: &[f64], l: f64) -> f64 {
        peaks.iter().map(|p| p.min(l)).sum()
    }

    fn sum_max(peaks: &[f64], l: f64) -> f64 {
        peaks.iter().map(|p| p.max(l)).sum()
    }

    #[test]
    fn oracle_values_frozen() {
        // Expected values below were produced by the bisection oracle.
        let l = bisection_oracle(|&l| sum_min(&[2.0, 4.0, 6.0], l), &9.0, &0.0, &6.0, &1e-9).unwrap();
        assert!((l - 3.5).abs() < 1e-8);
        let l = bisection_oracle(|&l| sum_min(&[5.0, 5.0], l), &4.0, &0.0, &5.0, &1e-9).unwrap();
        assert!((l - 2.0).abs() < 1e-8);
        let l = bisection_oracle(|&l| sum_max(&[1.0, 2.0, 3.0], l), &9.0, &0.0, &9.0, &1e-9).unwrap();
        assert!((l - 3.0).abs() < 1e-8);
        let l = bisection_oracle(|&l| sum_max(&[0.0, 0.0, 3.5], l), &9.0, &0.0, &9.0, &1e-9).unwrap();
        assert!((l - 2.75).abs() < 1e-8);
    }

    #[test]
    fn demand_examples() {
        assert_eq!(solve_lambda_demand(&ints(&[2, 4, 6]), &int(9)).unwrap(), q(7, 2));
        assert_eq!(solve_lambda_demand(&ints(&[1, 2, 3]), &int(6)).unwrap(), int(3));
        assert_eq!(solve_lambda_demand(&ints(&[5, 5]), &int(4)).unwrap(), int(2));
        assert!(matches!(
            solve_lambda_demand(&ints(&[1, 2]), &int(9)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn supply_examples() {
        assert_eq!(solve_lambda_supply(&ints(&[1, 2, 3]), &int(9)).unwrap(), int(3));
        assert_eq!(
            solve_lambda_supply(&[int(0), int(0), q(7, 2)], &int(9)).unwrap(),
            q(11, 4)
        );
        assert_eq!(solve_lambda_supply(&ints(&[1, 2, 3]), &int(6)).unwrap(), int(0));
        assert!(matches!(
            solve_lambda_supply(&ints(&[5, 5]), &int(4)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(bisection_oracle(|x: &f64| *x, &5.0, &0.0, &10.0, &1e-12).unwrap(), 5.0);
        assert!(matches!(
            bisection_oracle(|_: &f64| 1.0, &5.0, &0.0, &10.0, &1e-9),
            Err(Error::Bracket { .. })
        ));
        assert!(bisection_oracle(|x: &f64| *x, &5.0, &0.0, &10.0, &0.0).is_err());
    }

    #[test]
    fn oracle_works_on_rationals() {
        let peaks = ints(&[2, 4, 6]);
        let f = |l: &Rational| peaks.iter().map(|p| scalar::min(p, l)).sum::<Rational>();
        let l = bisection_oracle(f, &int(9), &int(0), &int(6), &q(1, 1_000_000)).unwrap();
        assert!((l - q(7, 2)).abs() <= q(1, 1_000_000));
    }

    fn arb_peaks() -> impl Strategy<Value = Vec<Rational>> {
        proptest::collection::vec((0i64..60, 1i64..6), 1..12)
            .prop_map(|v| v.into_iter().map(|(n, d)| q(n, d)).collect())
    }

    proptest! {
        #[test]
        fn demand_matches_definition(peaks in arb_peaks(), frac in 1i64..100) {
            let total: Rational = peaks.iter().cloned().sum();
            prop_assume!(total > int(0));
            let omega = total * q(frac, 100);
            let l = solve_lambda_demand(&peaks, &omega).unwrap();
            prop_assert!(l >= int(0));
            let s: Rational = peaks.iter().map(|p| scalar::min(p, &l)).sum();
            prop_assert_eq!(s, omega);
        }

        #[test]
        fn supply_matches_definition(peaks in arb_peaks(), extra in 0i64..100) {
            let total: Rational = peaks.iter().cloned().sum();
            let omega = total + q(extra, 7);
            prop_assume!(omega > int(0));
            let l = solve_lambda_supply(&peaks, &omega).unwrap();
            let s: Rational = peaks.iter().map(|p| scalar::max(p, &l)).sum();
            prop_assert_eq!(s, omega.clone());
            prop_assert!(l.clone() * Rational::of_usize(peaks.len()) <= omega);
        }
    }
}
