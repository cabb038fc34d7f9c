//! Radial kernel and dimensional constants.
//!
//! The kernel `k_{d-2}` is the increasing radial profile of the fundamental
//! solution of the Laplacian in dimension `d`: the identity for `d = 1`, the
//! logarithm for `d = 2`, and `-t^{2-d}` for `d >= 3`. Everything downstream
//! (Green functions, counting functions, Harnack denominators) is written in
//! terms of this kernel and the normalising constants [`sphere_area`] and
//! [`dhat`].

use crate::extreal::ExtReal;
use crate::numeric::gamma;

/// Surface area of the unit sphere in `R^d`: `2 pi^{d/2} / Gamma(d/2)`.
///
/// `d = 1` gives 2 (two endpoint "directions"), `d = 2` gives `2 pi`,
/// `d = 3` gives `4 pi`.
pub fn sphere_area(d: u32) -> f64 {
    assert!(d >= 1, "dimension must be at least 1");
    // Exact closed forms in the dimensions the rest of the crate certifies
    // bounds in; `gamma` carries a few ulps of error that would otherwise
    // leak into every constant downstream.
    match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        4 => 2.0 * std::f64::consts::PI * std::f64::consts::PI,
        _ => {
            let half = f64::from(d) / 2.0;
            2.0 * std::f64::consts::PI.powf(half) / gamma(half)
        }
    }
}

/// `max(1, d - 2)`: the factor that makes the kernel derivative
/// `dhat * t^{1-d} * t^{d-2-...}` integrate cleanly in every dimension.
pub fn dhat(d: u32) -> f64 {
    assert!(d >= 1, "dimension must be at least 1");
    1.0f64.max(f64::from(d) - 2.0)
}

/// The kernel `k_{d-2}(t)` for `t >= 0`.
///
/// Strictly increasing in `t`. At `t = 0` it takes its limit value: 0 for
/// `d = 1` and minus infinity for `d >= 2`.
pub fn kernel_k(d: u32, t: f64) -> ExtReal {
    assert!(d >= 1, "dimension must be at least 1");
    assert!(t >= 0.0 && !t.is_nan(), "radius must be nonnegative");
    match d {
        1 => ExtReal::Finite(t),
        2 => {
            if t == 0.0 {
                ExtReal::NegInf
            } else {
                ExtReal::Finite(t.ln())
            }
        }
        _ => {
            if t == 0.0 {
                ExtReal::NegInf
            } else {
                ExtReal::Finite(-t.powi(-(d as i32 - 2)))
            }
        }
    }
}

/// `k_{d-2}(b) - k_{d-2}(a)` for `0 <= a <= b`, computed without the
/// cancellation the naive difference suffers when `a` and `b` are close
/// (`ln(b/a)` for `d = 2`, a stable two-term form for `d >= 3`).
///
/// Returns `PosInf` when `a = 0` in dimension at least 2.
pub fn kernel_diff(d: u32, a: f64, b: f64) -> ExtReal {
    assert!(d >= 1, "dimension must be at least 1");
    assert!(
        0.0 <= a && a <= b && !b.is_nan(),
        "need 0 <= a <= b, got a={a}, b={b}"
    );
    match d {
        1 => ExtReal::Finite(b - a),
        2 => {
            if a == 0.0 {
                ExtReal::PosInf
            } else {
                ExtReal::Finite((b / a).ln())
            }
        }
        _ => {
            if a == 0.0 {
                ExtReal::PosInf
            } else {
                let p = d as i32 - 2;
                ExtReal::Finite(a.powi(-p) - b.powi(-p))
            }
        }
    }
}

/// Fundamental solution `k_{d-2}(|y - x|) / (sphere_area(d) * dhat(d))` of
/// the Laplacian, normalised so that its distributional Laplacian is the
/// unit point mass at `x`.
pub fn fundamental_solution(d: u32, distance: f64) -> ExtReal {
    kernel_k(d, distance) * (1.0 / (sphere_area(d) * dhat(d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn sphere_areas_match_closed_forms() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-12);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-12);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
        // d = 4: 2 pi^2.
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-11);
    }

    #[test]
    fn dhat_kinks_at_dimension_three() {
        assert_eq!(dhat(1), 1.0);
        assert_eq!(dhat(2), 1.0);
        assert_eq!(dhat(3), 1.0);
        assert_eq!(dhat(4), 2.0);
        assert_eq!(dhat(5), 3.0);
    }

    #[test]
    fn kernel_reference_values() {
        assert_eq!(kernel_k(1, 0.75), ExtReal::Finite(0.75));
        assert_eq!(kernel_k(2, 1.0), ExtReal::Finite(0.0));
        assert_eq!(kernel_k(3, 0.5), ExtReal::Finite(-2.0));
        assert_eq!(kernel_k(1, 0.0), ExtReal::Finite(0.0));
        assert_eq!(kernel_k(2, 0.0), ExtReal::NegInf);
        assert_eq!(kernel_k(5, 0.0), ExtReal::NegInf);
        // d = 5: -1/t^3.
        let v = kernel_k(5, 2.0).finite().unwrap();
        assert!((v - (-0.125)).abs() < 1e-15);
    }

    #[test]
    fn fundamental_solution_reference_values() {
        // d = 3, |y-x| = 1: -1 / (4 pi).
        let v = fundamental_solution(3, 1.0).finite().unwrap();
        assert!((v + 1.0 / (4.0 * PI)).abs() < 1e-13);
        // d = 2, |y-x| = e: 1 / (2 pi).
        let v = fundamental_solution(2, std::f64::consts::E)
            .finite()
            .unwrap();
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-13);
        assert_eq!(fundamental_solution(3, 0.0), ExtReal::NegInf);
    }

    #[test]
    fn kernel_diff_agrees_with_direct_difference_when_safe() {
        for d in [1u32, 2, 3, 4, 5] {
            let (a, b) = (0.3, 1.7);
            let direct = kernel_k(d, b) - kernel_k(d, a);
            let stable = kernel_diff(d, a, b);
            let err = (direct.to_f64() - stable.to_f64()).abs();
            assert!(err < 1e-12, "d={d} err={err}");
        }
        assert_eq!(kernel_diff(2, 0.0, 1.0), ExtReal::PosInf);
        assert_eq!(kernel_diff(1, 0.0, 1.0), ExtReal::Finite(1.0));
    }

    proptest! {
        #[test]
        fn kernel_is_strictly_increasing(
            d in 1u32..6,
            a in 1e-9f64..100.0,
            gap in 1e-9f64..100.0,
        ) {
            let b = a + gap;
            prop_assert!(kernel_k(d, a) < kernel_k(d, b));
        }

        #[test]
        fn kernel_diff_is_nonnegative(
            d in 1u32..6,
            a in 0.0f64..100.0,
            gap in 0.0f64..100.0,
        ) {
            let b = a + gap;
            prop_assert!(kernel_diff(d, a, b) >= ExtReal::Finite(0.0));
        }
    }
}
