//! Orthogonal polynomials and Bessel-type helpers, generic over [`Real`].

use crate::Real;

/// Largest principal quantum number the recurrences are trusted for.
pub const MAX_N: u32 = 12;

/// Generalized Laguerre polynomial L_k^(α)(x) by upward recurrence.
pub fn assoc_laguerre<T: Real>(k: u32, alpha: T, x: T) -> T {
    let one = T::one();
    if k == 0 {
        return one;
    }
    let mut prev = one;
    let mut cur = one + alpha - x;
    for j in 1..k {
        let jf = T::lit(j as f64);
        let next = ((T::lit(2.0) * jf + one + alpha - x) * cur - (jf + alpha) * prev) / (jf + one);
        prev = cur;
        cur = next;
    }
    cur
}

/// Associated Legendre function P_l^m(x) without the Condon–Shortley phase.
pub fn assoc_legendre<T: Real>(l: u32, m: u32, x: T) -> T {
    assoc_legendre_cs(l, m, x, (T::one() - x * x).max(T::zero()).sqrt())
}

/// P_l^m(cos θ) from both cos θ and sin θ; avoids the cancellation in √(1−x²) near the axis.
pub fn assoc_legendre_cs<T: Real>(l: u32, m: u32, cos: T, sin: T) -> T {
    if m > l {
        return T::zero();
    }
    legendre_column(l, m, cos, double_factorial::<T>(m) * sin.powi(m as i32))
}

/// P_l^m(cos θ)/sin θ for m ≥ 1, finite on the polar axis.
pub fn assoc_legendre_over_sin<T: Real>(l: u32, m: u32, cos: T, sin: T) -> T {
    assert!(m >= 1, "P/sin is only regular for m >= 1");
    if m > l {
        return T::zero();
    }
    legendre_column(l, m, cos, double_factorial::<T>(m) * sin.powi(m as i32 - 1))
}

// Runs the fixed-m recurrence in l from a given P_m^m seed; linear in the seed.
fn legendre_column<T: Real>(l: u32, m: u32, x: T, pmm: T) -> T {
    if l == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = x * T::lit((2 * m + 1) as f64) * pmm;
    for ll in (m + 2)..=l {
        let next = (T::lit((2 * ll - 1) as f64) * x * cur - T::lit((ll + m - 1) as f64) * prev)
            / T::lit((ll - m) as f64);
        prev = cur;
        cur = next;
    }
    cur
}

/// (2m−1)!! with the convention (−1)!! = 1.
pub fn double_factorial<T: Real>(m: u32) -> T {
    let mut acc = T::one();
    let mut k = 2 * m as i64 - 1;
    while k > 1 {
        acc = acc * T::lit(k as f64);
        k -= 2;
    }
    acc
}

pub fn factorial<T: Real>(n: u32) -> T {
    (2..=n).fold(T::one(), |acc, k| acc * T::lit(k as f64))
}

/// Normalization of Θ_l^m so that Θ·e^{imφ} has unit norm on the sphere.
pub fn spherical_norm<T: Real>(l: u32, m: u32) -> T {
    let ratio = factorial::<T>(l - m) / factorial::<T>(l + m);
    (T::lit((2 * l + 1) as f64) / (T::lit(4.0) * T::PI()) * ratio).sqrt()
}

/// 3·j₁(x)/x = 3(sin x − x cos x)/x³, the Fourier profile of a uniform ball (→ 1 at 0).
pub fn ball_form_factor<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax < T::lit(0.05) {
        let x2 = x * x;
        // Taylor series; next term x^8/1_330_560 is below 1e-17 here.
        T::one() - x2 / T::lit(10.0) + x2 * x2 / T::lit(280.0) - x2 * x2 * x2 / T::lit(15120.0)
    } else {
        T::lit(3.0) * (x.sin() - x * x.cos()) / (x * x * x)
    }
}

/// Spherical Bessel j₀.
pub fn sph_j0<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        T::one() - x * x / T::lit(6.0)
    } else {
        x.sin() / x
    }
}
