//! Bernoulli polynomials and the Hurwitz zeta function.
//!
//! Bernoulli polynomials are evaluated from their monomial expansion
//! `B_n(x) = sum_k C(n, k) B_k x^(n-k)` using a fixed table of Bernoulli
//! numbers. Degrees above [`MAX_BERNOULLI_DEGREE`] are rejected; the kernel
//! only needs degree `2p` for small integer `p`.

use crate::error::{Error, Result};

/// Largest supported Bernoulli polynomial degree (smoothness `p <= 6`).
pub const MAX_BERNOULLI_DEGREE: usize = 12;

/// Bernoulli numbers `B_0 ..= B_14` (convention `B_1 = -1/2`).
const BERNOULLI_NUMBERS: [f64; 15] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
    7.0 / 6.0,
];

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Monomial coefficients of `B_degree`, lowest power first.
pub fn bernoulli_coefficients(degree: usize) -> Result<Vec<f64>> {
    if degree > MAX_BERNOULLI_DEGREE {
        return Err(Error::DegreeTooLarge {
            degree,
            max: MAX_BERNOULLI_DEGREE,
        });
    }
    // x^(n-k) carries C(n, k) B_k
    let mut coeffs = vec![0.0; degree + 1];
    for k in 0..=degree {
        coeffs[degree - k] = binomial(degree, k) * BERNOULLI_NUMBERS[k];
    }
    Ok(coeffs)
}

/// Evaluates the Bernoulli polynomial `B_degree(x)` for `x` in `[0, 1]`.
pub fn bernoulli_polynomial(degree: usize, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain {
            value: x,
            range: "[0, 1]",
        });
    }
    let coeffs = bernoulli_coefficients(degree)?;
    Ok(coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c))
}

/// Hurwitz zeta `sum_{k>=0} (k + a)^(-s)` for `s > 1`, `a > 0`.
///
/// Direct summation of the first terms followed by an Euler–Maclaurin
/// correction through `B_14`; accurate to a few ulps for the `s` and `a`
/// ranges used by the kernel symbols.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    debug_assert!(s > 1.0 && a > 0.0);
    let head: f64 = (0..HURWITZ_TERMS).rev().map(|k| (k as f64 + a).powf(-s)).sum();
    head + hurwitz_tail(s, a)
}

/// `a^s * hurwitz_zeta(s, a)`, finite for large `s` where both factors
/// over- or underflow.
pub fn hurwitz_zeta_scaled(s: f64, a: f64) -> f64 {
    debug_assert!(s > 1.0 && a > 0.0);
    let head: f64 = (0..HURWITZ_TERMS).rev().map(|k| (1.0 + k as f64 / a).powf(-s)).sum();
    let tail = hurwitz_tail(s, a);
    if tail == 0.0 {
        head
    } else {
        head + a.powf(s) * tail
    }
}

const HURWITZ_TERMS: usize = 16;

fn hurwitz_tail(s: f64, a: f64) -> f64 {
    let w = HURWITZ_TERMS as f64 + a;
    let mut tail = w.powf(1.0 - s) / (s - 1.0) + 0.5 * w.powf(-s);
    // rising factorial (s)_{2j-1} and (2j)!
    let mut rising = s;
    let mut factorial = 2.0;
    let mut power = w.powf(-s - 1.0);
    for j in 1..=7 {
        tail += BERNOULLI_NUMBERS[2 * j] / factorial * rising * power;
        let jf = j as f64;
        rising *= (s + 2.0 * jf - 1.0) * (s + 2.0 * jf);
        factorial *= (2.0 * jf + 1.0) * (2.0 * jf + 2.0);
        power /= w * w;
    }
    tail
}

/// Riemann zeta for `s > 1`.
pub fn riemann_zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}
