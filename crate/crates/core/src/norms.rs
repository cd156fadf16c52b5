//! Fourier-weighted periodic Sobolev norms of fields on isotropic grids.
//!
//! The hybrid norm of order `(s, t)` uses the weight
//! `w(m) = sum_i sigma_{s+t}(m_i) prod_{j != i} sigma_t(m_j)` with
//! `sigma_r(0) = 1` and `sigma_r(k) = (2 pi |k|)^{2r}`. `(s, 0)` is the
//! isotropic norm, `(0, t)` the mixed norm up to the factor `d`, and `(0, 0)`
//! the `L^2` norm up to the same factor.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{dft_nd, signed_frequency};
use crate::tensor::GridFunctionND;

/// Fourier coefficients on the isotropic grid of level `fine_level`,
/// standard DFT layout, normalized to true Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    pub fine_level: usize,
    pub d: usize,
    pub coeffs: Vec<Complex64>,
}

impl FourierField {
    pub fn n(&self) -> usize {
        1 << self.fine_level
    }

    /// Coefficient of the integer frequency `m`, which must lie in the
    /// signed range of the grid.
    pub fn coeff(&self, m: &[i64]) -> Complex64 {
        debug_assert_eq!(m.len(), self.d);
        let n = self.n() as i64;
        let flat = m
            .iter()
            .fold(0usize, |acc, &k| acc * n as usize + k.rem_euclid(n) as usize);
        self.coeffs[flat]
    }

    /// Frequency vector of flat position `flat`.
    pub fn frequency(&self, flat: usize) -> Vec<i64> {
        let n = self.n();
        let mut m = vec![0i64; self.d];
        let mut rest = flat;
        for axis in (0..self.d).rev() {
            m[axis] = signed_frequency(rest % n, n);
            rest /= n;
        }
        m
    }

    /// Largest admissible truncation: the Nyquist index of the grid.
    pub fn nyquist(&self) -> usize {
        (self.n() / 2).max(1)
    }

    pub fn sub(&self, other: &FourierField) -> Result<FourierField> {
        if self.fine_level != other.fine_level || self.d != other.d {
            return Err(Error::LevelMismatch(format!(
                "fields at level {} (d={}) and {} (d={})",
                self.fine_level, self.d, other.fine_level, other.d
            )));
        }
        Ok(FourierField {
            fine_level: self.fine_level,
            d: self.d,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }
}

/// Orders of the hybrid norm: `s` isotropic, `t` mixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: f64,
    pub t: f64,
}

impl NormSpec {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        let spec = Self { s, t };
        spec.validate()?;
        Ok(spec)
    }

    pub fn l2() -> Self {
        Self { s: 0.0, t: 0.0 }
    }

    pub fn iso(s: f64) -> Self {
        Self { s, t: 0.0 }
    }

    pub fn mixed(t: f64) -> Self {
        Self { s: 0.0, t }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 0.0 && self.t >= 0.0 && self.s.is_finite() && self.t.is_finite()) {
            return Err(Error::Config(format!(
                "norm orders must be finite and non-negative, got s={} t={}",
                self.s, self.t
            )));
        }
        Ok(())
    }
}

fn sigma(r: f64, k: i64) -> f64 {
    if k == 0 {
        1.0
    } else {
        (2.0 * PI * k.unsigned_abs() as f64).powf(2.0 * r)
    }
}

pub fn sobolev_weight(spec: &NormSpec, m: &[i64]) -> f64 {
    let outer: Vec<f64> = m.iter().map(|&k| sigma(spec.s + spec.t, k)).collect();
    let inner: Vec<f64> = m.iter().map(|&k| sigma(spec.t, k)).collect();
    (0..m.len())
        .map(|i| {
            let rest: f64 = (0..m.len()).filter(|&j| j != i).map(|j| inner[j]).product();
            outer[i] * rest
        })
        .sum()
}

/// Normalized DFT of samples on an isotropic grid.
pub fn to_fourier(samples: &GridFunctionND) -> Result<FourierField> {
    if !samples.levels.is_isotropic() {
        return Err(Error::LevelMismatch(format!(
            "norms need an isotropic grid, got levels {:?}",
            samples.levels.levels
        )));
    }
    let shape = samples.levels.shape();
    let scale = 1.0 / samples.values.len() as f64;
    let mut coeffs = dft_nd(&samples.values, &shape);
    coeffs.iter_mut().for_each(|c| *c *= scale);
    Ok(FourierField {
        fine_level: samples.levels.levels[0],
        d: samples.levels.dim(),
        coeffs,
    })
}

/// `sqrt(sum_{|m|_inf < truncation} w(m) |coeff(m)|^2)`.
pub fn norm(field: &FourierField, spec: &NormSpec, truncation: usize) -> Result<f64> {
    spec.validate()?;
    if truncation > field.nyquist() {
        return Err(Error::BandLimit {
            band_limit: truncation,
            nyquist: field.nyquist(),
        });
    }
    let cap = truncation as u64;
    let total: f64 = (0..field.coeffs.len())
        .filter_map(|flat| {
            let m = field.frequency(flat);
            if m.iter().all(|k| k.unsigned_abs() < cap) {
                Some(sobolev_weight(spec, &m) * field.coeffs[flat].norm_sqr())
            } else {
                None
            }
        })
        .sum();
    Ok(total.sqrt())
}

/// Norm at the default (Nyquist) truncation.
pub fn full_norm(field: &FourierField, spec: &NormSpec) -> Result<f64> {
    norm(field, spec, field.nyquist())
}

/// Norm of `approx - exact` on their common isotropic grid.
pub fn error_norm(approx_fine: &GridFunctionND, exact_fine: &GridFunctionND, spec: &NormSpec) -> Result<f64> {
    let diff = approx_fine.sub(exact_fine)?;
    full_norm(&to_fourier(&diff)?, spec)
}
