//! The reproducing kernel of the periodic Sobolev space `H^p(T)` and exact
//! FFT solves of the equidistant kernel systems.
//!
//! The kernel is
//!
//! ```text
//! k(x, y) = 1 + sum_{m != 0} (2 pi |m|)^(-2p) exp(2 pi i m (x - y))
//! ```
//!
//! which for integer `p` has the Bernoulli closed form
//! `1 + (-1)^(p+1) / (2p)! * B_2p(|x - y|)`.
//!
//! On the grid `x_{j,k} = k 2^-j` the kernel matrix is circulant. Its
//! eigenvalues are the aliased Fourier symbol
//! `lambda_r = n * sum_{m = r mod n} g(m)` with `g(0) = 1`,
//! `g(m) = (2 pi |m|)^(-2p)`, which is evaluated with Hurwitz zeta sums.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fourier::{circulant_along_axis, dft_real, idft, SymbolOp};
use crate::special::{bernoulli_polynomial, hurwitz_zeta_scaled, riemann_zeta, MAX_BERNOULLI_DEGREE};

/// Default absolute tolerance for the certified series evaluation.
pub const DEFAULT_SERIES_TOLERANCE: f64 = 1e-12;

/// Eigenvalues with magnitude below this are treated as singular.
pub const CONDITIONING_FLOOR: f64 = 1e-300;

/// Largest number of explicit series terms `kernel_eval` will sum.
pub const SERIES_TERM_BUDGET: u64 = 1 << 26;

/// Largest grid level accepted by [`build_circulant`].
pub const MAX_LEVEL: usize = 26;

/// Order of the summation-by-parts tail correction in series mode.
const TAIL_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// Bernoulli polynomial form; integer `p` only.
    ClosedForm,
    /// Fourier series with certified truncation.
    TruncatedSeries,
}

/// Smoothness order and evaluation strategy of the univariate kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub p: f64,
    pub mode: KernelMode,
    pub series_tolerance: f64,
}

impl KernelSpec {
    pub fn new(p: f64, mode: KernelMode, series_tolerance: f64) -> Result<Self> {
        let spec = Self {
            p,
            mode,
            series_tolerance,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn closed_form(p: u32) -> Result<Self> {
        Self::new(p as f64, KernelMode::ClosedForm, DEFAULT_SERIES_TOLERANCE)
    }

    pub fn series(p: f64) -> Result<Self> {
        Self::new(p, KernelMode::TruncatedSeries, DEFAULT_SERIES_TOLERANCE)
    }

    /// Closed form whenever `p` is a supported integer, series otherwise.
    pub fn auto(p: f64) -> Result<Self> {
        if p.fract() == 0.0 && p >= 1.0 && 2.0 * p <= MAX_BERNOULLI_DEGREE as f64 {
            Self::closed_form(p as u32)
        } else {
            Self::series(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.p.is_finite() || self.p <= 0.5 {
            return Err(Error::InvalidSpec(format!(
                "smoothness p = {} must exceed 1/2",
                self.p
            )));
        }
        if self.series_tolerance.is_nan() || self.series_tolerance <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "series tolerance {} must be positive",
                self.series_tolerance
            )));
        }
        if self.mode == KernelMode::ClosedForm {
            if self.p.fract() != 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "closed form needs integer p, got {}",
                    self.p
                )));
            }
            if 2.0 * self.p > MAX_BERNOULLI_DEGREE as f64 {
                return Err(Error::InvalidSpec(format!(
                    "closed form supports p <= {}, got {}",
                    MAX_BERNOULLI_DEGREE / 2,
                    self.p
                )));
            }
        }
        Ok(())
    }

    /// Fourier symbol `g(m)` of the kernel.
    pub fn symbol(&self, m: i64) -> f64 {
        if m == 0 {
            1.0
        } else {
            (2.0 * PI * m.unsigned_abs() as f64).powf(-2.0 * self.p)
        }
    }
}

fn check_unit(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            value: v,
            range: "[0, 1]",
        })
    }
}

/// Evaluates `k(x, y)` for `x, y` in `[0, 1]`.
pub fn kernel_eval(spec: &KernelSpec, x: f64, y: f64) -> Result<f64> {
    spec.validate()?;
    check_unit(x)?;
    check_unit(y)?;
    let delta = (x - y).abs();
    match spec.mode {
        KernelMode::ClosedForm => {
            let p = spec.p as usize;
            let factorial: f64 = (1..=2 * p).map(|i| i as f64).product();
            let sign = if p % 2 == 1 { 1.0 } else { -1.0 };
            Ok(1.0 + sign / factorial * bernoulli_polynomial(2 * p, delta)?)
        }
        KernelMode::TruncatedSeries => series_kernel(spec.p, delta, spec.series_tolerance),
    }
}

/// Series evaluation with a certified absolute error below `tol`.
///
/// The partial sum stops at the smaller of two truncation points: the
/// monotone bound `2 (2 pi)^-2p K^(1-2p) / (2p - 1) < tol`, or a partial sum
/// followed by a summation-by-parts correction of the oscillatory tail,
/// whose remainder after `r` steps is bounded by
/// `(2p)_r M^(-2p-r) / (|sin(pi d)| (2 |sin(pi d)|)^r)`.
fn series_kernel(p: f64, delta: f64, tol: f64) -> Result<f64> {
    let s = 2.0 * p;
    let scale = 2.0 * (2.0 * PI).powf(-s);
    let half_angle = (PI * delta).sin().abs();
    if delta == 0.0 || delta == 1.0 || half_angle == 0.0 {
        return Ok(1.0 + scale * riemann_zeta(s));
    }

    let plain_terms = ((scale / ((s - 1.0) * tol)).powf(1.0 / (s - 1.0))).floor() + 1.0;
    let rising: f64 = (0..TAIL_ORDER).map(|i| s + i as f64).product();
    let tail_start = (scale * rising
        / (tol * half_angle * (2.0 * half_angle).powi(TAIL_ORDER as i32)))
    .powf(1.0 / (s + TAIL_ORDER as f64))
    .ceil()
    .max(1.0);
    let corrected_terms = tail_start - 1.0;

    let (terms, corrected) = if plain_terms <= corrected_terms {
        (plain_terms, false)
    } else {
        (corrected_terms, true)
    };
    if terms > SERIES_TERM_BUDGET as f64 {
        return Err(Error::SeriesBudget {
            budget: SERIES_TERM_BUDGET,
        });
    }
    let terms = terms as u64;

    let mut partial = 0.0;
    for m in (1..=terms).rev() {
        let phase = (m as f64 * delta).fract();
        partial += (m as f64).powf(-s) * (2.0 * PI * phase).cos();
    }
    if corrected {
        let start = terms + 1;
        let z = Complex64::from_polar(1.0, 2.0 * PI * delta);
        let one_minus_z = Complex64::new(1.0, 0.0) - z;
        let mut diffs: Vec<f64> = (0..=TAIL_ORDER)
            .map(|i| ((start + i as u64) as f64).powf(-s))
            .collect();
        let mut tail = Complex64::new(0.0, 0.0);
        for i in 0..TAIL_ORDER {
            // diffs[i] is the i-th backward difference at start + i
            let m = start + i as u64;
            let phase = (m as f64 * delta).fract();
            tail += diffs[i] * Complex64::from_polar(1.0, 2.0 * PI * phase)
                / one_minus_z.powu(i as u32 + 1);
            for k in (i + 1..=TAIL_ORDER).rev() {
                diffs[k] -= diffs[k - 1];
            }
        }
        partial += tail.re;
    }
    Ok(1.0 + scale * partial)
}

/// Circulant kernel matrix on the level-`j` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CirculantKernelMatrix {
    pub spec: KernelSpec,
    pub level: usize,
    pub n: usize,
    /// `k(x_{j,0}, x_{j,k})`
    pub first_row: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

impl CirculantKernelMatrix {
    /// Dense `n x n` matrix, entry `(k, k')` = `first_row[(k - k') mod n]`.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        (0..n)
            .map(|k| (0..n).map(|kp| self.first_row[(k + n - kp) % n]).collect())
            .collect()
    }

    /// Eigenvalues recomputed as the DFT of the first row.
    ///
    /// Fails if the imaginary residue exceeds `1e-12` (relative to the
    /// largest eigenvalue), which would indicate a non-symmetric first row.
    pub fn dft_eigenvalues(&self) -> Result<Vec<f64>> {
        let spectrum = dft_real(&self.first_row);
        let scale = spectrum.iter().map(|c| c.norm()).fold(1.0, f64::max);
        if let Some((mode, c)) = spectrum
            .iter()
            .enumerate()
            .find(|(_, c)| c.im.abs() > 1e-12 * scale)
        {
            return Err(Error::InvalidSpec(format!(
                "first row is not symmetric: imaginary eigenvalue part {:e} at mode {mode}",
                c.im
            )));
        }
        Ok(spectrum.iter().map(|c| c.re).collect())
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        circulant_along_axis(values, &[self.n], 0, self.n, &self.eigenvalues, SymbolOp::Multiply)
    }
}

/// `n * sum_{m = r mod n} g(m)` for `r` in `0..n`.
fn aliased_symbol(p: f64, n: usize) -> Vec<f64> {
    let s = 2.0 * p;
    let nf = n as f64;
    let scale = (2.0 * PI * nf).powf(-s);
    let mut out = vec![0.0; n];
    for r in 0..=n / 2 {
        let value = if r == 0 {
            1.0 + 2.0 * scale * riemann_zeta(s)
        } else {
            // scale * zeta(s, a) = (2 pi r)^-s * a^s zeta(s, a)
            let a = r as f64 / nf;
            let near = (2.0 * PI * r as f64).powf(-s) * hurwitz_zeta_scaled(s, a);
            let far = (2.0 * PI * (n - r) as f64).powf(-s) * hurwitz_zeta_scaled(s, 1.0 - a);
            near + far
        };
        out[r] = nf * value;
        out[(n - r) % n] = nf * value;
    }
    out
}

/// Builds the level-`level` kernel matrix.
pub fn build_circulant(spec: &KernelSpec, level: usize) -> Result<CirculantKernelMatrix> {
    spec.validate()?;
    if level > MAX_LEVEL {
        return Err(Error::SizeBudget(format!(
            "grid level {level} exceeds the maximum {MAX_LEVEL}"
        )));
    }
    let n = 1usize << level;
    let eigenvalues = aliased_symbol(spec.p, n);
    let first_row = match spec.mode {
        KernelMode::ClosedForm => (0..n)
            .map(|k| kernel_eval(spec, 0.0, k as f64 / n as f64))
            .collect::<Result<Vec<_>>>()?,
        KernelMode::TruncatedSeries => {
            let spectrum: Vec<Complex64> =
                eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)).collect();
            idft(&spectrum).iter().map(|c| c.re).collect()
        }
    };
    Ok(CirculantKernelMatrix {
        spec: *spec,
        level,
        n,
        first_row,
        eigenvalues,
    })
}

/// Samples on the level-`j` grid; entry `k` is the value at `k 2^-j`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction1D {
    pub level: usize,
    pub values: Vec<f64>,
}

impl GridFunction1D {
    pub fn new(level: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 1usize << level {
            return Err(Error::LevelMismatch(format!(
                "{} values on a level-{level} grid",
                values.len()
            )));
        }
        Ok(Self { level, values })
    }

    pub fn from_fn(level: usize, f: impl Fn(f64) -> f64) -> Self {
        let n = 1usize << level;
        Self {
            level,
            values: (0..n).map(|k| f(k as f64 / n as f64)).collect(),
        }
    }
}

/// `u_j(x) = sum_k u_{j,k} k(x, x_{j,k})`
#[derive(Clone, Debug, PartialEq)]
pub struct KernelInterpolant1D {
    pub spec: KernelSpec,
    pub level: usize,
    pub coefficients: Vec<f64>,
}

impl KernelInterpolant1D {
    /// Pointwise evaluation by direct summation.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let n = self.coefficients.len() as f64;
        self.coefficients
            .iter()
            .enumerate()
            .try_fold(0.0, |acc, (k, &u)| {
                Ok(acc + u * kernel_eval(&self.spec, x, k as f64 / n)?)
            })
    }
}

fn check_conditioning(eigenvalues: &[f64]) -> Result<()> {
    match eigenvalues
        .iter()
        .enumerate()
        .find(|(_, l)| l.is_nan() || l.abs() < CONDITIONING_FLOOR)
    {
        Some((mode, &value)) => Err(Error::Conditioning { mode, value }),
        None => Ok(()),
    }
}

/// Solves `K_j u = f` by dividing the DFT of `f` by the eigenvalues.
pub fn solve_1d(
    matrix: &CirculantKernelMatrix,
    samples: &GridFunction1D,
) -> Result<KernelInterpolant1D> {
    if matrix.level != samples.level {
        return Err(Error::LevelMismatch(format!(
            "matrix level {} vs sample level {}",
            matrix.level, samples.level
        )));
    }
    check_conditioning(&matrix.eigenvalues)?;
    let coefficients = circulant_along_axis(
        &samples.values,
        &[matrix.n],
        0,
        matrix.n,
        &matrix.eigenvalues,
        SymbolOp::Divide,
    );
    Ok(KernelInterpolant1D {
        spec: matrix.spec,
        level: matrix.level,
        coefficients,
    })
}

/// Samples the interpolant on the finer grid `X_{fine_level}`.
pub fn eval_1d_on_fine(interp: &KernelInterpolant1D, fine_level: usize) -> Result<GridFunction1D> {
    if fine_level < interp.level {
        return Err(Error::LevelMismatch(format!(
            "fine level {fine_level} below interpolant level {}",
            interp.level
        )));
    }
    let fine = build_circulant(&interp.spec, fine_level)?;
    let values = circulant_along_axis(
        &interp.coefficients,
        &[interp.coefficients.len()],
        0,
        fine.n,
        &fine.eigenvalues,
        SymbolOp::Multiply,
    );
    GridFunction1D::new(fine_level, values)
}

pub(crate) fn conditioning_check(matrix: &CirculantKernelMatrix) -> Result<()> {
    check_conditioning(&matrix.eigenvalues)
}
