//! Seeded target functions with prescribed Sobolev regularity.
//!
//! Spectral families are real trigonometric polynomials
//! `u(x) = sum_{|m|_inf <= B} a_m e^{2 pi i m.x}` with `a_{-m} = a_m` real.
//! Their signs `eps_m` come from a ChaCha8 stream keyed by the seed and by
//! the canonical representative of `{m, -m}`, so a coefficient does not
//! depend on the band limit `B` it is generated under.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::idft_nd_unnormalized;
use crate::norms::{to_fourier, FourierField};
use crate::tensor::{GridFunctionND, LevelIndex, GRID_POINT_BUDGET};

/// Margin added to the decay exponents of the spectral families.
pub const DECAY_MARGIN: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetKind {
    FourierDecayMixed { theta: f64 },
    FourierDecayHybrid { s: f64, t: f64 },
    SmoothAnalytic,
    SingleMode { m: Vec<i64> },
}

/// JSON shape `{"kind": ..., <kind parameters>, "seed": ..., "band_limit": ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetFamily {
    #[serde(flatten)]
    pub kind: TargetKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub band_limit: usize,
}

impl TargetFamily {
    pub fn mixed(theta: f64, seed: u64, band_limit: usize) -> Self {
        Self {
            kind: TargetKind::FourierDecayMixed { theta },
            seed,
            band_limit,
        }
    }

    pub fn hybrid(s: f64, t: f64, seed: u64, band_limit: usize) -> Self {
        Self {
            kind: TargetKind::FourierDecayHybrid { s, t },
            seed,
            band_limit,
        }
    }

    pub fn smooth() -> Self {
        Self {
            kind: TargetKind::SmoothAnalytic,
            seed: 0,
            band_limit: 0,
        }
    }

    pub fn single_mode(m: Vec<i64>) -> Self {
        let band_limit = m.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0);
        Self {
            kind: TargetKind::SingleMode { m },
            seed: 0,
            band_limit,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        match &self.kind {
            TargetKind::FourierDecayMixed { theta } if !(*theta > 0.5 && theta.is_finite()) => Err(
                Error::Config(format!("theta must be a finite number above 1/2, got {theta}")),
            ),
            TargetKind::FourierDecayHybrid { s, t }
                if !(*s >= 0.0 && *t >= 0.0 && s.is_finite() && t.is_finite()) =>
            {
                Err(Error::Config(format!(
                    "hybrid orders must be finite and non-negative, got s={s} t={t}"
                )))
            }
            TargetKind::SingleMode { m } if m.len() != d => Err(Error::Config(format!(
                "single mode {m:?} does not have dimension {d}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_spectral(&self) -> bool {
        !matches!(self.kind, TargetKind::SmoothAnalytic)
    }
}

/// Spectrum on the box `[-B, B]^d`, row-major, frequency `m` at `m + B`.
#[derive(Clone, Debug)]
struct Spectrum {
    band: usize,
    coeffs: Vec<f64>,
}

/// A target family instantiated in a fixed dimension.
#[derive(Clone, Debug)]
pub struct Target {
    pub family: TargetFamily,
    pub d: usize,
    spectrum: Option<Spectrum>,
}

impl Target {
    pub fn new(family: TargetFamily, d: usize) -> Result<Self> {
        family.validate(d)?;
        let spectrum = match &family.kind {
            TargetKind::SmoothAnalytic => None,
            TargetKind::SingleMode { m } => {
                let band = m.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0);
                let mut coeffs = vec![0.0; box_size(band, d)?];
                let minus: Vec<i64> = m.iter().map(|k| -k).collect();
                coeffs[box_offset(m, band)] += 0.5;
                coeffs[box_offset(&minus, band)] += 0.5;
                Some(Spectrum { band, coeffs })
            }
            TargetKind::FourierDecayMixed { theta } => {
                let exponent = -theta - 0.5 - DECAY_MARGIN;
                Some(synthesize(family.seed, family.band_limit, d, |m| {
                    m.iter().map(|&k| (1.0 + k.unsigned_abs() as f64).powf(exponent)).product()
                })?)
            }
            TargetKind::FourierDecayHybrid { s, t } => {
                let (s, t) = (*s, *t);
                Some(synthesize(family.seed, family.band_limit, d, |m| {
                    let b: Vec<f64> = m.iter().map(|&k| 1.0 + k.unsigned_abs() as f64).collect();
                    let weight: f64 = (0..b.len())
                        .map(|i| {
                            let rest: f64 = (0..b.len())
                                .filter(|&j| j != i)
                                .map(|j| b[j].powf(2.0 * t))
                                .product();
                            b[i].powf(2.0 * (s + t)) * rest
                        })
                        .sum();
                    let envelope: f64 = b.iter().map(|v| v.powf(-0.5 - DECAY_MARGIN)).product();
                    weight.powf(-0.5) * envelope
                })?)
            }
        };
        Ok(Self { family, d, spectrum })
    }

    /// Largest `|m|_inf` with a nonzero coefficient, `None` for the smooth family.
    pub fn band(&self) -> Option<usize> {
        self.spectrum.as_ref().map(|s| s.band)
    }

    /// Point value.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        match &self.spectrum {
            None => x.iter().map(|&v| (2.0 * PI * v).sin().exp()).product(),
            Some(spec) => {
                let side = 2 * spec.band + 1;
                let mut m = vec![0i64; self.d];
                spec.coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a != 0.0)
                    .map(|(flat, &a)| {
                        let mut rest = flat;
                        for axis in (0..self.d).rev() {
                            m[axis] = (rest % side) as i64 - spec.band as i64;
                            rest /= side;
                        }
                        let phase: f64 = m.iter().zip(x).map(|(&k, &v)| k as f64 * v).sum();
                        a * (2.0 * PI * phase).cos()
                    })
                    .sum()
            }
        }
    }

    /// Exact point values on the grid `X_levels`. Spectral families fold
    /// their coefficients onto the grid frequencies and transform back, so
    /// no band limit restriction applies.
    pub fn sample(&self, levels: &LevelIndex) -> Result<GridFunctionND> {
        if levels.dim() != self.d {
            return Err(Error::LevelMismatch(format!(
                "target of dimension {} sampled on levels {:?}",
                self.d, levels.levels
            )));
        }
        if levels.l1() >= usize::BITS as usize || levels.num_points() > GRID_POINT_BUDGET {
            return Err(Error::SizeBudget(format!("grid {:?} is too large", levels.levels)));
        }
        let Some(spec) = &self.spectrum else {
            return Ok(GridFunctionND::from_fn(levels.clone(), |x| self.eval(x)));
        };
        let shape = levels.shape();
        let mut data = vec![Complex64::new(0.0, 0.0); levels.num_points()];
        self.fold_into(spec, &shape, &mut data);
        idft_nd_unnormalized(&mut data, &shape);
        let scale = data.iter().fold(1.0f64, |m, v| m.max(v.re.abs()));
        let residue = data.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        if residue > 1e-10 * scale {
            return Err(Error::Config(format!(
                "synthesized samples have imaginary residue {residue:e}"
            )));
        }
        GridFunctionND::new(levels.clone(), data.iter().map(|v| v.re).collect())
    }

    fn fold_into(&self, spec: &Spectrum, shape: &[usize], out: &mut [Complex64]) {
        let side = 2 * spec.band + 1;
        for (flat, &a) in spec.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let mut rest = flat;
            let mut target = 0usize;
            let mut stride = 1usize;
            for axis in (0..self.d).rev() {
                let k = (rest % side) as i64 - spec.band as i64;
                rest /= side;
                target += k.rem_euclid(shape[axis] as i64) as usize * stride;
                stride *= shape[axis];
            }
            out[target] += a;
        }
    }

    /// Fourier coefficients on the isotropic reference grid of `fine_level`.
    /// Spectral families place their exact coefficients and require the
    /// band to sit strictly below the grid's Nyquist index; the smooth
    /// family is transformed from its samples.
    pub fn exact_fourier(&self, fine_level: usize) -> Result<FourierField> {
        let levels = LevelIndex::isotropic(self.d, fine_level);
        let Some(spec) = &self.spectrum else {
            return to_fourier(&self.sample(&levels)?);
        };
        let n = 1usize << fine_level;
        let nyquist = n / 2;
        if spec.band >= nyquist.max(1) {
            return Err(Error::BandLimit {
                band_limit: spec.band,
                nyquist,
            });
        }
        if levels.num_points() > GRID_POINT_BUDGET {
            return Err(Error::SizeBudget(format!("grid {:?} is too large", levels.levels)));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); levels.num_points()];
        self.fold_into(spec, &levels.shape(), &mut coeffs);
        Ok(FourierField {
            fine_level,
            d: self.d,
            coeffs,
        })
    }
}

/// Samples of `family` in dimension `levels.dim()`.
pub fn sample(family: &TargetFamily, levels: &LevelIndex) -> Result<GridFunctionND> {
    Target::new(family.clone(), levels.dim())?.sample(levels)
}

pub fn exact_fourier(family: &TargetFamily, d: usize, fine_level: usize) -> Result<FourierField> {
    Target::new(family.clone(), d)?.exact_fourier(fine_level)
}

fn box_size(band: usize, d: usize) -> Result<usize> {
    let side = 2 * band + 1;
    (0..d)
        .try_fold(1usize, |acc, _| acc.checked_mul(side))
        .filter(|&n| n <= GRID_POINT_BUDGET)
        .ok_or_else(|| Error::SizeBudget(format!("spectrum box of band {band} in d={d} is too large")))
}

fn box_offset(m: &[i64], band: usize) -> usize {
    let side = 2 * band + 1;
    m.iter()
        .fold(0usize, |acc, &k| acc * side + (k + band as i64) as usize)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream identifier of the pair `{m, -m}`.
fn stream_key(m: &[i64]) -> u64 {
    let negate = m.iter().find(|&&k| k != 0).is_some_and(|&k| k < 0);
    m.iter().fold(0x9e37_79b9_7f4a_7c15u64, |acc, &k| {
        let k = if negate { -k } else { k };
        mix(acc ^ (k as u64).wrapping_add(0x9e37_79b9_7f4a_7c15))
    })
}

/// Seeded sign for frequency `m`, equal for `m` and `-m`.
pub fn seeded_sign(seed: u64, m: &[i64]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_key(m));
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn synthesize(seed: u64, band: usize, d: usize, envelope: impl Fn(&[i64]) -> f64) -> Result<Spectrum> {
    let size = box_size(band, d)?;
    let side = 2 * band + 1;
    let mut m = vec![0i64; d];
    let coeffs = (0..size)
        .map(|flat| {
            let mut rest = flat;
            for axis in (0..d).rev() {
                m[axis] = (rest % side) as i64 - band as i64;
                rest /= side;
            }
            seeded_sign(seed, &m) * envelope(&m)
        })
        .collect();
    Ok(Spectrum { band, coeffs })
}
