//! Full tensor-product kernel interpolation.
//!
//! The system `(K_{j_1} x ... x K_{j_d}) u = f` is solved by applying the
//! diagonalized inverse of each univariate circulant along its axis.
//! Hierarchical surpluses `Q_j = (P_{j_1} - P_{j_1 - 1}) x ... ` are formed
//! by inclusion–exclusion over full interpolants, with `P_{-1} = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{circulant_along_axis, SymbolOp};
use crate::kernel::{build_circulant, conditioning_check, KernelSpec};

/// Largest number of points of a single tensor grid.
pub const GRID_POINT_BUDGET: usize = 1 << 26;

fn check_grid_budget(levels: &LevelIndex) -> Result<()> {
    let exponent: usize = levels.l1();
    if exponent >= usize::BITS as usize || (1usize << exponent) > GRID_POINT_BUDGET {
        return Err(Error::SizeBudget(format!(
            "tensor grid {:?} has 2^{exponent} points, budget is {GRID_POINT_BUDGET}",
            levels.levels
        )));
    }
    Ok(())
}

/// Refinement level per dimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelIndex {
    pub levels: Vec<usize>,
}

impl LevelIndex {
    pub fn new(levels: Vec<usize>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Config("level index needs at least one dimension".into()));
        }
        Ok(Self { levels })
    }

    pub fn isotropic(d: usize, level: usize) -> Self {
        Self {
            levels: vec![level; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn l1(&self) -> usize {
        self.levels.iter().sum()
    }

    pub fn linf(&self) -> usize {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// Grid sizes `2^{j_i}`.
    pub fn shape(&self) -> Vec<usize> {
        self.levels.iter().map(|&l| 1usize << l).collect()
    }

    pub fn num_points(&self) -> usize {
        self.shape().iter().product()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &LevelIndex) -> bool {
        self.dim() == other.dim() && self.levels.iter().zip(&other.levels).all(|(a, b)| a <= b)
    }

    pub fn is_isotropic(&self) -> bool {
        self.levels.windows(2).all(|w| w[0] == w[1])
    }
}

impl From<Vec<usize>> for LevelIndex {
    fn from(levels: Vec<usize>) -> Self {
        Self { levels }
    }
}

/// Samples on the tensor grid `X_j`, row-major, dimension 1 slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunctionND {
    pub levels: LevelIndex,
    pub values: Vec<f64>,
}

impl GridFunctionND {
    pub fn new(levels: LevelIndex, values: Vec<f64>) -> Result<Self> {
        if values.len() != levels.num_points() {
            return Err(Error::LevelMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                levels.num_points()
            )));
        }
        Ok(Self { levels, values })
    }

    pub fn zeros(levels: LevelIndex) -> Self {
        let n = levels.num_points();
        Self {
            levels,
            values: vec![0.0; n],
        }
    }

    /// Samples `f` at every grid node.
    pub fn from_fn(levels: LevelIndex, f: impl Fn(&[f64]) -> f64) -> Self {
        let shape = levels.shape();
        let total: usize = shape.iter().product();
        let mut point = vec![0.0; shape.len()];
        let values = (0..total)
            .map(|flat| {
                let mut rest = flat;
                for axis in (0..shape.len()).rev() {
                    point[axis] = (rest % shape[axis]) as f64 / shape[axis] as f64;
                    rest /= shape[axis];
                }
                f(&point)
            })
            .collect();
        Self { levels, values }
    }

    /// `self - other` on the same grid.
    pub fn sub(&self, other: &GridFunctionND) -> Result<GridFunctionND> {
        if self.levels != other.levels {
            return Err(Error::LevelMismatch(format!(
                "{:?} vs {:?}",
                self.levels.levels, other.levels.levels
            )));
        }
        Ok(GridFunctionND {
            levels: self.levels.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub(crate) fn axpy(&mut self, alpha: f64, other: &GridFunctionND) {
        debug_assert_eq!(self.levels, other.levels);
        self.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a += alpha * b);
    }

    pub fn max_abs_diff(&self, other: &GridFunctionND) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `P_j u` as coefficients of the kernel translates on `X_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorInterpolant {
    pub spec: KernelSpec,
    pub levels: LevelIndex,
    pub coefficients: Vec<f64>,
}

/// Solves the Kronecker kernel system for the given samples.
pub fn solve_tensor(spec: &KernelSpec, samples: &GridFunctionND) -> Result<TensorInterpolant> {
    let order: Vec<usize> = (0..samples.levels.dim()).collect();
    solve_tensor_in_order(spec, samples, &order)
}

/// [`solve_tensor`] with an explicit axis processing order.
pub fn solve_tensor_in_order(
    spec: &KernelSpec,
    samples: &GridFunctionND,
    order: &[usize],
) -> Result<TensorInterpolant> {
    let d = samples.levels.dim();
    let mut seen = vec![false; d];
    if order.len() != d || order.iter().any(|&a| a >= d || std::mem::replace(&mut seen[a], true)) {
        return Err(Error::Config(format!("{order:?} is not a permutation of 0..{d}")));
    }
    check_grid_budget(&samples.levels)?;
    let shape = samples.levels.shape();
    let mut data = samples.values.clone();
    for &axis in order {
        let matrix = build_circulant(spec, samples.levels.levels[axis])?;
        conditioning_check(&matrix)?;
        data = circulant_along_axis(
            &data,
            &shape,
            axis,
            shape[axis],
            &matrix.eigenvalues,
            SymbolOp::Divide,
        );
    }
    Ok(TensorInterpolant {
        spec: *spec,
        levels: samples.levels.clone(),
        coefficients: data,
    })
}

/// Samples the interpolant on the tensor grid `X_{fine_levels}`.
pub fn eval_tensor_on_fine(
    interp: &TensorInterpolant,
    fine_levels: &LevelIndex,
) -> Result<GridFunctionND> {
    if !interp.levels.le(fine_levels) {
        return Err(Error::LevelMismatch(format!(
            "fine levels {:?} do not dominate interpolant levels {:?}",
            fine_levels.levels, interp.levels.levels
        )));
    }
    check_grid_budget(fine_levels)?;
    let mut shape = interp.levels.shape();
    let mut data = interp.coefficients.clone();
    for axis in 0..shape.len() {
        let fine = build_circulant(&interp.spec, fine_levels.levels[axis])?;
        data = circulant_along_axis(&data, &shape, axis, fine.n, &fine.eigenvalues, SymbolOp::Multiply);
        shape[axis] = fine.n;
    }
    GridFunctionND::new(fine_levels.clone(), data)
}

/// `P_j u` sampled on the fine grid.
pub fn projection_on_fine<S>(
    spec: &KernelSpec,
    target_sampler: &S,
    j: &LevelIndex,
    fine_levels: &LevelIndex,
) -> Result<GridFunctionND>
where
    S: Fn(&LevelIndex) -> Result<GridFunctionND> + Sync,
{
    let samples = target_sampler(j)?;
    if samples.levels != *j {
        return Err(Error::LevelMismatch(format!(
            "sampler returned levels {:?} for request {:?}",
            samples.levels.levels, j.levels
        )));
    }
    eval_tensor_on_fine(&solve_tensor(spec, &samples)?, fine_levels)
}

/// `(Q_{j_1} x ... x Q_{j_d}) u` sampled on the fine grid.
pub fn surplus_on_fine<S>(
    spec: &KernelSpec,
    target_sampler: &S,
    j: &LevelIndex,
    fine_levels: &LevelIndex,
) -> Result<GridFunctionND>
where
    S: Fn(&LevelIndex) -> Result<GridFunctionND> + Sync,
{
    if !j.le(fine_levels) {
        return Err(Error::LevelMismatch(format!(
            "fine levels {:?} do not dominate {:?}",
            fine_levels.levels, j.levels
        )));
    }
    check_grid_budget(fine_levels)?;
    let d = j.dim();
    let terms: Vec<(f64, LevelIndex)> = (0..1usize << d)
        .filter_map(|mask| {
            let mut levels = j.levels.clone();
            for (axis, level) in levels.iter_mut().enumerate() {
                if mask >> axis & 1 == 1 {
                    *level = level.checked_sub(1)?;
                }
            }
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            Some((sign, LevelIndex { levels }))
        })
        .collect();
    let fields = terms
        .par_iter()
        .map(|(_, level)| projection_on_fine(spec, target_sampler, level, fine_levels))
        .collect::<Result<Vec<_>>>()?;
    let mut total = GridFunctionND::zeros(fine_levels.clone());
    for ((sign, _), field) in terms.iter().zip(&fields) {
        total.axpy(*sign, field);
    }
    Ok(total)
}
