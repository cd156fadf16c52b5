//! Optimized sparse grid index sets and the combination technique.
//!
//! `I_J^lambda = { j : |j|_1 - lambda |j|_inf <= J (1 - lambda) }` interpolates
//! between the standard sparse grid (`lambda = 0`), grids close to the
//! energy-optimized ones (`0 < lambda < 1`) and, as `lambda -> -inf`, the
//! full tensor grid. The sparse interpolant is
//! `sum_{j in I} c_j P_j u` with integer combination coefficients `c_j`.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::tensor::{eval_tensor_on_fine, solve_tensor, GridFunctionND, LevelIndex, TensorInterpolant};

/// Default cap on the number of enumerated indices.
pub const INDEX_SET_BUDGET: usize = 10_000_000;

/// Relative slack on the membership comparison.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseGridConfig {
    pub d: usize,
    #[serde(rename = "J")]
    pub level: usize,
    pub lambda: f64,
}

impl SparseGridConfig {
    pub fn new(d: usize, level: usize, lambda: f64) -> Result<Self> {
        let config = Self { d, level, lambda };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if !self.lambda.is_finite() || self.lambda >= 1.0 {
            return Err(Error::Config(format!(
                "lambda must be a finite number below 1, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Tests `|j|_1 - lambda |j|_inf <= J (1 - lambda)` with a relative slack.
pub fn membership(j: &LevelIndex, config: &SparseGridConfig) -> bool {
    debug_assert_eq!(j.dim(), config.d);
    membership_raw(&j.levels, config)
}

fn membership_raw(levels: &[usize], config: &SparseGridConfig) -> bool {
    let l1: usize = levels.iter().sum();
    let linf = levels.iter().copied().max().unwrap_or(0);
    let lhs = l1 as f64 - config.lambda * linf as f64;
    let rhs = config.level as f64 * (1.0 - config.lambda);
    let scale = lhs.abs().max(rhs.abs()).max(1.0);
    lhs <= rhs + MEMBERSHIP_SLACK * scale
}

/// Explicit member list of `I_J^lambda`, sorted lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexSet {
    pub config: SparseGridConfig,
    pub indices: Vec<LevelIndex>,
}

impl IndexSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: &LevelIndex) -> bool {
        self.indices.binary_search(j).is_ok()
    }

    /// First member with a missing lower neighbour, if any.
    pub fn downward_closure_violation(&self) -> Option<&LevelIndex> {
        let members: HashSet<&[usize]> = self.indices.iter().map(|j| j.levels.as_slice()).collect();
        self.indices.iter().find(|j| {
            (0..j.dim()).any(|axis| {
                if j.levels[axis] == 0 {
                    return false;
                }
                let mut lower = j.levels.clone();
                lower[axis] -= 1;
                !members.contains(lower.as_slice())
            })
        })
    }
}

pub fn enumerate_index_set(config: &SparseGridConfig) -> Result<IndexSet> {
    enumerate_index_set_with_budget(config, INDEX_SET_BUDGET)
}

/// Depth-first enumeration; a prefix is extended only while the prefix
/// padded with zeros is a member, which is exact because the set is
/// downward closed.
pub fn enumerate_index_set_with_budget(config: &SparseGridConfig, budget: usize) -> Result<IndexSet> {
    config.validate()?;
    let mut indices = Vec::new();
    let mut current = vec![0usize; config.d];
    fn visit(
        axis: usize,
        current: &mut Vec<usize>,
        config: &SparseGridConfig,
        budget: usize,
        out: &mut Vec<LevelIndex>,
    ) -> Result<()> {
        if axis == current.len() {
            if out.len() == budget {
                return Err(Error::SizeBudget(format!(
                    "index set for d={} J={} lambda={} has more than {budget} members",
                    config.d, config.level, config.lambda
                )));
            }
            out.push(LevelIndex::from(current.clone()));
            return Ok(());
        }
        for level in 0..=config.level {
            current[axis] = level;
            if !membership_raw(current, config) {
                break;
            }
            visit(axis + 1, current, config, budget, out)?;
        }
        current[axis] = 0;
        Ok(())
    }
    visit(0, &mut current, config, budget, &mut indices)?;
    indices.sort();
    Ok(IndexSet {
        config: *config,
        indices,
    })
}

/// Nonzero combination coefficients keyed by level index, sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombinationCoefficients {
    pub entries: Vec<(LevelIndex, i64)>,
}

impl CombinationCoefficients {
    pub fn get(&self, j: &LevelIndex) -> i64 {
        self.entries
            .binary_search_by(|(k, _)| k.cmp(j))
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0)
    }

    pub fn sum(&self) -> i64 {
        self.entries.iter().map(|(_, c)| c).sum()
    }
}

/// `c_j = sum_{e in {0,1}^d, j + e in I} (-1)^{|e|}` for every member.
pub fn combination_coefficients(index_set: &IndexSet) -> Result<CombinationCoefficients> {
    if let Some(j) = index_set.downward_closure_violation() {
        return Err(Error::NotDownwardClosed(j.levels.clone()));
    }
    let members: HashSet<&[usize]> = index_set.indices.iter().map(|j| j.levels.as_slice()).collect();
    let d = index_set.config.d;
    let mut shifted = vec![0usize; d];
    let mut entries = Vec::new();
    for j in &index_set.indices {
        let mut c = 0i64;
        for mask in 0..1usize << d {
            for (axis, slot) in shifted.iter_mut().enumerate() {
                *slot = j.levels[axis] + (mask >> axis & 1);
            }
            if members.contains(shifted.as_slice()) {
                c += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            }
        }
        if c != 0 {
            entries.push((j.clone(), c));
        }
    }
    Ok(CombinationCoefficients { entries })
}

/// `sum_j c_j P_j u` stored as its full tensor terms.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseInterpolant {
    pub config: SparseGridConfig,
    pub spec: KernelSpec,
    pub terms: Vec<(i64, TensorInterpolant)>,
}

impl SparseInterpolant {
    /// Largest component level over all terms.
    pub fn max_level(&self) -> usize {
        self.terms.iter().map(|(_, t)| t.levels.linf()).max().unwrap_or(0)
    }
}

/// Solves one full tensor system per nonzero combination coefficient.
/// The solves run in parallel; terms keep the sorted index order.
pub fn sparse_interpolate<S>(
    spec: &KernelSpec,
    target_sampler: &S,
    config: &SparseGridConfig,
) -> Result<SparseInterpolant>
where
    S: Fn(&LevelIndex) -> Result<GridFunctionND> + Sync,
{
    spec.validate()?;
    let index_set = enumerate_index_set(config)?;
    let coefficients = combination_coefficients(&index_set)?;
    let terms = coefficients
        .entries
        .par_iter()
        .map(|(j, c)| {
            let samples = target_sampler(j)?;
            if samples.levels != *j {
                return Err(Error::LevelMismatch(format!(
                    "sampler returned levels {:?} for request {:?}",
                    samples.levels.levels, j.levels
                )));
            }
            Ok((*c, solve_tensor(spec, &samples)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseInterpolant {
        config: *config,
        spec: *spec,
        terms,
    })
}

/// Evaluates the sparse interpolant on the isotropic grid of `fine_level`.
pub fn eval_sparse_on_fine(interp: &SparseInterpolant, fine_level: usize) -> Result<GridFunctionND> {
    if fine_level < interp.max_level() {
        return Err(Error::LevelMismatch(format!(
            "fine level {fine_level} is below the largest term level {}",
            interp.max_level()
        )));
    }
    let fine = LevelIndex::isotropic(interp.config.d, fine_level);
    let fields = interp
        .terms
        .par_iter()
        .map(|(_, term)| eval_tensor_on_fine(term, &fine))
        .collect::<Result<Vec<_>>>()?;
    let mut total = GridFunctionND::zeros(fine);
    for ((c, _), field) in interp.terms.iter().zip(&fields) {
        total.axpy(*c as f64, field);
    }
    Ok(total)
}

/// Number of new points a nested dyadic grid gains at `level`.
fn increment(level: usize) -> u64 {
    if level == 0 {
        1
    } else {
        1u64 << (level - 1)
    }
}

/// Number of distinct points in the union of the grids `X_j`, `j in I`.
pub fn dof_count(config: &SparseGridConfig) -> Result<u64> {
    let index_set = enumerate_index_set(config)?;
    let overflow = || Error::SizeBudget(format!("point count for J={} overflows u64", config.level));
    index_set.indices.iter().try_fold(0u64, |acc, j| {
        let points = j
            .levels
            .iter()
            .try_fold(1u64, |p, &l| p.checked_mul(increment(l)))
            .ok_or_else(overflow)?;
        acc.checked_add(points).ok_or_else(overflow)
    })
}

/// `J (1 - lambda) / (d - lambda)`: the largest isotropic level whose full
/// box lies in the index set, before rounding down.
pub fn corner_level(config: &SparseGridConfig) -> f64 {
    config.level as f64 * (1.0 - config.lambda) / (config.d as f64 - config.lambda)
}

/// JSON form `{"d", "J", "lambda", "terms": [{"j": [...], "c": ...}]}`.
/// Every member of the index set is listed, including those with `c = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSetRecord {
    pub d: usize,
    #[serde(rename = "J")]
    pub level: usize,
    pub lambda: f64,
    pub terms: Vec<IndexTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexTerm {
    pub j: Vec<usize>,
    pub c: i64,
}

impl IndexSetRecord {
    pub fn new(index_set: &IndexSet, coefficients: &CombinationCoefficients) -> Self {
        let config = index_set.config;
        Self {
            d: config.d,
            level: config.level,
            lambda: config.lambda,
            terms: index_set
                .indices
                .iter()
                .map(|j| IndexTerm {
                    j: j.levels.clone(),
                    c: coefficients.get(j),
                })
                .collect(),
        }
    }

    pub fn config(&self) -> Result<SparseGridConfig> {
        SparseGridConfig::new(self.d, self.level, self.lambda)
    }

    /// Rebuilds the index set and coefficients, checking that the record
    /// agrees with a fresh enumeration.
    pub fn into_parts(self) -> Result<(IndexSet, CombinationCoefficients)> {
        let config = self.config()?;
        let index_set = enumerate_index_set(&config)?;
        let coefficients = combination_coefficients(&index_set)?;
        let mut listed: Vec<(LevelIndex, i64)> = self
            .terms
            .into_iter()
            .map(|t| (LevelIndex::from(t.j), t.c))
            .collect();
        listed.sort();
        let expected: Vec<(LevelIndex, i64)> = index_set
            .indices
            .iter()
            .map(|j| (j.clone(), coefficients.get(j)))
            .collect();
        if listed != expected {
            return Err(Error::Config(
                "index set record does not match the enumerated index set".into(),
            ));
        }
        Ok((index_set, coefficients))
    }
}
