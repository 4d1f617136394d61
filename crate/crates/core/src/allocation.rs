//! Demand allocation: turning scores into share vectors that sum to one,
//! and into column-stochastic matrices for pairwise refresh.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::SquareMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Allocator {
    /// Shares proportional to positive scores.
    #[default]
    Ratio,
    Softmax,
    /// Better segments take their score as share; the incumbent keeps the rest.
    Redistribution,
}

/// Raised when an allocator had to leave its defining formula to keep the
/// shares normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AllocationFlag {
    /// Ratio allocation saw no positive score and fell back to uniform shares.
    UniformFallback,
    /// Redistribution positives summed past one and were rescaled; the
    /// incumbent keeps nothing.
    Overflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub shares: Vec<f64>,
    pub flag: Option<AllocationFlag>,
}

impl Allocation {
    fn exact(shares: Vec<f64>) -> Self {
        Self { shares, flag: None }
    }
}

pub fn allocate_ratio(scores: &[f64]) -> Allocation {
    let n = scores.len();
    let total: f64 = scores.iter().map(|a| a.max(0.0)).sum();
    if !(total > 0.0) {
        return Allocation {
            shares: vec![1.0 / n as f64; n],
            flag: Some(AllocationFlag::UniformFallback),
        };
    }
    Allocation::exact(scores.iter().map(|a| a.max(0.0) / total).collect())
}

pub fn allocate_softmax(scores: &[f64]) -> Allocation {
    allocate_softmax_with_temperature(scores, 1.0)
}

pub fn allocate_softmax_with_temperature(scores: &[f64], temperature: f64) -> Allocation {
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores
        .iter()
        .map(|a| libm::exp((a - top) / temperature))
        .collect();
    let total: f64 = exps.iter().sum();
    Allocation::exact(exps.into_iter().map(|e| e / total).collect())
}

/// Redistribution against an incumbent segment.
///
/// `scores[j]` is how much better segment `j` is than the incumbent. The
/// incumbent's own entry is not a comparison and is ignored.
pub fn allocate_redistribution(scores: &[f64], incumbent: usize) -> Allocation {
    let mut shares: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(j, &a)| if j != incumbent && a > 0.0 { a } else { 0.0 })
        .collect();
    let taken: f64 = shares.iter().sum();
    if taken > 1.0 {
        shares.iter_mut().for_each(|h| *h /= taken);
        return Allocation {
            shares,
            flag: Some(AllocationFlag::Overflow),
        };
    }
    shares[incumbent] = 1.0 - taken;
    Allocation::exact(shares)
}

/// Everything to `i_max`.
pub fn allocate_wta(n: usize, i_max: usize) -> Allocation {
    let mut shares = vec![0.0; n];
    shares[i_max] = 1.0;
    Allocation::exact(shares)
}

/// Allocation of demand that has no incumbent (new customers, or the market
/// vector form of refresh).
///
/// Redistribution needs an incumbent to hand the remainder to; without one
/// it keeps its rule for the positive scores and normalizes them, which is
/// ratio allocation. At `wta = 1` every allocator is the delta at `i_max`.
pub fn allocate(
    scores: &[f64],
    allocator: Allocator,
    wta: f64,
    i_max: usize,
    temperature: f64,
) -> Allocation {
    if wta >= 1.0 {
        return allocate_wta(scores.len(), i_max);
    }
    match allocator {
        Allocator::Ratio | Allocator::Redistribution => allocate_ratio(scores),
        Allocator::Softmax => allocate_softmax_with_temperature(scores, temperature),
    }
}

/// `matrix[i][j]`: share of segment `j`'s outflow that goes to segment `i`.
/// Every column sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationMatrix {
    pub matrix: SquareMatrix,
    pub flags: Vec<Option<AllocationFlag>>,
}

impl AllocationMatrix {
    pub fn apply(&self, outflow: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(outflow)
    }

    /// Adds `bias` to every diagonal entry, then renormalizes the columns.
    pub fn with_familiarity_bias(mut self, bias: f64) -> Self {
        if bias > 0.0 {
            self.matrix = self.matrix.map(|i, j, h| {
                let h = if i == j { h + bias } else { h };
                h / (1.0 + bias)
            });
        }
        self
    }
}

/// Column `j` allocates segment `j`'s outflow using the scores of every
/// segment relative to `j`, i.e. column `j` of the pairwise matrix.
pub fn allocation_matrix(
    pairwise_mod: &SquareMatrix,
    allocator: Allocator,
    wta: f64,
    i_max: usize,
    temperature: f64,
) -> AllocationMatrix {
    let n = pairwise_mod.dim();
    let mut matrix = SquareMatrix::zeros(n);
    let mut flags = Vec::with_capacity(n);
    for j in 0..n {
        let column = pairwise_mod.column(j);
        let alloc = if wta >= 1.0 {
            allocate_wta(n, i_max)
        } else {
            match allocator {
                Allocator::Ratio => allocate_ratio(&column),
                Allocator::Softmax => allocate_softmax_with_temperature(&column, temperature),
                Allocator::Redistribution => allocate_redistribution(&column, j),
            }
        };
        for (i, h) in alloc.shares.into_iter().enumerate() {
            matrix.set(i, j, h);
        }
        flags.push(alloc.flag);
    }
    AllocationMatrix { matrix, flags }
}
