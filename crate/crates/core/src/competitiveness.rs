//! Attribute weights, market-level scores and the pairwise score matrix.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::model::AttributePanel;

/// Market and pairwise competitiveness of every segment at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetitivenessView {
    pub t: f64,
    /// Importance-weighted score of each segment, on the panel's scale.
    pub market: Vec<f64>,
    /// `pairwise[i][j]`: how much better segment `i` is than `j`, in `[-1, 1]`.
    pub pairwise: SquareMatrix,
    /// Segment with the highest market score; lowest index on ties.
    pub i_max: usize,
}

fn check_segment(panel: &AttributePanel, index: usize) -> Result<()> {
    let count = panel.segment_count();
    if index >= count {
        return Err(Error::SegmentIndex { index, count });
    }
    Ok(())
}

fn weights_from(imp: &[f64], segment: usize, t: f64) -> Result<Vec<f64>> {
    let total: f64 = imp.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateWeights { segment, t });
    }
    Ok(imp.iter().map(|v| v / total).collect())
}

/// Importance of each attribute relative to all attributes, for one segment.
pub fn attribute_weights(panel: &AttributePanel, t: f64, segment: usize) -> Result<Vec<f64>> {
    check_segment(panel, segment)?;
    weights_from(&panel.imp_at(t, segment), segment, t)
}

fn weighted_score(perf: &[f64], weights: &[f64], lo: f64, hi: f64) -> f64 {
    let score: f64 = perf.iter().zip(weights).map(|(p, w)| p * w).sum();
    score.clamp(lo, hi)
}

/// Weighted attribute score of one segment, on the panel's scale.
pub fn market_score(panel: &AttributePanel, t: f64, segment: usize) -> Result<f64> {
    let weights = attribute_weights(panel, t, segment)?;
    let scale = panel.scale();
    Ok(weighted_score(
        &panel.perf_at(t, segment),
        &weights,
        scale.min(),
        scale.max(),
    ))
}

fn pairwise_from(perf_i: &[f64], perf_j: &[f64], weights_i: &[f64], width: f64) -> f64 {
    let score: f64 = perf_i
        .iter()
        .zip(perf_j)
        .zip(weights_i)
        .map(|((a, b), w)| (a - b) / width * w)
        .sum();
    score.clamp(-1.0, 1.0)
}

/// Normalized attribute advantage of segment `i` over `j`, weighted by the
/// importance scores of `i`.
///
/// This is the one-sided score. When segments weigh attributes differently,
/// `pairwise_score(i, j)` and `-pairwise_score(j, i)` disagree;
/// [`competitiveness_view`] resolves that by computing the upper triangle and
/// mirroring it.
pub fn pairwise_score(panel: &AttributePanel, t: f64, i: usize, j: usize) -> Result<f64> {
    check_segment(panel, j)?;
    let weights = attribute_weights(panel, t, i)?;
    Ok(pairwise_from(
        &panel.perf_at(t, i),
        &panel.perf_at(t, j),
        &weights,
        panel.scale().width(),
    ))
}

/// Index of the largest entry; the lowest index wins exact ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn competitiveness_view(panel: &AttributePanel, t: f64) -> Result<CompetitivenessView> {
    let n = panel.segment_count();
    let scale = panel.scale();
    let perf: Vec<Vec<f64>> = (0..n).map(|i| panel.perf_at(t, i)).collect();
    let weights = (0..n)
        .map(|i| weights_from(&panel.imp_at(t, i), i, t))
        .collect::<Result<Vec<_>>>()?;

    let market: Vec<f64> = perf
        .iter()
        .zip(&weights)
        .map(|(p, w)| weighted_score(p, w, scale.min(), scale.max()))
        .collect();

    let mut pairwise = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let a = pairwise_from(&perf[i], &perf[j], &weights[i], scale.width());
            pairwise.set(i, j, a);
            pairwise.set(j, i, -a);
        }
    }

    let i_max = argmax(&market);
    Ok(CompetitivenessView {
        t,
        market,
        pairwise,
        i_max,
    })
}
