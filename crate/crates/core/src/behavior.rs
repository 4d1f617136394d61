//! Winner-take-all and customer-psychology modifiers on competitiveness
//! scores.
//!
//! Both modifiers work entry by entry and apply the same way to a vector of
//! market-level scores and to the pairwise matrix. Positive scores lose a
//! fraction of their value, negative scores are pushed further down, and
//! neither modifier turns a strictly positive score negative.

use alloc::vec::Vec;

use crate::competitiveness::{argmax, CompetitivenessView};
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::model::BehaviorParams;

/// Order in which the modifiers are composed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ModifierOrder {
    #[default]
    PsychologyThenWta,
    WtaThenPsychology,
    WtaOnly,
    PsychologyOnly,
    None,
}

/// Which resistance curve applies to a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    /// Pairwise scores in `[-1, 1]`; non-positive scores get full resistance.
    Pairwise,
    /// Market-level scores on the (non-negative) score scale.
    Market,
}

/// Winner-take-all adjustment of a single score.
///
/// The top segment keeps its score; every other positive score loses a
/// `wta` fraction, negative scores lose `|a * wta|` more, and an exact zero
/// becomes `-wta`.
pub fn wta_entry(a: f64, is_max: bool, wta: f64) -> f64 {
    if a > 0.0 {
        if is_max {
            // a * wta + a * (1 - wta)
            a
        } else {
            a * (1.0 - wta)
        }
    } else if a < 0.0 {
        a - (a * wta).abs()
    } else {
        -wta
    }
}

pub fn apply_wta(scores: &[f64], i_max: usize, wta: f64) -> Vec<f64> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &a)| wta_entry(a, i == i_max, wta))
        .collect()
}

/// Row `i` of the matrix belongs to segment `i`, so only row `i_max` keeps
/// its positive entries whole.
pub fn apply_wta_matrix(scores: &SquareMatrix, i_max: usize, wta: f64) -> SquareMatrix {
    scores.map(|i, _, a| wta_entry(a, i == i_max, wta))
}

/// Resistance of a customer to acting on score `a`, clamped to `[0, 1]`.
pub fn resistance(a: f64, gamma: f64, c: f64, kind: ScoreKind) -> Result<f64> {
    match kind {
        ScoreKind::Pairwise if a <= 0.0 => Ok(1.0),
        ScoreKind::Market if a == 0.0 => Ok(1.0),
        ScoreKind::Market if a < 0.0 => Err(Error::NegativeMarketScore(a)),
        _ => Ok((libm::exp(gamma * a) + c).clamp(0.0, 1.0)),
    }
}

pub fn psychology_entry(a: f64, gamma: f64, c: f64, kind: ScoreKind) -> Result<f64> {
    let r = resistance(a, gamma, c, kind)?;
    Ok(if a > 0.0 {
        a * (1.0 - r)
    } else if a < 0.0 {
        a - (a * r).abs()
    } else {
        0.0
    })
}

pub fn apply_psychology(scores: &[f64], gamma: f64, c: f64, kind: ScoreKind) -> Result<Vec<f64>> {
    scores
        .iter()
        .map(|&a| psychology_entry(a, gamma, c, kind))
        .collect()
}

pub fn apply_psychology_matrix(scores: &SquareMatrix, gamma: f64, c: f64) -> Result<SquareMatrix> {
    let n = scores.dim();
    let mut out = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(
                i,
                j,
                psychology_entry(scores.get(i, j), gamma, c, ScoreKind::Pairwise)?,
            );
        }
    }
    Ok(out)
}

/// Parameters a set of modified scores was produced with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub wta: f64,
    pub gamma: f64,
    pub c: f64,
    pub order: ModifierOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedScores {
    pub market: Vec<f64>,
    pub pairwise: SquareMatrix,
    /// Top segment after modification. When winner-take-all ran, this is the
    /// segment it favoured.
    pub i_max: usize,
    pub provenance: Provenance,
}

/// Applies the configured modifiers to a vector of scores and returns the
/// result together with its top segment.
///
/// `i_max` is taken from the scores as they stand when winner-take-all runs,
/// so psychology-first orders rank on the psychology-adjusted scores.
pub fn modify_vector(
    scores: &[f64],
    kind: ScoreKind,
    params: &BehaviorParams,
) -> Result<(Vec<f64>, usize)> {
    let (wta, gamma, c) = (params.wta(), params.gamma(), params.c());
    Ok(match params.modifier_order() {
        ModifierOrder::None => (scores.to_vec(), argmax(scores)),
        ModifierOrder::WtaOnly => {
            let i_max = argmax(scores);
            (apply_wta(scores, i_max, wta), i_max)
        }
        ModifierOrder::PsychologyOnly => {
            let out = apply_psychology(scores, gamma, c, kind)?;
            let i_max = argmax(&out);
            (out, i_max)
        }
        ModifierOrder::PsychologyThenWta => {
            let psy = apply_psychology(scores, gamma, c, kind)?;
            let i_max = argmax(&psy);
            (apply_wta(&psy, i_max, wta), i_max)
        }
        ModifierOrder::WtaThenPsychology => {
            let i_max = argmax(scores);
            let out = apply_psychology(&apply_wta(scores, i_max, wta), gamma, c, kind)?;
            (out, i_max)
        }
    })
}

/// Modifies both the market vector and the pairwise matrix of a view.
///
/// The matrix shares the market-level `i_max`: winner-take-all is a market
/// property, so the favoured row is the one whose market score is highest.
pub fn modify(view: &CompetitivenessView, params: &BehaviorParams) -> Result<ModifiedScores> {
    let (wta, gamma, c) = (params.wta(), params.gamma(), params.c());
    let order = params.modifier_order();
    let (market, i_max) = modify_vector(&view.market, ScoreKind::Market, params)?;
    let pairwise = match order {
        ModifierOrder::None => view.pairwise.clone(),
        ModifierOrder::WtaOnly => apply_wta_matrix(&view.pairwise, i_max, wta),
        ModifierOrder::PsychologyOnly => apply_psychology_matrix(&view.pairwise, gamma, c)?,
        ModifierOrder::PsychologyThenWta => apply_wta_matrix(
            &apply_psychology_matrix(&view.pairwise, gamma, c)?,
            i_max,
            wta,
        ),
        ModifierOrder::WtaThenPsychology => {
            apply_psychology_matrix(&apply_wta_matrix(&view.pairwise, i_max, wta), gamma, c)?
        }
    };
    Ok(ModifiedScores {
        market,
        pairwise,
        i_max,
        provenance: Provenance {
            wta,
            gamma,
            c,
            order,
        },
    })
}
