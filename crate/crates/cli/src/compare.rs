//! `stagecut compare`: agreement between two edit decision lists.

use serde::Serialize;
use stagecut_core::model::{edl_runs, match_rate, EditDecisionList};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunAgreement {
    pub shot_id: usize,
    pub start: usize,
    pub len: usize,
    /// Frames of this run of `a` on which `b` picks the same shot.
    pub matched: usize,
}

/// Maximal stretch of frames where the two lists disagree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Disagreement {
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub frames: usize,
    pub match_rate: f64,
    pub cut_count_a: usize,
    pub cut_count_b: usize,
    /// `cut_count_b − cut_count_a`.
    pub cut_delta: i64,
    pub runs: Vec<RunAgreement>,
    pub disagreements: Vec<Disagreement>,
}

pub fn compare(a: &EditDecisionList, b: &EditDecisionList) -> Result<Comparison> {
    let rate = match_rate(a, b)?;
    let runs_a = edl_runs(a)?;
    let runs_b = edl_runs(b)?;
    let same: Vec<bool> = a.decisions.iter().zip(&b.decisions).map(|(x, y)| x.shot_id == y.shot_id).collect();
    let runs = runs_a
        .iter()
        .map(|r| RunAgreement {
            shot_id: r.shot_id,
            start: r.start,
            len: r.len,
            matched: same[r.start..r.start + r.len].iter().filter(|&&s| s).count(),
        })
        .collect();
    let mut disagreements: Vec<Disagreement> = Vec::new();
    for (t, &s) in same.iter().enumerate() {
        if s {
            continue;
        }
        match disagreements.last_mut() {
            Some(d) if d.start + d.len == t => d.len += 1,
            _ => disagreements.push(Disagreement { start: t, len: 1 }),
        }
    }
    Ok(Comparison {
        frames: a.len(),
        match_rate: rate,
        cut_count_a: runs_a.len() - 1,
        cut_count_b: runs_b.len() - 1,
        cut_delta: runs_b.len() as i64 - runs_a.len() as i64,
        runs,
        disagreements,
    })
}
