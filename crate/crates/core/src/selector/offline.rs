//! Whole-clip optimum and an exhaustive reference for small instances.

use super::dp::{Column, CostModel};
use crate::editcost::{edit_cost, CostParams, PotentialVector};
use crate::error::{Error, Result};
use crate::model::{BBox, ShotId};

/// Largest number of sequences [`brute_force_oracle`] will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

/// Minimizing sequence and its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineResult {
    pub shots: Vec<ShotId>,
    pub objective: f64,
}

/// Full forward pass over every frame, then a single backtrack from the best
/// terminal state.
pub fn offline_select(model: &CostModel, potentials: &[PotentialVector], crops: &[Vec<BBox>]) -> Result<OfflineResult> {
    if potentials.is_empty() {
        return Err(Error::invalid("no frames to select"));
    }
    if potentials.len() != crops.len() {
        return Err(Error::LengthMismatch(potentials.len(), crops.len()));
    }
    let mut columns: Vec<Column> = Vec::with_capacity(potentials.len());
    let mut offsets = 0.0;
    let mut last = model.init_column(&potentials[0])?;
    for t in 1..potentials.len() {
        let next = model.advance_column(&last, &potentials[t], &crops[t - 1], &crops[t])?;
        offsets += last.offset;
        // Only the links are needed behind the frontier.
        let mut done = std::mem::replace(&mut last, next);
        done.costs = Vec::new();
        columns.push(done);
    }
    offsets += last.offset;
    let mut state = model.argmin(&last);
    let objective = last.costs[state] + offsets;
    columns.push(last);

    let mut shots = vec![0; potentials.len()];
    for t in (0..potentials.len()).rev() {
        shots[t] = model.decode(state).0;
        if t > 0 {
            state = model.predecessor(&columns[t], state);
        }
    }
    Ok(OfflineResult { shots, objective })
}

/// Objective of one sequence evaluated term by term; `None` if a run other
/// than the last is shorter than `l`.
pub fn sequence_cost(shots: &[ShotId], potentials: &[PotentialVector], crops: &[Vec<BBox>], p: &CostParams) -> Option<f64> {
    let mut total = 0.0;
    let mut run = 0;
    for t in 0..shots.len() {
        if t > 0 {
            let (i, j) = (shots[t - 1], shots[t]);
            if i != j && run < p.min_shot {
                return None;
            }
            total += edit_cost(i, j, &crops[t - 1][i], &crops[t][j], run, p);
            run = if i == j { run + 1 } else { 1 };
        } else {
            run = 1;
        }
        total += -potentials[t][shots[t]].ln();
    }
    Some(total)
}

/// Enumerates every shot sequence; ties go to the lexicographically smallest.
pub fn brute_force_oracle(
    potentials: &[PotentialVector],
    crops: &[Vec<BBox>],
    p: &CostParams,
) -> Result<(Vec<ShotId>, f64)> {
    let frames = potentials.len();
    let shots = potentials.first().map_or(0, Vec::len);
    if frames == 0 || shots == 0 {
        return Err(Error::invalid("empty instance"));
    }
    let count = (shots as f64).powi(frames as i32);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(count));
    }
    let mut seq = vec![0; frames];
    let mut best: Option<(Vec<ShotId>, f64)> = None;
    loop {
        if let Some(c) = sequence_cost(&seq, potentials, crops, p) {
            if best.as_ref().is_none_or(|(_, b)| c < *b) {
                best = Some((seq.clone(), c));
            }
        }
        // Odometer increment, last frame fastest.
        let mut k = frames;
        loop {
            if k == 0 {
                return best.ok_or_else(|| Error::invalid("no feasible sequence"));
            }
            k -= 1;
            seq[k] += 1;
            if seq[k] < shots {
                break;
            }
            seq[k] = 0;
        }
    }
}
