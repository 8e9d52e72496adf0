//! Fixed-lag selection over a sliding window of DP columns.

use std::collections::VecDeque;

use serde::Serialize;

use super::dp::{Column, CostModel};
use crate::editcost::{edit_cost, CostParams, PotentialVector};
use crate::error::{Error, Result};
use crate::model::{BBox, FrameIndex, ShotId};
use crate::params::EditParams;

/// One retained frame of the window.
#[derive(Debug, Clone)]
pub struct WindowColumn {
    pub frame: FrameIndex,
    pub column: Column,
    pub potentials: PotentialVector,
    pub crops: Vec<BBox>,
}

/// Columns from the last emitted frame up to the newest one.
#[derive(Debug, Clone, Default)]
pub struct CostWindow {
    columns: VecDeque<WindowColumn>,
}

impl CostWindow {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn oldest(&self) -> Option<&WindowColumn> {
        self.columns.front()
    }

    pub fn newest(&self) -> Option<&WindowColumn> {
        self.columns.back()
    }

    pub fn get(&self, frame: FrameIndex) -> Option<&WindowColumn> {
        let first = self.columns.front()?.frame;
        self.columns.get(frame.checked_sub(first)?)
    }

    /// Follows `steps` links back from `state` at column `frame`.
    pub fn backtrack_state(&self, model: &CostModel, frame: FrameIndex, state: usize, steps: usize) -> Result<usize> {
        let first = self.columns.front().map_or(frame + 1, |c| c.frame);
        if frame < first || frame - first >= self.columns.len() || steps > frame - first {
            return Err(Error::BacktrackTooDeep {
                steps,
                depth: self.columns.len(),
            });
        }
        let mut state = state;
        for k in 0..steps {
            state = model.predecessor(&self.columns[frame - first - k].column, state);
        }
        Ok(state)
    }

    /// Shot reached from shot `k`'s best state at the newest column after
    /// `steps` links.
    pub fn backtrack(&self, model: &CostModel, k: ShotId, steps: usize) -> Result<ShotId> {
        let newest = self.columns.back().ok_or(Error::WindowNotFull { have: 0, need: 1 })?;
        let run = model.cell(&newest.column, k).run_len;
        let state = self.backtrack_state(model, newest.frame, model.state(k, run), steps)?;
        Ok(model.decode(state).0)
    }

    fn push(&mut self, column: WindowColumn) {
        self.columns.push_back(column);
    }

    fn retire_before(&mut self, frame: FrameIndex) {
        while self.columns.front().is_some_and(|c| c.frame < frame) {
            self.columns.pop_front();
        }
    }
}

/// A decision for one output frame with the diagnostics shown live.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnlineDecision {
    pub frame: FrameIndex,
    pub shot_id: ShotId,
    pub crop: BBox,
    pub potentials: Vec<f64>,
    /// Frames the emitted shot has been on screen, this one included.
    pub theta: usize,
    pub cut: bool,
    /// Shots `q_k` that were scored, one per reachable `k`; empty when the
    /// previous shot was held or at frame 0.
    pub candidates: Vec<ShotId>,
}

/// Online selector.
///
/// Frame 0 is the shot reached by backtracking `f` steps from the best state
/// `f` frames ahead. Every later frame `e + 1` is chosen with columns
/// `e ..= e + f` available: the previous shot is held while its timer is
/// below `l`; otherwise each shot `k` at column `e + f` is scored by its
/// accumulated cost plus `α` times the continuity cost from the previous
/// shot to the shot `q_k` that `k`'s best path visits at `e + 1`, and the
/// best `q_k` is emitted. Near the end of the clip the look-ahead shrinks to
/// the frames that exist.
#[derive(Debug, Clone)]
pub struct OnlineSelector {
    model: CostModel,
    lookahead: usize,
    alpha: f64,
    window: CostWindow,
    pushed: usize,
    finished: bool,
    emitted: usize,
    prev: Option<ShotId>,
    theta: usize,
}

impl OnlineSelector {
    pub fn new(params: &EditParams, shots: usize) -> Result<Self> {
        Ok(OnlineSelector {
            model: CostModel::new(params, shots)?,
            lookahead: params.lookahead_frames,
            alpha: params.alpha_continuity,
            window: CostWindow::default(),
            pushed: 0,
            finished: false,
            emitted: 0,
            prev: None,
            theta: 0,
        })
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    pub fn window(&self) -> &CostWindow {
        &self.window
    }

    pub fn lookahead(&self) -> usize {
        self.lookahead
    }

    pub fn columns_pushed(&self) -> usize {
        self.pushed
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn previous_shot(&self) -> Option<ShotId> {
        self.prev
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Changes live cost weights and α; later columns and decisions use them.
    pub fn set_live(&mut self, params: CostParams, alpha: f64) -> Result<()> {
        self.model.set_params(params)?;
        self.alpha = alpha;
        Ok(())
    }

    /// Appends the column of the next frame.
    pub fn push(&mut self, potentials: PotentialVector, crops: Vec<BBox>) -> Result<()> {
        if self.finished {
            return Err(Error::invalid("selector already finished"));
        }
        let column = match self.window.newest() {
            None => {
                if crops.len() != self.model.shots() {
                    return Err(Error::invalid("crop count differs from shot count"));
                }
                self.model.init_column(&potentials)?
            }
            Some(prev) => self.model.advance_column(&prev.column, &potentials, &prev.crops, &crops)?,
        };
        self.window.push(WindowColumn {
            frame: self.pushed,
            column,
            potentials,
            crops,
        });
        self.pushed += 1;
        Ok(())
    }

    /// Marks the end of the clip; the remaining frames drain with a
    /// shrinking look-ahead.
    pub fn finish(&mut self) {
        self.finished = true;
    }

    /// Columns still needed before the next decision can be made, zero when
    /// it is ready or the clip has ended.
    pub fn columns_needed(&self) -> usize {
        if self.finished {
            return 0;
        }
        let need = self.newest_needed(self.emitted) + 1;
        need.saturating_sub(self.pushed)
    }

    fn newest_needed(&self, frame: FrameIndex) -> FrameIndex {
        if frame == 0 {
            self.lookahead
        } else {
            frame - 1 + self.lookahead
        }
    }

    /// Emits the next frame's decision if its look-ahead is available.
    pub fn next_decision(&mut self) -> Result<Option<OnlineDecision>> {
        let t = self.emitted;
        if t >= self.pushed || self.columns_needed() > 0 {
            return Ok(None);
        }
        let horizon = self.newest_needed(t).min(self.pushed - 1);
        let model = &self.model;
        let newest = self.window.get(horizon).expect("horizon column retained");

        let (shot, candidates) = match self.prev {
            None => {
                let state = model.argmin(&newest.column);
                let state = self.window.backtrack_state(model, horizon, state, horizon)?;
                (model.decode(state).0, Vec::new())
            }
            Some(p) if self.theta < model.params().min_shot => (p, Vec::new()),
            Some(p) => self.best_continuation(p, t, horizon)?,
        };

        let current = self.window.get(t).expect("emitted column retained");
        let decision = OnlineDecision {
            frame: t,
            shot_id: shot,
            crop: current.crops[shot],
            potentials: current.potentials.clone(),
            theta: if self.prev == Some(shot) { self.theta + 1 } else { 1 },
            cut: self.prev.is_some_and(|p| p != shot),
            candidates,
        };
        self.theta = decision.theta;
        self.prev = Some(shot);
        self.emitted += 1;
        self.window.retire_before(t);
        Ok(Some(decision))
    }

    /// `argmin_k F_k + α·(C(p, e) − ln G_{e+1}(q_k) + E_e(p, q_k, θ))`.
    fn best_continuation(&self, p: ShotId, t: FrameIndex, horizon: FrameIndex) -> Result<(ShotId, Vec<ShotId>)> {
        let model = &self.model;
        let prev = self.window.get(t - 1).expect("previous column retained");
        let cur = self.window.get(t).expect("current column retained");
        let newest = self.window.get(horizon).expect("horizon column retained");
        let held = prev.column.costs[model.state(p, self.theta)];
        let held = if held.is_finite() { held } else { 0.0 };
        let mut best: Option<(f64, ShotId)> = None;
        let mut candidates = Vec::with_capacity(model.shots());
        for k in 0..model.shots() {
            let cell = model.cell(&newest.column, k);
            if !cell.cost.is_finite() {
                continue;
            }
            let state = self
                .window
                .backtrack_state(model, horizon, model.state(k, cell.run_len), horizon - t)?;
            let q = model.decode(state).0;
            candidates.push(q);
            let continuity = held - cur.potentials[q].ln()
                + edit_cost(p, q, &prev.crops[p], &cur.crops[q], self.theta, model.params());
            let score = cell.cost + self.alpha * continuity;
            if best.is_none_or(|(b, _)| score < b) {
                best = Some((score, q));
            }
        }
        Ok((best.map_or(p, |(_, q)| q), candidates))
    }
}
