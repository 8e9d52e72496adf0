//! Forward recurrence over (shot, run length) states.
//!
//! A state `(j, r)` means shot `j` has been on screen for the last `r`
//! frames. Run lengths saturate at the rhythm cap `R`, beyond which no cost
//! depends on `r`. A cut out of `(i, r)` is allowed only once `r ≥ l`.

use crate::editcost::{overlap_cost, overlap_ratio, CostParams, PotentialVector, RhythmTable};
use crate::error::{Error, Result};
use crate::model::{BBox, ShotId};
use crate::params::EditParams;

const NONE: u32 = u32::MAX;

/// Cost terms shared by every column of one selection run.
#[derive(Debug, Clone)]
pub struct CostModel {
    params: CostParams,
    rhythm: RhythmTable,
    shots: usize,
    renormalize: bool,
}

impl CostModel {
    pub fn new(params: &EditParams, shots: usize) -> Result<Self> {
        let cost = CostParams::from(params);
        Self::from_cost_params(cost, shots, params.renormalize)
    }

    pub fn from_cost_params(params: CostParams, shots: usize, renormalize: bool) -> Result<Self> {
        if shots == 0 {
            return Err(Error::invalid("no candidate shots"));
        }
        Ok(CostModel {
            rhythm: RhythmTable::new(&params)?,
            params,
            shots,
            renormalize,
        })
    }

    pub fn params(&self) -> &CostParams {
        &self.params
    }

    pub fn rhythm(&self) -> &RhythmTable {
        &self.rhythm
    }

    pub fn shots(&self) -> usize {
        self.shots
    }

    /// Run-length cap `R`.
    pub fn cap(&self) -> usize {
        self.rhythm.cap()
    }

    pub fn states(&self) -> usize {
        self.shots * self.cap()
    }

    /// Replaces the cost magnitudes. The minimum shot length, `m_stay` and
    /// the logistic scale must not change since they fix the state space.
    pub fn set_params(&mut self, params: CostParams) -> Result<()> {
        let p = &self.params;
        if params.min_shot != p.min_shot || params.m_stay != p.m_stay || params.scale != p.scale {
            return Err(Error::invalid("run-length parameters are fixed for a selector"));
        }
        self.rhythm.rescale(params.gamma_cut, params.gamma_stay);
        self.params = params;
        Ok(())
    }

    pub fn state(&self, shot: ShotId, run: usize) -> usize {
        shot * self.cap() + run.clamp(1, self.cap()) - 1
    }

    /// `(shot, run length)` of a state index.
    pub fn decode(&self, state: usize) -> (ShotId, usize) {
        (state / self.cap(), state % self.cap() + 1)
    }

    /// `−ln G`, rejecting entries that are not strictly positive.
    pub fn unary(&self, potentials: &[f64]) -> Result<Vec<f64>> {
        if potentials.len() != self.shots {
            return Err(Error::invalid(format!(
                "{} potentials for {} shots",
                potentials.len(),
                self.shots
            )));
        }
        potentials
            .iter()
            .map(|&g| {
                if g > 0.0 && g.is_finite() {
                    Ok(-g.ln())
                } else {
                    Err(Error::invalid(format!("potential {g} is not strictly positive")))
                }
            })
            .collect()
    }

    /// First column: every shot starts a run of length one.
    pub fn init_column(&self, potentials: &PotentialVector) -> Result<Column> {
        let unary = self.unary(potentials)?;
        let cap = self.cap();
        let mut costs = vec![f64::INFINITY; self.states()];
        for (j, u) in unary.iter().enumerate() {
            costs[j * cap] = *u;
        }
        let mut column = Column {
            costs,
            cut_from: vec![NONE; self.shots],
            sat_self: vec![false; self.shots],
            offset: 0.0,
        };
        self.finish(&mut column);
        Ok(column)
    }

    /// Next column of the recurrence.
    pub fn advance_column(
        &self,
        prev: &Column,
        potentials: &PotentialVector,
        crops_prev: &[BBox],
        crops_cur: &[BBox],
    ) -> Result<Column> {
        let unary = self.unary(potentials)?;
        if crops_prev.len() != self.shots || crops_cur.len() != self.shots {
            return Err(Error::invalid("crop count differs from shot count"));
        }
        let (cap, s, p) = (self.cap(), self.shots, &self.params);
        let l = p.min_shot;

        // Cheapest way to leave each shot: min over r ≥ l of C(i, r) + cut(r).
        let leave: Vec<(f64, usize)> = (0..s)
            .map(|i| {
                let mut best = (f64::INFINITY, NONE as usize);
                for r in l..=cap {
                    let v = prev.costs[i * cap + r - 1] + self.rhythm.cut(r);
                    if v < best.0 {
                        best = (v, i * cap + r - 1);
                    }
                }
                best
            })
            .collect();

        let mut costs = vec![f64::INFINITY; self.states()];
        let mut cut_from = vec![NONE; s];
        let mut sat_self = vec![false; s];
        for j in 0..s {
            let base = j * cap;
            let mut best = (f64::INFINITY, NONE);
            for (i, &(v, state)) in leave.iter().enumerate() {
                if i == j || !v.is_finite() {
                    continue;
                }
                let c = v + p.lambda + overlap_cost(overlap_ratio(&crops_prev[i], &crops_cur[j]), p);
                if c < best.0 {
                    best = (c, state as u32);
                }
            }
            costs[base] = best.0 + unary[j];
            cut_from[j] = best.1;
            for r in 2..cap {
                costs[base + r - 1] = prev.costs[base + r - 2] + self.rhythm.stay(r - 1) + unary[j];
            }
            let grow = prev.costs[base + cap - 2] + self.rhythm.stay(cap - 1);
            let hold = prev.costs[base + cap - 1] + self.rhythm.stay(cap);
            sat_self[j] = hold < grow;
            costs[base + cap - 1] = grow.min(hold) + unary[j];
        }
        let mut column = Column {
            costs,
            cut_from,
            sat_self,
            offset: 0.0,
        };
        self.finish(&mut column);
        Ok(column)
    }

    fn finish(&self, column: &mut Column) {
        if !self.renormalize {
            return;
        }
        let min = column.costs.iter().copied().fold(f64::INFINITY, f64::min);
        if min.is_finite() {
            column.costs.iter_mut().for_each(|c| *c -= min);
            column.offset = min;
        }
    }

    /// State at the previous column that led to `state`.
    pub fn predecessor(&self, column: &Column, state: usize) -> usize {
        let (j, r) = self.decode(state);
        let cap = self.cap();
        if r == 1 {
            let from = column.cut_from[j];
            assert_ne!(from, NONE, "backtrack through an unreachable state");
            from as usize
        } else if r < cap || !column.sat_self[j] {
            state - 1
        } else {
            state
        }
    }

    /// Smallest-cost state of a column; ties go to the smallest index, so to
    /// the smallest shot and then the shortest run.
    pub fn argmin(&self, column: &Column) -> usize {
        argmin(&column.costs)
    }

    /// Per-shot summary of a column.
    pub fn cell(&self, column: &Column, shot: ShotId) -> CostCell {
        let cap = self.cap();
        let slice = &column.costs[shot * cap..(shot + 1) * cap];
        let r = argmin(slice);
        let backptr = if r == 0 {
            let from = column.cut_from[shot];
            (from != NONE).then(|| from as usize / cap)
        } else {
            Some(shot)
        };
        CostCell {
            cost: slice[r],
            backptr,
            run_len: r + 1,
        }
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// One column of accumulated costs with the links needed to backtrack.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    /// `costs[j·R + r − 1]` for state `(j, r)`; infinite when unreachable.
    pub costs: Vec<f64>,
    /// Predecessor state of each `(j, 1)`.
    cut_from: Vec<u32>,
    /// Whether `(j, R)` came from `(j, R)` rather than `(j, R − 1)`.
    sat_self: Vec<bool>,
    /// Amount subtracted from every cost when the column was built.
    pub offset: f64,
}

/// Best state of one shot in a column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostCell {
    pub cost: f64,
    /// Shot at the previous column on the best path; `None` in the first
    /// column.
    pub backptr: Option<ShotId>,
    /// Frames the best path has held this shot, capped at `R`.
    pub run_len: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(shots: usize, lambda: f64, l: usize) -> CostModel {
        let p = CostParams {
            lambda,
            o_low: 0.3,
            o_high: 0.8,
            mu: 4.0,
            upsilon: 10.0,
            gamma_cut: 0.0,
            gamma_stay: 0.0,
            min_shot: l,
            m_stay: 50,
            scale: 1.0,
        };
        CostModel::from_cost_params(p, shots, false).unwrap()
    }

    fn disjoint(n: usize) -> Vec<BBox> {
        (0..n).map(|i| BBox::new(100.0 * i as f64, 0.0, 10.0, 10.0)).collect()
    }

    #[test]
    fn init_is_negative_log() {
        let m = model(6, 1.0, 1);
        let c = m.init_column(&vec![1.0 / 6.0; 6]).unwrap();
        for j in 0..6 {
            let cell = m.cell(&c, j);
            assert!((cell.cost - 6f64.ln()).abs() < 1e-12);
            assert_eq!(cell.run_len, 1);
            assert_eq!(cell.backptr, None);
        }
        let c = m.init_column(&vec![0.5, 0.5][..].to_vec());
        assert!(c.is_err(), "shot count mismatch");
        let m2 = model(2, 1.0, 1);
        assert!(m2.init_column(&vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn two_shot_advance() {
        let m = model(2, 1.0, 1);
        let g = vec![0.5, 0.5];
        let c0 = m.init_column(&g).unwrap();
        let c1 = m.advance_column(&c0, &g, &disjoint(2), &disjoint(2)).unwrap();
        for j in 0..2 {
            let cell = m.cell(&c1, j);
            assert!((cell.cost - 2.0 * 2f64.ln()).abs() < 1e-12);
            assert_eq!(cell.backptr, Some(j));
            assert_eq!(cell.run_len, 2);
        }
        let s = m.state(1, 2);
        assert_eq!(m.decode(m.predecessor(&c1, s)), (1, 1));
    }

    #[test]
    fn huge_lambda_never_cuts() {
        let m = model(3, 1e12, 1);
        let mut c = m.init_column(&vec![0.2, 0.3, 0.5]).unwrap();
        for g in [[0.9, 0.05, 0.05], [0.05, 0.9, 0.05], [0.05, 0.05, 0.9]] {
            c = m.advance_column(&c, &g.to_vec(), &disjoint(3), &disjoint(3)).unwrap();
            for j in 0..3 {
                assert_eq!(m.cell(&c, j).backptr, Some(j));
            }
        }
    }

    #[test]
    fn offset_shift_keeps_links() {
        let m = model(3, 0.5, 2);
        let g0 = vec![0.6, 0.3, 0.1];
        let g1 = vec![0.1, 0.2, 0.7];
        let c0 = m.init_column(&g0).unwrap();
        let mut shifted = c0.clone();
        shifted.costs.iter_mut().for_each(|c| *c += 123.25);
        let a = m.advance_column(&c0, &g1, &disjoint(3), &disjoint(3)).unwrap();
        let b = m.advance_column(&shifted, &g1, &disjoint(3), &disjoint(3)).unwrap();
        assert_eq!(a.cut_from, b.cut_from);
        assert_eq!(a.sat_self, b.sat_self);
        for (x, y) in a.costs.iter().zip(&b.costs) {
            assert!(x.is_infinite() && y.is_infinite() || (y - x - 123.25).abs() < 1e-9);
        }
    }

    #[test]
    fn cuts_wait_for_min_length() {
        let m = model(2, 0.0, 3);
        let g = vec![0.5, 0.5];
        let mut c = m.init_column(&g).unwrap();
        for t in 1..3 {
            c = m.advance_column(&c, &g, &disjoint(2), &disjoint(2)).unwrap();
            assert!(c.costs[m.state(0, 1)].is_infinite(), "cut possible at t={t}");
        }
        c = m.advance_column(&c, &g, &disjoint(2), &disjoint(2)).unwrap();
        assert!(c.costs[m.state(0, 1)].is_finite());
    }

    #[test]
    fn live_update_keeps_state_space() {
        let mut m = model(2, 1.0, 3);
        let mut p = *m.params();
        p.lambda = 9.0;
        p.gamma_cut = 2.0;
        m.set_params(p).unwrap();
        assert_eq!(m.params().lambda, 9.0);
        p.min_shot = 4;
        assert!(m.set_params(p).is_err());
    }
}
