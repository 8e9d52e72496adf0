//! Gaze potentials and the pairwise editing costs between consecutive shots.

use crate::error::{Error, Result};
use crate::model::{BBox, GazeSample};
use crate::params::EditParams;

/// Run-length states beyond this are refused; see [`rhythm_cap`].
pub const MAX_RUN_STATES: usize = 100_000;

/// Per-shot potentials: strictly positive, summing to one.
pub type PotentialVector = Vec<f64>;

/// `G_i ∝ ε + Σ_k exp(−d(g_k, center_i)² / 2σ²)`, normalized over shots.
pub fn gaze_potential(crops: &[BBox], gaze: &[GazeSample], sigma: f64, epsilon: f64) -> PotentialVector {
    let mut raw: Vec<f64> = crops
        .iter()
        .map(|c| {
            let (cx, cy) = c.center();
            let kernel: f64 = gaze
                .iter()
                .map(|g| {
                    let d2 = (g.x - cx).powi(2) + (g.y - cy).powi(2);
                    (-d2 / (2.0 * sigma * sigma)).exp()
                })
                .sum();
            epsilon + kernel
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter_mut().for_each(|v| *v /= total);
    raw
}

pub fn transition_cost(i: usize, j: usize, lambda: f64) -> f64 {
    if i == j {
        0.0
    } else {
        lambda
    }
}

/// Intersection over union.
pub fn overlap_ratio(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Cost fields of [`EditParams`] used by the selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub lambda: f64,
    pub o_low: f64,
    pub o_high: f64,
    pub mu: f64,
    pub upsilon: f64,
    pub gamma_cut: f64,
    pub gamma_stay: f64,
    pub min_shot: usize,
    pub m_stay: usize,
    /// Logistic softness, frames.
    pub scale: f64,
}

impl From<&EditParams> for CostParams {
    fn from(p: &EditParams) -> Self {
        CostParams {
            lambda: p.lambda_transition,
            o_low: p.o_low,
            o_high: p.o_high,
            mu: p.mu_overlap,
            upsilon: p.upsilon_overlap,
            gamma_cut: p.gamma_cut,
            gamma_stay: p.gamma_stay,
            min_shot: p.min_shot_frames,
            m_stay: p.m_stay,
            scale: p.rhythm_scale(),
        }
    }
}

/// Jump-cut penalty: zero up to `o_low`, linear ramp to `mu` at `o_high`,
/// then `upsilon`.
pub fn overlap_cost(gamma: f64, p: &CostParams) -> f64 {
    if gamma <= p.o_low {
        0.0
    } else if gamma < p.o_high {
        p.mu * (gamma - p.o_low) / (p.o_high - p.o_low)
    } else {
        p.upsilon
    }
}

/// Unit cut-rhythm term; falls from 1 to 0 around `τ = l`.
pub fn unit_cut(tau: f64, p: &CostParams) -> f64 {
    1.0 - 1.0 / (1.0 + ((p.min_shot as f64 - tau) / p.scale).exp())
}

/// Unit stay-rhythm term; rises from 0 to 1 around `τ = m_stay`.
pub fn unit_stay(tau: f64, p: &CostParams) -> f64 {
    1.0 - 1.0 / (1.0 + ((tau - p.m_stay as f64) / p.scale).exp())
}

/// Rhythm cost of moving from shot `i` (held for `tau` frames) to `j`.
pub fn rhythm_cost(i: usize, j: usize, tau: usize, p: &CostParams) -> f64 {
    if i == j {
        p.gamma_stay * unit_stay(tau as f64, p)
    } else {
        p.gamma_cut * unit_cut(tau as f64, p)
    }
}

/// `T + O + R` for the step from `i` (crop `crop_i`, held `tau` frames) to
/// `j` (crop `crop_j`).
pub fn edit_cost(i: usize, j: usize, crop_i: &BBox, crop_j: &BBox, tau: usize, p: &CostParams) -> f64 {
    let overlap = if i == j {
        0.0
    } else {
        overlap_cost(overlap_ratio(crop_i, crop_j), p)
    };
    transition_cost(i, j, p.lambda) + overlap + rhythm_cost(i, j, tau, p)
}

/// Smallest run length `R ≥ l` from which both unit rhythm terms are exactly
/// constant (0 and 1) in floating point. Run lengths can saturate at `R`
/// without changing any cost.
pub fn rhythm_cap(p: &CostParams) -> Result<usize> {
    let mut r = p.min_shot.max(1);
    loop {
        if unit_cut(r as f64, p) == 0.0 && unit_stay(r as f64, p) == 1.0 {
            return Ok(r);
        }
        r += 1;
        if r > MAX_RUN_STATES {
            return Err(Error::Param {
                field: "m_stay",
                msg: format!("rhythm terms do not saturate within {MAX_RUN_STATES} frames"),
            });
        }
    }
}

/// Rhythm costs tabulated for run lengths `0..=R`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhythmTable {
    cap: usize,
    unit_cut: Vec<f64>,
    unit_stay: Vec<f64>,
    cut: Vec<f64>,
    stay: Vec<f64>,
}

impl RhythmTable {
    pub fn new(p: &CostParams) -> Result<Self> {
        let cap = rhythm_cap(p)?;
        let unit_cut: Vec<f64> = (0..=cap).map(|r| unit_cut(r as f64, p)).collect();
        let unit_stay: Vec<f64> = (0..=cap).map(|r| unit_stay(r as f64, p)).collect();
        let mut table = RhythmTable {
            cap,
            cut: Vec::new(),
            stay: Vec::new(),
            unit_cut,
            unit_stay,
        };
        table.rescale(p.gamma_cut, p.gamma_stay);
        Ok(table)
    }

    /// Applies new magnitudes; the run-length cap is unaffected.
    pub fn rescale(&mut self, gamma_cut: f64, gamma_stay: f64) {
        self.cut = self.unit_cut.iter().map(|u| gamma_cut * u).collect();
        self.stay = self.unit_stay.iter().map(|u| gamma_stay * u).collect();
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Cost of cutting away after `run` frames.
    pub fn cut(&self, run: usize) -> f64 {
        self.cut[run.min(self.cap)]
    }

    /// Cost of holding for another frame after `run` frames.
    pub fn stay(&self, run: usize) -> f64 {
        self.stay[run.min(self.cap)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClipInfo;
    use proptest::prelude::*;

    fn params() -> CostParams {
        let clip = ClipInfo::new(1920.0, 1080.0, 25.0, 100).unwrap();
        CostParams::from(&EditParams::defaults(&clip))
    }

    fn gaze(x: f64, y: f64) -> GazeSample {
        GazeSample { user_id: 0, frame: 0, x, y }
    }

    #[test]
    fn single_shot_potential_is_one() {
        let g = gaze_potential(&[BBox::new(0.0, 0.0, 10.0, 10.0)], &[gaze(500.0, 3.0)], 100.0, 1e-3);
        assert_eq!(g, vec![1.0]);
    }

    #[test]
    fn equidistant_gaze_splits_evenly() {
        let crops = [BBox::new(0.0, 0.0, 100.0, 100.0), BBox::new(200.0, 0.0, 100.0, 100.0)];
        let g = gaze_potential(&crops, &[gaze(150.0, 50.0)], 100.0, 1e-3);
        assert!((g[0] - 0.5).abs() < 1e-12 && (g[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kernel_values() {
        // Shot centers at (100, 100) and (300, 100); gaze on the first.
        let crops = [BBox::new(50.0, 50.0, 100.0, 100.0), BBox::new(250.0, 50.0, 100.0, 100.0)];
        let g = gaze_potential(&crops, &[gaze(100.0, 100.0)], 100.0, 1e-3);
        let r1 = 1.001;
        let r2 = (-2.0f64).exp() + 0.001;
        assert!((g[0] - r1 / (r1 + r2)).abs() < 1e-12);
        assert!((g[0] - 0.8801).abs() < 1e-4 && (g[1] - 0.1199).abs() < 1e-4);
    }

    #[test]
    fn no_gaze_is_uniform() {
        let crops = [BBox::new(0.0, 0.0, 1.0, 1.0), BBox::new(5.0, 0.0, 1.0, 1.0), BBox::new(9.0, 9.0, 3.0, 1.0)];
        let g = gaze_potential(&crops, &[], 100.0, 1e-3);
        assert!(g.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn transitions() {
        assert_eq!(transition_cost(3, 3, 4.0), 0.0);
        assert_eq!(transition_cost(1, 2, 4.0), 4.0);
        assert_eq!(transition_cost(1, 2, 0.0), 0.0);
    }

    #[test]
    fn overlap_examples() {
        let a = BBox::new(0.0, 0.0, 2.0, 2.0);
        assert_eq!(overlap_ratio(&a, &a), 1.0);
        assert_eq!(overlap_ratio(&a, &BBox::new(5.0, 5.0, 1.0, 1.0)), 0.0);
        assert!((overlap_ratio(&a, &BBox::new(1.0, 0.0, 2.0, 2.0)) - 2.0 / 6.0).abs() < 1e-12);
        let p = params();
        assert_eq!(overlap_cost(0.1, &p), 0.0);
        assert_eq!(overlap_cost(1.0, &p), 10.0);
        assert!((overlap_cost(0.55, &p) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rhythm_examples() {
        let p = params();
        assert_eq!(rhythm_cost(0, 1, p.min_shot, &p), p.gamma_cut * 0.5);
        assert!(rhythm_cost(0, 0, 10, &p) < 1e-12);
        let late = (p.min_shot as f64 + 10.0 * p.scale) as usize;
        assert!(rhythm_cost(0, 1, late, &p) < p.gamma_cut * 1e-4);
    }

    #[test]
    fn edit_cost_sums() {
        let p = params();
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BBox::new(100.0, 0.0, 10.0, 10.0);
        assert!(edit_cost(2, 2, &a, &a, 5, &p) < 1e-12);
        assert_eq!(edit_cost(0, 1, &a, &b, p.min_shot, &p), p.lambda + p.gamma_cut / 2.0);
        let long = edit_cost(0, 1, &a, &a, 10_000, &p);
        assert_eq!(long, p.lambda + p.upsilon);
    }

    #[test]
    fn cap_saturates_both_terms() {
        let p = params();
        let table = RhythmTable::new(&p).unwrap();
        let r = table.cap();
        assert!(r >= p.min_shot);
        assert!(unit_cut((r - 1) as f64, &p) > 0.0 || unit_stay((r - 1) as f64, &p) < 1.0);
        for tau in [r, r + 1, r + 100, 1_000_000] {
            assert_eq!(rhythm_cost(0, 1, tau, &p), table.cut(r));
            assert_eq!(rhythm_cost(0, 0, tau, &p), table.stay(r));
        }
        assert_eq!(table.cut(r), 0.0);
        assert_eq!(table.stay(r), p.gamma_stay);
    }

    #[test]
    fn rescale_keeps_cap() {
        let p = params();
        let mut t = RhythmTable::new(&p).unwrap();
        let cap = t.cap();
        t.rescale(1.0, 2.0);
        assert_eq!(t.cap(), cap);
        assert_eq!(t.stay(cap), 2.0);
        assert_eq!(t.cut(p.min_shot), 0.5);
    }

    proptest! {
        #[test]
        fn potentials_are_a_distribution(
            centers in proptest::collection::vec((0.0f64..1920.0, 0.0f64..1080.0), 1..10),
            gazes in proptest::collection::vec((0.0f64..1920.0, 0.0f64..1080.0), 0..6),
            sigma in 1.0f64..500.0,
        ) {
            let crops: Vec<BBox> = centers.iter().map(|&(x, y)| BBox::from_center(x, y, 50.0, 30.0)).collect();
            let samples: Vec<GazeSample> = gazes.iter().map(|&(x, y)| gaze(x, y)).collect();
            let g = gaze_potential(&crops, &samples, sigma, 1e-3);
            prop_assert!(g.iter().all(|v| *v > 0.0));
            prop_assert!((g.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            // Equivariance under reversing the shot order.
            let rev: Vec<BBox> = crops.iter().rev().copied().collect();
            let mut gr = gaze_potential(&rev, &samples, sigma, 1e-3);
            gr.reverse();
            for (a, b) in g.iter().zip(&gr) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            // Invariance under reversing the gaze order.
            let samples_rev: Vec<GazeSample> = samples.iter().rev().copied().collect();
            let gs = gaze_potential(&crops, &samples_rev, sigma, 1e-3);
            for (a, b) in g.iter().zip(&gs) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn monotone_costs(a in 0.0f64..1.0, b in 0.0f64..1.0, t1 in 0usize..600, t2 in 0usize..600) {
            let p = params();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(overlap_cost(lo, &p) <= overlap_cost(hi, &p));
            let (s, l) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(rhythm_cost(0, 1, s, &p) >= rhythm_cost(0, 1, l, &p));
            prop_assert!(rhythm_cost(1, 1, s, &p) <= rhythm_cost(1, 1, l, &p));
        }
    }
}
