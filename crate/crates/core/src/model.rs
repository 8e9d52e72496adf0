//! Shared domain types. All geometry is in master-shot pixels and frames are
//! 0-based.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type FrameIndex = usize;
pub type ActorId = u32;
pub type UserId = u32;
pub type ShotId = usize;

/// Geometry and timing of the master shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipInfo {
    pub width: f64,
    pub height: f64,
    pub fps: f64,
    pub frame_count: usize,
}

impl ClipInfo {
    pub fn new(width: f64, height: f64, fps: f64, frame_count: usize) -> Result<Self> {
        let clip = ClipInfo {
            width,
            height,
            fps,
            frame_count,
        };
        clip.validate()?;
        Ok(clip)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return Err(Error::invalid(format!(
                "clip dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::invalid(format!("fps must be positive, got {}", self.fps)));
        }
        if self.frame_count == 0 {
            return Err(Error::invalid("frame_count must be positive"));
        }
        Ok(())
    }

    /// Number of frames spanning `seconds`, rounded to the nearest frame.
    pub fn frames(&self, seconds: f64) -> usize {
        (seconds * self.fps).round().max(0.0) as usize
    }

    pub fn seconds(&self, frames: usize) -> f64 {
        frames as f64 / self.fps
    }

    pub fn full_frame(&self) -> BBox {
        BBox::new(0.0, 0.0, self.width, self.height)
    }
}

/// Axis-aligned rectangle, top-left corner plus size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        BBox::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0 && self.h > 0.0 && [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite())
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.right().min(other.right()) - self.x.max(other.x);
        let h = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &BBox) -> BBox {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        BBox::new(
            x,
            y,
            self.right().max(other.right()) - x,
            self.bottom().max(other.bottom()) - y,
        )
    }

    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x && px <= self.right() && py >= self.y && py <= self.bottom()
    }

    pub fn contains(&self, other: &BBox) -> bool {
        other.x >= self.x && other.y >= self.y && other.right() <= self.right() && other.bottom() <= self.bottom()
    }

    /// Intersection with the clip rectangle, `None` when nothing remains.
    pub fn clamp_to(&self, clip: &ClipInfo) -> Option<BBox> {
        if self.is_valid() && clip.full_frame().contains(self) {
            return Some(*self);
        }
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = self.right().min(clip.width);
        let y1 = self.bottom().min(clip.height);
        (x1 > x0 && y1 > y0).then(|| BBox::new(x0, y0, x1 - x0, y1 - y0))
    }

    /// Componentwise linear interpolation of the corner coordinates.
    pub fn lerp(&self, other: &BBox, t: f64) -> BBox {
        let (x0, y0) = (self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t);
        let (x1, y1) = (
            self.right() + (other.right() - self.right()) * t,
            self.bottom() + (other.bottom() - self.bottom()) * t,
        );
        BBox::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorObservation {
    pub actor_id: ActorId,
    pub frame: FrameIndex,
    pub bbox: BBox,
}

/// Per-frame actor boxes plus the clip-level left-to-right actor order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSet {
    clip: ClipInfo,
    /// `frames[t]` holds `(actor, box)` pairs sorted by actor id.
    frames: Vec<Vec<(ActorId, BBox)>>,
    order: Vec<ActorId>,
}

impl TrackSet {
    /// Builds a track set from already-validated, complete observations.
    ///
    /// Every frame needs at least one actor and each `(actor, frame)` pair
    /// may appear once.
    pub fn from_observations(clip: ClipInfo, observations: impl IntoIterator<Item = ActorObservation>) -> Result<Self> {
        clip.validate()?;
        let mut frames: Vec<Vec<(ActorId, BBox)>> = vec![Vec::new(); clip.frame_count];
        for obs in observations {
            let slot = frames.get_mut(obs.frame).ok_or_else(|| {
                Error::invalid(format!("frame {} beyond frame_count {}", obs.frame, clip.frame_count))
            })?;
            if !obs.bbox.is_valid() {
                return Err(Error::invalid(format!(
                    "actor {} frame {}: box must have positive size",
                    obs.actor_id, obs.frame
                )));
            }
            slot.push((obs.actor_id, obs.bbox));
        }
        for (t, slot) in frames.iter_mut().enumerate() {
            if slot.is_empty() {
                return Err(Error::invalid(format!("frame {t} has no actors")));
            }
            slot.sort_by_key(|(id, _)| *id);
            if slot.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::invalid(format!("duplicate observation in frame {t}")));
            }
        }
        let order = crate::shotgen::order_actors_in(&frames);
        Ok(TrackSet { clip, frames, order })
    }

    pub fn clip(&self) -> &ClipInfo {
        &self.clip
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn boxes_at(&self, frame: FrameIndex) -> &[(ActorId, BBox)] {
        &self.frames[frame]
    }

    pub fn bbox(&self, frame: FrameIndex, actor: ActorId) -> Option<BBox> {
        let slot = self.frames.get(frame)?;
        slot.binary_search_by_key(&actor, |(id, _)| *id).ok().map(|i| slot[i].1)
    }

    /// Actors left to right by median center-x.
    pub fn actor_order(&self) -> &[ActorId] {
        &self.order
    }

    /// Number of distinct actors; shot groups are enumerated over these.
    pub fn actor_count(&self) -> usize {
        self.order.len()
    }

    pub fn max_simultaneous(&self) -> usize {
        self.frames.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn observations(&self) -> impl Iterator<Item = ActorObservation> + '_ {
        self.frames.iter().enumerate().flat_map(|(frame, slot)| {
            slot.iter().map(move |&(actor_id, bbox)| ActorObservation { actor_id, frame, bbox })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub user_id: UserId,
    pub frame: FrameIndex,
    pub x: f64,
    pub y: f64,
}

impl GazeSample {
    /// Clamps the point into the clip rectangle.
    pub fn clamped(mut self, clip: &ClipInfo) -> Self {
        self.x = self.x.clamp(0.0, clip.width);
        self.y = self.y.clamp(0.0, clip.height);
        self
    }
}

/// Gaze samples binned per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeStream {
    frames: Vec<Vec<GazeSample>>,
    users: BTreeSet<UserId>,
}

impl GazeStream {
    pub fn new(frame_count: usize) -> Self {
        GazeStream {
            frames: vec![Vec::new(); frame_count],
            users: BTreeSet::new(),
        }
    }

    /// Adds a sample; frames outside the stream are rejected.
    pub fn push(&mut self, sample: GazeSample) -> Result<()> {
        let n = self.frames.len();
        let slot = self.frames.get_mut(sample.frame)
            .ok_or_else(|| Error::invalid(format!("gaze frame {} beyond frame_count {n}", sample.frame)))?;
        slot.push(sample);
        self.users.insert(sample.user_id);
        Ok(())
    }

    pub fn at(&self, frame: FrameIndex) -> &[GazeSample] {
        self.frames.get(frame).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn samples(&self) -> impl Iterator<Item = &GazeSample> {
        self.frames.iter().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SizeClass {
    MediumShot,
    FullShot,
}

/// A virtual camera over a contiguous interval of the ordered actors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotSpec {
    pub shot_id: ShotId,
    /// Inclusive `[first, last]` positions in the actor order.
    pub group: (usize, usize),
    pub size_class: SizeClass,
}

impl ShotSpec {
    pub fn len(&self) -> usize {
        self.group.1 - self.group.0 + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn covers(&self, position: usize) -> bool {
        (self.group.0..=self.group.1).contains(&position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditDecision {
    pub frame: FrameIndex,
    pub shot_id: ShotId,
    pub crop: BBox,
}

/// One decision per frame, contiguous from frame 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EditDecisionList {
    pub clip: ClipInfo,
    pub decisions: Vec<EditDecision>,
}

/// A maximal stretch of frames using one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub shot_id: ShotId,
    pub start: FrameIndex,
    pub len: usize,
}

impl EditDecisionList {
    pub fn new(clip: ClipInfo, decisions: Vec<EditDecision>) -> Result<Self> {
        if let Some((i, d)) = decisions.iter().enumerate().find(|(i, d)| d.frame != *i) {
            return Err(Error::invalid(format!("decision {i} carries frame {}", d.frame)));
        }
        Ok(EditDecisionList { clip, decisions })
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn shot_ids(&self) -> Vec<ShotId> {
        self.decisions.iter().map(|d| d.shot_id).collect()
    }
}

/// Splits an EDL into maximal runs of equal shot id.
pub fn edl_runs(edl: &EditDecisionList) -> Result<Vec<Run>> {
    if edl.is_empty() {
        return Err(Error::invalid("empty edit decision list"));
    }
    Ok(runs_of(&edl.shot_ids()))
}

/// Maximal runs of equal shot id.
pub fn runs_of(shots: &[ShotId]) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (t, &shot_id) in shots.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.shot_id == shot_id => run.len += 1,
            _ => runs.push(Run { shot_id, start: t, len: 1 }),
        }
    }
    runs
}

/// Fraction of frames on which both lists select the same shot.
pub fn match_rate(a: &EditDecisionList, b: &EditDecisionList) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::invalid("empty edit decision list"));
    }
    let agree = a
        .decisions
        .iter()
        .zip(&b.decisions)
        .filter(|(x, y)| x.shot_id == y.shot_id)
        .count();
    Ok(agree as f64 / a.len() as f64)
}
