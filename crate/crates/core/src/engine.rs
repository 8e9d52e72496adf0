//! Frame-by-frame editing loop: tracks in, gaze in, decisions out.

use std::sync::Arc;

use crate::editcost::{gaze_potential, CostParams};
use crate::error::{Error, Result};
use crate::model::{ClipInfo, FrameIndex, GazeSample, GazeStream, ShotSpec, TrackSet};
use crate::params::{EditParams, ParamOverrides};
use crate::selector::{OnlineDecision, OnlineSelector};
use crate::shotgen::{GeneratedFrame, ShotGenerator};

/// Drives shot generation, potentials and online selection one frame at a
/// time.
///
/// `push_frame` feeds the next frame of tracks. A frame's candidate crops
/// become available `w_future` frames later, at which point its potentials
/// are computed from the gaze received for it and its column is appended to
/// the selector. Gaze for a frame whose column already exists is credited to
/// the oldest frame still waiting for its column.
#[derive(Debug, Clone)]
pub struct OnlineEngine {
    tracks: Arc<TrackSet>,
    params: EditParams,
    generator: ShotGenerator,
    selector: OnlineSelector,
    gaze: Vec<Vec<GazeSample>>,
    frames_pushed: usize,
    columns: usize,
}

impl OnlineEngine {
    pub fn new(tracks: Arc<TrackSet>, params: &EditParams) -> Result<Self> {
        params.validate()?;
        let generator = ShotGenerator::new(&tracks, params)?;
        let selector = OnlineSelector::new(params, generator.specs().len())?;
        Ok(OnlineEngine {
            gaze: vec![Vec::new(); tracks.frame_count()],
            tracks,
            params: *params,
            generator,
            selector,
            frames_pushed: 0,
            columns: 0,
        })
    }

    pub fn clip(&self) -> &ClipInfo {
        self.tracks.clip()
    }

    pub fn tracks(&self) -> &Arc<TrackSet> {
        &self.tracks
    }

    pub fn params(&self) -> &EditParams {
        &self.params
    }

    pub fn specs(&self) -> &[ShotSpec] {
        self.generator.specs()
    }

    pub fn frame_count(&self) -> usize {
        self.tracks.frame_count()
    }

    pub fn frames_pushed(&self) -> usize {
        self.frames_pushed
    }

    pub fn decisions_emitted(&self) -> usize {
        self.selector.emitted()
    }

    /// Every frame has been decided.
    pub fn is_done(&self) -> bool {
        self.selector.emitted() == self.frame_count()
    }

    /// Adds one gaze sample, clamped into the frame. Returns the frame it
    /// was credited to, or `None` when every column is already built.
    pub fn add_gaze(&mut self, sample: GazeSample) -> Result<Option<FrameIndex>> {
        if sample.frame >= self.frame_count() {
            return Err(Error::invalid(format!(
                "gaze frame {} beyond frame_count {}",
                sample.frame,
                self.frame_count()
            )));
        }
        if !(sample.x.is_finite() && sample.y.is_finite()) {
            return Err(Error::invalid("gaze coordinates must be finite"));
        }
        let mut sample = sample.clamped(self.tracks.clip());
        let frame = sample.frame.max(self.columns);
        if frame >= self.frame_count() {
            return Ok(None);
        }
        sample.frame = frame;
        self.gaze[frame].push(sample);
        Ok(Some(frame))
    }

    /// Loads a whole recorded gaze stream.
    pub fn load_gaze(&mut self, gaze: &GazeStream) -> Result<()> {
        if gaze.frame_count() != self.frame_count() {
            return Err(Error::LengthMismatch(gaze.frame_count(), self.frame_count()));
        }
        for s in gaze.samples() {
            self.add_gaze(*s)?;
        }
        Ok(())
    }

    /// Feeds the next frame of tracks; false once the clip is exhausted.
    pub fn push_frame(&mut self) -> Result<bool> {
        if self.frames_pushed == self.frame_count() {
            return Ok(false);
        }
        let tracks = Arc::clone(&self.tracks);
        let generated = self.generator.push_frame(tracks.boxes_at(self.frames_pushed))?;
        self.frames_pushed += 1;
        if let Some(frame) = generated {
            self.append_column(frame)?;
        }
        if self.frames_pushed == self.frame_count() {
            for frame in self.generator.flush() {
                self.append_column(frame)?;
            }
            self.selector.finish();
        }
        Ok(true)
    }

    fn append_column(&mut self, frame: GeneratedFrame) -> Result<()> {
        debug_assert_eq!(frame.frame, self.columns);
        let gaze = &self.gaze[frame.frame];
        let potentials = gaze_potential(&frame.crops, gaze, self.params.sigma_gaze, self.params.epsilon_gaze);
        self.selector.push(potentials, frame.crops)?;
        self.columns += 1;
        Ok(())
    }

    /// Next decision, if its look-ahead has arrived.
    pub fn next_decision(&mut self) -> Result<Option<OnlineDecision>> {
        self.selector.next_decision()
    }

    /// Frame pushes still needed before the next decision is available.
    pub fn buffering_remaining(&self) -> usize {
        let needed = self.selector.columns_needed();
        if needed == 0 {
            return 0;
        }
        let column = self.columns + needed - 1;
        let pushes = (column + self.params.filter.w_future + 1).min(self.frame_count());
        pushes.saturating_sub(self.frames_pushed)
    }

    /// Applies live-tunable parameters; structural ones are refused.
    pub fn update_params(&mut self, overrides: &ParamOverrides) -> Result<()> {
        if let Some(field) = overrides.structural_fields().first() {
            return Err(Error::RequiresNewSession(field));
        }
        let mut next = self.params;
        overrides.apply_to(&mut next);
        next.validate()?;
        self.selector.set_live(CostParams::from(&next), next.alpha_continuity)?;
        self.params = next;
        Ok(())
    }
}
