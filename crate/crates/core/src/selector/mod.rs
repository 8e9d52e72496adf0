//! Shot selection: the look-ahead optimizer, the whole-clip optimum and the
//! baseline editors.

mod baselines;
mod dp;
mod offline;
mod online;

pub use baselines::{greedy_sequence, speaker_sequence, wide_sequence, SILENCE_SECONDS};
pub use dp::{Column, CostCell, CostModel};
pub use offline::{brute_force_oracle, offline_select, sequence_cost, OfflineResult, BRUTE_FORCE_LIMIT};
pub use online::{CostWindow, OnlineDecision, OnlineSelector, WindowColumn};

use crate::editcost::{gaze_potential, PotentialVector};
use crate::engine::OnlineEngine;
use crate::error::{Error, Result};
use crate::ingest::SpeakerAnnotation;
use crate::model::{EditDecision, EditDecisionList, GazeStream, ShotId, TrackSet};
use crate::params::EditParams;
use crate::shotgen::{generate_shot_streams, ShotSet};

/// Gaze potentials of every frame.
pub fn potentials_for(shots: &ShotSet, gaze: &GazeStream, params: &EditParams) -> Result<Vec<PotentialVector>> {
    if gaze.frame_count() != shots.frame_count() {
        return Err(Error::LengthMismatch(gaze.frame_count(), shots.frame_count()));
    }
    Ok((0..shots.frame_count())
        .map(|t| gaze_potential(&shots.crops_at(t), gaze.at(t), params.sigma_gaze, params.epsilon_gaze))
        .collect())
}

/// Stabilized crops of every frame, frame-major.
pub fn crops_by_frame(shots: &ShotSet) -> Vec<Vec<crate::model::BBox>> {
    (0..shots.frame_count()).map(|t| shots.crops_at(t)).collect()
}

/// Pairs each selected shot with its crop.
pub fn edl_from_shots(shots: &ShotSet, sequence: &[ShotId]) -> Result<EditDecisionList> {
    if sequence.len() != shots.frame_count() {
        return Err(Error::LengthMismatch(sequence.len(), shots.frame_count()));
    }
    let decisions = sequence
        .iter()
        .enumerate()
        .map(|(frame, &shot_id)| {
            let stream = shots
                .streams
                .get(shot_id)
                .ok_or_else(|| Error::invalid(format!("shot {shot_id} does not exist")))?;
            Ok(EditDecision {
                frame,
                shot_id,
                crop: stream.crops[frame],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EditDecisionList::new(shots.clip, decisions)
}

/// Online look-ahead editing of a whole clip.
pub fn run_online(tracks: &TrackSet, gaze: &GazeStream, params: &EditParams) -> Result<EditDecisionList> {
    let mut engine = OnlineEngine::new(std::sync::Arc::new(tracks.clone()), params)?;
    engine.load_gaze(gaze)?;
    let mut decisions = Vec::with_capacity(tracks.frame_count());
    while engine.push_frame()? {
        while let Some(d) = engine.next_decision()? {
            decisions.push(d);
        }
    }
    while let Some(d) = engine.next_decision()? {
        decisions.push(d);
    }
    let decisions = decisions
        .into_iter()
        .map(|d| EditDecision {
            frame: d.frame,
            shot_id: d.shot_id,
            crop: d.crop,
        })
        .collect();
    EditDecisionList::new(*tracks.clip(), decisions)
}

/// Whole-clip optimum with its objective value.
pub fn run_offline_oracle(tracks: &TrackSet, gaze: &GazeStream, params: &EditParams) -> Result<(EditDecisionList, f64)> {
    let shots = generate_shot_streams(tracks, params)?;
    let potentials = potentials_for(&shots, gaze, params)?;
    let model = CostModel::new(params, shots.len())?;
    let result = offline_select(&model, &potentials, &crops_by_frame(&shots))?;
    Ok((edl_from_shots(&shots, &result.shots)?, result.objective))
}

pub fn run_wide(tracks: &TrackSet, params: &EditParams) -> Result<EditDecisionList> {
    let shots = generate_shot_streams(tracks, params)?;
    edl_from_shots(&shots, &wide_sequence(shots.frame_count(), shots.len()))
}

pub fn run_greedy(tracks: &TrackSet, gaze: &GazeStream, params: &EditParams) -> Result<EditDecisionList> {
    let shots = generate_shot_streams(tracks, params)?;
    let potentials = potentials_for(&shots, gaze, params)?;
    edl_from_shots(&shots, &greedy_sequence(&potentials, params.min_shot_frames))
}

pub fn run_speaker(tracks: &TrackSet, speakers: &[SpeakerAnnotation], params: &EditParams) -> Result<EditDecisionList> {
    let shots = generate_shot_streams(tracks, params)?;
    let sequence = speaker_sequence(
        tracks.actor_order(),
        speakers,
        tracks.frame_count(),
        tracks.clip().fps,
        params.min_shot_frames,
    )?;
    edl_from_shots(&shots, &sequence)
}

/// Online selection over precomputed potentials and crops, bypassing shot
/// generation. Used to sweep look-ahead settings on one scene.
pub fn online_select(params: &EditParams, potentials: &[PotentialVector], crops: &[Vec<crate::model::BBox>]) -> Result<Vec<ShotId>> {
    if potentials.len() != crops.len() {
        return Err(Error::LengthMismatch(potentials.len(), crops.len()));
    }
    let shots = potentials.first().map_or(0, Vec::len);
    let mut selector = OnlineSelector::new(params, shots)?;
    let mut out = Vec::with_capacity(potentials.len());
    for (g, c) in potentials.iter().zip(crops) {
        selector.push(g.clone(), c.clone())?;
        while let Some(d) = selector.next_decision()? {
            out.push(d.shot_id);
        }
    }
    selector.finish();
    while let Some(d) = selector.next_decision()? {
        out.push(d.shot_id);
    }
    Ok(out)
}
