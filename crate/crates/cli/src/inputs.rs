//! Reading the input files named on the command line.

use std::path::{Path, PathBuf};

use stagecut_core::error::Error;
use stagecut_core::ingest::{self, SpeakerAnnotation};
use stagecut_core::model::{ClipInfo, GazeStream, TrackSet};
use stagecut_core::params::{EditParams, ParamOverrides};

use crate::{CliError, Result};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn in_file<T>(path: &Path, r: stagecut_core::error::Result<T>) -> Result<T> {
    r.map_err(|e: Error| e.in_file(path).into())
}

/// `--clip`, or `clip.json` beside the tracks file.
pub fn clip_path(tracks: &Path, clip: Option<&Path>) -> PathBuf {
    match clip {
        Some(p) => p.to_path_buf(),
        None => tracks.with_file_name("clip.json"),
    }
}

pub fn load_clip(path: &Path) -> Result<ClipInfo> {
    in_file(path, ingest::parse_clip(&read(path)?))
}

pub fn load_tracks(path: &Path, clip: &ClipInfo) -> Result<TrackSet> {
    in_file(path, ingest::parse_tracks(&read(path)?, clip))
}

pub fn load_gaze(path: &Path, clip: &ClipInfo) -> Result<GazeStream> {
    in_file(path, ingest::parse_gaze(&read(path)?, clip))
}

pub fn load_speakers(path: &Path) -> Result<Vec<SpeakerAnnotation>> {
    in_file(path, ingest::parse_speakers(&read(path)?))
}

/// Flag values that beat the params file.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlagOverrides {
    pub lookahead: Option<usize>,
    pub alpha: Option<f64>,
}

/// Params file overrides, then flag overrides, resolved against the clip.
pub fn load_params(path: Option<&Path>, flags: FlagOverrides, clip: &ClipInfo) -> Result<(EditParams, ParamOverrides)> {
    let mut overrides = match path {
        Some(p) => in_file(p, ParamOverrides::from_json(&read(p)?))?,
        None => ParamOverrides::default(),
    };
    if flags.lookahead.is_some() {
        overrides.lookahead_frames = flags.lookahead;
    }
    if flags.alpha.is_some() {
        overrides.alpha_continuity = flags.alpha;
    }
    let params = EditParams::resolve(clip, &overrides)?;
    Ok((params, overrides))
}
