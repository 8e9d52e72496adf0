//! `stagecut run`: one editing pass and its artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use stagecut_core::engine::OnlineEngine;
use stagecut_core::ingest;
use stagecut_core::model::{edl_runs, match_rate, EditDecision, EditDecisionList, GazeStream, TrackSet};
use stagecut_core::params::{EditParams, ParamOverrides};
use stagecut_core::selector;
use stagecut_core::shotgen::generate_shot_streams;

use crate::inputs::{self, FlagOverrides};
use crate::{write_file, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Realtime,
    Offline,
    Wide,
    Greedy,
    Speaker,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Realtime => "realtime",
            Mode::Offline => "offline",
            Mode::Wide => "wide",
            Mode::Greedy => "greedy",
            Mode::Speaker => "speaker",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub tracks: PathBuf,
    pub gaze: Option<PathBuf>,
    pub speakers: Option<PathBuf>,
    pub clip: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub mode: Mode,
    pub out: PathBuf,
    pub flags: FlagOverrides,
    /// EDL to report the match rate against.
    pub reference: Option<PathBuf>,
    pub dump_rushes: bool,
    pub dump_trajectory: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl LatencyStats {
    pub fn from_samples(samples_ms: &[f64]) -> Option<Self> {
        if samples_ms.is_empty() {
            return None;
        }
        let mut sorted = samples_ms.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = ((0.99 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        Some(LatencyStats {
            mean_ms: sorted.iter().sum::<f64>() / sorted.len() as f64,
            p99_ms: sorted[rank - 1],
            max_ms: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub frames: usize,
    pub fps: f64,
    pub shots: usize,
    pub match_rate: Option<f64>,
    pub cut_count: usize,
    pub mean_shot_s: f64,
    pub min_shot_s: f64,
    /// Per-frame processing time; measured in realtime mode only.
    pub latency: Option<LatencyStats>,
    pub runtime_s: f64,
}

impl RunReport {
    pub fn new(mode: Mode, edl: &EditDecisionList, shots: usize, latency: Option<LatencyStats>, runtime_s: f64) -> Result<Self> {
        let runs = edl_runs(edl)?;
        let fps = edl.clip.fps;
        let min = runs.iter().map(|r| r.len).min().unwrap_or(0);
        Ok(RunReport {
            mode,
            frames: edl.len(),
            fps,
            shots,
            match_rate: None,
            cut_count: runs.len() - 1,
            mean_shot_s: edl.len() as f64 / runs.len() as f64 / fps,
            min_shot_s: min as f64 / fps,
            latency,
            runtime_s,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    mode: Mode,
    inputs: Inputs<'a>,
    artifacts: Vec<String>,
    overrides: &'a ParamOverrides,
    params: &'a EditParams,
}

#[derive(Debug, Clone, Serialize)]
struct Inputs<'a> {
    tracks: &'a Path,
    clip: &'a Path,
    gaze: Option<&'a Path>,
    speakers: Option<&'a Path>,
    params: Option<&'a Path>,
    reference: Option<&'a Path>,
}

/// Output of one editing pass.
#[derive(Debug, Clone)]
pub struct Edit {
    pub edl: EditDecisionList,
    pub shots: usize,
    pub latency: Option<LatencyStats>,
}

/// Runs the realtime engine over a recorded gaze trace, timing every frame.
pub fn realtime_edit(tracks: &TrackSet, gaze: &GazeStream, params: &EditParams) -> Result<Edit> {
    let mut engine = OnlineEngine::new(Arc::new(tracks.clone()), params)?;
    engine.load_gaze(gaze)?;
    let mut decisions = Vec::with_capacity(tracks.frame_count());
    let mut times = Vec::with_capacity(tracks.frame_count());
    loop {
        let start = Instant::now();
        if !engine.push_frame()? {
            break;
        }
        while let Some(d) = engine.next_decision()? {
            decisions.push(EditDecision {
                frame: d.frame,
                shot_id: d.shot_id,
                crop: d.crop,
            });
        }
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(Edit {
        shots: engine.specs().len(),
        edl: EditDecisionList::new(*tracks.clip(), decisions)?,
        latency: LatencyStats::from_samples(&times),
    })
}

fn require<'a, T>(value: Option<&'a T>, what: &str) -> Result<&'a T> {
    value.ok_or_else(|| CliError::usage(format!("{what} required")))
}

pub fn cmd_run(args: &RunArgs) -> Result<RunReport> {
    let started = Instant::now();
    let clip_path = inputs::clip_path(&args.tracks, args.clip.as_deref());
    let clip = inputs::load_clip(&clip_path)?;
    let tracks = inputs::load_tracks(&args.tracks, &clip)?;
    let needs_gaze = matches!(args.mode, Mode::Realtime | Mode::Offline | Mode::Greedy);
    let gaze = match &args.gaze {
        Some(p) => Some(inputs::load_gaze(p, &clip)?),
        None if needs_gaze => return Err(CliError::usage("gaze required")),
        None => None,
    };
    let speakers = match &args.speakers {
        Some(p) => Some(inputs::load_speakers(p)?),
        None if args.mode == Mode::Speaker => return Err(CliError::usage("speakers required")),
        None => None,
    };
    let (params, overrides) = inputs::load_params(args.params.as_deref(), args.flags, &clip)?;
    let reference = match &args.reference {
        Some(p) => {
            let source = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Some(ingest::parse_edl(&source, &clip).map_err(|e| e.in_file(p))?)
        }
        None => None,
    };

    let edit = match args.mode {
        Mode::Realtime => realtime_edit(&tracks, require(gaze.as_ref(), "gaze")?, &params)?,
        mode => {
            let shots = tracks.actor_count() * (tracks.actor_count() + 1) / 2;
            let edl = match mode {
                Mode::Offline => selector::run_offline_oracle(&tracks, require(gaze.as_ref(), "gaze")?, &params)?.0,
                Mode::Wide => selector::run_wide(&tracks, &params)?,
                Mode::Greedy => selector::run_greedy(&tracks, require(gaze.as_ref(), "gaze")?, &params)?,
                Mode::Speaker => selector::run_speaker(&tracks, require(speakers.as_ref(), "speakers")?, &params)?,
                Mode::Realtime => unreachable!(),
            };
            Edit { edl, shots, latency: None }
        }
    };

    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let mut artifacts = vec!["edl.csv".to_string(), "runs.json".to_string()];
    write_file(&args.out.join("edl.csv"), ingest::write_edl(&edit.edl))?;
    let runs = edl_runs(&edit.edl)?;
    write_file(&args.out.join("runs.json"), ingest::runs_to_json(&runs) + "\n")?;
    if args.dump_rushes || args.dump_trajectory {
        let set = generate_shot_streams(&tracks, &params)?;
        if args.dump_rushes {
            write_file(&args.out.join("rushes.csv"), rushes_csv(&set))?;
            artifacts.push("rushes.csv".into());
        }
        if args.dump_trajectory {
            write_file(&args.out.join("trajectory.csv"), trajectory_csv(&set))?;
            artifacts.push("trajectory.csv".into());
        }
    }

    let mut report = RunReport::new(args.mode, &edit.edl, edit.shots, edit.latency, 0.0)?;
    report.match_rate = reference.map(|r| match_rate(&edit.edl, &r)).transpose()?;
    report.runtime_s = started.elapsed().as_secs_f64();
    write_file(&args.out.join("report.json"), serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    artifacts.push("report.json".into());
    artifacts.push("manifest.json".into());

    let manifest = Manifest {
        mode: args.mode,
        inputs: Inputs {
            tracks: &args.tracks,
            clip: &clip_path,
            gaze: args.gaze.as_deref(),
            speakers: args.speakers.as_deref(),
            params: args.params.as_deref(),
            reference: args.reference.as_deref(),
        },
        artifacts,
        overrides: &overrides,
        params: &params,
    };
    write_file(
        &args.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;
    Ok(report)
}

/// Every shot's stabilized crop per frame.
fn rushes_csv(set: &stagecut_core::shotgen::ShotSet) -> String {
    let mut out = String::from("frame,shot_id,x,y,w,h\n");
    for t in 0..set.frame_count() {
        for s in &set.streams {
            let c = s.crops[t];
            let _ = writeln!(out, "{t},{},{},{},{},{}", s.spec.shot_id, c.x, c.y, c.w, c.h);
        }
    }
    out
}

/// Crop centre and height before and after smoothing.
fn trajectory_csv(set: &stagecut_core::shotgen::ShotSet) -> String {
    let mut out = String::from("frame,shot_id,raw_cx,raw_cy,raw_h,cx,cy,h\n");
    for s in &set.streams {
        for (t, (raw, c)) in s.raw_crops.iter().zip(&s.crops).enumerate() {
            let (rx, ry) = raw.center();
            let (cx, cy) = c.center();
            let _ = writeln!(out, "{t},{},{rx},{ry},{},{cx},{cy},{}", s.spec.shot_id, raw.h, c.h);
        }
    }
    out
}
