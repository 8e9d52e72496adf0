//! `stagecut bench`: filter-only and full-pipeline throughput.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use stagecut_core::params::EditParams;
use stagecut_core::stabilize::FilterState;

use crate::run::{realtime_edit, LatencyStats};
use crate::synth::{self, SceneSpec};
use crate::{CliError, Result};

/// Samples pushed through the single filter.
pub const FILTER_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub actors: usize,
    pub frames: usize,
    pub shots: usize,
    /// One filter, random-walk input.
    pub filter_pushes_per_s: f64,
    /// Shot generation, potentials, DP and selection per frame.
    pub pipeline_fps: f64,
    pub latency: Option<LatencyStats>,
}

/// Random walk through one filter; returns pushes per second.
pub fn filter_throughput(params: &EditParams, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(CliError::usage("bench needs at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = Normal::new(0.0, 3.0).expect("finite sigma");
    let mut y = 0.0;
    let input: Vec<f64> = (0..samples)
        .map(|_| {
            y += step.sample(&mut rng);
            y
        })
        .collect();
    let mut filter = FilterState::new(params.filter);
    let start = Instant::now();
    for &v in &input {
        std::hint::black_box(filter.push(v)?);
    }
    std::hint::black_box(filter.flush());
    Ok(samples as f64 / start.elapsed().as_secs_f64())
}

pub fn cmd_bench(spec: &SceneSpec, params_for: impl Fn(&stagecut_core::model::ClipInfo) -> Result<EditParams>) -> Result<BenchReport> {
    if spec.frames == 0 {
        return Err(CliError::usage("bench scene has 0 frames"));
    }
    let scene = synth::generate(spec)?;
    let params = params_for(&scene.clip)?;
    let filter_pushes_per_s = filter_throughput(&params, FILTER_SAMPLES, spec.seed)?;
    let start = Instant::now();
    let edit = realtime_edit(&scene.tracks, &scene.gaze, &params)?;
    let elapsed = start.elapsed().as_secs_f64();
    Ok(BenchReport {
        actors: spec.actors,
        frames: spec.frames,
        shots: edit.shots,
        filter_pushes_per_s,
        pipeline_fps: spec.frames as f64 / elapsed,
        latency: edit.latency,
    })
}
