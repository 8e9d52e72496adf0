//! Seeded synthetic stage scenes: wandering actors plus scripted gaze.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use stagecut_core::ingest::{self, SpeakerAnnotation};
use stagecut_core::model::{ActorId, ActorObservation, BBox, ClipInfo, GazeSample, GazeStream, TrackSet};

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub actors: usize,
    pub frames: usize,
    pub users: usize,
    pub width: f64,
    pub height: f64,
    pub fps: f64,
}

impl SceneSpec {
    pub fn new(seed: u64, actors: usize, frames: usize) -> Self {
        SceneSpec {
            seed,
            actors,
            frames,
            users: 1,
            width: 1920.0,
            height: 1080.0,
            fps: 25.0,
        }
    }
}

/// A generated scene. `script` lists who is being watched; it doubles as the
/// speaker annotation.
#[derive(Debug, Clone)]
pub struct Scene {
    pub clip: ClipInfo,
    pub tracks: TrackSet,
    pub gaze: GazeStream,
    pub script: Vec<SpeakerAnnotation>,
}

/// Gaze jitter as a fraction of the frame width.
pub const GAZE_JITTER: f64 = 0.02;

pub fn generate(spec: &SceneSpec) -> Result<Scene> {
    if spec.actors == 0 {
        return Err(CliError::usage("synth needs at least one actor"));
    }
    let clip = ClipInfo::new(spec.width, spec.height, spec.fps, spec.frames)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tracks = actor_tracks(&clip, spec.actors, &mut rng)?;
    let script = random_script(&clip, spec.actors, &mut rng);
    let gaze = scripted_gaze(&tracks, &script, spec.users, &mut rng)?;
    Ok(Scene { clip, tracks, gaze, script })
}

/// Scene with a given watch script instead of a random one.
pub fn generate_with_script(spec: &SceneSpec, script: Vec<SpeakerAnnotation>) -> Result<Scene> {
    if spec.actors == 0 {
        return Err(CliError::usage("synth needs at least one actor"));
    }
    let clip = ClipInfo::new(spec.width, spec.height, spec.fps, spec.frames)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tracks = actor_tracks(&clip, spec.actors, &mut rng)?;
    for a in &script {
        if a.end_frame > spec.frames {
            return Err(CliError::usage(format!("script interval ends at {} beyond {} frames", a.end_frame, spec.frames)));
        }
        if let Some(id) = a.speakers.iter().find(|&&id| id as usize >= spec.actors) {
            return Err(CliError::usage(format!("script names actor {id} but the scene has {}", spec.actors)));
        }
    }
    let gaze = scripted_gaze(&tracks, &script, spec.users, &mut rng)?;
    Ok(Scene { clip, tracks, gaze, script })
}

/// Actors spread evenly over the stage, each drifting around its mark with
/// occasional walks to a new one.
fn actor_tracks(clip: &ClipInfo, n: usize, rng: &mut ChaCha8Rng) -> Result<TrackSet> {
    let (w, h) = (clip.width, clip.height);
    let slot = w / n as f64;
    let step = Normal::new(0.0, 0.6).expect("finite sigma");
    let mut obs = Vec::with_capacity(n * clip.frame_count);
    for k in 0..n {
        let bw = rng.gen_range(0.06..0.08) * w;
        let bh = rng.gen_range(0.38..0.46) * h;
        let floor = rng.gen_range(0.78..0.86) * h;
        let home = slot * (k as f64 + 0.5);
        let reach = 0.3 * slot;
        let mut mark = home;
        let mut x = home;
        let mut v = 0.0;
        for t in 0..clip.frame_count {
            if rng.gen_bool(1.0 / (6.0 * clip.fps)) {
                mark = home + rng.gen_range(-reach..reach);
            }
            // Damped spring towards the mark plus a little sway.
            v = 0.9 * v + 0.02 * (mark - x) + step.sample(rng);
            x += v;
            let bx = (x - bw / 2.0).clamp(0.0, w - bw);
            let bob = 2.0 * (t as f64 * 0.07 + k as f64).sin();
            obs.push(ActorObservation {
                actor_id: k as ActorId,
                frame: t,
                bbox: BBox::new(bx, floor - bh + bob, bw, bh),
            });
        }
    }
    Ok(TrackSet::from_observations(*clip, obs)?)
}

/// Fixations of 2 to 8 seconds, mostly on one actor and sometimes on two
/// neighbours at once.
fn random_script(clip: &ClipInfo, n: usize, rng: &mut ChaCha8Rng) -> Vec<SpeakerAnnotation> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut last: Option<usize> = None;
    while start < clip.frame_count {
        let len = clip.frames(rng.gen_range(2.0..8.0)).max(1);
        let end = (start + len).min(clip.frame_count);
        let mut who = rng.gen_range(0..n);
        if n > 1 && Some(who) == last {
            who = (who + 1 + rng.gen_range(0..n - 1)) % n;
        }
        let mut speakers = BTreeSet::from([who as ActorId]);
        if n > 1 && rng.gen_bool(0.2) {
            let other = if who + 1 < n { who + 1 } else { who - 1 };
            speakers.insert(other as ActorId);
        }
        out.push(SpeakerAnnotation { start_frame: start, end_frame: end, speakers });
        last = Some(who);
        start = end;
    }
    out
}

/// Each user looks at the upper body of a scripted actor; with several
/// targets the gaze hops between them every half second. Unscripted frames
/// get no gaze.
fn scripted_gaze(tracks: &TrackSet, script: &[SpeakerAnnotation], users: usize, rng: &mut ChaCha8Rng) -> Result<GazeStream> {
    let clip = *tracks.clip();
    let jitter = Normal::new(0.0, GAZE_JITTER * clip.width).expect("finite sigma");
    let hop = clip.frames(0.5).max(1);
    let mut gaze = GazeStream::new(clip.frame_count);
    for t in 0..clip.frame_count {
        let Some(targets) = ingest::speakers_at(script, t) else { continue };
        let targets: Vec<ActorId> = targets.iter().copied().collect();
        for user in 0..users {
            let pick = targets[(t / hop + user) % targets.len()];
            let Some(b) = tracks.bbox(t, pick) else { continue };
            let sample = GazeSample {
                user_id: user as u32,
                frame: t,
                x: b.x + b.w / 2.0 + jitter.sample(rng),
                y: b.y + 0.3 * b.h + jitter.sample(rng),
            };
            gaze.push(sample.clamped(&clip))?;
        }
    }
    Ok(gaze)
}

/// Writes `clip.json`, `tracks.csv`, `gaze.csv` and `speakers.csv`.
pub fn write_scene(scene: &Scene, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let files = [
        ("clip.json", serde_json::to_string_pretty(&scene.clip).expect("clip serializes") + "\n"),
        ("tracks.csv", ingest::write_tracks(&scene.tracks)),
        ("gaze.csv", ingest::write_gaze(&scene.gaze)),
        ("speakers.csv", ingest::write_speakers(&scene.script)),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}
