//! Readers and writers for the track, gaze, speaker and EDL files.
//!
//! All CSV inputs carry a header row; frames are 0-based and coordinates are
//! master-shot pixels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ActorId, ActorObservation, BBox, ClipInfo, EditDecision, EditDecisionList, FrameIndex, GazeSample, GazeStream,
    Run, TrackSet,
};

/// Longest run of missing frames that is bridged by interpolation.
pub const MAX_INTERPOLATED_GAP: usize = 25;

pub const TRACKS_HEADER: [&str; 6] = ["frame", "actor_id", "x", "y", "w", "h"];
pub const GAZE_HEADER: [&str; 4] = ["frame", "user_id", "gx", "gy"];
pub const SPEAKERS_HEADER: [&str; 3] = ["start_frame", "end_frame", "speaker_ids"];
pub const EDL_HEADER: [&str; 6] = ["frame", "shot_id", "x", "y", "w", "h"];

/// Half-open interval of frames with its set of active speakers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeakerAnnotation {
    pub start_frame: FrameIndex,
    pub end_frame: FrameIndex,
    /// Empty means silence.
    pub speakers: BTreeSet<ActorId>,
}

impl SpeakerAnnotation {
    pub fn contains(&self, frame: FrameIndex) -> bool {
        (self.start_frame..self.end_frame).contains(&frame)
    }
}

/// Speakers active at `frame`; uncovered frames are silent.
pub fn speakers_at(annotations: &[SpeakerAnnotation], frame: FrameIndex) -> Option<&BTreeSet<ActorId>> {
    let idx = annotations.partition_point(|a| a.end_frame <= frame);
    annotations
        .get(idx)
        .filter(|a| a.contains(frame))
        .map(|a| &a.speakers)
        .filter(|s| !s.is_empty())
}

struct Rows<'a> {
    reader: csv::Reader<&'a [u8]>,
}

impl<'a> Rows<'a> {
    fn new(source: &'a str, header: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(source.as_bytes());
        let found = reader.headers().map_err(|e| Error::parse(1, e.to_string()))?;
        if found.iter().ne(header.iter().copied()) {
            return Err(Error::parse(
                1,
                format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
            ));
        }
        Ok(Rows { reader })
    }

    /// Iterates `(line, fields)` over the data rows.
    fn for_each(mut self, width: usize, mut f: impl FnMut(usize, &csv::StringRecord) -> Result<()>) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            let line = self.reader.position().line() as usize;
            match self.reader.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {}
                Err(e) => return Err(Error::parse(line, e.to_string())),
            }
            let line = record.position().map_or(line, |p| p.line() as usize);
            if record.len() == 1 && record[0].is_empty() {
                continue;
            }
            if record.len() != width {
                return Err(Error::parse(line, format!("expected {width} fields, found {}", record.len())));
            }
            f(line, &record)?;
        }
    }
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<T> {
    record[idx]
        .parse()
        .map_err(|_| Error::parse(line, format!("bad {name} `{}`", &record[idx])))
}

fn finite(v: f64, name: &str, line: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(line, format!("{name} is not finite")))
    }
}

/// Parses a tracks CSV, clamps boxes to the clip and bridges short gaps.
pub fn parse_tracks(source: &str, clip: &ClipInfo) -> Result<TrackSet> {
    clip.validate()?;
    let mut by_actor: BTreeMap<ActorId, BTreeMap<FrameIndex, BBox>> = BTreeMap::new();
    Rows::new(source, &TRACKS_HEADER)?.for_each(6, |line, r| {
        let frame: FrameIndex = field(r, 0, "frame", line)?;
        let actor: ActorId = field(r, 1, "actor_id", line)?;
        let mut v = [0.0; 4];
        for (i, name) in ["x", "y", "w", "h"].iter().enumerate() {
            v[i] = finite(field(r, 2 + i, name, line)?, name, line)?;
        }
        if v[2] < 0.0 || v[3] < 0.0 {
            return Err(Error::parse(line, "negative dimensions"));
        }
        if v[2] == 0.0 || v[3] == 0.0 {
            return Err(Error::parse(line, "zero-size box"));
        }
        if frame >= clip.frame_count {
            return Err(Error::parse(
                line,
                format!("frame {frame} beyond frame_count {}", clip.frame_count),
            ));
        }
        let bbox = BBox::new(v[0], v[1], v[2], v[3])
            .clamp_to(clip)
            .ok_or_else(|| Error::parse(line, "box lies outside the clip"))?;
        if by_actor.entry(actor).or_default().insert(frame, bbox).is_some() {
            return Err(Error::parse(line, format!("duplicate observation (actor {actor}, frame {frame})")));
        }
        Ok(())
    })?;
    if by_actor.is_empty() {
        return Err(Error::invalid("no observations"));
    }

    let mut observations = Vec::new();
    for (&actor_id, track) in &by_actor {
        let mut prev: Option<(FrameIndex, BBox)> = None;
        for (&frame, &bbox) in track {
            if let Some((f0, b0)) = prev {
                let gap = frame - f0 - 1;
                if (1..=MAX_INTERPOLATED_GAP).contains(&gap) {
                    for k in 1..=gap {
                        let t = k as f64 / (gap + 1) as f64;
                        observations.push(ActorObservation {
                            actor_id,
                            frame: f0 + k,
                            bbox: b0.lerp(&bbox, t),
                        });
                    }
                }
            }
            observations.push(ActorObservation { actor_id, frame, bbox });
            prev = Some((frame, bbox));
        }
    }
    TrackSet::from_observations(*clip, observations)
}

pub fn write_tracks(tracks: &TrackSet) -> String {
    let mut out = TRACKS_HEADER.join(",");
    out.push('\n');
    let mut obs: Vec<_> = tracks.observations().collect();
    obs.sort_by_key(|o| (o.frame, o.actor_id));
    for o in obs {
        let b = o.bbox;
        let _ = writeln!(out, "{},{},{},{},{},{}", o.frame, o.actor_id, b.x, b.y, b.w, b.h);
    }
    out
}

/// Parses a gaze CSV; points are clamped into the clip.
pub fn parse_gaze(source: &str, clip: &ClipInfo) -> Result<GazeStream> {
    let mut stream = GazeStream::new(clip.frame_count);
    Rows::new(source, &GAZE_HEADER)?.for_each(4, |line, r| {
        let frame: FrameIndex = field(r, 0, "frame", line)?;
        let user_id = field(r, 1, "user_id", line)?;
        let x = finite(field(r, 2, "gx", line)?, "gx", line)?;
        let y = finite(field(r, 3, "gy", line)?, "gy", line)?;
        let sample = GazeSample { user_id, frame, x, y }.clamped(clip);
        stream.push(sample).map_err(|e| Error::parse(line, e.to_string()))
    })?;
    Ok(stream)
}

pub fn write_gaze(gaze: &GazeStream) -> String {
    let mut out = GAZE_HEADER.join(",");
    out.push('\n');
    for s in gaze.samples() {
        let _ = writeln!(out, "{},{},{},{}", s.frame, s.user_id, s.x, s.y);
    }
    out
}

/// Parses speaker annotations, returning them sorted by start frame.
pub fn parse_speakers(source: &str) -> Result<Vec<SpeakerAnnotation>> {
    let mut rows: Vec<(usize, SpeakerAnnotation)> = Vec::new();
    Rows::new(source, &SPEAKERS_HEADER)?.for_each(3, |line, r| {
        let start_frame: FrameIndex = field(r, 0, "start_frame", line)?;
        let end_frame: FrameIndex = field(r, 1, "end_frame", line)?;
        if end_frame <= start_frame {
            return Err(Error::parse(line, "end_frame must exceed start_frame"));
        }
        let speakers = r[2]
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| Error::parse(line, format!("bad speaker id `{s}`"))))
            .collect::<Result<BTreeSet<ActorId>>>()?;
        rows.push((line, SpeakerAnnotation { start_frame, end_frame, speakers }));
        Ok(())
    })?;
    rows.sort_by_key(|(_, a)| a.start_frame);
    for w in rows.windows(2) {
        if w[1].1.start_frame < w[0].1.end_frame {
            return Err(Error::parse(
                w[1].0,
                format!(
                    "interval [{}, {}) overlaps [{}, {})",
                    w[1].1.start_frame, w[1].1.end_frame, w[0].1.start_frame, w[0].1.end_frame
                ),
            ));
        }
    }
    Ok(rows.into_iter().map(|(_, a)| a).collect())
}

pub fn write_speakers(annotations: &[SpeakerAnnotation]) -> String {
    let mut out = SPEAKERS_HEADER.join(",");
    out.push('\n');
    for a in annotations {
        let ids: Vec<String> = a.speakers.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{},{},{}", a.start_frame, a.end_frame, ids.join(";"));
    }
    out
}

pub fn parse_clip(source: &str) -> Result<ClipInfo> {
    let clip: ClipInfo = serde_json::from_str(source).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    clip.validate()?;
    Ok(clip)
}

pub fn write_edl(edl: &EditDecisionList) -> String {
    let mut out = EDL_HEADER.join(",");
    out.push('\n');
    for d in &edl.decisions {
        let c = d.crop;
        let _ = writeln!(out, "{},{},{},{},{},{}", d.frame, d.shot_id, c.x, c.y, c.w, c.h);
    }
    out
}

pub fn parse_edl(source: &str, clip: &ClipInfo) -> Result<EditDecisionList> {
    let mut decisions = Vec::new();
    Rows::new(source, &EDL_HEADER)?.for_each(6, |line, r| {
        let frame: FrameIndex = field(r, 0, "frame", line)?;
        if frame != decisions.len() {
            return Err(Error::parse(line, format!("expected frame {}, found {frame}", decisions.len())));
        }
        let shot_id = field(r, 1, "shot_id", line)?;
        let mut v = [0.0; 4];
        for (i, name) in ["x", "y", "w", "h"].iter().enumerate() {
            v[i] = finite(field(r, 2 + i, name, line)?, name, line)?;
        }
        decisions.push(EditDecision {
            frame,
            shot_id,
            crop: BBox::new(v[0], v[1], v[2], v[3]),
        });
        Ok(())
    })?;
    EditDecisionList::new(*clip, decisions)
}

#[derive(Serialize, Deserialize)]
struct RunRecord {
    shot_id: usize,
    start: usize,
    len: usize,
}

pub fn runs_to_json(runs: &[Run]) -> String {
    let records: Vec<_> = runs
        .iter()
        .map(|r| RunRecord {
            shot_id: r.shot_id,
            start: r.start,
            len: r.len,
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("runs serialize")
}
