//! Virtual pan-tilt-zoom rushes: one crop stream per contiguous actor group.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{ActorId, BBox, ClipInfo, FrameIndex, ShotId, ShotSpec, SizeClass, TrackSet};
use crate::params::{EditParams, FilterParams, FramingParams};
use crate::stabilize::FilterState;

/// Actors sorted by median box center-x over the clip, ties by id.
pub fn order_actors(tracks: &TrackSet) -> Vec<ActorId> {
    tracks.actor_order().to_vec()
}

pub(crate) fn order_actors_in(frames: &[Vec<(ActorId, BBox)>]) -> Vec<ActorId> {
    let mut xs: BTreeMap<ActorId, Vec<f64>> = BTreeMap::new();
    for slot in frames {
        for (id, b) in slot {
            xs.entry(*id).or_default().push(b.center().0);
        }
    }
    let mut keyed: Vec<(f64, ActorId)> = xs
        .into_iter()
        .map(|(id, mut v)| {
            v.sort_by(f64::total_cmp);
            let m = v.len() / 2;
            let median = if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) };
            (median, id)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, id)| id).collect()
}

/// All contiguous intervals `[a, b]` of `n` ordered actors, by size then start.
pub fn enumerate_groups(n: usize) -> Result<Vec<(usize, usize)>> {
    if n == 0 {
        return Err(Error::invalid("cannot enumerate groups of zero actors"));
    }
    Ok((1..=n)
        .flat_map(|k| (0..=n - k).map(move |a| (a, a + k - 1)))
        .collect())
}

/// Shot specs in `enumerate_groups` order; shot id is the position.
pub fn shot_specs(n: usize) -> Result<Vec<ShotSpec>> {
    Ok(enumerate_groups(n)?
        .into_iter()
        .enumerate()
        .map(|(shot_id, group)| ShotSpec {
            shot_id,
            group,
            size_class: if group.0 == group.1 {
                SizeClass::MediumShot
            } else {
                SizeClass::FullShot
            },
        })
        .collect())
}

/// Shot id of the group `[a, b]` among `n` actors.
pub fn shot_id_of(n: usize, a: usize, b: usize) -> Option<ShotId> {
    if a > b || b >= n {
        return None;
    }
    let k = b - a + 1;
    // Groups of size j number n - j + 1.
    let before: usize = (1..k).map(|j| n - j + 1).sum();
    Some(before + a)
}

/// Center and height a crop should have before it is fitted to the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropTarget {
    pub cx: f64,
    pub cy: f64,
    pub h: f64,
}

/// Builds an aspect-correct crop around `target`, shrinking any side that
/// exceeds the frame and then shifting it inside.
pub fn fit_crop(target: CropTarget, aspect: f64, clip: &ClipInfo) -> BBox {
    let w = (target.h * aspect).min(clip.width);
    let h = target.h.min(clip.height);
    let x = (target.cx - w / 2.0).clamp(0.0, clip.width - w);
    let y = (target.cy - h / 2.0).clamp(0.0, clip.height - h);
    BBox::new(x, y, w, h)
}

/// Composition target for a group of boxes.
///
/// A medium shot keeps the top `ms_height_fraction` of the actor with
/// `headroom_fraction` of the crop height above the head. A full shot covers
/// the padded union of the boxes at the output aspect.
pub fn group_target(boxes: &[BBox], size_class: SizeClass, framing: &FramingParams) -> CropTarget {
    assert!(!boxes.is_empty(), "group_target needs at least one box");
    let union = boxes[1..].iter().fold(boxes[0], |u, b| u.union(b));
    match size_class {
        SizeClass::MediumShot => {
            let h = framing.ms_height_fraction * union.h;
            let top = union.y - framing.headroom_fraction * h;
            CropTarget {
                cx: union.center().0,
                cy: top + h / 2.0,
                h,
            }
        }
        SizeClass::FullShot => {
            let (px, py) = (framing.group_pad_fraction * union.w, framing.group_pad_fraction * union.h);
            let (pw, ph) = (union.w + 2.0 * px, union.h + 2.0 * py);
            let h = ph.max(pw / framing.output_aspect);
            let (cx, cy) = union.center();
            CropTarget { cx, cy, h }
        }
    }
}

/// Target that fits to exactly the whole master frame.
pub fn full_frame_target(aspect: f64, clip: &ClipInfo) -> CropTarget {
    CropTarget {
        cx: clip.width / 2.0,
        cy: clip.height / 2.0,
        h: clip.height.max(clip.width / aspect),
    }
}

/// Crop for a group of boxes at one frame.
pub fn frame_group(boxes: &[BBox], size_class: SizeClass, framing: &FramingParams, clip: &ClipInfo) -> BBox {
    fit_crop(group_target(boxes, size_class, framing), framing.output_aspect, clip)
}

/// One virtual camera's crops over the clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotStream {
    pub spec: ShotSpec,
    /// Stabilized crops.
    pub crops: Vec<BBox>,
    /// Crops before stabilization.
    pub raw_crops: Vec<BBox>,
}

/// Candidate shots for a clip, one stream per actor group.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotSet {
    pub clip: ClipInfo,
    pub streams: Vec<ShotStream>,
}

impl ShotSet {
    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    pub fn frame_count(&self) -> usize {
        self.clip.frame_count
    }

    pub fn specs(&self) -> Vec<ShotSpec> {
        self.streams.iter().map(|s| s.spec).collect()
    }

    /// Stabilized crops of every shot at `frame`.
    pub fn crops_at(&self, frame: FrameIndex) -> Vec<BBox> {
        self.streams.iter().map(|s| s.crops[frame]).collect()
    }

    /// Id of the all-actor shot.
    pub fn widest(&self) -> usize {
        self.streams.len() - 1
    }
}

/// Generates the stabilized rushes for the whole clip.
pub fn generate_shot_streams(tracks: &TrackSet, params: &EditParams) -> Result<ShotSet> {
    let mut generator = ShotGenerator::new(tracks, params)?;
    let specs = generator.specs().to_vec();
    let mut crops: Vec<Vec<BBox>> = vec![Vec::with_capacity(tracks.frame_count()); specs.len()];
    let mut raw: Vec<Vec<BBox>> = vec![Vec::with_capacity(tracks.frame_count()); specs.len()];
    let mut collect = |frame: GeneratedFrame| {
        for (i, (c, r)) in frame.crops.iter().zip(&frame.raw_crops).enumerate() {
            crops[i].push(*c);
            raw[i].push(*r);
        }
    };
    for t in 0..tracks.frame_count() {
        if let Some(frame) = generator.push_frame(tracks.boxes_at(t))? {
            collect(frame);
        }
    }
    for frame in generator.flush() {
        collect(frame);
    }
    let streams = specs
        .into_iter()
        .zip(crops.into_iter().zip(raw))
        .map(|(spec, (crops, raw_crops))| ShotStream { spec, crops, raw_crops })
        .collect();
    Ok(ShotSet {
        clip: *tracks.clip(),
        streams,
    })
}

/// Crops of every shot for one frame, emitted by [`ShotGenerator`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedFrame {
    pub frame: FrameIndex,
    pub crops: Vec<BBox>,
    pub raw_crops: Vec<BBox>,
}

/// Incremental rush generator: takes one frame of actor boxes at a time and
/// emits that frame's stabilized crops `w_future` frames later.
#[derive(Debug, Clone)]
pub struct ShotGenerator {
    clip: ClipInfo,
    framing: FramingParams,
    order: Vec<ActorId>,
    specs: Vec<ShotSpec>,
    held_raw: Vec<Option<CropTarget>>,
    raw_queue: VecDeque<Vec<BBox>>,
    pushed: usize,
    emitted: usize,
    mode: Smoothing,
}

#[derive(Debug, Clone)]
enum Smoothing {
    /// One filter per shot and axis over the framing targets.
    Crops(Vec<[FilterState; 3]>),
    /// One filter per actor and axis over the actor boxes, framed afterwards.
    Actors(ActorSmoothing),
}

#[derive(Debug, Clone)]
struct ActorSmoothing {
    /// Sorted actor ids, parallel to the vectors below.
    ids: Vec<ActorId>,
    /// Value fed before an actor first appears.
    first: Vec<BBox>,
    last: Vec<Option<BBox>>,
    filters: Vec<[FilterState; 3]>,
    boxes_queue: VecDeque<Vec<(ActorId, BBox)>>,
    held: Vec<Option<CropTarget>>,
}

fn triple(p: FilterParams) -> [FilterState; 3] {
    [FilterState::new(p), FilterState::new(p), FilterState::new(p)]
}

impl ShotGenerator {
    pub fn new(tracks: &TrackSet, params: &EditParams) -> Result<Self> {
        let order = order_actors(tracks);
        let specs = shot_specs(order.len())?;
        let mode = if params.smooth_actors {
            let mut ids = order.clone();
            ids.sort_unstable();
            let first = ids
                .iter()
                .map(|&id| {
                    (0..tracks.frame_count())
                        .find_map(|t| tracks.bbox(t, id))
                        .expect("ordered actors are observed")
                })
                .collect();
            Smoothing::Actors(ActorSmoothing {
                last: vec![None; ids.len()],
                filters: ids.iter().map(|_| triple(params.filter)).collect(),
                ids,
                first,
                boxes_queue: VecDeque::new(),
                held: vec![None; specs.len()],
            })
        } else {
            Smoothing::Crops(specs.iter().map(|_| triple(params.filter)).collect())
        };
        Ok(ShotGenerator {
            clip: *tracks.clip(),
            framing: params.framing,
            order,
            held_raw: vec![None; specs.len()],
            specs,
            raw_queue: VecDeque::new(),
            pushed: 0,
            emitted: 0,
            mode,
        })
    }

    pub fn specs(&self) -> &[ShotSpec] {
        &self.specs
    }

    pub fn actor_order(&self) -> &[ActorId] {
        &self.order
    }

    /// Frames pushed so far.
    pub fn pushed(&self) -> usize {
        self.pushed
    }

    /// Frames emitted so far.
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// Feeds the boxes of the next frame, sorted by actor id.
    pub fn push_frame(&mut self, boxes: &[(ActorId, BBox)]) -> Result<Option<GeneratedFrame>> {
        self.pushed += 1;
        let aspect = self.framing.output_aspect;
        let targets = raw_targets(&self.order, &self.specs, &mut self.held_raw, boxes, &self.framing, &self.clip);
        self.raw_queue
            .push_back(targets.iter().map(|t| fit_crop(*t, aspect, &self.clip)).collect());
        let ready = match &mut self.mode {
            Smoothing::Crops(filters) => {
                let mut out = Vec::with_capacity(filters.len());
                for (f, t) in filters.iter_mut().zip(&targets) {
                    let v = (f[0].push(t.cx)?, f[1].push(t.cy)?, f[2].push(t.h)?);
                    if let (Some(cx), Some(cy), Some(h)) = v {
                        out.push(CropTarget { cx, cy, h });
                    }
                }
                (!out.is_empty()).then_some(out)
            }
            Smoothing::Actors(a) => {
                a.boxes_queue.push_back(boxes.to_vec());
                let mut out = Vec::with_capacity(a.ids.len());
                for k in 0..a.ids.len() {
                    let b = match boxes.binary_search_by_key(&a.ids[k], |(i, _)| *i) {
                        Ok(i) => {
                            a.last[k] = Some(boxes[i].1);
                            boxes[i].1
                        }
                        Err(_) => a.last[k].unwrap_or(a.first[k]),
                    };
                    let f = &mut a.filters[k];
                    let (cx, cy) = b.center();
                    let v = (f[0].push(cx)?, f[1].push(cy)?, f[2].push(b.h)?);
                    if let (Some(cx), Some(cy), Some(h)) = v {
                        out.push((cx, cy, h));
                    }
                }
                if out.is_empty() {
                    None
                } else {
                    Some(a.frame_targets(&out, &self.order, &self.specs, &self.framing, &self.clip))
                }
            }
        };
        Ok(ready.map(|targets| self.emit(targets)))
    }

    /// Emits the frames still held back by the filter lookahead.
    pub fn flush(&mut self) -> Vec<GeneratedFrame> {
        let per_frame: Vec<Vec<CropTarget>> = match &mut self.mode {
            Smoothing::Crops(filters) => {
                let drained: Vec<[Vec<f64>; 3]> =
                    filters.iter_mut().map(|f| [f[0].flush(), f[1].flush(), f[2].flush()]).collect();
                let remaining = drained.first().map_or(0, |d| d[0].len());
                (0..remaining)
                    .map(|k| {
                        drained
                            .iter()
                            .map(|d| CropTarget {
                                cx: d[0][k],
                                cy: d[1][k],
                                h: d[2][k],
                            })
                            .collect()
                    })
                    .collect()
            }
            Smoothing::Actors(a) => {
                let drained: Vec<[Vec<f64>; 3]> =
                    a.filters.iter_mut().map(|f| [f[0].flush(), f[1].flush(), f[2].flush()]).collect();
                let remaining = drained.first().map_or(0, |d| d[0].len());
                (0..remaining)
                    .map(|k| {
                        let values: Vec<(f64, f64, f64)> = drained.iter().map(|d| (d[0][k], d[1][k], d[2][k])).collect();
                        a.frame_targets(&values, &self.order, &self.specs, &self.framing, &self.clip)
                    })
                    .collect()
            }
        };
        per_frame.into_iter().map(|t| self.emit(t)).collect()
    }

    fn emit(&mut self, targets: Vec<CropTarget>) -> GeneratedFrame {
        let raw_crops = self.raw_queue.pop_front().expect("one raw frame per emitted frame");
        let crops = targets
            .iter()
            .map(|t| fit_crop(*t, self.framing.output_aspect, &self.clip))
            .collect();
        let frame = self.emitted;
        self.emitted += 1;
        GeneratedFrame { frame, crops, raw_crops }
    }
}

impl ActorSmoothing {
    /// Targets of the oldest queued frame from smoothed `(cx, cy, h)` per actor.
    fn frame_targets(
        &mut self,
        smoothed: &[(f64, f64, f64)],
        order: &[ActorId],
        specs: &[ShotSpec],
        framing: &FramingParams,
        clip: &ClipInfo,
    ) -> Vec<CropTarget> {
        let boxes = self.boxes_queue.pop_front().expect("one box frame per emitted frame");
        let smoothed_boxes: Vec<(ActorId, BBox)> = boxes
            .iter()
            .map(|&(id, raw)| {
                let k = self.ids.binary_search(&id).expect("known actor");
                let (cx, cy, h) = smoothed[k];
                (id, BBox::from_center(cx, cy, raw.w, h))
            })
            .collect();
        raw_targets(order, specs, &mut self.held, &smoothed_boxes, framing, clip)
    }
}

/// Framing targets for one frame with the absent-member hold rule: a group
/// with a missing member keeps its last complete target; a group never seen
/// complete frames whichever members are present, or the whole frame.
fn raw_targets(
    order: &[ActorId],
    specs: &[ShotSpec],
    held: &mut [Option<CropTarget>],
    boxes: &[(ActorId, BBox)],
    framing: &FramingParams,
    clip: &ClipInfo,
) -> Vec<CropTarget> {
    let lookup = |id: ActorId| boxes.binary_search_by_key(&id, |(i, _)| *i).ok().map(|i| boxes[i].1);
    let mut members = Vec::new();
    specs
        .iter()
        .zip(held.iter_mut())
        .map(|(spec, held)| {
            members.clear();
            members.extend(order[spec.group.0..=spec.group.1].iter().filter_map(|&id| lookup(id)));
            if members.len() == spec.len() {
                let t = group_target(&members, spec.size_class, framing);
                *held = Some(t);
                t
            } else if let Some(t) = *held {
                t
            } else if members.is_empty() {
                full_frame_target(framing.output_aspect, clip)
            } else {
                group_target(&members, spec.size_class, framing)
            }
        })
        .collect()
}
