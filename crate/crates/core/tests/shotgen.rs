use stagecut_core::model::{ActorObservation, BBox, ClipInfo, SizeClass, TrackSet};
use stagecut_core::params::EditParams;
use stagecut_core::shotgen::{enumerate_groups, frame_group, generate_shot_streams, order_actors, shot_specs};
use stagecut_core::stabilize::ANCHOR_WEIGHT;
use stagecut_testkit::reference_window_solve;

fn clip(frames: usize) -> ClipInfo {
    ClipInfo::new(1920.0, 1080.0, 25.0, frames).unwrap()
}

fn tracks(clip: ClipInfo, boxes: impl Fn(usize) -> Vec<(u32, BBox)>) -> TrackSet {
    let obs = (0..clip.frame_count).flat_map(|t| {
        boxes(t)
            .into_iter()
            .map(move |(actor_id, bbox)| ActorObservation { actor_id, frame: t, bbox })
    });
    TrackSet::from_observations(clip, obs).unwrap()
}

#[test]
fn group_counts_for_one_to_eight_actors() {
    for n in 1..=8 {
        let groups = enumerate_groups(n).unwrap();
        assert_eq!(groups.len(), n * (n + 1) / 2);
        for k in 1..=n {
            assert_eq!(groups.iter().filter(|(a, b)| b - a + 1 == k).count(), n - k + 1);
        }
    }
    assert!(enumerate_groups(0).is_err());
    let four = enumerate_groups(4).unwrap();
    assert_eq!(four.iter().filter(|(a, b)| b - a == 1).count(), 3);
    assert_eq!(four.iter().filter(|(a, b)| b - a == 2).count(), 2);
    assert_eq!(
        enumerate_groups(3).unwrap(),
        vec![(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)]
    );
}

#[test]
fn ordering_by_median_x_then_id() {
    let c = clip(5);
    let t = tracks(c, |f| {
        vec![
            (7, BBox::new(900.0 + f as f64, 100.0, 50.0, 200.0)),
            (3, BBox::new(500.0, 100.0, 50.0, 200.0)),
            (9, BBox::new(100.0, 100.0, 50.0, 200.0)),
        ]
    });
    assert_eq!(order_actors(&t), vec![9, 3, 7]);
    let tie = tracks(c, |_| vec![(5, BBox::new(10.0, 0.0, 20.0, 20.0)), (2, BBox::new(10.0, 50.0, 20.0, 20.0))]);
    assert_eq!(order_actors(&tie), vec![2, 5]);
    let single = tracks(c, |_| vec![(4, BBox::new(10.0, 0.0, 20.0, 20.0))]);
    assert_eq!(order_actors(&single), vec![4]);
}

#[test]
fn medium_shot_geometry() {
    let c = clip(1);
    let framing = EditParams::defaults(&c).framing;
    let crop = frame_group(&[BBox::new(400.0, 100.0, 100.0, 300.0)], SizeClass::MediumShot, &framing, &c);
    let h = 0.55 * 300.0;
    let w = h * 16.0 / 9.0;
    assert!((crop.h - 165.0).abs() < 1e-9);
    assert!((crop.y - 86.8).abs() < 1e-9);
    assert!((crop.w - w).abs() < 1e-9 && (crop.w - 293.333).abs() < 1e-3);
    assert!((crop.x - (450.0 - w / 2.0)).abs() < 1e-9 && (crop.x - 303.333).abs() < 1e-3);

    let centered = frame_group(&[BBox::new(900.0, 300.0, 120.0, 400.0)], SizeClass::MediumShot, &framing, &c);
    assert!((centered.center().0 - 960.0).abs() < 1e-9);

    let wide = frame_group(
        &[BBox::new(0.0, 0.0, 300.0, 1080.0), BBox::new(1600.0, 0.0, 320.0, 1080.0)],
        SizeClass::FullShot,
        &framing,
        &c,
    );
    assert_eq!(wide, c.full_frame());
}

#[test]
fn full_shot_contains_member_centers() {
    let c = clip(1);
    let framing = EditParams::defaults(&c).framing;
    let boxes = [BBox::new(200.0, 300.0, 80.0, 300.0), BBox::new(700.0, 250.0, 90.0, 330.0)];
    let crop = frame_group(&boxes, SizeClass::FullShot, &framing, &c);
    for b in &boxes {
        let (x, y) = b.center();
        assert!(crop.contains_point(x, y));
        assert!(crop.contains(b));
    }
    assert!((crop.w / crop.h - 16.0 / 9.0).abs() < 1e-9);
}

#[test]
fn three_actors_give_six_streams_of_full_length() {
    let c = clip(80);
    let t = tracks(c, |f| {
        (0..3)
            .map(|k| (k, BBox::new(300.0 + 500.0 * k as f64 + 2.0 * f as f64, 200.0, 90.0, 320.0)))
            .collect()
    });
    let set = generate_shot_streams(&t, &EditParams::defaults(&c)).unwrap();
    assert_eq!(set.len(), 6);
    assert_eq!(set.specs(), shot_specs(3).unwrap());
    for s in &set.streams {
        assert_eq!(s.crops.len(), 80);
        assert_eq!(s.raw_crops.len(), 80);
        for crop in &s.crops {
            assert!(c.full_frame().contains(crop));
            let clamped = crop.w >= c.width || crop.h >= c.height;
            assert!(clamped || (crop.w / crop.h - 16.0 / 9.0).abs() < 1e-6);
        }
    }
}

#[test]
fn static_actors_are_not_moved() {
    let c = clip(60);
    let t = tracks(c, |_| {
        vec![(0, BBox::new(300.0, 200.0, 100.0, 300.0)), (1, BBox::new(1200.0, 220.0, 110.0, 290.0))]
    });
    let set = generate_shot_streams(&t, &EditParams::defaults(&c)).unwrap();
    for s in &set.streams {
        assert_eq!(s.crops, s.raw_crops);
    }
}

#[test]
fn absent_member_holds_last_crop() {
    let c = clip(40);
    let t = tracks(c, |f| {
        let mut v = vec![(0, BBox::new(300.0 + f as f64, 200.0, 100.0, 300.0))];
        if !(10..20).contains(&f) {
            v.push((1, BBox::new(1200.0, 220.0, 110.0, 290.0)));
        }
        v
    });
    let set = generate_shot_streams(&t, &EditParams::defaults(&c)).unwrap();
    // Actor 1's medium shot and the two-shot freeze while actor 1 is gone.
    for shot in [1, 2] {
        let raw = &set.streams[shot].raw_crops;
        for f in 10..20 {
            assert_eq!(raw[f], raw[9], "shot {shot} frame {f}");
        }
    }
    // Actor 0's own shot keeps following.
    assert_ne!(set.streams[0].raw_crops[15], set.streams[0].raw_crops[9]);
}

#[test]
fn late_entrance_uses_present_members_then_whole_frame() {
    let c = clip(20);
    let t = tracks(c, |f| {
        let mut v = vec![(0, BBox::new(300.0, 200.0, 100.0, 300.0))];
        if f >= 5 {
            v.push((1, BBox::new(1200.0, 220.0, 110.0, 290.0)));
        }
        v
    });
    let p = EditParams::defaults(&c);
    let set = generate_shot_streams(&t, &p).unwrap();
    // Before actor 1 appears its medium shot shows the whole frame and the
    // two-shot frames actor 0 alone.
    assert_eq!(set.streams[1].raw_crops[0], c.full_frame());
    let alone = frame_group(&[BBox::new(300.0, 200.0, 100.0, 300.0)], SizeClass::FullShot, &p.framing, &c);
    assert_eq!(set.streams[2].raw_crops[0], alone);
}

#[test]
fn jittered_center_matches_dense_reference() {
    let c = clip(90);
    let x_at = |f: usize| 800.0 + if f.is_multiple_of(2) { 3.0 } else { -3.0 } + 0.5 * f as f64;
    let t = tracks(c, |f| vec![(0, BBox::new(x_at(f), 300.0, 100.0, 300.0))]);
    let p = EditParams::defaults(&c);
    let set = generate_shot_streams(&t, &p).unwrap();
    let raw: Vec<f64> = (0..90).map(|f| x_at(f) + 50.0).collect();
    let lam = [p.filter.lam1, p.filter.lam2, p.filter.lam3];
    let (wp, wf) = (p.filter.w_past, p.filter.w_future);
    let got: Vec<f64> = set.streams[0].crops.iter().map(|b| b.center().0).collect();
    for k in 0..90usize {
        let past = &got[k.saturating_sub(wp)..k];
        let pending = &raw[k..(k + wf + 1).min(90)];
        let y: Vec<f64> = past.iter().chain(pending).copied().collect();
        let w: Vec<f64> = (0..y.len()).map(|i| if i < past.len() { ANCHOR_WEIGHT } else { 1.0 }).collect();
        let (r, _) = reference_window_solve(&y, &w, lam, 1e-9);
        assert!((got[k] - r[past.len()]).abs() <= 1e-3, "frame {k}: {} vs {}", got[k], r[past.len()]);
    }
}

#[test]
fn actor_smoothing_mode_produces_valid_streams() {
    let c = clip(70);
    let t = tracks(c, |f| {
        let mut v = vec![(0, BBox::new(300.0 + 3.0 * f as f64, 200.0, 100.0, 300.0))];
        if f > 20 {
            v.push((1, BBox::new(1300.0 - f as f64, 220.0, 110.0, 290.0)));
        }
        v
    });
    let mut p = EditParams::defaults(&c);
    p.smooth_actors = true;
    let set = generate_shot_streams(&t, &p).unwrap();
    assert_eq!(set.len(), 3);
    for s in &set.streams {
        assert_eq!(s.crops.len(), 70);
        assert!(s.crops.iter().all(|b| b.is_valid() && c.full_frame().contains(b)));
    }
    // Linear motion survives the filter.
    let mid = set.streams[0].crops[35].center().0;
    assert!((mid - (350.0 + 3.0 * 35.0)).abs() < 1.0, "{mid}");
}
