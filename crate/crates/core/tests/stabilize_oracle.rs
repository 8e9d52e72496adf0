use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stagecut_core::params::FilterParams;
use stagecut_core::stabilize::{solve_window, window_objective, FilterState, ANCHOR_WEIGHT};
use stagecut_testkit::reference_window_solve;

const LAM: [f64; 3] = [1.0, 10.0, 100.0];

fn random_window(rng: &mut ChaCha8Rng, anchors: usize, pending: usize) -> (Vec<f64>, Vec<f64>) {
    let base = rng.gen_range(-500.0..1500.0);
    let slope = rng.gen_range(-5.0..5.0);
    let noise = rng.gen_range(0.5..30.0);
    let y: Vec<f64> = (0..anchors + pending)
        .map(|i| base + slope * i as f64 + rng.gen_range(-noise..noise) + if rng.gen_bool(0.05) { 60.0 } else { 0.0 })
        .collect();
    let w = (0..anchors + pending).map(|i| if i < anchors { ANCHOR_WEIGHT } else { 1.0 }).collect();
    (y, w)
}

#[test]
fn solver_matches_dense_reference_on_random_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let anchors = rng.gen_range(0..=13);
        let (y, w) = random_window(&mut rng, anchors, 14);
        let x = solve_window(&y, &w, LAM);
        let (r, gap) = reference_window_solve(&y, &w, LAM, 1e-9);
        // Strong convexity (weights ≥ 1) bounds the distance to the optimum by sqrt(gap).
        assert!(gap <= 1e-9, "reference did not converge: gap {gap}");
        let err = (x[anchors] - r[anchors]).abs();
        worst = worst.max(x.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        assert!(err <= 1e-4, "emitted entry differs by {err}");
        assert!(window_objective(&x, &y, &w, LAM) <= window_objective(&r, &y, &w, LAM) + 1e-7);
    }
    eprintln!("worst full-window deviation {worst:e}");
    assert!(worst <= 1e-4);
}

#[test]
fn step_sequence_matches_reference() {
    let params = FilterParams { w_past: 13, w_future: 13, lam1: LAM[0], lam2: LAM[1], lam3: LAM[2] };
    let raw: Vec<f64> = (0..60).map(|i| if i < 30 { 0.0 } else { 10.0 }).collect();
    let mut f = FilterState::new(params);
    let mut emitted = Vec::new();
    for &v in &raw {
        emitted.extend(f.push(v).unwrap());
    }
    emitted.extend(f.flush());
    assert_eq!(emitted.len(), raw.len());
    for k in 0..raw.len() {
        let past = &emitted[k.saturating_sub(13)..k];
        let pending = &raw[k..(k + 14).min(raw.len())];
        let y: Vec<f64> = past.iter().chain(pending).copied().collect();
        let w: Vec<f64> = (0..y.len()).map(|i| if i < past.len() { ANCHOR_WEIGHT } else { 1.0 }).collect();
        let (r, _) = reference_window_solve(&y, &w, LAM, 1e-9);
        assert!((emitted[k] - r[past.len()]).abs() <= 1e-4, "frame {k}: {} vs {}", emitted[k], r[past.len()]);
    }
}

#[test]
fn throughput_timing() {
    let params = FilterParams { w_past: 13, w_future: 13, lam1: LAM[0], lam2: LAM[1], lam3: LAM[2] };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut f = FilterState::new(params);
    let start = std::time::Instant::now();
    let mut pos = 500.0;
    for _ in 0..10_000 {
        pos += rng.gen_range(-3.0..3.0);
        f.push(pos + rng.gen_range(-4.0..4.0)).unwrap();
    }
    let rate = 10_000.0 / start.elapsed().as_secs_f64();
    eprintln!("filter throughput {rate:.0} pushes/s");
    assert!(rate >= 250.0);
}
