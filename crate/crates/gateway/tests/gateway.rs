use std::time::{Duration, Instant};

use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use stagecut_core::model::{ActorObservation, BBox, ClipInfo, GazeSample, GazeStream, TrackSet};
use stagecut_core::params::EditParams;
use stagecut_core::selector::run_online;
use stagecut_core::shotgen::generate_shot_streams;
use stagecut_gateway::{Fixture, FixtureRegistry};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

const FRAMES: usize = 120;

fn tracks(frames: usize) -> TrackSet {
    let clip = ClipInfo::new(1920.0, 1080.0, 25.0, frames).unwrap();
    let obs = (0..frames).flat_map(|t| {
        (0..3u32).map(move |a| ActorObservation {
            actor_id: a,
            frame: t,
            bbox: BBox::new(250.0 + 600.0 * a as f64 + (t as f64 * 0.1).sin() * 15.0, 400.0, 120.0, 420.0),
        })
    });
    TrackSet::from_observations(clip, obs).unwrap()
}

/// Gaze that moves from actor 0 to actor 2 halfway through.
fn gaze(tracks: &TrackSet) -> GazeStream {
    let mut g = GazeStream::new(tracks.frame_count());
    for t in 0..tracks.frame_count() {
        let actor = if t < tracks.frame_count() / 2 { 0 } else { 2 };
        let (x, y) = tracks.bbox(t, actor).unwrap().center();
        g.push(GazeSample { user_id: 0, frame: t, x, y: y - 100.0 }).unwrap();
    }
    g
}

async fn start() -> (String, TrackSet) {
    let t = tracks(FRAMES);
    let mut registry = FixtureRegistry::default();
    registry.insert(Fixture::new("trio", t.clone(), Some("frame,user_id,gx,gy\n".into())));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    tokio::spawn(stagecut_gateway::serve(listener, registry));
    (addr, t)
}

async fn connect(addr: &str) -> Ws {
    tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap().0
}

async fn send(ws: &mut Ws, v: Value) {
    ws.send(Message::text(v.to_string())).await.unwrap();
}

async fn recv(ws: &mut Ws) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("message in time")
            .expect("socket open")
            .unwrap();
        if let Message::Text(text) = msg {
            return serde_json::from_str(&text).unwrap();
        }
    }
}

async fn create(ws: &mut Ws, params: Value) -> Value {
    send(ws, json!({"type": "create", "fixture": "trio", "params": params})).await;
    let m = recv(ws).await;
    assert_eq!(m["type"], "manifest", "{m}");
    m
}

async fn http_get(addr: &str, path: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).await.unwrap();
    let req = format!("GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n");
    stream.write_all(req.as_bytes()).await.unwrap();
    let mut body = String::new();
    stream.read_to_string(&mut body).await.unwrap();
    let status = body[9..12].parse().unwrap();
    let payload = body.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, payload)
}

#[tokio::test]
async fn fixtures_over_http() {
    let (addr, t) = start().await;
    let (status, body) = http_get(&addr, "/fixtures/trio/manifest").await;
    assert_eq!(status, 200);
    let m: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(m["shots"].as_array().unwrap().len(), 6);
    assert_eq!(m["clip"]["frame_count"], FRAMES);
    let (status, body) = http_get(&addr, "/fixtures/trio/tracks.csv").await;
    assert_eq!(status, 200);
    assert_eq!(body, stagecut_core::ingest::write_tracks(&t));
    assert_eq!(http_get(&addr, "/fixtures/nope/manifest").await.0, 404);
    let (_, list) = http_get(&addr, "/fixtures").await;
    assert_eq!(list, r#"["trio"]"#);
}

#[tokio::test]
async fn create_reports_manifest_or_error() {
    let (addr, _) = start().await;
    let mut ws = connect(&addr).await;
    send(&mut ws, json!({"type": "create", "fixture": "nope"})).await;
    let e = recv(&mut ws).await;
    assert_eq!(e["type"], "error");
    assert_eq!(e["code"], "unknown_fixture");

    let m = create(&mut ws, json!({"lookahead_frames": 20})).await;
    assert_eq!(m["shots"].as_array().unwrap().len(), 6);
    assert_eq!(m["lookahead"], 20);
    assert_eq!(m["actors"], json!([0, 1, 2]));

    send(&mut ws, json!({"type": "create", "fixture": "trio", "params": {"lambda_transition": -2}})).await;
    assert_eq!(recv(&mut ws).await["code"], "invalid_params");
    send(&mut ws, json!({"type": "teleport"})).await;
    assert_eq!(recv(&mut ws).await["code"], "bad_request");
}

/// Ticks once, sending that tick's gaze first; returns the tick's event.
async fn step(ws: &mut Ws, session: &str, gaze: &GazeStream, tick: usize) -> Value {
    if tick < gaze.frame_count() {
        let samples: Vec<Value> = gaze
            .at(tick)
            .iter()
            .map(|s| json!({"frame": s.frame, "user": s.user_id, "x": s.x, "y": s.y}))
            .collect();
        send(ws, json!({"type": "gaze", "session_id": session, "samples": samples})).await;
        let ack = recv(ws).await;
        assert_eq!(ack["type"], "ack", "{ack}");
    }
    send(ws, json!({"type": "tick", "session_id": session})).await;
    recv(ws).await
}

#[tokio::test]
async fn warm_up_then_one_decision_per_tick() {
    let (addr, t) = start().await;
    let g = gaze(&t);
    let mut ws = connect(&addr).await;
    let m = create(&mut ws, json!({"lookahead_frames": 16})).await;
    let session = m["session_id"].as_str().unwrap().to_string();
    let w_future = m["params"]["w_future"].as_u64().unwrap() as usize;

    let warm = 16 + w_future + 1;
    let mut tick = 0;
    for k in 0..warm - 1 {
        let e = step(&mut ws, &session, &g, tick).await;
        tick += 1;
        assert_eq!(e["type"], "buffering", "{e}");
        assert_eq!(e["remaining"], warm - 1 - k);
    }
    let mut frames = Vec::new();
    let mut shots = Vec::new();
    loop {
        let e = step(&mut ws, &session, &g, tick).await;
        tick += 1;
        assert_eq!(e["type"], "decision", "{e}");
        frames.push(e["frame"].as_u64().unwrap() as usize);
        shots.push(e["shot_id"].as_u64().unwrap() as usize);
        if frames.len() == FRAMES {
            break;
        }
    }
    assert_eq!(frames, (0..FRAMES).collect::<Vec<_>>());
    let end = recv(&mut ws).await;
    assert_eq!(end["type"], "end");
    send(&mut ws, json!({"type": "tick"})).await;
    assert_eq!(recv(&mut ws).await["code"], "finished");

    let mut params = EditParams::defaults(t.clip());
    params.lookahead_frames = 16;
    assert_eq!(shots, run_online(&t, &g, &params).unwrap().shot_ids());
}

#[tokio::test]
async fn steady_fixation_raises_theta() {
    let (addr, t) = start().await;
    let mut fixed = GazeStream::new(FRAMES);
    for f in 0..FRAMES {
        let (x, y) = t.bbox(f, 1).unwrap().center();
        fixed.push(GazeSample { user_id: 0, frame: f, x, y: y - 100.0 }).unwrap();
    }
    let mut ws = connect(&addr).await;
    let m = create(&mut ws, json!({"lookahead_frames": 8})).await;
    let session = m["session_id"].as_str().unwrap().to_string();
    let mut thetas = Vec::new();
    let mut shots = Vec::new();
    for tick in 0..FRAMES + 30 {
        let e = step(&mut ws, &session, &fixed, tick).await;
        if e["type"] == "decision" {
            thetas.push(e["theta"].as_u64().unwrap());
            shots.push(e["shot_id"].as_u64().unwrap());
            assert_eq!(e["cut"], false);
        }
        if thetas.len() == FRAMES {
            break;
        }
    }
    assert!(shots.iter().all(|&s| s == shots[0]));
    assert_eq!(thetas, (1..=FRAMES as u64).collect::<Vec<_>>());
}

#[tokio::test]
async fn parameter_updates() {
    let (addr, _) = start().await;
    let mut ws = connect(&addr).await;
    create(&mut ws, json!({})).await;
    send(&mut ws, json!({"type": "set_params", "params": {"alpha_continuity": 9}})).await;
    let ack = recv(&mut ws).await;
    assert_eq!(ack["type"], "ack");
    assert_eq!(ack["of"], "set_params");
    send(&mut ws, json!({"type": "set_params", "params": {"lookahead_frames": 128}})).await;
    let e = recv(&mut ws).await;
    assert_eq!(e["code"], "requires_new_session");
    assert!(e["msg"].as_str().unwrap().contains("requires new session"));
    send(&mut ws, json!({"type": "set_params", "params": {"lambda_transition": -1}})).await;
    assert_eq!(recv(&mut ws).await["code"], "invalid_params");
    send(&mut ws, json!({"type": "set_params", "params": {"bogus": 1}})).await;
    assert_eq!(recv(&mut ws).await["code"], "bad_request");
}

/// Runs a session to its first decision after feeding `samples` for frame
/// 0, returning that decision's potentials.
async fn first_potentials(addr: &str, samples: Value) -> Vec<f64> {
    let mut ws = connect(addr).await;
    create(&mut ws, json!({"lookahead_frames": 4})).await;
    send(&mut ws, json!({"type": "gaze", "samples": samples})).await;
    assert_eq!(recv(&mut ws).await["type"], "ack");
    loop {
        send(&mut ws, json!({"type": "tick"})).await;
        let e = recv(&mut ws).await;
        if e["type"] == "decision" {
            assert_eq!(e["frame"], 0);
            return serde_json::from_value(e["potentials"].clone()).unwrap();
        }
    }
}

#[tokio::test]
async fn gaze_batches() {
    let (addr, t) = start().await;
    let params = EditParams::defaults(t.clip());
    let crops = generate_shot_streams(&t, &params).unwrap().crops_at(0);
    // Direct kernel evaluation over the frame-0 candidate crops.
    let kernel = |points: &[(f64, f64)]| {
        let raw: Vec<f64> = crops
            .iter()
            .map(|c| {
                let (cx, cy) = (c.x + c.w / 2.0, c.y + c.h / 2.0);
                params.epsilon_gaze
                    + points
                        .iter()
                        .map(|(x, y)| (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * params.sigma_gaze.powi(2))).exp())
                        .sum::<f64>()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect::<Vec<f64>>()
    };
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);

    let empty = first_potentials(&addr, json!([])).await;
    assert!(close(&empty, &[1.0 / 6.0; 6]));

    let one = first_potentials(&addr, json!([{"frame": 0, "user": 0, "x": 300.0, "y": 500.0}])).await;
    assert!(close(&one, &kernel(&[(300.0, 500.0)])));
    let two = first_potentials(
        &addr,
        json!([
            {"frame": 0, "user": 0, "x": 300.0, "y": 500.0},
            {"frame": 0, "user": 1, "x": 1500.0, "y": 520.0}
        ]),
    )
    .await;
    assert!(close(&two, &kernel(&[(300.0, 500.0), (1500.0, 520.0)])));
    assert!(!close(&one, &two));

    // Out-of-frame points are clamped to the border.
    let outside = first_potentials(&addr, json!([{"frame": 0, "user": 0, "x": -400.0, "y": 5000.0}])).await;
    assert!(close(&outside, &kernel(&[(0.0, 1080.0)])));

    let mut ws = connect(&addr).await;
    create(&mut ws, json!({})).await;
    send(&mut ws, json!({"type": "gaze", "samples": [{"frame": FRAMES, "user": 0, "x": 1.0, "y": 1.0}]})).await;
    assert_eq!(recv(&mut ws).await["code"], "invalid_gaze");
}

#[tokio::test]
async fn observers_see_the_same_stream() {
    let (addr, t) = start().await;
    let g = gaze(&t);
    let mut owner = connect(&addr).await;
    let m = create(&mut owner, json!({"lookahead_frames": 10})).await;
    let session = m["session_id"].as_str().unwrap().to_string();
    let mut observer = connect(&addr).await;
    send(&mut observer, json!({"type": "observe", "session_id": session})).await;
    assert_eq!(recv(&mut observer).await["type"], "manifest");

    let mut owner_events = Vec::new();
    for tick in 0..FRAMES + 40 {
        let e = step(&mut owner, &session, &g, tick).await;
        owner_events.push(e.clone());
        if e["type"] == "decision" && e["frame"] == FRAMES - 1 {
            break;
        }
    }
    let mut seen = Vec::new();
    while seen.len() < owner_events.len() {
        seen.push(recv(&mut observer).await);
    }
    assert_eq!(seen, owner_events);

    send(&mut owner, json!({"type": "close"})).await;
    assert_eq!(recv(&mut owner).await["type"], "end");
    assert_eq!(recv(&mut owner).await["type"], "closed");
    send(&mut owner, json!({"type": "tick", "session_id": session})).await;
    assert_eq!(recv(&mut owner).await["code"], "session_closed");
}

#[tokio::test]
async fn sessions_are_isolated() {
    let (addr, t) = start().await;
    let g = gaze(&t);
    let mut a = connect(&addr).await;
    let mut b = connect(&addr).await;
    let sa = create(&mut a, json!({"lookahead_frames": 12}))
        .await["session_id"]
        .as_str()
        .unwrap()
        .to_string();
    let sb = create(&mut b, json!({"lookahead_frames": 12, "alpha_continuity": 0.5}))
        .await["session_id"]
        .as_str()
        .unwrap()
        .to_string();
    assert_ne!(sa, sb);
    let (mut da, mut db) = (Vec::new(), Vec::new());
    for tick in 0..FRAMES + 30 {
        for (ws, s, out) in [(&mut a, &sa, &mut da), (&mut b, &sb, &mut db)] {
            let e = step(ws, s, &g, tick).await;
            if e["type"] == "decision" {
                out.push(e["shot_id"].as_u64().unwrap() as usize);
            }
        }
    }
    let mut p = EditParams::defaults(t.clip());
    p.lookahead_frames = 12;
    assert_eq!(da, run_online(&t, &g, &p).unwrap().shot_ids());
    p.alpha_continuity = 0.5;
    assert_eq!(db, run_online(&t, &g, &p).unwrap().shot_ids());
}

#[tokio::test]
async fn server_clock_drives_the_session() {
    let (addr, _) = start().await;
    let mut ws = connect(&addr).await;
    send(&mut ws, json!({"type": "create", "fixture": "trio", "params": {"lookahead_frames": 4}, "clock": "server"})).await;
    let m = recv(&mut ws).await;
    assert_eq!(m["clock"], "server");
    send(&mut ws, json!({"type": "tick"})).await;
    let mut decisions = 0;
    let mut rejected = false;
    loop {
        let e = recv(&mut ws).await;
        match e["type"].as_str().unwrap() {
            "decision" => decisions += 1,
            "error" => {
                assert_eq!(e["code"], "server_clock");
                rejected = true;
            }
            "end" => break,
            _ => {}
        }
    }
    assert!(rejected);
    assert_eq!(decisions, FRAMES);
}

#[tokio::test]
async fn decisions_arrive_within_a_frame_interval() {
    let (addr, t) = start().await;
    let g = gaze(&t);
    let mut ws = connect(&addr).await;
    let session = create(&mut ws, json!({}))
        .await["session_id"]
        .as_str()
        .unwrap()
        .to_string();
    let mut latencies = Vec::new();
    for tick in 0..FRAMES {
        if tick < g.frame_count() {
            let samples: Vec<Value> =
                g.at(tick).iter().map(|s| json!({"frame": s.frame, "user": 0, "x": s.x, "y": s.y})).collect();
            send(&mut ws, json!({"type": "gaze", "session_id": session, "samples": samples})).await;
            recv(&mut ws).await;
        }
        let start = Instant::now();
        send(&mut ws, json!({"type": "tick", "session_id": session})).await;
        let e = recv(&mut ws).await;
        if e["type"] == "decision" {
            latencies.push(start.elapsed().as_secs_f64());
        }
    }
    assert!(!latencies.is_empty());
    latencies.sort_by(f64::total_cmp);
    let p99 = latencies[(latencies.len() * 99).div_ceil(100) - 1];
    assert!(p99 <= 0.04, "p99 {p99} s");
}

#[test]
fn registry_loads_fixture_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tracks(30);
    let dir = tmp.path().join("duo");
    std::fs::create_dir(&dir).unwrap();
    std::fs::write(dir.join("clip.json"), serde_json::to_string(t.clip()).unwrap()).unwrap();
    std::fs::write(dir.join("tracks.csv"), stagecut_core::ingest::write_tracks(&t)).unwrap();
    std::fs::create_dir(tmp.path().join("empty")).unwrap();

    let registry = FixtureRegistry::open(tmp.path()).unwrap();
    assert_eq!(registry.ids(), vec!["duo".to_string()]);
    let fixture = registry.get("duo").unwrap();
    assert_eq!(*fixture.tracks, t);
    assert!(!fixture.manifest().unwrap().has_gaze);

    std::fs::write(dir.join("tracks.csv"), "frame,actor_id,x,y,w,h\n0,0,1,2,3\n").unwrap();
    let err = FixtureRegistry::open(tmp.path()).unwrap_err().to_string();
    assert!(err.contains("tracks.csv"), "{err}");
}
