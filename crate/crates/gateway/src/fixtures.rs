//! Scenes a session can be created from.
//!
//! A fixture directory holds one sub-directory per fixture, named by its
//! id, with `clip.json`, `tracks.csv` and optionally `gaze.csv`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use stagecut_core::error::{Error, Result};
use stagecut_core::ingest;
use stagecut_core::model::{ActorId, ClipInfo, ShotSpec, TrackSet};
use stagecut_core::shotgen::shot_specs;

#[derive(Debug)]
pub struct Fixture {
    pub id: String,
    pub tracks: Arc<TrackSet>,
    pub tracks_csv: String,
    pub gaze_csv: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureManifest {
    pub id: String,
    pub clip: ClipInfo,
    pub actors: Vec<ActorId>,
    pub shots: Vec<ShotSpec>,
    pub has_gaze: bool,
}

impl Fixture {
    pub fn new(id: impl Into<String>, tracks: TrackSet, gaze_csv: Option<String>) -> Self {
        Fixture {
            id: id.into(),
            tracks_csv: ingest::write_tracks(&tracks),
            tracks: Arc::new(tracks),
            gaze_csv,
        }
    }

    pub fn load(id: &str, dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|e| Error::from(e).in_file(&path))
        };
        let clip = ingest::parse_clip(&read("clip.json")?).map_err(|e| e.in_file(dir.join("clip.json")))?;
        let tracks_csv = read("tracks.csv")?;
        let tracks = ingest::parse_tracks(&tracks_csv, &clip).map_err(|e| e.in_file(dir.join("tracks.csv")))?;
        let gaze_csv = dir.join("gaze.csv").exists().then(|| read("gaze.csv")).transpose()?;
        Ok(Fixture {
            id: id.to_string(),
            tracks: Arc::new(tracks),
            tracks_csv,
            gaze_csv,
        })
    }

    pub fn manifest(&self) -> Result<FixtureManifest> {
        Ok(FixtureManifest {
            id: self.id.clone(),
            clip: *self.tracks.clip(),
            actors: self.tracks.actor_order().to_vec(),
            shots: shot_specs(self.tracks.actor_count())?,
            has_gaze: self.gaze_csv.is_some(),
        })
    }
}

#[derive(Debug, Default)]
pub struct FixtureRegistry {
    fixtures: BTreeMap<String, Arc<Fixture>>,
}

impl FixtureRegistry {
    /// Loads every sub-directory of `dir` that holds a `tracks.csv`.
    pub fn open(dir: &Path) -> Result<Self> {
        let mut registry = FixtureRegistry::default();
        let entries = std::fs::read_dir(dir).map_err(|e| Error::from(e).in_file(dir))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::from(e).in_file(dir))?;
            let path = entry.path();
            if !path.join("tracks.csv").is_file() {
                continue;
            }
            let Some(id) = path.file_name().and_then(|n| n.to_str()) else { continue };
            registry.insert(Fixture::load(id, &path)?);
        }
        Ok(registry)
    }

    pub fn insert(&mut self, fixture: Fixture) {
        self.fixtures.insert(fixture.id.clone(), Arc::new(fixture));
    }

    pub fn get(&self, id: &str) -> Option<&Arc<Fixture>> {
        self.fixtures.get(id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.fixtures.keys().cloned().collect()
    }
}
