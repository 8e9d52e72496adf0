//! One live editing session: an engine plus the tick contract.

use std::sync::Arc;

use stagecut_core::engine::OnlineEngine;
use stagecut_core::error::Error;
use stagecut_core::model::GazeSample;
use stagecut_core::params::{EditParams, ParamOverrides};

use crate::fixtures::Fixture;
use crate::protocol::{Clock, ErrorCode, Manifest, ServerMsg, WireSample};

#[derive(Debug)]
pub struct Session {
    id: String,
    fixture: Arc<Fixture>,
    engine: OnlineEngine,
    clock: Clock,
    closed: bool,
}

/// Request-level failure, reported only to the sender.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub code: ErrorCode,
    pub msg: String,
}

impl Rejection {
    fn new(code: ErrorCode, msg: impl Into<String>) -> Self {
        Rejection { code, msg: msg.into() }
    }

    fn from_core(code: ErrorCode, e: Error) -> Self {
        Rejection::new(code, e.to_string())
    }

    pub fn into_msg(self, session_id: Option<&str>) -> ServerMsg {
        ServerMsg::error(session_id, self.code, self.msg)
    }
}

impl Session {
    pub fn create(id: String, fixture: Arc<Fixture>, overrides: &ParamOverrides, clock: Clock) -> Result<Self, Rejection> {
        let params = EditParams::resolve(fixture.tracks.clip(), overrides)
            .map_err(|e| Rejection::from_core(ErrorCode::InvalidParams, e))?;
        let engine = OnlineEngine::new(Arc::clone(&fixture.tracks), &params)
            .map_err(|e| Rejection::from_core(ErrorCode::InvalidParams, e))?;
        Ok(Session {
            id,
            fixture,
            engine,
            clock,
            closed: false,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_finished(&self) -> bool {
        self.engine.is_done()
    }

    pub fn engine(&self) -> &OnlineEngine {
        &self.engine
    }

    pub fn manifest(&self) -> ServerMsg {
        let params = *self.engine.params();
        ServerMsg::Manifest {
            session_id: self.id.clone(),
            manifest: Box::new(Manifest {
                fixture: self.fixture.id.clone(),
                clip: *self.engine.clip(),
                actors: self.engine.tracks().actor_order().to_vec(),
                shots: self.engine.specs().to_vec(),
                lookahead: params.lookahead_frames,
                clock: self.clock,
                params,
            }),
        }
    }

    fn check_open(&self) -> Result<(), Rejection> {
        if self.closed {
            return Err(Rejection::new(ErrorCode::SessionClosed, format!("session {} is closed", self.id)));
        }
        Ok(())
    }

    /// Buffers a batch of samples; a bad sample rejects the whole batch.
    pub fn ingest_gaze(&mut self, samples: &[WireSample]) -> Result<ServerMsg, Rejection> {
        self.check_open()?;
        let frames = self.engine.frame_count();
        if let Some(s) = samples
            .iter()
            .find(|s| s.frame >= frames || !s.x.is_finite() || !s.y.is_finite())
        {
            return Err(Rejection::new(
                ErrorCode::InvalidGaze,
                format!("sample for frame {} at ({}, {}) is unusable", s.frame, s.x, s.y),
            ));
        }
        for s in samples {
            let sample = GazeSample {
                user_id: s.user,
                frame: s.frame,
                x: s.x,
                y: s.y,
            };
            self.engine
                .add_gaze(sample)
                .map_err(|e| Rejection::from_core(ErrorCode::InvalidGaze, e))?;
        }
        Ok(ServerMsg::Ack {
            session_id: self.id.clone(),
            of: "gaze".into(),
        })
    }

    /// Advances one frame. Emits the next decision when its look-ahead is
    /// complete, a buffering countdown otherwise. Once the last frame is in,
    /// the decisions still owed come out one per tick.
    pub fn tick(&mut self) -> Result<ServerMsg, Rejection> {
        self.check_open()?;
        if self.engine.is_done() {
            return Err(Rejection::new(ErrorCode::Finished, "every frame has been decided"));
        }
        let internal = |e| Rejection::from_core(ErrorCode::Internal, e);
        if let Some(d) = self.engine.next_decision().map_err(internal)? {
            return Ok(ServerMsg::decision(&self.id, &d));
        }
        self.engine.push_frame().map_err(internal)?;
        match self.engine.next_decision().map_err(internal)? {
            Some(d) => Ok(ServerMsg::decision(&self.id, &d)),
            None => Ok(ServerMsg::Buffering {
                session_id: self.id.clone(),
                remaining: self.engine.buffering_remaining(),
            }),
        }
    }

    pub fn set_params(&mut self, overrides: &ParamOverrides) -> Result<ServerMsg, Rejection> {
        self.check_open()?;
        self.engine.update_params(overrides).map_err(|e| {
            let code = match &e {
                Error::RequiresNewSession(_) => ErrorCode::RequiresNewSession,
                _ => ErrorCode::InvalidParams,
            };
            Rejection::from_core(code, e)
        })?;
        Ok(ServerMsg::Ack {
            session_id: self.id.clone(),
            of: "set_params".into(),
        })
    }

    pub fn close(&mut self) -> ServerMsg {
        self.closed = true;
        ServerMsg::Closed { session_id: self.id.clone() }
    }
}
