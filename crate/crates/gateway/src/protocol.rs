//! JSON messages exchanged over the session socket.

use serde::{Deserialize, Serialize};
use stagecut_core::model::{ActorId, ClipInfo, ShotSpec};
use stagecut_core::params::{EditParams, ParamOverrides};
use stagecut_core::selector::OnlineDecision;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clock {
    /// The client sends `tick`.
    #[default]
    Client,
    /// The server ticks at the clip frame rate.
    Server,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireSample {
    pub frame: usize,
    pub user: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMsg {
    Create {
        fixture: String,
        #[serde(default)]
        params: ParamOverrides,
        #[serde(default)]
        clock: Clock,
    },
    Gaze {
        session_id: Option<String>,
        samples: Vec<WireSample>,
    },
    Tick {
        session_id: Option<String>,
    },
    SetParams {
        session_id: Option<String>,
        params: ParamOverrides,
    },
    Close {
        session_id: Option<String>,
    },
    /// Read-only subscription to another connection's session.
    Observe {
        session_id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub fixture: String,
    pub clip: ClipInfo,
    /// Actor ids in shot-group order.
    pub actors: Vec<ActorId>,
    pub shots: Vec<ShotSpec>,
    pub lookahead: usize,
    pub clock: Clock,
    pub params: EditParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMsg {
    Manifest {
        session_id: String,
        #[serde(flatten)]
        manifest: Box<Manifest>,
    },
    Buffering {
        session_id: String,
        remaining: usize,
    },
    Decision {
        session_id: String,
        frame: usize,
        shot_id: usize,
        crop: [f64; 4],
        potentials: Vec<f64>,
        theta: usize,
        cut: bool,
    },
    Ack {
        session_id: String,
        of: String,
    },
    /// Every frame has been decided.
    End {
        session_id: String,
        frames: usize,
    },
    Closed {
        session_id: String,
    },
    Error {
        session_id: Option<String>,
        code: ErrorCode,
        msg: String,
    },
}

impl ServerMsg {
    pub fn decision(session_id: &str, d: &OnlineDecision) -> Self {
        ServerMsg::Decision {
            session_id: session_id.to_string(),
            frame: d.frame,
            shot_id: d.shot_id,
            crop: d.crop.to_array(),
            potentials: d.potentials.clone(),
            theta: d.theta,
            cut: d.cut,
        }
    }

    pub fn error(session_id: Option<&str>, code: ErrorCode, msg: impl Into<String>) -> Self {
        ServerMsg::Error {
            session_id: session_id.map(str::to_string),
            code,
            msg: msg.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    UnknownFixture,
    UnknownSession,
    SessionClosed,
    InvalidParams,
    RequiresNewSession,
    InvalidGaze,
    Finished,
    ServerClock,
    Internal,
}
