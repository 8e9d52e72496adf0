//! Live editing sessions over WebSocket.
//!
//! Clients create a session on a fixture, stream gaze samples and tick the
//! clock; each tick after warm-up yields one decision. Fixture geometry is
//! also served over plain HTTP.

pub mod fixtures;
pub mod protocol;
pub mod server;
pub mod session;

pub use fixtures::{Fixture, FixtureManifest, FixtureRegistry};
pub use protocol::{ClientMsg, Clock, ErrorCode, Manifest, ServerMsg, WireSample};
pub use server::{router, serve};
pub use session::{Rejection, Session};
