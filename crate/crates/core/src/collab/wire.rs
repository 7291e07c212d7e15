//! JSON message schema, version 1.
//!
//! Every message is one JSON object with a `v` (schema version) and a `type`
//! field; the remaining fields depend on the type. Units: m, rad, s, N, N·m.
//! Pose arrays are `[x, y, z, θy]`, twist `[vx, vy, vz, ωy]`, wrench
//! `[fx, fy, fz, τy]`.
//!
//! Client to server:
//!
//! | type         | fields                                              |
//! |--------------|-----------------------------------------------------|
//! | `create`     | `assistant`: `"admittance"` or `"policy"`; `seed`?  |
//! | `resume`     | `session`: id of a parked session                   |
//! | `ready`      | starts the tick stream                              |
//! | `set_cursor` | `x`, `z`, `theta`: coupling target                  |
//! | `set_feed`   | `rate`: insertion feed of the y target (m/s)        |
//! | `pause`      | freezes physics; ticks continue                     |
//! | `play`       | undoes `pause`                                      |
//! | `reset`      | `seed`?: new episode in the same session            |
//!
//! Server to client: `session_info` (see [`SessionInfo`]), `state` (see
//! [`StateMessage`]) and `error` with a `message`.

use serde::{Deserialize, Serialize};

use super::session::SessionId;
use crate::error::{Error, Result};
use crate::sim::Status;

pub const WIRE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssistantKind {
    Admittance,
    Policy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Create {
        assistant: AssistantKind,
        #[serde(default)]
        seed: Option<u64>,
    },
    Resume {
        session: SessionId,
    },
    Ready,
    SetCursor {
        x: f64,
        z: f64,
        theta: f64,
    },
    SetFeed {
        rate: f64,
    },
    Pause,
    Play,
    Reset {
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session: SessionId,
    pub assistant: String,
    pub seed: u64,
    /// State messages per second.
    pub broadcast_hz: f64,
    /// Physics step (s).
    pub dt: f64,
    /// Safety thresholds.
    pub f_max: f64,
    pub t_max: f64,
    pub feed_rate: f64,
    pub start_pose: [f64; 4],
    pub target_pose: [f64; 4],
    pub board_half_extents: [f64; 3],
    pub clearance: f64,
    pub slot_depth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    /// Broadcast counter; increases by one per message within a session.
    pub tick: u64,
    /// Episode time (s).
    pub time: f64,
    /// Physics steps taken this episode.
    pub steps: u64,
    pub pose: [f64; 4],
    pub twist: [f64; 4],
    /// Sensor reading.
    pub wrench: [f64; 4],
    /// Coupling load applied on the last step.
    pub human: [f64; 4],
    /// Coupling target, once a cursor has been received.
    pub target: Option<[f64; 4]>,
    pub reward: f64,
    pub status: Status,
    pub first_contact_time: Option<f64>,
    pub paused: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    SessionInfo(SessionInfo),
    State(StateMessage),
    Error { message: String },
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    v: u32,
    #[serde(flatten)]
    body: T,
}

fn decode<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let raw: serde_json::Value = serde_json::from_str(text)?;
    match raw.get("v").and_then(|v| v.as_u64()) {
        Some(v) if v == WIRE_VERSION as u64 => {}
        Some(v) => return Err(Error::Usage(format!("unsupported wire version {v} (expected {WIRE_VERSION})"))),
        None => return Err(Error::Usage("message lacks a numeric `v` field".into())),
    }
    let mut obj = raw;
    obj.as_object_mut().map(|m| m.remove("v"));
    Ok(serde_json::from_value(obj)?)
}

fn encode<T: Serialize>(body: &T) -> String {
    serde_json::to_string(&Envelope { v: WIRE_VERSION, body }).expect("wire messages always serialize")
}

impl ClientMessage {
    pub fn decode(text: &str) -> Result<Self> {
        decode(text)
    }

    pub fn encode(&self) -> String {
        encode(self)
    }
}

impl ServerMessage {
    pub fn decode(text: &str) -> Result<Self> {
        decode(text)
    }

    pub fn encode(&self) -> String {
        encode(self)
    }

    pub fn error(e: impl std::fmt::Display) -> Self {
        Self::Error { message: e.to_string() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn client_round_trip() {
        let msgs = [
            ClientMessage::Create { assistant: AssistantKind::Policy, seed: Some(3) },
            ClientMessage::Resume { session: 7 },
            ClientMessage::Ready,
            ClientMessage::SetCursor { x: 0.01, z: -0.002, theta: 0.03 },
            ClientMessage::SetFeed { rate: 0.02 },
            ClientMessage::Pause,
            ClientMessage::Play,
            ClientMessage::Reset { seed: None },
        ];
        for m in msgs {
            assert_eq!(ClientMessage::decode(&m.encode()).unwrap(), m);
        }
    }

    #[test]
    fn documented_shapes_parse() {
        let m = ClientMessage::decode(r#"{"v":1,"type":"set_cursor","x":0,"z":0.5,"theta":-1}"#).unwrap();
        assert_eq!(m, ClientMessage::SetCursor { x: 0.0, z: 0.5, theta: -1.0 });
        let m = ClientMessage::decode(r#"{"v":1,"type":"create","assistant":"admittance"}"#).unwrap();
        assert_eq!(m, ClientMessage::Create { assistant: AssistantKind::Admittance, seed: None });
        let e = ServerMessage::error("boom").encode();
        assert_eq!(e, r#"{"v":1,"type":"error","message":"boom"}"#);
    }

    #[test]
    fn version_and_shape_checked() {
        assert!(ClientMessage::decode(r#"{"v":2,"type":"ready"}"#).is_err());
        assert!(ClientMessage::decode(r#"{"type":"ready"}"#).is_err());
        assert!(ClientMessage::decode(r#"{"v":1,"type":"teleport"}"#).is_err());
        assert!(ClientMessage::decode(r#"{"v":1,"type":"set_feed"}"#).is_err());
        assert!(ClientMessage::decode("not json").is_err());
    }

    #[test]
    fn state_round_trip() {
        let s = ServerMessage::State(StateMessage {
            tick: 4,
            time: 0.13,
            steps: 13,
            pose: [0.0, -0.2, 0.0, 0.01],
            twist: [0.0; 4],
            wrench: [0.1, 0.2, 0.3, 0.04],
            human: [0.0; 4],
            target: None,
            reward: -0.001,
            status: Status::Running,
            first_contact_time: None,
            paused: false,
        });
        assert_eq!(ServerMessage::decode(&s.encode()).unwrap(), s);
    }
}
