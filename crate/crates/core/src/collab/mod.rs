//! Live sessions: a person drives the operator side of an episode through a
//! cursor, coupled to the board by a saturating spring-damper, while a policy
//! or the admittance controller assists.
//!
//! The transport lives elsewhere; this module is synchronous and deterministic
//! given the sequence of client messages and ticks.

pub mod session;
pub mod wire;

pub use session::{coupling_force, Assistant, AssistantSpec, CursorTarget, Session, SessionId, SessionManager};
pub use wire::{ClientMessage, ServerMessage, StateMessage, WIRE_VERSION};
