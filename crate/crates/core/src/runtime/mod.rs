//! Scenario loading, the dual-rate executor, telemetry and the streaming service.

pub mod executor;
pub mod protocol;
pub mod scenario;
pub mod server;
pub mod telemetry;

pub use executor::{run_scenario, ActionError, Executor, GoalOutcome, RunError, RunReport};
pub use protocol::{Envelope, GridUpdate, Message, Snapshot, PROTOCOL_VERSION};
pub use scenario::{Action, Event, Mode, ParseError, PushSide, Scenario, ScenarioError, WorldLoadError};
pub use server::{serve, spawn, Client, ServeOptions, ServerHandle};
pub use telemetry::{TelemetryRecord, TelemetryWriter};
