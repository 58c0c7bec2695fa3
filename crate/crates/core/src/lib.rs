//! Protocol-level simulator of reconfigurable fake base stations and the
//! detection heuristics deployed against them.
//!
//! The crate models the adversary's three phases (launch, connection
//! hijacking, application) over a simulated radio environment, emits typed
//! protocol traces, and evaluates rule-based detectors against them. No
//! radio hardware and no bit-exact PDUs are involved; everything is typed
//! events and dB margins.

pub mod config;
pub mod detect;
pub mod phy;
pub mod pipeline;
pub mod radio;
pub mod rules;
pub mod trace;
pub mod ue;

pub use config::{ConfigProfile, HijackMethod};
pub use radio::{Environment, ScanDatabase};
pub use rules::{check, ValidationReport, Verdict};
pub use trace::TraceEvent;
