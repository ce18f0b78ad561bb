//! Interpreter, type checker and reactive runtime for Rizzo, a modal FRP
//! calculus with two later modalities.
//!
//! The pipeline is: [`frontend`] parses and desugars surface programs to core
//! [`syntax`] terms, [`typeck`] checks and elaborates them, [`eval`] runs the
//! initial evaluation, and [`reactive`] steps the machine once per input event.
//! [`oracle`] replays runs to check the runtime's metatheoretic guarantees.

pub mod driver;
pub mod eval;
pub mod frontend;
pub mod oracle;
pub mod reactive;
pub mod snapshot;
pub mod stdlib;
pub mod store;
pub mod syntax;
pub mod trace;
pub mod typeck;
