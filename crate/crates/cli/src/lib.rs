//! Library surface of the command-line front end: config schema, artifact
//! formats, and the subcommand implementations.

pub mod artifacts;
pub mod experiment;
pub mod plotdata;
pub mod run;
pub mod targets;
pub mod verify;
