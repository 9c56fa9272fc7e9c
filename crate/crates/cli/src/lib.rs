//! File formats, checkpointed survey harness and command line for the
//! `topodof` bounds library.

pub mod format;
pub mod store;
pub mod survey;
