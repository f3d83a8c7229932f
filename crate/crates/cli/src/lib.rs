//! File formats, subcommands and certificate replay behind the `ncube` binary.

pub mod commands;
pub mod error;
pub mod json;
pub mod replay;
pub mod result;
pub mod sweep;
