//! Subcommands of the `posergcn` binary, usable as a library.

pub mod bench;
pub mod eval;
pub mod gradcheck;
pub mod inspect;
mod manifest;
pub mod synth;
pub mod train;

pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Exit status for an error: bad configuration or arguments are usage errors.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<posergcn::Error>() {
        Some(posergcn::Error::Config(_) | posergcn::Error::Argument(_)) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}
