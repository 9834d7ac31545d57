use std::path::PathBuf;

pub mod asymptotics;
pub mod converge;
pub mod simulate;
pub mod sweep;
pub mod tables;
pub mod trajectory;

/// Shared command context from the global flags.
pub struct Ctx {
    pub out: PathBuf,
    pub seed_base: Option<u64>,
    pub deterministic: bool,
    pub check_integrator: bool,
}
