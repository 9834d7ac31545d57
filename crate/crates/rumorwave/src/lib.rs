//! Rumor propagation with random awareness: exact chain simulation, fluid
//! limits, and outbreak asymptotics.
//!
//! The population model is Maki–Thompson with random awareness (MT–RA): each
//! individual needs a random number of hearings, drawn from an awareness law
//! `(p_i)`, before starting to spread, and with probability `p_0` never
//! spreads at all. The crate provides
//!
//! - [`awareness`]: awareness laws with exact tail sums and hazards;
//! - [`gammafn`]: the Poisson-weight and integer-shape incomplete gamma
//!   kernels behind every closed form;
//! - [`ddpm`]: a generic countable-transition jump system — drift field,
//!   exact Gillespie simulation, fluid-limit integration, and the uniform
//!   path/limit distance;
//! - [`mtra`]: the concrete MT–RA chain on both clocks, the classical
//!   Daley–Kendall / Maki–Thompson / k-MT instances, and outbreak statistics;
//! - [`limits`]: closed-form accelerated-time analysis — final proportions,
//!   absorption point, spreader peaks, and multi-wave detection;
//! - [`reference`](mod@reference): published reference values used as the
//!   regression gate.

pub mod awareness;
pub mod ddpm;
pub mod gammafn;
pub mod limits;
pub mod mtra;
pub mod reference;

// The guide's code blocks run as doctests, keeping the book in sync with
// the library (mdbook itself cannot test snippets against dependencies).
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/awareness.md")]
    mod awareness {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/fluid-limit.md")]
    mod fluid_limit {}
    #[doc = include_str!("../../../book/src/asymptotics.md")]
    mod asymptotics {}
    #[doc = include_str!("../../../book/src/runner.md")]
    mod runner {}
}
