//! Exact stochastic simulation of the finite-population chain.
//!
//! The chain jumps by one spec increment at a time: the waiting time is
//! exponential with rate `n · Σ_m β_m(X/n)` (the raw total event rate) and
//! the jumping transition is chosen with probability proportional to its
//! rate. This direct method realizes the same law as driving each transition
//! by an independent time-changed Poisson process, one event at a time, with
//! no infinite Poisson family to manage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DdpmError, Increment, RateCtx, Scale, TransitionSpec};

/// How long to run a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Run until the total event rate is zero.
    UntilAbsorbed,
    /// Run up to the given model time.
    Time(f64),
}

/// Why a simulation ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Total event rate reached zero.
    Absorbed,
    /// The time horizon was reached.
    Horizon,
    /// The event cap was reached before absorption or the horizon.
    EventCap,
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub horizon: Horizon,
    pub seed: u64,
    pub event_cap: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { horizon: Horizon::UntilAbsorbed, seed: 0, event_cap: u64::MAX }
    }
}

/// One simulated trajectory: strictly increasing jump times plus, per jump,
/// the index of the applied increment in a per-path increment table. States
/// are reconstructed incrementally; consecutive states differ by exactly one
/// spec increment in raw counts.
#[derive(Debug, Clone)]
pub struct JumpPath {
    pub n: u64,
    pub seed: u64,
    pub initial: Vec<u64>,
    pub final_counts: Vec<u64>,
    pub termination: Termination,
    /// Time up to which the path is defined: the horizon if one was hit,
    /// otherwise the last jump time.
    pub end_time: f64,
    jumps: Vec<(f64, u32)>,
    increments: Vec<Increment>,
}

impl JumpPath {
    pub fn events(&self) -> usize {
        self.jumps.len()
    }

    pub fn jump_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.jumps.iter().map(|&(t, _)| t)
    }

    /// The increments applied, in jump order.
    pub fn jump_increments(&self) -> impl Iterator<Item = &Increment> + '_ {
        self.jumps.iter().map(|&(_, idx)| &self.increments[idx as usize])
    }

    /// Visit `(time, counts)` after every jump, starting from the initial
    /// state at time zero.
    pub fn for_each_state(&self, mut visit: impl FnMut(f64, &[u64])) {
        let mut counts: Vec<u64> = self.initial.clone();
        visit(0.0, &counts);
        for &(t, idx) in &self.jumps {
            apply_increment(&mut counts, &self.increments[idx as usize]);
            visit(t, &counts);
        }
    }

    /// The same jump sequence on a different clock: replaces the jump times,
    /// which must be nondecreasing and aligned with the existing jumps.
    pub fn retimed(&self, times: Vec<f64>) -> JumpPath {
        assert_eq!(times.len(), self.jumps.len(), "one time per jump");
        assert!(times.windows(2).all(|w| w[0] <= w[1]), "times must be nondecreasing");
        let mut clone = self.clone();
        for (jump, t) in clone.jumps.iter_mut().zip(&times) {
            jump.0 = *t;
        }
        clone.end_time = times.last().copied().unwrap_or(0.0);
        clone
    }
}

fn apply_increment(counts: &mut Vec<u64>, inc: &Increment) {
    for &(i, d) in inc.terms() {
        let i = i as usize;
        if i >= counts.len() {
            counts.resize(i + 1, 0);
        }
        let next = counts[i] as i64 + i64::from(d);
        assert!(
            next >= 0,
            "negative coordinate {i} after applying {:?} to counts {:?}",
            inc.terms(),
            counts
        );
        counts[i] = next as u64;
    }
}

/// Derive the `k`-th stream seed from a base seed. Sweep points and repeated
/// seed lists use `stream_seed(base, 0), stream_seed(base, 1), …` so runs
/// stay reproducible and uncorrelated across grid points.
pub fn stream_seed(base: u64, k: u64) -> u64 {
    // splitmix64 of base + k·golden-gamma
    let mut z = base
        .wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Exact realization of the chain with raw rates `n · β_m(X/n)`, one
/// increment per event, deterministic given the seed.
pub fn simulate(
    spec: &TransitionSpec,
    n: u64,
    x0_counts: &[u64],
    options: SimOptions,
) -> Result<JumpPath, DdpmError> {
    if n == 0 {
        return Err(DdpmError::ZeroPopulation);
    }
    let nf = n as f64;
    let density0: f64 = x0_counts.iter().map(|&c| c as f64 / nf).sum();
    if density0 >= spec.radius() {
        return Err(DdpmError::BadInitialCounts { n, density: density0 });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut counts: Vec<u64> = x0_counts.to_vec();
    while counts.last() == Some(&0) {
        counts.pop();
    }
    let mut density: Vec<f64> = counts.iter().map(|&c| c as f64 / nf).collect();
    let mut listener_raw: u64 = counts.iter().skip(1).sum();

    let mut top_index = counts.len().saturating_sub(1) as u32;
    let mut rates: Vec<f64> = Vec::new();
    let mut jumps: Vec<(f64, u32)> = Vec::new();
    let mut increments: Vec<Increment> = Vec::new();
    let mut incr_ids: std::collections::HashMap<Increment, u32> = std::collections::HashMap::new();

    let mut time = 0.0_f64;
    let scale = Scale::Finite(n);
    let termination;

    loop {
        let set = spec.transitions(top_index + 1);
        rates.clear();
        let ctx = RateCtx::with_sum(&density, listener_raw as f64 / nf, scale);
        let mut total = 0.0;
        for tr in set.iter() {
            let beta = (tr.rate)(&ctx);
            debug_assert!(beta >= -1e-12, "negative rate {beta} on a simulated path");
            let beta = beta.max(0.0);
            rates.push(beta);
            total += beta;
        }
        let raw_total = nf * total;
        if raw_total <= 0.0 {
            termination = Termination::Absorbed;
            break;
        }

        let u: f64 = rng.sample(rand::distr::Open01);
        let wait = -u.ln() / raw_total;
        let next_time = time + wait;
        if let Horizon::Time(h) = options.horizon {
            if next_time > h {
                time = h;
                termination = Termination::Horizon;
                break;
            }
        }
        time = next_time;

        // Select proportionally to the rates.
        let mut pick: f64 = rng.sample::<f64, _>(rand::distr::Open01) * total;
        let mut chosen = rates.len() - 1;
        for (idx, &r) in rates.iter().enumerate() {
            pick -= r;
            if pick <= 0.0 {
                chosen = idx;
                break;
            }
        }

        let inc = set[chosen].increment.clone();
        drop(set);
        apply_increment(&mut counts, &inc);
        for &(i, d) in inc.terms() {
            let i_usize = i as usize;
            if i_usize >= density.len() {
                density.resize(i_usize + 1, 0.0);
            }
            density[i_usize] = counts[i_usize] as f64 / nf;
            if i >= 1 {
                listener_raw = (listener_raw as i64 + i64::from(d)) as u64;
            }
            top_index = top_index.max(i);
        }

        let id = *incr_ids.entry(inc.clone()).or_insert_with(|| {
            increments.push(inc);
            (increments.len() - 1) as u32
        });
        jumps.push((time, id));

        if jumps.len() as u64 >= options.event_cap {
            termination = Termination::EventCap;
            break;
        }
    }

    let end_time = match termination {
        Termination::Horizon => time,
        _ => jumps.last().map(|&(t, _)| t).unwrap_or(0.0),
    };
    Ok(JumpPath {
        n,
        seed: options.seed,
        initial: x0_counts.to_vec(),
        final_counts: counts,
        termination,
        end_time,
        jumps,
        increments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddpm::pure_death_spec;

    #[test]
    fn single_particle_death_is_one_exponential_jump() {
        let spec = pure_death_spec();
        let path =
            simulate(&spec, 1, &[0, 1], SimOptions { seed: 42, ..Default::default() }).unwrap();
        assert_eq!(path.termination, Termination::Absorbed);
        assert_eq!(path.events(), 1);
        assert_eq!(path.final_counts[1], 0);
        assert!(path.end_time > 0.0);
    }

    #[test]
    fn equal_seeds_reproduce_the_path() {
        let spec = pure_death_spec();
        let opts = SimOptions { seed: 7, ..Default::default() };
        let a = simulate(&spec, 50, &[0, 50], opts).unwrap();
        let b = simulate(&spec, 50, &[0, 50], opts).unwrap();
        assert_eq!(a.jumps, b.jumps);
        assert_eq!(a.final_counts, b.final_counts);
        let c =
            simulate(&spec, 50, &[0, 50], SimOptions { seed: 8, ..Default::default() }).unwrap();
        assert_ne!(a.jumps, c.jumps);
    }

    #[test]
    fn jump_times_are_strictly_increasing_and_increments_from_spec() {
        let spec = pure_death_spec();
        let path =
            simulate(&spec, 200, &[0, 200], SimOptions { seed: 3, ..Default::default() }).unwrap();
        let times: Vec<f64> = path.jump_times().collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        for inc in path.jump_increments() {
            assert_eq!(inc.terms(), &[(1, -1)]);
        }
        assert_eq!(path.events(), 200);
    }

    #[test]
    fn horizon_stops_without_an_extra_jump() {
        let spec = pure_death_spec();
        let path = simulate(
            &spec,
            500,
            &[0, 500],
            SimOptions { horizon: Horizon::Time(1e-4), seed: 11, event_cap: u64::MAX },
        )
        .unwrap();
        assert_eq!(path.termination, Termination::Horizon);
        assert_eq!(path.end_time, 1e-4);
        assert!(path.jump_times().all(|t| t <= 1e-4));
    }

    #[test]
    fn event_cap_is_flagged_not_fatal() {
        let spec = pure_death_spec();
        let path = simulate(
            &spec,
            100,
            &[0, 100],
            SimOptions { event_cap: 5, seed: 1, ..Default::default() },
        )
        .unwrap();
        assert_eq!(path.termination, Termination::EventCap);
        assert_eq!(path.events(), 5);
    }

    #[test]
    fn stream_seeds_differ_and_are_stable() {
        assert_eq!(stream_seed(1, 0), stream_seed(1, 0));
        assert_ne!(stream_seed(1, 0), stream_seed(1, 1));
        assert_ne!(stream_seed(1, 0), stream_seed(2, 0));
    }

    #[test]
    fn one_spec_serves_concurrent_simulations() {
        // Lazy materialization must be safe under concurrent use of a
        // single spec, and cannot change the law of seeded runs.
        use crate::awareness::AwarenessDistribution;
        use crate::mtra::{mtra_transitions, Clock};
        use std::sync::Arc;

        let dist = Arc::new(AwarenessDistribution::poisson(3.0).unwrap());
        let spec = Arc::new(mtra_transitions(dist, Clock::Original));
        let opts = |seed| SimOptions { seed, ..Default::default() };
        let serial: Vec<Vec<u64>> =
            (0..6).map(|s| simulate(&spec, 50, &[1, 49], opts(s)).unwrap().final_counts).collect();

        let fresh = {
            let dist = Arc::new(AwarenessDistribution::poisson(3.0).unwrap());
            Arc::new(mtra_transitions(dist, Clock::Original))
        };
        let concurrent: Vec<Vec<u64>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..6)
                .map(|s| {
                    let spec = Arc::clone(&fresh);
                    scope
                        .spawn(move || simulate(&spec, 50, &[1, 49], opts(s)).unwrap().final_counts)
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert_eq!(serial, concurrent);
    }
}
