//! The Maki–Thompson chain with random awareness, on both clocks, plus the
//! classical instances used for cross-validation.
//!
//! Coordinate layout: coordinate 0 is the spreader count `Y`, coordinate
//! `i ≥ 1` is the count `X_i` of i-listeners (heard `i−1` times, not yet
//! spreading). Stiflers are the derived residue `Z = n − Y − Σ X_i`.
//!
//! The five transition families, in density form:
//!
//! 1. `−e₁`       at `p₀ x₁`              (first hearing, never spreads)
//! 2. `−e₁ + e₂`  at `(1 − p₀ − p₁) x₁`   (first hearing, keeps listening)
//! 3. `−e_i + e₀` at `q_i x_i`, `i ≥ 1`   (becomes a spreader; `q₁ = p₁`)
//! 4. `−e_i + e_{i+1}` at `(1 − q_i) x_i`, `i ≥ 2`
//! 5. `−e₀`       at `1 − Σ_i x_i`        (spreader meets a non-listener)
//!
//! Rates out of `X₁` are split over families 1–3 (summing to `x₁`), so the
//! advance family starts at `i = 2`; with that split the total raw event
//! rate on the original clock is exactly `Y (n − 1)` at every state. The
//! accelerated clock (one unit of time per spreader-telling) uses these
//! rates as-is; the original clock multiplies every rate by the spreader
//! count and, at finite `n`, applies the `(n−1)/n` population factor to
//! family 5.

use std::sync::Arc;

use thiserror::Error;

use crate::awareness::AwarenessDistribution;
use crate::ddpm::{
    simulate, DdpmError, Horizon, Increment, JumpPath, RateCtx, RateFn, Scale, SimOptions,
    Termination, Transition, TransitionSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    /// Model time of the chain as defined; rates carry the spreader factor.
    Original,
    /// Accelerated time: each spreader contributes unit rate. This is the
    /// clock on which all limit formulas live.
    Accelerated,
}

/// The classical rumor chains bundled for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalModel {
    /// Daley–Kendall on (ignorants, spreaders, stiflers).
    Dk,
    /// Maki–Thompson, i.e. spreading after exactly one hearing.
    Mt,
    /// k-spreading Maki–Thompson: spreading after exactly k hearings.
    Kmt(u32),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MtraError {
    #[error("population must be at least 2, got {0}")]
    PopulationTooSmall(u64),
    #[error("initial counts total {total} exceeds the population {n}")]
    Overfull { total: u64, n: u64 },
    #[error("run hit the event cap after {events} events without absorbing")]
    NotAbsorbed { events: usize },
    #[error(transparent)]
    Ddpm(#[from] DdpmError),
}

/// A finite-population configuration: spreaders, listener counts per level,
/// and the derived stifler residue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RumorState {
    counts: Vec<u64>,
    n: u64,
}

impl RumorState {
    pub fn new(n: u64, spreaders: u64, listeners: &[(u32, u64)]) -> Result<Self, MtraError> {
        let mut counts = vec![spreaders];
        for &(i, c) in listeners {
            assert!(i >= 1, "listener levels start at 1");
            let i = i as usize;
            if i >= counts.len() {
                counts.resize(i + 1, 0);
            }
            counts[i] += c;
        }
        let total: u64 = counts.iter().sum();
        if total > n {
            return Err(MtraError::Overfull { total, n });
        }
        Ok(Self { counts, n })
    }

    /// Everyone ignorant except a single initial spreader: `Y(0) = 1`,
    /// `X₁(0) = n − 1`. This converges in proportions to the all-ignorant
    /// standard configuration while keeping the finite chain nondegenerate.
    pub fn standard(n: u64) -> Result<Self, MtraError> {
        if n < 2 {
            return Err(MtraError::PopulationTooSmall(n));
        }
        Self::new(n, 1, &[(1, n - 1)])
    }

    pub fn from_counts(n: u64, counts: Vec<u64>) -> Result<Self, MtraError> {
        let total: u64 = counts.iter().sum();
        if total > n {
            return Err(MtraError::Overfull { total, n });
        }
        Ok(Self { counts, n })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn spreaders(&self) -> u64 {
        self.counts.first().copied().unwrap_or(0)
    }

    pub fn listener(&self, i: u32) -> u64 {
        assert!(i >= 1);
        self.counts.get(i as usize).copied().unwrap_or(0)
    }

    pub fn listener_total(&self) -> u64 {
        self.counts.iter().skip(1).sum()
    }

    pub fn stiflers(&self) -> u64 {
        self.n - self.spreaders() - self.listener_total()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// Initial condition for [`run_outbreak`].
#[derive(Debug, Clone)]
pub enum InitialCondition {
    Standard,
    Explicit(RumorState),
}

fn wrap_clock(clock: Clock, base: impl Fn(&RateCtx<'_>) -> f64 + Send + Sync + 'static) -> RateFn {
    match clock {
        Clock::Accelerated => Box::new(base),
        Clock::Original => Box::new(move |ctx: &RateCtx<'_>| {
            let y = ctx.coord(0);
            let factor = match ctx.scale() {
                Scale::Finite(n) => n as f64 * y,
                Scale::Limit => y,
            };
            factor * base(ctx)
        }),
    }
}

fn clocked(
    clock: Clock,
    increment: Increment,
    bound: f64,
    base: impl Fn(&RateCtx<'_>) -> f64 + Send + Sync + 'static,
) -> Transition {
    Transition { increment, rate: wrap_clock(clock, base), rate_bound: bound }
}

/// Build the MT–RA transition set for the given awareness law and clock.
///
/// Families attached to dead listener levels (tail `T_i = 0`, unreachable by
/// construction) are not materialized, so for `dirac(k)` the produced set is
/// exactly the k-MT table. Rate bounds are quoted over the positive simplex
/// `{x ≥ 0, ‖x‖₁ ≤ 1}`, where every simulated and integrated state lives.
pub fn mtra_transitions(dist: Arc<AwarenessDistribution>, clock: Clock) -> TransitionSpec {
    let p0 = dist.p(0);
    let q1 = dist.hazard(1); // = p₁ by definition
    let t2 = dist.tail(2); // = 1 − p₀ − p₁

    let mut base = Vec::new();
    if p0 > 0.0 {
        base.push(clocked(clock, Increment::loss(1), p0, move |ctx| p0 * ctx.coord(1)));
    }
    if t2 > 0.0 {
        base.push(clocked(clock, Increment::transfer(1, 2), t2, move |ctx| t2 * ctx.coord(1)));
    }
    if q1 > 0.0 {
        base.push(clocked(clock, Increment::transfer(1, 0), q1, move |ctx| q1 * ctx.coord(1)));
    }
    base.push(clocked(clock, Increment::loss(0), 1.0, |ctx| {
        (ctx.scale().contact_correction() - ctx.sum_from_one()).max(0.0)
    }));

    let gen_dist = Arc::clone(&dist);
    TransitionSpec::new(base, 3.0).expect("retire family always present").with_indexed_family(
        2,
        move |i| {
            let mut out = Vec::new();
            if gen_dist.tail(i) <= 0.0 {
                // Dead level: no inflow can ever reach it.
                return out;
            }
            let qi = gen_dist.hazard(i);
            if qi > 0.0 {
                out.push(clocked(clock, Increment::transfer(i, 0), qi, move |ctx| {
                    qi * ctx.coord(i)
                }));
            }
            if gen_dist.tail(i + 1) > 0.0 {
                let adv = 1.0 - qi;
                out.push(clocked(clock, Increment::transfer(i, i + 1), adv, move |ctx| {
                    adv * ctx.coord(i)
                }));
            }
            out
        },
    )
}

/// The classical specs in density form. `Mt` and `Kmt(k)` are constructed
/// from their own transition tables (ignorants advance through k−1 listener
/// levels, then spread); structurally they coincide with
/// `mtra_transitions(dirac(k), Accelerated)`.
pub fn classical_transitions(model: ClassicalModel) -> TransitionSpec {
    match model {
        ClassicalModel::Dk => dk_spec(),
        ClassicalModel::Mt => kmt_spec(1),
        ClassicalModel::Kmt(k) => {
            assert!(k >= 1, "k-MT needs k >= 1");
            kmt_spec(k)
        }
    }
}

/// Daley–Kendall on coordinates (0: ignorants, 1: spreaders, 2: stiflers).
/// The pairwise spreader meeting scales to `y²/2` in density form.
fn dk_spec() -> TransitionSpec {
    let meet = Transition::new(Increment::transfer(0, 1), 1.0, |ctx: &RateCtx<'_>| {
        ctx.coord(0) * ctx.coord(1)
    });
    let pairwise = Transition::new(
        Increment::new(vec![(1, -2), (2, 2)]).expect("nonzero"),
        0.5,
        |ctx: &RateCtx<'_>| 0.5 * ctx.coord(1) * ctx.coord(1),
    );
    let stifle = Transition::new(Increment::transfer(1, 2), 1.0, |ctx: &RateCtx<'_>| {
        ctx.coord(1) * ctx.coord(2)
    });
    TransitionSpec::new(vec![meet, pairwise, stifle], 4.0).expect("nonempty")
}

fn kmt_spec(k: u32) -> TransitionSpec {
    let mut base = Vec::new();
    if k == 1 {
        base.push(Transition::new(Increment::transfer(1, 0), 1.0, |ctx: &RateCtx<'_>| {
            ctx.coord(1)
        }));
    } else {
        base.push(Transition::new(Increment::transfer(1, 2), 1.0, |ctx: &RateCtx<'_>| {
            ctx.coord(1)
        }));
        for i in 2..k {
            base.push(Transition::new(
                Increment::transfer(i, i + 1),
                1.0,
                move |ctx: &RateCtx<'_>| ctx.coord(i),
            ));
        }
        base.push(Transition::new(Increment::transfer(k, 0), 1.0, move |ctx: &RateCtx<'_>| {
            ctx.coord(k)
        }));
    }
    base.push(Transition::new(Increment::loss(0), 1.0, |ctx: &RateCtx<'_>| {
        (ctx.scale().contact_correction() - ctx.sum_from_one()).max(0.0)
    }));
    TransitionSpec::new(base, 3.0).expect("nonempty")
}

/// A completed original-clock outbreak with its absorption and peak record.
#[derive(Debug, Clone)]
pub struct OutbreakRun {
    pub path: JumpPath,
    /// Original-clock absorption time `τ_n` (last jump time).
    pub absorption_time: f64,
    /// Accelerated clock `ζ(t) = ∫₀ᵗ Y(s) ds` at each jump, aligned with the
    /// path's jump times.
    pub zeta_at_jumps: Vec<f64>,
    /// Largest spreader count seen along the run.
    pub peak_spreaders: u64,
    /// Last time the spreader count departs its maximum (the supremum of
    /// the maximizing set).
    pub peak_time: f64,
    pub final_state: RumorState,
}

impl OutbreakRun {
    pub fn n(&self) -> u64 {
        self.path.n
    }

    /// Final accelerated time (the accelerated absorption point of this run).
    pub fn zeta_end(&self) -> f64 {
        self.zeta_at_jumps.last().copied().unwrap_or(0.0)
    }

    /// The same jump sequence reindexed by the accelerated clock, the object
    /// compared against limit trajectories.
    pub fn accelerated_path(&self) -> JumpPath {
        self.path.retimed(self.zeta_at_jumps.clone())
    }
}

/// Simulate the original-clock chain to absorption and record the outbreak
/// statistics.
pub fn run_outbreak(
    dist: Arc<AwarenessDistribution>,
    n: u64,
    initial: InitialCondition,
    seed: u64,
) -> Result<OutbreakRun, MtraError> {
    if n < 2 {
        return Err(MtraError::PopulationTooSmall(n));
    }
    let state = match initial {
        InitialCondition::Standard => RumorState::standard(n)?,
        InitialCondition::Explicit(s) => {
            if s.n() != n {
                return Err(MtraError::Overfull { total: s.counts().iter().sum(), n });
            }
            s
        }
    };
    let spec = mtra_transitions(dist, Clock::Original);
    let options =
        SimOptions { horizon: Horizon::UntilAbsorbed, seed, event_cap: 200 * n + 1_000_000 };
    let path = simulate(&spec, n, state.counts(), options)?;
    if path.termination != Termination::Absorbed {
        return Err(MtraError::NotAbsorbed { events: path.events() });
    }

    let zeta_at_jumps = accelerate_path(&path);
    let (peak_spreaders, peak_time) = peak_record(&path);
    let final_state = RumorState::from_counts(n, path.final_counts.clone())?;
    Ok(OutbreakRun {
        absorption_time: path.end_time,
        zeta_at_jumps,
        peak_spreaders,
        peak_time,
        final_state,
        path,
    })
}

/// The accelerated clock `ζ(t) = ∫₀ᵗ Yⁿ(s) ds` at every jump time. `Y` is
/// constant between jumps, so each segment contributes exactly `Y · Δt` —
/// no quadrature error. On this clock the chain's total event rate is
/// `n − 1`, so the whole outbreak spans an order-one stretch of `ζ` and the
/// scaled states line up against the limit curves.
pub fn accelerate_path(path: &JumpPath) -> Vec<f64> {
    let times: Vec<f64> = path.jump_times().collect();
    let mut zetas = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    let mut prev_t = 0.0;
    let mut prev_y = path.initial.first().copied().unwrap_or(0) as f64;
    let mut state_index = 0usize;
    path.for_each_state(|_, counts| {
        if state_index > 0 {
            let t = times[state_index - 1];
            acc += prev_y * (t - prev_t);
            zetas.push(acc);
            prev_t = t;
        }
        prev_y = counts.first().copied().unwrap_or(0) as f64;
        state_index += 1;
    });
    zetas
}

fn peak_record(path: &JumpPath) -> (u64, f64) {
    let mut ys = Vec::with_capacity(path.events() + 1);
    path.for_each_state(|_, counts| ys.push(counts.first().copied().unwrap_or(0)));
    let max = ys.iter().copied().max().unwrap_or(0);
    let last_at_max = ys.iter().rposition(|&y| y == max).unwrap_or(0);
    let times: Vec<f64> = path.jump_times().collect();
    // State index j occupies [t_j, t_{j+1}); the supremum of the maximizing
    // set is the time of the jump that finally leaves the level.
    if last_at_max < ys.len() - 1 {
        (max, times[last_at_max])
    } else {
        (max, times.last().copied().unwrap_or(0.0))
    }
}
