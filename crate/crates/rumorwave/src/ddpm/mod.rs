//! Density-dependent jump systems with countably many coordinates.
//!
//! A [`TransitionSpec`] is a set of integer increment vectors `m` paired with
//! nonnegative rate functions `β_m` of the ℓ¹ density state. The same spec
//! drives three things: the drift field `F(x) = Σ_m m β_m(x)` (the expected
//! instantaneous density change), exact stochastic simulation of the finite-n
//! chain whose raw jump rates are `n · β_m(X/n)`, and deterministic
//! integration of the limit equation `X(t) = X(0) + ∫ F(X(s)) ds`. The ℓ¹
//! norm is used throughout.
//!
//! Coordinate indices are a prefix of `0, 1, 2, …`; states are dense vectors
//! with implicit trailing zeros, which is the practical form of "finitely
//! many nonzero coordinates". Transition families indexed by coordinate are
//! materialized lazily as higher coordinates become occupied.

mod integrate;
mod simulate;

pub use integrate::{
    integrate_limit, integrate_limit_with, sup_distance, IntegrateOptions, IntegrationEnd,
    LimitTrajectory, DEFAULT_STEP, TRUNCATION_EPSILON,
};
pub use simulate::{simulate, stream_seed, Horizon, JumpPath, SimOptions, Termination};

use std::sync::{RwLock, RwLockReadGuard};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Radius of the open ℓ¹ ball that serves as the analytic domain `E` when no
/// other radius is configured.
pub const DEFAULT_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DdpmError {
    #[error("increment must have at least one nonzero entry")]
    EmptyIncrement,
    #[error("a transition spec needs at least one transition")]
    EmptySpec,
    #[error("state outside the admissible ball: l1 norm {norm} >= radius {radius}")]
    OutsideDomain { norm: f64, radius: f64 },
    #[error("initial counts inconsistent with population size {n}: l1 density {density}")]
    BadInitialCounts { n: u64, density: f64 },
    #[error("population size must be at least 1")]
    ZeroPopulation,
    #[error("spec validation failed: {0}")]
    InvalidSpec(String),
    #[error("integration step must be positive and finite, got {0}")]
    BadStep(f64),
}

/// Population scale at which a rate function is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Finite population of size `n`; the state holds densities `X/n`.
    Finite(u64),
    /// Infinite-population limit.
    Limit,
}

impl Scale {
    /// The contact-population factor `(n−1)/n` at finite `n`, `1` in the
    /// limit.
    pub fn contact_correction(self) -> f64 {
        match self {
            Scale::Finite(n) => (n as f64 - 1.0) / n as f64,
            Scale::Limit => 1.0,
        }
    }
}

/// The state view a rate function sees: density coordinates, the precomputed
/// sum of coordinates `1..`, and the evaluation scale.
pub struct RateCtx<'a> {
    coords: &'a [f64],
    sum_tail: f64,
    scale: Scale,
}

impl<'a> RateCtx<'a> {
    pub fn new(coords: &'a [f64], scale: Scale) -> Self {
        let sum_tail = coords.iter().skip(1).sum();
        Self { coords, sum_tail, scale }
    }

    pub(crate) fn with_sum(coords: &'a [f64], sum_tail: f64, scale: Scale) -> Self {
        Self { coords, sum_tail, scale }
    }

    /// Coordinate `i`, zero beyond the stored prefix.
    pub fn coord(&self, i: u32) -> f64 {
        self.coords.get(i as usize).copied().unwrap_or(0.0)
    }

    /// `Σ_{i≥1}` of the coordinates.
    pub fn sum_from_one(&self) -> f64 {
        self.sum_tail
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }
}

pub type RateFn = Box<dyn Fn(&RateCtx<'_>) -> f64 + Send + Sync>;

/// A sparse integer increment vector with at least one nonzero entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Increment {
    /// `(coordinate, delta)` pairs, sorted by coordinate, deltas nonzero.
    terms: Vec<(u32, i32)>,
}

impl Increment {
    pub fn new(mut terms: Vec<(u32, i32)>) -> Result<Self, DdpmError> {
        terms.retain(|&(_, d)| d != 0);
        terms.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(u32, i32)> = Vec::with_capacity(terms.len());
        for (i, d) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += d,
                _ => merged.push((i, d)),
            }
        }
        merged.retain(|&(_, d)| d != 0);
        if merged.is_empty() {
            return Err(DdpmError::EmptyIncrement);
        }
        Ok(Self { terms: merged })
    }

    /// `−e_from + e_to`.
    pub fn transfer(from: u32, to: u32) -> Self {
        Self::new(vec![(from, -1), (to, 1)]).expect("nonempty by construction")
    }

    /// `−e_coord`.
    pub fn loss(coord: u32) -> Self {
        Self { terms: vec![(coord, -1)] }
    }

    pub fn terms(&self) -> &[(u32, i32)] {
        &self.terms
    }

    pub fn l1(&self) -> u32 {
        self.terms.iter().map(|&(_, d)| d.unsigned_abs()).sum()
    }

    pub fn max_coord(&self) -> u32 {
        self.terms.last().map(|&(i, _)| i).unwrap_or(0)
    }
}

/// One transition family member: an increment, its rate function, and a
/// bound `β̃_m` on the rate over the admissible states.
pub struct Transition {
    pub increment: Increment,
    pub rate: RateFn,
    pub rate_bound: f64,
}

impl Transition {
    pub fn new(
        increment: Increment,
        rate_bound: f64,
        rate: impl Fn(&RateCtx<'_>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { increment, rate: Box::new(rate), rate_bound }
    }
}

type IndexedGen = Box<dyn Fn(u32) -> Vec<Transition> + Send + Sync>;

struct Materialized {
    transitions: Vec<Transition>,
    indexed_upto: u32,
    max_increment_l1: u32,
}

/// Read guard over a spec's materialized transition list.
pub struct TransitionSet<'a>(RwLockReadGuard<'a, Materialized>);

impl std::ops::Deref for TransitionSet<'_> {
    type Target = [Transition];

    fn deref(&self) -> &[Transition] {
        &self.0.transitions
    }
}

/// A countable transition set. Base transitions are always present; an
/// optional per-coordinate generator adds the families attached to
/// coordinates `start, start+1, …` on demand.
pub struct TransitionSpec {
    inner: RwLock<Materialized>,
    indexed: Option<(u32, IndexedGen)>,
    drift_bound: f64,
    radius: f64,
}

impl TransitionSpec {
    /// Build a spec from its always-present transitions. `drift_bound` is the
    /// constant `M` with `Σ_m ‖m‖₁ β_m(x) ≤ M` pointwise on the admissible
    /// states.
    pub fn new(base: Vec<Transition>, drift_bound: f64) -> Result<Self, DdpmError> {
        if base.is_empty() {
            return Err(DdpmError::EmptySpec);
        }
        let max_l1 = base.iter().map(|t| t.increment.l1()).max().unwrap_or(0);
        Ok(Self {
            inner: RwLock::new(Materialized {
                transitions: base,
                indexed_upto: 0,
                max_increment_l1: max_l1,
            }),
            indexed: None,
            drift_bound,
            radius: DEFAULT_RADIUS,
        })
    }

    /// Attach a per-coordinate family generator, active from coordinate
    /// `start` upward. The generator must be deterministic.
    pub fn with_indexed_family(
        mut self,
        start: u32,
        gen: impl Fn(u32) -> Vec<Transition> + Send + Sync + 'static,
    ) -> Self {
        self.indexed = Some((start, Box::new(gen)));
        self.inner.write().unwrap().indexed_upto = start.saturating_sub(1);
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn drift_bound(&self) -> f64 {
        self.drift_bound
    }

    pub fn max_increment_l1(&self) -> u32 {
        self.inner.read().unwrap().max_increment_l1
    }

    /// Read access to the transitions materialized through coordinate
    /// `upto`, extending the indexed family first if necessary.
    pub fn transitions(&self, upto: u32) -> TransitionSet<'_> {
        self.ensure_materialized(upto);
        TransitionSet(self.inner.read().unwrap())
    }

    fn ensure_materialized(&self, upto: u32) {
        let Some((start, gen)) = &self.indexed else {
            return;
        };
        {
            let inner = self.inner.read().unwrap();
            if inner.indexed_upto >= upto {
                return;
            }
        }
        let mut inner = self.inner.write().unwrap();
        while inner.indexed_upto < upto {
            let next = inner.indexed_upto.max(start.saturating_sub(1)) + 1;
            for t in gen(next) {
                inner.max_increment_l1 = inner.max_increment_l1.max(t.increment.l1());
                inner.transitions.push(t);
            }
            inner.indexed_upto = next;
        }
    }

    /// Numeric sanity check for user-supplied specs: on random states in the
    /// positive part of the domain (`x ≥ 0`, `‖x‖₁ ≤ 1`), every rate must be
    /// nonnegative and within its bound, and `Σ ‖m‖₁ β_m(x)` must stay below
    /// the drift bound.
    pub fn validate_by_sampling(&self, dim: u32, samples: u32, seed: u64) -> Result<(), DdpmError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = self.transitions(dim);
        for _ in 0..samples {
            let mut x: Vec<f64> = (0..=dim).map(|_| rng.random::<f64>()).collect();
            let total: f64 = x.iter().sum();
            let target: f64 = rng.random::<f64>();
            for v in &mut x {
                *v *= target / total;
            }
            let ctx = RateCtx::new(&x, Scale::Limit);
            let mut weighted = 0.0;
            for tr in set.iter() {
                let beta = (tr.rate)(&ctx);
                if beta < 0.0 {
                    return Err(DdpmError::InvalidSpec(format!(
                        "negative rate {beta} for increment {:?}",
                        tr.increment.terms()
                    )));
                }
                if beta > tr.rate_bound + 1e-12 {
                    return Err(DdpmError::InvalidSpec(format!(
                        "rate {beta} exceeds its bound {} for increment {:?}",
                        tr.rate_bound,
                        tr.increment.terms()
                    )));
                }
                weighted += f64::from(tr.increment.l1()) * beta;
            }
            if weighted > self.drift_bound + 1e-9 {
                return Err(DdpmError::InvalidSpec(format!(
                    "weighted rate sum {weighted} exceeds drift bound {}",
                    self.drift_bound
                )));
            }
        }
        Ok(())
    }
}

/// Dense-prefix real state over coordinates `0, 1, 2, …` with implicit
/// trailing zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateVec {
    coords: Vec<f64>,
}

impl StateVec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_coords(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn from_pairs(pairs: &[(u32, f64)]) -> Self {
        let mut s = Self::default();
        for &(i, v) in pairs {
            s.set(i, v);
        }
        s
    }

    pub fn coord(&self, i: u32) -> f64 {
        self.coords.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, i: u32, v: f64) {
        let i = i as usize;
        if i >= self.coords.len() {
            self.coords.resize(i + 1, 0.0);
        }
        self.coords[i] = v;
    }

    pub fn add(&mut self, i: u32, v: f64) {
        self.set(i, self.coord(i) + v);
    }

    /// Number of stored coordinates (highest index plus one).
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn l1_norm(&self) -> f64 {
        self.coords.iter().map(|v| v.abs()).sum()
    }

    pub fn sum_from(&self, start: u32) -> f64 {
        self.coords.iter().skip(start as usize).sum()
    }

    /// ℓ¹ distance, treating missing coordinates as zero.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        let n = self.coords.len().max(other.coords.len());
        (0..n)
            .map(|i| {
                let a = self.coords.get(i).copied().unwrap_or(0.0);
                let b = other.coords.get(i).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .sum()
    }
}

/// The drift field `F(x) = Σ_m m β_m(x)`, evaluated over the transitions
/// materialized through the highest stored coordinate plus one.
pub fn drift(spec: &TransitionSpec, x: &StateVec) -> Result<StateVec, DdpmError> {
    let norm = x.l1_norm();
    if norm >= spec.radius() {
        return Err(DdpmError::OutsideDomain { norm, radius: spec.radius() });
    }
    let top = x.len() as u32;
    let set = spec.transitions(top + 1);
    let ctx = RateCtx::with_sum(x.as_slice(), x.sum_from(1), Scale::Limit);
    let mut f = StateVec::zero();
    for tr in set.iter() {
        let beta = (tr.rate)(&ctx);
        if beta == 0.0 {
            continue;
        }
        for &(i, d) in tr.increment.terms() {
            f.add(i, f64::from(d) * beta);
        }
    }
    Ok(f)
}

/// The pure-death system on coordinate 1 (`m = −e₁` at rate `x₁`): the
/// standard cross-validation instance with known solution `x₁(t) = x₁(0) e^{-t}`.
pub fn pure_death_spec() -> TransitionSpec {
    let t = Transition::new(Increment::loss(1), DEFAULT_RADIUS, |ctx: &RateCtx<'_>| ctx.coord(1));
    TransitionSpec::new(vec![t], 2.0 * DEFAULT_RADIUS).expect("nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments_normalize_and_reject_empty() {
        let inc = Increment::new(vec![(2, 1), (0, -1), (2, 1)]).unwrap();
        assert_eq!(inc.terms(), &[(0, -1), (2, 2)]);
        assert_eq!(inc.l1(), 3);
        assert_eq!(inc.max_coord(), 2);
        assert!(Increment::new(vec![(1, 1), (1, -1)]).is_err());
        assert!(Increment::new(vec![]).is_err());
    }

    #[test]
    fn drift_of_pure_death_is_linear() {
        let spec = pure_death_spec();
        let x = StateVec::from_pairs(&[(1, 0.5)]);
        let f = drift(&spec, &x).unwrap();
        assert_eq!(f.coord(0), 0.0);
        assert!((f.coord(1) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn drift_rejects_states_outside_the_ball() {
        let spec = pure_death_spec();
        let x = StateVec::from_pairs(&[(0, 1.5), (1, 0.9)]);
        assert!(matches!(drift(&spec, &x), Err(DdpmError::OutsideDomain { .. })));
    }

    #[test]
    fn zero_rates_give_zero_drift() {
        let spec = pure_death_spec();
        let x = StateVec::from_pairs(&[(0, 0.3)]); // coordinate 1 empty
        let f = drift(&spec, &x).unwrap();
        assert_eq!(f, StateVec::zero());
    }

    #[test]
    fn indexed_families_materialize_on_demand() {
        let spec = pure_death_spec().with_indexed_family(2, |i| {
            vec![Transition::new(Increment::transfer(i, i + 1), 2.0, move |ctx| ctx.coord(i))]
        });
        assert_eq!(spec.transitions(1).len(), 1);
        assert_eq!(spec.transitions(4).len(), 4); // base + families for 2, 3, 4
                                                  // Never shrinks, stays consistent on repeat calls.
        assert_eq!(spec.transitions(3).len(), 4);
    }

    #[test]
    fn sampling_validation_flags_a_broken_bound() {
        let good = pure_death_spec();
        assert!(good.validate_by_sampling(4, 200, 7).is_ok());

        let bad = TransitionSpec::new(
            vec![Transition::new(Increment::loss(1), 0.01, |ctx: &RateCtx<'_>| ctx.coord(1))],
            8.0,
        )
        .unwrap();
        assert!(bad.validate_by_sampling(4, 200, 7).is_err());
    }

    #[test]
    fn state_vec_distance_handles_length_mismatch() {
        let a = StateVec::from_pairs(&[(0, 1.0), (3, 0.25)]);
        let b = StateVec::from_pairs(&[(0, 0.5)]);
        assert!((a.l1_distance(&b) - 0.75).abs() < 1e-15);
        assert!((a.l1_norm() - 1.25).abs() < 1e-15);
        assert!((a.sum_from(1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn shared_types_are_send_and_sync() {
        // Specs, paths, and trajectories cross thread boundaries in sweeps.
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<TransitionSpec>();
        assert_send_sync::<super::JumpPath>();
        assert_send_sync::<super::LimitTrajectory>();
        assert_send_sync::<crate::awareness::AwarenessDistribution>();
    }
}
