//! Awareness laws: the distribution `(p_i)` of how many hearings an
//! individual needs before spreading, with exact tail sums and hazards.
//!
//! `p_0` is the anti-gossip probability (hears once, never spreads) and for
//! `i ≥ 1`, `p_i` is the probability of spreading right after the i-th
//! hearing. The derived quantities are the tails `T_i = Σ_{k≥i} p_k` and the
//! hazards `q_1 = p_1`, `q_i = p_i / T_i` for `i ≥ 2`. Tails are always
//! computed analytically, never by truncating and renormalizing the mass
//! function: a heavy tail such as zeta with `s` near 1 loses macroscopic mass
//! under any feasible truncation.

use std::sync::{OnceLock, RwLock};

use thiserror::Error;

use crate::gammafn::{pw, reg_lower_gamma};

/// Custom probability vectors off by at most this much are renormalized
/// (with [`AwarenessDistribution::was_renormalized`] set); anything worse is
/// rejected.
pub const CUSTOM_TOTAL_SLACK: f64 = 1e-9;

/// The built-in awareness families plus explicit finite vectors. This enum is
/// also the distribution grammar used by CLI configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    /// `p_i = e^{-λ} λ^i / i!` on `i ≥ 0`.
    Poisson { lambda: f64 },
    /// `p_i = i^{-s} / ζ(s)` on `i ≥ 1` (so `p_0 = 0`).
    Zeta { s: f64 },
    /// `p_i = 1/(k+1)` on `0 ≤ i ≤ k`.
    Uniform { k: u32 },
    /// Point mass at `k ≥ 1`.
    Dirac { k: u32 },
    /// Explicit `(p_0, …, p_L)`.
    Custom { p: Vec<f64> },
}

/// Either the last index with positive mass, or an infinite-support marker.
/// Infinite families still expose exact analytic tails, which serve as their
/// own decay certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Finite(u32),
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("poisson mean must be positive and finite, got {0}")]
    InvalidMean(f64),
    #[error("zeta exponent must be finite and exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("support parameter must be at least 1")]
    InvalidSupport,
    #[error("probability entries must be finite and nonnegative")]
    NegativeEntry,
    #[error("probabilities sum to {0}, more than 1e-9 away from 1")]
    BadTotal(f64),
    #[error("custom distributions need at least one positive entry at index ≥ 1")]
    NoSpreadingMass,
}

enum Family {
    Poisson { lambda: f64 },
    Zeta { s: f64, zeta_s: f64, em_cutoff: u32, suffix: OnceLock<Vec<f64>> },
    Uniform { k: u32 },
    Dirac { k: u32 },
    Custom { p: Vec<f64>, tails: Vec<f64> },
}

/// Raw zeta suffix sums `Σ_{k≥i} k^{-s}` are precomputed for `i` up to here
/// in a single backward pass; deeper indices fall back to the per-index
/// boundary correction (they sit past the correction cutoff for every
/// exponent that could reach them).
const ZETA_SUFFIX_LEN: usize = 8192;

#[derive(Default)]
struct Tables {
    /// `p[i]`, from index 0.
    p: Vec<f64>,
    /// `tail[i] = T_i` for `i ≥ 1`; entry 0 holds `T_0 = 1` for alignment.
    tail: Vec<f64>,
    /// `hazard[i] = q_i` for `i ≥ 1`; entry 0 unused.
    hazard: Vec<f64>,
}

/// A validated awareness law with cached mass, tail, and hazard values.
///
/// Immutable after construction; the internal cache is populate-once and safe
/// under concurrent readers.
pub struct AwarenessDistribution {
    family: Family,
    support: Support,
    renormalized: bool,
    tables: RwLock<Tables>,
}

impl std::fmt::Debug for AwarenessDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.family {
            Family::Poisson { lambda } => write!(f, "poisson({lambda})"),
            Family::Zeta { s, .. } => write!(f, "zeta({s})"),
            Family::Uniform { k } => write!(f, "uniform({k})"),
            Family::Dirac { k } => write!(f, "dirac({k})"),
            Family::Custom { p, .. } => write!(f, "custom({p:?})"),
        }
    }
}

/// Build a distribution from its grammar form. Equivalent to
/// [`AwarenessDistribution::new`].
pub fn make_distribution(
    kind: DistributionKind,
) -> Result<AwarenessDistribution, DistributionError> {
    AwarenessDistribution::new(kind)
}

impl AwarenessDistribution {
    pub fn new(kind: DistributionKind) -> Result<Self, DistributionError> {
        match kind {
            DistributionKind::Poisson { lambda } => Self::poisson(lambda),
            DistributionKind::Zeta { s } => Self::zeta(s),
            DistributionKind::Uniform { k } => Self::uniform(k),
            DistributionKind::Dirac { k } => Self::dirac(k),
            DistributionKind::Custom { p } => Self::custom(p),
        }
    }

    pub fn poisson(lambda: f64) -> Result<Self, DistributionError> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(DistributionError::InvalidMean(lambda));
        }
        Ok(Self::from_family(Family::Poisson { lambda }, Support::Infinite, false))
    }

    pub fn zeta(s: f64) -> Result<Self, DistributionError> {
        if !s.is_finite() || s <= 1.0 {
            return Err(DistributionError::InvalidExponent(s));
        }
        let em_cutoff = euler_maclaurin_cutoff(s);
        let zeta_s = zeta_tail_raw(s, 1, em_cutoff);
        Ok(Self::from_family(
            Family::Zeta { s, zeta_s, em_cutoff, suffix: OnceLock::new() },
            Support::Infinite,
            false,
        ))
    }

    pub fn uniform(k: u32) -> Result<Self, DistributionError> {
        if k < 1 {
            return Err(DistributionError::InvalidSupport);
        }
        Ok(Self::from_family(Family::Uniform { k }, Support::Finite(k), false))
    }

    pub fn dirac(k: u32) -> Result<Self, DistributionError> {
        if k < 1 {
            return Err(DistributionError::InvalidSupport);
        }
        Ok(Self::from_family(Family::Dirac { k }, Support::Finite(k), false))
    }

    pub fn custom(p: Vec<f64>) -> Result<Self, DistributionError> {
        if p.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(DistributionError::NegativeEntry);
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > CUSTOM_TOTAL_SLACK {
            return Err(DistributionError::BadTotal(total));
        }
        let renormalized = total != 1.0;
        let p: Vec<f64> = p.iter().map(|v| v / total).collect();
        let last_positive = match p.iter().rposition(|&v| v > 0.0) {
            Some(i) if i >= 1 => i as u32,
            _ => return Err(DistributionError::NoSpreadingMass),
        };
        let mut p = p;
        p.truncate(last_positive as usize + 1);
        // Exact suffix sums keep T_i − T_{i+1} = p_i by construction.
        let mut tails = vec![0.0; p.len() + 1];
        for i in (0..p.len()).rev() {
            tails[i] = tails[i + 1] + p[i];
        }
        Ok(Self::from_family(
            Family::Custom { p, tails },
            Support::Finite(last_positive),
            renormalized,
        ))
    }

    fn from_family(family: Family, support: Support, renormalized: bool) -> Self {
        Self { family, support, renormalized, tables: RwLock::new(Tables::default()) }
    }

    pub fn support(&self) -> Support {
        self.support
    }

    /// True when a custom vector was off by at most [`CUSTOM_TOTAL_SLACK`]
    /// and was silently scaled back to total mass 1.
    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    /// Mass `p_i`.
    pub fn p(&self, i: u32) -> f64 {
        self.ensure(i);
        self.tables.read().unwrap().p[i as usize]
    }

    /// Tail `T_i = Σ_{k≥i} p_k`, for `i ≥ 1` (index 0 returns 1).
    pub fn tail(&self, i: u32) -> f64 {
        self.ensure(i);
        self.tables.read().unwrap().tail[i as usize]
    }

    /// Hazard `q_i`: `q_1 = p_1`, and `q_i = p_i / T_i` for `i ≥ 2`, defined
    /// as 0 on exhausted tails (`T_i = 0`), where every use multiplies it by
    /// a population that is itself 0.
    pub fn hazard(&self, i: u32) -> f64 {
        assert!(i >= 1, "hazards are defined for i >= 1");
        self.ensure(i);
        self.tables.read().unwrap().hazard[i as usize]
    }

    /// Fill `p`, `tail`, `hazard` for indices `0..=upto` into the given
    /// buffers, replacing their contents. One lock round-trip for callers
    /// that evaluate whole series.
    pub fn profile_into(
        &self,
        upto: u32,
        p: &mut Vec<f64>,
        tail: &mut Vec<f64>,
        hazard: &mut Vec<f64>,
    ) {
        self.ensure(upto);
        let tables = self.tables.read().unwrap();
        let len = upto as usize + 1;
        p.clear();
        p.extend_from_slice(&tables.p[..len]);
        tail.clear();
        tail.extend_from_slice(&tables.tail[..len]);
        hazard.clear();
        hazard.extend_from_slice(&tables.hazard[..len]);
    }

    /// An upper bound for `sup_{j ≥ m} p_j`, used to terminate scans over
    /// infinite supports.
    pub(crate) fn mass_sup_from(&self, m: u32) -> f64 {
        match &self.family {
            Family::Poisson { lambda } => {
                if f64::from(m) >= *lambda {
                    // Past the mode the mass function is nonincreasing.
                    self.p(m)
                } else {
                    pw(lambda.floor() as u32, *lambda)
                }
            }
            // Strictly decreasing mass function.
            Family::Zeta { .. } => self.p(m.max(1)),
            _ => match self.support {
                Support::Finite(last) if m <= last => {
                    (m..=last).map(|j| self.p(j)).fold(0.0, f64::max)
                }
                _ => 0.0,
            },
        }
    }

    fn ensure(&self, upto: u32) {
        {
            let tables = self.tables.read().unwrap();
            if tables.p.len() > upto as usize {
                return;
            }
        }
        let mut tables = self.tables.write().unwrap();
        // Grow in doubling blocks to amortize the zeta suffix pass.
        let target = ((upto as usize + 1).next_power_of_two()).max(64);
        if tables.p.len() >= target {
            return;
        }
        let from = tables.p.len();
        for i in from..target {
            let i32u = i as u32;
            let (pi, ti) = self.mass_and_tail(i32u);
            tables.p.push(pi);
            tables.tail.push(if i == 0 { 1.0 } else { ti });
            let q = if i == 0 {
                0.0
            } else if i == 1 {
                pi
            } else if ti > 0.0 {
                (pi / ti).clamp(0.0, 1.0)
            } else {
                0.0
            };
            tables.hazard.push(q);
        }
    }

    fn mass_and_tail(&self, i: u32) -> (f64, f64) {
        match &self.family {
            Family::Poisson { lambda } => {
                // T_i = P[N_λ ≥ i] is the regularized lower gamma P(i, λ).
                let t = if i == 0 { 1.0 } else { reg_lower_gamma(i, *lambda) };
                (pw(i, *lambda), t)
            }
            Family::Zeta { s, zeta_s, em_cutoff, suffix } => {
                if i == 0 {
                    (0.0, 1.0)
                } else {
                    let p = (-s * f64::from(i).ln()).exp() / zeta_s;
                    let raw = if (i as usize) < ZETA_SUFFIX_LEN {
                        let table = suffix.get_or_init(|| {
                            // One backward pass covers every index the curve
                            // evaluations can reach.
                            let boundary = (*em_cutoff).max(ZETA_SUFFIX_LEN as u32);
                            let mut acc = zeta_correction(*s, boundary);
                            let mut table = vec![0.0; ZETA_SUFFIX_LEN];
                            let mut k = boundary;
                            while k > 0 {
                                k -= 1;
                                if k == 0 {
                                    break;
                                }
                                acc += (-s * f64::from(k).ln()).exp();
                                if (k as usize) < ZETA_SUFFIX_LEN {
                                    table[k as usize] = acc;
                                }
                            }
                            table
                        });
                        table[i as usize]
                    } else {
                        zeta_tail_raw(*s, i, *em_cutoff)
                    };
                    (p, (raw / zeta_s).min(1.0))
                }
            }
            Family::Uniform { k } => {
                let k = *k;
                let p = if i <= k { 1.0 / f64::from(k + 1) } else { 0.0 };
                let t = if i <= k { f64::from(k + 1 - i) / f64::from(k + 1) } else { 0.0 };
                (p, t)
            }
            Family::Dirac { k } => {
                let p = if i == *k { 1.0 } else { 0.0 };
                let t = if i <= *k { 1.0 } else { 0.0 };
                (p, t)
            }
            Family::Custom { p, tails } => {
                let pi = p.get(i as usize).copied().unwrap_or(0.0);
                let ti = tails.get(i as usize).copied().unwrap_or(0.0);
                (pi, ti)
            }
        }
    }
}

/// Smallest `N` for which the first omitted Euler–Maclaurin term
/// `s N^{-s-1}/12` of the zeta tail correction is below 1e-14.
fn euler_maclaurin_cutoff(s: f64) -> u32 {
    let n = (s / (12.0 * 1e-14)).powf(1.0 / (s + 1.0)).ceil();
    (n as u32).clamp(8, 50_000_000)
}

/// Boundary correction `N^{1-s}/(s-1) + N^{-s}/2` for `Σ_{k≥N} k^{-s}`.
fn zeta_correction(s: f64, boundary: u32) -> f64 {
    let nf = f64::from(boundary);
    nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s)
}

/// `Σ_{k≥i} k^{-s}`: direct summation up to the cutoff plus the integral
/// correction at the boundary.
fn zeta_tail_raw(s: f64, i: u32, em_cutoff: u32) -> f64 {
    let boundary = em_cutoff.max(i);
    // Backward accumulation keeps the sum of positives stable.
    let mut acc = zeta_correction(s, boundary);
    let mut k = boundary;
    while k > i {
        k -= 1;
        acc += (-s * f64::from(k).ln()).exp();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn builtins() -> Vec<AwarenessDistribution> {
        vec![
            AwarenessDistribution::poisson(2.0).unwrap(),
            AwarenessDistribution::poisson(16.0).unwrap(),
            AwarenessDistribution::zeta(1.01).unwrap(),
            AwarenessDistribution::zeta(5.0).unwrap(),
            AwarenessDistribution::uniform(2).unwrap(),
            AwarenessDistribution::uniform(3).unwrap(),
            AwarenessDistribution::dirac(1).unwrap(),
            AwarenessDistribution::dirac(4).unwrap(),
            AwarenessDistribution::custom(vec![0.053, 0.004, 0.023, 0.163, 0.757]).unwrap(),
        ]
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(AwarenessDistribution::poisson(0.0).is_err());
        assert!(AwarenessDistribution::poisson(-2.0).is_err());
        assert!(AwarenessDistribution::zeta(1.0).is_err());
        assert!(AwarenessDistribution::uniform(0).is_err());
        assert!(AwarenessDistribution::dirac(0).is_err());
        assert!(AwarenessDistribution::custom(vec![0.5, -0.5, 1.0]).is_err());
        assert!(matches!(
            AwarenessDistribution::custom(vec![0.5, 0.6]),
            Err(DistributionError::BadTotal(_))
        ));
    }

    #[test]
    fn custom_renormalizes_tiny_total_error_only() {
        let d = AwarenessDistribution::custom(vec![0.25, 0.75 + 4e-10]).unwrap();
        assert!(d.was_renormalized());
        let total = d.p(0) + d.p(1);
        assert!((total - 1.0).abs() < 1e-15);
        let exact = AwarenessDistribution::custom(vec![0.25, 0.75]).unwrap();
        assert!(!exact.was_renormalized());
    }

    #[test]
    fn dirac_hazards_are_a_point_mass() {
        let d = AwarenessDistribution::dirac(2).unwrap();
        assert_eq!(d.hazard(1), 0.0);
        assert_eq!(d.hazard(2), 1.0);
        assert_eq!(d.hazard(3), 0.0); // dead branch
        assert_eq!(AwarenessDistribution::dirac(3).unwrap().hazard(1), 0.0);
    }

    #[test]
    fn uniform_matches_closed_form_hazards() {
        let d = AwarenessDistribution::uniform(2).unwrap();
        for i in 0..=2 {
            assert!((d.p(i) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((d.hazard(1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.hazard(2), 1.0); // = 1/(k+1−i) at i = k = 2
        let d3 = AwarenessDistribution::uniform(3).unwrap();
        // (1/4)/(1/4 + 1/4), the 1/(k+1−i) rate at i = 2, k = 3.
        assert!((d3.hazard(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn poisson_mass_and_first_hazard() {
        let d = AwarenessDistribution::poisson(2.0).unwrap();
        assert!((d.p(0) - (-2.0f64).exp()).abs() < 1e-16);
        assert!((d.p(0) - 0.135_335_3).abs() < 1e-7);
        // q_1 = p_1 by definition, with no tail normalization.
        assert!((d.hazard(1) - 2.0 * (-2.0f64).exp()).abs() < 1e-16);
        assert!((d.hazard(1) - 0.270_670_6).abs() < 1e-7);
    }

    #[test]
    fn zeta_first_hazard_matches_direct_summation_oracle() {
        // Oracle: ζ(5) by brute summation to 10^6 plus the integral bound.
        let mut zeta5 = 0.0;
        for k in (1..=1_000_000u64).rev() {
            zeta5 += (k as f64).powi(-5);
        }
        zeta5 += 1e6f64.powi(-4) / 4.0;
        let expected = 1.0 / zeta5;
        let d = AwarenessDistribution::zeta(5.0).unwrap();
        assert!((d.hazard(1) - expected).abs() < 1e-12, "q1={} want {expected}", d.hazard(1));
        assert!((d.hazard(1) - 0.964_387_3).abs() < 1e-7);
    }

    #[test]
    fn tails_and_masses_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7a11);
        for d in builtins() {
            for _ in 0..40 {
                let i = rng.random_range(1u32..40);
                // T_i − T_{i+1} = p_i
                let diff = d.tail(i) - d.tail(i + 1);
                assert!((diff - d.p(i)).abs() < 1e-13, "i={i}: {diff} vs {}", d.p(i));
                // Σ_{j≤I} p_j + T_{I+1} = 1
                let head: f64 = (0..=i).map(|j| d.p(j)).sum();
                assert!((head + d.tail(i + 1) - 1.0).abs() < 1e-12, "i={i}");
                // tails nonincreasing, hazards in [0,1]
                assert!(d.tail(i + 1) <= d.tail(i) + 1e-15);
                let q = d.hazard(i);
                assert!((0.0..=1.0).contains(&q));
            }
        }
    }

    #[test]
    fn hazard_telescoping_matches_tail_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xbead);
        for d in builtins() {
            for _ in 0..40 {
                let k = rng.random_range(2u32..12);
                let i = k + rng.random_range(0u32..12);
                if d.tail(k) <= 0.0 {
                    continue;
                }
                let mut product = 1.0;
                for j in k..i {
                    product *= 1.0 - d.hazard(j);
                }
                let ratio = d.tail(i) / d.tail(k);
                assert!(
                    (product - ratio).abs() < 1e-14,
                    "k={k} i={i}: product {product} vs ratio {ratio}"
                );
            }
        }
    }

    #[test]
    fn heavy_tail_keeps_macroscopic_mass() {
        // The whole point of analytic tails: zeta(1.01) at large index still
        // holds most of its mass.
        let d = AwarenessDistribution::zeta(1.01).unwrap();
        assert!(d.tail(200) > 0.9, "T_200 = {}", d.tail(200));
        assert!(d.tail(200) < 1.0);
    }

    #[test]
    fn profile_matches_pointwise_accessors() {
        let d = AwarenessDistribution::poisson(3.0).unwrap();
        let (mut p, mut t, mut q) = (Vec::new(), Vec::new(), Vec::new());
        d.profile_into(20, &mut p, &mut t, &mut q);
        for i in 0..=20u32 {
            assert_eq!(p[i as usize], d.p(i));
            assert_eq!(t[i as usize], d.tail(i));
            if i >= 1 {
                assert_eq!(q[i as usize], d.hazard(i));
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn custom_law() -> impl Strategy<Value = AwarenessDistribution> {
            proptest::collection::vec(0.0f64..1.0, 2..10)
                .prop_filter("needs spreading mass", |v| v[1..].iter().sum::<f64>() > 1e-6)
                .prop_map(|v| {
                    let total: f64 = v.iter().sum();
                    let p: Vec<f64> = v.iter().map(|x| x / total).collect();
                    AwarenessDistribution::custom(p).unwrap()
                })
        }

        proptest! {
            #[test]
            fn mass_tail_partition(d in custom_law(), upto in 0u32..12) {
                let head: f64 = (0..=upto).map(|j| d.p(j)).sum();
                prop_assert!((head + d.tail(upto + 1) - 1.0).abs() < 1e-12);
            }

            #[test]
            fn hazards_bounded_and_telescoping(d in custom_law(), k in 2u32..6, span in 0u32..8) {
                let i = k + span;
                for j in 1..=i {
                    let q = d.hazard(j);
                    prop_assert!((0.0..=1.0).contains(&q));
                }
                if d.tail(k) > 1e-12 {
                    let product: f64 = (k..i).map(|j| 1.0 - d.hazard(j)).product();
                    prop_assert!((product - d.tail(i) / d.tail(k)).abs() < 1e-12);
                }
            }
        }
    }
}
