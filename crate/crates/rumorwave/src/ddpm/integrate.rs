//! Deterministic integration of the limit equation and the uniform distance
//! between a scaled sample path and a limit trajectory.
//!
//! The limit system `X(t) = X(0) + ∫ F(X(s)) ds` lives in infinitely many
//! coordinates; the integrator tracks a finite prefix and monitors the rate
//! mass flowing past its top coordinate. The contraction structure of the
//! bundled models (`x_{i+1}' = (1−q_i) x_i − x_{i+1}`) keeps that flux below
//! a Poisson tail, so a modest headroom above the occupied indices suffices;
//! when the flux bound exceeds the truncation budget the headroom doubles.

use super::{DdpmError, JumpPath, RateCtx, Scale, StateVec, TransitionSpec};

/// Per-unit-time mass budget allowed past the truncation boundary.
pub const TRUNCATION_EPSILON: f64 = 1e-12;

/// Default Runge–Kutta step in accelerated time. The bundled systems are
/// smooth with unit decay rates, so a fixed classical step is enough; the
/// closed forms cross-check it.
pub const DEFAULT_STEP: f64 = 1e-3;

const INITIAL_HEADROOM: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegrationEnd {
    /// Reached the requested horizon.
    Horizon,
    /// The state left the admissible ball; the trajectory stops at the last
    /// admissible grid point.
    LeftDomain { time: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub step: f64,
    pub truncation_epsilon: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { step: DEFAULT_STEP, truncation_epsilon: TRUNCATION_EPSILON }
    }
}

/// A deterministic trajectory on a time grid, with the cumulative bound on
/// the ℓ¹ mass lost to coordinate truncation at each grid point.
#[derive(Debug, Clone)]
pub struct LimitTrajectory {
    times: Vec<f64>,
    states: Vec<StateVec>,
    remainder_bound: Vec<f64>,
    termination: IntegrationEnd,
}

impl LimitTrajectory {
    /// Wrap an externally computed grid trajectory (for example closed-form
    /// curves sampled on a grid). Times must be strictly increasing.
    pub fn from_grid(times: Vec<f64>, states: Vec<StateVec>) -> Self {
        assert_eq!(times.len(), states.len());
        assert!(times.windows(2).all(|w| w[0] < w[1]), "grid times must increase");
        let remainder_bound = vec![0.0; times.len()];
        Self { times, states, remainder_bound, termination: IntegrationEnd::Horizon }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVec] {
        &self.states
    }

    pub fn remainder_bound(&self) -> &[f64] {
        &self.remainder_bound
    }

    pub fn termination(&self) -> IntegrationEnd {
        self.termination
    }

    pub fn end_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn final_state(&self) -> &StateVec {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// Linearly interpolated state at `t` (clamped to the grid range).
    pub fn interpolate(&self, t: f64) -> StateVec {
        let mut out = StateVec::zero();
        self.interpolate_into(t, &mut out);
        out
    }

    fn interpolate_into(&self, t: f64, out: &mut StateVec) {
        let idx = match self.times.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
            Ok(i) => {
                *out = self.states[i].clone();
                return;
            }
            Err(i) => i,
        };
        if idx == 0 {
            *out = self.states[0].clone();
            return;
        }
        if idx >= self.times.len() {
            *out = self.states[self.times.len() - 1].clone();
            return;
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (&self.states[idx - 1], &self.states[idx]);
        let len = a.len().max(b.len());
        let mut coords = Vec::with_capacity(len);
        for i in 0..len as u32 {
            coords.push(a.coord(i) + w * (b.coord(i) - a.coord(i)));
        }
        *out = StateVec::from_coords(coords);
    }
}

/// Classical fourth-order Runge–Kutta on the truncated coordinate system.
pub fn integrate_limit(
    spec: &TransitionSpec,
    x0: &StateVec,
    horizon: f64,
    step: f64,
) -> Result<LimitTrajectory, DdpmError> {
    integrate_limit_with(spec, x0, horizon, IntegrateOptions { step, ..Default::default() })
}

pub fn integrate_limit_with(
    spec: &TransitionSpec,
    x0: &StateVec,
    horizon: f64,
    options: IntegrateOptions,
) -> Result<LimitTrajectory, DdpmError> {
    if options.step <= 0.0 || !options.step.is_finite() {
        return Err(DdpmError::BadStep(options.step));
    }
    let norm0 = x0.l1_norm();
    if norm0 >= spec.radius() {
        return Err(DdpmError::OutsideDomain { norm: norm0, radius: spec.radius() });
    }

    let occupied_top = x0.len().saturating_sub(1) as u32;
    let mut headroom = INITIAL_HEADROOM;
    let mut l_max = occupied_top + headroom;

    let mut x: Vec<f64> = x0.as_slice().to_vec();
    x.resize(l_max as usize + 1, 0.0);

    let mut times = vec![0.0];
    let mut states = vec![StateVec::from_coords(trimmed(&x))];
    let mut remainder = vec![0.0];
    let mut leaked = 0.0_f64;
    let mut termination = IntegrationEnd::Horizon;

    let mut t = 0.0_f64;
    let mut k1 = vec![0.0; x.len()];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();

    while t < horizon {
        let h = options.step.min(horizon - t);

        // Grow the truncation window before stepping if mass is about to
        // reach past it.
        loop {
            let flux = stage_drift(spec, &x, l_max, &mut k1);
            if flux <= options.truncation_epsilon {
                break;
            }
            headroom *= 2;
            l_max = occupied_top + headroom;
            x.resize(l_max as usize + 1, 0.0);
            k1.resize(x.len(), 0.0);
        }
        k2.resize(x.len(), 0.0);
        k3.resize(x.len(), 0.0);
        k4.resize(x.len(), 0.0);
        stage.resize(x.len(), 0.0);

        let mut max_flux = stage_drift(spec, &x, l_max, &mut k1);
        for i in 0..x.len() {
            stage[i] = x[i] + 0.5 * h * k1[i];
        }
        max_flux = max_flux.max(stage_drift(spec, &stage, l_max, &mut k2));
        for i in 0..x.len() {
            stage[i] = x[i] + 0.5 * h * k2[i];
        }
        max_flux = max_flux.max(stage_drift(spec, &stage, l_max, &mut k3));
        for i in 0..x.len() {
            stage[i] = x[i] + h * k3[i];
        }
        max_flux = max_flux.max(stage_drift(spec, &stage, l_max, &mut k4));

        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        leaked += h * max_flux;
        t += h;

        let norm: f64 = x.iter().map(|v| v.abs()).sum();
        if norm >= spec.radius() {
            termination = IntegrationEnd::LeftDomain { time: t };
            break;
        }

        times.push(t);
        states.push(StateVec::from_coords(trimmed(&x)));
        remainder.push(leaked);
    }

    Ok(LimitTrajectory { times, states, remainder_bound: remainder, termination })
}

fn trimmed(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    while v.last() == Some(&0.0) && v.len() > 1 {
        v.pop();
    }
    v
}

/// Drift restricted to coordinates `0..=l_max`; returns the rate mass that
/// would have flowed to higher coordinates.
fn stage_drift(spec: &TransitionSpec, x: &[f64], l_max: u32, out: &mut Vec<f64>) -> f64 {
    out.clear();
    out.resize(l_max as usize + 1, 0.0);
    let sum_tail: f64 = x.iter().skip(1).sum();
    let ctx = RateCtx::with_sum(x, sum_tail, Scale::Limit);
    let set = spec.transitions(l_max);
    let mut flux = 0.0;
    for tr in set.iter() {
        let beta = (tr.rate)(&ctx);
        if beta == 0.0 {
            continue;
        }
        for &(i, d) in tr.increment.terms() {
            if i <= l_max {
                out[i as usize] += f64::from(d) * beta;
            } else if d > 0 {
                flux += f64::from(d) * beta;
            }
        }
    }
    flux
}

/// Uniform ℓ¹ distance between the scaled path and the limit trajectory over
/// all jump times and grid points up to `upto` (clamped to both domains).
/// The path is right-continuous piecewise constant; the trajectory is
/// linearly interpolated between grid points.
pub fn sup_distance(path: &JumpPath, traj: &LimitTrajectory, upto: f64) -> f64 {
    let end = upto.min(traj.end_time()).min(path.end_time);
    let nf = path.n as f64;
    let grid = traj.times();
    let mut gi = 0usize;
    let mut best = 0.0_f64;
    let mut limit = StateVec::zero();

    let mut counts: Vec<u64> = path.initial.clone();
    let compare = |t: f64, counts: &[u64], best: &mut f64, limit: &mut StateVec| {
        traj.interpolate_into(t, limit);
        let len = counts.len().max(limit.len());
        let mut d = 0.0;
        for i in 0..len {
            let a = counts.get(i).map(|&c| c as f64 / nf).unwrap_or(0.0);
            d += (a - limit.coord(i as u32)).abs();
        }
        if d > *best {
            *best = d;
        }
    };

    compare(0.0, &counts, &mut best, &mut limit);
    while gi < grid.len() && grid[gi] == 0.0 {
        gi += 1;
    }

    let jumps: Vec<(f64, &super::Increment)> =
        path.jump_times().zip(path.jump_increments()).collect();
    for (t, inc) in jumps {
        if t > end {
            break;
        }
        while gi < grid.len() && grid[gi] < t {
            if grid[gi] <= end {
                compare(grid[gi], &counts, &mut best, &mut limit);
            }
            gi += 1;
        }
        for &(i, d) in inc.terms() {
            let i = i as usize;
            if i >= counts.len() {
                counts.resize(i + 1, 0);
            }
            counts[i] = (counts[i] as i64 + i64::from(d)) as u64;
        }
        compare(t, &counts, &mut best, &mut limit);
    }
    while gi < grid.len() && grid[gi] <= end {
        compare(grid[gi], &counts, &mut best, &mut limit);
        gi += 1;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddpm::{pure_death_spec, simulate, Increment, SimOptions, Transition};

    fn constant_growth_spec() -> TransitionSpec {
        let t = Transition::new(Increment::new(vec![(0, 1)]).unwrap(), 1.0, |_: &RateCtx<'_>| 1.0);
        TransitionSpec::new(vec![t], 1.0).unwrap()
    }

    #[test]
    fn pure_death_matches_the_exponential() {
        let spec = pure_death_spec();
        let x0 = StateVec::from_pairs(&[(1, 1.0)]);
        let traj = integrate_limit(&spec, &x0, 1.0, 1e-3).unwrap();
        let got = traj.final_state().coord(1);
        assert!((got - (-1.0f64).exp()).abs() < 1e-9, "got {got}");
        assert_eq!(traj.termination(), IntegrationEnd::Horizon);
        assert!(traj.remainder_bound().last().unwrap() < &TRUNCATION_EPSILON);
    }

    #[test]
    fn step_halving_gains_fourth_order() {
        let spec = pure_death_spec();
        let x0 = StateVec::from_pairs(&[(1, 1.0)]);
        let exact = (-1.0f64).exp();
        let err = |h: f64| {
            let traj = integrate_limit(&spec, &x0, 1.0, h).unwrap();
            (traj.final_state().coord(1) - exact).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((10.0..25.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn zero_drift_keeps_the_state_constant() {
        let t = Transition::new(Increment::loss(1), 1.0, |_: &RateCtx<'_>| 0.0);
        let spec = TransitionSpec::new(vec![t], 1.0).unwrap();
        let x0 = StateVec::from_pairs(&[(0, 0.25), (1, 0.5)]);
        let traj = integrate_limit(&spec, &x0, 2.0, 0.01).unwrap();
        assert_eq!(traj.final_state(), &x0);
    }

    #[test]
    fn leaving_the_ball_stops_with_a_diagnostic() {
        let spec = constant_growth_spec().with_radius(1.0);
        let x0 = StateVec::from_pairs(&[(0, 0.9)]);
        let traj = integrate_limit(&spec, &x0, 5.0, 0.01).unwrap();
        match traj.termination() {
            IntegrationEnd::LeftDomain { time } => assert!((time - 0.1).abs() < 0.02),
            other => panic!("expected LeftDomain, got {other:?}"),
        }
        assert!(traj.end_time() < 0.11);
    }

    #[test]
    fn sup_distance_of_matching_constant_path_is_zero() {
        // A path with no jumps compared against its own constant state.
        let t = Transition::new(Increment::loss(1), 1.0, |_: &RateCtx<'_>| 0.0);
        let spec = TransitionSpec::new(vec![t], 1.0).unwrap();
        let path = simulate(&spec, 4, &[2, 2], SimOptions::default()).unwrap();
        let states =
            vec![StateVec::from_coords(vec![0.5, 0.5]), StateVec::from_coords(vec![0.5, 0.5])];
        let traj = LimitTrajectory::from_grid(vec![0.0, 1.0], states);
        assert_eq!(sup_distance(&path, &traj, 1.0), 0.0);
    }

    #[test]
    fn sup_distance_single_death_matches_hand_evaluation() {
        let spec = pure_death_spec();
        let path =
            simulate(&spec, 1, &[0, 1], SimOptions { seed: 5, ..Default::default() }).unwrap();
        let jump = path.jump_times().next().unwrap();
        let x0 = StateVec::from_pairs(&[(1, 1.0)]);
        let traj = integrate_limit(&spec, &x0, 2.0, 1e-3).unwrap();
        let got = sup_distance(&path, &traj, 1.0);
        // Before the jump the gap grows to 1 − e^{−min(jump,1)}; right after
        // the jump it is e^{−jump} if the jump lands inside the window.
        let before = 1.0 - (-jump.min(1.0)).exp();
        let after = if jump <= 1.0 { (-jump).exp() } else { 0.0 };
        let expected = before.max(after);
        assert!((got - expected).abs() < 2e-3, "got {got}, expected {expected}");
    }

    #[test]
    fn sup_distance_sees_a_constant_shift() {
        let t = Transition::new(Increment::loss(1), 1.0, |_: &RateCtx<'_>| 0.0);
        let spec = TransitionSpec::new(vec![t], 1.0).unwrap();
        let path = simulate(&spec, 4, &[2, 2], SimOptions::default()).unwrap();
        let shift = 0.125;
        let states = vec![
            StateVec::from_coords(vec![0.5, 0.5 + shift]),
            StateVec::from_coords(vec![0.5, 0.5 + shift]),
        ];
        let traj = LimitTrajectory::from_grid(vec![0.0, 1.0], states);
        assert!(sup_distance(&path, &traj, 1.0) >= shift);
    }

    #[test]
    fn scaled_paths_concentrate_on_the_limit() {
        // Median distance over 20 seeds must strictly decrease in n.
        let spec = pure_death_spec();
        let x0 = StateVec::from_pairs(&[(1, 1.0)]);
        let traj = integrate_limit(&spec, &x0, 3.0, 1e-3).unwrap();
        let mut medians = Vec::new();
        for &n in &[100u64, 1_000, 10_000] {
            let mut ds: Vec<f64> = (0..20)
                .map(|s| {
                    let path = simulate(
                        &spec,
                        n,
                        &[0, n],
                        SimOptions { seed: crate::ddpm::stream_seed(99, s), ..Default::default() },
                    )
                    .unwrap();
                    sup_distance(&path, &traj, 3.0)
                })
                .collect();
            ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push((ds[9] + ds[10]) / 2.0);
        }
        assert!(medians[0] > medians[1] && medians[1] > medians[2], "medians {medians:?}");
    }
}
