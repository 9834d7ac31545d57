//! Closed-form analysis of the accelerated-time fluid limit: listener and
//! spreader curves, the absorption point `ζ∞`, final proportions, critical
//! points, per-wave peaks, and the uniqueness-condition test.
//!
//! On the accelerated clock every listener level decays at unit rate, so the
//! coordinates solve a triangular linear system with solution
//!
//! ```text
//! x_ℓ(ζ) = Σ_{k=1}^{ℓ} x⁰_k · w_{ℓ−k}(ζ) · C_{k,ℓ},   w_j(ζ) = e^{−ζ} ζ^j / j!
//! ```
//!
//! with path coefficients `C_{ℓ,ℓ} = 1`, `C_{1,ℓ} = T_ℓ` for `ℓ > 1` (the
//! first advance out of the ignorant level carries `1 − p₀ − p₁`), and
//! `C_{k,ℓ} = Π_{j=k}^{ℓ−1} (1 − q_j) = T_ℓ / T_k` for `2 ≤ k < ℓ`. The
//! products are always evaluated through tail ratios; exhausted tails
//! (`T_k = 0`, dead branches with `q ≡ 0`) contribute a literal factor 1.
//!
//! Integrating in `ζ` turns each weight into a regularized lower gamma
//! value, giving the spreader curve
//!
//! ```text
//! y(ζ) = y₀ − ζ + Σ_{ℓ≥1} (1 + q_ℓ) I_ℓ(ζ),
//! I_ℓ(ζ) = Σ_{k=1}^{ℓ} x⁰_k · P(ℓ−k+1, ζ) · C_{k,ℓ},
//! ```
//!
//! whose unique positive root is the accelerated absorption point `ζ∞`. The
//! ℓ-series is truncated by its gamma factor, never by distribution tail
//! mass; heavy-tailed laws (zeta with `s` near 1) keep macroscopic tail mass
//! at every feasible index and would be destroyed by pmf truncation.

use thiserror::Error;

use crate::awareness::{AwarenessDistribution, Support};

/// Root scanning starts at this offset above zero (the origin itself can be
/// a root of the standard configuration).
const SCAN_DELTA: f64 = 1e-6;

/// Root refinement targets: bracket width and residual.
const ROOT_WIDTH: f64 = 1e-12;
const ROOT_RESIDUAL: f64 = 1e-13;

/// The two closed-form evaluation routes for a peak height must agree to
/// this; beyond it the computation aborts.
const ROUTE_ABORT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitsError {
    #[error("invalid initial condition: {0}")]
    BadInitial(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no outbreak: the spreader curve never becomes positive")]
    NoOutbreak,
    #[error("root search failed to bracket a sign change below zeta = {0}")]
    NoBracket(f64),
    #[error(
        "peak evaluation routes disagree at zeta = {zeta}: series {series} vs quadrature {quadrature}"
    )]
    RouteMismatch { zeta: f64, series: f64, quadrature: f64 },
}

/// Initial proportions `(y₀, x⁰₁, x⁰₂, …)` in the positive part of the unit
/// ℓ¹ ball.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitInitialCondition {
    y0: f64,
    /// `x0[k]` is `x⁰_k`; entry 0 is unused padding.
    x0: Vec<f64>,
}

impl LimitInitialCondition {
    /// The standard configuration: everyone ignorant, `(y, x₁, x₂, …) =
    /// (0, 1, 0, …)`.
    pub fn standard() -> Self {
        Self { y0: 0.0, x0: vec![0.0, 1.0] }
    }

    /// General initial condition; `listeners[j]` is the proportion of
    /// (j+1)-listeners.
    pub fn new(y0: f64, listeners: Vec<f64>) -> Result<Self, LimitsError> {
        if !y0.is_finite() || y0 < 0.0 {
            return Err(LimitsError::BadInitial(format!("y0 = {y0}")));
        }
        if listeners.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(LimitsError::BadInitial("negative listener proportion".into()));
        }
        let total: f64 = y0 + listeners.iter().sum::<f64>();
        if total > 1.0 + 1e-12 {
            return Err(LimitsError::BadInitial(format!("total mass {total} exceeds 1")));
        }
        let mut x0 = vec![0.0];
        x0.extend_from_slice(&listeners);
        while x0.last() == Some(&0.0) && x0.len() > 1 {
            x0.pop();
        }
        Ok(Self { y0, x0 })
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// `x⁰_k` for `k ≥ 1`.
    pub fn listener(&self, k: u32) -> f64 {
        self.x0.get(k as usize).copied().unwrap_or(0.0)
    }

    /// Highest initially occupied listener level (0 when none).
    pub fn max_level(&self) -> u32 {
        (self.x0.len() - 1) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    Maximum,
    Minimum,
    /// A tangency of the derivative: touches zero without changing sign.
    Inflection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub zeta: f64,
    pub kind: CriticalKind,
}

/// A local maximum of the spreader proportion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    pub zeta: f64,
    pub height: f64,
}

/// Global and per-wave spreader peaks.
#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub zeta_max: f64,
    pub y_max: f64,
    pub waves: Vec<Wave>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Uniqueness {
    /// The mass-function conditions guarantee a single critical point.
    CertifiedUnique,
    /// The sufficient conditions do not apply (multiple waves possible but
    /// not implied).
    NotCertified,
}

/// Everything the asymptotic analysis produces for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct OutbreakSummary {
    pub zeta_inf: f64,
    /// `x_{ℓ,∞}` for `ℓ = 1..=cutoff`.
    pub finals: Vec<f64>,
    pub critical_points: Vec<CriticalPoint>,
    pub waves: Vec<Wave>,
    pub zeta_max: f64,
    pub y_max: f64,
    pub wave_count: u32,
    pub uniqueness_certified: bool,
}

/// Series evaluation context: a snapshot of the distribution tables plus
/// scratch buffers, grown to cover the largest `ζ` seen so far.
struct CurveCtx<'a> {
    dist: &'a AwarenessDistribution,
    ic: &'a LimitInitialCondition,
    kmax: u32,
    mass0: f64,
    p: Vec<f64>,
    tail: Vec<f64>,
    hazard: Vec<f64>,
    table_len: u32,
    weights: Vec<f64>,
}

impl<'a> CurveCtx<'a> {
    fn new(dist: &'a AwarenessDistribution, ic: &'a LimitInitialCondition) -> Self {
        let mut ctx = Self {
            dist,
            ic,
            kmax: ic.max_level(),
            mass0: ic.x0.iter().sum(),
            p: Vec::new(),
            tail: Vec::new(),
            hazard: Vec::new(),
            table_len: 0,
            weights: Vec::new(),
        };
        ctx.ensure_tables(64);
        ctx
    }

    /// Series length certifying a truncation remainder below 1e−12: the
    /// gamma factors past `ζ + 12√ζ + 40` carry less than that uniformly for
    /// `ζ ≤ 400`, shifted by the highest occupied initial level.
    fn l_series(&self, zeta: f64) -> u32 {
        let z = zeta.clamp(0.0, 650.0);
        (z + 12.0 * z.sqrt() + 40.0).ceil() as u32 + self.kmax
    }

    fn ensure_tables(&mut self, upto: u32) {
        if self.table_len > upto + 1 {
            return;
        }
        let target = (upto + 2).next_power_of_two();
        self.dist.profile_into(target, &mut self.p, &mut self.tail, &mut self.hazard);
        self.table_len = target;
    }

    /// Path coefficient `C_{k,ℓ}` for `1 ≤ k ≤ ℓ`.
    fn coeff(&self, k: u32, ell: u32) -> f64 {
        if k == ell {
            1.0
        } else if k == 1 {
            self.tail[ell as usize]
        } else if self.tail[k as usize] > 0.0 {
            self.tail[ell as usize] / self.tail[k as usize]
        } else {
            // Exhausted tail: every hazard past k is 0, the product is 1.
            1.0
        }
    }

    /// Fill `weights[j] = e^{−ζ} ζ^j / j!` for `j = 0..=upto`.
    fn fill_weights(&mut self, zeta: f64, upto: u32) {
        self.weights.clear();
        self.weights.reserve(upto as usize + 1);
        let mut w = (-zeta).exp();
        self.weights.push(w);
        for j in 1..=upto {
            w *= zeta / f64::from(j);
            self.weights.push(w);
        }
    }

    /// `x_ℓ(ζ)` for one coordinate.
    fn x_coord(&mut self, ell: u32, zeta: f64) -> f64 {
        self.ensure_tables(ell + 1);
        self.fill_weights(zeta, ell.saturating_sub(1));
        self.x_from_weights(ell)
    }

    fn x_from_weights(&self, ell: u32) -> f64 {
        let mut sum = 0.0;
        for k in 1..=ell.min(self.kmax) {
            let mass = self.ic.x0[k as usize];
            if mass == 0.0 {
                continue;
            }
            sum += mass * self.weights[(ell - k) as usize] * self.coeff(k, ell);
        }
        sum
    }

    /// All coordinates `x_1(ζ) … x_upto(ζ)`.
    fn x_all(&mut self, zeta: f64, upto: u32) -> Vec<f64> {
        if upto == 0 {
            return Vec::new();
        }
        self.ensure_tables(upto + 1);
        self.fill_weights(zeta, upto.saturating_sub(1));
        (1..=upto).map(|ell| self.x_from_weights(ell)).collect()
    }

    /// `I_ℓ(ζ) = ∫₀^ζ x_ℓ`, via the gamma identity.
    fn integral_coord(&mut self, ell: u32, zeta: f64) -> f64 {
        self.ensure_tables(ell + 1);
        let mut sum = 0.0;
        for k in 1..=ell.min(self.kmax) {
            let mass = self.ic.x0[k as usize];
            if mass == 0.0 {
                continue;
            }
            sum += mass * crate::gammafn::reg_lower_gamma(ell - k + 1, zeta) * self.coeff(k, ell);
        }
        sum
    }

    /// `y(ζ) = y₀ − ζ + Σ (1 + q_ℓ) I_ℓ(ζ)`, truncated by the gamma factor.
    fn y(&mut self, zeta: f64) -> f64 {
        let l_max = self.l_series(zeta);
        self.ensure_tables(l_max + 1);
        self.fill_weights(zeta, l_max);
        // Running P(j, ζ) via P(1) = 1 − e^{−ζ} and P(j+1) = P(j) − w_j.
        let mut pvec = vec![0.0; l_max as usize + 2];
        pvec[1] = -(-zeta).exp_m1();
        for j in 1..=l_max as usize {
            pvec[j + 1] = (pvec[j] - self.weights[j]).max(0.0);
        }
        let mut sum = 0.0;
        for ell in 1..=l_max {
            let mut integral = 0.0;
            for k in 1..=ell.min(self.kmax) {
                let mass = self.ic.x0[k as usize];
                if mass == 0.0 {
                    continue;
                }
                integral += mass * pvec[(ell - k + 1) as usize] * self.coeff(k, ell);
            }
            sum += (1.0 + self.hazard[ell as usize]) * integral;
            // Gamma-factor cutoff: the remaining terms are bounded through
            // the largest surviving tail probability.
            let bound_index = (ell + 1).saturating_sub(self.kmax).max(1) as usize;
            if 2.0 * self.mass0 * pvec[bound_index] < 1e-18 {
                break;
            }
        }
        self.ic.y0 - zeta + sum
    }

    /// `y'(ζ) = −1 + Σ (1 + q_ℓ) x_ℓ(ζ)`.
    fn y_prime(&mut self, zeta: f64) -> f64 {
        let l_max = self.l_series(zeta);
        self.ensure_tables(l_max + 1);
        self.fill_weights(zeta, l_max);
        let mut sum = 0.0;
        for ell in 1..=l_max {
            let x = self.x_from_weights(ell);
            sum += (1.0 + self.hazard[ell as usize]) * x;
            // The weights peak near j ≈ ζ; stop only on the decreasing side.
            let lead = ell.saturating_sub(self.kmax);
            if f64::from(lead) > zeta && 2.0 * self.mass0 * self.weights[lead as usize] < 1e-18 {
                break;
            }
        }
        -1.0 + sum
    }

    /// Analytic `y'(0) = −1 + Σ (1 + q_ℓ) x⁰_ℓ`.
    fn y_prime_at_zero(&mut self) -> f64 {
        self.ensure_tables(self.kmax + 2);
        let mut sum = 0.0;
        for ell in 1..=self.kmax {
            sum += (1.0 + self.hazard[ell as usize]) * self.ic.x0[ell as usize];
        }
        -1.0 + sum
    }

    /// Analytic `y''(0) = Σ (1 + q_ℓ) x_ℓ'(0)` from the triangular system:
    /// `x₁' = −x⁰₁`, `x₂' = (1−p₀−p₁) x⁰₁ − x⁰₂`, and
    /// `x_ℓ' = (1−q_{ℓ−1}) x⁰_{ℓ−1} − x⁰_ℓ` for `ℓ ≥ 3`.
    fn y_second_at_zero(&mut self) -> f64 {
        self.ensure_tables(self.kmax + 3);
        let x0 = |k: u32| self.ic.x0.get(k as usize).copied().unwrap_or(0.0);
        let mut sum = 0.0;
        for ell in 1..=self.kmax + 1 {
            let inflow = match ell {
                1 => 0.0,
                2 => self.tail[2] * x0(1),
                _ => (1.0 - self.hazard[(ell - 1) as usize]) * x0(ell - 1),
            };
            let deriv = inflow - x0(ell);
            sum += (1.0 + self.hazard[ell as usize]) * deriv;
        }
        sum
    }

    /// Adaptive-Simpson quadrature of `y'` — the independent second route
    /// for peak heights (no incomplete-gamma identity involved).
    fn y_quadrature(&mut self, zeta: f64) -> f64 {
        if zeta == 0.0 {
            return self.ic.y0;
        }
        let fa = self.y_prime(0.0);
        let fm = self.y_prime(zeta / 2.0);
        let fb = self.y_prime(zeta);
        let integral = self.simpson(0.0, zeta, fa, fm, fb, 1e-13, 40);
        self.ic.y0 + integral
    }

    #[allow(clippy::too_many_arguments)]
    fn simpson(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let h = b - a;
        let whole = h / 6.0 * (fa + 4.0 * fm + fb);
        let flm = self.y_prime(0.5 * (a + m));
        let frm = self.y_prime(0.5 * (m + b));
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let split = left + right;
        if depth == 0 || (split - whole).abs() < 15.0 * tol {
            split + (split - whole) / 15.0
        } else {
            self.simpson(a, m, fa, flm, fm, tol / 2.0, depth - 1)
                + self.simpson(m, b, fm, frm, fb, tol / 2.0, depth - 1)
        }
    }
}

fn check_zeta(zeta: f64) -> Result<(), LimitsError> {
    if !zeta.is_finite() || zeta < 0.0 {
        return Err(LimitsError::Domain(format!("zeta must be nonnegative, got {zeta}")));
    }
    Ok(())
}

/// The listener proportion `x_ℓ(ζ)` in closed form.
pub fn listener_curve(
    dist: &AwarenessDistribution,
    ic: &LimitInitialCondition,
    ell: u32,
    zeta: f64,
) -> Result<f64, LimitsError> {
    if ell < 1 {
        return Err(LimitsError::Domain("listener levels start at 1".into()));
    }
    check_zeta(zeta)?;
    Ok(CurveCtx::new(dist, ic).x_coord(ell, zeta))
}

/// `I_ℓ(ζ) = ∫₀^ζ x_ℓ(s) ds` in closed form.
pub fn listener_integral(
    dist: &AwarenessDistribution,
    ic: &LimitInitialCondition,
    ell: u32,
    zeta: f64,
) -> Result<f64, LimitsError> {
    if ell < 1 {
        return Err(LimitsError::Domain("listener levels start at 1".into()));
    }
    check_zeta(zeta)?;
    Ok(CurveCtx::new(dist, ic).integral_coord(ell, zeta))
}

/// The spreader proportion `y(ζ)`.
pub fn spreader_curve(
    dist: &AwarenessDistribution,
    ic: &LimitInitialCondition,
    zeta: f64,
) -> Result<f64, LimitsError> {
    check_zeta(zeta)?;
    Ok(CurveCtx::new(dist, ic).y(zeta))
}

/// The spreader slope `y'(ζ) = −1 + Σ (1+q_ℓ) x_ℓ(ζ)`.
pub fn spreader_slope(
    dist: &AwarenessDistribution,
    ic: &LimitInitialCondition,
    zeta: f64,
) -> Result<f64, LimitsError> {
    check_zeta(zeta)?;
    Ok(CurveCtx::new(dist, ic).y_prime(zeta))
}

/// The unique positive root of `y(ζ) = 0` — the accelerated absorption
/// point. Scans a geometric-then-linear grid from 1e−6 for the first sign
/// change from positive to nonpositive, doubling the upper bound as needed,
/// then refines by bisection.
pub fn solve_zeta_infinity(
    dist: &AwarenessDistribution,
    ic: &LimitInitialCondition,
) -> Result<f64, LimitsError> {
    let mut ctx = CurveCtx::new(dist, ic);
    solve_root(&mut ctx)
}

/// How large `y(ζ)` must be before its sign is trusted during the scan: the
/// series evaluates `−ζ + Σ…` with terms of size up to `ζ`, so rounding
/// noise scales with `ζ`. A curve whose true value sits below this floor at
/// every probe (degenerate starts open at cubic or higher order) is decided
/// at the next, larger probes instead.
fn sign_floor(zeta: f64) -> f64 {
    32.0 * f64::EPSILON * zeta.max(f64::MIN_POSITIVE)
}

fn solve_root(ctx: &mut CurveCtx<'_>) -> Result<f64, LimitsError> {
    let mut bracket: Option<(f64, f64)> = None;
    let mut seen_positive = false;
    let mut last_positive = 0.0;

    let mut bound = 8.0_f64;
    let mut scanned_from = 0.0_f64;
    'outer: loop {
        let mut probes: Vec<f64> = Vec::new();
        if scanned_from == 0.0 {
            // Geometric probes catch outbreaks whose positive phase starts
            // with a microscopic slope.
            let mut z = SCAN_DELTA * 1e-6;
            while z < 0.16 {
                probes.push(z);
                z *= 2.0;
            }
        }
        let mut lin = scanned_from.max(0.16);
        while lin <= bound {
            probes.push(lin);
            lin += 0.02;
        }
        for zeta in probes {
            let y = ctx.y(zeta);
            if y > sign_floor(zeta) {
                seen_positive = true;
                last_positive = zeta;
            } else if seen_positive && y < -sign_floor(zeta) {
                bracket = Some((last_positive, zeta));
                break 'outer;
            }
        }
        if !seen_positive {
            break;
        }
        scanned_from = bound;
        bound *= 2.0;
        if bound > 512.0 {
            return Err(LimitsError::NoBracket(bound));
        }
    }

    let Some((mut lo, mut hi)) = bracket else {
        // Nothing positive anywhere. The analytic derivative tests at the
        // origin decide whether the outbreak hypothesis is simply violated
        // or the scan missed an opening below every probe's resolution.
        let d1 = ctx.y_prime_at_zero();
        let d2 = ctx.y_second_at_zero();
        if d1 > 1e-12 || (d1.abs() <= 1e-12 && d2 > 1e-12) {
            return Err(LimitsError::NoBracket(bound));
        }
        return Err(LimitsError::NoOutbreak);
    };

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let y = ctx.y(mid);
        if y > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < ROOT_WIDTH && ctx.y(mid).abs() < ROOT_RESIDUAL {
            break;
        }
        if hi - lo < f64::EPSILON * mid.max(1.0) {
            break;
        }
    }
    Ok(mid)
}

/// `x_{ℓ,∞} = x_ℓ(ζ∞)` for `ℓ = 1..=cutoff`.
pub fn final_proportions(
    dist: &AwarenessDistribution,
    ic: &LimitInitialCondition,
    cutoff: u32,
) -> Result<Vec<f64>, LimitsError> {
    let mut ctx = CurveCtx::new(dist, ic);
    let zeta_inf = solve_root(&mut ctx)?;
    Ok(ctx.x_all(zeta_inf, cutoff))
}

/// All roots of `y'(ζ) = 0` on `(0, ζ∞)`, classified by the sign pattern of
/// `y'` on each side (tangencies are flagged as inflections).
pub fn critical_points(
    dist: &AwarenessDistribution,
    ic: &LimitInitialCondition,
) -> Result<Vec<CriticalPoint>, LimitsError> {
    let mut ctx = CurveCtx::new(dist, ic);
    let zeta_inf = solve_root(&mut ctx)?;
    Ok(scan_critical_points(&mut ctx, zeta_inf))
}

fn scan_critical_points(ctx: &mut CurveCtx<'_>, zeta_inf: f64) -> Vec<CriticalPoint> {
    let step = (0.01f64).min(zeta_inf / 1000.0);
    let mut grid: Vec<f64> = Vec::new();
    let mut z = SCAN_DELTA.min(step / 64.0);
    while z < step {
        grid.push(z);
        z *= 4.0;
    }
    let mut i = 1u64;
    loop {
        let t = i as f64 * step;
        if t >= zeta_inf {
            break;
        }
        grid.push(t);
        i += 1;
    }
    grid.push(zeta_inf * (1.0 - 1e-9));

    let values: Vec<f64> = grid.iter().map(|&t| ctx.y_prime(t)).collect();
    let mut out = Vec::new();

    for j in 1..grid.len() {
        let (a, b) = (grid[j - 1], grid[j]);
        let (fa, fb) = (values[j - 1], values[j]);
        if fa == 0.0 {
            continue; // already handled as the right end of the previous cell
        }
        if fa * fb < 0.0 || (fb == 0.0 && fa != 0.0) {
            let (mut lo, mut hi) = (a, b);
            let mut flo = fa;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = ctx.y_prime(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo < ROOT_WIDTH {
                    break;
                }
            }
            let root = 0.5 * (lo + hi);
            let kind = if fa > 0.0 { CriticalKind::Maximum } else { CriticalKind::Minimum };
            out.push(CriticalPoint { zeta: root, kind });
        }
    }

    // Tangency sweep: interior grid minima of |y'| that come close to zero
    // without a sign change.
    for j in 1..grid.len().saturating_sub(1) {
        let same_sign = values[j - 1] * values[j + 1] > 0.0;
        let dip = values[j].abs() < values[j - 1].abs() && values[j].abs() <= values[j + 1].abs();
        if same_sign && dip && values[j].abs() < 1e-9 {
            let (mut lo, mut hi) = (grid[j - 1], grid[j + 1]);
            for _ in 0..120 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if ctx.y_prime(m1).abs() < ctx.y_prime(m2).abs() {
                    hi = m2;
                } else {
                    lo = m1;
                }
                if hi - lo < 1e-11 {
                    break;
                }
            }
            let root = 0.5 * (lo + hi);
            if ctx.y_prime(root).abs() < 1e-12 && out.iter().all(|c| (c.zeta - root).abs() > 1e-7) {
                out.push(CriticalPoint { zeta: root, kind: CriticalKind::Inflection });
            }
        }
    }
    out.sort_by(|u, v| u.zeta.partial_cmp(&v.zeta).unwrap());
    out
}

/// Per-wave and global spreader peaks. Each wave height is computed twice —
/// through the gamma-series form of `y` and through direct quadrature of
/// `y'` — and the routes must agree.
pub fn peak(dist: &AwarenessDistribution, ic: &LimitInitialCondition) -> Result<Peak, LimitsError> {
    let mut ctx = CurveCtx::new(dist, ic);
    let zeta_inf = solve_root(&mut ctx)?;
    let cps = scan_critical_points(&mut ctx, zeta_inf);
    peak_from_points(&mut ctx, &cps)
}

fn peak_from_points(ctx: &mut CurveCtx<'_>, cps: &[CriticalPoint]) -> Result<Peak, LimitsError> {
    let mut waves = Vec::new();
    for cp in cps.iter().filter(|c| c.kind == CriticalKind::Maximum) {
        let series = ctx.y(cp.zeta);
        let quadrature = ctx.y_quadrature(cp.zeta);
        if (series - quadrature).abs() > ROUTE_ABORT {
            return Err(LimitsError::RouteMismatch { zeta: cp.zeta, series, quadrature });
        }
        waves.push(Wave { zeta: cp.zeta, height: series });
    }
    // The boundary is a legitimate global maximum when the curve starts
    // above every interior wave (possible only with initial spreaders).
    let mut best = Wave { zeta: 0.0, height: ctx.ic.y0 };
    for w in &waves {
        if w.height > best.height + 1e-12 {
            best = *w;
        }
    }
    Ok(Peak { zeta_max: best.zeta, y_max: best.height, waves })
}

/// Number of waves: maximum-classified critical points in `(0, ζ∞)`, with a
/// start that is already decaying counting as its single boundary wave.
pub fn wave_count(
    dist: &AwarenessDistribution,
    ic: &LimitInitialCondition,
) -> Result<u32, LimitsError> {
    let p = peak(dist, ic)?;
    Ok((p.waves.len() as u32).max(1))
}

/// Sufficient conditions on the mass function under which the spreader
/// curve has a single critical point: either the masses grow through a
/// finite support (`p_{m+1} ≥ Σ_{j≤m} p_j` up to the last index, zero
/// beyond), or every later mass stays strictly below the accumulated head
/// (`p_{m+1} < Σ_{j≤m} p_j` for all `m ≥ 2`). Infinite supports terminate
/// the second scan once the remaining supremum of the mass function drops
/// below the accumulated head.
pub fn uniqueness_condition(dist: &AwarenessDistribution) -> Uniqueness {
    if condition_growing_then_zero(dist) || condition_dominated_head(dist) {
        Uniqueness::CertifiedUnique
    } else {
        Uniqueness::NotCertified
    }
}

fn condition_growing_then_zero(dist: &AwarenessDistribution) -> bool {
    let Support::Finite(last) = dist.support() else {
        return false;
    };
    let mut prefix = 0.0;
    for m in 0..last {
        prefix += dist.p(m);
        if dist.p(m + 1) < prefix - 1e-12 {
            return false;
        }
    }
    true
}

fn condition_dominated_head(dist: &AwarenessDistribution) -> bool {
    let mut prefix = dist.p(0) + dist.p(1) + dist.p(2);
    let cap = match dist.support() {
        Support::Finite(last) => last,
        Support::Infinite => 200_000,
    };
    let mut m = 2u32;
    loop {
        if dist.p(m + 1) >= prefix {
            return false;
        }
        if dist.mass_sup_from(m + 2) < prefix {
            return true;
        }
        m += 1;
        if m > cap {
            // Could not certify within the scan horizon.
            return false;
        }
        prefix += dist.p(m);
    }
}

/// One sampled point of the limit curves.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub zeta: f64,
    pub y: f64,
    /// `x_1(ζ) … x_cutoff(ζ)`.
    pub listeners: Vec<f64>,
}

/// Sample `(y, x_1 … x_cutoff)` on a ζ-grid, reusing one evaluation context
/// across the grid. This is the data behind trajectory output and behind the
/// limit curves that scaled sample paths are compared against.
pub fn curve_grid(
    dist: &AwarenessDistribution,
    ic: &LimitInitialCondition,
    zetas: &[f64],
    cutoff: u32,
) -> Result<Vec<CurvePoint>, LimitsError> {
    let mut ctx = CurveCtx::new(dist, ic);
    let mut out = Vec::with_capacity(zetas.len());
    for &zeta in zetas {
        check_zeta(zeta)?;
        let y = ctx.y(zeta);
        let listeners = ctx.x_all(zeta, cutoff);
        out.push(CurvePoint { zeta, y, listeners });
    }
    Ok(out)
}

/// Run the whole asymptotic analysis: absorption point, final proportions up
/// to `cutoff`, critical points, waves, global peak, and the uniqueness
/// certificate.
pub fn summarize(
    dist: &AwarenessDistribution,
    ic: &LimitInitialCondition,
    cutoff: u32,
) -> Result<OutbreakSummary, LimitsError> {
    let mut ctx = CurveCtx::new(dist, ic);
    let zeta_inf = solve_root(&mut ctx)?;
    let finals = ctx.x_all(zeta_inf, cutoff);
    let critical = scan_critical_points(&mut ctx, zeta_inf);
    let peak = peak_from_points(&mut ctx, &critical)?;
    let wave_count = (peak.waves.len() as u32).max(1);
    Ok(OutbreakSummary {
        zeta_inf,
        finals,
        critical_points: critical,
        zeta_max: peak.zeta_max,
        y_max: peak.y_max,
        waves: peak.waves,
        wave_count,
        uniqueness_certified: uniqueness_condition(dist) == Uniqueness::CertifiedUnique,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::awareness::AwarenessDistribution;

    fn standard() -> LimitInitialCondition {
        LimitInitialCondition::standard()
    }

    fn wave_example_a() -> AwarenessDistribution {
        AwarenessDistribution::custom(vec![0.053, 0.004, 0.023, 0.163, 0.757]).unwrap()
    }

    fn wave_example_b() -> AwarenessDistribution {
        AwarenessDistribution::custom(vec![0.009, 0.014, 0.002, 0.038, 0.004, 0.167, 0.766])
            .unwrap()
    }

    #[test]
    fn ignorants_decay_exponentially_for_every_law() {
        for dist in [
            AwarenessDistribution::poisson(2.0).unwrap(),
            AwarenessDistribution::zeta(5.0).unwrap(),
            AwarenessDistribution::dirac(3).unwrap(),
        ] {
            for &z in &[0.0, 0.3, 1.0, 2.5] {
                let x1 = listener_curve(&dist, &standard(), 1, z).unwrap();
                assert!((x1 - (-z).exp()).abs() < 1e-14, "z={z}: {x1}");
            }
        }
    }

    #[test]
    fn dead_levels_carry_no_mass() {
        let dist = AwarenessDistribution::dirac(1).unwrap();
        for &z in &[0.1, 1.0, 3.0] {
            assert_eq!(listener_curve(&dist, &standard(), 2, z).unwrap(), 0.0);
        }
    }

    #[test]
    fn second_level_matches_direct_evaluation() {
        // poisson(2), ℓ = 2, ζ = 1: e^{−1}(1 − 3e^{−2}).
        let dist = AwarenessDistribution::poisson(2.0).unwrap();
        let expected = (-1.0f64).exp() * (1.0 - 3.0 * (-2.0f64).exp());
        let got = listener_curve(&dist, &standard(), 2, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-14, "got {got}, want {expected}");
        assert!((got - 0.218_518_2).abs() < 1e-7);
    }

    #[test]
    fn tail_ratio_products_match_literal_products() {
        // On finite supports the telescoped coefficients equal the literal
        // hazard products.
        for dist in [AwarenessDistribution::uniform(3).unwrap(), wave_example_a(), wave_example_b()]
        {
            let ic = LimitInitialCondition::new(0.05, vec![0.4, 0.2, 0.1, 0.05, 0.05]).unwrap();
            let mut ctx = CurveCtx::new(&dist, &ic);
            ctx.ensure_tables(16);
            for ell in 1..=10u32 {
                for k in 1..=ell {
                    let telescoped = ctx.coeff(k, ell);
                    let literal = if k == ell {
                        1.0
                    } else if k == 1 {
                        1.0 - (0..ell).map(|j| dist.p(j)).sum::<f64>()
                    } else {
                        (k..ell).map(|j| 1.0 - dist.hazard(j)).product()
                    };
                    assert!(
                        (telescoped - literal).abs() < 1e-14,
                        "k={k} ell={ell}: {telescoped} vs {literal}"
                    );
                }
            }
        }
    }

    #[test]
    fn spreader_curve_matches_the_classical_solution() {
        let dist = AwarenessDistribution::dirac(1).unwrap();
        for &z in &[0.0, 0.2, std::f64::consts::LN_2, 1.0, 1.5] {
            let y = spreader_curve(&dist, &standard(), z).unwrap();
            let expected = 2.0 * (1.0 - (-z).exp()) - z;
            assert!((y - expected).abs() < 1e-13, "z={z}: {y} vs {expected}");
        }
        let y = spreader_curve(&dist, &standard(), std::f64::consts::LN_2).unwrap();
        assert!((y - (1.0 - std::f64::consts::LN_2)).abs() < 1e-13);
        assert!((y - 0.306_853).abs() < 1e-6);
    }

    #[test]
    fn spreader_curve_vanishes_at_zero_for_standard_start() {
        for dist in [
            AwarenessDistribution::poisson(2.0).unwrap(),
            AwarenessDistribution::uniform(2).unwrap(),
            wave_example_a(),
        ] {
            assert_eq!(spreader_curve(&dist, &standard(), 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn absorption_point_of_the_classical_chain() {
        // Independent oracle: bisection on the scalar form ζ = 2(1 − e^{−ζ}).
        let mut lo = 1.0f64;
        let mut hi = 2.0f64;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * (1.0 - (-mid).exp()) - mid > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let dist = AwarenessDistribution::dirac(1).unwrap();
        let got = solve_zeta_infinity(&dist, &standard()).unwrap();
        assert!((got - oracle).abs() < 1e-10, "got {got}, oracle {oracle}");
        assert!((got - 1.593_624).abs() < 1e-6);
    }

    #[test]
    fn absorption_certificate_brackets_the_root() {
        // Transversal crossing at ζ∞ for every tabulated family plus the
        // two-wave example.
        let mut laws = vec![wave_example_a()];
        for row in crate::reference::all_rows() {
            laws.push(row.distribution().unwrap());
        }
        for dist in laws {
            let z = solve_zeta_infinity(&dist, &standard()).unwrap();
            let before = spreader_curve(&dist, &standard(), z - 1e-6).unwrap();
            let after = spreader_curve(&dist, &standard(), z + 1e-6).unwrap();
            assert!(before > 0.0 && after < 0.0, "{dist:?} z={z}: {before} / {after}");
        }
    }

    #[test]
    fn poisson_two_absorption_matches_reference() {
        let dist = AwarenessDistribution::poisson(2.0).unwrap();
        let z = solve_zeta_infinity(&dist, &standard()).unwrap();
        assert!((z - (-0.238_539f64.ln())).abs() < 1e-4, "z={z}");
    }

    #[test]
    fn uniform_two_absorption_matches_reference() {
        let dist = AwarenessDistribution::uniform(2).unwrap();
        let z = solve_zeta_infinity(&dist, &standard()).unwrap();
        assert!((z - (-0.343_812_6f64.ln())).abs() < 2e-4, "z={z}");
    }

    #[test]
    fn degenerate_start_without_push_through_is_no_outbreak() {
        // p₁ = 0, heavy anti-gossip: y'(0) = 0 and y''(0) = −0.85 < 0.
        let dist = AwarenessDistribution::custom(vec![0.9, 0.0, 0.05, 0.05]).unwrap();
        assert!(matches!(solve_zeta_infinity(&dist, &standard()), Err(LimitsError::NoOutbreak)));
    }

    #[test]
    fn degenerate_start_with_push_through_is_an_outbreak() {
        // dirac(2): y'(0) = 0 but y''(0) = 1 > 0; root from the k-MT table.
        let dist = AwarenessDistribution::dirac(2).unwrap();
        let z = solve_zeta_infinity(&dist, &standard()).unwrap();
        // Root of ζ = 3 − e^{−ζ}(3 + 2ζ).
        assert!((3.0 - (-z).exp() * (3.0 + 2.0 * z) - z).abs() < 1e-10, "z={z}");
        assert!((z - 2.149).abs() < 1e-3);
    }

    #[test]
    fn classical_peak_is_at_log_two() {
        let dist = AwarenessDistribution::dirac(1).unwrap();
        let cps = critical_points(&dist, &standard()).unwrap();
        assert_eq!(cps.len(), 1);
        assert_eq!(cps[0].kind, CriticalKind::Maximum);
        assert!((cps[0].zeta - std::f64::consts::LN_2).abs() < 1e-10);
        let p = peak(&dist, &standard()).unwrap();
        assert!((p.y_max - (1.0 - std::f64::consts::LN_2)).abs() < 1e-10);
        assert_eq!(wave_count(&dist, &standard()).unwrap(), 1);
    }

    #[test]
    fn point_masses_have_a_single_wave() {
        for k in 1..=8u32 {
            let dist = AwarenessDistribution::dirac(k).unwrap();
            assert_eq!(wave_count(&dist, &standard()).unwrap(), 1, "k={k}");
        }
    }

    #[test]
    fn first_two_wave_example_prefers_the_second_wave() {
        let dist = wave_example_a();
        let p = peak(&dist, &standard()).unwrap();
        assert_eq!(p.waves.len(), 2, "waves: {:?}", p.waves);
        assert!(p.waves[1].height > p.waves[0].height);
        assert!((p.zeta_max - p.waves[1].zeta).abs() < 1e-12);
    }

    #[test]
    fn second_two_wave_example_prefers_the_first_wave() {
        let dist = wave_example_b();
        let p = peak(&dist, &standard()).unwrap();
        assert_eq!(p.waves.len(), 2, "waves: {:?}", p.waves);
        assert!(p.waves[0].height > p.waves[1].height);
        assert!((p.zeta_max - p.waves[0].zeta).abs() < 1e-12);
    }

    #[test]
    fn uniqueness_certificates() {
        for k in 1..=6u32 {
            assert_eq!(
                uniqueness_condition(&AwarenessDistribution::dirac(k).unwrap()),
                Uniqueness::CertifiedUnique,
                "dirac({k})"
            );
        }
        assert_eq!(uniqueness_condition(&wave_example_a()), Uniqueness::NotCertified);
        assert_eq!(uniqueness_condition(&wave_example_b()), Uniqueness::NotCertified);
        assert_eq!(
            uniqueness_condition(&AwarenessDistribution::uniform(2).unwrap()),
            Uniqueness::CertifiedUnique
        );
        assert_eq!(
            uniqueness_condition(&AwarenessDistribution::zeta(5.0).unwrap()),
            Uniqueness::CertifiedUnique
        );
        assert_eq!(
            uniqueness_condition(&AwarenessDistribution::zeta(1.01).unwrap()),
            Uniqueness::CertifiedUnique
        );
    }

    #[test]
    fn certified_unique_laws_have_one_maximum() {
        for dist in [
            AwarenessDistribution::dirac(2).unwrap(),
            AwarenessDistribution::uniform(2).unwrap(),
            AwarenessDistribution::uniform(3).unwrap(),
            AwarenessDistribution::zeta(5.0).unwrap(),
        ] {
            if uniqueness_condition(&dist) == Uniqueness::CertifiedUnique {
                let cps = critical_points(&dist, &standard()).unwrap();
                let maxima = cps.iter().filter(|c| c.kind == CriticalKind::Maximum).count();
                assert_eq!(maxima, 1);
            }
        }
    }

    #[test]
    fn poisson_peak_matches_reference() {
        let dist = AwarenessDistribution::poisson(2.0).unwrap();
        let p = peak(&dist, &standard()).unwrap();
        assert!((p.y_max - 0.093_006).abs() < 1e-4, "y_max {}", p.y_max);
    }

    #[test]
    fn peak_routes_agree_tightly() {
        for dist in [
            AwarenessDistribution::dirac(1).unwrap(),
            AwarenessDistribution::poisson(2.0).unwrap(),
            AwarenessDistribution::uniform(3).unwrap(),
            wave_example_a(),
            wave_example_b(),
        ] {
            let standard = standard();
            let mut ctx = CurveCtx::new(&dist, &standard);
            let zeta_inf = solve_root(&mut ctx).unwrap();
            let cps = scan_critical_points(&mut ctx, zeta_inf);
            for cp in cps.iter().filter(|c| c.kind == CriticalKind::Maximum) {
                let series = ctx.y(cp.zeta);
                let quadrature = ctx.y_quadrature(cp.zeta);
                assert!(
                    (series - quadrature).abs() < 1e-10,
                    "zeta={}: series {series} vs quadrature {quadrature}",
                    cp.zeta
                );
            }
        }
    }

    #[test]
    fn integral_curves_reach_the_tail_limit() {
        // lim_{ζ→∞} I_ℓ(ζ) = T_ℓ for the standard configuration (with the
        // ℓ = 1 coefficient read as 1), checked at ζ = 200.
        for dist in [
            AwarenessDistribution::poisson(2.0).unwrap(),
            AwarenessDistribution::zeta(5.0).unwrap(),
            AwarenessDistribution::uniform(3).unwrap(),
        ] {
            for ell in 1..=10u32 {
                let i = listener_integral(&dist, &standard(), ell, 200.0).unwrap();
                let t = if ell == 1 { 1.0 } else { dist.tail(ell) };
                assert!((i - t).abs() < 1e-10, "ell={ell}: {i} vs {t}");
            }
        }
    }

    #[test]
    fn argmax_on_a_grid_agrees_with_the_solver() {
        let dist = wave_example_a();
        let standard = standard();
        let p = peak(&dist, &standard).unwrap();
        let zeta_inf = solve_zeta_infinity(&dist, &standard).unwrap();
        let mut best = (0.0, f64::MIN);
        let grid = 10_000;
        let mut ctx = CurveCtx::new(&dist, &standard);
        for i in 1..grid {
            let z = zeta_inf * i as f64 / grid as f64;
            let y = ctx.y(z);
            if y > best.1 {
                best = (z, y);
            }
        }
        assert!((best.0 - p.zeta_max).abs() <= zeta_inf / grid as f64 + 1e-12);
    }

    #[test]
    fn finals_sum_below_one_with_nonnegative_residue() {
        for dist in [
            AwarenessDistribution::poisson(2.0).unwrap(),
            AwarenessDistribution::zeta(1.01).unwrap(),
            wave_example_b(),
        ] {
            let finals = final_proportions(&dist, &standard(), 400).unwrap();
            let total: f64 = finals.iter().sum();
            assert!(finals.iter().all(|&v| v >= 0.0));
            assert!(total <= 1.0 + 1e-12, "total {total}");
        }
    }

    #[test]
    fn summary_carries_consistent_fields() {
        let dist = wave_example_a();
        let s = summarize(&dist, &standard(), 3).unwrap();
        assert_eq!(s.finals.len(), 3);
        assert_eq!(s.wave_count, 2);
        assert!(!s.uniqueness_certified);
        assert!(s.zeta_max < s.zeta_inf);
        let y_at_inf = spreader_curve(&dist, &standard(), s.zeta_inf).unwrap();
        assert!(y_at_inf.abs() < 1e-10);
        // y stays positive strictly inside (0, ζ∞).
        for i in 1..200 {
            let z = s.zeta_inf * i as f64 / 200.0;
            if z < s.zeta_inf - 1e-9 {
                assert!(spreader_curve(&dist, &standard(), z).unwrap() > 0.0, "z={z}");
            }
        }
    }

    #[test]
    fn general_initial_conditions_shift_the_constant() {
        // y(0) = y₀, and listener curves scale by their initial mass.
        let dist = AwarenessDistribution::dirac(1).unwrap();
        let ic = LimitInitialCondition::new(0.25, vec![0.75]).unwrap();
        let y = spreader_curve(&dist, &ic, 0.0).unwrap();
        assert_eq!(y, 0.25);
        let x1 = listener_curve(&dist, &ic, 1, 1.0).unwrap();
        assert!((x1 - 0.75 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn decaying_start_counts_a_boundary_wave() {
        // All spreaders, no listeners: y(ζ) = y₀ − ζ decays from the start.
        let dist = AwarenessDistribution::dirac(1).unwrap();
        let ic = LimitInitialCondition::new(0.5, vec![]).unwrap();
        let p = peak(&dist, &ic).unwrap();
        assert_eq!(p.waves.len(), 0);
        assert_eq!(p.zeta_max, 0.0);
        assert_eq!(p.y_max, 0.5);
        assert_eq!(wave_count(&dist, &ic).unwrap(), 1);
    }

    #[test]
    fn slope_vanishes_at_critical_points() {
        let dist = AwarenessDistribution::dirac(1).unwrap();
        // y' = 2e^{−ζ} − 1 crosses zero at ln 2.
        let at_peak = spreader_slope(&dist, &standard(), std::f64::consts::LN_2).unwrap();
        assert!(at_peak.abs() < 1e-14, "slope {at_peak}");
        assert!(spreader_slope(&dist, &standard(), 0.2).unwrap() > 0.0);
        assert!(spreader_slope(&dist, &standard(), 1.2).unwrap() < 0.0);
    }

    #[test]
    fn rejects_bad_initial_conditions_and_arguments() {
        assert!(LimitInitialCondition::new(-0.1, vec![0.5]).is_err());
        assert!(LimitInitialCondition::new(0.5, vec![0.7]).is_err());
        assert!(LimitInitialCondition::new(0.0, vec![f64::NAN]).is_err());
        let dist = AwarenessDistribution::dirac(1).unwrap();
        assert!(listener_curve(&dist, &standard(), 0, 1.0).is_err());
        assert!(listener_curve(&dist, &standard(), 1, -1.0).is_err());
        assert!(spreader_curve(&dist, &standard(), f64::NAN).is_err());
    }
}
