//! `rumorwave converge`: uniform distance between scaled accelerated sample
//! paths and the limit curves, across growing populations.
//!
//! CSV header: `n,seed,sup_distance,final_gap`; the summary carries per-n
//! medians of both columns.

use std::path::Path;
use std::sync::Arc;

use rumorwave::ddpm::{sup_distance, LimitTrajectory, StateVec};
use rumorwave::limits;
use rumorwave::mtra::{run_outbreak, InitialCondition};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{median, sig7, CsvFile, Summary};
use crate::{commands::Ctx, CliError};

/// Listener coordinates carried in the comparison curves; mass past this
/// level is below every tolerance in play for the bundled families.
const CURVE_COORDS: u32 = 64;

/// The comparison stops this far short of the absorption point, where the
/// limit slope is singular in scale.
const END_MARGIN: f64 = 0.05;

pub fn run(ctx: &Ctx, config_path: &Path) -> Result<(), CliError> {
    let config = ExperimentConfig::load(config_path)?;
    let spec = config.distribution()?;
    let dist = Arc::new(spec.build()?);
    let ic = config.initial()?;

    let mut populations = config
        .populations
        .clone()
        .ok_or_else(|| CliError::Config("converge needs a 'populations' entry".into()))?;
    populations.sort_unstable();
    if populations.is_empty() || populations[0] < 2 {
        return Err(CliError::Config("populations must all be at least 2".into()));
    }
    let seeds = config
        .seeds
        .as_ref()
        .ok_or_else(|| CliError::Config("converge needs a 'seeds' entry".into()))?
        .resolve(ctx.seed_base);
    if seeds.is_empty() {
        return Err(CliError::Config("seed list is empty".into()));
    }

    let zeta_inf = limits::solve_zeta_infinity(&dist, &ic)?;
    let upto = (zeta_inf - END_MARGIN).max(0.0);
    let x1_inf = limits::final_proportions(&dist, &ic, 1)?[0];
    let traj = limit_trajectory(&dist, &ic, zeta_inf, 1e-3)?;

    let mut csv =
        CsvFile::new(&ctx.out, "converge.csv", &["n", "seed", "sup_distance", "final_gap"]);
    let mut per_n = Vec::new();
    for &n in &populations {
        let mut distances = Vec::new();
        let mut gaps = Vec::new();
        for &seed in &seeds {
            let run = run_outbreak(Arc::clone(&dist), n, InitialCondition::Standard, seed)?;
            let accelerated = run.accelerated_path();
            let run_upto = upto.min(run.zeta_end());
            let d = sup_distance(&accelerated, &traj, run_upto);
            let gap = (run.final_state.listener(1) as f64 / n as f64 - x1_inf).abs();
            csv.row(vec![n.to_string(), seed.to_string(), sig7(d), sig7(gap)]);
            distances.push(d);
            gaps.push(gap);
        }
        per_n.push(json!({
            "n": n,
            "median_sup_distance": median(&mut distances),
            "median_final_gap": median(&mut gaps),
        }));
    }
    csv.write()?;

    let mut out = Summary::new("converge", ctx.deterministic);
    out.set("dist", spec.kind_label());
    out.set("params", spec.params_label());
    out.set("zeta_inf", zeta_inf);
    out.set("x1_inf", x1_inf);
    out.set("compared_up_to", upto);
    out.set("seeds_per_population", seeds.len());
    out.set("medians", per_n);
    out.write(&ctx.out, "converge_summary.json")?;
    Ok(())
}

/// Closed-form curves sampled on a uniform grid as a trajectory object.
pub fn limit_trajectory(
    dist: &rumorwave::awareness::AwarenessDistribution,
    ic: &limits::LimitInitialCondition,
    horizon: f64,
    step: f64,
) -> Result<LimitTrajectory, CliError> {
    let n_steps = (horizon / step).ceil() as usize;
    let zetas: Vec<f64> = (0..=n_steps).map(|i| i as f64 * step).collect();
    let points = limits::curve_grid(dist, ic, &zetas, CURVE_COORDS)?;
    let states = points
        .iter()
        .map(|p| {
            let mut coords = Vec::with_capacity(p.listeners.len() + 1);
            coords.push(p.y);
            coords.extend_from_slice(&p.listeners);
            StateVec::from_coords(coords)
        })
        .collect();
    Ok(LimitTrajectory::from_grid(zetas, states))
}
