//! `rumorwave trajectory`: the closed-form curves on a ζ-grid, optionally
//! cross-checked against the integrated limit system.
//!
//! CSV header: `zeta,y,x1,…,xL` (L from `report_listeners`, default 3); with
//! `--check-integrator`, `y_ode,x1_ode,…,xL_ode` columns are appended and
//! the summary carries the largest absolute deviation.

use std::path::Path;
use std::sync::Arc;

use rumorwave::ddpm::{integrate_limit, StateVec, DEFAULT_STEP};
use rumorwave::limits;
use rumorwave::mtra::{mtra_transitions, Clock};

use crate::config::ExperimentConfig;
use crate::output::{sig7, CsvFile, Summary};
use crate::{commands::Ctx, CliError};

pub fn run(ctx: &Ctx, config_path: &Path) -> Result<(), CliError> {
    let config = ExperimentConfig::load(config_path)?;
    let spec = config.distribution()?;
    let dist = spec.build()?;
    let ic = config.initial()?;
    let cutoff = config.report_listeners();
    let grid_spec = config
        .grid
        .as_ref()
        .ok_or_else(|| CliError::Config("trajectory needs a 'grid' entry".into()))?;

    // Default horizon: the absorption point.
    let stop_default = match grid_spec.stop {
        Some(_) => 0.0, // unused
        None => limits::solve_zeta_infinity(&dist, &ic)?,
    };
    let zetas = grid_spec.points(stop_default)?;
    let points = limits::curve_grid(&dist, &ic, &zetas, cutoff)?;

    let mut header: Vec<String> = vec!["zeta".into(), "y".into()];
    for ell in 1..=cutoff {
        header.push(format!("x{ell}"));
    }
    if ctx.check_integrator {
        header.push("y_ode".into());
        for ell in 1..=cutoff {
            header.push(format!("x{ell}_ode"));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvFile::new(&ctx.out, "trajectory.csv", &header_refs);

    let mut max_deviation: f64 = 0.0;
    let integrated = if ctx.check_integrator && !zetas.is_empty() {
        let dist = Arc::new(spec.build()?);
        let chain = mtra_transitions(Arc::clone(&dist), Clock::Accelerated);
        let mut x0 = StateVec::zero();
        x0.set(0, ic.y0());
        for k in 1..=ic.max_level() {
            x0.set(k, ic.listener(k));
        }
        let horizon = zetas.last().copied().unwrap_or(0.0);
        let traj = integrate_limit(&chain, &x0, horizon, DEFAULT_STEP)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Some(traj)
    } else {
        None
    };

    for point in &points {
        let mut row = vec![sig7(point.zeta), sig7(point.y)];
        row.extend(point.listeners.iter().map(|&x| sig7(x)));
        if let Some(traj) = &integrated {
            let state = traj.interpolate(point.zeta);
            max_deviation = max_deviation.max((state.coord(0) - point.y).abs());
            row.push(sig7(state.coord(0)));
            for (ell, &x) in point.listeners.iter().enumerate() {
                let ode = state.coord(ell as u32 + 1);
                max_deviation = max_deviation.max((ode - x).abs());
                row.push(sig7(ode));
            }
        }
        csv.row(row);
    }
    csv.write()?;

    let mut out = Summary::new("trajectory", ctx.deterministic);
    out.set("dist", spec.kind_label());
    out.set("params", spec.params_label());
    out.set("points", points.len());
    out.set("listener_columns", cutoff);
    if integrated.is_some() {
        out.set("max_abs_deviation", max_deviation);
    }
    out.write(&ctx.out, "trajectory_summary.json")?;
    Ok(())
}
