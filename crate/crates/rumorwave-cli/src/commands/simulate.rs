//! `rumorwave simulate`: per-seed finite-population outbreaks.
//!
//! CSV header: `seed,tau_n,peak_y,tau_max_n,x1_final,…,xL_final,z_final`
//! (proportions of n); the summary carries per-column means and standard
//! errors.

use std::path::Path;
use std::sync::Arc;

use rumorwave::mtra::{run_outbreak, InitialCondition, RumorState};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{mean_and_se, sig7, CsvFile, Summary};
use crate::{commands::Ctx, CliError};

pub fn run(ctx: &Ctx, config_path: &Path) -> Result<(), CliError> {
    let config = ExperimentConfig::load(config_path)?;
    let spec = config.distribution()?;
    let dist = Arc::new(spec.build()?);
    let cutoff = config.report_listeners();

    let populations = config
        .populations
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate needs a 'populations' entry".into()))?;
    let &[n] = populations.as_slice() else {
        return Err(CliError::Config(
            "simulate takes exactly one population (its rows have no n column)".into(),
        ));
    };
    if n < 2 {
        return Err(CliError::Config(format!("population must be at least 2, got {n}")));
    }
    let seeds = config
        .seeds
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate needs a 'seeds' entry".into()))?
        .resolve(ctx.seed_base);
    if seeds.is_empty() {
        return Err(CliError::Config("seed list is empty".into()));
    }

    let initial = match &config.initial {
        None => InitialCondition::Standard,
        Some(crate::config::InitialSpec::Named(name)) if name == "standard" => {
            InitialCondition::Standard
        }
        Some(crate::config::InitialSpec::Named(other)) => {
            return Err(CliError::Config(format!("unknown initial condition '{other}'")))
        }
        Some(crate::config::InitialSpec::Explicit { y0, x0 }) => {
            // Proportions scaled to counts, remainder to the ignorant level.
            let nf = n as f64;
            let spreaders = (y0 * nf).round() as u64;
            let listeners: Vec<(u32, u64)> = x0
                .iter()
                .enumerate()
                .map(|(j, &v)| (j as u32 + 1, (v * nf).round() as u64))
                .collect();
            let state = RumorState::new(n, spreaders, &listeners)?;
            InitialCondition::Explicit(state)
        }
    };

    let mut header: Vec<String> =
        vec!["seed".into(), "tau_n".into(), "peak_y".into(), "tau_max_n".into()];
    for ell in 1..=cutoff {
        header.push(format!("x{ell}_final"));
    }
    header.push("z_final".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvFile::new(&ctx.out, "simulate.csv", &header_refs);

    let nf = n as f64;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); 3 + cutoff as usize + 1];
    for &seed in &seeds {
        let run = run_outbreak(Arc::clone(&dist), n, initial.clone(), seed)?;
        let mut numbers = vec![run.absorption_time, run.peak_spreaders as f64 / nf, run.peak_time];
        for ell in 1..=cutoff {
            numbers.push(run.final_state.listener(ell) as f64 / nf);
        }
        numbers.push(run.final_state.stiflers() as f64 / nf);

        let mut row = vec![seed.to_string()];
        row.extend(numbers.iter().map(|&v| sig7(v)));
        csv.row(row);
        for (col, &v) in columns.iter_mut().zip(numbers.iter()) {
            col.push(v);
        }
    }
    csv.write()?;

    let labels: Vec<String> = header[1..].to_vec();
    let mut out = Summary::new("simulate", ctx.deterministic);
    out.set("dist", spec.kind_label());
    out.set("params", spec.params_label());
    out.set("n", n);
    out.set("runs", seeds.len());
    let stats: Vec<_> = labels
        .iter()
        .zip(columns.iter())
        .map(|(label, col)| {
            let (mean, se) = mean_and_se(col);
            json!({"column": label, "mean": mean, "standard_error": se})
        })
        .collect();
    out.set("statistics", stats);
    out.write(&ctx.out, "simulate_summary.json")?;
    Ok(())
}
