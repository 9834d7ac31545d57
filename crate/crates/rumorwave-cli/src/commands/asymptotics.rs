//! `rumorwave asymptotics`: one row of the asymptotic analysis.
//!
//! CSV header: `dist,params,zeta_inf,x1_inf,x2_inf,x3_inf,y_max,zeta_max,wave_count`.

use std::path::Path;

use rumorwave::limits;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{sig7, CsvFile, Summary};
use crate::{commands::Ctx, CliError};

pub fn run(ctx: &Ctx, config_path: &Path) -> Result<(), CliError> {
    let config = ExperimentConfig::load(config_path)?;
    let spec = config.distribution()?;
    let dist = spec.build()?;
    let ic = config.initial()?;

    let summary = limits::summarize(&dist, &ic, config.report_listeners().max(3))?;

    let mut csv = CsvFile::new(
        &ctx.out,
        "asymptotics.csv",
        &[
            "dist",
            "params",
            "zeta_inf",
            "x1_inf",
            "x2_inf",
            "x3_inf",
            "y_max",
            "zeta_max",
            "wave_count",
        ],
    );
    csv.row(vec![
        spec.kind_label().to_string(),
        spec.params_label(),
        sig7(summary.zeta_inf),
        sig7(summary.finals[0]),
        sig7(summary.finals[1]),
        sig7(summary.finals[2]),
        sig7(summary.y_max),
        sig7(summary.zeta_max),
        summary.wave_count.to_string(),
    ]);
    csv.write()?;

    let mut out = Summary::new("asymptotics", ctx.deterministic);
    out.set("dist", spec.kind_label());
    out.set("params", spec.params_label());
    out.set("zeta_inf", summary.zeta_inf);
    out.set("finals", summary.finals.clone());
    out.set("y_max", summary.y_max);
    out.set("zeta_max", summary.zeta_max);
    out.set("wave_count", summary.wave_count);
    out.set("uniqueness_certified", summary.uniqueness_certified);
    out.set(
        "waves",
        summary
            .waves
            .iter()
            .map(|w| json!({"zeta": w.zeta, "height": w.height}))
            .collect::<Vec<_>>(),
    );
    out.set(
        "critical_points",
        summary
            .critical_points
            .iter()
            .map(|c| json!({"zeta": c.zeta, "kind": format!("{:?}", c.kind).to_lowercase()}))
            .collect::<Vec<_>>(),
    );
    out.write(&ctx.out, "asymptotics_summary.json")?;
    Ok(())
}
