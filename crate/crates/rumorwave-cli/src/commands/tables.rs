//! `rumorwave tables`: recompute every published reference-table cell,
//! print computed vs reference vs diff, and exit 0 only if every cell is
//! within tolerance (3 otherwise).
//!
//! CSV header: `table,param,quantity,computed,reference,diff,pass`.

use std::path::Path;

use rumorwave::reference;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{sig7, CsvFile, Summary};
use crate::{commands::Ctx, CliError};

pub fn run(ctx: &Ctx, config_path: Option<&Path>) -> Result<(), CliError> {
    // Optional config may override the cell tolerances.
    let overrides = match config_path {
        Some(path) => ExperimentConfig::load(path)?.tolerances,
        None => None,
    };

    let mut cells = reference::check_reference_tables()?;
    if let Some(t) = &overrides {
        for cell in &mut cells {
            let heavy = cell.table == "zeta" && cell.param < 1.5;
            if heavy {
                if let Some(v) = t.heavy_tail {
                    cell.tolerance = v;
                }
            } else if let Some(v) = t.cell {
                cell.tolerance = v;
            }
        }
    }

    let mut csv = CsvFile::new(
        &ctx.out,
        "tables.csv",
        &["table", "param", "quantity", "computed", "reference", "diff", "pass"],
    );
    let mut failing = 0usize;
    for cell in &cells {
        let pass = cell.pass();
        if !pass {
            failing += 1;
        }
        println!(
            "{:<8} {:<6} {:<8} computed {:>12} reference {:>12} diff {:>10} {}",
            cell.table,
            cell.param,
            cell.quantity,
            sig7(cell.computed),
            sig7(cell.reference),
            format!("{:.2e}", cell.diff()),
            if pass { "PASS" } else { "FAIL" },
        );
        csv.row(vec![
            cell.table.to_string(),
            cell.param.to_string(),
            cell.quantity.to_string(),
            sig7(cell.computed),
            sig7(cell.reference),
            format!("{:.2e}", cell.diff()),
            pass.to_string(),
        ]);
    }
    csv.write()?;

    let mut out = Summary::new("tables", ctx.deterministic);
    out.set("cells", cells.len());
    out.set("failing", failing);
    out.set(
        "failures",
        cells
            .iter()
            .filter(|c| !c.pass())
            .map(|c| {
                json!({
                    "table": c.table,
                    "param": c.param,
                    "quantity": c.quantity,
                    "computed": c.computed,
                    "reference": c.reference,
                    "diff": c.diff(),
                })
            })
            .collect::<Vec<_>>(),
    );
    out.write(&ctx.out, "tables_summary.json")?;

    if failing > 0 {
        return Err(CliError::TableMismatch { failing });
    }
    println!("all {} reference cells within tolerance", cells.len());
    Ok(())
}
