//! Published reference values for the bundled awareness families, used as
//! the regression gate: the `tables` command and the acceptance suite both
//! recompute every cell and compare against these.

use crate::awareness::{AwarenessDistribution, DistributionError};
use crate::limits::{self, LimitInitialCondition, LimitsError};

/// Default absolute tolerance for a reference cell.
pub const CELL_TOLERANCE: f64 = 1e-4;

/// Looser tolerance for the heavy-tail regime (zeta with `s` close to 1).
pub const HEAVY_TAIL_TOLERANCE: f64 = 1e-3;

/// Classical single-hearing anchors: final ignorant proportion and peak
/// spreader proportion.
pub const CLASSICAL_X1_INF: f64 = 0.203_187;
pub const CLASSICAL_X1_INF_TOLERANCE: f64 = 5e-6;
pub const CLASSICAL_Y_MAX: f64 = 0.306_853;
pub const CLASSICAL_Y_MAX_TOLERANCE: f64 = 5e-5;

/// Two-wave example where the second wave is the higher one.
pub const TWO_WAVE_SECOND_HIGHER: [f64; 5] = [0.053, 0.004, 0.023, 0.163, 0.757];

/// Two-wave example where the first wave is the higher one.
pub const TWO_WAVE_FIRST_HIGHER: [f64; 7] = [0.009, 0.014, 0.002, 0.038, 0.004, 0.167, 0.766];

/// Sweep anchors: where the peak proportion tops out over the Poisson mean,
/// and the large-parameter limits of the zeta and uniform families.
pub const POISSON_ARGMAX_WINDOW: (f64, f64) = (1.57, 1.77);
pub const ZETA_LARGE_S_Y_MAX: f64 = 0.3068;
pub const UNIFORM_LARGE_K_X1_INF: f64 = 0.3085;
pub const SWEEP_ANCHOR_TOLERANCE: f64 = 5e-3;

/// One reference row: the distribution parameter and the published
/// `(x_{1,∞}, x_{2,∞}, x_{3,∞}, y_max)`.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceRow {
    pub table: &'static str,
    pub param: f64,
    pub x1_inf: f64,
    pub x2_inf: f64,
    pub x3_inf: f64,
    pub y_max: f64,
    pub tolerance: f64,
}

pub const POISSON_ROWS: [ReferenceRow; 2] = [
    ReferenceRow {
        table: "poisson",
        param: 2.0,
        x1_inf: 0.238_539,
        x2_inf: 0.203_074,
        x3_inf: 0.079_212,
        y_max: 0.093_006,
        tolerance: CELL_TOLERANCE,
    },
    ReferenceRow {
        table: "poisson",
        param: 16.0,
        x1_inf: 0.005_974,
        x2_inf: 0.030_592,
        x3_inf: 0.078_317,
        y_max: 0.000_716,
        tolerance: CELL_TOLERANCE,
    },
];

pub const ZETA_ROWS: [ReferenceRow; 2] = [
    ReferenceRow {
        table: "zeta",
        param: 1.01,
        x1_inf: 0.169_622,
        x2_inf: 0.297_948,
        x3_inf: 0.262_989_3,
        y_max: 0.003_79,
        tolerance: HEAVY_TAIL_TOLERANCE,
    },
    ReferenceRow {
        table: "zeta",
        param: 5.0,
        x1_inf: 0.201_450_4,
        x2_inf: 0.011_494_5,
        x3_inf: 0.001_415_8,
        y_max: 0.2994,
        tolerance: CELL_TOLERANCE,
    },
];

/// k-spreading rows, i.e. point-mass awareness at k.
pub const KMT_ROWS: [ReferenceRow; 2] = [
    ReferenceRow {
        table: "kmt",
        param: 2.0,
        x1_inf: 0.116_586,
        x2_inf: 0.250_558,
        x3_inf: 0.0,
        y_max: 0.174_233,
        tolerance: CELL_TOLERANCE,
    },
    ReferenceRow {
        table: "kmt",
        param: 3.0,
        x1_inf: 0.068_016_9,
        x2_inf: 0.182_829,
        x3_inf: 0.245_723,
        y_max: 0.110_627,
        tolerance: CELL_TOLERANCE,
    },
];

pub const UNIFORM_ROWS: [ReferenceRow; 2] = [
    ReferenceRow {
        table: "uniform",
        param: 2.0,
        x1_inf: 0.343_812_6,
        x2_inf: 0.122_358_1,
        x3_inf: 0.0,
        y_max: 0.0848,
        tolerance: CELL_TOLERANCE,
    },
    ReferenceRow {
        table: "uniform",
        param: 3.0,
        x1_inf: 0.318_674_7,
        x2_inf: 0.182_215_7,
        x3_inf: 0.052_094_7,
        y_max: 0.067_350,
        tolerance: CELL_TOLERANCE,
    },
];

impl ReferenceRow {
    pub fn distribution(&self) -> Result<AwarenessDistribution, DistributionError> {
        match self.table {
            "poisson" => AwarenessDistribution::poisson(self.param),
            "zeta" => AwarenessDistribution::zeta(self.param),
            "kmt" => AwarenessDistribution::dirac(self.param as u32),
            "uniform" => AwarenessDistribution::uniform(self.param as u32),
            other => unreachable!("unknown reference table {other}"),
        }
    }

    pub fn expected(&self) -> [(&'static str, f64); 4] {
        [
            ("x1_inf", self.x1_inf),
            ("x2_inf", self.x2_inf),
            ("x3_inf", self.x3_inf),
            ("y_max", self.y_max),
        ]
    }
}

/// One recomputed cell compared against its published value.
#[derive(Debug, Clone)]
pub struct CellCheck {
    pub table: &'static str,
    pub param: f64,
    pub quantity: &'static str,
    pub computed: f64,
    pub reference: f64,
    pub tolerance: f64,
}

impl CellCheck {
    pub fn diff(&self) -> f64 {
        (self.computed - self.reference).abs()
    }

    pub fn pass(&self) -> bool {
        self.diff() <= self.tolerance
    }
}

pub fn all_rows() -> Vec<ReferenceRow> {
    let mut rows = Vec::new();
    rows.extend_from_slice(&POISSON_ROWS);
    rows.extend_from_slice(&ZETA_ROWS);
    rows.extend_from_slice(&KMT_ROWS);
    rows.extend_from_slice(&UNIFORM_ROWS);
    rows
}

/// Recompute one reference row under the standard configuration.
pub fn check_row(row: &ReferenceRow) -> Result<Vec<CellCheck>, LimitsError> {
    let dist = row
        .distribution()
        .map_err(|e| LimitsError::Domain(format!("reference distribution: {e}")))?;
    let ic = LimitInitialCondition::standard();
    let summary = limits::summarize(&dist, &ic, 3)?;
    let computed = [summary.finals[0], summary.finals[1], summary.finals[2], summary.y_max];
    Ok(row
        .expected()
        .iter()
        .zip(computed)
        .map(|(&(quantity, reference), computed)| CellCheck {
            table: row.table,
            param: row.param,
            quantity,
            computed,
            reference,
            tolerance: row.tolerance,
        })
        .collect())
}

/// Recompute every reference table cell.
pub fn check_reference_tables() -> Result<Vec<CellCheck>, LimitsError> {
    let mut cells = Vec::new();
    for row in all_rows() {
        cells.extend(check_row(&row)?);
    }
    Ok(cells)
}
