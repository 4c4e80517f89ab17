//! Observation rows and their dummy-coded design matrix.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::glmm::{Factor, GlmmData};
use super::StatsError;
use crate::features::Position;
use crate::spp::PerturbationType;

/// One scored variant: did the model reproduce the reference exactly, and
/// what did the perturbation look like.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRow {
    pub instance_id: String,
    pub model: String,
    pub ptype: PerturbationType,
    /// 1 when the best sample was an exact match.
    pub exm: u8,
    pub pos: Position,
    pub distance: f64,
    pub tok_edit_in: f64,
    pub tok_edit_task: f64,
    pub input_length: f64,
}

pub const INTERCEPT: &str = "(Intercept)";

/// Continuous predictors in design order.
pub const CONTINUOUS: [&str; 4] = [
    "Perturbation Distance",
    "TokenEdit(c, c^(k))",
    "TokenEdit(c^(k), c_hat^(k))",
    "Length(c^(k))",
];

pub fn pos_column(p: Position) -> String {
    format!("POS ({})", p.label())
}

/// Design matrix plus the raw continuous columns (before scaling), which
/// the collinearity diagnostics use.
#[derive(Debug, Clone)]
pub struct Design {
    pub data: GlmmData,
    pub reference: Position,
    pub continuous: Vec<(String, Vec<f64>)>,
}

fn standardized(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd == 0.0 || !sd.is_finite() {
        return v.iter().map(|x| x - mean).collect();
    }
    v.iter().map(|x| (x - mean) / sd).collect()
}

fn factor(name: &str, values: Vec<String>) -> Factor {
    let levels: Vec<String> = values.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let index = values
        .iter()
        .map(|v| levels.binary_search(v).expect("level"))
        .collect();
    Factor {
        name: name.to_string(),
        levels,
        index,
    }
}

/// Dummy-code POS against `Before` (or the first observed category when no
/// row is `Before`), optionally z-score the continuous predictors, and
/// attach perturbation-type and model grouping factors.
pub fn design_from_rows(rows: &[ObservationRow], standardize: bool) -> Result<Design, StatsError> {
    if rows.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if rows.iter().any(|r| r.exm > 1) {
        return Err(StatsError::InvalidOutcome);
    }
    let n = rows.len();
    let raw: Vec<Vec<f64>> = vec![
        rows.iter().map(|r| r.distance).collect(),
        rows.iter().map(|r| r.tok_edit_in).collect(),
        rows.iter().map(|r| r.tok_edit_task).collect(),
        rows.iter().map(|r| r.input_length).collect(),
    ];
    let present: BTreeSet<Position> = rows.iter().map(|r| r.pos).collect();
    let reference = if present.contains(&Position::Before) {
        Position::Before
    } else {
        Position::ALL.into_iter().find(|p| present.contains(p)).expect("non-empty")
    };
    let dummies: Vec<Position> = Position::ALL
        .into_iter()
        .filter(|p| *p != reference && present.contains(p))
        .collect();

    let mut names = vec![INTERCEPT.to_string()];
    names.extend(CONTINUOUS.iter().map(|s| s.to_string()));
    names.extend(dummies.iter().map(|&p| pos_column(p)));
    let mut x = DMatrix::zeros(n, names.len());
    let cols: Vec<Vec<f64>> = if standardize {
        raw.iter().map(|c| standardized(c)).collect()
    } else {
        raw.clone()
    };
    for i in 0..n {
        x[(i, 0)] = 1.0;
        for (j, c) in cols.iter().enumerate() {
            x[(i, 1 + j)] = c[i];
        }
        if let Some(d) = dummies.iter().position(|&p| p == rows[i].pos) {
            x[(i, 1 + cols.len() + d)] = 1.0;
        }
    }
    let data = GlmmData {
        y: rows.iter().map(|r| f64::from(r.exm)).collect(),
        x,
        names,
        factors: vec![
            factor("PerturbationType", rows.iter().map(|r| r.ptype.id().to_string()).collect()),
            factor("LM", rows.iter().map(|r| r.model.clone()).collect()),
        ],
    };
    Ok(Design {
        data,
        reference,
        continuous: CONTINUOUS.iter().map(|s| s.to_string()).zip(raw).collect(),
    })
}
