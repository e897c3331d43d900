//! JSON input documents and their conversion to the core types.
//!
//! Matrices are row-major nested arrays.

use admm_spectra::{AlphaBox, PiecewiseLinear1D, SeparableFunction, SlopeRange, SplitProblem};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::app::CliError;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    #[serde(rename = "A1")]
    pub a1: Rows,
    #[serde(rename = "A2")]
    pub a2: Rows,
    pub b: Vec<f64>,
    #[serde(rename = "E")]
    pub e: Rows,
    pub f1: FunctionDoc,
    pub f2: FunctionDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum FunctionDoc {
    /// `½xᵀQx − cᵀx`.
    Quadratic {
        #[serde(rename = "Q")]
        q: Rows,
        c: Vec<f64>,
    },
    WeightedL1 {
        weights: Vec<f64>,
    },
    #[serde(rename = "PiecewiseLinear1DArray")]
    PiecewiseLinear {
        pieces: Vec<PieceDoc>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceDoc {
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
}

pub fn matrix_from_rows(rows: &Rows, what: &str) -> Result<DMatrix<f64>, CliError> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(CliError::Validation(format!(
            "{what}: row {bad} has {} entries, expected {ncols}",
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

pub fn rows_from_matrix(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl FunctionDoc {
    pub fn to_function(&self, what: &str) -> Result<SeparableFunction, CliError> {
        Ok(match self {
            FunctionDoc::Quadratic { q, c } => SeparableFunction::Quadratic {
                q: matrix_from_rows(q, &format!("{what}.Q"))?,
                c: DVector::from_column_slice(c),
            },
            FunctionDoc::WeightedL1 { weights } => {
                SeparableFunction::WeightedL1 { weights: DVector::from_column_slice(weights) }
            }
            FunctionDoc::PiecewiseLinear { pieces } => SeparableFunction::PiecewiseLinear {
                pieces: pieces
                    .iter()
                    .enumerate()
                    .map(|(j, p)| {
                        PiecewiseLinear1D::new(p.breakpoints.clone(), p.slopes.clone())
                            .map_err(|e| CliError::Validation(format!("{what}.pieces[{j}]: {e}")))
                    })
                    .collect::<Result<_, _>>()?,
            },
        })
    }

    pub fn from_function(f: &SeparableFunction) -> Self {
        match f {
            SeparableFunction::Quadratic { q, c } => {
                FunctionDoc::Quadratic { q: rows_from_matrix(q), c: c.iter().copied().collect() }
            }
            SeparableFunction::WeightedL1 { weights } => {
                FunctionDoc::WeightedL1 { weights: weights.iter().copied().collect() }
            }
            SeparableFunction::PiecewiseLinear { pieces } => FunctionDoc::PiecewiseLinear {
                pieces: pieces
                    .iter()
                    .map(|p| PieceDoc { breakpoints: p.breakpoints().to_vec(), slopes: p.slopes().to_vec() })
                    .collect(),
            },
        }
    }
}

impl ProblemDoc {
    /// Builds the problem and runs the full precondition check.
    pub fn to_problem(&self) -> Result<SplitProblem, CliError> {
        let p = SplitProblem {
            f1: self.f1.to_function("f1")?,
            f2: self.f2.to_function("f2")?,
            a1: matrix_from_rows(&self.a1, "A1")?,
            a2: matrix_from_rows(&self.a2, "A2")?,
            b: DVector::from_column_slice(&self.b),
            e: matrix_from_rows(&self.e, "E")?,
        };
        let report = p.validate();
        if !report.is_valid() {
            return Err(CliError::Validation(report.to_string()));
        }
        Ok(p)
    }

    pub fn from_problem(p: &SplitProblem) -> Self {
        Self {
            a1: rows_from_matrix(&p.a1),
            a2: rows_from_matrix(&p.a2),
            b: p.b.iter().copied().collect(),
            e: rows_from_matrix(&p.e),
            f1: FunctionDoc::from_function(&p.f1),
            f2: FunctionDoc::from_function(&p.f2),
        }
    }
}

/// `α ∈ [−n_max, −n_min] ∪ [p_min, p_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeDoc {
    pub n_max: f64,
    pub n_min: f64,
    pub p_min: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDoc {
    pub first: RangeDoc,
    pub second: RangeDoc,
}

impl RangeDoc {
    fn to_range(self, what: &str) -> Result<SlopeRange, CliError> {
        SlopeRange::new(self.n_max, self.n_min, self.p_min, self.p_max)
            .map_err(|e| CliError::Validation(format!("{what}: {e}")))
    }
}

impl From<&SlopeRange> for RangeDoc {
    fn from(r: &SlopeRange) -> Self {
        Self { n_max: r.n_max, n_min: r.n_min, p_min: r.p_min, p_max: r.p_max }
    }
}

impl BoxDoc {
    pub fn to_box(self) -> Result<AlphaBox, CliError> {
        Ok(AlphaBox { first: self.first.to_range("first")?, second: self.second.to_range("second")? })
    }
}

impl From<&AlphaBox> for BoxDoc {
    fn from(b: &AlphaBox) -> Self {
        Self { first: (&b.first).into(), second: (&b.second).into() }
    }
}
