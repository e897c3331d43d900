//! Serializable reports and their CSV tables.

use admm_spectra::lasso::RateReport;
use admm_spectra::locus::OptimalRelaxation;
use admm_spectra::staircase::{SegmentOrigin, StaircaseOperator};
use admm_spectra::{Locus, LocusParams, RunResult};
use nalgebra::{Complex, DVector};
use serde::Serialize;

use crate::format::BoxDoc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexDoc {
    pub re: f64,
    pub im: f64,
}

impl From<&Complex<f64>> for ComplexDoc {
    fn from(z: &Complex<f64>) -> Self {
        // normalise -0.0 so equal spectra print identically
        Self { re: z.re + 0.0, im: z.im + 0.0 }
    }
}

pub fn complex_list(eigs: &[Complex<f64>]) -> Vec<ComplexDoc> {
    eigs.iter().map(ComplexDoc::from).collect()
}

fn vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircleDoc {
    pub center: f64,
    pub inner: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocusDoc {
    pub real_intervals: Vec<[f64; 2]>,
    pub circle: CircleDoc,
    pub eigs: Vec<ComplexDoc>,
}

impl LocusDoc {
    pub fn new(locus: &Locus, eigs: &[Complex<f64>]) -> Self {
        Self {
            real_intervals: locus.real_intervals.iter().map(|&(lo, hi)| [lo + 0.0, hi + 0.0]).collect(),
            circle: CircleDoc { center: locus.center, inner: locus.inner_radius, outer: locus.outer_radius },
            eigs: complex_list(eigs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamsDoc {
    pub n_max: f64,
    pub p_max: f64,
    pub r_max: f64,
    pub n_min: f64,
    pub p_min: f64,
    pub r_min: f64,
    pub complex_band: [f64; 2],
}

impl From<&LocusParams> for ParamsDoc {
    fn from(p: &LocusParams) -> Self {
        Self {
            n_max: p.n_max,
            p_max: p.p_max,
            r_max: p.r_max,
            n_min: p.n_min,
            p_min: p.p_min,
            r_min: p.r_min,
            complex_band: [p.complex_from, p.complex_to],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxationDoc {
    pub q: f64,
    pub rho_max: f64,
    pub convergent: bool,
}

impl From<&OptimalRelaxation> for RelaxationDoc {
    fn from(o: &OptimalRelaxation) -> Self {
        Self { q: o.q, rho_max: o.rho_max, convergent: o.convergent }
    }
}

/// Output of `locus`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocusReport {
    pub alpha_box: BoxDoc,
    pub params: ParamsDoc,
    pub optimal: RelaxationDoc,
    #[serde(flatten)]
    pub locus: LocusDoc,
    /// Present when a relaxation was requested: the locus of `(1 − q) + qλ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iteration: Option<IterationLocusDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationLocusDoc {
    pub q: f64,
    pub rho_max: f64,
    #[serde(flatten)]
    pub locus: LocusDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordDoc {
    pub index: usize,
    pub state_delta: f64,
    pub constraint_residual: f64,
    pub objective: f64,
}

/// Output of `solve`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDoc {
    pub termination: &'static str,
    pub iterations: usize,
    pub final_state_delta: f64,
    pub final_residual: f64,
    pub objective: f64,
    pub z: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub history: Vec<RecordDoc>,
}

impl RunDoc {
    pub fn new(run: &RunResult, objective: f64) -> Self {
        Self {
            termination: run.termination.as_str(),
            iterations: run.iterations,
            final_state_delta: run.final_state_delta,
            final_residual: run.final_residual,
            objective,
            z: vec(&run.z),
            x1: vec(&run.x1),
            x2: vec(&run.x2),
            history: run
                .history
                .iter()
                .map(|r| RecordDoc {
                    index: r.index,
                    state_delta: r.state_delta,
                    constraint_residual: r.constraint_residual,
                    objective: r.objective,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionDoc {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub kernel_count: usize,
    pub mu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub staircases: Option<Vec<StaircaseDoc>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointDoc {
    pub value: f64,
    pub exact: bool,
}

/// Output of `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeReport {
    pub rows: usize,
    pub first: DirectionDoc,
    pub second: DirectionDoc,
    pub alpha_box: BoxDoc,
    pub params: ParamsDoc,
    pub optimal: RelaxationDoc,
    pub q: f64,
    pub rho_max: f64,
    pub mu_separable: f64,
    pub mu_joint: JointDoc,
    pub rho_joint: JointDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentDoc {
    /// `None` for the unbounded end of an outer segment.
    pub start: Option<f64>,
    pub end: Option<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub origin: &'static str,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaircaseDoc {
    pub segments: Vec<SegmentDoc>,
}

impl From<&StaircaseOperator> for StaircaseDoc {
    fn from(op: &StaircaseOperator) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        Self {
            segments: op
                .segments()
                .iter()
                .map(|s| {
                    let (origin, index) = match s.origin {
                        SegmentOrigin::Piece(j) => ("piece", j),
                        SegmentOrigin::Kink(k) => ("kink", k),
                    };
                    SegmentDoc {
                        start: finite(s.start),
                        end: finite(s.end),
                        slope: s.slope,
                        intercept: s.intercept,
                        origin,
                        index,
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LassoSetupDoc {
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub eps: f64,
    pub seed: u64,
    pub max_iters: usize,
}

/// Output of one `lasso-demo` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoReport {
    pub config: LassoSetupDoc,
    pub gram_min: f64,
    pub gram_max: f64,
    pub alpha_box: BoxDoc,
    pub params: ParamsDoc,
    pub optimal: RelaxationDoc,
    pub q: f64,
    pub rho_max: f64,
    pub mu: f64,
    pub mu_exact: bool,
    pub mu_separable: f64,
    pub termination: &'static str,
    pub iterations: usize,
    pub empirical_rate: Option<f64>,
    pub max_real_local_eig: Option<f64>,
    pub locus_ok: bool,
    pub rate_ok: bool,
    pub objective: f64,
    pub solution: Vec<f64>,
    pub local_eigs: Vec<ComplexDoc>,
    pub local_iteration_eigs: Vec<ComplexDoc>,
    pub state_deltas: Vec<f64>,
}

impl LassoReport {
    pub fn new(config: LassoSetupDoc, r: &RateReport) -> Self {
        Self {
            config,
            gram_min: r.bounds.lambda_min,
            gram_max: r.bounds.lambda_max,
            alpha_box: (&r.bounds.alpha_box).into(),
            params: (&r.bounds.params).into(),
            optimal: (&r.optimal).into(),
            q: r.q,
            rho_max: r.rho_max,
            mu: r.mu,
            mu_exact: r.mu_exact,
            mu_separable: r.mu_separable,
            termination: r.termination.as_str(),
            iterations: r.iterations,
            empirical_rate: r.empirical_rate,
            max_real_local_eig: r.max_real_local_eig,
            locus_ok: r.locus_ok,
            rate_ok: r.rate_ok,
            objective: r.objective,
            solution: vec(&r.solution),
            local_eigs: complex_list(&r.local_eigs),
            local_iteration_eigs: complex_list(&r.local_iteration_eigs),
            state_deltas: r.state_deltas.clone(),
        }
    }
}

/// Flat view of a report for `--format csv`.
pub trait Table {
    fn header(&self) -> Vec<&'static str>;
    fn records(&self) -> Vec<Vec<String>>;
}

fn num(x: f64) -> String {
    x.to_string()
}

impl Table for RunDoc {
    fn header(&self) -> Vec<&'static str> {
        vec!["index", "state_delta", "constraint_residual", "objective"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.history
            .iter()
            .map(|r| vec![r.index.to_string(), num(r.state_delta), num(r.constraint_residual), num(r.objective)])
            .collect()
    }
}

fn quantity_rows(pairs: &[(&str, String)]) -> Vec<Vec<String>> {
    pairs.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect()
}

impl Table for AnalyzeReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["quantity", "value"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        quantity_rows(&[
            ("rows", self.rows.to_string()),
            ("mu_first", num(self.first.mu)),
            ("mu_second", num(self.second.mu)),
            ("mu_separable", num(self.mu_separable)),
            ("mu_joint", num(self.mu_joint.value)),
            ("mu_joint_exact", self.mu_joint.exact.to_string()),
            ("rho_joint", num(self.rho_joint.value)),
            ("q", num(self.q)),
            ("rho_max", num(self.rho_max)),
            ("q_opt", num(self.optimal.q)),
            ("rho_max_opt", num(self.optimal.rho_max)),
            ("convergent", self.optimal.convergent.to_string()),
            ("n_max", num(self.params.n_max)),
            ("p_max", num(self.params.p_max)),
            ("r_max", num(self.params.r_max)),
            ("n_min", num(self.params.n_min)),
            ("p_min", num(self.params.p_min)),
            ("r_min", num(self.params.r_min)),
        ])
    }
}

impl Table for LocusReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["re", "im"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.locus.eigs.iter().map(|z| vec![num(z.re), num(z.im)]).collect()
    }
}

impl Table for LassoReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["seed", "index", "state_delta"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.state_deltas
            .iter()
            .enumerate()
            .map(|(k, d)| vec![self.config.seed.to_string(), k.to_string(), num(*d)])
            .collect()
    }
}

impl<T: Table> Table for Vec<T> {
    fn header(&self) -> Vec<&'static str> {
        self.first().map(Table::header).unwrap_or_default()
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.iter().flat_map(Table::records).collect()
    }
}
