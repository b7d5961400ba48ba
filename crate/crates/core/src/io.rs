//! JSON file formats and machine-readable reports.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analysis::{ClassificationReport, Completability, RankTest};
use crate::error::{Error, Result};
use crate::expfn::{ExpTerm, PiecewiseExp};
use crate::model::{DelaySystem, KernelPiece, M2State, MatrixKernel};
use crate::numeric::C64;
use crate::simulator::{Grid, NullCheck, Trajectory};
use crate::spectral::{EigenPoint, SpectrumReport, Window};
use crate::synthesis::{ControlSignal, Synthesis, SynthesisMethod};

pub const TOOL: &str = "delaysteer";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

/// Matrix given as nested rows or as a flat row-major list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRepr {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixRepr {
    pub fn to_matrix(&self, n: usize, what: &str) -> Result<DMatrix<f64>> {
        let flat: Vec<f64> = match self {
            MatrixRepr::Rows(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(invalid(format!("{what} must be {n}x{n}")));
                }
                rows.iter().flatten().copied().collect()
            }
            MatrixRepr::Flat(v) => {
                if v.len() != n * n {
                    return Err(invalid(format!("{what} must have {} entries, found {}", n * n, v.len())));
                }
                v.clone()
            }
        };
        Ok(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixRepr::Rows(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceFile {
    pub interval: [f64; 2],
    /// One n×n matrix per power of `(θ − left)`.
    pub coeffs: Vec<MatrixRepr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelFile {
    pub support_left: f64,
    pub pieces: Vec<PieceFile>,
}

impl KernelFile {
    fn to_kernel(&self, n: usize, what: &str) -> Result<MatrixKernel> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let coeffs = p.coeffs.iter().map(|c| c.to_matrix(n, what)).collect::<Result<Vec<_>>>()?;
                Ok(KernelPiece { left: p.interval[0], right: p.interval[1], coeffs })
            })
            .collect::<Result<Vec<_>>>()?;
        MatrixKernel::new(n, self.support_left, pieces)
    }
}

/// System description file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    pub n: usize,
    #[serde(rename = "A_minus1", default, skip_serializing_if = "Option::is_none")]
    pub a_minus1: Option<MatrixRepr>,
    #[serde(rename = "A1", default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<MatrixRepr>,
    #[serde(rename = "A0", default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<MatrixRepr>,
    #[serde(rename = "A2", default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<KernelFile>,
    #[serde(rename = "A3", default, skip_serializing_if = "Option::is_none")]
    pub a3: Option<KernelFile>,
    pub b: Vec<f64>,
}

impl SystemFile {
    pub fn to_system(&self) -> Result<DelaySystem> {
        let n = self.n;
        if n == 0 {
            return Err(invalid("n must be positive"));
        }
        if self.b.len() != n {
            return Err(Error::DimensionMismatch { what: "b", expected: n, found: self.b.len() });
        }
        let mat = |m: &Option<MatrixRepr>, what: &str| match m {
            Some(m) => m.to_matrix(n, what),
            None => Ok(DMatrix::zeros(n, n)),
        };
        let ker = |k: &Option<KernelFile>, what: &str| match k {
            Some(k) => k.to_kernel(n, what),
            None => Ok(MatrixKernel::zero(n)),
        };
        DelaySystem::new(
            mat(&self.a_minus1, "A_minus1")?,
            mat(&self.a1, "A1")?,
            mat(&self.a0, "A0")?,
            ker(&self.a2, "A2")?,
            ker(&self.a3, "A3")?,
            DVector::from_vec(self.b.clone()),
        )
    }
}

pub fn parse_system(text: &str) -> Result<DelaySystem> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| invalid(format!("system file: {e}")))?;
    file.to_system()
}

/// One history sample: a scalar for `n = 1` or a vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleRepr {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HistoryRepr {
    /// Samples at `−1 + i/N`, `i = 0..=N`.
    Samples(Vec<SampleRepr>),
    Constant {
        constant: Vec<f64>,
        intervals: usize,
    },
}

/// Initial state file `{y, z0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub y: Vec<f64>,
    pub z0: HistoryRepr,
}

impl StateFile {
    pub fn to_state(&self, n: usize) -> Result<M2State> {
        if self.y.len() != n {
            return Err(Error::DimensionMismatch { what: "state y", expected: n, found: self.y.len() });
        }
        let y = DVector::from_vec(self.y.clone());
        match &self.z0 {
            HistoryRepr::Samples(samples) => {
                let z0 = samples
                    .iter()
                    .map(|s| match s {
                        SampleRepr::Scalar(v) if n == 1 => Ok(DVector::from_element(1, *v)),
                        SampleRepr::Vector(v) if v.len() == n => Ok(DVector::from_vec(v.clone())),
                        _ => Err(invalid(format!("every z0 sample must have {n} entries"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                M2State::new(y, z0)
            }
            HistoryRepr::Constant { constant, intervals } => {
                if constant.len() != n {
                    return Err(Error::DimensionMismatch { what: "state z0", expected: n, found: constant.len() });
                }
                if *intervals == 0 {
                    return Err(invalid("z0 intervals must be positive"));
                }
                M2State::constant(y, DVector::from_vec(constant.clone()), *intervals)
            }
        }
    }
}

pub fn parse_state(text: &str, n: usize) -> Result<M2State> {
    let file: StateFile = serde_json::from_str(text).map_err(|e| invalid(format!("state file: {e}")))?;
    file.to_state(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexJson {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for C64 {
    fn from(z: ComplexJson) -> Self {
        C64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowJson {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl From<&Window> for WindowJson {
    fn from(w: &Window) -> Self {
        Self { re_min: w.re_min, re_max: w.re_max, im_min: w.im_min, im_max: w.im_max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridJson {
    pub dt: f64,
    pub steps_per_unit: usize,
    pub horizon: f64,
}

impl From<&Grid> for GridJson {
    fn from(g: &Grid) -> Self {
        Self { dt: g.dt(), steps_per_unit: g.steps_per_unit(), horizon: g.horizon() }
    }
}

/// Settings echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub window: Option<WindowJson>,
    pub truncation: Option<usize>,
    pub grid: Option<GridJson>,
}

impl RunInfo {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            seed,
            tolerances: BTreeMap::new(),
            window: None,
            truncation: None,
            grid: None,
        }
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.into(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenJson {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    pub branch: Option<usize>,
    pub index: Option<i64>,
    pub residual: f64,
}

impl From<&EigenPoint> for EigenJson {
    fn from(p: &EigenPoint) -> Self {
        Self {
            re: p.lambda.re,
            im: p.lambda.im,
            multiplicity: p.multiplicity,
            branch: p.branch_j,
            index: p.index_k,
            residual: p.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnresolvedJson {
    pub window: WindowJson,
    pub count: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdJson {
    pub branch: usize,
    pub a: f64,
    pub min_abs_index: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub run: RunInfo,
    pub zero_count: usize,
    pub r0: Option<f64>,
    pub eigenvalues: Vec<EigenJson>,
    pub unresolved: Vec<UnresolvedJson>,
    pub branch_thresholds: Vec<ThresholdJson>,
}

impl SpectrumJson {
    pub fn new(run: RunInfo, report: &SpectrumReport) -> Self {
        Self {
            run,
            zero_count: report.zero_count,
            r0: report.r0,
            eigenvalues: report.points.iter().map(EigenJson::from).collect(),
            unresolved: report
                .unresolved
                .iter()
                .map(|u| UnresolvedJson { window: (&u.cell).into(), count: u.count, reason: u.reason.clone() })
                .collect(),
            branch_thresholds: report
                .thresholds
                .iter()
                .map(|t| ThresholdJson { branch: t.branch_j, a: t.a, min_abs_index: t.min_abs_k })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralWitnessJson {
    pub re: f64,
    pub im: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainsJson {
    pub p1: Vec<f64>,
    pub p_minus1: Vec<f64>,
}

/// Classification report; the `cond_A1_*` fields are the Hautus tests on `(A₋₁, b)`.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationJson {
    pub run: RunInfo,
    pub spectrally_controllable_in_window: bool,
    pub spectral_witness: Option<SpectralWitnessJson>,
    pub cond_A1_all_mu: bool,
    pub cond_A1_all_mu_witness: Option<ComplexJson>,
    pub cond_A1_nonzero_mu: bool,
    pub cond_A1_nonzero_mu_witness: Option<ComplexJson>,
    pub complete: bool,
    pub completable: bool,
    /// `completable`, `not-completable` (proved by the rank pre-check) or `not-found`.
    pub completability: String,
    pub completing_gains: Option<GainsJson>,
    pub pair_A1_b_controllable: bool,
    pub pair_A1_b_witness: Option<ComplexJson>,
    pub support_condition: bool,
    pub exactly_null_controllable: String,
    pub completely_stabilizable: String,
    pub eigenvalues: Vec<EigenJson>,
    pub unresolved: Vec<UnresolvedJson>,
}

fn witness(r: &RankTest) -> Option<ComplexJson> {
    r.witness.map(ComplexJson::from)
}

impl ClassificationJson {
    pub fn new(run: RunInfo, r: &ClassificationReport) -> Self {
        let spectrum = SpectrumJson::new(run.clone(), &r.spectrum);
        let (completability, gains) = match &r.completability {
            Completability::Completable { p1, p_minus1 } => (
                "completable",
                Some(GainsJson { p1: p1.iter().copied().collect(), p_minus1: p_minus1.iter().copied().collect() }),
            ),
            Completability::NotCompletable => ("not-completable", None),
            Completability::NotFound => ("not-found", None),
        };
        Self {
            run,
            spectrally_controllable_in_window: r.spectral.holds_in_window,
            spectral_witness: r.spectral.witness.map(|w| SpectralWitnessJson { re: w.lambda.re, im: w.lambda.im, rank: w.rank }),
            cond_A1_all_mu: r.cond_a_minus1_all_mu.holds,
            cond_A1_all_mu_witness: witness(&r.cond_a_minus1_all_mu),
            cond_A1_nonzero_mu: r.cond_a_minus1_nonzero_mu.holds,
            cond_A1_nonzero_mu_witness: witness(&r.cond_a_minus1_nonzero_mu),
            complete: r.complete,
            completable: r.completability.is_completable(),
            completability: completability.into(),
            completing_gains: gains,
            pair_A1_b_controllable: r.pair_a1_b.holds,
            pair_A1_b_witness: witness(&r.pair_a1_b),
            support_condition: r.support_condition,
            exactly_null_controllable: r.exactly_null_controllable.as_str().into(),
            completely_stabilizable: r.completely_stabilizable.as_str().into(),
            eigenvalues: spectrum.eigenvalues,
            unresolved: spectrum.unresolved,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub left: f64,
    pub right: f64,
    pub rate: ComplexJson,
    pub coef: ComplexJson,
    pub power: u32,
}

/// Synthesized control, including the exact representation of `v` with `u(t) = −v(T − t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlJson {
    pub run: RunInfo,
    pub horizon: f64,
    pub method: String,
    pub per_branch: Option<usize>,
    pub residual: f64,
    pub imag_ratio: f64,
    pub effective_rank: Option<usize>,
    pub condition: Option<f64>,
    pub family_defect: Option<f64>,
    pub correction_condition: Option<f64>,
    pub fallback_reason: Option<String>,
    pub l2_norm: f64,
    pub feedback_gain: Option<Vec<f64>>,
    pub eigenvalues: Vec<ComplexJson>,
    pub coefficients: Vec<ComplexJson>,
    pub terms: Vec<TermJson>,
}

impl ControlJson {
    pub fn new(run: RunInfo, s: &Synthesis) -> Self {
        let c = &s.control;
        Self {
            run,
            horizon: c.horizon,
            method: c.method.as_str().into(),
            per_branch: Some(s.per_branch),
            residual: c.residual,
            imag_ratio: c.imag_ratio,
            effective_rank: c.effective_rank,
            condition: c.condition,
            family_defect: s.family_defect,
            correction_condition: s.correction_condition,
            fallback_reason: s.fallback_reason.clone(),
            l2_norm: c.l2_norm(),
            feedback_gain: c.feedback_gain.as_ref().map(|p| p.iter().copied().collect()),
            eigenvalues: c.eigenvalues.iter().map(|&z| z.into()).collect(),
            coefficients: c.coefficients.iter().map(|&z| z.into()).collect(),
            terms: c
                .v
                .terms()
                .iter()
                .map(|t| TermJson { left: t.left, right: t.right, rate: t.rate.into(), coef: t.coef.into(), power: t.power })
                .collect(),
        }
    }

    pub fn to_signal(&self) -> Result<ControlSignal> {
        let method = match self.method.as_str() {
            "min-norm" => SynthesisMethod::MinNorm,
            "series" => SynthesisMethod::Series,
            other => return Err(invalid(format!("unknown control method {other:?}"))),
        };
        if !(self.horizon > 0.0) {
            return Err(invalid("control horizon must be positive"));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| ExpTerm { left: t.left, right: t.right, rate: t.rate.into(), coef: t.coef.into(), power: t.power })
            .collect();
        Ok(ControlSignal {
            horizon: self.horizon,
            v: PiecewiseExp::from_terms(terms),
            method,
            eigenvalues: self.eigenvalues.iter().map(|&z| z.into()).collect(),
            coefficients: self.coefficients.iter().map(|&z| z.into()).collect(),
            residual: self.residual,
            imag_ratio: self.imag_ratio,
            effective_rank: self.effective_rank,
            condition: self.condition,
            feedback_gain: self.feedback_gain.as_ref().map(|p| DVector::from_vec(p.clone())),
        })
    }
}

pub fn parse_control(text: &str) -> Result<ControlSignal> {
    let file: ControlJson = serde_json::from_str(text).map_err(|e| invalid(format!("control file: {e}")))?;
    file.to_signal()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationJson {
    pub run: RunInfo,
    /// `max ‖z‖∞` over `[horizon − 1, horizon]`.
    pub terminal_residual: f64,
    pub final_state: Vec<f64>,
}

impl SimulationJson {
    pub fn new(run: RunInfo, traj: &Trajectory, terminal: NullCheck) -> Self {
        Self {
            run,
            terminal_residual: terminal.residual,
            final_state: traj.z.last().map(|z| z.iter().copied().collect()).unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyJson {
    pub run: RunInfo,
    pub horizon: f64,
    pub tol: f64,
    pub is_null: bool,
    pub residual: f64,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
