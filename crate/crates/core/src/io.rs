//! File formats. Complex numbers are `[re, im]` pairs throughout.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic_rep::{Cell, QuantumState, ZeroSet};
use crate::error::{Error, Result};
use crate::evolution::{EvolutionSource, PathBundle, TrackStats, TrackerConfig};
use crate::paths::PathClassification;

pub type Pair = [f64; 2];

pub fn pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

pub fn complex(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn pairs(zs: &[Complex64]) -> Vec<Pair> {
    zs.iter().copied().map(pair).collect()
}

fn complexes(ps: &[Pair]) -> Vec<Complex64> {
    ps.iter().copied().map(complex).collect()
}

pub fn matrix_to_rows(m: &DMatrix<Complex64>) -> Vec<Vec<Pair>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<Pair>]) -> Result<DMatrix<Complex64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Format("matrix must be square and non-empty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| complex(rows[i][j])))
}

/// `{"d": .., "g": [[re, im], ...]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub d: usize,
    pub g: Vec<Pair>,
}

impl StateFile {
    pub fn from_state(s: &QuantumState) -> Self {
        Self { d: s.dim(), g: pairs(s.coefficients()) }
    }

    /// Normalizes the coefficients if needed.
    pub fn to_state(&self) -> Result<QuantumState> {
        if self.g.len() != self.d {
            return Err(Error::Format(format!("field \"g\" has {} entries but \"d\" is {}", self.g.len(), self.d)));
        }
        QuantumState::normalized(complexes(&self.g)).map_err(|e| Error::Format(format!("field \"g\": {e}")))
    }
}

/// `{"d": .., "cell": [M, N], "zeros": [[re, im], ...]}`; `completed` names
/// the zero filled in from the sum rule, when there was one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZerosFile {
    pub d: usize,
    #[serde(default)]
    pub cell: [i64; 2],
    pub zeros: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completed: Option<Pair>,
}

impl ZerosFile {
    pub fn from_zero_set(zs: &ZeroSet) -> Self {
        let c = zs.cell();
        Self { d: zs.dim(), cell: [c.m, c.n], zeros: pairs(zs.zeros()), completed: None }
    }

    pub fn cell(&self) -> Cell {
        Cell::new(self.d, self.cell[0], self.cell[1])
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        let n = self.zeros.len();
        if n + 1 != self.d && n != self.d {
            return Err(Error::Format(format!("field \"zeros\" needs d or d-1 entries (d = {}), got {n}", self.d)));
        }
        Ok(complexes(&self.zeros))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceFile {
    Hamiltonian { matrix: Vec<Vec<Pair>> },
    Displacement { alpha: i64, beta: i64, matrix: Vec<Vec<Pair>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub index: usize,
    pub lifted: Vec<Pair>,
    pub cell: Vec<Pair>,
}

/// Full JSON form of a [`PathBundle`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleFile {
    pub d: usize,
    pub cell: [i64; 2],
    pub cell_side: f64,
    pub source: SourceFile,
    pub initial_state: Vec<Pair>,
    pub initial_zeros: Vec<Pair>,
    #[serde(default)]
    pub period: Option<f64>,
    #[serde(default)]
    pub config: Option<TrackerConfig>,
    #[serde(default)]
    pub stats: TrackStats,
    pub times: Vec<f64>,
    pub paths: Vec<PathFile>,
}

impl BundleFile {
    pub fn from_bundle(b: &PathBundle) -> Self {
        let source = match &b.source {
            EvolutionSource::Hamiltonian(m) => SourceFile::Hamiltonian { matrix: matrix_to_rows(m) },
            EvolutionSource::Displacement { alpha, beta, matrix } => {
                SourceFile::Displacement { alpha: *alpha, beta: *beta, matrix: matrix_to_rows(matrix) }
            }
        };
        Self {
            d: b.dim(),
            cell: [b.cell.m, b.cell.n],
            cell_side: b.cell.side(),
            source,
            initial_state: pairs(b.initial_state.coefficients()),
            initial_zeros: pairs(&b.initial_zeros()),
            period: b.period,
            config: b.config,
            stats: b.stats,
            times: b.times.clone(),
            paths: (0..b.dim())
                .map(|n| PathFile { index: n, lifted: pairs(&b.lifted[n]), cell: pairs(&b.reduced[n]) })
                .collect(),
        }
    }

    pub fn to_bundle(&self) -> Result<PathBundle> {
        let d = self.d;
        if self.paths.len() != d {
            return Err(Error::Format(format!("field \"paths\" has {} entries, expected d = {d}", self.paths.len())));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Format("field \"times\" must be strictly increasing".into()));
        }
        let cell = Cell::new(d, self.cell[0], self.cell[1]);
        let source = match &self.source {
            SourceFile::Hamiltonian { matrix } => EvolutionSource::Hamiltonian(matrix_from_rows(matrix)?),
            SourceFile::Displacement { alpha, beta, matrix } => {
                EvolutionSource::Displacement { alpha: *alpha, beta: *beta, matrix: matrix_from_rows(matrix)? }
            }
        };
        let mut lifted = vec![Vec::new(); d];
        for p in &self.paths {
            if p.index >= d || p.lifted.len() != self.times.len() {
                return Err(Error::Format(format!("path {} does not match the time grid", p.index)));
            }
            lifted[p.index] = complexes(&p.lifted);
        }
        let reduced = lifted.iter().map(|p| p.iter().map(|z| cell.reduce(*z)).collect()).collect();
        let initial_state = QuantumState::normalized(complexes(&self.initial_state))
            .map_err(|e| Error::Format(format!("field \"initial_state\": {e}")))?;
        Ok(PathBundle {
            cell,
            times: self.times.clone(),
            lifted,
            reduced,
            source,
            initial_state,
            period: self.period,
            config: self.config,
            stats: self.stats,
        })
    }
}

/// CSV with columns t, path_index, re_lifted, im_lifted, re_cell, im_cell.
pub fn write_bundle_csv<W: Write>(b: &PathBundle, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(["t", "path_index", "re_lifted", "im_lifted", "re_cell", "im_cell"]).map_err(io)?;
    for (k, t) in b.times.iter().enumerate() {
        for n in 0..b.dim() {
            let (l, c) = (b.lifted[n][k], b.reduced[n][k]);
            w.serialize((t, n, l.re, l.im, c.re, c.im)).map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleFile {
    pub members: Vec<usize>,
    #[serde(rename = "M")]
    pub multiplicity: usize,
    pub winding: [i64; 2],
    pub signed_winding: [i64; 2],
}

/// `{"cycles": [{"members", "M", "winding"}], "permutation": [...]}` plus diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationFile {
    pub cycles: Vec<CycleFile>,
    pub permutation: Vec<usize>,
    pub period: f64,
    pub max_match_error: f64,
    pub max_winding_residual: f64,
}

impl ClassificationFile {
    pub fn from_classification(c: &PathClassification) -> Self {
        Self {
            cycles: c
                .cycles
                .iter()
                .map(|cy| CycleFile {
                    members: cy.members.clone(),
                    multiplicity: cy.multiplicity(),
                    winding: [cy.winding.0, cy.winding.1],
                    signed_winding: [cy.signed_winding.0, cy.signed_winding.1],
                })
                .collect(),
            permutation: c.permutation.clone(),
            period: c.period,
            max_match_error: c.max_match_error,
            max_winding_residual: c.max_winding_residual,
        }
    }
}

/// `{"d", "alpha", "beta"}` or `{"op": "X" | "Z"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Named {
        op: NamedOp,
        #[serde(default)]
        d: Option<usize>,
    },
    Displacement {
        #[serde(default)]
        d: Option<usize>,
        alpha: i64,
        beta: i64,
        #[serde(default)]
        phase: PhaseChoice,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedOp {
    X,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseChoice {
    #[default]
    HalfInverse,
    Unit,
}

impl OperatorSpec {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Named { d, .. } | Self::Displacement { d, .. } => *d,
        }
    }

    pub fn build(&self, d: usize) -> Result<crate::phase_space::DisplacementOp> {
        use crate::phase_space::{build_x, build_z, displacement, PhaseConvention};
        if let Some(own) = self.dim() {
            if own != d {
                return Err(Error::InvalidInput(format!("operator has d = {own}, experiment has d = {d}")));
            }
        }
        match self {
            Self::Named { op: NamedOp::X, .. } => build_x(d),
            Self::Named { op: NamedOp::Z, .. } => build_z(d),
            Self::Displacement { alpha, beta, phase, .. } => {
                let conv = match phase {
                    PhaseChoice::HalfInverse => PhaseConvention::HalfInverse,
                    PhaseChoice::Unit => PhaseConvention::Unit,
                };
                displacement(d, *alpha, *beta, conv)
            }
        }
    }
}

pub fn to_json_pretty<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}
