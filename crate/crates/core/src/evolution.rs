//! Time evolution of the zeros under a Hermitian Hamiltonian.
//!
//! The tracker moves each zero with the closed-form derivative of the zeros
//! with respect to the coefficients,
//!
//! ```text
//! ∂ζ_n/∂g_m = −π^{-1/4} Θ₃[πm/d − ζ_n·sqrt(π/(2d)); i/d]
//!             / (N({ζ})·sqrt(π/(2d))·A_n(ζ_n)·Θ₃′[π(1+i)/2; i]),
//! ```
//!
//! applied to Δg = i·dt·H·g, and optionally re-polishes each zero with
//! Newton's method against the updated representation. The oracle instead
//! propagates the state exactly and re-roots it at every requested time.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytic_rep::{self, normalization_with, Cell, Kernel, NormalizationConstant, ProductForm, QuantumState};
use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::theta;
use crate::zeros::{self, newton_polish, RootFindConfig};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Zeros closer than this are too close for the derivative formula.
pub const DEGENERACY_LIMIT: f64 = 1e-9;
/// Below this separation the tracker re-roots instead of stepping.
pub const NEAR_DEGENERATE: f64 = 1e-6;
const MAX_HALVINGS: u32 = 10;

/// A d×d Hermitian matrix with its spectral decomposition.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    h: DMatrix<Complex64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl Hamiltonian {
    pub fn new(h: DMatrix<Complex64>) -> Result<Self> {
        if !h.is_square() || h.nrows() == 0 {
            return Err(Error::InvalidInput(format!("Hamiltonian must be square, got {}x{}", h.nrows(), h.ncols())));
        }
        let d = h.nrows();
        for i in 0..d {
            for j in 0..d {
                if (h[(i, j)] - h[(j, i)].conj()).norm() > 1e-12 {
                    return Err(Error::InvalidInput(format!("Hamiltonian is not Hermitian at ({i}, {j})")));
                }
            }
        }
        let eig = SymmetricEigen::new(h.clone());
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
        let out = Self { h, eigenvalues, eigenvectors };
        let err = max_abs(&(out.reconstruct() - &out.h));
        if err > 1e-10 {
            return Err(Error::Domain(format!("eigendecomposition reconstructs H only to {err:e}")));
        }
        Ok(out)
    }

    /// Builds Σ λ_k |v_k⟩⟨v_k| from an orthonormal eigenbasis.
    pub fn from_spectrum(eigenvalues: Vec<f64>, eigenvectors: DMatrix<Complex64>) -> Result<Self> {
        let d = eigenvalues.len();
        if eigenvectors.shape() != (d, d) {
            return Err(Error::InvalidInput("eigenvector matrix has the wrong shape".into()));
        }
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, eigenvalues.iter().map(|&l| Complex64::new(l, 0.0))));
        let mut h = &eigenvectors * diag * eigenvectors.adjoint();
        // Symmetrize away rounding so the Hermitian check is exact.
        h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        Self::new(h)
    }

    /// Real symmetric matrix given by rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("Hamiltonian rows must all have length d".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| Complex64::new(rows[i][j], 0.0)))
    }

    /// (A + A†)/2 with A having standard complex Gaussian entries.
    pub fn random<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let a = DMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal))
        });
        let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        Self::new(h).expect("symmetrized matrix is Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    fn reconstruct(&self) -> DMatrix<Complex64> {
        self.spectral(|l| Complex64::new(l, 0.0))
    }

    fn spectral(&self, f: impl Fn(f64) -> Complex64) -> DMatrix<Complex64> {
        let d = self.dim();
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(d, d, |i, j| v[(i, j)] * f(self.eigenvalues[j]));
        scaled * v.adjoint()
    }

    /// exp(itH).
    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        self.spectral(|l| Complex64::from_polar(1.0, l * t))
    }

    /// exp(itH) − 1, exact zero for zero eigenvalues.
    fn propagator_increment(&self, t: f64) -> DMatrix<Complex64> {
        self.spectral(|l| Complex64::from_polar(1.0, l * t) - 1.0)
    }

    pub fn apply(&self, g: &[Complex64]) -> Vec<Complex64> {
        mat_vec(&self.h, g)
    }

    /// exp(itH)·g.
    pub fn evolve(&self, g: &QuantumState, t: f64) -> Result<QuantumState> {
        QuantumState::normalized(mat_vec(&self.propagator(t), g.coefficients()))
    }
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub(crate) fn mat_vec(m: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

/// How g is advanced across one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientUpdate {
    /// g + i·dt·H·g, first order.
    Euler,
    /// exp(i·dt·H)·g from the cached eigendecomposition.
    Propagator,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub dt: f64,
    /// Newton-polish the zeros every this many steps; 0 disables.
    pub polish_every: usize,
    /// Re-root from scratch every this many steps; 0 disables.
    pub resync_every: usize,
    pub renormalize: bool,
    pub coefficient_update: CoefficientUpdate,
    pub root: RootFindConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            polish_every: 1,
            resync_every: 500,
            renormalize: true,
            coefficient_update: CoefficientUpdate::Propagator,
            root: RootFindConfig::default(),
        }
    }
}

impl TrackerConfig {
    /// Defaults with dt = T/5000.
    pub fn for_period(period: f64) -> Self {
        Self { dt: period / 5000.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        self.root.validate()
    }
}

/// Time-sampled lifted paths of the zeros.
#[derive(Clone, Debug)]
pub struct PathBundle {
    pub cell: Cell,
    pub times: Vec<f64>,
    /// `lifted[n][k]`: path n at `times[k]`, continuous on the plane.
    pub lifted: Vec<Vec<Complex64>>,
    /// Same samples reduced into the cell.
    pub reduced: Vec<Vec<Complex64>>,
    pub source: EvolutionSource,
    pub initial_state: QuantumState,
    pub period: Option<f64>,
    /// Tracker settings, absent for re-rooted bundles.
    pub config: Option<TrackerConfig>,
    pub stats: TrackStats,
}

/// What generated a bundle.
#[derive(Clone, Debug, PartialEq)]
pub enum EvolutionSource {
    Hamiltonian(DMatrix<Complex64>),
    Displacement { alpha: i64, beta: i64, matrix: DMatrix<Complex64> },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrackStats {
    pub steps: usize,
    pub halvings: usize,
    pub reroots: usize,
    pub max_resync_correction: f64,
    pub ambiguous_matches: usize,
}

impl PathBundle {
    pub fn new(cell: Cell, source: EvolutionSource, initial_state: QuantumState, first: &[Complex64], t0: f64) -> Self {
        Self {
            cell,
            times: vec![t0],
            lifted: first.iter().map(|z| vec![*z]).collect(),
            reduced: first.iter().map(|z| vec![cell.reduce(*z)]).collect(),
            source,
            initial_state,
            period: None,
            config: None,
            stats: TrackStats::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lifted.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, zeros: &[Complex64]) {
        self.times.push(t);
        for (n, z) in zeros.iter().enumerate() {
            self.lifted[n].push(*z);
            self.reduced[n].push(self.cell.reduce(*z));
        }
    }

    pub fn initial_zeros(&self) -> Vec<Complex64> {
        self.lifted.iter().map(|p| p[0]).collect()
    }

    /// Lifted zeros at sample k.
    pub fn sample(&self, k: usize) -> Vec<Complex64> {
        self.lifted.iter().map(|p| p[k]).collect()
    }

    /// Lifted positions at time t, linearly interpolated between samples.
    pub fn at_time(&self, t: f64) -> Option<Vec<Complex64>> {
        let (first, last) = (*self.times.first()?, *self.times.last()?);
        let slack = 1e-9 * (1.0 + t.abs());
        if t < first - slack || t > last + slack {
            return None;
        }
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            return Some(self.sample(0));
        }
        if k >= self.times.len() {
            return Some(self.sample(self.times.len() - 1));
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        if (t1 - t).abs() <= slack {
            return Some(self.sample(k));
        }
        let w = (t - t0) / (t1 - t0);
        Some(self.lifted.iter().map(|p| p[k - 1] * (1.0 - w) + p[k] * w).collect())
    }

    /// Largest sum-rule defect over all samples.
    pub fn max_sum_defect(&self) -> f64 {
        (0..self.len()).map(|k| analytic_rep::sum_defect(&self.sample(k), &self.cell)).fold(0.0, f64::max)
    }
}

fn min_separation(zeros: &[Complex64], cell: &Cell) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for a in 0..zeros.len() {
        for b in a + 1..zeros.len() {
            let s = cell.torus_distance(zeros[a], zeros[b]);
            if s < best.0 {
                best = (s, a, b);
            }
        }
    }
    best
}

fn check_separation(zeros: &[Complex64], cell: &Cell) -> Result<()> {
    let (s, a, b) = min_separation(zeros, cell);
    if s <= DEGENERACY_LIMIT {
        return Err(Error::Degenerate { first: a, second: b, separation: s });
    }
    Ok(())
}

/// The d×d matrix ∂ζ_n/∂g_m (row n, column m).
pub fn zero_derivatives(
    state: &QuantumState,
    zeros: &[Complex64],
    norm: &NormalizationConstant,
) -> Result<DMatrix<Complex64>> {
    let product = ProductForm::new(zeros)?;
    if zeros.len() != state.dim() {
        return Err(Error::ZeroCount { expected: state.dim(), found: zeros.len() });
    }
    derivatives_with(&product, norm)
}

fn derivatives_with(product: &ProductForm, norm: &NormalizationConstant) -> Result<DMatrix<Complex64>> {
    let zeros = product.zeros();
    let d = zeros.len();
    check_separation(zeros, &Cell::origin(d))?;
    let kernel = Kernel::new(d);
    let slope = theta::ThetaValue::from_complex(theta::canonical_zero_slope() * kernel.c);
    let mut out = DMatrix::zeros(d, d);
    for (n, zeta) in zeros.iter().enumerate() {
        // N·exp(−i·sqrt(2π/d)·N_lat·ζ_n)·sqrt(π/(2d))·A_n(ζ_n)·Θ₃′.
        let denom = norm.0 * product.gauge_at(*zeta) * product.cofactor(n) * slope;
        if denom.is_zero() {
            return Err(Error::Degenerate { first: n, second: n, separation: 0.0 });
        }
        for m in 0..d {
            let num = kernel.basis_theta(m, *zeta).scale(Complex64::new(-kernel.pref, 0.0));
            out[(n, m)] = num.ratio(denom);
        }
    }
    Ok(out)
}

/// Central differences of the zeros with respect to each g_m, re-rooting
/// the perturbed states from scratch. Zeros do not depend on the scale of
/// g, so the perturbed vectors are renormalized before rooting.
pub fn finite_difference_derivatives(
    state: &QuantumState,
    zeros: &[Complex64],
    eps: f64,
    root: &RootFindConfig,
) -> Result<DMatrix<Complex64>> {
    let d = state.dim();
    let cell = Cell::origin(d);
    let mut out = DMatrix::zeros(d, d);
    for m in 0..d {
        let mut roots = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let mut g = state.coefficients().to_vec();
            g[m] += sign * eps;
            let found = zeros::find_zeros(&QuantumState::normalized(g)?, &cell, root)?;
            roots.push(match_to_previous(zeros, found.zeros(), &cell).0);
        }
        for n in 0..d {
            out[(n, m)] = (roots[0][n] - roots[1][n]) / (2.0 * eps);
        }
    }
    Ok(out)
}

/// Jacobian from the closed form at the state's own zeros.
pub fn derivatives_at(state: &QuantumState, zeros: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let cell = Cell::origin(state.dim());
    let z_ref = analytic_rep::reference_point(zeros, &cell);
    let norm = analytic_rep::compute_normalization(state, zeros, z_ref)?;
    zero_derivatives(state, zeros, &norm)
}

/// One step: zeros moved by Σ_m (∂ζ_n/∂g_m)·Δg_m with Δg = i·dt·H·g.
pub fn step(
    state: &QuantumState,
    zeros: &[Complex64],
    h: &Hamiltonian,
    dt: f64,
    cfg: &TrackerConfig,
) -> Result<(QuantumState, Vec<Complex64>)> {
    let tracker = Tracker::new(h, TrackerConfig { dt, ..*cfg })?;
    tracker.advance(state, zeros, dt, cfg.polish_every > 0, 0.0)
}

/// Stepping machinery bound to one Hamiltonian and configuration.
pub struct Tracker<'a> {
    h: &'a Hamiltonian,
    cfg: TrackerConfig,
    kernel: Kernel,
    cell: Cell,
}

struct StepInfo {
    halvings: usize,
    reroot: bool,
}

impl<'a> Tracker<'a> {
    pub fn new(h: &'a Hamiltonian, cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        let d = h.dim();
        Ok(Self { h, cfg, kernel: Kernel::new(d), cell: Cell::origin(d) })
    }

    fn next_state(&self, state: &QuantumState, delta: &[Complex64], dt: f64) -> Result<QuantumState> {
        let g = state.coefficients();
        let next: Vec<Complex64> = match self.cfg.coefficient_update {
            CoefficientUpdate::Euler => g.iter().zip(delta).map(|(a, b)| a + b).collect(),
            CoefficientUpdate::Propagator => {
                let inc = mat_vec(&self.h.propagator_increment(dt), g);
                g.iter().zip(inc).map(|(a, b)| a + b).collect()
            }
        };
        if self.cfg.renormalize {
            QuantumState::normalized(next)
        } else {
            Ok(QuantumState::from_raw(next))
        }
    }

    /// Re-roots g from scratch and attaches each zero to the nearest lifted path.
    fn reroot(&self, state: &QuantumState, previous: &[Complex64]) -> Result<(Vec<Complex64>, bool)> {
        let zs = zeros::find_zeros(state, &self.cell, &self.cfg.root)?;
        Ok(match_to_previous(previous, zs.zeros(), &self.cell))
    }

    /// One step of size dt, without halving.
    fn advance(
        &self,
        state: &QuantumState,
        zeros: &[Complex64],
        dt: f64,
        polish: bool,
        t: f64,
    ) -> Result<(QuantumState, Vec<Complex64>)> {
        let hg = self.h.apply(state.coefficients());
        let delta: Vec<Complex64> = hg.iter().map(|x| I * dt * x).collect();
        if delta.iter().all(|x| *x == Complex64::new(0.0, 0.0)) {
            return Ok((state.clone(), zeros.to_vec()));
        }
        let (sep, _, _) = min_separation(zeros, &self.cell);
        if sep < NEAR_DEGENERATE {
            let next = self.next_state(state, &delta, dt)?;
            let (z, _) = self.reroot(&next, zeros)?;
            return Ok((next, z));
        }
        let product = ProductForm::new(zeros)?;
        let z_ref = analytic_rep::reference_point(zeros, &self.cell);
        let norm = normalization_with(&product, state, z_ref)?;
        let jac = derivatives_with(&product, &norm)?;
        let moved = mat_vec(&jac, &delta);
        let predicted: Vec<Complex64> = zeros.iter().zip(&moved).map(|(z, dz)| z + dz).collect();
        let next = self.next_state(state, &delta, dt)?;
        if !polish {
            return Ok((next, predicted));
        }
        let polished: Vec<Complex64> = predicted
            .iter()
            .map(|z| newton_polish(&self.kernel, next.coefficients(), *z, &self.cfg.root))
            .collect::<Result<_>>()
            .map_err(|e| Error::PolishDiverged { t, reason: e.to_string() })?;
        let limit = 0.5 * sep.min(0.5 * self.cell.side());
        for (p, q) in polished.iter().zip(&predicted) {
            if (p - q).norm() > limit {
                return Err(Error::PolishDiverged { t, reason: format!("correction {} exceeds {limit}", (p - q).norm()) });
            }
        }
        let (after, _, _) = min_separation(&polished, &self.cell);
        if after <= DEGENERACY_LIMIT {
            return Err(Error::PolishDiverged { t, reason: "two zeros polished onto one".into() });
        }
        Ok((next, polished))
    }

    /// A step of size dt, split in halves (recursively) when polishing fails.
    fn advance_with_retry(
        &self,
        state: &QuantumState,
        zeros: &[Complex64],
        dt: f64,
        polish: bool,
        t: f64,
        depth: u32,
    ) -> Result<((QuantumState, Vec<Complex64>), StepInfo)> {
        let sep = min_separation(zeros, &self.cell).0;
        match self.advance(state, zeros, dt, polish, t) {
            Ok(r) => Ok((r, StepInfo { halvings: 0, reroot: sep < NEAR_DEGENERATE })),
            Err(Error::PolishDiverged { .. }) if depth < MAX_HALVINGS => {
                let half = 0.5 * dt;
                let ((s1, z1), a) = self.advance_with_retry(state, zeros, half, polish, t, depth + 1)?;
                let ((s2, z2), b) = self.advance_with_retry(&s1, &z1, half, polish, t + half, depth + 1)?;
                Ok(((s2, z2), StepInfo { halvings: 1 + a.halvings + b.halvings, reroot: a.reroot || b.reroot }))
            }
            Err(e) => Err(e),
        }
    }
}

/// Attaches each cell-reduced zero to the nearest previous lifted path by
/// optimal assignment on the torus; returns the new lifted zeros and whether
/// the assignment was ambiguous.
pub fn match_to_previous(previous: &[Complex64], found: &[Complex64], cell: &Cell) -> (Vec<Complex64>, bool) {
    let cost: Vec<Vec<f64>> = previous
        .iter()
        .map(|p| found.iter().map(|f| cell.torus_distance(*p, *f)).collect())
        .collect();
    let a = min_cost_assignment(&cost, 1e-9);
    let lifted = previous
        .iter()
        .zip(&a.columns)
        .map(|(p, &c)| cell.nearest_representative(found[c], *p))
        .collect();
    (lifted, a.ambiguous)
}

/// Initial data for a tracking run.
#[derive(Clone, Debug)]
pub enum Initial {
    State(QuantumState),
    /// d−1 or d zeros; with d, the last is replaced by the one the sum rule implies.
    Zeros(Vec<Complex64>),
}

/// Resolves initial data into a state and lifted starting zeros.
pub fn initial_conditions(initial: &Initial, d: usize, root: &RootFindConfig) -> Result<(QuantumState, Vec<Complex64>)> {
    let cell = Cell::origin(d);
    match initial {
        Initial::State(s) => {
            if s.dim() != d {
                return Err(Error::InvalidInput(format!("initial state has d = {}, expected {d}", s.dim())));
            }
            Ok((s.clone(), zeros::find_zeros(s, &cell, root)?.zeros().to_vec()))
        }
        Initial::Zeros(given) => {
            let state = zeros::state_from_zeros(given, &cell)?;
            let mut full = zeros::complete_zeros(given, &cell)?;
            if given.len() == d {
                full[d - 1] = cell.nearest_representative(full[d - 1], given[d - 1]);
            }
            let refined = zeros::refine_zeros(&state, &full, root)?;
            check_separation(&refined, &cell)?;
            Ok((state, refined))
        }
    }
}

/// Semi-analytic tracking of the zeros over [0, t_end] on a uniform grid.
pub fn track(initial: &Initial, h: &Hamiltonian, t_end: f64, cfg: &TrackerConfig) -> Result<PathBundle> {
    cfg.validate()?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!("t_end must be positive, got {t_end}")));
    }
    let steps = (t_end / cfg.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let source = EvolutionSource::Hamiltonian(h.matrix().clone());
    let mut bundle = track_at(initial, h, &times, &TrackerConfig { dt, ..*cfg }, source)?;
    bundle.period = detect_period(h, 1e-8, 1e6).map(|p| p.t);
    Ok(bundle)
}

/// Tracks through the given sample times (starting at 0), substepping so
/// that no step exceeds `cfg.dt`.
pub fn track_at(
    initial: &Initial,
    h: &Hamiltonian,
    times: &[f64],
    cfg: &TrackerConfig,
    source: EvolutionSource,
) -> Result<PathBundle> {
    cfg.validate()?;
    check_times(times)?;
    if times[0] != 0.0 {
        return Err(Error::InvalidInput("tracking must start at t = 0".into()));
    }
    let d = h.dim();
    let (state0, zeros0) = initial_conditions(initial, d, &cfg.root)?;
    let tracker = Tracker::new(h, *cfg)?;
    let cell = Cell::origin(d);
    let limit = 0.5 * cell.side();
    let mut bundle = PathBundle::new(cell, source, state0.clone(), &zeros0, 0.0);
    let mut state = state0;
    let mut zeros = zeros0;
    let mut k = 0usize;
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let substeps = (span / cfg.dt - 1e-9).ceil().max(1.0) as usize;
        let dt = span / substeps as f64;
        for j in 0..substeps {
            k += 1;
            let t_prev = w[0] + j as f64 * dt;
            let polish = cfg.polish_every > 0 && k % cfg.polish_every == 0;
            let ((next_state, mut next_zeros), info) =
                tracker.advance_with_retry(&state, &zeros, dt, polish, t_prev, 0)?;
            bundle.stats.halvings += info.halvings;
            bundle.stats.reroots += info.reroot as usize;
            if cfg.resync_every > 0 && k % cfg.resync_every == 0 {
                let (fresh, ambiguous) = tracker.reroot(&next_state, &next_zeros)?;
                let correction = fresh.iter().zip(&next_zeros).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                bundle.stats.max_resync_correction = bundle.stats.max_resync_correction.max(correction);
                bundle.stats.ambiguous_matches += ambiguous as usize;
                next_zeros = fresh;
            }
            for (n, (a, b)) in next_zeros.iter().zip(&zeros).enumerate() {
                let jump = (a - b).norm();
                if jump > limit {
                    return Err(Error::StepTooLarge { path: n, jump, limit });
                }
            }
            state = next_state;
            zeros = next_zeros;
        }
        bundle.push(w[1], &zeros);
    }
    bundle.stats.steps = k;
    bundle.config = Some(*cfg);
    Ok(bundle)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("times must be non-empty, finite and strictly increasing".into()));
    }
    Ok(())
}

/// Brute-force reference: exact propagation, re-rooting at every time and
/// matching consecutive zero sets on the torus.
pub fn oracle_evolve(state0: &QuantumState, h: &Hamiltonian, times: &[f64]) -> Result<PathBundle> {
    oracle_evolve_from(state0, None, h, times, &RootFindConfig::default())
}

/// As [`oracle_evolve`], optionally starting from given lifted zeros so that
/// path labels line up with another run.
pub fn oracle_evolve_from(
    state0: &QuantumState,
    initial_lifted: Option<&[Complex64]>,
    h: &Hamiltonian,
    times: &[f64],
    root: &RootFindConfig,
) -> Result<PathBundle> {
    if state0.dim() != h.dim() {
        return Err(Error::InvalidInput("state and Hamiltonian dimensions differ".into()));
    }
    let source = EvolutionSource::Hamiltonian(h.matrix().clone());
    reroot_along(|t| h.evolve(state0, t), state0, initial_lifted, times, root, source)
}

/// Roots `state_at(t)` at every time in parallel, then links consecutive
/// zero sets into lifted paths by optimal assignment.
pub fn reroot_along<F>(
    state_at: F,
    state0: &QuantumState,
    initial_lifted: Option<&[Complex64]>,
    times: &[f64],
    root: &RootFindConfig,
    source: EvolutionSource,
) -> Result<PathBundle>
where
    F: Fn(f64) -> Result<QuantumState> + Sync,
{
    check_times(times)?;
    let cell = Cell::origin(state0.dim());
    let found: Vec<Vec<Complex64>> = times
        .par_iter()
        .map(|&t| Ok(zeros::find_zeros(&state_at(t)?, &cell, root)?.zeros().to_vec()))
        .collect::<Result<_>>()?;
    let (first, ambiguous) = match initial_lifted {
        Some(init) => match_to_previous(init, &found[0], &cell),
        None => (found[0].clone(), false),
    };
    let mut bundle = PathBundle::new(cell, source, state0.clone(), &first, times[0]);
    let mut prev = first;
    let mut ambiguous_count = ambiguous as usize;
    for (t, zs) in times.iter().zip(&found).skip(1) {
        let (next, amb) = match_to_previous(&prev, zs, &cell);
        ambiguous_count += amb as usize;
        bundle.push(*t, &next);
        prev = next;
    }
    bundle.stats.ambiguous_matches = ambiguous_count;
    bundle.stats.steps = times.len() - 1;
    Ok(bundle)
}

/// Period T with exp(iTH) = e^{iθ}·1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Period {
    pub t: f64,
    pub theta: f64,
}

const MAX_DENOMINATOR: i64 = 1_000_000;

/// Best rational approximation p/q of x, q ≤ MAX_DENOMINATOR, with |q·x − p| ≤ tol.
fn rationalize(x: f64, tol: f64) -> Option<(i64, i64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > MAX_DENOMINATOR {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (k1 as f64 * x - h1 as f64).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = r - r.floor();
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// Smallest T ≤ t_max with every phase T·(λ_j − λ_0) a multiple of 2π to within tol.
pub fn detect_period(h: &Hamiltonian, tol: f64, t_max: f64) -> Option<Period> {
    let lambda = h.eigenvalues();
    let gaps: Vec<f64> = lambda.iter().map(|l| l - lambda[0]).collect();
    let reference = gaps.iter().copied().filter(|g| g.abs() > tol).fold(f64::INFINITY, f64::min);
    if !reference.is_finite() {
        return None;
    }
    let ratio_tol = tol / TAU;
    let mut fractions = Vec::with_capacity(gaps.len());
    for g in &gaps {
        fractions.push(rationalize(g / reference, ratio_tol)?);
    }
    let lcm = fractions.iter().try_fold(1i64, |acc, &(_, q)| acc.checked_mul(q / gcd(acc, q)))?;
    let numerators: Vec<i64> = fractions.iter().map(|&(p, q)| p * (lcm / q)).collect();
    let common = numerators.iter().fold(lcm, |acc, &n| gcd(acc, n));
    let fundamental = reference * common as f64 / lcm as f64;
    let t = TAU / fundamental;
    if t > t_max {
        return None;
    }
    for g in &gaps {
        let phase = t * g;
        if (phase - TAU * (phase / TAU).round()).abs() > tol {
            return None;
        }
    }
    let theta = (t * lambda[0]).rem_euclid(TAU);
    Some(Period { t, theta })
}
