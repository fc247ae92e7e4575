//! Displacement operators on Z(d)×Z(d), their real powers, and checks of the
//! shift structure of the zero paths they generate.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytic_rep::{Cell, QuantumState};
use crate::error::{Error, Result};
use crate::evolution::{self, mat_vec, max_abs, EvolutionSource, Hamiltonian, Initial, PathBundle, TrackerConfig};
use crate::theta::{theta3_with_deriv, ThetaParams, ThetaValue};
use crate::zeros::RootFindConfig;

/// ω(m) = exp(i2πm/d).
pub fn omega(d: usize, m: i64) -> Complex64 {
    let k = m.rem_euclid(d as i64) as f64;
    Complex64::from_polar(1.0, TAU * k / d as f64)
}

/// Wraps an angle into (−π, π].
fn principal(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r > PI { r - TAU } else { r }
}

fn identity(d: usize) -> DMatrix<Complex64> {
    DMatrix::identity(d, d)
}

/// F_mn = d^{-1/2} ω(mn), mapping position to momentum components.
#[derive(Clone, Debug)]
pub struct FourierMatrix {
    d: usize,
    f: DMatrix<Complex64>,
}

impl FourierMatrix {
    pub fn new(d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let f = DMatrix::from_fn(d, d, |m, n| omega(d, (m * n) as i64) * s);
        Self { d, f }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.f
    }

    /// g̃ with |g⟩ = Σ g̃_m |P;m⟩, i.e. g̃ = F†g.
    pub fn momentum_components(&self, g: &[Complex64]) -> Vec<Complex64> {
        mat_vec(&self.f.adjoint(), g)
    }

    pub fn position_components(&self, g_tilde: &[Complex64]) -> Vec<Complex64> {
        mat_vec(&self.f, g_tilde)
    }
}

/// Which generator a [`DisplacementOp`] is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Z,
    X,
    /// Z^α X^β times a phase.
    D { alpha: i64, beta: i64 },
}

/// Phase attached to Z^α X^β.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    /// ω(−2^{-1}αβ) with 2^{-1} the inverse of 2 in Z(d).
    #[default]
    HalfInverse,
    /// No phase. Only the global phase differs, so zeros are identical.
    Unit,
}

/// A unitary with Uᵈ ∝ 1, stored with its spectral projectors.
#[derive(Clone, Debug)]
pub struct DisplacementOp {
    d: usize,
    kind: OpKind,
    matrix: DMatrix<Complex64>,
    /// Principal arguments in (−π, π], one per distinct eigenvalue.
    phases: Vec<f64>,
    projectors: Vec<DMatrix<Complex64>>,
}

pub fn build_z(d: usize) -> Result<DisplacementOp> {
    check_dim(d)?;
    let m = DMatrix::from_fn(d, d, |i, j| if i == j { omega(d, i as i64) } else { Complex64::new(0.0, 0.0) });
    DisplacementOp::from_matrix(m, OpKind::Z)
}

pub fn build_x(d: usize) -> Result<DisplacementOp> {
    check_dim(d)?;
    DisplacementOp::from_matrix(shift(d, 1), OpKind::X)
}

/// D(α,β) = Z^α X^β ω(−2^{-1}αβ); d must be odd when αβ ≢ 0.
pub fn displacement(d: usize, alpha: i64, beta: i64, convention: PhaseConvention) -> Result<DisplacementOp> {
    check_dim(d)?;
    let (a, b) = (alpha.rem_euclid(d as i64), beta.rem_euclid(d as i64));
    let phase = if a * b == 0 || convention == PhaseConvention::Unit {
        Complex64::new(1.0, 0.0)
    } else {
        if d % 2 == 0 {
            return Err(Error::Domain(format!("D({alpha},{beta}) needs odd d so that 2^-1 exists, got d = {d}")));
        }
        let half = ((d + 1) / 2) as i64;
        omega(d, -(half * a * b))
    };
    let z = DMatrix::from_fn(d, d, |i, j| if i == j { omega(d, a * i as i64) } else { Complex64::new(0.0, 0.0) });
    DisplacementOp::from_matrix(z * shift(d, b) * phase, OpKind::D { alpha: a, beta: b })
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Domain(format!("displacement operators need d ≥ 2, got {d}")));
    }
    Ok(())
}

/// X^k: |X;n⟩ ↦ |X;n+k⟩.
fn shift(d: usize, k: i64) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(d, d);
    for n in 0..d {
        let to = (n as i64 + k).rem_euclid(d as i64) as usize;
        m[(to, n)] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Eigenvalues within this of −1 sit on the logarithm's branch cut.
const BRANCH_CUT: f64 = 1e-9;

impl DisplacementOp {
    fn from_matrix(matrix: DMatrix<Complex64>, kind: OpKind) -> Result<Self> {
        let d = matrix.nrows();
        let unitarity = max_abs(&(matrix.adjoint() * &matrix - identity(d)));
        if unitarity > 1e-12 {
            return Err(Error::Domain(format!("operator is not unitary (defect {unitarity:e})")));
        }
        let power = matrix.pow(d as u32);
        let c = power[(0, 0)];
        if max_abs(&(&power - identity(d) * c)) > 1e-10 || (c.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Domain("operator power U^d is not a phase times the identity".into()));
        }
        // Eigenvalues are d-th roots of c; P_j = (1/d) Σ_k (U/e_j)^k.
        let mut phases = Vec::new();
        let mut projectors = Vec::new();
        let base = c.arg();
        for j in 0..d {
            let phi = principal((base + TAU * j as f64) / d as f64);
            let e = Complex64::from_polar(1.0, phi);
            let step = &matrix / e;
            let mut term = identity(d);
            let mut p = DMatrix::zeros(d, d);
            for _ in 0..d {
                p += &term;
                term = &term * &step;
            }
            p /= Complex64::new(d as f64, 0.0);
            if max_abs(&p) > 1e-8 {
                phases.push(phi);
                projectors.push(p);
            }
        }
        let op = Self { d, kind, matrix, phases, projectors };
        let err = max_abs(&(op.power_matrix(1.0) - &op.matrix));
        if err > 1e-10 {
            return Err(Error::Domain(format!("spectral projectors reconstruct the operator only to {err:e}")));
        }
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Distinct eigenvalues e_m.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect()
    }

    pub fn projectors(&self) -> &[DMatrix<Complex64>] {
        &self.projectors
    }

    /// An eigenvalue lies on the negative real axis, where the principal
    /// logarithm is discontinuous.
    pub fn on_branch_cut(&self) -> bool {
        self.phases.iter().any(|p| p.abs() > PI - BRANCH_CUT)
    }

    /// Smallest T > 0 with U^T ∝ 1 on the principal branch.
    pub fn period(&self) -> Option<f64> {
        let h = self.hamiltonian().ok()?;
        evolution::detect_period(&h, 1e-8, 1e6).map(|p| p.t)
    }

    fn power_matrix(&self, t: f64) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.d, self.d);
        for (phi, p) in self.phases.iter().zip(&self.projectors) {
            out += p * Complex64::from_polar(1.0, t * phi);
        }
        out
    }

    /// H = −i·Log U, so that U^t = exp(itH).
    pub fn hamiltonian(&self) -> Result<Hamiltonian> {
        let mut h = DMatrix::zeros(self.d, self.d);
        for (phi, p) in self.phases.iter().zip(&self.projectors) {
            h += p * Complex64::new(*phi, 0.0);
        }
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        Hamiltonian::new(h)
    }
}

/// U^t from the principal logarithm.
#[derive(Clone, Debug)]
pub struct FractionalPower {
    pub matrix: DMatrix<Complex64>,
    /// Set when an eigenvalue is −1 and the principal value was taken anyway.
    pub branch_cut_warning: bool,
}

pub fn fractional_power(op: &DisplacementOp, t: f64) -> FractionalPower {
    FractionalPower { matrix: op.power_matrix(t), branch_cut_warning: op.on_branch_cut() }
}

/// How [`evolve_displacement`] obtains the zeros.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DisplacementRoute {
    /// U^t·g at every time, re-rooted and linked by assignment.
    Reroot,
    /// Semi-analytic tracking with H = −i·Log U.
    Track(TrackerConfig),
}

/// Zero paths of U^t·g over the given times (which must start at 0 for tracking).
pub fn evolve_displacement(
    g0: &QuantumState,
    op: &DisplacementOp,
    times: &[f64],
    route: DisplacementRoute,
) -> Result<PathBundle> {
    if g0.dim() != op.dim() {
        return Err(Error::InvalidInput("state and operator dimensions differ".into()));
    }
    let source = match op.kind {
        OpKind::D { alpha, beta } => EvolutionSource::Displacement { alpha, beta, matrix: op.matrix.clone() },
        OpKind::X => EvolutionSource::Displacement { alpha: 0, beta: 1, matrix: op.matrix.clone() },
        OpKind::Z => EvolutionSource::Displacement { alpha: 1, beta: 0, matrix: op.matrix.clone() },
    };
    let mut bundle = match route {
        DisplacementRoute::Reroot => {
            let initial = crate::zeros::find_zeros(g0, &Cell::origin(g0.dim()), &RootFindConfig::default())?;
            evolution::reroot_along(
                |t| QuantumState::normalized(mat_vec(&op.power_matrix(t), g0.coefficients())),
                g0,
                Some(initial.zeros()),
                times,
                &RootFindConfig::default(),
                source,
            )?
        }
        DisplacementRoute::Track(cfg) => {
            let h = op.hamiltonian()?;
            evolution::track_at(&Initial::State(g0.clone()), &h, times, &cfg, source)?
        }
    };
    bundle.period = op.period();
    Ok(bundle)
}

/// As [`evolve_displacement`] from initial zeros (d−1 or d of them).
pub fn evolve_displacement_from_zeros(
    zeros: &[Complex64],
    op: &DisplacementOp,
    times: &[f64],
    cfg: &TrackerConfig,
) -> Result<PathBundle> {
    let h = op.hamiltonian()?;
    let source = match op.kind {
        OpKind::D { alpha, beta } => EvolutionSource::Displacement { alpha, beta, matrix: op.matrix.clone() },
        OpKind::X => EvolutionSource::Displacement { alpha: 0, beta: 1, matrix: op.matrix.clone() },
        OpKind::Z => EvolutionSource::Displacement { alpha: 1, beta: 0, matrix: op.matrix.clone() },
    };
    let mut bundle = evolution::track_at(&Initial::Zeros(zeros.to_vec()), &h, times, cfg, source)?;
    bundle.period = op.period();
    Ok(bundle)
}

/// Momentum-basis representation
/// π^{-1/4} e^{−z²/2} Σ_m g̃_m Θ₃[πm/d − iz·sqrt(π/(2d)); i/d] and its derivative.
pub struct MomentumRepresentation {
    d: usize,
    c: f64,
    params: ThetaParams,
    g_tilde: Vec<Complex64>,
}

impl MomentumRepresentation {
    pub fn new(g_tilde: Vec<Complex64>) -> Self {
        let d = g_tilde.len();
        let params = ThetaParams::imaginary(1.0 / d as f64).expect("valid nome");
        Self { d, c: (PI / (2.0 * d as f64)).sqrt(), params, g_tilde }
    }

    /// Coefficients of X^t|g⟩ in the momentum basis: principal-branch
    /// powers of ω(−m) applied to g̃.
    pub fn for_shift_power(g: &QuantumState, t: f64) -> Self {
        let d = g.dim();
        let g_tilde = FourierMatrix::new(d).momentum_components(g.coefficients());
        let evolved = g_tilde
            .iter()
            .enumerate()
            .map(|(m, gm)| {
                let phi = principal(-(TAU * m as f64) / d as f64);
                gm * Complex64::from_polar(1.0, t * phi)
            })
            .collect();
        Self::new(evolved)
    }

    pub fn evaluate_with_derivative(&self, z: Complex64) -> (ThetaValue, ThetaValue) {
        let pref = PI.powf(-0.25);
        let gauss = ThetaValue::exp(-z * z / 2.0);
        let mut f = ThetaValue::ZERO;
        let mut df = ThetaValue::ZERO;
        for (m, gm) in self.g_tilde.iter().enumerate() {
            let u = Complex64::new(PI * m as f64 / self.d as f64, 0.0) - Complex64::new(0.0, self.c) * z;
            let (t, dt) = theta3_with_deriv(u, &self.params);
            f = f.add(t.scale(*gm));
            df = df.add(dt.scale(*gm * Complex64::new(0.0, -self.c)));
        }
        let value = f * gauss;
        // d/dz [e^{−z²/2} F] = e^{−z²/2}(F′ − zF).
        let deriv = df.sub(f.scale(z)) * gauss;
        (value.scale(Complex64::new(pref, 0.0)), deriv.scale(Complex64::new(pref, 0.0)))
    }

    /// Newton-polishes a guess on this representation.
    pub fn polish(&self, start: Complex64, tol: f64, max_iter: usize) -> Result<Complex64> {
        let mut z = start;
        for _ in 0..max_iter {
            let (f, df) = self.evaluate_with_derivative(z);
            if f.is_zero() {
                return Ok(z);
            }
            if df.is_zero() {
                return Err(Error::Singular("vanishing derivative in momentum representation".into()));
            }
            let step = f.ratio(df);
            z -= step;
            if !z.is_finite() {
                return Err(Error::Singular("Newton iterate left the plane".into()));
            }
            if step.norm() < tol {
                return Ok(z);
            }
        }
        Err(Error::Singular("Newton on momentum representation did not converge".into()))
    }
}

/// Largest distance between zeros of X^t|g⟩ from the matrix power and the
/// same zeros re-polished on the momentum representation.
pub fn momentum_route_discrepancy(bundle: &PathBundle, times: &[f64]) -> Result<f64> {
    let g0 = &bundle.initial_state;
    let x = build_x(g0.dim())?;
    times
        .par_iter()
        .map(|&t| {
            let zs = bundle
                .at_time(t)
                .ok_or_else(|| Error::InsufficientData(format!("bundle does not cover t = {t}")))?;
            let g = QuantumState::normalized(mat_vec(&x.power_matrix(t), g0.coefficients()))?;
            let direct = crate::zeros::refine_zeros(&g, &zs, &RootFindConfig::default())?;
            let rep = MomentumRepresentation::for_shift_power(g0, t);
            let mut worst: f64 = 0.0;
            for z in direct {
                let w = rep.polish(z, 1e-13, 50)?;
                worst = worst.max((w - z).norm());
            }
            Ok(worst)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Result of matching one path against a shifted copy of another.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftMatch {
    /// Path whose positions are compared after shifting.
    pub source: usize,
    pub target: usize,
    pub shift: Complex64,
    pub time_offset: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Proposition1Report {
    /// One entry per (n, β); `target` is the path found to carry ζ_n(t) + β·sqrt(2π/d).
    pub entries: Vec<(usize, usize, ShiftMatch)>,
    pub max_violation: f64,
    pub tol: f64,
}

impl Proposition1Report {
    pub fn passed(&self) -> bool {
        self.max_violation < self.tol
    }
}

/// Maximum over common samples of |ζ_target(t+δ) − ζ_source(t) − σ| on the torus.
fn shifted_residual(bundle: &PathBundle, source: usize, target: usize, delta: f64, sigma: Complex64, stride: usize) -> Option<f64> {
    let cell = bundle.cell;
    let end = *bundle.times.last()?;
    let mut worst: f64 = 0.0;
    let mut any = false;
    for (k, t) in bundle.times.iter().enumerate().step_by(stride.max(1)) {
        if t + delta > end + 1e-9 {
            break;
        }
        let moved = bundle.at_time(t + delta)?[target];
        worst = worst.max(cell.torus_distance(moved, bundle.lifted[source][k] + sigma));
        any = true;
    }
    any.then_some(worst)
}

/// Checks ζ_{n+β}(t+β) = ζ_n(t) + β·sqrt(2π/d) modulo Λ for every n and β,
/// matching paths by shape rather than by label.
pub fn verify_proposition1(bundle: &PathBundle, tol: f64) -> Result<Proposition1Report> {
    let d = bundle.dim();
    let end = *bundle.times.last().ok_or_else(|| Error::InsufficientData("empty bundle".into()))?;
    if end < (d - 1) as f64 - 1e-9 {
        return Err(Error::InsufficientData(format!("need samples up to t = {}, bundle ends at {end}", d - 1)));
    }
    let unit = (TAU / d as f64).sqrt();
    let mut entries = Vec::new();
    let mut max_violation: f64 = 0.0;
    for beta in 0..d {
        let sigma = Complex64::new(beta as f64 * unit, 0.0);
        for n in 0..d {
            let best = (0..d)
                .filter_map(|m| {
                    shifted_residual(bundle, n, m, beta as f64, sigma, 1).map(|r| ShiftMatch {
                        source: n,
                        target: m,
                        shift: sigma,
                        time_offset: beta as f64,
                        residual: r,
                    })
                })
                .min_by(|a, b| a.residual.total_cmp(&b.residual))
                .ok_or_else(|| Error::InsufficientData("no overlapping samples".into()))?;
            max_violation = max_violation.max(best.residual);
            entries.push((n, beta, best));
        }
    }
    Ok(Proposition1Report { entries, max_violation, tol })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjectureReport {
    /// Best match for every ordered pair (source, target), source ≠ target
    /// (or the single self-match when d = 1).
    pub pairs: Vec<ShiftMatch>,
    /// For each path, its best partner.
    pub best: Vec<ShiftMatch>,
    pub max_residual: f64,
    pub tol: f64,
}

impl ConjectureReport {
    pub fn passed(&self) -> bool {
        self.max_residual < self.tol
    }
}

/// Shift σ minimizing the torus distance between two sample sets, as the
/// wrapped mean of the pointwise differences.
fn fit_shift(bundle: &PathBundle, source: usize, target: usize, delta: f64, stride: usize) -> Option<Complex64> {
    let cell = bundle.cell;
    let end = *bundle.times.last()?;
    let mut reference: Option<Complex64> = None;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut count = 0usize;
    for (k, t) in bundle.times.iter().enumerate().step_by(stride.max(1)) {
        if t + delta > end + 1e-9 {
            break;
        }
        let diff = bundle.at_time(t + delta)?[target] - bundle.lifted[source][k];
        let r = *reference.get_or_insert(diff);
        sum += r + cell.wrap(diff - r);
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

fn pair_search(bundle: &PathBundle, source: usize, target: usize, max_offset: f64) -> Option<ShiftMatch> {
    let n = bundle.len();
    let stride = (n / 200).max(1);
    let offsets: Vec<f64> = bundle.times.iter().copied().filter(|t| *t <= max_offset + 1e-12).collect();
    let score = |delta: f64, stride: usize| -> Option<(f64, Complex64)> {
        let sigma = fit_shift(bundle, source, target, delta, stride)?;
        Some((shifted_residual(bundle, source, target, delta, sigma, stride)?, sigma))
    };
    let coarse_stride = (offsets.len() / 400).max(1);
    let (mut best_delta, mut best) = (0.0, f64::INFINITY);
    for &delta in offsets.iter().step_by(coarse_stride) {
        if let Some((r, _)) = score(delta, stride) {
            if r < best {
                best = r;
                best_delta = delta;
            }
        }
    }
    // Golden-section refinement around the coarse optimum.
    let h = (bundle.times[1.min(n - 1)] - bundle.times[0]).max(1e-12) * coarse_stride as f64;
    let (mut a, mut b) = ((best_delta - h).max(0.0), (best_delta + h).min(max_offset));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let f = |x: f64| score(x, stride).map(|s| s.0).unwrap_or(f64::INFINITY);
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let candidates = [best_delta, 0.5 * (a + b)];
    candidates
        .iter()
        .filter_map(|&delta| {
            let (r, sigma) = score(delta, 1)?;
            Some(ShiftMatch { source, target, shift: bundle.cell.wrap(sigma), time_offset: delta, residual: r })
        })
        .min_by(|x, y| x.residual.total_cmp(&y.residual))
}

/// For every ordered pair of paths, the best constant shift σ and time
/// offset δ with ζ_target(t+δ) ≈ ζ_source(t) + σ modulo Λ. Offsets range
/// over [0, end − span] so that at least `span` of overlap remains; `span`
/// defaults to the bundle's period.
pub fn verify_conjecture(bundle: &PathBundle, tol: f64, span: Option<f64>) -> Result<ConjectureReport> {
    let d = bundle.dim();
    let end = *bundle.times.last().ok_or_else(|| Error::InsufficientData("empty bundle".into()))?;
    let span = span.or(bundle.period).unwrap_or(0.5 * end);
    let max_offset = end - span;
    if max_offset < -1e-9 {
        return Err(Error::InsufficientData(format!("bundle ends at t = {end}, shorter than the overlap {span}")));
    }
    let max_offset = max_offset.max(0.0);
    let pairs_idx: Vec<(usize, usize)> = if d == 1 {
        vec![(0, 0)]
    } else {
        (0..d).flat_map(|a| (0..d).filter(move |&b| b != a).map(move |b| (a, b))).collect()
    };
    let pairs: Vec<ShiftMatch> = pairs_idx
        .par_iter()
        .map(|&(a, b)| {
            if d == 1 {
                return Some(ShiftMatch { source: 0, target: 0, shift: Complex64::new(0.0, 0.0), time_offset: 0.0, residual: 0.0 });
            }
            pair_search(bundle, a, b, max_offset)
        })
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InsufficientData("no overlapping samples".into()))?;
    let best: Vec<ShiftMatch> = (0..d)
        .map(|n| {
            *pairs
                .iter()
                .filter(|p| p.source == n)
                .min_by(|x, y| x.residual.total_cmp(&y.residual))
                .expect("every path has a partner")
        })
        .collect();
    let max_residual = best.iter().map(|m| m.residual).fold(0.0, f64::max);
    Ok(ConjectureReport { pairs, best, max_residual, tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fourier_is_unitary_of_order_four() {
        for d in 2..7 {
            let f = FourierMatrix::new(d);
            assert!(max_abs(&(f.matrix() * f.matrix().adjoint() - identity(d))) < 1e-12);
            assert!(max_abs(&(f.matrix().pow(4) - identity(d))) < 1e-10);
        }
    }

    #[test]
    fn clock_and_shift() {
        let z = build_z(4).unwrap();
        let diag: Vec<Complex64> = (0..4).map(|i| z.matrix()[(i, i)]).collect();
        let expect = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (a, b) in diag.iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
        for d in 2..7 {
            let x = build_x(d).unwrap();
            let z = build_z(d).unwrap();
            assert!(max_abs(&(x.matrix().pow(d as u32) - identity(d))) < 1e-14);
            let lhs = x.matrix() * z.matrix();
            let rhs = z.matrix() * x.matrix() * omega(d, -1);
            assert!(max_abs(&(lhs - rhs)) < 1e-14);
        }
    }

    #[test]
    fn shift_acts_on_position_basis() {
        let x = build_x(5).unwrap();
        let e1 = QuantumState::basis(5, 1);
        let moved = mat_vec(x.matrix(), e1.coefficients());
        assert_eq!(moved[2], c(1.0, 0.0));
    }

    #[test]
    fn x_is_diagonal_in_momentum_basis() {
        let d = 5;
        let x = build_x(d).unwrap();
        let f = FourierMatrix::new(d);
        let diag = f.matrix().adjoint() * x.matrix() * f.matrix();
        for i in 0..d {
            assert!((diag[(i, i)] - omega(d, -(i as i64))).norm() < 1e-12);
        }
    }

    #[test]
    fn general_displacement_has_unit_power() {
        let dop = displacement(3, 1, 1, PhaseConvention::HalfInverse).unwrap();
        assert!(max_abs(&(dop.matrix().pow(3) - identity(3))) < 1e-12);
        assert!(displacement(4, 1, 1, PhaseConvention::HalfInverse).is_err());
        assert!(displacement(4, 1, 1, PhaseConvention::Unit).is_ok());
    }

    #[test]
    fn fractional_power_endpoints_and_group_law() {
        for op in [build_x(3).unwrap(), displacement(5, 2, 3, PhaseConvention::HalfInverse).unwrap()] {
            let d = op.dim();
            assert!(max_abs(&(fractional_power(&op, 0.0).matrix - identity(d))) < 1e-12);
            assert!(max_abs(&(fractional_power(&op, 1.0).matrix - op.matrix())) < 1e-12);
            let (s, t) = (0.37, 1.91);
            let prod = fractional_power(&op, s).matrix * fractional_power(&op, t).matrix;
            assert!(max_abs(&(prod - fractional_power(&op, s + t).matrix)) < 1e-10);
            let u = fractional_power(&op, 0.731).matrix;
            assert!(max_abs(&(u.adjoint() * &u - identity(d))) < 1e-10);
        }
        let x = build_x(3).unwrap();
        let shifted = fractional_power(&x, 0.4 + 3.0).matrix;
        assert!(max_abs(&(shifted - fractional_power(&x, 0.4).matrix)) < 1e-10);
        assert!(!fractional_power(&x, 0.4).branch_cut_warning);
        assert!(fractional_power(&build_x(4).unwrap(), 0.4).branch_cut_warning);
    }

    #[test]
    fn hamiltonian_generates_the_power() {
        let op = displacement(3, 1, 1, PhaseConvention::HalfInverse).unwrap();
        let h = op.hamiltonian().unwrap();
        let t = 0.83;
        assert!(max_abs(&(h.propagator(t) - fractional_power(&op, t).matrix)) < 1e-12);
        assert!((op.period().unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn momentum_representation_matches_position_representation() {
        let g = QuantumState::normalized(vec![c(0.3, 0.1), c(-0.5, 0.4), c(0.2, -0.7)]).unwrap();
        let rep = MomentumRepresentation::for_shift_power(&g, 0.0);
        let f = crate::analytic_rep::AnalyticFunction::new(g, Cell::origin(3));
        for z in [c(0.4, 0.3), c(-1.2, 2.1), c(3.0, -0.5)] {
            let a = rep.evaluate_with_derivative(z).0;
            let b = f.evaluate(z);
            assert!((a.ratio(b) - 1.0).norm() < 1e-12);
        }
    }
}
