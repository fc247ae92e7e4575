//! States of a system on Z(d) as theta-function sums on a torus.
//!
//! A state g is represented by
//!
//! ```text
//! G(z) = π^{-1/4} Σ_m g_m Θ₃[πm/d − z·sqrt(π/(2d)); i/d],
//! ```
//!
//! which is periodic under z → z + side and quasi-periodic under
//! z → z + i·side, side = sqrt(2πd). It has exactly d zeros per cell and can
//! be rebuilt from them as a product of Θ₃(·; i) factors.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::theta::{self, ThetaParams, ThetaValue};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance on Σ|g_m|² used when validating states.
pub const NORM_TOL: f64 = 1e-12;

/// A pure state in the position basis |X;m⟩, m ∈ Z(d).
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    g: Vec<Complex64>,
}

impl QuantumState {
    /// Wraps coefficients that are already normalized.
    pub fn new(g: Vec<Complex64>) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::InvalidInput("state needs at least one coefficient".into()));
        }
        if g.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("state coefficients must be finite".into()));
        }
        let n: f64 = g.iter().map(|c| c.norm_sqr()).sum();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("state is not normalized: sum |g_m|^2 = {n}")));
        }
        Ok(Self { g })
    }

    /// Normalizes arbitrary nonzero coefficients.
    pub fn normalized(mut g: Vec<Complex64>) -> Result<Self> {
        let n = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero or non-finite vector".into()));
        }
        g.iter_mut().for_each(|c| *c /= n);
        Ok(Self { g })
    }

    /// Complex Gaussian coefficients, normalized (uniform on the unit sphere).
    pub fn random<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        loop {
            let g: Vec<Complex64> = (0..d)
                .map(|_| Complex64::new(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal)))
                .collect();
            if let Ok(s) = Self::normalized(g) {
                return s;
            }
        }
    }

    /// Skips the norm check; the zeros do not depend on the scale.
    pub(crate) fn from_raw(g: Vec<Complex64>) -> Self {
        Self { g }
    }

    pub fn basis(d: usize, m: usize) -> Self {
        assert!(m < d, "basis index {m} out of range for d = {d}");
        let mut g = vec![Complex64::new(0.0, 0.0); d];
        g[m] = Complex64::new(1.0, 0.0);
        Self { g }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.g
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.g
    }

    /// |g*⟩: coefficients conjugated.
    pub fn conjugate(&self) -> Self {
        Self { g: self.g.iter().map(|c| c.conj()).collect() }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.g.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Global phase fixed so the largest-modulus coefficient is real positive.
    pub fn phase_fixed(&self) -> Self {
        let mut best = 0;
        for (k, c) in self.g.iter().enumerate() {
            // Strict comparison keeps the lowest index among exact ties.
            if c.norm() > self.g[best].norm() * (1.0 + 1e-12) {
                best = k;
            }
        }
        let pivot = self.g[best];
        if pivot.norm() == 0.0 {
            return self.clone();
        }
        let phase = pivot.conj() / pivot.norm();
        Self { g: self.g.iter().map(|c| c * phase).collect() }
    }

    /// min over φ of ‖e^{iφ} self − other‖.
    pub fn distance_mod_phase(&self, other: &Self) -> f64 {
        let overlap: Complex64 = self.g.iter().zip(&other.g).map(|(a, b)| a.conj() * b).sum();
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
        self.g
            .iter()
            .zip(&other.g)
            .map(|(a, b)| (a * phase - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// One fundamental cell S = [M·side, (M+1)·side) × [N·side, (N+1)·side).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub m: i64,
    pub n: i64,
    side: f64,
    d: usize,
}

impl Cell {
    pub fn new(d: usize, m: i64, n: i64) -> Self {
        Self { m, n, side: (2.0 * PI * d as f64).sqrt(), d }
    }

    /// The cell with M = N = 0.
    pub fn origin(d: usize) -> Self {
        Self::new(d, 0, 0)
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Lower-left corner.
    pub fn corner(&self) -> Complex64 {
        Complex64::new(self.m as f64 * self.side, self.n as f64 * self.side)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let w = (z - self.corner()) / self.side;
        (0.0..1.0).contains(&w.re) && (0.0..1.0).contains(&w.im)
    }

    /// Lattice representative of z inside the cell.
    pub fn reduce(&self, z: Complex64) -> Complex64 {
        let w = (z - self.corner()) / self.side;
        let mut x = w.re - w.re.floor();
        let mut y = w.im - w.im.floor();
        // Rounding can land exactly on the excluded edge.
        if x >= 1.0 {
            x = 0.0;
        }
        if y >= 1.0 {
            y = 0.0;
        }
        self.corner() + Complex64::new(x, y) * self.side
    }

    /// Representative of dz modulo the lattice closest to the origin.
    pub fn wrap(&self, dz: Complex64) -> Complex64 {
        let w = dz / self.side;
        Complex64::new(w.re - w.re.round(), w.im - w.im.round()) * self.side
    }

    /// Nearest lattice vector to dz, in units of side.
    pub fn lattice_index(&self, dz: Complex64) -> (i64, i64) {
        let w = dz / self.side;
        (w.re.round() as i64, w.im.round() as i64)
    }

    /// Distance between the torus points a and b.
    pub fn torus_distance(&self, a: Complex64, b: Complex64) -> f64 {
        self.wrap(a - b).norm()
    }

    /// The lattice representative of z nearest to `near`.
    pub fn nearest_representative(&self, z: Complex64, near: Complex64) -> Complex64 {
        near + self.wrap(z - near)
    }
}

/// Constants shared by every evaluation at a fixed dimension.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Kernel {
    pub d: usize,
    /// sqrt(π/(2d))
    pub c: f64,
    /// π^{-1/4}
    pub pref: f64,
    /// τ = i/d
    pub basis: ThetaParams,
    /// τ = i
    pub unit: ThetaParams,
}

impl Kernel {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            c: (PI / (2.0 * d as f64)).sqrt(),
            pref: PI.powf(-0.25),
            basis: ThetaParams::imaginary(1.0 / d as f64).expect("i/d is in the upper half plane"),
            unit: ThetaParams::imaginary(1.0).expect("i is in the upper half plane"),
        }
    }

    /// Θ₃[πm/d − z·sqrt(π/(2d)); i/d].
    pub fn basis_theta(&self, m: usize, z: Complex64) -> ThetaValue {
        theta::theta3(self.basis_arg(m, z), &self.basis)
    }

    fn basis_arg(&self, m: usize, z: Complex64) -> Complex64 {
        PI * m as f64 / self.d as f64 - z * self.c
    }

    /// Θ₃[sqrt(π/(2d))·w + π(1+i)/2; i], one factor of the product form.
    pub fn factor(&self, w: Complex64) -> ThetaValue {
        theta::theta3(self.c * w + theta::canonical_zero(), &self.unit)
    }

    pub fn evaluate(&self, g: &[Complex64], z: Complex64) -> ThetaValue {
        g.iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(m, c)| self.basis_theta(m, z).scale(*c))
            .sum::<ThetaValue>()
            .scale(Complex64::new(self.pref, 0.0))
    }

    /// G(z) and G′(z).
    pub fn evaluate_with_derivative(&self, g: &[Complex64], z: Complex64) -> (ThetaValue, ThetaValue) {
        let mut value = ThetaValue::ZERO;
        let mut deriv = ThetaValue::ZERO;
        for (m, c) in g.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let (t, dt) = theta::theta3_with_deriv(self.basis_arg(m, z), &self.basis);
            value = value.add(t.scale(*c));
            deriv = deriv.add(dt.scale(*c));
        }
        (
            value.scale(Complex64::new(self.pref, 0.0)),
            deriv.scale(Complex64::new(-self.c * self.pref, 0.0)),
        )
    }
}

/// |G(z)|·exp(−(Im z)²/2), which is invariant under lattice translations.
pub(crate) fn torus_magnitude(v: ThetaValue, z: Complex64) -> f64 {
    (v.ln_abs() - 0.5 * z.im * z.im).exp()
}

/// Quasi-periodicity factor exp(πd − iz·side) of a shift by i·side.
pub fn imaginary_shift_factor(d: usize, z: Complex64) -> ThetaValue {
    let side = (2.0 * PI * d as f64).sqrt();
    ThetaValue::exp(PI * d as f64 - I * z * side)
}

/// The analytic representation G(z) of a state.
#[derive(Clone, Debug)]
pub struct AnalyticFunction {
    state: QuantumState,
    cell: Cell,
    kernel: Kernel,
}

impl AnalyticFunction {
    pub fn new(state: QuantumState, cell: Cell) -> Self {
        let kernel = Kernel::new(state.dim());
        Self { state, cell, kernel }
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    pub fn cell(&self) -> &Cell {
        &self.cell
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub fn evaluate(&self, z: Complex64) -> ThetaValue {
        self.kernel.evaluate(self.state.coefficients(), z)
    }

    pub fn evaluate_with_derivative(&self, z: Complex64) -> (ThetaValue, ThetaValue) {
        self.kernel.evaluate_with_derivative(self.state.coefficients(), z)
    }

    /// |G(z)|·exp(−(Im z)²/2); lattice-invariant, so usable as a residual.
    pub fn torus_magnitude(&self, z: Complex64) -> f64 {
        torus_magnitude(self.evaluate(z), z)
    }
}

/// G(z) for the given representation.
pub fn evaluate(g: &AnalyticFunction, z: Complex64) -> ThetaValue {
    g.evaluate(z)
}

/// The d zeros of G in one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSet {
    zeros: Vec<Complex64>,
    cell: Cell,
}

impl ZeroSet {
    /// Reduces each zero into the cell. Fails if the count differs from d.
    pub fn new(zeros: Vec<Complex64>, cell: Cell) -> Result<Self> {
        if zeros.len() != cell.dim() {
            return Err(Error::ZeroCount { expected: cell.dim(), found: zeros.len() });
        }
        if zeros.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidInput("zeros must be finite".into()));
        }
        let zeros = zeros.into_iter().map(|z| cell.reduce(z)).collect();
        Ok(Self { zeros, cell })
    }

    pub fn dim(&self) -> usize {
        self.zeros.len()
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn cell(&self) -> &Cell {
        &self.cell
    }

    /// Sorted lexicographically by (Re, Im).
    pub fn sorted(mut self) -> Self {
        self.zeros.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        self
    }
}

/// side·(M+iN) + d^{3/2}·sqrt(π/2)·(1+i), the prescribed sum of the zeros.
pub fn zero_sum_target(cell: &Cell) -> Complex64 {
    let d = cell.dim() as f64;
    let k = d.powf(1.5) * (PI / 2.0).sqrt();
    cell.corner() + Complex64::new(k, k)
}

/// Distance of Σζ from the prescribed sum, modulo the lattice.
pub fn sum_defect(zeros: &[Complex64], cell: &Cell) -> f64 {
    let s: Complex64 = zeros.iter().sum();
    cell.wrap(s - zero_sum_target(cell)).norm()
}

pub fn sum_constraint_defect(zs: &ZeroSet) -> f64 {
    sum_defect(zs.zeros(), zs.cell())
}

/// The zero implied by d−1 others through the sum rule, placed in the cell.
pub fn completing_zero(partial: &[Complex64], cell: &Cell) -> Complex64 {
    let s: Complex64 = partial.iter().sum();
    cell.reduce(zero_sum_target(cell) - s)
}

/// N({ζ_n}) in the product form of G.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationConstant(pub ThetaValue);

impl NormalizationConstant {
    pub fn value(&self) -> ThetaValue {
        self.0
    }
}

/// exp[−i·sqrt(2π/d)·N·z]·Π_n Θ₃[sqrt(π/(2d))(z−ζ_n) + π(1+i)/2; i], without N({ζ}).
///
/// The zeros may be arbitrary lattice representatives; the integer N is
/// taken from their actual sum so the product always has the
/// quasi-periodicity of G.
#[derive(Clone, Debug)]
pub struct ProductForm {
    zeros: Vec<Complex64>,
    lattice_n: i64,
    kernel: Kernel,
}

impl ProductForm {
    pub fn new(zeros: &[Complex64]) -> Result<Self> {
        let d = zeros.len();
        if d == 0 {
            return Err(Error::InvalidInput("product form needs at least one zero".into()));
        }
        let cell = Cell::origin(d);
        let defect = sum_defect(zeros, &cell);
        if defect > 1e-6 {
            return Err(Error::Precondition(format!(
                "zeros violate the sum rule (defect {defect:e})"
            )));
        }
        let s: Complex64 = zeros.iter().sum();
        let offset = zero_sum_target(&cell);
        let lattice_n = ((s.im - offset.im) / cell.side()).round() as i64;
        Ok(Self { zeros: zeros.to_vec(), lattice_n, kernel: Kernel::new(d) })
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    /// The imaginary lattice index N implied by the zero sum.
    pub fn lattice_n(&self) -> i64 {
        self.lattice_n
    }

    fn gauge(&self, z: Complex64) -> ThetaValue {
        let k = (2.0 * PI / self.kernel.d as f64).sqrt();
        ThetaValue::exp(-I * k * self.lattice_n as f64 * z)
    }

    pub fn evaluate(&self, z: Complex64) -> ThetaValue {
        self.zeros.iter().map(|zeta| self.kernel.factor(z - *zeta)).product::<ThetaValue>() * self.gauge(z)
    }

    /// A_n(ζ_n) = Π_{m≠n} Θ₃[sqrt(π/(2d))(ζ_n−ζ_m) + π(1+i)/2; i].
    pub fn cofactor(&self, n: usize) -> ThetaValue {
        let zn = self.zeros[n];
        self.zeros
            .iter()
            .enumerate()
            .filter(|(m, _)| *m != n)
            .map(|(_, zm)| self.kernel.factor(zn - *zm))
            .product()
    }

    /// The exp[−i·sqrt(2π/d)·N·z] factor at z.
    pub fn gauge_at(&self, z: Complex64) -> ThetaValue {
        self.gauge(z)
    }
}

/// Picks, from a fixed set of 8 points spread over the cell, the one farthest
/// (on the torus) from every zero.
pub fn reference_point(zeros: &[Complex64], cell: &Cell) -> Complex64 {
    let side = cell.side();
    let mut best = (f64::NEG_INFINITY, cell.corner());
    for iy in 0..2 {
        for ix in 0..4 {
            let z = cell.corner() + Complex64::new((ix as f64 + 0.5) / 4.0, (iy as f64 + 0.5) / 2.0) * side;
            let gap = zeros.iter().map(|zeta| cell.torus_distance(z, *zeta)).fold(f64::INFINITY, f64::min);
            if gap > best.0 {
                best = (gap, z);
            }
        }
    }
    best.1
}

/// N({ζ_k}) = G(z_ref) / [exp(...)·Π Θ₃(...)] evaluated at z_ref.
pub fn compute_normalization(
    state: &QuantumState,
    zeros: &[Complex64],
    z_ref: Complex64,
) -> Result<NormalizationConstant> {
    let product = ProductForm::new(zeros)?;
    normalization_with(&product, state, z_ref)
}

pub(crate) fn normalization_with(
    product: &ProductForm,
    state: &QuantumState,
    z_ref: Complex64,
) -> Result<NormalizationConstant> {
    let d = state.dim();
    if product.zeros().len() != d {
        return Err(Error::ZeroCount { expected: d, found: product.zeros().len() });
    }
    let cell = Cell::origin(d);
    let gap = product.zeros().iter().map(|z| cell.torus_distance(z_ref, *z)).fold(f64::INFINITY, f64::min);
    if gap < 1e-3 {
        return Err(Error::Precondition(format!(
            "reference point {z_ref} lies within {gap:e} of a zero"
        )));
    }
    let g = Kernel::new(d).evaluate(state.coefficients(), z_ref);
    Ok(NormalizationConstant(g.div(product.evaluate(z_ref))))
}

/// G rebuilt from its zeros: N({ζ})·exp(...)·Π Θ₃(...).
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub product: ProductForm,
    pub normalization: NormalizationConstant,
}

impl Reconstruction {
    pub fn evaluate(&self, z: Complex64) -> ThetaValue {
        self.product.evaluate(z) * self.normalization.0
    }
}

/// Product-form reconstruction, taking N({ζ}) from the given state.
pub fn reconstruct_with_state(zs: &ZeroSet, state: &QuantumState) -> Result<Reconstruction> {
    let defect = sum_constraint_defect(zs);
    if defect > 1e-6 {
        return Err(Error::Precondition(format!("zero set violates the sum rule (defect {defect:e})")));
    }
    let product = ProductForm::new(zs.zeros())?;
    let z_ref = reference_point(zs.zeros(), zs.cell());
    let normalization = normalization_with(&product, state, z_ref)?;
    Ok(Reconstruction { product, normalization })
}

/// Product-form reconstruction from the zeros alone; the state needed for
/// N({ζ}) is solved from the zeros first.
pub fn reconstruct_from_zeros(zs: &ZeroSet) -> Result<(Reconstruction, QuantumState)> {
    let defect = sum_constraint_defect(zs);
    if defect > 1e-6 {
        return Err(Error::Precondition(format!("zero set violates the sum rule (defect {defect:e})")));
    }
    let state = crate::zeros::state_from_zeros(zs.zeros(), zs.cell())?;
    Ok((reconstruct_with_state(zs, &state)?, state))
}

/// Outcome of a cell quadrature, with a coarser estimate for error control.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub points_per_axis: usize,
    /// |value − value at half resolution|.
    pub error_estimate: f64,
    pub accuracy_warning: bool,
}

/// Minimum points per axis for the cell quadratures.
pub const MIN_QUADRATURE: usize = 64;
const QUADRATURE_TOL: f64 = 1e-6;

/// Midpoint rule over the cell for an integrand given in scaled form.
///
/// The integrands used here are doubly periodic once the Gaussian weight is
/// folded in, which is what makes the plain midpoint rule converge rapidly.
fn cell_midpoint<F>(cell: &Cell, n: usize, outputs: usize, integrand: &F) -> Vec<Complex64>
where
    F: Fn(Complex64) -> Vec<Complex64>,
{
    let side = cell.side();
    let h = side / n as f64;
    let mut acc = vec![Complex64::new(0.0, 0.0); outputs];
    for iy in 0..n {
        for ix in 0..n {
            let z = cell.corner() + Complex64::new((ix as f64 + 0.5) * h, (iy as f64 + 0.5) * h);
            for (a, v) in acc.iter_mut().zip(integrand(z)) {
                *a += v;
            }
        }
    }
    acc.iter_mut().for_each(|a| *a *= h * h);
    acc
}

fn with_error_control<F>(cell: &Cell, n: usize, outputs: usize, integrand: F) -> Quadrature<Vec<Complex64>>
where
    F: Fn(Complex64) -> Vec<Complex64>,
{
    let value = cell_midpoint(cell, n, outputs, &integrand);
    let coarse = cell_midpoint(cell, (n / 2).max(1), outputs, &integrand);
    let error_estimate = value.iter().zip(&coarse).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Quadrature {
        value,
        points_per_axis: n,
        error_estimate,
        accuracy_warning: n < MIN_QUADRATURE || error_estimate > QUADRATURE_TOL,
    }
}

/// ⟨f*|g⟩ = (d^{3/2}·sqrt(2π))⁻¹ ∫_S dμ(z) F(z*) G(z) = Σ f_m g_m.
///
/// The bilinear form has no conjugation on f; pass `f.conjugate()` for the
/// usual inner product.
pub fn scalar_product(f: &QuantumState, g: &QuantumState, quadrature_n: usize) -> Result<Quadrature<Complex64>> {
    let d = f.dim();
    if g.dim() != d {
        return Err(Error::InvalidInput(format!("dimension mismatch: {d} vs {}", g.dim())));
    }
    let kernel = Kernel::new(d);
    let cell = Cell::origin(d);
    let norm = 1.0 / ((d as f64).powf(1.5) * (2.0 * PI).sqrt());
    let q = with_error_control(&cell, quadrature_n, 1, |z| {
        let v = kernel.evaluate(f.coefficients(), z.conj()) * kernel.evaluate(g.coefficients(), z);
        vec![ThetaValue { value: v.value, log_scale: v.log_scale - z.im * z.im }.to_complex() * norm]
    });
    Ok(Quadrature {
        value: q.value[0],
        points_per_axis: q.points_per_axis,
        error_estimate: q.error_estimate,
        accuracy_warning: q.accuracy_warning,
    })
}

/// g_m = 2^{-1/2} π^{-3/4} d^{-3/2} ∫_S dμ(z) Θ₃[πm/d − z·sqrt(π/(2d)); i/d] G(z*).
pub fn coefficients_from_function<F>(
    function: F,
    d: usize,
    cell: &Cell,
    quadrature_n: usize,
) -> Result<Quadrature<Vec<Complex64>>>
where
    F: Fn(Complex64) -> ThetaValue,
{
    if cell.dim() != d {
        return Err(Error::InvalidInput(format!("cell is for d = {}, not {d}", cell.dim())));
    }
    let kernel = Kernel::new(d);
    let norm = 1.0 / (SQRT_2 * PI.powf(0.75) * (d as f64).powf(1.5));
    Ok(with_error_control(cell, quadrature_n, d, |z| {
        let gz = function(z.conj());
        if gz.is_zero() {
            return vec![Complex64::new(0.0, 0.0); d];
        }
        (0..d)
            .map(|m| {
                let v = kernel.basis_theta(m, z) * gz;
                ThetaValue { value: v.value, log_scale: v.log_scale - z.im * z.im }.to_complex() * norm
            })
            .collect()
    }))
}
