//! Locating the d zeros of G in a cell, and the inverse problem.
//!
//! Zeros are isolated by recursive subdivision of the cell, counting with
//! the argument principle on each rectangle (the phase of G is tracked
//! along the boundary with adaptive sampling), and are then refined with
//! Newton's method using the analytic derivative of G.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::analytic_rep::{self, torus_magnitude, Cell, Kernel, QuantumState, ZeroSet};
use crate::error::{Error, Result};
use crate::theta::ThetaValue;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RootFindConfig {
    /// Initial samples per edge of the cell.
    pub grid_n: usize,
    /// Residual tolerance on |G(ζ)|·exp(−(Im ζ)²/2).
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Roots closer than this are reported as one multiple zero.
    pub min_separation: f64,
}

impl Default for RootFindConfig {
    fn default() -> Self {
        Self { grid_n: 64, newton_tol: 1e-12, newton_max_iter: 50, min_separation: 1e-9 }
    }
}

impl RootFindConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 8 {
            return Err(Error::InvalidInput(format!("grid_n must be at least 8, got {}", self.grid_n)));
        }
        if !(self.newton_tol > 0.0) || !(self.min_separation > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::InvalidInput("root-finding tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Largest phase step accepted between neighbouring contour samples.
const MAX_ARG_STEP: f64 = PI / 4.0;
const MAX_EDGE_DEPTH: u32 = 48;
const MAX_SUBDIVISION_DEPTH: u32 = 60;
const WINDOW_ATTEMPTS: usize = 6;
/// Split fractions tried in turn when a zero sits on an internal edge.
const SPLITS: [f64; 5] = [0.5, 0.5123, 0.4871, 0.5347, 0.4619];

struct Finder<'a> {
    kernel: Kernel,
    g: &'a [Complex64],
    cfg: &'a RootFindConfig,
    side: f64,
}

#[derive(Clone, Copy)]
struct Rect {
    lo: Complex64,
    w: f64,
    h: f64,
}

impl Rect {
    fn corners(&self) -> [Complex64; 4] {
        [
            self.lo,
            self.lo + self.w,
            self.lo + Complex64::new(self.w, self.h),
            self.lo + Complex64::new(0.0, self.h),
        ]
    }

    fn center(&self) -> Complex64 {
        self.lo + Complex64::new(0.5 * self.w, 0.5 * self.h)
    }

    fn contains(&self, z: Complex64, margin: f64) -> bool {
        let d = z - self.lo;
        d.re >= -margin && d.re <= self.w + margin && d.im >= -margin && d.im <= self.h + margin
    }

    fn diagonal(&self) -> f64 {
        self.w.hypot(self.h)
    }
}

impl<'a> Finder<'a> {
    fn value(&self, z: Complex64) -> ThetaValue {
        self.kernel.evaluate(self.g, z)
    }

    /// Phase increment of G along a → b, refined until each step is small.
    fn edge_phase(&self, a: Complex64, ga: ThetaValue, b: Complex64, gb: ThetaValue, depth: u32) -> Option<f64> {
        if ga.is_zero() || gb.is_zero() {
            return None;
        }
        let step = gb.div(ga).arg();
        if step.abs() <= MAX_ARG_STEP {
            return Some(step);
        }
        if depth >= MAX_EDGE_DEPTH {
            return None;
        }
        let m = 0.5 * (a + b);
        let gm = self.value(m);
        Some(self.edge_phase(a, ga, m, gm, depth + 1)? + self.edge_phase(m, gm, b, gb, depth + 1)?)
    }

    /// Winding number of G around the rectangle, or None when the contour
    /// passes too close to a zero to be trusted.
    fn count(&self, r: &Rect, samples_per_edge: usize) -> Option<usize> {
        let corners = r.corners();
        let mut total = 0.0;
        for k in 0..4 {
            let (a, b) = (corners[k], corners[(k + 1) % 4]);
            let mut prev = (a, self.value(a));
            for s in 1..=samples_per_edge {
                let z = a + (b - a) * (s as f64 / samples_per_edge as f64);
                let gz = self.value(z);
                total += self.edge_phase(prev.0, prev.1, z, gz, 0)?;
                prev = (z, gz);
            }
        }
        let winding = total / TAU;
        let n = winding.round();
        if (winding - n).abs() > 0.05 || n < 0.0 {
            return None;
        }
        Some(n as usize)
    }

    fn samples_for(&self, r: &Rect) -> usize {
        let frac = r.w.max(r.h) / self.side;
        ((self.cfg.grid_n as f64 * frac).ceil() as usize).max(8)
    }

    fn newton(&self, start: Complex64) -> Option<Complex64> {
        newton_polish(&self.kernel, self.g, start, self.cfg).ok()
    }

    fn isolate(&self, r: Rect, count: usize, depth: u32, out: &mut Vec<Complex64>) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        let margin = 1e-9 * self.side;
        if count == 1 {
            let starts = [r.center(), r.lo + Complex64::new(0.25 * r.w, 0.25 * r.h), r.lo + Complex64::new(0.75 * r.w, 0.75 * r.h)];
            for s in starts {
                if let Some(z) = self.newton(s) {
                    if r.contains(z, margin) {
                        out.push(z);
                        return Ok(());
                    }
                }
            }
        } else if r.diagonal() < self.cfg.min_separation.max(1e-7 * self.side) {
            // Multiple zero: Newton still converges, only linearly.
            let z = self.newton(r.center()).unwrap_or(r.center());
            out.extend(std::iter::repeat_n(z, count));
            return Ok(());
        }
        if depth >= MAX_SUBDIVISION_DEPTH {
            return Err(Error::Domain(format!("zero isolation did not terminate near {}", r.center())));
        }
        for frac in SPLITS {
            let (w1, h1) = (r.w * frac, r.h * frac);
            let children = [
                Rect { lo: r.lo, w: w1, h: h1 },
                Rect { lo: r.lo + w1, w: r.w - w1, h: h1 },
                Rect { lo: r.lo + Complex64::new(0.0, h1), w: w1, h: r.h - h1 },
                Rect { lo: r.lo + Complex64::new(w1, h1), w: r.w - w1, h: r.h - h1 },
            ];
            let counts: Option<Vec<usize>> = children.iter().map(|c| self.count(c, self.samples_for(c))).collect();
            match counts {
                Some(c) if c.iter().sum::<usize>() == count => {
                    for (child, n) in children.iter().zip(c) {
                        self.isolate(*child, n, depth + 1, out)?;
                    }
                    return Ok(());
                }
                _ => continue,
            }
        }
        Err(Error::Domain(format!("could not split rectangle at {} without crossing a zero", r.lo)))
    }
}

/// Newton iteration on G from `start`. Works with lifted coordinates.
pub(crate) fn newton_polish(
    kernel: &Kernel,
    g: &[Complex64],
    start: Complex64,
    cfg: &RootFindConfig,
) -> Result<Complex64> {
    let mut z = start;
    for _ in 0..cfg.newton_max_iter {
        let (v, dv) = kernel.evaluate_with_derivative(g, z);
        if v.is_zero() {
            return Ok(z);
        }
        if dv.is_zero() {
            break;
        }
        let step = v.ratio(dv);
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            let res = torus_magnitude(kernel.evaluate(g, z), z);
            if res <= cfg.newton_tol {
                return Ok(z);
            }
            break;
        }
    }
    let res = torus_magnitude(kernel.evaluate(g, z), z);
    if res <= cfg.newton_tol && z.is_finite() {
        return Ok(z);
    }
    Err(Error::Domain(format!("newton did not converge from {start} (residual {res:e})")))
}

/// The d zeros of G in the half-open cell, sorted by (Re, Im).
pub fn find_zeros(state: &QuantumState, cell: &Cell, cfg: &RootFindConfig) -> Result<ZeroSet> {
    cfg.validate()?;
    let d = state.dim();
    if cell.dim() != d {
        return Err(Error::InvalidInput(format!("cell is for d = {}, state has d = {d}", cell.dim())));
    }
    let finder = Finder { kernel: Kernel::new(d), g: state.coefficients(), cfg, side: cell.side() };
    let side = cell.side();
    let mut last_err = Error::ZeroCount { expected: d, found: 0 };
    for attempt in 0..WINDOW_ATTEMPTS {
        // Deterministic sub-wavelength jitter of the search window.
        let a = attempt as f64;
        let jitter = if attempt == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new((0.618_033_988_75 * a).fract(), (0.414_213_562_37 * a).fract()) * (1e-6 * side)
        };
        let window = Rect { lo: cell.corner() - jitter, w: side, h: side };
        let Some(count) = finder.count(&window, cfg.grid_n) else {
            last_err = Error::Domain("cell contour passes through a zero".into());
            continue;
        };
        if count != d {
            last_err = Error::ZeroCount { expected: d, found: count };
            continue;
        }
        let mut found = Vec::with_capacity(d);
        if let Err(e) = finder.isolate(window, count, 0, &mut found) {
            last_err = e;
            continue;
        }
        if found.len() != d {
            last_err = Error::ZeroCount { expected: d, found: found.len() };
            continue;
        }
        let zs = ZeroSet::new(found, *cell)?.sorted();
        let defect = analytic_rep::sum_constraint_defect(&zs);
        if defect > 1e-8 {
            last_err = Error::Domain(format!("zeros violate the sum rule (defect {defect:e})"));
            continue;
        }
        return Ok(zs);
    }
    Err(last_err)
}

/// Newton-refines each guess against G of `state`; guesses stay on their
/// lattice representative.
pub fn refine_zeros(state: &QuantumState, guesses: &[Complex64], cfg: &RootFindConfig) -> Result<Vec<Complex64>> {
    let kernel = Kernel::new(state.dim());
    guesses.iter().map(|z| newton_polish(&kernel, state.coefficients(), *z, cfg)).collect()
}

/// Given d−1 zeros, or d zeros of which the last is ignored, returns the full
/// set with the last zero fixed by the sum rule (in the cell).
pub fn complete_zeros(zeros: &[Complex64], cell: &Cell) -> Result<Vec<Complex64>> {
    let d = cell.dim();
    if zeros.len() + 1 != d && zeros.len() != d {
        return Err(Error::InvalidInput(format!(
            "expected {} or {d} zeros for d = {d}, got {}",
            d.saturating_sub(1),
            zeros.len()
        )));
    }
    let mut out = zeros[..d - 1].to_vec();
    out.push(analytic_rep::completing_zero(&out, cell));
    Ok(out)
}

/// Solves Σ_m g_m Θ₃[πm/d − ζ_n·sqrt(π/(2d)); i/d] = 0 for the first d−1 zeros.
///
/// The solution is normalized and its global phase fixed so that the
/// largest-modulus coefficient is real positive.
pub fn state_from_zeros(zeros: &[Complex64], cell: &Cell) -> Result<QuantumState> {
    let d = cell.dim();
    let full = complete_zeros(zeros, cell)?;
    if d == 1 {
        return Ok(QuantumState::basis(1, 0));
    }
    let kernel = Kernel::new(d);
    let mut a = DMatrix::<Complex64>::zeros(d, d);
    for (n, zeta) in full[..d - 1].iter().enumerate() {
        let row: Vec<ThetaValue> = (0..d).map(|m| kernel.basis_theta(m, *zeta)).collect();
        let top = row.iter().map(|v| v.log_scale).fold(f64::NEG_INFINITY, f64::max);
        for (m, v) in row.iter().enumerate() {
            a[(n, m)] = v.value * (v.log_scale - top).exp();
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Singular("SVD did not produce right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let largest = svd.singular_values[order[d - 1]];
    let second = svd.singular_values[order[1]];
    if !(largest > 0.0) || second / largest < 1e-10 {
        return Err(Error::Singular(format!(
            "zeros do not determine a unique state (singular value ratio {:e})",
            second / largest
        )));
    }
    let k = order[0];
    let g: Vec<Complex64> = (0..d).map(|m| v_t[(k, m)].conj()).collect();
    Ok(QuantumState::normalized(g)?.phase_fixed())
}

/// Groups zeros closer than `min_separation` on the torus; returns each
/// cluster's mean position and size.
pub fn clusters(zs: &ZeroSet, min_separation: f64) -> Vec<(Complex64, usize)> {
    let cell = zs.cell();
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    for z in zs.zeros() {
        match out.iter_mut().find(|(c, _)| cell.torus_distance(*c, *z) < min_separation) {
            Some((c, k)) => {
                *c = cell.nearest_representative(*z, *c) / (*k as f64 + 1.0) + *c * (*k as f64 / (*k as f64 + 1.0));
                *k += 1;
            }
            None => out.push((*z, 1)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic_rep::AnalyticFunction;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fig1_zeros() -> Vec<Complex64> {
        vec![c(1.0, -1.99), c(3.02, 3.0), c(1.0, 3.0), c(-0.01, 1.0)]
    }

    fn matched_distance(a: &[Complex64], b: &[Complex64], cell: &Cell) -> f64 {
        a.iter()
            .map(|x| b.iter().map(|y| cell.torus_distance(*x, *y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    #[test]
    fn finds_d_zeros_that_vanish() {
        let s = QuantumState::normalized(vec![c(0.3, 0.1), c(-0.2, 0.7), c(0.5, -0.4), c(0.1, 0.1)]).unwrap();
        let cell = Cell::origin(4);
        let zs = find_zeros(&s, &cell, &RootFindConfig::default()).unwrap();
        assert_eq!(zs.dim(), 4);
        let g = AnalyticFunction::new(s, cell);
        for z in zs.zeros() {
            assert!(cell.contains(*z));
            assert!(g.torus_magnitude(*z) < 1e-12);
        }
        assert!(analytic_rep::sum_constraint_defect(&zs) < 1e-8);
    }

    #[test]
    fn published_zeros_round_trip() {
        let cell = Cell::origin(4);
        let s = state_from_zeros(&fig1_zeros(), &cell).unwrap();
        let zs = find_zeros(&s, &cell, &RootFindConfig::default()).unwrap();
        let full = complete_zeros(&fig1_zeros(), &cell).unwrap();
        assert!(matched_distance(&full, zs.zeros(), &cell) < 1e-6);
        // The free zeros come back exactly; the completed one is within the
        // published rounding.
        assert!(cell.torus_distance(full[3], fig1_zeros()[3]) < 0.01);
    }

    #[test]
    fn published_d3_zeros_round_trip() {
        let cell = Cell::origin(3);
        let given = [c(1.54, 2.47), c(2.01, 2.18), c(2.95, 1.86)];
        let s = state_from_zeros(&given, &cell).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let zs = find_zeros(&s, &cell, &RootFindConfig::default()).unwrap();
        let full = complete_zeros(&given, &cell).unwrap();
        assert!(matched_distance(&full, zs.zeros(), &cell) < 1e-6);
    }

    #[test]
    fn state_depends_continuously_on_zeros() {
        let cell = Cell::origin(4);
        let base = state_from_zeros(&fig1_zeros(), &cell).unwrap();
        let mut moved = fig1_zeros();
        moved[1] += 1e-3;
        let other = state_from_zeros(&moved, &cell).unwrap();
        let dist = base.distance_mod_phase(&other);
        assert!(dist > 1e-6 && dist < 1e-2, "{dist}");
    }

    #[test]
    fn state_round_trip_modulo_phase() {
        let s = QuantumState::normalized(vec![c(0.3, 0.1), c(-0.2, 0.7), c(0.5, -0.4)]).unwrap();
        let cell = Cell::origin(3);
        let zs = find_zeros(&s, &cell, &RootFindConfig::default()).unwrap();
        let back = state_from_zeros(zs.zeros(), &cell).unwrap();
        assert!(back.distance_mod_phase(&s) < 1e-8);
    }

    #[test]
    fn wrong_zero_count_is_rejected() {
        let cell = Cell::origin(4);
        assert!(matches!(state_from_zeros(&[c(1.0, 1.0)], &cell), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn coincident_zeros_are_singular() {
        let cell = Cell::origin(3);
        let z = c(1.0, 1.0);
        assert!(matches!(state_from_zeros(&[z, z], &cell), Err(Error::Singular(_))));
    }

    #[test]
    fn zeros_of_shifted_cells() {
        let s = QuantumState::normalized(vec![c(0.3, 0.1), c(-0.2, 0.7)]).unwrap();
        let base = find_zeros(&s, &Cell::origin(2), &RootFindConfig::default()).unwrap();
        let moved = Cell::new(2, 1, -2);
        let other = find_zeros(&s, &moved, &RootFindConfig::default()).unwrap();
        assert!(other.zeros().iter().all(|z| moved.contains(*z)));
        assert!(matched_distance(base.zeros(), other.zeros(), &moved) < 1e-10);
    }

    #[test]
    fn basis_states_have_symmetric_zeros() {
        // Basis states put zeros on symmetric lines; exercises the boundary jitter.
        for d in 2..=5 {
            for m in 0..d {
                let zs = find_zeros(&QuantumState::basis(d, m), &Cell::origin(d), &RootFindConfig::default()).unwrap();
                assert_eq!(zs.dim(), d);
            }
        }
    }

    #[test]
    fn small_grid_is_rejected() {
        let cfg = RootFindConfig { grid_n: 4, ..Default::default() };
        assert!(find_zeros(&QuantumState::basis(2, 0), &Cell::origin(2), &cfg).is_err());
    }
}
