#![allow(dead_code)]

use std::f64::consts::TAU;

use toruszeros::analytic_rep::AnalyticFunction;
use toruszeros::evolution::{reroot_along, track, EvolutionSource, Initial};
use toruszeros::phase_space::{build_x, displacement, fractional_power, evolve_displacement_from_zeros, DisplacementOp, OpKind, PhaseConvention};
use toruszeros::zeros::RootFindConfig;
use toruszeros::{Cell, Complex64, Hamiltonian, PathBundle, QuantumState, Result, TrackerConfig};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(pairs: &[(f64, f64)]) -> Vec<Complex64> {
    pairs.iter().map(|&(re, im)| c(re, im)).collect()
}

pub fn h22() -> Hamiltonian {
    Hamiltonian::from_real_rows(&[&[1.0, 1.0, 0.0, 0.0], &[1.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 1.0]])
        .unwrap()
}

pub fn h25() -> Hamiltonian {
    Hamiltonian::from_real_rows(&[&[1.5, 0.2, 0.0], &[0.2, 1.5, 0.0], &[0.0, 0.0, 2.1]]).unwrap()
}

pub fn h28() -> Hamiltonian {
    Hamiltonian::from_real_rows(&[
        &[0.0, 1.0, 0.0, 0.0, 0.0],
        &[1.0, 0.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0, 1.0],
        &[0.0, 0.0, 0.0, 1.0, 1.0],
        &[0.0, 0.0, 1.0, 1.0, 0.0],
    ])
    .unwrap()
}

pub fn fig1_zeros() -> Vec<Complex64> {
    zeros(&[(1.0, -1.99), (3.02, 3.0), (1.0, 3.0), (-0.01, 1.0)])
}

pub fn fig2_zeros() -> Vec<Complex64> {
    zeros(&[(2.0, -2.99), (2.02, -2.01), (1.0, -1.01), (-0.01, 1.0)])
}

pub fn fig3_zeros() -> Vec<Complex64> {
    zeros(&[(1.01, 2.0), (2.15, 2.56), (3.35, 1.95)])
}

pub fn fig4_zeros() -> Vec<Complex64> {
    zeros(&[(1.3, 4.16), (0.12, 2.03), (0.11, 1.62), (-2.6, -0.2), (-1.71, 0.81)])
}

pub fn fig5_zeros() -> Vec<Complex64> {
    zeros(&[(1.3, 4.16), (0.1, 2.0), (0.11, 1.62), (3.0, -0.2), (-1.69, 0.83)])
}

pub fn fig6_zeros() -> Vec<Complex64> {
    zeros(&[(1.54, 2.47), (2.01, 2.18), (2.95, 1.86)])
}

pub fn fig7_zeros() -> Vec<Complex64> {
    zeros(&[(1.4, -2.01), (2.15, 2.32), (-1.39, 1.86)])
}

pub struct HamiltonianRun {
    pub name: &'static str,
    pub h: Hamiltonian,
    pub zeros: Vec<Complex64>,
    pub period: f64,
}

/// The five Hamiltonian experiments with their periods.
pub fn hamiltonian_runs() -> Vec<HamiltonianRun> {
    vec![
        HamiltonianRun { name: "fig1", h: h22(), zeros: fig1_zeros(), period: TAU },
        HamiltonianRun { name: "fig2", h: h22(), zeros: fig2_zeros(), period: TAU },
        HamiltonianRun { name: "fig3", h: h25(), zeros: fig3_zeros(), period: 5.0 * std::f64::consts::PI },
        HamiltonianRun { name: "fig4", h: h28(), zeros: fig4_zeros(), period: TAU },
        HamiltonianRun { name: "fig5", h: h28(), zeros: fig5_zeros(), period: TAU },
    ]
}

impl HamiltonianRun {
    pub fn track(&self, dt: f64) -> Result<PathBundle> {
        let cfg = TrackerConfig { dt, ..TrackerConfig::default() };
        track(&Initial::Zeros(self.zeros.clone()), &self.h, self.period, &cfg)
    }
}

pub struct OperatorRun {
    pub name: &'static str,
    pub op: DisplacementOp,
    pub zeros: Vec<Complex64>,
    pub period: f64,
}

pub fn operator_runs() -> Vec<OperatorRun> {
    vec![
        OperatorRun { name: "fig6", op: build_x(3).unwrap(), zeros: fig6_zeros(), period: 3.0 },
        OperatorRun {
            name: "fig7",
            op: displacement(3, 1, 1, PhaseConvention::HalfInverse).unwrap(),
            zeros: fig7_zeros(),
            period: 3.0,
        },
    ]
}

/// A grid with a whole number of samples per unit time.
pub fn unit_grid(t_end: f64, per_unit: usize) -> Vec<f64> {
    let steps = (t_end * per_unit as f64).round() as usize;
    (0..=steps).map(|k| k as f64 / per_unit as f64).collect()
}

impl OperatorRun {
    pub fn track(&self, periods: f64, per_unit: usize) -> Result<PathBundle> {
        let times = unit_grid(periods * self.period, per_unit);
        let cfg = TrackerConfig { dt: 1.0 / per_unit as f64, ..TrackerConfig::default() };
        evolve_displacement_from_zeros(&self.zeros, &self.op, &times, &cfg)
    }

    /// Re-rooting reference through the same lifted starting zeros.
    pub fn reroot(&self, tracked: &PathBundle, times: &[f64]) -> Result<PathBundle> {
        let g0 = tracked.initial_state.clone();
        let first = tracked.initial_zeros();
        let (alpha, beta) = match self.op.kind() {
            OpKind::X => (0, 1),
            OpKind::Z => (1, 0),
            OpKind::D { alpha, beta } => (alpha, beta),
        };
        let source = EvolutionSource::Displacement { alpha, beta, matrix: self.op.matrix().clone() };
        reroot_along(
            |t| {
                let u = fractional_power(&self.op, t).matrix;
                let g = nalgebra::DVector::from_column_slice(g0.coefficients());
                QuantumState::normalized((u * g).as_slice().to_vec())
            },
            &g0,
            Some(&first),
            times,
            &RootFindConfig::default(),
            source,
        )
    }
}

/// Largest label-wise torus distance between two bundles at the given times.
pub fn max_distance(a: &PathBundle, b: &PathBundle, times: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &t in times {
        let (x, y) = (a.at_time(t).expect("time in range"), b.at_time(t).expect("time in range"));
        for (p, q) in x.iter().zip(&y) {
            worst = worst.max(a.cell.torus_distance(*p, *q));
        }
    }
    worst
}

/// Greedy nearest-partner distance between two zero sets of equal size.
pub fn set_distance(a: &[Complex64], b: &[Complex64], cell: &Cell) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for p in a {
        let (k, dist) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, q)| (k, cell.torus_distance(*p, *q)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("unused partner");
        used[k] = true;
        worst = worst.max(dist);
    }
    worst
}

pub fn checkpoints(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

fn phase_change(f: &AnalyticFunction, a: Complex64, b: Complex64, depth: u32) -> f64 {
    let mut d = f.evaluate(b).arg() - f.evaluate(a).arg();
    d -= TAU * (d / TAU).round();
    if d.abs() > 0.5 && depth < 40 {
        let m = 0.5 * (a + b);
        return phase_change(f, a, m, depth + 1) + phase_change(f, m, b, depth + 1);
    }
    d
}

/// Winding of the phase of G around the boundary of `cell`, in turns.
pub fn contour_count(state: &QuantumState, cell: &Cell) -> f64 {
    let f = AnalyticFunction::new(state.clone(), *cell);
    let (z0, s) = (cell.corner(), cell.side());
    let corners = [z0, z0 + s, z0 + c(s, s), z0 + c(0.0, s), z0];
    let per_edge = 64;
    let mut total = 0.0;
    for w in corners.windows(2) {
        for k in 0..per_edge {
            let a = w[0] + (w[1] - w[0]) * (k as f64 / per_edge as f64);
            let b = w[0] + (w[1] - w[0]) * ((k + 1) as f64 / per_edge as f64);
            total += phase_change(&f, a, b, 0);
        }
    }
    total / TAU
}
