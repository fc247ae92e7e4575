use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use toruszeros::analytic_rep::sum_defect;
use toruszeros::evolution::{
    derivatives_at, finite_difference_derivatives, oracle_evolve_from, track, Initial,
};
use toruszeros::phase_space::{
    build_x, fractional_power, momentum_route_discrepancy, verify_conjecture, verify_proposition1, OpKind,
};
use toruszeros::zeros::{find_zeros, state_from_zeros, RootFindConfig};
use toruszeros::{Cell, Error, Hamiltonian, PathBundle, QuantumState, Result, TrackerConfig};

use crate::config::{Experiment, Generator};
use crate::run::run;

pub struct Row {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub detail: String,
}

impl Row {
    fn new(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        Self { name: name.into(), residual, tol, detail: String::new() }
    }

    fn with(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.residual < self.tol
    }
}

pub fn print(rows: &[Row]) {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(5);
    println!("{:<width$}  {:>12}  {:>9}  result", "check", "residual", "tol");
    for r in rows {
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        let extra = if r.detail.is_empty() { String::new() } else { format!("  {}", r.detail) };
        println!("{:<width$}  {:>12.3e}  {:>9.1e}  {verdict}{extra}", r.name, r.residual, r.tol);
    }
}

fn max_matched_distance(a: &PathBundle, b: &PathBundle, times: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for t in times {
        if let (Some(x), Some(y)) = (a.at_time(*t), b.at_time(*t)) {
            for (p, q) in x.iter().zip(&y) {
                worst = worst.max(a.cell.torus_distance(*p, *q));
            }
        }
    }
    worst
}

fn checkpoints(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

/// Tracker against exact evolution plus re-rooting.
pub fn oracle(exp: &Experiment) -> Result<Vec<Row>> {
    let Generator::Hamiltonian(h) = &exp.generator else {
        return Err(Error::InvalidInput("the oracle check needs a Hamiltonian config".into()));
    };
    let bundle = run(exp)?;
    let times = checkpoints(exp.t_end, 100);
    let oracle = oracle_evolve_from(&bundle.initial_state, Some(&bundle.initial_zeros()), h, &times, &RootFindConfig::default())?;
    Ok(vec![
        Row::new("tracker vs oracle (100 checkpoints)", max_matched_distance(&bundle, &oracle, &times), 1e-5),
        Row::new("sum-rule defect along paths", bundle.max_sum_defect(), 1e-6),
    ])
}

pub fn proposition1(exp: &Experiment) -> Result<Vec<Row>> {
    if !matches!(&exp.generator, Generator::Operator(op) if op.kind() == OpKind::X) {
        return Err(Error::InvalidInput("proposition1 needs the operator {\"op\": \"X\"}".into()));
    }
    let bundle = run(exp)?;
    let report = verify_proposition1(&bundle, 1e-4)?;
    let mut rows: Vec<Row> = report
        .entries
        .iter()
        .map(|(n, beta, m)| {
            Row::new(format!("n={n} beta={beta}"), m.residual, report.tol).with(format!("matches path {}", m.target))
        })
        .collect();
    let t_max = (exp.d - 1) as f64;
    let times = checkpoints(t_max.min(exp.t_end), 30);
    rows.push(Row::new("momentum-basis route", momentum_route_discrepancy(&bundle, &times)?, 1e-8));
    Ok(rows)
}

pub fn conjecture(exp: &Experiment) -> Result<Vec<Row>> {
    let Generator::Operator(_) = &exp.generator else {
        return Err(Error::InvalidInput("conjecture needs a displacement operator config".into()));
    };
    let bundle = run(exp)?;
    let report = verify_conjecture(&bundle, 1e-3, None)?;
    Ok(report
        .best
        .iter()
        .map(|m| {
            Row::new(format!("path {} ~ path {}", m.source, m.target), m.residual, report.tol).with(format!(
                "sigma = {:.5}{:+.5}i, delta = {:.5}",
                m.shift.re, m.shift.im, m.time_offset
            ))
        })
        .collect())
}

/// Property suite on a random state and Hamiltonian.
pub fn invariants(d: usize, seed: u64) -> Result<Vec<Row>> {
    if d < 2 {
        return Err(Error::InvalidInput("the invariant suite needs d ≥ 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cell = Cell::origin(d);
    let root = RootFindConfig::default();
    let state = QuantumState::random(d, &mut rng);
    let h = Hamiltonian::random(d, &mut rng);
    let mut rows = Vec::new();

    let zs = find_zeros(&state, &cell, &root)?;
    rows.push(Row::new("zero count", (zs.dim() as f64 - d as f64).abs(), 0.5));
    rows.push(Row::new("sum rule at t = 0", sum_defect(zs.zeros(), &cell), 1e-8));

    let back = state_from_zeros(zs.zeros(), &cell)?;
    rows.push(Row::new("state -> zeros -> state", back.distance_mod_phase(&state), 1e-6));

    let j = derivatives_at(&state, zs.zeros())?;
    let fd = finite_difference_derivatives(&state, zs.zeros(), 1e-6, &root)?;
    let scale = j.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let err = (&j - &fd).iter().map(|c| c.norm()).fold(0.0, f64::max) / scale;
    rows.push(Row::new("closed-form derivative vs differences", err, 1e-4));

    let t_end = 1.0;
    let cfg = TrackerConfig { dt: 2e-4, ..Default::default() };
    let forward = track(&Initial::State(state.clone()), &h, t_end, &cfg)?;
    let times = checkpoints(t_end, 20);
    let oracle = oracle_evolve_from(&state, Some(&forward.initial_zeros()), &h, &times, &root)?;
    rows.push(Row::new("tracker vs oracle", max_matched_distance(&forward, &oracle, &times), 1e-5));
    rows.push(Row::new("sum rule along paths", forward.max_sum_defect(), 1e-6));
    let u = h.propagator(t_end);
    let g = state.coefficients();
    let norm: f64 = (0..d).map(|i| (0..d).map(|j| u[(i, j)] * g[j]).sum::<toruszeros::Complex64>().norm_sqr()).sum();
    rows.push(Row::new("norm after evolution", (norm.sqrt() - 1.0).abs(), 1e-10));
    let end_state = h.evolve(&state, t_end)?;

    let reversed = Hamiltonian::new(-h.matrix().clone())?;
    let backward = track(&Initial::State(end_state), &reversed, t_end, &cfg)?;
    let returned = backward.sample(backward.len() - 1);
    let start = forward.sample(0);
    let mut worst: f64 = 0.0;
    for z in &returned {
        let nearest = start.iter().map(|s| cell.torus_distance(*s, *z)).fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    rows.push(Row::new("time reversal", worst, 1e-5));

    let x = build_x(d)?;
    let (s, t) = (0.37, 1.21);
    let lhs = fractional_power(&x, s).matrix * fractional_power(&x, t).matrix;
    let group = (lhs - fractional_power(&x, s + t).matrix).iter().map(|c| c.norm()).fold(0.0, f64::max);
    rows.push(Row::new("X^s X^t = X^(s+t)", group, 1e-10));
    Ok(rows)
}
