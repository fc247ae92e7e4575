//! Closed path systems of periodic evolutions: permutation, multiplicities
//! and winding numbers.
//!
//! After one period T the zero set returns to itself, so ζ_n(T) ≡ ζ_{π(n)}(0)
//! modulo Λ for some permutation π. A cycle (n, π(n), π²(n), ...) of length M
//! is one closed path traversed over M·T, and its winding is the total lattice
//! displacement of the concatenated lift divided by the cell side.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::evolution::PathBundle;

/// Default matching tolerance as a fraction of the cell side.
pub const DEFAULT_MATCH_FRACTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct Cycle {
    /// Path labels in traversal order, starting from the smallest.
    pub members: Vec<usize>,
    /// Winding with the sign normalized so the first nonzero component is positive.
    pub winding: (i64, i64),
    /// Winding in the direction of time.
    pub signed_winding: (i64, i64),
}

impl Cycle {
    /// Multiplicity M.
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathClassification {
    pub period: f64,
    /// `permutation[n] = m` with ζ_n(T) ≡ ζ_m(0).
    pub permutation: Vec<usize>,
    pub cycles: Vec<Cycle>,
    /// Largest matched distance on the torus at t = T.
    pub max_match_error: f64,
    /// Largest distance of a lifted displacement from its lattice vector.
    pub max_winding_residual: f64,
}

impl PathClassification {
    pub fn dim(&self) -> usize {
        self.permutation.len()
    }

    /// Cycle type as a multiset of (M, winding).
    pub fn signature(&self) -> BTreeMap<(usize, (i64, i64)), usize> {
        let mut out = BTreeMap::new();
        for c in &self.cycles {
            *out.entry((c.multiplicity(), c.winding)).or_insert(0) += 1;
        }
        out
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.cycles.iter().map(Cycle::multiplicity).collect();
        m.sort_unstable_by(|a, b| b.cmp(a));
        m
    }
}

fn canonical(w: (i64, i64)) -> (i64, i64) {
    if w.0 < 0 || (w.0 == 0 && w.1 < 0) {
        (-w.0, -w.1)
    } else {
        w
    }
}

/// Splits a permutation into cycles, each starting at its smallest member.
pub fn cycles_of(permutation: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; permutation.len()];
    let mut out = Vec::new();
    for start in 0..permutation.len() {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut n = start;
        while !seen[n] {
            seen[n] = true;
            cycle.push(n);
            n = permutation[n];
        }
        out.push(cycle);
    }
    out
}

/// Classifies the paths of a bundle covering at least [0, T].
pub fn classify(bundle: &PathBundle, period: f64, match_tol: Option<f64>) -> Result<PathClassification> {
    let cell = bundle.cell;
    let side = cell.side();
    let tol = match_tol.unwrap_or(DEFAULT_MATCH_FRACTION * side);
    if !(period > 0.0) {
        return Err(Error::InvalidInput(format!("period must be positive, got {period}")));
    }
    if bundle.is_empty() || bundle.times[0].abs() > 1e-12 {
        return Err(Error::InsufficientData("bundle must start at t = 0".into()));
    }
    let end = *bundle.times.last().expect("nonempty");
    if end < period * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!("bundle ends at t = {end}, before one period T = {period}")));
    }
    let start = bundle.sample(0);
    let at_t = bundle.at_time(period).expect("covered");
    let cost: Vec<Vec<f64>> =
        at_t.iter().map(|a| start.iter().map(|b| cell.torus_distance(*a, *b)).collect()).collect();
    let assignment = min_cost_assignment(&cost, 1e-12);
    let permutation = assignment.columns;
    let mut max_match_error: f64 = 0.0;
    for (n, &m) in permutation.iter().enumerate() {
        let e = cost[n][m];
        max_match_error = max_match_error.max(e);
        if e > tol {
            return Err(Error::Classification(format!(
                "zero {n} at t = T is {e:e} from its best match (tolerance {tol:e}); dt may be too large"
            )));
        }
    }
    if assignment.ambiguous {
        return Err(Error::Classification("zeros at t = 0 are too close to match uniquely".into()));
    }

    let mut cycles = Vec::new();
    let mut max_winding_residual: f64 = 0.0;
    for members in cycles_of(&permutation) {
        let displacement: Complex64 = members.iter().map(|&n| at_t[n] - start[permutation[n]]).sum();
        let w = displacement / side;
        let signed = (w.re.round() as i64, w.im.round() as i64);
        let residual = (displacement - Complex64::new(signed.0 as f64, signed.1 as f64) * side).norm();
        max_winding_residual = max_winding_residual.max(residual);
        if residual > tol * members.len() as f64 {
            return Err(Error::Classification(format!("winding of cycle {members:?} is not a lattice vector")));
        }
        // Direct closure check when the run is long enough.
        let full = period * members.len() as f64;
        if let Some(after) = bundle.at_time(full) {
            let n = members[0];
            let dz = after[n] - start[n];
            let r = (dz - Complex64::new(signed.0 as f64, signed.1 as f64) * side).norm();
            max_winding_residual = max_winding_residual.max(r);
        }
        cycles.push(Cycle { members, winding: canonical(signed), signed_winding: signed });
    }
    Ok(PathClassification { period, permutation, cycles, max_match_error, max_winding_residual })
}

/// One change in cycle type between two classifications.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CycleChange {
    /// A cycle type present in `a` only (count times).
    Removed { multiplicity: usize, winding: (i64, i64), count: usize },
    /// A cycle type present in `b` only.
    Added { multiplicity: usize, winding: (i64, i64), count: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StructuralDiff {
    pub changes: Vec<CycleChange>,
    /// Multiplicities in `a` that combine into a multiplicity in `b`.
    pub joins: Vec<(Vec<usize>, usize)>,
    /// A multiplicity in `a` that breaks into several in `b`.
    pub splits: Vec<(usize, Vec<usize>)>,
}

impl StructuralDiff {
    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn describe(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (parts, whole) in &self.joins {
            out.push(format!("{} paths with multiplicities {parts:?} join into one path with M = {whole}", parts.len()));
        }
        for (whole, parts) in &self.splits {
            out.push(format!("one path with M = {whole} splits into {} paths {parts:?}", parts.len()));
        }
        if self.joins.is_empty() && self.splits.is_empty() {
            for c in &self.changes {
                out.push(match c {
                    CycleChange::Removed { multiplicity, winding, count } => {
                        format!("-{count} path(s) M = {multiplicity}, winding {winding:?}")
                    }
                    CycleChange::Added { multiplicity, winding, count } => {
                        format!("+{count} path(s) M = {multiplicity}, winding {winding:?}")
                    }
                });
            }
        }
        out
    }
}

/// Label-free comparison of the cycle structure of two runs.
pub fn compare_classifications(a: &PathClassification, b: &PathClassification) -> Result<StructuralDiff> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidInput(format!("cannot compare d = {} with d = {}", a.dim(), b.dim())));
    }
    let (sa, sb) = (a.signature(), b.signature());
    let mut diff = StructuralDiff::default();
    let mut removed: Vec<usize> = Vec::new();
    let mut added: Vec<usize> = Vec::new();
    for (key, &ca) in &sa {
        let cb = sb.get(key).copied().unwrap_or(0);
        if ca > cb {
            diff.changes.push(CycleChange::Removed { multiplicity: key.0, winding: key.1, count: ca - cb });
            removed.extend(std::iter::repeat(key.0).take(ca - cb));
        }
    }
    for (key, &cb) in &sb {
        let ca = sa.get(key).copied().unwrap_or(0);
        if cb > ca {
            diff.changes.push(CycleChange::Added { multiplicity: key.0, winding: key.1, count: cb - ca });
            added.extend(std::iter::repeat(key.0).take(cb - ca));
        }
    }
    removed.sort_unstable();
    added.sort_unstable();
    if added.len() == 1 && removed.len() > 1 && removed.iter().sum::<usize>() == added[0] {
        diff.joins.push((removed, added[0]));
    } else if removed.len() == 1 && added.len() > 1 && added.iter().sum::<usize>() == removed[0] {
        diff.splits.push((removed[0], added));
    }
    Ok(diff)
}
