use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use toruszeros::evolution::{detect_period, Initial};
use toruszeros::io::{complex, matrix_from_rows, OperatorSpec, Pair};
use toruszeros::{Complex64, DisplacementOp, Error, Hamiltonian, QuantumState, Result, TrackerConfig};

/// A matrix entry: a real number or an `[re, im]` pair.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex(Pair),
}

impl Entry {
    fn value(&self) -> Pair {
        match self {
            Entry::Real(x) => [*x, 0.0],
            Entry::Complex(p) => *p,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Coefficients(Vec<Pair>),
    /// The string "random": a Haar-random state drawn from the seed.
    Named(String),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<String>,
    pub json: Option<String>,
    pub svg: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub d: usize,
    #[serde(default)]
    pub hamiltonian: Option<Vec<Vec<Entry>>>,
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub initial_zeros: Option<Vec<Pair>>,
    #[serde(default)]
    pub initial_state: Option<InitialState>,
    #[serde(default)]
    pub t_end: Option<f64>,
    /// Run length in periods when `t_end` is absent.
    #[serde(default)]
    pub periods: Option<f64>,
    #[serde(default)]
    pub tracker: Option<serde_json::Value>,
    #[serde(default)]
    pub outputs: Outputs,
}

pub enum Generator {
    Hamiltonian(Hamiltonian),
    Operator(DisplacementOp),
}

/// A config with every default filled in.
pub struct Experiment {
    pub name: String,
    pub d: usize,
    pub generator: Generator,
    pub initial: Initial,
    pub period: Option<f64>,
    pub t_end: f64,
    pub tracker: TrackerConfig,
    pub outputs: Outputs,
}

impl ExperimentConfig {
    pub fn resolve(self, dt_override: Option<f64>, seed: u64) -> Result<Experiment> {
        let d = self.d;
        if d == 0 {
            return Err(Error::Format("field \"d\" must be at least 1".into()));
        }
        let generator = match (&self.hamiltonian, &self.operator) {
            (Some(rows), None) => {
                let rows: Vec<Vec<Pair>> = rows.iter().map(|r| r.iter().map(Entry::value).collect()).collect();
                let m = matrix_from_rows(&rows).map_err(|e| Error::Format(format!("field \"hamiltonian\": {e}")))?;
                if m.nrows() != d {
                    return Err(Error::Format(format!("field \"hamiltonian\" is {0}x{0} but d = {d}", m.nrows())));
                }
                Generator::Hamiltonian(Hamiltonian::new(m)?)
            }
            (None, Some(op)) => Generator::Operator(op.build(d)?),
            _ => {
                return Err(Error::Format("exactly one of \"hamiltonian\" and \"operator\" must be given".into()));
            }
        };
        let initial = match (&self.initial_zeros, &self.initial_state) {
            (Some(z), None) => {
                if z.len() + 1 != d && z.len() != d {
                    return Err(Error::Format(format!("field \"initial_zeros\" needs d or d-1 entries, got {}", z.len())));
                }
                Initial::Zeros(z.iter().copied().map(complex).collect())
            }
            (None, Some(InitialState::Coefficients(g))) => {
                if g.len() != d {
                    return Err(Error::Format(format!("field \"initial_state\" has {} entries, d = {d}", g.len())));
                }
                Initial::State(QuantumState::normalized(g.iter().copied().map(complex).collect::<Vec<Complex64>>())?)
            }
            (None, Some(InitialState::Named(s))) if s == "random" => {
                Initial::State(QuantumState::random(d, &mut ChaCha8Rng::seed_from_u64(seed)))
            }
            (None, Some(InitialState::Named(s))) => {
                return Err(Error::Format(format!("field \"initial_state\": unknown value \"{s}\"")));
            }
            _ => {
                return Err(Error::Format("exactly one of \"initial_zeros\" and \"initial_state\" must be given".into()));
            }
        };
        let period = match &generator {
            Generator::Hamiltonian(h) => detect_period(h, 1e-8, 1e6).map(|p| p.t),
            Generator::Operator(op) => op.period(),
        };
        let t_end = match (self.t_end, period) {
            (Some(t), _) => t,
            (None, Some(p)) => p * self.periods.unwrap_or(1.0),
            (None, None) => {
                return Err(Error::Format("no period detected; field \"t_end\" is required".into()));
            }
        };
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::Format(format!("run length must be positive, got {t_end}")));
        }
        let (mut tracker, dt_given) = match &self.tracker {
            Some(v) => {
                let cfg: TrackerConfig = serde_json::from_value(v.clone())
                    .map_err(|e| Error::Format(format!("field \"tracker\": {e}")))?;
                (cfg, v.get("dt").is_some())
            }
            None => (TrackerConfig::default(), false),
        };
        if let Some(dt) = dt_override {
            tracker.dt = dt;
        } else if !dt_given {
            if let Some(p) = period {
                tracker.dt = p / 5000.0;
            }
        }
        tracker.validate()?;
        Ok(Experiment {
            name: self.name.unwrap_or_else(|| "experiment".into()),
            d,
            generator,
            initial,
            period,
            t_end,
            tracker,
            outputs: self.outputs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Experiment> {
        serde_json::from_str::<ExperimentConfig>(text).map_err(|e| Error::Format(e.to_string()))?.resolve(None, 1)
    }

    #[test]
    fn exactly_one_generator() {
        let both = r#"{"d": 2, "hamiltonian": [[1,0],[0,2]], "operator": {"op": "X"}, "initial_zeros": [[1,1]]}"#;
        assert!(parse(both).is_err());
        let none = r#"{"d": 2, "initial_zeros": [[1,1]]}"#;
        assert!(parse(none).is_err());
    }

    #[test]
    fn default_dt_follows_period() {
        let e = parse(r#"{"d": 2, "hamiltonian": [[0,0],[0,1]], "initial_zeros": [[1,1]]}"#).unwrap();
        let t = std::f64::consts::TAU;
        assert!((e.period.unwrap() - t).abs() < 1e-12);
        assert!((e.tracker.dt - t / 5000.0).abs() < 1e-15);
        let e = parse(r#"{"d": 2, "hamiltonian": [[0,0],[0,1]], "initial_zeros": [[1,1]], "tracker": {"dt": 0.01}}"#).unwrap();
        assert_eq!(e.tracker.dt, 0.01);
    }

    #[test]
    fn unknown_field_rejected() {
        let err = parse(r#"{"d": 2, "hamiltonian": [[0,0],[0,1]], "initial_zeros": [[1,1]], "tracker": {"dtt": 1}}"#);
        assert!(err.err().expect("rejected").to_string().contains("dtt"));
    }
}
