use std::fs;
use std::path::{Path, PathBuf};

use toruszeros::evolution::{track, Initial};
use toruszeros::io::{write_bundle_csv, BundleFile};
use toruszeros::phase_space::{evolve_displacement, evolve_displacement_from_zeros, DisplacementRoute};
use toruszeros::{Error, PathBundle, Result};

use crate::config::{Experiment, Generator};
use crate::svg;

/// Sample times for operator powers: a grid with a whole number of samples
/// per unit time, so integer time shifts map samples onto samples.
pub fn operator_times(t_end: f64, dt: f64) -> Vec<f64> {
    let per_unit = (1.0 / dt - 1e-9).ceil().max(1.0);
    let steps = (t_end * per_unit - 1e-9).ceil() as usize;
    let mut times: Vec<f64> = (0..steps).map(|k| k as f64 / per_unit).collect();
    times.push(t_end);
    times
}

pub fn run(exp: &Experiment) -> Result<PathBundle> {
    match &exp.generator {
        Generator::Hamiltonian(h) => track(&exp.initial, h, exp.t_end, &exp.tracker),
        Generator::Operator(op) => {
            let times = operator_times(exp.t_end, exp.tracker.dt);
            match &exp.initial {
                Initial::Zeros(z) => evolve_displacement_from_zeros(z, op, &times, &exp.tracker),
                Initial::State(s) => evolve_displacement(s, op, &times, DisplacementRoute::Track(exp.tracker)),
            }
        }
    }
}

fn write(path: &Path, text: &[u8]) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

pub struct Written {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub svg: Option<PathBuf>,
}

pub fn write_outputs(exp: &Experiment, bundle: &PathBundle, out: &Path, want_svg: bool) -> Result<Written> {
    fs::create_dir_all(out).map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", out.display())))?;
    let csv = out.join(exp.outputs.csv.as_deref().unwrap_or("paths.csv"));
    let json = out.join(exp.outputs.json.as_deref().unwrap_or("paths.json"));
    let mut buf = Vec::new();
    write_bundle_csv(bundle, &mut buf)?;
    write(&csv, &buf)?;
    let text = serde_json::to_string(&BundleFile::from_bundle(bundle))?;
    write(&json, text.as_bytes())?;
    let svg = if want_svg || exp.outputs.svg.is_some() {
        let p = out.join(exp.outputs.svg.as_deref().unwrap_or("paths.svg"));
        write(&p, svg::render(bundle, &exp.name).as_bytes())?;
        Some(p)
    } else {
        None
    };
    Ok(Written { csv, json, svg })
}
