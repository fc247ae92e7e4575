//! toruszeros: track and classify the zeros of finite quantum systems on the torus.

mod config;
mod run;
mod svg;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use toruszeros::io::{BundleFile, ClassificationFile, StateFile, ZerosFile};
use toruszeros::paths::classify;
use toruszeros::zeros::{complete_zeros, find_zeros, state_from_zeros, RootFindConfig};
use toruszeros::Error;

#[derive(Parser)]
#[command(name = "toruszeros", version, about = "Paths of the zeros of theta-function representations on the torus")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override the tracker time step.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Seed for random initial states and the invariant suite.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Also write an SVG plot of the paths.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track the zeros and write paths.csv / paths.json.
    Evolve,
    /// Classify the closed paths of a periodic run.
    Classify {
        /// A paths.json written by `evolve`; with --config instead, the run is done first.
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Period; defaults to the one recorded in the bundle.
        #[arg(long)]
        period: Option<f64>,
        /// Matching tolerance; defaults to 1e-3 of the cell side.
        #[arg(long)]
        match_tol: Option<f64>,
    },
    /// Convert between state.json and zeros.json.
    Convert {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a named check and print a pass/fail table.
    Verify {
        /// Defaults to `oracle` for Hamiltonians, `proposition1` for X and
        /// `conjecture` for general displacements; `invariants` needs no config.
        #[arg(long, value_enum)]
        check: Option<Check>,
        /// Dimension for the invariant suite.
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Oracle,
    Proposition1,
    Conjecture,
    Invariants,
}

enum Failure {
    Core(Error),
    Verification(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::Format(_) | Error::Domain(_) | Error::Precondition(_) => 2,
        Error::InsufficientData(_) => 4,
        _ => 3,
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        Error::Format(format!("{}: field \"{at}\": {}", path.display(), e.inner()))
    })
}

fn experiment(cli: &Cli) -> Result<config::Experiment, Error> {
    let path = cli.config.as_ref().ok_or_else(|| Error::InvalidInput("--config is required".into()))?;
    let cfg: config::ExperimentConfig = read_json(path)?;
    cfg.resolve(cli.dt, cli.seed)
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn evolve(cli: &Cli) -> Result<(), Failure> {
    let exp = experiment(cli)?;
    let bundle = run::run(&exp)?;
    let written = run::write_outputs(&exp, &bundle, &cli.out, cli.svg)?;
    println!("experiment   {}", exp.name);
    println!("d            {}", exp.d);
    println!("cell side    {:.4}", bundle.cell.side());
    match exp.period {
        Some(t) => println!("period       {t:.6}"),
        None => println!("period       none detected"),
    }
    println!("t_end        {:.6}", exp.t_end);
    println!("steps        {}", bundle.stats.steps);
    println!("sum defect   {:.3e}", bundle.max_sum_defect());
    println!("wrote        {}", written.csv.display());
    println!("wrote        {}", written.json.display());
    if let Some(p) = written.svg {
        println!("wrote        {}", p.display());
    }
    Ok(())
}

fn classify_cmd(cli: &Cli, bundle: &Option<PathBuf>, period: Option<f64>, match_tol: Option<f64>) -> Result<(), Failure> {
    let bundle = match bundle {
        Some(p) => read_json::<BundleFile>(p)?.to_bundle()?,
        None => run::run(&experiment(cli)?)?,
    };
    let period = period
        .or(bundle.period)
        .ok_or_else(|| Error::InvalidInput("no period recorded; pass --period".into()))?;
    let c = classify(&bundle, period, match_tol)?;
    let text = serde_json::to_string_pretty(&ClassificationFile::from_classification(&c)).map_err(Error::from)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::InvalidInput(e.to_string()))?;
    write_text(&cli.out.join("classification.json"), &(text.clone() + "\n"))?;
    println!("{text}");
    Ok(())
}

fn convert(input: &Path, output: &Option<PathBuf>) -> Result<(), Failure> {
    let value: serde_json::Value = read_json(input)?;
    let text = if value.get("g").is_some() {
        let s = read_json::<StateFile>(input)?.to_state()?;
        let cell = toruszeros::Cell::origin(s.dim());
        let zs = find_zeros(&s, &cell, &RootFindConfig::default())?;
        serde_json::to_string_pretty(&ZerosFile::from_zero_set(&zs)).map_err(Error::from)?
    } else if value.get("zeros").is_some() {
        let file: ZerosFile = read_json(input)?;
        let cell = file.cell();
        let zeros = file.zeros()?;
        let state = state_from_zeros(&zeros, &cell)?;
        let full = complete_zeros(&zeros, &cell)?;
        let last = full[full.len() - 1];
        if zeros.len() + 1 == file.d {
            eprintln!("completed zero: [{}, {}]", last.re, last.im);
        } else {
            let given = zeros[zeros.len() - 1];
            eprintln!(
                "last zero replaced by sum-rule value [{}, {}] (given [{}, {}], offset {:.3e})",
                last.re,
                last.im,
                given.re,
                given.im,
                cell.torus_distance(last, given)
            );
        }
        serde_json::to_string_pretty(&StateFile::from_state(&state.phase_fixed())).map_err(Error::from)?
    } else {
        return Err(Error::Format(format!("{}: expected a field \"g\" (state) or \"zeros\"", input.display())).into());
    };
    match output {
        Some(p) => write_text(p, &(text + "\n"))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn verify_cmd(cli: &Cli, check: Option<Check>, dim: usize) -> Result<(), Failure> {
    let rows = match check {
        Some(Check::Invariants) => verify::invariants(dim, cli.seed)?,
        _ => {
            let exp = experiment(cli)?;
            let check = check.unwrap_or(match &exp.generator {
                config::Generator::Hamiltonian(_) => Check::Oracle,
                config::Generator::Operator(op) if op.kind() == toruszeros::phase_space::OpKind::X => Check::Proposition1,
                config::Generator::Operator(_) => Check::Conjecture,
            });
            match check {
                Check::Oracle => verify::oracle(&exp)?,
                Check::Proposition1 => verify::proposition1(&exp)?,
                Check::Conjecture => verify::conjecture(&exp)?,
                Check::Invariants => unreachable!(),
            }
        }
    };
    verify::print(&rows);
    let failed = rows.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(Failure::Verification(failed));
    }
    Ok(())
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("TORUSZEROS_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("TORUSZEROS_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::InvalidInput("TORUSZEROS_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().map_err(Failure::from).and_then(|()| match &cli.command {
        Command::Evolve => evolve(&cli),
        Command::Classify { bundle, period, match_tol } => classify_cmd(&cli, bundle, *period, *match_tol),
        Command::Convert { input, output } => convert(input, output),
        Command::Verify { check, dim } => verify_cmd(&cli, *check, *dim),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
