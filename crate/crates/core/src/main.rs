use clap::{Parser, Subcommand, ValueEnum};
use mseh::cli_harness::{self as cli, Format, Initial, Report, DEFAULT_TOLERANCE};
use mseh::metric_dsl::VectorFamily;
use mseh::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mseh", version, about = "Multisymplectic Einstein-Hilbert identities on metric jets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Json,
    Csv,
}

impl From<Fmt> for Format {
    fn from(f: Fmt) -> Self {
        match f {
            Fmt::Json => Format::Json,
            Fmt::Csv => Format::Csv,
        }
    }
}

#[derive(clap::Args)]
struct Out {
    /// Residual ratio (measured / acceptance budget) below which a check passes.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Fmt,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the identity suite over random jets.
    Verify {
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        out: Out,
    },
    /// Evaluate the constraint blocks of a metric file at a point.
    Check {
        /// Metric JSON file, or the name of a built-in corpus member.
        metric: String,
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(3..=4))]
        order: u8,
        #[command(flatten)]
        out: Out,
    },
    /// Noether current of a vector field and its divergence.
    Noether {
        metric: String,
        vector: PathBuf,
        #[arg(long, required = true, allow_hyphen_values = true)]
        at: Vec<String>,
        #[command(flatten)]
        out: Out,
    },
    /// Integrate a metric depending on x⁰ alone.
    Integrate {
        #[arg(long, conflicts_with = "from", required_unless_present = "from", allow_hyphen_values = true)]
        kasner: Option<String>,
        /// JSON state {"t", "g", "v"} with packed metric components.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        t0: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        /// Trajectory CSV destination.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
}

fn parse_kasner(s: &str) -> Result<[f64; 3], Error> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Input(format!("`{p}` is not a number"))))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| Error::Input(format!("--kasner expects p1,p2,p3, got `{s}`")))
}

fn emit(rep: &Report, out: &Out) -> Result<(), Error> {
    let text = rep.render(out.format.into())?;
    match &out.output {
        Some(p) => cli::write_atomic(p, text.as_bytes())?,
        None => println!("{text}"),
    }
    eprint!("{}", rep.summary());
    Ok(())
}

fn run(cmd: Cmd) -> Result<bool, Error> {
    match cmd {
        Cmd::Verify { samples, seed, out } => {
            let rep = cli::run_suite(samples as usize, seed, out.tolerance)?;
            emit(&rep, &out)?;
            Ok(rep.passed())
        }
        Cmd::Check { metric, at, order, out } => {
            let fam = cli::load_metric(&metric)?;
            let rep = cli::check_metric(&fam, cli::parse_point(&at)?, order as usize, out.tolerance)?;
            emit(&rep, &out)?;
            Ok(rep.passed())
        }
        Cmd::Noether { metric, vector, at, out } => {
            let fam = cli::load_metric(&metric)?;
            let z = VectorFamily::from_path(&vector, Some(&fam.bindings.coord_names))?;
            let points = at.iter().map(|s| cli::parse_point(s)).collect::<Result<Vec<_>, _>>()?;
            let rep = cli::check_noether(&fam, &z, &points, out.tolerance)?;
            emit(&rep, &out)?;
            Ok(rep.passed())
        }
        Cmd::Integrate { kasner, from, t0, t1, h, trajectory, out } => {
            let initial = match (kasner, from) {
                (Some(k), _) => Initial::Kasner(parse_kasner(&k)?),
                (None, Some(p)) => Initial::State(cli::load_state(&p)?),
                (None, None) => return Err(Error::Input("one of --kasner or --from is required".into())),
            };
            let (tr, rep) = cli::run_integrate(&initial, t0, t1, h, out.tolerance)?;
            if let (Some(tr), Some(path)) = (&tr, &trajectory) {
                let mut buf = Vec::new();
                tr.write_csv(&mut buf)?;
                cli::write_atomic(Path::new(path), &buf)?;
            }
            if let Some(step) = rep.values.get("failure_step") {
                eprintln!("integration stopped at step {} (t = {})", step[0], step[1]);
            }
            emit(&rep, &out)?;
            Ok(rep.passed())
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
