use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pauli_shield::experiments::{
    min_buffer_search, parse_config, run_sweep, temperature_compensation_report, Axis, SweepSpec,
    TimeStep,
};
use pauli_shield::potentials::{Shape, Task};
use pauli_shield::{Error, Result};

/// Pauli-blocking protected control of trapped one-dimensional Fermi gases.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity of one trap expansion
    Expand {
        #[arg(long, default_value_t = 1.0)]
        omega_i: f64,
        #[arg(long, default_value_t = 0.01)]
        omega_f: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Fidelity of one trap transport
    Transport {
        #[arg(long, default_value_t = 0.0)]
        x0i: f64,
        #[arg(long, default_value_t = 90.0)]
        x0f: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Fidelity of one trap splitting
    Split {
        #[arg(long, default_value_t = 0.0)]
        h_i: f64,
        #[arg(long, default_value_t = 20.0)]
        h_f: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the sweep described by a config file and write CSV
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fermi gap E_{N+1} - E_N of the anharmonic trap as CSV
    Gap {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 20)]
        n_max: usize,
    },
    /// Minimal buffer for the threshold over the config's T grid
    Minbuffer {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Threshold-crossing temperatures per buffer count over the config's tau grid
    Compensation {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Process time
    #[arg(short = 'T', long = "time", default_value_t = 25.0)]
    total_time: f64,
    #[arg(long, default_value = "sinusoidal")]
    shape: Shape,
    #[arg(long, default_value_t = 2)]
    n_p: usize,
    #[arg(long, default_value_t = 0)]
    n_b: usize,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    /// Time step; the task default when omitted
    #[arg(long)]
    dt: Option<f64>,
    /// Halve the time step until overlaps are converged
    #[arg(long, conflicts_with = "dt")]
    auto_dt: bool,
    #[arg(long)]
    n_points: Option<usize>,
    /// Evaluate the enumeration oracle instead of the Gram determinant
    #[arg(long)]
    oracle: bool,
}

fn single(task: Task, run: RunArgs) -> Result<()> {
    let mut spec = SweepSpec::new(
        task,
        run.shape,
        run.total_time,
        Axis::BufferCount,
        vec![run.n_b as f64],
    );
    spec.n_p = run.n_p;
    spec.tau = run.tau;
    spec.n_points = run.n_points;
    spec.verify_oracle = run.oracle;
    spec.workers = 1;
    spec.dt = match (run.dt, run.auto_dt) {
        (Some(dt), _) => TimeStep::Fixed(dt),
        (None, true) => TimeStep::Auto,
        (None, false) => TimeStep::Default,
    };
    let result = run_sweep(&spec)?;
    let row = &result.fidelity_rows()[0];
    println!("{}", row.fidelity);
    eprintln!(
        "method={} configs={} dt={} n_points={} levels={}",
        row.method, row.configs, row.dt, row.n_points, row.levels
    );
    Ok(())
}

fn load(path: &Path) -> Result<SweepSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn emit(output: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match output {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path)?);
            write(&mut file)?;
            file.flush()?;
        }
        None => write(&mut io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Expand {
            omega_i,
            omega_f,
            lambda,
            run,
        } => single(
            Task::Expansion {
                omega_i,
                omega_f,
                anharmonicity: lambda,
            },
            run,
        ),
        Command::Transport {
            x0i,
            x0f,
            lambda,
            run,
        } => single(
            Task::Transport {
                x0_i: x0i,
                x0_f: x0f,
                omega: 1.0,
                anharmonicity: lambda,
            },
            run,
        ),
        Command::Split { h_i, h_f, run } => single(
            Task::Splitting {
                h_i,
                h_f,
                omega: 1.0,
            },
            run,
        ),
        Command::Sweep { config, output } => {
            let result = run_sweep(&load(&config)?)?;
            emit(output.as_deref(), |w| result.write_csv(w))
        }
        Command::Gap { lambda, n_max } => {
            let task = Task::expansion().with_anharmonicity(lambda)?;
            let values = (1..=n_max).map(|n| n as f64).collect();
            let spec = SweepSpec::new(
                task,
                Shape::Sinusoidal,
                f64::NAN,
                Axis::ParticleNumberGap,
                values,
            );
            let result = run_sweep(&spec)?;
            emit(None, |w| result.write_csv(w))
        }
        Command::Minbuffer { config, output } => {
            let spec = load(&config)?;
            if spec.axis != Axis::ProcessTime {
                return Err(Error::Config("minbuffer needs `axis = T`".into()));
            }
            let n_b_max = *spec.n_b.last().expect("validated nonempty");
            let report = min_buffer_search(&spec, &spec.axis_values, n_b_max)?;
            emit(output.as_deref(), |w| report.write_csv(w))
        }
        Command::Compensation { config, output } => {
            let spec = load(&config)?;
            if spec.axis != Axis::Temperature {
                return Err(Error::Config("compensation needs `axis = tau`".into()));
            }
            let report = temperature_compensation_report(&spec, &spec.axis_values, &spec.n_b)?;
            emit(output.as_deref(), |w| report.write_csv(w))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
