use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beamsim::algorithms::solve_three;
use beamsim::harness::{self, presets, Suite};
use beamsim::oracle::{brute_force_solve, GridSpec};
use beamsim::Error;

/// Adaptive distributed beamforming simulator.
#[derive(Parser)]
#[command(name = "beamsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (a file, or the name of a bundled preset).
    Run(RunArgs),
    /// Draw summary CSVs into one SVG line chart.
    Plot {
        #[arg(long = "summary", required = true, num_args = 1..)]
        summaries: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
    /// List bundled presets, or print one.
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
    #[command(hide = true, subcommand)]
    Oracle(OracleCommand),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: String,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Solve the three-reading system by grid search and by closed form.
    Solve {
        #[arg(long, allow_negative_numbers = true)]
        m1: f64,
        #[arg(long, allow_negative_numbers = true)]
        m2: f64,
        #[arg(long, allow_negative_numbers = true)]
        m3: f64,
        #[arg(long, default_value_t = 1.0)]
        power: f64,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
    },
}

fn load(spec: &str) -> beamsim::Result<Suite> {
    let path = Path::new(spec);
    if path.exists() || presets::find(spec).is_none() {
        // An unreadable config is the user's input problem, not a runtime one.
        harness::load_config(path).map_err(|e| match e {
            Error::Io { path, source } => Error::Config {
                path: ".".into(),
                message: format!("cannot read {}: {source}", path.display()),
            },
            other => other,
        })
    } else {
        harness::load_preset(spec)
    }
}

fn run(args: RunArgs) -> beamsim::Result<()> {
    let mut suite = load(&args.config)?;
    suite.override_all(args.seed, args.trials, args.budget);
    suite.validate()?;
    let root = args
        .out
        .or_else(|| suite.runs[0].output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("beamsim-out").join(&suite.name));
    let outputs = harness::run_suite(&suite, &root)?;
    for o in &outputs {
        println!("{}", o.summary_path.display());
    }
    println!("{}", root.join("plot.svg").display());
    Ok(())
}

fn dispatch(cli: Cli) -> beamsim::Result<()> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Plot { summaries, out, title } => {
            harness::emit_plot(&summaries, &out, title.as_deref())?;
            println!("{}", out.display());
            Ok(())
        }
        Command::Presets { show: None } => {
            for p in &presets::PRESETS {
                let suite = harness::load_preset(p.name)?;
                println!("{}\t{}", p.name, suite.description.unwrap_or_default());
            }
            Ok(())
        }
        Command::Presets { show: Some(name) } => {
            let p = presets::find(&name)
                .ok_or_else(|| Error::Config {
                    path: ".".into(),
                    message: format!("no preset named `{name}`"),
                })?;
            print!("{}", p.json);
            Ok(())
        }
        Command::Oracle(OracleCommand::Solve {
            m1,
            m2,
            m3,
            power,
            resolution,
        }) => {
            let grid = GridSpec::for_readings(resolution, m1, m2, power);
            let b = brute_force_solve(m1, m2, m3, power, grid)?;
            let c = solve_three(m1, m2, m3, power);
            println!("method,beta,r_mag,t_mag,note");
            println!("grid,{},{},{},residual={}", b.beta, b.r_mag, b.t_mag, b.residual);
            println!(
                "closed_form,{},,{},{}",
                c.beta,
                c.t_mag,
                if c.degenerate { "degenerate" } else { "" }
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("beamsim: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
