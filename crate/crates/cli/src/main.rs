//! `linfinity`: seeding, gap closing and continuation of connecting orbits
//! to infinity from the command line.

mod commands;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scenario::{parse_pair, HetDirection, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("ConfigInvalid: {0}")]
    Config(String),
    #[error("{category}: {source}", category = .source.category())]
    Module {
        #[from]
        source: linfinity::Error,
    },
    #[error("Io: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "linfinity", version, about = "Connecting orbits to a degenerate equilibrium at infinity")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by all commands; they override the configuration file.
#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML), or the metadata JSON written by an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $LINFINITY_OUT, else .]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    ntst: Option<usize>,
    #[arg(long, global = true)]
    ncol: Option<usize>,
    #[arg(long, global = true)]
    newton_tol: Option<f64>,
    #[arg(long, global = true)]
    h0: Option<f64>,
    #[arg(long, global = true)]
    h_max: Option<f64>,
    #[arg(long, global = true)]
    max_points: Option<usize>,
}

#[derive(Debug, Args, Default)]
struct LinFlags {
    #[arg(long, allow_negative_numbers = true)]
    delta_0: Option<f64>,
    #[arg(long)]
    delta_b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta_b: Option<f64>,
    #[arg(long)]
    crossing_index: Option<usize>,
    /// Crossing of `u_B` paired with the finite segment; 0 picks the nearest.
    #[arg(long)]
    crossing_index_b: Option<usize>,
}

#[derive(Debug, Args, Default)]
struct LoopFlags {
    /// Loop guess CSV with columns t,x,y,z.
    #[arg(long = "loop")]
    loop_file: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    seed_y: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    seed_z: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues and eigenvectors of the origin and the case-C margin.
    Equilibria,
    /// Averaged radial flux through cylinders about the base equilibrium.
    Flux {
        /// Radii as start:stop:step.
        #[arg(long)]
        table: Option<String>,
        #[arg(long)]
        w_b: Option<f64>,
    },
    /// Backward-time separatrix probes in the blown-up chart.
    Probe {
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        x0: Option<Vec<f64>>,
        #[arg(long)]
        delta: Option<f64>,
        /// Bisect the capture boundary on lo:hi.
        #[arg(long, value_parser = parse_pair)]
        bisect: Option<[f64; 2]>,
    },
    /// Seeds the two-segment Lin problem at the given parameters.
    Seed {
        #[command(flatten)]
        lin: LinFlags,
    },
    /// Continues the Lin problem in one parameter until the gap closes.
    CloseGap {
        #[command(flatten)]
        lin: LinFlags,
        /// Starting value of beta (same as --beta).
        #[arg(long)]
        beta_start: Option<f64>,
        #[arg(long)]
        free: Option<linfinity::SystemParam>,
        /// Range of the free parameter as lo:hi.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        range: Option<[f64; 2]>,
    },
    /// Continues a connecting orbit in (alpha, beta).
    ContinueHet {
        /// Connecting orbit written by close-gap.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        alpha_range: Option<[f64; 2]>,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        beta_range: Option<[f64; 2]>,
        #[arg(long, value_enum)]
        direction: Option<HetDirection>,
    },
    /// Corrects a saddle periodic orbit.
    Periodic {
        #[command(flatten)]
        source: LoopFlags,
    },
    /// Floquet multipliers and stable bundle of a periodic orbit.
    Floquet {
        #[command(flatten)]
        source: LoopFlags,
    },
    /// Connects the critical cylinder to the stable manifold of a periodic orbit.
    ConnectPeriodic {
        #[command(flatten)]
        source: LoopFlags,
        #[arg(long, allow_negative_numbers = true)]
        delta_0: Option<f64>,
        #[arg(long)]
        crossing_index: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        theta_b: Option<f64>,
    },
    /// Writes orbit and projection CSV files for a saved Lin problem.
    Export {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        min_w: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Equilibria => "equilibria",
            Command::Flux { .. } => "flux",
            Command::Probe { .. } => "probe",
            Command::Seed { .. } => "seed",
            Command::CloseGap { .. } => "close-gap",
            Command::ContinueHet { .. } => "continue-het",
            Command::Periodic { .. } => "periodic",
            Command::Floquet { .. } => "floquet",
            Command::ConnectPeriodic { .. } => "connect-periodic",
            Command::Export { .. } => "export",
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn apply_lin(s: &mut Scenario, f: LinFlags) {
    set(&mut s.lin.delta_0, f.delta_0);
    set(&mut s.lin.delta_b, f.delta_b);
    set(&mut s.lin.theta_b, f.theta_b);
    set(&mut s.lin.crossing_index, f.crossing_index);
    set(&mut s.lin.crossing_index_b, f.crossing_index_b);
}

fn apply_loop(s: &mut Scenario, f: LoopFlags) {
    if f.loop_file.is_some() {
        s.periodic.loop_file = f.loop_file;
    }
    set(&mut s.periodic.seed[0], f.seed_y);
    set(&mut s.periodic.seed[1], f.seed_z);
    set(&mut s.periodic.samples, f.samples);
}

/// The configuration file overlaid with the flags.
fn resolve(common: Common, command: &mut Command) -> Result<Scenario, CliError> {
    let mut s = match &common.config {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    if common.out.is_some() {
        s.paths.out_dir = common.out;
    }
    set(&mut s.params.alpha, common.alpha);
    set(&mut s.params.beta, common.beta);
    set(&mut s.params.gamma, common.gamma);
    set(&mut s.numerics.ntst, common.ntst);
    set(&mut s.numerics.ncol, common.ncol);
    set(&mut s.numerics.newton_tol, common.newton_tol);
    if common.h0.is_some() {
        s.numerics.h0 = common.h0;
    }
    if common.h_max.is_some() {
        s.numerics.h_max = common.h_max;
    }
    if common.max_points.is_some() {
        s.numerics.max_points = common.max_points;
    }
    match command {
        Command::Equilibria => {}
        Command::Flux { table, w_b } => {
            set(&mut s.flux.table, table.take());
            set(&mut s.flux.w_b, *w_b);
        }
        Command::Probe { x0, delta, bisect } => {
            set(&mut s.probe.x0, x0.take());
            set(&mut s.probe.delta, *delta);
            if bisect.is_some() {
                s.probe.bisect = *bisect;
            }
        }
        Command::Seed { lin } => apply_lin(&mut s, std::mem::take(lin)),
        Command::CloseGap { lin, beta_start, free, range } => {
            apply_lin(&mut s, std::mem::take(lin));
            set(&mut s.params.beta, *beta_start);
            set(&mut s.lin.free, *free);
            set(&mut s.lin.range, *range);
        }
        Command::ContinueHet { input, alpha_range, beta_range, direction } => {
            if input.is_some() {
                s.paths.input = input.take();
            }
            set(&mut s.het.alpha_range, *alpha_range);
            set(&mut s.het.beta_range, *beta_range);
            set(&mut s.het.direction, *direction);
        }
        Command::Periodic { source } | Command::Floquet { source } => apply_loop(&mut s, std::mem::take(source)),
        Command::ConnectPeriodic { source, delta_0, crossing_index, theta_b } => {
            apply_loop(&mut s, std::mem::take(source));
            set(&mut s.periodic.delta_0, *delta_0);
            set(&mut s.periodic.crossing_index, *crossing_index);
            set(&mut s.periodic.theta_b, *theta_b);
        }
        Command::Export { input, min_w } => {
            if input.is_some() {
                s.paths.input = input.take();
            }
            set(&mut s.paths.min_w, *min_w);
        }
    }
    s.validate()?;
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut command = cli.command;
    let name = command.name();
    let result = resolve(cli.common, &mut command).and_then(|s| commands::run(name, &s));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("linfinity {name}: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
