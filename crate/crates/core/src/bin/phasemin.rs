use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phasemin::experiments::{self, Command, ConfigOverrides, ExperimentConfig};

#[derive(Parser)]
#[command(name = "phasemin", version, about = "Alternating-minimization phase retrieval experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single solve with a per-iteration trajectory.
    Run(Flags),
    /// Success rate over an (n, m) grid.
    PhaseDiagram(Flags),
    /// Tabulate f, g and f/g and certify their bounds.
    FgCurve(Flags),
    /// Run the randomized inequality probes.
    LemmaCheck(Flags),
    /// Coefficient traces and growth statistics (requires --instrument).
    Dynamics(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON file with configuration values; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Signal dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Measurement counts, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "ratios")]
    m: Option<Vec<usize>>,
    /// Oversampling ratios m/n, comma separated.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    stall_window: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    instrument: bool,
    /// Monte Carlo samples per grid point (fg-curve).
    #[arg(long)]
    samples: Option<usize>,
    /// Upper end of the certification grid (fg-curve).
    #[arg(long)]
    c0: Option<f64>,
    /// Certification grid step (fg-curve).
    #[arg(long)]
    grid_step: Option<f64>,
    /// Lipschitz bound used by the certification margin (fg-curve).
    #[arg(long)]
    lipschitz: Option<f64>,
}

impl Flags {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            n_list: self.n.clone(),
            m_list: self.m.clone(),
            m_ratios: self.ratios.clone(),
            trials_per_cell: self.trials,
            tol: self.tol,
            max_iter: self.max_iter,
            stall_window: self.stall_window,
            master_seed: self.seed,
            output_path: self.out.clone(),
            instrumentation: self.instrument.then_some(true),
            n_samples: self.samples,
            c0: self.c0,
            grid_step: self.grid_step,
            lipschitz: self.lipschitz,
            ..Default::default()
        }
    }
}

fn run(command: Command, flags: &Flags) -> phasemin::Result<bool> {
    let file = flags
        .config
        .as_deref()
        .map(ConfigOverrides::from_json_file)
        .transpose()?;
    let cfg = ExperimentConfig::resolve(command, file.as_ref(), &flags.overrides())?;
    let pool = experiments::thread_pool()?;
    let outcome = pool.install(|| experiments::execute(&cfg))?;
    print!("{}", outcome.stdout);
    for f in &outcome.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        Cmd::Run(f) => (Command::Run, f),
        Cmd::PhaseDiagram(f) => (Command::PhaseDiagram, f),
        Cmd::FgCurve(f) => (Command::FgCurve, f),
        Cmd::LemmaCheck(f) => (Command::LemmaCheck, f),
        Cmd::Dynamics(f) => (Command::Dynamics, f),
    };
    match run(command, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: one or more checks failed", command.as_str());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
