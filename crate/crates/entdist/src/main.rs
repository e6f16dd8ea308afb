use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use entdist::formats::TableFormat;
use entdist::{execute, Command, RunError, RunOptions, Scenario};

#[derive(Parser)]
#[command(
    name = "entdist",
    version,
    about = "Simulate entangled-photon distribution over optical fiber"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Arrival-time histograms and latency comparison of two fibers.
    Latency(RunArgs),
    /// Distribute the source state through one fiber and reconstruct it.
    Distribute(RunArgs),
    /// Concurrence, purity and CHSH value against time-bin spacing.
    Sweep(RunArgs),
    /// Reconstruct the fiber's polarization channel.
    ProcessTomo(RunArgs),
    /// Parse and resolve a scenario without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Format of tabular outputs.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn run(cli: Cli) -> Result<(), RunError> {
    let (command, args) = match cli.command {
        Cmd::ValidateConfig { config } => {
            let scenario = Scenario::from_path(&config)?;
            println!("{}: ok (sha256 {})", config.display(), scenario.sha256());
            if let Some(f) = &scenario.fiber {
                let link = f.resolve()?;
                let wp = scenario.source.wavepacket.resolve()?;
                println!(
                    "fiber {}: delay {:.4} us, sigma' {:.2} ps, loss {:.2} dB, p {}",
                    link.spec.name,
                    link.spec.propagation_delay_us(),
                    link.spec.output_sigma_ps(&wp),
                    link.spec.link_loss_db(),
                    link.spec.depolarizing_p
                );
            }
            return Ok(());
        }
        Cmd::Latency(a) => (Command::Latency, a),
        Cmd::Distribute(a) => (Command::Distribute, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::ProcessTomo(a) => (Command::ProcessTomo, a),
    };
    let scenario = Scenario::from_path(&args.config)?;
    let opts = RunOptions {
        seed: args.seed,
        format: match args.format {
            Format::Csv => TableFormat::Csv,
            Format::Json => TableFormat::Json,
        },
    };
    let manifest = execute(command, &scenario, &opts, &args.out_dir)?;
    for f in &manifest.files {
        println!("{}", args.out_dir.join(&f.path).display());
    }
    Ok(())
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
