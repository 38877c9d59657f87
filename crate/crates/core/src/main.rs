use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use orlicz_flow::commands;

#[derive(Parser)]
#[command(name = "orlicz-flow", version, about = "Flow solver for the Orlicz-Aleksandrov problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the solvability and uniqueness conditions for the configured data
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the flow and write the final body, trace and diagnostics
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run from several initial bodies and compare the limits
    Uniqueness {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated presets, e.g. `ellipse:1.5:0.7,offset:1:0.3:0`
        #[arg(long)]
        bodies: String,
    },
    /// Run the geometric cross-check battery on the configured body
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_CONFIG as u8 } else { 0 });
        }
    };
    orlicz_flow::init_threads_from_env();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match cli.command {
        Command::Check { config } => commands::cmd_check(&config, &mut out),
        Command::Solve { config, out: dir } => commands::cmd_solve(&config, &dir, &mut out),
        Command::Uniqueness { config, bodies } => commands::cmd_uniqueness(&config, &bodies, &mut out),
        Command::Oracle { config } => commands::cmd_oracle(&config, &mut out),
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
