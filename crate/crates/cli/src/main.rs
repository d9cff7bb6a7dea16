use std::path::PathBuf;
use std::process::ExitCode;

use bregmax_cli::{
    cmd_bbar, cmd_conjecture_scan, cmd_divergence, cmd_maximize, cmd_project, cmd_verify, load_direction,
    load_instance, load_pm, render_json, render_table, CliError, CliResult, Output, ToleranceOverrides,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bregmax",
    version,
    about = "Bregman families on finite sets: projections and divergence maximization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Instance file (JSON).
    #[arg(short = 'i', long = "instance")]
    instance: PathBuf,
    /// Random starts for the multistart searches.
    #[arg(long, default_value_t = 32)]
    starts: usize,
    #[arg(long, env = "BREGMAX_SEED", default_value_t = 0)]
    seed: u64,
    /// Tolerance override, e.g. `--tol lp_feas=1e-10`; repeatable.
    #[arg(long = "tol", value_name = "KEY=VALUE")]
    tol: Vec<String>,
    /// Print the report as JSON (default).
    #[arg(long, conflicts_with = "table")]
    json: bool,
    /// Print the report as a key/value table.
    #[arg(long)]
    table: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Reverse Bregman projection of a pm onto the family.
    Project {
        #[command(flatten)]
        common: Common,
        /// Pm file (JSON `{"weights": [...]}`).
        #[arg(short = 'P', long = "pm")]
        pm: PathBuf,
    },
    /// Divergence of a pm from the family.
    Divergence {
        #[command(flatten)]
        common: Common,
        #[arg(short = 'P', long = "pm")]
        pm: PathBuf,
    },
    /// Maximize the divergence from the family over all pms.
    Maximize {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate B-bar at a kernel direction, or maximize it without `-u`.
    Bbar {
        #[command(flatten)]
        common: Common,
        /// Direction file (JSON `{"u": [...]}`).
        #[arg(short = 'u', long = "direction")]
        direction: Option<PathBuf>,
    },
    /// Count local maximizers of B(., F_u) over random directions.
    ConjectureScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Run the numerical verification suite on an instance.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Project { common, .. }
            | Command::Divergence { common, .. }
            | Command::Maximize { common }
            | Command::Bbar { common, .. }
            | Command::ConjectureScan { common, .. }
            | Command::Verify { common } => common,
        }
    }
}

fn run(cmd: &Command) -> CliResult<Output> {
    let c = cmd.common();
    let inst = load_instance(&c.instance, &ToleranceOverrides::from_pairs(&c.tol)?)?;
    let n = inst.n();
    match cmd {
        Command::Project { pm, .. } => cmd_project(&inst, &load_pm(pm, n)?),
        Command::Divergence { pm, .. } => cmd_divergence(&inst, &load_pm(pm, n)?),
        Command::Maximize { .. } => cmd_maximize(&inst, c.starts, c.seed),
        Command::Bbar { direction, .. } => {
            let u = direction.as_deref().map(|p| load_direction(p, n)).transpose()?;
            cmd_bbar(&inst, u.as_deref(), c.starts, c.seed)
        }
        Command::ConjectureScan { trials, .. } => cmd_conjecture_scan(&inst, *trials, c.starts, c.seed),
        Command::Verify { .. } => cmd_verify(&inst, c.seed, c.starts),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli.command) {
        Ok(out) => {
            let text = if cli.command.common().table { render_table(&out.report) } else { render_json(&out.report) };
            print!("{text}");
            ExitCode::from(if out.passed { 0 } else { 2 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::exit_code(&e) as u8)
        }
    }
}
