use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use zoomtherm_cli::commands::{self, CliError, CommandOutput};
use zoomtherm_cli::config::{thread_cap, RunConfig};
use zoomtherm_cli::selftest;

/// Thermodynamic formalism for open one-dimensional expanding maps.
#[derive(Parser)]
#[command(name = "zoomtherm", version, about)]
struct Cli {
    /// Path to a flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for artifact files (overrides `output.dir`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect hyperbolic times along orbits (CSV: x0,n,is_hyperbolic,frequency).
    HypTimes,
    /// Build a nested collection from balls; emit members, certificates and
    /// tail bounds.
    Nest,
    /// Build the first-return induced scheme and verify the Markov axioms.
    Induce,
    /// Solve for topological pressure through the inducing identity.
    Pressure {
        /// Truncation size (overrides thermo.nsym).
        #[arg(long)]
        nsym: Option<usize>,
        /// Working cylinder depth (overrides thermo.depth).
        #[arg(long)]
        depth: Option<usize>,
        /// Periodic-orbit horizon (overrides thermo.nmax).
        #[arg(long)]
        nmax: Option<usize>,
    },
    /// Project the induced Gibbs state to an equilibrium state.
    Equilibrium {
        /// Map name (overrides map.name).
        #[arg(long)]
        map: Option<String>,
        /// Potential: `zero` or `geometric:t=<v>` (overrides potential.kind).
        #[arg(long)]
        potential: Option<String>,
        /// Scheme base `lo:hi` or `nest:<i>` (overrides scheme.base).
        #[arg(long)]
        base: Option<String>,
        #[arg(long)]
        nsym: Option<usize>,
        /// Dyadic grid depth (overrides equilibrium.grid_depth).
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Spread the conformal measure of φ − p* back to the map.
    Conformal,
    /// Estimate the escape rate of a hole from exact survivor masses.
    Escape,
    /// Run the acceptance suite and print a pass/fail table.
    Selftest,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        None => RunConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            RunConfig::parse(&text)?
        }
    };
    if let Some(dir) = &cli.out_dir {
        cfg.set("output.dir", dir.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &RunConfig, out: CommandOutput) -> Result<(), CliError> {
    print!("{}", out.stdout);
    if let Some(dir) = cfg.get("output.dir") {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create {dir}: {e}")))?;
        for (name, content) in &out.files {
            let path = std::path::Path::new(dir).join(name);
            std::fs::write(&path, content)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let _threads = thread_cap()?;
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::HypTimes => emit(&cfg, commands::run_hyp_times(&cfg)?)?,
        Command::Nest => emit(&cfg, commands::run_nest(&cfg)?)?,
        Command::Induce => emit(&cfg, commands::run_induce(&cfg)?)?,
        Command::Pressure { nsym, depth, nmax } => {
            if let Some(n) = nsym {
                cfg.set("thermo.nsym", n.to_string());
            }
            if let Some(d) = depth {
                cfg.set("thermo.depth", d.to_string());
            }
            if let Some(n) = nmax {
                cfg.set("thermo.nmax", n.to_string());
            }
            emit(&cfg, commands::run_pressure(&cfg)?)?;
        }
        Command::Equilibrium { map, potential, base, nsym, depth, tol } => {
            if let Some(m) = map {
                cfg.set("map.name", m);
            }
            if let Some(p) = potential {
                cfg.set("potential.kind", p);
            }
            if let Some(b) = base {
                cfg.set("scheme.base", b);
            }
            if let Some(n) = nsym {
                cfg.set("thermo.nsym", n.to_string());
            }
            if let Some(d) = depth {
                cfg.set("equilibrium.grid_depth", d.to_string());
            }
            if let Some(t) = tol {
                cfg.set("equilibrium.tol", t.to_string());
            }
            cfg.validate()?;
            emit(&cfg, commands::run_equilibrium(&cfg)?)?;
        }
        Command::Conformal => emit(&cfg, commands::run_conformal(&cfg)?)?,
        Command::Escape => emit(&cfg, commands::run_escape(&cfg)?)?,
        Command::Selftest => {
            let rows = selftest::run_all(thread_cap()?);
            let table = selftest::render_table(&rows);
            print!("{table}");
            if let Some(dir) = cfg.get("output.dir") {
                std::fs::create_dir_all(dir)
                    .map_err(|e| CliError::Config(format!("cannot create {dir}: {e}")))?;
                std::fs::write(std::path::Path::new(dir).join("selftest.txt"), &table)
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
            return Ok(rows.iter().all(|r| r.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
