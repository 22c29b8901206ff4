use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use fraclab::output::summary;
use fraclab::runner::{jobs, run_jobs};
use fraclab::sweep::run_sweep;
use fraclab::{Config, FunctionSpec, Identity, Report};

#[derive(Parser)]
#[command(
    name = "fraclab",
    version,
    about = "Numerical checks of fractional Laplacian identities on compact manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify identities; exits 0 iff every requested identity passes.
    Verify {
        /// leibniz, bochner, gamma2, cordoba, sv, kato, duhamel-mode, decay, oracles
        identities: Vec<String>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run the parameter grid of the [sweep] table and fit convergence slopes.
    Sweep {
        /// Identities to sweep; defaults to the config's list.
        identities: Vec<String>,
        #[command(flatten)]
        opts: RunOpts,
        #[arg(long, value_delimiter = ',')]
        sweep_modes: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        sweep_z_nodes: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        sweep_levels: Vec<usize>,
    },
    /// Summarize an existing report.json; exits 0 iff it records a pass.
    Report {
        #[arg(long, default_value = "fraclab-out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunOpts {
    /// TOML configuration; flags override its [run] and [functions] values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifold: Option<String>,
    /// Fractional orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    s: Vec<f64>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    z_nodes: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    mesh_level: Option<usize>,
    /// Preset (cos, cos2, sin2, mixed, bump, positive-shift), a number, or an
    /// inline table such as '{cos = [[1, 1.0], [3, 0.4]]}'.
    #[arg(long)]
    u: Option<String>,
    #[arg(long)]
    v: Option<String>,
    #[arg(long)]
    phi: Option<String>,
    /// Record wall times, which makes reports differ between runs.
    #[arg(long)]
    timings: bool,
    #[arg(long, default_value = "fraclab-out")]
    out: PathBuf,
}

impl RunOpts {
    fn config(&self, identities: &[String]) -> Result<Config> {
        let mut c = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if !identities.is_empty() {
            c.run.identities = identities.iter().map(|s| s.parse()).collect::<Result<Vec<Identity>>>()?;
        }
        if let Some(m) = &self.manifold {
            c.run.manifold = m.clone();
        }
        if !self.s.is_empty() {
            c.run.s = self.s.clone();
        }
        if let Some(n) = self.modes {
            c.run.modes = n;
        }
        if self.z_nodes.is_some() {
            c.run.z_nodes = self.z_nodes;
        }
        if self.tol.is_some() {
            c.run.tol = self.tol;
        }
        if let Some(l) = self.mesh_level {
            c.run.mesh_level = l;
        }
        if let Some(u) = &self.u {
            c.functions.u = FunctionSpec::parse(u)?;
        }
        if let Some(v) = &self.v {
            c.functions.v = Some(FunctionSpec::parse(v)?);
        }
        if let Some(phi) = &self.phi {
            c.functions.phi = FunctionSpec::parse(phi)?;
        }
        if self.timings {
            c.run.deterministic = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn usage_error(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { identities, opts } => {
            let cfg = match opts.config(&identities) {
                Ok(c) => c,
                Err(e) => return usage_error(e),
            };
            let runs = match run_jobs(&cfg, &jobs(&cfg)) {
                Ok(r) => r,
                Err(e) => return usage_error(e),
            };
            let report = Report::new(cfg, runs);
            print!("{}", summary(&report.runs));
            if let Err(e) = report.write(&opts.out) {
                eprintln!("error: {e:#}");
                return ExitCode::from(3);
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("{} of {} runs failed", report.failures().count(), report.runs.len());
                ExitCode::FAILURE
            }
        }
        Command::Sweep { identities, opts, sweep_modes, sweep_z_nodes, sweep_levels } => {
            let mut cfg = match opts.config(&identities) {
                Ok(c) => c,
                Err(e) => return usage_error(e),
            };
            for (dst, src) in [
                (&mut cfg.sweep.modes, sweep_modes),
                (&mut cfg.sweep.z_nodes, sweep_z_nodes),
                (&mut cfg.sweep.mesh_levels, sweep_levels),
            ] {
                if !src.is_empty() {
                    *dst = src;
                }
            }
            let report = match run_sweep(&cfg) {
                Ok(r) => r,
                Err(e) => return usage_error(e),
            };
            print!("{}", report.table());
            if let Err(e) = report.write(&opts.out) {
                eprintln!("error: {e:#}");
                return ExitCode::from(3);
            }
            // low-resolution runs fail by design; only hard errors count
            if report.runs.iter().any(|r| r.error.is_some()) {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Report { out } => match Report::read(&out) {
            Ok(r) => {
                print!("{}", summary(&r.runs));
                println!("{} runs, {} failed", r.runs.len(), r.failures().count());
                if r.pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => usage_error(e),
        },
    }
}
