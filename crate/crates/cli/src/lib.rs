//! Command-line front end: scenario validation, simulation, embedding runs,
//! audits and convergence certification.
//!
//! Exit codes: 0 success, pass or certified; 1 violations or failed checks;
//! 2 inconclusive certificate; 3 usage, parse or I/O errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pfifo::{
    audit, certify_convergence, jacobian_sign_survey, load_scenario, simulate, simulate_embedding,
    AuditOptions, CertificateStatus, CertifyOptions, EmbeddingState, LinkId, NumericsError,
    Scenario, ScenarioError, Trajectory,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pfifo",
    version,
    about = "Traffic network dynamics with partial FIFO junctions"
)]
struct Cli {
    /// Suppress the human-readable summary on stdout.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a scenario and report its structure and warnings.
    Validate {
        file: PathBuf,
        /// Write the JSON rendering of the scenario ("-" for stdout).
        #[arg(long, value_name = "PATH")]
        emit_json: Option<PathBuf>,
    },
    /// Integrate the network dynamics and write the trajectory as CSV.
    Simulate {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Initial densities in link id order (default: empty network).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        /// CSV destination (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the embedding system and write both halves as CSV.
    Embed {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Lower initial state (default: empty network).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        /// Upper initial state (default: jam densities).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y0: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one `phase_<id>.csv` per link with columns t, x, y.
        #[arg(long, value_name = "DIR")]
        emit_phase: Option<PathBuf>,
    },
    /// Audit the structural flow conditions and the decomposition function.
    Check {
        file: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Finite-difference sign tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Report destination (TOML).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify global convergence from the extreme embedding trajectory.
    Certify {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        residual_tol: Option<f64>,
        #[arg(long)]
        gap_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify the signs of the off-diagonal Jacobian entries.
    Survey {
        file: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Final time (default: from the scenario).
    #[arg(long)]
    t_final: Option<f64>,
    /// Integrator step (default: from the scenario).
    #[arg(long)]
    dt: Option<f64>,
}

impl RunArgs {
    fn resolve(&self, s: &Scenario) -> (f64, f64) {
        (
            self.t_final.unwrap_or(s.run.t_final),
            self.dt.unwrap_or(s.run.dt),
        )
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<NumericsError>().is_some() {
        return EXIT_FAIL;
    }
    match err.downcast_ref::<ScenarioError>() {
        Some(ScenarioError::Validation(_)) => EXIT_FAIL,
        _ => EXIT_USAGE,
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command, cli.quiet) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn load(path: &Path) -> Result<Scenario> {
    let s = load_scenario(path)?;
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    Ok(s)
}

fn run(command: Command, quiet: bool) -> Result<i32> {
    let say = |text: String| {
        if !quiet {
            println!("{text}");
        }
    };
    match command {
        Command::Validate { file, emit_json } => {
            let s = load(&file)?;
            let net = s.model.net();
            say(format!(
                "{}: {} links, {} junctions, model {:?}, {} warnings",
                s.name,
                net.num_links(),
                net.num_junctions(),
                s.model.model().kind(),
                s.warnings.len()
            ));
            if let Some(path) = emit_json {
                write_text(&path, &(s.to_json() + "\n"))?;
            }
            Ok(EXIT_OK)
        }
        Command::Simulate { file, run, x0, out } => {
            let s = load(&file)?;
            let (t_final, dt) = run.resolve(&s);
            let n = s.link_ids().len();
            let x0 = state_arg("x0", x0, vec![0.0; n], n)?;
            let traj = simulate(&s.model, &x0, t_final, dt)?;
            let header = column_names(s.link_ids(), &["x"]);
            write_csv(out.as_deref(), &header, &traj)?;
            Ok(EXIT_OK)
        }
        Command::Embed {
            file,
            run,
            x0,
            y0,
            out,
            emit_phase,
        } => {
            let s = load(&file)?;
            let (t_final, dt) = run.resolve(&s);
            let n = s.link_ids().len();
            let x0 = state_arg("x0", x0, vec![0.0; n], n)?;
            let y0 = state_arg("y0", y0, s.jam_densities(), n)?;
            let traj = simulate_embedding(&s.model, &EmbeddingState::new(x0, y0), t_final, dt)?;
            let header = column_names(s.link_ids(), &["x", "y"]);
            write_csv(out.as_deref(), &header, &traj)?;
            if let Some(dir) = emit_phase {
                write_phase(&dir, s.link_ids(), &traj)?;
            }
            Ok(EXIT_OK)
        }
        Command::Check {
            file,
            samples,
            seed,
            tol,
            out,
        } => {
            let s = load(&file)?;
            let opts = AuditOptions {
                samples: samples.unwrap_or(s.run.samples),
                seed: seed.unwrap_or(s.run.seed),
                tol,
            };
            let report = audit(&s.model, &opts);
            say(format!("{report}"));
            if let Some(path) = out {
                write_text(&path, &report.to_toml())?;
            }
            Ok(if report.passed() { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Certify {
            file,
            run,
            residual_tol,
            gap_tol,
            out,
        } => {
            let s = load(&file)?;
            let (t_horizon, dt) = run.resolve(&s);
            let opts = CertifyOptions {
                t_horizon,
                dt,
                residual_tol: residual_tol.unwrap_or(s.run.residual_tol),
                gap_tol: gap_tol.unwrap_or(s.run.gap_tol),
                ..CertifyOptions::default()
            };
            let cert = certify_convergence(&s.model, &opts)?;
            say(format!("{cert}"));
            if let Some(path) = out {
                write_text(&path, &cert.to_toml())?;
            }
            Ok(match cert.status {
                CertificateStatus::Certified => EXIT_OK,
                CertificateStatus::Inconclusive => EXIT_INCONCLUSIVE,
            })
        }
        Command::Survey {
            file,
            samples,
            seed,
            tol,
            out,
        } => {
            let s = load(&file)?;
            let survey = jacobian_sign_survey(
                &s.model,
                samples.unwrap_or(s.run.samples),
                seed.unwrap_or(s.run.seed),
                tol,
            );
            say(format!("{survey}"));
            if let Some(path) = out {
                write_text(&path, &survey.to_toml())?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn state_arg(name: &str, given: Option<Vec<f64>>, default: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    let v = given.unwrap_or(default);
    if v.len() != n {
        bail!(
            "--{name} has {} values but the scenario has {n} links",
            v.len()
        );
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        bail!("--{name} contains non-finite value {bad}");
    }
    Ok(v)
}

fn column_names(ids: &[LinkId], prefixes: &[&str]) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for p in prefixes {
        cols.extend(ids.iter().map(|id| format!("{p}_{id}")));
    }
    cols
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = open_out(Some(path))?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// One row per integrator step; floats in shortest round-trip form.
fn write_csv(path: Option<&Path>, header: &[String], traj: &Trajectory) -> Result<()> {
    let mut w = open_out(path)?;
    writeln!(w, "{}", header.join(","))?;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        write!(w, "{t}")?;
        for v in state {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn write_phase(dir: &Path, ids: &[LinkId], traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let n = ids.len();
    for (l, id) in ids.iter().enumerate() {
        let path = dir.join(format!("phase_{id}.csv"));
        let mut w = open_out(Some(&path))?;
        writeln!(w, "t,x_{id},y_{id}")?;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            writeln!(w, "{t},{},{}", s[l], s[n + l])?;
        }
        w.flush()?;
    }
    Ok(())
}
