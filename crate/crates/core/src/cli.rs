//! Command-line front end: `energy`, `minimize`, `sweep`, `verify`, `slab`.
//!
//! Settings come from an optional JSON file and are overridden by flags.
//! Every command that writes an output directory also writes the effective
//! configuration there as `config.json`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::capillarity::{slab_family_energy, total_energy, EnergyBreakdown, SessileConfig};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::io;
use crate::optimizer::{default_lambda, distance_to_bbeta, minimize, q_convergence, young_sweep, SolverConfig};
use crate::potential::{build_mesh, solve_equilibrium, DiagonalRule, DEFAULT_GRADING};
use crate::verify::{Level, Suite};

#[derive(Debug, Parser)]
#[command(name = "capillarity", version, about = "Charged sessile droplets in the half-plane")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Flags shared by every subcommand; they override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Boundary panels for the equilibrium solve.
    #[arg(long, global = true)]
    pub panels: Option<usize>,
    /// Vertices of the optimised polygon.
    #[arg(long, global = true)]
    pub vertices: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Admit beta = +-1 (slab family only).
    #[arg(long, global = true)]
    pub allow_degenerate_beta: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy breakdown of a polygon file.
    Energy {
        shape: PathBuf,
    },
    /// Minimise the energy at fixed area.
    Minimize {
        /// Initial polygon; the unit square when omitted.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Contact-angle sweep over beta and q, started from B^beta.
    Sweep {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        betas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        qs: Option<Vec<f64>>,
        /// Also fit the decay of the distance to B^beta at the first beta.
        #[arg(long)]
        q_convergence: bool,
    },
    /// Run the acceptance checks.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        /// Drop the constant from the kernel diagonal (mutation test).
        #[arg(long, hide = true)]
        inject_diagonal_bug: bool,
    },
    /// Energies of the area-one slabs `[-R, R] x [0, 1/(2R)]`.
    Slab {
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Quick,
    Full,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub beta: Option<f64>,
    pub q: Option<f64>,
    pub lambda: Option<f64>,
    pub n_panels: Option<usize>,
    pub n_shape_vertices: Option<usize>,
    pub fd_step: Option<f64>,
    pub step_size: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol_energy: Option<f64>,
    pub remesh_every: Option<usize>,
    pub contact_band: Option<f64>,
    pub seed: Option<u64>,
    pub beta_list: Option<Vec<f64>>,
    pub q_list: Option<Vec<f64>>,
    pub r_list: Option<Vec<f64>>,
}

/// Effective configuration after merging file and flags.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub beta: f64,
    pub q: f64,
    pub lambda: f64,
    pub n_panels: usize,
    pub n_shape_vertices: usize,
    pub fd_step: Option<f64>,
    pub step_size: f64,
    pub max_iters: usize,
    pub tol_energy: f64,
    pub remesh_every: usize,
    pub contact_band: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<Level>,
    pub allow_degenerate_beta: bool,
}

impl RunConfig {
    fn resolve(cli: &Cli) -> Result<Self> {
        let file = match &cli.overrides.config {
            Some(p) => {
                let text = fs::read_to_string(p)?;
                serde_json::from_str::<ConfigFile>(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => ConfigFile::default(),
        };
        let o = &cli.overrides;
        let d = SolverConfig::default();
        let beta = o.beta.or(file.beta).unwrap_or(0.0);
        let mut rc = RunConfig {
            command: String::new(),
            beta,
            q: o.q.or(file.q).unwrap_or(0.0),
            lambda: o.lambda.or(file.lambda).unwrap_or_else(|| default_lambda(beta)),
            n_panels: o.panels.or(file.n_panels).unwrap_or(d.sessile.n_panels),
            n_shape_vertices: o.vertices.or(file.n_shape_vertices).unwrap_or(d.n_shape_vertices),
            fd_step: file.fd_step.or(d.fd_step),
            step_size: file.step_size.unwrap_or(d.step_size),
            max_iters: file.max_iters.unwrap_or(d.max_iters),
            tol_energy: file.tol_energy.unwrap_or(d.tol_energy),
            remesh_every: file.remesh_every.unwrap_or(d.remesh_every),
            contact_band: file.contact_band.unwrap_or(d.contact_band),
            seed: o.seed.or(file.seed).unwrap_or(d.seed),
            shape: None,
            init: None,
            beta_list: None,
            q_list: None,
            r_list: None,
            level: None,
            allow_degenerate_beta: o.allow_degenerate_beta,
        };
        match &cli.command {
            Command::Energy { shape } => {
                rc.command = "energy".into();
                rc.shape = Some(shape.clone());
            }
            Command::Minimize { init, max_iters } => {
                rc.command = "minimize".into();
                rc.init = init.clone();
                if let Some(m) = max_iters {
                    rc.max_iters = *m;
                }
            }
            Command::Sweep { betas, qs, .. } => {
                rc.command = "sweep".into();
                rc.beta_list = Some(betas.clone().or(file.beta_list).unwrap_or_else(|| vec![rc.beta]));
                rc.q_list = Some(qs.clone().or(file.q_list).unwrap_or_else(|| vec![rc.q]));
            }
            Command::Verify { level, .. } => {
                rc.command = "verify".into();
                rc.level = Some(match level {
                    LevelArg::Quick => Level::Quick,
                    LevelArg::Full => Level::Full,
                });
            }
            Command::Slab { radii } => {
                rc.command = "slab".into();
                rc.r_list = Some(
                    radii
                        .clone()
                        .or(file.r_list)
                        .unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0, 16.0]),
                );
            }
        }
        Ok(rc)
    }

    fn sessile(&self) -> SessileConfig {
        SessileConfig {
            beta: self.beta,
            q: self.q,
            lambda: self.lambda,
            n_panels: self.n_panels,
            ..SessileConfig::default()
        }
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig {
            sessile: self.sessile(),
            n_shape_vertices: self.n_shape_vertices,
            fd_step: self.fd_step,
            step_size: self.step_size,
            max_iters: self.max_iters,
            tol_energy: self.tol_energy,
            remesh_every: self.remesh_every,
            contact_band: self.contact_band,
            seed: self.seed,
        }
    }

    fn out_dir(&self, o: &Overrides) -> PathBuf {
        o.out.clone().unwrap_or_else(|| PathBuf::from("out").join(&self.command))
    }
}

fn prepare_dir(dir: &Path, rc: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("config.json"), rc)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct MinimizeSummary {
    converged: bool,
    stagnated: bool,
    iterations: usize,
    energy: EnergyBreakdown,
    area: f64,
    area_error: f64,
    gamma1: Option<f64>,
    gamma2: Option<f64>,
    cos_gamma: Option<f64>,
    cos_gamma_minus_beta: Option<f64>,
    hausdorff_to_bbeta: f64,
    symdiff_to_bbeta: f64,
    vertices: usize,
}

fn cmd_energy(rc: &RunConfig, out: Option<&Path>) -> Result<i32> {
    let shape = io::read_polygon(rc.shape.as_deref().expect("energy always has a shape"))?;
    let e = total_energy(&shape, &rc.sessile())?;
    println!("{}", serde_json::to_string_pretty(&e)?);
    if let Some(dir) = out {
        prepare_dir(dir, rc)?;
        write_json(&dir.join("energy.json"), &e)?;
        let mesh = build_mesh(&shape, rc.n_panels, DEFAULT_GRADING)?;
        let sol = solve_equilibrium(&mesh)?;
        io::write_panels(fs::File::create(dir.join("panels.csv"))?, &mesh, &sol)?;
    }
    Ok(0)
}

fn cmd_minimize(rc: &RunConfig, dir: &Path) -> Result<i32> {
    let cfg = rc.solver();
    cfg.validate()?;
    let init = match &rc.init {
        Some(p) => io::read_polygon(p)?,
        None => fixtures::unit_square(),
    };
    prepare_dir(dir, rc)?;
    let (shape, trace, stagnated) = match minimize(&init, &cfg) {
        Ok((s, t)) => (s, t, false),
        Err(Error::Stagnation { shape, trace, .. }) => (*shape, *trace, true),
        Err(e) => return Err(e),
    };
    io::write_polygon(&dir.join("shape.csv"), &shape)?;
    io::write_trace(fs::File::create(dir.join("trace.csv"))?, &trace)?;
    let energy = total_energy(&shape, &cfg.sessile)?;
    let angles = shape
        .contact_angles_fitted(cfg.contact_band * shape.diameter())
        .ok();
    let cos_gamma = angles.map(|a| 0.5 * (a.gamma1.cos() + a.gamma2.cos()));
    let dist = distance_to_bbeta(&shape, rc.beta, cfg.sessile.target_area)?;
    let summary = MinimizeSummary {
        converged: trace.converged,
        stagnated,
        iterations: trace.len(),
        energy,
        area: shape.area(),
        area_error: shape.area() - cfg.sessile.target_area,
        gamma1: angles.map(|a| a.gamma1),
        gamma2: angles.map(|a| a.gamma2),
        cos_gamma,
        cos_gamma_minus_beta: cos_gamma.map(|c| c - rc.beta),
        hausdorff_to_bbeta: dist.hausdorff,
        symdiff_to_bbeta: dist.symdiff,
        vertices: shape.len(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if stagnated {
        eprintln!("error: line search stagnated; trace written to {}", dir.display());
        return Ok(4);
    }
    Ok(0)
}

fn cmd_sweep(rc: &RunConfig, dir: &Path, with_q_convergence: bool) -> Result<i32> {
    let cfg = rc.solver();
    let betas = rc.beta_list.as_deref().unwrap_or_default();
    let qs = rc.q_list.as_deref().unwrap_or_default();
    for &b in betas {
        SolverConfig {
            sessile: SessileConfig { beta: b, ..cfg.sessile },
            ..cfg
        }
        .validate()?;
    }
    if qs.iter().any(|q| !(*q >= 0.0)) {
        return Err(Error::Config("q values must be >= 0".into()));
    }
    prepare_dir(dir, rc)?;
    let rows = young_sweep(betas, qs, &cfg);
    io::write_sweep(fs::File::create(dir.join("sweep.csv"))?, &rows)?;
    let mut stdout = std::io::stdout().lock();
    io::write_sweep(&mut stdout, &rows)?;
    stdout.flush()?;
    if with_q_convergence {
        let beta = betas.first().copied().unwrap_or(rc.beta);
        let qc = q_convergence(beta, qs, &cfg)?;
        write_json(&dir.join("q_convergence.json"), &qc)?;
    }
    Ok(0)
}

fn cmd_verify(rc: &RunConfig, out: Option<&Path>, inject: bool) -> Result<i32> {
    let mut suite = Suite::new(rc.level.unwrap_or(Level::Quick));
    suite.seed = rc.seed;
    if inject {
        suite.rule = DiagonalRule::MissingConstant;
    }
    let results = suite.run(|r| println!("{}", r.line()));
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).collect();
    println!("{} checks, {} failed", results.len(), failed.len());
    if let Some(dir) = out {
        prepare_dir(dir, rc)?;
        write_json(&dir.join("report.json"), &results)?;
    }
    Ok(if failed.is_empty() { 0 } else { 1 })
}

fn cmd_slab(rc: &RunConfig, out: Option<&Path>) -> Result<i32> {
    let sc = rc.sessile();
    let mut rows = Vec::new();
    for &r in rc.r_list.as_deref().unwrap_or_default() {
        rows.push((r, slab_family_energy(r, &sc, rc.allow_degenerate_beta)?));
    }
    let mut stdout = std::io::stdout().lock();
    io::write_slab(&mut stdout, &rows)?;
    stdout.flush()?;
    if let Some(dir) = out {
        prepare_dir(dir, rc)?;
        io::write_slab(fs::File::create(dir.join("slab.csv"))?, &rows)?;
    }
    Ok(0)
}

fn execute(cli: &Cli) -> Result<i32> {
    let rc = RunConfig::resolve(cli)?;
    let out = cli.overrides.out.as_deref();
    match &cli.command {
        Command::Energy { .. } => cmd_energy(&rc, out),
        Command::Minimize { .. } => cmd_minimize(&rc, &rc.out_dir(&cli.overrides)),
        Command::Sweep { q_convergence, .. } => cmd_sweep(&rc, &rc.out_dir(&cli.overrides), *q_convergence),
        Command::Verify {
            inject_diagonal_bug, ..
        } => cmd_verify(&rc, out, *inject_diagonal_bug),
        Command::Slab { .. } => cmd_slab(&rc, out),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
