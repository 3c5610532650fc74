//! Projected shape descent for the charged sessile problem and the
//! experiments built on top of it.
//!
//! Degrees of freedom are one scalar per vertex: free vertices move along
//! their bisector normal, the two contact points slide along the floor. The
//! finite-difference gradient of `P_beta + q^2 I_2` is smoothed by an `H^1`
//! metric along the free chain, made orthogonal to the area gradient, and
//! every trial shape is re-convexified and dilated back to the target area.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capillarity::{
    bbeta_pbeta, best_translate, build_bbeta, EnergyBreakdown, SessileConfig, REFERENCE_VERTICES,
};
use crate::error::{Error, Result};
use crate::geometry::{
    convex_project, cross, cut_competitor, hausdorff_distance, symdiff_area,
    tangent_fill_competitor, HalfPlanePolygon, Point, Vec2,
};
use crate::potential::{
    assemble_kernel, build_mesh, kernel_entry_with, mesh_with_topology, solve_with_kernel,
    DiagonalRule, EquilibriumSolution, PanelMesh, DEFAULT_GRADING,
};

/// Turning angles below this (radians) count as collinear.
pub const COLLINEAR_TURNING: f64 = 1e-6;

/// `H^1` smoothing length as a fraction of the perimeter.
const SMOOTHING_FRACTION: f64 = 0.08;

/// Consecutive step halvings before the line search gives up.
const MAX_HALVINGS: usize = 40;

const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub sessile: SessileConfig,
    pub n_shape_vertices: usize,
    /// Finite-difference step; `None` means `1e-4 * diam` of the current shape.
    pub fd_step: Option<f64>,
    pub step_size: f64,
    pub max_iters: usize,
    pub tol_energy: f64,
    pub remesh_every: usize,
    pub contact_band: f64,
    pub seed: u64,
}

/// `max(10, 4 P_beta(B^beta(1)))`.
pub fn default_lambda(beta: f64) -> f64 {
    if beta > -1.0 && beta < 1.0 {
        (4.0 * bbeta_pbeta(beta, 1.0)).max(10.0)
    } else {
        10.0
    }
}

impl SolverConfig {
    pub fn new(beta: f64, q: f64) -> Self {
        SolverConfig {
            sessile: SessileConfig {
                beta,
                q,
                lambda: default_lambda(beta),
                ..SessileConfig::default()
            },
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sessile.validate()?;
        let bad = |what: &str| Err(Error::Config(format!("{what} must be positive")));
        if self.n_shape_vertices < 16 {
            return Err(Error::Config(format!(
                "n_shape_vertices = {} is below 16",
                self.n_shape_vertices
            )));
        }
        if self.sessile.n_panels < 2 * self.n_shape_vertices {
            return Err(Error::Config(format!(
                "n_panels = {} must be at least twice n_shape_vertices = {}",
                self.sessile.n_panels, self.n_shape_vertices
            )));
        }
        if let Some(h) = self.fd_step {
            if !(h > 0.0 && h.is_finite()) {
                return bad("fd_step");
            }
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step_size");
        }
        if self.max_iters == 0 {
            return bad("max_iters");
        }
        if !(self.tol_energy > 0.0) {
            return bad("tol_energy");
        }
        if self.remesh_every == 0 {
            return bad("remesh_every");
        }
        if !(self.contact_band > 0.0 && self.contact_band < 0.5) {
            return Err(Error::Config("contact_band must lie in (0, 0.5)".into()));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            sessile: SessileConfig {
                lambda: default_lambda(0.0),
                ..SessileConfig::default()
            },
            n_shape_vertices: 96,
            fd_step: None,
            step_size: 0.1,
            max_iters: 500,
            tol_energy: 1e-7,
            remesh_every: 10,
            contact_band: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub total: f64,
    pub breakdown: EnergyBreakdown,
    pub area_error: f64,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    /// Hausdorff distance between the shapes before and after the step.
    pub max_displacement: f64,
    pub step_size: f64,
    /// The shape was resampled before this step.
    pub remeshed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OptimTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
}

impl OptimTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Largest energy increase over a step not preceded by a remesh.
    pub fn worst_increase(&self) -> f64 {
        self.records
            .windows(2)
            .filter(|w| !w[1].remeshed)
            .map(|w| w[1].total - w[0].total)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Energy evaluation together with the potential data it produced.
#[derive(Debug, Clone)]
struct State {
    poly: HalfPlanePolygon,
    breakdown: EnergyBreakdown,
    potential: Option<Potential>,
}

#[derive(Debug, Clone)]
struct Potential {
    mesh: PanelMesh,
    kernel: DMatrix<f64>,
    sol: EquilibriumSolution,
}

fn solve_potential(poly: &HalfPlanePolygon, n_panels: usize) -> Result<Potential> {
    let mesh = build_mesh(poly, n_panels, DEFAULT_GRADING)?;
    let kernel = assemble_kernel(&mesh)?;
    let sol = solve_with_kernel(&mesh, &kernel, false)?;
    Ok(Potential { mesh, kernel, sol })
}

fn evaluate(poly: HalfPlanePolygon, cfg: &SessileConfig) -> Result<State> {
    let m = poly.boundary_measures();
    let p_beta = m.free_perimeter - cfg.beta * m.wetted_length;
    let potential = if cfg.q > 0.0 {
        Some(solve_potential(&poly, cfg.n_panels)?)
    } else {
        None
    };
    let i2 = potential.as_ref().map(|p| p.sol.robin);
    let volume_penalty = cfg.lambda * (poly.area() - cfg.target_area).abs();
    let total = p_beta + cfg.q * cfg.q * i2.unwrap_or(0.0) + volume_penalty;
    Ok(State {
        breakdown: EnergyBreakdown {
            free_perimeter: m.free_perimeter,
            wetted_length: m.wetted_length,
            p_beta,
            i2,
            volume_penalty,
            total,
        },
        poly,
        potential,
    })
}

/// Per-vertex motion: free vertices along the normal, contact points along
/// the floor, pointing outward in both cases.
#[derive(Debug, Clone)]
struct Dofs {
    dirs: Vec<Vec2>,
    /// Vertex indices in chain order (first contact, free arc, last contact),
    /// or all vertices when the body does not wet the floor.
    chain: Vec<usize>,
    cyclic: bool,
}

fn dofs(poly: &HalfPlanePolygon) -> Dofs {
    let n = poly.len();
    let contact = poly.contact_indices();
    let mut dirs: Vec<Vec2> = (0..n).map(|i| poly.vertex_normal(i)).collect();
    match contact {
        Some((p1, p2)) => {
            dirs[p1] = Vec2::new(-1.0, 0.0);
            dirs[p2] = Vec2::new(1.0, 0.0);
            let mut chain = vec![p2];
            let mut k = p2;
            while k != p1 {
                k = (k + 1) % n;
                chain.push(k);
            }
            Dofs {
                dirs,
                chain,
                cyclic: false,
            }
        }
        None => Dofs {
            dirs,
            chain: (0..n).collect(),
            cyclic: true,
        },
    }
}

/// Length of free boundary attached to each vertex, halved (lumped mass).
pub fn dual_lengths(poly: &HalfPlanePolygon) -> Vec<f64> {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let prev = (i + n - 1) % n;
            let mut s = 0.0;
            if !poly.is_floor_edge(prev) {
                s += 0.5 * poly.edge_length(prev);
            }
            if !poly.is_floor_edge(i) {
                s += 0.5 * poly.edge_length(i);
            }
            s
        })
        .collect()
}

fn local_pbeta(v: &[Point], i: usize, floor_prev: bool, floor_next: bool, beta: f64) -> f64 {
    let n = v.len();
    let prev = v[(i + n - 1) % n];
    let next = v[(i + 1) % n];
    let w = |floor: bool| if floor { -beta } else { 1.0 };
    w(floor_prev) * (v[i] - prev).norm() + w(floor_next) * (next - v[i]).norm()
}

fn local_area(v: &[Point], i: usize) -> f64 {
    let n = v.len();
    let prev = v[(i + n - 1) % n];
    let next = v[(i + 1) % n];
    0.5 * (cross(prev.coords, v[i].coords) + cross(v[i].coords, next.coords))
}

/// First-order change of the Robin constant when the panels of `edges` move,
/// `w^T (K' - K) w` with the equilibrium weights held fixed.
fn envelope_delta(pot: &Potential, moved: &PanelMesh, edges: [usize; 2]) -> Result<f64> {
    let mut affected: Vec<usize> = Vec::new();
    for e in edges {
        affected.extend(pot.mesh.edge_panels(e));
    }
    affected.sort_unstable();
    affected.dedup();
    let n = moved.len();
    let mut in_set = vec![false; n];
    for &i in &affected {
        in_set[i] = true;
    }
    let w = &pot.sol.masses;
    let mut delta = 0.0;
    for &i in &affected {
        let mut row = 0.0;
        for j in 0..n {
            let k_new = kernel_entry_with(&moved.panels, i, j, DiagonalRule::Exact)?;
            let weight = if in_set[j] { 1.0 } else { 2.0 };
            row += weight * w[j] * (k_new - pot.kernel[(i, j)]);
        }
        delta += w[i] * row;
    }
    Ok(delta)
}

#[derive(Debug, Clone)]
struct FdGradient {
    /// `d(P_beta + q^2 I_2)/dt` per vertex.
    smooth: Vec<f64>,
    /// `d area / dt` per vertex.
    area: Vec<f64>,
}

/// How the change of `I_2` is measured in finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdMode {
    /// Weights frozen at the current equilibrium (first-order exact).
    Envelope,
    /// Full rebuild and re-solve for every perturbation.
    Resolve,
}

fn fd_gradient_state(
    state: &State,
    dofs: &Dofs,
    cfg: &SessileConfig,
    step: f64,
    mode: FdMode,
) -> Result<FdGradient> {
    let poly = &state.poly;
    let n = poly.len();
    let v = poly.vertices();
    let floor_edge: Vec<bool> = (0..n).map(|i| poly.is_floor_edge(i)).collect();
    let q2 = cfg.q * cfg.q;
    let mut smooth = vec![0.0; n];
    let mut area = vec![0.0; n];
    let mut work = v.to_vec();
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let mut p_vals = [0.0; 2];
        let mut a_vals = [0.0; 2];
        let mut i_vals = [0.0; 2];
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            work[i] = v[i] + dofs.dirs[i] * (sign * step);
            p_vals[k] = local_pbeta(&work, i, floor_edge[prev], floor_edge[i], cfg.beta);
            a_vals[k] = local_area(&work, i);
            if let Some(pot) = &state.potential {
                i_vals[k] = match mode {
                    FdMode::Envelope => {
                        let moved = mesh_with_topology(&work, &pot.mesh.topology)?;
                        envelope_delta(pot, &moved, [prev, i])?
                    }
                    FdMode::Resolve => {
                        let moved = mesh_with_topology(&work, &pot.mesh.topology)?;
                        let kernel = assemble_kernel(&moved)?;
                        solve_with_kernel(&moved, &kernel, false)?.robin
                    }
                };
            }
            work[i] = v[i];
        }
        smooth[i] = (p_vals[0] - p_vals[1] + q2 * (i_vals[0] - i_vals[1])) / (2.0 * step);
        area[i] = (a_vals[0] - a_vals[1]) / (2.0 * step);
    }
    Ok(FdGradient { smooth, area })
}

/// Central finite-difference gradient of the full energy (including the
/// volume penalty) with respect to the per-vertex motions.
pub fn fd_gradient(
    poly: &HalfPlanePolygon,
    cfg: &SolverConfig,
    mode: FdMode,
) -> Result<Vec<f64>> {
    let state = evaluate(poly.clone(), &cfg.sessile)?;
    let d = dofs(poly);
    let step = cfg.fd_step.unwrap_or(1e-4 * poly.diameter());
    let g = fd_gradient_state(&state, &d, &cfg.sessile, step, mode)?;
    let sign = (poly.area() - cfg.sessile.target_area).signum();
    Ok(g.smooth
        .iter()
        .zip(&g.area)
        .map(|(s, a)| s + cfg.sessile.lambda * sign * a)
        .collect())
}

/// `(M + sigma S)^{-1} x` along the chain.
fn smoothing_operator(poly: &HalfPlanePolygon, d: &Dofs) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let m = d.chain.len();
    let dual = dual_lengths(poly);
    let sigma = (SMOOTHING_FRACTION * poly.perimeter()).powi(2);
    let mut a = DMatrix::zeros(m, m);
    for (k, &vi) in d.chain.iter().enumerate() {
        a[(k, k)] += dual[vi].max(1e-12);
    }
    let n = poly.len();
    let links = if d.cyclic { m } else { m - 1 };
    for k in 0..links {
        let k2 = (k + 1) % m;
        let (i, j) = (d.chain[k], d.chain[k2]);
        let len = if j == (i + 1) % n {
            poly.edge_length(i)
        } else {
            (poly.vertices()[j] - poly.vertices()[i]).norm()
        };
        let s = sigma / len;
        a[(k, k)] += s;
        a[(k2, k2)] += s;
        a[(k, k2)] -= s;
        a[(k2, k)] -= s;
    }
    a.cholesky()
        .ok_or_else(|| Error::Evaluation("smoothing matrix is not positive definite".into()))
}

/// Area-preserving descent direction and its slope `g . d`.
fn descent_direction(poly: &HalfPlanePolygon, d: &Dofs, g: &FdGradient) -> Result<(Vec<f64>, f64)> {
    let chol = smoothing_operator(poly, d)?;
    let gv = DVector::from_iterator(d.chain.len(), d.chain.iter().map(|&i| g.smooth[i]));
    let av = DVector::from_iterator(d.chain.len(), d.chain.iter().map(|&i| g.area[i]));
    let pg = chol.solve(&gv);
    let pa = chol.solve(&av);
    let denom = av.dot(&pa);
    let dir = if denom > 0.0 {
        &pg - &pa * (av.dot(&pg) / denom)
    } else {
        pg
    };
    let mut out = vec![0.0; poly.len()];
    for (k, &i) in d.chain.iter().enumerate() {
        out[i] = dir[k];
    }
    let slope = gv.dot(&dir);
    Ok((out, slope))
}

/// Dilates about the floor point below the centroid to the target area.
fn restore_area(poly: &HalfPlanePolygon, target: f64) -> Result<HalfPlanePolygon> {
    let c = poly.centroid();
    poly.scaled_about(Point::new(c.x, 0.0), (target / poly.area()).sqrt())
}

/// Drops floor vertices strictly inside the contact segment.
fn drop_inner_floor(poly: &HalfPlanePolygon) -> Result<HalfPlanePolygon> {
    let Some((p1, p2)) = poly.contact_indices() else {
        return Ok(poly.clone());
    };
    if (p1 + 1) % poly.len() == p2 {
        return Ok(poly.clone());
    }
    let n = poly.len();
    let mut inner = vec![false; n];
    let mut k = (p1 + 1) % n;
    while k != p2 {
        inner[k] = true;
        k = (k + 1) % n;
    }
    HalfPlanePolygon::new(
        poly.vertices()
            .iter()
            .enumerate()
            .filter(|(i, _)| !inner[*i])
            .map(|(_, p)| *p)
            .collect(),
    )
}

/// Point at arclength `s` along the open polyline `pts`.
fn along(pts: &[Point], cum: &[f64], s: f64) -> Point {
    let k = match cum.binary_search_by(|c| c.total_cmp(&s)) {
        Ok(k) => return pts[k],
        Err(k) => k.clamp(1, pts.len() - 1),
    };
    let t = (s - cum[k - 1]) / (cum[k] - cum[k - 1]);
    pts[k - 1] + (pts[k] - pts[k - 1]) * t
}

/// Resamples the free boundary by arclength with `n` vertices in total,
/// three times denser inside the contact bands, then restores the area.
pub fn remesh(poly: &HalfPlanePolygon, n: usize, band_fraction: f64, target_area: f64) -> Result<HalfPlanePolygon> {
    let poly = drop_inner_floor(&poly.collapse_collinear_runs()?)?;
    let v = poly.vertices();
    let nv = v.len();
    let out: Vec<Point> = match poly.contact_indices() {
        Some((p1, p2)) => {
            let mut pts = vec![v[p2]];
            let mut k = p2;
            while k != p1 {
                k = (k + 1) % nv;
                pts.push(v[k]);
            }
            let mut cum = vec![0.0];
            for w in pts.windows(2) {
                cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
            }
            let total = *cum.last().unwrap();
            let band = (band_fraction * poly.diameter()).min(0.25 * total);
            // weight 3 inside the bands, 1 elsewhere
            let weight_total = total + 4.0 * band;
            let inverse = |w: f64| -> f64 {
                if w <= 3.0 * band {
                    w / 3.0
                } else if w <= 3.0 * band + (total - 2.0 * band) {
                    band + (w - 3.0 * band)
                } else {
                    total - band + (w - 3.0 * band - (total - 2.0 * band)) / 3.0
                }
            };
            let intervals = n - 1;
            (0..n)
                .map(|k| {
                    if k == 0 {
                        pts[0]
                    } else if k == intervals {
                        *pts.last().unwrap()
                    } else {
                        along(&pts, &cum, inverse(weight_total * k as f64 / intervals as f64))
                    }
                })
                .collect()
        }
        None => {
            let mut pts = v.to_vec();
            pts.push(v[0]);
            let mut cum = vec![0.0];
            for w in pts.windows(2) {
                cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
            }
            let total = *cum.last().unwrap();
            (0..n)
                .map(|k| along(&pts, &cum, total * k as f64 / n as f64))
                .collect()
        }
    };
    restore_area(&convex_project(&out)?, target_area)
}

fn record(
    iteration: usize,
    state: &State,
    cfg: &SolverConfig,
    max_displacement: f64,
    step_size: f64,
    remeshed: bool,
) -> TraceRecord {
    let band = cfg.contact_band * state.poly.diameter();
    let angles = state.poly.contact_angles_fitted(band).ok();
    TraceRecord {
        iteration,
        total: state.breakdown.total,
        breakdown: state.breakdown,
        area_error: state.poly.area() - cfg.sessile.target_area,
        gamma1: angles.map(|a| a.gamma1),
        gamma2: angles.map(|a| a.gamma2),
        max_displacement,
        step_size,
        remeshed,
    }
}

/// Minimises the penalised energy from `init`.
pub fn minimize(init: &HalfPlanePolygon, cfg: &SolverConfig) -> Result<(HalfPlanePolygon, OptimTrace)> {
    cfg.validate()?;
    let sc = &cfg.sessile;
    let at = |iteration: usize| move |e: Error| Error::SolverAt {
        iteration,
        source: Box::new(e),
    };
    let mut state = evaluate(init.clone(), sc).map_err(at(0))?;
    let mut trace = OptimTrace::default();
    let mut step = cfg.step_size;
    let max_step = 1e3 * cfg.step_size;
    let mut small_steps = 0;
    for it in 0..cfg.max_iters {
        // resample on schedule, or as soon as the hull has dropped vertices
        let remeshed =
            it % cfg.remesh_every == 0 || state.poly.len() < cfg.n_shape_vertices;
        if remeshed {
            let resampled =
                remesh(&state.poly, cfg.n_shape_vertices, cfg.contact_band, sc.target_area)
                    .map_err(at(it))?;
            state = evaluate(resampled, sc).map_err(at(it))?;
        }
        let f0 = state.breakdown.total;
        let d = dofs(&state.poly);
        let h = cfg.fd_step.unwrap_or(1e-4 * state.poly.diameter());
        let g = fd_gradient_state(&state, &d, sc, h, FdMode::Envelope).map_err(at(it))?;
        let (dir, slope) = descent_direction(&state.poly, &d, &g).map_err(at(it))?;

        let v = state.poly.vertices().to_vec();
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let pts: Vec<Point> = v
                .iter()
                .zip(dir.iter().zip(&d.dirs))
                .map(|(p, (s, u))| p - u * (t * s))
                .collect();
            let trial = convex_project(&pts)
                .and_then(|p| restore_area(&p, sc.target_area))
                .and_then(|p| evaluate(p, sc));
            if let Ok(trial) = trial {
                if trial.breakdown.total <= f0 - ARMIJO * t * slope {
                    accepted = Some(trial);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(next) = accepted else {
            if slope * step <= 10.0 * cfg.tol_energy * f0.abs() {
                trace.converged = true;
                break;
            }
            return Err(Error::Stagnation {
                iteration: it,
                shape: Box::new(state.poly),
                trace: Box::new(trace),
            });
        };
        let moved = hausdorff_distance(&state.poly, &next.poly);
        step = if t == step { (2.0 * t).min(max_step) } else { t };
        let decrease = f0 - next.breakdown.total;
        state = next;
        trace.records.push(record(it, &state, cfg, moved, t, remeshed));
        // two consecutive small decreases away from a resample
        small_steps = if !remeshed && decrease <= cfg.tol_energy * f0.abs() {
            small_steps + 1
        } else {
            0
        };
        if small_steps >= 2 {
            trace.converged = true;
            break;
        }
    }
    Ok((state.poly, trace))
}

/// Hat-weighted average of `f^2` around each vertex.
fn vertex_density_sq(poly: &HalfPlanePolygon, mesh: &PanelMesh, sol: &EquilibriumSolution) -> Vec<f64> {
    let n = poly.len();
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    for (k, p) in mesh.panels.iter().enumerate() {
        let e = p.edge;
        let (a, b) = poly.edge(e);
        let t = (p.mid - a).dot(&(b - a)) / (b - a).norm_squared();
        let f2 = sol.densities[k].powi(2);
        num[e] += (1.0 - t) * p.length * f2;
        den[e] += (1.0 - t) * p.length;
        let j = (e + 1) % n;
        num[j] += t * p.length * f2;
        den[j] += t * p.length;
    }
    num.iter().zip(&den).map(|(a, b)| a / b).collect()
}

/// Vertices farther than the band from both contact points.
fn outside_bands(poly: &HalfPlanePolygon, band_fraction: f64) -> Vec<bool> {
    let band = band_fraction * poly.diameter();
    let contacts: Vec<Point> = match poly.contact_indices() {
        Some((a, b)) => vec![poly.vertices()[a], poly.vertices()[b]],
        None => Vec::new(),
    };
    poly.vertices()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            !poly.is_floor_vertex(i) && contacts.iter().all(|c| (p - c).norm() > band)
        })
        .collect()
}

/// Shape gradient per unit normal velocity: `kappa - 2 pi q^2 f^2 +
/// lambda sign(area - target)` at free vertices and `cos gamma - beta` at
/// the two contact points.
pub fn analytic_gradient(poly: &HalfPlanePolygon, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let sc = &cfg.sessile;
    let n = poly.len();
    let f2 = if sc.q > 0.0 {
        let pot = solve_potential(poly, sc.n_panels)?;
        vertex_density_sq(poly, &pot.mesh, &pot.sol)
    } else {
        vec![0.0; n]
    };
    let kappa = poly.discrete_curvature();
    let sign = (poly.area() - sc.target_area).signum();
    let mut g: Vec<f64> = (0..n)
        .map(|i| match kappa[i] {
            Some(k) => k - 2.0 * PI * sc.q * sc.q * f2[i] + sc.lambda * sign,
            None => f64::NAN,
        })
        .collect();
    if let Some(c) = poly.boundary_measures().contact {
        let (p1, p2) = poly.contact_indices().expect("contact data implies indices");
        g[p1] = c.gamma1.cos() - sc.beta;
        g[p2] = c.gamma2.cos() - sc.beta;
    }
    Ok(g)
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientCheck {
    pub median_relative_error: f64,
    pub compared: usize,
    pub analytic: Vec<f64>,
    pub finite_difference: Vec<f64>,
}

/// Compares [`analytic_gradient`] with central differences (full re-solve)
/// normalised by the dual length, on free vertices outside the contact bands.
pub fn gradient_check(poly: &HalfPlanePolygon, cfg: &SolverConfig) -> Result<GradientCheck> {
    let analytic = analytic_gradient(poly, cfg)?;
    let dual = dual_lengths(poly);
    let raw = fd_gradient(poly, cfg, FdMode::Resolve)?;
    let fd: Vec<f64> = raw.iter().zip(&dual).map(|(g, l)| g / l).collect();
    let keep = outside_bands(poly, cfg.contact_band);
    let mut errs: Vec<f64> = (0..poly.len())
        .filter(|&i| keep[i] && analytic[i].is_finite())
        .map(|i| (analytic[i] - fd[i]).abs() / fd[i].abs().max(1e-12))
        .collect();
    if errs.is_empty() {
        return Err(Error::Precondition("no free vertex outside the contact bands".into()));
    }
    errs.sort_by(|a, b| a.total_cmp(b));
    Ok(GradientCheck {
        median_relative_error: median_sorted(&errs),
        compared: errs.len(),
        analytic,
        finite_difference: fd,
    })
}

fn median_sorted(v: &[f64]) -> f64 {
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ELReport {
    pub lambda_estimate: f64,
    /// `kappa_i - 2 pi q^2 f_i^2` at free vertices outside the contact bands.
    pub residuals: Vec<Option<f64>>,
    pub residual_std: f64,
    pub residual_std_over_mean_curvature: f64,
    pub excluded_vertices: usize,
    /// Set when the residual spread exceeds 15% of the multiplier, which
    /// suggests the input was not a converged minimiser.
    pub warning: Option<String>,
}

/// Euler-Lagrange residual `kappa - 2 pi q^2 f^2` of a converged shape.
pub fn el_residual(poly: &HalfPlanePolygon, cfg: &SolverConfig) -> Result<ELReport> {
    let sc = &cfg.sessile;
    let n = poly.len();
    let f2 = if sc.q > 0.0 {
        let pot = solve_potential(poly, sc.n_panels)?;
        vertex_density_sq(poly, &pot.mesh, &pot.sol)
    } else {
        vec![0.0; n]
    };
    let kappa = poly.discrete_curvature();
    let keep = outside_bands(poly, cfg.contact_band);
    let residuals: Vec<Option<f64>> = (0..n)
        .map(|i| match (keep[i], kappa[i]) {
            (true, Some(k)) => Some(k - 2.0 * PI * sc.q * sc.q * f2[i]),
            _ => None,
        })
        .collect();
    let mut vals: Vec<f64> = residuals.iter().flatten().copied().collect();
    if vals.len() < 3 {
        return Err(Error::Precondition("fewer than 3 free vertices outside the bands".into()));
    }
    vals.sort_by(|a, b| a.total_cmp(b));
    let lambda_estimate = median_sorted(&vals);
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let std = (vals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
    let kappas: Vec<f64> = (0..n).filter(|&i| keep[i]).filter_map(|i| kappa[i]).collect();
    let mean_kappa = kappas.iter().sum::<f64>() / kappas.len() as f64;
    let warning = (std > 0.15 * lambda_estimate.abs()).then(|| {
        format!(
            "residual spread {std:.3e} exceeds 15% of the multiplier {lambda_estimate:.3e}; \
             the input may not be converged"
        )
    });
    Ok(ELReport {
        lambda_estimate,
        residual_std: std,
        residual_std_over_mean_curvature: std / mean_kappa.abs(),
        excluded_vertices: residuals.iter().filter(|r| r.is_none()).count(),
        residuals,
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CompetitorFamily {
    Cut,
    TangentFill,
    Dilation,
    Slide,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaMinReport {
    /// Smallest `F(competitor) + lambda |E delta F| - F(E)`; negative means
    /// the candidate is not lambda-minimal.
    pub worst_margin: f64,
    pub worst_family: Option<CompetitorFamily>,
    pub evaluated: usize,
    pub skipped: usize,
    pub per_family: Vec<(CompetitorFamily, usize)>,
}

/// Unpenalised energy `P_beta + q^2 I_2`.
fn capillary_energy(poly: &HalfPlanePolygon, sc: &SessileConfig) -> Result<f64> {
    let m = poly.boundary_measures();
    let mut e = m.free_perimeter - sc.beta * m.wetted_length;
    if sc.q > 0.0 {
        e += sc.q * sc.q * solve_potential(poly, sc.n_panels)?.sol.robin;
    }
    Ok(e)
}

fn random_free_point<R: Rng>(poly: &HalfPlanePolygon, rng: &mut R) -> (usize, Point) {
    let n = poly.len();
    let free: Vec<usize> = (0..n).filter(|&i| !poly.is_floor_edge(i)).collect();
    let total: f64 = free.iter().map(|&i| poly.edge_length(i)).sum();
    let mut s = rng.gen::<f64>() * total;
    for &i in &free {
        let l = poly.edge_length(i);
        if s <= l {
            let (a, b) = poly.edge(i);
            return (i, a + (b - a) * (s / l).clamp(0.05, 0.95));
        }
        s -= l;
    }
    let i = *free.last().expect("a body always has a free edge");
    let (a, b) = poly.edge(i);
    (i, a + (b - a) * 0.5)
}

/// Samples competitors (cuts, tangent fills, dilations and floor slides)
/// and evaluates the lambda-minimality inequality against each of them.
fn random_free_vertex<R: Rng>(poly: &HalfPlanePolygon, rng: &mut R) -> Point {
    let free: Vec<usize> = (0..poly.len()).filter(|&i| !poly.is_floor_vertex(i)).collect();
    poly.vertices()[free[rng.gen_range(0..free.len())]]
}

pub fn lambda_min_check(
    poly: &HalfPlanePolygon,
    cfg: &SolverConfig,
    n_samples: usize,
) -> Result<LambdaMinReport> {
    if n_samples < 10 {
        return Err(Error::Precondition(format!("{n_samples} samples, need at least 10")));
    }
    let sc = &cfg.sessile;
    let lambda = sc.lambda;
    let base = capillary_energy(poly, sc)?;
    let diam = poly.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let quota = [
        (CompetitorFamily::Cut, n_samples * 2 / 5),
        (CompetitorFamily::TangentFill, n_samples / 5),
        (CompetitorFamily::Dilation, n_samples / 5),
        (CompetitorFamily::Slide, n_samples - n_samples * 2 / 5 - 2 * (n_samples / 5)),
    ];
    let mut worst = f64::INFINITY;
    let mut worst_family = None;
    let mut evaluated = 0;
    let mut skipped = 0;
    let mut per_family = Vec::new();
    for (family, count) in quota {
        let mut done = 0;
        let mut attempts = 0;
        while done < count && attempts < 20 * count {
            attempts += 1;
            let margin = match family {
                CompetitorFamily::Cut => {
                    // half the cuts are centred on vertices, where a kink would show
                    let x = if rng.gen_bool(0.5) {
                        random_free_vertex(poly, &mut rng)
                    } else {
                        random_free_point(poly, &mut rng).1
                    };
                    let eps = diam * 10f64.powf(rng.gen_range(-2.5..-0.5));
                    cut_competitor(poly, x, eps).and_then(|c| {
                        Ok(capillary_energy(&c.polygon, sc)? + lambda * c.removed_area - base)
                    })
                }
                CompetitorFamily::TangentFill => {
                    let (e1, x1) = random_free_point(poly, &mut rng);
                    let span = rng.gen_range(2..10);
                    let e2 = (e1 + span) % poly.len();
                    if poly.is_floor_edge(e2) || (e1..e1 + span).any(|e| poly.is_floor_edge(e % poly.len())) {
                        Err(Error::Unsupported("fill span crosses the floor".into()))
                    } else {
                        let (a, b) = poly.edge(e2);
                        let x2 = a + (b - a) * rng.gen_range(0.05..0.95);
                        tangent_fill_competitor(poly, x1, x2).and_then(|f| {
                            Ok(capillary_energy(&f, sc)? + lambda * symdiff_area(poly, &f) - base)
                        })
                    }
                }
                CompetitorFamily::Dilation => {
                    let s = rng.gen_range(0.9..1.1);
                    let c = poly.centroid();
                    poly.scaled_about(Point::new(c.x, 0.0), s).and_then(|f| {
                        Ok(capillary_energy(&f, sc)? + lambda * symdiff_area(poly, &f) - base)
                    })
                }
                CompetitorFamily::Slide => {
                    // translation leaves P_beta and I_2 unchanged
                    let dx = diam * rng.gen_range(-0.2..0.2);
                    poly.translated(Vec2::new(dx, 0.0))
                        .map(|f| lambda * symdiff_area(poly, &f))
                }
            };
            match margin {
                Ok(m) => {
                    done += 1;
                    if m < worst {
                        worst = m;
                        worst_family = Some(family);
                    }
                }
                Err(_) => skipped += 1,
            }
        }
        evaluated += done;
        per_family.push((family, done));
    }
    Ok(LambdaMinReport {
        worst_margin: worst,
        worst_family,
        evaluated,
        skipped,
        per_family,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    /// Longest run of free edges meeting at (numerically) straight angles.
    pub longest_collinear_run: f64,
    pub run_over_diameter: f64,
    /// The same run measured in median free edge lengths.
    pub run_in_mesh_edges: f64,
    pub wetted_length: f64,
    /// Smallest positive free curvature, an empirical curvature gap.
    pub min_positive_curvature: Option<f64>,
    /// `(lower, upper, count)` bins of positive free curvatures.
    pub curvature_histogram: Vec<(f64, f64, usize)>,
    pub note: &'static str,
}

pub fn structure_checks(poly: &HalfPlanePolygon, cfg: &SolverConfig) -> StructureReport {
    let n = poly.len();
    let free: Vec<usize> = (0..n).filter(|&i| !poly.is_floor_edge(i)).collect();
    let mut lens: Vec<f64> = free.iter().map(|&i| poly.edge_length(i)).collect();
    lens.sort_by(|a, b| a.total_cmp(b));
    let median = median_sorted(&lens);
    // walk free edges in order, merging across straight free vertices
    let start = match poly.contact_indices() {
        Some((_, p2)) => p2,
        None => 0,
    };
    let mut longest: f64 = 0.0;
    let mut current = 0.0;
    for k in 0..n {
        let e = (start + k) % n;
        if poly.is_floor_edge(e) {
            current = 0.0;
            continue;
        }
        let joined = k > 0
            && !poly.is_floor_edge((e + n - 1) % n)
            && poly.turning_angle(e).abs() <= COLLINEAR_TURNING;
        current = if joined { current + poly.edge_length(e) } else { poly.edge_length(e) };
        longest = longest.max(current);
    }
    let kappa: Vec<f64> = poly
        .discrete_curvature()
        .into_iter()
        .flatten()
        .filter(|k| *k > 0.0)
        .collect();
    let min_positive = kappa.iter().copied().reduce(f64::min);
    let histogram = match (min_positive, kappa.iter().copied().reduce(f64::max)) {
        (Some(lo), Some(hi)) if hi > lo => {
            let bins = 10;
            let w = (hi - lo) / bins as f64;
            (0..bins)
                .map(|b| {
                    let a = lo + w * b as f64;
                    let z = a + w;
                    let count = kappa
                        .iter()
                        .filter(|&&k| k >= a && (k < z || (b == bins - 1 && k <= z)))
                        .count();
                    (a, z, count)
                })
                .collect()
        }
        (Some(lo), Some(_)) => vec![(lo, lo, kappa.len())],
        _ => Vec::new(),
    };
    let _ = cfg;
    StructureReport {
        longest_collinear_run: longest,
        run_over_diameter: longest / poly.diameter(),
        run_in_mesh_edges: longest / median,
        wetted_length: poly.boundary_measures().wetted_length,
        min_positive_curvature: min_positive,
        curvature_histogram: histogram,
        note: "whether the body locally coincides with its tangent cone is not decidable at mesh scale",
    }
}

/// Distances from a minimised shape to the best horizontal translate of the
/// truncated ball of the same target area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallDistance {
    pub shift: f64,
    pub symdiff: f64,
    pub hausdorff: f64,
}

pub fn distance_to_bbeta(poly: &HalfPlanePolygon, beta: f64, area: f64) -> Result<BallDistance> {
    let b = build_bbeta(beta, area, REFERENCE_VERTICES)?;
    let (shift, rel) = best_translate(poly, &b);
    let moved = b.translated(Vec2::new(shift, 0.0))?;
    Ok(BallDistance {
        shift,
        symdiff: rel * area,
        hausdorff: hausdorff_distance(poly, &moved),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub q: f64,
    pub iters: usize,
    pub total: f64,
    pub p_beta: f64,
    pub i2: Option<f64>,
    pub area_err: f64,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub cos_gamma_minus_beta: Option<f64>,
    pub hausdorff_to_bbeta: f64,
    pub symdiff_to_bbeta: f64,
    pub error: Option<String>,
}

fn sweep_cell(beta: f64, q: f64, cfg: &SolverConfig) -> Result<(SweepRow, HalfPlanePolygon)> {
    let mut cell = *cfg;
    cell.sessile.beta = beta;
    cell.sessile.q = q;
    let init = build_bbeta(beta, cell.sessile.target_area, cell.n_shape_vertices)?;
    let (shape, trace) = minimize(&init, &cell)?;
    let e = evaluate(shape.clone(), &cell.sessile)?.breakdown;
    let band = cell.contact_band * shape.diameter();
    let angles = shape.contact_angles_fitted(band).ok();
    let dist = distance_to_bbeta(&shape, beta, cell.sessile.target_area)?;
    Ok((
        SweepRow {
            beta,
            q,
            iters: trace.len(),
            total: e.total,
            p_beta: e.p_beta,
            i2: e.i2,
            area_err: shape.area() - cell.sessile.target_area,
            gamma1: angles.map(|a| a.gamma1),
            gamma2: angles.map(|a| a.gamma2),
            cos_gamma_minus_beta: angles.map(|a| 0.5 * (a.gamma1.cos() + a.gamma2.cos()) - beta),
            hausdorff_to_bbeta: dist.hausdorff,
            symdiff_to_bbeta: dist.symdiff,
            error: None,
        },
        shape,
    ))
}

/// Minimises from `B^beta(1)` for every `(beta, q)` pair; failures are
/// recorded in the row and the sweep continues.
pub fn young_sweep(betas: &[f64], qs: &[f64], cfg: &SolverConfig) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(betas.len() * qs.len());
    for &beta in betas {
        for &q in qs {
            rows.push(match sweep_cell(beta, q, cfg) {
                Ok((row, _)) => row,
                Err(e) => SweepRow {
                    beta,
                    q,
                    iters: 0,
                    total: f64::NAN,
                    p_beta: f64::NAN,
                    i2: None,
                    area_err: f64::NAN,
                    gamma1: None,
                    gamma2: None,
                    cos_gamma_minus_beta: None,
                    hausdorff_to_bbeta: f64::NAN,
                    symdiff_to_bbeta: f64::NAN,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Serialize)]
pub struct QConvergence {
    pub rows: Vec<SweepRow>,
    /// Smallest `C` with `symdiff <= C q` over the sweep.
    pub linear_constant: f64,
    /// Largest gap `C q - symdiff`, the slack of the linear bound.
    pub linear_residual: f64,
    /// Least-squares slope of `log symdiff` against `log q` (positive `q`).
    pub fitted_exponent: f64,
}

pub fn q_convergence(beta: f64, qs: &[f64], cfg: &SolverConfig) -> Result<QConvergence> {
    if qs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("q list must be strictly decreasing".into()));
    }
    let mut rows = Vec::with_capacity(qs.len());
    for &q in qs {
        rows.push(sweep_cell(beta, q, cfg)?.0);
    }
    let pos: Vec<&SweepRow> = rows.iter().filter(|r| r.q > 0.0).collect();
    let linear_constant = pos
        .iter()
        .map(|r| r.symdiff_to_bbeta / r.q)
        .fold(0.0, f64::max);
    let linear_residual = pos
        .iter()
        .map(|r| linear_constant * r.q - r.symdiff_to_bbeta)
        .fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = pos
        .iter()
        .filter(|r| r.symdiff_to_bbeta > 0.0)
        .map(|r| (r.q.ln(), r.symdiff_to_bbeta.ln()))
        .collect();
    let fitted_exponent = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    Ok(QConvergence {
        rows,
        linear_constant,
        linear_residual,
        fitted_exponent,
    })
}

/// Minimised shape for one `(beta, q)` cell, started from `B^beta`.
pub fn minimize_from_bbeta(beta: f64, q: f64, cfg: &SolverConfig) -> Result<(HalfPlanePolygon, OptimTrace)> {
    let mut cell = *cfg;
    cell.sessile.beta = beta;
    cell.sessile.q = q;
    let init = build_bbeta(beta, cell.sessile.target_area, cell.n_shape_vertices)?;
    minimize(&init, &cell)
}
