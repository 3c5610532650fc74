//! Logarithmic potential theory of a convex body.
//!
//! For the planar log kernel the equilibrium measure of a convex body lives
//! on its boundary. We discretise the boundary into straight panels carrying
//! piecewise-constant densities and solve the augmented system
//!
//! ```text
//! sum_j K_ij w_j = c    for every panel i
//! sum_j w_j      = 1
//! ```
//!
//! where `K_ij` is the panel-pair average of `-log|x - y|`. The constant `c`
//! is the value of the equilibrium potential on the body, which equals the
//! Robin constant `I_2(E) = -log cap(E)` (the normalisation of the exterior
//! Green function at infinity makes the two coincide). `I_2` may be negative.
//!
//! [`riesz_energy_oracle`] is an independent brute-force route: it minimises
//! the discrete Riesz energy over probability weights on a grid of cells.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{HalfPlanePolygon, Point, Vec2};
use crate::quadrature::{
    segment_log_integral, unit_square_self_energy, GAUSS4_NODES, GAUSS4_WEIGHTS,
};

/// Default geometric ratio between neighbouring panels near a corner.
pub const DEFAULT_GRADING: f64 = 0.75;

/// Vertices turning by more than this (radians) are treated as corners.
pub const CORNER_TURNING: f64 = 0.15;

/// Largest ratio between the biggest and smallest graded panel on an edge.
const MAX_GRADING_SPREAD: f64 = 1000.0;

/// Pairs closer than this many panel lengths get near-field quadrature.
const NEAR_FIELD_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: Point,
    pub b: Point,
    pub mid: Point,
    pub length: f64,
    pub normal: Vec2,
    /// Polygon edge this panel belongs to.
    pub edge: usize,
    /// Distance along the edge from the midpoint to the nearest graded
    /// (corner) endpoint; infinite when neither endpoint is a corner.
    pub corner_distance: f64,
}

/// Panel allocation of a mesh, reusable on a perturbed copy of the polygon
/// with the same vertex count.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshTopology {
    pub counts: Vec<usize>,
    pub corner: Vec<bool>,
    pub grading: f64,
}

#[derive(Debug, Clone)]
pub struct PanelMesh {
    pub panels: Vec<Panel>,
    pub grading: f64,
    pub vertices: Vec<Point>,
    pub topology: MeshTopology,
}

impl PanelMesh {
    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        self.panels.iter().map(|p| p.length).sum()
    }

    /// Index range of the panels on polygon edge `edge`.
    pub fn edge_panels(&self, edge: usize) -> std::ops::Range<usize> {
        let start: usize = self.topology.counts[..edge].iter().sum();
        start..start + self.topology.counts[edge]
    }
}

/// Relative panel lengths on one edge.
fn edge_profile(m: usize, grade_start: bool, grade_end: bool, ratio: f64) -> Vec<f64> {
    if ratio >= 1.0 || (!grade_start && !grade_end) {
        return vec![1.0; m];
    }
    let growth = 1.0 / ratio;
    let ends = usize::from(grade_start) + usize::from(grade_end);
    let max_layers = (MAX_GRADING_SPREAD.ln() / growth.ln()).floor() as usize;
    let layers = (m / (2 * ends)).max(1).min(max_layers);
    (0..m)
        .map(|k| {
            let from_start = if grade_start { k } else { usize::MAX };
            let from_end = if grade_end { m - 1 - k } else { usize::MAX };
            growth.powi(from_start.min(from_end).min(layers) as i32)
        })
        .collect()
}

/// Allocates `n_panels` to edges proportionally to length (largest
/// remainder), with at least two panels per edge.
fn allocate(lengths: &[f64], n_panels: usize) -> Vec<usize> {
    let total: f64 = lengths.iter().sum();
    let ideal: Vec<f64> = lengths.iter().map(|l| n_panels as f64 * l / total).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let mut remaining = n_panels - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - ideal[a].floor();
        let rb = ideal[b] - ideal[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    // enforce the per-edge minimum by borrowing from the best-served edges
    for i in 0..counts.len() {
        while counts[i] < 2 {
            let donor = (0..counts.len())
                .filter(|&j| counts[j] > 2)
                .max_by(|&a, &b| {
                    (counts[a] as f64 / lengths[a])
                        .total_cmp(&(counts[b] as f64 / lengths[b]))
                        .then(b.cmp(&a))
                })
                .expect("n_panels >= 2 * edges leaves a donor");
            counts[donor] -= 1;
            counts[i] += 1;
        }
    }
    counts
}

/// Corner-graded boundary mesh with `n_panels` panels.
pub fn build_mesh(poly: &HalfPlanePolygon, n_panels: usize, grading: f64) -> Result<PanelMesh> {
    let nv = poly.len();
    if n_panels < 2 * nv {
        return Err(Error::Mesh(format!(
            "{n_panels} panels cannot cover {nv} edges with two panels each"
        )));
    }
    if !(grading > 0.0 && grading <= 1.0) {
        return Err(Error::Mesh(format!("grading ratio {grading} outside (0, 1]")));
    }
    let lengths: Vec<f64> = (0..nv).map(|i| poly.edge_length(i)).collect();
    let topology = MeshTopology {
        counts: allocate(&lengths, n_panels),
        corner: (0..nv).map(|i| poly.turning_angle(i) > CORNER_TURNING).collect(),
        grading,
    };
    mesh_with_topology(poly.vertices(), &topology)
}

/// Builds the mesh of `vertices` with a fixed panel allocation.
pub fn mesh_with_topology(vertices: &[Point], topology: &MeshTopology) -> Result<PanelMesh> {
    let nv = vertices.len();
    if topology.counts.len() != nv {
        return Err(Error::Mesh("topology does not match the vertex count".into()));
    }
    let total: usize = topology.counts.iter().sum();
    let mut panels = Vec::with_capacity(total);
    for e in 0..nv {
        let a = vertices[e];
        let b = vertices[(e + 1) % nv];
        let d = b - a;
        let len = d.norm();
        if len <= 0.0 {
            return Err(Error::Mesh(format!("edge {e} has zero length")));
        }
        let normal = Vec2::new(d.y, -d.x) / len;
        let gs = topology.corner[e];
        let ge = topology.corner[(e + 1) % nv];
        let profile = edge_profile(topology.counts[e], gs, ge, topology.grading);
        let scale: f64 = profile.iter().sum();
        let mut s = 0.0;
        for w in profile {
            let t0 = s / scale;
            s += w;
            let t1 = s / scale;
            let pa = a + d * t0;
            let pb = a + d * t1;
            let tm = 0.5 * (t0 + t1);
            let to_start = if gs { tm * len } else { f64::INFINITY };
            let to_end = if ge { (1.0 - tm) * len } else { f64::INFINITY };
            panels.push(Panel {
                a: pa,
                b: pb,
                mid: a + d * tm,
                length: (t1 - t0) * len,
                normal,
                edge: e,
                corner_distance: to_start.min(to_end),
            });
        }
    }
    Ok(PanelMesh {
        panels,
        grading: topology.grading,
        vertices: vertices.to_vec(),
        topology: topology.clone(),
    })
}

/// How the diagonal of the kernel is integrated. `MissingConstant` drops the
/// `3/2` of the exact self-integral; it exists only so the verification
/// suite can demonstrate that it catches a broken kernel.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalRule {
    #[default]
    Exact,
    MissingConstant,
}

/// Pair average with Gauss nodes on `pi` and the exact inner integral over `pj`.
#[inline]
fn near_pair(pi: &Panel, pj: &Panel) -> f64 {
    let di = pi.b - pi.a;
    let mut s = 0.0;
    for (&u, &wu) in GAUSS4_NODES.iter().zip(&GAUSS4_WEIGHTS) {
        s += wu * segment_log_integral(pi.a + di * u, pj.a, pj.b);
    }
    s / pj.length
}

#[inline]
fn cyclic_gap(i: usize, j: usize, n: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(n - d)
}

/// Panel-pair average of `-log|x - y|`.
pub fn kernel_entry(mesh: &PanelMesh, i: usize, j: usize) -> Result<f64> {
    kernel_entry_with(&mesh.panels, i, j, DiagonalRule::Exact)
}

pub(crate) fn kernel_entry_with(
    panels: &[Panel],
    i: usize,
    j: usize,
    rule: DiagonalRule,
) -> Result<f64> {
    let (i, j) = (i.min(j), i.max(j));
    let pi = &panels[i];
    if i == j {
        return Ok(match rule {
            DiagonalRule::Exact => 1.5 - pi.length.ln(),
            DiagonalRule::MissingConstant => -pi.length.ln(),
        });
    }
    let pj = &panels[j];
    let dist = (pi.mid - pj.mid).norm();
    if dist == 0.0 {
        return Err(Error::Mesh(format!("panels {i} and {j} have coincident midpoints")));
    }
    if cyclic_gap(i, j, panels.len()) <= 2 || dist < NEAR_FIELD_FACTOR * pi.length.max(pj.length) {
        return Ok(near_pair(pi, pj));
    }
    Ok(-dist.ln())
}

/// Symmetric kernel matrix of the mesh.
pub fn assemble_kernel(mesh: &PanelMesh) -> Result<DMatrix<f64>> {
    assemble_kernel_with(mesh, DiagonalRule::Exact)
}

#[doc(hidden)]
pub fn assemble_kernel_with(mesh: &PanelMesh, rule: DiagonalRule) -> Result<DMatrix<f64>> {
    let n = mesh.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel_entry_with(&mesh.panels, i, j, rule)?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    /// Probability weight carried by each panel.
    pub masses: Vec<f64>,
    /// Density `w_i / h_i` per unit length.
    pub densities: Vec<f64>,
    /// Robin constant `I_2(E)`.
    pub robin: f64,
    /// Largest deviation of the potential from `robin` at panel endpoints;
    /// NaN when it was not evaluated.
    pub potential_residual: f64,
    /// Raised when some density fell below `-1e-6 max f` and was clamped.
    pub clamped_negative: bool,
    /// Ratio of the extreme pivots of the factorisation.
    pub condition_estimate: f64,
}

/// Equilibrium measure and Robin constant of the meshed body.
pub fn solve_equilibrium(mesh: &PanelMesh) -> Result<EquilibriumSolution> {
    let k = assemble_kernel(mesh)?;
    solve_with_kernel(mesh, &k, true)
}

/// Solves the augmented system for an already assembled kernel.
pub fn solve_with_kernel(
    mesh: &PanelMesh,
    kernel: &DMatrix<f64>,
    with_residual: bool,
) -> Result<EquilibriumSolution> {
    let n = mesh.len();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a.view_mut((0, 0), (n, n)).copy_from(kernel);
    for i in 0..n {
        a[(i, n)] = 1.0;
        a[(n, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let lu = a.lu();
    let u = lu.u();
    let pivots = u.diagonal();
    let pmax = pivots.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let pmin = pivots.iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
    let condition = if pmin > 0.0 { pmax / pmin } else { f64::INFINITY };
    if !condition.is_finite() || condition > 1e14 {
        return Err(Error::SingularSystem { condition });
    }
    let z = lu
        .solve(&rhs)
        .ok_or(Error::SingularSystem { condition })?;
    let robin = -z[n];
    let mut masses: Vec<f64> = z.iter().take(n).copied().collect();
    let fmax = masses
        .iter()
        .zip(&mesh.panels)
        .map(|(w, p)| w / p.length)
        .fold(0.0f64, f64::max);
    let clamped_negative = masses
        .iter()
        .zip(&mesh.panels)
        .any(|(w, p)| w / p.length < -1e-6 * fmax);
    for w in masses.iter_mut() {
        if *w < 0.0 {
            *w = 0.0;
        }
    }
    let total: f64 = masses.iter().sum();
    for w in masses.iter_mut() {
        *w /= total;
    }
    let densities = masses
        .iter()
        .zip(&mesh.panels)
        .map(|(w, p)| w / p.length)
        .collect();
    let mut sol = EquilibriumSolution {
        masses,
        densities,
        robin,
        potential_residual: f64::NAN,
        clamped_negative,
        condition_estimate: condition,
    };
    if with_residual {
        sol.potential_residual = mesh
            .panels
            .iter()
            .map(|p| (potential_unchecked(&sol, mesh, p.a) - robin).abs())
            .fold(0.0, f64::max);
    }
    Ok(sol)
}

/// Robin constant `I_2` of the polygon with the default grading.
pub fn log_energy(poly: &HalfPlanePolygon, n_panels: usize) -> Result<f64> {
    let mesh = build_mesh(poly, n_panels, DEFAULT_GRADING)?;
    Ok(solve_equilibrium(&mesh)?.robin)
}

fn potential_unchecked(sol: &EquilibriumSolution, mesh: &PanelMesh, x: Point) -> f64 {
    let mut u = 0.0;
    for (p, (&w, &f)) in mesh.panels.iter().zip(sol.masses.iter().zip(&sol.densities)) {
        let dist = (x - p.mid).norm();
        if dist < 2.0 * p.length {
            u += f * segment_log_integral(x, p.a, p.b);
        } else {
            u -= w * dist.ln();
        }
    }
    u
}

/// Equilibrium potential `u(x) = int -log|x - y| dmu(y)`.
pub fn potential_at(sol: &EquilibriumSolution, mesh: &PanelMesh, x: Point) -> Result<f64> {
    let scale = mesh.perimeter();
    if mesh
        .panels
        .iter()
        .any(|p| (x - p.mid).norm() <= 1e-14 * scale)
    {
        return Err(Error::Evaluation(format!(
            "point ({}, {}) coincides with a panel node",
            x.x, x.y
        )));
    }
    Ok(potential_unchecked(sol, mesh, x))
}

/// `|grad u| = 2 pi f` on each panel.
pub fn gradient_norm_on_boundary(sol: &EquilibriumSolution) -> Vec<f64> {
    sol.densities.iter().map(|f| 2.0 * PI * f).collect()
}

/// Least-squares slope of `log f` against `log r` near a corner, where `r` is
/// the distance of a panel midpoint to the corner vertex. For an interior
/// angle `gamma` the expected slope is `-(pi - gamma) / (2 pi - gamma)`.
pub fn corner_exponent(sol: &EquilibriumSolution, mesh: &PanelMesh, corner: usize) -> Result<f64> {
    let nv = mesh.vertices.len();
    if corner >= nv {
        return Err(Error::Precondition(format!("corner index {corner} out of range")));
    }
    let v = mesh.vertices[corner];
    let prev = mesh.vertices[(corner + nv - 1) % nv];
    let next = mesh.vertices[(corner + 1) % nv];
    let e0 = v - prev;
    let e1 = next - v;
    let turning = crate::geometry::cross(e0, e1).atan2(e0.dot(&e1));
    let interior = PI - turning;
    if interior >= PI - 0.05 {
        return Err(Error::Precondition(format!(
            "interior angle {interior:.4} is too close to pi"
        )));
    }
    let edges = [(corner + nv - 1) % nv, corner];
    let near: Vec<usize> = edges.iter().flat_map(|&e| mesh.edge_panels(e)).collect();
    let h_min = near
        .iter()
        .map(|&i| mesh.panels[i].length)
        .fold(f64::INFINITY, f64::min);
    let edge_len = e0.norm().min(e1.norm());
    let (lo, hi) = (4.0 * h_min, 0.1 * edge_len);
    let pts: Vec<(f64, f64)> = near
        .iter()
        .filter_map(|&i| {
            let r = (mesh.panels[i].mid - v).norm();
            let f = sol.densities[i];
            (r >= lo && r <= hi && f > 0.0).then(|| (r.ln(), f.ln()))
        })
        .collect();
    if pts.len() < 8 {
        return Err(Error::Precondition(format!(
            "only {} panels inside the fit window [{lo:.2e}, {hi:.2e}]",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Minimal discrete Riesz energy over probability weights on a grid.
///
/// The bounding box is covered by `grid_n x grid_n` square cells, each cell
/// is clipped to the body and represented by its centroid. Off-diagonal
/// interactions use the point kernel; the diagonal is the self-energy of a
/// square of the clipped cell's area. The quadratic is minimised over the
/// simplex by accelerated projected gradient with adaptive restart.
pub fn riesz_energy_oracle(poly: &HalfPlanePolygon, alpha: f64, grid_n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Precondition(format!("alpha = {alpha} outside (0, 2]")));
    }
    if grid_n < 2 || grid_n * grid_n > 4096 {
        return Err(Error::Precondition(format!(
            "grid of {grid_n}^2 cells outside [4, 4096]"
        )));
    }
    let (centres, areas) = grid_cells(poly, grid_n);
    let n = centres.len();
    let log_kernel = alpha >= 2.0;
    let self_const = unit_square_self_energy(alpha);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let side = areas[i].sqrt();
        a[(i, i)] = if log_kernel {
            self_const - side.ln()
        } else {
            self_const * side.powf(alpha - 2.0)
        };
        for j in (i + 1)..n {
            let d = (centres[i] - centres[j]).norm();
            let v = if log_kernel { -d.ln() } else { d.powf(alpha - 2.0) };
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    // A constant shift leaves the problem on the simplex unchanged and
    // removes the dominant all-ones eigenvalue from the step-size bound.
    let shift = a.mean();
    a.add_scalar_mut(-shift);
    let mut step = 1.0 / (2.0 * tangent_spectral_radius(&a) * 1.05);

    let mut w = DVector::from_element(n, 1.0 / n as f64);
    let mut aw = &a * &w;
    let mut energy = w.dot(&aw);
    let mut y = w.clone();
    let mut ay = aw.clone();
    let mut t: f64 = 1.0;
    let max_iters = 20_000;
    let tol = 1e-5;
    let mut gap = f64::INFINITY;
    for _ in 0..max_iters {
        let w_next = project_simplex(&(&y - &ay * (2.0 * step)));
        let aw_next = &a * &w_next;
        let e_next = w_next.dot(&aw_next);
        if e_next > energy {
            if t == 1.0 {
                step *= 0.5;
            }
            // restart momentum
            y.copy_from(&w);
            ay.copy_from(&aw);
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        y = &w_next + (&w_next - &w) * mom;
        ay = &aw_next + (&aw_next - &aw) * mom;
        w = w_next;
        aw = aw_next;
        t = t_next;
        energy = e_next;
        gap = 2.0 * (energy - aw.min());
        if gap <= tol * (1.0 + (energy + shift).abs()) {
            return Ok(energy + shift);
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
        gap,
    })
}

fn grid_cells(poly: &HalfPlanePolygon, grid_n: usize) -> (Vec<Point>, Vec<f64>) {
    let v = poly.vertices();
    let (mut lo, mut hi) = (v[0], v[0]);
    for p in v {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let side = (hi.x - lo.x).max(hi.y - lo.y) / grid_n as f64;
    let mut centres = Vec::new();
    let mut areas = Vec::new();
    for iy in 0..grid_n {
        for ix in 0..grid_n {
            let x0 = lo.x + ix as f64 * side;
            let y0 = lo.y + iy as f64 * side;
            let mut cell = vec![
                Point::new(x0, y0),
                Point::new(x0 + side, y0),
                Point::new(x0 + side, y0 + side),
                Point::new(x0, y0 + side),
            ];
            for e in 0..poly.len() {
                let (p, q) = poly.edge(e);
                let d = q - p;
                let normal = Vec2::new(d.y, -d.x);
                cell = crate::geometry::clip_halfplane(&cell, normal, normal.dot(&p.coords));
                if cell.len() < 3 {
                    break;
                }
            }
            let area = crate::geometry::signed_area(&cell);
            if cell.len() >= 3 && area > 1e-6 * side * side {
                let mut c = Vec2::zeros();
                let m = cell.len();
                for k in 0..m {
                    let a = cell[k];
                    let b = cell[(k + 1) % m];
                    let cr = a.x * b.y - b.x * a.y;
                    c += (a.coords + b.coords) * cr;
                }
                centres.push(Point::from(c / (6.0 * area)));
                areas.push(area);
            }
        }
    }
    (centres, areas)
}

/// Largest |eigenvalue| of `a` restricted to zero-sum vectors (power method).
fn tangent_spectral_radius(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let center = |v: &mut DVector<f64>| {
        let m = v.mean();
        v.add_scalar_mut(-m);
    };
    let mut v = DVector::from_fn(n, |i, _| ((i * 7919 % 104_729) as f64 / 104_729.0) - 0.5);
    center(&mut v);
    let mut lambda = 0.0;
    for _ in 0..60 {
        let norm = v.norm();
        if norm == 0.0 {
            break;
        }
        v /= norm;
        let mut av = a * &v;
        center(&mut av);
        let next = av.norm();
        v = av;
        if (next - lambda).abs() <= 1e-3 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn uniform_mesh_on_square() {
        let m = build_mesh(&fixtures::unit_square(), 64, 1.0).unwrap();
        assert_eq!(m.topology.counts, vec![16; 4]);
        for p in &m.panels {
            assert!((p.length - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn graded_mesh_on_square() {
        let m = build_mesh(&fixtures::unit_square(), 64, 0.75).unwrap();
        assert!((m.perimeter() - 4.0).abs() < 1e-12);
        for e in 0..4 {
            let r = m.edge_panels(e);
            let lens: Vec<f64> = m.panels[r].iter().map(|p| p.length).collect();
            let min = lens.iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(lens[0], min);
            assert!((lens[lens.len() - 1] - min).abs() < 1e-15);
            assert!((lens[1] * 0.75 - lens[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn proportional_allocation() {
        let p = fixtures::regular_polygon(64, 1.0, Point::new(0.0, 2.0));
        let m = build_mesh(&p, 256, 0.75).unwrap();
        assert_eq!(m.topology.counts, vec![4; 64]);
        let r = fixtures::rectangle(3.0, 1.0);
        let m = build_mesh(&r, 16, 1.0).unwrap();
        assert_eq!(m.topology.counts, vec![6, 2, 6, 2]);
        let slab = fixtures::slab(16.0);
        let m = build_mesh(&slab, 64, 0.75).unwrap();
        assert_eq!(m.topology.counts.iter().sum::<usize>(), 64);
        assert!(m.topology.counts.iter().all(|&c| c >= 2));
    }

    #[test]
    fn too_few_panels() {
        assert!(build_mesh(&fixtures::unit_square(), 7, 0.75).is_err());
        assert!(build_mesh(&fixtures::unit_square(), 8, 0.0).is_err());
    }

    #[test]
    fn kernel_diagonal_and_far_field() {
        let tri = HalfPlanePolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 2.0),
        ])
        .unwrap();
        let m = build_mesh(&tri, 6, 1.0).unwrap();
        let k = assemble_kernel(&m).unwrap();
        assert!((k[(0, 0)] - (1.5 - 0.5f64.ln())).abs() < 1e-15);
        assert_eq!(k, k.transpose());
        let single = PanelMesh {
            panels: vec![Panel {
                a: Point::new(0.0, 0.0),
                b: Point::new(1.0, 0.0),
                mid: Point::new(0.5, 0.0),
                length: 1.0,
                normal: Vec2::new(0.0, -1.0),
                edge: 0,
                corner_distance: f64::INFINITY,
            }],
            grading: 1.0,
            vertices: vec![],
            topology: MeshTopology {
                counts: vec![1],
                corner: vec![false],
                grading: 1.0,
            },
        };
        assert_eq!(assemble_kernel(&single).unwrap()[(0, 0)], 1.5);
    }

    #[test]
    fn short_panels_at_unit_distance() {
        let panel = |x: f64| Panel {
            a: Point::new(x - 1e-4, 0.0),
            b: Point::new(x + 1e-4, 0.0),
            mid: Point::new(x, 0.0),
            length: 2e-4,
            normal: Vec2::new(0.0, -1.0),
            edge: 0,
            corner_distance: f64::INFINITY,
        };
        let panels: Vec<Panel> = (0..8).map(|k| panel(k as f64)).collect();
        let v = kernel_entry_with(&panels, 0, 1, DiagonalRule::Exact).unwrap();
        assert!(v.abs() < 1e-7);
        let v = kernel_entry_with(&panels, 0, 4, DiagonalRule::Exact).unwrap();
        assert!((v + 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn disk_robin_and_uniform_density() {
        let disk = fixtures::regular_polygon(256, 1.0, Point::new(0.0, 1.5));
        let mesh = build_mesh(&disk, 512, DEFAULT_GRADING).unwrap();
        let sol = solve_equilibrium(&mesh).unwrap();
        assert!(sol.robin.abs() < 2e-3, "{}", sol.robin);
        for f in &sol.densities {
            assert!((f * 2.0 * PI - 1.0).abs() < 0.01);
        }
        assert!((sol.masses.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(!sol.clamped_negative);
        let centre = potential_at(&sol, &mesh, Point::new(0.0, 1.5)).unwrap();
        assert!((centre - sol.robin).abs() < 2e-3);
        let far = Point::new(1e6, 0.0);
        let u = potential_at(&sol, &mesh, far).unwrap();
        let expect = -(far - Point::new(0.0, 1.5)).norm().ln();
        assert!(((u - expect) / expect).abs() < 1e-5);
        assert!(potential_at(&sol, &mesh, mesh.panels[3].mid).is_err());
        let grads = gradient_norm_on_boundary(&sol);
        assert!(grads.iter().all(|g| (g - 1.0).abs() < 0.01));
    }

    #[test]
    fn scaled_disk_gradient() {
        let disk = fixtures::regular_polygon(128, 2.0, Point::new(0.0, 3.0));
        let sol = solve_equilibrium(&build_mesh(&disk, 256, DEFAULT_GRADING).unwrap()).unwrap();
        assert!((sol.robin + 2f64.ln()).abs() < 4e-3);
        for g in gradient_norm_on_boundary(&sol) {
            assert!((g - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn square_density_grows_toward_corners() {
        let mesh = build_mesh(&fixtures::unit_square(), 256, DEFAULT_GRADING).unwrap();
        let sol = solve_equilibrium(&mesh).unwrap();
        let r = mesh.edge_panels(0);
        let g = gradient_norm_on_boundary(&sol);
        let mid = r.start + r.len() / 2;
        assert!(g[r.start] > 3.0 * g[mid]);
        for k in r.start..mid {
            assert!(g[k] > g[k + 1]);
        }
    }

    #[test]
    fn translation_invariance() {
        let p = fixtures::unit_square();
        let q = p.translated(Vec2::new(5.0, 0.0)).unwrap();
        let a = log_energy(&p, 128).unwrap();
        let b = log_energy(&q, 128).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn near_flat_corner_is_rejected() {
        let disk = fixtures::regular_polygon(128, 1.0, Point::new(0.0, 1.5));
        let mesh = build_mesh(&disk, 256, DEFAULT_GRADING).unwrap();
        let sol = solve_equilibrium(&mesh).unwrap();
        assert!(corner_exponent(&sol, &mesh, 0).is_err());
    }

    #[test]
    fn simplex_projection() {
        let v = DVector::from_vec(vec![0.5, 2.0, -1.0, 0.3]);
        let p = project_simplex(&v);
        assert!((p.sum() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|&x| x >= 0.0));
        assert_eq!(p[1], 1.0);
    }

    #[test]
    fn oracle_alpha_one_scaling() {
        let d1 = fixtures::regular_polygon(64, 1.0, Point::new(0.0, 1.0));
        let d2 = fixtures::regular_polygon(64, 2.0, Point::new(0.0, 2.0));
        let e1 = riesz_energy_oracle(&d1, 1.0, 16).unwrap();
        let e2 = riesz_energy_oracle(&d2, 1.0, 16).unwrap();
        assert!((e1 / e2 - 2.0).abs() < 1e-4, "{}", e1 / e2);
    }

    #[test]
    fn oracle_rejects_large_grids() {
        assert!(riesz_energy_oracle(&fixtures::unit_square(), 2.0, 65).is_err());
        assert!(riesz_energy_oracle(&fixtures::unit_square(), 2.5, 8).is_err());
    }
}
