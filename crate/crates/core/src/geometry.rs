//! Convex polygons in the closed upper half-plane `H = {y >= 0}`.
//!
//! A [`HalfPlanePolygon`] is the single shape representation used throughout
//! the crate. Vertices are stored counter-clockwise; vertices within
//! `1e-12 * diam` of the floor are snapped onto it at construction, and those
//! floor vertices always form one contiguous run (the wetted segment).
//!
//! Besides the basic measures this module builds the two competitor families
//! used to probe minimality: cuts by a chord through the intersections of a
//! small circle with the boundary, and fills up to the crossing of two
//! one-sided tangent lines.

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};

pub type Point = Point2<f64>;
pub type Vec2 = Vector2<f64>;

/// Relative tolerance (times the diameter) for floor snapping and coincidence.
pub const GEOM_REL_TOL: f64 = 1e-12;

/// Allowed outward bulge of a vertex past the chord of its neighbours,
/// relative to the diameter.
const CONVEX_REL_TOL: f64 = 1e-9;

/// Maximal number of interior vertices a collinear run may carry before
/// remeshing collapses it.
pub const MAX_COLLINEAR_RUN: usize = 16;

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Signed shoelace area of a closed point loop.
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        s += a.x * b.y - a.y * b.x;
    }
    0.5 * s
}

fn max_pairwise_distance(points: &[Point]) -> f64 {
    let mut d2: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            d2 = d2.max((points[i] - points[j]).norm_squared());
        }
    }
    d2.sqrt()
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&d) / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Keeps the part of a convex loop where `normal . x <= offset`.
pub fn clip_halfplane(points: &[Point], normal: Vec2, offset: f64) -> Vec<Point> {
    let n = points.len();
    let mut out = Vec::with_capacity(n + 2);
    if n == 0 {
        return out;
    }
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let fa = normal.dot(&a.coords) - offset;
        let fb = normal.dot(&b.coords) - offset;
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let t = fa / (fa - fb);
            out.push(a + (b - a) * t);
        }
    }
    out
}

/// Contact data at the two ends of the wetted segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactData {
    /// Left contact point (start of the floor run in CCW order).
    pub p1: Point,
    /// Right contact point.
    pub p2: Point,
    pub wetted_length: f64,
    /// Interior angle at `p1` between the floor and the first free edge.
    pub gamma1: f64,
    /// Interior angle at `p2`.
    pub gamma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMeasures {
    pub free_perimeter: f64,
    pub wetted_length: f64,
    /// `None` when the body does not wet the floor along a segment.
    pub contact: Option<ContactData>,
}

/// Contact angles estimated from the vertices near each contact point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedContactAngles {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Angle of the first free edge, without fitting.
    pub raw_gamma1: f64,
    pub raw_gamma2: f64,
    /// Set when the band held too few vertices and the raw angle was used.
    pub fallback1: bool,
    pub fallback2: bool,
}

/// Convex body in the closed upper half-plane, vertices counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfPlanePolygon {
    vertices: Vec<Point>,
    diam: f64,
}

impl HalfPlanePolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidShape(format!("{n} vertices, need at least 3")));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidShape("non-finite coordinate".into()));
        }
        let diam = max_pairwise_distance(&vertices);
        if diam <= 0.0 {
            return Err(Error::InvalidShape("all vertices coincide".into()));
        }
        let tol = GEOM_REL_TOL * diam;
        let mut vertices = vertices;
        for p in vertices.iter_mut() {
            if p.y < -tol {
                return Err(Error::InvalidShape(format!(
                    "vertex ({}, {}) lies below the floor",
                    p.x, p.y
                )));
            }
            if p.y.abs() <= tol {
                p.y = 0.0;
            }
        }
        for i in 0..n {
            if (vertices[(i + 1) % n] - vertices[i]).norm() <= tol {
                return Err(Error::InvalidShape(format!("zero-length edge at vertex {i}")));
            }
        }
        let area = signed_area(&vertices);
        if area <= 0.0 {
            return Err(Error::InvalidShape(format!(
                "non-positive signed area {area:e} (degenerate or clockwise)"
            )));
        }
        let mut turning = 0.0;
        for i in 0..n {
            let prev = vertices[(i + n - 1) % n];
            let cur = vertices[i];
            let next = vertices[(i + 1) % n];
            let c = cross(cur - prev, next - cur);
            let chord = (next - prev).norm();
            if chord > 0.0 && c / chord < -CONVEX_REL_TOL * diam {
                return Err(Error::InvalidShape(format!("reflex vertex {i}")));
            }
            turning += c.atan2((cur - prev).dot(&(next - cur)));
        }
        if (turning - 2.0 * std::f64::consts::PI).abs() > 1e-6 {
            return Err(Error::InvalidShape(format!(
                "total turning {turning} is not 2*pi (self-overlapping loop)"
            )));
        }
        let transitions = (0..n)
            .filter(|&i| (vertices[i].y == 0.0) != (vertices[(i + 1) % n].y == 0.0))
            .count();
        if transitions > 2 {
            return Err(Error::InvalidShape("floor vertices are not contiguous".into()));
        }
        Ok(Self { vertices, diam })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertex with cyclic indexing.
    #[inline]
    pub fn vertex(&self, i: isize) -> Point {
        let n = self.vertices.len() as isize;
        self.vertices[i.rem_euclid(n) as usize]
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1`.
    #[inline]
    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        let (a, b) = self.edge(i);
        (b - a).norm()
    }

    pub fn floor_tol(&self) -> f64 {
        GEOM_REL_TOL * self.diam
    }

    #[inline]
    pub fn is_floor_vertex(&self, i: usize) -> bool {
        self.vertices[i % self.vertices.len()].y == 0.0
    }

    pub fn is_floor_edge(&self, i: usize) -> bool {
        self.is_floor_vertex(i) && self.is_floor_vertex(i + 1)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.len()).map(|i| self.edge_length(i)).sum()
    }

    /// Maximal pairwise vertex distance (attained at vertices for convex sets).
    pub fn diameter(&self) -> f64 {
        self.diam
    }

    pub fn centroid(&self) -> Point {
        let n = self.len();
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..n {
            let (a, b) = self.edge(i);
            let w = a.x * b.y - b.x * a.y;
            cx += (a.x + b.x) * w;
            cy += (a.y + b.y) * w;
        }
        let a6 = 6.0 * self.area();
        Point::new(cx / a6, cy / a6)
    }

    pub fn translated(&self, shift: Vec2) -> Result<Self> {
        Self::new(self.vertices.iter().map(|p| p + shift).collect())
    }

    pub fn scaled_about(&self, center: Point, factor: f64) -> Result<Self> {
        Self::new(
            self.vertices
                .iter()
                .map(|p| center + (p - center) * factor)
                .collect(),
        )
    }

    /// Indices of the left and right contact points, when the floor run has
    /// at least two vertices.
    pub fn contact_indices(&self) -> Option<(usize, usize)> {
        let n = self.len();
        let start = (0..n).find(|&i| self.is_floor_vertex(i) && !self.is_floor_vertex(i + n - 1))?;
        let mut end = start;
        while self.is_floor_vertex(end + 1) {
            end = (end + 1) % n;
        }
        if end == start {
            return None;
        }
        Some((start, end))
    }

    /// Exterior turning angle at vertex `i`, in `[0, pi)` for convex input.
    pub fn turning_angle(&self, i: usize) -> f64 {
        let i = i as isize;
        let e0 = self.vertex(i) - self.vertex(i - 1);
        let e1 = self.vertex(i + 1) - self.vertex(i);
        cross(e0, e1).atan2(e0.dot(&e1))
    }

    /// Outward unit normal of edge `i`.
    pub fn edge_normal(&self, i: usize) -> Vec2 {
        let (a, b) = self.edge(i);
        let d = (b - a).normalize();
        Vec2::new(d.y, -d.x)
    }

    /// Bisector of the outward normals of the two edges meeting at vertex `i`.
    pub fn vertex_normal(&self, i: usize) -> Vec2 {
        let n = self.len();
        (self.edge_normal((i + n - 1) % n) + self.edge_normal(i)).normalize()
    }

    pub fn contains(&self, p: Point) -> bool {
        let tol = self.floor_tol();
        (0..self.len()).all(|i| {
            let (a, b) = self.edge(i);
            let d = b - a;
            cross(d, p - a) >= -tol * d.norm()
        })
    }

    /// Euclidean distance from `p` to the body (zero inside).
    pub fn distance_to(&self, p: Point) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        (0..self.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                segment_distance(p, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn boundary_measures(&self) -> BoundaryMeasures {
        let perimeter = self.perimeter();
        match self.contact_indices() {
            None => BoundaryMeasures {
                free_perimeter: perimeter,
                wetted_length: 0.0,
                contact: None,
            },
            Some((i1, i2)) => {
                let p1 = self.vertices[i1];
                let p2 = self.vertices[i2];
                let wetted = (p2 - p1).norm();
                let d1 = self.vertex(i1 as isize - 1) - p1;
                let d2 = self.vertex(i2 as isize + 1) - p2;
                BoundaryMeasures {
                    free_perimeter: perimeter - wetted,
                    wetted_length: wetted,
                    contact: Some(ContactData {
                        p1,
                        p2,
                        wetted_length: wetted,
                        gamma1: d1.y.atan2(d1.x),
                        gamma2: d2.y.atan2(-d2.x),
                    }),
                }
            }
        }
    }

    /// Contact angles from a local quadratic least-squares fit through the
    /// free vertices within `band` of each contact point.
    ///
    /// The fit is `s = a t + b t^2` in the frame of the first free edge,
    /// pinned at the contact point; the tangent there is `atan(a)` off that
    /// edge. With a single vertex in the band the fit reduces to the first
    /// edge and the fallback flag is raised.
    pub fn contact_angles_fitted(&self, band: f64) -> Result<FittedContactAngles> {
        if band <= 0.0 {
            return Err(Error::Precondition(format!("band must be positive, got {band}")));
        }
        let (i1, i2) = self
            .contact_indices()
            .ok_or_else(|| Error::Precondition("no contact segment".into()))?;
        let n = self.len() as isize;
        // Right contact walks forward, left contact walks backward.
        let (g2, raw2, fb2) = self.fit_side(i2 as isize, 1, band, n);
        let (g1, raw1, fb1) = self.fit_side(i1 as isize, -1, band, n);
        Ok(FittedContactAngles {
            gamma1: g1,
            gamma2: g2,
            raw_gamma1: raw1,
            raw_gamma2: raw2,
            fallback1: fb1,
            fallback2: fb2,
        })
    }

    fn fit_side(&self, contact: isize, step: isize, band: f64, n: isize) -> (f64, f64, bool) {
        let c = self.vertex(contact);
        let first = self.vertex(contact + step) - c;
        let t_axis = first.normalize();
        let s_axis = Vec2::new(-t_axis.y, t_axis.x);
        let angle_of = |d: Vec2| {
            if step > 0 {
                d.y.atan2(-d.x)
            } else {
                d.y.atan2(d.x)
            }
        };
        let raw = angle_of(t_axis);

        let mut pts = Vec::new();
        let mut k = contact + step;
        for _ in 0..(n - 1) {
            let p = self.vertex(k);
            if p.y == 0.0 {
                break;
            }
            let d = p - c;
            if d.norm() > band {
                break;
            }
            pts.push((d.dot(&t_axis), d.dot(&s_axis)));
            k += step;
        }
        if pts.len() < 2 {
            return (raw, raw, true);
        }
        let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(t, s) in &pts {
            s11 += t * t;
            s12 += t * t * t;
            s22 += t * t * t * t;
            r1 += t * s;
            r2 += t * t * s;
        }
        let det = s11 * s22 - s12 * s12;
        let slope = if det.abs() <= 1e-14 * s11 * s22 {
            r1 / s11
        } else {
            (r1 * s22 - r2 * s12) / det
        };
        let tangent = t_axis + s_axis * slope;
        (angle_of(tangent), raw, false)
    }

    /// Turning angle over mean adjacent edge length at each free vertex;
    /// `None` at floor vertices.
    pub fn discrete_curvature(&self) -> Vec<Option<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| {
                if self.is_floor_vertex(i) {
                    None
                } else {
                    let dual = 0.5 * (self.edge_length((i + n - 1) % n) + self.edge_length(i));
                    Some(self.turning_angle(i) / dual)
                }
            })
            .collect()
    }

    /// Drops interior vertices of collinear runs longer than
    /// [`MAX_COLLINEAR_RUN`]; the point set is unchanged.
    pub fn collapse_collinear_runs(&self) -> Result<Self> {
        let n = self.len();
        let flat: Vec<bool> = (0..n).map(|i| self.turning_angle(i).abs() < 1e-9).collect();
        if flat.iter().all(|&f| f) {
            return Err(Error::InvalidShape("all vertices collinear".into()));
        }
        let mut keep = vec![true; n];
        let start = (0..n).find(|&i| !flat[i]).unwrap_or(0);
        let mut run: Vec<usize> = Vec::new();
        for k in 1..=n {
            let i = (start + k) % n;
            if flat[i] {
                run.push(i);
            } else {
                if run.len() > MAX_COLLINEAR_RUN {
                    for &j in &run {
                        keep[j] = false;
                    }
                }
                run.clear();
            }
        }
        Self::new(
            self.vertices
                .iter()
                .zip(&keep)
                .filter_map(|(p, &k)| k.then_some(*p))
                .collect(),
        )
    }

    /// Locates `x` on the boundary as `(edge, t)` with `t in [0, 1)`.
    pub fn locate_on_boundary(&self, x: Point) -> Result<(usize, f64)> {
        let tol = 1e-9 * self.diam;
        let mut best = (usize::MAX, 0.0, f64::INFINITY);
        for i in 0..self.len() {
            let (a, b) = self.edge(i);
            let dist = segment_distance(x, a, b);
            if dist < best.2 {
                let d = b - a;
                let t = ((x - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
                best = (i, t, dist);
            }
        }
        if best.2 > tol {
            return Err(Error::Precondition(format!(
                "point ({}, {}) is not on the boundary (distance {:e})",
                x.x, x.y, best.2
            )));
        }
        let (mut e, mut t) = (best.0, best.1);
        if t * self.edge_length(e) <= tol {
            t = 0.0;
        }
        if (1.0 - t) * self.edge_length(e) <= tol {
            e = (e + 1) % self.len();
            t = 0.0;
        }
        Ok((e, t))
    }
}

/// Convex hull of `points`, clipped to `y >= 0`, counter-clockwise.
///
/// Points lying on a hull edge (within tolerance) are kept as vertices so that
/// the projection is idempotent on polygons with collinear runs. When the
/// first input point survives as a vertex the output starts there.
pub fn convex_project(points: &[Point]) -> Result<HalfPlanePolygon> {
    if points.len() < 3 {
        return Err(Error::InvalidShape(format!(
            "{} points, need at least 3",
            points.len()
        )));
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let scale = (hi - lo).norm();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidShape("degenerate point cloud".into()));
    }
    let tol = GEOM_REL_TOL * scale;

    let mut sorted: Vec<Point> = points.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    sorted.dedup_by(|a, b| (*a - *b).norm() <= tol);

    let strictly_left = |o: Point, a: Point, b: Point| {
        let d = b - o;
        cross(a - o, d) > tol * d.norm()
    };
    let mut hull: Vec<Point> = Vec::with_capacity(sorted.len() + 1);
    for &p in &sorted {
        while hull.len() >= 2 && !strictly_left(hull[hull.len() - 2], hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in sorted.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && !strictly_left(hull[hull.len() - 2], hull[hull.len() - 1], p)
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(Error::InvalidShape("points are collinear".into()));
    }

    // Re-insert points lying on hull edges.
    let h = hull.len();
    let mut on_edge: Vec<Vec<(f64, Point)>> = vec![Vec::new(); h];
    for &p in &sorted {
        if hull.iter().any(|q| (q - p).norm() <= tol) {
            continue;
        }
        for i in 0..h {
            let a = hull[i];
            let b = hull[(i + 1) % h];
            let d = b - a;
            let t = (p - a).dot(&d) / d.norm_squared();
            if t > 0.0 && t < 1.0 && cross(d, p - a).abs() <= 10.0 * tol * d.norm() {
                on_edge[i].push((t, p));
                break;
            }
        }
    }
    let mut loop_pts = Vec::with_capacity(sorted.len());
    for i in 0..h {
        loop_pts.push(hull[i]);
        let mut extra = std::mem::take(&mut on_edge[i]);
        extra.sort_by(|a, b| a.0.total_cmp(&b.0));
        loop_pts.extend(extra.into_iter().map(|(_, p)| p));
    }

    let mut clipped = clip_halfplane(&loop_pts, Vec2::new(0.0, -1.0), 0.0);
    for p in clipped.iter_mut() {
        if p.y.abs() <= tol {
            p.y = 0.0;
        }
    }
    let mut dedup: Vec<Point> = Vec::with_capacity(clipped.len());
    for p in clipped {
        if dedup.last().is_none_or(|q: &Point| (p - *q).norm() > tol) {
            dedup.push(p);
        }
    }
    while dedup.len() > 1 && (dedup[0] - dedup[dedup.len() - 1]).norm() <= tol {
        dedup.pop();
    }
    if dedup.len() < 3 || signed_area(&dedup) <= tol * tol {
        return Err(Error::InvalidShape("hull degenerates after clipping to H".into()));
    }
    if let Some(k) = dedup.iter().position(|q| *q == points[0]) {
        dedup.rotate_left(k);
    }
    HalfPlanePolygon::new(dedup)
}

/// Hausdorff distance between two convex polygons (attained at vertices).
pub fn hausdorff_distance(a: &HalfPlanePolygon, b: &HalfPlanePolygon) -> f64 {
    let one_way = |p: &HalfPlanePolygon, q: &HalfPlanePolygon| {
        p.vertices()
            .iter()
            .map(|&v| q.distance_to(v))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Vertices of the intersection of two convex polygons.
pub fn intersection(a: &HalfPlanePolygon, b: &HalfPlanePolygon) -> Vec<Point> {
    let mut pts = a.vertices().to_vec();
    for i in 0..b.len() {
        if pts.is_empty() {
            break;
        }
        let (p, q) = b.edge(i);
        let d = q - p;
        let normal = Vec2::new(d.y, -d.x);
        pts = clip_halfplane(&pts, normal, normal.dot(&p.coords));
    }
    pts
}

/// `|A| + |B| - 2 |A ∩ B|`.
pub fn symdiff_area(a: &HalfPlanePolygon, b: &HalfPlanePolygon) -> f64 {
    let inter = signed_area(&intersection(a, b)).max(0.0);
    (a.area() + b.area() - 2.0 * inter).max(0.0)
}

#[derive(Debug, Clone)]
pub struct CutResult {
    pub polygon: HalfPlanePolygon,
    /// Angle between the segment from `x` to a circle crossing and the chord.
    pub gamma_eps: f64,
    pub removed_area: f64,
    /// Perimeter drop `P(E) - P(E_cut)`.
    pub removed_perimeter: f64,
}

/// Cuts `p` by the chord through the two points where the circle of radius
/// `eps / 3` around the boundary point `x` meets the boundary, keeping the
/// side that does not contain `x`.
pub fn cut_competitor(p: &HalfPlanePolygon, x: Point, eps: f64) -> Result<CutResult> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    p.locate_on_boundary(x)?;
    let tol = 1e-9 * p.diameter();
    if x.y <= tol {
        return Err(Error::Precondition("cut centre lies on the floor".into()));
    }
    let r = eps / 3.0;
    let mut hits: Vec<Point> = Vec::new();
    for i in 0..p.len() {
        let (a, b) = p.edge(i);
        let d = b - a;
        let f = a - x;
        let qa = d.norm_squared();
        let qb = 2.0 * f.dot(&d);
        let qc = f.norm_squared() - r * r;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
            if (-1e-12..=1.0 + 1e-12).contains(&t) {
                let h = a + d * t;
                if hits.iter().all(|q| (q - h).norm() > tol) {
                    hits.push(h);
                }
            }
        }
    }
    if hits.len() != 2 {
        return Err(Error::Precondition(format!(
            "circle of radius {r} meets the boundary in {} points, need exactly 2",
            hits.len()
        )));
    }
    let (x1, x2) = (hits[0], hits[1]);
    let chord = x2 - x1;
    let normal = Vec2::new(chord.y, -chord.x).normalize();
    let side_x = normal.dot(&(x - x1));
    if side_x.abs() <= tol {
        // x on the chord: the chord supports the body there.
        return Ok(CutResult {
            polygon: p.clone(),
            gamma_eps: 0.0,
            removed_area: 0.0,
            removed_perimeter: 0.0,
        });
    }
    let (n, off) = if side_x > 0.0 {
        (normal, normal.dot(&x1.coords))
    } else {
        (-normal, -normal.dot(&x1.coords))
    };
    // The removed cap {n.y > off} must not touch the floor.
    if p
        .vertices()
        .iter()
        .any(|v| v.y == 0.0 && n.dot(&v.coords) - off > tol)
    {
        return Err(Error::Unsupported("cut crosses the floor".into()));
    }
    let kept = clip_halfplane(p.vertices(), n, off);
    let mut dedup: Vec<Point> = Vec::with_capacity(kept.len());
    for q in kept {
        if dedup.last().is_none_or(|l: &Point| (q - *l).norm() > tol) {
            dedup.push(q);
        }
    }
    while dedup.len() > 1 && (dedup[0] - dedup[dedup.len() - 1]).norm() <= tol {
        dedup.pop();
    }
    let polygon = HalfPlanePolygon::new(dedup)?;
    let seg = x1 - x;
    let gamma_eps = cross(seg, chord).abs().atan2(seg.dot(&chord).abs());
    Ok(CutResult {
        removed_area: (p.area() - polygon.area()).max(0.0),
        removed_perimeter: p.perimeter() - polygon.perimeter(),
        polygon,
        gamma_eps,
    })
}

/// Enlarges `p` by the region between the boundary arc from `x_minus` to
/// `x_plus` and the one-sided tangent lines at the two points (the supporting
/// lines of the arc's first and last edges), up to where they cross.
pub fn tangent_fill_competitor(
    p: &HalfPlanePolygon,
    x_minus: Point,
    x_plus: Point,
) -> Result<HalfPlanePolygon> {
    let n = p.len();
    let (em, tm) = p.locate_on_boundary(x_minus)?;
    let (ep_raw, tp) = p.locate_on_boundary(x_plus)?;
    // At a vertex the tangent of x_plus is its incoming edge.
    let ep = if tp == 0.0 { (ep_raw + n - 1) % n } else { ep_raw };
    let span = (ep + n - em) % n;
    if span == 0 {
        if tp == 0.0 || tp >= tm {
            return Ok(p.clone());
        }
        return Err(Error::Precondition("x_minus does not precede x_plus".into()));
    }
    for k in 0..=span {
        let e = (em + k) % n;
        if p.is_floor_edge(e) {
            return Err(Error::Unsupported("fill arc runs over the floor".into()));
        }
    }
    if span == 1 {
        return Ok(p.clone());
    }
    let (a, b) = p.edge(em);
    let (c, d) = p.edge(ep);
    let dm = b - a;
    let dp = d - c;
    let denom = cross(dm, dp);
    let tol = 1e-12 * p.diameter();
    if denom.abs() <= 1e-14 * dm.norm() * dp.norm() {
        if cross(dm, c - a).abs() <= tol * dm.norm() {
            return Ok(p.clone());
        }
        return Err(Error::Unsupported("tangent lines are parallel".into()));
    }
    let s = cross(c - a, dp) / denom;
    let u = cross(c - a, dm) / denom;
    if s < 1.0 - 1e-12 || u > 1e-12 {
        return Err(Error::Unsupported(
            "tangent lines do not cross between the two points".into(),
        ));
    }
    let crossing = a + dm * s;
    if crossing.y < -tol {
        return Err(Error::Unsupported("fill exits the half-plane".into()));
    }
    let mut verts = Vec::with_capacity(n);
    let mut k = (ep + 1) % n;
    loop {
        verts.push(p.vertices()[k]);
        if k == em {
            break;
        }
        k = (k + 1) % n;
    }
    if (crossing - verts[verts.len() - 1]).norm() > tol && (crossing - verts[0]).norm() > tol {
        verts.push(crossing);
    }
    HalfPlanePolygon::new(verts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::PI;

    fn square() -> HalfPlanePolygon {
        fixtures::unit_square()
    }

    #[test]
    fn square_area_and_scaling() {
        assert_eq!(square().area(), 1.0);
        let big = square().scaled_about(Point::origin(), 2.0).unwrap();
        assert_eq!(big.area(), 4.0);
    }

    #[test]
    fn ngon_area_matches_closed_form() {
        let p = fixtures::regular_polygon(1024, 1.0, Point::new(0.0, 2.0));
        let exact = 512.0 * (2.0 * PI / 1024.0).sin();
        assert!((p.area() - exact).abs() < 1e-12);
        assert!((p.area() - PI).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_shapes() {
        let cw = vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 0.0)];
        assert!(HalfPlanePolygon::new(cw).is_err());
        let below = vec![Point::new(0.0, -0.5), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(HalfPlanePolygon::new(below).is_err());
        let reflex = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        assert!(HalfPlanePolygon::new(reflex).is_err());
        let flat = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        assert!(HalfPlanePolygon::new(flat).is_err());
    }

    #[test]
    fn snaps_near_floor_vertices() {
        let p = HalfPlanePolygon::new(vec![
            Point::new(0.0, 1e-14),
            Point::new(1.0, -1e-14),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(p.contact_indices(), Some((0, 1)));
        assert_eq!(p.vertices()[1].y, 0.0);
    }

    #[test]
    fn square_boundary_measures() {
        let m = square().boundary_measures();
        assert_eq!(m.free_perimeter, 3.0);
        assert_eq!(m.wetted_length, 1.0);
        let c = m.contact.unwrap();
        assert!((c.gamma1 - PI / 2.0).abs() < 1e-15);
        assert!((c.gamma2 - PI / 2.0).abs() < 1e-15);
        assert_eq!(c.p1, Point::new(0.0, 0.0));
        assert_eq!(c.p2, Point::new(1.0, 0.0));
    }

    #[test]
    fn lifted_square_has_no_contact() {
        let lifted = square().translated(Vec2::new(0.0, 1.0)).unwrap();
        let m = lifted.boundary_measures();
        assert_eq!(m.free_perimeter, 4.0);
        assert_eq!(m.wetted_length, 0.0);
        assert!(m.contact.is_none());
    }

    #[test]
    fn square_fitted_angles_are_right_angles() {
        for band in [0.05, 0.5, 1.0] {
            let f = square().contact_angles_fitted(band).unwrap();
            assert_eq!(f.gamma1, PI / 2.0);
            assert_eq!(f.gamma2, PI / 2.0);
        }
        assert!(square().contact_angles_fitted(0.5).unwrap().fallback1);
    }

    #[test]
    fn diameters() {
        assert!((square().diameter() - 2f64.sqrt()).abs() < 1e-15);
        let slab = fixtures::slab(10.0);
        let expect = (20.0f64.powi(2) + 0.05f64.powi(2)).sqrt();
        assert!((slab.diameter() - expect).abs() < 1e-12);
        let ngon = fixtures::regular_polygon(64, 1.0, Point::new(0.0, 1.0));
        assert!((ngon.diameter() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn convex_project_removes_interior_points() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 0.5),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let p = convex_project(&pts).unwrap();
        assert_eq!(p.vertices(), square().vertices());
    }

    #[test]
    fn convex_project_clips_to_half_plane() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, -0.1),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let p = convex_project(&pts).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.vertices().iter().all(|v| v.y >= 0.0));
        assert!((p.area() - 1.0).abs() < 1e-15);
        assert_eq!(p.boundary_measures().wetted_length, 1.0);

        let pts = [
            Point::new(0.0, -0.2),
            Point::new(1.0, -0.1),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let p = convex_project(&pts).unwrap();
        assert_eq!(p.len(), 4);
        assert!((p.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn convex_project_identity_on_convex_input() {
        let p = fixtures::regular_polygon(37, 1.3, Point::new(0.2, 1.5));
        let q = convex_project(p.vertices()).unwrap();
        assert_eq!(p.vertices(), q.vertices());
        // collinear runs survive
        let run = HalfPlanePolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(0.5, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(convex_project(run.vertices()).unwrap(), run);
    }

    #[test]
    fn convex_project_rejects_collinear() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        assert!(convex_project(&pts).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let s = square();
        let shifted = s.translated(Vec2::new(0.1, 0.0)).unwrap();
        assert!((hausdorff_distance(&s, &shifted) - 0.1).abs() < 1e-15);
        assert_eq!(hausdorff_distance(&s, &s), 0.0);
        let big = s.scaled_about(Point::origin(), 2.0).unwrap();
        assert!((hausdorff_distance(&s, &big) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn symdiff_examples() {
        let s = square();
        let shifted = s.translated(Vec2::new(0.1, 0.0)).unwrap();
        assert!((symdiff_area(&s, &shifted) - 0.2).abs() < 1e-14);
        let far = s.translated(Vec2::new(5.0, 0.0)).unwrap();
        assert!((symdiff_area(&s, &far) - 2.0).abs() < 1e-14);
        let inner = s.scaled_about(Point::new(0.5, 0.5), 0.5).unwrap();
        assert!((symdiff_area(&s, &inner) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn curvature_of_regular_polygon() {
        for &(n, r) in &[(64usize, 1.0), (256, 2.5)] {
            let p = fixtures::regular_polygon(n, r, Point::new(0.0, r + 1.0));
            let exact = (2.0 * PI / n as f64) / (2.0 * r * (PI / n as f64).sin());
            for k in p.discrete_curvature() {
                let k = k.unwrap();
                assert!((k - exact).abs() < 1e-12);
                assert!((k - 1.0 / r).abs() < 2.0 / (r * (n * n) as f64));
            }
        }
    }

    #[test]
    fn curvature_on_half_disk_arc() {
        let b0 = crate::capillarity::build_bbeta(0.0, 1.0, 512).unwrap();
        let k: Vec<f64> = b0.discrete_curvature().into_iter().flatten().collect();
        assert_eq!(k.len(), b0.len() - 2);
        for v in k {
            assert!((v - (PI / 2.0).sqrt()).abs() < 1e-3);
        }
        let sq = square().discrete_curvature();
        assert_eq!(sq[0], None);
        assert_eq!(sq[1], None);
    }

    #[test]
    fn straight_run_has_zero_curvature() {
        let run = HalfPlanePolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(run.discrete_curvature()[2], Some(0.0));
    }

    #[test]
    fn cut_on_polygonal_circle() {
        let disk = fixtures::regular_polygon(512, 1.0, Point::new(0.0, 1.0));
        let top = disk
            .vertices()
            .iter()
            .copied()
            .max_by(|a, b| a.y.total_cmp(&b.y))
            .unwrap();
        let c = cut_competitor(&disk, top, 0.3).unwrap();
        assert!((c.gamma_eps - 0.05).abs() < 0.005, "{}", c.gamma_eps);
        let half = cut_competitor(&disk, top, 0.15).unwrap();
        let ratio = c.removed_area / half.removed_area;
        assert!((ratio - 8.0).abs() < 0.8, "{ratio}");
        assert!(c.polygon.area() < disk.area());
        assert!(c.removed_perimeter > 0.0);
    }

    #[test]
    fn cut_at_right_angle_corner() {
        let s = square();
        for eps in [0.1, 0.01, 0.001] {
            let c = cut_competitor(&s, Point::new(1.0, 1.0), eps).unwrap();
            assert!((c.gamma_eps - PI / 4.0).abs() < 1e-9);
            let r = eps / 3.0;
            assert!((c.removed_area - 0.5 * r * r).abs() < 1e-12);
        }
    }

    #[test]
    fn cut_errors() {
        let s = square();
        // radius larger than the body: no crossing
        assert!(cut_competitor(&s, Point::new(1.0, 1.0), 30.0).is_err());
        // cap reaching the floor
        assert!(matches!(
            cut_competitor(&s, Point::new(1.0, 0.2), 1.2),
            Err(Error::Unsupported(_))
        ));
        assert!(cut_competitor(&s, Point::new(0.5, 0.5), 0.1).is_err());
    }

    #[test]
    fn tangent_fill_on_regular_polygon() {
        let p = fixtures::regular_polygon(32, 1.0, Point::new(0.0, 1.5));
        // vertex 8 is the top; take symmetric neighbours
        let f = tangent_fill_competitor(&p, p.vertices()[5], p.vertices()[11]).unwrap();
        // exact area gap: triangle on edges 5 and 10 minus polygon arc region
        let v = p.vertices();
        let a = v[5];
        let dm = v[6] - v[5];
        let c = v[10];
        let dp = v[11] - v[10];
        let s = cross(c - a, dp) / cross(dm, dp);
        let x = a + dm * s;
        let gap = signed_area(&[v[6], x, v[10], v[9], v[8], v[7]]);
        assert!(gap > 0.0);
        assert!((f.area() - p.area() - gap).abs() < 1e-13);
        assert!(symdiff_area(&f, &p) > 0.0);
        assert!(intersection(&f, &p).len() >= 3);
    }

    #[test]
    fn tangent_fill_degenerate_cases() {
        let p = fixtures::regular_polygon(32, 1.0, Point::new(0.0, 1.5));
        let f = tangent_fill_competitor(&p, p.vertices()[5], p.vertices()[6]).unwrap();
        assert_eq!(f, p);
        let f = tangent_fill_competitor(&p, p.vertices()[5], p.vertices()[7]).unwrap();
        assert_eq!(f, p);
        let run = HalfPlanePolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 0.25),
            Point::new(1.0, 0.5),
            Point::new(1.0, 0.75),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let f = tangent_fill_competitor(&run, run.vertices()[2], run.vertices()[5]).unwrap();
        assert_eq!(f.area(), run.area());
    }

    #[test]
    fn tangent_fill_errors() {
        let s = square();
        // the tangents of the left and right sides are parallel
        let r = tangent_fill_competitor(&s, Point::new(1.0, 0.5), Point::new(0.0, 0.5));
        assert!(matches!(r, Err(Error::Unsupported(_))));
        let tri = HalfPlanePolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 0.1),
            Point::new(1.0, 1.0),
            Point::new(0.0, 0.1),
        ])
        .unwrap();
        // tangents of the two short vertical sides never meet above the arc
        let r = tangent_fill_competitor(&tri, Point::new(2.0, 0.05), Point::new(0.0, 0.05));
        assert!(r.is_err());
    }

    #[test]
    fn collapse_long_runs() {
        let mut v = vec![Point::new(0.0, 0.0)];
        for k in 0..=20 {
            v.push(Point::new(1.0, k as f64 / 20.0));
        }
        v.push(Point::new(0.0, 1.0));
        let p = HalfPlanePolygon::new(v).unwrap();
        let c = p.collapse_collinear_runs().unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.area(), p.area());
        let short = square().collapse_collinear_runs().unwrap();
        assert_eq!(short, square());
    }
}
