//! Reference shapes used by tests, the verification suite and the CLI.

use std::f64::consts::PI;

use rand::Rng;

use crate::geometry::{clip_halfplane, convex_project, HalfPlanePolygon, Point, Vec2};

pub fn unit_square() -> HalfPlanePolygon {
    rectangle(1.0, 1.0)
}

/// `[0, w] x [0, h]`.
pub fn rectangle(w: f64, h: f64) -> HalfPlanePolygon {
    HalfPlanePolygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(w, 0.0),
        Point::new(w, h),
        Point::new(0.0, h),
    ])
    .expect("rectangle is a valid polygon")
}

/// Regular `n`-gon inscribed in the circle of radius `r` about `center`,
/// with vertex `k` at angle `2 pi k / n`.
pub fn regular_polygon(n: usize, r: f64, center: Point) -> HalfPlanePolygon {
    let v = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            center + Vec2::new(r * t.cos(), r * t.sin())
        })
        .collect();
    HalfPlanePolygon::new(v).expect("regular polygon above the floor")
}

/// Polygonal disk touching the floor at a single vertex (`n` divisible by 4).
pub fn disk_on_floor(n: usize, r: f64) -> HalfPlanePolygon {
    regular_polygon(n, r, Point::new(0.0, r))
}

/// Equilateral triangle with unit side lying on the floor.
pub fn equilateral_triangle() -> HalfPlanePolygon {
    HalfPlanePolygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(0.5, 0.75f64.sqrt()),
    ])
    .expect("triangle is valid")
}

/// Area-one slab `[-R, R] x [0, 1/(2R)]`.
pub fn slab(r: f64) -> HalfPlanePolygon {
    let h = 1.0 / (2.0 * r);
    HalfPlanePolygon::new(vec![
        Point::new(-r, 0.0),
        Point::new(r, 0.0),
        Point::new(r, h),
        Point::new(-r, h),
    ])
    .expect("slab is valid")
}

/// Stadium resting on the floor: a `length x 2 radius` rectangle capped by
/// two half disks, each discretised with `arc_vertices` points.
pub fn stadium(length: f64, radius: f64, arc_vertices: usize) -> HalfPlanePolygon {
    let mut v = Vec::with_capacity(2 * arc_vertices);
    let right = Point::new(0.5 * length, radius);
    let left = Point::new(-0.5 * length, radius);
    for k in 0..arc_vertices {
        let t = -PI / 2.0 + PI * k as f64 / (arc_vertices - 1) as f64;
        v.push(right + Vec2::new(radius * t.cos(), radius * t.sin()));
    }
    for k in 0..arc_vertices {
        let t = PI / 2.0 + PI * k as f64 / (arc_vertices - 1) as f64;
        v.push(left + Vec2::new(radius * t.cos(), radius * t.sin()));
    }
    HalfPlanePolygon::new(v).expect("stadium is valid")
}

/// Random convex polygon wetting the floor, rescaled to the given area.
///
/// Points are drawn on a random ellipse, their hull is cut by a horizontal
/// line below the centre and the result is set on the floor.
pub fn random_sessile_polygon<R: Rng>(rng: &mut R, n_points: usize, area: f64) -> HalfPlanePolygon {
    loop {
        let a = rng.gen_range(0.5..2.0);
        let b = rng.gen_range(0.5..2.0);
        let tilt: f64 = rng.gen_range(0.0..PI);
        let pts: Vec<Point> = (0..n_points.max(4))
            .map(|_| {
                let t: f64 = rng.gen_range(0.0..2.0 * PI);
                let (x, y) = (a * t.cos(), b * t.sin());
                Point::new(
                    x * tilt.cos() - y * tilt.sin(),
                    x * tilt.sin() + y * tilt.cos() + 10.0,
                )
            })
            .collect();
        let Ok(hull) = convex_project(&pts) else {
            continue;
        };
        let ymin = hull.vertices().iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let ymax = hull.vertices().iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        let cut = ymin + rng.gen_range(0.05..0.6) * (ymax - ymin);
        let clipped = clip_halfplane(hull.vertices(), Vec2::new(0.0, -1.0), -cut);
        let shifted: Vec<Point> = clipped.iter().map(|p| Point::new(p.x, p.y - cut)).collect();
        let Ok(p) = convex_project(&shifted) else {
            continue;
        };
        let s = (area / p.area()).sqrt();
        if let Ok(q) = p.scaled_about(Point::new(0.0, 0.0), s) {
            if q.contact_indices().is_some() {
                return q;
            }
        }
    }
}
