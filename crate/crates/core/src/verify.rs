//! Acceptance suite: invariant and oracle checks with pass/fail verdicts.
//!
//! Every check reports what it expected and what it measured. `Quick` caps
//! panel counts at 256 and trims the heavier optimizer runs; `Full` runs
//! every criterion at its stated size.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::capillarity::{quantitative_check, slab_family_energy, SessileConfig};
use crate::error::Result;
use crate::fixtures;
use crate::geometry::{clip_halfplane, convex_project, cut_competitor, HalfPlanePolygon, Point, Vec2};
use crate::optimizer::{
    distance_to_bbeta, el_residual, gradient_check, lambda_min_check, minimize, minimize_from_bbeta,
    q_convergence, structure_checks, young_sweep, SolverConfig,
};
use crate::potential::{
    assemble_kernel_with, build_mesh, corner_exponent, riesz_energy_oracle, solve_with_kernel,
    DiagonalRule, DEFAULT_GRADING,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    fn panels(self, n: usize) -> usize {
        match self {
            Level::Quick => n.min(256),
            Level::Full => n,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    /// Criterion label, e.g. `"4"` or `"10a"`.
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub expected: String,
    pub actual: String,
    pub seconds: f64,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>4} {}: expected {}; got {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.expected,
            self.actual,
            self.seconds
        )
    }
}

/// Criteria whose literal threshold cannot be met by any correct
/// implementation. The removed cap of a chord cut scales like
/// `(4/27) eps^2 gamma` at a smooth point, below the band's floor of 1/4.
pub const KNOWN_UNATTAINABLE: &[&str] = &["10a"];

pub struct Suite {
    pub level: Level,
    pub rule: DiagonalRule,
    pub seed: u64,
}

type CheckFn = fn(&Suite) -> Result<Vec<Outcome>>;

struct Outcome {
    suffix: &'static str,
    name: String,
    passed: bool,
    expected: String,
    actual: String,
}

fn outcome(name: impl Into<String>, passed: bool, expected: impl Into<String>, actual: impl Into<String>) -> Outcome {
    Outcome {
        suffix: "",
        name: name.into(),
        passed,
        expected: expected.into(),
        actual: actual.into(),
    }
}

const CHECKS: &[(&str, CheckFn, bool)] = &[
    ("1", disk_robin, true),
    ("2", scaling_law, true),
    ("3", monotonicity, true),
    ("4", square_capacity, true),
    ("5", corner_exponents, true),
    ("6", oracle_equivalence, true),
    ("7", zero_charge_recovery, true),
    ("8", young_law, true),
    ("9", charge_convergence, true),
    ("10", cutting_asymptotics, false),
    ("11", euler_lagrange, true),
    ("12", lambda_minimality, true),
    ("13", quantitative_isoperimetry, true),
    ("14", structure, true),
    ("15", slab_divergence, true),
    ("16", gradient_agreement, true),
];

impl Suite {
    pub fn new(level: Level) -> Self {
        Suite {
            level,
            rule: DiagonalRule::Exact,
            seed: 0,
        }
    }

    pub fn ids() -> impl Iterator<Item = &'static str> {
        CHECKS.iter().map(|c| c.0)
    }

    /// Runs one criterion. An error inside a check is reported as a failure.
    pub fn run_one(&self, id: &str) -> Vec<CheckResult> {
        let Some(&(id, f, _)) = CHECKS.iter().find(|c| c.0 == id) else {
            return Vec::new();
        };
        let t = Instant::now();
        let res = f(self);
        let seconds = t.elapsed().as_secs_f64();
        match res {
            Ok(outs) => outs
                .into_iter()
                .map(|o| CheckResult {
                    id: format!("{id}{}", o.suffix),
                    name: o.name,
                    passed: o.passed,
                    expected: o.expected,
                    actual: o.actual,
                    seconds,
                })
                .collect(),
            Err(e) => vec![CheckResult {
                id: id.to_string(),
                name: "error".into(),
                passed: false,
                expected: "no error".into(),
                actual: e.to_string(),
                seconds,
            }],
        }
    }

    /// Runs the suite. Quick skips criteria that cannot pass by design.
    pub fn run(&self, mut report: impl FnMut(&CheckResult)) -> Vec<CheckResult> {
        let mut all = Vec::new();
        for &(id, _, in_quick) in CHECKS {
            if self.level == Level::Quick && !in_quick {
                continue;
            }
            for r in self.run_one(id) {
                report(&r);
                all.push(r);
            }
        }
        all
    }

    fn robin(&self, poly: &HalfPlanePolygon, n_panels: usize) -> Result<f64> {
        let mesh = build_mesh(poly, self.level.panels(n_panels), DEFAULT_GRADING)?;
        let k = assemble_kernel_with(&mesh, self.rule)?;
        Ok(solve_with_kernel(&mesh, &k, false)?.robin)
    }

    fn solver(&self, beta: f64, q: f64) -> SolverConfig {
        let mut cfg = SolverConfig::new(beta, q);
        cfg.sessile.n_panels = self.level.panels(cfg.sessile.n_panels);
        cfg.seed = self.seed;
        cfg
    }
}

fn disk_robin(s: &Suite) -> Result<Vec<Outcome>> {
    let t = Instant::now();
    let nv = s.level.panels(1024) / 2;
    let unit = s.robin(&fixtures::disk_on_floor(nv, 1.0), 1024)?;
    let two = s.robin(&fixtures::disk_on_floor(nv, 2.0), 1024)?;
    let secs = t.elapsed().as_secs_f64();
    let err = unit.abs().max((two + 2f64.ln()).abs());
    Ok(vec![outcome(
        "disk Robin constant",
        err <= 1e-3 && secs <= 5.0,
        "|I2(unit)| and |I2(2 disk) + log 2| <= 1e-3 within 5 s",
        format!("I2 = {unit:.3e}, {two:.6}, worst error {err:.2e} in {secs:.2} s"),
    )])
}

fn scaling_law(s: &Suite) -> Result<Vec<Outcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(2));
    let p = fixtures::random_sessile_polygon(&mut rng, 10, 1.0);
    let base = s.robin(&p, 256)?;
    let mut worst: f64 = 0.0;
    for lam in [0.5, 3.0] {
        let scaled = p.scaled_about(Point::origin(), lam)?;
        worst = worst.max((s.robin(&scaled, 256)? - (base - lam.ln())).abs());
    }
    Ok(vec![outcome(
        "log scaling I2(lE) = I2(E) - log l",
        worst <= 1e-8,
        "deviation <= 1e-8 for l in {0.5, 3}",
        format!("{worst:.2e}"),
    )])
}

/// A body inside `outer`: a random half-plane cut shrunk about its centroid.
fn nested_inner<R: Rng>(outer: &HalfPlanePolygon, rng: &mut R) -> Result<HalfPlanePolygon> {
    loop {
        let t: f64 = rng.gen_range(0.0..2.0 * PI);
        let n = Vec2::new(t.cos(), t.sin());
        let c = outer.centroid();
        let off = n.dot(&c.coords) + rng.gen_range(-0.2..0.3) * outer.diameter();
        let piece = clip_halfplane(outer.vertices(), n, off);
        let Ok(piece) = convex_project(&piece) else {
            continue;
        };
        if piece.area() < 0.3 * outer.area() {
            continue;
        }
        let g = piece.centroid();
        return piece.scaled_about(g, rng.gen_range(0.6..1.0));
    }
}

fn monotonicity(s: &Suite) -> Result<Vec<Outcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(3));
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let outer = fixtures::random_sessile_polygon(&mut rng, 12, 1.0);
        let inner = nested_inner(&outer, &mut rng)?;
        worst = worst.min(s.robin(&inner, 256)? - s.robin(&outer, 256)?);
    }
    Ok(vec![outcome(
        "monotone under inclusion",
        worst >= -1e-3,
        "min I2(inner) - I2(outer) >= -1e-3 over 20 pairs",
        format!("{worst:.4e}"),
    )])
}

/// `-log` of the unit square's capacity `Gamma(1/4)^2 / (4 pi^{3/2})`.
pub const SQUARE_ROBIN: f64 = 0.527_344_140_497_836;

fn square_capacity(s: &Suite) -> Result<Vec<Outcome>> {
    let t = Instant::now();
    let sq = fixtures::unit_square();
    let n = s.level.panels(1024);
    let levels = [n / 2, n, 2 * n];
    let mut v = [0.0; 3];
    for (x, &m) in v.iter_mut().zip(&levels) {
        let mesh = build_mesh(&sq, m, DEFAULT_GRADING)?;
        let k = assemble_kernel_with(&mesh, s.rule)?;
        *x = solve_with_kernel(&mesh, &k, false)?.robin;
    }
    // Richardson with the observed order
    let (d1, d2) = (v[1] - v[0], v[2] - v[1]);
    let extrapolated = if d1 * d2 > 0.0 && d1.abs() > d2.abs() {
        let p = (d1 / d2).log2();
        v[2] + d2 / (2f64.powf(p) - 1.0)
    } else {
        v[2]
    };
    let secs = t.elapsed().as_secs_f64();
    let err = (v[1] - extrapolated).abs();
    let cross = (extrapolated - SQUARE_ROBIN).abs();
    Ok(vec![outcome(
        "unit square Robin constant",
        err <= 2e-3 && cross <= 2e-3 && secs <= 10.0,
        format!("within 2e-3 of the extrapolated value and of {SQUARE_ROBIN:.6} within 10 s"),
        format!(
            "I2({n}) = {:.6}, extrapolated {extrapolated:.6}, gap {err:.2e}, closed-form gap {cross:.2e}, {secs:.2} s",
            v[1]
        ),
    )])
}

fn corner_exponents(s: &Suite) -> Result<Vec<Outcome>> {
    let n = s.level.panels(1024);
    let slope = |p: &HalfPlanePolygon, corner: usize| -> Result<f64> {
        let mesh = build_mesh(p, n, DEFAULT_GRADING)?;
        let k = assemble_kernel_with(&mesh, s.rule)?;
        let sol = solve_with_kernel(&mesh, &k, false)?;
        corner_exponent(&sol, &mesh, corner)
    };
    let sq = slope(&fixtures::unit_square(), 2)?;
    let tri = slope(&fixtures::equilateral_triangle(), 2)?;
    Ok(vec![outcome(
        "corner density exponents",
        (sq + 1.0 / 3.0).abs() <= 0.1 && (tri + 0.4).abs() <= 0.1,
        "square -1/3 +- 0.1, triangle -0.4 +- 0.1",
        format!("square {sq:.4}, triangle {tri:.4}"),
    )])
}

fn oracle_equivalence(s: &Suite) -> Result<Vec<Outcome>> {
    let grid = match s.level {
        Level::Quick => 32,
        Level::Full => 48,
    };
    let nv = s.level.panels(512) / 4;
    let shapes = [
        ("disk", fixtures::disk_on_floor(nv, 1.0)),
        ("square", fixtures::unit_square()),
        ("B^0", crate::capillarity::build_bbeta(0.0, 1.0, nv)?),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, p) in &shapes {
        let panel = s.robin(p, 1024)?;
        let grid_value = riesz_energy_oracle(p, 2.0, grid)?;
        let d = (panel - grid_value).abs();
        worst = worst.max(d);
        parts.push(format!("{name} {panel:.4}/{grid_value:.4}"));
    }
    Ok(vec![outcome(
        "panel solver vs grid oracle",
        worst <= 5e-2,
        format!("|panel - grid{grid}| <= 5e-2"),
        format!("{}; worst {worst:.3e}", parts.join(", ")),
    )])
}

fn zero_charge_recovery(s: &Suite) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    for (suffix, beta) in [("a", -0.5), ("b", 0.0), ("c", 0.5)] {
        let t = Instant::now();
        let cfg = s.solver(beta, 0.0);
        let (p, _) = minimize(&fixtures::unit_square(), &cfg)?;
        let secs = t.elapsed().as_secs_f64();
        let d = distance_to_bbeta(&p, beta, 1.0)?;
        let angles = p.contact_angles_fitted(cfg.contact_band * p.diameter())?;
        let target = beta.acos();
        let angle_err = (angles.gamma1 - target)
            .abs()
            .max((angles.gamma2 - target).abs())
            .to_degrees();
        let area_err = (p.area() - 1.0).abs();
        out.push(Outcome {
            suffix,
            name: format!("q = 0 minimizer from the square, beta = {beta}"),
            passed: d.hausdorff <= 0.02 && area_err <= 1e-3 && angle_err <= 2.0 && secs <= 120.0,
            expected: "Hausdorff to B^beta <= 0.02, |area - 1| <= 1e-3, angle within 2 deg".into(),
            actual: format!(
                "Hausdorff {:.2e}, area error {area_err:.1e}, angle error {angle_err:.3} deg, {secs:.1} s",
                d.hausdorff
            ),
        });
    }
    Ok(out)
}

fn young_law(s: &Suite) -> Result<Vec<Outcome>> {
    let cells: &[(f64, f64)] = match s.level {
        Level::Quick => &[(0.5, 0.05)],
        Level::Full => &[
            (-0.5, 0.05),
            (-0.5, 0.1),
            (0.0, 0.05),
            (0.0, 0.1),
            (0.5, 0.05),
            (0.5, 0.1),
        ],
    };
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut parts = Vec::new();
    for &(beta, q) in cells {
        let t = Instant::now();
        let row = young_sweep(&[beta], &[q], &s.solver(beta, q)).remove(0);
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let dev = match (&row.error, row.cos_gamma_minus_beta) {
            (None, Some(d)) => d.abs(),
            _ => f64::INFINITY,
        };
        worst = worst.max(dev);
        parts.push(format!("({beta}, {q}) {dev:.1e}"));
    }
    Ok(vec![outcome(
        "Young's law cos gamma = beta",
        worst <= 0.05 && slowest <= 300.0,
        "|cos gamma - beta| <= 0.05 in every cell",
        format!("{}; slowest cell {slowest:.1} s", parts.join(", ")),
    )])
}

fn charge_convergence(s: &Suite) -> Result<Vec<Outcome>> {
    let qs = [0.4, 0.2, 0.1, 0.05];
    let qc = q_convergence(0.0, &qs, &s.solver(0.0, qs[0]))?;
    let sd: Vec<f64> = qc.rows.iter().map(|r| r.symdiff_to_bbeta).collect();
    let decreasing = sd.windows(2).all(|w| w[1] < w[0]);
    Ok(vec![outcome(
        "convergence to B^0 as q -> 0",
        decreasing && qc.fitted_exponent >= 0.8,
        "symdiff strictly decreasing, fitted exponent >= 0.8",
        format!(
            "symdiff {}; exponent {:.3}",
            sd.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", "),
            qc.fitted_exponent
        ),
    )])
}

fn cutting_asymptotics(_: &Suite) -> Result<Vec<Outcome>> {
    let disk = fixtures::disk_on_floor(512, 1.0);
    // midpoint of an edge near the top
    let (a, b) = disk.edge(128);
    let x = a + (b - a) * 0.5;
    let mut area_ratios = Vec::new();
    let mut drop_ratios = Vec::new();
    for eps in [0.3, 0.15, 0.075] {
        let c = cut_competitor(&disk, x, eps)?;
        area_ratios.push(c.removed_area / (eps * eps * c.gamma_eps));
        drop_ratios.push(c.removed_perimeter / (eps * c.gamma_eps * c.gamma_eps));
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    Ok(vec![
        Outcome {
            suffix: "a",
            name: "removed area over eps^2 gamma".into(),
            passed: area_ratios.iter().all(|r| (0.25..=4.0).contains(r)),
            expected: "every ratio in [1/4, 4]".into(),
            actual: format!("{} (smooth-point limit 4/27)", fmt(&area_ratios)),
        },
        Outcome {
            suffix: "b",
            name: "perimeter drop over eps gamma^2".into(),
            passed: drop_ratios.iter().all(|r| *r >= 0.25),
            expected: "every ratio >= 1/4".into(),
            actual: fmt(&drop_ratios),
        },
    ])
}

fn converged(s: &Suite, beta: f64, q: f64) -> Result<(HalfPlanePolygon, SolverConfig)> {
    let cfg = s.solver(beta, q);
    let (p, _) = minimize_from_bbeta(beta, q, &cfg)?;
    Ok((p, cfg))
}

fn euler_lagrange(s: &Suite) -> Result<Vec<Outcome>> {
    let (p, cfg) = converged(s, 0.0, 0.1)?;
    let el = el_residual(&p, &cfg)?;
    let bound = 0.15 * el.lambda_estimate.abs();
    Ok(vec![outcome(
        "Euler-Lagrange residual",
        el.residual_std <= bound,
        "residual std <= 0.15 |lambda|",
        format!("std {:.3e}, lambda {:.4}", el.residual_std, el.lambda_estimate),
    )])
}

fn lambda_minimality(s: &Suite) -> Result<Vec<Outcome>> {
    let (p, cfg) = converged(s, 0.0, 0.1)?;
    let good = lambda_min_check(&p, &cfg, 200)?;
    let h = p.vertices().iter().map(|v| v.y).fold(0.0, f64::max);
    let truncated = convex_project(&clip_halfplane(p.vertices(), Vec2::new(0.0, 1.0), 0.6 * h))?;
    let bad = lambda_min_check(&truncated, &cfg, 200)?;
    Ok(vec![outcome(
        "Lambda-minimality self-check",
        good.evaluated >= 200 && good.worst_margin >= -1e-3 && bad.worst_margin < -1e-3,
        "minimizer margin >= -1e-3 over >= 200 competitors; truncated shape below -1e-3",
        format!(
            "minimizer {:.3e} over {}, truncated {:.3e}",
            good.worst_margin, good.evaluated, bad.worst_margin
        ),
    )])
}

fn quantitative_isoperimetry(s: &Suite) -> Result<Vec<Outcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(13));
    let mut min_ratio = f64::INFINITY;
    let mut used = 0;
    let mut skipped = 0;
    for k in 0..50 {
        let beta = [-0.5, 0.0, 0.5][k % 3];
        let p = fixtures::random_sessile_polygon(&mut rng, 16, 1.0);
        match quantitative_check(&p, beta) {
            Ok(r) => {
                used += 1;
                min_ratio = min_ratio.min(r.ratio);
            }
            Err(_) => skipped += 1,
        }
    }
    Ok(vec![outcome(
        "quantitative isoperimetric ratio",
        used > 0 && min_ratio > 0.0,
        "min deficit / asymmetry^2 > 0 over a 50-shape corpus",
        format!("min ratio {min_ratio:.4} over {used} shapes ({skipped} below the asymmetry floor)"),
    )])
}

fn structure(s: &Suite) -> Result<Vec<Outcome>> {
    let mut worst_wet = f64::INFINITY;
    let mut worst_run: f64 = 0.0;
    for (beta, q) in [(0.0, 0.1), (0.5, 0.05)] {
        let (p, cfg) = converged(s, beta, q)?;
        let r = structure_checks(&p, &cfg);
        worst_wet = worst_wet.min(r.wetted_length);
        worst_run = worst_run.max(r.run_in_mesh_edges);
    }
    Ok(vec![outcome(
        "wetting and no free segments",
        worst_wet >= 0.3 && worst_run <= 2.0,
        "wetted length >= 0.3, longest collinear run <= 2 mesh edges",
        format!("wetted {worst_wet:.4}, run {worst_run:.3} edges"),
    )])
}

fn slab_divergence(s: &Suite) -> Result<Vec<Outcome>> {
    let radii = [1.0, 2.0, 4.0, 8.0, 16.0];
    let totals = |beta: f64| -> Result<Vec<f64>> {
        let cfg = SessileConfig {
            beta,
            q: 1.0,
            n_panels: s.level.panels(512),
            ..SessileConfig::default()
        };
        radii
            .iter()
            .map(|&r| Ok(slab_family_energy(r, &cfg, true)?.total))
            .collect()
    };
    let one = totals(1.0)?;
    let zero = totals(0.0)?;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    Ok(vec![outcome(
        "slab family",
        one.windows(2).all(|w| w[1] < w[0]) && zero.windows(2).all(|w| w[1] > w[0]),
        "beta = 1 totals decreasing, beta = 0 increasing in R",
        format!("beta 1: {}; beta 0: {}", fmt(&one), fmt(&zero)),
    )])
}

fn gradient_agreement(s: &Suite) -> Result<Vec<Outcome>> {
    let (p, mut cfg) = converged(s, 0.0, 0.1)?;
    cfg.sessile.q = 1.0;
    let off = p.scaled_about(Point::new(p.centroid().x, 0.0), 1.05)?;
    let a = gradient_check(&p, &cfg)?;
    let b = gradient_check(&off, &cfg)?;
    let worst = a.median_relative_error.max(b.median_relative_error);
    Ok(vec![outcome(
        "analytic vs finite-difference gradient",
        worst <= 0.05,
        "median relative error <= 5% on free vertices",
        format!(
            "{:.2e} at the minimizer, {:.2e} on a dilated copy",
            a.median_relative_error, b.median_relative_error
        ),
    )])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injected_diagonal_bug_breaks_disk_check() {
        let mut s = Suite::new(Level::Quick);
        s.rule = DiagonalRule::MissingConstant;
        let r = s.run_one("1");
        assert_eq!(r.len(), 1);
        assert!(!r[0].passed, "{}", r[0].line());
    }

    #[test]
    fn square_constant_matches_gamma() {
        // Gamma(1/4) = 3.625609908221908...
        let g = 3.625_609_908_221_908_f64;
        let cap = g * g / (4.0 * PI.powf(1.5));
        assert!((-cap.ln() - SQUARE_ROBIN).abs() < 1e-13);
    }
}
