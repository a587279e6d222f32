//! The Abel map from the point at infinity.
//!
//! Near infinity the curve is parametrised by `x = t⁻²`,
//! `y = -t^{-(2g+1)} √h(t)` with `h(t) = Π (1 - e_k t²)`, so that the last
//! Abel coordinate behaves like `t`. Finite points are reached from an anchor
//! circle by integrating along straight pieces, detouring around branch points.

use crate::curve::{continue_y, CurveSpec, DivisorPoint, C64};
use crate::error::{Error, Result};
use crate::quadrature::rule;
use crate::scaled::CompensatedSum;
use serde::Serialize;
use std::f64::consts::PI;

const SERIES_TERMS: usize = 600;
const PIECE_NODES: usize = 12;
const STEP_FRACTION: f64 = 0.1;
const MAX_ARG_STEP: f64 = 0.3 * PI;

/// One geometric piece of an integration path in the `x`-plane.
#[derive(Clone, Debug, Serialize)]
pub enum PathPiece {
    Line { from: [f64; 2], to: [f64; 2] },
    Arc { centre: [f64; 2], radius: f64, start_angle: f64, end_angle: f64 },
}

impl PathPiece {
    fn at(&self, s: f64) -> (C64, C64) {
        match self {
            PathPiece::Line { from, to } => {
                let a = C64::new(from[0], from[1]);
                let b = C64::new(to[0], to[1]);
                (a + (b - a) * s, b - a)
            }
            PathPiece::Arc {
                centre,
                radius,
                start_angle,
                end_angle,
            } => {
                let c = C64::new(centre[0], centre[1]);
                let phi = start_angle + (end_angle - start_angle) * s;
                let p = C64::from_polar(*radius, phi);
                (c + p, C64::new(0.0, end_angle - start_angle) * p)
            }
        }
    }

    fn length(&self) -> f64 {
        match self {
            PathPiece::Line { from, to } => ((to[0] - from[0]).powi(2) + (to[1] - from[1]).powi(2)).sqrt(),
            PathPiece::Arc {
                radius,
                start_angle,
                end_angle,
                ..
            } => radius * (end_angle - start_angle).abs(),
        }
    }
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Record of how one point was reached.
#[derive(Clone, Debug, Serialize)]
pub struct AbelPath {
    pub anchor: [f64; 2],
    pub tail_parameter: [f64; 2],
    pub pieces: Vec<PathPiece>,
    /// `(x, y)` at every quadrature sub-interval boundary.
    pub samples: Vec<[f64; 4]>,
    /// True when the continued sheet ended on the involuted point and the
    /// result was negated.
    pub negated: bool,
    pub value: Vec<[f64; 2]>,
}

/// Abel map data for one curve.
#[derive(Clone, Debug)]
pub struct AbelMap<'a> {
    curve: &'a CurveSpec,
    series: Vec<C64>,
    anchor_radius: f64,
    route_eps: f64,
}

impl<'a> AbelMap<'a> {
    pub fn new(curve: &'a CurveSpec) -> AbelMap<'a> {
        let g = curve.genus();
        let h: Vec<C64> = (0..=2 * g + 1).map(|j| curve.lambda(2 * g + 1 - j)).collect();
        let mut a = vec![C64::new(1.0, 0.0)];
        for m in 1..SERIES_TERMS {
            let mut acc = C64::new(0.0, 0.0);
            for j in 1..=m.min(2 * g + 1) {
                acc += h[j] * a[m - j] * (0.5 * j as f64 - m as f64);
            }
            a.push(acc / m as f64);
        }
        let scale = curve.max_branch_modulus().max(1e-3);
        AbelMap {
            curve,
            series: a,
            anchor_radius: 4.0 * scale,
            route_eps: 0.05 * curve.min_branch_gap(),
        }
    }

    pub fn curve(&self) -> &CurveSpec {
        self.curve
    }

    pub fn anchor_radius(&self) -> f64 {
        self.anchor_radius
    }

    fn sqrt_h(&self, t: C64) -> C64 {
        let w = t * t;
        self.curve
            .branch_points()
            .iter()
            .fold(C64::new(1.0, 0.0), |acc, e| acc * (C64::new(1.0, 0.0) - e * w).sqrt())
    }

    /// The curve point with local parameter `t` at infinity.
    pub fn point_at_parameter(&self, t: C64) -> DivisorPoint {
        let g = self.curve.genus() as i32;
        DivisorPoint {
            x: t.powi(-2),
            y: -t.powi(-(2 * g + 1)) * self.sqrt_h(t),
        }
    }

    /// Abel image of the point with parameter `t`, from the series at infinity.
    pub fn tail(&self, t: C64) -> Result<Vec<C64>> {
        let g = self.curve.genus();
        let w = t * t;
        let mut sums = vec![CompensatedSum::new(); g];
        let mut wm = C64::new(1.0, 0.0);
        let mut quiet = 0;
        for m in 0..SERIES_TERMS {
            let mut biggest: f64 = 0.0;
            for i in 1..=g {
                let p = 2 * (g - i) + 2 * m + 1;
                let term = self.series[m] * wm * t.powi((2 * (g - i) + 1) as i32) / p as f64;
                biggest = biggest.max(term.norm());
                sums[i - 1].add(term);
            }
            let size = sums.iter().map(|s| s.value().norm()).fold(0.0_f64, f64::max);
            if biggest <= 1e-18 * size {
                quiet += 1;
                if quiet >= 4 && m > 2 * g {
                    return Ok(sums.iter().map(|s| s.value()).collect());
                }
            } else {
                quiet = 0;
            }
            wm *= w;
        }
        Err(Error::TailNotConverged { terms: SERIES_TERMS })
    }

    /// Abel image of a finite point.
    pub fn point(&self, p: &DivisorPoint) -> Result<Vec<C64>> {
        Ok(self.path(p, 0.0)?.value.iter().map(|v| C64::new(v[0], v[1])).collect())
    }

    /// Abel image computed with the anchor rotated by `angle` radians, which
    /// changes the route and hence possibly the lattice representative.
    pub fn point_via(&self, p: &DivisorPoint, angle: f64) -> Result<Vec<C64>> {
        Ok(self.path(p, angle)?.value.iter().map(|v| C64::new(v[0], v[1])).collect())
    }

    /// Sum of Abel images.
    pub fn divisor(&self, points: &[DivisorPoint]) -> Result<Vec<C64>> {
        check_generic(self.curve, points)?;
        let mut total = vec![C64::new(0.0, 0.0); self.curve.genus()];
        for p in points {
            for (t, v) in total.iter_mut().zip(self.point(p)?) {
                *t += v;
            }
        }
        Ok(total)
    }

    fn sheet_fix(&self, y_end: C64, y_target: C64) -> Result<bool> {
        let scale = y_target.norm().max(1e-300);
        if (y_end - y_target).norm() <= 1e-6 * scale {
            Ok(false)
        } else if (y_end + y_target).norm() <= 1e-6 * scale {
            Ok(true)
        } else {
            Err(Error::PathBlocked(format!(
                "continued y = {y_end} matches neither sheet of {y_target}"
            )))
        }
    }

    /// Full record of the route used for `p`.
    pub fn path(&self, p: &DivisorPoint, angle: f64) -> Result<AbelPath> {
        let curve = self.curve;
        curve.checked_point(p.x, p.y)?;
        if curve.distance_to_branch(p.x) <= curve.separation_threshold() {
            let k = nearest_branch(curve, p.x);
            return self.branch_path(k);
        }
        if p.x.norm() >= self.anchor_radius && angle == 0.0 {
            let t = p.x.powf(-0.5);
            let q = self.point_at_parameter(t);
            let negated = self.sheet_fix(q.y, p.y)?;
            let mut u = self.tail(t)?;
            if negated {
                u.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(AbelPath {
                anchor: pair(p.x),
                tail_parameter: pair(t),
                pieces: vec![],
                samples: vec![[p.x.re, p.x.im, q.y.re, q.y.im]],
                negated,
                value: u.into_iter().map(pair).collect(),
            });
        }
        let dir = if p.x.norm() > 0.0 { p.x.unscale(p.x.norm()) } else { C64::new(1.0, 0.0) };
        let xa = dir * C64::from_polar(self.anchor_radius, angle);
        let ta = xa.powf(-0.5);
        let start = self.point_at_parameter(ta);
        let mut u = self.tail(ta)?;
        let pieces = self.route(xa, p.x)?;
        let mut samples = vec![[start.x.re, start.x.im, start.y.re, start.y.im]];
        let mut y = start.y;
        for piece in &pieces {
            y = self.integrate_piece(piece, y, &mut u, &mut samples)?;
        }
        let negated = self.sheet_fix(y, p.y)?;
        if negated {
            u.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(AbelPath {
            anchor: pair(xa),
            tail_parameter: pair(ta),
            pieces,
            samples,
            negated,
            value: u.into_iter().map(pair).collect(),
        })
    }

    /// `∫_p^q ω` along the straight segment from `p` to the point `q` over
    /// `x_to` reached by continuing `y`. Returns `q` and the integral.
    pub fn local_increment(&self, p: &DivisorPoint, x_to: C64) -> Result<(DivisorPoint, Vec<C64>)> {
        let piece = PathPiece::Line {
            from: pair(p.x),
            to: pair(x_to),
        };
        let mut u = vec![C64::new(0.0, 0.0); self.curve.genus()];
        let mut samples = Vec::new();
        let y = self.integrate_piece(&piece, p.y, &mut u, &mut samples)?;
        Ok((DivisorPoint { x: x_to, y }, u))
    }

    /// Abel image of the branch point `e_k` (0-based index into the sorted list).
    pub fn branch_point(&self, k: usize) -> Result<Vec<C64>> {
        Ok(self.branch_path(k)?.value.iter().map(|v| C64::new(v[0], v[1])).collect())
    }

    fn branch_path(&self, k: usize) -> Result<AbelPath> {
        let curve = self.curve;
        let e = curve.branch_points();
        let ek = e[k];
        let rho = 0.25
            * e.iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, p)| (p - ek).norm())
                .fold(f64::INFINITY, f64::min);
        let dir = if ek.norm() > 0.0 { ek.unscale(ek.norm()) } else { C64::from_polar(1.0, 0.3) };
        let xa = dir * self.anchor_radius;
        let towards = (xa - ek).unscale((xa - ek).norm());
        let q = ek + towards * rho;
        let ta = xa.powf(-0.5);
        let start = self.point_at_parameter(ta);
        let mut u = self.tail(ta)?;
        let pieces = self.route(xa, q)?;
        let mut samples = vec![[start.x.re, start.x.im, start.y.re, start.y.im]];
        let mut yq = start.y;
        for piece in &pieces {
            yq = self.integrate_piece(piece, yq, &mut u, &mut samples)?;
        }
        let others: Vec<C64> = e.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, p)| *p).collect();
        let g0 = others.iter().fold(C64::new(1.0, 0.0), |acc, p| acc * (ek - p)).sqrt();
        let big_g = |x: C64| others.iter().fold(g0, |acc, p| acc * ((x - p) / (ek - p)).sqrt());
        let mut sq = (q - ek).sqrt();
        if (sq * big_g(q) - yq).norm() > (sq * big_g(q) + yq).norm() {
            sq = -sq;
        }
        let g = curve.genus();
        let nodes = rule(40);
        let mut accs = vec![CompensatedSum::new(); g];
        for &(node, w) in nodes.iter() {
            let s = sq * (0.5 * (1.0 - node));
            let x = ek + s * s;
            let base = w * 0.5 / big_g(x) * (-sq);
            let mut xp = C64::new(1.0, 0.0);
            for acc in accs.iter_mut() {
                acc.add(base * xp);
                xp *= x;
            }
        }
        for (v, acc) in u.iter_mut().zip(accs.iter()) {
            *v += acc.value();
        }
        samples.push([ek.re, ek.im, 0.0, 0.0]);
        Ok(AbelPath {
            anchor: pair(xa),
            tail_parameter: pair(ta),
            pieces,
            samples,
            negated: false,
            value: u.into_iter().map(pair).collect(),
        })
    }

    /// Straight route from `a` to `b`, with arcs around branch points that lie
    /// closer than the routing radius.
    fn route(&self, a: C64, b: C64) -> Result<Vec<PathPiece>> {
        let eps = self.route_eps;
        let d = b - a;
        let len = d.norm();
        let mut hits: Vec<(f64, f64, C64)> = Vec::new();
        for &e in self.curve.branch_points() {
            let s = ((e - a) * d.conj()).re / (len * len);
            let foot = a + d * s;
            let dist = (e - foot).norm();
            if dist >= eps || s <= 0.0 || s >= 1.0 {
                continue;
            }
            let half = (eps * eps - dist * dist).sqrt() / len;
            if s - half <= 0.0 || s + half >= 1.0 {
                if dist < 1e-6 * eps {
                    return Err(Error::PathBlocked(format!("route ends next to branch point {e}")));
                }
                continue;
            }
            hits.push((s - half, s + half, e));
        }
        hits.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        let mut pieces = Vec::new();
        let mut cur = a;
        for (s0, s1, e) in hits {
            let p0 = a + d * s0;
            let p1 = a + d * s1;
            pieces.push(PathPiece::Line { from: pair(cur), to: pair(p0) });
            let th0 = (p0 - e).arg();
            let mut th1 = (p1 - e).arg();
            while th1 - th0 > PI {
                th1 -= 2.0 * PI;
            }
            while th1 - th0 < -PI {
                th1 += 2.0 * PI;
            }
            pieces.push(PathPiece::Arc {
                centre: pair(e),
                radius: eps,
                start_angle: th0,
                end_angle: th1,
            });
            cur = p1;
        }
        pieces.push(PathPiece::Line { from: pair(cur), to: pair(b) });
        Ok(pieces)
    }

    fn integrate_piece(&self, piece: &PathPiece, y0: C64, u: &mut [C64], samples: &mut Vec<[f64; 4]>) -> Result<C64> {
        let curve = self.curve;
        let g = curve.genus();
        let total = piece.length();
        if total == 0.0 {
            return Ok(y0);
        }
        let nodes = rule(PIECE_NODES);
        let mut s = 0.0;
        let (mut x, _) = piece.at(0.0);
        let mut y = y0;
        let mut accs: Vec<CompensatedSum> = u.iter().map(|v| {
            let mut c = CompensatedSum::new();
            c.add(*v);
            c
        }).collect();
        let mut guard = 0;
        while s < 1.0 {
            guard += 1;
            if guard > 1_000_000 {
                return Err(Error::PathBlocked("too many integration steps".into()));
            }
            let dist = curve.distance_to_branch(x);
            if dist <= curve.separation_threshold() {
                return Err(Error::PathBlocked(format!("path passes through a branch point near {x}")));
            }
            let ds = (STEP_FRACTION * dist / total).min(1.0 - s);
            let s1 = s + ds;
            for &(node, w) in nodes.iter() {
                let sn = s + ds * 0.5 * (1.0 + node);
                let (xn, dx) = piece.at(sn);
                let yn = continue_y(curve, x, y, xn);
                let base = dx * (w * 0.5 * ds) / (yn * 2.0);
                let mut xp = C64::new(1.0, 0.0);
                for acc in accs.iter_mut().take(g) {
                    acc.add(base * xp);
                    xp *= xn;
                }
            }
            let (x1, _) = piece.at(s1);
            let y1 = continue_y(curve, x, y, x1);
            let arg_step: f64 = curve
                .branch_points()
                .iter()
                .map(|e| 0.5 * ((x1 - e) / (x - e)).arg().abs())
                .sum();
            if arg_step > MAX_ARG_STEP {
                return Err(Error::PathBlocked(format!("argument of y jumped by {arg_step} in one step")));
            }
            x = x1;
            y = y1;
            s = s1;
            samples.push([x.re, x.im, y.re, y.im]);
        }
        for (v, acc) in u.iter_mut().zip(accs.iter()) {
            *v = acc.value();
        }
        Ok(y)
    }
}

fn nearest_branch(curve: &CurveSpec, x: C64) -> usize {
    curve
        .branch_points()
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).norm().partial_cmp(&(b.1 - x).norm()).unwrap())
        .map(|(k, _)| k)
        .unwrap()
}

/// Reject divisors containing a repeated point or a point together with its involution.
pub fn check_generic(curve: &CurveSpec, points: &[DivisorPoint]) -> Result<()> {
    let tol = 1e-8 * (1.0 + curve.max_branch_modulus());
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (points[i].x - points[j].x).norm() <= tol {
                let kind = if (points[i].y - points[j].y).norm() <= (points[i].y + points[j].y).norm() {
                    "repeated point"
                } else {
                    "point together with its involution"
                };
                return Err(Error::NonGenericDivisor(format!("{kind} at index {i} and {j}")));
            }
        }
    }
    Ok(())
}

/// Abel image of a divisor packaged with its lattice coordinates.
pub fn abel_divisor(curve: &CurveSpec, pd: &crate::periods::PeriodData, points: &[DivisorPoint]) -> Result<crate::sigma::JacobianPoint> {
    let map = AbelMap::new(curve);
    let u = map.divisor(points)?;
    let mut jp = crate::sigma::JacobianPoint::new(u, pd)?;
    jp.stratum = Some(points.len());
    Ok(jp)
}

/// Leading behaviour of `x` and `y` against the last Abel coordinate on the
/// image of the curve.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    pub parameters: Vec<f64>,
    pub x_times_ug2: Vec<[f64; 2]>,
    pub y_times_ug_pow: Vec<[f64; 2]>,
    pub x_limit: [f64; 2],
    pub y_limit: [f64; 2],
    pub x_slope: f64,
    pub y_slope: f64,
    pub x_convergence_order: f64,
    pub y_convergence_order: f64,
    pub expected_x_coefficient: f64,
    pub expected_y_coefficient: f64,
    pub stated_y_coefficient: f64,
    pub pass: bool,
}

/// Probe `x u_g²` and `y u_g^{2g+1}` along real parameters `ts` (decreasing).
pub fn stratum1_expansion_check(curve: &CurveSpec, ts: &[f64]) -> Result<ExpansionReport> {
    assert!(ts.len() >= 3, "need at least three parameters");
    let map = AbelMap::new(curve);
    let g = curve.genus();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut logs = Vec::new();
    for &t in ts {
        let tc = C64::new(t, 0.0);
        let p = map.point_at_parameter(tc);
        let u = map.tail(tc)?;
        let ug = u[g - 1];
        xs.push(p.x * ug * ug);
        ys.push(p.y * ug.powi(2 * g as i32 + 1));
        logs.push((ug.norm().ln(), p.x.norm().ln(), p.y.norm().ln()));
    }
    let n = ts.len();
    // Both products are even in t, so one Richardson step in t² removes the leading error.
    let rich = |v: &[C64]| -> C64 {
        let (t1, t2) = (ts[n - 2], ts[n - 1]);
        let r = (t1 / t2).powi(2);
        (v[n - 1] * r - v[n - 2]) / (r - 1.0)
    };
    let x_limit = rich(&xs);
    let y_limit = rich(&ys);
    let slope = |i: usize, sel: fn(&(f64, f64, f64)) -> f64| {
        (sel(&logs[i]) - sel(&logs[i - 1])) / (logs[i].0 - logs[i - 1].0)
    };
    let x_slope = slope(n - 1, |l| l.1);
    let y_slope = slope(n - 1, |l| l.2);
    let order = |v: &[C64], lim: C64| {
        let e1 = (v[n - 2] - lim).norm();
        let e2 = (v[n - 1] - lim).norm();
        if e2 < 1e-12 || e1 < 1e-12 {
            f64::INFINITY
        } else {
            (e1 / e2).ln() / (ts[n - 2] / ts[n - 1]).ln()
        }
    };
    let x_order = order(&xs, C64::new(1.0, 0.0));
    let y_order = order(&ys, C64::new(-1.0, 0.0));
    let pass = (x_limit - 1.0).norm() < 1e-4
        && (y_limit + 1.0).norm() < 1e-4
        && (x_slope + 2.0).abs() < 1e-2
        && (y_slope + (2 * g + 1) as f64).abs() < 1e-2
        && x_order >= 1.0
        && y_order >= 1.0;
    Ok(ExpansionReport {
        parameters: ts.to_vec(),
        x_times_ug2: xs.iter().map(|z| pair(*z)).collect(),
        y_times_ug_pow: ys.iter().map(|z| pair(*z)).collect(),
        x_limit: pair(x_limit),
        y_limit: pair(y_limit),
        x_slope,
        y_slope,
        x_convergence_order: x_order,
        y_convergence_order: y_order,
        expected_x_coefficient: 1.0,
        expected_y_coefficient: -1.0,
        stated_y_coefficient: 1.0,
        pass,
    })
}
