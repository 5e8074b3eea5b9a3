//! Integration domains and their parameterizations.
//!
//! Every deterministic integration runs over axis-aligned boxes in a
//! parameter space; a [`Chart`] maps parameter points to physical points and
//! supplies the volume factor. Balls use polar coordinates about their
//! center with the polar axis along a chosen pole, so a boundary
//! concentration point sits at a corner (d = 2) or edge (d = 3) of the
//! parameter boxes. Caps use polar coordinates about the cutting ball's
//! center, so the clipping sphere becomes a parameter-box face instead of a
//! discontinuity in the integrand.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm, Point};

pub(crate) type Coords = SmallVec<[f64; 4]>;

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        d => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(
                "radius",
                format!("need a positive radius, got {radius}"),
            ));
        }
        Ok(Ball { center, radius })
    }

    pub fn unit(dim: usize) -> Self {
        Ball {
            center: Point::zeros(dim),
            radius: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d2: f64 = x
            .iter()
            .zip(self.center.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        d2 <= self.radius * self.radius
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }
}

/// Which part of the main ball a cap keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapMode {
    /// `ball ∩ cutter`
    Inside,
    /// `ball \ cutter`
    Outside,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// A ball; `pole` is the unit polar-axis direction of its parameterization.
    Ball {
        ball: Ball,
        pole: Point,
    },
    Rectangle {
        lo: Point,
        hi: Point,
    },
    /// Part of `ball` inside or outside `cutter`. The cutter's center may lie
    /// outside the ball.
    Cap {
        ball: Ball,
        cutter: Ball,
        mode: CapMode,
    },
}

impl Region {
    /// Ball with polar axis along e_1.
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        let d = center.dim();
        Ok(Region::Ball {
            ball: Ball::new(center, radius)?,
            pole: Point::unit(d, 0),
        })
    }

    pub fn unit_ball(dim: usize) -> Self {
        Region::Ball {
            ball: Ball::unit(dim),
            pole: Point::unit(dim, 0),
        }
    }

    /// Ball whose polar axis points toward `pole` (need not be normalized).
    pub fn ball_with_pole(center: Point, radius: f64, pole: &[f64]) -> Result<Self> {
        let p = norm(pole);
        if pole.len() != center.dim() {
            return Err(Error::DimensionMismatch {
                expected: center.dim(),
                got: pole.len(),
            });
        }
        if !(p > 0.0) {
            return Err(invalid("pole", "pole direction must be nonzero"));
        }
        Ok(Region::Ball {
            ball: Ball::new(center, radius)?,
            pole: Point::new(pole.iter().map(|v| v / p).collect::<Vec<_>>()),
        })
    }

    pub fn rectangle(lo: Point, hi: Point) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch {
                expected: lo.dim(),
                got: hi.dim(),
            });
        }
        if lo.iter().zip(hi.iter()).any(|(a, b)| !(a < b)) {
            return Err(invalid("rectangle", "need lo < hi componentwise"));
        }
        Ok(Region::Rectangle { lo, hi })
    }

    pub fn cap(ball: Ball, cutter: Ball, mode: CapMode) -> Result<Self> {
        if ball.dim() != cutter.dim() {
            return Err(Error::DimensionMismatch {
                expected: ball.dim(),
                got: cutter.dim(),
            });
        }
        Ok(Region::Cap { ball, cutter, mode })
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Ball { ball, .. } | Region::Cap { ball, .. } => ball.dim(),
            Region::Rectangle { lo, .. } => lo.dim(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Ball { ball, .. } => ball.contains(x),
            Region::Rectangle { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .all(|(v, (a, b))| *a <= *v && *v <= *b),
            Region::Cap { ball, cutter, mode } => {
                ball.contains(x)
                    && match mode {
                        CapMode::Inside => cutter.contains(x),
                        CapMode::Outside => !cutter.contains(x),
                    }
            }
        }
    }

    /// Axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Region::Rectangle { lo, hi } => (lo.clone(), hi.clone()),
            Region::Ball { ball, .. } | Region::Cap { ball, .. } => {
                let lo = ball
                    .center
                    .iter()
                    .map(|c| c - ball.radius)
                    .collect::<Vec<_>>();
                let hi = ball
                    .center
                    .iter()
                    .map(|c| c + ball.radius)
                    .collect::<Vec<_>>();
                (Point::new(lo), Point::new(hi))
            }
        }
    }

    /// Exact volume where it has a closed form (balls and rectangles).
    pub fn volume(&self) -> Option<f64> {
        match self {
            Region::Ball { ball, .. } => Some(ball.volume()),
            Region::Rectangle { lo, hi } => {
                Some(lo.iter().zip(hi.iter()).map(|(a, b)| b - a).product())
            }
            Region::Cap { .. } => None,
        }
    }

    /// Charts with their initial parameter boxes.
    pub(crate) fn pieces(&self) -> Result<Vec<Piece>> {
        let d = self.dim();
        match self {
            Region::Rectangle { lo, hi } => Ok(vec![Piece {
                chart: Chart::Identity,
                lo: SmallVec::from_slice(lo),
                hi: SmallVec::from_slice(hi),
            }]),
            Region::Ball { ball, pole } => {
                if !(2..=3).contains(&d) {
                    return Err(Error::UnsupportedDimension { dim: d });
                }
                let chart = Chart::Polar {
                    center: ball.center.clone(),
                    radius: ball.radius,
                    frame: Frame::with_axis(pole),
                };
                Ok(polar_initial_boxes(d)
                    .into_iter()
                    .map(|(lo, hi)| Piece {
                        chart: chart.clone(),
                        lo,
                        hi,
                    })
                    .collect())
            }
            Region::Cap { ball, cutter, mode } => {
                if !(2..=3).contains(&d) {
                    return Err(Error::UnsupportedDimension { dim: d });
                }
                cap_pieces(ball, cutter, *mode)
            }
        }
    }
}

/// Orthonormal frame whose first column is a given axis (Householder image of e_1).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Frame {
    dim: usize,
    cols: Vec<Coords>,
}

impl Frame {
    pub(crate) fn with_axis(axis: &[f64]) -> Self {
        let d = axis.len();
        let len = norm(axis);
        let a: Coords = axis.iter().map(|v| v / len).collect();
        let mut v: Coords = a.iter().map(|t| -t).collect();
        v[0] += 1.0;
        let vv = dot(&v, &v);
        let cols = (0..d)
            .map(|j| {
                (0..d)
                    .map(|i| {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        if vv < 1e-28 {
                            delta
                        } else {
                            delta - 2.0 * v[i] * v[j] / vv
                        }
                    })
                    .collect::<Coords>()
            })
            .collect();
        Frame { dim: d, cols }
    }

    /// `Σ coeffs[k] · col_k`
    fn combine(&self, coeffs: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (k, c) in coeffs.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(&self.cols[k]) {
                *o += c * v;
            }
        }
    }
}

/// Unit direction in frame coordinates from polar angles: d = 2 uses one
/// signed angle, d = 3 uses (polar, azimuth).
fn direction(dim: usize, angles: &[f64], out: &mut [f64; 3]) {
    if dim == 2 {
        let (s, c) = angles[0].sin_cos();
        out[0] = c;
        out[1] = s;
    } else {
        let (st, ct) = angles[0].sin_cos();
        let (sp, cp) = angles[1].sin_cos();
        out[0] = ct;
        out[1] = st * cp;
        out[2] = st * sp;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Chart {
    Identity,
    /// u = (r, θ) or (r, θ, φ) with r ∈ [0,1] relative to the radius.
    Polar {
        center: Point,
        radius: f64,
        frame: Frame,
    },
    /// u = (t, α) or (t, α, φ); the ray from `origin` in direction α meets the
    /// cap in [lo(α), hi(α)] and s = lo + t (hi - lo).
    Ray {
        origin: Point,
        frame: Frame,
        offset: f64,
        ball_radius: f64,
        cutter_radius: f64,
        mode: CapMode,
    },
}

impl Chart {
    /// Map a parameter point to `x`; returns the volume factor (zero outside).
    pub(crate) fn map(&self, u: &[f64], x: &mut [f64]) -> f64 {
        match self {
            Chart::Identity => {
                x.copy_from_slice(u);
                1.0
            }
            Chart::Polar {
                center,
                radius,
                frame,
            } => {
                let d = center.dim();
                let mut dir = [0.0; 3];
                direction(d, &u[1..], &mut dir);
                frame.combine(&dir[..d], x);
                let r = radius * u[0];
                for i in 0..d {
                    x[i] = center[i] + r * x[i];
                }
                let jac = radius.powi(d as i32) * u[0].powi(d as i32 - 1);
                if d == 3 {
                    jac * u[1].sin()
                } else {
                    jac
                }
            }
            Chart::Ray {
                origin,
                frame,
                offset,
                ball_radius,
                cutter_radius,
                mode,
            } => {
                let d = origin.dim();
                let alpha = u[1];
                let (lo, hi) = ray_interval(alpha, *offset, *ball_radius, *cutter_radius, *mode);
                if hi <= lo {
                    x.copy_from_slice(origin);
                    return 0.0;
                }
                let s = lo + u[0] * (hi - lo);
                let mut dir = [0.0; 3];
                direction(d, &u[1..], &mut dir);
                frame.combine(&dir[..d], x);
                for i in 0..d {
                    x[i] = origin[i] + s * x[i];
                }
                let jac = (hi - lo) * s.powi(d as i32 - 1);
                if d == 3 {
                    jac * alpha.sin()
                } else {
                    jac
                }
            }
        }
    }
}

/// Intersection of the ray `s ≥ 0` at angle α from the axis (pointing at the
/// ball center, distance `offset`) with the cap.
fn ray_interval(alpha: f64, offset: f64, big_r: f64, rho: f64, mode: CapMode) -> (f64, f64) {
    let (sa, ca) = alpha.sin_cos();
    let disc = big_r * big_r - offset * offset * sa * sa;
    if disc < 0.0 {
        return (0.0, 0.0);
    }
    let root = disc.sqrt();
    let s1 = offset * ca - root;
    let s2 = offset * ca + root;
    match mode {
        CapMode::Inside => (s1.max(0.0), s2.min(rho)),
        CapMode::Outside => (s1.max(0.0).max(rho), s2),
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Piece {
    pub chart: Chart,
    pub lo: Coords,
    pub hi: Coords,
}

fn split_even(a: f64, b: f64, max_width: f64) -> Vec<(f64, f64)> {
    let k = ((b - a) / max_width).ceil().max(1.0) as usize;
    (0..k)
        .map(|i| {
            (
                a + (b - a) * i as f64 / k as f64,
                a + (b - a) * (i + 1) as f64 / k as f64,
            )
        })
        .collect()
}

fn polar_initial_boxes(d: usize) -> Vec<(Coords, Coords)> {
    let mut out = Vec::new();
    if d == 2 {
        for (t0, t1) in split_even(-PI, PI, FRAC_PI_4) {
            out.push((
                SmallVec::from_slice(&[0.0, t0]),
                SmallVec::from_slice(&[1.0, t1]),
            ));
        }
    } else {
        for (t0, t1) in split_even(0.0, PI, FRAC_PI_4) {
            for (p0, p1) in split_even(-PI, PI, FRAC_PI_2) {
                out.push((
                    SmallVec::from_slice(&[0.0, t0, p0]),
                    SmallVec::from_slice(&[1.0, t1, p1]),
                ));
            }
        }
    }
    out
}

fn cap_pieces(ball: &Ball, cutter: &Ball, mode: CapMode) -> Result<Vec<Piece>> {
    let d = ball.dim();
    let delta: Coords = ball
        .center
        .iter()
        .zip(cutter.center.iter())
        .map(|(m, c)| m - c)
        .collect();
    let offset = norm(&delta);
    let (big_r, rho) = (ball.radius, cutter.radius);
    let axis: Coords = if offset > 0.0 {
        delta.clone()
    } else {
        let mut e = SmallVec::from_elem(0.0, d);
        e[0] = 1.0;
        e
    };
    let on_sphere = (offset - big_r).abs() <= 1e-14 * big_r;
    let alpha_max = if on_sphere {
        FRAC_PI_2
    } else if offset < big_r {
        PI
    } else {
        (big_r / offset).asin()
    };
    let mut breaks = vec![0.0, alpha_max];
    if offset > 0.0 {
        let c = (offset * offset + rho * rho - big_r * big_r) / (2.0 * rho * offset);
        if c.abs() < 1.0 {
            let a = c.acos();
            if a > 0.0 && a < alpha_max {
                breaks.push(a);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let chart = Chart::Ray {
        origin: cutter.center.clone(),
        frame: Frame::with_axis(&axis),
        offset,
        ball_radius: big_r,
        cutter_radius: rho,
        mode,
    };
    let mut segments = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 0.0 {
            continue;
        }
        let (lo, hi) = ray_interval(0.5 * (a + b), offset, big_r, rho, mode);
        if hi > lo {
            segments.extend(split_even(a, b, FRAC_PI_4));
        }
    }
    let mut out = Vec::new();
    for (a, b) in segments {
        if d == 2 {
            for (s0, s1) in [(-b, -a), (a, b)] {
                out.push(Piece {
                    chart: chart.clone(),
                    lo: SmallVec::from_slice(&[0.0, s0]),
                    hi: SmallVec::from_slice(&[1.0, s1]),
                });
            }
        } else {
            for (p0, p1) in split_even(-PI, PI, FRAC_PI_2) {
                out.push(Piece {
                    chart: chart.clone(),
                    lo: SmallVec::from_slice(&[0.0, a, p0]),
                    hi: SmallVec::from_slice(&[1.0, b, p1]),
                });
            }
        }
    }
    Ok(out)
}
