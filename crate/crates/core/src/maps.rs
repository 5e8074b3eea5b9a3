//! Closed-form map families with analytic derivatives.
//!
//! The central family is the Möbius map
//!
//! ```text
//! f_n(x) = (2/n) (x - a_n) / |x - a_n|²,    a_n = (1 + 1/n, 0, …, 0)
//! ```
//!
//! on the closed unit ball. Its Jacobian is `λ(x) (I - 2ûûᵀ)` with
//! `λ = (2/n) / |x - a_n|²` and `û = (x - a_n)/|x - a_n|`, so it is conformal
//! with `det ∇f_n = -λ^d`. Every other variant is an affine post-composition
//! `diag(D) f + b` of a base map, which keeps Jacobians and determinants in
//! closed form.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm, Jacobian, Point};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Orientation applied by a scaling; `Reverse` negates the first output axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Preserve,
    Reverse,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Preserve => 1.0,
            Orientation::Reverse => -1.0,
        }
    }
}

/// The map before any post-composition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Base {
    /// `(2/n)(x - a_n)/|x - a_n|²` on the unit ball.
    Mobius,
    /// `n^{-1/2} (1-y)^n (sin nx, cos nx)` on `[0,a]²`.
    Tartar {
        a: f64,
    },
    Identity,
    Zero,
}

/// A post-composition step, outermost last.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PostOp {
    /// Translate and dilate the image ball of the Möbius map onto the unit ball.
    Normalize,
    /// Multiply by `factor`, after an optional reflection of output axis 1;
    /// `c` is the signed volume the factor was chosen for.
    Scale {
        c: f64,
        factor: f64,
        orientation: Orientation,
    },
    /// Negate output coordinate `axis` (1-based).
    Reflect { axis: usize },
}

/// Descriptive view of a family: its outermost construction step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Raw,
    Normalized,
    Scaled { c: f64, orientation: Orientation },
    Reflected { axis: usize },
    Tartar { a: f64 },
    Identity,
    Zero,
}

/// Where a family is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Closed unit ball centered at the origin.
    UnitBall,
    /// Closed square `[0, a]²`.
    Square { a: f64 },
}

/// A smooth map indexed by dimension and sequence index.
///
/// Immutable once built; safe to share between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFamily {
    dim: usize,
    index: u32,
    base: Base,
    post: Vec<PostOp>,
    diag: SmallVec<[f64; 4]>,
    shift: SmallVec<[f64; 4]>,
}

/// The pole `a_n = (1 + 1/n, 0, …, 0)` of the Möbius family.
pub fn pole_vector(dim: usize, n: u32) -> Point {
    let mut a = Point::zeros(dim);
    a[0] = 1.0 + 1.0 / n as f64;
    a
}

/// `x_1 - (1 + 1/n)`, evaluated as `(x_1 - 1) - 1/n`: exact subtraction near
/// e_1 where the naive form cancels.
#[inline]
fn pole_offset(x1: f64, n: f64) -> f64 {
    (x1 - 1.0) - 1.0 / n
}

/// Radius `1 - 1/(2n+1)` of the image ball `f_n(B(0,1))`.
pub fn image_radius(n: u32) -> f64 {
    1.0 - 1.0 / (2.0 * n as f64 + 1.0)
}

/// Center `-(1 + 1/(2n+1)) e_1` of the image ball, as its first coordinate.
pub fn image_center(n: u32) -> f64 {
    -(1.0 + 1.0 / (2.0 * n as f64 + 1.0))
}

/// The Möbius family translated and dilated onto the unit ball.
pub fn normalize(dim: usize, n: u32) -> Result<MapFamily> {
    MapFamily::raw(dim, n)?.then(PostOp::Normalize)
}

/// Compose with the reflection negating output coordinate `axis` (1-based).
pub fn reflect(family: &MapFamily, axis: usize) -> Result<MapFamily> {
    family.then(PostOp::Reflect { axis })
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(invalid("dim", format!("need d >= 2, got {dim}")));
    }
    Ok(())
}

fn check_index(n: u32) -> Result<()> {
    if n == 0 {
        return Err(invalid("n", "sequence index starts at 1"));
    }
    Ok(())
}

impl MapFamily {
    fn with_base(dim: usize, index: u32, base: Base) -> Self {
        MapFamily {
            dim,
            index,
            base,
            post: Vec::new(),
            diag: SmallVec::from_elem(1.0, dim),
            shift: SmallVec::from_elem(0.0, dim),
        }
    }

    /// The Möbius map `f_n` in dimension `dim`.
    pub fn raw(dim: usize, n: u32) -> Result<Self> {
        check_dim(dim)?;
        check_index(n)?;
        Ok(Self::with_base(dim, n, Base::Mobius))
    }

    /// Tartar's oscillating example on `[0,a]²`.
    pub fn tartar(a: f64, n: u32) -> Result<Self> {
        check_index(n)?;
        if !(a > 0.0 && a < 1.0) {
            return Err(invalid("a", format!("need 0 < a < 1, got {a}")));
        }
        Ok(Self::with_base(2, n, Base::Tartar { a }))
    }

    /// Identity fixture on the unit ball.
    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::with_base(dim, 1, Base::Identity))
    }

    /// Zero fixture on the unit ball.
    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::with_base(dim, 1, Base::Zero))
    }

    /// Append a post-composition step.
    pub fn then(&self, op: PostOp) -> Result<Self> {
        let d = self.dim;
        let (op_diag, op_shift): (SmallVec<[f64; 4]>, SmallVec<[f64; 4]>) = match op {
            PostOp::Normalize => {
                if self.base != Base::Mobius || !self.post.is_empty() {
                    return Err(invalid(
                        "variant",
                        "normalization applies to the raw Möbius family only",
                    ));
                }
                let r = image_radius(self.index);
                let mut shift = SmallVec::from_elem(0.0, d);
                shift[0] = -image_center(self.index) / r;
                (SmallVec::from_elem(1.0 / r, d), shift)
            }
            PostOp::Scale {
                factor,
                orientation,
                c,
            } => {
                if !(factor > 0.0 && factor.is_finite()) {
                    return Err(invalid(
                        "factor",
                        format!("need a positive finite scale, got {factor}"),
                    ));
                }
                if !(c > 0.0) {
                    return Err(invalid("c", format!("need c > 0, got {c}")));
                }
                let mut diag = SmallVec::from_elem(factor, d);
                diag[0] *= orientation.sign();
                (diag, SmallVec::from_elem(0.0, d))
            }
            PostOp::Reflect { axis } => {
                if axis < 1 || axis > d {
                    return Err(invalid(
                        "axis",
                        format!("need 1 <= axis <= {d}, got {axis}"),
                    ));
                }
                let mut diag = SmallVec::from_elem(1.0, d);
                diag[axis - 1] = -1.0;
                (diag, SmallVec::from_elem(0.0, d))
            }
        };
        let mut out = self.clone();
        for i in 0..d {
            out.diag[i] = op_diag[i] * self.diag[i];
            out.shift[i] = op_diag[i] * self.shift[i] + op_shift[i];
        }
        out.post.push(op);
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn post_ops(&self) -> &[PostOp] {
        &self.post
    }

    pub fn variant(&self) -> Variant {
        match self.post.last() {
            Some(PostOp::Normalize) => Variant::Normalized,
            Some(PostOp::Scale { c, orientation, .. }) => Variant::Scaled {
                c: *c,
                orientation: *orientation,
            },
            Some(PostOp::Reflect { axis }) => Variant::Reflected { axis: *axis },
            None => match self.base {
                Base::Mobius => Variant::Raw,
                Base::Tartar { a } => Variant::Tartar { a },
                Base::Identity => Variant::Identity,
                Base::Zero => Variant::Zero,
            },
        }
    }

    pub fn domain(&self) -> Domain {
        match self.base {
            Base::Tartar { a } => Domain::Square { a },
            _ => Domain::UnitBall,
        }
    }

    /// True when every Jacobian is a nonzero multiple of an orthogonal matrix.
    pub fn is_conformal(&self) -> bool {
        let s = self.diag[0].abs();
        matches!(self.base, Base::Mobius | Base::Identity) && self.diag.iter().all(|v| v.abs() == s)
    }

    /// Short human-readable descriptor, e.g. `reflect[2](raw(d=2,n=4))`.
    pub fn label(&self) -> String {
        let mut s = match self.base {
            Base::Mobius => format!("raw(d={},n={})", self.dim, self.index),
            Base::Tartar { a } => format!("tartar(a={a},n={})", self.index),
            Base::Identity => format!("identity(d={})", self.dim),
            Base::Zero => format!("zero(d={})", self.dim),
        };
        for op in &self.post {
            s = match op {
                PostOp::Normalize => format!("normalize({s})"),
                PostOp::Scale {
                    c,
                    factor,
                    orientation,
                } => {
                    let o = if *orientation == Orientation::Reverse {
                        ",reversed"
                    } else {
                        ""
                    };
                    format!("scale[c={c},s={factor}{o}]({s})")
                }
                PostOp::Reflect { axis } => format!("reflect[{axis}]({s})"),
            };
        }
        s
    }

    /// The Möbius pole, when the base has one.
    pub fn pole(&self) -> Option<Point> {
        (self.base == Base::Mobius).then(|| pole_vector(self.dim, self.index))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Point> {
        self.check_point(x)?;
        let mut out = Point::zeros(self.dim);
        self.eval_into(x, &mut out);
        Ok(out)
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<Jacobian> {
        self.check_point(x)?;
        Ok(self.jacobian_at(x))
    }

    pub fn det_jacobian(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.det_at(x))
    }

    /// Unchecked evaluation into `out`; `x` and `out` must have length `dim`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let n = self.index as f64;
        match self.base {
            Base::Mobius => {
                let mut q = 0.0;
                for i in 0..d {
                    let v = if i == 0 { pole_offset(x[0], n) } else { x[i] };
                    out[i] = v;
                    q += v * v;
                }
                let k = 2.0 / (n * q);
                for o in out.iter_mut() {
                    *o *= k;
                }
            }
            Base::Tartar { .. } => {
                let amp = (1.0 - x[1]).powi(self.index as i32) / n.sqrt();
                let (s, c) = (n * x[0]).sin_cos();
                out[0] = amp * s;
                out[1] = amp * c;
            }
            Base::Identity => out.copy_from_slice(x),
            Base::Zero => out.fill(0.0),
        }
        for ((o, a), b) in out.iter_mut().zip(&self.diag).zip(&self.shift) {
            *o = a * *o + b;
        }
    }

    /// Unchecked analytic Jacobian.
    pub fn jacobian_at(&self, x: &[f64]) -> Jacobian {
        let d = self.dim;
        let n = self.index as f64;
        let mut j = match self.base {
            Base::Mobius => {
                let mut v: SmallVec<[f64; 4]> = SmallVec::from_slice(x);
                v[0] = pole_offset(x[0], n);
                let q: f64 = v.iter().map(|t| t * t).sum();
                let lambda = 2.0 / (n * q);
                let mut j = Jacobian::zeros(d);
                for r in 0..d {
                    for c in 0..d {
                        let delta = if r == c { 1.0 } else { 0.0 };
                        j[(r, c)] = lambda * (delta - 2.0 * v[r] * v[c] / q);
                    }
                }
                j
            }
            Base::Tartar { .. } => {
                let m = self.index as i32;
                let sn = n.sqrt();
                let w = 1.0 - x[1];
                let wn = w.powi(m);
                let wn1 = w.powi(m - 1);
                let (s, c) = (n * x[0]).sin_cos();
                let mut j = Jacobian::zeros(2);
                j[(0, 0)] = sn * wn * c;
                j[(0, 1)] = -sn * wn1 * s;
                j[(1, 0)] = -sn * wn * s;
                j[(1, 1)] = -sn * wn1 * c;
                j
            }
            Base::Identity => Jacobian::identity(d),
            Base::Zero => Jacobian::zeros(d),
        };
        for r in 0..d {
            for c in 0..d {
                j[(r, c)] *= self.diag[r];
            }
        }
        j
    }

    /// Unchecked closed-form determinant.
    pub fn det_at(&self, x: &[f64]) -> f64 {
        let n = self.index as f64;
        let base = match self.base {
            Base::Mobius => {
                let v0 = pole_offset(x[0], n);
                let q: f64 = v0 * v0 + x[1..].iter().map(|t| t * t).sum::<f64>();
                // det(I - 2ûûᵀ) = -1
                -(2.0 / (n * q)).powi(self.dim as i32)
            }
            Base::Tartar { .. } => -n * (1.0 - x[1]).powi(2 * self.index as i32 - 1),
            Base::Identity => 1.0,
            Base::Zero => 0.0,
        };
        self.diag.iter().product::<f64>() * base
    }

    /// Conformal factor `λ(x)` of the Möbius base, before post-composition.
    pub fn conformal_factor(&self, x: &[f64]) -> Option<f64> {
        if self.base != Base::Mobius {
            return None;
        }
        let v0 = pole_offset(x[0], self.index as f64);
        let q: f64 = v0 * v0 + x[1..].iter().map(|t| t * t).sum::<f64>();
        Some(2.0 / (self.index as f64 * q))
    }

    /// Whether `x` lies in the closed domain shrunk by `margin`.
    pub fn contains_with_margin(&self, x: &[f64], margin: f64) -> bool {
        match self.domain() {
            Domain::UnitBall => norm(x) + margin <= 1.0,
            Domain::Square { a } => x.iter().all(|&t| t >= margin && t <= a - margin),
        }
    }

    /// Central-difference Jacobian; truncation error O(h²).
    pub fn finite_difference_jacobian(&self, x: &[f64], h: f64) -> Result<Jacobian> {
        self.check_point(x)?;
        if !(h > 0.0) {
            return Err(invalid("h", "step must be positive"));
        }
        if !self.contains_with_margin(x, h) {
            return Err(Error::OutsideDomain {
                point: x.to_vec(),
                reason: format!("need a margin of at least h = {h} inside the domain"),
            });
        }
        let d = self.dim;
        let mut j = Jacobian::zeros(d);
        let mut xp: SmallVec<[f64; 4]> = SmallVec::from_slice(x);
        let mut fp: SmallVec<[f64; 4]> = SmallVec::from_elem(0.0, d);
        let mut fm: SmallVec<[f64; 4]> = SmallVec::from_elem(0.0, d);
        for c in 0..d {
            xp[c] = x[c] + h;
            self.eval_into(&xp, &mut fp);
            xp[c] = x[c] - h;
            self.eval_into(&xp, &mut fm);
            xp[c] = x[c];
            for r in 0..d {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        Ok(j)
    }
}
