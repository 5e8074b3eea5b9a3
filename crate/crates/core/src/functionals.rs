//! Integral functionals of a map family over a region.
//!
//! Conventions: `|∇f|` is the Frobenius norm, and the Sobolev energy is
//! `‖f‖_{W^{1,d}}^d = ∫|f|^d + ∫|∇f|^d`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm, Point};
use crate::maps::{image_radius, Domain, MapFamily, Orientation, PostOp};
use crate::quadrature::{integrate, unit_ball_volume, Ball, CapMode, IntegralEstimate, Region};

/// Tolerance used when a functional is needed internally (scaling).
pub const INTERNAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FunctionalName {
    Det,
    AbsDet,
    GradLp(f64),
    Lp(f64),
    SobolevEnergy,
    ImageVolume,
    Concentration(f64),
    WeakPairing,
    LocalDet,
    EnergyGap,
}

impl fmt::Display for FunctionalName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalName::Det => write!(f, "det"),
            FunctionalName::AbsDet => write!(f, "abs_det"),
            FunctionalName::GradLp(p) => write!(f, "grad_lp:{p}"),
            FunctionalName::Lp(p) => write!(f, "lp:{p}"),
            FunctionalName::SobolevEnergy => write!(f, "sobolev_energy"),
            FunctionalName::ImageVolume => write!(f, "image_volume"),
            FunctionalName::Concentration(r) => write!(f, "concentration:{r}"),
            FunctionalName::WeakPairing => write!(f, "weak_pairing"),
            FunctionalName::LocalDet => write!(f, "local_det"),
            FunctionalName::EnergyGap => write!(f, "energy_gap"),
        }
    }
}

impl FromStr for FunctionalName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| {
                invalid(
                    "functional",
                    format!("`{head}` needs a parameter, e.g. `{head}:2`"),
                )
            })?;
            a.parse::<f64>()
                .map_err(|_| invalid("functional", format!("bad parameter `{a}` for `{head}`")))
        };
        let no_arg = |v: FunctionalName| match arg {
            None => Ok(v),
            Some(_) => Err(invalid(
                "functional",
                format!("`{head}` takes no parameter"),
            )),
        };
        match head {
            "det" => no_arg(FunctionalName::Det),
            "abs_det" => no_arg(FunctionalName::AbsDet),
            "grad_lp" => Ok(FunctionalName::GradLp(num(arg)?)),
            "lp" => Ok(FunctionalName::Lp(num(arg)?)),
            "sobolev_energy" => no_arg(FunctionalName::SobolevEnergy),
            "image_volume" => no_arg(FunctionalName::ImageVolume),
            "concentration" => Ok(FunctionalName::Concentration(num(arg)?)),
            "weak_pairing" => no_arg(FunctionalName::WeakPairing),
            "local_det" => no_arg(FunctionalName::LocalDet),
            "energy_gap" => no_arg(FunctionalName::EnergyGap),
            other => Err(invalid(
                "functional",
                format!("unknown functional `{other}`"),
            )),
        }
    }
}

impl From<FunctionalName> for String {
    fn from(v: FunctionalName) -> String {
        v.to_string()
    }
}

impl TryFrom<String> for FunctionalName {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// One evaluated functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalResult {
    pub name: FunctionalName,
    pub value: f64,
    pub error: f64,
    pub n: u32,
    pub d: usize,
    pub nodes: usize,
    pub converged: bool,
}

impl FunctionalResult {
    fn from_estimate(name: FunctionalName, family: &MapFamily, est: IntegralEstimate) -> Self {
        FunctionalResult {
            name,
            value: est.value,
            error: est.abs_error_estimate,
            n: family.index(),
            d: family.dim(),
            nodes: est.node_count,
            converged: est.converged,
        }
    }

    /// `(∫ g)^{1/p}` with first-order error propagation.
    fn root(mut self, p: f64) -> Self {
        let integral = self.value.max(0.0);
        if integral > 0.0 {
            self.value = integral.powf(1.0 / p);
            self.error *= self.value / (p * integral);
        } else {
            self.value = 0.0;
            self.error = self.error.powf(1.0 / p);
        }
        self
    }
}

/// The family's own domain as an integration region.
pub fn natural_region(family: &MapFamily) -> Region {
    match family.domain() {
        Domain::UnitBall => Region::unit_ball(family.dim()),
        Domain::Square { a } => Region::Rectangle {
            lo: Point::zeros(2),
            hi: Point::from([a, a]),
        },
    }
}

fn check_region(family: &MapFamily, region: &Region) -> Result<()> {
    if region.dim() != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            got: region.dim(),
        });
    }
    let slack = 1e-12;
    let inside = match (family.domain(), region) {
        (Domain::UnitBall, Region::Ball { ball, .. } | Region::Cap { ball, .. }) => {
            ball.center.norm() + ball.radius <= 1.0 + slack
        }
        (Domain::UnitBall, Region::Rectangle { lo, hi }) => {
            let corner: Vec<f64> = lo
                .iter()
                .zip(hi.iter())
                .map(|(a, b)| a.abs().max(b.abs()))
                .collect();
            norm(&corner) <= 1.0 + slack
        }
        (Domain::Square { a }, region) => {
            let (lo, hi) = region.bounding_box();
            lo.iter().all(|v| *v >= -slack) && hi.iter().all(|v| *v <= a + slack)
        }
    };
    if inside {
        Ok(())
    } else {
        Err(invalid(
            "region",
            format!(
                "region is not contained in the domain of {}",
                family.label()
            ),
        ))
    }
}

fn frobenius_pow(q: f64, p: f64) -> f64 {
    if p == 2.0 {
        q
    } else if p == 4.0 {
        q * q
    } else {
        q.powf(0.5 * p)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid("p", format!("need p >= 1, got {p}")));
    }
    Ok(())
}

/// `∫ det ∇f`, signed.
pub fn det_functional(family: &MapFamily, region: &Region, tol: f64) -> Result<FunctionalResult> {
    check_region(family, region)?;
    let est = integrate(|x| family.det_at(x), region, tol)?;
    Ok(FunctionalResult::from_estimate(
        FunctionalName::Det,
        family,
        est,
    ))
}

/// `∫ |det ∇f|`.
pub fn abs_det_functional(
    family: &MapFamily,
    region: &Region,
    tol: f64,
) -> Result<FunctionalResult> {
    check_region(family, region)?;
    let est = integrate(|x| family.det_at(x).abs(), region, tol)?;
    Ok(FunctionalResult::from_estimate(
        FunctionalName::AbsDet,
        family,
        est,
    ))
}

/// `∫ |∇f|^p`, the p-th power of the gradient norm.
pub fn grad_power_integral(
    family: &MapFamily,
    region: &Region,
    p: f64,
    tol: f64,
) -> Result<FunctionalResult> {
    check_p(p)?;
    check_region(family, region)?;
    let est = integrate(
        |x| frobenius_pow(family.jacobian_at(x).frobenius_sq(), p),
        region,
        tol,
    )?;
    Ok(FunctionalResult::from_estimate(
        FunctionalName::GradLp(p),
        family,
        est,
    ))
}

/// `‖∇f‖_{L^p} = (∫ |∇f|^p)^{1/p}`.
pub fn grad_lp_norm(
    family: &MapFamily,
    region: &Region,
    p: f64,
    tol: f64,
) -> Result<FunctionalResult> {
    Ok(grad_power_integral(family, region, p, tol)?.root(p))
}

/// `∫ |f|^p`.
pub fn value_power_integral(
    family: &MapFamily,
    region: &Region,
    p: f64,
    tol: f64,
) -> Result<FunctionalResult> {
    check_p(p)?;
    check_region(family, region)?;
    let d = family.dim();
    let est = integrate(
        |x| {
            let mut y = [0.0; 8];
            if d <= 8 {
                family.eval_into(x, &mut y[..d]);
                frobenius_pow(y[..d].iter().map(|v| v * v).sum(), p)
            } else {
                let y = family.eval(x).expect("dimension checked");
                frobenius_pow(y.iter().map(|v| v * v).sum(), p)
            }
        },
        region,
        tol,
    )?;
    Ok(FunctionalResult::from_estimate(
        FunctionalName::Lp(p),
        family,
        est,
    ))
}

/// `‖f‖_{L^p}`.
pub fn lp_norm(family: &MapFamily, region: &Region, p: f64, tol: f64) -> Result<FunctionalResult> {
    Ok(value_power_integral(family, region, p, tol)?.root(p))
}

/// `∫ |f|^d + ∫ |∇f|^d`.
pub fn sobolev_energy(family: &MapFamily, region: &Region, tol: f64) -> Result<FunctionalResult> {
    check_region(family, region)?;
    let d = family.dim();
    let p = d as f64;
    let est = integrate(
        |x| {
            let mut y = [0.0; 8];
            let value_sq: f64 = if d <= 8 {
                family.eval_into(x, &mut y[..d]);
                y[..d].iter().map(|v| v * v).sum()
            } else {
                family
                    .eval(x)
                    .expect("dimension checked")
                    .iter()
                    .map(|v| v * v)
                    .sum()
            };
            frobenius_pow(value_sq, p) + frobenius_pow(family.jacobian_at(x).frobenius_sq(), p)
        },
        region,
        tol,
    )?;
    Ok(FunctionalResult::from_estimate(
        FunctionalName::SobolevEnergy,
        family,
        est,
    ))
}

/// Volume `ω_d (1 - 1/(2n+1))^d` of the image ball `f_n(B(0,1))`.
pub fn image_volume_closed_form(d: usize, n: u32) -> Result<f64> {
    if d < 2 {
        return Err(invalid("dim", format!("need d >= 2, got {d}")));
    }
    if n == 0 {
        return Err(invalid("n", "sequence index starts at 1"));
    }
    Ok(unit_ball_volume(d) * image_radius(n).powi(d as i32))
}

/// Gradient-energy fractions inside `B(0,1) ∩ B(center, ρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationProfile {
    pub total: FunctionalResult,
    pub radii: Vec<f64>,
    pub fractions: Vec<f64>,
    /// Error bound on each fraction from the two integrals' estimates.
    pub errors: Vec<f64>,
}

/// Fraction of `∫_{B(0,1)} |∇f|^d` contributed by `B(0,1) ∩ B(center, ρ)`
/// for each radius.
pub fn concentration_profile(
    family: &MapFamily,
    center: &Point,
    radii: &[f64],
    tol: f64,
) -> Result<ConcentrationProfile> {
    let d = family.dim();
    if family.domain() != Domain::UnitBall {
        return Err(invalid(
            "family",
            "concentration is measured on the unit ball",
        ));
    }
    if center.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: center.dim(),
        });
    }
    if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("radii", "need positive, strictly ascending radii"));
    }
    let p = d as f64;
    let integrand = |x: &[f64]| frobenius_pow(family.jacobian_at(x).frobenius_sq(), p);
    let pole: Vec<f64> = if center.norm() > 0.0 {
        center.to_vec()
    } else {
        Point::unit(d, 0).to_vec()
    };
    let ball_region = Region::ball_with_pole(Point::zeros(d), 1.0, &pole)?;
    let total_est = integrate(integrand, &ball_region, tol)?;
    let total = FunctionalResult::from_estimate(FunctionalName::GradLp(p), family, total_est);
    let mut fractions = Vec::with_capacity(radii.len());
    let mut errors = Vec::with_capacity(radii.len());
    for &rho in radii {
        if rho >= center.norm() + 1.0 {
            fractions.push(1.0);
            errors.push(0.0);
            continue;
        }
        let cap = Region::cap(
            Ball::unit(d),
            Ball::new(center.clone(), rho)?,
            CapMode::Inside,
        )?;
        let part = integrate(integrand, &cap, tol)?;
        if total.value <= 0.0 {
            return Err(invalid(
                "family",
                "gradient energy vanishes; fractions undefined",
            ));
        }
        let frac = part.value / total.value;
        fractions.push(frac.clamp(0.0, 1.0));
        errors.push((part.abs_error_estimate + frac.abs() * total.error) / total.value);
    }
    Ok(ConcentrationProfile {
        total,
        radii: radii.to_vec(),
        fractions,
        errors,
    })
}

/// Multiply `family` by the constant that makes `∫|det ∇(s f)| = c`,
/// reflecting one axis first when the signed integral is negative so that
/// `∫ det ∇(s f) = +c` as well.
pub fn scale_to_volume(family: &MapFamily, c: f64) -> Result<MapFamily> {
    scale_to_volume_with(family, c, INTERNAL_TOL)
}

pub fn scale_to_volume_with(family: &MapFamily, c: f64, tol: f64) -> Result<MapFamily> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", format!("need c > 0, got {c}")));
    }
    let region = natural_region(family);
    let abs = abs_det_functional(family, &region, tol)?;
    if !(abs.value > tol) {
        return Err(invalid(
            "family",
            "∫|det ∇f| vanishes; no scaling reaches a positive volume",
        ));
    }
    let signed = det_functional(family, &region, tol)?;
    let orientation = if signed.value < 0.0 {
        Orientation::Reverse
    } else {
        Orientation::Preserve
    };
    let factor = (c / abs.value).powf(1.0 / family.dim() as f64);
    family.then(PostOp::Scale {
        c,
        factor,
        orientation,
    })
}
