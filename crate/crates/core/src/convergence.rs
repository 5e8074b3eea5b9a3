//! Sweeps over the sequence index, weak-convergence diagnostics and limit
//! extrapolation.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::functionals::{
    abs_det_functional, concentration_profile, det_functional, grad_lp_norm,
    image_volume_closed_form, lp_norm, natural_region, scale_to_volume_with, sobolev_energy,
    FunctionalName, FunctionalResult,
};
use crate::linalg::{norm, Jacobian, Point};
use crate::maps::{normalize, reflect, MapFamily};
use crate::quadrature::{integrate, unit_ball_volume, Region};

/// A map family as a function of the sequence index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyTemplate {
    Raw {
        dim: usize,
    },
    Normalized {
        dim: usize,
    },
    Reflected {
        dim: usize,
        axis: usize,
    },
    /// Raw family scaled to signed volume `c` at each n.
    Scaled {
        dim: usize,
        c: f64,
    },
    Tartar {
        a: f64,
    },
    Identity {
        dim: usize,
    },
    Zero {
        dim: usize,
    },
}

impl FamilyTemplate {
    pub fn dim(&self) -> usize {
        match *self {
            FamilyTemplate::Raw { dim }
            | FamilyTemplate::Normalized { dim }
            | FamilyTemplate::Reflected { dim, .. }
            | FamilyTemplate::Scaled { dim, .. }
            | FamilyTemplate::Identity { dim }
            | FamilyTemplate::Zero { dim } => dim,
            FamilyTemplate::Tartar { .. } => 2,
        }
    }

    /// Build the n-th member; `tol` controls the cubature behind scaling.
    pub fn instantiate(&self, n: u32, tol: f64) -> Result<MapFamily> {
        match *self {
            FamilyTemplate::Raw { dim } => MapFamily::raw(dim, n),
            FamilyTemplate::Normalized { dim } => normalize(dim, n),
            FamilyTemplate::Reflected { dim, axis } => reflect(&MapFamily::raw(dim, n)?, axis),
            FamilyTemplate::Scaled { dim, c } => {
                scale_to_volume_with(&MapFamily::raw(dim, n)?, c, tol)
            }
            FamilyTemplate::Tartar { a } => MapFamily::tartar(a, n),
            FamilyTemplate::Identity { dim } => MapFamily::identity(dim),
            FamilyTemplate::Zero { dim } => MapFamily::zero(dim),
        }
    }

    pub fn region(&self) -> Region {
        match *self {
            FamilyTemplate::Tartar { a } => Region::Rectangle {
                lo: Point::zeros(2),
                hi: Point::from([a, a]),
            },
            _ => Region::unit_ball(self.dim()),
        }
    }

    fn is_mobius(&self) -> bool {
        matches!(
            self,
            FamilyTemplate::Raw { .. }
                | FamilyTemplate::Normalized { .. }
                | FamilyTemplate::Reflected { .. }
                | FamilyTemplate::Scaled { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u32,
    pub results: Vec<FunctionalResult>,
}

impl SweepRow {
    pub fn get(&self, name: FunctionalName) -> Option<&FunctionalResult> {
        self.results.iter().find(|r| r.name == name)
    }
}

/// Basis `g(n)` of a two-parameter extrapolation `c0 + c1 g(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FitModel {
    /// `g = n^{-k}`; `k = 1` is the default `c0 + c1/n`.
    InversePower { k: f64 },
    /// `g = ln(n)^{1/d} / n`: `‖f_n‖_{L^d}` of the Möbius family, whose
    /// d-th power behaves like `(2/n)^d (A ln n + B)`.
    LogRootOverN { d: usize },
    /// `g = ln(n) / n^d`: `∫|f_n|^d` itself, as in the energy gap.
    LogOverPower { d: usize },
    /// `g = ratio^n`: the planar example, whose determinant integral is
    /// `-a/2 + (a/2)(1-a)^{2n}`.
    Geometric { ratio: f64 },
}

impl FitModel {
    pub const INVERSE_N: FitModel = FitModel::InversePower { k: 1.0 };

    pub fn basis(&self, n: u32) -> f64 {
        let n = n as f64;
        match *self {
            FitModel::InversePower { k } => n.powf(-k),
            FitModel::LogRootOverN { d } => n.ln().powf(1.0 / d as f64) / n,
            FitModel::LogOverPower { d } => n.ln() / n.powi(d as i32),
            FitModel::Geometric { ratio } => ratio.powf(n),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            FitModel::InversePower { k: 1.0 } => "c0 + c1/n".to_string(),
            FitModel::InversePower { k } => format!("c0 + c1*n^(-{k})"),
            FitModel::LogRootOverN { d } => format!("c0 + c1*ln(n)^(1/{d})/n"),
            FitModel::LogOverPower { d } => format!("c0 + c1*ln(n)/n^{d}"),
            FitModel::Geometric { ratio } => format!("c0 + c1*{ratio}^n"),
        }
    }
}

/// Extrapolation basis for one functional along one template.
///
/// Most quantities approach their limits at rate 1/n (the image radius is
/// `1 - 1/(2n+1)`). Integrals of `|f_n|^p` do not: near the pole
/// `∫|x - a_n|^{-p}` is bounded for p < d, grows like `ln n` for p = d and
/// like `n^{p-d}` for p > d. The planar example converges geometrically.
pub fn fit_model(template: &FamilyTemplate, name: FunctionalName) -> FitModel {
    let d = template.dim();
    let zero_limit = matches!(
        template,
        FamilyTemplate::Raw { .. }
            | FamilyTemplate::Reflected { .. }
            | FamilyTemplate::Scaled { .. }
    );
    if let (FamilyTemplate::Tartar { a }, FunctionalName::Det) = (template, name) {
        return FitModel::Geometric {
            ratio: (1.0 - a) * (1.0 - a),
        };
    }
    match name {
        FunctionalName::Lp(p) if zero_limit => {
            let df = d as f64;
            if p < df {
                FitModel::INVERSE_N
            } else if p == df {
                FitModel::LogRootOverN { d }
            } else {
                FitModel::InversePower { k: df / p }
            }
        }
        FunctionalName::EnergyGap => FitModel::LogOverPower { d },
        FunctionalName::SobolevEnergy if matches!(template, FamilyTemplate::Scaled { .. }) => {
            FitModel::LogOverPower { d }
        }
        _ => FitModel::INVERSE_N,
    }
}

/// Least-squares fit of `c0 + c1 g(n)` to the tail of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitFit {
    pub name: FunctionalName,
    pub model: FitModel,
    /// `c0`, the extrapolated limit.
    pub limit: f64,
    pub slope: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub rows_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub template: FamilyTemplate,
    pub rows: Vec<SweepRow>,
    pub limits: Vec<LimitFit>,
}

impl SequenceReport {
    fn assemble(template: FamilyTemplate, rows: Vec<SweepRow>) -> Self {
        let mut names: Vec<FunctionalName> = Vec::new();
        for r in rows.iter().flat_map(|row| &row.results) {
            if !names.contains(&r.name) {
                names.push(r.name);
            }
        }
        let limits = names
            .into_iter()
            .filter_map(|name| {
                let pts: Vec<(u32, f64)> = rows
                    .iter()
                    .filter_map(|row| row.get(name))
                    .filter(|r| r.converged)
                    .map(|r| (r.n, r.value))
                    .collect();
                fit_tail(name, fit_model(&template, name), &pts)
            })
            .collect();
        SequenceReport {
            template,
            rows,
            limits,
        }
    }

    pub fn limit(&self, name: FunctionalName) -> Option<&LimitFit> {
        self.limits.iter().find(|l| l.name == name)
    }

    /// Values of one functional in n order.
    pub fn series(&self, name: FunctionalName) -> Vec<(u32, f64)> {
        self.rows
            .iter()
            .filter_map(|row| row.get(name).map(|r| (row.n, r.value)))
            .collect()
    }

    pub fn all_converged(&self) -> bool {
        self.rows
            .iter()
            .flat_map(|r| &r.results)
            .all(|r| r.converged)
    }
}

/// Fit `c0 + c1 g(n)` to the last half of `points` (at least two).
pub fn fit_tail(name: FunctionalName, model: FitModel, points: &[(u32, f64)]) -> Option<LimitFit> {
    let tail = &points[points.len() / 2..];
    if tail.len() < 2 {
        return None;
    }
    let m = tail.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(n, y) in tail {
        let x = model.basis(n);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let den = m * sxx - sx * sx;
    if den.abs() < f64::MIN_POSITIVE {
        return None;
    }
    let slope = (m * sxy - sx * sy) / den;
    let limit = (sy - slope * sx) / m;
    let ss: f64 = tail
        .iter()
        .map(|&(n, y)| {
            let r = y - (limit + slope * model.basis(n));
            r * r
        })
        .sum();
    Some(LimitFit {
        name,
        model,
        limit,
        slope,
        residual: (ss / m).sqrt(),
        rows_used: tail.len(),
    })
}

fn check_n_list(n_list: &[u32], min_len: usize) -> Result<()> {
    if n_list.len() < min_len {
        return Err(invalid(
            "n_list",
            format!("need at least {min_len} indices, got {}", n_list.len()),
        ));
    }
    if n_list[0] == 0 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(
            "n_list",
            "indices must be positive and strictly ascending",
        ));
    }
    Ok(())
}

/// Evaluate one named functional on `family`.
pub fn evaluate(
    template: &FamilyTemplate,
    family: &MapFamily,
    name: FunctionalName,
    tol: f64,
) -> Result<FunctionalResult> {
    let region = template.region();
    let d = family.dim();
    match name {
        FunctionalName::Det => det_functional(family, &region, tol),
        FunctionalName::AbsDet => abs_det_functional(family, &region, tol),
        FunctionalName::GradLp(p) => grad_lp_norm(family, &region, p, tol),
        FunctionalName::Lp(p) => lp_norm(family, &region, p, tol),
        FunctionalName::SobolevEnergy => sobolev_energy(family, &region, tol),
        FunctionalName::ImageVolume => {
            if !matches!(
                template,
                FamilyTemplate::Raw { .. } | FamilyTemplate::Reflected { .. }
            ) {
                return Err(invalid(
                    "functional",
                    "image_volume has a closed form for the raw family only",
                ));
            }
            Ok(FunctionalResult {
                name,
                value: image_volume_closed_form(d, family.index())?,
                error: 0.0,
                n: family.index(),
                d,
                nodes: 0,
                converged: true,
            })
        }
        FunctionalName::Concentration(rho) => {
            let prof = concentration_profile(family, &Point::unit(d, 0), &[rho], tol)?;
            Ok(FunctionalResult {
                name,
                value: prof.fractions[0],
                error: prof.errors[0],
                n: family.index(),
                d,
                nodes: prof.total.nodes,
                converged: prof.total.converged,
            })
        }
        FunctionalName::WeakPairing | FunctionalName::LocalDet | FunctionalName::EnergyGap => {
            Err(invalid(
                "functional",
                format!("`{name}` has its own sweep operation"),
            ))
        }
    }
}

/// One row per n with every requested functional, then a tail fit per functional.
pub fn sweep(
    template: &FamilyTemplate,
    n_list: &[u32],
    functionals: &[FunctionalName],
    tol: f64,
) -> Result<SequenceReport> {
    check_n_list(n_list, 3)?;
    if functionals.is_empty() {
        return Err(invalid("functionals", "select at least one functional"));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let family = template.instantiate(n, tol)?;
        let results = functionals
            .iter()
            .map(|&name| evaluate(template, &family, name, tol))
            .collect::<Result<Vec<_>>>()?;
        rows.push(SweepRow { n, results });
    }
    Ok(SequenceReport::assemble(*template, rows))
}

/// `|f_n(x)|` for n = 1..=n_max at one sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseDecay {
    pub point: Point,
    pub values: Vec<f64>,
    /// `|f_{n+1}(x)| <= |f_n(x)|` for every n.
    pub monotone: bool,
    /// `2/|x - e_1|`; `values[n-1] <= bound / n`.
    pub bound: f64,
    pub within_bound: bool,
}

/// Pointwise decay table for families converging to zero away from e_1.
pub fn pointwise_limit_check(
    template: &FamilyTemplate,
    points: &[Point],
    n_max: u32,
) -> Result<Vec<PointwiseDecay>> {
    if !matches!(
        template,
        FamilyTemplate::Raw { .. } | FamilyTemplate::Reflected { .. } | FamilyTemplate::Zero { .. }
    ) {
        return Err(invalid(
            "template",
            "pointwise decay applies to families converging to zero",
        ));
    }
    if n_max == 0 {
        return Err(invalid("n_max", "need n_max >= 1"));
    }
    let d = template.dim();
    let e1 = Point::unit(d, 0);
    points
        .iter()
        .map(|x| {
            if x.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: x.dim(),
                });
            }
            let dist: Vec<f64> = x.iter().zip(e1.iter()).map(|(a, b)| a - b).collect();
            let dist = norm(&dist);
            if dist == 0.0 {
                return Err(invalid(
                    "points",
                    "e_1 is the concentration point and is excluded",
                ));
            }
            if x.norm() > 1.0 + 1e-12 {
                return Err(Error::OutsideDomain {
                    point: x.to_vec(),
                    reason: "sample points must lie in the closed unit ball".into(),
                });
            }
            let values = (1..=n_max)
                .map(|n| Ok(template.instantiate(n, 1e-10)?.eval(x)?.norm()))
                .collect::<Result<Vec<f64>>>()?;
            let bound = 2.0 / dist;
            let monotone = values.windows(2).all(|w| w[1] <= w[0]);
            let within_bound = values
                .iter()
                .enumerate()
                .all(|(i, v)| *v <= bound / (i + 1) as f64 * (1.0 + 1e-14));
            Ok(PointwiseDecay {
                point: x.clone(),
                values,
                monotone,
                bound,
                within_bound,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub row: usize,
    pub col: usize,
    pub exponents: SmallVec<[u32; 4]>,
    pub coeff: f64,
}

/// Fixed test objects paired against gradients.
#[derive(Debug, Clone, PartialEq)]
pub enum TestField {
    Constant(Jacobian),
    Polynomial {
        dim: usize,
        degree: u32,
        terms: Vec<PolyTerm>,
    },
    /// `amplitude · (1 - |x/radius|²)²` inside `B(0, radius)`, times the identity.
    Bump {
        dim: usize,
        radius: f64,
        amplitude: f64,
    },
}

fn uniform_pm1(rng: &mut ChaCha8Rng) -> f64 {
    2.0 * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64) - 1.0
}

fn monomials(dim: usize, degree: u32) -> Vec<SmallVec<[u32; 4]>> {
    let mut out: Vec<SmallVec<[u32; 4]>> = vec![SmallVec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|m| {
                let used: u32 = m.iter().sum();
                (0..=degree - used).map(move |e| {
                    let mut m2 = m.clone();
                    m2.push(e);
                    m2
                })
            })
            .collect();
    }
    out
}

impl TestField {
    pub fn identity(dim: usize) -> Self {
        TestField::Constant(Jacobian::identity(dim))
    }

    /// Matrix field whose entries are polynomials of total degree ≤ `degree`
    /// with coefficients drawn uniformly from [-1, 1].
    pub fn seeded_polynomial(dim: usize, degree: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let monos = monomials(dim, degree);
        let mut terms = Vec::new();
        for row in 0..dim {
            for col in 0..dim {
                for m in &monos {
                    terms.push(PolyTerm {
                        row,
                        col,
                        exponents: m.clone(),
                        coeff: uniform_pm1(&mut rng),
                    });
                }
            }
        }
        TestField::Polynomial { dim, degree, terms }
    }

    pub fn bump(dim: usize, radius: f64, amplitude: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(invalid(
                "radius",
                "bump support must lie strictly inside the unit ball",
            ));
        }
        Ok(TestField::Bump {
            dim,
            radius,
            amplitude,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            TestField::Constant(m) => m.dim(),
            TestField::Polynomial { dim, .. } | TestField::Bump { dim, .. } => *dim,
        }
    }

    /// Scalar profile of a bump.
    pub fn bump_value(&self, x: &[f64]) -> f64 {
        match self {
            TestField::Bump {
                radius, amplitude, ..
            } => {
                let t = x.iter().map(|v| v * v).sum::<f64>() / (radius * radius);
                if t >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - t) * (1.0 - t)
                }
            }
            _ => 0.0,
        }
    }

    pub fn matrix_at(&self, x: &[f64]) -> Jacobian {
        match self {
            TestField::Constant(m) => m.clone(),
            TestField::Polynomial { dim, terms, .. } => {
                let mut m = Jacobian::zeros(*dim);
                for t in terms {
                    let mono: f64 = t
                        .exponents
                        .iter()
                        .zip(x)
                        .map(|(e, v)| v.powi(*e as i32))
                        .product();
                    m[(t.row, t.col)] += t.coeff * mono;
                }
                m
            }
            TestField::Bump { dim, .. } => {
                let mut m = Jacobian::identity(*dim);
                let b = self.bump_value(x);
                for i in 0..*dim {
                    m[(i, i)] = b;
                }
                m
            }
        }
    }

    /// Where the field is supported, as an integration region.
    fn support(&self) -> Region {
        match self {
            TestField::Bump { dim, radius, .. } => {
                Region::ball(Point::zeros(*dim), *radius).expect("validated radius")
            }
            other => Region::unit_ball(other.dim()),
        }
    }

    /// `‖Φ‖_{L^q(B(0,1))}` with the Frobenius norm pointwise.
    pub fn lq_norm(&self, q: f64, tol: f64) -> Result<f64> {
        let est = integrate(
            |x| self.matrix_at(x).frobenius().powf(q),
            &self.support(),
            tol,
        )?;
        Ok(est.value.max(0.0).powf(1.0 / q))
    }
}

/// `∫_{B(0,1)} ⟨∇f_n, Φ⟩` per n, alongside `‖∇f_n‖_{L^d}` for the Hölder bound.
pub fn weak_pairing(
    template: &FamilyTemplate,
    field: &TestField,
    n_list: &[u32],
    tol: f64,
) -> Result<SequenceReport> {
    check_n_list(n_list, 3)?;
    let d = template.dim();
    if field.dim() != d
        || template.region().dim() != d
        || matches!(template, FamilyTemplate::Tartar { .. })
    {
        return Err(invalid(
            "field",
            "field and family must share the unit ball in the same dimension",
        ));
    }
    let support = field.support();
    let mut rows = Vec::new();
    for &n in n_list {
        let family = template.instantiate(n, tol)?;
        let est = integrate(
            |x| family.jacobian_at(x).inner(&field.matrix_at(x)),
            &support,
            tol,
        )?;
        let pairing = FunctionalResult {
            name: FunctionalName::WeakPairing,
            value: est.value,
            error: est.abs_error_estimate,
            n,
            d,
            nodes: est.node_count,
            converged: est.converged,
        };
        let grad = grad_lp_norm(&family, &natural_region(&family), d as f64, tol)?;
        rows.push(SweepRow {
            n,
            results: vec![pairing, grad],
        });
    }
    Ok(SequenceReport::assemble(*template, rows))
}

/// Local and global determinant integrals with the analytic local envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDetReport {
    pub sequence: SequenceReport,
    /// `Vol(B(0,ρ)) · ((2/n)/(1-ρ)²)^d · sup|bump|` per row.
    pub envelopes: Vec<f64>,
}

/// Analytic bound on `|∫ bump · det ∇f_n|` for a bump supported in `B(0,ρ)`:
/// there `|x - a_n| ≥ 1 + 1/n - ρ > 1 - ρ`, so `|det ∇f_n| ≤ ((2/n)/(1-ρ)²)^d`.
pub fn local_envelope(d: usize, n: u32, radius: f64, sup_bump: f64) -> f64 {
    let lambda_max = (2.0 / n as f64) / ((1.0 - radius) * (1.0 - radius));
    unit_ball_volume(d) * radius.powi(d as i32) * lambda_max.powi(d as i32) * sup_bump.abs()
}

/// `∫ bump · det ∇f_n` (local) and `∫_{B(0,1)} det ∇f_n` (global) per n.
pub fn local_det_pairing(
    template: &FamilyTemplate,
    bump: &TestField,
    n_list: &[u32],
    tol: f64,
) -> Result<LocalDetReport> {
    check_n_list(n_list, 3)?;
    let (radius, amplitude) = match bump {
        TestField::Bump {
            radius,
            amplitude,
            dim,
        } if *dim == template.dim() => (*radius, *amplitude),
        _ => {
            return Err(invalid(
                "bump",
                "need a bump field of the family's dimension",
            ))
        }
    };
    if !matches!(
        template,
        FamilyTemplate::Raw { .. } | FamilyTemplate::Reflected { .. }
    ) {
        return Err(invalid(
            "template",
            "the local envelope is derived for the raw family and its reflections",
        ));
    }
    let d = template.dim();
    let support = bump.support();
    let mut rows = Vec::new();
    let mut envelopes = Vec::new();
    for &n in n_list {
        let family = template.instantiate(n, tol)?;
        let est = integrate(|x| bump.bump_value(x) * family.det_at(x), &support, tol)?;
        let local = FunctionalResult {
            name: FunctionalName::LocalDet,
            value: est.value,
            error: est.abs_error_estimate,
            n,
            d,
            nodes: est.node_count,
            converged: est.converged,
        };
        let global = det_functional(&family, &template.region(), tol)?;
        rows.push(SweepRow {
            n,
            results: vec![local, global],
        });
        envelopes.push(local_envelope(d, n, radius, amplitude));
    }
    Ok(LocalDetReport {
        sequence: SequenceReport::assemble(*template, rows),
        envelopes,
    })
}

/// `‖s f_n‖_{W^{1,d}}^d - d^{d/2} c` for the family scaled to volume `c`.
///
/// Rows carry the gap, the Sobolev energy and `‖s f_n‖_{L^d}`.
pub fn energy_gap(
    template: &FamilyTemplate,
    c: f64,
    n_list: &[u32],
    tol: f64,
) -> Result<SequenceReport> {
    check_n_list(n_list, 3)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", format!("need c > 0, got {c}")));
    }
    if !template.is_mobius() || matches!(template, FamilyTemplate::Scaled { .. }) {
        return Err(invalid(
            "template",
            "energy gap scales a raw, normalized or reflected family",
        ));
    }
    let d = template.dim();
    let floor = (d as f64).powf(0.5 * d as f64) * c;
    let mut rows = Vec::new();
    for &n in n_list {
        let base = template.instantiate(n, tol)?;
        let family = scale_to_volume_with(&base, c, tol)?;
        let region = template.region();
        let energy = sobolev_energy(&family, &region, tol)?;
        let values = lp_norm(&family, &region, d as f64, tol)?;
        let gap = FunctionalResult {
            name: FunctionalName::EnergyGap,
            value: energy.value - floor,
            ..energy
        };
        rows.push(SweepRow {
            n,
            results: vec![gap, energy, values],
        });
    }
    Ok(SequenceReport::assemble(
        FamilyTemplate::Scaled { dim: d, c },
        rows,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fit_recovers_exact_model() {
        let pts: Vec<(u32, f64)> = [4, 8, 16, 32, 64]
            .iter()
            .map(|&n| (n, 3.0 - 2.0 / n as f64))
            .collect();
        let fit = fit_tail(FunctionalName::Det, FitModel::INVERSE_N, &pts).unwrap();
        assert!((fit.limit - 3.0).abs() < 1e-13);
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-14);
        assert_eq!(fit.rows_used, 3);
        assert!(fit_tail(FunctionalName::Det, FitModel::INVERSE_N, &pts[..2]).is_none());
        let model = FitModel::LogRootOverN { d: 2 };
        let pts: Vec<(u32, f64)> = [4, 8, 16, 32]
            .iter()
            .map(|&n| (n, 0.5 + 3.0 * model.basis(n)))
            .collect();
        let fit = fit_tail(FunctionalName::Lp(2.0), model, &pts).unwrap();
        assert!((fit.limit - 0.5).abs() < 1e-13 && (fit.slope - 3.0).abs() < 1e-12);
    }

    #[test]
    fn models_follow_asymptotics() {
        let raw = FamilyTemplate::Raw { dim: 3 };
        assert_eq!(fit_model(&raw, FunctionalName::AbsDet), FitModel::INVERSE_N);
        assert_eq!(
            fit_model(&raw, FunctionalName::Lp(2.0)),
            FitModel::INVERSE_N
        );
        assert_eq!(
            fit_model(&raw, FunctionalName::Lp(3.0)),
            FitModel::LogRootOverN { d: 3 }
        );
        assert_eq!(
            fit_model(&raw, FunctionalName::Lp(6.0)),
            FitModel::InversePower { k: 0.5 }
        );
        assert_eq!(
            fit_model(
                &FamilyTemplate::Normalized { dim: 3 },
                FunctionalName::Lp(3.0)
            ),
            FitModel::INVERSE_N
        );
        assert_eq!(
            fit_model(&FamilyTemplate::Tartar { a: 0.5 }, FunctionalName::Det),
            FitModel::Geometric { ratio: 0.25 }
        );
        assert_eq!(FitModel::INVERSE_N.describe(), "c0 + c1/n");
        assert_eq!(
            FitModel::LogOverPower { d: 2 }.describe(),
            "c0 + c1*ln(n)/n^2"
        );
    }

    #[test]
    fn n_list_validation() {
        let t = FamilyTemplate::Raw { dim: 2 };
        assert!(sweep(&t, &[4, 8], &[FunctionalName::AbsDet], 1e-8).is_err());
        assert!(sweep(&t, &[4, 4, 8], &[FunctionalName::AbsDet], 1e-8).is_err());
        assert!(sweep(&t, &[4, 8, 16], &[], 1e-8).is_err());
        assert!(sweep(&t, &[4, 8, 16], &[FunctionalName::EnergyGap], 1e-8).is_err());
    }

    #[test]
    fn pointwise_decay_at_origin() {
        let t = FamilyTemplate::Raw { dim: 2 };
        let table = pointwise_limit_check(&t, &[Point::zeros(2)], 32).unwrap();
        let row = &table[0];
        assert!(row.monotone && row.within_bound);
        for (i, v) in row.values.iter().enumerate() {
            let n = (i + 1) as f64;
            assert!((v - 2.0 / (n + 1.0)).abs() < 1e-15);
        }
        assert_eq!(row.values[0], 1.0);
        assert!(pointwise_limit_check(&t, &[Point::unit(2, 0)], 4).is_err());
        let z = pointwise_limit_check(
            &FamilyTemplate::Zero { dim: 2 },
            &[Point::from([0.3, 0.2])],
            5,
        )
        .unwrap();
        assert!(z[0].values.iter().all(|v| *v == 0.0));
        assert!(pointwise_limit_check(
            &FamilyTemplate::Normalized { dim: 2 },
            &[Point::zeros(2)],
            3
        )
        .is_err());
    }

    #[test]
    fn boundary_value_has_norm_two() {
        for n in [1, 3, 50] {
            let v = MapFamily::raw(3, n)
                .unwrap()
                .eval(&[1.0, 0.0, 0.0])
                .unwrap();
            assert!((v.norm() - 2.0).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn monomial_enumeration() {
        assert_eq!(monomials(2, 2).len(), 6);
        assert_eq!(monomials(3, 1).len(), 4);
    }

    #[test]
    fn identity_pairing_is_d_times_volume() {
        let rep = weak_pairing(
            &FamilyTemplate::Identity { dim: 2 },
            &TestField::identity(2),
            &[1, 2, 3],
            1e-10,
        )
        .unwrap();
        for (_, v) in rep.series(FunctionalName::WeakPairing) {
            assert!((v - 2.0 * PI).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_bump_gives_zero_local_pairing() {
        let bump = TestField::bump(2, 0.5, 0.0).unwrap();
        let rep =
            local_det_pairing(&FamilyTemplate::Raw { dim: 2 }, &bump, &[2, 4, 8], 1e-10).unwrap();
        assert!(rep
            .sequence
            .series(FunctionalName::LocalDet)
            .iter()
            .all(|(_, v)| *v == 0.0));
        assert!(TestField::bump(2, 1.0, 1.0).is_err());
    }

    #[test]
    fn energy_gap_rejects_nonpositive_c() {
        assert!(energy_gap(&FamilyTemplate::Raw { dim: 2 }, 0.0, &[4, 8, 16], 1e-8).is_err());
    }

    #[test]
    fn template_serde_shape() {
        let t = FamilyTemplate::Scaled { dim: 3, c: 1.0 };
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"family":"scaled","dim":3,"c":1.0}"#);
        assert_eq!(serde_json::from_str::<FamilyTemplate>(&s).unwrap(), t);
    }
}
