//! Library results against oracles written out here: explicit Jacobian
//! formulas, fourth-order finite differences, cofactor determinants, gamma
//! moments of the ball and the planar example's closed form.

use std::f64::consts::PI;

use conformal_det::functionals::det_functional;
use conformal_det::functionals::scale_to_volume;
use conformal_det::maps::{normalize, reflect, MapFamily};
use conformal_det::quadrature::{ball_rule, graded_ball_rule, integrate, Region};
use conformal_det::{Jacobian, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed_0f0a;

fn ball_points(d: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    while pts.len() < count {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if x.iter().map(|t| t * t).sum::<f64>() < 1.0 {
            pts.push(x);
        }
    }
    pts
}

fn eval(f: &MapFamily, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.dim()];
    f.eval_into(x, &mut out);
    out
}

/// Five-point central stencil, truncation O(h⁴).
fn fd4(f: &MapFamily, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let d = f.dim();
    let mut j = vec![vec![0.0; d]; d];
    for c in 0..d {
        let at = |s: f64| {
            let mut y = x.to_vec();
            y[c] += s * h;
            eval(f, &y)
        };
        let (p2, p1, m1, m2) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
        for r in 0..d {
            j[r][c] = (-p2[r] + 8.0 * p1[r] - 8.0 * m1[r] + m2[r]) / (12.0 * h);
        }
    }
    j
}

fn rel_frobenius(j: &Jacobian, m: &[Vec<f64>]) -> f64 {
    let d = j.dim();
    let (mut num, mut den) = (0.0, 0.0);
    for r in 0..d {
        for c in 0..d {
            num += (j[(r, c)] - m[r][c]).powi(2);
            den += j[(r, c)].powi(2);
        }
    }
    (num / den).sqrt()
}

/// `(2/n)(I/q - 2 v vᵀ/q²)` with `v = x - a_n`, `q = |v|²`.
fn raw_jacobian(x: &[f64], n: u32) -> Vec<Vec<f64>> {
    let d = x.len();
    let nf = n as f64;
    let mut v = x.to_vec();
    v[0] -= 1.0 + 1.0 / nf;
    let q: f64 = v.iter().map(|t| t * t).sum();
    (0..d)
        .map(|r| {
            (0..d)
                .map(|c| {
                    (2.0 / nf) * (if r == c { 1.0 / q } else { 0.0 } - 2.0 * v[r] * v[c] / (q * q))
                })
                .collect()
        })
        .collect()
}

fn cofactor_det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => (0..m.len())
            .map(|c| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(k, _)| k != c)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][c] * cofactor_det(&minor)
            })
            .sum(),
    }
}

fn families(d: usize, n: u32) -> Vec<MapFamily> {
    let raw = MapFamily::raw(d, n).unwrap();
    let mut out = vec![
        raw.clone(),
        normalize(d, n).unwrap(),
        scale_to_volume(&raw, 1.0).unwrap(),
    ];
    for axis in 1..=d {
        out.push(reflect(&raw, axis).unwrap());
    }
    out.push(reflect(&normalize(d, n).unwrap(), 1).unwrap());
    out
}

#[test]
fn analytic_jacobians_match_fourth_order_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for d in [2, 3] {
        for n in [1, 4, 16, 64] {
            let pts = ball_points(d, 100, &mut rng);
            for f in families(d, n) {
                for x in &pts {
                    let j = f.jacobian(x).unwrap();
                    let err = rel_frobenius(&j, &fd4(&f, x, 1e-4));
                    assert!(err < 1e-6, "{} at {x:?}: {err:e}", f.label());
                }
            }
        }
    }
    for n in [1, 4, 16, 64] {
        let f = MapFamily::tartar(0.5, n).unwrap();
        for _ in 0..100 {
            let x = [rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5)];
            let j = f.jacobian(&x).unwrap();
            let err = rel_frobenius(&j, &fd4(&f, &x, 1e-5));
            assert!(err < 1e-6, "{} at {x:?}: {err:e}", f.label());
        }
    }
}

#[test]
fn raw_jacobian_matches_explicit_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for d in [2, 3, 4] {
        for n in [1, 4, 16, 64] {
            let f = MapFamily::raw(d, n).unwrap();
            for x in ball_points(d, 100, &mut rng) {
                let err = rel_frobenius(&f.jacobian(&x).unwrap(), &raw_jacobian(&x, n));
                assert!(err < 1e-13, "d={d} n={n}: {err:e}");
            }
        }
    }
}

#[test]
fn determinants_match_cofactor_expansion_and_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    for d in [2, 3] {
        for n in [1, 4, 16, 64] {
            let pts = ball_points(d, 100, &mut rng);
            for f in families(d, n) {
                for x in &pts {
                    let j = f.jacobian(x).unwrap();
                    let rows: Vec<Vec<f64>> = (0..d).map(|r| j.row(r).to_vec()).collect();
                    let exact = cofactor_det(&rows);
                    let got = f.det_jacobian(x).unwrap();
                    assert!(
                        (got - exact).abs() <= 1e-12 * exact.abs(),
                        "{}: {got} vs {exact}",
                        f.label()
                    );
                    assert!((j.det_lu() - exact).abs() <= 1e-12 * exact.abs());
                }
            }
            let raw = MapFamily::raw(d, n).unwrap();
            for x in &pts {
                let mut v = x.clone();
                v[0] -= 1.0 + 1.0 / n as f64;
                let lambda = (2.0 / n as f64) / v.iter().map(|t| t * t).sum::<f64>();
                let exact = -lambda.powi(d as i32);
                let got = raw.det_jacobian(x).unwrap();
                assert!((got - exact).abs() <= 1e-13 * exact.abs());
            }
        }
    }
}

fn gamma_half(k: u32) -> f64 {
    // Γ(k/2) for k ≥ 1.
    match k {
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half(k - 2),
    }
}

/// `∫_{B^d} x^α`, zero unless every exponent is even.
fn ball_moment(alpha: &[u32]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let d = alpha.len() as u32;
    let total: u32 = alpha.iter().sum();
    let num: f64 = 2.0 * alpha.iter().map(|&a| gamma_half(a + 1)).product::<f64>();
    num / (gamma_half(total + d) * (total + d) as f64)
}

fn multi_indices(d: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u32>| {
                let used: u32 = p.iter().sum();
                (0..=max_degree - used).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

fn monomial(x: &[f64], alpha: &[u32]) -> f64 {
    x.iter()
        .zip(alpha)
        .map(|(t, &a)| t.powi(a as i32))
        .product()
}

#[test]
fn ball_moments_match_gamma_closed_form() {
    assert!((ball_moment(&[0, 0]) - PI).abs() < 1e-15);
    assert!((ball_moment(&[0, 0, 0]) - 4.0 * PI / 3.0).abs() < 1e-15);
    for d in [2usize, 3] {
        let region = Region::unit_ball(d);
        for alpha in multi_indices(d, 6) {
            let exact = ball_moment(&alpha);
            let est = integrate(|x| monomial(x, &alpha), &region, 1e-13).unwrap();
            assert!(
                (est.value - exact).abs() < 1e-12,
                "d={d} {alpha:?}: {} vs {exact}",
                est.value
            );
        }
        for (m, k) in [(4, 6), (6, 9), (8, 12)] {
            let rule = ball_rule(d, m, k).unwrap();
            let degree = rule.meta.degree as u32;
            for alpha in multi_indices(d, degree) {
                let exact = ball_moment(&alpha);
                let got = rule.integrate(|x| monomial(x, &alpha));
                assert!(
                    (got - exact).abs() < 1e-13,
                    "d={d} rule({m},{k}) degree {degree} {alpha:?}: {got} vs {exact}"
                );
            }
        }
    }
}

#[test]
fn shifted_ball_volume_and_centroid() {
    for d in [2usize, 3] {
        let c = Point::new((0..d).map(|k| 0.3 - 0.2 * k as f64).collect::<Vec<_>>());
        let r = 0.7;
        let region = Region::ball(c.clone(), r).unwrap();
        let vol = ball_moment(&vec![0; d]) * r.powi(d as i32);
        let est = integrate(|_| 1.0, &region, 1e-13).unwrap();
        assert!((est.value - vol).abs() < 1e-13);
        for k in 0..d {
            let est = integrate(|x| x[k], &region, 1e-13).unwrap();
            assert!((est.value - c[k] * vol).abs() < 1e-13);
        }
    }
}

#[test]
fn grading_toward_the_boundary_point_beats_the_flat_rule() {
    let n = 32;
    let f = MapFamily::raw(2, n).unwrap();
    let r = 2.0 * n as f64 / (2.0 * n as f64 + 1.0);
    let exact = PI * r * r;
    let flat = ball_rule(2, 8, 16).unwrap();
    let graded = graded_ball_rule(&flat.meta, &[1.0, 0.0], 12).unwrap();
    let integrand = |x: &[f64]| f.det_at(x).abs();
    let flat_err = (flat.integrate(integrand) - exact).abs() / exact;
    let graded_err = (graded.integrate(integrand) - exact).abs() / exact;
    assert!(graded_err < 1e-6, "graded {graded_err:e}");
    assert!(
        graded_err < 1e-3 * flat_err,
        "graded {graded_err:e} vs flat {flat_err:e}"
    );
}

#[test]
fn error_estimates_bound_the_true_error() {
    let mut honest = 0;
    let mut within_tol = 0;
    let mut total = 0;
    for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let region = Region::rectangle(Point::from([0.0, 0.0]), Point::from([a, a])).unwrap();
        for n in [1, 2, 3, 5, 8, 13, 21, 34] {
            let f = MapFamily::tartar(a, n).unwrap();
            let exact = -0.5 * a * (1.0 - (1.0f64 - a).powi(2 * n as i32));
            for tol in [1e-6, 1e-8, 1e-10] {
                let est = det_functional(&f, &region, tol).unwrap();
                let err = (est.value - exact).abs();
                total += 1;
                honest += usize::from(err <= est.error);
                within_tol += usize::from(err <= tol);
                assert!(est.converged);
            }
        }
    }
    assert!(
        honest as f64 >= 0.95 * total as f64,
        "{honest}/{total} estimates bound the error"
    );
    assert!(
        within_tol as f64 >= 0.95 * total as f64,
        "{within_tol}/{total} within tolerance"
    );
}
