//! Static (non-adaptive) cubature rules on the unit ball.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::gauss::gauss_legendre;
use super::region::{Chart, Coords, Frame};
use super::sum::CompensatedSum;
use crate::error::{invalid, Error, Result};
use crate::linalg::{norm, Point};

/// How a rule was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleMeta {
    pub dim: usize,
    pub radial_order: usize,
    pub angular_order: usize,
    /// Total polynomial degree integrated exactly by the ungraded rule.
    pub degree: usize,
    pub grading: Option<Grading>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grading {
    pub target: Point,
    pub levels: usize,
    pub cells: usize,
}

/// Nodes and volume weights for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct CubatureRule {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub meta: RuleMeta,
}

impl CubatureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sum of weights; the measure of the region.
    pub fn volume(&self) -> f64 {
        self.weights
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    }

    /// Apply the rule, summing in node order.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .collect::<CompensatedSum>()
            .value()
    }
}

fn check_orders(dim: usize, radial_order: usize, angular_order: usize) -> Result<()> {
    if !(2..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension { dim });
    }
    if radial_order < 2 || angular_order < 2 {
        return Err(invalid(
            "order",
            "radial and angular orders must be at least 2",
        ));
    }
    Ok(())
}

/// Polar product rule on the unit ball.
///
/// Radius: Gauss–Legendre on [0,1] against r^{d-1}. Angles: the uniform
/// `angular_order`-point rule on the circle for d = 2, and for d = 3 the
/// product of Gauss–Legendre in cos θ with a uniform `2·angular_order`-point
/// rule in φ.
pub fn ball_rule(dim: usize, radial_order: usize, angular_order: usize) -> Result<CubatureRule> {
    check_orders(dim, radial_order, angular_order)?;
    let (rx, rw) = gauss_legendre(radial_order);
    let radial: Vec<(f64, f64)> = rx
        .iter()
        .zip(&rw)
        .map(|(x, w)| {
            let r = 0.5 * (x + 1.0);
            (r, 0.5 * w * r.powi(dim as i32 - 1))
        })
        .collect();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let degree = if dim == 2 {
        let k = angular_order;
        for j in 0..k {
            let (s, c) = (2.0 * PI * j as f64 / k as f64).sin_cos();
            for &(r, w) in &radial {
                nodes.push(Point::from([r * c, r * s]));
                weights.push(w * 2.0 * PI / k as f64);
            }
        }
        (2 * radial_order - 2).min(k - 1)
    } else {
        let (ux, uw) = gauss_legendre(angular_order);
        let k = 2 * angular_order;
        for (u, wu) in ux.iter().zip(&uw) {
            let st = (1.0 - u * u).sqrt();
            for j in 0..k {
                let (sp, cp) = (2.0 * PI * j as f64 / k as f64).sin_cos();
                for &(r, w) in &radial {
                    nodes.push(Point::from([r * u, r * st * cp, r * st * sp]));
                    weights.push(w * wu * 2.0 * PI / k as f64);
                }
            }
        }
        (2 * radial_order - 3).min(2 * angular_order - 1)
    };
    Ok(CubatureRule {
        nodes,
        weights,
        meta: RuleMeta {
            dim,
            radial_order,
            angular_order,
            degree,
            grading: None,
        },
    })
}

/// Polar rule on the unit ball with cells dyadically refined toward `target`.
///
/// Polar coordinates are taken about the origin with the axis through
/// `target`; starting from the standard angular partition, every cell
/// touching the target's parameter point is quartered `levels` times (radius
/// and polar angle only). Each cell carries a tensor Gauss–Legendre rule with
/// the base orders.
pub fn graded_ball_rule(base: &RuleMeta, target: &[f64], levels: usize) -> Result<CubatureRule> {
    let dim = base.dim;
    check_orders(dim, base.radial_order, base.angular_order)?;
    if target.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: target.len(),
        });
    }
    if levels < 1 {
        return Err(invalid("levels", "need at least one grading level"));
    }
    let t_norm = norm(target);
    if !(t_norm > 0.0) {
        return Err(invalid(
            "target",
            "grading target must be away from the center",
        ));
    }
    let t_r = t_norm.min(1.0);
    let chart = Chart::Polar {
        center: Point::zeros(dim),
        radius: 1.0,
        frame: Frame::with_axis(target),
    };

    let mut cells: Vec<(Coords, Coords)> = Vec::new();
    if dim == 2 {
        for i in 0..8 {
            let a = -PI + i as f64 * FRAC_PI_4;
            cells.push((
                SmallVec::from_slice(&[0.0, a]),
                SmallVec::from_slice(&[1.0, a + FRAC_PI_4]),
            ));
        }
    } else {
        for i in 0..4 {
            let a = i as f64 * FRAC_PI_4;
            for j in 0..4 {
                let p = -PI + j as f64 * FRAC_PI_2;
                cells.push((
                    SmallVec::from_slice(&[0.0, a, p]),
                    SmallVec::from_slice(&[1.0, a + FRAC_PI_4, p + FRAC_PI_2]),
                ));
            }
        }
    }
    let touches =
        |lo: &Coords, hi: &Coords| lo[0] <= t_r && t_r <= hi[0] && lo[1] <= 0.0 && 0.0 <= hi[1];
    for _ in 0..levels {
        let mut next = Vec::with_capacity(cells.len() + 8);
        for (lo, hi) in cells {
            if !touches(&lo, &hi) {
                next.push((lo, hi));
                continue;
            }
            let rm = 0.5 * (lo[0] + hi[0]);
            let tm = 0.5 * (lo[1] + hi[1]);
            for (r0, r1) in [(lo[0], rm), (rm, hi[0])] {
                for (t0, t1) in [(lo[1], tm), (tm, hi[1])] {
                    let mut a = lo.clone();
                    let mut b = hi.clone();
                    a[0] = r0;
                    b[0] = r1;
                    a[1] = t0;
                    b[1] = t1;
                    next.push((a, b));
                }
            }
        }
        cells = next;
    }

    let (rx, rw) = gauss_legendre(base.radial_order);
    let (ax, aw) = gauss_legendre(base.angular_order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut x: Coords = SmallVec::from_elem(0.0, dim);
    for (lo, hi) in &cells {
        let per_axis: [(&[f64], &[f64]); 3] = [(&rx, &rw), (&ax, &aw), (&ax, &aw)];
        let counts: SmallVec<[usize; 3]> = (0..dim).map(|k| per_axis[k].0.len()).collect();
        let mut idx: SmallVec<[usize; 3]> = SmallVec::from_elem(0, dim);
        'tensor: loop {
            let mut u: Coords = SmallVec::from_elem(0.0, dim);
            let mut w = 1.0;
            for k in 0..dim {
                let (xs, ws) = per_axis[k];
                let h = 0.5 * (hi[k] - lo[k]);
                u[k] = lo[k] + h * (xs[idx[k]] + 1.0);
                w *= h * ws[idx[k]];
            }
            let jac = chart.map(&u, &mut x);
            nodes.push(Point::from(x.as_slice()));
            weights.push(w * jac);
            let mut k = 0;
            loop {
                if k == dim {
                    break 'tensor;
                }
                idx[k] += 1;
                if idx[k] < counts[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
    let mut meta = base.clone();
    meta.grading = Some(Grading {
        target: Point::from(target),
        levels,
        cells: cells.len(),
    });
    Ok(CubatureRule {
        nodes,
        weights,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::region::unit_ball_volume;

    #[test]
    fn disk_constant_and_odd_moments() {
        let rule = ball_rule(2, 6, 12).unwrap();
        assert!((rule.volume() - PI).abs() < 1e-12);
        assert!(rule.integrate(|x| x[0]).abs() < 1e-12);
        assert!((rule.integrate(|x| x[0] * x[0] + x[1] * x[1]) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_rule_volume() {
        let rule = ball_rule(3, 5, 6).unwrap();
        assert!((rule.volume() - unit_ball_volume(3)).abs() < 1e-12);
        assert!(rule.nodes.iter().all(|x| x.norm() <= 1.0));
    }

    #[test]
    fn ball_rule_rejects_high_dimension() {
        assert_eq!(
            ball_rule(4, 4, 4).unwrap_err(),
            Error::UnsupportedDimension { dim: 4 }
        );
        assert!(ball_rule(2, 1, 4).is_err());
    }

    #[test]
    fn graded_weights_partition_the_ball() {
        for dim in [2, 3] {
            let base = ball_rule(dim, 6, 6).unwrap().meta;
            let mut target = vec![0.0; dim];
            target[0] = 1.0;
            let rule = graded_ball_rule(&base, &target, 10).unwrap();
            assert!((rule.volume() - unit_ball_volume(dim)).abs() < 1e-10 * unit_ball_volume(dim));
            assert!(rule.nodes.iter().all(|x| x.norm() <= 1.0 + 1e-15));
            assert_eq!(rule.meta.grading.as_ref().unwrap().levels, 10);
        }
    }

    #[test]
    fn graded_cell_counts() {
        let base = ball_rule(2, 4, 4).unwrap().meta;
        let rule = graded_ball_rule(&base, &[1.0, 0.0], 3).unwrap();
        // two cells touch θ = 0 at r = 1; each level replaces each touching
        // cell by four, two of which touch again.
        assert_eq!(rule.meta.grading.unwrap().cells, 8 + 3 * 2 * 3);
    }
}
