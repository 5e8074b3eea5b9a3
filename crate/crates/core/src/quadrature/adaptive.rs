//! Globally adaptive tensor Gauss–Legendre cubature over charted boxes.
//!
//! Each cell is evaluated with a tensor rule, then once more after a trial
//! bisection along every parameter axis. The axis whose bisection changes the
//! estimate the most becomes the cell's split axis and the bisected value is
//! kept; the error estimate is twice the summed changes. Cells are refined
//! worst-first in deterministic batches, and totals are accumulated with
//! compensated summation in cell order, so results do not depend on how
//! many threads evaluated the cells.

use smallvec::SmallVec;

use super::gauss::gauss_legendre;
use super::region::{Chart, Coords, Piece, Region};
use super::sum::CompensatedSum;
use super::IntegralEstimate;
use crate::error::{invalid, Result};

/// Knobs for [`integrate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    /// Gauss–Legendre points per axis per cell; 0 picks by dimension.
    pub order: usize,
    /// Refinement stops, unconverged, once this many cells exist.
    pub max_cells: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            order: 0,
            max_cells: 40_000,
        }
    }
}

impl IntegrationOptions {
    fn order_for(&self, dim: usize) -> usize {
        if self.order > 0 {
            return self.order;
        }
        match dim {
            0..=2 => 8,
            3 => 6,
            _ => 4,
        }
    }
}

// Multiple of ε·∫|f| below which a cell's error cannot be reduced further.
const ROUNDOFF_FACTOR: f64 = 64.0;
const MIN_RELATIVE_WIDTH: f64 = 1e-12;

struct TensorRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Sums {
    value: f64,
    abs: f64,
}

#[derive(Debug, Clone)]
struct Cell {
    piece: usize,
    lo: Coords,
    hi: Coords,
    depth: u32,
    value: f64,
    error: f64,
    resolved: bool,
    split_axis: usize,
    halves: [Sums; 2],
}

struct Integrator<'a, F> {
    f: &'a F,
    pieces: Vec<Piece>,
    rule: TensorRule,
    dim: usize,
}

impl<'a, F> Integrator<'a, F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn box_sums(&self, chart: &Chart, lo: &[f64], hi: &[f64]) -> Sums {
        let d = self.dim;
        let m = self.rule.nodes.len();
        let half: Coords = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
        let mid: Coords = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let scale: f64 = half.iter().product();
        let mut idx: SmallVec<[usize; 4]> = SmallVec::from_elem(0, d);
        let mut u: Coords = SmallVec::from_elem(0.0, d);
        let mut x: Coords = SmallVec::from_elem(0.0, d);
        let mut value = CompensatedSum::new();
        let mut abs = CompensatedSum::new();
        loop {
            let mut w = scale;
            for k in 0..d {
                u[k] = mid[k] + half[k] * self.rule.nodes[idx[k]];
                w *= self.rule.weights[idx[k]];
            }
            let jac = chart.map(&u, &mut x);
            if jac != 0.0 {
                let fx = (self.f)(&x) * jac * w;
                value.add(fx);
                abs.add(fx.abs());
            }
            let mut k = 0;
            loop {
                if k == d {
                    return Sums {
                        value: value.value(),
                        abs: abs.value(),
                    };
                }
                idx[k] += 1;
                if idx[k] < m {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    fn analyze(
        &self,
        piece: usize,
        lo: Coords,
        hi: Coords,
        depth: u32,
        known: Option<Sums>,
    ) -> Cell {
        let chart = &self.pieces[piece].chart;
        let whole = known.unwrap_or_else(|| self.box_sums(chart, &lo, &hi));
        let base = &self.pieces[piece];
        let mut best = 0;
        let mut best_diff = -1.0;
        let mut total_diff = 0.0;
        let mut best_halves = [whole, whole];
        let mut fine_abs = whole.abs;
        let mut can_split = false;
        for k in 0..self.dim {
            let width = hi[k] - lo[k];
            if width <= MIN_RELATIVE_WIDTH * (base.hi[k] - base.lo[k]) {
                continue;
            }
            can_split = true;
            let m = 0.5 * (lo[k] + hi[k]);
            let mut left_hi = hi.clone();
            left_hi[k] = m;
            let mut right_lo = lo.clone();
            right_lo[k] = m;
            let left = self.box_sums(chart, &lo, &left_hi);
            let right = self.box_sums(chart, &right_lo, &hi);
            let diff = (left.value + right.value - whole.value).abs();
            total_diff += diff;
            if diff > best_diff {
                best_diff = diff;
                best = k;
                best_halves = [left, right];
                fine_abs = left.abs + right.abs;
            }
        }
        let value = best_halves[0].value + best_halves[1].value;
        let floor = ROUNDOFF_FACTOR * f64::EPSILON * fine_abs.max(whole.abs);
        let estimate = 2.0 * total_diff;
        Cell {
            piece,
            lo,
            hi,
            depth,
            value: if can_split { value } else { whole.value },
            error: estimate.max(floor),
            resolved: !can_split || estimate <= floor,
            split_axis: best,
            halves: best_halves,
        }
    }

    fn split(&self, cell: &Cell) -> [Cell; 2] {
        let k = cell.split_axis;
        let m = 0.5 * (cell.lo[k] + cell.hi[k]);
        let mut left_hi = cell.hi.clone();
        left_hi[k] = m;
        let mut right_lo = cell.lo.clone();
        right_lo[k] = m;
        [
            self.analyze(
                cell.piece,
                cell.lo.clone(),
                left_hi,
                cell.depth + 1,
                Some(cell.halves[0]),
            ),
            self.analyze(
                cell.piece,
                right_lo,
                cell.hi.clone(),
                cell.depth + 1,
                Some(cell.halves[1]),
            ),
        ]
    }

    fn evals_per_analysis(&self) -> usize {
        let per_box = self.rule.nodes.len().pow(self.dim as u32);
        per_box * (2 * self.dim)
    }
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Adaptive integration to absolute tolerance `tol` with default options.
pub fn integrate<F>(integrand: F, region: &Region, tol: f64) -> Result<IntegralEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    integrate_with(integrand, region, tol, IntegrationOptions::default())
}

/// Adaptive integration with explicit options.
///
/// On budget exhaustion, or when every remaining cell is limited by
/// round-off, returns the best estimate with `converged == false`.
pub fn integrate_with<F>(
    integrand: F,
    region: &Region,
    tol: f64,
    opts: IntegrationOptions,
) -> Result<IntegralEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(tol > 0.0) {
        return Err(invalid(
            "tol",
            format!("tolerance must be positive, got {tol}"),
        ));
    }
    let dim = region.dim();
    let (nodes, weights) = gauss_legendre(opts.order_for(dim));
    let integrator = Integrator {
        f: &integrand,
        pieces: region.pieces()?,
        rule: TensorRule { nodes, weights },
        dim,
    };
    let seeds: Vec<usize> = (0..integrator.pieces.len()).collect();
    let mut cells = par_map(&seeds, |&p| {
        let piece = &integrator.pieces[p];
        integrator.analyze(p, piece.lo.clone(), piece.hi.clone(), 0, None)
    });
    let per_cell = integrator.evals_per_analysis();
    let mut evaluations = cells.len() * (per_cell + integrator.rule.nodes.len().pow(dim as u32));

    loop {
        let value: CompensatedSum = cells.iter().map(|c| c.value).collect();
        let error: CompensatedSum = cells.iter().map(|c| c.error).collect();
        let (value, error) = (value.value(), error.value());
        let depth = cells.iter().map(|c| c.depth).max().unwrap_or(0);
        let done = |converged| IntegralEstimate {
            value,
            abs_error_estimate: error,
            node_count: evaluations,
            refinement_depth: depth,
            converged,
        };
        if error <= tol {
            return Ok(done(true));
        }
        if cells.len() >= opts.max_cells {
            return Ok(done(false));
        }
        let mut order: Vec<usize> = (0..cells.len()).filter(|&i| !cells[i].resolved).collect();
        if order.is_empty() {
            return Ok(done(false));
        }
        order.sort_by(|&a, &b| cells[b].error.total_cmp(&cells[a].error).then(a.cmp(&b)));
        let budget = (opts.max_cells - cells.len()).clamp(1, 256);
        let target = 0.5 * (error - tol);
        let mut picked = Vec::new();
        let mut acc = 0.0;
        for &i in &order {
            if picked.len() >= budget || (acc >= target && !picked.is_empty()) {
                break;
            }
            acc += cells[i].error;
            picked.push(i);
        }
        let children = par_map(&picked, |&i| integrator.split(&cells[i]));
        evaluations += picked.len() * 2 * per_cell;
        for (&i, [a, b]) in picked.iter().zip(children) {
            cells[i] = a;
            cells.push(b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Point;
    use crate::quadrature::region::{Ball, CapMode};
    use std::f64::consts::PI;

    #[test]
    fn unit_square_constant() {
        let r = Region::rectangle(Point::from([0.0, 0.0]), Point::from([0.5, 0.5])).unwrap();
        let est = integrate(|_| 1.0, &r, 1e-12).unwrap();
        assert!(est.converged);
        assert!((est.value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn disk_area_and_second_moment() {
        let r = Region::unit_ball(2);
        let est = integrate(|_| 1.0, &r, 1e-13).unwrap();
        assert!((est.value - PI).abs() < 1e-12);
        let m2 = integrate(|x| x[0] * x[0] + x[1] * x[1], &r, 1e-13).unwrap();
        assert!((m2.value - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn peaked_integrand_refines_toward_peak() {
        // ∫_B 1/|x - a|^4 over the unit disk with a just outside e_1 equals
        // π / (|a|² - 1)² by the mean-value property of the Poisson kernel.
        let a = 1.0 + 1.0 / 64.0;
        let r = Region::unit_ball(2);
        let est = integrate(
            |x| {
                let q = (x[0] - a).powi(2) + x[1] * x[1];
                1.0 / (q * q)
            },
            &r,
            1e-6,
        )
        .unwrap();
        let exact = PI / (a * a - 1.0).powi(2);
        assert!(est.converged);
        assert!(
            (est.value - exact).abs() <= est.abs_error_estimate.max(1e-6),
            "{est:?} vs {exact}"
        );
        assert!(est.refinement_depth > 3);
    }

    #[test]
    fn cap_volume_matches_lens_formula() {
        // Area of the lens between the unit disk and a disk of radius ρ
        // centered at e_1.
        let rho: f64 = 0.5;
        let lens = |rho: f64| {
            let (d, r1, r2): (f64, f64, f64) = (1.0, 1.0, rho);
            r1 * r1 * ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).acos()
                + r2 * r2 * ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).acos()
                - 0.5 * ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).sqrt()
        };
        let cutter = Ball::new(Point::from([1.0, 0.0]), rho).unwrap();
        let inside = Region::cap(Ball::unit(2), cutter.clone(), CapMode::Inside).unwrap();
        let outside = Region::cap(Ball::unit(2), cutter, CapMode::Outside).unwrap();
        let vi = integrate(|_| 1.0, &inside, 1e-12).unwrap();
        let vo = integrate(|_| 1.0, &outside, 1e-12).unwrap();
        assert!(
            (vi.value - lens(rho)).abs() < 1e-10,
            "{} vs {}",
            vi.value,
            lens(rho)
        );
        assert!((vi.value + vo.value - PI).abs() < 1e-10);
    }

    #[test]
    fn cap_with_outside_center_3d() {
        // Cutter centered at 1.5 e_1 with radius 1: spherical lens between two
        // unit-ish balls; compare to the symmetric lens volume formula.
        let (d, r1, r2) = (1.5f64, 1.0f64, 1.0f64);
        let exact = PI
            * (r1 + r2 - d).powi(2)
            * (d * d + 2.0 * d * r2 - 3.0 * r2 * r2 + 2.0 * d * r1 + 6.0 * r1 * r2 - 3.0 * r1 * r1)
            / (12.0 * d);
        let cutter = Ball::new(Point::from([1.5, 0.0, 0.0]), 1.0).unwrap();
        let region = Region::cap(Ball::unit(3), cutter, CapMode::Inside).unwrap();
        let v = integrate(|_| 1.0, &region, 1e-11).unwrap();
        assert!((v.value - exact).abs() < 1e-9, "{} vs {}", v.value, exact);
    }

    #[test]
    fn unattainable_tolerance_is_flagged() {
        let r = Region::unit_ball(2);
        let est = integrate(|x| (3.0 * x[0]).exp(), &r, 1e-30).unwrap();
        assert!(!est.converged);
        assert!(est.abs_error_estimate > 0.0);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        assert!(integrate(|_| 1.0, &Region::unit_ball(2), 0.0).is_err());
    }
}
