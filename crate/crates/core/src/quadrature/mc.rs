//! Seeded Monte Carlo fallback for dimensions without a deterministic rule.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::region::Region;
use super::IntegralEstimate;
use crate::error::{invalid, Result};

pub const MIN_SAMPLES: usize = 1_000;

pub(crate) fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Plain Monte Carlo with a standard-error estimate.
///
/// Balls are sampled by rejection from the bounding box and use the exact
/// ball volume; caps average `f · 1_region` over the bounding box.
pub fn mc_integrate<F>(
    integrand: F,
    region: &Region,
    samples: usize,
    seed: u64,
) -> Result<IntegralEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    if samples < MIN_SAMPLES {
        return Err(invalid(
            "samples",
            format!("need at least {MIN_SAMPLES} samples, got {samples}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = region.bounding_box();
    let d = region.dim();
    let mut x = vec![0.0; d];
    let draw = |x: &mut [f64], rng: &mut ChaCha8Rng| {
        for k in 0..d {
            x[k] = lo[k] + (hi[k] - lo[k]) * uniform(rng);
        }
    };
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    let mut push = |k: usize, v: f64| {
        let delta = v - mean;
        mean += delta / k as f64;
        m2 += delta * (v - mean);
    };
    let volume;
    match (region, region.volume()) {
        (Region::Ball { .. } | Region::Rectangle { .. }, Some(v)) => {
            volume = v;
            let mut accepted = 0;
            while accepted < samples {
                draw(&mut x, &mut rng);
                if region.contains(&x) {
                    accepted += 1;
                    push(accepted, integrand(&x));
                }
            }
        }
        _ => {
            volume = lo.iter().zip(hi.iter()).map(|(a, b)| b - a).product();
            for k in 1..=samples {
                draw(&mut x, &mut rng);
                let v = if region.contains(&x) {
                    integrand(&x)
                } else {
                    0.0
                };
                push(k, v);
            }
        }
    }
    let variance = m2 / (samples as f64 - 1.0);
    Ok(IntegralEstimate {
        value: volume * mean,
        abs_error_estimate: volume * (variance / samples as f64).sqrt(),
        node_count: samples,
        refinement_depth: 0,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Point;
    use std::f64::consts::PI;

    #[test]
    fn four_ball_volume() {
        let r = Region::ball(Point::zeros(4), 1.0).unwrap();
        // constant integrand has zero variance; use the bounding box form
        let cap_like = mc_integrate(|_| 1.0, &r, 100_000, 7).unwrap();
        assert!((cap_like.value - PI * PI / 2.0).abs() < 1e-12);
        let est = mc_integrate(|x| x[0] * x[0], &r, 200_000, 7).unwrap();
        // ∫ x₁² over B⁴ = ω₄ / 6
        let exact = PI * PI / 12.0;
        assert!(
            (est.value - exact).abs() < 3.0 * est.abs_error_estimate,
            "{est:?}"
        );
    }

    #[test]
    fn rejects_tiny_sample_counts() {
        assert!(mc_integrate(|_| 1.0, &Region::unit_ball(2), 999, 1).is_err());
    }
}
