use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{Domain, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Noise level; the per-coordinate factor has standard deviation `0.01 σ`.
    pub sigma: f64,
    pub seed: u64,
}

/// Gaussian draw for `(seed, point, axis)`. Each point owns a ChaCha stream and
/// each axis starts 64 words into it, so draws do not depend on visit order.
fn gaussian(seed: u64, point: usize, axis: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(point as u64);
    rng.set_word_pos(axis as u128 * 64);
    rng.sample(StandardNormal)
}

/// `x ← x (1 + g)` with `g ~ N(0, 0.01 σ)` per coordinate. Real-camera clouds
/// are returned unchanged.
pub fn inject_noise(cloud: &PointCloud, cfg: &NoiseConfig) -> PointCloud {
    assert!(cfg.sigma >= 0.0, "noise level must be non-negative");
    if cfg.sigma == 0.0 || cloud.domain == Domain::Real {
        if cloud.domain == Domain::Real && cfg.sigma > 0.0 {
            log::debug!("skipping noise injection on a real-domain cloud");
        }
        return cloud.clone();
    }
    let std = 0.01 * cfg.sigma;
    let points = cloud
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut q = *p;
            for axis in 0..3 {
                q[axis] *= 1.0 + std * gaussian(cfg.seed, i, axis);
            }
            q
        })
        .collect();
    PointCloud {
        points,
        readings: cloud.readings.clone(),
        domain: cloud.domain,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn cloud(domain: Domain) -> PointCloud {
        PointCloud {
            points: (0..100)
                .map(|i| Point3::new(1.0, -2.0, 0.5 + i as f64))
                .collect(),
            readings: (0..100).map(|i| i as f64 / 100.0).collect(),
            domain,
        }
    }

    #[test]
    fn zero_sigma_is_identity() {
        let c = cloud(Domain::Sim);
        assert_eq!(
            inject_noise(
                &c,
                &NoiseConfig {
                    sigma: 0.0,
                    seed: 1
                }
            ),
            c
        );
    }

    #[test]
    fn real_domain_is_untouched() {
        let c = cloud(Domain::Real);
        assert_eq!(
            inject_noise(
                &c,
                &NoiseConfig {
                    sigma: 3.0,
                    seed: 1
                }
            ),
            c
        );
    }

    #[test]
    fn seeded_and_order_independent() {
        let c = cloud(Domain::Sim);
        let cfg = NoiseConfig {
            sigma: 3.0,
            seed: 7,
        };
        let a = inject_noise(&c, &cfg);
        assert_eq!(a, inject_noise(&c, &cfg));
        assert_ne!(a, inject_noise(&c, &NoiseConfig { seed: 8, ..cfg }));
        assert_eq!(a.readings, c.readings);
        let tail = c.select(&(50..100).collect::<Vec<_>>());
        let noisy_tail = inject_noise(&tail, &cfg);
        // Point indices shift, so draws differ; the per-point key is the index.
        assert_ne!(noisy_tail.points[0], a.points[50]);
        assert_eq!(gaussian(7, 50, 1), gaussian(7, 50, 1));
    }
}
