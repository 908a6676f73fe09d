//! Procedural light fields for tests and demos: a textured background
//! plane behind an occluding textured disc, each at its own disparity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::lightfield::{angular_offset, LightField};

#[derive(Debug, Clone, Copy)]
struct Wave {
    fx: f64,
    fy: f64,
    phase: f64,
    amp: f64,
}

#[derive(Debug, Clone)]
struct Texture {
    base: f64,
    waves: Vec<Wave>,
}

impl Texture {
    fn random(rng: &mut ChaCha8Rng, base: f64, scale: f64) -> Self {
        let waves = (0..4)
            .map(|_| Wave {
                fx: rng.random_range(-scale..scale),
                fy: rng.random_range(-scale..scale),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
                amp: rng.random_range(0.03..0.09),
            })
            .collect();
        Texture { base, waves }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let v: f64 = self.waves.iter().map(|w| w.amp * (w.fx * x + w.fy * y + w.phase).sin()).sum();
        (self.base + v).clamp(0.0, 1.0)
    }
}

/// Background at disparity -1, disc at +1; samples stay in `(0, 1)`.
pub fn occluded_disc(angular: (usize, usize), spatial: (usize, usize), channels: usize, seed: u64) -> Result<LightField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s_dim, t_dim) = angular;
    let (w, h) = spatial;
    let back: Vec<Texture> = (0..channels).map(|_| Texture::random(&mut rng, 0.35, 0.5)).collect();
    let front: Vec<Texture> = (0..channels).map(|_| Texture::random(&mut rng, 0.65, 0.9)).collect();
    let cx = w as f64 * rng.random_range(0.4..0.6);
    let cy = h as f64 * rng.random_range(0.4..0.6);
    let radius = w.min(h) as f64 * 0.3;
    let (d_back, d_front) = (-1.0, 1.0);
    let mut samples = Vec::with_capacity(channels * s_dim * t_dim * w * h);
    for c in 0..channels {
        for t in 0..t_dim {
            let at = angular_offset(t, t_dim) as f64;
            for s in 0..s_dim {
                let a_s = angular_offset(s, s_dim) as f64;
                for v in 0..h {
                    for u in 0..w {
                        let (fx, fy) = (u as f64 + d_front * a_s, v as f64 + d_front * at);
                        let value = if (fx - cx).powi(2) + (fy - cy).powi(2) <= radius * radius {
                            front[c].at(fx, fy)
                        } else {
                            back[c].at(u as f64 + d_back * a_s, v as f64 + d_back * at)
                        };
                        samples.push(value);
                    }
                }
            }
        }
    }
    LightField::new(angular, spatial, channels, samples)
}
