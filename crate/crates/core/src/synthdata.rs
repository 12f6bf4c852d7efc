//! Seeded generators for calibration and benchmark manifolds.
//!
//! All randomness comes from ChaCha8 streams (`rand_chacha`), seeded through
//! a SplitMix64 mix of the user seed and any task tags, so output does not
//! depend on platform, thread count or scheduling.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::distributions::FsaDistribution;
use crate::error::{Error, Result};
use crate::estimators::LocalEstimateSet;
use crate::geometry::{Boundary, PointCloud};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with task tags into an independent stream seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t.wrapping_add(0x5851_f42d))))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Uniform samples of `[0,1)^D`.
    Hypercube,
    /// Uniform samples of the unit sphere `S^D` in `R^(D+1)`.
    Hypersphere,
    /// Two-dimensional swiss roll in 3-space.
    SwissRoll,
    /// Uniform cube rotated into a higher-dimensional ambient space.
    LinearSubspace,
    /// Closed helix-like curve in 3-space.
    Helix1d,
    /// Cube mapped onto the graph of a smooth function.
    NonlinearEmbed,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Hypercube,
        Family::Hypersphere,
        Family::SwissRoll,
        Family::LinearSubspace,
        Family::Helix1d,
        Family::NonlinearEmbed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Hypercube => "hypercube",
            Family::Hypersphere => "hypersphere",
            Family::SwissRoll => "swiss_roll",
            Family::LinearSubspace => "linear_subspace",
            Family::Helix1d => "helix1d",
            Family::NonlinearEmbed => "nonlinear_embed",
        }
    }

    /// Ambient dimension used when none is given.
    pub fn default_ambient(self, intrinsic: usize) -> usize {
        match self {
            Family::Hypercube => intrinsic,
            Family::Hypersphere => intrinsic + 1,
            Family::SwissRoll | Family::Helix1d => 3,
            Family::LinearSubspace | Family::NonlinearEmbed => 2 * intrinsic,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown manifold family `{s}`")))
    }
}

/// Everything needed to reproduce one sampled manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub family: Family,
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    /// Family-specific shape parameters; empty means defaults.
    #[serde(default)]
    pub params: Vec<f64>,
}

fn default_boundary() -> Boundary {
    Boundary::Hard
}

impl ManifoldSpec {
    pub fn new(family: Family, intrinsic_dim: usize, n: usize, seed: u64) -> Self {
        Self {
            family,
            intrinsic_dim,
            ambient_dim: family.default_ambient(intrinsic_dim),
            n,
            seed,
            boundary: Boundary::Hard,
            params: Vec::new(),
        }
    }

    pub fn hypercube(dim: usize, n: usize, seed: u64, boundary: Boundary) -> Self {
        Self { boundary, ..Self::new(Family::Hypercube, dim, n, seed) }
    }

    fn param(&self, i: usize, default: f64) -> f64 {
        self.params.get(i).copied().unwrap_or(default)
    }

    fn validate(&self) -> Result<()> {
        if self.intrinsic_dim == 0 || self.n == 0 {
            return Err(Error::arg("intrinsic dimension and sample size must be positive"));
        }
        if self.intrinsic_dim > self.ambient_dim {
            return Err(Error::arg(format!(
                "intrinsic dimension {} exceeds ambient dimension {}",
                self.intrinsic_dim, self.ambient_dim
            )));
        }
        let min_ambient = match self.family {
            Family::Hypersphere => self.intrinsic_dim + 1,
            Family::SwissRoll | Family::Helix1d => 3,
            _ => self.intrinsic_dim,
        };
        if self.ambient_dim < min_ambient {
            return Err(Error::arg(format!("{} needs ambient dimension >= {min_ambient}", self.family)));
        }
        match (self.family, self.intrinsic_dim) {
            (Family::SwissRoll, d) if d != 2 => return Err(Error::arg("swiss roll is two-dimensional")),
            (Family::Helix1d, d) if d != 1 => return Err(Error::arg("helix1d is one-dimensional")),
            _ => {}
        }
        if self.boundary == Boundary::PeriodicUnit
            && !(self.family == Family::Hypercube && self.ambient_dim == self.intrinsic_dim)
        {
            return Err(Error::arg("periodic boundary applies only to an unembedded hypercube"));
        }
        Ok(())
    }
}

/// Samples the manifold described by `spec`.
///
/// Definitions of the non-cube families:
/// - hypersphere: normalized standard Gaussian vectors in `R^(D+1)`.
/// - swiss roll: `t = 1.5π(1 + 2u)`, `h = H·v` (default `H = 21`), mapped to
///   `(t cos t, h, t sin t)`.
/// - helix1d: `θ` uniform on `[0, 2π)`, mapped to
///   `((R + r cos wθ) cos θ, (R + r cos wθ) sin θ, r sin wθ)` with defaults
///   `R = 2, r = 1, w = 8`.
/// - linear subspace: cube coordinates padded with zeros and multiplied by a
///   seeded Haar-random orthogonal matrix.
/// - nonlinear embed: the cube `x` followed by the extra coordinates
///   `sin(2π x_j) · cos(π x_{j+1})` (indices mod `D`), a graph embedding and
///   hence a diffeomorphism onto its image.
///
/// Coordinates beyond the family's natural ambient dimension are zero.
pub fn generate(spec: &ManifoldSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let (n, d, amb) = (spec.n, spec.intrinsic_dim, spec.ambient_dim);
    let mut coords = vec![0.0; n * amb];
    match spec.family {
        Family::Hypercube => {
            for row in coords.chunks_exact_mut(amb) {
                for x in &mut row[..d] {
                    *x = rng.random::<f64>();
                }
            }
        }
        Family::Hypersphere => {
            for row in coords.chunks_exact_mut(amb) {
                let sphere = &mut row[..d + 1];
                loop {
                    for x in sphere.iter_mut() {
                        *x = rng.sample(StandardNormal);
                    }
                    let norm = sphere.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 1e-12 {
                        sphere.iter_mut().for_each(|x| *x /= norm);
                        break;
                    }
                }
            }
        }
        Family::SwissRoll => {
            let height = spec.param(0, 21.0);
            for row in coords.chunks_exact_mut(amb) {
                let t = 1.5 * PI * (1.0 + 2.0 * rng.random::<f64>());
                let h = height * rng.random::<f64>();
                row[0] = t * t.cos();
                row[1] = h;
                row[2] = t * t.sin();
            }
        }
        Family::Helix1d => {
            let (big_r, small_r, w) = (spec.param(0, 2.0), spec.param(1, 1.0), spec.param(2, 8.0));
            for row in coords.chunks_exact_mut(amb) {
                let theta = 2.0 * PI * rng.random::<f64>();
                let rho = big_r + small_r * (w * theta).cos();
                row[0] = rho * theta.cos();
                row[1] = rho * theta.sin();
                row[2] = small_r * (w * theta).sin();
            }
        }
        Family::LinearSubspace => {
            let q = random_orthogonal(amb, &mut rng);
            let mut x = vec![0.0; d];
            for row in coords.chunks_exact_mut(amb) {
                x.iter_mut().for_each(|v| *v = rng.random::<f64>());
                for (i, out) in row.iter_mut().enumerate() {
                    *out = (0..d).map(|j| q[(i, j)] * x[j]).sum();
                }
            }
        }
        Family::NonlinearEmbed => {
            for row in coords.chunks_exact_mut(amb) {
                for x in &mut row[..d] {
                    *x = rng.random::<f64>();
                }
                for j in 0..amb - d {
                    let (a, b) = (row[j % d], row[(j + 1) % d]);
                    row[d + j] = (2.0 * PI * a).sin() * (PI * b).cos();
                }
            }
        }
    }
    PointCloud::new(coords, amb, spec.boundary)
}

/// Haar-distributed orthogonal matrix via QR of a Gaussian matrix with the
/// sign convention `diag(R) > 0`.
pub fn random_orthogonal(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `n` i.i.d. local FSA estimates drawn from the analytic density by
/// inverse-cdf sampling.
pub fn sample_fsa_locals(dim: f64, k: usize, n: usize, seed: u64) -> Result<LocalEstimateSet> {
    let dist = FsaDistribution::new(k, dim)?;
    let mut rng = rng_from_seed(seed);
    let values = (0..n)
        .map(|_| dist.quantile(rng.sample::<f64, _>(Open01)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalEstimateSet::from_values(k, values))
}
