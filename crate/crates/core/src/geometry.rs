//! Point clouds, boundary-aware distances and exact k-nearest-neighbor queries.
//!
//! Neighbor search is a brute-force scan. Under the periodic (flat torus)
//! boundary every coordinate difference wraps, so the search must see all
//! points anyway; for the sample sizes used in calibration (a few thousand)
//! a scan with partial selection is fast enough and exact.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How coordinate differences are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Plain Euclidean distance.
    Hard,
    /// Unit cube with opposite faces identified (flat torus).
    #[serde(rename = "periodic")]
    PeriodicUnit,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Hard => f.write_str("hard"),
            Boundary::PeriodicUnit => f.write_str("periodic"),
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Boundary::Hard),
            "periodic" => Ok(Boundary::PeriodicUnit),
            other => Err(Error::arg(format!("unknown boundary `{other}` (expected hard|periodic)"))),
        }
    }
}

#[inline]
fn coord_diff(a: f64, b: f64, boundary: Boundary) -> f64 {
    let d = (a - b).abs();
    match boundary {
        Boundary::Hard => d,
        Boundary::PeriodicUnit => d.min(1.0 - d),
    }
}

#[inline]
fn squared_distance_unchecked(a: &[f64], b: &[f64], boundary: Boundary) -> f64 {
    match boundary {
        Boundary::Hard => a
            .iter()
            .zip(b)
            .map(|(x, y)| {
                let d = x - y;
                d * d
            })
            .sum(),
        Boundary::PeriodicUnit => a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                let d = coord_diff(x, y, boundary);
                d * d
            })
            .sum(),
    }
}

/// Euclidean distance between two points, wrapping each coordinate under
/// the periodic boundary.
pub fn distance(a: &[f64], b: &[f64], boundary: Boundary) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(squared_distance_unchecked(a, b, boundary).sqrt())
}

/// An immutable set of `n` points in `dim` ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    boundary: Boundary,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates.
    pub fn new(coords: Vec<f64>, dim: usize, boundary: Boundary) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("ambient dimension must be at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::arg("point cloud must contain at least one point"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::arg(format!(
                "{} coordinates do not divide into rows of {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::arg(format!("non-finite coordinate in point {}", pos / dim)));
        }
        if boundary == Boundary::PeriodicUnit {
            if let Some(pos) = coords.iter().position(|c| !(0.0..1.0).contains(c)) {
                return Err(Error::arg(format!(
                    "point {} lies outside [0,1) under the periodic boundary",
                    pos / dim
                )));
            }
        }
        Ok(Self { coords, dim, boundary })
    }

    pub fn from_rows(rows: &[Vec<f64>], boundary: Boundary) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::arg(format!(
                    "row {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            coords.extend_from_slice(row);
        }
        Self::new(coords, dim, boundary)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Same points measured under another boundary condition.
    pub fn with_boundary(self, boundary: Boundary) -> Result<Self> {
        Self::new(self.coords, self.dim, boundary)
    }

    /// Multiplies every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.coords.iter().map(|x| x * c).collect(), self.dim, self.boundary)
    }

    /// Exact `k` nearest neighbors of point `query`, excluding the point itself.
    pub fn knn(&self, query: usize, k: usize) -> Result<NeighborDistances> {
        let n = self.len();
        if query >= n {
            return Err(Error::arg(format!("query index {query} out of range for {n} points")));
        }
        if k == 0 {
            return Err(Error::arg("neighborhood size must be at least 1"));
        }
        if k > n - 1 {
            return Err(Error::InsufficientSample { needed: k + 1, have: n });
        }
        Ok(self.knn_unchecked(query, k))
    }

    /// Neighbor lists for every point, in point order.
    pub fn knn_all(&self, k: usize) -> Result<Vec<NeighborDistances>> {
        let n = self.len();
        if k == 0 {
            return Err(Error::arg("neighborhood size must be at least 1"));
        }
        if k > n - 1 {
            return Err(Error::InsufficientSample { needed: k + 1, have: n });
        }
        Ok((0..n).into_par_iter().map(|q| self.knn_unchecked(q, k)).collect())
    }

    fn knn_unchecked(&self, query: usize, k: usize) -> NeighborDistances {
        let q = self.point(query);
        let mut cand: Vec<(f64, usize)> = self
            .points()
            .enumerate()
            .filter(|&(j, _)| j != query)
            .map(|(j, p)| (squared_distance_unchecked(q, p, self.boundary), j))
            .collect();
        let by_dist_then_index =
            |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, by_dist_then_index);
            // squared distances a few ulps apart can share a square root;
            // keep those so ties on the reported distance break by index
            let kth = cand[k - 1].0;
            let r_k = kth.sqrt();
            let (head, tail) = cand.split_at_mut(k);
            let mut extra: Vec<(f64, usize)> = tail
                .iter()
                .filter(|&&(d2, _)| d2 <= kth * (1.0 + 4.0 * f64::EPSILON) && d2.sqrt() == r_k)
                .copied()
                .collect();
            let mut kept = head.to_vec();
            kept.append(&mut extra);
            cand = kept;
        }
        let mut cand: Vec<(f64, usize)> = cand.into_iter().map(|(d2, j)| (d2.sqrt(), j)).collect();
        cand.sort_unstable_by(by_dist_then_index);
        cand.truncate(k);
        let distances: Vec<f64> = cand.iter().map(|&(d, _)| d).collect();
        let indices = cand.iter().map(|&(_, j)| j).collect();
        let has_zero = distances.first().is_some_and(|&d| d == 0.0);
        NeighborDistances { query, distances, indices, has_zero }
    }
}

/// Sorted distances from one query point to its nearest neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborDistances {
    pub query: usize,
    /// `R_1 <= R_2 <= ... <= R_K`.
    pub distances: Vec<f64>,
    /// Point indices matching `distances`.
    pub indices: Vec<usize>,
    /// A duplicate of the query point is among the neighbors (`R_1 == 0`).
    pub has_zero: bool,
}

impl NeighborDistances {
    pub fn k(&self) -> usize {
        self.distances.len()
    }

    /// Distance to the `j`-th neighbor, 1-based.
    pub fn nth(&self, j: usize) -> f64 {
        self.distances[j - 1]
    }

    /// `R_j / R_K` for `j = 1..K-1`.
    pub fn ratios(&self) -> Vec<f64> {
        let outer = *self.distances.last().expect("non-empty neighbor list");
        self.distances[..self.distances.len() - 1].iter().map(|r| r / outer).collect()
    }
}

pub(crate) fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.total_cmp(b)
}
