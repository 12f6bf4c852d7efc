use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MultiChannelSeries;
use crate::error::{Error, Result};

/// Undirected electrode adjacency graph; node order is channel order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `rows x cols` grid with von Neumann (4-neighbor) adjacency, nodes in
    /// row-major order named `{prefix}{index}`.
    pub fn grid(prefix: &str, rows: usize, cols: usize) -> Self {
        let name = |r: usize, c: usize| format!("{prefix}{}", r * cols + c + 1);
        let nodes = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).map(|(r, c)| name(r, c)).collect();
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((name(r, c), name(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((name(r, c), name(r + 1, c)));
                }
            }
        }
        Self { nodes, edges }
    }

    /// Electrode strip as a chain.
    pub fn strip(prefix: &str, len: usize) -> Self {
        Self::grid(prefix, 1, len)
    }

    /// Disjoint union of several arrays.
    pub fn combine(parts: &[Layout]) -> Self {
        Self {
            nodes: parts.iter().flat_map(|p| p.nodes.iter().cloned()).collect(),
            edges: parts.iter().flat_map(|p| p.edges.iter().cloned()).collect(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.to_owned(), message: e.to_string() })
    }

    /// Neighbor index lists; rejects unknown ids, self-loops and duplicate ids.
    pub fn adjacency(&self) -> Result<Vec<Vec<usize>>> {
        let mut index = HashMap::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            if index.insert(n.as_str(), i).is_some() {
                return Err(Error::arg(format!("duplicate node id `{n}`")));
            }
        }
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (a, b) in &self.edges {
            let lookup = |id: &str| {
                index.get(id).copied().ok_or_else(|| Error::arg(format!("edge references unknown node `{id}`")))
            };
            let (i, j) = (lookup(a)?, lookup(b)?);
            if i == j {
                return Err(Error::arg(format!("self-loop at `{a}`")));
            }
            if !adj[i].contains(&j) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        adj.iter_mut().for_each(|v| v.sort_unstable());
        Ok(adj)
    }

    /// Dense graph Laplacian `degree - adjacency`.
    pub fn laplacian(&self) -> Result<Vec<Vec<f64>>> {
        let adj = self.adjacency()?;
        let n = adj.len();
        let mut l = vec![vec![0.0; n]; n];
        for (i, nbrs) in adj.iter().enumerate() {
            l[i][i] = nbrs.len() as f64;
            for &j in nbrs {
                l[i][j] = -1.0;
            }
        }
        Ok(l)
    }
}

/// Current source density: the graph Laplacian applied at every sample.
pub fn csd(series: &MultiChannelSeries) -> Result<MultiChannelSeries> {
    let layout = series.layout().ok_or_else(|| Error::arg("current source density needs a channel layout"))?;
    let adj = layout.adjacency()?;
    for (i, nbrs) in adj.iter().enumerate() {
        if nbrs.is_empty() {
            log::warn!("channel {} (`{}`) has no neighbors; its CSD is zero", i, layout.nodes[i]);
        }
    }
    let chans = series.channels();
    let out = adj
        .iter()
        .enumerate()
        .map(|(i, nbrs)| {
            (0..series.len())
                .map(|t| nbrs.len() as f64 * chans[i][t] - nbrs.iter().map(|&j| chans[j][t]).sum::<f64>())
                .collect()
        })
        .collect();
    Ok(series.map_channels(out))
}
