use nalgebra::{DMatrix, SymmetricEigen};

use super::{SpectraError, Variant};
use crate::isoperimetry::HostGraph;

/// Largest graph accepted by [`laplacian_eigs`].
pub const DENSE_CAP: usize = 4000;

/// Sorted eigenvalues, with `|<delta_o, v_k>|^2` when the graph has a root.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub root_weights: Option<Vec<f64>>,
}

/// Dense symmetric matrix of `Delta = D - A` or `D^-1/2 Delta D^-1/2`.
/// Isolated vertices give a zero row in both cases.
pub(crate) fn laplacian_matrix(g: &HostGraph, variant: Variant) -> DMatrix<f64> {
    let n = g.len();
    let deg: Vec<f64> = (0..n as u32).map(|v| g.neighbors(v).len() as f64).collect();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for v in 0..n {
        if deg[v] == 0.0 {
            continue;
        }
        match variant {
            Variant::Laplacian => m[(v, v)] = deg[v],
            Variant::Normalized => m[(v, v)] = 1.0,
        }
        for &w in g.neighbors(v as u32) {
            let w = w as usize;
            m[(v, w)] = match variant {
                Variant::Laplacian => -1.0,
                Variant::Normalized => -1.0 / (deg[v] * deg[w]).sqrt(),
            };
        }
    }
    m
}

pub fn laplacian_eigs(g: &HostGraph, variant: Variant) -> Result<Spectrum, SpectraError> {
    let n = g.len();
    if n > DENSE_CAP {
        return Err(SpectraError::TooLarge { size: n, cap: DENSE_CAP });
    }
    if n == 0 {
        return Ok(Spectrum { values: Vec::new(), root_weights: g.root().map(|_| Vec::new()) });
    }
    let eig = SymmetricEigen::new(laplacian_matrix(g, variant));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let root_weights = g.root().map(|o| {
        order
            .iter()
            .map(|&k| eig.eigenvectors[(o as usize, k)].powi(2))
            .collect()
    });
    Ok(Spectrum { values, root_weights })
}
