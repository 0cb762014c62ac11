//! Graph projection: every user releases a noisy degree
//! `d̃ = ⌊α + max{d + Lap(1/ε₀), 0}⌋` and trims its own neighbor list down
//! to at most `d̃` entries.

use fixedbitset::FixedBitSet;
use rand::{Rng, RngCore};
use rayon::prelude::*;

use crate::error::{check_budget, Result};
use crate::graph::Graph;
use crate::mechanisms::laplace_unchecked;
use crate::rng::{SeedStream, Stage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedView {
    pub user: usize,
    pub projected_row: FixedBitSet,
    /// Sorted retained neighbors.
    pub neighbors: Vec<u32>,
    pub noisy_degree: usize,
    pub removed: usize,
}

/// Computes the noisy degree of one user and removes
/// `d - d̃` uniformly chosen neighbors when `d̃ < d`.
pub fn graph_projection<R: RngCore + ?Sized>(
    user: usize,
    n: usize,
    neighbors: &[u32],
    eps0: f64,
    alpha: usize,
    rng: &mut R,
) -> Result<ProjectedView> {
    let eps0 = check_budget(eps0)?;
    let d = neighbors.len();
    let noise = if eps0.is_infinite() {
        0.0
    } else {
        laplace_unchecked(1.0 / eps0, rng)
    };
    let noisy_degree = (alpha as f64 + (d as f64 + noise).max(0.0)).floor() as usize;

    let mut kept: Vec<u32> = neighbors.to_vec();
    let mut removed = 0;
    if noisy_degree < d {
        removed = d - noisy_degree;
        // partial Fisher-Yates: the first `removed` slots become the removed set
        for i in 0..removed {
            let j = rng.random_range(i..d);
            kept.swap(i, j);
        }
        kept.drain(..removed);
        kept.sort_unstable();
    }
    let mut projected_row = FixedBitSet::with_capacity(n);
    for &v in &kept {
        projected_row.insert(v as usize);
    }
    Ok(ProjectedView {
        user,
        projected_row,
        neighbors: kept,
        noisy_degree,
        removed,
    })
}

/// Collector-side view after every user ran [`graph_projection`].
#[derive(Debug, Clone)]
pub struct Projection {
    pub views: Vec<ProjectedView>,
    pub alpha: usize,
    pub max_noisy_degree: usize,
}

impl Projection {
    pub fn noisy_degrees(&self) -> Vec<usize> {
        self.views.iter().map(|v| v.noisy_degree).collect()
    }

    /// Projected rows in user order, as fed to the one-round protocol.
    pub fn rows(&self) -> Vec<FixedBitSet> {
        self.views.iter().map(|v| v.projected_row.clone()).collect()
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.views[u].neighbors
    }

    pub fn users_with_removals(&self) -> usize {
        self.views.iter().filter(|v| v.removed > 0).count()
    }
}

/// Runs graph projection for all users with per-user random streams.
pub fn project_all(g: &Graph, eps0: f64, alpha: usize, seeds: &SeedStream) -> Result<Projection> {
    check_budget(eps0)?;
    let n = g.node_count();
    let views = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut rng = seeds.user(Stage::Projection, u);
            graph_projection(u, n, g.neighbors(u), eps0, alpha, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_noisy_degree = views.iter().map(|v| v.noisy_degree).max().unwrap_or(alpha);
    Ok(Projection {
        views,
        alpha,
        max_noisy_degree,
    })
}
