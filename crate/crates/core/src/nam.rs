//! Noisy adjacency matrix generation and its powers.

use std::ops::Range;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;

use crate::graph::Graph;
use crate::matrix::{multiply, trace_of_product, DenseMatrix, MatMulStrategy};
use crate::mechanisms::{EntryVariance, Mechanism, MechanismKind};
use crate::protocol::{RunTrace, ENTRY_BYTES};
use crate::rng::{SeedStream, Stage};

/// Symmetric, zero-diagonal matrix of independent unbiased estimates of the
/// adjacency entries.
#[derive(Debug, Clone)]
pub struct NoisyAdjacencyMatrix {
    entries: DenseMatrix,
    mech: Mechanism,
    sigma2: EntryVariance,
}

impl NoisyAdjacencyMatrix {
    pub fn n(&self) -> usize {
        self.entries.n()
    }

    pub fn entries(&self) -> &DenseMatrix {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(i, j)
    }

    pub fn mechanism(&self) -> Mechanism {
        self.mech
    }

    pub fn sigma2(&self) -> EntryVariance {
        self.sigma2
    }

    pub fn into_entries(self) -> DenseMatrix {
        self.entries
    }
}

/// Columns user `user` perturbed and uploaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserUpload {
    pub user: usize,
    pub columns: Range<usize>,
}

/// Runs the one-round protocol on the graph's own adjacency rows.
pub fn gnam(g: &Graph, mech: Mechanism, seeds: &SeedStream) -> NoisyAdjacencyMatrix {
    gnam_rows(g.rows(), mech, seeds, None).0
}

/// One-round protocol over explicit user rows.
///
/// User `u` randomizes its bits for columns `0..u` only (the pair `(i, u)`
/// with `i < u` is owned by the higher-index endpoint), each entry already
/// mapped to its unbiased value. The collector mirrors the lower triangle
/// and leaves the diagonal at zero. Upload messages are recorded in `trace`
/// as round 1 when one is supplied.
pub fn gnam_rows(
    rows: &[FixedBitSet],
    mech: Mechanism,
    seeds: &SeedStream,
    trace: Option<&mut RunTrace>,
) -> (NoisyAdjacencyMatrix, Vec<UserUpload>) {
    let n = rows.len();
    let mut entries = DenseMatrix::zeros(n);
    if n > 0 {
        entries
            .as_mut_slice()
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(u, out)| {
                let mut rng = seeds.user(Stage::Gnam, u);
                let row = &rows[u];
                for (i, slot) in out[..u].iter_mut().enumerate() {
                    *slot = mech.noisy_entry(row.contains(i), &mut rng);
                }
            });
        let data = entries.as_mut_slice();
        for u in 0..n {
            for i in 0..u {
                data[i * n + u] = data[u * n + i];
            }
        }
    }

    let uploads: Vec<UserUpload> = (0..n).map(|u| UserUpload { user: u, columns: 0..u }).collect();
    if let Some(trace) = trace {
        for up in &uploads {
            let entries = up.columns.len() as u64;
            let bytes = match mech.kind() {
                MechanismKind::WarnerRr => entries.div_ceil(8),
                MechanismKind::Laplace => entries * ENTRY_BYTES,
            };
            trace.upload(1, "gnam", up.user, bytes, mech.epsilon());
        }
    }

    let sigma2 = mech.entry_variance();
    (
        NoisyAdjacencyMatrix {
            entries,
            mech,
            sigma2,
        },
        uploads,
    )
}

/// `B̂ = Â²`.
pub fn square(nam: &NoisyAdjacencyMatrix, strategy: MatMulStrategy) -> DenseMatrix {
    multiply(&nam.entries, &nam.entries, strategy)
}

/// `tr(Â³)`, accumulated as `Σ_ij (Â²)_ij Â_ji` so the cube is never formed.
pub fn trace_cube(nam: &NoisyAdjacencyMatrix, strategy: MatMulStrategy) -> f64 {
    let b = square(nam, strategy);
    trace_of_product(&b, &nam.entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{exact_count, SubgraphKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_limit_recovers_adjacency() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = Graph::erdos_renyi(25, 0.3, &mut rng);
        for mech in [Mechanism::rr(f64::INFINITY).unwrap(), Mechanism::laplace(f64::INFINITY).unwrap()] {
            let nam = gnam(&g, mech, &SeedStream::new(1));
            for i in 0..25 {
                for j in 0..25 {
                    assert_eq!(nam.get(i, j), g.has_edge(i, j) as u8 as f64);
                }
            }
        }
    }

    #[test]
    fn structure_holds_for_many_seeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Graph::erdos_renyi(30, 0.2, &mut rng);
        let eps: f64 = 0.7;
        let hi = eps.exp() / (eps.exp() - 1.0);
        let lo = -1.0 / (eps.exp() - 1.0);
        for seed in 0..20 {
            let nam = gnam(&g, Mechanism::rr(eps).unwrap(), &SeedStream::new(seed));
            assert!(nam.entries().is_symmetric());
            for i in 0..30 {
                assert_eq!(nam.get(i, i), 0.0);
                for j in 0..30 {
                    if i != j {
                        let v = nam.get(i, j);
                        assert!((v - hi).abs() < 1e-12 || (v - lo).abs() < 1e-12);
                    }
                }
            }
            let lap = gnam(&g, Mechanism::laplace(eps).unwrap(), &SeedStream::new(seed));
            assert!(lap.entries().is_symmetric());
            assert!((0..30).all(|i| lap.get(i, i) == 0.0));
        }
    }

    #[test]
    fn each_pair_uploaded_once_by_higher_endpoint() {
        let g = Graph::complete(12);
        let mut trace = RunTrace::new(12);
        let (_, uploads) = gnam_rows(g.rows(), Mechanism::rr(1.0).unwrap(), &SeedStream::new(0), Some(&mut trace));
        for i in 0..12 {
            for j in (i + 1)..12 {
                let owners: Vec<usize> = uploads
                    .iter()
                    .filter(|up| (up.user == i && up.columns.contains(&j)) || (up.user == j && up.columns.contains(&i)))
                    .map(|up| up.user)
                    .collect();
                assert_eq!(owners, vec![j]);
                let strangers = uploads
                    .iter()
                    .filter(|up| up.user != i && up.user != j)
                    .count();
                assert_eq!(strangers, 10);
            }
        }
        assert_eq!(trace.records().len(), 12);
        assert_eq!(trace.records()[9].bytes, 2);
    }

    #[test]
    fn noiseless_powers() {
        let k3 = Graph::complete(3);
        let nam = gnam(&k3, Mechanism::rr(f64::INFINITY).unwrap(), &SeedStream::new(0));
        let b = square(&nam, MatMulStrategy::Naive);
        assert_eq!(b.get(0, 1), 1.0);
        assert_eq!(b.get(2, 0), 1.0);
        assert_eq!(trace_cube(&nam, MatMulStrategy::default()), 6.0);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = Graph::erdos_renyi(60, 0.2, &mut rng);
        let nam = gnam(&g, Mechanism::rr(f64::INFINITY).unwrap(), &SeedStream::new(0));
        let t = trace_cube(&nam, MatMulStrategy::Blocked { block: 16 });
        assert_eq!(t, 6.0 * exact_count(&g, SubgraphKind::Triangle) as f64);
    }

    #[test]
    fn same_seed_same_matrix() {
        let g = Graph::cycle(9);
        let a = gnam(&g, Mechanism::rr(1.0).unwrap(), &SeedStream::new(3));
        let b = gnam(&g, Mechanism::rr(1.0).unwrap(), &SeedStream::new(3));
        let c = gnam(&g, Mechanism::rr(1.0).unwrap(), &SeedStream::new(4));
        assert_eq!(a.entries(), b.entries());
        assert_ne!(a.entries(), c.entries());
    }
}
