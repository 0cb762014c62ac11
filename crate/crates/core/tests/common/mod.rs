#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use ldpcount::graph::read_edge_list;
use ldpcount::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FACEBOOK_NODES: usize = 4039;
pub const FACEBOOK_EDGES: usize = 88234;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn er(n: usize, p: f64, seed: u64) -> Graph {
    Graph::erdos_renyi(n, p, &mut rng(seed))
}

/// Uniform graph with exactly `m` edges.
pub fn gnm(n: usize, m: usize, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut edges = BTreeSet::new();
    while edges.len() < m {
        let u = r.random_range(0..n);
        let v = r.random_range(0..n);
        if u != v {
            edges.insert((u.min(v), u.max(v)));
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// `LDPCOUNT_FACEBOOK`, or `data/facebook_combined.txt` under the
/// workspace root.
pub fn facebook_path() -> PathBuf {
    std::env::var_os("LDPCOUNT_FACEBOOK")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/facebook_combined.txt")
        })
}

pub fn facebook() -> Option<Graph> {
    let path = facebook_path();
    if !path.exists() {
        return None;
    }
    Some(read_edge_list(&path).expect("facebook edge list parses").graph)
}
