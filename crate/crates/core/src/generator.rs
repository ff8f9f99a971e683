//! Seeded random binary CSPs over the (n, m, p1, p2) model.
//!
//! Every unordered pair `{x, y}` (`x < y`) owns an independent ChaCha8
//! stream seeded with `splitmix64`-mixed `(seed, x, y)`. The first draw of a
//! stream decides whether the pair is constrained (probability `p1`); the
//! next `m * m` draws, in row-major order, decide whether each value pair is
//! disallowed (probability `p2`). A draw `u` from `[0, 1)` succeeds when
//! `u < p`. Adding or dropping one pair never shifts any other pair's draws.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csp::{AllowMatrix, CspInstance, Var};
use crate::error::{Error, Result};

/// Name recorded in instance headers.
pub const PRNG_NAME: &str = "chacha8/splitmix64-substreams";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub m: usize,
    pub p1: f64,
    pub p2: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidConfig("n and m must be at least 1".into()));
        }
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name}={p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Comment lines describing how the instance was produced.
    pub fn header(&self) -> Vec<String> {
        vec![
            format!(
                "generator: model-a n={} m={} p1={} p2={} seed={}",
                self.n, self.m, self.p1, self.p2, self.seed
            ),
            format!("prng: {PRNG_NAME}"),
            "filter: none (connectivity and satisfiability not checked)".to_string(),
        ]
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic key for a substream labelled by `parts`.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn substream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}

fn pair_stream(seed: u64, x: Var, y: Var) -> ChaCha8Rng {
    substream(seed, &[x as u64, y as u64])
}

#[inline]
fn coin(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.gen::<f64>() < p
}

fn fill_matrix(rng: &mut ChaCha8Rng, m: usize, p2: f64) -> AllowMatrix {
    AllowMatrix::from_fn(m, m, |_, _| !coin(rng, p2))
}

pub fn generate(spec: &GenSpec) -> Result<CspInstance> {
    spec.validate()?;
    let mut cons = Vec::new();
    for x in 0..spec.n {
        for y in x + 1..spec.n {
            let mut rng = pair_stream(spec.seed, x, y);
            if coin(&mut rng, spec.p1) {
                cons.push((x, y, fill_matrix(&mut rng, spec.m, spec.p2)));
            }
        }
    }
    CspInstance::new(vec![spec.m; spec.n], cons)
}

/// Uniformly random labelled tree (via a random Prüfer sequence) whose edge
/// matrices follow the same `p2` rule as [`generate`].
pub fn generate_tree(n: usize, m: usize, p2: f64, seed: u64) -> Result<CspInstance> {
    GenSpec { n, m, p1: 1.0, p2, seed }.validate()?;
    let edges = random_tree_edges(n, &mut substream(seed, &[u64::MAX]));
    let cons = edges
        .into_iter()
        .map(|(x, y)| {
            let mut rng = pair_stream(seed, x, y);
            // same stream layout as `generate`: the density draw comes first
            let _ = rng.gen::<f64>();
            (x, y, fill_matrix(&mut rng, m, p2))
        })
        .collect();
    CspInstance::new(vec![m; n], cons)
}

/// Edges `(min, max)` of a uniformly random labelled tree on `n` vertices.
pub fn random_tree_edges(n: usize, rng: &mut impl Rng) -> Vec<(Var, Var)> {
    match n {
        0 | 1 => return Vec::new(),
        2 => return vec![(0, 1)],
        _ => {}
    }
    let prufer: Vec<Var> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &v in &prufer {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &v in &prufer {
        let leaf = (0..n).find(|&u| degree[u] == 1).expect("a leaf always exists");
        edges.push((leaf.min(v), leaf.max(v)));
        degree[leaf] -= 1;
        degree[v] -= 1;
    }
    let rest: Vec<Var> = (0..n).filter(|&u| degree[u] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Connected graph on `n` vertices with `extra` independent cycles: a random
/// spanning tree plus `extra` random non-tree edges. Used to scan loopy
/// topologies.
pub fn random_loopy_edges(n: usize, extra: usize, rng: &mut impl Rng) -> Vec<(Var, Var)> {
    let mut edges = random_tree_edges(n, rng);
    let mut candidates: Vec<(Var, Var)> = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .filter(|e| !edges.contains(e))
        .collect();
    candidates.shuffle(rng);
    edges.extend(candidates.into_iter().take(extra));
    edges.sort_unstable();
    edges
}
