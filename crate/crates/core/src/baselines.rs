//! Rival solution-probability estimators built on spanning trees and directed
//! propagation: single spanning tree counting (SST), universal propagation to
//! a sink (UP) and the product of several spanning-tree estimates (MST).

use std::collections::VecDeque;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::seq::SliceRandom;

use crate::csp::{CspInstance, Var};
use crate::error::{Error, Result};
use crate::generator::substream;
use crate::oracle::ratio;

/// An acyclic subset of an instance's constraint edges, rooted per component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree {
    pub root: Var,
    /// Parent pointer of every variable; `None` for component roots.
    pub parent: Vec<Option<Var>>,
    /// Edges as `(min, max)` pairs, sorted.
    pub edges: Vec<(Var, Var)>,
}

impl SpanningTree {
    /// Validates `edges` against `inst` and roots the forest at `root` (other
    /// components at their lowest-indexed variable).
    pub fn new(inst: &CspInstance, mut edges: Vec<(Var, Var)>, root: Var) -> Result<Self> {
        let n = inst.num_vars();
        if root >= n {
            return Err(Error::InvalidTree(format!("root {root} out of range")));
        }
        for e in &mut edges {
            if e.0 >= n || e.1 >= n || inst.edge_between(e.0, e.1).is_none() {
                return Err(Error::InvalidTree(format!("({}, {}) is not a constraint", e.0, e.1)));
            }
            *e = (e.0.min(e.1), e.0.max(e.1));
        }
        edges.sort_unstable();
        edges.dedup();
        let mut dsu = Dsu::new(n);
        for &(x, y) in &edges {
            if !dsu.union(x, y) {
                return Err(Error::InvalidTree(format!("edge ({x}, {y}) closes a cycle")));
            }
        }
        let adj = adjacency(n, &edges);
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        for start in std::iter::once(root).chain(0..n) {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        parent[v] = Some(u);
                        queue.push_back(v);
                    }
                }
            }
        }
        Ok(SpanningTree { root, parent, edges })
    }

    pub fn rerooted(&self, inst: &CspInstance, root: Var) -> Result<Self> {
        SpanningTree::new(inst, self.edges.clone(), root)
    }

    pub fn contains(&self, x: Var, y: Var) -> bool {
        self.edges.binary_search(&(x.min(y), x.max(y))).is_ok()
    }
}

fn adjacency(n: usize, edges: &[(Var, Var)]) -> Vec<Vec<Var>> {
    let mut adj = vec![Vec::new(); n];
    for &(x, y) in edges {
        adj[x].push(y);
        adj[y].push(x);
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    adj
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Bottom-up counts `N(v = x)` of the tree subproblem below `v`, seen from
/// `from` (the neighbor towards the root).
fn subtree_counts(inst: &CspInstance, adj: &[Vec<Var>], v: Var, from: Option<Var>) -> Vec<BigUint> {
    // iterative post-order to stay safe on long paths
    let mut order = Vec::new();
    let mut stack = vec![(v, from)];
    while let Some((u, p)) = stack.pop() {
        order.push((u, p));
        for &w in &adj[u] {
            if Some(w) != p {
                stack.push((w, Some(u)));
            }
        }
    }
    let mut counts: Vec<Option<Vec<BigUint>>> = vec![None; inst.num_vars()];
    for &(u, p) in order.iter().rev() {
        let mut n_u: Vec<BigUint> = inst
            .unary(u)
            .iter()
            .map(|&live| if live { BigUint::from(1u8) } else { BigUint::zero() })
            .collect();
        for &c in &adj[u] {
            if Some(c) == p {
                continue;
            }
            let child = counts[c].as_ref().expect("children are processed first");
            let arc = inst.arc_between(u, c).expect("tree edges are constraints");
            for (x, n) in n_u.iter_mut().enumerate() {
                if n.is_zero() {
                    continue;
                }
                let sum: BigUint = child
                    .iter()
                    .enumerate()
                    .filter(|&(y, _)| arc.allows(x, y))
                    .map(|(_, c)| c)
                    .sum();
                *n *= sum;
            }
        }
        counts[u] = Some(n_u);
    }
    counts[v].take().expect("root processed")
}

/// Solution counts `N(root = x)` of the tree subproblem (only tree edges are
/// consulted), scaled by the solution totals of the forest's other
/// components so that they count complete assignments.
pub fn sst_counts(inst: &CspInstance, tree: &SpanningTree, root: Var) -> Result<Vec<BigUint>> {
    let n = inst.num_vars();
    if tree.parent.len() != n {
        return Err(Error::InvalidTree("tree was built for another instance".into()));
    }
    inst.check_var(root)?;
    let adj = adjacency(n, &tree.edges);
    let mut root_counts = subtree_counts(inst, &adj, root, None);

    // other components contribute their totals as a common factor
    let mut seen = vec![false; n];
    mark_component(&adj, root, &mut seen);
    for r in 0..n {
        if seen[r] {
            continue;
        }
        mark_component(&adj, r, &mut seen);
        let total: BigUint = subtree_counts(inst, &adj, r, None).into_iter().sum();
        for c in &mut root_counts {
            *c *= &total;
        }
    }
    Ok(root_counts)
}

fn mark_component(adj: &[Vec<Var>], s: Var, seen: &mut [bool]) {
    let mut stack = vec![s];
    seen[s] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
}

/// Counts for every variable, re-rooting the tree at each in turn.
pub fn sst_all_counts(inst: &CspInstance, tree: &SpanningTree) -> Result<Vec<Vec<BigUint>>> {
    (0..inst.num_vars()).map(|x| sst_counts(inst, tree, x)).collect()
}

/// Normalizes counts; an all-zero count vector stays all-zero.
pub fn normalize_counts(counts: &[BigUint]) -> Vec<f64> {
    let total: BigUint = counts.iter().sum();
    counts.iter().map(|c| ratio(c, &total)).collect()
}

/// Per-variable probabilities from one tree.
pub fn sst_estimate(inst: &CspInstance, tree: &SpanningTree) -> Result<Vec<Vec<f64>>> {
    Ok(sst_all_counts(inst, tree)?
        .iter()
        .map(|c| normalize_counts(c))
        .collect())
}

fn normalize(v: &mut [f64]) {
    let mass: f64 = v.iter().sum();
    if mass > 0.0 && mass.is_finite() {
        for x in v.iter_mut() {
            *x /= mass;
        }
    } else {
        v.iter_mut().for_each(|x| *x = 0.0);
    }
}

/// Orders all variables by decreasing distance to `sink` (unreachable ones
/// first, ties by index), ending with `sink`. On a tree every edge then
/// points towards the sink.
pub fn sink_ordering(inst: &CspInstance, sink: Var) -> Result<Vec<Var>> {
    inst.check_var(sink)?;
    let dist = inst.distances_from(sink);
    let mut order: Vec<Var> = (0..inst.num_vars()).collect();
    order.sort_by(|&a, &b| dist[b].cmp(&dist[a]).then(a.cmp(&b)));
    Ok(order)
}

fn check_ordering(inst: &CspInstance, ordering: &[Var]) -> Result<Vec<usize>> {
    let n = inst.num_vars();
    if ordering.len() != n {
        return Err(Error::InvalidOrdering(format!("{} variables listed, expected {n}", ordering.len())));
    }
    let mut rank = vec![usize::MAX; n];
    for (r, &x) in ordering.iter().enumerate() {
        if x >= n || rank[x] != usize::MAX {
            return Err(Error::InvalidOrdering(format!("{ordering:?} is not a permutation")));
        }
        rank[x] = r;
    }
    Ok(rank)
}

/// Distributions of every variable after one forward pass of universal
/// propagation along `ordering`: each variable combines the distributions of
/// its earlier neighbors through the constraint matrices, then normalizes.
pub fn up_pass(inst: &CspInstance, ordering: &[Var]) -> Result<Vec<Vec<f64>>> {
    let rank = check_ordering(inst, ordering)?;
    let mut dist: Vec<Vec<f64>> = vec![Vec::new(); inst.num_vars()];
    for &x in ordering {
        let mut p: Vec<f64> = inst.unary(x).iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        for &(c, e) in inst.adjacent(x) {
            if rank[c] > rank[x] {
                continue;
            }
            let arc = inst.arc(x, e);
            let parent = &dist[c];
            for (v, pv) in p.iter_mut().enumerate() {
                if *pv == 0.0 {
                    continue;
                }
                let s: f64 = parent.iter().enumerate().filter(|&(y, _)| arc.allows(v, y)).map(|(_, q)| q).sum();
                *pv *= s;
            }
        }
        normalize(&mut p);
        dist[x] = p;
    }
    Ok(dist)
}

/// Distribution of `sink`, which must come last in `ordering`.
pub fn up_estimate(inst: &CspInstance, ordering: &[Var], sink: Var) -> Result<Vec<f64>> {
    inst.check_var(sink)?;
    if ordering.last() != Some(&sink) {
        return Err(Error::InvalidOrdering(format!("sink {sink} is not last")));
    }
    let mut all = up_pass(inst, ordering)?;
    Ok(std::mem::take(&mut all[sink]))
}

/// Every variable's distribution, each computed as the sink of its own
/// [`sink_ordering`].
pub fn up_all(inst: &CspInstance) -> Result<Vec<Vec<f64>>> {
    (0..inst.num_vars())
        .map(|x| up_estimate(inst, &sink_ordering(inst, x)?, x))
        .collect()
}

/// Normalized product of the per-tree distributions.
pub fn mst_estimate(inst: &CspInstance, forest: &[SpanningTree]) -> Result<Vec<Vec<f64>>> {
    for e in inst.edges() {
        if !forest.iter().any(|t| t.contains(e.x, e.y)) {
            return Err(Error::EdgeNotCovered(e.x, e.y));
        }
    }
    let mut combined: Vec<Vec<f64>> = (0..inst.num_vars()).map(|x| vec![1.0; inst.domain_size(x)]).collect();
    for tree in forest {
        for (acc, p) in combined.iter_mut().zip(sst_estimate(inst, tree)?) {
            for (a, q) in acc.iter_mut().zip(p) {
                *a *= q;
            }
            // renormalize per tree so long products cannot underflow
            normalize(acc);
        }
    }
    if forest.is_empty() {
        for (x, acc) in combined.iter_mut().enumerate() {
            for (a, &live) in acc.iter_mut().zip(inst.unary(x)) {
                *a = if live { 1.0 } else { 0.0 };
            }
            normalize(acc);
        }
    }
    Ok(combined)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForestStrategy {
    /// One maximum-weight spanning forest, weighting edges by tightness.
    #[default]
    MaxTightness,
    /// The fewest forests that together hold every edge exactly once.
    EdgePartition,
}

impl std::str::FromStr for ForestStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-tightness" => Ok(ForestStrategy::MaxTightness),
            "edge-partition" => Ok(ForestStrategy::EdgePartition),
            _ => Err(Error::InvalidConfig(format!("unknown forest strategy `{s}`"))),
        }
    }
}

pub fn build_spanning_forest(inst: &CspInstance, strategy: ForestStrategy, seed: u64) -> Vec<SpanningTree> {
    let forests = match strategy {
        ForestStrategy::MaxTightness => vec![max_tightness_edges(inst)],
        ForestStrategy::EdgePartition => partition_edges(inst, seed),
    };
    forests
        .into_iter()
        .map(|edges| SpanningTree::new(inst, edges, 0).expect("forests are acyclic subsets of the constraint graph"))
        .collect()
}

/// Kruskal on tightness, heaviest first, ties by `(x, y)`.
fn max_tightness_edges(inst: &CspInstance) -> Vec<(Var, Var)> {
    let mut edges: Vec<(f64, Var, Var)> = inst.edges().iter().map(|e| (e.matrix.tightness(), e.x, e.y)).collect();
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut dsu = Dsu::new(inst.num_vars());
    edges
        .into_iter()
        .filter(|&(_, x, y)| dsu.union(x, y))
        .map(|(_, x, y)| (x, y))
        .collect()
}

/// Edge sets of a minimum forest partition, found by inserting edges one at
/// a time along shortest exchange paths (matroid partitioning); a new forest
/// opens only when no exchange path exists.
fn partition_edges(inst: &CspInstance, seed: u64) -> Vec<Vec<(Var, Var)>> {
    let n = inst.num_vars();
    let mut order: Vec<(Var, Var)> = inst.edges().iter().map(|e| (e.x, e.y)).collect();
    order.shuffle(&mut substream(seed, &[0xf0e5]));

    let mut forests: Vec<Vec<(Var, Var)>> = Vec::new();
    // forest index of each placed edge, keyed by position in `order`
    let mut home: Vec<Option<usize>> = vec![None; order.len()];
    let index_of = |e: (Var, Var), order: &[(Var, Var)]| order.iter().position(|&f| f == e).expect("known edge");

    for new in 0..order.len() {
        let mut prev: Vec<Option<usize>> = vec![None; order.len()];
        let mut visited = vec![false; order.len()];
        visited[new] = true;
        let mut queue = VecDeque::from([new]);
        let mut found = None;
        'bfs: while let Some(f) = queue.pop_front() {
            for (i, forest) in forests.iter().enumerate() {
                if home[f] == Some(i) {
                    continue;
                }
                let (u, v) = order[f];
                match forest_path(n, forest, u, v) {
                    None => {
                        found = Some((f, i));
                        break 'bfs;
                    }
                    Some(path) => {
                        for g in path {
                            let gi = index_of(g, &order);
                            if !visited[gi] {
                                visited[gi] = true;
                                prev[gi] = Some(f);
                                queue.push_back(gi);
                            }
                        }
                    }
                }
            }
        }
        match found {
            None => {
                home[new] = Some(forests.len());
                forests.push(vec![order[new]]);
            }
            Some((mut cur, mut dest)) => loop {
                let old = home[cur];
                if let Some(o) = old {
                    forests[o].retain(|&e| e != order[cur]);
                }
                forests[dest].push(order[cur]);
                home[cur] = Some(dest);
                match prev[cur] {
                    Some(p) => {
                        dest = old.expect("edges on exchange paths are placed");
                        cur = p;
                    }
                    None => break,
                }
            },
        }
    }
    forests
}

/// Edges on the path between `u` and `v` in `forest`, or `None` if they are
/// not connected.
fn forest_path(n: usize, forest: &[(Var, Var)], u: Var, v: Var) -> Option<Vec<(Var, Var)>> {
    let adj = adjacency(n, forest);
    let mut prev = vec![usize::MAX; n];
    prev[u] = u;
    let mut queue = VecDeque::from([u]);
    while let Some(a) = queue.pop_front() {
        if a == v {
            break;
        }
        for &b in &adj[a] {
            if prev[b] == usize::MAX {
                prev[b] = a;
                queue.push_back(b);
            }
        }
    }
    if prev[v] == usize::MAX {
        return None;
    }
    let mut path = Vec::new();
    let mut cur = v;
    while cur != u {
        let p = prev[cur];
        path.push((p.min(cur), p.max(cur)));
        cur = p;
    }
    Some(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::fixtures::*;
    use crate::csp::AllowMatrix;
    use crate::generator::{generate, generate_tree, GenSpec};
    use crate::oracle::{enumerate, frequencies};

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn whole_tree(inst: &CspInstance, root: Var) -> SpanningTree {
        SpanningTree::new(inst, inst.edges().iter().map(|e| (e.x, e.y)).collect(), root).unwrap()
    }

    #[test]
    fn sst_chain_counts() {
        let chain = chain_le_3();
        let tree = whole_tree(&chain, 0);
        assert_eq!(sst_counts(&chain, &tree, 0).unwrap(), big(&[3, 1]));
        assert_eq!(sst_counts(&chain, &tree, 1).unwrap(), big(&[2, 2]));
        assert_eq!(sst_counts(&chain, &tree, 2).unwrap(), big(&[1, 3]));
    }

    #[test]
    fn sst_leaf_and_dead_edge() {
        let single = CspInstance::from_pairs(1, 3, &[]).unwrap();
        let tree = SpanningTree::new(&single, vec![], 0).unwrap();
        assert_eq!(sst_counts(&single, &tree, 0).unwrap(), big(&[1, 1, 1]));

        let dead = CspInstance::new(vec![2, 2], vec![(0, 1, AllowMatrix::empty(2, 2))]).unwrap();
        let tree = whole_tree(&dead, 0);
        assert_eq!(sst_counts(&dead, &tree, 0).unwrap(), big(&[0, 0]));
    }

    #[test]
    fn invalid_trees() {
        let tri = complete(3, 2, |_, _| true);
        assert!(matches!(
            SpanningTree::new(&tri, vec![(0, 1), (1, 2), (0, 2)], 0),
            Err(Error::InvalidTree(_))
        ));
        let chain = chain_le_3();
        assert!(matches!(SpanningTree::new(&chain, vec![(0, 2)], 0), Err(Error::InvalidTree(_))));
    }

    #[test]
    fn sst_matches_oracle_on_trees_and_forests() {
        for seed in 0..30 {
            let inst = generate_tree(7, 3, 0.3, seed).unwrap();
            let census = enumerate(&inst, None);
            let tree = whole_tree(&inst, 0);
            assert_eq!(sst_all_counts(&inst, &tree).unwrap(), census.usage);
        }
        // forest: two disjoint chains plus an isolated variable
        let le = vec![(0, 0), (0, 1), (1, 1)];
        let inst = CspInstance::from_pairs(5, 2, &[(0, 1, le.clone()), (2, 3, le)]).unwrap();
        let census = enumerate(&inst, None);
        assert_eq!(sst_all_counts(&inst, &whole_tree(&inst, 0)).unwrap(), census.usage);
    }

    #[test]
    fn up_examples() {
        let chain = chain_le_3();
        let p = up_estimate(&chain, &[0, 1, 2], 2).unwrap();
        assert!(close(&p, &[0.25, 0.75], 1e-15));

        let free = CspInstance::from_pairs(3, 4, &[(0, 1, vec![(0, 0)])]).unwrap();
        assert_eq!(up_estimate(&free, &[0, 1, 2], 2).unwrap(), vec![0.25; 4]);

        let dead = CspInstance::new(vec![2, 2], vec![(0, 1, AllowMatrix::empty(2, 2))]).unwrap();
        assert_eq!(up_estimate(&dead, &[0, 1], 1).unwrap(), vec![0.0, 0.0]);

        assert!(matches!(up_estimate(&chain, &[0, 2, 1], 2), Err(Error::InvalidOrdering(_))));
        assert!(matches!(up_estimate(&chain, &[0, 0, 2], 2), Err(Error::InvalidOrdering(_))));
    }

    #[test]
    fn up_exact_on_trees() {
        for seed in 0..30 {
            let inst = generate_tree(8, 3, 0.3, seed).unwrap();
            let census = enumerate(&inst, None);
            if !census.is_satisfiable() {
                continue;
            }
            let exact = frequencies(&census).unwrap();
            let up = up_all(&inst).unwrap();
            let tree = whole_tree(&inst, 0);
            for x in 0..inst.num_vars() {
                assert!(close(&up[x], &exact[x], 1e-12), "seed {seed} var {x}");
                let sst = normalize_counts(&sst_counts(&inst, &tree, x).unwrap());
                assert!(close(&up[x], &sst, 1e-12));
            }
        }
    }

    #[test]
    fn mst_examples() {
        let chain = chain_le_3();
        let tree = whole_tree(&chain, 0);
        let exact = frequencies(&enumerate(&chain, None)).unwrap();
        let one = mst_estimate(&chain, std::slice::from_ref(&tree)).unwrap();
        for x in 0..3 {
            assert!(close(&one[x], &exact[x], 1e-12));
        }
        let two = mst_estimate(&chain, &[tree.clone(), tree]).unwrap();
        for x in 0..3 {
            let argmax = |v: &[f64]| (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b]).then(b.cmp(&a))).unwrap();
            assert_eq!(argmax(&one[x]), argmax(&two[x]));
        }
        let partial = SpanningTree::new(&chain, vec![(0, 1)], 0).unwrap();
        assert_eq!(mst_estimate(&chain, &[partial]), Err(Error::EdgeNotCovered(1, 2)));
    }

    #[test]
    fn mst_on_a_loop() {
        let neq = |i: usize, j: usize| i != j;
        let cons: Vec<_> = [(0, 1), (1, 2), (2, 3), (0, 3)]
            .iter()
            .map(|&(x, y)| (x, y, AllowMatrix::from_fn(3, 3, neq)))
            .collect();
        let cycle = CspInstance::new(vec![3; 4], cons).unwrap();
        let forest = build_spanning_forest(&cycle, ForestStrategy::EdgePartition, 1);
        assert_eq!(forest.len(), 2);
        let est = mst_estimate(&cycle, &forest).unwrap();
        for v in est {
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn forest_strategies() {
        for strategy in [ForestStrategy::MaxTightness, ForestStrategy::EdgePartition] {
            let inst = generate_tree(9, 3, 0.4, 4).unwrap();
            let forest = build_spanning_forest(&inst, strategy, 0);
            assert_eq!(forest.len(), 1);
            assert_eq!(forest[0].edges.len(), 8);
        }

        // tightness 0.9 on (0,1), 0.5 on (1,2), 0.1 on (0,2)
        let a = AllowMatrix::from_fn(10, 10, |i, j| i * 10 + j < 10);
        let b = AllowMatrix::from_fn(10, 10, |i, j| i * 10 + j < 50);
        let c = AllowMatrix::from_fn(10, 10, |i, j| i * 10 + j < 90);
        let tri = CspInstance::new(vec![10; 3], vec![(0, 1, a), (1, 2, b), (0, 2, c)]).unwrap();
        let tree = &build_spanning_forest(&tri, ForestStrategy::MaxTightness, 0)[0];
        assert_eq!(tree.edges, vec![(0, 1), (1, 2)]);
    }

    /// Nash-Williams arboricity by brute force over vertex subsets.
    fn arboricity(inst: &CspInstance) -> usize {
        let n = inst.num_vars();
        let mut best = 0;
        for mask in 1u32..(1 << n) {
            let vs = mask.count_ones() as usize;
            if vs < 2 {
                continue;
            }
            let es = inst
                .edges()
                .iter()
                .filter(|e| mask & (1 << e.x) != 0 && mask & (1 << e.y) != 0)
                .count();
            best = best.max(es.div_ceil(vs - 1));
        }
        best
    }

    #[test]
    fn edge_partition_is_minimal_and_covering() {
        let k4 = complete(4, 2, |_, _| true);
        assert_eq!(build_spanning_forest(&k4, ForestStrategy::EdgePartition, 0).len(), 2);
        for seed in 0..40 {
            let inst = generate(&GenSpec { n: 7, m: 2, p1: 0.3 + 0.7 * (seed % 5) as f64 / 4.0, p2: 0.0, seed }).unwrap();
            let forests = build_spanning_forest(&inst, ForestStrategy::EdgePartition, seed);
            let mut covered: Vec<(Var, Var)> = forests.iter().flat_map(|t| t.edges.clone()).collect();
            covered.sort_unstable();
            let all: Vec<(Var, Var)> = inst.edges().iter().map(|e| (e.x, e.y)).collect();
            assert_eq!(covered, all, "every edge exactly once");
            assert_eq!(forests.len(), arboricity(&inst), "seed {seed}");
        }
    }
}
