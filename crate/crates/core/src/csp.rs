//! Binary CSP data model and constraint-graph analysis.
//!
//! Domains are index sets `0..m`. Each constraint is stored once, on the
//! ordered pair `(x, y)` with `x < y`, as a dense allow matrix; the `y -> x`
//! direction is a transposed view of the same matrix.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Variable index.
pub type Var = usize;

/// Dense boolean matrix: entry `(i, j)` is true iff the value pair `(x_i, y_j)`
/// is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AllowMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl AllowMatrix {
    pub fn full(rows: usize, cols: usize) -> Self {
        AllowMatrix {
            rows,
            cols,
            bits: vec![true; rows * cols],
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        AllowMatrix {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                bits.push(f(i, j));
            }
        }
        AllowMatrix { rows, cols, bits }
    }

    /// Builds a matrix from a list of allowed pairs; every other pair is disallowed.
    pub fn from_pairs(rows: usize, cols: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut m = AllowMatrix::empty(rows, cols);
        for &(i, j) in pairs {
            if i >= rows || j >= cols {
                return Err(Error::IndexOutOfRange(format!(
                    "pair ({i}, {j}) outside {rows}x{cols} matrix"
                )));
            }
            m.set(i, j, true);
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, allowed: bool) {
        self.bits[i * self.cols + j] = allowed;
    }

    pub fn transpose(&self) -> AllowMatrix {
        AllowMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn allowed_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Fraction of disallowed pairs.
    pub fn tightness(&self) -> f64 {
        if self.bits.is_empty() {
            return 0.0;
        }
        1.0 - self.allowed_count() as f64 / self.bits.len() as f64
    }

    /// Allowed pairs in row-major order.
    pub fn allowed_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |i| (0..self.cols).filter(move |&j| self.get(i, j)).map(move |j| (i, j)))
    }
}

/// A constraint seen from one of its endpoints: `allows(i, j)` tests the
/// pair (value `i` of the viewing variable, value `j` of the other).
#[derive(Debug, Clone, Copy)]
pub struct ArcView<'a> {
    matrix: &'a AllowMatrix,
    transposed: bool,
}

impl<'a> ArcView<'a> {
    #[inline]
    pub fn allows(&self, i: usize, j: usize) -> bool {
        if self.transposed {
            self.matrix.get(j, i)
        } else {
            self.matrix.get(i, j)
        }
    }

    /// Domain size of the viewing variable.
    pub fn rows(&self) -> usize {
        if self.transposed {
            self.matrix.cols()
        } else {
            self.matrix.rows()
        }
    }

    /// Domain size of the other variable.
    pub fn cols(&self) -> usize {
        if self.transposed {
            self.matrix.rows()
        } else {
            self.matrix.cols()
        }
    }

    pub fn to_matrix(&self) -> AllowMatrix {
        AllowMatrix::from_fn(self.rows(), self.cols(), |i, j| self.allows(i, j))
    }
}

/// A stored constraint, always with `x < y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub x: Var,
    pub y: Var,
    pub matrix: AllowMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CspInstance {
    domain_sizes: Vec<usize>,
    edges: Vec<Edge>,
    /// Per variable, sorted `(neighbor, edge index)`.
    adjacency: Vec<Vec<(Var, usize)>>,
    /// Unary domain masks; all-true unless the instance was conditioned.
    unary: Vec<Vec<bool>>,
    names: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphInfo {
    pub connected: bool,
    pub singly_connected: bool,
    pub diameter: usize,
    pub component_count: usize,
}

impl CspInstance {
    /// Validates and builds an instance. Each constraint is `(x, y, matrix)`
    /// with `matrix` of shape `|D_x| x |D_y|`; either orientation of the pair
    /// is accepted but each unordered pair may appear only once.
    pub fn new(domain_sizes: Vec<usize>, constraints: Vec<(Var, Var, AllowMatrix)>) -> Result<Self> {
        let n = domain_sizes.len();
        if let Some(x) = domain_sizes.iter().position(|&m| m == 0) {
            return Err(Error::IndexOutOfRange(format!("variable {x} has an empty domain")));
        }
        let mut edges = Vec::with_capacity(constraints.len());
        for (x, y, matrix) in constraints {
            if x >= n || y >= n {
                return Err(Error::IndexOutOfRange(format!(
                    "constraint ({x}, {y}) on a {n}-variable instance"
                )));
            }
            if x == y {
                return Err(Error::SelfLoop(x));
            }
            if matrix.rows() != domain_sizes[x] || matrix.cols() != domain_sizes[y] {
                return Err(Error::IndexOutOfRange(format!(
                    "constraint ({x}, {y}) has shape {}x{}, expected {}x{}",
                    matrix.rows(),
                    matrix.cols(),
                    domain_sizes[x],
                    domain_sizes[y]
                )));
            }
            let edge = if x < y {
                Edge { x, y, matrix }
            } else {
                Edge {
                    x: y,
                    y: x,
                    matrix: matrix.transpose(),
                }
            };
            edges.push(edge);
        }
        edges.sort_by_key(|e| (e.x, e.y));
        if let Some(w) = edges.windows(2).find(|w| (w[0].x, w[0].y) == (w[1].x, w[1].y)) {
            return Err(Error::DuplicateEdge(w[0].x, w[0].y));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            adjacency[e.x].push((e.y, idx));
            adjacency[e.y].push((e.x, idx));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let unary = domain_sizes.iter().map(|&m| vec![true; m]).collect();
        Ok(CspInstance {
            domain_sizes,
            edges,
            adjacency,
            unary,
            names: None,
        })
    }

    /// Uniform-domain convenience constructor from allowed-pair lists.
    pub fn from_pairs(n: usize, m: usize, constraints: &[(Var, Var, Vec<(usize, usize)>)]) -> Result<Self> {
        let cons = constraints
            .iter()
            .map(|(x, y, pairs)| Ok((*x, *y, AllowMatrix::from_pairs(m, m, pairs)?)))
            .collect::<Result<Vec<_>>>()?;
        CspInstance::new(vec![m; n], cons)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_vars() {
            return Err(Error::LengthMismatch {
                expected: self.num_vars(),
                got: names.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.domain_sizes.len()
    }

    #[inline]
    pub fn domain_size(&self, x: Var) -> usize {
        self.domain_sizes[x]
    }

    pub fn domain_sizes(&self) -> &[usize] {
        &self.domain_sizes
    }

    /// `Some(m)` when every variable has domain size `m`.
    pub fn uniform_domain(&self) -> Option<usize> {
        let first = *self.domain_sizes.first()?;
        self.domain_sizes.iter().all(|&m| m == first).then_some(first)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted `(neighbor, edge index)` pairs of `x`.
    #[inline]
    pub fn adjacent(&self, x: Var) -> &[(Var, usize)] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: Var) -> usize {
        self.adjacency[x].len()
    }

    /// View of edge `edge` from the side of `x`, which must be one of its endpoints.
    #[inline]
    pub fn arc(&self, x: Var, edge: usize) -> ArcView<'_> {
        let e = &self.edges[edge];
        debug_assert!(e.x == x || e.y == x);
        ArcView {
            matrix: &e.matrix,
            transposed: e.y == x,
        }
    }

    pub fn edge_between(&self, x: Var, y: Var) -> Option<usize> {
        let adj = self.adjacency.get(x)?;
        adj.binary_search_by_key(&y, |&(v, _)| v).ok().map(|p| adj[p].1)
    }

    /// The constraint between `x` and `y` seen from `x`.
    pub fn arc_between(&self, x: Var, y: Var) -> Result<ArcView<'_>> {
        self.check_var(x)?;
        self.check_var(y)?;
        self.edge_between(x, y)
            .map(|e| self.arc(x, e))
            .ok_or(Error::NoSuchEdge(x, y))
    }

    /// Neighbors of `x` in ascending order with the constraint seen from `x`.
    pub fn neighbors(&self, x: Var) -> Result<Vec<(Var, ArcView<'_>)>> {
        self.check_var(x)?;
        Ok(self.adjacency[x].iter().map(|&(y, e)| (y, self.arc(x, e))).collect())
    }

    pub fn unary(&self, x: Var) -> &[bool] {
        &self.unary[x]
    }

    pub fn is_conditioned(&self) -> bool {
        self.unary.iter().any(|u| u.iter().any(|&b| !b))
    }

    pub(crate) fn check_var(&self, x: Var) -> Result<()> {
        if x < self.num_vars() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(format!(
                "variable {x} on a {}-variable instance",
                self.num_vars()
            )))
        }
    }

    /// Restricts each assigned variable to its single value. Matrix rows and
    /// columns of other values are zeroed and the unary mask records the
    /// restriction, so domain indices are unchanged.
    pub fn condition(&self, assignments: &[(Var, usize)]) -> Result<CspInstance> {
        for &(x, v) in assignments {
            self.check_var(x)?;
            if v >= self.domain_sizes[x] {
                return Err(Error::IndexOutOfRange(format!(
                    "value {v} for variable {x} with domain size {}",
                    self.domain_sizes[x]
                )));
            }
        }
        let mut out = self.clone();
        for &(x, v) in assignments {
            for (i, live) in out.unary[x].iter_mut().enumerate() {
                *live &= i == v;
            }
        }
        out.mask_matrices();
        Ok(out)
    }

    /// Intersects the unary masks with `live` (for instance the domains left
    /// by arc consistency), masking matrices the same way as [`Self::condition`].
    pub fn restrict(&self, live: &[Vec<bool>]) -> Result<CspInstance> {
        if live.len() != self.num_vars() {
            return Err(Error::LengthMismatch {
                expected: self.num_vars(),
                got: live.len(),
            });
        }
        let mut out = self.clone();
        for (x, mask) in live.iter().enumerate() {
            if mask.len() != self.domain_sizes[x] {
                return Err(Error::LengthMismatch {
                    expected: self.domain_sizes[x],
                    got: mask.len(),
                });
            }
            for (u, &l) in out.unary[x].iter_mut().zip(mask) {
                *u &= l;
            }
        }
        out.mask_matrices();
        Ok(out)
    }

    fn mask_matrices(&mut self) {
        for e in &mut self.edges {
            let (ux, uy) = (&self.unary[e.x], &self.unary[e.y]);
            for i in 0..e.matrix.rows() {
                for j in 0..e.matrix.cols() {
                    if !(ux[i] && uy[j]) {
                        e.matrix.set(i, j, false);
                    }
                }
            }
        }
    }

    /// Conditions on every `Some` entry of a partial assignment.
    pub fn condition_partial(&self, partial: &[Option<usize>]) -> Result<CspInstance> {
        let pairs: Vec<(Var, usize)> = partial
            .iter()
            .enumerate()
            .filter_map(|(x, v)| v.map(|v| (x, v)))
            .collect();
        self.condition(&pairs)
    }

    /// Size of the assignment space, as a float (it overflows integers quickly).
    pub fn assignment_space(&self) -> f64 {
        self.domain_sizes.iter().map(|&m| m as f64).product()
    }

    /// Whether `value` for `x` is allowed by the unary mask and by every
    /// constraint with an assigned neighbor.
    pub fn consistent_with(&self, x: Var, value: usize, partial: &[Option<usize>]) -> bool {
        self.unary[x][value]
            && self.adjacency[x].iter().all(|&(y, e)| match partial[y] {
                Some(w) => self.arc(x, e).allows(value, w),
                None => true,
            })
    }

    /// Full verification of a complete assignment.
    pub fn is_solution(&self, assignment: &[usize]) -> bool {
        assignment.len() == self.num_vars()
            && assignment
                .iter()
                .enumerate()
                .all(|(x, &v)| v < self.domain_sizes[x] && self.unary[x][v])
            && self
                .edges
                .iter()
                .all(|e| e.matrix.get(assignment[e.x], assignment[e.y]))
    }

    /// Relabels variables: old variable `x` becomes `perm[x]`.
    pub fn permute_variables(&self, perm: &[Var]) -> Result<CspInstance> {
        let n = self.num_vars();
        check_permutation(perm, n)?;
        let mut sizes = vec![0; n];
        for x in 0..n {
            sizes[perm[x]] = self.domain_sizes[x];
        }
        let cons = self
            .edges
            .iter()
            .map(|e| (perm[e.x], perm[e.y], e.matrix.clone()))
            .collect();
        let mut out = CspInstance::new(sizes, cons)?;
        for x in 0..n {
            out.unary[perm[x]] = self.unary[x].clone();
        }
        Ok(out)
    }

    /// Relabels values of every variable: old value `i` of `x` becomes `perms[x][i]`.
    pub fn permute_values(&self, perms: &[Vec<usize>]) -> Result<CspInstance> {
        if perms.len() != self.num_vars() {
            return Err(Error::LengthMismatch {
                expected: self.num_vars(),
                got: perms.len(),
            });
        }
        for (x, p) in perms.iter().enumerate() {
            check_permutation(p, self.domain_sizes[x])?;
        }
        let cons = self
            .edges
            .iter()
            .map(|e| {
                let (px, py) = (&perms[e.x], &perms[e.y]);
                let mut mat = AllowMatrix::empty(e.matrix.rows(), e.matrix.cols());
                for (i, j) in e.matrix.allowed_pairs() {
                    mat.set(px[i], py[j], true);
                }
                (e.x, e.y, mat)
            })
            .collect();
        let mut out = CspInstance::new(self.domain_sizes.clone(), cons)?;
        for (x, p) in perms.iter().enumerate() {
            for (i, &live) in self.unary[x].iter().enumerate() {
                out.unary[x][p[i]] = live;
            }
        }
        Ok(out)
    }

    /// Adds a constraint to a copy of the instance.
    pub fn with_constraint(&self, x: Var, y: Var, matrix: AllowMatrix) -> Result<CspInstance> {
        let mut cons: Vec<_> = self.edges.iter().map(|e| (e.x, e.y, e.matrix.clone())).collect();
        cons.push((x, y, matrix));
        let mut out = CspInstance::new(self.domain_sizes.clone(), cons)?;
        out.unary = self.unary.clone();
        out.names = self.names.clone();
        Ok(out)
    }

    pub(crate) fn set_unary(&mut self, x: Var, mask: Vec<bool>) -> Result<()> {
        self.check_var(x)?;
        if mask.len() != self.domain_sizes[x] {
            return Err(Error::LengthMismatch {
                expected: self.domain_sizes[x],
                got: mask.len(),
            });
        }
        self.unary[x] = mask;
        Ok(())
    }

    /// Connectivity, acyclicity and diameter of the constraint graph. The
    /// diameter of a disconnected graph is the largest diameter among its
    /// components.
    pub fn graph_info(&self) -> GraphInfo {
        let n = self.num_vars();
        let mut component = vec![usize::MAX; n];
        let mut count = 0;
        for s in 0..n {
            if component[s] != usize::MAX {
                continue;
            }
            component[s] = count;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adjacency[u] {
                    if component[v] == usize::MAX {
                        component[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        let diameter = (0..n).map(|s| self.eccentricity(s)).max().unwrap_or(0);
        GraphInfo {
            connected: count <= 1,
            singly_connected: count <= 1 && self.edges.len() + count == n,
            diameter,
            component_count: count,
        }
    }

    /// BFS distances from `s`; unreachable vertices get `usize::MAX`.
    pub fn distances_from(&self, s: Var) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_vars()];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn eccentricity(&self, s: Var) -> usize {
        self.distances_from(s)
            .into_iter()
            .filter(|&d| d != usize::MAX)
            .max()
            .unwrap_or(0)
    }

    /// True when the constraint graph is a forest (acyclic, possibly disconnected).
    pub fn is_acyclic(&self) -> bool {
        let info = self.graph_info();
        self.edges.len() + info.component_count == self.num_vars()
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: perm.len(),
        });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::IndexOutOfRange(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}
