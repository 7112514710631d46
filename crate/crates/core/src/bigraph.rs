//! Subgraphs of the complete bipartite graph `K_{n,d}` as bit matrices.
//!
//! A [`BiGraph`] is an immutable edge set between `n` left and `d` right
//! vertices (both at most 64), stored as one row mask per left vertex plus the
//! transposed column masks. All higher-level objects in this crate are
//! collections of these graphs, so the operations here — degree vectors,
//! forest tests, compatibility, push/pull, single-vertex minors — carry the
//! whole load.

use crate::error::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const MAX_SIDE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Clone)]
pub struct BiGraph {
    n: usize,
    d: usize,
    rows: Vec<u64>,
    cols: Vec<u64>,
}

impl PartialEq for BiGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.d == other.d && self.rows == other.rows
    }
}

impl Eq for BiGraph {}

impl std::hash::Hash for BiGraph {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.n.hash(state);
        self.d.hash(state);
        self.rows.hash(state);
    }
}

impl PartialOrd for BiGraph {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BiGraph {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.n, self.d, &self.rows).cmp(&(other.n, other.d, &other.rows))
    }
}

fn check_ambient(n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 || n > MAX_SIDE || d > MAX_SIDE {
        return Err(Error::AmbientUnsupported { n, d });
    }
    Ok(())
}

impl BiGraph {
    pub fn empty(n: usize, d: usize) -> Result<Self> {
        check_ambient(n, d)?;
        Ok(BiGraph {
            n,
            d,
            rows: vec![0; n],
            cols: vec![0; d],
        })
    }

    /// Build from 0-based `(left, right)` pairs. Duplicate edges collapse.
    pub fn from_edges<I>(n: usize, d: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = BiGraph::empty(n, d)?;
        for (i, j) in edges {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
            if j >= d {
                return Err(Error::IndexOutOfRange { index: j, len: d });
            }
            g.rows[i] |= 1 << j;
            g.cols[j] |= 1 << i;
        }
        Ok(g)
    }

    pub fn from_rows(n: usize, d: usize, rows: Vec<u64>) -> Result<Self> {
        check_ambient(n, d)?;
        debug_assert_eq!(rows.len(), n);
        let mut cols = vec![0u64; d];
        for (i, &row) in rows.iter().enumerate() {
            debug_assert_eq!(row >> d, 0, "row mask exceeds ambient width");
            let mut m = row;
            while m != 0 {
                let j = m.trailing_zeros() as usize;
                cols[j] |= 1 << i;
                m &= m - 1;
            }
        }
        Ok(BiGraph { n, d, rows, cols })
    }

    /// The tope encoding a map `[n] -> [d]`: left vertex `i` matched to
    /// `to[i]`.
    pub fn from_map(d: usize, to: &[usize]) -> Result<Self> {
        BiGraph::from_edges(to.len(), d, to.iter().enumerate().map(|(i, &j)| (i, j)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn same_ambient(&self, other: &BiGraph) -> Result<()> {
        if self.n != other.n || self.d != other.d {
            return Err(Error::AmbientMismatch(self.n, self.d, other.n, other.d));
        }
        Ok(())
    }

    pub fn row(&self, i: usize) -> u64 {
        self.rows[i]
    }

    pub fn col(&self, j: usize) -> u64 {
        self.cols[j]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    /// Edges in lexicographic `(left, right)` order, 0-based.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            let mut m = self.rows[i];
            while m != 0 {
                let j = m.trailing_zeros() as usize;
                out.push((i, j));
                m &= m - 1;
            }
        }
        out
    }

    pub fn with_edge(&self, i: usize, j: usize) -> Self {
        let mut g = self.clone();
        g.rows[i] |= 1 << j;
        g.cols[j] |= 1 << i;
        g
    }

    pub fn without_edge(&self, i: usize, j: usize) -> Self {
        let mut g = self.clone();
        g.rows[i] &= !(1 << j);
        g.cols[j] &= !(1 << i);
        g
    }

    pub fn left_degree(&self, i: usize) -> usize {
        self.rows[i].count_ones() as usize
    }

    pub fn right_degree(&self, j: usize) -> usize {
        self.cols[j].count_ones() as usize
    }

    pub fn left_degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.left_degree(i)).collect()
    }

    pub fn right_degrees(&self) -> Vec<usize> {
        (0..self.d).map(|j| self.right_degree(j)).collect()
    }

    pub fn degree_vector(&self, side: Side) -> DegreeVector {
        DegreeVector {
            side,
            values: match side {
                Side::Left => self.left_degrees(),
                Side::Right => self.right_degrees(),
            },
        }
    }

    pub fn support_mask(&self, side: Side) -> u64 {
        match side {
            Side::Left => self
                .rows
                .iter()
                .enumerate()
                .filter(|(_, &r)| r != 0)
                .fold(0, |m, (i, _)| m | 1 << i),
            Side::Right => self
                .cols
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .fold(0, |m, (j, _)| m | 1 << j),
        }
    }

    pub fn union(&self, other: &BiGraph) -> Result<BiGraph> {
        self.same_ambient(other)?;
        Ok(BiGraph {
            n: self.n,
            d: self.d,
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a | b).collect(),
            cols: self.cols.iter().zip(&other.cols).map(|(a, b)| a | b).collect(),
        })
    }

    pub fn intersection(&self, other: &BiGraph) -> Result<BiGraph> {
        self.same_ambient(other)?;
        Ok(BiGraph {
            n: self.n,
            d: self.d,
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a & b).collect(),
            cols: self.cols.iter().zip(&other.cols).map(|(a, b)| a & b).collect(),
        })
    }

    pub fn difference(&self, other: &BiGraph) -> Result<BiGraph> {
        self.same_ambient(other)?;
        Ok(BiGraph {
            n: self.n,
            d: self.d,
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a & !b).collect(),
            cols: self.cols.iter().zip(&other.cols).map(|(a, b)| a & !b).collect(),
        })
    }

    pub fn is_subgraph_of(&self, other: &BiGraph) -> bool {
        self.n == other.n
            && self.d == other.d
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    pub fn symmetric_difference_count(&self, other: &BiGraph) -> usize {
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Swap the two sides: edge `(i,j)` becomes `(j,i)` in a `(d,n)` graph.
    pub fn transpose(&self) -> BiGraph {
        BiGraph {
            n: self.d,
            d: self.n,
            rows: self.cols.clone(),
            cols: self.rows.clone(),
        }
    }

    pub fn is_forest(&self) -> bool {
        let mut dsu = Dsu::new(self.n + self.d);
        for (i, j) in self.edges() {
            if !dsu.union(i, self.n + j) {
                return false;
            }
        }
        true
    }

    /// Acyclic with `n + d - 1` edges, which forces a connected spanning tree
    /// of the full ambient `K_{n,d}`.
    pub fn is_spanning_tree(&self) -> bool {
        self.edge_count() == self.n + self.d - 1 && self.is_forest()
    }

    /// Spanning tree of the subgraph induced on the non-isolated vertices.
    pub fn is_tree_on_support(&self) -> bool {
        let support = self.support_mask(Side::Left).count_ones() as usize
            + self.support_mask(Side::Right).count_ones() as usize;
        support > 0 && self.edge_count() == support - 1 && self.is_forest()
    }

    pub fn classify(&self) -> GraphClass {
        let ld = self.left_degrees();
        let rd = self.right_degrees();
        let forest = self.is_forest();
        GraphClass {
            forest,
            spanning_tree: forest && self.edge_count() == self.n + self.d - 1,
            tope: ld.iter().all(|&x| x == 1),
            right_semimatching: rd.iter().all(|&x| x == 1),
            partial_matching: ld.iter().all(|&x| x <= 1) && rd.iter().all(|&x| x <= 1),
            partial_left_semimatching: ld.iter().all(|&x| x <= 1),
            partial_right_semimatching: rd.iter().all(|&x| x <= 1),
        }
    }

    /// For a tope (left degrees all 1), the map `[n] -> [d]`.
    pub fn as_map(&self) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            if self.rows[i].count_ones() != 1 {
                return Err(Error::NotABijection(vec![i]));
            }
            out.push(self.rows[i].trailing_zeros() as usize);
        }
        Ok(out)
    }

    /// Distances from `(side, v)` along the tree, or `usize::MAX` where
    /// unreachable. Vertex ids are `i` on the left, `n + j` on the right.
    fn bfs_parents(&self, side: Side, v: usize) -> (Vec<usize>, Vec<usize>) {
        let total = self.n + self.d;
        let mut dist = vec![usize::MAX; total];
        let mut parent = vec![usize::MAX; total];
        let root = match side {
            Side::Left => v,
            Side::Right => self.n + v,
        };
        dist[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let neighbours: Vec<usize> = if u < self.n {
                mask_bits(self.rows[u]).map(|j| self.n + j).collect()
            } else {
                mask_bits(self.cols[u - self.n]).collect()
            };
            for w in neighbours {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        (dist, parent)
    }

    /// `push`: orient every edge of a tree away from the chosen vertex and
    /// keep, for a left root, the edges oriented right-to-left (and
    /// symmetrically for a right root). Concretely this keeps the parent edge
    /// of every same-side vertex other than the root.
    pub fn push(&self, side: Side, v: usize) -> Result<BiGraph> {
        self.push_pull(side, v, true)
    }

    /// `pull`: orient every edge towards the chosen vertex; keeps the parent
    /// edge of every opposite-side vertex.
    pub fn pull(&self, side: Side, v: usize) -> Result<BiGraph> {
        self.push_pull(side, v, false)
    }

    fn push_pull(&self, side: Side, v: usize, same_side_children: bool) -> Result<BiGraph> {
        let len = match side {
            Side::Left => self.n,
            Side::Right => self.d,
        };
        if v >= len {
            return Err(Error::IndexOutOfRange { index: v, len });
        }
        let deg = match side {
            Side::Left => self.left_degree(v),
            Side::Right => self.right_degree(v),
        };
        if deg == 0 {
            return Err(Error::EmptySupport);
        }
        if !self.is_tree_on_support() {
            return Err(Error::NotATree);
        }
        let (dist, parent) = self.bfs_parents(side, v);
        let support = self.edge_count() + 1;
        if dist.iter().filter(|&&x| x != usize::MAX).count() != support {
            return Err(Error::NotATree);
        }
        let mut out = BiGraph::empty(self.n, self.d)?;
        for child in 0..self.n + self.d {
            if parent[child] == usize::MAX || dist[child] == 0 {
                continue;
            }
            let child_is_left = child < self.n;
            let root_is_left = side == Side::Left;
            if (child_is_left == root_is_left) == same_side_children {
                let (i, j) = if child_is_left {
                    (child, parent[child] - self.n)
                } else {
                    (parent[child], child - self.n)
                };
                out.rows[i] |= 1 << j;
                out.cols[j] |= 1 << i;
            }
        }
        Ok(out)
    }

    /// Remove one vertex together with its incident edges, renumbering the
    /// remaining vertices on that side in order. Returns the smaller graph and
    /// the renumbering that maps old indices to new ones.
    pub fn single_vertex_minor(&self, side: Side, v: usize) -> Result<(BiGraph, Renumbering)> {
        let len = match side {
            Side::Left => self.n,
            Side::Right => self.d,
        };
        if v >= len {
            return Err(Error::IndexOutOfRange { index: v, len });
        }
        let (new_n, new_d) = match side {
            Side::Left => (self.n - 1, self.d),
            Side::Right => (self.n, self.d - 1),
        };
        check_ambient(new_n, new_d)?;
        let kept: Vec<usize> = (0..len).filter(|&x| x != v).collect();
        let graph = match side {
            Side::Left => {
                let rows: Vec<u64> = kept.iter().map(|&i| self.rows[i]).collect();
                BiGraph::from_rows(new_n, new_d, rows)?
            }
            Side::Right => {
                let rows: Vec<u64> = self
                    .rows
                    .iter()
                    .map(|&r| {
                        let low = r & ((1u64 << v) - 1);
                        let high = r >> (v + 1) << v;
                        low | high
                    })
                    .collect();
                BiGraph::from_rows(new_n, new_d, rows)?
            }
        };
        Ok((
            graph,
            Renumbering {
                side,
                removed: v,
                kept,
            },
        ))
    }
}

pub fn mask_bits(mask: u64) -> impl Iterator<Item = usize> {
    std::iter::successors(
        if mask == 0 { None } else { Some(mask) },
        |m| {
            let m = m & (m - 1);
            if m == 0 {
                None
            } else {
                Some(m)
            }
        },
    )
    .map(|m| m.trailing_zeros() as usize)
}

pub fn mask_of(indices: &[usize]) -> u64 {
    indices.iter().fold(0, |m, &i| m | 1 << i)
}

/// All k-element subsets of `0..n` as bitmasks, in ascending numeric order
/// (colexicographic on subsets).
pub fn k_subset_masks(n: usize, k: usize) -> Vec<u64> {
    assert!(k <= 64 && n <= 64);
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    let limit = if n == 64 { u64::MAX } else { (1 << n) - 1 };
    let mut mask: u64 = (1 << k) - 1;
    loop {
        out.push(mask);
        // Gosper's hack: next mask with the same popcount
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        let next = (((r ^ mask) >> 2) / c) | r;
        if next > limit || next < mask {
            break;
        }
        mask = next;
    }
    out
}

impl std::fmt::Debug for BiGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BiGraph({},{}){{", self.n, self.d)?;
        for (k, (i, j)) in self.edges().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "({},{})", i + 1, j + 1)?;
        }
        write!(f, "}}")
    }
}

impl std::fmt::Display for BiGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, (i, j)) in self.edges().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "({},{})", i + 1, j + 1)?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct BiGraphDto {
    n: usize,
    d: usize,
    edges: Vec<(usize, usize)>,
}

impl Serialize for BiGraph {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        BiGraphDto {
            n: self.n,
            d: self.d,
            edges: self.edges().iter().map(|&(i, j)| (i + 1, j + 1)).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BiGraph {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let dto = BiGraphDto::deserialize(deserializer)?;
        for &(i, j) in &dto.edges {
            if i == 0 || j == 0 {
                return Err(D::Error::custom("edge indices are 1-based"));
            }
        }
        BiGraph::from_edges(
            dto.n,
            dto.d,
            dto.edges.iter().map(|&(i, j)| (i - 1, j - 1)),
        )
        .map_err(D::Error::custom)
    }
}

/// Degree sequence of one side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeVector {
    pub side: Side,
    pub values: Vec<usize>,
}

impl DegreeVector {
    pub fn reduced(&self) -> Option<Vec<usize>> {
        if self.values.contains(&0) {
            return None;
        }
        Some(self.values.iter().map(|&x| x - 1).collect())
    }
}

/// Structural classification flags; see the methods on [`BiGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphClass {
    pub forest: bool,
    pub spanning_tree: bool,
    pub tope: bool,
    pub right_semimatching: bool,
    pub partial_matching: bool,
    pub partial_left_semimatching: bool,
    pub partial_right_semimatching: bool,
}

/// Order-preserving renumbering left behind by a single-vertex minor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Renumbering {
    pub side: Side,
    pub removed: usize,
    /// `kept[new_index] = old_index`
    pub kept: Vec<usize>,
}

impl Renumbering {
    pub fn new_index(&self, old: usize) -> Option<usize> {
        use std::cmp::Ordering::*;
        match old.cmp(&self.removed) {
            Less => Some(old),
            Equal => None,
            Greater => Some(old - 1),
        }
    }

    pub fn old_index(&self, new: usize) -> usize {
        self.kept[new]
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(size: usize) -> Self {
        Dsu {
            parent: (0..size).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False if `a` and `b` were already in the same class.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

// ---------------------------------------------------------------------------
// Compatibility
// ---------------------------------------------------------------------------

/// The union of two graphs with the first one's edges directed left-to-right
/// and the second one's right-to-left. Shared edges appear in both arc lists.
#[derive(Debug, Clone)]
pub struct CompatibilityGraph {
    pub n: usize,
    pub d: usize,
    /// Arcs `i -> j̄` contributed by the first graph.
    pub forward: Vec<(usize, usize)>,
    /// Arcs `j̄ -> i` contributed by the second graph.
    pub backward: Vec<(usize, usize)>,
}

impl CompatibilityGraph {
    pub fn build(g: &BiGraph, h: &BiGraph) -> Result<Self> {
        g.same_ambient(h)?;
        Ok(CompatibilityGraph {
            n: g.n(),
            d: g.d(),
            forward: g.edges(),
            backward: h.edges().into_iter().map(|(i, j)| (j, i)).collect(),
        })
    }

    /// A simple directed cycle of length at least four, if one exists.
    /// Returned as the vertex sequence, alternating left and right ids
    /// (`i` for left, `n + j` for right).
    pub fn nontrivial_cycle(&self) -> Option<Vec<usize>> {
        let g = BiGraph::from_edges(self.n, self.d, self.forward.iter().copied()).ok()?;
        let h = BiGraph::from_edges(self.n, self.d, self.backward.iter().map(|&(j, i)| (i, j)))
            .ok()?;
        nontrivial_cycle(&g, &h)
    }
}

/// Two forests are compatible when their compatibility graph has no simple
/// directed cycle of length four or more; equivalently, whenever both contain
/// a perfect matching between the same pair of vertex sets, the two matchings
/// coincide.
pub fn are_compatible(g: &BiGraph, h: &BiGraph) -> Result<bool> {
    g.same_ambient(h)?;
    if !g.is_forest() || !h.is_forest() {
        return Err(Error::NotAForest);
    }
    Ok(contracted_digraph(g, h).is_acyclic())
}

/// Witness for an incompatible pair: the vertex sets and the two distinct
/// perfect matchings between them. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompatWitness {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub matching_first: Vec<(usize, usize)>,
    pub matching_second: Vec<(usize, usize)>,
}

pub fn incompatibility_witness(g: &BiGraph, h: &BiGraph) -> Result<Option<CompatWitness>> {
    g.same_ambient(h)?;
    if !g.is_forest() || !h.is_forest() {
        return Err(Error::NotAForest);
    }
    let cycle = match nontrivial_cycle(g, h) {
        None => return Ok(None),
        Some(c) => c,
    };
    let n = g.n();
    let len = cycle.len();
    let mut witness = CompatWitness {
        left: Vec::new(),
        right: Vec::new(),
        matching_first: Vec::new(),
        matching_second: Vec::new(),
    };
    for k in 0..len {
        let u = cycle[k];
        let w = cycle[(k + 1) % len];
        if u < n {
            witness.left.push(u);
            witness.matching_first.push((u, w - n));
        } else {
            witness.right.push(u - n);
            witness.matching_second.push((w, u - n));
        }
    }
    witness.left.sort_unstable();
    witness.right.sort_unstable();
    witness.matching_first.sort_unstable();
    witness.matching_second.sort_unstable();
    debug_assert!(witness
        .matching_first
        .iter()
        .all(|&(i, j)| g.has_edge(i, j)));
    debug_assert!(witness
        .matching_second
        .iter()
        .all(|&(i, j)| h.has_edge(i, j)));
    debug_assert_ne!(witness.matching_first, witness.matching_second);
    Ok(Some(witness))
}

/// The residual digraph after contracting every shared edge. Shared edges are
/// two-arc cycles in the compatibility graph; contracting their connected
/// components leaves a digraph that has a cycle (self-loops included) exactly
/// when the original has a simple directed cycle of length four or more.
struct Contracted {
    /// Component id per vertex (left `i`, right `n + j`).
    comp: Vec<usize>,
    /// Arcs between components, tagged with the concrete edge endpoints
    /// `(tail_vertex, head_vertex, from_first_graph)`.
    arcs: Vec<(usize, usize, bool)>,
    comp_count: usize,
}

fn contracted_digraph(g: &BiGraph, h: &BiGraph) -> Contracted {
    let n = g.n();
    let total = n + g.d();
    let mut dsu = Dsu::new(total);
    for i in 0..n {
        let mut shared = g.row(i) & h.row(i);
        while shared != 0 {
            let j = shared.trailing_zeros() as usize;
            dsu.union(i, n + j);
            shared &= shared - 1;
        }
    }
    let mut comp = vec![usize::MAX; total];
    let mut comp_count = 0;
    for v in 0..total {
        let root = dsu.find(v);
        if comp[root] == usize::MAX {
            comp[root] = comp_count;
            comp_count += 1;
        }
        comp[v] = comp[root];
    }
    let mut arcs = Vec::new();
    for i in 0..n {
        let mut only_g = g.row(i) & !h.row(i);
        while only_g != 0 {
            let j = only_g.trailing_zeros() as usize;
            arcs.push((i, n + j, true));
            only_g &= only_g - 1;
        }
        let mut only_h = h.row(i) & !g.row(i);
        while only_h != 0 {
            let j = only_h.trailing_zeros() as usize;
            arcs.push((n + j, i, false));
            only_h &= only_h - 1;
        }
    }
    Contracted {
        comp,
        arcs,
        comp_count,
    }
}

impl Contracted {
    fn is_acyclic(&self) -> bool {
        let mut indegree = vec![0usize; self.comp_count];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.comp_count];
        for &(tail, head, _) in &self.arcs {
            let (a, b) = (self.comp[tail], self.comp[head]);
            if a == b {
                return false;
            }
            out[a].push(b);
            indegree[b] += 1;
        }
        let mut queue: Vec<usize> = (0..self.comp_count).filter(|&c| indegree[c] == 0).collect();
        let mut seen = queue.len();
        while let Some(c) = queue.pop() {
            for &b in &out[c] {
                indegree[b] -= 1;
                if indegree[b] == 0 {
                    queue.push(b);
                    seen += 1;
                }
            }
        }
        seen == self.comp_count
    }

    /// A directed cycle as a list of arc indices, if any.
    fn cycle(&self) -> Option<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.comp_count];
        for (idx, &(tail, head, _)) in self.arcs.iter().enumerate() {
            let (a, b) = (self.comp[tail], self.comp[head]);
            if a == b {
                return Some(vec![idx]);
            }
            out[self.comp[tail]].push(idx);
        }
        // Iterative DFS with an explicit stack; state 0 = unvisited,
        // 1 = on stack, 2 = done.
        let mut state = vec![0u8; self.comp_count];
        let mut via: Vec<usize> = vec![usize::MAX; self.comp_count];
        for start in 0..self.comp_count {
            if state[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            state[start] = 1;
            while let Some(&mut (c, ref mut next)) = stack.last_mut() {
                if *next < out[c].len() {
                    let arc = out[c][*next];
                    *next += 1;
                    let b = self.comp[self.arcs[arc].1];
                    match state[b] {
                        0 => {
                            via[b] = arc;
                            state[b] = 1;
                            stack.push((b, 0));
                        }
                        1 => {
                            // Found a back arc; unwind the cycle b -> ... -> c -> b.
                            let mut arcs = vec![arc];
                            let mut cur = c;
                            while cur != b {
                                let prev_arc = via[cur];
                                arcs.push(prev_arc);
                                cur = self.comp[self.arcs[prev_arc].0];
                            }
                            arcs.reverse();
                            return Some(arcs);
                        }
                        _ => {}
                    }
                } else {
                    state[c] = 2;
                    stack.pop();
                }
            }
        }
        None
    }
}

/// A simple directed cycle of length >= 4 in the compatibility graph of
/// `(g, h)`, as a cyclic vertex sequence. Arcs from `g` run left-to-right,
/// arcs from `h` right-to-left, and shared-edge stretches are expanded back
/// into paths through the shared forest.
fn nontrivial_cycle(g: &BiGraph, h: &BiGraph) -> Option<Vec<usize>> {
    let contracted = contracted_digraph(g, h);
    let arc_cycle = contracted.cycle()?;
    let shared = g.intersection(h).expect("same ambient");
    let n = g.n();
    let mut vertices = Vec::new();
    let len = arc_cycle.len();
    for k in 0..len {
        let (tail, head, _) = contracted.arcs[arc_cycle[k]];
        let (next_tail, _, _) = contracted.arcs[arc_cycle[(k + 1) % len]];
        vertices.push(tail);
        // Walk through the shared component from this arc's head to the next
        // arc's tail.
        let path = shared_path(&shared, n, head, next_tail);
        debug_assert!(path.first() == Some(&head));
        vertices.extend(&path[..path.len() - 1]);
    }
    debug_assert!(vertices.len() >= 4 && vertices.len() % 2 == 0);
    Some(vertices)
}

/// Unique path between two vertices of the shared forest (both in the same
/// component), as a vertex list including both endpoints.
fn shared_path(shared: &BiGraph, n: usize, from: usize, to: usize) -> Vec<usize> {
    if from == to {
        return vec![from];
    }
    let total = n + shared.d();
    let mut parent = vec![usize::MAX; total];
    let mut seen = vec![false; total];
    seen[from] = true;
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        let neighbours: Vec<usize> = if u < n {
            mask_bits(shared.row(u)).map(|j| n + j).collect()
        } else {
            mask_bits(shared.col(u - n)).collect()
        };
        for w in neighbours {
            if !seen[w] {
                seen[w] = true;
                parent[w] = u;
                queue.push_back(w);
            }
        }
    }
    debug_assert!(seen[to], "endpoints not in the same shared component");
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = parent[cur];
        path.push(cur);
    }
    path.reverse();
    path
}

/// Definitional compatibility: scan every pair of equal-size vertex subsets,
/// extract the at-most-one perfect matching each forest induces between them,
/// and demand agreement whenever both exist. Exponential in `n + d`; this is
/// the reference oracle for [`are_compatible`], not a replacement.
pub fn compatible_by_definition(g: &BiGraph, h: &BiGraph) -> Result<bool> {
    g.same_ambient(h)?;
    if !g.is_forest() || !h.is_forest() {
        return Err(Error::NotAForest);
    }
    let n = g.n();
    let d = g.d();
    for imask in 1u64..(1 << n) {
        let size = imask.count_ones();
        for jmask in 1u64..(1 << d) {
            if jmask.count_ones() != size {
                continue;
            }
            if let (Some(mg), Some(mh)) = (
                forest_matching(g, imask, jmask),
                forest_matching(h, imask, jmask),
            ) {
                if mg != mh {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// The unique perfect matching between `imask` and `jmask` inside a forest,
/// if one exists, found by repeatedly matching forced leaves.
pub fn forest_matching(g: &BiGraph, imask: u64, jmask: u64) -> Option<Vec<(usize, usize)>> {
    let n = g.n();
    let d = g.d();
    let mut left: Vec<u64> = (0..n)
        .map(|i| if imask >> i & 1 == 1 { g.row(i) & jmask } else { 0 })
        .collect();
    let mut right: Vec<u64> = (0..d)
        .map(|j| if jmask >> j & 1 == 1 { g.col(j) & imask } else { 0 })
        .collect();
    let mut remaining_left = imask;
    let mut remaining_right = jmask;
    let mut matching = Vec::new();

    while remaining_left != 0 || remaining_right != 0 {
        if mask_bits(remaining_left).any(|i| left[i] == 0)
            || mask_bits(remaining_right).any(|j| right[j] == 0)
        {
            return None;
        }
        // A leaf's partner is forced; in a forest some leaf always exists
        // while edges remain.
        let pair = mask_bits(remaining_left)
            .find(|&i| left[i].count_ones() == 1)
            .map(|i| (i, left[i].trailing_zeros() as usize))
            .or_else(|| {
                mask_bits(remaining_right)
                    .find(|&j| right[j].count_ones() == 1)
                    .map(|j| (right[j].trailing_zeros() as usize, j))
            });
        let (i, j) = pair?;
        matching.push((i, j));
        for jj in mask_bits(left[i]).collect::<Vec<_>>() {
            right[jj] &= !(1 << i);
        }
        for ii in mask_bits(right[j]).collect::<Vec<_>>() {
            left[ii] &= !(1 << j);
        }
        left[i] = 0;
        right[j] = 0;
        remaining_left &= !(1 << i);
        remaining_right &= !(1 << j);
    }
    matching.sort_unstable();
    Some(matching)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Test helper: build from 1-based edge pairs.
    pub(crate) fn graph(n: usize, d: usize, edges: &[(usize, usize)]) -> BiGraph {
        BiGraph::from_edges(n, d, edges.iter().map(|&(i, j)| (i - 1, j - 1))).unwrap()
    }

    /// The four spanning trees of `K_{2,2}`.
    fn k22_trees() -> [BiGraph; 4] {
        [
            graph(2, 2, &[(1, 1), (1, 2), (2, 1)]),
            graph(2, 2, &[(1, 1), (1, 2), (2, 2)]),
            graph(2, 2, &[(1, 1), (2, 1), (2, 2)]),
            graph(2, 2, &[(1, 2), (2, 1), (2, 2)]),
        ]
    }

    #[test]
    fn degrees_and_edges() {
        let g = graph(2, 4, &[(1, 1), (1, 2), (1, 3), (1, 4), (2, 1)]);
        assert_eq!(g.left_degrees(), vec![4, 1]);
        assert_eq!(g.right_degrees(), vec![2, 1, 1, 1]);
        assert_eq!(g.edge_count(), 5);
        assert_eq!(
            g.degree_vector(Side::Right).reduced(),
            Some(vec![1, 0, 0, 0])
        );
        assert!(g.is_spanning_tree());
        assert_eq!(g.edges()[0], (0, 0));
        assert_eq!(g.transpose().left_degrees(), vec![2, 1, 1, 1]);
    }

    #[test]
    fn four_cycle_is_not_a_forest() {
        let g = graph(2, 2, &[(1, 1), (1, 2), (2, 1), (2, 2)]);
        let class = g.classify();
        assert!(!class.forest);
        assert!(!class.spanning_tree);
        assert!(are_compatible(&g, &g).is_err());
    }

    #[test]
    fn classify_tope_and_matchings() {
        let tope = graph(3, 2, &[(1, 1), (2, 1), (3, 2)]);
        let class = tope.classify();
        assert!(class.tope && class.forest && !class.partial_right_semimatching);
        let pm = graph(2, 3, &[(1, 2), (2, 3)]);
        assert!(pm.classify().partial_matching);
    }

    #[test]
    fn compatibility_must_see_cycles_through_shared_edges() {
        // G = {(1,1),(2,2)} and H = {(1,1),(1,2),(2,1)} are incompatible: both
        // match {1,2} to {1̄,2̄}, via identity and swap respectively. The
        // witnessing alternating cycle runs through the shared edge (1,1),
        // so dropping shared edges instead of contracting them would wrongly
        // report this pair as compatible.
        let g = graph(2, 2, &[(1, 1), (2, 2)]);
        let h = graph(2, 2, &[(1, 1), (1, 2), (2, 1)]);
        assert!(!are_compatible(&g, &h).unwrap());
        assert!(!compatible_by_definition(&g, &h).unwrap());
        let w = incompatibility_witness(&g, &h).unwrap().unwrap();
        assert_eq!(w.left, vec![0, 1]);
        assert_eq!(w.right, vec![0, 1]);
        assert_eq!(w.matching_first, vec![(0, 0), (1, 1)]);
        assert_eq!(w.matching_second, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn compatible_pair_with_shared_edges() {
        let g = graph(2, 2, &[(1, 1), (2, 1), (2, 2)]);
        let h = graph(2, 2, &[(1, 1), (1, 2), (2, 2)]);
        assert!(are_compatible(&g, &h).unwrap());
        assert!(compatible_by_definition(&g, &h).unwrap());
        assert!(incompatibility_witness(&g, &h).unwrap().is_none());
    }

    #[test]
    fn k22_compatibility_matrix() {
        let [a, b, c, d] = k22_trees();
        // Position (1,0) trees: a, c; position (0,1) trees: b, d.
        let compatible_pairs = [(&a, &d), (&b, &c)];
        let incompatible_pairs = [(&a, &b), (&c, &d)];
        for (x, y) in compatible_pairs {
            assert!(are_compatible(x, y).unwrap());
            assert!(are_compatible(y, x).unwrap());
        }
        for (x, y) in incompatible_pairs {
            assert!(!are_compatible(x, y).unwrap());
            assert!(!are_compatible(y, x).unwrap());
        }
    }

    #[test]
    fn cycle_and_definitional_checks_agree_exhaustively_on_2_2() {
        let all: Vec<BiGraph> = (0u64..16)
            .map(|bits| {
                BiGraph::from_edges(2, 2, mask_bits(bits).map(|e| (e / 2, e % 2))).unwrap()
            })
            .filter(|g| g.is_forest())
            .collect();
        for g in &all {
            for h in &all {
                assert_eq!(
                    are_compatible(g, h).unwrap(),
                    compatible_by_definition(g, h).unwrap(),
                    "disagreement on {g} vs {h}"
                );
            }
        }
    }

    #[test]
    fn union_of_incompatible_trees_yields_two_matchings_witness() {
        // Union of two refinements of different cells in the running (2,4)
        // example; it clashes with the middle tree-types.
        let union = graph(2, 4, &[(1, 2), (1, 4), (2, 1), (2, 3)]);
        let tree2 = graph(2, 4, &[(1, 2), (1, 3), (1, 4), (2, 1), (2, 2)]);
        let tree3 = graph(2, 4, &[(1, 3), (1, 4), (2, 1), (2, 2), (2, 3)]);
        for tree in [&tree2, &tree3] {
            let w = incompatibility_witness(&union, tree).unwrap().unwrap();
            assert_eq!(w.left, vec![0, 1]);
            assert_eq!(w.right, vec![1, 2], "witness sets should be {{2̄,3̄}}");
        }
    }

    #[test]
    fn push_pull_on_a_small_path() {
        // Path 1̄ - 1 - 2̄ - 2.
        let t = graph(2, 2, &[(1, 1), (1, 2), (2, 2)]);
        assert_eq!(t.push(Side::Left, 0).unwrap(), graph(2, 2, &[(2, 2)]));
        assert_eq!(
            t.pull(Side::Left, 0).unwrap(),
            graph(2, 2, &[(1, 1), (1, 2)])
        );
        // Push and pull partition the tree.
        let union = t
            .push(Side::Left, 0)
            .unwrap()
            .union(&t.pull(Side::Left, 0).unwrap())
            .unwrap();
        assert_eq!(union, t);

        let single = graph(1, 1, &[(1, 1)]);
        assert!(single.push(Side::Left, 0).unwrap().is_empty());
        assert_eq!(single.pull(Side::Left, 0).unwrap(), single);
    }

    #[test]
    fn pull_at_right_vertex_is_a_left_semimatching() {
        let t = graph(2, 4, &[(1, 2), (1, 3), (1, 4), (2, 1), (2, 2)]);
        let pulled = t.pull(Side::Right, 0).unwrap();
        assert_eq!(pulled.left_degrees(), vec![1, 1]);
        assert_eq!(pulled, graph(2, 4, &[(1, 2), (2, 1)]));
        let pushed = t.push(Side::Right, 0).unwrap();
        assert_eq!(pushed.right_degrees(), vec![0, 1, 1, 1]);
        assert_eq!(pulled.union(&pushed).unwrap(), t);
    }

    #[test]
    fn push_pull_reject_non_trees() {
        let forest = graph(2, 2, &[(1, 1), (2, 2)]);
        assert!(matches!(forest.push(Side::Left, 0), Err(Error::NotATree)));
        let isolated = graph(2, 2, &[(1, 1)]);
        assert!(matches!(
            isolated.pull(Side::Left, 1),
            Err(Error::EmptySupport)
        ));
    }

    #[test]
    fn single_vertex_minor_renumbers() {
        let g = graph(2, 2, &[(1, 1), (1, 2), (2, 1)]);
        let (m, map) = g.single_vertex_minor(Side::Right, 0).unwrap();
        assert_eq!(m, graph(2, 1, &[(1, 1)]));
        assert_eq!(map.new_index(1), Some(0));
        assert_eq!(map.new_index(0), None);
        assert_eq!(map.old_index(0), 1);

        let g = graph(2, 2, &[(1, 1), (2, 2)]);
        let (m, _) = g.single_vertex_minor(Side::Left, 0).unwrap();
        assert_eq!(m, graph(1, 2, &[(1, 2)]));
    }

    #[test]
    fn json_round_trip_is_one_based_and_sorted() {
        let g = graph(2, 4, &[(2, 1), (1, 4), (1, 2)]);
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(text, r#"{"n":2,"d":4,"edges":[[1,2],[1,4],[2,1]]}"#);
        let back: BiGraph = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<BiGraph>(r#"{"n":1,"d":1,"edges":[[0,1]]}"#).is_err());
        assert!(serde_json::from_str::<BiGraph>(r#"{"n":1,"d":1,"edges":[[1,2]]}"#).is_err());
    }

    #[test]
    fn forest_matching_extracts_unique_matchings() {
        let g = graph(2, 2, &[(1, 1), (1, 2), (2, 1)]);
        assert_eq!(
            forest_matching(&g, 0b11, 0b11),
            Some(vec![(0, 1), (1, 0)])
        );
        assert_eq!(forest_matching(&g, 0b10, 0b10), None);
        assert_eq!(forest_matching(&g, 0b01, 0b10), Some(vec![(0, 1)]));
        assert_eq!(forest_matching(&g, 0, 0), Some(vec![]));
    }

    #[test]
    fn compatibility_graph_exposes_arcs() {
        let g = graph(2, 2, &[(1, 1), (2, 2)]);
        let h = graph(2, 2, &[(1, 1), (1, 2), (2, 1)]);
        let u = CompatibilityGraph::build(&g, &h).unwrap();
        assert_eq!(u.forward.len(), 2);
        assert_eq!(u.backward.len(), 3);
        let cycle = u.nontrivial_cycle().unwrap();
        assert_eq!(cycle.len(), 4);
        assert!(CompatibilityGraph::build(&g, &g)
            .unwrap()
            .nontrivial_cycle()
            .is_none());
    }
}
