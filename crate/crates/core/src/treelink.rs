//! Tree-linkage graphs and covectors.
//!
//! For a subdivision with cells 𝕋(u) and a lattice point `t` at level n−2,
//! the tree-linkage graph connects right vertices j̄ and j̄′ whenever the
//! cells at t+e_j̄ and t+e_j̄′ differ in a single edge swap; each end of such
//! an edge carries a *near label*, the left endpoint of the swapped edge on
//! its side. Decorating the vertices with the edges of the common core tope
//! T_t = ⋂_j̄ 𝕋(t+e_j̄) gives the tree-linkage covector, from which every
//! participating cell can be recovered by a pull.

use crate::bigraph::BiGraph;
use crate::error::{Error, Result};
use crate::fms::FineMixedSubdivision;
use crate::lattice::LatticePoint;
use crate::report::ValidationReport;
use serde_json::json;

/// An edge of the label tree on [d̄]; `near_u` is the near label at the `u`
/// end (a left index), `near_v` the one at the `v` end. All indices 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CovectorEdge {
    pub u: usize,
    pub v: usize,
    pub near_u: usize,
    pub near_v: usize,
}

impl CovectorEdge {
    fn near(&self, vertex: usize) -> Option<usize> {
        if vertex == self.u {
            Some(self.near_u)
        } else if vertex == self.v {
            Some(self.near_v)
        } else {
            None
        }
    }

    fn other(&self, vertex: usize) -> usize {
        if vertex == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeLinkageCovector {
    t: LatticePoint,
    n: usize,
    d: usize,
    edges: Vec<CovectorEdge>,
    // Per right vertex, the sorted left indices labeling it.
    vertex_labels: Vec<Vec<usize>>,
    core: BiGraph,
}

impl TreeLinkageCovector {
    /// Structural assembly without the subdivision-level invariants; used by
    /// deserialization and tests. The full invariants live in
    /// `check_invariants` and are asserted by `build_covector`.
    pub fn from_parts(
        t: LatticePoint,
        edges: Vec<CovectorEdge>,
        vertex_labels: Vec<Vec<usize>>,
        core: BiGraph,
    ) -> Result<Self> {
        let (n, d) = (core.n(), core.d());
        if t.dim() != d || vertex_labels.len() != d {
            return Err(Error::AmbientMismatch(n, d, n, t.dim()));
        }
        t.expect_level(n.checked_sub(2).ok_or(Error::TooFewLeftVertices)?)?;
        for e in &edges {
            for x in [e.u, e.v] {
                if x >= d {
                    return Err(Error::IndexOutOfRange { index: x, len: d });
                }
            }
            for i in [e.near_u, e.near_v] {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, len: n });
                }
            }
            if e.u == e.v {
                return Err(Error::Parse("label tree may not contain loops".into()));
            }
        }
        let mut vertex_labels = vertex_labels;
        for labels in &mut vertex_labels {
            labels.sort_unstable();
            labels.dedup();
            if let Some(&i) = labels.iter().find(|&&i| i >= n) {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
        }
        Ok(TreeLinkageCovector {
            t,
            n,
            d,
            edges,
            vertex_labels,
            core,
        })
    }

    pub fn t(&self) -> &LatticePoint {
        &self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn edges(&self) -> &[CovectorEdge] {
        &self.edges
    }

    pub fn vertex_labels(&self) -> &[Vec<usize>] {
        &self.vertex_labels
    }

    pub fn core_tope(&self) -> &BiGraph {
        &self.core
    }

    fn incident(&self, vertex: usize) -> impl Iterator<Item = &CovectorEdge> {
        self.edges.iter().filter(move |e| e.u == vertex || e.v == vertex)
    }

    /// BFS distances from `root` in the label tree; usize::MAX marks
    /// unreachable vertices (possible only for malformed covectors).
    fn distances(&self, root: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.d];
        dist[root] = 0;
        let mut frontier = vec![root];
        while let Some(at) = frontier.pop() {
            for e in self.incident(at) {
                let next = e.other(at);
                if dist[next] == usize::MAX {
                    dist[next] = dist[at] + 1;
                    frontier.push(next);
                }
            }
        }
        dist
    }

    /// The j̄-pull: the core tope plus, for each label-tree edge, the pair
    /// (near label, vertex) read off the end closer to j̄.
    pub fn covector_pull(&self, j: usize) -> Result<BiGraph> {
        if j >= self.d {
            return Err(Error::IndexOutOfRange { index: j, len: self.d });
        }
        let dist = self.distances(j);
        let mut graph = self.core.clone();
        for e in &self.edges {
            let (closer, near) = if dist[e.u] <= dist[e.v] {
                (e.u, e.near_u)
            } else {
                (e.v, e.near_v)
            };
            graph = graph.with_edge(near, closer);
        }
        Ok(graph)
    }

    /// The invariants a covector built from a subdivision always satisfies:
    /// a spanning label tree on [d̄], distinct near labels per edge, every
    /// left index as a vertex label exactly once, a core tope, the
    /// non-leaf-neighbor correspondence of near labels at each vertex, and
    /// augmented degrees t + 2·1.
    pub fn check_invariants(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        report.mark_checked("treelink.label_tree");
        report.mark_checked("treelink.near_labels");
        report.mark_checked("treelink.vertex_labels");
        report.mark_checked("treelink.core_tope");
        report.mark_checked("treelink.augmented_degree");
        if self.edges.len() + 1 != self.d || self.distances(0).contains(&usize::MAX) {
            report.fail(
                "treelink.label_tree",
                format!(
                    "label graph has {} edges on {} vertices or is disconnected",
                    self.edges.len(),
                    self.d
                ),
                json!({"edges": self.edges.len(), "d": self.d}),
            );
        }
        for e in &self.edges {
            if e.near_u == e.near_v {
                report.fail(
                    "treelink.near_labels",
                    format!(
                        "edge {{{}, {}}} carries the same near label {} on both ends",
                        e.u + 1,
                        e.v + 1,
                        e.near_u + 1
                    ),
                    json!({"u": e.u + 1, "v": e.v + 1, "near": e.near_u + 1}),
                );
            }
        }
        let mut seen = vec![0usize; self.n];
        for labels in &self.vertex_labels {
            for &i in labels {
                seen[i] += 1;
            }
        }
        for (i, &count) in seen.iter().enumerate() {
            if count != 1 {
                report.fail(
                    "treelink.vertex_labels",
                    format!("left index {} labels {count} vertices", i + 1),
                    json!({"left": i + 1, "count": count}),
                );
            }
        }
        if !self.core.classify().tope {
            report.fail(
                "treelink.core_tope",
                "core graph is not a tope",
                json!({"core": self.core}),
            );
        }
        for j in 0..self.d {
            let degree = self.incident(j).count() + self.vertex_labels[j].len();
            if degree != self.t.get(j) + 2 {
                report.fail(
                    "treelink.augmented_degree",
                    format!(
                        "augmented degree {degree} at right vertex {} differs from {}",
                        j + 1,
                        self.t.get(j) + 2
                    ),
                    json!({"j": j + 1, "degree": degree}),
                );
            }
        }
        report
    }

    /// Path-label laws along every simple path j̄₀ … j̄_ℓ: (b) a backward
    /// near label never matches a forward near label deeper along the path,
    /// and (c) a vertex label blocks its left index from all forward labels
    /// after it and all backward labels before it. The orientation corollary
    /// — all edges near-labeled i point away from the vertex labeled i — is
    /// checked as well.
    pub fn check_path_labels(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        report.mark_checked("treelink.path_facing_labels");
        report.mark_checked("treelink.path_vertex_labels");
        report.mark_checked("treelink.orientation");
        for start in 0..self.d {
            for end in 0..self.d {
                if start == end {
                    continue;
                }
                let path = self.path(start, end);
                let ell = path.len() - 1;
                // forward[k] = i_k, backward[k] = i′_k along the path.
                let mut forward = Vec::with_capacity(ell);
                let mut backward = vec![usize::MAX];
                for k in 0..ell {
                    let e = self
                        .incident(path[k])
                        .find(|e| e.other(path[k]) == path[k + 1])
                        .expect("path edge");
                    forward.push(e.near(path[k]).expect("endpoint"));
                    backward.push(e.near(path[k + 1]).expect("endpoint"));
                }
                // Indices k, k′ are the quantities under test and go into
                // the witness; iterator adapters would only obscure them.
                #[allow(clippy::needless_range_loop)]
                for k in 1..ell {
                    for kp in k..ell {
                        if backward[k] == forward[kp] {
                            report.fail(
                                "treelink.path_facing_labels",
                                format!(
                                    "near label {} points at itself along the path from {} to {}",
                                    backward[k] + 1,
                                    start + 1,
                                    end + 1
                                ),
                                json!({
                                    "path": path.iter().map(|&j| j + 1).collect::<Vec<_>>(),
                                    "k": k,
                                    "k_prime": kp,
                                }),
                            );
                        }
                    }
                }
                for (k, &j) in path.iter().enumerate() {
                    for &i in &self.vertex_labels[j] {
                        let forward_hit = (k..ell).any(|kp| forward[kp] == i);
                        let backward_hit = (1..=k.min(ell)).any(|kp| backward[kp] == i);
                        if forward_hit || backward_hit {
                            report.fail(
                                "treelink.path_vertex_labels",
                                format!(
                                    "near label {} points at the vertex label at {} along the path from {} to {}",
                                    i + 1,
                                    j + 1,
                                    start + 1,
                                    end + 1
                                ),
                                json!({
                                    "path": path.iter().map(|&j| j + 1).collect::<Vec<_>>(),
                                    "left": i + 1,
                                    "k": k,
                                }),
                            );
                        }
                    }
                }
            }
        }
        // Orientation corollary: near labels equal to i sit on the far end
        // of their edge as seen from the unique vertex labeled i.
        for i in 0..self.n {
            let Some(home) = (0..self.d).find(|&j| self.vertex_labels[j].contains(&i)) else {
                continue;
            };
            let dist = self.distances(home);
            for e in &self.edges {
                for (at, near) in [(e.u, e.near_u), (e.v, e.near_v)] {
                    if near == i && dist[at] != dist[e.other(at)] + 1 {
                        report.fail(
                            "treelink.orientation",
                            format!(
                                "edge label {} at right vertex {} points towards its home vertex {}",
                                i + 1,
                                at + 1,
                                home + 1
                            ),
                            json!({"left": i + 1, "at": at + 1, "home": home + 1}),
                        );
                    }
                }
            }
        }
        report
    }

    /// Vertices of the unique path between two right vertices, inclusive.
    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.d];
        let dist = {
            // Reuse BFS but track parents.
            let mut dist = vec![usize::MAX; self.d];
            dist[from] = 0;
            let mut frontier = vec![from];
            while let Some(at) = frontier.pop() {
                for e in self.incident(at) {
                    let next = e.other(at);
                    if dist[next] == usize::MAX {
                        dist[next] = dist[at] + 1;
                        parent[next] = at;
                        frontier.push(next);
                    }
                }
            }
            dist
        };
        debug_assert_ne!(dist[to], usize::MAX);
        let mut path = vec![to];
        let mut at = to;
        while at != from {
            at = parent[at];
            path.push(at);
        }
        path.reverse();
        path
    }
}

/// Builds the tree-linkage covector of a subdivision at `t` and asserts all
/// of its invariants, including that every cell 𝕋(t+e_j̄) is recovered by
/// the j̄-pull; a failure means the input was not a valid subdivision.
pub fn build_covector(fms: &FineMixedSubdivision, t: &LatticePoint) -> Result<TreeLinkageCovector> {
    let (n, d) = (fms.n(), fms.d());
    if n < 2 {
        return Err(Error::TooFewLeftVertices);
    }
    t.expect_level(n - 2)?;
    if t.dim() != d {
        return Err(Error::AmbientMismatch(n, d, n, t.dim()));
    }
    let trees: Vec<&BiGraph> = (0..d)
        .map(|j| fms.cell_at(&t.plus_unit(j)))
        .collect::<Result<_>>()?;
    let mut edges = Vec::new();
    for u in 0..d {
        for v in u + 1..d {
            let gained = trees[u].difference(trees[v]).expect("same ambient").edges();
            let lost = trees[v].difference(trees[u]).expect("same ambient").edges();
            if let ([(near_u, col_u)], [(near_v, col_v)]) = (&gained[..], &lost[..]) {
                // The swapped edges must sit in the columns whose degrees
                // differ between the two positions.
                if *col_u != u || *col_v != v {
                    return Err(Error::InvalidObject {
                        stage: "treelink.build",
                        report: format!(
                            "single-edge swap between cells at {} and {} is not in their own columns",
                            t.plus_unit(u),
                            t.plus_unit(v)
                        ),
                    });
                }
                edges.push(CovectorEdge {
                    u,
                    v,
                    near_u: *near_u,
                    near_v: *near_v,
                });
            }
        }
    }
    let mut core = trees[0].clone();
    for tree in &trees[1..] {
        core = core.intersection(tree).expect("same ambient");
    }
    let mut vertex_labels = vec![Vec::new(); d];
    for (i, j) in core.edges() {
        vertex_labels[j].push(i);
    }
    let covector = TreeLinkageCovector::from_parts(t.clone(), edges, vertex_labels, core)?;
    let mut report = covector.check_invariants();
    for (j, tree) in trees.iter().enumerate() {
        if covector.covector_pull(j)? != **tree {
            report.fail(
                "treelink.pull_reconstruction",
                format!("pull towards {} does not recover the cell at {}", j + 1, t.plus_unit(j)),
                json!({"j": j + 1}),
            );
        }
    }
    // Near labels at j̄ must biject with the non-leaf neighbors of j̄ in the
    // cell at t + e_j̄.
    for (j, tree) in trees.iter().enumerate() {
        let mut near: Vec<usize> = covector
            .incident(j)
            .map(|e| e.near(j).expect("endpoint"))
            .collect();
        near.sort_unstable();
        let mut expected: Vec<usize> = crate::bigraph::mask_bits(tree.col(j))
            .filter(|&i| tree.left_degree(i) >= 2)
            .collect();
        expected.sort_unstable();
        if near != expected {
            report.fail(
                "treelink.near_labels",
                format!(
                    "near labels at right vertex {} do not match the non-leaf neighbors of the cell at {}",
                    j + 1,
                    t.plus_unit(j)
                ),
                json!({"j": j + 1}),
            );
        }
    }
    if !report.verdict {
        return Err(Error::InvalidObject {
            stage: "treelink.build",
            report: report.summary(),
        });
    }
    Ok(covector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::simplex_points;

    fn graph(n: usize, d: usize, edges: &[(usize, usize)]) -> BiGraph {
        BiGraph::from_edges(n, d, edges.iter().map(|&(i, j)| (i - 1, j - 1))).unwrap()
    }

    fn point(coords: &[usize]) -> LatticePoint {
        LatticePoint::new(coords.to_vec())
    }

    #[test]
    fn staircase_covector_is_the_labeled_path() {
        let fms = crate::fms::tests::staircase_2_4();
        let cov = build_covector(&fms, &point(&[0, 0, 0, 0])).unwrap();
        let mut edges = cov.edges().to_vec();
        edges.sort_by_key(|e| (e.u, e.v));
        assert_eq!(
            edges,
            vec![
                CovectorEdge { u: 0, v: 1, near_u: 0, near_v: 1 },
                CovectorEdge { u: 1, v: 2, near_u: 0, near_v: 1 },
                CovectorEdge { u: 2, v: 3, near_u: 0, near_v: 1 },
            ]
        );
        assert_eq!(cov.core_tope(), &graph(2, 4, &[(1, 4), (2, 1)]));
        assert_eq!(cov.vertex_labels(), [vec![1], vec![], vec![], vec![0]].as_slice());
        assert!(cov.check_path_labels().verdict);
    }

    #[test]
    fn pulls_recover_every_staircase_cell() {
        let fms = crate::fms::tests::staircase_2_4();
        let cov = build_covector(&fms, &point(&[0, 0, 0, 0])).unwrap();
        for j in 0..4 {
            assert_eq!(
                &cov.covector_pull(j).unwrap(),
                fms.cell_at(&point(&[0, 0, 0, 0]).plus_unit(j)).unwrap()
            );
        }
    }

    #[test]
    fn three_left_vertices_give_single_edge_covectors() {
        let fms = crate::topearr::tests::staircase_3_2();
        for t in simplex_points(2, 1) {
            let cov = build_covector(&fms, &t).unwrap();
            assert_eq!(cov.edges().len(), 1);
            assert!(cov.check_invariants().verdict);
            assert!(cov.check_path_labels().verdict);
            for j in 0..2 {
                assert_eq!(
                    &cov.covector_pull(j).unwrap(),
                    fms.cell_at(&t.plus_unit(j)).unwrap()
                );
            }
        }
        // Core of the covector at (1,0): both cells keep {11, 21, 32}.
        let cov = build_covector(&fms, &point(&[1, 0])).unwrap();
        assert_eq!(cov.core_tope(), &graph(3, 2, &[(1, 1), (2, 1), (3, 2)]));
        assert_eq!(cov.vertex_labels(), [vec![0, 1], vec![2]].as_slice());
    }

    #[test]
    fn too_few_left_vertices_is_rejected() {
        let fms = FineMixedSubdivision::new(
            1,
            2,
            vec![graph(1, 2, &[(1, 1), (1, 2)])],
        )
        .unwrap();
        assert!(matches!(
            build_covector(&fms, &point(&[0, 0])),
            Err(Error::TooFewLeftVertices)
        ));
        let fms = crate::fms::tests::staircase_2_4();
        assert!(build_covector(&fms, &point(&[1, 0, 0, 0])).is_err());
    }

    #[test]
    fn path_label_checker_flags_facing_and_vertex_label_clashes() {
        // Synthetic covector on a 3-edge path with near label 3 facing
        // itself across the middle, plus a vertex label at the start that a
        // forward near label points at. Structurally fine, lawless.
        let cov = TreeLinkageCovector::from_parts(
            point(&[1, 1, 0, 0]),
            vec![
                CovectorEdge { u: 0, v: 1, near_u: 0, near_v: 2 },
                CovectorEdge { u: 1, v: 2, near_u: 1, near_v: 3 },
                CovectorEdge { u: 2, v: 3, near_u: 2, near_v: 1 },
            ],
            vec![vec![0], vec![], vec![], vec![3]],
            graph(4, 4, &[(1, 1), (2, 2), (3, 3), (4, 4)]),
        )
        .unwrap();
        let report = cov.check_path_labels();
        assert!(!report.verdict);
        assert!(report.first("treelink.path_facing_labels").is_some());
        assert!(report.first("treelink.path_vertex_labels").is_some());
        assert!(report.first("treelink.orientation").is_some());
    }

    #[test]
    fn every_covector_of_the_staircase_family_obeys_the_invariants() {
        let arrangements = [
            crate::fms::tests::staircase_2_4(),
            crate::topearr::tests::staircase_3_2(),
        ];
        for fms in &arrangements {
            for t in simplex_points(fms.d(), fms.n() - 2) {
                let cov = build_covector(fms, &t).unwrap();
                assert!(cov.check_invariants().verdict);
                assert!(cov.check_path_labels().verdict);
            }
        }
    }
}
