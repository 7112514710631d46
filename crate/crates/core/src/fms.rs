//! Fine mixed subdivisions of `nΔ^{d-1}`, encoded as collections of spanning
//! trees of `K_{n,d}`.
//!
//! A collection is a valid subdivision exactly when every cell is a spanning
//! tree, every internal edge of every cell has a unique partner tree sharing
//! all other edges (tree linkage), and the cells are pairwise compatible. When
//! the collection has the forced cardinality `C(n+d-2, n-1)`, either of the
//! last two axioms implies the other, which is what the `LinkageOnly` and
//! `CompatOnly` modes check.

use crate::bigraph::{incompatibility_witness, BiGraph};
use crate::error::{Error, Result};
use crate::lattice::{binomial, simplex_points, LatticePoint};
use crate::report::ValidationReport;
use serde_json::json;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    Full,
    LinkageOnly,
    CompatOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FineMixedSubdivision {
    n: usize,
    d: usize,
    cells: Vec<BiGraph>,
}

/// Outcome of a partner search for one edge of one cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkagePartner {
    /// The edge has a leaf endpoint; it lies on the boundary of the
    /// subdivided simplex and has no partner.
    Boundary,
    Partner { cell: usize, edge: (usize, usize) },
}

impl FineMixedSubdivision {
    /// Cells are stored sorted; duplicates are rejected outright since a
    /// subdivision is a set of cells.
    pub fn new(n: usize, d: usize, mut cells: Vec<BiGraph>) -> Result<Self> {
        let probe = BiGraph::empty(n, d)?;
        for cell in &cells {
            probe.same_ambient(cell)?;
        }
        cells.sort_unstable();
        for k in 1..cells.len() {
            if cells[k] == cells[k - 1] {
                return Err(Error::DuplicateCell(k));
            }
        }
        Ok(FineMixedSubdivision { n, d, cells })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn cells(&self) -> &[BiGraph] {
        &self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// `C(n+d-2, n-1)`, the number of cells of any fine mixed subdivision.
    pub fn expected_cell_count(&self) -> usize {
        binomial(self.n + self.d - 2, self.n - 1)
    }

    pub fn validate(&self, mode: ValidationMode) -> ValidationReport {
        let mut report = ValidationReport::new();
        report.mark_checked("fms.cell_is_tree");
        for (idx, cell) in self.cells.iter().enumerate() {
            if !cell.is_spanning_tree() {
                report.fail(
                    "fms.cell_is_tree",
                    format!("cell {idx} is not a spanning tree of K_{{{},{}}}", self.n, self.d),
                    json!({"cell": idx, "graph": cell}),
                );
            }
        }

        if mode != ValidationMode::Full {
            report.mark_checked("fms.cell_count");
            if self.cell_count() != self.expected_cell_count() {
                report.fail(
                    "fms.cell_count",
                    format!(
                        "{} cells, expected {}",
                        self.cell_count(),
                        self.expected_cell_count()
                    ),
                    json!({"found": self.cell_count(), "expected": self.expected_cell_count()}),
                );
            }
        }

        if matches!(mode, ValidationMode::Full | ValidationMode::LinkageOnly) {
            self.check_tree_linkage(&mut report);
        }
        if matches!(mode, ValidationMode::Full | ValidationMode::CompatOnly) {
            self.check_compatibility(&mut report);
        }
        report
    }

    fn check_tree_linkage(&self, report: &mut ValidationReport) {
        report.mark_checked("fms.tree_linkage");
        for (idx, cell) in self.cells.iter().enumerate() {
            if !cell.is_spanning_tree() {
                continue;
            }
            for (i, j) in cell.edges() {
                if cell.left_degree(i) < 2 || cell.right_degree(j) < 2 {
                    continue;
                }
                let partners = self.partners_of(idx, (i, j));
                if partners.len() != 1 {
                    report.fail(
                        "fms.tree_linkage",
                        format!(
                            "internal edge ({},{}) of cell {} has {} partner trees, expected 1",
                            i + 1,
                            j + 1,
                            idx,
                            partners.len()
                        ),
                        json!({
                            "cell": idx,
                            "edge": [i + 1, j + 1],
                            "partners": partners,
                        }),
                    );
                }
            }
        }
    }

    fn check_compatibility(&self, report: &mut ValidationReport) {
        report.mark_checked("fms.compatibility");
        for a in 0..self.cells.len() {
            for b in a + 1..self.cells.len() {
                if !self.cells[a].is_forest() || !self.cells[b].is_forest() {
                    continue; // already flagged by the tree check
                }
                let witness = incompatibility_witness(&self.cells[a], &self.cells[b])
                    .expect("forest inputs");
                if let Some(w) = witness {
                    report.fail(
                        "fms.compatibility",
                        format!("cells {a} and {b} are incompatible"),
                        json!({
                            "cells": [a, b],
                            "left": one_based(&w.left),
                            "right": one_based(&w.right),
                            "matching_first": one_based_pairs(&w.matching_first),
                            "matching_second": one_based_pairs(&w.matching_second),
                        }),
                    );
                }
            }
        }
    }

    fn partners_of(&self, idx: usize, edge: (usize, usize)) -> Vec<usize> {
        let rest = self.cells[idx].without_edge(edge.0, edge.1);
        // Component of `rest` holding the left endpoint of the removed edge.
        let (near_left, near_right) = component_around(&rest, edge.0);
        self.cells
            .iter()
            .enumerate()
            .filter(|&(other, cell)| {
                if other == idx
                    || cell.edge_count() != rest.edge_count() + 1
                    || !rest.is_subgraph_of(cell)
                {
                    return false;
                }
                let (ip, jp) = cell
                    .difference(&rest)
                    .expect("same ambient")
                    .edges()
                    .pop()
                    .expect("one extra edge");
                // The completing edge must join the two components the other
                // way round; a same-way completion is a cell overlapping this
                // one rather than sharing the facet.
                near_left >> ip & 1 == 0 && near_right >> jp & 1 == 1
            })
            .map(|(other, _)| other)
            .collect()
    }

    /// The partner tree of one edge, per the adjacency lemma: removing an
    /// internal edge of a cell leaves a graph contained in exactly one other
    /// cell whose completing edge crosses the opposite component pair, and
    /// that completing edge is the partner edge.
    pub fn tree_linkage_partner(&self, cell: usize, edge: (usize, usize)) -> Result<LinkagePartner> {
        let graph = self
            .cells
            .get(cell)
            .ok_or(Error::IndexOutOfRange { index: cell, len: self.cells.len() })?;
        if !graph.has_edge(edge.0, edge.1) {
            return Err(Error::Parse(format!(
                "cell {cell} has no edge ({},{})",
                edge.0 + 1,
                edge.1 + 1
            )));
        }
        if graph.left_degree(edge.0) < 2 || graph.right_degree(edge.1) < 2 {
            return Ok(LinkagePartner::Boundary);
        }
        let partners = self.partners_of(cell, edge);
        match partners.as_slice() {
            [other] => {
                let rest = graph.without_edge(edge.0, edge.1);
                let extra = self.cells[*other]
                    .difference(&rest)?
                    .edges()
                    .pop()
                    .expect("partner differs in exactly one edge");
                Ok(LinkagePartner::Partner {
                    cell: *other,
                    edge: extra,
                })
            }
            [] => Err(Error::InvalidObject {
                stage: "tree_linkage_partner",
                report: format!(
                    "internal edge ({},{}) of cell {cell} has no partner",
                    edge.0 + 1,
                    edge.1 + 1
                ),
            }),
            _ => Err(Error::InvalidObject {
                stage: "tree_linkage_partner",
                report: format!(
                    "internal edge ({},{}) of cell {cell} has {} partners",
                    edge.0 + 1,
                    edge.1 + 1,
                    partners.len()
                ),
            }),
        }
    }

    /// Map from cell position to cell index. Fails when two cells claim the
    /// same position, which cannot happen in a valid subdivision.
    pub fn position_map(&self) -> Result<HashMap<LatticePoint, usize>> {
        let mut map = HashMap::with_capacity(self.cells.len());
        for (idx, cell) in self.cells.iter().enumerate() {
            let pos = position(cell)?;
            if let Some(prev) = map.insert(pos.clone(), idx) {
                let _ = prev;
                return Err(Error::PositionCollision(pos.0));
            }
        }
        Ok(map)
    }

    pub fn cell_at(&self, u: &LatticePoint) -> Result<&BiGraph> {
        for cell in &self.cells {
            if position(cell)?.0 == u.0 {
                return Ok(cell);
            }
        }
        Err(Error::NoCellAtPosition(u.0.clone()))
    }

    /// Both halves of the degree bijection: reduced right degrees sweep the
    /// lattice points of `(n-1)Δ^{d-1}` exactly once, reduced left degrees
    /// those of `(d-1)Δ^{n-1}`.
    pub fn check_degree_bijection(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        let right: Vec<Vec<usize>> = self
            .cells
            .iter()
            .map(|c| c.right_degrees().iter().map(|&x| x.saturating_sub(1)).collect())
            .collect();
        let left: Vec<Vec<usize>> = self
            .cells
            .iter()
            .map(|c| c.left_degrees().iter().map(|&x| x.saturating_sub(1)).collect())
            .collect();
        bijection_check(
            &mut report,
            "fms.position_bijection",
            right,
            simplex_points(self.d, self.n - 1),
        );
        bijection_check(
            &mut report,
            "fms.left_degree_bijection",
            left,
            simplex_points(self.n, self.d - 1),
        );
        report
    }

    /// Number of unit-simplex cells positioned inside `origin + (m-1)Δ`. The
    /// spread-out corollary bounds this by `m` for any valid subdivision.
    pub fn spread_out_count(&self, origin: &LatticePoint, m: usize) -> Result<usize> {
        if m < 1 || m > self.n {
            return Err(Error::IndexOutOfRange { index: m, len: self.n });
        }
        if origin.dim() != self.d {
            return Err(Error::AmbientMismatch(self.n, self.d, self.n, origin.dim()));
        }
        origin.expect_level(self.n - m)?;
        let mut count = 0;
        for cell in &self.cells {
            if is_unmixed(cell) && position(cell)?.dominates(origin) {
                count += 1;
            }
        }
        Ok(count)
    }
}

/// Vertex masks of the connected component of `g` containing the left vertex
/// `start`, by alternating closure over rows and columns.
fn component_around(g: &BiGraph, start: usize) -> (u64, u64) {
    let mut left = 1u64 << start;
    let mut right = 0u64;
    loop {
        let mut changed = false;
        for i in 0..g.n() {
            if left >> i & 1 == 1 {
                let add = g.row(i) & !right;
                if add != 0 {
                    right |= add;
                    changed = true;
                }
            }
        }
        for j in 0..g.d() {
            if right >> j & 1 == 1 {
                let add = g.col(j) & !left;
                if add != 0 {
                    left |= add;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    (left, right)
}

/// Position of a cell: its reduced right degree vector, a lattice point of
/// `(n-1)Δ^{d-1}`.
pub fn position(cell: &BiGraph) -> Result<LatticePoint> {
    let mut coords = Vec::with_capacity(cell.d());
    for j in 0..cell.d() {
        let deg = cell.right_degree(j);
        if deg == 0 {
            return Err(Error::NotACell(j));
        }
        coords.push(deg - 1);
    }
    Ok(LatticePoint(coords))
}

/// Vertices of the base simplex of a cell: `position + e_j` for each `j`.
pub fn base_simplex_vertices(cell: &BiGraph) -> Result<Vec<LatticePoint>> {
    let pos = position(cell)?;
    Ok((0..cell.d()).map(|j| pos.plus_unit(j)).collect())
}

/// A cell that is a translate of the unit simplex: one left vertex sees the
/// whole right side and every other left vertex is a leaf.
pub fn is_unmixed(cell: &BiGraph) -> bool {
    cell.is_spanning_tree() && (0..cell.n()).any(|i| cell.left_degree(i) == cell.d())
}

fn bijection_check(
    report: &mut ValidationReport,
    rule: &str,
    reduced: Vec<Vec<usize>>,
    expected: Vec<LatticePoint>,
) {
    report.mark_checked(rule);
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for r in &reduced {
        *counts.entry(r.clone()).or_default() += 1;
    }
    for point in &expected {
        match counts.remove(point.coords()) {
            Some(1) => {}
            Some(k) => report.fail(
                rule,
                format!("lattice point {point} is hit {k} times"),
                json!({"point": point, "count": k}),
            ),
            None => report.fail(
                rule,
                format!("lattice point {point} is not hit"),
                json!({"point": point, "count": 0}),
            ),
        }
    }
    for (stray, k) in counts {
        report.fail(
            rule,
            format!("degree vector {stray:?} lies outside the simplex"),
            json!({"point": stray, "count": k}),
        );
    }
}

pub(crate) fn one_based(xs: &[usize]) -> Vec<usize> {
    xs.iter().map(|&x| x + 1).collect()
}

pub(crate) fn one_based_pairs(xs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    xs.iter().map(|&(a, b)| (a + 1, b + 1)).collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::bigraph::Side;

    fn graph(n: usize, d: usize, edges: &[(usize, usize)]) -> BiGraph {
        BiGraph::from_edges(n, d, edges.iter().map(|&(i, j)| (i - 1, j - 1))).unwrap()
    }

    /// The staircase subdivision of 2Δ^3.
    pub(crate) fn staircase_2_4() -> FineMixedSubdivision {
        FineMixedSubdivision::new(
            2,
            4,
            vec![
                graph(2, 4, &[(1, 1), (1, 2), (1, 3), (1, 4), (2, 1)]),
                graph(2, 4, &[(1, 2), (1, 3), (1, 4), (2, 1), (2, 2)]),
                graph(2, 4, &[(1, 3), (1, 4), (2, 1), (2, 2), (2, 3)]),
                graph(2, 4, &[(1, 4), (2, 1), (2, 2), (2, 3), (2, 4)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn staircase_is_valid_in_all_modes() {
        let s = staircase_2_4();
        assert_eq!(s.cell_count(), 4);
        assert_eq!(s.expected_cell_count(), 4);
        for mode in [
            ValidationMode::Full,
            ValidationMode::LinkageOnly,
            ValidationMode::CompatOnly,
        ] {
            let report = s.validate(mode);
            assert!(report.verdict, "{mode:?}: {report}");
        }
        assert!(s.check_degree_bijection().verdict);
    }

    #[test]
    fn staircase_positions_are_unit_vectors() {
        let s = staircase_2_4();
        let map = s.position_map().unwrap();
        assert_eq!(map.len(), 4);
        for j in 0..4 {
            let mut coords = vec![0; 4];
            coords[j] = 1;
            assert!(map.contains_key(&LatticePoint::new(coords)));
        }
        let first = s.cell_at(&LatticePoint::new(vec![1, 0, 0, 0])).unwrap();
        assert_eq!(first.left_degrees(), vec![4, 1]);
        assert_eq!(
            base_simplex_vertices(first).unwrap()[0].coords(),
            &[2, 0, 0, 0]
        );
    }

    #[test]
    fn partner_search_matches_hand_computation() {
        let s = staircase_2_4();
        let map = s.position_map().unwrap();
        let t1 = map[&LatticePoint::new(vec![1, 0, 0, 0])];
        let t2 = map[&LatticePoint::new(vec![0, 1, 0, 0])];
        // Internal edge (1,1̄) of the first staircase tree pairs with edge
        // (2,2̄) of the second.
        match s.tree_linkage_partner(t1, (0, 0)).unwrap() {
            LinkagePartner::Partner { cell, edge } => {
                assert_eq!(cell, t2);
                assert_eq!(edge, (1, 1));
            }
            other => panic!("expected partner, got {other:?}"),
        }
        // Edge (2,1̄) has the leaf endpoint 2, so it is boundary.
        assert_eq!(
            s.tree_linkage_partner(t1, (1, 0)).unwrap(),
            LinkagePartner::Boundary
        );
    }

    #[test]
    fn duplicate_cells_are_rejected() {
        let a = graph(2, 2, &[(1, 1), (1, 2), (2, 1)]);
        let err = FineMixedSubdivision::new(2, 2, vec![a.clone(), a]).unwrap_err();
        assert!(matches!(err, Error::DuplicateCell(_)));
    }

    #[test]
    fn same_position_pair_fails_every_mode() {
        // Both trees sit at position (0,1); the pair is neither linked nor
        // compatible, and the bijection check reports the double hit.
        let b = graph(2, 2, &[(1, 1), (1, 2), (2, 2)]);
        let d = graph(2, 2, &[(1, 2), (2, 1), (2, 2)]);
        let s = FineMixedSubdivision::new(2, 2, vec![b, d]).unwrap();
        for mode in [
            ValidationMode::Full,
            ValidationMode::LinkageOnly,
            ValidationMode::CompatOnly,
        ] {
            assert!(!s.validate(mode).verdict, "{mode:?} should fail");
        }
        let bij = s.check_degree_bijection();
        assert!(!bij.verdict);
        assert!(bij.first("fms.position_bijection").is_some());
        assert!(s.position_map().is_err());
    }

    #[test]
    fn valid_2_2_subdivision() {
        let s = FineMixedSubdivision::new(
            2,
            2,
            vec![
                graph(2, 2, &[(1, 1), (1, 2), (2, 1)]),
                graph(2, 2, &[(1, 2), (2, 1), (2, 2)]),
            ],
        )
        .unwrap();
        assert!(s.validate(ValidationMode::Full).verdict);
        assert!(s.check_degree_bijection().verdict);
    }

    #[test]
    fn single_cell_families() {
        // n = 1: the star is the unique cell and has no internal edges.
        let star = FineMixedSubdivision::new(1, 4, vec![graph(1, 4, &[(1, 1), (1, 2), (1, 3), (1, 4)])])
            .unwrap();
        assert!(star.validate(ValidationMode::Full).verdict);
        assert!(star.validate(ValidationMode::LinkageOnly).verdict);
        // d = 1 likewise.
        let spine = FineMixedSubdivision::new(3, 1, vec![graph(3, 1, &[(1, 1), (2, 1), (3, 1)])])
            .unwrap();
        assert!(spine.validate(ValidationMode::Full).verdict);
        assert_eq!(spine.expected_cell_count(), 1);
    }

    #[test]
    fn spread_out_counts() {
        let s = staircase_2_4();
        // Whole simplex: the two staircase ends are the unit-simplex cells.
        assert_eq!(
            s.spread_out_count(&LatticePoint::zero(4), 2).unwrap(),
            2
        );
        // Corner sub-simplices of size 1.
        assert_eq!(
            s.spread_out_count(&LatticePoint::new(vec![1, 0, 0, 0]), 1).unwrap(),
            1
        );
        assert_eq!(
            s.spread_out_count(&LatticePoint::new(vec![0, 1, 0, 0]), 1).unwrap(),
            0
        );
        assert!(s.spread_out_count(&LatticePoint::zero(4), 3).is_err());
        assert!(s
            .spread_out_count(&LatticePoint::new(vec![1, 0, 0, 0]), 2)
            .is_err());
    }

    #[test]
    fn large_tree_union_has_shifted_degrees() {
        let s = staircase_2_4();
        // Union over all positions dominating 0: every cell; right degrees
        // must come out as 0 + m·1 with m = 2.
        let mut union = BiGraph::empty(2, 4).unwrap();
        for cell in s.cells() {
            union = union.union(cell).unwrap();
        }
        assert_eq!(union.right_degrees(), vec![2, 2, 2, 2]);
        assert_eq!(union.degree_vector(Side::Right).values, vec![2, 2, 2, 2]);
    }

    #[test]
    fn position_requires_full_right_support() {
        let g = graph(2, 2, &[(1, 1), (2, 1)]);
        assert!(matches!(position(&g), Err(Error::NotACell(1))));
    }
}
