//! Extended tope arrangements, pre-trianguloids and trianguloids.
//!
//! An arrangement stores one tope per lattice point of the dilated simplex
//! `nΔ^{d−1}`, keyed by its right degree vector. Three nested axiom levels
//! are validated independently: pairwise tope compatibility, the
//! combinatorial sector axiom (closure of the sets `T_v(i) = j̄` under moving
//! towards `n·e_j̄`), and the hexagon axiom around level-(n+1) points.
//!
//! The covector machinery lives here too: Δ-covectors (unions around a
//! right-side-up unit simplex, recovering the cells of a subdivision),
//! ∇-covectors (unions around an upside-down simplex, whose acyclicity
//! mirrors the right linkage axiom of ensembles), Chow covectors
//! (intersections), the large-union growth law, and the tug-of-war trace
//! that interpolates between two pulls of a Δ-covector.

use crate::bigraph::{BiGraph, Side};
use crate::error::{Error, Result};
use crate::lattice::{colex_rank, simplex_points, LatticePoint};
use crate::report::ValidationReport;
use rayon::prelude::*;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrangementLevel {
    TopeArrangement,
    PreTrianguloid,
    Trianguloid,
}

impl std::str::FromStr for ArrangementLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tope_arrangement" => Ok(ArrangementLevel::TopeArrangement),
            "pre_trianguloid" => Ok(ArrangementLevel::PreTrianguloid),
            "trianguloid" => Ok(ArrangementLevel::Trianguloid),
            other => Err(Error::Parse(format!("unknown arrangement level `{other}`"))),
        }
    }
}

/// Intersection of the topes around an upside-down unit simplex at `anchor`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChowCovector {
    pub graph: BiGraph,
    pub anchor: LatticePoint,
}

/// Union of the topes around an upside-down unit simplex at `anchor`. The
/// verdict records whether it is a tree with all left degrees 1 or 2; a
/// false verdict keeps the cyclic union as the diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NablaCovector {
    pub graph: BiGraph,
    pub anchor: LatticePoint,
    pub verdict: bool,
}

/// The interpolation of good orientations between two pulls of a Δ-covector:
/// `steps[k]` is the tope at position `anchor − e_{j̄_k}` along the path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TugOfWarTrace {
    pub anchor: LatticePoint,
    pub steps: Vec<(LatticePoint, BiGraph)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopeArrangement {
    n: usize,
    d: usize,
    // Dense by colexicographic rank of the position among level-n points.
    points: Vec<LatticePoint>,
    topes: Vec<BiGraph>,
}

impl TopeArrangement {
    pub fn new(n: usize, d: usize, entries: Vec<(LatticePoint, BiGraph)>) -> Result<Self> {
        let probe = BiGraph::empty(n, d)?;
        let points = simplex_points(d, n);
        let mut slots: Vec<Option<BiGraph>> = vec![None; points.len()];
        for (v, tope) in entries {
            v.expect_level(n)?;
            if v.dim() != d {
                return Err(Error::AmbientMismatch(n, d, n, v.dim()));
            }
            probe.same_ambient(&tope)?;
            if !tope.classify().tope {
                return Err(Error::Parse(format!(
                    "graph at position {v} is not a tope (left degrees must all be 1)"
                )));
            }
            if tope.right_degrees() != v.coords() {
                return Err(Error::Parse(format!(
                    "tope at position {v} has right degrees {:?}",
                    tope.right_degrees()
                )));
            }
            let rank = colex_rank(&points, &v).expect("level-n point is in the simplex");
            if let Some(existing) = &slots[rank] {
                if *existing != tope {
                    return Err(Error::TopeConflict(v.coords().to_vec()));
                }
            }
            slots[rank] = Some(tope);
        }
        let mut topes = Vec::with_capacity(points.len());
        for (rank, slot) in slots.into_iter().enumerate() {
            topes.push(slot.ok_or_else(|| Error::TopeMissing(points[rank].coords().to_vec()))?);
        }
        Ok(TopeArrangement { n, d, points, topes })
    }

    /// Reads one tope per lattice point out of a fine mixed subdivision:
    /// every left-functional subgraph of every cell is filed under its right
    /// degree vector, and overlapping cells must agree.
    pub fn from_fms(fms: &crate::fms::FineMixedSubdivision) -> Result<Self> {
        let (n, d) = (fms.n(), fms.d());
        let points = simplex_points(d, n);
        let mut slots: Vec<Option<BiGraph>> = vec![None; points.len()];
        for cell in fms.cells() {
            for tope in functional_subgraphs(cell) {
                let v = LatticePoint::new(tope.right_degrees());
                let rank = colex_rank(&points, &v).expect("tope position is level n");
                match &slots[rank] {
                    Some(existing) if *existing != tope => {
                        return Err(Error::TopeConflict(v.coords().to_vec()));
                    }
                    _ => slots[rank] = Some(tope),
                }
            }
        }
        let mut topes = Vec::with_capacity(points.len());
        for (rank, slot) in slots.into_iter().enumerate() {
            topes.push(slot.ok_or_else(|| Error::TopeMissing(points[rank].coords().to_vec()))?);
        }
        Ok(TopeArrangement { n, d, points, topes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.topes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topes.is_empty()
    }

    pub fn positions(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn tope(&self, v: &LatticePoint) -> Result<&BiGraph> {
        v.expect_level(self.n)?;
        if v.dim() != self.d {
            return Err(Error::AmbientMismatch(self.n, self.d, self.n, v.dim()));
        }
        let rank = colex_rank(&self.points, v).expect("level-n point is in the simplex");
        Ok(&self.topes[rank])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, &BiGraph)> {
        self.points.iter().zip(self.topes.iter())
    }

    /// Axiom check at the requested level. Structure (one tope per point,
    /// right degrees equal to the position) is enforced at construction.
    pub fn validate(&self, level: ArrangementLevel) -> ValidationReport {
        let mut report = ValidationReport::new();
        match level {
            ArrangementLevel::TopeArrangement => self.check_compatibility(&mut report),
            ArrangementLevel::PreTrianguloid => self.check_sector(&mut report),
            ArrangementLevel::Trianguloid => {
                self.check_sector(&mut report);
                self.check_hexagon(&mut report);
            }
        }
        report
    }

    fn check_compatibility(&self, report: &mut ValidationReport) {
        report.mark_checked("arrangement.compatibility");
        let pairs: Vec<(usize, usize)> = (0..self.topes.len())
            .flat_map(|a| (a + 1..self.topes.len()).map(move |b| (a, b)))
            .collect();
        let violations: Vec<_> = pairs
            .par_iter()
            .filter_map(|&(a, b)| {
                crate::bigraph::incompatibility_witness(&self.topes[a], &self.topes[b])
                    .expect("same ambient")
                    .map(|w| (a, b, w))
            })
            .collect();
        for (a, b, w) in violations {
            report.fail(
                "arrangement.compatibility",
                format!(
                    "topes at {} and {} are incompatible",
                    self.points[a], self.points[b]
                ),
                json!({
                    "first": self.points[a].coords(),
                    "second": self.points[b].coords(),
                    "left": crate::fms::one_based(&w.left),
                    "right": crate::fms::one_based(&w.right),
                }),
            );
        }
    }

    /// For adjacent positions v = u+e_j̄, v′ = u+e_j̄′ (j̄ ≠ j̄′), the
    /// j̄-neighbors of T_{v′} must be contained in those of T_v. Sizes are
    /// forced by the positions, so strictness comes for free.
    fn check_sector(&self, report: &mut ValidationReport) {
        report.mark_checked("arrangement.sector");
        if self.n == 0 {
            return;
        }
        for u in simplex_points(self.d, self.n - 1) {
            for j in 0..self.d {
                let inner = self.tope(&u.plus_unit(j)).expect("valid position");
                for jp in 0..self.d {
                    if jp == j {
                        continue;
                    }
                    let outer = self.tope(&u.plus_unit(jp)).expect("valid position");
                    if outer.col(j) & !inner.col(j) != 0 {
                        report.fail(
                            "arrangement.sector",
                            format!(
                                "j̄-neighbors do not nest from {} into {} at right vertex {}",
                                u.plus_unit(jp),
                                u.plus_unit(j),
                                j + 1
                            ),
                            json!({
                                "u": u.coords(),
                                "j": j + 1,
                                "j_prime": jp + 1,
                            }),
                        );
                    }
                }
            }
        }
    }

    /// Around every level-(n+1) point w, for pairwise distinct j̄₁, j̄₂, j̄₃
    /// with w_{j̄_k} ≥ 1: if the j̄₂-columns of T_{w−e_{j̄₁}} and
    /// T_{w−e_{j̄₃}} differ, the j̄₃-columns of T_{w−e_{j̄₁}} and
    /// T_{w−e_{j̄₂}} must agree. Non-distinct triples are excluded: with
    /// j̄₂ = j̄₃ the premise holds and the conclusion fails on size grounds
    /// alone, for every arrangement.
    fn check_hexagon(&self, report: &mut ValidationReport) {
        report.mark_checked("arrangement.hexagon");
        for w in simplex_points(self.d, self.n + 1) {
            let col = |j1: usize, j2: usize| {
                self.tope(&w.minus_unit(j1).expect("w_j ≥ 1"))
                    .expect("valid position")
                    .col(j2)
            };
            for j1 in 0..self.d {
                for j2 in 0..self.d {
                    for j3 in 0..self.d {
                        if j1 == j2 || j2 == j3 || j1 == j3 {
                            continue;
                        }
                        if w.get(j1) < 1 || w.get(j2) < 1 || w.get(j3) < 1 {
                            continue;
                        }
                        if col(j1, j2) != col(j3, j2) && col(j1, j3) != col(j2, j3) {
                            report.fail(
                                "arrangement.hexagon",
                                format!(
                                    "hexagon fails around {w} on right vertices ({}, {}, {})",
                                    j1 + 1,
                                    j2 + 1,
                                    j3 + 1
                                ),
                                json!({
                                    "w": w.coords(),
                                    "triple": [j1 + 1, j2 + 1, j3 + 1],
                                }),
                            );
                        }
                    }
                }
            }
        }
    }

    fn delta_union(&self, u: &LatticePoint) -> BiGraph {
        let mut union = BiGraph::empty(self.n, self.d).expect("valid ambient");
        for j in 0..self.d {
            union = union
                .union(self.tope(&u.plus_unit(j)).expect("valid position"))
                .expect("same ambient");
        }
        union
    }

    /// The Δ-covector 𝕋(u): union of the topes whose positions are the
    /// vertices of u + Δ^{d−1}. Asserts the tree shape with right degrees
    /// u + 1 and the pull recovery T_{u+e_j̄} = 𝕋(u)^{→j̄}.
    pub fn delta_covector(&self, u: &LatticePoint) -> Result<BiGraph> {
        if self.n == 0 {
            return Err(Error::EmptySupport);
        }
        u.expect_level(self.n - 1)?;
        let union = self.delta_union(u);
        let want: Vec<usize> = u.coords().iter().map(|&c| c + 1).collect();
        if !union.is_spanning_tree() || union.right_degrees() != want {
            return Err(Error::NotATree);
        }
        for j in 0..self.d {
            if &union.pull(Side::Right, j)? != self.tope(&u.plus_unit(j))? {
                return Err(Error::InvalidObject {
                    stage: "arrangement.delta_covector",
                    report: format!("pull towards right vertex {} does not recover the tope at {}",
                        j + 1,
                        u.plus_unit(j)),
                });
            }
        }
        Ok(union)
    }

    /// Non-erroring sweep of the Δ-linkage property over every level-(n−1)
    /// point; equivalent to the sector axiom, which the tests pin down.
    pub fn delta_linkage_report(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        report.mark_checked("arrangement.delta_linkage");
        if self.n == 0 {
            return report;
        }
        for u in simplex_points(self.d, self.n - 1) {
            if let Err(e) = self.delta_covector(&u) {
                report.fail(
                    "arrangement.delta_linkage",
                    format!("Δ-covector at {u} is not a doubled tree: {e}"),
                    json!({"u": u.coords()}),
                );
            }
        }
        report
    }

    /// The ∇-covector 𝕋̄(w): union of the topes at w − e_j̄ over the support
    /// of w. True verdict = spanning tree on [n] ⊔ supp(w) with left degrees
    /// in {1,2}; the decomposition T_{w−e_j̄} = Ω(w) ⊔ 𝕋̄(w)^{←j̄} is then
    /// asserted.
    pub fn nabla_covector(&self, w: &LatticePoint) -> Result<NablaCovector> {
        w.expect_level(self.n + 1)?;
        let support = w.support();
        let mut union = BiGraph::empty(self.n, self.d)?;
        for &j in &support {
            union = union
                .union(self.tope(&w.minus_unit(j).expect("support"))?)
                .expect("same ambient");
        }
        let verdict = union.is_tree_on_support()
            && (0..self.n).all(|i| matches!(union.left_degree(i), 1 | 2));
        if verdict {
            let chow = self.chow_covector(w)?;
            for &j in &support {
                let pushed = union.push(Side::Right, j)?;
                let tope = self.tope(&w.minus_unit(j).expect("support"))?;
                let recombined = chow.graph.union(&pushed).expect("same ambient");
                if &recombined != tope
                    || chow.graph.edge_count() + pushed.edge_count() != tope.edge_count()
                {
                    return Err(Error::InvalidObject {
                        stage: "arrangement.nabla_covector",
                        report: format!(
                            "tope at {} is not the disjoint union of the Chow covector and the push from {}",
                            w.minus_unit(j).expect("support"),
                            j + 1
                        ),
                    });
                }
            }
        }
        Ok(NablaCovector {
            graph: union,
            anchor: w.clone(),
            verdict,
        })
    }

    /// Sweep of the ∇-linkage property over every level-(n+1) point.
    pub fn nabla_report(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        report.mark_checked("arrangement.nabla_linkage");
        for w in simplex_points(self.d, self.n + 1) {
            match self.nabla_covector(&w) {
                Ok(cov) if cov.verdict => {}
                Ok(_) => report.fail(
                    "arrangement.nabla_linkage",
                    format!("∇-covector at {w} is not a doubled-left tree"),
                    json!({"w": w.coords()}),
                ),
                Err(e) => report.fail(
                    "arrangement.nabla_linkage",
                    format!("∇-covector at {w}: {e}"),
                    json!({"w": w.coords()}),
                ),
            }
        }
        report
    }

    /// The Chow covector Ω(w): intersection of the topes at w − e_j̄ over the
    /// support of w. Asserts the partial left semi-matching shape and right
    /// degrees w − 1_{supp(w)}.
    pub fn chow_covector(&self, w: &LatticePoint) -> Result<ChowCovector> {
        w.expect_level(self.n + 1)?;
        let support = w.support();
        let mut graph: Option<BiGraph> = None;
        for &j in &support {
            let tope = self.tope(&w.minus_unit(j).expect("support"))?;
            graph = Some(match graph {
                None => tope.clone(),
                Some(g) => g.intersection(tope).expect("same ambient"),
            });
        }
        let graph = graph.expect("level n+1 ≥ 1 has nonempty support");
        let want: Vec<usize> = (0..self.d)
            .map(|j| w.get(j).saturating_sub(usize::from(w.get(j) >= 1)))
            .collect();
        if !graph.classify().partial_left_semimatching || graph.right_degrees() != want {
            return Err(Error::InvalidObject {
                stage: "arrangement.chow_covector",
                report: format!(
                    "intersection at {w} has right degrees {:?}, wanted {:?}",
                    graph.right_degrees(),
                    want
                ),
            });
        }
        Ok(ChowCovector {
            graph,
            anchor: w.clone(),
        })
    }

    /// The reconstruction identity T_v = ⋃_j̄ Ω(v + e_j̄) over every position.
    pub fn chow_reconstruction_check(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        report.mark_checked("arrangement.chow_reconstruction");
        for (v, tope) in self.iter() {
            let mut union = BiGraph::empty(self.n, self.d).expect("valid ambient");
            let mut broken = false;
            for j in 0..self.d {
                match self.chow_covector(&v.plus_unit(j)) {
                    Ok(chow) => union = union.union(&chow.graph).expect("same ambient"),
                    Err(_) => {
                        broken = true;
                        break;
                    }
                }
            }
            if broken || &union != tope {
                report.fail(
                    "arrangement.chow_reconstruction",
                    format!("tope at {v} is not the union of its surrounding Chow covectors"),
                    json!({"position": v.coords()}),
                );
            }
        }
        report
    }

    /// Union growth law: for s at level n−m, the union of Δ-covectors over
    /// s + (m−1)Δ^{d−1} equals the union of the d topes at s + m·e_j̄, with
    /// right degree vector s + m·1. Both routes are computed and compared.
    pub fn large_tree_union(&self, s: &LatticePoint, m: usize) -> Result<BiGraph> {
        if m == 0 || m > self.n {
            return Err(Error::Parse(format!("growth step m = {m} must be in 1..={}", self.n)));
        }
        s.expect_level(self.n - m)?;
        let mut by_covectors = BiGraph::empty(self.n, self.d)?;
        for p in simplex_points(self.d, m - 1) {
            let u = s.plus(&p);
            by_covectors = by_covectors
                .union(&self.delta_union(&u))
                .expect("same ambient");
        }
        let mut by_topes = BiGraph::empty(self.n, self.d)?;
        for j in 0..self.d {
            let mut corner = s.clone();
            for _ in 0..m {
                corner = corner.plus_unit(j);
            }
            by_topes = by_topes.union(self.tope(&corner)?).expect("same ambient");
        }
        let want: Vec<usize> = s.coords().iter().map(|&c| c + m).collect();
        if by_covectors != by_topes || by_covectors.right_degrees() != want {
            return Err(Error::InvalidObject {
                stage: "arrangement.large_tree_union",
                report: format!(
                    "union over {s} + {}Δ disagrees between covector and corner-tope routes",
                    m - 1
                ),
            });
        }
        Ok(by_covectors)
    }

    /// Closure under refinement: every left-functional subgraph of every
    /// Δ-covector must be a stored tope. Requires every ∇-covector to be
    /// acyclic (the hypothesis of the underlying statement); a cyclic one
    /// makes the check inapplicable and is returned as an error rather than
    /// a failed verdict.
    pub fn refinement_closure_check(&self) -> Result<ValidationReport> {
        for w in simplex_points(self.d, self.n + 1) {
            let cov = self.nabla_covector(&w)?;
            if !cov.graph.is_forest() {
                return Err(Error::NablaCyclic(w.coords().to_vec()));
            }
        }
        let mut report = ValidationReport::new();
        report.mark_checked("arrangement.refinement_closure");
        if self.n == 0 {
            return Ok(report);
        }
        for u in simplex_points(self.d, self.n - 1) {
            let tree = self.delta_covector(&u)?;
            for tope in functional_subgraphs(&tree) {
                let v = LatticePoint::new(tope.right_degrees());
                if self.tope(&v)? != &tope {
                    report.fail(
                        "arrangement.refinement_closure",
                        format!("refinement of 𝕋({u}) with position {v} is not the stored tope"),
                        json!({"u": u.coords(), "position": v.coords()}),
                    );
                }
            }
        }
        Ok(report)
    }

    /// Tug-of-war between the j̄- and j̄′-pulls of 𝕋(u): walks the tree path
    /// from j̄ to j̄′ and emits the interpolating topes T_k at positions
    /// w − e_{j̄_k}, where w = u + e_j̄ + e_j̄′. Each step is cross-checked
    /// against the stored tope; a mismatch means some ∇-covector is cyclic.
    pub fn tug_of_war_trace(&self, u: &LatticePoint, j: usize, jp: usize) -> Result<TugOfWarTrace> {
        if j >= self.d || jp >= self.d {
            return Err(Error::IndexOutOfRange {
                index: j.max(jp),
                len: self.d,
            });
        }
        if j == jp {
            return Err(Error::Parse("tug-of-war endpoints must differ".into()));
        }
        let tree = self.delta_covector(u)?;
        // Bipartite tree path j̄ = j̄_0 —i_1— j̄_1 … —i_ℓ— j̄_ℓ = j̄′.
        let (lefts, rights) = tree_path(&tree, j, jp)?;
        let w = u.plus_unit(j).plus_unit(jp);
        let start = self.tope(&u.plus_unit(jp))?.clone();
        let mut steps = Vec::with_capacity(lefts.len() + 1);
        let mut current = start;
        steps.push((w.minus_unit(rights[0]).expect("positive"), current.clone()));
        for (k, &i) in lefts.iter().enumerate() {
            // Reorient hyper-edge i_k from j̄_k back towards j̄.
            current = current
                .without_edge(i, rights[k + 1])
                .with_edge(i, rights[k]);
            steps.push((w.minus_unit(rights[k + 1]).expect("positive"), current.clone()));
        }
        for (v, tope) in &steps {
            if self.tope(v)? != tope {
                return Err(Error::InvalidObject {
                    stage: "arrangement.tug_of_war",
                    report: format!("interpolated orientation at {v} is not the stored tope"),
                });
            }
        }
        Ok(TugOfWarTrace { anchor: w, steps })
    }
}

/// All left-functional subgraphs (one edge per left vertex) of `g`.
fn functional_subgraphs(g: &BiGraph) -> Vec<BiGraph> {
    let mut out = vec![BiGraph::empty(g.n(), g.d()).expect("valid ambient")];
    for i in 0..g.n() {
        let mut next = Vec::with_capacity(out.len() * g.left_degree(i).max(1));
        let mut mask = g.row(i);
        while mask != 0 {
            let j = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            for partial in &out {
                next.push(partial.with_edge(i, j));
            }
        }
        out = next;
    }
    out
}

/// The unique path between right vertices `j` and `jp` in a tree, returned
/// as (left vertices in order, right vertices in order). `rights` has one
/// more entry than `lefts` and starts at `j`.
fn tree_path(tree: &BiGraph, j: usize, jp: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    // DFS over the bipartite tree; never backtracking through the same left
    // vertex is enough to avoid revisits in a forest.
    let mut stack = vec![(j, usize::MAX, Vec::new(), vec![j])];
    while let Some((at, from, lefts, rights)) = stack.pop() {
        let mut mask = tree.col(at);
        while mask != 0 {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            if i == from {
                continue;
            }
            let mut jmask = tree.row(i);
            while jmask != 0 {
                let next = jmask.trailing_zeros() as usize;
                jmask &= jmask - 1;
                if next == at {
                    continue;
                }
                let mut lefts2 = lefts.clone();
                lefts2.push(i);
                let mut rights2 = rights.clone();
                rights2.push(next);
                if next == jp {
                    return Ok((lefts2, rights2));
                }
                stack.push((next, i, lefts2, rights2));
            }
        }
    }
    Err(Error::Parse(format!(
        "no path between right vertices {} and {} in the covector",
        j + 1,
        jp + 1
    )))
}
