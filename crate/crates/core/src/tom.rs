//! Generic tropical oriented matroids.
//!
//! A type is a subgraph of `K_{n,d}`; it is *honest* when every left vertex
//! has degree at least one, and a *semitype* otherwise. A generic tropical
//! oriented matroid is a set of acyclic honest types satisfying four axioms
//! (boundary, surrounding, compatibility, elimination); an extended one also
//! carries the semitypes obtained by emptying coordinates. The whole object is
//! determined by its maximal types, which are spanning trees, so the struct
//! can store just those and expand lazily.

use crate::bigraph::{are_compatible, incompatibility_witness, BiGraph};
use crate::error::{Error, Result};
use crate::fms::{one_based, one_based_pairs};
use crate::report::ValidationReport;
use rayon::prelude::*;
use serde_json::json;
use std::collections::BTreeSet;

/// Every left vertex sees at least one right vertex.
pub fn is_honest(g: &BiGraph) -> bool {
    (0..g.n()).all(|i| g.row(i) != 0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Storage {
    /// Maximal types only; the type set is their subgraph closure.
    Generative(Vec<BiGraph>),
    /// Explicit type set, kept verbatim for validation.
    Explicit(BTreeSet<BiGraph>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenericTom {
    n: usize,
    d: usize,
    extended: bool,
    storage: Storage,
}

impl GenericTom {
    /// Compressed form: the matroid generated by its tree-types. The inputs
    /// must be spanning trees; whether they generate a *valid* matroid is
    /// decided by [`GenericTom::validate`].
    pub fn from_tree_types(n: usize, d: usize, mut trees: Vec<BiGraph>) -> Result<Self> {
        let probe = BiGraph::empty(n, d)?;
        for tree in &trees {
            probe.same_ambient(tree)?;
            if !tree.is_spanning_tree() {
                return Err(Error::NotATree);
            }
        }
        trees.sort_unstable();
        trees.dedup();
        Ok(GenericTom {
            n,
            d,
            extended: false,
            storage: Storage::Generative(trees),
        })
    }

    /// Explicit form. No axiom is enforced here; even acyclicity is deferred
    /// to validation so that a bad file can be loaded and then judged.
    pub fn from_types(n: usize, d: usize, types: Vec<BiGraph>, extended: bool) -> Result<Self> {
        let probe = BiGraph::empty(n, d)?;
        for t in &types {
            probe.same_ambient(t)?;
        }
        Ok(GenericTom {
            n,
            d,
            extended,
            storage: Storage::Explicit(types.into_iter().collect()),
        })
    }

    /// The matroid of all honest acyclic types compatible with every given
    /// tope. For the tope set of a valid matroid this reproduces the subgraph
    /// closure of the tree-types.
    pub fn reconstruct_from_topes(n: usize, d: usize, topes: &[BiGraph]) -> Result<Self> {
        let probe = BiGraph::empty(n, d)?;
        for t in topes {
            probe.same_ambient(t)?;
            if !t.classify().tope {
                return Err(Error::InvalidObject {
                    stage: "reconstruct_from_topes",
                    report: format!("input graph {t} is not a tope"),
                });
            }
        }
        if n * d > 25 {
            return Err(Error::SizeLimit(format!(
                "reconstruction scans all 2^{} subgraphs of K_{{{n},{d}}}",
                n * d
            )));
        }
        let mut types = BTreeSet::new();
        let mut rows = vec![0u64; n];
        let full = (1u64 << d) - 1;
        loop {
            let g = BiGraph::from_rows(n, d, rows.clone())?;
            if is_honest(&g)
                && g.is_forest()
                && topes.iter().all(|t| are_compatible(&g, t).unwrap_or(false))
            {
                types.insert(g);
            }
            // odometer over row masks
            let mut i = 0;
            loop {
                if i == n {
                    return Ok(GenericTom {
                        n,
                        d,
                        extended: false,
                        storage: Storage::Explicit(types),
                    });
                }
                if rows[i] == full {
                    rows[i] = 0;
                    i += 1;
                } else {
                    rows[i] += 1;
                    break;
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_extended(&self) -> bool {
        self.extended
    }

    pub fn is_generative(&self) -> bool {
        matches!(self.storage, Storage::Generative(_))
    }

    /// Maximal types. For explicit storage these are the spanning trees in
    /// the set.
    pub fn tree_types(&self) -> Vec<BiGraph> {
        match &self.storage {
            Storage::Generative(trees) => trees.clone(),
            Storage::Explicit(types) => types
                .iter()
                .filter(|t| t.is_spanning_tree())
                .cloned()
                .collect(),
        }
    }

    /// The full type set. Generative storage expands to every subgraph of a
    /// tree-type with all left degrees ≥ 1 (or every subgraph at all, in the
    /// extended case — the two descriptions agree with coordinate-emptying).
    pub fn types(&self) -> BTreeSet<BiGraph> {
        match &self.storage {
            Storage::Explicit(types) => types.clone(),
            Storage::Generative(trees) => {
                let mut out = BTreeSet::new();
                for tree in trees {
                    let mut rows = vec![0u64; self.n];
                    expand_rows(tree, 0, &mut rows, self.extended, &mut out);
                }
                out
            }
        }
    }

    pub fn type_count(&self) -> usize {
        self.types().len()
    }

    pub fn is_type(&self, g: &BiGraph) -> bool {
        match &self.storage {
            Storage::Explicit(types) => types.contains(g),
            Storage::Generative(trees) => {
                (self.extended || is_honest(g)) && trees.iter().any(|t| g.is_subgraph_of(t))
            }
        }
    }

    /// Types with every left degree exactly 1, one per lattice point of
    /// `nΔ^{d-1}` when the matroid is valid.
    pub fn topes(&self) -> Vec<BiGraph> {
        self.types()
            .into_iter()
            .filter(|t| t.classify().tope)
            .collect()
    }

    /// Checks the four axioms on the materialized type set. A type containing
    /// a cycle breaks the generic assumption and is a hard error, not a mere
    /// violation: the compatibility machinery is undefined on it.
    pub fn validate(&self) -> Result<ValidationReport> {
        let types = self.types();
        for t in &types {
            if !t.is_forest() {
                return Err(Error::CyclicType(t.to_string()));
            }
            if !self.extended && !is_honest(t) {
                return Err(Error::CyclicType(format!(
                    "{t} has an isolated left vertex but the matroid is not extended"
                )));
            }
        }
        let mut report = ValidationReport::new();
        self.check_boundary(&types, &mut report);
        self.check_surrounding(&types, &mut report);
        self.check_compatibility(&types, &mut report);
        self.check_elimination(&types, &mut report);
        Ok(report)
    }

    fn check_boundary(&self, types: &BTreeSet<BiGraph>, report: &mut ValidationReport) {
        report.mark_checked("tom.boundary");
        for j in 0..self.d {
            let boundary = BiGraph::from_map(self.d, &vec![j; self.n]).expect("valid ambient");
            if !types.contains(&boundary) {
                report.fail(
                    "tom.boundary",
                    format!("boundary type with every left vertex at {} is missing", j + 1),
                    json!({"right_vertex": j + 1}),
                );
            }
        }
    }

    /// Closure under single edge removals (keeping left degrees ≥ 1 unless
    /// extended). Any admissible subgraph is reachable by such removals: an
    /// edge outside the target incident to a left vertex of current degree ≥ 2
    /// always exists, so checking single removals suffices for full closure.
    fn check_surrounding(&self, types: &BTreeSet<BiGraph>, report: &mut ValidationReport) {
        report.mark_checked("tom.surrounding");
        for t in types {
            for (i, j) in t.edges() {
                if !self.extended && t.left_degree(i) < 2 {
                    continue;
                }
                let smaller = t.without_edge(i, j);
                if !types.contains(&smaller) {
                    report.fail(
                        "tom.surrounding",
                        format!("refinement of {t} dropping edge ({},{}) is missing", i + 1, j + 1),
                        json!({"type": t, "edge": [i + 1, j + 1]}),
                    );
                }
            }
        }
    }

    fn check_compatibility(&self, types: &BTreeSet<BiGraph>, report: &mut ValidationReport) {
        report.mark_checked("tom.compatibility");
        let list: Vec<&BiGraph> = types.iter().collect();
        let pairs: Vec<(usize, usize)> = (0..list.len())
            .flat_map(|a| (a + 1..list.len()).map(move |b| (a, b)))
            .collect();
        let violations: Vec<_> = pairs
            .par_iter()
            .filter_map(|&(a, b)| {
                let w = incompatibility_witness(list[a], list[b]).expect("acyclic types")?;
                Some((
                    format!("types {} and {} are incompatible", list[a], list[b]),
                    json!({
                        "first": list[a],
                        "second": list[b],
                        "left": one_based(&w.left),
                        "right": one_based(&w.right),
                        "matching_first": one_based_pairs(&w.matching_first),
                        "matching_second": one_based_pairs(&w.matching_second),
                    }),
                ))
            })
            .collect();
        for (message, witness) in violations {
            report.fail("tom.compatibility", message, witness);
        }
    }

    /// For every pair of types and every coordinate i there must be a type
    /// taking the union at i and siding with one of the two elsewhere. The
    /// witness search walks coordinate choices lexicographically.
    fn check_elimination(&self, types: &BTreeSet<BiGraph>, report: &mut ValidationReport) {
        report.mark_checked("tom.elimination");
        let list: Vec<&BiGraph> = types.iter().collect();
        for a in 0..list.len() {
            for b in a..list.len() {
                let (u, v) = (list[a], list[b]);
                for i in 0..self.n {
                    if eliminate(u, v, i, types).is_none() {
                        report.fail(
                            "tom.elimination",
                            format!("no eliminator of {u} and {v} at coordinate {}", i + 1),
                            json!({"first": u, "second": v, "coordinate": i + 1}),
                        );
                    }
                }
            }
        }
    }

    /// All semitypes obtained by emptying coordinates of types. Generative
    /// storage stays generative: its expansion simply stops requiring honest
    /// rows.
    pub fn completion(&self) -> GenericTom {
        let storage = match &self.storage {
            Storage::Generative(trees) => Storage::Generative(trees.clone()),
            Storage::Explicit(types) => {
                let mut out = BTreeSet::new();
                for t in types {
                    let support: Vec<usize> = (0..self.n).filter(|&i| t.row(i) != 0).collect();
                    for pick in 0u64..(1 << support.len()) {
                        let rows = (0..self.n)
                            .map(|i| match support.iter().position(|&s| s == i) {
                                Some(k) if pick >> k & 1 == 1 => 0,
                                _ => t.row(i),
                            })
                            .collect();
                        out.insert(BiGraph::from_rows(self.n, self.d, rows).expect("same ambient"));
                    }
                }
                Storage::Explicit(out)
            }
        };
        GenericTom {
            n: self.n,
            d: self.d,
            extended: true,
            storage,
        }
    }

    /// Drops every semitype with an empty coordinate; inverse of completion.
    pub fn reduction(&self) -> GenericTom {
        let storage = match &self.storage {
            Storage::Generative(trees) => Storage::Generative(trees.clone()),
            Storage::Explicit(types) => {
                Storage::Explicit(types.iter().filter(|t| is_honest(t)).cloned().collect())
            }
        };
        GenericTom {
            n: self.n,
            d: self.d,
            extended: false,
            storage,
        }
    }

    /// Finds an honest type containing the given semitype. When the semitype
    /// is a spanning tree on a support containing the whole right side, the
    /// result is the unique tree-type whose extra edges give each missing left
    /// vertex degree exactly one.
    pub fn refine_to_honest(&self, semitype: &BiGraph) -> Result<BiGraph> {
        BiGraph::empty(self.n, self.d)?.same_ambient(semitype)?;
        if !self.is_type(semitype) {
            return Err(Error::InvalidObject {
                stage: "refine_to_honest",
                report: format!("{semitype} is not a member of this matroid"),
            });
        }
        if is_honest(semitype) {
            return Ok(semitype.clone());
        }
        self.types()
            .into_iter()
            .find(|t| is_honest(t) && semitype.is_subgraph_of(t))
            .ok_or(Error::NoHonestRefinement)
    }
}

fn expand_rows(
    tree: &BiGraph,
    i: usize,
    rows: &mut Vec<u64>,
    allow_empty: bool,
    out: &mut BTreeSet<BiGraph>,
) {
    if i == tree.n() {
        out.insert(BiGraph::from_rows(tree.n(), tree.d(), rows.clone()).expect("same ambient"));
        return;
    }
    let full = tree.row(i);
    // enumerate submasks of the row, descending
    let mut sub = full;
    loop {
        if sub != 0 || allow_empty {
            rows[i] = sub;
            expand_rows(tree, i + 1, rows, allow_empty, out);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & full;
    }
    rows[i] = 0;
}

fn eliminate(u: &BiGraph, v: &BiGraph, i: usize, types: &BTreeSet<BiGraph>) -> Option<BiGraph> {
    let n = u.n();
    let free: Vec<usize> = (0..n).filter(|&k| k != i && u.row(k) != v.row(k)).collect();
    for pick in 0u64..(1 << free.len()) {
        let rows = (0..n)
            .map(|k| {
                if k == i {
                    u.row(k) | v.row(k)
                } else {
                    match free.iter().position(|&f| f == k) {
                        Some(b) if pick >> b & 1 == 1 => v.row(k),
                        _ => u.row(k),
                    }
                }
            })
            .collect();
        let w = BiGraph::from_rows(n, u.d(), rows).expect("same ambient");
        if types.contains(&w) {
            return Some(w);
        }
    }
    None
}
