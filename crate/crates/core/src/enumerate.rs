//! Exhaustive enumeration of small objects of every kind, used as the
//! ground-truth oracle by the rest of the test suite.
//!
//! Subdivisions and arrangements are found by position-indexed backtracking:
//! the right-degree vector of a cell (or tope) is forced by its lattice
//! position, so candidates are bucketed per position once and the search
//! assigns one per position with incremental axiom pruning. Counts are part
//! of the contract: identical tasks yield identical ordered output across
//! runs and thread counts.

use itertools::Itertools;
use rayon::prelude::*;
use std::collections::BTreeMap;

use crate::bigraph::{are_compatible, k_subset_masks, mask_bits, BiGraph};
use crate::cryptomorphism::ObjectHandle;
use crate::error::{Error, Result};
use crate::fms::{FineMixedSubdivision, ValidationMode};
use crate::lattice::{colex_rank, simplex_points, LatticePoint};
use crate::matchfield::{LinkageVariant, MatchingField};
use crate::topearr::{ArrangementLevel, TopeArrangement};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationKind {
    Fms,
    PreTrianguloid,
    Trianguloid,
    TopeArrangement,
    MatchingField,
    LinkageMatchingField,
}

impl EnumerationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnumerationKind::Fms => "fms",
            EnumerationKind::PreTrianguloid => "pre_trianguloid",
            EnumerationKind::Trianguloid => "trianguloid",
            EnumerationKind::TopeArrangement => "tope_arrangement",
            EnumerationKind::MatchingField => "matching_field",
            EnumerationKind::LinkageMatchingField => "linkage_matching_field",
        }
    }
}

impl std::str::FromStr for EnumerationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "fms" => Ok(EnumerationKind::Fms),
            "pre_trianguloid" => Ok(EnumerationKind::PreTrianguloid),
            "trianguloid" => Ok(EnumerationKind::Trianguloid),
            "tope_arrangement" => Ok(EnumerationKind::TopeArrangement),
            "matching_field" => Ok(EnumerationKind::MatchingField),
            "linkage_matching_field" => Ok(EnumerationKind::LinkageMatchingField),
            other => Err(Error::UnsupportedKind(other.to_string())),
        }
    }
}

/// A single enumeration request. For field kinds `n` plays the role of n′
/// (the total number of left vertices).
#[derive(Debug, Clone)]
pub struct EnumerationTask {
    pub kind: EnumerationKind,
    pub n: usize,
    pub d: usize,
    /// Node budget; when set the search runs sequentially so the cutoff
    /// point is deterministic.
    pub budget: Option<u64>,
    /// Emit only the colex-least representative of each S_n × S_d orbit.
    pub up_to_symmetry: bool,
}

impl EnumerationTask {
    pub fn new(kind: EnumerationKind, n: usize, d: usize) -> Self {
        EnumerationTask {
            kind,
            n,
            d,
            budget: None,
            up_to_symmetry: false,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn quotient_by_symmetry(mut self) -> Self {
        self.up_to_symmetry = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct EnumerationOutcome {
    pub objects: Vec<ObjectHandle>,
    /// Search nodes visited; with a budget this is where the cut happened.
    pub nodes: u64,
    /// False when the node budget stopped the search early. Partial output
    /// is never passed off as complete.
    pub complete: bool,
}

pub fn enumerate(task: &EnumerationTask) -> Result<EnumerationOutcome> {
    check_scale(task)?;
    let mut outcome = match task.kind {
        EnumerationKind::Fms => enumerate_fms(task)?,
        EnumerationKind::PreTrianguloid
        | EnumerationKind::Trianguloid
        | EnumerationKind::TopeArrangement => enumerate_arrangements(task)?,
        EnumerationKind::MatchingField | EnumerationKind::LinkageMatchingField => {
            enumerate_fields(task)?
        }
    };
    if task.up_to_symmetry {
        let (n_left, d) = (task.n, task.d);
        outcome.objects.retain(|h| is_orbit_minimum(h, n_left, d));
    }
    Ok(outcome)
}

pub fn count(task: &EnumerationTask) -> Result<usize> {
    let outcome = enumerate(task)?;
    if !outcome.complete {
        return Err(Error::BudgetExceeded {
            budget: task.budget.unwrap_or(0),
            visited: outcome.nodes,
        });
    }
    Ok(outcome.objects.len())
}

/// Desk-scale guard: the oracles are exhaustive and meant for sizes where
/// exhaustive is still cheap.
fn check_scale(task: &EnumerationTask) -> Result<()> {
    let (n, d) = (task.n, task.d);
    let ok = match task.kind {
        EnumerationKind::MatchingField | EnumerationKind::LinkageMatchingField => {
            d >= 1 && n >= d && n + d <= 7
        }
        _ => n >= 1 && d >= 1 && n + d <= 8,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::AmbientUnsupported { n, d })
    }
}

struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    fn new(limit: Option<u64>) -> Self {
        Budget {
            limit: limit.unwrap_or(u64::MAX),
            used: 0,
        }
    }

    /// Accounts one search node; false once the budget is spent.
    fn tick(&mut self) -> bool {
        if self.used >= self.limit {
            return false;
        }
        self.used += 1;
        true
    }
}

// ---------------------------------------------------------------------------
// Fine mixed subdivisions

/// All spanning trees of K_{n,d}, bucketed by the lattice position their
/// right-degree vector dictates (position = RD − 1).
fn spanning_tree_buckets(n: usize, d: usize) -> Result<(Vec<LatticePoint>, Vec<Vec<BiGraph>>)> {
    let positions = simplex_points(d, n - 1);
    let mut buckets = vec![Vec::new(); positions.len()];
    let full: u64 = (1 << d) - 1;
    let mut rows = vec![1u64; n];
    'outer: loop {
        let edges: u32 = rows.iter().map(|m| m.count_ones()).sum();
        if edges as usize == n + d - 1 {
            let g = BiGraph::from_rows(n, d, rows.clone())?;
            if g.is_spanning_tree() {
                let u = LatticePoint::new(g.right_degrees().iter().map(|&c| c - 1).collect());
                let idx = colex_rank(&positions, &u).expect("tree degree vector is a position");
                buckets[idx].push(g);
            }
        }
        for i in (0..n).rev() {
            if rows[i] < full {
                rows[i] += 1;
                continue 'outer;
            }
            rows[i] = 1;
        }
        break;
    }
    Ok((positions, buckets))
}

fn enumerate_fms(task: &EnumerationTask) -> Result<EnumerationOutcome> {
    let (n, d) = (task.n, task.d);
    let (_, buckets) = spanning_tree_buckets(n, d)?;
    let run = |first: &BiGraph, budget: &mut Budget| -> Result<(Vec<ObjectHandle>, bool)> {
        let mut out = Vec::new();
        let mut chosen = vec![first.clone()];
        let complete = descend_fms(n, d, &buckets, &mut chosen, 1, &mut out, budget)?;
        Ok((out, complete))
    };
    if task.budget.is_some() {
        let mut budget = Budget::new(task.budget);
        let mut objects = Vec::new();
        let mut complete = budget.tick();
        if complete {
            for first in &buckets[0] {
                let (mut found, cont) = run(first, &mut budget)?;
                objects.append(&mut found);
                if !cont {
                    complete = false;
                    break;
                }
            }
        }
        return Ok(EnumerationOutcome {
            objects,
            nodes: budget.used,
            complete,
        });
    }
    let branches: Vec<(Vec<ObjectHandle>, u64)> = buckets[0]
        .par_iter()
        .map(|first| {
            let mut budget = Budget::new(None);
            run(first, &mut budget).map(|(out, _)| (out, budget.used))
        })
        .collect::<Result<_>>()?;
    let mut objects = Vec::new();
    let mut nodes = 1;
    for (mut found, used) in branches {
        objects.append(&mut found);
        nodes += used;
    }
    Ok(EnumerationOutcome {
        objects,
        nodes,
        complete: true,
    })
}

fn descend_fms(
    n: usize,
    d: usize,
    buckets: &[Vec<BiGraph>],
    chosen: &mut Vec<BiGraph>,
    idx: usize,
    out: &mut Vec<ObjectHandle>,
    budget: &mut Budget,
) -> Result<bool> {
    if !budget.tick() {
        return Ok(false);
    }
    if idx == buckets.len() {
        let fms = FineMixedSubdivision::new(n, d, chosen.clone())?;
        let certificate = fms.validate(ValidationMode::CompatOnly);
        if !certificate.verdict {
            return Err(Error::InvalidObject {
                stage: "enumerate.fms",
                report: certificate.summary(),
            });
        }
        out.push(ObjectHandle::Fms(fms));
        return Ok(true);
    }
    'candidate: for cand in &buckets[idx] {
        for prev in chosen.iter() {
            if !are_compatible(prev, cand)? {
                continue 'candidate;
            }
        }
        chosen.push(cand.clone());
        let cont = descend_fms(n, d, buckets, chosen, idx + 1, out, budget)?;
        chosen.pop();
        if !cont {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Tope arrangements, pre-trianguloids, trianguloids

/// All functional subgraphs (one edge per left vertex), bucketed by
/// position = right-degree vector.
fn tope_buckets(n: usize, d: usize) -> Result<(Vec<LatticePoint>, Vec<Vec<BiGraph>>)> {
    let positions = simplex_points(d, n);
    let mut buckets = vec![Vec::new(); positions.len()];
    let mut map = vec![0usize; n];
    'outer: loop {
        let g = BiGraph::from_map(d, &map)?;
        let v = LatticePoint::new(g.right_degrees());
        let idx = colex_rank(&positions, &v).expect("tope degree vector is a position");
        buckets[idx].push(g);
        for i in (0..n).rev() {
            if map[i] + 1 < d {
                map[i] += 1;
                continue 'outer;
            }
            map[i] = 0;
        }
        break;
    }
    Ok((positions, buckets))
}

/// Positions differing by a unit swap: v = w + e_a − e_b returns (a, b).
fn sibling_swap(v: &LatticePoint, w: &LatticePoint) -> Option<(usize, usize)> {
    let mut up = None;
    let mut down = None;
    for j in 0..v.dim() {
        match v.get(j) as isize - w.get(j) as isize {
            0 => {}
            1 if up.is_none() => up = Some(j),
            -1 if down.is_none() => down = Some(j),
            _ => return None,
        }
    }
    up.zip(down)
}

/// The two nesting constraints the sector axiom places on a sibling pair.
fn sector_pair_ok(v: &LatticePoint, s: &BiGraph, w: &LatticePoint, t: &BiGraph) -> bool {
    match sibling_swap(v, w) {
        // v = w + e_a − e_b, so the shared base is u = v − e_a = w − e_b:
        // T_{u+e_b} = t is inner at b and T_{u+e_a} = s is inner at a.
        Some((a, b)) => t.col(a) & !s.col(a) == 0 && s.col(b) & !t.col(b) == 0,
        None => true,
    }
}

fn enumerate_arrangements(task: &EnumerationTask) -> Result<EnumerationOutcome> {
    let (n, d) = (task.n, task.d);
    let (positions, buckets) = tope_buckets(n, d)?;
    let level = match task.kind {
        EnumerationKind::PreTrianguloid => ArrangementLevel::PreTrianguloid,
        EnumerationKind::Trianguloid => ArrangementLevel::Trianguloid,
        _ => ArrangementLevel::TopeArrangement,
    };
    // Sector pruning is only sound when the target kind demands the sector
    // axiom; the bare compatibility kind must not borrow it, or the
    // cross-kind count checks would be circular.
    let prune_sector = level != ArrangementLevel::TopeArrangement;
    let run = |first: &BiGraph, budget: &mut Budget| -> Result<(Vec<ObjectHandle>, bool)> {
        let mut out = Vec::new();
        let mut chosen = vec![first.clone()];
        let complete = descend_arrangement(
            n,
            d,
            &positions,
            &buckets,
            level,
            prune_sector,
            &mut chosen,
            1,
            &mut out,
            budget,
        )?;
        Ok((out, complete))
    };
    if task.budget.is_some() {
        let mut budget = Budget::new(task.budget);
        let mut objects = Vec::new();
        let mut complete = budget.tick();
        if complete {
            for first in &buckets[0] {
                let (mut found, cont) = run(first, &mut budget)?;
                objects.append(&mut found);
                if !cont {
                    complete = false;
                    break;
                }
            }
        }
        return Ok(EnumerationOutcome {
            objects,
            nodes: budget.used,
            complete,
        });
    }
    let branches: Vec<(Vec<ObjectHandle>, u64)> = buckets[0]
        .par_iter()
        .map(|first| {
            let mut budget = Budget::new(None);
            run(first, &mut budget).map(|(out, _)| (out, budget.used))
        })
        .collect::<Result<_>>()?;
    let mut objects = Vec::new();
    let mut nodes = 1;
    for (mut found, used) in branches {
        objects.append(&mut found);
        nodes += used;
    }
    Ok(EnumerationOutcome {
        objects,
        nodes,
        complete: true,
    })
}

#[allow(clippy::too_many_arguments)]
fn descend_arrangement(
    n: usize,
    d: usize,
    positions: &[LatticePoint],
    buckets: &[Vec<BiGraph>],
    level: ArrangementLevel,
    prune_sector: bool,
    chosen: &mut Vec<BiGraph>,
    idx: usize,
    out: &mut Vec<ObjectHandle>,
    budget: &mut Budget,
) -> Result<bool> {
    if !budget.tick() {
        return Ok(false);
    }
    if idx == buckets.len() {
        let entries = positions
            .iter()
            .cloned()
            .zip(chosen.iter().cloned())
            .collect();
        let arr = TopeArrangement::new(n, d, entries)?;
        if arr.validate(level).verdict {
            out.push(ObjectHandle::Arrangement(arr));
        }
        return Ok(true);
    }
    'candidate: for cand in &buckets[idx] {
        for (prev_idx, prev) in chosen.iter().enumerate() {
            if !are_compatible(prev, cand)? {
                continue 'candidate;
            }
            if prune_sector
                && !sector_pair_ok(&positions[idx], cand, &positions[prev_idx], prev)
            {
                continue 'candidate;
            }
        }
        chosen.push(cand.clone());
        let cont = descend_arrangement(
            n,
            d,
            positions,
            buckets,
            level,
            prune_sector,
            chosen,
            idx + 1,
            out,
            budget,
        )?;
        chosen.pop();
        if !cont {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Matching fields

fn enumerate_fields(task: &EnumerationTask) -> Result<EnumerationOutcome> {
    let (n_prime, d) = (task.n, task.d);
    let subsets = k_subset_masks(n_prime, d);
    let perms: Vec<Vec<usize>> = (0..d).permutations(d).collect();
    let linkage_only = task.kind == EnumerationKind::LinkageMatchingField;
    let mut counters = vec![0usize; subsets.len()];
    let mut budget = Budget::new(task.budget);
    let mut objects = Vec::new();
    let mut complete = true;
    'outer: loop {
        if !budget.tick() {
            complete = false;
            break;
        }
        let mut assignments = BTreeMap::new();
        for (slot, &sigma) in subsets.iter().enumerate() {
            let elems: Vec<usize> = mask_bits(sigma).collect();
            let perm = &perms[counters[slot]];
            let graph = BiGraph::from_edges(
                n_prime,
                d,
                elems.iter().zip(perm.iter()).map(|(&i, &j)| (i, j)),
            )?;
            assignments.insert(sigma, graph);
        }
        let field = MatchingField::new(n_prime, d, false, assignments)?;
        if !linkage_only || field.check_linkage(LinkageVariant::Strong).verdict {
            objects.push(ObjectHandle::Field(field));
        }
        for slot in (0..counters.len()).rev() {
            if counters[slot] + 1 < perms.len() {
                counters[slot] += 1;
                continue 'outer;
            }
            counters[slot] = 0;
        }
        break;
    }
    Ok(EnumerationOutcome {
        objects,
        nodes: budget.used,
        complete,
    })
}

// ---------------------------------------------------------------------------
// Symmetry quotient

fn relabel_graph(g: &BiGraph, pi: &[usize], rho: &[usize]) -> BiGraph {
    BiGraph::from_edges(
        g.n(),
        g.d(),
        g.edges().into_iter().map(|(i, j)| (pi[i], rho[j])),
    )
    .expect("permutation keeps edges in ambient")
}

/// A relabeling-comparable key; the representative of an orbit is the object
/// whose key is minimal among all simultaneous row/column relabelings.
fn orbit_key(h: &ObjectHandle, pi: &[usize], rho: &[usize]) -> Vec<(Vec<usize>, BiGraph)> {
    match h {
        ObjectHandle::Fms(f) => {
            let mut cells: Vec<BiGraph> = f
                .cells()
                .iter()
                .map(|c| relabel_graph(c, pi, rho))
                .collect();
            cells.sort();
            cells.into_iter().map(|c| (Vec::new(), c)).collect()
        }
        ObjectHandle::Arrangement(a) => {
            let mut entries: Vec<(Vec<usize>, BiGraph)> = a
                .iter()
                .map(|(v, t)| {
                    let mut coords = vec![0; v.dim()];
                    for j in 0..v.dim() {
                        coords[rho[j]] = v.get(j);
                    }
                    (coords, relabel_graph(t, pi, rho))
                })
                .collect();
            entries.sort();
            entries
        }
        ObjectHandle::Field(f) => {
            let mut entries: Vec<(Vec<usize>, BiGraph)> = f
                .assignments()
                .map(|(sigma, m)| {
                    let mut key: Vec<usize> = mask_bits(sigma).map(|i| pi[i]).collect();
                    key.sort_unstable();
                    (key, relabel_graph(m, pi, rho))
                })
                .collect();
            entries.sort();
            entries
        }
        _ => unreachable!("enumeration emits subdivisions, arrangements, and fields"),
    }
}

fn is_orbit_minimum(h: &ObjectHandle, n_left: usize, d: usize) -> bool {
    let identity_left: Vec<usize> = (0..n_left).collect();
    let identity_right: Vec<usize> = (0..d).collect();
    let own = orbit_key(h, &identity_left, &identity_right);
    for pi in identity_left.iter().copied().permutations(n_left) {
        for rho in identity_right.iter().copied().permutations(d) {
            if orbit_key(h, &pi, &rho) < own {
                return false;
            }
        }
    }
    true
}
