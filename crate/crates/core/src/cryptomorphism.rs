//! Conversions between the cryptomorphic object kinds, collection-level
//! minors, and the end-to-end round-trip audit.
//!
//! All five kinds are collections of subgraphs of `K_{n,d}` under the hood,
//! so deletion (of a left vertex) and contraction (of a right vertex) share
//! one skeleton: remove the vertex from every member, drop members that no
//! longer meet the kind's minimum-degree requirement, merge duplicates, and
//! re-validate. The derived conversions are extraction (tropical oriented
//! matroid → matching stack, through lazy minors), the iterated-amalgamation
//! pipeline (matching stack → tope arrangement → subdivision), and the audit
//! that walks the full cycle and checks it lands where it started.

use std::collections::BTreeMap;

use crate::bigraph::{k_subset_masks, mask_bits, BiGraph, Side};
use crate::error::{Error, Result};
use crate::fms::{FineMixedSubdivision, ValidationMode};
use crate::lattice::{simplex_points, LatticePoint};
use crate::matchfield::{EnsembleLevel, LinkageVariant, MatchingField, MatchingStack};
use crate::report::ValidationReport;
use crate::tom::GenericTom;
use crate::topearr::{ArrangementLevel, TopeArrangement};
use serde_json::json;

/// Tagged union over every object kind the conversions work with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectHandle {
    Fms(FineMixedSubdivision),
    Tom(GenericTom),
    Stack(MatchingStack),
    Field(MatchingField),
    Arrangement(TopeArrangement),
}

impl ObjectHandle {
    pub fn kind(&self) -> &'static str {
        match self {
            ObjectHandle::Fms(_) => "fms",
            ObjectHandle::Tom(_) => "tom",
            ObjectHandle::Stack(_) => "matching_stack",
            ObjectHandle::Field(_) => "matching_field",
            ObjectHandle::Arrangement(_) => "tope_arrangement",
        }
    }

    /// Validation at the kind's strongest level.
    pub fn validate(&self) -> Result<ValidationReport> {
        match self {
            ObjectHandle::Fms(f) => Ok(f.validate(ValidationMode::Full)),
            ObjectHandle::Tom(t) => t.validate(),
            ObjectHandle::Stack(s) => Ok(s.validate_ensemble(EnsembleLevel::Full)),
            ObjectHandle::Field(f) => {
                let mut report = ValidationReport::new();
                for variant in LinkageVariant::ALL {
                    report.absorb(f.check_linkage(variant));
                }
                Ok(report)
            }
            ObjectHandle::Arrangement(a) => Ok(a.validate(ArrangementLevel::Trianguloid)),
        }
    }

    /// The minor obtained by deleting the given left vertices and
    /// contracting the given right vertices (0-based, any order).
    pub fn minor(&self, delete_left: &[usize], contract_right: &[usize]) -> Result<ObjectHandle> {
        Ok(match self {
            ObjectHandle::Fms(f) => ObjectHandle::Fms(fms_minor(f, delete_left, contract_right)?),
            ObjectHandle::Tom(t) => ObjectHandle::Tom(tom_minor(t, delete_left, contract_right)?),
            ObjectHandle::Stack(s) => {
                ObjectHandle::Stack(stack_minor(s, delete_left, contract_right)?)
            }
            ObjectHandle::Field(f) => {
                ObjectHandle::Field(field_minor(f, delete_left, contract_right)?)
            }
            ObjectHandle::Arrangement(a) => {
                ObjectHandle::Arrangement(arrangement_minor(a, delete_left, contract_right)?)
            }
        })
    }
}

/// Checks bounds, dedups and returns the indices in descending order, so
/// that removing them one at a time never invalidates the remaining ones.
fn descending(indices: &[usize], len: usize) -> Result<Vec<usize>> {
    let mut out = indices.to_vec();
    for &x in &out {
        if x >= len {
            return Err(Error::IndexOutOfRange { index: x, len });
        }
    }
    out.sort_unstable_by(|a, b| b.cmp(a));
    out.dedup();
    if out.len() >= len {
        return Err(Error::EmptySupport);
    }
    Ok(out)
}

fn invalid(stage: &'static str, report: &ValidationReport) -> Error {
    Error::InvalidObject {
        stage,
        report: report.summary(),
    }
}

pub fn fms_minor(
    fms: &FineMixedSubdivision,
    delete_left: &[usize],
    contract_right: &[usize],
) -> Result<FineMixedSubdivision> {
    let input = fms.validate(ValidationMode::Full);
    if !input.verdict {
        return Err(invalid("crypto.minor.input", &input));
    }
    let dl = descending(delete_left, fms.n())?;
    let cr = descending(contract_right, fms.d())?;
    let mut cells = Vec::new();
    for cell in fms.cells() {
        let mut g = cell.clone();
        for &j in &cr {
            g = g.single_vertex_minor(Side::Right, j)?.0;
        }
        for &i in &dl {
            g = g.single_vertex_minor(Side::Left, i)?.0;
        }
        // Cells that degenerate (lose a vertex from their span or split)
        // are absorbed into the surviving full-dimensional ones.
        if g.is_spanning_tree() && !cells.contains(&g) {
            cells.push(g);
        }
    }
    let result = FineMixedSubdivision::new(fms.n() - dl.len(), fms.d() - cr.len(), cells)?;
    let output = result.validate(ValidationMode::Full);
    if !output.verdict {
        return Err(invalid("crypto.minor", &output));
    }
    Ok(result)
}

pub fn tom_minor(
    tom: &GenericTom,
    delete_left: &[usize],
    contract_right: &[usize],
) -> Result<GenericTom> {
    let input = tom.validate()?;
    if !input.verdict {
        return Err(invalid("crypto.minor.input", &input));
    }
    let dl = descending(delete_left, tom.n())?;
    let cr = descending(contract_right, tom.d())?;
    let mut types = std::collections::BTreeSet::new();
    for ty in tom.types() {
        let mut g = ty.clone();
        for &j in &cr {
            g = g.single_vertex_minor(Side::Right, j)?.0;
        }
        for &i in &dl {
            g = g.single_vertex_minor(Side::Left, i)?.0;
        }
        if tom.is_extended() || crate::tom::is_honest(&g) {
            types.insert(g);
        }
    }
    let result = GenericTom::from_types(
        tom.n() - dl.len(),
        tom.d() - cr.len(),
        types.into_iter().collect(),
        tom.is_extended(),
    )?;
    let output = result.validate()?;
    if !output.verdict {
        return Err(invalid("crypto.minor", &output));
    }
    Ok(result)
}

pub fn stack_minor(
    stack: &MatchingStack,
    delete_left: &[usize],
    contract_right: &[usize],
) -> Result<MatchingStack> {
    let levels = [EnsembleLevel::Semi, EnsembleLevel::Full];
    let input_passes: Vec<bool> = levels
        .iter()
        .map(|&level| stack.validate_ensemble(level).verdict)
        .collect();
    if !input_passes[0] {
        return Err(invalid(
            "crypto.minor.input",
            &stack.validate_ensemble(EnsembleLevel::Semi),
        ));
    }
    let dl = descending(delete_left, stack.n())?;
    let cr = descending(contract_right, stack.d())?;
    let mut assignments: BTreeMap<(u64, u64), BiGraph> = BTreeMap::new();
    for (_, m) in stack.assignments() {
        let mut g = m.clone();
        for &j in &cr {
            g = g.single_vertex_minor(Side::Right, j)?.0;
        }
        for &i in &dl {
            g = g.single_vertex_minor(Side::Left, i)?.0;
        }
        // A partial matching is keyed by its own support; members whose
        // supports collide after the removals must agree (closure axiom).
        let key = (g.support_mask(Side::Left), g.support_mask(Side::Right));
        if let Some(existing) = assignments.get(&key) {
            if *existing != g {
                return Err(Error::InvalidObject {
                    stage: "crypto.minor",
                    report: format!(
                        "two matchings collide at ({:?}, {:?}) after the minor",
                        mask_bits(key.0).map(|i| i + 1).collect::<Vec<_>>(),
                        mask_bits(key.1).map(|j| j + 1).collect::<Vec<_>>()
                    ),
                });
            }
        }
        assignments.insert(key, g);
    }
    let result = MatchingStack::new(stack.n() - dl.len(), stack.d() - cr.len(), assignments)?;
    for (&level, &passed) in levels.iter().zip(&input_passes) {
        if passed {
            let output = result.validate_ensemble(level);
            if !output.verdict {
                return Err(invalid("crypto.minor", &output));
            }
        }
    }
    Ok(result)
}

/// Minors of matching fields go through the pointed structure: reduce to the
/// stack of free matchings, minor there, and complete back. Deleting a
/// pointed vertex directly is refused — contract its right partner instead.
pub fn field_minor(
    field: &MatchingField,
    delete_left: &[usize],
    contract_right: &[usize],
) -> Result<MatchingField> {
    if !field.is_pointed() {
        return Err(Error::NotPointed);
    }
    let free = field.free_count();
    for &i in delete_left {
        if i >= free && i < field.n_prime() {
            return Err(Error::PointedViolation {
                vertex: i + 1,
                partner: i - free + 1,
            });
        }
    }
    let stack = field.reduce_pointed()?;
    let smaller = stack_minor(&stack, delete_left, contract_right)?;
    smaller.complete()
}

pub fn arrangement_minor(
    arr: &TopeArrangement,
    delete_left: &[usize],
    contract_right: &[usize],
) -> Result<TopeArrangement> {
    let levels = [
        ArrangementLevel::TopeArrangement,
        ArrangementLevel::PreTrianguloid,
        ArrangementLevel::Trianguloid,
    ];
    let input_passes: Vec<bool> = levels
        .iter()
        .map(|&level| arr.validate(level).verdict)
        .collect();
    if !input_passes[0] && !input_passes[1] {
        return Err(invalid(
            "crypto.minor.input",
            &arr.validate(ArrangementLevel::TopeArrangement),
        ));
    }
    let dl = descending(delete_left, arr.n())?;
    let cr = descending(contract_right, arr.d())?;
    let mut entries: BTreeMap<Vec<usize>, BiGraph> = BTreeMap::new();
    for (v, tope) in arr.iter() {
        // Contraction keeps exactly the topes not using the contracted
        // columns; deletion re-files the rest under their new degrees.
        if cr.iter().any(|&j| v.get(j) > 0) {
            continue;
        }
        let mut g = tope.clone();
        for &j in &cr {
            g = g.single_vertex_minor(Side::Right, j)?.0;
        }
        for &i in &dl {
            g = g.single_vertex_minor(Side::Left, i)?.0;
        }
        let position = g.right_degrees();
        if let Some(existing) = entries.get(&position) {
            if *existing != g {
                return Err(Error::TopeConflict(
                    position.iter().map(|&c| c + 1).collect(),
                ));
            }
        }
        entries.insert(position, g);
    }
    let result = TopeArrangement::new(
        arr.n() - dl.len(),
        arr.d() - cr.len(),
        entries
            .into_iter()
            .map(|(pos, g)| (LatticePoint::new(pos), g))
            .collect(),
    )?;
    for (&level, &passed) in levels.iter().zip(&input_passes) {
        if passed {
            let output = result.validate(level);
            if !output.verdict {
                return Err(invalid("crypto.minor", &output));
            }
        }
    }
    Ok(result)
}

/// Reads the matching stack out of a tropical oriented matroid: for every
/// pair (I, J̄) of equal size, M_{I,J̄} is the unique tope of the (I,J̄)-minor
/// at position 1_J̄. Minors are taken lazily: a tope of the minor at 1_J̄
/// comes from a tope supported inside J̄ whose rows outside I absorb all
/// degree above 1.
pub fn extraction(tom: &GenericTom) -> Result<MatchingStack> {
    let (n, d) = (tom.n(), tom.d());
    let topes = tom.topes();
    let mut assignments = BTreeMap::new();
    assignments.insert((0, 0), BiGraph::empty(n.max(1), d)?);
    for k in 1..=n.min(d) {
        for i_mask in k_subset_masks(n, k) {
            for j_mask in k_subset_masks(d, k) {
                let mut found: Option<BiGraph> = None;
                for tope in &topes {
                    if tope.support_mask(Side::Right) & !j_mask != 0 {
                        continue;
                    }
                    let restricted = restrict_rows(tope, i_mask)?;
                    let unit = mask_bits(j_mask)
                        .all(|j| restricted.right_degree(j) == 1)
                        && restricted.edge_count() == k;
                    if !unit {
                        continue;
                    }
                    match &found {
                        Some(existing) if *existing != restricted => {
                            return Err(Error::InvalidObject {
                                stage: "crypto.extraction",
                                report: format!(
                                    "two topes restrict to different matchings on ({:?}, {:?})",
                                    mask_bits(i_mask).map(|i| i + 1).collect::<Vec<_>>(),
                                    mask_bits(j_mask).map(|j| j + 1).collect::<Vec<_>>()
                                ),
                            });
                        }
                        _ => found = Some(restricted),
                    }
                }
                let matching = found.ok_or_else(|| Error::InvalidObject {
                    stage: "crypto.extraction",
                    report: format!(
                        "no tope of the minor at ({:?}, {:?}) has the unit position",
                        mask_bits(i_mask).map(|i| i + 1).collect::<Vec<_>>(),
                        mask_bits(j_mask).map(|j| j + 1).collect::<Vec<_>>()
                    ),
                })?;
                assignments.insert((i_mask, j_mask), matching);
            }
        }
    }
    MatchingStack::new(n, d, assignments)
}

fn restrict_rows(g: &BiGraph, i_mask: u64) -> Result<BiGraph> {
    BiGraph::from_edges(
        g.n(),
        g.d(),
        g.edges().into_iter().filter(|&(i, _)| i_mask >> i & 1 == 1),
    )
}

/// Runs the iterated amalgamation of a (full) matching stack out to every
/// lattice point of nΔ^{d−1} and collects the resulting topes.
pub fn arrangement_from_ensemble(stack: &MatchingStack) -> Result<TopeArrangement> {
    let (n, d) = (stack.n(), stack.d());
    if n == 0 {
        return Err(Error::EmptySupport);
    }
    let base = stack.complete()?.to_tope_field();
    let mut entries = Vec::with_capacity(crate::lattice::binomial(n + d - 1, d - 1));
    for v in simplex_points(d, n) {
        let field = base.amalgamate_to(&v.shift(1))?;
        let tope = field.the_tope()?;
        // Pointed rows only carry the forced edges; the free rows are the
        // tope of the arrangement.
        let edges = tope.edges().into_iter().filter(|&(i, _)| i < n);
        entries.push((v, BiGraph::from_edges(n, d, edges)?));
    }
    TopeArrangement::new(n, d, entries)
}

/// Reads the subdivision off an arrangement via Δ-covectors.
pub fn fms_from_arrangement(arr: &TopeArrangement) -> Result<FineMixedSubdivision> {
    let mut cells = Vec::new();
    for u in simplex_points(arr.d(), arr.n() - 1) {
        cells.push(arr.delta_covector(&u)?);
    }
    let fms = FineMixedSubdivision::new(arr.n(), arr.d(), cells)?;
    let report = fms.validate(ValidationMode::Full);
    if !report.verdict {
        return Err(invalid("crypto.fms_from_arrangement", &report));
    }
    Ok(fms)
}

/// The ensemble → subdivision direction of the main bijection: amalgamate,
/// collect the tope arrangement, take Δ-covectors, and check that extracting
/// the resulting matroid returns the input ensemble.
pub fn fms_from_ensemble(stack: &MatchingStack) -> Result<FineMixedSubdivision> {
    let pre = stack.validate_ensemble(EnsembleLevel::Full);
    if !pre.verdict {
        return Err(invalid("crypto.fms_from_ensemble", &pre));
    }
    let arr = arrangement_from_ensemble(stack)?;
    let fms = fms_from_arrangement(&arr)?;
    let tom = GenericTom::from_tree_types(fms.n(), fms.d(), fms.cells().to_vec())?;
    if &extraction(&tom)? != stack {
        return Err(Error::InvalidObject {
            stage: "crypto.fms_from_ensemble",
            report: "extraction of the rebuilt subdivision differs from the input ensemble".into(),
        });
    }
    Ok(fms)
}

/// Normalizes any handle to a subdivision, the entry point of the audit
/// cycle.
pub fn handle_to_fms(seed: &ObjectHandle) -> Result<FineMixedSubdivision> {
    match seed {
        ObjectHandle::Fms(f) => Ok(f.clone()),
        ObjectHandle::Tom(t) => FineMixedSubdivision::new(t.n(), t.d(), t.tree_types()),
        ObjectHandle::Stack(s) => fms_from_ensemble(s),
        ObjectHandle::Field(f) => fms_from_ensemble(&f.reduce_pointed()?),
        ObjectHandle::Arrangement(a) => fms_from_arrangement(a),
    }
}

/// Walks the conversion cycle subdivision → matroid → ensemble →
/// arrangement → subdivision, validating every intermediate object and
/// checking end-to-end identity. Per-leg failures are reported with diffs
/// instead of being collapsed into a single verdict.
pub fn roundtrip_audit(seed: &ObjectHandle) -> ValidationReport {
    let mut report = ValidationReport::new();
    for rule in [
        "roundtrip.seed",
        "roundtrip.tom",
        "roundtrip.ensemble",
        "roundtrip.arrangement",
        "roundtrip.trianguloid",
        "roundtrip.subdivision",
        "roundtrip.identity",
    ] {
        report.mark_checked(rule);
    }
    macro_rules! leg {
        ($rule:expr, $expr:expr) => {
            match $expr {
                Ok(value) => value,
                Err(e) => {
                    report.fail($rule, e.to_string(), json!({"kind": seed.kind()}));
                    return report;
                }
            }
        };
    }
    let entry = leg!("roundtrip.seed", handle_to_fms(seed));
    let seed_check = entry.validate(ValidationMode::Full);
    if !seed_check.verdict {
        report.fail("roundtrip.seed", seed_check.summary(), json!({"kind": seed.kind()}));
        return report;
    }
    let tom = leg!(
        "roundtrip.tom",
        GenericTom::from_tree_types(entry.n(), entry.d(), entry.cells().to_vec())
    );
    let tom_check = leg!("roundtrip.tom", tom.validate());
    if !tom_check.verdict {
        report.fail("roundtrip.tom", tom_check.summary(), json!({}));
        return report;
    }
    let stack = leg!("roundtrip.ensemble", extraction(&tom));
    let stack_check = stack.validate_ensemble(EnsembleLevel::Full);
    if !stack_check.verdict {
        report.fail("roundtrip.ensemble", stack_check.summary(), json!({}));
        return report;
    }
    let arr = leg!("roundtrip.arrangement", arrangement_from_ensemble(&stack));
    let arr_check = arr.validate(ArrangementLevel::TopeArrangement);
    if !arr_check.verdict {
        report.fail("roundtrip.arrangement", arr_check.summary(), json!({}));
        return report;
    }
    let tri_check = arr.validate(ArrangementLevel::Trianguloid);
    if !tri_check.verdict {
        report.fail("roundtrip.trianguloid", tri_check.summary(), json!({}));
        return report;
    }
    let rebuilt = leg!("roundtrip.subdivision", fms_from_arrangement(&arr));
    if rebuilt != entry {
        let missing: Vec<_> = entry
            .cells()
            .iter()
            .filter(|c| !rebuilt.cells().contains(c))
            .collect();
        let extra: Vec<_> = rebuilt
            .cells()
            .iter()
            .filter(|c| !entry.cells().contains(c))
            .collect();
        report.fail(
            "roundtrip.identity",
            "rebuilt subdivision differs from the entry subdivision",
            json!({"only_in_input": missing, "only_in_rebuilt": extra}),
        );
    }
    report
}
