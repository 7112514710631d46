//! Matching fields, tope fields, matching stacks and the linkage axioms.
//!
//! A matching field assigns a perfect matching `σ → [d̄]` to every d-subset
//! `σ ⊆ [n′]`. The linkage axiom has five equivalent formulations; each is
//! checked literally and independently, with no short-circuiting through the
//! equivalence theorem — their agreement is a test target, not an assumption.
//!
//! Pointed fields reserve the last `d` left vertices as forced partners of
//! the right vertices; dropping those vertices turns the field into a
//! matching stack (one partial matching per equal-size subset pair), and
//! completion reverses that. Tope fields generalize matching fields to
//! heavier right degree vectors and support amalgamation, which grows a field
//! into a full tope arrangement one right vertex at a time.

use crate::bigraph::{
    incompatibility_witness, k_subset_masks, mask_bits, BiGraph, Side,
};
use crate::error::{Error, Result};
use crate::fms::{one_based, one_based_pairs};
use crate::lattice::LatticePoint;
use crate::report::ValidationReport;
use serde_json::json;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkageVariant {
    Strong,
    Weak,
    ThreeElement,
    Exchange,
    Elimination,
}

impl LinkageVariant {
    pub const ALL: [LinkageVariant; 5] = [
        LinkageVariant::Strong,
        LinkageVariant::Weak,
        LinkageVariant::ThreeElement,
        LinkageVariant::Exchange,
        LinkageVariant::Elimination,
    ];

    pub fn rule(&self) -> &'static str {
        match self {
            LinkageVariant::Strong => "field.linkage.strong",
            LinkageVariant::Weak => "field.linkage.weak",
            LinkageVariant::ThreeElement => "field.linkage.three_element",
            LinkageVariant::Exchange => "field.linkage.exchange",
            LinkageVariant::Elimination => "field.linkage.elimination",
        }
    }
}

impl std::str::FromStr for LinkageVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strong" => Ok(LinkageVariant::Strong),
            "weak" => Ok(LinkageVariant::Weak),
            "three_element" => Ok(LinkageVariant::ThreeElement),
            "exchange" => Ok(LinkageVariant::Exchange),
            "elimination" => Ok(LinkageVariant::Elimination),
            other => Err(Error::Parse(format!("unknown linkage variant `{other}`"))),
        }
    }
}

/// Where a linkage covector came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// A (k+1)-subset of the left vertex set.
    Tau(Vec<usize>),
    /// A subset pair of a matching stack.
    Pair { left: Vec<usize>, right: Vec<usize> },
    /// A (d−1)-subset, for the strong inverse direction.
    Rho(Vec<usize>),
}

/// Union-of-matchings graph together with the verdict of its defining shape
/// condition. A failed verdict keeps the raw union as the diagnostic witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkageCovector {
    pub graph: BiGraph,
    pub provenance: Provenance,
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingField {
    n_prime: usize,
    d: usize,
    pointed: bool,
    assignments: BTreeMap<u64, BiGraph>,
}

impl MatchingField {
    /// Pointed fields interpret the last `d` left vertices as the forced
    /// partners: left vertex `n + j` must always match right vertex `j`.
    pub fn new(
        n_prime: usize,
        d: usize,
        pointed: bool,
        assignments: BTreeMap<u64, BiGraph>,
    ) -> Result<Self> {
        let probe = BiGraph::empty(n_prime, d)?;
        if n_prime < d {
            return Err(Error::Parse(format!(
                "a matching field needs at least d left vertices, got ({n_prime},{d})"
            )));
        }
        if pointed && n_prime < d {
            return Err(Error::NotPointed);
        }
        let n = n_prime - d;
        for sigma in k_subset_masks(n_prime, d) {
            let m = assignments
                .get(&sigma)
                .ok_or_else(|| Error::MissingAssignment(one_based_mask(sigma)))?;
            probe.same_ambient(m)?;
            if !is_matching_onto(m, sigma, (1 << d) - 1) {
                return Err(Error::NotABijection(one_based_mask(sigma)));
            }
            if pointed {
                for j in 0..d {
                    if sigma >> (n + j) & 1 == 1 && !m.has_edge(n + j, j) {
                        return Err(Error::PointedViolation {
                            vertex: n + j + 1,
                            partner: j + 1,
                        });
                    }
                }
            }
        }
        let expected = k_subset_masks(n_prime, d).len();
        if assignments.len() != expected {
            let stray = assignments
                .keys()
                .find(|k| (k.count_ones() as usize) != d)
                .copied()
                .unwrap_or(0);
            return Err(Error::Parse(format!(
                "{} assignments for {} subsets (stray key {:?})",
                assignments.len(),
                expected,
                one_based_mask(stray)
            )));
        }
        Ok(MatchingField {
            n_prime,
            d,
            pointed,
            assignments,
        })
    }

    /// Builds assignments from a function mapping each sorted d-subset to the
    /// images of its elements, in subset order.
    pub fn from_images<F>(n_prime: usize, d: usize, pointed: bool, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Vec<usize>,
    {
        let mut assignments = BTreeMap::new();
        for sigma in k_subset_masks(n_prime, d) {
            let elems: Vec<usize> = mask_bits(sigma).collect();
            let images = f(&elems);
            let graph = BiGraph::from_edges(
                n_prime,
                d,
                elems.iter().copied().zip(images.iter().copied()),
            )?;
            assignments.insert(sigma, graph);
        }
        MatchingField::new(n_prime, d, pointed, assignments)
    }

    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_pointed(&self) -> bool {
        self.pointed
    }

    /// Size of the free (non-pointed) left part.
    pub fn free_count(&self) -> usize {
        if self.pointed {
            self.n_prime - self.d
        } else {
            self.n_prime
        }
    }

    pub fn assignments(&self) -> impl Iterator<Item = (u64, &BiGraph)> {
        self.assignments.iter().map(|(&k, v)| (k, v))
    }

    pub fn assignment(&self, sigma: u64) -> Result<&BiGraph> {
        self.assignments
            .get(&sigma)
            .ok_or_else(|| Error::MissingAssignment(one_based_mask(sigma)))
    }

    /// `M_σ(i)`: the right vertex matched to `i`.
    pub fn image(&self, sigma: u64, i: usize) -> Result<usize> {
        let m = self.assignment(sigma)?;
        let row = m.row(i);
        if row == 0 {
            return Err(Error::IndexOutOfRange { index: i, len: self.n_prime });
        }
        Ok(row.trailing_zeros() as usize)
    }

    pub fn to_tope_field(&self) -> TopeField {
        TopeField {
            n_prime: self.n_prime,
            d: self.d,
            v: LatticePoint::new(vec![1; self.d]),
            assignments: self.assignments.clone(),
        }
    }

    /// One linkage verdict, checked literally as stated by the chosen
    /// variant; each violation carries the offending subset(s).
    pub fn check_linkage(&self, variant: LinkageVariant) -> ValidationReport {
        let mut report = ValidationReport::new();
        report.mark_checked(variant.rule());
        match variant {
            LinkageVariant::Strong => self.linkage_strong(&mut report),
            LinkageVariant::Weak => self.linkage_weak(&mut report),
            LinkageVariant::ThreeElement => self.linkage_three_element(&mut report),
            LinkageVariant::Exchange => self.linkage_exchange(&mut report),
            LinkageVariant::Elimination => self.linkage_elimination(&mut report),
        }
        report
    }

    /// The union of matchings over all d-subsets of a (d+1)-subset τ must be
    /// a spanning tree of τ ⊔ [d̄] with every right degree 2.
    fn linkage_strong(&self, report: &mut ValidationReport) {
        for tau in k_subset_masks(self.n_prime, self.d + 1) {
            let cov = self.tau_union(tau);
            if !cov.verdict {
                report.fail(
                    LinkageVariant::Strong.rule(),
                    format!("union over subsets of {:?} is not a doubled-right tree", one_based_mask(tau)),
                    json!({"tau": one_based_mask(tau), "union": cov.graph}),
                );
            }
        }
    }

    /// For each τ and each right vertex j̄ there are two elements i, i′ of τ
    /// whose facet matchings differ only in the neighbor of j̄.
    fn linkage_weak(&self, report: &mut ValidationReport) {
        for tau in k_subset_masks(self.n_prime, self.d + 1) {
            let elems: Vec<usize> = mask_bits(tau).collect();
            for j in 0..self.d {
                let found = pairs(&elems).any(|(i, ip)| {
                    let g = &self.assignments[&(tau & !(1 << i))];
                    let h = &self.assignments[&(tau & !(1 << ip))];
                    differ_only_at_column(g, h, j)
                });
                if !found {
                    report.fail(
                        LinkageVariant::Weak.rule(),
                        format!(
                            "no two facet matchings of {:?} differ only at right vertex {}",
                            one_based_mask(tau),
                            j + 1
                        ),
                        json!({"tau": one_based_mask(tau), "right_vertex": j + 1}),
                    );
                }
            }
        }
    }

    /// For distinct i₁,i₂,i₃ ∈ τ: M_{τ∖i₁}(i₂) ≠ M_{τ∖i₃}(i₂) forces
    /// M_{τ∖i₁}(i₃) = M_{τ∖i₂}(i₃).
    fn linkage_three_element(&self, report: &mut ValidationReport) {
        for tau in k_subset_masks(self.n_prime, self.d + 1) {
            let elems: Vec<usize> = mask_bits(tau).collect();
            for &i1 in &elems {
                for &i2 in &elems {
                    for &i3 in &elems {
                        if i1 == i2 || i2 == i3 || i1 == i3 {
                            continue;
                        }
                        let at = |drop: usize, of: usize| {
                            self.image(tau & !(1 << drop), of).expect("member of subset")
                        };
                        if at(i1, i2) != at(i3, i2) && at(i1, i3) != at(i2, i3) {
                            report.fail(
                                LinkageVariant::ThreeElement.rule(),
                                format!(
                                    "three-element condition fails on {:?} at ({},{},{})",
                                    one_based_mask(tau),
                                    i1 + 1,
                                    i2 + 1,
                                    i3 + 1
                                ),
                                json!({
                                    "tau": one_based_mask(tau),
                                    "triple": [i1 + 1, i2 + 1, i3 + 1],
                                }),
                            );
                        }
                    }
                }
            }
        }
    }

    /// For any two distinct subsets σ ≠ σ′ there is a pivot step out of σ
    /// guided by σ′: some i ∈ σ and i′ ∈ σ′∖σ share the image
    /// j̄ = M_σ(i) = M_{σ′}(i′), and swapping (i,j̄) for (i′,j̄) in M_σ yields
    /// exactly M_{σ∖i∪i′}. Prescribing i ∈ σ∖σ′ instead is strictly stronger
    /// and fails already for order-preserving fields; dropping the M_{σ′}
    /// guide is strictly weaker and admits fields whose pivot relation splits
    /// into disconnected pockets.
    fn linkage_exchange(&self, report: &mut ValidationReport) {
        let sigmas = k_subset_masks(self.n_prime, self.d);
        for &s in &sigmas {
            for &sp in &sigmas {
                if s == sp {
                    continue;
                }
                let ok = mask_bits(s).any(|i| {
                    let j = self.image(s, i).expect("member");
                    mask_bits(sp & !s).any(|ip| {
                        self.image(sp, ip).expect("member") == j && {
                            let target = s & !(1 << i) | 1 << ip;
                            self.assignments[&s].without_edge(i, j).with_edge(ip, j)
                                == self.assignments[&target]
                        }
                    })
                });
                if !ok {
                    report.fail(
                        LinkageVariant::Exchange.rule(),
                        format!(
                            "no pivot out of {:?} guided by {:?}",
                            one_based_mask(s),
                            one_based_mask(sp)
                        ),
                        json!({"sigma": one_based_mask(s), "sigma_prime": one_based_mask(sp)}),
                    );
                }
            }
        }
    }

    /// For distinct σ, σ′ and i ∈ σ∩σ′ with M_σ(i) ≠ M_{σ′}(i), some
    /// d-subset σ″ ⊆ (σ∪σ′)∖{i} has its matching inside M_σ ∪ M_{σ′}.
    fn linkage_elimination(&self, report: &mut ValidationReport) {
        let sigmas = k_subset_masks(self.n_prime, self.d);
        for (a, &s) in sigmas.iter().enumerate() {
            for &sp in &sigmas[a + 1..] {
                let union = self.assignments[&s].union(&self.assignments[&sp]).expect("same ambient");
                for i in mask_bits(s & sp) {
                    if self.image(s, i).expect("member") == self.image(sp, i).expect("member") {
                        continue;
                    }
                    let pool = (s | sp) & !(1 << i);
                    let ok = k_subset_masks(self.n_prime, self.d)
                        .into_iter()
                        .filter(|&spp| spp & !pool == 0)
                        .any(|spp| self.assignments[&spp].is_subgraph_of(&union));
                    if !ok {
                        report.fail(
                            LinkageVariant::Elimination.rule(),
                            format!(
                                "no eliminator for {:?} and {:?} at {}",
                                one_based_mask(s),
                                one_based_mask(sp),
                                i + 1
                            ),
                            json!({
                                "sigma": one_based_mask(s),
                                "sigma_prime": one_based_mask(sp),
                                "dropped": i + 1,
                            }),
                        );
                    }
                }
            }
        }
    }

    fn tau_union(&self, tau: u64) -> LinkageCovector {
        let mut graph = BiGraph::empty(self.n_prime, self.d).expect("valid ambient");
        for i in mask_bits(tau) {
            graph = graph.union(&self.assignments[&(tau & !(1 << i))]).expect("same ambient");
        }
        let verdict = graph.is_tree_on_support()
            && (0..self.d).all(|j| graph.right_degree(j) == 2);
        LinkageCovector {
            graph,
            provenance: Provenance::Tau(mask_bits(tau).collect()),
            verdict,
        }
    }

    /// The strong-linkage union for one (d+1)-subset. A non-tree union is
    /// returned with a false verdict rather than an error: the raw graph is
    /// the natural diagnostic witness.
    pub fn linkage_covector(&self, tau: &[usize]) -> Result<LinkageCovector> {
        let mask = validate_subset(tau, self.n_prime, self.d + 1)?;
        Ok(self.tau_union(mask))
    }

    /// For every (d−1)-subset ρ, the union of matchings over all σ ⊇ ρ must
    /// be a forest in which the free vertices of ρ have degree 2 and every
    /// other participating left vertex degree 1.
    pub fn check_strong_inverse_linkage(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        report.mark_checked("field.strong_inverse_linkage");
        let free = self.free_count();
        for rho in k_subset_masks(self.n_prime, self.d - 1) {
            let mut union = BiGraph::empty(self.n_prime, self.d).expect("valid ambient");
            for i in 0..self.n_prime {
                if rho >> i & 1 == 0 {
                    union = union
                        .union(&self.assignments[&(rho | 1 << i)])
                        .expect("same ambient");
                }
            }
            let mut ok = union.is_forest();
            for i in 0..self.n_prime {
                let want = if rho >> i & 1 == 1 && i < free { 2 } else { 1 };
                ok &= union.left_degree(i) == want;
            }
            if !ok {
                report.fail(
                    "field.strong_inverse_linkage",
                    format!("union over supersets of {:?} is not a doubled-ρ forest", one_based_mask(rho)),
                    json!({"rho": one_based_mask(rho), "union": union}),
                );
            }
        }
        report
    }

    /// Drops the pointed vertices and their forced edges, filing each
    /// residual matching under (σ ∩ [n], [d̄] minus the forced images).
    pub fn reduce_pointed(&self) -> Result<MatchingStack> {
        if !self.pointed {
            return Err(Error::NotPointed);
        }
        let n = self.n_prime - self.d;
        let mut assignments = BTreeMap::new();
        for (&sigma, m) in &self.assignments {
            let left = sigma & low_mask(n);
            let pointed_part = sigma >> n;
            let right = !pointed_part & low_mask(self.d);
            let reduced = BiGraph::from_edges(
                n.max(1),
                self.d,
                m.edges().into_iter().filter(|&(i, _)| i < n),
            )?;
            assignments.insert((left, right), reduced);
        }
        MatchingStack::new(n, self.d, assignments)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleLevel {
    Semi,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingStack {
    n: usize,
    d: usize,
    assignments: BTreeMap<(u64, u64), BiGraph>,
}

impl MatchingStack {
    /// One partial matching per equal-size subset pair, including the empty
    /// pair. Graphs live in the `K_{n,d}` ambient (n rows even when n = 0 is
    /// padded to 1 internally by the caller; here n ≥ 1 is required).
    pub fn new(
        n: usize,
        d: usize,
        assignments: BTreeMap<(u64, u64), BiGraph>,
    ) -> Result<Self> {
        let n_ambient = n.max(1);
        let probe = BiGraph::empty(n_ambient, d)?;
        let mut expected = 0usize;
        for k in 0..=n.min(d) {
            for i_mask in k_subset_masks(n, k) {
                for j_mask in k_subset_masks(d, k) {
                    expected += 1;
                    let m = assignments.get(&(i_mask, j_mask)).ok_or_else(|| {
                        Error::MissingPair(one_based_mask(i_mask), one_based_mask(j_mask))
                    })?;
                    probe.same_ambient(m)?;
                    if !is_matching_onto(m, i_mask, j_mask) {
                        return Err(Error::NotABijection(one_based_mask(i_mask)));
                    }
                }
            }
        }
        if assignments.len() != expected {
            return Err(Error::Parse(format!(
                "{} assignments for {} subset pairs",
                assignments.len(),
                expected
            )));
        }
        Ok(MatchingStack { n, d, assignments })
    }

    /// Builds from a function mapping (sorted I, sorted J̄) to the images of
    /// I's elements, in order.
    pub fn from_images<F>(n: usize, d: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize], &[usize]) -> Vec<usize>,
    {
        let mut assignments = BTreeMap::new();
        for k in 0..=n.min(d) {
            for i_mask in k_subset_masks(n, k) {
                for j_mask in k_subset_masks(d, k) {
                    let is: Vec<usize> = mask_bits(i_mask).collect();
                    let js: Vec<usize> = mask_bits(j_mask).collect();
                    let images = f(&is, &js);
                    let graph = BiGraph::from_edges(
                        n.max(1),
                        d,
                        is.iter().copied().zip(images.iter().copied()),
                    )?;
                    assignments.insert((i_mask, j_mask), graph);
                }
            }
        }
        MatchingStack::new(n, d, assignments)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn assignments(&self) -> impl Iterator<Item = ((u64, u64), &BiGraph)> {
        self.assignments.iter().map(|(&k, v)| (k, v))
    }

    pub fn matching(&self, left: u64, right: u64) -> Result<&BiGraph> {
        self.assignments
            .get(&(left, right))
            .ok_or_else(|| Error::MissingPair(one_based_mask(left), one_based_mask(right)))
    }

    /// Closure (as pairwise compatibility, the definition's equivalent form)
    /// plus left linkage; `Full` adds right linkage. The extended left
    /// linkage covectors are audited as well since they combine the first two
    /// axioms into one shape condition.
    pub fn validate_ensemble(&self, level: EnsembleLevel) -> ValidationReport {
        let mut report = ValidationReport::new();
        self.check_closure(&mut report);
        self.check_left_linkage(&mut report);
        self.check_extended_left_linkage(&mut report);
        if level == EnsembleLevel::Full {
            self.check_right_linkage(&mut report);
        }
        report
    }

    fn check_closure(&self, report: &mut ValidationReport) {
        report.mark_checked("stack.closure");
        let keys: Vec<(u64, u64)> = self.assignments.keys().copied().collect();
        for (a, &ka) in keys.iter().enumerate() {
            for &kb in &keys[a + 1..] {
                let w = incompatibility_witness(&self.assignments[&ka], &self.assignments[&kb])
                    .expect("matchings are forests");
                if let Some(w) = w {
                    report.fail(
                        "stack.closure",
                        format!(
                            "matchings for ({:?},{:?}) and ({:?},{:?}) are incompatible",
                            one_based_mask(ka.0),
                            one_based_mask(ka.1),
                            one_based_mask(kb.0),
                            one_based_mask(kb.1)
                        ),
                        json!({
                            "first": [one_based_mask(ka.0), one_based_mask(ka.1)],
                            "second": [one_based_mask(kb.0), one_based_mask(kb.1)],
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

    /// The literal restriction form of the closure axiom, kept as an
    /// independent route: if M_{I,J̄} contains a perfect matching between
    /// I′ ⊆ I and J̄′ ⊆ J̄, that matching must be the stored M_{I′,J̄′}.
    pub fn closure_by_restriction(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        report.mark_checked("stack.closure_restriction");
        for (&(i_mask, j_mask), m) in &self.assignments {
            let subsets_i: Vec<u64> = submasks(i_mask).collect();
            for ip in subsets_i {
                // restriction of m to the rows of ip
                let restricted = BiGraph::from_edges(
                    m.n(),
                    self.d,
                    m.edges().into_iter().filter(|&(i, _)| ip >> i & 1 == 1),
                )
                .expect("subgraph");
                let jp = restricted.support_mask(Side::Right);
                if jp & !j_mask != 0 || (jp.count_ones() != ip.count_ones()) {
                    continue;
                }
                // m contains a perfect matching between ip and jp
                if restricted != self.assignments[&(ip, jp)] {
                    report.fail(
                        "stack.closure_restriction",
                        format!(
                            "restriction of ({:?},{:?}) to ({:?},{:?}) differs from the stored matching",
                            one_based_mask(i_mask),
                            one_based_mask(j_mask),
                            one_based_mask(ip),
                            one_based_mask(jp)
                        ),
                        json!({
                            "pair": [one_based_mask(i_mask), one_based_mask(j_mask)],
                            "sub_pair": [one_based_mask(ip), one_based_mask(jp)],
                        }),
                    );
                }
            }
        }
        report
    }

    fn check_left_linkage(&self, report: &mut ValidationReport) {
        report.mark_checked("stack.left_linkage");
        for (i_mask, j_mask) in self.oversize_pairs(Side::Left) {
            let cov = self.left_linkage_covector_masked(i_mask, j_mask);
            if !cov.verdict {
                report.fail(
                    "stack.left_linkage",
                    format!(
                        "left linkage fails at ({:?},{:?})",
                        one_based_mask(i_mask),
                        one_based_mask(j_mask)
                    ),
                    json!({
                        "I": one_based_mask(i_mask),
                        "J": one_based_mask(j_mask),
                        "union": cov.graph,
                    }),
                );
            }
        }
    }

    fn check_right_linkage(&self, report: &mut ValidationReport) {
        report.mark_checked("stack.right_linkage");
        for (i_mask, j_mask) in self.oversize_pairs(Side::Right) {
            let cov = self.right_linkage_covector_masked(i_mask, j_mask);
            if !cov.verdict {
                report.fail(
                    "stack.right_linkage",
                    format!(
                        "right linkage fails at ({:?},{:?})",
                        one_based_mask(i_mask),
                        one_based_mask(j_mask)
                    ),
                    json!({
                        "I": one_based_mask(i_mask),
                        "J": one_based_mask(j_mask),
                        "union": cov.graph,
                    }),
                );
            }
        }
    }

    fn check_extended_left_linkage(&self, report: &mut ValidationReport) {
        report.mark_checked("stack.extended_left_linkage");
        for (i_mask, j_mask) in self.oversize_pairs(Side::Left) {
            let cov = self.extended_left_linkage_covector_masked(i_mask, j_mask);
            if !cov.verdict {
                report.fail(
                    "stack.extended_left_linkage",
                    format!(
                        "extended left linkage fails at ({:?},{:?})",
                        one_based_mask(i_mask),
                        one_based_mask(j_mask)
                    ),
                    json!({
                        "I": one_based_mask(i_mask),
                        "J": one_based_mask(j_mask),
                        "union": cov.graph,
                    }),
                );
            }
        }
    }

    /// Pairs with the `side` subset one element larger than the other.
    fn oversize_pairs(&self, side: Side) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let top = match side {
            Side::Left => self.n.min(self.d + 1),
            Side::Right => self.d.min(self.n + 1),
        };
        for k in 1..=top {
            let (big, big_n, small, small_n) = match side {
                Side::Left => (k, self.n, k - 1, self.d),
                Side::Right => (k, self.d, k - 1, self.n),
            };
            for b in k_subset_masks(big_n, big) {
                for s in k_subset_masks(small_n, small) {
                    out.push(match side {
                        Side::Left => (b, s),
                        Side::Right => (s, b),
                    });
                }
            }
        }
        out
    }

    fn union_over<I: IntoIterator<Item = (u64, u64)>>(&self, keys: I) -> BiGraph {
        let mut graph = BiGraph::empty(self.n.max(1), self.d).expect("valid ambient");
        for key in keys {
            graph = graph.union(&self.assignments[&key]).expect("same ambient");
        }
        graph
    }

    fn left_linkage_covector_masked(&self, i_mask: u64, j_mask: u64) -> LinkageCovector {
        let graph =
            self.union_over(mask_bits(i_mask).map(|i| (i_mask & !(1 << i), j_mask)));
        // |I| = 1 gives the empty union over the single subset I′ = ∅, which
        // is the one-vertex tree.
        let verdict = if i_mask.count_ones() == 1 {
            graph.is_empty()
        } else {
            graph.is_tree_on_support()
                && (0..self.d).all(|j| {
                    graph.right_degree(j) == if j_mask >> j & 1 == 1 { 2 } else { 0 }
                })
        };
        LinkageCovector {
            graph,
            provenance: Provenance::Pair {
                left: mask_bits(i_mask).collect(),
                right: mask_bits(j_mask).collect(),
            },
            verdict,
        }
    }

    fn right_linkage_covector_masked(&self, i_mask: u64, j_mask: u64) -> LinkageCovector {
        let graph =
            self.union_over(mask_bits(j_mask).map(|j| (i_mask, j_mask & !(1 << j))));
        let verdict = if j_mask.count_ones() == 1 {
            graph.is_empty()
        } else {
            graph.is_tree_on_support()
                && (0..self.n).all(|i| {
                    graph.left_degree(i) == if i_mask >> i & 1 == 1 { 2 } else { 0 }
                })
        };
        LinkageCovector {
            graph,
            provenance: Provenance::Pair {
                left: mask_bits(i_mask).collect(),
                right: mask_bits(j_mask).collect(),
            },
            verdict,
        }
    }

    fn extended_left_linkage_covector_masked(&self, i_mask: u64, j_mask: u64) -> LinkageCovector {
        let mut graph =
            self.union_over(mask_bits(i_mask).map(|i| (i_mask & !(1 << i), j_mask)));
        for j in 0..self.d {
            if j_mask >> j & 1 == 0 {
                graph = graph
                    .union(&self.assignments[&(i_mask, j_mask | 1 << j)])
                    .expect("same ambient");
            }
        }
        let verdict = graph.is_tree_on_support()
            && (0..self.d).all(|j| {
                graph.right_degree(j) == if j_mask >> j & 1 == 1 { 2 } else { 1 }
            });
        LinkageCovector {
            graph,
            provenance: Provenance::Pair {
                left: mask_bits(i_mask).collect(),
                right: mask_bits(j_mask).collect(),
            },
            verdict,
        }
    }

    pub fn left_linkage_covector(&self, left: &[usize], right: &[usize]) -> Result<LinkageCovector> {
        let (i_mask, j_mask) = self.pair_masks(left, right, 1)?;
        Ok(self.left_linkage_covector_masked(i_mask, j_mask))
    }

    pub fn right_linkage_covector(&self, left: &[usize], right: &[usize]) -> Result<LinkageCovector> {
        let (j_mask, i_mask) = {
            let j = validate_subset(right, self.d, left.len() + 1)?;
            let i = validate_subset(left, self.n, left.len())?;
            (j, i)
        };
        Ok(self.right_linkage_covector_masked(i_mask, j_mask))
    }

    pub fn extended_left_linkage_covector(
        &self,
        left: &[usize],
        right: &[usize],
    ) -> Result<LinkageCovector> {
        let (i_mask, j_mask) = self.pair_masks(left, right, 1)?;
        Ok(self.extended_left_linkage_covector_masked(i_mask, j_mask))
    }

    fn pair_masks(&self, left: &[usize], right: &[usize], excess: usize) -> Result<(u64, u64)> {
        let i_mask = validate_subset(left, self.n, right.len() + excess)?;
        let j_mask = validate_subset(right, self.d, right.len())?;
        Ok((i_mask, j_mask))
    }

    /// Rebuilds the pointed matching field: each subset pair (I, J̄) becomes
    /// the d-subset I ⊔ {pointed copies of [d̄]∖J̄} with the forced edges put
    /// back.
    pub fn complete(&self) -> Result<MatchingField> {
        let n_prime = self.n + self.d;
        let mut assignments = BTreeMap::new();
        for (&(i_mask, j_mask), m) in &self.assignments {
            let pointed_part = !j_mask & low_mask(self.d);
            let sigma = i_mask | pointed_part << self.n;
            let mut edges: Vec<(usize, usize)> =
                m.edges().into_iter().filter(|&(i, _)| i < self.n).collect();
            for j in mask_bits(pointed_part) {
                edges.push((self.n + j, j));
            }
            assignments.insert(sigma, BiGraph::from_edges(n_prime, self.d, edges)?);
        }
        MatchingField::new(n_prime, self.d, true, assignments)
    }
}

/// A field of partial topes: one map `σ → [d̄]` per k-subset σ, all with the
/// same right degree vector v (the type), where k = Σv.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopeField {
    n_prime: usize,
    d: usize,
    v: LatticePoint,
    assignments: BTreeMap<u64, BiGraph>,
}

impl TopeField {
    pub fn new(
        n_prime: usize,
        d: usize,
        v: LatticePoint,
        assignments: BTreeMap<u64, BiGraph>,
    ) -> Result<Self> {
        let probe = BiGraph::empty(n_prime, d)?;
        if v.dim() != d {
            return Err(Error::AmbientMismatch(n_prime, d, n_prime, v.dim()));
        }
        if v.coords().contains(&0) {
            return Err(Error::Parse(format!(
                "tope field type {v} must have all coordinates positive"
            )));
        }
        let k = v.level();
        if k > n_prime {
            return Err(Error::ThicknessExhausted);
        }
        for sigma in k_subset_masks(n_prime, k) {
            let m = assignments
                .get(&sigma)
                .ok_or_else(|| Error::MissingAssignment(one_based_mask(sigma)))?;
            probe.same_ambient(m)?;
            let left_ok = (0..n_prime)
                .all(|i| m.left_degree(i) == usize::from(sigma >> i & 1 == 1));
            if !left_ok || m.right_degrees() != v.coords() {
                return Err(Error::NotABijection(one_based_mask(sigma)));
            }
        }
        if assignments.len() != k_subset_masks(n_prime, k).len() {
            return Err(Error::Parse(format!(
                "tope field has stray assignments beyond its {}-subsets",
                k
            )));
        }
        Ok(TopeField {
            n_prime,
            d,
            v,
            assignments,
        })
    }

    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn type_vector(&self) -> &LatticePoint {
        &self.v
    }

    pub fn thickness(&self) -> usize {
        self.v.level()
    }

    pub fn is_maximal(&self) -> bool {
        self.thickness() == self.n_prime
    }

    pub fn assignments(&self) -> impl Iterator<Item = (u64, &BiGraph)> {
        self.assignments.iter().map(|(&k, v)| (k, v))
    }

    pub fn assignment(&self, sigma: u64) -> Result<&BiGraph> {
        self.assignments
            .get(&sigma)
            .ok_or_else(|| Error::MissingAssignment(one_based_mask(sigma)))
    }

    /// The single tope of a maximal field.
    pub fn the_tope(&self) -> Result<&BiGraph> {
        if !self.is_maximal() {
            return Err(Error::Parse(format!(
                "tope field of thickness {} < {} is not maximal",
                self.thickness(),
                self.n_prime
            )));
        }
        self.assignment(low_mask(self.n_prime))
    }

    fn tau_union(&self, tau: u64) -> LinkageCovector {
        let mut graph = BiGraph::empty(self.n_prime, self.d).expect("valid ambient");
        for i in mask_bits(tau) {
            graph = graph.union(&self.assignments[&(tau & !(1 << i))]).expect("same ambient");
        }
        let verdict = graph.is_tree_on_support()
            && (0..self.d).all(|j| graph.right_degree(j) == self.v.get(j) + 1);
        LinkageCovector {
            graph,
            provenance: Provenance::Tau(mask_bits(tau).collect()),
            verdict,
        }
    }

    pub fn linkage_covector(&self, tau: &[usize]) -> Result<LinkageCovector> {
        let mask = validate_subset(tau, self.n_prime, self.thickness() + 1)?;
        Ok(self.tau_union(mask))
    }

    /// Linkage for a tope field: every (k+1)-subset union is a tree with
    /// right degrees v + 1.
    pub fn check_linkage(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        report.mark_checked("tope_field.linkage");
        for tau in k_subset_masks(self.n_prime, self.thickness() + 1) {
            let cov = self.tau_union(tau);
            if !cov.verdict {
                report.fail(
                    "tope_field.linkage",
                    format!("union over subsets of {:?} is not a tree of type v+1", one_based_mask(tau)),
                    json!({"tau": one_based_mask(tau), "union": cov.graph}),
                );
            }
        }
        report
    }

    /// The j̄-amalgamation: every (k+1)-subset gets the j̄-pull of its
    /// linkage covector, producing a field of type v + e_j̄.
    pub fn amalgamate(&self, j: usize) -> Result<TopeField> {
        if j >= self.d {
            return Err(Error::IndexOutOfRange { index: j, len: self.d });
        }
        if self.thickness() >= self.n_prime {
            return Err(Error::ThicknessExhausted);
        }
        let mut assignments = BTreeMap::new();
        for tau in k_subset_masks(self.n_prime, self.thickness() + 1) {
            let cov = self.tau_union(tau);
            if !cov.verdict {
                return Err(Error::CovectorNotTree(one_based_mask(tau)));
            }
            assignments.insert(tau, cov.graph.pull(Side::Right, j)?);
        }
        TopeField::new(self.n_prime, self.d, self.v.plus_unit(j), assignments)
    }

    /// Iterated amalgamation: j̄-steps in ascending order of j until the type
    /// reaches `target`.
    pub fn amalgamate_to(&self, target: &LatticePoint) -> Result<TopeField> {
        if target.dim() != self.d || !target.dominates(&self.v) {
            return Err(Error::Parse(format!(
                "amalgamation target {target} must dominate the current type {}",
                self.v
            )));
        }
        let mut field = self.clone();
        for j in 0..self.d {
            for _ in self.v.get(j)..target.get(j) {
                field = field.amalgamate(j)?;
            }
        }
        Ok(field)
    }
}

fn low_mask(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

fn one_based_mask(mask: u64) -> Vec<usize> {
    mask_bits(mask).map(|i| i + 1).collect()
}

/// Left support exactly `left`, right support exactly `right`, all degrees 1
/// on the supports: a perfect matching between the two subsets.
fn is_matching_onto(m: &BiGraph, left: u64, right: u64) -> bool {
    let mut seen_right = 0u64;
    for i in 0..m.n() {
        let row = m.row(i);
        match (left >> i & 1 == 1, row.count_ones()) {
            (true, 1) => seen_right |= row,
            (false, 0) => {}
            _ => return false,
        }
    }
    seen_right == right && (0..m.d()).all(|j| m.right_degree(j) == usize::from(right >> j & 1 == 1))
}

/// Every difference between the two graphs lies in the column of `j`.
fn differ_only_at_column(g: &BiGraph, h: &BiGraph, j: usize) -> bool {
    (0..g.n()).all(|i| g.row(i) & !h.row(i) & !(1 << j) == 0 && h.row(i) & !g.row(i) & !(1 << j) == 0)
}

fn pairs(elems: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    elems
        .iter()
        .enumerate()
        .flat_map(move |(a, &i)| elems[a + 1..].iter().map(move |&ip| (i, ip)))
}

fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut current = mask;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = current;
        if current == 0 {
            done = true;
        } else {
            current = (current - 1) & mask;
        }
        Some(out)
    })
}

fn validate_subset(elems: &[usize], n: usize, size: usize) -> Result<u64> {
    if elems.len() != size {
        return Err(Error::Parse(format!(
            "subset {:?} must have {size} elements",
            elems.iter().map(|&i| i + 1).collect::<Vec<_>>()
        )));
    }
    let mut mask = 0u64;
    for &i in elems {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        if mask >> i & 1 == 1 {
            return Err(Error::Parse(format!("repeated element {} in subset", i + 1)));
        }
        mask |= 1 << i;
    }
    Ok(mask)
}
