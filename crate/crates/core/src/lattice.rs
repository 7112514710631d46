//! Lattice points of dilated simplices `m·Δ^{d-1}`.
//!
//! A point is a vector of `d` non-negative coordinates; its *level* is the
//! coordinate sum. Positions of cells and topes are lattice points, and the
//! canonical indexing everywhere in this crate is the colexicographic order
//! produced by [`simplex_points`].

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(pub Vec<usize>);

impl LatticePoint {
    pub fn new(coords: Vec<usize>) -> Self {
        LatticePoint(coords)
    }

    pub fn zero(d: usize) -> Self {
        LatticePoint(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn level(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, j: usize) -> usize {
        self.0[j]
    }

    /// Coordinates with a strictly positive entry.
    pub fn support(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.0[j] > 0).collect()
    }

    pub fn plus_unit(&self, j: usize) -> Self {
        let mut c = self.0.clone();
        c[j] += 1;
        LatticePoint(c)
    }

    /// `self - e_j`, or `None` when the coordinate is already zero.
    pub fn minus_unit(&self, j: usize) -> Option<Self> {
        if self.0[j] == 0 {
            return None;
        }
        let mut c = self.0.clone();
        c[j] -= 1;
        Some(LatticePoint(c))
    }

    pub fn shift(&self, amount: usize) -> Self {
        LatticePoint(self.0.iter().map(|&c| c + amount).collect())
    }

    /// Componentwise sum; the points must have equal dimension.
    pub fn plus(&self, other: &LatticePoint) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        LatticePoint(self.0.iter().zip(&other.0).map(|(&a, &b)| a + b).collect())
    }

    /// Componentwise `self >= other`.
    pub fn dominates(&self, other: &LatticePoint) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    pub fn expect_level(&self, expected: usize) -> Result<()> {
        if self.level() != expected {
            return Err(Error::BadLevel {
                coords: self.0.clone(),
                expected,
                found: self.level(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// All lattice points of `level·Δ^{d-1}` in colexicographic order: point `a`
/// precedes `b` when, at the last coordinate where they differ, `a` is
/// smaller. The order is total and stable; ranks index arrays everywhere.
pub fn simplex_points(d: usize, level: usize) -> Vec<LatticePoint> {
    let mut out = Vec::new();
    let mut current = vec![0usize; d];
    fill(&mut out, &mut current, d, level, 0);
    out.sort_by(colex);
    out
}

fn fill(out: &mut Vec<LatticePoint>, current: &mut Vec<usize>, d: usize, rest: usize, j: usize) {
    if j + 1 == d {
        current[j] = rest;
        out.push(LatticePoint(current.clone()));
        current[j] = 0;
        return;
    }
    for v in 0..=rest {
        current[j] = v;
        fill(out, current, d, rest - v, j + 1);
    }
    current[j] = 0;
}

fn colex(a: &LatticePoint, b: &LatticePoint) -> std::cmp::Ordering {
    for (x, y) in a.0.iter().rev().zip(b.0.iter().rev()) {
        match x.cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// Rank of `p` in [`simplex_points`]`(p.dim(), p.level())`.
pub fn colex_rank(points: &[LatticePoint], p: &LatticePoint) -> Option<usize> {
    points.binary_search_by(|probe| colex(probe, p)).ok()
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc * (n - t) as u128 / (t + 1) as u128;
    }
    acc as usize
}
