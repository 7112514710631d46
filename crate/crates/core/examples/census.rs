//! Prints the enumeration census for a spread of desk-scale sizes, with
//! timings. Handy when freezing new regression counts.

use std::time::Instant;
use tropom::enumerate::{count, EnumerationKind, EnumerationTask};

fn main() {
    for (kind, n, d) in [
        (EnumerationKind::Fms, 3, 3),
        (EnumerationKind::Fms, 3, 4),
        (EnumerationKind::Fms, 4, 3),
        (EnumerationKind::Trianguloid, 3, 3),
        (EnumerationKind::PreTrianguloid, 3, 3),
        (EnumerationKind::TopeArrangement, 3, 3),
        (EnumerationKind::MatchingField, 4, 3),
        (EnumerationKind::LinkageMatchingField, 4, 3),
        (EnumerationKind::LinkageMatchingField, 5, 2),
    ] {
        let t = Instant::now();
        let c = count(&EnumerationTask::new(kind, n, d)).unwrap();
        println!("{} ({},{}) = {}  [{:?}]", kind.as_str(), n, d, c, t.elapsed());
    }
}
