//! Canonical JSON interchange for every object kind.
//!
//! All indices on the wire are 1-based; the library is 0-based internally.
//! Output is canonical — edges sorted lexicographically, assignments sorted
//! by index set, topes in dense position order — so equal objects serialize
//! to identical bytes. Lattice positions and the covector anchor `t` are
//! degree coordinates, not indices, and are written as-is.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

use crate::bigraph::{mask_bits, BiGraph};
use crate::cryptomorphism::ObjectHandle;
use crate::error::{Error, Result};
use crate::fms::FineMixedSubdivision;
use crate::lattice::LatticePoint;
use crate::matchfield::{MatchingField, MatchingStack};
use crate::tom::GenericTom;
use crate::topearr::TopeArrangement;
use crate::treelink::{CovectorEdge, TreeLinkageCovector};

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum HandleDto {
    Fms {
        n: usize,
        d: usize,
        cells: Vec<BiGraph>,
    },
    Tom {
        n: usize,
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tree_types: Option<Vec<BiGraph>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        types: Option<Vec<BiGraph>>,
    },
    MatchingField {
        n_prime: usize,
        d: usize,
        pointed: bool,
        assignments: Vec<FieldAssignmentDto>,
    },
    MatchingStack {
        n: usize,
        d: usize,
        assignments: Vec<StackAssignmentDto>,
    },
    TopeArrangement {
        n: usize,
        d: usize,
        topes: Vec<TopeDto>,
    },
}

#[derive(Serialize, Deserialize)]
struct FieldAssignmentDto {
    sigma: Vec<usize>,
    matching: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct StackAssignmentDto {
    #[serde(rename = "I")]
    left: Vec<usize>,
    #[serde(rename = "J")]
    right: Vec<usize>,
    matching: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct TopeDto {
    position: Vec<usize>,
    /// `map[i]` is the right vertex matched to left vertex i+1, 1-based.
    map: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CovectorDto {
    kind: String,
    t: Vec<usize>,
    edges: Vec<EdgeDto>,
    vertex_labels: BTreeMap<String, Vec<usize>>,
    core_tope: BiGraph,
}

#[derive(Serialize, Deserialize)]
struct EdgeDto {
    u: usize,
    v: usize,
    near_u: usize,
    near_v: usize,
}

fn one_based_mask(mask: u64) -> Vec<usize> {
    mask_bits(mask).map(|x| x + 1).collect()
}

fn mask_from_one_based(list: &[usize], len: usize, what: &str) -> Result<u64> {
    let mut mask = 0u64;
    for &x in list {
        if x == 0 || x > len {
            return Err(Error::Parse(format!(
                "{what} index {x} out of range 1..={len}"
            )));
        }
        if mask >> (x - 1) & 1 == 1 {
            return Err(Error::Parse(format!("{what} index {x} repeated")));
        }
        mask |= 1 << (x - 1);
    }
    Ok(mask)
}

fn edges_zero_based(
    pairs: &[(usize, usize)],
    n: usize,
    d: usize,
) -> Result<impl Iterator<Item = (usize, usize)> + '_> {
    for &(i, j) in pairs {
        if i == 0 || i > n || j == 0 || j > d {
            return Err(Error::Parse(format!(
                "edge ({i},{j}) out of range for ambient ({n},{d})"
            )));
        }
    }
    Ok(pairs.iter().map(|&(i, j)| (i - 1, j - 1)))
}

fn handle_to_dto(handle: &ObjectHandle) -> HandleDto {
    match handle {
        ObjectHandle::Fms(f) => HandleDto::Fms {
            n: f.n(),
            d: f.d(),
            cells: f.cells().to_vec(),
        },
        ObjectHandle::Tom(t) => {
            if t.is_generative() {
                HandleDto::Tom {
                    n: t.n(),
                    d: t.d(),
                    tree_types: Some(t.tree_types()),
                    types: None,
                }
            } else {
                HandleDto::Tom {
                    n: t.n(),
                    d: t.d(),
                    tree_types: None,
                    types: Some(t.types().into_iter().collect()),
                }
            }
        }
        ObjectHandle::Field(f) => HandleDto::MatchingField {
            n_prime: f.n_prime(),
            d: f.d(),
            pointed: f.is_pointed(),
            assignments: f
                .assignments()
                .map(|(sigma, m)| FieldAssignmentDto {
                    sigma: one_based_mask(sigma),
                    matching: m.edges().into_iter().map(|(i, j)| (i + 1, j + 1)).collect(),
                })
                .collect(),
        },
        ObjectHandle::Stack(s) => HandleDto::MatchingStack {
            n: s.n(),
            d: s.d(),
            assignments: s
                .assignments()
                .map(|((left, right), m)| StackAssignmentDto {
                    left: one_based_mask(left),
                    right: one_based_mask(right),
                    matching: m.edges().into_iter().map(|(i, j)| (i + 1, j + 1)).collect(),
                })
                .collect(),
        },
        ObjectHandle::Arrangement(a) => HandleDto::TopeArrangement {
            n: a.n(),
            d: a.d(),
            topes: a
                .iter()
                .map(|(v, tope)| TopeDto {
                    position: v.coords().to_vec(),
                    map: (0..a.n())
                        .map(|i| tope.row(i).trailing_zeros() as usize + 1)
                        .collect(),
                })
                .collect(),
        },
    }
}

fn handle_from_dto(dto: HandleDto) -> Result<ObjectHandle> {
    Ok(match dto {
        HandleDto::Fms { n, d, cells } => {
            ObjectHandle::Fms(FineMixedSubdivision::new(n, d, cells)?)
        }
        HandleDto::Tom {
            n,
            d,
            tree_types,
            types,
        } => match (tree_types, types) {
            (Some(trees), None) => ObjectHandle::Tom(GenericTom::from_tree_types(n, d, trees)?),
            (None, Some(types)) => {
                // The explicit form carries no storage flag; an extended
                // type set is recognizable by its dishonest members (the
                // empty graph at the very least).
                let extended = types.iter().any(|t| !crate::tom::is_honest(t));
                ObjectHandle::Tom(GenericTom::from_types(n, d, types, extended)?)
            }
            _ => {
                return Err(Error::Parse(
                    "a tom needs exactly one of tree_types or types".into(),
                ))
            }
        },
        HandleDto::MatchingField {
            n_prime,
            d,
            pointed,
            assignments,
        } => {
            let mut map = BTreeMap::new();
            for a in &assignments {
                let sigma = mask_from_one_based(&a.sigma, n_prime, "sigma")?;
                let graph = BiGraph::from_edges(n_prime, d, edges_zero_based(&a.matching, n_prime, d)?)?;
                if map.insert(sigma, graph).is_some() {
                    return Err(Error::Parse(format!(
                        "sigma {:?} assigned twice",
                        a.sigma
                    )));
                }
            }
            ObjectHandle::Field(MatchingField::new(n_prime, d, pointed, map)?)
        }
        HandleDto::MatchingStack { n, d, assignments } => {
            let ambient = n.max(1);
            let mut map = BTreeMap::new();
            for a in &assignments {
                let left = mask_from_one_based(&a.left, n, "I")?;
                let right = mask_from_one_based(&a.right, d, "J")?;
                let graph =
                    BiGraph::from_edges(ambient, d, edges_zero_based(&a.matching, ambient, d)?)?;
                if map.insert((left, right), graph).is_some() {
                    return Err(Error::Parse(format!(
                        "pair ({:?},{:?}) assigned twice",
                        a.left, a.right
                    )));
                }
            }
            ObjectHandle::Stack(MatchingStack::new(n, d, map)?)
        }
        HandleDto::TopeArrangement { n, d, topes } => {
            let mut entries = Vec::with_capacity(topes.len());
            for t in &topes {
                if t.map.len() != n {
                    return Err(Error::Parse(format!(
                        "tope map has {} entries for n = {n}",
                        t.map.len()
                    )));
                }
                let mut to = Vec::with_capacity(n);
                for &j in &t.map {
                    if j == 0 || j > d {
                        return Err(Error::Parse(format!(
                            "tope map value {j} out of range 1..={d}"
                        )));
                    }
                    to.push(j - 1);
                }
                entries.push((LatticePoint::new(t.position.clone()), BiGraph::from_map(d, &to)?));
            }
            ObjectHandle::Arrangement(TopeArrangement::new(n, d, entries)?)
        }
    })
}

pub fn handle_to_value(handle: &ObjectHandle) -> Value {
    serde_json::to_value(handle_to_dto(handle)).expect("object serialization cannot fail")
}

pub fn handle_from_value(value: Value) -> Result<ObjectHandle> {
    handle_from_dto(serde_json::from_value(value)?)
}

pub fn handle_to_string(handle: &ObjectHandle, pretty: bool) -> String {
    let dto = handle_to_dto(handle);
    if pretty {
        serde_json::to_string_pretty(&dto).expect("object serialization cannot fail")
    } else {
        serde_json::to_string(&dto).expect("object serialization cannot fail")
    }
}

pub fn handle_from_str(s: &str) -> Result<ObjectHandle> {
    handle_from_dto(serde_json::from_str(s)?)
}

pub fn covector_to_value(covector: &TreeLinkageCovector) -> Value {
    let dto = CovectorDto {
        kind: "tree_linkage_covector".into(),
        t: covector.t().coords().to_vec(),
        edges: covector
            .edges()
            .iter()
            .map(|e| EdgeDto {
                u: e.u + 1,
                v: e.v + 1,
                near_u: e.near_u + 1,
                near_v: e.near_v + 1,
            })
            .collect(),
        vertex_labels: covector
            .vertex_labels()
            .iter()
            .enumerate()
            .filter(|(_, labels)| !labels.is_empty())
            .map(|(j, labels)| {
                (
                    (j + 1).to_string(),
                    labels.iter().map(|&i| i + 1).collect(),
                )
            })
            .collect(),
        core_tope: covector.core_tope().clone(),
    };
    serde_json::to_value(dto).expect("covector serialization cannot fail")
}

pub fn covector_from_value(value: Value) -> Result<TreeLinkageCovector> {
    let dto: CovectorDto = serde_json::from_value(value)?;
    if dto.kind != "tree_linkage_covector" {
        return Err(Error::UnsupportedKind(dto.kind));
    }
    let (n, d) = (dto.core_tope.n(), dto.core_tope.d());
    let mut edges = Vec::with_capacity(dto.edges.len());
    for e in &dto.edges {
        for (x, len, what) in [
            (e.u, d, "edge endpoint"),
            (e.v, d, "edge endpoint"),
            (e.near_u, n, "near label"),
            (e.near_v, n, "near label"),
        ] {
            if x == 0 || x > len {
                return Err(Error::Parse(format!("{what} {x} out of range 1..={len}")));
            }
        }
        edges.push(CovectorEdge {
            u: e.u - 1,
            v: e.v - 1,
            near_u: e.near_u - 1,
            near_v: e.near_v - 1,
        });
    }
    let mut labels = vec![Vec::new(); d];
    for (key, values) in &dto.vertex_labels {
        let j: usize = key
            .parse()
            .map_err(|_| Error::Parse(format!("vertex label key {key:?} is not an index")))?;
        if j == 0 || j > d {
            return Err(Error::Parse(format!(
                "vertex label key {j} out of range 1..={d}"
            )));
        }
        for &i in values {
            if i == 0 || i > n {
                return Err(Error::Parse(format!(
                    "vertex label {i} out of range 1..={n}"
                )));
            }
        }
        labels[j - 1] = values.iter().map(|&i| i - 1).collect();
    }
    TreeLinkageCovector::from_parts(LatticePoint::new(dto.t), edges, labels, dto.core_tope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matchfield::tests::monotone_stack;

    fn handles() -> Vec<ObjectHandle> {
        let fms = crate::fms::tests::staircase_2_4();
        let tom = GenericTom::from_tree_types(2, 4, fms.cells().to_vec()).unwrap();
        let explicit =
            GenericTom::from_types(2, 4, tom.types().into_iter().collect(), false).unwrap();
        vec![
            ObjectHandle::Fms(fms),
            ObjectHandle::Tom(tom),
            ObjectHandle::Tom(explicit),
            ObjectHandle::Stack(monotone_stack(3, 2)),
            ObjectHandle::Field(monotone_stack(2, 3).complete().unwrap()),
            ObjectHandle::Arrangement(crate::topearr::tests::staircase_arrangement()),
        ]
    }

    #[test]
    fn every_kind_round_trips_through_json() {
        for handle in handles() {
            let compact = handle_to_string(&handle, false);
            let back = handle_from_str(&compact).unwrap();
            assert_eq!(back, handle, "{compact}");
            let pretty = handle_to_string(&handle, true);
            assert_eq!(handle_from_str(&pretty).unwrap(), handle);
        }
    }

    #[test]
    fn serialization_is_byte_stable() {
        for handle in handles() {
            let first = handle_to_string(&handle, false);
            let second = handle_to_string(&handle_from_str(&first).unwrap(), false);
            assert_eq!(first, second);
        }
    }

    #[test]
    fn the_wire_format_matches_the_documented_shape() {
        let fms = crate::fms::tests::staircase_2_4();
        let value = handle_to_value(&ObjectHandle::Fms(fms));
        assert_eq!(value["kind"], "fms");
        assert_eq!(value["n"], 2);
        assert_eq!(value["d"], 4);
        assert_eq!(value["cells"].as_array().unwrap().len(), 4);
        // Cells are stored sorted; the first one pairs left 1 with 4̄ only.
        assert_eq!(
            value["cells"][0]["edges"],
            serde_json::json!([[1, 4], [2, 1], [2, 2], [2, 3], [2, 4]])
        );
        let arr = crate::topearr::tests::staircase_arrangement();
        let value = handle_to_value(&ObjectHandle::Arrangement(arr));
        assert_eq!(value["kind"], "tope_arrangement");
        assert_eq!(value["topes"][0]["position"], serde_json::json!([2, 0, 0, 0]));
        assert_eq!(value["topes"][0]["map"], serde_json::json!([1, 1]));
    }

    #[test]
    fn tope_field_and_stack_indices_are_one_based() {
        let value = handle_to_value(&ObjectHandle::Stack(monotone_stack(2, 2)));
        let assignments = value["assignments"].as_array().unwrap();
        // The (∅,∅) pair leads with an empty matching.
        assert_eq!(assignments[0]["I"], serde_json::json!([]));
        assert_eq!(assignments[0]["matching"], serde_json::json!([]));
        let last = assignments.last().unwrap();
        assert_eq!(last["I"], serde_json::json!([1, 2]));
        assert_eq!(last["J"], serde_json::json!([1, 2]));
        assert_eq!(last["matching"], serde_json::json!([[1, 1], [2, 2]]));
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(handle_from_str("{\"kind\":\"simplex\"}").is_err());
        assert!(handle_from_str("not json").is_err());
        let both = r#"{"kind":"tom","n":1,"d":1,"tree_types":[],"types":[]}"#;
        assert!(handle_from_str(both).is_err());
        let zero_map = r#"{"kind":"tope_arrangement","n":1,"d":2,"topes":[
            {"position":[1,0],"map":[0]},{"position":[0,1],"map":[2]}]}"#;
        assert!(handle_from_str(zero_map).is_err());
        let dup = r#"{"kind":"matching_field","n_prime":2,"d":2,"pointed":false,
            "assignments":[{"sigma":[1,2],"matching":[[1,1],[2,2]]},
                           {"sigma":[1,2],"matching":[[1,2],[2,1]]}]}"#;
        assert!(handle_from_str(dup).is_err());
    }

    #[test]
    fn covectors_round_trip_and_expose_labels_one_based() {
        let fms = crate::fms::tests::staircase_2_4();
        let covector =
            crate::treelink::build_covector(&fms, &LatticePoint::new(vec![0, 0, 0, 0])).unwrap();
        let value = covector_to_value(&covector);
        assert_eq!(value["kind"], "tree_linkage_covector");
        assert_eq!(value["t"], serde_json::json!([0, 0, 0, 0]));
        assert_eq!(value["edges"][0]["u"], 1);
        assert_eq!(value["edges"][0]["near_u"], 1);
        assert_eq!(value["vertex_labels"]["1"], serde_json::json!([2]));
        let back = covector_from_value(value).unwrap();
        assert_eq!(back.edges(), covector.edges());
        assert_eq!(back.core_tope(), covector.core_tope());
        assert_eq!(back.vertex_labels(), covector.vertex_labels());
    }
}
