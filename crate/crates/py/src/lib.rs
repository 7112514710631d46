//! Python bindings over the JSON interchange surface: validate, convert,
//! enumerate, take minors, audit round trips, and build tree-linkage
//! covectors. Objects cross the boundary as canonical JSON strings (1-based
//! indices), reports and covectors as plain dicts.
//!
//! Error mapping: syntactically bad documents (malformed JSON, unknown kind,
//! out-of-range wire indices) raise `ValueError`; documents whose constructor
//! refuses the described object come back from `validate` as a failing
//! report, mirroring the CLI's exit-code split.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;

use tropom::cryptomorphism::handle_to_fms;
use tropom::json::{handle_from_str, handle_to_string};
use tropom::lattice::LatticePoint;
use tropom::{
    extraction, roundtrip_audit, EnumerationKind, EnumerationTask, Error, GenericTom,
    ObjectHandle, TopeArrangement, ValidationReport,
};

fn value_to_py(py: Python<'_>, value: &Value) -> PyResult<Py<PyAny>> {
    Ok(match value {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py_any(py)?,
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)?
            } else if let Some(u) = n.as_u64() {
                u.into_py_any(py)?
            } else {
                n.as_f64()
                    .expect("serde_json numbers are i64, u64, or f64")
                    .into_py_any(py)?
            }
        }
        Value::String(s) => s.into_py_any(py)?,
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(value_to_py(py, item)?)?;
            }
            list.into_py_any(py)?
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, value_to_py(py, item)?)?;
            }
            dict.into_py_any(py)?
        }
    })
}

fn report_to_py(py: Python<'_>, report: &ValidationReport) -> PyResult<Py<PyAny>> {
    value_to_py(py, &report.to_json())
}

fn bad_input<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// `Ok(Ok)` = object; `Ok(Err)` = constructor refusal; `Err` = bad document.
fn parse_object(doc: &str) -> PyResult<Result<ObjectHandle, Error>> {
    match handle_from_str(doc) {
        Ok(handle) => Ok(Ok(handle)),
        Err(Error::Parse(message)) => Err(PyValueError::new_err(message)),
        Err(other) => Ok(Err(other)),
    }
}

/// Validate a JSON document at its kind's strongest level and return the
/// report as a dict with `verdict`, `checked`, and `violations`.
#[pyfunction]
fn validate(py: Python<'_>, doc: &str) -> PyResult<Py<PyAny>> {
    let report = match parse_object(doc)? {
        Ok(handle) => handle.validate().map_err(bad_input)?,
        Err(refusal) => {
            let mut report = ValidationReport::new();
            report.fail("input.construct", refusal.to_string(), Value::Null);
            report
        }
    };
    report_to_py(py, &report)
}

/// Convert a JSON document to another kind (`fms`, `tom`, `matching_stack`,
/// `matching_field`, `tope_arrangement`) and return the canonical JSON.
#[pyfunction]
#[pyo3(signature = (doc, to, pretty = false))]
fn convert(doc: &str, to: &str, pretty: bool) -> PyResult<String> {
    let target = match to.trim().to_ascii_lowercase().replace('-', "_").as_str() {
        "fms" | "subdivision" | "fine_mixed_subdivision" => "fms",
        "tom" | "matroid" => "tom",
        "stack" | "matching_stack" | "ensemble" => "matching_stack",
        "field" | "matching_field" => "matching_field",
        "arrangement" | "tope_arrangement" => "tope_arrangement",
        other => return Err(PyValueError::new_err(format!("unknown object kind `{other}`"))),
    };
    let handle = parse_object(doc)?.map_err(bad_input)?;
    let converted = if target == handle.kind() {
        handle
    } else {
        let fms = handle_to_fms(&handle).map_err(bad_input)?;
        match target {
            "fms" => ObjectHandle::Fms(fms),
            "tom" => ObjectHandle::Tom(
                GenericTom::from_tree_types(fms.n(), fms.d(), fms.cells().to_vec())
                    .map_err(bad_input)?,
            ),
            "matching_stack" | "matching_field" => {
                let tom = GenericTom::from_tree_types(fms.n(), fms.d(), fms.cells().to_vec())
                    .map_err(bad_input)?;
                let stack = extraction(&tom).map_err(bad_input)?;
                if target == "matching_stack" {
                    ObjectHandle::Stack(stack)
                } else {
                    ObjectHandle::Field(stack.complete().map_err(bad_input)?)
                }
            }
            "tope_arrangement" => {
                ObjectHandle::Arrangement(TopeArrangement::from_fms(&fms).map_err(bad_input)?)
            }
            _ => unreachable!("target is canonical"),
        }
    };
    Ok(handle_to_string(&converted, pretty))
}

/// Enumerate every object of a kind at size (n, d). Returns a dict with
/// `objects` (canonical JSON strings), `count`, `complete`, and `nodes`.
#[pyfunction]
#[pyo3(signature = (kind, n, d, up_to_symmetry = false, budget = None))]
fn enumerate(
    py: Python<'_>,
    kind: &str,
    n: usize,
    d: usize,
    up_to_symmetry: bool,
    budget: Option<u64>,
) -> PyResult<Py<PyAny>> {
    let kind: EnumerationKind = kind
        .trim()
        .to_ascii_lowercase()
        .parse()
        .map_err(bad_input)?;
    let mut task = EnumerationTask::new(kind, n, d);
    if up_to_symmetry {
        task = task.quotient_by_symmetry();
    }
    if let Some(budget) = budget {
        task = task.with_budget(budget);
    }
    let outcome = tropom::enumerate::enumerate(&task).map_err(bad_input)?;
    let objects = PyList::empty(py);
    for object in &outcome.objects {
        objects.append(handle_to_string(object, false))?;
    }
    let result = PyDict::new(py);
    result.set_item("objects", objects)?;
    result.set_item("count", outcome.objects.len())?;
    result.set_item("complete", outcome.complete)?;
    result.set_item("nodes", outcome.nodes)?;
    result.into_py_any(py)
}

/// Count the objects of a kind at size (n, d).
#[pyfunction]
#[pyo3(signature = (kind, n, d, up_to_symmetry = false))]
fn count(kind: &str, n: usize, d: usize, up_to_symmetry: bool) -> PyResult<usize> {
    let kind: EnumerationKind = kind
        .trim()
        .to_ascii_lowercase()
        .parse()
        .map_err(bad_input)?;
    let mut task = EnumerationTask::new(kind, n, d);
    if up_to_symmetry {
        task = task.quotient_by_symmetry();
    }
    let outcome = tropom::enumerate::enumerate(&task).map_err(bad_input)?;
    if !outcome.complete {
        return Err(PyValueError::new_err("enumeration truncated by budget"));
    }
    Ok(outcome.objects.len())
}

/// Delete left vertices and/or contract right vertices (1-based) and return
/// the minor as canonical JSON.
#[pyfunction]
#[pyo3(signature = (doc, delete_left, contract_right, pretty = false))]
fn minor(
    doc: &str,
    delete_left: Vec<usize>,
    contract_right: Vec<usize>,
    pretty: bool,
) -> PyResult<String> {
    let rebase = |indices: Vec<usize>| -> PyResult<Vec<usize>> {
        indices
            .into_iter()
            .map(|x| {
                x.checked_sub(1)
                    .ok_or_else(|| PyValueError::new_err("vertex indices are 1-based; got 0"))
            })
            .collect()
    };
    let handle = parse_object(doc)?.map_err(bad_input)?;
    let minored = handle
        .minor(&rebase(delete_left)?, &rebase(contract_right)?)
        .map_err(bad_input)?;
    Ok(handle_to_string(&minored, pretty))
}

/// Audit the full conversion cycle starting from the document's object and
/// return the report as a dict.
#[pyfunction]
fn roundtrip(py: Python<'_>, doc: &str) -> PyResult<Py<PyAny>> {
    let handle = parse_object(doc)?.map_err(bad_input)?;
    report_to_py(py, &roundtrip_audit(&handle))
}

/// Build the tree-linkage covector of a subdivision document at anchor `t`
/// (degree coordinates, level n−2) and return it as a dict.
#[pyfunction]
fn tree_linkage_covector(py: Python<'_>, doc: &str, t: Vec<usize>) -> PyResult<Py<PyAny>> {
    let handle = parse_object(doc)?.map_err(bad_input)?;
    let ObjectHandle::Fms(fms) = handle else {
        return Err(PyValueError::new_err(format!(
            "tree-linkage covectors are built from an fms, got a {}",
            handle.kind()
        )));
    };
    let covector =
        tropom::build_covector(&fms, &LatticePoint::new(t)).map_err(bad_input)?;
    value_to_py(py, &tropom::json::covector_to_value(&covector))
}

#[pymodule]
fn tropom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(convert, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(count, m)?)?;
    m.add_function(wrap_pyfunction!(minor, m)?)?;
    m.add_function(wrap_pyfunction!(roundtrip, m)?)?;
    m.add_function(wrap_pyfunction!(tree_linkage_covector, m)?)?;
    Ok(())
}
