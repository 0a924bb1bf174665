use kgfusion::constructions::DerivedBounds;
use kgfusion::linalg::{Operator, Vector};
use kgfusion::{BoundsCertificate, ErrorClass, Tolerances, TransformedFamily, RNG_VERSION};
use serde_json::{json, Map, Value};

use crate::scenario::{Entry, FamilySpec, Matrix};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FALSE: u8 = 2;
pub const EXIT_PRECONDITION: u8 = 3;
pub const EXIT_INPUT: u8 = 4;
pub const EXIT_INTERNAL: u8 = 5;

/// Result of a command: a verdict, summary lines for humans and the
/// structured payload.
pub struct Outcome {
    pub holds: bool,
    pub summary: Vec<String>,
    pub result: Value,
}

impl Outcome {
    pub fn new(holds: bool, result: Value) -> Self {
        Outcome { holds, summary: Vec::new(), result }
    }

    pub fn line(mut self, s: impl Into<String>) -> Self {
        self.summary.push(s.into());
        self
    }
}

pub fn matrix(m: &Operator) -> Value {
    serde_json::to_value(Matrix::from_operator(m)).expect("matrices serialize")
}

pub fn vector(v: &Vector) -> Value {
    let entries: Vec<Entry> =
        v.iter().map(|z| if z.im == 0.0 { Entry::Real(z.re) } else { Entry::Complex([z.re, z.im]) }).collect();
    serde_json::to_value(entries).expect("vectors serialize")
}

pub fn certificate(c: &BoundsCertificate) -> Value {
    let (a, b) = c.frame_bounds();
    json!({
        "lower": c.lower,
        "upper": c.upper,
        "is_frame": c.is_frame,
        "frame_bounds": [a, b],
        "lower_margin": c.lower_margin,
        "upper_margin": c.upper_margin,
        "lower_witness": vector(&c.lower_witness),
        "upper_witness": vector(&c.upper_witness),
    })
}

pub fn derived(d: &DerivedBounds) -> Value {
    json!({ "lower": d.lower, "upper": d.upper, "lower_margin": d.lower_margin })
}

pub fn transformed(t: &TransformedFamily) -> Value {
    json!({
        "construction": format!("{:?}", t.construction),
        "envelope": [t.envelope.0, t.envelope.1],
        "envelope_holds": t.envelope_holds(),
        "source_bounds": certificate(&t.source_bounds),
        "bounds": certificate(&t.bounds),
        "frame_operator": matrix(t.frame_operator.operator()),
        "family": serde_json::to_value(FamilySpec::from_family(&t.family)).expect("families serialize"),
        "target": matrix(t.context.k()),
    })
}

pub fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Input => EXIT_INPUT,
        ErrorClass::Precondition => EXIT_PRECONDITION,
        ErrorClass::Internal => EXIT_INTERNAL,
    }
}

/// The full structured report written for every run, including failures.
pub fn envelope(command: &str, tol: Option<&Tolerances>, status: &str, exit: u8, body: Value) -> Value {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("status".into(), json!(status));
    m.insert("exit_code".into(), json!(exit));
    m.insert("tolerances".into(), tol.map_or(Value::Null, |t| serde_json::to_value(t).expect("tolerances serialize")));
    m.insert("rng_version".into(), json!(RNG_VERSION));
    m.insert("result".into(), body);
    Value::Object(m)
}
