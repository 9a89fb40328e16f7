//! Deterministic report emission: JSON with sorted keys and floats at 17
//! significant digits, complex numbers as [re, im], and CSV artifacts.

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::qdiff_ops::Coefficient;
use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};
use serde_json::Value;
use std::io::{self, Write};
use std::path::Path;

/// One verified identity: its residual against a threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    /// "below": pass when residual < tolerance; "above": negative control.
    pub mode: &'static str,
    pub passed: bool,
    /// The worst case, recorded for failing checks and kept otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl Check {
    pub fn below(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            residual,
            tolerance,
            mode: "below",
            passed: residual < tolerance,
            witness: None,
        }
    }

    pub fn above(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            residual,
            tolerance,
            mode: "above",
            passed: residual > tolerance,
            witness: None,
        }
    }

    /// Exact equality of two counts, residual |a - b|.
    pub fn equal(name: impl Into<String>, got: usize, want: usize) -> Self {
        let mut c = Check::below(name, got.abs_diff(want) as f64, 0.5);
        c.witness = Some(serde_json::json!({ "got": got, "expected": want }));
        c
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check::below(name, if ok { 0.0 } else { 1.0 }, 0.5)
    }

    pub fn with_witness<T: Serialize>(mut self, w: T) -> Self {
        self.witness = serde_json::to_value(w).ok();
        self
    }
}

/// Largest residual seen so far with the input that produced it.
#[derive(Debug, Clone, Default)]
pub struct Worst {
    pub residual: f64,
    pub witness: Option<Value>,
}

impl Worst {
    fn replaces(&self, r: f64) -> bool {
        !self.residual.is_nan() && (self.witness.is_none() || r.is_nan() || r > self.residual)
    }

    pub fn update<T: Serialize>(&mut self, r: f64, w: impl FnOnce() -> T) {
        if self.replaces(r) {
            self.residual = r;
            self.witness = serde_json::to_value(w()).ok();
        }
    }

    pub fn merge(&mut self, other: Worst) {
        if other.witness.is_some() && self.replaces(other.residual) {
            *self = other;
        }
    }

    pub fn below(self, name: impl Into<String>, tolerance: f64) -> Check {
        let mut c = Check::below(name, self.residual, tolerance);
        c.witness = self.witness;
        c
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub params: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    /// Seconds; null when timing is disabled.
    pub wall_time: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
    /// Computed quantities worth keeping, such as spectra.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl SuiteReport {
    pub fn new(suite: &str, params: Value) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            params,
            checks: Vec::new(),
            passed: true,
            wall_time: None,
            artifacts: Vec::new(),
            data: None,
        }
    }

    pub fn push(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Floats as {:.16e}; non-finite values as null.
struct Fixed17;

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            write!(w, "{v:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serialize through a sorted-key value tree with fixed float formatting.
pub fn to_json_string<T: Serialize>(v: &T) -> Result<String> {
    let tree = serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))?;
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, Fixed17);
    tree.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Io(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, to_json_string(v)?)?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Columns n, shift, kind, re, im; vectors joined with ';'.
pub fn write_coefficients_csv(path: &Path, rows: &[(Vec<usize>, Coefficient)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["n", "shift", "kind", "re", "im"]).map_err(csv_err)?;
    for (n, c) in rows {
        w.write_record([
            join(n),
            join(&c.shift),
            c.kind.label().to_string(),
            fmt_f64(c.value.re),
            fmt_f64(c.value.im),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct NepomechieRow {
    pub module: String,
    pub side: String,
    /// Cutoff the boundary scalar was solved for.
    pub solved: usize,
    pub p: usize,
    pub relation: f64,
    pub coupling: f64,
}

/// Columns module, side, solved_P, P, relation residual, max coupling entry.
pub fn write_nepomechie_csv(path: &Path, rows: &[NepomechieRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["module", "side", "solved_P", "P", "relation_residual", "max_coupling"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.module.clone(),
            r.side.clone(),
            r.solved.to_string(),
            r.p.to_string(),
            fmt_f64(r.relation),
            fmt_f64(r.coupling),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns row, col, row label, col label, re, im.
pub fn write_gram_csv(path: &Path, labels: &[String], g: &CMat) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["row", "col", "row_label", "col_label", "re", "im"]).map_err(csv_err)?;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            w.write_record([
                i.to_string(),
                j.to_string(),
                labels[i].clone(),
                labels[j].clone(),
                fmt_f64(g[(i, j)].re),
                fmt_f64(g[(i, j)].im),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A matrix as rows of [re, im] pairs.
pub fn matrix_value(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::C64;

    #[test]
    fn sorted_keys_and_fixed_digits() {
        let v = serde_json::json!({ "zeta": 1.0, "alpha": [0.1, 2], "mid": null });
        let s = to_json_string(&v).unwrap();
        assert_eq!(s, "{\"alpha\":[1.0000000000000001e-1,2],\"mid\":null,\"zeta\":1.0000000000000000e0}\n");
    }

    #[test]
    fn complex_as_pair() {
        let s = to_json_string(&C64::new(0.5, -2.0)).unwrap();
        assert_eq!(s, "[5.0000000000000000e-1,-2.0000000000000000e0]\n");
    }

    #[test]
    fn round_trip_is_exact() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-200, -7.25e300] {
            let back: f64 = fmt_f64(v).parse().unwrap();
            assert_eq!(back, v);
        }
    }

    #[test]
    fn non_finite_is_null() {
        let mut r = SuiteReport::new("x", Value::Null);
        r.push(Check::below("nan", f64::NAN, 1.0));
        assert!(!r.passed);
        assert!(to_json_string(&r).unwrap().contains("\"residual\":null"));
    }

    #[test]
    fn worst_keeps_witness() {
        let mut w = Worst::default();
        w.update(0.1, || 1);
        w.update(0.05, || 2);
        w.update(0.3, || 3);
        assert_eq!(w.residual, 0.3);
        assert_eq!(w.witness, Some(serde_json::json!(3)));
        let c = w.below("c", 0.2);
        assert!(!c.passed);
    }
}
