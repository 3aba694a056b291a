//! Command reports: named results, check records, and the JSON emitter.
//!
//! A report collects what a command computed (results) and what it
//! verified (checks with residual, tolerance, and verdict). Failing checks
//! carry a hash of everything that went in: the argv echo, each input
//! file's raw bytes, and the seed. The same report renders as text for
//! stdout and as JSON for `--json`; given identical argv and seed the JSON
//! is byte-identical apart from the trailing timing field.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs_hash: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ResultItem {
    pub name: String,
    pub value: Value,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs_hash: String,
    pub results: Vec<ResultItem>,
    pub checks: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    // Keep timing last so byte comparisons can strip it cheaply.
    pub timing_ms: u64,
    #[serde(skip)]
    hash_state: u64,
}

impl Report {
    pub fn new(command: String) -> Self {
        let mut report = Self {
            command: String::new(),
            seed: None,
            inputs_hash: String::new(),
            results: Vec::new(),
            checks: Vec::new(),
            error: None,
            timing_ms: 0,
            hash_state: FNV_OFFSET,
        };
        report.absorb(command.as_bytes());
        report.command = command;
        report
    }

    /// Fold input bytes into the report's running FNV-1a hash.
    pub fn absorb(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.hash_state = (self.hash_state ^ u64::from(*b)).wrapping_mul(FNV_PRIME);
        }
        self.inputs_hash = format!("{:016x}", self.hash_state);
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.absorb(&seed.to_le_bytes());
    }

    pub fn result(&mut self, name: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("result values are plain data");
        self.results.push(ResultItem {
            name: name.to_owned(),
            value,
        });
    }

    /// Record a check; failing records carry the inputs hash.
    pub fn check(&mut self, name: &str, residual: f64, tolerance: f64) -> bool {
        let pass = residual <= tolerance;
        self.checks.push(CheckRecord {
            name: name.to_owned(),
            residual,
            tolerance,
            pass,
            inputs_hash: (!pass).then(|| self.inputs_hash.clone()),
        });
        pass
    }

    pub fn all_pass(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }

    pub fn set_error(&mut self, message: String) {
        self.error = Some(message);
    }

    pub fn set_timing_ms(&mut self, ms: u64) {
        self.timing_ms = ms;
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed: {seed}");
        }
        for item in &self.results {
            let _ = writeln!(out, "  {} = {}", item.name, display_value(&item.value));
        }
        for check in &self.checks {
            let verdict = if check.pass { "pass" } else { "FAIL" };
            let _ = writeln!(
                out,
                "  [{verdict}] {}  residual {:.3e}  tol {:.3e}",
                check.name, check.residual, check.tolerance
            );
        }
        if let Some(err) = &self.error {
            let _ = writeln!(out, "error: {err}");
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        let _ = writeln!(
            out,
            "checks: {passed} passed, {} failed",
            self.checks.len() - passed
        );
        let _ = writeln!(
            out,
            "status: {}",
            if self.all_pass() { "PASS" } else { "FAIL" }
        );
        let _ = writeln!(out, "time: {} ms", self.timing_ms);
        out
    }

    pub fn write_json(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, to_json_bytes(self))
    }
}

// Matrices are too bulky for the text rendering; show their shape.
fn display_value(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Object(map) => match (map.get("rows"), map.get("cols")) {
            (Some(r), Some(c)) => format!("{r}x{c} matrix"),
            _ => value.to_string(),
        },
        other => other.to_string(),
    }
}

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    // 17 significant digits: exact for every double.
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize with the 17-digit float formatter and a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value
        .serialize(&mut ser)
        .expect("reports and matrix files serialize infallibly");
    out.push(b'\n');
    out
}
