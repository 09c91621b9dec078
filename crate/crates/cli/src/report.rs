//! Versioned JSON run reports.

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA: &str = "stabradius.report/1";

/// Values in insertion order with the operation and tolerance that
/// produced each of them.
#[derive(Debug, Default)]
pub struct Report {
    results: Map<String, Value>,
    provenance: Map<String, Value>,
}

impl Report {
    pub fn put(&mut self, key: &str, value: Value, operation: &str, tolerance: Option<f64>) {
        self.results.insert(key.into(), value);
        self.provenance
            .insert(key.into(), json!({ "operation": operation, "tolerance": tolerance }));
    }

    /// Full report document. `inputs` is hashed into the digest and echoed.
    pub fn finish(self, command: &str, argv: &[String], inputs: &Value, wall_clock: f64) -> Value {
        let canonical = serde_json::to_vec(inputs).expect("inputs serialize");
        let digest = hex::encode(Sha256::digest(&canonical));
        json!({
            "schema": SCHEMA,
            "tool": { "name": "stabradius", "version": env!("CARGO_PKG_VERSION") },
            "command": { "name": command, "argv": argv },
            "inputs": inputs,
            "inputs_digest": format!("sha256:{digest}"),
            "results": Value::Object(self.results),
            "provenance": Value::Object(self.provenance),
            "wall_clock_seconds": wall_clock,
        })
    }
}
