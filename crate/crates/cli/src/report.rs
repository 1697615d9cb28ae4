// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

use std::io::Write;

use serde_json::{Map, Value};

/// Ordered key/value summary printed as `key = value` lines or one JSON object.
#[derive(Debug, Default)]
pub struct Report {
    fields: Map<String, Value>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fields.insert(key.to_owned(), value.into());
        self
    }

    /// Infidelity raw and as a multiple of γ/E.
    pub fn infidelity(&mut self, key: &str, value: f64, gamma: f64, energy: f64) -> &mut Self {
        self.put(key, value);
        if gamma > 0.0 {
            self.put(&format!("{key}_coefficient"), value * energy / gamma);
        }
        self
    }

    pub fn write(&self, mut out: impl Write, json: bool) -> std::io::Result<()> {
        if json {
            serde_json::to_writer_pretty(&mut out, &self.fields)?;
            writeln!(out)
        } else {
            let width = self.fields.keys().map(String::len).max().unwrap_or(0);
            for (k, v) in &self.fields {
                match v {
                    Value::String(s) => writeln!(out, "{k:<width$} = {s}")?,
                    other => writeln!(out, "{k:<width$} = {other}")?,
                }
            }
            Ok(())
        }
    }
}
