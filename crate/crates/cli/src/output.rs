//! Deterministic report writing: pretty JSON or CSV, to a file or stdout.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use ddl_core::Number;
use serde::Serialize;

pub struct Sink<'a> {
    path: Option<&'a Path>,
}

impl<'a> Sink<'a> {
    pub fn new(path: Option<&'a Path>) -> Self {
        Sink { path }
    }

    pub fn json<T: Serialize>(&self, value: &T) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.text(&text)
    }

    pub fn text(&self, text: &str) -> anyhow::Result<()> {
        match self.path {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()?;
                Ok(())
            }
        }
    }
}

/// Shortest round-trip decimal, `.` separator, no grouping.
pub fn float(x: f64) -> String {
    format!("{x}")
}

/// Exact values as `p/q` (or `p`), floats as [`float`].
pub fn number(n: &Number) -> String {
    match n {
        Number::Exact(q) => q.to_string(),
        Number::Float(x) => float(*x),
    }
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        let quoted: Vec<String> = cells
            .iter()
            .map(|c| {
                if c.contains([',', '"', '\n']) {
                    format!("\"{}\"", c.replace('"', "\"\""))
                } else {
                    c.clone()
                }
            })
            .collect();
        self.text += &quoted.join(",");
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}
