//! Table and report writers. Every file starts with the configuration hash
//! and seed that produced it: `#`-comment rows for CSV, top-level fields for JSON.

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Result};

/// What produced an output file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Self {
            config_hash: config_hash.into(),
            seed,
        }
    }

    /// `# config_hash=…` and `# seed=…` rows.
    pub fn write_header<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# config_hash={}", self.config_hash)?;
        writeln!(w, "# seed={}", self.seed)?;
        Ok(())
    }
}

/// A CSV table built row by row. Floats are written in shortest round-trip form.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) -> Result<()> {
        let row: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        if row.len() != self.columns.len() {
            return Err(invalid(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        if row.iter().any(|c| c.contains([',', '\n', '"'])) {
            return Err(invalid("CSV cells may not contain commas, quotes or newlines"));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write<W: Write>(&self, mut w: W, provenance: &Provenance) -> Result<()> {
        provenance.write_header(&mut w)?;
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_bytes(&self, provenance: &Provenance) -> Vec<u8> {
        let mut out = Vec::new();
        self.write(&mut out, provenance).expect("writing to memory");
        out
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config_hash: &'a str,
    seed: u64,
    report: &'a T,
}

/// Pretty JSON `{"config_hash", "seed", "report"}` with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut w: W, provenance: &Provenance, report: &T) -> Result<()> {
    let env = Envelope {
        config_hash: &provenance.config_hash,
        seed: provenance.seed,
        report,
    };
    serde_json::to_writer_pretty(&mut w, &env)?;
    writeln!(w)?;
    Ok(())
}

pub fn json_bytes<T: Serialize>(provenance: &Provenance, report: &T) -> Vec<u8> {
    let mut out = Vec::new();
    write_json(&mut out, provenance, report).expect("writing to memory");
    out
}
