use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output directory plus the identity of the command writing into it.
pub struct Sink {
    dir: PathBuf,
    command: &'static str,
    config: Value,
}

impl Sink {
    pub fn new(dir: &Path, command: &'static str, config: &impl Serialize) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), command, config: serde_json::to_value(config)? })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn header_lines(&self) -> Vec<String> {
        vec![format!("kzsim {VERSION} {}", self.command), format!("config {}", self.config)]
    }

    /// CSV with `#` header lines, a column row, and `{:.16e}` floats.
    pub fn csv(&self, name: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<PathBuf> {
        let path = self.path(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        for line in self.header_lines() {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "{}", columns.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Pretty JSON record; `body` keys are merged after the version/config keys.
    pub fn json(&self, name: &str, body: Value) -> Result<PathBuf> {
        let mut record = json!({
            "kzsim_version": VERSION,
            "command": self.command,
            "config": self.config,
        });
        if let (Value::Object(rec), Value::Object(body)) = (&mut record, body) {
            rec.extend(body);
        }
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(&record)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn header_for_waveform(&self) -> Vec<String> {
        self.header_lines()
    }
}

pub enum Cell {
    F(f64),
    U(usize),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:.16e}"),
            Cell::U(v) => v.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v)
    }
}

#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($crate::output::Cell::from($v)),*] };
}
