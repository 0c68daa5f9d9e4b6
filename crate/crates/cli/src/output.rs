//! CSV and SVG files in the output directory.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use crate::svg::Plot;
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rows of one CSV file, starting with the schema comment line.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(subcommand: &str, columns: &[&str]) -> Self {
        Self { text: format!("# imb-lab v{VERSION} {subcommand}\n{}\n", columns.join(",")) }
    }

    pub fn comment(&mut self, line: &str) {
        self.text.push_str("# ");
        self.text.push_str(line);
        self.text.push('\n');
    }

    pub fn row(&mut self, cells: &[&dyn Display]) {
        let line: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }
}

pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn put(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        self.put(&format!("{stem}.csv"), &table.text)
    }

    /// Writes `stem.svg` next to the CSV with the data it was drawn from.
    pub fn plot(&mut self, stem: &str, twin: &Table, plot: &Plot, labels: (&str, &str, &str)) -> Result<(), CliError> {
        self.csv(stem, twin)?;
        self.put(&format!("{stem}.svg"), &plot.render(labels.0, labels.1, labels.2))
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
