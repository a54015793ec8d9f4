//! Writes tables to an output directory or to stdout.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use emh_core::report::Table;

use crate::config::Format;

pub struct Output {
    dir: Option<PathBuf>,
    format: Format,
}

impl Output {
    pub fn new(dir: Option<PathBuf>, format: Format) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).with_context(|| format!("cannot create output directory {}", d.display()))?;
        }
        Ok(Self { dir, format })
    }

    fn render(&self, table: &Table) -> String {
        match self.format {
            Format::Csv => table.to_csv(),
            Format::Md => table.to_markdown(),
        }
    }

    /// Writes `table` as `<name>.<ext>` in the output directory, or prints it.
    pub fn table(&self, name: &str, table: &Table) -> Result<()> {
        let text = self.render(table);
        match &self.dir {
            Some(_) => self.file(&format!("{name}.{}", self.format.extension()), &text),
            None => {
                let mut out = std::io::stdout().lock();
                writeln!(out, "{text}").context("cannot write to stdout")
            }
        }
    }

    /// Writes raw text as `file_name` in the output directory, or prints it.
    pub fn file(&self, file_name: &str, text: &str) -> Result<()> {
        match &self.dir {
            Some(d) => {
                let path = d.join(file_name);
                fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes()).context("cannot write to stdout")
            }
        }
    }

    /// Writes `text` only when an output directory is set.
    pub fn artifact(&self, file_name: &str, text: &str) -> Result<()> {
        if self.dir.is_some() {
            self.file(file_name, text)?;
        }
        Ok(())
    }
}
