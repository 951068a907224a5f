//! Output plumbing: versioned CSV files, JSON manifests, and the guard
//! that refuses to overwrite existing results without --force.

use anyhow::{bail, Context, Result};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub struct OutputDir {
    dir: PathBuf,
    force: bool,
}

impl OutputDir {
    pub fn new(dir: PathBuf, force: bool) -> Result<Self> {
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self { dir, force })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn guard(&self, path: &Path) -> Result<()> {
        if path.exists() && !self.force {
            bail!(
                "{} already exists; pass --force to overwrite",
                path.display()
            );
        }
        Ok(())
    }

    /// CSV file with the schema comment line and a header row.
    pub fn csv(&self, name: &str, header: &str) -> Result<CsvWriter> {
        let path = self.path(name);
        self.guard(&path)?;
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "# schema=1")?;
        writeln!(w, "{header}")?;
        Ok(CsvWriter { w })
    }

    /// Pretty-printed JSON value.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        self.guard(&path)?;
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        Ok(())
    }

    pub fn text(&self, name: &str, content: &str) -> Result<()> {
        let path = self.path(name);
        self.guard(&path)?;
        std::fs::write(&path, content)?;
        Ok(())
    }
}

pub struct CsvWriter {
    w: BufWriter<File>,
}

impl CsvWriter {
    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.w, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Run manifest: full parameters and seed, for bit-exact replay.
#[derive(Serialize)]
pub struct Manifest<'a, P: Serialize> {
    pub command: &'a str,
    pub artifact_version: &'a str,
    pub seed: u64,
    pub parameters: P,
}

pub fn write_manifest<P: Serialize>(
    out: &OutputDir,
    command: &str,
    seed: u64,
    parameters: P,
) -> Result<()> {
    out.json(
        &format!("{command}_manifest.json"),
        &Manifest {
            command,
            artifact_version: env!("CARGO_PKG_VERSION"),
            seed,
            parameters,
        },
    )
}
