//! Output files with a uniform provenance header: artifact version, config
//! hash, root seed, and the column schema. Data files carry no timestamps
//! so reruns are byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn data_file(
    dir: &Path,
    name: &str,
    prov: &Provenance,
    columns: &str,
) -> anyhow::Result<(BufWriter<File>, PathBuf)> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "# levelset v{VERSION}")?;
    writeln!(w, "# config_hash={}", prov.config_hash)?;
    writeln!(w, "# seed={}", prov.seed)?;
    writeln!(w, "# columns: {columns}")?;
    Ok((w, path))
}

/// Format a float so the value round-trips exactly and stays stable across
/// runs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn join_f64(vs: &[f64]) -> String {
    vs.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
}
