use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// Formats a float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Output files held in memory until the run succeeds.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

#[derive(Debug, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

impl Outputs {
    pub fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header)?;
        for (i, row) in rows.iter().enumerate() {
            anyhow::ensure!(row.len() == header.len(), "{name}: row {i} has {} columns, header has {}", row.len(), header.len());
            w.write_record(row)?;
        }
        self.files.push((name.to_string(), w.into_inner()?));
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    /// Writes every file atomically under `dir` and returns the inventory.
    pub fn commit(self, dir: &Path) -> Result<Vec<FileRecord>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut records = Vec::new();
        for (name, bytes) in self.files {
            write_atomic(&dir.join(&name), &bytes)?;
            records.push(FileRecord { path: name, bytes: bytes.len(), sha256: hex(&Sha256::digest(&bytes)) });
        }
        Ok(records)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    tmp.as_mut_os_string().push(".tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [-0.5, 0.1, 1.0 / 3.0, 6.02214076e23, -1e-300] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(s.trim_start_matches('-').chars().filter(|c| c.is_ascii_digit()).count() - exponent_digits(&s), 17);
        }
    }

    fn exponent_digits(s: &str) -> usize {
        s.split('e').nth(1).unwrap().chars().filter(|c| c.is_ascii_digit()).count()
    }

    #[test]
    fn empty_series_is_header_only() {
        let mut out = Outputs::default();
        out.csv("x.csv", &["t", "value"], Vec::new()).unwrap();
        assert_eq!(out.files[0].1, b"t,value\n");
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut out = Outputs::default();
        assert!(out.csv("x.csv", &["t", "value"], vec![vec![num(1.0)]]).is_err());
    }
}
