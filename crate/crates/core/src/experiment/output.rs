//! Small helpers for the tabular outputs of a run.

use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::market::io::fmt_f64;
use crate::{Error, Result};

pub fn f(x: f64) -> String {
    fmt_f64(x)
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let wrap = |e: csv::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `variable, N, min, max, mean, std` with the sample standard deviation.
pub fn summary_row(name: &str, values: &[f64]) -> Vec<String> {
    let n = values.len();
    if n == 0 {
        return vec![name.into(), "0".into(), String::new(), String::new(), String::new(), String::new()];
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    vec![name.into(), n.to_string(), f(min), f(max), f(mean), f(std)]
}

/// Equal-width bins over `[min, max]`; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return vec![(lo, hi, values.len())];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let a = lo + k as f64 * width;
            let b = if k + 1 == bins { hi } else { lo + (k + 1) as f64 * width };
            (a, b, c)
        })
        .collect()
}

pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// `file, bytes, sha256` for every file. Files in `volatile` (wall-clock
/// data) are listed without a checksum so the manifest itself stays
/// reproducible.
pub fn write_manifest(dir: &Path, files: &[PathBuf], volatile: &[PathBuf]) -> Result<PathBuf> {
    let mut rows = Vec::new();
    let mut all: Vec<(&PathBuf, bool)> = files.iter().map(|p| (p, false)).collect();
    all.extend(volatile.iter().map(|p| (p, true)));
    all.sort();
    all.dedup();
    for (path, is_volatile) in all {
        let name = path
            .strip_prefix(dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned();
        if is_volatile {
            rows.push(vec![name, String::new(), String::new()]);
        } else {
            let bytes = std::fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
            rows.push(vec![name, bytes.to_string(), sha256_hex(path)?]);
        }
    }
    let out = dir.join(MANIFEST_FILE);
    write_csv(&out, &["file", "bytes", "sha256"], rows)?;
    Ok(out)
}

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const LOCK_FILE: &str = ".lock";

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::InvalidInput(format!(
                "{} is locked by another run (remove {} if stale)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let r = summary_row("v", &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(r[..5], ["v", "4", "1", "4", "2.5"]);
        let std: f64 = r[5].parse().unwrap();
        assert!((std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn histogram_counts_everything() {
        let v = [0.0, 0.1, 0.5, 0.9, 1.0];
        let h = histogram(&v, 4);
        assert_eq!(h.len(), 4);
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), 5);
        assert_eq!(h[3].1, 1.0);
        assert_eq!(histogram(&[2.0, 2.0], 5), vec![(2.0, 2.0, 2)]);
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let a = OutputLock::acquire(dir.path()).unwrap();
        assert!(OutputLock::acquire(dir.path()).is_err());
        drop(a);
        assert!(OutputLock::acquire(dir.path()).is_ok());
    }

    #[test]
    fn sha256_of_known_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        std::fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_hex(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
