//! CSV and manifest output.
//!
//! Files are rendered in memory, hashed like a git blob (`"blob {len}\0"`
//! prefix, SHA-256) and then written, so the manifest always describes the
//! exact bytes on disk.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::stats::CorrelationCurve;

/// `{stat}_{t}s_{fc}GHz.csv` with numbers in shortest form (`0`, `2`, `2.6`).
pub fn stat_file_name(stat: &str, t: f64, fc_ghz: f64) -> String {
    format!("{stat}_{t}s_{fc_ghz}GHz.csv")
}

pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Output directory plus the record of everything written into it.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        // fail early on read-only directories
        let probe = dir.join(".irs-gbsm-write-test");
        fs::write(&probe, b"")?;
        fs::remove_file(&probe)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<&OutputRecord> {
        if self.records.iter().any(|r| r.file == name) {
            return Err(Error::domain(format!("output {name} written twice")));
        }
        fs::write(self.dir.join(name), bytes)?;
        self.records.push(OutputRecord {
            file: name.to_owned(),
            bytes: bytes.len(),
            sha256: content_hash(bytes),
        });
        Ok(self.records.last().unwrap())
    }

    /// Renders a CSV through `body` and writes it.
    pub fn write_csv(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>,
    ) -> Result<&OutputRecord> {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            body(&mut w)?;
            w.flush()?;
        }
        self.write(name, &buf)
    }

    /// Writes `manifest.json` with the config echo and all output hashes.
    pub fn finish<C: Serialize>(mut self, subcommand: &str, config: &C) -> Result<Vec<OutputRecord>> {
        let manifest = Manifest {
            tool: "irs-gbsm",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            config,
            outputs: &self.records,
        };
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        fs::write(self.dir.join("manifest.json"), &text)?;
        self.records.push(OutputRecord {
            file: "manifest.json".into(),
            bytes: text.len(),
            sha256: content_hash(&text),
        });
        Ok(self.records)
    }
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    config: &'a C,
    outputs: &'a [OutputRecord],
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Long-format rows of correlation curves sharing one grid column name.
pub fn write_curves<W: std::io::Write>(w: &mut csv::Writer<W>, grid_name: &str, curves: &[&CorrelationCurve]) -> Result<()> {
    w.write_record([grid_name, "real", "imag", "magnitude", "kind", "trials", "variant", "t_s", "f_hz"])?;
    for c in curves {
        for (x, v) in c.grid.iter().zip(&c.values) {
            w.write_record([
                num(*x),
                num(v.re),
                num(v.im),
                num(v.norm()),
                c.kind.to_string(),
                c.trials.to_string(),
                c.variant.clone(),
                num(c.t),
                num(c.f),
            ])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::CurveKind;
    use num_complex::Complex64;

    #[test]
    fn names() {
        assert_eq!(stat_file_name("acf", 0.0, 62.0), "acf_0s_62GHz.csv");
        assert_eq!(stat_file_name("acf", 2.0, 2.6), "acf_2s_2.6GHz.csv");
        assert_eq!(stat_file_name("ccf", 0.5, 58.0), "ccf_0.5s_58GHz.csv");
    }

    #[test]
    fn git_blob_hash() {
        // `git hash-object --object-format=sha256` of an empty file
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }

    #[test]
    fn writes_and_records() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path()).unwrap();
        let c = CorrelationCurve {
            t: 0.0,
            f: 0.0,
            grid: vec![0.0, 0.1],
            values: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5)],
            kind: CurveKind::Sim,
            trials: 3,
            variant: "x".into(),
        };
        out.write_csv("a.csv", |w| write_curves(w, "lag_s", &[&c])).unwrap();
        assert!(out.write("a.csv", b"").is_err());
        let recs = out.finish("acf", &serde_json::json!({"seed": 1})).unwrap();
        assert_eq!(recs.len(), 2);
        let text = std::fs::read_to_string(tmp.path().join("a.csv")).unwrap();
        assert!(text.starts_with("lag_s,real,imag,magnitude,kind"));
        assert_eq!(content_hash(text.as_bytes()), recs[0].sha256);
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["config"]["seed"], 1);
        assert_eq!(m["outputs"][0]["file"], "a.csv");
    }
}
