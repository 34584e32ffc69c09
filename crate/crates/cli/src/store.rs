//! On-disk layout of a run directory.
//!
//! ```text
//! spec.toml             scenario text, byte-for-byte
//! samples.csv           t,step per sample
//! series/<q>.csv        t,<q> per sample for every recorded quantity
//! snapshots.bin         concatenated checkpoint records
//! checkpoints/*.ckpt    initial and final (or abort) states
//! report.txt            one line per check
//! manifest.json
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use sqg_core::checkpoint::Checkpoint;
use sqg_core::diagnostics::{read_series_csv, write_series_csv};
use sqg_core::dynamics::{Quantity, Sample, SolverState, TrajectoryRecord};

use crate::error::HarnessError;
use crate::scenario::{parse_scenario, ScenarioSpec};

pub const SPEC_FILE: &str = "spec.toml";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const SNAPSHOTS_FILE: &str = "snapshots.bin";
pub const REPORT_FILE: &str = "report.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

const CHECKPOINT_HEADER: usize = 36;

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| HarnessError::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}

pub fn series_path(dir: &Path, q: Quantity) -> PathBuf {
    dir.join("series").join(format!("{}.csv", q.name()))
}

/// Writes the scenario text, per-quantity CSVs, sample index and snapshots. Returns
/// the artifact paths relative to `dir`.
pub fn write_trajectory(dir: &Path, spec_text: &str, traj: &TrajectoryRecord) -> Result<Vec<String>, HarnessError> {
    create_dir(&dir.join("series"))?;
    let mut artifacts = Vec::new();
    write_atomic(&dir.join(SPEC_FILE), spec_text.as_bytes())?;
    artifacts.push(SPEC_FILE.to_string());

    let mut index = String::from("t,step\n");
    for s in &traj.samples {
        index.push_str(&format!("{:.16e},{}\n", s.t, s.step));
    }
    write_atomic(&dir.join(SAMPLES_FILE), index.as_bytes())?;
    artifacts.push(SAMPLES_FILE.to_string());

    for q in Quantity::ALL {
        let mut buf = Vec::new();
        write_series_csv(&mut buf, q.name(), &traj.series(q))?;
        let path = series_path(dir, q);
        write_atomic(&path, &buf)?;
        artifacts.push(format!("series/{}.csv", q.name()));
    }

    let mut snaps = Vec::new();
    for s in &traj.samples {
        if let Some(theta) = &s.snapshot {
            let ckpt = Checkpoint {
                kappa: traj.kappa,
                state: SolverState {
                    theta: theta.clone(),
                    t: s.t,
                    step: s.step,
                },
            };
            snaps.extend_from_slice(&ckpt.to_bytes());
        }
    }
    write_atomic(&dir.join(SNAPSHOTS_FILE), &snaps)?;
    artifacts.push(SNAPSHOTS_FILE.to_string());
    Ok(artifacts)
}

pub fn write_checkpoint(dir: &Path, name: &str, kappa: f64, state: &SolverState) -> Result<String, HarnessError> {
    create_dir(&dir.join("checkpoints"))?;
    let rel = format!("checkpoints/{name}.ckpt");
    let ckpt = Checkpoint {
        kappa,
        state: state.clone(),
    };
    write_atomic(&dir.join(&rel), &ckpt.to_bytes())?;
    Ok(rel)
}

fn read_snapshots(path: &Path) -> Result<Vec<Checkpoint>, HarnessError> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = Vec::new();
    let mut offset = 0;
    while offset < bytes.len() {
        if bytes.len() - offset < CHECKPOINT_HEADER {
            return Err(HarnessError::Config(format!("{}: truncated snapshot record", path.display())));
        }
        let n = u32::from_le_bytes(bytes[offset + 8..offset + 12].try_into().unwrap()) as usize;
        let end = offset + CHECKPOINT_HEADER + 16 * n * n;
        if end > bytes.len() {
            return Err(HarnessError::Config(format!("{}: truncated snapshot record", path.display())));
        }
        out.push(Checkpoint::from_bytes(&bytes[offset..end])?);
        offset = end;
    }
    Ok(out)
}

/// A run directory read back from disk.
#[derive(Debug, Clone)]
pub struct StoredRun {
    pub dir: PathBuf,
    pub spec: ScenarioSpec,
    pub spec_text: String,
    pub trajectory: TrajectoryRecord,
}

pub fn load_run(dir: &Path) -> Result<StoredRun, HarnessError> {
    let spec_path = dir.join(SPEC_FILE);
    let spec_text = fs::read_to_string(&spec_path).map_err(|e| HarnessError::io(&spec_path, e))?;
    // checkpoint-initialized specs resolve their paths against the original
    // location, which may be gone; the stored trajectory is self-contained
    let spec = match parse_scenario(&spec_text, Some(dir)) {
        Ok(spec) => spec,
        Err(HarnessError::Config(msg)) if msg.contains("initial.path") => {
            toml::from_str(&spec_text).map_err(|e| HarnessError::Config(e.message().to_string()))?
        }
        Err(e) => return Err(e),
    };

    let index_path = dir.join(SAMPLES_FILE);
    let index = fs::File::open(&index_path).map_err(|e| HarnessError::io(&index_path, e))?;
    let mut stamps = Vec::new();
    for (lineno, line) in BufReader::new(index).lines().enumerate().skip(1) {
        let line = line.map_err(|e| HarnessError::io(&index_path, e))?;
        let parsed = line
            .split_once(',')
            .and_then(|(t, s)| Some((t.parse::<f64>().ok()?, s.trim().parse::<u64>().ok()?)));
        match parsed {
            Some(p) => stamps.push(p),
            None => {
                return Err(HarnessError::Config(format!(
                    "{}: malformed line {}",
                    index_path.display(),
                    lineno + 1
                )))
            }
        }
    }

    let mut columns = Vec::new();
    for q in Quantity::ALL {
        let path = series_path(dir, q);
        let file = fs::File::open(&path).map_err(|e| HarnessError::io(&path, e))?;
        let series = read_series_csv(BufReader::new(file))?;
        if series.len() != stamps.len() {
            return Err(HarnessError::Config(format!(
                "{}: {} rows, expected {}",
                path.display(),
                series.len(),
                stamps.len()
            )));
        }
        columns.push(series);
    }
    let col = |q: Quantity, i: usize| columns[Quantity::ALL.iter().position(|&x| x == q).unwrap()][i].1;

    let mut snapshots = read_snapshots(&dir.join(SNAPSHOTS_FILE))?.into_iter().peekable();
    let mut samples = Vec::with_capacity(stamps.len());
    for (i, &(t, step)) in stamps.iter().enumerate() {
        let snapshot = match snapshots.peek() {
            Some(c) if c.state.step == step => snapshots.next().map(|c| c.state.theta),
            _ => None,
        };
        samples.push(Sample {
            t,
            step,
            l2: col(Quantity::L2, i),
            linf: col(Quantity::Linf, i),
            h_half: col(Quantity::HHalf, i),
            h1: col(Quantity::H1, i),
            h32: col(Quantity::H32, i),
            int_half: col(Quantity::IntHalf, i),
            int_h32: col(Quantity::IntH32, i),
            snapshot,
        });
    }
    if snapshots.next().is_some() {
        return Err(HarnessError::Config(format!(
            "{}: snapshot steps do not match the sample index",
            dir.display()
        )));
    }
    Ok(StoredRun {
        dir: dir.to_path_buf(),
        trajectory: TrajectoryRecord {
            kappa: spec.kappa,
            n: spec.n,
            samples,
            observer_errors: Vec::new(),
        },
        spec,
        spec_text,
    })
}
