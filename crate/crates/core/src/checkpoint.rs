//! Binary checkpoints.
//!
//! Layout (all little-endian): magic `SQGC`, version `u32`, `n` `u32`,
//! `kappa` `f64`, `t` `f64`, `step` `u64`, then `n·n` coefficients as
//! `(re, im)` `f64` pairs in row-major lattice order (row = `k₁` FFT index,
//! column = `k₂` FFT index).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::dynamics::SolverState;
use crate::error::{Result, SqgError};
use crate::field::SpectralField;
use crate::grid::TorusGrid;

pub const MAGIC: &[u8; 4] = b"SQGC";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kappa: f64,
    pub state: SolverState,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let field = &self.state.theta;
        let n = field.grid().n();
        let mut out = Vec::with_capacity(HEADER_LEN + n * n * 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&self.kappa.to_le_bytes());
        out.extend_from_slice(&self.state.t.to_le_bytes());
        out.extend_from_slice(&self.state.step.to_le_bytes());
        for c in field.coeffs() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| SqgError::Checkpoint(m);
        if bytes.len() < HEADER_LEN {
            return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[0..4] != MAGIC {
            return Err(bad("bad magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let n = u32_at(8) as usize;
        let grid = TorusGrid::new(n)?;
        let kappa = f64_at(12);
        let t = f64_at(20);
        let step = u64::from_le_bytes(bytes[28..36].try_into().unwrap());
        let expected = HEADER_LEN + n * n * 16;
        if bytes.len() != expected {
            return Err(bad(format!("expected {expected} bytes for n={n}, found {}", bytes.len())));
        }
        let coeffs: Vec<Complex64> = (0..n * n)
            .map(|i| {
                let o = HEADER_LEN + 16 * i;
                Complex64::new(f64_at(o), f64_at(o + 8))
            })
            .collect();
        let theta = SpectralField::from_coefficients(grid, coeffs)?;
        Ok(Self {
            kappa,
            state: SolverState { theta, t, step },
        })
    }

    /// Writes to a temporary sibling and renames into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("ckpt.tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
