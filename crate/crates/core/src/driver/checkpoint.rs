//! Binary checkpoint of a driver state.
//!
//! All fields little-endian:
//!
//! ```text
//! magic     8 bytes   "MCALCKP1"
//! version   u32       2
//! flags     u32       bit 0: converged
//! L         f64
//! D         u64
//! M         u64
//! n         u64       iteration counter
//! K         u64       support size
//! R         u64       reserve size
//! n2        u64       pair-space dimension
//! weights   K × f64
//! states    K × n2 × f64   (state-major)
//! reserve   R × n2 × f64
//! potential M × f64
//! rows      u64
//! history   rows × { n u64, F f64, Ftilde f64, E f64, K u64, gap f64, lower f64,
//!                    residual f64, compression f64 }
//! ```

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;

use super::{HistoryRow, McalState};
use crate::error::{Error, Result};
use crate::pair_space::PairWavefunction;
use crate::sparsify::SparseState;

pub const MAGIC: &[u8; 8] = b"MCALCKP1";
pub const VERSION: u32 = 2;

/// Discretization recorded alongside a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointHeader {
    pub half_width: f64,
    pub intervals: usize,
    pub moments: usize,
}

pub fn write_checkpoint<W: Write>(out: &mut W, header: &CheckpointHeader, state: &McalState) -> Result<()> {
    let n2 = state.pool.states.first().map_or(0, |s| s.len());
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(state.converged as u32).to_le_bytes());
    buf.extend_from_slice(&header.half_width.to_le_bytes());
    for v in [
        header.intervals,
        header.moments,
        state.iteration,
        state.pool.len(),
        state.reserve.len(),
        n2,
    ] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for w in &state.pool.weights {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    for s in state.pool.states.iter().chain(&state.reserve) {
        for c in &s.coeffs {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    for y in state.potential.iter() {
        buf.extend_from_slice(&y.to_le_bytes());
    }
    buf.extend_from_slice(&(state.history.len() as u64).to_le_bytes());
    for r in &state.history {
        buf.extend_from_slice(&(r.n as u64).to_le_bytes());
        buf.extend_from_slice(&r.dual_value.to_le_bytes());
        buf.extend_from_slice(&r.primal_value.to_le_bytes());
        buf.extend_from_slice(&r.defect.to_le_bytes());
        buf.extend_from_slice(&(r.pool_size as u64).to_le_bytes());
        buf.extend_from_slice(&r.sdp_gap.to_le_bytes());
        buf.extend_from_slice(&r.lower_bound.to_le_bytes());
        buf.extend_from_slice(&r.moment_residual.to_le_bytes());
        buf.extend_from_slice(&r.compression_change.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn save_checkpoint(path: &Path, header: &CheckpointHeader, state: &McalState) -> Result<()> {
    // write then rename so a crash never leaves a truncated file behind
    let tmp = path.with_extension("bin.tmp");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        write_checkpoint(&mut f, header, state)?;
        f.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Checkpoint(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::Checkpoint(format!("count {v} too large")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        if n.saturating_mul(8) > self.data.len() - self.pos {
            return Err(Error::Checkpoint(format!("truncated at byte {}", self.pos)));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn read_checkpoint<R: Read>(input: &mut R) -> Result<(CheckpointHeader, McalState)> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let mut c = Cursor { data: &data, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let flags = c.u32()?;
    let half_width = c.f64()?;
    let intervals = c.u64()?;
    let moments = c.u64()?;
    let iteration = c.u64()?;
    let k = c.u64()?;
    let r = c.u64()?;
    let n2 = c.u64()?;
    let weights = c.f64s(k)?;
    let states = (0..k)
        .map(|_| c.f64s(n2).map(PairWavefunction::normalized))
        .collect::<Result<Vec<_>>>()?;
    let reserve = (0..r)
        .map(|_| c.f64s(n2).map(PairWavefunction::normalized))
        .collect::<Result<Vec<_>>>()?;
    let potential = DVector::from_vec(c.f64s(moments)?);
    let rows = c.u64()?;
    let mut history = Vec::with_capacity(rows.min(1 << 16));
    for _ in 0..rows {
        history.push(HistoryRow {
            n: c.u64()?,
            dual_value: c.f64()?,
            primal_value: c.f64()?,
            defect: c.f64()?,
            pool_size: c.u64()?,
            sdp_gap: c.f64()?,
            lower_bound: c.f64()?,
            moment_residual: c.f64()?,
            compression_change: c.f64()?,
        });
    }
    if c.pos != data.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", data.len() - c.pos)));
    }
    let header = CheckpointHeader {
        half_width,
        intervals,
        moments,
    };
    let state = McalState {
        iteration,
        pool: SparseState { weights, states },
        reserve,
        potential,
        history,
        converged: flags & 1 == 1,
        warm: Vec::new(),
    };
    Ok((header, state))
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointHeader, McalState)> {
    let mut f = std::fs::File::open(path)?;
    read_checkpoint(&mut f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> McalState {
        McalState {
            iteration: 3,
            pool: SparseState {
                weights: vec![0.75, 0.25],
                states: vec![
                    PairWavefunction::normalized(vec![1.0, 2.0, 3.0]),
                    PairWavefunction::normalized(vec![-1.0, 0.5, 0.0]),
                ],
            },
            reserve: vec![PairWavefunction::normalized(vec![0.0, 0.0, 1.0])],
            potential: DVector::from_vec(vec![0.1, -0.2, 0.3, 0.4]),
            history: vec![
                HistoryRow::initial(1.25, 1e-15),
                HistoryRow {
                    n: 1,
                    dual_value: 1.25,
                    primal_value: 1.2,
                    defect: -0.01,
                    pool_size: 2,
                    sdp_gap: 1e-12,
                    lower_bound: 1.24,
                    moment_residual: 2e-12,
                    compression_change: 1e-14,
                },
            ],
            converged: false,
            warm: Vec::new(),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let header = CheckpointHeader {
            half_width: 10.0,
            intervals: 4,
            moments: 4,
        };
        let state = sample();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &header, &state).unwrap();
        let (h2, s2) = read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(h2, header);
        assert_eq!(s2.iteration, 3);
        assert_eq!(s2.pool, state.pool);
        assert_eq!(s2.reserve, state.reserve);
        assert_eq!(s2.potential, state.potential);
        assert_eq!(s2.history.len(), 2);
        assert!(s2.history[0].dual_value.is_nan());
        assert_eq!(s2.history[1], state.history[1]);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let header = CheckpointHeader {
            half_width: 1.0,
            intervals: 4,
            moments: 4,
        };
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &header, &sample()).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(&mut bad.as_slice()).is_err());
        let short = &buf[..buf.len() - 3];
        assert!(read_checkpoint(&mut &short[..]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_checkpoint(&mut long.as_slice()).is_err());
    }
}
