//! Binary trajectory dumps. All integers and floats are little-endian.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "FRFL"
//! 4       2     version (1)
//! 6       2     reserved, zero
//! 8       8     state dimension m (u64)
//! 16      8     steps N (u64)
//! 24      8     stored rows R, 1 ≤ R ≤ N+1 (u64)
//! 32      8     horizon T (f64)
//! 40      8     inner-product weight (f64)
//! 48      1     kernel tag: 0 = Riemann–Liouville, 1 = JSON pair
//! 49      ..    tag 0: order α (f64)
//!               tag 1: length L (u32) then L bytes of JSON
//! ..      8·R·m states, row-major
//! ```

use crate::convex::Space;
use crate::flow::Trajectory;
use crate::kernel::{rl_pair, SoninePair, TimeGrid};
use thiserror::Error;

pub const DUMP_MAGIC: [u8; 4] = *b"FRFL";
pub const DUMP_VERSION: u16 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DumpError {
    #[error("not a trajectory dump (bad magic)")]
    Magic,
    #[error("unsupported dump version {0}")]
    Version(u16),
    #[error("dump truncated: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("{0} trailing bytes after the states")]
    Trailing(usize),
    #[error("invalid header: {0}")]
    Header(String),
    #[error("non-finite state value at row {row}")]
    NonFinite { row: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDump {
    pub grid: TimeGrid,
    pub weight: f64,
    pub pair: SoninePair,
    /// Accepted states, `states[0] = u₀`.
    pub states: Vec<Vec<f64>>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DumpError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let Some(end) = end else {
            return Err(DumpError::Truncated {
                offset: self.pos,
                needed: n,
            });
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], DumpError> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }

    fn u16(&mut self) -> Result<u16, DumpError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, DumpError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, DumpError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, DumpError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

fn header(msg: impl Into<String>) -> DumpError {
    DumpError::Header(msg.into())
}

impl TrajectoryDump {
    pub fn from_trajectory(traj: &Trajectory, pair: &SoninePair) -> Self {
        Self {
            grid: traj.grid,
            weight: traj.space.weight,
            pair: pair.clone(),
            states: traj.states.clone(),
        }
    }

    pub fn space(&self) -> Space {
        Space::weighted(self.states[0].len(), self.weight)
    }

    /// A trajectory carrying only the states; selections and forcing are zero.
    pub fn to_trajectory(&self) -> Trajectory {
        Trajectory::from_states(self.grid, self.space(), self.states.clone())
    }

    pub fn encode(&self) -> Vec<u8> {
        let dim = self.states[0].len();
        let mut out = Vec::with_capacity(64 + 8 * dim * self.states.len());
        out.extend_from_slice(&DUMP_MAGIC);
        out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&(dim as u64).to_le_bytes());
        out.extend_from_slice(&(self.grid.steps() as u64).to_le_bytes());
        out.extend_from_slice(&(self.states.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.grid.horizon().to_le_bytes());
        out.extend_from_slice(&self.weight.to_le_bytes());
        match self.pair.order.filter(|a| rl_pair(*a).as_ref() == Ok(&self.pair)) {
            Some(order) => {
                out.push(0);
                out.extend_from_slice(&order.to_le_bytes());
            }
            None => {
                let json = serde_json::to_vec(&self.pair).expect("pairs serialize");
                out.push(1);
                out.extend_from_slice(&(json.len() as u32).to_le_bytes());
                out.extend_from_slice(&json);
            }
        }
        for row in &self.states {
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DumpError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.array::<4>()? != DUMP_MAGIC {
            return Err(DumpError::Magic);
        }
        let version = r.u16()?;
        if version != DUMP_VERSION {
            return Err(DumpError::Version(version));
        }
        if r.u16()? != 0 {
            return Err(header("reserved field must be zero"));
        }
        let dim = r.u64()?;
        let steps = r.u64()?;
        let rows = r.u64()?;
        let horizon = r.f64()?;
        let weight = r.f64()?;
        if dim == 0 {
            return Err(header("state dimension must be positive"));
        }
        if rows == 0 || rows > steps.saturating_add(1) {
            return Err(header(format!("{rows} rows for {steps} steps")));
        }
        let steps = usize::try_from(steps).map_err(|_| header("step count overflows"))?;
        let grid = TimeGrid::new(horizon, steps).map_err(|e| header(e.to_string()))?;
        if !(weight.is_finite() && weight > 0.0) {
            return Err(header(format!("weight {weight} must be positive")));
        }
        let pair = match r.take(1)?[0] {
            0 => rl_pair(r.f64()?).map_err(|e| header(e.to_string()))?,
            1 => {
                let len = r.u32()? as usize;
                let json = r.take(len)?;
                let pair: SoninePair = serde_json::from_slice(json).map_err(|e| header(e.to_string()))?;
                pair.k.validate().map_err(|e| header(e.to_string()))?;
                pair.l.validate().map_err(|e| header(e.to_string()))?;
                pair
            }
            t => return Err(header(format!("unknown kernel tag {t}"))),
        };
        let (dim, rows) = (dim as usize, rows as usize);
        let needed = dim
            .checked_mul(rows)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| header("state block size overflows"))?;
        let remaining = bytes.len() - r.pos;
        if remaining < needed {
            return Err(DumpError::Truncated { offset: r.pos, needed });
        }
        if remaining > needed {
            return Err(DumpError::Trailing(remaining - needed));
        }
        let mut states = Vec::with_capacity(rows);
        for row in 0..rows {
            let mut u = Vec::with_capacity(dim);
            for _ in 0..dim {
                let v = r.f64()?;
                if !v.is_finite() {
                    return Err(DumpError::NonFinite { row });
                }
                u.push(v);
            }
            states.push(u);
        }
        Ok(Self {
            grid,
            weight,
            pair,
            states,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;

    fn sample(pair: SoninePair) -> TrajectoryDump {
        TrajectoryDump {
            grid: TimeGrid::new(2.0, 4).unwrap(),
            weight: 0.25,
            pair,
            states: vec![vec![1.0, -2.0], vec![0.5, 1e-300], vec![0.25, 3.0]],
        }
    }

    #[test]
    fn round_trip_rl() {
        let d = sample(rl_pair(0.3).unwrap());
        let bytes = d.encode();
        assert_eq!(&bytes[..4], b"FRFL");
        assert_eq!(bytes[48], 0);
        assert_eq!(TrajectoryDump::decode(&bytes).unwrap(), d);
    }

    #[test]
    fn round_trip_custom_pair() {
        let pair = SoninePair::new(Kernel::constant(1.0), Kernel::Zero).unwrap();
        let d = sample(pair);
        let bytes = d.encode();
        assert_eq!(bytes[48], 1);
        assert_eq!(TrajectoryDump::decode(&bytes).unwrap(), d);
    }

    #[test]
    fn truncation_detected() {
        let bytes = sample(rl_pair(0.5).unwrap()).encode();
        for cut in [0, 3, 20, 48, bytes.len() - 1] {
            assert!(TrajectoryDump::decode(&bytes[..cut]).is_err(), "cut {cut}");
        }
        let mut long = bytes.clone();
        long.push(0);
        assert_eq!(TrajectoryDump::decode(&long), Err(DumpError::Trailing(1)));
    }

    #[test]
    fn huge_header_counts_rejected_without_allocating() {
        let mut bytes = sample(rl_pair(0.5).unwrap()).encode();
        bytes[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(TrajectoryDump::decode(&bytes).is_err());
    }
}
