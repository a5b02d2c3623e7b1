//! Tabulated set functions.
//!
//! An [`OracleTable`] stores the value of a set function on every subset of a small ground set
//! of worker indices, up to a maximum cardinality. Subsets are addressed by bitmask over the
//! position of each worker in the sorted ground list.

use serde::{Deserialize, Serialize};

use super::InstanceError;

/// Largest ground set for which a table (and its exhaustive checks) is accepted.
pub const MAX_ORACLE_GROUND: usize = 12;

const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawOracle", into = "RawOracle")]
pub struct OracleTable {
    ground: Vec<usize>,
    max_size: usize,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    ground: Vec<usize>,
    max_size: usize,
    entries: Vec<RawEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    set: Vec<usize>,
    value: f64,
}

impl OracleTable {
    /// Tabulates `f` (called with a bitmask over `ground` positions) on every subset of size at
    /// most `max_size`. `ground` is sorted and deduplicated first.
    pub fn from_fn(
        mut ground: Vec<usize>,
        max_size: usize,
        mut f: impl FnMut(u32) -> f64,
    ) -> Result<Self, InstanceError> {
        ground.sort_unstable();
        ground.dedup();
        if ground.len() > MAX_ORACLE_GROUND {
            return Err(InstanceError::OracleTooLarge(ground.len()));
        }
        let max_size = max_size.min(ground.len());
        let values = (0..1u32 << ground.len())
            .map(|mask| {
                if mask.count_ones() as usize <= max_size {
                    f(mask)
                } else {
                    f64::NAN
                }
            })
            .collect();
        Ok(Self {
            ground,
            max_size,
            values,
        })
    }

    /// A complete table over the ground set `0..n`.
    pub fn full(n: usize, f: impl FnMut(u32) -> f64) -> Result<Self, InstanceError> {
        Self::from_fn((0..n).collect(), n, f)
    }

    pub fn ground(&self) -> &[usize] {
        &self.ground
    }

    pub fn ground_size(&self) -> usize {
        self.ground.len()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    /// Position of a worker inside the ground list.
    pub fn position(&self, worker: usize) -> Option<usize> {
        self.ground.binary_search(&worker).ok()
    }

    pub fn mask_of(&self, workers: &[usize]) -> Result<u32, InstanceError> {
        let mut mask = 0u32;
        for &w in workers {
            let pos = self.position(w).ok_or(InstanceError::TableMiss)?;
            mask |= 1 << pos;
        }
        Ok(mask)
    }

    /// Value on a bitmask; `None` if the subset is outside the table.
    pub fn get_mask(&self, mask: u32) -> Option<f64> {
        self.values.get(mask as usize).copied().filter(|v| !v.is_nan())
    }

    pub fn value_mask(&self, mask: u32) -> Result<f64, InstanceError> {
        self.get_mask(mask).ok_or(InstanceError::TableMiss)
    }

    /// Value on a set of worker indices (duplicates collapse).
    pub fn value(&self, workers: &[usize]) -> Result<f64, InstanceError> {
        self.value_mask(self.mask_of(workers)?)
    }

    /// Every tabulated subset as (sorted worker list, value), in increasing mask order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.values.iter().enumerate().filter_map(move |(mask, &v)| {
            if v.is_nan() {
                return None;
            }
            let set = (0..self.ground.len())
                .filter(|p| mask >> p & 1 == 1)
                .map(|p| self.ground[p])
                .collect();
            Some((set, v))
        })
    }

    /// Exhaustive check that the table is normalized, monotone and submodular on every
    /// tabulated pair `S ⊆ T`, `a ∉ T` with `|T ∪ {a}| ≤ max_size`.
    pub fn is_monotone_submodular(&self) -> Result<bool, InstanceError> {
        let n = self.ground.len();
        if n > MAX_ORACLE_GROUND {
            return Err(InstanceError::OracleTooLarge(n));
        }
        let full = 1u32 << n;
        for mask in 0..full {
            if mask.count_ones() as usize > self.max_size {
                continue;
            }
            if self.get_mask(mask).is_none() {
                return Err(InstanceError::TableMiss);
            }
        }
        match self.get_mask(0) {
            Some(v) if v.abs() <= CHECK_TOL => {}
            _ => return Ok(false),
        }
        for t in 0..full {
            let Some(gt) = self.get_mask(t) else { continue };
            for a in 0..n {
                let bit = 1u32 << a;
                if t & bit != 0 {
                    continue;
                }
                let Some(gta) = self.get_mask(t | bit) else {
                    continue;
                };
                let outer = gta - gt;
                if outer < -CHECK_TOL {
                    return Ok(false);
                }
                // every subset s of t
                let mut s = t;
                loop {
                    let inner = self.get_mask(s | bit).unwrap() - self.get_mask(s).unwrap();
                    if inner + CHECK_TOL < outer {
                        return Ok(false);
                    }
                    if s == 0 {
                        break;
                    }
                    s = (s - 1) & t;
                }
            }
        }
        Ok(true)
    }
}

impl PartialEq for OracleTable {
    /// Untabulated subsets compare equal to each other.
    fn eq(&self, other: &Self) -> bool {
        self.ground == other.ground
            && self.max_size == other.max_size
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a == b || (a.is_nan() && b.is_nan()))
    }
}

impl TryFrom<RawOracle> for OracleTable {
    type Error = InstanceError;

    fn try_from(raw: RawOracle) -> Result<Self, Self::Error> {
        let mut ground = raw.ground.clone();
        ground.sort_unstable();
        ground.dedup();
        if ground.len() != raw.ground.len() {
            return Err(InstanceError::Schema("oracle ground has duplicates".into()));
        }
        if ground.len() > MAX_ORACLE_GROUND {
            return Err(InstanceError::OracleTooLarge(ground.len()));
        }
        let mut table = OracleTable {
            ground,
            max_size: raw.max_size.min(raw.ground.len()),
            values: vec![f64::NAN; 1 << raw.ground.len()],
        };
        for entry in raw.entries {
            let mask = table
                .mask_of(&entry.set)
                .map_err(|_| InstanceError::Schema(format!("oracle set {:?} outside ground", entry.set)))?;
            if mask.count_ones() as usize != entry.set.len() {
                return Err(InstanceError::Schema(format!(
                    "oracle set {:?} repeats a worker",
                    entry.set
                )));
            }
            if mask.count_ones() as usize > table.max_size {
                return Err(InstanceError::Schema(format!(
                    "oracle set {:?} exceeds max_size",
                    entry.set
                )));
            }
            table.values[mask as usize] = entry.value;
        }
        Ok(table)
    }
}

impl From<OracleTable> for RawOracle {
    fn from(table: OracleTable) -> Self {
        RawOracle {
            entries: table.entries().map(|(set, value)| RawEntry { set, value }).collect(),
            ground: table.ground,
            max_size: table.max_size,
        }
    }
}
