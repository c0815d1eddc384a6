use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact;

/// Symmetric integer matrix: a Gram matrix of a basis or of a tuple of vectors.
///
/// Ordering is by dimension, then trace, then row-major entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GramMatrix {
    dim: usize,
    entries: Vec<i64>,
}

impl GramMatrix {
    pub fn new(dim: usize, entries: Vec<i64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        for i in 0..dim {
            for j in i + 1..dim {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        Ok(GramMatrix { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        Self::new(dim, rows.concat())
    }

    pub fn zero(dim: usize) -> Self {
        GramMatrix {
            dim,
            entries: vec![0; dim * dim],
        }
    }

    pub fn diagonal(diag: &[i64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zero(dim);
        for (i, &d) in diag.iter().enumerate() {
            m.entries[i * dim + i] = d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    pub fn diag(&self) -> Vec<i64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> i64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0))
    }

    pub fn is_even(&self) -> bool {
        (0..self.dim).all(|i| self.get(i, i) % 2 == 0)
    }

    pub fn is_psd(&self) -> bool {
        let r: Vec<_> = self.entries.iter().map(|&x| exact::rat(x)).collect();
        exact::is_psd(self.dim, &r)
    }

    pub fn det(&self) -> Result<i128> {
        exact::det_i64(self.dim, &self.entries)
    }

    /// Block-diagonal sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &GramMatrix) -> GramMatrix {
        let dim = self.dim + other.dim;
        let mut m = Self::zero(dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.entries[i * dim + j] = self.get(i, j);
            }
        }
        for i in 0..other.dim {
            for j in 0..other.dim {
                m.entries[(self.dim + i) * dim + self.dim + j] = other.get(i, j);
            }
        }
        m
    }

    /// `Pᵗ T P` for the permutation sending slot `i` to `perm[i]`:
    /// the result has entry `(i, j) = T[perm[i], perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> GramMatrix {
        let dim = self.dim;
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] = self.get(perm[i], perm[j]);
            }
        }
        GramMatrix { dim, entries }
    }

    /// `Uᵗ T U` for an integer matrix `U` (row-major, same dimension).
    pub fn congruent(&self, u: &[i64]) -> Result<GramMatrix> {
        let dim = self.dim;
        if u.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: u.len(),
            });
        }
        let mut tu = vec![0i64; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                tu[i * dim + j] = (0..dim).map(|k| self.get(i, k) * u[k * dim + j]).sum();
            }
        }
        let mut out = vec![0i64; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                out[i * dim + j] = (0..dim).map(|k| u[k * dim + i] * tu[k * dim + j]).sum();
            }
        }
        GramMatrix::new(dim, out)
    }

    /// Flips the sign of row and column `slot` (off-diagonal entries only change).
    pub fn negate_slot(&self, slot: usize) -> GramMatrix {
        let mut m = self.clone();
        for j in 0..self.dim {
            if j != slot {
                m.entries[slot * self.dim + j] = -m.entries[slot * self.dim + j];
                m.entries[j * self.dim + slot] = -m.entries[j * self.dim + slot];
            }
        }
        m
    }
}

impl Ord for GramMatrix {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then_with(|| self.trace().cmp(&other.trace()))
            .then_with(|| self.entries.cmp(&other.entries))
    }
}

impl PartialOrd for GramMatrix {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical text form: row-major, rows separated by `;`, entries by `,`.
impl fmt::Display for GramMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            if i > 0 {
                f.write_str(";")?;
            }
            for j in 0..self.dim {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        Ok(())
    }
}

impl FromStr for GramMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut offset = 0;
        for row in s.split(';') {
            let mut parsed = Vec::new();
            let mut col_offset = offset;
            for entry in row.split(',') {
                let token = entry.trim();
                let value = token
                    .parse::<i64>()
                    .map_err(|_| Error::parse(col_offset, token, "expected an integer entry"))?;
                parsed.push(value);
                col_offset += entry.len() + 1;
            }
            rows.push(parsed);
            offset += row.len() + 1;
        }
        GramMatrix::from_rows(&rows)
    }
}

impl Serialize for GramMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GramMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
