//! Full-rank lattices in ½Zⁿ and their standard constructions.
//!
//! Coordinates are stored as integers in units of ½, so every lattice built
//! here (Zⁿ, Dₙ, Dₙ⁺ and direct sums) is represented exactly. Inner products
//! of two such vectors are integers in units of ¼.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;
#[cfg(test)]
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact;
use crate::gram::GramMatrix;

pub type Rational = BigRational;

/// A vector of ½Zⁿ in the ambient orthonormal frame.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector {
    halves: Vec<i64>,
}

impl LatticeVector {
    pub fn from_halves(halves: Vec<i64>) -> Self {
        LatticeVector { halves }
    }

    pub fn from_integers(coords: &[i64]) -> Self {
        LatticeVector {
            halves: coords.iter().map(|c| 2 * c).collect(),
        }
    }

    /// Returns `None` if some coordinate is not in ½Z.
    pub fn from_rationals(coords: &[Rational]) -> Option<Self> {
        let two = BigInt::from(2);
        coords
            .iter()
            .map(|c| {
                if !two.is_multiple_of(c.denom()) {
                    return None;
                }
                (c * BigRational::from_integer(two.clone())).to_integer().to_i64()
            })
            .collect::<Option<Vec<_>>>()
            .map(|halves| LatticeVector { halves })
    }

    pub fn halves(&self) -> &[i64] {
        &self.halves
    }

    pub fn dim(&self) -> usize {
        self.halves.len()
    }

    pub fn coords(&self) -> Vec<Rational> {
        self.halves
            .iter()
            .map(|&h| BigRational::new(BigInt::from(h), BigInt::from(2)))
            .collect()
    }

    /// `4·⟨self, other⟩`.
    pub fn dot_quarters(&self, other: &LatticeVector) -> i64 {
        self.halves.iter().zip(&other.halves).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> Rational {
        BigRational::new(BigInt::from(self.dot_quarters(self)), BigInt::from(4))
    }

    fn concat(&self, other: &LatticeVector) -> LatticeVector {
        let mut halves = self.halves.clone();
        halves.extend_from_slice(&other.halves);
        LatticeVector { halves }
    }

    fn zero_padded(&self, before: usize, after: usize) -> LatticeVector {
        let mut halves = vec![0; before];
        halves.extend_from_slice(&self.halves);
        halves.extend(std::iter::repeat_n(0, after));
        LatticeVector { halves }
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, h) in self.halves.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if h % 2 == 0 {
                write!(f, "{}", h / 2)?;
            } else {
                write!(f, "{}/2", h)?;
            }
        }
        f.write_str(")")
    }
}

/// A full-rank lattice given by `n` basis vectors in Rⁿ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBasis {
    ambient_dim: usize,
    basis: Vec<LatticeVector>,
    label: String,
}

impl LatticeBasis {
    /// Builds a lattice from explicit basis vectors; rejects non-square or
    /// rank-deficient input.
    pub fn new(basis: Vec<LatticeVector>, label: impl Into<String>) -> Result<Self> {
        let n = basis.len();
        if let Some(bad) = basis.iter().find(|b| b.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bad.dim(),
            });
        }
        let lattice = LatticeBasis {
            ambient_dim: n,
            basis,
            label: label.into(),
        };
        if exact::det_i64(n, &lattice.basis_matrix_halves())? == 0 {
            return Err(Error::Singular);
        }
        Ok(lattice)
    }

    /// The rank-0 lattice; neutral element of [`direct_sum`].
    pub fn trivial() -> Self {
        LatticeBasis {
            ambient_dim: 0,
            basis: Vec::new(),
            label: "0".to_string(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[LatticeVector] {
        &self.basis
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Row-major n×n matrix whose *columns* are the basis vectors, in units of ½.
    pub fn basis_matrix_halves(&self) -> Vec<i64> {
        let n = self.ambient_dim;
        let mut m = vec![0; n * n];
        for (j, b) in self.basis.iter().enumerate() {
            for (i, &h) in b.halves.iter().enumerate() {
                m[i * n + j] = h;
            }
        }
        m
    }

    /// Pairwise inner products in units of ¼.
    pub fn gram_quarters(&self) -> Vec<i64> {
        let n = self.rank();
        let mut g = vec![0; n * n];
        for i in 0..n {
            for j in i..n {
                let q = self.basis[i].dot_quarters(&self.basis[j]);
                g[i * n + j] = q;
                g[j * n + i] = q;
            }
        }
        g
    }

    pub fn is_integral(&self) -> bool {
        self.gram_quarters().iter().all(|q| q % 4 == 0)
    }

    pub fn is_even(&self) -> bool {
        let n = self.rank();
        let g = self.gram_quarters();
        self.is_integral() && (0..n).all(|i| g[i * n + i] % 8 == 0)
    }

    /// Exact Gram matrix; fails on the first non-integral inner product.
    pub fn gram(&self) -> Result<GramMatrix> {
        let n = self.rank();
        let q = self.gram_quarters();
        for i in 0..n {
            for j in i..n {
                let v = q[i * n + j];
                if v % 4 != 0 {
                    let value = BigRational::new(BigInt::from(v), BigInt::from(4));
                    return Err(Error::NonIntegral {
                        i,
                        j,
                        value: value.to_string(),
                    });
                }
            }
        }
        GramMatrix::new(n, q.into_iter().map(|x| x / 4).collect())
    }

    pub fn discriminant(&self) -> Result<u64> {
        let det = self.gram()?.det()?;
        u64::try_from(det).map_err(|_| Error::Overflow("discriminant"))
    }

    /// Ambient vector `Σ cᵢ bᵢ`.
    pub fn vector_from_coordinates(&self, coords: &[i64]) -> Result<LatticeVector> {
        if coords.len() != self.rank() {
            return Err(Error::DimensionMismatch {
                expected: self.rank(),
                actual: coords.len(),
            });
        }
        let mut halves = vec![0i64; self.ambient_dim];
        for (c, b) in coords.iter().zip(&self.basis) {
            for (acc, h) in halves.iter_mut().zip(&b.halves) {
                *acc = c
                    .checked_mul(*h)
                    .and_then(|x| acc.checked_add(x))
                    .ok_or(Error::Overflow("lattice vector"))?;
            }
        }
        Ok(LatticeVector { halves })
    }

    /// Integer coordinates `c` with `basis · c = v`, if `v` lies in the lattice.
    pub fn member_coordinates(&self, v: &LatticeVector) -> Result<Option<Vec<i64>>> {
        if v.dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                actual: v.dim(),
            });
        }
        let n = self.ambient_dim;
        let a: Vec<_> = self.basis_matrix_halves().into_iter().map(exact::rat).collect();
        let b: Vec<_> = v.halves.iter().map(|&h| exact::rat(h)).collect();
        let Some(x) = exact::solve(n, &a, &b) else {
            return Err(Error::Singular);
        };
        Ok(x.iter()
            .map(|c| if c.is_integer() { c.to_integer().to_i64() } else { None })
            .collect())
    }

    /// Membership for a vector given by rational coordinates; anything outside ½Zⁿ is rejected.
    pub fn member_coordinates_rational(&self, coords: &[Rational]) -> Result<Option<Vec<i64>>> {
        if coords.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                actual: coords.len(),
            });
        }
        match LatticeVector::from_rationals(coords) {
            Some(v) => self.member_coordinates(&v),
            None => Ok(None),
        }
    }
}

/// Zⁿ with the standard basis.
pub fn integer_lattice(n: usize) -> Result<LatticeBasis> {
    if n == 0 {
        return Err(Error::InvalidDimension("Zⁿ needs n ≥ 1".into()));
    }
    let basis = (0..n)
        .map(|i| {
            let mut c = vec![0; n];
            c[i] = 1;
            LatticeVector::from_integers(&c)
        })
        .collect();
    LatticeBasis::new(basis, format!("Z:{n}"))
}

fn dn_generators(n: usize) -> Vec<LatticeVector> {
    let mut gens = Vec::with_capacity(n);
    let mut first = vec![0; n];
    first[0] = 1;
    first[1] = 1;
    gens.push(LatticeVector::from_integers(&first));
    for i in 0..n - 1 {
        let mut c = vec![0; n];
        c[i] = 1;
        c[i + 1] = -1;
        gens.push(LatticeVector::from_integers(&c));
    }
    gens
}

/// Dₙ = {z ∈ Zⁿ : Σ zᵢ even}, basis e₁+e₂, eᵢ−eᵢ₊₁ (i = 1..n−1).
pub fn dn(n: usize) -> Result<LatticeBasis> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("D_n needs n ≥ 2, got {n}")));
    }
    LatticeBasis::new(dn_generators(n), format!("D:{n}"))
}

/// Dₙ⁺ = Dₙ ∪ (Dₙ + (½,…,½)) for even n.
///
/// Basis: the Dₙ basis with its last vector replaced by (½,…,½). For n = 2
/// that replacement is degenerate ((½,½) is half of e₁+e₂), so the first
/// vector is replaced instead. Integrality and evenness are not assumed;
/// query them with [`LatticeBasis::is_integral`] / [`LatticeBasis::is_even`].
pub fn dn_plus(n: usize) -> Result<LatticeBasis> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidDimension(format!(
            "D_n^+ needs even n ≥ 2 (otherwise (1,…,1) ∉ D_n), got {n}"
        )));
    }
    let mut gens = dn_generators(n);
    let glue = LatticeVector::from_halves(vec![1; n]);
    if n == 2 {
        gens[0] = glue;
    } else {
        gens[n - 1] = glue;
    }
    LatticeBasis::new(gens, format!("D+:{n}"))
}

/// Orthogonal direct sum in R^{n_a} ⊕ R^{n_b}.
pub fn direct_sum(a: &LatticeBasis, b: &LatticeBasis) -> LatticeBasis {
    if b.rank() == 0 {
        return a.clone();
    }
    if a.rank() == 0 {
        return b.clone();
    }
    let basis = a
        .basis
        .iter()
        .map(|v| v.zero_padded(0, b.ambient_dim))
        .chain(b.basis.iter().map(|v| LatticeVector::from_halves(vec![0; a.ambient_dim]).concat(v)))
        .collect();
    LatticeBasis {
        ambient_dim: a.ambient_dim + b.ambient_dim,
        basis,
        label: format!("{}+{}", a.label, b.label),
    }
}

/// `n·½` as a rational, handy for building test vectors.
pub fn half(n: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(2))
}
