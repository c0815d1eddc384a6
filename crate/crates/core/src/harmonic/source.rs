use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use super::scalar::TranscendentalScalar;
use crate::enumeration::{cholesky_upper, CholeskyFactor};
use crate::error::{Error, Result};
use crate::exact;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FromBasis,
    Milnor,
    FromDualGram,
}

/// A flat torus `R^d / Λ_d` described by `W = (bᵗb)⁻¹` and `vol = det(b)`.
#[derive(Clone, Debug)]
pub struct SourceTorus {
    d: usize,
    dual_gram: Vec<TranscendentalScalar>,
    volume: f64,
    provenance: Provenance,
    exact: bool,
    basis: Option<Vec<f64>>,
}

impl SourceTorus {
    pub fn d(&self) -> usize {
        self.d
    }

    /// Row-major `W`.
    pub fn dual_gram(&self) -> &[TranscendentalScalar] {
        &self.dual_gram
    }

    pub fn w(&self, i: usize, j: usize) -> &TranscendentalScalar {
        &self.dual_gram[i * self.d + j]
    }

    pub fn dual_gram_f64(&self) -> Vec<f64> {
        self.dual_gram.iter().map(TranscendentalScalar::float_value).collect()
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// False when `W` was rounded from floating-point input.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Row-major basis matrix (columns are the basis vectors), when known.
    pub fn basis(&self) -> Option<&[f64]> {
        self.basis.as_deref()
    }

    /// All entries of `W` are rational (no `π⁻ᵏ`, k > 0, terms).
    pub fn is_rational(&self) -> bool {
        self.dual_gram.iter().all(TranscendentalScalar::is_rational)
    }

    /// `c·b`: scales the volume by `cᵈ` and `W` by `c⁻²`.
    pub fn scaled(&self, c: &BigRational) -> Result<SourceTorus> {
        if !c.is_positive() {
            return Err(Error::Unsupported("scale factor must be positive".into()));
        }
        let inv_sq = (c * c).recip();
        let cf = c.to_f64().unwrap_or(f64::NAN);
        Ok(SourceTorus {
            d: self.d,
            dual_gram: self.dual_gram.iter().map(|w| w.scale(&inv_sq)).collect(),
            volume: self.volume * cf.powi(self.d as i32),
            provenance: self.provenance,
            exact: self.exact,
            basis: self.basis.as_ref().map(|b| b.iter().map(|x| x * cf).collect()),
        })
    }
}

fn square(rows: &[Vec<f64>]) -> Result<usize> {
    let d = rows.len();
    if d == 0 {
        return Err(Error::InvalidDimension("source torus needs d ≥ 1".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: r.len(),
        });
    }
    Ok(d)
}

/// `bᵗb` for a row-major `b` whose columns are basis vectors.
fn gram_of_columns(b: &[f64], d: usize) -> Vec<f64> {
    let mut g = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            g[i * d + j] = (0..d).map(|k| b[k * d + i] * b[k * d + j]).sum();
        }
    }
    g
}

/// Inverse of a symmetric positive definite matrix through its Cholesky factor.
pub(crate) fn spd_inverse(m: &[f64], d: usize) -> Result<(Vec<f64>, CholeskyFactor)> {
    let r = cholesky_upper(m, d)?;
    // R⁻¹ by back substitution, then M⁻¹ = R⁻¹ R⁻ᵗ
    let mut rinv = vec![0.0; d * d];
    for col in 0..d {
        for i in (0..=col).rev() {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=col).map(|k| r.get(i, k) * rinv[k * d + col]).sum();
            rinv[i * d + col] = (rhs - s) / r.get(i, i);
        }
    }
    let mut inv = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            inv[i * d + j] = (0..d).map(|k| rinv[i * d + k] * rinv[j * d + k]).sum();
        }
    }
    Ok((inv, r))
}

fn mat_mul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = (0..d).map(|k| a[i * d + k] * b[k * d + j]).sum();
        }
    }
    out
}

/// Largest entry of `|A·B − I|`.
pub fn identity_defect(a: &[f64], b: &[f64], d: usize) -> f64 {
    mat_mul(a, b, d)
        .iter()
        .enumerate()
        .map(|(idx, x)| (x - if idx / d == idx % d { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}

fn det_float(b: &[f64], d: usize) -> f64 {
    let mut m = b.to_vec();
    let mut det = 1.0;
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&x, &y| m[x * d + col].abs().total_cmp(&m[y * d + col].abs()))
            .unwrap();
        if m[pivot * d + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..d {
                m.swap(col * d + c, pivot * d + c);
            }
            det = -det;
        }
        let p = m[col * d + col];
        det *= p;
        for r in col + 1..d {
            let f = m[r * d + col] / p;
            for c in col..d {
                m[r * d + c] -= f * m[col * d + c];
            }
        }
    }
    det
}

/// Source torus from a basis `b` (rows of the matrix; columns are basis vectors).
///
/// With `exact_gram`, `W` is the exact rational inverse of that Gram matrix,
/// which must agree with `bᵗb` to 10⁻⁹. Without it `W` is the float inverse,
/// stored as exact binary rationals and flagged approximate.
pub fn source_from_basis(b: &[Vec<f64>], exact_gram: Option<&[Vec<BigRational>]>) -> Result<SourceTorus> {
    let d = square(b)?;
    let flat = b.concat();
    let g = gram_of_columns(&flat, d);
    let (g_inv, _) = spd_inverse(&g, d).map_err(|_| Error::Singular)?;
    let volume = det_float(&flat, d).abs();
    if volume == 0.0 {
        return Err(Error::Singular);
    }
    match exact_gram {
        Some(exact_rows) => {
            if exact_rows.len() != d || exact_rows.iter().any(|r| r.len() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: exact_rows.len(),
                });
            }
            let eg: Vec<BigRational> = exact_rows.concat();
            for i in 0..d {
                for j in 0..d {
                    if eg[i * d + j] != eg[j * d + i] {
                        return Err(Error::NotSymmetric { i, j });
                    }
                    let e = eg[i * d + j].to_f64().unwrap_or(f64::NAN);
                    let f = g[i * d + j];
                    if !((e - f).abs() <= 1e-9 * (1.0 + e.abs())) {
                        return Err(Error::Unsupported(format!(
                            "exact Gram entry ({i},{j}) = {e} does not match bᵗb = {f}"
                        )));
                    }
                }
            }
            let w = exact::inverse(d, &eg)?;
            let det = exact::det_rational(d, &eg);
            Ok(SourceTorus {
                d,
                dual_gram: w.into_iter().map(TranscendentalScalar::rational).collect(),
                volume: det.to_f64().unwrap_or(f64::NAN).sqrt(),
                provenance: Provenance::FromBasis,
                exact: true,
                basis: Some(flat),
            })
        }
        None => Ok(SourceTorus {
            d,
            dual_gram: g_inv.into_iter().map(TranscendentalScalar::from_f64).collect(),
            volume,
            provenance: Provenance::FromBasis,
            exact: false,
            basis: Some(flat),
        }),
    }
}

/// Source torus whose lattice has the given exact (rational, positive definite) Gram matrix.
/// The realizing basis is the upper Cholesky factor of the Gram matrix.
pub fn source_from_gram(gram: &[Vec<BigRational>]) -> Result<SourceTorus> {
    let d = gram.len();
    if d == 0 {
        return Err(Error::InvalidDimension("source torus needs d ≥ 1".into()));
    }
    let flat: Vec<BigRational> = gram.concat();
    if flat.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            actual: flat.len(),
        });
    }
    if !exact::is_positive_definite(d, &flat) {
        return Err(Error::NotPositiveDefinite { pivot: 0 });
    }
    let g: Vec<f64> = flat.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let r = cholesky_upper(&g, d)?;
    source_from_basis(&r.rows(), Some(gram))
}

/// Source torus given directly by `W` (must be numerically positive definite).
pub fn source_from_dual_gram(d: usize, w: Vec<TranscendentalScalar>) -> Result<SourceTorus> {
    if w.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            actual: w.len(),
        });
    }
    for i in 0..d {
        for j in i + 1..d {
            if w[i * d + j] != w[j * d + i] {
                return Err(Error::NotSymmetric { i, j });
            }
        }
    }
    let wf: Vec<f64> = w.iter().map(TranscendentalScalar::float_value).collect();
    let (w_inv, factor) = spd_inverse(&wf, d)?;
    // vol = det(b) = det(W)^{-1/2}
    let volume = 1.0 / factor.determinant();
    let basis = cholesky_upper(&w_inv, d)?.upper().to_vec();
    Ok(SourceTorus {
        d,
        dual_gram: w,
        volume,
        provenance: Provenance::FromDualGram,
        exact: true,
        basis: Some(basis),
    })
}

/// Exponent of `π⁻¹` in the off-diagonal entry `(i, j)`, `i < j`, of the 4×4 matrix
/// `M` used to separate the two 16-dimensional tori.
pub fn milnor_exponent(i: usize, j: usize) -> u32 {
    match (i.min(j), i.max(j)) {
        (0, 1) => 1,
        (0, 2) => 2,
        (0, 3) => 3,
        (1, 2) => 4,
        (1, 3) => 5,
        (2, 3) => 6,
        _ => 0,
    }
}

/// The 4-torus with `W = M`: unit diagonal and distinct powers `π⁻¹ … π⁻⁶`
/// off the diagonal, so `Tr(S·M)` determines every entry of an integral `S`
/// up to its trace. The attached basis `b` is the upper Cholesky factor of `M⁻¹`.
pub fn milnor_source() -> SourceTorus {
    let d = 4;
    let mut w = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            w.push(if i == j {
                TranscendentalScalar::integer(1)
            } else {
                TranscendentalScalar::inv_pi_pow(milnor_exponent(i, j))
            });
        }
    }
    let mut src = source_from_dual_gram(d, w).expect("M is positive definite");
    src.provenance = Provenance::Milnor;
    src
}
