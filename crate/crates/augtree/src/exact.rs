//! Exact linear algebra on small integer and rational matrices.
//!
//! Cell arithmetic, expanding-matrix validation, and geometric bounds all stay
//! in `BigInt`/`BigRational`; nothing in this module touches floating point.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Int = BigInt;
pub type Rat = BigRational;
pub type IVec = Vec<Int>;

pub fn ivec(values: &[i64]) -> IVec {
    values.iter().map(|&v| Int::from(v)).collect()
}

pub fn ivec_add(a: &[Int], b: &[Int]) -> IVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn ivec_sub(a: &[Int], b: &[Int]) -> IVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn ivec_neg(a: &[Int]) -> IVec {
    a.iter().map(|x| -x).collect()
}

/// Dense square integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IMatrix {
    dim: usize,
    data: Vec<Int>,
}

impl IMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("matrix is not square".into()));
        }
        let data = rows.iter().flatten().map(|&v| Int::from(v)).collect();
        Ok(IMatrix { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![Int::zero(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Int::one();
        }
        IMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Int {
        &self.data[i * self.dim + j]
    }

    pub fn rows_i64(&self) -> Option<Vec<Vec<i64>>> {
        let mut out = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut row = Vec::with_capacity(self.dim);
            for j in 0..self.dim {
                row.push(self.get(i, j).to_i64()?);
            }
            out.push(row);
        }
        Some(out)
    }

    pub fn mul_vec(&self, v: &[Int]) -> IVec {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * &v[j]).sum())
            .collect()
    }

    pub fn mul(&self, other: &IMatrix) -> IMatrix {
        let d = self.dim;
        let mut data = vec![Int::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let aik = self.get(i, k);
                if aik.is_zero() {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += aik * other.get(k, j);
                }
            }
        }
        IMatrix { dim: d, data }
    }

    pub fn transpose(&self) -> IMatrix {
        let d = self.dim;
        let mut data = vec![Int::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.get(i, j).clone();
            }
        }
        IMatrix { dim: d, data }
    }

    /// Monic characteristic polynomial of the matrix: returns
    /// `[c_0, c_1, ..., c_{d-1}, 1]` with `p(x) = x^d + c_{d-1} x^{d-1} + ... + c_0`.
    /// Faddeev–LeVerrier; the divisions are exact over the integers.
    pub fn char_poly(&self) -> Vec<Int> {
        let d = self.dim;
        let mut coeffs = vec![Int::zero(); d + 1];
        coeffs[d] = Int::one();
        let mut m = self.clone();
        for k in 1..=d {
            let tr: Int = (0..d).map(|i| m.get(i, i).clone()).sum();
            let c = -tr / Int::from(k as i64);
            coeffs[d - k] = c.clone();
            if k < d {
                let mut shifted = m;
                for i in 0..d {
                    shifted.data[i * d + i] += &c;
                }
                m = self.mul(&shifted);
            }
        }
        coeffs
    }

    /// `det(B) = (-1)^d * p(0)`.
    pub fn det(&self) -> Int {
        let c0 = self.char_poly()[0].clone();
        if self.dim % 2 == 0 {
            c0
        } else {
            -c0
        }
    }

    /// True iff every eigenvalue has modulus strictly greater than 1.
    ///
    /// Exact test: the reversed characteristic polynomial `z^d p(1/z)` must
    /// have all roots strictly inside the unit circle, decided by the
    /// Schur–Cohn recursion over the integers.
    pub fn is_expanding(&self) -> bool {
        let p = self.char_poly();
        // reversed: a_j = coefficient of z^j in z^d p(1/z); a_0 = 1 (monic p).
        let a: Vec<Int> = p.iter().rev().cloned().collect();
        schur_all_roots_inside(&a)
    }

    /// Exact inverse as a rational matrix (row-major), or None if singular.
    pub fn inverse_rational(&self) -> Option<Vec<Rat>> {
        let d = self.dim;
        // Gauss-Jordan on [A | I] over BigRational.
        let mut a: Vec<Rat> = self
            .data
            .iter()
            .map(|x| Rat::from_integer(x.clone()))
            .collect();
        let mut inv: Vec<Rat> = (0..d * d)
            .map(|i| {
                if i / d == i % d {
                    Rat::one()
                } else {
                    Rat::zero()
                }
            })
            .collect();
        for col in 0..d {
            let pivot = (col..d).find(|&r| !a[r * d + col].is_zero())?;
            if pivot != col {
                for j in 0..d {
                    a.swap(col * d + j, pivot * d + j);
                    inv.swap(col * d + j, pivot * d + j);
                }
            }
            let p = a[col * d + col].clone();
            for j in 0..d {
                a[col * d + j] /= &p;
                inv[col * d + j] /= &p;
            }
            for r in 0..d {
                if r == col || a[r * d + col].is_zero() {
                    continue;
                }
                let f = a[r * d + col].clone();
                for j in 0..d {
                    let x = &a[col * d + j] * &f;
                    a[r * d + j] -= x;
                    let y = &inv[col * d + j] * &f;
                    inv[r * d + j] -= y;
                }
            }
        }
        Some(inv)
    }
}

impl std::fmt::Debug for IMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).to_string()).collect())
            .collect();
        write!(f, "{rows:?}")
    }
}

/// Schur–Cohn: all roots of `a_0 + a_1 z + ... + a_n z^n` strictly inside the
/// unit circle. Roots on the circle fail the strict inequality at some stage.
fn schur_all_roots_inside(coeffs: &[Int]) -> bool {
    let mut a: Vec<Int> = coeffs.to_vec();
    while let Some(last) = a.last() {
        let n = a.len() - 1;
        if n == 0 {
            return !last.is_zero();
        }
        if a[0].abs() >= last.abs() {
            return false;
        }
        let lead = a[n].clone();
        let low = a[0].clone();
        let next: Vec<Int> = (0..n)
            .map(|j| &lead * &a[j + 1] - &low * &a[n - 1 - j])
            .collect();
        a = next;
    }
    false
}

/// Signed permutation matrix: one nonzero entry per row and column, each ±1.
/// This is the only linear-part shape the cell arithmetic supports; products
/// and hypercube images stay in the same class.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedPerm {
    dim: usize,
    /// Row-major entries, each in {-1, 0, 1}.
    data: Vec<i8>,
}

impl SignedPerm {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0i8; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1;
        }
        SignedPerm { dim, data }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = vec![0i8; dim * dim];
        let mut col_used = vec![false; dim];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Validation("linear part is not square".into()));
            }
            let mut seen = false;
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 | -1 => {
                        if seen || col_used[j] {
                            return Err(Error::Validation(
                                "linear part is not a signed permutation".into(),
                            ));
                        }
                        seen = true;
                        col_used[j] = true;
                        data[i * dim + j] = v as i8;
                    }
                    _ => {
                        return Err(Error::Validation(
                            "linear part is not a signed permutation".into(),
                        ))
                    }
                }
            }
            if !seen {
                return Err(Error::Validation(
                    "linear part is not a signed permutation".into(),
                ));
            }
        }
        Ok(SignedPerm { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> i8 {
        self.data[i * self.dim + j]
    }

    pub fn is_identity(&self) -> bool {
        *self == SignedPerm::identity(self.dim)
    }

    /// Matrix product `self * other`, again a signed permutation.
    pub fn compose(&self, other: &SignedPerm) -> SignedPerm {
        let d = self.dim;
        let mut data = vec![0i8; d * d];
        for i in 0..d {
            // row i of self has its nonzero at column k
            let k = (0..d).find(|&k| self.entry(i, k) != 0).unwrap();
            let s = self.entry(i, k);
            for j in 0..d {
                data[i * d + j] = s * other.entry(k, j);
            }
        }
        SignedPerm { dim: d, data }
    }

    pub fn apply(&self, v: &[Int]) -> IVec {
        let d = self.dim;
        (0..d)
            .map(|i| {
                let k = (0..d).find(|&k| self.entry(i, k) != 0).unwrap();
                if self.entry(i, k) > 0 {
                    v[k].clone()
                } else {
                    -&v[k]
                }
            })
            .collect()
    }

    /// Canonical encoding used in signatures and reports.
    pub fn encode(&self) -> Vec<i8> {
        self.data.clone()
    }

    pub fn rows_i64(&self) -> Vec<Vec<i64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.entry(i, j) as i64).collect())
            .collect()
    }
}

impl std::fmt::Debug for SignedPerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.rows_i64())
    }
}

/// Row-sum (infinity) operator norm of a rational matrix.
pub fn rat_norm_inf(mat: &[Rat], dim: usize) -> Rat {
    (0..dim)
        .map(|i| (0..dim).map(|j| mat[i * dim + j].abs()).sum::<Rat>())
        .fold(Rat::zero(), |acc, x| if x > acc { x } else { acc })
}

pub fn rat_mat_mul(a: &[Rat], b: &[Rat], dim: usize) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            if a[i * dim + k].is_zero() {
                continue;
            }
            for j in 0..dim {
                let x = &a[i * dim + k] * &b[k * dim + j];
                out[i * dim + j] += x;
            }
        }
    }
    out
}

pub fn rat_mat_vec(a: &[Rat], v: &[Rat], dim: usize) -> Vec<Rat> {
    (0..dim)
        .map(|i| (0..dim).map(|j| &a[i * dim + j] * &v[j]).sum())
        .collect()
}
