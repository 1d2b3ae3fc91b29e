//! Arithmetic over the prime field GF(q) and over dense matrices of field
//! elements.
//!
//! Elements are plain `u32` values kept canonical in `[0, q)`; every
//! operation reduces immediately.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A field element. Always canonical in `[0, q)` for the field it came from.
pub type Elem = u32;

/// The prime field GF(q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct PrimeField {
    q: u32,
}

impl PrimeField {
    /// Builds GF(q), rejecting composite or trivial moduli.
    pub fn new(q: u32) -> Result<Self> {
        if is_prime(q as u64) {
            Ok(Self { q })
        } else {
            Err(Error::NotPrime(q as u64))
        }
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Rejects values outside `[0, q)`.
    pub fn elem(&self, x: u64) -> Result<Elem> {
        if x < self.q as u64 {
            Ok(x as Elem)
        } else {
            Err(Error::OutOfRange {
                value: x,
                modulus: self.q as u64,
            })
        }
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> Elem {
        (x % self.q as u64) as Elem
    }

    #[inline]
    pub fn add(&self, x: Elem, y: Elem) -> Elem {
        self.reduce(x as u64 + y as u64)
    }

    #[inline]
    pub fn neg(&self, x: Elem) -> Elem {
        if x == 0 {
            0
        } else {
            self.q - x
        }
    }

    #[inline]
    pub fn sub(&self, x: Elem, y: Elem) -> Elem {
        self.add(x, self.neg(y))
    }

    #[inline]
    pub fn mul(&self, x: Elem, y: Elem) -> Elem {
        self.reduce(x as u64 * y as u64)
    }

    pub fn pow(&self, x: Elem, e: u64) -> Elem {
        pow_mod(x as u64, e, self.q as u64) as Elem
    }

    /// Multiplicative inverse; zero has none.
    pub fn inv(&self, x: Elem) -> Result<Elem> {
        inv_mod(x as u64, self.q as u64)
            .map(|y| y as Elem)
            .ok_or(Error::NoInverse(x as u64, self.q as u64))
    }

    /// Dot product of two equal-length element slices, reduced mod q.
    pub fn dot(&self, a: &[Elem], b: &[Elem]) -> Elem {
        debug_assert_eq!(a.len(), b.len());
        let q = self.q as u64;
        let sum = a
            .iter()
            .zip(b)
            .fold(0u64, |acc, (&x, &y)| (acc + x as u64 * y as u64) % q);
        sum as Elem
    }

    /// `a · b` reduced mod q.
    pub fn mat_mul(&self, a: &FieldMatrix, b: &FieldMatrix) -> Result<FieldMatrix> {
        if a.cols != b.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                a.rows, a.cols, b.rows, b.cols
            )));
        }
        let q = self.q as u64;
        let mut entries = vec![0; a.rows * b.cols];
        for i in 0..a.rows {
            for j in 0..b.cols {
                let mut acc = 0u64;
                for k in 0..a.cols {
                    acc = (acc + a.get(i, k) as u64 * b.get(k, j) as u64) % q;
                }
                entries[i * b.cols + j] = acc as Elem;
            }
        }
        Ok(FieldMatrix {
            rows: a.rows,
            cols: b.cols,
            entries,
        })
    }

    /// `a · v` reduced mod q.
    pub fn mat_vec(&self, a: &FieldMatrix, v: &[Elem]) -> Result<Vec<Elem>> {
        if a.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                a.rows,
                a.cols,
                v.len()
            )));
        }
        Ok(a.rows().map(|row| self.dot(row, v)).collect())
    }

    /// `a^e` mod q by square-and-multiply; `a^0` is the identity.
    pub fn mat_pow(&self, a: &FieldMatrix, mut e: u64) -> Result<FieldMatrix> {
        if a.rows != a.cols {
            return Err(Error::NotSquare {
                rows: a.rows,
                cols: a.cols,
            });
        }
        let mut result = FieldMatrix::identity(a.rows);
        let mut base = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = self.mat_mul(&result, &base)?;
            }
            e >>= 1;
            if e > 0 {
                base = self.mat_mul(&base, &base)?;
            }
        }
        Ok(result)
    }
}

impl TryFrom<u32> for PrimeField {
    type Error = Error;

    fn try_from(q: u32) -> Result<Self> {
        Self::new(q)
    }
}

impl From<PrimeField> for u32 {
    fn from(f: PrimeField) -> u32 {
        f.q
    }
}

/// Dense row-major matrix of field elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Elem>,
}

impl FieldMatrix {
    /// Builds a matrix from rows, checking shape and that every entry is in
    /// `[0, q)`.
    pub fn from_rows(field: &PrimeField, rows: &[Vec<Elem>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::DimensionMismatch("empty matrix".into()));
        }
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "ragged rows: expected {n_cols} columns, found {}",
                    row.len()
                )));
            }
            for &x in row {
                entries.push(field.elem(x as u64)?);
            }
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            entries,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1;
        }
        Self {
            rows: n,
            cols: n,
            entries,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Elem {
        self.entries[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, x: Elem) {
        self.entries[i * self.cols + j] = x;
    }

    pub fn row(&self, i: usize) -> &[Elem] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Elem]> {
        self.entries.chunks(self.cols)
    }

    pub fn to_rows(&self) -> Vec<Vec<Elem>> {
        self.rows().map(<[Elem]>::to_vec).collect()
    }

    /// This matrix with `other`'s rows appended below.
    pub fn stack(&self, other: &FieldMatrix) -> Result<FieldMatrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack {} columns on {}",
                other.cols, self.cols
            )));
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Ok(FieldMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            entries,
        })
    }
}

/// Trial-division primality test.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

pub(crate) fn pow_mod(base: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let m128 = m as u128;
    let mut acc: u128 = 1;
    let mut b = (base % m) as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        e >>= 1;
    }
    acc as u64
}

/// Inverse of `a` modulo `m` by the extended Euclidean algorithm, if
/// `gcd(a, m) = 1`.
pub(crate) fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 0 {
        return None;
    }
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let quot = r0 / r1;
        (r0, r1) = (r1, r0 - quot * r1);
        (t0, t1) = (t1, t0 - quot * t1);
    }
    if r0 != 1 {
        return if m == 1 { Some(0) } else { None };
    }
    Some(t0.rem_euclid(m as i128) as u64)
}
