//! The sequential q-LFSR: one field element per clock.
//!
//! A generating polynomial `K(x) = x^m + k_{m-1} x^{m-1} + ... + k_0` gives the
//! recurrence
//!
//! ```text
//! a_{p+m} = c_{m-1} a_{p+m-1} + ... + c_0 a_p   (mod q),   c_i = -k_i mod q
//! ```
//!
//! The register holds `(a_{p+m-1}, ..., a_{p+1}, a_p)` (highest index first).
//! Each clock shifts the new element in at the high end and emits the evicted
//! `a_p`, so a generated sequence starts with the seed read lowest index first.

use serde::{Deserialize, Serialize};

use crate::gfq::{Elem, PrimeField};
use crate::{check_limit, state_space, Error, Result};

/// A monic generating polynomial with its derived feedback taps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeedbackPoly {
    field: PrimeField,
    /// `k_0, ..., k_m`, ascending degree.
    coeffs: Vec<Elem>,
    /// `c_0, ..., c_{m-1}`.
    taps: Vec<Elem>,
}

impl FeedbackPoly {
    /// Validates `K(x)` (ascending coefficients `k_0..k_m`) and derives the
    /// taps `c_i = (q - k_i) mod q`.
    pub fn derive_taps(field: PrimeField, coeffs: &[u64]) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidCoefficient {
                index: coeffs.len().saturating_sub(1),
                value: coeffs.first().copied().unwrap_or(0),
                reason: "polynomial degree must be at least 1",
            });
        }
        let q = field.q() as u64;
        for (index, &value) in coeffs.iter().enumerate() {
            if value >= q {
                return Err(Error::InvalidCoefficient {
                    index,
                    value,
                    reason: "coefficient not in [0, q)",
                });
            }
        }
        let m = coeffs.len() - 1;
        if coeffs[m] != 1 {
            return Err(Error::InvalidCoefficient {
                index: m,
                value: coeffs[m],
                reason: "leading coefficient must be 1",
            });
        }
        if coeffs[0] == 0 {
            return Err(Error::InvalidCoefficient {
                index: 0,
                value: 0,
                reason: "constant coefficient must be nonzero",
            });
        }
        let coeffs: Vec<Elem> = coeffs.iter().map(|&k| k as Elem).collect();
        let taps = coeffs[..m].iter().map(|&k| field.neg(k)).collect();
        Ok(Self {
            field,
            coeffs,
            taps,
        })
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.field.q()
    }

    /// Degree m of K(x), equal to the register length.
    #[inline]
    pub fn degree(&self) -> usize {
        self.taps.len()
    }

    pub fn coeffs(&self) -> &[Elem] {
        &self.coeffs
    }

    pub fn taps(&self) -> &[Elem] {
        &self.taps
    }

    /// The register state `(0, ..., 0, 1)`, i.e. `a_0 = 1` and every other cell zero.
    pub fn unit_state(&self) -> LfsrState {
        let mut cells = vec![0; self.degree()];
        cells[self.degree() - 1] = 1;
        LfsrState { cells }
    }
}

/// Register contents `(a_{p+m-1}, ..., a_p)`, highest index first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LfsrState {
    cells: Vec<Elem>,
}

impl LfsrState {
    /// Cells given highest index first, each checked against the field.
    pub fn new(field: &PrimeField, cells: &[u64]) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::DimensionMismatch("empty register".into()));
        }
        let cells = cells
            .iter()
            .map(|&x| field.elem(x))
            .collect::<Result<_>>()?;
        Ok(Self { cells })
    }

    pub(crate) fn from_cells(cells: Vec<Elem>) -> Self {
        Self { cells }
    }

    pub fn cells(&self) -> &[Elem] {
        &self.cells
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [Elem] {
        &mut self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// The all-zero state is a fixed point of every linear recurrence.
    pub fn is_degenerate(&self) -> bool {
        self.cells.iter().all(|&x| x == 0)
    }

    /// The cells read as a base-q numeral, highest-index cell most significant.
    /// Distinct states map to distinct indices in `[0, q^m)`.
    pub fn index(&self, q: u32) -> u64 {
        self.cells
            .iter()
            .fold(0u64, |acc, &x| acc * q as u64 + x as u64)
    }

    /// Inverse of [`LfsrState::index`].
    pub fn from_index(mut index: u64, q: u32, m: usize) -> Self {
        let mut cells = vec![0; m];
        for cell in cells.iter_mut().rev() {
            *cell = (index % q as u64) as Elem;
            index /= q as u64;
        }
        Self { cells }
    }

    /// Clocks the register once in place and returns the emitted element.
    pub fn clock(&mut self, fp: &FeedbackPoly) -> Elem {
        debug_assert_eq!(self.cells.len(), fp.degree());
        let field = fp.field();
        let m = self.cells.len();
        // cells[m-1-i] holds a_{p+i}
        let fresh = fp.taps().iter().enumerate().fold(0, |acc, (i, &c)| {
            field.add(acc, field.mul(c, self.cells[m - 1 - i]))
        });
        let emitted = self.cells[m - 1];
        self.cells.rotate_right(1);
        self.cells[0] = fresh;
        emitted
    }

    /// One clock, returning the successor state and the emitted element.
    pub fn step(&self, fp: &FeedbackPoly) -> (LfsrState, Elem) {
        let mut next = self.clone();
        let emitted = next.clock(fp);
        (next, emitted)
    }
}

/// Iterator over the emitted elements of a register.
#[derive(Debug, Clone)]
pub struct SerialGenerator<'a> {
    fp: &'a FeedbackPoly,
    state: LfsrState,
}

impl<'a> SerialGenerator<'a> {
    pub fn new(fp: &'a FeedbackPoly, seed: LfsrState) -> Self {
        Self { fp, state: seed }
    }

    pub fn state(&self) -> &LfsrState {
        &self.state
    }
}

impl Iterator for SerialGenerator<'_> {
    type Item = Elem;

    fn next(&mut self) -> Option<Elem> {
        Some(self.state.clock(self.fp))
    }
}

/// The first `n` emitted elements starting from `seed`.
pub fn generate(seed: &LfsrState, fp: &FeedbackPoly, n: usize) -> Vec<Elem> {
    SerialGenerator::new(fp, seed.clone()).take(n).collect()
}

/// Cycle length of the orbit of [`FeedbackPoly::unit_state`], using the
/// process-wide exhaustion limit.
pub fn period(fp: &FeedbackPoly) -> Result<u64> {
    period_with_limit(fp, crate::exhaustion_limit())
}

pub fn period_with_limit(fp: &FeedbackPoly, limit: u64) -> Result<u64> {
    let size = orbit_bound(fp, limit)?;
    let start = fp.unit_state();
    let mut state = start.clone();
    // k_0 != 0 makes the step map a bijection, so the orbit closes within q^m - 1 steps.
    for n in 1..size {
        state.clock(fp);
        if state == start {
            return Ok(n);
        }
    }
    unreachable!("orbit of a nonzero state under an invertible map must close")
}

/// q^m, provided the q^m - 1 nonzero states fit within `limit`.
fn orbit_bound(fp: &FeedbackPoly, limit: u64) -> Result<u64> {
    match state_space(fp.q(), fp.degree()) {
        Some(size) if size - 1 <= limit => Ok(size),
        size => Err(Error::ExhaustionLimit {
            q: fp.q(),
            m: fp.degree(),
            limit,
            size,
        }),
    }
}

/// True iff the recurrence reaches the maximal period `q^m - 1`.
pub fn is_primitive(fp: &FeedbackPoly) -> Result<bool> {
    is_primitive_with_limit(fp, crate::exhaustion_limit())
}

pub fn is_primitive_with_limit(fp: &FeedbackPoly, limit: u64) -> Result<bool> {
    let size = orbit_bound(fp, limit)?;
    Ok(period_with_limit(fp, limit)? == size - 1)
}

/// The first primitive polynomial of degree `m` over `field`, scanning
/// `(k_0, ..., k_{m-1})` in lexicographic order.
pub fn find_primitive(field: PrimeField, m: usize, limit: u64) -> Result<Option<FeedbackPoly>> {
    let size = check_limit(field.q(), m, limit)?;
    let q = field.q() as u64;
    for idx in 0..size {
        let mut coeffs = Vec::with_capacity(m + 1);
        let mut rest = idx;
        for _ in 0..m {
            coeffs.push(rest % q);
            rest /= q;
        }
        if coeffs[0] == 0 {
            continue;
        }
        coeffs.push(1);
        let fp = FeedbackPoly::derive_taps(field, &coeffs)?;
        if is_primitive_with_limit(&fp, limit)? {
            return Ok(Some(fp));
        }
    }
    Ok(None)
}
