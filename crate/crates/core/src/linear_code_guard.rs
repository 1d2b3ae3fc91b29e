//! Separable q-ary linear code over block generation.
//!
//! Parity rules `P` (r×m) are defined over the information symbols of the
//! block being produced. Because that block is `G_Inf · A_{t-1}`, the check
//! symbols can be computed straight from the previous block with
//! `C = P · G_Inf`, so the generator matrix is `G_Gen = [G_Inf ; C]` and
//!
//! ```text
//! A*_t = G_Gen · A_{t-1} mod q = (info, checks),   checks = P · info.
//! ```
//!
//! A received block is consistent iff its syndrome `P · info - checks` is zero.

use serde::{Deserialize, Serialize};

use crate::block_parallel::{Block, BlockMatrix};
use crate::gfq::{Elem, FieldMatrix, PrimeField};
use crate::{Error, Result};

/// Parity rules for `r` check symbols over `m` information symbols.
///
/// With `r = 1` this is a plain sum check. With `r >= 2` row `z` holds
/// `α_j^z` for the distinct nonzero points `α_j = j + 1`, which needs
/// `q - 1 >= m`.
pub fn build_check_matrix(field: PrimeField, m: usize, r: usize) -> Result<FieldMatrix> {
    let q = field.q();
    if r == 0 || m == 0 {
        return Err(Error::UnsupportedCheck {
            q,
            m,
            r,
            reason: "need at least one check and one information symbol",
        });
    }
    if r > 1 && ((q - 1) as usize) < m {
        return Err(Error::UnsupportedCheck {
            q,
            m,
            r,
            reason: "Vandermonde rows need m distinct nonzero points (q - 1 >= m)",
        });
    }
    let rows: Vec<Vec<Elem>> = (0..r)
        .map(|z| {
            (0..m)
                .map(|j| field.pow(field.reduce(j as u64 + 1), z as u64))
                .collect()
        })
        .collect();
    FieldMatrix::from_rows(&field, &rows)
}

/// `P` together with the composed check rows `C = P · G_Inf`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckMatrix {
    p_mat: FieldMatrix,
    c_rows: FieldMatrix,
}

impl CheckMatrix {
    /// Wraps stored matrices; no relation between them is checked.
    pub fn from_parts(p_mat: FieldMatrix, c_rows: FieldMatrix) -> Result<Self> {
        if p_mat.n_rows() != c_rows.n_rows() || p_mat.n_cols() != c_rows.n_cols() {
            return Err(Error::DimensionMismatch(format!(
                "parity rules {}x{} vs check rows {}x{}",
                p_mat.n_rows(),
                p_mat.n_cols(),
                c_rows.n_rows(),
                c_rows.n_cols()
            )));
        }
        Ok(Self { p_mat, c_rows })
    }

    pub fn p_mat(&self) -> &FieldMatrix {
        &self.p_mat
    }

    pub fn c_rows(&self) -> &FieldMatrix {
        &self.c_rows
    }

    pub fn r(&self) -> usize {
        self.p_mat.n_rows()
    }
}

/// A block with its check symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodedBlock {
    pub info: Block,
    pub checks: Vec<Elem>,
}

impl CodedBlock {
    pub fn len(&self) -> usize {
        self.info.len() + self.checks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Symbol at `pos` in the transmitted order: information first, then checks.
    pub fn symbol(&self, pos: usize) -> Elem {
        let m = self.info.len();
        if pos < m {
            self.info.elems()[pos]
        } else {
            self.checks[pos - m]
        }
    }

    pub fn set_symbol(&mut self, pos: usize, value: Elem) {
        let m = self.info.len();
        if pos < m {
            self.info.elems_mut()[pos] = value;
        } else {
            self.checks[pos - m] = value;
        }
    }
}

/// Nonzero syndrome of a corrupted block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Syndrome(pub Vec<Elem>);

/// The generator `G_Gen = [G_Inf ; C]` and its parity rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCode {
    block: BlockMatrix,
    check: CheckMatrix,
}

impl LinearCode {
    /// Composes `C = P · G_Inf`.
    pub fn build(block: BlockMatrix, p_mat: FieldMatrix) -> Result<Self> {
        let c_rows = block.field().mat_mul(&p_mat, block.g_inf())?;
        Ok(Self {
            block,
            check: CheckMatrix { p_mat, c_rows },
        })
    }

    pub fn from_parts(block: BlockMatrix, check: CheckMatrix) -> Result<Self> {
        if check.p_mat.n_cols() != block.m() {
            return Err(Error::DimensionMismatch(format!(
                "parity rules have {} columns, block has {} symbols",
                check.p_mat.n_cols(),
                block.m()
            )));
        }
        Ok(Self { block, check })
    }

    pub fn block(&self) -> &BlockMatrix {
        &self.block
    }

    pub fn check(&self) -> &CheckMatrix {
        &self.check
    }

    pub fn field(&self) -> PrimeField {
        self.block.field()
    }

    /// The stacked `(m + r)×m` generator matrix.
    pub fn ggen(&self) -> FieldMatrix {
        self.block
            .g_inf()
            .stack(&self.check.c_rows)
            .expect("shapes fixed at construction")
    }

    /// `A*_t = G_Gen · A_{t-1} mod q`.
    pub fn encode_block(&self, prev: &Block) -> Result<CodedBlock> {
        let field = self.field();
        let info = self.block.step(prev)?;
        let checks = field.mat_vec(&self.check.c_rows, prev.elems())?;
        Ok(CodedBlock { info, checks })
    }

    /// `Ok` iff `P · info - checks` vanishes; otherwise the syndrome.
    pub fn check_block(&self, cb: &CodedBlock) -> Result<Result<(), Syndrome>> {
        check_block(self.field(), &self.check.p_mat, cb)
    }
}

/// Syndrome test against parity rules `p_mat`. The outer `Result` carries
/// dimension errors; the inner one the verdict.
pub fn check_block(
    field: PrimeField,
    p_mat: &FieldMatrix,
    cb: &CodedBlock,
) -> Result<Result<(), Syndrome>> {
    if cb.checks.len() != p_mat.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} check symbols for {} parity rules",
            cb.checks.len(),
            p_mat.n_rows()
        )));
    }
    let expected = field.mat_vec(p_mat, cb.info.elems())?;
    let syndrome: Vec<Elem> = expected
        .iter()
        .zip(&cb.checks)
        .map(|(&e, &c)| field.sub(e, c))
        .collect();
    if syndrome.iter().all(|&s| s == 0) {
        Ok(Ok(()))
    } else {
        Ok(Err(Syndrome(syndrome)))
    }
}
