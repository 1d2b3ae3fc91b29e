//! Block-parallel generation: m elements per step.
//!
//! The companion matrix advances the register by one clock; its m-th power,
//! the information matrix, advances it by a whole block. Block vectors use the
//! register's ordering, highest index first, so a block reads
//! `(a_{t,m-1}, ..., a_{t,0})` and is emitted in reverse.

use serde::{Deserialize, Serialize};

use crate::gfq::{Elem, FieldMatrix, PrimeField};
use crate::lfsr_serial::{FeedbackPoly, LfsrState};
use crate::{Error, Result};

/// One block of m consecutive elements, highest index first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Block {
    elems: Vec<Elem>,
}

impl Block {
    pub fn new(field: &PrimeField, elems: &[u64]) -> Result<Self> {
        if elems.is_empty() {
            return Err(Error::DimensionMismatch("empty block".into()));
        }
        let elems = elems
            .iter()
            .map(|&x| field.elem(x))
            .collect::<Result<_>>()?;
        Ok(Self { elems })
    }

    pub(crate) fn from_elems(elems: Vec<Elem>) -> Self {
        Self { elems }
    }

    pub fn elems(&self) -> &[Elem] {
        &self.elems
    }

    pub(crate) fn elems_mut(&mut self) -> &mut [Elem] {
        &mut self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.elems.iter().all(|&x| x == 0)
    }

    /// The block in sequence order, lowest index first.
    pub fn emission_order(&self) -> impl Iterator<Item = Elem> + '_ {
        self.elems.iter().rev().copied()
    }

    /// All `q^m` blocks, in [`LfsrState::index`] order.
    pub fn enumerate(q: u32, m: usize) -> impl Iterator<Item = Block> {
        let size = (q as u64).pow(m as u32);
        (0..size).map(move |i| LfsrState::from_index(i, q, m).into())
    }
}

impl From<LfsrState> for Block {
    fn from(s: LfsrState) -> Self {
        Self {
            elems: s.cells().to_vec(),
        }
    }
}

impl From<Block> for LfsrState {
    fn from(b: Block) -> Self {
        LfsrState::from_cells(b.elems)
    }
}

/// The companion matrix: first row `(c_{m-1}, ..., c_0)`, ones on the
/// subdiagonal. Multiplying a register vector by it clocks the register once.
pub fn companion(fp: &FeedbackPoly) -> FieldMatrix {
    let m = fp.degree();
    let mut mat = FieldMatrix::zeros(m, m);
    for (j, &c) in fp.taps().iter().rev().enumerate() {
        mat.set(0, j, c);
    }
    for i in 1..m {
        mat.set(i, i - 1, 1);
    }
    mat
}

/// The information matrix `G_Inf = companion^m mod q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockMatrix {
    field: PrimeField,
    g_inf: FieldMatrix,
}

impl BlockMatrix {
    pub fn build(fp: &FeedbackPoly) -> Self {
        let field = fp.field();
        let g_inf = field
            .mat_pow(&companion(fp), fp.degree() as u64)
            .expect("companion matrix is square");
        Self { field, g_inf }
    }

    /// Wraps a stored matrix without checking its relation to any polynomial.
    pub fn from_matrix(field: PrimeField, g_inf: FieldMatrix) -> Result<Self> {
        if g_inf.n_rows() != g_inf.n_cols() {
            return Err(Error::NotSquare {
                rows: g_inf.n_rows(),
                cols: g_inf.n_cols(),
            });
        }
        Ok(Self { field, g_inf })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn m(&self) -> usize {
        self.g_inf.n_rows()
    }

    pub fn g_inf(&self) -> &FieldMatrix {
        &self.g_inf
    }

    /// `A_t = G_Inf · A_{t-1} mod q`.
    pub fn step(&self, prev: &Block) -> Result<Block> {
        Ok(Block::from_elems(
            self.field.mat_vec(&self.g_inf, prev.elems())?,
        ))
    }

    /// `t_count` successive blocks `A_1, ..., A_t` following `seed = A_0`.
    pub fn generate_blocks(&self, seed: &Block, t_count: usize) -> Result<Vec<Block>> {
        let mut out = Vec::with_capacity(t_count);
        let mut cur = seed.clone();
        for _ in 0..t_count {
            cur = self.step(&cur)?;
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// The first `n` sequence elements, identical to the serial register's
    /// output: the seed block followed by each generated block, all read
    /// lowest index first.
    pub fn sequence(&self, seed: &Block, n: usize) -> Result<Vec<Elem>> {
        let m = self.m();
        let t_count = n.div_ceil(m).saturating_sub(1);
        let blocks = self.generate_blocks(seed, t_count)?;
        Ok(flatten(seed, &blocks).take(n).collect())
    }
}

/// Seed followed by `blocks`, each read lowest index first.
pub fn flatten<'a>(seed: &'a Block, blocks: &'a [Block]) -> impl Iterator<Item = Elem> + 'a {
    std::iter::once(seed)
        .chain(blocks)
        .flat_map(Block::emission_order)
}
