//! Arithmetic-polynomial form of block generation.
//!
//! Each of the m next-state functions `f_w : [0,q)^m -> [0,q)` is a
//! multi-valued logic function. Any such function equals a polynomial with
//! per-variable exponents `0..q-1` on the grid `[0,q)^m`; working with
//! coefficients in `Z_{q^m}` keeps everything integral, because the grid
//! Vandermonde determinant is a product of differences smaller than q and so
//! is a unit mod `q^m`.
//!
//! Weighting `f_w` by `q^w` and summing packs all m outputs into one
//! polynomial whose value mod `q^m` carries `f_w` as base-q digit w. The
//! masking operator [`unmask`] pulls a digit back out.
//!
//! Variables are ordered `(a_p, ..., a_{p+m-1})`; exponent tuples follow the
//! same order. Blocks are stored highest index first, so variable `u` of a
//! block `b` is `b[m - 1 - u]`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::block_parallel::{Block, BlockMatrix};
use crate::gfq::{inv_mod, Elem};
use crate::lfsr_serial::FeedbackPoly;
use crate::{check_limit, Error, Result};

/// Per-variable exponents `(e_0, ..., e_{m-1})`.
pub type Exponents = Vec<u32>;

/// Truth table of a function `[0,q)^m -> [0,q)`.
///
/// Entry `i` holds the value at the input whose digits, read as
/// `i = Σ a_u q^u`, are `(a_0, ..., a_{m-1})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MfalTable {
    q: u32,
    m: usize,
    outputs: Vec<Elem>,
}

impl MfalTable {
    pub fn from_fn(q: u32, m: usize, mut f: impl FnMut(&[Elem]) -> Elem) -> Self {
        let size = (q as usize).pow(m as u32);
        let outputs = (0..size)
            .map(|i| {
                let vars = digits(i as u64, q, m);
                let y = f(&vars);
                debug_assert!(y < q);
                y
            })
            .collect();
        Self { q, m, outputs }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Value at the input `(a_p, ..., a_{p+m-1})`.
    pub fn get(&self, vars: &[Elem]) -> Elem {
        self.outputs[input_index(vars, self.q)]
    }

    pub fn outputs(&self) -> &[Elem] {
        &self.outputs
    }
}

/// Base-q digits of `i`, least significant first.
pub(crate) fn digits(mut i: u64, q: u32, m: usize) -> Vec<Elem> {
    (0..m)
        .map(|_| {
            let d = (i % q as u64) as Elem;
            i /= q as u64;
            d
        })
        .collect()
}

fn input_index(vars: &[Elem], q: u32) -> usize {
    vars.iter()
        .rev()
        .fold(0usize, |acc, &a| acc * q as usize + a as usize)
}

/// Variables `(a_p, ..., a_{p+m-1})` of a block stored highest index first.
pub fn block_vars(state: &Block) -> Vec<Elem> {
    state.emission_order().collect()
}

/// The m next-state functions of the register: table `j` maps the state
/// `(a_p, ..., a_{p+m-1})` to `a_{p+m+j}`, i.e. row `m-1-j` of `G_Inf`.
pub fn next_state_mfal(fp: &FeedbackPoly, limit: u64) -> Result<Vec<MfalTable>> {
    let q = fp.q();
    let m = fp.degree();
    check_limit(q, m, limit)?;
    let bm = BlockMatrix::build(fp);
    let field = fp.field();
    Ok((0..m)
        .map(|j| {
            let row = bm.g_inf().row(m - 1 - j);
            MfalTable::from_fn(q, m, |vars| {
                // row entries pair with the block, highest index first
                let block: Vec<Elem> = vars.iter().rev().copied().collect();
                field.dot(row, &block)
            })
        })
        .collect())
}

/// Sparse polynomial over `Z_modulus` in m variables with exponents below q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArithPoly {
    q: u32,
    m: usize,
    modulus: u64,
    coeffs: BTreeMap<Exponents, u64>,
}

impl ArithPoly {
    /// Builds from explicit terms, dropping zeros and validating ranges.
    pub fn from_terms(
        q: u32,
        m: usize,
        modulus: u64,
        terms: impl IntoIterator<Item = (Exponents, u64)>,
    ) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (exps, c) in terms {
            if exps.len() != m || exps.iter().any(|&e| e >= q) {
                return Err(Error::DimensionMismatch(format!(
                    "exponent tuple {exps:?} invalid for q={q}, m={m}"
                )));
            }
            if c >= modulus {
                return Err(Error::OutOfRange { value: c, modulus });
            }
            if c != 0 && coeffs.insert(exps.clone(), c).is_some() {
                return Err(Error::DimensionMismatch(format!(
                    "duplicate monomial {exps:?}"
                )));
            }
        }
        Ok(Self {
            q,
            m,
            modulus,
            coeffs,
        })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coeffs(&self) -> &BTreeMap<Exponents, u64> {
        &self.coeffs
    }

    pub fn coeff(&self, exps: &[u32]) -> u64 {
        self.coeffs.get(exps).copied().unwrap_or(0)
    }

    /// Evaluation mod `modulus`.
    pub fn eval(&self, vars: &[Elem]) -> u64 {
        eval_terms_mod(
            self.coeffs.iter().map(|(e, &c)| (e.as_slice(), c)),
            vars,
            self.modulus,
        )
    }
}

/// `Π a_u^{e_u}` as a plain integer (`0^0 = 1`).
pub fn monomial_value(exps: &[u32], vars: &[Elem]) -> BigUint {
    exps.iter().zip(vars).fold(BigUint::one(), |acc, (&e, &a)| {
        acc * BigUint::from(a).pow(e)
    })
}

/// `Π a_u^{e_u} mod modulus`.
pub fn monomial_mod(exps: &[u32], vars: &[Elem], modulus: u64) -> u64 {
    let m = modulus as u128;
    exps.iter().zip(vars).fold(1 % modulus, |acc, (&e, &a)| {
        (acc as u128 * crate::gfq::pow_mod(a as u64, e as u64, modulus) as u128 % m) as u64
    })
}

/// Sum of `c · monomial` over `terms`, reduced mod `modulus` after every
/// operation.
pub fn eval_terms_mod<'a>(
    terms: impl IntoIterator<Item = (&'a [u32], u64)>,
    vars: &[Elem],
    modulus: u64,
) -> u64 {
    let m = modulus as u128;
    terms.into_iter().fold(0u64, |acc, (exps, c)| {
        let term = (c % modulus) as u128 * monomial_mod(exps, vars, modulus) as u128 % m;
        ((acc as u128 + term) % m) as u64
    })
}

/// Inverse of the q×q Vandermonde matrix `V[x][e] = x^e` on points `0..q`,
/// entries mod `modulus`. Requires every difference of points to be a unit.
fn vandermonde_inverse(q: u32, modulus: u64) -> Result<Vec<Vec<u64>>> {
    let n = q as usize;
    let md = modulus as u128;
    let mut a: Vec<Vec<u64>> = (0..n)
        .map(|x| {
            (0..n)
                .map(|e| crate::gfq::pow_mod(x as u64, e as u64, modulus))
                .collect()
        })
        .collect();
    let mut inv: Vec<Vec<u64>> = (0..n)
        .map(|i| (0..n).map(|j| u64::from(i == j) % modulus).collect())
        .collect();
    for col in 0..n {
        // Z_{p^k} is local: an invertible matrix has a unit pivot in every column.
        let pivot = (col..n)
            .find(|&r| inv_mod(a[r][col], modulus).is_some())
            .ok_or(Error::NoInverse(a[col][col], modulus))?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let pinv = inv_mod(a[col][col], modulus).expect("pivot is a unit") as u128;
        for j in 0..n {
            a[col][j] = (a[col][j] as u128 * pinv % md) as u64;
            inv[col][j] = (inv[col][j] as u128 * pinv % md) as u64;
        }
        for r in 0..n {
            if r == col || a[r][col] == 0 {
                continue;
            }
            let factor = a[r][col] as u128;
            for j in 0..n {
                let sub_a = factor * a[col][j] as u128 % md;
                a[r][j] = ((a[r][j] as u128 + md - sub_a) % md) as u64;
                let sub_i = factor * inv[col][j] as u128 % md;
                inv[r][j] = ((inv[r][j] as u128 + md - sub_i) % md) as u64;
            }
        }
    }
    Ok(inv)
}

/// The unique polynomial with exponents below q that reproduces `tbl` on the
/// whole grid, coefficients mod `modulus`.
///
/// Tensor-product interpolation: the 1-D inverse Vandermonde is applied along
/// each variable axis in turn.
pub fn interpolate_mfal(tbl: &MfalTable, modulus: u64) -> Result<ArithPoly> {
    let q = tbl.q;
    let m = tbl.m;
    let vinv = vandermonde_inverse(q, modulus)?;
    let md = modulus as u128;
    let n = q as usize;
    let mut values: Vec<u64> = tbl.outputs.iter().map(|&y| y as u64 % modulus).collect();
    let mut fiber = vec![0u64; n];
    for axis in 0..m {
        let stride = n.pow(axis as u32);
        for base in 0..values.len() {
            // visit each fiber once, from its zero-digit start
            if !(base / stride).is_multiple_of(n) {
                continue;
            }
            for (x, slot) in fiber.iter_mut().enumerate() {
                *slot = values[base + x * stride];
            }
            for e in 0..n {
                let c = vinv[e]
                    .iter()
                    .zip(&fiber)
                    .fold(0u128, |acc, (&v, &f)| (acc + v as u128 * f as u128) % md);
                values[base + e * stride] = c as u64;
            }
        }
    }
    let terms = values
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c != 0)
        .map(|(i, c)| (digits(i as u64, q, m), c));
    ArithPoly::from_terms(q, m, modulus, terms)
}

/// All m output polynomials packed into one: digit w of its value mod `q^m`
/// is output w.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedArithPoly {
    base: ArithPoly,
    weights: Vec<u64>,
    value_bound: BigUint,
}

impl PackedArithPoly {
    /// Wraps stored coefficients, recomputing the weights and the bound.
    pub fn from_base(base: ArithPoly) -> Result<Self> {
        let q = base.q as u64;
        let expected = crate::state_space(base.q, base.m);
        if expected != Some(base.modulus) {
            return Err(Error::DimensionMismatch(format!(
                "packed modulus {} is not q^m = {q}^{}",
                base.modulus, base.m
            )));
        }
        let weights = (0..base.m as u32).map(|e| q.pow(e)).collect();
        let value_bound = value_bound(&base);
        Ok(Self {
            base,
            weights,
            value_bound,
        })
    }

    pub fn base(&self) -> &ArithPoly {
        &self.base
    }

    pub fn q(&self) -> u32 {
        self.base.q
    }

    pub fn m(&self) -> usize {
        self.base.m
    }

    /// `q^m`.
    pub fn modulus(&self) -> u64 {
        self.base.modulus
    }

    /// `q^0, ..., q^{m-1}`.
    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    /// Upper bound on the plain-integer value over every input.
    pub fn value_bound(&self) -> &BigUint {
        &self.value_bound
    }

    /// `(raw mod q^m, raw)` where `raw = Σ v_i · monomial_i` over the integers.
    pub fn eval_packed(&self, state: &Block) -> (u64, BigUint) {
        let vars = block_vars(state);
        let raw = self
            .base
            .coeffs
            .iter()
            .fold(BigUint::zero(), |acc, (exps, &v)| {
                acc + monomial_value(exps, &vars) * v
            });
        let d = (&raw % self.modulus())
            .try_into()
            .expect("reduced below a u64 modulus");
        (d, raw)
    }

    /// `raw mod q^m` without forming the wide integer.
    pub fn eval_mod(&self, state: &Block) -> u64 {
        self.base.eval(&block_vars(state))
    }

    /// Next block via the packed polynomial: the element `a_{p+m+w}` is digit
    /// w, so it lands at block position `m - 1 - w`.
    pub fn lnp_step(&self, state: &Block) -> Block {
        decode_block(self.eval_mod(state), self.q(), self.m())
    }
}

/// `Σ_i v_i (q-1)^{|e_i|}`, the largest plain-integer value any input can
/// produce (all coefficients are nonnegative, all inputs below q).
fn value_bound(base: &ArithPoly) -> BigUint {
    let top = BigUint::from(base.q - 1);
    base.coeffs.iter().fold(BigUint::zero(), |acc, (exps, &v)| {
        acc + top.pow(exps.iter().sum::<u32>()) * v
    })
}

/// Weighted sum of the per-output polynomials: `v_i = Σ_w q^w l_{w,i} mod q^m`.
pub fn pack(polys: &[ArithPoly]) -> Result<PackedArithPoly> {
    let first = polys
        .first()
        .ok_or_else(|| Error::DimensionMismatch("nothing to pack".into()))?;
    let (q, m) = (first.q, first.m);
    if polys.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} polynomials for m = {m}",
            polys.len()
        )));
    }
    let modulus =
        crate::state_space(q, m).ok_or_else(|| Error::DimensionMismatch("q^m overflows".into()))?;
    if let Some(p) = polys
        .iter()
        .find(|p| p.q != q || p.m != m || p.modulus != modulus)
    {
        return Err(Error::DimensionMismatch(format!(
            "polynomial over q={}, m={}, modulus {} does not match q={q}, m={m}, modulus {modulus}",
            p.q, p.m, p.modulus
        )));
    }
    let md = modulus as u128;
    let mut packed: BTreeMap<Exponents, u64> = BTreeMap::new();
    let mut weight = 1u128;
    for p in polys {
        for (exps, &c) in &p.coeffs {
            let slot = packed.entry(exps.clone()).or_insert(0);
            *slot = ((*slot as u128 + weight * c as u128) % md) as u64;
        }
        weight = weight * q as u128 % md.max(1);
    }
    PackedArithPoly::from_base(ArithPoly::from_terms(q, m, modulus, packed)?)
}

/// Base-q digit w of `d_value`: `⌊d / q^w⌋ mod q`.
pub fn unmask(d_value: u64, w: usize, q: u32, m: usize) -> Result<Elem> {
    if w >= m {
        return Err(Error::DigitOutOfRange { w, m });
    }
    Ok(((d_value / (q as u64).pow(w as u32)) % q as u64) as Elem)
}

/// The block whose position `m - 1 - w` holds digit w of `d_value`.
pub fn decode_block(d_value: u64, q: u32, m: usize) -> Block {
    let elems = (0..m)
        .rev()
        .map(|w| unmask(d_value, w, q, m).expect("w < m"))
        .collect();
    Block::from_elems(elems)
}

/// Interpolates and packs the next-state functions of `fp`.
pub fn compile(fp: &FeedbackPoly, limit: u64) -> Result<PackedArithPoly> {
    let modulus = check_limit(fp.q(), fp.degree(), limit)?;
    let polys = next_state_mfal(fp, limit)?
        .iter()
        .map(|t| interpolate_mfal(t, modulus))
        .collect::<Result<Vec<_>>>()?;
    pack(&polys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfq::PrimeField;
    use crate::lfsr_serial::{find_primitive, generate, LfsrState};

    const LIMIT: u64 = 1 << 16;

    fn gf(q: u32) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn poly(q: u32, k: &[u64]) -> FeedbackPoly {
        FeedbackPoly::derive_taps(gf(q), k).unwrap()
    }

    fn block(q: u32, e: &[u64]) -> Block {
        Block::new(&gf(q), e).unwrap()
    }

    /// Serial oracle: the m elements after the state, in emission order.
    fn serial_next(fp: &FeedbackPoly, state: &Block) -> Vec<Elem> {
        let m = fp.degree();
        generate(&LfsrState::from(state.clone()), fp, 2 * m)[m..].to_vec()
    }

    #[test]
    fn next_state_examples() {
        let fp = poly(3, &[2, 1, 1]);
        let tables = next_state_mfal(&fp, LIMIT).unwrap();
        // state (a1, a0) = (0, 1) means variables (a_p, a_{p+1}) = (1, 0)
        assert_eq!(tables[0].get(&[1, 0]), 1);
        assert_eq!(tables[1].get(&[1, 0]), 2);
        assert!(tables.iter().all(|t| t.get(&[0, 0]) == 0));
    }

    #[test]
    fn next_state_tables_match_serial_oracle() {
        let fp = poly(5, &[2, 0, 1, 1]);
        let tables = next_state_mfal(&fp, LIMIT).unwrap();
        for b in Block::enumerate(5, 3) {
            let vars = block_vars(&b);
            let got: Vec<Elem> = tables.iter().map(|t| t.get(&vars)).collect();
            assert_eq!(got, serial_next(&fp, &b));
        }
    }

    #[test]
    fn next_state_respects_limit() {
        assert!(matches!(
            next_state_mfal(&poly(3, &[2, 1, 1]), 8),
            Err(Error::ExhaustionLimit { .. })
        ));
    }

    #[test]
    fn interpolate_examples() {
        let double = MfalTable::from_fn(3, 1, |v| (2 * v[0]) % 3);
        let p = interpolate_mfal(&double, 3).unwrap();
        assert_eq!(p.coeffs().clone(), BTreeMap::from([(vec![1], 2)]));

        let constant = MfalTable::from_fn(3, 2, |_| 2);
        let p = interpolate_mfal(&constant, 9).unwrap();
        assert_eq!(p.coeffs().clone(), BTreeMap::from([(vec![0, 0], 2)]));

        let succ = MfalTable::from_fn(3, 1, |v| (v[0] + 1) % 3);
        let p = interpolate_mfal(&succ, 3).unwrap();
        assert_eq!(
            p.coeffs().clone(),
            BTreeMap::from([(vec![0], 1), (vec![1], 1)])
        );
    }

    #[test]
    fn interpolation_is_exact_on_the_grid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (q, m) in [
            (2u32, 1usize),
            (2, 5),
            (3, 1),
            (3, 2),
            (3, 4),
            (5, 2),
            (5, 3),
            (7, 2),
            (11, 2),
        ] {
            let modulus = (q as u64).pow(m as u32);
            for _ in 0..4 {
                let tbl = MfalTable::from_fn(q, m, |_| rng.gen_range(0..q));
                let p = interpolate_mfal(&tbl, modulus).unwrap();
                for i in 0..modulus {
                    let vars = digits(i, q, m);
                    assert_eq!(p.eval(&vars), tbl.get(&vars) as u64, "q={q} m={m}");
                    assert!(vars.iter().all(|&e| e < q));
                }
                for exps in p.coeffs().keys() {
                    assert!(exps.iter().all(|&e| e < q));
                }
            }
        }
    }

    #[test]
    fn pack_examples() {
        let fp = poly(3, &[2, 1, 1]);
        let pp = compile(&fp, LIMIT).unwrap();
        assert_eq!(pp.weights(), &[1, 3]);
        assert_eq!(pp.eval_packed(&block(3, &[0, 1])).0, 7);

        let single =
            interpolate_mfal(&MfalTable::from_fn(5, 1, |v| (3 * v[0] + 1) % 5), 5).unwrap();
        let packed = pack(std::slice::from_ref(&single)).unwrap();
        assert_eq!(packed.base(), &single);
        assert_eq!(packed.weights(), &[1]);

        let c1 = ArithPoly::from_terms(3, 2, 9, [(vec![0, 0], 2)]).unwrap();
        let c2 = ArithPoly::from_terms(3, 2, 9, [(vec![0, 0], 2)]).unwrap();
        let packed = pack(&[c1, c2]).unwrap();
        assert_eq!(
            packed.base().coeffs().clone(),
            BTreeMap::from([(vec![0, 0], 8)])
        );
    }

    #[test]
    fn pack_rejects_mismatched_shapes() {
        let a = ArithPoly::from_terms(3, 2, 9, []).unwrap();
        let b = ArithPoly::from_terms(3, 1, 3, []).unwrap();
        assert!(pack(&[a.clone(), b]).is_err());
        assert!(pack(&[a]).is_err());
        assert!(pack(&[]).is_err());
    }

    #[test]
    fn eval_packed_examples() {
        let pp = compile(&poly(3, &[2, 1, 1]), LIMIT).unwrap();
        assert_eq!(pp.eval_packed(&block(3, &[0, 1])).0, 7);

        let zero = PackedArithPoly::from_base(ArithPoly::from_terms(3, 2, 9, []).unwrap()).unwrap();
        assert_eq!(zero.eval_packed(&block(3, &[2, 1])), (0, BigUint::zero()));

        let seven =
            PackedArithPoly::from_base(ArithPoly::from_terms(3, 2, 9, [(vec![0, 0], 7)]).unwrap())
                .unwrap();
        for b in Block::enumerate(3, 2) {
            assert_eq!(seven.eval_packed(&b), (7, BigUint::from(7u32)));
        }
    }

    #[test]
    fn unmask_examples() {
        assert_eq!(unmask(7, 0, 3, 2), Ok(1));
        assert_eq!(unmask(7, 1, 3, 2), Ok(2));
        assert_eq!(unmask(0, 1, 3, 2), Ok(0));
        assert_eq!(
            unmask(7, 2, 3, 2),
            Err(Error::DigitOutOfRange { w: 2, m: 2 })
        );
    }

    #[test]
    fn lnp_step_examples() {
        let pp = compile(&poly(3, &[2, 1, 1]), LIMIT).unwrap();
        assert_eq!(pp.lnp_step(&block(3, &[0, 1])), block(3, &[2, 1]));
        assert_eq!(pp.lnp_step(&block(3, &[0, 0])), block(3, &[0, 0]));
        assert_eq!(pp.lnp_step(&block(3, &[2, 1])), block(3, &[0, 2]));
    }

    #[test]
    fn packed_digits_equal_block_step_and_serial() {
        for (q, m) in [(2u32, 4usize), (3, 2), (3, 3), (5, 2), (7, 2), (5, 3)] {
            let fp = find_primitive(gf(q), m, LIMIT).unwrap().unwrap();
            let bm = BlockMatrix::build(&fp);
            let pp = compile(&fp, LIMIT).unwrap();
            for b in Block::enumerate(q, m) {
                let (d, raw) = pp.eval_packed(&b);
                assert!(raw <= *pp.value_bound());
                assert_eq!(BigUint::from(d), &raw % pp.modulus());
                let next = pp.lnp_step(&b);
                assert_eq!(next, bm.step(&b).unwrap());
                assert_eq!(
                    next.emission_order().collect::<Vec<_>>(),
                    serial_next(&fp, &b)
                );
            }
        }
    }
}
