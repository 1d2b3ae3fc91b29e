//! Redundant residue-number-system guard over packed-polynomial evaluation.
//!
//! The packed polynomial is evaluated independently in ψ narrow channels, one
//! per modulus `s_d`, each channel reducing after every operation. The CRT
//! joins the channel values into `U* ∈ [0, S_ψ)`. Honest evaluation always
//! lands in the working range `[0, S_η)`, since `S_η` exceeds the polynomial's
//! value bound; a single corrupted channel always lands outside it as long as
//! the redundant moduli multiply to at least `s_η`.
//!
//! Reconstruction uses the textbook form
//!
//! ```text
//! U* = | Σ_d S_{d,ψ} · μ_{d,ψ} · U^(d) |_{S_ψ},   S_{d,ψ} = S_ψ / s_d,   μ_{d,ψ} = |S_{d,ψ}^{-1}|_{s_d}
//! ```

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith_poly::{block_vars, decode_block, eval_terms_mod, Exponents, PackedArithPoly};
use crate::block_parallel::Block;
use crate::gfq::{inv_mod, is_prime};
use crate::{Error, Result};

/// CRT constants for one modulus: `S_{d,ψ} = S_ψ / s_d` and its inverse mod `s_d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrtConstant {
    pub cofactor: BigUint,
    pub inverse: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RnsParams {
    moduli: Vec<u64>,
    eta: usize,
    s_eta: BigUint,
    s_psi: BigUint,
    crt: Vec<CrtConstant>,
    bound: BigUint,
}

impl RnsParams {
    /// Validates the moduli (strictly ascending, pairwise coprime), the
    /// working range (`S_η > bound`) and the single-fault detection condition
    /// (`Π redundant >= s_η`), then derives the CRT constants.
    pub fn new(moduli: Vec<u64>, eta: usize, bound: BigUint) -> Result<Self> {
        if eta == 0 || eta >= moduli.len() {
            return Err(Error::InvalidModuli(format!(
                "need at least one information and one redundant modulus, got eta={eta} of {}",
                moduli.len()
            )));
        }
        if moduli.iter().any(|&s| s < 2) {
            return Err(Error::InvalidModuli("moduli must be at least 2".into()));
        }
        if moduli.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidModuli(format!(
                "moduli {moduli:?} not strictly ascending"
            )));
        }
        for (i, &a) in moduli.iter().enumerate() {
            for &b in &moduli[i + 1..] {
                if a.gcd(&b) != 1 {
                    return Err(Error::InvalidModuli(format!("{a} and {b} share a factor")));
                }
            }
        }
        let s_eta: BigUint = moduli[..eta].iter().map(|&s| BigUint::from(s)).product();
        if s_eta <= bound {
            return Err(Error::InvalidModuli(format!(
                "working range {s_eta} does not exceed value bound {bound}"
            )));
        }
        let redundant: BigUint = moduli[eta..].iter().map(|&s| BigUint::from(s)).product();
        if redundant < BigUint::from(moduli[eta - 1]) {
            return Err(Error::InvalidModuli(format!(
                "redundant product {redundant} below largest information modulus {}",
                moduli[eta - 1]
            )));
        }
        let (s_psi, crt) = crt_constants(&moduli);
        Ok(Self {
            moduli,
            eta,
            s_eta,
            s_psi,
            crt,
            bound,
        })
    }

    /// Wraps stored values without checking them against each other; see
    /// [`RnsParams::consistency`].
    pub fn from_parts(
        moduli: Vec<u64>,
        eta: usize,
        s_eta: BigUint,
        s_psi: BigUint,
        crt: Vec<CrtConstant>,
        bound: BigUint,
    ) -> Result<Self> {
        if crt.len() != moduli.len() || eta == 0 || eta >= moduli.len() {
            return Err(Error::InvalidModuli(format!(
                "{} moduli, {} CRT constants, eta={eta}",
                moduli.len(),
                crt.len()
            )));
        }
        if moduli.iter().any(|&s| s < 2) {
            return Err(Error::InvalidModuli("moduli must be at least 2".into()));
        }
        Ok(Self {
            moduli,
            eta,
            s_eta,
            s_psi,
            crt,
            bound,
        })
    }

    /// Re-derives everything from the moduli and bound and compares with the
    /// stored values.
    pub fn consistency(&self) -> Result<()> {
        let fresh = Self::new(self.moduli.clone(), self.eta, self.bound.clone())?;
        if fresh != *self {
            return Err(Error::InvalidModuli(
                "stored ranges or CRT constants disagree with the moduli".into(),
            ));
        }
        Ok(())
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    /// Number of information moduli η.
    pub fn eta(&self) -> usize {
        self.eta
    }

    /// Total number of moduli ψ.
    pub fn psi(&self) -> usize {
        self.moduli.len()
    }

    pub fn info_moduli(&self) -> &[u64] {
        &self.moduli[..self.eta]
    }

    pub fn redundant_moduli(&self) -> &[u64] {
        &self.moduli[self.eta..]
    }

    /// Working range `S_η`.
    pub fn s_eta(&self) -> &BigUint {
        &self.s_eta
    }

    /// Full range `S_ψ`.
    pub fn s_psi(&self) -> &BigUint {
        &self.s_psi
    }

    pub fn crt(&self) -> &[CrtConstant] {
        &self.crt
    }

    pub fn bound(&self) -> &BigUint {
        &self.bound
    }

    /// Residues of `x` in every channel.
    pub fn encode(&self, x: &BigUint) -> RnsCodeword {
        RnsCodeword {
            residues: self.moduli.iter().map(|&s| residue(x, s)).collect(),
        }
    }
}

fn residue(x: &BigUint, s: u64) -> u64 {
    (x % s).to_u64().expect("reduced below a u64 modulus")
}

fn crt_constants(moduli: &[u64]) -> (BigUint, Vec<CrtConstant>) {
    let s_psi: BigUint = moduli.iter().map(|&s| BigUint::from(s)).product();
    let crt = moduli
        .iter()
        .map(|&s| {
            let cofactor = &s_psi / s;
            let inverse = inv_mod(residue(&cofactor, s), s).expect("moduli are pairwise coprime");
            CrtConstant { cofactor, inverse }
        })
        .collect();
    (s_psi, crt)
}

/// Information moduli: the shortest run of consecutive primes from 2 whose
/// product exceeds `bound`. Redundant moduli: the next `r_extra` primes.
pub fn choose_moduli(bound: &BigUint, r_extra: usize) -> Result<RnsParams> {
    if r_extra == 0 {
        return Err(Error::InvalidModuli(
            "need at least one redundant modulus".into(),
        ));
    }
    let mut primes = (2u64..).filter(|&n| is_prime(n));
    let mut moduli = Vec::new();
    let mut product = BigUint::one();
    while product <= *bound {
        let p = primes.next().expect("primes are unbounded");
        product *= p;
        moduli.push(p);
    }
    let eta = moduli.len();
    moduli.extend(primes.take(r_extra));
    RnsParams::new(moduli, eta, bound.clone())
}

/// Channel values `U^(1), ..., U^(ψ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RnsCodeword {
    pub residues: Vec<u64>,
}

/// Per-channel coefficient tables: the packed coefficients reduced mod each
/// `s_d`. Zero residues are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelTables {
    channels: Vec<BTreeMap<Exponents, u64>>,
}

impl ChannelTables {
    pub fn from_parts(channels: Vec<BTreeMap<Exponents, u64>>) -> Self {
        let channels = channels
            .into_iter()
            .map(|mut c| {
                c.retain(|_, v| *v != 0);
                c
            })
            .collect();
        Self { channels }
    }

    pub fn channels(&self) -> &[BTreeMap<Exponents, u64>] {
        &self.channels
    }

    pub fn channel(&self, d: usize) -> &BTreeMap<Exponents, u64> {
        &self.channels[d]
    }

    /// Channel `d` evaluated at `vars`, reducing mod `s_d` throughout.
    pub fn eval_channel(&self, d: usize, vars: &[u32], modulus: u64) -> u64 {
        eval_terms_mod(
            self.channels[d].iter().map(|(e, &c)| (e.as_slice(), c)),
            vars,
            modulus,
        )
    }
}

/// Residues of every packed coefficient in every channel.
pub fn encode_coeffs(pp: &PackedArithPoly, params: &RnsParams) -> ChannelTables {
    let channels = params
        .moduli
        .iter()
        .map(|&s| {
            pp.base()
                .coeffs()
                .iter()
                .map(|(e, &v)| (e.clone(), v % s))
                .filter(|&(_, r)| r != 0)
                .collect()
        })
        .collect();
    ChannelTables { channels }
}

/// Residues of a single coefficient across the channels.
pub fn coeff_residues(value: u64, params: &RnsParams) -> Vec<u64> {
    params.moduli.iter().map(|&s| value % s).collect()
}

/// Every channel evaluated at `state`, one after another.
pub fn eval_channels(tables: &ChannelTables, state: &Block, params: &RnsParams) -> RnsCodeword {
    let vars = block_vars(state);
    RnsCodeword {
        residues: params
            .moduli
            .iter()
            .enumerate()
            .map(|(d, &s)| tables.eval_channel(d, &vars, s))
            .collect(),
    }
}

/// [`eval_channels`] with the channels fanned out on the rayon pool; CRT is
/// the join point.
pub fn eval_channels_concurrent(
    tables: &ChannelTables,
    state: &Block,
    params: &RnsParams,
) -> RnsCodeword {
    let vars = block_vars(state);
    RnsCodeword {
        residues: params
            .moduli
            .par_iter()
            .enumerate()
            .map(|(d, &s)| tables.eval_channel(d, &vars, s))
            .collect(),
    }
}

/// `U* = |Σ S_{d,ψ} μ_{d,ψ} U^(d)|_{S_ψ}` from the stored constants.
pub fn crt_reconstruct(cw: &RnsCodeword, params: &RnsParams) -> BigUint {
    let sum = cw
        .residues
        .iter()
        .zip(&params.crt)
        .fold(BigUint::zero(), |acc, (&u, c)| {
            acc + &c.cofactor * (c.inverse as u128 * u as u128)
        });
    sum % &params.s_psi
}

/// CRT over an arbitrary set of pairwise coprime moduli, constants derived
/// on the spot. `None` if the moduli are not coprime.
pub fn crt_solve(residues: &[u64], moduli: &[u64]) -> Option<BigUint> {
    let total: BigUint = moduli.iter().map(|&s| BigUint::from(s)).product();
    let mut acc = BigUint::zero();
    for (&u, &s) in residues.iter().zip(moduli) {
        let cofactor = &total / s;
        let inverse = inv_mod(residue(&cofactor, s), s)?;
        acc += cofactor * (inverse as u128 * (u % s) as u128);
    }
    Some(acc % total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeCheck {
    Ok,
    FaultDetected,
}

/// `Ok` iff `U* < S_η`.
pub fn range_check(u_star: &BigUint, params: &RnsParams) -> RangeCheck {
    if u_star < &params.s_eta {
        RangeCheck::Ok
    } else {
        RangeCheck::FaultDetected
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Correction {
    /// Exactly one projection fell in the working range.
    Corrected {
        value: BigUint,
        channel: usize,
    },
    /// Several projections fell in range; `(omitted channel, value)` pairs.
    Ambiguous {
        candidates: Vec<(usize, BigUint)>,
    },
    Uncorrectable,
}

/// Projection correction of a single faulty channel: reconstruct from every
/// channel but `d`, for each `d`, and keep the projections inside `[0, S_η)`.
pub fn correct_single(cw: &RnsCodeword, params: &RnsParams) -> Result<Correction> {
    if range_check(&crt_reconstruct(cw, params), params) == RangeCheck::Ok {
        return Err(Error::NothingToCorrect);
    }
    let mut candidates = Vec::new();
    for d in 0..params.psi() {
        let (res, mods): (Vec<u64>, Vec<u64>) = cw
            .residues
            .iter()
            .zip(&params.moduli)
            .enumerate()
            .filter(|&(i, _)| i != d)
            .map(|(_, (&u, &s))| (u, s))
            .unzip();
        let value = crt_solve(&res, &mods).expect("moduli are pairwise coprime");
        if value < params.s_eta {
            candidates.push((d, value));
        }
    }
    Ok(match candidates.len() {
        0 => Correction::Uncorrectable,
        1 => {
            let (channel, value) = candidates.pop().expect("one candidate");
            Correction::Corrected { value, channel }
        }
        _ => Correction::Ambiguous { candidates },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionPolicy {
    #[default]
    DetectOnly,
    Project,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuardStatus {
    Ok,
    Detected,
    Corrected,
}

/// Everything the guard saw for one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardOutcome {
    /// Decoded from the corrected value when correction succeeded, otherwise
    /// from `U*` as reconstructed.
    pub block: Block,
    pub status: GuardStatus,
    pub u_star: BigUint,
    pub correction: Option<Correction>,
}

/// CRT, range check, optional correction, then digits of the value mod `q^m`.
pub fn guard_codeword(
    cw: &RnsCodeword,
    pp: &PackedArithPoly,
    params: &RnsParams,
    policy: CorrectionPolicy,
) -> GuardOutcome {
    let u_star = crt_reconstruct(cw, params);
    let decode = |v: &BigUint| {
        let d = residue(v, pp.modulus());
        decode_block(d, pp.q(), pp.m())
    };
    if range_check(&u_star, params) == RangeCheck::Ok {
        return GuardOutcome {
            block: decode(&u_star),
            status: GuardStatus::Ok,
            u_star,
            correction: None,
        };
    }
    let correction = match policy {
        CorrectionPolicy::DetectOnly => None,
        CorrectionPolicy::Project => {
            Some(correct_single(cw, params).expect("range check already failed"))
        }
    };
    let (block, status) = match &correction {
        Some(Correction::Corrected { value, .. }) => (decode(value), GuardStatus::Corrected),
        _ => (decode(&u_star), GuardStatus::Detected),
    };
    GuardOutcome {
        block,
        status,
        u_star,
        correction,
    }
}

/// One guarded block step: channels, CRT, range check, optional correction,
/// unmasking.
pub fn guarded_step(
    state: &Block,
    pp: &PackedArithPoly,
    tables: &ChannelTables,
    params: &RnsParams,
    policy: CorrectionPolicy,
) -> (Block, GuardStatus) {
    let cw = eval_channels(tables, state, params);
    let out = guard_codeword(&cw, pp, params, policy);
    (out.block, out.status)
}
