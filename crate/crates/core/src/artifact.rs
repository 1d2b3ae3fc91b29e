//! Everything derived from one generating polynomial, and its JSON form.
//!
//! Loading an artifact keeps the stored matrices and tables as they are;
//! [`Artifact::consistency`] recomputes them and reports any disagreement, so
//! a tampered file loads fine but fails verification.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arith_poly::{compile, ArithPoly, Exponents, PackedArithPoly};
use crate::block_parallel::BlockMatrix;
use crate::gfq::{Elem, FieldMatrix, PrimeField};
use crate::lfsr_serial::{is_primitive_with_limit, FeedbackPoly};
use crate::linear_code_guard::{build_check_matrix, CheckMatrix, LinearCode};
use crate::rns_guard::{choose_moduli, encode_coeffs, ChannelTables, CrtConstant, RnsParams};
use crate::{Error, Result};

pub const ARTIFACT_VERSION: &str = "qprs-artifact/1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub fp: FeedbackPoly,
    pub primitive: bool,
    pub code: LinearCode,
    pub packed: PackedArithPoly,
    pub rns: RnsParams,
    pub channels: ChannelTables,
}

impl Artifact {
    /// Derives every stage from `K(x)` (ascending coefficients): block matrix,
    /// linear code with `r` checks, packed polynomial, and an RNS code with
    /// `rns_extras` redundant moduli.
    pub fn derive(q: u32, coeffs: &[u64], r: usize, rns_extras: usize, limit: u64) -> Result<Self> {
        let field = PrimeField::new(q)?;
        let fp = FeedbackPoly::derive_taps(field, coeffs)?;
        let primitive = is_primitive_with_limit(&fp, limit)?;
        let block = BlockMatrix::build(&fp);
        let p_mat = build_check_matrix(field, fp.degree(), r)?;
        let code = LinearCode::build(block, p_mat)?;
        let packed = compile(&fp, limit)?;
        let rns = choose_moduli(packed.value_bound(), rns_extras)?;
        let channels = encode_coeffs(&packed, &rns);
        Ok(Self {
            fp,
            primitive,
            code,
            packed,
            rns,
            channels,
        })
    }

    pub fn field(&self) -> PrimeField {
        self.fp.field()
    }

    pub fn q(&self) -> u32 {
        self.fp.q()
    }

    pub fn m(&self) -> usize {
        self.fp.degree()
    }

    pub fn block(&self) -> &BlockMatrix {
        self.code.block()
    }

    /// Named consistency checks: every stored stage against a fresh derivation
    /// from the stored polynomial.
    pub fn consistency(&self, limit: u64) -> Vec<(&'static str, std::result::Result<(), String>)> {
        let field = self.field();
        let mut out = Vec::new();

        let g_inf = BlockMatrix::build(&self.fp);
        out.push((
            "g_inf = companion^m",
            check(
                g_inf.g_inf() == self.block().g_inf(),
                "information matrix differs",
            ),
        ));

        let c_rows = field.mat_mul(self.code.check().p_mat(), self.block().g_inf());
        out.push((
            "c_rows = p_mat * g_inf",
            match c_rows {
                Ok(c) => check(&c == self.code.check().c_rows(), "check rows differ"),
                Err(e) => Err(e.to_string()),
            },
        ));

        out.push((
            "p_mat has no zero column",
            check(
                (0..self.m()).all(|j| self.code.check().p_mat().rows().any(|row| row[j] != 0)),
                "a parity column is all zero",
            ),
        ));

        out.push((
            "packed polynomial",
            match compile(&self.fp, limit) {
                Ok(pp) => check(pp == self.packed, "packed coefficients or bound differ"),
                Err(e) => Err(e.to_string()),
            },
        ));

        out.push((
            "rns parameters",
            self.rns
                .consistency()
                .map_err(|e| e.to_string())
                .and_then(|_| {
                    check(
                        self.rns.bound() == self.packed.value_bound(),
                        "rns bound differs from packed value bound",
                    )
                }),
        ));

        out.push((
            "channel tables",
            check(
                encode_coeffs(&self.packed, &self.rns) == self.channels,
                "channel tables are not reductions of the packed coefficients",
            ),
        ));

        out.push((
            "primitive flag",
            match is_primitive_with_limit(&self.fp, limit) {
                Ok(p) => check(p == self.primitive, "recorded primitivity is wrong"),
                Err(e) => Err(e.to_string()),
            },
        ));
        out
    }

    pub fn to_file(&self) -> ArtifactFile {
        let terms = |map: &BTreeMap<Exponents, u64>| {
            map.iter()
                .map(|(e, &c)| Term {
                    exponents: e.clone(),
                    coeff: c,
                })
                .collect()
        };
        ArtifactFile {
            version: ARTIFACT_VERSION.to_string(),
            q: self.q(),
            m: self.m(),
            poly: self.fp.coeffs().to_vec(),
            taps: self.fp.taps().to_vec(),
            primitive: self.primitive,
            g_inf: self.block().g_inf().to_rows(),
            linear_code: LinearCodeFile {
                r: self.code.check().r(),
                p_mat: self.code.check().p_mat().to_rows(),
                c_rows: self.code.check().c_rows().to_rows(),
            },
            packed: PackedFile {
                modulus: self.packed.modulus(),
                value_bound: Decimal(self.packed.value_bound().clone()),
                terms: terms(self.packed.base().coeffs()),
            },
            rns: RnsFile {
                moduli: self.rns.moduli().to_vec(),
                eta: self.rns.eta(),
                s_eta: Decimal(self.rns.s_eta().clone()),
                s_psi: Decimal(self.rns.s_psi().clone()),
                crt: self
                    .rns
                    .crt()
                    .iter()
                    .map(|c| CrtFile {
                        cofactor: Decimal(c.cofactor.clone()),
                        inverse: c.inverse,
                    })
                    .collect(),
                channels: self.channels.channels().iter().map(terms).collect(),
            },
        }
    }

    pub fn from_file(file: ArtifactFile) -> Result<Self> {
        if file.version != ARTIFACT_VERSION {
            return Err(Error::Artifact(format!(
                "unrecognized version {:?}, expected {ARTIFACT_VERSION:?}",
                file.version
            )));
        }
        let field = PrimeField::new(file.q)?;
        let coeffs: Vec<u64> = file.poly.iter().map(|&k| k as u64).collect();
        let fp = FeedbackPoly::derive_taps(field, &coeffs)?;
        if fp.degree() != file.m {
            return Err(Error::Artifact(format!(
                "m = {} but polynomial has degree {}",
                file.m,
                fp.degree()
            )));
        }
        if fp.taps() != file.taps.as_slice() {
            return Err(Error::Artifact("taps do not match the polynomial".into()));
        }
        let m = file.m;
        let g_inf = FieldMatrix::from_rows(&field, &file.g_inf)?;
        if g_inf.n_rows() != m {
            return Err(Error::Artifact(format!("g_inf is not {m}x{m}")));
        }
        let block = BlockMatrix::from_matrix(field, g_inf)?;
        let lc = &file.linear_code;
        let p_mat = FieldMatrix::from_rows(&field, &lc.p_mat)?;
        let c_rows = FieldMatrix::from_rows(&field, &lc.c_rows)?;
        if p_mat.n_rows() != lc.r {
            return Err(Error::Artifact(format!(
                "r = {} but p_mat has {} rows",
                lc.r,
                p_mat.n_rows()
            )));
        }
        let code = LinearCode::from_parts(block, CheckMatrix::from_parts(p_mat, c_rows)?)?;

        let to_pairs = |terms: &[Term]| {
            terms
                .iter()
                .map(|t| (t.exponents.clone(), t.coeff))
                .collect::<Vec<_>>()
        };
        let base = ArithPoly::from_terms(
            field.q(),
            m,
            file.packed.modulus,
            to_pairs(&file.packed.terms),
        )?;
        let packed = PackedArithPoly::from_base(base)?;
        if packed.value_bound() != &file.packed.value_bound.0 {
            return Err(Error::Artifact(
                "value bound does not match the packed terms".into(),
            ));
        }

        let rf = &file.rns;
        let rns = RnsParams::from_parts(
            rf.moduli.clone(),
            rf.eta,
            rf.s_eta.0.clone(),
            rf.s_psi.0.clone(),
            rf.crt
                .iter()
                .map(|c| CrtConstant {
                    cofactor: c.cofactor.0.clone(),
                    inverse: c.inverse,
                })
                .collect(),
            packed.value_bound().clone(),
        )?;
        if rf.channels.len() != rns.psi() {
            return Err(Error::Artifact(format!(
                "{} channel tables for {} moduli",
                rf.channels.len(),
                rns.psi()
            )));
        }
        let mut channels = Vec::with_capacity(rf.channels.len());
        for (table, &s) in rf.channels.iter().zip(rns.moduli()) {
            // reuse the polynomial validation for exponent shape and coefficient range
            let poly = ArithPoly::from_terms(field.q(), m, s, to_pairs(table))?;
            channels.push(poly.coeffs().clone());
        }
        Ok(Self {
            fp,
            primitive: file.primitive,
            code,
            packed,
            rns,
            channels: ChannelTables::from_parts(channels),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("artifact serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ArtifactFile =
            serde_json::from_str(s).map_err(|e| Error::Artifact(e.to_string()))?;
        Self::from_file(file)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

fn check(ok: bool, msg: &str) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

/// On-disk artifact document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactFile {
    pub version: String,
    pub q: u32,
    pub m: usize,
    /// `k_0, ..., k_m`.
    pub poly: Vec<Elem>,
    /// `c_0, ..., c_{m-1}`.
    pub taps: Vec<Elem>,
    pub primitive: bool,
    pub g_inf: Vec<Vec<Elem>>,
    pub linear_code: LinearCodeFile,
    pub packed: PackedFile,
    pub rns: RnsFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearCodeFile {
    pub r: usize,
    pub p_mat: Vec<Vec<Elem>>,
    pub c_rows: Vec<Vec<Elem>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackedFile {
    pub modulus: u64,
    pub value_bound: Decimal,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub exponents: Exponents,
    pub coeff: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnsFile {
    pub moduli: Vec<u64>,
    pub eta: usize,
    pub s_eta: Decimal,
    pub s_psi: Decimal,
    pub crt: Vec<CrtFile>,
    pub channels: Vec<Vec<Term>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrtFile {
    pub cofactor: Decimal,
    pub inverse: u64,
}

/// Arbitrary-size unsigned integer written as a decimal string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decimal(pub BigUint);

impl Serialize for Decimal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(serde::de::Error::custom(format!(
                "not a decimal integer: {s:?}"
            )));
        }
        BigUint::from_str(&s)
            .map(Decimal)
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf3() -> Artifact {
        Artifact::derive(3, &[2, 1, 1], 1, 1, 1 << 16).unwrap()
    }

    #[test]
    fn derive_gf3() {
        let a = gf3();
        assert!(a.primitive);
        assert_eq!(a.block().g_inf().to_rows(), vec![vec![2, 2], vec![2, 1]]);
        assert_eq!(a.code.check().c_rows().to_rows(), vec![vec![1, 0]]);
        assert_eq!(a.rns.info_moduli(), &[2, 3, 5, 7]);
        assert_eq!(a.rns.redundant_moduli(), &[11]);
        assert!(a.consistency(1 << 16).iter().all(|(_, r)| r.is_ok()));
    }

    #[test]
    fn derive_errors() {
        assert_eq!(
            Artifact::derive(4, &[1, 1], 1, 1, 1 << 16),
            Err(Error::NotPrime(4))
        );
        assert!(
            !Artifact::derive(3, &[1, 0, 1], 1, 1, 1 << 16)
                .unwrap()
                .primitive
        );
        assert!(matches!(
            Artifact::derive(3, &[0, 1, 1], 1, 1, 1 << 16),
            Err(Error::InvalidCoefficient { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        for a in [
            gf3(),
            Artifact::derive(5, &[2, 0, 1, 1], 2, 2, 1 << 16).unwrap(),
        ] {
            let json = a.to_json();
            let back = Artifact::from_json(&json).unwrap();
            assert_eq!(back, a);
            assert_eq!(back.to_json(), json);
        }
    }

    #[test]
    fn big_integers_are_strings() {
        let v: serde_json::Value = serde_json::from_str(&gf3().to_json()).unwrap();
        assert_eq!(v["packed"]["value_bound"], "132");
        assert_eq!(v["rns"]["s_eta"], "210");
        assert_eq!(v["rns"]["s_psi"], "2310");
        assert!(v["rns"]["crt"][0]["cofactor"].is_string());
        assert_eq!(v["version"], ARTIFACT_VERSION);
    }

    #[test]
    fn tampered_ginf_fails_consistency() {
        let mut v: serde_json::Value = serde_json::from_str(&gf3().to_json()).unwrap();
        v["g_inf"][0][0] = 1.into();
        let a = Artifact::from_json(&v.to_string()).unwrap();
        let report = a.consistency(1 << 16);
        let failed: Vec<_> = report
            .iter()
            .filter(|(_, r)| r.is_err())
            .map(|(n, _)| *n)
            .collect();
        assert!(failed.contains(&"g_inf = companion^m"));
    }

    #[test]
    fn tampered_channel_fails_consistency() {
        let mut v: serde_json::Value = serde_json::from_str(&gf3().to_json()).unwrap();
        v["rns"]["channels"][2][0]["coeff"] = 4.into();
        let a = Artifact::from_json(&v.to_string()).unwrap();
        assert!(a
            .consistency(1 << 16)
            .iter()
            .any(|(n, r)| *n == "channel tables" && r.is_err()));
    }

    #[test]
    fn rejects_malformed_documents() {
        let good: serde_json::Value = serde_json::from_str(&gf3().to_json()).unwrap();
        let mut bad = good.clone();
        bad["version"] = "qprs-artifact/0".into();
        assert!(matches!(
            Artifact::from_json(&bad.to_string()),
            Err(Error::Artifact(_))
        ));
        let mut bad = good.clone();
        bad["g_inf"][1][1] = 3.into();
        assert!(Artifact::from_json(&bad.to_string()).is_err());
        let mut bad = good.clone();
        bad["rns"]["s_psi"] = "-1".into();
        assert!(Artifact::from_json(&bad.to_string()).is_err());
        let mut bad = good;
        bad["surprise"] = 1.into();
        assert!(Artifact::from_json(&bad.to_string()).is_err());
        assert!(Artifact::from_json("not json").is_err());
    }
}
