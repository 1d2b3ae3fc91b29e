//! Sequence generation through any of the four execution paths of an
//! [`Artifact`]. All paths emit the same sequence: the seed, lowest index
//! first, followed by everything the recurrence produces after it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::artifact::Artifact;
use crate::block_parallel::Block;
use crate::gfq::Elem;
use crate::lfsr_serial::{generate as serial_generate, LfsrState};
use crate::rns_guard::{guarded_step, CorrectionPolicy, GuardStatus};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Serial,
    Block,
    Lnp,
    GuardedRns,
}

impl Backend {
    pub const ALL: [Backend; 4] = [
        Backend::Serial,
        Backend::Block,
        Backend::Lnp,
        Backend::GuardedRns,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Serial => "serial",
            Backend::Block => "block",
            Backend::Lnp => "lnp",
            Backend::GuardedRns => "guarded-rns",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Backend::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                format!("unknown backend {s:?} (expected serial, block, lnp or guarded-rns)")
            })
    }
}

type StepFn<'a> = dyn Fn(&Block) -> Result<Block> + 'a;

/// The first `n` elements from `seed` (highest index first) via `backend`.
///
/// A guard alarm on the fault-free `guarded-rns` path is reported as
/// [`Error::Soundness`].
pub fn generate(
    artifact: &Artifact,
    backend: Backend,
    seed: &Block,
    n: usize,
) -> Result<Vec<Elem>> {
    let m = artifact.m();
    if seed.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "seed has {} elements, register has {m}",
            seed.len()
        )));
    }
    let step: Box<StepFn> = match backend {
        Backend::Serial => {
            return Ok(serial_generate(
                &LfsrState::from(seed.clone()),
                &artifact.fp,
                n,
            ));
        }
        Backend::Block => Box::new(|b| artifact.block().step(b)),
        Backend::Lnp => Box::new(|b| Ok(artifact.packed.lnp_step(b))),
        Backend::GuardedRns => Box::new(|b| {
            let (next, status) = guarded_step(
                b,
                &artifact.packed,
                &artifact.channels,
                &artifact.rns,
                CorrectionPolicy::DetectOnly,
            );
            match status {
                GuardStatus::Ok => Ok(next),
                other => Err(Error::Soundness(format!(
                    "residue guard reported {other:?} at state {:?} with no fault injected",
                    b.elems()
                ))),
            }
        }),
    };
    let mut out: Vec<Elem> = Vec::with_capacity(n);
    let mut cur = seed.clone();
    out.extend(cur.emission_order().take(n));
    while out.len() < n {
        cur = step(&cur)?;
        let need = n - out.len();
        out.extend(cur.emission_order().take(need));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backends_agree_from_every_seed() {
        for (q, k) in [
            (3u32, vec![2u64, 1, 1]),
            (3, vec![1, 0, 1]),
            (2, vec![1, 1, 0, 0, 1]),
        ] {
            let a = Artifact::derive(q, &k, 1, 1, 1 << 16).unwrap();
            for seed in Block::enumerate(q, a.m()) {
                let reference = generate(&a, Backend::Serial, &seed, 23).unwrap();
                for b in Backend::ALL {
                    assert_eq!(generate(&a, b, &seed, 23).unwrap(), reference, "{b}");
                }
            }
        }
    }

    #[test]
    fn gf3_lnp_example() {
        let a = Artifact::derive(3, &[2, 1, 1], 1, 1, 1 << 16).unwrap();
        let seed = Block::new(&a.field(), &[0, 1]).unwrap();
        assert_eq!(
            generate(&a, Backend::Lnp, &seed, 8).unwrap(),
            vec![1, 0, 1, 2, 2, 0, 2, 1]
        );
        assert!(generate(&a, Backend::GuardedRns, &seed, 0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn rejects_wrong_seed_length() {
        let a = Artifact::derive(3, &[2, 1, 1], 1, 1, 1 << 16).unwrap();
        let seed = Block::new(&a.field(), &[0, 1, 1]).unwrap();
        assert!(generate(&a, Backend::Block, &seed, 4).is_err());
    }

    #[test]
    fn parse_names() {
        for b in Backend::ALL {
            assert_eq!(b.name().parse::<Backend>(), Ok(b));
        }
        assert!("fast".parse::<Backend>().is_err());
    }
}
