//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::collections::HashSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;

use qprs::arith_poly::unmask;
use qprs::artifact::Artifact;
use qprs::backend::{generate, Backend};
use qprs::block_parallel::Block;
use qprs::fault_lab::{
    run_campaign, CampaignSpec, ExecutorConfig, FaultDistribution, FaultTarget, MagnitudeLaw,
    Pipeline,
};
use qprs::gfq::PrimeField;
use qprs::lfsr_serial::{find_primitive, generate as serial, period_with_limit, LfsrState};
use qprs::linear_code_guard::CodedBlock;
use qprs::rns_guard::{
    correct_single, crt_reconstruct, range_check, Correction, CorrectionPolicy, RangeCheck,
    RnsCodeword, RnsParams,
};

const LIMIT: u64 = 1 << 20;
const CONFIGS: [(u32, usize); 5] = [(2, 4), (3, 2), (3, 3), (5, 2), (7, 2)];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn primitive_artifact(q: u32, m: usize, r: usize, extras: usize) -> Result<Artifact, String> {
    let field = PrimeField::new(q).map_err(|e| e.to_string())?;
    let fp = find_primitive(field, m, LIMIT)
        .map_err(|e| e.to_string())?
        .ok_or_else(|| format!("no primitive polynomial for q={q}, m={m}"))?;
    let k: Vec<u64> = fp.coeffs().iter().map(|&c| c as u64).collect();
    Artifact::derive(q, &k, r, extras, LIMIT).map_err(|e| e.to_string())
}

fn gf3_artifact(extras: usize) -> Result<Artifact, String> {
    Artifact::derive(3, &[2, 1, 1], 1, extras, LIMIT).map_err(|e| e.to_string())
}

fn c1_period() -> Outcome {
    let mut worst = Duration::ZERO;
    for (q, m) in CONFIGS {
        let t0 = Instant::now();
        let field = PrimeField::new(q).map_err(|e| e.to_string())?;
        let fp = find_primitive(field, m, LIMIT)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("no primitive polynomial for q={q}, m={m}"))?;
        let full = (q as u64).pow(m as u32) - 1;
        let p = period_with_limit(&fp, LIMIT).map_err(|e| e.to_string())?;
        ensure(p == full, || {
            format!("q={q} m={m}: period {p}, expected {full}")
        })?;
        let mut state = fp.unit_state();
        let mut seen = HashSet::new();
        for _ in 0..p {
            ensure(!state.is_degenerate(), || {
                format!("q={q} m={m}: zero state in orbit")
            })?;
            ensure(seen.insert(state.index(q)), || {
                format!("q={q} m={m}: state {:?} repeated", state.cells())
            })?;
            state.clock(&fp);
        }
        ensure(seen.len() as u64 == full, || {
            format!("q={q} m={m}: {} states visited", seen.len())
        })?;
        let dt = t0.elapsed();
        ensure(dt < Duration::from_secs(1), || {
            format!("q={q} m={m} took {dt:?}")
        })?;
        worst = worst.max(dt);
    }
    Ok(format!("5 configs, slowest {worst:?}"))
}

fn c2_equivalence() -> Outcome {
    let t0 = Instant::now();
    let mut total = 0;
    for (q, m) in CONFIGS {
        let a = primitive_artifact(q, m, 1, 1)?;
        let n = (q as usize).pow(m as u32) - 1 + m;
        let seed = Block::from(a.fp.unit_state());
        let reference = generate(&a, Backend::Serial, &seed, n).map_err(|e| e.to_string())?;
        for b in [Backend::Block, Backend::Lnp, Backend::GuardedRns] {
            let s = generate(&a, b, &seed, n).map_err(|e| e.to_string())?;
            ensure(s == reference, || {
                format!("q={q} m={m}: {b} differs from serial")
            })?;
        }
        total += n;
    }
    let dt = t0.elapsed();
    ensure(dt < Duration::from_secs(5), || format!("took {dt:?}"))?;
    Ok(format!("{total} elements per backend, {dt:?}"))
}

fn c3_digits() -> Outcome {
    let mut checked = 0;
    for (q, m) in [(3u32, 2usize), (3, 3)] {
        let a = primitive_artifact(q, m, 1, 1)?;
        for state in Block::enumerate(q, m) {
            let (d, _) = a.packed.eval_packed(&state);
            let next = serial(&LfsrState::from(state.clone()), &a.fp, 2 * m);
            for w in 0..m {
                let digit = unmask(d, w, q, m).map_err(|e| e.to_string())?;
                ensure(digit == next[m + w], || {
                    format!(
                        "q={q} m={m} state {:?}: digit {w} = {digit}, serial {}",
                        state.elems(),
                        next[m + w]
                    )
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} digits, 0 mismatches"))
}

fn exhaustive(
    pipeline: Pipeline,
    target: FaultTarget,
    correction: CorrectionPolicy,
) -> CampaignSpec {
    CampaignSpec {
        executor: ExecutorConfig::new(pipeline).with_correction(correction),
        distribution: FaultDistribution::Exhaustive { target, step: 0 },
        trials: 0,
        steps: 1,
        master_seed: 0,
    }
}

fn c4_rns_detection() -> Outcome {
    let t0 = Instant::now();
    let a = gf3_artifact(1)?;
    ensure(a.rns.redundant_moduli().len() == 1, || {
        "expected one redundant modulus".into()
    })?;
    let spec = exhaustive(
        Pipeline::Rns,
        FaultTarget::ResidueChannel,
        CorrectionPolicy::DetectOnly,
    );
    let r = run_campaign(&a, &spec, LIMIT).map_err(|e| e.to_string())?;
    let expected: u64 = 9 * a.rns.moduli().iter().map(|s| s - 1).sum::<u64>();
    let t = r.totals;
    ensure(t.injected == expected, || {
        format!("injected {} of {expected}", t.injected)
    })?;
    ensure(t.missed == 0 && t.detected == t.injected, || {
        format!(
            "detected {} missed {} masked {}",
            t.detected, t.missed, t.masked
        )
    })?;
    let dt = t0.elapsed();
    ensure(dt < Duration::from_secs(10), || format!("took {dt:?}"))?;
    Ok(format!(
        "{}/{} detected, missed 0, {dt:?}",
        t.detected, t.injected
    ))
}

fn c5_crt() -> Outcome {
    let p = RnsParams::new(vec![5, 7, 11], 2, BigUint::from(34u32)).map_err(|e| e.to_string())?;
    for x in 0..=34u32 {
        let x = BigUint::from(x);
        let back = crt_reconstruct(&p.encode(&x), &p);
        ensure(back == x, || format!("{x} reconstructed as {back}"))?;
        ensure(range_check(&back, &p) == RangeCheck::Ok, || {
            format!("{x} flagged")
        })?;
    }
    let bad = RnsCodeword {
        residues: vec![4, 2, 1],
    };
    let u = crt_reconstruct(&bad, &p);
    ensure(u == BigUint::from(254u32), || {
        format!("(4,2,1) reconstructed as {u}")
    })?;
    ensure(range_check(&u, &p) == RangeCheck::FaultDetected, || {
        "254 not flagged".into()
    })?;
    Ok("0..34 round-trip, (4,2,1) -> 254 flagged".into())
}

fn c6_linear_code() -> Outcome {
    let mut singles = 0;
    for (q, m, r) in [(3u32, 2usize, 1usize), (5, 3, 2)] {
        let a = primitive_artifact(q, m, r, 1)?;
        let spec = exhaustive(
            Pipeline::LinearCode,
            FaultTarget::LinearBlockSymbol,
            CorrectionPolicy::DetectOnly,
        );
        let rep = run_campaign(&a, &spec, LIMIT).map_err(|e| e.to_string())?;
        let t = rep.totals;
        let expected = (q as u64).pow(m as u32) * (m + r) as u64 * (q as u64 - 1);
        ensure(
            t.injected == expected && t.detected == expected && t.missed == 0,
            || {
                format!(
                    "q={q} m={m} r={r}: injected {} detected {} missed {}",
                    t.injected, t.detected, t.missed
                )
            },
        )?;
        singles += t.detected;
    }

    let a = primitive_artifact(5, 3, 2, 1)?;
    let q = 5u32;
    let n = a.m() + 2;
    let mut doubles = 0u64;
    for prev in Block::enumerate(q, a.m()) {
        let clean = a.code.encode_block(&prev).map_err(|e| e.to_string())?;
        for i in 0..n {
            for j in i + 1..n {
                for di in 1..q {
                    for dj in 1..q {
                        let mut cb: CodedBlock = clean.clone();
                        cb.set_symbol(i, (cb.symbol(i) + di) % q);
                        cb.set_symbol(j, (cb.symbol(j) + dj) % q);
                        let verdict = a.code.check_block(&cb).map_err(|e| e.to_string())?;
                        ensure(verdict.is_err(), || {
                            format!(
                                "weight-2 error at ({i},{j}) deltas ({di},{dj}) from {:?} passed",
                                prev.elems()
                            )
                        })?;
                        doubles += 1;
                    }
                }
            }
        }
    }
    Ok(format!(
        "{singles} single-symbol and {doubles} weight-2 errors detected"
    ))
}

fn c7_projection() -> Outcome {
    let a = gf3_artifact(2)?;
    ensure(a.rns.redundant_moduli().len() == 2, || {
        "expected two redundant moduli".into()
    })?;
    let spec = exhaustive(
        Pipeline::Rns,
        FaultTarget::ResidueChannel,
        CorrectionPolicy::Project,
    );
    let r = run_campaign(&a, &spec, LIMIT).map_err(|e| e.to_string())?;
    let t = r.totals;
    ensure(t.miscorrected == 0, || {
        format!("{} miscorrected", t.miscorrected)
    })?;
    ensure(
        t.detected == t.injected && t.corrected + t.ambiguous == t.detected,
        || {
            format!(
                "injected {} corrected {} ambiguous {} detected {}",
                t.injected, t.corrected, t.ambiguous, t.detected
            )
        },
    )?;

    // Same faults at the codeword level: a correction must recover the raw value.
    let mut direct = 0;
    for state in Block::enumerate(3, 2) {
        let raw = a.packed.eval_packed(&state).1;
        let clean = a.rns.encode(&raw);
        for (d, &s) in a.rns.moduli().iter().enumerate() {
            for delta in 1..s {
                let mut cw = clean.clone();
                cw.residues[d] = (cw.residues[d] + delta) % s;
                match correct_single(&cw, &a.rns).map_err(|e| e.to_string())? {
                    Correction::Corrected { value, .. } => ensure(value == raw, || {
                        format!(
                            "state {:?} channel {d}: corrected to {value}, raw {raw}",
                            state.elems()
                        )
                    })?,
                    Correction::Ambiguous { .. } => {}
                    Correction::Uncorrectable => {
                        return Err(format!(
                            "state {:?} channel {d} delta {delta}: uncorrectable",
                            state.elems()
                        ))
                    }
                }
                direct += 1;
            }
        }
    }
    Ok(format!(
        "{} faults: {} corrected, {} ambiguous, 0 miscorrected; {direct} codeword checks",
        t.injected, t.corrected, t.ambiguous
    ))
}

fn run_bin(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qprs"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "qprs {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })?;
    Ok(out.stdout)
}

fn c8_determinism() -> Outcome {
    let a = gf3_artifact(2)?;
    let spec = CampaignSpec {
        executor: ExecutorConfig::new(Pipeline::Rns).with_correction(CorrectionPolicy::Project),
        distribution: FaultDistribution::Random {
            weights: [
                (FaultTarget::RegisterCell, 1.0),
                (FaultTarget::ResidueChannel, 2.0),
                (FaultTarget::PolyCoefficient, 1.0),
                (FaultTarget::OutputStream, 1.0),
            ]
            .into_iter()
            .collect(),
            magnitude: MagnitudeLaw::UniformDelta,
            rho: Some(0.3),
        },
        trials: 100,
        steps: 8,
        master_seed: 2024,
    };
    let r1 = run_campaign(&a, &spec, LIMIT)
        .map_err(|e| e.to_string())?
        .to_json();
    let r2 = run_campaign(&a, &spec, LIMIT)
        .map_err(|e| e.to_string())?
        .to_json();
    ensure(r1 == r2, || "library campaign reports differ".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    run_bin(&[
        "derive",
        "--q",
        "3",
        "--poly",
        "2,1,1",
        "--r",
        "1",
        "--rns-extras",
        "2",
        "--out",
        &p("a.json"),
    ])?;
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"artifact":"a.json","pipeline":"rns","correction":"project","trials":100,"steps":8,"master_seed":7,
            "distribution":{"kind":"random","weights":{"residue-channel":1,"register-cell":1},"magnitude":{"kind":"uniform-set"},"rho":0.25}}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for out in ["r1.json", "r2.json"] {
        run_bin(&["campaign", "--config", &p("c.json"), "--out", &p(out)])?;
        reports.push(std::fs::read(Path::new(&p(out))).map_err(|e| e.to_string())?);
    }
    ensure(reports[0] == reports[1], || {
        "CLI campaign reports differ".into()
    })?;

    let mut outputs = Vec::new();
    for backend in ["serial", "serial", "block", "lnp", "guarded-rns"] {
        for format in ["text", "bin16"] {
            let o = run_bin(&[
                "gen",
                "--artifact",
                &p("a.json"),
                "--backend",
                backend,
                "--seed",
                "0,1",
                "-n",
                "40",
                "--format",
                format,
            ])?;
            outputs.push((format, o));
        }
    }
    for (f, o) in &outputs {
        let first = &outputs.iter().find(|(g, _)| g == f).expect("present").1;
        ensure(o == first, || {
            format!("{f} output differs between runs or backends")
        })?;
    }
    Ok("library and CLI reports byte-identical; gen output byte-identical".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 period q^m-1, each nonzero state once", c1_period),
        (
            "2 serial/block/lnp equivalence over a full period",
            c2_equivalence,
        ),
        ("3 packed digit recovery", c3_digits),
        ("4 rns single-channel fault detection", c4_rns_detection),
        ("5 crt round-trip (5,7,11)", c5_crt),
        ("6 linear-code error detection", c6_linear_code),
        ("7 projection correction", c7_projection),
        ("8 determinism", c8_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(msg) => println!("PASS  criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name}: {msg}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
