//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain numbers and comma-separated lists and returns a
//! JSON string, `{"error": "..."}` on bad input. The `*_json` functions are
//! ordinary Rust and are what the native tests exercise.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use qprs::artifact::Artifact;
use qprs::backend::{generate, Backend};
use qprs::block_parallel::Block;
use qprs::fault_lab::{
    classify_modification, inject, AlarmKind, ExecutorConfig, FaultModel, FaultSpec, FaultTarget,
    Pipeline, Timing,
};
use qprs::gfq::Elem;
use qprs::lfsr_serial::period_with_limit;
use qprs::rns_guard::{crt_reconstruct, CorrectionPolicy};

/// Keeps the page responsive.
const DEMO_LIMIT: u64 = 1 << 16;
const MAX_ELEMS: usize = 100_000;

fn parse_list(s: &str) -> Result<Vec<u64>, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u64>().map_err(|_| format!("not a number: {t:?}")))
        .collect()
}

fn render(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn artifact(q: u32, poly: &str, extras: usize) -> Result<Artifact, String> {
    let k = parse_list(poly)?;
    Artifact::derive(q, &k, 1, extras, DEMO_LIMIT).map_err(|e| e.to_string())
}

fn seed_block(a: &Artifact, seed: &str) -> Result<Block, String> {
    let s = parse_list(seed)?;
    if s.len() != a.m() {
        return Err(format!("seed needs {} elements, got {}", a.m(), s.len()));
    }
    Block::new(&a.field(), &s).map_err(|e| e.to_string())
}

/// `n` elements of the sequence via `backend`, with the period, primitivity
/// and the block-step matrix.
pub fn sequence_json(q: u32, poly: &str, seed: &str, n: usize, backend: &str) -> String {
    render((|| {
        if n > MAX_ELEMS {
            return Err(format!("at most {MAX_ELEMS} elements"));
        }
        let backend: Backend = backend.parse()?;
        let a = artifact(q, poly, 1)?;
        let seed = seed_block(&a, seed)?;
        let seq = generate(&a, backend, &seed, n).map_err(|e| e.to_string())?;
        let period = period_with_limit(&a.fp, DEMO_LIMIT).map_err(|e| e.to_string())?;
        Ok(json!({
            "q": q,
            "m": a.m(),
            "sequence": seq,
            "period": period,
            "full_period": (q as u64).pow(a.m() as u32) - 1,
            "primitive": a.primitive,
            "g_inf": a.block().g_inf().to_rows(),
        }))
    })())
}

/// One guarded step from `seed` with residue channel `channel` shifted by
/// `delta`: clean and faulty codewords, the reconstruction and the verdict.
pub fn rns_fault_json(
    q: u32,
    poly: &str,
    seed: &str,
    extras: usize,
    channel: usize,
    delta: u64,
    project: bool,
) -> String {
    render((|| {
        let a = artifact(q, poly, extras)?;
        let seed = seed_block(&a, seed)?;
        let policy = if project {
            CorrectionPolicy::Project
        } else {
            CorrectionPolicy::DetectOnly
        };
        let spec = FaultSpec {
            target: FaultTarget::ResidueChannel,
            model: FaultModel::AddDelta { delta },
            location: channel,
            timing: Timing::AtStep { step: 0 },
        };
        let exec = ExecutorConfig::new(Pipeline::Rns).with_correction(policy);
        let trace = inject(&a, exec, spec, 0)
            .and_then(|f| f.run(&seed, 1))
            .map_err(|e| e.to_string())?;
        let raw = a.packed.eval_packed(&seed).1;
        let clean = a.rns.encode(&raw);
        let faulty = match trace.evidence.first() {
            Some(qprs::fault_lab::Evidence::Codeword { codeword, .. }) => codeword.clone(),
            _ => return Err("no codeword recorded".into()),
        };
        let u_star = crt_reconstruct(&faulty, &a.rns);
        let status = match trace.alarms.first().map(|al| al.kind) {
            None => "ok",
            Some(AlarmKind::Detected) => "detected",
            Some(AlarmKind::Corrected) => "corrected",
            Some(AlarmKind::Ambiguous) => "ambiguous",
        };
        Ok(json!({
            "moduli": a.rns.moduli(),
            "eta": a.rns.eta(),
            "s_eta": a.rns.s_eta().to_string(),
            "s_psi": a.rns.s_psi().to_string(),
            "raw": raw.to_string(),
            "clean": clean.residues,
            "faulty": faulty.residues,
            "u_star": u_star.to_string(),
            "status": status,
            "output": trace.output,
            "expected": trace.expected,
        }))
    })())
}

/// Modification class of `observed` against `reference`.
pub fn classify_json(reference: &str, observed: &str) -> String {
    render((|| {
        let r: Vec<Elem> = parse_list(reference)?
            .into_iter()
            .map(|x| x as Elem)
            .collect();
        let o: Vec<Elem> = parse_list(observed)?
            .into_iter()
            .map(|x| x as Elem)
            .collect();
        Ok(json!({ "class": classify_modification(&r, &o).name() }))
    })())
}

#[wasm_bindgen]
pub fn sequence(q: u32, poly: &str, seed: &str, n: usize, backend: &str) -> String {
    sequence_json(q, poly, seed, n, backend)
}

#[wasm_bindgen]
pub fn rns_fault(
    q: u32,
    poly: &str,
    seed: &str,
    extras: usize,
    channel: usize,
    delta: u64,
    project: bool,
) -> String {
    rns_fault_json(q, poly, seed, extras, channel, delta, project)
}

#[wasm_bindgen]
pub fn classify(reference: &str, observed: &str) -> String {
    classify_json(reference, observed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn sequence_gf3() {
        let v = parse(sequence_json(3, "2,1,1", "0,1", 8, "lnp"));
        assert_eq!(v["sequence"], json!([1, 0, 1, 2, 2, 0, 2, 1]));
        assert_eq!(v["period"], 8);
        assert_eq!(v["primitive"], true);
        assert_eq!(v["g_inf"], json!([[2, 2], [2, 1]]));
    }

    #[test]
    fn sequence_errors() {
        for v in [
            sequence_json(4, "1,1,1", "0,1", 8, "serial"),
            sequence_json(3, "2,1,1", "0,1,2", 8, "serial"),
            sequence_json(3, "2,x,1", "0,1", 8, "serial"),
            sequence_json(3, "2,1,1", "0,1", 8, "warp"),
        ] {
            assert!(parse(v)["error"].is_string());
        }
    }

    #[test]
    fn rns_fault_detect_and_correct() {
        let v = parse(rns_fault_json(3, "2,1,1", "0,1", 1, 4, 3, false));
        assert_eq!(v["status"], "detected");
        assert_eq!(v["moduli"], json!([2, 3, 5, 7, 11]));
        let u: u64 = v["u_star"].as_str().unwrap().parse().unwrap();
        assert!(u >= 210);
        let v = parse(rns_fault_json(3, "2,1,1", "0,1", 2, 1, 1, true));
        assert_eq!(v["status"], "corrected");
        assert_eq!(v["output"], v["expected"]);
        assert!(parse(rns_fault_json(3, "2,1,1", "0,1", 1, 9, 1, false))["error"].is_string());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            parse(classify_json("1,0,1,2", "1,0,2,2"))["class"],
            "element-change"
        );
        assert_eq!(
            parse(classify_json("1,0,1,2", "1,0,1,1,2"))["class"],
            "insertion"
        );
        assert_eq!(
            parse(classify_json("1 0 1 2", "2 0 1 1"))["class"],
            "reordering"
        );
    }
}
