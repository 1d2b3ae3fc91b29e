//! Fault injection against every backend and guard, campaign driver and
//! detection report.
//!
//! A [`FaultSpec`] names one internal value (a register cell, a residue
//! channel, a packed or per-channel polynomial coefficient, a coded block
//! symbol or an output element), how it is corrupted and when. [`inject`]
//! binds a spec to an artifact and pipeline; the resulting
//! [`FaultyExecutor`] runs block by block and records every fault event and
//! guard alarm in a [`Trace`]. [`run_campaign`] draws or enumerates specs,
//! runs them on the rayon pool and aggregates a [`DetectionReport`].

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith_poly::{block_vars, decode_block, digits, eval_terms_mod, Exponents};
use crate::artifact::Artifact;
use crate::block_parallel::Block;
use crate::gfq::Elem;
use crate::lfsr_serial::{generate as serial_generate, LfsrState};
use crate::linear_code_guard::CodedBlock;
use crate::rns_guard::{
    crt_solve, guard_codeword, Correction, CorrectionPolicy, GuardStatus, RnsCodeword,
};
use crate::{check_limit, Error, Result};

pub const REPORT_VERSION: &str = "qprs-report/1";

/// Largest working range checked by exhaustive search when re-verifying a
/// miss; above it the information channels are solved directly.
const BRUTE_FORCE_RANGE: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultTarget {
    RegisterCell,
    ResidueChannel,
    PolyCoefficient,
    LinearBlockSymbol,
    OutputStream,
}

impl FaultTarget {
    pub const ALL: [FaultTarget; 5] = [
        FaultTarget::RegisterCell,
        FaultTarget::ResidueChannel,
        FaultTarget::PolyCoefficient,
        FaultTarget::LinearBlockSymbol,
        FaultTarget::OutputStream,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FaultTarget::RegisterCell => "register-cell",
            FaultTarget::ResidueChannel => "residue-channel",
            FaultTarget::PolyCoefficient => "poly-coefficient",
            FaultTarget::LinearBlockSymbol => "linear-block-symbol",
            FaultTarget::OutputStream => "output-stream",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FaultModel {
    SetTo { value: u64 },
    AddDelta { delta: u64 },
}

impl FaultModel {
    fn apply(self, x: u64, modulus: u64) -> u64 {
        match self {
            FaultModel::SetTo { value } => value,
            FaultModel::AddDelta { delta } => {
                ((x as u128 + delta as u128) % modulus as u128) as u64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Timing {
    /// Once, at block step `step` (0-based).
    AtStep { step: u64 },
    /// At every step independently with probability `rho`.
    EveryStep { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub target: FaultTarget,
    pub model: FaultModel,
    /// Cell, channel, slot or symbol index; see [`location_count`].
    pub location: usize,
    pub timing: Timing,
}

/// What a faulty executor runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// One element per step through the register.
    Serial,
    /// Companion-matrix block step.
    Block,
    /// Packed polynomial, single modulus.
    Lnp,
    /// Block step with check symbols and syndrome test.
    LinearCode,
    /// Packed polynomial in residue channels with CRT range check.
    Rns,
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [
        Pipeline::Serial,
        Pipeline::Block,
        Pipeline::Lnp,
        Pipeline::LinearCode,
        Pipeline::Rns,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Serial => "serial",
            Pipeline::Block => "block",
            Pipeline::Lnp => "lnp",
            Pipeline::LinearCode => "linear-code",
            Pipeline::Rns => "rns",
        }
    }

    pub fn supports(self, target: FaultTarget) -> bool {
        use FaultTarget::*;
        match target {
            RegisterCell | OutputStream => true,
            ResidueChannel => self == Pipeline::Rns,
            PolyCoefficient => matches!(self, Pipeline::Lnp | Pipeline::Rns),
            LinearBlockSymbol => self == Pipeline::LinearCode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutorConfig {
    pub pipeline: Pipeline,
    #[serde(default)]
    pub correction: CorrectionPolicy,
}

impl ExecutorConfig {
    pub fn new(pipeline: Pipeline) -> Self {
        Self {
            pipeline,
            correction: CorrectionPolicy::DetectOnly,
        }
    }

    pub fn with_correction(mut self, correction: CorrectionPolicy) -> Self {
        self.correction = correction;
        self
    }
}

fn incompatible(target: FaultTarget, pipeline: Pipeline) -> Error {
    Error::IncompatibleFault {
        target: target.name(),
        pipeline: pipeline.name(),
    }
}

fn slots(a: &Artifact) -> usize {
    a.packed.modulus() as usize
}

/// Number of valid locations for `target` on `pipeline`.
///
/// Register cells and output positions are block positions (highest index
/// first; the serial pipeline has a single output position). Polynomial
/// coefficient slots are exponent tuples read as base-q numbers, and on the
/// residue pipeline slot `s` of channel `d` is location `d * q^m + s`.
/// Coded block symbols are the m information symbols followed by the checks.
pub fn location_count(a: &Artifact, pipeline: Pipeline, target: FaultTarget) -> Result<usize> {
    if !pipeline.supports(target) {
        return Err(incompatible(target, pipeline));
    }
    let m = a.m();
    Ok(match target {
        FaultTarget::RegisterCell => m,
        FaultTarget::ResidueChannel => a.rns.psi(),
        FaultTarget::PolyCoefficient if pipeline == Pipeline::Rns => a.rns.psi() * slots(a),
        FaultTarget::PolyCoefficient => slots(a),
        FaultTarget::LinearBlockSymbol => m + a.code.check().r(),
        FaultTarget::OutputStream if pipeline == Pipeline::Serial => 1,
        FaultTarget::OutputStream => m,
    })
}

/// The modulus the value at `location` lives in.
fn location_modulus(a: &Artifact, pipeline: Pipeline, target: FaultTarget, location: usize) -> u64 {
    match target {
        FaultTarget::ResidueChannel => a.rns.moduli()[location],
        FaultTarget::PolyCoefficient if pipeline == Pipeline::Rns => {
            a.rns.moduli()[location / slots(a)]
        }
        FaultTarget::PolyCoefficient => a.packed.modulus(),
        _ => a.q() as u64,
    }
}

/// Checks `spec` against the artifact and pipeline.
pub fn validate(a: &Artifact, pipeline: Pipeline, spec: &FaultSpec) -> Result<()> {
    let count = location_count(a, pipeline, spec.target)?;
    if spec.location >= count {
        return Err(Error::InvalidFault(format!(
            "{} location {} out of range (0..{count})",
            spec.target.name(),
            spec.location
        )));
    }
    let modulus = location_modulus(a, pipeline, spec.target, spec.location);
    match spec.model {
        FaultModel::AddDelta { delta } if delta == 0 || delta >= modulus => {
            return Err(Error::InvalidFault(format!(
                "add-delta magnitude must lie in 1..{modulus}, got {delta}"
            )));
        }
        FaultModel::SetTo { value } if value >= modulus => {
            return Err(Error::InvalidFault(format!(
                "set-to value must lie in 0..{modulus}, got {value}"
            )));
        }
        _ => {}
    }
    if let Timing::EveryStep { rho } = spec.timing {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidFault(format!(
                "rho must lie in [0, 1], got {rho}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlarmKind {
    Detected,
    Corrected,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alarm {
    pub step: u64,
    pub kind: AlarmKind,
}

/// What a guard accepted at one step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evidence {
    Codeword { step: u64, codeword: RnsCodeword },
    Coded { step: u64, block: CodedBlock },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub output: Vec<Elem>,
    /// Fault-free output for the same seed and step count.
    pub expected: Vec<Elem>,
    /// Steps at which the fault fired.
    pub fault_steps: Vec<u64>,
    pub alarms: Vec<Alarm>,
    /// A guard stopped the run.
    pub halted: bool,
    pub evidence: Vec<Evidence>,
}

/// A pipeline over one artifact with one fault armed.
#[derive(Debug, Clone)]
pub struct FaultyExecutor<'a> {
    artifact: &'a Artifact,
    config: ExecutorConfig,
    spec: FaultSpec,
    rng: ChaCha8Rng,
}

/// Arms `spec` on `config.pipeline`. Randomised timing draws from a stream
/// seeded by `trial_seed` only.
pub fn inject(
    artifact: &Artifact,
    config: ExecutorConfig,
    spec: FaultSpec,
    trial_seed: u64,
) -> Result<FaultyExecutor<'_>> {
    validate(artifact, config.pipeline, &spec)?;
    Ok(FaultyExecutor {
        artifact,
        config,
        spec,
        rng: ChaCha8Rng::seed_from_u64(trial_seed),
    })
}

impl FaultyExecutor<'_> {
    pub fn spec(&self) -> &FaultSpec {
        &self.spec
    }

    pub fn config(&self) -> ExecutorConfig {
        self.config
    }

    fn fires(&mut self, step: u64) -> bool {
        match self.spec.timing {
            Timing::AtStep { step: s } => s == step,
            Timing::EveryStep { rho } => self.rng.gen_bool(rho),
        }
    }

    fn corrupt(&self, x: u64) -> u64 {
        let m = location_modulus(
            self.artifact,
            self.config.pipeline,
            self.spec.target,
            self.spec.location,
        );
        self.spec.model.apply(x, m)
    }

    /// Runs `steps` steps from `seed`. The serial pipeline emits one element
    /// per step starting with the seed; block pipelines emit the m elements
    /// of each new block.
    pub fn run(mut self, seed: &Block, steps: usize) -> Result<Trace> {
        let a = self.artifact;
        let m = a.m();
        if seed.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "seed has {} elements, register has {m}",
                seed.len()
            )));
        }
        for &e in seed.elems() {
            if e >= a.q() {
                return Err(Error::OutOfRange {
                    value: e as u64,
                    modulus: a.q() as u64,
                });
            }
        }
        let mut trace = Trace {
            output: Vec::new(),
            expected: Vec::new(),
            fault_steps: Vec::new(),
            alarms: Vec::new(),
            halted: false,
            evidence: Vec::new(),
        };
        let start = LfsrState::from(seed.clone());
        if self.config.pipeline == Pipeline::Serial {
            trace.expected = serial_generate(&start, &a.fp, steps);
            let mut state = start;
            for t in 0..steps as u64 {
                let fire = self.fires(t);
                if fire {
                    trace.fault_steps.push(t);
                }
                if fire && self.spec.target == FaultTarget::RegisterCell {
                    let loc = self.spec.location;
                    let v = self.corrupt(state.cells()[loc] as u64);
                    state.cells_mut()[loc] = v as Elem;
                }
                let mut e = state.clock(&a.fp);
                if fire && self.spec.target == FaultTarget::OutputStream {
                    e = self.corrupt(e as u64) as Elem;
                }
                trace.output.push(e);
            }
            return Ok(trace);
        }

        trace.expected = serial_generate(&start, &a.fp, m * (steps + 1)).split_off(m);
        let mut state = seed.clone();
        for t in 0..steps as u64 {
            let fire = self.fires(t);
            if fire {
                trace.fault_steps.push(t);
            }
            let hit = |target| fire && self.spec.target == target;
            if hit(FaultTarget::RegisterCell) {
                let loc = self.spec.location;
                let v = self.corrupt(state.elems()[loc] as u64);
                state.elems_mut()[loc] = v as Elem;
            }
            let next = match self.config.pipeline {
                Pipeline::Serial => unreachable!("handled above"),
                Pipeline::Block => a.block().step(&state)?,
                Pipeline::Lnp if hit(FaultTarget::PolyCoefficient) => {
                    let modulus = a.packed.modulus();
                    let mut coeffs = a.packed.base().coeffs().clone();
                    self.corrupt_coeff(&mut coeffs, self.spec.location);
                    let d = eval_terms_mod(
                        coeffs.iter().map(|(e, &c)| (e.as_slice(), c)),
                        &block_vars(&state),
                        modulus,
                    );
                    decode_block(d, a.q(), m)
                }
                Pipeline::Lnp => a.packed.lnp_step(&state),
                Pipeline::LinearCode => {
                    let mut cb = a.code.encode_block(&state)?;
                    if hit(FaultTarget::LinearBlockSymbol) {
                        let pos = self.spec.location;
                        let v = self.corrupt(cb.symbol(pos) as u64);
                        cb.set_symbol(pos, v as Elem);
                    }
                    let verdict = a.code.check_block(&cb)?;
                    trace.evidence.push(Evidence::Coded {
                        step: t,
                        block: cb.clone(),
                    });
                    if verdict.is_err() {
                        trace.alarms.push(Alarm {
                            step: t,
                            kind: AlarmKind::Detected,
                        });
                        trace.halted = true;
                        break;
                    }
                    cb.info
                }
                Pipeline::Rns => {
                    let cw = self.residue_codeword(&state, fire);
                    trace.evidence.push(Evidence::Codeword {
                        step: t,
                        codeword: cw.clone(),
                    });
                    let out = guard_codeword(&cw, &a.packed, &a.rns, self.config.correction);
                    match out.status {
                        GuardStatus::Ok => {}
                        GuardStatus::Corrected => trace.alarms.push(Alarm {
                            step: t,
                            kind: AlarmKind::Corrected,
                        }),
                        GuardStatus::Detected => {
                            let kind = match out.correction {
                                Some(Correction::Ambiguous { .. }) => AlarmKind::Ambiguous,
                                _ => AlarmKind::Detected,
                            };
                            trace.alarms.push(Alarm { step: t, kind });
                            trace.halted = true;
                            break;
                        }
                    }
                    out.block
                }
            };
            let mut emitted = next.clone();
            if hit(FaultTarget::OutputStream) {
                let pos = self.spec.location;
                let v = self.corrupt(emitted.elems()[pos] as u64);
                emitted.elems_mut()[pos] = v as Elem;
            }
            trace.output.extend(emitted.emission_order());
            state = next;
        }
        Ok(trace)
    }

    /// Applies the fault to the coefficient at `slot` of `coeffs`.
    fn corrupt_coeff(&self, coeffs: &mut BTreeMap<Exponents, u64>, slot: usize) {
        let a = self.artifact;
        let exps: Exponents = digits(slot as u64, a.q(), a.m());
        let old = coeffs.get(&exps).copied().unwrap_or(0);
        let new = self.corrupt(old);
        if new == 0 {
            coeffs.remove(&exps);
        } else {
            coeffs.insert(exps, new);
        }
    }

    fn residue_codeword(&self, state: &Block, fire: bool) -> RnsCodeword {
        let a = self.artifact;
        let vars = block_vars(state);
        let n_slots = slots(a);
        let residues = a
            .rns
            .moduli()
            .iter()
            .enumerate()
            .map(|(d, &s)| {
                let coeff_hit = fire
                    && self.spec.target == FaultTarget::PolyCoefficient
                    && self.spec.location / n_slots == d;
                let mut u = if coeff_hit {
                    let mut table = a.channels.channel(d).clone();
                    self.corrupt_coeff(&mut table, self.spec.location % n_slots);
                    eval_terms_mod(table.iter().map(|(e, &c)| (e.as_slice(), c)), &vars, s)
                } else {
                    a.channels.eval_channel(d, &vars, s)
                };
                if fire
                    && self.spec.target == FaultTarget::ResidueChannel
                    && self.spec.location == d
                {
                    u = self.corrupt(u);
                }
                u
            })
            .collect();
        RnsCodeword { residues }
    }
}

/// How one trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    /// The fault never fired.
    NotInjected,
    /// Fired without any visible effect.
    Masked,
    /// Output differs from the reference and no guard raised an alarm.
    Missed,
    /// A guard raised an alarm; `latency` is the number of steps from the
    /// first fault to the first alarm.
    Detected {
        latency: u64,
        resolution: Resolution,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    /// The run was stopped.
    Halted,
    /// Every alarm was corrected and the output matches the reference.
    Corrected,
    /// Every alarm was corrected but the output is wrong.
    Miscorrected,
    /// Correction found several candidates and the run was stopped.
    Ambiguous,
}

/// Classifies a finished trace.
pub fn outcome(trace: &Trace) -> Result<Outcome> {
    let (Some(&first_fault), Some(first_alarm)) = (trace.fault_steps.first(), trace.alarms.first())
    else {
        if !trace.alarms.is_empty() {
            return Err(Error::Soundness(format!(
                "guard alarm at step {} with no fault fired",
                trace.alarms[0].step
            )));
        }
        return Ok(
            match (trace.fault_steps.is_empty(), trace.output == trace.expected) {
                (true, true) => Outcome::NotInjected,
                (true, false) => {
                    return Err(Error::Soundness(
                        "output differs from the reference with no fault fired".into(),
                    ))
                }
                (false, true) => Outcome::Masked,
                (false, false) => Outcome::Missed,
            },
        );
    };
    if first_alarm.step < first_fault {
        return Err(Error::Soundness(format!(
            "guard alarm at step {} before the first fault at step {first_fault}",
            first_alarm.step
        )));
    }
    let resolution = if trace
        .alarms
        .iter()
        .any(|al| al.kind == AlarmKind::Ambiguous)
    {
        Resolution::Ambiguous
    } else if trace.halted {
        Resolution::Halted
    } else if trace.output == trace.expected {
        Resolution::Corrected
    } else {
        Resolution::Miscorrected
    };
    Ok(Outcome::Detected {
        latency: first_alarm.step - first_fault,
        resolution,
    })
}

/// Independent re-check of a miss: every guard-accepted value really passes
/// the guard, recomputed without the artifact's stored reconstruction
/// constants, and the output really differs from the reference.
pub fn verify_miss(a: &Artifact, trace: &Trace) -> Result<()> {
    if trace.output == trace.expected {
        return Err(Error::Soundness(
            "reported miss has fault-free output".into(),
        ));
    }
    for ev in &trace.evidence {
        match ev {
            Evidence::Codeword { step, codeword } => {
                if !in_working_range(&codeword.residues, a.rns.moduli(), a.rns.eta()) {
                    return Err(Error::Soundness(format!(
                        "residue codeword {:?} at step {step} passed the guard but lies outside the working range",
                        codeword.residues
                    )));
                }
            }
            Evidence::Coded { step, block } => {
                if !zero_syndrome(a, block) {
                    return Err(Error::Soundness(format!(
                        "coded block at step {step} passed the guard with a nonzero syndrome"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Whether some `x < Π moduli[..eta]` has exactly these residues.
fn in_working_range(residues: &[u64], moduli: &[u64], eta: usize) -> bool {
    let s_eta = moduli[..eta]
        .iter()
        .try_fold(1u64, |acc, &s| acc.checked_mul(s));
    match s_eta {
        Some(s) if s <= BRUTE_FORCE_RANGE => {
            (0..s).any(|x| residues.iter().zip(moduli).all(|(&u, &md)| x % md == u))
        }
        _ => {
            let Some(x) = crt_solve(&residues[..eta], &moduli[..eta]) else {
                return false;
            };
            residues
                .iter()
                .zip(moduli)
                .skip(eta)
                .all(|(&u, &md)| &x % md == BigUint::from(u))
        }
    }
}

fn zero_syndrome(a: &Artifact, cb: &CodedBlock) -> bool {
    let q = a.q() as u64;
    let p = a.code.check().p_mat();
    (0..p.n_rows()).all(|z| {
        let sum = p
            .row(z)
            .iter()
            .zip(cb.info.elems())
            .fold(0u64, |acc, (&c, &x)| (acc + c as u64 * x as u64) % q);
        cb.checks.get(z).is_some_and(|&c| c as u64 == sum)
    })
}

/// How an observed sequence departs from its reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModificationClass {
    Identical,
    ElementChange,
    Insertion,
    Deletion,
    Reordering,
}

impl ModificationClass {
    pub fn name(self) -> &'static str {
        match self {
            ModificationClass::Identical => "identical",
            ModificationClass::ElementChange => "element-change",
            ModificationClass::Insertion => "insertion",
            ModificationClass::Deletion => "deletion",
            ModificationClass::Reordering => "reordering",
        }
    }
}

fn is_subsequence(short: &[Elem], long: &[Elem]) -> bool {
    let mut it = long.iter();
    short.iter().all(|x| it.any(|y| y == x))
}

pub fn classify_modification(reference: &[Elem], observed: &[Elem]) -> ModificationClass {
    use std::cmp::Ordering::*;
    if reference == observed {
        return ModificationClass::Identical;
    }
    match observed.len().cmp(&reference.len()) {
        Equal => {
            let (mut a, mut b) = (reference.to_vec(), observed.to_vec());
            a.sort_unstable();
            b.sort_unstable();
            if a == b {
                ModificationClass::Reordering
            } else {
                ModificationClass::ElementChange
            }
        }
        Greater if is_subsequence(reference, observed) => ModificationClass::Insertion,
        Less if is_subsequence(observed, reference) => ModificationClass::Deletion,
        _ => ModificationClass::ElementChange,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MagnitudeLaw {
    /// `add-delta` with the delta uniform over the nonzero values.
    UniformDelta,
    /// `set-to` with the value uniform over the whole range.
    UniformSet,
    FixedDelta {
        delta: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FaultDistribution {
    /// Every state, every location of `target`, every nonzero `add-delta`,
    /// fired once at `step`.
    Exhaustive {
        target: FaultTarget,
        #[serde(default)]
        step: u64,
    },
    /// Target drawn by weight, location uniform, magnitude per `magnitude`,
    /// seed state uniform over the nonzero states. Without `rho` the fault
    /// fires once at a uniform step; with it, at every step with
    /// probability `rho`.
    Random {
        weights: BTreeMap<FaultTarget, f64>,
        magnitude: MagnitudeLaw,
        #[serde(default)]
        rho: Option<f64>,
    },
}

fn default_steps() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    #[serde(flatten)]
    pub executor: ExecutorConfig,
    pub distribution: FaultDistribution,
    /// Number of random trials; ignored by exhaustive campaigns.
    #[serde(default)]
    pub trials: u64,
    /// Steps per trial.
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub trials: u64,
    /// Trials in which the fault fired at least once.
    pub injected: u64,
    /// Includes corrected, miscorrected and ambiguous.
    pub detected: u64,
    pub missed: u64,
    /// Fired but changed neither guard verdict nor output.
    pub masked: u64,
    pub corrected: u64,
    pub miscorrected: u64,
    pub ambiguous: u64,
}

impl Tally {
    fn add(&mut self, o: Outcome) {
        self.trials += 1;
        match o {
            Outcome::NotInjected => return,
            Outcome::Masked => self.masked += 1,
            Outcome::Missed => self.missed += 1,
            Outcome::Detected { resolution, .. } => {
                self.detected += 1;
                match resolution {
                    Resolution::Halted => {}
                    Resolution::Corrected => self.corrected += 1,
                    Resolution::Miscorrected => self.miscorrected += 1,
                    Resolution::Ambiguous => self.ambiguous += 1,
                }
            }
        }
        self.injected += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub version: String,
    /// SHA-256 of the artifact under test.
    pub config_digest: String,
    pub pipeline: Pipeline,
    pub correction: CorrectionPolicy,
    #[serde(flatten)]
    pub totals: Tally,
    /// Steps from first fault to first alarm, over detected trials.
    pub detection_latency: BTreeMap<u64, u64>,
    pub by_class: BTreeMap<String, Tally>,
    /// Modification class of the output for missed and miscorrected trials.
    pub modifications: BTreeMap<String, u64>,
}

impl DetectionReport {
    fn empty(a: &Artifact, exec: ExecutorConfig) -> Self {
        Self {
            version: REPORT_VERSION.into(),
            config_digest: a.digest(),
            pipeline: exec.pipeline,
            correction: exec.correction,
            totals: Tally::default(),
            detection_latency: BTreeMap::new(),
            by_class: BTreeMap::new(),
            modifications: BTreeMap::new(),
        }
    }

    fn record(&mut self, target: FaultTarget, o: Outcome, trace: &Trace) {
        self.totals.add(o);
        self.by_class
            .entry(target.name().into())
            .or_default()
            .add(o);
        match o {
            Outcome::Detected {
                latency,
                resolution,
            } => {
                *self.detection_latency.entry(latency).or_default() += 1;
                if resolution == Resolution::Miscorrected {
                    self.note_modification(trace);
                }
            }
            Outcome::Missed => self.note_modification(trace),
            _ => {}
        }
    }

    fn note_modification(&mut self, trace: &Trace) {
        let class = classify_modification(&trace.expected, &trace.output);
        *self.modifications.entry(class.name().into()).or_default() += 1;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Case {
    seed: Block,
    spec: FaultSpec,
    trial_seed: u64,
}

fn exhaustive_cases(
    a: &Artifact,
    exec: ExecutorConfig,
    target: FaultTarget,
    step: u64,
    steps: usize,
    limit: u64,
) -> Result<Vec<Case>> {
    if step >= steps as u64 {
        return Err(Error::InvalidConfig(format!(
            "fault step {step} never reached in {steps} steps"
        )));
    }
    let count = location_count(a, exec.pipeline, target)?;
    let per_state: u64 = (0..count)
        .map(|loc| location_modulus(a, exec.pipeline, target, loc) - 1)
        .sum();
    let states = check_limit(a.q(), a.m(), limit)?;
    if states.saturating_mul(per_state) > limit {
        return Err(Error::InvalidConfig(format!(
            "exhaustive campaign of {} trials exceeds the limit {limit}",
            states.saturating_mul(per_state)
        )));
    }
    let mut cases = Vec::new();
    for seed in Block::enumerate(a.q(), a.m()) {
        for location in 0..count {
            for delta in 1..location_modulus(a, exec.pipeline, target, location) {
                cases.push(Case {
                    seed: seed.clone(),
                    spec: FaultSpec {
                        target,
                        model: FaultModel::AddDelta { delta },
                        location,
                        timing: Timing::AtStep { step },
                    },
                    trial_seed: cases.len() as u64,
                });
            }
        }
    }
    Ok(cases)
}

fn random_cases(a: &Artifact, spec: &CampaignSpec) -> Result<Vec<Case>> {
    let FaultDistribution::Random {
        weights,
        magnitude,
        rho,
    } = &spec.distribution
    else {
        unreachable!("random distribution")
    };
    if spec.steps == 0 {
        return Err(Error::InvalidConfig("steps must be at least 1".into()));
    }
    if let Some(r) = rho {
        if !(0.0..=1.0).contains(r) {
            return Err(Error::InvalidConfig(format!(
                "rho must lie in [0, 1], got {r}"
            )));
        }
    }
    let mut targets = Vec::new();
    let mut ws = Vec::new();
    for (&t, &w) in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "weight of {} must be a nonnegative number",
                t.name()
            )));
        }
        if w > 0.0 {
            location_count(a, spec.executor.pipeline, t)?;
            targets.push(t);
            ws.push(w);
        }
    }
    if targets.is_empty() {
        return Err(Error::InvalidConfig("fault weights are all zero".into()));
    }
    let picker = WeightedIndex::new(&ws).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let (q, m) = (a.q(), a.m());
    let mut cases = Vec::with_capacity(spec.trials as usize);
    for i in 0..spec.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.master_seed);
        rng.set_stream(i);
        let target = targets[picker.sample(&mut rng)];
        let location = rng.gen_range(0..location_count(a, spec.executor.pipeline, target)?);
        let modulus = location_modulus(a, spec.executor.pipeline, target, location);
        let model = match *magnitude {
            MagnitudeLaw::UniformDelta => FaultModel::AddDelta {
                delta: rng.gen_range(1..modulus),
            },
            MagnitudeLaw::UniformSet => FaultModel::SetTo {
                value: rng.gen_range(0..modulus),
            },
            MagnitudeLaw::FixedDelta { delta } => FaultModel::AddDelta { delta },
        };
        let timing = match rho {
            Some(rho) => Timing::EveryStep { rho: *rho },
            None => Timing::AtStep {
                step: rng.gen_range(0..spec.steps as u64),
            },
        };
        let seed = loop {
            let elems: Vec<Elem> = (0..m).map(|_| rng.gen_range(0..q)).collect();
            if elems.iter().any(|&e| e != 0) {
                break Block::from_elems(elems);
            }
        };
        cases.push(Case {
            seed,
            spec: FaultSpec {
                target,
                model,
                location,
                timing,
            },
            trial_seed: rng.gen(),
        });
    }
    Ok(cases)
}

fn run_trial(
    a: &Artifact,
    exec: ExecutorConfig,
    case: &Case,
    steps: usize,
) -> Result<(Outcome, Trace)> {
    let trace = inject(a, exec, case.spec, case.trial_seed)?.run(&case.seed, steps)?;
    let o = outcome(&trace)?;
    if o == Outcome::Missed {
        let replay = inject(a, exec, case.spec, case.trial_seed)?.run(&case.seed, steps)?;
        if replay != trace {
            return Err(Error::Soundness(format!(
                "replay of missed fault {:?} from seed {:?} diverged",
                case.spec,
                case.seed.elems()
            )));
        }
        verify_miss(a, &replay)?;
    }
    Ok((o, trace))
}

/// Runs a campaign. Trials run concurrently; each draws from its own
/// ChaCha stream (master seed, stream = trial index), so the report does
/// not depend on scheduling. `limit` caps the number of exhaustive trials.
pub fn run_campaign(a: &Artifact, spec: &CampaignSpec, limit: u64) -> Result<DetectionReport> {
    let exec = spec.executor;
    let cases = match spec.distribution {
        FaultDistribution::Exhaustive { target, step } => {
            exhaustive_cases(a, exec, target, step, spec.steps, limit)?
        }
        FaultDistribution::Random { .. } => random_cases(a, spec)?,
    };
    let results: Vec<Result<(Outcome, Trace)>> = cases
        .par_iter()
        .map(|c| run_trial(a, exec, c, spec.steps))
        .collect();
    let mut report = DetectionReport::empty(a, exec);
    for (case, r) in cases.iter().zip(results) {
        let (o, trace) = r?;
        report.record(case.spec.target, o, &trace);
    }
    Ok(report)
}
