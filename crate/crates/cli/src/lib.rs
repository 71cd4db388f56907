//! Command implementations behind the `channel-forge` binary.
//!
//! Every command is a pure function from parsed inputs to a set of text
//! artifacts, so the binary only reads files, writes files and maps errors to
//! exit codes. Artifact text is exactly what the library serializers produce.

use std::fmt;

use serde_json::{json, Map, Value};

use channel_forge::applications::binomial::{
    binomial_recovery_circuit, binomial_recovery_kraus, BinomialCodeSpec, BinomialError,
};
use channel_forge::applications::cat::{cat_generator, coherent_state, rank_vs_time, CatCodeSpec};
use channel_forge::applications::corner::{corner_reference_circuit, corner_transpose_channel};
use channel_forge::applications::lindblad::{exp_channel, steady_channel};
use channel_forge::applications::stabilize::{init_channel, StabilizationTarget};
use channel_forge::channel::{channel_determinant, validate_cptp, ChannelSpec, KrausSet, Representation, ValidationReport};
use channel_forge::cqed::{decompose_circuit, reconstruct_blocks, CqedCircuit};
use channel_forge::io::{self, number};
use channel_forge::linalg::{self, r, CVector};
use channel_forge::random::{random_density_matrix, random_pure_state};
use channel_forge::sim::{apply_channel_exact, monte_carlo, povm_elements, run_instrument, DensityMatrix, RngSeed};
use channel_forge::tree::{synthesize, verify_circuit, AdaptiveCircuit, VerificationReport};
use channel_forge::Error;

/// Per-node isometry tolerance for a passing circuit.
pub const NODE_TOLERANCE: f64 = 1e-9;
/// Per-leaf operator tolerance for a passing circuit.
pub const LEAF_TOLERANCE: f64 = 1e-9;
/// Choi distance tolerance for a passing circuit.
pub const CHOI_TOLERANCE: f64 = 1e-8;
/// Block reconstruction tolerance for a cQED decomposition.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-9;
/// Recovery fidelity required of the binomial example.
pub const RECOVERY_TOLERANCE: f64 = 1e-8;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// The computation ran but a check did not pass. Exit code 1.
    Verification(String),
    /// Unreadable, malformed or inconsistent input. Exit code 2.
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::NotCptp(_)
            | Error::EmptyKrausSet
            | Error::TruncationTooSmall { .. }
            | Error::NotCompletelyPositive { .. } => CliError::Input(e.to_string()),
            _ => CliError::Verification(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// A named text file produced by a command.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub text: String,
}

impl Artifact {
    fn json(name: &str, v: &Value) -> Self {
        Self { name: name.into(), text: io::to_text(v) }
    }

    fn text(name: &str, text: String) -> Self {
        Self { name: name.into(), text }
    }
}

/// Artifacts of a command plus whether all of its checks passed.
#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub artifacts: Vec<Artifact>,
    pub verified: bool,
    /// One-line human summary.
    pub summary: String,
}

impl Bundle {
    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

pub fn parse_channel(text: &str) -> CliResult<ChannelSpec> {
    Ok(io::channel_from_json(&io::parse_text(text)?)?)
}

pub fn parse_circuit(text: &str) -> CliResult<AdaptiveCircuit> {
    Ok(io::circuit_from_json(&io::parse_text(text)?)?)
}

pub fn parse_state(text: &str) -> CliResult<DensityMatrix> {
    Ok(io::state_from_json(&io::parse_text(text)?)?)
}

pub fn validation_json(v: &ValidationReport) -> Value {
    json!({
        "passed": v.passed,
        "tolerance": number(v.tolerance),
        "completeness_residual": number(v.completeness_residual),
        "choi_min_eigenvalue": number(v.choi_min_eigenvalue),
        "choi_trace_deviation": number(v.choi_trace_deviation),
        "failures": v.failures(),
    })
}

fn require_cptp(ch: &ChannelSpec, tol: f64) -> CliResult<()> {
    let v = validate_cptp(ch, tol);
    if v.passed {
        Ok(())
    } else {
        Err(Error::NotCptp(v.failures().join(", ")).into())
    }
}

pub fn verification_json(r: &VerificationReport) -> Value {
    let per_label = |m: &std::collections::BTreeMap<_, f64>| -> Value {
        Value::Object(m.iter().map(|(l, &v)| (format!("{l}"), number(v))).collect::<Map<_, _>>())
    };
    let labels = |ls: Vec<channel_forge::BinaryLabel>| -> Value { ls.iter().map(|l| l.to_string()).collect() };
    json!({
        "passed": r.passes(NODE_TOLERANCE, LEAF_TOLERANCE, CHOI_TOLERANCE),
        "max_node_isometry": number(r.max_node_isometry()),
        "max_leaf_residual": number(r.max_leaf_residual()),
        "max_unitary_residual": number(r.max_unitary_residual()),
        "unmatched_target": number(r.unmatched_target),
        "choi_distance": number(r.choi_distance),
        "flagged_nodes": labels(r.flagged_nodes(NODE_TOLERANCE)),
        "flagged_leaves": labels(r.flagged_leaves(LEAF_TOLERANCE)),
        "node_isometry": per_label(&r.node_isometry),
        "leaf_residual": per_label(&r.leaf_residual),
        "unitary_residual": per_label(&r.unitary_residual),
    })
}

fn verification_summary(r: &VerificationReport) -> String {
    format!(
        "node isometry {:.3e}, leaf residual {:.3e}, Choi distance {:.3e}",
        r.max_node_isometry(),
        r.max_leaf_residual(),
        r.choi_distance
    )
}

/// `validate`: the CPTP report; `verified` mirrors the report.
pub fn cmd_validate(ch: &ChannelSpec, tol: f64) -> Bundle {
    let v = validate_cptp(ch, tol);
    let summary = if v.passed { "CPTP".to_string() } else { format!("not CPTP: {}", v.failures().join(", ")) };
    Bundle { artifacts: vec![Artifact::json("validation.json", &validation_json(&v))], verified: v.passed, summary }
}

/// `convert`: the channel re-expressed in representation `to`.
pub fn cmd_convert(ch: &ChannelSpec, to: &str, threshold: f64, validate: bool) -> CliResult<Bundle> {
    if validate {
        require_cptp(ch, channel_forge::channel::CP_TOLERANCE)?;
    }
    let out = ch.convert(to, threshold)?;
    let count = match &out.repr {
        Representation::Kraus(k) => format!(" with {} operators", k.len()),
        _ => String::new(),
    };
    Ok(Bundle {
        artifacts: vec![Artifact::json("channel.json", &io::channel_to_json(&out))],
        verified: true,
        summary: format!("{} -> {}{count}", ch.repr.name(), out.repr.name()),
    })
}

/// The Kraus set a channel file is synthesized from. Kraus input is used in
/// file order (leaf labels follow it) unless `minimal`. Otherwise the set is
/// reduced to a minimal one at `threshold` and renormalized, since dropping
/// small Choi eigenvalues leaves `Σ K†K` slightly short of the identity.
pub fn synthesis_target(ch: &ChannelSpec, threshold: f64, minimal: bool) -> CliResult<KrausSet> {
    Ok(match &ch.repr {
        Representation::Kraus(k) if !minimal => k.clone(),
        _ => ch.to_kraus(threshold)?.renormalized()?,
    })
}

/// Circuit and verification report for a Kraus set.
fn synthesize_bundle(k: &KrausSet, complete: bool) -> CliResult<(AdaptiveCircuit, VerificationReport, Vec<Artifact>)> {
    let mut circuit = synthesize(k)?;
    if complete {
        circuit.complete_unitaries()?;
    }
    let report = verify_circuit(&circuit, k);
    let artifacts = vec![
        Artifact::json("circuit.json", &io::circuit_to_json(&circuit)),
        Artifact::json("report.json", &verification_json(&report)),
    ];
    Ok((circuit, report, artifacts))
}

/// `synthesize`: `circuit.json` and `report.json`.
pub fn cmd_synthesize(
    ch: &ChannelSpec,
    threshold: f64,
    minimal: bool,
    complete: bool,
    validate: bool,
) -> CliResult<Bundle> {
    if validate {
        require_cptp(ch, channel_forge::channel::CP_TOLERANCE)?;
    }
    let k = synthesis_target(ch, threshold, minimal)?;
    let (circuit, report, artifacts) = synthesize_bundle(&k, complete)?;
    Ok(Bundle {
        artifacts,
        verified: report.passes(NODE_TOLERANCE, LEAF_TOLERANCE, CHOI_TOLERANCE),
        summary: format!("{} operators, depth {}: {}", k.len(), circuit.depth(), verification_summary(&report)),
    })
}

/// Largest block reconstruction error over all rounds.
pub fn reconstruction_residual(c: &AdaptiveCircuit, q: &CqedCircuit) -> f64 {
    q.rounds
        .iter()
        .map(|(label, round)| {
            let (b0, b1) = reconstruct_blocks(round);
            match c.node(label) {
                Some(n) => linalg::frobenius(&(b0 - &n.block0)) + linalg::frobenius(&(b1 - &n.block1)),
                None => f64::INFINITY,
            }
        })
        .fold(0.0, f64::max)
}

/// `decompose`: `cqed.json`; verified when every round reproduces its node.
pub fn cmd_decompose(c: &AdaptiveCircuit) -> CliResult<Bundle> {
    let q = decompose_circuit(c)?;
    let residual = reconstruction_residual(c, &q);
    let degenerate = q.degenerate_rounds().len();
    Ok(Bundle {
        artifacts: vec![Artifact::json("cqed.json", &io::cqed_to_json(&q))],
        verified: residual < RECONSTRUCTION_TOLERANCE,
        summary: format!("{} rounds ({degenerate} degenerate), reconstruction residual {residual:.3e}", q.rounds.len()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimMode {
    Exact,
    Trajectory,
    Instrument,
    Povm,
}

impl std::str::FromStr for SimMode {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "exact" => Ok(SimMode::Exact),
            "trajectory" => Ok(SimMode::Trajectory),
            "instrument" => Ok(SimMode::Instrument),
            "povm" => Ok(SimMode::Povm),
            other => Err(CliError::Input(format!("unknown mode '{other}' (exact|trajectory|instrument|povm)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub mode: SimMode,
    pub trajectories: usize,
    pub seed: u64,
    /// Number of leading outcome bits kept by instrument and POVM modes;
    /// defaults to the circuit depth.
    pub keep_bits: Option<usize>,
    /// Pure state that trajectory fidelities are reported against.
    pub target: Option<CVector>,
}

impl SimConfig {
    pub fn new(mode: SimMode) -> Self {
        Self { mode, trajectories: 100, seed: 0, keep_bits: None, target: None }
    }
}

/// Trajectory log: one JSON object per line.
pub fn trajectory_log(c: &AdaptiveCircuit, rho: &DensityMatrix, n: usize, seed: u64, target: Option<&CVector>) -> CliResult<String> {
    let mc = monte_carlo(c, rho, n, RngSeed(seed))?;
    let mut out = String::new();
    for rec in &mc.records {
        out.push_str(&io::trajectory_line(rec, target));
        out.push('\n');
    }
    Ok(out)
}

/// `simulate`: one artifact whose format depends on the mode.
pub fn cmd_simulate(c: &AdaptiveCircuit, rho: &DensityMatrix, cfg: &SimConfig) -> CliResult<Bundle> {
    if rho.dim() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), found: rho.dim(), context: "state vs circuit" }.into());
    }
    if let Some(t) = &cfg.target {
        if t.len() != c.dim() {
            return Err(Error::DimensionMismatch { expected: c.dim(), found: t.len(), context: "target vs circuit" }.into());
        }
    }
    let keep = cfg.keep_bits.unwrap_or(c.depth());
    if keep > c.depth() {
        return Err(CliError::Input(format!("--keep-bits {keep} exceeds circuit depth {}", c.depth())));
    }
    let (artifact, summary) = match cfg.mode {
        SimMode::Exact => {
            let out = apply_channel_exact(c, rho)?;
            let summary = format!("output trace {:.12}, purity {:.12}", out.trace(), out.purity());
            (Artifact::json("state.json", &io::state_to_json(&out)), summary)
        }
        SimMode::Trajectory => {
            let log = trajectory_log(c, rho, cfg.trajectories, cfg.seed, cfg.target.as_ref())?;
            (Artifact::text("trajectories.jsonl", log), format!("{} trajectories, seed {}", cfg.trajectories, cfg.seed))
        }
        SimMode::Instrument => {
            let inst = run_instrument(c, rho, keep)?;
            let outcomes: Vec<Value> = inst
                .outcomes
                .iter()
                .map(|(label, o)| {
                    let state = o.state.as_ref().map(io::state_to_json).unwrap_or(Value::Null);
                    json!({"bits": label.to_string(), "p": number(o.probability), "state": state})
                })
                .collect();
            let v = json!({"keep_bits": keep, "outcomes": outcomes});
            (Artifact::json("instrument.json", &v), format!("{} outcomes over {keep} bits", inst.outcomes.len()))
        }
        SimMode::Povm => {
            let pis = povm_elements(c, keep)?;
            let outcomes: Vec<Value> = pis
                .iter()
                .map(|(label, pi)| {
                    let p = (pi * rho.matrix()).trace().re;
                    json!({"bits": label.to_string(), "p": number(p), "element": io::matrix_to_json(pi)})
                })
                .collect();
            let v = json!({"keep_bits": keep, "outcomes": outcomes});
            (Artifact::json("povm.json", &v), format!("{} elements over {keep} bits", pis.len()))
        }
    };
    Ok(Bundle { artifacts: vec![artifact], verified: true, summary })
}

/// Parameters shared by the `example` bundles.
#[derive(Clone, Debug, PartialEq)]
pub struct ExampleConfig {
    pub alpha: Option<f64>,
    pub n_c: Option<usize>,
    /// Rank-table time grid; the example's own grid when `None`.
    pub times: Option<Vec<f64>>,
    pub seed: u64,
    pub trajectories: Option<usize>,
    pub threshold: f64,
    /// Stabilization target for `init`; a seeded random qutrit state otherwise.
    pub state: Option<DensityMatrix>,
}

impl Default for ExampleConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            n_c: None,
            times: None,
            seed: 0,
            trajectories: None,
            threshold: channel_forge::channel::DEFAULT_THRESHOLD,
            state: None,
        }
    }
}

pub const CAT2_TIMES: [f64; 10] = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 1e3];
pub const CAT4_TIMES: [f64; 9] = [0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0, 10.0, 100.0];

pub const EXAMPLES: [&str; 5] = ["cat2", "cat4", "binomial", "corner", "init"];

/// `example`: a self-contained reproduction bundle.
pub fn cmd_example(name: &str, cfg: &ExampleConfig) -> CliResult<Bundle> {
    match name {
        "cat2" => example_cat(cfg, false),
        "cat4" => example_cat(cfg, true),
        "binomial" => example_binomial(cfg),
        "corner" => example_corner(cfg),
        "init" => example_init(cfg),
        other => Err(CliError::Input(format!("unknown example '{other}' ({})", EXAMPLES.join("|")))),
    }
}

fn example_cat(cfg: &ExampleConfig, four: bool) -> CliResult<Bundle> {
    let (spec, inputs) = if four {
        let spec = CatCodeSpec::four_component(cfg.alpha.unwrap_or(2.5), 1.0, cfg.n_c.unwrap_or(18))?;
        let d = spec.dim();
        let mut mix = CVector::zeros(d);
        mix[0] = r(1.0);
        mix[2] = r(1.0);
        let inputs = vec![
            ("vacuum", DensityMatrix::basis(d, 0)),
            ("fock2", DensityMatrix::basis(d, 2)),
            ("vacuum_plus_fock2", DensityMatrix::pure(&(mix / r(2f64.sqrt())))),
            ("coherent", DensityMatrix::pure(&coherent_state(r(2.3), d))),
        ];
        (spec, inputs)
    } else {
        let spec = CatCodeSpec::two_component(cfg.alpha.unwrap_or(1.1), 1.0, cfg.n_c.unwrap_or(14))?;
        let d = spec.dim();
        (spec, vec![("vacuum", DensityMatrix::basis(d, 0))])
    };
    let n = cfg.trajectories.unwrap_or(if four { 20 } else { 100 });
    // The 4-cat generator is stiff enough that exponentials much past t = 100
    // lose trace preservation to rounding at the default truncation.
    let default_times: &[f64] = if four { &CAT4_TIMES } else { &CAT2_TIMES };
    let times = cfg.times.as_deref().unwrap_or(default_times);
    let g = cat_generator(&spec);
    let mut artifacts = vec![Artifact::text("rank_vs_time.csv", io::rank_table_csv(&rank_vs_time(&spec, times)?))];

    let (channel, steady) = match steady_channel(&g) {
        Ok(s) => {
            let info = json!({
                "converged": true,
                "time": number(s.time),
                "doublings": s.doublings,
                "deltas": s.deltas.iter().map(|&x| number(x)).collect::<Vec<_>>(),
            });
            (s.channel, info)
        }
        Err(err) => {
            let t = times.iter().copied().fold(0.0, f64::max);
            let info = json!({"converged": false, "error": err.to_string(), "fallback_time": number(t)});
            (exp_channel(&g, t)?, info)
        }
    };
    artifacts.push(Artifact::json("channel.json", &io::channel_to_json(&channel)));
    let k = synthesis_target(&channel, cfg.threshold, true)?;
    let (circuit, report, mut synth) = synthesize_bundle(&k, false)?;
    artifacts.append(&mut synth);

    let cat = spec.cat_state();
    let mut outputs = Vec::new();
    for (i, (label, rho)) in inputs.iter().enumerate() {
        let exact = DensityMatrix::new(channel.apply(rho.matrix()))?;
        outputs.push(json!({
            "input": label,
            "fidelity_to_cat": number(exact.fidelity_to_pure(&cat)),
            "purity": number(exact.purity()),
        }));
        let log = trajectory_log(&circuit, rho, n, cfg.seed.wrapping_add(i as u64), Some(&cat))?;
        artifacts.push(Artifact::text(&format!("trajectories_{label}.jsonl"), log));
    }
    let verified = report.passes(NODE_TOLERANCE, LEAF_TOLERANCE, CHOI_TOLERANCE);
    let summary_json = json!({
        "dim": spec.dim(),
        "kraus_rank": k.len(),
        "depth": circuit.depth(),
        "tail_contained": spec.tail_contained(),
        "steady": steady,
        "outputs": outputs,
        "verified": verified,
    });
    artifacts.push(Artifact::json("summary.json", &summary_json));
    Ok(Bundle {
        artifacts,
        verified,
        summary: format!(
            "{}-cat, n_c = {}: Kraus rank {}, depth {}, {}",
            spec.alphas.len(),
            spec.n_c,
            k.len(),
            circuit.depth(),
            verification_summary(&report)
        ),
    })
}

fn example_binomial(cfg: &ExampleConfig) -> CliResult<Bundle> {
    let spec = BinomialCodeSpec::new(cfg.n_c.unwrap_or(12))?;
    let circuit = binomial_recovery_circuit(&spec)?;
    let kraus = binomial_recovery_kraus(&spec)?;
    let report = verify_circuit(&circuit, &kraus);
    let cqed = decompose_circuit(&circuit)?;
    let residual = reconstruction_residual(&circuit, &cqed);

    let samples = cfg.trajectories.unwrap_or(20);
    let mut rng = RngSeed(cfg.seed).stream(0);
    let states: Vec<CVector> = (0..samples)
        .map(|_| {
            let amp = random_pure_state(2, &mut rng);
            spec.logical(amp[0], amp[1])
        })
        .collect();
    let mut table = String::from("error,syndrome,min_syndrome_probability,min_fidelity\n");
    let mut recovered = true;
    for e in BinomialError::ALL {
        let mut worst_fid: f64 = 1.0;
        let mut worst_syn: f64 = 1.0;
        for psi in &states {
            let damaged = DensityMatrix::pure(&(spec.error_operator(e) * psi));
            worst_fid = worst_fid.min(apply_channel_exact(&circuit, &damaged)?.fidelity_to_pure(psi));
            // For n̂ only the off-code component carries the syndrome.
            let flagged = spec.syndrome_filter(e) * spec.error_operator(e) * psi;
            let inst = run_instrument(&circuit, &DensityMatrix::pure(&flagged), 2)?;
            worst_syn = worst_syn.min(inst.outcomes.get(&e.syndrome()).map_or(0.0, |o| o.probability));
        }
        recovered &= worst_fid >= 1.0 - RECOVERY_TOLERANCE && worst_syn >= 1.0 - RECOVERY_TOLERANCE;
        table.push_str(&format!(
            "{},{},{},{}\n",
            e.name(),
            e.syndrome(),
            io::format_real(worst_syn),
            io::format_real(worst_fid)
        ));
    }
    let circuit_ok = report.passes(NODE_TOLERANCE, LEAF_TOLERANCE, CHOI_TOLERANCE);
    let verified = circuit_ok && recovered && residual < RECONSTRUCTION_TOLERANCE;
    let artifacts = vec![
        Artifact::json("channel.json", &io::channel_to_json(&ChannelSpec::from_kraus("binomial recovery", kraus))),
        Artifact::json("circuit.json", &io::circuit_to_json(&circuit)),
        Artifact::json("report.json", &verification_json(&report)),
        Artifact::json("cqed.json", &io::cqed_to_json(&cqed)),
        Artifact::text("recovery.csv", table),
    ];
    Ok(Bundle {
        artifacts,
        verified,
        summary: format!(
            "binomial n_c = {}: recovery {}, {}, cQED residual {residual:.3e}",
            spec.n_c(),
            if recovered { "exact" } else { "FAILED" },
            verification_summary(&report)
        ),
    })
}

fn example_corner(cfg: &ExampleConfig) -> CliResult<Bundle> {
    let ch = corner_transpose_channel(3)?;
    let det = channel_determinant(&ch.to_superop());
    let k = synthesis_target(&ch, cfg.threshold, true)?;
    let reference = corner_reference_circuit();
    let reference_report = verify_circuit(&reference, &reference.kraus_set());
    let reference_distance = channel_forge::sim::channel_distance(&reference.to_channel("reference"), &ch)?;
    let (circuit, report, mut synth) = synthesize_bundle(&k, false)?;
    let reference_ok = reference_report.max_node_isometry() < 1e-10 && reference_distance < CHOI_TOLERANCE;
    let verified = reference_ok && report.passes(NODE_TOLERANCE, LEAF_TOLERANCE, CHOI_TOLERANCE);
    let summary_json = json!({
        "determinant": [number(det.re), number(det.im)],
        "choi_spectrum": ch.to_choi().spectrum().into_iter().map(number).collect::<Vec<_>>(),
        "kraus_rank": k.len(),
        "synthesized_depth": circuit.depth(),
        "reference_node_isometry": number(reference_report.max_node_isometry()),
        "reference_choi_distance": number(reference_distance),
        "verified": verified,
    });
    let mut artifacts = vec![
        Artifact::json("channel.json", &io::channel_to_json(&ch)),
        Artifact::json("kraus.json", &io::channel_to_json(&ChannelSpec::from_kraus(ch.label.clone(), k.clone()))),
        Artifact::json("reference_circuit.json", &io::circuit_to_json(&reference)),
    ];
    artifacts.append(&mut synth);
    artifacts.push(Artifact::json("summary.json", &summary_json));
    Ok(Bundle {
        artifacts,
        verified,
        summary: format!(
            "corner transpose d = 3: det {:.6e}, Kraus rank {}, reference circuit Choi distance {reference_distance:.3e}, synthesized {}",
            det.re,
            k.len(),
            verification_summary(&report)
        ),
    })
}

fn example_init(cfg: &ExampleConfig) -> CliResult<Bundle> {
    let sigma = match &cfg.state {
        Some(s) => s.clone(),
        None => random_density_matrix(3, 2, &mut RngSeed(cfg.seed).stream(0)),
    };
    let target = StabilizationTarget::new(sigma.clone())?;
    let k = init_channel(&target);
    let (circuit, report, mut synth) = synthesize_bundle(&k, false)?;
    let d = sigma.dim();
    let out = apply_channel_exact(&circuit, &DensityMatrix::maximally_mixed(d))?;
    let distance = out.trace_distance(&sigma);
    let s = ChannelSpec::from_kraus("init", k.clone()).to_superop();
    let idempotence = linalg::frobenius(&(s.compose(&s)?.matrix() - s.matrix()));
    let verified = report.passes(NODE_TOLERANCE, LEAF_TOLERANCE, CHOI_TOLERANCE) && distance < 1e-9 && idempotence < 1e-9;
    let mut artifacts = vec![
        Artifact::json("target.json", &io::state_to_json(&sigma)),
        Artifact::json("channel.json", &io::channel_to_json(&ChannelSpec::from_kraus("init", k.clone()))),
    ];
    artifacts.append(&mut synth);
    artifacts.push(Artifact::json(
        "summary.json",
        &json!({
            "kraus_count": k.len(),
            "depth": circuit.depth(),
            "output_distance_from_mixed_input": number(distance),
            "idempotence_residual": number(idempotence),
            "verified": verified,
        }),
    ));
    Ok(Bundle {
        artifacts,
        verified,
        summary: format!(
            "init d = {d}: {} operators, output distance {distance:.3e}, idempotence {idempotence:.3e}, {}",
            k.len(),
            verification_summary(&report)
        ),
    })
}
