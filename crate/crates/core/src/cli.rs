//! Command-line driver: argument parsing, file loading and JSON reports.
//!
//! Exit status is 0 when a check holds or a transform completes, 1 when a
//! check fails (the report carries a witness) and 2 for usage or input
//! errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::equivariance::{
    check_orbit_alignment, commutation_witness, is_admitted, is_equivariant, is_len, EquivarianceTriple,
    EquivarianceWitness,
};
use crate::error::{invalid, Error, Result};
use crate::experiments::{
    compensation_experiment, hypothesis_dimension, make_example, ordering_experiment, target_agreement_check,
    ArchitectureSpec, CompensationConfig, Estimate, FitConfig, FitReport, GenCertificate, OrderingConfig,
};
use crate::geometry::{boundary_hyperplanes, is_hyperplane_set_symmetric, len_neuron_lower_bound, Hyperplane};
use crate::group::{GroupViolation, Representation};
use crate::io::{
    float_net_to_json, load_multilayer, load_net, load_representation, load_representation_data, matrix_to_json,
    multilayer_to_json, net_to_json, parse_group_data, rational_to_json, read_json, representation_to_json,
    to_json_string, vector_to_json, write_json,
};
use crate::quadrature::Quadrature;
use crate::relu_net::{find_discrepancy, ExactNet, MultiLayerNet};
use crate::transforms::{
    compress_orbits, double_size_bound_check, expand_multilayer, expand_to_len, symmetrize_len, Compression,
};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (file format 1)");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum NumericMode {
    #[default]
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckMode {
    /// End-to-end equivariance `F(ρ_g x) = φ_g F(x)`.
    Gen,
    /// Layer-wise equivariance with hidden representation ψ.
    Len,
    /// Whether every ψ_g commutes with ReLU.
    Admitted,
    /// Output weights aligned along hidden orbits (invariant nets).
    Alignment,
    /// Function equality of two nets.
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformOp {
    Symmetrize,
    Expand,
    Compress,
    ExpandMl,
    DoubleCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentName {
    TargetCheck,
    Ordering,
    Compensation,
    Dimensions,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Decide an equivariance property exactly.
    Check {
        #[arg(long, value_enum)]
        mode: CheckMode,
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long)]
        rho: Option<PathBuf>,
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long)]
        psi: Option<PathBuf>,
        /// Second net for `--mode equal`.
        #[arg(long)]
        other: Option<PathBuf>,
    },
    /// Rewrite a net and emit the result with a report.
    Transform {
        #[arg(long, value_enum)]
        op: TransformOp,
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        psi: Option<PathBuf>,
        #[arg(long)]
        phi: Option<PathBuf>,
    },
    /// Boundary hyperplanes, their symmetry and the width lower bound.
    Hyperplanes {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        rho: Option<PathBuf>,
        #[arg(long, requires = "rho")]
        lower_bound: bool,
    },
    /// Run one of the experiments on the running example.
    Experiment {
        #[arg(long, value_enum)]
        name: ExperimentName,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample count (points per net for `compensation`).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        base_nets: Option<usize>,
        /// Monte Carlo samples for fixed nets in `ordering`.
        #[arg(long)]
        mc_samples: Option<usize>,
        /// Also write a loss table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check group axioms and the homomorphism property of a representation.
    Validate {
        #[arg(long)]
        group: Option<PathBuf>,
        #[arg(long)]
        rho: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "equivar", version = VERSION, about = "Exact tools for equivariant two-layer ReLU networks")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Write the JSON report here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, global = true, default_value_t = NumericMode::Exact)]
    numeric: NumericMode,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub output: Option<PathBuf>,
    pub numeric: NumericMode,
    pub verbosity: u8,
}

/// Parses `argv` (including the program name). Help and version requests
/// come back as errors whose `exit_code()` is 0.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::CommandFactory;
    let args = Args::try_parse_from(argv)?;
    if args.numeric == NumericMode::Float && !matches!(args.command, Command::Experiment { .. }) {
        return Err(Args::command().error(
            clap::error::ErrorKind::ArgumentConflict,
            "--numeric float is only available for experiments; checks and transforms are exact",
        ));
    }
    if let Command::Check {
        mode,
        net,
        rho,
        psi,
        other,
        ..
    } = &args.command
    {
        let missing = match mode {
            CheckMode::Gen => need(&[("--net", net), ("--rho", rho)]),
            CheckMode::Len => need(&[("--net", net), ("--rho", rho), ("--psi", psi)]),
            CheckMode::Admitted => need(&[("--psi", psi)]),
            CheckMode::Alignment => need(&[("--net", net), ("--psi", psi)]),
            CheckMode::Equal => need(&[("--net", net), ("--other", other)]),
        };
        if let Some(flag) = missing {
            return Err(Args::command().error(
                clap::error::ErrorKind::MissingRequiredArgument,
                format!("check --mode {mode:?} requires {flag}").to_lowercase(),
            ));
        }
    }
    if let Command::Validate { group: None, rho: None } = &args.command {
        return Err(Args::command().error(
            clap::error::ErrorKind::MissingRequiredArgument,
            "validate needs --group or --rho",
        ));
    }
    Ok(RunConfig {
        command: args.command,
        output: args.output,
        numeric: args.numeric,
        verbosity: args.verbose,
    })
}

fn need(flags: &[(&'static str, &Option<PathBuf>)]) -> Option<&'static str> {
    flags.iter().find(|(_, v)| v.is_none()).map(|(f, _)| *f)
}

/// A finished command: whether its verdict holds, and its JSON report.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub success: bool,
    pub report: Value,
}

impl Outcome {
    fn new(success: bool, report: Value) -> Self {
        Outcome { success, report }
    }

    pub fn exit_code(&self) -> i32 {
        if self.success {
            0
        } else {
            1
        }
    }
}

/// Runs the command, writes the report and returns the exit status.
pub fn run(config: &RunConfig) -> i32 {
    configure_threads();
    match execute(config) {
        Ok(outcome) => {
            let written = match &config.output {
                Some(path) => write_json(path, &outcome.report),
                None => {
                    print!("{}", to_json_string(&outcome.report));
                    Ok(())
                }
            };
            match written {
                Ok(()) => outcome.exit_code(),
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// `EQUIVAR_THREADS` caps the worker pool.
fn configure_threads() {
    if let Some(n) = std::env::var("EQUIVAR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // A pool built earlier in the process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs the command without touching stdout.
pub fn execute(config: &RunConfig) -> Result<Outcome> {
    let verbose = config.verbosity > 0;
    match &config.command {
        Command::Check {
            mode,
            net,
            rho,
            phi,
            psi,
            other,
        } => run_check(
            *mode,
            net.as_deref(),
            rho.as_deref(),
            phi.as_deref(),
            psi.as_deref(),
            other.as_deref(),
        ),
        Command::Transform { op, net, rho, psi, phi } => run_transform(*op, net, rho, psi.as_deref(), phi.as_deref()),
        Command::Hyperplanes { net, rho, lower_bound } => run_hyperplanes(net, rho.as_deref(), *lower_bound),
        Command::Experiment {
            name,
            seed,
            samples,
            restarts,
            iterations,
            base_nets,
            mc_samples,
            csv,
        } => {
            let mut fit = FitConfig {
                seed: *seed,
                ..FitConfig::default()
            };
            if let Some(s) = samples {
                fit.samples = *s;
            }
            if let Some(r) = restarts {
                fit.restarts = *r;
            }
            if let Some(i) = iterations {
                fit.iterations = *i;
            }
            if verbose {
                eprintln!("running experiment {name:?} with seed {seed}");
            }
            run_experiment(*name, fit, *samples, *base_nets, *mc_samples, csv.as_deref())
        }
        Command::Validate { group, rho } => run_validate(group.as_deref(), rho.as_deref()),
    }
}

fn required<'a>(p: Option<&'a Path>, flag: &str) -> Result<&'a Path> {
    p.ok_or_else(|| invalid(format!("missing {flag}")))
}

fn output_rep(net: &ExactNet, phi: Option<&Path>, rho: &Representation) -> Result<Representation> {
    match phi {
        Some(p) => load_representation(p),
        None => Ok(Representation::trivial(rho.group().clone(), net.output_dim())),
    }
}

fn witness_json(w: &EquivarianceWitness) -> Value {
    json!({
        "element": w.element_name,
        "point": vector_to_json(&w.point),
        "output_at_transformed_point": vector_to_json(&w.transformed_input),
        "transformed_output": vector_to_json(&w.transformed_output),
    })
}

fn run_check(
    mode: CheckMode,
    net: Option<&Path>,
    rho: Option<&Path>,
    phi: Option<&Path>,
    psi: Option<&Path>,
    other: Option<&Path>,
) -> Result<Outcome> {
    match mode {
        CheckMode::Gen => {
            let net = load_net(required(net, "--net")?)?;
            let rho = load_representation(required(rho, "--rho")?)?;
            let phi = output_rep(&net, phi, &rho)?;
            let verdict = is_equivariant(&net, &rho, &phi)?;
            let mut report = json!({ "mode": "gen", "equivariant": verdict.holds() });
            if let Some(w) = verdict.witness() {
                report["witness"] = witness_json(w);
            }
            Ok(Outcome::new(verdict.holds(), report))
        }
        CheckMode::Len => {
            let net = load_net(required(net, "--net")?)?;
            let rho = load_representation(required(rho, "--rho")?)?;
            let psi = load_representation(required(psi, "--psi")?)?;
            let phi = output_rep(&net, phi, &rho)?;
            let verdict = is_len(&net, &EquivarianceTriple::new(rho, psi, phi)?)?;
            let mut report = json!({ "mode": "len", "len": verdict.holds() });
            if let Some(f) = verdict.witness() {
                report["failure"] = serde_json::to_value(f)?;
            }
            Ok(Outcome::new(verdict.holds(), report))
        }
        CheckMode::Admitted => {
            let psi = load_representation(required(psi, "--psi")?)?;
            let verdict = is_admitted(&psi);
            let mut report = json!({ "mode": "admitted", "admitted": verdict.holds() });
            if let Some(f) = verdict.witness() {
                let g = psi.group().index_of(&f.element).expect("named element");
                report["failure"] = serde_json::to_value(f)?;
                if let Some(x) = commutation_witness(psi.matrix(g), &f.defect) {
                    report["failure"]["relu_witness"] = vector_to_json(&x);
                }
            }
            Ok(Outcome::new(verdict.holds(), report))
        }
        CheckMode::Alignment => {
            let net = load_net(required(net, "--net")?)?;
            let psi = load_representation(required(psi, "--psi")?)?;
            let phi = match phi {
                Some(p) => load_representation(p)?,
                None => Representation::trivial(psi.group().clone(), net.output_dim()),
            };
            let r = check_orbit_alignment(&net, &psi, &phi)?;
            let violations: Vec<Value> = r
                .violations
                .iter()
                .map(|v| serde_json::to_value(v).expect("serializable"))
                .collect();
            let report = json!({
                "mode": "alignment",
                "aligned": r.aligned(),
                "components": r.components,
                "permuting": r.permuting,
                "violations": violations,
            });
            Ok(Outcome::new(r.aligned(), report))
        }
        CheckMode::Equal => {
            let a = load_net(required(net, "--net")?)?;
            let b = load_net(required(other, "--other")?)?;
            let d = find_discrepancy(&a, &b)?;
            let mut report = json!({ "mode": "equal", "equal": d.is_none() });
            if let Some(d) = &d {
                report["witness"] = json!({
                    "point": vector_to_json(&d.point),
                    "left": vector_to_json(&d.left),
                    "right": vector_to_json(&d.right),
                });
            }
            Ok(Outcome::new(d.is_none(), report))
        }
    }
}

fn compression_json(c: &Compression) -> Value {
    json!({
        "net": net_to_json(&c.net),
        "neurons": c.net.neurons(),
        "orbits": c.orbits.iter().map(|o| json!({
            "representative": vector_to_json(&o.representative),
            "coefficient": vector_to_json(&o.coefficient),
            "size": o.size,
            "stabilizer_order": o.stabilizer_order,
        })).collect::<Vec<_>>(),
        "linear_pairs_removed": c.linear_pairs_removed,
        "linear_channels": c.linear_channels.iter().map(|v| vector_to_json(v)).collect::<Vec<_>>(),
    })
}

fn load_any_multilayer(path: &Path) -> Result<MultiLayerNet<crate::linalg::Rational>> {
    let v = read_json(path)?;
    if v.get("weights").is_some() {
        load_multilayer(path)
    } else {
        Ok(MultiLayerNet::from(&crate::io::parse_net(&v)?))
    }
}

fn run_transform(op: TransformOp, net: &Path, rho: &Path, psi: Option<&Path>, phi: Option<&Path>) -> Result<Outcome> {
    let rho_rep = load_representation(rho)?;
    match op {
        TransformOp::Expand => {
            let net = load_net(net)?;
            let (len, psi) = expand_to_len(&net, &rho_rep)?;
            let report = json!({
                "op": "expand",
                "net": net_to_json(&len),
                "psi": representation_to_json(&psi),
                "report": { "input_neurons": net.neurons(), "output_neurons": len.neurons(), "group_order": rho_rep.group().order() },
            });
            Ok(Outcome::new(true, report))
        }
        TransformOp::Symmetrize | TransformOp::Compress => {
            let net = load_net(net)?;
            let psi = load_representation(required(psi, "--psi")?)?;
            let sym = symmetrize_len(&net, &rho_rep, &psi)?;
            let provenance: Vec<Value> = sym
                .provenance
                .iter()
                .map(|p| json!({ "orbit": p.orbit, "source": p.source, "element": rho_rep.group().name(p.element) }))
                .collect();
            if op == TransformOp::Symmetrize {
                let equal = crate::relu_net::nets_equal_exact(&sym.net, &net)?;
                let closed = sym.is_closed(&rho_rep);
                let report = json!({
                    "op": "symmetrize",
                    "net": net_to_json(&sym.net),
                    "psi": representation_to_json(&sym.psi),
                    "report": { "provenance": provenance, "closed": closed, "function_equal": equal },
                });
                return Ok(Outcome::new(equal && closed, report));
            }
            let c = compress_orbits(&sym, &rho_rep)?;
            let equal = crate::relu_net::nets_equal_exact(&c.net, &net)?;
            let mut report = json!({ "op": "compress", "net": net_to_json(&c.net) });
            report["report"] = compression_json(&c);
            report["report"]["function_equal"] = json!(equal);
            report["report"]["symmetrized_provenance"] = json!(provenance);
            Ok(Outcome::new(equal, report))
        }
        TransformOp::ExpandMl => {
            let ml = load_any_multilayer(net)?;
            let phi_rep = match phi {
                Some(p) => load_representation(p)?,
                None => Representation::trivial(rho_rep.group().clone(), ml.output_dim()),
            };
            let e = expand_multilayer(&ml, &rho_rep, &phi_rep)?;
            let intertwines = e.intertwines(&rho_rep, &phi_rep);
            let report = json!({
                "op": "expand-ml",
                "net": multilayer_to_json(&e.net),
                "hidden": e.hidden.iter().map(representation_to_json).collect::<Vec<_>>(),
                "report": { "intertwines": intertwines, "depth": e.net.depth() },
            });
            Ok(Outcome::new(intertwines, report))
        }
        TransformOp::DoubleCheck => {
            let net = load_net(net)?;
            let r = double_size_bound_check(&net, &rho_rep)?;
            let report = json!({
                "op": "double-check",
                "net": net_to_json(&r.compressed.net),
                "report": {
                    "input_neurons": r.input_neurons,
                    "output_neurons": r.output_neurons,
                    "boundary_hyperplanes": r.boundary_hyperplanes,
                    "within_2n_plus_2": r.within_boundary_bound,
                    "within_2m": r.within_double,
                    "function_equal": r.function_equal,
                    "compression": compression_json(&r.compressed),
                },
            });
            Ok(Outcome::new(r.holds(), report))
        }
    }
}

fn plane_json(p: &Hyperplane) -> Value {
    Value::Array(p.normal().iter().map(|x| Value::String(x.to_string())).collect())
}

fn run_hyperplanes(net: &Path, rho: Option<&Path>, lower_bound: bool) -> Result<Outcome> {
    let net = load_net(net)?;
    let planes = boundary_hyperplanes(&net);
    let list: Vec<Value> = planes
        .iter()
        .map(|(p, j)| json!({ "normal": plane_json(p), "jump": j.map(matrix_to_json) }))
        .collect();
    let mut report = json!({ "planes": list, "count": planes.len() });
    let mut success = true;
    if let Some(rho) = rho {
        let rho = load_representation(rho)?;
        let verdict = is_hyperplane_set_symmetric(&planes, &rho)?;
        report["symmetric"] = json!(verdict.holds());
        if let Some(w) = verdict.witness() {
            report["witness"] =
                json!({ "element": w.element, "plane": plane_json(&w.plane), "image": plane_json(&w.image) });
            success = false;
        } else if lower_bound {
            let lb = len_neuron_lower_bound(&planes, &rho)?;
            report["lower_bound"] = json!({
                "bound": lb.bound,
                "orbits": lb.orbits.iter().map(|o| json!({
                    "planes": o.planes.iter().map(plane_json).collect::<Vec<_>>(),
                    "channel_orbit_size": o.channel_orbit_size,
                })).collect::<Vec<_>>(),
            });
        }
    }
    Ok(Outcome::new(success, report))
}

fn estimate_json(e: &Estimate) -> Value {
    json!({ "mean": e.mean, "stderr": e.stderr, "samples": e.samples })
}

fn quadrature_json(q: &Quadrature) -> Value {
    json!({ "value": q.value, "converged": q.converged, "levels": q.levels })
}

fn fit_json(f: &FitReport) -> Value {
    json!({
        "constraint": f.spec.constraint.name(),
        "m": f.spec.m,
        "realized_width": f.realized_width,
        "loss": f.loss,
        "stderr": f.stderr,
        "restarts": f.restarts,
        "seed": f.seed,
        "best_params": float_net_to_json(&f.best_params),
        "restart_losses": f.restart_losses,
    })
}

fn certificate_json(c: &GenCertificate) -> Value {
    json!({
        "valid": c.valid(),
        "symbolic": c.symbolic,
        "negation_element": c.negation_element,
        "identity_checks": c.identity_checks,
        "counterexamples": c.counterexamples.iter().map(net_to_json).collect::<Vec<_>>(),
        "single_relu_witness": c.single_relu_witness.as_ref().map(witness_json),
        "zero_net_loss": c.zero_net_loss.as_ref().map(quadrature_json),
        "zero_net_loss_mc": estimate_json(&c.zero_net_loss_mc),
    })
}

fn write_csv(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn run_experiment(
    name: ExperimentName,
    fit: FitConfig,
    samples: Option<usize>,
    base_nets: Option<usize>,
    mc_samples: Option<usize>,
    csv: Option<&Path>,
) -> Result<Outcome> {
    match name {
        ExperimentName::TargetCheck => {
            let r = target_agreement_check(samples.unwrap_or(10_000), fit.seed)?;
            let mismatches: Vec<Value> = r
                .mismatches
                .iter()
                .map(|(a, b)| json!([rational_to_json(a), rational_to_json(b)]))
                .collect();
            let ok = mismatches.is_empty();
            if let Some(path) = csv {
                write_csv(
                    path,
                    &format!("checked,mismatches\n{},{}\n", r.checked, mismatches.len()),
                )?;
            }
            Ok(Outcome::new(
                ok,
                json!({ "experiment": "target-check", "checked": r.checked, "mismatches": mismatches, "seed": fit.seed }),
            ))
        }
        ExperimentName::Ordering => {
            let mut config = OrderingConfig {
                fit,
                ..OrderingConfig::default()
            };
            if let Some(m) = mc_samples {
                config.mc_samples = m;
            }
            let r = ordering_experiment(&config)?;
            if let Some(path) = csv {
                let mut text = String::from("model,restart,loss\n");
                for (label, f) in [("GN1", &r.gn1), ("LEN<=3", &r.len3_best)] {
                    for (k, l) in f.restart_losses.iter().enumerate() {
                        writeln!(text, "{label},{k},{l}").expect("string write");
                    }
                }
                write_csv(path, &text)?;
            }
            let report = json!({
                "experiment": "ordering",
                "holds": r.holds(),
                "target_energy": quadrature_json(&r.target_energy),
                "target_energy_mc": estimate_json(&r.target_energy_mc),
                "one_neuron": {
                    "single_relu_loss": estimate_json(&r.single_relu_loss),
                    "single_relu_loss_quadrature": quadrature_json(&r.single_relu_loss_quadrature),
                    "single_relu_gap_stderrs": r.single_relu_gap_stderrs,
                    "gn1": fit_json(&r.gn1),
                    "gn1_gap_stderrs": r.gn1_gap_stderrs,
                    "gen1_certificate": certificate_json(&r.gen1),
                },
                "three_neurons": {
                    "gen3_exact": r.gen3_exact,
                    "len_lower_bound": r.len_lower_bound.bound,
                    "no_three_neuron_len": r.no_three_neuron_len,
                    "len3_best": fit_json(&r.len3_best),
                    "len3_gap_stderrs": r.len3_gap_stderrs,
                    "len6_exact": r.len6_exact,
                },
                "notes": r.notes,
            });
            Ok(Outcome::new(r.holds(), report))
        }
        ExperimentName::Compensation => {
            let ex = make_example();
            let mut config = CompensationConfig {
                seed: fit.seed,
                ..CompensationConfig::default()
            };
            if let Some(n) = base_nets {
                config.base_nets = n;
            }
            if let Some(s) = samples {
                config.points_per_net = s;
            }
            let r = compensation_experiment(&ex.rho, &ex.s, &config)?;
            if let Some(path) = csv {
                let mut text = String::from("trial,width,realized_width,loss_f,loss_qf,violations\n");
                for t in &r.trials {
                    writeln!(
                        text,
                        "{},{},{},{},{},{}",
                        t.index, t.width, t.realized_width, t.loss_f, t.loss_qf, t.violations
                    )
                    .expect("string write");
                }
                write_csv(path, &text)?;
            }
            let ok = r.violations == 0 && r.target_equality;
            let report = json!({
                "experiment": "compensation",
                "violations": r.violations,
                "orbit_checks": r.orbit_checks,
                "target_equality": r.target_equality,
                "single_relu_strict": r.single_relu_strict,
                "group_order": ex.group.order(),
                "trials": r.trials.iter().map(|t| json!({
                    "index": t.index,
                    "width": t.width,
                    "realized_width": t.realized_width,
                    "loss_f": t.loss_f,
                    "loss_qf": t.loss_qf,
                    "violations": t.violations,
                    "strict_orbits": t.strict_orbits,
                })).collect::<Vec<_>>(),
            });
            Ok(Outcome::new(ok, report))
        }
        ExperimentName::Dimensions => {
            let ex = make_example();
            let specs = [
                ("GN n=2 m=3 d=1", ArchitectureSpec::gn(2, 3, 1)),
                ("GN n=2 m=6 d=1", ArchitectureSpec::gn(2, 6, 1)),
                ("GEN base m=1 (width 4)", ArchitectureSpec::gen(ex.rho.clone(), 1, 1)),
                ("LEN six-neuron structure", ArchitectureSpec::example_len6()),
            ];
            let rows: Vec<Value> = specs
                .iter()
                .map(|(label, spec)| {
                    Ok(json!({
                        "architecture": label,
                        "constraint": spec.constraint.name(),
                        "width": spec.realized_width(),
                        "dimension": hypothesis_dimension(spec)?,
                    }))
                })
                .collect::<Result<_>>()?;
            if let Some(path) = csv {
                let mut text = String::from("architecture,width,dimension\n");
                for r in &rows {
                    writeln!(
                        text,
                        "{},{},{}",
                        r["architecture"].as_str().unwrap_or(""),
                        r["width"],
                        r["dimension"]
                    )
                    .expect("string write");
                }
                write_csv(path, &text)?;
            }
            Ok(Outcome::new(
                true,
                json!({ "experiment": "dimensions", "architectures": rows }),
            ))
        }
    }
}

fn group_violation_json(v: &GroupViolation, names: &[String]) -> Value {
    let name = |i: usize| names.get(i).cloned().unwrap_or_else(|| i.to_string());
    match *v {
        GroupViolation::Closure { row, col, value } => {
            json!({ "axiom": "closure", "row": name(row), "column": name(col), "value": value })
        }
        GroupViolation::Identity { identity, element } => {
            json!({ "axiom": "identity", "identity": name(identity), "element": name(element) })
        }
        GroupViolation::Inverse { element } => json!({ "axiom": "inverse", "element": name(element) }),
        GroupViolation::Associativity { a, b, c } => {
            json!({ "axiom": "associativity", "elements": [name(a), name(b), name(c)] })
        }
    }
}

fn run_validate(group: Option<&Path>, rho: Option<&Path>) -> Result<Outcome> {
    let mut report = json!({});
    let mut ok = true;
    if let Some(path) = group {
        let data = parse_group_data(&read_json(path)?)?;
        let names = data.elements.clone();
        match data.build() {
            Ok(g) => report["group"] = json!({ "valid": true, "order": g.order() }),
            Err(Error::Group(v)) => {
                ok = false;
                report["group"] =
                    json!({ "valid": false, "violation": group_violation_json(&v, &names), "message": v.to_string() });
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(path) = rho {
        let data = load_representation_data(path)?;
        match data.verify()? {
            Ok(()) => report["representation"] = json!({ "valid": true, "dim": data.matrices[0].rows() }),
            Err(v) => {
                ok = false;
                report["representation"] =
                    json!({ "valid": false, "violation": serde_json::to_value(&v)?, "message": v.to_string() });
            }
        }
    }
    Ok(Outcome::new(ok, report))
}

/// Entry point shared by the binary: parse, run, exit.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match parse_args(argv) {
        Ok(config) => run(&config),
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<RunConfig, clap::Error> {
        parse_args(std::iter::once("equivar").chain(args.iter().copied()))
    }

    #[test]
    fn parses_check() {
        let c = parse(&["check", "--mode", "gen", "--net", "s.json", "--rho", "r.json"]).unwrap();
        assert!(matches!(
            c.command,
            Command::Check {
                mode: CheckMode::Gen,
                ..
            }
        ));
        assert_eq!(c.numeric, NumericMode::Exact);
    }

    #[test]
    fn parses_experiment() {
        let c = parse(&["experiment", "--name", "ordering", "--seed", "7"]).unwrap();
        assert!(matches!(
            c.command,
            Command::Experiment {
                name: ExperimentName::Ordering,
                seed: 7,
                ..
            }
        ));
        assert!(parse(&["experiment", "--name", "ordering", "--numeric", "float"]).is_ok());
    }

    #[test]
    fn usage_errors() {
        assert_eq!(parse(&["transform", "--op", "expand"]).unwrap_err().exit_code(), 2);
        assert!(parse(&["check", "--mode", "gen", "--net", "s.json"]).is_err());
        assert!(parse(&[
            "check",
            "--mode",
            "gen",
            "--net",
            "a",
            "--rho",
            "b",
            "--numeric",
            "float"
        ])
        .is_err());
        assert!(parse(&["check", "--bogus"]).is_err());
        assert!(parse(&["validate"]).is_err());
        assert_eq!(parse(&["--version"]).unwrap_err().exit_code(), 0);
    }
}
