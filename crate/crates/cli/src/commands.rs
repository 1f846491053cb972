use std::path::{Path, PathBuf};
use std::process::ExitCode;

use hamsim_core::blockenc::{amplitude_multiply, build_stateprep, max_factor, verify, AmplificationSpec};
use hamsim_core::costmodel::{
    cost_corollaries, cost_sparse, fitted_exponent, gate_estimates, optimal_m, recursion_symbolic, sweep_d, to_csv,
    Constants, CostReport,
};
use hamsim_core::dyson::{exact_propagator, plan, truncated_dyson, InteractionFrame};
use hamsim_core::gadgets::{run_gadget_sparse, Gadget};
use hamsim_core::instances::{
    dilate_unitary, h_parity_or, parity_or_input, parity_or_target, random_sparse, InstanceParams, MagnitudeProfile,
};
use hamsim_core::numerics::{
    compute_norms, expm_i, hermitian_eig, random_hermitian, random_unitary, spectral_norm, ComplexMatrix, SplitMix64, C64,
};
use hamsim_core::oracles::{
    build_oracles, read_instance, write_instance, FixedPointFormat, FixedPointValue, InstanceMetadata, SparseHermitian,
};
use hamsim_core::sparsesim::{simulate_sparse, SparseOptions};
use hamsim_core::suites::{regression_instance, run_suite, Bound, Scale, SuiteConfig, SUITES};
use hamsim_core::Error;

use crate::config::{Params, Settings};
use crate::output::{failure_line, persist, results_document, write_failures, FailureRecord, Outcome};
use crate::svg::{line_plot, Series};
use crate::{Cli, Command, ConstantArgs, InstanceArgs, Profile, SweepParam};

pub const DEFAULT_SEED: u64 = 2024;

pub enum Failure {
    Usage(String),
    Compute {
        module: &'static str,
        operation: &'static str,
        message: String,
    },
}

type Run<T> = std::result::Result<T, Failure>;

fn fail(module: &'static str, operation: &'static str) -> impl Fn(Error) -> Failure {
    move |e| Failure::Compute {
        module,
        operation,
        message: e.to_string(),
    }
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Usage(s)
    }
}

struct Ctx {
    settings: Settings,
    seed: u64,
    out_dir: PathBuf,
}

impl Ctx {
    fn params(&self, section: &'static str) -> Params<'_> {
        let mut p = Params::new(&self.settings, section);
        p.record("seed", &self.seed);
        p
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Gen { .. } => "gen",
        Command::Norms { .. } => "norms",
        Command::Encode { .. } => "encode",
        Command::Gadget { .. } => "gadget",
        Command::Dyson { .. } => "dyson",
        Command::Simulate { .. } => "simulate",
        Command::Sweep { .. } => "sweep",
        Command::Lowerbound { .. } => "lowerbound",
        Command::Dilate { .. } => "dilate",
        Command::Cost { .. } => "cost",
        Command::Regress { .. } => "regress",
    }
}

pub fn run(cli: Cli) -> ExitCode {
    let settings = match Settings::load(cli.config.as_deref()) {
        Ok(s) => s,
        Err(e) => return usage(&e),
    };
    let seed = match settings.lookup::<u64>("run", "seed") {
        Ok(s) => cli.seed.or(s).unwrap_or(DEFAULT_SEED),
        Err(e) => return usage(&e),
    };
    let name = command_name(&cli.command);
    let ctx = Ctx {
        settings,
        seed,
        out_dir: cli.out_dir,
    };
    let result = match cli.command {
        Command::Gen { inst, output } => gen(&ctx, &inst, output).map(|o| vec![(name.to_string(), o)]),
        Command::Norms { inst } => norms(&ctx, &inst).map(|o| vec![(name.to_string(), o)]),
        Command::Encode {
            inst,
            lambda_max,
            factor,
            delta,
        } => encode(&ctx, &inst, lambda_max, factor, delta).map(|o| vec![(name.to_string(), o)]),
        Command::Gadget { fmt, lambda_max, samples } => gadget(&ctx, fmt, lambda_max, samples).map(|o| vec![(name.to_string(), o)]),
        Command::Dyson {
            dim,
            tau,
            eps,
            b_norm,
            c_m,
        } => dyson(&ctx, dim, tau, eps, b_norm, c_m).map(|o| vec![(name.to_string(), o)]),
        Command::Simulate {
            inst,
            t,
            eps,
            m,
            c_am,
            no_tighten,
        } => simulate(&ctx, &inst, t, eps, m, c_am, no_tighten).map(|o| vec![(name.to_string(), o)]),
        Command::Sweep {
            param,
            values,
            d,
            t,
            eps,
            svg,
        } => sweep(&ctx, param, values, d, t, eps, svg).map(|o| vec![(name.to_string(), o)]),
        Command::Lowerbound { n, m, s, x, export } => lowerbound(&ctx, n, m, s, x, export).map(|o| vec![(name.to_string(), o)]),
        Command::Dilate { dim } => dilate(&ctx, dim).map(|o| vec![(name.to_string(), o)]),
        Command::Cost {
            t,
            d,
            eps,
            lambda12,
            m,
            kappa,
            sweep,
            values,
            constants,
        } => cost(&ctx, t, d, eps, lambda12, m, kappa, sweep, values, &constants).map(|o| vec![(name.to_string(), o)]),
        Command::Regress { suite, quick } => regress(&ctx, &suite, quick),
    };
    match result {
        Ok(outcomes) => {
            let mut ok = true;
            for (stem, o) in &outcomes {
                match persist(o, &ctx.out_dir, stem) {
                    Ok(failures) => {
                        for f in &failures {
                            eprintln!("{}", failure_line(f));
                        }
                    }
                    Err(e) => {
                        eprintln!("hamsim: cannot write results: {e}");
                        return ExitCode::from(2);
                    }
                }
                if !cli.quiet {
                    print_summary(o, &ctx.out_dir, stem);
                }
                ok &= o.passed();
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(Failure::Usage(msg)) => usage(&msg),
        Err(Failure::Compute {
            module,
            operation,
            message,
        }) => {
            let rec = FailureRecord {
                module: module.into(),
                operation: operation.into(),
                case: String::new(),
                metric: "error".into(),
                measured: f64::NAN,
                allowed: f64::NAN,
                message,
            };
            eprintln!("{}", failure_line(&rec));
            if let Err(e) = write_failures(&ctx.out_dir, name, &[rec]) {
                eprintln!("hamsim: cannot write failure record: {e}");
            }
            ExitCode::FAILURE
        }
    }
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    eprintln!("\nFor more information, try '--help'.");
    ExitCode::from(2)
}

fn print_summary(o: &Outcome, dir: &Path, stem: &str) {
    let failed = o.checks.iter().filter(|c| !c.pass).count();
    let verdict = if o.passed() { "PASS" } else { "FAIL" };
    println!(
        "{stem}: {verdict} ({} checks, {failed} failed) -> {}",
        o.checks.len(),
        dir.join(format!("{stem}.toml")).display()
    );
    if o.command != "regress" {
        if let Ok(doc) = results_document(o) {
            if let Some(section) = doc.split("[results]\n").nth(1) {
                for line in section.lines().take_while(|l| !l.starts_with('[')) {
                    if !line.is_empty() {
                        println!("  {line}");
                    }
                }
            }
        }
    }
}

fn parse_fmt(s: &str) -> Run<FixedPointFormat> {
    let parts: Vec<u32> = s
        .split(',')
        .map(|x| x.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("format must be p,m,n, got {s:?}")))?;
    match parts[..] {
        [p, m, n] => FixedPointFormat::new(p, m, n).map_err(|e| Failure::Usage(e.to_string())),
        _ => Err(Failure::Usage(format!("format must be p,m,n, got {s:?}"))),
    }
}

fn fmt_string(f: FixedPointFormat) -> String {
    format!("{},{},{}", f.p, f.m, f.n)
}

fn parse_list(s: &str) -> Run<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad number {x:?} in list"))))
        .collect()
}

fn positive(name: &str, v: f64) -> Run<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::Usage(format!("--{name} must be positive, got {v}")))
    }
}

/// Reads `--input` or generates a random instance with the given defaults.
fn load_instance(
    ctx: &Ctx,
    p: &mut Params,
    a: &InstanceArgs,
    dim: usize,
    d: usize,
) -> Run<SparseHermitian> {
    let input: Option<PathBuf> = p.get_opt("input", a.input.clone())?;
    if let Some(path) = input {
        let text = std::fs::read_to_string(&path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        return read_instance(&text).map_err(fail("oracles", "read_instance"));
    }
    let n = p.get("dim", a.dim, dim)?;
    let d = p.get("d", a.d, d)?;
    let lambda = positive("lambda", p.get("lambda", a.lambda, 1.0)?)?;
    let profile = p.get("profile", a.profile, Profile::Uniform)?;
    let fmt = parse_fmt(&p.get("fmt", a.fmt.clone(), fmt_string(FixedPointFormat::default()))?)?;
    let profile = match profile {
        Profile::Constant => MagnitudeProfile::Constant,
        Profile::Uniform => MagnitudeProfile::Uniform,
        Profile::LogUniform => MagnitudeProfile::LogUniform {
            decades: p.get("decades", a.decades, 2.0)?,
        },
        Profile::TwoScale => {
            let fallback = if d > 1 { lambda / (2.0 * (d - 1) as f64).sqrt() } else { lambda / 2.0 };
            MagnitudeProfile::TwoScale {
                small: p.get("small", a.small, fallback)?,
            }
        }
    };
    random_sparse(n, d, lambda, profile, fmt, ctx.seed).map_err(fail("instances", "random_sparse"))
}

fn norms_results(o: &mut Outcome, h: &SparseHermitian) {
    let n = h.norms();
    o.set("dim", &h.dim());
    o.set("d", &h.sparsity());
    o.set("nnz", &h.nnz());
    o.set("max_norm", &n.max_norm);
    o.set("one_to_two", &n.one_to_two);
    o.set("spectral", &n.spectral);
    o.set("induced_one", &n.induced_one);
}

fn gen(ctx: &Ctx, a: &InstanceArgs, output: Option<PathBuf>) -> Run<Outcome> {
    let mut p = ctx.params("gen");
    let h = load_instance(ctx, &mut p, a, 16, 4)?;
    let path = p.get("output", output, ctx.out_dir.join("instance.txt"))?;
    let text = write_instance(&h);
    let meta = InstanceMetadata::describe(&h, "random_sparse").to_toml();
    let back = read_instance(&text).map_err(fail("oracles", "read_instance"))?;
    let mismatch = u8::from(write_instance(&back) != text || back.decode() != h.decode());
    let meta_path = path.with_extension("meta.toml");
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(&path, &text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    std::fs::write(&meta_path, meta).map_err(|e| Failure::Usage(format!("{}: {e}", meta_path.display())))?;

    let mut o = Outcome::new("gen", "oracles", p.resolved);
    o.set("instance", &path.display().to_string());
    o.set("metadata", &meta_path.display().to_string());
    norms_results(&mut o, &h);
    o.check("roundtrip", "roundtrip_mismatch", f64::from(mismatch), 0.0, Bound::Max);
    let oracles = build_oracles(h);
    let sums = oracles.column_sums();
    o.csv = String::from("column,nnz,abs_sum\n");
    for (k, s) in sums.iter().enumerate() {
        o.csv.push_str(&format!("{k},{},{s:.6e}\n", oracles.matrix().row_columns(k).len()));
    }
    Ok(o)
}

const CHAIN: [&str; 6] = [
    "max<=l12",
    "l12<=spectral",
    "spectral<=l1",
    "l1<=sqrt(d)*l12",
    "sqrt(d)*l12<=sqrt(d*max*l1)",
    "sqrt(d*max*l1)<=d*max",
];

fn norms(ctx: &Ctx, a: &InstanceArgs) -> Run<Outcome> {
    let mut p = ctx.params("norms");
    let h = load_instance(ctx, &mut p, a, 16, 4)?;
    let mut o = Outcome::new("norms", "numerics", p.resolved);
    norms_results(&mut o, &h);
    let slacks = h.norms().chain_slacks(h.sparsity());
    o.csv = String::from("link,slack\n");
    for (name, s) in CHAIN.iter().zip(slacks) {
        o.csv.push_str(&format!("{name},{s:.6e}\n"));
        o.check(name, "slack", s, -1e-9, Bound::Min);
    }
    Ok(o)
}

fn encode(ctx: &Ctx, a: &InstanceArgs, lambda_max: Option<f64>, factor: Option<f64>, delta: Option<f64>) -> Run<Outcome> {
    let mut p = ctx.params("encode");
    let h = load_instance(ctx, &mut p, a, 8, 3)?;
    let oracles = build_oracles(h);
    let lambda = p.get("lambda_max", lambda_max, oracles.max_entry())?;
    let factor: Option<f64> = p.get_opt("factor", factor)?;
    let delta = p.get("delta", delta, 0.0)?;
    let pair = build_stateprep(&oracles, lambda).map_err(fail("blockenc", "build_stateprep"))?;
    let dense = oracles.materialize();
    let enc = pair.encoding().map_err(fail("blockenc", "encoding"))?;
    let mut o = Outcome::new("encode", "blockenc", p.resolved);
    o.set("layout", &format!("{:?}", pair.layout));
    o.set("alpha", &pair.alpha);
    o.set("ancilla_dim", &pair.anc_dim);
    o.set("pair_cost", &pair.cost);
    let mf = max_factor(&pair, &oracles);
    o.set("max_factor", &mf);
    o.check("plain", "residual", verify(&enc, &dense).map_err(fail("blockenc", "verify"))?, 1e-9, Bound::Max);
    if let Some(c) = factor {
        positive("factor", c)?;
        o.check("amplified", "factor_over_max", c / mf, 1.0 + 1e-12, Bound::Max);
        let spec = if delta == 0.0 {
            AmplificationSpec::exact(c)
        } else {
            AmplificationSpec::with_delta(c, delta)
        };
        let amp = amplitude_multiply(&pair, &spec).map_err(fail("blockenc", "amplitude_multiply"))?;
        o.set("amplified_alpha", &amp.alpha);
        o.set("amplified_cost", &amp.cost);
        if delta == 0.0 {
            o.check("amplified", "residual", verify(&amp, &dense).map_err(fail("blockenc", "verify"))?, 1e-8, Bound::Max);
        } else {
            let hn = spectral_norm(&dense).map_err(fail("numerics", "spectral_norm"))?;
            let err = spectral_norm(&(&amp.encoded_operator() - &dense)).map_err(fail("numerics", "spectral_norm"))?;
            o.check("amplified", "operator_error", err, hn * (2.0 * delta + delta * delta) + 1e-12, Bound::Max);
        }
    }
    let col = pair.good_amplitudes(&pair.v_col);
    let row = pair.good_amplitudes(&pair.v_row);
    o.csv = String::from("column,col_amplitude,row_amplitude\n");
    for (k, (c, r)) in col.iter().zip(&row).enumerate() {
        o.csv.push_str(&format!("{k},{c:.6e},{r:.6e}\n"));
    }
    Ok(o)
}

fn gadget(ctx: &Ctx, fmt: Option<String>, lambda_max: Option<f64>, samples: Option<usize>) -> Run<Outcome> {
    let mut p = ctx.params("gadget");
    let fmt = parse_fmt(&p.get("fmt", fmt, "3,1,4".to_string())?)?;
    let lambda = p.get("lambda_max", lambda_max, 2f64.powi(fmt.m as i32))?;
    let g = Gadget::new(fmt, lambda).map_err(fail("gadgets", "gadget"))?;
    let exhaustive = fmt.bits() <= 12;
    let values: Vec<FixedPointValue> = if exhaustive {
        fmt.enumerate().collect()
    } else {
        let k = p.get("samples", samples, 256usize)?;
        let mut rng = SplitMix64::new(ctx.seed);
        (0..k)
            .map(|_| {
                let r = rng.below(fmt.r_int_max() + 1);
                let phi = rng.below(fmt.phase_modulus());
                FixedPointValue::from_bits(fmt, r, phi)
            })
            .collect::<hamsim_core::Result<_>>()
            .map_err(fail("oracles", "from_bits"))?
    };
    let mut o = Outcome::new("gadget", "gadgets", p.resolved);
    o.csv = String::from("r_int,phi_int,amplitude_error,component_error,leak\n");
    let (mut amp, mut comp, mut leak) = (0f64, 0f64, 0f64);
    for z in &values {
        let (r, _) = run_gadget_sparse(&g, z).map_err(fail("gadgets", "fixed_point_to_amplitude"))?;
        let ae = (r.projected_amplitude - r.expected_amplitude).norm();
        amp = amp.max(ae);
        comp = comp.max(r.component_error);
        leak = leak.max(r.leaked_weight);
        o.csv.push_str(&format!(
            "{},{},{ae:.6e},{:.6e},{:.6e}\n",
            z.r_int(),
            z.phi_int(),
            r.component_error,
            r.leaked_weight
        ));
    }
    o.set("bits", &fmt.bits());
    o.set("exhaustive", &exhaustive);
    o.set("values", &values.len());
    o.set("qubits", &g.layout.qubits);
    o.set("gates", &g.circuit.count().total);
    o.set("gates_uniform", &g.breakdown.uniform);
    o.set("gates_compare", &g.breakdown.compare);
    o.set("gates_phase", &g.breakdown.phase);
    o.set("gates_rotation", &g.breakdown.rotation);
    o.check("all", "amplitude_error", amp, 1e-12, Bound::Max);
    o.check("all", "garbage_error", comp, 1e-12, Bound::Max);
    o.check("all", "leak", leak, 1e-12, Bound::Max);
    Ok(o)
}

fn dyson(ctx: &Ctx, dim: Option<usize>, tau: Option<f64>, eps: Option<f64>, b_norm: Option<f64>, c_m: Option<f64>) -> Run<Outcome> {
    let mut p = ctx.params("dyson");
    let dim = p.get("dim", dim, 4usize)?;
    let b_norm = positive("b-norm", p.get("b_norm", b_norm, 0.5)?)?;
    let eps = positive("eps", p.get("eps", eps, 1e-6)?)?;
    let c_m = positive("c-m", p.get("c_m", c_m, 1.0)?)?;
    let mut rng = SplitMix64::new(ctx.seed);
    let a = random_hermitian(dim, 1.0, &mut rng);
    let b0 = random_hermitian(dim, 1.0, &mut rng);
    let b = b0.scale_real(b_norm / spectral_norm(&b0).map_err(fail("numerics", "spectral_norm"))?);
    let frame = InteractionFrame::exact(&a, &b).map_err(fail("dyson", "interaction_frame"))?;
    let tau = positive("tau", p.get("tau", tau, 0.5 / frame.alpha_b)?)?;
    let pl = plan(tau, eps, frame.alpha_a, frame.alpha_b, c_m).map_err(fail("dyson", "plan"))?;
    let exact = exact_propagator(&a, &b, tau).map_err(fail("dyson", "exact_propagator"))?;
    let err_at = |grid: u64| -> Run<f64> {
        let mut q = pl;
        q.grid = grid;
        let d = truncated_dyson(&frame, &q).map_err(fail("dyson", "truncated_dyson"))?;
        spectral_norm(&(&d.op - &exact)).map_err(fail("numerics", "spectral_norm"))
    };
    let err = err_at(pl.grid)?;
    let mut o = Outcome::new("dyson", "dyson", p.resolved);
    o.set("alpha_a", &frame.alpha_a);
    o.set("alpha_b", &frame.alpha_b);
    o.set("alpha_b_tau", &(frame.alpha_b * tau));
    o.set("order", &pl.order);
    o.set("grid", &pl.grid);
    o.set("alpha_prime", &pl.alpha_prime);
    o.set("provider_eps", &pl.provider_eps);
    o.set("slice_error", &err);
    o.check("plan", "slice_error", err, eps, Bound::Max);
    o.csv = String::from("grid,error\n");
    let mut g = 2u64;
    while g < pl.grid && g <= 4096 {
        o.csv.push_str(&format!("{g},{:.6e}\n", err_at(g)?));
        g *= 2;
    }
    o.csv.push_str(&format!("{},{err:.6e}\n", pl.grid));
    Ok(o)
}

fn simulate(
    ctx: &Ctx,
    a: &InstanceArgs,
    t: Option<f64>,
    eps: Option<f64>,
    m: Option<usize>,
    c_am: Option<f64>,
    no_tighten: bool,
) -> Run<Outcome> {
    let mut p = ctx.params("simulate");
    let h = load_instance(ctx, &mut p, a, 16, 4)?;
    let t = p.get("t", t, 1.0)?;
    let eps = positive("eps", p.get("eps", eps, 1e-4)?)?;
    let defaults = SparseOptions::default();
    let opts = SparseOptions {
        m: p.get_opt("m", m)?,
        c_am: p.get("c_am", c_am, defaults.c_am)?,
        tighten: !p.get("no_tighten", no_tighten.then_some(true), false)?,
        ..defaults
    };
    let norms = *h.norms();
    let oracles = build_oracles(h);
    let r = simulate_sparse(&oracles, &norms, t, eps, &opts).map_err(fail("sparsesim", "simulate_sparse"))?;
    let ledger = r.ledger();
    let bound = cost_sparse(t, oracles.sparsity() as f64, norms.one_to_two, eps, r.schedule.m, &Constants::default())
        .map_err(fail("costmodel", "cost_sparse"))?;
    let mut o = Outcome::new("simulate", "sparsesim", p.resolved);
    norms_results(&mut o, oracles.matrix());
    o.set("m", &r.schedule.m);
    o.set("gamma", &r.schedule.gamma);
    o.set("cutoffs", &r.schedule.cutoffs);
    o.set("dropped_windows", &r.dropped);
    o.set("measured_error", &r.sim.measured_error);
    o.set("encoding_error", &r.encoding_error);
    o.set("recursion_error", &r.recursion_error);
    o.set("ledger", &ledger);
    o.set("cost_sparse", &bound.queries);
    o.set("o_h_over_cost_sparse", &(ledger.o_h as f64 / bound.queries));
    o.check("run", "measured_error", r.sim.measured_error, eps, Bound::Max);
    o.check("run", "o_h_over_cost_sparse", ledger.o_h as f64 / bound.queries, 8.0, Bound::Max);
    o.csv = String::from("window,lo,hi,nnz,max_entry,alpha,factor,delta,repetitions,applications,o_h\n");
    for term in &r.terms {
        o.csv.push_str(&format!(
            "{},{:.6e},{:.6e},{},{:.6e},{:.6e},{:.6e},{:.6e},{},{},{}\n",
            term.window,
            term.lo,
            term.hi,
            term.nnz,
            term.max_entry,
            term.alpha,
            term.factor,
            term.delta,
            term.repetitions,
            term.applications,
            term.cost.o_h * term.applications
        ));
    }
    Ok(o)
}

struct SweepRow {
    value: f64,
    d: usize,
    m: usize,
    o_h: u64,
    u_b: u64,
    error: f64,
    eps: f64,
    bound: f64,
}

fn sweep(
    ctx: &Ctx,
    param: Option<SweepParam>,
    values: Option<String>,
    d: Option<usize>,
    t: Option<f64>,
    eps: Option<f64>,
    svg: bool,
) -> Run<Outcome> {
    let mut p = ctx.params("sweep");
    let param = p.get("param", param.map(param_name), "d".to_string())?;
    let default_values = match param.as_str() {
        "d" => "4,8,16,32",
        "t" => "0.25,0.5,1",
        "eps" => "1e-2,1e-3,1e-4,1e-5",
        other => return Err(Failure::Usage(format!("unknown sweep parameter {other:?}"))),
    };
    let values = parse_list(&p.get("values", values, default_values.to_string())?)?;
    let d0 = p.get("d", d, 8usize)?;
    let t0 = p.get("t", t, 1.0)?;
    let eps0 = positive("eps", p.get("eps", eps, 1e-4)?)?;
    let svg = p.get("svg", svg.then_some(true), false)?;
    let seed = ctx.seed;

    let run_one = |v: f64| -> Run<SweepRow> {
        let (d, t, eps) = match param.as_str() {
            "d" => (v as usize, t0, eps0),
            "t" => (d0, v, eps0),
            _ => (d0, t0, v),
        };
        let oracles = regression_instance(d, seed.wrapping_add(d as u64)).map_err(fail("instances", "random_sparse"))?;
        let mut norms = *oracles.matrix().norms();
        norms.one_to_two = 1.0;
        let r = simulate_sparse(&oracles, &norms, t, eps, &SparseOptions::default()).map_err(fail("sparsesim", "simulate_sparse"))?;
        let bound = cost_sparse(t, d as f64, 1.0, eps, r.schedule.m, &Constants::default()).map_err(fail("costmodel", "cost_sparse"))?;
        let ledger = r.ledger();
        Ok(SweepRow {
            value: v,
            d,
            m: r.schedule.m,
            o_h: ledger.o_h,
            u_b: ledger.u_b,
            error: r.sim.measured_error,
            eps,
            bound: bound.queries,
        })
    };
    let rows: Vec<Run<SweepRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = values.iter().map(|&v| s.spawn(move || run_one(v))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let rows = rows.into_iter().collect::<Run<Vec<_>>>()?;

    let mut o = Outcome::new("sweep", "sparsesim", p.resolved);
    o.csv = String::from("param,value,N,d,m,o_h,u_b,measured_error,eps,cost_sparse,pass\n");
    for r in &rows {
        let pass = r.error <= r.eps;
        o.csv.push_str(&format!(
            "{param},{:e},32,{},{},{},{},{:.6e},{:e},{:.6e},{pass}\n",
            r.value, r.d, r.m, r.o_h, r.u_b, r.error, r.eps, r.bound
        ));
        o.check(&format!("{param}={:e}", r.value), "measured_error", r.error, r.eps, Bound::Max);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.o_h as f64).collect();
    if rows.len() >= 2 {
        o.set("o_h_exponent", &fitted_exponent(&xs, &ys));
    }
    o.set("points", &rows.len());
    if svg {
        let plot = line_plot(
            &format!("O_H queries vs {param}"),
            &param,
            &[
                Series {
                    name: "ledger O_H".into(),
                    points: xs.iter().copied().zip(ys.iter().copied()).collect(),
                },
                Series {
                    name: "cost_sparse".into(),
                    points: rows.iter().map(|r| (r.value, r.bound)).collect(),
                },
            ],
        );
        o.files.push(("sweep.svg".into(), plot));
        o.set("svg", &ctx.out_dir.join("sweep.svg").display().to_string());
    }
    Ok(o)
}

fn param_name(p: SweepParam) -> String {
    match p {
        SweepParam::D => "d",
        SweepParam::T => "t",
        SweepParam::Eps => "eps",
    }
    .to_string()
}

fn parse_bits(s: &str, n: usize, m: usize) -> Run<Vec<Vec<bool>>> {
    let blocks: Vec<&str> = s.split(',').map(str::trim).collect();
    if blocks.len() != n {
        return Err(Failure::Usage(format!("--x needs {n} blocks, got {}", blocks.len())));
    }
    blocks
        .iter()
        .map(|b| {
            if b.len() != m {
                return Err(Failure::Usage(format!("block {b:?} must have {m} bits")));
            }
            b.chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Failure::Usage(format!("bad bit {c:?} in {b:?}"))),
                })
                .collect()
        })
        .collect()
}

fn lowerbound(ctx: &Ctx, n: Option<usize>, m: Option<usize>, s: Option<usize>, x: Option<String>, export: Option<PathBuf>) -> Run<Outcome> {
    let mut p = ctx.params("lowerbound");
    let n = p.get("n", n, 3usize)?;
    let m = p.get("m", m, 2usize)?;
    let s = p.get("s", s, 2usize)?;
    let x = match p.get_opt("x", x)? {
        Some(text) => parse_bits(&text, n, m)?,
        None => {
            let mut rng = SplitMix64::new(ctx.seed);
            (0..n)
                .map(|_| {
                    let c = rng.below(m as u64 + 1) as usize;
                    (0..m).map(|j| c == j + 1).collect()
                })
                .collect()
        }
    };
    let export: Option<PathBuf> = p.get_opt("export", export)?;
    let inst = InstanceParams::new(n, m, s, x).map_err(|e| Failure::Usage(e.to_string()))?;
    let h = h_parity_or(&inst).map_err(fail("instances", "h_parity_or"))?;
    let time = inst.transfer_time();
    let want = usize::from(inst.parity_of_ors());
    let from = parity_or_input(&inst, 0);
    let to = parity_or_target(&inst, want);
    let prob = |u: &ComplexMatrix, v: &[C64]| -> f64 {
        let w = u.apply(&from);
        v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
    };
    let mut o = Outcome::new("lowerbound", "instances", p.resolved);
    o.csv = String::from("t,target_probability,input_probability\n");
    let mut fidelity = 0.0;
    for k in 0..=16 {
        let tk = time * k as f64 / 16.0;
        let u = expm_i(&h, tk).map_err(fail("numerics", "expm_i"))?;
        let (pt, pi) = (prob(&u, &to), prob(&u, &from));
        o.csv.push_str(&format!("{tk:.6e},{pt:.6e},{pi:.6e}\n"));
        if k == 16 {
            fidelity = pt;
        }
    }
    let norms = compute_norms(&h).map_err(fail("numerics", "compute_norms"))?;
    let rows: Vec<String> = inst.x.iter().map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect()).collect();
    o.set("x", &rows.join(","));
    o.set("or_values", &inst.or_values());
    o.set("parity", &want);
    o.set("dim", &inst.dim());
    o.set("transfer_time", &time);
    o.set("fidelity", &fidelity);
    o.set("one_to_two", &norms.one_to_two);
    o.set("one_to_two_over_sqrt_s", &(norms.one_to_two / (s as f64).sqrt()));
    o.set("spectral", &norms.spectral);
    o.check("transfer", "fidelity", fidelity, 1.0 - 1e-9, Bound::Min);
    if let Some(path) = export {
        let d = h.sparsity(1e-12);
        let sh = SparseHermitian::from_dense(&h, d, FixedPointFormat::default()).map_err(fail("oracles", "from_dense"))?;
        let meta = InstanceMetadata::describe(&sh, "h_parity_or").to_toml();
        std::fs::write(&path, write_instance(&sh)).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let meta_path = path.with_extension("meta.toml");
        std::fs::write(&meta_path, meta).map_err(|e| Failure::Usage(format!("{}: {e}", meta_path.display())))?;
        o.set("export", &path.display().to_string());
    }
    Ok(o)
}

fn dilate(ctx: &Ctx, dim: Option<usize>) -> Run<Outcome> {
    let mut p = ctx.params("dilate");
    let n = p.get("dim", dim, 4usize)?;
    let mut rng = SplitMix64::new(ctx.seed);
    let u = random_unitary(n, &mut rng);
    let h = dilate_unitary(&u).map_err(fail("instances", "dilate_unitary"))?;
    let mut sum = expm_i(&h, std::f64::consts::FRAC_PI_2).map_err(fail("numerics", "expm_i"))?;
    sum.add_scaled(&h, C64::new(0.0, 1.0));
    let sq = &(&h * &h) - &ComplexMatrix::identity(2 * n);
    let norm = |m: &ComplexMatrix| spectral_norm(m).map_err(fail("numerics", "spectral_norm"));
    let mut o = Outcome::new("dilate", "instances", p.resolved);
    o.set("dim", &(2 * n));
    o.check("dilation", "quarter_turn_error", norm(&sum)?, 1e-9, Bound::Max);
    o.check("dilation", "square_error", norm(&sq)?, 1e-9, Bound::Max);
    let eig = hermitian_eig(&h).map_err(fail("numerics", "hermitian_eig"))?;
    o.csv = String::from("index,eigenvalue\n");
    for (k, e) in eig.eigenvalues.iter().enumerate() {
        o.csv.push_str(&format!("{k},{e:.6e}\n"));
    }
    Ok(o)
}

fn constants(p: &mut Params, c: &ConstantArgs) -> Run<Constants> {
    let base = Constants::default();
    let mut q = Params::new(p.settings(), "constants");
    let k = Constants {
        single: q.get("single", c.c_single, base.single)?,
        interaction: q.get("interaction", c.c_interaction, base.interaction)?,
        recursion: q.get("recursion", c.c_recursion, base.recursion)?,
        sparse: q.get("sparse", c.c_sparse, base.sparse)?,
    };
    p.record("constants", &q.resolved);
    Ok(k)
}

#[allow(clippy::too_many_arguments)]
fn cost(
    ctx: &Ctx,
    t: Option<f64>,
    d: Option<f64>,
    eps: Option<f64>,
    lambda12: Option<f64>,
    m: Option<usize>,
    kappa: Option<f64>,
    sweep: Option<SweepParam>,
    values: Option<String>,
    c: &ConstantArgs,
) -> Run<Outcome> {
    let mut p = ctx.params("cost");
    let k = constants(&mut p, c)?;
    let t = p.get("t", t, 1.0)?;
    let d = positive("d", p.get("d", d, 16.0)?)?;
    let eps = positive("eps", p.get("eps", eps, 1e-3)?)?;
    let l12 = positive("lambda12", p.get("lambda12", lambda12, 1.0)?)?;
    let kappa = p.get("kappa", kappa, 1.0)?;
    let m: Option<usize> = p.get_opt("m", m)?;
    let sweep: Option<String> = p.get_opt("sweep", sweep.map(param_name))?;
    let core = |r: hamsim_core::Result<CostReport>| r.map_err(fail("costmodel", "cost"));
    let mut o;
    match sweep.as_deref() {
        None => {
            let m = match m {
                Some(m) => m,
                None => optimal_m(t, d, l12, eps, &k).map_err(fail("costmodel", "optimal_m"))?,
            };
            let sparse = core(cost_sparse(t, d, l12, eps, m, &k))?;
            let mut reports = vec![sparse.clone(), core(cost_corollaries(d, eps, 1.0, &k))?];
            if kappa > 1.0 {
                reports.push(core(cost_corollaries(d, eps, kappa, &k))?);
            }
            o = Outcome::new("cost", "costmodel", p.resolved);
            let (gadget_gates, arithmetic_gates) = gate_estimates(sparse.queries, FixedPointFormat::default());
            o.set("m", &m);
            o.set("queries", &sparse.queries);
            o.set("per_sqrt_d", &(sparse.queries / (t.abs() * d.sqrt() * l12)));
            o.set("gates_gadget", &gadget_gates);
            o.set("gates_arithmetic", &arithmetic_gates);
            o.set("recursion_m2", &recursion_symbolic(2).to_string());
            o.check("sparse", "queries_finite", f64::from(u8::from(!sparse.queries.is_finite())), 0.0, Bound::Max);
            o.csv = to_csv(&reports);
        }
        Some(which) => {
            let default_values = match which {
                "d" => "4,8,16,32,64,128,256,512,1024,2048,4096",
                "t" => "0.5,1,2,4,8,16",
                _ => "1e-2,1e-3,1e-4,1e-6,1e-8",
            };
            let xs = parse_list(&p.get("values", values, default_values.to_string())?)?;
            let reports = match which {
                "d" => sweep_d(&xs, t, l12, eps, &k).map_err(fail("costmodel", "sweep_d"))?,
                _ => xs
                    .iter()
                    .map(|&x| {
                        let (tt, ee) = if which == "t" { (x, eps) } else { (t, x) };
                        let m = optimal_m(tt, d, l12, ee, &k)?;
                        cost_sparse(tt, d, l12, ee, m, &k)
                    })
                    .collect::<hamsim_core::Result<Vec<_>>>()
                    .map_err(fail("costmodel", "cost"))?,
            };
            o = Outcome::new("cost", "costmodel", p.resolved);
            // order from easy to hard; cost must not decrease
            let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(reports.iter().map(|r| r.queries)).collect();
            pairs.sort_by(|a, b| {
                let ord = a.0.total_cmp(&b.0);
                if which == "eps" {
                    ord.reverse()
                } else {
                    ord
                }
            });
            let drop = pairs.windows(2).map(|w| (w[0].1 - w[1].1).max(0.0)).fold(0.0, f64::max);
            o.check(which, "monotone_violation", drop, 0.0, Bound::Max);
            let ys: Vec<f64> = reports.iter().map(|r| r.queries).collect();
            if xs.len() >= 2 && which != "eps" {
                o.set("exponent", &fitted_exponent(&xs, &ys));
            }
            if which == "d" && xs.len() >= 2 {
                let ratio: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y / x.sqrt()).collect();
                o.set("exponent_over_sqrt_d", &fitted_exponent(&xs, &ratio));
            }
            o.set("points", &xs.len());
            o.csv = to_csv(&reports);
        }
    }
    Ok(o)
}

fn regress(ctx: &Ctx, suite: &str, quick: bool) -> Run<Vec<(String, Outcome)>> {
    let names: Vec<&str> = match suite {
        "" => {
            return Err(Failure::Usage(format!(
                "regress needs a suite name: one of {} or all",
                SUITES.join(", ")
            )))
        }
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        s => return Err(Failure::Usage(format!("unknown suite {s:?}: one of {} or all", SUITES.join(", ")))),
    };
    let cfg = SuiteConfig {
        seed: ctx.seed,
        scale: if quick { Scale::Quick } else { Scale::Full },
    };
    let mut out = Vec::new();
    for name in names {
        let mut p = ctx.params("regress");
        p.record("suite", name);
        p.record("scale", if quick { "quick" } else { "full" });
        let rep = run_suite(name, &cfg).map_err(fail("suites", "run_suite"))?;
        let mut o = Outcome::new("regress", "suites", p.resolved);
        o.set("checks", &rep.checks.len());
        o.set("failed", &rep.failures().count());
        o.csv = rep.to_csv();
        o.checks = rep.checks;
        out.push((format!("regress-{name}"), o));
    }
    Ok(out)
}
