//! `nlstruct` command-line front end.
//!
//! Exit codes: 0 on success, 1 on file, parse or usage errors, 2 on a
//! structural failure (non-regular system, invalid order, rejected design).
//! Reports are written before exiting with 2.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;

use nlstruct::backstep::{
    da_synthesize, semi_global_synthesize, synthesize, BackstepError, Budget, ChainSystem,
    ControlLaw, DesignOptions, Order, Stabilizer,
};
use nlstruct::linstruct::{decompose, linear_structure, vector_relative_degree, LinearTriple};
use nlstruct::simkit::{simulate, ClosedLoop, Method, Signal, SimConfig};
use nlstruct::structalgo::{
    render_text, run_structure, to_json, StructConfig, StructError, Variant,
};
use nlstruct::symcore::parse;
use nlstruct::sysmodel::{AffineSystem, SamplePlan};

#[derive(Parser)]
#[command(
    name = "nlstruct",
    version,
    about = "Structure analysis and backstepping design for affine nonlinear systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the structure algorithm on a `.sys` file.
    Analyze(AnalyzeArgs),
    /// Infinite zero structure and decomposition of a linear triple.
    Linzeros(LinzerosArgs),
    /// Synthesize a feedback law for a chain system.
    Backstep(BackstepArgs),
    /// Simulate an exported controller file and write a CSV trace.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Common {
    /// Relative rank tolerance.
    #[arg(long, default_value = "1e-8")]
    tol: f64,
    /// Number of sample points.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory for report files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    system: PathBuf,
    /// Use the zero-output variant.
    #[arg(long)]
    zero_output: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct LinzerosArgs {
    /// Matrix file with `[A]`, `[B]`, `[C]` sections.
    triple: PathBuf,
    /// Output transform `T_o` applied as `y ↦ T_o y` (rows of decimals).
    #[arg(long)]
    output_transform: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BackstepArgs {
    /// Chain system file.
    system: PathBuf,
    /// Stabilizer file with `[phi]` and `[V]`.
    #[arg(long)]
    stabilizer: PathBuf,
    /// Step order as a comma list, e.g. `xi1_1,xi2_1,xi1_2`. Defaults to chain by chain.
    #[arg(long)]
    order: Option<String>,
    /// Use the level-by-level order.
    #[arg(long, conflicts_with = "order")]
    level_by_level: bool,
    /// Per-step gains as a comma list of expressions, in step order.
    #[arg(long)]
    gains: Option<String>,
    /// Gain for steps not listed in `--gains`.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Low-gain parameter; requires `--levels`.
    #[arg(long, value_name = "EPS", requires = "levels")]
    semi_global: Option<f64>,
    /// Slow lengths `ℓ_i` as a comma list.
    #[arg(long)]
    levels: Option<String>,
    /// Attenuation level for a dissipative design.
    #[arg(long, value_name = "GAMMA", conflicts_with = "semi_global")]
    disturbance: Option<f64>,
    /// Split the supply into N equal parts instead of the ε schedule.
    #[arg(long)]
    split: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimulateArgs {
    /// Controller file written by `backstep`.
    controller: PathBuf,
    /// Initial state as a comma list.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// One signal per disturbance: `zero`, `const:C`, `pulse:T`, `step:T:S`, `noise:SEED[:LO:HI:SEG]`.
    #[arg(long = "w")]
    w: Vec<String>,
    /// Parameter override `name=value`.
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long, default_value = "1e-3")]
    dt: f64,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    /// Use forward Euler instead of RK4.
    #[arg(long)]
    euler: bool,
    /// CSV path; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Carries the exit status of a structural failure whose report was written.
#[derive(Debug)]
struct Structural(String);

impl std::fmt::Display for Structural {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Structural {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Analyze(a) => analyze(a),
        Cmd::Linzeros(a) => linzeros(a),
        Cmd::Backstep(a) => backstep(a),
        Cmd::Simulate(a) => simulate_cmd(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Structural>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn check_common(c: &Common) -> Result<()> {
    if !(c.tol > 0.0) || c.samples == 0 {
        bail!("--tol and --samples must be positive");
    }
    fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned())
}

fn braces(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    check_common(&a.common)?;
    let sys = AffineSystem::load(&a.system)?;
    let cfg = StructConfig {
        plan: SamplePlan::new(a.common.samples, a.common.seed),
        tol: a.common.tol,
        early_exit: false,
    };
    let variant = if a.zero_output {
        Variant::ZeroOutput
    } else {
        Variant::InfiniteZero
    };
    let base = a.common.out.join(stem(&a.system));
    match run_structure(&sys, &cfg, variant) {
        Ok(out) => {
            let text = format!(
                "rho = {}\nq = {}\n{}",
                braces(&out.rho),
                braces(&out.q),
                render_text(&out)
            );
            write(&base.with_extension("report.txt"), &text)?;
            write(
                &base.with_extension("report.json"),
                &serde_json::to_string_pretty(&to_json(&out))?,
            )?;
            print!("{text}");
            Ok(())
        }
        Err(e @ (StructError::NotRegular { .. } | StructError::NotRegularAtOrigin { .. })) => {
            let text = format!("not regular: {e}\n");
            write(&base.with_extension("report.txt"), &text)?;
            write(
                &base.with_extension("report.json"),
                &json!({ "regular": false, "reason": e.to_string() }).to_string(),
            )?;
            print!("{text}");
            Err(Structural(e.to_string()).into())
        }
        Err(e) => Err(e.into()),
    }
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .with_context(|| format!("bad number `{t}`"))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || rows.iter().any(|r| r.len() != cols) {
        bail!(
            "{}: rows must be nonempty and of equal length",
            path.display()
        );
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn linzeros(a: LinzerosArgs) -> Result<()> {
    check_common(&a.common)?;
    let mut t = LinearTriple::load(&a.triple)?;
    if let Some(p) = &a.output_transform {
        let t_o = read_matrix(p)?;
        if t_o.nrows() != t.p() || t_o.ncols() != t.p() {
            bail!("output transform must be {}x{}", t.p(), t.p());
        }
        t = t.with_output_transform(&t_o);
    }
    let tol = a.common.tol;
    let st = linear_structure(&t, tol);
    let vrd = match vector_relative_degree(&t, tol) {
        Ok(Some(r)) => braces(&r),
        Ok(None) => "none".into(),
        Err(e) => format!("n/a ({e})"),
    };
    let dec = decompose(&t, tol);
    let mut text = format!(
        "rho = {}\nq = {}\ninvertibility: {:?}\nvector relative degree: {vrd}\n",
        braces(&st.rho),
        braces(&st.q),
        st.invertibility
    );
    text += &format!(
        "n_eta = {}, m_e = {}, p_e = {}\n",
        dec.n_eta, dec.m_e, dec.p_e
    );
    text += &format!("T_s = {}T_i = {}T_o = {}", dec.t_s, dec.t_i, dec.t_o);
    text += &format!(
        "controllable and observable dimension of eta block: {}\n",
        dec.co_dim
    );
    let zeros: Vec<String> = dec
        .finite_zeros
        .iter()
        .map(|z| format!("{:.6}{:+.6}i", z.re, z.im))
        .collect();
    text += &format!("finite zeros: [{}]\n", zeros.join(", "));
    for w in dec.violations.iter().chain(&dec.warnings) {
        text += &format!("warning: {w}\n");
    }
    let base = a.common.out.join(stem(&a.triple));
    write(&base.with_extension("report.txt"), &text)?;
    let j = json!({
        "rho": st.rho, "q": st.q, "invertibility": format!("{:?}", st.invertibility),
        "vector_relative_degree": vrd, "n_eta": dec.n_eta, "co_dim": dec.co_dim,
        "cond": dec.cond, "pattern_ok": dec.pattern_ok(),
    });
    write(
        &base.with_extension("report.json"),
        &serde_json::to_string_pretty(&j)?,
    )?;
    print!("{text}");
    Ok(())
}

fn list(s: &str) -> Vec<&str> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect()
}

fn structural(e: &BackstepError) -> bool {
    matches!(
        e,
        BackstepError::MalformedOrder(_)
            | BackstepError::OrderViolation(_)
            | BackstepError::Undetermined { .. }
            | BackstepError::BudgetExhausted { .. }
            | BackstepError::MissingBound(_)
            | BackstepError::NotHurwitz(_)
            | BackstepError::Levels(_)
            | BackstepError::Stabilizer(_)
            | BackstepError::ExprBudget(_)
    )
}

fn backstep(a: BackstepArgs) -> Result<()> {
    check_common(&a.common)?;
    let mut sys = ChainSystem::load(&a.system)?;
    let mut stab = Stabilizer::load(&a.stabilizer)?;
    let base = a.common.out.join(stem(&a.system));
    let kappa = match (&a.order, a.level_by_level) {
        (Some(o), _) => Order::parse(o),
        (None, true) => Ok(Order::level_by_level(&sys.q)),
        (None, false) => Ok(Order::chain_by_chain(&sys.q)),
    };
    let mut opts = DesignOptions {
        samples: a.common.samples,
        seed: a.common.seed,
        ..DesignOptions::default()
    };
    let given = a.gains.as_deref().map(list).unwrap_or_default();
    opts.gains = given
        .iter()
        .map(|g| parse(g).with_context(|| format!("bad gain `{g}`")))
        .collect::<Result<_>>()?;
    let c = parse(&a.c.to_string()).context("bad --c")?;
    while opts.gains.len() < sys.n_d() {
        opts.gains.push(c.clone());
    }

    let result = kappa.and_then(|kappa| {
        if let Some(eps) = a.semi_global {
            let levels: Vec<usize> = list(a.levels.as_deref().unwrap_or(""))
                .iter()
                .map(|l| {
                    l.parse()
                        .map_err(|_| BackstepError::Levels(format!("bad slow length `{l}`")))
                })
                .collect::<Result<_, _>>()?;
            sys.params.insert(nlstruct::backstep::EPS.into(), eps);
            semi_global_synthesize(&sys, &levels, &kappa, &stab, eps, None, &opts)
        } else if let Some(gamma) = a.disturbance {
            stab.gamma = Some(gamma);
            if let Some(n) = a.split {
                stab.split = Some(n);
            }
            sys.params.insert(nlstruct::backstep::GAMMA.into(), gamma);
            let budget = stab.split.map_or(Budget::Proof, Budget::EqualSplit);
            da_synthesize(&sys, &kappa, &stab, budget, &opts)
        } else {
            synthesize(&sys, &kappa, &stab, &opts)
        }
    });
    match result {
        Ok(law) => {
            write_design(&base, &sys, &law)?;
            print!("{law}");
            for w in &law.warnings {
                eprintln!("warning: {w}");
            }
            Ok(())
        }
        Err(e) if structural(&e) => {
            write(
                &base.with_extension("ledger.json"),
                &json!({ "error": e.to_string() }).to_string(),
            )?;
            Err(Structural(e.to_string()).into())
        }
        Err(e) => Err(e.into()),
    }
}

fn write_design(base: &Path, sys: &ChainSystem, law: &ControlLaw) -> Result<()> {
    let mut ctrl = sys.clone();
    ctrl.control = Some(law.v.clone());
    ctrl.storage = Some(law.w.clone());
    write(&base.with_extension("ctrl"), &ctrl.render())?;
    let j = json!({
        "v": law.v.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
        "storage": law.w.to_string(),
        "supply": law.supply.as_ref().map(|e| e.to_string()),
        "ledger": law.ledger,
        "decrease": { "points": law.check.points, "max": law.check.max, "pass": law.check.pass },
        "base": { "v_at_zero": law.base.v_at_zero, "positive": law.base.positive,
                  "max_rate": law.base.max_rate, "pass": law.base.pass },
        "warnings": law.warnings,
    });
    write(
        &base.with_extension("ledger.json"),
        &serde_json::to_string_pretty(&j)?,
    )
}

fn signal(spec: &str) -> Result<Signal> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .with_context(|| format!("bad number `{s}` in signal `{spec}`"))
    };
    Ok(match parts.as_slice() {
        ["zero"] => Signal::Zero,
        ["const", c] => Signal::Const(num(c)?),
        ["pulse", t] => Signal::pulse(num(t)?),
        ["step", t, s] => Signal::Step {
            until: num(t)?,
            scale: num(s)?,
        },
        ["noise", seed] => Signal::noise(seed.parse()?),
        ["noise", seed, lo, hi, seg] => Signal::Noise {
            seed: seed.parse()?,
            lo: num(lo)?,
            hi: num(hi)?,
            segment: num(seg)?,
        },
        _ => bail!("unknown signal `{spec}`"),
    })
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let sys = ChainSystem::load(&a.controller)?;
    let mut params = BTreeMap::new();
    for p in &a.params {
        let (k, v) = p
            .split_once('=')
            .with_context(|| format!("expected name=value, got `{p}`"))?;
        params.insert(
            k.trim().to_string(),
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad value in `{p}`"))?,
        );
    }
    let cl = ClosedLoop::from_controller(&sys, &params)?;
    let x0: Vec<f64> = list(&a.x0)
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .with_context(|| format!("bad x0 entry `{t}`"))
        })
        .collect::<Result<_>>()?;
    let w: Vec<Signal> = a.w.iter().map(|s| signal(s)).collect::<Result<_>>()?;
    let cfg = SimConfig {
        dt: a.dt,
        horizon: a.horizon,
        method: if a.euler { Method::Euler } else { Method::Rk4 },
    };
    let tr = simulate(&cl, &x0, &w, &cfg)?;
    match &a.csv {
        Some(p) => write(p, &tr.to_csv())?,
        None => print!("{}", tr.to_csv()),
    }
    eprintln!(
        "final norm {:.6e}{}",
        tr.final_norm(),
        if tr.diverged { " (diverged)" } else { "" }
    );
    Ok(())
}
