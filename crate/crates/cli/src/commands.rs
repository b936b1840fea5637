use std::io::Write;
use std::path::Path;

use randrec::estimate::{
    empirical_tail, symmetry_check, tail_estimate, AlphaChoice, Symmetry, TailEstimate,
};
use randrec::model::{check_assumptions, InducedModel, Sign};
use randrec::report::{resolve_regime, theory_report, Regime, ReportOptions, TheoryReport};
use randrec::simulate::{
    block_moment_check, default_depth, regeneration_blocks, stationary_sample, BlockMoment, Method,
    RegenerationConfig, SampleConfig, StationaryDraw,
};
use randrec::spectral::{
    find_beta_max, solve_alpha_detailed, solve_signed_constants, solve_tail_constants,
    SpectralError,
};
use serde::Serialize;

use crate::config::{read_to_string, Envelope, Resolved, RunConfig};
use crate::error::CliError;
use crate::io::{output, read_samples, write_blocks, write_samples};
use crate::{
    BlocksArgs, CheckArgs, EstimateArgs, MethodArg, ReportArgs, SamplerArgs, SimulateArgs,
    SolveAlphaArgs, TailConstantsArgs,
};

/// Relative error allowed between estimated and theoretical tail constants.
pub const K_REL_TOL: f64 = 0.15;
/// Absolute error allowed between the Hill estimate and the exponent.
pub const ALPHA_ABS_TOL: f64 = 0.1;
pub const SYMMETRY_Z_MAX: f64 = 4.0;
/// Block moment `E|B|^alpha` must be within this many standard errors of 1.
pub const BLOCK_SE_MAX: f64 = 3.0;

fn load_model(path: &Path) -> Result<InducedModel, CliError> {
    let text = read_to_string(path)?;
    InducedModel::from_json(&text).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })
}

fn emit<C: Serialize, T: Serialize>(
    out: Option<&Path>,
    command: &str,
    config: &C,
    result: T,
) -> Result<(), CliError> {
    let env = Envelope {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        result,
    };
    let mut w = output(out)?;
    randrec::json::to_writer_pretty(&mut w, &env).map_err(|e| CliError::Output(e.to_string()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Output(e.to_string()))
}

fn run_config<A: Serialize>(model: Option<&Path>, global: &Resolved, args: A) -> RunConfig<A> {
    RunConfig {
        model: model.map(Path::to_path_buf),
        global: *global,
        args,
    }
}

/// Exponent of the model: the supplied one, the file's hint, or the regime's.
fn model_alpha(
    model: &InducedModel,
    given: Option<f64>,
    global: &Resolved,
) -> Result<f64, CliError> {
    if let Some(a) = given.or(model.alpha_hint()) {
        return Ok(a);
    }
    match resolve_regime(model, &global.tolerances)? {
        (_, Some(a)) => Ok(a),
        (_, None) => Err(SpectralError::NoKestenExponent.into()),
    }
}

pub fn check(args: &CheckArgs, global: &Resolved) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let alpha = model_alpha(&model, args.alpha, global)?;
    let report = check_assumptions(&model, alpha).map_err(|source| CliError::Model {
        path: args.model.clone(),
        source,
    })?;
    let cfg = run_config(Some(&args.model), global, args);
    emit(args.out.as_deref(), "check", &cfg, report)
}

#[derive(Serialize)]
struct AlphaOutput {
    alpha: f64,
    lambda_at_alpha: f64,
    bracket: (f64, f64),
    beta_max: f64,
    lambda_curve: Vec<(f64, f64)>,
    convex: bool,
    bisection_steps: usize,
}

pub fn solve_alpha(args: &SolveAlphaArgs, global: &Resolved) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let tols = &global.tolerances;
    let beta_max = match args.beta_max {
        Some(b) => b,
        None => find_beta_max(&model, tols.spectral)?,
    };
    let sol = solve_alpha_detailed(&model, beta_max, tols)?;
    let out = AlphaOutput {
        alpha: sol.alpha,
        lambda_at_alpha: sol.lambda_at_alpha,
        bracket: sol.bracket,
        beta_max,
        lambda_curve: sol.curve,
        convex: sol.convex,
        bisection_steps: sol.bisection_steps,
    };
    let cfg = run_config(Some(&args.model), global, args);
    emit(args.out.as_deref(), "solve-alpha", &cfg, out)
}

#[derive(Serialize)]
struct ConstantsOutput {
    alpha: f64,
    #[serde(rename = "K")]
    k: Option<Vec<f64>>,
    #[serde(rename = "K_neumann")]
    k_neumann: Option<Vec<f64>>,
    neumann_terms: Option<usize>,
    #[serde(rename = "K_plus")]
    k_plus: Vec<f64>,
    #[serde(rename = "K_minus")]
    k_minus: Vec<f64>,
    #[serde(rename = "rho_G")]
    rho_g: f64,
}

pub fn tail_constants(args: &TailConstantsArgs, global: &Resolved) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let alpha = match args.alpha.or(model.alpha_hint()) {
        Some(a) => a,
        None => match resolve_regime(&model, &global.tolerances)? {
            (_, Some(a)) => a,
            (_, None) => return Err(SpectralError::NoKestenExponent.into()),
        },
    };
    let signed = solve_signed_constants(&model, alpha, &global.tolerances)?;
    let right = if model.multipliers_positive() {
        Some(solve_tail_constants(&model, alpha, &global.tolerances)?)
    } else {
        None
    };
    let out = ConstantsOutput {
        alpha,
        k: right.as_ref().map(|r| r.k.clone()),
        k_neumann: right.as_ref().map(|r| r.neumann.clone()),
        neumann_terms: right.as_ref().map(|r| r.neumann_terms),
        k_plus: signed.k_plus,
        k_minus: signed.k_minus,
        rho_g: signed.rho_g,
    };
    let cfg = run_config(Some(&args.model), global, args);
    emit(args.out.as_deref(), "tail-constants", &cfg, out)
}

fn sampler_method(
    model: &InducedModel,
    s: &SamplerArgs,
    global: &Resolved,
) -> Result<Method, CliError> {
    Ok(match s.method {
        MethodArg::Burnin => Method::BurnIn {
            burn_in: s.burnin,
            thin: s.thin,
            r0: s.r0,
        },
        MethodArg::Backward => {
            let depth = match s.depth {
                Some(d) => d,
                None => {
                    let alpha = resolve_regime(model, &global.tolerances)
                        .ok()
                        .and_then(|r| r.1);
                    default_depth(model, alpha)?
                }
            };
            Method::Backward { depth }
        }
    })
}

pub fn simulate(args: &SimulateArgs, global: &Resolved) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let method = sampler_method(&model, &args.sampler, global)?;
    let config = SampleConfig {
        count: args.samples,
        method,
        seed: global.seed,
        shards: args.sampler.shards,
    };
    let draws = stationary_sample(&model, &config)?;
    write_samples(output(args.out.as_deref())?, model.chain().states(), &draws)
}

fn state_index(model: &InducedModel, name: Option<&str>) -> Result<usize, CliError> {
    match name {
        None => Ok(0),
        Some(n) => model
            .chain()
            .index_of(n)
            .ok_or_else(|| CliError::Usage(format!("unknown state {n:?}"))),
    }
}

pub fn blocks(args: &BlocksArgs, global: &Resolved) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let cfg = RegenerationConfig {
        y_star: state_index(&model, args.y_star.as_deref())?,
        r: args.r,
        n_blocks: args.blocks,
        seed: global.seed,
        max_block_len: args.max_block_len,
        shards: args.shards,
    };
    let blocks = regeneration_blocks(&model, &cfg)?;
    write_blocks(
        output(args.out.as_deref())?,
        model.chain().states(),
        &blocks,
    )
}

#[derive(Serialize)]
struct EstimateOutput {
    states: Vec<String>,
    #[serde(flatten)]
    estimate: TailEstimate,
}

pub fn estimate(args: &EstimateArgs, global: &Resolved) -> Result<(), CliError> {
    let names = match &args.model {
        Some(p) => Some(load_model(p)?.chain().states().to_vec()),
        None => None,
    };
    let file = read_samples(&args.input, names.as_deref())?;
    let est = tail_estimate(&file.samples, args.alpha, &args.window, args.per_state)?;
    let cfg = run_config(args.model.as_deref(), global, args);
    let out = EstimateOutput {
        states: file.names,
        estimate: est,
    };
    emit(args.json.as_deref(), "estimate", &cfg, out)
}

/// One theory-versus-simulation comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub theory: f64,
    pub estimate: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn abs(name: impl Into<String>, theory: f64, estimate: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            theory,
            estimate,
            tolerance,
            pass: (estimate - theory).abs() <= tolerance,
        }
    }
}

#[derive(Serialize)]
struct ReportOutput {
    theory: TheoryReport,
    sampler: Method,
    estimate: Option<TailEstimate>,
    symmetry: Option<Symmetry>,
    block_moment: Option<BlockMoment>,
    checks: Vec<Check>,
    pass: bool,
}

/// Relative check on a tail constant; constants far below the largest one
/// are compared against a tenth of it instead of themselves.
fn k_check(name: String, theory: f64, estimate: f64, scale: f64) -> Check {
    Check::abs(
        name,
        theory,
        estimate,
        K_REL_TOL * theory.abs().max(0.1 * scale),
    )
}

fn degenerate_checks(
    theory: &TheoryReport,
    draws: &[StationaryDraw],
) -> Result<Vec<Check>, CliError> {
    let gamma = theory.degenerate.gamma.clone().unwrap_or_default();
    let top = gamma.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let dev = draws
        .iter()
        .map(|d| {
            gamma
                .iter()
                .map(|g| (d.r - g).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max);
    let mut checks = vec![Check::abs("R on Gamma", 0.0, dev, 1e-9 * top.max(1.0))];
    let t = top * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    for sign in [Sign::Plus, Sign::Minus] {
        let p = empirical_tail(draws, t, sign, None)?;
        let name = format!(
            "P({}R > {t}) = 0",
            if sign == Sign::Plus { "" } else { "-" }
        );
        checks.push(Check::abs(name, 0.0, p, 0.0));
    }
    Ok(checks)
}

pub fn report(args: &ReportArgs, global: &Resolved) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let y_star = state_index(&model, args.y_star.as_deref())?;
    let opts = ReportOptions {
        y_star,
        r: args.r,
        tolerances: global.tolerances,
    };
    let theory = theory_report(&model, &opts)?;

    // A degenerate chain is started on its invariant value so that R stays there
    let method = match (&theory.degenerate.is_degenerate, theory.degenerate.c) {
        (true, Some(c)) => Method::BurnIn {
            burn_in: args.sampler.burnin,
            thin: args.sampler.thin,
            r0: c,
        },
        (true, None) => Method::BurnIn {
            burn_in: args.sampler.burnin.max(1000),
            thin: args.sampler.thin,
            r0: args.sampler.r0,
        },
        _ => sampler_method(&model, &args.sampler, global)?,
    };
    let draws = stationary_sample(
        &model,
        &SampleConfig {
            count: args.samples,
            method,
            seed: global.seed,
            shards: args.sampler.shards,
        },
    )?;

    let mut checks = Vec::new();
    let (mut estimate, mut symmetry, mut block_moment) = (None, None, None);
    if theory.degenerate.is_degenerate {
        checks = degenerate_checks(&theory, &draws)?;
    } else if let Some(alpha) = theory.alpha {
        match theory.regime {
            Regime::Grey => {
                let est = tail_estimate(
                    &draws,
                    AlphaChoice::Value(alpha),
                    &args.window,
                    args.per_state,
                )?;
                let pi = model.chain().stationary();
                let (kp, km) = (
                    theory.k_plus.clone().unwrap_or_default(),
                    theory.k_minus.clone().unwrap_or_default(),
                );
                let scale = kp.iter().chain(&km).fold(0.0f64, |m, k| m.max(*k));
                for entry in &est.k_hat {
                    let ks = if entry.sign > 0 { &kp } else { &km };
                    let (theory_k, label) = match entry.state {
                        None => (
                            pi.iter().zip(ks).map(|(p, k)| p * k).sum::<f64>(),
                            "pooled".to_string(),
                        ),
                        Some(i) => (ks[i], model.chain().states()[i].clone()),
                    };
                    let side = if entry.sign > 0 { "K_plus" } else { "K_minus" };
                    checks.push(k_check(format!("{side} {label}"), theory_k, entry.k, scale));
                }
                estimate = Some(est);
            }
            Regime::Kesten => {
                let est = tail_estimate(&draws, AlphaChoice::Auto, &args.window, args.per_state)?;
                if let Some(a) = est.alpha_hat {
                    checks.push(Check::abs("Hill alpha", alpha, a, ALPHA_ABS_TOL));
                }
                if !model.multipliers_positive() {
                    let sym = symmetry_check(&draws, alpha, &args.window)?;
                    checks.push(Check::abs("symmetry z", 0.0, sym.z_score, SYMMETRY_Z_MAX));
                    symmetry = Some(sym);
                }
                if args.blocks > 0 {
                    let mut cfg = RegenerationConfig::new(y_star, args.r, args.blocks, global.seed);
                    cfg.shards = args.sampler.shards;
                    let bm = block_moment_check(&regeneration_blocks(&model, &cfg)?, alpha)?;
                    checks.push(Check::abs(
                        "E|B|^alpha",
                        1.0,
                        bm.mean,
                        BLOCK_SE_MAX * bm.std_err,
                    ));
                    block_moment = Some(bm);
                }
                estimate = Some(est);
            }
            Regime::Light => {}
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    let out = ReportOutput {
        theory,
        sampler: method,
        estimate,
        symmetry,
        block_moment,
        checks,
        pass,
    };
    let cfg = run_config(Some(&args.model), global, args);
    emit(args.out.as_deref(), "report", &cfg, out)
}
