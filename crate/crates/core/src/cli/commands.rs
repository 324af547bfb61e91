//! The four commands: `bounds`, `power`, `verify` and `support`.

use std::fmt::Write as _;
use std::time::Instant;

use log::info;

use super::config::{FaultSpec, Problem, RunConfig, Suite, Target};
use super::float::format as fmt_f;
use super::report::{Check, Provenance, Record, ReportEnvelope};
use crate::bodies::{ConvexBody, Exactness};
use crate::bounds::{
    power_envelope, ratio_bounds_layered, ratio_bounds_set, whiten, whiten_layered, BoundReport,
    LayeredUnimodal, PowerReport,
};
use crate::error::{Error, Result};
use crate::kernels::{ratio_r, slab_lambda, ExtendedHalfWidth};
use crate::linalg::{dot, Direction};
use crate::verify::{
    estimate_conditional_center, estimate_power, estimate_shift_prob, estimate_size, oracle_ball,
    oracle_slab, oracle_slab_center, sandwich_verdict, verify_derivative_identity, verify_sandwich,
    Integrand, SeedRecord, BALL_ORACLE_TOL,
};

/// Slack allowed on analytic inequalities.
pub const ANALYTIC_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bounds,
    Power,
    Verify,
    Support,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bounds => "bounds",
            Command::Power => "power",
            Command::Verify => "verify",
            Command::Support => "support",
        }
    }
}

pub fn run(command: Command, config: &RunConfig) -> Result<ReportEnvelope> {
    match command {
        Command::Bounds => cmd_bounds(config),
        Command::Power => cmd_power(config),
        Command::Verify => cmd_verify(config),
        Command::Support => cmd_support(config),
    }
}

/// Seed for the `index`-th query of a run, so queries use unrelated streams.
pub fn query_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn require_target(problem: &Problem) -> Result<&Target> {
    problem
        .target
        .as_ref()
        .ok_or_else(|| Error::config("body", "this command needs a body or layers"))
}

fn require_body(problem: &Problem) -> Result<&ConvexBody> {
    match require_target(problem)? {
        Target::Body(b) => Ok(b),
        Target::Layers(_) => Err(Error::config("layers", "this command needs a body, not layers")),
    }
}

fn require_grid<'a>(grid: &'a [f64], name: &str) -> Result<&'a [f64]> {
    if grid.is_empty() {
        Err(Error::config(name, "at least one value is required"))
    } else {
        Ok(grid)
    }
}

fn apply_fault(report: BoundReport, fault: Option<FaultSpec>) -> BoundReport {
    match fault {
        Some(f) => BoundReport {
            upper: report.upper * f.upper_scale,
            ..report
        },
        None => report,
    }
}

fn bounds_for(problem: &Problem, target: &Target, t: f64) -> Result<BoundReport> {
    match target {
        Target::Body(b) => ratio_bounds_set(&problem.sigma, b, &problem.u, t),
        Target::Layers(w) => ratio_bounds_layered(&problem.sigma, w, &problem.u, t),
    }
}

/// One bound report per `t` in `t_grid`.
pub fn cmd_bounds(config: &RunConfig) -> Result<ReportEnvelope> {
    let started = Instant::now();
    let problem = config.validate()?;
    let target = require_target(&problem)?;
    let mut env = ReportEnvelope::new("bounds", config);
    for &t in require_grid(&config.t_grid, "t_grid")? {
        let report = apply_fault(bounds_for(&problem, target, t)?, config.fault);
        env.push(Record::Bound {
            provenance: Provenance::Analytic,
            report,
        });
    }
    env.time("total", started);
    Ok(env)
}

/// The power envelope per `θ`, and Monte Carlo power checked against it when
/// an `mc` block is present.
pub fn cmd_power(config: &RunConfig) -> Result<ReportEnvelope> {
    let started = Instant::now();
    let problem = config.validate()?;
    let mut env = ReportEnvelope::new("power", config);
    power_records(&mut env, config, &problem, false)?;
    env.time("total", started);
    Ok(env)
}

fn power_records(env: &mut ReportEnvelope, config: &RunConfig, problem: &Problem, need_mc: bool) -> Result<()> {
    let body = require_body(problem)?;
    let thetas = require_grid(&config.theta_grid, "theta_grid")?;
    if need_mc && config.mc.is_none() {
        return Err(Error::config("mc", "the power suite needs an mc block"));
    }
    let (alpha, alpha_stderr) = match (config.alpha, config.mc) {
        (Some(alpha), _) => (alpha, 0.0),
        (None, Some(mc)) => {
            let size = estimate_size(&problem.sigma, body, mc.samples, mc.seed)?;
            env.push(Record::Estimate {
                label: "size".into(),
                provenance: Provenance::MonteCarlo { seed: size.seed },
                estimate: size,
            });
            if !(size.value > 0.0 && size.value < 1.0) {
                return Err(Error::config(
                    "mc.samples",
                    format!("estimated size {} is degenerate; give alpha or more samples", size.value),
                ));
            }
            (size.value, size.stderr)
        }
        (None, None) => return Err(Error::config("alpha", "give alpha or an mc block to estimate it")),
    };
    for (i, &theta) in thetas.iter().enumerate() {
        let mut report = power_envelope(&problem.sigma, body, &problem.u, theta, alpha)?;
        if let Some(f) = config.fault {
            report.beta_lower = 1.0 - (1.0 - report.beta_lower) * f.upper_scale;
        }
        env.push(Record::Power {
            provenance: Provenance::Analytic,
            report,
        });
        env.push(Record::Check {
            provenance: Provenance::Analytic,
            check: power_chain_check(&report),
        });
        if let Some(mc) = config.mc {
            let est = estimate_power(&problem.sigma, body, &problem.u, theta, mc.samples, query_seed(mc.seed, i))?;
            env.push(Record::Estimate {
                label: format!("power theta={theta}"),
                provenance: Provenance::MonteCarlo { seed: est.seed },
                estimate: est,
            });
            // The envelope moves with α at unit rate at most, so an estimated
            // α adds its variance to that of the power estimate.
            let sigma = est.stderr.hypot(alpha_stderr);
            env.push(Record::Check {
                provenance: Provenance::MonteCarlo { seed: est.seed },
                check: within_band(
                    format!("power envelope theta={theta}"),
                    est.value,
                    &report,
                    sigma,
                    mc.z_threshold,
                ),
            });
        }
    }
    Ok(())
}

fn power_chain_check(report: &PowerReport) -> Check {
    let margin = (report.beta_lower - report.alpha)
        .min(report.beta_upper - report.beta_lower)
        .min(1.0 - report.beta_upper);
    Check {
        name: format!("power chain theta={}", report.theta),
        pass: margin >= -ANALYTIC_SLACK,
        value: margin,
        reference: 0.0,
        z: None,
        tolerance: ANALYTIC_SLACK,
    }
}

fn within_band(name: String, value: f64, report: &PowerReport, sigma: f64, z: f64) -> Check {
    let lo = report.beta_lower - z * sigma;
    let hi = report.beta_upper + z * sigma;
    // Signed distance outside the envelope in standard errors; 0 inside.
    let excess = if value < report.beta_lower {
        value - report.beta_lower
    } else if value > report.beta_upper {
        value - report.beta_upper
    } else {
        0.0
    };
    Check {
        name,
        pass: value >= lo && value <= hi,
        value,
        reference: if excess < 0.0 { report.beta_lower } else { report.beta_upper },
        z: Some(z_of(excess, sigma)),
        tolerance: z * sigma,
    }
}

fn z_of(diff: f64, sigma: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if sigma > 0.0 {
        diff / sigma
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// `δ*(v | A)` for every configured direction.
pub fn cmd_support(config: &RunConfig) -> Result<ReportEnvelope> {
    let started = Instant::now();
    let problem = config.validate()?;
    let body = require_body(&problem)?;
    if config.directions.is_empty() {
        return Err(Error::config("directions", "at least one direction is required"));
    }
    let mut env = ReportEnvelope::new("support", config);
    for (i, v) in config.directions.iter().enumerate() {
        let (support, witness) = body
            .support_with_witness(v)
            .map_err(|e| Error::config(format!("directions[{i}]"), e.to_string()))?;
        env.push(Record::Support {
            direction: v.clone(),
            provenance: Provenance::Analytic,
            support,
            witness,
        });
    }
    env.time("total", started);
    Ok(env)
}

/// Runs the configured suite. The report's status is the AND of its verdicts.
pub fn cmd_verify(config: &RunConfig) -> Result<ReportEnvelope> {
    let started = Instant::now();
    let problem = config.validate()?;
    let suite = config
        .suite
        .ok_or_else(|| Error::config("suite", "verify needs a suite"))?;
    let mut env = ReportEnvelope::new("verify", config);
    match suite {
        Suite::Sandwich => suite_sandwich(&mut env, config, &problem)?,
        Suite::Derivative => suite_derivative(&mut env, config, &problem)?,
        Suite::Conditional => suite_conditional(&mut env, config, &problem)?,
        Suite::Power => power_records(&mut env, config, &problem, true)?,
        Suite::Oracles => suite_oracles(&mut env, config, &problem)?,
        Suite::Kernels => suite_kernels(&mut env, config),
    }
    env.time("total", started);
    info!(
        "verify: {} verdicts, {} failed",
        env.status.verdicts, env.status.failed
    );
    Ok(env)
}

fn suite_sandwich(env: &mut ReportEnvelope, config: &RunConfig, problem: &Problem) -> Result<()> {
    let mc = config.mc()?;
    let target = require_target(problem)?;
    let integrand = match target {
        Target::Body(b) => Integrand::Set(b),
        Target::Layers(w) => Integrand::Layered(w),
    };
    for (i, &t) in require_grid(&config.t_grid, "t_grid")?.iter().enumerate() {
        let seed = query_seed(mc.seed, i);
        let mut verdict = verify_sandwich(&problem.sigma, integrand, &problem.u, t, mc.samples, mc.z_threshold, seed)?;
        if config.fault.is_some() {
            let bounds = apply_fault(verdict.bounds, config.fault);
            verdict = sandwich_verdict(bounds, verdict.numerator, verdict.denominator, mc.z_threshold)?;
        }
        env.push(Record::Sandwich {
            t,
            provenance: Provenance::MonteCarlo {
                seed: SeedRecord::new(seed, verdict.numerator.seed.stream),
            },
            verdict,
        });
    }
    Ok(())
}

fn layered_target(target: &Target) -> LayeredUnimodal {
    match target {
        Target::Body(b) => LayeredUnimodal::indicator(b.clone()),
        Target::Layers(w) => w.clone(),
    }
}

/// The derivative identity is stated for standard Gaussians, so each query is
/// whitened first; reports carry the whitened shift.
fn suite_derivative(env: &mut ReportEnvelope, config: &RunConfig, problem: &Problem) -> Result<()> {
    let mc = config.mc()?;
    let w = layered_target(require_target(problem)?);
    for (i, &t) in require_grid(&config.t_grid, "t_grid")?.iter().enumerate() {
        let white = whiten_layered(&problem.sigma, &w, &problem.u, t)?;
        let report = verify_derivative_identity(
            &white.target,
            &white.direction,
            white.t,
            mc.samples,
            config.derivative_step,
            mc.z_threshold,
            query_seed(mc.seed, i),
        )?;
        env.push(Record::Derivative {
            provenance: Provenance::MonteCarlo {
                seed: report.level.seed,
            },
            report,
        });
    }
    Ok(())
}

/// The slab half-width along `u` when `body` is a slab with normal `±u`.
fn aligned_slab(body: &ConvexBody, u: &Direction) -> Option<f64> {
    match body {
        ConvexBody::Slab(s) if (dot(s.normal().as_slice(), u.as_slice()).abs() - 1.0).abs() < 1e-12 => {
            Some(s.halfwidth())
        }
        _ => None,
    }
}

fn suite_conditional(env: &mut ReportEnvelope, config: &RunConfig, problem: &Problem) -> Result<()> {
    let mc = config.mc()?;
    let body = require_body(problem)?;
    let z = mc.z_threshold;
    for (i, &t) in require_grid(&config.t_grid, "t_grid")?.iter().enumerate() {
        let white = whiten(&problem.sigma, body, &problem.u, t)?;
        let est = estimate_conditional_center(&white.target, &white.direction, white.t, mc.samples, query_seed(mc.seed, i))?;
        let provenance = Provenance::MonteCarlo { seed: est.seed };
        env.push(Record::Estimate {
            label: format!("conditional center t={}", white.t),
            provenance,
            estimate: est,
        });
        let excess = est.value - white.t;
        env.push(Record::Check {
            provenance,
            check: Check {
                name: format!("center ceiling t={}", white.t),
                pass: excess <= z * est.stderr,
                value: est.value,
                reference: white.t,
                z: Some(z_of(excess, est.stderr)),
                tolerance: z * est.stderr,
            },
        });
        let slab = if problem.sigma.is_identity() {
            aligned_slab(body, &problem.u)
        } else {
            None
        };
        if let Some(a) = slab {
            let exact = oracle_slab_center(a, white.t)?;
            env.push(Record::Check {
                provenance,
                check: two_sided(format!("slab center t={}", white.t), est.value, exact, est.stderr, z),
            });
        }
    }
    Ok(())
}

fn two_sided(name: String, value: f64, reference: f64, stderr: f64, z: f64) -> Check {
    let zs = z_of(value - reference, stderr);
    Check {
        name,
        pass: zs.abs() <= z,
        value,
        reference,
        z: Some(zs),
        tolerance: z * stderr,
    }
}

fn suite_oracles(env: &mut ReportEnvelope, config: &RunConfig, problem: &Problem) -> Result<()> {
    let mc = config.mc()?;
    if !problem.sigma.is_identity() {
        return Err(Error::config("sigma", "the oracles suite needs identity sigma"));
    }
    let body = require_body(problem)?;
    let n = config.dim;
    enum Oracle {
        Slab { halfwidth: f64, along: f64 },
        Ball { radius: f64 },
    }
    let oracle = match body {
        ConvexBody::Slab(s) => Oracle::Slab {
            halfwidth: s.halfwidth(),
            along: dot(s.normal().as_slice(), problem.u.as_slice()).abs(),
        },
        ConvexBody::LpBall(b) if b.p() == 2.0 && n >= 2 => Oracle::Ball { radius: b.radius() },
        _ => {
            return Err(Error::config(
                "body",
                "the oracles suite needs a slab, or a Euclidean ball with dim >= 2",
            ))
        }
    };
    for (i, &t) in require_grid(&config.t_grid, "t_grid")?.iter().enumerate() {
        let (exact, provenance, label) = match oracle {
            Oracle::Slab { halfwidth, along } => (oracle_slab(halfwidth, t * along)?, Provenance::Analytic, "slab"),
            Oracle::Ball { radius } => (
                oracle_ball(n, radius, t)?,
                Provenance::Quadrature {
                    tolerance: BALL_ORACLE_TOL,
                },
                "ball",
            ),
        };
        let est = estimate_shift_prob(&problem.sigma, body, &problem.u, t, mc.samples, query_seed(mc.seed, i))?;
        env.push(Record::Estimate {
            label: format!("{label} mass t={t}"),
            provenance: Provenance::MonteCarlo { seed: est.seed },
            estimate: est,
        });
        env.push(Record::Check {
            provenance,
            check: two_sided(format!("{label} oracle t={t}"), est.value, exact, est.stderr, mc.z_threshold),
        });
        if let (Oracle::Ball { radius }, 2, 0.0) = (&oracle, n, t) {
            let closed = -(-0.5 * radius * radius).exp_m1();
            env.push(Record::Check {
                provenance: Provenance::Analytic,
                check: Check {
                    name: "ball quadrature vs closed form".into(),
                    pass: (exact - closed).abs() <= 1e-9,
                    value: exact,
                    reference: closed,
                    z: None,
                    tolerance: 1e-9,
                },
            });
        }
    }
    Ok(())
}

const KERNEL_T_GRID: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];
const KERNEL_A_POINTS: usize = 200;
const KERNEL_A_MAX: f64 = 10.0;
const LAMBDA_WIDTHS: [f64; 3] = [0.25, 1.0, 4.0];
const LAMBDA_POINTS: usize = 400;
const LAMBDA_T_MAX: f64 = 10.0;

fn analytic_check(name: String, worst_margin: f64) -> Record {
    Record::Check {
        provenance: Provenance::Analytic,
        check: Check {
            name,
            pass: worst_margin >= -ANALYTIC_SLACK,
            value: worst_margin,
            reference: 0.0,
            z: None,
            tolerance: ANALYTIC_SLACK,
        },
    }
}

/// Monotonicity and range of `r_t(a)` in `a`, and sign and monotonicity of
/// `λ_a(t)` in `t`. Each check records its worst margin.
fn suite_kernels(env: &mut ReportEnvelope, config: &RunConfig) {
    let ts: &[f64] = if config.t_grid.is_empty() {
        &KERNEL_T_GRID
    } else {
        &config.t_grid
    };
    for &t in ts {
        let values: Vec<f64> = (0..KERNEL_A_POINTS)
            .map(|k| KERNEL_A_MAX * k as f64 / (KERNEL_A_POINTS - 1) as f64)
            .chain(std::iter::once(f64::INFINITY))
            .map(|a| ratio_r(t, ExtendedHalfWidth::new(a).expect("grid is nonnegative")).map(|r| r.value()))
            .collect::<Result<_>>()
            .unwrap_or_else(|_| vec![f64::NAN]);
        let step = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        env.push(analytic_check(format!("r monotone in a, t={t}"), nan_to_fail(step)));
        let floor = (-0.5 * t * t).exp();
        let range = values
            .iter()
            .map(|&r| (r - floor).min(1.0 - r))
            .fold(f64::INFINITY, f64::min);
        env.push(analytic_check(format!("r within [exp(-t^2/2), 1], t={t}"), nan_to_fail(range)));
    }
    for a in LAMBDA_WIDTHS {
        let values: Vec<f64> = (1..=LAMBDA_POINTS)
            .map(|k| slab_lambda(a, LAMBDA_T_MAX * k as f64 / LAMBDA_POINTS as f64).unwrap_or(f64::NAN))
            .collect();
        let sign = values.iter().copied().fold(f64::INFINITY, f64::min);
        env.push(analytic_check(format!("lambda nonnegative, a={a}"), nan_to_fail(sign)));
        let step = values.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        env.push(analytic_check(format!("lambda nonincreasing in t, a={a}"), nan_to_fail(step)));
    }
}

fn nan_to_fail(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}

fn csv_line(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

fn exactness_label(e: Exactness) -> &'static str {
    match e {
        Exactness::Exact => "exact",
        Exactness::UpperBound => "upper_bound",
    }
}

/// The CSV hand-off for plotting. Columns depend on the command.
pub fn to_csv(env: &ReportEnvelope) -> String {
    let mut out = String::new();
    match env.command.as_str() {
        "bounds" => {
            csv_line(&mut out, &["t", "lower", "upper", "exponent_a", "exactness"].map(String::from));
            for r in &env.records {
                if let Record::Bound { report, .. } = r {
                    csv_line(
                        &mut out,
                        &[
                            fmt_f(report.t),
                            fmt_f(report.lower),
                            fmt_f(report.upper),
                            fmt_f(report.exponent_a.value()),
                            exactness_label(report.exponent_exactness).into(),
                        ],
                    );
                }
            }
        }
        "power" => {
            csv_line(&mut out, &["theta", "alpha", "beta_lower", "beta_upper"].map(String::from));
            for r in &env.records {
                if let Record::Power { report, .. } = r {
                    csv_line(
                        &mut out,
                        &[report.theta, report.alpha, report.beta_lower, report.beta_upper].map(fmt_f),
                    );
                }
            }
        }
        "support" => {
            csv_line(&mut out, &["direction", "value", "exactness"].map(String::from));
            for r in &env.records {
                if let Record::Support { direction, support, .. } = r {
                    let dir: Vec<String> = direction.iter().map(|&x| fmt_f(x)).collect();
                    csv_line(
                        &mut out,
                        &[dir.join(";"), fmt_f(support.value), exactness_label(support.exactness).into()],
                    );
                }
            }
        }
        _ => {
            csv_line(&mut out, &["kind", "label", "pass", "value", "z"].map(String::from));
            for r in &env.records {
                let row = match r {
                    Record::Sandwich { t, verdict, .. } => Some((
                        "sandwich",
                        format!("t={}", *t),
                        verdict.pass,
                        verdict.ratio,
                        (-verdict.lower_z).max(verdict.upper_z),
                    )),
                    Record::Derivative { report, .. } => Some((
                        "derivative",
                        format!("t={}", report.t),
                        report.pass(),
                        report.difference,
                        z_of(report.difference, report.combined_stderr),
                    )),
                    Record::Check { check, .. } => Some((
                        "check",
                        check.name.clone(),
                        check.pass,
                        check.value,
                        check.z.unwrap_or(f64::NAN),
                    )),
                    _ => None,
                };
                if let Some((kind, label, pass, value, z)) = row {
                    let mut line = String::new();
                    let _ = write!(line, "{kind},\"{label}\",{pass},{},{}", fmt_f(value), fmt_f(z));
                    out.push_str(&line);
                    out.push('\n');
                }
            }
        }
    }
    out
}
