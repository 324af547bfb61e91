//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p gshift --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gshift::bodies::ConvexBody;
use gshift::bounds::{extremal_slab, power_envelope, ratio_bounds_set, whiten, LayeredUnimodal};
use gshift::kernels::{ratio_r, slab_g, slab_lambda, std_normal_cdf, ExtendedHalfWidth};
use gshift::linalg::{cholesky, Covariance, Direction, Matrix};
use gshift::verify::{
    estimate_conditional_center, estimate_power, estimate_shift_prob, oracle_ball, oracle_slab_center,
    verify_derivative_identity, verify_sandwich, Integrand,
};

const Z: f64 = 4.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Direction {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Ok(d) = Direction::normalize(&v) {
            return d;
        }
    }
}

/// `BᵀB/n + I/2` with uniform entries, which is comfortably conditioned.
fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Covariance {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let b = Matrix::from_rows(&rows).unwrap();
    let mut s = b.transpose().matmul(&b).unwrap().to_rows();
    for (i, row) in s.iter_mut().enumerate() {
        for x in row.iter_mut() {
            *x *= 2.0 / n as f64;
        }
        row[i] += 0.5;
    }
    Covariance::new(Matrix::from_rows(&s).unwrap()).unwrap()
}

fn hw(a: f64) -> ExtendedHalfWidth {
    ExtendedHalfWidth::new(a).unwrap()
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [2, 5] {
        let id = Covariance::identity(n);
        let u = random_direction(&mut rng, n);
        for a in [0.25, 1.0, 3.0] {
            let body = extremal_slab(&id, &u, a).unwrap();
            for t in [0.0, 0.5, 1.0, 2.0, 4.0] {
                let exact = slab_g(hw(a), t).value / slab_g(hw(a), 0.0).value;
                let upper = ratio_bounds_set(&id, &body, &u, t).unwrap().upper;
                worst = worst.max((exact - upper).abs());
            }
        }
    }
    outcome(worst <= 1e-12, format!("max |g_a(t)/g_a(0) - upper| = {worst:.3e} over 30 cases"))
}

fn criterion_2() -> Outcome {
    let mut worst_step = f64::INFINITY;
    let mut worst_range = f64::INFINITY;
    for t in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let floor = (-0.5f64 * t * t).exp();
        let values: Vec<f64> = (0..200)
            .map(|k| ratio_r(t, hw(10.0 * k as f64 / 199.0)).unwrap().value())
            .collect();
        for w in values.windows(2) {
            worst_step = worst_step.min(w[1] - w[0]);
        }
        for &r in &values {
            worst_range = worst_range.min((r - floor).min(1.0 - r));
        }
    }
    outcome(
        worst_step >= -1e-12 && worst_range >= -1e-12,
        format!("min successive difference {worst_step:.3e}, min range margin {worst_range:.3e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut min_value = f64::INFINITY;
    let mut max_rise = f64::NEG_INFINITY;
    for a in [0.25, 1.0, 4.0] {
        let values: Vec<f64> = (1..=400).map(|k| slab_lambda(a, 10.0 * k as f64 / 400.0).unwrap()).collect();
        min_value = min_value.min(values.iter().copied().fold(f64::INFINITY, f64::min));
        for w in values.windows(2) {
            max_rise = max_rise.max(w[1] - w[0]);
        }
    }
    outcome(
        min_value >= -1e-12 && max_rise <= 1e-12,
        format!("min lambda {min_value:.3e}, max increase {max_rise:.3e}"),
    )
}

fn body_for(kind: usize, n: usize, rng: &mut ChaCha8Rng) -> (ConvexBody, &'static str) {
    let sn = (n as f64).sqrt();
    match kind {
        0 => (ConvexBody::lp_ball(n, 1.0, 1.2 * sn).unwrap(), "l1 ball"),
        1 => (ConvexBody::lp_ball(n, 2.0, sn).unwrap(), "l2 ball"),
        2 => (ConvexBody::lp_ball(n, f64::INFINITY, 1.3).unwrap(), "linf ball"),
        3 => {
            let d: Vec<f64> = (0..n).map(|_| 1.0 / rng.gen_range(0.8f64..2.0).powi(2)).collect();
            (ConvexBody::ellipsoid(Matrix::from_diagonal(&d)).unwrap(), "ellipsoid")
        }
        4 => {
            let normals: Vec<Vec<f64>> = (0..8).map(|_| random_direction(rng, n).as_slice().to_vec()).collect();
            (ConvexBody::h_polytope(normals, vec![1.5; 8]).unwrap(), "8-constraint polytope")
        }
        _ => {
            let parts = vec![
                ConvexBody::lp_ball(n, 2.0, 1.2 * sn).unwrap(),
                ConvexBody::lp_ball(n, f64::INFINITY, 1.2).unwrap(),
            ];
            (ConvexBody::intersection(parts).unwrap(), "ball and box")
        }
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..20 {
        let n = [2, 4, 6][i % 3];
        let sigma = if i % 2 == 0 { Covariance::identity(n) } else { random_spd(&mut rng, n) };
        let (body, name) = body_for(i % 6, n, &mut rng);
        let u = random_direction(&mut rng, n);
        let t = if (i / 2) % 2 == 0 { 0.5 } else { 1.5 };
        match verify_sandwich(&sigma, Integrand::Set(&body), &u, t, 1_000_000, Z, 400 + i as u64) {
            Ok(v) => {
                worst = worst.max(-v.lower_z).max(v.upper_z);
                if !v.pass {
                    failures.push(format!("#{i} {name} n={n} t={t}: lower_z={:.2} upper_z={:.2}", v.lower_z, v.upper_z));
                }
            }
            Err(e) => failures.push(format!("#{i} {name}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!("20 configurations, closest approach to a bound z = {worst:.2}{}", fail_list(&failures)),
    )
}

fn fail_list(failures: &[String]) -> String {
    if failures.is_empty() {
        String::new()
    } else {
        format!("; failures: {}", failures.join(" | "))
    }
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut seed = 500;
    for n in [2, 3, 5] {
        let id = Covariance::identity(n);
        let u = Direction::axis(n, 0);
        for r in [1.0, 2.0] {
            let ball = ConvexBody::lp_ball(n, 2.0, r).unwrap();
            for t in [0.0, 1.0] {
                seed += 1;
                let exact = oracle_ball(n, r, t).unwrap();
                let est = estimate_shift_prob(&id, &ball, &u, t, 10_000_000, seed).unwrap();
                let z = (est.value - exact) / est.stderr;
                worst = worst.max(z.abs());
                if z.abs() > Z {
                    failures.push(format!("n={n} R={r} t={t}: z={z:.2}"));
                }
            }
        }
    }
    let closed = oracle_ball(2, 2.0, 0.0).unwrap();
    let closed_err = (closed - (1.0 - (-2.0f64).exp())).abs();
    if closed_err > 1e-9 {
        failures.push(format!("closed form off by {closed_err:.3e}"));
    }
    outcome(
        failures.is_empty(),
        format!("12 quadrature vs MC comparisons, worst |z| = {worst:.2}; 1-e^-2 error {closed_err:.1e}{}", fail_list(&failures)),
    )
}

fn criterion_6() -> Outcome {
    let u2 = Direction::axis(2, 0);
    let slab = LayeredUnimodal::indicator(ConvexBody::slab(u2.clone(), 1.0).unwrap());
    let u3 = Direction::normalize(&[1.0, 2.0, -1.0]).unwrap();
    let layers = LayeredUnimodal::new(vec![
        (1.0, ConvexBody::lp_ball(3, 2.0, 2.0).unwrap()),
        (2.0, ConvexBody::lp_ball(3, f64::INFINITY, 0.8).unwrap()),
    ])
    .unwrap();
    let mut failures = Vec::new();
    let mut seed = 600;
    for (name, w, u) in [("slab", &slab, &u2), ("two-layer", &layers, &u3)] {
        for t in [0.5, 1.0] {
            seed += 1;
            let r = verify_derivative_identity(w, u, t, 1_000_000, 1e-2, Z, seed).unwrap();
            if !r.pass() {
                failures.push(format!(
                    "{name} t={t}: |diff|={:.3e} tol={:.3e} floor z=({:.2}, {:.2})",
                    r.difference.abs(),
                    r.tolerance,
                    r.floor_z_finite_difference,
                    r.floor_z_direct
                ));
            }
        }
    }
    outcome(failures.is_empty(), format!("4 configurations{}", fail_list(&failures)))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..10 {
        let n = 2 + i % 3;
        let t = [0.5, 1.0, 1.5, 2.0][i % 4];
        let u = random_direction(&mut rng, n);
        let (body, name) = if i < 2 {
            (ConvexBody::slab(u.clone(), 1.0).unwrap(), "slab")
        } else {
            body_for(i % 6, n, &mut rng)
        };
        let est = match estimate_conditional_center(&body, &u, t, 1_000_000, 700 + i as u64) {
            Ok(e) => e,
            Err(e) => {
                failures.push(format!("#{i} {name}: {e}"));
                continue;
            }
        };
        if est.hits < 10_000 {
            failures.push(format!("#{i} {name}: only {} hits", est.hits));
        }
        let z = (est.value - t) / est.stderr;
        worst = worst.max(z);
        if z > Z {
            failures.push(format!("#{i} {name} t={t}: center {:.4} exceeds t by z={z:.2}", est.value));
        }
        if name == "slab" {
            let exact = oracle_slab_center(1.0, t).unwrap();
            let zs = (est.value - exact) / est.stderr;
            if zs.abs() > Z {
                failures.push(format!("#{i} slab closed form: z={zs:.2}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("10 configurations, max (center - t)/stderr = {worst:.2}{}", fail_list(&failures)),
    )
}

fn criterion_8() -> Outcome {
    let id = Covariance::identity(2);
    let u = Direction::axis(2, 0);
    let slab = ConvexBody::slab(u.clone(), 1.0).unwrap();
    let alpha = 2.0 * (1.0 - std_normal_cdf(1.0));
    let mut failures = Vec::new();
    for (i, theta) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let env = power_envelope(&id, &slab, &u, theta, alpha).unwrap();
        if env.beta_lower < alpha - 1e-12 || env.beta_upper < env.beta_lower - 1e-12 {
            failures.push(format!("theta={theta}: chain broken"));
        }
        let est = estimate_power(&id, &slab, &u, theta, 1_000_000, 800 + i as u64).unwrap();
        if est.value < env.beta_lower - Z * est.stderr || est.value > env.beta_upper + Z * est.stderr {
            failures.push(format!(
                "theta={theta}: {:.5} outside [{:.5}, {:.5}]",
                est.value, env.beta_lower, env.beta_upper
            ));
        }
    }
    outcome(failures.is_empty(), format!("3 shifts, alpha = {alpha:.10}{}", fail_list(&failures)))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = 2 + i % 4;
        let sigma = random_spd(&mut rng, n);
        let (body, _) = body_for(i % 6, n, &mut rng);
        let u = random_direction(&mut rng, n);
        let t = rng.gen_range(0.0..3.0);
        let direct = ratio_bounds_set(&sigma, &body, &u, t).unwrap();
        let w = whiten(&sigma, &body, &u, t).unwrap();
        let white = ratio_bounds_set(&Covariance::identity(n), &w.target, &w.direction, w.t).unwrap();
        worst = worst
            .max((direct.lower - white.lower).abs())
            .max((direct.upper - white.upper).abs());
    }
    outcome(worst <= 1e-10, format!("20 configurations, max difference {worst:.3e}"))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut chol, mut isqrt) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let n = 1 + i % 8;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let a = Matrix::from_rows(&rows).unwrap();
        let s = a.transpose().matmul(&a).unwrap().to_rows();
        let s: Vec<Vec<f64>> = s
            .into_iter()
            .enumerate()
            .map(|(k, mut r)| {
                r[k] += 1.0;
                r
            })
            .collect();
        let sigma = Covariance::new(Matrix::from_rows(&s).unwrap()).unwrap();
        let m = sigma.matrix();
        let l = cholesky(m).unwrap();
        chol = chol.max(l.matmul(&l.transpose()).unwrap().sub(m).frobenius_norm());
        let w = sigma.inv_sqrt();
        let whitened = w.matmul(m).unwrap().matmul(w).unwrap();
        isqrt = isqrt.max(whitened.sub(&Matrix::identity(n)).frobenius_norm());
    }
    outcome(
        chol <= 1e-10 && isqrt <= 1e-10,
        format!("100 matrices, Cholesky residual {chol:.3e}, whitening residual {isqrt:.3e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("extremal slab attains the upper bound", criterion_1),
        ("r_t(a) nondecreasing in a and within its range", criterion_2),
        ("lambda_a(t) nonnegative and nonincreasing", criterion_3),
        ("sandwich verdicts on 20 seeded configurations", criterion_4),
        ("ball quadrature oracle agrees with Monte Carlo", criterion_5),
        ("derivative identity and floor", criterion_6),
        ("conditional center never exceeds t", criterion_7),
        ("power envelope contains Monte Carlo power", criterion_8),
        ("whitening leaves the bounds unchanged", criterion_9),
        ("Cholesky and inverse square root residuals", criterion_10),
    ];
    let mut all = true;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let o = run();
        all &= o.pass;
        println!(
            "[{}] criterion {}: {name} ({}) [{:.2}s]",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            started.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
