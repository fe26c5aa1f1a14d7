//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ptrs_core::cost::{
    cost_boxed, cost_numeric, cost_quasipoly, cost_vs_spacing, evaluate, CostMethod,
};
use ptrs_core::io::write_sweep_csv;
use ptrs_core::model::ExpModel;
use ptrs_core::pattern::{FirstPilot, PilotPattern};
use ptrs_core::planner::{omega_eta_of_fc, plan, OmegaEtaModel, PlanRequest};
use ptrs_core::reference::ANCHORS;
use ptrs_core::sim::{run, SimMode, SimScenario};
use ptrs_core::wiener::{
    coefficients_closed, coefficients_numeric, invert_pilot_matrix_closed, kms_matrix,
    kms_tridiagonal, pilot_matrix,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Random pattern with `3 <= N_P <= max_np` and `N <= max_n`.
fn random_pattern(rng: &mut ChaCha8Rng, max_np: usize, max_n: usize) -> PilotPattern {
    let np = rng.random_range(3..=max_np);
    let delta = rng.random_range(1..=(max_n - 1) / (np - 1));
    let p1 = rng.random_range(1..=delta.min(max_n - (np - 1) * delta));
    let room = max_n - p1 - (np - 1) * delta;
    let extra = rng.random_range(0..=room.min(delta - 1));
    PilotPattern::new(p1 + (np - 1) * delta + extra, p1, delta, np).unwrap()
}

fn matrix_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_kms = 0.0f64;
    let mut worst_inv = 0.0f64;
    let mut worst_rel = 0.0f64;
    for _ in 0..200 {
        let np = rng.random_range(2..=64);
        // Same (a, b, delta) domain as the coefficient invariants.
        let a = rng.random_range(1e-4..0.1);
        let b = rng.random_range(0.5..0.995);
        let delta = rng.random_range(1..=200);
        let m = ExpModel::new(a, b).unwrap();
        let lambda = m.lambda(delta);
        let kms = kms_matrix(lambda, np) * kms_tridiagonal(lambda, np);
        worst_kms =
            worst_kms.max((kms - DMatrix::identity(np, np) * (1.0 - lambda * lambda)).amax());

        let p = PilotPattern::new(1 + (np - 1) * delta, 1, delta, np).unwrap();
        let closed = invert_pilot_matrix_closed(&m, &p).unwrap();
        let r = pilot_matrix(&m, &p);
        let dense = r.clone().lu().try_inverse().unwrap();
        let sm = (&closed * &r - DMatrix::identity(np, np)).amax();
        let diff = (&closed - &dense).amax();
        worst_rel = worst_rel.max(diff / dense.amax());
        worst_inv = worst_inv.max(sm).max(diff);
    }
    let t = start.elapsed();
    let worst = worst_kms.max(worst_inv);
    outcome(
        worst < 1e-9 && t < Duration::from_secs(5),
        format!("200 instances, max |A X - (1-l^2) I| = {worst_kms:.2e}, max inverse error = {worst_inv:.2e} (relative {worst_rel:.2e}), {:.2} s", secs(t)),
    )
}

fn coefficient_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = random_pattern(&mut rng, 82, 4096);
        let m = ExpModel::new(rng.random_range(1e-3..0.05), rng.random_range(0.5..0.995)).unwrap();
        let closed = coefficients_closed(&m, &p).unwrap();
        let dense = coefficients_numeric(&m, &p).unwrap();
        worst = worst.max(closed.max_abs_diff(&dense));
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-9 && t < Duration::from_secs(30),
        format!(
            "100 instances (N <= 4096, N_P <= 82), max |w_closed - w_dense| = {worst:.2e}, {:.2} s",
            secs(t)
        ),
    )
}

fn triple_cost_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_boxed, mut worst_quasi) = (0.0f64, 0.0f64);
    let mut count = 0;
    while count < 200 {
        let n = [512, 1024, 4096][rng.random_range(0..3)];
        let delta = rng.random_range(2..=120);
        let p1 = if rng.random_bool(0.5) {
            1
        } else {
            (delta / 2).max(1)
        };
        let p = PilotPattern::uniform(n, p1, delta).unwrap();
        if p.n_pilots < 3 {
            continue;
        }
        let m = ExpModel::new(rng.random_range(0.002..0.02), rng.random_range(0.8..0.99)).unwrap();
        let numeric = cost_numeric(&m, &p).unwrap();
        let rel = |v: f64| ((v - numeric) / numeric).abs();
        worst_boxed = worst_boxed.max(rel(cost_boxed(&m, &p).unwrap()));
        worst_quasi = worst_quasi.max(rel(cost_quasipoly(&m, &p).unwrap()));
        count += 1;
    }
    outcome(
        worst_boxed < 1e-6 && worst_quasi < 1e-6,
        format!(
            "200 instances, max relative gap: boxed {worst_boxed:.2e}, quasipoly {worst_quasi:.2e}"
        ),
    )
}

fn worked_plan() -> Outcome {
    let start = Instant::now();
    let coefs = OmegaEtaModel {
        omega_coef: 0.0453 / 9e22,
        eta_coef: 0.0195 / 9e22,
    };
    let req = PlanRequest {
        fc_hz: 300e9,
        n_total: 4096,
        max_cost_pct: 2.5,
        delta0: 20,
    };
    let p = plan(&req, &coefs).unwrap();
    let t = start.elapsed();
    let overhead = p.overhead_pct.unwrap_or(f64::NAN);
    let pass = (p.j_at_delta0_pct - 0.9255).abs() <= 1e-3
        && p.delta_pf == 54
        && (overhead - 1.85).abs() <= 0.01
        && p.overhead_at_delta0_pct == 5.0
        && p.feasible
        && t < Duration::from_secs(1);
    outcome(
        pass,
        format!(
            "J(20) = {:.4}%, delta_PF = {}, overhead {:.4}%, overhead at delta0 {}%, {:.3} ms",
            p.j_at_delta0_pct,
            p.delta_pf,
            overhead,
            p.overhead_at_delta0_pct,
            1e3 * secs(t)
        ),
    )
}

fn quadratic_model() -> Outcome {
    let (w, e) = omega_eta_of_fc(300e9);
    outcome(
        (w - 0.04527).abs() <= 1e-4 && (e - 0.01953).abs() <= 1e-4,
        format!("omega(300 GHz) = {w:.5}, eta(300 GHz) = {e:.5}"),
    )
}

fn spot_values() -> Outcome {
    let j = |a: f64, b: f64| {
        let m = ExpModel::new(a, b).unwrap();
        let p = PilotPattern::uniform(4096, 1, 49).unwrap();
        100.0 * cost_boxed(&m, &p).unwrap() / 4096.0
    };
    let (lo, hi) = (j(7.36e-3, 0.977), j(7.81e-3, 0.8225));
    outcome(
        (lo - 0.271).abs() <= 0.03 && (hi - 2.274).abs() <= 0.15,
        format!(
            "J(49) = {lo:.4}% at 100 GHz (0.271 +/- 0.03), {hi:.4}% at 300 GHz (2.274 +/- 0.15)"
        ),
    )
}

fn monotonicity() -> Outcome {
    let deltas: Vec<usize> = (0..10)
        .map(|i| (1.0 + 119.0 * i as f64 / 9.0).round() as usize)
        .collect();
    let bs: Vec<f64> = (0..10).map(|i| 0.8 + 0.19 * i as f64 / 9.0).collect();
    // Round-off floor for J near zero, in % of N. A NaN counts as a violation.
    const TOL: f64 = 1e-9;
    let mut violations = 0;
    let mut checks = 0;
    for a in [0.0072, 0.00736, 0.0078, 0.00781] {
        let grid: Vec<Vec<f64>> = bs
            .iter()
            .map(|&b| {
                let m = ExpModel::new(a, b).unwrap();
                cost_vs_spacing(&m, 4096, FirstPilot::At(1), &deltas, CostMethod::Boxed)
                    .iter()
                    .map(|r| r.j_pct)
                    .collect()
            })
            .collect();
        for (bi, row) in grid.iter().enumerate() {
            for di in 0..deltas.len() {
                if di + 1 < deltas.len() {
                    checks += 1;
                    violations += usize::from(!(row[di + 1] >= row[di] - TOL));
                }
                if bi + 1 < bs.len() {
                    checks += 1;
                    violations += usize::from(!(grid[bi + 1][di] <= row[di] + TOL));
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("delta grid {deltas:?} x 10 floors in [0.8, 0.99], 4 decay rates: {violations} violations in {checks} checks"),
    )
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for i in 0..10usize {
        let (fc, a, b) = ANCHORS[i % ANCHORS.len()];
        let delta = [10, 25, 50][i % 3];
        let scenario = SimScenario {
            pattern: PilotPattern::uniform(512, 1, delta).unwrap(),
            model: ExpModel::new(a, b).unwrap(),
            mode: SimMode::Surrogate,
            physical: None,
            trials: 10_000,
            seed: 1000 + i as u64,
            snr_db: None,
        };
        let r = run(&scenario).unwrap();
        let z = r.z_score.unwrap_or(f64::INFINITY);
        worst = worst.max(z.abs());
        if z.abs() >= 3.0 {
            failed.push(format!("{:.0} GHz/delta {delta}: z = {z:.2}", fc / 1e9));
        }
    }
    let t = start.elapsed();
    outcome(
        failed.is_empty() && t < Duration::from_secs(120),
        format!(
            "10 scenarios x 1e4 trials, max |z| = {worst:.2}, {:.1} s{}",
            secs(t),
            if failed.is_empty() {
                String::new()
            } else {
                format!("; outside 3 stderr: {}", failed.join(", "))
            }
        ),
    )
}

fn all_pilots() -> Outcome {
    let m = ExpModel::new(0.00736, 0.977).unwrap();
    let p = PilotPattern::uniform(512, 1, 1).unwrap();
    let analytic = evaluate(&m, &p, CostMethod::Boxed).unwrap().j_pct;
    let r = run(&SimScenario {
        pattern: p,
        model: m,
        mode: SimMode::Surrogate,
        physical: None,
        trials: 200,
        seed: 9,
        snr_db: None,
    })
    .unwrap();
    outcome(
        analytic < 1e-6 && r.empirical_j_pct < 1e-6,
        format!(
            "delta = 1: analytic {analytic:.2e}%, empirical {:.2e}%",
            r.empirical_j_pct
        ),
    )
}

fn determinism() -> Outcome {
    let deltas: Vec<usize> = (1..=109).step_by(12).collect();
    let sweep = |threads: usize| -> Vec<u8> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let mut buf = Vec::new();
            for (_, a, b) in ANCHORS {
                let m = ExpModel::new(a, b).unwrap();
                for first in [FirstPilot::At(1), FirstPilot::Centered] {
                    let rows = cost_vs_spacing(&m, 4096, first, &deltas, CostMethod::Boxed);
                    write_sweep_csv(&mut buf, &rows).unwrap();
                }
            }
            let m = ExpModel::new(0.0078, 0.82).unwrap();
            let rows = cost_vs_spacing(
                &m,
                512,
                FirstPilot::At(1),
                &[1, 2, 300, 600],
                CostMethod::Quasipoly,
            );
            write_sweep_csv(&mut buf, &rows).unwrap();
            buf
        })
    };
    let reference = sweep(1);
    let same = [1, 2, 8].iter().all(|&t| sweep(t) == reference);
    outcome(
        same,
        format!(
            "{} bytes of sweep CSV identical across repeated runs on 1, 2 and 8 threads",
            reference.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("matrix identities", matrix_identities),
        (
            "closed-form coefficients vs dense solve",
            coefficient_equivalence,
        ),
        (
            "numeric / boxed / quasi-polynomial cost agreement",
            triple_cost_agreement,
        ),
        ("worked planning example", worked_plan),
        ("quadratic omega/eta model", quadratic_model),
        ("spot costs at delta = 49", spot_values),
        ("monotonicity grid", monotonicity),
        ("Monte-Carlo vs analytic cost", monte_carlo),
        ("zero cost with every sample a pilot", all_pilots),
        ("deterministic sweeps", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failures += usize::from(!o.pass);
        println!(
            "{} [{:>2}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
