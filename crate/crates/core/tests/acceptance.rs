//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so every line is printed; exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use jm_core::closed_form::{boundary_point_exact, eval_a, eval_t, moments_exact, povm_bound_eta};
use jm_core::measurement::{haar_unitary, outcome_distribution};
use jm_core::oracle::{
    estimate_moments, optimality_probe, probe_perturbation, reconstruct_simulated_povm,
    Perturbation,
};
use jm_core::region::{eta_max, mixture, probe_nonconvexity, probe_nonconvexity_on_grid};
use jm_core::stats::chi_square_gof_pooled;
use jm_core::{
    boundary_point, export_curve, is_jointly_measurable, make_noisy_pvm, simulate_measurement,
    ComplexUnitVector, Dimension, EvalMode, NoiseParams, Outcome, QuantumState, Threshold,
};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIGMAS: f64 = 5.0;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn dim(d: usize) -> Dimension {
    Dimension::new(d).unwrap()
}

fn th(t: f64) -> Threshold {
    Threshold::new(t).unwrap()
}

fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn harmonic_oracle(d: usize) -> BigRational {
    let mut h = BigRational::zero();
    for k in 1..=d as i64 {
        h += ratio(1, k);
    }
    h
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    if elapsed <= budget {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, budget {budget:?}"))
    }
}

fn exact_limits() -> Verdict {
    let start = Instant::now();
    for d in 2..=50usize {
        let (total, first) =
            moments_exact(dim(d), &BigRational::zero()).map_err(|e| e.to_string())?;
        let h = harmonic_oracle(d);
        if !total.is_one() {
            return Err(format!("T_{d}(0) = {total}"));
        }
        let want = &h / BigRational::from_integer(BigInt::from(d));
        if first != want {
            return Err(format!("A_{d}(0) = {first}, expected {want}"));
        }
        let (eta, p) =
            boundary_point_exact(dim(d), &BigRational::zero()).map_err(|e| e.to_string())?;
        let want = (&h - BigRational::one()) / BigRational::from_integer(BigInt::from(d - 1));
        if !eta.is_one() || p != want {
            return Err(format!("d={d}: boundary at t=0 is ({eta}, {p})"));
        }
    }
    let p2 = boundary_point_exact(dim(2), &BigRational::zero())
        .unwrap()
        .1;
    let p3 = boundary_point_exact(dim(3), &BigRational::zero())
        .unwrap()
        .1;
    if p2 != ratio(1, 2) || p3 != ratio(5, 12) {
        return Err(format!("p0(2) = {p2}, p0(3) = {p3}"));
    }
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "d = 2..50 exact; p0(2) = {p2}, p0(3) = {p3}; {elapsed:.2?}"
    ))
}

fn simple_regime() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for d in 2..=30 {
        for k in 1..=50 {
            let p = 0.5 + 0.5 * k as f64 / 51.0;
            let want = d as f64 * (1.0 - p).powi(d as i32 - 1);
            let got = eta_max(dim(d), p).map_err(|e| e.to_string())?;
            worst = worst.max((got - want).abs() / want);
        }
    }
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(1))?;
    if worst > 1e-12 {
        return Err(format!("max relative error {worst:e}"));
    }
    Ok(format!(
        "max relative error {worst:e} over 29 x 50 points; {elapsed:.2?}"
    ))
}

fn monte_carlo() -> Verdict {
    let mut report = Vec::new();
    for d in [2usize, 3, 5] {
        let start = Instant::now();
        let mut worst: f64 = 0.0;
        for k in 1..=19u64 {
            let t = th(k as f64 * 0.05);
            let (mt, ma) = estimate_moments(dim(d), t, 1_000_000, 1000 * d as u64 + k)
                .map_err(|e| e.to_string())?;
            let st = mt.sigmas_from(eval_t(dim(d), t, EvalMode::ExactRational));
            let sa = ma.sigmas_from(eval_a(dim(d), t, EvalMode::ExactRational));
            worst = worst.max(st).max(sa);
        }
        let elapsed = start.elapsed();
        within_budget(elapsed, Duration::from_secs(60))?;
        if worst > SIGMAS {
            return Err(format!("d={d}: worst deviation {worst:.2}σ"));
        }
        report.push(format!("d={d}: worst {worst:.2}σ in {elapsed:.1?}"));
    }
    Ok(report.join("; "))
}

fn povm_structure() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    for d in [2usize, 3] {
        for (k, t) in [0.2, 0.5, 0.75].into_iter().enumerate() {
            let t = th(t);
            let est =
                reconstruct_simulated_povm(dim(d), t, 1_000_000, 77 + 10 * d as u64 + k as u64)
                    .map_err(|e| e.to_string())?;
            let total = eval_t(dim(d), t, EvalMode::ExactRational);
            let first = eval_a(dim(d), t, EvalMode::ExactRational);
            let off = (total - first) / (d as f64 - 1.0);
            let target = DMatrix::from_fn(d, d, |i, j| {
                let v = match (i, j) {
                    (0, 0) => first,
                    (i, j) if i == j => off,
                    _ => 0.0,
                };
                Complex64::new(v, 0.0)
            });
            let s = est.element(Outcome::Click(0)).max_sigmas_from(&target);
            let sum = est.total.max_sigmas_from(&DMatrix::identity(d, d));
            worst = worst.max(s);
            worst_sum = worst_sum.max(sum);
        }
    }
    if worst > SIGMAS || worst_sum > SIGMAS {
        return Err(format!("N_0 worst {worst:.2}σ, sum worst {worst_sum:.2}σ"));
    }
    Ok(format!(
        "N_0 worst entry {worst:.2}σ, Σ N_a vs identity worst {worst_sum:.2}σ"
    ))
}

fn end_to_end() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut passed = 0;
    let mut failures = Vec::new();
    for trial in 0..100u64 {
        let d = rng.random_range(2..=5usize);
        let t = th(rng.random_range(0.0..0.8));
        let state = match trial % 3 {
            0 => QuantumState::random(dim(d), &mut rng),
            1 => {
                let v: Vec<Complex64> = (0..d)
                    .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect();
                QuantumState::pure(&ComplexUnitVector::normalized(v).unwrap())
            }
            _ => QuantumState::maximally_mixed(dim(d)),
        };
        let u = haar_unitary(dim(d), &mut rng);
        let counts =
            simulate_measurement(&state, &u, t, 100_000, trial).map_err(|e| e.to_string())?;
        let point = boundary_point(dim(d), t, EvalMode::Float64).map_err(|e| e.to_string())?;
        let pvm = make_noisy_pvm(dim(d), &u, point.params().unwrap()).map_err(|e| e.to_string())?;
        let probs = outcome_distribution(&pvm, &state).map_err(|e| e.to_string())?;
        match chi_square_gof_pooled(&counts.counts, &probs) {
            Ok(test) if test.p_value > 1e-3 => passed += 1,
            Ok(test) => failures.push(format!(
                "#{trial} d={d} t={:.3} p={:.1e}",
                t.get(),
                test.p_value
            )),
            Err(e) => failures.push(format!("#{trial}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(300))?;
    let summary = format!("{passed}/100 triples pass at α = 1e-3 in {elapsed:.1?}");
    if passed >= 98 {
        Ok(if failures.is_empty() {
            summary
        } else {
            format!("{summary}; rejected: {}", failures.join(", "))
        })
    } else {
        Err(format!("{summary}; rejected: {}", failures.join(", ")))
    }
}

fn optimality() -> Verdict {
    let mut report = Vec::new();
    for (d, t) in [(2usize, 0.6), (3, 0.4)] {
        let probe = optimality_probe(dim(d), th(t), 200_000, 100, 31 + d as u64)
            .map_err(|e| e.to_string())?;
        if probe.trials.len() < 90 {
            return Err(format!(
                "d={d}: only {} calibrated trials",
                probe.trials.len()
            ));
        }
        if !probe.passes(SIGMAS) {
            return Err(format!(
                "d={d}: a perturbation exceeds the boundary by {:.2}σ",
                probe.max_gap_sigmas()
            ));
        }
        let swap = probe_perturbation(
            dim(d),
            th(t),
            Perturbation::CapSwap { measure: 0.1 },
            200_000,
            5,
        )
        .map_err(|e| e.to_string())?;
        let shortfall = swap.paired_gap_sigmas();
        if shortfall >= -SIGMAS {
            return Err(format!(
                "d={d}: misassigning perturbation only {shortfall:.2}σ short"
            ));
        }
        report.push(format!(
            "(d={d}, t={t}): max gap {:+.2}σ over {} trials, cap swap {:.1}σ short",
            probe.max_gap_sigmas(),
            probe.trials.len(),
            -shortfall
        ));
    }
    Ok(report.join("; "))
}

fn figure_properties() -> Verdict {
    let dims = [2usize, 3, 5, 10, 30];
    for &d in &dims {
        let curve = export_curve(dim(d), 200).map_err(|e| e.to_string())?;
        let p0 = boundary_point_exact(dim(d), &BigRational::zero())
            .unwrap()
            .1
            .to_f64()
            .unwrap();
        let mut pts: Vec<(f64, f64)> = curve
            .samples
            .iter()
            .filter(|s| s.p >= p0 - 1e-15)
            .map(|s| (s.p, s.eta))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = pts.windows(2).find(|w| w[1].1 > w[0].1 + 1e-13) {
            return Err(format!("d={d}: eta rises from {:?} to {:?}", w[0], w[1]));
        }
    }
    for p in [0.55, 0.65, 0.75, 0.85, 0.95] {
        let etas: Vec<f64> = dims.iter().map(|&d| eta_max(dim(d), p).unwrap()).collect();
        if etas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(format!(
                "p={p}: eta_max not strictly decreasing in d: {etas:?}"
            ));
        }
    }
    let d = dim(30);
    let curve = export_curve(d, 200).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for s in &curve.samples {
        let exact_t = BigRational::from_float(s.t.get()).unwrap();
        let (eta, p) = boundary_point_exact(d, &exact_t).map_err(|e| e.to_string())?;
        worst = worst
            .max((eta.to_f64().unwrap() - s.eta).abs())
            .max((p.to_f64().unwrap() - s.p).abs());
    }
    if worst > 1e-8 {
        return Err(format!("d=30 float64 vs exact differ by {worst:e}"));
    }
    Ok(format!(
        "monotone for d in {dims:?}, ordered in d at 5 visibilities, d=30 float64 vs exact max diff {worst:e} over {} samples",
        curve.samples.len()
    ))
}

fn nonconvexity() -> Verdict {
    let mut report = Vec::new();
    for d in [3usize, 10] {
        let w = probe_nonconvexity(dim(d))
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("d={d}: no witness"))?;
        let outside = -w.verdict.margin;
        // Recheck the witness independently of the probe's own verdict.
        let (eta, p) = w.midpoint;
        let recheck = eta - eta_max(dim(d), p).unwrap();
        if outside <= 1e-4 || recheck <= 1e-4 {
            return Err(format!("d={d}: witness only {outside:e} outside"));
        }
        report.push(format!(
            "d={d}: t = {:.4}, {:.4} midpoint {outside:.2e} outside",
            w.first.t.get(),
            w.second.t.get()
        ));
    }
    if let Some(w) = probe_nonconvexity_on_grid(dim(2), 100).map_err(|e| e.to_string())? {
        return Err(format!("d=2: unexpected witness {:?}", w.midpoint));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..1000 {
        let d = dim(rng.random_range(2..=10usize));
        let draw = |rng: &mut ChaCha8Rng| {
            let p: f64 = rng.random();
            NoiseParams::new(eta_max(d, p).unwrap() * rng.random::<f64>(), p).unwrap()
        };
        let (a, b) = (draw(&mut rng), draw(&mut rng));
        let m = mixture(a, b, rng.random()).map_err(|e| e.to_string())?;
        if !is_jointly_measurable(d, m.params).unwrap().inside {
            return Err(format!(
                "pair #{i}: mixture {:?} leaves the region",
                m.params
            ));
        }
    }
    report.push("d=2 none on 100x100; 1000 mixtures inside".into());
    Ok(report.join("; "))
}

fn comparison_bound() -> Verdict {
    let mut tested = 0;
    for d in 2..=30 {
        for k in 0..=200 {
            let p = k as f64 / 200.0;
            let bound = povm_bound_eta(dim(d), p).unwrap();
            let top = eta_max(dim(d), p).unwrap();
            if bound > top {
                return Err(format!("d={d} p={p}: bound {bound} > eta_max {top}"));
            }
            if k > 0 && k < 200 && bound >= top {
                return Err(format!("d={d} p={p}: equality {bound}"));
            }
            tested += 1;
        }
    }
    Ok(format!("strict for p in (0,1) on {tested} (d, p) pairs"))
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--list`; ignore them.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [Criterion; 9] = [
        ("exact limits", exact_limits),
        ("simple-regime identity", simple_regime),
        ("Monte Carlo vs closed form", monte_carlo),
        ("simulated POVM structure", povm_structure),
        ("end-to-end sampler", end_to_end),
        ("optimality probe", optimality),
        ("boundary curve properties", figure_properties),
        ("non-convexity", nonconvexity),
        ("comparison bound", comparison_bound),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
