//! Verification suites run by `jm verify`.

use std::fmt;

use jm_core::closed_form::{
    boundary_point_exact, eval_a, eval_t, harmonic, moments_exact, simple_regime_eta,
    unit_efficiency_visibility_exact,
};
use jm_core::oracle::{
    estimate_moments, optimality_probe, probe_perturbation, reconstruct_simulated_povm,
    Perturbation,
};
use jm_core::region::{eta_max, verify_monotone_visibility};
use jm_core::tolerance::MC_SIGMAS;
use jm_core::{
    analytic_simulated_povm, make_noisy_pvm, validate_povm, Dimension, EvalMode, OperatorMatrix,
    Outcome, Result, Threshold,
};
use num_rational::BigRational;
use num_traits::{One, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Closedform,
    Mc,
    Povm,
    Optimality,
    All,
}

pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{}] {}: {}", self.suite, self.name, self.detail)
    }
}

pub struct Config {
    pub d: Dimension,
    pub samples: usize,
    pub seed: u64,
}

pub fn run(suite: Suite, cfg: &Config) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Closedform {
        closed_form(cfg, &mut checks)?;
    }
    if all || suite == Suite::Mc {
        monte_carlo(cfg, &mut checks)?;
    }
    if all || suite == Suite::Povm {
        povm(cfg, &mut checks)?;
    }
    if all || suite == Suite::Optimality {
        optimality(cfg, &mut checks)?;
    }
    Ok(checks)
}

fn push(
    checks: &mut Vec<Check>,
    suite: &'static str,
    name: impl Into<String>,
    passed: bool,
    detail: String,
) {
    checks.push(Check {
        suite,
        name: name.into(),
        passed,
        detail,
    });
}

fn closed_form(cfg: &Config, checks: &mut Vec<Check>) -> Result<()> {
    const S: &str = "closedform";
    let dn = cfg.d.get();
    let (total, first) = moments_exact(cfg.d, &BigRational::zero())?;
    push(
        checks,
        S,
        format!("T_{dn}(0) = 1"),
        total.is_one(),
        format!("exact {total}"),
    );
    let want = harmonic(dn) / BigRational::from_integer(dn.into());
    push(
        checks,
        S,
        format!("A_{dn}(0) = H_{dn}/{dn}"),
        first == want,
        format!("exact {first}, expected {want}"),
    );
    let (_, p0) = boundary_point_exact(cfg.d, &BigRational::zero())?;
    let want = unit_efficiency_visibility_exact(cfg.d);
    push(
        checks,
        S,
        "visibility at unit efficiency = (H_d-1)/(d-1)",
        p0 == want,
        format!("exact {p0}"),
    );

    let mut worst: f64 = 0.0;
    for k in 1..=50 {
        let p = 0.5 + 0.5 * k as f64 / 51.0;
        let want = simple_regime_eta(cfg.d, p)?;
        worst = worst.max((eta_max(cfg.d, p)? - want).abs() / want);
    }
    push(
        checks,
        S,
        "eta_max = d(1-p)^(d-1) for p > 1/2",
        worst <= 1e-12,
        format!("max relative error {worst:e} on 50 points"),
    );

    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let t = Threshold::new(k as f64 / 200.0)?;
        for f in [eval_t, eval_a] {
            let diff =
                (f(cfg.d, t, EvalMode::Float64) - f(cfg.d, t, EvalMode::ExactRational)).abs();
            worst = worst.max(diff);
        }
    }
    push(
        checks,
        S,
        "float64 agrees with exact rational",
        worst <= 1e-8,
        format!("max abs difference {worst:e} on 200 thresholds"),
    );

    let monotone = verify_monotone_visibility(cfg.d);
    push(
        checks,
        S,
        "boundary visibility monotone in t",
        monotone.is_ok(),
        match monotone {
            Ok(()) => "constant on [0,1/d], non-decreasing on [1/d,1/2]".into(),
            Err(e) => e.to_string(),
        },
    );
    Ok(())
}

fn monte_carlo(cfg: &Config, checks: &mut Vec<Check>) -> Result<()> {
    const S: &str = "mc";
    for k in 1..20 {
        let t = Threshold::new(k as f64 * 0.05)?;
        let (mt, ma) = estimate_moments(cfg.d, t, cfg.samples, cfg.seed.wrapping_add(k))?;
        let (ct, ca) = (
            eval_t(cfg.d, t, EvalMode::Float64),
            eval_a(cfg.d, t, EvalMode::Float64),
        );
        let (st, sa) = (mt.sigmas_from(ct), ma.sigmas_from(ca));
        push(
            checks,
            S,
            format!("t = {:.2}", t.get()),
            st <= MC_SIGMAS && sa <= MC_SIGMAS,
            format!(
                "T: {:.6} ± {:.1e} vs {ct:.6} ({st:.2}σ); A: {:.6} ± {:.1e} vs {ca:.6} ({sa:.2}σ)",
                mt.mean, mt.std_error, ma.mean, ma.std_error
            ),
        );
    }
    Ok(())
}

fn povm(cfg: &Config, checks: &mut Vec<Check>) -> Result<()> {
    const S: &str = "povm";
    let dn = cfg.d.get();
    for (k, t) in [0.2, 0.5, 0.75].into_iter().enumerate() {
        let t = Threshold::new(t)?;
        let analytic = analytic_simulated_povm(cfg.d, t)?;
        let direct = make_noisy_pvm(cfg.d, &OperatorMatrix::identity(dn), analytic.params())?;
        let diff = analytic.max_abs_diff(&direct);
        push(
            checks,
            S,
            format!("t = {}: simulated POVM equals noisy PVM", t.get()),
            diff <= 1e-10 && validate_povm(analytic.elements())?,
            format!("max entry difference {diff:e}"),
        );

        let est =
            reconstruct_simulated_povm(cfg.d, t, cfg.samples, cfg.seed.wrapping_add(k as u64))?;
        let mut worst: f64 = 0.0;
        for slot in 0..=dn {
            let outcome = Outcome::from_slot(slot, dn)?;
            worst = worst.max(
                est.element(outcome)
                    .max_sigmas_from(analytic.element(outcome).matrix()),
            );
        }
        push(
            checks,
            S,
            format!("t = {}: reconstructed elements", t.get()),
            worst <= MC_SIGMAS,
            format!(
                "worst entry {worst:.2}σ over {} samples",
                est.total.n_samples
            ),
        );
        let sum = est
            .total
            .max_sigmas_from(OperatorMatrix::identity(dn).matrix());
        push(
            checks,
            S,
            format!("t = {}: elements sum to identity", t.get()),
            sum <= MC_SIGMAS,
            format!("worst entry {sum:.2}σ"),
        );
    }
    Ok(())
}

fn optimality(cfg: &Config, checks: &mut Vec<Check>) -> Result<()> {
    const S: &str = "optimality";
    let t = Threshold::new(if cfg.d.get() == 2 { 0.6 } else { 0.4 })?;
    let report = optimality_probe(cfg.d, t, cfg.samples, 100, cfg.seed)?;
    push(
        checks,
        S,
        format!(
            "t = {}: no perturbation beats the boundary visibility",
            t.get()
        ),
        report.passes(MC_SIGMAS),
        format!(
            "p = {:.6}, max gap {:+.2e} ({:+.2}σ), {} trials, {} off calibration",
            report.visibility,
            report.max_gap(),
            report.max_gap_sigmas(),
            report.trials.len(),
            report.discarded.len()
        ),
    );
    let swap = probe_perturbation(
        cfg.d,
        t,
        Perturbation::CapSwap { measure: 0.1 },
        cfg.samples,
        cfg.seed,
    )?;
    let sigmas = swap.paired_gap_sigmas();
    push(
        checks,
        S,
        "misassigned responses lose visibility",
        sigmas < -MC_SIGMAS,
        format!("cap swap gap {:+.3e} ({sigmas:+.1}σ)", swap.paired_gap),
    );
    Ok(())
}
