//! Empirical probe of the optimality of the threshold response functions.
//!
//! Every perturbed family is evaluated on the same parent samples as the
//! threshold rule, with its no-click region recalibrated in-sample to the same
//! number of no-click samples. The visibility of a family follows from the
//! mean first-moment mass collected by its clicks; see [`TrialResult`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{chunked, McEstimate, SphereSampler, MIN_SAMPLES};
use crate::closed_form::{boundary_point, EvalMode};
use crate::error::{Error, Result};
use crate::tolerance;
use crate::types::{Dimension, Threshold};

/// A response family with the same efficiency as the threshold rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    /// The threshold rule itself.
    Identity,
    /// Clicks with the smallest gap between the two largest squared moduli,
    /// covering `measure` of the sphere, report the runner-up component.
    CapSwap { measure: f64 },
    /// Each click reports the runner-up component with probability `prob`.
    RunnerUpCoin { prob: f64 },
    /// No click on the vectors with the smallest `Σ_k |z_k|^(2 exponent)`,
    /// as many as the threshold rule discards; clicks report the argmax.
    ReshapedNoClick { exponent: f64 },
    /// [`Perturbation::ReshapedNoClick`] followed by [`Perturbation::RunnerUpCoin`].
    Combined { exponent: f64, prob: f64 },
}

impl Perturbation {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        match rng.random_range(0..4) {
            0 => Perturbation::CapSwap {
                measure: rng.random_range(0.01..0.3),
            },
            1 => Perturbation::RunnerUpCoin {
                prob: rng.random_range(0.0..0.5),
            },
            2 => Perturbation::ReshapedNoClick {
                exponent: rng.random_range(1.2..8.0),
            },
            _ => Perturbation::Combined {
                exponent: rng.random_range(1.2..8.0),
                prob: rng.random_range(0.0..0.3),
            },
        }
    }
}

/// Visibility of one perturbed family.
///
/// With `X` the squared modulus of the reported component (0 on no click) and
/// `C` the click indicator, the family's visibility is
/// `(d E[X]/E[C] - 1) / (d - 1)`. Standard errors use the linearized ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialResult {
    pub perturbation: Perturbation,
    /// Click probability of the perturbed family.
    pub efficiency: McEstimate,
    /// Estimated visibility of the perturbed family.
    pub visibility: McEstimate,
    /// Visibility minus the closed-form boundary visibility.
    pub gap: f64,
    /// Visibility minus the threshold rule's visibility on the same samples.
    pub paired_gap: f64,
    pub paired_std_error: f64,
    /// Whether the efficiency is within the calibration tolerance of `T_d(t)`.
    pub calibrated: bool,
}

impl TrialResult {
    /// Gap to the closed form in units of the visibility standard error.
    pub fn gap_sigmas(&self) -> f64 {
        if self.gap == 0.0 {
            0.0
        } else {
            self.gap / self.visibility.std_error
        }
    }

    pub fn paired_gap_sigmas(&self) -> f64 {
        if self.paired_gap == 0.0 {
            0.0
        } else {
            self.paired_gap / self.paired_std_error
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalityReport {
    pub d: Dimension,
    pub t: Threshold,
    /// Closed-form boundary point `(T_d(t), p(t))`.
    pub efficiency: f64,
    pub visibility: f64,
    pub trials: Vec<TrialResult>,
    /// Trials whose efficiency missed `T_d(t)` by more than the calibration tolerance.
    pub discarded: Vec<TrialResult>,
}

impl OptimalityReport {
    /// Largest visibility gap over calibrated trials.
    pub fn max_gap(&self) -> f64 {
        self.trials
            .iter()
            .map(|r| r.gap)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest visibility gap over calibrated trials, in standard errors.
    pub fn max_gap_sigmas(&self) -> f64 {
        self.trials
            .iter()
            .map(TrialResult::gap_sigmas)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// No calibrated family beats the closed-form visibility by more than `sigmas`.
    pub fn passes(&self, sigmas: f64) -> bool {
        !self.trials.is_empty()
            && self
                .trials
                .iter()
                .all(|r| r.gap <= sigmas * r.visibility.std_error)
    }
}

/// Squared moduli of `n` parent outcomes, row-major.
struct Samples {
    d: usize,
    moduli: Vec<f64>,
}

impl Samples {
    fn draw(d: Dimension, n: usize, seed: u64) -> Self {
        let dn = d.get();
        let parts = chunked(n, |chunk, len| {
            let mut sampler = SphereSampler::for_chunk(d, seed, chunk);
            let mut z = vec![num_complex::Complex64::new(0.0, 0.0); dn];
            let mut out = Vec::with_capacity(len * dn);
            for _ in 0..len {
                sampler.fill(&mut z);
                out.extend(z.iter().map(|w| w.norm_sqr()));
            }
            out
        });
        Self {
            d: dn,
            moduli: parts.concat(),
        }
    }

    fn len(&self) -> usize {
        self.moduli.len() / self.d
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.moduli[i * self.d..(i + 1) * self.d]
    }
}

/// Largest and second-largest squared moduli of each sample.
fn top_two(s: &[f64]) -> (f64, f64) {
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &v in s {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    (first, second)
}

/// Per-sample `(X, C)`: reported squared modulus and click indicator.
type Collected = Vec<(f64, f64)>;

fn baseline(samples: &Samples, t: f64) -> Collected {
    (0..samples.len())
        .map(|i| {
            let (first, _) = top_two(samples.row(i));
            if first >= t {
                (first, 1.0)
            } else {
                (0.0, 0.0)
            }
        })
        .collect()
}

/// Value of the `k`-th smallest entry (`k` zero-based).
fn kth_smallest(mut values: Vec<f64>, k: usize) -> f64 {
    let (_, v, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    *v
}

/// Marks the `count` samples with the lowest score (ties beyond the cut excluded).
fn lowest(scores: &[f64], count: usize) -> Vec<bool> {
    if count == 0 {
        return vec![false; scores.len()];
    }
    if count >= scores.len() {
        return vec![true; scores.len()];
    }
    let cut = kth_smallest(scores.to_vec(), count - 1);
    let mut taken = 0;
    scores
        .iter()
        .map(|&s| {
            let take = s < cut || (s == cut && taken < count);
            if take {
                taken += 1;
            }
            take
        })
        .collect()
}

fn apply(
    perturbation: Perturbation,
    samples: &Samples,
    base: &Collected,
    coin_seed: u64,
) -> Collected {
    let n = samples.len();
    let clicked = |i: usize| base[i].1 > 0.0;
    let no_clicks = (0..n).filter(|&i| !clicked(i)).count();

    // Which samples click, and whether they report the runner-up.
    let mut clicks: Vec<bool> = (0..n).map(clicked).collect();
    let mut runner_up = vec![false; n];

    let reshape = |exponent: f64| -> Vec<bool> {
        let scores: Vec<f64> = (0..n)
            .map(|i| samples.row(i).iter().map(|s| s.powf(exponent)).sum())
            .collect();
        lowest(&scores, no_clicks)
            .into_iter()
            .map(|silent| !silent)
            .collect()
    };
    let flip = |clicks: &[bool], prob: f64| -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(coin_seed);
        clicks.iter().map(|&c| c && rng.random_bool(prob)).collect()
    };

    match perturbation {
        Perturbation::Identity => {}
        Perturbation::CapSwap { measure } => {
            let target = ((measure * n as f64).round() as usize).min(n - no_clicks);
            let gaps: Vec<f64> = (0..n)
                .map(|i| {
                    if clicks[i] {
                        let (a, b) = top_two(samples.row(i));
                        a - b
                    } else {
                        f64::INFINITY
                    }
                })
                .collect();
            runner_up = lowest(&gaps, target);
        }
        Perturbation::RunnerUpCoin { prob } => runner_up = flip(&clicks, prob),
        Perturbation::ReshapedNoClick { exponent } => clicks = reshape(exponent),
        Perturbation::Combined { exponent, prob } => {
            clicks = reshape(exponent);
            runner_up = flip(&clicks, prob);
        }
    }

    (0..n)
        .map(|i| {
            if !clicks[i] {
                return (0.0, 0.0);
            }
            let (first, second) = top_two(samples.row(i));
            (if runner_up[i] { second } else { first }, 1.0)
        })
        .collect()
}

/// Ratio `Σ X / Σ C` with the per-sample influence values of its linearization.
fn ratio_with_influence(collected: &Collected) -> (f64, Vec<f64>) {
    let n = collected.len() as f64;
    let sum_x: f64 = collected.iter().map(|c| c.0).sum();
    let sum_c: f64 = collected.iter().map(|c| c.1).sum();
    if sum_c == 0.0 {
        return (f64::NAN, vec![0.0; collected.len()]);
    }
    let ratio = sum_x / sum_c;
    let mean_c = sum_c / n;
    let influence = collected
        .iter()
        .map(|&(x, c)| (x - ratio * c) / mean_c)
        .collect();
    (ratio, influence)
}

fn std_error_of_mean(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

struct Context {
    d: Dimension,
    efficiency: f64,
    visibility: f64,
    samples: Samples,
    base: Collected,
    base_ratio: f64,
    base_influence: Vec<f64>,
}

impl Context {
    fn new(d: Dimension, t: Threshold, n_samples: usize, seed: u64) -> Result<Self> {
        if n_samples < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                min: MIN_SAMPLES,
                got: n_samples,
            });
        }
        let point = boundary_point(d, t, EvalMode::Float64)?;
        let samples = Samples::draw(d, n_samples, seed);
        let base = baseline(&samples, t.get());
        let (base_ratio, base_influence) = ratio_with_influence(&base);
        Ok(Self {
            d,
            efficiency: point.eta,
            visibility: point.p,
            samples,
            base,
            base_ratio,
            base_influence,
        })
    }

    fn evaluate(&self, perturbation: Perturbation, coin_seed: u64) -> TrialResult {
        let n = self.samples.len();
        let nf = n as f64;
        let df = self.d.as_f64();
        let scale = df / (df - 1.0);

        let collected = apply(perturbation, &self.samples, &self.base, coin_seed);
        let clicks = collected.iter().map(|c| c.1).sum::<f64>();
        let eta = clicks / nf;
        let efficiency = McEstimate {
            mean: eta,
            std_error: (eta * (1.0 - eta) / nf).sqrt(),
            n_samples: n,
        };
        let (ratio, influence) = ratio_with_influence(&collected);
        let visibility = McEstimate {
            mean: (df * ratio - 1.0) / (df - 1.0),
            std_error: scale * std_error_of_mean(&influence),
            n_samples: n,
        };
        let paired: Vec<f64> = influence
            .iter()
            .zip(&self.base_influence)
            .map(|(a, b)| a - b)
            .collect();
        let calibration_se = (self.efficiency * (1.0 - self.efficiency) / nf).sqrt();
        TrialResult {
            perturbation,
            efficiency,
            visibility,
            gap: visibility.mean - self.visibility,
            paired_gap: scale * (ratio - self.base_ratio),
            paired_std_error: scale * std_error_of_mean(&paired),
            calibrated: (eta - self.efficiency).abs()
                <= tolerance::CALIBRATION_SIGMAS * calibration_se,
        }
    }
}

/// Evaluates a single perturbation on `n_samples` parent outcomes.
pub fn probe_perturbation(
    d: Dimension,
    t: Threshold,
    perturbation: Perturbation,
    n_samples: usize,
    seed: u64,
) -> Result<TrialResult> {
    let ctx = Context::new(d, t, n_samples, seed)?;
    Ok(ctx.evaluate(perturbation, seed ^ 0x9e37_79b9_7f4a_7c15))
}

/// Evaluates `n_trials` random efficiency-preserving perturbations on one
/// shared set of parent outcomes.
pub fn optimality_probe(
    d: Dimension,
    t: Threshold,
    n_samples: usize,
    n_trials: usize,
    seed: u64,
) -> Result<OptimalityReport> {
    if n_trials < 10 {
        return Err(Error::InvalidArgument(format!(
            "optimality probe needs at least 10 trials, got {n_trials}"
        )));
    }
    let ctx = Context::new(d, t, n_samples, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let (mut trials, mut discarded) = (Vec::new(), Vec::new());
    for _ in 0..n_trials {
        let perturbation = Perturbation::random(&mut rng);
        let result = ctx.evaluate(perturbation, rng.random());
        if result.calibrated {
            trials.push(result);
        } else {
            discarded.push(result);
        }
    }
    Ok(OptimalityReport {
        d,
        t,
        efficiency: ctx.efficiency,
        visibility: ctx.visibility,
        trials,
        discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(d: usize) -> Dimension {
        Dimension::new(d).unwrap()
    }

    fn th(t: f64) -> Threshold {
        Threshold::new(t).unwrap()
    }

    #[test]
    fn identity_has_zero_paired_gap() {
        let r = probe_perturbation(dim(3), th(0.4), Perturbation::Identity, 50_000, 3).unwrap();
        assert_eq!(r.paired_gap, 0.0);
        assert!(r.calibrated);
        assert!(r.gap.abs() <= 5.0 * r.visibility.std_error);
    }

    #[test]
    fn cap_swap_loses_visibility() {
        let r = probe_perturbation(
            dim(2),
            th(0.6),
            Perturbation::CapSwap { measure: 0.1 },
            100_000,
            4,
        )
        .unwrap();
        assert!(r.calibrated);
        assert!(r.gap < -5.0 * r.visibility.std_error);
        assert!(r.paired_gap < -5.0 * r.paired_std_error);
        // Swapped clicks have squared moduli in [0.6, 0.65]: loss (d/(d-1)) E[2s-1]/eta.
        assert!((r.paired_gap + 0.0625).abs() < 0.005, "{}", r.paired_gap);
    }

    #[test]
    fn reshaped_region_keeps_no_click_count() {
        let r = probe_perturbation(
            dim(3),
            th(0.4),
            Perturbation::ReshapedNoClick { exponent: 2.0 },
            20_000,
            8,
        )
        .unwrap();
        let base = probe_perturbation(dim(3), th(0.4), Perturbation::Identity, 20_000, 8).unwrap();
        assert_eq!(r.efficiency.mean, base.efficiency.mean);
        assert!(r.paired_gap <= 0.0);
    }

    #[test]
    fn lowest_marks_exact_count() {
        let scores = [3.0, 1.0, 2.0, 1.0, 5.0];
        assert_eq!(lowest(&scores, 2), vec![false, true, false, true, false]);
        assert_eq!(lowest(&scores, 0), vec![false; 5]);
        assert_eq!(lowest(&scores, 9), vec![true; 5]);
        assert_eq!(lowest(&[1.0, 1.0, 1.0], 2), vec![true, true, false]);
    }

    #[test]
    fn needs_ten_trials() {
        assert!(optimality_probe(dim(2), th(0.6), 10_000, 9, 0).is_err());
    }
}
