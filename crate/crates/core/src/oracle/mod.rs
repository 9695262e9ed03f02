//! Monte-Carlo oracle over the complex unit sphere.
//!
//! Everything here is estimated from samples of the unitarily invariant
//! measure and never touches the closed forms, so the two can check each other.
//!
//! Sampling is chunked: chunk `c` of a run with seed `s` draws from the ChaCha
//! stream `(s, c)`, chunks are evaluated in parallel and reduced in chunk
//! order. Results therefore depend on `(seed, n)` only, not on thread count.

mod optimality;

pub use optimality::{
    optimality_probe, probe_perturbation, OptimalityReport, Perturbation, TrialResult,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::{standard_error, Moments};
use crate::types::{ComplexUnitVector, Dimension, OperatorMatrix, Outcome, Threshold};

/// Samples per parallel chunk.
pub const CHUNK_SIZE: usize = 1 << 14;

/// Smallest sample count accepted by the scalar estimators.
pub const MIN_SAMPLES: usize = 1_000;

/// Smallest sample count accepted by the operator reconstruction.
pub const MIN_RECONSTRUCTION_SAMPLES: usize = 10_000;

/// Reproducible source of uniformly distributed unit vectors in `C^d`.
#[derive(Clone, Debug)]
pub struct SphereSampler {
    d: Dimension,
    seed: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl SphereSampler {
    pub fn new(d: Dimension, seed: u64) -> Self {
        Self::for_chunk(d, seed, 0)
    }

    /// Independent stream `(seed, chunk)`.
    pub fn for_chunk(d: Dimension, seed: u64, chunk: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        Self {
            d,
            seed,
            counter: 0,
            rng,
        }
    }

    pub fn dim(&self) -> Dimension {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of vectors drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Fills `out` with `d` normalized standard complex Gaussians.
    pub fn fill(&mut self, out: &mut [Complex64]) {
        debug_assert_eq!(out.len(), self.d.get());
        let mut norm_sq = 0.0;
        for z in out.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut self.rng);
            let im: f64 = StandardNormal.sample(&mut self.rng);
            *z = Complex64::new(re, im);
            norm_sq += re * re + im * im;
        }
        let inv = norm_sq.sqrt().recip();
        for z in out.iter_mut() {
            *z *= inv;
        }
        self.counter += 1;
    }

    pub fn sample(&mut self) -> ComplexUnitVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); self.d.get()];
        self.fill(&mut amps);
        ComplexUnitVector::new(amps).expect("normalized by construction")
    }
}

/// One draw from the invariant measure on the unit sphere of `C^d`.
pub fn sample_uniform(sampler: &mut SphereSampler) -> ComplexUnitVector {
    sampler.sample()
}

/// Index of the largest entry, lowest index on ties.
#[inline]
pub fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut max = values[0];
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > max {
            best = k;
            max = v;
        }
    }
    (best, max)
}

/// Threshold response on squared moduli: the largest component if it reaches `t`.
#[inline]
pub fn response_from_moduli(moduli_sq: &[f64], t: f64) -> Outcome {
    let (k, max) = argmax(moduli_sq);
    if max >= t {
        Outcome::Click(k)
    } else {
        Outcome::NoClick
    }
}

/// Deterministic response to parent outcome `z` for the measurement with
/// projectors `U^dagger |k><k| U`: report the `k` maximizing `|<k|U|z>|^2` if
/// that overlap reaches `t`, otherwise no click.
pub fn response(z: &ComplexUnitVector, t: Threshold, basis: &OperatorMatrix) -> Result<Outcome> {
    if basis.dim() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            found: basis.dim(),
        });
    }
    let rotated = basis.apply(z.amplitudes());
    let moduli: Vec<f64> = rotated.iter().map(|w| w.norm_sqr()).collect();
    Ok(response_from_moduli(&moduli, t.get()))
}

/// Evaluates `f(chunk, len)` for every chunk of an `n`-sample run, in order.
pub(crate) fn chunked<A, F>(n: usize, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(u64, usize) -> A + Sync,
{
    let chunks = n.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|c| f(c as u64, CHUNK_SIZE.min(n - c * CHUNK_SIZE)))
        .collect()
}

/// Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl McEstimate {
    fn from_moments(m: &Moments) -> Self {
        Self {
            mean: m.mean(),
            std_error: m.std_error(),
            n_samples: m.n,
        }
    }

    /// `|mean - target|` in units of the standard error.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }

    pub fn agrees_with(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.std_error
    }
}

fn check_samples(n: usize, min: usize) -> Result<()> {
    if n < min {
        Err(Error::TooFewSamples { min, got: n })
    } else {
        Ok(())
    }
}

/// Joint estimate of `T_d(t) = d E[Θ_0]` and `A_d(t) = d E[Θ_0 |z_0|^2]`.
pub fn estimate_moments(
    d: Dimension,
    t: Threshold,
    n_samples: usize,
    seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    check_samples(n_samples, MIN_SAMPLES)?;
    let df = d.as_f64();
    let parts = chunked(n_samples, |chunk, len| {
        let mut sampler = SphereSampler::for_chunk(d, seed, chunk);
        let mut z = vec![Complex64::new(0.0, 0.0); d.get()];
        let mut s = vec![0.0; d.get()];
        let (mut total, mut first) = (Moments::default(), Moments::default());
        for _ in 0..len {
            sampler.fill(&mut z);
            for (sk, zk) in s.iter_mut().zip(&z) {
                *sk = zk.norm_sqr();
            }
            if response_from_moduli(&s, t.get()) == Outcome::Click(0) {
                total.push(df);
                first.push(df * s[0]);
            } else {
                total.push(0.0);
                first.push(0.0);
            }
        }
        (total, first)
    });
    let (mut total, mut first) = (Moments::default(), Moments::default());
    for (a, b) in &parts {
        total.merge(a);
        first.merge(b);
    }
    Ok((
        McEstimate::from_moments(&total),
        McEstimate::from_moments(&first),
    ))
}

/// Monte-Carlo estimate of `T_d(t)`.
pub fn estimate_t(d: Dimension, t: Threshold, n_samples: usize, seed: u64) -> Result<McEstimate> {
    estimate_moments(d, t, n_samples, seed).map(|(total, _)| total)
}

/// Monte-Carlo estimate of `A_d(t)`.
pub fn estimate_a(d: Dimension, t: Threshold, n_samples: usize, seed: u64) -> Result<McEstimate> {
    estimate_moments(d, t, n_samples, seed).map(|(_, first)| first)
}

/// Entrywise Monte-Carlo estimate of a complex matrix.
///
/// `std_error` holds the standard errors of the real and imaginary parts in
/// the corresponding components.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixEstimate {
    pub mean: DMatrix<Complex64>,
    pub std_error: DMatrix<Complex64>,
    pub n_samples: usize,
}

impl MatrixEstimate {
    /// Largest entrywise deviation from `target`, in standard errors, over
    /// real and imaginary parts.
    pub fn max_sigmas_from(&self, target: &DMatrix<Complex64>) -> f64 {
        let mut worst: f64 = 0.0;
        for ((m, s), t) in self
            .mean
            .iter()
            .zip(self.std_error.iter())
            .zip(target.iter())
        {
            for (diff, se) in [((m.re - t.re).abs(), s.re), ((m.im - t.im).abs(), s.im)] {
                if diff > 0.0 {
                    worst = worst.max(diff / se);
                }
            }
        }
        worst
    }
}

#[derive(Clone)]
struct MatrixSums {
    re: Vec<f64>,
    im: Vec<f64>,
    re_sq: Vec<f64>,
    im_sq: Vec<f64>,
}

impl MatrixSums {
    fn new(d: usize) -> Self {
        Self {
            re: vec![0.0; d * d],
            im: vec![0.0; d * d],
            re_sq: vec![0.0; d * d],
            im_sq: vec![0.0; d * d],
        }
    }

    #[inline]
    fn add_outer(&mut self, z: &[Complex64], scale: f64) {
        let d = z.len();
        for i in 0..d {
            for j in 0..d {
                let c = z[i] * z[j].conj() * scale;
                let idx = i * d + j;
                self.re[idx] += c.re;
                self.im[idx] += c.im;
                self.re_sq[idx] += c.re * c.re;
                self.im_sq[idx] += c.im * c.im;
            }
        }
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in [
            (&mut self.re, &other.re),
            (&mut self.im, &other.im),
            (&mut self.re_sq, &other.re_sq),
            (&mut self.im_sq, &other.im_sq),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    fn finish(&self, d: usize, n: usize) -> MatrixEstimate {
        let nf = n as f64;
        MatrixEstimate {
            mean: DMatrix::from_fn(d, d, |i, j| {
                let k = i * d + j;
                Complex64::new(self.re[k] / nf, self.im[k] / nf)
            }),
            std_error: DMatrix::from_fn(d, d, |i, j| {
                let k = i * d + j;
                Complex64::new(
                    standard_error(n, self.re[k], self.re_sq[k]),
                    standard_error(n, self.im[k], self.im_sq[k]),
                )
            }),
            n_samples: n,
        }
    }
}

/// Monte-Carlo estimates of the simulated operators `N_a = d ∫ Θ_a(z) |z><z| dz`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedPovmEstimate {
    /// `N_0, ..., N_{d-1}, N_ø`, indexed by [`Outcome::slot`].
    pub elements: Vec<MatrixEstimate>,
    /// Per-sample sum over all outcomes, which estimates the identity.
    pub total: MatrixEstimate,
}

impl SimulatedPovmEstimate {
    pub fn element(&self, outcome: Outcome) -> &MatrixEstimate {
        &self.elements[outcome.slot(self.elements.len() - 1)]
    }
}

/// Reconstructs every simulated POVM element from `n_samples` parent outcomes.
pub fn reconstruct_simulated_povm(
    d: Dimension,
    t: Threshold,
    n_samples: usize,
    seed: u64,
) -> Result<SimulatedPovmEstimate> {
    check_samples(n_samples, MIN_RECONSTRUCTION_SAMPLES)?;
    let dn = d.get();
    let scale = d.as_f64();
    let parts = chunked(n_samples, |chunk, len| {
        let mut sampler = SphereSampler::for_chunk(d, seed, chunk);
        let mut z = vec![Complex64::new(0.0, 0.0); dn];
        let mut s = vec![0.0; dn];
        let mut elements = vec![MatrixSums::new(dn); dn + 1];
        let mut total = MatrixSums::new(dn);
        for _ in 0..len {
            sampler.fill(&mut z);
            for (sk, zk) in s.iter_mut().zip(&z) {
                *sk = zk.norm_sqr();
            }
            let slot = response_from_moduli(&s, t.get()).slot(dn);
            elements[slot].add_outer(&z, scale);
            total.add_outer(&z, scale);
        }
        (elements, total)
    });
    let mut elements = vec![MatrixSums::new(dn); dn + 1];
    let mut total = MatrixSums::new(dn);
    for (part_elements, part_total) in &parts {
        for (acc, part) in elements.iter_mut().zip(part_elements) {
            acc.merge(part);
        }
        total.merge(part_total);
    }
    Ok(SimulatedPovmEstimate {
        elements: elements.iter().map(|e| e.finish(dn, n_samples)).collect(),
        total: total.finish(dn, n_samples),
    })
}
