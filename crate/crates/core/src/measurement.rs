//! Noisified projective measurements, their threshold simulation, and a
//! classical sampler that reproduces noisy-PVM statistics from a hidden
//! variable `z`.
//!
//! The PVM in basis `U` has projectors `U^dagger |a><a| U`. Its noisified
//! version with efficiency `eta` and visibility `p` has click elements
//! `eta p U^dagger|a><a|U + eta (1-p) 1/d` and no-click element `(1-eta) 1`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::closed_form::{boundary_point, moments_extended, EvalMode};
use crate::error::{Error, Result};
use crate::oracle::{chunked, response_from_moduli};
use crate::tolerance;
use crate::types::{ComplexUnitVector, Dimension, NoiseParams, OperatorMatrix, Outcome, Threshold};

/// A `d + 1` outcome POVM: `d` clicks then the no-click element.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyPvm {
    d: Dimension,
    basis: OperatorMatrix,
    params: NoiseParams,
    elements: Vec<OperatorMatrix>,
}

impl NoisyPvm {
    pub fn dim(&self) -> Dimension {
        self.d
    }

    pub fn basis(&self) -> &OperatorMatrix {
        &self.basis
    }

    pub fn params(&self) -> NoiseParams {
        self.params
    }

    /// Elements indexed by [`Outcome::slot`].
    pub fn elements(&self) -> &[OperatorMatrix] {
        &self.elements
    }

    pub fn element(&self, outcome: Outcome) -> &OperatorMatrix {
        &self.elements[outcome.slot(self.d.get())]
    }

    /// Largest entrywise difference between corresponding elements.
    pub fn max_abs_diff(&self, other: &NoisyPvm) -> f64 {
        self.elements
            .iter()
            .zip(&other.elements)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

fn check_dim(d: Dimension, found: usize) -> Result<()> {
    if found == d.get() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: d.get(),
            found,
        })
    }
}

/// The noisified PVM in basis `basis`.
pub fn make_noisy_pvm(
    d: Dimension,
    basis: &OperatorMatrix,
    params: NoiseParams,
) -> Result<NoisyPvm> {
    check_dim(d, basis.dim())?;
    let defect = basis.unitarity_defect();
    if defect > tolerance::IDENTITY {
        return Err(Error::NotUnitary(defect));
    }
    let dn = d.get();
    let (eta, p) = (params.eta(), params.p());
    let white = eta * (1.0 - p) / d.as_f64();
    let mut elements: Vec<OperatorMatrix> = (0..dn)
        .map(|a| {
            OperatorMatrix::from_fn(dn, |i, j| {
                let projector = basis.entry(a, i).conj() * basis.entry(a, j);
                let diag = if i == j { white } else { 0.0 };
                projector * (eta * p) + diag
            })
        })
        .collect();
    elements.push(OperatorMatrix::identity(dn).scale(1.0 - eta));
    Ok(NoisyPvm {
        d,
        basis: basis.clone(),
        params,
        elements,
    })
}

/// The POVM realized by the threshold response on the covariant parent, built
/// from the closed forms: `N_k = A |k><k| + B (1 - |k><k|)/(d-1)` with
/// `B = T - A`, and `N_ø = (1 - T) 1`.
pub fn analytic_simulated_povm(d: Dimension, t: Threshold) -> Result<NoisyPvm> {
    let point = boundary_point(d, t, EvalMode::Float64)?;
    let (total, first) = moments_extended(d, t);
    let (total, first) = (total.to_f64(), first.to_f64());
    let off = (total - first) / (d.as_f64() - 1.0);
    let dn = d.get();
    let mut elements: Vec<OperatorMatrix> = (0..dn)
        .map(|k| {
            let diag: Vec<f64> = (0..dn).map(|i| if i == k { first } else { off }).collect();
            OperatorMatrix::diagonal(&diag)
        })
        .collect();
    elements.push(OperatorMatrix::identity(dn).scale(1.0 - total));
    Ok(NoisyPvm {
        d,
        basis: OperatorMatrix::identity(dn),
        params: point.params()?,
        elements,
    })
}

/// Density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    rho: OperatorMatrix,
}

impl QuantumState {
    pub fn new(rho: OperatorMatrix) -> Result<Self> {
        if rho.dim() < 2 {
            return Err(Error::InvalidDimension(rho.dim()));
        }
        if !rho.is_hermitian() {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > tolerance::NORMALIZATION
            || trace.im.abs() > tolerance::NORMALIZATION
        {
            return Err(Error::InvalidState(format!("trace {trace}")));
        }
        let min = rho.min_eigenvalue();
        if min < -tolerance::PSD {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { rho })
    }

    pub fn maximally_mixed(d: Dimension) -> Self {
        Self {
            rho: OperatorMatrix::identity(d.get()).scale(1.0 / d.as_f64()),
        }
    }

    pub fn pure(v: &ComplexUnitVector) -> Self {
        Self {
            rho: OperatorMatrix::projector(v),
        }
    }

    /// Full-rank random state `G G^dagger / tr(G G^dagger)` from a complex Ginibre matrix.
    pub fn random<R: Rng + ?Sized>(d: Dimension, rng: &mut R) -> Self {
        let g = ginibre(d.get(), rng);
        let w = &g * g.adjoint();
        let trace = w.trace().re;
        let rho = OperatorMatrix::from_matrix(w.map(|z| z / trace)).expect("square");
        Self {
            rho: rho.hermitian_part(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn rho(&self) -> &OperatorMatrix {
        &self.rho
    }

    /// `U rho U^dagger`.
    pub fn conjugated(&self, u: &OperatorMatrix) -> Result<Self> {
        Self::new((&(u * &self.rho) * &u.adjoint()).hermitian_part())
    }
}

fn ginibre<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: Dimension, rng: &mut R) -> OperatorMatrix {
    let qr = ginibre(d.get(), rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let q = DMatrix::from_fn(d.get(), d.get(), |i, j| {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        q[(i, j)] * phase
    });
    OperatorMatrix::from_matrix(q).expect("square")
}

/// Born-rule distribution `tr(rho M_a)` over the `d + 1` outcomes.
pub fn outcome_distribution(pvm: &NoisyPvm, state: &QuantumState) -> Result<Vec<f64>> {
    check_dim(pvm.dim(), state.dim())?;
    let rho = state.rho();
    Ok(pvm
        .elements()
        .iter()
        .map(|m| (rho * m).trace().re.max(0.0))
        .collect())
}

/// Sampler of parent outcomes `z` with density `d <z|rho|z>` relative to the
/// invariant measure.
///
/// The density is the eigen-mixture `Σ_i λ_i d |<v_i|z>|^2`. For a fixed
/// eigenvector the squared moduli of `z` in the eigenbasis are Dirichlet with
/// weight 2 on the favored coordinate and 1 elsewhere; phases stay uniform.
#[derive(Clone, Debug)]
pub struct ParentSampler {
    cumulative: Vec<f64>,
    eigenvectors: Vec<Vec<Complex64>>,
}

impl ParentSampler {
    pub fn new(state: &QuantumState) -> Self {
        let eig = SymmetricEigen::new(state.rho().matrix().clone());
        let d = state.dim();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|&l| {
                acc += l.max(0.0);
                acc
            })
            .collect();
        let total = acc;
        cumulative.iter_mut().for_each(|c| *c /= total);
        let eigenvectors = (0..d)
            .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        Self {
            cumulative,
            eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors.len()
    }

    /// Draws into `out`, reusing `weights` as scratch (both of length `d`).
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, weights: &mut [f64], out: &mut [Complex64]) {
        let u: f64 = rng.random();
        let favored = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1);
        let mut sum = 0.0;
        for (j, w) in weights.iter_mut().enumerate() {
            let mut e: f64 = Exp1.sample(rng);
            if j == favored {
                let extra: f64 = Exp1.sample(rng);
                e += extra;
            }
            *w = e;
            sum += e;
        }
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (j, &w) in weights.iter().enumerate() {
            let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let amp = Complex64::from_polar((w / sum).sqrt(), phase);
            for (z, v) in out.iter_mut().zip(&self.eigenvectors[j]) {
                *z += amp * v;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexUnitVector {
        let d = self.dim();
        let mut weights = vec![0.0; d];
        let mut out = vec![Complex64::new(0.0, 0.0); d];
        self.fill(rng, &mut weights, &mut out);
        ComplexUnitVector::normalized(out).expect("non-zero by construction")
    }
}

/// One parent outcome drawn for `state` from the stream `seed`.
pub fn sample_parent_outcome(state: &QuantumState, seed: u64) -> ComplexUnitVector {
    ParentSampler::new(state).sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Outcome counts of a simulation run, indexed by [`Outcome::slot`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub counts: Vec<u64>,
}

impl OutcomeCounts {
    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, outcome: Outcome) -> u64 {
        self.counts[outcome.slot(self.counts.len() - 1)]
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.shots() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Classical simulation of the noisy PVM in basis `basis`: per shot, draw the
/// parent outcome `z` for `state` and report the threshold response.
pub fn simulate_measurement(
    state: &QuantumState,
    basis: &OperatorMatrix,
    t: Threshold,
    n_shots: usize,
    seed: u64,
) -> Result<OutcomeCounts> {
    let d = state.dim();
    if basis.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: basis.dim(),
        });
    }
    let defect = basis.unitarity_defect();
    if defect > tolerance::IDENTITY {
        return Err(Error::NotUnitary(defect));
    }
    if t.get() >= 1.0 {
        return Err(Error::DegenerateEndpoint);
    }
    let sampler = ParentSampler::new(state);
    let parts = chunked(n_shots, |chunk, len| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        let mut weights = vec![0.0; d];
        let mut z = vec![Complex64::new(0.0, 0.0); d];
        let mut moduli = vec![0.0; d];
        let mut counts = vec![0u64; d + 1];
        for _ in 0..len {
            sampler.fill(&mut rng, &mut weights, &mut z);
            for (k, m) in moduli.iter_mut().enumerate() {
                let overlap: Complex64 = (0..d).map(|j| basis.entry(k, j) * z[j]).sum();
                *m = overlap.norm_sqr();
            }
            counts[response_from_moduli(&moduli, t.get()).slot(d)] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; d + 1];
    for part in parts {
        counts.iter_mut().zip(part).for_each(|(a, b)| *a += b);
    }
    Ok(OutcomeCounts { counts })
}

/// Distribution the simulation must reproduce: the noisy PVM at the boundary point of `t`.
pub fn simulated_distribution(
    state: &QuantumState,
    basis: &OperatorMatrix,
    t: Threshold,
) -> Result<Vec<f64>> {
    let d = Dimension::new(state.dim())?;
    let point = boundary_point(d, t, EvalMode::Float64)?;
    outcome_distribution(&make_noisy_pvm(d, basis, point.params()?)?, state)
}
