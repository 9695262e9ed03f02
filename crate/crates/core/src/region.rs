//! Membership in the joint-measurability region, boundary curves, the
//! mixture map and the non-convexity probe.
//!
//! The region is the down-closed hull of the boundary curve
//! `t -> (T_d(t), p(t))`. Its upper envelope `eta_max(p)` has three pieces:
//!
//! * `p <= p0 = (H_d - 1)/(d - 1)` gives `eta_max = 1`;
//! * `p > 1/2` gives `eta_max = d (1-p)^(d-1)`;
//! * in between, `p(t*) = p` is solved on `[1/d, 1/2]` by bisection and
//!   `eta_max = T_d(t*)`.
//!
//! For `t <= 1/d` the threshold never binds (some `|z_k|^2 >= 1/d` always), so
//! the curve sits still at `(1, p0)` there; bisection starts at `1/d`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::closed_form::{
    boundary_point, eval_t, povm_bound_eta, simple_regime_eta, unit_efficiency_visibility, EvalMode,
};
use crate::error::{Error, Result};
use crate::tolerance;
use crate::types::{BoundarySample, Dimension, NoiseParams, Threshold};

/// Ordered samples of the boundary curve for one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub d: Dimension,
    pub samples: Vec<BoundarySample>,
}

impl BoundaryCurve {
    /// Checks strictly increasing `t`, non-increasing `eta`, and that every
    /// sample matches the closed form within [`tolerance::IDENTITY`].
    pub fn validate(&self) -> Result<()> {
        for pair in self.samples.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(Error::Parse(format!(
                    "t not strictly increasing at t = {}",
                    pair[1].t.get()
                )));
            }
            if pair[1].eta > pair[0].eta + tolerance::IDENTITY {
                return Err(Error::Parse(format!(
                    "eta increases at t = {}",
                    pair[1].t.get()
                )));
            }
        }
        for s in &self.samples {
            let want = boundary_point(self.d, s.t, EvalMode::Float64)?;
            if (want.eta - s.eta).abs() > tolerance::IDENTITY
                || (want.p - s.p).abs() > tolerance::IDENTITY
            {
                return Err(Error::Parse(format!(
                    "sample at t = {} is off the boundary",
                    s.t.get()
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of a membership query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MembershipVerdict {
    pub inside: bool,
    /// Boundary efficiency at the queried visibility.
    pub eta_max: f64,
    /// `eta_max - eta`; non-negative up to [`tolerance::MEMBERSHIP`] inside.
    pub margin: f64,
}

/// Result of [`mixture`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mixture {
    pub params: NoiseParams,
    /// Set when the mixed efficiency is zero and `p` was fixed to 0 by convention.
    pub visibility_undefined: bool,
}

/// A pair of boundary points whose mixing segment leaves the region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonConvexityWitness {
    pub first: BoundarySample,
    pub second: BoundarySample,
    pub q: f64,
    /// The point `q first + (1-q) second` of the `(eta, p)` plane.
    pub midpoint: (f64, f64),
    pub verdict: MembershipVerdict,
}

/// One row of the PVM-boundary versus POVM-bound comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundComparison {
    pub p: f64,
    pub eta_max: f64,
    pub povm_bound: f64,
    /// `eta_max / povm_bound`, infinite when the bound vanishes.
    pub ratio: f64,
}

fn visibility_at(d: Dimension, t: f64) -> Result<f64> {
    Ok(boundary_point(d, Threshold::new(t)?, EvalMode::Float64)?.p)
}

const MONOTONE_GRID: usize = 400;

/// Verifies numerically that `p(t)` is constant on `[0, 1/d]` and
/// non-decreasing on `[1/d, 1/2]`, rising from `p0` to `1/2`.
fn check_monotone(d: Dimension) -> Result<()> {
    let lo = 1.0 / d.as_f64();
    let p0 = unit_efficiency_visibility(d);
    for k in 0..=8 {
        let t = lo * k as f64 / 8.0;
        if (visibility_at(d, t)? - p0).abs() > tolerance::IDENTITY {
            return Err(Error::NonMonotoneVisibility { d: d.get(), t });
        }
    }
    let mut prev = p0;
    for k in 1..=MONOTONE_GRID {
        let t = lo + (0.5 - lo) * k as f64 / MONOTONE_GRID as f64;
        let p = visibility_at(d, t)?;
        if p < prev - tolerance::MONOTONE_SLACK {
            return Err(Error::NonMonotoneVisibility { d: d.get(), t });
        }
        prev = p;
    }
    if d.get() > 2 && prev <= p0 {
        return Err(Error::NonMonotoneVisibility { d: d.get(), t: 0.5 });
    }
    Ok(())
}

type MonotoneCache = Mutex<HashMap<usize, Arc<OnceLock<Result<()>>>>>;

/// Per-dimension cached monotonicity verdict; concurrent first callers share one check.
pub fn verify_monotone_visibility(d: Dimension) -> Result<()> {
    static CACHE: OnceLock<MonotoneCache> = OnceLock::new();
    let cell = {
        let mut map = CACHE
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        Arc::clone(map.entry(d.get()).or_default())
    };
    cell.get_or_init(|| check_monotone(d)).clone()
}

/// Largest efficiency compatible with visibility `p`.
pub fn eta_max(d: Dimension, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfUnitInterval {
            name: "p",
            value: p,
        });
    }
    if p > 0.5 {
        return simple_regime_eta(d, p);
    }
    if p <= unit_efficiency_visibility(d) {
        return Ok(1.0);
    }
    verify_monotone_visibility(d)?;

    let (mut lo, mut hi) = (1.0 / d.as_f64(), 0.5);
    let (mut p_lo, mut p_hi) = (visibility_at(d, lo)?, visibility_at(d, hi)?);
    while hi - lo > tolerance::BISECTION {
        let mid = 0.5 * (lo + hi);
        let p_mid = visibility_at(d, mid)?;
        if p_mid < p_lo - tolerance::MONOTONE_SLACK || p_mid > p_hi + tolerance::MONOTONE_SLACK {
            return Err(Error::NonMonotoneVisibility { d: d.get(), t: mid });
        }
        if p_mid < p {
            lo = mid;
            p_lo = p_mid;
        } else {
            hi = mid;
            p_hi = p_mid;
        }
    }
    Ok(eval_t(d, Threshold::new(hi)?, EvalMode::Float64))
}

/// Membership of `(eta, p)` in the closed joint-measurability region.
pub fn is_jointly_measurable(d: Dimension, params: NoiseParams) -> Result<MembershipVerdict> {
    let eta_max = eta_max(d, params.p())?;
    let margin = eta_max - params.eta();
    Ok(MembershipVerdict {
        inside: margin >= -tolerance::MEMBERSHIP,
        eta_max,
        margin,
    })
}

/// Noise parameters of the statistical mixture `q M(first) + (1-q) M(second)`.
pub fn mixture(first: NoiseParams, second: NoiseParams, q: f64) -> Result<Mixture> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::OutOfUnitInterval {
            name: "q",
            value: q,
        });
    }
    if q == 1.0 {
        return Ok(Mixture {
            params: first,
            visibility_undefined: first.eta() == 0.0,
        });
    }
    if q == 0.0 {
        return Ok(Mixture {
            params: second,
            visibility_undefined: second.eta() == 0.0,
        });
    }
    let w1 = q * first.eta();
    let w2 = (1.0 - q) * second.eta();
    let eta = w1 + w2;
    if eta == 0.0 {
        return Ok(Mixture {
            params: NoiseParams::new(0.0, 0.0)?,
            visibility_undefined: true,
        });
    }
    let p = ((w1 * first.p() + w2 * second.p()) / eta).clamp(0.0, 1.0);
    Ok(Mixture {
        params: NoiseParams::new(eta.min(1.0), p)?,
        visibility_undefined: false,
    })
}

/// Threshold at which the boundary efficiency has dropped to `eta`, for small `eta`.
fn tail_threshold(d: Dimension, eta: f64) -> f64 {
    1.0 - (eta / d.as_f64()).powf(1.0 / (d.as_f64() - 1.0))
}

/// Samples the boundary on `t = k/n` for `k < n`, every breakpoint `1/(m+1)`,
/// and a tail point where the efficiency is `1e-7`.
pub fn export_curve(d: Dimension, n_samples: usize) -> Result<BoundaryCurve> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {n_samples}"
        )));
    }
    let mut ts: Vec<f64> = (0..n_samples)
        .map(|k| k as f64 / n_samples as f64)
        .collect();
    ts.extend((2..=d.get()).map(|k| 1.0 / k as f64));
    let tail = tail_threshold(d, 1e-7);
    ts.push(tail);
    ts.retain(|&t| t <= tail);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let samples = ts
        .into_iter()
        .map(|t| boundary_point(d, Threshold::new(t)?, EvalMode::Float64))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryCurve { d, samples })
}

/// Boundary points for the pair grid of [`probe_nonconvexity`]: `n` thresholds
/// spread evenly over `[1/d, 1)`, where the curve actually moves.
fn probe_points(d: Dimension, n: usize) -> Result<Vec<BoundarySample>> {
    let lo = 1.0 / d.as_f64();
    let hi = tail_threshold(d, 1e-6);
    (0..n)
        .map(|k| {
            let t = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            boundary_point(d, Threshold::new(t)?, EvalMode::Float64)
        })
        .collect()
}

/// Grid search for a non-convexity witness over `grid x grid` boundary pairs.
///
/// Returns the pair whose midpoint falls furthest outside the region, or
/// `None` if every midpoint is inside.
pub fn probe_nonconvexity_on_grid(
    d: Dimension,
    grid: usize,
) -> Result<Option<NonConvexityWitness>> {
    if grid < 2 {
        return Err(Error::InvalidArgument(
            "grid needs at least 2 points".into(),
        ));
    }
    let points = probe_points(d, grid)?;
    let q = 0.5;
    let mut worst: Option<NonConvexityWitness> = None;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let eta = q * a.eta + (1.0 - q) * b.eta;
            let p = q * a.p + (1.0 - q) * b.p;
            let verdict = is_jointly_measurable(d, NoiseParams::new(eta, p)?)?;
            if !verdict.inside && worst.is_none_or(|w| verdict.margin < w.verdict.margin) {
                worst = Some(NonConvexityWitness {
                    first: *a,
                    second: *b,
                    q,
                    midpoint: (eta, p),
                    verdict,
                });
            }
        }
    }
    Ok(worst)
}

pub fn probe_nonconvexity(d: Dimension) -> Result<Option<NonConvexityWitness>> {
    probe_nonconvexity_on_grid(d, 100)
}

/// Rows `p = k/n`, `k = 0..=n`, comparing the PVM boundary with the POVM bound.
pub fn compare_bounds(d: Dimension, n: usize) -> Result<Vec<BoundComparison>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    (0..=n)
        .map(|k| {
            let p = k as f64 / n as f64;
            let eta_max = eta_max(d, p)?;
            let povm_bound = povm_bound_eta(d, p)?;
            let ratio = if povm_bound > 0.0 {
                eta_max / povm_bound
            } else {
                f64::INFINITY
            };
            Ok(BoundComparison {
                p,
                eta_max,
                povm_bound,
                ratio,
            })
        })
        .collect()
}
