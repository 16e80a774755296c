//! Entanglement asymmetry of reduced density matrices, Gaussian decay
//! fits, and detection of asymmetry crossings between two quenches.
//!
//! The asymmetry of a window state `ρ` with respect to the conserved
//! charge is `ΔS = S(ρ_Q) − S(ρ)`, where `ρ_Q` keeps only the blocks
//! of `ρ` that are diagonal in charge (all cross-sector coherences
//! pinched to zero) and `S` is the von Neumann entropy in nats. `ΔS`
//! vanishes exactly when `ρ` commutes with the charge and is positive
//! otherwise, so its relaxation tracks how fast the quench restores
//! the symmetry. A crossing of two `ΔS(t)` curves whose order at
//! `t = 0` is reversed for all later times is the Mpemba effect of
//! this model; the short-time decay itself is Gaussian to good
//! accuracy and is fitted as `ΔS(t) ≈ A·exp(−t²/t₀²)`.

use thiserror::Error as ThisError;

use crate::dynamics::DensityMatrix;
use crate::scalar::{real, Real};
use crate::{Error, Result};

/// Entropy cutoff: eigenvalues below this are treated as exact zeros.
fn entropy_cutoff<T: Real>() -> T {
    real::<T>(1e-12).max(T::default_epsilon() * real::<T>(100.0))
}

/// Shannon entropy (nats) of a probability vector; entries at or below
/// the entropy cutoff contribute nothing.
pub fn shannon_entropy<T: Real>(probabilities: &[T]) -> T {
    let cutoff = entropy_cutoff::<T>();
    probabilities.iter().fold(T::zero(), |s, &p| {
        if p > cutoff {
            s - p * p.ln()
        } else {
            s
        }
    })
}

/// Pinches a window density matrix to its charge-diagonal blocks:
/// entries between configurations of different up-spin count are set
/// to zero.
pub fn symmetrize<T: Real>(rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
    let mut pinched = rho.matrix().clone();
    for i in 0..pinched.nrows() {
        for j in 0..pinched.ncols() {
            if (i as u32).count_ones() != (j as u32).count_ones() {
                pinched[(i, j)] = crate::Cplx::new(T::zero(), T::zero());
            }
        }
    }
    DensityMatrix::new(pinched)
}

/// Von Neumann entropy `−tr ρ ln ρ` in nats.
pub fn von_neumann_entropy<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    let eigenvalues = rho.matrix().clone().symmetric_eigenvalues();
    let negative_tol = real::<T>(1e-10).max(T::default_epsilon() * real::<T>(1000.0));
    let cutoff = entropy_cutoff::<T>();
    let mut entropy = T::zero();
    for &lambda in eigenvalues.iter() {
        if lambda < -negative_tol {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {:?} in entropy",
                lambda.to_f64()
            )));
        }
        if lambda > cutoff {
            entropy -= lambda * lambda.ln();
        }
    }
    Ok(entropy)
}

/// Entanglement asymmetry `ΔS = S(ρ_Q) − S(ρ)` in nats. Tiny negative
/// results from floating-point cancellation are clamped to zero.
pub fn entanglement_asymmetry<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    let delta = von_neumann_entropy(&symmetrize(rho)?)? - von_neumann_entropy(rho)?;
    let slack = real::<T>(1e-10).max(T::default_epsilon() * real::<T>(1000.0));
    if delta < -slack {
        return Err(Error::Numerical(format!(
            "asymmetry came out negative: {:?}",
            delta.to_f64()
        )));
    }
    Ok(delta.max(T::zero()))
}

/// Parameters of one asymmetry curve, carried along for labelling
/// output rows.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CurveLabel<T: Real> {
    pub theta_s: T,
    pub theta_b: T,
    pub n_samples: usize,
    pub dt_min: T,
    pub dt_max: T,
    pub seed: u64,
}

/// An asymmetry relaxation curve `ΔS(t)` on a shared time grid.
#[derive(Clone, Debug)]
pub struct AsymmetryCurve<T: Real> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub label: CurveLabel<T>,
}

impl<T: Real> AsymmetryCurve<T> {
    pub fn new(times: Vec<T>, values: Vec<T>, label: CurveLabel<T>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} times vs {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::Parameter("curve needs at least two points".into()));
        }
        if times.windows(2).any(|p| !(p[0] < p[1])) {
            return Err(Error::Parameter("times must increase strictly".into()));
        }
        Ok(AsymmetryCurve {
            times,
            values,
            label,
        })
    }

    /// Gaussian fit of the initial decay; see [`fit_gaussian_decay`].
    pub fn fit(&self, floor: T) -> std::result::Result<GaussianFit<T>, FitError> {
        fit_gaussian_decay(&self.times, &self.values, floor)
    }
}

/// Result of fitting `y(t) ≈ A·exp(−t²/t₀²)` to the head of a curve.
#[derive(Clone, Copy, Debug)]
pub struct GaussianFit<T: Real> {
    pub amplitude: T,
    pub timescale: T,
    /// Weighted RMS residual of `ln y` over the fitted window.
    pub residual: T,
    /// Fitted index range `[start, end)` of the input arrays.
    pub window: (usize, usize),
}

/// Why a Gaussian fit could not be produced.
#[derive(Debug, ThisError, PartialEq)]
pub enum FitError {
    #[error("only {available} usable points above the floor, need {needed}")]
    TooFewPoints { available: usize, needed: usize },
    #[error("fitted exponent slope {slope} is not negative")]
    NotDecaying { slope: f64 },
    #[error("curve maximum is not positive")]
    NoSignal,
}

/// Fits `y(t) ≈ A·exp(−t²/t₀²)` by weighted least squares of `ln y`
/// against `t²` (weights `y²`, which undo the log-transform bias).
///
/// Only the contiguous head of the curve with `y > floor · max(y)` is
/// used, so the late-time plateau never contaminates the decay
/// estimate; at least five points must survive.
pub fn fit_gaussian_decay<T: Real>(
    times: &[T],
    values: &[T],
    floor: T,
) -> std::result::Result<GaussianFit<T>, FitError> {
    const MIN_POINTS: usize = 5;
    assert_eq!(times.len(), values.len(), "grid and values differ in length");
    let max = values
        .iter()
        .fold(T::zero(), |m, &v| m.max(v));
    if !(max > T::zero()) {
        return Err(FitError::NoSignal);
    }
    let threshold = floor * max;
    let mut end = 0;
    while end < values.len() && values[end] > threshold {
        end += 1;
    }
    if end < MIN_POINTS {
        return Err(FitError::TooFewPoints {
            available: end,
            needed: MIN_POINTS,
        });
    }
    // Weighted normal equations for ln y = α + β t².
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for k in 0..end {
        let w = values[k] * values[k];
        let x = times[k] * times[k];
        let y = values[k].ln();
        sw += w;
        swx += w * x;
        swy += w * y;
        swxx += w * x * x;
        swxy += w * x * y;
    }
    let denominator = sw * swxx - swx * swx;
    let slope = (sw * swxy - swx * swy) / denominator;
    let intercept = (swy - slope * swx) / sw;
    if !(slope < T::zero()) {
        return Err(FitError::NotDecaying {
            slope: slope.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut residual_sq = T::zero();
    for k in 0..end {
        let w = values[k] * values[k];
        let dev = values[k].ln() - (intercept + slope * times[k] * times[k]);
        residual_sq += w * dev * dev;
    }
    Ok(GaussianFit {
        amplitude: intercept.exp(),
        timescale: (-T::one() / slope).sqrt(),
        residual: (residual_sq / sw).sqrt(),
        window: (0, end),
    })
}

/// Outcome of comparing two asymmetry curves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpembaVerdict<T: Real> {
    /// Whether the initially-more-asymmetric curve falls strictly
    /// below the other one for all later grid times.
    pub occurs: bool,
    /// Earliest grid time after which the reversed order holds
    /// permanently.
    pub mpemba_time: Option<T>,
    /// Smallest separation of the two curves past the crossing.
    pub margin: Option<T>,
}

/// Margin below which two asymmetry values count as tied.
fn crossing_margin<T: Real>() -> T {
    real::<T>(1e-9)
}

/// Detects a Mpemba crossing between two curves on the same grid: the
/// curve with the strictly larger `ΔS(0)` must sit strictly below the
/// other (beyond a `1e−9` margin) at every grid time past some point.
/// Symmetric under exchanging the two curves.
pub fn detect_mpemba<T: Real>(
    first: &AsymmetryCurve<T>,
    second: &AsymmetryCurve<T>,
) -> Result<MpembaVerdict<T>> {
    if first.times.len() != second.times.len()
        || first
            .times
            .iter()
            .zip(&second.times)
            .any(|(a, b)| a != b)
    {
        return Err(Error::Dimension(
            "asymmetry curves live on different time grids".into(),
        ));
    }
    let margin = crossing_margin::<T>();
    let none = MpembaVerdict {
        occurs: false,
        mpemba_time: None,
        margin: None,
    };
    // Identify the initially-more-asymmetric curve.
    let initial_gap = first.values[0] - second.values[0];
    let (hi, lo) = if initial_gap > margin {
        (&first.values, &second.values)
    } else if -initial_gap > margin {
        (&second.values, &first.values)
    } else {
        return Ok(none);
    };
    // Earliest grid index from which hi < lo − margin holds through
    // the end of the grid.
    let n = first.times.len();
    let mut start = n;
    for k in (1..n).rev() {
        if lo[k] - hi[k] > margin {
            start = k;
        } else {
            break;
        }
    }
    if start == n {
        return Ok(none);
    }
    let mut min_separation = T::max_value().unwrap();
    for k in start..n {
        min_separation = min_separation.min(lo[k] - hi[k]);
    }
    Ok(MpembaVerdict {
        occurs: true,
        mpemba_time: Some(first.times[start]),
        margin: Some(min_separation),
    })
}
