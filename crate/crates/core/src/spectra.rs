//! Per-sector dense eigendecomposition and spectral statistics:
//! energy variances, gap-pair histograms, matrix-element profiles and
//! a density-of-states entropy.
//!
//! The relaxation analysis needs the *joint* statistics of two sectors
//! at once: for sectors `a` and `b` the relevant frequencies are all
//! pair gaps `ω = E_b[n₂] − E_a[n₁]`, optionally weighted by squared
//! matrix elements of an operator connecting the sectors.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::{ChargeSector, Geometry, SectorBasis};
use crate::model::{self, ModelParams, SectorHamiltonian};
use crate::scalar::{real, Real};
use crate::{Error, Result};

/// Eigendecomposition of one fixed-charge block.
#[derive(Clone, Debug)]
pub struct SectorSpectrum<T: Real> {
    pub sector: ChargeSector,
    /// Eigenvalues in ascending order.
    pub eigenvalues: DVector<T>,
    /// Orthonormal eigenvectors, column `k` belonging to
    /// `eigenvalues[k]`, over the sector's rank basis.
    pub eigenvectors: DMatrix<T>,
}

impl<T: Real> SectorSpectrum<T> {
    #[inline]
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Diagonalizes one Hamiltonian block; eigenvalues come back sorted
/// ascending with their eigenvector columns permuted to match.
pub fn diagonalize_sector<T: Real>(block: &SectorHamiltonian<T>) -> Result<SectorSpectrum<T>> {
    let dim = block.matrix.nrows();
    let eigen = block
        .matrix
        .clone()
        .try_symmetric_eigen(T::default_epsilon(), 100_000)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "symmetric eigensolver did not converge on the {}-up sector (dim {dim})",
                block.sector.n_up()
            ))
        })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| {
        eigen.eigenvalues[i]
            .partial_cmp(&eigen.eigenvalues[j])
            .expect("eigenvalues of a real symmetric matrix are finite")
    });
    let eigenvalues = DVector::from_iterator(dim, order.iter().map(|&k| eigen.eigenvalues[k]));
    let mut eigenvectors = DMatrix::<T>::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eigen.eigenvectors.column(src));
    }
    Ok(SectorSpectrum {
        sector: block.sector.clone(),
        eigenvalues,
        eigenvectors,
    })
}

/// Eigendecompositions of every charge sector of one chain (or of a
/// bath restriction), together with the basis they act on.
#[derive(Clone, Debug)]
pub struct ChainSpectra<T: Real> {
    /// Physical (1-indexed) sites carried by the factor bits.
    pub sites: Vec<usize>,
    pub basis: Arc<SectorBasis>,
    /// One spectrum per up-spin count, index = `n_up`.
    pub sectors: Vec<SectorSpectrum<T>>,
}

impl<T: Real> ChainSpectra<T> {
    /// Diagonalizes all sectors of the full chain.
    pub fn full_chain(params: &ModelParams<T>) -> Result<Self> {
        let basis = Arc::new(SectorBasis::new(params.n_sites)?);
        let sectors = (0..=params.n_sites)
            .into_par_iter()
            .map(|n_up| {
                let block = model::build_sector_hamiltonian(params, basis.sector(n_up))?;
                diagonalize_sector(&block)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChainSpectra {
            sites: (1..=params.n_sites).collect(),
            basis,
            sectors,
        })
    }

    /// Diagonalizes all sectors of the bath restriction of `geometry`.
    pub fn bath(params: &ModelParams<T>, geometry: &Geometry) -> Result<Self> {
        let basis = Arc::new(SectorBasis::new(geometry.bath_len())?);
        let sectors = (0..=geometry.bath_len())
            .into_par_iter()
            .map(|n_up| {
                let block = model::build_bath_hamiltonian(params, geometry, basis.sector(n_up))?;
                diagonalize_sector(&block)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChainSpectra {
            sites: geometry.bath_sites(),
            basis,
            sectors,
        })
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    #[inline]
    pub fn sector(&self, n_up: usize) -> &SectorSpectrum<T> {
        &self.sectors[n_up]
    }
}

/// Population variance of a sector's eigenvalues.
pub fn sector_energy_variance<T: Real>(spectrum: &SectorSpectrum<T>) -> T {
    let dim = spectrum.dimension();
    let norm = real::<T>(dim as f64);
    let mean = spectrum.eigenvalues.iter().fold(T::zero(), |s, &e| s + e) / norm;
    spectrum
        .eigenvalues
        .iter()
        .fold(T::zero(), |s, &e| s + (e - mean) * (e - mean))
        / norm
}

/// Population variance of the all-pairs gap distribution
/// `{E_b[n₂] − E_a[n₁]}`. Because the two levels are drawn
/// independently, this equals the sum of the two sector variances
/// exactly, and is computed that way.
pub fn gap_variance<T: Real>(a: &SectorSpectrum<T>, b: &SectorSpectrum<T>) -> T {
    sector_energy_variance(a) + sector_energy_variance(b)
}

/// Histogram of all pair gaps between two sectors, with optional
/// matrix-element weights.
#[derive(Clone, Debug)]
pub struct GapHistogram<T: Real> {
    pub dim_a: usize,
    pub dim_b: usize,
    pub bin_width: T,
    /// Bin centers, ascending.
    pub centers: Vec<T>,
    /// Raw pair counts per bin.
    pub counts: Vec<u64>,
    /// Counts normalized per pair: `count / (dim_a · dim_b)`.
    pub n_pair: Vec<T>,
    /// Counts normalized per level: `count / (dim_a + dim_b)`.
    pub n_level: Vec<T>,
    /// Mean weight of the pairs in each bin (0 where empty); present
    /// when weights were supplied.
    pub mean_weight: Option<Vec<T>>,
    /// Product `n_pair · mean_weight` per bin.
    pub weighted_density: Option<Vec<T>>,
}

/// Bins the gaps `ω = E_b[n₂] − E_a[n₁]` over all pairs `(n₁, n₂)`.
///
/// `bin_width` defaults to 1/200 of the gap span. `weights`, if given,
/// must be a `dim_a × dim_b` matrix whose `(n₁, n₂)` entry is the
/// weight of that pair (e.g. a squared matrix element
/// `|⟨b, n₂|Ô|a, n₁⟩|²`).
pub fn gap_histogram<T: Real>(
    a: &SectorSpectrum<T>,
    b: &SectorSpectrum<T>,
    bin_width: Option<T>,
    weights: Option<&DMatrix<T>>,
) -> Result<GapHistogram<T>> {
    let (dim_a, dim_b) = (a.dimension(), b.dimension());
    if let Some(w) = weights {
        if w.nrows() != dim_a || w.ncols() != dim_b {
            return Err(Error::Dimension(format!(
                "weight matrix is {}×{}, expected {dim_a}×{dim_b}",
                w.nrows(),
                w.ncols()
            )));
        }
    }
    let lo = b.eigenvalues[0] - a.eigenvalues[dim_a - 1];
    let hi = b.eigenvalues[dim_b - 1] - a.eigenvalues[0];
    let span = hi - lo;
    let width = match bin_width {
        Some(w) if w > T::zero() => w,
        Some(_) => return Err(Error::Parameter("bin width must be positive".into())),
        None if span > T::zero() => span / real::<T>(200.0),
        None => T::one(),
    };
    let n_bins = ((span / width).to_f64().unwrap().floor() as usize + 1).max(1);
    let mut counts = vec![0u64; n_bins];
    let mut weight_sums = vec![T::zero(); n_bins];
    let lo_f = lo.to_f64().unwrap();
    let width_f = width.to_f64().unwrap();
    for n1 in 0..dim_a {
        for n2 in 0..dim_b {
            let omega = b.eigenvalues[n2] - a.eigenvalues[n1];
            let bin = (((omega - lo).to_f64().unwrap() / width_f).floor() as usize).min(n_bins - 1);
            counts[bin] += 1;
            if let Some(w) = weights {
                weight_sums[bin] += w[(n1, n2)];
            }
        }
    }
    let centers: Vec<T> = (0..n_bins)
        .map(|k| real::<T>(lo_f + (k as f64 + 0.5) * width_f))
        .collect();
    let per_pair = real::<T>((dim_a * dim_b) as f64);
    let per_level = real::<T>((dim_a + dim_b) as f64);
    let n_pair: Vec<T> = counts.iter().map(|&c| real::<T>(c as f64) / per_pair).collect();
    let n_level: Vec<T> = counts
        .iter()
        .map(|&c| real::<T>(c as f64) / per_level)
        .collect();
    let (mean_weight, weighted_density) = if weights.is_some() {
        let mean: Vec<T> = weight_sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| {
                if c == 0 {
                    T::zero()
                } else {
                    s / real::<T>(c as f64)
                }
            })
            .collect();
        let product: Vec<T> = mean.iter().zip(&n_pair).map(|(&m, &n)| m * n).collect();
        (Some(mean), Some(product))
    } else {
        (None, None)
    };
    Ok(GapHistogram {
        dim_a,
        dim_b,
        bin_width: width,
        centers,
        counts,
        n_pair,
        n_level,
        mean_weight,
        weighted_density,
    })
}

/// Logarithm of the number of eigenvalues inside the closed window
/// `[lo, hi]`; `None` when the window is empty of levels.
pub fn dos_entropy<T: Real>(
    spectrum: &SectorSpectrum<T>,
    window: (T, T),
) -> Result<Option<T>> {
    let (lo, hi) = window;
    if lo > hi {
        return Err(Error::Parameter(format!(
            "energy window [{:?}, {:?}] is empty",
            lo.to_f64(),
            hi.to_f64()
        )));
    }
    let count = spectrum
        .eigenvalues
        .iter()
        .filter(|&&e| e >= lo && e <= hi)
        .count();
    if count == 0 {
        Ok(None)
    } else {
        Ok(Some(real::<T>((count as f64).ln())))
    }
}
