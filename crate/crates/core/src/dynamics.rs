//! Exact unitary dynamics in the sector eigenbases, randomized bath
//! pre-thermalization, reduction to the observation window, and
//! deterministic seeded ensemble averaging.
//!
//! Evolution of a sector block is three dense products,
//! `ψ_q(t) = V_q · e^{−i Λ_q t} · V_qᵀ ψ_q`, with the eigenpairs
//! `(Λ_q, V_q)` precomputed once per engine. The ensemble protocol
//! draws one bath duration `Δt_k ~ U[Δt_min, Δt_max]` per sample from
//! an independently seeded stream, evolves the bath factor alone for
//! `Δt_k`, composes it with the window state, evolves the full chain,
//! and averages the reduced density matrices sample by sample in index
//! order (so results do not depend on thread scheduling).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::basis::{Geometry, SectorBasis, SpinConfiguration};
use crate::model::ModelParams;
use crate::scalar::{real, Real};
use crate::spectra::ChainSpectra;
use crate::states::{self, PureState};
use crate::{Cplx, Error, Result};

/// Hermitian, unit-trace, positive matrix over the observation-window
/// (or any small) configuration basis.
#[derive(Clone, Debug)]
pub struct DensityMatrix<T: Real> {
    matrix: DMatrix<Cplx<T>>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates hermiticity, unit trace and positivity before
    /// wrapping the matrix.
    pub fn new(matrix: DMatrix<Cplx<T>>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidDensity(format!(
                "matrix is {}×{}, expected square and non-empty",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm_tol = real::<T>(1e-12).max(T::default_epsilon() * real::<T>(100.0));
        let loose_tol = real::<T>(1e-10).max(T::default_epsilon() * real::<T>(1000.0));
        let mut herm_dev = T::zero();
        for i in 0..matrix.nrows() {
            for j in 0..=i {
                let dev = (matrix[(i, j)] - matrix[(j, i)].conj()).norm_sqr().sqrt();
                herm_dev = herm_dev.max(dev);
            }
        }
        if herm_dev > herm_tol {
            return Err(Error::InvalidDensity(format!(
                "hermiticity violated by {:?}",
                herm_dev.to_f64()
            )));
        }
        let trace = matrix.diagonal().iter().fold(
            Cplx::new(T::zero(), T::zero()),
            |s, &d| s + d,
        );
        if (trace - Cplx::new(T::one(), T::zero())).norm_sqr().sqrt() > loose_tol {
            return Err(Error::InvalidDensity(format!(
                "trace {:?} is not 1",
                trace.re.to_f64()
            )));
        }
        let lambda_min = matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(T::max_value().unwrap(), |m, &l| m.min(l));
        if lambda_min < -loose_tol {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {:?}",
                lambda_min.to_f64()
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<Cplx<T>> {
        &self.matrix
    }

    /// Matrix element `⟨bra|ρ|ket⟩` by raw configuration.
    #[inline]
    pub fn element(&self, bra: SpinConfiguration, ket: SpinConfiguration) -> Cplx<T> {
        self.matrix[(bra.0 as usize, ket.0 as usize)]
    }
}

/// Sampling protocol of the bath-duration ensemble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleSpec<T: Real> {
    pub n_samples: usize,
    pub dt_min: T,
    pub dt_max: T,
    pub seed: u64,
}

impl<T: Real> EnsembleSpec<T> {
    pub fn new(n_samples: usize, dt_min: T, dt_max: T, seed: u64) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::Parameter("ensemble needs at least one sample".into()));
        }
        let (lo, hi) = (dt_min.to_f64(), dt_max.to_f64());
        let finite = lo.is_some_and(f64::is_finite) && hi.is_some_and(f64::is_finite);
        if !finite || dt_min < T::zero() || dt_max < dt_min {
            return Err(Error::Parameter(format!(
                "bath duration range [{lo:?}, {hi:?}] must satisfy 0 ≤ min ≤ max"
            )));
        }
        Ok(EnsembleSpec {
            n_samples,
            dt_min,
            dt_max,
            seed,
        })
    }

    /// Bath duration of sample `k`: one uniform draw from a dedicated
    /// ChaCha stream, so samples are reproducible individually and
    /// independent of evaluation order. The draw happens in `f64`,
    /// making it identical across scalar types.
    pub fn duration(&self, sample: usize) -> T {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(sample as u64);
        let lo = self.dt_min.to_f64().unwrap();
        let hi = self.dt_max.to_f64().unwrap();
        real::<T>(rng.random_range(lo..=hi))
    }
}

/// Uniform grid of `n_points` times covering `[0, t_max]`.
pub fn time_grid<T: Real>(t_max: T, n_points: usize) -> Result<Vec<T>> {
    if n_points < 2 {
        return Err(Error::Parameter("time grid needs at least two points".into()));
    }
    if !(t_max > T::zero()) {
        return Err(Error::Parameter("time grid needs t_max > 0".into()));
    }
    Ok((0..n_points)
        .map(|k| t_max * real::<T>(k as f64) / real::<T>((n_points - 1) as f64))
        .collect())
}

/// Precomputed eigenbases of the full chain and of its bath
/// restriction, ready to evolve states and reduce them to the window.
pub struct EvolutionEngine<T: Real> {
    pub params: ModelParams<T>,
    pub geometry: Geometry,
    pub chain: ChainSpectra<T>,
    pub bath: ChainSpectra<T>,
    /// `(n_up, rank)` of `embed(a, b)` at index `b·2^|QOS| + a`.
    embed_slots: Vec<(u8, u32)>,
}

impl<T: Real> EvolutionEngine<T> {
    /// Diagonalizes every sector of the chain and of the bath.
    pub fn new(params: ModelParams<T>, geometry: Geometry) -> Result<Self> {
        if geometry.n_sites() != params.n_sites {
            return Err(Error::Dimension(format!(
                "geometry over {} sites does not match chain of {} sites",
                geometry.n_sites(),
                params.n_sites
            )));
        }
        let chain = ChainSpectra::full_chain(&params)?;
        let bath = ChainSpectra::bath(&params, &geometry)?;
        let dim_qos = 1usize << geometry.qos_len();
        let dim_bath = 1usize << geometry.bath_len();
        let mut embed_slots = vec![(0u8, 0u32); dim_qos * dim_bath];
        for b in 0..dim_bath {
            for a in 0..dim_qos {
                let full = geometry.embed(
                    SpinConfiguration(a as u32),
                    SpinConfiguration(b as u32),
                );
                let (n_up, rank) = chain.basis.locate(full);
                embed_slots[b * dim_qos + a] = (n_up as u8, rank as u32);
            }
        }
        Ok(EvolutionEngine {
            params,
            geometry,
            chain,
            bath,
            embed_slots,
        })
    }

    #[inline]
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.chain.basis
    }

    /// Evolves a full-chain state to time `t`.
    pub fn evolve(&self, state: &PureState<T>, t: T) -> Result<PureState<T>> {
        evolve_in(&self.chain, state, t)
    }

    /// Evolves a bath-factor state to time `t` under the bath
    /// restriction of the Hamiltonian.
    pub fn evolve_bath(&self, state: &PureState<T>, t: T) -> Result<PureState<T>> {
        evolve_in(&self.bath, state, t)
    }

    /// Energy expectation value of a full-chain state.
    pub fn energy(&self, state: &PureState<T>) -> Result<T> {
        check_state(&self.chain, state)?;
        let mut total = T::zero();
        for (n_up, spectrum) in self.chain.sectors.iter().enumerate() {
            let w = rotate_to_eigenbasis(&spectrum.eigenvectors, state.sector_amplitudes(n_up));
            for (n, &e) in spectrum.eigenvalues.iter().enumerate() {
                total += w[n].norm_sqr() * e;
            }
        }
        Ok(total)
    }

    /// Sample `k` of the ensemble: the bath factor evolved alone for
    /// the random duration `Δt_k`.
    pub fn pre_thermalize(
        &self,
        bath_state: &PureState<T>,
        ensemble: &EnsembleSpec<T>,
        sample: usize,
    ) -> Result<PureState<T>> {
        if sample >= ensemble.n_samples {
            return Err(Error::Parameter(format!(
                "sample index {sample} outside ensemble of {}",
                ensemble.n_samples
            )));
        }
        self.evolve_bath(bath_state, ensemble.duration(sample))
    }

    /// Ensemble-averaged reduced density matrix of the window at each
    /// grid time, for the standard initial states at angles
    /// `(theta_s, theta_b)`. Requires an even number of bath sites.
    pub fn ensemble_reduced(
        &self,
        theta_s: T,
        theta_b: T,
        ensemble: &EnsembleSpec<T>,
        times: &[T],
    ) -> Result<Vec<DensityMatrix<T>>> {
        let qos = states::qos_initial_state(theta_s, self.geometry.qos_len())?;
        let bath = states::qtb_initial_state(theta_b, self.geometry.bath_len())?;
        self.ensemble_reduced_with(&qos, &bath, ensemble, times)
    }

    /// Ensemble-averaged reduced density matrices for arbitrary window
    /// and bath factors.
    pub fn ensemble_reduced_with(
        &self,
        qos_state: &PureState<T>,
        bath_state: &PureState<T>,
        ensemble: &EnsembleSpec<T>,
        times: &[T],
    ) -> Result<Vec<DensityMatrix<T>>> {
        if times.is_empty() {
            return Err(Error::Parameter("empty time grid".into()));
        }
        let per_sample: Vec<Vec<DMatrix<Cplx<T>>>> = (0..ensemble.n_samples)
            .into_par_iter()
            .map(|k| {
                let bath_k = self.pre_thermalize(bath_state, ensemble, k)?;
                let full = states::compose_with_basis(
                    qos_state,
                    &bath_k,
                    &self.geometry,
                    self.chain.basis.clone(),
                )?;
                self.reduced_time_series(&full, times)
            })
            .collect::<Result<Vec<_>>>()?;
        let dim = 1usize << self.geometry.qos_len();
        let weight = Cplx::new(T::one() / real::<T>(ensemble.n_samples as f64), T::zero());
        let mut averaged = Vec::with_capacity(times.len());
        for ti in 0..times.len() {
            let mut acc = DMatrix::from_element(dim, dim, Cplx::new(T::zero(), T::zero()));
            for sample in &per_sample {
                acc += &sample[ti];
            }
            averaged.push(DensityMatrix::new(acc.map(|z| z * weight))?);
        }
        Ok(averaged)
    }

    /// Reduced density matrix of one evolving state at each grid time.
    /// The eigenbasis coefficients are computed once; each time point
    /// then costs one phase twist, one back-rotation and one partial
    /// trace.
    fn reduced_time_series(
        &self,
        state: &PureState<T>,
        times: &[T],
    ) -> Result<Vec<DMatrix<Cplx<T>>>> {
        check_state(&self.chain, state)?;
        let coeffs: Vec<DVector<Cplx<T>>> = self
            .chain
            .sectors
            .iter()
            .enumerate()
            .map(|(n_up, s)| rotate_to_eigenbasis(&s.eigenvectors, state.sector_amplitudes(n_up)))
            .collect();
        let dim_qos = 1usize << self.geometry.qos_len();
        let dim_bath = 1usize << self.geometry.bath_len();
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let blocks: Vec<DVector<Cplx<T>>> = self
                .chain
                .sectors
                .iter()
                .zip(&coeffs)
                .map(|(spectrum, w)| {
                    let twisted = phase_twist(&spectrum.eigenvalues, w, t);
                    rotate_from_eigenbasis(&spectrum.eigenvectors, &twisted)
                })
                .collect();
            let mut rho = DMatrix::from_element(
                dim_qos,
                dim_qos,
                Cplx::new(T::zero(), T::zero()),
            );
            let mut column = vec![Cplx::new(T::zero(), T::zero()); dim_qos];
            for b in 0..dim_bath {
                for (a, slot) in column.iter_mut().enumerate() {
                    let (n_up, rank) = self.embed_slots[b * dim_qos + a];
                    *slot = blocks[n_up as usize][rank as usize];
                }
                for a2 in 0..dim_qos {
                    let conj = column[a2].conj();
                    for a1 in 0..dim_qos {
                        rho[(a1, a2)] += column[a1] * conj;
                    }
                }
            }
            out.push(rho);
        }
        Ok(out)
    }
}

/// Reduced density matrix of the observation window of `geometry`.
pub fn reduced_density_matrix<T: Real>(
    state: &PureState<T>,
    geometry: &Geometry,
) -> Result<DensityMatrix<T>> {
    if state.n_sites() != geometry.n_sites() {
        return Err(Error::Dimension(format!(
            "state over {} sites does not match geometry over {}",
            state.n_sites(),
            geometry.n_sites()
        )));
    }
    let dim_qos = 1usize << geometry.qos_len();
    let dim_bath = 1usize << geometry.bath_len();
    let mut rho = DMatrix::from_element(dim_qos, dim_qos, Cplx::new(T::zero(), T::zero()));
    for b in 0..dim_bath {
        let bath = SpinConfiguration(b as u32);
        let column: Vec<Cplx<T>> = (0..dim_qos)
            .map(|a| state.amplitude(geometry.embed(SpinConfiguration(a as u32), bath)))
            .collect();
        for a2 in 0..dim_qos {
            let conj = column[a2].conj();
            for a1 in 0..dim_qos {
                rho[(a1, a2)] += column[a1] * conj;
            }
        }
    }
    DensityMatrix::new(rho)
}

fn check_state<T: Real>(spectra: &ChainSpectra<T>, state: &PureState<T>) -> Result<()> {
    if state.n_sites() != spectra.n_sites() {
        return Err(Error::Dimension(format!(
            "state over {} sites does not match spectra over {}",
            state.n_sites(),
            spectra.n_sites()
        )));
    }
    Ok(())
}

fn evolve_in<T: Real>(
    spectra: &ChainSpectra<T>,
    state: &PureState<T>,
    t: T,
) -> Result<PureState<T>> {
    check_state(spectra, state)?;
    let blocks = spectra
        .sectors
        .iter()
        .enumerate()
        .map(|(n_up, spectrum)| {
            let w = rotate_to_eigenbasis(&spectrum.eigenvectors, state.sector_amplitudes(n_up));
            let twisted = phase_twist(&spectrum.eigenvalues, &w, t);
            rotate_from_eigenbasis(&spectrum.eigenvectors, &twisted)
        })
        .collect();
    Ok(PureState::from_sector_blocks(spectra.basis.clone(), blocks))
}

/// `Vᵀ ψ` for a real orthogonal `V` and complex `ψ`, done as two real
/// products on the split real and imaginary parts.
fn rotate_to_eigenbasis<T: Real>(v: &DMatrix<T>, psi: &DVector<Cplx<T>>) -> DVector<Cplx<T>> {
    let (re, im) = split_parts(psi);
    join_parts(&v.tr_mul(&re), &v.tr_mul(&im))
}

/// `V w`, the inverse rotation of [`rotate_to_eigenbasis`].
fn rotate_from_eigenbasis<T: Real>(v: &DMatrix<T>, w: &DVector<Cplx<T>>) -> DVector<Cplx<T>> {
    let (re, im) = split_parts(w);
    join_parts(&(v * re), &(v * im))
}

/// Applies `e^{−i E_n t}` to each eigenbasis coefficient.
fn phase_twist<T: Real>(
    energies: &DVector<T>,
    w: &DVector<Cplx<T>>,
    t: T,
) -> DVector<Cplx<T>> {
    DVector::from_iterator(
        w.len(),
        w.iter().zip(energies.iter()).map(|(&c, &e)| {
            let angle = e * t;
            c * Cplx::new(angle.cos(), -angle.sin())
        }),
    )
}

fn split_parts<T: Real>(v: &DVector<Cplx<T>>) -> (DVector<T>, DVector<T>) {
    (
        DVector::from_iterator(v.len(), v.iter().map(|z| z.re)),
        DVector::from_iterator(v.len(), v.iter().map(|z| z.im)),
    )
}

fn join_parts<T: Real>(re: &DVector<T>, im: &DVector<T>) -> DVector<Cplx<T>> {
    DVector::from_iterator(
        re.len(),
        re.iter().zip(im.iter()).map(|(&r, &i)| Cplx::new(r, i)),
    )
}
