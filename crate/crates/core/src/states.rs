//! Sector-factored pure states and the engineered initial states of
//! the quench protocol.
//!
//! A [`PureState`] stores one complex amplitude block per charge
//! sector, so charge-resolved quantities (occupations, variance,
//! asymmetry) read off directly and unitary evolution never mixes
//! blocks. Two state factories matter for the quench:
//!
//! * a bath of singlet-like nearest-neighbour pairs whose charge
//!   fluctuations are tuned by an angle `θ_b`, with every pair in
//!   `sin(θ_b/2)/√2 (|↑↑⟩ + |↓↓⟩) + cos(θ_b/2)/√2 (|↑↓⟩ + |↓↑⟩)`,
//! * a tilted product state on the observation window, every site in
//!   `cos(θ_s/2)|↓⟩ − sin(θ_s/2)|↑⟩`,
//!
//! and [`compose_full_state`] interleaves the two factors onto the
//! physical chain.

use std::sync::Arc;

use nalgebra::DVector;

use crate::basis::{Geometry, SectorBasis, SpinConfiguration};
use crate::scalar::{real, Real};
use crate::{Cplx, Error, Result};

/// Normalized pure state of a chain, stored sector-by-sector.
#[derive(Clone, Debug)]
pub struct PureState<T: Real> {
    basis: Arc<SectorBasis>,
    /// Amplitude block per up-spin count, in sector rank order.
    sectors: Vec<DVector<Cplx<T>>>,
}

/// Norm tolerance for state validation, loose enough for `f32`.
fn norm_tolerance<T: Real>() -> T {
    real::<T>(1e-12).max(T::default_epsilon() * real::<T>(100.0))
}

impl<T: Real> PureState<T> {
    /// Wraps a dense amplitude vector (indexed by raw configuration)
    /// into sector blocks. Fails unless `‖ψ‖₂ = 1` within tolerance.
    pub fn from_dense(basis: Arc<SectorBasis>, amplitudes: &[Cplx<T>]) -> Result<Self> {
        if amplitudes.len() != basis.total_dimension() {
            return Err(Error::Dimension(format!(
                "amplitude vector of length {} does not match basis dimension {}",
                amplitudes.len(),
                basis.total_dimension()
            )));
        }
        let mut sectors: Vec<DVector<Cplx<T>>> = basis
            .sectors()
            .iter()
            .map(|s| DVector::from_element(s.dimension(), Cplx::new(T::zero(), T::zero())))
            .collect();
        for (raw, &amp) in amplitudes.iter().enumerate() {
            let (n_up, rank) = basis.locate(SpinConfiguration(raw as u32));
            sectors[n_up][rank] = amp;
        }
        let state = PureState { basis, sectors };
        let norm = state.norm();
        if (norm - T::one()).abs() > norm_tolerance::<T>() {
            return Err(Error::Parameter(format!(
                "state norm {:?} is not 1",
                norm.to_f64()
            )));
        }
        Ok(state)
    }

    /// Like [`PureState::from_dense`] but rescales to unit norm;
    /// fails only on a null vector.
    pub fn normalized(basis: Arc<SectorBasis>, amplitudes: &[Cplx<T>]) -> Result<Self> {
        let norm_sq = amplitudes
            .iter()
            .fold(T::zero(), |s, a| s + a.norm_sqr());
        if norm_sq <= T::zero() {
            return Err(Error::Parameter("cannot normalize the null vector".into()));
        }
        let scale = T::one() / norm_sq.sqrt();
        let scaled: Vec<Cplx<T>> = amplitudes.iter().map(|&a| a.scale(scale)).collect();
        Self::from_dense(basis, &scaled)
    }

    /// Builds a state directly from per-sector blocks.
    pub(crate) fn from_sector_blocks(
        basis: Arc<SectorBasis>,
        sectors: Vec<DVector<Cplx<T>>>,
    ) -> Self {
        debug_assert_eq!(sectors.len(), basis.n_sectors());
        PureState { basis, sectors }
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.basis.n_sites()
    }

    #[inline]
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    /// Amplitude block of the sector with `n_up` up spins.
    #[inline]
    pub fn sector_amplitudes(&self, n_up: usize) -> &DVector<Cplx<T>> {
        &self.sectors[n_up]
    }

    /// Amplitude of one basis configuration.
    #[inline]
    pub fn amplitude(&self, config: SpinConfiguration) -> Cplx<T> {
        let (n_up, rank) = self.basis.locate(config);
        self.sectors[n_up][rank]
    }

    pub fn norm(&self) -> T {
        self.sectors
            .iter()
            .fold(T::zero(), |s, block| {
                s + block.iter().fold(T::zero(), |b, a| b + a.norm_sqr())
            })
            .sqrt()
    }

    /// Flattens back to a dense vector indexed by raw configuration.
    pub fn to_dense(&self) -> Vec<Cplx<T>> {
        let mut out = vec![Cplx::new(T::zero(), T::zero()); self.basis.total_dimension()];
        for (n_up, block) in self.sectors.iter().enumerate() {
            for (rank, &amp) in block.iter().enumerate() {
                out[self.basis.sector(n_up).state(rank).0 as usize] = amp;
            }
        }
        out
    }
}

/// The two-site pair block of the structured bath at angle `theta_b`.
pub fn qtb_pair_state<T: Real>(theta_b: T) -> Result<PureState<T>> {
    qtb_initial_state(theta_b, 2)
}

/// Bath of `n_bath/2` identical nearest-neighbour pairs at angle
/// `theta_b`; `n_bath` must be even. Bit `2p`/`2p+1` hold pair `p`.
pub fn qtb_initial_state<T: Real>(theta_b: T, n_bath: usize) -> Result<PureState<T>> {
    if n_bath == 0 || !n_bath.is_multiple_of(2) {
        return Err(Error::Parameter(format!(
            "pair-structured bath needs an even, positive site count, got {n_bath}"
        )));
    }
    if !theta_b.to_f64().is_some_and(f64::is_finite) {
        return Err(Error::Parameter("bath angle must be finite".into()));
    }
    let basis = Arc::new(SectorBasis::new(n_bath)?);
    let half = theta_b / real::<T>(2.0);
    let inv_sqrt2 = T::one() / real::<T>(2.0).sqrt();
    let aligned = half.sin() * inv_sqrt2; // |↑↑⟩ and |↓↓⟩
    let mixed = half.cos() * inv_sqrt2; // |↑↓⟩ and |↓↑⟩
    let dim = 1usize << n_bath;
    let mut amplitudes = vec![Cplx::new(T::zero(), T::zero()); dim];
    for (raw, slot) in amplitudes.iter_mut().enumerate() {
        let mut amp = T::one();
        for pair in 0..n_bath / 2 {
            let bits = raw >> (2 * pair) & 0b11;
            amp *= match bits {
                0b00 | 0b11 => aligned,
                _ => mixed,
            };
        }
        *slot = Cplx::new(amp, T::zero());
    }
    PureState::from_dense(basis, &amplitudes)
}

/// Tilted product state on `n_qos` sites: every site rotated to
/// `cos(theta_s/2)|↓⟩ − sin(theta_s/2)|↑⟩`.
pub fn qos_initial_state<T: Real>(theta_s: T, n_qos: usize) -> Result<PureState<T>> {
    if !theta_s.to_f64().is_some_and(f64::is_finite) {
        return Err(Error::Parameter("window angle must be finite".into()));
    }
    let basis = Arc::new(SectorBasis::new(n_qos)?);
    let half = theta_s / real::<T>(2.0);
    let down = half.cos();
    let up = -half.sin();
    let dim = 1usize << n_qos;
    let mut amplitudes = vec![Cplx::new(T::zero(), T::zero()); dim];
    for (raw, slot) in amplitudes.iter_mut().enumerate() {
        let n_up = (raw as u32).count_ones() as usize;
        let mut amp = T::one();
        for _ in 0..n_up {
            amp *= up;
        }
        for _ in 0..n_qos - n_up {
            amp *= down;
        }
        *slot = Cplx::new(amp, T::zero());
    }
    PureState::from_dense(basis, &amplitudes)
}

/// Product of a window state and a bath state, interleaved onto the
/// physical chain of `geometry`.
pub fn compose_full_state<T: Real>(
    qos: &PureState<T>,
    bath: &PureState<T>,
    geometry: &Geometry,
) -> Result<PureState<T>> {
    let basis = Arc::new(SectorBasis::new(geometry.n_sites())?);
    compose_with_basis(qos, bath, geometry, basis)
}

pub(crate) fn compose_with_basis<T: Real>(
    qos: &PureState<T>,
    bath: &PureState<T>,
    geometry: &Geometry,
    basis: Arc<SectorBasis>,
) -> Result<PureState<T>> {
    if qos.n_sites() != geometry.qos_len() {
        return Err(Error::Dimension(format!(
            "window state has {} sites, geometry expects {}",
            qos.n_sites(),
            geometry.qos_len()
        )));
    }
    if bath.n_sites() != geometry.bath_len() {
        return Err(Error::Dimension(format!(
            "bath state has {} sites, geometry expects {}",
            bath.n_sites(),
            geometry.bath_len()
        )));
    }
    debug_assert_eq!(basis.n_sites(), geometry.n_sites());
    let mut sectors: Vec<DVector<Cplx<T>>> = basis
        .sectors()
        .iter()
        .map(|s| DVector::from_element(s.dimension(), Cplx::new(T::zero(), T::zero())))
        .collect();
    for qos_sector in qos.basis().sectors() {
        for (qos_rank, &qos_config) in qos_sector.states().iter().enumerate() {
            let qos_amp = qos.sector_amplitudes(qos_sector.n_up())[qos_rank];
            if qos_amp.norm_sqr() == T::zero() {
                continue;
            }
            for bath_sector in bath.basis().sectors() {
                for (bath_rank, &bath_config) in bath_sector.states().iter().enumerate() {
                    let bath_amp = bath.sector_amplitudes(bath_sector.n_up())[bath_rank];
                    let full = geometry.embed(qos_config, bath_config);
                    let (n_up, rank) = basis.locate(full);
                    sectors[n_up][rank] = qos_amp * bath_amp;
                }
            }
        }
    }
    Ok(PureState::from_sector_blocks(basis, sectors))
}

/// Probability of each charge sector, indexed by up-spin count.
pub fn sector_occupations<T: Real>(state: &PureState<T>) -> Vec<T> {
    state
        .sectors
        .iter()
        .map(|block| block.iter().fold(T::zero(), |s, a| s + a.norm_sqr()))
        .collect()
}

/// Mean of the conserved charge `Q = 2·n_up − n` over the sector
/// occupations.
pub fn charge_mean<T: Real>(state: &PureState<T>) -> T {
    let n = state.n_sites();
    sector_occupations(state)
        .iter()
        .enumerate()
        .fold(T::zero(), |s, (n_up, &p)| {
            s + p * real::<T>((2 * n_up) as f64 - n as f64)
        })
}

/// Variance of the conserved charge over the sector occupations.
pub fn charge_variance<T: Real>(state: &PureState<T>) -> T {
    let n = state.n_sites();
    let mean = charge_mean(state);
    sector_occupations(state)
        .iter()
        .enumerate()
        .fold(T::zero(), |s, (n_up, &p)| {
            let q = real::<T>((2 * n_up) as f64 - n as f64) - mean;
            s + p * q * q
        })
}

/// Entanglement asymmetry of a pure state: the Shannon entropy (nats)
/// of its sector occupations.
pub fn state_asymmetry<T: Real>(state: &PureState<T>) -> T {
    crate::asymmetry::shannon_entropy(&sector_occupations(state))
}
