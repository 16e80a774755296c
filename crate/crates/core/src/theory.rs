//! Spectral prediction of window matrix elements for a dephased bath.
//!
//! When the bath factor is replaced by its charge-dephased average
//! `ρ_B = Σ_m (p_m/D_m) Π_m` (occupation `p_m` spread uniformly over
//! the `D_m` bath states of block `m`), a window element
//! `⟨s₁|ρ_S(t)|s₂⟩` becomes a double spectral sum per bath block,
//!
//! ```text
//! T_m(t) = (p_m/D_m) Σ_{n₁,n₂} M1[n₂,n₁] · M2[n₁,n₂] · e^{i(E'_{n₂} − E_{n₁}) t}
//! ```
//!
//! with `E` (`E'`) the eigenvalues of the full-chain sector holding
//! `q₁ + m` (`q₂ + m`) up spins, `M1` the matrix elements of
//! `|s₂⟩⟨s₁| ⊗ 1_B` between the two sectors, and `M2` those of the
//! window coherence `Σ c_{i₁} c*_{i₂} |S^{q₁}_{i₁}⟩⟨S^{q₂}_{i₂}| ⊗ 1_B`
//! built from the initial window amplitudes `c`. Only the terms that
//! conserve the bath block survive the dephasing; at `t = 0` the total
//! collapses exactly to the product `c_{s₁} c*_{s₂}`.

use nalgebra::DMatrix;

use crate::asymmetry::{fit_gaussian_decay, FitError, GaussianFit};
use crate::basis::{ChargeSector, Geometry, SpinConfiguration};
use crate::scalar::{real, Real};
use crate::spectra::{ChainSpectra, SectorSpectrum};
use crate::states::{self, PureState};
use crate::{Cplx, Error, Result};

/// Charge-dephased bath: occupation and dimension per bath block.
#[derive(Clone, Debug)]
pub struct DephasedBath<T: Real> {
    /// Probability of each bath block, indexed by up-spin count.
    pub occupations: Vec<T>,
    /// Dimension of each bath block.
    pub block_dims: Vec<usize>,
}

/// Dephases a bath pure state: keeps its block occupations, forgets
/// everything else.
pub fn dephased_bath<T: Real>(bath_state: &PureState<T>) -> DephasedBath<T> {
    let n = bath_state.n_sites();
    DephasedBath {
        occupations: states::sector_occupations(bath_state),
        block_dims: (0..=n).map(|m| crate::basis::binomial(n, m)).collect(),
    }
}

/// One window matrix element `⟨bra|ρ_S|ket⟩`, both configurations over
/// the window bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OffdiagElement {
    pub bra: SpinConfiguration,
    pub ket: SpinConfiguration,
}

/// Predicted time series of one window element, resolved by bath
/// block.
#[derive(Clone, Debug)]
pub struct OffdiagPrediction<T: Real> {
    pub element: OffdiagElement,
    pub times: Vec<T>,
    /// `(m, T_m(t))` for every bath block with nonzero occupation.
    pub per_m: Vec<(usize, Vec<Cplx<T>>)>,
    /// Sum of the per-block series.
    pub total: Vec<Cplx<T>>,
}

/// Evaluates the dephased-bath prediction for `element` on `times`.
///
/// `tail_cut`, if set, drops the weakest summands: entries of the
/// weight matrix are discarded, smallest magnitude first, until just
/// below `tail_cut` of the total magnitude is lost, and the surviving
/// entries are evaluated sparsely. `None` keeps the exact dense sum.
pub fn predict_offdiagonal<T: Real>(
    chain: &ChainSpectra<T>,
    geometry: &Geometry,
    qos_state: &PureState<T>,
    bath: &DephasedBath<T>,
    element: OffdiagElement,
    times: &[T],
    tail_cut: Option<T>,
) -> Result<OffdiagPrediction<T>> {
    validate_inputs(chain, geometry, qos_state, bath, element, times)?;
    if let Some(cut) = tail_cut {
        if !(cut >= T::zero() && cut < T::one()) {
            return Err(Error::Parameter("tail cut must lie in [0, 1)".into()));
        }
    }
    let q1 = element.bra.n_up();
    let q2 = element.ket.n_up();
    let qos_basis = qos_state.basis().clone();
    let n_bath = geometry.bath_len();
    let mut per_m = Vec::new();
    let mut total = vec![Cplx::new(T::zero(), T::zero()); times.len()];
    // Occupations at the level of squared round-off are treated as
    // empty blocks rather than dragged through the spectral sum.
    let occupation_floor = (T::default_epsilon() * real::<T>(100.0)).powi(2);
    for m in 0..=n_bath {
        let p_m = bath.occupations[m];
        if p_m <= occupation_floor {
            continue;
        }
        let bath_sector = ChargeSector::enumerate(n_bath, m)?;
        let spectrum_1 = chain.sector(q1 + m);
        let spectrum_2 = chain.sector(q2 + m);
        // M1[n₂,n₁]: elements of |s₂⟩⟨s₁| ⊗ 1_B.
        let g1 = gather_rows(spectrum_1, chain, geometry, element.bra, &bath_sector);
        let g2 = gather_rows(spectrum_2, chain, geometry, element.ket, &bath_sector);
        let m1 = g2.tr_mul(&g1);
        // M2[n₁,n₂]: elements of the initial window coherence.
        let ga = weighted_gather(spectrum_1, chain, geometry, qos_state, &qos_basis, q1, &bath_sector, false);
        let gb = weighted_gather(spectrum_2, chain, geometry, qos_state, &qos_basis, q2, &bath_sector, true);
        let m2 = ga.tr_mul(&gb);
        // W[n₁,n₂] = (p_m/D_m)·M1[n₂,n₁]·M2[n₁,n₂], evaluated against
        // the phases e^{−iE[n₁]t}·e^{+iE'[n₂]t}.
        let prefactor = p_m / real::<T>(bath_sector.dimension() as f64);
        let mut weights = m2;
        for n1 in 0..weights.nrows() {
            for n2 in 0..weights.ncols() {
                weights[(n1, n2)] = weights[(n1, n2)].scale(m1[(n2, n1)] * prefactor);
            }
        }
        let series = match tail_cut {
            Some(cut) => evaluate_sparse(&weights, spectrum_1, spectrum_2, times, cut),
            None => evaluate_dense(&weights, spectrum_1, spectrum_2, times),
        };
        for (acc, &v) in total.iter_mut().zip(&series) {
            *acc += v;
        }
        per_m.push((m, series));
    }
    Ok(OffdiagPrediction {
        element,
        times: times.to_vec(),
        per_m,
        total,
    })
}

/// Squared matrix elements `|⟨q₂+m, n₂| (|ket⟩⟨bra| ⊗ 1_B) |q₁+m, n₁⟩|²`
/// as a `dim₁ × dim₂` weight matrix for gap histograms.
pub fn transition_weights<T: Real>(
    chain: &ChainSpectra<T>,
    geometry: &Geometry,
    element: OffdiagElement,
    m: usize,
) -> Result<DMatrix<T>> {
    let n_bath = geometry.bath_len();
    if chain.n_sites() != geometry.n_sites() {
        return Err(Error::Dimension(
            "spectra and geometry cover different chains".into(),
        ));
    }
    check_window_config(element.bra, geometry)?;
    check_window_config(element.ket, geometry)?;
    if m > n_bath {
        return Err(Error::Parameter(format!(
            "bath block {m} outside 0..={n_bath}"
        )));
    }
    let bath_sector = ChargeSector::enumerate(n_bath, m)?;
    let g1 = gather_rows(
        chain.sector(element.bra.n_up() + m),
        chain,
        geometry,
        element.bra,
        &bath_sector,
    );
    let g2 = gather_rows(
        chain.sector(element.ket.n_up() + m),
        chain,
        geometry,
        element.ket,
        &bath_sector,
    );
    let m1 = g2.tr_mul(&g1);
    let mut weights = DMatrix::<T>::zeros(m1.ncols(), m1.nrows());
    for n1 in 0..weights.nrows() {
        for n2 in 0..weights.ncols() {
            let v = m1[(n2, n1)];
            weights[(n1, n2)] = v * v;
        }
    }
    Ok(weights)
}

/// Gaussian decay fit of `|T_m(t)|` for every bath block of a
/// prediction.
pub fn per_m_timescale<T: Real>(
    prediction: &OffdiagPrediction<T>,
    floor: T,
) -> Vec<(usize, std::result::Result<GaussianFit<T>, FitError>)> {
    prediction
        .per_m
        .iter()
        .map(|(m, series)| {
            let magnitude: Vec<T> = series.iter().map(|z| z.norm_sqr().sqrt()).collect();
            (*m, fit_gaussian_decay(&prediction.times, &magnitude, floor))
        })
        .collect()
}

fn validate_inputs<T: Real>(
    chain: &ChainSpectra<T>,
    geometry: &Geometry,
    qos_state: &PureState<T>,
    bath: &DephasedBath<T>,
    element: OffdiagElement,
    times: &[T],
) -> Result<()> {
    if chain.n_sites() != geometry.n_sites() {
        return Err(Error::Dimension(
            "spectra and geometry cover different chains".into(),
        ));
    }
    if qos_state.n_sites() != geometry.qos_len() {
        return Err(Error::Dimension(format!(
            "window state has {} sites, geometry expects {}",
            qos_state.n_sites(),
            geometry.qos_len()
        )));
    }
    if bath.occupations.len() != geometry.bath_len() + 1 {
        return Err(Error::Dimension(format!(
            "bath has {} blocks, geometry expects {}",
            bath.occupations.len(),
            geometry.bath_len() + 1
        )));
    }
    if times.is_empty() {
        return Err(Error::Parameter("empty time grid".into()));
    }
    check_window_config(element.bra, geometry)?;
    check_window_config(element.ket, geometry)
}

fn check_window_config(config: SpinConfiguration, geometry: &Geometry) -> Result<()> {
    if config.0 >> geometry.qos_len() != 0 {
        return Err(Error::Parameter(format!(
            "configuration {:#b} does not fit the {}-site window",
            config.0,
            geometry.qos_len()
        )));
    }
    Ok(())
}

/// Rows of the full-sector eigenvector matrix at the configurations
/// `embed(window, b)` for every bath state `b` of `bath_sector`.
fn gather_rows<T: Real>(
    spectrum: &SectorSpectrum<T>,
    chain: &ChainSpectra<T>,
    geometry: &Geometry,
    window: SpinConfiguration,
    bath_sector: &ChargeSector,
) -> DMatrix<T> {
    let mut g = DMatrix::<T>::zeros(bath_sector.dimension(), spectrum.dimension());
    for (bi, &b) in bath_sector.states().iter().enumerate() {
        let (n_up, rank) = chain.basis.locate(geometry.embed(window, b));
        debug_assert_eq!(n_up, spectrum.sector.n_up());
        g.row_mut(bi).copy_from(&spectrum.eigenvectors.row(rank));
    }
    g
}

/// Gather rows summed over all window states of charge `q`, weighted
/// by the initial window amplitudes (conjugated for the ket side).
#[allow(clippy::too_many_arguments)]
fn weighted_gather<T: Real>(
    spectrum: &SectorSpectrum<T>,
    chain: &ChainSpectra<T>,
    geometry: &Geometry,
    qos_state: &PureState<T>,
    qos_basis: &crate::basis::SectorBasis,
    q: usize,
    bath_sector: &ChargeSector,
    conjugate: bool,
) -> DMatrix<Cplx<T>> {
    let mut g = DMatrix::from_element(
        bath_sector.dimension(),
        spectrum.dimension(),
        Cplx::new(T::zero(), T::zero()),
    );
    for (i, &window) in qos_basis.sector(q).states().iter().enumerate() {
        let mut c = qos_state.sector_amplitudes(q)[i];
        if conjugate {
            c = c.conj();
        }
        if c.norm_sqr() == T::zero() {
            continue;
        }
        for (bi, &b) in bath_sector.states().iter().enumerate() {
            let (_, rank) = chain.basis.locate(geometry.embed(window, b));
            for n in 0..spectrum.dimension() {
                g[(bi, n)] += c.scale(spectrum.eigenvectors[(rank, n)]);
            }
        }
    }
    g
}

/// Dense phase-factorized evaluation: for each time, one transposed
/// matrix-vector product against `e^{+iE t}` followed by a contraction
/// with `e^{−iE' t}`.
fn evaluate_dense<T: Real>(
    weights: &DMatrix<Cplx<T>>,
    spectrum_1: &SectorSpectrum<T>,
    spectrum_2: &SectorSpectrum<T>,
    times: &[T],
) -> Vec<Cplx<T>> {
    times
        .iter()
        .map(|&t| {
            let u = nalgebra::DVector::from_iterator(
                spectrum_1.dimension(),
                spectrum_1.eigenvalues.iter().map(|&e| {
                    let angle = e * t;
                    Cplx::new(angle.cos(), -angle.sin())
                }),
            );
            let v = weights.tr_mul(&u);
            let mut acc = Cplx::new(T::zero(), T::zero());
            for (n2, &e) in spectrum_2.eigenvalues.iter().enumerate() {
                let angle = e * t;
                acc += v[n2] * Cplx::new(angle.cos(), angle.sin());
            }
            acc
        })
        .collect()
}

/// Magnitude-truncated evaluation: keeps the strongest weights whose
/// complement stays below `cut` of the total magnitude.
fn evaluate_sparse<T: Real>(
    weights: &DMatrix<Cplx<T>>,
    spectrum_1: &SectorSpectrum<T>,
    spectrum_2: &SectorSpectrum<T>,
    times: &[T],
    cut: T,
) -> Vec<Cplx<T>> {
    let mut magnitudes: Vec<(T, u32, u32)> = Vec::with_capacity(weights.len());
    let mut total = T::zero();
    for n1 in 0..weights.nrows() {
        for n2 in 0..weights.ncols() {
            let mag = weights[(n1, n2)].norm_sqr().sqrt();
            total += mag;
            magnitudes.push((mag, n1 as u32, n2 as u32));
        }
    }
    magnitudes.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite weights"));
    let budget = cut * total;
    let mut dropped = T::zero();
    let mut first_kept = 0;
    for (k, &(mag, _, _)) in magnitudes.iter().enumerate() {
        if dropped + mag < budget {
            dropped += mag;
            first_kept = k + 1;
        } else {
            break;
        }
    }
    let kept = &magnitudes[first_kept..];
    times
        .iter()
        .map(|&t| {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for &(_, n1, n2) in kept {
                let gap =
                    spectrum_2.eigenvalues[n2 as usize] - spectrum_1.eigenvalues[n1 as usize];
                let angle = gap * t;
                acc += weights[(n1 as usize, n2 as usize)] * Cplx::new(angle.cos(), angle.sin());
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::time_grid;
    use crate::model::ModelParams;
    use crate::states::{qos_initial_state, qtb_initial_state};

    fn setup() -> (ChainSpectra<f64>, Geometry, PureState<f64>, DephasedBath<f64>) {
        let params = ModelParams::new(1.0, 0.2, 7).unwrap();
        let geometry = Geometry::new(7, 3, 5).unwrap();
        let chain = ChainSpectra::full_chain(&params).unwrap();
        let qos = qos_initial_state(0.9, 3).unwrap();
        let bath = dephased_bath(&qtb_initial_state(1.7, 4).unwrap());
        (chain, geometry, qos, bath)
    }

    fn element(bra: u32, ket: u32) -> OffdiagElement {
        OffdiagElement {
            bra: SpinConfiguration(bra),
            ket: SpinConfiguration(ket),
        }
    }

    #[test]
    fn initial_value_is_window_coherence() {
        let (chain, geometry, qos, bath) = setup();
        let times = time_grid(10.0, 21).unwrap();
        for (bra, ket) in [(0b001, 0b000), (0b001, 0b011), (0b101, 0b010)] {
            let pred = predict_offdiagonal(
                &chain,
                &geometry,
                &qos,
                &bath,
                element(bra, ket),
                &times,
                None,
            )
            .unwrap();
            let expected = qos.amplitude(SpinConfiguration(bra))
                * qos.amplitude(SpinConfiguration(ket)).conj();
            assert!(
                (pred.total[0] - expected).norm() < 1e-10,
                "bra={bra:#b} ket={ket:#b}"
            );
        }
    }

    #[test]
    fn per_block_series_sum_to_total() {
        let (chain, geometry, qos, bath) = setup();
        let times = time_grid(5.0, 11).unwrap();
        let pred = predict_offdiagonal(
            &chain,
            &geometry,
            &qos,
            &bath,
            element(0b001, 0b011),
            &times,
            None,
        )
        .unwrap();
        for (ti, &tot) in pred.total.iter().enumerate() {
            let sum = pred
                .per_m
                .iter()
                .fold(crate::C64::new(0.0, 0.0), |s, (_, series)| s + series[ti]);
            assert!((tot - sum).norm() < 1e-12);
        }
    }

    #[test]
    fn swapping_bra_and_ket_conjugates_the_series() {
        let (chain, geometry, qos, bath) = setup();
        let times = time_grid(4.0, 9).unwrap();
        let forward = predict_offdiagonal(
            &chain,
            &geometry,
            &qos,
            &bath,
            element(0b001, 0b011),
            &times,
            None,
        )
        .unwrap();
        let backward = predict_offdiagonal(
            &chain,
            &geometry,
            &qos,
            &bath,
            element(0b011, 0b001),
            &times,
            None,
        )
        .unwrap();
        for (f, b) in forward.total.iter().zip(&backward.total) {
            assert!((f - b.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn truncated_sum_tracks_dense_sum() {
        let (chain, geometry, qos, bath) = setup();
        let times = time_grid(8.0, 17).unwrap();
        let dense = predict_offdiagonal(
            &chain,
            &geometry,
            &qos,
            &bath,
            element(0b001, 0b011),
            &times,
            None,
        )
        .unwrap();
        let truncated = predict_offdiagonal(
            &chain,
            &geometry,
            &qos,
            &bath,
            element(0b001, 0b011),
            &times,
            Some(1e-6),
        )
        .unwrap();
        let scale: f64 = dense.total.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (d, s) in dense.total.iter().zip(&truncated.total) {
            assert!((d - s).norm() < 1e-5 * scale);
        }
        // Full truncation-free sparse path (cut = 0) is exact.
        let zero_cut = predict_offdiagonal(
            &chain,
            &geometry,
            &qos,
            &bath,
            element(0b001, 0b011),
            &times,
            Some(0.0),
        )
        .unwrap();
        for (d, s) in dense.total.iter().zip(&zero_cut.total) {
            assert!((d - s).norm() < 1e-10);
        }
    }

    #[test]
    fn empty_bath_blocks_are_skipped() {
        let (chain, geometry, qos, _) = setup();
        // Pair bath at θ_b = π occupies only even blocks.
        let bath = dephased_bath(&qtb_initial_state(std::f64::consts::PI, 4).unwrap());
        let times = time_grid(3.0, 7).unwrap();
        let pred = predict_offdiagonal(
            &chain,
            &geometry,
            &qos,
            &bath,
            element(0b001, 0b011),
            &times,
            None,
        )
        .unwrap();
        let blocks: Vec<usize> = pred.per_m.iter().map(|(m, _)| *m).collect();
        assert_eq!(blocks, vec![0, 2, 4]);
    }

    #[test]
    fn input_validation() {
        let (chain, geometry, qos, bath) = setup();
        let times = time_grid(3.0, 7).unwrap();
        // Configuration outside the 3-bit window.
        assert!(predict_offdiagonal(
            &chain,
            &geometry,
            &qos,
            &bath,
            element(0b1000, 0b001),
            &times,
            None
        )
        .is_err());
        // Window state of the wrong size.
        let wrong = qos_initial_state(0.9, 2).unwrap();
        assert!(predict_offdiagonal(
            &chain,
            &geometry,
            &wrong,
            &bath,
            element(0b001, 0b000),
            &times,
            None
        )
        .is_err());
        // Bad tail cut.
        assert!(predict_offdiagonal(
            &chain,
            &geometry,
            &qos,
            &bath,
            element(0b001, 0b000),
            &times,
            Some(1.5)
        )
        .is_err());
        assert!(transition_weights(&chain, &geometry, element(0b001, 0b011), 99).is_err());
    }

    #[test]
    fn transition_weights_shape_and_content() {
        let (chain, geometry, _, _) = setup();
        let m = 2;
        let w = transition_weights(&chain, &geometry, element(0b001, 0b011), m).unwrap();
        assert_eq!(w.nrows(), chain.sector(1 + m).dimension());
        assert_eq!(w.ncols(), chain.sector(2 + m).dimension());
        assert!(w.iter().all(|&x| x >= 0.0));
        // Total weight equals Σ_b ⟨embed(bra,b)|embed(bra,b)⟩ = D_m by
        // completeness of both eigenbases.
        let total: f64 = w.iter().sum();
        let d_m = crate::basis::binomial(4, m) as f64;
        assert!((total - d_m).abs() < 1e-10);
    }
}
