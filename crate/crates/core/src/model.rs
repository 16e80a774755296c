//! Long-range XY Hamiltonian with a linear longitudinal field,
//! assembled block-by-block inside fixed-charge sectors.
//!
//! On a chain of `L` sites (open boundary),
//!
//! ```text
//! H = Σ_{i<j} J/|i−j| (σ^x_i σ^x_j + σ^y_i σ^y_j) + h Σ_i (i − L/2) σ^z_i
//! ```
//!
//! The XY exchange conserves the total magnetization, so `H` never
//! couples different up-spin counts: in the bitstring basis it moves a
//! single up spin from site `i` to an empty site `j` with matrix
//! element `2J/|i−j|`, while the field term is diagonal. Restricting a
//! block to a subset of sites (e.g. the bath of a [`Geometry`]) keeps
//! the *physical* site indices in both the couplings and the field, so
//! a bath block is exactly the full Hamiltonian with the window sites
//! deleted.

use nalgebra::DMatrix;

use crate::basis::{ChargeSector, Geometry};
use crate::scalar::{real, Real};
use crate::{Error, Result};

/// Couplings of the chain Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<T: Real> {
    /// Exchange strength `J` of the `1/|i−j|` XY coupling.
    pub coupling: T,
    /// Strength `h` of the linear field `h (i − L/2) σ^z_i`.
    pub field: T,
    /// Chain length `L`.
    pub n_sites: usize,
}

impl<T: Real> ModelParams<T> {
    pub fn new(coupling: T, field: T, n_sites: usize) -> Result<Self> {
        if !(2..=crate::basis::MAX_SITES).contains(&n_sites) {
            return Err(Error::Parameter(format!(
                "chain length {n_sites} outside 2..={}",
                crate::basis::MAX_SITES
            )));
        }
        for (name, value) in [("coupling", coupling), ("field", field)] {
            if !value.to_f64().is_some_and(f64::is_finite) {
                return Err(Error::Parameter(format!("{name} must be finite")));
            }
        }
        Ok(ModelParams {
            coupling,
            field,
            n_sites,
        })
    }

    /// Field prefactor `h (i − L/2)` at physical site `i`.
    #[inline]
    fn field_at(&self, site: usize) -> T {
        let center = real::<T>(self.n_sites as f64 / 2.0);
        self.field * (real::<T>(site as f64) - center)
    }

    /// Hopping element `2J/|i−j|` between physical sites `i ≠ j`.
    #[inline]
    fn hop(&self, i: usize, j: usize) -> T {
        let distance = real::<T>((i as f64 - j as f64).abs());
        real::<T>(2.0) * self.coupling / distance
    }
}

/// One fixed-charge block of the Hamiltonian, together with the sector
/// it acts on and the physical sites it was built from.
#[derive(Clone, Debug)]
pub struct SectorHamiltonian<T: Real> {
    pub sector: ChargeSector,
    /// Physical (1-indexed) sites carried by the factor bits.
    pub sites: Vec<usize>,
    /// Dense symmetric block, indexed by sector rank.
    pub matrix: DMatrix<T>,
}

/// Builds the Hamiltonian block for one full-chain sector.
pub fn build_sector_hamiltonian<T: Real>(
    params: &ModelParams<T>,
    sector: &ChargeSector,
) -> Result<SectorHamiltonian<T>> {
    if sector.n_sites() != params.n_sites {
        return Err(Error::Dimension(format!(
            "sector over {} sites does not match chain of {} sites",
            sector.n_sites(),
            params.n_sites
        )));
    }
    let sites: Vec<usize> = (1..=params.n_sites).collect();
    build_on_sites(params, sector, sites)
}

/// Builds the bath Hamiltonian block for one bath sector: the chain
/// Hamiltonian restricted to the bath sites of `geometry`, with all
/// couplings and field offsets still referring to the original
/// full-chain site positions.
pub fn build_bath_hamiltonian<T: Real>(
    params: &ModelParams<T>,
    geometry: &Geometry,
    sector: &ChargeSector,
) -> Result<SectorHamiltonian<T>> {
    if geometry.n_sites() != params.n_sites {
        return Err(Error::Dimension(format!(
            "geometry over {} sites does not match chain of {} sites",
            geometry.n_sites(),
            params.n_sites
        )));
    }
    if sector.n_sites() != geometry.bath_len() {
        return Err(Error::Dimension(format!(
            "sector over {} sites does not match bath of {} sites",
            sector.n_sites(),
            geometry.bath_len()
        )));
    }
    build_on_sites(params, sector, geometry.bath_sites())
}

fn build_on_sites<T: Real>(
    params: &ModelParams<T>,
    sector: &ChargeSector,
    sites: Vec<usize>,
) -> Result<SectorHamiltonian<T>> {
    let dim = sector.dimension();
    let mut matrix = DMatrix::<T>::zeros(dim, dim);
    for (row, &config) in sector.states().iter().enumerate() {
        let mut diagonal = T::zero();
        for (bit, &site) in sites.iter().enumerate() {
            let up = config.0 >> bit & 1 == 1;
            let sign = if up { T::one() } else { -T::one() };
            diagonal += params.field_at(site) * sign;
            if !up {
                continue;
            }
            // Hop the up spin at `bit` to every empty position.
            for (target, &target_site) in sites.iter().enumerate() {
                if config.0 >> target & 1 == 1 {
                    continue;
                }
                let hopped =
                    crate::basis::SpinConfiguration(config.0 ^ (1 << bit) | (1 << target));
                let col = sector
                    .rank(hopped)
                    .expect("hopping preserves the up-spin count");
                matrix[(row, col)] = params.hop(site, target_site);
            }
        }
        matrix[(row, row)] = diagonal;
    }
    Ok(SectorHamiltonian {
        sector: sector.clone(),
        sites,
        matrix,
    })
}

/// Assembles the full 2^L Hamiltonian as one dense matrix in the raw
/// bitstring basis. Only intended for small chains (operator-space
/// diagnostics); the sector blocks are the production path.
pub fn full_hamiltonian<T: Real>(params: &ModelParams<T>) -> Result<DMatrix<T>> {
    let n = params.n_sites;
    if n > 14 {
        return Err(Error::Parameter(format!(
            "dense full-space Hamiltonian limited to 14 sites, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut matrix = DMatrix::<T>::zeros(dim, dim);
    for raw in 0..dim as u32 {
        let config = crate::basis::SpinConfiguration(raw);
        let mut diagonal = T::zero();
        for site in 1..=n {
            let sign = real::<T>(config.sigma_z(site) as f64);
            diagonal += params.field_at(site) * sign;
            if !config.is_up(site) {
                continue;
            }
            for target in 1..=n {
                if config.is_up(target) {
                    continue;
                }
                let hopped = config.flipped(site).flipped(target);
                matrix[(raw as usize, hopped.0 as usize)] = params.hop(site, target);
            }
        }
        matrix[(raw as usize, raw as usize)] = diagonal;
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{ChargeSector, Geometry, SpinConfiguration};

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, 0.2, 15).is_ok());
        assert!(ModelParams::new(1.0, 0.2, 1).is_err());
        assert!(ModelParams::new(f64::NAN, 0.2, 4).is_err());
        assert!(ModelParams::new(1.0, f64::INFINITY, 4).is_err());
    }

    #[test]
    fn two_site_single_up_block() {
        // Basis {|ud⟩, |du⟩}: diagonal ∓h from the field gradient,
        // off-diagonal 2J from the nearest-neighbour hop.
        let params = ModelParams::<f64>::new(0.7, 0.3, 2).unwrap();
        let sector = ChargeSector::enumerate(2, 1).unwrap();
        let block = build_sector_hamiltonian(&params, &sector).unwrap();
        let h = &block.matrix;
        assert!((h[(0, 0)] - (-0.3)).abs() < 1e-15);
        assert!((h[(1, 1)] - 0.3).abs() < 1e-15);
        assert!((h[(0, 1)] - 1.4).abs() < 1e-15);
        assert!((h[(1, 0)] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn blocks_are_exactly_symmetric() {
        let params = ModelParams::new(1.0, 0.2, 9).unwrap();
        for n_up in 0..=9 {
            let sector = ChargeSector::enumerate(9, n_up).unwrap();
            let block = build_sector_hamiltonian(&params, &sector).unwrap();
            let h = &block.matrix;
            for i in 0..h.nrows() {
                for j in 0..h.ncols() {
                    assert_eq!(h[(i, j)], h[(j, i)]);
                }
            }
        }
    }

    #[test]
    fn coupling_decays_with_distance() {
        let params = ModelParams::new(1.0, 0.0, 5).unwrap();
        let sector = ChargeSector::enumerate(5, 1).unwrap();
        let block = build_sector_hamiltonian(&params, &sector).unwrap();
        // Single up spin: rank k ↔ spin on site k+1.
        for i in 0..5 {
            for j in 0..5 {
                if i == j {
                    continue;
                }
                let expected = 2.0 / (i as f64 - j as f64).abs();
                assert!((block.matrix[(i, j)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bath_block_keeps_physical_site_indices() {
        let params = ModelParams::<f64>::new(1.0, 0.2, 7).unwrap();
        let geometry = Geometry::new(7, 3, 4).unwrap();
        assert_eq!(geometry.bath_sites(), vec![1, 2, 5, 6, 7]);
        let sector = ChargeSector::enumerate(5, 1).unwrap();
        let block = build_bath_hamiltonian(&params, &geometry, &sector).unwrap();
        // Bath slots 2 and 3 sit on physical sites 2 and 5: distance 3.
        assert!((block.matrix[(1, 2)] - 2.0 / 3.0).abs() < 1e-15);
        // Slot 1 on site 1: field offset h(1 − 7/2) for the up spin,
        // plus −h(i − 7/2) for each down site.
        let h = 0.2;
        let expected: f64 = h * (1.0 - 3.5) - h * ((2.0 - 3.5) + (5.0 - 3.5) + (6.0 - 3.5) + (7.0 - 3.5));
        assert!((block.matrix[(0, 0)] - expected).abs() < 1e-14);
    }

    #[test]
    fn full_matrix_agrees_with_sector_blocks() {
        let params = ModelParams::new(0.9, 0.4, 6).unwrap();
        let full = full_hamiltonian(&params).unwrap();
        for n_up in 0..=6 {
            let sector = ChargeSector::enumerate(6, n_up).unwrap();
            let block = build_sector_hamiltonian(&params, &sector).unwrap();
            for (i, &ci) in sector.states().iter().enumerate() {
                for (j, &cj) in sector.states().iter().enumerate() {
                    assert_eq!(full[(ci.0 as usize, cj.0 as usize)], block.matrix[(i, j)]);
                }
            }
        }
        // Everything off the sector blocks vanishes: H conserves charge.
        for a in 0..full.nrows() {
            for b in 0..full.ncols() {
                if SpinConfiguration(a as u32).n_up() != SpinConfiguration(b as u32).n_up() {
                    assert_eq!(full[(a, b)], 0.0);
                }
            }
        }
    }
}
