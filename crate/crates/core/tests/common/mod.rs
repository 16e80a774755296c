//! Brute-force oracles built from first principles: Kronecker-product
//! operators over the raw 2^L basis, Padé matrix-exponential time
//! evolution, and index-summation partial traces. Nothing here reuses
//! the library's sector machinery beyond basis bookkeeping.

// Shared across test targets; not every target uses every oracle.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use mpemba_core::basis::ChargeSector;
use mpemba_core::model::ModelParams;
use mpemba_core::C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    )
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 0.0),
        ],
    )
}

pub fn sigma_z() -> CMatrix {
    // Row/column 0 is ↓, matching bit value 0.
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(-1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ],
    )
}

/// Embeds a single-site operator at `site` (1-indexed, site 1 on the
/// least significant bit) into the 2^L space.
pub fn site_operator(n_sites: usize, site: usize, op: &CMatrix) -> CMatrix {
    let low = CMatrix::identity(1 << (site - 1), 1 << (site - 1));
    let high = CMatrix::identity(1 << (n_sites - site), 1 << (n_sites - site));
    high.kronecker(op).kronecker(&low)
}

/// Full Hamiltonian assembled term by term from Kronecker products:
/// `Σ_{i<j} J/|i−j| (σˣᵢσˣⱼ + σʸᵢσʸⱼ) + h Σᵢ (i − L/2) σᶻᵢ`.
pub fn kron_hamiltonian(params: &ModelParams<f64>) -> CMatrix {
    let l = params.n_sites;
    let dim = 1usize << l;
    let mut h = CMatrix::zeros(dim, dim);
    for i in 1..=l {
        for j in (i + 1)..=l {
            let coupling = C64::new(params.coupling / (j - i) as f64, 0.0);
            let xx = site_operator(l, i, &sigma_x()) * site_operator(l, j, &sigma_x());
            let yy = site_operator(l, i, &sigma_y()) * site_operator(l, j, &sigma_y());
            h += (xx + yy).map(|z| z * coupling);
        }
        let offset = C64::new(params.field * (i as f64 - l as f64 / 2.0), 0.0);
        h += site_operator(l, i, &sigma_z()).map(|z| z * offset);
    }
    h
}

/// Restriction of a raw-basis operator to one charge sector, in the
/// sector's rank order. Panics if any entry has an imaginary part.
pub fn restrict_to_sector(full: &CMatrix, sector: &ChargeSector) -> DMatrix<f64> {
    let states = sector.states();
    DMatrix::from_fn(states.len(), states.len(), |r, c| {
        let z = full[(states[r].0 as usize, states[c].0 as usize)];
        assert!(z.im.abs() < 1e-14, "complex entry in restricted block");
        z.re
    })
}

/// `e^{−iHt} ψ` through the Padé scaling-and-squaring exponential.
pub fn expm_propagator(h: &CMatrix, t: f64) -> CMatrix {
    h.map(|z| z * C64::new(0.0, -t)).exp()
}

/// Reduced density matrix of the window `[first, last]` by explicit
/// index summation over the bath bits.
pub fn partial_trace_window(psi: &CVector, n_sites: usize, first: usize, last: usize) -> CMatrix {
    let ls = last - first + 1;
    let lb = n_sites - ls;
    let low_mask = (1usize << (first - 1)) - 1;
    let raw_index = |a: usize, b: usize| -> usize {
        let low = b & low_mask;
        let high = b >> (first - 1);
        low | (a << (first - 1)) | (high << (first - 1 + ls))
    };
    let dim = 1usize << ls;
    let mut rho = CMatrix::zeros(dim, dim);
    for a1 in 0..dim {
        for a2 in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..1usize << lb {
                acc += psi[raw_index(a1, b)] * psi[raw_index(a2, b)].conj();
            }
            rho[(a1, a2)] = acc;
        }
    }
    rho
}

/// Normalized Haar-ish product state: each site gets independent polar
/// and azimuthal angles.
pub fn random_product_state<R: Rng>(n_sites: usize, rng: &mut R) -> CVector {
    let mut state = CVector::from_element(1, C64::new(1.0, 0.0));
    for _ in 0..n_sites {
        let alpha: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let site = CVector::from_vec(vec![
            C64::new((alpha / 2.0).cos(), 0.0),
            C64::new(
                (alpha / 2.0).sin() * phase.cos(),
                (alpha / 2.0).sin() * phase.sin(),
            ),
        ]);
        state = site.kronecker(&state);
    }
    state
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
