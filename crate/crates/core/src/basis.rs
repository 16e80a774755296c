//! Bitstring basis for chains of spin-1/2 sites and its decomposition
//! into sectors of fixed up-spin count.
//!
//! Site `i` (1-indexed) lives on bit `i − 1`; a set bit is an up spin
//! (`σ^z = +1`). The conserved charge of a configuration on `n` sites
//! is `Q = Σ_i σ^z_i = 2·n_up − n`, so sectors are labelled by their
//! up-spin count `n_up` and hold all `C(n, n_up)` configurations in
//! ascending numeric order. [`Geometry`] splits a chain into a
//! contiguous observation window (QOS) and the remaining bath sites,
//! and maps factor configurations to full-chain configurations.

use crate::{Error, Result};

/// Largest supported chain length; keeps every sector enumerable and
/// bitmasks inside a `u32`.
pub const MAX_SITES: usize = 24;

/// Basis configuration of a set of spin-1/2 sites, one bit per site
/// (set = up). For factor spaces (QOS, bath) the bits index the
/// *ordered site list* of the factor, not the physical chain.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct SpinConfiguration(pub u32);

impl SpinConfiguration {
    /// All spins down.
    pub const ALL_DOWN: Self = SpinConfiguration(0);

    /// Number of up spins.
    #[inline]
    pub fn n_up(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Whether site `i` (1-indexed) is up.
    #[inline]
    pub fn is_up(self, site: usize) -> bool {
        debug_assert!(site >= 1);
        self.0 >> (site - 1) & 1 == 1
    }

    /// `σ^z` eigenvalue (±1) at site `i` (1-indexed).
    #[inline]
    pub fn sigma_z(self, site: usize) -> i32 {
        if self.is_up(site) {
            1
        } else {
            -1
        }
    }

    /// Configuration with the spin at site `i` (1-indexed) flipped.
    #[inline]
    pub fn flipped(self, site: usize) -> Self {
        SpinConfiguration(self.0 ^ (1 << (site - 1)))
    }

    /// Parses a string of `u`/`d` characters, site 1 first.
    pub fn parse(pattern: &str) -> Result<Self> {
        if pattern.len() > MAX_SITES {
            return Err(Error::Parameter(format!(
                "configuration pattern longer than {MAX_SITES} sites"
            )));
        }
        let mut bits = 0u32;
        for (k, ch) in pattern.chars().enumerate() {
            match ch {
                'u' | 'U' => bits |= 1 << k,
                'd' | 'D' => {}
                other => {
                    return Err(Error::Parameter(format!(
                        "configuration pattern may only contain 'u'/'d', got {other:?}"
                    )))
                }
            }
        }
        Ok(SpinConfiguration(bits))
    }
}

/// Conserved charge `Q = 2·n_up − n_sites` of a configuration.
#[inline]
pub fn charge_of(config: SpinConfiguration, n_sites: usize) -> i32 {
    2 * config.n_up() as i32 - n_sites as i32
}

/// All configurations of `n_sites` sites with exactly `n_up` up spins,
/// in ascending numeric order.
#[derive(Clone, Debug)]
pub struct ChargeSector {
    n_sites: usize,
    n_up: usize,
    states: Vec<SpinConfiguration>,
}

impl ChargeSector {
    /// Enumerates the sector with `n_up` up spins on `n_sites` sites.
    pub fn enumerate(n_sites: usize, n_up: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::Parameter(format!(
                "chain length {n_sites} outside 1..={MAX_SITES}"
            )));
        }
        if n_up > n_sites {
            return Err(Error::Parameter(format!(
                "cannot place {n_up} up spins on {n_sites} sites"
            )));
        }
        let mut states = Vec::with_capacity(binomial(n_sites, n_up));
        if n_up == 0 {
            states.push(SpinConfiguration::ALL_DOWN);
        } else {
            // Gosper's hack: steps through all n_up-bit patterns in
            // ascending order.
            let limit = 1u32 << n_sites;
            let mut c = (1u32 << n_up) - 1;
            while c < limit {
                states.push(SpinConfiguration(c));
                let lowest = c & c.wrapping_neg();
                let ripple = c + lowest;
                c = ripple | ((c ^ ripple) >> (lowest.trailing_zeros() + 2));
            }
        }
        Ok(ChargeSector {
            n_sites,
            n_up,
            states,
        })
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[inline]
    pub fn n_up(&self) -> usize {
        self.n_up
    }

    /// Charge `2·n_up − n_sites` common to all states of the sector.
    #[inline]
    pub fn charge(&self) -> i32 {
        2 * self.n_up as i32 - self.n_sites as i32
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    /// States in ascending numeric order.
    #[inline]
    pub fn states(&self) -> &[SpinConfiguration] {
        &self.states
    }

    #[inline]
    pub fn state(&self, rank: usize) -> SpinConfiguration {
        self.states[rank]
    }

    /// Position of `config` within the sector, if it belongs to it.
    #[inline]
    pub fn rank(&self, config: SpinConfiguration) -> Option<usize> {
        self.states.binary_search(&config).ok()
    }
}

/// The full 2^n basis of a chain, grouped into its `n + 1` charge
/// sectors.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    n_sites: usize,
    sectors: Vec<ChargeSector>,
    /// Flat lookup: raw configuration → (n_up, rank within sector).
    locate: Vec<(u8, u32)>,
}

impl SectorBasis {
    pub fn new(n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::Parameter(format!(
                "chain length {n_sites} outside 1..={MAX_SITES}"
            )));
        }
        let sectors = (0..=n_sites)
            .map(|n_up| ChargeSector::enumerate(n_sites, n_up))
            .collect::<Result<Vec<_>>>()?;
        let mut locate = vec![(0u8, 0u32); 1 << n_sites];
        for sector in &sectors {
            for (rank, &config) in sector.states().iter().enumerate() {
                locate[config.0 as usize] = (sector.n_up() as u8, rank as u32);
            }
        }
        Ok(SectorBasis {
            n_sites,
            sectors,
            locate,
        })
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[inline]
    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    #[inline]
    pub fn sector(&self, n_up: usize) -> &ChargeSector {
        &self.sectors[n_up]
    }

    #[inline]
    pub fn sectors(&self) -> &[ChargeSector] {
        &self.sectors
    }

    /// Sector label and intra-sector rank of a raw configuration.
    #[inline]
    pub fn locate(&self, config: SpinConfiguration) -> (usize, usize) {
        let (n_up, rank) = self.locate[config.0 as usize];
        (n_up as usize, rank as usize)
    }

    #[inline]
    pub fn total_dimension(&self) -> usize {
        1 << self.n_sites
    }
}

/// Binomial coefficient; exact for every argument reachable under
/// [`MAX_SITES`].
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc as usize
}

/// Partition of a chain into a contiguous observation window
/// `qos_first..=qos_last` (1-indexed, inclusive) and the remaining
/// bath sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Geometry {
    n_sites: usize,
    qos_first: usize,
    qos_last: usize,
}

impl Geometry {
    pub fn new(n_sites: usize, qos_first: usize, qos_last: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::Parameter(format!(
                "chain length {n_sites} outside 1..={MAX_SITES}"
            )));
        }
        if qos_first < 1 || qos_last > n_sites || qos_first > qos_last {
            return Err(Error::Parameter(format!(
                "observation window [{qos_first}, {qos_last}] invalid for {n_sites} sites"
            )));
        }
        if qos_last - qos_first + 1 == n_sites {
            return Err(Error::Parameter(
                "observation window must leave a non-empty bath".into(),
            ));
        }
        Ok(Geometry {
            n_sites,
            qos_first,
            qos_last,
        })
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[inline]
    pub fn qos_first(&self) -> usize {
        self.qos_first
    }

    #[inline]
    pub fn qos_last(&self) -> usize {
        self.qos_last
    }

    /// Number of observation-window sites.
    #[inline]
    pub fn qos_len(&self) -> usize {
        self.qos_last - self.qos_first + 1
    }

    /// Number of bath sites.
    #[inline]
    pub fn bath_len(&self) -> usize {
        self.n_sites - self.qos_len()
    }

    /// Physical (1-indexed) observation-window sites, ascending.
    pub fn qos_sites(&self) -> Vec<usize> {
        (self.qos_first..=self.qos_last).collect()
    }

    /// Physical (1-indexed) bath sites, ascending.
    pub fn bath_sites(&self) -> Vec<usize> {
        (1..self.qos_first)
            .chain(self.qos_last + 1..=self.n_sites)
            .collect()
    }

    /// Assembles a full-chain configuration from a window configuration
    /// (bit `k` ↔ window site `qos_first + k`) and a bath configuration
    /// (bit `k` ↔ k-th entry of [`Geometry::bath_sites`]).
    #[inline]
    pub fn embed(&self, qos: SpinConfiguration, bath: SpinConfiguration) -> SpinConfiguration {
        let low = self.qos_first - 1;
        let low_mask = (1u32 << low) - 1;
        let full =
            (bath.0 & low_mask) | (qos.0 << low) | ((bath.0 & !low_mask) << self.qos_len());
        SpinConfiguration(full)
    }

    /// Inverse of [`Geometry::embed`]: factors a full-chain
    /// configuration into (window, bath) parts.
    #[inline]
    pub fn split(&self, full: SpinConfiguration) -> (SpinConfiguration, SpinConfiguration) {
        let low = self.qos_first - 1;
        let low_mask = (1u32 << low) - 1;
        let qos = (full.0 >> low) & ((1u32 << self.qos_len()) - 1);
        let bath = (full.0 & low_mask) | ((full.0 >> self.qos_len()) & !low_mask);
        (SpinConfiguration(qos), SpinConfiguration(bath))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_dimensions_are_binomials() {
        for n_sites in 1..=12 {
            let mut total = 0;
            for n_up in 0..=n_sites {
                let sector = ChargeSector::enumerate(n_sites, n_up).unwrap();
                assert_eq!(sector.dimension(), binomial(n_sites, n_up));
                total += sector.dimension();
            }
            assert_eq!(total, 1 << n_sites);
        }
    }

    #[test]
    fn sector_states_sorted_and_ranked() {
        let sector = ChargeSector::enumerate(6, 3).unwrap();
        for (rank, pair) in sector.states().windows(2).enumerate() {
            assert!(pair[0] < pair[1], "out of order at rank {rank}");
        }
        for (rank, &config) in sector.states().iter().enumerate() {
            assert_eq!(config.n_up(), 3);
            assert_eq!(sector.rank(config), Some(rank));
        }
        assert_eq!(sector.rank(SpinConfiguration(0b000001)), None);
    }

    #[test]
    fn two_site_single_up_sector() {
        let sector = ChargeSector::enumerate(2, 1).unwrap();
        assert_eq!(
            sector.states(),
            &[SpinConfiguration(0b01), SpinConfiguration(0b10)]
        );
    }

    #[test]
    fn charge_examples() {
        // One up spin on four sites.
        assert_eq!(charge_of(SpinConfiguration(0b0100), 4), -2);
        assert_eq!(charge_of(SpinConfiguration(0b1111), 4), 4);
        assert_eq!(charge_of(SpinConfiguration::ALL_DOWN, 4), -4);
        let sector = ChargeSector::enumerate(5, 2).unwrap();
        assert_eq!(sector.charge(), -1);
    }

    #[test]
    fn enumerate_rejects_bad_arguments() {
        assert!(ChargeSector::enumerate(0, 0).is_err());
        assert!(ChargeSector::enumerate(25, 1).is_err());
        assert!(ChargeSector::enumerate(4, 5).is_err());
    }

    #[test]
    fn locate_inverts_enumeration() {
        let basis = SectorBasis::new(8).unwrap();
        for raw in 0..basis.total_dimension() as u32 {
            let config = SpinConfiguration(raw);
            let (n_up, rank) = basis.locate(config);
            assert_eq!(n_up, config.n_up());
            assert_eq!(basis.sector(n_up).state(rank), config);
        }
    }

    #[test]
    fn parse_round_trip() {
        let config = SpinConfiguration::parse("udu").unwrap();
        assert_eq!(config, SpinConfiguration(0b101));
        assert!(config.is_up(1));
        assert!(!config.is_up(2));
        assert!(config.is_up(3));
        assert!(SpinConfiguration::parse("uxd").is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(Geometry::new(15, 7, 9).is_ok());
        assert!(Geometry::new(15, 0, 9).is_err());
        assert!(Geometry::new(15, 9, 7).is_err());
        assert!(Geometry::new(15, 7, 16).is_err());
        // Window covering the whole chain leaves no bath.
        assert!(Geometry::new(4, 1, 4).is_err());
    }

    #[test]
    fn embed_split_round_trip() {
        let g = Geometry::new(9, 4, 6).unwrap();
        assert_eq!(g.qos_len(), 3);
        assert_eq!(g.bath_len(), 6);
        assert_eq!(g.qos_sites(), vec![4, 5, 6]);
        assert_eq!(g.bath_sites(), vec![1, 2, 3, 7, 8, 9]);
        for full in 0..(1u32 << 9) {
            let full = SpinConfiguration(full);
            let (qos, bath) = g.split(full);
            assert_eq!(g.embed(qos, bath), full);
            assert_eq!(qos.n_up() + bath.n_up(), full.n_up());
        }
        // Window at the chain edge: bath is a single contiguous stretch.
        let edge = Geometry::new(6, 1, 2).unwrap();
        assert_eq!(edge.bath_sites(), vec![3, 4, 5, 6]);
        let qos = SpinConfiguration(0b01);
        let bath = SpinConfiguration(0b0101);
        // Window site 1 up, bath sites 3 and 5 up.
        assert_eq!(edge.embed(qos, bath), SpinConfiguration(0b010101));
    }

    #[test]
    fn embed_places_bits_on_physical_sites() {
        let g = Geometry::new(15, 7, 9).unwrap();
        let qos = SpinConfiguration(0b010); // window site 8 up
        let bath = SpinConfiguration(0b0000_1000_0001); // bath slots 1 and 8 → sites 1 and 11
        let full = g.embed(qos, bath);
        assert!(full.is_up(1));
        assert!(full.is_up(8));
        assert!(full.is_up(11));
        assert_eq!(full.n_up(), 3);
    }
}
