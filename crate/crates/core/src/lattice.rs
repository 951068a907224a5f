//! Microscopic configurations on the ring: three species of particles on
//! `N` sites, nearest-neighbour and long-range particle exchanges, and the
//! mean-field Hamiltonian with O(1) bond gradients.
//!
//! The Hamiltonian is kept as an exact integer pair count (the value before
//! the 1/N² prefactor), so energy differences, Boltzmann exponents and
//! detailed-balance checks can be done in integer arithmetic.

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// One of the three particle species.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Species {
    A = 0,
    B = 1,
    C = 2,
}

pub const SPECIES: [Species; 3] = [Species::A, Species::B, Species::C];

impl Species {
    pub fn symbol(self) -> char {
        match self {
            Species::A => 'A',
            Species::B => 'B',
            Species::C => 'C',
        }
    }

    pub fn from_symbol(c: char) -> Result<Self> {
        match c {
            'A' => Ok(Species::A),
            'B' => Ok(Species::B),
            'C' => Ok(Species::C),
            other => Err(Error::BadSpeciesSymbol(other)),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Penalty indicator for an ordered species pair: 1 for (A,C), (B,A), (C,B),
/// otherwise 0. The integer Hamiltonian counts these over ordered site pairs.
#[inline]
pub(crate) fn pair_penalty(s: Species, t: Species) -> i64 {
    matches!(
        (s, t),
        (Species::A, Species::C) | (Species::B, Species::A) | (Species::C, Species::B)
    ) as i64
}

/// Antisymmetric part of the pair penalty, `W(s,t) = V(s,t) − V(t,s)`.
/// Takes values in {−1, 0, +1}.
#[inline]
pub(crate) fn pair_asymmetry(s: Species, t: Species) -> i64 {
    pair_penalty(s, t) - pair_penalty(t, s)
}

/// A ring of `N` sites, each holding exactly one species.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpeciesConfiguration {
    sites: Vec<Species>,
}

impl SpeciesConfiguration {
    pub fn new(sites: Vec<Species>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        Ok(Self { sites })
    }

    /// The segregated block state A…AB…BC…C on `n` sites (n a multiple of 3).
    pub fn segregated(n: usize) -> Result<Self> {
        if n == 0 || n % 3 != 0 {
            return Err(Error::BadSiteCount(n));
        }
        let third = n / 3;
        let mut sites = Vec::with_capacity(n);
        for &sp in &SPECIES {
            sites.extend(std::iter::repeat(sp).take(third));
        }
        Ok(Self { sites })
    }

    /// The alternating state ABCABC… on `n` sites.
    pub fn striped(n: usize) -> Result<Self> {
        if n == 0 || n % 3 != 0 {
            return Err(Error::BadSiteCount(n));
        }
        Ok(Self {
            sites: (0..n).map(|x| SPECIES[x % 3]).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty site lists
    }

    /// Species at site `x`, indices taken modulo `N`.
    #[inline]
    pub fn site(&self, x: usize) -> Species {
        self.sites[x % self.sites.len()]
    }

    pub fn sites(&self) -> &[Species] {
        &self.sites
    }

    pub fn species_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for &s in &self.sites {
            counts[s.index()] += 1;
        }
        counts
    }

    /// True when every species occurs exactly N/3 times.
    pub fn is_equal_density(&self) -> bool {
        let n = self.len();
        n % 3 == 0 && self.species_counts() == [n / 3; 3]
    }

    fn require_equal_density(&self) -> Result<()> {
        if self.is_equal_density() {
            Ok(())
        } else {
            Err(Error::NotEqualDensity {
                n: self.len(),
                counts: self.species_counts(),
            })
        }
    }

    /// Occupation field of species `alpha`: entry `x` is 1 iff site `x`
    /// holds `alpha`. The three fields sum to the all-ones field.
    pub fn occupation(&self, alpha: Species) -> Vec<u8> {
        self.sites.iter().map(|&s| (s == alpha) as u8).collect()
    }

    /// Configuration with the particles at sites `x` and `y` exchanged.
    /// Indices wrap modulo `N`; `x == y (mod N)` is a contract violation.
    pub fn exchange(&self, x: usize, y: usize) -> Self {
        let n = self.len();
        let (x, y) = (x % n, y % n);
        assert!(x != y, "exchange requires two distinct sites, got {x} twice");
        let mut sites = self.sites.clone();
        sites.swap(x, y);
        Self { sites }
    }

    /// Overwrite one site; used by the enumeration pass to reuse a buffer.
    #[inline]
    pub(crate) fn set_site(&mut self, x: usize, s: Species) {
        self.sites[x] = s;
    }

    /// In-place variant of [`exchange`](Self::exchange), for simulation loops.
    #[inline]
    pub fn exchange_in_place(&mut self, x: usize, y: usize) {
        let n = self.len();
        let (x, y) = (x % n, y % n);
        debug_assert!(x != y);
        self.sites.swap(x, y);
    }

    /// Cyclic shift: site `x` of the result holds the species of site
    /// `x − k` of the input.
    pub fn translate(&self, k: i64) -> Self {
        let n = self.len() as i64;
        let shift = k.rem_euclid(n) as usize;
        let sites = (0..self.len())
            .map(|x| self.sites[(x + self.len() - shift) % self.len()])
            .collect();
        Self { sites }
    }

    /// Integer Hamiltonian accumulator: the number of ordered site pairs
    /// `x < y` (in the linear order starting at site 0) whose species form
    /// one of the penalized combinations (A,C), (B,A), (C,B).
    ///
    /// The physical Hamiltonian is this count divided by N². The count is
    /// origin-independent only for equal-density configurations.
    pub fn energy_int(&self) -> i64 {
        // Prefix-count sweep: site y pairs with the counts of each species
        // strictly before it.
        let mut before = [0i64; 3];
        let mut total = 0i64;
        for &t in &self.sites {
            total += match t {
                Species::A => before[Species::B.index()],
                Species::B => before[Species::C.index()],
                Species::C => before[Species::A.index()],
            };
            before[t.index()] += 1;
        }
        total
    }

    /// Mean-field Hamiltonian H(ζ) = energy_int / N².
    ///
    /// Only defined on equal-density configurations: the constraint is what
    /// makes the pair sum independent of where the ring is cut.
    pub fn hamiltonian(&self) -> Result<f64> {
        self.require_equal_density()?;
        let n = self.len() as f64;
        Ok(self.energy_int() as f64 / (n * n))
    }

    /// Integer energy change `energy_int(ζ^{x,y}) − energy_int(ζ)` for the
    /// exchange of two distinct sites of an equal-density configuration.
    ///
    /// O(1) for nearest-neighbour bonds, O(arc length) in general: the ring
    /// is cut at `x` (allowed by translation invariance) and only the sites
    /// strictly between the endpoints of the shorter arc contribute.
    pub fn bond_gradient_int(&self, x: usize, y: usize) -> i64 {
        let n = self.len();
        let (mut x, mut y) = (x % n, y % n);
        assert!(x != y, "bond gradient requires two distinct sites");
        debug_assert!(self.is_equal_density());
        let mut d = (y + n - x) % n;
        if d > n - d {
            std::mem::swap(&mut x, &mut y);
            d = n - d;
        }
        let s = self.sites[x];
        let t = self.sites[y];
        if s == t {
            return 0;
        }
        let mut delta = pair_asymmetry(t, s);
        for j in 1..d {
            let z = self.sites[(x + j) % n];
            delta += pair_asymmetry(t, z) - pair_asymmetry(s, z);
        }
        delta
    }

    /// Exact Hamiltonian difference H(ζ^{x,y}) − H(ζ).
    ///
    /// For a nearest-neighbour bond the value lies in {−1/N², 0, +1/N²}:
    /// −1/N² when the ordered pair (ζ(x), ζ(x+1)) is one of (A,C), (C,B),
    /// (B,A) (exchanging removes the penalty), +1/N² for the reversed pairs,
    /// 0 when the species coincide.
    pub fn exchange_gradient(&self, x: usize, y: usize) -> Result<f64> {
        self.require_equal_density()?;
        let n = self.len() as f64;
        Ok(self.bond_gradient_int(x, y) as f64 / (n * n))
    }
}

impl fmt::Display for SpeciesConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.sites {
            write!(f, "{}", s.symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for SpeciesConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for SpeciesConfiguration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sites = s
            .chars()
            .map(Species::from_symbol)
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites)
    }
}
