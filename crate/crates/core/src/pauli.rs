//! Pauli strings in symplectic form.
//!
//! Phases are dropped throughout: every operator here is an error pattern,
//! so `Y` is stored as the pair of bits `(x, z) = (1, 1)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    pub fn mul(self, other: Pauli) -> Pauli {
        Pauli::from_bits(self.x() ^ other.x(), self.z() ^ other.z())
    }

    /// True when the two single-site operators anticommute.
    pub fn anticommutes(self, other: Pauli) -> bool {
        (self.x() & other.z()) ^ (self.z() & other.x())
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Dense 2x2 matrix, used by tests and the channel extraction.
    pub fn matrix(self) -> [[num_complex::Complex64; 2]; 2] {
        use num_complex::Complex64 as C;
        let (o, l, i) = (C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 1.0));
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// An n-site Pauli operator without phase.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString(vec![Pauli::I; n])
    }

    pub fn new(sites: Vec<Pauli>) -> Self {
        PauliString(sites)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sites(&self) -> &[Pauli] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Pauli {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, p: Pauli) {
        self.0[i] = p;
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(PauliString(
            self.0.iter().zip(&other.0).map(|(a, b)| a.mul(*b)).collect(),
        ))
    }

    /// Conjugation by a Hadamard on `site`: X <-> Z.
    pub fn conjugate_h(&mut self, site: usize) {
        let p = self.0[site];
        self.0[site] = Pauli::from_bits(p.z(), p.x());
    }

    /// Conjugation by CZ(a, b): an X component on one side picks up a Z on the other.
    pub fn conjugate_cz(&mut self, a: usize, b: usize) {
        let (pa, pb) = (self.0[a], self.0[b]);
        self.0[a] = Pauli::from_bits(pa.x(), pa.z() ^ pb.x());
        self.0[b] = Pauli::from_bits(pb.x(), pb.z() ^ pa.x());
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                'I' | 'i' => Ok(Pauli::I),
                'X' | 'x' => Ok(Pauli::X),
                'Y' | 'y' => Ok(Pauli::Y),
                'Z' | 'z' => Ok(Pauli::Z),
                _ => Err(Error::PauliParse(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliString)
    }
}

/// The scalar commutator `[[a, b]] = 2^-n Tr(a b a^† b^†)`, evaluated from the
/// per-site symplectic products: `+1` when the strings commute, `-1` otherwise.
pub fn scalar_commutator(a: &PauliString, b: &PauliString) -> Result<i8> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let odd = a
        .0
        .iter()
        .zip(&b.0)
        .fold(false, |acc, (p, q)| acc ^ p.anticommutes(*q));
    Ok(if odd { -1 } else { 1 })
}

/// All `4^n` Pauli strings on `n` sites, in lexicographic I < X < Y < Z order
/// with site 0 most significant.
pub fn all_strings(n: usize) -> Vec<PauliString> {
    let total = 1usize << (2 * n);
    (0..total)
        .map(|mut code| {
            let mut sites = vec![Pauli::I; n];
            for i in (0..n).rev() {
                sites[i] = Pauli::ALL[code & 3];
                code >>= 2;
            }
            PauliString(sites)
        })
        .collect()
}
