//! Standard-basis labels.
//!
//! Qubit 0 is the most significant bit of a basis index: for `n = 3`, the
//! bitstring `"100"` has qubit 0 set and index 4.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    n: usize,
    index: usize,
}

impl Bitstring {
    pub fn new(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n >= usize::BITS as usize || index >= 1usize << n {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {n} qubits"
            )));
        }
        Ok(Self { n, index })
    }

    pub(crate) fn from_index_unchecked(n: usize, index: usize) -> Self {
        debug_assert!(index < 1usize << n);
        Self { n, index }
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::BitstringParse(String::new()));
        }
        let mut index = 0usize;
        for &b in bits {
            if b > 1 {
                return Err(Error::BitstringParse(format!("{bits:?}")));
            }
            index = (index << 1) | b as usize;
        }
        Ok(Self { n: bits.len(), index })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Basis index under the MSB-first convention.
    pub fn index(&self) -> usize {
        self.index
    }

    /// Value of qubit `q` (0 or 1).
    pub fn bit(&self, q: usize) -> u8 {
        ((self.index >> (self.n - 1 - q)) & 1) as u8
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.n).map(|q| self.bit(q)).collect()
    }

    pub fn ensure_len(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::BitstringLength {
                expected: n,
                actual: self.n,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            write!(f, "{}", self.bit(q))?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(Error::BitstringParse(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_zero_is_most_significant() {
        let z: Bitstring = "100".parse().unwrap();
        assert_eq!(z.index(), 4);
        assert_eq!(z.bit(0), 1);
        assert_eq!(z.bit(2), 0);
        assert_eq!(z.to_string(), "100");
        assert_eq!(Bitstring::new(3, 1).unwrap().to_string(), "001");
    }

    #[test]
    fn rejects_garbage() {
        assert!("10a".parse::<Bitstring>().is_err());
        assert!("".parse::<Bitstring>().is_err());
        assert!(Bitstring::new(2, 4).is_err());
    }
}
