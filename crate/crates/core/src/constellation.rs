//! Gray-labelled unit-energy constellations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{check_len, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationKind {
    Bpsk,
    Qpsk,
    Qam16,
}

/// Point set with a bit label per point. Labels are stored MSB first in a
/// `u32`; `bits_per_symbol` of them are significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub name: &'static str,
    pub points: Vec<Complex64>,
    pub labels: Vec<u32>,
    pub bits_per_symbol: usize,
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

impl Constellation {
    pub fn from_kind(kind: ConstellationKind) -> Self {
        match kind {
            ConstellationKind::Bpsk => Self::bpsk(),
            ConstellationKind::Qpsk => Self::qpsk(),
            ConstellationKind::Qam16 => Self::qam16(),
        }
    }

    pub fn bpsk() -> Self {
        Self {
            name: "BPSK",
            points: vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            labels: vec![0, 1],
            bits_per_symbol: 1,
        }
    }

    /// `b0 b1 -> ((1 - 2 b0) + j (1 - 2 b1)) / √2`, so `00 -> (1+j)/√2`.
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let labels: Vec<u32> = (0..4).collect();
        let points = labels
            .iter()
            .map(|&l| {
                let b0 = (l >> 1) & 1;
                let b1 = l & 1;
                Complex64::new(a * (1.0 - 2.0 * b0 as f64), a * (1.0 - 2.0 * b1 as f64))
            })
            .collect();
        Self {
            name: "QPSK",
            points,
            labels,
            bits_per_symbol: 2,
        }
    }

    /// Square 16-QAM, Gray coded per axis (two bits I, two bits Q).
    pub fn qam16() -> Self {
        let scale = 1.0 / 10f64.sqrt();
        let levels = [-3.0, -1.0, 1.0, 3.0];
        let mut points = Vec::with_capacity(16);
        let mut labels = Vec::with_capacity(16);
        for (ii, &re) in levels.iter().enumerate() {
            for (qi, &im) in levels.iter().enumerate() {
                points.push(Complex64::new(re * scale, im * scale));
                labels.push((gray(ii as u32) << 2) | gray(qi as u32));
            }
        }
        Self {
            name: "16QAM",
            points,
            labels,
            bits_per_symbol: 4,
        }
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order() as f64
    }

    /// `E[x²]` under uniform symbols; zero for QPSK and 16-QAM.
    pub fn pseudo_variance(&self) -> Complex64 {
        self.points.iter().map(|p| p * p).sum::<Complex64>() / self.order() as f64
    }

    /// Number of differing label bits between points `p` and `q`.
    pub fn bit_distance(&self, p: usize, q: usize) -> u32 {
        (self.labels[p] ^ self.labels[q]).count_ones()
    }

    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    fn index_of_label(&self, label: u32) -> usize {
        self.labels
            .iter()
            .position(|&l| l == label)
            .expect("labels form a bijection")
    }

    pub fn push_label_bits(&self, index: usize, out: &mut Vec<u8>) {
        let label = self.labels[index];
        for b in (0..self.bits_per_symbol).rev() {
            out.push(((label >> b) & 1) as u8);
        }
    }

    /// Symbol indices for a bit stream of `n · bits_per_symbol` bits.
    pub fn bits_to_indices(&self, bits: &[u8], n: usize) -> Result<Vec<usize>> {
        check_len(n * self.bits_per_symbol, bits.len())?;
        bits.chunks(self.bits_per_symbol)
            .map(|chunk| {
                let mut label = 0u32;
                for &b in chunk {
                    if b > 1 {
                        return invalid(format!("bit value {b} is not 0 or 1"));
                    }
                    label = (label << 1) | b as u32;
                }
                Ok(self.index_of_label(label))
            })
            .collect()
    }

    pub fn indices_to_bits(&self, indices: &[usize]) -> Vec<u8> {
        let mut bits = Vec::with_capacity(indices.len() * self.bits_per_symbol);
        for &i in indices {
            self.push_label_bits(i, &mut bits);
        }
        bits
    }

    /// Gray mapping of `n · N_b` bits to `n` symbols.
    pub fn map_bits(&self, bits: &[u8], n: usize) -> Result<CVector> {
        let idx = self.bits_to_indices(bits, n)?;
        Ok(CVector::from_iterator(n, idx.iter().map(|&i| self.points[i])))
    }

    /// Minimum-distance hard decision per symbol, returned as indices.
    pub fn decide(&self, symbols: &CVector) -> Vec<usize> {
        symbols.iter().map(|&z| self.nearest(z)).collect()
    }

    pub fn demap_symbols(&self, symbols: &CVector) -> Vec<u8> {
        self.indices_to_bits(&self.decide(symbols))
    }
}

pub fn map_bits(bits: &[u8], constellation: &Constellation, n: usize) -> Result<CVector> {
    constellation.map_bits(bits, n)
}

pub fn demap_symbols(symbols: &CVector, constellation: &Constellation) -> Vec<u8> {
    constellation.demap_symbols(symbols)
}
