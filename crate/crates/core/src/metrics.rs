//! Scalar observables of a walk: moments, occupancy, interval mass and
//! coin-position entanglement.

use std::io::{self, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::distribution::ProbabilityDistribution;
use crate::error::{Result, WalkError};
use crate::walk::WalkState;

/// Eigenvalues of a density matrix below this are treated as zero.
pub const EIGENVALUE_FLOOR: f64 = 1e-15;

/// A labelled time series of one metric.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries {
    label: String,
    times: Vec<u64>,
    values: Vec<f64>,
}

impl MetricSeries {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, t: u64, value: f64) -> Result<()> {
        if let Some(&prev) = self.times.last() {
            if t <= prev {
                return Err(WalkError::NonIncreasingTime { prev, next: t });
            }
        }
        self.times.push(t);
        self.values.push(value);
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn times(&self) -> &[u64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `(t, value)` pairs with `lo <= t <= hi`.
    pub fn window(&self, lo: u64, hi: u64) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.times
            .iter()
            .zip(&self.values)
            .filter(move |(t, _)| **t >= lo && **t <= hi)
            .map(|(t, v)| (*t, *v))
    }

    /// Mean and population standard deviation over `lo <= t <= hi`.
    pub fn mean_std(&self, lo: u64, hi: u64) -> Option<(f64, f64)> {
        let vals: Vec<f64> = self.window(lo, hi).map(|(_, v)| v).collect();
        if vals.is_empty() {
            return None;
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some((mean, var.sqrt()))
    }

    /// `# <label>` then `t,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# {}", self.label)?;
        writeln!(out, "t,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{v:.16e}")?;
        }
        Ok(())
    }
}

/// Threshold scale `delta` and range `N` for the general occupancy metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OccupancyParams {
    delta: f64,
    range: u64,
}

impl OccupancyParams {
    pub fn new(delta: f64, range: u64) -> Result<Self> {
        if range == 0 {
            return Err(WalkError::InvalidParameter("range N must be at least 1".into()));
        }
        if !(delta > 0.0 && delta <= range as f64) {
            return Err(WalkError::InvalidDelta { delta, range });
        }
        Ok(Self { delta, range })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn range(&self) -> u64 {
        self.range
    }
}

/// `<x^n> = sum_x x^n P(x)`.
pub fn moment(dist: &ProbabilityDistribution, n: u32) -> f64 {
    dist.iter().map(|(x, p)| (x as f64).powi(n as i32) * p).sum()
}

fn count_at_least(dist: &ProbabilityDistribution, threshold: f64) -> u64 {
    dist.probs().iter().filter(|&&p| p >= threshold).count() as u64
}

/// Number of positions with `P(x) >= 1/N`. No tolerance is applied.
pub fn occupancy_number(dist: &ProbabilityDistribution, range: u64) -> u64 {
    count_at_least(dist, 1.0 / range as f64)
}

pub fn occupancy_rate(dist: &ProbabilityDistribution, range: u64) -> f64 {
    occupancy_number(dist, range) as f64 / range as f64
}

/// Number of positions with `P(x) >= delta/N`.
pub fn general_occupancy_number(dist: &ProbabilityDistribution, params: OccupancyParams) -> u64 {
    count_at_least(dist, params.delta / params.range as f64)
}

pub fn general_occupancy_rate(dist: &ProbabilityDistribution, params: OccupancyParams) -> f64 {
    general_occupancy_number(dist, params) as f64 / params.range as f64
}

/// Total probability on `lo <= x <= hi`; zero for an empty interval.
pub fn interval_mass(dist: &ProbabilityDistribution, lo: f64, hi: f64) -> f64 {
    dist.iter()
        .filter(|&(x, _)| (x as f64) >= lo && (x as f64) <= hi)
        .map(|(_, p)| p)
        .sum()
}

/// Von Neumann entropy (base 2) of a Hermitian density matrix.
pub fn von_neumann_entropy(rho: DMatrix<Complex64>) -> f64 {
    let eig = SymmetricEigen::new(rho);
    eig.eigenvalues
        .iter()
        .filter(|&&l| l > EIGENVALUE_FLOOR)
        .map(|&l| -l * l.log2())
        .sum()
}

/// Coin-space reduced density matrix `rho_ab = sum_x psi_a(x) conj(psi_b(x))`.
pub fn reduced_coin_matrix(state: &WalkState) -> DMatrix<Complex64> {
    let d = state.dim();
    let mut rho = DMatrix::zeros(d, d);
    for psi in state.amplitudes().chunks_exact(d) {
        for a in 0..d {
            for b in 0..d {
                rho[(a, b)] += psi[a] * psi[b].conj();
            }
        }
    }
    rho
}

/// Entanglement between coin and position of a pure walk state.
pub fn entanglement_entropy(state: &WalkState) -> Result<f64> {
    state.check_normalized()?;
    Ok(von_neumann_entropy(reduced_coin_matrix(state)))
}
