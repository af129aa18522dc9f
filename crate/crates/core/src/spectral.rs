//! Momentum-space analysis of translation-invariant walks.
//!
//! With `Psi^(k) = sum_x e^{ikx} Psi(x)`, one step acts as
//! `Psi^(k, t+1) = U(k) Psi^(k, t)` where `U(k) = diag(e^{i k d_alpha}) C`
//! and `d_alpha` are the shift displacements. Writing the eigenvalues of
//! `U(k)` as `e^{i omega_j(k)}`, a band contributes ballistic motion at group
//! velocity `d omega_j / dk` with weight `|<v_j(k)|psi0>|^2`:
//!
//! ```text
//! <x^n> ~ t^n  sum_j  int dk/2pi  w_j(k) (d omega_j/dk)^n
//! ```
//!
//! Bands that do not depend on `k` carry no velocity and produce a
//! localized atom at `v = 0`.

use std::f64::consts::PI;
use std::io::{self, Write};

use itertools::Itertools;
use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::coin::CoinOperator;
use crate::error::{Result, WalkError};
use crate::walk::ShiftKind;

pub const DEFAULT_GRID_POINTS: usize = 2048;
pub const DEFAULT_VELOCITY_BINS: usize = 201;
/// Default flatness tolerance for [`detect_localization`].
pub const FLAT_TOLERANCE: f64 = 1e-10;
/// Minimum overlap accepted when matching eigenvectors across neighbouring k.
pub const MIN_TRACKING_OVERLAP: f64 = 0.5;

/// Eigenvalues closer than this on the unit circle are treated as one
/// degenerate cluster.
const DEGENERACY_TOLERANCE: f64 = 1e-7;
const PSI0_TOLERANCE: f64 = 1e-10;

/// `M` uniform samples `k_m = -pi + 2 pi m / M`, `m = 0..M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KGrid {
    points: usize,
}

impl KGrid {
    pub fn new(points: usize) -> Result<Self> {
        if points < 64 || !points.is_multiple_of(2) {
            return Err(WalkError::InvalidGrid(points));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.points as f64
    }

    /// `k_m`; any integer `m` is accepted so callers can step past the ends.
    pub fn k(&self, m: i64) -> f64 {
        -PI + self.spacing() * m as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points as i64).map(|m| self.k(m))
    }
}

impl Default for KGrid {
    fn default() -> Self {
        Self {
            points: DEFAULT_GRID_POINTS,
        }
    }
}

/// `U(k) = S(k) C`.
pub fn momentum_operator(coin: &CoinOperator, shift: ShiftKind, k: f64) -> Result<DMatrix<Complex64>> {
    shift.check_coin(coin)?;
    let disp = shift.displacements();
    let c = coin.matrix();
    Ok(DMatrix::from_fn(coin.dim(), coin.dim(), |r, col| {
        Complex64::from_polar(1.0, k * disp[r] as f64) * c[(r, col)]
    }))
}

/// `C^dag D C` with `D` the diagonal displacement matrix. Its expectation in
/// an eigenvector of `U(k)` is that band's group velocity.
pub fn velocity_operator(coin: &CoinOperator, shift: ShiftKind) -> Result<DMatrix<Complex64>> {
    shift.check_coin(coin)?;
    let disp = shift.displacements();
    let d = DMatrix::from_fn(coin.dim(), coin.dim(), |r, c| {
        if r == c {
            Complex64::new(disp[r] as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(coin.matrix().adjoint() * d * coin.matrix())
}

/// Eigenpairs of a unitary matrix.
///
/// Inside a degenerate cluster the basis is rotated to diagonalize
/// `velocity` so the returned vectors are the ones that continue smoothly
/// in `k` through the crossing.
fn unitary_eigen(
    u: &DMatrix<Complex64>,
    velocity: &DMatrix<Complex64>,
) -> Option<(Vec<Complex64>, Vec<DVector<Complex64>>)> {
    let n = u.nrows();
    let (q, t) = Schur::try_new(u.clone(), f64::EPSILON, 10_000)?.unpack();
    let values: Vec<Complex64> = (0..n)
        .map(|i| {
            let l = t[(i, i)];
            l / l.norm()
        })
        .collect();
    let mut vectors: Vec<DVector<Complex64>> = (0..n).map(|i| q.column(i).into_owned()).collect();

    let mut seen = vec![false; n];
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let cluster: Vec<usize> = (i..n)
            .filter(|&j| (values[j] - values[i]).norm() < DEGENERACY_TOLERANCE)
            .collect();
        for &j in &cluster {
            seen[j] = true;
        }
        if cluster.len() < 2 {
            continue;
        }
        let basis = DMatrix::from_columns(&cluster.iter().map(|&j| vectors[j].clone()).collect::<Vec<_>>());
        let projected = basis.adjoint() * velocity * &basis;
        let eig = SymmetricEigen::try_new(projected, f64::EPSILON, 10_000)?;
        let rotated = basis * eig.eigenvectors;
        for (col, &j) in cluster.iter().enumerate() {
            vectors[j] = rotated.column(col).into_owned();
        }
    }
    Some((values, vectors))
}

fn wrap_phase(a: f64) -> f64 {
    // Into (-pi, pi].
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// One tracked band sampled on the grid.
#[derive(Clone, Debug)]
pub struct Band {
    omega: Vec<f64>,
    vectors: Vec<DVector<Complex64>>,
    weights: Vec<f64>,
    velocity: Vec<f64>,
    half_velocity: Vec<f64>,
}

impl Band {
    /// Unwrapped phase `omega(k_m)`.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn eigenvector(&self, m: usize) -> &DVector<Complex64> {
        &self.vectors[m]
    }

    /// `|<v(k_m)|psi0>|^2`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Central-difference `d omega / dk` at each grid point.
    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    /// Forward differences at the cell edges `k_m - dk/2`, `m = 0..=M`.
    pub fn half_velocity(&self) -> &[f64] {
        &self.half_velocity
    }

    /// `max_k |omega(k) - mean omega|`.
    pub fn flatness(&self) -> f64 {
        let mean = self.omega.iter().sum::<f64>() / self.omega.len() as f64;
        self.omega.iter().map(|w| (w - mean).abs()).fold(0.0, f64::max)
    }

    /// `int dk/2pi w(k)`.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.weights.len() as f64
    }
}

/// Eigen-structure of `U(k)` over a grid, with bands tracked and unwrapped.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    grid: KGrid,
    coin: CoinOperator,
    shift: ShiftKind,
    psi0: Vec<Complex64>,
    bands: Vec<Band>,
}

impl SpectralDecomposition {
    pub fn grid(&self) -> KGrid {
        self.grid
    }

    pub fn coin(&self) -> &CoinOperator {
        &self.coin
    }

    pub fn shift(&self) -> ShiftKind {
        self.shift
    }

    pub fn psi0(&self) -> &[Complex64] {
        &self.psi0
    }

    /// Bands ordered by their phase at `k = -pi`.
    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    /// CSV with columns `k, omega_0.., w_0..`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.bands.len();
        let header = (0..n)
            .map(|j| format!("omega_{j}"))
            .chain((0..n).map(|j| format!("w_{j}")))
            .join(",");
        writeln!(out, "k,{header}")?;
        for (m, k) in self.grid.points().enumerate() {
            let row = self
                .bands
                .iter()
                .map(|b| format!("{:.16e}", b.omega[m]))
                .chain(self.bands.iter().map(|b| format!("{:.16e}", b.weights[m])))
                .join(",");
            writeln!(out, "{k:.16e},{row}")?;
        }
        Ok(())
    }
}

struct Sample {
    values: Vec<Complex64>,
    vectors: Vec<DVector<Complex64>>,
}

/// Best assignment of `cur` eigenvectors to the bands of `prev`:
/// maximal summed overlap, ties broken by eigenvalue distance.
fn match_bands(prev: &Sample, cur: &Sample) -> (Vec<usize>, f64) {
    let n = prev.vectors.len();
    let overlap = |a: usize, b: usize| prev.vectors[a].dotc(&cur.vectors[b]).norm();
    let mut best: Option<(Vec<usize>, f64, f64)> = None;
    for perm in (0..n).permutations(n) {
        let score: f64 = (0..n).map(|j| overlap(j, perm[j])).sum();
        let dist: f64 = (0..n).map(|j| (prev.values[j] - cur.values[perm[j]]).norm()).sum();
        let better = match &best {
            None => true,
            Some((_, s, d)) => score > s + 1e-9 || ((score - s).abs() <= 1e-9 && dist < *d),
        };
        if better {
            best = Some((perm, score, dist));
        }
    }
    let (perm, _, _) = best.expect("at least one permutation");
    let worst = (0..n).map(|j| overlap(j, perm[j])).fold(f64::INFINITY, f64::min);
    (perm, worst)
}

/// Diagonalizes `U(k)` on `grid`, labels bands by eigenvector continuity and
/// unwraps each band's phase.
pub fn band_structure(
    coin: &CoinOperator,
    shift: ShiftKind,
    grid: KGrid,
    psi0: &[Complex64],
) -> Result<SpectralDecomposition> {
    shift.check_coin(coin)?;
    let dim = coin.dim();
    if psi0.len() != dim {
        return Err(WalkError::DimensionMismatch {
            shift: shift.name(),
            expected: dim,
            actual: psi0.len(),
        });
    }
    let norm: f64 = psi0.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > PSI0_TOLERANCE {
        return Err(WalkError::NotNormalized(norm));
    }
    let velocity_op = velocity_operator(coin, shift)?;
    let m_total = grid.len() as i64;

    // Samples at m = -1 ..= M so every grid point has both neighbours.
    let mut samples = (-1..=m_total)
        .into_par_iter()
        .map(|m| {
            let k = grid.k(m);
            let u = momentum_operator(coin, shift, k)?;
            let (values, vectors) = unitary_eigen(&u, &velocity_op).ok_or(WalkError::EigenFailure(k))?;
            Ok(Sample { values, vectors })
        })
        .collect::<Result<Vec<_>>>()?;

    for i in 1..samples.len() {
        let (perm, worst) = match_bands(&samples[i - 1], &samples[i]);
        if worst < MIN_TRACKING_OVERLAP {
            return Err(WalkError::AmbiguousBand {
                k: grid.k(i as i64 - 1),
                overlap: worst,
            });
        }
        let cur = &mut samples[i];
        cur.values = perm.iter().map(|&p| cur.values[p]).collect();
        cur.vectors = perm.iter().map(|&p| cur.vectors[p].clone()).collect();
    }

    let dk = grid.spacing();
    let psi = DVector::from_column_slice(psi0);
    let mut bands: Vec<Band> = (0..dim)
        .map(|j| {
            // samples[1] is k = -pi; start there in (-pi, pi] and unwrap both ways.
            let mut phase = vec![0.0; samples.len()];
            phase[1] = wrap_phase(samples[1].values[j].arg());
            phase[0] = phase[1] + wrap_phase(samples[0].values[j].arg() - phase[1]);
            for i in 2..samples.len() {
                phase[i] = phase[i - 1] + wrap_phase(samples[i].values[j].arg() - phase[i - 1]);
            }
            let inner = 1..samples.len() - 1;
            Band {
                omega: phase[inner.clone()].to_vec(),
                vectors: samples[inner.clone()].iter().map(|s| s.vectors[j].clone()).collect(),
                weights: samples[inner.clone()]
                    .iter()
                    .map(|s| s.vectors[j].dotc(&psi).norm_sqr())
                    .collect(),
                velocity: inner.clone().map(|i| (phase[i + 1] - phase[i - 1]) / (2.0 * dk)).collect(),
                half_velocity: (1..samples.len()).map(|i| (phase[i] - phase[i - 1]) / dk).collect(),
            }
        })
        .collect();
    bands.sort_by(|a, b| a.omega[0].total_cmp(&b.omega[0]));

    Ok(SpectralDecomposition {
        grid,
        coin: coin.clone(),
        shift,
        psi0: psi0.to_vec(),
        bands,
    })
}

/// Result of [`detect_localization`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Localization {
    pub localized: bool,
    pub flat_bands: Vec<usize>,
}

/// Flags bands whose phase varies by less than `tol` across the grid.
pub fn detect_localization(sd: &SpectralDecomposition, tol: f64) -> Localization {
    let flat_bands: Vec<usize> = sd
        .bands
        .iter()
        .enumerate()
        .filter(|(_, b)| b.flatness() < tol)
        .map(|(j, _)| j)
        .collect();
    Localization {
        localized: !flat_bands.is_empty(),
        flat_bands,
    }
}

/// Leading coefficient `c_n` of `<x^n> ~ c_n t^n`:
/// `c_n = sum_j int dk/2pi w_j(k) (d omega_j/dk)^n`.
pub fn asymptotic_moment_coefficient(sd: &SpectralDecomposition, n: u32) -> Result<f64> {
    if !(1..=4).contains(&n) {
        return Err(WalkError::UnsupportedMomentOrder(n));
    }
    if sd.grid.len() < 64 {
        return Err(WalkError::InvalidGrid(sd.grid.len()));
    }
    let m = sd.grid.len() as f64;
    Ok(sd
        .bands
        .iter()
        .map(|b| {
            b.weights
                .iter()
                .zip(&b.velocity)
                .map(|(w, v)| w * v.powi(n as i32))
                .sum::<f64>()
                / m
        })
        .sum())
}

/// Histogram of the limiting velocity `x/t` on `[-1, 1]`, plus the mass
/// that stays localized.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityDensity {
    mass: Vec<f64>,
    atom_at_zero: f64,
}

impl VelocityDensity {
    pub const LOWER: f64 = -1.0;
    pub const UPPER: f64 = 1.0;

    /// Builds a density from raw bin masses on a uniform partition of `[-1, 1]`.
    pub fn from_masses(mass: Vec<f64>, atom_at_zero: f64) -> Result<Self> {
        if mass.is_empty() {
            return Err(WalkError::TooFewBins(0));
        }
        if mass.iter().any(|m| *m < 0.0) || atom_at_zero < 0.0 {
            return Err(WalkError::InvalidParameter("negative velocity mass".into()));
        }
        Ok(Self { mass, atom_at_zero })
    }

    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    pub fn width(&self) -> f64 {
        (Self::UPPER - Self::LOWER) / self.mass.len() as f64
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (Self::LOWER + w * i as f64, Self::LOWER + w * (i + 1) as f64)
    }

    pub fn center(&self, i: usize) -> f64 {
        let (a, b) = self.edges(i);
        0.5 * (a + b)
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Mass per unit velocity in bin `i`.
    pub fn density(&self, i: usize) -> f64 {
        self.mass[i] / self.width()
    }

    pub fn atom_at_zero(&self) -> f64 {
        self.atom_at_zero
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum::<f64>() + self.atom_at_zero
    }

    /// Outer edges of the bins holding more than `threshold` mass.
    pub fn support(&self, threshold: f64) -> Option<(f64, f64)> {
        let first = self.mass.iter().position(|&m| m > threshold)?;
        let last = self.mass.iter().rposition(|&m| m > threshold)?;
        Some((self.edges(first).0, self.edges(last).1))
    }

    /// CSV rows `v_lo,v_hi,mass` followed by `atom_at_zero,<value>`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "v_lo,v_hi,mass")?;
        for (i, m) in self.mass.iter().enumerate() {
            let (a, b) = self.edges(i);
            writeln!(out, "{a:.16e},{b:.16e},{m:.16e}")?;
        }
        writeln!(out, "atom_at_zero,{:.16e}", self.atom_at_zero)
    }
}

/// Pushes the uniform measure `dk/2pi`, weighted by `w_j(k)`, forward
/// through each band's group velocity.
///
/// Within each grid cell the velocity is taken as linear between the
/// forward differences at the cell edges, so the cell's mass is spread
/// uniformly across that velocity interval. Flat bands go to the atom.
pub fn velocity_density(sd: &SpectralDecomposition, bins: usize) -> Result<VelocityDensity> {
    if bins < 32 {
        return Err(WalkError::TooFewBins(bins));
    }
    let width = (VelocityDensity::UPPER - VelocityDensity::LOWER) / bins as f64;
    let bin_of = |v: f64| (((v - VelocityDensity::LOWER) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
    let m_total = sd.grid.len() as f64;
    let mut mass = vec![0.0; bins];
    let mut atom = 0.0;
    for band in &sd.bands {
        if band.flatness() < FLAT_TOLERANCE {
            atom += band.total_weight();
            continue;
        }
        for (m, &w) in band.weights.iter().enumerate() {
            let cell_mass = w / m_total;
            let a = band.half_velocity[m].clamp(VelocityDensity::LOWER, VelocityDensity::UPPER);
            let b = band.half_velocity[m + 1].clamp(VelocityDensity::LOWER, VelocityDensity::UPPER);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let span = hi - lo;
            let (first, last) = (bin_of(lo), bin_of(hi));
            if span < 1e-14 || first == last {
                mass[first] += cell_mass;
                continue;
            }
            for (i, slot) in mass.iter_mut().enumerate().take(last + 1).skip(first) {
                let edge_lo = VelocityDensity::LOWER + width * i as f64;
                let overlap = hi.min(edge_lo + width) - lo.max(edge_lo);
                if overlap > 0.0 {
                    *slot += cell_mass * overlap / span;
                }
            }
        }
    }
    VelocityDensity::from_masses(mass, atom)
}

/// Konno's limit density for two-state walks with `|a| = a_mod`.
pub fn konno_density(a_mod: f64, d1: f64, v: f64) -> Result<f64> {
    if !(a_mod > 0.0 && a_mod < 1.0) {
        return Err(WalkError::InvalidParameter(format!("|a| = {a_mod} must lie in (0, 1)")));
    }
    if v.abs() >= a_mod {
        return Err(WalkError::OutsideSupport { v, limit: a_mod });
    }
    Ok((1.0 - a_mod * a_mod).sqrt() * (1.0 + d1 * v)
        / (PI * (1.0 - v * v) * (a_mod * a_mod - v * v).sqrt()))
}

/// Continuous part of the limit density for lazy walks with the `g(rho)`
/// coin; `d0, d1, d2` depend on coin and initial state and are supplied by
/// the caller.
pub fn g_velocity_density(rho: f64, d0: f64, d1: f64, d2: f64, v: f64) -> Result<f64> {
    let r = rho.abs();
    if !(r > 0.0 && r < 1.0) {
        return Err(WalkError::InvalidRho(rho));
    }
    if v.abs() >= r {
        return Err(WalkError::OutsideSupport { v, limit: r });
    }
    Ok((1.0 - r * r).sqrt() * (d0 + d1 * v + d2 * v * v)
        / (2.0 * PI * (1.0 - v * v) * (r * r - v * v).sqrt()))
}

/// Large-`t` occupancy rate read off a velocity density.
///
/// `P(x, t) ~ density(x/t) / t` and the threshold `1/N ~ 1/(2t)` turn the
/// occupancy condition into `density(v) >= 1/2`; the qualifying velocities
/// cover `t |{v}|` of the `2t + 1` sites.
pub fn asymptotic_occupancy_rate(vd: &VelocityDensity) -> f64 {
    let count = (0..vd.bins()).filter(|&i| vd.density(i) >= 0.5).count();
    0.5 * count as f64 * vd.width()
}
