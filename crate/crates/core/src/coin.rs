//! Coin operators for two- and three-state walks.
//!
//! Every constructor validates unitarity before handing the operator out, so
//! downstream code can rely on `C^dag C = I` without re-checking.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, WalkError};

/// Tolerance for matrices we build ourselves.
pub const CONSTRUCTOR_TOLERANCE: f64 = 1e-12;
/// Tolerance for matrices supplied by the user.
pub const USER_TOLERANCE: f64 = 1e-10;

/// A validated `dim x dim` unitary coin with a human-readable label.
#[derive(Clone, Debug, PartialEq)]
pub struct CoinOperator {
    entries: DMatrix<Complex64>,
    label: String,
}

impl CoinOperator {
    /// Wraps `entries` after checking it is square, of dimension 2 or 3, and
    /// unitary within `tolerance`.
    pub fn from_matrix(
        entries: DMatrix<Complex64>,
        label: impl Into<String>,
        tolerance: f64,
    ) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(WalkError::UnsupportedDimension(entries.nrows()));
        }
        check_dim(entries.nrows())?;
        let max_deviation = unitarity_deviation(&entries);
        if max_deviation > tolerance {
            return Err(WalkError::NonUnitary {
                max_deviation,
                tolerance,
            });
        }
        Ok(Self {
            entries,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Entry at `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// Returns a copy with a different label.
    pub fn relabeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `C v` for a coin-space vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim();
        (0..d)
            .map(|r| (0..d).map(|c| self.entries[(r, c)] * v[c]).sum())
            .collect()
    }

    /// Parses the coin grammar used by the CLI:
    /// `dft2 | dft3 | grover | g:<rho> | hadamard | identity2 | identity3 | u2:<a>,<b>,<c>,<d>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        match s {
            "dft2" => dft_coin(2),
            "dft3" => dft_coin(3),
            "grover" => Ok(g_coin((1.0f64 / 3.0).sqrt())?.relabeled("grover")),
            "hadamard" => Ok(dft_coin(2)?.relabeled("hadamard")),
            "identity2" => identity_coin(2),
            "identity3" => identity_coin(3),
            _ => {
                if let Some(rest) = s.strip_prefix("g:") {
                    let rho: f64 = rest
                        .trim()
                        .parse()
                        .map_err(|_| WalkError::BadCoinSpec(spec.to_string()))?;
                    g_coin(rho)
                } else if let Some(rest) = s.strip_prefix("u2:") {
                    let parts = rest
                        .split(',')
                        .map(parse_complex)
                        .collect::<Result<Vec<_>>>()?;
                    match parts.as_slice() {
                        [a, b, c, d] => general_u2(*a, *b, *c, *d),
                        _ => Err(WalkError::BadCoinSpec(spec.to_string())),
                    }
                } else {
                    Err(WalkError::BadCoinSpec(spec.to_string()))
                }
            }
        }
    }
}

impl fmt::Display for CoinOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}x{})", self.label, self.dim(), self.dim())
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(WalkError::UnsupportedDimension(d))
    }
}

/// Largest elementwise modulus of `U^dag U - I`.
pub fn unitarity_deviation(u: &DMatrix<Complex64>) -> f64 {
    let prod = u.adjoint() * u;
    let n = prod.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((prod[(r, c)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// The `d`-dimensional discrete Fourier transform, `(1/sqrt d) exp(2 pi i jk / d)`.
/// For `d = 2` this is the Hadamard matrix.
pub fn dft_coin(d: usize) -> Result<CoinOperator> {
    check_dim(d)?;
    let norm = 1.0 / (d as f64).sqrt();
    let m = DMatrix::from_fn(d, d, |j, k| {
        // Reduce jk mod d so the phases are exact multiples of 2pi/d.
        let phase = 2.0 * PI * ((j * k) % d) as f64 / d as f64;
        Complex64::from_polar(norm, phase)
    });
    CoinOperator::from_matrix(m, format!("dft{d}"), CONSTRUCTOR_TOLERANCE)
}

/// The one-parameter family of real symmetric 3x3 coins; `rho = sqrt(1/3)`
/// gives the Grover coin.
///
/// Values in `[-1, 0)` and exactly `1` are accepted (the matrix stays
/// unitary) with a warning.
pub fn g_coin(rho: f64) -> Result<CoinOperator> {
    if !rho.is_finite() || rho.abs() > 1.0 || rho == 0.0 {
        return Err(WalkError::InvalidRho(rho));
    }
    if !(rho > 0.0 && rho < 1.0) {
        log::warn!("g coin parameter rho = {rho} lies outside (0, 1)");
    }
    let r2 = rho * rho;
    let off = rho * (2.0 - 2.0 * r2).sqrt();
    let rows = [
        [-r2, off, 1.0 - r2],
        [off, 2.0 * r2 - 1.0, off],
        [1.0 - r2, off, -r2],
    ];
    let m = DMatrix::from_fn(3, 3, |r, c| Complex64::new(rows[r][c], 0.0));
    CoinOperator::from_matrix(m, format!("g({rho:.5})"), CONSTRUCTOR_TOLERANCE)
}

/// A general 2x2 coin `[[a, b], [c, d]]`, validated against the user tolerance.
pub fn general_u2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<CoinOperator> {
    let m = DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
    CoinOperator::from_matrix(m, "u2", USER_TOLERANCE)
}

pub fn identity_coin(d: usize) -> Result<CoinOperator> {
    check_dim(d)?;
    CoinOperator::from_matrix(DMatrix::identity(d, d), format!("identity{d}"), CONSTRUCTOR_TOLERANCE)
}

/// Parses `"re"`, `"re+imj"`, `"re-imj"` or `"imj"`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || WalkError::BadComplex(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('j') else {
        return s.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not a leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (
            body[..i].parse::<f64>().map_err(|_| bad())?,
            parse_imag(&body[i..]).ok_or_else(bad)?,
        ),
        None => (0.0, parse_imag(body).ok_or_else(bad)?),
    };
    Ok(Complex64::new(re, im))
}

fn parse_imag(s: &str) -> Option<f64> {
    match s {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => s.parse().ok(),
    }
}
