use std::io::{self, Write};

use crate::error::{Result, WalkError};

/// Roundoff allowance for negative probabilities; anything in
/// `[-NEGATIVE_CLAMP, 0)` is set to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-15;
/// Allowed deviation of the total from 1.
pub const TOTAL_TOLERANCE: f64 = 1e-10;

/// Probabilities over the contiguous integer positions `start, start+1, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityDistribution {
    start: i64,
    probs: Vec<f64>,
}

impl ProbabilityDistribution {
    pub fn new(start: i64, mut probs: Vec<f64>) -> Result<Self> {
        for (i, p) in probs.iter_mut().enumerate() {
            if *p < 0.0 {
                if *p >= -NEGATIVE_CLAMP {
                    *p = 0.0;
                } else {
                    return Err(WalkError::NegativeProbability {
                        position: start + i as i64,
                        value: *p,
                    });
                }
            }
            if !p.is_finite() {
                return Err(WalkError::BadTotal(*p));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOTAL_TOLERANCE {
            return Err(WalkError::BadTotal(total));
        }
        Ok(Self { start, probs })
    }

    /// A point mass at `x`.
    pub fn delta(x: i64) -> Self {
        Self {
            start: x,
            probs: vec![1.0],
        }
    }

    /// First stored position.
    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last stored position (inclusive).
    pub fn end(&self) -> i64 {
        self.start + self.probs.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P(x)`, zero outside the stored window.
    pub fn get(&self, x: i64) -> f64 {
        let i = x - self.start;
        if i < 0 || i >= self.probs.len() as i64 {
            0.0
        } else {
            self.probs[i as usize]
        }
    }

    /// `(x, P(x))` pairs in ascending `x`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.start + i as i64, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Position of the largest probability (leftmost on ties).
    pub fn argmax(&self) -> (i64, f64) {
        self.iter()
            .fold((self.start, f64::NEG_INFINITY), |best, (x, p)| if p > best.1 { (x, p) } else { best })
    }

    /// Writes `x,p` rows in ascending `x`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,p")?;
        for (x, p) in self.iter() {
            writeln!(out, "{x},{p:.16e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_roundoff_negatives() {
        let d = ProbabilityDistribution::new(-1, vec![0.5, -1e-16, 0.5]).unwrap();
        assert_eq!(d.get(0), 0.0);
        assert_eq!(d.get(7), 0.0);
        assert_eq!(d.end(), 1);
    }

    #[test]
    fn rejects_real_negatives_and_bad_totals() {
        assert!(matches!(
            ProbabilityDistribution::new(0, vec![1.1, -0.1]),
            Err(WalkError::NegativeProbability { position: 1, .. })
        ));
        assert!(matches!(
            ProbabilityDistribution::new(0, vec![0.5, 0.4]),
            Err(WalkError::BadTotal(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let d = ProbabilityDistribution::new(-1, vec![0.25, 0.5, 0.25]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x,p");
        assert_eq!(lines[1], "-1,2.5000000000000000e-1");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn argmax_picks_leftmost() {
        let d = ProbabilityDistribution::new(3, vec![0.4, 0.2, 0.4]).unwrap();
        assert_eq!(d.argmax(), (3, 0.4));
    }
}
