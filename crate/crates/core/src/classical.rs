//! Classical random-walk baselines and the large-`t` occupancy asymptotics
//! of the symmetric walk.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::distribution::ProbabilityDistribution;
use crate::error::{Result, WalkError};

/// Largest step count for the exact rational propagation.
pub const MAX_EXACT_STEPS: u64 = 200;

/// Per-step probabilities of moving left, staying, or moving right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalStepLaw {
    p_left: f64,
    p_stay: f64,
    p_right: f64,
}

impl ClassicalStepLaw {
    pub fn new(p_left: f64, p_stay: f64, p_right: f64) -> Result<Self> {
        let ok = [p_left, p_stay, p_right].iter().all(|p| p.is_finite() && *p >= 0.0)
            && (p_left + p_stay + p_right - 1.0).abs() <= 1e-12;
        if !ok {
            return Err(WalkError::InvalidStepLaw(p_left, p_stay, p_right));
        }
        Ok(Self {
            p_left,
            p_stay,
            p_right,
        })
    }

    /// Symmetric walk, never stays.
    pub fn normal() -> Self {
        Self {
            p_left: 0.5,
            p_stay: 0.0,
            p_right: 0.5,
        }
    }

    /// Symmetric lazy walk that stays with probability `p_stay`.
    pub fn lazy(p_stay: f64) -> Result<Self> {
        let side = (1.0 - p_stay) / 2.0;
        Self::new(side, p_stay, side)
    }

    /// Lazy walk with all three moves equally likely.
    pub fn lazy_uniform() -> Self {
        Self {
            p_left: 1.0 / 3.0,
            p_stay: 1.0 / 3.0,
            p_right: 1.0 / 3.0,
        }
    }

    pub fn p_left(&self) -> f64 {
        self.p_left
    }

    pub fn p_stay(&self) -> f64 {
        self.p_stay
    }

    pub fn p_right(&self) -> f64 {
        self.p_right
    }
}

/// Distribution after `t` steps from the origin, over `[-t, t]`.
pub fn classical_distribution(law: &ClassicalStepLaw, t: u64) -> Result<ProbabilityDistribution> {
    let mut out = None;
    evolve_classical(law, t, t.max(1), |_, d| {
        out = Some(d.clone());
        Ok(())
    })?;
    Ok(out.expect("final step is always visited"))
}

/// Propagates `law` for `steps` steps from the origin and calls `visit` at
/// `t = 0, record_every, 2 record_every, ...` and at the final step.
pub fn evolve_classical<F>(law: &ClassicalStepLaw, steps: u64, record_every: u64, mut visit: F) -> Result<()>
where
    F: FnMut(u64, &ProbabilityDistribution) -> Result<()>,
{
    if record_every == 0 {
        return Err(WalkError::InvalidStride);
    }
    let mut cur = vec![1.0];
    let mut next = Vec::new();
    for t in 0..=steps {
        if t % record_every == 0 || t == steps {
            visit(t, &ProbabilityDistribution::new(-(t as i64), cur.clone())?)?;
        }
        if t == steps {
            break;
        }
        // Site `i` of the current vector is position `i - t`.
        next.clear();
        next.resize(cur.len() + 2, 0.0);
        for (i, &p) in cur.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            next[i] += p * law.p_left;
            next[i + 1] += p * law.p_stay;
            next[i + 2] += p * law.p_right;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(())
}

/// A step law with exact rational probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalStepLaw {
    left: BigRational,
    stay: BigRational,
    right: BigRational,
}

impl RationalStepLaw {
    pub fn new(left: BigRational, stay: BigRational, right: BigRational) -> Result<Self> {
        let zero = BigRational::zero();
        if left < zero || stay < zero || right < zero || &left + &stay + &right != BigRational::one() {
            return Err(WalkError::InvalidStepLaw(
                left.to_f64().unwrap_or(f64::NAN),
                stay.to_f64().unwrap_or(f64::NAN),
                right.to_f64().unwrap_or(f64::NAN),
            ));
        }
        Ok(Self { left, stay, right })
    }

    /// `(left, stay, right) = (l/den, s/den, r/den)`.
    pub fn from_ratios(l: i64, s: i64, r: i64, den: i64) -> Result<Self> {
        let q = |n: i64| BigRational::new(BigInt::from(n), BigInt::from(den));
        Self::new(q(l), q(s), q(r))
    }

    pub fn normal() -> Self {
        Self::from_ratios(1, 0, 1, 2).expect("valid law")
    }

    pub fn lazy_uniform() -> Self {
        Self::from_ratios(1, 1, 1, 3).expect("valid law")
    }
}

/// Exact distribution over `[-t, t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    start: i64,
    probs: Vec<BigRational>,
}

impl ExactDistribution {
    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn get(&self, x: i64) -> BigRational {
        let i = x - self.start;
        if i < 0 || i >= self.probs.len() as i64 {
            BigRational::zero()
        } else {
            self.probs[i as usize].clone()
        }
    }

    pub fn total(&self) -> BigRational {
        self.probs.iter().fold(BigRational::zero(), |acc, p| acc + p)
    }

    pub fn moment(&self, n: u32) -> BigRational {
        self.probs.iter().enumerate().fold(BigRational::zero(), |acc, (i, p)| {
            let x = BigRational::from_integer(BigInt::from(self.start + i as i64));
            acc + num_traits::pow(x, n as usize) * p
        })
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// Exact rational propagation, for `t <= MAX_EXACT_STEPS`.
///
/// Works on integer path weights over the common denominator of the law and
/// divides once at the end.
pub fn exact_classical_distribution(law: &RationalStepLaw, t: u64) -> Result<ExactDistribution> {
    if t > MAX_EXACT_STEPS {
        return Err(WalkError::TooManySteps {
            requested: t as usize,
            max: MAX_EXACT_STEPS as usize,
        });
    }
    let den = num_integer::lcm(
        num_integer::lcm(law.left.denom().clone(), law.stay.denom().clone()),
        law.right.denom().clone(),
    );
    let weight = |q: &BigRational| q.numer() * (&den / q.denom());
    let (wl, ws, wr) = (weight(&law.left), weight(&law.stay), weight(&law.right));

    let n = 2 * t as usize + 1;
    let mut cur = vec![BigInt::zero(); n];
    cur[t as usize] = BigInt::one();
    for _ in 0..t {
        let mut next = vec![BigInt::zero(); n];
        for (i, c) in cur.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if i > 0 {
                next[i - 1] += c * &wl;
            }
            next[i] += c * &ws;
            if i + 1 < n {
                next[i + 1] += c * &wr;
            }
        }
        cur = next;
    }
    let total_den = num_traits::pow(den, t as usize);
    Ok(ExactDistribution {
        start: -(t as i64),
        probs: cur
            .into_iter()
            .map(|c| BigRational::new(c, total_den.clone()))
            .collect(),
    })
}

/// `sqrt(2 / (pi t)) exp(-x^2 / 2t)`, the large-`t` form of the symmetric walk
/// on sites of matching parity.
pub fn gaussian_approx(x: i64, t: u64) -> Result<f64> {
    if t == 0 {
        return Err(WalkError::InvalidParameter("t must be at least 1".into()));
    }
    let (x, t) = (x as f64, t as f64);
    Ok((2.0 / (PI * t)).sqrt() * (-x * x / (2.0 * t)).exp())
}

fn log_ratio(t: u64) -> Result<f64> {
    // -ln(pi / 8t), positive iff 8t > pi.
    let value = -(PI / (8.0 * t as f64)).ln();
    if t == 0 || value <= 0.0 {
        Err(WalkError::TimeTooSmall(t))
    } else {
        Ok(value)
    }
}

/// Position where the Gaussian approximation crosses the mean probability
/// `1/(2t+1)`: `sqrt(t) sqrt(-ln(pi / 8t))`.
pub fn x_star(t: u64) -> Result<f64> {
    Ok((t as f64).sqrt() * log_ratio(t)?.sqrt())
}

/// Asymptotic occupancy rate of the symmetric walk, `sqrt(-ln(pi/8t) / 4t)`.
pub fn classical_occ_rate_asymptotic(t: u64) -> Result<f64> {
    Ok((log_ratio(t)? / (4.0 * t as f64)).sqrt())
}
