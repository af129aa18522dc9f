//! Position-space evolution of discrete-time walks on the line.
//!
//! One step applies the coin to the internal state at every site and then
//! moves each coin component by its displacement. Coin basis order is
//! `(r, s, l)` for lazy walks, `(r, l)` for normal walks and `(r, s)` for the
//! stay-or-right walk.

use std::fmt;

use num_complex::Complex64;

use crate::coin::CoinOperator;
use crate::distribution::ProbabilityDistribution;
use crate::error::{Result, WalkError};

/// Norm tolerance for states and initial coin vectors.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Largest step count accepted by [`brute_force_distribution`].
pub const MAX_BRUTE_FORCE_STEPS: usize = 10;

/// How each coin component moves after the coin toss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShiftKind {
    /// Right, stay, left (three-state coin).
    Lazy,
    /// Right, left (two-state coin).
    Normal,
    /// Right, stay (two-state coin).
    StayOrRight,
}

impl ShiftKind {
    /// Displacement of each coin basis state.
    pub fn displacements(self) -> &'static [i64] {
        match self {
            ShiftKind::Lazy => &[1, 0, -1],
            ShiftKind::Normal => &[1, -1],
            ShiftKind::StayOrRight => &[1, 0],
        }
    }

    pub fn coin_dim(self) -> usize {
        self.displacements().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            ShiftKind::Lazy => "lazy",
            ShiftKind::Normal => "normal",
            ShiftKind::StayOrRight => "stay_or_right",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lazy" => Some(ShiftKind::Lazy),
            "normal" => Some(ShiftKind::Normal),
            "stay_or_right" => Some(ShiftKind::StayOrRight),
            _ => None,
        }
    }

    pub(crate) fn min_displacement(self) -> i64 {
        *self.displacements().iter().min().unwrap()
    }

    pub(crate) fn max_displacement(self) -> i64 {
        *self.displacements().iter().max().unwrap()
    }

    /// Errors unless `coin` has the dimension this shift needs.
    pub fn check_coin(self, coin: &CoinOperator) -> Result<()> {
        if coin.dim() == self.coin_dim() {
            Ok(())
        } else {
            Err(WalkError::DimensionMismatch {
                shift: self.name(),
                expected: self.coin_dim(),
                actual: coin.dim(),
            })
        }
    }
}

impl fmt::Display for ShiftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Number of distinct positions reachable after `t` steps from the origin.
pub fn range(shift: ShiftKind, t: u64) -> u64 {
    let width = (shift.max_displacement() - shift.min_displacement()) as u64;
    width * t + 1
}

/// Everything needed to run one walk from the origin.
#[derive(Clone, Debug)]
pub struct WalkSpec {
    coin: CoinOperator,
    shift: ShiftKind,
    initial_coin: Vec<Complex64>,
    steps: usize,
}

impl WalkSpec {
    pub fn new(
        coin: CoinOperator,
        shift: ShiftKind,
        initial_coin: Vec<Complex64>,
        steps: usize,
    ) -> Result<Self> {
        shift.check_coin(&coin)?;
        if initial_coin.len() != coin.dim() {
            return Err(WalkError::DimensionMismatch {
                shift: shift.name(),
                expected: coin.dim(),
                actual: initial_coin.len(),
            });
        }
        let norm = norm_sqr(&initial_coin);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(WalkError::NotNormalized(norm));
        }
        Ok(Self {
            coin,
            shift,
            initial_coin,
            steps,
        })
    }

    pub fn coin(&self) -> &CoinOperator {
        &self.coin
    }

    pub fn shift(&self) -> ShiftKind {
        self.shift
    }

    pub fn initial_coin(&self) -> &[Complex64] {
        &self.initial_coin
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn with_steps(&self, steps: usize) -> Self {
        Self {
            steps,
            ..self.clone()
        }
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Amplitudes `psi_alpha(x, t)` on the window `[lo, hi]` that contains the
/// support of the state.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    t: u64,
    dim: usize,
    lo: i64,
    hi: i64,
    amps: Vec<Complex64>,
}

impl WalkState {
    /// Builds a state from a position-major amplitude buffer starting at `lo`.
    pub fn from_amplitudes(t: u64, dim: usize, lo: i64, amps: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || amps.is_empty() || !amps.len().is_multiple_of(dim) {
            return Err(WalkError::InvalidParameter(format!(
                "amplitude buffer of length {} does not split into {dim}-vectors",
                amps.len()
            )));
        }
        let hi = lo + (amps.len() / dim) as i64 - 1;
        Ok(Self { t, dim, lo, hi, amps })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smallest and largest stored position.
    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    /// Coin vector at `x` (zeros outside the window).
    pub fn amplitude(&self, x: i64) -> Vec<Complex64> {
        if x < self.lo || x > self.hi {
            return vec![Complex64::new(0.0, 0.0); self.dim];
        }
        let i = (x - self.lo) as usize * self.dim;
        self.amps[i..i + self.dim].to_vec()
    }

    /// Position-major amplitudes, `dim` entries per site starting at `window().0`.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    /// Errors unless the total probability is 1 within [`NORM_TOLERANCE`].
    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            Err(WalkError::NotNormalized(n))
        } else {
            Ok(())
        }
    }
}

/// The state at `t = 0`: the walker sits at the origin with the spec's coin state.
pub fn init_state(spec: &WalkSpec) -> WalkState {
    WalkState {
        t: 0,
        dim: spec.coin.dim(),
        lo: 0,
        hi: 0,
        amps: spec.initial_coin.clone(),
    }
}

/// Applies the coin at every site of `src` (window starting at `src_lo`) and
/// scatters the result into `dst` (window starting at `dst_lo`, pre-zeroed).
fn propagate(
    src: &[Complex64],
    src_lo: i64,
    dst: &mut [Complex64],
    dst_lo: i64,
    coin: &CoinOperator,
    disp: &[i64],
) {
    let d = disp.len();
    let sites = src.len() / d;
    let mut tossed = [Complex64::new(0.0, 0.0); 3];
    for site in 0..sites {
        let psi = &src[site * d..(site + 1) * d];
        if psi.iter().all(|a| a.re == 0.0 && a.im == 0.0) {
            continue;
        }
        for (r, out) in tossed.iter_mut().enumerate().take(d) {
            *out = (0..d).map(|c| coin.get(r, c) * psi[c]).sum();
        }
        let x = src_lo + site as i64;
        for (alpha, &shift) in disp.iter().enumerate() {
            let target = (x + shift - dst_lo) as usize;
            dst[target * d + alpha] += tossed[alpha];
        }
    }
}

/// One application of `S (I x C)`.
pub fn step(state: &WalkState, coin: &CoinOperator, shift: ShiftKind) -> Result<WalkState> {
    shift.check_coin(coin)?;
    if state.dim != coin.dim() {
        return Err(WalkError::DimensionMismatch {
            shift: shift.name(),
            expected: coin.dim(),
            actual: state.dim,
        });
    }
    let lo = state.lo + shift.min_displacement();
    let hi = state.hi + shift.max_displacement();
    let mut amps = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize * state.dim];
    propagate(&state.amps, state.lo, &mut amps, lo, coin, shift.displacements());
    Ok(WalkState {
        t: state.t + 1,
        dim: state.dim,
        lo,
        hi,
        amps,
    })
}

/// Steps a walk in place on a buffer pre-sized for the whole run.
///
/// The buffers span every position reachable within `spec.steps()`; the live
/// window `[lo, hi]` grows with each step.
pub struct Walker<'a> {
    spec: &'a WalkSpec,
    t: u64,
    base: i64,
    lo: i64,
    hi: i64,
    current: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl<'a> Walker<'a> {
    pub fn new(spec: &'a WalkSpec) -> Self {
        let steps = spec.steps as i64;
        let base = steps * spec.shift.min_displacement();
        let top = steps * spec.shift.max_displacement();
        let len = (top - base + 1) as usize * spec.coin.dim();
        let mut current = vec![Complex64::new(0.0, 0.0); len];
        let d = spec.coin.dim();
        let origin = (-base) as usize * d;
        current[origin..origin + d].copy_from_slice(&spec.initial_coin);
        Self {
            spec,
            t: 0,
            base,
            lo: 0,
            hi: 0,
            current,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Advances one step. Returns `false` (and does nothing) once the
    /// configured number of steps has been taken.
    pub fn advance(&mut self) -> bool {
        if self.t as usize >= self.spec.steps {
            return false;
        }
        let d = self.spec.coin.dim();
        let shift = self.spec.shift;
        let new_lo = self.lo + shift.min_displacement();
        let new_hi = self.hi + shift.max_displacement();
        let dst_range = (new_lo - self.base) as usize * d..(new_hi - self.base + 1) as usize * d;
        self.scratch[dst_range.clone()].fill(Complex64::new(0.0, 0.0));
        let src_range = (self.lo - self.base) as usize * d..(self.hi - self.base + 1) as usize * d;
        propagate(
            &self.current[src_range],
            self.lo,
            &mut self.scratch[dst_range],
            new_lo,
            &self.spec.coin,
            shift.displacements(),
        );
        std::mem::swap(&mut self.current, &mut self.scratch);
        self.lo = new_lo;
        self.hi = new_hi;
        self.t += 1;
        true
    }

    fn live(&self) -> &[Complex64] {
        let d = self.spec.coin.dim();
        &self.current[(self.lo - self.base) as usize * d..(self.hi - self.base + 1) as usize * d]
    }

    /// A full copy of the current state.
    pub fn snapshot(&self) -> WalkState {
        WalkState {
            t: self.t,
            dim: self.spec.coin.dim(),
            lo: self.lo,
            hi: self.hi,
            amps: self.live().to_vec(),
        }
    }

    /// Distribution of the current state without copying the amplitudes.
    pub fn distribution(&self) -> Result<ProbabilityDistribution> {
        distribution_from(self.live(), self.spec.coin.dim(), self.lo)
    }
}

/// Snapshots at `t = 0, record_every, 2 record_every, ...` plus the final step.
pub fn evolve(spec: &WalkSpec, record_every: usize) -> Result<Vec<WalkState>> {
    let mut out = Vec::new();
    evolve_with(spec, record_every, |walker| {
        out.push(walker.snapshot());
        Ok(())
    })?;
    Ok(out)
}

/// Like [`evolve`] but hands each recorded step to `visit` instead of
/// collecting snapshots.
pub fn evolve_with<F>(spec: &WalkSpec, record_every: usize, mut visit: F) -> Result<()>
where
    F: FnMut(&Walker<'_>) -> Result<()>,
{
    if record_every == 0 {
        return Err(WalkError::InvalidStride);
    }
    let mut walker = Walker::new(spec);
    visit(&walker)?;
    while walker.advance() {
        let t = walker.t() as usize;
        if t.is_multiple_of(record_every) || t == spec.steps {
            visit(&walker)?;
        }
    }
    Ok(())
}

fn distribution_from(amps: &[Complex64], dim: usize, lo: i64) -> Result<ProbabilityDistribution> {
    let probs = amps
        .chunks_exact(dim)
        .map(|psi| psi.iter().map(|a| a.norm_sqr()).sum())
        .collect();
    ProbabilityDistribution::new(lo, probs)
}

/// `P(x) = sum_alpha |psi_alpha(x)|^2` over the state's window.
pub fn distribution(state: &WalkState) -> Result<ProbabilityDistribution> {
    distribution_from(&state.amps, state.dim, state.lo)
}

/// Independent route to the distribution: sums the amplitude of every
/// sequence of coin outcomes. Cost grows as `dim^steps`.
pub fn brute_force_distribution(spec: &WalkSpec) -> Result<ProbabilityDistribution> {
    let steps = spec.steps;
    if steps > MAX_BRUTE_FORCE_STEPS {
        return Err(WalkError::TooManySteps {
            requested: steps,
            max: MAX_BRUTE_FORCE_STEPS,
        });
    }
    let shift = spec.shift;
    let d = spec.coin.dim();
    let disp = shift.displacements();
    let lo = steps as i64 * shift.min_displacement();
    let hi = steps as i64 * shift.max_displacement();
    if steps == 0 {
        let p = norm_sqr(&spec.initial_coin);
        return ProbabilityDistribution::new(0, vec![p]);
    }
    // Amplitude per (landing position, final coin state).
    let mut acc = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize * d];
    let first = spec.coin.apply(&spec.initial_coin);
    let paths = d.pow(steps as u32);
    let mut outcomes = vec![0usize; steps];
    for index in 0..paths {
        let mut rest = index;
        for o in outcomes.iter_mut() {
            *o = rest % d;
            rest /= d;
        }
        let mut amp = first[outcomes[0]];
        let mut x = disp[outcomes[0]];
        for w in outcomes.windows(2) {
            amp *= spec.coin.get(w[1], w[0]);
            x += disp[w[1]];
        }
        acc[(x - lo) as usize * d + outcomes[steps - 1]] += amp;
    }
    distribution_from(&acc, d, lo)
}
