//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lazywalk::classical::{
    classical_distribution, classical_occ_rate_asymptotic, exact_classical_distribution, ClassicalStepLaw,
    RationalStepLaw,
};
use lazywalk::coin::{dft_coin, g_coin, general_u2};
use lazywalk::metrics::{
    entanglement_entropy, general_occupancy_rate, interval_mass, moment, occupancy_number, occupancy_rate,
    MetricSeries, OccupancyParams,
};
use lazywalk::spectral::{asymptotic_moment_coefficient, band_structure, detect_localization, KGrid, FLAT_TOLERANCE};
use lazywalk::walk::{brute_force_distribution, evolve, evolve_with, range, ShiftKind, WalkSpec};
use lazywalk::{CoinOperator, ProbabilityDistribution};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn paper_lazy() -> Vec<Complex64> {
    vec![c(0.85f64.sqrt()), c(0.0), c(-(0.15f64.sqrt()))]
}

fn paper_normal() -> Vec<Complex64> {
    vec![c(0.85f64.sqrt()), c(-(0.15f64.sqrt()))]
}

fn grover() -> CoinOperator {
    CoinOperator::parse("grover").unwrap()
}

fn hadamard() -> CoinOperator {
    dft_coin(2).unwrap()
}

fn spec(coin: CoinOperator, shift: ShiftKind, psi: Vec<Complex64>, steps: usize) -> WalkSpec {
    WalkSpec::new(coin, shift, psi, steps).unwrap()
}

fn final_distribution(s: &WalkSpec) -> ProbabilityDistribution {
    let mut out = None;
    evolve_with(s, s.steps().max(1), |w| {
        out = Some(w.distribution()?);
        Ok(())
    })
    .unwrap();
    out.unwrap()
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(started: Instant, budget: Duration, detail: String) -> Outcome {
    let elapsed = started.elapsed();
    let detail = format!("{detail}; {:.2}s (budget {}s)", elapsed.as_secs_f64(), budget.as_secs());
    check(elapsed < budget, detail)
}

fn random_unit(rng: &mut StdRng, dim: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.1 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(t, y)| (t.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let pauli_x = general_u2(c(0.0), c(1.0), c(1.0), c(0.0)).unwrap();
    let families = [
        (dft_coin(3).unwrap(), ShiftKind::Lazy),
        (grover(), ShiftKind::Lazy),
        (g_coin(0.3).unwrap(), ShiftKind::Lazy),
        (hadamard(), ShiftKind::Normal),
        (pauli_x, ShiftKind::Normal),
    ];
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for (coin, shift) in &families {
        for _ in 0..20 {
            let psi = random_unit(&mut rng, coin.dim());
            for t in 0..=8 {
                let s = spec(coin.clone(), *shift, psi.clone(), t);
                let engine = final_distribution(&s);
                let oracle = brute_force_distribution(&s).unwrap();
                for x in oracle.start()..=oracle.end() {
                    worst = worst.max((engine.get(x) - oracle.get(x)).abs());
                }
            }
        }
    }
    if worst >= 1e-12 {
        return Err(format!("max elementwise difference {worst:e}"));
    }
    within_budget(started, Duration::from_secs(10), format!("max elementwise difference {worst:.1e}"))
}

fn paper_occupancy_point() -> Outcome {
    let started = Instant::now();
    let d = final_distribution(&spec(dft_coin(3).unwrap(), ShiftKind::Lazy, paper_lazy(), 50));
    let occ = occupancy_number(&d, 101);
    let rate = occupancy_rate(&d, 101);
    if !((39..=41).contains(&occ) && (rate - 0.396).abs() <= 0.01) {
        return Err(format!("Occ={occ}, OccRate={rate:.4}"));
    }
    within_budget(started, Duration::from_secs(1), format!("Occ={occ}, OccRate={rate:.4}"))
}

fn second_moment_slope(s: &WalkSpec) -> f64 {
    let mut pts = Vec::new();
    evolve_with(s, 100, |w| {
        if w.t() > 0 {
            pts.push((w.t() as f64, moment(&w.distribution()?, 2)));
        }
        Ok(())
    })
    .unwrap();
    loglog_slope(&pts)
}

fn theorem_scaling() -> Outcome {
    let started = Instant::now();
    let lazy = second_moment_slope(&spec(dft_coin(3).unwrap(), ShiftKind::Lazy, paper_lazy(), 1000));
    let normal = second_moment_slope(&spec(hadamard(), ShiftKind::Normal, paper_normal(), 1000));
    let classical_slope = |law: ClassicalStepLaw| {
        let pts: Vec<(f64, f64)> = (1..=10)
            .map(|i| {
                let t = 100 * i;
                (t as f64, moment(&classical_distribution(&law, t).unwrap(), 2))
            })
            .collect();
        loglog_slope(&pts)
    };
    let crw = classical_slope(ClassicalStepLaw::normal());
    let lazy_crw = classical_slope(ClassicalStepLaw::lazy_uniform());
    let exact_ok = [100u64, 200].iter().all(|&t| {
        let n = exact_classical_distribution(&RationalStepLaw::normal(), t).unwrap();
        let l = exact_classical_distribution(&RationalStepLaw::lazy_uniform(), t).unwrap();
        n.moment(2) == BigRational::from_integer(BigInt::from(t))
            && l.moment(2) == BigRational::new(BigInt::from(2 * t), BigInt::from(3))
    });
    let detail = format!(
        "slopes lazy-DFT3 {lazy:.4}, Hadamard {normal:.4}, CRW {crw:.4}, lazy CRW {lazy_crw:.4}; exact <x^2> = t, 2t/3: {exact_ok}"
    );
    let quantum = |s: f64| (1.80..=2.05).contains(&s);
    let classical = |s: f64| (0.90..=1.10).contains(&s);
    if !(quantum(lazy) && quantum(normal) && classical(crw) && classical(lazy_crw) && exact_ok) {
        return Err(detail);
    }
    within_budget(started, Duration::from_secs(60), detail)
}

fn localization() -> Outcome {
    let grid = KGrid::new(2048).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    let coins = [
        g_coin(0.1).unwrap(),
        g_coin((1.0f64 / 3.0).sqrt()).unwrap(),
        g_coin(0.9).unwrap(),
        dft_coin(3).unwrap(),
    ];
    for (i, coin) in coins.iter().enumerate() {
        let sd = band_structure(coin, ShiftKind::Lazy, grid, &paper_lazy()).unwrap();
        let flat = detect_localization(&sd, FLAT_TOLERANCE).flat_bands.len();
        let expected = if i < 3 { 1 } else { 0 };
        ok &= flat == expected;
        parts.push(format!("{}: {flat} flat", coin.label()));
    }
    check(ok, parts.join(", "))
}

fn momentum_cross_check() -> Outcome {
    let t = 500;
    let grid = KGrid::new(2048).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (coin, shift, psi) in [
        (dft_coin(3).unwrap(), ShiftKind::Lazy, paper_lazy()),
        (hadamard(), ShiftKind::Normal, paper_normal()),
    ] {
        let sd = band_structure(&coin, shift, grid, &psi).unwrap();
        let predicted = asymptotic_moment_coefficient(&sd, 2).unwrap() * (t * t) as f64;
        let direct = moment(&final_distribution(&spec(coin.clone(), shift, psi, t)), 2);
        let rel = (predicted - direct).abs() / direct;
        ok &= rel < 0.05;
        parts.push(format!("{}: c2 t^2 = {predicted:.1}, direct {direct:.1}, rel {rel:.4}", coin.label()));
    }
    check(ok, parts.join("; "))
}

fn concentration_intervals() -> Outcome {
    let started = Instant::now();
    let t = 500usize;
    let outside = |d: &ProbabilityDistribution, half: f64| {
        let lim = half * t as f64;
        1.0 - interval_mass(d, -lim, lim)
    };
    let h = outside(
        &final_distribution(&spec(hadamard(), ShiftKind::Normal, paper_normal(), t)),
        0.5f64.sqrt() + 0.05,
    );
    let g = outside(
        &final_distribution(&spec(grover(), ShiftKind::Lazy, paper_lazy(), t)),
        (1.0f64 / 3.0).sqrt() + 0.05,
    );
    let half = outside(
        &final_distribution(&spec(g_coin(0.5).unwrap(), ShiftKind::Lazy, paper_lazy(), t)),
        0.55,
    );
    let detail = format!("outside mass Hadamard {h:.2e}, Grover {g:.2e}, g(0.5) {half:.2e}");
    if !(h < 0.01 && g < 0.02 && half < 0.02) {
        return Err(detail);
    }
    within_budget(started, Duration::from_secs(30), detail)
}

fn entropy_series(s: &WalkSpec) -> MetricSeries {
    let mut out = MetricSeries::new("entropy");
    evolve_with(s, 1, |w| out.push(w.t(), entanglement_entropy(&w.snapshot())?)).unwrap();
    out
}

fn entanglement() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, s, max) in [
        ("lazy DFT3", spec(dft_coin(3).unwrap(), ShiftKind::Lazy, paper_lazy(), 200), 3f64.log2()),
        ("lazy Grover", spec(grover(), ShiftKind::Lazy, paper_lazy(), 200), 3f64.log2()),
        ("Hadamard", spec(hadamard(), ShiftKind::Normal, paper_normal(), 200), 1.0),
    ] {
        let e = entropy_series(&s);
        let peak = e.values().iter().cloned().fold(f64::MIN, f64::max);
        let (mean, std) = e.mean_std(150, 200).unwrap();
        ok &= peak <= max + 1e-10 && std < 0.02;
        parts.push(format!(
            "{label}: max {peak:.4} (bound {max:.4}), plateau {mean:.4} +- {std:.4} ({:.1}% of bound)",
            100.0 * mean / max
        ));
    }
    let one_step = evolve(&spec(dft_coin(3).unwrap(), ShiftKind::Lazy, vec![c(0.0), c(1.0), c(0.0)], 1), 1).unwrap();
    let e1 = entanglement_entropy(one_step.last().unwrap()).unwrap();
    ok &= (e1 - 3f64.log2()).abs() < 1e-10;
    parts.push(format!("1-step DFT3 from stay: {e1:.12}"));
    check(ok, parts.join("; "))
}

fn classical_appendix() -> Outcome {
    let t = 1000;
    let d = classical_distribution(&ClassicalStepLaw::normal(), t).unwrap();
    let exact = occupancy_rate(&d, 2 * t + 1);
    let approx = classical_occ_rate_asymptotic(t).unwrap();
    let rel = (approx - exact).abs() / exact;
    let mut monotone = true;
    let mut prev = classical_occ_rate_asymptotic(10).unwrap();
    for t in 11..=100_000 {
        let cur = classical_occ_rate_asymptotic(t).unwrap();
        monotone &= cur < prev;
        prev = cur;
    }
    check(
        rel < 0.15 && monotone && prev < 0.02,
        format!("t=1000 exact {exact:.4} vs asymptotic {approx:.4} (rel {rel:.3}); monotone {monotone}; t=1e5 {prev:.5}"),
    )
}

fn occ_rates_quantum(s: &WalkSpec) -> MetricSeries {
    let mut out = MetricSeries::new("occrate");
    let shift = s.shift();
    evolve_with(s, 1, |w| out.push(w.t(), occupancy_rate(&w.distribution()?, range(shift, w.t())))).unwrap();
    out
}

fn occupancy_ordering() -> Outcome {
    let lazy = occ_rates_quantum(&spec(dft_coin(3).unwrap(), ShiftKind::Lazy, paper_lazy(), 200));
    let normal = occ_rates_quantum(&spec(hadamard(), ShiftKind::Normal, paper_normal(), 200));
    let (lazy_mean, _) = lazy.mean_std(100, 200).unwrap();
    let (normal_mean, _) = normal.mean_std(100, 200).unwrap();

    let mut classical_ok = true;
    let mut classical_sum = (0.0, 0.0);
    for t in 100..=200u64 {
        let n = 2 * t + 1;
        let l = occupancy_rate(&classical_distribution(&ClassicalStepLaw::lazy_uniform(), t).unwrap(), n);
        let r = occupancy_rate(&classical_distribution(&ClassicalStepLaw::normal(), t).unwrap(), n);
        classical_ok &= l >= r;
        classical_sum.0 += l / 101.0;
        classical_sum.1 += r / 101.0;
    }

    let mut delta_ok = true;
    let deltas = [0.5, 1.0, 1.5];
    let mut delta_check = |d: &ProbabilityDistribution, n: u64| {
        let rates: Vec<f64> = deltas
            .iter()
            .filter(|&&delta| delta <= n as f64)
            .map(|&delta| general_occupancy_rate(d, OccupancyParams::new(delta, n).unwrap()))
            .collect();
        delta_ok &= rates.windows(2).all(|p| p[0] >= p[1]);
    };
    evolve_with(&spec(dft_coin(3).unwrap(), ShiftKind::Lazy, paper_lazy(), 200), 1, |w| {
        delta_check(&w.distribution()?, range(ShiftKind::Lazy, w.t()));
        Ok(())
    })
    .unwrap();
    for t in 1..=200u64 {
        delta_check(&classical_distribution(&ClassicalStepLaw::lazy_uniform(), t).unwrap(), 2 * t + 1);
    }

    check(
        lazy_mean > normal_mean && classical_ok && delta_ok,
        format!(
            "mean OccRate t in [100,200]: lazy DFT3 {lazy_mean:.4} vs Hadamard {normal_mean:.4}; \
             lazy CRW {:.4} >= CRW {:.4} at every t: {classical_ok}; delta ordering: {delta_ok}",
            classical_sum.0, classical_sum.1
        ),
    )
}

fn rho_sweep_ceiling() -> Outcome {
    let t = 200;
    let rate_at = |coin: CoinOperator| {
        let d = final_distribution(&spec(coin, ShiftKind::Lazy, paper_lazy(), t));
        occupancy_rate(&d, range(ShiftKind::Lazy, t as u64))
    };
    let rates: Vec<(f64, f64)> = (1..=9)
        .map(|i| {
            let rho = i as f64 / 10.0;
            (rho, rate_at(g_coin(rho).unwrap()))
        })
        .collect();
    let (best_rho, best) = rates.iter().cloned().fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    let dft = rate_at(dft_coin(3).unwrap());
    check(
        best < 0.2 && best < dft,
        format!("max OccRate(200) {best:.4} at rho={best_rho}; DFT3 {dft:.4}"),
    )
}

/// The t = 100 Hadamard peak is compared with the reported 0.1304 at -68;
/// this line never fails.
fn hadamard_peak_report() -> String {
    let d = final_distribution(&spec(hadamard(), ShiftKind::Normal, paper_normal(), 100));
    let (x, p) = d.argmax();
    let pos_ok = (-75..=-60).contains(&x);
    let val_ok = (p - 0.13).abs() <= 0.01;
    format!(
        "Hadamard t=100 peak at x={x} (in [-75,-60]: {pos_ok}), P={p:.4} (0.13 +- 0.01: {val_ok}); reported value 0.1304 at -68"
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 paper occupancy point", paper_occupancy_point),
        ("3 second-moment scaling", theorem_scaling),
        ("4 localization", localization),
        ("5 momentum/direct cross-check", momentum_cross_check),
        ("6 concentration intervals", concentration_intervals),
        ("7 entanglement", entanglement),
        ("8 classical asymptotics", classical_appendix),
        ("9 occupancy ordering", occupancy_ordering),
        ("10 rho-sweep ceiling", rho_sweep_ceiling),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("INFO  {}", hadamard_peak_report());
    if failures == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 10 criteria failed");
        ExitCode::FAILURE
    }
}
