use lazywalk::coin::{dft_coin, g_coin, general_u2, CoinOperator};
use lazywalk::walk::{brute_force_distribution, distribution, evolve, evolve_with, ShiftKind, WalkSpec};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn unit_vector(raw: &[(f64, f64)]) -> Option<Vec<Complex64>> {
    let v: Vec<Complex64> = raw.iter().map(|&(re, im)| c(re, im)).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    (norm > 1e-3).then(|| v.into_iter().map(|a| a / norm).collect())
}

fn families() -> Vec<(CoinOperator, ShiftKind)> {
    vec![
        (dft_coin(3).unwrap(), ShiftKind::Lazy),
        (CoinOperator::parse("grover").unwrap(), ShiftKind::Lazy),
        (g_coin(0.3).unwrap(), ShiftKind::Lazy),
        (dft_coin(2).unwrap(), ShiftKind::Normal),
        (general_u2(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap(), ShiftKind::Normal),
        (dft_coin(2).unwrap(), ShiftKind::StayOrRight),
    ]
}

#[test]
fn lazy_dft3_eight_steps_matches_path_sum() {
    let spec = WalkSpec::new(
        dft_coin(3).unwrap(),
        ShiftKind::Lazy,
        vec![c(0.85f64.sqrt(), 0.0), c(0.0, 0.0), c(-(0.15f64.sqrt()), 0.0)],
        8,
    )
    .unwrap();
    let engine = distribution(evolve(&spec, 8).unwrap().last().unwrap()).unwrap();
    let oracle = brute_force_distribution(&spec).unwrap();
    assert_eq!((engine.start(), engine.end()), (oracle.start(), oracle.end()));
    for (a, b) in engine.probs().iter().zip(oracle.probs()) {
        assert!((a - b).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engine_agrees_with_path_sum(
        family in 0usize..6,
        raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3),
        steps in 0usize..=8,
    ) {
        let (coin, shift) = families().swap_remove(family);
        let psi = unit_vector(&raw[..coin.dim()]);
        prop_assume!(psi.is_some());
        let spec = WalkSpec::new(coin, shift, psi.unwrap(), steps).unwrap();
        let engine = distribution(evolve(&spec, 1).unwrap().last().unwrap()).unwrap();
        let oracle = brute_force_distribution(&spec).unwrap();
        prop_assert_eq!(engine.start(), oracle.start());
        for (a, b) in engine.probs().iter().zip(oracle.probs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_and_support_are_preserved(
        family in 0usize..6,
        raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3),
        steps in 0usize..200,
    ) {
        let (coin, shift) = families().swap_remove(family);
        let psi = unit_vector(&raw[..coin.dim()]);
        prop_assume!(psi.is_some());
        let spec = WalkSpec::new(coin, shift, psi.unwrap(), steps).unwrap();
        evolve_with(&spec, 1, |w| {
            let d = w.distribution()?;
            let t = w.t() as i64;
            assert!((d.total() - 1.0).abs() < 1e-10);
            assert!(d.start() >= -t && d.end() <= t);
            Ok(())
        }).unwrap();
    }
}

/// The paper's lazy initial state gives a nearly mirror-symmetric
/// distribution once the walk has spread. Early steps are far from
/// symmetric (t = 1 gives |P(1) - P(-1)| = 0.357), and the asymmetry last
/// exceeds 0.02 at t = 92, so the bound is checked on t in [100, 200].
#[test]
fn paper_lazy_state_is_nearly_symmetric() {
    let spec = WalkSpec::new(
        dft_coin(3).unwrap(),
        ShiftKind::Lazy,
        vec![c(0.85f64.sqrt(), 0.0), c(0.0, 0.0), c(-(0.15f64.sqrt()), 0.0)],
        200,
    )
    .unwrap();
    let mut worst = 0.0f64;
    evolve_with(&spec, 1, |w| {
        let d = w.distribution()?;
        let asym = (0..=w.t() as i64).map(|x| (d.get(x) - d.get(-x)).abs()).fold(0.0, f64::max);
        if w.t() == 1 {
            assert!((asym - 0.357).abs() < 1e-3);
        }
        if w.t() >= 100 {
            worst = worst.max(asym);
        }
        Ok(())
    })
    .unwrap();
    assert!(worst < 0.02, "{worst}");
}
