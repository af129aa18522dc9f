//! The five experiment commands. Each validates the whole config before
//! doing any numerical work, writes its files into the output directory and
//! finishes with `manifest.json`.

use std::path::PathBuf;
use std::time::Instant;

use lazywalk::classical::{classical_occ_rate_asymptotic, evolve_classical, gaussian_approx, x_star};
use lazywalk::metrics::{
    entanglement_entropy, general_occupancy_number, general_occupancy_rate, moment, occupancy_number,
    occupancy_rate, MetricSeries, OccupancyParams,
};
use lazywalk::spectral::{
    asymptotic_moment_coefficient, asymptotic_occupancy_rate, band_structure, detect_localization, velocity_density,
    KGrid, FLAT_TOLERANCE,
};
use lazywalk::walk::{evolve_with, range};
use lazywalk::{ProbabilityDistribution, ShiftKind, WalkError, WalkSpec, WalkState};
use log::info;
use rayon::prelude::*;

use crate::config::{Family, LoadedConfig, Metric, PreparedWalk, SweepParameter};
use crate::output::{Manifest, OutputDir};
use crate::CliError;

/// Command-line overrides shared by every command.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

fn output_root(cfg: &LoadedConfig, opts: &RunOptions) -> Result<PathBuf, CliError> {
    opts.out
        .clone()
        .or_else(|| cfg.config.run.output.as_ref().map(PathBuf::from))
        .ok_or_else(|| CliError::Config(format!("{}: no output directory (use --out or [run] output)", cfg.source_name)))
}

/// Runs `body` on a thread pool sized by `--workers` (or `[run] workers`).
fn with_pool<T: Send>(
    cfg: &LoadedConfig,
    opts: &RunOptions,
    body: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    let workers = opts.workers.or(cfg.config.run.workers).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(body)
}

/// One recorded time step handed to a visitor.
struct Frame<'a> {
    t: u64,
    dist: &'a ProbabilityDistribution,
    state: Option<&'a WalkState>,
}

/// Evolves `walk`, calling `visit` at `t = 0, stride, 2 stride, ...` and at
/// the final step. The coin-position state is only materialized when
/// `need_state` is set.
fn drive<F>(walk: &PreparedWalk, stride: u64, need_state: bool, mut visit: F) -> Result<(), CliError>
where
    F: FnMut(Frame<'_>) -> Result<(), CliError>,
{
    // Visitor errors are parked here while the engine unwinds with a
    // placeholder error.
    let mut failure = None;
    let mut call = |frame: Frame<'_>| -> lazywalk::Result<()> {
        visit(frame).map_err(|e| {
            failure = Some(e);
            WalkError::InvalidParameter("run aborted".into())
        })
    };
    let result = match walk {
        PreparedWalk::Quantum(spec) => evolve_with(spec, stride as usize, |w| {
            let dist = w.distribution()?;
            let state = need_state.then(|| w.snapshot());
            call(Frame {
                t: w.t(),
                dist: &dist,
                state: state.as_ref(),
            })
        }),
        PreparedWalk::Classical { law, steps } => evolve_classical(law, *steps, stride, |t, dist| {
            call(Frame { t, dist, state: None })
        }),
    };
    match (failure, result) {
        (Some(e), _) => Err(e),
        (None, Err(e)) => Err(CliError::Numerical(e)),
        (None, Ok(())) => Ok(()),
    }
}

/// Value of a scalar metric at one time step, or `None` where the metric is
/// undefined (a threshold `delta` above the range, or `t` too small for the
/// asymptotic formulas).
fn scalar(metric: Metric, frame: &Frame<'_>, shift: ShiftKind) -> Result<Option<f64>, WalkError> {
    let n = range(shift, frame.t);
    let gen_params = |delta: f64| OccupancyParams::new(delta, n).ok();
    let asymptotic = |r: lazywalk::Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(WalkError::TimeTooSmall(_)) => Ok(None),
        Err(e) => Err(e),
    };
    Ok(match metric {
        Metric::Moment(k) => Some(moment(frame.dist, k)),
        Metric::Occ => Some(occupancy_number(frame.dist, n) as f64),
        Metric::OccRate => Some(occupancy_rate(frame.dist, n)),
        Metric::GenOcc(d) => gen_params(d).map(|p| general_occupancy_number(frame.dist, p) as f64),
        Metric::GenOccRate(d) => gen_params(d).map(|p| general_occupancy_rate(frame.dist, p)),
        Metric::Entropy => {
            let state = frame
                .state
                .ok_or_else(|| WalkError::InvalidParameter("entropy needs a quantum walk state".into()))?;
            Some(entanglement_entropy(state)?)
        }
        Metric::OccRateAsymptotic => asymptotic(classical_occ_rate_asymptotic(frame.t))?,
        Metric::XStar => asymptotic(x_star(frame.t))?,
        Metric::Distribution | Metric::Bands | Metric::VDensity => None,
    })
}

fn dist_name(t: u64) -> String {
    format!("dist_t{t}.csv")
}

/// Writes `dist_t{t}.csv` at every recorded step.
pub fn run_simulate(cfg: &LoadedConfig, opts: &RunOptions) -> Result<Manifest, CliError> {
    let started = Instant::now();
    let walk = cfg.prepare(None)?;
    let stride = cfg.stride()?;
    let mut out = OutputDir::create(&output_root(cfg, opts)?)?;
    with_pool(cfg, opts, || {
        drive(&walk, stride, false, |f| out.write(&dist_name(f.t), |buf| f.dist.write_csv(buf)))
    })?;
    info!("simulate: wrote {} distributions", out.files().len());
    out.finish("simulate", &cfg.config, started.elapsed())
}

/// Evaluates every requested metric at every recorded step; one CSV per
/// metric.
pub fn run_metrics(cfg: &LoadedConfig, opts: &RunOptions) -> Result<Manifest, CliError> {
    let started = Instant::now();
    let walk = cfg.prepare(None)?;
    let stride = cfg.stride()?;
    let metrics = cfg.metrics()?;
    if metrics.is_empty() {
        return Err(CliError::Config(format!("{}: [run] metrics is empty", cfg.source_name)));
    }
    let spectral = metrics.iter().any(|m| matches!(m, Metric::Bands | Metric::VDensity));
    if spectral {
        check_spectral_params(cfg)?;
    }
    let mut out = OutputDir::create(&output_root(cfg, opts)?)?;
    with_pool(cfg, opts, || {
        let shift = walk.shift();
        let scalars: Vec<Metric> = metrics.iter().copied().filter(|m| m.is_scalar()).collect();
        let mut series: Vec<MetricSeries> = scalars.iter().map(|m| MetricSeries::new(m.to_string())).collect();
        let write_dists = metrics.contains(&Metric::Distribution);
        drive(&walk, stride, metrics.contains(&Metric::Entropy), |f| {
            for (m, s) in scalars.iter().zip(series.iter_mut()) {
                if let Some(v) = scalar(*m, &f, shift)? {
                    s.push(f.t, v)?;
                }
            }
            if write_dists {
                out.write(&dist_name(f.t), |buf| f.dist.write_csv(buf))?;
            }
            Ok(())
        })?;
        for (m, s) in scalars.iter().zip(&series) {
            out.write(&format!("{}.csv", m.file_stem()), |buf| s.write_csv(buf))?;
        }
        if let (true, PreparedWalk::Quantum(spec)) = (spectral, &walk) {
            write_spectral(
                cfg,
                spec,
                &mut out,
                metrics.contains(&Metric::Bands),
                metrics.contains(&Metric::VDensity),
            )?;
        }
        Ok(())
    })?;
    out.finish("metrics", &cfg.config, started.elapsed())
}

fn check_spectral_params(cfg: &LoadedConfig) -> Result<(), CliError> {
    KGrid::new(cfg.grid()).map_err(|e| cfg.spectral_error(true, e))?;
    if cfg.bins() < 32 {
        return Err(cfg.spectral_error(false, WalkError::TooFewBins(cfg.bins())));
    }
    Ok(())
}

fn write_spectral(
    cfg: &LoadedConfig,
    spec: &WalkSpec,
    out: &mut OutputDir,
    bands: bool,
    density: bool,
) -> Result<(), CliError> {
    let grid = KGrid::new(cfg.grid()).map_err(|e| cfg.spectral_error(true, e))?;
    let sd = band_structure(spec.coin(), spec.shift(), grid, spec.initial_coin())?;
    if bands {
        out.write("bands.csv", |buf| sd.write_csv(buf))?;
    }
    if density {
        let vd = velocity_density(&sd, cfg.bins())?;
        out.write("vdensity.csv", |buf| vd.write_csv(buf))?;
    }
    Ok(())
}

/// Band structure, velocity density and a `quantity,value` summary of the
/// asymptotic quantities.
pub fn run_spectral(cfg: &LoadedConfig, opts: &RunOptions) -> Result<Manifest, CliError> {
    let started = Instant::now();
    let spec = match cfg.prepare(None)? {
        PreparedWalk::Quantum(spec) => spec,
        PreparedWalk::Classical { .. } => {
            return Err(cfg.error_at(cfg.config.walk.family.span(), "spectral analysis needs a quantum walk family"))
        }
    };
    check_spectral_params(cfg)?;
    let mut out = OutputDir::create(&output_root(cfg, opts)?)?;
    with_pool(cfg, opts, || {
        let grid = KGrid::new(cfg.grid()).map_err(|e| cfg.spectral_error(true, e))?;
        let sd = band_structure(spec.coin(), spec.shift(), grid, spec.initial_coin())?;
        let vd = velocity_density(&sd, cfg.bins())?;
        out.write("bands.csv", |buf| sd.write_csv(buf))?;
        out.write("vdensity.csv", |buf| vd.write_csv(buf))?;
        let loc = detect_localization(&sd, FLAT_TOLERANCE);
        let mut rows = vec![
            ("flat_bands".to_string(), loc.flat_bands.len() as f64),
            ("localized".to_string(), if loc.localized { 1.0 } else { 0.0 }),
            ("atom_at_zero".to_string(), vd.atom_at_zero()),
            ("asymptotic_occrate".to_string(), asymptotic_occupancy_rate(&vd)),
        ];
        for n in 1..=4 {
            rows.push((format!("c{n}"), asymptotic_moment_coefficient(&sd, n)?));
        }
        out.write("spectral_summary.csv", |buf| {
            use std::io::Write;
            writeln!(buf, "quantity,value")?;
            for (name, v) in &rows {
                writeln!(buf, "{name},{v:.16e}")?;
            }
            Ok(())
        })
    })?;
    out.finish("spectral", &cfg.config, started.elapsed())
}

/// The classical appendix analysis: exact occupancy rate with threshold
/// `1/(2t+1)`, its asymptotic form, `x*`, and (for the normal law) the
/// Gaussian approximation at the final step.
pub fn run_classical(cfg: &LoadedConfig, opts: &RunOptions) -> Result<Manifest, CliError> {
    let started = Instant::now();
    let family = cfg.family()?;
    if !family.is_classical() {
        return Err(cfg.error_at(
            cfg.config.walk.family.span(),
            "the classical command needs classical_normal or classical_lazy",
        ));
    }
    let walk = cfg.prepare(None)?;
    let stride = cfg.stride()?;
    let steps = walk.steps();
    let mut out = OutputDir::create(&output_root(cfg, opts)?)?;
    let mut exact = MetricSeries::new("occrate");
    let mut asym = MetricSeries::new("occrate_asymptotic");
    let mut xs = MetricSeries::new("x_star");
    let mut last = None;
    drive(&walk, stride, false, |f| {
        exact.push(f.t, occupancy_rate(f.dist, 2 * f.t + 1))?;
        for (m, s) in [(Metric::OccRateAsymptotic, &mut asym), (Metric::XStar, &mut xs)] {
            if let Some(v) = scalar(m, &f, ShiftKind::Normal)? {
                s.push(f.t, v)?;
            }
        }
        if f.t == steps {
            last = Some(f.dist.clone());
        }
        Ok(())
    })?;
    out.write("occrate.csv", |buf| exact.write_csv(buf))?;
    out.write("occrate_asymptotic.csv", |buf| asym.write_csv(buf))?;
    out.write("x_star.csv", |buf| xs.write_csv(buf))?;
    if family == Family::ClassicalNormal && steps >= 1 {
        let d = last.expect("final step is always visited");
        let mut rows = Vec::with_capacity(d.len());
        for (x, p) in d.iter() {
            rows.push((x, p, gaussian_approx(x, steps)?));
        }
        out.write(&format!("gaussian_t{steps}.csv"), |buf| {
            use std::io::Write;
            writeln!(buf, "x,exact,gaussian")?;
            for (x, p, g) in &rows {
                writeln!(buf, "{x},{p:.16e},{g:.16e}")?;
            }
            Ok(())
        })?;
    }
    out.finish("classical", &cfg.config, started.elapsed())
}

/// Runs one walk per sweep value, possibly concurrently, and writes each
/// point's metric series plus a summary of the value at the final step.
/// Summary rows follow the input order.
pub fn run_sweep(cfg: &LoadedConfig, opts: &RunOptions) -> Result<Manifest, CliError> {
    let started = Instant::now();
    let (parameter, values, metric) = cfg.sweep()?;
    let stride = cfg.stride()?;
    let base = cfg.prepare(None)?;
    // Validate every point before any work starts.
    let points = values
        .iter()
        .map(|&v| {
            Ok(match parameter {
                SweepParameter::Rho => (cfg.prepare(Some(&format!("g:{v}")))?, metric),
                SweepParameter::Steps => (base.with_steps(v as u64), metric),
                SweepParameter::Delta => {
                    let m = match metric {
                        Metric::GenOcc(_) => Metric::GenOcc(v),
                        _ => Metric::GenOccRate(v),
                    };
                    if !(v > 0.0 && v.is_finite()) {
                        let span = cfg.config.sweep.as_ref().map(|s| s.values.span()).unwrap_or(0..0);
                        return Err(cfg.error_at(span, format!("delta must be positive, got {v}")));
                    }
                    (base.clone(), m)
                }
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let root = output_root(cfg, opts)?;
    let mut out = OutputDir::create(&root)?;
    let name = parameter.name();
    let results = with_pool(cfg, opts, || {
        Ok(points
            .par_iter()
            .enumerate()
            .map(|(i, (walk, m))| {
                let mut series = MetricSeries::new(format!("{m} ({name}={})", values[i]));
                let shift = walk.shift();
                drive(walk, stride, *m == Metric::Entropy, |f| {
                    if let Some(v) = scalar(*m, &f, shift)? {
                        series.push(f.t, v)?;
                    }
                    Ok(())
                })?;
                let mut own = OutputDir::create(&root)?;
                own.write(&format!("sweep_{name}_{i:03}.csv"), |buf| series.write_csv(buf))?;
                let final_value = match (series.times().last(), series.values().last()) {
                    (Some(&t), Some(&v)) if t == walk.steps() => v,
                    _ => f64::NAN,
                };
                Ok((own, final_value))
            })
            .collect::<Vec<Result<_, CliError>>>())
    })?;
    let mut summary = Vec::with_capacity(results.len());
    for r in results {
        let (own, v) = r?;
        out.absorb(own);
        summary.push(v);
    }
    out.write(&format!("sweep_{name}.csv"), |buf| {
        use std::io::Write;
        writeln!(buf, "# {metric} at the final step")?;
        writeln!(buf, "param,value,metric")?;
        for (p, v) in values.iter().zip(&summary) {
            writeln!(buf, "{name},{p},{v:.16e}")?;
        }
        Ok(())
    })?;
    out.finish("sweep", &cfg.config, started.elapsed())
}
