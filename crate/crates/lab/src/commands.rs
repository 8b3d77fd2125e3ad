//! The lab commands. Each one reduces replications into rows, in a fixed
//! order, so the output depends only on the config.

use doublestable_core::estimators::tail::{
    candidate_index_from_counts, common_count_mean, geometric_count_row, two_sided_count_row,
};
use doublestable_core::estimators::{
    hit_probability_check, make_block_scheme, partial_sum_comparison, AcProfile, BlockCounts, BlockExceedance,
    BlockScheme, ClusterSummary, EstimateRecord, RunningMax,
};
use doublestable_core::process::{
    partial_sum, sample_limit_sum, sample_tail_process, sample_two_sided_tail, PathSimulator, Regime, SeriesConfig,
    TruncationPolicy,
};
use doublestable_core::renewal::{asymptotic_u, io, scaling_b, theta_rho, RenewalLaw, RenewalTables};
use doublestable_core::replicate::Runner;
use doublestable_core::rng::stream;
use doublestable_core::stats::binomial_se;
use doublestable_core::{Error, Result};

use crate::config::{Command, ExperimentConfig};
use crate::output::{Outcome, PlotPoint};

/// Exceeding blocks summed over all paths below which a rate is flagged.
pub const MIN_EXCEEDANCES: u64 = 10;

/// Arrivals kept when sampling the partial-sum limit.
pub const LIMIT_ARRIVALS: usize = 20_000;

/// Draws per parallel task in `hitprob`.
const HIT_CHUNK: u64 = 10_000;

fn param<T>(msg: String) -> Result<T> {
    Err(Error::Parameter(msg))
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let runner = Runner::new(config.parallelism)?;
    let mut out = Outcome::default();
    match config.command {
        Command::Constants => constants(config, &mut out)?,
        Command::Sweep => sweep(config, &runner, &mut out)?,
        Command::Macro => macroscopic(config, &runner, &mut out)?,
        Command::Tailproc => tailproc(config, &runner, &mut out)?,
        Command::Hitprob => hitprob(config, &runner, &mut out)?,
        Command::Ac => anticlustering(config, &runner, &mut out)?,
        Command::Sums => sums(config, &runner, &mut out)?,
    }
    for r in &mut out.rows {
        r.seed = config.seed;
    }
    Ok(out)
}

fn tables(config: &ExperimentConfig, out: &mut Outcome) -> Result<RenewalTables> {
    let law = RenewalLaw::new(config.beta)?;
    out.timed("tables", || match &config.cache_dir {
        Some(dir) => io::load_or_build(dir, &law, config.table_horizon),
        None => RenewalTables::build(&law, config.table_horizon),
    })
}

fn series(config: &ExperimentConfig, n: u64, regime: Regime, default: TruncationPolicy) -> Result<SeriesConfig> {
    SeriesConfig::new(n, config.alpha, config.beta, config.seed, regime)?.with_policy(config.truncation.unwrap_or(default))
}

fn check_open_rho(config: &ExperimentConfig) -> Result<()> {
    if config.rho.is_empty() {
        return param(format!("{} needs at least one rho", config.command.name()));
    }
    if let Some(r) = config.rho.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        return param(format!("rho must lie in (0, 1), got {r}"));
    }
    Ok(())
}

fn constants(config: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let t = tables(config, out)?;
    let horizon = t.horizon();
    if config.n as usize > horizon {
        return param(format!("n = {} exceeds the table horizon {horizon}; raise --table-horizon", config.n));
    }
    let q = t.qf2();
    let big = horizon as u64;
    let rows = &mut out.rows;
    rows.push(EstimateRecord::new("qF2", q, 0.0, big).flag(&format!("N={horizon}")));
    rows.push(EstimateRecord::new("qF2_error_bound", t.qf2_error(), 0.0, big));
    rows.push(EstimateRecord::new("qF2_tail_correction", t.tail_correction(), 0.0, big));
    for &rho in &config.rho {
        let theta = theta_rho(config.beta, rho, q)?;
        rows.push(EstimateRecord::new("theta_rho", theta, 0.0, big).with_rho(rho).flag("(1-2*rho*beta)*qF2"));
    }
    rows.push(EstimateRecord::new("b_n", scaling_b(config.n as f64, config.alpha)?, 0.0, config.n));
    let w_n = t.w()[config.n as usize];
    let law = t.law();
    let w_asym = law.tail_constant() * (config.n as f64).powf(1.0 - config.beta) / (1.0 - config.beta);
    rows.push(EstimateRecord::new("w_n", w_n, 0.0, config.n));
    rows.push(EstimateRecord::new("w_n_asymptote_ratio", w_n / w_asym, 0.0, config.n).with_target(1.0, "asymptote"));
    let mut k = 10u64;
    while k as usize <= horizon {
        let ratio = t.u()[k as usize] / asymptotic_u(&t, k);
        rows.push(
            EstimateRecord::new("u_asymptote_ratio", ratio, 0.0, k)
                .with_target(1.0, "asymptote")
                .flag(&format!("k={k}")),
        );
        k *= 10;
    }
    rows.push(EstimateRecord::new("renewal_identity_residual", t.renewal_identity_residual(), 0.0, big));
    rows.push(EstimateRecord::new("deconvolution_residual", t.deconvolution_residual(), 0.0, big));
    if t.clamped_entries() > 0 {
        rows.push(EstimateRecord::new("clamped_entries", t.clamped_entries() as f64, 0.0, big).flag("clamped"));
    }
    // u(k)/asymptote on a log grid
    let steps = 40;
    let top = (horizon as f64).ln();
    let mut last = 0;
    for i in 0..=steps {
        let k = (top * i as f64 / steps as f64).exp().round() as usize;
        if k > last && k <= horizon {
            let r = t.u()[k] / asymptotic_u(&t, k as u64);
            out.plot.push(PlotPoint { x: k as f64, y: r, ci_lo: r, ci_hi: r });
            last = k;
        }
    }
    Ok(())
}

fn sweep(config: &ExperimentConfig, runner: &Runner, out: &mut Outcome) -> Result<()> {
    check_open_rho(config)?;
    let q = tables(config, out)?.qf2();
    let n = config.n;
    let b = scaling_b(n as f64, config.alpha)?;
    let mut by_rho: Vec<(f64, Vec<EstimateRecord>)> = Vec::new();
    for &rho in &config.rho {
        let scheme = make_block_scheme(n, rho)?.require_mesoscopic()?;
        let cfg = series(config, n, Regime::Mesoscopic { rho }, TruncationPolicy::GeometricMean)?;
        let sim = PathSimulator::new(cfg)?;
        let fresh = || config.y.iter().map(|&y| BlockExceedance::new(scheme, b, y)).collect::<Vec<_>>();
        let mut acc = fresh();
        out.timed(format!("paths rho={rho:?}"), || {
            runner.run(
                0..config.reps,
                || sim.clone(),
                |s, i| {
                    let x = s.simulate_replication(i, false).x;
                    let mut e = fresh();
                    e.iter_mut().for_each(|a| a.observe(&x));
                    e
                },
                |_, e| acc.iter_mut().zip(&e).for_each(|(a, o)| a.merge(o)),
            );
            Ok(())
        })?;
        let theta = theta_rho(config.beta, rho, q)?;
        let rows = acc
            .iter()
            .map(|a| {
                let r = a.finish(config.alpha, Some(theta)).flag(&format!("d={},k={},m={}", scheme.d, scheme.k, cfg.m));
                if a.sum > 0 && a.sum < MIN_EXCEEDANCES {
                    r.flag("low-power")
                } else {
                    r
                }
            })
            .collect();
        by_rho.push((rho, rows));
    }
    for (rho, rows) in &by_rho {
        out.rows.extend(rows.iter().cloned());
        let base = &rows[0];
        for r in &rows[1..] {
            let (y0, y) = (config.y[0], r.y.unwrap());
            let ratio = r.estimate / base.estimate;
            let rel = |x: &EstimateRecord| x.clustered_se.unwrap_or(x.se) / x.estimate;
            let se = ratio.abs() * (rel(r).powi(2) + rel(base).powi(2)).sqrt();
            let mut row = EstimateRecord::new("y_scaling_ratio", ratio, se, r.count)
                .with_rho(*rho)
                .with_y(y)
                .flag(&format!("y0={y0:?}"));
            if se.is_finite() {
                row = row.with_target((y / y0).powf(-config.alpha), "(y/y0)^-alpha");
            } else {
                row = row.flag("degenerate-ci");
            }
            out.rows.push(row);
        }
    }
    let mut order: Vec<usize> = (0..by_rho.len()).collect();
    order.sort_by(|&a, &b| by_rho[a].0.total_cmp(&by_rho[b].0));
    for (j, &y) in config.y.iter().enumerate() {
        let decreasing = order.windows(2).all(|w| {
            let (lo, hi) = (&by_rho[w[0]].1[j], &by_rho[w[1]].1[j]);
            lo.estimate > hi.estimate && BlockExceedance::interval(lo).0 > BlockExceedance::interval(hi).1
        });
        let verdict = if order.len() < 2 {
            "single-rho"
        } else if decreasing {
            "decreasing"
        } else {
            "not-decreasing"
        };
        out.rows.push(
            EstimateRecord::new("sweep_ordering", f64::from(u8::from(decreasing && order.len() > 1)), 0.0, order.len() as u64)
                .with_y(y)
                .flag(verdict),
        );
    }
    for &i in &order {
        let r = &by_rho[i].1[0];
        let (lo, hi) = BlockExceedance::interval(r);
        out.plot.push(PlotPoint { x: by_rho[i].0, y: r.estimate, ci_lo: lo, ci_hi: hi });
    }
    Ok(())
}

struct MacroObs {
    counts: Vec<BlockCounts>,
    max: RunningMax,
    clusters: ClusterSummary,
    m: usize,
}

fn macro_batch(config: &ExperimentConfig, runner: &Runner, n: u64, out: &mut Outcome) -> Result<MacroObs> {
    let b = scaling_b(n as f64, config.alpha)?;
    let scheme = BlockScheme::macroscopic(n)?;
    let cfg = series(config, n, Regime::Macroscopic, TruncationPolicy::Core)?;
    let sim = PathSimulator::new(cfg)?;
    let fresh = || MacroObs {
        counts: config.y.iter().map(|&y| BlockCounts::new(scheme, b * y)).collect(),
        max: RunningMax::new(b, &config.x),
        clusters: ClusterSummary::default(),
        m: cfg.m,
    };
    let mut acc = fresh();
    out.timed(format!("paths n={n}"), || {
        runner.run(
            0..config.reps,
            || sim.clone(),
            |s, i| {
                let x = s.simulate_replication(i, false).x;
                let mut o = fresh();
                o.counts.iter_mut().for_each(|c| c.observe(&x));
                o.max.observe(&x);
                o.clusters.observe(&x, &scheme, b);
                o
            },
            |_, o| {
                acc.counts.iter_mut().zip(&o.counts).for_each(|(a, c)| a.merge(c));
                acc.max.merge(&o.max);
                acc.clusters.merge(&o.clusters);
            },
        );
        Ok(())
    })?;
    Ok(acc)
}

fn macroscopic(config: &ExperimentConfig, runner: &Runner, out: &mut Outcome) -> Result<()> {
    let q = tables(config, out)?.qf2();
    let theta = theta_rho(config.beta, 1.0, q)?;
    let n = config.n;
    let mut trend = if config.trend_n.is_empty() {
        vec![n / 100, n / 10].into_iter().filter(|&m| m >= 1000).collect()
    } else {
        config.trend_n.clone()
    };
    if !trend.contains(&n) {
        trend.push(n);
    }
    trend.sort_unstable();
    trend.dedup();

    let mut flatness = Vec::new();
    for &len in &trend {
        let obs = macro_batch(config, runner, len, out)?;
        let med = obs.clusters.median_flatness();
        let k = obs.clusters.flatness.len() as u64;
        let row = match med {
            Some(v) => EstimateRecord::new("cluster_flatness_trend", v, 0.0, k),
            None => EstimateRecord::new("cluster_flatness_trend", f64::NAN, 0.0, k).flag("low-power"),
        };
        flatness.push(row.flag(&format!("n={len},m={}", obs.m)));
        if len != n {
            continue;
        }
        for r in obs.max.finish(config.alpha, theta) {
            out.plot.push(PlotPoint::with_se(r.y.unwrap(), r.estimate, r.se));
            out.rows.push(r.flag(&format!("m={}", obs.m)));
        }
        for (c, &y) in obs.counts.iter().zip(&config.y) {
            out.rows.extend(c.finish(theta * y.powf(-config.alpha)).into_iter().map(|r| r.with_y(y)));
        }
        out.rows.extend(obs.clusters.finish(q));
    }
    let increasing = flatness.len() > 1 && flatness.windows(2).all(|w| w[1].estimate > w[0].estimate);
    let count = flatness.len() as u64;
    out.rows.extend(flatness);
    out.rows.push(
        EstimateRecord::new("flatness_increasing", f64::from(u8::from(increasing)), 0.0, count).flag(
            if count < 2 {
                "single-n"
            } else if increasing {
                "increasing"
            } else {
                "not-increasing"
            },
        ),
    );
    Ok(())
}

fn tailproc(config: &ExperimentConfig, runner: &Runner, out: &mut Outcome) -> Result<()> {
    let t = tables(config, out)?;
    let law = *t.law();
    let q = t.qf2();
    let horizon = t.horizon_for_residual(config.residual * q) as u64;
    let seed = config.seed;
    let reps = config.reps;
    let one: Vec<u64> = out.timed("one-sided", || {
        Ok(runner.map(0..reps, |i| sample_tail_process(&law, horizon, &mut stream(seed, i, "tail")).common.len() as u64))
    })?;
    let two: Vec<u64> = out.timed("two-sided", || {
        Ok(runner.map(0..reps, |i| {
            sample_two_sided_tail(&law, horizon, &mut stream(seed, i, "tail2")).total_count() as u64
        }))
    })?;
    out.rows.push(candidate_index_from_counts(&one, horizon, &t));
    out.rows.push(common_count_mean(&one, horizon, &t));
    out.rows.push(geometric_count_row(&one, q));
    out.rows.push(two_sided_count_row(&two, q).flag(&format!("L={horizon}")));
    for m in 1..=8u64 {
        let p = one.iter().filter(|&&c| c == m).count() as f64 / reps as f64;
        out.plot.push(PlotPoint::with_se(m as f64, p, binomial_se(p, reps)));
    }
    Ok(())
}

fn hitprob(config: &ExperimentConfig, runner: &Runner, out: &mut Outcome) -> Result<()> {
    check_open_rho(config)?;
    let t = tables(config, out)?;
    let n = config.n;
    if n as usize > t.horizon() {
        return param(format!("n = {n} exceeds the table horizon {}; raise --table-horizon", t.horizon()));
    }
    let law = *t.law();
    let reps = config.reps;
    let tasks = reps.div_ceil(HIT_CHUNK);
    for &rho in &config.rho {
        let d = make_block_scheme(n, rho)?.d;
        let label = format!("hitprob:{rho:?}");
        let parts = out.timed(format!("draws rho={rho:?}"), || {
            runner
                .map(0..tasks, |i| {
                    let size = HIT_CHUNK.min(reps - i * HIT_CHUNK);
                    hit_probability_check(&law, &t, n, d, size, &mut stream(config.seed, i, &label)).map(|h| (size, h))
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()
        })?;
        let pooled = |pick: fn(&doublestable_core::estimators::HitCheck) -> &EstimateRecord| {
            let hits: f64 = parts.iter().map(|(size, h)| (pick(h).estimate * *size as f64).round()).sum();
            let first = pick(&parts[0].1);
            let p = hits / reps as f64;
            EstimateRecord::new(first.name.clone(), p, binomial_se(p, reps), reps)
                .with_target(first.target.unwrap(), first.target_provenance.clone())
                .with_rho(rho)
                .flag(&format!("d={d}"))
        };
        let single = pooled(|h| &h.single);
        let pair = pooled(|h| &h.pair);
        let ratios = parts[0].1.records();
        out.plot.push(PlotPoint::with_se(d as f64, pair.estimate, pair.se));
        out.rows.push(single);
        out.rows.push(ratios[1].clone().with_rho(rho).flag(&format!("d={d}")));
        out.rows.push(pair);
        out.rows.push(ratios[3].clone().with_rho(rho).flag(&format!("d={d}")));
    }
    Ok(())
}

/// `1, d/8, d/4, d/2, 3d/4`, deduplicated.
pub fn lag_grid(d: u64) -> Vec<u64> {
    let mut lags: Vec<u64> = [1, d / 8, d / 4, d / 2, 3 * d / 4].into_iter().filter(|&l| l >= 1 && l < d).collect();
    lags.sort_unstable();
    lags.dedup();
    lags
}

fn anticlustering(config: &ExperimentConfig, runner: &Runner, out: &mut Outcome) -> Result<()> {
    check_open_rho(config)?;
    let n = config.n;
    let b = scaling_b(n as f64, config.alpha)?;
    for (ri, &rho) in config.rho.iter().enumerate() {
        let scheme = make_block_scheme(n, rho)?.require_mesoscopic()?;
        let d = scheme.d;
        let lags = lag_grid(d);
        if lags.is_empty() {
            return param(format!("block length {d} at rho = {rho} leaves no lag"));
        }
        let cfg = series(config, n, Regime::Mesoscopic { rho }, TruncationPolicy::GeometricMean)?;
        let sim = PathSimulator::new(cfg)?;
        let fresh = || config.y.iter().map(|&y| AcProfile::new(d, b, y, y, &lags)).collect::<Vec<_>>();
        let mut acc = fresh();
        out.timed(format!("paths rho={rho:?}"), || {
            runner.run(
                0..config.reps,
                || sim.clone(),
                |s, i| {
                    let x = s.simulate_replication(i, false).x;
                    let mut p = fresh();
                    p.iter_mut().for_each(|a| a.observe(&x));
                    p
                },
                |_, p| acc.iter_mut().zip(&p).for_each(|(a, o)| a.merge(o)),
            );
            Ok(())
        })?;
        for (yi, a) in acc.iter().enumerate() {
            for r in a.finish() {
                if ri == 0 && yi == 0 {
                    out.plot.push(PlotPoint::with_se(r.y.unwrap(), r.estimate, r.clustered_se.unwrap_or(r.se)));
                }
                out.rows.push(r.with_rho(rho).flag(&format!("m={}", cfg.m)));
            }
        }
    }
    Ok(())
}

fn sums(config: &ExperimentConfig, runner: &Runner, out: &mut Outcome) -> Result<()> {
    let q = tables(config, out)?.qf2();
    let theta = theta_rho(config.beta, 1.0, q)?;
    let n = config.n;
    let cfg = series(config, n, Regime::Macroscopic, TruncationPolicy::Core)?;
    let sim = PathSimulator::new(cfg)?;
    let mut simulated = Vec::with_capacity(config.reps as usize);
    out.timed("paths", || {
        let mut first_err = None;
        runner.run(
            0..config.reps,
            || sim.clone(),
            |s, i| partial_sum(&s.simulate_replication(i, false), config.alpha, n),
            |_, r| match r {
                Ok(v) => simulated.push(v),
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            },
        );
        first_err.map_or(Ok(()), Err)
    })?;
    let limit: Vec<f64> = out.timed("limit", || {
        Ok(runner.map(0..config.reps, |i| {
            sample_limit_sum(theta, config.alpha, q, LIMIT_ARRIVALS, &mut stream(config.seed, i, "limit"))
        }))
    })?;
    if simulated.iter().chain(&limit).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite partial sum".into()));
    }
    out.rows.extend(partial_sum_comparison(&simulated, &limit).into_iter().map(|r| r.flag(&format!("m={}", cfg.m))));
    // empirical quantiles with a DKW band on the level
    let mut sorted = simulated.clone();
    sorted.sort_by(f64::total_cmp);
    let eps = ((2.0f64 / 0.05).ln() / (2.0 * sorted.len() as f64)).sqrt();
    for i in 1..20 {
        let level = i as f64 / 20.0;
        let idx = ((level * sorted.len() as f64) as usize).min(sorted.len() - 1);
        out.plot.push(PlotPoint { x: sorted[idx], y: level, ci_lo: (level - eps).max(0.0), ci_hi: (level + eps).min(1.0) });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(command: Command) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(command);
        c.n = 2000;
        c.reps = 40;
        c.table_horizon = 5000;
        c.parallelism = 2;
        c
    }

    #[test]
    fn lag_grid_shapes() {
        assert_eq!(lag_grid(64), vec![1, 8, 16, 32, 48]);
        assert_eq!(lag_grid(3), vec![1, 2]);
        assert!(lag_grid(1).is_empty());
    }

    #[test]
    fn constants_rows() {
        let c = small(Command::Constants);
        let mut c0 = c.clone();
        c0.rho = vec![0.0, 1.0];
        let o = run(&c0).unwrap();
        let q = o.rows.iter().find(|r| r.name == "qF2").unwrap().estimate;
        let thetas: Vec<f64> = o.rows.iter().filter(|r| r.name == "theta_rho").map(|r| r.estimate).collect();
        assert_eq!(thetas[0], q);
        assert!((thetas[1] - 0.4 * q).abs() < 1e-15);
        assert!(o.rows.iter().all(|r| r.seed == c.seed));
        let mut big_n = c;
        big_n.n = 10_000;
        assert!(matches!(run(&big_n), Err(Error::Parameter(_))));
    }

    #[test]
    fn sweep_rejects_bad_rho() {
        let mut c = small(Command::Sweep);
        c.rho.clear();
        assert!(matches!(run(&c), Err(Error::Parameter(_))));
        c.rho = vec![0.5, 1.0];
        assert!(matches!(run(&c), Err(Error::Parameter(_))));
    }

    #[test]
    fn macro_row_plumbing() {
        let mut c = small(Command::Macro);
        c.trend_n = vec![1000];
        let o = run(&c).unwrap();
        assert_eq!(o.rows.iter().filter(|r| r.name == "running_max_cdf").count(), 4);
        assert!(o.rows.iter().any(|r| r.name == "cluster_size_gof_p"));
        assert_eq!(o.rows.iter().filter(|r| r.name == "cluster_flatness_trend").count(), 2);
        assert!(o.rows.iter().any(|r| r.name == "flatness_increasing"));
        assert_eq!(o.plot.len(), 4);
    }
}
