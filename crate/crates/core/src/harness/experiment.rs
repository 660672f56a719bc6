use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{omega_csv, ExperimentConfig, GridPoint};
use super::stats::{gain, Summary};
use crate::analytic::{lambda_arq, lambda_ear, lambda_ncarq, ChannelParams};
use crate::error::{Error, Result};
use crate::schemes::{run_trial, Scheme, TrialConfig, TrialResult};

/// Column order of the results CSV.
pub const CSV_HEADER: &str = "scheme,N,ber,omega_csv,K,trials,seed,total_retx_mean,total_retx_ci95,lambda_empirical,lambda_analytic,gain_vs_arq,gain_vs_ncarq,unwanted_count,overhead_a_bytes,overhead_b_bytes";

/// Trials of one scheme at one grid point, in trial order.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeRun {
    pub scheme: Scheme,
    pub trials: Vec<TrialResult>,
}

impl SchemeRun {
    pub fn total_retransmissions(&self) -> u64 {
        self.trials.iter().map(|t| t.retransmissions).sum()
    }

    fn summary(&self, f: impl Fn(&TrialResult) -> f64) -> Summary {
        Summary::of(&self.trials.iter().map(f).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub point: GridPoint,
    pub runs: Vec<SchemeRun>,
}

impl PointResult {
    pub fn run(&self, scheme: Scheme) -> Option<&SchemeRun> {
        self.runs.iter().find(|r| r.scheme == scheme)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub points: Vec<PointResult>,
}

/// One line of the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CsvRow {
    pub scheme: String,
    #[serde(rename = "N")]
    pub receivers: usize,
    pub ber: Option<f64>,
    pub omega_csv: String,
    #[serde(rename = "K")]
    pub packets: usize,
    pub trials: usize,
    pub seed: u64,
    pub total_retx_mean: f64,
    pub total_retx_ci95: f64,
    pub lambda_empirical: f64,
    pub lambda_analytic: Option<f64>,
    /// Retransmissions of the baseline over those of this row's scheme.
    pub gain_vs_arq: Option<f64>,
    pub gain_vs_ncarq: Option<f64>,
    /// Mean per trial.
    pub unwanted_count: f64,
    /// Mean header bytes per retransmission.
    pub overhead_a_bytes: f64,
    pub overhead_b_bytes: f64,
}

/// EAR against one baseline at one grid point, from per-trial ratios.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GainRow {
    pub baseline: Scheme,
    pub scheme: Scheme,
    #[serde(rename = "N")]
    pub receivers: usize,
    pub ber: Option<f64>,
    pub omega_csv: String,
    pub gain_mean: f64,
    pub gain_ci95: f64,
    pub gain_analytic: Option<f64>,
    pub trials: usize,
}

impl GainRow {
    pub fn lower(&self) -> f64 {
        self.gain_mean - self.gain_ci95
    }
}

/// Closed-form retransmissions per packet, if one applies.
pub fn analytic_lambda(scheme: Scheme, omega: &ChannelParams) -> Option<f64> {
    let (sorted, _) = omega.sorted();
    match scheme {
        Scheme::Arq => Some(lambda_arq(&sorted)),
        Scheme::NcArq => lambda_ncarq(&sorted).ok(),
        Scheme::Ear => lambda_ear(&sorted).ok(),
    }
}

/// Runs every (grid point, scheme, trial) job.
///
/// Trial `t` uses stream `(seed, t)` at every grid point and for every
/// scheme, so schemes see the same initial losses. Results do not depend on
/// the number of worker threads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let grid = config.grid()?;
    let jobs: Vec<(usize, Scheme, usize)> = (0..grid.len())
        .flat_map(|p| {
            config
                .schemes
                .iter()
                .flat_map(move |&s| (0..config.trials).map(move |t| (p, s, t)))
        })
        .collect();
    let results: Vec<Result<TrialResult>> = jobs
        .par_iter()
        .map(|&(p, scheme, t)| {
            let mut tc =
                TrialConfig::new(scheme, grid[p].omega.clone(), config.packets, config.seed);
            tc.trial = t as u64;
            tc.round_cap = config.round_cap;
            run_trial(&tc)
                .map(|mut r| {
                    r.history = Vec::new();
                    r
                })
                .map_err(|e| Error::Grid {
                    context: format!("{} scheme={scheme} trial={t}", grid[p].label()),
                    source: Box::new(e),
                })
        })
        .collect();

    let mut results = results.into_iter();
    let mut points = Vec::with_capacity(grid.len());
    for point in grid {
        let mut runs = Vec::with_capacity(config.schemes.len());
        for &scheme in &config.schemes {
            let trials = results
                .by_ref()
                .take(config.trials)
                .collect::<Result<Vec<_>>>()?;
            runs.push(SchemeRun { scheme, trials });
        }
        points.push(PointResult { point, runs });
    }
    Ok(ExperimentResult {
        config: config.clone(),
        points,
    })
}

impl ExperimentResult {
    pub fn rows(&self) -> Vec<CsvRow> {
        let cfg = &self.config;
        let mut rows = Vec::new();
        for p in &self.points {
            let n = p.point.receivers();
            let total_of = |s: Scheme| p.run(s).map(SchemeRun::total_retransmissions);
            for run in &p.runs {
                let own = run.total_retransmissions();
                let retx = run.summary(|t| t.retransmissions as f64);
                rows.push(CsvRow {
                    scheme: run.scheme.to_string(),
                    receivers: n,
                    ber: p.point.ber,
                    omega_csv: omega_csv(&p.point.omega),
                    packets: cfg.packets,
                    trials: run.trials.len(),
                    seed: cfg.seed,
                    total_retx_mean: retx.mean,
                    total_retx_ci95: retx.ci95,
                    lambda_empirical: retx.mean / (cfg.packets * n) as f64,
                    lambda_analytic: cfg
                        .compare_analytic
                        .then(|| analytic_lambda(run.scheme, &p.point.omega))
                        .flatten(),
                    gain_vs_arq: total_of(Scheme::Arq).and_then(|b| gain(b, own)),
                    gain_vs_ncarq: total_of(Scheme::NcArq).and_then(|b| gain(b, own)),
                    unwanted_count: run.summary(|t| t.unwanted_retransmissions as f64).mean,
                    overhead_a_bytes: run.summary(TrialResult::mean_overhead_a).mean,
                    overhead_b_bytes: run.summary(TrialResult::mean_overhead_b).mean,
                });
            }
        }
        rows
    }

    /// EAR against each other scheme that ran, trial by trial.
    pub fn gain_rows(&self) -> Vec<GainRow> {
        let mut rows = Vec::new();
        for p in &self.points {
            let Some(ear) = p.run(Scheme::Ear) else {
                continue;
            };
            for base in p.runs.iter().filter(|r| r.scheme != Scheme::Ear) {
                let gains: Vec<f64> = base
                    .trials
                    .iter()
                    .zip(&ear.trials)
                    .filter_map(|(b, e)| gain(b.retransmissions, e.retransmissions))
                    .collect();
                let s = Summary::of(&gains);
                let analytic = self.config.compare_analytic.then(|| {
                    let b = analytic_lambda(base.scheme, &p.point.omega)?;
                    let e = analytic_lambda(Scheme::Ear, &p.point.omega)?;
                    (e > 0.0).then(|| b / e).or((b == 0.0).then_some(1.0))
                });
                rows.push(GainRow {
                    baseline: base.scheme,
                    scheme: Scheme::Ear,
                    receivers: p.point.receivers(),
                    ber: p.point.ber,
                    omega_csv: omega_csv(&p.point.omega),
                    gain_mean: s.mean,
                    gain_ci95: s.ci95,
                    gain_analytic: analytic.flatten(),
                    trials: s.n,
                });
            }
        }
        rows
    }

    /// Every trial that broke a safety invariant, with its grid label.
    pub fn unclean(&self) -> Vec<(String, &TrialResult)> {
        self.points
            .iter()
            .flat_map(|p| {
                p.runs
                    .iter()
                    .flat_map(|r| &r.trials)
                    .filter(|t| !t.is_clean())
                    .map(|t| (p.point.label(), t))
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &self.rows())
    }

    pub fn write_gains_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &self.gain_rows())
    }
}

fn write_rows<W: Write, R: Serialize>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{LossPoint, Sweep};

    fn small(schemes: Vec<Scheme>, loss: Vec<LossPoint>) -> ExperimentConfig {
        ExperimentConfig {
            schemes,
            packets: 300,
            sweep: Sweep::Loss(loss),
            trials: 3,
            seed: 5,
            compare_analytic: true,
            ..ExperimentConfig::default()
        }
    }

    fn csv_text(r: &ExperimentResult) -> String {
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn header_is_stable() {
        let r = run_experiment(&small(
            Scheme::ALL.to_vec(),
            vec![LossPoint::Symmetric(0.2)],
        ))
        .unwrap();
        let text = csv_text(&r);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn rows_follow_grid_and_scheme_order() {
        let cfg = small(
            vec![Scheme::Ear, Scheme::Arq],
            vec![LossPoint::Symmetric(0.1), LossPoint::Symmetric(0.4)],
        );
        let rows = run_experiment(&cfg).unwrap().rows();
        let keys: Vec<(String, String)> = rows
            .iter()
            .map(|r| (r.scheme.clone(), r.omega_csv.clone()))
            .collect();
        assert_eq!(
            keys,
            vec![
                ("ear".into(), "0.1;0.1;0.1".into()),
                ("arq".into(), "0.1;0.1;0.1".into()),
                ("ear".into(), "0.4;0.4;0.4".into()),
                ("arq".into(), "0.4;0.4;0.4".into()),
            ]
        );
        assert!(rows.iter().all(|r| r.gain_vs_ncarq.is_none()));
        assert!(rows[0].gain_vs_arq.unwrap() >= 1.0);
        assert_eq!(rows[1].gain_vs_arq, Some(1.0));
    }

    #[test]
    fn lossless_grid_point() {
        let r = run_experiment(&small(
            Scheme::ALL.to_vec(),
            vec![LossPoint::Symmetric(0.0)],
        ))
        .unwrap();
        for row in r.rows() {
            assert_eq!(row.total_retx_mean, 0.0);
            assert_eq!(row.gain_vs_arq, Some(1.0));
            assert_eq!(row.lambda_analytic, Some(0.0));
        }
        for g in r.gain_rows() {
            assert_eq!((g.gain_mean, g.gain_analytic), (1.0, Some(1.0)));
        }
    }

    #[test]
    fn analytic_columns_optional() {
        let mut cfg = small(vec![Scheme::Ear], vec![LossPoint::Symmetric(0.3)]);
        cfg.compare_analytic = false;
        let r = run_experiment(&cfg).unwrap();
        assert!(r.rows()[0].lambda_analytic.is_none());
        assert!(r.gain_rows().is_empty());
    }

    #[test]
    fn analytic_prediction_for_two_receivers() {
        let mut cfg = small(
            vec![Scheme::NcArq, Scheme::Ear],
            vec![LossPoint::Symmetric(0.5)],
        );
        cfg.receivers = Some(vec![2]);
        let g = &run_experiment(&cfg).unwrap().gain_rows()[0];
        assert_eq!(g.baseline, Scheme::NcArq);
        assert!((g.gain_analytic.unwrap() - 1.125).abs() < 1e-12);
        assert_eq!(g.trials, 3);
    }

    #[test]
    fn round_cap_names_grid_point() {
        let mut cfg = small(vec![Scheme::Arq], vec![LossPoint::Symmetric(0.9)]);
        cfg.round_cap = 1;
        let err = run_experiment(&cfg).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("N=3 omega=0.9;0.9;0.9") && msg.contains("scheme=arq"),
            "{msg}"
        );
    }

    #[test]
    fn deterministic_bytes() {
        let cfg = small(
            Scheme::ALL.to_vec(),
            vec![LossPoint::PerReceiver(vec![0.1, 0.3, 0.5])],
        );
        let a = csv_text(&run_experiment(&cfg).unwrap());
        let b = csv_text(&run_experiment(&cfg).unwrap());
        assert_eq!(a, b);
    }
}
