use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analytic::ChannelParams;
use crate::channel::{ber_to_per, FecModel};
use crate::error::{Error, Result};
use crate::schemes::{Scheme, DEFAULT_ROUND_CAP};

/// Environment variable overriding the default seed.
pub const SEED_ENV: &str = "EARSIM_SEED";
pub const DEFAULT_SEED: u64 = 1;
pub const DESK_PACKETS: usize = 10_000;
pub const PAPER_PACKETS: usize = 100_000;
pub const DEFAULT_TRIALS: usize = 30;
pub const DEFAULT_RECEIVERS: usize = 3;
/// Largest loss rate a trial accepts; heavier loss may never drain.
pub const MAX_LOSS: f64 = 0.99;

/// A loss-rate grid point: one rate for every receiver, or one per receiver.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum LossPoint {
    Symmetric(f64),
    PerReceiver(Vec<f64>),
}

impl LossPoint {
    /// Parses `0.3` or a colon-separated vector such as `0.1:0.2:0.3`.
    pub fn parse(s: &str) -> Result<Self> {
        let values = s
            .split(':')
            .map(|v| parse_f64(v, "loss rate"))
            .collect::<Result<Vec<_>>>()?;
        Ok(match values.as_slice() {
            [w] => LossPoint::Symmetric(*w),
            _ => LossPoint::PerReceiver(values),
        })
    }
}

/// BER values `start, start + step, …` up to and including `stop`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BerSweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl BerSweep {
    /// Parses `start:stop:step`; a single value is a one-point sweep.
    pub fn parse(s: &str) -> Result<Self> {
        let v = s
            .split(':')
            .map(|v| parse_f64(v, "bit error rate"))
            .collect::<Result<Vec<_>>>()?;
        match v.as_slice() {
            [b] => Ok(BerSweep {
                start: *b,
                stop: *b,
                step: 1.0,
            }),
            [start, stop, step] => Ok(BerSweep {
                start: *start,
                stop: *stop,
                step: *step,
            }),
            _ => Err(Error::Config(format!(
                "BER sweep `{s}` is not start:stop:step"
            ))),
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&self.start) || !(0.0..=1.0).contains(&self.stop) {
            return Err(Error::InvalidBer(if (0.0..=1.0).contains(&self.start) {
                self.stop
            } else {
                self.start
            }));
        }
        if self.stop < self.start
            || self.step.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        {
            return Err(Error::Config(
                "BER sweep needs start <= stop and a positive step".into(),
            ));
        }
        // Multiply rather than accumulate so points stay exact-ish, and allow
        // rounding slack on the last one.
        let slack = self.step * 1e-9;
        Ok((0..)
            .map(|i| self.start + i as f64 * self.step)
            .take_while(|&b| b <= self.stop + slack)
            .map(|b| b.min(self.stop))
            .collect())
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{s}` is not a valid {what}")))
}

/// Grid axis over channel conditions.
#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    Loss(Vec<LossPoint>),
    Ber(BerSweep),
}

/// Keys of an experiment file. Every key is optional and CLI flags win.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schemes: Option<Vec<String>>,
    pub receivers: Option<Vec<usize>>,
    pub packets: Option<usize>,
    pub loss: Option<Vec<LossPoint>>,
    /// `[start, stop, step]`.
    pub ber_sweep: Option<[f64; 3]>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub round_cap: Option<u64>,
    pub out: Option<PathBuf>,
    pub compare_analytic: Option<bool>,
    pub paper_scale: Option<bool>,
    /// Retransmission slot in seconds; recorded, never used.
    pub delta_t: Option<f64>,
}

impl ConfigFile {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|source| Error::ParseConfig {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    /// Overlays `top` on `self`: any key set in `top` wins.
    pub fn merge(self, top: ConfigFile) -> ConfigFile {
        ConfigFile {
            schemes: top.schemes.or(self.schemes),
            receivers: top.receivers.or(self.receivers),
            packets: top.packets.or(self.packets),
            loss: top.loss.or(self.loss),
            ber_sweep: top.ber_sweep.or(self.ber_sweep),
            trials: top.trials.or(self.trials),
            seed: top.seed.or(self.seed),
            round_cap: top.round_cap.or(self.round_cap),
            out: top.out.or(self.out),
            compare_analytic: top.compare_analytic.or(self.compare_analytic),
            paper_scale: top.paper_scale.or(self.paper_scale),
            delta_t: top.delta_t.or(self.delta_t),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub schemes: Vec<Scheme>,
    /// Receiver counts for symmetric grid points; `None` uses the default.
    pub receivers: Option<Vec<usize>>,
    pub packets: usize,
    pub sweep: Sweep,
    pub fec: FecModel,
    pub trials: usize,
    pub seed: u64,
    pub round_cap: u64,
    pub out: Option<PathBuf>,
    pub compare_analytic: bool,
    pub delta_t: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schemes: Scheme::ALL.to_vec(),
            receivers: None,
            packets: DESK_PACKETS,
            sweep: Sweep::Loss(vec![LossPoint::Symmetric(0.3)]),
            fec: FecModel::default(),
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            round_cap: DEFAULT_ROUND_CAP,
            out: None,
            compare_analytic: false,
            delta_t: None,
        }
    }
}

/// One point of the experiment grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub ber: Option<f64>,
    pub omega: ChannelParams,
}

impl GridPoint {
    pub fn receivers(&self) -> usize {
        self.omega.len()
    }

    /// `N=3 ber=0.001` or `N=3 omega=0.1;0.2;0.3`, for diagnostics.
    pub fn label(&self) -> String {
        match self.ber {
            Some(b) => format!("N={} ber={b}", self.receivers()),
            None => format!("N={} omega={}", self.receivers(), omega_csv(&self.omega)),
        }
    }
}

/// Loss rates joined with `;` so they fit in one CSV field.
pub fn omega_csv(omega: &ChannelParams) -> String {
    omega
        .omegas()
        .iter()
        .map(|w| w.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

impl ExperimentConfig {
    /// Resolves file keys over the defaults. `env_seed` replaces the
    /// default seed when the file sets none.
    pub fn resolve(file: ConfigFile, env_seed: Option<&str>) -> Result<Self> {
        let d = ExperimentConfig::default();
        let schemes = match file.schemes {
            Some(list) => list
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<Scheme>>>()?,
            None => d.schemes,
        };
        let seed = match (file.seed, env_seed) {
            (Some(s), _) => s,
            (None, Some(e)) => e
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}=`{e}` is not a u64")))?,
            (None, None) => d.seed,
        };
        let sweep = match (file.loss, file.ber_sweep) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either loss rates or a BER sweep, not both".into(),
                ))
            }
            (Some(loss), None) => Sweep::Loss(loss),
            (None, Some([start, stop, step])) => Sweep::Ber(BerSweep { start, stop, step }),
            (None, None) => d.sweep,
        };
        let packets = file
            .packets
            .unwrap_or(if file.paper_scale.unwrap_or(false) {
                PAPER_PACKETS
            } else {
                d.packets
            });
        let cfg = ExperimentConfig {
            schemes,
            receivers: file.receivers,
            packets,
            sweep,
            fec: d.fec,
            trials: file.trials.unwrap_or(d.trials),
            seed,
            round_cap: file.round_cap.unwrap_or(d.round_cap),
            out: file.out,
            compare_analytic: file.compare_analytic.unwrap_or(false),
            delta_t: file.delta_t,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::Config("no scheme selected".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("at least one trial is required".into()));
        }
        if self.packets == 0 {
            return Err(Error::Config(
                "at least one packet per receiver is required".into(),
            ));
        }
        if self.round_cap == 0 {
            return Err(Error::Config("round cap must be positive".into()));
        }
        if let Some(r) = &self.receivers {
            if r.is_empty() {
                return Err(Error::Config("receiver list is empty".into()));
            }
            if let Some(&n) = r.iter().find(|&&n| n < 2) {
                return Err(Error::TooFewReceivers(n));
            }
        }
        self.fec.validate()?;
        self.grid().map(|_| ())
    }

    /// Grid points in output order: receiver count, then channel.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let counts = self
            .receivers
            .clone()
            .unwrap_or_else(|| vec![DEFAULT_RECEIVERS]);
        let mut points = Vec::new();
        match &self.sweep {
            Sweep::Ber(sweep) => {
                let bers = sweep.points()?;
                for &n in &counts {
                    for &ber in &bers {
                        let w = ber_to_per(ber, &self.fec)?;
                        points.push(GridPoint {
                            ber: Some(ber),
                            omega: checked(vec![w; n])?,
                        });
                    }
                }
            }
            Sweep::Loss(loss) => {
                if loss.is_empty() {
                    return Err(Error::Config("loss grid is empty".into()));
                }
                for &n in &counts {
                    for p in loss {
                        if let LossPoint::Symmetric(w) = p {
                            points.push(GridPoint {
                                ber: None,
                                omega: checked(vec![*w; n])?,
                            });
                        }
                    }
                }
                // Explicit vectors fix their own receiver count.
                for p in loss {
                    if let LossPoint::PerReceiver(v) = p {
                        if self
                            .receivers
                            .as_ref()
                            .is_some_and(|r| !r.contains(&v.len()))
                        {
                            return Err(Error::Config(format!(
                                "loss vector of {} receivers matches no receiver count",
                                v.len()
                            )));
                        }
                        points.push(GridPoint {
                            ber: None,
                            omega: checked(v.clone())?,
                        });
                    }
                }
            }
        }
        Ok(points)
    }
}

fn checked(omegas: Vec<f64>) -> Result<ChannelParams> {
    if let Some(&w) = omegas.iter().find(|&&w| w > MAX_LOSS) {
        return Err(Error::Config(format!(
            "loss rate {w} above {MAX_LOSS} may never drain"
        )));
    }
    ChannelParams::new(omegas)
}
