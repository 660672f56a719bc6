/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.96;

/// Sample mean with a normal-approximation 95% half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for fewer than two values.
    pub sd: f64,
    pub ci95: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary {
                n,
                mean: f64::NAN,
                sd: f64::NAN,
                ci95: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Summary {
            n,
            mean,
            sd,
            ci95: Z95 * sd / (n as f64).sqrt(),
        }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci95
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci95
    }
}

/// Baseline retransmissions over EAR retransmissions. Two lossless runs
/// count as a tie; `None` when only the baseline retransmitted.
pub fn gain(baseline: u64, ear: u64) -> Option<f64> {
    match (baseline, ear) {
        (0, 0) => Some(1.0),
        (_, 0) => None,
        (b, e) => Some(b as f64 / e as f64),
    }
}
