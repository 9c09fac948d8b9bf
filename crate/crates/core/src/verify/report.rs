use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// One Monte-Carlo trial of a bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub observed: f64,
    pub bound: f64,
    /// The bound's hypotheses held, so the trial counts.
    pub hypothesis: bool,
    pub violated: bool,
}

/// Tally of elementary events for frequency-type bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventTally {
    pub events: u64,
    pub violations: u64,
    /// Largest per-event failure probability the theory allows.
    pub reference: f64,
}

impl EventTally {
    pub fn rate(&self) -> f64 {
        if self.events == 0 {
            0.0
        } else {
            self.violations as f64 / self.events as f64
        }
    }

    pub fn wilson(&self) -> (f64, f64) {
        wilson_interval(self.violations, self.events)
    }
}

/// What counts as passing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Allowance {
    /// At most this many violating trials.
    Violations(usize),
    /// Event violation frequency at most this rate.
    Rate(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub rows: Vec<TrialRow>,
    pub allowance: Allowance,
    pub events: Option<EventTally>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, rows: Vec<TrialRow>) -> Self {
        Self {
            name: name.into(),
            rows,
            allowance: Allowance::Violations(0),
            events: None,
        }
    }

    /// Trials whose hypotheses held.
    pub fn trials(&self) -> usize {
        self.rows.iter().filter(|r| r.hypothesis).count()
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.hypothesis && r.violated).count()
    }

    pub fn max_observed(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.hypothesis)
            .map(|r| r.observed)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `observed / bound` over counted trials.
    pub fn max_ratio(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.hypothesis && r.bound != 0.0)
            .map(|r| r.observed / r.bound)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn passes(&self) -> bool {
        match self.allowance {
            Allowance::Violations(k) => self.violations() <= k,
            Allowance::Rate(r) => self.events.is_some_and(|e| e.rate() <= r),
        }
    }

    pub const CSV_HEADER: &'static str = "bound,trial,seed,observed,bound_value,hypothesis,violated";

    /// One row per trial, then a summary row whose `trial` field reads
    /// `summary`, `observed` is the maximum, `hypothesis` the number of
    /// counted trials and `violated` the violation count.
    pub fn to_csv(&self, header: bool) -> String {
        let mut out = String::new();
        if header {
            out.push_str(Self::CSV_HEADER);
            out.push('\n');
        }
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.name, r.trial, r.seed, r.observed, r.bound, r.hypothesis, r.violated
            );
        }
        let max_bound = self.rows.iter().map(|r| r.bound).fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            out,
            "{},summary,,{},{},{},{}",
            self.name,
            self.max_observed(),
            max_bound,
            self.trials(),
            self.violations()
        );
        out
    }

    pub fn summary_line(&self) -> String {
        let mut s = format!(
            "{}: {}/{} trials violate, max observed/bound {:.4}",
            self.name,
            self.violations(),
            self.trials(),
            self.max_ratio()
        );
        if let Some(e) = self.events {
            let (lo, hi) = e.wilson();
            let _ = write!(
                s,
                "; event rate {:.5} (95% CI {:.5}-{:.5}) over {} events, theory {:.3e}",
                e.rate(),
                lo,
                hi,
                e.events,
                e.reference
            );
        }
        s
    }
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = n as f64;
    let phat = k as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = Z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(trial: usize, observed: f64, bound: f64, hypothesis: bool) -> TrialRow {
        TrialRow {
            trial,
            seed: trial as u64,
            observed,
            bound,
            hypothesis,
            violated: observed > bound,
        }
    }

    #[test]
    fn counts_only_hypothesis_trials() {
        let r = BoundReport::new("x", vec![row(0, 1.0, 2.0, true), row(1, 3.0, 2.0, false), row(2, 2.5, 2.0, true)]);
        assert_eq!(r.trials(), 2);
        assert_eq!(r.violations(), 1);
        assert!((r.max_ratio() - 1.25).abs() < 1e-12);
        assert!(!r.passes());
    }

    #[test]
    fn csv_layout() {
        let r = BoundReport::new("spectral-norm", vec![row(0, 1.5, 2.0, true)]);
        assert_eq!(
            r.to_csv(true),
            "bound,trial,seed,observed,bound_value,hypothesis,violated\n\
             spectral-norm,0,0,1.5,2,true,false\n\
             spectral-norm,summary,,1.5,2,1,0\n"
        );
    }

    #[test]
    fn wilson_reference_values() {
        // 10 of 100: (0.0552, 0.1744)
        let (lo, hi) = wilson_interval(10, 100);
        assert!((lo - 0.05523).abs() < 1e-4, "{lo}");
        assert!((hi - 0.17437).abs() < 1e-4, "{hi}");
        let (lo, hi) = wilson_interval(0, 50);
        assert!(lo.abs() < 1e-15);
        assert!((hi - 0.07135).abs() < 1e-4, "{hi}");
    }
}
