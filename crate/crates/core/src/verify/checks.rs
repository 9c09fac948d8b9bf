use super::report::{Allowance, BoundReport, EventTally, TrialRow};
use super::VerifyError;
use crate::model::{
    sample_general, sample_graph, DistributionSpec, Instance, InstanceKind, ModelParams, PartitionSpec,
    SampleOptions,
};
use crate::recovery::BERNOULLI_NOISE_CONSTANT;
use crate::spectral::{
    eigenvalues, frobenius_norm, rank_projector, spectral_norm, GapPolicy, SymMatrix, SymmetricEigen,
};

/// Which random model trials are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    Bernoulli,
    General {
        d1: DistributionSpec,
        d2: DistributionSpec,
        d3: DistributionSpec,
    },
}

/// Trials `t = 0..trials` use seed `seed + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPlan {
    pub spec: PartitionSpec,
    pub params: ModelParams,
    pub ensemble: Ensemble,
    /// `nu` in the norm bound `||B - B-hat||_2 <= nu sqrt(n)`.
    pub noise_constant: f64,
    pub trials: usize,
    pub seed: u64,
}

impl TrialPlan {
    pub fn bernoulli(spec: PartitionSpec, params: ModelParams, trials: usize, seed: u64) -> Self {
        Self {
            spec,
            params,
            ensemble: Ensemble::Bernoulli,
            noise_constant: BERNOULLI_NOISE_CONSTANT,
            trials,
            seed,
        }
    }

    /// `p` and `q` are taken from the means of `d1` and `d2`;
    /// `nu = 2 sigma + 6 kappa` over the three laws.
    pub fn general(
        spec: PartitionSpec,
        epsilon: f64,
        c: f64,
        d1: DistributionSpec,
        d2: DistributionSpec,
        d3: DistributionSpec,
        trials: usize,
        seed: u64,
    ) -> Self {
        let sigma = [d1, d2, d3].iter().map(|d| d.sigma()).fold(0.0, f64::max);
        let kappa = [d1, d2, d3].iter().map(|d| d.kappa()).fold(0.0, f64::max);
        Self {
            spec,
            params: ModelParams::new(d1.mean(), d2.mean(), epsilon, c),
            ensemble: Ensemble::General { d1, d2, d3 },
            noise_constant: 2.0 * sigma + 6.0 * kappa,
            trials,
            seed,
        }
    }

    pub fn with_noise_constant(mut self, nu: f64) -> Self {
        self.noise_constant = nu;
        self
    }

    pub fn trial_seed(&self, t: usize) -> u64 {
        self.seed.wrapping_add(t as u64)
    }

    pub fn sample(&self, t: usize) -> Result<Instance, VerifyError> {
        let seed = self.trial_seed(t);
        let inst = match &self.ensemble {
            Ensemble::Bernoulli => sample_graph(&self.spec, &self.params, seed, SampleOptions::default())?,
            Ensemble::General { d1, d2, d3 } => {
                sample_general(&self.spec, d1, d2, d3, seed, SampleOptions::default())?
            }
        };
        Ok(inst)
    }

    fn norm_bound(&self) -> f64 {
        self.noise_constant * (self.spec.n() as f64).sqrt()
    }

    fn run<T: Send>(
        &self,
        f: impl Fn(usize, Instance) -> Result<T, VerifyError> + Sync,
    ) -> Result<Vec<T>, VerifyError> {
        if self.trials == 0 {
            return Err(VerifyError::NoTrials);
        }
        let one = |t: usize| f(t, self.sample(t)?);
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..self.trials).into_par_iter().map(one).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..self.trials).map(one).collect()
        }
    }

    fn row(&self, t: usize, observed: f64, bound: f64, hypothesis: bool, violated: bool) -> TrialRow {
        TrialRow {
            trial: t,
            seed: self.trial_seed(t),
            observed,
            bound,
            hypothesis,
            violated,
        }
    }
}

/// Descending spectrum of `B`: `(p - q) s_i` for each cluster, then zeros.
pub fn expected_spectrum(spec: &PartitionSpec, p: f64, q: f64) -> Vec<f64> {
    let mut values: Vec<f64> = spec.sizes().iter().map(|&s| (p - q) * s as f64).collect();
    values.resize(spec.n(), 0.0);
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// `P_r(B) = sum_{i < r} 1_{C_i} 1_{C_i}^T / s_i` for a vertex labelling.
pub fn analytic_projector(labels: &[usize], sizes: &[usize], r: usize) -> SymMatrix {
    SymMatrix::from_fn(labels.len(), |u, v| {
        let l = labels[u];
        if l == labels[v] && l < r {
            1.0 / sizes[l] as f64
        } else {
            0.0
        }
    })
}

/// Slack for comparisons between computed quantities that are equal or
/// ordered in exact arithmetic.
fn exceeds(observed: f64, bound: f64, scale: f64) -> bool {
    observed > bound + 1e-9 * (1.0 + scale.abs())
}

/// `||B - B-hat||_2 <= nu sqrt(n)` per trial.
pub fn check_spectral_bound(plan: &TrialPlan) -> Result<BoundReport, VerifyError> {
    let bound = plan.norm_bound();
    let rows = plan.run(|t, inst| {
        let (_, b) = inst.expected();
        let norm = spectral_norm(&inst.b_hat().sub(&b))?;
        Ok(plan.row(t, norm, bound, true, norm > bound))
    })?;
    Ok(BoundReport::new("spectral-norm", rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeylSeparation {
    /// `||B - B-hat||_2` against `nu sqrt(n)`.
    pub spectral: BoundReport,
    /// `max_i |lambda_i(B) - lambda_i(B-hat)|` against `||B - B-hat||_2`.
    pub weyl: BoundReport,
    /// Supercluster eigenvalue sandwich, counted on trials where the norm
    /// bound held. `observed` is the worst overshoot (positive = violated).
    pub separation: BoundReport,
}

/// Worst overshoot of the per-supercluster eigenvalue windows
/// `[(p-q) min - nu sqrt n, (p-q) max + nu sqrt n]`, and `|lambda| <= nu sqrt n`
/// beyond the first `k` eigenvalues.
fn sandwich_overshoot(eigs: &[f64], spec: &PartitionSpec, d: f64, slack: f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    let mut i = 0;
    for group in spec.supercluster_sizes() {
        let lo = d * *group.last().unwrap() as f64 - slack;
        let hi = d * group[0] as f64 + slack;
        for _ in group {
            worst = worst.max(lo - eigs[i]).max(eigs[i] - hi);
            i += 1;
        }
    }
    for &x in &eigs[i..] {
        worst = worst.max(x.abs() - slack);
    }
    worst
}

pub fn check_weyl_and_separation(plan: &TrialPlan) -> Result<WeylSeparation, VerifyError> {
    let bound = plan.norm_bound();
    let (p, q) = (plan.params.p, plan.params.q);
    let expected = expected_spectrum(&plan.spec, p, q);
    let scale = expected[0];
    let triples = plan.run(|t, inst| {
        let (_, b) = inst.expected();
        let b_hat = inst.b_hat();
        let norm = spectral_norm(&b_hat.sub(&b))?;
        let observed = eigenvalues(&b_hat)?;
        let weyl = expected
            .iter()
            .zip(&observed)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let overshoot = sandwich_overshoot(&observed, &plan.spec, p - q, bound);
        let event = norm <= bound;
        Ok((
            plan.row(t, norm, bound, true, !event),
            plan.row(t, weyl, norm, true, exceeds(weyl, norm, scale)),
            plan.row(t, overshoot, 0.0, event, exceeds(overshoot, 0.0, scale)),
        ))
    })?;
    let mut spectral = Vec::new();
    let mut weyl = Vec::new();
    let mut separation = Vec::new();
    for (a, b, c) in triples {
        spectral.push(a);
        weyl.push(b);
        separation.push(c);
    }
    Ok(WeylSeparation {
        spectral: BoundReport::new("spectral-norm", spectral),
        weyl: BoundReport::new("weyl", weyl),
        separation: BoundReport::new("separation", separation),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorReports {
    /// `||P - P-hat||_2 <= ||B - B-hat||_2 / (beta - alpha)` with
    /// `beta = (p-q) s_{k1} - nu sqrt n`, `alpha = (p-q) s_{k1+1} + nu sqrt n`.
    pub spectral: BoundReport,
    /// Frobenius form, with the extra `sqrt(2 k1)`.
    pub frobenius: BoundReport,
    /// Same inequalities with `beta` and `alpha` read off the spectra of
    /// `B` and `B-hat` (the tightest values the hypothesis allows).
    pub measured_spectral: BoundReport,
    pub measured_frobenius: BoundReport,
    /// `||P - P-hat||_2 <= eps`, on trials where the norm bound held and
    /// `c >= 14 / ((p - q) eps)` with the spec meeting the size gap for `c`.
    pub epsilon_spectral: BoundReport,
    /// `||P - P-hat||_F <= sqrt(2 k1) eps` under the same hypotheses.
    pub epsilon_frobenius: BoundReport,
}

impl ProjectorReports {
    pub fn all(&self) -> [&BoundReport; 6] {
        [
            &self.spectral,
            &self.frobenius,
            &self.measured_spectral,
            &self.measured_frobenius,
            &self.epsilon_spectral,
            &self.epsilon_frobenius,
        ]
    }
}

pub fn check_projector_bound(plan: &TrialPlan) -> Result<ProjectorReports, VerifyError> {
    let spec = &plan.spec;
    let n = spec.n();
    let r = spec.supercluster_counts()[0];
    let (p, q, eps, c) = (plan.params.p, plan.params.q, plan.params.epsilon, plan.params.c);
    let d = p - q;
    let slack = plan.norm_bound();
    let sizes = spec.sizes();
    let next_size = sizes.get(r).copied().unwrap_or(0) as f64;
    let beta = d * sizes[r - 1] as f64 - slack;
    let alpha = d * next_size + slack;
    let expected = expected_spectrum(spec, p, q);
    let gap_ok = sizes[r - 1] as f64 - next_size >= c * (n as f64).sqrt();
    let eps_hypothesis = gap_ok && c >= 14.0 / (d * eps);
    let root = (2.0 * r as f64).sqrt();

    let rows = plan.run(|t, inst| {
        let (_, b) = inst.expected();
        let b_hat = inst.b_hat();
        let norm = spectral_norm(&b_hat.sub(&b))?;
        let eig = SymmetricEigen::new(&b_hat)?;
        let observed = eig.values();
        let p_hat = rank_projector(&eig.leading(r)?, r, GapPolicy::default())?;
        let diff = p_hat.matrix().sub(&analytic_projector(&inst.labels, sizes, r));
        let dev2 = spectral_norm(&diff)?;
        let dev_f = frobenius_norm(&diff);

        let rest = |v: &[f64]| v.get(r).copied().unwrap_or(f64::NEG_INFINITY);
        let layout = |lo: f64, hi: f64| {
            lo > hi && expected[r - 1] >= lo && observed[r - 1] >= lo && rest(&expected) <= hi && rest(observed) <= hi
        };
        let nominal = layout(beta, alpha);
        let beta_m = expected[r - 1].min(observed[r - 1]);
        let alpha_m = rest(&expected).max(rest(observed));
        let measured = alpha_m < beta_m;
        let eps_ok = eps_hypothesis && norm <= slack;

        let form = |dev: f64, bound: f64, hyp: bool| {
            let bound = if hyp { bound } else { f64::NAN };
            plan.row(t, dev, bound, hyp, hyp && exceeds(dev, bound, 1.0))
        };
        Ok([
            form(dev2, norm / (beta - alpha), nominal),
            form(dev_f, root * norm / (beta - alpha), nominal),
            form(dev2, norm / (beta_m - alpha_m), measured),
            form(dev_f, root * norm / (beta_m - alpha_m), measured),
            form(dev2, eps, eps_ok),
            form(dev_f, root * eps, eps_ok),
        ])
    })?;
    let column = |i: usize, name: &str| BoundReport::new(name, rows.iter().map(|r| r[i].clone()).collect());
    Ok(ProjectorReports {
        spectral: column(0, "projector-l2"),
        frobenius: column(1, "projector-frobenius"),
        measured_spectral: column(2, "projector-l2-measured-gap"),
        measured_frobenius: column(3, "projector-frobenius-measured-gap"),
        epsilon_spectral: column(4, "projector-l2-epsilon"),
        epsilon_frobenius: column(5, "projector-frobenius-epsilon"),
    })
}

/// Per-vertex, per-cluster concentration events:
/// `stat(u, C_i) >= (p - eps) s_i` for `u` in `C_i`, `<= (q + eps) s_i`
/// otherwise, where `stat` is the neighbour count (graph, `u` excluded) or
/// `S_{u,C_i}` (general). Each trial row holds its number of violated events.
/// Passing requires the pooled violation rate to stay at or below `max_rate`.
pub fn check_degree_events(plan: &TrialPlan, max_rate: f64) -> Result<BoundReport, VerifyError> {
    let (p, q, eps) = (plan.params.p, plan.params.q, plan.params.epsilon);
    let sizes = plan.spec.sizes().to_vec();
    let k = sizes.len();
    let per_trial = (plan.spec.n() * k) as u64;
    let rows = plan.run(|t, inst| {
        let n = inst.n();
        let general = inst.kind == InstanceKind::General;
        let mut violations = 0u64;
        for u in 0..n {
            let mut stat = vec![0.0; k];
            for v in 0..n {
                if v != u || general {
                    stat[inst.labels[v]] += inst.matrix.get(u, v);
                }
            }
            for (i, &s) in sizes.iter().enumerate() {
                let s = s as f64;
                let ok = if inst.labels[u] == i {
                    stat[i] >= (p - eps) * s
                } else {
                    stat[i] <= (q + eps) * s
                };
                violations += u64::from(!ok);
            }
        }
        Ok(plan.row(t, violations as f64, 0.0, true, violations > 0))
    })?;
    let violations = rows.iter().map(|r| r.observed as u64).sum();
    let smallest = *sizes.last().unwrap() as f64;
    let reference = match &plan.ensemble {
        Ensemble::Bernoulli => (-eps * eps * smallest).exp(),
        Ensemble::General { d1, d2, d3 } => {
            let kappa = [d1, d2, d3].iter().map(|d| d.kappa()).fold(0.0, f64::max);
            if kappa == 0.0 {
                0.0
            } else {
                (-eps * eps * smallest / (3.0 * kappa * kappa)).exp()
            }
        }
    };
    let mut report = BoundReport::new("degree-events", rows);
    report.allowance = Allowance::Rate(max_rate);
    report.events = Some(EventTally {
        events: per_trial * plan.trials as u64,
        violations,
        reference,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_partition;

    #[test]
    fn spectrum_of_b() {
        let spec = build_partition(6, &[4, 2], &[1, 1]).unwrap();
        assert_eq!(expected_spectrum(&spec, 0.75, 0.25), vec![2.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn analytic_projector_blocks() {
        let p = analytic_projector(&[0, 0, 1, 1], &[2, 2], 2);
        assert_eq!(p.get(0, 1), 0.5);
        assert_eq!(p.get(0, 2), 0.0);
        let p1 = analytic_projector(&[0, 0, 1, 1], &[2, 2], 1);
        assert_eq!(p1.get(2, 3), 0.0);
        assert_eq!(p1.trace(), 1.0);
    }

    #[test]
    fn zero_variance_general_model_has_no_deviation() {
        let spec = build_partition(20, &[12, 8], &[1, 1]).unwrap();
        let plan = TrialPlan::general(
            spec,
            0.01,
            1.0,
            DistributionSpec::point(0.7),
            DistributionSpec::point(0.1),
            DistributionSpec::point(0.0),
            3,
            1,
        )
        .with_noise_constant(1.0);
        let r = check_spectral_bound(&plan).unwrap();
        assert!(r.rows.iter().all(|row| row.observed.abs() < 1e-12));
    }

    #[test]
    fn noiseless_projectors_coincide() {
        let spec = build_partition(30, &[20, 10], &[1, 1]).unwrap();
        let plan = TrialPlan::bernoulli(spec, ModelParams::new(1.0, 0.0, 0.01, 1.0), 2, 0);
        let r = check_projector_bound(&plan).unwrap();
        for row in &r.measured_spectral.rows {
            assert!(row.hypothesis);
            assert!(row.observed < 1e-9);
        }
    }

    #[test]
    fn complete_blocks_meet_degree_events() {
        let spec = build_partition(60, &[30, 30], &[2]).unwrap();
        let plan = TrialPlan::bernoulli(spec, ModelParams::new(1.0, 0.0, 0.05, 1.0), 2, 0);
        let r = check_degree_events(&plan, 0.0).unwrap();
        assert_eq!(r.events.unwrap().violations, 0);
        assert!(r.passes());
    }

    #[test]
    fn no_trials_is_an_error() {
        let spec = build_partition(4, &[2, 2], &[2]).unwrap();
        let plan = TrialPlan::bernoulli(spec, ModelParams::new(0.8, 0.2, 0.01, 1.0), 0, 0);
        assert_eq!(check_spectral_bound(&plan), Err(VerifyError::NoTrials));
    }
}
