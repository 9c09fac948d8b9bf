use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use planted::model::text::{attach_truth, read_instance, read_partition, write_instance, write_partition};
use planted::model::{sample_general, sample_graph, Instance, InstanceKind, SampleOptions};
use planted::recovery::{
    estimate_supercluster_counts, recover_auto, recover_general, recover_nonuniform, recover_uniform,
    RecoveryConfig, RecoveryError, RecoveryResult,
};
use planted::spectral::eigenvalues;
use planted::verify::{
    check_degree_events, check_projector_bound, check_spectral_bound, check_weyl_and_separation, compare_partitions,
    expected_spectrum, Allowance, BoundReport, TrialPlan,
};

use crate::config::{ExperimentConfig, Format, SweepPoint};
use crate::{CliError, Common, Outcome};

/// Names accepted by `certify`.
pub const BOUNDS: [&str; 5] = ["spectral-norm", "weyl", "separation", "projector", "degree-events"];

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load(common: &Common) -> Result<Option<ExperimentConfig>, CliError> {
    let Some(path) = &common.config else {
        return Ok(None);
    };
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(t) = common.trials {
        cfg.trials = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(Some(cfg))
}

fn require(common: &Common, command: &str) -> Result<ExperimentConfig, CliError> {
    load(common)?.ok_or_else(|| CliError::Config(format!("{command} needs --config")))
}

fn format_of(common: &Common, cfg: Option<&ExperimentConfig>) -> Format {
    common
        .format
        .or_else(|| cfg.and_then(|c| c.output.format))
        .unwrap_or_default()
}

fn out_path(common: &Common, cfg: Option<&ExperimentConfig>) -> Option<PathBuf> {
    common.out.clone().or_else(|| cfg.and_then(|c| c.output.path.clone()))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).map_err(io_err(p))?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// Writes serializable rows as CSV (header from field names) or JSON lines.
struct Table {
    path: Option<PathBuf>,
    csv: Option<csv::Writer<Box<dyn Write>>>,
    raw: Option<Box<dyn Write>>,
}

impl Table {
    fn open(format: Format, path: Option<PathBuf>) -> Result<Self, CliError> {
        let out = sink(path.as_deref())?;
        let (csv, raw) = match format {
            Format::Csv => (Some(csv::Writer::from_writer(out)), None),
            Format::Jsonl => (None, Some(out)),
        };
        Ok(Self { path, csv, raw })
    }

    fn fail(&self, message: String) -> CliError {
        CliError::Io {
            path: self.path.clone().unwrap_or_else(|| "<stdout>".into()),
            source: io::Error::other(message),
        }
    }

    fn row<T: Serialize>(&mut self, row: &T) -> Result<(), CliError> {
        let result = match (&mut self.csv, &mut self.raw) {
            (Some(w), _) => w.serialize(row).map_err(|e| e.to_string()),
            (_, Some(w)) => serde_json::to_writer(&mut *w, row)
                .map_err(|e| e.to_string())
                .and_then(|()| w.write_all(b"\n").map_err(|e| e.to_string())),
            _ => unreachable!(),
        };
        result.map_err(|m| self.fail(m))
    }

    fn finish(mut self) -> Result<(), CliError> {
        let result = match (&mut self.csv, &mut self.raw) {
            (Some(w), _) => w.flush(),
            (_, Some(w)) => w.flush(),
            _ => Ok(()),
        };
        result.map_err(|e| self.fail(e.to_string()))
    }
}

fn sample(point: &SweepPoint, seed: u64, permute: bool) -> Result<Instance, CliError> {
    let options = SampleOptions { permute };
    let inst = match &point.laws {
        None => sample_graph(&point.spec, &point.params, seed, options),
        Some([d1, d2, d3]) => sample_general(&point.spec, d1, d2, d3, seed, options),
    };
    inst.map_err(|e| CliError::Config(e.to_string()))
}

pub fn generate(common: &Common) -> Result<Outcome, CliError> {
    let cfg = require(common, "generate")?;
    let dir = out_path(common, Some(&cfg))
        .ok_or_else(|| CliError::Config("generate needs --out DIR or output.path".into()))?;
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let points = cfg.points()?;
    let jobs: Vec<(usize, usize)> = points
        .iter()
        .flat_map(|p| (0..cfg.trials).map(move |t| (p.index, t)))
        .collect();
    let files: Vec<(String, String, String)> = jobs
        .par_iter()
        .map(|&(p, t)| {
            let inst = sample(&points[p], cfg.trial_seed(p, t), cfg.model.permute)?;
            Ok((
                format!("point-{p:03}-trial-{t:04}"),
                write_instance(&inst),
                write_partition(&inst.truth_clusters()),
            ))
        })
        .collect::<Result<_, CliError>>()?;
    let mut stdout = io::stdout().lock();
    for (stem, instance, truth) in files {
        let path = dir.join(format!("{stem}.txt"));
        fs::write(&path, instance).map_err(io_err(&path))?;
        let truth_path = dir.join(format!("{stem}.truth"));
        fs::write(&truth_path, truth).map_err(io_err(&truth_path))?;
        let _ = writeln!(stdout, "{}", path.display());
    }
    Ok(Outcome::Ok)
}

#[derive(Debug, Clone, Default)]
pub struct RecoverFlags {
    pub uniform: Option<usize>,
    pub auto_counts: bool,
    pub epsilon: Option<f64>,
    pub nu: Option<f64>,
}

struct Job {
    point: usize,
    trial: usize,
    instance: Instance,
    truth_known: bool,
    cfg: RecoveryConfig,
}

#[derive(Debug, Serialize)]
struct RecoverRow {
    record: &'static str,
    point: usize,
    trial: Option<usize>,
    n: usize,
    p: f64,
    q: f64,
    sizes: String,
    seed: Option<u64>,
    status: String,
    exact: Option<bool>,
    misclassified: Option<usize>,
    iterations: usize,
    wall_ms: f64,
    success_rate: Option<f64>,
}

fn sizes_field(sizes: &[usize]) -> String {
    sizes.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn truth_path(file: &Path) -> PathBuf {
    file.with_extension("truth")
}

fn read_input(path: &Path) -> Result<(Instance, bool), CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let input = |message: String| CliError::Input {
        path: path.to_path_buf(),
        message,
    };
    let mut inst = read_instance(&text).map_err(|e| input(e.to_string()))?;
    let tp = truth_path(path);
    let known = tp.exists();
    if known {
        let text = fs::read_to_string(&tp).map_err(io_err(&tp))?;
        let truth = read_partition(&text).map_err(|e| input(format!("truth file: {e}")))?;
        attach_truth(&mut inst, &truth).map_err(|e| input(format!("truth file: {e}")))?;
    }
    Ok((inst, known))
}

fn file_config(
    inst: &Instance,
    cfg: Option<&ExperimentConfig>,
    flags: &RecoverFlags,
) -> Result<RecoveryConfig, CliError> {
    let epsilon = flags.epsilon.or(cfg.map(|c| c.model.epsilon)).unwrap_or(0.01);
    let base = match inst.kind {
        InstanceKind::Graph => RecoveryConfig::bernoulli(inst.p, inst.q, epsilon),
        InstanceKind::General => {
            let point = cfg
                .map(|c| c.points())
                .transpose()?
                .and_then(|p| p.into_iter().next())
                .filter(|p| p.laws.is_some())
                .ok_or_else(|| CliError::Config("general-model instances need a config with d1, d2 and d3".into()))?;
            let [d1, d2, d3] = point.laws.unwrap();
            RecoveryConfig::general(&d1, &d2, &d3, epsilon)
        }
    };
    let c = cfg
        .and_then(|c| c.model.c)
        .unwrap_or_else(|| inst.truth.separation_constant());
    let base = base
        .with_counts(inst.truth.supercluster_counts())
        .with_separation(c);
    Ok(match flags.nu.or(cfg.and_then(|c| c.recovery.noise_constant)) {
        Some(nu) => base.with_noise_constant(nu),
        None => base,
    })
}

fn run_job(job: &Job, uniform: Option<usize>, auto: bool) -> Result<(RecoveryResult, f64), RecoveryError> {
    let start = Instant::now();
    let r = match uniform {
        Some(s) => recover_uniform(&job.instance, s, &job.cfg)?,
        None if auto => recover_auto(&job.instance, &job.cfg)?,
        None if job.cfg.general.is_some() => recover_general(&job.instance, &job.cfg)?,
        None => recover_nonuniform(&job.instance, &job.cfg)?,
    };
    Ok((r, start.elapsed().as_secs_f64() * 1e3))
}

pub fn recover(common: &Common, files: &[PathBuf], flags: &RecoverFlags) -> Result<Outcome, CliError> {
    let cfg = load(common)?;
    if files.is_empty() && cfg.is_none() {
        return Err(CliError::Config("recover needs instance files or --config".into()));
    }
    let uniform = flags.uniform.or(cfg.as_ref().and_then(|c| c.recovery.uniform));
    let auto = flags.auto_counts || cfg.as_ref().is_some_and(|c| c.recovery.auto_counts);
    if uniform == Some(0) {
        return Err(CliError::Config("--uniform needs a positive cluster size".into()));
    }

    let jobs: Vec<Job> = if files.is_empty() {
        let cfg = cfg.as_ref().unwrap();
        let points = cfg.points()?;
        let pairs: Vec<(usize, usize)> = points
            .iter()
            .flat_map(|p| (0..cfg.trials).map(move |t| (p.index, t)))
            .collect();
        pairs
            .par_iter()
            .map(|&(p, t)| {
                let point = &points[p];
                let mut rc = point.recovery_config(&cfg.recovery);
                if let Some(e) = flags.epsilon {
                    rc.epsilon = e;
                }
                if let Some(nu) = flags.nu {
                    rc.noise_constant = nu;
                }
                Ok(Job {
                    point: p,
                    trial: t,
                    instance: sample(point, cfg.trial_seed(p, t), cfg.model.permute)?,
                    truth_known: true,
                    cfg: rc,
                })
            })
            .collect::<Result<_, CliError>>()?
    } else {
        files
            .iter()
            .enumerate()
            .map(|(i, path)| {
                let (instance, truth_known) = read_input(path)?;
                let rc = file_config(&instance, cfg.as_ref(), flags)?;
                Ok(Job {
                    point: 0,
                    trial: i,
                    instance,
                    truth_known,
                    cfg: rc,
                })
            })
            .collect::<Result<_, CliError>>()?
    };

    let results: Vec<(RecoveryResult, f64)> = jobs
        .par_iter()
        .map(|job| run_job(job, uniform, auto))
        .collect::<Result<_, RecoveryError>>()?;

    let mut table = Table::open(format_of(common, cfg.as_ref()), out_path(common, cfg.as_ref()))?;
    let mut failed = false;
    let mut start = 0;
    while start < jobs.len() {
        let point = jobs[start].point;
        let end = start + jobs[start..].iter().take_while(|j| j.point == point).count();
        let mut successes = 0;
        let mut iterations = 0;
        let mut wall = 0.0;
        for (job, (r, ms)) in jobs[start..end].iter().zip(&results[start..end]) {
            let matched = job
                .truth_known
                .then(|| compare_partitions(&r.clusters, &job.instance.truth_clusters()))
                .transpose()?;
            let ok = matched.as_ref().map_or(r.is_success(), |m| m.exact && r.is_success());
            successes += usize::from(ok);
            iterations += r.traces.len();
            wall += ms;
            table.row(&RecoverRow {
                record: "trial",
                point,
                trial: Some(job.trial),
                n: job.instance.n(),
                p: job.cfg.p,
                q: job.cfg.q,
                sizes: sizes_field(job.instance.truth.sizes()),
                seed: Some(job.instance.seed),
                status: r.status.to_string(),
                exact: matched.as_ref().map(|m| m.exact && r.is_success()),
                misclassified: matched.as_ref().map(|m| m.misclassified),
                iterations: r.traces.len(),
                wall_ms: *ms,
                success_rate: None,
            })?;
        }
        let rate = successes as f64 / (end - start) as f64;
        if cfg.as_ref().and_then(|c| c.recovery.min_success).is_some_and(|m| rate < m) {
            failed = true;
        }
        let first = &jobs[start];
        table.row(&RecoverRow {
            record: "summary",
            point,
            trial: None,
            n: first.instance.n(),
            p: first.cfg.p,
            q: first.cfg.q,
            sizes: sizes_field(first.instance.truth.sizes()),
            seed: None,
            status: format!("{successes}/{} succeeded", end - start),
            exact: None,
            misclassified: None,
            iterations,
            wall_ms: wall,
            success_rate: Some(rate),
        })?;
        start = end;
    }
    table.finish()?;
    Ok(if failed { Outcome::Failed } else { Outcome::Ok })
}

fn plan_for(cfg: &ExperimentConfig, point: &SweepPoint) -> TrialPlan {
    let seed = cfg.trial_seed(point.index, 0);
    let plan = match &point.laws {
        None => TrialPlan::bernoulli(point.spec.clone(), point.params, cfg.trials, seed),
        Some([d1, d2, d3]) => TrialPlan::general(
            point.spec.clone(),
            point.params.epsilon,
            point.params.c,
            *d1,
            *d2,
            *d3,
            cfg.trials,
            seed,
        ),
    };
    match cfg.recovery.noise_constant {
        Some(nu) => plan.with_noise_constant(nu),
        None => plan,
    }
}

fn reports_for(bound: &str, cfg: &ExperimentConfig, plan: &TrialPlan) -> Result<Vec<BoundReport>, CliError> {
    let mut reports = match bound {
        "spectral-norm" => vec![check_spectral_bound(plan)?],
        "weyl" => vec![check_weyl_and_separation(plan)?.weyl],
        "separation" => vec![check_weyl_and_separation(plan)?.separation],
        "projector" => check_projector_bound(plan)?.all().into_iter().cloned().collect(),
        "degree-events" => return Ok(vec![check_degree_events(plan, cfg.certify.max_rate)?]),
        _ => unreachable!(),
    };
    for r in &mut reports {
        r.allowance = Allowance::Violations(cfg.certify.allowed_violations);
    }
    Ok(reports)
}

#[derive(Debug, Serialize)]
struct CertifyRow<'a> {
    record: &'static str,
    point: usize,
    bound: &'a str,
    trial: Option<usize>,
    seed: Option<u64>,
    observed: f64,
    bound_value: f64,
    hypothesis: Option<bool>,
    violated: Option<bool>,
    trials: Option<usize>,
    violations: Option<usize>,
    passes: Option<bool>,
    event_rate: Option<f64>,
}

pub fn certify(common: &Common, bound: &str) -> Result<Outcome, CliError> {
    if !BOUNDS.contains(&bound) {
        return Err(CliError::Config(format!(
            "unknown bound {bound:?}; valid bounds: {}",
            BOUNDS.join(", ")
        )));
    }
    let cfg = require(common, "certify")?;
    let mut all = Vec::new();
    for point in cfg.points()? {
        for report in reports_for(bound, &cfg, &plan_for(&cfg, &point))? {
            eprintln!("point {}: {}", point.index, report.summary_line());
            all.push((point.index, report));
        }
    }

    let format = format_of(common, Some(&cfg));
    let path = out_path(common, Some(&cfg));
    match format {
        Format::Csv => {
            // the library's report layout, with the sweep point in front
            let mut out = sink(path.as_deref())?;
            let mut text = format!("point,{}\n", BoundReport::CSV_HEADER);
            for (point, report) in &all {
                for line in report.to_csv(false).lines() {
                    text.push_str(&format!("{point},{line}\n"));
                }
            }
            let target = path.clone().unwrap_or_else(|| "<stdout>".into());
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(io_err(&target))?;
        }
        Format::Jsonl => {
            let mut table = Table::open(format, path)?;
            for (point, report) in &all {
                for r in &report.rows {
                    table.row(&CertifyRow {
                        record: "trial",
                        point: *point,
                        bound: &report.name,
                        trial: Some(r.trial),
                        seed: Some(r.seed),
                        observed: r.observed,
                        bound_value: r.bound,
                        hypothesis: Some(r.hypothesis),
                        violated: Some(r.violated),
                        trials: None,
                        violations: None,
                        passes: None,
                        event_rate: None,
                    })?;
                }
                table.row(&CertifyRow {
                    record: "summary",
                    point: *point,
                    bound: &report.name,
                    trial: None,
                    seed: None,
                    observed: report.max_observed(),
                    bound_value: report.rows.iter().map(|r| r.bound).fold(f64::NEG_INFINITY, f64::max),
                    hypothesis: None,
                    violated: None,
                    trials: Some(report.trials()),
                    violations: Some(report.violations()),
                    passes: Some(report.passes()),
                    event_rate: report.events.map(|e| e.rate()),
                })?;
            }
            table.finish()?;
        }
    }
    Ok(if all.iter().all(|(_, r)| r.passes()) {
        Outcome::Ok
    } else {
        Outcome::Failed
    })
}

#[derive(Debug, Serialize)]
struct SpectrumRow {
    index: usize,
    lambda_hat: f64,
    lambda: f64,
    /// A gap of at least the scan threshold separates this eigenvalue from the previous one.
    gap_before: bool,
}

#[derive(Debug, Serialize)]
struct SpectrumSummary {
    threshold: Option<f64>,
    estimated_counts: Option<Vec<usize>>,
}

pub fn spectrum(common: &Common, file: &Path, nu: Option<f64>, separation: Option<f64>) -> Result<Outcome, CliError> {
    let cfg = load(common)?;
    let (inst, _) = read_input(file)?;
    let flags = RecoverFlags {
        nu,
        ..RecoverFlags::default()
    };
    let mut rc = match file_config(&inst, cfg.as_ref(), &flags) {
        Ok(rc) => rc,
        Err(_) if nu.is_some() => RecoveryConfig::bernoulli(inst.p, inst.q, 0.01).with_noise_constant(nu.unwrap()),
        Err(e) => return Err(e),
    };
    if let Some(c) = separation {
        rc.c = Some(c);
    }
    if rc.c.is_none() {
        rc.c = Some(inst.truth.separation_constant());
    }

    let observed = eigenvalues(&inst.b_hat()).map_err(RecoveryError::from)?;
    let expected = expected_spectrum(&inst.truth, inst.p, inst.q);
    let n = inst.n();
    let (threshold, counts) = match estimate_supercluster_counts(&observed, &rc, n) {
        Ok(counts) => (planted::recovery::scan_threshold(&rc, n).ok(), Some(counts)),
        Err(RecoveryError::NonPositiveThreshold { threshold }) => {
            eprintln!("gap threshold {threshold:.4} is not positive; no gaps marked");
            (None, None)
        }
        Err(e) => return Err(e.into()),
    };
    let mut boundaries = vec![false; n];
    let mut acc = 0;
    for k in counts.iter().flatten() {
        acc += k;
        boundaries[acc] = true;
    }

    let format = format_of(common, cfg.as_ref());
    let mut table = Table::open(format, out_path(common, cfg.as_ref()))?;
    for i in 0..n {
        table.row(&SpectrumRow {
            index: i,
            lambda_hat: observed[i],
            lambda: expected[i],
            gap_before: boundaries[i],
        })?;
    }
    let summary = SpectrumSummary {
        threshold,
        estimated_counts: counts,
    };
    match format {
        Format::Jsonl => table.row(&summary)?,
        Format::Csv => eprintln!(
            "threshold {}; estimated supercluster counts {}",
            summary.threshold.map_or("none".into(), |t| format!("{t:.4}")),
            summary
                .estimated_counts
                .as_ref()
                .map_or("none".into(), |c| format!("{c:?}"))
        ),
    }
    table.finish()?;
    Ok(Outcome::Ok)
}
