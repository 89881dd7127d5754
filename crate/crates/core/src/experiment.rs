//! Grid experiments over a model file, written as CSV plus a JSON mirror.
//!
//! Output is a pure function of the config and the model: rows come out in grid
//! order, Monte-Carlo trials use per-trial streams of the master seed, and the
//! `ms` column stays empty unless `record_timings` is set.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    count_factorizations, example1_predicted_count, exact_rank_deficiency_prob, full_rank_prob_bound, gamma_bound,
    image_census, prob_zero_tensor,
};
use crate::codec::measure_scheme;
use crate::error::{Error, Result};
use crate::model::{theoretical_threshold, Alphabet, ModelSpec};
use crate::numeric::Budget;
use crate::rational::{self, int};
use crate::sampling::estimate_full_rank_prob;
use crate::tensor::ExactTensor;
use crate::typicality::{spectrum_samples, summarize, TypicalityParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Threshold,
    FullRank,
    Spectrum,
    Census,
    CodecError,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Threshold => "threshold",
            ExperimentKind::FullRank => "full-rank",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Census => "census",
            ExperimentKind::CodecError => "codec-error",
        }
    }

    fn uses_gamma(self) -> bool {
        matches!(self, ExperimentKind::Threshold | ExperimentKind::CodecError)
    }
}

fn one() -> u64 {
    1
}

/// Relative `model` and `output` paths resolve against the config file's directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: PathBuf,
    pub kind: ExperimentKind,
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub gamma_grid: Vec<String>,
    #[serde(default = "one")]
    pub trials: u64,
    pub seed: u64,
    /// CSV path; the JSON mirror sits next to it with a `.json` extension.
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default)]
    pub record_timings: bool,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_grid.is_empty() {
            return bad("n_grid is empty".into());
        }
        if self.n_grid.contains(&0) {
            return bad("n_grid contains 0".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.kind.uses_gamma() {
            if self.gamma_grid.is_empty() {
                return bad(format!("{} needs a non-empty gamma_grid", self.kind.name()));
            }
            for g in &self.gamma_grid {
                TypicalityParams::parse(g)?;
            }
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn model_path(&self) -> PathBuf {
        self.resolve(&self.model)
    }

    pub fn csv_path(&self) -> PathBuf {
        self.resolve(&self.output)
    }

    pub fn json_path(&self) -> PathBuf {
        self.csv_path().with_extension("json")
    }

    pub fn budget(&self) -> Budget {
        self.budget.map(Budget).unwrap_or_default()
    }
}

/// One statistic at one grid point. Every row carries `exact` or `stderr`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub kind: ExperimentKind,
    pub n: usize,
    pub gamma: Option<String>,
    pub statistic: String,
    pub estimate: Option<f64>,
    /// Rational as `p/q`, or the shortest round-trip decimal of an `f64` for transcendental values.
    pub exact: Option<String>,
    pub bound: Option<String>,
    pub stderr: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    pub ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Hex SHA-256 of the base model's canonical JSON.
    pub model_hash: String,
    pub rows: Vec<ResultRow>,
}

struct Point<'a> {
    cfg: &'a ExperimentConfig,
    n: usize,
    gamma: Option<&'a str>,
    rows: Vec<ResultRow>,
}

impl Point<'_> {
    fn row(&mut self, statistic: impl Into<String>) -> &mut ResultRow {
        self.rows.push(ResultRow {
            kind: self.cfg.kind,
            n: self.n,
            gamma: self.gamma.map(str::to_owned),
            statistic: statistic.into(),
            estimate: None,
            exact: None,
            bound: None,
            stderr: None,
            trials: self.cfg.trials,
            seed: self.cfg.seed,
            ms: None,
        });
        self.rows.last_mut().expect("just pushed")
    }

    fn label(&self) -> String {
        match self.gamma {
            Some(g) => format!("n={} gamma={g}", self.n),
            None => format!("n={}", self.n),
        }
    }
}

fn float(x: f64) -> String {
    format!("{x}")
}

fn threshold(p: &mut Point, m: &ModelSpec, params: &TypicalityParams, budget: Budget) -> Result<()> {
    let r = measure_scheme(m, params, budget)?;
    let n = m.dim() as f64;
    p.row("codebook_size").exact = Some(r.codebook_size.to_string());
    let row = p.row("log_m_per_n");
    row.exact = Some(float(r.threshold_per_n));
    row.bound = Some(float(r.nats_bound / n));
    p.row("entropy_threshold").exact = Some(float(r.entropy_threshold));
    Ok(())
}

fn codec_error(p: &mut Point, m: &ModelSpec, params: &TypicalityParams, budget: Budget) -> Result<()> {
    let r = measure_scheme(m, params, budget)?;
    let row = p.row("error_prob");
    row.exact = Some(rational::format(&r.exact_error_prob));
    row.bound = Some(rational::format(&r.error_bound));
    for (i, mass) in r.typicality_masses.iter().enumerate() {
        p.row(format!("typicality_mass_mode{i}")).exact = Some(rational::format(mass));
    }
    p.row("distinct_tensors").exact = Some(r.distinct_tensors.to_string());
    Ok(())
}

fn full_rank(p: &mut Point, m: &ModelSpec, budget: Budget) -> Result<()> {
    let (trials, seed) = (p.cfg.trials, p.cfg.seed);
    let bound = full_rank_prob_bound(m)?;
    for (f, est) in estimate_full_rank_prob(m, trials, seed).into_iter().enumerate() {
        let exact = match exact_rank_deficiency_prob(m, f, budget) {
            Ok(q) => Some(rational::format(&(int(1) - q))),
            Err(Error::BudgetExceeded { .. }) => None,
            Err(e) => return Err(e),
        };
        let row = p.row(format!("full_rank_prob_mode{f}"));
        row.estimate = Some(est.estimate);
        row.stderr = Some(est.stderr);
        row.exact = exact;
        row.bound = Some(rational::format(&(int(1) - &bound.zeta_exact[f])));
    }
    Ok(())
}

fn spectrum(p: &mut Point, m: &ModelSpec) -> Result<()> {
    let s = summarize(&spectrum_samples(m, p.cfg.trials, p.cfg.seed));
    let row = p.row("spectrum_mean");
    row.estimate = Some(s.mean);
    row.stderr = Some(s.stderr);
    row.bound = Some(float(theoretical_threshold(m)));
    let row = p.row("spectrum_variance");
    row.estimate = Some(s.variance);
    // normal-theory standard error of a sample variance
    row.stderr = Some(s.variance * (2.0 / (s.count.max(2) - 1) as f64).sqrt());
    Ok(())
}

fn is_example1(m: &ModelSpec) -> bool {
    m.is_supersymmetric() && m.order() == 3 && m.components() == 2 && m.alphabet(0) == &Alphabet::signs()
}

fn census(p: &mut Point, m: &ModelSpec, budget: Budget) -> Result<()> {
    let zero = ExactTensor::zeros(m.order(), m.dim());
    let c = count_factorizations(&zero, m, false, budget)?;
    p.row("zero_tensor_count").exact = Some(c.total.to_string());
    p.row("zero_tensor_full_rank_count").exact = Some(c.full_rank.to_string());
    let closed = match prob_zero_tensor(m) {
        Ok(v) => Some(v),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let row = p.row("zero_tensor_prob");
    row.exact = Some(rational::format(&c.probability));
    row.bound = closed.as_ref().map(rational::format);
    if let Some(closed) = closed {
        p.row("closed_form_agrees").exact = Some(u8::from(closed == c.probability).to_string());
    }
    if m.order() >= 2 {
        p.row("gamma_bound").exact = Some(gamma_bound(m)?.to_string());
    }
    if is_example1(m) {
        let image = image_census(m, budget)?;
        let explained = image
            .iter()
            .filter(|e| e.count == example1_predicted_count(&e.tensor))
            .count();
        p.row("image_tensors").exact = Some(image.len().to_string());
        p.row("trichotomy_explained").exact = Some(explained.to_string());
    }
    Ok(())
}

/// Runs every grid point in order; a failure names its grid point.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let base = ModelSpec::load(cfg.model_path())?;
    run_with_model(cfg, &base)
}

/// As [`run_experiment`] with the model already loaded.
pub fn run_with_model(cfg: &ExperimentConfig, base: &ModelSpec) -> Result<ExperimentResult> {
    cfg.validate()?;
    let budget = cfg.budget();
    let gammas: Vec<Option<&str>> = if cfg.kind.uses_gamma() {
        cfg.gamma_grid.iter().map(|g| Some(g.as_str())).collect()
    } else {
        vec![None]
    };
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let m = base.with_dim(n)?;
        for &gamma in &gammas {
            let mut p = Point {
                cfg,
                n,
                gamma,
                rows: Vec::new(),
            };
            let start = Instant::now();
            let params = gamma.map(TypicalityParams::parse).transpose()?;
            let outcome = match (cfg.kind, &params) {
                (ExperimentKind::Threshold, Some(params)) => threshold(&mut p, &m, params, budget),
                (ExperimentKind::CodecError, Some(params)) => codec_error(&mut p, &m, params, budget),
                (ExperimentKind::FullRank, _) => full_rank(&mut p, &m, budget),
                (ExperimentKind::Spectrum, _) => spectrum(&mut p, &m),
                (ExperimentKind::Census, _) => census(&mut p, &m, budget),
                _ => unreachable!("validate requires gammas for these kinds"),
            };
            outcome.map_err(|e| Error::Experiment {
                kind: cfg.kind.name(),
                point: p.label(),
                source: Box::new(e),
            })?;
            if cfg.record_timings {
                let ms = start.elapsed().as_millis() as u64;
                p.rows.iter_mut().for_each(|r| r.ms = Some(ms));
            }
            rows.extend(p.rows);
        }
    }
    let model_hash = base.hash().iter().map(|b| format!("{b:02x}")).collect();
    Ok(ExperimentResult {
        config: cfg.clone(),
        model_hash,
        rows,
    })
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

impl ExperimentResult {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec_pretty(self)?;
        out.push(b'\n');
        Ok(out)
    }

    /// Writes the CSV and its JSON mirror atomically.
    pub fn write(&self) -> Result<(PathBuf, PathBuf)> {
        let (csv_path, json_path) = (self.config.csv_path(), self.config.json_path());
        write_atomic(&csv_path, &self.to_csv()?)?;
        write_atomic(&json_path, &self.to_json()?)?;
        Ok((csv_path, json_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIFORM_RANK_ONE: &str = r#"{"order":3,"dim":2,"components":1,"supersymmetric":false,
        "alphabets":[[-1,1],[-1,1],[-1,1]],"dists":[[["1/2","1/2"]],[["1/2","1/2"]],[["1/2","1/2"]]]}"#;

    fn config(dir: &Path, kind: &str, extra: &str) -> ExperimentConfig {
        std::fs::write(dir.join("model.json"), UNIFORM_RANK_ONE).unwrap();
        let text = format!(
            r#"{{"model":"model.json","kind":"{kind}","n_grid":[2,3,4],"trials":200,"seed":11,"output":"out/{kind}.csv"{extra}}}"#
        );
        let path = dir.join(format!("{kind}.json"));
        std::fs::write(&path, text).unwrap();
        std::fs::create_dir_all(dir.join("out")).unwrap();
        ExperimentConfig::load(&path).unwrap()
    }

    #[test]
    fn threshold_rows_respect_the_length_bound() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "threshold", r#","gamma_grid":["1/10","1/4"]"#);
        let res = run_experiment(&cfg).unwrap();
        let per_n: Vec<&ResultRow> = res.rows.iter().filter(|r| r.statistic == "log_m_per_n").collect();
        assert_eq!(per_n.len(), 6);
        for r in per_n {
            let exact: f64 = r.exact.as_ref().unwrap().parse().unwrap();
            let bound: f64 = r.bound.as_ref().unwrap().parse().unwrap();
            assert!(exact <= bound, "{r:?}");
        }
    }

    #[test]
    fn every_row_has_exact_or_stderr_and_reruns_are_identical() {
        let dir = tempfile::tempdir().unwrap();
        for (kind, extra) in [
            ("threshold", r#","gamma_grid":["1/10"]"#),
            ("codec-error", r#","gamma_grid":["1/20","1/4"]"#),
            ("full-rank", ""),
            ("spectrum", ""),
            ("census", ""),
        ] {
            let cfg = config(dir.path(), kind, extra);
            let first = run_experiment(&cfg).unwrap();
            assert!(!first.rows.is_empty());
            for r in &first.rows {
                assert!(r.exact.is_some() || r.stderr.is_some(), "{r:?}");
                assert!(r.ms.is_none());
            }
            let (csv, json) = first.write().unwrap();
            let (a, b) = (std::fs::read(&csv).unwrap(), std::fs::read(&json).unwrap());
            run_experiment(&cfg).unwrap().write().unwrap();
            assert_eq!(std::fs::read(&csv).unwrap(), a);
            assert_eq!(std::fs::read(&json).unwrap(), b);
            let header = String::from_utf8(a).unwrap();
            assert!(header.starts_with("kind,n,gamma,statistic,estimate,exact,bound,stderr,trials,seed,ms\n"));
        }
    }

    #[test]
    fn census_rows_agree_with_closed_form() {
        let dir = tempfile::tempdir().unwrap();
        let model = r#"{"order":3,"dim":2,"components":2,"supersymmetric":true,
            "alphabets":[[-1,1],[-1,1],[-1,1]],
            "dists":[[["1/4","3/4"],["2/3","1/3"]],[["1/4","3/4"],["2/3","1/3"]],[["1/4","3/4"],["2/3","1/3"]]]}"#;
        std::fs::write(dir.path().join("ex1.json"), model).unwrap();
        let cfg = ExperimentConfig {
            model: dir.path().join("ex1.json"),
            kind: ExperimentKind::Census,
            n_grid: vec![2, 3, 4],
            gamma_grid: vec![],
            trials: 1,
            seed: 0,
            output: dir.path().join("c.csv"),
            budget: None,
            record_timings: false,
            base_dir: None,
        };
        let res = run_experiment(&cfg).unwrap();
        let get = |n: usize, s: &str| {
            res.rows
                .iter()
                .find(|r| r.n == n && r.statistic == s)
                .and_then(|r| r.exact.clone())
                .unwrap()
        };
        for n in [2, 3, 4] {
            assert_eq!(get(n, "zero_tensor_count"), (1u64 << n).to_string());
            assert_eq!(get(n, "closed_form_agrees"), "1");
            assert_eq!(get(n, "trichotomy_explained"), get(n, "image_tensors"));
        }
    }

    #[test]
    fn invalid_configs_are_refused() {
        let base = r#""model":"m.json","seed":1,"output":"o.csv""#;
        for body in [
            r#""kind":"threshold","n_grid":[2]"#,
            r#""kind":"spectrum","n_grid":[]"#,
            r#""kind":"spectrum","n_grid":[0]"#,
            r#""kind":"spectrum","n_grid":[2],"trials":0"#,
            r#""kind":"codec-error","n_grid":[2],"gamma_grid":["-1"]"#,
            r#""kind":"nope","n_grid":[2]"#,
            r#""kind":"spectrum","n_grid":[2],"extra":1"#,
        ] {
            assert!(ExperimentConfig::from_json(&format!("{{{base},{body}}}")).is_err(), "{body}");
        }
    }

    #[test]
    fn budget_refusal_names_the_grid_point() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), "codec-error", r#","gamma_grid":["1/10"],"budget":100"#);
        cfg.n_grid = vec![2, 5];
        match run_experiment(&cfg) {
            Err(Error::Experiment { kind, point, source }) => {
                assert_eq!(kind, "codec-error");
                assert_eq!(point, "n=5 gamma=1/10");
                assert!(matches!(*source, Error::BudgetExceeded { .. }));
            }
            other => panic!("{other:?}"),
        }
    }
}
