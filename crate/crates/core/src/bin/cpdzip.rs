use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use cpdzip::analysis::{count_factorizations, verify_examples};
use cpdzip::codec::{Codebook, Codeword};
use cpdzip::experiment::{write_atomic, ExperimentConfig};
use cpdzip::rational::format as fmt_q;
use cpdzip::sampling::{trial_rng, ModelSampler};
use cpdzip::tensor::{kruskal_rank, rank_exact};
use cpdzip::typicality::TypicalityParams;
use cpdzip::{Budget, ExactTensor, FactorTuple, ModelSpec, RationalMatrix, RawModel};

#[derive(Parser)]
#[command(name = "cpdzip", version, about = "Compression lab for random finite-alphabet CPD tensors")]
struct Cli {
    /// Model JSON file.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Ceiling on exhaustively enumerated items.
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a model file and list every violation.
    Validate,
    /// Draw factor tuples and their tensors.
    Sample {
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, default_value_t = 1)]
        count: u64,
    },
    /// Encode a tensor (JSON, or a `sample` record) to a codeword file.
    Encode {
        #[arg(long)]
        gamma: String,
        #[arg(long, alias = "input")]
        tensor: PathBuf,
    },
    /// Decode a codeword file back to its tensor.
    Decode {
        #[arg(long)]
        codeword: PathBuf,
    },
    /// Build the codebook and report its size and error.
    Codebook {
        #[arg(long)]
        gamma: String,
        /// Also compute the exact error probability (walks the whole tuple space).
        #[arg(long)]
        stats: bool,
    },
    /// Count the factor tuples that compose to a tensor.
    Count {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        full_rank_only: bool,
    },
    /// Rank and Kruskal rank of a matrix, or of each factor of a sampled tuple.
    Krank {
        #[arg(long, conflicts_with = "factors")]
        matrix: Option<PathBuf>,
        #[arg(long)]
        factors: Option<PathBuf>,
    },
    /// Re-derive every count and closed form of the two worked examples.
    VerifyExamples,
    /// Run a grid experiment from a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Accepts a bare tensor or any object with a `tensor` field.
fn read_tensor(path: &Path) -> Result<ExactTensor> {
    let mut v = read_json(path)?;
    if let Some(t) = v.get_mut("tensor") {
        v = t.take();
    }
    Ok(serde_json::from_value(v)?)
}

impl Cli {
    fn model(&self) -> Result<ModelSpec> {
        let path = self.model.as_ref().context("--model is required")?;
        Ok(ModelSpec::load(path).with_context(|| format!("loading {}", path.display()))?)
    }

    fn budget(&self) -> Budget {
        self.budget.map(Budget).unwrap_or_default()
    }

    fn emit_bytes(&self, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(p) => Ok(write_atomic(p, bytes)?),
            None => Ok(std::io::stdout().write_all(bytes)?),
        }
    }

    fn emit(&self, v: &Value) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(v)?;
        bytes.push(b'\n');
        self.emit_bytes(&bytes)
    }
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.cmd {
        Cmd::Validate => {
            let path = cli.model.as_ref().context("--model is required")?;
            let raw: RawModel = serde_json::from_value(read_json(path)?)?;
            match raw.validate() {
                Ok(()) => {
                    let m = ModelSpec::from_raw(&raw)?;
                    cli.emit(&json!({
                        "valid": true,
                        "order": m.order(), "dim": m.dim(), "components": m.components(),
                        "supersymmetric": m.is_supersymmetric(),
                        "entropy_threshold_nats": cpdzip::model::theoretical_threshold(&m),
                    }))?;
                    Ok(true)
                }
                Err(vs) => {
                    let msgs: Vec<String> = vs.iter().map(ToString::to_string).collect();
                    cli.emit(&json!({ "valid": false, "violations": msgs }))?;
                    Ok(false)
                }
            }
        }
        Cmd::Sample { trial, count } => {
            let m = cli.model()?;
            let sampler = ModelSampler::new(&m);
            let records: Vec<Value> = (*trial..trial + count)
                .map(|t| {
                    let tuple = sampler.sample_tuple(&mut trial_rng(cli.seed, t));
                    json!({ "seed": cli.seed, "trial": t, "factors": tuple, "tensor": tuple.compose() })
                })
                .collect();
            cli.emit(&if records.len() == 1 { records[0].clone() } else { Value::Array(records) })?;
            Ok(true)
        }
        Cmd::Encode { gamma, tensor } => {
            let m = cli.model()?;
            let book = Codebook::build(&m, &TypicalityParams::parse(gamma)?, cli.budget())?;
            let cw = book.encode(&read_tensor(tensor)?)?;
            cli.emit_bytes(&cw.to_bytes())?;
            Ok(true)
        }
        Cmd::Decode { codeword } => {
            let m = cli.model()?;
            let bytes = std::fs::read(codeword).with_context(|| format!("reading {}", codeword.display()))?;
            let cw = Codeword::from_bytes(&bytes).map_err(cpdzip::Error::from)?;
            let params = TypicalityParams::new(cw.header.gamma())?;
            let book = Codebook::build(&m, &params, cli.budget())?;
            cli.emit(&serde_json::to_value(book.decode(&cw)?)?)?;
            Ok(true)
        }
        Cmd::Codebook { gamma, stats } => {
            let m = cli.model()?;
            let book = Codebook::build(&m, &TypicalityParams::parse(gamma)?, cli.budget())?;
            let mut out = json!({
                "codebook_size": book.size(),
                "typical_tuples": book.tuple_count(),
                "distinct_tensors": book.distinct_tensors(),
                "log_m_nats": book.log_size(),
                "typical_per_mode": book.typical().iter().map(|e| e.len()).collect::<Vec<_>>(),
            });
            if *stats {
                let r = book.measure(cli.budget())?;
                let extra = json!({
                    "threshold_per_n": r.threshold_per_n,
                    "entropy_threshold": r.entropy_threshold,
                    "nats_bound": r.nats_bound,
                    "exact_error_prob": fmt_q(&r.exact_error_prob),
                    "error_bound": fmt_q(&r.error_bound),
                    "typicality_masses": r.typicality_masses.iter().map(fmt_q).collect::<Vec<_>>(),
                });
                out.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
            }
            cli.emit(&out)?;
            Ok(true)
        }
        Cmd::Count { tensor, full_rank_only } => {
            let m = cli.model()?;
            let c = count_factorizations(&read_tensor(tensor)?, &m, *full_rank_only, cli.budget())?;
            cli.emit(&json!({
                "count": c.count(),
                "total": c.total,
                "full_rank": c.full_rank,
                "probability": fmt_q(&c.probability),
                "classes": c.classes.as_ref().map(Vec::len),
                "max_class_size": c.max_class_size(),
                "representatives": c.representatives,
            }))?;
            Ok(true)
        }
        Cmd::Krank { matrix, factors } => {
            if let Some(path) = matrix {
                let mat: RationalMatrix = serde_json::from_value(read_json(path)?)?;
                cli.emit(&json!({ "rank": rank_exact(&mat), "kruskal_rank": kruskal_rank(&mat) }))?;
                return Ok(true);
            }
            let path = factors.as_ref().context("one of --matrix or --factors is required")?;
            let m = cli.model()?;
            let mut v = read_json(path)?;
            if let Some(f) = v.get_mut("factors") {
                v = f.take();
            }
            let tuple = FactorTuple::from_json(&m, serde_json::from_value(v)?)?;
            let modes: Vec<Value> = tuple
                .matrices()
                .iter()
                .map(|x| json!({ "rank": x.rank(), "kruskal_rank": x.kruskal_rank() }))
                .collect();
            cli.emit(&json!({
                "modes": modes,
                "kruskal_condition": tuple.kruskal_condition().ok(),
            }))?;
            Ok(true)
        }
        Cmd::VerifyExamples => {
            let table = verify_examples(cli.budget())?;
            let mut text = String::new();
            for row in &table {
                let flag = if row.pass { "PASS" } else { "FAIL" };
                text += &format!("{flag}  {:<44} expected {:<12} observed {}\n", row.name, row.expected, row.observed);
            }
            cli.emit_bytes(text.as_bytes())?;
            Ok(table.iter().all(|r| r.pass))
        }
        Cmd::Experiment { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let res = cpdzip::experiment::run_experiment(&cfg)?;
            let (csv, json) = res.write()?;
            eprintln!("{} rows -> {} and {}", res.rows.len(), csv.display(), json.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(src) = e.downcast_ref::<cpdzip::Error>().and_then(|e| std::error::Error::source(e)) {
                eprintln!("  caused by: {src}");
            }
            ExitCode::from(2)
        }
    }
}
