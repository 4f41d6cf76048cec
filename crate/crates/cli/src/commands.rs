use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use inar_core::estimate::fit;
use inar_core::formats::{
    read_path_csv, read_samples_csv, write_histogram_csv, write_path_csv, write_qq_csv,
    write_samples_csv,
};
use inar_core::inference::{
    confidence_intervals, histogram, qq_data, sandwich_covariance, ConfidenceInterval,
    NormalityReport,
};
use inar_core::montecarlo::{component_name, normality_suite, run_experiment, HISTOGRAM_BINS};
use inar_core::simulate::{simulate_path, RngStream};

use crate::config::{build_params, digest_json, parse_config, RunConfig};
use crate::error::{io_err, CliError, CliResult};

pub const TOOL: &str = "inar";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub base_seed: Option<u64>,
    pub config_digest: String,
}

impl Provenance {
    fn new(base_seed: Option<u64>, config_digest: String) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            base_seed,
            config_digest,
        }
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serialises");
    text.push('\n');
    write_text(path, &text)
}

fn resolve(out_dir: &Path, explicit: Option<PathBuf>, default_name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| out_dir.join(default_name))
}

pub struct SimulateArgs {
    pub config: Option<PathBuf>,
    pub nu: Option<f64>,
    pub kernel: Option<String>,
    pub len: Option<usize>,
    pub seed: Option<u64>,
    pub stream: u64,
    pub out: Option<PathBuf>,
}

pub fn simulate(args: SimulateArgs, out_dir: &Path) -> CliResult<PathBuf> {
    let from_config = args
        .config
        .as_deref()
        .map(|p| read_text(p).and_then(|t| parse_config(&t)))
        .transpose()?;
    let nu = args
        .nu
        .or(from_config.as_ref().map(|c| c.nu))
        .ok_or_else(|| CliError::validation("nu", "is required (flag --nu or config)"))?;
    let kernel = args
        .kernel
        .or(from_config.as_ref().map(|c| c.kernel.clone()))
        .unwrap_or_else(|| "none".to_string());
    let len = args
        .len
        .or(from_config.as_ref().map(|c| c.len))
        .ok_or_else(|| CliError::validation("T", "is required (flag --T or config)"))?;
    if len == 0 {
        return Err(CliError::validation("T", "must be at least 1"));
    }
    let seed = args
        .seed
        .or(from_config.as_ref().map(|c| c.seed))
        .ok_or_else(|| CliError::validation("seed", "is required (flag --seed or config)"))?;

    let params = build_params(nu, &kernel)?;
    let path = simulate_path(&params, len, &mut RngStream::new(seed, args.stream))?;
    let target = resolve(out_dir, args.out, "path.csv");
    write_text(&target, &write_path_csv(&path))?;
    Ok(target)
}

#[derive(Serialize)]
struct EstimateReport {
    #[serde(flatten)]
    provenance: Provenance,
    input: String,
    mu_hat: f64,
    beta_hat: Vec<f64>,
    p: usize,
    #[serde(rename = "T")]
    len: usize,
    residual_norm: f64,
    rcond: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    confidence_level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    confidence_intervals: Option<Vec<ConfidenceInterval>>,
}

pub struct EstimateArgs {
    pub path: PathBuf,
    pub p: usize,
    pub ci: Option<f64>,
    pub out: Option<PathBuf>,
}

pub fn estimate(args: EstimateArgs, out_dir: &Path) -> CliResult<PathBuf> {
    let text = read_text(&args.path)?;
    let path = read_path_csv(&text)?;
    let result = fit(&path, args.p)?;

    let intervals = match args.ci {
        Some(level) => {
            let theta = result.theta();
            let cov = sandwich_covariance(&path, &theta, args.p)?;
            Some(confidence_intervals(&theta, &cov, level)?)
        }
        None => None,
    };

    #[derive(Serialize)]
    struct Inputs<'a> {
        counts: &'a [u64],
        p: usize,
        ci: Option<f64>,
    }
    let digest = digest_json(&Inputs {
        counts: &path.counts,
        p: args.p,
        ci: args.ci,
    });

    if let Some(ci) = &intervals {
        let mut table = String::from("component,estimate,std_error,lower,upper\n");
        for (k, c) in ci.iter().enumerate() {
            table.push_str(&format!(
                "{},{},{},{},{}\n",
                component_name(k),
                c.estimate,
                c.std_error,
                c.lower,
                c.upper
            ));
        }
        write_text(&out_dir.join("ci.csv"), &table)?;
    }

    let report = EstimateReport {
        provenance: Provenance::new(None, digest),
        input: args.path.display().to_string(),
        mu_hat: result.mu_hat,
        beta_hat: result.beta_hat,
        p: result.p,
        len: result.len,
        residual_norm: result.residual_norm,
        rcond: result.rcond,
        confidence_level: args.ci,
        confidence_intervals: intervals,
    };
    let target = resolve(out_dir, args.out, "estimate.json");
    write_json(&target, &report)?;
    Ok(target)
}

#[derive(Serialize)]
#[serde(untagged)]
enum ComponentEntry {
    Report {
        jb_stat: f64,
        jb_p: f64,
        sw_stat: f64,
        sw_p: f64,
        sample_size: usize,
    },
    Failed {
        error: &'static str,
        message: String,
    },
}

impl ComponentEntry {
    fn from_result(result: &inar_core::Result<NormalityReport>) -> Self {
        match result {
            Ok(r) => ComponentEntry::Report {
                jb_stat: r.jb_stat,
                jb_p: r.jb_p,
                sw_stat: r.sw_stat,
                sw_p: r.sw_p,
                sample_size: r.sample_size,
            },
            Err(e) => ComponentEntry::Failed {
                error: e.kind(),
                message: e.to_string(),
            },
        }
    }
}

#[derive(Serialize)]
struct McReport<'a> {
    #[serde(flatten)]
    provenance: Provenance,
    case: Option<&'a str>,
    nu: f64,
    kernel: &'a str,
    #[serde(rename = "T")]
    len: usize,
    p: usize,
    n_experiments: usize,
    cap_negatives: bool,
    mean_theta: &'a [f64],
    mse: f64,
    rel_err_theta: f64,
    rel_err_alpha: f64,
    failures: usize,
    samples_for_normality: &'static str,
    normality: BTreeMap<String, ComponentEntry>,
}

pub struct McArgs {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub samples: bool,
}

pub fn monte_carlo(args: McArgs, out_dir: &Path) -> CliResult<PathBuf> {
    let mut config: RunConfig = parse_config(&read_text(&args.config)?)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let summary = run_experiment(&config.mc_config())?;

    let mut normality = BTreeMap::new();
    match normality_suite(&summary, &config.components) {
        Ok(diagnostics) => {
            for (c, diag) in diagnostics {
                let name = component_name(c);
                match &diag {
                    Ok(d) => {
                        write_text(
                            &out_dir.join(format!("qq_{name}.csv")),
                            &write_qq_csv(&d.qq),
                        )?;
                        write_text(
                            &out_dir.join(format!("hist_{name}.csv")),
                            &write_histogram_csv(&d.histogram),
                        )?;
                    }
                    Err(e) => log::warn!("normality diagnostics for {name}: {e}"),
                }
                normality.insert(name, ComponentEntry::from_result(&diag.map(|d| d.report)));
            }
        }
        // too few successful replications for any test
        Err(e) => log::warn!("normality diagnostics skipped: {e}"),
    }
    if args.samples {
        write_text(&out_dir.join("samples.csv"), &write_samples_csv(&summary))?;
    }

    let report = McReport {
        provenance: Provenance::new(Some(config.seed), config.digest()),
        case: config.case.as_deref(),
        nu: config.nu,
        kernel: &config.kernel,
        len: config.len,
        p: config.p,
        n_experiments: config.n_experiments,
        cap_negatives: config.cap_negatives,
        mean_theta: &summary.mean_theta,
        mse: summary.mse,
        rel_err_theta: summary.rel_err_theta,
        rel_err_alpha: summary.rel_err_alpha,
        failures: summary.failures,
        samples_for_normality: "raw",
        normality,
    };
    let target = out_dir.join("summary.json");
    write_json(&target, &report)?;
    Ok(target)
}

#[derive(Serialize)]
struct NormalityFile {
    #[serde(flatten)]
    provenance: Provenance,
    input: String,
    components: BTreeMap<String, ComponentEntry>,
}

pub struct NormalityArgs {
    pub samples: PathBuf,
    pub components: Option<Vec<String>>,
}

pub fn normality(args: NormalityArgs, out_dir: &Path) -> CliResult<PathBuf> {
    let text = read_text(&args.samples)?;
    let table = read_samples_csv(&text)?;
    let names = args
        .components
        .unwrap_or_else(|| table.columns.iter().take(3).cloned().collect());

    let mut components = BTreeMap::new();
    for name in &names {
        let sample = table.column(name).ok_or_else(|| {
            CliError::validation("components", format!("no column `{name}` in samples file"))
        })?;
        let report = NormalityReport::from_sample(&sample);
        if report.is_ok() {
            write_text(
                &out_dir.join(format!("qq_{name}.csv")),
                &write_qq_csv(&qq_data(&sample)?),
            )?;
            write_text(
                &out_dir.join(format!("hist_{name}.csv")),
                &write_histogram_csv(&histogram(&sample, HISTOGRAM_BINS)?),
            )?;
        }
        components.insert(name.clone(), ComponentEntry::from_result(&report));
    }

    #[derive(Serialize)]
    struct Inputs<'a> {
        rows: &'a [Vec<f64>],
        columns: &'a [String],
        components: &'a [String],
    }
    let digest = digest_json(&Inputs {
        rows: &table.rows,
        columns: &table.columns,
        components: &names,
    });
    let report = NormalityFile {
        provenance: Provenance::new(None, digest),
        input: args.samples.display().to_string(),
        components,
    };
    let target = out_dir.join("normality.json");
    write_json(&target, &report)?;
    Ok(target)
}
