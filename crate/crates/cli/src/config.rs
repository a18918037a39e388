use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pdsplit::pdsolve::Algorithm;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricMode {
    Scalar {
        tau: f64,
        sigma1: f64,
        sigma2: f64,
    },
    Diagonal {
        primal: PathBuf,
        box_dual: PathBuf,
        tv_dual: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input: Option<PathBuf>,
    pub kernel_size: usize,
    pub noise_var_1: f64,
    pub noise_var_2: f64,
    pub kappa: f64,
    pub algorithm: Algorithm,
    pub metric: MetricMode,
    pub lambda: f64,
    pub max_iter: usize,
    pub stop_tol: f64,
    pub seed: u64,
    pub output: PathBuf,
    pub reference: Option<PathBuf>,
    pub warm_start: Option<PathBuf>,
    pub error_rho: f64,
    pub reference_iters: usize,
    pub primal_constraint: bool,
    pub record_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            input: None,
            kernel_size: 7,
            noise_var_1: 576.0,
            noise_var_2: 25.0,
            kappa: 0.1,
            algorithm: Algorithm::Pd2,
            metric: MetricMode::Scalar {
                tau: 12.0,
                sigma1: 0.0088,
                sigma2: 0.0088,
            },
            lambda: 1.0,
            max_iter: 1000,
            stop_tol: 0.0,
            seed: 1,
            output: PathBuf::from("out"),
            reference: None,
            warm_start: None,
            error_rho: 0.0,
            reference_iters: 5000,
            primal_constraint: false,
            record_time: false,
        }
    }
}

const KEYS: &[&str] = &[
    "input",
    "kernel_size",
    "noise_var_1",
    "noise_var_2",
    "kappa",
    "algorithm",
    "metric",
    "tau",
    "sigma1",
    "sigma2",
    "metric_primal",
    "metric_box",
    "metric_tv",
    "lambda",
    "max_iter",
    "stop_tol",
    "seed",
    "output",
    "reference",
    "warm_start",
    "error_rho",
    "reference_iters",
    "primal_constraint",
    "record_time",
];

/// Parse flat `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(CliError::Config(format!(
                "line {}: unknown key `{k}`",
                no + 1
            )));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Config(format!(
                "line {}: duplicate key `{k}`",
                no + 1
            )));
        }
    }
    Ok(map)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!(
            "`{key}`: expected true or false, got `{v}`"
        ))),
    }
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "`{key}` must be positive, got {v}"
        )))
    }
}

fn nonnegative(key: &str, v: f64) -> Result<f64, CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "`{key}` must be nonnegative, got {v}"
        )))
    }
}

impl ExperimentConfig {
    /// Relative paths in the text resolve against `base`.
    pub fn from_text(text: &str, base: &Path) -> Result<Self, CliError> {
        let map = parse_pairs(text)?;
        let mut c = ExperimentConfig::default();
        let path = |v: &str| base.join(v);
        let get = |k: &str| map.get(k).map(String::as_str);

        if let Some(v) = get("input") {
            c.input = Some(path(v));
        }
        if let Some(v) = get("kernel_size") {
            c.kernel_size = parse_num("kernel_size", v)?;
            if c.kernel_size % 2 == 0 {
                return Err(CliError::Config(format!(
                    "`kernel_size` must be odd, got {}",
                    c.kernel_size
                )));
            }
        }
        if let Some(v) = get("noise_var_1") {
            c.noise_var_1 = nonnegative("noise_var_1", parse_num("noise_var_1", v)?)?;
        }
        if let Some(v) = get("noise_var_2") {
            c.noise_var_2 = nonnegative("noise_var_2", parse_num("noise_var_2", v)?)?;
        }
        if let Some(v) = get("kappa") {
            c.kappa = positive("kappa", parse_num("kappa", v)?)?;
        }
        if let Some(v) = get("algorithm") {
            c.algorithm = match v.to_ascii_uppercase().as_str() {
                "PD1" => Algorithm::Pd1,
                "PD2" => Algorithm::Pd2,
                "FB" => Algorithm::ForwardBackward,
                _ => {
                    return Err(CliError::Config(format!(
                        "`algorithm`: expected PD1, PD2 or FB, got `{v}`"
                    )))
                }
            };
        }
        let mode = get("metric").unwrap_or("scalar");
        c.metric = match mode {
            "scalar" => {
                for k in ["metric_primal", "metric_box", "metric_tv"] {
                    if map.contains_key(k) {
                        return Err(CliError::Config(format!(
                            "`{k}` requires `metric = diagonal`"
                        )));
                    }
                }
                let MetricMode::Scalar {
                    tau,
                    sigma1,
                    sigma2,
                } = c.metric
                else {
                    unreachable!("default metric is scalar")
                };
                let num = |k: &str, d: f64| -> Result<f64, CliError> {
                    match get(k) {
                        Some(v) => positive(k, parse_num(k, v)?),
                        None => Ok(d),
                    }
                };
                MetricMode::Scalar {
                    tau: num("tau", tau)?,
                    sigma1: num("sigma1", sigma1)?,
                    sigma2: num("sigma2", sigma2)?,
                }
            }
            "diagonal" => {
                for k in ["tau", "sigma1", "sigma2"] {
                    if map.contains_key(k) {
                        return Err(CliError::Config(format!(
                            "`{k}` requires `metric = scalar`"
                        )));
                    }
                }
                let need = |k: &str| {
                    get(k)
                        .map(path)
                        .ok_or_else(|| CliError::Config(format!("`metric = diagonal` needs `{k}`")))
                };
                MetricMode::Diagonal {
                    primal: need("metric_primal")?,
                    box_dual: need("metric_box")?,
                    tv_dual: need("metric_tv")?,
                }
            }
            _ => {
                return Err(CliError::Config(format!(
                    "`metric`: expected scalar or diagonal, got `{mode}`"
                )))
            }
        };
        if let Some(v) = get("lambda") {
            c.lambda = parse_num("lambda", v)?;
            if !(c.lambda > 0.0 && c.lambda <= 1.0) {
                return Err(CliError::Config(format!(
                    "`lambda` must lie in ]0, 1], got {}",
                    c.lambda
                )));
            }
        }
        if let Some(v) = get("max_iter") {
            c.max_iter = parse_num("max_iter", v)?;
        }
        if let Some(v) = get("stop_tol") {
            c.stop_tol = nonnegative("stop_tol", parse_num("stop_tol", v)?)?;
        }
        if let Some(v) = get("seed") {
            c.seed = parse_num("seed", v)?;
        }
        if let Some(v) = get("output") {
            c.output = path(v);
        }
        if let Some(v) = get("reference") {
            c.reference = Some(path(v));
        }
        if let Some(v) = get("warm_start") {
            c.warm_start = Some(path(v));
        }
        if let Some(v) = get("error_rho") {
            c.error_rho = nonnegative("error_rho", parse_num("error_rho", v)?)?;
        }
        if let Some(v) = get("reference_iters") {
            c.reference_iters = parse_num("reference_iters", v)?;
        }
        if let Some(v) = get("primal_constraint") {
            c.primal_constraint = parse_bool("primal_constraint", v)?;
        }
        if let Some(v) = get("record_time") {
            c.record_time = parse_bool("record_time", v)?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_text(&text, base)
    }

    /// Degradation parameters as manifest lines.
    pub fn manifest(&self, width: usize, height: usize) -> String {
        let mut s = String::new();
        let input = self
            .input
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let _ = writeln!(s, "input = {input}");
        let _ = writeln!(s, "width = {width}");
        let _ = writeln!(s, "height = {height}");
        let _ = writeln!(s, "kernel_size = {}", self.kernel_size);
        let _ = writeln!(s, "noise_var_1 = {}", self.noise_var_1);
        let _ = writeln!(s, "noise_var_2 = {}", self.noise_var_2);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

/// Degradation record written next to the observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub input: Option<PathBuf>,
    pub width: usize,
    pub height: usize,
    pub kernel_size: usize,
    pub noise_var_1: f64,
    pub noise_var_2: f64,
    pub seed: u64,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut fields = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("manifest: malformed line `{line}`")))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            fields
                .get(k)
                .map(String::as_str)
                .ok_or_else(|| CliError::Config(format!("manifest: missing `{k}`")))
        };
        let input = get("input")?;
        Ok(Manifest {
            input: (!input.is_empty()).then(|| PathBuf::from(input)),
            width: parse_num("width", get("width")?)?,
            height: parse_num("height", get("height")?)?,
            kernel_size: parse_num("kernel_size", get("kernel_size")?)?,
            noise_var_1: parse_num("noise_var_1", get("noise_var_1")?)?,
            noise_var_2: parse_num("noise_var_2", get("noise_var_2")?)?,
            seed: parse_num("seed", get("seed")?)?,
        })
    }
}
