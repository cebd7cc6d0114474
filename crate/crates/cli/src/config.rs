//! Experiment configuration: TOML text, strict keys, validation with field paths.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Seed,
    pub steps: usize,
    #[serde(default = "one")]
    pub trials: usize,
    pub problem: ProblemConfig,
    pub selection: SelectionConfig,
    pub relaxation: RelaxationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> usize {
    1
}

/// A 64-bit seed. TOML integers are signed, so values above `i64::MAX`
/// are written as decimal strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed(pub u64);

impl Serialize for Seed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(self.0) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        let bad = || serde::de::Error::custom("seed must be an unsigned 64-bit integer");
        match Raw::deserialize(d)? {
            Raw::Int(v) => u64::try_from(v).map(Seed).map_err(|_| bad()),
            Raw::Str(s) => s.trim().parse::<u64>().map(Seed).map_err(|_| bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ProblemConfig {
    /// `u* = Σ c_i ψ_i`; `indices` (1-based) default to `1..=len`.
    #[serde(rename = "diagonal")]
    Diagonal {
        coefficients: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        indices: Option<Vec<usize>>,
    },
    #[serde(rename = "poisson_1d")]
    Poisson1d { n: usize, splitting: PoissonSplittingConfig },
    /// A dense SPD system; `blocks` are 1-based coordinate sets.
    #[serde(rename = "dense")]
    Dense { matrix: Vec<Vec<f64>>, rhs: Vec<f64>, blocks: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PoissonSplittingConfig {
    OverlappingBlocks { block_size: usize, overlap: usize },
    /// Inclusive 1-based ranges.
    Blocks { ranges: Vec<[usize; 2]> },
    TwoLevel { block_size: usize, overlap: usize, coarse_stride: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionConfig {
    /// Either a named `order` (`cyclic`, `expanding`) or an inline `sequence`.
    Deterministic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sequence: Option<Vec<usize>>,
    },
    Greedy {
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pool: Option<PoolConfig>,
    },
    Random {
        distribution: DistributionConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<TruncationConfig>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PoolConfig {
    SupportUnion,
    FixedFinite { size: usize },
    GrowingNested { initial: usize, growth: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionConfig {
    Uniform { n: usize },
    Explicit { weights: Vec<f64> },
    PowerLaw { s: f64 },
    LogFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    /// `‖π^{(m)} - π‖_1 <= d (m+2)^{-1/2}`.
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationKind {
    Gawr,
    Pure,
    TwoParam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationConfig {
    pub kind: RelaxationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_trace")]
    pub trace: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    #[serde(default)]
    pub bounds: bool,
    /// Inclusive `[first, last]` step range for rate fits; default is the upper decade.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_range: Option<[usize; 2]>,
}

fn default_trace() -> String {
    "trace.csv".into()
}

fn default_summary() -> String {
    "summary.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { trace: default_trace(), summary: default_summary(), bounds: false, rate_range: None }
    }
}

/// One problem found in a config, located by a dotted path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Syntax(String),
    #[error("invalid config:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let issues = config.issues();
    if issues.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(issues))
    }
}

pub fn to_toml(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("configs always serialize")
}

struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue { path: path.into(), message: message.into() });
    }

    fn check(&mut self, ok: bool, path: &str, message: impl Into<String>) {
        if !ok {
            self.push(path, message);
        }
    }
}

impl ExperimentConfig {
    /// Every constraint violation; empty for a valid config.
    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut v = Issues(Vec::new());
        v.check(self.trials >= 1, "trials", "must be at least 1");

        let components = match &self.problem {
            ProblemConfig::Diagonal { coefficients, indices } => {
                v.check(!coefficients.is_empty(), "problem.coefficients", "must be nonempty");
                v.check(coefficients.iter().all(|c| c.is_finite()), "problem.coefficients", "must be finite");
                v.check(coefficients.iter().any(|&c| c != 0.0), "problem.coefficients", "must not all be zero");
                if let Some(idx) = indices {
                    v.check(idx.len() == coefficients.len(), "problem.indices", "must have one entry per coefficient");
                    v.check(idx.iter().all(|&i| i >= 1), "problem.indices", "indices start at 1");
                    let mut sorted = idx.clone();
                    sorted.sort_unstable();
                    sorted.dedup();
                    v.check(sorted.len() == idx.len(), "problem.indices", "must be distinct");
                }
                None
            }
            ProblemConfig::Poisson1d { n, splitting } => {
                v.check(
                    (1..=schwarz_core::models::poisson::MAX_POISSON_DIMENSION).contains(n),
                    "problem.n",
                    format!("must lie in [1, {}]", schwarz_core::models::poisson::MAX_POISSON_DIMENSION),
                );
                match splitting {
                    PoissonSplittingConfig::OverlappingBlocks { block_size, overlap }
                    | PoissonSplittingConfig::TwoLevel { block_size, overlap, .. } => {
                        v.check(*block_size >= 1, "problem.splitting.block_size", "must be positive");
                        v.check(overlap < block_size, "problem.splitting.overlap", "must be smaller than block_size");
                        if let PoissonSplittingConfig::TwoLevel { coarse_stride, .. } = splitting {
                            v.check(*coarse_stride >= 2, "problem.splitting.coarse_stride", "must be at least 2");
                        }
                        // the block count is checked once the splitting is built
                        None
                    }
                    PoissonSplittingConfig::Blocks { ranges } => {
                        v.check(!ranges.is_empty(), "problem.splitting.ranges", "must be nonempty");
                        for (k, [a, b]) in ranges.iter().enumerate() {
                            v.check(
                                1 <= *a && a <= b && b <= n,
                                &format!("problem.splitting.ranges[{k}]"),
                                format!("must satisfy 1 <= first <= last <= {n}"),
                            );
                        }
                        Some(ranges.len())
                    }
                }
            }
            ProblemConfig::Dense { matrix, rhs, blocks } => {
                let n = matrix.len();
                v.check(n >= 1, "problem.matrix", "must be nonempty");
                v.check(matrix.iter().all(|r| r.len() == n), "problem.matrix", "must be square");
                v.check(rhs.len() == n, "problem.rhs", format!("must have {n} entries"));
                v.check(!blocks.is_empty(), "problem.blocks", "must be nonempty");
                for (k, b) in blocks.iter().enumerate() {
                    v.check(
                        !b.is_empty() && b.iter().all(|&i| (1..=n).contains(&i)),
                        &format!("problem.blocks[{k}]"),
                        format!("must be a nonempty subset of 1..={n}"),
                    );
                }
                Some(blocks.len())
            }
        };
        let diagonal = matches!(self.problem, ProblemConfig::Diagonal { .. });

        match &self.selection {
            SelectionConfig::Deterministic { order, period, sequence } => match (order.as_deref(), sequence) {
                (Some(_), Some(_)) | (None, None) => {
                    v.push("selection", "give exactly one of `order` or `sequence`");
                }
                (Some("cyclic"), None) => {
                    v.check(*period != Some(0), "selection.period", "must be positive");
                    v.check(
                        period.is_some() || !diagonal,
                        "selection.period",
                        "required for cyclic order on the diagonal model",
                    );
                }
                (Some("expanding"), None) => {
                    v.check(period.is_none(), "selection.period", "only applies to cyclic order");
                }
                (Some(other), None) => {
                    v.push("selection.order", format!("unknown order `{other}`, expected `cyclic` or `expanding`"));
                }
                (None, Some(seq)) => {
                    v.check(period.is_none(), "selection.period", "only applies to cyclic order");
                    v.check(!seq.is_empty(), "selection.sequence", "must be nonempty");
                    v.check(seq.iter().all(|&i| i >= 1), "selection.sequence", "indices start at 1");
                    if let Some(n) = components {
                        v.check(seq.iter().all(|&i| i <= n), "selection.sequence", format!("indices must not exceed {n}"));
                    }
                }
            },
            SelectionConfig::Greedy { beta, pool } => {
                v.check(*beta > 0.0 && *beta <= 1.0, "selection.beta", format!("must lie in (0, 1], got {beta}"));
                match pool {
                    Some(PoolConfig::SupportUnion) => {
                        v.check(diagonal, "selection.pool", "support_union needs the diagonal problem");
                    }
                    Some(PoolConfig::FixedFinite { size }) => {
                        v.check(*size >= 1, "selection.pool.size", "must be positive");
                        if let Some(n) = components {
                            v.check(*size <= n, "selection.pool.size", format!("must not exceed {n} components"));
                        }
                    }
                    Some(PoolConfig::GrowingNested { initial, growth }) => {
                        v.check(*initial >= 1, "selection.pool.initial", "must be positive");
                        let _ = growth;
                    }
                    None => {}
                }
            }
            SelectionConfig::Random { distribution, truncation } => {
                match distribution {
                    DistributionConfig::Uniform { n } => {
                        v.check(*n >= 1, "selection.distribution.n", "must be positive");
                        if let Some(c) = components {
                            v.check(*n <= c, "selection.distribution.n", format!("must not exceed {c} components"));
                        }
                    }
                    DistributionConfig::Explicit { weights } => {
                        v.check(
                            !weights.is_empty() && weights.iter().all(|w| w.is_finite() && *w >= 0.0),
                            "selection.distribution.weights",
                            "must be nonempty, finite and nonnegative",
                        );
                        let sum: f64 = weights.iter().sum();
                        v.check((sum - 1.0).abs() <= 1e-12, "selection.distribution.weights", format!("must sum to 1, got {sum}"));
                        if let Some(c) = components {
                            v.check(weights.len() <= c, "selection.distribution.weights", format!("must not exceed {c} entries"));
                        }
                    }
                    DistributionConfig::PowerLaw { s } => {
                        v.check(*s > 0.0 && s.is_finite(), "selection.distribution.s", "must be positive");
                    }
                    DistributionConfig::LogFamily => {}
                }
                let infinite = matches!(distribution, DistributionConfig::PowerLaw { .. } | DistributionConfig::LogFamily);
                v.check(
                    !infinite || diagonal || truncation.is_some(),
                    "selection.distribution",
                    "an infinite distribution on a finite splitting needs `truncation`",
                );
                if let Some(t) = truncation {
                    v.check(t.d > 0.0 && t.d.is_finite(), "selection.truncation.d", "must be positive");
                    v.check(infinite, "selection.truncation", "only applies to power_law and log_family");
                }
            }
        }

        v.check(!self.output.trace.is_empty(), "output.trace", "must be a file name");
        v.check(!self.output.summary.is_empty(), "output.summary", "must be a file name");
        v.check(self.output.trace != self.output.summary, "output.summary", "must differ from output.trace");
        if let Some([a, b]) = self.output.rate_range {
            v.check(a <= b, "output.rate_range", "first must not exceed last");
        }
        v.0
    }
}
