//! Discrete probability distributions on the positive integers.
//!
//! Analytic families keep a head table of partial sums; beyond the head,
//! masses and tails come from Euler-Maclaurin expansions, and sampling
//! inverts the tail by galloping bisection. Indices larger than
//! [`SATURATED_INDEX`] are reported as `usize::MAX`.

use rand::Rng;

use crate::error::{Error, Result};

const EXPLICIT_SUM_TOL: f64 = 1e-12;
const POWER_LAW_HEAD: usize = 4096;
const LOG_FAMILY_HEAD: usize = 16384;
const LOG_TAIL_QUADRATURE_INTERVALS: usize = 1024;
/// Galloping stops here; further indices collapse to `usize::MAX`.
pub const SATURATED_INDEX: usize = 1 << 62;

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionFamily {
    /// `π_i = w_i` for `i = 1..=len`.
    Explicit(Vec<f64>),
    /// `π_i = c_s i^{-(1+s)}`.
    PowerLaw { s: f64 },
    /// `π_i = c / (i log^2(i+1))`.
    LogFamily,
}

impl DistributionFamily {
    pub fn describe(&self) -> String {
        match self {
            DistributionFamily::Explicit(w) => format!("explicit(len={})", w.len()),
            DistributionFamily::PowerLaw { s } => format!("power_law(s={s})"),
            DistributionFamily::LogFamily => "log_family".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Explicit { weights: Vec<f64>, suffix: Vec<f64> },
    PowerLaw { exponent: f64 },
    Log,
}

/// A normalized distribution ready for evaluation and sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    family: DistributionFamily,
    shape: Shape,
    /// `c` with `π_i = c f(i)`; 1 for explicit weights.
    normalization: f64,
    /// `cdf[k-1] = Σ_{i<=k} π_i` over the head.
    cdf: Vec<f64>,
}

impl Distribution {
    pub fn new(family: DistributionFamily) -> Result<Self> {
        match family {
            DistributionFamily::Explicit(w) => Self::explicit(w),
            DistributionFamily::PowerLaw { s } => Self::power_law(s),
            DistributionFamily::LogFamily => Self::log_family(),
        }
    }

    pub fn explicit(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("no weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("weight {w} is negative or not finite")));
        }
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cdf.push(acc);
        }
        if (acc - 1.0).abs() > EXPLICIT_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {acc}, not 1 (tolerance {EXPLICIT_SUM_TOL:e})"
            )));
        }
        let mut suffix = vec![0.0; weights.len() + 1];
        for k in (0..weights.len()).rev() {
            suffix[k] = suffix[k + 1] + weights[k];
        }
        Ok(Self {
            family: DistributionFamily::Explicit(weights.clone()),
            shape: Shape::Explicit { weights, suffix },
            normalization: 1.0,
            cdf,
        })
    }

    /// Uniform on `{1, ..., n}`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("uniform support must be nonempty".into()));
        }
        Self::explicit(vec![1.0 / n as f64; n])
    }

    pub fn power_law(s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidDistribution(format!("power-law exponent s = {s} must be positive")));
        }
        let shape = Shape::PowerLaw { exponent: 1.0 + s };
        Ok(Self::analytic(DistributionFamily::PowerLaw { s }, shape, POWER_LAW_HEAD))
    }

    pub fn log_family() -> Result<Self> {
        Ok(Self::analytic(DistributionFamily::LogFamily, Shape::Log, LOG_FAMILY_HEAD))
    }

    fn analytic(family: DistributionFamily, shape: Shape, head: usize) -> Self {
        // partial sums summed smallest-first for the total, largest-first for the table
        let weights: Vec<f64> = (1..=head).map(|i| shape.weight(i)).collect();
        let head_total: f64 = weights.iter().rev().sum();
        let total = head_total + shape.tail_sum(head);
        let normalization = 1.0 / total;
        let mut cdf = Vec::with_capacity(head);
        let mut acc = 0.0;
        for w in weights {
            acc += w;
            cdf.push(acc * normalization);
        }
        Self {
            family,
            shape,
            normalization,
            cdf,
        }
    }

    pub fn family(&self) -> &DistributionFamily {
        &self.family
    }

    pub fn describe(&self) -> String {
        self.family.describe()
    }

    /// The constant `c` in `π_i = c f(i)`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Last index with positive mass; `None` for infinite support.
    pub fn support_len(&self) -> Option<usize> {
        match &self.shape {
            Shape::Explicit { weights, .. } => weights.iter().rposition(|&w| w > 0.0).map(|p| p + 1),
            _ => None,
        }
    }

    pub fn prob(&self, i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        match &self.shape {
            Shape::Explicit { weights, .. } => weights.get(i - 1).copied().unwrap_or(0.0),
            shape => self.normalization * shape.weight(i),
        }
    }

    /// `Σ_{i>k} π_i`.
    pub fn tail_mass(&self, k: usize) -> f64 {
        match &self.shape {
            Shape::Explicit { suffix, .. } => suffix.get(k).copied().unwrap_or(0.0),
            shape => {
                let head = self.cdf.len();
                if k >= head {
                    self.normalization * shape.tail_sum(k)
                } else {
                    let head_rest = if k == 0 { self.cdf[head - 1] } else { self.cdf[head - 1] - self.cdf[k - 1] };
                    head_rest + self.normalization * shape.tail_sum(head)
                }
            }
        }
    }

    /// `Σ_{i<=k} π_i`.
    pub fn cdf(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        match self.cdf.get(k - 1) {
            Some(&v) => v,
            None => match &self.shape {
                Shape::Explicit { .. } => *self.cdf.last().expect("nonempty"),
                _ => 1.0 - self.tail_mass(k),
            },
        }
    }

    /// Smallest `k` with `cdf(k) > u`, capped at `limit`.
    fn invert(&self, u: f64, limit: usize) -> usize {
        let head = self.cdf.len();
        let p = self.cdf.partition_point(|&x| x <= u);
        if p < head {
            return (p + 1).min(limit);
        }
        if matches!(self.shape, Shape::Explicit { .. }) || limit <= head {
            return head.min(limit);
        }
        // smallest k > head with tail_mass(k) < 1 - u
        let target = 1.0 - u;
        let mut lo = head;
        let mut hi = head.saturating_mul(2);
        while self.tail_mass(hi) >= target {
            if hi >= SATURATED_INDEX || hi >= limit {
                return if limit == usize::MAX { usize::MAX } else { limit };
            }
            lo = hi;
            hi = hi.saturating_mul(2);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail_mass(mid) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi.min(limit)
    }

    /// Draws an index by inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.invert(u, usize::MAX)
    }

    /// Draws from the restriction to `{1..=cutoff}`, renormalized.
    pub fn sample_truncated<R: Rng + ?Sized>(&self, cutoff: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.invert(u * self.cdf(cutoff), cutoff)
    }

    /// `‖π^{trunc} - π‖_1` for the truncate-and-renormalize construction at `cutoff`:
    /// tail mass plus the renormalization shift, `2 Σ_{i>cutoff} π_i`.
    pub fn truncation_distance(&self, cutoff: usize) -> f64 {
        2.0 * self.tail_mass(cutoff)
    }

    /// Smallest cutoff `N >= 1` whose truncation lies within `budget` in `ℓ^1`.
    pub fn truncation_cutoff(&self, budget: f64) -> Result<usize> {
        if budget.is_nan() || budget <= 0.0 {
            return Err(Error::param("budget", format!("must be positive, got {budget}")));
        }
        // slack keeps an independent recomputation of the distance within budget
        let fits = |k: usize| self.truncation_distance(k) <= budget * (1.0 - 1e-12);
        if let Some(n) = self.support_len() {
            return Ok((1..=n).find(|&k| fits(k)).unwrap_or(n));
        }
        let mut lo = 0usize;
        let mut hi = 1usize;
        while !fits(hi) {
            if hi >= SATURATED_INDEX {
                return Err(Error::param("budget", format!("{budget:e} needs a cutoff beyond {SATURATED_INDEX}")));
            }
            lo = hi;
            hi = hi.saturating_mul(2);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if fits(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `π` restricted to `{1..=cutoff}` and renormalized.
    pub fn truncated(&self, cutoff: usize) -> Result<Distribution> {
        if cutoff == 0 {
            return Err(Error::param("cutoff", "must be at least 1"));
        }
        let mass = self.cdf(cutoff);
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::InvalidDistribution(format!("no mass on 1..={cutoff}")));
        }
        let weights: Vec<f64> = (1..=cutoff).map(|i| self.prob(i) / mass).collect();
        let total: f64 = weights.iter().sum();
        Distribution::explicit(weights.iter().map(|w| w / total).collect())
    }
}

impl Shape {
    /// Unnormalized weight `f(i)`.
    fn weight(&self, i: usize) -> f64 {
        let x = i as f64;
        match self {
            Shape::Explicit { weights, .. } => weights.get(i - 1).copied().unwrap_or(0.0),
            Shape::PowerLaw { exponent } => x.powf(-exponent),
            Shape::Log => 1.0 / (x * (x + 1.0).ln().powi(2)),
        }
    }

    /// `Σ_{j>k} f(j)` by Euler-Maclaurin for `k` beyond the head.
    fn tail_sum(&self, k: usize) -> f64 {
        let x = k as f64;
        match self {
            Shape::Explicit { suffix, .. } => suffix.get(k).copied().unwrap_or(0.0),
            Shape::PowerLaw { exponent: p } => {
                let p = *p;
                x.powf(1.0 - p) / (p - 1.0) - 0.5 * x.powf(-p) + p * x.powf(-p - 1.0) / 12.0
                    - p * (p + 1.0) * (p + 2.0) * x.powf(-p - 3.0) / 720.0
            }
            Shape::Log => {
                let l = (x + 1.0).ln();
                let f = 1.0 / (x * l * l);
                let df = -1.0 / (x * x * l * l) - 2.0 / (x * (x + 1.0) * l * l * l);
                log_family_integral(x) - 0.5 * f - df / 12.0
            }
        }
    }
}

/// `∫_k^∞ dx / (x log^2(x+1))`, substituting `x = e^{1/v}` to obtain the
/// smooth integrand `(1 + v log(1 + e^{-1/v}))^{-2}` on `(0, 1/log k]`.
fn log_family_integral(k: f64) -> f64 {
    let upper = 1.0 / k.ln();
    let g = |v: f64| {
        if v <= 0.0 {
            1.0
        } else {
            let delta = (-1.0 / v).exp().ln_1p();
            1.0 / (1.0 + v * delta).powi(2)
        }
    };
    let n = LOG_TAIL_QUADRATURE_INTERVALS;
    let h = upper / n as f64;
    let mut acc = g(0.0) + g(upper);
    for j in 1..n {
        acc += if j % 2 == 1 { 4.0 } else { 2.0 } * g(j as f64 * h);
    }
    acc * h / 3.0
}

/// A step-dependent distribution `π^{(m)}`.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSchedule {
    Fixed(Distribution),
    /// `π` truncated at the smallest cutoff with `‖π^{(m)} - π‖_1 <= D (m+2)^{-1/2}`.
    Truncated { base: Distribution, budget: f64 },
}

impl DistributionSchedule {
    pub fn truncated(base: Distribution, budget: f64) -> Result<Self> {
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::param("truncation.d", format!("must be positive, got {budget}")));
        }
        Ok(DistributionSchedule::Truncated { base, budget })
    }

    pub fn base(&self) -> &Distribution {
        match self {
            DistributionSchedule::Fixed(d) => d,
            DistributionSchedule::Truncated { base, .. } => base,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DistributionSchedule::Fixed(d) => d.describe(),
            DistributionSchedule::Truncated { base, budget } => format!("truncated({}, D={budget})", base.describe()),
        }
    }

    /// `D (m+2)^{-1/2}`, or `None` for a fixed distribution.
    pub fn budget_at(&self, m: usize) -> Option<f64> {
        match self {
            DistributionSchedule::Fixed(_) => None,
            DistributionSchedule::Truncated { budget, .. } => Some(budget / ((m + 2) as f64).sqrt()),
        }
    }

    /// Cutoff `N_m` for a truncated schedule.
    pub fn cutoff_at(&self, m: usize) -> Result<Option<usize>> {
        match self {
            DistributionSchedule::Fixed(_) => Ok(None),
            DistributionSchedule::Truncated { base, .. } => {
                base.truncation_cutoff(self.budget_at(m).expect("truncated")).map(Some)
            }
        }
    }

    /// `π^{(m)}` as an explicit distribution (truncated schedules only).
    pub fn distribution_at(&self, m: usize) -> Result<Distribution> {
        match self {
            DistributionSchedule::Fixed(d) => match d.support_len() {
                Some(_) => Ok(d.clone()),
                None => Err(Error::Unsupported("fixed infinite distribution has no finite form".into())),
            },
            DistributionSchedule::Truncated { base, .. } => {
                base.truncated(self.cutoff_at(m)?.expect("truncated"))
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<usize> {
        match self {
            DistributionSchedule::Fixed(d) => Ok(d.sample(rng)),
            DistributionSchedule::Truncated { base, .. } => {
                let cutoff = self.cutoff_at(m)?.expect("truncated");
                Ok(base.sample_truncated(cutoff, rng))
            }
        }
    }
}

/// `Σ_i π_i^2 (1 - π_i)^m`, summed until the remaining terms are below
/// `1e-16` or ten million indices have been visited.
pub fn squared_mass_decay(pi: &Distribution, m: usize) -> f64 {
    const MAX_TERMS: usize = 10_000_000;
    let limit = pi.support_len().unwrap_or(MAX_TERMS);
    let mut acc = 0.0;
    for i in 1..=limit {
        let p = pi.prob(i);
        acc += p * p * (1.0 - p).powi(m as i32);
        // the remainder is at most π_i · tail(i) for decreasing π
        if pi.support_len().is_none() && i % 1024 == 0 && p * pi.tail_mass(i) < 1e-16 {
            break;
        }
    }
    acc
}
