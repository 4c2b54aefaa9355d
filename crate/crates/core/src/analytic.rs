//! Closed-form quantities: oracle reward bounds, leading-order oracle
//! deficits, random-pull popularity ratios and regret reference curves.

use serde::{Deserialize, Serialize};

use crate::env::ModelConfig;
use crate::error::{Error, Result};
use crate::stats::CompensatedSum;

/// Externality-strength regime of `f(x) = x^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    AlphaLt1 { alpha: f64 },
    AlphaEq1,
    AlphaGt1 { alpha: f64 },
}

impl Regime {
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::RegimeNotApplicable(format!(
                "alpha must be > 0, got {alpha}"
            )));
        }
        Ok(if alpha < 1.0 {
            Regime::AlphaLt1 { alpha }
        } else if alpha == 1.0 {
            Regime::AlphaEq1
        } else {
            Regime::AlphaGt1 { alpha }
        })
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Regime::AlphaLt1 { alpha } | Regime::AlphaGt1 { alpha } => alpha,
            Regime::AlphaEq1 => 1.0,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Regime::AlphaLt1 { .. } => "lt1",
            Regime::AlphaEq1 => "eq1",
            Regime::AlphaGt1 { .. } => "gt1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummationOrder {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBounds {
    pub horizon: u64,
    pub lower: f64,
    pub upper: f64,
}

struct PowerParts {
    alpha: f64,
    mu_best: f64,
    theta_best: f64,
    /// `Σ_{a ≠ a*} θ_a^α`
    theta_rest: f64,
}

fn power_parts(config: &ModelConfig) -> Result<PowerParts> {
    let alpha = config.alpha().ok_or_else(|| {
        Error::RegimeNotApplicable(format!(
            "oracle bounds need f(x) = x^alpha, got {}",
            config.externality().label()
        ))
    })?;
    let best = config.best_arm();
    let theta_rest = config
        .theta()
        .iter()
        .enumerate()
        .filter(|&(a, _)| a != best)
        .map(|(_, &th)| th.powf(alpha))
        .sum();
    Ok(PowerParts {
        alpha,
        mu_best: config.mu()[best],
        theta_best: config.theta()[best],
        theta_rest,
    })
}

fn sum_terms(horizon: u64, order: SummationOrder, term: impl Fn(f64) -> f64) -> f64 {
    let mut acc = CompensatedSum::new();
    match order {
        SummationOrder::Forward => (1..=horizon).for_each(|k| acc.add(term(k as f64))),
        SummationOrder::Reverse => (1..=horizon).rev().for_each(|k| acc.add(term(k as f64))),
    }
    acc.value()
}

/// Both bounds on the oracle's expected cumulative reward, as exact finite sums:
///
/// ```text
/// upper = μ* T − μ* θ^α Σ_{k=1..T} 1 / ((k + θ* − 1)^α + θ^α)
/// lower = μ* T − θ^α Σ_{k=1..T} 1 / (k + θ*)^α − 1
/// ```
///
/// with `θ^α = Σ_{a ≠ a*} θ_a^α`.
pub fn oracle_bounds_ordered(
    config: &ModelConfig,
    horizon: u64,
    order: SummationOrder,
) -> Result<OracleBounds> {
    let p = power_parts(config)?;
    let t = horizon as f64;
    let upper_sum = sum_terms(horizon, order, |k| {
        1.0 / ((k + p.theta_best - 1.0).powf(p.alpha) + p.theta_rest)
    });
    let lower_sum = sum_terms(horizon, order, |k| 1.0 / (k + p.theta_best).powf(p.alpha));
    Ok(OracleBounds {
        horizon,
        upper: p.mu_best * t - p.mu_best * p.theta_rest * upper_sum,
        lower: p.mu_best * t - p.theta_rest * lower_sum - 1.0,
    })
}

pub fn oracle_bounds(config: &ModelConfig, horizon: u64) -> Result<OracleBounds> {
    oracle_bounds_ordered(config, horizon, SummationOrder::Forward)
}

pub fn oracle_upper_bound(config: &ModelConfig, horizon: u64) -> Result<f64> {
    Ok(oracle_bounds(config, horizon)?.upper)
}

pub fn oracle_lower_bound(config: &ModelConfig, horizon: u64) -> Result<f64> {
    Ok(oracle_bounds(config, horizon)?.lower)
}

/// Order of the oracle's deficit `μ* T − E[Γ*_T]`: `T^{1−α}`, `ln T` or 1.
pub fn oracle_asymptote(alpha: f64, horizon: f64) -> Result<f64> {
    Ok(match Regime::from_alpha(alpha)? {
        Regime::AlphaLt1 { alpha } => horizon.powf(1.0 - alpha),
        Regime::AlphaEq1 => horizon.ln(),
        Regime::AlphaGt1 { .. } => 1.0,
    })
}

/// Almost-sure limit of `N_{a*}(t) / N_b(t)` under uniform random pulls for
/// `α < 1`, for every suboptimal arm `b`:
/// `(θ_{a*} / θ_b) (μ_{a*} / μ_b)^{1/(1−α)}`.
///
/// Requires integer-valued `θ`. For `α = 1` the ratio has a random limit and
/// for `α > 1` one arm starves, so neither has a deterministic answer.
pub fn random_pull_ratio_limit(config: &ModelConfig) -> Result<Vec<(usize, f64)>> {
    let alpha = config
        .alpha()
        .ok_or_else(|| Error::RegimeNotApplicable("ratio limit needs f(x) = x^alpha".into()))?;
    if alpha >= 1.0 {
        return Err(Error::RegimeNotApplicable(format!(
            "no deterministic ratio limit for alpha = {alpha} >= 1"
        )));
    }
    if let Some(th) = config.theta().iter().find(|th| th.fract() != 0.0) {
        return Err(Error::RegimeNotApplicable(format!(
            "ratio limit needs integer theta, got {th}"
        )));
    }
    let best = config.best_arm();
    let (mu, theta) = (config.mu(), config.theta());
    Ok((0..config.arms())
        .filter(|&b| b != best)
        .map(|b| {
            let r = (theta[best] / theta[b]) * (mu[best] / mu[b]).powf(1.0 / (1.0 - alpha));
            (b, r)
        })
        .collect())
}

/// Limit in probability of `ln N_{a*}(t) / ln N_b(t)` under uniform random
/// pulls at `α = 1`, for every suboptimal arm `b`: `μ_{a*} / μ_b`.
///
/// The ratio `N_{a*} / N_b` itself has a random limit law in this regime;
/// only the growth exponents are determined.
pub fn random_pull_log_ratio_limit(config: &ModelConfig) -> Result<Vec<(usize, f64)>> {
    if config.alpha() != Some(1.0) {
        return Err(Error::RegimeNotApplicable(
            "log-ratio limit needs f(x) = x".into(),
        ));
    }
    let best = config.best_arm();
    let mu = config.mu();
    Ok((0..config.arms())
        .filter(|&b| b != best)
        .map(|b| (b, mu[best] / mu[b]))
        .collect())
}

/// Unnormalized regret shape for a regime: `T^{1−α} ln^α T`, `ln² T` or `ln^α T`.
pub fn regret_reference(regime: Regime, horizon: f64) -> f64 {
    let l = horizon.ln();
    match regime {
        Regime::AlphaLt1 { alpha } => horizon.powf(1.0 - alpha) * l.powf(alpha),
        Regime::AlphaEq1 => l * l,
        Regime::AlphaGt1 { alpha } => l.powf(alpha),
    }
}

/// A regret shape curve for one regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCurve {
    pub regime: Regime,
}

impl ReferenceCurve {
    pub fn eval(&self, horizon: f64) -> f64 {
        regret_reference(self.regime, horizon)
    }
}

/// Least-squares fit of `ln y = ln C + ln g(T)` with the slope pinned to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub constant: f64,
    /// Residual sum of squares on the log scale.
    pub rss: f64,
    pub points: usize,
}

pub fn fit_log_constant(
    horizons: &[f64],
    values: &[f64],
    shape: impl Fn(f64) -> f64,
) -> Result<LogFit> {
    if horizons.len() != values.len() {
        return Err(Error::Fit(
            "horizon and value columns differ in length".into(),
        ));
    }
    if horizons.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 grid points, got {}",
            horizons.len()
        )));
    }
    let mut residuals = Vec::with_capacity(values.len());
    for (&t, &y) in horizons.iter().zip(values) {
        let g = shape(t);
        if !(y > 0.0 && g > 0.0 && y.is_finite() && g.is_finite()) {
            return Err(Error::Fit(format!(
                "log fit needs positive finite values, got y = {y}, g = {g} at T = {t}"
            )));
        }
        residuals.push(y.ln() - g.ln());
    }
    let log_c = crate::stats::mean(&residuals);
    let rss = residuals.iter().map(|r| (r - log_c) * (r - log_c)).sum();
    Ok(LogFit {
        constant: log_c.exp(),
        rss,
        points: residuals.len(),
    })
}
