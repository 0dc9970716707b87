//! Monte-Carlo evaluation of decisional quantizers against utility oracles.

use std::cell::RefCell;
use std::collections::BTreeMap;

use crate::algopt::{doq_alternate, initial_decisions, AlternatingConfig, RepresentativeMode};
use crate::error::{DoqError, Result};
use crate::exec;
use crate::model::{DecisionSet, Param, SampleSet, SumRateConfig, UtilityModel};
use crate::quantizer::DecisionalQuantizer;

/// Reference for the best achievable utility `U(g)` at a realization.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleSpec {
    MaxOverDecisionSet(DecisionSet),
    /// Closed-form optimum of the sum rate under the total power budget.
    WaterFilling,
    /// Multi-band EE maximized over `{0} ∪ resolution` log-spaced powers per
    /// band in `[p_min, p_max]`.
    FineGrid {
        resolution: usize,
        p_min: f64,
        p_max: f64,
    },
}

impl OracleSpec {
    pub fn fine_grid_default() -> Self {
        OracleSpec::FineGrid {
            resolution: 64,
            p_min: 0.1,
            p_max: 1000.0,
        }
    }

    pub fn name(&self) -> String {
        match self {
            OracleSpec::MaxOverDecisionSet(d) => format!("max-over-decision-set({})", d.len()),
            OracleSpec::WaterFilling => "water-filling".into(),
            OracleSpec::FineGrid {
                resolution,
                p_min,
                p_max,
            } => format!("fine-grid({resolution}, {p_min}..{p_max})"),
        }
    }
}

/// Sum-rate optimal powers under `sum p_i = p_total`:
/// `p_i = max(0, mu - sigma2 / g_i)` with the water level `mu` found by
/// sorting the per-band noise floors.
pub fn water_filling(g: &[f64], cfg: &SumRateConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if g.len() != cfg.n_bands {
        return Err(DoqError::domain(format!(
            "expected {} gains, got {}",
            cfg.n_bands,
            g.len()
        )));
    }
    if g.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(DoqError::domain("gains must be positive and finite"));
    }
    let floors: Vec<f64> = g.iter().map(|gi| cfg.sigma2 / gi).collect();
    let mut order: Vec<usize> = (0..floors.len()).collect();
    order.sort_by(|&a, &b| floors[a].total_cmp(&floors[b]).then(a.cmp(&b)));
    let mut level = 0.0;
    let mut prefix = 0.0;
    for (k, &i) in order.iter().enumerate() {
        prefix += floors[i];
        let candidate = (cfg.p_total + prefix) / (k + 1) as f64;
        let next_floor = order.get(k + 1).map(|&j| floors[j]);
        level = candidate;
        if next_floor.is_none_or(|f| candidate <= f) {
            break;
        }
    }
    let mut p: Vec<f64> = floors.iter().map(|f| (level - f).max(0.0)).collect();
    // absorb rounding so the budget holds to the last bit available
    let total: f64 = p.iter().sum();
    let active: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let fix = (cfg.p_total - total) / active.len().max(1) as f64;
    for &i in &active {
        p[i] = (p[i] + fix).max(0.0);
    }
    Ok(p)
}

/// Largest violation of the optimality conditions of a sum-rate allocation:
/// budget mismatch, spread of marginal rates on active bands, and excess
/// marginal rate on inactive bands.
pub fn water_filling_kkt_residual(p: &[f64], g: &[f64], cfg: &SumRateConfig) -> f64 {
    let total: f64 = p.iter().sum();
    let mut worst = (total - cfg.p_total).abs() / cfg.p_total;
    let marginal = |i: usize| g[i] / (cfg.sigma2 + p[i] * g[i]);
    let active: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    if active.is_empty() {
        return f64::INFINITY;
    }
    let lambda = active.iter().map(|&i| marginal(i)).sum::<f64>() / active.len() as f64;
    for &i in &active {
        worst = worst.max((marginal(i) - lambda).abs() / lambda);
    }
    for i in (0..p.len()).filter(|&i| p[i] <= 0.0) {
        worst = worst.max(((marginal(i) - lambda) / lambda).max(0.0));
    }
    if p.iter().any(|&x| x < 0.0) {
        worst = f64::INFINITY;
    }
    worst
}

fn fine_grid_ee(
    g: &[f64],
    c: f64,
    sigma2: f64,
    resolution: usize,
    p_min: f64,
    p_max: f64,
) -> Result<f64> {
    if resolution < 2 || !(p_min > 0.0 && p_max > p_min) {
        return Err(DoqError::domain("fine grid needs resolution >= 2 and 0 < p_min < p_max"));
    }
    let n = g.len();
    let levels_per_band = resolution + 1;
    let combos = (levels_per_band as f64).powi(n as i32);
    if combos > 5e7 {
        return Err(DoqError::Unsupported(format!(
            "fine grid with {combos} points per realization"
        )));
    }
    let ratio = (p_max / p_min).ln() / (resolution - 1) as f64;
    let mut powers = vec![0.0];
    powers.extend((0..resolution).map(|i| p_min * (ratio * i as f64).exp()));
    // success term of every band at every level
    let success: Vec<Vec<f64>> = g
        .iter()
        .map(|&gi| {
            powers
                .iter()
                .map(|&p| if p > 0.0 { (-c * sigma2 / (p * gi)).exp() } else { 0.0 })
                .collect()
        })
        .collect();
    let mut idx = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    loop {
        // odometer increment; the all-zero start is skipped
        let mut b = 0;
        loop {
            if b == n {
                return Ok(best);
            }
            idx[b] += 1;
            if idx[b] < levels_per_band {
                break;
            }
            idx[b] = 0;
            b += 1;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (band, &l) in idx.iter().enumerate() {
            num += success[band][l];
            den += powers[l];
        }
        let u = num / den;
        if u > best {
            best = u;
        }
    }
}

pub fn oracle_utility(model: &UtilityModel, g: &Param, oracle: &OracleSpec) -> Result<f64> {
    match (oracle, model, g) {
        (OracleSpec::MaxOverDecisionSet(d), _, _) => model.best_decision(d, g).map(|(_, u)| u),
        (OracleSpec::WaterFilling, UtilityModel::SumRate(cfg), Param::Gains(gv)) => {
            let p = water_filling(gv, cfg)?;
            crate::model::eval_sum_rate(&p, gv, cfg)
        }
        (
            OracleSpec::FineGrid {
                resolution,
                p_min,
                p_max,
            },
            UtilityModel::MultiBandEe(cfg),
            Param::Gains(gv),
        ) => {
            if gv.len() != cfg.n_bands || gv.iter().any(|x| !(*x > 0.0)) {
                return Err(DoqError::domain("gains must be positive, one per band"));
            }
            fine_grid_ee(gv, cfg.c, cfg.sigma2, *resolution, *p_min, *p_max)
        }
        (oracle, _, _) => Err(DoqError::domain(format!(
            "oracle {} does not apply to this utility model",
            oracle.name()
        ))),
    }
}

/// Per-sample decision index and realized utility of `q`.
pub fn decision_utilities(
    q: &DecisionalQuantizer,
    model: &UtilityModel,
    d: &DecisionSet,
    samples: &SampleSet,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let pairs = exec::try_map_indexed(samples.len(), |t| {
        let g = &samples.params()[t];
        let k = q.quantize_features(g, &samples.features()[t])?;
        let decision = d.get(k).ok_or_else(|| {
            DoqError::domain(format!("quantizer returned index {k} for {} decisions", d.len()))
        })?;
        Ok((k, model.utility(decision, g)?))
    })?;
    Ok(pairs.into_iter().unzip())
}

pub fn expected_utility(
    q: &DecisionalQuantizer,
    model: &UtilityModel,
    d: &DecisionSet,
    samples: &SampleSet,
) -> Result<f64> {
    let (_, u) = decision_utilities(q, model, d, samples)?;
    exec::mean(&u)
}

pub fn oracle_utilities(model: &UtilityModel, samples: &SampleSet, oracle: &OracleSpec) -> Result<Vec<f64>> {
    exec::try_map_indexed(samples.len(), |t| oracle_utility(model, &samples.params()[t], oracle))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSummary {
    /// Mean per-sample relative gap, percent.
    pub loss_pct: f64,
    /// Samples skipped because the oracle value was zero.
    pub skipped: usize,
}

/// Mean of `|u* - u| / u*` in percent over paired per-sample values.
pub fn relative_loss_from(oracle: &[f64], achieved: &[f64]) -> Result<LossSummary> {
    if oracle.len() != achieved.len() || oracle.is_empty() {
        return Err(DoqError::domain("relative loss needs nonempty paired values"));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for (&o, &a) in oracle.iter().zip(achieved) {
        if o == 0.0 {
            continue;
        }
        sum += ((o - a) / o).abs();
        used += 1;
    }
    let skipped = oracle.len() - used;
    if used == 0 {
        return Err(DoqError::domain("oracle utility is zero on every sample"));
    }
    Ok(LossSummary {
        loss_pct: 100.0 * sum / used as f64,
        skipped,
    })
}

pub fn relative_loss(
    q: &DecisionalQuantizer,
    model: &UtilityModel,
    d: &DecisionSet,
    samples: &SampleSet,
    oracle: &OracleSpec,
) -> Result<LossSummary> {
    let (_, achieved) = decision_utilities(q, model, d, samples)?;
    let best = oracle_utilities(model, samples, oracle)?;
    relative_loss_from(&best, &achieved)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub expected_utility: f64,
    pub oracle_expected_utility: f64,
    pub relative_loss_pct: f64,
    pub skipped: usize,
    pub per_decision_counts: Vec<usize>,
    pub n_samples: usize,
    pub seed: u64,
    pub oracle: String,
}

pub fn evaluate(
    q: &DecisionalQuantizer,
    model: &UtilityModel,
    d: &DecisionSet,
    samples: &SampleSet,
    oracle: &OracleSpec,
) -> Result<EvaluationReport> {
    let (indices, achieved) = decision_utilities(q, model, d, samples)?;
    let best = oracle_utilities(model, samples, oracle)?;
    let loss = relative_loss_from(&best, &achieved)?;
    let mut counts = vec![0usize; d.len()];
    for k in indices {
        counts[k] += 1;
    }
    Ok(EvaluationReport {
        expected_utility: exec::mean(&achieved)?,
        oracle_expected_utility: exec::mean(&best)?,
        relative_loss_pct: loss.loss_pct,
        skipped: loss.skipped,
        per_decision_counts: counts,
        n_samples: samples.len(),
        seed: samples.seed(),
        oracle: oracle.name(),
    })
}

// ---------------------------------------------------------------------------
// Decision budgets and compression
// ---------------------------------------------------------------------------

/// A quantizer together with the decisions its indices refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Designed {
    pub quantizer: DecisionalQuantizer,
    pub decisions: DecisionSet,
}

/// Builds an `m`-decision quantizer for a model from training samples.
pub trait Designer {
    fn design(&self, model: &UtilityModel, samples: &SampleSet, m: usize) -> Result<Designed>;
}

/// Alternating optimization from a seeded start, read out as an exhaustive
/// argmax over the resulting decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct DoqDesigner {
    pub mode: RepresentativeMode,
    pub epsilon: f64,
    pub t_max: usize,
    pub seed: u64,
}

impl DoqDesigner {
    pub fn new(mode: RepresentativeMode, seed: u64) -> Self {
        DoqDesigner {
            mode,
            epsilon: 1e-10,
            t_max: 100,
            seed,
        }
    }
}

impl Designer for DoqDesigner {
    fn design(&self, model: &UtilityModel, samples: &SampleSet, m: usize) -> Result<Designed> {
        let init = initial_decisions(model, samples, &self.mode, m, self.seed)?;
        let mut cfg = AlternatingConfig::new(m, self.mode.clone());
        cfg.epsilon = self.epsilon;
        cfg.t_max = self.t_max;
        cfg.seed = self.seed;
        let report = doq_alternate(model, samples, &cfg, &init)?;
        Ok(Designed {
            quantizer: DecisionalQuantizer::ExhaustiveArgmax {
                model: model.clone(),
                decisions: report.final_decisions.clone(),
            },
            decisions: report.final_decisions,
        })
    }
}

/// Memoized relative loss per decision budget.
pub struct LossProfile<'a, D: Designer> {
    model: &'a UtilityModel,
    samples: &'a SampleSet,
    designer: &'a D,
    oracle_values: Vec<f64>,
    cache: RefCell<BTreeMap<usize, f64>>,
}

impl<'a, D: Designer> LossProfile<'a, D> {
    pub fn new(
        model: &'a UtilityModel,
        samples: &'a SampleSet,
        designer: &'a D,
        oracle: &OracleSpec,
    ) -> Result<Self> {
        Ok(LossProfile {
            model,
            samples,
            designer,
            oracle_values: oracle_utilities(model, samples, oracle)?,
            cache: RefCell::new(BTreeMap::new()),
        })
    }

    /// Relative loss (percent) of the `m`-decision design.
    pub fn loss(&self, m: usize) -> Result<f64> {
        if let Some(&v) = self.cache.borrow().get(&m) {
            return Ok(v);
        }
        let designed = self.designer.design(self.model, self.samples, m)?;
        let (_, achieved) =
            decision_utilities(&designed.quantizer, self.model, &designed.decisions, self.samples)?;
        let v = relative_loss_from(&self.oracle_values, &achieved)?.loss_pct;
        self.cache.borrow_mut().insert(m, v);
        Ok(v)
    }

    /// Smallest `m <= m_cap` meeting `sigma_pct`, if any.
    pub fn min_decisions(&self, sigma_pct: f64, m_cap: usize) -> Result<Option<usize>> {
        for m in 1..=m_cap {
            if self.loss(m)? <= sigma_pct {
                return Ok(Some(m));
            }
        }
        Ok(None)
    }
}

pub fn min_decisions<D: Designer>(
    model: &UtilityModel,
    samples: &SampleSet,
    sigma_pct: f64,
    designer: &D,
    oracle: &OracleSpec,
    m_cap: usize,
) -> Result<Option<usize>> {
    if m_cap == 0 {
        return Err(DoqError::domain("m_cap must be at least 1"));
    }
    LossProfile::new(model, samples, designer, oracle)?.min_decisions(sigma_pct, m_cap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionPoint {
    pub sigma_pct: f64,
    pub m_required: Option<usize>,
    pub gamma: Option<f64>,
    pub loss_pct_at_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionCurve {
    pub points: Vec<CompressionPoint>,
    /// `M(1%)`, or `m_cap` when 1% is never reached.
    pub reference_m: usize,
    pub reference_is_cap: bool,
}

pub fn compression_curve<D: Designer>(
    model: &UtilityModel,
    samples: &SampleSet,
    sigmas: &[f64],
    designer: &D,
    oracle: &OracleSpec,
    m_cap: usize,
) -> Result<CompressionCurve> {
    if m_cap == 0 {
        return Err(DoqError::domain("m_cap must be at least 1"));
    }
    if sigmas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(DoqError::domain("sigma list must be strictly ascending"));
    }
    let profile = LossProfile::new(model, samples, designer, oracle)?;
    let reference = profile.min_decisions(1.0, m_cap)?;
    let reference_m = reference.unwrap_or(m_cap);
    let points = sigmas
        .iter()
        .map(|&s| {
            let m = profile.min_decisions(s, m_cap)?;
            Ok(CompressionPoint {
                sigma_pct: s,
                m_required: m,
                gamma: m.map(|m| reference_m as f64 / m as f64),
                loss_pct_at_m: m.map(|m| profile.loss(m)).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompressionCurve {
        points,
        reference_m,
        reference_is_cap: reference.is_none(),
    })
}
