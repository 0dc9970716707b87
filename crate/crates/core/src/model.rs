//! Utility models, decisions, and parameter sampling.
//!
//! Three utility families are provided: multi-band energy efficiency with an
//! exponential packet-success payoff, multi-band sum rate, and single-user
//! MIMO energy efficiency under equal-gain transmission with antenna
//! selection. A fourth, negative squared distance, turns the alternating
//! designer into plain Lloyd/k-means and is used to cross-check it.
//!
//! Powers are in mW throughout.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DoqError, Result};
use crate::exec;
use crate::linalg::{hermitian_logdet, squared_distance};

// ---------------------------------------------------------------------------
// Configurations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiBandEeConfig {
    pub n_bands: usize,
    /// Spectral-efficiency constant in the packet success rate `exp(-c / snr)`.
    pub c: f64,
    /// Noise variance, mW.
    pub sigma2: f64,
}

impl MultiBandEeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bands == 0 {
            return Err(DoqError::domain("n_bands must be at least 1"));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(DoqError::domain("sigma2 must be positive"));
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(DoqError::domain("c must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRateConfig {
    pub n_bands: usize,
    pub sigma2: f64,
    /// Total power budget shared by all bands, mW.
    pub p_total: f64,
}

impl SumRateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bands == 0 {
            return Err(DoqError::domain("n_bands must be at least 1"));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(DoqError::domain("sigma2 must be positive"));
        }
        if !(self.p_total > 0.0) || !self.p_total.is_finite() {
            return Err(DoqError::domain("p_total must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimoEeConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Raw data rate, bits/s.
    pub r0: f64,
    pub sigma2: f64,
    /// Power drawn when nothing is radiated, mW.
    pub p0: f64,
    /// Trace budget on the transmit covariance, mW.
    pub p_max: f64,
}

impl MimoEeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(DoqError::domain("antenna counts must be at least 1"));
        }
        for (name, v) in [
            ("r0", self.r0),
            ("sigma2", self.sigma2),
            ("p0", self.p0),
            ("p_max", self.p_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(DoqError::domain(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        1.0 / self.sigma2
    }
}

// ---------------------------------------------------------------------------
// Decisions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Decision {
    /// Per-band transmit powers.
    Power(Vec<f64>),
    /// Covariance `(scale / l) * Diag(mask)` where `l` is the mask weight.
    Egt { scale: f64, mask: Vec<bool> },
    /// A bare point in feature space, for the squared-distance utility.
    Point(Vec<f64>),
}

impl Decision {
    /// Real coordinates of vector-valued decisions.
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Decision::Power(v) | Decision::Point(v) => Some(v),
            Decision::Egt { .. } => None,
        }
    }

    /// Diagonal of the implied transmit covariance.
    pub fn covariance_diagonal(&self) -> Option<Vec<f64>> {
        match self {
            Decision::Egt { scale, mask } => {
                let l = mask.iter().filter(|&&b| b).count() as f64;
                Some(
                    mask.iter()
                        .map(|&b| if b { scale / l } else { 0.0 })
                        .collect(),
                )
            }
            _ => None,
        }
    }

    /// Coordinates used to measure decision displacement between iterations.
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            Decision::Power(v) | Decision::Point(v) => v.clone(),
            Decision::Egt { .. } => self.covariance_diagonal().unwrap_or_default(),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Decision::Power(p) => {
                if p.is_empty() {
                    return Err(DoqError::domain("empty power vector"));
                }
                if p.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                    return Err(DoqError::domain("power entries must be finite and nonnegative"));
                }
            }
            Decision::Egt { scale, mask } => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(DoqError::domain("EGT scale must be positive"));
                }
                if !mask.iter().any(|&b| b) {
                    return Err(DoqError::domain("EGT mask selects no antenna"));
                }
            }
            Decision::Point(v) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(DoqError::domain("point coordinates must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Ordered finite set of candidate decisions.
///
/// Duplicates are allowed so that the alternating designer can let two cells
/// settle on the same decision; the builders in this module always produce
/// distinct entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSet {
    decisions: Vec<Decision>,
}

impl DecisionSet {
    pub fn new(decisions: Vec<Decision>) -> Result<Self> {
        if decisions.is_empty() {
            return Err(DoqError::domain("decision set must contain at least one decision"));
        }
        for d in &decisions {
            d.check()?;
        }
        Ok(DecisionSet { decisions })
    }

    /// Cartesian product of per-band power levels, first band varying slowest.
    pub fn power_product(levels: &[f64], n_bands: usize) -> Result<Self> {
        if levels.is_empty() || n_bands == 0 {
            return Err(DoqError::domain("empty power grid"));
        }
        let mut out = vec![Vec::new()];
        for _ in 0..n_bands {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<f64>| {
                    levels.iter().map(move |&l| {
                        let mut v = prefix.clone();
                        v.push(l);
                        v
                    })
                })
                .collect();
        }
        let decisions = out
            .into_iter()
            .filter(|v| v.iter().any(|&x| x > 0.0))
            .map(Decision::Power)
            .collect();
        DecisionSet::new(decisions)
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Decision> {
        self.decisions.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Decision> {
        self.decisions.iter()
    }

    pub fn as_slice(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn into_vec(self) -> Vec<Decision> {
        self.decisions
    }

    pub fn is_distinct(&self) -> bool {
        self.decisions
            .iter()
            .enumerate()
            .all(|(i, a)| self.decisions[i + 1..].iter().all(|b| a != b))
    }

    pub fn contains(&self, d: &Decision) -> bool {
        self.decisions.contains(d)
    }
}

impl<'a> IntoIterator for &'a DecisionSet {
    type Item = &'a Decision;
    type IntoIter = std::slice::Iter<'a, Decision>;

    fn into_iter(self) -> Self::IntoIter {
        self.decisions.iter()
    }
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(DoqError::domain(format!(
                "channel matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(ChannelMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ChannelMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Same matrix with its columns reordered: column `j` of the result is
    /// column `perm[j]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            for &c in perm {
                data.push(self.get(r, c));
            }
        }
        ChannelMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

/// One realization of the system parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Gains(Vec<f64>),
    Channel(ChannelMatrix),
}

impl Param {
    pub fn feature_dim(&self) -> usize {
        match self {
            Param::Gains(g) => g.len(),
            Param::Channel(h) => 2 * h.rows * h.cols,
        }
    }
}

/// Flatten a parameter into the real feature vector seen by the cell and
/// neural quantizers. Gains pass through; complex matrices are walked in
/// row-major order emitting `(re, im)` per entry.
pub fn encode_features(g: &Param) -> Vec<f64> {
    match g {
        Param::Gains(v) => v.clone(),
        Param::Channel(h) => h.data.iter().flat_map(|z| [z.re, z.im]).collect(),
    }
}

/// Inverse of [`encode_features`], shaped like `like`.
pub fn decode_features(features: &[f64], like: &Param) -> Result<Param> {
    if features.len() != like.feature_dim() {
        return Err(DoqError::domain(format!(
            "feature length {} does not match parameter dimension {}",
            features.len(),
            like.feature_dim()
        )));
    }
    Ok(match like {
        Param::Gains(_) => Param::Gains(features.to_vec()),
        Param::Channel(h) => Param::Channel(ChannelMatrix {
            rows: h.rows,
            cols: h.cols,
            data: features
                .chunks_exact(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerKind {
    /// i.i.d. rate-1 exponential gain per band.
    ExponentialGains { n_bands: usize },
    /// i.i.d. unit-variance circularly symmetric complex Gaussian entries.
    ComplexGaussianMatrix { n_rx: usize, n_tx: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSampler {
    pub kind: SamplerKind,
    pub seed: u64,
}

/// Immutable batch of parameter draws with their cached feature encodings.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    params: Vec<Param>,
    features: Vec<Vec<f64>>,
    seed: u64,
}

impl SampleSet {
    pub fn from_params(params: Vec<Param>, seed: u64) -> Self {
        let features = params.iter().map(encode_features).collect();
        SampleSet {
            params,
            features,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sub-sample by index, keeping the given order.
    pub fn subset(&self, indices: &[usize]) -> SampleSet {
        SampleSet {
            params: indices.iter().map(|&i| self.params[i].clone()).collect(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            seed: self.seed,
        }
    }
}

pub fn sample_params(sampler: &ParameterSampler, n: usize) -> Result<SampleSet> {
    if n == 0 {
        return Err(DoqError::domain("sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let params = match sampler.kind {
        SamplerKind::ExponentialGains { n_bands } => {
            if n_bands == 0 {
                return Err(DoqError::domain("n_bands must be at least 1"));
            }
            (0..n)
                .map(|_| {
                    Param::Gains(
                        (0..n_bands)
                            .map(|_| loop {
                                let g: f64 = Exp1.sample(&mut rng);
                                if g > 0.0 {
                                    break g;
                                }
                            })
                            .collect(),
                    )
                })
                .collect()
        }
        SamplerKind::ComplexGaussianMatrix { n_rx, n_tx } => {
            if n_rx == 0 || n_tx == 0 {
                return Err(DoqError::domain("antenna counts must be at least 1"));
            }
            let s = std::f64::consts::FRAC_1_SQRT_2;
            (0..n)
                .map(|_| {
                    let data = (0..n_rx * n_tx)
                        .map(|_| {
                            let re: f64 = StandardNormal.sample(&mut rng);
                            let im: f64 = StandardNormal.sample(&mut rng);
                            Complex64::new(s * re, s * im)
                        })
                        .collect();
                    Param::Channel(ChannelMatrix {
                        rows: n_rx,
                        cols: n_tx,
                        data,
                    })
                })
                .collect()
        }
    };
    Ok(SampleSet::from_params(params, sampler.seed))
}

// ---------------------------------------------------------------------------
// Utilities
// ---------------------------------------------------------------------------

fn check_gains(g: &[f64], n: usize) -> Result<()> {
    if g.len() != n {
        return Err(DoqError::domain(format!(
            "expected {n} gains, got {}",
            g.len()
        )));
    }
    if g.iter().any(|x| !(*x > 0.0)) {
        return Err(DoqError::domain("channel gains must be positive"));
    }
    Ok(())
}

/// Multi-band energy efficiency `sum_i exp(-c sigma2 / (p_i g_i)) / sum_i p_i`,
/// in 1/mW. Bands with zero power contribute nothing to the numerator.
pub fn eval_multiband_ee(p: &[f64], g: &[f64], cfg: &MultiBandEeConfig) -> Result<f64> {
    if p.len() != cfg.n_bands {
        return Err(DoqError::domain(format!(
            "expected {} powers, got {}",
            cfg.n_bands,
            p.len()
        )));
    }
    check_gains(g, cfg.n_bands)?;
    if p.iter().any(|x| !(*x >= 0.0)) {
        return Err(DoqError::domain("powers must be nonnegative"));
    }
    let total: f64 = p.iter().sum();
    if !(total > 0.0) {
        return Err(DoqError::domain("all-zero power vector"));
    }
    let success: f64 = p
        .iter()
        .zip(g)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &gi)| (-cfg.c * cfg.sigma2 / (pi * gi)).exp())
        .sum();
    Ok(success / total)
}

/// Sum of per-band rates `ln(1 + p_i g_i / sigma2)`, in nats.
pub fn eval_sum_rate(p: &[f64], g: &[f64], cfg: &SumRateConfig) -> Result<f64> {
    if p.len() != cfg.n_bands {
        return Err(DoqError::domain(format!(
            "expected {} powers, got {}",
            cfg.n_bands,
            p.len()
        )));
    }
    check_gains(g, cfg.n_bands)?;
    if p.iter().any(|x| !(*x >= 0.0)) {
        return Err(DoqError::domain("negative power"));
    }
    Ok(p
        .iter()
        .zip(g)
        .map(|(&pi, &gi)| (pi * gi / cfg.sigma2).ln_1p())
        .sum())
}

/// MIMO energy efficiency `R0 log2 det(I + rho H Q H^H) / (tr Q + P0)` for an
/// equal-gain covariance, in bits/s/mW.
pub fn eval_mimo_ee(
    scale: f64,
    mask: &[bool],
    h: &ChannelMatrix,
    cfg: &MimoEeConfig,
) -> Result<f64> {
    if h.rows != cfg.n_rx || h.cols != cfg.n_tx {
        return Err(DoqError::domain(format!(
            "channel is {}x{}, model expects {}x{}",
            h.rows, h.cols, cfg.n_rx, cfg.n_tx
        )));
    }
    if mask.len() != cfg.n_tx {
        return Err(DoqError::domain(format!(
            "mask has {} entries, expected {}",
            mask.len(),
            cfg.n_tx
        )));
    }
    let l = mask.iter().filter(|&&b| b).count();
    if l == 0 {
        return Err(DoqError::domain("EGT mask selects no antenna"));
    }
    if !(scale > 0.0) {
        return Err(DoqError::domain("EGT scale must be positive"));
    }
    if scale > cfg.p_max * (1.0 + 1e-12) {
        return Err(DoqError::Constraint(format!(
            "trace {scale} exceeds budget {}",
            cfg.p_max
        )));
    }
    let q = scale / l as f64;
    let n = cfg.n_rx;
    let weight = cfg.rho() * q;
    let mut a = vec![Complex64::new(0.0, 0.0); n * n];
    for r in 0..n {
        for s in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, _) in mask.iter().enumerate().filter(|(_, &b)| b) {
                acc += h.get(r, j) * h.get(s, j).conj();
            }
            a[r * n + s] = acc * weight;
        }
        a[r * n + r] += 1.0;
    }
    let logdet = hermitian_logdet(&a, n)?;
    Ok(cfg.r0 * logdet / std::f64::consts::LN_2 / (scale + cfg.p0))
}

/// `u(x; g)` for one of the supported utility families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UtilityModel {
    MultiBandEe(MultiBandEeConfig),
    SumRate(SumRateConfig),
    MimoEe(MimoEeConfig),
    /// `-||x - features(g)||^2`; the classical distortion objective.
    NegSquaredDistance { dim: usize },
}

impl UtilityModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            UtilityModel::MultiBandEe(c) => c.validate(),
            UtilityModel::SumRate(c) => c.validate(),
            UtilityModel::MimoEe(c) => c.validate(),
            UtilityModel::NegSquaredDistance { dim } => {
                if *dim == 0 {
                    Err(DoqError::domain("dimension must be at least 1"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn utility(&self, d: &Decision, g: &Param) -> Result<f64> {
        match (self, d, g) {
            (UtilityModel::MultiBandEe(cfg), Decision::Power(p), Param::Gains(gv)) => {
                eval_multiband_ee(p, gv, cfg)
            }
            (UtilityModel::SumRate(cfg), Decision::Power(p), Param::Gains(gv)) => {
                eval_sum_rate(p, gv, cfg)
            }
            (UtilityModel::MimoEe(cfg), Decision::Egt { scale, mask }, Param::Channel(h)) => {
                eval_mimo_ee(*scale, mask, h, cfg)
            }
            (UtilityModel::NegSquaredDistance { dim }, d, g) => {
                let x = d.as_vector().ok_or_else(|| {
                    DoqError::domain("squared-distance utility needs a vector decision")
                })?;
                let f = encode_features(g);
                if x.len() != *dim || f.len() != *dim {
                    return Err(DoqError::domain(format!(
                        "dimension mismatch: decision {}, parameter {}, model {}",
                        x.len(),
                        f.len(),
                        dim
                    )));
                }
                Ok(-squared_distance(x, &f))
            }
            _ => Err(DoqError::domain(
                "decision or parameter kind does not match the utility model",
            )),
        }
    }

    /// Utility of every decision at `g`.
    pub fn utilities(&self, decisions: &DecisionSet, g: &Param) -> Result<Vec<f64>> {
        decisions.iter().map(|d| self.utility(d, g)).collect()
    }

    /// Index of the best decision at `g`, lowest index on ties.
    pub fn best_decision(&self, decisions: &DecisionSet, g: &Param) -> Result<(usize, f64)> {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (k, d) in decisions.iter().enumerate() {
            let u = self.utility(d, g)?;
            if u > best.1 {
                best = (k, u);
            }
        }
        if best.1 == f64::NEG_INFINITY {
            // every decision evaluated to -inf; fall back to the first
            best.0 = 0;
        }
        Ok(best)
    }

    /// Build a vector-valued decision of the kind this model consumes.
    pub fn decision_from_vector(&self, v: Vec<f64>) -> Result<Decision> {
        match self {
            UtilityModel::MultiBandEe(_) | UtilityModel::SumRate(_) => Ok(Decision::Power(v)),
            UtilityModel::NegSquaredDistance { .. } => Ok(Decision::Point(v)),
            UtilityModel::MimoEe(_) => Err(DoqError::Unsupported(
                "MIMO decisions are discrete antenna selections".into(),
            )),
        }
    }

    /// Closed-form maximizer of the mean utility over `members`, when one
    /// exists. For the squared distance it is the centroid.
    pub fn cell_optimum(&self, members: &[&[f64]]) -> Option<Decision> {
        match self {
            UtilityModel::NegSquaredDistance { dim } => {
                crate::linalg::centroid(members.iter().copied(), *dim).map(Decision::Point)
            }
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// MIMO decision sets
// ---------------------------------------------------------------------------

/// All equal-gain antenna selections at total power `p`: `2^n_tx - 1`
/// decisions ordered by selection weight, then lexicographically with the
/// first antenna most significant.
pub fn build_egt_decision_set(cfg: &MimoEeConfig, p: f64) -> Result<DecisionSet> {
    if !(p > 0.0) {
        return Err(DoqError::domain("total power must be positive"));
    }
    let n = cfg.n_tx;
    if n == 0 || n > 20 {
        return Err(DoqError::domain(format!("unsupported transmit antenna count {n}")));
    }
    let mut masks: Vec<Vec<bool>> = (1u32..(1 << n))
        .map(|bits| (0..n).map(|i| bits & (1 << (n - 1 - i)) != 0).collect())
        .collect();
    // lexicographic with true > false puts (1,0) ahead of (0,1)
    masks.sort_by(|a, b| {
        let wa = a.iter().filter(|&&x| x).count();
        let wb = b.iter().filter(|&&x| x).count();
        wa.cmp(&wb).then_with(|| b.cmp(a))
    });
    DecisionSet::new(
        masks
            .into_iter()
            .map(|mask| Decision::Egt { scale: p, mask })
            .collect(),
    )
}

/// Nested chain `D_1 ⊂ D_2 ⊂ … ⊂ D_kmax`, each step adding one decision
/// drawn uniformly from those not yet chosen.
pub fn grow_nested_decision_sets(
    full: &DecisionSet,
    k_max: usize,
    seed: u64,
) -> Result<Vec<DecisionSet>> {
    if k_max == 0 || k_max > full.len() {
        return Err(DoqError::domain(format!(
            "k_max = {k_max} must lie in 1..={}",
            full.len()
        )));
    }
    let mut order: Vec<usize> = (0..full.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    (1..=k_max)
        .map(|k| {
            DecisionSet::new(
                order[..k]
                    .iter()
                    .map(|&i| full.as_slice()[i].clone())
                    .collect(),
            )
        })
        .collect()
}

/// Default search grid for the power budget: 1 mW steps up to `2 * P0`.
pub fn default_pstar_grid(cfg: &MimoEeConfig) -> Vec<f64> {
    let top = (2.0 * cfg.p0).floor().max(1.0) as usize;
    (1..=top).map(|p| p as f64).collect()
}

/// Budget on `p_grid` maximizing the Monte-Carlo mean of the best EGT
/// utility. Ties go to the smaller budget.
pub fn find_pstar(cfg: &MimoEeConfig, p_grid: &[f64], samples: &SampleSet) -> Result<f64> {
    if p_grid.is_empty() {
        return Err(DoqError::domain("empty power grid"));
    }
    if p_grid.iter().any(|p| !(*p > 0.0)) {
        return Err(DoqError::domain("grid powers must be positive"));
    }
    if samples.is_empty() {
        return Err(DoqError::domain("empty sample set"));
    }
    let mut best: Option<(f64, f64)> = None;
    for &p in p_grid {
        let mut local = cfg.clone();
        local.p_max = p;
        let model = UtilityModel::MimoEe(local.clone());
        let set = build_egt_decision_set(&local, p)?;
        let per_sample = exec::try_map_indexed(samples.len(), |t| {
            model.best_decision(&set, &samples.params()[t]).map(|(_, u)| u)
        })?;
        let value = exec::mean(&per_sample)?;
        best = match best {
            None => Some((p, value)),
            Some((bp, bv)) if value > bv || (value == bv && p < bp) => Some((p, value)),
            keep => keep,
        };
    }
    Ok(best.map(|(p, _)| p).unwrap_or(p_grid[0]))
}
