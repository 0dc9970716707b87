//! Quantizer design: the alternating cell/decision optimization, its two
//! half-steps, and the k-means distortion baseline.
//!
//! Expectations over the parameter distribution are replaced by means over a
//! fixed [`SampleSet`]. Both half-steps then maximize the same empirical
//! objective, which makes the alternation monotone on that set.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DoqError, Result};
use crate::exec;
use crate::linalg::{centroid, squared_distance};
use crate::model::{decode_features, Decision, DecisionSet, SampleSet, UtilityModel};
use crate::quantizer::{argmax_labels, nearest, CellQuantizer};

#[derive(Debug, Clone, PartialEq)]
pub enum RepresentativeMode {
    /// Pick each cell's decision from a fixed candidate list.
    DiscreteCandidates(DecisionSet),
    /// Derivative-free search inside a box, started from the incumbent.
    ContinuousSearch(BoxSearch),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSearch {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub tolerance: f64,
    pub max_evals: usize,
}

impl BoxSearch {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(DoqError::domain("box bounds must be nonempty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l)) {
            return Err(DoqError::domain("box needs lower < upper on every axis"));
        }
        Ok(BoxSearch {
            lower,
            upper,
            tolerance: 1e-8,
            max_evals: 500,
        })
    }

    fn project(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    /// Bounded Nelder–Mead maximization of `f` from `start`. Trial points
    /// are clamped to the box. Returns the best point and its value.
    pub fn maximize<F>(&self, start: &[f64], f: F) -> (Vec<f64>, f64)
    where
        F: Fn(&[f64]) -> f64,
    {
        let n = start.len();
        let cost = |x: &[f64]| {
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                -v
            }
        };
        let mut x0 = start.to_vec();
        self.project(&mut x0);
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let c0 = cost(&x0);
        simplex.push((x0.clone(), c0));
        let mut evals = 1usize;
        for i in 0..n {
            let span = self.upper[i] - self.lower[i];
            let mut step = if x0[i] != 0.0 { 0.1 * x0[i].abs() } else { 0.05 * span };
            step = step.min(0.25 * span);
            if x0[i] + step > self.upper[i] {
                step = -step;
            }
            let mut v = x0.clone();
            v[i] += step;
            self.project(&mut v);
            let c = cost(&v);
            evals += 1;
            simplex.push((v, c));
        }

        let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        };

        while evals < self.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[n].1;
            if best.is_finite() && (worst - best).abs() <= self.tolerance * best.abs().max(1e-300) {
                break;
            }
            let mut centroid = vec![0.0; n];
            for (p, _) in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(p) {
                    *c += x / n as f64;
                }
            }
            let mut reflected = combine(&centroid, &simplex[n].0, -1.0);
            self.project(&mut reflected);
            let fr = cost(&reflected);
            evals += 1;
            if fr < simplex[0].1 {
                let mut expanded = combine(&centroid, &simplex[n].0, -2.0);
                self.project(&mut expanded);
                let fe = cost(&expanded);
                evals += 1;
                simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (reflected, fr);
            } else {
                let (towards, ft) = if fr < simplex[n].1 {
                    (reflected.clone(), fr)
                } else {
                    (simplex[n].0.clone(), simplex[n].1)
                };
                let contracted = combine(&centroid, &towards, 0.5);
                let fc = cost(&contracted);
                evals += 1;
                if fc < ft {
                    simplex[n] = (contracted, fc);
                } else {
                    let anchor = simplex[0].0.clone();
                    for item in simplex.iter_mut().skip(1) {
                        let p = combine(&anchor, &item.0, 0.5);
                        let c = cost(&p);
                        *item = (p, c);
                    }
                    evals += n;
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, c) = simplex.swap_remove(0);
        (x, -c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingConfig {
    pub m: usize,
    pub epsilon: f64,
    pub t_max: usize,
    pub mode: RepresentativeMode,
    pub seed: u64,
    /// Keep labels and decisions of every iteration in the report.
    pub record_history: bool,
}

impl AlternatingConfig {
    pub fn new(m: usize, mode: RepresentativeMode) -> Self {
        AlternatingConfig {
            m,
            epsilon: 1e-10,
            t_max: 100,
            mode,
            seed: 0,
            record_history: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(DoqError::domain("M must be at least 1"));
        }
        if self.t_max == 0 {
            return Err(DoqError::domain("t_max must be at least 1"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(DoqError::domain("epsilon must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingReport {
    pub final_decisions: DecisionSet,
    /// Cell of every sample from the last cell update.
    pub labels: Vec<usize>,
    /// Empirical expected utility after each full iteration.
    pub utility_history: Vec<f64>,
    pub label_history: Vec<Vec<usize>>,
    pub decision_history: Vec<DecisionSet>,
    pub iterations: usize,
    pub converged: bool,
}

/// Cell step: each sample joins the decision that serves it best.
pub fn update_cells(model: &UtilityModel, d: &DecisionSet, samples: &SampleSet) -> Result<Vec<usize>> {
    argmax_labels(model, d, samples)
}

fn members_by_cell(labels: &[usize], m: usize) -> Vec<Vec<usize>> {
    let mut cells = vec![Vec::new(); m];
    for (t, &k) in labels.iter().enumerate() {
        cells[k].push(t);
    }
    cells
}

fn cell_objective(model: &UtilityModel, d: &Decision, samples: &SampleSet, members: &[usize]) -> f64 {
    let mut sum = 0.0;
    for &t in members {
        match model.utility(d, &samples.params()[t]) {
            Ok(u) => sum += u,
            Err(_) => return f64::NEG_INFINITY,
        }
    }
    sum / members.len() as f64
}

/// Decision step: each nonempty cell takes the decision maximizing its mean
/// utility; empty cells keep their incumbent.
pub fn update_representatives(
    model: &UtilityModel,
    samples: &SampleSet,
    labels: &[usize],
    current: &DecisionSet,
    mode: &RepresentativeMode,
) -> Result<DecisionSet> {
    if labels.len() != samples.len() {
        return Err(DoqError::domain("one label per sample required"));
    }
    let m = current.len();
    if let Some(&bad) = labels.iter().find(|&&k| k >= m) {
        return Err(DoqError::domain(format!("label {bad} exceeds decision count {m}")));
    }
    let cells = members_by_cell(labels, m);
    let incumbents = current.as_slice();

    let next: Vec<Decision> = match mode {
        RepresentativeMode::DiscreteCandidates(candidates) => {
            // per-candidate sums over every cell at once
            let sums: Vec<Vec<f64>> = exec::map_indexed(candidates.len(), |c| {
                let d = &candidates.as_slice()[c];
                let mut acc = vec![0.0; m];
                for (t, &k) in labels.iter().enumerate() {
                    acc[k] += model
                        .utility(d, &samples.params()[t])
                        .unwrap_or(f64::NEG_INFINITY);
                }
                acc
            });
            (0..m)
                .map(|k| {
                    if cells[k].is_empty() {
                        return incumbents[k].clone();
                    }
                    let mut best = 0usize;
                    for c in 1..candidates.len() {
                        if sums[c][k] > sums[best][k] {
                            best = c;
                        }
                    }
                    let n = cells[k].len() as f64;
                    let cand_value = sums[best][k] / n;
                    let inc_value = cell_objective(model, &incumbents[k], samples, &cells[k]);
                    if cand_value >= inc_value {
                        candidates.as_slice()[best].clone()
                    } else {
                        incumbents[k].clone()
                    }
                })
                .collect()
        }
        RepresentativeMode::ContinuousSearch(search) => {
            let results = exec::map_indexed(m, |k| -> Result<Decision> {
                if cells[k].is_empty() {
                    return Ok(incumbents[k].clone());
                }
                let member_features: Vec<&[f64]> = cells[k]
                    .iter()
                    .map(|&t| samples.features()[t].as_slice())
                    .collect();
                if let Some(opt) = model.cell_optimum(&member_features) {
                    return Ok(opt);
                }
                let start = incumbents[k].as_vector().ok_or_else(|| {
                    DoqError::Unsupported("continuous search needs vector decisions".into())
                })?;
                if start.len() != search.lower.len() {
                    return Err(DoqError::domain("search box dimension does not match decisions"));
                }
                let objective = |x: &[f64]| match model.decision_from_vector(x.to_vec()) {
                    Ok(d) => cell_objective(model, &d, samples, &cells[k]),
                    Err(_) => f64::NEG_INFINITY,
                };
                let incumbent_value = objective(start);
                let (x, value) = search.maximize(start, objective);
                if value >= incumbent_value {
                    model.decision_from_vector(x)
                } else {
                    Ok(incumbents[k].clone())
                }
            });
            results.into_iter().collect::<Result<Vec<_>>>()?
        }
    };
    DecisionSet::new(next)
}

fn displacement(a: &DecisionSet, b: &DecisionSet) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| squared_distance(&x.coordinates(), &y.coordinates()))
        .sum()
}

/// Mean of `u(d[label_t]; g_t)` over the sample set.
pub fn empirical_utility(
    model: &UtilityModel,
    d: &DecisionSet,
    samples: &SampleSet,
    labels: &[usize],
) -> Result<f64> {
    let values = exec::try_map_indexed(samples.len(), |t| {
        let decision = d
            .get(labels[t])
            .ok_or_else(|| DoqError::domain(format!("label {} out of range", labels[t])))?;
        model.utility(decision, &samples.params()[t])
    })?;
    exec::mean(&values)
}

/// Alternate cell and decision updates until the squared decision
/// displacement drops to `epsilon` or `t_max` iterations have run.
pub fn doq_alternate(
    model: &UtilityModel,
    samples: &SampleSet,
    cfg: &AlternatingConfig,
    init: &DecisionSet,
) -> Result<AlternatingReport> {
    cfg.validate()?;
    if init.len() != cfg.m {
        return Err(DoqError::domain(format!(
            "initial decision set has {} entries, expected {}",
            init.len(),
            cfg.m
        )));
    }
    if samples.is_empty() {
        return Err(DoqError::domain("empty sample set"));
    }
    let mut decisions = init.clone();
    let mut labels = Vec::new();
    let mut utility_history = Vec::new();
    let mut label_history = Vec::new();
    let mut decision_history = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.t_max {
        labels = update_cells(model, &decisions, samples)?;
        let next = update_representatives(model, samples, &labels, &decisions, &cfg.mode)?;
        utility_history.push(empirical_utility(model, &next, samples, &labels)?);
        if cfg.record_history {
            label_history.push(labels.clone());
            decision_history.push(next.clone());
        }
        let moved = displacement(&decisions, &next);
        decisions = next;
        if moved <= cfg.epsilon {
            converged = true;
            break;
        }
    }
    Ok(AlternatingReport {
        final_decisions: decisions,
        labels,
        iterations: utility_history.len(),
        utility_history,
        label_history,
        decision_history,
        converged,
    })
}

/// Seeded starting decisions: walk the samples in a shuffled order and keep
/// the per-sample best decision until `m` distinct ones are collected.
pub fn initial_decisions(
    model: &UtilityModel,
    samples: &SampleSet,
    mode: &RepresentativeMode,
    m: usize,
    seed: u64,
) -> Result<DecisionSet> {
    if m == 0 {
        return Err(DoqError::domain("M must be at least 1"));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut chosen: Vec<Decision> = Vec::with_capacity(m);
    for t in order {
        let g = &samples.params()[t];
        let d = match mode {
            RepresentativeMode::DiscreteCandidates(c) => {
                let (k, _) = model.best_decision(c, g).map_err(|e| e.at_sample(t))?;
                c.as_slice()[k].clone()
            }
            RepresentativeMode::ContinuousSearch(search) => {
                let f = samples.features()[t].as_slice();
                match model.cell_optimum(&[f]) {
                    Some(d) => d,
                    None => {
                        let start: Vec<f64> = search
                            .lower
                            .iter()
                            .zip(&search.upper)
                            .map(|(l, u)| 0.5 * (l + u))
                            .collect();
                        let (x, _) = search.maximize(&start, |x| {
                            match model.decision_from_vector(x.to_vec()) {
                                Ok(d) => model.utility(&d, g).unwrap_or(f64::NEG_INFINITY),
                                Err(_) => f64::NEG_INFINITY,
                            }
                        });
                        model.decision_from_vector(x)?
                    }
                }
            }
        };
        if !chosen.contains(&d) {
            chosen.push(d);
            if chosen.len() == m {
                return DecisionSet::new(chosen);
            }
        }
    }
    Err(DoqError::domain(format!(
        "only {} distinct starting decisions available, {m} requested",
        chosen.len()
    )))
}

// ---------------------------------------------------------------------------
// k-means baseline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub representatives: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares right after each assignment step.
    pub wcss_history: Vec<f64>,
    pub label_history: Vec<Vec<usize>>,
    pub iterations: usize,
    /// Number of times an empty cluster was re-seeded.
    pub reseeded: usize,
}

impl KMeansFit {
    /// Cell quantizer with every cell pointing at decision 0; attach real
    /// decisions with [`assign_cell_decisions`].
    pub fn to_cell_quantizer(&self) -> Result<CellQuantizer> {
        CellQuantizer::new(
            self.representatives.clone(),
            vec![0; self.representatives.len()],
        )
    }
}

/// Seeded draw of `k` distinct feature vectors.
pub fn kmeans_init(features: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(DoqError::domain("k must be at least 1"));
    }
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut reps: Vec<Vec<f64>> = Vec::with_capacity(k);
    for t in order {
        if !reps.contains(&features[t]) {
            reps.push(features[t].clone());
            if reps.len() == k {
                return Ok(reps);
            }
        }
    }
    Err(DoqError::domain(format!(
        "k = {k} exceeds the {} distinct feature vectors",
        reps.len()
    )))
}

pub fn kmeans_fit(features: &[Vec<f64>], k: usize, iters: usize, seed: u64) -> Result<KMeansFit> {
    let init = kmeans_init(features, k, seed)?;
    kmeans_from(features, init, iters, false)
}

/// Lloyd iterations from explicit starting representatives. Stops after
/// `iters` assignments or when an assignment repeats the previous one.
pub fn kmeans_from(
    features: &[Vec<f64>],
    init: Vec<Vec<f64>>,
    iters: usize,
    record_history: bool,
) -> Result<KMeansFit> {
    if features.is_empty() {
        return Err(DoqError::domain("no feature vectors"));
    }
    if init.is_empty() {
        return Err(DoqError::domain("no starting representatives"));
    }
    let dim = features[0].len();
    if features.iter().chain(&init).any(|f| f.len() != dim) {
        return Err(DoqError::domain("feature dimensions differ"));
    }
    let k = init.len();
    let mut reps = init;
    let mut labels: Vec<usize> = Vec::new();
    let mut wcss_history = Vec::new();
    let mut label_history = Vec::new();
    let mut reseeded = 0;
    for _ in 0..iters.max(1) {
        let next = exec::map_indexed(features.len(), |t| nearest(&reps, &features[t]));
        let wcss: f64 = features
            .iter()
            .zip(&next)
            .map(|(f, &j)| squared_distance(f, &reps[j]))
            .sum();
        wcss_history.push(wcss);
        if record_history {
            label_history.push(next.clone());
        }
        let fixpoint = next == labels;
        labels = next;
        if fixpoint {
            break;
        }
        let cells = members_by_cell(&labels, k);
        let mut empty = Vec::new();
        for (j, members) in cells.iter().enumerate() {
            match centroid(members.iter().map(|&t| features[t].as_slice()), dim) {
                Some(c) => reps[j] = c,
                None => empty.push(j),
            }
        }
        for j in empty {
            let far = (0..features.len())
                .max_by(|&a, &b| {
                    let da = squared_distance(&features[a], &reps[labels[a]]);
                    let db = squared_distance(&features[b], &reps[labels[b]]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("nonempty features");
            reps[j] = features[far].clone();
            reseeded += 1;
        }
    }
    Ok(KMeansFit {
        representatives: reps,
        iterations: wcss_history.len(),
        labels,
        wcss_history,
        label_history,
        reseeded,
    })
}

/// How each k-means cell picks its decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellDecisionRule {
    /// Best mean utility over the cell's member samples.
    #[default]
    CellMean,
    /// Best utility at the cell representative itself.
    Centroid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellAssignment {
    pub quantizer: CellQuantizer,
    /// Cells that had no member sample and fell back to the centroid rule.
    pub empty_cells: Vec<usize>,
}

pub fn assign_cell_decisions(
    q: &CellQuantizer,
    model: &UtilityModel,
    d: &DecisionSet,
    samples: &SampleSet,
    rule: CellDecisionRule,
) -> Result<CellAssignment> {
    if samples.is_empty() {
        return Err(DoqError::domain("empty sample set"));
    }
    let k = q.representatives().len();
    let cells_of = exec::try_map_indexed(samples.len(), |t| q.nearest_cell(&samples.features()[t]))?;
    let cells = members_by_cell(&cells_of, k);

    let sums: Vec<Vec<f64>> = exec::try_map_indexed(d.len(), |c| {
        let decision = &d.as_slice()[c];
        let mut acc = vec![0.0; k];
        for (t, &j) in cells_of.iter().enumerate() {
            acc[j] += model.utility(decision, &samples.params()[t])?;
        }
        Ok(acc)
    })?;

    let like = &samples.params()[0];
    let mut decisions = Vec::with_capacity(k);
    let mut empty_cells = Vec::new();
    for j in 0..k {
        let use_centroid = rule == CellDecisionRule::Centroid || cells[j].is_empty();
        if cells[j].is_empty() {
            empty_cells.push(j);
        }
        let choice = if use_centroid {
            let g = decode_features(&q.representatives()[j], like)?;
            model.best_decision(d, &g)?.0
        } else {
            let mut best = 0;
            for c in 1..d.len() {
                if sums[c][j] > sums[best][j] {
                    best = c;
                }
            }
            best
        };
        decisions.push(choice);
    }
    Ok(CellAssignment {
        quantizer: q.clone().with_decisions(decisions),
        empty_cells,
    })
}
