//! One function per subcommand. Each validates its inputs in full before
//! drawing any samples.

use doq_core::algopt::{
    assign_cell_decisions, kmeans_fit, CellDecisionRule, RepresentativeMode,
};
use doq_core::evalx::{
    compression_curve, decision_utilities, evaluate, expected_utility, oracle_utilities,
    relative_loss_from, DoqDesigner, OracleSpec,
};
use doq_core::exec::mean;
use doq_core::learn::{mlp_init, mlp_train, MlpClassifier, TrainReport};
use doq_core::model::{
    build_egt_decision_set, default_pstar_grid, find_pstar, grow_nested_decision_sets,
    sample_params, Decision, DecisionSet, MimoEeConfig, MultiBandEeConfig, ParameterSampler,
    SampleSet, SamplerKind, SumRateConfig, UtilityModel,
};
use doq_core::quantizer::{
    as_region_grid, label_samples, scalar_effective_thresholds, split_indices, CellQuantizer,
    DecisionalQuantizer,
};
use serde_json::json;

use crate::config::{validate_powers, CompressionUtility, ExperimentConfig, UtilitySpec};
use crate::error::CliError;
use crate::output::{num, opt_num, Table};

/// Offsets from the master seed for each independent random stream.
pub mod streams {
    pub const SPLIT: u64 = 1;
    pub const NN_INIT: u64 = 2;
    pub const NN_TRAIN: u64 = 3;
    pub const KMEANS: u64 = 4;
    pub const DESIGN: u64 = 5;
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn stream(seed: u64, offset: u64) -> u64 {
    seed.wrapping_add(offset)
}

fn provenance(table: &mut Table, hash: &str, seed: u64, n_samples: usize) {
    table
        .meta("config_hash", hash)
        .meta("seed", seed)
        .meta("n_samples", n_samples);
}

// ---------------------------------------------------------------------------
// thresholds
// ---------------------------------------------------------------------------

pub fn cmd_thresholds(powers: &[f64], c: f64, sigma2: f64) -> Result<Table, CliError> {
    validate_powers(powers)?;
    MultiBandEeConfig {
        n_bands: 1,
        c,
        sigma2,
    }
    .validate()
    .map_err(|e| invalid(e.to_string()))?;
    let q = scalar_effective_thresholds(powers, c, sigma2)?;
    let mut table = Table::new(&["i", "p_low", "p_high", "threshold"]);
    let inputs = json!({ "powers": powers, "c": c, "sigma2": sigma2 }).to_string();
    provenance(&mut table, &crate::config::hex_digest(inputs.as_bytes()), 0, 0);
    for (j, &t) in q.thresholds().iter().enumerate() {
        table.push(vec![
            (j + 1).to_string(),
            num(powers[j]),
            num(powers[j + 1]),
            num(t),
        ]);
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// regions
// ---------------------------------------------------------------------------

pub fn cmd_regions(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    cfg.validate()?;
    match cfg.utility.n_bands() {
        Some(2) => {}
        Some(n) => {
            return Err(invalid(format!(
                "decision regions are drawn for 2 bands, config has {n}"
            )))
        }
        None => return Err(invalid("decision regions need a 2-band utility")),
    }
    let r = &cfg.regions;
    if r.bounds.len() != 2 {
        return Err(invalid("regions.bounds needs one (lo, hi) pair per band"));
    }
    if r.bounds.iter().any(|(lo, hi)| !(hi > lo) || *lo < 0.0) {
        return Err(invalid("regions.bounds must satisfy 0 <= lo < hi"));
    }
    if r.resolution == 0 {
        return Err(invalid("regions.resolution must be at least 1"));
    }
    let model = cfg.utility.model();
    let d = DecisionSet::power_product(&cfg.powers, 2)?;
    let q = DecisionalQuantizer::ExhaustiveArgmax {
        model,
        decisions: d.clone(),
    };
    let grid = as_region_grid(&q, &r.bounds, r.resolution)?;
    let mut table = Table::new(&["g1", "g2", "decision_index", "p1", "p2"]);
    provenance(&mut table, &cfg.hash(), cfg.seed, 0);
    table.meta("grid_points", grid.points.len());
    for (pt, &k) in grid.points.iter().zip(&grid.indices) {
        let p = d.get(k).and_then(Decision::as_vector).expect("power decision");
        table.push(vec![
            num(pt[0]),
            num(pt[1]),
            (k + 1).to_string(),
            num(p[0]),
            num(p[1]),
        ]);
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// compression
// ---------------------------------------------------------------------------

/// Zero followed by `count` log-spaced levels on `[lo, hi]`.
pub fn log_levels(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut levels = vec![0.0];
    if count == 1 {
        levels.push(lo);
        return levels;
    }
    let (a, b) = (lo.ln(), hi.ln());
    levels.extend((0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()));
    levels
}

/// All allocations of `p_total` over `n` bands in multiples of `p_total / steps`.
pub fn simplex_grid(n: usize, steps: usize, p_total: f64) -> Result<DecisionSet, CliError> {
    fn rec(n: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in 0..=left {
            prefix.push(i);
            rec(n - 1, left - i, prefix, out);
            prefix.pop();
        }
    }
    let mut parts = Vec::new();
    rec(n, steps, &mut Vec::with_capacity(n), &mut parts);
    let step = p_total / steps as f64;
    Ok(DecisionSet::new(
        parts
            .into_iter()
            .map(|v| Decision::Power(v.into_iter().map(|i| i as f64 * step).collect()))
            .collect(),
    )?)
}

/// Model, candidate decisions and oracle of one compression problem.
pub fn compression_problem(
    cfg: &ExperimentConfig,
    which: CompressionUtility,
) -> Result<(UtilityModel, DecisionSet, OracleSpec), CliError> {
    let o = &cfg.compression;
    let (n_bands, sigma2, c, p_total) = match &cfg.utility {
        UtilitySpec::MultibandEe(u) => (u.n_bands, u.sigma2, u.c, o.p_total),
        UtilitySpec::SumRate(u) => (u.n_bands, u.sigma2, 1.0, u.p_total),
        UtilitySpec::MimoEe(_) => return Err(invalid("compression needs a multi-band utility")),
    };
    Ok(match which {
        CompressionUtility::Ee => {
            let model = UtilityModel::MultiBandEe(MultiBandEeConfig { n_bands, c, sigma2 });
            let levels = log_levels(o.ee_levels, o.ee_p_min, o.ee_p_max);
            let candidates = DecisionSet::power_product(&levels, n_bands)?;
            let oracle = OracleSpec::FineGrid {
                resolution: o.oracle_resolution,
                p_min: o.ee_p_min,
                p_max: o.ee_p_max,
            };
            (model, candidates, oracle)
        }
        CompressionUtility::Sumrate => {
            let model = UtilityModel::SumRate(SumRateConfig {
                n_bands,
                sigma2,
                p_total,
            });
            let candidates = simplex_grid(n_bands, o.simplex_steps, p_total)?;
            (model, candidates, OracleSpec::WaterFilling)
        }
    })
}

fn validate_compression(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let o = &cfg.compression;
    if o.sigmas.is_empty() {
        return Err(invalid("compression.sigmas is empty"));
    }
    if o.sigmas.iter().any(|s| !(*s >= 0.0)) {
        return Err(invalid("compression.sigmas must be nonnegative"));
    }
    if o.sigmas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("compression.sigmas must be strictly ascending"));
    }
    if o.m_cap == 0 {
        return Err(invalid("compression.m_cap must be at least 1"));
    }
    if o.n_samples < o.m_cap {
        return Err(invalid("compression.n_samples must be at least m_cap"));
    }
    if o.ee_levels == 0 || o.oracle_resolution == 0 || o.simplex_steps == 0 {
        return Err(invalid("compression grid sizes must be positive"));
    }
    if !(o.ee_p_min > 0.0) || !(o.ee_p_max > o.ee_p_min) {
        return Err(invalid("compression power range must satisfy 0 < ee_p_min < ee_p_max"));
    }
    if !(o.p_total > 0.0) {
        return Err(invalid("compression.p_total must be positive"));
    }
    Ok(())
}

pub fn cmd_compression(
    cfg: &ExperimentConfig,
    which: Option<CompressionUtility>,
) -> Result<Table, CliError> {
    cfg.validate()?;
    validate_compression(cfg)?;
    let which = match (which, &cfg.utility) {
        (Some(w), _) => w,
        (None, UtilitySpec::MultibandEe(_)) => CompressionUtility::Ee,
        (None, UtilitySpec::SumRate(_)) => CompressionUtility::Sumrate,
        (None, UtilitySpec::MimoEe(_)) => {
            return Err(invalid("compression needs a multi-band utility"))
        }
    };
    let (model, candidates, oracle) = compression_problem(cfg, which)?;
    model.validate().map_err(|e| invalid(e.to_string()))?;
    let o = &cfg.compression;
    let n_bands = cfg.utility.n_bands().expect("checked above");
    let samples = sample_params(
        &ParameterSampler {
            kind: SamplerKind::ExponentialGains { n_bands },
            seed: cfg.seed,
        },
        o.n_samples,
    )?;
    let designer = DoqDesigner::new(
        RepresentativeMode::DiscreteCandidates(candidates),
        stream(cfg.seed, streams::DESIGN),
    );
    let curve = compression_curve(&model, &samples, &o.sigmas, &designer, &oracle, o.m_cap)?;
    let mut table = Table::new(&["sigma_pct", "m_required", "gamma", "loss_pct_at_m"]);
    provenance(&mut table, &cfg.hash(), cfg.seed, o.n_samples);
    table
        .meta("utility", format!("{which:?}").to_lowercase())
        .meta("oracle", oracle.name())
        .meta("reference_m", curve.reference_m)
        .meta("reference_is_cap", curve.reference_is_cap);
    for p in &curve.points {
        table.push(vec![
            num(p.sigma_pct),
            p.m_required
                .map(|m| m.to_string())
                .unwrap_or_else(|| "NA".to_string()),
            opt_num(p.gamma),
            opt_num(p.loss_pct_at_m),
        ]);
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// MIMO
// ---------------------------------------------------------------------------

fn mimo_config(cfg: &ExperimentConfig) -> Result<&MimoEeConfig, CliError> {
    match &cfg.utility {
        UtilitySpec::MimoEe(m) => Ok(m),
        _ => Err(invalid("this command needs a mimo_ee utility")),
    }
}

fn sampler_for(cfg: &ExperimentConfig) -> ParameterSampler {
    let kind = match &cfg.utility {
        UtilitySpec::MultibandEe(u) => SamplerKind::ExponentialGains { n_bands: u.n_bands },
        UtilitySpec::SumRate(u) => SamplerKind::ExponentialGains { n_bands: u.n_bands },
        UtilitySpec::MimoEe(u) => SamplerKind::ComplexGaussianMatrix {
            n_rx: u.n_rx,
            n_tx: u.n_tx,
        },
    };
    ParameterSampler {
        kind,
        seed: cfg.seed,
    }
}

/// Samples plus their 70/15/15 split.
pub struct SplitSamples {
    pub all: SampleSet,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn draw_split(cfg: &ExperimentConfig) -> Result<SplitSamples, CliError> {
    let all = sample_params(&sampler_for(cfg), cfg.n_samples)?;
    let (train, validation, test) = split_indices(all.len(), stream(cfg.seed, streams::SPLIT));
    Ok(SplitSamples {
        all,
        train,
        validation,
        test,
    })
}

/// Model and full EGT selection set at the configured (or optimal) budget.
pub struct MimoSetup {
    pub model: UtilityModel,
    pub budget: f64,
    pub full: DecisionSet,
    pub nested: Vec<DecisionSet>,
}

pub fn mimo_setup(
    cfg: &ExperimentConfig,
    samples: &SplitSamples,
    k_max: usize,
) -> Result<MimoSetup, CliError> {
    let base = mimo_config(cfg)?;
    let budget = if cfg.mimo.use_pstar {
        let train = samples.all.subset(&samples.train);
        find_pstar(base, &default_pstar_grid(base), &train)?
    } else {
        base.p_max
    };
    let mut local = base.clone();
    local.p_max = budget;
    let full = build_egt_decision_set(&local, budget)?;
    let nested = grow_nested_decision_sets(&full, k_max, cfg.mimo.decision_seed)?;
    Ok(MimoSetup {
        model: UtilityModel::MimoEe(local),
        budget,
        full,
        nested,
    })
}

fn mimo_k_max(cfg: &ExperimentConfig) -> Result<usize, CliError> {
    let m = mimo_config(cfg)?;
    if m.n_tx > 12 {
        return Err(invalid("n_tx above 12 gives an impractically large selection set"));
    }
    let full = (1usize << m.n_tx) - 1;
    let k_max = cfg.mimo.k_max.unwrap_or(full);
    if k_max == 0 || k_max > full {
        return Err(invalid(format!("mimo.k_max must lie in 1..={full}")));
    }
    if let Some(ks) = &cfg.mimo.nn_ks {
        if let Some(k) = ks.iter().find(|&&k| k == 0 || k > k_max) {
            return Err(invalid(format!("mimo.nn_ks entry {k} outside 1..={k_max}")));
        }
    }
    if cfg.mimo.kmeans_iters == 0 {
        return Err(invalid("mimo.kmeans_iters must be at least 1"));
    }
    Ok(k_max)
}

fn layer_sizes(cfg: &ExperimentConfig, input: usize, classes: usize) -> Vec<usize> {
    let mut sizes = vec![input];
    sizes.extend(&cfg.nn.hidden);
    sizes.push(classes);
    sizes
}

/// Train a classifier on exhaustive labels for `d`. A single decision needs
/// no classifier and yields `None`.
pub fn train_classifier(
    cfg: &ExperimentConfig,
    model: &UtilityModel,
    d: &DecisionSet,
    samples: &SplitSamples,
) -> Result<Option<(MlpClassifier, TrainReport)>, CliError> {
    if d.len() < 2 {
        return Ok(None);
    }
    let mut dataset = label_samples(model, d, &samples.all, stream(cfg.seed, streams::SPLIT))?;
    dataset.train = samples.train.clone();
    dataset.validation = samples.validation.clone();
    dataset.test = samples.test.clone();
    let input = samples.all.features()[0].len();
    let mut net = mlp_init(
        &layer_sizes(cfg, input, d.len()),
        stream(cfg.seed, streams::NN_INIT),
    )?;
    let report = mlp_train(
        &mut net,
        &dataset,
        &cfg.nn.train_config(stream(cfg.seed, streams::NN_TRAIN)),
    )?;
    Ok(Some((net, report)))
}

/// Per-budget expected utilities on the test split.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoRow {
    pub k: usize,
    pub eu_optimal: f64,
    pub eu_doq_exhaustive: f64,
    pub eu_nn: Option<f64>,
    pub eu_kmeans: f64,
    /// Mean per-sample relative loss against the full selection set, percent.
    pub loss_exhaustive_pct: f64,
    pub loss_nn_pct: Option<f64>,
    pub loss_kmeans_pct: f64,
}

pub fn run_mimo(cfg: &ExperimentConfig) -> Result<(Vec<MimoRow>, MimoSetup), CliError> {
    cfg.validate()?;
    let k_max = mimo_k_max(cfg)?;
    let samples = draw_split(cfg)?;
    let setup = mimo_setup(cfg, &samples, k_max)?;
    let model = &setup.model;
    let test = samples.all.subset(&samples.test);
    let train = samples.all.subset(&samples.train);
    let optimal = oracle_utilities(model, &test, &OracleSpec::MaxOverDecisionSet(setup.full.clone()))?;
    let eu_optimal = mean(&optimal)?;

    let mut rows = Vec::with_capacity(k_max);
    for (i, d) in setup.nested.iter().enumerate() {
        let k = i + 1;
        let exhaustive = DecisionalQuantizer::ExhaustiveArgmax {
            model: model.clone(),
            decisions: d.clone(),
        };
        let (_, u_exhaustive) = decision_utilities(&exhaustive, model, d, &test)?;

        let wants_nn = cfg.mimo.nn_ks.as_ref().is_none_or(|ks| ks.contains(&k));
        let eu_nn = if wants_nn {
            let q = match train_classifier(cfg, model, d, &samples)? {
                Some((net, _)) => DecisionalQuantizer::Neural(net),
                None => DecisionalQuantizer::Cell(CellQuantizer::constant(
                    test.features()[0].len(),
                    0,
                )),
            };
            Some(decision_utilities(&q, model, d, &test)?.1)
        } else {
            None
        };

        let fit = kmeans_fit(
            train.features(),
            k,
            cfg.mimo.kmeans_iters,
            stream(cfg.seed, streams::KMEANS),
        )?;
        let cells = assign_cell_decisions(
            &fit.to_cell_quantizer()?,
            model,
            d,
            &train,
            CellDecisionRule::CellMean,
        )?;
        let (_, u_kmeans) =
            decision_utilities(&DecisionalQuantizer::Cell(cells.quantizer), model, d, &test)?;

        let loss = |u: &[f64]| relative_loss_from(&optimal, u).map(|l| l.loss_pct);
        rows.push(MimoRow {
            k,
            eu_optimal,
            eu_doq_exhaustive: mean(&u_exhaustive)?,
            eu_nn: eu_nn.as_deref().map(mean).transpose()?,
            eu_kmeans: mean(&u_kmeans)?,
            loss_exhaustive_pct: loss(&u_exhaustive)?,
            loss_nn_pct: eu_nn.as_deref().map(loss).transpose()?,
            loss_kmeans_pct: loss(&u_kmeans)?,
        });
    }
    Ok((rows, setup))
}

pub fn cmd_mimo(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let (rows, setup) = run_mimo(cfg)?;
    let mut table = Table::new(&["k", "eu_optimal", "eu_doq_exhaustive", "eu_nn", "eu_kmeans"]);
    provenance(&mut table, &cfg.hash(), cfg.seed, cfg.n_samples);
    table
        .meta("n_test", cfg.n_samples - cfg.n_samples * 70 / 100 - cfg.n_samples * 15 / 100)
        .meta("egt_power", num(setup.budget));
    for r in rows {
        table.push(vec![
            r.k.to_string(),
            num(r.eu_optimal),
            num(r.eu_doq_exhaustive),
            opt_num(r.eu_nn),
            num(r.eu_kmeans),
        ]);
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// train-nn / eval
// ---------------------------------------------------------------------------

/// Decision set a classifier is trained for: the power-level product for
/// gain models, `D_k` for MIMO.
pub fn classifier_problem(
    cfg: &ExperimentConfig,
    samples: &SplitSamples,
) -> Result<(UtilityModel, DecisionSet, OracleSpec), CliError> {
    match &cfg.utility {
        UtilitySpec::MimoEe(_) => {
            let k_max = mimo_k_max(cfg)?;
            let k = cfg.mimo.k.unwrap_or(k_max);
            let setup = mimo_setup(cfg, samples, k.max(1))?;
            let d = setup.nested[k - 1].clone();
            Ok((setup.model, d, OracleSpec::MaxOverDecisionSet(setup.full)))
        }
        UtilitySpec::MultibandEe(u) => Ok((
            cfg.utility.model(),
            DecisionSet::power_product(&cfg.powers, u.n_bands)?,
            OracleSpec::fine_grid_default(),
        )),
        UtilitySpec::SumRate(u) => Ok((
            cfg.utility.model(),
            DecisionSet::power_product(&cfg.powers, u.n_bands)?,
            OracleSpec::WaterFilling,
        )),
    }
}

fn validate_classifier(cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.validate()?;
    match &cfg.utility {
        UtilitySpec::MimoEe(_) => {
            let k_max = mimo_k_max(cfg)?;
            match cfg.mimo.k {
                Some(k) if k < 2 || k > k_max => {
                    Err(invalid(format!("mimo.k must lie in 2..={k_max}")))
                }
                None if k_max < 2 => Err(invalid("a classifier needs at least two decisions")),
                _ => Ok(()),
            }
        }
        _ => {
            let n = cfg.utility.n_bands().unwrap_or(1);
            let count = (cfg.powers.len() + 1).checked_pow(n as u32).unwrap_or(usize::MAX);
            if count > 4096 {
                return Err(invalid("power product is too large for a classifier"));
            }
            Ok(())
        }
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model_text: String,
    pub report: serde_json::Value,
}

pub fn cmd_train_nn(cfg: &ExperimentConfig) -> Result<TrainOutcome, CliError> {
    validate_classifier(cfg)?;
    let samples = draw_split(cfg)?;
    let (model, d, _) = classifier_problem(cfg, &samples)?;
    let (net, report) = train_classifier(cfg, &model, &d, &samples)?
        .ok_or_else(|| invalid("a classifier needs at least two decisions"))?;
    let test = samples.all.subset(&samples.test);
    let exhaustive = expected_utility(
        &DecisionalQuantizer::ExhaustiveArgmax {
            model: model.clone(),
            decisions: d.clone(),
        },
        &model,
        &d,
        &test,
    )?;
    let model_text = net.to_text();
    let eu_nn = expected_utility(&DecisionalQuantizer::Neural(net), &model, &d, &test)?;
    let report = json!({
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "n_samples": cfg.n_samples,
        "n_decisions": d.len(),
        "train_accuracy": report.train_accuracy,
        "validation_accuracy": report.validation_accuracy,
        "test_accuracy": report.test_accuracy,
        "best_epoch": report.best_epoch,
        "epochs_run": report.epochs_run,
        "final_train_loss": report.loss_curve.last(),
        "eu_nn_test": eu_nn,
        "eu_exhaustive_test": exhaustive,
    });
    Ok(TrainOutcome { model_text, report })
}

pub fn cmd_eval(cfg: &ExperimentConfig, model_text: &str) -> Result<serde_json::Value, CliError> {
    validate_classifier(cfg)?;
    let net = MlpClassifier::from_text(model_text).map_err(|e| invalid(format!("model file: {e}")))?;
    let samples = draw_split(cfg)?;
    let (model, d, oracle) = classifier_problem(cfg, &samples)?;
    if net.n_classes() != d.len() || net.input_dim() != samples.all.features()[0].len() {
        return Err(invalid(format!(
            "model has {} inputs and {} classes; config implies {} and {}",
            net.input_dim(),
            net.n_classes(),
            samples.all.features()[0].len(),
            d.len()
        )));
    }
    let test = samples.all.subset(&samples.test);
    let r = evaluate(&DecisionalQuantizer::Neural(net), &model, &d, &test, &oracle)?;
    let exhaustive = expected_utility(
        &DecisionalQuantizer::ExhaustiveArgmax {
            model: model.clone(),
            decisions: d.clone(),
        },
        &model,
        &d,
        &test,
    )?;
    Ok(json!({
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "n_samples": cfg.n_samples,
        "n_test": r.n_samples,
        "oracle": r.oracle,
        "expected_utility": r.expected_utility,
        "oracle_expected_utility": r.oracle_expected_utility,
        "exhaustive_expected_utility": exhaustive,
        "relative_loss_pct": r.relative_loss_pct,
        "skipped": r.skipped,
        "per_decision_counts": r.per_decision_counts,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_levels_span_range() {
        let l = log_levels(5, 0.1, 1000.0);
        assert_eq!(l.len(), 6);
        assert_eq!(l[0], 0.0);
        assert!((l[1] - 0.1).abs() < 1e-15);
        assert!((l[3] - 10.0).abs() < 1e-12);
        assert!((l[5] - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn simplex_grid_counts_compositions() {
        let d = simplex_grid(2, 4, 8.0).unwrap();
        assert_eq!(d.len(), 5);
        assert_eq!(d.get(0), Some(&Decision::Power(vec![0.0, 8.0])));
        let d3 = simplex_grid(3, 4, 1.0).unwrap();
        // C(6, 2)
        assert_eq!(d3.len(), 15);
        for dec in d3.iter() {
            let s: f64 = dec.as_vector().unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn thresholds_table() {
        let t = cmd_thresholds(&[1.0, 2.0, 3.0], 1.0, 10.0).unwrap();
        assert_eq!(t.rows.len(), 2);
        let a: f64 = t.rows[0][3].parse().unwrap();
        let b: f64 = t.rows[1][3].parse().unwrap();
        assert!(a > b);
        assert!(matches!(
            cmd_thresholds(&[2.0, 2.0], 1.0, 10.0),
            Err(CliError::Validation(_))
        ));
    }
}
