//! Decisional quantizers: maps from a parameter realization straight to the
//! index of a decision.
//!
//! Decision indices are 0-based in this API. Reports and CSV files shift
//! them to 1-based.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DoqError, Result};
use crate::exec;
use crate::learn::MlpClassifier;
use crate::linalg::squared_distance;
use crate::model::{encode_features, DecisionSet, Param, SampleSet, UtilityModel};

/// Scalar quantizer given by decreasing thresholds on a single gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdQuantizer {
    thresholds: Vec<f64>,
    decision_order: Vec<usize>,
}

impl ThresholdQuantizer {
    /// `thresholds` must be strictly decreasing and positive;
    /// `decision_order[i]` is the decision used on the i-th interval counted
    /// from the top (`g` above every threshold is interval 0).
    pub fn new(thresholds: Vec<f64>, decision_order: Vec<usize>) -> Result<Self> {
        if decision_order.len() != thresholds.len() + 1 {
            return Err(DoqError::domain(format!(
                "{} thresholds need {} decisions, got {}",
                thresholds.len(),
                thresholds.len() + 1,
                decision_order.len()
            )));
        }
        if thresholds.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(DoqError::domain("thresholds must be positive and finite"));
        }
        if thresholds.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(DoqError::domain("thresholds must be strictly decreasing"));
        }
        let mut seen = decision_order.clone();
        seen.sort_unstable();
        if seen.iter().enumerate().any(|(i, &d)| i != d) {
            return Err(DoqError::domain("decision order must be a permutation"));
        }
        Ok(ThresholdQuantizer {
            thresholds,
            decision_order,
        })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn decision_order(&self) -> &[usize] {
        &self.decision_order
    }

    /// A gain equal to a threshold falls on the lower-gain (higher-power) side.
    pub fn quantize_scalar(&self, g: f64) -> usize {
        let interval = self.thresholds.iter().take_while(|&&t| t >= g).count();
        self.decision_order[interval]
    }
}

/// Nearest-representative quantizer with one decision attached per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellQuantizer {
    representatives: Vec<Vec<f64>>,
    cell_decisions: Vec<usize>,
}

impl CellQuantizer {
    pub fn new(representatives: Vec<Vec<f64>>, cell_decisions: Vec<usize>) -> Result<Self> {
        if representatives.is_empty() {
            return Err(DoqError::domain("cell quantizer needs at least one cell"));
        }
        if representatives.len() != cell_decisions.len() {
            return Err(DoqError::domain(format!(
                "{} representatives but {} cell decisions",
                representatives.len(),
                cell_decisions.len()
            )));
        }
        let dim = representatives[0].len();
        if representatives.iter().any(|r| r.len() != dim) {
            return Err(DoqError::domain("representatives differ in dimension"));
        }
        Ok(CellQuantizer {
            representatives,
            cell_decisions,
        })
    }

    /// Single cell: always answers `decision`.
    pub fn constant(dim: usize, decision: usize) -> Self {
        CellQuantizer {
            representatives: vec![vec![0.0; dim]],
            cell_decisions: vec![decision],
        }
    }

    pub fn representatives(&self) -> &[Vec<f64>] {
        &self.representatives
    }

    pub fn cell_decisions(&self) -> &[usize] {
        &self.cell_decisions
    }

    pub fn dim(&self) -> usize {
        self.representatives[0].len()
    }

    pub(crate) fn with_decisions(mut self, decisions: Vec<usize>) -> Self {
        self.cell_decisions = decisions;
        self
    }

    /// Index of the nearest representative, lowest index on ties.
    pub fn nearest_cell(&self, features: &[f64]) -> Result<usize> {
        if features.len() != self.dim() {
            return Err(DoqError::domain(format!(
                "feature length {} does not match representative dimension {}",
                features.len(),
                self.dim()
            )));
        }
        Ok(nearest(&self.representatives, features))
    }
}

pub(crate) fn nearest(reps: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = (0usize, f64::INFINITY);
    for (j, r) in reps.iter().enumerate() {
        let d = squared_distance(x, r);
        if d < best.1 {
            best = (j, d);
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecisionalQuantizer {
    /// Per-realization argmax over the decision set; needs the model.
    ExhaustiveArgmax {
        model: UtilityModel,
        decisions: DecisionSet,
    },
    Threshold1D(ThresholdQuantizer),
    Cell(CellQuantizer),
    /// Trained classifier whose classes index the decision set.
    Neural(MlpClassifier),
}

impl DecisionalQuantizer {
    pub fn quantize(&self, g: &Param) -> Result<usize> {
        match self {
            DecisionalQuantizer::ExhaustiveArgmax { model, decisions } => {
                model.best_decision(decisions, g).map(|(k, _)| k)
            }
            DecisionalQuantizer::Threshold1D(t) => match g {
                Param::Gains(v) if v.len() == 1 => Ok(t.quantize_scalar(v[0])),
                _ => Err(DoqError::domain("threshold quantizer needs a scalar gain")),
            },
            _ => self.quantize_features(g, &encode_features(g)),
        }
    }

    /// As [`quantize`](Self::quantize), reusing precomputed features.
    pub fn quantize_features(&self, g: &Param, features: &[f64]) -> Result<usize> {
        match self {
            DecisionalQuantizer::Cell(c) => {
                c.nearest_cell(features).map(|j| c.cell_decisions[j])
            }
            DecisionalQuantizer::Neural(net) => net.predict(features),
            _ => self.quantize(g),
        }
    }

    /// Decision index for every sample, in sample order.
    pub fn quantize_all(&self, samples: &SampleSet) -> Result<Vec<usize>> {
        exec::try_map_indexed(samples.len(), |t| {
            self.quantize_features(&samples.params()[t], &samples.features()[t])
        })
    }
}

// ---------------------------------------------------------------------------
// Exhaustive labeling
// ---------------------------------------------------------------------------

/// Labeled realizations with a train/validation/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle of `0..n` cut 70/15/15.
pub fn split_indices(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let n_train = n * 70 / 100;
    let n_val = n * 15 / 100;
    let test = idx.split_off(n_train + n_val);
    let validation = idx.split_off(n_train);
    (idx, validation, test)
}

/// Per-sample argmax labels (ties to the lowest index).
pub fn argmax_labels(model: &UtilityModel, d: &DecisionSet, samples: &SampleSet) -> Result<Vec<usize>> {
    exec::try_map_indexed(samples.len(), |t| {
        model.best_decision(d, &samples.params()[t]).map(|(k, _)| k)
    })
}

pub fn label_samples(
    model: &UtilityModel,
    d: &DecisionSet,
    samples: &SampleSet,
    split_seed: u64,
) -> Result<LabeledDataset> {
    let labels = argmax_labels(model, d, samples)?;
    let (train, validation, test) = split_indices(samples.len(), split_seed);
    Ok(LabeledDataset {
        features: samples.features().to_vec(),
        labels,
        n_classes: d.len(),
        train,
        validation,
        test,
    })
}

// ---------------------------------------------------------------------------
// Scalar energy-efficiency thresholds
// ---------------------------------------------------------------------------

/// Gain at which powers `p_low < p_high` give equal single-band efficiency.
pub fn pairwise_threshold(p_low: f64, p_high: f64, c: f64, sigma2: f64) -> Result<f64> {
    if !(p_low > 0.0 && p_high > p_low) {
        return Err(DoqError::domain(format!(
            "powers must satisfy 0 < {p_low} < {p_high}"
        )));
    }
    let a = c * sigma2;
    if !(a > 0.0) {
        return Err(DoqError::domain("c * sigma2 must be positive"));
    }
    Ok(a * (1.0 / p_low - 1.0 / p_high) / (p_high.ln() - p_low.ln()))
}

/// Threshold quantizer for single-band EE over ascending power levels.
/// Only consecutive pairs produce region boundaries; decision `i` is power
/// level `i` and larger gains map to lower powers.
pub fn scalar_effective_thresholds(powers: &[f64], c: f64, sigma2: f64) -> Result<ThresholdQuantizer> {
    if powers.len() < 2 {
        return Err(DoqError::domain("need at least two power levels"));
    }
    for (i, w) in powers.windows(2).enumerate() {
        if !(w[0] > 0.0 && w[1] > w[0]) {
            return Err(DoqError::domain(format!(
                "powers must be positive and strictly ascending: P{} = {} and P{} = {}",
                i + 1,
                w[0],
                i + 2,
                w[1]
            )));
        }
    }
    let thresholds = powers
        .windows(2)
        .map(|w| pairwise_threshold(w[0], w[1], c, sigma2))
        .collect::<Result<Vec<_>>>()?;
    if thresholds.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(DoqError::domain(
            "consecutive thresholds are not strictly decreasing (levels too close for double precision)",
        ));
    }
    ThresholdQuantizer::new(thresholds, (0..powers.len()).collect())
}

// ---------------------------------------------------------------------------
// Region maps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    /// Grid coordinates, row-major with the first axis outermost.
    pub points: Vec<Vec<f64>>,
    pub indices: Vec<usize>,
}

/// Evaluate `q` on a uniform grid over `bounds` (one `(lo, hi)` per axis).
/// Axis coordinates are `lo + (i + 1) (hi - lo) / resolution`, so the grid
/// never touches the lower faces; resolution 1 is the upper corner.
pub fn as_region_grid(
    q: &DecisionalQuantizer,
    bounds: &[(f64, f64)],
    resolution: usize,
) -> Result<RegionGrid> {
    if bounds.is_empty() || bounds.len() > 2 {
        return Err(DoqError::Unsupported(format!(
            "region grids are 1- or 2-dimensional, got {}",
            bounds.len()
        )));
    }
    if resolution == 0 {
        return Err(DoqError::domain("resolution must be at least 1"));
    }
    if bounds.iter().any(|(lo, hi)| !(hi > lo)) {
        return Err(DoqError::domain("each bound needs lo < hi"));
    }
    let axis = |&(lo, hi): &(f64, f64)| -> Vec<f64> {
        let step = (hi - lo) / resolution as f64;
        (0..resolution).map(|i| lo + (i + 1) as f64 * step).collect()
    };
    let axes: Vec<Vec<f64>> = bounds.iter().map(axis).collect();
    let points: Vec<Vec<f64>> = if axes.len() == 1 {
        axes[0].iter().map(|&x| vec![x]).collect()
    } else {
        axes[0]
            .iter()
            .flat_map(|&x| axes[1].iter().map(move |&y| vec![x, y]))
            .collect()
    };
    let indices = exec::try_map_indexed(points.len(), |i| {
        q.quantize(&Param::Gains(points[i].clone()))
    })?;
    Ok(RegionGrid { points, indices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Decision, MultiBandEeConfig};

    fn two_band() -> (UtilityModel, DecisionSet) {
        (
            UtilityModel::MultiBandEe(MultiBandEeConfig {
                n_bands: 2,
                c: 1.0,
                sigma2: 10.0,
            }),
            DecisionSet::power_product(&[2.0, 3.0], 2).unwrap(),
        )
    }

    #[test]
    fn two_level_threshold() {
        let q = scalar_effective_thresholds(&[2.0, 3.0], 1.0, 10.0).unwrap();
        assert!((q.thresholds()[0] - 4.11052).abs() < 2e-5);
    }

    #[test]
    fn three_level_thresholds() {
        let q = scalar_effective_thresholds(&[1.0, 2.0, 3.0], 1.0, 10.0).unwrap();
        assert!((q.thresholds()[0] - 7.21348).abs() < 5e-6);
        assert!((q.thresholds()[1] - 4.11052).abs() < 2e-5);
        let skipped = pairwise_threshold(1.0, 3.0, 1.0, 10.0).unwrap();
        assert!((skipped - 6.06789).abs() < 5e-4);
        assert!(q.thresholds()[0] > skipped && skipped > q.thresholds()[1]);
        // g = 5 lies between the two thresholds: middle level
        assert_eq!(q.quantize_scalar(5.0), 1);
        assert_eq!(q.quantize_scalar(100.0), 0);
        assert_eq!(q.quantize_scalar(0.1), 2);
        // boundary joins the higher-power side
        assert_eq!(q.quantize_scalar(q.thresholds()[0]), 1);
    }

    #[test]
    fn threshold_scales_with_noise() {
        let a = pairwise_threshold(2.0, 5.0, 1.0, 1.0).unwrap();
        let b = pairwise_threshold(2.0, 5.0, 3.0, 7.0).unwrap();
        assert!((b - 21.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn threshold_errors() {
        assert!(scalar_effective_thresholds(&[3.0, 2.0], 1.0, 10.0).is_err());
        assert!(scalar_effective_thresholds(&[1.0, 2.0], 0.0, 10.0).is_err());
        assert!(scalar_effective_thresholds(&[1.0], 1.0, 10.0).is_err());
        let err = scalar_effective_thresholds(&[1.0, 4.0, 4.0], 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("P2 = 4"));
    }

    #[test]
    fn exhaustive_two_band_example() {
        let (model, d) = two_band();
        let us = model.utilities(&d, &Param::Gains(vec![5.0, 1.0])).unwrap();
        let expected = [0.09365, 0.08071, 0.10403, 0.09152];
        for (u, e) in us.iter().zip(expected) {
            assert!((u - e).abs() < 5e-6, "{u} vs {e}");
        }
        let q = DecisionalQuantizer::ExhaustiveArgmax {
            model,
            decisions: d.clone(),
        };
        let k = q.quantize(&Param::Gains(vec![5.0, 1.0])).unwrap();
        assert_eq!(d.get(k), Some(&Decision::Power(vec![3.0, 2.0])));
        let k = q.quantize(&Param::Gains(vec![1.0, 5.0])).unwrap();
        assert_eq!(d.get(k), Some(&Decision::Power(vec![2.0, 3.0])));
    }

    #[test]
    fn single_cell_is_constant() {
        let q = DecisionalQuantizer::Cell(CellQuantizer::constant(2, 3));
        for g in [[0.1, 9.0], [4.0, 4.0]] {
            assert_eq!(q.quantize(&Param::Gains(g.to_vec())).unwrap(), 3);
        }
        assert!(q.quantize(&Param::Gains(vec![1.0])).is_err());
    }

    #[test]
    fn labels_with_single_or_duplicate_decisions() {
        let (model, _) = two_band();
        let samples = SampleSet::from_params(
            vec![
                Param::Gains(vec![5.0, 1.0]),
                Param::Gains(vec![0.2, 0.3]),
                Param::Gains(vec![1.0, 5.0]),
            ],
            0,
        );
        let one = DecisionSet::new(vec![Decision::Power(vec![2.0, 2.0])]).unwrap();
        let ds = label_samples(&model, &one, &samples, 1).unwrap();
        assert!(ds.labels.iter().all(|&l| l == 0));
        let dup = DecisionSet::new(vec![
            Decision::Power(vec![2.0, 3.0]),
            Decision::Power(vec![2.0, 3.0]),
        ])
        .unwrap();
        let ds = label_samples(&model, &dup, &samples, 1).unwrap();
        assert!(ds.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn split_is_a_partition() {
        let (a, b, c) = split_indices(1000, 5);
        assert_eq!((a.len(), b.len(), c.len()), (700, 150, 150));
        let mut all: Vec<usize> = a.iter().chain(&b).chain(&c).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn region_grid_basics() {
        let q = DecisionalQuantizer::Cell(CellQuantizer::constant(2, 1));
        let grid = as_region_grid(&q, &[(0.0, 5.0), (0.0, 5.0)], 10).unwrap();
        assert_eq!(grid.indices.len(), 100);
        assert!(grid.indices.iter().all(|&i| i == 1));
        let grid = as_region_grid(&q, &[(0.0, 5.0), (0.0, 5.0)], 1).unwrap();
        assert_eq!(grid.points, vec![vec![5.0, 5.0]]);
        assert!(as_region_grid(&q, &[(0.0, 1.0); 3], 4).is_err());
    }

    #[test]
    fn two_band_regions_have_four_labels() {
        let (model, d) = two_band();
        let q = DecisionalQuantizer::ExhaustiveArgmax { model, decisions: d };
        let grid = as_region_grid(&q, &[(0.0, 5.0), (0.0, 5.0)], 200).unwrap();
        let mut seen = grid.indices.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }
}
