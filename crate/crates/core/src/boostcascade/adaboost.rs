//! Decision stumps and discrete AdaBoost.

use super::BoostError;
use crate::Label;

const EPS_FLOOR: f64 = 1e-10;
const EPS_CEIL: f64 = 0.5 - 1e-10;
const TIE_EPS: f64 = 1e-12;

/// One-feature threshold rule: `polarity` when the value exceeds `threshold`,
/// `-polarity` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakStump {
    pub feature: usize,
    pub threshold: f64,
    /// `+1` or `-1`.
    pub polarity: i8,
}

impl WeakStump {
    #[inline]
    pub fn predict(&self, value: f64) -> f64 {
        let p = self.polarity as f64;
        if value > self.threshold {
            p
        } else {
            -p
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoostRound {
    pub stump: WeakStump,
    pub alpha: f64,
    /// Clamped weighted error the alpha was derived from.
    pub epsilon: f64,
}

/// `0.5 · ln((1 - ε) / ε)`.
pub fn alpha_for(epsilon: f64) -> f64 {
    0.5 * ((1.0 - epsilon) / epsilon).ln()
}

/// Weighted vote of boosted stumps, `sign(Σ αₜ hₜ(x) - shift)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongClassifier {
    pub rounds: Vec<BoostRound>,
    pub shift: f64,
}

impl StrongClassifier {
    /// Raw vote `Σ αₜ hₜ(x)`, before the shift.
    pub fn vote(&self, values: &[f64]) -> Result<f64, BoostError> {
        let mut acc = 0.0;
        for r in &self.rounds {
            let v = values
                .get(r.stump.feature)
                .ok_or(BoostError::MissingFeature(r.stump.feature))?;
            acc += r.alpha * r.stump.predict(*v);
        }
        Ok(acc)
    }

    pub fn margin(&self, values: &[f64]) -> Result<f64, BoostError> {
        Ok(self.vote(values)? - self.shift)
    }

    /// Positive when the margin is `>= 0`.
    pub fn classify(&self, values: &[f64]) -> Result<Label, BoostError> {
        self.margin(values).map(Label::from_margin)
    }

    pub fn total_alpha(&self) -> f64 {
        self.rounds.iter().map(|r| r.alpha).sum()
    }
}

/// Best stump over one feature's values.
///
/// Candidate thresholds are `-inf`, midpoints between consecutive distinct
/// sorted values, and `+inf`; ties go to the smaller threshold, then to
/// polarity `+1`.
pub fn best_stump(
    values: &[f64],
    weights: &[f64],
    labels: &[Label],
) -> Result<(WeakStump, f64), BoostError> {
    check_lengths(values.len(), weights.len(), labels.len())?;
    if values.len() < 2 {
        return Err(BoostError::InvalidArgument("need at least two samples".into()));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(BoostError::DegenerateInput);
    }
    let mut order: Vec<u32> = (0..values.len() as u32).collect();
    order.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]));
    let (threshold, polarity, eps) = sweep(values, &order, weights, labels);
    Ok((
        WeakStump {
            feature: 0,
            threshold,
            polarity,
        },
        eps,
    ))
}

fn check_lengths(v: usize, w: usize, l: usize) -> Result<(), BoostError> {
    if v != w || v != l {
        return Err(BoostError::LengthMismatch(format!(
            "{v} values, {w} weights, {l} labels"
        )));
    }
    Ok(())
}

/// Threshold sweep over presorted sample indices.
fn sweep(values: &[f64], order: &[u32], weights: &[f64], labels: &[Label]) -> (f64, i8, f64) {
    let (mut total_pos, mut total_neg) = (0.0, 0.0);
    for (&w, &l) in weights.iter().zip(labels) {
        match l {
            Label::Positive => total_pos += w,
            Label::Negative => total_neg += w,
        }
    }
    // Samples at or below the threshold are predicted -polarity.
    let errors = |below_pos: f64, below_neg: f64| {
        (
            below_pos + (total_neg - below_neg),
            below_neg + (total_pos - below_pos),
        )
    };
    // Errors equal up to summation rounding count as ties, so the earlier
    // (smaller threshold, then +1) candidate keeps winning.
    let mut best = (f64::NEG_INFINITY, 1i8, f64::INFINITY);
    let mut consider = |thr: f64, (e_plus, e_minus): (f64, f64)| {
        if e_plus < best.2 - TIE_EPS {
            best = (thr, 1, e_plus);
        }
        if e_minus < best.2 - TIE_EPS {
            best = (thr, -1, e_minus);
        }
    };
    consider(f64::NEG_INFINITY, errors(0.0, 0.0));
    let (mut below_pos, mut below_neg) = (0.0, 0.0);
    let n = order.len();
    for i in 0..n {
        let idx = order[i] as usize;
        match labels[idx] {
            Label::Positive => below_pos += weights[idx],
            Label::Negative => below_neg += weights[idx],
        }
        let v = values[idx];
        let thr = if i + 1 < n {
            let next = values[order[i + 1] as usize];
            if next == v {
                continue;
            }
            let mid = v + 0.5 * (next - v);
            if mid >= next {
                v
            } else {
                mid
            }
        } else {
            f64::INFINITY
        };
        consider(thr, errors(below_pos, below_neg));
    }
    best
}

/// Per-feature sample values (feature-major) with a cached sort order.
#[derive(Clone, Debug)]
pub struct FeatureMatrix {
    n_samples: usize,
    values: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl FeatureMatrix {
    /// `columns[f][i]` is feature `f` on sample `i`.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self, BoostError> {
        let n_samples = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_samples) {
            return Err(BoostError::LengthMismatch("ragged feature columns".into()));
        }
        let order = columns
            .iter()
            .map(|c| {
                let mut o: Vec<u32> = (0..n_samples as u32).collect();
                o.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]));
                o
            })
            .collect();
        Ok(Self {
            n_samples,
            values: columns,
            order,
        })
    }

    /// Builds from sample-major rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, BoostError> {
        let n_features = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(BoostError::LengthMismatch("ragged sample rows".into()));
        }
        let cols = (0..n_features)
            .map(|f| rows.iter().map(|r| r[f]).collect())
            .collect();
        Self::from_columns(cols)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, f: usize) -> &[f64] {
        &self.values[f]
    }
}

/// A feature-value row and its label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub values: Vec<f64>,
    pub label: Label,
}

/// What one boosting round did to the weight distribution.
#[derive(Clone, Debug)]
pub struct RoundTrace {
    pub raw_epsilon: f64,
    pub epsilon: f64,
    pub alpha: f64,
    /// Normalizer `Z_t = Σ w_i exp(-α y_i h(x_i))`.
    pub normalizer: f64,
    pub weights_before: Vec<f64>,
    pub weights_after: Vec<f64>,
}

/// Incremental AdaBoost over a fixed feature matrix.
pub struct AdaBoost<'a> {
    matrix: &'a FeatureMatrix,
    labels: &'a [Label],
    weights: Vec<f64>,
    votes: Vec<f64>,
    rounds: Vec<BoostRound>,
    trace: Vec<RoundTrace>,
    finished: bool,
    keep_trace: bool,
}

impl<'a> AdaBoost<'a> {
    pub fn new(matrix: &'a FeatureMatrix, labels: &'a [Label]) -> Result<Self, BoostError> {
        let n = matrix.n_samples();
        if labels.len() != n {
            return Err(BoostError::LengthMismatch(format!(
                "{n} samples, {} labels",
                labels.len()
            )));
        }
        if matrix.n_features() == 0 {
            return Err(BoostError::InvalidArgument("no features".into()));
        }
        if n < 2 || labels.iter().all(|&l| l == labels[0]) {
            return Err(BoostError::DegenerateInput);
        }
        Ok(Self {
            matrix,
            labels,
            weights: vec![1.0 / n as f64; n],
            votes: vec![0.0; n],
            rounds: Vec::new(),
            trace: Vec::new(),
            finished: false,
            keep_trace: false,
        })
    }

    /// Record a [`RoundTrace`] per round.
    pub fn with_trace(mut self) -> Self {
        self.keep_trace = true;
        self
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rounds(&self) -> &[BoostRound] {
        &self.rounds
    }

    pub fn trace(&self) -> &[RoundTrace] {
        &self.trace
    }

    /// Accumulated `Σ αₜ hₜ(x_i)` for every training sample.
    pub fn votes(&self) -> &[f64] {
        &self.votes
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn training_error(&self) -> f64 {
        let wrong = self
            .votes
            .iter()
            .zip(self.labels)
            .filter(|(&v, &l)| Label::from_margin(v) != l)
            .count();
        wrong as f64 / self.labels.len() as f64
    }

    /// Selects the stump with the lowest weighted error over every feature.
    fn select(&self) -> (WeakStump, f64) {
        let mut best: Option<(WeakStump, f64)> = None;
        for f in 0..self.matrix.n_features() {
            let (threshold, polarity, eps) = sweep(
                &self.matrix.values[f],
                &self.matrix.order[f],
                &self.weights,
                self.labels,
            );
            if best.as_ref().is_none_or(|b| eps < b.1 - TIE_EPS) {
                best = Some((
                    WeakStump {
                        feature: f,
                        threshold,
                        polarity,
                    },
                    eps,
                ));
            }
        }
        best.expect("matrix has at least one feature")
    }

    /// Runs one round. Returns `false` once boosting has stopped: the best
    /// stump no longer beats chance, or the ensemble fits the data exactly.
    pub fn step(&mut self) -> bool {
        if self.finished {
            return false;
        }
        let (stump, raw_eps) = self.select();
        if raw_eps >= 0.5 && !self.rounds.is_empty() {
            self.finished = true;
            return false;
        }
        let epsilon = raw_eps.clamp(EPS_FLOOR, EPS_CEIL);
        let alpha = alpha_for(epsilon);
        let column = &self.matrix.values[stump.feature];
        let before = self.keep_trace.then(|| self.weights.clone());
        let mut z = 0.0;
        for i in 0..self.weights.len() {
            let h = stump.predict(column[i]);
            self.votes[i] += alpha * h;
            self.weights[i] *= (-alpha * self.labels[i].sign() * h).exp();
            z += self.weights[i];
        }
        self.weights.iter_mut().for_each(|w| *w /= z);
        if let Some(weights_before) = before {
            self.trace.push(RoundTrace {
                raw_epsilon: raw_eps,
                epsilon,
                alpha,
                normalizer: z,
                weights_before,
                weights_after: self.weights.clone(),
            });
        }
        self.rounds.push(BoostRound {
            stump,
            alpha,
            epsilon,
        });
        if raw_eps >= 0.5 || self.training_error() == 0.0 {
            self.finished = true;
        }
        true
    }

    pub fn classifier(&self) -> StrongClassifier {
        StrongClassifier {
            rounds: self.rounds.clone(),
            shift: 0.0,
        }
    }
}

/// Trains up to `rounds` boosting rounds on labeled feature rows.
pub fn adaboost_train(samples: &[LabeledSample], rounds: usize) -> Result<StrongClassifier, BoostError> {
    Ok(adaboost_train_traced(samples, rounds)?.0)
}

/// [`adaboost_train`] that also returns the per-round weight trace.
pub fn adaboost_train_traced(
    samples: &[LabeledSample],
    rounds: usize,
) -> Result<(StrongClassifier, Vec<RoundTrace>), BoostError> {
    if rounds == 0 {
        return Err(BoostError::InvalidArgument("rounds must be >= 1".into()));
    }
    let rows: Vec<Vec<f64>> = samples.iter().map(|s| s.values.clone()).collect();
    let labels: Vec<Label> = samples.iter().map(|s| s.label).collect();
    let matrix = FeatureMatrix::from_rows(&rows)?;
    let mut booster = AdaBoost::new(&matrix, &labels)?.with_trace();
    for _ in 0..rounds {
        if !booster.step() {
            break;
        }
    }
    Ok((booster.classifier(), booster.trace.clone()))
}
