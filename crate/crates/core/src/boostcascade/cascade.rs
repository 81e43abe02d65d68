//! Staged early-rejection cascade, its trainer, the sliding-window face
//! detector and the `CASCADE1` model format.

use std::fmt::Write as _;
use std::path::Path;

use log::debug;

use super::adaboost::{AdaBoost, BoostRound, FeatureMatrix, StrongClassifier, WeakStump};
use super::features::{
    enumerate_features, eval_scaled, HaarFeature, HaarKind, SubRects, WindowIntegrals, WindowNorm,
    BASE_WINDOW,
};
use super::BoostError;
use crate::detection::{nms, Detection};
use crate::imgcore::{resize, GrayImage, Rect};
use crate::Label;

/// Boosted stages evaluated in order; a window must pass all of them.
///
/// Each stage's [`StrongClassifier::shift`] is its acceptance threshold, and
/// every stump's `feature` indexes [`Cascade::features`].
#[derive(Clone, Debug, PartialEq)]
pub struct Cascade {
    pub base: u32,
    pub features: Vec<HaarFeature>,
    pub stages: Vec<StrongClassifier>,
}

/// Number of times each stage was evaluated.
#[derive(Clone, Debug, Default)]
pub struct EvalCounters {
    pub stage_evals: Vec<u64>,
}

impl EvalCounters {
    fn bump(&mut self, stage: usize) {
        if self.stage_evals.len() <= stage {
            self.stage_evals.resize(stage + 1, 0);
        }
        self.stage_evals[stage] += 1;
    }
}

/// A cascade with its features pre-scaled for one window size.
pub struct ScaledCascade<'a> {
    cascade: &'a Cascade,
    scale: f64,
    side: u32,
    rects: Vec<SubRects>,
}

impl<'a> ScaledCascade<'a> {
    pub fn side(&self) -> u32 {
        self.side
    }

    /// Final-stage margin if the window at `(ox, oy)` passes every stage.
    ///
    /// Stops at the first rejecting stage. The window must lie inside the
    /// image the integrals were built from.
    pub fn evaluate(
        &self,
        wi: &WindowIntegrals,
        ox: u32,
        oy: u32,
        mut counters: Option<&mut EvalCounters>,
    ) -> Option<f64> {
        let norm = WindowNorm::new(wi, ox, oy, self.scale);
        let mut margin = 0.0;
        for (k, stage) in self.cascade.stages.iter().enumerate() {
            if let Some(c) = counters.as_deref_mut() {
                c.bump(k);
            }
            let mut vote = 0.0;
            for r in &stage.rounds {
                let v = eval_scaled(wi, &self.rects[r.stump.feature], ox, oy, norm);
                vote += r.alpha * r.stump.predict(v);
            }
            margin = vote - stage.shift;
            if margin < 0.0 {
                return None;
            }
        }
        Some(margin)
    }
}

impl Cascade {
    pub fn at_scale(&self, scale: f64) -> ScaledCascade<'_> {
        ScaledCascade {
            cascade: self,
            scale,
            side: ((self.base as f64 * scale).round() as u32).max(1),
            rects: self.features.iter().map(|f| f.scaled_sub_rects(scale)).collect(),
        }
    }

    /// Runs the cascade on a single `base` x `base` window image.
    pub fn evaluate_window(&self, window: &GrayImage, counters: Option<&mut EvalCounters>) -> Option<f64> {
        let wi = WindowIntegrals::new(window);
        self.at_scale(1.0).evaluate(&wi, 0, 0, counters)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("CASCADE1\n{}\n", self.base);
        for stage in &self.stages {
            let _ = writeln!(s, "{} {:?}", stage.rounds.len(), stage.shift);
            for r in &stage.rounds {
                let f = self.features[r.stump.feature];
                let _ = writeln!(
                    s,
                    "{:?} {} {} {} {} {} {:?} {}",
                    r.alpha, f.kind, f.x, f.y, f.w, f.h, r.stump.threshold, r.stump.polarity
                );
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Cascade, BoostError> {
        let bad = |line: usize, msg: &str| BoostError::Model(format!("line {}: {msg}", line + 1));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == "CASCADE1" => {}
            _ => return Err(BoostError::Model("missing CASCADE1 header".into())),
        }
        let (ln, base_line) = lines.next().ok_or_else(|| bad(1, "missing base window"))?;
        let base: u32 = base_line.trim().parse().map_err(|_| bad(ln, "bad base window"))?;
        if base != BASE_WINDOW {
            return Err(bad(ln, "only 24 px base windows are supported"));
        }
        let mut features = Vec::new();
        let mut stages = Vec::new();
        while let Some((ln, header)) = lines.next() {
            let mut t = header.split_whitespace();
            let count: usize = t
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(ln, "bad stage round count"))?;
            let shift: f64 = t
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(ln, "bad stage shift"))?;
            let mut rounds = Vec::with_capacity(count);
            for _ in 0..count {
                let (ln, line) = lines.next().ok_or_else(|| bad(ln, "stage ends early"))?;
                let tok: Vec<&str> = line.split_whitespace().collect();
                if tok.len() != 8 {
                    return Err(bad(ln, "round needs 8 fields"));
                }
                let num = |i: usize| tok[i].parse::<u32>().map_err(|_| bad(ln, "bad geometry"));
                let kind: HaarKind = tok[1].parse().map_err(|e: String| bad(ln, &e))?;
                let feature = HaarFeature::new(kind, num(2)?, num(3)?, num(4)?, num(5)?);
                let (uw, uh) = kind.unit();
                let fits = feature.w % uw == 0
                    && feature.h % uh == 0
                    && feature.w > 0
                    && feature.h > 0
                    && feature.x + feature.w <= base
                    && feature.y + feature.h <= base;
                if !fits {
                    return Err(bad(ln, "feature does not fit the base window"));
                }
                let alpha: f64 = tok[0].parse().map_err(|_| bad(ln, "bad alpha"))?;
                let threshold: f64 = tok[6].parse().map_err(|_| bad(ln, "bad threshold"))?;
                let polarity: i8 = match tok[7] {
                    "1" => 1,
                    "-1" => -1,
                    _ => return Err(bad(ln, "polarity must be 1 or -1")),
                };
                features.push(feature);
                rounds.push(BoostRound {
                    stump: WeakStump {
                        feature: features.len() - 1,
                        threshold,
                        polarity,
                    },
                    alpha,
                    epsilon: 1.0 / (1.0 + (2.0 * alpha).exp()),
                });
            }
            if rounds.is_empty() {
                return Err(bad(ln, "stage without rounds"));
            }
            stages.push(StrongClassifier { rounds, shift });
        }
        if stages.is_empty() {
            return Err(BoostError::Model("cascade has no stages".into()));
        }
        Ok(Cascade {
            base,
            features,
            stages,
        })
    }

    pub fn load(path: &Path) -> Result<Cascade, BoostError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BoostError::Io(format!("{}: {e}", path.display())))?;
        Cascade::from_text(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), BoostError> {
        std::fs::write(path, self.to_text())
            .map_err(|e| BoostError::Io(format!("{}: {e}", path.display())))
    }
}

/// Stage targets and the feature pool for [`train_cascade`].
#[derive(Clone, Debug)]
pub struct CascadeParams {
    /// Minimum per-stage detection rate on the training positives.
    pub min_detect: f64,
    /// Maximum per-stage false-positive rate on surviving negatives.
    pub max_false_pos: f64,
    pub max_stages: usize,
    pub max_rounds_per_stage: usize,
    pub step_pos: u32,
    pub step_size: u32,
}

impl Default for CascadeParams {
    fn default() -> Self {
        Self {
            min_detect: 0.995,
            max_false_pos: 0.5,
            max_stages: 10,
            max_rounds_per_stage: 50,
            step_pos: 2,
            step_size: 2,
        }
    }
}

/// Per-stage outcome of cascade training, measured on that stage's training set.
#[derive(Clone, Debug)]
pub struct StageReport {
    pub rounds: usize,
    pub detection_rate: f64,
    pub false_positive_rate: f64,
    pub negatives_in: usize,
}

/// Trains a cascade on 24x24 positive and negative windows.
///
/// Every stage trains on all positives and on the negatives that passed all
/// earlier stages. Rounds are added until, with the shift lowered to keep
/// `min_detect` of positives, at most `max_false_pos` of those negatives pass.
pub fn train_cascade(
    pos: &[GrayImage],
    neg: &[GrayImage],
    params: &CascadeParams,
) -> Result<(Cascade, Vec<StageReport>), BoostError> {
    train_cascade_with(pos, neg, params, None)
}

/// Supplies up to `n` fresh negative windows for the next stage, given the
/// cascade trained so far. Windows the partial cascade rejects are dropped.
pub type NegativeRefill<'a> = &'a mut dyn FnMut(&Cascade, usize) -> Result<Vec<GrayImage>, BoostError>;

/// [`train_cascade`] that tops the surviving negatives back up to the
/// initial pool size after every stage.
pub fn train_cascade_with(
    pos: &[GrayImage],
    neg: &[GrayImage],
    params: &CascadeParams,
    mut refill: Option<NegativeRefill>,
) -> Result<(Cascade, Vec<StageReport>), BoostError> {
    if pos.len() < 20 || neg.len() < 20 {
        return Err(BoostError::InsufficientData {
            positives: pos.len(),
            negatives: neg.len(),
        });
    }
    for w in pos.iter().chain(neg) {
        if w.width() != BASE_WINDOW || w.height() != BASE_WINDOW {
            return Err(BoostError::InvalidArgument(format!(
                "training windows must be {BASE_WINDOW}x{BASE_WINDOW}, got {}x{}",
                w.width(),
                w.height()
            )));
        }
    }
    let pool = enumerate_features(BASE_WINDOW, params.step_pos, params.step_size);
    let pool_rects: Vec<SubRects> = pool.iter().map(HaarFeature::sub_rects).collect();
    let values_of = |img: &GrayImage| -> Vec<f64> {
        let wi = WindowIntegrals::new(img);
        let norm = WindowNorm::new(&wi, 0, 0, 1.0);
        pool_rects.iter().map(|r| eval_scaled(&wi, r, 0, 0, norm)).collect()
    };
    let pos_values: Vec<Vec<f64>> = pos.iter().map(values_of).collect();
    let mut neg_values: Vec<Vec<f64>> = neg.iter().map(values_of).collect();

    let mut stages: Vec<StrongClassifier> = Vec::new();
    let mut reports = Vec::new();
    let mut used: Vec<usize> = Vec::new();

    while stages.len() < params.max_stages && !neg_values.is_empty() {
        let n_pos = pos_values.len();
        let n_neg = neg_values.len();
        let columns = (0..pool.len())
            .map(|f| pos_values.iter().chain(&neg_values).map(|r| r[f]).collect())
            .collect();
        let matrix = FeatureMatrix::from_columns(columns)?;
        let labels: Vec<Label> = std::iter::repeat_n(Label::Positive, n_pos)
            .chain(std::iter::repeat_n(Label::Negative, n_neg))
            .collect();
        let mut booster = AdaBoost::new(&matrix, &labels)?;

        let allowed_misses = ((1.0 - params.min_detect) * n_pos as f64 + 1e-9).floor() as usize;
        let (mut shift, mut fp_rate);
        loop {
            let progressed = booster.step();
            let votes = booster.votes();
            let mut pos_votes = votes[..n_pos].to_vec();
            pos_votes.sort_by(f64::total_cmp);
            shift = pos_votes[allowed_misses.min(n_pos - 1)];
            let passing = votes[n_pos..].iter().filter(|&&v| v >= shift).count();
            fp_rate = passing as f64 / n_neg as f64;
            if !progressed
                || fp_rate <= params.max_false_pos
                || booster.rounds().len() >= params.max_rounds_per_stage
            {
                break;
            }
        }
        let votes = booster.votes();
        let detected = votes[..n_pos].iter().filter(|&&v| v >= shift).count();
        let report = StageReport {
            rounds: booster.rounds().len(),
            detection_rate: detected as f64 / n_pos as f64,
            false_positive_rate: fp_rate,
            negatives_in: n_neg,
        };
        debug!("stage {}: {report:?}", stages.len());

        // Remap pool indices onto the compact feature table.
        let rounds = booster
            .rounds()
            .iter()
            .map(|r| {
                let slot = used.iter().position(|&u| u == r.stump.feature).unwrap_or_else(|| {
                    used.push(r.stump.feature);
                    used.len() - 1
                });
                BoostRound {
                    stump: WeakStump {
                        feature: slot,
                        ..r.stump
                    },
                    ..*r
                }
            })
            .collect();
        let survivors: Vec<Vec<f64>> = neg_values
            .iter()
            .zip(&votes[n_pos..])
            .filter(|(_, &v)| v >= shift)
            .map(|(r, _)| r.clone())
            .collect();
        stages.push(StrongClassifier { rounds, shift });
        reports.push(report);
        neg_values = survivors;
        if let Some(refill) = refill.as_mut() {
            let want = neg.len().saturating_sub(neg_values.len());
            if want > 0 && stages.len() < params.max_stages {
                let partial = Cascade {
                    base: BASE_WINDOW,
                    features: used.iter().map(|&i| pool[i]).collect(),
                    stages: stages.clone(),
                };
                for w in refill(&partial, want)?.iter().take(want) {
                    if w.width() == BASE_WINDOW && w.height() == BASE_WINDOW && partial.evaluate_window(w, None).is_some() {
                        neg_values.push(values_of(w));
                    }
                }
            }
        }
    }

    let cascade = Cascade {
        base: BASE_WINDOW,
        features: used.iter().map(|&i| pool[i]).collect(),
        stages,
    };
    Ok((cascade, reports))
}

/// Sliding-window scan parameters for [`detect_faces`].
#[derive(Clone, Copy, Debug)]
pub struct FaceScan {
    pub scale_factor: f64,
    /// Step between windows at the base scale; grows with the window.
    pub stride: u32,
    pub iou_thresh: f64,
}

impl Default for FaceScan {
    fn default() -> Self {
        Self {
            scale_factor: 1.25,
            stride: 2,
            iou_thresh: 0.45,
        }
    }
}

/// Multi-scale cascade scan followed by non-maximum suppression.
pub fn detect_faces(img: &GrayImage, cascade: &Cascade, scan: &FaceScan) -> Result<Vec<Detection>, BoostError> {
    detect_faces_counted(img, cascade, scan, None)
}

/// [`detect_faces`] that also tallies stage evaluations.
pub fn detect_faces_counted(
    img: &GrayImage,
    cascade: &Cascade,
    scan: &FaceScan,
    mut counters: Option<&mut EvalCounters>,
) -> Result<Vec<Detection>, BoostError> {
    if img.width() < cascade.base || img.height() < cascade.base {
        return Err(BoostError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
        });
    }
    if scan.scale_factor <= 1.0 || scan.stride == 0 {
        return Err(BoostError::InvalidArgument(
            "scale factor must exceed 1 and stride must be positive".into(),
        ));
    }
    let wi = WindowIntegrals::new(img);
    let mut raw = Vec::new();
    let mut scale = 1.0;
    loop {
        let scaled = cascade.at_scale(scale);
        let side = scaled.side();
        if side > img.width() || side > img.height() {
            break;
        }
        let stride = ((scan.stride as f64 * scale).round() as usize).max(1);
        for y in (0..=img.height() - side).step_by(stride) {
            for x in (0..=img.width() - side).step_by(stride) {
                if let Some(m) = scaled.evaluate(&wi, x, y, counters.as_deref_mut()) {
                    raw.push(Detection::new(Rect::new(x, y, side, side), m));
                }
            }
        }
        scale *= scan.scale_factor;
    }
    Ok(nms(&raw, scan.iou_thresh))
}

pub const MINE_IOU: f64 = 0.4;

/// Hard negatives for bootstrapping: windows of `scenes` that `cascade`
/// accepts although they overlap no known face by IoU `MINE_IOU` or more,
/// resized to the base window. At most `limit` windows, spread evenly over
/// all such hits.
pub fn mine_negatives(
    cascade: &Cascade,
    scenes: &[(GrayImage, Vec<Rect>)],
    scan: &FaceScan,
    limit: usize,
) -> Result<Vec<GrayImage>, BoostError> {
    let mut hits = Vec::new();
    for (i, (img, faces)) in scenes.iter().enumerate() {
        if img.width() < cascade.base || img.height() < cascade.base {
            continue;
        }
        let wi = WindowIntegrals::new(img);
        let mut scale = 1.0;
        loop {
            let scaled = cascade.at_scale(scale);
            let side = scaled.side();
            if side > img.width() || side > img.height() {
                break;
            }
            let stride = ((scan.stride as f64 * scale).round() as usize).max(1);
            for y in (0..=img.height() - side).step_by(stride) {
                for x in (0..=img.width() - side).step_by(stride) {
                    let r = Rect::new(x, y, side, side);
                    if faces.iter().all(|f| f.iou(&r) < MINE_IOU) && scaled.evaluate(&wi, x, y, None).is_some() {
                        hits.push((i, r));
                    }
                }
            }
            scale *= scan.scale_factor;
        }
    }
    let take = hits.len().min(limit);
    let mut out = Vec::with_capacity(take);
    for k in 0..take {
        let (i, r) = hits[k * hits.len() / take];
        let crop = scenes[i].0.crop(r).map_err(|e| BoostError::InvalidArgument(e.to_string()))?;
        out.push(resize(&crop, cascade.base, cascade.base));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reject_all() -> Cascade {
        Cascade {
            base: 24,
            features: vec![HaarFeature::new(HaarKind::TwoHorizontal, 0, 0, 24, 24)],
            stages: vec![StrongClassifier {
                rounds: vec![BoostRound {
                    stump: WeakStump {
                        feature: 0,
                        threshold: f64::INFINITY,
                        polarity: 1,
                    },
                    alpha: 1.0,
                    epsilon: 0.1,
                }],
                shift: 0.5,
            }],
        }
    }

    #[test]
    fn always_reject_finds_nothing() {
        let img = GrayImage::filled(64, 48, 90);
        assert!(detect_faces(&img, &reject_all(), &FaceScan::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn too_small_image() {
        let img = GrayImage::filled(23, 23, 0);
        assert!(matches!(
            detect_faces(&img, &reject_all(), &FaceScan::default()),
            Err(BoostError::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn empty_negatives_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pos: Vec<GrayImage> = (0..25).map(|_| synth::face_window(&mut rng, synth::Gender::Male)).collect();
        assert!(matches!(
            train_cascade(&pos, &[], &CascadeParams::default()),
            Err(BoostError::InsufficientData { negatives: 0, .. })
        ));
    }

    #[test]
    fn separable_windows_need_one_stage() {
        // Bright-left vs bright-right halves: one two-rect feature separates them.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pos: Vec<GrayImage> = (0..30)
            .map(|_| synth::noisy(&GrayImage::from_fn(24, 24, |x, _| if x < 12 { 200 } else { 40 }), &mut rng, 8.0))
            .collect();
        let neg: Vec<GrayImage> = (0..30)
            .map(|_| synth::noisy(&GrayImage::from_fn(24, 24, |x, _| if x < 12 { 40 } else { 200 }), &mut rng, 8.0))
            .collect();
        let params = CascadeParams {
            step_pos: 4,
            step_size: 4,
            ..CascadeParams::default()
        };
        let (cascade, reports) = train_cascade(&pos, &neg, &params).unwrap();
        assert_eq!(cascade.stages.len(), 1);
        assert_eq!(reports[0].detection_rate, 1.0);
        assert_eq!(reports[0].false_positive_rate, 0.0);
        assert!(pos.iter().all(|w| cascade.evaluate_window(w, None).is_some()));
        assert!(neg.iter().all(|w| cascade.evaluate_window(w, None).is_none()));
    }

    #[test]
    fn rejected_windows_skip_later_stages() {
        // Three one-stump stages on the same left/right edge feature with
        // rising thresholds, so windows drop out at different depths.
        let edge = HaarFeature::new(HaarKind::TwoHorizontal, 0, 0, 24, 24);
        let stage = |threshold: f64| StrongClassifier {
            rounds: vec![BoostRound {
                stump: WeakStump {
                    feature: 0,
                    threshold,
                    polarity: 1,
                },
                alpha: 1.0,
                epsilon: 0.25,
            }],
            shift: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let neg: Vec<GrayImage> = (0..200)
            .map(|_| {
                let l = rng.gen_range(90..130u32);
                let r = rng.gen_range(90..130u32);
                GrayImage::from_fn(24, 24, |x, _| {
                    let base = if x < 12 { l } else { r };
                    (base + rng.gen_range(0..60)) as u8
                })
            })
            .collect();
        let mut values: Vec<f64> = neg
            .iter()
            .map(|w| crate::boostcascade::features::eval_feature(&WindowIntegrals::new(w), &edge, (0, 0), 1.0).unwrap())
            .collect();
        values.sort_by(f64::total_cmp);
        let q = |f: f64| values[(f * values.len() as f64) as usize];
        let cascade = Cascade {
            base: 24,
            features: vec![edge],
            stages: vec![stage(q(0.25)), stage(q(0.5)), stage(q(0.75))],
        };
        let mut counters = EvalCounters::default();
        let mut rejected_at = vec![0u64; cascade.stages.len() + 1];
        for w in &neg {
            let mut local = EvalCounters::default();
            let passed = cascade.evaluate_window(w, Some(&mut local)).is_some();
            let depth = local.stage_evals.len();
            assert!(local.stage_evals.iter().all(|&c| c == 1));
            if !passed {
                rejected_at[depth - 1] += 1;
            }
            cascade.evaluate_window(w, Some(&mut counters));
        }
        assert!(rejected_at[..3].iter().all(|&n| n > 0), "{rejected_at:?}");
        // Stage k+1 sees exactly the windows stage k let through.
        for k in 1..counters.stage_evals.len() {
            assert_eq!(
                counters.stage_evals[k],
                counters.stage_evals[k - 1] - rejected_at[k - 1]
            );
        }
    }

    #[test]
    fn refill_tops_up_negatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (pos, neg) = synth::face_training_set(&mut rng, 40, 60);
        let params = CascadeParams {
            step_pos: 6,
            step_size: 6,
            max_stages: 3,
            ..CascadeParams::default()
        };
        let mut calls = 0;
        let mut refill = |partial: &Cascade, n: usize| {
            calls += 1;
            assert!(!partial.stages.is_empty());
            // Offer faces, which every stage keeps, plus wrong-size junk.
            let mut out: Vec<GrayImage> = (0..n).map(|i| pos[i % pos.len()].clone()).collect();
            out.insert(0, GrayImage::filled(10, 10, 0));
            Ok(out)
        };
        let (cascade, reports) = train_cascade_with(&pos, &neg, &params, Some(&mut refill)).unwrap();
        assert_eq!(cascade.stages.len(), 3);
        assert!(calls >= 1);
        // Later stages never see fewer negatives than the first minus the junk slot.
        assert!(reports[1..].iter().all(|r| r.negatives_in >= neg.len() - 1), "{reports:?}");
    }

    #[test]
    fn model_text_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (pos, neg) = synth::face_training_set(&mut rng, 30, 60);
        let params = CascadeParams {
            step_pos: 6,
            step_size: 4,
            max_stages: 3,
            ..CascadeParams::default()
        };
        let (cascade, _) = train_cascade(&pos, &neg, &params).unwrap();
        let text = cascade.to_text();
        assert!(text.starts_with("CASCADE1\n24\n"));
        let back = Cascade::from_text(&text).unwrap();
        assert_eq!(back.stages.len(), cascade.stages.len());
        for w in pos.iter().chain(&neg) {
            assert_eq!(back.evaluate_window(w, None), cascade.evaluate_window(w, None));
        }
        assert!(Cascade::from_text("CASCADE2\n24\n").is_err());
        assert!(Cascade::from_text("CASCADE1\n24\n1 0.0\n1.0 two_h 0 0 25 2 0.0 1\n").is_err());
    }
}
