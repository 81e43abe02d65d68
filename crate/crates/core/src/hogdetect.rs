//! HOG person descriptor with per-cell normalization, a Pegasos-trained
//! linear SVM, and multi-scale sliding-window detection.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use crate::detection::{nms, Detection};
use crate::imgcore::{resize, GrayImage, Rect};
use crate::Label;

pub const WINDOW_W: u32 = 64;
pub const WINDOW_H: u32 = 128;
pub const CELL: u32 = 8;
pub const CELLS_X: usize = (WINDOW_W / CELL) as usize;
pub const CELLS_Y: usize = (WINDOW_H / CELL) as usize;
pub const BINS: usize = 9;
pub const DESCRIPTOR_LEN: usize = CELLS_X * CELLS_Y * BINS;
const BIN_WIDTH: f64 = 180.0 / BINS as f64;
const NORM_EPS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum HogError {
    #[error("image {width}x{height} is too small")]
    ImageTooSmall { width: u32, height: u32 },
    #[error("window must be 64x128, got {width}x{height}")]
    BadWindowSize { width: u32, height: u32 },
    #[error("degenerate training input: {0}")]
    DegenerateInput(String),
    #[error("svm model: {0}")]
    Model(String),
    #[error("svm model io: {0}")]
    Io(String),
}

pub type Result<T, E = HogError> = std::result::Result<T, E>;

/// Per-pixel gradient magnitude and unsigned orientation in degrees.
#[derive(Clone, Debug)]
pub struct GradientField {
    pub width: u32,
    pub height: u32,
    pub magnitude: Vec<f64>,
    pub orientation: Vec<f64>,
}

impl GradientField {
    fn index(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn magnitude_at(&self, x: u32, y: u32) -> f64 {
        self.magnitude[self.index(x, y)]
    }

    pub fn orientation_at(&self, x: u32, y: u32) -> f64 {
        self.orientation[self.index(x, y)]
    }

    /// A field from explicit values, mostly for tests.
    pub fn from_parts(width: u32, height: u32, magnitude: Vec<f64>, orientation: Vec<f64>) -> Self {
        assert_eq!(magnitude.len(), (width * height) as usize);
        assert_eq!(orientation.len(), magnitude.len());
        Self {
            width,
            height,
            magnitude,
            orientation,
        }
    }
}

/// Folds `atan2(dy, dx)` into `[0, 180)`.
pub fn unsigned_orientation(dx: f64, dy: f64) -> f64 {
    if dx == 0.0 && dy == 0.0 {
        return 0.0;
    }
    let mut deg = dy.atan2(dx).to_degrees();
    if deg < 0.0 {
        deg += 180.0;
    }
    if deg >= 180.0 {
        deg -= 180.0;
    }
    deg
}

/// Central differences with replicated borders.
pub fn gradients(img: &GrayImage) -> Result<GradientField> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(HogError::ImageTooSmall { width: w, height: h });
    }
    let luma = img.luma();
    let px = |x: u32, y: u32| luma[(y * w + x) as usize] as f64;
    let n = (w * h) as usize;
    let mut magnitude = Vec::with_capacity(n);
    let mut orientation = Vec::with_capacity(n);
    for y in 0..h {
        let (up, down) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (left, right) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let dx = px(right, y) - px(left, y);
            let dy = px(x, down) - px(x, up);
            magnitude.push((dx * dx + dy * dy).sqrt());
            orientation.push(unsigned_orientation(dx, dy));
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        magnitude,
        orientation,
    })
}

/// Splits a vote of `mag` at `deg` between the two nearest bin centers.
#[inline]
fn vote(hist: &mut [f64; BINS], deg: f64, mag: f64) {
    // Bin b is centered at (b + 0.5) * 20 degrees.
    let pos = deg / BIN_WIDTH - 0.5;
    let lo = pos.floor();
    let frac = pos - lo;
    let lo = (lo as i64).rem_euclid(BINS as i64) as usize;
    let hi = (lo + 1) % BINS;
    hist[lo] += mag * (1.0 - frac);
    hist[hi] += mag * frac;
}

/// 8x16 grid of 9-bin histograms, cells in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct CellHistogramGrid {
    pub cells: Vec<[f64; BINS]>,
}

impl CellHistogramGrid {
    pub fn cell(&self, cx: usize, cy: usize) -> &[f64; BINS] {
        &self.cells[cy * CELLS_X + cx]
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().flatten().sum()
    }
}

/// Histograms of every full 8x8 cell of `field` whose top-left is at
/// `(ox + 8i, oy + 8j)`. Returns the grid width, height and cells.
fn dense_cells(field: &GradientField, ox: u32, oy: u32) -> (usize, usize, Vec<[f64; BINS]>) {
    let nx = ((field.width - ox) / CELL) as usize;
    let ny = ((field.height - oy) / CELL) as usize;
    let mut cells = vec![[0.0; BINS]; nx * ny];
    for cy in 0..ny {
        for cx in 0..nx {
            let hist = &mut cells[cy * nx + cx];
            let (x0, y0) = (ox + cx as u32 * CELL, oy + cy as u32 * CELL);
            for y in y0..y0 + CELL {
                let row = (y * field.width) as usize;
                for x in x0..x0 + CELL {
                    let i = row + x as usize;
                    let m = field.magnitude[i];
                    if m > 0.0 {
                        vote(hist, field.orientation[i], m);
                    }
                }
            }
        }
    }
    (nx, ny, cells)
}

pub fn cell_histograms(field: &GradientField) -> Result<CellHistogramGrid> {
    if field.width != WINDOW_W || field.height != WINDOW_H {
        return Err(HogError::BadWindowSize {
            width: field.width,
            height: field.height,
        });
    }
    let (_, _, cells) = dense_cells(field, 0, 0);
    Ok(CellHistogramGrid { cells })
}

fn normalize_cell(h: &mut [f64; BINS]) {
    let sq: f64 = h.iter().map(|v| v * v).sum();
    if sq == 0.0 {
        return;
    }
    let inv = 1.0 / (sq + NORM_EPS * NORM_EPS).sqrt();
    h.iter_mut().for_each(|v| *v *= inv);
}

/// `h / sqrt(|h|² + ε²)` for every cell.
pub fn normalize_cells(mut grid: CellHistogramGrid) -> CellHistogramGrid {
    grid.cells.iter_mut().for_each(normalize_cell);
    grid
}

/// 1152-float window descriptor, cell-major and bin-minor.
#[derive(Clone, Debug, PartialEq)]
pub struct HogDescriptor(pub Vec<f64>);

impl HogDescriptor {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn descriptor(img: &GrayImage) -> Result<HogDescriptor> {
    if img.width() != WINDOW_W || img.height() != WINDOW_H {
        return Err(HogError::BadWindowSize {
            width: img.width(),
            height: img.height(),
        });
    }
    let grid = normalize_cells(cell_histograms(&gradients(img)?)?);
    Ok(HogDescriptor(grid.cells.into_iter().flatten().collect()))
}

/// Linear SVM over HOG descriptors.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 100,
            seed: 0,
        }
    }
}

impl LinearSvm {
    pub fn score(&self, x: &[f64]) -> f64 {
        crate::numeric::dot(&self.weights, x) + self.bias
    }

    pub fn classify(&self, x: &[f64]) -> Label {
        Label::from_margin(self.score(x))
    }

    /// `λ/2 |w|² + mean hinge loss` over a data set.
    pub fn objective(&self, xs: &[Vec<f64>], ys: &[Label]) -> f64 {
        let reg = 0.5 * self.lambda * crate::numeric::dot(&self.weights, &self.weights);
        let hinge: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (1.0 - y.sign() * self.score(x)).max(0.0))
            .sum();
        reg + hinge / xs.len() as f64
    }

    /// `SVM1` text model: lambda, bias, then the weights.
    pub fn to_text(&self) -> String {
        let mut s = format!("SVM1\n{:?}\n{:?}\n", self.lambda, self.bias);
        let w: Vec<String> = self.weights.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(s, "{}", w.join(" "));
        s
    }

    pub fn from_text(text: &str) -> Result<LinearSvm> {
        let bad = |m: &str| HogError::Model(m.to_string());
        let mut tokens = text.split_whitespace();
        if tokens.next() != Some("SVM1") {
            return Err(bad("missing SVM1 header"));
        }
        let mut next = |what: &str| -> Result<f64> {
            tokens
                .next()
                .ok_or_else(|| bad(&format!("missing {what}")))?
                .parse::<f64>()
                .map_err(|_| bad(&format!("bad {what}")))
        };
        let lambda = next("lambda")?;
        let bias = next("bias")?;
        let weights: Vec<f64> = (0..DESCRIPTOR_LEN).map(|_| next("weight")).collect::<Result<_>>()?;
        if tokens.next().is_some() {
            return Err(bad("trailing data after weights"));
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(bad("non-finite parameters"));
        }
        Ok(LinearSvm { weights, bias, lambda })
    }

    pub fn load(path: &Path) -> Result<LinearSvm> {
        let text = std::fs::read_to_string(path).map_err(|e| HogError::Io(format!("{}: {e}", path.display())))?;
        LinearSvm::from_text(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| HogError::Io(format!("{}: {e}", path.display())))
    }
}

/// Pegasos stochastic subgradient descent with an unregularized bias.
///
/// The weights take steps of `1/(λt)`. The bias has no strong convexity to
/// cancel such steps, so it takes `1/t` instead; with `1/(λt)` the first
/// update alone moves it by `1/λ`. Each epoch visits the samples in a fresh seeded shuffle; the returned
/// model is the mean of the iterates over the last epoch.
pub fn svm_train(xs: &[Vec<f64>], ys: &[Label], params: SvmParams) -> Result<LinearSvm> {
    if xs.len() != ys.len() {
        return Err(HogError::DegenerateInput(format!(
            "{} samples but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    if !ys.contains(&Label::Positive) || !ys.contains(&Label::Negative) {
        return Err(HogError::DegenerateInput("both labels must be present".into()));
    }
    let dim = xs[0].len();
    if xs.iter().any(|x| x.len() != dim) {
        return Err(HogError::DegenerateInput("descriptor lengths differ".into()));
    }
    if !(params.lambda > 0.0) || params.epochs == 0 {
        return Err(HogError::DegenerateInput("lambda must be positive and epochs nonzero".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let lambda = params.lambda;
    // w is kept as scale * v so the shrink step is O(1).
    let mut v = vec![0.0; dim];
    let mut scale = 1.0;
    let mut bias = 0.0;
    let mut avg_w = vec![0.0; dim];
    let mut avg_b = 0.0;
    let mut t = 0usize;
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let last = epoch + 1 == params.epochs;
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let y = ys[i].sign();
            let margin = y * (scale * crate::numeric::dot(&v, &xs[i]) + bias);
            let shrink = 1.0 - eta * lambda;
            if shrink == 0.0 {
                // First step: w becomes zero exactly.
                v.iter_mut().for_each(|a| *a = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let k = eta * y / scale;
                v.iter_mut().zip(&xs[i]).for_each(|(a, x)| *a += k * x);
                bias += y / t as f64;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|a| *a *= scale);
                scale = 1.0;
            }
            if last {
                avg_w.iter_mut().zip(&v).for_each(|(a, b)| *a += scale * b);
                avg_b += bias;
            }
        }
    }
    let n = xs.len() as f64;
    avg_w.iter_mut().for_each(|a| *a /= n);
    Ok(LinearSvm {
        weights: avg_w,
        bias: avg_b / n,
        lambda,
    })
}

/// Descriptors for a labeled window set, positives first.
pub fn training_descriptors(pos: &[GrayImage], neg: &[GrayImage]) -> Result<(Vec<Vec<f64>>, Vec<Label>)> {
    let mut xs = Vec::with_capacity(pos.len() + neg.len());
    let mut ys = Vec::with_capacity(xs.capacity());
    for (set, label) in [(pos, Label::Positive), (neg, Label::Negative)] {
        for img in set {
            xs.push(descriptor(img)?.0);
            ys.push(label);
        }
    }
    Ok((xs, ys))
}

#[derive(Clone, Copy, Debug)]
pub struct DetectParams {
    pub scale_step: f64,
    pub stride: u32,
    pub min_score: f64,
    pub iou_thresh: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            scale_step: 1.2,
            stride: 8,
            min_score: 0.0,
            iou_thresh: 0.45,
        }
    }
}

/// Scores every window of one pyramid level.
///
/// Gradients come from the whole level, and cells are shared between
/// windows that sit on the same 8-pixel phase.
fn scan_level(level: &GrayImage, svm: &LinearSvm, stride: u32, min_score: f64, scale: f64, out: &mut Vec<Detection>, frame: (u32, u32)) -> Result<()> {
    let field = gradients(level)?;
    let (lw, lh) = (level.width(), level.height());
    let mut phases: Vec<(u32, u32)> = Vec::new();
    let mut y = 0;
    while y + WINDOW_H <= lh {
        let mut x = 0;
        while x + WINDOW_W <= lw {
            let phase = (x % CELL, y % CELL);
            if !phases.contains(&phase) {
                phases.push(phase);
            }
            x += stride;
        }
        y += stride;
    }
    for (px, py) in phases {
        let (nx, _, mut cells) = dense_cells(&field, px, py);
        cells.iter_mut().for_each(normalize_cell);
        let mut y = py;
        while y + WINDOW_H <= lh {
            let mut x = px;
            while x + WINDOW_W <= lw {
                let (cx0, cy0) = (((x - px) / CELL) as usize, ((y - py) / CELL) as usize);
                let mut score = svm.bias;
                for cy in 0..CELLS_Y {
                    for cx in 0..CELLS_X {
                        let cell = &cells[(cy0 + cy) * nx + cx0 + cx];
                        let w = &svm.weights[(cy * CELLS_X + cx) * BINS..][..BINS];
                        score += cell.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
                if score > min_score {
                    out.push(Detection {
                        rect: map_back(x, y, scale, frame),
                        score,
                    });
                }
                x += stride;
            }
            y += stride;
        }
    }
    Ok(())
}

fn map_back(x: u32, y: u32, scale: f64, (fw, fh): (u32, u32)) -> Rect {
    let rx = ((x as f64 * scale).round() as u32).min(fw.saturating_sub(1));
    let ry = ((y as f64 * scale).round() as u32).min(fh.saturating_sub(1));
    let rw = ((WINDOW_W as f64 * scale).round() as u32).clamp(1, fw - rx);
    let rh = ((WINDOW_H as f64 * scale).round() as u32).clamp(1, fh - ry);
    Rect::new(rx, ry, rw, rh)
}

/// Multi-scale sliding-window person detection followed by NMS.
///
/// Level `k` is the frame resized by `scale_step^-k`; it stops once the level
/// no longer holds a full 64x128 window. Output is sorted by descending score.
pub fn detect(img: &GrayImage, svm: &LinearSvm, params: &DetectParams) -> Result<Vec<Detection>> {
    let (fw, fh) = (img.width(), img.height());
    if fw < WINDOW_W || fh < WINDOW_H {
        return Err(HogError::ImageTooSmall { width: fw, height: fh });
    }
    if svm.weights.len() != DESCRIPTOR_LEN {
        return Err(HogError::Model(format!("expected {DESCRIPTOR_LEN} weights, got {}", svm.weights.len())));
    }
    let stride = params.stride.max(1);
    let step = if params.scale_step > 1.0 { params.scale_step } else { f64::INFINITY };
    let mut raw = Vec::new();
    let mut k = 0i32;
    loop {
        let scale = step.powi(k);
        let (lw, lh) = if k == 0 {
            (fw, fh)
        } else {
            ((fw as f64 / scale).round() as u32, (fh as f64 / scale).round() as u32)
        };
        if lw < WINDOW_W || lh < WINDOW_H {
            break;
        }
        let level = if k == 0 { img.clone() } else { resize(img, lw, lh) };
        let sx = fw as f64 / lw as f64;
        scan_level(&level, svm, stride, params.min_score, sx, &mut raw, (fw, fh))?;
        k += 1;
    }
    Ok(nms(&raw, params.iou_thresh))
}
