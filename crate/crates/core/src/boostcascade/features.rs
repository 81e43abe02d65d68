//! Haar-like rectangle features over a 24x24 reference window.

use std::fmt;
use std::str::FromStr;

use crate::imgcore::{GrayImage, ImageError, IntegralImage, Rect};

/// Side of the reference window features are defined in.
pub const BASE_WINDOW: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HaarKind {
    /// Left half white, right half black.
    TwoHorizontal,
    /// Top half white, bottom half black.
    TwoVertical,
    /// White, black, white from left to right.
    ThreeHorizontal,
    /// White, black, white from top to bottom.
    ThreeVertical,
    /// Checkerboard with white top-left and bottom-right quadrants.
    Four,
}

impl HaarKind {
    pub const ALL: [HaarKind; 5] = [
        HaarKind::TwoHorizontal,
        HaarKind::TwoVertical,
        HaarKind::ThreeHorizontal,
        HaarKind::ThreeVertical,
        HaarKind::Four,
    ];

    /// Smallest (w, h) of this kind; sizes are multiples of it.
    pub fn unit(self) -> (u32, u32) {
        match self {
            HaarKind::TwoHorizontal => (2, 1),
            HaarKind::TwoVertical => (1, 2),
            HaarKind::ThreeHorizontal => (3, 1),
            HaarKind::ThreeVertical => (1, 3),
            HaarKind::Four => (2, 2),
        }
    }

    fn token(self) -> &'static str {
        match self {
            HaarKind::TwoHorizontal => "two_h",
            HaarKind::TwoVertical => "two_v",
            HaarKind::ThreeHorizontal => "three_h",
            HaarKind::ThreeVertical => "three_v",
            HaarKind::Four => "four",
        }
    }
}

impl fmt::Display for HaarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for HaarKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HaarKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| format!("unknown feature kind {s:?}"))
    }
}

/// One feature: a kind and its bounding rect inside the reference window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HaarFeature {
    pub kind: HaarKind,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

/// Up to four signed sub-rectangles.
#[derive(Clone, Copy, Debug)]
pub struct SubRects {
    items: [(Rect, f64); 4],
    len: usize,
}

impl SubRects {
    fn new() -> Self {
        Self {
            items: [(Rect::new(0, 0, 0, 0), 0.0); 4],
            len: 0,
        }
    }

    fn push(&mut self, r: Rect, sign: f64) {
        self.items[self.len] = (r, sign);
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Rect, f64)> {
        self.items[..self.len].iter()
    }
}

impl HaarFeature {
    pub fn new(kind: HaarKind, x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { kind, x, y, w, h }
    }

    /// Tiles of the bounding rect, `+1` for white and `-1` for black.
    pub fn sub_rects(&self) -> SubRects {
        let Self { x, y, w, h, .. } = *self;
        let mut s = SubRects::new();
        match self.kind {
            HaarKind::TwoHorizontal => {
                let hw = w / 2;
                s.push(Rect::new(x, y, hw, h), 1.0);
                s.push(Rect::new(x + hw, y, hw, h), -1.0);
            }
            HaarKind::TwoVertical => {
                let hh = h / 2;
                s.push(Rect::new(x, y, w, hh), 1.0);
                s.push(Rect::new(x, y + hh, w, hh), -1.0);
            }
            HaarKind::ThreeHorizontal => {
                let tw = w / 3;
                s.push(Rect::new(x, y, tw, h), 1.0);
                s.push(Rect::new(x + tw, y, tw, h), -1.0);
                s.push(Rect::new(x + 2 * tw, y, tw, h), 1.0);
            }
            HaarKind::ThreeVertical => {
                let th = h / 3;
                s.push(Rect::new(x, y, w, th), 1.0);
                s.push(Rect::new(x, y + th, w, th), -1.0);
                s.push(Rect::new(x, y + 2 * th, w, th), 1.0);
            }
            HaarKind::Four => {
                let (hw, hh) = (w / 2, h / 2);
                s.push(Rect::new(x, y, hw, hh), 1.0);
                s.push(Rect::new(x + hw, y, hw, hh), -1.0);
                s.push(Rect::new(x, y + hh, hw, hh), -1.0);
                s.push(Rect::new(x + hw, y + hh, hw, hh), 1.0);
            }
        }
        s
    }

    /// Sub-rects scaled by `scale` (rounded to the nearest pixel, at least
    /// 1 px), relative to the window origin.
    pub fn scaled_sub_rects(&self, scale: f64) -> SubRects {
        if scale == 1.0 {
            return self.sub_rects();
        }
        let mut out = SubRects::new();
        let r = |v: u32| (v as f64 * scale).round() as u32;
        for &(rect, sign) in self.sub_rects().iter() {
            out.push(
                Rect::new(r(rect.x), r(rect.y), r(rect.w).max(1), r(rect.h).max(1)),
                sign,
            );
        }
        out
    }
}

/// All features of the given kinds that fit in a `base` x `base` window.
///
/// Ordered kind-major, then by y, x, h, w. Positions advance by `step_pos` and
/// sizes by `step_size` multiples of the kind's unit.
pub fn enumerate_kinds(
    kinds: &[HaarKind],
    base: u32,
    step_pos: u32,
    step_size: u32,
) -> Vec<HaarFeature> {
    assert!(step_pos >= 1 && step_size >= 1, "steps must be >= 1");
    let mut out = Vec::new();
    for &kind in kinds {
        let (uw, uh) = kind.unit();
        let widths: Vec<u32> = (uw..=base).step_by((uw * step_size) as usize).collect();
        let heights: Vec<u32> = (uh..=base).step_by((uh * step_size) as usize).collect();
        for y in (0..base).step_by(step_pos as usize) {
            for x in (0..base).step_by(step_pos as usize) {
                for &h in &heights {
                    if y + h > base {
                        break;
                    }
                    for &w in &widths {
                        if x + w > base {
                            break;
                        }
                        out.push(HaarFeature::new(kind, x, y, w, h));
                    }
                }
            }
        }
    }
    out
}

/// All five kinds; see [`enumerate_kinds`].
pub fn enumerate_features(base: u32, step_pos: u32, step_size: u32) -> Vec<HaarFeature> {
    enumerate_kinds(&HaarKind::ALL, base, step_pos, step_size)
}

/// Plain and squared summed-area tables of one image.
#[derive(Clone, Debug)]
pub struct WindowIntegrals {
    pub sum: IntegralImage,
    pub sq: IntegralImage,
}

impl WindowIntegrals {
    pub fn new(img: &GrayImage) -> Self {
        Self {
            sum: IntegralImage::new(img),
            sq: IntegralImage::squared(img),
        }
    }

    pub fn width(&self) -> u32 {
        self.sum.width()
    }

    pub fn height(&self) -> u32 {
        self.sum.height()
    }

    /// Mean and standard deviation (clamped below at 1.0) over `win`.
    pub fn window_stats(&self, win: Rect) -> (f64, f64) {
        let n = win.area() as f64;
        let s = self.sum.rect_sum_unchecked(win) as f64;
        let sq = self.sq.rect_sum_unchecked(win) as f64;
        let mean = s / n;
        let var = (sq / n - mean * mean).max(0.0);
        (mean, var.sqrt().max(1.0))
    }
}

/// Lighting normalization for one detection window.
#[derive(Clone, Copy, Debug)]
pub struct WindowNorm {
    pub mean: f64,
    /// `1 / (std · scale²)`.
    pub inv: f64,
}

impl WindowNorm {
    pub fn new(wi: &WindowIntegrals, ox: u32, oy: u32, scale: f64) -> Self {
        let side = ((BASE_WINDOW as f64 * scale).round() as u32).max(1);
        let (mean, std) = wi.window_stats(Rect::new(ox, oy, side, side));
        Self {
            mean,
            inv: 1.0 / (std * scale * scale),
        }
    }
}

/// Feature response for pre-scaled sub-rects at window origin `(ox, oy)`.
///
/// Each sub-rect contributes its sum minus `mean · area`, so a flat window
/// scores zero for every kind. The total is divided by the window's std and
/// by `scale²` so thresholds learned at 24x24 carry over to larger windows.
#[inline]
pub fn eval_scaled(wi: &WindowIntegrals, rects: &SubRects, ox: u32, oy: u32, norm: WindowNorm) -> f64 {
    let mut acc = 0.0;
    for &(r, sign) in rects.iter() {
        let abs = Rect::new(ox + r.x, oy + r.y, r.w, r.h);
        let s = wi.sum.rect_sum_unchecked(abs) as f64;
        acc += sign * (s - norm.mean * abs.area() as f64);
    }
    acc * norm.inv
}

/// Evaluates `f` on the `24·scale` window whose top-left corner is `origin`.
pub fn eval_feature(
    wi: &WindowIntegrals,
    f: &HaarFeature,
    origin: (u32, u32),
    scale: f64,
) -> Result<f64, ImageError> {
    let (ox, oy) = origin;
    let side = ((BASE_WINDOW as f64 * scale).round() as u32).max(1);
    let window = Rect::new(ox, oy, side, side);
    let rects = f.scaled_sub_rects(scale);
    for &(r, _) in rects.iter() {
        let abs = Rect::new(ox + r.x, oy + r.y, r.w, r.h);
        if !abs.fits_in(wi.width(), wi.height()) {
            return Err(ImageError::RectOutOfBounds {
                rect: abs,
                width: wi.width(),
                height: wi.height(),
            });
        }
    }
    if !window.fits_in(wi.width(), wi.height()) {
        return Err(ImageError::RectOutOfBounds {
            rect: window,
            width: wi.width(),
            height: wi.height(),
        });
    }
    Ok(eval_scaled(wi, &rects, ox, oy, WindowNorm::new(wi, ox, oy, scale)))
}
