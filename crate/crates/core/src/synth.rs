//! Deterministic synthetic imagery for demos, tests and fixtures.
//!
//! None of this is meant to look like real people. The generators produce
//! controlled patterns with known ground truth: a schematic face (two eyes and
//! a mouth on a bright oval, with gender-specific hair and jaw shading), a
//! "bar figure" standing in for a pedestrian, and scenes of walkers crossing
//! a frame.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::imgcore::{resize, GrayImage, Rect};

/// Side of generated face crops fed to the gender classifier.
pub const FACE_CROP: u32 = 32;
/// Person detection window.
pub const PERSON_W: u32 = 64;
pub const PERSON_H: u32 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn name(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Adds zero-mean Gaussian noise of the given standard deviation.
pub fn noisy(img: &GrayImage, rng: &mut impl Rng, sigma: f64) -> GrayImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        clamp_u8(img.get(x, y) as f64 + n.sample(rng))
    })
}

/// Flat background at `level` with Gaussian noise.
pub fn noise_image(w: u32, h: u32, level: f64, sigma: f64, rng: &mut impl Rng) -> GrayImage {
    let n = Normal::new(level, sigma.max(1e-9)).expect("finite sigma");
    GrayImage::from_fn(w, h, |_, _| clamp_u8(n.sample(rng)))
}

/// Appearance knobs for [`render_face`].
#[derive(Clone, Copy, Debug)]
pub struct FaceStyle {
    pub gender: Gender,
    pub skin: f64,
    pub background: f64,
    pub dx: f64,
    pub dy: f64,
}

impl FaceStyle {
    pub fn plain(gender: Gender) -> Self {
        Self {
            gender,
            skin: 190.0,
            background: 70.0,
            dx: 0.0,
            dy: 0.0,
        }
    }

    pub fn random(rng: &mut impl Rng, gender: Gender) -> Self {
        Self {
            gender,
            skin: rng.gen_range(165.0..215.0),
            background: rng.gen_range(40.0..100.0),
            dx: rng.gen_range(-0.03..0.03),
            dy: rng.gen_range(-0.03..0.03),
        }
    }
}

/// Draws a schematic face filling a `side` x `side` square.
///
/// Geometry is in unit coordinates so the same face renders at any size.
/// Males get short dark hair and a shaded jaw; females get long hair framing
/// the face and a lighter chin.
pub fn render_face(side: u32, style: &FaceStyle) -> GrayImage {
    let s = side as f64;
    GrayImage::from_fn(side, side, |px, py| {
        let u = (px as f64 + 0.5) / s - style.dx;
        let v = (py as f64 + 0.5) / s - style.dy;
        let face = ((u - 0.5) / 0.36).powi(2) + ((v - 0.53) / 0.44).powi(2) <= 1.0;
        let mut val = if face { style.skin } else { style.background };
        let eye = |cx: f64| ((u - cx) / 0.085).powi(2) + ((v - 0.40) / 0.05).powi(2) <= 1.0;
        match style.gender {
            Gender::Male => {
                if v < 0.2 && (u - 0.5).abs() < 0.36 {
                    val = 35.0;
                }
                if face && v > 0.68 {
                    val = style.skin * 0.55;
                }
            }
            Gender::Female => {
                let side_hair = (u < 0.17 || u > 0.83) && v < 0.9;
                if v < 0.16 || side_hair {
                    val = 30.0;
                }
                if face && v > 0.68 {
                    val = (style.skin * 1.08).min(250.0);
                }
            }
        }
        if face && (eye(0.35) || eye(0.65)) {
            val = 25.0;
        }
        if face && (u - 0.5).abs() < 0.14 && (v - 0.78).abs() < 0.03 {
            val = 45.0;
        }
        clamp_u8(val)
    })
}

/// A noisy 24x24 face window for cascade training.
pub fn face_window(rng: &mut impl Rng, gender: Gender) -> GrayImage {
    let style = FaceStyle::random(rng, gender);
    noisy(&render_face(24, &style), rng, 6.0)
}

/// A noisy face crop of [`FACE_CROP`] pixels for gender training.
pub fn face_crop(rng: &mut impl Rng, gender: Gender) -> GrayImage {
    let style = FaceStyle::random(rng, gender);
    noisy(&render_face(FACE_CROP, &style), rng, 8.0)
}

/// A 24x24 window that is not a centered face.
pub fn non_face_window(rng: &mut impl Rng) -> GrayImage {
    match rng.gen_range(0..6) {
        0 => noise_image(24, 24, rng.gen_range(30.0..220.0), rng.gen_range(2.0..30.0), rng),
        1 => {
            // Linear ramp in a random direction.
            let (a, b) = (rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
            let base = rng.gen_range(60.0..190.0);
            let img = GrayImage::from_fn(24, 24, |x, y| {
                clamp_u8(base + a * (x as f64 - 12.0) + b * (y as f64 - 12.0))
            });
            noisy(&img, rng, 5.0)
        }
        2 => {
            // Random bright and dark blocks.
            let mut img = noise_image(24, 24, rng.gen_range(50.0..200.0), 6.0, rng);
            for _ in 0..rng.gen_range(1..4) {
                let w = rng.gen_range(3..14);
                let h = rng.gen_range(3..14);
                let block = noise_image(w, h, rng.gen_range(0.0..255.0), 4.0, rng);
                img.paste(&block, rng.gen_range(0..24 - w as i64), rng.gen_range(0..24 - h as i64));
            }
            img
        }
        3 | 4 => {
            // A face shifted well off-center, cut by the window edge.
            let gender = if rng.gen() { Gender::Male } else { Gender::Female };
            let face = face_window(rng, gender);
            let mut img = noise_image(24, 24, rng.gen_range(40.0..100.0), 6.0, rng);
            let (dx, dy) = loop {
                let dx = rng.gen_range(-16i64..=16);
                let dy = rng.gen_range(-16i64..=16);
                if dx.abs().max(dy.abs()) >= 8 {
                    break (dx, dy);
                }
            };
            img.paste(&face, dx, dy);
            img
        }
        _ => {
            // A face-sized crop of a much larger or much smaller face.
            let gender = if rng.gen() { Gender::Male } else { Gender::Female };
            let style = FaceStyle::random(rng, gender);
            if rng.gen() {
                let side = rng.gen_range(32..64);
                let big = render_face(side, &style);
                let x = rng.gen_range(0..=side - 24);
                let y = rng.gen_range(0..=side - 24);
                noisy(&big.crop(Rect::new(x, y, 24, 24)).expect("in bounds"), rng, 6.0)
            } else {
                let side = rng.gen_range(10..19);
                let small = render_face(side, &style);
                let mut img = noise_image(24, 24, style.background, 6.0, rng);
                img.paste(&small, rng.gen_range(0..=(24 - side) as i64), rng.gen_range(0..=(24 - side) as i64));
                img
            }
        }
    }
}

/// Positive face windows (both genders) and negatives for cascade training.
pub fn face_training_set(
    rng: &mut impl Rng,
    n_pos: usize,
    n_neg: usize,
) -> (Vec<GrayImage>, Vec<GrayImage>) {
    let pos = (0..n_pos)
        .map(|i| {
            let g = if i % 2 == 0 { Gender::Male } else { Gender::Female };
            face_window(rng, g)
        })
        .collect();
    let neg = (0..n_neg).map(|_| non_face_window(rng)).collect();
    (pos, neg)
}

/// Paints a standing bar figure (head, torso, legs) into `img` with its
/// bounding 64x128 window at `(x, y)`.
fn draw_figure(img: &mut GrayImage, x: i64, y: i64, level: f64, rng: &mut impl Rng) {
    let cx = 32.0 + rng.gen_range(-1.5..1.5);
    let torso_w = rng.gen_range(8.0..11.0);
    let head_r = rng.gen_range(7.0..9.0);
    let top = rng.gen_range(10.0..16.0);
    let bottom = rng.gen_range(114.0..122.0);
    for wy in 0..PERSON_H as i64 {
        for wx in 0..PERSON_W as i64 {
            let (fx, fy) = (wx as f64 + 0.5, wy as f64 + 0.5);
            let head_cy = top + head_r;
            let head = (fx - cx).powi(2) + (fy - head_cy).powi(2) <= head_r * head_r;
            let neck = top + 2.0 * head_r;
            let hip = neck + (bottom - neck) * 0.45;
            let torso = fy >= neck && fy < hip && (fx - cx).abs() <= torso_w;
            let legs = fy >= hip && fy < bottom && {
                let d = (fx - cx).abs();
                d >= 1.5 && d <= torso_w
            };
            if head || torso || legs {
                let (tx, ty) = (x + wx, y + wy);
                if tx >= 0 && ty >= 0 && tx < img.width() as i64 && ty < img.height() as i64 {
                    img.set(tx as u32, ty as u32, clamp_u8(level));
                }
            }
        }
    }
}

/// Figure luma contrasting with `background`.
fn figure_level(rng: &mut impl Rng, background: f64) -> f64 {
    if background < 128.0 {
        (background + rng.gen_range(70.0..120.0)).min(245.0)
    } else {
        (background - rng.gen_range(70.0..120.0)).max(10.0)
    }
}

/// A 64x128 positive window: a bar figure on a noisy background.
pub fn bar_figure(rng: &mut impl Rng) -> GrayImage {
    let bg = rng.gen_range(50.0..200.0);
    let mut img = noise_image(PERSON_W, PERSON_H, bg, 10.0, rng);
    let level = figure_level(rng, bg);
    draw_figure(&mut img, rng.gen_range(-2..=2), rng.gen_range(-3..=3), level, rng);
    noisy(&img, rng, 4.0)
}

/// A 64x128 negative window: clutter, or a figure too far off-center.
pub fn person_negative(rng: &mut impl Rng) -> GrayImage {
    let bg = rng.gen_range(50.0..200.0);
    let mut img = noise_image(PERSON_W, PERSON_H, bg, 10.0, rng);
    match rng.gen_range(0..6) {
        0 => {}
        5 => {
            // A shrunken figure anywhere in the window, possibly cut off:
            // what a coarser pyramid level sees around a true match.
            let mut fig = noise_image(PERSON_W, PERSON_H, bg, 10.0, rng);
            let level = figure_level(rng, bg);
            draw_figure(&mut fig, 0, 0, level, rng);
            let s = rng.gen_range(0.45..0.8);
            let (w, h) = ((PERSON_W as f64 * s) as u32, (PERSON_H as f64 * s) as u32);
            let small = resize(&fig, w, h);
            let (w, h) = (w as i64, h as i64);
            let x = rng.gen_range(-w / 4..=PERSON_W as i64 - 3 * w / 4);
            let y = rng.gen_range(-h / 4..=PERSON_H as i64 - 3 * h / 4);
            img.paste(&small, x, y);
        }
        1 => {
            // Horizontal bars.
            for _ in 0..rng.gen_range(1..4) {
                let h = rng.gen_range(6..20);
                let bar = noise_image(PERSON_W, h, figure_level(rng, bg), 4.0, rng);
                img.paste(&bar, 0, rng.gen_range(0..(PERSON_H - h) as i64));
            }
        }
        2 => {
            // Blobs and boxes.
            for _ in 0..rng.gen_range(1..5) {
                let w = rng.gen_range(6..40);
                let h = rng.gen_range(6..40);
                let b = noise_image(w, h, rng.gen_range(0.0..255.0), 4.0, rng);
                img.paste(&b, rng.gen_range(0..(PERSON_W - w) as i64), rng.gen_range(0..(PERSON_H - h) as i64));
            }
        }
        _ => {
            // A figure shifted by half a window or more, horizontally or vertically.
            let level = figure_level(rng, bg);
            let (dx, dy) = if rng.gen() {
                let d = rng.gen_range(24..48);
                (if rng.gen() { d } else { -d }, rng.gen_range(-4..=4))
            } else {
                let d = rng.gen_range(40..80);
                (rng.gen_range(-4..=4), if rng.gen() { d } else { -d })
            };
            draw_figure(&mut img, dx, dy, level, rng);
        }
    }
    noisy(&img, rng, 4.0)
}

/// Positive and negative person windows.
pub fn person_training_set(
    rng: &mut impl Rng,
    n_pos: usize,
    n_neg: usize,
) -> (Vec<GrayImage>, Vec<GrayImage>) {
    let pos = (0..n_pos).map(|_| bar_figure(rng)).collect();
    let neg = (0..n_neg).map(|_| person_negative(rng)).collect();
    (pos, neg)
}

/// A figure moving in a straight line, one position per frame.
#[derive(Clone, Copy, Debug)]
pub struct Walker {
    /// Top-left of the 64x128 window at frame 0.
    pub start: (f64, f64),
    /// Pixels per frame.
    pub velocity: (f64, f64),
    /// First frame the walker is visible in.
    pub enters: usize,
    /// Frame after the last visible one.
    pub leaves: usize,
}

impl Walker {
    pub fn window_at(&self, frame: usize) -> Option<(i64, i64)> {
        if frame < self.enters || frame >= self.leaves {
            return None;
        }
        let t = frame as f64;
        Some((
            (self.start.0 + self.velocity.0 * t).round() as i64,
            (self.start.1 + self.velocity.1 * t).round() as i64,
        ))
    }

    /// Window center at `frame`.
    pub fn center_at(&self, frame: usize) -> Option<(f64, f64)> {
        self.window_at(frame).map(|(x, y)| {
            (
                x as f64 + PERSON_W as f64 / 2.0,
                y as f64 + PERSON_H as f64 / 2.0,
            )
        })
    }
}

/// Renders frame `index` of a walker scene.
///
/// The background is a fixed noisy plate per `seed`; every frame gets fresh
/// sensor noise derived from `seed` and `index`.
pub fn walker_frame(width: u32, height: u32, walkers: &[Walker], index: usize, seed: u64) -> GrayImage {
    use rand::SeedableRng;
    let mut plate_rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut frame = noise_image(width, height, 90.0, 6.0, &mut plate_rng);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index as u64 + 1)));
    for (k, w) in walkers.iter().enumerate() {
        if let Some((x, y)) = w.window_at(index) {
            let mut figure_rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 + k as u64));
            draw_figure(&mut frame, x, y, 200.0, &mut figure_rng);
        }
    }
    noisy(&frame, &mut rng, 3.0)
}

/// A frame with faces of known gender pasted at known squares.
pub fn face_scene(
    width: u32,
    height: u32,
    faces: &[(Rect, Gender)],
    rng: &mut impl Rng,
) -> GrayImage {
    let mut frame = noise_image(width, height, 110.0, 6.0, rng);
    for &(r, g) in faces {
        let mut style = FaceStyle::random(rng, g);
        style.dx = 0.0;
        style.dy = 0.0;
        let face = render_face(r.w, &style);
        frame.paste(&face, r.x as i64, r.y as i64);
    }
    noisy(&frame, rng, 3.0)
}

/// Two-class Gaussian images: per-pixel means differ by `offset_sigmas · σ`
/// along a fixed random ±1 pattern, with i.i.d. pixel noise of std `sigma`.
pub struct GaussianClasses {
    pub side: u32,
    pub sigma: f64,
    mean_a: Vec<f64>,
    mean_b: Vec<f64>,
}

impl GaussianClasses {
    pub fn new(rng: &mut impl Rng, side: u32, sigma: f64, offset_sigmas: f64) -> Self {
        let d = (side * side) as usize;
        let mean_a: Vec<f64> = (0..d).map(|_| rng.gen_range(80.0..170.0)).collect();
        let mean_b = mean_a
            .iter()
            .map(|&m| {
                let dir = if rng.gen() { 1.0 } else { -1.0 };
                m + dir * offset_sigmas * sigma
            })
            .collect();
        Self {
            side,
            sigma,
            mean_a,
            mean_b,
        }
    }

    /// One sample of class 0 or class 1.
    pub fn sample(&self, rng: &mut impl Rng, class: usize) -> GrayImage {
        let mean = if class == 0 { &self.mean_a } else { &self.mean_b };
        let n = Normal::new(0.0, self.sigma).expect("finite sigma");
        let mut i = 0;
        GrayImage::from_fn(self.side, self.side, |_, _| {
            let v = mean[i] + n.sample(rng);
            i += 1;
            clamp_u8(v)
        })
    }
}

/// Resizes a detected face region to the classifier's crop size.
pub fn normalize_face(img: &GrayImage, r: Rect) -> GrayImage {
    let crop = img.crop(r).expect("face rect inside frame");
    resize(&crop, FACE_CROP, FACE_CROP)
}

/// Scene of the committed footfall fixture: 30 frames of 320x240, two
/// walkers crossing the vertical line x = 160 from left to right, one
/// after the other.
pub mod fixture {
    use super::Walker;

    pub const WIDTH: u32 = 320;
    pub const HEIGHT: u32 = 240;
    pub const FRAMES: usize = 30;
    pub const SCENE_SEED: u64 = 2024;
    pub const TRAIN_SEED: u64 = 11;
    /// 2024-03-05 14:00:00 UTC.
    pub const START_TS: i64 = 1_709_647_200_000;
    pub const LINE: &str = "LINE door 160 0 160 240";

    pub fn walkers() -> [Walker; 2] {
        [
            Walker {
                start: (0.0, 40.0),
                velocity: (16.0, 0.0),
                enters: 0,
                leaves: 15,
            },
            Walker {
                start: (-240.0, 72.0),
                velocity: (16.0, 0.0),
                enters: 15,
                leaves: FRAMES,
            },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_deterministic() {
        let a = bar_figure(&mut ChaCha8Rng::seed_from_u64(4));
        let b = bar_figure(&mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
        let walkers = [Walker {
            start: (0.0, 50.0),
            velocity: (8.0, 0.0),
            enters: 0,
            leaves: 10,
        }];
        assert_eq!(
            walker_frame(160, 200, &walkers, 3, 9),
            walker_frame(160, 200, &walkers, 3, 9)
        );
    }

    #[test]
    fn face_genders_differ() {
        let m = render_face(32, &FaceStyle::plain(Gender::Male));
        let f = render_face(32, &FaceStyle::plain(Gender::Female));
        assert_ne!(m, f);
        assert_eq!((m.width(), m.height()), (32, 32));
    }

    #[test]
    fn walker_visibility() {
        let w = Walker {
            start: (10.0, 20.0),
            velocity: (2.0, -1.0),
            enters: 2,
            leaves: 5,
        };
        assert_eq!(w.window_at(1), None);
        assert_eq!(w.window_at(2), Some((14, 18)));
        assert_eq!(w.center_at(4), Some((18.0 + 32.0, 16.0 + 64.0)));
        assert_eq!(w.window_at(5), None);
    }
}
