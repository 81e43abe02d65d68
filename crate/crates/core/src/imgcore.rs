//! Pixel buffers, binary PNM decoding, luma conversion, bilinear resizing and
//! summed-area tables.
//!
//! Everything downstream (the Haar cascade, HOG, Fisher projections) works on
//! [`GrayImage`]. Frames enter the crate as [`PixelBuffer`]s, usually decoded
//! from P5/P6 files or received over the raw TCP frame protocol.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("unsupported PNM magic {0:?}, only binary P5 and P6 are read")]
    UnsupportedMagic(String),
    #[error("PNM maxval must be 255, found {0}")]
    MaxvalNot255(u32),
    #[error("PNM body truncated: expected {expected} bytes, found {found}")]
    TruncatedBody { expected: usize, found: usize },
    #[error("malformed PNM header: {0}")]
    MalformedHeader(&'static str),
    #[error("channel count must be 1 or 3, got {0}")]
    BadChannelCount(u8),
    #[error("buffer of {len} bytes does not match {width}x{height}x{channels}")]
    BadBufferLength {
        width: u32,
        height: u32,
        channels: u8,
        len: usize,
    },
    #[error("image dimensions must be at least 1x1")]
    EmptyImage,
    #[error("rect {rect} is outside a {width}x{height} image or has zero extent")]
    RectOutOfBounds { rect: Rect, width: u32, height: u32 },
}

pub type Result<T, E = ImageError> = std::result::Result<T, E>;

/// Interleaved 8-bit samples, one or three channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelBuffer {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl PixelBuffer {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage);
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::BadChannelCount(channels));
        }
        if data.len() != width as usize * height as usize * channels as usize {
            return Err(ImageError::BadBufferLength {
                width,
                height,
                channels,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }
}

impl From<GrayImage> for PixelBuffer {
    fn from(img: GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            channels: 1,
            data: img.luma,
        }
    }
}

/// Row-major 8-bit luma.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    luma: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, luma: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage);
        }
        if luma.len() != width as usize * height as usize {
            return Err(ImageError::BadBufferLength {
                width,
                height,
                channels: 1,
                len: luma.len(),
            });
        }
        Ok(Self {
            width,
            height,
            luma,
        })
    }

    /// Image filled with one value.
    ///
    /// # Panics
    ///
    /// Panics on a zero dimension.
    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        Self {
            width,
            height,
            luma: vec![value; width as usize * height as usize],
        }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        let mut luma = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                luma.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            luma,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn luma(&self) -> &[u8] {
        &self.luma
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.luma[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        let w = self.width as usize;
        self.luma[y as usize * w + x as usize] = v;
    }

    /// Copies out the sub-image covered by `r`.
    pub fn crop(&self, r: Rect) -> Result<GrayImage> {
        if !r.fits_in(self.width, self.height) {
            return Err(ImageError::RectOutOfBounds {
                rect: r,
                width: self.width,
                height: self.height,
            });
        }
        Ok(GrayImage::from_fn(r.w, r.h, |x, y| self.get(r.x + x, r.y + y)))
    }

    /// Writes `src` with its top-left corner at (`x`, `y`), clipping at the edges.
    pub fn paste(&mut self, src: &GrayImage, x: i64, y: i64) {
        for sy in 0..src.height {
            let ty = y + sy as i64;
            if ty < 0 || ty >= self.height as i64 {
                continue;
            }
            for sx in 0..src.width {
                let tx = x + sx as i64;
                if tx < 0 || tx >= self.width as i64 {
                    continue;
                }
                self.set(tx as u32, ty as u32, src.get(sx, sy));
            }
        }
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> u64 {
        self.x as u64 + self.w as u64
    }

    pub fn bottom(&self) -> u64 {
        self.y as u64 + self.h as u64
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    /// Non-empty and entirely inside a `width` x `height` image.
    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.w >= 1 && self.h >= 1 && self.right() <= width as u64 && self.bottom() <= height as u64
    }

    /// Intersection over union; 0 when either rect is empty.
    pub fn iou(&self, other: &Rect) -> f64 {
        let ix0 = self.x.max(other.x) as u64;
        let iy0 = self.y.max(other.y) as u64;
        let ix1 = self.right().min(other.right());
        let iy1 = self.bottom().min(other.bottom());
        if ix1 <= ix0 || iy1 <= iy0 {
            return 0.0;
        }
        let inter = (ix1 - ix0) * (iy1 - iy0);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}x{})", self.x, self.y, self.w, self.h)
    }
}

/// Summed-area table with a zero first row and column.
///
/// Entry `(x, y)` holds the sum of all samples in `[0, x) x [0, y)`.
#[derive(Clone, Debug)]
pub struct IntegralImage {
    width: u32,
    height: u32,
    table: Vec<u64>,
}

impl IntegralImage {
    pub fn new(img: &GrayImage) -> Self {
        Self::with_map(img, |v| v as u64)
    }

    /// Table over squared luma, used for window variance.
    pub fn squared(img: &GrayImage) -> Self {
        Self::with_map(img, |v| (v as u64) * (v as u64))
    }

    fn with_map(img: &GrayImage, map: impl Fn(u8) -> u64) -> Self {
        let w = img.width as usize;
        let h = img.height as usize;
        let stride = w + 1;
        let mut table = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row_sum = 0u64;
            let src = &img.luma[y * w..(y + 1) * w];
            for x in 0..w {
                row_sum += map(src[x]);
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row_sum;
            }
        }
        Self {
            width: img.width,
            height: img.height,
            table,
        }
    }

    /// Width of the source image (the table is one wider).
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Table entry at `(x, y)` with `x <= width`, `y <= height`.
    #[inline]
    pub fn at(&self, x: u32, y: u32) -> u64 {
        self.table[y as usize * (self.width as usize + 1) + x as usize]
    }

    pub fn rect_sum(&self, r: Rect) -> Result<u64> {
        if !r.fits_in(self.width, self.height) {
            return Err(ImageError::RectOutOfBounds {
                rect: r,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.rect_sum_unchecked(r))
    }

    /// Same as [`rect_sum`](Self::rect_sum) for callers that already bounds-checked.
    #[inline]
    pub fn rect_sum_unchecked(&self, r: Rect) -> u64 {
        let (x0, y0, x1, y1) = (r.x, r.y, r.x + r.w, r.y + r.h);
        // Adding before subtracting keeps the unsigned arithmetic from wrapping.
        (self.at(x1, y1) + self.at(x0, y0)) - (self.at(x0, y1) + self.at(x1, y0))
    }
}

/// Convenience wrapper over [`IntegralImage::new`].
pub fn integral(img: &GrayImage) -> IntegralImage {
    IntegralImage::new(img)
}

/// BT.601 luma; single-channel buffers are copied through.
pub fn to_gray(buf: &PixelBuffer) -> Result<GrayImage> {
    let luma = match buf.channels {
        1 => buf.data.clone(),
        3 => buf
            .data
            .chunks_exact(3)
            .map(|p| {
                let y = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
                y.round().clamp(0.0, 255.0) as u8
            })
            .collect(),
        c => return Err(ImageError::BadChannelCount(c)),
    };
    GrayImage::new(buf.width, buf.height, luma)
}

/// Bilinear resize with center-aligned sampling.
///
/// # Panics
///
/// Panics if either target dimension is zero.
pub fn resize(img: &GrayImage, new_w: u32, new_h: u32) -> GrayImage {
    assert!(new_w >= 1 && new_h >= 1, "resize target must be at least 1x1");
    if new_w == img.width && new_h == img.height {
        return img.clone();
    }
    let xs = axis_taps(img.width, new_w);
    let ys = axis_taps(img.height, new_h);
    let sw = img.width as usize;
    let mut luma = Vec::with_capacity(new_w as usize * new_h as usize);
    for &(y0, y1, fy) in &ys {
        let r0 = &img.luma[y0 * sw..(y0 + 1) * sw];
        let r1 = &img.luma[y1 * sw..(y1 + 1) * sw];
        for &(x0, x1, fx) in &xs {
            let top = r0[x0] as f64 * (1.0 - fx) + r0[x1] as f64 * fx;
            let bot = r1[x0] as f64 * (1.0 - fx) + r1[x1] as f64 * fx;
            let v = top * (1.0 - fy) + bot * fy;
            luma.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage {
        width: new_w,
        height: new_h,
        luma,
    }
}

/// Per-output-coordinate source taps `(lo, hi, frac)` for one axis.
fn axis_taps(src: u32, dst: u32) -> Vec<(usize, usize, f64)> {
    let max = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * src as f64 / dst as f64 - 0.5).clamp(0.0, max);
            let lo = s.floor();
            let hi = (lo + 1.0).min(max);
            (lo as usize, hi as usize, s - lo)
        })
        .collect()
}

/// Decodes binary P5 (gray) or P6 (RGB) data with maxval 255.
pub fn decode_pnm(bytes: &[u8]) -> Result<PixelBuffer> {
    if bytes.len() < 2 {
        return Err(ImageError::MalformedHeader("missing magic"));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1u8,
        b"P6" => 3u8,
        other => {
            return Err(ImageError::UnsupportedMagic(
                String::from_utf8_lossy(other).into_owned(),
            ))
        }
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        *field = header_number(bytes, &mut pos)?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(ImageError::MaxvalNot255(maxval));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(ImageError::MalformedHeader("no whitespace before raster")),
    }
    let expected = width as usize * height as usize * channels as usize;
    let body = &bytes[pos..];
    if body.len() < expected {
        return Err(ImageError::TruncatedBody {
            expected,
            found: body.len(),
        });
    }
    PixelBuffer::new(width, height, channels, body[..expected].to_vec())
}

fn header_number(bytes: &[u8], pos: &mut usize) -> Result<u32> {
    loop {
        match bytes.get(*pos) {
            None => return Err(ImageError::MalformedHeader("header ends early")),
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(ImageError::MalformedHeader("expected a decimal number"));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or(ImageError::MalformedHeader("number out of range"))
}

/// Writes a P5 or P6 file with a normalized `"Pn\n<w> <h>\n255\n"` header.
pub fn encode_pnm(buf: &PixelBuffer) -> Vec<u8> {
    let magic = if buf.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", buf.width, buf.height).into_bytes();
    out.extend_from_slice(&buf.data);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_sum(img: &GrayImage, r: Rect) -> u64 {
        let mut s = 0;
        for y in r.y..r.y + r.h {
            for x in r.x..r.x + r.w {
                s += img.get(x, y) as u64;
            }
        }
        s
    }

    #[test]
    fn decode_single_gray_pixel() {
        let buf = decode_pnm(b"P5 1 1 255\n\x7f").unwrap();
        assert_eq!((buf.width(), buf.height(), buf.channels()), (1, 1, 1));
        assert_eq!(buf.data(), &[127]);
    }

    #[test]
    fn decode_rgb_with_comments() {
        let mut bytes = b"P6\n# made by hand\n2 1\n# max\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 0, 255, 0]);
        let buf = decode_pnm(&bytes).unwrap();
        assert_eq!((buf.width(), buf.height(), buf.channels()), (2, 1, 3));
        assert_eq!(buf.data(), &[255, 0, 0, 0, 255, 0]);
    }

    #[test]
    fn decode_errors() {
        assert!(matches!(
            decode_pnm(b"P4 1 1\n\x00"),
            Err(ImageError::UnsupportedMagic(m)) if m == "P4"
        ));
        assert_eq!(
            decode_pnm(b"P5 1 1 65535\n\x00\x00"),
            Err(ImageError::MaxvalNot255(65535))
        );
        assert_eq!(
            decode_pnm(b"P5 2 2 255\n\x00"),
            Err(ImageError::TruncatedBody {
                expected: 4,
                found: 1
            })
        );
    }

    #[test]
    fn encode_roundtrip_normalizes_header() {
        let mut bytes = b"P5  2\t1 255\n".to_vec();
        bytes.extend_from_slice(&[9, 200]);
        let buf = decode_pnm(&bytes).unwrap();
        let out = encode_pnm(&buf);
        assert_eq!(&out[..11], b"P5\n2 1\n255\n");
        assert_eq!(decode_pnm(&out).unwrap(), buf);
    }

    #[test]
    fn gray_conversion() {
        let px = |r, g, b| {
            let buf = PixelBuffer::new(1, 1, 3, vec![r, g, b]).unwrap();
            to_gray(&buf).unwrap().get(0, 0)
        };
        assert_eq!(px(0, 0, 0), 0);
        assert_eq!(px(255, 255, 255), 255);
        assert_eq!(px(255, 0, 0), 76);
        let gray = PixelBuffer::new(2, 1, 1, vec![3, 250]).unwrap();
        assert_eq!(to_gray(&gray).unwrap().luma(), &[3, 250]);
    }

    #[test]
    fn bad_channel_count_is_rejected() {
        assert_eq!(
            PixelBuffer::new(1, 1, 2, vec![0, 0]),
            Err(ImageError::BadChannelCount(2))
        );
    }

    #[test]
    fn integral_small_cases() {
        let one = GrayImage::new(1, 1, vec![42]).unwrap();
        assert_eq!(integral(&one).at(1, 1), 42);
        let ones = GrayImage::filled(4, 4, 1);
        let ii = integral(&ones);
        assert_eq!(ii.at(4, 4), 16);
        assert_eq!(ii.rect_sum(Rect::new(0, 0, 4, 4)).unwrap(), 16);
        assert!(matches!(
            ii.rect_sum(Rect::new(0, 0, 0, 2)),
            Err(ImageError::RectOutOfBounds { .. })
        ));
        assert!(ii.rect_sum(Rect::new(3, 3, 2, 1)).is_err());
    }

    #[test]
    fn integral_matches_prefix_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = GrayImage::from_fn(16, 16, |_, _| rng.gen());
        let ii = integral(&img);
        for y in 0..=16 {
            for x in 0..=16 {
                let mut s = 0u64;
                for yy in 0..y {
                    for xx in 0..x {
                        s += img.get(xx, yy) as u64;
                    }
                }
                assert_eq!(ii.at(x, y), s, "entry ({x},{y})");
            }
        }
    }

    #[test]
    fn rect_sum_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = GrayImage::from_fn(37, 23, |_, _| rng.gen());
        let ii = integral(&img);
        for _ in 0..1000 {
            let w = rng.gen_range(1..=37);
            let h = rng.gen_range(1..=23);
            let r = Rect::new(rng.gen_range(0..=37 - w), rng.gen_range(0..=23 - h), w, h);
            assert_eq!(ii.rect_sum(r).unwrap(), brute_sum(&img, r));
        }
    }

    #[test]
    fn resize_identity_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = GrayImage::from_fn(9, 5, |_, _| rng.gen());
        assert_eq!(resize(&img, 9, 5), img);
        let flat = GrayImage::filled(2, 2, 100);
        for (w, h) in [(1, 1), (3, 7), (17, 4)] {
            assert!(resize(&flat, w, h).luma().iter().all(|&v| v == 100));
        }
    }

    #[test]
    fn resize_bilinear_center() {
        // Column of two pixels stretched to three: the middle sample lands at
        // source coordinate 0.5, halfway between 0 and 255.
        let img = GrayImage::new(1, 2, vec![0, 255]).unwrap();
        let out = resize(&img, 1, 3);
        assert_eq!(out.get(0, 0), 0);
        assert!((out.get(0, 1) as f64 - 127.5).abs() <= 1.0);
        assert_eq!(out.get(0, 2), 255);
    }

    #[test]
    fn iou_basics() {
        let a = Rect::new(0, 0, 10, 10);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&Rect::new(10, 0, 10, 10)), 0.0);
        assert!((a.iou(&Rect::new(5, 0, 10, 10)) - 50.0 / 150.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        fn image() -> impl Strategy<Value = GrayImage> {
            (1u32..24, 1u32..24).prop_flat_map(|(w, h)| {
                proptest::collection::vec(any::<u8>(), (w * h) as usize)
                    .prop_map(move |v| GrayImage::new(w, h, v).unwrap())
            })
        }

        proptest! {
            #[test]
            fn integral_is_monotone(img in image()) {
                let ii = integral(&img);
                for y in 0..=img.height() {
                    for x in 0..=img.width() {
                        if x > 0 { prop_assert!(ii.at(x, y) >= ii.at(x - 1, y)); }
                        if y > 0 { prop_assert!(ii.at(x, y) >= ii.at(x, y - 1)); }
                    }
                }
            }

            #[test]
            fn gray_is_fixed_point(img in image()) {
                let buf = PixelBuffer::from(img.clone());
                prop_assert_eq!(to_gray(&buf).unwrap(), img);
            }

            #[test]
            fn pnm_roundtrip(w in 1u32..8, h in 1u32..8, rgb in any::<bool>(), seed in any::<u64>()) {
                let c = if rgb { 3 } else { 1 };
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let data: Vec<u8> = (0..w * h * c as u32).map(|_| rng.gen()).collect();
                let buf = PixelBuffer::new(w, h, c, data).unwrap();
                let bytes = encode_pnm(&buf);
                prop_assert_eq!(encode_pnm(&decode_pnm(&bytes).unwrap()), bytes);
            }
        }
    }
}
