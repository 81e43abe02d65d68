//! Fisherfaces: PCA down to `N - c` dimensions, then Fisher's linear
//! discriminant, with nearest-centroid prediction in the projected space.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::imgcore::GrayImage;
use crate::numeric::{gen_eig, gram_pca, Mat, NumericError};

#[derive(Debug, Error, PartialEq)]
pub enum FisherError {
    #[error("image dimensions differ: expected {expected:?}, got {got:?}")]
    DimMismatch { expected: (u32, u32), got: (u32, u32) },
    #[error("need at least 2 classes with 2 samples each: {0}")]
    TooFewSamples(String),
    #[error("top generalized eigenvalue {0:e} shows no class separation")]
    NoDiscrimination(f64),
    #[error("requested {k} discriminants, at most {max} available")]
    TooManyDiscriminants { k: usize, max: usize },
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("fisher model: {0}")]
    Model(String),
    #[error("fisher model io: {0}")]
    Io(String),
}

pub type Result<T, E = FisherError> = std::result::Result<T, E>;

/// Training images as columns of a `d x N` matrix.
#[derive(Clone, Debug)]
pub struct ImageColumnMatrix {
    pub x: Mat,
    pub image_w: u32,
    pub image_h: u32,
}

/// Per-column class ids `0..c` and their display names.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassVector {
    pub labels: Vec<usize>,
    pub names: Vec<String>,
}

impl ClassVector {
    pub fn num_classes(&self) -> usize {
        self.names.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// PCA-projected, mean-centered samples (`(N - c) x N`).
#[derive(Clone, Debug)]
pub struct Projection {
    pub p: Mat,
}

#[derive(Clone, Debug)]
pub struct ScatterPair {
    pub s_b: Mat,
    pub s_w: Mat,
}

/// Flattens images into columns and maps label names to class ids in order
/// of first appearance.
pub fn build_matrix<S: AsRef<str>>(
    images: &[GrayImage],
    labels: &[S],
) -> Result<(ImageColumnMatrix, ClassVector)> {
    if images.len() != labels.len() {
        return Err(FisherError::TooFewSamples(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let first = images
        .first()
        .ok_or_else(|| FisherError::TooFewSamples("no images".into()))?;
    let (w, h) = (first.width(), first.height());
    for img in images {
        if (img.width(), img.height()) != (w, h) {
            return Err(FisherError::DimMismatch {
                expected: (w, h),
                got: (img.width(), img.height()),
            });
        }
    }
    let mut names: Vec<String> = Vec::new();
    let ids: Vec<usize> = labels
        .iter()
        .map(|l| {
            let l = l.as_ref();
            names.iter().position(|n| n == l).unwrap_or_else(|| {
                names.push(l.to_string());
                names.len() - 1
            })
        })
        .collect();
    let cv = ClassVector { labels: ids, names };
    if cv.num_classes() < 2 {
        return Err(FisherError::TooFewSamples("only one class".into()));
    }
    if let Some((c, &n)) = cv.counts().iter().enumerate().find(|(_, &n)| n < 2) {
        return Err(FisherError::TooFewSamples(format!(
            "class {:?} has {n} sample(s)",
            cv.names[c]
        )));
    }
    let d = (w * h) as usize;
    let n = images.len();
    let mut x = Mat::zeros(d, n);
    for (j, img) in images.iter().enumerate() {
        for (i, &v) in img.luma().iter().enumerate() {
            x[(i, j)] = v as f64;
        }
    }
    Ok((
        ImageColumnMatrix {
            x,
            image_w: w,
            image_h: h,
        },
        cv,
    ))
}

fn column_mean(x: &Mat) -> Vec<f64> {
    let n = x.cols() as f64;
    (0..x.rows()).map(|i| x.row(i).iter().sum::<f64>() / n).collect()
}

fn centered(x: &Mat, mean: &[f64]) -> Mat {
    let mut c = x.clone();
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            c[(i, j)] -= mean[i];
        }
    }
    c
}

/// Projects the samples onto the top `N - c` principal directions.
///
/// Returns the `d x (N - c)` basis, the pixel mean and the projection.
pub fn pca_step(xc: &ImageColumnMatrix, num_classes: usize) -> Result<(Mat, Vec<f64>, Projection)> {
    let n = xc.x.cols();
    if n <= num_classes {
        return Err(FisherError::TooFewSamples(format!(
            "{n} samples leave no room for {num_classes} classes"
        )));
    }
    let mean = column_mean(&xc.x);
    let data = centered(&xc.x, &mean);
    let basis = gram_pca(&data, n - num_classes)?;
    let p = basis.t_matmul(&data);
    Ok((basis, mean, Projection { p }))
}

fn class_means(p: &Mat, cv: &ClassVector) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = p.rows();
    let counts = cv.counts();
    let mut means = vec![vec![0.0; k]; cv.num_classes()];
    let mut total = vec![0.0; k];
    for (j, &c) in cv.labels.iter().enumerate() {
        for i in 0..k {
            means[c][i] += p[(i, j)];
            total[i] += p[(i, j)];
        }
    }
    for (m, &n) in means.iter_mut().zip(&counts) {
        if n > 0 {
            m.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    total.iter_mut().for_each(|v| *v /= p.cols() as f64);
    (total, means)
}

fn add_outer(s: &mut Mat, v: &[f64], weight: f64) {
    for i in 0..v.len() {
        for j in 0..v.len() {
            s[(i, j)] += weight * v[i] * v[j];
        }
    }
}

/// `Σ_i N_i (m_i - m)(m_i - m)ᵀ`.
pub fn scatter_between(proj: &Projection, cv: &ClassVector) -> Mat {
    let k = proj.p.rows();
    let (m, means) = class_means(&proj.p, cv);
    let mut s = Mat::zeros(k, k);
    for (mi, &ni) in means.iter().zip(&cv.counts()) {
        let d: Vec<f64> = mi.iter().zip(&m).map(|(a, b)| a - b).collect();
        add_outer(&mut s, &d, ni as f64);
    }
    s
}

/// `Σ_i Σ_{x ∈ X_i} (x - m_i)(x - m_i)ᵀ`.
pub fn scatter_within(proj: &Projection, cv: &ClassVector) -> Mat {
    let k = proj.p.rows();
    let (_, means) = class_means(&proj.p, cv);
    let mut s = Mat::zeros(k, k);
    for (j, &c) in cv.labels.iter().enumerate() {
        let d: Vec<f64> = (0..k).map(|i| proj.p[(i, j)] - means[c][i]).collect();
        add_outer(&mut s, &d, 1.0);
    }
    s
}

/// Top-`k` generalized eigenvectors of `(S_b, S_w)` as unit columns, and
/// their eigenvalues.
pub fn lda_step(sp: &ScatterPair, k: usize, num_classes: usize) -> Result<(Mat, Vec<f64>)> {
    let max = num_classes.saturating_sub(1);
    if k > max {
        return Err(FisherError::TooManyDiscriminants { k, max });
    }
    let eig = gen_eig(&sp.s_b, &sp.s_w)?;
    let dim = sp.s_b.rows();
    let mut w = Mat::zeros(dim, k);
    for c in 0..k {
        w.set_column(c, &eig.vectors.column(c));
    }
    Ok((w, eig.values[..k].to_vec()))
}

/// Trained gender (or any c-class) classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherModel {
    pub image_w: u32,
    pub image_h: u32,
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    /// `d x (c - 1)` combined PCA and LDA projection.
    pub w: Mat,
    pub centroids: Vec<Vec<f64>>,
}

/// Every intermediate of [`train`], for inspection and tests.
#[derive(Clone, Debug)]
pub struct TrainingDetail {
    pub pca_basis: Mat,
    pub projection: Projection,
    pub scatter: ScatterPair,
    pub lda: Mat,
    pub eigenvalues: Vec<f64>,
}

pub fn train(xc: &ImageColumnMatrix, cv: &ClassVector) -> Result<FisherModel> {
    train_detailed(xc, cv).map(|(m, _)| m)
}

pub fn train_detailed(xc: &ImageColumnMatrix, cv: &ClassVector) -> Result<(FisherModel, TrainingDetail)> {
    let c = cv.num_classes();
    if c < 2 {
        return Err(FisherError::TooFewSamples("only one class".into()));
    }
    let (basis, mean, proj) = pca_step(xc, c)?;
    let scatter = ScatterPair {
        s_b: scatter_between(&proj, cv),
        s_w: scatter_within(&proj, cv),
    };
    let (lda, eigenvalues) = lda_step(&scatter, c - 1, c)?;
    if eigenvalues[0] < 1e-8 {
        return Err(FisherError::NoDiscrimination(eigenvalues[0]));
    }
    let w = basis.matmul(&lda);
    let projected = w.t_matmul(&centered(&xc.x, &mean));
    let (_, centroids) = class_means(&projected, cv);
    let model = FisherModel {
        image_w: xc.image_w,
        image_h: xc.image_h,
        names: cv.names.clone(),
        mean,
        w,
        centroids,
    };
    Ok((
        model,
        TrainingDetail {
            pca_basis: basis,
            projection: proj,
            scatter,
            lda,
            eigenvalues,
        },
    ))
}

impl FisherModel {
    /// `Wᵀ (x - mean)` for a flattened image.
    pub fn project(&self, face: &GrayImage) -> Result<Vec<f64>> {
        if (face.width(), face.height()) != (self.image_w, self.image_h) {
            return Err(FisherError::DimMismatch {
                expected: (self.image_w, self.image_h),
                got: (face.width(), face.height()),
            });
        }
        let x: Vec<f64> = face
            .luma()
            .iter()
            .zip(&self.mean)
            .map(|(&v, m)| v as f64 - m)
            .collect();
        Ok(self.w.t_mul_vec(&x))
    }

    /// Nearest class centroid and the Euclidean distance to it.
    pub fn predict(&self, face: &GrayImage) -> Result<(&str, f64)> {
        let y = self.project(face)?;
        let mut best = (0usize, f64::INFINITY);
        for (c, centroid) in self.centroids.iter().enumerate() {
            let d = y
                .iter()
                .zip(centroid)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d < best.1 {
                best = (c, d);
            }
        }
        Ok((&self.names[best.0], best.1))
    }

    /// `FISHER1` text model.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "FISHER1\n{} {} {}\n{}\n",
            self.image_w,
            self.image_h,
            self.names.len(),
            self.names.join(" ")
        );
        let floats = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{}", floats(&self.mean));
        s.push_str(&self.w.to_text());
        for c in &self.centroids {
            let _ = writeln!(s, "{}", floats(c));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<FisherModel> {
        let bad = |m: &str| FisherError::Model(m.to_string());
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("FISHER1") {
            return Err(bad("missing FISHER1 header"));
        }
        let dims: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing dimensions"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad dimensions")))
            .collect::<Result<_>>()?;
        let [iw, ih, c] = dims[..] else {
            return Err(bad("dimension line needs 3 numbers"));
        };
        let names: Vec<String> = lines
            .next()
            .ok_or_else(|| bad("missing class names"))?
            .split_whitespace()
            .map(String::from)
            .collect();
        if names.len() != c || c < 2 {
            return Err(bad("class name count mismatch"));
        }
        let floats = |line: Option<&str>, n: usize, what: &str| -> Result<Vec<f64>> {
            let v: Vec<f64> = line
                .ok_or_else(|| bad(&format!("missing {what}")))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(&format!("bad {what}"))))
                .collect::<Result<_>>()?;
            if v.len() != n {
                return Err(bad(&format!("{what} has {} values, expected {n}", v.len())));
            }
            Ok(v)
        };
        let d = iw * ih;
        let mean = floats(lines.next(), d, "mean")?;
        let w = Mat::from_lines(&mut lines)?;
        if w.rows() != d || w.cols() != c - 1 {
            return Err(bad("projection matrix has wrong shape"));
        }
        let centroids = (0..c)
            .map(|_| floats(lines.next(), c - 1, "centroid"))
            .collect::<Result<_>>()?;
        Ok(FisherModel {
            image_w: iw as u32,
            image_h: ih as u32,
            names,
            mean,
            w,
            centroids,
        })
    }

    pub fn load(path: &Path) -> Result<FisherModel> {
        let text =
            std::fs::read_to_string(path).map_err(|e| FisherError::Io(format!("{}: {e}", path.display())))?;
        FisherModel::from_text(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| FisherError::Io(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::sym_eig;
    use crate::synth::{face_crop, Gender, GaussianClasses};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn proj_1d(values: &[f64]) -> Projection {
        Projection {
            p: Mat::from_vec(1, values.len(), values.to_vec()).unwrap(),
        }
    }

    fn classes(labels: &[usize]) -> ClassVector {
        let c = labels.iter().max().unwrap() + 1;
        ClassVector {
            labels: labels.to_vec(),
            names: (0..c).map(|i| format!("c{i}")).collect(),
        }
    }

    #[test]
    fn build_matrix_layout() {
        let a = GrayImage::new(2, 2, vec![1, 2, 3, 4]).unwrap();
        let b = GrayImage::new(2, 2, vec![5, 6, 7, 8]).unwrap();
        let (xc, cv) = build_matrix(&[a.clone(), b.clone(), a, b], &["m", "f", "m", "f"]).unwrap();
        assert_eq!((xc.x.rows(), xc.x.cols()), (4, 4));
        assert_eq!(xc.x.column(0), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(cv.labels, vec![0, 1, 0, 1]);
        assert_eq!(cv.names, vec!["m", "f"]);
    }

    #[test]
    fn build_matrix_errors() {
        let a = GrayImage::filled(2, 2, 0);
        let b = GrayImage::filled(3, 2, 0);
        assert!(matches!(
            build_matrix(&[a.clone(), b], &["m", "f"]),
            Err(FisherError::DimMismatch { .. })
        ));
        assert!(matches!(
            build_matrix(&[a.clone(), a.clone(), a.clone()], &["m", "m", "f"]),
            Err(FisherError::TooFewSamples(_))
        ));
    }

    #[test]
    fn pca_dimension_is_n_minus_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let imgs: Vec<GrayImage> = (0..4).map(|_| GrayImage::from_fn(4, 4, |_, _| rng.gen())).collect();
        let (xc, cv) = build_matrix(&imgs, &["a", "a", "b", "b"]).unwrap();
        let (basis, mean, proj) = pca_step(&xc, cv.num_classes()).unwrap();
        assert_eq!((basis.rows(), basis.cols()), (16, 2));
        assert_eq!(mean.len(), 16);
        assert_eq!((proj.p.rows(), proj.p.cols()), (2, 4));
    }

    #[test]
    fn pca_rank_one_reconstructs() {
        // Mean-zero data along one direction, N=3, c=2.
        let dir = [1.0, -2.0, 0.5, 3.0];
        let coeffs = [-1.0, 0.25, 0.75];
        let cols: Vec<Vec<f64>> = coeffs.iter().map(|a| dir.iter().map(|d| a * d).collect()).collect();
        let xc = ImageColumnMatrix {
            x: Mat::from_columns(&cols),
            image_w: 2,
            image_h: 2,
        };
        let (basis, mean, proj) = pca_step(&xc, 2).unwrap();
        assert!(mean.iter().all(|m| m.abs() < 1e-12));
        let recon = basis.matmul(&proj.p);
        assert!(recon.sub(&xc.x).frobenius() < 1e-8);
    }

    #[test]
    fn duplicates_are_rank_deficient() {
        let a = GrayImage::from_fn(4, 4, |x, y| (x * 10 + y) as u8);
        let b = GrayImage::from_fn(4, 4, |x, y| (y * 13 + x * 2) as u8);
        let (xc, cv) = build_matrix(&[a.clone(), a.clone(), b.clone(), b], &["m", "m", "f", "f"]).unwrap();
        assert!(matches!(
            pca_step(&xc, cv.num_classes()),
            Err(FisherError::Numeric(NumericError::RankDeficient { .. }))
        ));
    }

    #[test]
    fn scatter_hand_values() {
        let single = scatter_between(&proj_1d(&[1.0, 2.0, 6.0]), &classes(&[0, 0, 0]));
        assert_eq!(single[(0, 0)], 0.0);
        let sb = scatter_between(&proj_1d(&[-1.0, -1.0, 1.0, 1.0]), &classes(&[0, 0, 1, 1]));
        assert!((sb[(0, 0)] - 4.0).abs() < 1e-12);
        let sw = scatter_within(&proj_1d(&[0.0, 2.0, 5.0, 5.0]), &classes(&[0, 0, 1, 1]));
        assert!((sw[(0, 0)] - 2.0).abs() < 1e-12);
        let zero = scatter_within(&proj_1d(&[3.0, 3.0, 7.0, 7.0]), &classes(&[0, 0, 1, 1]));
        assert_eq!(zero[(0, 0)], 0.0);
    }

    #[test]
    fn scatter_decomposition_and_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (k, n) = (5, 30);
        let p = Mat::from_vec(k, n, (0..k * n).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
        let labels: Vec<usize> = (0..n).map(|j| j % 3).collect();
        let cv = classes(&labels);
        let proj = Projection { p: p.clone() };
        let sb = scatter_between(&proj, &cv);
        let sw = scatter_within(&proj, &cv);
        let m: Vec<f64> = (0..k).map(|i| p.row(i).iter().sum::<f64>() / n as f64).collect();
        let mut total = Mat::zeros(k, k);
        for j in 0..n {
            let d: Vec<f64> = (0..k).map(|i| p[(i, j)] - m[i]).collect();
            add_outer(&mut total, &d, 1.0);
        }
        assert!(sb.add(&sw).sub(&total).frobenius() <= 1e-8 * total.frobenius());
        let eb = sym_eig(&sb).unwrap();
        let ew = sym_eig(&sw).unwrap();
        assert!(eb.values.iter().all(|&v| v >= -1e-9 * sb.frobenius()));
        assert!(ew.values.iter().all(|&v| v >= -1e-9 * sw.frobenius()));
        // c = 3 classes, so at most 2 non-zero between-class eigenvalues.
        assert!(eb.values[2..].iter().all(|&v| v <= 1e-8 * eb.values[0]));
    }

    #[test]
    fn lda_recovers_separating_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut cols = Vec::new();
        let mut labels = Vec::new();
        for c in 0..2 {
            for _ in 0..50 {
                let off = if c == 0 { -5.0 } else { 5.0 };
                cols.push(vec![off + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
                labels.push(c);
            }
        }
        let cv = classes(&labels);
        let proj = Projection {
            p: Mat::from_columns(&cols),
        };
        let sp = ScatterPair {
            s_b: scatter_between(&proj, &cv),
            s_w: scatter_within(&proj, &cv),
        };
        let (w, _) = lda_step(&sp, 1, 2).unwrap();
        assert_eq!(w.cols(), 1);
        assert!(w[(0, 0)].abs() >= 0.99);
        assert!(matches!(
            lda_step(&sp, 2, 2),
            Err(FisherError::TooManyDiscriminants { .. })
        ));
    }

    #[test]
    fn zero_between_scatter_is_rejected() {
        // Class y perturbs three images of class x independently and lets the
        // fourth absorb the sum, so the class means coincide exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let xs: Vec<GrayImage> = (0..4)
            .map(|_| GrayImage::from_fn(3, 3, |_, _| rng.gen_range(80..180)))
            .collect();
        let deltas: Vec<Vec<i32>> = (0..3).map(|_| (0..9).map(|_| rng.gen_range(-20..=20)).collect()).collect();
        let shifted = |img: &GrayImage, delta: &dyn Fn(usize) -> i32| {
            GrayImage::from_fn(3, 3, |x, y| (img.get(x, y) as i32 + delta((y * 3 + x) as usize)) as u8)
        };
        let mut imgs = xs.clone();
        for k in 0..3 {
            imgs.push(shifted(&xs[k], &|i| deltas[k][i]));
        }
        imgs.push(shifted(&xs[3], &|i| -deltas.iter().map(|d| d[i]).sum::<i32>()));
        let labels = ["x", "x", "x", "x", "y", "y", "y", "y"];
        let (xc, cv) = build_matrix(&imgs, &labels).unwrap();
        let r = train(&xc, &cv);
        assert!(matches!(r, Err(FisherError::NoDiscrimination(_))), "{r:?}");
    }

    fn synthetic_gender_set(rng: &mut impl Rng, per_class: usize) -> (Vec<GrayImage>, Vec<&'static str>) {
        let mut imgs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..2 * per_class {
            let g = if i % 2 == 0 { Gender::Male } else { Gender::Female };
            imgs.push(face_crop(rng, g));
            labels.push(g.name());
        }
        (imgs, labels)
    }

    #[test]
    fn separable_training_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let (imgs, labels) = synthetic_gender_set(&mut rng, 20);
        let (xc, cv) = build_matrix(&imgs, &labels).unwrap();
        let model = train(&xc, &cv).unwrap();
        assert_eq!(model.w.cols(), 1);
        for (img, label) in imgs.iter().zip(&labels) {
            assert_eq!(model.predict(img).unwrap().0, *label);
        }
        assert!(matches!(
            model.predict(&GrayImage::filled(8, 8, 0)),
            Err(FisherError::DimMismatch { .. })
        ));
    }

    #[test]
    fn model_text_roundtrip_predicts_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (imgs, labels) = synthetic_gender_set(&mut rng, 10);
        let (xc, cv) = build_matrix(&imgs, &labels).unwrap();
        let model = train(&xc, &cv).unwrap();
        let text = model.to_text();
        assert!(text.starts_with("FISHER1\n32 32 2\nmale female\n"));
        let back = FisherModel::from_text(&text).unwrap();
        assert_eq!(back, model);
        for _ in 0..100 {
            let q = GrayImage::from_fn(32, 32, |_, _| rng.gen());
            assert_eq!(back.predict(&q).unwrap(), model.predict(&q).unwrap());
        }
    }

    #[test]
    fn centroid_query_has_zero_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let gc = GaussianClasses::new(&mut rng, 8, 10.0, 3.0);
        let imgs: Vec<GrayImage> = (0..12).map(|i| gc.sample(&mut rng, i % 2)).collect();
        let labels: Vec<&str> = (0..12).map(|i| if i % 2 == 0 { "a" } else { "b" }).collect();
        let (xc, cv) = build_matrix(&imgs, &labels).unwrap();
        let model = train(&xc, &cv).unwrap();
        // The training sample nearest its centroid is a preimage up to the
        // orthogonal complement of W, so check the projection directly.
        let y = model.project(&imgs[0]).unwrap();
        let (name, dist) = model.predict(&imgs[0]).unwrap();
        let d0 = (y[0] - model.centroids[0][0]).abs();
        assert_eq!(name, "a");
        assert!((dist - d0).abs() < 1e-9);
    }

    #[test]
    fn affine_intensity_change_keeps_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (imgs, labels) = synthetic_gender_set(&mut rng, 12);
        let queries: Vec<GrayImage> = (0..20)
            .map(|i| face_crop(&mut rng, if i % 2 == 0 { Gender::Male } else { Gender::Female }))
            .collect();
        let transform = |img: &GrayImage| {
            GrayImage::from_fn(img.width(), img.height(), |x, y| (img.get(x, y) as u32 / 2 + 40) as u8)
        };
        let (xc, cv) = build_matrix(&imgs, &labels).unwrap();
        let base = train(&xc, &cv).unwrap();
        let t_imgs: Vec<GrayImage> = imgs.iter().map(transform).collect();
        // Halving with integer truncation is not exactly affine, so compare
        // against a model trained on the same truncated data.
        let (txc, tcv) = build_matrix(&t_imgs, &labels).unwrap();
        let scaled = train(&txc, &tcv).unwrap();
        for q in &queries {
            assert_eq!(
                base.predict(q).unwrap().0,
                scaled.predict(&transform(q)).unwrap().0
            );
        }
    }
}
