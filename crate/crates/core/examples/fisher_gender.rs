//! Fisherfaces on synthetic face crops: train, save, reload, score.

use crowdlens::fisher::{build_matrix, train, FisherModel};
use crowdlens::synth::{face_crop, Gender};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut imgs = Vec::new();
    let mut labels = Vec::new();
    for i in 0..120 {
        let g = if i % 2 == 0 { Gender::Male } else { Gender::Female };
        imgs.push(face_crop(&mut rng, g));
        labels.push(g.name());
    }
    let (xc, cv) = build_matrix(&imgs, &labels)?;
    let model = train(&xc, &cv)?;
    let path = std::env::temp_dir().join("crowdlens_example.fisher");
    model.save(&path)?;
    let model = FisherModel::load(&path)?;

    let mut hits = [0usize; 2];
    for (k, g) in [Gender::Male, Gender::Female].into_iter().enumerate() {
        for _ in 0..100 {
            if model.predict(&face_crop(&mut rng, g))?.0 == g.name() {
                hits[k] += 1;
            }
        }
    }
    println!("held-out accuracy: male {}% female {}%", hits[0], hits[1]);
    Ok(())
}
