//! Regenerates the footfall fixture: frames, a person SVM and a run config.
//!
//! cargo run --release --example make_walker_fixture -- crates/core/tests/fixtures/walkers

use std::fs;
use std::path::PathBuf;

use crowdlens::hogdetect::{svm_train, training_descriptors, SvmParams};
use crowdlens::imgcore::encode_pnm;
use crowdlens::synth::{fixture, person_training_set, walker_frame};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "walkers".into()).into();
    let frames = out.join("frames");
    fs::create_dir_all(&frames)?;

    let walkers = fixture::walkers();
    for i in 0..fixture::FRAMES {
        let img = walker_frame(fixture::WIDTH, fixture::HEIGHT, &walkers, i, fixture::SCENE_SEED);
        fs::write(frames.join(format!("frame_{i:03}.pgm")), encode_pnm(&img.into()))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(fixture::TRAIN_SEED);
    let (pos, neg) = person_training_set(&mut rng, 300, 900);
    let (xs, ys) = training_descriptors(&pos, &neg)?;
    let svm = svm_train(&xs, &ys, SvmParams { seed: 1, epochs: 50, ..SvmParams::default() })?;
    svm.save(&out.join("person.svm"))?;

    let cfg = format!(
        "mode footfall\nsource pnmdir:frames\nsvm person.svm\nfps 15\ngrid_n 8\nstart_ts {}\n{}\n",
        fixture::START_TS,
        fixture::LINE
    );
    fs::write(out.join("run.cfg"), cfg)?;
    println!("wrote {} frames to {}", fixture::FRAMES, out.display());
    Ok(())
}
