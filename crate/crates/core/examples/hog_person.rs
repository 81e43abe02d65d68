//! HOG descriptors, a Pegasos SVM and a multi-scale scan of one frame.

use crowdlens::hogdetect::{descriptor, detect, svm_train, training_descriptors, DetectParams, SvmParams, DESCRIPTOR_LEN};
use crowdlens::synth::{bar_figure, person_training_set, walker_frame, Walker};
use crowdlens::Rect;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = descriptor(&bar_figure(&mut rng))?;
    println!("descriptor length {} (expected {DESCRIPTOR_LEN})", d.0.len());

    let (pos, neg) = person_training_set(&mut rng, 300, 900);
    let (xs, ys) = training_descriptors(&pos, &neg)?;
    let svm = svm_train(&xs, &ys, SvmParams { seed: 1, epochs: 50, ..SvmParams::default() })?;
    println!("svm objective {:.5}", svm.objective(&xs, &ys));

    let walker = Walker { start: (120.0, 60.0), velocity: (0.0, 0.0), enters: 0, leaves: 1 };
    let frame = walker_frame(320, 240, &[walker], 0, 5);
    let truth = Rect::new(120, 60, 64, 128);
    for det in detect(&frame, &svm, &DetectParams::default())? {
        println!("  {} score {:.2} iou {:.2}", det.rect, det.score, det.rect.iou(&truth));
    }
    Ok(())
}
