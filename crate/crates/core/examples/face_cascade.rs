//! Trains a face cascade on synthetic windows, bootstraps it with hard
//! negatives mined from scenes, then scans a fresh scene.

use std::time::Instant;

use crowdlens::boostcascade::{detect_faces, mine_negatives, train_cascade_with, Cascade, CascadeParams, FaceScan};
use crowdlens::synth::{face_scene, face_training_set, Gender};
use crowdlens::{GrayImage, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_scene(rng: &mut impl Rng) -> (GrayImage, Vec<Rect>) {
    let mut faces = Vec::new();
    for _ in 0..rng.gen_range(0..3) {
        let side = rng.gen_range(24..72);
        let r = Rect::new(rng.gen_range(0..320 - side), rng.gen_range(0..240 - side), side, side);
        if faces.iter().all(|(f, _): &(Rect, Gender)| f.iou(&r) == 0.0) {
            faces.push((r, if rng.gen() { Gender::Male } else { Gender::Female }));
        }
    }
    let img = face_scene(320, 240, &faces, rng);
    (img, faces.into_iter().map(|(r, _)| r).collect())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (pos, neg) = face_training_set(&mut rng, 300, 600);
    let params = CascadeParams {
        step_pos: 3,
        step_size: 3,
        max_stages: 8,
        ..CascadeParams::default()
    };
    let scan = FaceScan::default();
    let scenes: Vec<_> = (0..20).map(|_| random_scene(&mut rng)).collect();
    let t = Instant::now();
    let mut refill = |partial: &Cascade, n: usize| mine_negatives(partial, &scenes, &scan, n);
    let (cascade, reports) = train_cascade_with(&pos, &neg, &params, Some(&mut refill))?;
    for (i, r) in reports.iter().enumerate() {
        println!("  stage {i}: {r:?}");
    }
    println!(
        "trained {} stages, {} stumps in {:.1}s",
        cascade.stages.len(),
        cascade.stages.iter().map(|s| s.rounds.len()).sum::<usize>(),
        t.elapsed().as_secs_f64()
    );

    let faces = [
        (Rect::new(40, 50, 48, 48), Gender::Male),
        (Rect::new(200, 90, 60, 60), Gender::Female),
    ];
    let scene = face_scene(320, 240, &faces, &mut rng);
    let t = Instant::now();
    let dets = detect_faces(&scene, &cascade, &scan)?;
    println!("scan took {:.1} ms", t.elapsed().as_secs_f64() * 1e3);
    for d in &dets {
        let best = faces.iter().map(|(r, _)| r.iou(&d.rect)).fold(0.0, f64::max);
        println!("  {} score {:.2} best iou {:.2}", d.rect, d.score, best);
    }
    Ok(())
}
