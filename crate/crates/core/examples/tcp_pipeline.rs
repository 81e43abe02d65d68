//! Streams synthetic walker frames over the raw TCP protocol into a
//! footfall pipeline and prints the events it emits.

use std::net::TcpListener;
use std::sync::atomic::AtomicBool;

use crowdlens::eventstore::Event;
use crowdlens::hogdetect::{svm_train, training_descriptors, SvmParams};
use crowdlens::pipeline::{open_source, EventSink, FrameEmitter, ModeConfig, Pipeline, StreamHeader, Mode};
use crowdlens::analytics::CountingLine;
use crowdlens::synth::{fixture, person_training_set, walker_frame};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(fixture::TRAIN_SEED);
    let (pos, neg) = person_training_set(&mut rng, 300, 900);
    let (xs, ys) = training_descriptors(&pos, &neg)?;
    let svm = svm_train(&xs, &ys, SvmParams { seed: 1, epochs: 50, ..SvmParams::default() })?;

    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let header = StreamHeader { width: fixture::WIDTH, height: fixture::HEIGHT, channels: 1, fps: 15 };
    let emitter = std::thread::spawn(move || -> std::io::Result<()> {
        let mut out = FrameEmitter::accept(&listener, header)?;
        let walkers = fixture::walkers();
        for i in 0..fixture::FRAMES {
            out.send(&walker_frame(fixture::WIDTH, fixture::HEIGHT, &walkers, i, fixture::SCENE_SEED).into())?;
            std::thread::sleep(std::time::Duration::from_millis(1000 / 15));
        }
        Ok(())
    });

    let mut cfg = ModeConfig::new(Mode::Footfall);
    cfg.lines.push(CountingLine::parse(fixture::LINE)?);
    cfg.start_ts = Some(fixture::START_TS);
    let pipeline = Pipeline::footfall(cfg, svm);
    let mut events: Vec<Event> = Vec::new();
    let mut sinks: [&mut dyn EventSink; 1] = [&mut events];
    let out = pipeline.run(open_source(&format!("tcp:{addr}"))?, &mut sinks, &AtomicBool::new(false))?;
    emitter.join().expect("emitter thread")?;
    for e in events.iter().filter(|e| !matches!(e.data, crowdlens::eventstore::EventData::Person { .. })) {
        println!("{}", e.to_line());
    }
    println!("{}", out.stats.summary());
    Ok(())
}
