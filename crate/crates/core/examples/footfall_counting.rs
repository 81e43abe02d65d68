//! Tracks centroids across frames and counts line crossings.

use crowdlens::analytics::{CountingLine, FootfallCounter, HeatGrid, Tracker};
use crowdlens::{Detection, Rect};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let line = CountingLine::parse("LINE door 160 0 160 240")?;
    let mut counter = FootfallCounter::new(line);
    let mut tracker = Tracker::new(40.0, 3);
    let mut grid = HeatGrid::new(8, 320, 240)?;
    for f in 0..20u32 {
        // One person walks right, another walks left a little lower.
        let dets = [
            Detection::new(Rect::new(20 + 12 * f, 20, 64, 128), 1.0),
            Detection::new(Rect::new(250 - 12 * f, 100, 64, 128), 1.0),
        ];
        let step = tracker.step(&dets);
        grid.update(&dets);
        for a in step.assignments.iter().filter(|a| !a.spawned) {
            let t = tracker.track(a.track_id).expect("live track");
            if let Some(dir) = counter.observe(t)? {
                println!("frame {f}: track {} crossed {dir}", t.id);
            }
        }
    }
    let (raw, clamped) = counter.occupancy();
    println!("in {} out {} occupancy {raw} ({clamped})", counter.in_count, counter.out_count);
    print!("{}", grid.to_text());
    Ok(())
}
