//! Appends events to a log, reloads a time range and prints the report.

use crowdlens::analytics::Direction;
use crowdlens::eventstore::{load, report, Bucketing, Event, EventData, EventLog};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("crowdlens_report_{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("events.log");
    let mut log = EventLog::open(&path)?;
    // 2024-03-05 08:00 UTC, one event every seven minutes.
    let t0 = 1_709_625_600_000i64;
    for i in 0..60i64 {
        let direction = if i % 3 == 0 { Direction::Out } else { Direction::In };
        log.append(&Event::new(t0 + i * 420_000, EventData::Crossing { line: "door".into(), direction }))?;
        let label = if i % 2 == 0 { "male" } else { "female" };
        log.append(&Event::new(t0 + i * 420_000, EventData::Gender { label: label.into() }))?;
    }
    let loaded = load(&path, i64::MIN..i64::MAX)?;
    print!("{}", report(&loaded.events, Bucketing::Hour, 60).to_table());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
