//! Serves /stats for a small log and queries it over loopback.

use std::io::{Read, Write};
use std::net::TcpStream;

use crowdlens::eventstore::{serve_stats, Event, EventData, EventLog, StatsConfig};

fn get(addr: std::net::SocketAddr, path: &str) -> std::io::Result<String> {
    let mut s = TcpStream::connect(addr)?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")?;
    let mut out = String::new();
    s.read_to_string(&mut out)?;
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("crowdlens_stats_{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("events.log");
    let mut log = EventLog::open(&path)?;
    for i in 0..5 {
        log.append(&Event::new(1_709_647_200_000 + i, EventData::Occupancy { value: i }))?;
    }
    let server = serve_stats(StatsConfig { log: path, grid: None, addr: "127.0.0.1:0".parse()? })?;
    let body = get(server.addr(), "/stats?tz=0")?;
    println!("{}", body.split("\r\n\r\n").nth(1).unwrap_or(""));
    server.shutdown();
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
