//! Append-only event log, report aggregation and the read-only stats
//! endpoint.
//!
//! Each event is one line: `ts<TAB>kind<TAB>key=value;key=value`, with `ts`
//! in milliseconds since the Unix epoch (UTC).

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::net::SocketAddr;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use chrono::{DateTime, Datelike, Timelike};
use serde::Serialize;
use thiserror::Error;

use crate::analytics::{Direction, HeatGrid};
use crate::imgcore::{encode_pnm, Rect};

#[derive(Debug, Error)]
pub enum EventStoreError {
    #[error("io: {0}")]
    Io(String),
    #[error("timestamp {got} is earlier than the last logged {last}")]
    NonMonotonicTimestamp { last: i64, got: i64 },
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot bind stats server: {0}")]
    BindFailure(String),
}

pub type Result<T, E = EventStoreError> = std::result::Result<T, E>;

fn io_err(path: &Path, e: std::io::Error) -> EventStoreError {
    EventStoreError::Io(format!("{}: {e}", path.display()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Face,
    Gender,
    Person,
    Crossing,
    Occupancy,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Face => "face",
            EventKind::Gender => "gender",
            EventKind::Person => "person",
            EventKind::Crossing => "crossing",
            EventKind::Occupancy => "occupancy",
        }
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "face" => EventKind::Face,
            "gender" => EventKind::Gender,
            "person" => EventKind::Person,
            "crossing" => EventKind::Crossing,
            "occupancy" => EventKind::Occupancy,
            _ => return Err(format!("unknown event kind {s:?}")),
        })
    }
}

/// Kind-specific payload.
#[derive(Clone, Debug, PartialEq)]
pub enum EventData {
    Face { rect: Rect },
    Gender { label: String },
    Person { rect: Rect },
    Crossing { line: String, direction: Direction },
    Occupancy { value: i64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub ts: i64,
    pub data: EventData,
}

fn check_token(v: &str) -> Result<()> {
    if v.is_empty() || v.contains(['\t', '\n', '\r', ';', '=']) {
        return Err(EventStoreError::InvalidField(format!("{v:?}")));
    }
    Ok(())
}

impl Event {
    pub fn new(ts: i64, data: EventData) -> Self {
        Self { ts, data }
    }

    pub fn kind(&self) -> EventKind {
        match self.data {
            EventData::Face { .. } => EventKind::Face,
            EventData::Gender { .. } => EventKind::Gender,
            EventData::Person { .. } => EventKind::Person,
            EventData::Crossing { .. } => EventKind::Crossing,
            EventData::Occupancy { .. } => EventKind::Occupancy,
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.data {
            EventData::Gender { label } => check_token(label),
            EventData::Crossing { line, .. } => check_token(line),
            _ => Ok(()),
        }
    }

    /// The log line, without the trailing newline.
    pub fn to_line(&self) -> String {
        let fields = match &self.data {
            EventData::Face { rect } | EventData::Person { rect } => {
                format!("x={};y={};w={};h={}", rect.x, rect.y, rect.w, rect.h)
            }
            EventData::Gender { label } => format!("label={label}"),
            EventData::Crossing { line, direction } => format!("line={line};dir={direction}"),
            EventData::Occupancy { value } => format!("value={value}"),
        };
        format!("{}\t{}\t{}", self.ts, self.kind().as_str(), fields)
    }

    pub fn parse_line(line: &str) -> Result<Event, String> {
        let mut parts = line.splitn(3, '\t');
        let ts: i64 = parts
            .next()
            .ok_or("empty line")?
            .parse()
            .map_err(|_| "bad timestamp".to_string())?;
        let kind: EventKind = parts.next().ok_or("missing kind")?.parse()?;
        let body = parts.next().ok_or("missing fields")?;
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        for kv in body.split(';') {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("field {kv:?} lacks '='"))?;
            if fields.insert(k, v).is_some() {
                return Err(format!("duplicate field {k:?}"));
            }
        }
        let expected: &[&str] = match kind {
            EventKind::Face | EventKind::Person => &["h", "w", "x", "y"],
            EventKind::Gender => &["label"],
            EventKind::Crossing => &["dir", "line"],
            EventKind::Occupancy => &["value"],
        };
        if !fields.keys().copied().eq(expected.iter().copied()) {
            return Err(format!("{} expects fields {expected:?}", kind.as_str()));
        }
        let num = |k: &str| -> Result<u32, String> { fields[k].parse().map_err(|_| format!("bad {k}")) };
        let data = match kind {
            EventKind::Face | EventKind::Person => {
                let rect = Rect::new(num("x")?, num("y")?, num("w")?, num("h")?);
                if kind == EventKind::Face {
                    EventData::Face { rect }
                } else {
                    EventData::Person { rect }
                }
            }
            EventKind::Gender => EventData::Gender {
                label: fields["label"].to_string(),
            },
            EventKind::Crossing => EventData::Crossing {
                line: fields["line"].to_string(),
                direction: fields["dir"].parse().map_err(|e| format!("{e}"))?,
            },
            EventKind::Occupancy => EventData::Occupancy {
                value: fields["value"].parse().map_err(|_| "bad value".to_string())?,
            },
        };
        let ev = Event { ts, data };
        ev.validate().map_err(|e| e.to_string())?;
        Ok(ev)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// Single-writer handle on a log file.
pub struct EventLog {
    path: PathBuf,
    file: File,
    last_ts: Option<i64>,
}

impl EventLog {
    /// Opens `path` for appending, creating it if needed.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let last_ts = if path.exists() {
            load(&path, i64::MIN..i64::MAX)?.events.last().map(|e| e.ts)
        } else {
            None
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        Ok(Self { path, file, last_ts })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn last_ts(&self) -> Option<i64> {
        self.last_ts
    }

    /// Writes one line and syncs it to disk before returning.
    pub fn append(&mut self, e: &Event) -> Result<()> {
        if let Some(last) = self.last_ts {
            if e.ts < last {
                return Err(EventStoreError::NonMonotonicTimestamp { last, got: e.ts });
            }
        }
        e.validate()?;
        let mut line = e.to_line();
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|err| io_err(&self.path, err))?;
        self.last_ts = Some(e.ts);
        Ok(())
    }
}

/// A line skipped while loading.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadWarning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Loaded {
    pub events: Vec<Event>,
    pub warnings: Vec<LoadWarning>,
}

/// Parses a whole log snapshot. A final line without its newline is a torn
/// write and is skipped with a warning.
pub fn parse_log(text: &str, range: Range<i64>) -> Loaded {
    let mut out = Loaded::default();
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.split('\n').collect();
    let n = lines.len();
    for (i, line) in lines.into_iter().enumerate() {
        if i + 1 == n {
            if !complete && !line.is_empty() {
                out.warnings.push(LoadWarning {
                    line: i + 1,
                    message: "torn final line".into(),
                });
            }
            break;
        }
        if line.is_empty() {
            continue;
        }
        match Event::parse_line(line) {
            Ok(e) if range.contains(&e.ts) => out.events.push(e),
            Ok(_) => {}
            Err(message) => out.warnings.push(LoadWarning { line: i + 1, message }),
        }
    }
    out
}

/// Events with `ts` in `range`, in log order.
pub fn load(path: impl AsRef<Path>, range: Range<i64>) -> Result<Loaded> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(parse_log(&String::from_utf8_lossy(&bytes), range))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucketing {
    Hour,
    Dow,
}

impl FromStr for Bucketing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hour" => Ok(Bucketing::Hour),
            "dow" | "day" | "dayofweek" => Ok(Bucketing::Dow),
            _ => Err(format!("unknown bucketing {s:?} (expected hour or dow)")),
        }
    }
}

pub const WEEKDAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OccupancyPoint {
    pub ts: i64,
    pub value: i64,
}

/// Aggregates over one set of events. Hour and weekday buckets count "in"
/// crossings in local time (`tz_minutes` east of UTC).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub bucketing: Bucketing,
    pub tz_minutes: i32,
    pub events: u64,
    pub hourly: [u64; 24],
    /// Monday first.
    pub day_of_week: [u64; 7],
    pub entries: u64,
    pub exits: u64,
    pub gender_counts: BTreeMap<String, u64>,
    pub gender_split: BTreeMap<String, f64>,
    pub occupancy: Vec<OccupancyPoint>,
    pub peak_hour: u32,
}

fn local_time(ts: i64, tz_minutes: i32) -> Option<chrono::NaiveDateTime> {
    DateTime::from_timestamp_millis(ts.checked_add(tz_minutes as i64 * 60_000)?).map(|d| d.naive_utc())
}

pub fn report(events: &[Event], bucketing: Bucketing, tz_minutes: i32) -> Report {
    let mut r = Report {
        bucketing,
        tz_minutes,
        events: events.len() as u64,
        hourly: [0; 24],
        day_of_week: [0; 7],
        entries: 0,
        exits: 0,
        gender_counts: BTreeMap::new(),
        gender_split: BTreeMap::new(),
        occupancy: Vec::new(),
        peak_hour: 0,
    };
    let mut running = 0i64;
    for e in events {
        match &e.data {
            EventData::Crossing { direction, .. } => {
                match direction {
                    Direction::In => {
                        r.entries += 1;
                        running += 1;
                        if let Some(t) = local_time(e.ts, tz_minutes) {
                            r.hourly[t.hour() as usize] += 1;
                            r.day_of_week[t.weekday().num_days_from_monday() as usize] += 1;
                        }
                    }
                    Direction::Out => {
                        r.exits += 1;
                        running -= 1;
                    }
                }
                r.occupancy.push(OccupancyPoint {
                    ts: e.ts,
                    value: running,
                });
            }
            EventData::Gender { label } => *r.gender_counts.entry(label.clone()).or_insert(0) += 1,
            _ => {}
        }
    }
    let genders: u64 = r.gender_counts.values().sum();
    if genders > 0 {
        r.gender_split = r
            .gender_counts
            .iter()
            .map(|(k, &v)| (k.clone(), v as f64 / genders as f64))
            .collect();
    }
    let mut peak = 0;
    for h in 1..24 {
        if r.hourly[h] > r.hourly[peak] {
            peak = h;
        }
    }
    r.peak_hour = peak as u32;
    r
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Aligned text tables for terminals.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let hours = |s: &mut String| {
            s.push_str("hour  in\n");
            for (h, c) in self.hourly.iter().enumerate() {
                s.push_str(&format!("{h:02}    {c:>6}\n"));
            }
        };
        let days = |s: &mut String| {
            s.push_str("day   in\n");
            for (d, c) in self.day_of_week.iter().enumerate() {
                s.push_str(&format!("{}   {c:>6}\n", WEEKDAYS[d]));
            }
        };
        match self.bucketing {
            Bucketing::Hour => hours(&mut s),
            Bucketing::Dow => days(&mut s),
        }
        s.push_str(&format!(
            "\nentries {:>6}\nexits   {:>6}\npeak hour {:02}\n",
            self.entries, self.exits, self.peak_hour
        ));
        if !self.gender_counts.is_empty() {
            s.push_str("\ngender   count  share\n");
            for (k, c) in &self.gender_counts {
                s.push_str(&format!("{k:<8} {c:>5}  {:>5.3}\n", self.gender_split[k]));
            }
        }
        if let Some(last) = self.occupancy.last() {
            s.push_str(&format!("\noccupancy now {}\n", last.value));
        }
        s
    }

    /// Tab-separated rows for the selected bucketing.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        match self.bucketing {
            Bucketing::Hour => {
                s.push_str("hour\tin\n");
                for (h, c) in self.hourly.iter().enumerate() {
                    s.push_str(&format!("{h}\t{c}\n"));
                }
            }
            Bucketing::Dow => {
                s.push_str("day\tin\n");
                for (d, c) in self.day_of_week.iter().enumerate() {
                    s.push_str(&format!("{}\t{c}\n", WEEKDAYS[d]));
                }
            }
        }
        s
    }
}

/// What the stats server reads from.
#[derive(Clone, Debug)]
pub struct StatsConfig {
    pub log: PathBuf,
    /// `GRID1` file rendered for `/heatmap.ppm`.
    pub grid: Option<PathBuf>,
    pub addr: SocketAddr,
}

/// Running stats server; stops when dropped or on [`StatsServer::shutdown`].
pub struct StatsServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl StatsServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for StatsServer {
    fn drop(&mut self) {
        self.stop_now();
    }
}

fn query_params(url: &str) -> BTreeMap<String, String> {
    url.split_once('?')
        .map(|(_, q)| {
            q.split('&')
                .filter_map(|kv| kv.split_once('='))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect()
        })
        .unwrap_or_default()
}

/// Status, content type and body for one request.
pub fn respond(cfg: &StatsConfig, method: &str, url: &str) -> (u16, &'static str, Vec<u8>) {
    const TEXT: &str = "text/plain; charset=utf-8";
    if method != "GET" {
        return (405, TEXT, b"method not allowed\n".to_vec());
    }
    let path = url.split('?').next().unwrap_or("");
    match path {
        "/stats" => {
            let q = query_params(url);
            let parse = |k: &str, default: i64| -> Result<i64, String> {
                q.get(k).map_or(Ok(default), |v| v.parse().map_err(|_| format!("bad {k}")))
            };
            let params = (|| Ok::<_, String>((parse("from", i64::MIN)?, parse("to", i64::MAX)?, parse("tz", 0)?)))();
            let (from, to, tz) = match params {
                Ok(p) => p,
                Err(m) => return (400, TEXT, format!("{m}\n").into_bytes()),
            };
            let Ok(tz) = i32::try_from(tz) else {
                return (400, TEXT, b"bad tz\n".to_vec());
            };
            let events = match std::fs::read(&cfg.log) {
                Ok(bytes) => parse_log(&String::from_utf8_lossy(&bytes), from..to).events,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
                Err(e) => return (500, TEXT, format!("{e}\n").into_bytes()),
            };
            let body = report(&events, Bucketing::Hour, tz).to_json();
            (200, "application/json", body.into_bytes())
        }
        "/heatmap.ppm" => {
            let Some(grid) = &cfg.grid else {
                return (404, TEXT, b"no heat map configured\n".to_vec());
            };
            match std::fs::read_to_string(grid) {
                Ok(text) => match HeatGrid::from_text(&text) {
                    Ok(g) => (200, "image/x-portable-pixmap", encode_pnm(&g.render_heat())),
                    Err(e) => (500, TEXT, format!("{e}\n").into_bytes()),
                },
                Err(_) => (404, TEXT, b"no heat map yet\n".to_vec()),
            }
        }
        _ => (404, TEXT, b"not found\n".to_vec()),
    }
}

/// Starts the HTTP endpoint on a background thread.
pub fn serve_stats(cfg: StatsConfig) -> Result<StatsServer> {
    let server = tiny_http::Server::http(cfg.addr).map_err(|e| EventStoreError::BindFailure(format!("{}: {e}", cfg.addr)))?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| EventStoreError::BindFailure("not an IP listener".into()))?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    let thread = std::thread::spawn(move || {
        while !flag.load(Ordering::SeqCst) {
            let req = match server.recv_timeout(Duration::from_millis(50)) {
                Ok(Some(r)) => r,
                Ok(None) => continue,
                Err(e) => {
                    log::warn!("stats server: {e}");
                    continue;
                }
            };
            let (status, ctype, body) = respond(&cfg, req.method().as_str(), req.url());
            log::debug!("{} {} -> {status}", req.method(), req.url());
            let resp = tiny_http::Response::from_data(body)
                .with_status_code(status)
                .with_header(tiny_http::Header::from_bytes("Content-Type", ctype).expect("static header"))
                .with_header(tiny_http::Header::from_bytes("Connection", "close").expect("static header"));
            if let Err(e) = req.respond(resp) {
                log::debug!("stats response failed: {e}");
            }
        }
    });
    Ok(StatsServer {
        addr,
        stop,
        thread: Some(thread),
    })
}
