//! Frame acquisition, pacing and the two run modes.
//!
//! An acquisition thread offers frames into a one-slot hand-off where the
//! newest frame wins; the processing loop takes whatever is in the slot.
//! A frame replaced before it was taken counts as dropped.

use std::collections::VecDeque;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use log::{debug, info, warn};
use thiserror::Error;

use crate::analytics::{default_gate, CountingLine, FootfallCounter, GenderTally, HeatGrid, Tracker};
use crate::boostcascade::{detect_faces, BoostError, Cascade, FaceScan};
use crate::detection::Detection;
use crate::eventstore::{Event, EventData, EventLog, EventStoreError};
use crate::fisher::FisherModel;
use crate::hogdetect::{self, DetectParams, LinearSvm};
use crate::imgcore::{decode_pnm, to_gray, GrayImage, PixelBuffer};
use crate::synth::normalize_face;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("unsupported source uri {0:?} (expected pnmdir:<path> or tcp:<host>:<port>)")]
    BadUri(String),
    #[error("cannot connect to {addr}: {reason}")]
    ConnectFailure { addr: String, reason: String },
    #[error("cannot load model {path}: {reason}")]
    ModelLoadFailure { path: PathBuf, reason: String },
    #[error("source: {0}")]
    SourceFailure(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("config: {0}")]
    MissingSetting(String),
    #[error("detector: {0}")]
    Detector(String),
    #[error(transparent)]
    Store(#[from] EventStoreError),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

/// Anything that yields frames of constant size.
pub trait FrameSource: Send {
    /// Next frame, or `None` once the source is exhausted.
    fn next_frame(&mut self) -> Result<Option<PixelBuffer>>;

    /// Nominal frame rate announced by the source, if any.
    fn nominal_fps(&self) -> Option<f64> {
        None
    }

    /// Live sources deliver frames at their own pace and are never
    /// throttled by the pipeline.
    fn is_live(&self) -> bool {
        false
    }
}

impl FrameSource for Box<dyn FrameSource> {
    fn next_frame(&mut self) -> Result<Option<PixelBuffer>> {
        (**self).next_frame()
    }

    fn nominal_fps(&self) -> Option<f64> {
        (**self).nominal_fps()
    }

    fn is_live(&self) -> bool {
        (**self).is_live()
    }
}

/// `.pgm` / `.ppm` files of one directory in lexicographic name order.
pub struct PnmDir {
    files: VecDeque<PathBuf>,
    dims: Option<(u32, u32)>,
}

impl PnmDir {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let entries = fs::read_dir(dir).map_err(|e| PipelineError::SourceFailure(format!("{}: {e}", dir.display())))?;
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .and_then(|x| x.to_str())
                        .is_some_and(|x| x.eq_ignore_ascii_case("pgm") || x.eq_ignore_ascii_case("ppm"))
            })
            .collect();
        files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
        if files.is_empty() {
            warn!("{} holds no .pgm/.ppm frames", dir.display());
        }
        Ok(Self {
            files: files.into(),
            dims: None,
        })
    }

    pub fn remaining(&self) -> usize {
        self.files.len()
    }
}

fn check_dims(dims: &mut Option<(u32, u32)>, buf: &PixelBuffer) -> Result<()> {
    let d = (buf.width(), buf.height());
    match *dims {
        None => *dims = Some(d),
        Some(expected) if expected != d => {
            return Err(PipelineError::SourceFailure(format!(
                "frame is {}x{}, session started at {}x{}",
                d.0, d.1, expected.0, expected.1
            )))
        }
        _ => {}
    }
    Ok(())
}

impl FrameSource for PnmDir {
    fn next_frame(&mut self) -> Result<Option<PixelBuffer>> {
        let Some(path) = self.files.pop_front() else {
            return Ok(None);
        };
        let bytes = fs::read(&path).map_err(|e| PipelineError::SourceFailure(format!("{}: {e}", path.display())))?;
        let buf = decode_pnm(&bytes).map_err(|e| PipelineError::SourceFailure(format!("{}: {e}", path.display())))?;
        check_dims(&mut self.dims, &buf)?;
        Ok(Some(buf))
    }
}

/// Handshake of the raw TCP frame protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamHeader {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    pub fps: u32,
}

pub const STREAM_MAGIC: &[u8; 4] = b"FRM1";

impl StreamHeader {
    pub fn frame_len(&self) -> u64 {
        self.width as u64 * self.height as u64 * self.channels as u64
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(STREAM_MAGIC)?;
        for v in [self.width, self.height, self.channels, self.fps] {
            w.write_all(&v.to_be_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut buf = [0u8; 20];
        r.read_exact(&mut buf)
            .map_err(|e| PipelineError::SourceFailure(format!("handshake: {e}")))?;
        if &buf[..4] != STREAM_MAGIC {
            return Err(PipelineError::SourceFailure("handshake: bad magic".into()));
        }
        let word = |i: usize| u32::from_be_bytes(buf[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
        let h = StreamHeader {
            width: word(0),
            height: word(1),
            channels: word(2),
            fps: word(3),
        };
        if h.width == 0 || h.height == 0 || !(h.channels == 1 || h.channels == 3) {
            return Err(PipelineError::SourceFailure(format!("handshake: invalid header {h:?}")));
        }
        Ok(h)
    }
}

/// Client side of the raw TCP frame protocol.
pub struct RawTcp {
    header: StreamHeader,
    reader: BufReader<TcpStream>,
}

impl RawTcp {
    pub fn connect(addr: &str) -> Result<Self> {
        let fail = |reason: String| PipelineError::ConnectFailure {
            addr: addr.to_string(),
            reason,
        };
        let sock = addr
            .to_socket_addrs()
            .map_err(|e| fail(e.to_string()))?
            .next()
            .ok_or_else(|| fail("no address".into()))?;
        let stream = TcpStream::connect_timeout(&sock, Duration::from_secs(5)).map_err(|e| fail(e.to_string()))?;
        let mut reader = BufReader::new(stream);
        let header = StreamHeader::read_from(&mut reader)?;
        Ok(Self { header, reader })
    }

    pub fn header(&self) -> StreamHeader {
        self.header
    }
}

impl FrameSource for RawTcp {
    fn next_frame(&mut self) -> Result<Option<PixelBuffer>> {
        let mut len = [0u8; 8];
        // A clean close between frames ends the stream.
        match self.reader.read(&mut len[..1]) {
            Ok(0) => return Ok(None),
            Ok(_) => {}
            Err(e) => return Err(PipelineError::SourceFailure(e.to_string())),
        }
        self.reader
            .read_exact(&mut len[1..])
            .map_err(|e| PipelineError::SourceFailure(format!("frame length: {e}")))?;
        let len = u64::from_be_bytes(len);
        if len != self.header.frame_len() {
            return Err(PipelineError::SourceFailure(format!(
                "frame payload {len} bytes, expected {}",
                self.header.frame_len()
            )));
        }
        let mut data = vec![0u8; len as usize];
        self.reader
            .read_exact(&mut data)
            .map_err(|e| PipelineError::SourceFailure(format!("frame payload: {e}")))?;
        let buf = PixelBuffer::new(self.header.width, self.header.height, self.header.channels as u8, data)
            .map_err(|e| PipelineError::SourceFailure(e.to_string()))?;
        Ok(Some(buf))
    }

    fn nominal_fps(&self) -> Option<f64> {
        (self.header.fps > 0).then_some(self.header.fps as f64)
    }

    fn is_live(&self) -> bool {
        true
    }
}

/// Server side of the raw TCP frame protocol.
pub struct FrameEmitter {
    header: StreamHeader,
    out: BufWriter<TcpStream>,
}

impl FrameEmitter {
    /// Waits for one client on `listener` and sends the handshake.
    pub fn accept(listener: &TcpListener, header: StreamHeader) -> std::io::Result<Self> {
        let (stream, _) = listener.accept()?;
        let mut out = BufWriter::new(stream);
        header.write_to(&mut out)?;
        out.flush()?;
        Ok(Self { header, out })
    }

    pub fn send(&mut self, frame: &PixelBuffer) -> std::io::Result<()> {
        let h = &self.header;
        if (frame.width(), frame.height(), frame.channels() as u32) != (h.width, h.height, h.channels) {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "frame does not match handshake"));
        }
        self.out.write_all(&(frame.data().len() as u64).to_be_bytes())?;
        self.out.write_all(frame.data())?;
        self.out.flush()
    }
}

/// Frames held in memory, mostly for tests and examples.
pub struct MemorySource {
    frames: VecDeque<PixelBuffer>,
}

impl MemorySource {
    pub fn new(frames: impl IntoIterator<Item = GrayImage>) -> Self {
        Self {
            frames: frames.into_iter().map(PixelBuffer::from).collect(),
        }
    }
}

impl FrameSource for MemorySource {
    fn next_frame(&mut self) -> Result<Option<PixelBuffer>> {
        Ok(self.frames.pop_front())
    }
}

/// Frames produced on demand by a closure of the frame index.
pub struct GeneratedSource<F> {
    count: usize,
    next: usize,
    make: F,
}

impl<F: FnMut(usize) -> GrayImage + Send> GeneratedSource<F> {
    pub fn new(count: usize, make: F) -> Self {
        Self { count, next: 0, make }
    }
}

impl<F: FnMut(usize) -> GrayImage + Send> FrameSource for GeneratedSource<F> {
    fn next_frame(&mut self) -> Result<Option<PixelBuffer>> {
        if self.next >= self.count {
            return Ok(None);
        }
        let img = (self.make)(self.next);
        self.next += 1;
        Ok(Some(img.into()))
    }
}

/// Opens `pnmdir:<path>` or `tcp:<host>:<port>`.
pub fn open_source(uri: &str) -> Result<Box<dyn FrameSource>> {
    if let Some(dir) = uri.strip_prefix("pnmdir:") {
        return Ok(Box::new(PnmDir::open(dir)?));
    }
    if let Some(addr) = uri.strip_prefix("tcp:") {
        if addr.rsplit_once(':').is_none_or(|(h, p)| h.is_empty() || p.parse::<u16>().is_err()) {
            return Err(PipelineError::BadUri(uri.to_string()));
        }
        return Ok(Box::new(RawTcp::connect(addr)?));
    }
    Err(PipelineError::BadUri(uri.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Gender,
    Footfall,
}

/// Parsed run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeConfig {
    pub mode: Mode,
    pub source: Option<String>,
    /// Offer rate; 0 disables pacing and never drops frames.
    pub fps: f64,
    pub grid_n: usize,
    pub cascade: Option<PathBuf>,
    pub fisher: Option<PathBuf>,
    pub svm: Option<PathBuf>,
    pub scale_step: Option<f64>,
    pub stride: Option<u32>,
    pub min_score: Option<f64>,
    pub iou: Option<f64>,
    pub gate: Option<f64>,
    pub max_missed: u32,
    pub log_path: Option<PathBuf>,
    /// Timestamp of frame 0 in ms; frames are then spaced by the offer
    /// rate. Without it events carry wall-clock time.
    pub start_ts: Option<i64>,
    pub lines: Vec<CountingLine>,
}

impl ModeConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            source: None,
            fps: 15.0,
            grid_n: 16,
            cascade: None,
            fisher: None,
            svm: None,
            scale_step: None,
            stride: None,
            min_score: None,
            iou: None,
            gate: None,
            max_missed: 5,
            log_path: None,
            start_ts: None,
            lines: Vec::new(),
        }
    }

    /// Parses `key value` lines and `LINE` entries. Relative paths resolve
    /// against `base`; a `pnmdir:` source path does too.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = ModeConfig::new(Mode::Footfall);
        let mut mode_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| PipelineError::Config { line: i + 1, message };
            if line.starts_with("LINE") {
                cfg.lines.push(CountingLine::parse(line).map_err(|e| err(e.to_string()))?);
                continue;
            }
            let (key, value) = line
                .split_once(char::is_whitespace)
                .map(|(k, v)| (k, v.trim()))
                .ok_or_else(|| err(format!("expected `key value`: {line:?}")))?;
            let num = |v: &str| v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| err(format!("bad number for {key}: {v:?}")));
            let int = |v: &str| v.parse::<u64>().map_err(|_| err(format!("bad integer for {key}: {v:?}")));
            let path = |v: &str| base.join(v);
            match key {
                "mode" => {
                    mode_seen = true;
                    cfg.mode = match value {
                        "gender" => Mode::Gender,
                        "footfall" => Mode::Footfall,
                        _ => return Err(err(format!("mode must be gender or footfall, got {value:?}"))),
                    }
                }
                "source" => {
                    cfg.source = Some(match value.strip_prefix("pnmdir:") {
                        Some(dir) => format!("pnmdir:{}", path(dir).display()),
                        None => value.to_string(),
                    })
                }
                "fps" => {
                    cfg.fps = num(value)?;
                    if cfg.fps < 0.0 {
                        return Err(err("fps must be >= 0".into()));
                    }
                }
                "grid_n" => cfg.grid_n = int(value)?.max(1) as usize,
                "cascade" => cfg.cascade = Some(path(value)),
                "fisher" => cfg.fisher = Some(path(value)),
                "svm" => cfg.svm = Some(path(value)),
                "scale_step" => cfg.scale_step = Some(num(value)?),
                "stride" => cfg.stride = Some(int(value)?.max(1) as u32),
                "min_score" => cfg.min_score = Some(num(value)?),
                "iou" => cfg.iou = Some(num(value)?),
                "gate" => cfg.gate = Some(num(value)?),
                "max_missed" => cfg.max_missed = int(value)? as u32,
                "log_path" => cfg.log_path = Some(path(value)),
                "start_ts" => cfg.start_ts = Some(value.parse().map_err(|_| err(format!("bad start_ts {value:?}")))?),
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        if !mode_seen {
            return Err(PipelineError::MissingSetting("mode".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        ModeConfig::parse(&text, base)
    }

    pub fn hog_params(&self) -> DetectParams {
        let d = DetectParams::default();
        DetectParams {
            scale_step: self.scale_step.unwrap_or(d.scale_step),
            stride: self.stride.unwrap_or(d.stride),
            min_score: self.min_score.unwrap_or(d.min_score),
            iou_thresh: self.iou.unwrap_or(d.iou_thresh),
        }
    }

    pub fn face_scan(&self) -> FaceScan {
        let d = FaceScan::default();
        FaceScan {
            scale_factor: self.scale_step.unwrap_or(d.scale_factor),
            stride: self.stride.unwrap_or(d.stride),
            iou_thresh: self.iou.unwrap_or(d.iou_thresh),
        }
    }

    /// Where the heat grid is written next to the log.
    pub fn grid_path(&self) -> Option<PathBuf> {
        self.log_path.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".grid");
            PathBuf::from(s)
        })
    }
}

/// Receives events in emission order.
pub trait EventSink {
    fn emit(&mut self, e: &Event) -> Result<()>;
}

impl EventSink for EventLog {
    fn emit(&mut self, e: &Event) -> Result<()> {
        self.append(e).map_err(PipelineError::from)
    }
}

impl EventSink for Vec<Event> {
    fn emit(&mut self, e: &Event) -> Result<()> {
        self.push(e.clone());
        Ok(())
    }
}

/// Mean latency per stage, in milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageLatency {
    pub decode: f64,
    pub detect: f64,
    pub classify: f64,
    pub analytics: f64,
    pub log: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineStats {
    pub frames_processed: u64,
    pub frames_dropped: u64,
    pub avg_fps: f64,
    /// Seconds from the first offered frame to the end of processing.
    pub active_secs: f64,
    pub latency_ms: StageLatency,
    /// Longest single-frame processing time.
    pub max_frame_ms: f64,
}

impl PipelineStats {
    pub fn frames_offered(&self) -> u64 {
        self.frames_processed + self.frames_dropped
    }

    pub fn summary(&self) -> String {
        let l = &self.latency_ms;
        format!(
            "frames={} dropped={} fps={:.2} decode_ms={:.2} detect_ms={:.2} classify_ms={:.2} analytics_ms={:.2} log_ms={:.2}",
            self.frames_processed, self.frames_dropped, self.avg_fps, l.decode, l.detect, l.classify, l.analytics, l.log
        )
    }
}

/// Everything a run produced besides its events.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub stats: PipelineStats,
    pub grid: Option<HeatGrid>,
    /// Per line: name, in, out.
    pub footfall: Vec<(String, u64, u64)>,
    pub genders: GenderTally,
    /// Person detections emitted over the run.
    pub persons: u64,
    pub faces: u64,
    /// Set when the source failed mid-run; stats cover the frames before.
    pub source_error: Option<String>,
}

enum Models {
    Gender { cascade: Cascade, fisher: FisherModel },
    Footfall { svm: LinearSvm },
}

fn load_failure(path: &Path, reason: impl ToString) -> PipelineError {
    PipelineError::ModelLoadFailure {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a PathBuf> {
    p.as_ref()
        .ok_or_else(|| PipelineError::MissingSetting(format!("{key} model path is required in this mode")))
}

/// A configured pipeline with its models loaded.
pub struct Pipeline {
    cfg: ModeConfig,
    models: Models,
}

struct Slot {
    frame: Option<(usize, PixelBuffer)>,
    done: bool,
    offered: u64,
    dropped: u64,
    decode_ms: f64,
    first_offer: Option<Instant>,
    error: Option<String>,
}

impl Pipeline {
    pub fn new(cfg: ModeConfig) -> Result<Self> {
        let models = match cfg.mode {
            Mode::Gender => {
                let cp = required(&cfg.cascade, "cascade")?;
                let fp = required(&cfg.fisher, "fisher")?;
                Models::Gender {
                    cascade: Cascade::load(cp).map_err(|e| load_failure(cp, e))?,
                    fisher: FisherModel::load(fp).map_err(|e| load_failure(fp, e))?,
                }
            }
            Mode::Footfall => {
                let sp = required(&cfg.svm, "svm")?;
                Models::Footfall {
                    svm: LinearSvm::load(sp).map_err(|e| load_failure(sp, e))?,
                }
            }
        };
        Ok(Self { cfg, models })
    }

    /// Builds a pipeline from models already in memory.
    pub fn footfall(cfg: ModeConfig, svm: LinearSvm) -> Self {
        Self {
            cfg: ModeConfig { mode: Mode::Footfall, ..cfg },
            models: Models::Footfall { svm },
        }
    }

    pub fn gender(cfg: ModeConfig, cascade: Cascade, fisher: FisherModel) -> Self {
        Self {
            cfg: ModeConfig { mode: Mode::Gender, ..cfg },
            models: Models::Gender { cascade, fisher },
        }
    }

    pub fn config(&self) -> &ModeConfig {
        &self.cfg
    }

    /// Runs until the source is exhausted, fails, or `quit` is set.
    pub fn run<S: FrameSource>(&self, source: S, sinks: &mut [&mut dyn EventSink], quit: &AtomicBool) -> Result<RunOutput> {
        let fps = self.cfg.fps;
        let paced = fps > 0.0 && !source.is_live();
        let lossless = fps == 0.0 && !source.is_live();
        let nominal = source.nominal_fps().or((fps > 0.0).then_some(fps)).unwrap_or(15.0);
        let shared = Arc::new((
            Mutex::new(Slot {
                frame: None,
                done: false,
                offered: 0,
                dropped: 0,
                decode_ms: 0.0,
                first_offer: None,
                error: None,
            }),
            Condvar::new(),
        ));

        let mut state = RunState::new(&self.cfg);
        let mut totals = StageLatency::default();
        let mut processed = 0u64;
        let mut max_frame_ms: f64 = 0.0;
        let mut sink_error = None;

        std::thread::scope(|scope| {
            let acq = shared.clone();
            scope.spawn(move || acquire(source, &acq, quit, paced, lossless, fps));
            let (lock, cv) = &*shared;
            loop {
                let (index, buf) = {
                    let mut slot = lock.lock().expect("slot lock");
                    loop {
                        if let Some(f) = slot.frame.take() {
                            cv.notify_all();
                            break f;
                        }
                        if slot.done || quit.load(Ordering::SeqCst) {
                            drop(slot);
                            return;
                        }
                        slot = cv.wait_timeout(slot, Duration::from_millis(10)).expect("slot lock").0;
                    }
                };
                let started = Instant::now();
                let ts = match self.cfg.start_ts {
                    Some(t0) => t0 + (index as f64 * 1000.0 / nominal).round() as i64,
                    None => wall_ms(),
                };
                match self.process(&buf, ts, &mut state, &mut totals, sinks) {
                    Ok(()) => {}
                    Err(e) => {
                        sink_error = Some(e);
                        quit.store(true, Ordering::SeqCst);
                        cv.notify_all();
                        return;
                    }
                }
                processed += 1;
                max_frame_ms = max_frame_ms.max(started.elapsed().as_secs_f64() * 1e3);
                if processed % (nominal.round().max(1.0) as u64) == 0 {
                    state.persist_grid(&self.cfg);
                }
            }
        });
        if let Some(e) = sink_error {
            return Err(e);
        }
        state.persist_grid(&self.cfg);

        let slot = shared.0.lock().expect("slot lock");
        let active_secs = slot.first_offer.map_or(0.0, |t| t.elapsed().as_secs_f64());
        let n = processed.max(1) as f64;
        let stats = PipelineStats {
            frames_processed: processed,
            // A frame still in the slot when quitting was never processed.
            frames_dropped: slot.offered - processed,
            avg_fps: if active_secs > 0.0 { processed as f64 / active_secs } else { 0.0 },
            active_secs,
            latency_ms: StageLatency {
                decode: slot.decode_ms / (slot.offered.max(1) as f64),
                detect: totals.detect / n,
                classify: totals.classify / n,
                analytics: totals.analytics / n,
                log: totals.log / n,
            },
            max_frame_ms,
        };
        info!("{}", stats.summary());
        Ok(RunOutput {
            stats,
            grid: state.grid,
            footfall: state
                .counters
                .iter()
                .map(|c| (c.line.name.clone(), c.in_count, c.out_count))
                .collect(),
            genders: state.genders,
            persons: state.persons,
            faces: state.faces,
            source_error: slot.error.clone(),
        })
    }

    fn process(
        &self,
        buf: &PixelBuffer,
        ts: i64,
        state: &mut RunState,
        totals: &mut StageLatency,
        sinks: &mut [&mut dyn EventSink],
    ) -> Result<()> {
        let t = Instant::now();
        let gray = to_gray(buf).map_err(|e| PipelineError::SourceFailure(e.to_string()))?;
        let mut events = Vec::new();
        match &self.models {
            Models::Gender { cascade, fisher } => {
                let faces = match detect_faces(&gray, cascade, &self.cfg.face_scan()) {
                    Err(BoostError::ImageTooSmall { .. }) => Vec::new(),
                    r => r.map_err(|e| PipelineError::Detector(e.to_string()))?,
                };
                let t_detect = Instant::now();
                totals.detect += ms(t, t_detect);
                for f in &faces {
                    events.push(Event::new(ts, EventData::Face { rect: f.rect }));
                    let crop = normalize_face(&gray, f.rect);
                    let (label, _) = fisher.predict(&crop).map_err(|e| PipelineError::Detector(e.to_string()))?;
                    state.genders.add(label);
                    events.push(Event::new(ts, EventData::Gender { label: label.to_string() }));
                }
                state.faces += faces.len() as u64;
                totals.classify += ms(t_detect, Instant::now());
            }
            Models::Footfall { svm } => {
                // A frame smaller than one window simply holds nobody.
                let dets = match hogdetect::detect(&gray, svm, &self.cfg.hog_params()) {
                    Err(hogdetect::HogError::ImageTooSmall { .. }) => Vec::new(),
                    r => r.map_err(|e| PipelineError::Detector(e.to_string()))?,
                };
                let t_detect = Instant::now();
                totals.detect += ms(t, t_detect);
                state.footfall(&gray, &dets, ts, &mut events);
                totals.analytics += ms(t_detect, Instant::now());
            }
        }
        let t_log = Instant::now();
        for e in &events {
            for s in sinks.iter_mut() {
                s.emit(e)?;
            }
        }
        totals.log += ms(t_log, Instant::now());
        Ok(())
    }
}

fn ms(a: Instant, b: Instant) -> f64 {
    (b - a).as_secs_f64() * 1e3
}

fn wall_ms() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

/// Analytics state owned by the processing loop.
struct RunState {
    grid: Option<HeatGrid>,
    grid_n: usize,
    tracker: Option<Tracker>,
    gate: Option<f64>,
    max_missed: u32,
    counters: Vec<FootfallCounter>,
    genders: GenderTally,
    persons: u64,
    faces: u64,
    last_ts: i64,
}

impl RunState {
    fn new(cfg: &ModeConfig) -> Self {
        Self {
            grid: None,
            grid_n: cfg.grid_n,
            tracker: None,
            gate: cfg.gate,
            max_missed: cfg.max_missed,
            counters: cfg.lines.iter().cloned().map(FootfallCounter::new).collect(),
            genders: GenderTally::default(),
            persons: 0,
            faces: 0,
            last_ts: i64::MIN,
        }
    }

    fn footfall(&mut self, frame: &GrayImage, dets: &[Detection], ts: i64, events: &mut Vec<Event>) {
        let ts = ts.max(self.last_ts);
        self.last_ts = ts;
        let (w, h) = (frame.width(), frame.height());
        let grid = self
            .grid
            .get_or_insert_with(|| HeatGrid::new(self.grid_n, w, h).expect("nonzero grid"));
        let tracker = self
            .tracker
            .get_or_insert_with(|| Tracker::new(self.gate.unwrap_or_else(|| default_gate(w, h)), self.max_missed));
        let step = tracker.step(dets);
        grid.update(dets);
        self.persons += dets.len() as u64;
        for d in dets {
            events.push(Event::new(ts, EventData::Person { rect: d.rect }));
        }
        for a in step.assignments.iter().filter(|a| !a.spawned) {
            let track = tracker.track(a.track_id).expect("matched track is live");
            let mut crossed = false;
            for c in &mut self.counters {
                if let Ok(Some(dir)) = c.observe(track) {
                    debug!("track {} crossed {} {}", track.id, c.line.name, dir);
                    events.push(Event::new(
                        ts,
                        EventData::Crossing {
                            line: c.line.name.clone(),
                            direction: dir,
                        },
                    ));
                    crossed = true;
                }
            }
            if crossed {
                let value: i64 = self
                    .counters
                    .iter()
                    .map(|c| c.in_count as i64 - c.out_count as i64)
                    .sum();
                events.push(Event::new(ts, EventData::Occupancy { value }));
            }
        }
        for id in &step.retired {
            self.counters.iter_mut().for_each(|c| c.forget(*id));
        }
    }

    fn persist_grid(&self, cfg: &ModeConfig) {
        let (Some(grid), Some(path)) = (&self.grid, cfg.grid_path()) else {
            return;
        };
        let tmp = path.with_extension("grid.tmp");
        let res = fs::write(&tmp, grid.to_text()).and_then(|_| fs::rename(&tmp, &path));
        if let Err(e) = res {
            warn!("cannot write {}: {e}", path.display());
        }
    }
}

/// Acquisition side: pull frames, pace them, and hand them over.
fn acquire<S: FrameSource>(
    mut source: S,
    shared: &(Mutex<Slot>, Condvar),
    quit: &AtomicBool,
    paced: bool,
    lossless: bool,
    fps: f64,
) {
    let (lock, cv) = shared;
    let mut start: Option<Instant> = None;
    let mut index = 0usize;
    let finish = |err: Option<String>| {
        let mut slot = lock.lock().expect("slot lock");
        slot.done = true;
        if err.is_some() {
            slot.error = err;
        }
        cv.notify_all();
    };
    loop {
        if quit.load(Ordering::SeqCst) {
            return finish(None);
        }
        let t = Instant::now();
        let buf = match source.next_frame() {
            Ok(Some(b)) => b,
            Ok(None) => return finish(None),
            Err(e) => {
                warn!("source failed: {e}");
                return finish(Some(e.to_string()));
            }
        };
        let decode = t.elapsed().as_secs_f64() * 1e3;
        if paced {
            let t0 = *start.get_or_insert_with(Instant::now);
            let due = t0 + Duration::from_secs_f64(index as f64 / fps);
            while Instant::now() < due {
                if quit.load(Ordering::SeqCst) {
                    return finish(None);
                }
                std::thread::sleep((due - Instant::now()).min(Duration::from_millis(5)));
            }
        }
        let mut slot = lock.lock().expect("slot lock");
        if lossless {
            while slot.frame.is_some() && !quit.load(Ordering::SeqCst) {
                slot = cv.wait_timeout(slot, Duration::from_millis(10)).expect("slot lock").0;
            }
        }
        slot.first_offer.get_or_insert_with(Instant::now);
        slot.offered += 1;
        slot.decode_ms += decode;
        if slot.frame.replace((index, buf)).is_some() {
            slot.dropped += 1;
        }
        cv.notify_all();
        drop(slot);
        index += 1;
    }
}
