//! Command-line front end. `run_cli` returns the process exit code:
//! 0 on success, 1 on runtime failure, 2 on usage errors.

use std::error::Error;
use std::fs;
use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::HeatGrid;
use crate::boostcascade::{mine_negatives, train_cascade, train_cascade_with, Cascade, CascadeParams, FaceScan};
use crate::eventstore::{self, Bucketing, EventLog, StatsConfig};
use crate::fisher;
use crate::hogdetect::{self, SvmParams};
use crate::imgcore::{decode_pnm, encode_pnm, resize, to_gray, GrayImage, Rect};
use crate::pipeline::{open_source, EventSink, ModeConfig, Pipeline};
use crate::synth::{PERSON_H, PERSON_W};

type CliResult<T = ()> = Result<T, Box<dyn Error>>;

#[derive(Parser, Debug)]
#[command(name = "crowdlens", version, about = "People analytics on frame streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a boosted Haar cascade from 24x24 face and non-face windows.
    TrainCascade {
        #[arg(long)]
        pos: PathBuf,
        #[arg(long)]
        neg: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        max_stages: usize,
        #[arg(long, default_value_t = 50)]
        max_rounds: usize,
        /// Random windows drawn from each negative image larger than 24x24.
        #[arg(long, default_value_t = 4)]
        neg_windows: usize,
    },
    /// Train a Fisherfaces classifier from labelled face crops.
    TrainFisher {
        #[arg(long)]
        data: PathBuf,
        /// Lines of `<file> <label>`, file names relative to --data.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of samples held out to report accuracy.
        #[arg(long, default_value_t = 0.0)]
        holdout: f64,
    },
    /// Train a linear SVM on HOG descriptors of 64x128 person windows.
    TrainHog {
        #[arg(long)]
        pos: PathBuf,
        #[arg(long)]
        neg: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        lambda: f64,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        /// Random windows drawn from each negative image larger than 64x128.
        #[arg(long, default_value_t = 4)]
        neg_windows: usize,
    },
    /// Run a pipeline described by a config file until the source ends or Ctrl-C.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's source.
        #[arg(long)]
        source: Option<String>,
    },
    /// Aggregate an event log.
    Report {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "hour")]
        bucket: String,
        /// Local time offset from UTC in minutes.
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        tz: i32,
        /// Inclusive lower bound, ms since the epoch.
        #[arg(long, allow_hyphen_values = true)]
        from: Option<i64>,
        /// Exclusive upper bound, ms since the epoch.
        #[arg(long, allow_hyphen_values = true)]
        to: Option<i64>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Render a heat grid as a P6 image.
    RenderHeatmap {
        /// Event log whose `.grid` companion is rendered.
        #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
        log: Option<PathBuf>,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Tint this frame instead of drawing plain blocks.
        #[arg(long)]
        frame: Option<PathBuf>,
    },
    /// Serve /stats and /heatmap.ppm over HTTP.
    Serve {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        grid: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Tsv,
    Json,
}

/// Parses `argv` (program name first). Usage errors print one line and
/// yield `Err(2)`; help and version print and yield `Err(0)`.
pub fn parse_args<I, T>(argv: I) -> Result<Cli, i32>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => Ok(cli),
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            Err(0)
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("usage error").trim();
            eprintln!("{line}");
            Err(2)
        }
    }
}

/// Full entry point; `quit` is raised by Ctrl-C in the binary.
pub fn run_cli<I, T>(argv: I, quit: Arc<AtomicBool>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match parse_args(argv) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match execute(cli.command, &quit) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cmd: Command, quit: &Arc<AtomicBool>) -> CliResult {
    match cmd {
        Command::TrainCascade {
            pos,
            neg,
            out,
            seed,
            max_stages,
            max_rounds,
            neg_windows,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pos: Vec<GrayImage> = load_dir(&pos)?.into_iter().map(|i| resize(&i, 24, 24)).collect();
            let neg_images = load_dir(&neg)?;
            // Face-free images larger than a window double as mining scenes.
            let scenes: Vec<(GrayImage, Vec<Rect>)> = neg_images
                .iter()
                .filter(|i| i.width() > 24 || i.height() > 24)
                .map(|i| (i.clone(), Vec::new()))
                .collect();
            let neg = sample_windows(neg_images, 24, 24, neg_windows, &mut rng);
            info!("training cascade on {} positives, {} negatives", pos.len(), neg.len());
            let params = CascadeParams {
                max_stages,
                max_rounds_per_stage: max_rounds,
                ..CascadeParams::default()
            };
            let scan = FaceScan::default();
            let mut refill = |partial: &Cascade, n: usize| mine_negatives(partial, &scenes, &scan, n);
            let (cascade, reports) = if scenes.is_empty() {
                train_cascade(&pos, &neg, &params)?
            } else {
                train_cascade_with(&pos, &neg, &params, Some(&mut refill))?
            };
            for (i, r) in reports.iter().enumerate() {
                info!("stage {i}: {r:?}");
            }
            cascade.save(&out)?;
            println!("stages={} features={} out={}", cascade.stages.len(), reports.iter().map(|r| r.rounds).sum::<usize>(), out.display());
        }
        Command::TrainFisher {
            data,
            labels,
            out,
            seed,
            holdout,
        } => {
            if !(0.0..1.0).contains(&holdout) {
                return Err("--holdout must be in [0, 1)".into());
            }
            let mut samples = read_labelled(&data, &labels)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Fisher-Yates with the seeded generator.
            for i in (1..samples.len()).rev() {
                samples.swap(i, rng.gen_range(0..=i));
            }
            let n_test = (samples.len() as f64 * holdout).floor() as usize;
            let (test, train) = samples.split_at(n_test);
            let imgs: Vec<GrayImage> = train.iter().map(|s| s.0.clone()).collect();
            let names: Vec<&str> = train.iter().map(|s| s.1.as_str()).collect();
            let (xc, cv) = fisher::build_matrix(&imgs, &names)?;
            let model = fisher::train(&xc, &cv)?;
            model.save(&out)?;
            let mut line = format!("classes={} samples={} out={}", model.names.len(), train.len(), out.display());
            if !test.is_empty() {
                let mut hits = 0usize;
                for (img, label) in test {
                    if model.predict(img)?.0 == label {
                        hits += 1;
                    }
                }
                line.push_str(&format!(" holdout_accuracy={:.4}", hits as f64 / test.len() as f64));
            }
            println!("{line}");
        }
        Command::TrainHog {
            pos,
            neg,
            out,
            seed,
            lambda,
            epochs,
            neg_windows,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pos: Vec<GrayImage> = load_dir(&pos)?
                .into_iter()
                .map(|i| resize(&i, PERSON_W, PERSON_H))
                .collect();
            let neg = sample_windows(load_dir(&neg)?, PERSON_W, PERSON_H, neg_windows, &mut rng);
            info!("training svm on {} positives, {} negatives", pos.len(), neg.len());
            let (xs, ys) = hogdetect::training_descriptors(&pos, &neg)?;
            let svm = hogdetect::svm_train(&xs, &ys, SvmParams { lambda, epochs, seed })?;
            svm.save(&out)?;
            let errors = xs
                .iter()
                .zip(&ys)
                .filter(|(x, y)| svm.classify(x) != **y)
                .count();
            println!(
                "objective={:.6} training_error={:.4} out={}",
                svm.objective(&xs, &ys),
                errors as f64 / xs.len() as f64,
                out.display()
            );
        }
        Command::Run { config, source } => {
            let mut cfg = ModeConfig::load(&config)?;
            if source.is_some() {
                cfg.source = source;
            }
            let uri = cfg.source.clone().ok_or("config has no source")?;
            let pipeline = Pipeline::new(cfg)?;
            let src = open_source(&uri)?;
            watch_stdin_for_quit(quit.clone());
            let mut log = match &pipeline.config().log_path {
                Some(p) => Some(EventLog::open(p)?),
                None => None,
            };
            let mut sinks: Vec<&mut dyn EventSink> = Vec::new();
            if let Some(l) = log.as_mut() {
                sinks.push(l);
            }
            let out = pipeline.run(src, &mut sinks, quit)?;
            let mut line = out.stats.summary();
            for (name, i, o) in &out.footfall {
                line.push_str(&format!(" {name}.in={i} {name}.out={o}"));
            }
            for (label, n) in out.genders.counts() {
                line.push_str(&format!(" {label}={n}"));
            }
            println!("{line}");
            if let Some(e) = out.source_error {
                return Err(format!("source failed mid-run: {e}").into());
            }
        }
        Command::Report {
            log,
            bucket,
            tz,
            from,
            to,
            format,
        } => {
            let bucketing: Bucketing = bucket.parse()?;
            let loaded = eventstore::load(&log, from.unwrap_or(i64::MIN)..to.unwrap_or(i64::MAX))?;
            for w in &loaded.warnings {
                warn!("{}: line {}: {}", log.display(), w.line, w.message);
            }
            let r = eventstore::report(&loaded.events, bucketing, tz);
            let text = match format {
                Format::Table => r.to_table(),
                Format::Tsv => r.to_tsv(),
                Format::Json => r.to_json() + "\n",
            };
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
        Command::RenderHeatmap { log, grid, out, frame } => {
            let grid_path = match (log, grid) {
                (_, Some(g)) => g,
                (Some(l), None) => grid_companion(&l),
                (None, None) => unreachable!("clap requires one of --log/--grid"),
            };
            let text = fs::read_to_string(&grid_path).map_err(|e| format!("{}: {e}", grid_path.display()))?;
            let grid = HeatGrid::from_text(&text)?;
            let img = match frame {
                Some(f) => {
                    let buf = decode_pnm(&fs::read(&f).map_err(|e| format!("{}: {e}", f.display()))?)?;
                    grid.overlay(&to_gray(&buf)?)
                }
                None => grid.render_frame_sized(),
            };
            fs::write(&out, encode_pnm(&img)).map_err(|e| format!("{}: {e}", out.display()))?;
            println!("{}x{} {}", img.width(), img.height(), out.display());
        }
        Command::Serve { log, port, host, grid } => {
            let addr: SocketAddr = format!("{host}:{port}").parse()?;
            let grid = grid.or_else(|| Some(grid_companion(&log)));
            let server = eventstore::serve_stats(StatsConfig { log, grid, addr })?;
            println!("listening on http://{}", server.addr());
            while !quit.load(Ordering::SeqCst) {
                std::thread::sleep(std::time::Duration::from_millis(100));
            }
            server.shutdown();
        }
    }
    Ok(())
}

fn grid_companion(log: &Path) -> PathBuf {
    let mut s = log.as_os_str().to_os_string();
    s.push(".grid");
    PathBuf::from(s)
}

/// A `q` line on standard input raises the quit flag.
fn watch_stdin_for_quit(quit: Arc<AtomicBool>) {
    std::thread::spawn(move || {
        let stdin = std::io::stdin();
        for line in stdin.lock().lines() {
            match line {
                Ok(l) if l.trim() == "q" => {
                    quit.store(true, Ordering::SeqCst);
                    return;
                }
                Ok(_) => {}
                Err(_) => return,
            }
        }
    });
}

/// Every `.pgm`/`.ppm` in `dir`, in name order, as grayscale.
pub fn load_dir(dir: &Path) -> CliResult<Vec<GrayImage>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|x| x.to_str()), Some("pgm" | "ppm")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(format!("{} holds no .pgm/.ppm images", dir.display()).into());
    }
    paths.iter().map(|p| read_gray(p)).collect()
}

fn read_gray(p: &Path) -> CliResult<GrayImage> {
    let bytes = fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?;
    let buf = decode_pnm(&bytes).map_err(|e| format!("{}: {e}", p.display()))?;
    Ok(to_gray(&buf)?)
}

fn read_labelled(data: &Path, labels: &Path) -> CliResult<Vec<(GrayImage, String)>> {
    let text = fs::read_to_string(labels).map_err(|e| format!("{}: {e}", labels.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(file), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("{} line {}: expected `<file> <label>`", labels.display(), i + 1).into());
        };
        out.push((read_gray(&data.join(file))?, label.to_string()));
    }
    Ok(out)
}

/// Negatives at window size: exact-size images pass through, larger ones
/// contribute `per_image` random crops, smaller ones are resized.
fn sample_windows(images: Vec<GrayImage>, w: u32, h: u32, per_image: usize, rng: &mut impl Rng) -> Vec<GrayImage> {
    let mut out = Vec::new();
    for img in images {
        if img.width() == w && img.height() == h {
            out.push(img);
        } else if img.width() >= w && img.height() >= h {
            for _ in 0..per_image.max(1) {
                let x = rng.gen_range(0..=img.width() - w);
                let y = rng.gen_range(0..=img.height() - h);
                out.push(img.crop(Rect::new(x, y, w, h)).expect("window inside image"));
            }
        } else {
            out.push(resize(&img, w, h));
        }
    }
    out
}
