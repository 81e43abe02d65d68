mod common;

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use common::{fixture_dir, http_get};
use crowdlens::imgcore::{decode_pnm, encode_pnm, GrayImage};
use crowdlens::synth::{face_crop, face_training_set, person_training_set, Gender};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crowdlens"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).stdin(Stdio::null()).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn write_pgms(dir: &Path, imgs: &[GrayImage]) {
    fs::create_dir_all(dir).unwrap();
    for (i, img) in imgs.iter().enumerate() {
        fs::write(dir.join(format!("{i:04}.pgm")), encode_pnm(&img.clone().into())).unwrap();
    }
}

/// Runs the walker fixture into a fresh log; returns (tempdir, log path, stdout).
fn fixture_run(fps: &str) -> (tempfile::TempDir, PathBuf, String) {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixture_dir();
    let log = tmp.path().join("events.log");
    let cfg = format!(
        "mode footfall\nsource pnmdir:{}\nsvm {}\nfps {fps}\ngrid_n 8\nstart_ts 1709647200000\nlog_path {}\nLINE door 160 0 160 240\n",
        fx.join("frames").display(),
        fx.join("person.svm").display(),
        log.display()
    );
    let cfg_path = tmp.path().join("run.cfg");
    fs::write(&cfg_path, cfg).unwrap();
    let out = run(&["run", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", text(&out.stderr));
    (tmp, log, text(&out.stdout))
}

#[test]
fn help_and_usage_exit_codes() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("train-cascade"));

    let out = run(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(text(&out.stderr).trim().lines().count(), 1, "{}", text(&out.stderr));

    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["report", "--log", "x", "--format", "xml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_fixture_and_report() {
    let (_tmp, log, stdout) = fixture_run("15");
    assert!(stdout.contains("fps="), "{stdout}");
    assert!(stdout.contains("door.in=2 door.out=0"), "{stdout}");
    assert!(log.exists());
    assert!(PathBuf::from(format!("{}.grid", log.display())).exists());

    let out = run(&["report", "--log", log.to_str().unwrap(), "--format", "tsv"]);
    assert_eq!(out.status.code(), Some(0));
    let tsv = text(&out.stdout);
    assert!(tsv.starts_with("hour\tin\n"), "{tsv}");
    assert!(tsv.lines().any(|l| l == "14\t2"), "{tsv}");

    let out = run(&["report", "--log", log.to_str().unwrap(), "--bucket", "dow", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());

    // One hour west of UTC shifts the bucket back.
    let out = run(&["report", "--log", log.to_str().unwrap(), "--tz", "-60", "--format", "tsv"]);
    assert!(text(&out.stdout).lines().any(|l| l == "13\t2"));
}

#[test]
fn render_heatmap_matches_frame_size() {
    let (tmp, log, _) = fixture_run("0");
    let heat = tmp.path().join("heat.ppm");
    let out = run(&["render-heatmap", "--log", log.to_str().unwrap(), "--out", heat.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let buf = decode_pnm(&fs::read(&heat).unwrap()).unwrap();
    assert_eq!((buf.width(), buf.height(), buf.channels()), (320, 240, 3));

    let frame = fixture_dir().join("frames/frame_000.pgm");
    let over = tmp.path().join("over.ppm");
    let out = run(&[
        "render-heatmap",
        "--log",
        log.to_str().unwrap(),
        "--out",
        over.to_str().unwrap(),
        "--frame",
        frame.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert_eq!(decode_pnm(&fs::read(&over).unwrap()).unwrap().width(), 320);
}

#[test]
fn missing_model_exits_one_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("g.cfg");
    fs::write(&cfg, "mode gender\nsource pnmdir:.\ncascade nowhere/face.cascade\nfisher nowhere/g.fisher\n").unwrap();
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("face.cascade"), "{}", text(&out.stderr));

    fs::write(&cfg, "mode footfall\nsource tcp:127.0.0.1:1\nsvm nowhere.svm\nbogus 3\n").unwrap();
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("bogus"));
}

#[test]
fn source_failures_exit_one() {
    let cfg = fixture_dir().join("run.cfg");
    let out = run(&["run", "--config", cfg.to_str().unwrap(), "--source", "ftp://x"]);
    assert_eq!(out.status.code(), Some(1));
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let out = run(&["run", "--config", cfg.to_str().unwrap(), "--source", &format!("tcp:127.0.0.1:{port}")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains(&port.to_string()));
}

#[test]
fn train_hog_writes_a_model() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (pos, neg) = person_training_set(&mut rng, 40, 40);
    write_pgms(&tmp.path().join("pos"), &pos);
    write_pgms(&tmp.path().join("neg"), &neg);
    let model = tmp.path().join("p.svm");
    let out = run(&[
        "train-hog",
        "--pos",
        tmp.path().join("pos").to_str().unwrap(),
        "--neg",
        tmp.path().join("neg").to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--epochs",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("training_error="));
    let svm = crowdlens::hogdetect::LinearSvm::load(&model).unwrap();
    assert_eq!(svm.weights.len(), crowdlens::hogdetect::DESCRIPTOR_LEN);
}

#[test]
fn train_fisher_reports_holdout() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let data = tmp.path().join("faces");
    let crops: Vec<GrayImage> = (0..60).map(|i| face_crop(&mut rng, [Gender::Male, Gender::Female][i % 2])).collect();
    write_pgms(&data, &crops);
    let labels: String = (0..60).map(|i| format!("{i:04}.pgm {}\n", ["male", "female"][i % 2])).collect();
    fs::write(tmp.path().join("labels.txt"), labels).unwrap();
    let model = tmp.path().join("g.fisher");
    let out = run(&[
        "train-fisher",
        "--data",
        data.to_str().unwrap(),
        "--labels",
        tmp.path().join("labels.txt").to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--holdout",
        "0.25",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let s = text(&out.stdout);
    assert!(s.contains("classes=2 samples=45"), "{s}");
    let acc: f64 = s.split("holdout_accuracy=").nth(1).unwrap().trim().parse().unwrap();
    assert!(acc >= 0.9, "{s}");
    assert!(model.exists());
}

#[test]
fn train_cascade_writes_a_model() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (pos, neg) = face_training_set(&mut rng, 60, 120);
    write_pgms(&tmp.path().join("pos"), &pos);
    write_pgms(&tmp.path().join("neg"), &neg);
    let model = tmp.path().join("f.cascade");
    let out = run(&[
        "train-cascade",
        "--pos",
        tmp.path().join("pos").to_str().unwrap(),
        "--neg",
        tmp.path().join("neg").to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--max-stages",
        "3",
        "--max-rounds",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).starts_with("stages="));
    let c = crowdlens::boostcascade::Cascade::load(&model).unwrap();
    assert!(!c.stages.is_empty() && c.stages.len() <= 3);
}

#[test]
fn serve_answers_stats_and_heatmap() {
    let (_tmp, log, _) = fixture_run("0");
    let mut child = bin()
        .args(["serve", "--log", log.to_str().unwrap(), "--port", "0"])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut first = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut first).unwrap();
    let addr: std::net::SocketAddr = first.trim().trim_start_matches("listening on http://").parse().unwrap();

    let (status, body) = http_get(addr, "/stats");
    assert_eq!(status, 200);
    let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["hourly"][14], 2);
    let (status, body) = http_get(addr, "/heatmap.ppm");
    assert_eq!(status, 200);
    assert_eq!(decode_pnm(&body).unwrap().width(), 320);
    let (status, _) = http_get(addr, "/nope");
    assert_eq!(status, 404);
    child.kill().unwrap();
    child.wait().unwrap();
}
