use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn lfcodec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfcodec"))
        .args(args)
        .output()
        .expect("spawn lfcodec")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, angular: &str, spatial: &str) -> String {
    let out = lfcodec(&["synth", "--out-dir", p(dir), "--angular", angular, "--spatial", spatial, "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    p(&dir.join("manifest.txt")).to_string()
}

const FAST: [&str; 2] = ["--set", "solver.max_iterations=40"];

#[test]
fn help_exits_zero_for_every_subcommand() {
    for sub in [
        "encode",
        "decode",
        "optimize-layers",
        "render-view",
        "train-dbn",
        "sweep",
        "bd",
        "synth",
        "info",
    ] {
        let out = lfcodec(&[sub, "--help"]);
        assert_eq!(code(&out), 0, "{sub}");
        assert!(stdout(&out).contains("Usage"), "{sub}");
    }
    assert_eq!(code(&lfcodec(&["--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&lfcodec(&[])), 1);
    assert_eq!(code(&lfcodec(&["bogus"])), 1);
    assert_eq!(code(&lfcodec(&["encode", "--out", "x.lflc"])), 1);
    let dir = TempDir::new().unwrap();
    let manifest = synth(dir.path(), "3,3", "16,16");
    let out = lfcodec(&["encode", "--manifest", &manifest, "--lossless", "--out", "x", "--set", "no.such=1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("no.such"));
}

#[test]
fn missing_manifest_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.txt");
    let out_path = dir.path().join("x.lflc");
    let out = lfcodec(&["encode", "--manifest", p(&missing), "--lossless", "--out", p(&out_path)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).starts_with("error ["));
    assert!(!out_path.exists());
}

#[test]
fn lossless_encode_decode_and_info() {
    let dir = TempDir::new().unwrap();
    let manifest = synth(&dir.path().join("lf"), "3,3", "16,16");
    let container = dir.path().join("a.lflc");
    let mut args = vec!["encode", "--manifest", &manifest, "--lossless", "--out", p(&container)];
    args.extend(FAST);
    let out = lfcodec(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("codec.lossless = true"));

    let info = lfcodec(&["info", "--container", p(&container)]);
    assert_eq!(code(&info), 0);
    assert!(stdout(&info).contains("mode: lossless"));
    assert!(stdout(&info).contains("level 2:"));

    let dec_dir = dir.path().join("dec");
    let out = lfcodec(&["decode", "--container", p(&container), "--out-dir", p(&dec_dir), "--max-level", "3"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("out of range"), "{}", stderr(&out));

    let out = lfcodec(&[
        "decode",
        "--container",
        p(&container),
        "--out-dir",
        p(&dec_dir),
        "--max-level",
        "1",
        "--original",
        &manifest,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("levels used: 1 of 2"));
    assert!(stdout(&out).contains("overall psnr"));
    assert!(dec_dir.join("manifest.txt").exists());

    let junk = dir.path().join("junk.lflc");
    std::fs::write(&junk, b"not a container").unwrap();
    assert_eq!(code(&lfcodec(&["info", "--container", p(&junk)])), 2);
}

#[test]
fn layers_render_roundtrip() {
    let dir = TempDir::new().unwrap();
    let manifest = synth(&dir.path().join("lf"), "3,3", "16,16");
    let layers = dir.path().join("layers");
    let mut args = vec!["optimize-layers", "--manifest", &manifest, "--out-dir", p(&layers)];
    args.extend(FAST);
    let out = lfcodec(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let view = dir.path().join("view.pgm");
    let sidecar = layers.join("layers.txt");
    let out = lfcodec(&[
        "render-view",
        "--layers",
        p(&sidecar),
        "--angular",
        "3,3",
        "--view",
        "1,1",
        "--out",
        p(&view),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(std::fs::read(&view).unwrap().starts_with(b"P5"));
    let out = lfcodec(&["render-view", "--layers", p(&sidecar), "--angular", "3,3", "--view", "3,0", "--out", p(&view)]);
    assert_ne!(code(&out), 0);
}

#[test]
fn lossy_pipeline_with_sweep_and_bd() {
    let dir = TempDir::new().unwrap();
    let manifest = synth(&dir.path().join("lf"), "3,3", "16,16");
    let model = dir.path().join("model.dbn");
    let small = [
        "--set",
        "dbn.patch=8",
        "--set",
        "dbn.sizes=32,48,16,8",
        "--set",
        "dbn.pretrain_epochs=3",
        "--set",
        "dbn.finetune_epochs=5",
        "--set",
        "solver.max_iterations=40",
    ];
    let mut args = vec!["train-dbn", "--manifest", &manifest, "--out", p(&model)];
    args.extend(small);
    let out = lfcodec(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let mut containers = Vec::new();
    for workers in ["1", "4"] {
        let container = dir.path().join(format!("w{workers}.lflc"));
        let latents = dir.path().join(format!("latents{workers}"));
        let mut args = vec![
            "--workers",
            workers,
            "encode",
            "--manifest",
            &manifest,
            "--model",
            p(&model),
            "--qp",
            "22",
            "--check",
            "--export-latents",
            p(&latents),
            "--out",
            p(&container),
        ];
        args.extend(FAST);
        let out = lfcodec(&args);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(latents.join("latents.txt").exists());
        containers.push(std::fs::read(&container).unwrap());
    }
    assert_eq!(containers[0], containers[1]);

    let other = dir.path().join("other.dbn");
    std::fs::write(&other, b"DBN1 but truncated").unwrap();
    let out = lfcodec(&[
        "decode",
        "--container",
        p(&dir.path().join("w1.lflc")),
        "--model",
        p(&other),
        "--out-dir",
        p(&dir.path().join("dec")),
    ]);
    assert_eq!(code(&out), 2);

    let csv = dir.path().join("rd.csv");
    let plot = dir.path().join("rd.gp");
    let mut args = vec![
        "sweep",
        "--manifest",
        &manifest,
        "--model",
        p(&model),
        "--csv",
        p(&csv),
        "--gnuplot",
        p(&plot),
        "--set",
        "sweep.qps=6,22,38",
    ];
    args.extend(FAST);
    let out = lfcodec(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("quality,bpp,psnr_db"));
    assert_eq!(text.lines().count(), 4);
    assert!(std::fs::read_to_string(&plot).unwrap().contains("rd.csv"));

    // the tiny model gives a flat curve, so BD runs on hand-written curves
    let anchor = dir.path().join("anchor.csv");
    let test = dir.path().join("test.csv");
    std::fs::write(&anchor, "quality,bpp,psnr_db\n10,0.1,30\n20,0.3,34\n30,0.8,38\n40,2.0,41\n").unwrap();
    std::fs::write(&test, "quality,bpp,psnr_db\n10,0.1,31\n20,0.3,35\n30,0.8,39\n40,2.0,42\n").unwrap();
    let out = lfcodec(&["bd", "--anchor", p(&anchor), "--test", p(&test)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("BD-PSNR (dB)"));
    assert!(stdout(&out).contains("1.0000"));
    let out = lfcodec(&["bd", "--anchor", p(&csv), "--test", p(&csv)]);
    assert_eq!(code(&out), 2, "flat curves have no quality overlap");
}
