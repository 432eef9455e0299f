use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use subband_nmf::audio_io::{read_wav, write_wav};
use subband_nmf::metrics::ssnr_default;
use subband_nmf::mixing::{mix_at_snr, synth_tone, synth_white_noise, MixSpec};
use subband_nmf::model_io::{load_model, Model};
use subband_nmf::Signal;

const FS: u32 = 8000;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_subband-nmf"));
    c.env_remove("SUBBAND_NMF_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {report}"))
        .parse()
        .unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        write_wav(
            f.path("clean_train.wav"),
            &synth_tone(500.0, 3.0, FS, 0.5).unwrap(),
        )
        .unwrap();
        write_wav(
            f.path("noise_train.wav"),
            &synth_white_noise(3.0, FS, 1, 0.1).unwrap(),
        )
        .unwrap();
        let clean = synth_tone(500.0, 2.0, FS, 0.5).unwrap();
        let noisy = mix_at_snr(
            &clean,
            &synth_white_noise(3.0, FS, 2, 0.1).unwrap(),
            &MixSpec {
                snr_db: 0.0,
                seed: 3,
            },
        )
        .unwrap();
        write_wav(f.path("clean.wav"), &clean).unwrap();
        write_wav(f.path("noisy.wav"), &noisy).unwrap();
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn train(&self, method: &str, out: &str, extra: &[&str]) {
        let (clean, noise, out) = (
            self.s("clean_train.wav"),
            self.s("noise_train.wav"),
            self.s(out),
        );
        let mut args = vec![
            "train",
            "--method",
            method,
            "--clean",
            &clean,
            "--noise",
            &noise,
            "--out",
            &out,
            "--speech-rank",
            "4",
            "--noise-rank",
            "8",
        ];
        args.extend(extra);
        ok(&args);
    }
}

fn read(path: &Path) -> Signal {
    read_wav(path).unwrap().0
}

#[test]
fn dwpt_roundtrip_is_lossless() {
    let f = Fixture::new();
    let report = ok(&[
        "roundtrip",
        "--in",
        &f.s("noisy.wav"),
        "--transform",
        "dwpt",
        "--level",
        "3",
    ]);
    assert!(value(&report, "mse") < 1e-10, "{report}");
    assert!(value(&report, "max_abs_error") < 1e-10, "{report}");
}

#[test]
fn stft_roundtrip_reports_error() {
    let f = Fixture::new();
    let report = ok(&[
        "roundtrip",
        "--in",
        &f.s("noisy.wav"),
        "--transform",
        "stft",
        "--frame",
        "256",
        "--shift",
        "80",
    ]);
    assert!(value(&report, "mse") < 1e-3, "{report}");
}

#[test]
fn mix_with_equal_power_is_plain_sum() {
    let f = Fixture::new();
    let clean = read(&f.path("clean.wav"));
    let reversed: Vec<f64> = clean.samples().iter().rev().map(|v| -v).collect();
    let noise = Signal::new(reversed, FS).unwrap();
    write_wav(f.path("eqnoise.wav"), &noise).unwrap();
    let report = ok(&[
        "mix",
        "--clean",
        &f.s("clean.wav"),
        "--noise",
        &f.s("eqnoise.wav"),
        "--snr",
        "0",
        "--seed",
        "5",
        "--out",
        &f.s("mix.wav"),
    ]);
    assert!(value(&report, "snr_db").abs() < 1e-9, "{report}");

    let sum: Vec<f64> = clean
        .samples()
        .iter()
        .zip(noise.samples())
        .map(|(a, b)| a + b)
        .collect();
    write_wav(f.path("sum.wav"), &Signal::new(sum, FS).unwrap()).unwrap();
    let eval = ok(&[
        "eval",
        "--reference",
        &f.s("sum.wav"),
        "--test",
        &f.s("mix.wav"),
    ]);
    assert!(value(&eval, "mse") < 1e-12, "{eval}");
}

#[test]
fn train_enhance_eval_improves_ssnr() {
    let f = Fixture::new();
    for method in ["dwpt-nmf", "stft-nmf"] {
        let model = format!("{method}.model");
        let out = format!("{method}.wav");
        f.train(method, &model, &["--iters-train", "100"]);
        ok(&[
            "enhance",
            "--model",
            &f.s(&model),
            "--in",
            &f.s("noisy.wav"),
            "--out",
            &f.s(&out),
        ]);
        let enhanced = value(
            &ok(&[
                "eval",
                "--reference",
                &f.s("clean.wav"),
                "--test",
                &f.s(&out),
            ]),
            "ssnr_db",
        );
        let noisy = value(
            &ok(&[
                "eval",
                "--reference",
                &f.s("clean.wav"),
                "--test",
                &f.s("noisy.wav"),
            ]),
            "ssnr_db",
        );
        assert!(enhanced > noisy, "{method}: {enhanced} <= {noisy}");
        // The CLI agrees with the library metric on the decoded files.
        let direct = ssnr_default(&read(&f.path("clean.wav")), &read(&f.path(&out))).unwrap();
        assert!((direct - enhanced).abs() < 1e-9);
    }
}

#[test]
fn config_file_flags_and_env_precedence() {
    let f = Fixture::new();
    std::fs::write(f.path("cfg.txt"), "# test config\nmethod = dwpt-nmf\nspeech_rank = 3\nnoise_rank = 5\nframe_size = 400\niters_train = 20\n").unwrap();
    let cfg = f.s("cfg.txt");
    let base = [
        "train",
        "--clean",
        &f.s("clean_train.wav"),
        "--noise",
        &f.s("noise_train.wav"),
        "--config",
        &cfg,
    ];

    let a = f.s("a.model");
    ok(&[&base[..], &["--out", &a, "--noise-rank", "6"]].concat());
    let Model::Dwpt(m) = load_model(Path::new(&a)).unwrap() else {
        panic!("expected dwpt model")
    };
    assert_eq!(m.frame_spec.frame_size(), 400);
    assert_eq!(m.bands[0].w_speech.cols(), 3);
    assert_eq!(m.bands[0].w_noise.cols(), 6);

    // Env seed is used when nothing else sets one; an explicit flag overrides it.
    let train_to = |out: &str, env: Option<&str>, seed: Option<&str>| {
        let mut c = bin();
        c.args(base).args(["--out", out]);
        if let Some(s) = seed {
            c.args(["--seed", s]);
        }
        if let Some(e) = env {
            c.env("SUBBAND_NMF_SEED", e);
        }
        assert!(c.output().unwrap().status.success());
        std::fs::read(out).unwrap()
    };
    let default = train_to(&f.s("d.model"), None, None);
    let env9 = train_to(&f.s("e.model"), Some("9"), None);
    let flag9 = train_to(&f.s("f.model"), Some("4"), Some("9"));
    let zero = train_to(&f.s("z.model"), Some("9"), Some("0"));
    assert_ne!(default, env9);
    assert_eq!(env9, flag9);
    assert_eq!(default, zero);
}

#[test]
fn directory_batches_and_csv() {
    let f = Fixture::new();
    f.train("stft-nmf", "m.model", &["--iters-train", "30"]);
    let (noisy_dir, clean_dir, out_dir) =
        (f.path("noisy_dir"), f.path("clean_dir"), f.path("out_dir"));
    std::fs::create_dir_all(&noisy_dir).unwrap();
    std::fs::create_dir_all(&clean_dir).unwrap();
    for name in ["b.wav", "a.wav"] {
        std::fs::copy(f.path("noisy.wav"), noisy_dir.join(name)).unwrap();
        std::fs::copy(f.path("clean.wav"), clean_dir.join(name)).unwrap();
    }
    std::fs::write(noisy_dir.join("notes.txt"), "ignored").unwrap();
    ok(&[
        "enhance",
        "--jobs",
        "2",
        "--model",
        &f.s("m.model"),
        "--in",
        &noisy_dir.to_string_lossy(),
        "--out",
        &out_dir.to_string_lossy(),
    ]);
    assert!(out_dir.join("a.wav").exists() && out_dir.join("b.wav").exists());

    let csv = f.path("metrics.csv");
    let report = ok(&[
        "eval",
        "--reference",
        &clean_dir.to_string_lossy(),
        "--test",
        &out_dir.to_string_lossy(),
        "--csv",
        &csv.to_string_lossy(),
    ]);
    assert!(report.contains("file=a.wav") && report.contains("file=b.wav"));
    let csv = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "file,mse,ssnr_db,sdi");
    assert!(lines[1].starts_with("a.wav,") && lines[2].starts_with("b.wav,"));
}

#[test]
fn dump_spectrogram_writes_frames() {
    let f = Fixture::new();
    f.train(
        "dwpt-nmf",
        "m.model",
        &["--iters-train", "20", "--frame-size", "200"],
    );
    ok(&[
        "enhance",
        "--model",
        &f.s("m.model"),
        "--in",
        &f.s("noisy.wav"),
        "--out",
        &f.s("e.wav"),
        "--dump-spectrogram",
        &f.s("spec.csv"),
    ]);
    let csv = std::fs::read_to_string(f.path("spec.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 1 + 129);
    // 16000 samples, 256/80 framing: (16000 - 256) / 80 + 1 frames.
    assert_eq!(csv.lines().count(), 1 + 197);
}

#[test]
fn errors_name_the_offending_input() {
    let f = Fixture::new();
    let missing = f.s("nope.wav");
    let out = run(&["roundtrip", "--in", &missing, "--transform", "dwpt"]);
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("--in") && msg.contains("nope.wav"), "{msg}");

    f.train(
        "dwpt-nmf",
        "m.model",
        &["--iters-train", "5", "--frame-size", "200"],
    );
    write_wav(
        f.path("wrong_rate.wav"),
        &synth_tone(500.0, 1.0, 16000, 0.5).unwrap(),
    )
    .unwrap();
    let out = run(&[
        "enhance",
        "--model",
        &f.s("m.model"),
        "--in",
        &f.s("wrong_rate.wav"),
        "--out",
        &f.s("x.wav"),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("wrong_rate.wav"));

    std::fs::write(f.path("bad.cfg"), "speech_rank = lots\n").unwrap();
    let out = run(&[
        "train",
        "--method",
        "stft-nmf",
        "--clean",
        &f.s("clean.wav"),
        "--noise",
        &f.s("noisy.wav"),
        "--out",
        &f.s("y.model"),
        "--config",
        &f.s("bad.cfg"),
    ]);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(
        !out.status.success() && msg.contains("bad.cfg") && msg.contains("speech_rank"),
        "{msg}"
    );

    let out = run(&[
        "train",
        "--clean",
        &f.s("clean.wav"),
        "--noise",
        &f.s("noisy.wav"),
        "--out",
        &f.s("y.model"),
    ]);
    assert!(!out.status.success() && String::from_utf8_lossy(&out.stderr).contains("--method"));
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["train", "enhance", "mix", "eval", "roundtrip"] {
        let text = ok(&[sub, "--help"]);
        assert!(text.contains("--"), "{sub}");
    }
    let train = ok(&["train", "--help"]);
    for needle in [
        "--frame-size",
        "--level",
        "--speech-rank",
        "--noise-rank",
        "--filter",
        "[default: 40]",
        "[default: 160]",
        "db8",
    ] {
        assert!(train.contains(needle), "train help lacks {needle}");
    }
    let enhance = ok(&["enhance", "--help"]);
    assert!(enhance.contains("--no-normalize") && enhance.contains("--dump-spectrogram"));
}
