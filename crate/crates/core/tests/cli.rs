mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use stemset::{write_wav, WavEncoding, Waveform};

fn stemset(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stemset"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn setup(clips: &[(&str, f64)], labels: &[String], segment_s: f64) -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    for (i, (id, secs)) in clips.iter().enumerate() {
        write_clip(&tmp.path().join("stems"), id, labels, 8_000, *secs, i as u64);
    }
    write_config(tmp.path(), labels, segment_s, "");
    tmp
}

#[test]
fn augment_entry_counts() {
    let two = labels(&["Alto", "Bass"]);
    let cases: [(&[(&str, f64)], &[&str], u64); 4] = [
        (&[("c", 4.0)], &[], 3),
        (&[("c", 9.0)], &[], 6),
        (&[("c", 9.0)], &["--tail", "pad-tail"], 9),
        (&[("a", 8.0), ("b", 8.0)], &[], 12),
    ];
    for (clips, extra, expected) in cases {
        let tmp = setup(clips, &two, 4.0);
        let mut args = vec!["-c", "run.toml", "augment"];
        args.extend_from_slice(extra);
        let v = json(&stemset(tmp.path(), &args));
        assert_eq!(v["entries"], expected, "{clips:?} {extra:?}");
        assert_eq!(v["subsets_per_clip"], 3);
        assert_eq!(count_files(&tmp.path().join("work"), "mixture.wav") as u64, expected);
    }
}

#[test]
fn augment_counts_for_each_ensemble_size() {
    let all = ["S1", "S2", "S3", "S4", "S5", "S6"];
    for n in 1..=6 {
        let tmp = setup(&[("c", 4.0)], &labels(&all[..n]), 4.0);
        let v = json(&stemset(tmp.path(), &["-c", "run.toml", "augment"]));
        assert_eq!(v["entries"], (1u64 << n) - 1);
    }
}

#[test]
fn full_set_only_and_min_size() {
    let three = labels(&["Alto", "Bass", "Tenor"]);
    let tmp = setup(&[("c", 4.0)], &three, 4.0);
    let v = json(&stemset(tmp.path(), &["-c", "run.toml", "augment", "--full-set-only"]));
    assert_eq!(v["entries"], 1);
    let tmp = setup(&[("c", 4.0)], &three, 4.0);
    let v = json(&stemset(tmp.path(), &["-c", "run.toml", "augment", "--min-subset-size", "2"]));
    assert_eq!(v["entries"], 4);
}

#[test]
fn oracle_pipeline_end_to_end() {
    let three = labels(&["Alto", "Bass", "Lead Vocal"]);
    let tmp = setup(&[("c", 4.0)], &three, 2.0);
    let dir = tmp.path();
    json(&stemset(dir, &["-c", "run.toml", "augment"]));
    let sep = json(&stemset(dir, &["-c", "run.toml", "separate", "--kind", "oracle-targets"]));
    assert_eq!(sep["entries"], 14);
    let est = sep["estimates_dir"].as_str().unwrap().to_string();
    let ev = json(&stemset(dir, &["-c", "run.toml", "evaluate", "--estimates", &est]));
    let report_path = ev["report_json"].as_str().unwrap().to_string();
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();

    assert_eq!(report["all_stems"]["n_entries"], 2);
    assert_eq!(report["subset"]["n_entries"], 12);
    for stem in report["overall"]["per_stem"].as_array().unwrap() {
        assert_eq!(stem["mean_si_sdr_db"], 60.0);
        assert_eq!(stem["mean_rms_dbfs"], -120.0);
        assert_eq!(stem["detection"]["f1"], 1.0);
    }
    assert_eq!(report["config"]["paths"]["work_dir"], "work");

    let text = stemset(dir, &["report", &report_path]);
    assert!(text.status.success());
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.contains("== all stems (2 entries) =="), "{text}");
    assert!(text.contains("Lead Vocal"));

    let csv = std::fs::read_to_string(dir.join("out/report/subset.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn loss_command_reports_terms() {
    let tmp = tempfile::tempdir().unwrap();
    let mut r = rng(1);
    let t = noise(&mut r, 8000, 0.5, 16_000);
    write_wav(tmp.path().join("t.wav"), &t, WavEncoding::Float32).unwrap();
    write_wav(tmp.path().join("z.wav"), &Waveform::zeros(8000, 16_000), WavEncoding::Float32).unwrap();
    let v = json(&stemset(tmp.path(), &["loss", "t.wav", "t.wav"]));
    assert_eq!(v["composite"], 0.0);
    let v = json(&stemset(tmp.path(), &["loss", "z.wav", "t.wav"]));
    let c = v["composite"].as_f64().unwrap();
    let expect = v["l1"].as_f64().unwrap() + 0.7 * v["mel"].as_f64().unwrap() + 0.3 * v["stft"].as_f64().unwrap();
    assert!((c - expect).abs() < 1e-12);
    assert_eq!(v["weights"]["mel"], 0.7);
}

#[test]
fn exit_codes() {
    let two = labels(&["Alto", "Bass"]);

    let tmp = setup(&[("c", 4.0)], &two, 4.0);
    std::fs::remove_file(tmp.path().join("stems/c/Bass.wav")).unwrap();
    let out = stemset(tmp.path(), &["-c", "run.toml", "augment"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Bass") && err.contains('c'), "{err}");

    let tmp = setup(&[("c", 4.0)], &two, 4.0);
    std::fs::write(tmp.path().join("bad.toml"), "[augment]\nsegment_length_s = -1.0\n").unwrap();
    assert_eq!(stemset(tmp.path(), &["-c", "bad.toml", "augment"]).status.code(), Some(2));
    std::fs::write(tmp.path().join("typo.toml"), "lables = []\n").unwrap();
    assert_eq!(stemset(tmp.path(), &["-c", "typo.toml", "augment"]).status.code(), Some(2));
    assert_eq!(stemset(tmp.path(), &["-c", "missing.toml", "augment"]).status.code(), Some(2));

    json(&stemset(tmp.path(), &["-c", "run.toml", "augment"]));
    let out = stemset(tmp.path(), &["-c", "run.toml", "evaluate", "--estimates", "nowhere"]);
    assert_eq!(out.status.code(), Some(3));
    let out = stemset(
        tmp.path(),
        &["-c", "run.toml", "separate", "--kind", "ideal-ratio-mask", "--window", "512", "--hop", "384"],
    );
    assert_eq!(out.status.code(), Some(2));

    let empty = tempfile::tempdir().unwrap();
    std::fs::create_dir(empty.path().join("stems")).unwrap();
    write_config(empty.path(), &two, 4.0, "");
    assert_eq!(stemset(empty.path(), &["-c", "run.toml", "augment"]).status.code(), Some(3));

    write_wav(tmp.path().join("a.wav"), &Waveform::zeros(100, 16_000), WavEncoding::Float32).unwrap();
    write_wav(tmp.path().join("b.wav"), &Waveform::zeros(200, 16_000), WavEncoding::Float32).unwrap();
    assert_eq!(stemset(tmp.path(), &["loss", "a.wav", "b.wav"]).status.code(), Some(3));
    std::fs::write(tmp.path().join("junk.wav"), b"RIFF").unwrap();
    assert_eq!(stemset(tmp.path(), &["loss", "junk.wav", "b.wav"]).status.code(), Some(3));
}
