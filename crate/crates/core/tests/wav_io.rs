use std::f64::consts::PI;

use tdrc_core::audio::{build_manifest, load_labelled, load_wav, NamingScheme};
use tdrc_testkit::{write_wav_f32, write_wav_pcm16};

#[test]
fn pcm16_mono_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.wav");
    let s: Vec<f64> = (0..800).map(|n| 0.6 * (2.0 * PI * 440.0 * n as f64 / 8000.0).sin()).collect();
    write_wav_pcm16(&p, &[s.clone()], 8000).unwrap();
    let clip = load_wav(&p).unwrap();
    assert_eq!(clip.sample_rate_hz, 8000);
    assert_eq!(clip.len(), 800);
    let err = clip.samples.iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    // half-step rounding plus the 32767 vs 32768 full-scale mismatch
    assert!(err <= 0.5 / 32767.0 + 0.6 / 32768.0, "{err}");
}

#[test]
fn stereo_is_averaged_and_float_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let l: Vec<f64> = (0..100).map(|n| n as f64 / 200.0).collect();
    let r: Vec<f64> = (0..100).map(|n| -(n as f64) / 400.0).collect();
    let p = dir.path().join("st.wav");
    write_wav_f32(&p, &[l.clone(), r.clone()], 16000).unwrap();
    let clip = load_wav(&p).unwrap();
    for i in 0..100 {
        let want = ((l[i] as f32) as f64 + (r[i] as f32) as f64) / 2.0;
        assert!((clip.samples[i] - want).abs() < 1e-7);
    }
    let p16 = dir.path().join("st16.wav");
    write_wav_pcm16(&p16, &[vec![0.5; 10], vec![-0.5; 10]], 8000).unwrap();
    assert!(load_wav(&p16).unwrap().samples.iter().all(|v| v.abs() < 1e-4));
}

#[test]
fn native_48k_is_resampled() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("0_01_0.wav");
    let s: Vec<f64> = (0..48000).map(|n| 0.5 * (2.0 * PI * 300.0 * n as f64 / 48000.0).sin()).collect();
    write_wav_pcm16(&p, &[s], 48000).unwrap();
    let clip = load_labelled(&p, Some(0), Some("01"), 8000).unwrap();
    assert_eq!(clip.len(), 8000);
    assert_eq!(clip.digit_label, Some(0));
    let m = build_manifest(dir.path(), NamingScheme::AudioMnist).unwrap();
    assert_eq!(m.entries[0].speaker, "01");
}

#[test]
fn synthetic_corpus_catalogues_as_fsdd() {
    let dir = tempfile::tempdir().unwrap();
    let utts = tdrc_testkit::corpus(3, &[2, 6], 2, 4);
    tdrc_testkit::write_corpus(dir.path(), &utts).unwrap();
    std::fs::write(dir.path().join("notes_x.wav"), b"junk").unwrap();
    let m = build_manifest(dir.path(), NamingScheme::Fsdd).unwrap();
    assert_eq!(m.len(), 12);
    assert_eq!(m.speakers(), vec!["ada", "bo", "cyd"]);
    assert_eq!(m.warnings.len(), 1);
    let clip = load_wav(&m.absolute_path(&m.entries[0])).unwrap();
    assert!(clip.len() > 1000);
}
