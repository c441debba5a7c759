//! Test support: a deterministic synthetic spoken-digit corpus and a WAV
//! writer that shares no code with the decoder under test.

use std::f64::consts::PI;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SAMPLE_RATE_HZ: u32 = 8000;

/// Voice parameters of a synthetic talker.
#[derive(Debug, Clone, PartialEq)]
pub struct Speaker {
    pub name: String,
    pub f0_hz: f64,
    pub formant_scale: f64,
    pub rate: f64,
    pub breathiness: f64,
}

const NAMES: [&str; 8] = ["ada", "bo", "cyd", "dee", "eli", "fay", "gus", "hal"];

/// Up to eight talkers with well separated pitch, vocal tract length and
/// tempo.
pub fn speakers(n: usize) -> Vec<Speaker> {
    assert!(n <= NAMES.len(), "at most {} synthetic speakers", NAMES.len());
    (0..n)
        .map(|i| {
            let t = i as f64;
            Speaker {
                name: NAMES[i].to_string(),
                f0_hz: [105.0, 210.0, 130.0, 175.0, 95.0, 240.0, 150.0, 120.0][i],
                formant_scale: [0.92, 1.12, 0.97, 1.06, 0.88, 1.16, 1.0, 0.95][i],
                rate: 0.85 + 0.05 * ((t * 3.0) % 7.0),
                breathiness: [0.05, 0.15, 0.08, 0.2, 0.03, 0.12, 0.1, 0.25][i],
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Seg {
    formants: [f64; 3],
    voicing: f64,
    frication: f64,
    dur_ms: f64,
}

const fn v(f1: f64, f2: f64, f3: f64, dur_ms: f64) -> Seg {
    Seg { formants: [f1, f2, f3], voicing: 1.0, frication: 0.0, dur_ms }
}

const fn fric(f: f64, dur_ms: f64) -> Seg {
    Seg { formants: [f * 0.6, f, f * 1.2], voicing: 0.0, frication: 0.6, dur_ms }
}

const fn nasal(dur_ms: f64) -> Seg {
    Seg { formants: [250.0, 1000.0, 2300.0], voicing: 0.35, frication: 0.0, dur_ms }
}

const fn stop(dur_ms: f64) -> Seg {
    Seg { formants: [400.0, 1800.0, 2600.0], voicing: 0.0, frication: 0.25, dur_ms }
}

fn digit_segments(digit: u8) -> Vec<Seg> {
    let ih = |d| v(390.0, 1990.0, 2550.0, d);
    let er = |d| v(490.0, 1350.0, 1690.0, d);
    let uw = |d| v(300.0, 870.0, 2240.0, d);
    let uh = |d| v(640.0, 1190.0, 2390.0, d);
    let iy = |d| v(270.0, 2290.0, 3010.0, d);
    let ao = |d| v(570.0, 840.0, 2410.0, d);
    let aa = |d| v(730.0, 1090.0, 2440.0, d);
    let eh = |d| v(530.0, 1840.0, 2480.0, d);
    let ow = |d| v(450.0, 900.0, 2300.0, d);
    match digit {
        0 => vec![fric(3200.0, 80.0), ih(90.0), er(110.0), ow(150.0)],
        1 => vec![uw(70.0), uh(180.0), nasal(110.0)],
        2 => vec![stop(40.0), uw(260.0)],
        3 => vec![fric(2600.0, 90.0), er(80.0), iy(210.0)],
        4 => vec![fric(1800.0, 90.0), ao(170.0), er(120.0)],
        5 => vec![fric(1800.0, 80.0), aa(160.0), iy(90.0), fric(1500.0, 60.0)],
        6 => vec![fric(3400.0, 100.0), ih(110.0), stop(50.0), fric(3400.0, 110.0)],
        7 => vec![fric(3300.0, 90.0), eh(110.0), uh(70.0), nasal(100.0)],
        8 => vec![eh(170.0), iy(110.0), stop(50.0)],
        9 => vec![nasal(80.0), aa(170.0), iy(80.0), nasal(100.0)],
        _ => panic!("digit {digit} out of range"),
    }
}

struct Resonator {
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn tick(&mut self, x: f64, freq: f64, bw: f64, fs: f64) -> f64 {
        let r = (-PI * bw / fs).exp();
        let c = 2.0 * r * (2.0 * PI * freq / fs).cos();
        let y = (1.0 - r) * x + c * self.y1 - r * r * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn mix_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243F_6A88_85A3_08D3u64, |h, &p| {
        let mut z = h ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

/// One utterance of `digit` by `speaker`; `take` and `seed` select the
/// per-utterance jitter.
pub fn synth_utterance(digit: u8, speaker: &Speaker, take: u32, seed: u64) -> Vec<f64> {
    let fs = SAMPLE_RATE_HZ as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, digit as u64, take as u64, speaker.f0_hz.to_bits()]));
    let f0 = speaker.f0_hz * rng.gen_range(0.94..1.06);
    let tempo = speaker.rate * rng.gen_range(0.9..1.1);
    let gain = rng.gen_range(0.4..0.9);

    let segs: Vec<Seg> = digit_segments(digit)
        .into_iter()
        .map(|mut s| {
            for f in &mut s.formants {
                *f = (*f * speaker.formant_scale * rng.gen_range(0.96..1.04)).min(3800.0);
            }
            s.dur_ms *= tempo * rng.gen_range(0.9..1.1);
            s
        })
        .collect();

    let lead = (rng.gen_range(0.03..0.12) * fs) as usize;
    let tail = (rng.gen_range(0.03..0.12) * fs) as usize;
    let bounds: Vec<usize> = segs
        .iter()
        .scan(0usize, |acc, s| {
            *acc += (s.dur_ms * fs / 1000.0) as usize;
            Some(*acc)
        })
        .collect();
    let body = *bounds.last().unwrap();
    let centers: Vec<f64> = segs
        .iter()
        .zip(&bounds)
        .map(|(s, &end)| end as f64 - s.dur_ms * fs / 2000.0)
        .collect();

    let lerp = |t: f64, pick: &dyn Fn(&Seg) -> f64| -> f64 {
        if t <= centers[0] {
            return pick(&segs[0]);
        }
        for k in 1..segs.len() {
            if t <= centers[k] {
                let w = (t - centers[k - 1]) / (centers[k] - centers[k - 1]);
                return pick(&segs[k - 1]) * (1.0 - w) + pick(&segs[k]) * w;
            }
        }
        pick(segs.last().unwrap())
    };

    let mut res = [Resonator { y1: 0.0, y2: 0.0 }, Resonator { y1: 0.0, y2: 0.0 }, Resonator { y1: 0.0, y2: 0.0 }];
    let bws = [90.0, 130.0, 180.0];
    let mut phase = 0.0;
    let ramp = 0.02 * fs;
    let mut out = vec![0.0; lead + body + tail];
    for n in 0..body {
        let t = n as f64;
        let voicing = lerp(t, &|s| s.voicing);
        let frication = lerp(t, &|s| s.frication);
        let pitch = f0 * (1.0 + 0.08 * (1.0 - t / body as f64) + 0.01 * (2.0 * PI * 5.0 * t / fs).sin());
        phase += pitch / fs;
        let pulse = if phase >= 1.0 {
            phase -= 1.0;
            1.0
        } else {
            0.0
        };
        let noise: f64 = rng.gen_range(-1.0..1.0);
        let mut x = voicing * (pulse * 8.0 + speaker.breathiness * noise) + frication * noise;
        for (k, r) in res.iter_mut().enumerate() {
            let f = lerp(t, &|s| s.formants[k]);
            x = r.tick(x, f, bws[k], fs);
        }
        let env = (t / ramp).min(1.0) * ((body as f64 - t) / ramp).min(1.0);
        out[lead + n] = x * env;
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    for s in &mut out {
        *s = *s / peak * gain + rng.gen_range(-1.0..1.0) * 2e-3;
    }
    out
}

#[derive(Debug, Clone)]
pub struct Utterance {
    pub digit: u8,
    pub speaker: String,
    pub take: u32,
    pub samples: Vec<f64>,
}

impl Utterance {
    /// `<digit>_<speaker>_<take>.wav`.
    pub fn file_name(&self) -> String {
        format!("{}_{}_{}.wav", self.digit, self.speaker, self.take)
    }
}

/// Every digit `takes` times for each of `n_speakers` talkers.
pub fn corpus(n_speakers: usize, digits: &[u8], takes: u32, seed: u64) -> Vec<Utterance> {
    let mut out = Vec::new();
    for sp in speakers(n_speakers) {
        for &d in digits {
            for take in 0..takes {
                out.push(Utterance {
                    digit: d,
                    speaker: sp.name.clone(),
                    take,
                    samples: synth_utterance(d, &sp, take, seed),
                });
            }
        }
    }
    out
}

/// Writes the corpus as 16-bit mono WAV files; returns the paths in corpus
/// order.
pub fn write_corpus(dir: &Path, utterances: &[Utterance]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    utterances
        .iter()
        .map(|u| {
            let p = dir.join(u.file_name());
            write_wav_pcm16(&p, &[u.samples.clone()], SAMPLE_RATE_HZ)?;
            Ok(p)
        })
        .collect()
}

fn riff(fmt_tag: u16, channels: u16, sample_rate: u32, bits: u16, data: &[u8]) -> Vec<u8> {
    let block_align = channels * bits / 8;
    let mut b = Vec::with_capacity(44 + data.len());
    b.extend_from_slice(b"RIFF");
    b.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
    b.extend_from_slice(b"WAVEfmt ");
    b.extend_from_slice(&16u32.to_le_bytes());
    b.extend_from_slice(&fmt_tag.to_le_bytes());
    b.extend_from_slice(&channels.to_le_bytes());
    b.extend_from_slice(&sample_rate.to_le_bytes());
    b.extend_from_slice(&(sample_rate * block_align as u32).to_le_bytes());
    b.extend_from_slice(&block_align.to_le_bytes());
    b.extend_from_slice(&bits.to_le_bytes());
    b.extend_from_slice(b"data");
    b.extend_from_slice(&(data.len() as u32).to_le_bytes());
    b.extend_from_slice(data);
    b
}

fn interleave<T: Copy>(channels: &[Vec<f64>], conv: impl Fn(f64) -> T, put: impl Fn(T, &mut Vec<u8>)) -> Vec<u8> {
    let len = channels.iter().map(Vec::len).min().unwrap_or(0);
    let mut data = Vec::new();
    for i in 0..len {
        for ch in channels {
            put(conv(ch[i]), &mut data);
        }
    }
    data
}

/// PCM16 file, one inner vector per channel, samples clipped to [-1, 1].
pub fn write_wav_pcm16(path: &Path, channels: &[Vec<f64>], sample_rate: u32) -> io::Result<()> {
    fs::write(path, pcm16_bytes(channels, sample_rate))
}

pub fn pcm16_bytes(channels: &[Vec<f64>], sample_rate: u32) -> Vec<u8> {
    let data = interleave(
        channels,
        |v| (v.clamp(-1.0, 1.0) * 32767.0).round() as i16,
        |s, d| d.extend_from_slice(&s.to_le_bytes()),
    );
    riff(1, channels.len() as u16, sample_rate, 16, &data)
}

/// IEEE float32 file.
pub fn write_wav_f32(path: &Path, channels: &[Vec<f64>], sample_rate: u32) -> io::Result<()> {
    let data = interleave(channels, |v| v as f32, |s, d| d.extend_from_slice(&s.to_le_bytes()));
    fs::write(path, riff(3, channels.len() as u16, sample_rate, 32, &data))
}
