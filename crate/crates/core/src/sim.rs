//! Monte-Carlo FER/BER simulation over BPSK/AWGN.
//!
//! Frame `i` of a point draws its payload and noise from a ChaCha8 stream
//! keyed by `(seed, i)`, so every decoder sees the same frames and results do
//! not depend on the thread count.

use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{build_decoder, CuMode, EcspdConfig, EcspdDecoder};
use crate::error::{Error, Result};
use crate::factor_graph::GraphIndex;
use crate::polar_code::PolarCode;
use crate::reference::{decode_bp, BpMode, BpParams};
use crate::termination::DecodeResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    Bp,
    Minsum,
    Ecspd,
    EcspdFullCu,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bp => "bp",
            Self::Minsum => "minsum",
            Self::Ecspd => "ecspd",
            Self::EcspdFullCu => "ecspd-full-cu",
        }
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bp" => Ok(Self::Bp),
            "minsum" => Ok(Self::Minsum),
            "ecspd" => Ok(Self::Ecspd),
            "ecspd-full-cu" => Ok(Self::EcspdFullCu),
            _ => Err(Error::InvalidParameter(format!("unknown decoder {s:?}"))),
        }
    }
}

/// Noise spectral density for unit-energy BPSK at the given Eb/N0 and rate.
pub fn noise_density(ebno_db: f64, rate: f64) -> f64 {
    1.0 / (rate * 10f64.powf(ebno_db / 10.0))
}

/// Maps bit 0 → +1, bit 1 → −1 and adds N(0, n0/2) noise.
pub fn bpsk_awgn<R: Rng>(x: &[u8], n0: f64, rng: &mut R) -> Vec<f64> {
    let sigma = (n0 / 2.0).sqrt();
    x.iter()
        .map(|&b| {
            let s = if b == 0 { 1.0 } else { -1.0 };
            let z: f64 = rng.sample(StandardNormal);
            s + sigma * z
        })
        .collect()
}

/// Per-frame RNG for frame `index` of a run seeded with `seed`.
pub fn frame_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One transmitted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub payload: Vec<u8>,
    pub u: Vec<u8>,
    pub y: Vec<f64>,
}

pub fn make_frame(code: &PolarCode, n0: f64, seed: u64, index: u64) -> Result<Frame> {
    let mut rng = frame_rng(seed, index);
    let payload: Vec<u8> = (0..code.payload_len())
        .map(|_| rng.gen_range(0..2u8))
        .collect();
    let msg = code.crc_attach(&payload)?;
    let u = code.message_to_u(&msg)?;
    let x = code.encode(&u)?;
    let y = bpsk_awgn(&x, n0, &mut rng);
    Ok(Frame { payload, u, y })
}

/// A ready-to-run decoder of any kind.
#[derive(Debug, Clone)]
pub enum Decoder {
    Reference { graph: GraphIndex, params: BpParams },
    Stochastic(Box<EcspdDecoder>),
}

impl Decoder {
    pub fn new(
        kind: DecoderKind,
        code: &PolarCode,
        max_iter: usize,
        ecspd: &EcspdConfig,
    ) -> Result<Self> {
        let bp = |mode| -> Result<Self> {
            Ok(Self::Reference {
                graph: GraphIndex::new(code.n())?,
                params: BpParams { max_iter, mode },
            })
        };
        match kind {
            DecoderKind::Bp => bp(BpMode::Exact),
            DecoderKind::Minsum => bp(BpMode::MinSum),
            DecoderKind::Ecspd | DecoderKind::EcspdFullCu => {
                let mut cfg = ecspd.clone();
                cfg.max_iter = max_iter;
                if kind == DecoderKind::EcspdFullCu {
                    cfg.cu_mode = CuMode::Full;
                }
                Ok(Self::Stochastic(Box::new(build_decoder(code, &cfg)?)))
            }
        }
    }

    pub fn decode(&self, code: &PolarCode, y: &[f64], n0: f64) -> Result<DecodeResult> {
        match self {
            Self::Reference { graph, params } => {
                let llr: Vec<f64> = y.iter().map(|v| 4.0 * v / n0).collect();
                decode_bp(&llr, code, graph, params)
            }
            Self::Stochastic(dec) => dec.decode(y, n0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub frames: u64,
    pub max_errors: u64,
    pub max_iter: usize,
    pub seed: u64,
    pub ecspd: EcspdConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            frames: 10_000,
            max_errors: 100,
            max_iter: 40,
            seed: 1,
            ecspd: EcspdConfig::default(),
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub decoder: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub ebno_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    /// Normal-approximation 95% half-width of the FER; unreliable below
    /// about 30 errors. With no errors, the one-sided 95% upper bound `−ln(0.05)/frames`.
    pub fer_ci95: f64,
    pub mean_iters: f64,
    pub mean_ticks: f64,
}

#[derive(Debug, Clone, Copy)]
struct FrameOutcome {
    bit_errors: u64,
    iterations: usize,
    ticks: usize,
}

/// Simulates one Eb/N0 point. Stops after `frames` frames or on the frame
/// completing `max_errors` frame errors, whichever comes first.
pub fn run_point(
    kind: DecoderKind,
    code: &PolarCode,
    ebno_db: f64,
    cfg: &SimConfig,
) -> Result<SimStats> {
    if cfg.frames == 0 {
        return Err(Error::InvalidParameter("frames must be positive".into()));
    }
    let n0 = noise_density(ebno_db, code.rate());
    let decoder = Decoder::new(kind, code, cfg.max_iter, &cfg.ecspd)?;
    let batch = (rayon::current_num_threads() as u64 * 16).max(64);

    let mut frames = 0u64;
    let mut frame_errors = 0u64;
    let mut bit_errors = 0u64;
    let mut iters = 0u64;
    let mut ticks = 0u64;
    let mut start = 0u64;
    'outer: while start < cfg.frames {
        let end = (start + batch).min(cfg.frames);
        let outcomes: Vec<FrameOutcome> = (start..end)
            .into_par_iter()
            .map(|i| -> Result<FrameOutcome> {
                let f = make_frame(code, n0, cfg.seed, i)?;
                let res = decoder.decode(code, &f.y, n0)?;
                let be = res
                    .info_hat
                    .iter()
                    .zip(&f.payload)
                    .filter(|(a, b)| a != b)
                    .count();
                Ok(FrameOutcome {
                    bit_errors: be as u64,
                    iterations: res.iterations,
                    ticks: res.ticks,
                })
            })
            .collect::<Result<_>>()?;
        // Scan in frame order so the stopping point is thread-independent.
        for o in outcomes {
            frames += 1;
            bit_errors += o.bit_errors;
            iters += o.iterations as u64;
            ticks += o.ticks as u64;
            if o.bit_errors > 0 {
                frame_errors += 1;
                if frame_errors >= cfg.max_errors {
                    break 'outer;
                }
            }
        }
        start = end;
    }

    let fer = frame_errors as f64 / frames as f64;
    let payload = code.payload_len().max(1) as f64;
    Ok(SimStats {
        decoder: kind.name().to_string(),
        n: code.n(),
        k: code.k(),
        ebno_db,
        frames,
        frame_errors,
        bit_errors,
        fer,
        ber: bit_errors as f64 / (frames as f64 * payload),
        fer_ci95: if frame_errors == 0 {
            -(0.05f64.ln()) / frames as f64
        } else {
            1.96 * (fer * (1.0 - fer) / frames as f64).sqrt()
        },
        mean_iters: iters as f64 / frames as f64,
        mean_ticks: ticks as f64 / frames as f64,
    })
}

pub fn run_sweep(
    kind: DecoderKind,
    code: &PolarCode,
    ebno_db: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<SimStats>> {
    ebno_db
        .iter()
        .map(|&e| run_point(kind, code, e, cfg))
        .collect()
}

pub const CSV_HEADER: [&str; 12] = [
    "decoder",
    "N",
    "K",
    "ebno_db",
    "frames",
    "frame_errors",
    "bit_errors",
    "fer",
    "ber",
    "fer_ci95",
    "mean_iters",
    "mean_ticks",
];

pub fn write_csv<W: Write>(rows: &[SimStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SimStats>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar_code::{construct_code, CrcConfig};

    #[test]
    fn noise_density_examples() {
        assert!((noise_density(0.0, 0.5) - 2.0).abs() < 1e-12);
        assert!((noise_density(10.0, 1.0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn bpsk_mapping_without_noise() {
        let mut rng = frame_rng(0, 0);
        assert_eq!(
            bpsk_awgn(&[0, 1, 1, 0], 0.0, &mut rng),
            vec![1.0, -1.0, -1.0, 1.0]
        );
    }

    #[test]
    fn awgn_variance_matches() {
        let mut rng = frame_rng(3, 9);
        let y = bpsk_awgn(&vec![0u8; 200_000], 0.8, &mut rng);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
        assert!((mean - 1.0).abs() < 0.01);
        assert!((var - 0.4).abs() < 0.01);
    }

    #[test]
    fn frames_are_reproducible() {
        let code = construct_code(64, 32, 2.0)
            .unwrap()
            .with_crc(CrcConfig::ccitt16())
            .unwrap();
        let a = make_frame(&code, 0.7, 5, 11).unwrap();
        let b = make_frame(&code, 0.7, 5, 11).unwrap();
        let c = make_frame(&code, 0.7, 5, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn decoder_names_round_trip() {
        for k in [
            DecoderKind::Bp,
            DecoderKind::Minsum,
            DecoderKind::Ecspd,
            DecoderKind::EcspdFullCu,
        ] {
            assert_eq!(k.name().parse::<DecoderKind>().unwrap(), k);
        }
        assert!("sc".parse::<DecoderKind>().is_err());
    }

    #[test]
    fn stops_at_error_budget() {
        let code = construct_code(64, 32, 2.0)
            .unwrap()
            .with_crc(CrcConfig::ccitt16())
            .unwrap();
        let cfg = SimConfig {
            frames: 5000,
            max_errors: 7,
            ..SimConfig::default()
        };
        let s = run_point(DecoderKind::Minsum, &code, -2.0, &cfg).unwrap();
        assert_eq!(s.frame_errors, 7);
        assert!(s.frames < 5000);
    }

    #[test]
    fn zero_errors_report_one_sided_bound() {
        let code = construct_code(64, 32, 2.0)
            .unwrap()
            .with_crc(CrcConfig::ccitt16())
            .unwrap();
        let cfg = SimConfig {
            frames: 100,
            ..SimConfig::default()
        };
        let s = run_point(DecoderKind::Minsum, &code, 9.0, &cfg).unwrap();
        assert_eq!((s.frame_errors, s.fer), (0, 0.0));
        assert!((s.fer_ci95 - 0.029_957).abs() < 1e-5);
    }

    #[test]
    fn empty_table_writes_header() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim_end(),
            CSV_HEADER.join(",")
        );
        assert!(read_csv(&CSV_HEADER.join(",").into_bytes()[..])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let code = construct_code(64, 32, 2.0)
            .unwrap()
            .with_crc(CrcConfig::ccitt16())
            .unwrap();
        let cfg = SimConfig {
            frames: 50,
            ..SimConfig::default()
        };
        let rows = run_sweep(DecoderKind::Minsum, &code, &[1.0, 3.0], &cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "decoder,N,K,ebno_db,frames,frame_errors,bit_errors,fer,ber,fer_ci95,mean_iters,mean_ticks\n"
        ));
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
    }
}
