use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use ecspd::polar_code::{construct_code, CrcConfig, PolarCode, DEFAULT_DESIGN_EBNO_DB};
use ecspd::sim::{make_frame, noise_density, run_point, write_csv, DecoderKind, SimConfig};
use ecspd::stochastic::divergence_report;
use ecspd::{
    build_decoder, CuMode, EcspdConfig, GmOutput, PtMode, PtRounding, ReductionReport, Schedule,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DecoderArg {
    Bp,
    Minsum,
    Ecspd,
    EcspdFullCu,
}

impl From<DecoderArg> for DecoderKind {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::Bp => Self::Bp,
            DecoderArg::Minsum => Self::Minsum,
            DecoderArg::Ecspd => Self::Ecspd,
            DecoderArg::EcspdFullCu => Self::EcspdFullCu,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PtModeArg {
    Exact,
    Logic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CuModeArg {
    Simplified,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RoundingArg {
    TowardZero,
    Floor,
    Nearest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GmOutputArg {
    Updated,
    Registered,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Both,
    Alternate,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CrcArg {
    Ccitt16,
    None,
}

/// Monte-Carlo FER/BER simulation of polar BP, min-sum and correlated
/// stochastic decoders over BPSK/AWGN.
#[derive(Debug, Parser)]
#[command(name = "ecspd-sim", version)]
struct Cli {
    /// Code length (power of two).
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Number of information bits, CRC included.
    #[arg(long, default_value_t = 128)]
    k: usize,
    /// Frozen mask file (one 0/1 per position); overrides the built-in construction.
    #[arg(long)]
    frozen_file: Option<PathBuf>,
    /// Design Eb/N0 of the built-in construction, dB.
    #[arg(long, default_value_t = DEFAULT_DESIGN_EBNO_DB)]
    design_ebno: f64,
    #[arg(long, value_enum, default_value = "ccitt16")]
    crc: CrcArg,
    /// Comma-separated Eb/N0 points, dB.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    ebno: Vec<f64>,
    /// Frames per point (upper bound).
    #[arg(long, default_value_t = 10_000)]
    frames: u64,
    /// Stop a point after this many frame errors.
    #[arg(long, default_value_t = 100)]
    max_errors: u64,
    /// Comma-separated decoders.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ecspd")]
    decoder: Vec<DecoderArg>,
    #[arg(long, default_value_t = 40)]
    max_iter: usize,
    /// Clock ticks per judged iteration of the stochastic decoder.
    #[arg(long, default_value_t = 20)]
    ticks_per_iteration: usize,
    #[arg(long, default_value_t = 7)]
    llr_bits: u32,
    /// Channel quantizer gain applied to 4·y.
    #[arg(long, default_value_t = 6.0)]
    llr_scale: f64,
    #[arg(long, default_value_t = 6)]
    pt_bits: u32,
    #[arg(long, default_value_t = 2)]
    alpha_exp: u32,
    #[arg(long, value_enum, default_value = "exact")]
    pt_mode: PtModeArg,
    #[arg(long, value_enum, default_value = "nearest")]
    pt_rounding: RoundingArg,
    #[arg(long, value_enum, default_value = "registered")]
    gm_output: GmOutputArg,
    #[arg(long, value_enum, default_value = "simplified")]
    cu_mode: CuModeArg,
    #[arg(long, value_enum, default_value = "both")]
    schedule: ScheduleArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the FM/GM reduction report of the code as JSON.
    #[arg(long)]
    reduction_report: Option<PathBuf>,
    /// Also write the exhaustive exact-vs-logic tracker divergence CSV.
    #[arg(long)]
    divergence_report: Option<PathBuf>,
    /// Write a per-tick trace of the first frame at the first Eb/N0 point.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl Cli {
    fn ecspd_config(&self) -> EcspdConfig {
        EcspdConfig {
            max_iter: self.max_iter,
            ticks_per_iteration: self.ticks_per_iteration,
            llr_bits: self.llr_bits,
            llr_scale: self.llr_scale,
            pt_bits: self.pt_bits,
            alpha_exp: self.alpha_exp,
            judge_alpha_exp: self.alpha_exp,
            pt_mode: match self.pt_mode {
                PtModeArg::Exact => PtMode::Exact,
                PtModeArg::Logic => PtMode::Logic,
            },
            pt_rounding: match self.pt_rounding {
                RoundingArg::TowardZero => PtRounding::TowardZero,
                RoundingArg::Floor => PtRounding::Floor,
                RoundingArg::Nearest => PtRounding::Nearest,
            },
            gm_output: match self.gm_output {
                GmOutputArg::Updated => GmOutput::Updated,
                GmOutputArg::Registered => GmOutput::Registered,
            },
            cu_mode: match self.cu_mode {
                CuModeArg::Simplified => CuMode::Simplified,
                CuModeArg::Full => CuMode::Full,
            },
            schedule: match self.schedule {
                ScheduleArg::Both => Schedule::BothPerTick,
                ScheduleArg::Alternate => Schedule::Alternate,
            },
            sobol_offset: 0,
        }
    }

    fn code(&self) -> ecspd::Result<PolarCode> {
        let code = match &self.frozen_file {
            Some(path) => {
                let code = PolarCode::from_mask(PolarCode::load_mask(path)?)?;
                if code.n() != self.n || code.k() != self.k {
                    return Err(ecspd::Error::MaskFormat(format!(
                        "mask defines ({}, {}), expected ({}, {})",
                        code.n(),
                        code.k(),
                        self.n,
                        self.k
                    )));
                }
                code
            }
            None => construct_code(self.n, self.k, self.design_ebno)?,
        };
        match self.crc {
            CrcArg::Ccitt16 => code.with_crc(CrcConfig::ccitt16()),
            CrcArg::None => Ok(code),
        }
    }
}

fn run(cli: &Cli) -> ecspd::Result<()> {
    if cli.ebno.iter().any(|e| !e.is_finite()) {
        return Err(ecspd::Error::InvalidParameter(
            "Eb/N0 values must be finite".into(),
        ));
    }
    if let Some(t) = cli.threads {
        // Fails only if a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let code = cli.code()?;
    let ecspd_cfg = cli.ecspd_config();

    if let Some(path) = &cli.reduction_report {
        std::fs::write(path, ReductionReport::for_code(&code)?.to_json()?)?;
    }
    if let Some(path) = &cli.divergence_report {
        divergence_report(cli.pt_bits, cli.alpha_exp)?.write_csv(File::create(path)?)?;
    }
    if let (Some(path), Some(&e)) = (&cli.trace, cli.ebno.first()) {
        let dec = build_decoder(&code, &ecspd_cfg)?;
        let n0 = noise_density(e, code.rate());
        let frame = make_frame(&code, n0, cli.seed, 0)?;
        let mut out = BufWriter::new(File::create(path)?);
        dec.decode_traced(&frame.y, n0, &mut out)?;
        out.flush()?;
    }

    let cfg = SimConfig {
        frames: cli.frames,
        max_errors: cli.max_errors,
        max_iter: cli.max_iter,
        seed: cli.seed,
        ecspd: ecspd_cfg,
    };
    let mut rows = Vec::new();
    for &d in &cli.decoder {
        for &e in &cli.ebno {
            let row = run_point(d.into(), &code, e, &cfg)?;
            if row.frame_errors < 30 {
                eprintln!(
                    "note: {} at {e} dB has {} frame errors; the normal-approximation CI is loose",
                    row.decoder, row.frame_errors
                );
            }
            rows.push(row);
        }
    }
    match &cli.out {
        Some(path) => write_csv(&rows, File::create(path)?)?,
        None => write_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
