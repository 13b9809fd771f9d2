//! Correlated stochastic computing primitives.
//!
//! Every stream in the decoder is produced by comparing a threshold against
//! one shared Sobol source, so any two streams are maximally positively
//! correlated (SCC = +1). Under that correlation an AND gate computes `min`,
//! which is exactly the magnitude part of the min-sum check update.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One clock of a signed stochastic stream: `-1`, `0` or `+1`.
///
/// Hardware carries it as a (sign, magnitude) bit pair; the value is zero
/// exactly when the magnitude bit is clear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TernarySymbol(i8);

impl TernarySymbol {
    pub const ZERO: Self = Self(0);
    pub const PLUS: Self = Self(1);
    pub const MINUS: Self = Self(-1);

    pub fn new(value: i8) -> Result<Self> {
        match value {
            -1..=1 => Ok(Self(value)),
            v => Err(Error::InvalidParameter(format!(
                "symbol value {v} not in -1..=1"
            ))),
        }
    }

    /// Builds a symbol from its sign and magnitude bits. A clear magnitude
    /// bit yields zero regardless of the sign bit.
    pub fn from_bits(sign: bool, magnitude: bool) -> Self {
        match (magnitude, sign) {
            (false, _) => Self(0),
            (true, false) => Self(1),
            (true, true) => Self(-1),
        }
    }

    pub fn value(self) -> i8 {
        self.0
    }

    /// Set for negative symbols.
    pub fn sign_bit(self) -> bool {
        self.0 < 0
    }

    pub fn magnitude_bit(self) -> bool {
        self.0 != 0
    }
}

impl fmt::Display for TernarySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.0)
    }
}

/// One-dimensional base-2 Sobol generator in Gray-code order.
///
/// Direction vectors are `v_i = 2^{w-1-i}`, so the state after `k` ticks is
/// the bit reversal of `gray(k)`. The counter wraps every `2^w` ticks and
/// the sequence restarts at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SobolSource {
    bits: u32,
    state: u32,
    counter: u32,
    directions: Vec<u32>,
}

impl SobolSource {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return Err(Error::InvalidParameter(format!(
                "sobol width {bits} outside 1..=16"
            )));
        }
        Ok(Self {
            bits,
            state: 0,
            counter: 0,
            directions: (0..bits).map(|i| 1u32 << (bits - 1 - i)).collect(),
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn period(&self) -> u32 {
        1 << self.bits
    }

    pub fn direction_vectors(&self) -> &[u32] {
        &self.directions
    }

    pub fn counter(&self) -> u32 {
        self.counter
    }

    /// Jumps to tick `offset` (mod the period).
    pub fn seek(&mut self, offset: u32) {
        let k = offset & (self.period() - 1);
        let gray = k ^ (k >> 1);
        self.counter = k;
        self.state = gray.reverse_bits() >> (32 - self.bits);
    }

    pub fn reset(&mut self) {
        self.seek(0);
    }

    /// Returns the current value and advances one tick.
    #[inline]
    pub fn next_value(&mut self) -> u32 {
        let out = self.state;
        self.counter = (self.counter + 1) & (self.period() - 1);
        self.state = if self.counter == 0 {
            0
        } else {
            self.state ^ self.directions[self.counter.trailing_zeros() as usize]
        };
        out
    }
}

/// Threshold comparison turning a signed level into a ternary symbol.
///
/// `+1` when `level > 0` and `r <= |level|`, `-1` when `level < 0` and
/// `r < |level|`, `0` otherwise (including `level == 0`).
#[inline]
pub fn threshold_symbol(level: i32, r: u32) -> i8 {
    if level > 0 {
        i8::from(r <= level as u32)
    } else if level < 0 {
        -i8::from(r < level.unsigned_abs())
    } else {
        0
    }
}

/// Converts a quantized channel LLR into this tick's stream symbol.
pub fn llr_to_symbol(llr_q: i32, r: u32, bits: u32) -> Result<TernarySymbol> {
    let full = 1i64 << bits;
    if i64::from(llr_q).abs() > full {
        return Err(Error::InvalidParameter(format!(
            "|llr| = {} exceeds full scale {full}",
            llr_q.unsigned_abs()
        )));
    }
    Ok(TernarySymbol(threshold_symbol(llr_q, r)))
}

/// Unipolar stream bit with probability `level / 2^w` over a full period.
#[inline]
pub fn unipolar_bit(level: u32, r: u32) -> bool {
    r < level
}

/// Source-side prior: `+1` on frozen positions, `0` on information positions.
pub fn frozen_symbol(frozen: bool) -> TernarySymbol {
    if frozen {
        TernarySymbol::PLUS
    } else {
        TernarySymbol::ZERO
    }
}

/// F module: AND of magnitudes, XOR of signs.
#[inline]
pub fn fm(a: TernarySymbol, b: TernarySymbol) -> TernarySymbol {
    TernarySymbol::from_bits(
        a.sign_bit() ^ b.sign_bit(),
        a.magnitude_bit() && b.magnitude_bit(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PtMode {
    /// Shift-and-add form of the relaxation update.
    Exact,
    /// Combinational top-three-bit update of a `w`-bit offset-binary register.
    Logic,
}

/// Rounding of the exact-mode update's `2^{-m}` division.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum PtRounding {
    #[default]
    TowardZero,
    /// Arithmetic right shift.
    Floor,
    /// Half away from zero.
    Nearest,
}

impl PtRounding {
    /// `num / 2^shift` under this rounding rule.
    #[inline]
    pub fn shift_div(self, num: i64, shift: u32) -> i64 {
        if shift == 0 {
            return num;
        }
        let mask = (1i64 << shift) - 1;
        match self {
            Self::Floor => num >> shift,
            Self::TowardZero => {
                if num < 0 {
                    (num + mask) >> shift
                } else {
                    num >> shift
                }
            }
            Self::Nearest => {
                let half = 1i64 << (shift - 1);
                if num < 0 {
                    -((-num + half) >> shift)
                } else {
                    (num + half) >> shift
                }
            }
        }
    }
}

/// Shared tracker parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackerParams {
    /// Register width `w`; full scale (`x̃ = 1`) is `2^{w-1}`.
    pub bits: u32,
    /// Relaxation exponent, `α = 2^{-m}`.
    pub alpha_exp: u32,
    pub mode: PtMode,
    /// Width of the shared source the output is compared against.
    pub source_bits: u32,
    pub rounding: PtRounding,
}

impl TrackerParams {
    pub fn new(bits: u32, alpha_exp: u32, mode: PtMode, source_bits: u32) -> Result<Self> {
        if !(3..=24).contains(&bits) {
            return Err(Error::InvalidParameter(format!(
                "tracker width {bits} outside 3..=24"
            )));
        }
        if alpha_exp > 16 {
            return Err(Error::InvalidParameter(format!(
                "relaxation exponent {alpha_exp} too large"
            )));
        }
        if source_bits == 0 || source_bits > 16 {
            return Err(Error::InvalidParameter(format!(
                "source width {source_bits} outside 1..=16"
            )));
        }
        Ok(Self {
            bits,
            alpha_exp,
            mode,
            source_bits,
            rounding: PtRounding::TowardZero,
        })
    }

    pub fn with_rounding(mut self, rounding: PtRounding) -> Self {
        self.rounding = rounding;
        self
    }

    pub fn full_scale(&self) -> i32 {
        1 << (self.bits - 1)
    }

    /// Register contents at reset (value zero).
    pub fn reset_register(&self) -> i32 {
        match self.mode {
            PtMode::Exact => 0,
            PtMode::Logic => self.full_scale(),
        }
    }

    /// Signed value held by a register, in units where full scale is `2^{w-1}`.
    #[inline]
    pub fn value(&self, reg: i32) -> i32 {
        match self.mode {
            PtMode::Exact => reg,
            PtMode::Logic => reg - self.full_scale(),
        }
    }

    #[inline]
    pub fn update(&self, reg: i32, x: i8) -> i32 {
        match self.mode {
            PtMode::Exact => pt_update_rounded(reg, x, self.alpha_exp, self.bits, self.rounding),
            PtMode::Logic => {
                if x == 0 {
                    reg
                } else {
                    pt_update_logic(reg as u32, x, self.bits) as i32
                }
            }
        }
    }

    /// Regenerates an output symbol from a register against source value `r`.
    #[inline]
    pub fn output(&self, reg: i32, r: u32) -> i8 {
        let v = self.value(reg);
        let full = 1i32 << self.source_bits;
        let w1 = self.bits - 1;
        // v·2^{source_bits} / 2^{w-1}, toward zero
        let level = if self.source_bits >= w1 {
            v << (self.source_bits - w1)
        } else {
            PtRounding::TowardZero.shift_div(i64::from(v), w1 - self.source_bits) as i32
        };
        threshold_symbol(level.clamp(-full, full), r)
    }
}

/// `reg − 2^{-m}·(reg − X̃)` with `X̃ = x̃·2^{w-1}`, rounded toward zero and
/// saturated to `±(2^w − 1)`.
#[inline]
pub fn pt_update_exact(reg: i32, x: i8, alpha_exp: u32, bits: u32) -> i32 {
    pt_update_rounded(reg, x, alpha_exp, bits, PtRounding::TowardZero)
}

/// [`pt_update_exact`] with a selectable rounding rule.
#[inline]
pub fn pt_update_rounded(reg: i32, x: i8, alpha_exp: u32, bits: u32, rounding: PtRounding) -> i32 {
    let target = i64::from(x) << (bits - 1);
    let num = (i64::from(reg) << alpha_exp) - i64::from(reg) + target;
    let lim = (1i64 << bits) - 1;
    rounding.shift_div(num, alpha_exp).clamp(-lim, lim) as i32
}

/// Combinational tracker update on a `w`-bit register `P` (bits `0..=n+1`,
/// `n = w − 2`). Only `Q_{n+1}`, `Q_n` and `Q_{n−1}` change; `x̃ = 0` holds
/// the register.
pub fn pt_update_logic(reg: u32, x: i8, bits: u32) -> u32 {
    let n = bits - 2;
    let bit = |i: u32| (reg >> i) & 1 == 1;
    let (p_n, p_n1) = (bit(n), bit(n - 1));
    let (q_top, q_n, q_n1) = match x {
        2 => (true, !p_n, p_n1),
        1 => (p_n || !p_n1, !(p_n ^ p_n1), !p_n1),
        -1 => (p_n && !p_n1, p_n ^ p_n1, !p_n1),
        -2 => (false, !p_n, p_n1),
        _ => return reg,
    };
    let low = reg & ((1 << (n - 1)) - 1);
    (u32::from(q_top) << (n + 1)) | (u32::from(q_n) << n) | (u32::from(q_n1) << (n - 1)) | low
}

/// Relaxation register of one G module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbabilityTracker {
    params: TrackerParams,
    reg: i32,
}

impl ProbabilityTracker {
    pub fn new(params: TrackerParams) -> Self {
        Self {
            params,
            reg: params.reset_register(),
        }
    }

    pub fn params(&self) -> &TrackerParams {
        &self.params
    }

    /// Raw register contents.
    pub fn register(&self) -> i32 {
        self.reg
    }

    /// Signed value; `full_scale()` corresponds to a time-average of `x̃ = 1`.
    pub fn value(&self) -> i32 {
        self.params.value(self.reg)
    }

    pub fn update(&mut self, x: i8) {
        self.reg = self.params.update(self.reg, x);
    }

    pub fn output(&self, r: u32) -> TernarySymbol {
        TernarySymbol(self.params.output(self.reg, r))
    }
}

/// G module: adds the two input symbols, updates the tracker and emits a new
/// symbol from the updated register compared against the shared source `r`.
pub fn gm_step(
    pt: &mut ProbabilityTracker,
    a: TernarySymbol,
    b: TernarySymbol,
    r: u32,
) -> TernarySymbol {
    pt.update(a.value() + b.value());
    pt.output(r)
}

/// Empirical stochastic computation correlation of two bit streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SccEstimate {
    pub value: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub p_xy: f64,
    pub samples: usize,
}

/// SCC of two magnitude-bit streams of equal, nonzero length.
pub fn scc_estimate(sx: &[bool], sy: &[bool]) -> Result<SccEstimate> {
    if sx.len() != sy.len() {
        return Err(Error::LengthMismatch {
            expected: sx.len(),
            actual: sy.len(),
        });
    }
    if sx.is_empty() {
        return Err(Error::InvalidParameter("empty streams".into()));
    }
    let n = sx.len() as i128;
    let cx = sx.iter().filter(|&&b| b).count() as i128;
    let cy = sy.iter().filter(|&&b| b).count() as i128;
    let cxy = sx.iter().zip(sy).filter(|(&a, &b)| a && b).count() as i128;
    // Scaled by n²: δ·n² = n·cxy − cx·cy, evaluated exactly.
    let delta = n * cxy - cx * cy;
    let value = if delta > 0 {
        delta as f64 / (n * cx.min(cy) - cx * cy) as f64
    } else if delta < 0 {
        delta as f64 / (cx * cy - n * (cx + cy - n).max(0)) as f64
    } else {
        0.0
    };
    let nf = n as f64;
    Ok(SccEstimate {
        value,
        p_x: cx as f64 / nf,
        p_y: cy as f64 / nf,
        p_xy: cxy as f64 / nf,
        samples: sx.len(),
    })
}

/// One row of the exact-vs-logic tracker comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivergenceRow {
    #[serde(rename = "P")]
    pub register: u32,
    pub x: i8,
    pub exact: i32,
    pub logic: i32,
    pub delta: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub rows: Vec<DivergenceRow>,
    pub max_abs: i32,
    pub mean_abs: f64,
}

/// Compares the combinational update against the exact one for every `w`-bit
/// register state and every adder output `x̃ ∈ {-2..=2}`.
///
/// The logic register is read as offset binary, value `P − 2^{w-1}`; the
/// exact update is applied to that same value.
pub fn divergence_report(bits: u32, alpha_exp: u32) -> Result<DivergenceReport> {
    let logic = TrackerParams::new(bits, alpha_exp, PtMode::Logic, 1)?;
    let mut rows = Vec::with_capacity(5 << bits);
    for p in 0..(1u32 << bits) {
        let v = logic.value(p as i32);
        for x in -2i8..=2 {
            let exact = pt_update_exact(v, x, alpha_exp, bits);
            let lg = logic.value(logic.update(p as i32, x));
            rows.push(DivergenceRow {
                register: p,
                x,
                exact,
                logic: lg,
                delta: lg - exact,
            });
        }
    }
    let max_abs = rows.iter().map(|r| r.delta.abs()).max().unwrap_or(0);
    let mean_abs = rows.iter().map(|r| f64::from(r.delta.abs())).sum::<f64>() / rows.len() as f64;
    Ok(DivergenceReport {
        rows,
        max_abs,
        mean_abs,
    })
}

impl DivergenceReport {
    /// CSV with header `P,x,exact,logic,delta`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sobol_prefix_w3() {
        let mut s = SobolSource::new(3).unwrap();
        let v: Vec<u32> = (0..9).map(|_| s.next_value()).collect();
        assert_eq!(v, vec![0, 4, 6, 2, 3, 7, 5, 1, 0]);
    }

    #[test]
    fn sobol_recurrence_matches_gray_code_formula() {
        // x_k = XOR of v_i over the set bits i of gray(k)
        let mut s = SobolSource::new(6).unwrap();
        let v = s.direction_vectors().to_vec();
        for k in 0..64u32 {
            let gray = k ^ (k >> 1);
            let expected = (0..6)
                .filter(|i| gray >> i & 1 == 1)
                .fold(0, |a, i| a ^ v[i as usize]);
            assert_eq!(s.next_value(), expected, "tick {k}");
        }
    }

    #[test]
    fn sobol_seek_agrees_with_stepping() {
        let mut a = SobolSource::new(6).unwrap();
        for off in 0..130u32 {
            let mut b = SobolSource::new(6).unwrap();
            b.seek(off);
            assert_eq!(a.next_value(), b.next_value(), "offset {off}");
        }
    }

    #[test]
    fn symbol_bits() {
        assert_eq!(TernarySymbol::from_bits(true, false), TernarySymbol::ZERO);
        assert_eq!(TernarySymbol::from_bits(true, true), TernarySymbol::MINUS);
        assert!(!TernarySymbol::ZERO.magnitude_bit());
        assert!(TernarySymbol::new(2).is_err());
    }

    #[test]
    fn llr_to_symbol_cases() {
        for r in 0..64 {
            assert_eq!(llr_to_symbol(0, r, 6).unwrap(), TernarySymbol::ZERO);
            assert_eq!(llr_to_symbol(64, r, 6).unwrap(), TernarySymbol::PLUS);
            assert_eq!(llr_to_symbol(-64, r, 6).unwrap(), TernarySymbol::MINUS);
        }
        assert_eq!(llr_to_symbol(5, 5, 6).unwrap(), TernarySymbol::PLUS);
        assert_eq!(llr_to_symbol(-5, 5, 6).unwrap(), TernarySymbol::ZERO);
        assert_eq!(llr_to_symbol(5, 6, 6).unwrap(), TernarySymbol::ZERO);
        assert!(llr_to_symbol(65, 0, 6).is_err());
    }

    #[test]
    fn fm_cases() {
        use TernarySymbol as S;
        assert_eq!(fm(S::PLUS, S::MINUS), S::MINUS);
        assert_eq!(fm(S::MINUS, S::MINUS), S::PLUS);
        for a in [S::MINUS, S::ZERO, S::PLUS] {
            assert_eq!(fm(a, S::ZERO), S::ZERO);
            assert_eq!(fm(a, S::PLUS), a);
            assert_eq!(fm(a, a).value(), a.value() * a.value());
        }
    }

    #[test]
    fn frozen_symbols() {
        assert_eq!(frozen_symbol(true), TernarySymbol::PLUS);
        assert_eq!(frozen_symbol(false), TernarySymbol::ZERO);
    }

    #[test]
    fn exact_update_examples() {
        assert_eq!(pt_update_exact(0, 2, 2, 6), 16);
        for x in -1i8..=1 {
            let target = i32::from(x) * 32;
            assert_eq!(pt_update_exact(target, x, 2, 6), target);
        }
        // x̃ = 0 decays geometrically to exactly 0.
        let mut reg = 63;
        let mut steps = 0;
        while reg != 0 {
            let next = pt_update_exact(reg, 0, 2, 6);
            assert!(next < reg && next >= (3 * reg) / 4 - 1);
            reg = next;
            steps += 1;
        }
        assert!(steps < 20);
        assert_eq!(pt_update_exact(-63, -2, 2, 6), -63);
    }

    #[test]
    fn exact_update_saturates() {
        assert_eq!(pt_update_exact(63, 2, 0, 6), 63);
        assert_eq!(pt_update_exact(-63, -2, 0, 6), -63);
    }

    #[test]
    fn logic_update_table_rows() {
        // w = 6: bits 0..=5, n = 4.
        assert_eq!(pt_update_logic(0, 2, 6), 0b11_0000);
        assert_eq!(pt_update_logic(0b11_1111, -2, 6), 0b00_1111);
        assert_eq!(pt_update_logic(0b10_1010, 0, 6), 0b10_1010);
        // x̃ = +1 from P = 0: Q5 = 1, Q4 = 1, Q3 = 1.
        assert_eq!(pt_update_logic(0, 1, 6), 0b11_1000);
        // x̃ = −1 from P = 0: Q5 = 0, Q4 = 0, Q3 = 1.
        assert_eq!(pt_update_logic(0, -1, 6), 0b00_1000);
    }

    #[test]
    fn gm_constant_positive_inputs_saturate_monotonically() {
        let p = TrackerParams::new(6, 2, PtMode::Exact, 6).unwrap();
        let mut pt = ProbabilityTracker::new(p);
        let mut last = pt.value();
        let mut out = TernarySymbol::ZERO;
        for t in 0..40u32 {
            out = gm_step(&mut pt, TernarySymbol::PLUS, TernarySymbol::PLUS, t % 64);
            assert!(pt.value() >= last);
            last = pt.value();
        }
        assert!(last >= 60);
        assert_eq!(out, TernarySymbol::PLUS);
    }

    #[test]
    fn scc_basic_cases() {
        let x: Vec<bool> = (0..100).map(|i| i % 3 == 0).collect();
        assert_eq!(scc_estimate(&x, &x).unwrap().value, 1.0);
        let y: Vec<bool> = x.iter().map(|b| !b).collect();
        assert_eq!(scc_estimate(&x, &y).unwrap().value, -1.0);
        assert!(scc_estimate(&x, &y[..10]).is_err());
        assert!(scc_estimate(&[], &[]).is_err());
        let ones = vec![true; 100];
        assert_eq!(scc_estimate(&x, &ones).unwrap().value, 0.0);
    }

    #[test]
    fn divergence_report_is_exhaustive() {
        let rep = divergence_report(6, 2).unwrap();
        assert_eq!(rep.rows.len(), 64 * 5);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("P,x,exact,logic,delta\n"));
        assert_eq!(text.lines().count(), 64 * 5 + 1);
    }
}
