//! Floating-point sum-product and min-sum BP decoders on the same graph and
//! round-trip schedule as the stochastic decoder.

use crate::error::{Error, Result};
use crate::factor_graph::{CuPair, GraphIndex};
use crate::polar_code::PolarCode;
use crate::termination::{accept_left, accept_right, DecodeResult, Side};

/// Saturation level standing in for an infinite LLR.
pub const BIG: f64 = 1e30;

#[inline]
fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Min-sum check update: `sign(x)·sign(y)·min(|x|, |y|)`, with `sign(0) = +1`.
#[inline]
pub fn f_minsum(x: f64, y: f64) -> f64 {
    sign(x) * sign(y) * x.abs().min(y.abs())
}

/// Exact check update `2·atanh(tanh(x/2)·tanh(y/2))`.
///
/// Evaluated as `s·(min + ln(1 + e^{-(|x|+|y|)}) − ln(1 + e^{-||x|−|y||}))`,
/// which stays finite for saturated inputs.
#[inline]
pub fn f_exact(x: f64, y: f64) -> f64 {
    let (ax, ay) = (x.abs(), y.abs());
    let mag = ax.min(ay) + (-(ax + ay)).exp().ln_1p() - (-(ax - ay).abs()).exp().ln_1p();
    sign(x) * sign(y) * mag.max(0.0)
}

/// Variable update `x + y`, saturating at `±BIG`.
#[inline]
pub fn g_sum(x: f64, y: f64) -> f64 {
    (x + y).clamp(-BIG, BIG)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpMode {
    Exact,
    MinSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BpParams {
    pub max_iter: usize,
    pub mode: BpMode,
}

impl Default for BpParams {
    fn default() -> Self {
        Self {
            max_iter: 40,
            mode: BpMode::MinSum,
        }
    }
}

/// Left- and right-going LLR messages, `(n + 1) × N` each.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    pub l: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
}

impl MessageState {
    pub fn new(code: &PolarCode, llr: &[f64]) -> Self {
        let n = code.n();
        let stages = code.stages();
        let mut l = vec![vec![0.0; n]; stages + 1];
        let mut r = vec![vec![0.0; n]; stages + 1];
        l[stages].copy_from_slice(llr);
        for (j, r0) in r[0].iter_mut().enumerate() {
            if code.is_frozen(j) {
                *r0 = BIG;
            }
        }
        Self { l, r }
    }

    /// Right-to-left sweep over all stages.
    pub fn sweep_left(&mut self, graph: &GraphIndex, f: impl Fn(f64, f64) -> f64) {
        for s in (0..graph.stages()).rev() {
            let (lo, hi) = self.l.split_at_mut(s + 1);
            let (out, inp) = (&mut lo[s], &hi[0]);
            let r = &self.r[s];
            for CuPair { top, bottom } in graph.pairs(s) {
                out[top] = f(inp[top], g_sum(inp[bottom], r[bottom]));
                out[bottom] = g_sum(f(r[top], inp[top]), inp[bottom]);
            }
        }
    }

    /// Left-to-right sweep over all stages.
    pub fn sweep_right(&mut self, graph: &GraphIndex, f: impl Fn(f64, f64) -> f64) {
        for s in 0..graph.stages() {
            let (lo, hi) = self.r.split_at_mut(s + 1);
            let (inp, out) = (&lo[s], &mut hi[0]);
            let l = &self.l[s + 1];
            for CuPair { top, bottom } in graph.pairs(s) {
                out[top] = f(inp[top], g_sum(l[bottom], inp[bottom]));
                out[bottom] = g_sum(f(inp[top], l[top]), inp[bottom]);
            }
        }
    }

    /// Hard decisions `L + R >= 0 → 0` at a stage.
    pub fn hard(&self, stage: usize) -> Vec<u8> {
        self.l[stage]
            .iter()
            .zip(&self.r[stage])
            .map(|(l, r)| u8::from(l + r < 0.0))
            .collect()
    }
}

/// Decodes one frame of channel LLRs (positive favours bit 0).
///
/// Each iteration runs a full right-to-left sweep and judges the source side,
/// then a full left-to-right sweep and judges the channel side.
pub fn decode_bp(
    llr: &[f64],
    code: &PolarCode,
    graph: &GraphIndex,
    params: &BpParams,
) -> Result<DecodeResult> {
    if llr.len() != code.n() || graph.n() != code.n() {
        return Err(Error::LengthMismatch {
            expected: code.n(),
            actual: llr.len(),
        });
    }
    let f: fn(f64, f64) -> f64 = match params.mode {
        BpMode::Exact => f_exact,
        BpMode::MinSum => f_minsum,
    };
    let stages = graph.stages();
    let mut msg = MessageState::new(code, llr);
    let mut u_left = vec![0u8; code.n()];

    for iter in 1..=params.max_iter {
        msg.sweep_left(graph, f);
        u_left = msg.hard(0);
        for (j, b) in u_left.iter_mut().enumerate() {
            if code.is_frozen(j) {
                *b = 0;
            }
        }
        if accept_left(code, &u_left, &msg.hard(stages)) {
            return Ok(DecodeResult::new(
                code,
                u_left,
                true,
                iter,
                iter,
                Side::Left,
            ));
        }

        msg.sweep_right(graph, f);
        if let Some(u) = accept_right(code, &msg.hard(stages)) {
            return Ok(DecodeResult::new(code, u, true, iter, iter, Side::Right));
        }
    }
    Ok(DecodeResult::new(
        code,
        u_left,
        false,
        params.max_iter,
        params.max_iter,
        Side::None,
    ))
}
