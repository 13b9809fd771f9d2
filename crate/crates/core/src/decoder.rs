//! Clock-level model of the correlated stochastic polar decoder.
//!
//! Every edge of the factor graph carries one ternary symbol per clock. All
//! streams are generated against one shared Sobol source: channel LLRs by
//! threshold comparison, G-module outputs by comparing their tracker
//! register. F modules are a sign XOR plus a magnitude AND.
//!
//! A tick draws one source value, refreshes the channel-side symbols, runs a
//! right-to-left sweep of the L network and a left-to-right sweep of the R
//! network, then advances the judgment trackers on both ends. Each sweep
//! reads the other direction's symbols from the previous tick.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor_graph::{
    classify_cu_types, propagate_frozen_flags, CuType, CuTypeMap, FrozenFlags, GraphIndex,
};
use crate::polar_code::{polar_transform, PolarCode};
use crate::stochastic::{threshold_symbol, PtMode, PtRounding, SobolSource, TrackerParams};
use crate::termination::{accept_left, accept_right, DecodeResult, Side};

/// Which CU network to instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CuMode {
    /// Types I–III shortcuts on frozen-fed CUs.
    Simplified,
    /// Every CU full; frozen priors only enter at stage 0.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Schedule {
    /// L sweep and R sweep on every tick.
    BothPerTick,
    /// L sweep on odd ticks, R sweep on even ticks.
    Alternate,
}

/// When a G module's output stream is regenerated relative to its tracker update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GmOutput {
    /// Compare the freshly updated register (combinational path).
    Updated,
    /// Compare the register value held from the previous tick.
    Registered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcspdConfig {
    /// Judged iteration limit.
    pub max_iter: usize,
    /// Clock ticks per iteration; the tick budget is `max_iter · ticks_per_iteration`.
    pub ticks_per_iteration: usize,
    /// Sign-magnitude channel LLR width; the shared source has `llr_bits − 1` bits.
    pub llr_bits: u32,
    /// Quantizer gain: the channel threshold is `round(4·y·llr_scale)`.
    pub llr_scale: f64,
    /// Probability-tracker register width.
    pub pt_bits: u32,
    /// Relaxation exponent m, `α = 2^{-m}`.
    pub alpha_exp: u32,
    /// Relaxation exponent of the judgment trackers on both ends.
    pub judge_alpha_exp: u32,
    pub pt_mode: PtMode,
    /// Rounding of exact-mode tracker updates.
    pub pt_rounding: PtRounding,
    pub gm_output: GmOutput,
    pub cu_mode: CuMode,
    pub schedule: Schedule,
    /// Starting tick of the Sobol source.
    pub sobol_offset: u32,
}

impl Default for EcspdConfig {
    fn default() -> Self {
        Self {
            max_iter: 40,
            ticks_per_iteration: 20,
            llr_bits: 7,
            llr_scale: 6.0,
            pt_bits: 6,
            alpha_exp: 2,
            judge_alpha_exp: 2,
            pt_mode: PtMode::Exact,
            pt_rounding: PtRounding::Nearest,
            gm_output: GmOutput::Registered,
            cu_mode: CuMode::Simplified,
            schedule: Schedule::BothPerTick,
            sobol_offset: 0,
        }
    }
}

impl EcspdConfig {
    pub fn tick_budget(&self) -> usize {
        self.max_iter * self.ticks_per_iteration
    }

    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || self.ticks_per_iteration == 0 {
            return Err(Error::InvalidParameter(
                "max_iter and ticks_per_iteration must be positive".into(),
            ));
        }
        if !(2..=17).contains(&self.llr_bits) {
            return Err(Error::InvalidParameter(format!(
                "llr_bits {} outside 2..=17",
                self.llr_bits
            )));
        }
        if !(self.llr_scale.is_finite() && self.llr_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "llr_scale {} must be positive",
                self.llr_scale
            )));
        }
        Ok(())
    }
}

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct CuPlan {
    top: usize,
    bottom: usize,
    ty: CuType,
    // tracker indices: [top output, bottom output]
    l_gm: [u32; 2],
    r_gm: [u32; 2],
}

/// Immutable decoder description; share it between worker threads and
/// create one [`DecoderState`] per frame.
#[derive(Debug, Clone)]
pub struct EcspdDecoder {
    code: PolarCode,
    graph: GraphIndex,
    flags: FrozenFlags,
    types: CuTypeMap,
    plan: Vec<Vec<CuPlan>>,
    tracker_count: usize,
    cfg: EcspdConfig,
    params: TrackerParams,
    judge_params: TrackerParams,
    source_bits: u32,
}

/// Instantiates graph, frozen flags, CU types and tracker bank for a code.
pub fn build_decoder(code: &PolarCode, cfg: &EcspdConfig) -> Result<EcspdDecoder> {
    cfg.validate()?;
    let source_bits = cfg.llr_bits - 1;
    let params = TrackerParams::new(cfg.pt_bits, cfg.alpha_exp, cfg.pt_mode, source_bits)?
        .with_rounding(cfg.pt_rounding);
    let judge_params =
        TrackerParams::new(cfg.pt_bits, cfg.judge_alpha_exp, cfg.pt_mode, source_bits)?
            .with_rounding(cfg.pt_rounding);
    let graph = GraphIndex::new(code.n())?;
    let flags = propagate_frozen_flags(code, &graph)?;
    let types = match cfg.cu_mode {
        CuMode::Simplified => classify_cu_types(&flags, &graph),
        CuMode::Full => CuTypeMap::all_full(&graph),
    };

    let mut next = 0u32;
    let mut alloc = |needed: bool| {
        if needed {
            next += 1;
            next - 1
        } else {
            NONE
        }
    };
    let mut plan = Vec::with_capacity(graph.stages());
    for s in 0..graph.stages() {
        let mut stage = Vec::with_capacity(graph.cus_per_stage());
        for (k, p) in graph.pairs(s).enumerate() {
            let ty = types.cu_type(s, k);
            // Which outputs keep a G module, per direction.
            let (l_need, r_need) = match ty {
                CuType::Full => ([true, true], [true, true]),
                CuType::TypeI => ([false, true], [false, false]),
                CuType::TypeII => ([true, true], [true, true]),
                CuType::TypeIII => ([false, true], [false, false]),
            };
            stage.push(CuPlan {
                top: p.top,
                bottom: p.bottom,
                ty,
                l_gm: [alloc(l_need[0]), alloc(l_need[1])],
                r_gm: [alloc(r_need[0]), alloc(r_need[1])],
            });
        }
        plan.push(stage);
    }
    let tracker_count = next as usize;
    debug_assert_eq!(tracker_count, types.required().gm);

    Ok(EcspdDecoder {
        code: code.clone(),
        graph,
        flags,
        types,
        plan,
        tracker_count,
        cfg: cfg.clone(),
        params,
        judge_params,
        source_bits,
    })
}

impl EcspdDecoder {
    pub fn code(&self) -> &PolarCode {
        &self.code
    }

    pub fn graph(&self) -> &GraphIndex {
        &self.graph
    }

    pub fn cu_types(&self) -> &CuTypeMap {
        &self.types
    }

    pub fn frozen_flags(&self) -> &FrozenFlags {
        &self.flags
    }

    pub fn config(&self) -> &EcspdConfig {
        &self.cfg
    }

    /// Number of G-module trackers in the CU network (judgment trackers excluded).
    pub fn tracker_count(&self) -> usize {
        self.tracker_count
    }

    pub fn new_state(&self) -> DecoderState<'_> {
        DecoderState::new(self)
    }

    /// Quantizes `LLR' = 4·y` to sign-magnitude with `llr_bits` bits.
    pub fn quantize(&self, y: f64) -> i32 {
        let max = (1i32 << self.source_bits) - 1;
        let scaled = (4.0 * y * self.cfg.llr_scale).round();
        scaled.clamp(-f64::from(max), f64::from(max)) as i32
    }

    /// Decodes one received frame `y` (BPSK, bit 0 → +1).
    pub fn decode(&self, y: &[f64], n0: f64) -> Result<DecodeResult> {
        let mut st = self.new_state();
        st.load_channel(y, n0)?;
        Ok(st.run(None)?)
    }

    /// As [`decode`](Self::decode), writing a per-tick CSV trace
    /// (`tick,item,index,value`) to `trace`.
    pub fn decode_traced(&self, y: &[f64], n0: f64, trace: &mut dyn Write) -> Result<DecodeResult> {
        let mut st = self.new_state();
        st.load_channel(y, n0)?;
        writeln!(trace, "tick,item,index,value")?;
        st.run(Some(trace))
    }
}

/// Mutable per-frame state: edge symbols, tracker registers and the source.
#[derive(Debug, Clone)]
pub struct DecoderState<'a> {
    dec: &'a EcspdDecoder,
    l: Vec<i8>,
    r: Vec<i8>,
    l_prev: Vec<i8>,
    regs: Vec<i32>,
    judge_left: Vec<i32>,
    judge_right: Vec<i32>,
    llr_q: Vec<i32>,
    sobol: SobolSource,
    ticks: usize,
}

#[inline(always)]
fn gm<const REGISTERED: bool>(p: &TrackerParams, reg: &mut i32, x: i8, r: u32) -> i8 {
    if REGISTERED {
        let out = p.output(*reg, r);
        *reg = p.update(*reg, x);
        out
    } else {
        *reg = p.update(*reg, x);
        p.output(*reg, r)
    }
}

impl<'a> DecoderState<'a> {
    fn new(dec: &'a EcspdDecoder) -> Self {
        let n = dec.code.n();
        let cells = n * (dec.graph.stages() + 1);
        let reset = dec.params.reset_register();
        let mut r = vec![0i8; cells];
        // Frozen priors: stage 0 always; the simplified network also pins
        // every downstream edge it never updates.
        let pinned = match dec.cfg.cu_mode {
            CuMode::Simplified => dec.graph.stages() + 1,
            CuMode::Full => 1,
        };
        for s in 0..pinned {
            for (p, f) in dec.flags.stage(s).iter().enumerate() {
                r[s * n + p] = i8::from(*f);
            }
        }
        let mut sobol = SobolSource::new(dec.source_bits).expect("validated width");
        sobol.seek(dec.cfg.sobol_offset);
        Self {
            dec,
            l: vec![0; cells],
            r,
            l_prev: vec![0; cells],
            regs: vec![reset; dec.tracker_count],
            judge_left: vec![reset; n],
            judge_right: vec![reset; n],
            llr_q: vec![0; n],
            sobol,
            ticks: 0,
        }
    }

    pub fn ticks(&self) -> usize {
        self.ticks
    }

    /// Quantized channel thresholds currently loaded.
    pub fn channel_levels(&self) -> &[i32] {
        &self.llr_q
    }

    /// Stores `LLR'_j = N0·LLR_j = 4·y_j` as quantized stream thresholds.
    /// `n0` cancels and only needs to be a valid noise density.
    pub fn load_channel(&mut self, y: &[f64], n0: f64) -> Result<()> {
        if y.len() != self.dec.code.n() {
            return Err(Error::LengthMismatch {
                expected: self.dec.code.n(),
                actual: y.len(),
            });
        }
        if !(n0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise density {n0} must be positive"
            )));
        }
        for (q, &yj) in self.llr_q.iter_mut().zip(y) {
            *q = self.dec.quantize(yj);
        }
        Ok(())
    }

    /// L symbol at node `(stage, pos)`.
    pub fn l_symbol(&self, stage: usize, pos: usize) -> i8 {
        self.l[stage * self.dec.code.n() + pos]
    }

    /// R symbol at node `(stage, pos)`.
    pub fn r_symbol(&self, stage: usize, pos: usize) -> i8 {
        self.r[stage * self.dec.code.n() + pos]
    }

    pub fn tracker_values(&self) -> Vec<i32> {
        self.regs
            .iter()
            .map(|&g| self.dec.params.value(g))
            .collect()
    }

    /// True when every R edge flagged frozen carries `+1`. Only meaningful
    /// for the simplified network.
    pub fn frozen_edges_hold_prior(&self) -> bool {
        let n = self.dec.code.n();
        (0..=self.dec.graph.stages())
            .all(|s| (0..n).all(|p| !self.dec.flags.r_frozen(s, p) || self.r[s * n + p] == 1))
    }

    /// Advances one clock.
    pub fn tick(&mut self) {
        self.ticks += 1;
        let dec = self.dec;
        let n = dec.code.n();
        let stages = dec.graph.stages();
        let src = self.sobol.next_value();

        let chan = stages * n;
        for j in 0..n {
            self.l[chan + j] = threshold_symbol(self.llr_q[j], src);
        }

        let (do_l, do_r) = match dec.cfg.schedule {
            Schedule::BothPerTick => (true, true),
            Schedule::Alternate => (self.ticks % 2 == 1, self.ticks % 2 == 0),
        };

        if do_r {
            self.l_prev.copy_from_slice(&self.l);
        }
        let registered = dec.cfg.gm_output == GmOutput::Registered;
        if do_l {
            if registered {
                self.sweep_left::<true>(src);
            } else {
                self.sweep_left::<false>(src);
            }
        }
        if do_r {
            if registered {
                self.sweep_right::<true>(src);
            } else {
                self.sweep_right::<false>(src);
            }
        }

        let jp = &dec.judge_params;
        for j in 0..n {
            let x = self.l[j] + self.r[j];
            self.judge_left[j] = jp.update(self.judge_left[j], x);
            let x = self.l[chan + j] + self.r[chan + j];
            self.judge_right[j] = jp.update(self.judge_right[j], x);
        }
    }

    fn sweep_left<const REG: bool>(&mut self, src: u32) {
        let dec = self.dec;
        let n = dec.code.n();
        let p = &dec.params;
        let regs = &mut self.regs;
        for s in (0..dec.graph.stages()).rev() {
            let (lo, hi) = self.l.split_at_mut((s + 1) * n);
            let out = &mut lo[s * n..];
            let inp = &hi[..n];
            let rin = &self.r[s * n..(s + 1) * n];
            for cu in &dec.plan[s] {
                let (t, b) = (cu.top, cu.bottom);
                let (lt, lb, rt, rb) = (inp[t], inp[b], rin[t], rin[b]);
                let [g0, g1] = cu.l_gm;
                match cu.ty {
                    CuType::Full => {
                        out[t] = lt * gm::<REG>(p, &mut regs[g0 as usize], lb + rb, src);
                        out[b] = gm::<REG>(p, &mut regs[g1 as usize], rt * lt + lb, src);
                    }
                    CuType::TypeI => {
                        out[t] = lt;
                        out[b] = gm::<REG>(p, &mut regs[g1 as usize], lt + lb, src);
                    }
                    CuType::TypeII => {
                        out[t] = lt * gm::<REG>(p, &mut regs[g0 as usize], lb + rb, src);
                        out[b] = gm::<REG>(p, &mut regs[g1 as usize], lt + lb, src);
                    }
                    CuType::TypeIII => {
                        out[t] = lt;
                        out[b] = gm::<REG>(p, &mut regs[g1 as usize], rt * lt + lb, src);
                    }
                }
            }
        }
    }

    fn sweep_right<const REG: bool>(&mut self, src: u32) {
        let dec = self.dec;
        let n = dec.code.n();
        let p = &dec.params;
        let regs = &mut self.regs;
        for s in 0..dec.graph.stages() {
            let (lo, hi) = self.r.split_at_mut((s + 1) * n);
            let inp = &lo[s * n..];
            let out = &mut hi[..n];
            let lin = &self.l_prev[(s + 1) * n..(s + 2) * n];
            for cu in &dec.plan[s] {
                let (t, b) = (cu.top, cu.bottom);
                let (lt, lb, rt, rb) = (lin[t], lin[b], inp[t], inp[b]);
                let [g0, g1] = cu.r_gm;
                match cu.ty {
                    CuType::Full => {
                        out[t] = rt * gm::<REG>(p, &mut regs[g0 as usize], lb + rb, src);
                        out[b] = gm::<REG>(p, &mut regs[g1 as usize], rt * lt + rb, src);
                    }
                    CuType::TypeI => {
                        out[t] = 1;
                        out[b] = 1;
                    }
                    CuType::TypeII => {
                        out[t] = gm::<REG>(p, &mut regs[g0 as usize], lb + rb, src);
                        out[b] = gm::<REG>(p, &mut regs[g1 as usize], lt + rb, src);
                    }
                    CuType::TypeIII => {
                        out[t] = rt;
                        out[b] = 1;
                    }
                }
            }
        }
    }

    /// Hard judgments of both ends: the source-side estimate and the
    /// source vector recovered from the channel-side estimate.
    pub fn judge(&self) -> (Vec<u8>, Vec<u8>) {
        let u_left = self.left_decisions();
        let mut u_right = self.right_codeword();
        polar_transform(&mut u_right);
        (u_left, u_right)
    }

    fn left_decisions(&self) -> Vec<u8> {
        let p = &self.dec.judge_params;
        self.judge_left
            .iter()
            .enumerate()
            .map(|(j, &g)| u8::from(!self.dec.code.is_frozen(j) && p.value(g) < 0))
            .collect()
    }

    fn right_codeword(&self) -> Vec<u8> {
        let p = &self.dec.judge_params;
        self.judge_right
            .iter()
            .map(|&g| u8::from(p.value(g) < 0))
            .collect()
    }

    fn write_trace(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let t = self.ticks;
        for (i, v) in self.l.iter().enumerate() {
            writeln!(out, "{t},L,{i},{v}")?;
        }
        for (i, v) in self.r.iter().enumerate() {
            writeln!(out, "{t},R,{i},{v}")?;
        }
        let p = &self.dec.params;
        for (i, &g) in self.regs.iter().enumerate() {
            writeln!(out, "{t},PT,{i},{}", p.value(g))?;
        }
        let p = &self.dec.judge_params;
        for (i, &g) in self.judge_left.iter().enumerate() {
            writeln!(out, "{t},JL,{i},{}", p.value(g))?;
        }
        for (i, &g) in self.judge_right.iter().enumerate() {
            writeln!(out, "{t},JR,{i},{}", p.value(g))?;
        }
        Ok(())
    }

    /// Ticks until a CRC-accepted judgment or the tick budget runs out.
    pub fn run(&mut self, mut trace: Option<&mut dyn Write>) -> Result<DecodeResult> {
        let dec = self.dec;
        let code = &dec.code;
        let budget = dec.cfg.tick_budget();
        let per_iter = dec.cfg.ticks_per_iteration;
        let iterations = |ticks: usize| ticks.div_ceil(per_iter);
        let mut last_left: Option<Vec<u8>> = None;
        let mut last_right: Option<Vec<u8>> = None;

        while self.ticks < budget {
            self.tick();
            if let Some(out) = trace.as_deref_mut() {
                self.write_trace(out)?;
            }
            let x_hard = self.right_codeword();
            let u_left = self.left_decisions();
            // A judgment identical to the previous tick's was already rejected.
            let left_changed = last_left.as_ref() != Some(&u_left);
            let right_changed = last_right.as_ref() != Some(&x_hard);
            if (left_changed || (code.crc().is_none() && right_changed))
                && accept_left(code, &u_left, &x_hard)
            {
                return Ok(DecodeResult::new(
                    code,
                    u_left,
                    true,
                    iterations(self.ticks),
                    self.ticks,
                    Side::Left,
                ));
            }
            if right_changed {
                if let Some(u) = accept_right(code, &x_hard) {
                    return Ok(DecodeResult::new(
                        code,
                        u,
                        true,
                        iterations(self.ticks),
                        self.ticks,
                        Side::Right,
                    ));
                }
            }
            last_left = Some(u_left);
            last_right = Some(x_hard);
        }
        Ok(DecodeResult::new(
            code,
            self.left_decisions(),
            false,
            dec.cfg.max_iter,
            self.ticks,
            Side::None,
        ))
    }
}
