//! Early-termination judgments shared by all decoders.
//!
//! With a CRC configured both sides check the CRC of the K message bits.
//! Without one, the left side requires the re-encoded source estimate to match
//! the channel-side hard decision and the right side requires the recovered
//! source vector to be zero on every frozen position.

use serde::{Deserialize, Serialize};

use crate::polar_code::{polar_transform, PolarCode};

/// Which end of the factor graph produced the accepted estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    None,
}

/// Outcome of decoding one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    /// Source-side estimate, length N; frozen positions are 0.
    pub u_hat: Vec<u8>,
    /// Payload bits (message without the CRC).
    pub info_hat: Vec<u8>,
    pub converged: bool,
    /// Iterations used, at most `max_iter`.
    pub iterations: usize,
    /// Clock ticks used. Equal to `iterations` for the reference decoders.
    pub ticks: usize,
    pub terminated_side: Side,
}

impl DecodeResult {
    pub(crate) fn new(
        code: &PolarCode,
        u_hat: Vec<u8>,
        converged: bool,
        iterations: usize,
        ticks: usize,
        terminated_side: Side,
    ) -> Self {
        let mut info_hat = code.u_to_message(&u_hat);
        info_hat.truncate(code.payload_len());
        Self {
            u_hat,
            info_hat,
            converged,
            iterations,
            ticks,
            terminated_side,
        }
    }
}

/// Accepts a left-side estimate `u_hat` (frozen bits already zero).
pub fn accept_left(code: &PolarCode, u_hat: &[u8], x_hard: &[u8]) -> bool {
    if code.crc().is_some() {
        code.crc_check(&code.u_to_message(u_hat))
    } else {
        let mut x = u_hat.to_vec();
        polar_transform(&mut x);
        x == x_hard
    }
}

/// Recovers `u` from a right-side hard codeword and judges it. Returns the
/// source estimate (frozen positions cleared) when accepted.
pub fn accept_right(code: &PolarCode, x_hard: &[u8]) -> Option<Vec<u8>> {
    let mut u = x_hard.to_vec();
    polar_transform(&mut u);
    let ok = if code.crc().is_some() {
        code.crc_check(&code.u_to_message(&u))
    } else {
        (0..code.n()).all(|i| !code.is_frozen(i) || u[i] == 0)
    };
    if ok {
        for i in 0..code.n() {
            if code.is_frozen(i) {
                u[i] = 0;
            }
        }
        Some(u)
    } else {
        None
    }
}
