//! Polar codes, their factor graph, floating-point BP references and a
//! clock-level model of a correlated stochastic BP decoder, plus an AWGN
//! simulation harness.

pub mod decoder;
pub mod error;
pub mod factor_graph;
pub mod polar_code;
pub mod reference;
pub mod sim;
pub mod stochastic;
pub mod termination;

pub use decoder::{build_decoder, CuMode, EcspdConfig, EcspdDecoder, GmOutput, Schedule};
pub use error::{Error, Result};
pub use factor_graph::{CuType, GraphIndex, ReductionReport};
pub use polar_code::{construct_code, CrcConfig, PolarCode};
pub use reference::{decode_bp, BpMode, BpParams};
pub use stochastic::{PtMode, PtRounding};
pub use termination::{DecodeResult, Side};
