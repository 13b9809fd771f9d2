//! Polar code construction, the `F^{⊗n}` transform and CRC attach/check.
//!
//! Bits are carried as `u8` values in `{0, 1}`. Positions are 0-based in
//! natural (non bit-reversed) order: `x = u · F^{⊗n}` with `F = [1 0; 1 1]`.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Design Eb/N0 used when the caller does not supply one.
pub const DEFAULT_DESIGN_EBNO_DB: f64 = 2.0;

/// Bit-serial CRC parameters (MSB-first, non-reflected).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcConfig {
    pub width: u32,
    pub poly: u32,
    pub init: u32,
    pub xor_out: u32,
}

impl CrcConfig {
    /// CRC-16 with the CCITT polynomial 0x1021 and all-ones preset.
    ///
    /// A nonzero preset keeps the all-zero word from being a valid
    /// message, which matters for decoders whose judgment registers start
    /// at zero.
    pub const fn ccitt16() -> Self {
        Self {
            width: 16,
            poly: 0x1021,
            init: 0xFFFF,
            xor_out: 0,
        }
    }

    /// CRC-16 with the CCITT polynomial and zero preset (XMODEM variant).
    pub const fn ccitt16_zero_init() -> Self {
        Self {
            width: 16,
            poly: 0x1021,
            init: 0,
            xor_out: 0,
        }
    }

    fn mask(&self) -> u32 {
        if self.width >= 32 {
            u32::MAX
        } else {
            (1u32 << self.width) - 1
        }
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.width > 32 {
            return Err(Error::InvalidParameter(format!(
                "crc width {} outside 1..=32",
                self.width
            )));
        }
        Ok(())
    }

    /// CRC register value over `bits`.
    pub fn compute(&self, bits: &[u8]) -> u32 {
        let mask = self.mask();
        let top = self.width - 1;
        let mut reg = self.init & mask;
        for &b in bits {
            let fb = ((reg >> top) & 1) ^ u32::from(b & 1);
            reg = (reg << 1) & mask;
            if fb == 1 {
                reg ^= self.poly & mask;
            }
        }
        (reg ^ self.xor_out) & mask
    }
}

/// Returns `info ∥ crc(info)`, CRC bits MSB first.
pub fn crc_attach(info: &[u8], cfg: &CrcConfig) -> Vec<u8> {
    let crc = cfg.compute(info);
    let mut out = Vec::with_capacity(info.len() + cfg.width as usize);
    out.extend_from_slice(info);
    out.extend((0..cfg.width).rev().map(|i| ((crc >> i) & 1) as u8));
    out
}

/// True iff the trailing `cfg.width` bits equal the CRC of the leading bits.
pub fn crc_check(msg: &[u8], cfg: &CrcConfig) -> bool {
    let w = cfg.width as usize;
    if msg.len() < w {
        return false;
    }
    let (data, tail) = msg.split_at(msg.len() - w);
    let crc = cfg.compute(data);
    tail.iter()
        .enumerate()
        .all(|(i, &b)| u32::from(b & 1) == (crc >> (w - 1 - i)) & 1)
}

/// In-place `x = u · F^{⊗n}` over GF(2). The transform is its own inverse.
///
/// Stage `s` (stride `2^s`) XORs each bottom bit into its top partner, which
/// is the same butterfly the factor graph uses.
pub fn polar_transform(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut stride = 1;
    while stride < n {
        for block in (0..n).step_by(2 * stride) {
            for top in block..block + stride {
                bits[top] ^= bits[top + stride];
            }
        }
        stride *= 2;
    }
}

/// Natural-order Bhattacharyya parameters (log domain) for a code of length
/// `n_len` over a channel with parameter `exp(log_z0)`.
///
/// Split rule: `z[2p] = 2z − z²` (degraded), `z[2p+1] = z²` (upgraded).
pub fn bhattacharyya_log(n_len: usize, log_z0: f64) -> Vec<f64> {
    let mut lz = vec![log_z0];
    while lz.len() < n_len {
        let mut next = Vec::with_capacity(lz.len() * 2);
        for &v in &lz {
            // ln(2z − z²) = ln z + ln(2 − z)
            next.push(v + (2.0 - v.exp()).ln());
            next.push(2.0 * v);
        }
        lz = next;
    }
    lz
}

/// Positions sorted from most to least reliable; ties go to the lower index.
pub fn reliability_order(n_len: usize, design_ebno_db: f64) -> Vec<usize> {
    // Es/N0 is taken at a reference rate of 1/2 so the order does not depend
    // on K, which keeps codes of one length nested.
    let es_n0 = 0.5 * 10f64.powf(design_ebno_db / 10.0);
    let lz = bhattacharyya_log(n_len, -es_n0);
    let mut order: Vec<usize> = (0..n_len).collect();
    order.sort_by(|&a, &b| lz[a].total_cmp(&lz[b]).then(a.cmp(&b)));
    order
}

fn check_length(n_len: usize) -> Result<u32> {
    if n_len < 2 || !n_len.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "code length {n_len} is not a power of two >= 2"
        )));
    }
    Ok(n_len.trailing_zeros())
}

/// A polar code: length, frozen set and optional CRC.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCode {
    n_len: usize,
    k_dim: usize,
    frozen_mask: Vec<bool>,
    info_positions: Vec<usize>,
    crc: Option<CrcConfig>,
}

impl PolarCode {
    /// Builds a code from an explicit frozen mask (`true` = frozen).
    pub fn from_mask(frozen_mask: Vec<bool>) -> Result<Self> {
        check_length(frozen_mask.len())?;
        let info_positions: Vec<usize> = frozen_mask
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (!f).then_some(i))
            .collect();
        Ok(Self {
            n_len: frozen_mask.len(),
            k_dim: info_positions.len(),
            frozen_mask,
            info_positions,
            crc: None,
        })
    }

    /// Attaches a CRC; the CRC must be strictly shorter than K.
    pub fn with_crc(mut self, cfg: CrcConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.width as usize >= self.k_dim {
            return Err(Error::InvalidParameter(format!(
                "crc width {} must be < K = {}",
                cfg.width, self.k_dim
            )));
        }
        self.crc = Some(cfg);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n_len
    }

    pub fn k(&self) -> usize {
        self.k_dim
    }

    pub fn stages(&self) -> usize {
        self.n_len.trailing_zeros() as usize
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen_mask
    }

    pub fn is_frozen(&self, pos: usize) -> bool {
        self.frozen_mask[pos]
    }

    /// Unfrozen positions in increasing order; message bit `i` goes to
    /// `info_positions()[i]`.
    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn crc(&self) -> Option<&CrcConfig> {
        self.crc.as_ref()
    }

    /// Number of payload bits (K minus the CRC width).
    pub fn payload_len(&self) -> usize {
        self.k_dim - self.crc.map_or(0, |c| c.width as usize)
    }

    pub fn rate(&self) -> f64 {
        self.k_dim as f64 / self.n_len as f64
    }

    /// `payload ∥ crc(payload)`, or the payload itself when no CRC is set.
    pub fn crc_attach(&self, payload: &[u8]) -> Result<Vec<u8>> {
        if payload.len() != self.payload_len() {
            return Err(Error::LengthMismatch {
                expected: self.payload_len(),
                actual: payload.len(),
            });
        }
        Ok(match &self.crc {
            Some(cfg) => crc_attach(payload, cfg),
            None => payload.to_vec(),
        })
    }

    /// CRC check of a K-bit message. Always true when no CRC is configured.
    pub fn crc_check(&self, msg: &[u8]) -> bool {
        match &self.crc {
            Some(cfg) => msg.len() == self.k_dim && crc_check(msg, cfg),
            None => msg.len() == self.k_dim,
        }
    }

    /// Places a K-bit message on the information positions; frozen bits are 0.
    pub fn message_to_u(&self, msg: &[u8]) -> Result<Vec<u8>> {
        if msg.len() != self.k_dim {
            return Err(Error::LengthMismatch {
                expected: self.k_dim,
                actual: msg.len(),
            });
        }
        let mut u = vec![0u8; self.n_len];
        for (&pos, &b) in self.info_positions.iter().zip(msg) {
            u[pos] = b & 1;
        }
        Ok(u)
    }

    /// Reads the K message bits back out of a length-N source vector.
    pub fn u_to_message(&self, u: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| u[p]).collect()
    }

    /// `x = u · F^{⊗n}`; frozen positions of `u` must be zero.
    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>> {
        if u.len() != self.n_len {
            return Err(Error::LengthMismatch {
                expected: self.n_len,
                actual: u.len(),
            });
        }
        if let Some(pos) = (0..self.n_len).find(|&i| self.frozen_mask[i] && u[i] != 0) {
            return Err(Error::Contract(format!("frozen position {pos} is nonzero")));
        }
        let mut x = u.to_vec();
        polar_transform(&mut x);
        Ok(x)
    }

    /// Loads a frozen mask from the one-line `0`/`1` text format.
    pub fn load_mask(path: impl AsRef<Path>) -> Result<Vec<bool>> {
        parse_mask(&fs::read_to_string(path)?)
    }

    /// Writes the mask in the one-line `0`/`1` text format.
    pub fn save_mask(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, format!("{}\n", format_mask(&self.frozen_mask)))?;
        Ok(())
    }
}

impl fmt::Display for PolarCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n_len, self.k_dim)
    }
}

/// Parses `N` characters of `0`/`1` (`1` = frozen). Surrounding whitespace is ignored.
pub fn parse_mask(text: &str) -> Result<Vec<bool>> {
    let line = text.trim();
    let mask = line
        .chars()
        .enumerate()
        .map(|(i, c)| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::MaskFormat(format!(
                "unexpected character {other:?} at index {i}"
            ))),
        })
        .collect::<Result<Vec<bool>>>()?;
    if mask.len() < 2 || !mask.len().is_power_of_two() {
        return Err(Error::MaskFormat(format!(
            "mask length {} is not a power of two >= 2",
            mask.len()
        )));
    }
    Ok(mask)
}

pub fn format_mask(mask: &[bool]) -> String {
    mask.iter().map(|&f| if f { '1' } else { '0' }).collect()
}

/// Freezes all but the `k_dim` most reliable positions at the design point.
pub fn construct_code(n_len: usize, k_dim: usize, design_ebno_db: f64) -> Result<PolarCode> {
    check_length(n_len)?;
    if k_dim == 0 || k_dim > n_len {
        return Err(Error::InvalidParameter(format!(
            "K = {k_dim} must satisfy 0 < K <= N = {n_len}"
        )));
    }
    if !design_ebno_db.is_finite() {
        return Err(Error::InvalidParameter(
            "design Eb/N0 must be finite".into(),
        ));
    }
    let mut mask = vec![true; n_len];
    for &pos in reliability_order(n_len, design_ebno_db).iter().take(k_dim) {
        mask[pos] = false;
    }
    PolarCode::from_mask(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_encode(u: &[u8]) -> Vec<u8> {
        // F^{⊗n}[i][j] = 1 iff the bits of j are a subset of the bits of i.
        let n = u.len();
        (0..n)
            .map(|j| (0..n).filter(|&i| j & !i == 0).fold(0, |acc, i| acc ^ u[i]))
            .collect()
    }

    #[test]
    fn n2_k1_freezes_first_position() {
        for db in [-3.0, 0.0, 5.0] {
            let code = construct_code(2, 1, db).unwrap();
            assert_eq!(code.frozen_mask(), &[true, false]);
        }
    }

    #[test]
    fn n4_k2_matches_bhattacharyya_ordering() {
        // z = exp(-0.5); N=4 values: [2a-a², a², 2b-b², b²], a = 2z-z², b = z².
        let z: f64 = (-0.5f64).exp();
        let a = 2.0 * z - z * z;
        let b = z * z;
        let vals = [2.0 * a - a * a, a * a, 2.0 * b - b * b, b * b];
        let mut idx = [0usize, 1, 2, 3];
        idx.sort_by(|&x, &y| vals[x].partial_cmp(&vals[y]).unwrap().then(x.cmp(&y)));
        let mut expected = vec![true; 4];
        expected[idx[0]] = false;
        expected[idx[1]] = false;
        let code = construct_code(4, 2, 0.0).unwrap();
        assert_eq!(code.frozen_mask(), expected.as_slice());
        assert!(code.is_frozen(0));
        assert!(!code.is_frozen(3));
        assert!(code.is_frozen(1) ^ code.is_frozen(2));
    }

    #[test]
    fn n256_k128_cardinality() {
        let code = construct_code(256, 128, 3.0).unwrap();
        assert_eq!(code.frozen_mask().iter().filter(|&&f| f).count(), 128);
        assert_eq!(code.info_positions().len(), 128);
    }

    #[test]
    fn construct_rejects_bad_parameters() {
        assert!(construct_code(3, 1, 0.0).is_err());
        assert!(construct_code(1, 1, 0.0).is_err());
        assert!(construct_code(8, 0, 0.0).is_err());
        assert!(construct_code(8, 9, 0.0).is_err());
        assert!(construct_code(8, 4, f64::NAN).is_err());
    }

    #[test]
    fn encode_examples() {
        let code = PolarCode::from_mask(vec![false; 2]).unwrap();
        assert_eq!(code.encode(&[1, 1]).unwrap(), vec![0, 1]);
        let code = PolarCode::from_mask(vec![false; 4]).unwrap();
        assert_eq!(code.encode(&[0, 0, 0, 1]).unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(code.encode(&[0; 4]).unwrap(), vec![0; 4]);
    }

    #[test]
    fn encode_rejects_nonzero_frozen() {
        let code = PolarCode::from_mask(vec![true, false]).unwrap();
        assert!(matches!(code.encode(&[1, 0]), Err(Error::Contract(_))));
        assert!(matches!(
            code.encode(&[0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn transform_matches_generator_matrix_and_is_involution() {
        for n in [2usize, 4, 8, 16] {
            for word in 0..(1u32 << n) {
                let u: Vec<u8> = (0..n).map(|i| ((word >> i) & 1) as u8).collect();
                let mut x = u.clone();
                polar_transform(&mut x);
                assert_eq!(x, brute_encode(&u));
                polar_transform(&mut x);
                assert_eq!(x, u);
            }
        }
    }

    #[test]
    fn crc_examples() {
        let cfg = CrcConfig::ccitt16();
        let info: Vec<u8> = (0..112).map(|i| ((i * 7 + 3) % 5 == 0) as u8).collect();
        let msg = crc_attach(&info, &cfg);
        assert!(crc_check(&msg, &cfg));
        for i in 0..msg.len() {
            let mut bad = msg.clone();
            bad[i] ^= 1;
            assert!(!crc_check(&bad, &cfg), "flip at {i} undetected");
        }
        let zero = crc_attach(&[0; 112], &CrcConfig::ccitt16_zero_init());
        assert!(zero[112..].iter().all(|&b| b == 0));
        // The all-ones preset makes the zero word invalid.
        assert!(!crc_check(&[0; 128], &cfg));
    }

    #[test]
    fn crc_known_vector() {
        // CRC-16/CCITT-FALSE("123456789") = 0x29B1.
        let bits: Vec<u8> = b"123456789"
            .iter()
            .flat_map(|&c| (0..8).rev().map(move |i| (c >> i) & 1))
            .collect();
        assert_eq!(CrcConfig::ccitt16().compute(&bits), 0x29B1);
        assert_eq!(CrcConfig::ccitt16_zero_init().compute(&bits), 0x31C3);
    }

    #[test]
    fn with_crc_requires_width_below_k() {
        let code = construct_code(16, 8, 0.0).unwrap();
        assert!(code.clone().with_crc(CrcConfig::ccitt16()).is_err());
        let code = construct_code(64, 32, 0.0)
            .unwrap()
            .with_crc(CrcConfig::ccitt16())
            .unwrap();
        assert_eq!(code.payload_len(), 16);
        assert!(matches!(
            code.crc_attach(&[0; 15]),
            Err(Error::LengthMismatch {
                expected: 16,
                actual: 15
            })
        ));
    }

    #[test]
    fn mask_text_format() {
        let mask = parse_mask("1100\n").unwrap();
        assert_eq!(mask, vec![true, true, false, false]);
        assert_eq!(format_mask(&mask), "1100");
        assert!(parse_mask("110").is_err());
        assert!(parse_mask("11a0").is_err());
    }

    #[test]
    fn message_roundtrip() {
        let code = construct_code(8, 4, 1.0).unwrap();
        let msg = vec![1, 0, 1, 1];
        let u = code.message_to_u(&msg).unwrap();
        assert_eq!(code.u_to_message(&u), msg);
        assert!(code.encode(&u).is_ok());
    }
}
