//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the crate's graph, decoder or construction code.

#![allow(dead_code)]

use ecspd::PolarCode;

/// `x = u·F^{⊗n}` straight from the definition: `x_j` sums every `u_i` whose
/// index covers the bits of `j`.
pub fn encode_by_definition(u: &[u8]) -> Vec<u8> {
    let n = u.len();
    (0..n)
        .map(|j| (0..n).filter(|&i| j & !i == 0).fold(0, |acc, i| acc ^ u[i]))
        .collect()
}

/// Exact erasure probability of every synthetic channel of a length-`n` code
/// on a BEC(`eps`), with a genie supplying all earlier source bits.
///
/// For each erasure pattern, `u_i` is lost iff two source words that agree on
/// `u_0..u_{i−1}` but differ in `u_i` produce codewords agreeing on every
/// unerased position.
pub fn bec_genie_erasure(n: usize, eps: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for pattern in 0u32..(1 << n) {
        let erased = pattern.count_ones() as i32;
        let weight = eps.powi(erased) * (1.0 - eps).powi(n as i32 - erased);
        for (i, p) in out.iter_mut().enumerate() {
            let free = n - 1 - i;
            let lost = (0u32..(1 << free)).any(|tail| {
                let mut v = vec![0u8; n];
                v[i] = 1;
                for t in 0..free {
                    v[i + 1 + t] = ((tail >> t) & 1) as u8;
                }
                let x = encode_by_definition(&v);
                (0..n).all(|j| pattern >> j & 1 == 1 || x[j] == 0)
            });
            if lost {
                *p += weight;
            }
        }
    }
    out
}

/// Right-going belief on every node after one left-to-right pass of min-sum
/// with `+∞` on frozen positions and finite left-going messages. A node is
/// frozen-known iff its belief is infinite.
pub fn symbolic_frozen_flags(mask: &[bool]) -> Vec<Vec<bool>> {
    let n = mask.len();
    let stages = n.trailing_zeros() as usize;
    let f = |a: f64, b: f64| a.signum() * b.signum() * a.abs().min(b.abs());
    let finite_l = 1.0;
    let mut r: Vec<f64> = mask
        .iter()
        .map(|&m| if m { f64::INFINITY } else { 0.0 })
        .collect();
    let mut out = vec![r.iter().map(|v| v.is_infinite()).collect::<Vec<_>>()];
    for s in 0..stages {
        let bit = 1 << s;
        let mut next = vec![0.0; n];
        for j in (0..n).filter(|j| j & bit == 0) {
            let b = j | bit;
            next[j] = f(r[j], finite_l + r[b]);
            next[b] = f(r[j], finite_l) + r[b];
        }
        r = next;
        out.push(r.iter().map(|v| v.is_infinite()).collect());
    }
    out
}

/// Outcome of [`straight_line_minsum`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub u_hat: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
    pub right_side: bool,
}

const BIG: f64 = 1e30;

fn ms(a: f64, b: f64) -> f64 {
    let sa = if a < 0.0 { -1.0 } else { 1.0 };
    let sb = if b < 0.0 { -1.0 } else { 1.0 };
    sa * sb * a.abs().min(b.abs())
}

fn add(a: f64, b: f64) -> f64 {
    (a + b).clamp(-BIG, BIG)
}

fn message_ok(code: &PolarCode, u: &[u8]) -> bool {
    let msg: Vec<u8> = code.info_positions().iter().map(|&p| u[p]).collect();
    code.crc_check(&msg)
}

/// Round-trip min-sum written with explicit bit-pairing loops: positions `j`
/// and `j + 2^s` meet at stage `s`.
pub fn straight_line_minsum(llr: &[f64], code: &PolarCode, max_iter: usize) -> OracleResult {
    let n = llr.len();
    let stages = n.trailing_zeros() as usize;
    let frozen = code.frozen_mask();
    let mut l = vec![vec![0.0f64; n]; stages + 1];
    let mut r = vec![vec![0.0f64; n]; stages + 1];
    l[stages] = llr.to_vec();
    for j in 0..n {
        if frozen[j] {
            r[0][j] = BIG;
        }
    }
    let mut u_left = vec![0u8; n];
    for it in 1..=max_iter {
        for s in (0..stages).rev() {
            let bit = 1 << s;
            for j in 0..n {
                if j & bit != 0 {
                    continue;
                }
                let b = j | bit;
                l[s][j] = ms(l[s + 1][j], add(l[s + 1][b], r[s][b]));
                l[s][b] = add(ms(r[s][j], l[s + 1][j]), l[s + 1][b]);
            }
        }
        for j in 0..n {
            u_left[j] = u8::from(!frozen[j] && l[0][j] + r[0][j] < 0.0);
        }
        let x_hard: Vec<u8> = (0..n)
            .map(|j| u8::from(l[stages][j] + r[stages][j] < 0.0))
            .collect();
        let left_ok = if code.crc().is_some() {
            message_ok(code, &u_left)
        } else {
            encode_by_definition(&u_left) == x_hard
        };
        if left_ok {
            return OracleResult {
                u_hat: u_left,
                converged: true,
                iterations: it,
                right_side: false,
            };
        }

        for s in 0..stages {
            let bit = 1 << s;
            for j in 0..n {
                if j & bit != 0 {
                    continue;
                }
                let b = j | bit;
                r[s + 1][j] = ms(r[s][j], add(l[s + 1][b], r[s][b]));
                r[s + 1][b] = add(ms(r[s][j], l[s + 1][j]), r[s][b]);
            }
        }
        let x_hard: Vec<u8> = (0..n)
            .map(|j| u8::from(l[stages][j] + r[stages][j] < 0.0))
            .collect();
        let mut u = encode_by_definition(&x_hard);
        let right_ok = if code.crc().is_some() {
            message_ok(code, &u)
        } else {
            (0..n).all(|j| !frozen[j] || u[j] == 0)
        };
        if right_ok {
            for j in 0..n {
                if frozen[j] {
                    u[j] = 0;
                }
            }
            return OracleResult {
                u_hat: u,
                converged: true,
                iterations: it,
                right_side: true,
            };
        }
    }
    OracleResult {
        u_hat: u_left,
        converged: false,
        iterations: max_iter,
        right_side: false,
    }
}

/// Gate oracle over one full period of a `w`-bit Sobol source: for unipolar
/// streams of levels `p` and `q` (out of `2^w`), returns the AND, OR and XOR
/// one-counts.
pub fn gate_counts(w: u32, p: u32, q: u32) -> (u32, u32, u32) {
    let mut src = ecspd::stochastic::SobolSource::new(w).unwrap();
    let (mut and, mut or, mut xor) = (0, 0, 0);
    for _ in 0..(1u32 << w) {
        let r = src.next_value();
        let a = ecspd::stochastic::unipolar_bit(p, r);
        let b = ecspd::stochastic::unipolar_bit(q, r);
        and += u32::from(a && b);
        or += u32::from(a || b);
        xor += u32::from(a ^ b);
    }
    (and, or, xor)
}
