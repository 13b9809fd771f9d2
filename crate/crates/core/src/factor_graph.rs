//! BP factor-graph indexing, static frozen-flag propagation and the
//! classification of computing units (CUs) into full and simplified types.
//!
//! Node stages run `0..=n` from the source side (`u`, stage 0) to the channel
//! side (`x`, stage `n`). CU `k` of stage `s` joins left nodes
//! `(s, top)`, `(s, bottom)` to right nodes `(s + 1, top)`, `(s + 1, bottom)`
//! where, with `half = 2^s`, `top = 2·half·(k / half) + k % half` and
//! `bottom = top + half`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polar_code::PolarCode;

/// A node coordinate: `stage ∈ 0..=n`, `pos ∈ 0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    pub stage: usize,
    pub pos: usize,
}

/// The four nodes touched by one CU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CuNodes {
    pub top_left: Node,
    pub bottom_left: Node,
    pub top_right: Node,
    pub bottom_right: Node,
}

/// Position pair of one CU; left and right nodes share positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CuPair {
    pub top: usize,
    pub bottom: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphIndex {
    n_len: usize,
    stages: usize,
}

impl GraphIndex {
    pub fn new(n_len: usize) -> Result<Self> {
        if n_len < 2 || !n_len.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "code length {n_len} is not a power of two >= 2"
            )));
        }
        Ok(Self {
            n_len,
            stages: n_len.trailing_zeros() as usize,
        })
    }

    pub fn n(&self) -> usize {
        self.n_len
    }

    /// Number of CU stages (`log2 N`).
    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn cus_per_stage(&self) -> usize {
        self.n_len / 2
    }

    pub fn total_cus(&self) -> usize {
        self.cus_per_stage() * self.stages
    }

    #[inline]
    pub fn pair(&self, stage: usize, k: usize) -> CuPair {
        debug_assert!(stage < self.stages && k < self.n_len / 2);
        let half = 1usize << stage;
        let top = 2 * half * (k / half) + k % half;
        CuPair {
            top,
            bottom: top + half,
        }
    }

    pub fn cu_nodes(&self, stage: usize, k: usize) -> CuNodes {
        let CuPair { top, bottom } = self.pair(stage, k);
        CuNodes {
            top_left: Node { stage, pos: top },
            bottom_left: Node { stage, pos: bottom },
            top_right: Node {
                stage: stage + 1,
                pos: top,
            },
            bottom_right: Node {
                stage: stage + 1,
                pos: bottom,
            },
        }
    }

    pub fn pairs(&self, stage: usize) -> impl Iterator<Item = CuPair> + '_ {
        (0..self.cus_per_stage()).map(move |k| self.pair(stage, k))
    }

    /// Pushes hard bits from stage 0 to stage `n` with an XOR at every CU.
    pub fn propagate_hard(&self, u: &[u8]) -> Vec<u8> {
        let mut v = u.to_vec();
        for stage in 0..self.stages {
            for CuPair { top, bottom } in self.pairs(stage) {
                v[top] ^= v[bottom];
            }
        }
        v
    }
}

/// Per-node flag: the right-going message at `(stage, pos)` is the frozen prior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenFlags {
    flags: Vec<Vec<bool>>,
}

impl FrozenFlags {
    pub fn r_frozen(&self, stage: usize, pos: usize) -> bool {
        self.flags[stage][pos]
    }

    pub fn stage(&self, stage: usize) -> &[bool] {
        &self.flags[stage]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().flatten().filter(|&&f| f).count()
    }
}

/// Left-to-right propagation: the top right output is frozen iff both right-going
/// inputs are, the bottom right output iff the bottom input is.
pub fn propagate_frozen_flags(code: &PolarCode, graph: &GraphIndex) -> Result<FrozenFlags> {
    if code.n() != graph.n() {
        return Err(Error::LengthMismatch {
            expected: graph.n(),
            actual: code.n(),
        });
    }
    let mut flags = Vec::with_capacity(graph.stages() + 1);
    flags.push(code.frozen_mask().to_vec());
    for stage in 0..graph.stages() {
        let left = &flags[stage];
        let mut right = vec![false; graph.n()];
        for CuPair { top, bottom } in graph.pairs(stage) {
            right[top] = left[top] && left[bottom];
            right[bottom] = left[bottom];
        }
        flags.push(right);
    }
    Ok(FrozenFlags { flags })
}

/// CU variants. Types I–III depend on which right-going inputs are frozen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CuType {
    Full,
    /// Both right-going inputs frozen.
    TypeI,
    /// Only the top right-going input frozen.
    TypeII,
    /// Only the bottom right-going input frozen.
    TypeIII,
}

impl CuType {
    pub fn classify(top_frozen: bool, bottom_frozen: bool) -> Self {
        match (top_frozen, bottom_frozen) {
            (true, true) => CuType::TypeI,
            (true, false) => CuType::TypeII,
            (false, true) => CuType::TypeIII,
            (false, false) => CuType::Full,
        }
    }

    /// FM/GM count of the right-going (R) update.
    pub fn r_units(self) -> UnitCount {
        match self {
            CuType::Full => UnitCount { fm: 2, gm: 2 },
            CuType::TypeI => UnitCount { fm: 0, gm: 0 },
            CuType::TypeII => UnitCount { fm: 0, gm: 2 },
            CuType::TypeIII => UnitCount { fm: 0, gm: 0 },
        }
    }

    /// FM/GM count of the left-going (L) update.
    pub fn l_units(self) -> UnitCount {
        match self {
            CuType::Full => UnitCount { fm: 2, gm: 2 },
            // top output passes through, bottom is g(L_top, L_bottom)
            CuType::TypeI => UnitCount { fm: 0, gm: 1 },
            // bottom output loses its FM
            CuType::TypeII => UnitCount { fm: 1, gm: 2 },
            // top output passes through
            CuType::TypeIII => UnitCount { fm: 1, gm: 1 },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitCount {
    pub fm: usize,
    pub gm: usize,
}

impl std::ops::Add for UnitCount {
    type Output = UnitCount;

    fn add(self, rhs: Self) -> Self {
        UnitCount {
            fm: self.fm + rhs.fm,
            gm: self.gm + rhs.gm,
        }
    }
}

/// CU type of every CU plus aggregate FM/GM requirements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CuTypeMap {
    types: Vec<Vec<CuType>>,
}

impl CuTypeMap {
    /// Every CU full; the unsimplified baseline network.
    pub fn all_full(graph: &GraphIndex) -> Self {
        Self {
            types: vec![vec![CuType::Full; graph.cus_per_stage()]; graph.stages()],
        }
    }

    pub fn cu_type(&self, stage: usize, k: usize) -> CuType {
        self.types[stage][k]
    }

    pub fn stage(&self, stage: usize) -> &[CuType] {
        &self.types[stage]
    }

    pub fn count_of(&self, ty: CuType) -> usize {
        self.types.iter().flatten().filter(|&&t| t == ty).count()
    }

    /// Units needed by the L-update and R-update networks combined.
    pub fn required(&self) -> UnitCount {
        self.types
            .iter()
            .flatten()
            .fold(UnitCount::default(), |acc, t| {
                acc + t.l_units() + t.r_units()
            })
    }

    /// Units of the all-full baseline (4 FM + 4 GM per CU).
    pub fn baseline(&self) -> UnitCount {
        let cus: usize = self.types.iter().map(Vec::len).sum();
        UnitCount {
            fm: 4 * cus,
            gm: 4 * cus,
        }
    }

    pub fn report(&self, n_len: usize, k_dim: usize) -> ReductionReport {
        let total = self.baseline();
        let req = self.required();
        let ratio = |saved: usize, total: usize| {
            if total == 0 {
                0.0
            } else {
                saved as f64 / total as f64
            }
        };
        ReductionReport {
            n: n_len,
            k: k_dim,
            fm_total: total.fm,
            fm_saved: total.fm - req.fm,
            gm_total: total.gm,
            gm_saved: total.gm - req.gm,
            ratios: ReductionRatios {
                fm: ratio(total.fm - req.fm, total.fm),
                gm: ratio(total.gm - req.gm, total.gm),
            },
        }
    }
}

/// Classifies each CU from the frozen flags on its two left (R-input) nodes.
pub fn classify_cu_types(flags: &FrozenFlags, graph: &GraphIndex) -> CuTypeMap {
    let types = (0..graph.stages())
        .map(|stage| {
            let left = flags.stage(stage);
            graph
                .pairs(stage)
                .map(|p| CuType::classify(left[p.top], left[p.bottom]))
                .collect()
        })
        .collect();
    CuTypeMap { types }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionRatios {
    pub fm: f64,
    pub gm: f64,
}

/// FM/GM savings of the simplified network relative to the all-full one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub fm_total: usize,
    pub fm_saved: usize,
    pub gm_total: usize,
    pub gm_saved: usize,
    pub ratios: ReductionRatios,
}

impl ReductionReport {
    pub fn for_code(code: &PolarCode) -> Result<Self> {
        let graph = GraphIndex::new(code.n())?;
        let flags = propagate_frozen_flags(code, &graph)?;
        Ok(classify_cu_types(&flags, &graph).report(code.n(), code.k()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
