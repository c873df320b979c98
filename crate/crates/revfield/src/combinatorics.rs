//! Combinatorial invariants of the generic strata.
//!
//! The invariant of a stratum is a non-crossing involution on `{0, …, k}`
//! preserving intervals between fixed points. These are in bijection with
//! dispersed Dyck paths of length `k+1`, which is what we enumerate.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest `k` accepted by [`enumerate_strata`].
pub const MAX_ENUM_K: usize = 14;

/// An involution on `{0, …, k}` given by its value table.
///
/// A freshly constructed value may be invalid; [`is_valid_involution`]
/// checks the three structural invariants.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Involution {
    pub k: usize,
    pub map: Vec<usize>,
}

impl Involution {
    pub fn new(map: Vec<usize>) -> Self {
        let k = map.len().saturating_sub(1);
        Involution { k, map }
    }

    pub fn identity(k: usize) -> Self {
        Involution {
            k,
            map: (0..=k).collect(),
        }
    }

    /// Indices with `τ(j) = j`.
    pub fn fixed_points(&self) -> Vec<usize> {
        self.map
            .iter()
            .enumerate()
            .filter(|(j, &v)| *j == v)
            .map(|(j, _)| j)
            .collect()
    }
}

/// A lattice-path step: up `(1,1)`, down `(1,-1)` or flat `(1,0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    Up,
    Down,
    Flat,
}

impl Step {
    pub fn as_char(self) -> char {
        match self {
            Step::Up => 'U',
            Step::Down => 'D',
            Step::Flat => 'F',
        }
    }
}

/// A path with steps in `{U, D, F}`, nonnegative height, zero total rise,
/// and flat steps only at height zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DispersedDyckPath {
    pub steps: Vec<Step>,
}

impl DispersedDyckPath {
    pub fn new(steps: Vec<Step>) -> Self {
        DispersedDyckPath { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks the dispersed Dyck path invariants.
    pub fn is_valid(&self) -> bool {
        let mut height: i64 = 0;
        for step in &self.steps {
            match step {
                Step::Up => height += 1,
                Step::Down => {
                    height -= 1;
                    if height < 0 {
                        return false;
                    }
                }
                Step::Flat => {
                    if height != 0 {
                        return false;
                    }
                }
            }
        }
        height == 0
    }
}

impl fmt::Display for DispersedDyckPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            write!(f, "{}", step.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for DispersedDyckPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut steps = Vec::with_capacity(s.len());
        for c in s.chars() {
            steps.push(match c {
                'U' | 'u' => Step::Up,
                'D' | 'd' => Step::Down,
                'F' | 'f' => Step::Flat,
                other => {
                    return Err(Error::Validation(format!(
                        "invalid path character {other:?}, expected U, D or F"
                    )))
                }
            });
        }
        Ok(DispersedDyckPath::new(steps))
    }
}

impl Serialize for DispersedDyckPath {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DispersedDyckPath {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Slot counts and block decomposition of a stratum.
///
/// `blocks` is the ordered minimal τ-invariant partition of `{0, …, k}`;
/// `m` counts real singular points, `h` homoclinic loops, and `(a, b, c)`
/// are the dimensions of the three analytic-invariant slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumSignature {
    pub m: usize,
    pub h: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub blocks: Vec<Vec<usize>>,
}

/// Landing classes of the separatrices interior to one even block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLanding {
    /// Index of the block within the signature's `blocks`.
    pub block: usize,
    /// Cycles of `σ(h) = τ(h-1)` on the block interior; separatrices whose
    /// index lies in one class land at the same singular point.
    pub classes: Vec<Vec<usize>>,
}

/// Separatrix attachment data reconstructed from the combinatorial invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachmentData {
    /// The values `a_j`, `j = 2, …, q`: each names the symmetric homoclinic
    /// loop joining `s_{a_j}` to `s_{-a_j}`.
    pub homoclinic_indices: Vec<usize>,
    /// Landing classes, one entry per even block.
    pub landing_classes: Vec<BlockLanding>,
}

fn check_well_formed(tau: &Involution) -> Result<()> {
    if tau.map.is_empty() {
        return Err(Error::Validation("involution map is empty".into()));
    }
    if tau.map.len() != tau.k + 1 {
        return Err(Error::Validation(format!(
            "map length {} does not match k = {}",
            tau.map.len(),
            tau.k
        )));
    }
    for (j, &v) in tau.map.iter().enumerate() {
        if v > tau.k {
            return Err(Error::Validation(format!(
                "entry τ({j}) = {v} out of range 0..={}",
                tau.k
            )));
        }
    }
    Ok(())
}

/// Checks the three structural invariants: `τ∘τ = id`, non-crossing, and
/// preservation of the intervals between fixed points.
///
/// A malformed table (wrong length, out-of-range entry) is an error, which
/// is distinct from a well-formed table that fails the invariants.
pub fn is_valid_involution(tau: &Involution) -> Result<bool> {
    check_well_formed(tau)?;
    let map = &tau.map;
    let n = map.len();

    for j in 0..n {
        if map[map[j]] != j {
            return Ok(false);
        }
    }

    // Non-crossing: no i < j < τ(i) < τ(j) among non-fixed indices.
    for i in 0..n {
        let ti = map[i];
        if ti <= i {
            continue;
        }
        for j in (i + 1)..ti {
            let tj = map[j];
            if tj != j && tj > ti {
                return Ok(false);
            }
        }
    }

    // Fixed points split {0,…,k} into segments that τ must map to themselves.
    let mut segment_start = 0usize;
    for j in 0..n {
        if map[j] == j {
            for i in segment_start..j {
                if map[i] < segment_start || map[i] >= j {
                    return Ok(false);
                }
            }
            segment_start = j + 1;
        }
    }
    for i in segment_start..n {
        if map[i] < segment_start {
            return Ok(false);
        }
    }

    Ok(true)
}

fn require_valid(tau: &Involution) -> Result<()> {
    if is_valid_involution(tau)? {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "involution {:?} violates the non-crossing or interval invariants",
            tau.map
        )))
    }
}

/// Encodes a valid involution as a dispersed Dyck path: step `j` is up when
/// `τ(j) > j`, down when `τ(j) < j`, flat when `τ(j) = j`.
pub fn involution_to_dyck(tau: &Involution) -> Result<DispersedDyckPath> {
    require_valid(tau)?;
    let steps = tau
        .map
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            if v > j {
                Step::Up
            } else if v < j {
                Step::Down
            } else {
                Step::Flat
            }
        })
        .collect();
    Ok(DispersedDyckPath::new(steps))
}

/// Inverse of [`involution_to_dyck`]: flat steps become fixed points and
/// each up step is paired with the first down step to its right within the
/// same unit horizontal strip (stack matching).
pub fn dyck_to_involution(path: &DispersedDyckPath) -> Result<Involution> {
    if path.is_empty() {
        return Err(Error::Validation("empty path".into()));
    }
    if !path.is_valid() {
        return Err(Error::Validation(format!(
            "path {path} is not a dispersed Dyck path"
        )));
    }
    let n = path.len();
    let mut map = vec![0usize; n];
    let mut stack: Vec<usize> = Vec::new();
    for (j, step) in path.steps.iter().enumerate() {
        match step {
            Step::Flat => map[j] = j,
            Step::Up => stack.push(j),
            Step::Down => {
                let i = stack.pop().expect("validated path cannot underflow");
                map[i] = j;
                map[j] = i;
            }
        }
    }
    Ok(Involution::new(map))
}

/// All valid involutions on `{0, …, k}` in lexicographic order of the map.
pub fn enumerate_strata(k: usize) -> Result<Vec<Involution>> {
    enumerate_strata_capped(k, MAX_ENUM_K)
}

/// As [`enumerate_strata`] with a caller-chosen capacity limit.
pub fn enumerate_strata_capped(k: usize, max_k: usize) -> Result<Vec<Involution>> {
    if k > max_k {
        return Err(Error::Capacity(format!(
            "k = {k} exceeds the enumeration maximum {max_k}"
        )));
    }
    let mut paths = Vec::new();
    let mut cur = Vec::with_capacity(k + 1);
    gen_paths(k + 1, 0, &mut cur, &mut paths);
    let mut out: Vec<Involution> = paths
        .iter()
        .map(|p| dyck_to_involution(p).expect("generated paths are valid"))
        .collect();
    out.sort_by(|x, y| x.map.cmp(&y.map));
    Ok(out)
}

fn gen_paths(n: usize, height: usize, cur: &mut Vec<Step>, out: &mut Vec<DispersedDyckPath>) {
    let remaining = n - cur.len();
    if remaining == 0 {
        if height == 0 {
            out.push(DispersedDyckPath::new(cur.clone()));
        }
        return;
    }
    if height > remaining {
        return;
    }
    if height + 1 <= remaining - 1 + 1 {
        cur.push(Step::Up);
        gen_paths(n, height + 1, cur, out);
        cur.pop();
    }
    if height > 0 {
        cur.push(Step::Down);
        gen_paths(n, height - 1, cur, out);
        cur.pop();
    }
    if height == 0 {
        cur.push(Step::Flat);
        gen_paths(n, height, cur, out);
        cur.pop();
    }
}

/// Exact binomial coefficient in `u128`.
fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Number of generic strata, `G(k) = C(k+1, ⌊(k+1)/2⌋)`.
///
/// Accepts `k = -1` (conventionally 1). Panics on `k < -1`.
pub fn count_strata(k: i64) -> u128 {
    assert!(k >= -1, "count_strata requires k >= -1, got {k}");
    let n = (k + 1) as u64;
    binom(n, n / 2)
}

/// Number of dispersed Dyck paths of length `n`: `C(n, ⌊n/2⌋)`.
pub fn count_dispersed_dyck(n: u64) -> u128 {
    binom(n, n / 2)
}

/// Number of DES-generic strata for complex parameters: the Catalan number
/// `C(k) = C(2k, k)/(k+1)`.
pub fn count_des_strata(k: u64) -> u128 {
    binom(2 * k, k) / (k as u128 + 1)
}

/// Computes the ordered minimal τ-invariant block decomposition and the
/// stratum slot counts.
pub fn signature(tau: &Involution) -> Result<StratumSignature> {
    require_valid(tau)?;
    let k = tau.k;
    let m = tau.fixed_points().len();

    // Greedy interval growth: extend the current block until it is closed
    // under τ. Minimality follows because every invariant ordered block is
    // an interval containing the orbit closure of its smallest element.
    let mut blocks = Vec::new();
    let mut start = 0usize;
    while start <= k {
        let mut end = start;
        let mut i = start;
        while i <= end {
            end = end.max(tau.map[i]);
            i += 1;
        }
        blocks.push((start..=end).collect::<Vec<usize>>());
        start = end + 1;
    }

    let q = blocks.len();
    let h = q - 1;
    let a = h;
    debug_assert!(h + 1 >= m);
    let b = h + 1 - m;
    debug_assert!((k + m).checked_sub(2 * h + 1).map_or(false, |d| d % 2 == 0));
    let c = (k + m - 2 * h - 1) / 2;
    Ok(StratumSignature { m, h, a, b, c, blocks })
}

/// Reconstructs the homoclinic-loop indices and the separatrix landing
/// classes from the combinatorial invariant.
pub fn attachment(tau: &Involution) -> Result<AttachmentData> {
    let sig = signature(tau)?;
    let homoclinic_indices = sig.blocks.iter().skip(1).map(|b| b[0]).collect();

    let mut landing_classes = Vec::new();
    for (bi, block) in sig.blocks.iter().enumerate() {
        if block.len() < 2 {
            continue;
        }
        let a_j = block[0];
        let last = *block.last().unwrap();
        // σ(h) = τ(h-1) permutes the interior {a_j+1, …, a_{j+1}-1}.
        let interior: Vec<usize> = (a_j + 1..=last).collect();
        let mut seen = vec![false; interior.len()];
        let mut classes = Vec::new();
        for &start in &interior {
            if seen[start - a_j - 1] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = start;
            loop {
                if seen[cur - a_j - 1] {
                    break;
                }
                seen[cur - a_j - 1] = true;
                cycle.push(cur);
                let next = tau.map[cur - 1];
                debug_assert!(next != a_j, "σ never takes the value a_j");
                debug_assert!(next > a_j && next <= last);
                cur = next;
                if cur == start {
                    break;
                }
            }
            classes.push(cycle);
        }
        landing_classes.push(BlockLanding { block: bi, classes });
    }

    Ok(AttachmentData {
        homoclinic_indices,
        landing_classes,
    })
}
