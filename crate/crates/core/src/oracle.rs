//! Exact subset-enumeration oracles (n ≤ 24).
//!
//! Subsets are visited in Gray-code order so each step flips one vertex and
//! the cut weight is updated in O(n). Ties within `TIE_TOL` go to the smaller
//! set, then to the lexicographically smaller sorted member list.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CutResult, Graph};

pub const MAX_N: usize = 24;
const TIE_TOL: f64 = 1e-9;

fn check_size(g: &Graph) -> Result<()> {
    if g.n() > MAX_N {
        return Err(Error::TooLarge {
            n: g.n(),
            max: MAX_N,
        });
    }
    if g.n() < 2 {
        return Err(Error::OutOfRange("need at least two vertices".into()));
    }
    Ok(())
}

/// Calls `visit(mask, size, cut)` for every nonempty proper subset.
pub(crate) fn enumerate(g: &Graph, mut visit: impl FnMut(u32, usize, f64)) {
    let n = g.n();
    // inner[v] = weight from v into the current set
    let mut inner = vec![0.0; n];
    let mut mask: u32 = 0;
    let mut size = 0usize;
    let mut cut = 0.0;
    for k in 1u64..(1u64 << n) {
        let v = k.trailing_zeros() as usize;
        let bit = 1u32 << v;
        if mask & bit == 0 {
            cut += g.degree(v) - 2.0 * inner[v];
            mask |= bit;
            size += 1;
            for (u, w) in g.row(v).iter().enumerate() {
                inner[u] += w;
            }
        } else {
            cut -= g.degree(v) - 2.0 * inner[v];
            mask &= !bit;
            size -= 1;
            for (u, w) in g.row(v).iter().enumerate() {
                inner[u] -= w;
            }
        }
        if size < n {
            visit(mask, size, cut);
        }
    }
}

pub(crate) fn mask_members(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask & (1 << i) != 0).collect()
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    size: usize,
    mask: u32,
}

impl Best {
    fn offer(slot: &mut Option<Best>, value: f64, size: usize, mask: u32) {
        let better = match slot {
            None => true,
            Some(b) => {
                if value < b.value - TIE_TOL {
                    true
                } else if value > b.value + TIE_TOL {
                    false
                } else if size != b.size {
                    size < b.size
                } else {
                    mask_members(mask) < mask_members(b.mask)
                }
            }
        };
        if better {
            *slot = Some(Best { value, size, mask });
        }
    }
}

fn rescore(g: &Graph, best: Option<Best>) -> Result<CutResult> {
    let b = best.ok_or_else(|| Error::OutOfRange("no set in the requested size range".into()))?;
    g.cut_quality(&mask_members(b.mask))
}

/// Minimum sparsity over `0 < |S| ≤ n/2`.
pub fn brute_sparsest(g: &Graph) -> Result<CutResult> {
    check_size(g)?;
    let n = g.n();
    let nf = n as f64;
    let mut best = None;
    enumerate(g, |mask, size, cut| {
        if 2 * size <= n {
            let s = size as f64;
            Best::offer(&mut best, nf * cut / (s * (nf - s)), size, mask);
        }
    });
    rescore(g, best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallSetResult {
    /// Minimum sparsity over sets of size at most `⌊n/r⌋`.
    pub phi_r: f64,
    /// Minimum expansion over the same sets.
    pub expansion_r: f64,
    pub sparsity_witness: CutResult,
    pub expansion_witness: CutResult,
}

/// Minima over all `S` with `1 ≤ |S| ≤ ⌊n/r⌋`.
pub fn brute_small_set(g: &Graph, r: f64) -> Result<SmallSetResult> {
    check_size(g)?;
    if !(r >= 1.0) {
        return Err(Error::OutOfRange(format!("r must be at least 1, got {r}")));
    }
    let n = g.n();
    let hi = ((n as f64 / r) + 1e-9).floor() as usize;
    if hi == 0 {
        return Err(Error::OutOfRange(format!(
            "floor(n/r) = 0 for n = {n}, r = {r}"
        )));
    }
    let hi = hi.min(n - 1);
    let nf = n as f64;
    let (mut best_phi, mut best_exp) = (None, None);
    enumerate(g, |mask, size, cut| {
        if size <= hi {
            let s = size as f64;
            Best::offer(&mut best_phi, nf * cut / (s * (nf - s)), size, mask);
            Best::offer(&mut best_exp, cut / s.min(nf - s), size, mask);
        }
    });
    let sparsity_witness = rescore(g, best_phi)?;
    let expansion_witness = rescore(g, best_exp)?;
    Ok(SmallSetResult {
        phi_r: sparsity_witness.sparsity,
        expansion_r: expansion_witness.expansion,
        sparsity_witness,
        expansion_witness,
    })
}

/// Minimum expansion over sets with both sides of size at least `c·n`.
pub fn brute_balanced(g: &Graph, c: f64) -> Result<CutResult> {
    check_size(g)?;
    let n = g.n();
    if !(c > 0.0) || c * n as f64 > n as f64 / 2.0 + 1e-9 {
        return Err(Error::OutOfRange(format!(
            "balance c = {c} must satisfy 0 < cn ≤ n/2"
        )));
    }
    let lo = ((c * n as f64) - 1e-9).ceil().max(1.0) as usize;
    brute_set_range(g, lo, n - lo)
}

/// Minimum expansion over `lo ≤ |S| ≤ hi` (`hi` is clipped to `n − 1`).
pub fn brute_set_range(g: &Graph, lo: usize, hi: usize) -> Result<CutResult> {
    check_size(g)?;
    let n = g.n();
    let lo = lo.max(1);
    let hi = hi.min(n - 1);
    if lo > hi {
        return Err(Error::OutOfRange(format!("empty size range [{lo}, {hi}]")));
    }
    let nf = n as f64;
    let mut best = None;
    enumerate(g, |mask, size, cut| {
        if size >= lo && size <= hi {
            let s = size as f64;
            Best::offer(&mut best, cut / s.min(nf - s), size, mask);
        }
    });
    rescore(g, best)
}
