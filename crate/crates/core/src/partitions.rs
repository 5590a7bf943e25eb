//! Set partitions of index slots, their refinement lattice, and Möbius
//! inversion between restricted and unrestricted index sums.
//!
//! A partition of `{0, .., k-1}` is stored as a restricted growth string
//! (RGS): `p[i]` is the block label of slot `i`, blocks numbered by first
//! appearance, so `p[0] == 0` and `p[i] <= max(p[..i]) + 1`.
//!
//! Ordering convention: `sigma <= tau` iff `sigma` refines `tau` (every
//! `sigma` block sits inside one `tau` block). An unrestricted sum over
//! index tuples forced to collide according to `sigma` decomposes over the
//! partitions coarser than `sigma`; the Möbius transform inverts that.

use crate::{Error, Result};

/// Largest slot count supported by [`set_partitions`] (Bell(8) = 4140).
pub const MAX_SLOTS: usize = 8;

/// All partitions of `k` slots as RGS, in lexicographic order.
pub fn set_partitions(k: usize) -> Result<Vec<Vec<u8>>> {
    if k == 0 || k > MAX_SLOTS {
        return Err(Error::InvalidInput(format!(
            "slot count {k} outside 1..={MAX_SLOTS}"
        )));
    }
    let mut out = Vec::new();
    let mut rgs = vec![0u8; k];
    loop {
        out.push(rgs.clone());
        // Advance to the next RGS in lexicographic order: find the rightmost
        // position that can still grow, bump it, reset the tail to zeros.
        let mut i = k;
        loop {
            if i == 1 {
                return Ok(out);
            }
            i -= 1;
            let cap = rgs[..i].iter().copied().max().unwrap_or(0) + 1;
            if rgs[i] < cap {
                rgs[i] += 1;
                for v in rgs[i + 1..].iter_mut() {
                    *v = 0;
                }
                break;
            }
        }
    }
}

/// Number of blocks of an RGS.
pub fn block_count(rgs: &[u8]) -> usize {
    rgs.iter().copied().max().map_or(0, |m| m as usize + 1)
}

/// Bell number B(k) (number of partitions), via the Bell triangle.
pub fn bell(k: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..k {
        let mut next = vec![*row.last().unwrap()];
        for &v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

/// True iff `a` refines `b` (`a <= b`): slots sharing an `a` block always
/// share a `b` block.
pub fn refines(a: &[u8], b: &[u8]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    // Each a-block must map to a single b-label.
    let mut image = [u8::MAX; MAX_SLOTS];
    for i in 0..a.len() {
        let slot = a[i] as usize;
        if image[slot] == u8::MAX {
            image[slot] = b[i];
        } else if image[slot] != b[i] {
            return false;
        }
    }
    true
}

/// Möbius function of the interval `[finer, coarser]` in the refinement
/// order. The interval is a product of small partition lattices, one per
/// `coarser` block, giving the closed form
/// `prod over blocks B of (-1)^(n_B - 1) * (n_B - 1)!` where `n_B` counts
/// the `finer` blocks inside `B`.
///
/// Precondition: `refines(finer, coarser)`; panics otherwise in debug.
pub fn moebius(finer: &[u8], coarser: &[u8]) -> i64 {
    debug_assert!(refines(finer, coarser), "moebius needs finer <= coarser");
    // Count distinct finer-blocks per coarser-block.
    let mut seen = [[false; MAX_SLOTS]; MAX_SLOTS];
    let mut counts = [0u32; MAX_SLOTS];
    for i in 0..finer.len() {
        let b = coarser[i] as usize;
        let f = finer[i] as usize;
        if !seen[b][f] {
            seen[b][f] = true;
            counts[b] += 1;
        }
    }
    let mut mu = 1i64;
    for &n in counts.iter().take(block_count(coarser)) {
        let n = n as i64;
        let mut factorial = 1i64;
        for j in 1..n {
            factorial *= j;
        }
        mu *= if (n - 1) % 2 == 0 { factorial } else { -factorial };
    }
    mu
}

/// Renumbers arbitrary block labels into RGS form (blocks by first
/// appearance).
pub fn normalize_to_rgs(labels: &[u8]) -> Vec<u8> {
    let mut map = [u8::MAX; 256];
    let mut next = 0u8;
    labels
        .iter()
        .map(|&l| {
            if map[l as usize] == u8::MAX {
                map[l as usize] = next;
                next += 1;
            }
            map[l as usize]
        })
        .collect()
}

/// Applies a slot permutation: slot `i` of the result takes the block of
/// slot `perm[i]`, then renumbers to RGS.
pub fn apply_slot_permutation(rgs: &[u8], perm: &[usize]) -> Vec<u8> {
    let moved: Vec<u8> = perm.iter().map(|&p| rgs[p]).collect();
    normalize_to_rgs(&moved)
}

/// RGS rendered as a compact digit string, used as a stable map key
/// ("0012" for {a,b}{c}{d} with c=d distinct... i.e. blocks by position).
pub fn rgs_key(rgs: &[u8]) -> String {
    rgs.iter().map(|&b| char::from(b'0' + b)).collect()
}

/// Parses a digit-string key produced by [`rgs_key`], checking RGS validity.
pub fn parse_rgs_key(key: &str) -> Result<Vec<u8>> {
    let mut rgs = Vec::with_capacity(key.len());
    for c in key.chars() {
        let d = c
            .to_digit(10)
            .ok_or_else(|| Error::InvalidInput(format!("bad partition key {key:?}")))?;
        rgs.push(d as u8);
    }
    let mut cap = 0u8;
    for (i, &b) in rgs.iter().enumerate() {
        if b > cap {
            return Err(Error::InvalidInput(format!(
                "key {key:?} is not a restricted growth string at position {i}"
            )));
        }
        if b == cap {
            cap += 1;
        }
    }
    if rgs.is_empty() {
        return Err(Error::InvalidInput("empty partition key".into()));
    }
    Ok(rgs)
}

/// Unrestricted sums from per-partition restricted values:
/// `U[i] = sum over j with parts[i] <= parts[j] of E[j]`.
pub fn zeta_transform(parts: &[Vec<u8>], e: &[f64]) -> Vec<f64> {
    (0..parts.len())
        .map(|i| {
            (0..parts.len())
                .filter(|&j| refines(&parts[i], &parts[j]))
                .map(|j| e[j])
                .sum()
        })
        .collect()
}

/// Inverse of [`zeta_transform`]:
/// `E[i] = sum over j with parts[i] <= parts[j] of moebius(i, j) * U[j]`.
pub fn moebius_invert(parts: &[Vec<u8>], u: &[f64]) -> Vec<f64> {
    (0..parts.len())
        .map(|i| {
            (0..parts.len())
                .filter(|&j| refines(&parts[i], &parts[j]))
                .map(|j| moebius(&parts[i], &parts[j]) as f64 * u[j])
                .sum()
        })
        .collect()
}
