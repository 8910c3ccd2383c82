//! Syndrome decoding and dressed logical readout for the toric code.
//!
//! Anyons are paired to minimise the total torus distance: exactly (bitmask
//! dynamic programme over all pairings) up to [`EXACT_LIMIT`] anyons, greedily
//! by closest pair beyond. Each pair is joined by the lexicographically
//! smallest shortest path, so decoding is deterministic.

use crate::error::{Error, Result};
use crate::lattice::{parity_sign, EdgeSet, LogicalOperator, Sector, Syndrome, ToricCode};

/// Largest anyon count handled by the exact pairing search.
pub const EXACT_LIMIT: usize = 12;

/// Edge set that clears a syndrome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correction {
    pub edges: EdgeSet,
    pub weight: usize,
    /// False when the greedy fallback produced the pairing.
    pub exact: bool,
}

/// Strategy that infers a correction from a syndrome.
pub trait Decoder: Sync {
    fn name(&self) -> String;
    fn decode(&self, code: &ToricCode, syndrome: &Syndrome) -> Result<Correction>;
}

/// Minimum-weight pairing decoder with a greedy fallback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchingDecoder {
    pub exact_limit: usize,
}

impl Default for MatchingDecoder {
    fn default() -> Self {
        Self {
            exact_limit: EXACT_LIMIT,
        }
    }
}

impl Decoder for MatchingDecoder {
    fn name(&self) -> String {
        format!("matching-exact{}", self.exact_limit)
    }

    fn decode(&self, code: &ToricCode, syndrome: &Syndrome) -> Result<Correction> {
        decode_with_limit(code, syndrome, self.exact_limit)
    }
}

/// Torus distance between two stabilizer sites (stars or plaquettes).
pub fn torus_distance(code: &ToricCode, a: usize, b: usize) -> usize {
    let l = code.size();
    let (ax, ay) = code.coords(a);
    let (bx, by) = code.coords(b);
    let dx = ax.abs_diff(bx);
    let dy = ay.abs_diff(by);
    dx.min(l - dx) + dy.min(l - dy)
}

/// Neighbouring sites of `site` with the edge crossed to reach each.
fn moves(code: &ToricCode, sector: Sector, site: usize) -> [(usize, usize); 4] {
    let l = code.size();
    let (x, y) = code.coords(site);
    let (xp, xm, yp, ym) = ((x + 1) % l, (x + l - 1) % l, (y + 1) % l, (y + l - 1) % l);
    match sector {
        Sector::Star => [
            (code.site(xp, y), code.horizontal(x, y)),
            (code.site(xm, y), code.horizontal(xm, y)),
            (code.site(x, yp), code.vertical(x, y)),
            (code.site(x, ym), code.vertical(x, ym)),
        ],
        Sector::Plaquette => [
            (code.site(xp, y), code.vertical(xp, y)),
            (code.site(xm, y), code.vertical(x, y)),
            (code.site(x, yp), code.horizontal(x, yp)),
            (code.site(x, ym), code.horizontal(x, y)),
        ],
    }
}

/// Shortest edge path between two sites; among all geodesics the one whose
/// edge sequence is lexicographically smallest.
pub fn shortest_path(code: &ToricCode, sector: Sector, from: usize, to: usize) -> Vec<usize> {
    let mut path = Vec::with_capacity(torus_distance(code, from, to));
    let mut here = from;
    while here != to {
        let d = torus_distance(code, here, to);
        let (next, edge) = moves(code, sector, here)
            .into_iter()
            .filter(|&(n, _)| torus_distance(code, n, to) + 1 == d)
            .min_by_key(|&(_, e)| e)
            .expect("a geodesic step always exists");
        path.push(edge);
        here = next;
    }
    path
}

/// Pairs the anyons of `syndrome` and returns the union of connecting paths.
pub fn decode_matching(code: &ToricCode, syndrome: &Syndrome) -> Result<Correction> {
    decode_with_limit(code, syndrome, EXACT_LIMIT)
}

fn decode_with_limit(
    code: &ToricCode,
    syndrome: &Syndrome,
    exact_limit: usize,
) -> Result<Correction> {
    let anyons = &syndrome.anyons;
    if anyons.len() % 2 == 1 {
        return Err(Error::OddSyndrome(anyons.len()));
    }
    let exact = anyons.len() <= exact_limit;
    let pairs = if exact {
        exact_pairing(code, anyons)
    } else {
        greedy_pairing(code, anyons)
    };
    let mut edges = EdgeSet::empty(code.n_edges());
    for (a, b) in pairs {
        for e in shortest_path(code, syndrome.sector, anyons[a], anyons[b]) {
            edges.toggle(e);
        }
    }
    let weight = edges.len();
    Ok(Correction {
        edges,
        weight,
        exact,
    })
}

/// Minimum total distance perfect matching by dynamic programming over subsets.
/// Ties resolve to the lowest partner index.
pub fn exact_pairing(code: &ToricCode, anyons: &[usize]) -> Vec<(usize, usize)> {
    let n = anyons.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(
        n.is_multiple_of(2) && n <= 24,
        "exact pairing needs an even count <= 24"
    );
    let dist: Vec<Vec<usize>> = anyons
        .iter()
        .map(|&a| anyons.iter().map(|&b| torus_distance(code, a, b)).collect())
        .collect();
    let full = (1usize << n) - 1;
    let mut best = vec![usize::MAX; 1 << n];
    let mut choice = vec![0u8; 1 << n];
    best[0] = 0;
    // Only masks reachable by always pairing the lowest unmatched anyon matter;
    // iterating all masks in increasing order visits them after their subsets.
    for mask in 1..=full {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut m = rest;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            let sub = best[rest & !(1 << j)];
            if sub == usize::MAX {
                continue;
            }
            let cost = sub + dist[i][j];
            if cost < best[mask] {
                best[mask] = cost;
                choice[mask] = j as u8;
            }
        }
    }
    let mut pairs = Vec::with_capacity(n / 2);
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let j = choice[mask] as usize;
        pairs.push((i, j));
        mask &= !((1 << i) | (1 << j));
    }
    pairs
}

/// Repeatedly matches the closest remaining pair.
pub fn greedy_pairing(code: &ToricCode, anyons: &[usize]) -> Vec<(usize, usize)> {
    let n = anyons.len();
    let mut candidates: Vec<(usize, usize, usize)> = Vec::with_capacity(n * n / 2);
    for i in 0..n {
        for j in i + 1..n {
            candidates.push((torus_distance(code, anyons[i], anyons[j]), i, j));
        }
    }
    candidates.sort_unstable();
    let mut matched = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    for (_, i, j) in candidates {
        if !matched[i] && !matched[j] {
            matched[i] = true;
            matched[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

/// Outcome of the three-step dressed measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DressedReadout {
    pub bare: i8,
    pub correction_sign: i8,
    pub dressed: i8,
}

/// Reads a dressed logical from single-qubit measurement outcomes.
///
/// `outcomes[e]` is the ±1 result of measuring the Pauli matching `op` on edge
/// `e`; the reference ground state reads +1 everywhere.
pub fn dressed_logical(
    code: &ToricCode,
    decoder: &dyn Decoder,
    outcomes: &[i8],
    op: &LogicalOperator,
) -> Result<DressedReadout> {
    code.check_operator(op)?;
    if outcomes.len() != code.n_edges() {
        return Err(Error::SizeMismatch {
            expected: code.n_edges(),
            actual: outcomes.len(),
        });
    }
    let mut flipped = EdgeSet::empty(code.n_edges());
    for (e, &v) in outcomes.iter().enumerate() {
        match v {
            1 => {}
            -1 => flipped.toggle(e),
            other => {
                return Err(Error::InvalidState(format!(
                    "outcome {other} on qubit {e}, expected ±1"
                )))
            }
        }
    }
    let bare: i8 = op.support.iter().map(|&e| outcomes[e]).product();
    let syndrome = code.syndrome(&flipped, op.kind.detecting_sector())?;
    let correction = decoder.decode(code, &syndrome)?;
    let correction_sign = parity_sign(correction.edges.overlap(&op.support));
    Ok(DressedReadout {
        bare,
        correction_sign,
        dressed: bare * correction_sign,
    })
}

/// True iff `error △ correction` anticommutes with `op`.
pub fn is_logical_failure(
    code: &ToricCode,
    error: &EdgeSet,
    correction: &Correction,
    op: &LogicalOperator,
) -> Result<bool> {
    code.check_operator(op)?;
    let sector = op.kind.detecting_sector();
    if code.syndrome(error, sector)? != code.syndrome(&correction.edges, sector)? {
        return Err(Error::SyndromeMismatch);
    }
    let residual = error.symmetric_difference(&correction.edges);
    Ok(residual.overlap(&op.support) % 2 == 1)
}
