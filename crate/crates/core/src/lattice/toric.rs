//! Toric-code geometry on an L×L periodic square lattice.
//!
//! Vertices and plaquettes are indexed `y * L + x`. Edge `2 * (y * L + x)` is
//! the horizontal edge leaving vertex `(x, y)` to the right, edge
//! `2 * (y * L + x) + 1` the vertical edge leaving it upward. Plaquette
//! `(x, y)` has vertex `(x, y)` as its lower-left corner.

use serde::{Deserialize, Serialize};

use super::spins::EdgeSet;
use crate::error::{Error, Result};

/// Which family of stabilizers a syndrome refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sector {
    /// Vertex operators, flagged by σ^z errors.
    Star,
    /// Face operators, flagged by σ^x errors.
    Plaquette,
}

/// Violated stabilizers of one sector, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Syndrome {
    pub sector: Sector,
    pub anyons: Vec<usize>,
}

impl Syndrome {
    pub fn empty(sector: Sector) -> Self {
        Self {
            sector,
            anyons: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.anyons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anyons.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogicalKind {
    /// Product of σ^x along a dual loop; flipped by σ^z errors.
    XType,
    /// Product of σ^z along a primal loop; flipped by σ^x errors.
    ZType,
}

impl LogicalKind {
    /// Stabilizer sector whose anyons the errors flipping this logical create.
    pub fn detecting_sector(self) -> Sector {
        match self {
            LogicalKind::XType => Sector::Star,
            LogicalKind::ZType => Sector::Plaquette,
        }
    }
}

/// Bare logical observable: a product of Paulis over a non-contractible loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalOperator {
    /// Winding direction, 1 (along x) or 2 (along y).
    pub mu: u8,
    pub kind: LogicalKind,
    pub support: Vec<usize>,
    pub(crate) lattice_size: usize,
}

impl LogicalOperator {
    pub fn lattice_size(&self) -> usize {
        self.lattice_size
    }
}

/// Incidence tables of the L×L toric code.
#[derive(Debug, Clone, PartialEq)]
pub struct ToricCode {
    l: usize,
    star_edges: Vec<[usize; 4]>,
    plaquette_edges: Vec<[usize; 4]>,
    edge_stars: Vec<[usize; 2]>,
    edge_plaquettes: Vec<[usize; 2]>,
}

impl ToricCode {
    pub fn new(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidModel(format!(
                "toric code needs L >= 2, got {l}"
            )));
        }
        let mut code = Self {
            l,
            star_edges: Vec::with_capacity(l * l),
            plaquette_edges: Vec::with_capacity(l * l),
            edge_stars: vec![[usize::MAX; 2]; 2 * l * l],
            edge_plaquettes: vec![[usize::MAX; 2]; 2 * l * l],
        };
        for y in 0..l {
            for x in 0..l {
                code.star_edges.push([
                    code.horizontal(x, y),
                    code.horizontal(x + l - 1, y),
                    code.vertical(x, y),
                    code.vertical(x, y + l - 1),
                ]);
                code.plaquette_edges.push([
                    code.horizontal(x, y),
                    code.horizontal(x, y + 1),
                    code.vertical(x, y),
                    code.vertical(x + 1, y),
                ]);
            }
        }
        let fill = |table: &mut Vec<[usize; 2]>, owners: &[[usize; 4]]| {
            let mut seen = vec![0usize; table.len()];
            for (s, edges) in owners.iter().enumerate() {
                for &e in edges {
                    table[e][seen[e]] = s;
                    seen[e] += 1;
                }
            }
        };
        fill(&mut code.edge_stars, &code.star_edges);
        fill(&mut code.edge_plaquettes, &code.plaquette_edges);
        Ok(code)
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        2 * self.l * self.l
    }

    #[inline]
    pub fn n_stabilizers(&self) -> usize {
        self.l * self.l
    }

    /// Horizontal edge leaving vertex `(x, y)`; coordinates wrap.
    #[inline]
    pub fn horizontal(&self, x: usize, y: usize) -> usize {
        2 * ((y % self.l) * self.l + x % self.l)
    }

    /// Vertical edge leaving vertex `(x, y)`; coordinates wrap.
    #[inline]
    pub fn vertical(&self, x: usize, y: usize) -> usize {
        2 * ((y % self.l) * self.l + x % self.l) + 1
    }

    #[inline]
    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.l, site / self.l)
    }

    #[inline]
    pub fn site(&self, x: usize, y: usize) -> usize {
        (y % self.l) * self.l + x % self.l
    }

    pub fn stabilizer_edges(&self, sector: Sector, index: usize) -> &[usize; 4] {
        match sector {
            Sector::Star => &self.star_edges[index],
            Sector::Plaquette => &self.plaquette_edges[index],
        }
    }

    /// The two stabilizers of `sector` containing edge `e`.
    #[inline]
    pub fn edge_neighbors(&self, sector: Sector, e: usize) -> [usize; 2] {
        match sector {
            Sector::Star => self.edge_stars[e],
            Sector::Plaquette => self.edge_plaquettes[e],
        }
    }

    fn check_frame(&self, error: &EdgeSet) -> Result<()> {
        if error.capacity() != self.n_edges() {
            return Err(Error::SizeMismatch {
                expected: self.n_edges(),
                actual: error.capacity(),
            });
        }
        Ok(())
    }

    /// Stabilizers of `sector` with odd overlap with `error`.
    pub fn syndrome(&self, error: &EdgeSet, sector: Sector) -> Result<Syndrome> {
        self.check_frame(error)?;
        let mut odd = vec![false; self.n_stabilizers()];
        for e in error.iter() {
            for s in self.edge_neighbors(sector, e) {
                odd[s] = !odd[s];
            }
        }
        Ok(Syndrome {
            sector,
            anyons: odd
                .iter()
                .enumerate()
                .filter_map(|(s, &o)| o.then_some(s))
                .collect(),
        })
    }

    /// Bare logical loop of the given kind winding in direction `mu`.
    pub fn logical(&self, kind: LogicalKind, mu: u8) -> Result<LogicalOperator> {
        let l = self.l;
        let support: Vec<usize> = match (kind, mu) {
            (LogicalKind::ZType, 1) => (0..l).map(|x| self.horizontal(x, 0)).collect(),
            (LogicalKind::ZType, 2) => (0..l).map(|y| self.vertical(0, y)).collect(),
            (LogicalKind::XType, 1) => (0..l).map(|x| self.vertical(x, 0)).collect(),
            (LogicalKind::XType, 2) => (0..l).map(|y| self.horizontal(0, y)).collect(),
            (_, other) => {
                return Err(Error::InvalidParameter(format!(
                    "logical direction must be 1 or 2, got {other}"
                )))
            }
        };
        Ok(LogicalOperator {
            mu,
            kind,
            support,
            lattice_size: l,
        })
    }

    /// ±1 value of the bare logical after applying `error`: −1 iff an odd
    /// number of error edges anticommute with the loop.
    pub fn logical_bare(&self, error: &EdgeSet, op: &LogicalOperator) -> Result<i8> {
        self.check_frame(error)?;
        self.check_operator(op)?;
        Ok(parity_sign(error.overlap(&op.support)))
    }

    pub(crate) fn check_operator(&self, op: &LogicalOperator) -> Result<()> {
        if op.lattice_size != self.l {
            return Err(Error::InvalidParameter(format!(
                "logical operator built for L = {}, model has L = {}",
                op.lattice_size, self.l
            )));
        }
        Ok(())
    }

    /// Edge set of a stabilizer generator, as an error pattern.
    pub fn stabilizer_set(&self, sector: Sector, index: usize) -> EdgeSet {
        EdgeSet::from_edges(
            self.n_edges(),
            self.stabilizer_edges(sector, index).iter().copied(),
        )
        .expect("stabilizer edges are in range")
    }
}

#[inline]
pub(crate) fn parity_sign(count: usize) -> i8 {
    if count.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Sector whose stabilizers act as trivial (contractible) error loops for
/// errors detected by `sector`.
pub fn dual_sector(sector: Sector) -> Sector {
    match sector {
        Sector::Star => Sector::Plaquette,
        Sector::Plaquette => Sector::Star,
    }
}
