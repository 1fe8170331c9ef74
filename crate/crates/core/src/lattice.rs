//! Square lattice geometry: site indexing, stencil neighbors and the
//! nearest-neighbor bond graph.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "open" => Ok(Boundary::Open),
            other => Err(Error::validation(
                "lattice.boundary",
                format!("expected `periodic` or `open`, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLattice")]
pub struct LatticeConfig {
    size: usize,
    boundary: Boundary,
    spacing: f64,
}

#[derive(Deserialize)]
struct RawLattice {
    size: usize,
    boundary: Boundary,
    spacing: f64,
}

impl TryFrom<RawLattice> for LatticeConfig {
    type Error = Error;

    fn try_from(raw: RawLattice) -> Result<Self> {
        if raw.size == 1 {
            return Ok(LatticeConfig { size: 1, boundary: raw.boundary, spacing: raw.spacing });
        }
        LatticeConfig::with_spacing(raw.size, raw.boundary, raw.spacing)
    }
}

/// Stencil directions in the order up, down, left, right.
pub const DIRECTIONS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

impl LatticeConfig {
    pub fn new(size: usize, boundary: Boundary) -> Result<Self> {
        Self::with_spacing(size, boundary, 1.0)
    }

    pub fn with_spacing(size: usize, boundary: Boundary, spacing: f64) -> Result<Self> {
        if size < 2 {
            return Err(Error::validation("lattice.size", format!("must be >= 2, got {size}")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::validation(
                "lattice.spacing",
                format!("must be a positive finite number, got {spacing}"),
            ));
        }
        Ok(LatticeConfig { size, boundary, spacing })
    }

    /// Degenerate one-site lattice. Every stencil neighbor is the site itself,
    /// so the kinetic term vanishes and only the local spin dynamics remain.
    pub fn single_site() -> Self {
        LatticeConfig { size: 1, boundary: Boundary::Periodic, spacing: 1.0 }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn n_sites(&self) -> usize {
        self.size * self.size
    }

    pub fn index(&self, row: usize, col: usize) -> Result<usize> {
        if row >= self.size || col >= self.size {
            return Err(Error::Index { row, col, size: self.size });
        }
        Ok(row * self.size + col)
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.size, site % self.size)
    }

    /// Neighbor of `site` in direction `dir` (an entry of [`DIRECTIONS`]).
    /// `None` when the neighbor falls off an open boundary.
    pub fn neighbor(&self, site: usize, dir: (isize, isize)) -> Option<usize> {
        let n = self.size as isize;
        let (r, c) = self.coords(site);
        let (mut r2, mut c2) = (r as isize + dir.0, c as isize + dir.1);
        match self.boundary {
            Boundary::Periodic => {
                r2 = r2.rem_euclid(n);
                c2 = c2.rem_euclid(n);
            }
            Boundary::Open => {
                if r2 < 0 || r2 >= n || c2 < 0 || c2 >= n {
                    return None;
                }
            }
        }
        Some(r2 as usize * self.size + c2 as usize)
    }

    /// The four stencil neighbor slots of a site, with multiplicity.
    pub fn stencil(&self, site: usize) -> [Option<usize>; 4] {
        DIRECTIONS.map(|d| self.neighbor(site, d))
    }
}

/// Undirected nearest-neighbor graph of a lattice. Each unordered pair of
/// distinct adjacent sites appears once, so on a periodic 2-wide lattice the
/// wrap-around link and the direct link collapse into one bond.
#[derive(Debug, Clone, PartialEq)]
pub struct Bonds {
    pairs: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Bonds {
    pub fn new(config: &LatticeConfig) -> Self {
        let n = config.n_sites();
        let mut pairs = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        for site in 0..n {
            for nb in config.stencil(site).into_iter().flatten() {
                if nb <= site {
                    continue;
                }
                if adjacency[site].iter().any(|&(other, _)| other == nb) {
                    continue;
                }
                let bond = pairs.len();
                pairs.push((site, nb));
                adjacency[site].push((nb, bond));
                adjacency[nb].push((site, bond));
            }
        }
        Bonds { pairs, adjacency }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.adjacency.len()
    }

    /// Bond endpoints `(a, b)` with `a < b`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `(neighbor, bond index)` for every distinct neighbor of `site`.
    pub fn neighbors(&self, site: usize) -> &[(usize, usize)] {
        &self.adjacency[site]
    }

    pub fn find(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency.get(a)?.iter().find(|&&(nb, _)| nb == b).map(|&(_, bond)| bond)
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }
}
