use crate::error::{Error, Result};

// (row, col) offsets; the first half of each list are the "forward"
// directions used to enumerate every undirected edge exactly once.
const VON_NEUMANN: [(isize, isize); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
const MOORE: [(isize, isize); 8] = [
    (0, 1),
    (1, 0),
    (1, 1),
    (1, -1),
    (0, -1),
    (-1, 0),
    (-1, -1),
    (-1, 1),
];

/// Periodic `side x side` square lattice with a von Neumann (`k = 4`) or
/// Moore (`k = 8`) neighborhood. Agents are indexed row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    side: usize,
    k: usize,
    neighbors: Vec<u32>,
    edges: Vec<(u32, u32)>,
}

impl Lattice {
    pub fn new(side: usize, k: usize) -> Result<Self> {
        let offsets: &[(isize, isize)] = match k {
            4 => &VON_NEUMANN,
            8 => &MOORE,
            _ => return Err(Error::InvalidLattice { side, k }),
        };
        // Below 3 the periodic wrap makes opposite neighbors coincide.
        if side < 3 || side * side > u32::MAX as usize {
            return Err(Error::InvalidLattice { side, k });
        }
        let n = side * side;
        let s = side as isize;
        let mut neighbors = Vec::with_capacity(n * k);
        let mut edges = Vec::with_capacity(n * k / 2);
        for row in 0..s {
            for col in 0..s {
                let i = (row * s + col) as u32;
                for (slot, &(dr, dc)) in offsets.iter().enumerate() {
                    let j = ((row + dr).rem_euclid(s) * s + (col + dc).rem_euclid(s)) as u32;
                    neighbors.push(j);
                    if slot < k / 2 {
                        edges.push((i, j));
                    }
                }
            }
        }
        Ok(Self {
            side,
            k,
            neighbors,
            edges,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Neighborhood size.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of agents, `side^2`.
    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    /// Undirected edges, each listed once; `k * N / 2` of them.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        (row % self.side) * self.side + col % self.side
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i / self.side, i % self.side)
    }

    /// Index of the agent at `i` shifted by `(dr, dc)` with wrap-around.
    pub fn translate(&self, i: usize, dr: isize, dc: isize) -> usize {
        let s = self.side as isize;
        let (r, c) = self.coords(i);
        ((r as isize + dr).rem_euclid(s) * s + (c as isize + dc).rem_euclid(s)) as usize
    }
}
