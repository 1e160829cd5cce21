use crate::error::{Error, Result};
use crate::field::ChartBox;

/// Node-centred grid on a chart box. Active axes carry `cells + 1` nodes
/// whose two end nodes are Dirichlet boundary; fixed axes carry a single
/// node at the box midpoint and no derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralGrid {
    pub bbox: ChartBox,
    pub cells: [usize; 3],
    pub active: [bool; 3],
}

impl SpectralGrid {
    pub fn new(bbox: ChartBox, cells: [usize; 3], active: [bool; 3]) -> Result<Self> {
        if !active.iter().any(|&a| a) {
            return Err(Error::InvalidInput("spectral grid needs at least one active axis".into()));
        }
        let mut cells = cells;
        for k in 0..3 {
            if active[k] {
                if cells[k] < 2 {
                    return Err(Error::InvalidInput(format!("active axis {k} needs at least 2 cells, got {}", cells[k])));
                }
            } else {
                cells[k] = 1;
            }
        }
        Ok(Self { bbox, cells, active })
    }

    /// Every axis active with `n` cells.
    pub fn cube(bbox: ChartBox, n: usize) -> Result<Self> {
        Self::new(bbox, [n; 3], [true; 3])
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.bbox.width(axis) / self.cells[axis] as f64
    }

    /// Product of the spacings; fixed axes contribute the box width.
    pub fn cell_volume(&self) -> f64 {
        (0..3).map(|k| self.spacing(k)).product()
    }

    /// Unknowns along an axis: interior nodes, or 1 for a fixed axis.
    pub fn interior(&self, axis: usize) -> usize {
        if self.active[axis] {
            self.cells[axis] - 1
        } else {
            1
        }
    }

    pub fn len(&self) -> usize {
        (0..3).map(|k| self.interior(k)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of node `i`, `0 ..= cells` on active axes.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        if self.active[axis] {
            self.bbox.lower[axis] + self.spacing(axis) * i as f64
        } else {
            0.5 * (self.bbox.lower[axis] + self.bbox.upper[axis])
        }
    }

    pub fn point(&self, idx: [usize; 3]) -> [f64; 3] {
        [0, 1, 2].map(|k| self.coordinate(k, idx[k]))
    }

    /// Unknown number of a node, `None` on the Dirichlet boundary.
    pub fn unknown(&self, idx: [usize; 3]) -> Option<usize> {
        let mut n = 0;
        for k in 0..3 {
            let j = if self.active[k] {
                if idx[k] == 0 || idx[k] >= self.cells[k] {
                    return None;
                }
                idx[k] - 1
            } else {
                if idx[k] != 0 {
                    return None;
                }
                0
            };
            n = n * self.interior(k) + j;
        }
        Some(n)
    }

    /// Node index of an unknown; inverse of [`SpectralGrid::unknown`].
    pub fn node_index(&self, mut n: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for k in (0..3).rev() {
            let m = self.interior(k);
            let j = n % m;
            n /= m;
            idx[k] = if self.active[k] { j + 1 } else { 0 };
        }
        idx
    }

    /// Unknown points in unknown order.
    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|n| self.point(self.node_index(n))).collect()
    }

    /// Same box with the cell count on every active axis doubled.
    pub fn refined(&self) -> Self {
        let mut cells = self.cells;
        for k in 0..3 {
            if self.active[k] {
                cells[k] *= 2;
            }
        }
        Self { cells, ..*self }
    }
}
