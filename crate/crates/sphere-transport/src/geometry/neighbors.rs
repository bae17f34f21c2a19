//! Spherical-cap neighbor search.
//!
//! A stencil around a point x is the index set
//! I(x) = { j : geodesic_distance(x, x_j) < delta }. `cap_neighbors` does a
//! plain linear scan; [`CapGrid`] buckets points into a uniform Cartesian
//! grid so that bulk queries during assembly run in O(1) per point. Both
//! must return exactly the same index sets (the equivalence is tested, not
//! assumed).

use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance_xyz, PointSet, SpherePoint};

/// The spherical-cap stencil of one evaluation node.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub center_index: usize,
    /// Sorted indices of all points with geodesic distance < delta,
    /// including the center itself.
    pub indices: Vec<usize>,
    /// Cap radius in radians.
    pub delta: f64,
}

/// Indices of all points of `ps` within geodesic distance `delta` of an
/// arbitrary point `x` (linear scan, ascending order).
pub fn cap_indices(ps: &PointSet, x: &SpherePoint, delta: f64) -> Vec<usize> {
    let xc = x.xyz();
    (0..ps.len())
        .filter(|&j| geodesic_distance_xyz(xc, ps.point(j).xyz()) < delta)
        .collect()
}

/// The cap stencil around node `center_index` (linear scan).
pub fn cap_neighbors(ps: &PointSet, center_index: usize, delta: f64) -> Result<Neighborhood> {
    if delta <= 0.0 {
        return Err(Error::config("delta", "cap radius must be positive"));
    }
    let indices = cap_indices(ps, ps.point(center_index), delta);
    Ok(Neighborhood {
        center_index,
        indices,
        delta,
    })
}

/// Uniform Cartesian cell grid over the unit ball for bulk cap queries.
///
/// The search predicate is the exact geodesic one; the grid only limits
/// which candidates get tested. A geodesic cap of radius delta equals a
/// Euclidean ball of radius 2 sin(delta/2) around the center.
pub struct CapGrid<'a> {
    ps: &'a PointSet,
    delta: f64,
    chord: f64,
    cells_per_axis: usize,
    cell_size: f64,
    /// CSR-style buckets: offsets into `bucketed`.
    offsets: Vec<u32>,
    bucketed: Vec<u32>,
}

impl<'a> CapGrid<'a> {
    pub fn new(ps: &'a PointSet, delta: f64) -> Result<Self> {
        if delta <= 0.0 {
            return Err(Error::config("delta", "cap radius must be positive"));
        }
        let chord = 2.0 * (delta.min(std::f64::consts::PI) / 2.0).sin();
        // Cell size close to the search radius keeps the candidate set at
        // 27 cells; cap the axis count so tiny deltas stay memory-sane.
        let cells_per_axis = ((2.0 / chord).floor() as usize).clamp(1, 128);
        let cell_size = 2.0 / cells_per_axis as f64;

        let n_cells = cells_per_axis * cells_per_axis * cells_per_axis;
        let mut counts = vec![0u32; n_cells + 1];
        let cell_of = |p: [f64; 3]| -> usize {
            let idx = |v: f64| {
                (((v + 1.0) / cell_size) as usize).min(cells_per_axis - 1)
            };
            (idx(p[0]) * cells_per_axis + idx(p[1])) * cells_per_axis + idx(p[2])
        };
        for p in ps.points() {
            counts[cell_of(p.xyz()) + 1] += 1;
        }
        for i in 0..n_cells {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut bucketed = vec![0u32; ps.len()];
        for (i, p) in ps.points().iter().enumerate() {
            let c = cell_of(p.xyz());
            bucketed[cursor[c] as usize] = i as u32;
            cursor[c] += 1;
        }
        Ok(CapGrid {
            ps,
            delta,
            chord,
            cells_per_axis,
            cell_size,
            offsets,
            bucketed,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Indices within geodesic distance < delta of `x`, ascending.
    pub fn indices_around(&self, x: &SpherePoint) -> Vec<usize> {
        let xc = x.xyz();
        let reach = (self.chord / self.cell_size).ceil() as i64;
        let base = xc.map(|v| ((v + 1.0) / self.cell_size) as i64);
        let m = self.cells_per_axis as i64;
        let mut out = Vec::new();
        for di in -reach..=reach {
            let ci = base[0] + di;
            if ci < 0 || ci >= m {
                continue;
            }
            for dj in -reach..=reach {
                let cj = base[1] + dj;
                if cj < 0 || cj >= m {
                    continue;
                }
                for dk in -reach..=reach {
                    let ck = base[2] + dk;
                    if ck < 0 || ck >= m {
                        continue;
                    }
                    let cell = ((ci * m + cj) * m + ck) as usize;
                    let lo = self.offsets[cell] as usize;
                    let hi = self.offsets[cell + 1] as usize;
                    for &j in &self.bucketed[lo..hi] {
                        let j = j as usize;
                        if geodesic_distance_xyz(xc, self.ps.point(j).xyz()) < self.delta {
                            out.push(j);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// The cap stencil around node `center_index`.
    pub fn neighborhood(&self, center_index: usize) -> Neighborhood {
        Neighborhood {
            center_index,
            indices: self.indices_around(self.ps.point(center_index)),
            delta: self.delta,
        }
    }
}
