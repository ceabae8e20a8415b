//! Uniform lat/lon bucket grid for range queries.

use alloc::vec::Vec;

use crate::geo::{to_degrees, to_radians, WayPoint, EARTH_RADIUS_M};

type Cell = (i64, i64);

/// Buckets sized so that any pair within `range_m` lies in the same or an
/// adjacent cell. Falls back to a linear scan near the poles, across the
/// antimeridian, or when the range is too large for bucketing to help.
#[derive(Debug, Clone, Default)]
pub(crate) struct SpatialIndex {
    cell_lat: f64,
    cell_lon: f64,
    entries: Vec<(Cell, u32)>,
    all: Vec<u32>,
    bucketed: bool,
}

impl SpatialIndex {
    pub(crate) fn rebuild(&mut self, range_m: f64, points: impl Iterator<Item = (u32, WayPoint)>) {
        self.entries.clear();
        self.all.clear();
        let mut staged: Vec<(u32, WayPoint)> = points.collect();
        staged.sort_by_key(|(id, _)| *id);
        self.all.extend(staged.iter().map(|(id, _)| *id));

        let cell_lat = to_degrees(range_m / EARTH_RADIUS_M);
        let max_lat = staged.iter().map(|(_, p)| p.lat().abs()).fold(0.0, f64::max) + cell_lat;
        let wraps = staged.iter().any(|(_, p)| p.lon().abs() > 179.0);
        self.bucketed = cell_lat < 0.5 && max_lat < 80.0 && !wraps;
        if !self.bucketed {
            return;
        }
        self.cell_lat = cell_lat;
        // 1% slack for the slight poleward bow of short great circles
        self.cell_lon = 1.01 * cell_lat / libm::cos(to_radians(max_lat));
        let entries: Vec<(Cell, u32)> = staged.iter().map(|&(id, p)| (self.cell(&p), id)).collect();
        self.entries = entries;
        self.entries.sort_unstable();
    }

    fn cell(&self, p: &WayPoint) -> Cell {
        (
            libm::floor(p.lat() / self.cell_lat) as i64,
            libm::floor(p.lon() / self.cell_lon) as i64,
        )
    }

    /// Candidate ids near `p`, unsorted and unfiltered by exact distance.
    pub(crate) fn candidates(&self, p: &WayPoint, out: &mut Vec<u32>) {
        out.clear();
        if !self.bucketed {
            out.extend_from_slice(&self.all);
            return;
        }
        let (ci, cj) = self.cell(p);
        for di in -1..=1 {
            for dj in -1..=1 {
                let key = (ci + di, cj + dj);
                let start = self.entries.partition_point(|(c, _)| *c < key);
                out.extend(
                    self.entries[start..]
                        .iter()
                        .take_while(|(c, _)| *c == key)
                        .map(|(_, id)| *id),
                );
            }
        }
    }
}
