//! Brute-force ownership on a regular grid of cell centres.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{Pitch, Point, Polygon};
use crate::match_data::{PlayerId, PlayerState};
use crate::motion::{MotionModel, ReachSeries, TimeStepGrid, DEFAULT_SIDES};

use super::DominantSubdivision;

const FALLBACK_RAYS: usize = 128;
const MARCH_STEP: f64 = 0.5;
const REFINE_ITERS: usize = 8;

/// Owning player of every cell; `cells[j * nx + i]` is column `i`, row `j`
/// counted from the bottom-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnershipGrid {
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
    pub pitch: Pitch,
    pub cells: Vec<PlayerId>,
}

impl OwnershipGrid {
    pub fn owner(&self, i: usize, j: usize) -> PlayerId {
        self.cells[j * self.nx + i]
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        cell_center(&self.pitch, self.cell_size, i, j)
    }

    /// Owner of the cell containing `p`, if `p` is on the pitch.
    pub fn owner_at(&self, p: Point) -> Option<PlayerId> {
        if !self.pitch.contains(p, 0.0) {
            return None;
        }
        let i = (((p.x + self.pitch.half_length) / self.cell_size) as usize).min(self.nx - 1);
        let j = (((p.y + self.pitch.half_width) / self.cell_size) as usize).min(self.ny - 1);
        Some(self.owner(i, j))
    }

    /// Number of cells owned by each player.
    pub fn counts(&self) -> BTreeMap<PlayerId, usize> {
        let mut out = BTreeMap::new();
        for &c in &self.cells {
            *out.entry(c).or_insert(0) += 1;
        }
        out
    }
}

pub(crate) fn cell_counts(pitch: &Pitch, cell_size: f64) -> (usize, usize) {
    let n = |len: f64| ((len / cell_size) - 1e-9).ceil().max(1.0) as usize;
    (n(pitch.length()), n(pitch.width()))
}

pub(crate) fn cell_center(pitch: &Pitch, cell_size: f64, i: usize, j: usize) -> Point {
    Point::new(
        -pitch.half_length + (i as f64 + 0.5) * cell_size,
        -pitch.half_width + (j as f64 + 0.5) * cell_size,
    )
}

/// Index of the series reaching `p` first; ties, including nobody reaching
/// it, go to the lowest index.
pub(crate) fn first_arrival(series: &[ReachSeries], p: Point) -> usize {
    let mut best = 0;
    let mut best_step = usize::MAX;
    for (idx, s) in series.iter().enumerate() {
        if let Some(step) = s.reach_step_before(p, best_step) {
            best = idx;
            best_step = step;
        }
    }
    best
}

/// Assigns each cell centre to the player with the smallest reach time,
/// breaking ties towards the lower id.
pub fn grid_dominant(
    states: &BTreeMap<PlayerId, PlayerState>,
    model: &MotionModel,
    grid: &TimeStepGrid,
    cell_size: f64,
) -> Result<OwnershipGrid> {
    grid_dominant_on(states, model, grid, cell_size, DEFAULT_SIDES, &Pitch::default())
}

pub fn grid_dominant_on(
    states: &BTreeMap<PlayerId, PlayerState>,
    model: &MotionModel,
    grid: &TimeStepGrid,
    cell_size: f64,
    n_sides: usize,
    pitch: &Pitch,
) -> Result<OwnershipGrid> {
    if !(cell_size > 0.0) {
        return Err(Error::Precondition(format!("cell size must be positive, got {cell_size}")));
    }
    if states.is_empty() {
        return Err(Error::Precondition("no players".into()));
    }
    model.validate()?;
    let ids: Vec<PlayerId> = states.keys().copied().collect();
    let series: Vec<ReachSeries> = states
        .values()
        .map(|s| ReachSeries::new(model, *s, *grid, n_sides))
        .collect();
    let (nx, ny) = cell_counts(pitch, cell_size);
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let c = cell_center(pitch, cell_size, i, j);
            cells.push(ids[first_arrival(&series, c)]);
        }
    }
    Ok(OwnershipGrid {
        cell_size,
        nx,
        ny,
        pitch: *pitch,
        cells,
    })
}

/// Fraction of grid cells whose centre the subdivision assigns to the same
/// player as the grid.
pub fn agreement(sub: &DominantSubdivision, grid: &OwnershipGrid) -> f64 {
    let mut same = 0usize;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if sub.owner_at(grid.center(i, j)) == Some(grid.owner(i, j)) {
                same += 1;
            }
        }
    }
    same as f64 / (grid.nx * grid.ny) as f64
}

/// Star-shaped region around `site`: along each of 128 rays, the last point
/// still owned by series `idx` before ownership changes or the pitch ends.
pub(crate) fn radial_region(idx: usize, site: Point, series: &[ReachSeries], pitch: &Pitch) -> Polygon {
    let owns = |p: Point| first_arrival(series, p) == idx;
    let vertices = (0..FALLBACK_RAYS)
        .map(|k| {
            let dir = Point::from_polar(1.0, TAU * k as f64 / FALLBACK_RAYS as f64);
            let limit = pitch.exit_distance(site, dir, 0.0);
            let mut inside = 0.0;
            let mut outside = None;
            let mut d = MARCH_STEP.min(limit);
            loop {
                if !owns(site + dir * d) {
                    outside = Some(d);
                    break;
                }
                inside = d;
                if d >= limit {
                    break;
                }
                d = (d + MARCH_STEP).min(limit);
            }
            if let Some(mut out) = outside {
                for _ in 0..REFINE_ITERS {
                    let mid = 0.5 * (inside + out);
                    if owns(site + dir * mid) {
                        inside = mid;
                    } else {
                        out = mid;
                    }
                }
            }
            site + dir * inside
        })
        .collect();
    let mut poly = Polygon::new(vertices);
    poly.make_ccw();
    poly
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{DEFAULT_A_MAX, DEFAULT_V_MAX};

    #[test]
    fn dimensions_span_pitch() {
        assert_eq!(cell_counts(&Pitch::default(), 0.5), (210, 136));
        assert_eq!(cell_counts(&Pitch::default(), 1.0), (105, 68));
    }

    #[test]
    fn tie_goes_to_lower_id() {
        let mut states = BTreeMap::new();
        states.insert(7, PlayerState::at_rest(Point::new(-10.0, 0.25)));
        states.insert(3, PlayerState::at_rest(Point::new(10.0, 0.25)));
        let model = MotionModel::circle(DEFAULT_V_MAX, DEFAULT_A_MAX);
        let g = grid_dominant(&states, &model, &TimeStepGrid::default(), 0.5).unwrap();
        // column 104 has centre x = -0.25, column 105 x = 0.25; x = 0 is not
        // a centre, so compare mirror cells instead
        assert_eq!(g.owner_at(Point::new(-5.0, 0.0)), Some(7));
        assert_eq!(g.owner_at(Point::new(5.0, 0.0)), Some(3));
        let odd = Pitch {
            half_length: 52.25,
            half_width: 34.0,
        };
        let g = grid_dominant_on(&states, &model, &TimeStepGrid::default(), 0.5, 32, &odd).unwrap();
        // centre column lies on the bisector x = 0
        assert_eq!(g.center(104, 68).x, 0.0);
        assert_eq!(g.owner(104, 68), 3);
    }

    #[test]
    fn single_player_owns_everything() {
        let mut states = BTreeMap::new();
        states.insert(5, PlayerState::at_rest(Point::ORIGIN));
        let model = MotionModel::circle(DEFAULT_V_MAX, DEFAULT_A_MAX);
        let g = grid_dominant(&states, &model, &TimeStepGrid::default(), 1.0).unwrap();
        assert!(g.cells.iter().all(|&c| c == 5));
        assert!(grid_dominant(&states, &model, &TimeStepGrid::default(), 0.0).is_err());
    }

    #[test]
    fn radial_region_matches_half_pitch() {
        let model = MotionModel::circle(DEFAULT_V_MAX, DEFAULT_A_MAX);
        let grid = TimeStepGrid::new(0.1, 20.0).unwrap();
        let series: Vec<ReachSeries> = [Point::new(-20.0, 0.0), Point::new(20.0, 0.0)]
            .into_iter()
            .map(|p| ReachSeries::new(&model, PlayerState::at_rest(p), grid, 32))
            .collect();
        let poly = radial_region(0, Point::new(-20.0, 0.0), &series, &Pitch::default());
        assert!((poly.area() - 7140.0 / 2.0).abs() < 0.03 * 7140.0, "{}", poly.area());
    }
}
