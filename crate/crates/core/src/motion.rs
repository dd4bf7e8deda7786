//! Player motion models: time-indexed reachable-region polygons and the
//! point-to-time function derived from them.

use std::f64::consts::TAU;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Point, Polygon};
use crate::match_data::{PlayerId, PlayerState, Trajectory};

pub const DEFAULT_V_MAX: f64 = 7.8;
pub const DEFAULT_A_MAX: f64 = 3.0;
pub const DEFAULT_SIDES: usize = 32;
pub const MIN_SIDES: usize = 8;
/// Reaches below this collapse to a 1 cm polygon.
pub const MIN_REACH: f64 = 0.01;
const CONTAINS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotionKind {
    Circle,
    Ellipse,
    DataDriven,
}

impl FromStr for MotionKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "circle" => Ok(MotionKind::Circle),
            "ellipse" => Ok(MotionKind::Ellipse),
            "data" | "data-driven" | "data_driven" | "datadriven" => Ok(MotionKind::DataDriven),
            other => Err(format!("unknown motion model {other:?}")),
        }
    }
}

impl fmt::Display for MotionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MotionKind::Circle => "circle",
            MotionKind::Ellipse => "ellipse",
            MotionKind::DataDriven => "data_driven",
        })
    }
}

/// Discrete reach horizons `τ_step, 2·τ_step, …, τ_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStepGrid {
    pub tau_step: f64,
    pub tau_max: f64,
}

impl Default for TimeStepGrid {
    fn default() -> Self {
        TimeStepGrid {
            tau_step: 0.1,
            tau_max: 10.0,
        }
    }
}

impl TimeStepGrid {
    pub fn new(tau_step: f64, tau_max: f64) -> Result<Self> {
        if !(tau_step > 0.0) || !(tau_max >= tau_step) {
            return Err(Error::Precondition(format!(
                "invalid time grid: step {tau_step}, max {tau_max}"
            )));
        }
        let ratio = tau_max / tau_step;
        if (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::Precondition(format!(
                "tau_max {tau_max} is not a multiple of tau_step {tau_step}"
            )));
        }
        Ok(TimeStepGrid { tau_step, tau_max })
    }

    pub fn steps(&self) -> usize {
        (self.tau_max / self.tau_step).round() as usize
    }

    /// Horizon of step `k` (1-based).
    pub fn tau(&self, k: usize) -> f64 {
        k as f64 * self.tau_step
    }
}

/// Per-(speed, angle, τ) reach distances sampled from tracking data.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachTable {
    /// Speed bin edges in m/s; `speed_edges.len() - 1` bins.
    pub speed_edges: Vec<f64>,
    /// Bin `j` is centered on heading offset `j · 2π / angle_bins`.
    pub angle_bins: usize,
    /// Horizons in seconds, strictly increasing.
    pub taus: Vec<f64>,
    /// Row-major `[speed][angle][tau]`.
    pub distances: Vec<f64>,
}

impl ReachTable {
    pub fn speed_bins(&self) -> usize {
        self.speed_edges.len() - 1
    }

    fn idx(&self, s: usize, a: usize, t: usize) -> usize {
        (s * self.angle_bins + a) * self.taus.len() + t
    }

    pub fn get(&self, s: usize, a: usize, t: usize) -> f64 {
        self.distances[self.idx(s, a, t)]
    }

    pub fn is_monotone_in_tau(&self) -> bool {
        (0..self.speed_bins()).all(|s| {
            (0..self.angle_bins).all(|a| {
                (1..self.taus.len()).all(|t| self.get(s, a, t) >= self.get(s, a, t - 1))
            })
        })
    }

    fn speed_bin_of(&self, speed: f64) -> usize {
        let nb = self.speed_bins();
        (1..nb)
            .rev()
            .find(|&i| speed >= self.speed_edges[i])
            .unwrap_or(0)
    }

    fn angle_bin_of(&self, rel: f64) -> usize {
        let w = TAU / self.angle_bins as f64;
        ((rel.rem_euclid(TAU) / w).round() as usize) % self.angle_bins
    }

    /// Linear interpolation weights over speed-bin centers.
    fn speed_weights(&self, speed: f64) -> (usize, usize, f64) {
        let centers: Vec<f64> = self
            .speed_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect();
        interp_weights(&centers, speed)
    }

    /// Distance along a heading offset for one speed bin, interpolated over
    /// angle (circular) and τ.
    fn distance_in_bin(&self, s: usize, rel: f64, tau: f64, v_max: f64) -> f64 {
        let w = TAU / self.angle_bins as f64;
        let pos = rel.rem_euclid(TAU) / w;
        let a0 = pos.floor() as usize % self.angle_bins;
        let a1 = (a0 + 1) % self.angle_bins;
        let fa = pos - pos.floor();
        let along_tau = |a: usize| -> f64 {
            let last = self.taus.len() - 1;
            if tau <= self.taus[0] {
                self.get(s, a, 0) * tau / self.taus[0]
            } else if tau >= self.taus[last] {
                self.get(s, a, last) + v_max * (tau - self.taus[last])
            } else {
                let (t0, t1, ft) = interp_weights(&self.taus, tau);
                self.get(s, a, t0) * (1.0 - ft) + self.get(s, a, t1) * ft
            }
        };
        along_tau(a0) * (1.0 - fa) + along_tau(a1) * fa
    }

    fn distance(&self, speed: f64, rel: f64, tau: f64, v_max: f64) -> f64 {
        let (s0, s1, fs) = self.speed_weights(speed);
        self.distance_in_bin(s0, rel, tau, v_max) * (1.0 - fs)
            + self.distance_in_bin(s1, rel, tau, v_max) * fs
    }

    pub fn to_csv(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        let mut s = String::new();
        writeln!(s, "# speed_edges={}", join(&self.speed_edges)).unwrap();
        writeln!(s, "# angle_bins={}", self.angle_bins).unwrap();
        writeln!(s, "# taus={}", join(&self.taus)).unwrap();
        s.push_str("speed_bin,angle_bin,tau_bin,distance\n");
        for sb in 0..self.speed_bins() {
            for a in 0..self.angle_bins {
                for t in 0..self.taus.len() {
                    writeln!(s, "{sb},{a},{t},{}", self.get(sb, a, t)).unwrap();
                }
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut speed_edges = None;
        let mut angle_bins = None;
        let mut taus = None;
        let parse_list = |v: &str, line: usize| -> Result<Vec<f64>> {
            v.split(';')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::schema(line, format!("bad number {x:?}")))
                })
                .collect()
        };
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() {
                continue;
            }
            if let Some(meta) = l.strip_prefix('#') {
                let (k, v) = meta
                    .split_once('=')
                    .ok_or_else(|| Error::schema(line, "malformed metadata"))?;
                match k.trim() {
                    "speed_edges" => speed_edges = Some(parse_list(v, line)?),
                    "taus" => taus = Some(parse_list(v, line)?),
                    "angle_bins" => {
                        angle_bins = Some(
                            v.trim()
                                .parse::<usize>()
                                .map_err(|_| Error::schema(line, "bad angle_bins"))?,
                        )
                    }
                    other => return Err(Error::schema(line, format!("unknown key {other}"))),
                }
                continue;
            }
            if !header_seen {
                if l != "speed_bin,angle_bin,tau_bin,distance" {
                    return Err(Error::schema(line, "unexpected header"));
                }
                header_seen = true;
                continue;
            }
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 4 {
                return Err(Error::schema(line, "expected 4 fields"));
            }
            let parse_idx = |x: &str| {
                x.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::schema(line, format!("bad index {x:?}")))
            };
            let d: f64 = f[3]
                .trim()
                .parse()
                .map_err(|_| Error::schema(line, "bad distance"))?;
            rows.push((parse_idx(f[0])?, parse_idx(f[1])?, parse_idx(f[2])?, d, line));
        }
        let (speed_edges, angle_bins, taus) = match (speed_edges, angle_bins, taus) {
            (Some(s), Some(a), Some(t)) if s.len() >= 2 && a >= 1 && !t.is_empty() => (s, a, t),
            _ => return Err(Error::schema(1, "missing table metadata")),
        };
        let mut table = ReachTable {
            distances: vec![f64::NAN; (speed_edges.len() - 1) * angle_bins * taus.len()],
            speed_edges,
            angle_bins,
            taus,
        };
        for (s, a, t, d, line) in rows {
            if s >= table.speed_bins() || a >= table.angle_bins || t >= table.taus.len() {
                return Err(Error::schema(line, "bin index out of range"));
            }
            let idx = table.idx(s, a, t);
            table.distances[idx] = d;
        }
        if table.distances.iter().any(|d| d.is_nan()) {
            return Err(Error::schema(1, "table has missing cells"));
        }
        if !table.is_monotone_in_tau() {
            return Err(Error::Integrity("reach table decreases in tau".into()));
        }
        Ok(table)
    }
}

fn interp_weights(knots: &[f64], x: f64) -> (usize, usize, f64) {
    let last = knots.len() - 1;
    if x <= knots[0] {
        return (0, 0, 0.0);
    }
    if x >= knots[last] {
        return (last, last, 0.0);
    }
    let i = knots.windows(2).position(|w| x < w[1]).unwrap_or(last - 1);
    let f = (x - knots[i]) / (knots[i + 1] - knots[i]);
    (i, i + 1, f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub kind: MotionKind,
    pub v_max: f64,
    pub a_max: f64,
    /// Present iff `kind == DataDriven`.
    pub table: Option<ReachTable>,
}

impl MotionModel {
    pub fn circle(v_max: f64, a_max: f64) -> Self {
        MotionModel {
            kind: MotionKind::Circle,
            v_max,
            a_max,
            table: None,
        }
    }

    pub fn ellipse(v_max: f64, a_max: f64) -> Self {
        MotionModel {
            kind: MotionKind::Ellipse,
            v_max,
            a_max,
            table: None,
        }
    }

    pub fn data_driven(table: ReachTable, v_max: f64, a_max: f64) -> Self {
        MotionModel {
            kind: MotionKind::DataDriven,
            v_max,
            a_max,
            table: Some(table),
        }
    }

    /// Default-parameter model of a given kind. Data-driven models need a
    /// fitted table and cannot be built here.
    pub fn with_defaults(kind: MotionKind) -> Result<Self> {
        match kind {
            MotionKind::Circle => Ok(Self::circle(DEFAULT_V_MAX, DEFAULT_A_MAX)),
            MotionKind::Ellipse => Ok(Self::ellipse(DEFAULT_V_MAX, DEFAULT_A_MAX)),
            MotionKind::DataDriven => Err(Error::Precondition(
                "data-driven model requires a fitted reach table".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0) || !(self.a_max > 0.0) {
            return Err(Error::Precondition("v_max and a_max must be positive".into()));
        }
        match (self.kind, &self.table) {
            (MotionKind::DataDriven, Some(t)) if t.is_monotone_in_tau() => Ok(()),
            (MotionKind::DataDriven, _) => Err(Error::Precondition(
                "data-driven model needs a monotone reach table".into(),
            )),
            (_, None) => Ok(()),
            (_, Some(_)) => Err(Error::Precondition("only data-driven models carry a table".into())),
        }
    }

    /// Accelerate-from-current-speed reach along the facing direction,
    /// capped by top speed.
    fn forward_reach(&self, speed: f64, tau: f64) -> f64 {
        (speed * tau + 0.5 * self.a_max * tau * tau).min(self.v_max * tau)
    }

    /// Decelerate to a stop, then accelerate backwards.
    fn backward_reach(&self, speed: f64, tau: f64) -> f64 {
        let stop = speed / self.a_max;
        let d = if tau <= stop {
            0.0
        } else {
            0.5 * self.a_max * (tau - stop).powi(2) - 0.5 * speed * stop
        };
        d.max(0.0).min(self.v_max * tau)
    }

    fn lateral_reach(&self, tau: f64) -> f64 {
        (0.5 * self.a_max * tau * tau).min(self.v_max * tau)
    }

    /// Boundary of the region reachable within `tau` seconds, as an
    /// `n_sides`-gon with counter-clockwise vertices at absolute angles
    /// `2πk/n` (for circles).
    pub fn reachable_polygon(&self, state: &PlayerState, tau: f64, n_sides: usize) -> Result<Polygon> {
        if !(tau > 0.0) {
            return Err(Error::Precondition(format!("tau must be positive, got {tau}")));
        }
        if n_sides < MIN_SIDES {
            return Err(Error::Precondition(format!(
                "polygon needs at least {MIN_SIDES} sides, got {n_sides}"
            )));
        }
        Ok(self.polygon_unchecked(state, tau, n_sides))
    }

    pub(crate) fn polygon_unchecked(&self, state: &PlayerState, tau: f64, n: usize) -> Polygon {
        let step = TAU / n as f64;
        let pos = state.position;
        match self.kind {
            MotionKind::Circle => {
                let r = self.forward_reach(state.speed, tau).max(MIN_REACH);
                Polygon::regular(pos, r, n)
            }
            MotionKind::Ellipse => {
                let df = self.forward_reach(state.speed, tau).max(MIN_REACH);
                let db = self.backward_reach(state.speed, tau).max(MIN_REACH);
                let dl = self.lateral_reach(tau).max(MIN_REACH);
                let gamma = state.facing;
                let axis = Point::from_polar(1.0, gamma);
                let center = pos + axis * ((df - db) / 2.0);
                let (major, minor) = ((df + db) / 2.0, dl);
                Polygon::new(
                    (0..n)
                        .map(|k| {
                            let phi = step * k as f64 - gamma;
                            center + Point::new(major * phi.cos(), minor * phi.sin()).rotate(gamma)
                        })
                        .collect(),
                )
            }
            MotionKind::DataDriven => {
                let table = self.table.as_ref().expect("validated data-driven model");
                Polygon::new(
                    (0..n)
                        .map(|k| {
                            let alpha = step * k as f64;
                            let rel = alpha - state.facing;
                            let r = table
                                .distance(state.speed, rel, tau, self.v_max)
                                .max(MIN_REACH);
                            pos + Point::from_polar(r, alpha)
                        })
                        .collect(),
                )
            }
        }
    }

    /// Smallest grid horizon whose reachable polygon contains `target`, or
    /// `f64::INFINITY` when it is out of reach within `tau_max`.
    pub fn reach_time(&self, state: &PlayerState, target: Point, grid: &TimeStepGrid) -> f64 {
        self.reach_time_with_sides(state, target, grid, DEFAULT_SIDES)
    }

    pub fn reach_time_with_sides(
        &self,
        state: &PlayerState,
        target: Point,
        grid: &TimeStepGrid,
        n_sides: usize,
    ) -> f64 {
        let n = grid.steps();
        let inside = |k: usize| {
            polygon_contains(&self.polygon_unchecked(state, grid.tau(k), n_sides), target)
        };
        binary_search_first(n, inside)
            .map(|k| grid.tau(k))
            .unwrap_or(f64::INFINITY)
    }
}

/// Smallest `k` in `1..=n` with `pred(k)`, assuming `pred` is monotone.
fn binary_search_first(n: usize, mut pred: impl FnMut(usize) -> bool) -> Option<usize> {
    if n == 0 || !pred(n) {
        return None;
    }
    let (mut lo, mut hi) = (1usize, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

fn polygon_contains(poly: &Polygon, p: Point) -> bool {
    let (lo, hi) = poly.bounds();
    if p.x < lo.x - CONTAINS_TOL
        || p.x > hi.x + CONTAINS_TOL
        || p.y < lo.y - CONTAINS_TOL
        || p.y > hi.y + CONTAINS_TOL
    {
        return false;
    }
    poly.contains(p, CONTAINS_TOL)
}

/// One player's reachable polygon at a single grid horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachableBoundary {
    pub player: PlayerId,
    /// 1-based grid step.
    pub step: usize,
    pub tau: f64,
    pub polygon: Polygon,
}

/// A player's reachable polygons precomputed for every horizon of a grid.
#[derive(Debug, Clone)]
pub struct ReachSeries {
    pub state: PlayerState,
    pub grid: TimeStepGrid,
    /// `polygons[k - 1]` is the boundary at `grid.tau(k)`.
    pub polygons: Vec<Polygon>,
    bounds: Vec<(Point, Point)>,
}

impl ReachSeries {
    pub fn new(model: &MotionModel, state: PlayerState, grid: TimeStepGrid, n_sides: usize) -> Self {
        let polygons: Vec<Polygon> = (1..=grid.steps())
            .map(|k| model.polygon_unchecked(&state, grid.tau(k), n_sides))
            .collect();
        let bounds = polygons.iter().map(Polygon::bounds).collect();
        ReachSeries {
            state,
            grid,
            polygons,
            bounds,
        }
    }

    pub fn bounds(&self, k: usize) -> (Point, Point) {
        self.bounds[k - 1]
    }

    pub fn polygon(&self, k: usize) -> &Polygon {
        &self.polygons[k - 1]
    }

    /// Grid step index (1-based) of the first polygon containing `target`.
    pub fn reach_step(&self, target: Point) -> Option<usize> {
        binary_search_first(self.polygons.len(), |k| {
            let (lo, hi) = self.bounds[k - 1];
            p_in_box(target, lo, hi) && self.polygons[k - 1].contains(target, CONTAINS_TOL)
        })
    }

    pub fn boundary(&self, player: PlayerId, k: usize) -> ReachableBoundary {
        ReachableBoundary {
            player,
            step: k,
            tau: self.grid.tau(k),
            polygon: self.polygons[k - 1].clone(),
        }
    }

    /// Like [`reach_step`](Self::reach_step), but only looks for steps
    /// before `limit`.
    pub fn reach_step_before(&self, target: Point, limit: usize) -> Option<usize> {
        let n = self.polygons.len().min(limit.saturating_sub(1));
        binary_search_first(n, |k| {
            let (lo, hi) = self.bounds[k - 1];
            p_in_box(target, lo, hi) && self.polygons[k - 1].contains(target, CONTAINS_TOL)
        })
    }

    pub fn reach_time(&self, target: Point) -> f64 {
        self.reach_step(target)
            .map(|k| self.grid.tau(k))
            .unwrap_or(f64::INFINITY)
    }
}

fn p_in_box(p: Point, lo: Point, hi: Point) -> bool {
    p.x >= lo.x - CONTAINS_TOL
        && p.x <= hi.x + CONTAINS_TOL
        && p.y >= lo.y - CONTAINS_TOL
        && p.y <= hi.y + CONTAINS_TOL
}

/// Binning used when fitting a data-driven model.
#[derive(Debug, Clone, PartialEq)]
pub struct DataDrivenBins {
    pub speed_edges: Vec<f64>,
    pub angle_bins: usize,
    pub taus: Vec<f64>,
    pub frequency_hz: u32,
    /// Quantile of observed displacement stored per cell.
    pub quantile: f64,
}

impl Default for DataDrivenBins {
    fn default() -> Self {
        DataDrivenBins {
            speed_edges: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            angle_bins: 8,
            taus: (1..=10).map(|k| k as f64 * 0.5).collect(),
            frequency_hz: 10,
            quantile: 0.95,
        }
    }
}

pub const MIN_FIT_STEPS: usize = 1000;

/// Velocity from a centered 5-sample window, one-sided near the ends.
pub(crate) fn window_velocity(samples: &[Point], idx: usize, frequency_hz: u32) -> Point {
    let lo = idx.saturating_sub(2);
    let hi = (idx + 2).min(samples.len() - 1);
    if hi == lo {
        return Point::ORIGIN;
    }
    (samples[hi] - samples[lo]) * (frequency_hz as f64 / (hi - lo) as f64)
}

/// Fits a data-driven reach table from observed trajectories.
pub fn fit_data_driven(
    trajectories: &[Trajectory],
    bins: &DataDrivenBins,
    v_max: f64,
    a_max: f64,
) -> Result<MotionModel> {
    let total: usize = trajectories.iter().map(|t| t.samples.len()).sum();
    if total < MIN_FIT_STEPS {
        return Err(Error::InsufficientData(format!(
            "corpus spans {total} steps, need at least {MIN_FIT_STEPS}"
        )));
    }
    if bins.speed_edges.len() < 2 || bins.angle_bins == 0 || bins.taus.is_empty() {
        return Err(Error::Precondition("empty binning".into()));
    }
    let mut table = ReachTable {
        speed_edges: bins.speed_edges.clone(),
        angle_bins: bins.angle_bins,
        taus: bins.taus.clone(),
        distances: Vec::new(),
    };
    let cells = table.speed_bins() * table.angle_bins * table.taus.len();
    let mut observed: Vec<Vec<f64>> = vec![Vec::new(); cells];
    let horizons: Vec<usize> = bins
        .taus
        .iter()
        .map(|t| (t * bins.frequency_hz as f64).round() as usize)
        .collect();
    for traj in trajectories {
        let s = &traj.samples;
        for i in 0..s.len() {
            let v = window_velocity(s, i, bins.frequency_hz);
            let speed = v.norm();
            let heading = if speed > 1e-9 { v.angle() } else { 0.0 };
            let sb = table.speed_bin_of(speed);
            for (t, &h) in horizons.iter().enumerate() {
                if h == 0 || i + h >= s.len() {
                    continue;
                }
                let disp = s[i + h] - s[i];
                let d = disp.norm();
                let rel = if d > 1e-9 {
                    normalize_angle(disp.angle() - heading)
                } else {
                    0.0
                };
                let ab = table.angle_bin_of(rel);
                observed[table.idx(sb, ab, t)].push(d);
            }
        }
    }
    if observed.iter().all(Vec::is_empty) {
        return Err(Error::InsufficientData("no displacement samples".into()));
    }
    let mut filled: Vec<Option<f64>> = observed
        .iter_mut()
        .map(|obs| {
            if obs.is_empty() {
                return None;
            }
            obs.sort_by(f64::total_cmp);
            let rank = ((bins.quantile * obs.len() as f64).ceil() as usize).clamp(1, obs.len());
            Some(obs[rank - 1])
        })
        .collect();
    let populated: Vec<(usize, usize, usize, f64)> = (0..table.speed_bins())
        .flat_map(|s| (0..table.angle_bins).map(move |a| (s, a)))
        .flat_map(|(s, a)| (0..bins.taus.len()).map(move |t| (s, a, t)))
        .filter_map(|(s, a, t)| filled[table.idx(s, a, t)].map(|d| (s, a, t, d)))
        .collect();
    for s in 0..table.speed_bins() {
        for a in 0..table.angle_bins {
            for t in 0..table.taus.len() {
                let idx = table.idx(s, a, t);
                if filled[idx].is_some() {
                    continue;
                }
                let nearest = populated
                    .iter()
                    .min_by_key(|&&(ps, pa, pt, _)| {
                        let da = pa.abs_diff(a);
                        let da = da.min(table.angle_bins - da);
                        ps.abs_diff(s) + da + pt.abs_diff(t)
                    })
                    .expect("at least one populated cell");
                filled[idx] = Some(nearest.3);
            }
        }
    }
    table.distances = filled.into_iter().map(|d| d.expect("filled")).collect();
    // isotonic clamp: running maximum along τ
    for s in 0..table.speed_bins() {
        for a in 0..table.angle_bins {
            for t in 1..table.taus.len() {
                let prev = table.get(s, a, t - 1);
                let idx = table.idx(s, a, t);
                if table.distances[idx] < prev {
                    table.distances[idx] = prev;
                }
            }
        }
    }
    Ok(MotionModel::data_driven(table, v_max, a_max))
}

pub fn read_reach_table(path: &Path) -> Result<ReachTable> {
    ReachTable::from_csv(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rest() -> PlayerState {
        PlayerState::at_rest(Point::ORIGIN)
    }

    #[test]
    fn circle_at_rest_radius() {
        let m = MotionModel::circle(8.0, 3.0);
        let poly = m.reachable_polygon(&rest(), 2.0, 32).unwrap();
        assert_eq!(poly.len(), 32);
        for v in &poly.vertices {
            assert!((v.norm() - 6.0).abs() < 1e-12);
        }
        assert!(poly.signed_area() > 0.0);
    }

    #[test]
    fn ellipse_at_rest_is_circle() {
        let c = MotionModel::circle(7.8, 3.0);
        let e = MotionModel::ellipse(7.8, 3.0);
        let st = PlayerState {
            facing: 1.1,
            ..PlayerState::at_rest(Point::new(3.0, -2.0))
        };
        for tau in [0.1, 1.0, 3.0, 7.5] {
            let pc = c.reachable_polygon(&st, tau, 32).unwrap();
            let pe = e.reachable_polygon(&st, tau, 32).unwrap();
            for (a, b) in pc.vertices.iter().zip(&pe.vertices) {
                assert!(a.dist(*b) < 1e-9, "tau {tau}");
            }
        }
    }

    #[test]
    fn ellipse_forward_reach_and_shift() {
        let m = MotionModel::ellipse(8.0, 3.0);
        let st = PlayerState::moving(Point::ORIGIN, Point::new(6.0, 0.0));
        assert!((m.forward_reach(6.0, 1.0) - 7.5).abs() < 1e-12);
        // τ below the stopping time (2 s): no backward reach beyond the floor
        assert_eq!(m.backward_reach(6.0, 1.0), 0.0);
        let poly = m.reachable_polygon(&st, 1.0, 32).unwrap();
        let front = poly.vertices[0];
        assert!((front.x - 7.5).abs() < 1e-9);
        let (lo, hi) = poly.bounds();
        assert!((lo.x + MIN_REACH).abs() < 1e-9);
        assert!(hi.x > 7.49);
        assert!(poly.contains_strict(Point::ORIGIN));
    }

    #[test]
    fn degenerate_region_floors_to_one_centimetre() {
        let m = MotionModel::circle(7.8, 3.0);
        let poly = m.reachable_polygon(&rest(), 0.01, 8).unwrap();
        assert!((poly.vertices[0].norm() - MIN_REACH).abs() < 1e-15);
        assert!(m.reachable_polygon(&rest(), 0.0, 8).is_err());
        assert!(m.reachable_polygon(&rest(), 1.0, 7).is_err());
    }

    #[test]
    fn reach_time_examples() {
        let grid = TimeStepGrid::default();
        let m = MotionModel::circle(8.0, 1e6);
        assert!((m.reach_time(&rest(), Point::ORIGIN, &grid) - 0.1).abs() < 1e-12);
        assert!((m.reach_time(&rest(), Point::new(16.0, 0.0), &grid) - 2.0).abs() < 1e-12);
        assert!(m.reach_time(&rest(), Point::new(200.0, 0.0), &grid).is_infinite());
    }

    #[test]
    fn series_matches_direct_reach_time() {
        let grid = TimeStepGrid::default();
        let m = MotionModel::ellipse(7.8, 3.0);
        let st = PlayerState::moving(Point::new(-4.0, 2.0), Point::new(3.0, -2.0));
        let series = ReachSeries::new(&m, st, grid, DEFAULT_SIDES);
        for target in [Point::new(10.0, 0.0), Point::new(-20.0, 13.0), Point::new(-4.0, 2.5)] {
            assert_eq!(series.reach_time(target), m.reach_time(&st, target, &grid));
        }
    }

    #[test]
    fn grid_validation() {
        assert!(TimeStepGrid::new(0.1, 10.0).is_ok());
        assert!(TimeStepGrid::new(0.3, 1.0).is_err());
        assert!(TimeStepGrid::new(0.0, 1.0).is_err());
        assert_eq!(TimeStepGrid::default().steps(), 100);
    }

    fn straight_runner(speed: f64, steps: usize) -> Trajectory {
        Trajectory {
            player: 1,
            first_step: 0,
            samples: (0..steps)
                .map(|k| Point::new(-50.0 + speed * k as f64 / 10.0, 0.0))
                .collect(),
        }
    }

    #[test]
    fn fit_uniform_runner() {
        let bins = DataDrivenBins::default();
        let model = fit_data_driven(&[straight_runner(5.0, 1000)], &bins, 7.8, 3.0).unwrap();
        let table = model.table.as_ref().unwrap();
        let sb = table.speed_bin_of(5.0);
        let t1 = table.taus.iter().position(|&t| (t - 1.0).abs() < 1e-12).unwrap();
        assert!((table.get(sb, 0, t1) - 5.0).abs() < 1e-9);
        assert!(table.is_monotone_in_tau());
        // polygon forward vertex at τ = 1 s for a 5 m/s runner
        let st = PlayerState::moving(Point::ORIGIN, Point::new(5.0, 0.0));
        let poly = model.reachable_polygon(&st, 1.0, 32).unwrap();
        assert!((poly.vertices[0].x - 5.0).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_small_corpus() {
        let bins = DataDrivenBins::default();
        assert!(matches!(
            fit_data_driven(&[], &bins, 7.8, 3.0),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            fit_data_driven(&[straight_runner(5.0, 500)], &bins, 7.8, 3.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn table_csv_round_trip() {
        let bins = DataDrivenBins {
            speed_edges: vec![0.0, 3.0, 8.0],
            angle_bins: 4,
            taus: vec![0.5, 1.0],
            ..Default::default()
        };
        let model = fit_data_driven(&[straight_runner(4.0, 1200)], &bins, 7.8, 3.0).unwrap();
        let table = model.table.unwrap();
        let back = ReachTable::from_csv(&table.to_csv()).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn circle_rotation_invariant() {
        let m = MotionModel::circle(7.8, 3.0);
        let a = m.reachable_polygon(&rest(), 1.3, 32).unwrap();
        let st = PlayerState { facing: PI / 3.0, ..rest() };
        let b = m.reachable_polygon(&st, 1.3, 32).unwrap();
        assert_eq!(a, b);
    }
}
