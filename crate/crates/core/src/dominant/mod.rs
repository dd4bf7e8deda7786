//! Dominant-region subdivision of the pitch: pairwise reachable-boundary
//! intersections, spanning paths, and a left-turn walk per player.

mod grid;
mod intersect;
mod paths;
pub mod svg;
mod walk;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{Pitch, Point, Polygon, Segment};
use crate::match_data::PlayerId;
use crate::match_data::PlayerState;
use crate::motion::{MotionModel, ReachSeries, TimeStepGrid, MIN_SIDES};

pub use crate::motion::ReachableBoundary;
pub use grid::{agreement, grid_dominant, grid_dominant_on, OwnershipGrid};
pub use intersect::pair_intersections;
pub use paths::{build_pair_graph, select_boundary, spanning_paths, PairGraph};
pub use svg::render_svg;
pub use walk::enclosing_polygon;

/// Pair-boundary points further than this outside the pitch are irrelevant.
const OUTSIDE_MARGIN: f64 = 5.0;
const COINCIDENT: f64 = 0.01;
const SITE_INSET: f64 = 1e-3;
const SITE_SCAN_STRIDE: usize = 3;
const SITE_SCAN_LIMIT: usize = 30;
const DETACHED_PROBE: f64 = 1.0;
/// Traced faces where the player arrives first at fewer probe points than
/// this are treated as leaks.
const MIN_OWNED_SHARE: f64 = 0.9;
const DETACHED_CLEARANCE: f64 = 0.05;

/// A point where two players' reachable boundaries cross at one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionVertex {
    pub point: Point,
    pub tau: f64,
    /// 1-based grid step of `tau`.
    pub step: usize,
    /// Player ids, smaller first.
    pub pair: (PlayerId, PlayerId),
}

/// The approximate equal-arrival boundary between two players.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBoundary {
    pub pair: (PlayerId, PlayerId),
    pub path: Vec<IntersectionVertex>,
}

impl PairBoundary {
    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.path
            .windows(2)
            .map(|w| Segment::new(w[0].point, w[1].point))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub polygon: Polygon,
    /// Set when the walk failed and the region was traced from the grid rule.
    pub via_fallback: bool,
    /// Further faces owned by the player, away from its position.
    pub detached: Vec<Polygon>,
}

impl Region {
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.polygon.contains(p, tol) || self.detached.iter().any(|d| d.contains(p, tol))
    }

    fn contains_strict(&self, p: Point) -> bool {
        self.polygon.contains_strict(p) || self.detached.iter().any(|d| d.contains_strict(p))
    }

    pub fn area(&self) -> f64 {
        self.polygon.area() + self.detached.iter().map(Polygon::area).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominantSubdivision {
    pub step: Option<u32>,
    pub pitch: Pitch,
    pub regions: BTreeMap<PlayerId, Region>,
}

impl DominantSubdivision {
    /// Lowest player id whose region contains `p`.
    pub fn owner_at(&self, p: Point) -> Option<PlayerId> {
        self.regions
            .iter()
            .find(|(_, r)| r.contains(p, 1e-9))
            .map(|(&id, _)| id)
    }

    pub fn area(&self, player: PlayerId) -> Option<f64> {
        self.regions.get(&player).map(Region::area)
    }

    /// Fraction of `cell_size` grid cells owned by at least one region, and
    /// the fraction owned by more than one.
    pub fn coverage(&self, cell_size: f64) -> (f64, f64) {
        let (nx, ny) = grid::cell_counts(&self.pitch, cell_size);
        let mut covered = 0usize;
        let mut overlapped = 0usize;
        for i in 0..nx {
            for j in 0..ny {
                let c = grid::cell_center(&self.pitch, cell_size, i, j);
                let hits = self
                    .regions
                    .values()
                    .filter(|r| r.contains_strict(c))
                    .count();
                covered += usize::from(hits > 0);
                overlapped += usize::from(hits > 1);
            }
        }
        let total = (nx * ny) as f64;
        (covered as f64 / total, overlapped as f64 / total)
    }
}

/// Shoelace area of a simple polygon.
pub fn region_area(polygon: &Polygon) -> Result<f64> {
    if polygon.len() < 3 || !polygon.is_simple() {
        return Err(Error::NonSimple);
    }
    Ok(polygon.area())
}

/// Moves any player within 1 cm of a lower-id player 1 cm further in +x.
fn separate(states: &BTreeMap<PlayerId, PlayerState>) -> BTreeMap<PlayerId, PlayerState> {
    let mut out: BTreeMap<PlayerId, PlayerState> = BTreeMap::new();
    for (&id, s) in states {
        let mut s = *s;
        while out.values().any(|o| o.position.dist(s.position) < COINCIDENT) {
            s.position.x += COINCIDENT;
        }
        out.insert(id, s);
    }
    out
}

fn inside_box(pitch: &Pitch, p: Point) -> bool {
    pitch.contains(p, OUTSIDE_MARGIN)
}

/// Steps by which player `idx` beats every rival to `p` (negative when
/// beaten); unreachable counts as one step past the horizon.
fn arrival_margin(idx: usize, series: &[ReachSeries], p: Point) -> i64 {
    let never = series[idx].polygons.len() as i64 + 1;
    let step = |s: &ReachSeries| s.reach_step(p).map_or(never, |k| k as i64);
    let own = step(&series[idx]);
    let rival = series
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != idx)
        .map(|(_, s)| step(s))
        .min()
        .unwrap_or(never);
    rival - own
}

/// A walk start point for player `idx`: among its position and sample
/// points of its early reachable polygons, the one furthest from every
/// boundary segment that the player still reaches first. Near a player
/// running away the boundary can pass within centimetres of its position,
/// closer than the chord error of the boundary polyline.
fn owned_site(idx: usize, series: &[ReachSeries], segments: &[Segment], inset: &Pitch) -> Option<Point> {
    let own = &series[idx];
    let mut candidates = vec![inset.clamp(own.state.position)];
    let n = own.polygons.len();
    for k in (SITE_SCAN_STRIDE..=n.min(SITE_SCAN_LIMIT)).step_by(SITE_SCAN_STRIDE) {
        let poly = own.polygon(k);
        let m = poly.len() as f64;
        let centre = poly.vertices.iter().fold(Point::ORIGIN, |a, &v| a + v * (1.0 / m));
        candidates.push(centre);
        candidates.extend(poly.vertices.iter().step_by(2).map(|&v| centre.lerp(v, 0.5)));
    }
    let mut scored: Vec<(f64, usize, Point)> = candidates
        .into_iter()
        .filter(|&c| inset.contains(c, 0.0))
        .enumerate()
        .map(|(order, c)| {
            let clearance = segments
                .iter()
                .map(|s| s.distance_to(c))
                .fold(f64::INFINITY, f64::min);
            (clearance, order, c)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored
        .into_iter()
        .map(|(_, _, c)| c)
        .find(|&c| {
            let margin = arrival_margin(idx, series, c);
            margin > 0 || (margin == 0 && grid::first_arrival(series, c) == idx)
        })
}

/// Same-step edges where a boundary component appears or disappears: two
/// vertices closer to each other than to anything on the neighbouring
/// horizon.
/// Deaths are only detected before `last_step`, the final horizon scanned.
fn birth_death_edges(vertices: &[IntersectionVertex], last_step: usize) -> Vec<(usize, usize)> {
    let nearest_at = |v: &IntersectionVertex, step: usize| {
        vertices
            .iter()
            .filter(|w| w.step == step)
            .map(|w| w.point.dist(v.point))
            .fold(f64::INFINITY, f64::min)
    };
    let mut edges = Vec::new();
    for i in 0..vertices.len() {
        for j in (i + 1)..vertices.len() {
            let (a, b) = (&vertices[i], &vertices[j]);
            if a.step != b.step {
                continue;
            }
            let d = a.point.dist(b.point);
            let birth = d < nearest_at(a, a.step.wrapping_sub(1)) && d < nearest_at(b, b.step.wrapping_sub(1));
            let death = a.step < last_step
                && d < nearest_at(a, a.step + 1)
                && d < nearest_at(b, b.step + 1);
            if birth || death {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn polygon_covers_pitch(series: &ReachSeries, k: usize, pitch: &Pitch) -> bool {
    let (lo, hi) = series.bounds(k);
    lo.x <= -pitch.half_length
        && lo.y <= -pitch.half_width
        && hi.x >= pitch.half_length
        && hi.y >= pitch.half_width
        && pitch
            .corners()
            .iter()
            .all(|&c| series.polygon(k).contains_strict(c))
}

/// A piece of a pair boundary, tagged with the earliest horizon of its ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySegment {
    pub segment: Segment,
    pub step: usize,
}

/// True when some series other than `skip` reaches all of `seg` strictly
/// before its horizon, so it cannot border either player's region.
fn overshadowed(seg: &BoundarySegment, series: &[ReachSeries], skip: (usize, usize)) -> bool {
    if seg.step < 2 {
        return false;
    }
    let k = seg.step - 1;
    let s = seg.segment;
    let probes = [s.a, s.at(0.5), s.b];
    series.iter().enumerate().any(|(l, other)| {
        if l == skip.0 || l == skip.1 {
            return false;
        }
        let (lo, hi) = other.bounds(k);
        probes.iter().all(|p| p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y)
            && probes.iter().all(|&p| other.polygon(k).contains_strict(p))
    })
}

/// Boundary between two players: the selected path, plus the segments of
/// every boundary component with closing and truncation extensions.
pub fn pair_boundary(
    ids: (PlayerId, PlayerId),
    a: &ReachSeries,
    b: &ReachSeries,
    pitch: &Pitch,
) -> (Option<PairBoundary>, Vec<BoundarySegment>) {
    let n = a.polygons.len();
    let mut vertices: Vec<IntersectionVertex> = Vec::new();
    let mut last_step = n;
    for k in 1..=n {
        let (la, ha) = a.bounds(k);
        let (lb, hb) = b.bounds(k);
        if la.x <= hb.x && lb.x <= ha.x && la.y <= hb.y && lb.y <= ha.y {
            let tau = a.grid.tau(k);
            vertices.extend(
                intersect::polygon_crossings(a.polygon(k), b.polygon(k))
                    .into_iter()
                    .map(|point| IntersectionVertex {
                        point,
                        tau,
                        step: k,
                        pair: ids,
                    }),
            );
        }
        // both reach the whole pitch: later crossings all lie outside it
        if polygon_covers_pitch(a, k, pitch) && polygon_covers_pitch(b, k, pitch) {
            last_step = k;
            break;
        }
    }
    if vertices.is_empty() {
        return (None, Vec::new());
    }
    let mut graph = build_pair_graph(&vertices);
    let extra = birth_death_edges(&vertices, last_step);
    for e in &extra {
        if !graph.edges.contains(e) {
            graph.edges.push(*e);
        }
    }
    let paths = spanning_paths(&graph, &vertices);
    let selected = select_boundary(&paths, &vertices).ok();

    let mut segs = Vec::new();
    for path in paths.iter().filter(|p| p.len() >= 2) {
        segs.extend(path.windows(2).map(|w| {
            let (u, v) = (vertices[w[0]], vertices[w[1]]);
            BoundarySegment {
                segment: Segment::new(u.point, v.point),
                step: u.step.min(v.step),
            }
        }));
        let (first, last) = (path[0], path[path.len() - 1]);
        let key = (first.min(last), first.max(last));
        if path.len() > 2 && graph.edges.contains(&key) {
            // the component closes into a loop
            segs.push(BoundarySegment {
                segment: Segment::new(vertices[last].point, vertices[first].point),
                step: vertices[last].step.min(vertices[first].step),
            });
            continue;
        }
        // horizon truncation: continue open ends straight out of the pitch
        for (tip, prev) in [(last, path[path.len() - 2]), (first, path[1])] {
            let (tip, prev) = (vertices[tip], vertices[prev]);
            if tip.step != n || !inside_box(pitch, tip.point) {
                continue;
            }
            let d = tip.point - prev.point;
            if d.norm() <= 0.0 {
                continue;
            }
            let dir = d * (1.0 / d.norm());
            let reach = pitch.exit_distance(tip.point, dir, OUTSIDE_MARGIN);
            segs.push(BoundarySegment {
                segment: Segment::new(tip.point, tip.point + dir * (reach + 1.0)),
                step: n,
            });
        }
    }
    (selected, segs)
}

/// Coarse sample of the pitch with the first-arrival owner of every point,
/// used to spot leaking faces and faces no walk has reached.
struct Probes {
    points: Vec<Point>,
    owners: Vec<usize>,
    /// Arrival step of the owner; `usize::MAX` when nobody arrives.
    steps: Vec<usize>,
}

impl Probes {
    fn new(series: &[ReachSeries], inset: &Pitch) -> Self {
        let (nx, ny) = grid::cell_counts(inset, DETACHED_PROBE);
        let points: Vec<Point> = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| (i, j)))
            .map(|(i, j)| grid::cell_center(inset, DETACHED_PROBE, i, j))
            .collect();
        let owners: Vec<usize> = points.iter().map(|&p| grid::first_arrival(series, p)).collect();
        let steps = points
            .iter()
            .zip(&owners)
            .map(|(&p, &o)| series[o].reach_step(p).unwrap_or(usize::MAX))
            .collect();
        Self { points, owners, steps }
    }

    fn inside<'a>(&'a self, poly: &'a Polygon) -> impl Iterator<Item = usize> + 'a {
        let (lo, hi) = poly.bounds();
        (0..self.points.len()).filter(move |&k| {
            let q = self.points[k];
            q.x >= lo.x && q.x <= hi.x && q.y >= lo.y && q.y <= hi.y && poly.contains_strict(q)
        })
    }

    /// Share of the probes inside `poly` already strictly inside one of `regions`.
    fn taken_share(&self, poly: &Polygon, regions: &BTreeMap<PlayerId, Region>) -> f64 {
        let (mut inside, mut taken) = (0usize, 0usize);
        for k in self.inside(poly) {
            inside += 1;
            taken += usize::from(regions.values().any(|r| r.contains_strict(self.points[k])));
        }
        if inside == 0 {
            0.0
        } else {
            taken as f64 / inside as f64
        }
    }

    /// Share of the probes inside `poly` that player `idx` reaches first or
    /// one step late; 1 when no probe falls inside.
    fn owned_share(&self, poly: &Polygon, idx: usize, series: &[ReachSeries]) -> f64 {
        let (mut inside, mut owned) = (0usize, 0usize);
        for k in self.inside(poly) {
            inside += 1;
            let close = self.owners[k] == idx
                || series[idx]
                    .reach_step_before(self.points[k], self.steps[k].saturating_add(2))
                    .is_some();
            owned += usize::from(close);
        }
        if inside == 0 {
            1.0
        } else {
            owned as f64 / inside as f64
        }
    }
}

/// Traces the faces left uncovered by the walks from each player's own site
/// and gives each to the first-arrival owner of a probe inside it.
fn fill_detached(
    regions: &mut BTreeMap<PlayerId, Region>,
    ids: &[PlayerId],
    series: &[ReachSeries],
    segments: &[Vec<Segment>],
    probes: &Probes,
    pitch: &Pitch,
) {
    let mut rejected: Vec<Polygon> = Vec::new();
    for (k, &p) in probes.points.iter().enumerate() {
        if regions.values().any(|r| r.contains(p, 1e-9)) {
            continue;
        }
        let idx = probes.owners[k];
        let face = if rejected.iter().any(|f| f.contains(p, 1e-9)) {
            grid::radial_region(idx, p, series, pitch)
        } else {
            if segments[idx].iter().any(|s| s.distance_to(p) < DETACHED_CLEARANCE) {
                continue;
            }
            let Ok(face) = enclosing_polygon(p, &segments[idx], Point::ORIGIN) else {
                continue;
            };
            let leaks = probes.owned_share(&face, idx, series) < MIN_OWNED_SHARE
                || probes
                    .inside(&face)
                    .any(|q| regions.values().any(|r| r.contains_strict(probes.points[q])));
            if leaks {
                rejected.push(face);
                grid::radial_region(idx, p, series, pitch)
            } else {
                face
            }
        };
        if let Some(r) = regions.get_mut(&ids[idx]) {
            r.detached.push(face);
        }
    }
}

/// Computes every player's dominant region on the default pitch.
pub fn dominant_subdivision(
    states: &BTreeMap<PlayerId, PlayerState>,
    model: &MotionModel,
    grid: &TimeStepGrid,
    n_sides: usize,
) -> Result<DominantSubdivision> {
    dominant_subdivision_on(states, model, grid, n_sides, &Pitch::default())
}

pub fn dominant_subdivision_on(
    states: &BTreeMap<PlayerId, PlayerState>,
    model: &MotionModel,
    grid: &TimeStepGrid,
    n_sides: usize,
    pitch: &Pitch,
) -> Result<DominantSubdivision> {
    if states.len() < 2 {
        return Err(Error::Precondition(format!(
            "dominant subdivision needs at least 2 players, got {}",
            states.len()
        )));
    }
    if n_sides < MIN_SIDES {
        return Err(Error::Precondition(format!(
            "polygon needs at least {MIN_SIDES} sides, got {n_sides}"
        )));
    }
    model.validate()?;
    let states = separate(states);
    let ids: Vec<PlayerId> = states.keys().copied().collect();
    let series: Vec<ReachSeries> = ids
        .iter()
        .map(|id| ReachSeries::new(model, states[id], *grid, n_sides))
        .collect();

    let mut per_player: Vec<Vec<Segment>> = vec![pitch.walls().to_vec(); ids.len()];
    let mut visible: Vec<Vec<Segment>> = vec![Vec::new(); ids.len()];
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len() {
            let (_, segs) = pair_boundary((ids[i], ids[j]), &series[i], &series[j], pitch);
            for seg in segs {
                per_player[i].push(seg.segment);
                per_player[j].push(seg.segment);
                if !overshadowed(&seg, &series, (i, j)) {
                    visible[i].push(seg.segment);
                    visible[j].push(seg.segment);
                }
            }
        }
    }

    let inset = Pitch {
        half_length: pitch.half_length - SITE_INSET,
        half_width: pitch.half_width - SITE_INSET,
    };
    let probes = Probes::new(&series, &inset);
    let mut regions = BTreeMap::new();
    for (idx, &id) in ids.iter().enumerate() {
        let Some(site) = owned_site(idx, &series, &visible[idx], &inset) else {
            // dominated everywhere it can reach
            regions.insert(
                id,
                Region {
                    polygon: Polygon::new(Vec::new()),
                    via_fallback: false,
                    detached: Vec::new(),
                },
            );
            continue;
        };
        let traced = enclosing_polygon(site, &per_player[idx], Point::ORIGIN)
            .ok()
            .filter(|poly| probes.owned_share(poly, idx, &series) >= MIN_OWNED_SHARE);
        let region = match traced {
            // a near-tie rival already holds this face; leave the rest to the fill
            Some(polygon) if probes.taken_share(&polygon, &regions) > 1.0 - MIN_OWNED_SHARE => Region {
                polygon: Polygon::new(Vec::new()),
                via_fallback: true,
                detached: Vec::new(),
            },
            Some(polygon) => Region {
                polygon,
                via_fallback: false,
                detached: Vec::new(),
            },
            None => Region {
                polygon: grid::radial_region(idx, site, &series, pitch),
                via_fallback: true,
                detached: Vec::new(),
            },
        };
        regions.insert(id, region);
    }
    fill_detached(&mut regions, &ids, &series, &per_player, &probes, pitch);
    Ok(DominantSubdivision {
        step: None,
        pitch: *pitch,
        regions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{DEFAULT_A_MAX, DEFAULT_SIDES, DEFAULT_V_MAX};

    fn circle() -> MotionModel {
        MotionModel::circle(DEFAULT_V_MAX, DEFAULT_A_MAX)
    }

    fn at_rest(points: &[(f64, f64)]) -> BTreeMap<PlayerId, PlayerState> {
        points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (i as PlayerId + 1, PlayerState::at_rest(Point::new(x, y))))
            .collect()
    }

    #[test]
    fn two_players_split_at_bisector() {
        let states = at_rest(&[(-10.0, 5.0), (10.0, 5.0)]);
        let sub = dominant_subdivision(&states, &circle(), &TimeStepGrid::default(), DEFAULT_SIDES).unwrap();
        let left = &sub.regions[&1].polygon;
        let right = &sub.regions[&2].polygon;
        // every vertex off the pitch walls lies within 0.2 m of x = 0
        for v in left.vertices.iter().chain(&right.vertices) {
            let on_wall = (v.x.abs() - 52.5).abs() < 1e-6 || (v.y.abs() - 34.0).abs() < 1e-6;
            if !on_wall {
                assert!(v.x.abs() < 0.2, "{v:?}");
            }
        }
        assert!((left.area() + right.area() - 7140.0).abs() < 0.005 * 7140.0);
    }

    #[test]
    fn single_player_is_rejected() {
        let states = at_rest(&[(0.0, 0.0)]);
        assert!(matches!(
            dominant_subdivision(&states, &circle(), &TimeStepGrid::default(), DEFAULT_SIDES),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn coincident_players_are_separated() {
        let states = at_rest(&[(3.0, 3.0), (3.0, 3.0), (-20.0, 0.0)]);
        let sub = dominant_subdivision(&states, &circle(), &TimeStepGrid::default(), DEFAULT_SIDES).unwrap();
        assert_eq!(sub.regions.len(), 3);
        let (cov, over) = sub.coverage(1.0);
        assert!(cov > 0.99 && over < 0.005, "{cov} {over}");
    }

    #[test]
    fn region_area_examples() {
        let sq = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]);
        assert_eq!(region_area(&sq).unwrap(), 1.0);
        assert_eq!(region_area(&Pitch::default().polygon()).unwrap(), 7140.0);
        let g = Polygon::regular(Point::ORIGIN, 1.0, 32);
        let expect = 0.5 * 32.0 * (std::f64::consts::TAU / 32.0).sin();
        assert!((region_area(&g).unwrap() - expect).abs() < 1e-12);
        let bow = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ]);
        assert!(matches!(region_area(&bow), Err(Error::NonSimple)));
    }

    #[test]
    fn pair_intersection_examples() {
        let mk = |player, c: Point| ReachableBoundary {
            player,
            step: 1,
            tau: 0.1,
            polygon: Polygon::regular(c, 1.0, 32),
        };
        let a = mk(1, Point::ORIGIN);
        assert_eq!(pair_intersections(&a, &mk(2, Point::new(1.0, 0.0))).len(), 2);
        let inner = ReachableBoundary {
            polygon: Polygon::regular(Point::ORIGIN, 0.5, 32),
            ..mk(2, Point::ORIGIN)
        };
        assert!(pair_intersections(&a, &inner).is_empty());
        let tangent = pair_intersections(&a, &mk(2, Point::new(2.0, 0.0)));
        assert_eq!(tangent.len(), 1);
        assert!(tangent[0].point.dist(Point::new(1.0, 0.0)) < 1e-9);
        assert_eq!(tangent[0].pair, (1, 2));
    }
}
