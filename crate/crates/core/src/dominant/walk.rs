//! Face tracing in a segment arrangement: shoot a ray from the site, then
//! keep turning left until the walk returns to where it started.

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon, Segment};

const HIT_TOL: f64 = 1e-9;
const SITE_CLEARANCE: f64 = 1e-9;
const SITE_NUDGE: f64 = 1e-6;
const RAY_LENGTH: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cursor {
    seg: usize,
    /// Parameter along the segment.
    t: f64,
    /// +1 walks towards `b`, -1 towards `a`.
    dir: f64,
}

fn heading(seg: &Segment, dir: f64) -> Point {
    seg.dir() * dir
}

fn turn_angle(incoming: Point, outgoing: Point) -> f64 {
    incoming.cross(outgoing).atan2(incoming.dot(outgoing))
}

/// Traces the face of the arrangement of `segments` that contains `site`,
/// returning it as a counter-clockwise polygon.
///
/// `segments` should include the pitch walls so that every face is bounded.
/// A site lying on a segment is nudged 1e-6 m towards `center`. Dangling
/// segment ends are handled by walking back along the segment; the spikes
/// this leaves are removed from the result.
pub fn enclosing_polygon(site: Point, segments: &[Segment], center: Point) -> Result<Polygon> {
    let mut site = site;
    if segments.iter().any(|s| s.distance_to(site) <= SITE_CLEARANCE) {
        let towards = center - site;
        let nudge = if towards.norm() > 0.0 {
            towards * (1.0 / towards.norm())
        } else {
            Point::new(1.0, 0.0)
        };
        site = site + nudge * SITE_NUDGE;
    }

    let budget = 10 * segments.len().max(1);
    let hits = shoot(site, segments).ok_or(Error::OpenBoundary { budget: 0 })?;
    let mut last_err = Error::OpenBoundary { budget };
    // a hit on a floating fragment traces a hole; move on to the next hit
    for (start_seg, start_t) in hits {
        match trace(site, segments, start_seg, start_t, budget) {
            Ok(poly) => return Ok(poly),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn trace(site: Point, segments: &[Segment], start_seg: usize, start_t: f64, budget: usize) -> Result<Polygon> {
    let start_point = segments[start_seg].at(start_t);
    let side = segments[start_seg].dir().cross(site - start_point);
    let start = Cursor {
        seg: start_seg,
        t: start_t,
        dir: if side >= 0.0 { 1.0 } else { -1.0 },
    };

    let mut ring = vec![start_point];
    let mut cur = start;
    for _ in 0..budget {
        let seg = segments[cur.seg];
        let len = seg.length();
        let ptol = HIT_TOL / len;

        // nearest crossing strictly ahead on the current segment
        let mut next_t = if cur.dir > 0.0 { 1.0 } else { 0.0 };
        let mut crossings: Vec<(usize, f64)> = Vec::new();
        for (j, other) in segments.iter().enumerate() {
            if j == cur.seg {
                continue;
            }
            let Some(hit) = seg.intersect(other, HIT_TOL) else {
                continue;
            };
            let ahead = (hit.t - cur.t) * cur.dir;
            if ahead <= ptol {
                continue;
            }
            let gap = (hit.t - next_t) * cur.dir;
            if gap < -ptol {
                next_t = hit.t;
                crossings.clear();
                crossings.push((j, hit.u));
            } else if gap.abs() <= ptol {
                crossings.push((j, hit.u));
            }
        }
        // drop crossings that belonged to a farther candidate point
        let here = seg.at(next_t);
        crossings.retain(|&(j, u)| segments[j].at(u).dist(here) <= 10.0 * HIT_TOL);

        let passes_start = cur.seg == start.seg
            && cur.dir == start.dir
            && (start.t - cur.t) * cur.dir > ptol
            && (next_t - start.t) * cur.dir >= -ptol;
        if passes_start {
            return finish(ring, site);
        }
        ring.push(here);

        let incoming = heading(&seg, cur.dir);
        let mut options: Vec<Cursor> = Vec::new();
        let at_end = if cur.dir > 0.0 {
            next_t >= 1.0 - ptol
        } else {
            next_t <= ptol
        };
        if !at_end {
            options.push(Cursor {
                seg: cur.seg,
                t: next_t,
                dir: cur.dir,
            });
        }
        for &(j, u) in &crossings {
            let jt = HIT_TOL / segments[j].length();
            if u < 1.0 - jt {
                options.push(Cursor { seg: j, t: u, dir: 1.0 });
            }
            if u > jt {
                options.push(Cursor { seg: j, t: u, dir: -1.0 });
            }
        }
        cur = options
            .into_iter()
            .map(|c| (turn_angle(incoming, heading(&segments[c.seg], c.dir)), c))
            // a full reversal is only taken when nothing else is available
            .filter(|(a, _)| a.abs() < std::f64::consts::PI - 1e-12)
            .max_by(|(a, ca), (b, cb)| a.total_cmp(b).then_with(|| cb.seg.cmp(&ca.seg)))
            .map(|(_, c)| c)
            .unwrap_or(Cursor {
                seg: cur.seg,
                t: next_t,
                dir: -cur.dir,
            });
    }
    Err(Error::OpenBoundary { budget })
}

/// Segments crossed by a ray from `site`, nearest first. The ray starts
/// towards +x and rotates slightly whenever the nearest hit lands on a
/// segment end or on several segments at once.
fn shoot(site: Point, segments: &[Segment]) -> Option<Vec<(usize, f64)>> {
    for attempt in 0..64 {
        let dir = Point::from_polar(RAY_LENGTH, attempt as f64 * 0.0137);
        let ray = Segment::new(site, site + dir);
        let mut hits: Vec<(f64, usize, f64)> = segments
            .iter()
            .enumerate()
            .filter_map(|(i, s)| ray.intersect(s, 0.0).map(|h| (h.t, i, h.u)))
            .collect();
        hits.sort_by(|a, b| a.0.total_cmp(&b.0));
        let Some(&(t, i, u)) = hits.first() else {
            continue;
        };
        let tol = HIT_TOL / segments[i].length();
        let clear_end = u > tol && u < 1.0 - tol;
        let unique = hits.get(1).is_none_or(|h| (h.0 - t) * RAY_LENGTH > HIT_TOL);
        if clear_end && unique {
            return Some(hits.into_iter().map(|(_, i, u)| (i, u)).collect());
        }
    }
    None
}

fn finish(ring: Vec<Point>, site: Point) -> Result<Polygon> {
    if Polygon::new(ring.clone()).signed_area() <= 0.0 {
        return Err(Error::OpenBoundary { budget: 0 });
    }
    let mut pts = ring;
    // remove duplicates, straight-through vertices and spikes until stable
    loop {
        let before = pts.len();
        pts.dedup_by(|a, b| a.dist(*b) <= HIT_TOL);
        while pts.len() > 1 && pts[0].dist(pts[pts.len() - 1]) <= HIT_TOL {
            pts.pop();
        }
        let n = pts.len();
        if n < 3 {
            break;
        }
        let mut keep = vec![true; n];
        let mut i = 0;
        while i < n {
            let a = pts[(i + n - 1) % n];
            let b = pts[i];
            let c = pts[(i + 1) % n];
            let (u, v) = (b - a, c - b);
            let collinear = u.cross(v).abs() <= 1e-9 * u.norm().max(1.0) * v.norm().max(1.0);
            if collinear {
                keep[i] = false;
                break;
            }
            i += 1;
        }
        pts = pts
            .into_iter()
            .zip(keep)
            .filter_map(|(p, k)| k.then_some(p))
            .collect();
        if pts.len() == before {
            break;
        }
    }
    let mut poly = Polygon::new(pts);
    if poly.len() < 3 {
        return Err(Error::NonSimple);
    }
    poly.make_ccw();
    if !poly.contains(site, 1e-6) {
        return Err(Error::OpenBoundary { budget: 0 });
    }
    Ok(poly)
}
