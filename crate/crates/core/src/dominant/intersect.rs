use crate::geometry::{Point, Polygon, Segment};
use crate::match_data::PlayerId;

use super::{IntersectionVertex, ReachableBoundary};

const DEDUP_TOL: f64 = 1e-9;

fn boxes_overlap(a: (Point, Point), b: (Point, Point)) -> bool {
    a.0.x <= b.1.x && b.0.x <= a.1.x && a.0.y <= b.1.y && b.0.y <= a.1.y
}

fn seg_box(s: &Segment) -> (Point, Point) {
    (
        Point::new(s.a.x.min(s.b.x), s.a.y.min(s.b.y)),
        Point::new(s.a.x.max(s.b.x), s.a.y.max(s.b.y)),
    )
}

/// All crossing and touching points of two polygon boundaries, deduplicated.
pub(crate) fn polygon_crossings(a: &Polygon, b: &Polygon) -> Vec<Point> {
    let box_a = a.bounds();
    let box_b = b.bounds();
    if !boxes_overlap(box_a, box_b) {
        return Vec::new();
    }
    let edges_a: Vec<Segment> = a
        .edges()
        .filter(|e| boxes_overlap(seg_box(e), box_b))
        .collect();
    let edges_b: Vec<(Segment, (Point, Point))> = b
        .edges()
        .map(|e| (e, seg_box(&e)))
        .filter(|(_, bx)| boxes_overlap(*bx, box_a))
        .collect();
    let mut out: Vec<Point> = Vec::new();
    for ea in &edges_a {
        let bx = seg_box(ea);
        for (eb, bb) in &edges_b {
            if !boxes_overlap(bx, *bb) {
                continue;
            }
            if let Some(hit) = ea.intersect(eb, DEDUP_TOL) {
                if !out.iter().any(|p| p.dist(hit.point) <= DEDUP_TOL) {
                    out.push(hit.point);
                }
            }
        }
    }
    out
}

/// Intersection points between two players' reachable boundaries at the
/// same horizon.
pub fn pair_intersections(a: &ReachableBoundary, b: &ReachableBoundary) -> Vec<IntersectionVertex> {
    debug_assert_eq!(a.step, b.step, "boundaries must share a horizon");
    let pair: (PlayerId, PlayerId) = (a.player.min(b.player), a.player.max(b.player));
    polygon_crossings(&a.polygon, &b.polygon)
        .into_iter()
        .map(|point| IntersectionVertex {
            point,
            tau: a.tau,
            step: a.step,
            pair,
        })
        .collect()
}
