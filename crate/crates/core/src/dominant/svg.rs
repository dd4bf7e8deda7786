//! SVG rendering of a subdivision.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::geometry::Point;
use crate::match_data::{PlayerId, Team};

use super::{DominantSubdivision, OwnershipGrid};

const SCALE: f64 = 8.0;
const PAD: f64 = 3.0;

fn team_colors(team: Option<Team>) -> (&'static str, &'static str) {
    match team {
        Some(Team::Home) => ("#f4a6a6", "#c62828"),
        Some(Team::Away) => ("#a6c8f4", "#1565c0"),
        None => ("#d0d0d0", "#555555"),
    }
}

/// Renders regions, player markers and the pitch outline. When `oracle` is
/// given, cells where it disagrees with the subdivision are drawn on top.
/// Elements are emitted in player-id order.
pub fn render_svg(
    sub: &DominantSubdivision,
    positions: &BTreeMap<PlayerId, Point>,
    teams: &BTreeMap<PlayerId, Team>,
    oracle: Option<&OwnershipGrid>,
) -> String {
    let pitch = sub.pitch;
    let w = (pitch.length() + 2.0 * PAD) * SCALE;
    let h = (pitch.width() + 2.0 * PAD) * SCALE;
    // y flipped so that +y points up
    let tx = |p: Point| ((p.x + pitch.half_length + PAD) * SCALE, (pitch.half_width + PAD - p.y) * SCALE);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    )
    .unwrap();
    writeln!(s, r##"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="#3a7d44"/>"##).unwrap();

    for (id, region) in &sub.regions {
        let (fill, stroke) = team_colors(teams.get(id).copied());
        for (k, poly) in std::iter::once(&region.polygon).chain(&region.detached).enumerate() {
            let pts: Vec<String> = poly
                .vertices
                .iter()
                .map(|&v| {
                    let (x, y) = tx(v);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let suffix = if k == 0 { String::new() } else { format!("-{k}") };
            writeln!(
                s,
                r#"<polygon id="region-{id}{suffix}" points="{}" fill="{fill}" fill-opacity="0.75" stroke="{stroke}" stroke-width="1"/>"#,
                pts.join(" ")
            )
            .unwrap();
        }
    }

    if let Some(grid) = oracle {
        let size = grid.cell_size * SCALE;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let c = grid.center(i, j);
                if sub.owner_at(c) == Some(grid.owner(i, j)) {
                    continue;
                }
                let (x, y) = tx(c);
                writeln!(
                    s,
                    r##"<rect class="disagree" x="{:.2}" y="{:.2}" width="{size:.2}" height="{size:.2}" fill="#ffeb3b" fill-opacity="0.8"/>"##,
                    x - size / 2.0,
                    y - size / 2.0
                )
                .unwrap();
            }
        }
    }

    let (x0, y0) = tx(Point::new(-pitch.half_length, pitch.half_width));
    writeln!(
        s,
        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="white" stroke-width="2"/>"#,
        pitch.length() * SCALE,
        pitch.width() * SCALE
    )
    .unwrap();
    let (cx, top) = tx(Point::new(0.0, pitch.half_width));
    let (_, bottom) = tx(Point::new(0.0, -pitch.half_width));
    writeln!(
        s,
        r#"<line x1="{cx:.2}" y1="{top:.2}" x2="{cx:.2}" y2="{bottom:.2}" stroke="white" stroke-width="2"/>"#
    )
    .unwrap();

    for (id, &p) in positions {
        let (_, stroke) = team_colors(teams.get(id).copied());
        let (x, y) = tx(p);
        writeln!(
            s,
            r#"<circle id="player-{id}" cx="{x:.2}" cy="{y:.2}" r="5" fill="{stroke}" stroke="white" stroke-width="1"/>"#
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" fill="white">{id}</text>"#,
            x + 6.0,
            y - 6.0
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
