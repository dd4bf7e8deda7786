//! Per-pass predictor variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::dominant::{dominant_subdivision_on, DominantSubdivision, Region};
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon, Segment};
use crate::match_data::{
    EventKind, FacingMode, MatchDataset, PassRecord, PlayerId, PossessionSequence, SequenceKind, Team,
    DEFAULT_BALL_SPEED,
};
use crate::motion::{MotionModel, TimeStepGrid, DEFAULT_SIDES};

pub const CATALOG_VERSION: &str = "passrate-catalog-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    BasicGeometric,
    Sequential,
    Physiological,
    Strategic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub category: Category,
    pub unit: &'static str,
}

const fn entry(name: &'static str, category: Category, unit: &'static str) -> CatalogEntry {
    CatalogEntry { name, category, unit }
}

use Category::*;

/// The fixed feature catalog, in column order.
pub const CATALOG: [CatalogEntry; 25] = [
    entry("pass_distance", BasicGeometric, "m"),
    entry("pass_ball_speed", BasicGeometric, "m/s"),
    entry("pass_angle_to_attack", BasicGeometric, "rad"),
    entry("passer_speed", BasicGeometric, "m/s"),
    entry("passer_dist_nearest_opponent", BasicGeometric, "m"),
    entry("receiver_dist_nearest_opponent", BasicGeometric, "m"),
    entry("passer_dist_to_opponent_goal", BasicGeometric, "m"),
    entry("end_point_dist_to_opponent_goal", BasicGeometric, "m"),
    entry("pass_lateral_position", BasicGeometric, "m"),
    entry("player_possession_pass_index", Sequential, "count"),
    entry("team_possession_pass_index", Sequential, "count"),
    entry("play_possession_pass_index", Sequential, "count"),
    entry("team_possession_duration", Sequential, "s"),
    entry("play_possession_event_count", Sequential, "count"),
    entry("sequence_outcome_is_shot_or_goal", Sequential, "flag"),
    entry("opponent_reach_time_midpoint", Physiological, "s"),
    entry("opponent_reach_time_end_point", Physiological, "s"),
    entry("opponents_reaching_lane", Physiological, "count"),
    entry("receiver_reach_time_end_point", Physiological, "s"),
    entry("passer_region_area", Strategic, "m2"),
    entry("receiver_region_area", Strategic, "m2"),
    entry("team_region_share", Strategic, "fraction"),
    entry("team_region_share_change", Strategic, "fraction"),
    entry("team_attacking_half_area", Strategic, "m2"),
    entry("opposing_regions_crossed", Strategic, "count"),
];

pub fn catalog_index(name: &str) -> Option<usize> {
    CATALOG.iter().position(|e| e.name == name)
}

/// Options shared by every feature evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub n_sides: usize,
    pub facing_mode: FacingMode,
    /// Ball speed assumed when a pass has no receive step.
    pub ball_speed: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            n_sides: DEFAULT_SIDES,
            facing_mode: FacingMode::FaceBall,
            ball_speed: DEFAULT_BALL_SPEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub pass_index: usize,
    pub values: Vec<f64>,
    /// `true` where the value is defined.
    pub mask: Vec<bool>,
}

impl FeatureVector {
    fn empty(pass_index: usize) -> Self {
        FeatureVector {
            pass_index,
            values: vec![0.0; CATALOG.len()],
            mask: vec![false; CATALOG.len()],
        }
    }

    fn set(&mut self, name: &str, value: Option<f64>) {
        let j = catalog_index(name).expect("catalog name");
        match value {
            Some(v) if v.is_finite() => {
                self.values[j] = v;
                self.mask[j] = true;
            }
            _ => {
                self.values[j] = 0.0;
                self.mask[j] = false;
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let j = catalog_index(name)?;
        self.mask[j].then_some(self.values[j])
    }
}

/// Per-column mean and population standard deviation over defined entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<FeatureVector>,
    pub catalog_version: String,
    pub standardization: Option<Standardization>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        CATALOG.len()
    }

    /// Dense row-major values.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    /// Share of masked entries in each column.
    pub fn mask_rates(&self) -> Vec<f64> {
        let m = self.rows.len().max(1) as f64;
        (0..CATALOG.len())
            .map(|j| self.rows.iter().filter(|r| !r.mask[j]).count() as f64 / m)
            .collect()
    }

    fn impute_column_means(&mut self) {
        for j in 0..CATALOG.len() {
            let (sum, n) = self
                .rows
                .iter()
                .filter(|r| r.mask[j])
                .fold((0.0, 0usize), |(s, n), r| (s + r.values[j], n + 1));
            let mean = if n > 0 { sum / n as f64 } else { 0.0 };
            for r in self.rows.iter_mut().filter(|r| !r.mask[j]) {
                r.values[j] = mean;
            }
        }
    }

    /// Applies stored statistics; masked entries become 0.
    pub fn apply_standardization(&self, stats: &Standardization) -> FeatureMatrix {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let values = (0..CATALOG.len())
                    .map(|j| {
                        if !r.mask[j] || stats.stds[j] == 0.0 {
                            0.0
                        } else {
                            (r.values[j] - stats.means[j]) / stats.stds[j]
                        }
                    })
                    .collect();
                FeatureVector {
                    pass_index: r.pass_index,
                    values,
                    mask: r.mask.clone(),
                }
            })
            .collect();
        FeatureMatrix {
            rows,
            catalog_version: self.catalog_version.clone(),
            standardization: Some(stats.clone()),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# catalog_version={}", self.catalog_version).unwrap();
        let names: Vec<&str> = CATALOG.iter().map(|e| e.name).collect();
        writeln!(s, "pass_index,{}", names.join(",")).unwrap();
        for r in &self.rows {
            s.push_str(&r.pass_index.to_string());
            for j in 0..CATALOG.len() {
                s.push(',');
                if r.mask[j] {
                    write!(s, "{}", r.values[j]).unwrap();
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<FeatureMatrix> {
        let mut version = None;
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix('#') {
                Some(c) => {
                    if let Some(v) = c.trim().strip_prefix("catalog_version=") {
                        version = Some(v.trim().to_string());
                    }
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let version = version.ok_or_else(|| Error::schema(1, "missing catalog_version comment"))?;
        if version != CATALOG_VERSION {
            return Err(Error::Precondition(format!(
                "catalog version {version} does not match {CATALOG_VERSION}"
            )));
        }
        let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let headers = rdr.headers()?.clone();
        let expected: Vec<&str> = std::iter::once("pass_index")
            .chain(CATALOG.iter().map(|e| e.name))
            .collect();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::schema(2, "feature header does not match the catalog"));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 3;
            let rec = rec?;
            let pass_index = rec[0]
                .parse()
                .map_err(|_| Error::schema(line, format!("bad pass_index {:?}", &rec[0])))?;
            let mut row = FeatureVector::empty(pass_index);
            for j in 0..CATALOG.len() {
                let field = rec[j + 1].trim();
                if field.is_empty() {
                    continue;
                }
                row.values[j] = field
                    .parse()
                    .map_err(|_| Error::schema(line, format!("bad value {field:?}")))?;
                row.mask[j] = true;
            }
            rows.push(row);
        }
        let mut m = FeatureMatrix {
            rows,
            catalog_version: version,
            standardization: None,
        };
        m.impute_column_means();
        Ok(m)
    }

    pub fn read_csv(path: &Path) -> Result<FeatureMatrix> {
        FeatureMatrix::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Z-scores every column using the defined entries only. Masked entries and
/// zero-variance columns map to 0.
pub fn standardize(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    if matrix.rows.len() < 2 {
        return Err(Error::TooFewExamples(format!(
            "standardization needs at least 2 rows, got {}",
            matrix.rows.len()
        )));
    }
    let mut means = vec![0.0; CATALOG.len()];
    let mut stds = vec![0.0; CATALOG.len()];
    for j in 0..CATALOG.len() {
        let vals: Vec<f64> = matrix
            .rows
            .iter()
            .filter(|r| r.mask[j])
            .map(|r| r.values[j])
            .collect();
        if vals.is_empty() {
            continue;
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        means[j] = mean;
        stds[j] = if var > 1e-24 { var.sqrt() } else { 0.0 };
    }
    Ok(matrix.apply_standardization(&Standardization { means, stds }))
}

/// Dominant subdivisions keyed by step, computed once.
#[derive(Debug, Default)]
pub struct RegionCache {
    regions: BTreeMap<u32, Option<DominantSubdivision>>,
}

impl RegionCache {
    /// Computes the subdivision at every requested step in parallel. Steps
    /// with fewer than two players, or where the computation fails, hold
    /// `None`.
    pub fn build(
        dataset: &MatchDataset,
        steps: &BTreeSet<u32>,
        model: &MotionModel,
        grid: &TimeStepGrid,
        config: &FeatureConfig,
    ) -> Self {
        let steps: Vec<u32> = steps.iter().copied().collect();
        let computed: Vec<(u32, Option<DominantSubdivision>)> = steps
            .par_iter()
            .map(|&s| {
                let states = dataset.states_at(s, config.facing_mode);
                let sub = dominant_subdivision_on(&states, model, grid, config.n_sides, &dataset.pitch)
                    .ok()
                    .map(|mut d| {
                        d.step = Some(s);
                        d
                    });
                (s, sub)
            })
            .collect();
        RegionCache {
            regions: computed.into_iter().collect(),
        }
    }

    pub fn get(&self, step: u32) -> Option<&DominantSubdivision> {
        self.regions.get(&step).and_then(Option::as_ref)
    }
}

fn steps_needed(passes: &[PassRecord]) -> BTreeSet<u32> {
    passes
        .iter()
        .flat_map(|p| std::iter::once(p.pass_event.step).chain(p.receive_step))
        .collect()
}

/// Evaluates the catalog for one pass.
pub fn compute_features(
    dataset: &MatchDataset,
    pass: &PassRecord,
    pass_index: usize,
    model: &MotionModel,
    grid: &TimeStepGrid,
    config: &FeatureConfig,
) -> FeatureVector {
    let cache = RegionCache::build(dataset, &steps_needed(std::slice::from_ref(pass)), model, grid, config);
    features_with_cache(dataset, pass, pass_index, model, grid, config, &cache, &SequenceIndex::new(dataset))
}

/// Row `i` is `compute_features` of pass `i`.
pub fn feature_matrix(
    dataset: &MatchDataset,
    passes: &[PassRecord],
    model: &MotionModel,
    grid: &TimeStepGrid,
    config: &FeatureConfig,
) -> Result<FeatureMatrix> {
    if passes.is_empty() {
        return Err(Error::Precondition("no passes to featurize".into()));
    }
    let cache = RegionCache::build(dataset, &steps_needed(passes), model, grid, config);
    let sequences = SequenceIndex::new(dataset);
    let rows: Vec<FeatureVector> = passes
        .par_iter()
        .enumerate()
        .map(|(i, p)| features_with_cache(dataset, p, i, model, grid, config, &cache, &sequences))
        .collect();
    let mut m = FeatureMatrix {
        rows,
        catalog_version: CATALOG_VERSION.to_string(),
        standardization: None,
    };
    m.impute_column_means();
    Ok(m)
}

/// Possession sequences of each kind, with the sequence index of every event.
struct SequenceIndex {
    sequences: BTreeMap<SequenceKind, Vec<PossessionSequence>>,
}

impl SequenceIndex {
    fn new(dataset: &MatchDataset) -> Self {
        let sequences = [
            SequenceKind::PlayerPossession,
            SequenceKind::TeamPossession,
            SequenceKind::PlayPossession,
        ]
        .into_iter()
        .map(|k| (k, dataset.possession_sequences(k)))
        .collect();
        SequenceIndex { sequences }
    }

    fn containing(&self, kind: SequenceKind, event: usize) -> Option<&PossessionSequence> {
        self.sequences[&kind].iter().find(|s| s.events.contains(&event))
    }
}

fn region_polygons(region: &Region) -> impl Iterator<Item = &Polygon> {
    std::iter::once(&region.polygon).chain(&region.detached)
}

fn team_area(sub: &DominantSubdivision, dataset: &MatchDataset, team: Team) -> f64 {
    sub.regions
        .iter()
        .filter(|(&id, _)| dataset.team_of(id) == Some(team))
        .map(|(_, r)| r.area())
        .sum()
}

fn team_share(sub: &DominantSubdivision, dataset: &MatchDataset, team: Team) -> Option<f64> {
    let total: f64 = sub.regions.values().map(Region::area).sum();
    (total > 0.0).then(|| (team_area(sub, dataset, team) / total).clamp(0.0, 1.0))
}

pub(crate) fn nearest_opponent(dataset: &MatchDataset, player: PlayerId, step: u32) -> Option<f64> {
    let team = dataset.team_of(player)?;
    let at = dataset.position(player, step)?;
    dataset
        .players_at(step)
        .into_iter()
        .filter(|&q| dataset.team_of(q) == Some(team.opponent()))
        .filter_map(|q| dataset.position(q, step))
        .map(|q| q.dist(at))
        .min_by(f64::total_cmp)
}

#[allow(clippy::too_many_arguments)]
fn features_with_cache(
    dataset: &MatchDataset,
    pass: &PassRecord,
    pass_index: usize,
    model: &MotionModel,
    grid: &TimeStepGrid,
    config: &FeatureConfig,
    cache: &RegionCache,
    sequences: &SequenceIndex,
) -> FeatureVector {
    let mut fv = FeatureVector::empty(pass_index);
    let step = pass.pass_event.step;
    let hz = dataset.clock.frequency_hz as f64;
    let Some(team) = dataset.team_of(pass.passer) else {
        return fv;
    };
    let sign = dataset.attack_sign(team, step);
    let goal = Point::new(sign * dataset.pitch.half_length, 0.0);
    let (start, end) = (pass.start_point, pass.end_point);
    let distance = start.dist(end);
    let receiver = pass.receiver.filter(|_| pass.completed);
    let flight = pass.receive_step.map(|r| (r - step) as f64 / hz);

    // basic geometry
    fv.set("pass_distance", Some(distance));
    fv.set("pass_ball_speed", flight.filter(|&t| t > 0.0).map(|t| distance / t));
    let angle = (distance > 1e-9).then(|| {
        let d = end - start;
        d.cross(Point::new(sign, 0.0)).atan2(d.dot(Point::new(sign, 0.0))).abs()
    });
    fv.set("pass_angle_to_attack", angle);
    let passer_state = dataset.player_state(pass.passer, step, config.facing_mode).ok();
    fv.set("passer_speed", passer_state.map(|s| s.speed));
    fv.set("passer_dist_nearest_opponent", nearest_opponent(dataset, pass.passer, step));
    fv.set(
        "receiver_dist_nearest_opponent",
        receiver.zip(pass.receive_step).and_then(|(r, s)| nearest_opponent(dataset, r, s)),
    );
    fv.set("passer_dist_to_opponent_goal", Some(start.dist(goal)));
    fv.set("end_point_dist_to_opponent_goal", Some(end.dist(goal)));
    fv.set("pass_lateral_position", Some(start.y.abs()));

    // sequences
    let e = pass.event_index;
    let pass_ordinal = |kind: SequenceKind| {
        sequences.containing(kind, e).map(|s| {
            dataset.events[s.events.start..=e]
                .iter()
                .filter(|ev| ev.kind == EventKind::Pass)
                .count() as f64
        })
    };
    fv.set("player_possession_pass_index", pass_ordinal(SequenceKind::PlayerPossession));
    fv.set("team_possession_pass_index", pass_ordinal(SequenceKind::TeamPossession));
    fv.set("play_possession_pass_index", pass_ordinal(SequenceKind::PlayPossession));
    let team_seq = sequences.containing(SequenceKind::TeamPossession, e);
    fv.set(
        "team_possession_duration",
        team_seq.map(|s| (step - dataset.events[s.events.start].step) as f64 / hz),
    );
    fv.set(
        "play_possession_event_count",
        sequences
            .containing(SequenceKind::PlayPossession, e)
            .map(|s| (e + 1 - s.events.start) as f64),
    );
    fv.set(
        "sequence_outcome_is_shot_or_goal",
        team_seq.map(|s| f64::from(matches!(s.outcome, EventKind::Shot | EventKind::Goal))),
    );

    // reach times
    let states = dataset.states_at(step, config.facing_mode);
    let opponents: Vec<_> = states
        .iter()
        .filter(|(&id, _)| dataset.team_of(id) == Some(team.opponent()))
        .map(|(_, s)| *s)
        .collect();
    let min_reach = |target: Point| {
        opponents
            .iter()
            .map(|s| model.reach_time_with_sides(s, target, grid, config.n_sides))
            .min_by(f64::total_cmp)
    };
    fv.set("opponent_reach_time_midpoint", min_reach(start.lerp(end, 0.5)));
    fv.set("opponent_reach_time_end_point", min_reach(end));
    let travel = flight.unwrap_or(distance / config.ball_speed);
    let lane = Segment::new(start, end);
    let in_time = opponents
        .iter()
        .filter(|s| model.reach_time_with_sides(s, lane.closest_point(s.position), grid, config.n_sides) <= travel)
        .count();
    fv.set("opponents_reaching_lane", Some(in_time as f64));
    fv.set(
        "receiver_reach_time_end_point",
        receiver
            .and_then(|r| states.get(&r))
            .map(|s| model.reach_time_with_sides(s, end, grid, config.n_sides)),
    );

    // dominant regions
    let sub = cache.get(step);
    fv.set(
        "passer_region_area",
        sub.and_then(|d| d.regions.get(&pass.passer)).map(Region::area),
    );
    let sub_recv = pass.receive_step.and_then(|s| cache.get(s));
    fv.set(
        "receiver_region_area",
        receiver
            .and_then(|r| sub_recv.and_then(|d| d.regions.get(&r)))
            .map(Region::area),
    );
    let share = sub.and_then(|d| team_share(d, dataset, team));
    fv.set("team_region_share", share);
    fv.set(
        "team_region_share_change",
        share
            .zip(sub_recv.and_then(|d| team_share(d, dataset, team)))
            .map(|(before, after)| after - before),
    );
    fv.set(
        "team_attacking_half_area",
        sub.map(|d| {
            // keep the half where sign * x >= 0
            let (a, b) = (Point::new(0.0, -sign), Point::new(0.0, sign));
            d.regions
                .iter()
                .filter(|(&id, _)| dataset.team_of(id) == Some(team))
                .flat_map(|(_, r)| region_polygons(r))
                .map(|p| p.clip_left_of(b, a).area())
                .sum::<f64>()
        }),
    );
    fv.set(
        "opposing_regions_crossed",
        sub.map(|d| {
            d.regions
                .iter()
                .filter(|(&id, _)| dataset.team_of(id) == Some(team.opponent()))
                .filter(|(_, r)| region_polygons(r).any(|p| p.len() >= 3 && p.touches_segment(&lane)))
                .count() as f64
        }),
    );
    fv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_unique() {
        let names: BTreeSet<&str> = CATALOG.iter().map(|e| e.name).collect();
        assert_eq!(names.len(), CATALOG.len());
        let strategic = CATALOG.iter().filter(|e| e.category == Strategic).count();
        assert_eq!(strategic, 6);
    }

    fn matrix(cols: &[&[Option<f64>]]) -> FeatureMatrix {
        let m = cols[0].len();
        let rows = (0..m)
            .map(|i| {
                let mut r = FeatureVector::empty(i);
                for (j, col) in cols.iter().enumerate() {
                    if let Some(v) = col[i] {
                        r.values[j] = v;
                        r.mask[j] = true;
                    }
                }
                r
            })
            .collect();
        FeatureMatrix {
            rows,
            catalog_version: CATALOG_VERSION.into(),
            standardization: None,
        }
    }

    #[test]
    fn standardize_examples() {
        let m = matrix(&[&[Some(0.0), Some(2.0)], &[Some(5.0), Some(5.0)], &[Some(1.0), None]]);
        let z = standardize(&m).unwrap();
        assert_eq!(z.rows[0].values[0], -1.0);
        assert_eq!(z.rows[1].values[0], 1.0);
        assert_eq!(z.rows[0].values[1], 0.0);
        assert_eq!(z.rows[1].values[1], 0.0);
        // single defined entry: zero variance; masked entry imputed to 0
        assert_eq!(z.rows[0].values[2], 0.0);
        assert_eq!(z.rows[1].values[2], 0.0);
        let again = m.apply_standardization(z.standardization.as_ref().unwrap());
        assert_eq!(again, z);
        assert!(standardize(&matrix(&[&[Some(1.0)]])).is_err());
    }

    #[test]
    fn csv_round_trip_keeps_mask() {
        let mut m = matrix(&[&[Some(0.1), Some(2.5)], &[None, Some(-3.0)]]);
        m.impute_column_means();
        let text = m.to_csv();
        assert!(text.starts_with("# catalog_version="));
        let back = FeatureMatrix::from_csv(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_csv(), text);
        assert_eq!(back.rows[0].values[1], -3.0);
    }
}
