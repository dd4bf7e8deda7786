//! CSV readers and canonical writers for the three per-match files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Event, EventKind, MatchDataset, PlayerId, Team, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{Pitch, Point};

pub const TRAJECTORY_FILE: &str = "trajectories.csv";
pub const EVENT_FILE: &str = "events.csv";
pub const TEAM_FILE: &str = "teams.csv";

const FREQUENCY_HZ: u32 = 10;

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?)
}

fn check_header(rdr: &mut csv::Reader<fs::File>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::schema(
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
    let raw = rec
        .get(idx)
        .ok_or_else(|| Error::schema(line, format!("missing column {name}")))?;
    raw.parse()
        .map_err(|_| Error::schema(line, format!("cannot parse {name} from {raw:?}")))
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn read_teams(path: &Path) -> Result<BTreeMap<PlayerId, Team>> {
    let mut rdr = reader(path)?;
    check_header(&mut rdr, &["player_id", "team"])?;
    let mut teams = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let id: PlayerId = field(&rec, 0, "player_id")?;
        let team: Team = rec
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e: String| Error::schema(line, e))?;
        if teams.insert(id, team).is_some() {
            return Err(Error::schema(line, format!("duplicate player {id}")));
        }
    }
    Ok(teams)
}

fn read_trajectories(path: &Path) -> Result<BTreeMap<PlayerId, Trajectory>> {
    let mut rdr = reader(path)?;
    check_header(&mut rdr, &["step", "player_id", "x", "y"])?;
    let mut rows: BTreeMap<PlayerId, BTreeMap<u32, (Point, usize)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        if rec.len() != 4 {
            return Err(Error::schema(line, format!("expected 4 fields, got {}", rec.len())));
        }
        let step: u32 = field(&rec, 0, "step")?;
        let id: PlayerId = field(&rec, 1, "player_id")?;
        let x: f64 = field(&rec, 2, "x")?;
        let y: f64 = field(&rec, 3, "y")?;
        if rows
            .entry(id)
            .or_default()
            .insert(step, (Point::new(x, y), line))
            .is_some()
        {
            return Err(Error::schema(line, format!("duplicate row for player {id} at step {step}")));
        }
    }
    let mut out = BTreeMap::new();
    for (id, steps) in rows {
        let first_step = *steps.keys().next().expect("non-empty");
        let mut samples = Vec::with_capacity(steps.len());
        for (k, (&step, &(p, _))) in steps.iter().enumerate() {
            if step != first_step + k as u32 {
                return Err(Error::Integrity(format!(
                    "trajectory gap for player {id} before step {step}"
                )));
            }
            samples.push(p);
        }
        out.insert(
            id,
            Trajectory {
                player: id,
                first_step,
                samples,
            },
        );
    }
    Ok(out)
}

fn read_events(path: &Path) -> Result<Vec<Event>> {
    let mut rdr = reader(path)?;
    check_header(&mut rdr, &["step", "kind", "player1", "player2"])?;
    let mut events = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        if rec.len() != 4 {
            return Err(Error::schema(line, format!("expected 4 fields, got {}", rec.len())));
        }
        let step: u32 = field(&rec, 0, "step")?;
        let kind: EventKind = rec[1].parse().map_err(|e: String| Error::schema(line, e))?;
        let mut participants = Vec::new();
        for (idx, name) in [(2, "player1"), (3, "player2")] {
            if !rec[idx].is_empty() {
                participants.push(field::<PlayerId>(&rec, idx, name)?);
            }
        }
        if rec[2].is_empty() && !rec[3].is_empty() {
            return Err(Error::schema(line, "player2 given without player1"));
        }
        events.push(Event::new(step, kind, participants));
    }
    Ok(events)
}

/// Loads and validates a match from its three CSV files.
pub fn load_match(trajectory_file: &Path, event_file: &Path, team_file: &Path) -> Result<MatchDataset> {
    let teams = read_teams(team_file)?;
    let trajectories = read_trajectories(trajectory_file)?;
    let events = read_events(event_file)?;
    MatchDataset::new(teams, trajectories, events, FREQUENCY_HZ, Pitch::default())
}

/// Loads `trajectories.csv`, `events.csv` and `teams.csv` from a directory.
pub fn load_match_dir(dir: &Path) -> Result<MatchDataset> {
    load_match(
        &dir.join(TRAJECTORY_FILE),
        &dir.join(EVENT_FILE),
        &dir.join(TEAM_FILE),
    )
}

/// Writes the canonical form of a match into `dir` (created if needed).
/// Positions are written with millimetre precision.
pub fn write_match(dataset: &MatchDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut teams = String::from("player_id,team\n");
    for (id, team) in &dataset.team_map {
        writeln!(teams, "{id},{}", team.as_str()).unwrap();
    }
    fs::write(dir.join(TEAM_FILE), teams)?;

    let mut traj = String::from("step,player_id,x,y\n");
    for step in 0..=dataset.clock.max_step {
        for t in dataset.trajectories.values() {
            if let Some(p) = t.at(step) {
                writeln!(traj, "{step},{},{:.3},{:.3}", t.player, p.x, p.y).unwrap();
            }
        }
    }
    fs::write(dir.join(TRAJECTORY_FILE), traj)?;

    let mut events = String::from("step,kind,player1,player2\n");
    for e in &dataset.events {
        let p1 = e.participants.first().map(|p| p.to_string()).unwrap_or_default();
        let p2 = e.participants.get(1).map(|p| p.to_string()).unwrap_or_default();
        writeln!(events, "{},{},{p1},{p2}", e.step, e.kind).unwrap();
    }
    fs::write(dir.join(EVENT_FILE), events)?;
    Ok(())
}
