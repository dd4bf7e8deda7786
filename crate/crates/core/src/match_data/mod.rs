//! Per-match trajectories, events and team assignment, plus the kinematic
//! and possession queries derived from them.

mod io;

pub use io::{load_match, load_match_dir, write_match, EVENT_FILE, TEAM_FILE, TRAJECTORY_FILE};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Pitch, Point};

pub type PlayerId = u32;

/// Trajectories may stray this far outside the touchlines.
pub const PITCH_MARGIN: f64 = 2.0;
/// Sanity cap on player speed; faster motion indicates corrupted tracking.
pub const MAX_PLAYER_SPEED: f64 = 12.0;
/// Assumed ball speed when a pass has no receiver.
pub const DEFAULT_BALL_SPEED: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Team {
    Home,
    Away,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Home => Team::Away,
            Team::Away => Team::Home,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Team::Home => "HOME",
            Team::Away => "AWAY",
        }
    }
}

impl FromStr for Team {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HOME" => Ok(Team::Home),
            "AWAY" => Ok(Team::Away),
            other => Err(format!("unknown team {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clock {
    pub frequency_hz: u32,
    pub max_step: u32,
}

impl Clock {
    pub fn seconds(&self, step: u32) -> f64 {
        step as f64 / self.frequency_hz as f64
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.frequency_hz as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Pass,
    Touch,
    Shot,
    Tackle,
    Goal,
    Foul,
    StartOfHalf,
    EndOfHalf,
    OutOfPlay,
    Interception,
}

impl EventKind {
    pub const ALL: [EventKind; 10] = [
        EventKind::Pass,
        EventKind::Touch,
        EventKind::Shot,
        EventKind::Tackle,
        EventKind::Goal,
        EventKind::Foul,
        EventKind::StartOfHalf,
        EventKind::EndOfHalf,
        EventKind::OutOfPlay,
        EventKind::Interception,
    ];

    /// Events in which a player plays the ball.
    pub fn is_ball_touch(self) -> bool {
        matches!(
            self,
            EventKind::Pass
                | EventKind::Touch
                | EventKind::Shot
                | EventKind::Tackle
                | EventKind::Interception
        )
    }

    /// Events that stop play.
    pub fn is_stoppage(self) -> bool {
        matches!(
            self,
            EventKind::Foul
                | EventKind::Goal
                | EventKind::OutOfPlay
                | EventKind::StartOfHalf
                | EventKind::EndOfHalf
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            EventKind::Pass => "Pass",
            EventKind::Touch => "Touch",
            EventKind::Shot => "Shot",
            EventKind::Tackle => "Tackle",
            EventKind::Goal => "Goal",
            EventKind::Foul => "Foul",
            EventKind::StartOfHalf => "StartOfHalf",
            EventKind::EndOfHalf => "EndOfHalf",
            EventKind::OutOfPlay => "OutOfPlay",
            EventKind::Interception => "Interception",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        EventKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown event kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub step: u32,
    pub kind: EventKind,
    pub participants: Vec<PlayerId>,
}

impl Event {
    pub fn new(step: u32, kind: EventKind, participants: Vec<PlayerId>) -> Self {
        Event {
            step,
            kind,
            participants,
        }
    }

    pub fn actor(&self) -> Option<PlayerId> {
        self.participants.first().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub player: PlayerId,
    pub first_step: u32,
    pub samples: Vec<Point>,
}

impl Trajectory {
    pub fn last_step(&self) -> u32 {
        self.first_step + self.samples.len() as u32 - 1
    }

    pub fn covers(&self, step: u32) -> bool {
        step >= self.first_step && step <= self.last_step()
    }

    pub fn at(&self, step: u32) -> Option<Point> {
        if self.covers(step) {
            Some(self.samples[(step - self.first_step) as usize])
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacingMode {
    MotionDirection,
    FaceBall,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerState {
    pub position: Point,
    pub velocity: Point,
    pub speed: f64,
    /// Radians in `[-π, π)`.
    pub facing: f64,
}

impl PlayerState {
    pub fn at_rest(position: Point) -> Self {
        PlayerState {
            position,
            velocity: Point::ORIGIN,
            speed: 0.0,
            facing: 0.0,
        }
    }

    pub fn moving(position: Point, velocity: Point) -> Self {
        let speed = velocity.norm();
        let facing = if speed > 1e-9 {
            normalize_angle(velocity.angle())
        } else {
            0.0
        };
        PlayerState {
            position,
            velocity,
            speed,
            facing,
        }
    }
}

/// Ball location derived from touch events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallPosition {
    pub point: Point,
    /// Set when the step lies before the first or after the last touch.
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassRecord {
    /// Index of the pass in `MatchDataset::events`.
    pub event_index: usize,
    pub pass_event: Event,
    pub passer: PlayerId,
    pub receive_step: Option<u32>,
    pub receiver: Option<PlayerId>,
    pub completed: bool,
    pub start_point: Point,
    pub end_point: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SequenceKind {
    PlayerPossession,
    TeamPossession,
    PlayPossession,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PossessionSequence {
    pub kind: SequenceKind,
    /// Contiguous range of indices into `MatchDataset::events`.
    pub events: std::ops::Range<usize>,
    pub outcome: EventKind,
}

/// A validated, immutable match.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchDataset {
    pub team_map: BTreeMap<PlayerId, Team>,
    pub trajectories: BTreeMap<PlayerId, Trajectory>,
    pub events: Vec<Event>,
    pub clock: Clock,
    pub pitch: Pitch,
}

impl MatchDataset {
    /// Validates and assembles a dataset. Events are stably sorted by step.
    pub fn new(
        team_map: BTreeMap<PlayerId, Team>,
        trajectories: BTreeMap<PlayerId, Trajectory>,
        mut events: Vec<Event>,
        frequency_hz: u32,
        pitch: Pitch,
    ) -> Result<Self> {
        if frequency_hz == 0 {
            return Err(Error::Integrity("clock frequency must be positive".into()));
        }
        events.sort_by_key(|e| e.step);
        let max_step = trajectories
            .values()
            .map(Trajectory::last_step)
            .chain(events.iter().map(|e| e.step))
            .max()
            .unwrap_or(0);
        let ds = MatchDataset {
            team_map,
            trajectories,
            events,
            clock: Clock {
                frequency_hz,
                max_step,
            },
            pitch,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let max_step_len = MAX_PLAYER_SPEED / self.clock.frequency_hz as f64 + 1e-9;
        for (&id, traj) in &self.trajectories {
            if traj.player != id {
                return Err(Error::Integrity(format!(
                    "trajectory keyed {id} belongs to player {}",
                    traj.player
                )));
            }
            if !self.team_map.contains_key(&id) {
                return Err(Error::Integrity(format!(
                    "trajectory for player {id} absent from team file"
                )));
            }
            if traj.samples.is_empty() {
                return Err(Error::Integrity(format!("empty trajectory for player {id}")));
            }
            for (k, p) in traj.samples.iter().enumerate() {
                let step = traj.first_step + k as u32;
                if !p.x.is_finite() || !p.y.is_finite() {
                    return Err(Error::Integrity(format!(
                        "non-finite position for player {id} at step {step}"
                    )));
                }
                if !self.pitch.contains(*p, PITCH_MARGIN) {
                    return Err(Error::Integrity(format!(
                        "player {id} outside pitch at step {step}"
                    )));
                }
                if k > 0 {
                    let jump = p.dist(traj.samples[k - 1]);
                    if jump > max_step_len {
                        return Err(Error::Integrity(format!(
                            "speed cap violated by player {id} at step {step}: {jump:.3} m in one step"
                        )));
                    }
                }
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            for p in &e.participants {
                if !self.team_map.contains_key(p) {
                    return Err(Error::Integrity(format!(
                        "event {i} ({}) references unknown player {p}",
                        e.kind
                    )));
                }
            }
            let n = e.participants.len();
            let arity_ok = match e.kind {
                EventKind::Pass => n == 1,
                EventKind::StartOfHalf | EventKind::EndOfHalf => n <= 2,
                _ => (1..=2).contains(&n),
            };
            if !arity_ok {
                return Err(Error::Integrity(format!(
                    "event {i} ({}) has {n} participants",
                    e.kind
                )));
            }
            if e.kind.is_ball_touch() {
                let actor = e.participants[0];
                if self.position(actor, e.step).is_none() {
                    return Err(Error::Integrity(format!(
                        "event {i} ({}) at step {} by player {actor} who is not on the pitch",
                        e.kind, e.step
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn players(&self) -> impl Iterator<Item = PlayerId> + '_ {
        self.team_map.keys().copied()
    }

    pub fn team_of(&self, player: PlayerId) -> Option<Team> {
        self.team_map.get(&player).copied()
    }

    pub fn position(&self, player: PlayerId, step: u32) -> Option<Point> {
        self.trajectories.get(&player).and_then(|t| t.at(step))
    }

    /// Players with a defined position at `step`, in id order.
    pub fn players_at(&self, step: u32) -> Vec<PlayerId> {
        self.trajectories
            .values()
            .filter(|t| t.covers(step))
            .map(|t| t.player)
            .collect()
    }

    /// 1-based half index: the number of `StartOfHalf` events at or before
    /// `step`, at least 1.
    pub fn half_at(&self, step: u32) -> u32 {
        let n = self
            .events
            .iter()
            .take_while(|e| e.step <= step)
            .filter(|e| e.kind == EventKind::StartOfHalf)
            .count() as u32;
        n.max(1)
    }

    /// +1 when `team` attacks towards +x at `step`, -1 otherwise.
    /// Home attacks +x in odd halves.
    pub fn attack_sign(&self, team: Team, step: u32) -> f64 {
        let odd_half = self.half_at(step) % 2 == 1;
        match (team, odd_half) {
            (Team::Home, true) | (Team::Away, false) => 1.0,
            _ => -1.0,
        }
    }

    /// Position, finite-difference velocity and facing of a player.
    pub fn player_state(
        &self,
        player: PlayerId,
        step: u32,
        facing_mode: FacingMode,
    ) -> Result<PlayerState> {
        let traj = self
            .trajectories
            .get(&player)
            .filter(|t| t.covers(step))
            .ok_or(Error::OutOfInterval { player, step })?;
        let position = traj.at(step).expect("covered step");
        // 5-step central window, clamped to the interval
        let lo = step.saturating_sub(2).max(traj.first_step);
        let hi = (step + 2).min(traj.last_step());
        let velocity = if hi > lo {
            let dt = (hi - lo) as f64 / self.clock.frequency_hz as f64;
            (traj.at(hi).unwrap() - traj.at(lo).unwrap()) * (1.0 / dt)
        } else {
            Point::ORIGIN
        };
        let mut state = PlayerState::moving(position, velocity);
        if facing_mode == FacingMode::FaceBall {
            if let Ok(ball) = self.ball_position(step) {
                let to_ball = ball.point - position;
                if to_ball.norm() > 1e-9 {
                    state.facing = normalize_angle(to_ball.angle());
                }
            }
        }
        Ok(state)
    }

    /// States of all on-pitch players at `step`, keyed by id.
    pub fn states_at(&self, step: u32, facing_mode: FacingMode) -> BTreeMap<PlayerId, PlayerState> {
        self.players_at(step)
            .into_iter()
            .filter_map(|p| {
                self.player_state(p, step, facing_mode)
                    .ok()
                    .map(|s| (p, s))
            })
            .collect()
    }

    fn touches(&self) -> impl Iterator<Item = (usize, &Event)> + '_ {
        self.events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind.is_ball_touch())
    }

    fn toucher_position(&self, event: &Event) -> Point {
        let actor = event.actor().expect("touch events carry a participant");
        self.position(actor, event.step)
            .expect("validated: toucher on pitch at event step")
    }

    /// Ball position by linear interpolation between touching players.
    pub fn ball_position(&self, step: u32) -> Result<BallPosition> {
        let mut before: Option<&Event> = None;
        let mut after: Option<&Event> = None;
        for (_, e) in self.touches() {
            if e.step <= step {
                if e.step == step {
                    // exactly the first toucher at this step
                    return Ok(BallPosition {
                        point: self.toucher_position(e),
                        extrapolated: false,
                    });
                }
                before = Some(e);
            } else {
                after = Some(e);
                break;
            }
        }
        match (before, after) {
            (Some(b), Some(a)) => {
                let t = (step - b.step) as f64 / (a.step - b.step) as f64;
                Ok(BallPosition {
                    point: self.toucher_position(b).lerp(self.toucher_position(a), t),
                    extrapolated: false,
                })
            }
            (Some(e), None) | (None, Some(e)) => Ok(BallPosition {
                point: self.toucher_position(e),
                extrapolated: true,
            }),
            (None, None) => Err(Error::NoBracket),
        }
    }

    /// One record per `Pass` event, in event order. The receiver is whoever
    /// makes the next ball touch before any stoppage.
    pub fn extract_passes(&self) -> Vec<PassRecord> {
        let mut out = Vec::new();
        for (i, e) in self.events.iter().enumerate() {
            if e.kind != EventKind::Pass {
                continue;
            }
            let passer = e.participants[0];
            let start_point = self.toucher_position(e);
            let mut receive: Option<(u32, PlayerId)> = None;
            for next in &self.events[i + 1..] {
                if next.kind.is_stoppage() {
                    break;
                }
                if next.kind.is_ball_touch() && next.step > e.step {
                    receive = Some((next.step, next.participants[0]));
                    break;
                }
            }
            let (receive_step, receiver, end_point) = match receive {
                Some((s, r)) => (
                    Some(s),
                    Some(r),
                    self.position(r, s).expect("validated toucher"),
                ),
                None => {
                    let heading = self
                        .player_state(passer, e.step, FacingMode::MotionDirection)
                        .map(|st| st.facing)
                        .unwrap_or(0.0);
                    let dir = Point::from_polar(1.0, heading);
                    let reach = self
                        .pitch
                        .exit_distance(self.pitch.clamp(start_point), dir, 0.0)
                        .min(DEFAULT_BALL_SPEED);
                    (None, None, self.pitch.clamp(start_point) + dir * reach)
                }
            };
            let completed = receiver
                .map(|r| self.team_of(r) == self.team_of(passer))
                .unwrap_or(false);
            out.push(PassRecord {
                event_index: i,
                pass_event: e.clone(),
                passer,
                receive_step,
                receiver,
                completed,
                start_point,
                end_point,
            });
        }
        out
    }

    /// Partitions the event list into possession sequences of one kind.
    ///
    /// Player and team sequences are maximal runs of ball touches sharing a
    /// player (team); stoppages end a run and are not part of it. Their
    /// outcome is `Goal` when a goal follows, `Shot` when the run ends with a
    /// shot, otherwise the kind of the event that ended the run (`EndOfHalf`
    /// at the end of the data). Play sequences cover every event and close
    /// with (and include) each stoppage.
    pub fn possession_sequences(&self, kind: SequenceKind) -> Vec<PossessionSequence> {
        match kind {
            SequenceKind::PlayPossession => self.play_sequences(),
            SequenceKind::PlayerPossession => self.touch_runs(kind, |e| e.actor().map(|p| p as u64)),
            SequenceKind::TeamPossession => self.touch_runs(kind, |e| {
                e.actor()
                    .and_then(|p| self.team_of(p))
                    .map(|t| t as u64)
            }),
        }
    }

    fn play_sequences(&self) -> Vec<PossessionSequence> {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, e) in self.events.iter().enumerate() {
            if e.kind.is_stoppage() {
                out.push(PossessionSequence {
                    kind: SequenceKind::PlayPossession,
                    events: start..i + 1,
                    outcome: e.kind,
                });
                start = i + 1;
            }
        }
        if start < self.events.len() {
            out.push(PossessionSequence {
                kind: SequenceKind::PlayPossession,
                events: start..self.events.len(),
                outcome: EventKind::EndOfHalf,
            });
        }
        out
    }

    fn touch_runs(
        &self,
        kind: SequenceKind,
        key: impl Fn(&Event) -> Option<u64>,
    ) -> Vec<PossessionSequence> {
        let mut out = Vec::new();
        let mut current: Option<(usize, u64)> = None;
        let close = |start: usize, end: usize, out: &mut Vec<PossessionSequence>| {
            let last = &self.events[end - 1];
            let next = self.events.get(end);
            let outcome = match next {
                Some(n) if n.kind == EventKind::Goal => EventKind::Goal,
                _ if last.kind == EventKind::Shot => EventKind::Shot,
                Some(n) => n.kind,
                None => EventKind::EndOfHalf,
            };
            out.push(PossessionSequence {
                kind,
                events: start..end,
                outcome,
            });
        };
        for (i, e) in self.events.iter().enumerate() {
            if !e.kind.is_ball_touch() {
                if let Some((start, _)) = current.take() {
                    close(start, i, &mut out);
                }
                continue;
            }
            let k = key(e).expect("touch events carry a known participant");
            match current {
                Some((_, ck)) if ck == k => {}
                Some((start, _)) => {
                    close(start, i, &mut out);
                    current = Some((i, k));
                }
                None => current = Some((i, k)),
            }
        }
        if let Some((start, _)) = current {
            close(start, self.events.len(), &mut out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn team(ids: &[(PlayerId, Team)]) -> BTreeMap<PlayerId, Team> {
        ids.iter().copied().collect()
    }

    fn still(player: PlayerId, at: Point, steps: u32) -> Trajectory {
        Trajectory {
            player,
            first_step: 0,
            samples: vec![at; steps as usize],
        }
    }

    fn dataset(trajs: Vec<Trajectory>, teams: &[(PlayerId, Team)], events: Vec<Event>) -> MatchDataset {
        MatchDataset::new(
            team(teams),
            trajs.into_iter().map(|t| (t.player, t)).collect(),
            events,
            10,
            Pitch::default(),
        )
        .unwrap()
    }

    #[test]
    fn stationary_player_faces_plus_x() {
        let ds = dataset(vec![still(1, Point::new(3.0, 4.0), 20)], &[(1, Team::Home)], vec![]);
        let st = ds.player_state(1, 10, FacingMode::MotionDirection).unwrap();
        assert_eq!(st.speed, 0.0);
        assert_eq!(st.facing, 0.0);
    }

    #[test]
    fn uniform_motion_velocity() {
        let samples = (0..30).map(|k| Point::new(-20.0 + k as f64, 0.0)).collect();
        let t = Trajectory {
            player: 1,
            first_step: 0,
            samples,
        };
        let ds = dataset(vec![t], &[(1, Team::Home)], vec![]);
        for step in [0, 1, 15, 29] {
            let st = ds.player_state(1, step, FacingMode::MotionDirection).unwrap();
            assert!((st.velocity.x - 10.0).abs() < 1e-9, "step {step}");
            assert!(st.velocity.y.abs() < 1e-12);
            assert_eq!(st.facing, 0.0);
        }
        assert!(matches!(
            ds.player_state(1, 30, FacingMode::MotionDirection),
            Err(Error::OutOfInterval { .. })
        ));
    }

    #[test]
    fn face_ball_north() {
        let ds = dataset(
            vec![still(1, Point::new(0.0, 0.0), 20), still(2, Point::new(0.0, 10.0), 20)],
            &[(1, Team::Home), (2, Team::Home)],
            vec![Event::new(5, EventKind::Touch, vec![2])],
        );
        let st = ds.player_state(1, 5, FacingMode::FaceBall).unwrap();
        assert!((st.facing - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn ball_interpolation_and_extrapolation() {
        let ds = dataset(
            vec![still(1, Point::new(0.0, 0.0), 40), still(2, Point::new(10.0, 0.0), 40)],
            &[(1, Team::Home), (2, Team::Home)],
            vec![
                Event::new(10, EventKind::Pass, vec![1]),
                Event::new(20, EventKind::Touch, vec![2]),
            ],
        );
        let at_pass = ds.ball_position(10).unwrap();
        assert_eq!(at_pass.point, Point::new(0.0, 0.0));
        assert!(!at_pass.extrapolated);
        let mid = ds.ball_position(15).unwrap();
        assert!((mid.point.x - 5.0).abs() < 1e-12);
        let early = ds.ball_position(3).unwrap();
        assert!(early.extrapolated);
        assert_eq!(early.point, Point::new(0.0, 0.0));
        let late = ds.ball_position(35).unwrap();
        assert!(late.extrapolated);
        assert_eq!(late.point, Point::new(10.0, 0.0));
    }

    #[test]
    fn ball_without_touches() {
        let ds = dataset(vec![still(1, Point::ORIGIN, 5)], &[(1, Team::Home)], vec![]);
        assert!(matches!(ds.ball_position(2), Err(Error::NoBracket)));
    }

    fn pass_fixture(events: Vec<Event>) -> MatchDataset {
        dataset(
            vec![
                still(1, Point::new(0.0, 0.0), 200),
                still(2, Point::new(10.0, 0.0), 200),
                still(3, Point::new(5.0, 5.0), 200),
            ],
            &[(1, Team::Home), (2, Team::Home), (3, Team::Away)],
            events,
        )
    }

    #[test]
    fn completed_pass() {
        let ds = pass_fixture(vec![
            Event::new(100, EventKind::Pass, vec![1]),
            Event::new(115, EventKind::Touch, vec![2]),
        ]);
        let passes = ds.extract_passes();
        assert_eq!(passes.len(), 1);
        assert!(passes[0].completed);
        assert_eq!(passes[0].receiver, Some(2));
        assert_eq!(passes[0].receive_step, Some(115));
        assert_eq!(passes[0].end_point, Point::new(10.0, 0.0));
    }

    #[test]
    fn intercepted_pass() {
        let ds = pass_fixture(vec![
            Event::new(100, EventKind::Pass, vec![1]),
            Event::new(110, EventKind::Interception, vec![3]),
        ]);
        let p = &ds.extract_passes()[0];
        assert!(!p.completed);
        assert_eq!(p.receiver, Some(3));
    }

    #[test]
    fn final_pass_has_no_receiver() {
        let ds = pass_fixture(vec![
            Event::new(90, EventKind::Touch, vec![1]),
            Event::new(100, EventKind::Pass, vec![1]),
            Event::new(120, EventKind::EndOfHalf, vec![]),
        ]);
        let p = &ds.extract_passes()[0];
        assert_eq!(p.receiver, None);
        assert_eq!(p.receive_step, None);
        assert!(!p.completed);
        assert!(ds.pitch.contains(p.end_point, 1e-9));
    }

    #[test]
    fn player_possession_runs() {
        let ds = pass_fixture(vec![
            Event::new(10, EventKind::Touch, vec![1]),
            Event::new(11, EventKind::Touch, vec![1]),
            Event::new(12, EventKind::Pass, vec![1]),
            Event::new(20, EventKind::Touch, vec![2]),
        ]);
        let runs = ds.possession_sequences(SequenceKind::PlayerPossession);
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].events, 0..3);
        assert_eq!(runs[0].outcome, EventKind::Touch);
        assert_eq!(runs[1].events, 3..4);
        assert_eq!(runs[1].outcome, EventKind::EndOfHalf);
        let team_runs = ds.possession_sequences(SequenceKind::TeamPossession);
        assert_eq!(team_runs.len(), 1);
        assert_eq!(team_runs[0].events, 0..4);
    }

    #[test]
    fn play_possession_split_by_foul() {
        let mut events: Vec<Event> = (0..10)
            .map(|i| Event::new(10 + i, EventKind::Touch, vec![1 + (i % 2)]))
            .collect();
        events[4] = Event::new(14, EventKind::Foul, vec![3, 1]);
        let ds = pass_fixture(events);
        let seqs = ds.possession_sequences(SequenceKind::PlayPossession);
        assert_eq!(seqs.len(), 2);
        assert_eq!(seqs[0].events.len(), 5);
        assert_eq!(seqs[0].outcome, EventKind::Foul);
        assert_eq!(seqs[1].events.len(), 5);
    }

    #[test]
    fn shot_then_goal_outcome() {
        let ds = pass_fixture(vec![
            Event::new(10, EventKind::Pass, vec![1]),
            Event::new(20, EventKind::Shot, vec![2]),
            Event::new(25, EventKind::Goal, vec![2]),
            Event::new(40, EventKind::Touch, vec![3]),
        ]);
        let team_runs = ds.possession_sequences(SequenceKind::TeamPossession);
        assert_eq!(team_runs[0].outcome, EventKind::Goal);
        assert_eq!(team_runs[1].outcome, EventKind::EndOfHalf);
    }

    #[test]
    fn unknown_player_rejected() {
        let err = MatchDataset::new(
            team(&[(1, Team::Home)]),
            [(1, still(1, Point::ORIGIN, 5))].into_iter().collect(),
            vec![Event::new(1, EventKind::Touch, vec![99])],
            10,
            Pitch::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Integrity(_)));
    }

    #[test]
    fn attack_direction_flips_at_half_time() {
        let ds = pass_fixture(vec![
            Event::new(0, EventKind::StartOfHalf, vec![]),
            Event::new(50, EventKind::EndOfHalf, vec![]),
            Event::new(60, EventKind::StartOfHalf, vec![]),
        ]);
        assert_eq!(ds.attack_sign(Team::Home, 10), 1.0);
        assert_eq!(ds.attack_sign(Team::Away, 10), -1.0);
        assert_eq!(ds.attack_sign(Team::Home, 70), -1.0);
    }
}
