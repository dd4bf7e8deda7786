//! Seeded synthetic matches and planted-signal observer labels.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::nearest_opponent;
use crate::geometry::{Pitch, Point};
use crate::labels::{LabelSet, Rating};
use crate::match_data::{Event, EventKind, MatchDataset, PassRecord, PlayerId, Team, Trajectory};

const HZ: u32 = 10;
const BALL_SPEED: f64 = 15.0;
const CRUISE_SPEED: (f64, f64) = (1.0, 6.0);
const CARRY_SPEED: f64 = 5.0;
const CHASE_SPEED: f64 = 7.0;
const MAX_ACCEL: f64 = 3.0;
const WAYPOINT_STEPS: (u32, u32) = (30, 90);
const WAYPOINT_SPREAD: f64 = 8.0;
const DRIBBLE_TOUCH_EVERY: u32 = 10;
const MIN_HOLD: u32 = 5;
const RESTART_DELAY: u32 = 30;
const SHOT_RANGE: f64 = 35.0;
const SHOT_RATE: f64 = 0.1;
const GOAL_CHANCE: f64 = 0.2;
const TACKLE_RANGE: f64 = 3.0;
const TACKLE_RATE: f64 = 0.03;
const FOUL_SHARE: f64 = 0.3;
const OUT_OF_PLAY_SHARE: f64 = 0.15;
const MAX_PASS: f64 = 45.0;

/// 4-4-2 slots for a team attacking +x, in metres from the centre.
const FORMATION: [(f64, f64); 11] = [
    (-48.0, 0.0),
    (-32.0, -24.0),
    (-34.0, -8.0),
    (-34.0, 8.0),
    (-32.0, 24.0),
    (-12.0, -24.0),
    (-14.0, -8.0),
    (-14.0, 8.0),
    (-12.0, 24.0),
    (-2.0, -8.0),
    (-2.0, 8.0),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub players_per_team: usize,
    pub duration_steps: u32,
    /// Chance per step that the team in possession decides to pass.
    pub pass_rate: f64,
    /// Chance that an observer's rating is moved one step.
    pub noise_level: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            players_per_team: 11,
            duration_steps: 18_000,
            pass_rate: 0.07,
            noise_level: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.players_per_team == 0 || self.players_per_team > FORMATION.len() {
            return Err(Error::Config(format!(
                "players_per_team must be in 1..={}, got {}",
                FORMATION.len(),
                self.players_per_team
            )));
        }
        if self.duration_steps < 2 {
            return Err(Error::Config("duration_steps must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.pass_rate) {
            return Err(Error::Config(format!("pass_rate must be in [0, 1], got {}", self.pass_rate)));
        }
        if !(0.0..=1.0).contains(&self.noise_level) {
            return Err(Error::Config(format!(
                "noise_level must be in [0, 1], got {}",
                self.noise_level
            )));
        }
        Ok(())
    }
}

struct Mover {
    pos: Point,
    vel: Point,
    waypoint: Point,
    cruise: f64,
    next_waypoint: u32,
}

#[derive(Clone, Copy)]
enum Ball {
    Held { by: PlayerId, since: u32 },
    Flight { to: PlayerId, arrive: u32, kind: EventKind },
    Dead { restart: u32, to: PlayerId },
}

struct Sim<'a> {
    cfg: &'a SynthConfig,
    rng: ChaCha8Rng,
    pitch: Pitch,
    team: BTreeMap<PlayerId, Team>,
    slot: BTreeMap<PlayerId, Point>,
    movers: BTreeMap<PlayerId, Mover>,
    samples: BTreeMap<PlayerId, Vec<Point>>,
    events: Vec<Event>,
    ball: Ball,
    ball_at: Point,
    pending_passes: u32,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SynthConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let pitch = Pitch::default();
        let n = cfg.players_per_team;
        let mut team = BTreeMap::new();
        let mut slot = BTreeMap::new();
        let mut movers = BTreeMap::new();
        for (t, side) in [(Team::Home, 1.0), (Team::Away, -1.0)] {
            for (k, &(x, y)) in FORMATION.iter().take(n).enumerate() {
                let id = (k + 1 + if t == Team::Away { n } else { 0 }) as PlayerId;
                let anchor = Point::new(side * x, side * y);
                team.insert(id, t);
                slot.insert(id, anchor);
                let start = anchor + Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                movers.insert(
                    id,
                    Mover {
                        pos: start,
                        vel: Point::ORIGIN,
                        waypoint: start,
                        cruise: CRUISE_SPEED.0,
                        next_waypoint: 0,
                    },
                );
            }
        }
        let kicker = (n as PlayerId).min(10);
        Sim {
            cfg,
            rng,
            pitch,
            samples: team.keys().map(|&id| (id, Vec::new())).collect(),
            team,
            slot,
            movers,
            events: Vec::new(),
            ball: Ball::Held { by: kicker, since: 0 },
            ball_at: Point::ORIGIN,
            pending_passes: 0,
        }
    }

    fn sign(&self, t: Team) -> f64 {
        match t {
            Team::Home => 1.0,
            Team::Away => -1.0,
        }
    }

    fn players_of(&self, t: Team) -> Vec<PlayerId> {
        self.team.iter().filter(|(_, &x)| x == t).map(|(&id, _)| id).collect()
    }

    fn nearest(&self, t: Team, to: Point, except: Option<PlayerId>) -> PlayerId {
        self.players_of(t)
            .into_iter()
            .filter(|&id| Some(id) != except)
            .min_by(|&a, &b| self.movers[&a].pos.dist(to).total_cmp(&self.movers[&b].pos.dist(to)))
            .expect("teams are non-empty")
    }

    fn emit(&mut self, step: u32, kind: EventKind, participants: Vec<PlayerId>) {
        self.events.push(Event::new(step, kind, participants));
    }

    fn run(mut self) -> Result<MatchDataset> {
        let last = self.cfg.duration_steps - 1;
        let Ball::Held { by, .. } = self.ball else { unreachable!() };
        self.emit(0, EventKind::StartOfHalf, vec![]);
        self.movers.get_mut(&by).unwrap().pos = Point::ORIGIN;
        self.emit(0, EventKind::Touch, vec![by]);
        for step in 0..=last {
            if step > 0 {
                self.move_players(step);
            }
            for (id, m) in &self.movers {
                self.samples.get_mut(id).unwrap().push(m.pos);
            }
            if step > 0 && step < last {
                if self.rng.gen_bool(self.cfg.pass_rate) {
                    self.pending_passes = 1;
                }
                self.play(step);
            }
        }
        self.emit(last, EventKind::EndOfHalf, vec![]);

        let trajectories = self
            .samples
            .into_iter()
            .map(|(player, samples)| {
                (
                    player,
                    Trajectory {
                        player,
                        first_step: 0,
                        samples,
                    },
                )
            })
            .collect();
        MatchDataset::new(self.team, trajectories, self.events, HZ, self.pitch)
    }

    fn play(&mut self, step: u32) {
        match self.ball {
            Ball::Flight { to, arrive, kind } if step >= arrive => {
                match kind {
                    EventKind::OutOfPlay => {
                        let Some(passer) = self.events.iter().rev().find(|e| e.kind == EventKind::Pass) else {
                            return;
                        };
                        let passer = passer.participants[0];
                        self.emit(step, EventKind::OutOfPlay, vec![passer]);
                        self.ball = Ball::Dead {
                            restart: step + RESTART_DELAY,
                            to,
                        };
                        return;
                    }
                    _ => self.emit(step, kind, vec![to]),
                }
                self.ball = Ball::Held { by: to, since: step };
                self.ball_at = self.movers[&to].pos;
            }
            Ball::Flight { .. } => {}
            Ball::Dead { restart, to } if step >= restart => {
                self.emit(step, EventKind::Touch, vec![to]);
                self.ball = Ball::Held { by: to, since: step };
                self.ball_at = self.movers[&to].pos;
            }
            Ball::Dead { .. } => {}
            Ball::Held { by, since } => self.hold(step, by, since),
        }
    }

    fn hold(&mut self, step: u32, by: PlayerId, since: u32) {
        let t = self.team[&by];
        let at = self.movers[&by].pos;
        self.ball_at = at;
        let goal = Point::new(self.sign(t) * self.pitch.half_length, 0.0);
        let rival = self.nearest(t.opponent(), at, None);
        let held = step - since;

        if held >= MIN_HOLD && self.movers[&rival].pos.dist(at) < TACKLE_RANGE && self.rng.gen_bool(TACKLE_RATE) {
            if self.rng.gen_bool(FOUL_SHARE) {
                self.emit(step, EventKind::Foul, vec![rival, by]);
                self.ball = Ball::Dead {
                    restart: step + RESTART_DELAY,
                    to: by,
                };
            } else {
                self.emit(step, EventKind::Tackle, vec![rival, by]);
                self.ball = Ball::Held { by: rival, since: step };
            }
            return;
        }
        if held >= MIN_HOLD && at.dist(goal) < SHOT_RANGE && self.rng.gen_bool(SHOT_RATE) {
            self.emit(step, EventKind::Shot, vec![by]);
            let keeper = self.nearest(t.opponent(), goal, None);
            if self.rng.gen_bool(GOAL_CHANCE) {
                self.emit(step + 1, EventKind::Goal, vec![by]);
                let kicker = self.nearest(t.opponent(), Point::ORIGIN, Some(keeper));
                self.ball = Ball::Dead {
                    restart: step + 3 * RESTART_DELAY,
                    to: kicker,
                };
            } else {
                let arrive = step + flight_steps(at.dist(self.movers[&keeper].pos));
                self.ball = Ball::Flight {
                    to: keeper,
                    arrive,
                    kind: EventKind::Touch,
                };
            }
            return;
        }
        if held >= MIN_HOLD && self.pending_passes > 0 {
            self.pending_passes -= 1;
            self.pass(step, by);
            return;
        }
        if held > 0 && held % DRIBBLE_TOUCH_EVERY == 0 {
            self.emit(step, EventKind::Touch, vec![by]);
        }
    }

    fn pass(&mut self, step: u32, by: PlayerId) {
        let t = self.team[&by];
        let at = self.movers[&by].pos;
        let sign = self.sign(t);
        let mates: Vec<(PlayerId, f64)> = self
            .players_of(t)
            .into_iter()
            .filter(|&id| id != by)
            .filter_map(|id| {
                let d = self.movers[&id].pos.dist(at);
                let ahead = (self.movers[&id].pos.x - at.x) * sign;
                (d <= MAX_PASS).then_some((id, 1.0 + (ahead / 10.0).clamp(-0.8, 3.0)))
            })
            .collect();
        self.emit(step, EventKind::Pass, vec![by]);
        let target = if mates.is_empty() {
            self.nearest(t, at, Some(by))
        } else {
            let total: f64 = mates.iter().map(|m| m.1).sum();
            let mut pick = self.rng.gen_range(0.0..total);
            let mut chosen = mates[0].0;
            for &(id, w) in &mates {
                if pick < w {
                    chosen = id;
                    break;
                }
                pick -= w;
            }
            chosen
        };
        let dest = self.movers[&target].pos;
        let dist = dest.dist(at);
        let marker = self.nearest(t.opponent(), dest, None);
        let pressure = self.movers[&marker].pos.dist(dest);
        let lane = self.nearest(t.opponent(), at.lerp(dest, 0.5), None);
        let lane_gap = self.movers[&lane].pos.dist(at.lerp(dest, 0.5));
        let p_complete = (0.97 - 0.008 * dist - 0.25 * (-pressure / 3.0).exp() - 0.15 * (-lane_gap / 3.0).exp())
            .clamp(0.05, 0.99);
        let arrive = step + flight_steps(dist);
        self.ball = if self.rng.gen_bool(p_complete) {
            Ball::Flight {
                to: target,
                arrive,
                kind: EventKind::Touch,
            }
        } else if self.rng.gen_bool(OUT_OF_PLAY_SHARE) {
            Ball::Flight {
                to: marker,
                arrive,
                kind: EventKind::OutOfPlay,
            }
        } else {
            let thief = if pressure < lane_gap { marker } else { lane };
            Ball::Flight {
                to: thief,
                arrive,
                kind: EventKind::Interception,
            }
        };
    }

    fn move_players(&mut self, step: u32) {
        let dt = 1.0 / HZ as f64;
        let ids: Vec<PlayerId> = self.movers.keys().copied().collect();
        let (holder, chaser, ball_target) = match self.ball {
            Ball::Held { by, .. } => (Some(by), None, self.ball_at),
            Ball::Flight { to, .. } => (None, Some(to), self.ball_at),
            Ball::Dead { to, .. } => (None, Some(to), self.ball_at),
        };
        for id in ids {
            let t = self.team[&id];
            let sign = self.sign(t);
            let slot = self.slot[&id];
            let in_possession = holder.map(|h| self.team[&h]) == Some(t);
            let push = if in_possession { 18.0 * sign } else { -4.0 * sign };
            let shift = Point::new(0.6 * ball_target.x + push, 0.2 * ball_target.y);
            let (desired_pos, speed) = if Some(id) == holder {
                let goal = Point::new(sign * self.pitch.half_length, 0.0);
                (goal, CARRY_SPEED)
            } else if Some(id) == chaser {
                (self.movers[&id].pos, 0.0)
            } else {
                let m = self.movers.get_mut(&id).unwrap();
                if step >= m.next_waypoint {
                    let jitter = Point::new(
                        self.rng.gen_range(-WAYPOINT_SPREAD..WAYPOINT_SPREAD),
                        self.rng.gen_range(-WAYPOINT_SPREAD..WAYPOINT_SPREAD),
                    );
                    m.waypoint = slot + shift + jitter;
                    m.cruise = self.rng.gen_range(CRUISE_SPEED.0..CRUISE_SPEED.1);
                    m.next_waypoint = step + self.rng.gen_range(WAYPOINT_STEPS.0..WAYPOINT_STEPS.1);
                }
                let press = t != self.team.get(&holder.unwrap_or(0)).copied().unwrap_or(t)
                    && self.movers[&id].pos.dist(ball_target) < 12.0;
                let m = &self.movers[&id];
                if press {
                    (ball_target, CHASE_SPEED)
                } else {
                    (m.waypoint, m.cruise)
                }
            };
            let pitch = self.pitch;
            let m = self.movers.get_mut(&id).unwrap();
            let to = desired_pos - m.pos;
            let want = if to.norm() > 1e-9 {
                to * (speed.min(to.norm() / dt) / to.norm())
            } else {
                Point::ORIGIN
            };
            let dv = want - m.vel;
            let max_dv = MAX_ACCEL * dt;
            let dv = if dv.norm() > max_dv { dv * (max_dv / dv.norm()) } else { dv };
            m.vel = m.vel + dv;
            let next = pitch.clamp(m.pos + m.vel * dt);
            m.vel = (next - m.pos) * (1.0 / dt);
            m.pos = next;
        }
    }
}

fn flight_steps(dist: f64) -> u32 {
    ((dist / BALL_SPEED * HZ as f64).ceil() as u32).max(1)
}

/// Simulates a match: players drift around formation slots, press the
/// ball and carry it towards goal, while a possession model emits touches,
/// passes, tackles, fouls, shots, goals and restarts.
pub fn generate_match(config: &SynthConfig) -> Result<MatchDataset> {
    config.validate()?;
    Sim::new(config).run()
}

/// Rating of the hidden rule: incomplete passes are bad, and completed ones
/// are better the more room the passer has and the longer the pass.
pub fn planted_rating(nearest_opponent: f64, pass_distance: f64, completed: bool) -> Rating {
    if !completed {
        return if nearest_opponent < 3.0 { Rating::VeryBad } else { Rating::Bad };
    }
    let score = 0.35 * nearest_opponent.min(20.0) + 0.12 * pass_distance.min(40.0);
    match score {
        s if s >= 8.0 => Rating::VeryGood,
        s if s >= 6.0 => Rating::Good,
        s if s >= 4.5 => Rating::SlightlyGood,
        _ => Rating::SlightlyBad,
    }
}

fn perturb(r: Rating, noise: f64, rng: &mut ChaCha8Rng) -> Rating {
    if noise <= 0.0 || !rng.gen_bool(noise) {
        return r;
    }
    let up = rng.gen_bool(0.5);
    let code = match (r.code(), up) {
        (6, true) => 5,
        (1, false) => 2,
        (c, true) => c + 1,
        (c, false) => c - 1,
    };
    Rating::from_code(code).expect("code within scale")
}

/// Two observers' ratings of `passes`, keyed by position in `passes`. Each
/// observer moves the planted rating one step with probability `noise_level`.
pub fn generate_labels(
    dataset: &MatchDataset,
    passes: &[PassRecord],
    noise_level: f64,
    seed: u64,
) -> Result<(LabelSet, LabelSet)> {
    if !(0.0..=1.0).contains(&noise_level) {
        return Err(Error::Config(format!("noise_level must be in [0, 1], got {noise_level}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c61_6265_6c73);
    let mut a = LabelSet::new("observer_a");
    let mut b = LabelSet::new("observer_b");
    for (i, p) in passes.iter().enumerate() {
        let near = nearest_opponent(dataset, p.passer, p.pass_event.step).unwrap_or(f64::INFINITY);
        let truth = planted_rating(near, p.start_point.dist(p.end_point), p.completed);
        a.ratings.insert(i, perturb(truth, noise_level, &mut rng));
        b.ratings.insert(i, perturb(truth, noise_level, &mut rng));
    }
    Ok((a, b))
}
