//! Dynamic task assignment for a robot fleet. Tasks appear one at a time as
//! others are completed; each appearance triggers a cloud-assisted
//! re-optimization over the tasks not yet started, with travel times from
//! the robots' current positions as costs.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{evaluate, Assignment, GapInstance};
use crate::network::{run_cloud_assisted, GraphKind, NetworkSchedule, RunConfig};

pub const AERIAL_SPEED: f64 = 1.0;
pub const GROUND_SPEED: f64 = 0.22;
/// Brute-force guard for route ordering.
pub const SHPP_LIMIT: usize = 10;
/// Simulated seconds charged per communication round of a re-optimization.
pub const ROUND_DURATION: f64 = 0.005;
/// Upper bound on any accessible weight, so capacities never bind.
const MAX_WEIGHT: u64 = 25;
const TIME_LIMIT: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobotKind {
    Aerial,
    Ground,
}

impl RobotKind {
    pub fn max_speed(self) -> f64 {
        match self {
            RobotKind::Aerial => AERIAL_SPEED,
            RobotKind::Ground => GROUND_SPEED,
        }
    }
}

pub type Point = (f64, f64);

fn distance(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Robot {
    pub id: usize,
    pub kind: RobotKind,
    pub position: Point,
    pub max_speed: f64,
    pub route: VecDeque<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskState {
    Pending,
    Assigned,
    InService,
    Done,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: usize,
    pub position: Point,
    pub hold_time: f64,
    pub accessible: Vec<bool>,
    /// Model-A weight per robot, frozen for the scenario.
    pub weights: Vec<u64>,
    pub state: TaskState,
    pub served_by: Option<usize>,
}

/// Profit `-distance/speed` for every (robot, task) pair, and weights that
/// exceed the capacity for inaccessible pairs.
pub fn build_gap(robots: &[Robot], tasks: &[&Task]) -> Result<GapInstance> {
    let capacity = (MAX_WEIGHT * tasks.len().max(1) as u64) as f64;
    let profits = robots
        .iter()
        .map(|r| tasks.iter().map(|t| -distance(r.position, t.position) / r.max_speed).collect())
        .collect();
    let weights = robots
        .iter()
        .map(|r| {
            tasks
                .iter()
                .map(|t| {
                    if t.accessible[r.id] {
                        t.weights[r.id]
                    } else {
                        capacity.floor() as u64 + 1
                    }
                })
                .collect()
        })
        .collect();
    GapInstance::new(profits, weights, vec![capacity; robots.len()])
}

/// Shortest open path from `start` through every point, by enumeration.
/// Returns visiting order (indices into `points`) and length; ties go to the
/// lexicographically smallest order.
pub fn shpp_order(start: Point, points: &[Point]) -> Result<(Vec<usize>, f64)> {
    if points.len() > SHPP_LIMIT {
        return Err(Error::RouteGuard(points.len(), SHPP_LIMIT));
    }
    let mut perm: Vec<usize> = (0..points.len()).collect();
    let length = |perm: &[usize]| {
        let mut at = start;
        let mut total = 0.0;
        for &k in perm {
            total += distance(at, points[k]);
            at = points[k];
        }
        total
    };
    let mut best = (perm.clone(), length(&perm));
    // Lexicographic enumeration, so the first minimum seen is the smallest.
    while next_permutation(&mut perm) {
        let l = length(&perm);
        if l < best.1 - 1e-12 {
            best = (perm.clone(), l);
        }
    }
    Ok(best)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&x| x > p[i]).expect("a larger element exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub kind: RobotKind,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub x: f64,
    pub y: f64,
}

fn default_dt() -> f64 {
    0.05
}

fn default_access() -> f64 {
    0.8
}

fn default_sample() -> f64 {
    1.0
}

/// Scenario description, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub robots: Vec<RobotSpec>,
    #[serde(default)]
    pub initial_tasks: Vec<TaskSpec>,
    /// Revealed one per completion, in order.
    #[serde(default)]
    pub arrivals: Vec<TaskSpec>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Probability that a robot can serve a given task.
    #[serde(default = "default_access")]
    pub access_probability: f64,
    /// Interval between trajectory samples, seconds.
    #[serde(default = "default_sample")]
    pub sample_interval: f64,
}

impl ScenarioConfig {
    /// Random fleet and tasks in a 4 m square arena.
    pub fn random(seed: u64, n_robots: usize, n_initial: usize, n_arrivals: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = |rng: &mut ChaCha8Rng| (rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0));
        let robots = (0..n_robots)
            .map(|_| {
                let kind = if rng.gen_bool(0.6) { RobotKind::Aerial } else { RobotKind::Ground };
                let (x, y) = point(&mut rng);
                RobotSpec { kind, x, y }
            })
            .collect();
        let tasks = |k: usize, rng: &mut ChaCha8Rng| {
            (0..k)
                .map(|_| {
                    let (x, y) = point(rng);
                    TaskSpec { x, y }
                })
                .collect()
        };
        let initial_tasks = tasks(n_initial, &mut rng);
        let arrivals = tasks(n_arrivals, &mut rng);
        Self {
            robots,
            initial_tasks,
            arrivals,
            dt: default_dt(),
            access_probability: default_access(),
            sample_interval: default_sample(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    TaskAppeared,
    ReoptimizationStarted,
    ReoptimizationAborted,
    ReoptimizationFinished,
    TaskStarted,
    TaskCompleted,
    Pose,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::TaskAppeared => "task-appeared",
            EventKind::ReoptimizationStarted => "reoptimization-started",
            EventKind::ReoptimizationAborted => "reoptimization-aborted",
            EventKind::ReoptimizationFinished => "reoptimization-finished",
            EventKind::TaskStarted => "task-started",
            EventKind::TaskCompleted => "task-completed",
            EventKind::Pose => "pose",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entity {
    Robot(usize),
    Task(usize),
    Cloud,
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Robot(i) => write!(f, "robot{i}"),
            Entity::Task(m) => write!(f, "task{m}"),
            Entity::Cloud => f.write_str("cloud"),
        }
    }
}

/// One `time, entity, event, x, y` record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub time: f64,
    pub entity: Entity,
    pub event: EventKind,
    pub x: f64,
    pub y: f64,
}

impl fmt::Display for LogRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}, {}, {}, {:.3}, {:.3}", self.time, self.entity, self.event, self.x, self.y)
    }
}

/// Bookkeeping for one finished re-optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Reoptimization {
    pub started: f64,
    pub finished: f64,
    pub n_tasks: usize,
    pub rounds: u64,
    /// The incumbent passed `evaluate` on the instance it was computed for.
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioLog {
    pub records: Vec<LogRecord>,
    pub reoptimizations: Vec<Reoptimization>,
    /// `(before completion, after reveal)` open-task counts for each reveal.
    pub size_checks: Vec<(usize, usize)>,
    /// Final task table.
    pub tasks: Vec<Task>,
    /// Why the run stopped early, if it did.
    pub aborted: Option<String>,
}

impl ScenarioLog {
    pub fn events(&self) -> impl Iterator<Item = &LogRecord> {
        self.records.iter().filter(|r| r.event != EventKind::Pose)
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.records.iter().filter(|r| r.event == kind).count()
    }

    /// Appearance-to-completion time of every finished task.
    pub fn service_times(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for done in self.records.iter().filter(|r| r.event == EventKind::TaskCompleted) {
            let appeared = self
                .records
                .iter()
                .find(|r| r.event == EventKind::TaskAppeared && r.entity == done.entity);
            if let (Entity::Task(m), Some(a)) = (done.entity, appeared) {
                out.push((m, done.time - a.time));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Activity {
    Idle,
    Holding { task: usize, until: f64 },
}

struct InFlight {
    started: f64,
    finishes: f64,
    allocation: Assignment,
    task_ids: Vec<usize>,
    rounds: u64,
    feasible: bool,
}

struct Sim {
    dt: f64,
    time: f64,
    robots: Vec<Robot>,
    activity: Vec<Activity>,
    tasks: Vec<Task>,
    queue: VecDeque<Task>,
    inflight: Option<InFlight>,
    log: ScenarioLog,
}

fn snap_up(t: f64, dt: f64) -> f64 {
    ((t / dt) - 1e-9).ceil() * dt
}

impl Sim {
    fn record(&mut self, entity: Entity, event: EventKind, at: Point) {
        self.log.records.push(LogRecord {
            time: self.time,
            entity,
            event,
            x: at.0,
            y: at.1,
        });
    }

    fn open_tasks(&self) -> usize {
        self.tasks.iter().filter(|t| t.state != TaskState::Done).count()
    }

    fn reveal(&mut self, task: Task) {
        let at = task.position;
        let id = task.id;
        self.tasks.push(task);
        self.record(Entity::Task(id), EventKind::TaskAppeared, at);
    }

    /// Aborts any running optimization and starts a new one over the tasks
    /// that no robot has started yet.
    fn start_reoptimization(&mut self) -> Result<()> {
        if self.inflight.take().is_some() {
            self.record(Entity::Cloud, EventKind::ReoptimizationAborted, (0.0, 0.0));
        }
        let open: Vec<&Task> = self
            .tasks
            .iter()
            .filter(|t| matches!(t.state, TaskState::Pending | TaskState::Assigned))
            .collect();
        if open.is_empty() {
            return Ok(());
        }
        let task_ids = open.iter().map(|t| t.id).collect();
        let instance = build_gap(&self.robots, &open)?;
        let schedule = NetworkSchedule::new(self.robots.len(), GraphKind::Cycle);
        let (outcome, _) = run_cloud_assisted(&instance, &schedule, RunConfig::first_incumbent())?;
        let allocation = outcome
            .metrics
            .incumbent
            .ok_or_else(|| Error::Invalid("re-optimization found no feasible allocation".into()))?;
        let feasible = evaluate(&instance, &allocation)?.cost().is_some();
        let rounds = outcome.metrics.communication_rounds;
        log::debug!("t={:.2}: re-optimization over {} tasks takes {rounds} rounds", self.time, instance.n_tasks());
        self.record(Entity::Cloud, EventKind::ReoptimizationStarted, (0.0, 0.0));
        self.inflight = Some(InFlight {
            started: self.time,
            finishes: self.time + snap_up(rounds as f64 * ROUND_DURATION, self.dt).max(self.dt),
            allocation,
            task_ids,
            rounds,
            feasible,
        });
        Ok(())
    }

    /// Installs a finished allocation: every robot reorders its share of the
    /// still-pending tasks along the shortest path from where it stands.
    fn apply(&mut self, done: InFlight) -> Result<()> {
        for robot in 0..self.robots.len() {
            let mine: Vec<usize> = done
                .task_ids
                .iter()
                .enumerate()
                .filter(|&(k, &id)| {
                    done.allocation.get(robot, k)
                        && matches!(self.tasks[id].state, TaskState::Pending | TaskState::Assigned)
                })
                .map(|(_, &id)| id)
                .collect();
            let points: Vec<Point> = mine.iter().map(|&id| self.tasks[id].position).collect();
            let (order, _) = shpp_order(self.robots[robot].position, &points)?;
            self.robots[robot].route = order.into_iter().map(|k| mine[k]).collect();
            for &id in &self.robots[robot].route {
                self.tasks[id].state = TaskState::Assigned;
            }
        }
        self.log.reoptimizations.push(Reoptimization {
            started: done.started,
            finished: self.time,
            n_tasks: done.task_ids.len(),
            rounds: done.rounds,
            feasible: done.feasible,
        });
        self.record(Entity::Cloud, EventKind::ReoptimizationFinished, (0.0, 0.0));
        Ok(())
    }

    fn finished(&self) -> bool {
        self.queue.is_empty() && self.inflight.is_none() && self.tasks.iter().all(|t| t.state == TaskState::Done)
    }

    fn tick(&mut self, sample_every: usize, step: usize) -> Result<()> {
        self.time = step as f64 * self.dt;

        if self.inflight.as_ref().is_some_and(|f| f.finishes <= self.time + 1e-9) {
            let done = self.inflight.take().expect("checked above");
            self.apply(done)?;
        }

        for r in 0..self.robots.len() {
            if let Activity::Holding { task, until } = self.activity[r] {
                if until > self.time + 1e-9 {
                    continue;
                }
                let before = self.open_tasks();
                self.tasks[task].state = TaskState::Done;
                self.activity[r] = Activity::Idle;
                let at = self.tasks[task].position;
                self.record(Entity::Task(task), EventKind::TaskCompleted, at);
                if let Some(next) = self.queue.pop_front() {
                    self.reveal(next);
                    self.log.size_checks.push((before, self.open_tasks()));
                    self.start_reoptimization()?;
                }
            }
        }

        for r in 0..self.robots.len() {
            if self.activity[r] != Activity::Idle {
                continue;
            }
            // Another robot may have started a task this robot still lists,
            // while a re-optimization was running.
            while let Some(&next) = self.robots[r].route.front() {
                if self.tasks[next].state == TaskState::Assigned {
                    break;
                }
                self.robots[r].route.pop_front();
            }
            let Some(&target) = self.robots[r].route.front() else {
                continue;
            };
            let goal = self.tasks[target].position;
            let pos = self.robots[r].position;
            let reach = self.robots[r].max_speed * self.dt;
            let d = distance(pos, goal);
            if d <= reach + 1e-12 {
                self.robots[r].position = goal;
                self.robots[r].route.pop_front();
                let task = &mut self.tasks[target];
                task.state = TaskState::InService;
                task.served_by = Some(r);
                let until = self.time + snap_up(task.hold_time, self.dt);
                self.activity[r] = Activity::Holding { task: target, until };
                self.record(Entity::Task(target), EventKind::TaskStarted, goal);
            } else {
                let f = reach / d;
                self.robots[r].position = (pos.0 + f * (goal.0 - pos.0), pos.1 + f * (goal.1 - pos.1));
            }
        }

        if sample_every > 0 && step.is_multiple_of(sample_every) {
            for r in 0..self.robots.len() {
                let at = self.robots[r].position;
                self.record(Entity::Robot(r), EventKind::Pose, at);
            }
        }
        Ok(())
    }
}

/// Runs the scenario to completion. Solver failures stop the run and are
/// reported in [`ScenarioLog::aborted`] along with the partial log.
pub fn simulate(config: &ScenarioConfig, seed: u64) -> Result<ScenarioLog> {
    if config.dt.is_nan() || config.dt <= 0.0 {
        return Err(Error::Invalid("dt must be positive".into()));
    }
    if !(0.0..=1.0).contains(&config.access_probability) {
        return Err(Error::Invalid("access_probability must lie in [0, 1]".into()));
    }
    let n = config.robots.len();
    let total = config.initial_tasks.len() + config.arrivals.len();
    if n == 0 && total > 0 {
        return Err(Error::Invalid("tasks but no robots".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let robots: Vec<Robot> = config
        .robots
        .iter()
        .enumerate()
        .map(|(id, s)| Robot {
            id,
            kind: s.kind,
            position: (s.x, s.y),
            max_speed: s.kind.max_speed(),
            route: VecDeque::new(),
        })
        .collect();
    let mut tasks: Vec<Task> = config
        .initial_tasks
        .iter()
        .chain(&config.arrivals)
        .enumerate()
        .map(|(id, s)| {
            let mut accessible: Vec<bool> = (0..n).map(|_| rng.gen_bool(config.access_probability)).collect();
            if !accessible.iter().any(|&a| a) {
                accessible[id % n] = true;
            }
            Task {
                id,
                position: (s.x, s.y),
                hold_time: rng.gen_range(3.0..=5.0),
                accessible,
                weights: (0..n).map(|_| rng.gen_range(10..=MAX_WEIGHT)).collect(),
                state: TaskState::Pending,
                served_by: None,
            }
        })
        .collect();
    let queue: VecDeque<Task> = tasks.split_off(config.initial_tasks.len()).into();

    let mut sim = Sim {
        dt: config.dt,
        time: 0.0,
        activity: vec![Activity::Idle; n],
        robots,
        tasks: Vec::new(),
        queue,
        inflight: None,
        log: ScenarioLog {
            records: Vec::new(),
            reoptimizations: Vec::new(),
            size_checks: Vec::new(),
            tasks: Vec::new(),
            aborted: None,
        },
    };
    for t in tasks {
        sim.reveal(t);
    }
    let sample_every = (config.sample_interval / config.dt).round() as usize;
    let mut result = sim.start_reoptimization();
    let mut step = 0;
    while result.is_ok() && !sim.finished() {
        if step as f64 * config.dt > TIME_LIMIT {
            result = Err(Error::Invalid("scenario exceeded the simulated time limit".into()));
            break;
        }
        result = sim.tick(sample_every, step);
        step += 1;
    }
    if let Err(e) = result {
        sim.log.aborted = Some(e.to_string());
    }
    sim.log.tasks = sim.tasks;
    Ok(sim.log)
}
