//! Deterministic kinematic world for the fetch experiments.
//!
//! There is no physics: navigation interpolates the robot pose at constant
//! velocity over the skill's duration, manipulation just takes its duration,
//! and effects land when a skill completes. A step is: drain the battery,
//! progress active skills, advance the clock, apply scripted events.

mod scenario;
mod world;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{Binding, Library};
use crate::runtime::{ExecId, TickStatus, WorldError, WorldView};

pub use scenario::{Event, ScenarioScript, Scene, DEFAULT_DRAIN};
pub use world::{wrap_angle, Arm, Pose, Station, WorldState, CARRY_HEIGHT};

/// Tolerances used when a condition declares none.
pub const DEFAULT_POSE_TOLERANCE: [f64; 3] = [0.1, 0.1, 0.2];
pub const DEFAULT_POSITION_TOLERANCE: [f64; 3] = [0.1, 0.1, 0.1];
pub const DEFAULT_BATTERY_THRESHOLD: f64 = 20.0;

/// Condition and skill names the simulator gives meaning to.
pub const CONDITIONS: [&str; 5] = ["robot_at", "in_hand", "object_at", "battery_ok", "objects_found"];
pub const SKILLS: [&str; 6] = ["move_to", "pick", "place", "recharge", "dock", "search"];

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecState {
    Idle,
    Active,
    Succeeded,
    Failed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq)]
enum Effect {
    Navigate { from: Pose, to: Pose },
    Pick(String),
    Place(String, String),
    Recharge { from: Pose, to: Pose },
    Search,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkillExecution {
    pub call: Binding,
    pub state: ExecState,
    pub steps_remaining: u32,
    pub duration: u32,
    effect: Effect,
    doomed: bool,
}

impl SkillExecution {
    fn new(call: Binding, duration: u32, effect: Effect) -> Self {
        SkillExecution {
            call,
            state: ExecState::Idle,
            steps_remaining: duration,
            duration,
            effect,
            doomed: false,
        }
    }

    /// `Running` exactly while active; cancelled counts as failed.
    pub fn status(&self) -> TickStatus {
        match self.state {
            ExecState::Active => TickStatus::Running,
            ExecState::Succeeded => TickStatus::Success,
            ExecState::Idle | ExecState::Failed | ExecState::Cancelled => TickStatus::Failure,
        }
    }

    pub fn cancel(&mut self) -> bool {
        if self.state == ExecState::Active {
            self.state = ExecState::Cancelled;
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillEventKind {
    Sent,
    PreconditionUnsatisfied,
    Succeeded,
    Failed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkillEvent {
    pub step: u64,
    pub call: String,
    pub kind: SkillEventKind,
}

/// A world plus its scenario script, driven one step at a time.
#[derive(Debug, Clone)]
pub struct Simulation {
    library: Library,
    world: WorldState,
    drain: f64,
    events: Vec<(u64, Event)>,
    next_event: usize,
    execs: Vec<SkillExecution>,
    attempts: BTreeMap<String, u32>,
    failures: BTreeSet<(String, u32)>,
    log: Vec<SkillEvent>,
}

fn tolerance<const N: usize>(library: &Library, name: &str, default: [f64; N]) -> [f64; N] {
    let mut t = default;
    if let Some(spec) = library.condition(name) {
        for (slot, v) in t.iter_mut().zip(&spec.tolerance) {
            *slot = *v;
        }
    }
    t
}

impl Simulation {
    pub fn new(library: Library, script: &ScenarioScript) -> Result<Self, SimError> {
        let mut sim = Simulation {
            world: script.scene.initial_world()?,
            drain: script.scene.drain,
            library,
            events: script.events.clone(),
            next_event: 0,
            execs: Vec::new(),
            attempts: BTreeMap::new(),
            failures: BTreeSet::new(),
            log: Vec::new(),
        };
        sim.events.sort_by_key(|(s, _)| *s);
        sim.apply_events();
        Ok(sim)
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn library(&self) -> &Library {
        &self.library
    }

    pub fn clock(&self) -> u64 {
        self.world.clock
    }

    pub fn skill_log(&self) -> &[SkillEvent] {
        &self.log
    }

    /// Whether scripted events remain to be applied.
    pub fn events_pending(&self) -> bool {
        self.next_event < self.events.len()
    }

    pub fn execution(&self, id: ExecId) -> Option<&SkillExecution> {
        self.execs.get(id.0 as usize)
    }

    pub fn digest(&self) -> String {
        self.world.digest()
    }

    fn record(&mut self, call: &Binding, kind: SkillEventKind) {
        self.log.push(SkillEvent {
            step: self.world.clock,
            call: call.to_string(),
            kind,
        });
    }

    fn apply_events(&mut self) {
        while let Some((step, ev)) = self.events.get(self.next_event) {
            if *step > self.world.clock {
                break;
            }
            match ev.clone() {
                Event::InjectFailure { skill, attempt } => {
                    self.failures.insert((skill, attempt));
                }
                Event::MoveObject { object, station } => {
                    if let Some(s) = self.world.stations.get(&station) {
                        let surface = s.surface;
                        if self.world.held_object.as_deref() == Some(object.as_str()) {
                            self.world.held_object = None;
                            self.world.arm = Arm::Monitoring;
                        }
                        self.world.objects.insert(object, surface);
                    }
                }
                Event::SetBattery { level } => self.world.battery = level.clamp(0.0, 100.0),
                Event::DrainRate { per_step } => self.drain = per_step.max(0.0),
            }
            self.next_event += 1;
        }
    }

    /// One simulation step.
    pub fn advance(&mut self) {
        self.world.battery = (self.world.battery - self.drain).max(0.0);
        for i in 0..self.execs.len() {
            if self.execs[i].state != ExecState::Active {
                continue;
            }
            let e = &mut self.execs[i];
            e.steps_remaining -= 1;
            let done = e.steps_remaining == 0;
            let t = f64::from(e.duration - e.steps_remaining) / f64::from(e.duration);
            let (doomed, effect) = (e.doomed, e.effect.clone());
            if let Effect::Navigate { from, to } | Effect::Recharge { from, to } = &effect {
                if !(done && doomed) {
                    self.world.robot_pose = from.lerp(to, t);
                }
            }
            if !done {
                continue;
            }
            let call = self.execs[i].call.clone();
            if doomed {
                self.execs[i].state = ExecState::Failed;
                if matches!(effect, Effect::Pick(_) | Effect::Place(..)) {
                    self.world.arm = if self.world.held_object.is_some() {
                        Arm::Tucked
                    } else {
                        Arm::Monitoring
                    };
                }
                self.record(&call, SkillEventKind::Failed);
                continue;
            }
            match effect {
                Effect::Navigate { to, .. } => self.world.robot_pose = to,
                Effect::Recharge { to, .. } => {
                    self.world.robot_pose = to;
                    self.world.battery = 100.0;
                }
                Effect::Pick(o) => {
                    self.world.held_object = Some(o);
                    self.world.arm = Arm::Tucked;
                }
                Effect::Place(o, s) => {
                    let surface = self.world.stations[&s].surface;
                    self.world.objects.insert(o, surface);
                    self.world.held_object = None;
                    self.world.arm = Arm::Monitoring;
                }
                Effect::Search => self.world.objects_found = true,
            }
            self.execs[i].state = ExecState::Succeeded;
            self.record(&call, SkillEventKind::Succeeded);
        }
        self.world.carry_held();
        self.world.clock += 1;
        self.apply_events();
    }

    fn check_arity(&self, b: &Binding, expected: usize) -> Result<(), WorldError> {
        if b.args.len() != expected {
            return Err(WorldError::ArityMismatch {
                name: b.name.clone(),
                expected,
                found: b.args.len(),
            });
        }
        Ok(())
    }

    fn object(&self, name: &str) -> Result<(), WorldError> {
        if self.world.objects.contains_key(name) {
            Ok(())
        } else {
            Err(WorldError::UnknownEntity(name.to_string()))
        }
    }

    fn station(&self, name: &str) -> Result<&Station, WorldError> {
        self.world
            .stations
            .get(name)
            .ok_or_else(|| WorldError::UnknownEntity(name.to_string()))
    }

    fn approach(&self, target: &str) -> Result<Option<Pose>, WorldError> {
        if !self.world.stations.contains_key(target) && !self.world.objects.contains_key(target) {
            return Err(WorldError::UnknownEntity(target.to_string()));
        }
        Ok(self.world.approach_pose(target))
    }

    fn effect_for(&self, call: &Binding) -> Result<Effect, WorldError> {
        let from = self.world.robot_pose;
        match call.name.as_str() {
            "move_to" => {
                let to = self.approach(&call.args[0])?.unwrap_or(from);
                Ok(Effect::Navigate { from, to })
            }
            "dock" => Ok(Effect::Navigate {
                from,
                to: self.station("inspection")?.pose,
            }),
            "recharge" => Ok(Effect::Recharge {
                from,
                to: self.station("recharge")?.pose,
            }),
            "pick" => {
                self.object(&call.args[0])?;
                Ok(Effect::Pick(call.args[0].clone()))
            }
            "place" => {
                self.object(&call.args[0])?;
                self.station(&call.args[1])?;
                Ok(Effect::Place(call.args[0].clone(), call.args[1].clone()))
            }
            "search" => Ok(Effect::Search),
            other => Err(WorldError::UnknownSkill(other.to_string())),
        }
    }

    /// Conditions the simulator itself requires on top of the declared
    /// preconditions.
    fn intrinsic_ok(&self, effect: &Effect) -> bool {
        match effect {
            Effect::Pick(o) => self.world.held_object.is_none() && self.world.approach_pose(o).is_some(),
            Effect::Place(o, _) => self.world.held_object.as_deref() == Some(o.as_str()),
            _ => true,
        }
    }
}

impl WorldView for Simulation {
    fn evaluate(&self, c: &Binding) -> Result<bool, WorldError> {
        let spec = self
            .library
            .condition(&c.name)
            .filter(|_| CONDITIONS.contains(&c.name.as_str()))
            .ok_or_else(|| WorldError::UnknownCondition(c.name.clone()))?;
        self.check_arity(c, spec.params.len())?;
        let w = &self.world;
        match c.name.as_str() {
            "robot_at" => {
                self.check_arity(c, 1)?;
                let Some(p) = self.approach(&c.args[0])? else { return Ok(false) };
                let tol = tolerance(&self.library, "robot_at", DEFAULT_POSE_TOLERANCE);
                let r = w.robot_pose;
                Ok((r.x - p.x).abs() <= tol[0]
                    && (r.y - p.y).abs() <= tol[1]
                    && wrap_angle(r.yaw - p.yaw).abs() <= tol[2])
            }
            "in_hand" => {
                self.check_arity(c, 1)?;
                self.object(&c.args[0])?;
                Ok(w.held_object.as_deref() == Some(c.args[0].as_str()))
            }
            "object_at" => {
                self.check_arity(c, 2)?;
                self.object(&c.args[0])?;
                let s = self.station(&c.args[1])?;
                if w.held_object.as_deref() == Some(c.args[0].as_str()) {
                    return Ok(false);
                }
                let p = w.objects[&c.args[0]];
                let tol = tolerance(&self.library, "object_at", DEFAULT_POSITION_TOLERANCE);
                Ok((0..3).all(|i| (p[i] - s.surface[i]).abs() <= tol[i]))
            }
            "battery_ok" => {
                let [threshold] = tolerance(&self.library, "battery_ok", [DEFAULT_BATTERY_THRESHOLD]);
                Ok(w.battery >= threshold)
            }
            "objects_found" => Ok(w.objects_found),
            _ => unreachable!("filtered by CONDITIONS"),
        }
    }

    fn send(&mut self, call: &Binding) -> Result<ExecId, WorldError> {
        let spec = self
            .library
            .skill(&call.name)
            .ok_or_else(|| WorldError::UnknownSkill(call.name.clone()))?;
        let (duration, arity) = (spec.duration, spec.params.len());
        let (_, subst) = spec.call(&call.args);
        let pre: Vec<Binding> = spec.pre.iter().map(|p| p.substitute(&subst)).collect();
        self.check_arity(call, arity)?;
        let effect = self.effect_for(call)?;
        let id = ExecId(self.execs.len() as u64);
        let mut exec = SkillExecution::new(call.clone(), duration, effect);
        self.record(call, SkillEventKind::Sent);
        let mut ok = self.intrinsic_ok(&exec.effect);
        for p in &pre {
            ok = ok && self.evaluate(p)?;
        }
        if !ok {
            exec.state = ExecState::Failed;
            self.execs.push(exec);
            self.record(call, SkillEventKind::PreconditionUnsatisfied);
            return Ok(id);
        }
        let n = self.attempts.entry(call.name.clone()).or_insert(0);
        *n += 1;
        exec.doomed = self.failures.contains(&(call.name.clone(), *n));
        exec.state = ExecState::Active;
        if matches!(exec.effect, Effect::Pick(_) | Effect::Place(..)) {
            self.world.arm = Arm::Manipulating;
        }
        self.execs.push(exec);
        Ok(id)
    }

    fn monitor(&self, exec: ExecId) -> TickStatus {
        self.execs
            .get(exec.0 as usize)
            .map_or(TickStatus::Failure, SkillExecution::status)
    }

    fn cancel(&mut self, exec: ExecId) {
        let Some(e) = self.execs.get_mut(exec.0 as usize) else { return };
        if e.cancel() {
            let call = e.call.clone();
            if matches!(e.effect, Effect::Pick(_) | Effect::Place(..)) {
                self.world.arm = if self.world.held_object.is_some() {
                    Arm::Tucked
                } else {
                    Arm::Monitoring
                };
            }
            self.record(&call, SkillEventKind::Cancelled);
        }
    }
}
