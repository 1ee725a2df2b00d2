use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::world::{Arm, Pose, Station, WorldState};
use super::SimError;

/// Default per-step battery drain in percent.
pub const DEFAULT_DRAIN: f64 = 0.5;

/// Initial layout of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub robot: Pose,
    pub battery: f64,
    pub drain: f64,
    pub stations: IndexMap<String, Station>,
    /// Object and the station it starts on.
    pub objects: Vec<(String, String)>,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            robot: Pose::default(),
            battery: 100.0,
            drain: DEFAULT_DRAIN,
            stations: IndexMap::new(),
            objects: Vec::new(),
        }
    }
}

impl Scene {
    /// The room of the fetch experiments: two fetch tables, a delivery
    /// station, a recharge station and the inspection table, with the robot
    /// in the middle and `objects` on fetch table 1.
    pub fn desk(objects: &[&str]) -> Scene {
        let mut stations = IndexMap::new();
        let mut add = |name: &str, pose: Pose, surface: [f64; 3]| {
            stations.insert(name.to_string(), Station { pose, surface });
        };
        add("fetch_table_1", Pose::new(2.0, 1.5, 0.0), [2.6, 1.5, 0.75]);
        add("fetch_table_2", Pose::new(2.0, -1.5, 0.0), [2.6, -1.5, 0.75]);
        add("delivery", Pose::new(-2.0, 1.5, PI), [-2.6, 1.5, 0.75]);
        add("recharge", Pose::new(-2.0, -1.5, PI), [-2.6, -1.5, 0.3]);
        add("inspection", Pose::new(0.0, 2.5, FRAC_PI_2), [0.0, 3.1, 0.75]);
        Scene {
            stations,
            objects: objects.iter().map(|o| (o.to_string(), "fetch_table_1".to_string())).collect(),
            ..Default::default()
        }
    }

    pub fn initial_world(&self) -> Result<WorldState, SimError> {
        if !(0.0..=100.0).contains(&self.battery) {
            return Err(SimError::InvalidScene(format!("battery {} outside [0, 100]", self.battery)));
        }
        if self.drain.is_nan() || self.drain < 0.0 {
            return Err(SimError::InvalidScene(format!("negative drain {}", self.drain)));
        }
        let mut objects = BTreeMap::new();
        for (o, st) in &self.objects {
            let s = self
                .stations
                .get(st)
                .ok_or_else(|| SimError::InvalidScene(format!("object `{o}` on unknown station `{st}`")))?;
            if objects.insert(o.clone(), s.surface).is_some() {
                return Err(SimError::InvalidScene(format!("object `{o}` placed twice")));
            }
        }
        Ok(WorldState {
            robot_pose: self.robot,
            arm: Arm::Monitoring,
            held_object: None,
            battery: self.battery,
            objects,
            stations: self.stations.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            objects_found: false,
            clock: 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    /// The `attempt`-th started execution of `skill` (counted from 1 over the
    /// whole run) fails when it completes.
    InjectFailure { skill: String, attempt: u32 },
    /// Put an object on a station, taking it out of the gripper if held.
    MoveObject { object: String, station: String },
    SetBattery { level: f64 },
    DrainRate { per_step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub name: String,
    pub scene: Scene,
    /// (step, event), sorted by step; ties keep their written order.
    pub events: Vec<(u64, Event)>,
}

impl ScenarioScript {
    pub fn new(name: impl Into<String>, scene: Scene, mut events: Vec<(u64, Event)>) -> Self {
        events.sort_by_key(|(s, _)| *s);
        ScenarioScript {
            name: name.into(),
            scene,
            events,
        }
    }

    pub fn last_event_step(&self) -> Option<u64> {
        self.events.last().map(|(s, _)| *s)
    }
}
