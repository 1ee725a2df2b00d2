use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Planar robot pose in meters and radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Pose { x, y, yaw }
    }

    /// Linear interpolation; yaw turns the short way round.
    pub fn lerp(&self, to: &Pose, t: f64) -> Pose {
        Pose {
            x: self.x + (to.x - self.x) * t,
            y: self.y + (to.y - self.y) * t,
            yaw: wrap_angle(self.yaw + wrap_angle(to.yaw - self.yaw) * t),
        }
    }
}

/// Map an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Tucked,
    Monitoring,
    Manipulating,
}

/// A named place: where the robot stands to use it and where objects rest
/// on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub pose: Pose,
    pub surface: [f64; 3],
}

/// Height at which a held object travels.
pub const CARRY_HEIGHT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub robot_pose: Pose,
    pub arm: Arm,
    pub held_object: Option<String>,
    pub battery: f64,
    pub objects: BTreeMap<String, [f64; 3]>,
    pub stations: BTreeMap<String, Station>,
    pub objects_found: bool,
    pub clock: u64,
}

impl WorldState {
    /// The station an object rests on, if any.
    pub fn resting_station(&self, object: &str) -> Option<&str> {
        if self.held_object.as_deref() == Some(object) {
            return None;
        }
        let p = self.objects.get(object)?;
        self.stations
            .iter()
            .find(|(_, s)| (0..3).all(|i| (s.surface[i] - p[i]).abs() < 1e-9))
            .map(|(n, _)| n.as_str())
    }

    /// Where the robot has to stand to reach `target`: a station's pose, or
    /// the pose of the station an object rests on. A held object is reached
    /// wherever the robot is.
    pub fn approach_pose(&self, target: &str) -> Option<Pose> {
        if let Some(s) = self.stations.get(target) {
            return Some(s.pose);
        }
        if self.held_object.as_deref() == Some(target) {
            return Some(self.robot_pose);
        }
        let st = self.resting_station(target)?;
        Some(self.stations[st].pose)
    }

    pub(crate) fn carry_held(&mut self) {
        if let Some(o) = &self.held_object {
            let p = [self.robot_pose.x, self.robot_pose.y, CARRY_HEIGHT];
            self.objects.insert(o.clone(), p);
        }
    }

    /// SHA-256 over the canonical JSON encoding, as lowercase hex.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("plain data");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lerp_turns_the_short_way() {
        let a = Pose::new(0.0, 0.0, 3.0);
        let b = Pose::new(0.0, 0.0, -3.0);
        let mid = a.lerp(&b, 0.5);
        assert!((mid.yaw.abs() - PI).abs() < 1e-9);
        assert_eq!(a.lerp(&b, 1.0).yaw, wrap_angle(-3.0));
    }

    #[test]
    fn wrap_angle_range() {
        for a in [-10.0, -PI, 0.0, PI, 7.0] {
            let w = wrap_angle(a);
            assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
        }
    }
}
