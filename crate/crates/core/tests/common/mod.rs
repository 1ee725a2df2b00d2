//! Generators and reference implementations shared by the integration tests.
#![allow(dead_code)]

use btfsm_core::dsl::Document;
use btfsm_core::model::{Param, ParamType};
use btfsm_core::runtime::ScriptedWorld;
use btfsm_core::sim::{Event, Pose, ScenarioScript, Scene, Station};
use btfsm_core::synthesis;
use btfsm_core::{Binding, ConditionSpec, DirectedGraph, GoalSpec, NodeHandle, NodeKind, PolicyTree, SkillSpec, TickStatus};
use rand::seq::SliceRandom;
use rand::Rng;

pub const LEAVES: usize = 4;

/// Leaf values for a tree over `c0()..c3()` and `a0()..a3()`.
#[derive(Debug, Clone, Copy)]
pub struct Leaves {
    pub conditions: [bool; LEAVES],
    pub skills: [TickStatus; LEAVES],
}

impl Leaves {
    pub fn random(rng: &mut impl Rng) -> Self {
        let statuses = [TickStatus::Success, TickStatus::Failure, TickStatus::Running];
        Leaves {
            conditions: std::array::from_fn(|_| rng.gen()),
            skills: std::array::from_fn(|_| *statuses.choose(rng).unwrap()),
        }
    }

    /// Every condition negated and every finished skill result inverted.
    pub fn dual(&self) -> Self {
        Leaves {
            conditions: self.conditions.map(|c| !c),
            skills: self.skills.map(TickStatus::inverted),
        }
    }

    pub fn world(&self) -> ScriptedWorld {
        let mut w = ScriptedWorld::new();
        for i in 0..LEAVES {
            w.set_condition(&cond(i), self.conditions[i]);
            w.set_skill(&skill(i), self.skills[i]);
        }
        w
    }
}

pub fn cond(i: usize) -> Binding {
    Binding::new(format!("c{i}"), &[])
}

pub fn skill(i: usize) -> Binding {
    Binding::new(format!("a{i}"), &[])
}

pub fn random_tree(rng: &mut impl Rng, depth: usize) -> PolicyTree {
    if depth == 0 || rng.gen_bool(0.3) {
        let i = rng.gen_range(0..LEAVES);
        return if rng.gen() {
            PolicyTree::condition(cond(i))
        } else {
            PolicyTree::action(skill(i))
        };
    }
    let n = rng.gen_range(1..=4);
    let children = (0..n).map(|_| random_tree(rng, depth - 1)).collect();
    if rng.gen() {
        PolicyTree::sequence(children).unwrap()
    } else {
        PolicyTree::fallback(children).unwrap()
    }
}

/// Rebuild `tree` with Sequence and Fallback swapped.
pub fn dual_tree(tree: &PolicyTree) -> PolicyTree {
    fn go(t: &PolicyTree, h: NodeHandle) -> PolicyTree {
        let n = t.node(h).unwrap();
        match n.kind {
            NodeKind::Condition => PolicyTree::condition(n.binding.clone().unwrap()),
            NodeKind::Action => PolicyTree::action(n.binding.clone().unwrap()),
            NodeKind::Sequence => PolicyTree::fallback(t.children(h).iter().map(|&c| go(t, c)).collect()).unwrap(),
            NodeKind::Fallback => PolicyTree::sequence(t.children(h).iter().map(|&c| go(t, c)).collect()).unwrap(),
        }
    }
    go(tree, tree.root())
}

/// Straightforward recursive evaluation of one tick: the root status and
/// every node evaluated, children before parents.
pub fn reference_tick(tree: &PolicyTree, leaves: &Leaves) -> (TickStatus, Vec<(NodeHandle, TickStatus)>) {
    fn index(b: &Binding) -> usize {
        b.name[1..].parse().unwrap()
    }
    fn go(t: &PolicyTree, h: NodeHandle, l: &Leaves, out: &mut Vec<(NodeHandle, TickStatus)>) -> TickStatus {
        let n = t.node(h).unwrap();
        let s = match n.kind {
            NodeKind::Condition => {
                if l.conditions[index(n.binding.as_ref().unwrap())] {
                    TickStatus::Success
                } else {
                    TickStatus::Failure
                }
            }
            NodeKind::Action => l.skills[index(n.binding.as_ref().unwrap())],
            NodeKind::Sequence => {
                let mut s = TickStatus::Success;
                for &c in t.children(h) {
                    s = go(t, c, l, out);
                    if s != TickStatus::Success {
                        break;
                    }
                }
                s
            }
            NodeKind::Fallback => {
                let mut s = TickStatus::Failure;
                for &c in t.children(h) {
                    s = go(t, c, l, out);
                    if s != TickStatus::Failure {
                        break;
                    }
                }
                s
            }
        };
        out.push((h, s));
        s
    }
    let mut out = Vec::new();
    let s = go(tree, tree.root(), leaves, &mut out);
    (s, out)
}

/// Random simple directed graph on at most `max_nodes` nodes with ids
/// `v0..`.
pub fn random_graph(rng: &mut impl Rng, max_nodes: usize) -> DirectedGraph {
    let n = rng.gen_range(0..=max_nodes);
    let mut g = DirectedGraph::new();
    for i in 0..n {
        g.add_node(format!("v{i}"), None);
    }
    let p = rng.gen_range(0.1..0.6);
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(p) {
                g.add_edge_idx(a, b, None);
            }
        }
    }
    g
}

const TYPES: [ParamType; 3] = [ParamType::Object, ParamType::Station, ParamType::Pose];
const LITERALS: [&str; 4] = ["cube", "delivery", "fetch_table_1", "inspection"];

fn number(rng: &mut impl Rng, lo: i32, hi: i32) -> f64 {
    f64::from(rng.gen_range(lo * 100..=hi * 100)) / 100.0
}

fn pose(rng: &mut impl Rng) -> Pose {
    Pose::new(number(rng, -5, 5), number(rng, -5, 5), number(rng, -3, 3))
}

/// A random document the parser must accept: a library, goals, scenarios
/// and, when the goals can be synthesized, both policies.
pub fn random_document(rng: &mut impl Rng) -> Document {
    let conditions: Vec<ConditionSpec> = (0..rng.gen_range(1..=4))
        .map(|i| ConditionSpec {
            name: format!("c{i}"),
            params: (0..rng.gen_range(0..=2))
                .map(|j| Param::new(&format!("p{j}"), *TYPES.choose(rng).unwrap()))
                .collect(),
            tolerance: (0..rng.gen_range(0..=3)).map(|_| number(rng, 0, 30).max(0.01)).collect(),
        })
        .collect();
    let bind = |rng: &mut rand_chacha::ChaCha8Rng, params: &[Param]| -> Binding {
        let c = conditions.choose(rng).unwrap();
        let args = c
            .params
            .iter()
            .map(|_| {
                if !params.is_empty() && rng.gen_bool(0.6) {
                    params.choose(rng).unwrap().name.clone()
                } else {
                    LITERALS.choose(rng).unwrap().to_string()
                }
            })
            .collect();
        Binding {
            name: c.name.clone(),
            args,
        }
    };
    let mut local = rand_chacha::ChaCha8Rng::seed_from_u64(rng.gen());
    let skills: Vec<SkillSpec> = (0..rng.gen_range(0..=4))
        .map(|i| {
            let params: Vec<Param> = (0..local.gen_range(0..=2))
                .map(|j| Param::new(&format!("x{j}"), *TYPES.choose(&mut local).unwrap()))
                .collect();
            SkillSpec {
                name: format!("s{i}"),
                pre: (0..local.gen_range(0..=2)).map(|_| bind(&mut local, &params)).collect(),
                post: (0..local.gen_range(0..=2)).map(|_| bind(&mut local, &params)).collect(),
                duration: local.gen_range(1..=20),
                params,
            }
        })
        .collect();
    let goal = GoalSpec {
        goals: (0..rng.gen_range(0..=2)).map(|_| bind(&mut local, &[])).collect(),
    };
    let scenarios = (0..rng.gen_range(0..=2))
        .map(|i| random_scenario(rng, &format!("sc{i}"), &skills))
        .collect();
    let mut doc = Document {
        conditions,
        skills,
        goal,
        scenarios,
        bt: None,
        fsm: None,
    };
    let lib = doc.library();
    if rng.gen() {
        doc.bt = synthesis::backchain(&doc.goal, &lib).ok();
    }
    if rng.gen() {
        doc.fsm = if rng.gen() {
            synthesis::assemble_fault_tolerant_fsm(&doc.goal, &lib).ok()
        } else {
            synthesis::assemble_sequential_fsm(&doc.goal, &lib).ok()
        };
    }
    doc
}

use rand::SeedableRng;

fn random_scenario(rng: &mut impl Rng, name: &str, skills: &[SkillSpec]) -> ScenarioScript {
    let mut scene = Scene {
        robot: pose(rng),
        battery: number(rng, 0, 100),
        drain: number(rng, 0, 3),
        ..Scene::default()
    };
    for i in 0..rng.gen_range(0..=3) {
        scene.stations.insert(
            format!("st{i}"),
            Station {
                pose: pose(rng),
                surface: [number(rng, -5, 5), number(rng, -5, 5), number(rng, 0, 2)],
            },
        );
    }
    let stations: Vec<String> = scene.stations.keys().cloned().collect();
    if !stations.is_empty() {
        for i in 0..rng.gen_range(0..=2) {
            scene.objects.push((format!("o{i}"), stations.choose(rng).unwrap().clone()));
        }
    }
    let mut events = Vec::new();
    for _ in 0..rng.gen_range(0..=4) {
        let step = rng.gen_range(0..200);
        let ev = match rng.gen_range(0..4) {
            0 if !skills.is_empty() => Event::InjectFailure {
                skill: skills.choose(rng).unwrap().name.clone(),
                attempt: rng.gen_range(1..4),
            },
            1 if !scene.objects.is_empty() => Event::MoveObject {
                object: scene.objects.choose(rng).unwrap().0.clone(),
                station: stations.choose(rng).unwrap().clone(),
            },
            2 => Event::DrainRate {
                per_step: number(rng, 0, 3),
            },
            _ => Event::SetBattery {
                level: number(rng, 0, 100),
            },
        };
        events.push((step, ev));
    }
    ScenarioScript::new(name, scene, events)
}
