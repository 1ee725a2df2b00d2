//! Skills, conditions, goals, and the bound references that tie policies to
//! them.

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A condition or skill name applied to concrete (or parameter) arguments,
/// e.g. `object_at(cube, delivery)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Binding {
    pub name: String,
    pub args: Vec<String>,
}

impl Binding {
    pub fn new<S: Into<String>>(name: S, args: &[&str]) -> Self {
        Binding {
            name: name.into(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }

    /// Replace every argument that names a key of `subst` with its value.
    pub fn substitute(&self, subst: &BTreeMap<String, String>) -> Binding {
        Binding {
            name: self.name.clone(),
            args: self
                .args
                .iter()
                .map(|a| subst.get(a).cloned().unwrap_or_else(|| a.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.args.join(", "))
    }
}

/// A condition that must evaluate to `positive`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub cond: Binding,
    pub positive: bool,
}

impl Literal {
    pub fn holds(cond: Binding) -> Self {
        Literal { cond, positive: true }
    }

    pub fn fails(cond: Binding) -> Self {
        Literal { cond, positive: false }
    }

    pub fn negated(&self) -> Self {
        Literal {
            cond: self.cond.clone(),
            positive: !self.positive,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.cond)
        } else {
            write!(f, "!{}", self.cond)
        }
    }
}

/// Conjunction of literals. The empty guard always holds.
pub type Guard = Vec<Literal>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamType {
    Object,
    Station,
    /// Anything with a location: a station or an object.
    Pose,
}

impl ParamType {
    pub fn keyword(self) -> &'static str {
        match self {
            ParamType::Object => "object",
            ParamType::Station => "station",
            ParamType::Pose => "pose",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "object" => Some(ParamType::Object),
            "station" => Some(ParamType::Station),
            "pose" => Some(ParamType::Pose),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: ParamType,
}

impl Param {
    pub fn new(name: &str, ty: ParamType) -> Self {
        Param { name: name.to_string(), ty }
    }
}

/// A named predicate over the world with per-dimension tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub name: String,
    pub params: Vec<Param>,
    pub tolerance: Vec<f64>,
}

/// A robot capability with preconditions, postconditions and a duration in
/// simulation steps. Failure injection is keyed by the skill name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillSpec {
    pub name: String,
    pub params: Vec<Param>,
    pub pre: Vec<Binding>,
    pub post: Vec<Binding>,
    pub duration: u32,
}

impl SkillSpec {
    /// Bind the skill's parameters positionally and return the call binding
    /// together with the substitution map.
    pub fn call(&self, args: &[String]) -> (Binding, BTreeMap<String, String>) {
        let subst: BTreeMap<String, String> = self
            .params
            .iter()
            .zip(args)
            .map(|(p, a)| (p.name.clone(), a.clone()))
            .collect();
        let binding = Binding {
            name: self.name.clone(),
            args: args.to_vec(),
        };
        (binding, subst)
    }

    fn is_param(&self, arg: &str) -> bool {
        self.params.iter().any(|p| p.name == arg)
    }

    /// Match one of this skill's postconditions against a concrete condition.
    /// Returns the parameter substitution and the number of literal (non
    /// parameter) arguments that matched, used to rank competing achievers.
    pub fn achieves(&self, cond: &Binding) -> Option<(BTreeMap<String, String>, usize)> {
        for post in &self.post {
            if post.name != cond.name || post.args.len() != cond.args.len() {
                continue;
            }
            let mut subst = BTreeMap::new();
            let mut literal_hits = 0;
            let mut ok = true;
            for (pat, val) in post.args.iter().zip(&cond.args) {
                if self.is_param(pat) {
                    match subst.get(pat) {
                        Some(prev) if prev != val => {
                            ok = false;
                            break;
                        }
                        _ => {
                            subst.insert(pat.clone(), val.clone());
                        }
                    }
                } else if pat == val {
                    literal_hits += 1;
                } else {
                    ok = false;
                    break;
                }
            }
            if ok && self.params.iter().all(|p| subst.contains_key(&p.name)) {
                return Some((subst, literal_hits));
            }
        }
        None
    }
}

/// The ordered list of conditions a task must make true.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GoalSpec {
    pub goals: Vec<Binding>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LibraryError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("`{owner}` references unknown condition `{name}`")]
    UnknownCondition { owner: String, name: String },
    #[error("`{owner}` passes {found} arguments to `{name}`, which takes {expected}")]
    ArityMismatch {
        owner: String,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("skill `{0}` must last at least one step")]
    ZeroDuration(String),
    #[error("condition `{0}` has a non-positive tolerance")]
    BadTolerance(String),
}

/// Registry of skills and conditions, iterated in declaration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Library {
    conditions: IndexMap<String, ConditionSpec>,
    skills: IndexMap<String, SkillSpec>,
}

impl Library {
    pub fn new(conditions: Vec<ConditionSpec>, skills: Vec<SkillSpec>) -> Result<Self, LibraryError> {
        let mut lib = Library::default();
        for c in conditions {
            if c.tolerance.iter().any(|t| t.is_nan() || *t <= 0.0) {
                return Err(LibraryError::BadTolerance(c.name));
            }
            if lib.conditions.contains_key(&c.name) {
                return Err(LibraryError::DuplicateName(c.name));
            }
            lib.conditions.insert(c.name.clone(), c);
        }
        for s in skills {
            if lib.conditions.contains_key(&s.name) || lib.skills.contains_key(&s.name) {
                return Err(LibraryError::DuplicateName(s.name));
            }
            if s.duration == 0 {
                return Err(LibraryError::ZeroDuration(s.name));
            }
            for c in s.pre.iter().chain(&s.post) {
                lib.check_condition(&s.name, c)?;
            }
            lib.skills.insert(s.name.clone(), s);
        }
        Ok(lib)
    }

    pub fn check_condition(&self, owner: &str, c: &Binding) -> Result<(), LibraryError> {
        let spec = self
            .conditions
            .get(&c.name)
            .ok_or_else(|| LibraryError::UnknownCondition {
                owner: owner.to_string(),
                name: c.name.clone(),
            })?;
        if spec.params.len() != c.args.len() {
            return Err(LibraryError::ArityMismatch {
                owner: owner.to_string(),
                name: c.name.clone(),
                expected: spec.params.len(),
                found: c.args.len(),
            });
        }
        Ok(())
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionSpec> {
        self.conditions.get(name)
    }

    pub fn skill(&self, name: &str) -> Option<&SkillSpec> {
        self.skills.get(name)
    }

    pub fn conditions(&self) -> impl Iterator<Item = &ConditionSpec> {
        self.conditions.values()
    }

    pub fn skills(&self) -> impl Iterator<Item = &SkillSpec> {
        self.skills.values()
    }

    pub fn condition_mut(&mut self, name: &str) -> Option<&mut ConditionSpec> {
        self.conditions.get_mut(name)
    }

    /// Postconditions of a bound skill call.
    pub fn post_of(&self, call: &Binding) -> Vec<Binding> {
        match self.skills.get(&call.name) {
            Some(spec) => {
                let (_, subst) = spec.call(&call.args);
                spec.post.iter().map(|p| p.substitute(&subst)).collect()
            }
            None => Vec::new(),
        }
    }
}
