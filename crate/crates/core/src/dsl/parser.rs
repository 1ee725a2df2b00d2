use std::collections::BTreeMap;

use indexmap::IndexMap;

use super::lexer::{lex, Tok, TokKind};
use super::{DslError, Document, ParseError};
use crate::bt::{NodeKind, PolicyTree};
use crate::fsm::{Outcome, State, StateMachine, Target};
use crate::model::{Binding, ConditionSpec, Guard, Literal, Param, ParamType, SkillSpec};
use crate::sim::{Event, Pose, ScenarioScript, Scene, Station};

type Pos = (usize, usize);

/// Parse a `.pol` document. Never panics: every failure is a structured
/// [`DslError`] carrying the position of the offending token.
pub fn parse(text: &str) -> Result<Document, DslError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        skip_nl: false,
        names: BTreeMap::new(),
        cond_refs: Vec::new(),
        skill_refs: Vec::new(),
        skill_names: Vec::new(),
    };
    p.document()
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    skip_nl: bool,
    /// Condition and skill names with their declaration position.
    names: BTreeMap<String, Pos>,
    cond_refs: Vec<(Binding, Pos)>,
    skill_refs: Vec<(Binding, Pos)>,
    skill_names: Vec<(String, Pos)>,
}

fn dup(name: &str, at: Pos) -> DslError {
    DslError::DuplicateName {
        name: name.to_string(),
        line: at.0,
        column: at.1,
    }
}

fn unresolved(reference: impl ToString, at: Pos, message: impl Into<String>) -> DslError {
    DslError::Resolution {
        reference: reference.to_string(),
        line: at.0,
        column: at.1,
        message: message.into(),
    }
}

impl Parser {
    fn peek(&mut self) -> &Tok {
        if self.skip_nl {
            while self.toks[self.pos].kind == TokKind::Newline {
                self.pos += 1;
            }
        }
        &self.toks[self.pos]
    }

    fn at(&mut self) -> Pos {
        let t = self.peek();
        (t.line, t.col)
    }

    fn next(&mut self) -> Tok {
        let t = self.peek().clone();
        if t.kind != TokKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&mut self, expected: &str) -> Result<T, DslError> {
        let t = self.peek();
        Err(DslError::Parse(ParseError {
            line: t.line,
            column: t.col,
            expected: expected.to_string(),
            found: t.describe(),
        }))
    }

    fn is_sym(&mut self, c: char) -> bool {
        self.peek().kind == TokKind::Sym(c)
    }

    fn sym(&mut self, c: char) -> Result<Pos, DslError> {
        if self.is_sym(c) {
            let t = self.next();
            Ok((t.line, t.col))
        } else {
            self.fail(&format!("`{c}`"))
        }
    }

    fn is_ident(&mut self, word: &str) -> bool {
        matches!(&self.peek().kind, TokKind::Ident(s) if s == word)
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), DslError> {
        if let TokKind::Ident(s) = &self.peek().kind {
            let s = s.clone();
            let t = self.next();
            Ok((s, (t.line, t.col)))
        } else {
            self.fail(what)
        }
    }

    fn keyword(&mut self, word: &str) -> Result<Pos, DslError> {
        if self.is_ident(word) {
            let t = self.next();
            Ok((t.line, t.col))
        } else {
            self.fail(&format!("`{word}`"))
        }
    }

    fn number(&mut self, what: &str) -> Result<(f64, Pos), DslError> {
        if let TokKind::Number(s) = &self.peek().kind {
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    let t = self.next();
                    return Ok((v, (t.line, t.col)));
                }
                _ => {}
            }
        }
        self.fail(what)
    }

    fn integer(&mut self, what: &str) -> Result<(u64, Pos), DslError> {
        if let TokKind::Number(s) = &self.peek().kind {
            if let Ok(v) = s.parse::<u64>() {
                let t = self.next();
                return Ok((v, (t.line, t.col)));
            }
        }
        self.fail(what)
    }

    fn end_of_line(&mut self) -> Result<(), DslError> {
        match self.peek().kind {
            TokKind::Newline => {
                self.next();
                Ok(())
            }
            TokKind::Eof => Ok(()),
            _ => self.fail("end of line"),
        }
    }

    fn skip_newlines(&mut self) {
        while self.toks[self.pos].kind == TokKind::Newline {
            self.pos += 1;
        }
    }

    fn binding(&mut self, what: &str) -> Result<(Binding, Pos), DslError> {
        let (name, at) = self.ident(what)?;
        self.sym('(')?;
        let mut args = Vec::new();
        if !self.is_sym(')') {
            loop {
                args.push(self.ident("argument")?.0);
                if self.is_sym(',') {
                    self.next();
                } else {
                    break;
                }
            }
        }
        if !self.is_sym(')') {
            return self.fail("`,` or `)`");
        }
        self.next();
        Ok((Binding { name, args }, at))
    }

    fn binding_list(&mut self) -> Result<Vec<(Binding, Pos)>, DslError> {
        self.sym('[')?;
        let mut out = Vec::new();
        if !self.is_sym(']') {
            loop {
                out.push(self.binding("condition reference")?);
                if self.is_sym(',') {
                    self.next();
                } else {
                    break;
                }
            }
        }
        if !self.is_sym(']') {
            return self.fail("`,` or `]`");
        }
        self.next();
        Ok(out)
    }

    fn params(&mut self) -> Result<Vec<Param>, DslError> {
        self.sym('(')?;
        let mut out: Vec<Param> = Vec::new();
        if !self.is_sym(')') {
            loop {
                let (name, at) = self.ident("parameter name")?;
                if out.iter().any(|p| p.name == name) {
                    return Err(dup(&name, at));
                }
                self.sym(':')?;
                let (ty, _) = match &self.peek().kind {
                    TokKind::Ident(s) if ParamType::from_keyword(s).is_some() => {
                        let ty = ParamType::from_keyword(s).expect("checked");
                        (ty, self.next())
                    }
                    _ => return self.fail("parameter type (pose, object, station)"),
                };
                out.push(Param { name, ty });
                if self.is_sym(',') {
                    self.next();
                } else {
                    break;
                }
            }
        }
        if !self.is_sym(')') {
            return self.fail("`,` or `)`");
        }
        self.next();
        Ok(out)
    }

    fn declare(&mut self, name: &str, at: Pos) -> Result<(), DslError> {
        if self.names.contains_key(name) {
            return Err(dup(name, at));
        }
        self.names.insert(name.to_string(), at);
        Ok(())
    }

    fn document(&mut self) -> Result<Document, DslError> {
        let mut doc = Document::default();
        let mut bt_at = None;
        let mut fsm_at = None;
        loop {
            self.skip_newlines();
            let (word, at) = match &self.peek().kind {
                TokKind::Eof => break,
                TokKind::Ident(w) => (w.clone(), self.at()),
                _ => return self.fail("declaration (condition, skill, goal, scenario, bt, fsm)"),
            };
            match word.as_str() {
                "condition" => {
                    self.next();
                    let c = self.condition()?;
                    doc.conditions.push(c);
                }
                "skill" => {
                    self.next();
                    let s = self.skill()?;
                    doc.skills.push(s);
                }
                "goal" => {
                    self.next();
                    let (b, at) = self.binding("condition reference")?;
                    self.cond_refs.push((b.clone(), at));
                    doc.goal.goals.push(b);
                }
                "scenario" => {
                    self.next();
                    let s = self.scenario()?;
                    if doc.scenario(&s.name).is_some() {
                        return Err(dup(&s.name, at));
                    }
                    doc.scenarios.push(s);
                }
                "bt" => {
                    if bt_at.is_some() {
                        return Err(dup("bt", at));
                    }
                    self.next();
                    bt_at = Some(at);
                    doc.bt = Some(self.bt_block()?);
                }
                "fsm" => {
                    if fsm_at.is_some() {
                        return Err(dup("fsm", at));
                    }
                    self.next();
                    fsm_at = Some(at);
                    doc.fsm = Some(self.fsm_block()?);
                }
                _ => return self.fail("declaration (condition, skill, goal, scenario, bt, fsm)"),
            }
            self.end_of_line()?;
        }
        self.resolve(&doc)?;
        let lib = doc.library();
        if let (Some(t), Some(at)) = (&doc.bt, bt_at) {
            t.validate(Some(&lib)).map_err(|e| DslError::InvalidPolicy {
                message: e.to_string(),
                line: at.0,
                column: at.1,
            })?;
        }
        if let (Some(m), Some(at)) = (&doc.fsm, fsm_at) {
            m.validate(Some(&lib)).map_err(|e| DslError::InvalidPolicy {
                message: e.to_string(),
                line: at.0,
                column: at.1,
            })?;
        }
        Ok(doc)
    }

    fn resolve(&self, doc: &Document) -> Result<(), DslError> {
        for (b, at) in &self.cond_refs {
            let spec = doc
                .conditions
                .iter()
                .find(|c| c.name == b.name)
                .ok_or_else(|| unresolved(b, *at, "no such condition"))?;
            if spec.params.len() != b.args.len() {
                return Err(unresolved(
                    b,
                    *at,
                    format!("`{}` takes {} arguments", spec.name, spec.params.len()),
                ));
            }
        }
        for (b, at) in &self.skill_refs {
            let spec = doc
                .skills
                .iter()
                .find(|s| s.name == b.name)
                .ok_or_else(|| unresolved(b, *at, "no such skill"))?;
            if spec.params.len() != b.args.len() {
                return Err(unresolved(
                    b,
                    *at,
                    format!("`{}` takes {} arguments", spec.name, spec.params.len()),
                ));
            }
        }
        for (name, at) in &self.skill_names {
            if !doc.skills.iter().any(|s| s.name == *name) {
                return Err(unresolved(name, *at, "no such skill"));
            }
        }
        Ok(())
    }

    fn condition(&mut self) -> Result<ConditionSpec, DslError> {
        let (name, at) = self.ident("condition name")?;
        self.declare(&name, at)?;
        let params = self.params()?;
        let mut tolerance = Vec::new();
        if self.is_ident("tol") {
            self.next();
            self.sym('=')?;
            loop {
                let (v, _) = self.number("positive number")?;
                if v <= 0.0 {
                    self.pos -= 1;
                    return self.fail("positive number");
                }
                tolerance.push(v);
                if self.is_sym(',') {
                    self.next();
                } else {
                    break;
                }
            }
        }
        Ok(ConditionSpec { name, params, tolerance })
    }

    fn skill(&mut self) -> Result<SkillSpec, DslError> {
        let (name, at) = self.ident("skill name")?;
        self.declare(&name, at)?;
        let params = self.params()?;
        let (mut pre, mut post, mut duration) = (None, None, None);
        while let TokKind::Ident(key) = &self.peek().kind {
            let key = key.clone();
            let key_at = self.at();
            let slot_taken = match key.as_str() {
                "pre" => pre.is_some(),
                "post" => post.is_some(),
                "duration" => duration.is_some(),
                _ => return self.fail("`pre`, `post` or `duration`"),
            };
            if slot_taken {
                return Err(dup(&key, key_at));
            }
            self.next();
            self.sym('=')?;
            match key.as_str() {
                "pre" | "post" => {
                    let list = self.binding_list()?;
                    self.cond_refs.extend(list.iter().cloned());
                    let list: Vec<Binding> = list.into_iter().map(|(b, _)| b).collect();
                    if key == "pre" {
                        pre = Some(list);
                    } else {
                        post = Some(list);
                    }
                }
                _ => {
                    let (d, _) = self.integer("duration in steps")?;
                    if d == 0 || d > u64::from(u32::MAX) {
                        self.pos -= 1;
                        return self.fail("duration of at least 1 step");
                    }
                    duration = Some(d as u32);
                }
            }
        }
        let Some(duration) = duration else {
            return self.fail("`duration`");
        };
        Ok(SkillSpec {
            name,
            params,
            pre: pre.unwrap_or_default(),
            post: post.unwrap_or_default(),
            duration,
        })
    }

    fn triple(&mut self, kw: &str) -> Result<[f64; 3], DslError> {
        self.keyword(kw)?;
        self.sym('(')?;
        let mut v = [0.0; 3];
        for (i, slot) in v.iter_mut().enumerate() {
            if i > 0 {
                self.sym(',')?;
            }
            *slot = self.number("number")?.0;
        }
        self.sym(')')?;
        Ok(v)
    }

    fn scenario(&mut self) -> Result<ScenarioScript, DslError> {
        let name = if let TokKind::Ident(_) = self.peek().kind {
            self.ident("scenario name")?.0
        } else {
            "default".to_string()
        };
        self.sym('{')?;
        let mut scene = Scene::default();
        let mut station_refs: Vec<(String, Pos)> = Vec::new();
        let mut object_refs: Vec<(String, Pos)> = Vec::new();
        let mut events = Vec::new();
        loop {
            self.skip_newlines();
            if self.is_sym('}') {
                self.next();
                break;
            }
            let (word, at) = self.ident("scenario statement (robot, battery, drain, station, object, at)")?;
            match word.as_str() {
                "robot" => {
                    let [x, y, yaw] = self.triple("pose")?;
                    scene.robot = Pose { x, y, yaw };
                }
                "battery" => {
                    let (v, _) = self.number("battery level")?;
                    if !(0.0..=100.0).contains(&v) {
                        self.pos -= 1;
                        return self.fail("battery level between 0 and 100");
                    }
                    scene.battery = v;
                }
                "drain" => {
                    let (v, _) = self.number("drain rate")?;
                    if v < 0.0 {
                        self.pos -= 1;
                        return self.fail("non-negative drain rate");
                    }
                    scene.drain = v;
                }
                "station" => {
                    let (s, sat) = self.ident("station name")?;
                    if scene.stations.contains_key(&s) {
                        return Err(dup(&s, sat));
                    }
                    let [x, y, yaw] = self.triple("pose")?;
                    let surface = self.triple("surface")?;
                    scene.stations.insert(
                        s,
                        Station {
                            pose: Pose { x, y, yaw },
                            surface,
                        },
                    );
                }
                "object" => {
                    let (o, oat) = self.ident("object name")?;
                    if scene.objects.iter().any(|(n, _)| *n == o) {
                        return Err(dup(&o, oat));
                    }
                    self.keyword("at")?;
                    let (s, sat) = self.ident("station name")?;
                    station_refs.push((s.clone(), sat));
                    scene.objects.push((o, s));
                }
                "at" => {
                    let (step, _) = self.integer("step number")?;
                    self.sym(':')?;
                    let (ev, eat) = self.ident("event (inject_failure, move_object, set_battery, drain_rate)")?;
                    self.sym('(')?;
                    let event = match ev.as_str() {
                        "inject_failure" => {
                            let (skill, sat) = self.ident("skill name")?;
                            self.skill_names.push((skill.clone(), sat));
                            self.sym(',')?;
                            let (n, _) = self.integer("attempt number")?;
                            if n == 0 || n > u64::from(u32::MAX) {
                                self.pos -= 1;
                                return self.fail("attempt number of at least 1");
                            }
                            Event::InjectFailure {
                                skill,
                                attempt: n as u32,
                            }
                        }
                        "move_object" => {
                            let (object, oat) = self.ident("object name")?;
                            object_refs.push((object.clone(), oat));
                            self.sym(',')?;
                            let (station, sat) = self.ident("station name")?;
                            station_refs.push((station.clone(), sat));
                            Event::MoveObject { object, station }
                        }
                        "set_battery" => {
                            let (level, _) = self.number("battery level")?;
                            if !(0.0..=100.0).contains(&level) {
                                self.pos -= 1;
                                return self.fail("battery level between 0 and 100");
                            }
                            Event::SetBattery { level }
                        }
                        "drain_rate" => {
                            let (per_step, _) = self.number("drain rate")?;
                            if per_step < 0.0 {
                                self.pos -= 1;
                                return self.fail("non-negative drain rate");
                            }
                            Event::DrainRate { per_step }
                        }
                        _ => {
                            return Err(DslError::Parse(ParseError {
                                line: eat.0,
                                column: eat.1,
                                expected: "event (inject_failure, move_object, set_battery, drain_rate)".into(),
                                found: format!("`{ev}`"),
                            }))
                        }
                    };
                    self.sym(')')?;
                    events.push((step, event));
                }
                _ => {
                    return Err(DslError::Parse(ParseError {
                        line: at.0,
                        column: at.1,
                        expected: "scenario statement (robot, battery, drain, station, object, at)".into(),
                        found: format!("`{word}`"),
                    }))
                }
            }
            if !self.is_sym('}') {
                self.end_of_line()?;
            }
        }
        for (s, at) in station_refs {
            if !scene.stations.contains_key(&s) {
                return Err(unresolved(&s, at, "no such station in this scenario"));
            }
        }
        for (o, at) in object_refs {
            if !scene.objects.iter().any(|(n, _)| *n == o) {
                return Err(unresolved(&o, at, "no such object in this scenario"));
            }
        }
        Ok(ScenarioScript::new(name, scene, events))
    }

    fn bt_block(&mut self) -> Result<PolicyTree, DslError> {
        self.sym('{')?;
        self.skip_nl = true;
        let tree = self.bt_node()?;
        self.sym('}')?;
        self.skip_nl = false;
        Ok(tree)
    }

    fn bt_node(&mut self) -> Result<PolicyTree, DslError> {
        if self.is_sym('(') {
            self.next();
            let (word, at) = self.ident("`sequence` or `fallback`")?;
            let kind = match word.as_str() {
                "sequence" => NodeKind::Sequence,
                "fallback" => NodeKind::Fallback,
                _ => {
                    return Err(DslError::Parse(ParseError {
                        line: at.0,
                        column: at.1,
                        expected: "`sequence` or `fallback`".into(),
                        found: format!("`{word}`"),
                    }))
                }
            };
            let mut children = Vec::new();
            while !self.is_sym(')') {
                if matches!(self.peek().kind, TokKind::Eof | TokKind::Sym('}')) {
                    return self.fail("child node or `)`");
                }
                children.push(self.bt_node()?);
            }
            if children.is_empty() {
                return self.fail("child node");
            }
            self.next();
            Ok(PolicyTree::control(kind, children).expect("non-empty"))
        } else if let TokKind::Ident(_) = self.peek().kind {
            let (b, at) = self.binding("leaf")?;
            if self.is_sym('?') {
                self.next();
                self.cond_refs.push((b.clone(), at));
                Ok(PolicyTree::condition(b))
            } else if self.is_sym('!') {
                self.next();
                self.skill_refs.push((b.clone(), at));
                Ok(PolicyTree::action(b))
            } else {
                self.fail("`?` or `!`")
            }
        } else {
            self.fail("`(` or leaf")
        }
    }

    fn guard(&mut self) -> Result<Guard, DslError> {
        if self.is_ident("true") {
            self.next();
            return Ok(Vec::new());
        }
        let mut g = Vec::new();
        loop {
            let positive = if self.is_sym('!') {
                self.next();
                false
            } else {
                true
            };
            let (b, at) = self.binding("condition reference")?;
            self.cond_refs.push((b.clone(), at));
            g.push(Literal { cond: b, positive });
            if self.is_sym(',') {
                self.next();
            } else {
                return Ok(g);
            }
        }
    }

    fn fsm_block(&mut self) -> Result<StateMachine, DslError> {
        let open = self.sym('{')?;
        self.skip_nl = true;
        let mut initial: Option<(String, Pos)> = None;
        let mut idle: Option<(String, Pos)> = None;
        let mut terminals: Vec<String> = Vec::new();
        let mut states: IndexMap<String, State> = IndexMap::new();
        let mut targets: Vec<(String, Pos)> = Vec::new();
        loop {
            if self.is_sym('}') {
                self.next();
                break;
            }
            let (word, at) = self.ident("state machine statement (initial, idle, terminal, state, when, on)")?;
            match word.as_str() {
                "initial" | "idle" => {
                    let slot = if word == "initial" { &initial } else { &idle };
                    if slot.is_some() {
                        return Err(dup(&word, at));
                    }
                    let v = Some(self.ident("state id")?);
                    if word == "initial" {
                        initial = v;
                    } else {
                        idle = v;
                    }
                }
                "terminal" => {
                    let (t, tat) = self.ident("terminal name")?;
                    if terminals.contains(&t) || states.contains_key(&t) {
                        return Err(dup(&t, tat));
                    }
                    terminals.push(t);
                }
                "state" => {
                    let (id, sat) = self.ident("state id")?;
                    if terminals.contains(&id) || states.contains_key(&id) {
                        return Err(dup(&id, sat));
                    }
                    let mut state = State::dispatcher(id.clone());
                    if self.is_sym(':') {
                        self.next();
                        let (b, bat) = self.binding("skill reference")?;
                        self.skill_refs.push((b.clone(), bat));
                        state.binding = Some(b);
                    }
                    if self.is_ident("post") {
                        self.next();
                        self.sym('=')?;
                        let list = self.binding_list()?;
                        self.cond_refs.extend(list.iter().cloned());
                        state.post = list.into_iter().map(|(b, _)| b).collect();
                    }
                    states.insert(id, state);
                }
                "when" => {
                    if states.is_empty() {
                        return Err(DslError::Parse(ParseError {
                            line: at.0,
                            column: at.1,
                            expected: "`state` before `when`".into(),
                            found: "`when`".into(),
                        }));
                    }
                    let g = self.guard()?;
                    if !matches!(self.peek().kind, TokKind::FatArrow) {
                        return self.fail("`=>`");
                    }
                    self.next();
                    let (o, _) = self.ident("outcome")?;
                    states.last_mut().expect("checked").1.guards.push((g, Outcome::parse(&o)));
                }
                "on" => {
                    if states.is_empty() {
                        return Err(DslError::Parse(ParseError {
                            line: at.0,
                            column: at.1,
                            expected: "`state` before `on`".into(),
                            found: "`on`".into(),
                        }));
                    }
                    let (o, oat) = self.ident("outcome")?;
                    if !matches!(self.peek().kind, TokKind::Arrow) {
                        return self.fail("`->`");
                    }
                    self.next();
                    let (t, tat) = self.ident("target")?;
                    let state = states.last_mut().expect("checked").1;
                    let o = Outcome::parse(&o);
                    if state.transitions.contains_key(&o) {
                        return Err(dup(&o.to_string(), oat));
                    }
                    targets.push((t.clone(), tat));
                    // Resolved to State or Terminal below.
                    state.transitions.insert(o, Target::State(t));
                }
                _ => {
                    return Err(DslError::Parse(ParseError {
                        line: at.0,
                        column: at.1,
                        expected: "state machine statement (initial, idle, terminal, state, when, on)".into(),
                        found: format!("`{word}`"),
                    }))
                }
            }
            self.sym(';')?;
        }
        self.skip_nl = false;
        for (t, at) in &targets {
            if !terminals.contains(t) && !states.contains_key(t) {
                return Err(unresolved(t, *at, "no such state or terminal"));
            }
        }
        for s in states.values_mut() {
            for t in s.transitions.values_mut() {
                if terminals.contains(&t.name().to_string()) {
                    *t = Target::Terminal(t.name().to_string());
                }
            }
        }
        let Some((initial, iat)) = initial else {
            return Err(DslError::Parse(ParseError {
                line: open.0,
                column: open.1,
                expected: "`initial` statement in state machine".into(),
                found: "none".into(),
            }));
        };
        for (s, at) in std::iter::once((&initial, iat)).chain(idle.iter().map(|(i, a)| (i, *a))) {
            if !states.contains_key(s) {
                return Err(unresolved(s, at, "no such state"));
            }
        }
        let mut sm = StateMachine::new(initial, idle.map(|(i, _)| i), terminals);
        for s in states.into_values() {
            sm.add_state(s).expect("ids checked");
        }
        Ok(sm)
    }
}
