use std::fmt::Write;

use super::Document;
use crate::bt::{NodeHandle, NodeKind, PolicyTree};
use crate::fsm::{StateMachine, Target};
use crate::model::{Binding, Param};
use crate::sim::{Event, ScenarioScript};

/// Canonical text of a document. `parse(&serialize(d)) == d` for every
/// document `parse` accepts.
pub fn serialize(doc: &Document) -> String {
    let mut sections: Vec<String> = Vec::new();
    let mut lines = String::new();
    for c in &doc.conditions {
        write!(lines, "condition {}({})", c.name, params(&c.params)).unwrap();
        if !c.tolerance.is_empty() {
            let t: Vec<String> = c.tolerance.iter().map(|v| v.to_string()).collect();
            write!(lines, " tol={}", t.join(",")).unwrap();
        }
        lines.push('\n');
    }
    push_section(&mut sections, &mut lines);
    for s in &doc.skills {
        writeln!(
            lines,
            "skill {}({}) pre=[{}] post=[{}] duration={}",
            s.name,
            params(&s.params),
            list(&s.pre),
            list(&s.post),
            s.duration
        )
        .unwrap();
    }
    push_section(&mut sections, &mut lines);
    for g in &doc.goal.goals {
        writeln!(lines, "goal {g}").unwrap();
    }
    push_section(&mut sections, &mut lines);
    for s in &doc.scenarios {
        sections.push(scenario(s));
    }
    if let Some(t) = &doc.bt {
        sections.push(format!("bt {{\n{}}}\n", indent(&write_tree(t), "  ")));
    }
    if let Some(m) = &doc.fsm {
        sections.push(format!("fsm {{\n{}}}\n", indent(&write_fsm(m), "  ")));
    }
    sections.join("\n")
}

fn push_section(sections: &mut Vec<String>, lines: &mut String) {
    if !lines.is_empty() {
        sections.push(std::mem::take(lines));
    }
}

fn indent(text: &str, pad: &str) -> String {
    text.lines().map(|l| format!("{pad}{l}\n")).collect()
}

fn params(ps: &[Param]) -> String {
    ps.iter()
        .map(|p| format!("{}: {}", p.name, p.ty.keyword()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn list(bs: &[Binding]) -> String {
    bs.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(", ")
}

fn scenario(s: &ScenarioScript) -> String {
    let sc = &s.scene;
    let mut out = format!("scenario {} {{\n", s.name);
    writeln!(out, "  robot pose({}, {}, {})", sc.robot.x, sc.robot.y, sc.robot.yaw).unwrap();
    writeln!(out, "  battery {}", sc.battery).unwrap();
    writeln!(out, "  drain {}", sc.drain).unwrap();
    for (name, st) in &sc.stations {
        writeln!(
            out,
            "  station {name} pose({}, {}, {}) surface({}, {}, {})",
            st.pose.x, st.pose.y, st.pose.yaw, st.surface[0], st.surface[1], st.surface[2]
        )
        .unwrap();
    }
    for (o, st) in &sc.objects {
        writeln!(out, "  object {o} at {st}").unwrap();
    }
    for (step, ev) in &s.events {
        let e = match ev {
            Event::InjectFailure { skill, attempt } => format!("inject_failure({skill}, {attempt})"),
            Event::MoveObject { object, station } => format!("move_object({object}, {station})"),
            Event::SetBattery { level } => format!("set_battery({level})"),
            Event::DrainRate { per_step } => format!("drain_rate({per_step})"),
        };
        writeln!(out, "  at {step}: {e}").unwrap();
    }
    out.push_str("}\n");
    out
}

/// The tree as an s-expression, one node per line.
pub fn write_tree(t: &PolicyTree) -> String {
    let mut out = String::new();
    node(t, t.root(), 0, &mut out);
    out.push('\n');
    out
}

fn node(t: &PolicyTree, h: NodeHandle, depth: usize, out: &mut String) {
    let n = t.node(h).expect("live handle");
    let pad = "  ".repeat(depth);
    match n.kind {
        NodeKind::Sequence | NodeKind::Fallback => {
            write!(out, "{pad}({}", n.label()).unwrap();
            for &c in t.children(h) {
                out.push('\n');
                node(t, c, depth + 1, out);
            }
            out.push(')');
        }
        NodeKind::Condition | NodeKind::Action => write!(out, "{pad}{}", n.label()).unwrap(),
    }
}

/// The statements of an `fsm` block, without the braces.
pub fn write_fsm(m: &StateMachine) -> String {
    let mut out = String::new();
    writeln!(out, "initial {};", m.initial()).unwrap();
    if let Some(i) = m.idle() {
        writeln!(out, "idle {i};").unwrap();
    }
    for t in m.terminals() {
        writeln!(out, "terminal {t};").unwrap();
    }
    for s in m.states() {
        write!(out, "state {}", s.id).unwrap();
        if let Some(b) = &s.binding {
            write!(out, ": {b}").unwrap();
        }
        if !s.post.is_empty() {
            write!(out, " post=[{}]", list(&s.post)).unwrap();
        }
        out.push_str(";\n");
        for (g, o) in &s.guards {
            let g = if g.is_empty() {
                "true".to_string()
            } else {
                g.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
            };
            writeln!(out, "  when {g} => {o};").unwrap();
        }
        for (o, t) in &s.transitions {
            let name = match t {
                Target::State(s) | Target::Terminal(s) => s,
            };
            writeln!(out, "  on {o} -> {name};").unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn empty_document_is_empty_text() {
        assert_eq!(serialize(&Document::default()), "");
    }

    #[test]
    fn round_trip_small_document() {
        let text = "\
condition a(x: object) tol=0.5
condition b()
skill s(x: object) pre=[b()] post=[a(x)] duration=2
skill t() post=[b()] duration=1
goal a(cube)
bt {
  (fallback a(cube)? (sequence (fallback b()? t()!) s(cube)!))
}
";
        let d = parse(text).unwrap();
        let s = serialize(&d);
        assert_eq!(parse(&s).unwrap(), d);
        assert_eq!(serialize(&parse(&s).unwrap()), s);
    }
}
