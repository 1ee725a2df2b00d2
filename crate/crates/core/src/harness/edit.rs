use std::fmt;
use std::str::FromStr;

use super::{HarnessError, Policy};
use crate::bt::{NodeHandle, NodeKind, PolicyTree};
use crate::dsl::{self, Document};
use crate::fsm::{StateMachine, Target};
use crate::model::{Binding, GoalSpec, Library, Literal};
use crate::receipt::EditReceipt;
use crate::synthesis::{self, SUCCESS};

/// A scripted structural change, applicable to either representation.
///
/// Text forms (used by the CLI):
///
/// ```text
/// add-recharge
/// add-dock
/// remove:<skill>
/// insert-subtree:<parent handle>:<index>:<s-expression>     (trees only)
/// insert-state:<id>:<skill(args)>:<preceding state>         (machines only)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub enum EditScript {
    /// Keep the battery charged: a recharge branch ahead of everything in a
    /// tree, a state reachable from every state in a machine.
    AddRecharge,
    /// Finish at the inspection station: a dock branch after everything in a
    /// tree, a state before the success terminal in a machine.
    AddDock,
    /// Drop the branch (tree) or state (machine) that runs this skill.
    Remove(String),
    InsertSubtree {
        parent: NodeHandle,
        index: usize,
        sexpr: String,
    },
    InsertState {
        id: String,
        call: Binding,
        after: String,
    },
}

impl fmt::Display for EditScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditScript::AddRecharge => f.write_str("add-recharge"),
            EditScript::AddDock => f.write_str("add-dock"),
            EditScript::Remove(s) => write!(f, "remove:{s}"),
            EditScript::InsertSubtree { parent, index, sexpr } => {
                write!(f, "insert-subtree:{parent}:{index}:{sexpr}")
            }
            EditScript::InsertState { id, call, after } => write!(f, "insert-state:{id}:{call}:{after}"),
        }
    }
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Edit(msg.into())
}

/// `name(a, b)` or `name()`.
fn parse_call(text: &str) -> Result<Binding, HarnessError> {
    let text = text.trim();
    let (name, rest) = text
        .split_once('(')
        .ok_or_else(|| bad(format!("`{text}` is not a call")))?;
    let inner = rest
        .strip_suffix(')')
        .ok_or_else(|| bad(format!("`{text}` is missing `)`")))?;
    let args: Vec<String> = inner
        .split(',')
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(str::to_string)
        .collect();
    Ok(Binding {
        name: name.trim().to_string(),
        args,
    })
}

impl FromStr for EditScript {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "add-recharge" => return Ok(EditScript::AddRecharge),
            "add-dock" => return Ok(EditScript::AddDock),
            _ => {}
        }
        let (head, rest) = s.split_once(':').ok_or_else(|| bad(format!("unknown edit `{s}`")))?;
        match head {
            "remove" if !rest.is_empty() => Ok(EditScript::Remove(rest.to_string())),
            "insert-subtree" => {
                let mut parts = rest.splitn(3, ':');
                let (Some(p), Some(i), Some(x)) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(bad("insert-subtree needs <parent>:<index>:<s-expression>"));
                };
                let n: u32 = p
                    .trim()
                    .trim_start_matches('n')
                    .parse()
                    .map_err(|_| bad(format!("bad node handle `{p}`")))?;
                let index = i.trim().parse().map_err(|_| bad(format!("bad index `{i}`")))?;
                Ok(EditScript::InsertSubtree {
                    parent: NodeHandle(n),
                    index,
                    sexpr: x.to_string(),
                })
            }
            "insert-state" => {
                let mut parts = rest.splitn(3, ':');
                let (Some(id), Some(c), Some(a)) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(bad("insert-state needs <id>:<skill(args)>:<preceding>"));
                };
                Ok(EditScript::InsertState {
                    id: id.trim().to_string(),
                    call: parse_call(c)?,
                    after: a.trim().to_string(),
                })
            }
            _ => Err(bad(format!("unknown edit `{s}`"))),
        }
    }
}

/// The single-call skill with this name and no arguments, plus what it
/// achieves.
fn fixed_skill(library: &Library, name: &str) -> Result<(Binding, Vec<Binding>), HarnessError> {
    let spec = library
        .skill(name)
        .ok_or_else(|| bad(format!("the library has no `{name}` skill")))?;
    if !spec.params.is_empty() {
        return Err(bad(format!("`{name}` must take no arguments")));
    }
    let call = Binding::new(name, &[]);
    let post = library.post_of(&call);
    if post.is_empty() {
        return Err(bad(format!("`{name}` has no postconditions")));
    }
    Ok((call, post))
}

fn branch_for(library: &Library, post: Vec<Binding>) -> Result<PolicyTree, HarnessError> {
    Ok(synthesis::backchain(&GoalSpec { goals: post }, library)?)
}

fn ensure_sequence_root(tree: &mut PolicyTree) -> Result<EditReceipt, HarnessError> {
    let root = tree.node(tree.root()).expect("live root");
    if root.kind == NodeKind::Sequence {
        Ok(EditReceipt::default())
    } else {
        Ok(tree.wrap_root(NodeKind::Sequence)?)
    }
}

/// Apply `script` to `policy` in place. `doc` supplies the library and,
/// for subtree insertion, the context the s-expression is parsed in.
pub fn apply_edit(policy: &mut Policy, script: &EditScript, doc: &Document) -> Result<EditReceipt, HarnessError> {
    let library = doc.library();
    match policy {
        Policy::Bt(tree) => edit_tree(tree, script, doc, &library),
        Policy::Fsm(sm) => edit_machine(sm, script, &library),
    }
}

fn edit_tree(
    tree: &mut PolicyTree,
    script: &EditScript,
    doc: &Document,
    library: &Library,
) -> Result<EditReceipt, HarnessError> {
    match script {
        EditScript::AddRecharge | EditScript::AddDock => {
            let name = if *script == EditScript::AddRecharge { "recharge" } else { "dock" };
            let (_, post) = fixed_skill(library, name)?;
            let branch = branch_for(library, post)?;
            let mut receipt = ensure_sequence_root(tree)?;
            let root = tree.root();
            let index = if *script == EditScript::AddRecharge {
                0
            } else {
                tree.children(root).len()
            };
            let (_, r) = tree.insert_subtree(root, index, &branch)?;
            receipt += r;
            Ok(receipt)
        }
        EditScript::Remove(name) => {
            let action = tree
                .find(|n| n.kind == NodeKind::Action && n.binding.as_ref().is_some_and(|b| b.name == *name))
                .ok_or_else(|| bad(format!("no action `{name}` in the tree")))?;
            let mut branch = action;
            while tree.node(branch).expect("live").kind != NodeKind::Fallback {
                branch = tree
                    .parent(branch)
                    .ok_or_else(|| bad(format!("`{name}` is not under a fallback")))?;
            }
            let mut receipt = tree.remove_subtree(branch)?.receipt;
            let root = tree.root();
            if tree.node(root).expect("live root").kind.is_control() && tree.children(root).len() == 1 {
                receipt += tree.unwrap_root()?;
            }
            Ok(receipt)
        }
        EditScript::InsertSubtree { parent, index, sexpr } => {
            let context = Document {
                conditions: doc.conditions.clone(),
                skills: doc.skills.clone(),
                ..Document::default()
            };
            let text = format!("{}\nbt {{\n{sexpr}\n}}\n", dsl::serialize(&context));
            let subtree = dsl::parse(&text)?.bt.expect("bt block parsed");
            Ok(tree.insert_subtree(*parent, *index, &subtree)?.1)
        }
        EditScript::InsertState { .. } => Err(bad("insert-state applies to state machines")),
    }
}

fn edit_machine(sm: &mut StateMachine, script: &EditScript, library: &Library) -> Result<EditReceipt, HarnessError> {
    match script {
        EditScript::AddRecharge => {
            let (call, post) = fixed_skill(library, "recharge")?;
            let guard: Vec<Literal> = post.into_iter().map(Literal::fails).collect();
            let state = synthesis::state_for(library, "recharge", call);
            Ok(sm.add_connected_state(state, guard.clone(), guard)?)
        }
        EditScript::AddDock => {
            let (call, _) = fixed_skill(library, "dock")?;
            let end = Target::Terminal(SUCCESS.into());
            let preceding = sm
                .predecessor_on_success(&end)
                .ok_or_else(|| bad("no state leads to the success terminal"))?
                .to_string();
            let state = synthesis::state_for(library, "dock", call);
            Ok(sm.add_sequential_state(state, &preceding, end)?)
        }
        EditScript::Remove(name) => {
            let id = sm
                .states()
                .find(|s| s.id == *name || s.binding.as_ref().is_some_and(|b| b.name == *name))
                .map(|s| s.id.clone())
                .ok_or_else(|| bad(format!("no state `{name}` in the machine")))?;
            Ok(sm.remove_state(&id)?)
        }
        EditScript::InsertState { id, call, after } => {
            let spec = library
                .skill(&call.name)
                .ok_or_else(|| bad(format!("the library has no `{}` skill", call.name)))?;
            if spec.params.len() != call.args.len() {
                return Err(bad(format!("`{}` takes {} arguments", call.name, spec.params.len())));
            }
            let following = sm
                .state(after)
                .and_then(|s| s.transitions.get(&crate::fsm::Outcome::Success).cloned())
                .ok_or_else(|| bad(format!("no state `{after}` with a Success transition")))?;
            let state = synthesis::state_for(library, id, call.clone());
            Ok(sm.add_sequential_state(state, after, following)?)
        }
        EditScript::InsertSubtree { .. } => Err(bad("insert-subtree applies to trees")),
    }
}
