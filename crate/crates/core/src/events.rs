//! Event spaces: basic events bound to handlers, composite events built by
//! ordinal (non-commutative) addition and scalar multiplication, expansion to
//! basic events, event-base verification and ordered execution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::project::CashFlowTable;
use crate::status::{finite, CalcError, CalcResult, Status};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EventId(String);

impl EventId {
    pub fn new(name: impl Into<String>) -> CalcResult<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(CalcError::syntax(format!(
                "event name `{name}` must be non-empty and contain no whitespace"
            )));
        }
        Ok(EventId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for EventId {
    type Error = CalcError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        EventId::new(value)
    }
}

impl From<EventId> for String {
    fn from(id: EventId) -> Self {
        id.0
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl PartialEq<&str> for EventId {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// Mutable state threaded through the basic events of one execution.
pub struct ExecContext<'a> {
    pub table: &'a CashFlowTable,
    /// The appointed field, if the event being run works on one.
    pub field: Option<String>,
    /// Values produced by the most recent selection.
    pub selection: Vec<f64>,
    pub bindings: BTreeMap<String, f64>,
    pub accumulator: f64,
}

impl<'a> ExecContext<'a> {
    pub fn new(table: &'a CashFlowTable) -> Self {
        ExecContext {
            table,
            field: None,
            selection: Vec::new(),
            bindings: BTreeMap::new(),
            accumulator: 0.0,
        }
    }

    pub fn with_field(mut self, name: impl Into<String>) -> Self {
        self.field = Some(name.into());
        self
    }

    /// Reads a binding written by an earlier event.
    pub fn binding(&self, name: &str) -> CalcResult {
        self.bindings.get(name).copied().ok_or_else(|| {
            CalcError::unknown_symbol(format!("binding `{name}` was not set by an earlier event"))
        })
    }
}

pub type Handler = Arc<dyn Fn(&mut ExecContext<'_>) -> CalcResult<()> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SpaceId(u64);

impl SpaceId {
    fn fresh() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(1);
        SpaceId(NEXT.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Atom(EventId),
    /// Ordinal sum; order is execution order.
    Seq(Vec<Node>),
    Scaled(u32, Box<Node>),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Atom(id) => write!(f, "{id}"),
            Node::Seq(parts) => {
                f.write_str("(")?;
                for (i, part) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{part}")?;
                }
                f.write_str(")")
            }
            Node::Scaled(k, body) => write!(f, "{k}·{body}"),
        }
    }
}

/// An event expression tied to the space it was created in.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    space: SpaceId,
    node: Node,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.node)
    }
}

/// Ordinal sum `a + b`: runs `a`, then `b`. Never commutes its operands.
pub fn seq(a: &Event, b: &Event) -> CalcResult<Event> {
    if a.space != b.space {
        return Err(CalcError::new(
            Status::CrossSpace,
            format!("cannot add `{a}` and `{b}`: they belong to different event spaces"),
        ));
    }
    Ok(Event {
        space: a.space,
        node: Node::Seq(vec![a.node.clone(), b.node.clone()]),
    })
}

/// `k·e`: `e` repeated `k` times. `0·e` is the empty event.
pub fn scalar_mul(k: u32, e: &Event) -> Event {
    Event {
        space: e.space,
        node: Node::Scaled(k, Box::new(e.node.clone())),
    }
}

/// Candidate event base: a set of event names drawn from one space.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventBase {
    pub members: BTreeSet<EventId>,
}

impl EventBase {
    pub fn new<I, S>(names: I) -> CalcResult<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let members = names
            .into_iter()
            .map(EventId::new)
            .collect::<CalcResult<BTreeSet<_>>>()?;
        Ok(EventBase { members })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BaseReport {
    /// Events of the space not expressible over the candidate members.
    pub incomplete: Vec<EventId>,
    /// Members expressible by the other members.
    pub dependent: Vec<EventId>,
}

impl BaseReport {
    pub fn is_complete(&self) -> bool {
        self.incomplete.is_empty()
    }

    pub fn is_independent(&self) -> bool {
        self.dependent.is_empty()
    }

    pub fn is_base(&self) -> bool {
        self.is_complete() && self.is_independent()
    }
}

/// The set of events of one application domain.
pub struct EventSpace {
    id: SpaceId,
    basics: BTreeMap<EventId, Handler>,
    composites: BTreeMap<EventId, Node>,
}

impl Default for EventSpace {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for EventSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventSpace")
            .field("basics", &self.basics.keys().collect::<Vec<_>>())
            .field("composites", &self.composites)
            .finish()
    }
}

impl EventSpace {
    pub fn new() -> Self {
        EventSpace {
            id: SpaceId::fresh(),
            basics: BTreeMap::new(),
            composites: BTreeMap::new(),
        }
    }

    fn claim(&self, name: &str) -> CalcResult<EventId> {
        let id = EventId::new(name)?;
        if self.basics.contains_key(&id) || self.composites.contains_key(&id) {
            return Err(CalcError::new(
                Status::DuplicateName,
                format!("event `{id}` is already defined"),
            ));
        }
        Ok(id)
    }

    pub fn define_basic<F>(&mut self, name: &str, handler: F) -> CalcResult<Event>
    where
        F: Fn(&mut ExecContext<'_>) -> CalcResult<()> + Send + Sync + 'static,
    {
        let id = self.claim(name)?;
        self.basics.insert(id.clone(), Arc::new(handler));
        Ok(self.atom_of(id))
    }

    /// Names `definition` as a composite event. The definition may refer to
    /// events defined later; dangling or cyclic references surface on expansion.
    pub fn define_composite(&mut self, name: &str, definition: &Event) -> CalcResult<Event> {
        self.check_owned(definition)?;
        let id = self.claim(name)?;
        self.composites.insert(id.clone(), definition.node.clone());
        Ok(self.atom_of(id))
    }

    fn atom_of(&self, id: EventId) -> Event {
        Event {
            space: self.id,
            node: Node::Atom(id),
        }
    }

    /// Reference to a defined event.
    pub fn event(&self, name: &str) -> CalcResult<Event> {
        let id = EventId::new(name)?;
        if !self.contains(&id) {
            return Err(CalcError::unknown_event(format!("event `{id}` is not defined")));
        }
        Ok(self.atom_of(id))
    }

    /// Reference by name without checking that it is defined yet.
    pub fn forward_ref(&self, name: &str) -> CalcResult<Event> {
        Ok(self.atom_of(EventId::new(name)?))
    }

    pub fn contains(&self, id: &EventId) -> bool {
        self.basics.contains_key(id) || self.composites.contains_key(id)
    }

    pub fn is_basic(&self, id: &EventId) -> bool {
        self.basics.contains_key(id)
    }

    pub fn basics(&self) -> impl Iterator<Item = &EventId> {
        self.basics.keys()
    }

    pub fn composites(&self) -> impl Iterator<Item = &EventId> {
        self.composites.keys()
    }

    /// The base made of every basic event of the space.
    pub fn declared_base(&self) -> EventBase {
        EventBase {
            members: self.basics.keys().cloned().collect(),
        }
    }

    fn check_owned(&self, e: &Event) -> CalcResult<()> {
        if e.space != self.id {
            return Err(CalcError::new(
                Status::CrossSpace,
                format!("event `{e}` belongs to a different event space"),
            ));
        }
        Ok(())
    }

    /// Flattens `e` into the ordered sequence of basic events it runs.
    pub fn expand(&self, e: &Event) -> CalcResult<Vec<EventId>> {
        self.check_owned(e)?;
        let mut out = Vec::new();
        self.expand_node(&e.node, &mut Vec::new(), &mut out)?;
        Ok(out)
    }

    fn expand_node(
        &self,
        node: &Node,
        visiting: &mut Vec<EventId>,
        out: &mut Vec<EventId>,
    ) -> CalcResult<()> {
        match node {
            Node::Atom(id) => {
                if self.basics.contains_key(id) {
                    out.push(id.clone());
                    return Ok(());
                }
                let definition = self
                    .composites
                    .get(id)
                    .ok_or_else(|| CalcError::unknown_event(format!("event `{id}` is not defined")))?;
                if visiting.contains(id) {
                    return Err(cycle_error(visiting, id));
                }
                visiting.push(id.clone());
                self.expand_node(definition, visiting, out)?;
                visiting.pop();
            }
            Node::Seq(parts) => {
                for part in parts {
                    self.expand_node(part, visiting, out)?;
                }
            }
            Node::Scaled(k, body) => {
                let mut once = Vec::new();
                self.expand_node(body, visiting, &mut once)?;
                for _ in 0..*k {
                    out.extend_from_slice(&once);
                }
            }
        }
        Ok(())
    }

    /// Whether `node` can be written using only events in `stop`, descending
    /// through composite definitions that are not themselves in `stop`.
    fn expressible(
        &self,
        node: &Node,
        stop: &BTreeSet<EventId>,
        visiting: &mut Vec<EventId>,
    ) -> CalcResult<bool> {
        match node {
            Node::Atom(id) => {
                if stop.contains(id) {
                    return Ok(true);
                }
                if self.basics.contains_key(id) {
                    return Ok(false);
                }
                let definition = self
                    .composites
                    .get(id)
                    .ok_or_else(|| CalcError::unknown_event(format!("event `{id}` is not defined")))?;
                if visiting.contains(id) {
                    return Err(cycle_error(visiting, id));
                }
                visiting.push(id.clone());
                let ok = self.expressible(definition, stop, visiting)?;
                visiting.pop();
                Ok(ok)
            }
            Node::Seq(parts) => {
                for part in parts {
                    if !self.expressible(part, stop, visiting)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Node::Scaled(0, _) => Ok(true),
            Node::Scaled(_, body) => self.expressible(body, stop, visiting),
        }
    }

    /// Checks that `candidate` spans the space and that no member is
    /// expressible by the others.
    ///
    /// Independence is structural: a basic event has no definition and so is
    /// never expressible by other events; a composite member is dependent when
    /// its definition expands over the remaining members.
    pub fn verify_base(&self, candidate: &EventBase) -> CalcResult<BaseReport> {
        for member in &candidate.members {
            if !self.contains(member) {
                return Err(CalcError::unknown_event(format!(
                    "base member `{member}` is not defined in the space"
                )));
            }
        }
        let mut report = BaseReport::default();
        let everything = self.basics.keys().chain(self.composites.keys());
        for id in everything {
            let node = Node::Atom(id.clone());
            if !self.expressible(&node, &candidate.members, &mut Vec::new())? {
                report.incomplete.push(id.clone());
            }
        }
        for member in &candidate.members {
            if let Some(definition) = self.composites.get(member) {
                let mut others = candidate.members.clone();
                others.remove(member);
                let mut visiting = vec![member.clone()];
                if self.expressible(definition, &others, &mut visiting)? {
                    report.dependent.push(member.clone());
                }
            }
        }
        Ok(report)
    }

    /// Runs the basic events of `e` in expansion order.
    ///
    /// Stops at the first failing handler and returns its status; otherwise
    /// yields the final accumulator.
    pub fn execute(&self, e: &Event, ctx: &mut ExecContext<'_>) -> CalcResult {
        for id in self.expand(e)? {
            let handler = &self.basics[&id];
            handler(ctx)?;
        }
        finite(ctx.accumulator, "event result")
    }
}

fn cycle_error(path: &[EventId], id: &EventId) -> CalcError {
    let mut chain: Vec<&str> = path.iter().map(EventId::as_str).collect();
    chain.push(id.as_str());
    CalcError::new(
        Status::CyclicDefinition,
        format!("cyclic event definition: {}", chain.join(" -> ")),
    )
}
