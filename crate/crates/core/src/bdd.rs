//! Reduced ordered binary decision diagrams over a fixed proposition order.
//!
//! Variables are ordered by ascending proposition id. Nodes are hash-consed
//! through a unique table, so two [`BoolFn`]s from the same [`Manager`] are
//! equal exactly when they denote the same Boolean function. There is no
//! garbage collection; a manager lives for one query.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU32, Ordering};

use thiserror::Error;

use crate::formula::{Assignment, Proposition};

static NEXT_MANAGER_ID: AtomicU32 = AtomicU32::new(1);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BddError {
    #[error("proposition {0} is not in the manager's vocabulary")]
    UnknownVariable(Proposition),
    #[error("operands belong to different managers")]
    ManagerMismatch,
    #[error("assignment does not cover exactly the manager's vocabulary")]
    PartialAssignment,
}

/// Reference to a canonical node inside a [`Manager`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoolFn {
    manager: u32,
    node: u32,
}

const FALSE: u32 = 0;
const TRUE: u32 = 1;
/// Level assigned to terminals; below every variable.
const TERMINAL_LEVEL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    level: u32,
    low: u32,
    high: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
    Xor,
}

#[derive(Debug)]
pub struct Manager {
    id: u32,
    vars: Vec<Proposition>,
    nodes: Vec<Node>,
    unique: HashMap<Node, u32>,
    cache: HashMap<(Op, u32, u32), u32>,
    not_cache: HashMap<u32, u32>,
}

impl Manager {
    pub fn new(vocabulary: &BTreeSet<Proposition>) -> Self {
        let terminal = |v| Node {
            level: TERMINAL_LEVEL,
            low: v,
            high: v,
        };
        Manager {
            id: NEXT_MANAGER_ID.fetch_add(1, Ordering::Relaxed),
            vars: vocabulary.iter().copied().collect(),
            nodes: vec![terminal(FALSE), terminal(TRUE)],
            unique: HashMap::new(),
            cache: HashMap::new(),
            not_cache: HashMap::new(),
        }
    }

    pub fn vocabulary(&self) -> &[Proposition] {
        &self.vars
    }

    /// Nodes allocated so far, terminals included. Nothing is ever freed, so
    /// this is also the peak.
    pub fn total_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn wrap(&self, node: u32) -> BoolFn {
        BoolFn {
            manager: self.id,
            node,
        }
    }

    fn unwrap(&self, f: BoolFn) -> Result<u32, BddError> {
        if f.manager == self.id {
            Ok(f.node)
        } else {
            Err(BddError::ManagerMismatch)
        }
    }

    fn level_of(&self, p: Proposition) -> Result<u32, BddError> {
        self.vars
            .binary_search(&p)
            .map(|i| i as u32)
            .map_err(|_| BddError::UnknownVariable(p))
    }

    fn mk(&mut self, level: u32, low: u32, high: u32) -> u32 {
        if low == high {
            return low;
        }
        let node = Node { level, low, high };
        if let Some(&id) = self.unique.get(&node) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(node);
        self.unique.insert(node, id);
        id
    }

    pub fn constant(&self, value: bool) -> BoolFn {
        self.wrap(if value { TRUE } else { FALSE })
    }

    pub fn var(&mut self, p: Proposition) -> Result<BoolFn, BddError> {
        let level = self.level_of(p)?;
        let n = self.mk(level, FALSE, TRUE);
        Ok(self.wrap(n))
    }

    fn not_rec(&mut self, f: u32) -> u32 {
        match f {
            FALSE => return TRUE,
            TRUE => return FALSE,
            _ => {}
        }
        if let Some(&r) = self.not_cache.get(&f) {
            return r;
        }
        let Node { level, low, high } = self.nodes[f as usize];
        let low = self.not_rec(low);
        let high = self.not_rec(high);
        let r = self.mk(level, low, high);
        self.not_cache.insert(f, r);
        r
    }

    fn apply_rec(&mut self, op: Op, f: u32, g: u32) -> u32 {
        match op {
            Op::And => match (f, g) {
                (FALSE, _) | (_, FALSE) => return FALSE,
                (TRUE, x) | (x, TRUE) => return x,
                _ if f == g => return f,
                _ => {}
            },
            Op::Or => match (f, g) {
                (TRUE, _) | (_, TRUE) => return TRUE,
                (FALSE, x) | (x, FALSE) => return x,
                _ if f == g => return f,
                _ => {}
            },
            Op::Xor => match (f, g) {
                (FALSE, x) | (x, FALSE) => return x,
                (TRUE, x) | (x, TRUE) => return self.not_rec(x),
                _ if f == g => return FALSE,
                _ => {}
            },
        }
        // all three operators are commutative
        let key = (op, f.min(g), f.max(g));
        if let Some(&r) = self.cache.get(&key) {
            return r;
        }
        let nf = self.nodes[f as usize];
        let ng = self.nodes[g as usize];
        let level = nf.level.min(ng.level);
        let (f0, f1) = if nf.level == level {
            (nf.low, nf.high)
        } else {
            (f, f)
        };
        let (g0, g1) = if ng.level == level {
            (ng.low, ng.high)
        } else {
            (g, g)
        };
        let low = self.apply_rec(op, f0, g0);
        let high = self.apply_rec(op, f1, g1);
        let r = self.mk(level, low, high);
        self.cache.insert(key, r);
        r
    }

    fn apply(&mut self, op: Op, f: BoolFn, g: BoolFn) -> Result<BoolFn, BddError> {
        let (f, g) = (self.unwrap(f)?, self.unwrap(g)?);
        let r = self.apply_rec(op, f, g);
        Ok(self.wrap(r))
    }

    pub fn neg(&mut self, f: BoolFn) -> Result<BoolFn, BddError> {
        let f = self.unwrap(f)?;
        let r = self.not_rec(f);
        Ok(self.wrap(r))
    }

    pub fn conj(&mut self, f: BoolFn, g: BoolFn) -> Result<BoolFn, BddError> {
        self.apply(Op::And, f, g)
    }

    pub fn disj(&mut self, f: BoolFn, g: BoolFn) -> Result<BoolFn, BddError> {
        self.apply(Op::Or, f, g)
    }

    pub fn impl_(&mut self, f: BoolFn, g: BoolFn) -> Result<BoolFn, BddError> {
        let nf = self.neg(f)?;
        self.apply(Op::Or, nf, g)
    }

    pub fn equiv(&mut self, f: BoolFn, g: BoolFn) -> Result<BoolFn, BddError> {
        let x = self.apply(Op::Xor, f, g)?;
        self.neg(x)
    }

    fn quantify_rec(
        &mut self,
        f: u32,
        levels: &[bool],
        last: u32,
        universal: bool,
        memo: &mut HashMap<u32, u32>,
    ) -> u32 {
        let Node { level, low, high } = self.nodes[f as usize];
        if level == TERMINAL_LEVEL || level > last {
            return f;
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let low = self.quantify_rec(low, levels, last, universal, memo);
        let high = self.quantify_rec(high, levels, last, universal, memo);
        let r = if levels[level as usize] {
            let op = if universal { Op::And } else { Op::Or };
            self.apply_rec(op, low, high)
        } else {
            self.mk(level, low, high)
        };
        memo.insert(f, r);
        r
    }

    fn quantify(
        &mut self,
        vars: &BTreeSet<Proposition>,
        f: BoolFn,
        universal: bool,
    ) -> Result<BoolFn, BddError> {
        let f = self.unwrap(f)?;
        let mut levels = vec![false; self.vars.len()];
        let mut last = None;
        for &p in vars {
            let l = self.level_of(p)?;
            levels[l as usize] = true;
            last = last.max(Some(l));
        }
        let Some(last) = last else {
            return Ok(self.wrap(f));
        };
        let r = self.quantify_rec(f, &levels, last, universal, &mut HashMap::new());
        Ok(self.wrap(r))
    }

    /// Universal quantification of `f` over `vars`.
    pub fn forall_set(
        &mut self,
        vars: &BTreeSet<Proposition>,
        f: BoolFn,
    ) -> Result<BoolFn, BddError> {
        self.quantify(vars, f, true)
    }

    /// Existential quantification of `f` over `vars`.
    pub fn exists_set(
        &mut self,
        vars: &BTreeSet<Proposition>,
        f: BoolFn,
    ) -> Result<BoolFn, BddError> {
        self.quantify(vars, f, false)
    }

    pub fn eval(&self, f: BoolFn, assignment: &Assignment) -> Result<bool, BddError> {
        let mut n = self.unwrap(f)?;
        let vocabulary: BTreeSet<_> = self.vars.iter().copied().collect();
        if !assignment.covers_exactly(&vocabulary) {
            return Err(BddError::PartialAssignment);
        }
        loop {
            match n {
                FALSE => return Ok(false),
                TRUE => return Ok(true),
                _ => {}
            }
            let node = self.nodes[n as usize];
            let value = assignment
                .get(self.vars[node.level as usize])
                .expect("assignment covers vocabulary");
            n = if value { node.high } else { node.low };
        }
    }

    pub fn is_tautology(&self, f: BoolFn) -> bool {
        f == self.constant(true)
    }

    pub fn is_contradiction(&self, f: BoolFn) -> bool {
        f == self.constant(false)
    }

    fn reachable(&self, root: u32) -> Vec<u32> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if n > TRUE {
                let node = self.nodes[n as usize];
                stack.push(node.low);
                stack.push(node.high);
            }
        }
        seen.into_iter().collect()
    }

    /// Distinct nodes reachable from `f`, terminals included.
    pub fn node_count(&self, f: BoolFn) -> Result<usize, BddError> {
        Ok(self.reachable(self.unwrap(f)?).len())
    }

    /// Number of satisfying assignments over the whole vocabulary; `None`
    /// when the vocabulary has more than 127 propositions.
    pub(crate) fn sat_count(&self, f: BoolFn) -> Result<Option<u128>, BddError> {
        let root = self.unwrap(f)?;
        let n = self.vars.len() as u32;
        if n > 127 {
            return Ok(None);
        }
        let level = |x: u32| match self.nodes[x as usize].level {
            TERMINAL_LEVEL => n,
            l => l,
        };
        let mut memo: HashMap<u32, u128> = HashMap::new();
        // counts over the variables at or below the node's level
        fn count(
            m: &Manager,
            x: u32,
            level: &dyn Fn(u32) -> u32,
            memo: &mut HashMap<u32, u128>,
        ) -> u128 {
            match x {
                FALSE => return 0,
                TRUE => return 1,
                _ => {}
            }
            if let Some(&c) = memo.get(&x) {
                return c;
            }
            let node = m.nodes[x as usize];
            let lo = count(m, node.low, level, memo) << (level(node.low) - node.level - 1);
            let hi = count(m, node.high, level, memo) << (level(node.high) - node.level - 1);
            memo.insert(x, lo + hi);
            lo + hi
        }
        Ok(Some(count(self, root, &level, &mut memo) << level(root)))
    }

    /// Graphviz rendering; nodes are labeled by proposition id, dashed edges
    /// are the 0-branches.
    pub fn to_dot(&self, f: BoolFn) -> Result<String, BddError> {
        let root = self.unwrap(f)?;
        let mut out = String::from("digraph bdd {\n");
        for n in self.reachable(root) {
            match n {
                FALSE => out.push_str("  n0 [shape=box,label=\"0\"];\n"),
                TRUE => out.push_str("  n1 [shape=box,label=\"1\"];\n"),
                _ => {
                    let node = self.nodes[n as usize];
                    let var = self.vars[node.level as usize];
                    writeln!(out, "  n{n} [label=\"{var}\"];").unwrap();
                    writeln!(out, "  n{n} -> n{} [style=dashed,label=\"0\"];", node.low).unwrap();
                    writeln!(out, "  n{n} -> n{} [label=\"1\"];", node.high).unwrap();
                }
            }
        }
        out.push_str("}\n");
        Ok(out)
    }
}
