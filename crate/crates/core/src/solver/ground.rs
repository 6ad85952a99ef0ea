//! Bottom-up instantiation over derivable atoms, with deterministic simplification.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::analysis::{check_safety, dependency_edges};
use crate::error::{Error, Result};
use crate::oracle::{GroundProgram, GroundRule};
use crate::syntax::{compare_constants, Atom, CmpOp, Constant, Interpretation, Literal, Program, Rule, Symbol, Term};

pub type AtomId = u32;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Truth {
    True,
    False,
    Undefined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroundLimits {
    pub max_atoms: usize,
    pub max_rules: usize,
}

impl Default for GroundLimits {
    fn default() -> Self {
        GroundLimits { max_atoms: 4_000_000, max_rules: 8_000_000 }
    }
}

/// A ground rule over atom ids. Only undefined atoms remain in its parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DbRule {
    pub head: Vec<AtomId>,
    pub pos: Vec<AtomId>,
    pub neg: Vec<AtomId>,
}

/// The simplified ground program: undecided rules, atom truth, and occurrence lists.
#[derive(Clone, Debug)]
pub struct GroundRuleDB {
    atoms: Vec<Atom>,
    ids: HashMap<Atom, AtomId>,
    truth: Vec<Truth>,
    rules: Vec<DbRule>,
    head_occ: Vec<Vec<u32>>,
    pos_occ: Vec<Vec<u32>>,
    neg_occ: Vec<Vec<u32>>,
    instances: usize,
}

impl GroundRuleDB {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom(&self, id: AtomId) -> &Atom {
        &self.atoms[id as usize]
    }

    pub fn id_of(&self, a: &Atom) -> Option<AtomId> {
        self.ids.get(a).copied()
    }

    pub fn truth(&self, id: AtomId) -> Truth {
        self.truth[id as usize]
    }

    /// Truth of an arbitrary ground atom; atoms never derived are false.
    pub fn truth_of(&self, a: &Atom) -> Truth {
        self.id_of(a).map_or(Truth::False, |id| self.truth(id))
    }

    pub fn rules(&self) -> &[DbRule] {
        &self.rules
    }

    pub fn head_occurrences(&self, id: AtomId) -> &[u32] {
        &self.head_occ[id as usize]
    }

    pub fn pos_occurrences(&self, id: AtomId) -> &[u32] {
        &self.pos_occ[id as usize]
    }

    pub fn neg_occurrences(&self, id: AtomId) -> &[u32] {
        &self.neg_occ[id as usize]
    }

    /// Number of ground rule instances produced before simplification.
    pub fn ground_rules(&self) -> usize {
        self.instances
    }

    pub fn true_atoms(&self) -> Interpretation {
        self.ids_with(Truth::True).map(|i| self.atoms[i as usize].clone()).collect()
    }

    pub fn undefined_atoms(&self) -> Vec<AtomId> {
        self.ids_with(Truth::Undefined).collect()
    }

    fn ids_with(&self, t: Truth) -> impl Iterator<Item = AtomId> + '_ {
        (0..self.atoms.len() as AtomId).filter(move |&i| self.truth[i as usize] == t)
    }

    /// Atoms matching a possibly nonground pattern that are not false.
    pub fn matching(&self, pattern: &Atom) -> Vec<AtomId> {
        let mut out: Vec<AtomId> = (0..self.atoms.len() as AtomId)
            .filter(|&i| self.truth[i as usize] != Truth::False)
            .filter(|&i| pattern.match_ground(&self.atoms[i as usize], &mut crate::Substitution::new()))
            .collect();
        out.sort_by(|a, b| self.atoms[*a as usize].cmp(&self.atoms[*b as usize]));
        out
    }

    pub fn is_disjunction_free(&self) -> bool {
        self.rules.iter().all(|r| r.head.len() <= 1)
    }

    /// The remaining rules with true atoms as facts, for cross-checks against the oracle.
    pub fn to_ground_program(&self) -> GroundProgram {
        let name = |ids: &[AtomId]| ids.iter().map(|&i| self.atoms[i as usize].clone()).collect::<Vec<_>>();
        let facts = self.true_atoms().into_iter().map(|a| GroundRule::new(vec![a], vec![], vec![]));
        let rules = self.rules.iter().map(|r| GroundRule::new(name(&r.head), name(&r.pos), name(&r.neg)));
        GroundProgram::from_rules(facts.chain(rules))
    }
}

#[derive(Clone, Debug)]
enum CTerm {
    Var(usize),
    Const(Constant),
}

#[derive(Clone, Debug)]
struct CAtom {
    pred: Symbol,
    args: Vec<CTerm>,
}

#[derive(Clone, Debug)]
struct Step {
    atom: usize,
    checks: Vec<usize>,
}

#[derive(Clone, Debug)]
struct CRule {
    head: Vec<CAtom>,
    pos: Vec<CAtom>,
    neg: Vec<CAtom>,
    cmps: Vec<(CmpOp, CTerm, CTerm)>,
    nvars: usize,
    pre_checks: Vec<usize>,
    plans: HashMap<Option<usize>, Vec<Step>>,
}

fn compile(r: &Rule) -> CRule {
    let vars = r.vars();
    let slot = |t: &Term| match t {
        Term::Var(v) => CTerm::Var(vars.iter().position(|x| x == v).expect("variable of rule")),
        Term::Const(c) => CTerm::Const(c.clone()),
    };
    let catom = |a: &Atom| CAtom { pred: a.predicate.clone(), args: a.args.iter().map(slot).collect() };
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut cmps = Vec::new();
    for l in &r.body {
        match l {
            Literal::Pos(a) => pos.push(catom(a)),
            Literal::Neg(a) => neg.push(catom(a)),
            Literal::Cmp(c) => cmps.push((c.op, slot(&c.left), slot(&c.right))),
        }
    }
    let mut cr = CRule {
        head: r.head.iter().map(catom).collect(),
        pos,
        neg,
        cmps,
        nvars: vars.len(),
        pre_checks: Vec::new(),
        plans: HashMap::new(),
    };
    let cmp_vars = |c: &(CmpOp, CTerm, CTerm)| -> Vec<usize> {
        [&c.1, &c.2].into_iter().filter_map(|t| if let CTerm::Var(v) = t { Some(*v) } else { None }).collect()
    };
    cr.pre_checks = (0..cr.cmps.len()).filter(|&k| cmp_vars(&cr.cmps[k]).is_empty()).collect();
    let starts: Vec<Option<usize>> = std::iter::once(None).chain((0..cr.pos.len()).map(Some)).collect();
    for start in starts {
        let mut bound = vec![false; cr.nvars];
        let mut used = vec![false; cr.pos.len()];
        let mut checked: Vec<bool> = (0..cr.cmps.len()).map(|k| cr.pre_checks.contains(&k)).collect();
        let mut plan = Vec::new();
        for n in 0..cr.pos.len() {
            let pick = match (n, start) {
                (0, Some(s)) => s,
                _ => {
                    let score = |i: usize| {
                        cr.pos[i]
                            .args
                            .iter()
                            .filter(|t| match t {
                                CTerm::Var(v) => bound[*v],
                                CTerm::Const(_) => true,
                            })
                            .count()
                    };
                    let mut best: Option<usize> = None;
                    for i in (0..cr.pos.len()).filter(|&i| !used[i]) {
                        if best.is_none_or(|b| score(i) > score(b)) {
                            best = Some(i);
                        }
                    }
                    best.expect("unused atom")
                }
            };
            used[pick] = true;
            for t in &cr.pos[pick].args {
                if let CTerm::Var(v) = t {
                    bound[*v] = true;
                }
            }
            let checks: Vec<usize> = (0..cr.cmps.len())
                .filter(|&k| !checked[k] && cmp_vars(&cr.cmps[k]).iter().all(|v| bound[*v]))
                .collect();
            for &k in &checks {
                checked[k] = true;
            }
            plan.push(Step { atom: pick, checks });
        }
        cr.plans.insert(start, plan);
    }
    cr
}

fn value(t: &CTerm, binding: &[Option<Constant>]) -> Option<Constant> {
    match t {
        CTerm::Var(v) => binding[*v].clone(),
        CTerm::Const(c) => Some(c.clone()),
    }
}

fn instantiate(a: &CAtom, binding: &[Option<Constant>]) -> Atom {
    Atom {
        predicate: a.pred.clone(),
        args: a.args.iter().map(|t| Term::Const(value(t, binding).expect("bound variable"))).collect(),
    }
}

struct Instance {
    head: Vec<AtomId>,
    pos: Vec<AtomId>,
    neg: Vec<AtomId>,
    alive: bool,
    pos_left: usize,
    neg_left: usize,
}

struct Grounder {
    limits: GroundLimits,
    deadline: Option<Instant>,
    atoms: Vec<Atom>,
    ids: HashMap<Atom, AtomId>,
    truth: Vec<Truth>,
    derived: Vec<bool>,
    by_pred: HashMap<Symbol, Vec<AtomId>>,
    by_arg: HashMap<(Symbol, usize, Constant), Vec<AtomId>>,
    mentioned_by_pred: HashMap<Symbol, Vec<AtomId>>,
    done: HashSet<Symbol>,
    instances: Vec<Instance>,
    seen: HashSet<(Vec<AtomId>, Vec<AtomId>, Vec<AtomId>)>,
    head_occ: Vec<Vec<u32>>,
    pos_occ: Vec<Vec<u32>>,
    neg_occ: Vec<Vec<u32>>,
    head_count: Vec<usize>,
    queue: Vec<AtomId>,
    fresh: Vec<AtomId>,
    ticks: u64,
}

impl Grounder {
    fn intern(&mut self, a: Atom) -> Result<AtomId> {
        if let Some(&id) = self.ids.get(&a) {
            return Ok(id);
        }
        if self.atoms.len() >= self.limits.max_atoms {
            return Err(Error::CapacityExceeded { what: "ground atoms", limit: self.limits.max_atoms });
        }
        let id = self.atoms.len() as AtomId;
        self.mentioned_by_pred.entry(a.predicate.clone()).or_default().push(id);
        self.ids.insert(a.clone(), id);
        self.atoms.push(a);
        self.truth.push(Truth::Undefined);
        self.derived.push(false);
        self.head_occ.push(Vec::new());
        self.pos_occ.push(Vec::new());
        self.neg_occ.push(Vec::new());
        self.head_count.push(0);
        Ok(id)
    }

    /// Marks an atom derivable and indexes it; returns true if it is new.
    fn derive(&mut self, id: AtomId) -> bool {
        if self.derived[id as usize] {
            return false;
        }
        self.derived[id as usize] = true;
        self.fresh.push(id);
        let a = &self.atoms[id as usize];
        self.by_pred.entry(a.predicate.clone()).or_default().push(id);
        for (k, t) in a.args.iter().enumerate() {
            if let Term::Const(c) = t {
                self.by_arg.entry((a.predicate.clone(), k, c.clone())).or_default().push(id);
            }
        }
        true
    }

    fn set(&mut self, id: AtomId, t: Truth) {
        if self.truth[id as usize] == Truth::Undefined {
            self.truth[id as usize] = t;
            self.queue.push(id);
        }
    }

    fn kill(&mut self, r: usize) {
        if !self.instances[r].alive {
            return;
        }
        self.instances[r].alive = false;
        for k in 0..self.instances[r].head.len() {
            let h = self.instances[r].head[k];
            self.head_count[h as usize] -= 1;
            if self.head_count[h as usize] == 0 && self.done.contains(&self.atoms[h as usize].predicate) {
                self.set(h, Truth::False);
            }
        }
    }

    fn check_fact(&mut self, r: usize) {
        let i = &self.instances[r];
        if i.alive && i.pos_left == 0 && i.neg_left == 0 && i.head.len() == 1 {
            let h = i.head[0];
            self.set(h, Truth::True);
        }
    }

    fn propagate(&mut self) {
        while let Some(a) = self.queue.pop() {
            let a = a as usize;
            match self.truth[a] {
                Truth::True => {
                    for r in self.head_occ[a].clone() {
                        self.kill(r as usize);
                    }
                    for r in self.neg_occ[a].clone() {
                        self.kill(r as usize);
                    }
                    for r in self.pos_occ[a].clone() {
                        let r = r as usize;
                        if self.instances[r].alive {
                            self.instances[r].pos_left -= 1;
                            self.check_fact(r);
                        }
                    }
                }
                Truth::False => {
                    for r in self.pos_occ[a].clone() {
                        self.kill(r as usize);
                    }
                    for r in self.neg_occ[a].clone() {
                        let r = r as usize;
                        if self.instances[r].alive {
                            self.instances[r].neg_left -= 1;
                            self.check_fact(r);
                        }
                    }
                }
                Truth::Undefined => unreachable!("queued atoms are decided"),
            }
        }
    }

    fn tick(&mut self) -> Result<()> {
        self.ticks += 1;
        if self.ticks % 4096 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Err(Error::Interrupted);
                }
            }
        }
        Ok(())
    }

    /// Emits the instance of `r` under a complete binding.
    fn emit(&mut self, r: &CRule, binding: &[Option<Constant>]) -> Result<()> {
        let mut head = Vec::with_capacity(r.head.len());
        for a in &r.head {
            head.push(self.intern(instantiate(a, binding))?);
        }
        let mut pos = Vec::with_capacity(r.pos.len());
        for a in &r.pos {
            pos.push(self.ids[&instantiate(a, binding)]);
        }
        let mut neg = Vec::with_capacity(r.neg.len());
        for a in &r.neg {
            let atom = instantiate(a, binding);
            match self.ids.get(&atom) {
                Some(&id) => neg.push(id),
                None if self.done.contains(&atom.predicate) => {}
                None => neg.push(self.intern(atom)?),
            }
        }
        for v in [&mut head, &mut pos, &mut neg] {
            v.sort_unstable();
            v.dedup();
        }
        let key = (head, pos, neg);
        if self.seen.contains(&key) {
            return Ok(());
        }
        let (head, pos, neg) = key.clone();
        self.seen.insert(key);
        let tr = |id: &AtomId| self.truth[*id as usize];
        if neg.iter().any(|id| tr(id) == Truth::True) || head.iter().any(|id| tr(id) == Truth::True) {
            return Ok(());
        }
        if pos.iter().any(|id| tr(id) == Truth::False) {
            return Ok(());
        }
        if self.instances.len() >= self.limits.max_rules {
            return Err(Error::CapacityExceeded { what: "ground rules", limit: self.limits.max_rules });
        }
        let idx = self.instances.len() as u32;
        let pos_left = pos.iter().filter(|id| tr(id) != Truth::True).count();
        let neg_left = neg.iter().filter(|id| tr(id) == Truth::Undefined).count();
        for &h in &head {
            self.derive(h);
            self.head_occ[h as usize].push(idx);
            self.head_count[h as usize] += 1;
        }
        for &p in &pos {
            self.pos_occ[p as usize].push(idx);
        }
        for &n in &neg {
            self.neg_occ[n as usize].push(idx);
        }
        self.instances.push(Instance { head, pos, neg, alive: true, pos_left, neg_left });
        self.check_fact(idx as usize);
        self.propagate();
        Ok(())
    }

    fn candidates(&self, a: &CAtom, binding: &[Option<Constant>]) -> &[AtomId] {
        let mut best: Option<&Vec<AtomId>> = None;
        let mut any_bound = false;
        for (k, t) in a.args.iter().enumerate() {
            if let Some(c) = value(t, binding) {
                any_bound = true;
                let list = self.by_arg.get(&(a.pred.clone(), k, c));
                match list {
                    None => return &[],
                    Some(l) if best.is_none_or(|b| l.len() < b.len()) => best = Some(l),
                    _ => {}
                }
            }
        }
        if !any_bound {
            best = self.by_pred.get(&a.pred);
        }
        best.map(Vec::as_slice).unwrap_or(&[])
    }

    fn matches(&self, a: &CAtom, id: AtomId, binding: &mut [Option<Constant>], added: &mut Vec<usize>) -> bool {
        let g = &self.atoms[id as usize];
        for (t, gt) in a.args.iter().zip(&g.args) {
            let Term::Const(c) = gt else { unreachable!("ground atom") };
            match t {
                CTerm::Const(k) if k != c => return false,
                CTerm::Const(_) => {}
                CTerm::Var(v) => match &binding[*v] {
                    Some(b) if b != c => return false,
                    Some(_) => {}
                    None => {
                        binding[*v] = Some(c.clone());
                        added.push(*v);
                    }
                },
            }
        }
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn join(
        &mut self,
        r: &CRule,
        plan: &[Step],
        step: usize,
        delta: Option<&[AtomId]>,
        binding: &mut Vec<Option<Constant>>,
        out: &mut Vec<Vec<Option<Constant>>>,
    ) -> Result<()> {
        if step == plan.len() {
            out.push(binding.clone());
            return Ok(());
        }
        self.tick()?;
        let s = &plan[step];
        let a = &r.pos[s.atom];
        let cands: Vec<AtomId> = match (step, delta) {
            (0, Some(d)) => d.iter().copied().filter(|&id| self.atoms[id as usize].predicate == a.pred).collect(),
            _ => self.candidates(a, binding).to_vec(),
        };
        let mut added = Vec::new();
        for id in cands {
            if self.truth[id as usize] == Truth::False {
                continue;
            }
            added.clear();
            if self.matches(a, id, binding, &mut added) {
                let mut ok = true;
                for &k in &s.checks {
                    let (op, l, rr) = &r.cmps[k];
                    let (lv, rv) = (value(l, binding).expect("bound"), value(rr, binding).expect("bound"));
                    if !compare_constants(*op, &lv, &rv)? {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    self.join(r, plan, step + 1, delta, binding, out)?;
                }
            }
            for &v in &added {
                binding[v] = None;
            }
        }
        Ok(())
    }

    fn run_rule(&mut self, r: &CRule, start: Option<usize>, delta: Option<&[AtomId]>) -> Result<()> {
        for &k in &r.pre_checks {
            let (op, l, rr) = &r.cmps[k];
            if !compare_constants(*op, &value(l, &[]).expect("ground"), &value(rr, &[]).expect("ground"))? {
                return Ok(());
            }
        }
        let plan = r.plans[&start].clone();
        let mut binding = vec![None; r.nvars];
        let mut out = Vec::new();
        self.join(r, &plan, 0, delta, &mut binding, &mut out)?;
        for b in out {
            self.emit(r, &b)?;
        }
        Ok(())
    }
}

/// Grounds `p` component by component in dependency order, semi-naively.
pub fn intelligent_ground(p: &Program) -> Result<GroundRuleDB> {
    intelligent_ground_with(p, GroundLimits::default(), None)
}

pub fn intelligent_ground_with(p: &Program, limits: GroundLimits, deadline: Option<Instant>) -> Result<GroundRuleDB> {
    for r in &p.rules {
        if let Some(v) = check_safety(r) {
            return Err(Error::UnsafeRule { rule: r.to_string(), variable: v, span: None });
        }
    }
    let mut g = Grounder {
        limits,
        deadline,
        atoms: Vec::new(),
        ids: HashMap::new(),
        truth: Vec::new(),
        derived: Vec::new(),
        by_pred: HashMap::new(),
        by_arg: HashMap::new(),
        mentioned_by_pred: HashMap::new(),
        done: HashSet::new(),
        instances: Vec::new(),
        seen: HashSet::new(),
        head_occ: Vec::new(),
        pos_occ: Vec::new(),
        neg_occ: Vec::new(),
        head_count: Vec::new(),
        queue: Vec::new(),
        fresh: Vec::new(),
        ticks: 0,
    };
    let heads: HashSet<Symbol> = p.rules.iter().flat_map(|r| r.head.iter().map(|h| h.predicate.clone())).collect();
    for (pred, _) in p.predicates() {
        if !heads.contains(&pred) {
            g.done.insert(pred);
        }
    }
    for f in &p.facts {
        let id = g.intern(f.clone())?;
        g.derive(id);
        g.set(id, Truth::True);
    }
    g.propagate();

    let mut graph: DiGraph<Symbol, ()> = DiGraph::new();
    let mut node = HashMap::new();
    for pred in &heads {
        node.insert(pred.clone(), graph.add_node(pred.clone()));
    }
    for (h, b, _) in dependency_edges(p) {
        if let (Some(&x), Some(&y)) = (node.get(&h), node.get(&b)) {
            graph.add_edge(x, y, ());
        }
    }
    let mut sccs = tarjan_scc(&graph);
    for scc in &mut sccs {
        scc.sort_by(|a, b| graph[*a].cmp(&graph[*b]));
    }
    let compiled: Vec<CRule> = p.rules.iter().map(compile).collect();
    for scc in sccs {
        let preds: HashSet<Symbol> = scc.iter().map(|n| graph[*n].clone()).collect();
        let rules: Vec<&CRule> = compiled.iter().filter(|r| preds.contains(&r.head[0].pred)).collect();
        g.fresh.clear();
        for r in &rules {
            g.run_rule(r, None, None)?;
        }
        while !g.fresh.is_empty() {
            let current = std::mem::take(&mut g.fresh);
            let present: HashSet<Symbol> = current.iter().map(|&id| g.atoms[id as usize].predicate.clone()).collect();
            for r in &rules {
                for i in 0..r.pos.len() {
                    if preds.contains(&r.pos[i].pred) && present.contains(&r.pos[i].pred) {
                        g.run_rule(r, Some(i), Some(&current))?;
                    }
                }
            }
        }
        for pred in &preds {
            g.done.insert(pred.clone());
        }
        for pred in &preds {
            for id in g.mentioned_by_pred.get(pred).cloned().unwrap_or_default() {
                if g.head_count[id as usize] == 0 {
                    g.set(id, Truth::False);
                }
            }
        }
        g.propagate();
    }

    let mut rules = Vec::new();
    let n = g.atoms.len();
    let mut head_occ = vec![Vec::new(); n];
    let mut pos_occ = vec![Vec::new(); n];
    let mut neg_occ = vec![Vec::new(); n];
    let undefined = |id: &&AtomId| g.truth[**id as usize] == Truth::Undefined;
    for inst in g.instances.iter().filter(|i| i.alive) {
        let r = DbRule {
            head: inst.head.iter().filter(undefined).copied().collect(),
            pos: inst.pos.iter().filter(undefined).copied().collect(),
            neg: inst.neg.iter().filter(undefined).copied().collect(),
        };
        let idx = rules.len() as u32;
        for &a in &r.head {
            head_occ[a as usize].push(idx);
        }
        for &a in &r.pos {
            pos_occ[a as usize].push(idx);
        }
        for &a in &r.neg {
            neg_occ[a as usize].push(idx);
        }
        rules.push(r);
    }
    Ok(GroundRuleDB {
        atoms: g.atoms,
        ids: g.ids,
        truth: g.truth,
        rules,
        head_occ,
        pos_occ,
        neg_occ,
        instances: g.instances.len(),
    })
}
