//! Backtracking model search over a simplified ground program.

use std::time::{Duration, Instant};

use super::ground::{AtomId, GroundRuleDB, Truth};
use super::minimal::is_minimal;
use crate::error::{Error, Result};
use crate::syntax::Interpretation;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub choices: u64,
    pub ground_rules: usize,
    pub models: u64,
    pub stability_checks: u64,
    pub time_ground: Duration,
    pub time_search: Duration,
}

/// What to do after a stable model has been reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

struct Decision {
    trail_len: usize,
    atom: AtomId,
    value: Truth,
    flipped: bool,
}

pub(crate) struct Search<'a> {
    db: &'a GroundRuleDB,
    val: Vec<Truth>,
    trail: Vec<AtomId>,
    qhead: usize,
    decisions: Vec<Decision>,
    order: Vec<AtomId>,
    rank: Vec<usize>,
    deadline: Option<Instant>,
    ticks: u64,
    pub(crate) stats: SearchStats,
}

fn opposite(t: Truth) -> Truth {
    match t {
        Truth::True => Truth::False,
        Truth::False => Truth::True,
        Truth::Undefined => Truth::Undefined,
    }
}

impl<'a> Search<'a> {
    pub(crate) fn new(db: &'a GroundRuleDB, deadline: Option<Instant>) -> Self {
        let n = db.atom_count();
        let val: Vec<Truth> = (0..n as AtomId).map(|a| db.truth(a)).collect();
        let occ = |a: AtomId| db.head_occurrences(a).len() + db.pos_occurrences(a).len() + db.neg_occurrences(a).len();
        let mut order: Vec<AtomId> = (0..n as AtomId).filter(|&a| val[a as usize] == Truth::Undefined).collect();
        order.sort_by_key(|&a| (std::cmp::Reverse(occ(a)), a));
        let mut rank = vec![usize::MAX; n];
        for (k, &a) in order.iter().enumerate() {
            rank[a as usize] = k;
        }
        Search {
            db,
            val,
            trail: Vec::new(),
            qhead: 0,
            decisions: Vec::new(),
            order,
            rank,
            deadline,
            ticks: 0,
            stats: SearchStats::default(),
        }
    }

    fn tick(&mut self) -> Result<()> {
        self.ticks += 1;
        if self.ticks % 2048 == 0 && self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Error::Interrupted);
        }
        Ok(())
    }

    fn assign(&mut self, a: AtomId, t: Truth) -> bool {
        match self.val[a as usize] {
            Truth::Undefined => {
                self.val[a as usize] = t;
                self.trail.push(a);
                true
            }
            v => v == t,
        }
    }

    fn body_false(&self, r: usize) -> bool {
        let rule = &self.db.rules()[r];
        rule.pos.iter().any(|&a| self.val[a as usize] == Truth::False)
            || rule.neg.iter().any(|&a| self.val[a as usize] == Truth::True)
    }

    /// Unit propagation on one rule: derive a head atom, or falsify the last open body literal.
    fn check_rule(&mut self, r: usize) -> bool {
        let rule = &self.db.rules()[r];
        if self.body_false(r) || rule.head.iter().any(|&h| self.val[h as usize] == Truth::True) {
            return true;
        }
        let mut open_body = 0;
        let mut last_body = None;
        for &a in &rule.pos {
            if self.val[a as usize] == Truth::Undefined {
                open_body += 1;
                last_body = Some((a, Truth::False));
            }
        }
        for &a in &rule.neg {
            if self.val[a as usize] == Truth::Undefined {
                open_body += 1;
                last_body = Some((a, Truth::True));
            }
        }
        let open_head: Vec<AtomId> = rule.head.iter().copied().filter(|&h| self.val[h as usize] == Truth::Undefined).collect();
        match (open_body, open_head.len()) {
            (0, 0) => false,
            (0, 1) => self.assign(open_head[0], Truth::True),
            (1, 0) => {
                let (a, t) = last_body.expect("open literal");
                self.assign(a, t)
            }
            _ => true,
        }
    }

    /// Supportedness: a true atom needs a rule with a non-false body and no other true head atom.
    fn check_support(&mut self, a: AtomId) -> bool {
        if self.val[a as usize] == Truth::False || self.db.truth(a) != Truth::Undefined {
            return true;
        }
        let mut supporters = 0;
        let mut only = 0;
        for &r in self.db.head_occurrences(a) {
            let r = r as usize;
            if self.body_false(r) {
                continue;
            }
            if self.db.rules()[r].head.iter().any(|&h| h != a && self.val[h as usize] == Truth::True) {
                continue;
            }
            supporters += 1;
            only = r;
            if supporters > 1 {
                break;
            }
        }
        match (supporters, self.val[a as usize]) {
            (0, Truth::Undefined) => self.assign(a, Truth::False),
            (0, _) => false,
            (1, Truth::True) => {
                let rule = &self.db.rules()[only];
                let forced: Vec<(AtomId, Truth)> = rule
                    .pos
                    .iter()
                    .map(|&p| (p, Truth::True))
                    .chain(rule.neg.iter().map(|&n| (n, Truth::False)))
                    .chain(rule.head.iter().filter(|&&h| h != a).map(|&h| (h, Truth::False)))
                    .collect();
                forced.into_iter().all(|(x, t)| self.assign(x, t))
            }
            _ => true,
        }
    }

    fn propagate(&mut self) -> Result<bool> {
        while self.qhead < self.trail.len() {
            self.tick()?;
            let a = self.trail[self.qhead];
            self.qhead += 1;
            let db = self.db;
            let t = self.val[a as usize];
            for &r in db.head_occurrences(a) {
                if !self.check_rule(r as usize) {
                    return Ok(false);
                }
                if t == Truth::True {
                    for &h in &db.rules()[r as usize].head {
                        if h != a && !self.check_support(h) {
                            return Ok(false);
                        }
                    }
                }
            }
            let killing = if t == Truth::False { db.pos_occurrences(a) } else { db.neg_occurrences(a) };
            let other = if t == Truth::False { db.neg_occurrences(a) } else { db.pos_occurrences(a) };
            for &r in killing {
                if !self.check_rule(r as usize) {
                    return Ok(false);
                }
                for &h in &db.rules()[r as usize].head {
                    if !self.check_support(h) {
                        return Ok(false);
                    }
                }
            }
            for &r in other {
                if !self.check_rule(r as usize) {
                    return Ok(false);
                }
            }
            if t == Truth::True && !self.check_support(a) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn initial(&mut self, assumptions: &[(AtomId, Truth)]) -> Result<bool> {
        for &(a, t) in assumptions {
            if !self.assign(a, t) {
                return Ok(false);
            }
        }
        for r in 0..self.db.rules().len() {
            if !self.check_rule(r) {
                return Ok(false);
            }
        }
        for a in 0..self.val.len() as AtomId {
            if !self.check_support(a) {
                return Ok(false);
            }
        }
        self.propagate()
    }

    /// Picks an undefined head atom of a rule whose body is true and whose head is not yet
    /// satisfied, preferring atoms with more occurrences; otherwise the best undefined atom.
    fn choose(&self) -> Option<(AtomId, Truth)> {
        let mut best: Option<AtomId> = None;
        for rule in self.db.rules() {
            let body_true = rule.pos.iter().all(|&a| self.val[a as usize] == Truth::True)
                && rule.neg.iter().all(|&a| self.val[a as usize] == Truth::False);
            if !body_true || rule.head.iter().any(|&h| self.val[h as usize] == Truth::True) {
                continue;
            }
            for &h in &rule.head {
                if self.val[h as usize] == Truth::Undefined && best.is_none_or(|b| self.rank[h as usize] < self.rank[b as usize]) {
                    best = Some(h);
                }
            }
        }
        if let Some(b) = best {
            return Some((b, Truth::True));
        }
        self.order.iter().find(|&&a| self.val[a as usize] == Truth::Undefined).map(|&a| (a, Truth::False))
    }

    /// Undoes decisions until one can be flipped. Returns false when the space is exhausted.
    fn backtrack(&mut self) -> bool {
        while let Some(d) = self.decisions.pop() {
            for &u in &self.trail[d.trail_len..] {
                self.val[u as usize] = Truth::Undefined;
            }
            self.trail.truncate(d.trail_len);
            self.qhead = self.qhead.min(d.trail_len);
            if !d.flipped {
                let value = opposite(d.value);
                self.decisions.push(Decision { trail_len: d.trail_len, atom: d.atom, value, flipped: true });
                self.assign(d.atom, value);
                return true;
            }
        }
        false
    }

    pub(crate) fn model(&self) -> Interpretation {
        (0..self.val.len() as AtomId)
            .filter(|&a| self.val[a as usize] == Truth::True)
            .map(|a| self.db.atom(a).clone())
            .collect()
    }

    pub(crate) fn values(&self) -> &[Truth] {
        &self.val
    }

    /// Runs the search, calling `on_model` for each stable model in search order.
    pub(crate) fn run(
        &mut self,
        assumptions: &[(AtomId, Truth)],
        mut on_model: impl FnMut(&Search<'a>) -> Control,
    ) -> Result<()> {
        let start = Instant::now();
        let result = self.run_inner(assumptions, &mut on_model);
        self.stats.time_search += start.elapsed();
        result
    }

    fn run_inner(&mut self, assumptions: &[(AtomId, Truth)], on_model: &mut impl FnMut(&Search<'a>) -> Control) -> Result<()> {
        if !self.initial(assumptions)? {
            return Ok(());
        }
        loop {
            if self.propagate()? {
                match self.choose() {
                    Some((a, t)) => {
                        self.stats.choices += 1;
                        self.decisions.push(Decision { trail_len: self.trail.len(), atom: a, value: t, flipped: false });
                        self.assign(a, t);
                        continue;
                    }
                    None => {
                        self.stats.stability_checks += 1;
                        if is_minimal(self.db, &self.val, self.deadline)? {
                            self.stats.models += 1;
                            if on_model(self) == Control::Stop {
                                return Ok(());
                            }
                        }
                    }
                }
            }
            if !self.backtrack() {
                return Ok(());
            }
        }
    }
}

/// All stable models of the program behind `db`, each including the atoms fixed by grounding.
pub fn enumerate_models(db: &GroundRuleDB, deadline: Option<Instant>) -> Result<(Vec<Interpretation>, SearchStats)> {
    let mut search = Search::new(db, deadline);
    let mut models = Vec::new();
    search.run(&[], |s| {
        models.push(s.model());
        Control::Continue
    })?;
    models.sort();
    let mut stats = search.stats;
    stats.ground_rules = db.ground_rules();
    Ok((models, stats))
}

/// The first stable model under the given assumptions, if any.
pub fn find_model(
    db: &GroundRuleDB,
    assumptions: &[(AtomId, Truth)],
    deadline: Option<Instant>,
    stats: &mut SearchStats,
) -> Result<Option<Interpretation>> {
    let mut search = Search::new(db, deadline);
    let mut found = None;
    let result = search.run(assumptions, |s| {
        found = Some(s.model());
        Control::Stop
    });
    stats.choices += search.stats.choices;
    stats.models += search.stats.models;
    stats.stability_checks += search.stats.stability_checks;
    stats.time_search += search.stats.time_search;
    result?;
    debug_assert!(found.as_ref().is_none_or(|_| search.values().iter().all(|&t| t != Truth::Undefined)));
    Ok(found)
}
