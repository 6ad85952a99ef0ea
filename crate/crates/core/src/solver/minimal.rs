//! Stability check: is a total candidate a minimal model of its reduct?

use std::time::Instant;

use super::ground::{AtomId, GroundRuleDB, Truth};
use crate::error::{Error, Result};

/// True iff the true atoms of `val` form a minimal model of the reduct of the
/// undecided rules of `db`. Atoms fixed by grounding are facts and remain true.
pub fn is_minimal(db: &GroundRuleDB, val: &[Truth], deadline: Option<Instant>) -> Result<bool> {
    let in_m = |a: AtomId| val[a as usize] == Truth::True;
    // Reduct rules whose positive body lies inside M; others hold in every subset.
    let relevant: Vec<(Vec<AtomId>, Vec<AtomId>)> = db
        .rules()
        .iter()
        .filter(|r| r.neg.iter().all(|&a| !in_m(a)) && r.pos.iter().all(|&a| in_m(a)))
        .map(|r| (r.pos.clone(), r.head.iter().copied().filter(|&h| in_m(h)).collect()))
        .collect();
    let n = val.len();
    let mut fixed = vec![false; n];
    let mut changed = true;
    while changed {
        changed = false;
        for (pos, head) in &relevant {
            if head.len() == 1 && !fixed[head[0] as usize] && pos.iter().all(|&a| fixed[a as usize]) {
                fixed[head[0] as usize] = true;
                changed = true;
            }
        }
    }
    let free: Vec<AtomId> = (0..n as AtomId).filter(|&a| in_m(a) && !fixed[a as usize] && db.truth(a) == Truth::Undefined).collect();
    if free.is_empty() {
        return Ok(true);
    }
    let mut var_of = vec![usize::MAX; n];
    for (k, &a) in free.iter().enumerate() {
        var_of[a as usize] = k;
    }
    // Clause literals: (variable, polarity). A rule gives ¬pos ∨ head over free atoms.
    let mut clauses: Vec<Vec<(usize, bool)>> = Vec::new();
    for (pos, head) in &relevant {
        if head.iter().any(|&h| fixed[h as usize]) {
            continue;
        }
        let mut c: Vec<(usize, bool)> = pos
            .iter()
            .filter(|&&a| !fixed[a as usize])
            .map(|&a| (var_of[a as usize], false))
            .collect();
        c.extend(head.iter().map(|&h| (var_of[h as usize], true)));
        clauses.push(c);
    }
    clauses.push((0..free.len()).map(|k| (k, false)).collect());
    Ok(!satisfiable(free.len(), &clauses, deadline)?)
}

/// Plain DPLL with unit propagation and chronological backtracking.
fn satisfiable(nvars: usize, clauses: &[Vec<(usize, bool)>], deadline: Option<Instant>) -> Result<bool> {
    let mut occurs: Vec<Vec<usize>> = vec![Vec::new(); nvars];
    for (i, c) in clauses.iter().enumerate() {
        for &(v, _) in c {
            occurs[v].push(i);
        }
    }
    let mut val: Vec<Option<bool>> = vec![None; nvars];
    let mut trail: Vec<usize> = Vec::new();
    let mut decisions: Vec<(usize, usize, bool)> = Vec::new();
    let mut ticks = 0u64;
    let mut head = 0usize;
    let mut conflict = !unit_all(clauses, &mut val, &mut trail);
    loop {
        ticks += 1;
        if ticks % 1024 == 0 && deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Error::Interrupted);
        }
        if !conflict {
            conflict = !propagate(clauses, &occurs, &mut val, &mut trail, &mut head);
        }
        if conflict {
            loop {
                let Some((len, v, flipped)) = decisions.pop() else {
                    return Ok(false);
                };
                let value = val[v].expect("decided");
                for &u in &trail[len..] {
                    val[u] = None;
                }
                trail.truncate(len);
                head = head.min(len);
                if !flipped {
                    decisions.push((len, v, true));
                    val[v] = Some(!value);
                    trail.push(v);
                    conflict = false;
                    break;
                }
            }
            continue;
        }
        match (0..nvars).find(|&v| val[v].is_none()) {
            None => return Ok(true),
            Some(v) => {
                decisions.push((trail.len(), v, false));
                val[v] = Some(false);
                trail.push(v);
            }
        }
    }
}

fn clause_state(c: &[(usize, bool)], val: &[Option<bool>]) -> (bool, usize, Option<(usize, bool)>) {
    let mut open = 0;
    let mut last = None;
    for &(v, pol) in c {
        match val[v] {
            Some(x) if x == pol => return (true, 0, None),
            Some(_) => {}
            None => {
                open += 1;
                last = Some((v, pol));
            }
        }
    }
    (false, open, last)
}

fn unit_all(clauses: &[Vec<(usize, bool)>], val: &mut [Option<bool>], trail: &mut Vec<usize>) -> bool {
    for c in clauses {
        match clause_state(c, val) {
            (true, _, _) => {}
            (false, 0, _) => return false,
            (false, 1, Some((v, pol))) => {
                val[v] = Some(pol);
                trail.push(v);
            }
            _ => {}
        }
    }
    true
}

fn propagate(
    clauses: &[Vec<(usize, bool)>],
    occurs: &[Vec<usize>],
    val: &mut [Option<bool>],
    trail: &mut Vec<usize>,
    head: &mut usize,
) -> bool {
    while *head < trail.len() {
        let v = trail[*head];
        *head += 1;
        for &ci in &occurs[v] {
            match clause_state(&clauses[ci], val) {
                (true, _, _) => {}
                (false, 0, _) => return false,
                (false, 1, Some((u, pol))) => {
                    val[u] = Some(pol);
                    trail.push(u);
                }
                _ => {}
            }
        }
    }
    true
}
