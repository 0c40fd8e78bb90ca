//! Small CDCL solver (two watched literals, first-UIP learning, activity
//! ordering, Luby restarts), plus a Tseitin encoder for propositional
//! formulas. Instances produced by the prover have at most a
//! few thousand variables.

use std::collections::HashMap;

/// Propositional formula over numbered variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(bool),
    Var(u32),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::Const(b) => Formula::Const(!b),
            Formula::Not(g) => *g,
            g => Formula::Not(Box::new(g)),
        }
    }

    pub fn and(fs: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::Const(true) => {}
                Formula::Const(false) => return Formula::Const(false),
                Formula::And(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Formula::Const(true),
            1 => out.pop().unwrap_or(Formula::Const(true)),
            _ => Formula::And(out),
        }
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::Const(false) => {}
                Formula::Const(true) => return Formula::Const(true),
                Formula::Or(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Formula::Const(false),
            1 => out.pop().unwrap_or(Formula::Const(false)),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or(vec![Formula::not(a), b])
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(vec![Formula::implies(a.clone(), b.clone()), Formula::implies(b, a)])
    }
}

/// A literal: variable index times two, plus one when negated.
type Lit = u32;

fn neg(l: Lit) -> Lit {
    l ^ 1
}

#[derive(Debug, Default)]
pub struct Solver {
    nvars: u32,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    units: Vec<Lit>,
    trivially_unsat: bool,
    cache: HashMap<Formula, Lit>,
}

impl Solver {
    pub fn new() -> Self {
        Solver::default()
    }

    /// A fresh variable not tied to any formula.
    pub fn fresh(&mut self) -> u32 {
        let v = self.nvars;
        self.nvars += 1;
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        v
    }

    /// Reserves variables `0..n` for formula `Var`s.
    pub fn reserve(&mut self, n: u32) {
        while self.nvars < n {
            self.fresh();
        }
    }

    pub fn add_clause(&mut self, mut lits: Vec<Lit>) {
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] == neg(w[1])) {
            return;
        }
        match lits.len() {
            0 => self.trivially_unsat = true,
            1 => self.units.push(lits[0]),
            _ => {
                let i = self.clauses.len();
                self.watches[lits[0] as usize].push(i);
                self.watches[lits[1] as usize].push(i);
                self.clauses.push(lits);
            }
        }
    }

    fn encode(&mut self, f: &Formula) -> Lit {
        match f {
            Formula::Var(v) => {
                self.reserve(v + 1);
                v * 2
            }
            Formula::Not(g) => neg(self.encode(g)),
            Formula::Const(b) => {
                let t = self.encode(&Formula::And(vec![]));
                if *b {
                    t
                } else {
                    neg(t)
                }
            }
            Formula::And(gs) | Formula::Or(gs) => {
                if let Some(l) = self.cache.get(f) {
                    return *l;
                }
                let is_and = matches!(f, Formula::And(_));
                let subs: Vec<Lit> = gs.iter().map(|g| self.encode(g)).collect();
                let x = self.fresh() * 2;
                if is_and {
                    for &s in &subs {
                        self.add_clause(vec![neg(x), s]);
                    }
                    let mut c: Vec<Lit> = subs.iter().map(|&s| neg(s)).collect();
                    c.push(x);
                    self.add_clause(c);
                } else {
                    for &s in &subs {
                        self.add_clause(vec![x, neg(s)]);
                    }
                    let mut c = subs.clone();
                    c.push(neg(x));
                    self.add_clause(c);
                }
                self.cache.insert(f.clone(), x);
                x
            }
        }
    }

    /// Adds `f` as a constraint.
    pub fn assert(&mut self, f: &Formula) {
        match f {
            Formula::Const(true) => {}
            Formula::Const(false) => self.trivially_unsat = true,
            Formula::And(gs) => {
                for g in gs {
                    self.assert(g);
                }
            }
            Formula::Or(gs) => {
                let c: Vec<Lit> = gs.iter().map(|g| self.encode(g)).collect();
                self.add_clause(c);
            }
            g => {
                let l = self.encode(g);
                self.add_clause(vec![l]);
            }
        }
    }

    /// Satisfiability, with a model over all variables when satisfiable.
    pub fn solve(&mut self) -> Option<Vec<bool>> {
        if self.trivially_unsat {
            return None;
        }
        let n = self.nvars as usize;
        let mut st = State {
            assign: vec![None; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            phase: vec![false; n],
            seen: vec![false; n],
        };
        for &u in &self.units.clone() {
            match st.value(u) {
                Some(false) => return None,
                Some(true) => {}
                None => st.enqueue(u, None),
            }
        }
        let mut conflicts = 0u64;
        let mut restart = 0u32;
        let mut limit = 64 * luby(restart);
        loop {
            if let Some(confl) = self.propagate(&mut st) {
                if st.trail_lim.is_empty() {
                    return None;
                }
                let (learnt, back) = self.analyze(&mut st, confl);
                st.cancel_until(back);
                if learnt.len() == 1 {
                    st.enqueue(learnt[0], None);
                } else {
                    let ci = self.clauses.len();
                    self.watches[learnt[0] as usize].push(ci);
                    self.watches[learnt[1] as usize].push(ci);
                    let first = learnt[0];
                    self.clauses.push(learnt);
                    st.enqueue(first, Some(ci));
                }
                st.var_inc /= 0.95;
                conflicts += 1;
                if conflicts >= limit {
                    conflicts = 0;
                    restart += 1;
                    limit = 64 * luby(restart);
                    st.cancel_until(0);
                }
                continue;
            }
            let next = (0..n)
                .filter(|&v| st.assign[v].is_none())
                .max_by(|&a, &b| st.activity[a].total_cmp(&st.activity[b]).then(b.cmp(&a)));
            match next {
                None => return Some(st.assign.iter().map(|a| a.unwrap_or(false)).collect()),
                Some(v) => {
                    st.trail_lim.push(st.trail.len());
                    let lit = v as Lit * 2 + if st.phase[v] { 0 } else { 1 };
                    st.enqueue(lit, None);
                }
            }
        }
    }

    /// First-UIP learnt clause (asserting literal first, then one from the
    /// backjump level) and the level to return to.
    fn analyze(&self, st: &mut State, mut confl: usize) -> (Vec<Lit>, usize) {
        let current = st.trail_lim.len() as u32;
        let mut learnt: Vec<Lit> = vec![0];
        let mut pending = 0;
        let mut p: Option<Lit> = None;
        let mut idx = st.trail.len();
        loop {
            let c = &self.clauses[confl];
            let skip = usize::from(p.is_some());
            for &q in &c[skip..] {
                let v = (q >> 1) as usize;
                if !st.seen[v] && st.level[v] > 0 {
                    st.seen[v] = true;
                    st.bump(v);
                    if st.level[v] == current {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if st.seen[(st.trail[idx] >> 1) as usize] {
                    break;
                }
            }
            let lit = st.trail[idx];
            let v = (lit >> 1) as usize;
            st.seen[v] = false;
            pending -= 1;
            p = Some(lit);
            if pending == 0 {
                break;
            }
            confl = st.reason[v].expect("implied literal has a reason");
        }
        learnt[0] = neg(p.expect("conflict at a decision level"));
        for &q in &learnt[1..] {
            st.seen[(q >> 1) as usize] = false;
        }
        let mut back = 0;
        if learnt.len() > 1 {
            let (mut best, mut lvl) = (1, 0);
            for (i, &q) in learnt.iter().enumerate().skip(1) {
                let l = st.level[(q >> 1) as usize];
                if l > lvl {
                    best = i;
                    lvl = l;
                }
            }
            learnt.swap(1, best);
            back = lvl as usize;
        }
        (learnt, back)
    }

    /// Unit propagation; the index of a falsified clause on conflict.
    fn propagate(&mut self, st: &mut State) -> Option<usize> {
        while st.qhead < st.trail.len() {
            let p = st.trail[st.qhead];
            st.qhead += 1;
            let false_lit = neg(p);
            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let mut i = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                let c = &mut self.clauses[ci];
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                if st.value(c[0]) == Some(true) {
                    i += 1;
                    continue;
                }
                if let Some(k) = (2..c.len()).find(|&k| st.value(c[k]) != Some(false)) {
                    c.swap(1, k);
                    let nl = c[1];
                    self.watches[nl as usize].push(ci);
                    ws.swap_remove(i);
                    continue;
                }
                match st.value(c[0]) {
                    Some(false) => {
                        conflict = Some(ci);
                        break;
                    }
                    None => {
                        let l = c[0];
                        st.enqueue(l, Some(ci));
                    }
                    Some(true) => {}
                }
                i += 1;
            }
            let rest = std::mem::take(&mut self.watches[false_lit as usize]);
            ws.extend(rest);
            self.watches[false_lit as usize] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }
}

/// The Luby restart sequence 1 1 2 1 1 2 4 ...
fn luby(mut i: u32) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < u64::from(i) + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut x = u64::from(i);
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    i = seq;
    1 << i
}

struct State {
    assign: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    phase: Vec<bool>,
    seen: Vec<bool>,
}

impl State {
    fn value(&self, l: Lit) -> Option<bool> {
        self.assign[(l >> 1) as usize].map(|v| v != (l & 1 == 1))
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = (l >> 1) as usize;
        self.assign[v] = Some(l & 1 == 0);
        self.level[v] = self.trail_lim.len() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn cancel_until(&mut self, level: usize) {
        if self.trail_lim.len() <= level {
            return;
        }
        let mark = self.trail_lim[level];
        for l in self.trail.drain(mark..) {
            let v = (l >> 1) as usize;
            self.phase[v] = l & 1 == 0;
            self.assign[v] = None;
            self.reason[v] = None;
        }
        self.trail_lim.truncate(level);
        self.qhead = mark;
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
    }
}

/// Satisfiability of `f` over `nvars` free variables.
pub fn satisfiable(f: &Formula, nvars: u32) -> Option<Vec<bool>> {
    let mut s = Solver::new();
    s.reserve(nvars);
    s.assert(f);
    s.solve().map(|mut m| {
        m.truncate(nvars as usize);
        m
    })
}
