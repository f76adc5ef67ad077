//! From syntax tree to [`Tptg`]: integer variables are unfolded into
//! locations, automata are composed, then owners and labels are attached.

use std::collections::{BTreeSet, HashMap, VecDeque};

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use super::ast::*;
use super::error::ParseError;
use crate::diag::Diagnostic;
use crate::error::{Error, Result};
use crate::model::{compose_reachable_with, Atom, Branch, ClockConstraint, Edge, LocOrigin, Location, TargetLabel, Tptg};

/// A property with its bound and price resolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Property {
    pub kind: PropKind,
    pub label: String,
    /// Time bound for probabilities, step bound for expected prices.
    pub bound: Option<u64>,
    pub price: Option<String>,
    pub coalition: Vec<String>,
}

impl std::fmt::Display for Property {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} [F {}]", self.kind.name(), self.label)?;
        if let Some(b) = self.bound {
            write!(f, " <= {b}")?;
        }
        if let Some(p) = &self.price {
            write!(f, " price {p}")?;
        }
        write!(f, " coalition {{{}}}", self.coalition.join(", "))
    }
}

#[derive(Clone, Debug)]
pub struct Compiled {
    pub tptg: Tptg,
    pub props: Vec<Property>,
    pub warnings: Vec<Diagnostic>,
}

fn perr<T>(pos: Pos, msg: impl Into<String>, hint: impl Into<String>) -> Result<T> {
    Err(Error::Parse(ParseError::at(pos, msg, hint)))
}

/// Exact value of a decimal literal.
pub(crate) fn decimal(s: &str) -> BigRational {
    match s.split_once('.') {
        None => BigRational::from_integer(s.parse::<BigInt>().expect("lexer yields digits")),
        Some((int, frac)) => {
            let digits: BigInt = format!("{int}{frac}").parse().expect("lexer yields digits");
            BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32))
        }
    }
}

/// Name lookup for expressions.
struct Env<'a> {
    consts: &'a HashMap<String, BigRational>,
    vars: &'a [(String, i64)],
    /// Product location, for `component.name` references.
    origin: Option<&'a [LocOrigin]>,
    clocks: &'a [String],
}

impl Env<'_> {
    fn eval(&self, e: &Expr) -> std::result::Result<BigRational, String> {
        Ok(match e {
            Expr::Num(n) => decimal(n),
            Expr::Ident(x) => {
                if let Some((_, v)) = self.vars.iter().find(|(n, _)| n == x) {
                    BigRational::from_integer((*v).into())
                } else if let Some(c) = self.consts.get(x) {
                    c.clone()
                } else if self.clocks.contains(x) {
                    return Err(format!("clock `{x}` cannot be used in arithmetic"));
                } else {
                    return Err(format!("unknown identifier `{x}`"));
                }
            }
            Expr::Qual(c, v) => {
                let Some(o) = self.origin.and_then(|o| o.iter().find(|o| o.component == *c)) else {
                    return Err(format!("`{c}.{v}` cannot be used here"));
                };
                match o.var(v) {
                    Some(x) => BigRational::from_integer(x.into()),
                    None => return Err(format!("automaton `{c}` has no variable `{v}`")),
                }
            }
            Expr::Neg(x) => -self.eval(x)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b.is_zero() => return Err("division by zero".into()),
                    BinOp::Div => a / b,
                }
            }
        })
    }

    fn int(&self, e: &Expr) -> std::result::Result<i64, String> {
        let v = self.eval(e)?;
        if !v.is_integer() {
            return Err(format!("`{e}` = {v} is not an integer"));
        }
        v.to_integer().to_i64().ok_or_else(|| format!("`{e}` is out of range"))
    }

    fn nat(&self, e: &Expr) -> std::result::Result<u32, String> {
        let v = self.int(e)?;
        u32::try_from(v).map_err(|_| format!("`{e}` = {v} is not a natural number"))
    }

    fn test(&self, b: &BExpr) -> std::result::Result<bool, String> {
        Ok(match b {
            BExpr::True => true,
            BExpr::False => false,
            BExpr::At(c, l) => match self.origin.and_then(|o| o.iter().find(|o| o.component == *c)) {
                Some(o) => o.location == *l,
                None => return Err(format!("`{c}.{l}` cannot be used here")),
            },
            BExpr::Cmp(op, a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Gt => a > b,
                }
            }
            BExpr::Not(x) => !self.test(x)?,
            BExpr::And(x, y) => self.test(x)? && self.test(y)?,
            BExpr::Or(x, y) => self.test(x)? || self.test(y)?,
        })
    }
}

fn mentions_clock(b: &BExpr, clocks: &[String]) -> bool {
    let expr = |e: &Expr| {
        let mut ids = Vec::new();
        e.idents(&mut ids);
        ids.iter().any(|i| clocks.iter().any(|c| c == i))
    };
    match b {
        BExpr::Cmp(_, x, y) => expr(x) || expr(y),
        BExpr::Not(x) => mentions_clock(x, clocks),
        BExpr::And(x, y) | BExpr::Or(x, y) => mentions_clock(x, clocks) || mentions_clock(y, clocks),
        _ => false,
    }
}

/// A conjunct that is a clock atom, as (clock name, relation ≤?, bound).
fn clock_atom<'a>(b: &'a BExpr, clocks: &[String]) -> Option<(&'a str, bool, &'a Expr)> {
    match b {
        BExpr::Cmp(op @ (CmpOp::Le | CmpOp::Ge), Expr::Ident(x), e) if clocks.contains(x) => {
            Some((x.as_str(), *op == CmpOp::Le, e))
        }
        _ => None,
    }
}

/// Splits a constraint into clock atoms (with names) and data conjuncts.
fn split<'a>(
    b: &'a BExpr,
    env: &Env,
    pos: Pos,
) -> Result<(Vec<(&'a str, bool, u32)>, Vec<&'a BExpr>)> {
    let mut atoms = Vec::new();
    let mut data = Vec::new();
    for c in b.conjuncts() {
        if let Some((x, le, e)) = clock_atom(c, env.clocks) {
            match env.nat(e) {
                Ok(v) => atoms.push((x, le, v)),
                Err(m) => return perr(pos, m, "clock bounds must be natural constants"),
            }
        } else if mentions_clock(c, env.clocks) {
            return perr(pos, "clock constraints cannot appear under `|` or `!`", "conjoin clock bounds with `&`");
        } else {
            data.push(c);
        }
    }
    Ok((atoms, data))
}

fn constraint(atoms: &[(&str, bool, u32)], clock_ids: &[String]) -> ClockConstraint {
    ClockConstraint::new(
        atoms
            .iter()
            .map(|&(x, le, v)| {
                let id = clock_ids.iter().position(|c| c == x).expect("collected clock");
                if le {
                    Atom::le(id, v)
                } else {
                    Atom::ge(id, v)
                }
            })
            .collect(),
    )
}

struct Ctx<'a> {
    model: &'a Model,
    consts: HashMap<String, BigRational>,
}

impl Ctx<'_> {
    fn env<'b>(&'b self, vars: &'b [(String, i64)], origin: Option<&'b [LocOrigin]>) -> Env<'b> {
        Env { consts: &self.consts, vars, origin, clocks: &self.model.clocks }
    }

    fn price_vector(&self, list: &[(String, Expr)], env: &Env, pos: Pos) -> Result<Vec<u64>> {
        let mut out = vec![0; self.model.prices.len()];
        for (name, e) in list {
            let Some(i) = self.model.prices.iter().position(|p| p == name) else {
                return perr(pos, format!("unknown price `{name}`"), format!("declare it with `price {name};`"));
            };
            out[i] += match env.nat(e) {
                Ok(v) => u64::from(v),
                Err(m) => return perr(pos, m, "prices and rates must be natural numbers"),
            };
        }
        Ok(out)
    }

    /// Clocks used by an automaton, in declaration order.
    fn clocks_of(&self, a: &Automaton) -> Vec<String> {
        let mut used = BTreeSet::new();
        let mut visit = |b: &BExpr| {
            for c in b.conjuncts() {
                if let Some((x, ..)) = clock_atom(c, &self.model.clocks) {
                    used.insert(x.to_string());
                }
            }
        };
        for l in &a.locations {
            visit(&l.invariant);
            for e in &l.edges {
                visit(&e.guard);
            }
        }
        for l in &a.locations {
            for e in &l.edges {
                for b in &e.branches {
                    used.extend(b.resets.iter().cloned());
                }
            }
        }
        self.model.clocks.iter().filter(|c| used.contains(*c)).cloned().collect()
    }

    fn unfold(&self, a: &Automaton) -> Result<Tptg> {
        let mut names = BTreeSet::new();
        for l in &a.locations {
            if !names.insert(&l.name) {
                return perr(l.pos, format!("duplicate location `{}`", l.name), "rename one of them");
            }
        }
        let loc_index = |n: &str| a.locations.iter().position(|l| l.name == n);
        let Some(init_loc) = loc_index(&a.init) else {
            return perr(a.pos, format!("initial location `{}` is not defined", a.init), "add the location");
        };
        let empty: Vec<(String, i64)> = Vec::new();
        let cenv = self.env(&empty, None);
        let mut ranges = Vec::new();
        let mut init_vals = Vec::new();
        for v in &a.vars {
            let r = (|| Ok::<_, String>((cenv.int(&v.lo)?, cenv.int(&v.hi)?, cenv.int(&v.init)?)))();
            let (lo, hi, init) = match r {
                Ok(x) => x,
                Err(m) => return perr(v.pos, m, "variable bounds must be integer constants"),
            };
            if !(lo <= init && init <= hi) {
                return perr(v.pos, format!("initial value {init} outside [{lo}..{hi}]"), "adjust the range");
            }
            ranges.push((lo, hi));
            init_vals.push(init);
        }
        let clock_ids = self.clocks_of(a);
        let mut states: Vec<(usize, Vec<i64>)> = vec![(init_loc, init_vals.clone())];
        let mut index: HashMap<(usize, Vec<i64>), usize> = HashMap::from([((init_loc, init_vals), 0)]);
        let mut queue = VecDeque::from([0usize]);
        let mut locations: Vec<Location> = Vec::new();
        while let Some(sid) = queue.pop_front() {
            let (li, vals) = states[sid].clone();
            let decl = &a.locations[li];
            let vars: Vec<(String, i64)> = a.vars.iter().map(|v| v.name.clone()).zip(vals.iter().copied()).collect();
            let env = self.env(&vars, None);
            let (inv_atoms, inv_data) = split(&decl.invariant, &env, decl.pos)?;
            if !inv_data.is_empty() {
                return perr(decl.pos, "invariants may only constrain clocks", "move data conditions into guards");
            }
            let rates = self.price_vector(&decl.rates, &env, decl.pos)?;
            let mut edges: Vec<Edge> = Vec::new();
            for e in &decl.edges {
                let (g_atoms, g_data) = split(&e.guard, &env, e.pos)?;
                let mut enabled = true;
                for d in g_data {
                    match env.test(d) {
                        Ok(b) => enabled &= b,
                        Err(m) => return perr(e.pos, m, "guards may use constants and this automaton's variables"),
                    }
                }
                if !enabled {
                    continue;
                }
                if edges.iter().any(|x| x.action == e.action) {
                    return perr(
                        e.pos,
                        format!("action `{}` is enabled twice in location `{}`", e.action, decl.name),
                        "make the data guards of same-named edges mutually exclusive",
                    );
                }
                let mut total = BigRational::zero();
                let mut branches = Vec::new();
                for b in &e.branches {
                    let p = match &b.prob {
                        None => BigRational::one(),
                        Some(x) => match env.eval(x) {
                            Ok(p) => p,
                            Err(m) => return perr(e.pos, m, "probabilities must be constant expressions"),
                        },
                    };
                    if p.is_negative() || p > BigRational::one() {
                        return perr(e.pos, format!("probability {p} outside [0,1]"), "fix the branch probability");
                    }
                    total += &p;
                    let Some(tl) = loc_index(&b.target) else {
                        return perr(e.pos, format!("unknown location `{}`", b.target), "define the target location");
                    };
                    let mut next = vals.clone();
                    for (v, x) in &b.updates {
                        let Some(vi) = a.vars.iter().position(|d| d.name == *v) else {
                            return perr(e.pos, format!("unknown variable `{v}`"), format!("declare `var {v}` in `{}`", a.name));
                        };
                        let val = match env.int(x) {
                            Ok(val) => val,
                            Err(m) => return perr(e.pos, m, "updates must evaluate to integers"),
                        };
                        let (lo, hi) = ranges[vi];
                        if val < lo || val > hi {
                            return perr(
                                e.pos,
                                format!("update makes `{v}` = {val}, outside [{lo}..{hi}]"),
                                "guard the edge or widen the range",
                            );
                        }
                        next[vi] = val;
                    }
                    if p.is_zero() {
                        continue;
                    }
                    let key = (tl, next);
                    let target = match index.get(&key) {
                        Some(&t) => t,
                        None => {
                            states.push(key.clone());
                            index.insert(key, states.len() - 1);
                            queue.push_back(states.len() - 1);
                            states.len() - 1
                        }
                    };
                    let resets = b
                        .resets
                        .iter()
                        .map(|c| clock_ids.iter().position(|x| x == c).expect("collected clock"))
                        .collect();
                    branches.push(Branch { prob: p, resets, target });
                }
                if total != BigRational::one() {
                    return perr(
                        e.pos,
                        format!("probabilities sum to {total}"),
                        format!("make the branch probabilities of [{}] add up to 1", e.action),
                    );
                }
                edges.push(Edge {
                    action: e.action.clone(),
                    enabling: constraint(&g_atoms, &clock_ids),
                    branches: crate::model::normalize_branches(branches),
                    prices: self.price_vector(&e.prices, &env, e.pos)?,
                });
            }
            edges.sort_by(|x, y| x.action.cmp(&y.action));
            let name = if vars.is_empty() {
                decl.name.clone()
            } else {
                let vs: Vec<String> = vars.iter().map(|(n, v)| format!("{n}={v}")).collect();
                format!("{}[{}]", decl.name, vs.join(";"))
            };
            locations.push(Location {
                name,
                origin: vec![LocOrigin { component: a.name.clone(), location: decl.name.clone(), vars }],
                owner: 0,
                invariant: constraint(&inv_atoms, &clock_ids),
                rates,
                edges,
            });
        }
        Ok(Tptg {
            players: self.model.players.clone(),
            clocks: clock_ids,
            price_names: self.model.prices.clone(),
            locations,
            initial: 0,
            labels: Default::default(),
        })
    }

    /// Checks that a predicate over product locations only mentions
    /// existing components, locations and variables.
    fn check_pred(&self, b: &BExpr, pos: Pos) -> Result<()> {
        let automaton = |c: &str| self.model.automata.iter().find(|a| a.name == c && self.model.system.iter().any(|s| s == c));
        let check_expr = |e: &Expr| -> Result<()> {
            let mut stack = vec![e];
            while let Some(e) = stack.pop() {
                match e {
                    Expr::Qual(c, v) => match automaton(c) {
                        Some(a) if a.vars.iter().any(|d| d.name == *v) => {}
                        Some(_) => return perr(pos, format!("automaton `{c}` has no variable `{v}`"), "check the name"),
                        None => return perr(pos, format!("`{c}` is not a component of the system"), "check the name"),
                    },
                    Expr::Ident(x) if !self.consts.contains_key(x) => {
                        return perr(pos, format!("unknown constant `{x}`"), "refer to variables as `component.var`")
                    }
                    Expr::Neg(x) => stack.push(x),
                    Expr::Bin(_, x, y) => {
                        stack.push(x);
                        stack.push(y);
                    }
                    _ => {}
                }
            }
            Ok(())
        };
        match b {
            BExpr::At(c, l) => match automaton(c) {
                Some(a) if a.locations.iter().any(|d| d.name == *l) => Ok(()),
                Some(a) if a.vars.iter().any(|d| d.name == *l) => {
                    perr(pos, format!("`{c}.{l}` is a variable, not a location"), format!("compare it, e.g. `{c}.{l} == 1`"))
                }
                Some(_) => perr(pos, format!("automaton `{c}` has no location `{l}`"), "check the name"),
                None => perr(pos, format!("`{c}` is not a component of the system"), "check the name"),
            },
            BExpr::Cmp(_, x, y) => {
                check_expr(x)?;
                check_expr(y)
            }
            BExpr::Not(x) => self.check_pred(x, pos),
            BExpr::And(x, y) | BExpr::Or(x, y) => {
                self.check_pred(x, pos)?;
                self.check_pred(y, pos)
            }
            BExpr::True | BExpr::False => Ok(()),
        }
    }
}

/// Compiles a parsed model. Errors in the text carry positions; models that
/// break the structural assumptions are rejected with their diagnostics.
pub fn compile(model: &Model) -> Result<Compiled> {
    let mut ctx = Ctx { model, consts: HashMap::new() };
    for c in &model.consts {
        if ctx.consts.contains_key(&c.name) {
            return perr(c.pos, format!("constant `{}` defined twice", c.name), "remove one definition");
        }
        let v = match ctx.env(&[], None).eval(&c.value) {
            Ok(v) => v,
            Err(m) => return perr(c.pos, m, "constants may only refer to earlier constants"),
        };
        ctx.consts.insert(c.name.clone(), v);
    }
    let no_pos = Pos { line: 1, column: 1 };
    for (what, list) in [("player", &model.players), ("clock", &model.clocks), ("price", &model.prices)] {
        let mut seen = BTreeSet::new();
        for n in list {
            if !seen.insert(n) {
                return perr(no_pos, format!("{what} `{n}` declared twice"), "remove the duplicate");
            }
        }
    }
    if model.players.is_empty() {
        return perr(no_pos, "no players declared", "add `player name;`");
    }
    if model.system.is_empty() {
        return perr(no_pos, "missing `system` declaration", "add `system A || B;`");
    }
    let mut components = Vec::new();
    let mut alphabets: Vec<BTreeSet<String>> = Vec::new();
    for (i, name) in model.system.iter().enumerate() {
        if model.system[..i].contains(name) {
            return perr(no_pos, format!("`{name}` appears twice in the system"), "list each automaton once");
        }
        let Some(a) = model.automata.iter().find(|a| a.name == *name) else {
            return perr(no_pos, format!("unknown automaton `{name}`"), "define it or fix the name");
        };
        components.push(ctx.unfold(a)?);
        alphabets.push(a.locations.iter().flat_map(|l| l.edges.iter().map(|e| e.action.clone())).collect());
    }
    for r in &model.owner {
        if !model.players.contains(&r.player) {
            return perr(r.pos, format!("unknown player `{}`", r.player), format!("declare it with `player {};`", r.player));
        }
        if let Some(p) = &r.pred {
            if mentions_clock(p, &model.clocks) {
                return perr(r.pos, "owner rules cannot test clocks", "use locations and variables only");
            }
            ctx.check_pred(p, r.pos)?;
        }
    }
    let owner = |origin: &[LocOrigin]| -> Option<String> {
        let env = ctx.env(&[], Some(origin));
        model
            .owner
            .iter()
            .find(|r| r.pred.as_ref().is_none_or(|p| env.test(p).unwrap_or(false)))
            .map(|r| r.player.clone())
    };
    let placeholder = |_: &[LocOrigin]| Some(model.players[0].clone());
    let mut iter = components.into_iter();
    let mut m = iter.next().expect("non-empty system");
    let rest: Vec<Tptg> = iter.collect();
    if rest.is_empty() {
        for l in &mut m.locations {
            let Some(p) = owner(&l.origin) else {
                return perr(no_pos, format!("owner rules do not cover location `{}`", l.name), "add an `else` rule");
            };
            l.owner = model.players.iter().position(|x| *x == p).expect("checked player");
        }
    }
    let n = rest.len();
    let mut alpha = alphabets[0].clone();
    for (i, b) in rest.into_iter().enumerate() {
        let shared: Vec<String> = m.clocks.iter().filter(|c| b.clocks.contains(c)).cloned().collect();
        let alphas = Some((&alpha, &alphabets[i + 1]));
        let result = if i + 1 == n {
            compose_reachable_with(&m, &b, alphas, &shared, &owner)
        } else {
            compose_reachable_with(&m, &b, alphas, &shared, &placeholder)
        };
        alpha.extend(alphabets[i + 1].iter().cloned());
        m = match result {
            Ok(x) => x,
            Err(Error::Usage(msg)) => return perr(no_pos, msg, "add an `else` rule to the owner block"),
            Err(e) => return Err(e),
        };
    }
    let mut m = m.reorder_clocks(&model.clocks);
    for l in &model.labels {
        if l.name == crate::game::DEADLOCK_LABEL || m.labels.contains_key(&l.name) {
            return perr(l.pos, format!("label `{}` is reserved or defined twice", l.name), "rename it");
        }
        let env = Env { consts: &ctx.consts, vars: &[], origin: None, clocks: &model.clocks };
        let (atoms, data) = split(&l.pred, &env, l.pos)?;
        for d in &data {
            ctx.check_pred(d, l.pos)?;
        }
        let locations = (0..m.locations.len())
            .filter(|&i| {
                let env = ctx.env(&[], Some(&m.locations[i].origin));
                data.iter().all(|d| env.test(d).unwrap_or(false))
            })
            .collect();
        let guard = constraint(&atoms, &m.clocks);
        m.labels.insert(l.name.clone(), TargetLabel { locations, guard });
    }
    let diags = m.validate_assumptions();
    let (errors, warnings): (Vec<Diagnostic>, Vec<Diagnostic>) = diags.into_iter().partition(|d| d.is_error());
    if !errors.is_empty() {
        return Err(Error::Assumptions(errors));
    }
    let mut props = Vec::new();
    for p in &model.props {
        props.push(resolve_prop(&ctx, &m, p)?);
    }
    Ok(Compiled { tptg: m, props, warnings })
}

fn resolve_prop(ctx: &Ctx, m: &Tptg, p: &PropDecl) -> Result<Property> {
    if !m.labels.contains_key(&p.label) && p.label != crate::game::DEADLOCK_LABEL {
        return perr(p.pos, format!("unknown label `{}`", p.label), format!("define it with `label {} = ...;`", p.label));
    }
    for c in &p.coalition {
        if !m.players.contains(c) {
            return perr(p.pos, format!("unknown player `{c}` in coalition"), "list declared players only");
        }
    }
    let bound = match &p.bound {
        None => None,
        Some(e) => match ctx.env(&[], None).nat(e) {
            Ok(v) => Some(u64::from(v)),
            Err(msg) => return perr(p.pos, msg, "bounds must be natural constants"),
        },
    };
    let price = if p.kind.is_probability() {
        if p.price.is_some() {
            return perr(p.pos, "probability properties take no price", "remove `price ...`");
        }
        None
    } else {
        match &p.price {
            Some(name) if m.price_names.contains(name) => Some(name.clone()),
            Some(name) => return perr(p.pos, format!("unknown price `{name}`"), "declare it with `price`"),
            None if m.price_names.len() == 1 => Some(m.price_names[0].clone()),
            None => return perr(p.pos, "expected-price properties need `price name`", "name the price structure"),
        }
    };
    let mut coalition = p.coalition.clone();
    coalition.dedup();
    Ok(Property { kind: p.kind, label: p.label.clone(), bound, price, coalition })
}
