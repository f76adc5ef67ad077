//! Generators for the two case-study model families.

use std::str::FromStr;

use num::{BigInt, BigRational, Integer, One, Signed};

use super::ast::*;
use crate::error::{usage, Error, Result};

/// Expression denoting `r` exactly: a decimal literal when `r` has a finite
/// decimal expansion, a quotient otherwise.
pub fn rational_expr(r: &BigRational) -> Expr {
    if r.is_negative() {
        return Expr::Neg(Box::new(rational_expr(&-r)));
    }
    let (n, d) = (r.numer().clone(), r.denom().clone());
    let mut rest = d.clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    while rest.is_multiple_of(&two) {
        rest /= &two;
        twos += 1;
    }
    while rest.is_multiple_of(&five) {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return Expr::bin(BinOp::Div, Expr::Num(n.to_string()), Expr::Num(d.to_string()));
    }
    let digits = twos.max(fives);
    if digits == 0 {
        return Expr::Num(n.to_string());
    }
    let scaled = &n * BigInt::from(10).pow(digits) / &d;
    let s = format!("{:0>width$}", scaled.to_string(), width = digits as usize + 1);
    let (int, frac) = s.split_at(s.len() - digits as usize);
    Expr::Num(format!("{int}.{frac}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Honest,
    Malicious1,
    Malicious2,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "honest" => Ok(Variant::Honest),
            "malicious1" => Ok(Variant::Malicious1),
            "malicious2" => Ok(Variant::Malicious2),
            _ => usage(format!("unknown variant `{s}` (expected honest, malicious1 or malicious2)")),
        }
    }
}

const NOWHERE: Pos = Pos { line: 0, column: 0 };

fn id(s: &str) -> Expr {
    Expr::ident(s)
}

fn num(n: impl ToString) -> Expr {
    Expr::num(n)
}

fn le(x: &str, e: Expr) -> BExpr {
    BExpr::cmp(CmpOp::Le, id(x), e)
}

fn ge(x: &str, e: Expr) -> BExpr {
    BExpr::cmp(CmpOp::Ge, id(x), e)
}

fn eq(x: &str, e: Expr) -> BExpr {
    BExpr::cmp(CmpOp::Eq, id(x), e)
}

fn conj(parts: impl IntoIterator<Item = BExpr>) -> BExpr {
    parts.into_iter().fold(BExpr::True, BExpr::and)
}

fn disj(parts: impl IntoIterator<Item = BExpr>) -> BExpr {
    parts.into_iter().fold(BExpr::False, BExpr::or)
}

fn branch(prob: Option<Expr>, resets: &[&str], target: &str, updates: Vec<(String, Expr)>) -> BranchDecl {
    BranchDecl { prob, resets: resets.iter().map(|s| s.to_string()).collect(), target: target.into(), updates }
}

fn goto(resets: &[&str], target: &str) -> BranchDecl {
    branch(None, resets, target, Vec::new())
}

fn edge(action: &str, guard: BExpr, branches: Vec<BranchDecl>) -> EdgeDecl {
    EdgeDecl { action: action.into(), guard, branches, prices: Vec::new(), pos: NOWHERE }
}

fn location(name: &str, invariant: BExpr, rates: Vec<(&str, Expr)>, edges: Vec<EdgeDecl>) -> LocDecl {
    LocDecl {
        name: name.into(),
        invariant,
        rates: rates.into_iter().map(|(n, e)| (n.to_string(), e)).collect(),
        edges,
        pos: NOWHERE,
    }
}

fn constant(name: &str, value: Expr) -> ConstDecl {
    ConstDecl { name: name.into(), value, pos: NOWHERE }
}

fn prop(kind: PropKind, label: &str, price: Option<&str>, coalition: &[&str]) -> PropDecl {
    PropDecl {
        kind,
        label: label.into(),
        bound: None,
        price: price.map(String::from),
        coalition: coalition.iter().map(|s| s.to_string()).collect(),
        pos: NOWHERE,
    }
}

fn owner_rule(pred: Option<BExpr>, player: &str) -> OwnerRule {
    OwnerRule { pred, player: player.into(), pos: NOWHERE }
}

fn label(name: &str, pred: BExpr) -> LabelDecl {
    LabelDecl { name: name.into(), pred, pos: NOWHERE }
}

fn one_minus(e: Expr) -> Expr {
    Expr::bin(BinOp::Sub, num(1), e)
}

/// The originator/recipient information-transfer protocol.
///
/// `O` sends a message after between `md` and `MD` time units; `R` must
/// acknowledge it between `ad` and `AD` time units later. After each
/// acknowledgement the message just sent was the last one with probability
/// `p`, which realizes the geometric choice of the number of messages one
/// round at a time. `R` controls the location where `O` waits for the
/// acknowledgement.
///
/// Malicious recipients may stop acknowledging; `O` then times out after
/// `AD` and declares cheating. In version 1 `R` can instead guess that the
/// current message is the last one (right with probability `p`). Version 2
/// adds a decoder that succeeds with probability 1/4; a decoded message
/// reveals whether it is the last one. A decoded non-last message is
/// acknowledged through `ack_nl`, after which `O` continues with the next
/// message; a failed decoding leaves `R` with the choices of version 1.
pub fn gen_nonrepudiation(variant: Variant, p: &BigRational) -> Result<Model> {
    if !p.is_positive() || *p > BigRational::one() {
        return usage(format!("p must lie in (0,1], got {p}"));
    }
    let malicious = variant != Variant::Honest;
    let rate = || vec![("time", num(1))];
    let mut o_wait = vec![edge(
        "ack",
        ge("x", id("ad")),
        vec![branch(Some(id("p")), &["x"], "o_done", vec![]), branch(Some(one_minus(id("p"))), &["x"], "o_send", vec![])],
    )];
    if variant == Variant::Malicious2 {
        o_wait.push(edge("ack_nl", ge("x", id("ad")), vec![goto(&["x"], "o_send")]));
    }
    if malicious {
        o_wait.push(edge("timeout", ge("x", id("AD")), vec![goto(&["x"], "o_cheat")]));
    }
    let mut o_locs = vec![
        location("o_send", le("x", id("MD")), rate(), vec![edge("msg", ge("x", id("md")), vec![goto(&["x"], "o_wait")])]),
        location("o_wait", le("x", id("AD")), rate(), o_wait),
        location("o_done", le("x", num(0)), rate(), vec![]),
    ];
    if malicious {
        o_locs.push(location("o_cheat", le("x", num(0)), rate(), vec![]));
    }
    let guess = || {
        edge(
            "guess",
            BExpr::True,
            vec![branch(Some(id("p")), &[], "r_gain", vec![]), branch(Some(one_minus(id("p"))), &[], "r_wrong", vec![])],
        )
    };
    let mut r_recv = vec![edge("ack", BExpr::True, vec![goto(&[], "r_wait")])];
    if malicious {
        r_recv.push(guess());
    }
    if variant == Variant::Malicious2 {
        let quarter = |e: Expr| Expr::bin(BinOp::Div, e, num(4));
        r_recv.push(edge(
            "decode",
            BExpr::True,
            vec![
                branch(Some(quarter(id("p"))), &[], "r_gain", vec![]),
                branch(Some(quarter(one_minus(id("p")))), &[], "r_notlast", vec![]),
                branch(Some(Expr::bin(BinOp::Div, num(3), num(4))), &[], "r_failed", vec![]),
            ],
        ));
    }
    let mut r_locs = vec![
        location("r_wait", BExpr::True, vec![], vec![edge("msg", BExpr::True, vec![goto(&[], "r_recv")])]),
        location("r_recv", BExpr::True, vec![], r_recv),
    ];
    if variant == Variant::Malicious2 {
        r_locs.push(location("r_notlast", BExpr::True, vec![], vec![edge("ack_nl", BExpr::True, vec![goto(&[], "r_wait")])]));
        r_locs.push(location(
            "r_failed",
            BExpr::True,
            vec![],
            vec![edge("ack", BExpr::True, vec![goto(&[], "r_wait")]), guess()],
        ));
    }
    if malicious {
        r_locs.push(location("r_gain", BExpr::True, vec![], vec![]));
        r_locs.push(location("r_wrong", BExpr::True, vec![], vec![]));
    }
    let at = |c: &str, l: &str| BExpr::At(c.into(), l.into());
    let (gain, cheat) = if malicious { (at("R", "r_gain"), at("O", "o_cheat")) } else { (BExpr::False, BExpr::False) };
    let props = if malicious {
        vec![
            prop(PropKind::Pmax, "r_gains_info", None, &["R"]),
            prop(PropKind::Pmax, "r_gains_info", None, &["O", "R"]),
        ]
    } else {
        vec![
            prop(PropKind::Pmax, "terminated_ok", None, &["O", "R"]),
            prop(PropKind::Emin, "terminated_ok", Some("time"), &["O", "R"]),
        ]
    };
    Ok(Model {
        consts: vec![
            constant("p", rational_expr(p)),
            constant("md", num(2)),
            constant("MD", num(9)),
            constant("ad", num(1)),
            constant("AD", num(5)),
        ],
        players: vec!["O".into(), "R".into()],
        clocks: vec!["x".into()],
        prices: vec!["time".into()],
        automata: vec![
            Automaton { name: "O".into(), vars: vec![], init: "o_send".into(), locations: o_locs, pos: NOWHERE },
            Automaton { name: "R".into(), vars: vec![], init: "r_wait".into(), locations: r_locs, pos: NOWHERE },
        ],
        system: vec!["O".into(), "R".into()],
        owner: vec![owner_rule(Some(at("O", "o_wait")), "R"), owner_rule(None, "O")],
        labels: vec![label("terminated_ok", at("O", "o_done")), label("r_gains_info", gain), label("o_declares_cheat", cheat)],
        props,
    })
}

/// Tasks of the expression `D×(C×(A+B)) + ((A+B)+(C×D))`: whether each is a
/// multiplication, and the tasks it depends on.
const TASKS: [(bool, &[usize]); 6] = [(false, &[]), (true, &[]), (true, &[1]), (false, &[1, 2]), (true, &[3]), (false, &[4, 5])];

/// Per processor: add time, multiply time, idle power, active power.
const PROCESSORS: [(u32, u32, u32, u32); 2] = [(2, 3, 10, 90), (5, 7, 20, 30)];

/// Two-processor scheduling of the six-task expression graph with at most
/// `k1`/`k2` faults per processor, each causing a failure with probability
/// `p`.
///
/// Task status `tJ` is 0 (waiting), `I` (running on processor `I`) or 3
/// (done). The scheduler assigns ready tasks to idle processors in its
/// urgent location `decide`, then passes control to the environment, which
/// picks execution times and fault instants. A failed task becomes waiting
/// again.
pub fn gen_taskgraph(k1: u32, k2: u32, p: &BigRational) -> Result<Model> {
    if p.is_negative() || *p > BigRational::one() {
        return usage(format!("p must lie in [0,1], got {p}"));
    }
    let t = |j: usize| format!("t{j}");
    let status = |j: usize, v: u32| eq(&t(j), num(v));
    let mut decide = Vec::new();
    for i in 1..=2u32 {
        for (j0, (_, deps)) in TASKS.iter().enumerate() {
            let j = j0 + 1;
            let guard = conj(
                std::iter::once(status(j, 0))
                    .chain(deps.iter().map(|&d| status(d, 3)))
                    .chain((1..=6).map(|k| BExpr::cmp(CmpOp::Ne, id(&t(k)), num(i)))),
            );
            decide.push(edge(&format!("p{i}_t{j}"), guard, vec![branch(None, &[], "decide", vec![(t(j), num(i))])]));
        }
    }
    let busy = disj((1..=6).flat_map(|j| [status(j, 1), status(j, 2)]));
    decide.push(edge("pass", busy, vec![goto(&["u"], "run")]));
    let mut run = Vec::new();
    for i in 1..=2u32 {
        for j in 1..=6 {
            run.push(edge(&format!("p{i}_done"), status(j, i), vec![branch(None, &["u"], "decide", vec![(t(j), num(3))])]));
        }
        for j in 1..=6 {
            run.push(edge(&format!("p{i}_fail"), status(j, i), vec![branch(None, &["u"], "decide", vec![(t(j), num(0))])]));
        }
        run.push(edge(&format!("p{i}_fault"), BExpr::True, vec![goto(&[], "run")]));
    }
    let time = || vec![("time", num(1))];
    let sched = Automaton {
        name: "sched".into(),
        vars: (1..=6).map(|j| VarDecl { name: t(j), lo: num(0), hi: num(3), init: num(0), pos: NOWHERE }).collect(),
        init: "decide".into(),
        locations: vec![location("decide", le("u", num(0)), time(), decide), location("run", BExpr::True, time(), run)],
        pos: NOWHERE,
    };
    let mut automata = vec![sched];
    for (i0, &(add, mult, idle_w, active_w)) in PROCESSORS.iter().enumerate() {
        let i = i0 + 1;
        let (name, x, k) = (format!("p{i}"), format!("x{i}"), format!("K{i}"));
        let idle_edges = TASKS
            .iter()
            .enumerate()
            .map(|(j0, (is_mult, _))| {
                edge(&format!("p{i}_t{}", j0 + 1), BExpr::True, vec![goto(&[&x], if *is_mult { "mult" } else { "add" })])
            })
            .collect();
        let bump = || vec![("faults".to_string(), Expr::bin(BinOp::Add, id("faults"), num(1)))];
        let busy = |loc: &str, dur: u32| {
            location(
                loc,
                le(&x, num(dur)),
                vec![("energy", num(active_w))],
                vec![
                    edge(&format!("p{i}_done"), BExpr::True, vec![goto(&[], "idle")]),
                    edge(
                        &format!("p{i}_fault"),
                        BExpr::cmp(CmpOp::Lt, id("faults"), id(&k)),
                        vec![
                            branch(Some(id("p")), &[&x], "failed", bump()),
                            branch(Some(one_minus(id("p"))), &[], loc, bump()),
                        ],
                    ),
                ],
            )
        };
        automata.push(Automaton {
            name: name.clone(),
            vars: vec![VarDecl { name: "faults".into(), lo: num(0), hi: id(&k), init: num(0), pos: NOWHERE }],
            init: "idle".into(),
            locations: vec![
                location("idle", BExpr::True, vec![("energy", num(idle_w))], idle_edges),
                busy("add", add),
                busy("mult", mult),
                location(
                    "failed",
                    le(&x, num(0)),
                    vec![("energy", num(active_w))],
                    vec![edge(&format!("p{i}_fail"), BExpr::True, vec![goto(&[], "idle")])],
                ),
            ],
            pos: NOWHERE,
        });
    }
    let all_done = conj((1..=6).map(|j| BExpr::cmp(CmpOp::Eq, Expr::Qual("sched".into(), t(j)), num(3))));
    Ok(Model {
        consts: vec![constant("p", rational_expr(p)), constant("K1", num(k1)), constant("K2", num(k2))],
        players: vec!["sched".into(), "env".into()],
        clocks: vec!["u".into(), "x1".into(), "x2".into()],
        prices: vec!["time".into(), "energy".into()],
        automata,
        system: vec!["sched".into(), "p1".into(), "p2".into()],
        owner: vec![owner_rule(Some(BExpr::At("sched".into(), "decide".into())), "sched"), owner_rule(None, "env")],
        labels: vec![label("all_done", all_done)],
        props: vec![
            prop(PropKind::Emin, "all_done", Some("time"), &["sched"]),
            prop(PropKind::Emin, "all_done", Some("energy"), &["sched"]),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::super::{compile, parse};
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rational_literals() {
        assert_eq!(rational_expr(&r(1, 4)).to_string(), "0.25");
        assert_eq!(rational_expr(&r(1, 100)).to_string(), "0.01");
        assert_eq!(rational_expr(&r(3, 1)).to_string(), "3");
        assert_eq!(rational_expr(&r(1, 3)).to_string(), "1 / 3");
        assert_eq!(rational_expr(&r(0, 1)).to_string(), "0");
    }

    #[test]
    fn generated_models_compile_cleanly_and_round_trip() {
        let mut models = Vec::new();
        for v in [Variant::Honest, Variant::Malicious1, Variant::Malicious2] {
            models.push(gen_nonrepudiation(v, &r(1, 10)).unwrap());
        }
        models.push(gen_taskgraph(1, 1, &r(1, 1)).unwrap());
        models.push(gen_taskgraph(0, 2, &r(1, 3)).unwrap());
        for m in models {
            let c = compile(&m).unwrap();
            assert!(c.warnings.is_empty(), "{:?}", c.warnings);
            let text = m.to_string();
            assert_eq!(parse(&text).unwrap(), m);
        }
    }

    #[test]
    fn zero_faults_means_no_fault_edges() {
        let c = compile(&gen_taskgraph(0, 0, &r(1, 2)).unwrap()).unwrap();
        assert!(c.tptg.locations.iter().all(|l| l.edges.iter().all(|e| !e.action.ends_with("fault"))));
    }

    #[test]
    fn parameters_are_range_checked() {
        assert!(gen_nonrepudiation(Variant::Honest, &r(0, 1)).is_err());
        assert!(gen_taskgraph(1, 1, &r(3, 2)).is_err());
        assert!("sneaky".parse::<Variant>().is_err());
    }
}
