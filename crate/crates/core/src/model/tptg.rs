use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num::{BigRational, One, Signed, Zero};

use super::clock::{Atom, ClockConstraint, ClockId, Relation};
use crate::diag::Diagnostic;
use crate::error::{usage, Result};
use crate::game::PlayerId;

pub type LocId = usize;

/// Where a (possibly product, possibly unfolded) location came from: one
/// entry per component automaton.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocOrigin {
    pub component: String,
    pub location: String,
    pub vars: Vec<(String, i64)>,
}

impl LocOrigin {
    pub fn plain(component: impl Into<String>, location: impl Into<String>) -> Self {
        LocOrigin { component: component.into(), location: location.into(), vars: Vec::new() }
    }

    pub fn var(&self, name: &str) -> Option<i64> {
        self.vars.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub prob: BigRational,
    /// Sorted, duplicate-free.
    pub resets: Vec<ClockId>,
    pub target: LocId,
}

/// `enab(l, a)` together with `prob(l, a)` and the action price `r_A(l, a)`
/// (one entry per price structure).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub action: String,
    pub enabling: ClockConstraint,
    pub branches: Vec<Branch>,
    pub prices: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub origin: Vec<LocOrigin>,
    pub owner: PlayerId,
    pub invariant: ClockConstraint,
    /// Location rate `r_L(l)` per price structure.
    pub rates: Vec<u64>,
    /// Outgoing edges, at most one per action, sorted by action name.
    pub edges: Vec<Edge>,
}

/// A target predicate: a set of locations, optionally strengthened by a
/// clock constraint (used by time-bounded reachability).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TargetLabel {
    pub locations: BTreeSet<LocId>,
    pub guard: ClockConstraint,
}

/// A turn-based probabilistic timed multi-player game.
///
/// Discrete variables have already been folded into the locations (see
/// [`LocOrigin::vars`]); price structures are named and every location and
/// edge carries one natural-number price per structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tptg {
    pub players: Vec<String>,
    pub clocks: Vec<String>,
    pub price_names: Vec<String>,
    pub locations: Vec<Location>,
    pub initial: LocId,
    pub labels: BTreeMap<String, TargetLabel>,
}

impl Tptg {
    pub fn clock_id(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c == name)
    }

    pub fn player_id(&self, name: &str) -> Option<PlayerId> {
        self.players.iter().position(|p| p == name)
    }

    pub fn price_index(&self, name: &str) -> Result<usize> {
        match self.price_names.iter().position(|p| p == name) {
            Some(i) => Ok(i),
            None => usage(format!(
                "unknown price structure `{name}` (model has: {})",
                self.price_names.join(", ")
            )),
        }
    }

    pub fn location_by_name(&self, name: &str) -> Option<LocId> {
        self.locations.iter().position(|l| l.name == name)
    }

    pub fn actions(&self) -> BTreeSet<&str> {
        self.locations.iter().flat_map(|l| l.edges.iter().map(|e| e.action.as_str())).collect()
    }

    pub fn num_edges(&self) -> usize {
        self.locations.iter().map(|l| l.edges.len()).sum()
    }

    pub fn edge(&self, l: LocId, action: &str) -> Option<&Edge> {
        self.locations.get(l)?.edges.iter().find(|e| e.action == action)
    }

    /// `k_x` for every clock: the largest constant the clock is compared
    /// against in any invariant, enabling condition or target guard, and 0 for
    /// clocks that are never compared.
    pub fn max_constants(&self) -> Vec<u32> {
        let mut k = vec![0u32; self.clocks.len()];
        let mut bump = |c: &ClockConstraint| {
            for a in c.atoms() {
                if let Some(slot) = k.get_mut(a.clock) {
                    *slot = (*slot).max(a.bound);
                }
            }
        };
        for l in &self.locations {
            bump(&l.invariant);
            for e in &l.edges {
                bump(&e.enabling);
            }
        }
        for t in self.labels.values() {
            bump(&t.guard);
        }
        k
    }

    /// Checks the assumptions under which the digital-clocks semantics is
    /// exact: bounded invariants, closed diagonal-free constraints, exact
    /// rational distributions. Also reports structural well-formedness
    /// problems and, as a warning, cycles that might allow time to converge.
    pub fn validate_assumptions(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let nclocks = self.clocks.len();
        let nprices = self.price_names.len();
        if self.initial >= self.locations.len() {
            out.push(Diagnostic::error("initial", format!("initial location {} missing", self.initial)));
        }
        let check_clocks = |c: &ClockConstraint, what: &dyn Fn() -> String, out: &mut Vec<Diagnostic>| {
            if let Some(m) = c.max_clock() {
                if m >= nclocks {
                    out.push(Diagnostic::error("unknown-clock", format!("{} mentions clock index {m}", what())));
                }
            }
        };
        for (li, l) in self.locations.iter().enumerate() {
            if l.owner >= self.players.len() {
                out.push(Diagnostic::error(
                    "partition",
                    format!("location {} owned by unknown player index {}", l.name, l.owner),
                ));
            }
            if !l.invariant.has_upper_bound() {
                out.push(Diagnostic::error(
                    "unbounded-invariant",
                    format!(
                        "invariant of location {} does not bound the passage of time (all invariants must be bounded)",
                        l.name
                    ),
                ));
            }
            check_clocks(&l.invariant, &|| format!("invariant of {}", l.name), &mut out);
            if l.rates.len() != nprices {
                out.push(Diagnostic::error("prices", format!("location {} has {} rates", l.name, l.rates.len())));
            }
            for (ei, e) in l.edges.iter().enumerate() {
                if l.edges[..ei].iter().any(|o| o.action == e.action) {
                    out.push(Diagnostic::error(
                        "duplicate-action",
                        format!("location {} has two edges for action {}", l.name, e.action),
                    ));
                }
                check_clocks(&e.enabling, &|| format!("guard of [{}] in {}", e.action, l.name), &mut out);
                if e.prices.len() != nprices {
                    out.push(Diagnostic::error(
                        "prices",
                        format!("edge [{}] in {} has {} prices", e.action, l.name, e.prices.len()),
                    ));
                }
                let mut mass = BigRational::zero();
                for b in &e.branches {
                    if b.prob.is_negative() || b.prob > BigRational::one() {
                        out.push(Diagnostic::error(
                            "probability-range",
                            format!("edge [{}] in {} has probability {}", e.action, l.name, b.prob),
                        ));
                    }
                    if b.target >= self.locations.len() {
                        out.push(Diagnostic::error(
                            "successor",
                            format!("edge [{}] in {} targets missing location {}", e.action, l.name, b.target),
                        ));
                    }
                    if let Some(&r) = b.resets.iter().find(|&&r| r >= nclocks) {
                        out.push(Diagnostic::error(
                            "unknown-clock",
                            format!("edge [{}] in {} resets clock index {r}", e.action, l.name),
                        ));
                    }
                    mass += &b.prob;
                }
                if !mass.is_one() {
                    out.push(Diagnostic::error(
                        "distribution-mass",
                        format!("edge [{}] in location {li} ({}) has mass {mass}", e.action, l.name),
                    ));
                }
            }
        }
        for (name, t) in &self.labels {
            if let Some(&bad) = t.locations.iter().find(|&&l| l >= self.locations.len()) {
                out.push(Diagnostic::error("label", format!("label {name} names missing location {bad}")));
            }
            check_clocks(&t.guard, &|| format!("label {name}"), &mut out);
        }
        if out.iter().all(|d| !d.is_error()) {
            out.extend(self.zeno_warnings());
        }
        out
    }

    /// Conservative structural non-Zenoness check: every cycle must, for some
    /// clock `x`, both reset `x` and pass a guard `x ≥ c` with `c ≥ 1`.
    /// Strongly connected components where no clock witnesses this get a
    /// warning.
    fn zeno_warnings(&self) -> Vec<Diagnostic> {
        let succ: Vec<Vec<(LocId, &Edge)>> = self
            .locations
            .iter()
            .map(|l| {
                l.edges
                    .iter()
                    .flat_map(|e| e.branches.iter().filter(|b| !b.prob.is_zero()).map(move |b| (b.target, e)))
                    .collect()
            })
            .collect();
        let comp = strongly_connected(self.locations.len(), |l| succ[l].iter().map(|&(t, _)| t).collect());
        let mut out = Vec::new();
        let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
        for c in 0..ncomp {
            let members: Vec<LocId> = (0..self.locations.len()).filter(|&l| comp[l] == c).collect();
            let internal: Vec<(LocId, LocId, &Edge, &[ClockId])> = members
                .iter()
                .flat_map(|&l| {
                    self.locations[l].edges.iter().flat_map(move |e| {
                        e.branches
                            .iter()
                            .filter(|b| !b.prob.is_zero())
                            .map(move |b| (l, b.target, e, b.resets.as_slice()))
                    })
                })
                .filter(|&(_, t, _, _)| comp[t] == c)
                .collect();
            if internal.is_empty() {
                continue;
            }
            let witnessed = (0..self.clocks.len()).any(|x| {
                let guarded = |e: &Edge| {
                    e.enabling.atoms().iter().any(|a| a.clock == x && a.rel == Relation::Ge && a.bound >= 1)
                };
                let unguarded: Vec<(LocId, LocId)> =
                    internal.iter().filter(|(_, _, e, _)| !guarded(e)).map(|&(s, t, _, _)| (s, t)).collect();
                let unreset: Vec<(LocId, LocId)> =
                    internal.iter().filter(|(_, _, _, r)| !r.contains(&x)).map(|&(s, t, _, _)| (s, t)).collect();
                is_acyclic(&unguarded) && is_acyclic(&unreset)
            });
            if !witnessed {
                let names: Vec<&str> =
                    members.iter().take(4).map(|&l| self.locations[l].name.as_str()).collect();
                out.push(Diagnostic::warning(
                    "zeno-cycle",
                    format!(
                        "cycle through {}{} may let time converge (no clock is both reset and lower-bounded on every cycle)",
                        names.join(", "),
                        if members.len() > 4 { ", ..." } else { "" }
                    ),
                ));
            }
        }
        out
    }

    /// Drops locations that are unreachable in the discrete location graph
    /// (clock guards ignored). The result has the same semantics.
    pub fn restrict_reachable(&self) -> Tptg {
        let n = self.locations.len();
        let mut new_id = vec![usize::MAX; n];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([self.initial]);
        new_id[self.initial] = 0;
        order.push(self.initial);
        while let Some(l) = queue.pop_front() {
            for e in &self.locations[l].edges {
                for b in &e.branches {
                    if new_id[b.target] == usize::MAX {
                        new_id[b.target] = order.len();
                        order.push(b.target);
                        queue.push_back(b.target);
                    }
                }
            }
        }
        let locations = order
            .iter()
            .map(|&l| {
                let mut loc = self.locations[l].clone();
                for e in &mut loc.edges {
                    for b in &mut e.branches {
                        b.target = new_id[b.target];
                    }
                }
                loc
            })
            .collect();
        let labels = self
            .labels
            .iter()
            .map(|(name, t)| {
                let locations =
                    t.locations.iter().filter(|&&l| new_id[l] != usize::MAX).map(|&l| new_id[l]).collect();
                (name.clone(), TargetLabel { locations, guard: t.guard.clone() })
            })
            .collect();
        Tptg { locations, initial: 0, labels, ..self.clone() }
    }

    /// Reduces time-bounded reachability of `target` within `bound` time
    /// units to plain reachability: adds a fresh clock that is never reset and
    /// a new label `target ∧ clock ≤ bound`. Returns the new model and the new
    /// label's name.
    pub fn with_time_bound(&self, target: &str, bound: u32) -> Result<(Tptg, String)> {
        let Some(old) = self.labels.get(target) else {
            return usage(format!("unknown label `{target}`"));
        };
        let mut clock = String::from("global_time");
        while self.clock_id(&clock).is_some() {
            clock.push('_');
        }
        let mut m = self.clone();
        let z = m.clocks.len();
        m.clocks.push(clock);
        let mut name = format!("{target}_within_{bound}");
        while m.labels.contains_key(&name) {
            name.push('_');
        }
        let guard = old.guard.and(&ClockConstraint::new(vec![Atom::le(z, bound)]));
        m.labels.insert(name.clone(), TargetLabel { locations: old.locations.clone(), guard });
        Ok((m, name))
    }

    /// Reorders clocks to follow `order` (names); clocks not listed keep
    /// their relative order after the listed ones.
    pub fn reorder_clocks(&self, order: &[String]) -> Tptg {
        let mut names: Vec<String> = order.iter().filter(|c| self.clocks.contains(c)).cloned().collect();
        for c in &self.clocks {
            if !names.contains(c) {
                names.push(c.clone());
            }
        }
        let map: Vec<ClockId> =
            self.clocks.iter().map(|c| names.iter().position(|n| n == c).unwrap()).collect();
        let mut m = self.clone();
        m.clocks = names;
        for l in &mut m.locations {
            l.invariant = l.invariant.remap(&map);
            for e in &mut l.edges {
                e.enabling = e.enabling.remap(&map);
                for b in &mut e.branches {
                    let mut r: Vec<ClockId> = b.resets.iter().map(|&x| map[x]).collect();
                    r.sort_unstable();
                    b.resets = r;
                }
            }
        }
        for t in m.labels.values_mut() {
            t.guard = t.guard.remap(&map);
        }
        m
    }
}

fn is_acyclic(edges: &[(LocId, LocId)]) -> bool {
    let mut nodes: Vec<LocId> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let idx = |l: LocId| nodes.binary_search(&l).unwrap();
    let mut indeg = vec![0usize; nodes.len()];
    let mut adj = vec![Vec::new(); nodes.len()];
    for &(a, b) in edges {
        adj[idx(a)].push(idx(b));
        indeg[idx(b)] += 1;
    }
    let mut stack: Vec<usize> = (0..nodes.len()).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = stack.pop() {
        seen += 1;
        for &j in &adj[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                stack.push(j);
            }
        }
    }
    seen == nodes.len()
}

/// Iterative Tarjan; returns a component index per node.
pub(crate) fn strongly_connected(n: usize, succ: impl Fn(usize) -> Vec<usize>) -> Vec<usize> {
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, Vec<usize>, usize)> = vec![(root, succ(root), 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some((v, succs, i)) = call.last_mut() {
            let v = *v;
            if *i < succs.len() {
                let w = succs[*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    let s = succ(w);
                    call.push((w, s, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some((u, _, _)) = call.last() {
                    low[*u] = low[*u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::clock::Atom;

    pub(crate) fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// One location with invariant `x ≤ bound` and no edges.
    pub(crate) fn single(bound: u32) -> Tptg {
        Tptg {
            players: vec!["p".into()],
            clocks: vec!["x".into()],
            price_names: vec!["time".into()],
            locations: vec![Location {
                name: "l".into(),
                origin: vec![LocOrigin::plain("a", "l")],
                owner: 0,
                invariant: ClockConstraint::new(vec![Atom::le(0, bound)]),
                rates: vec![1],
                edges: vec![],
            }],
            initial: 0,
            labels: BTreeMap::new(),
        }
    }

    #[test]
    fn max_constant_of_single_atom() {
        assert_eq!(single(7).max_constants(), vec![7]);
    }

    #[test]
    fn uncompared_clock_has_constant_zero() {
        let mut m = single(3);
        m.clocks.push("y".into());
        assert_eq!(m.max_constants(), vec![3, 0]);
    }

    #[test]
    fn unbounded_invariant_is_reported() {
        let mut m = single(3);
        m.locations[0].invariant = ClockConstraint::top();
        let d = m.validate_assumptions();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "unbounded-invariant");
    }

    #[test]
    fn short_distribution_is_reported_with_its_mass() {
        let mut m = single(3);
        m.locations[0].edges.push(Edge {
            action: "a".into(),
            enabling: ClockConstraint::top(),
            branches: vec![
                Branch { prob: rat(1, 2), resets: vec![0], target: 0 },
                Branch { prob: rat(2, 5), resets: vec![], target: 0 },
            ],
            prices: vec![0],
        });
        let d = m.validate_assumptions();
        assert_eq!(d.iter().filter(|d| d.code == "distribution-mass").count(), 1);
        assert!(d[0].message.contains("9/10"), "{}", d[0].message);
    }

    #[test]
    fn instantaneous_loop_gets_zeno_warning() {
        let mut m = single(3);
        m.locations[0].edges.push(Edge {
            action: "a".into(),
            enabling: ClockConstraint::top(),
            branches: vec![Branch { prob: rat(1, 1), resets: vec![], target: 0 }],
            prices: vec![0],
        });
        let d = m.validate_assumptions();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "zeno-cycle");
        assert!(!d[0].is_error());
        // Reset plus a positive lower bound makes every traversal take time.
        m.locations[0].edges[0].enabling = ClockConstraint::new(vec![Atom::ge(0, 1)]);
        m.locations[0].edges[0].branches[0].resets = vec![0];
        assert!(m.validate_assumptions().is_empty());
    }

    #[test]
    fn time_bound_adds_fresh_clock_and_label() {
        let mut m = single(3);
        m.labels.insert("goal".into(), TargetLabel { locations: [0].into(), guard: ClockConstraint::top() });
        let (b, name) = m.with_time_bound("goal", 5).unwrap();
        assert_eq!(b.clocks.len(), 2);
        assert_eq!(b.max_constants(), vec![3, 5]);
        assert_eq!(b.labels[&name].guard.atoms(), &[Atom::le(1, 5)]);
        assert_eq!(b.locations, m.locations);
        assert!(m.with_time_bound("nope", 1).is_err());
    }

    #[test]
    fn tarjan_finds_cycles() {
        let adj = [vec![1], vec![2], vec![0], vec![3], vec![]];
        let c = strongly_connected(5, |v| adj[v].clone());
        assert_eq!(c[0], c[1]);
        assert_eq!(c[1], c[2]);
        assert_ne!(c[0], c[3]);
        assert_ne!(c[3], c[4]);
    }
}
