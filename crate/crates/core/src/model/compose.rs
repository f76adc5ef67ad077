//! Parallel composition of TPTGs.
//!
//! Shared actions (names in both alphabets) synchronize: enabling conditions
//! are conjoined, distributions multiplied, resets unioned and action prices
//! summed. Other actions interleave. Location rates add up.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num::Zero;

use super::clock::{ClockConstraint, ClockId};
use super::tptg::{Branch, Edge, LocId, LocOrigin, Location, TargetLabel, Tptg};
use crate::error::{usage, Result};

/// Assigns a product location to a player by name; `None` means the rule
/// does not cover the location.
pub type OwnerFn<'a> = dyn Fn(&[LocOrigin]) -> Option<String> + 'a;

/// Full product `L_a × L_b`, indexed `la * |L_b| + lb`.
pub fn compose(a: &Tptg, b: &Tptg, shared_clocks: &[String], owner: &OwnerFn) -> Result<Tptg> {
    let ctx = Product::new(a, b, shared_clocks, None)?;
    let nb = b.locations.len();
    let pairs: Vec<(LocId, LocId)> =
        (0..a.locations.len()).flat_map(|la| (0..nb).map(move |lb| (la, lb))).collect();
    let index = |la: LocId, lb: LocId| la * nb + lb;
    let mut locations = Vec::with_capacity(pairs.len());
    for &(la, lb) in &pairs {
        locations.push(ctx.location(la, lb, owner, |x, y| index(x, y))?);
    }
    Ok(ctx.finish(locations, index(a.initial, b.initial), &pairs))
}

/// The part of the product reachable from `(l̄_a, l̄_b)` in the discrete
/// location graph, numbered in breadth-first order. Equal to
/// `compose(..).restrict_reachable()` but never materializes the full product.
pub fn compose_reachable(a: &Tptg, b: &Tptg, shared_clocks: &[String], owner: &OwnerFn) -> Result<Tptg> {
    compose_reachable_with(a, b, None, shared_clocks, owner)
}

/// Action alphabets of the two operands. They default to the actions that
/// occur on edges; an explicit alphabet may be larger, so that an action
/// keeps blocking its partner even where no edge of its own remains.
pub type Alphabets<'a> = Option<(&'a BTreeSet<String>, &'a BTreeSet<String>)>;

/// [`compose_reachable`] with explicit alphabets.
pub fn compose_reachable_with(
    a: &Tptg,
    b: &Tptg,
    alphabets: Alphabets,
    shared_clocks: &[String],
    owner: &OwnerFn,
) -> Result<Tptg> {
    let ctx = Product::new(a, b, shared_clocks, alphabets)?;
    let mut ids: HashMap<(LocId, LocId), LocId> = HashMap::new();
    let mut pairs = vec![(a.initial, b.initial)];
    ids.insert((a.initial, b.initial), 0);
    let mut queue = VecDeque::from([(a.initial, b.initial)]);
    let mut locations = Vec::new();
    while let Some((la, lb)) = queue.pop_front() {
        // Successors are numbered in the order the sorted edges mention them,
        // which is the order a breadth-first pass over the full product uses.
        let mut local: Vec<(LocId, LocId)> = Vec::new();
        let mut loc = ctx.location(la, lb, owner, |x, y| match local.iter().position(|&p| p == (x, y)) {
            Some(i) => i,
            None => {
                local.push((x, y));
                local.len() - 1
            }
        })?;
        for e in &mut loc.edges {
            for b in &mut e.branches {
                let key = local[b.target];
                b.target = *ids.entry(key).or_insert_with(|| {
                    pairs.push(key);
                    queue.push_back(key);
                    pairs.len() - 1
                });
            }
        }
        locations.push(loc);
    }
    Ok(ctx.finish(locations, 0, &pairs))
}

struct Product<'m> {
    a: &'m Tptg,
    b: &'m Tptg,
    clocks: Vec<String>,
    b_clock_map: Vec<ClockId>,
    players: Vec<String>,
    price_names: Vec<String>,
    a_price_map: Vec<usize>,
    b_price_map: Vec<usize>,
    a_actions: BTreeSet<String>,
    b_actions: BTreeSet<String>,
}

impl<'m> Product<'m> {
    fn new(a: &'m Tptg, b: &'m Tptg, shared: &[String], alphabets: Alphabets) -> Result<Self> {
        for s in shared {
            if a.clock_id(s).is_none() || b.clock_id(s).is_none() {
                return usage(format!("clock `{s}` is declared shared but is not used by both components"));
            }
        }
        let mut clocks = a.clocks.clone();
        let mut b_clock_map = Vec::with_capacity(b.clocks.len());
        for c in &b.clocks {
            match a.clock_id(c) {
                Some(i) if shared.contains(c) => b_clock_map.push(i),
                Some(_) => {
                    return usage(format!(
                        "clock `{c}` occurs in both components; declare it shared or rename it"
                    ))
                }
                None => {
                    b_clock_map.push(clocks.len());
                    clocks.push(c.clone());
                }
            }
        }
        let mut players = a.players.clone();
        for p in &b.players {
            if !players.contains(p) {
                players.push(p.clone());
            }
        }
        let mut price_names = a.price_names.clone();
        for p in &b.price_names {
            if !price_names.contains(p) {
                price_names.push(p.clone());
            }
        }
        let map = |names: &[String]| names.iter().map(|n| price_names.iter().position(|p| p == n).unwrap()).collect();
        let a_price_map = map(&a.price_names);
        let b_price_map = map(&b.price_names);
        Ok(Product {
            a,
            b,
            clocks,
            b_clock_map,
            players,
            a_actions: match alphabets {
                Some((x, _)) => x.clone(),
                None => a.actions().into_iter().map(String::from).collect(),
            },
            b_actions: match alphabets {
                Some((_, y)) => y.clone(),
                None => b.actions().into_iter().map(String::from).collect(),
            },
            price_names,
            a_price_map,
            b_price_map,
        })
    }

    fn lift_prices(&self, prices: &[u64], map: &[usize]) -> Vec<u64> {
        let mut out = vec![0; self.price_names.len()];
        for (i, &p) in prices.iter().enumerate() {
            out[map[i]] += p;
        }
        out
    }

    fn lift_b(&self, c: &ClockConstraint) -> ClockConstraint {
        c.remap(&self.b_clock_map)
    }

    fn lift_b_resets(&self, r: &[ClockId]) -> Vec<ClockId> {
        r.iter().map(|&x| self.b_clock_map[x]).collect()
    }

    fn location(
        &self,
        la: LocId,
        lb: LocId,
        owner: &OwnerFn,
        mut id: impl FnMut(LocId, LocId) -> LocId,
    ) -> Result<Location> {
        let (ea, eb) = (&self.a.locations[la], &self.b.locations[lb]);
        let mut origin = ea.origin.clone();
        origin.extend(eb.origin.iter().cloned());
        let name = format!("{},{}", ea.name, eb.name);
        let Some(player) = owner(&origin) else {
            return usage(format!("owner assignment does not cover location ({name})"));
        };
        let Some(owner) = self.players.iter().position(|p| *p == player) else {
            return usage(format!("owner assignment names unknown player `{player}`"));
        };
        let mut rates = self.lift_prices(&ea.rates, &self.a_price_map);
        for (r, x) in rates.iter_mut().zip(self.lift_prices(&eb.rates, &self.b_price_map)) {
            *r += x;
        }
        let mut edges: Vec<Edge> = Vec::new();
        for e in &ea.edges {
            if self.b_actions.contains(&e.action) {
                let Some(f) = eb.edges.iter().find(|f| f.action == e.action) else { continue };
                let mut branches = Vec::new();
                for x in &e.branches {
                    for y in &f.branches {
                        let mut resets = x.resets.clone();
                        resets.extend(self.lift_b_resets(&y.resets));
                        branches.push(Branch { prob: &x.prob * &y.prob, resets, target: id(x.target, y.target) });
                    }
                }
                let mut prices = self.lift_prices(&e.prices, &self.a_price_map);
                for (p, x) in prices.iter_mut().zip(self.lift_prices(&f.prices, &self.b_price_map)) {
                    *p += x;
                }
                edges.push(Edge {
                    action: e.action.clone(),
                    enabling: e.enabling.and(&self.lift_b(&f.enabling)),
                    branches: normalize(branches),
                    prices,
                });
            } else {
                let branches =
                    e.branches.iter().map(|x| Branch { target: id(x.target, lb), ..x.clone() }).collect();
                edges.push(Edge {
                    action: e.action.clone(),
                    enabling: e.enabling.clone(),
                    branches: normalize(branches),
                    prices: self.lift_prices(&e.prices, &self.a_price_map),
                });
            }
        }
        for f in &eb.edges {
            if self.a_actions.contains(&f.action) {
                continue;
            }
            let branches = f
                .branches
                .iter()
                .map(|y| Branch {
                    prob: y.prob.clone(),
                    resets: self.lift_b_resets(&y.resets),
                    target: id(la, y.target),
                })
                .collect();
            edges.push(Edge {
                action: f.action.clone(),
                enabling: self.lift_b(&f.enabling),
                branches: normalize(branches),
                prices: self.lift_prices(&f.prices, &self.b_price_map),
            });
        }
        edges.sort_by(|x, y| x.action.cmp(&y.action));
        Ok(Location {
            name,
            origin,
            owner,
            invariant: ea.invariant.and(&self.lift_b(&eb.invariant)),
            rates,
            edges,
        })
    }

    fn finish(self, locations: Vec<Location>, initial: LocId, pairs: &[(LocId, LocId)]) -> Tptg {
        let mut labels: BTreeMap<String, TargetLabel> = BTreeMap::new();
        let names: BTreeSet<&String> = self.a.labels.keys().chain(self.b.labels.keys()).collect();
        for name in names {
            let (ta, tb) = (self.a.labels.get(name), self.b.labels.get(name));
            let locs = pairs
                .iter()
                .enumerate()
                .filter(|(_, (la, lb))| {
                    ta.is_none_or(|t| t.locations.contains(la)) && tb.is_none_or(|t| t.locations.contains(lb))
                })
                .map(|(i, _)| i)
                .collect();
            let mut guard = ta.map(|t| t.guard.clone()).unwrap_or_default();
            if let Some(t) = tb {
                guard = guard.and(&self.lift_b(&t.guard));
            }
            labels.insert(name.clone(), TargetLabel { locations: locs, guard });
        }
        Tptg {
            players: self.players,
            clocks: self.clocks,
            price_names: self.price_names,
            locations,
            initial,
            labels,
        }
    }
}

/// Sorts resets, drops zero-probability branches and merges branches with
/// the same reset set and target.
pub(crate) fn normalize(branches: Vec<Branch>) -> Vec<Branch> {
    let mut out: Vec<Branch> = Vec::with_capacity(branches.len());
    for mut b in branches {
        if b.prob.is_zero() {
            continue;
        }
        b.resets.sort_unstable();
        b.resets.dedup();
        match out.iter_mut().find(|o| o.target == b.target && o.resets == b.resets) {
            Some(o) => o.prob += b.prob,
            None => out.push(b),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::clock::Atom;
    use crate::model::tptg::tests::rat;

    fn any_owner(_: &[LocOrigin]) -> Option<String> {
        Some("p".into())
    }

    /// Two locations `l0 -[act]-> l1` over a private clock.
    fn automaton(comp: &str, clock: &str, act: &str, rate: u64) -> Tptg {
        let loc = |name: &str, edges| Location {
            name: name.into(),
            origin: vec![LocOrigin::plain(comp, name)],
            owner: 0,
            invariant: ClockConstraint::new(vec![Atom::le(0, 3)]),
            rates: vec![rate],
            edges,
        };
        let edge = Edge {
            action: act.into(),
            enabling: ClockConstraint::new(vec![Atom::ge(0, 1)]),
            branches: vec![
                Branch { prob: rat(1, 2), resets: vec![0], target: 1 },
                Branch { prob: rat(1, 2), resets: vec![], target: 0 },
            ],
            prices: vec![2],
        };
        Tptg {
            players: vec!["p".into()],
            clocks: vec![clock.into()],
            price_names: vec!["time".into()],
            locations: vec![loc("l0", vec![edge]), loc("l1", vec![])],
            initial: 0,
            labels: [("end".to_string(), TargetLabel { locations: [1].into(), guard: ClockConstraint::top() })]
                .into(),
        }
    }

    fn idle(rate: u64) -> Tptg {
        Tptg {
            players: vec!["p".into()],
            clocks: vec!["i".into()],
            price_names: vec!["time".into()],
            locations: vec![Location {
                name: "idle".into(),
                origin: vec![LocOrigin::plain("idle", "idle")],
                owner: 0,
                invariant: ClockConstraint::top(),
                rates: vec![rate],
                edges: vec![],
            }],
            initial: 0,
            labels: BTreeMap::new(),
        }
    }

    #[test]
    fn idle_component_only_shifts_rates() {
        let m = automaton("a", "x", "go", 1);
        let c = compose(&m, &idle(5), &[], &any_owner).unwrap();
        assert_eq!(c.locations.len(), 2);
        for (x, y) in m.locations.iter().zip(&c.locations) {
            assert_eq!(y.rates, vec![x.rates[0] + 5]);
            assert_eq!(y.edges, x.edges);
            assert_eq!(y.invariant, x.invariant);
        }
    }

    #[test]
    fn sync_with_point_mass_keeps_distribution() {
        let a = automaton("a", "x", "go", 1);
        let mut b = automaton("b", "y", "go", 1);
        b.locations[0].edges[0].branches = vec![Branch { prob: rat(1, 1), resets: vec![0], target: 1 }];
        let c = compose(&a, &b, &[], &any_owner).unwrap();
        let e = &c.locations[0].edges[0];
        let probs: Vec<_> = e.branches.iter().map(|b| b.prob.clone()).collect();
        assert_eq!(probs, vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(e.branches[0].resets, vec![0, 1]);
        assert_eq!(e.prices, vec![4]);
        assert_eq!(e.enabling.atoms().len(), 2);
    }

    #[test]
    fn undeclared_shared_clock_is_rejected() {
        let a = automaton("a", "x", "go", 1);
        let b = automaton("b", "x", "stop", 1);
        assert!(compose(&a, &b, &[], &any_owner).is_err());
        let c = compose(&a, &b, &["x".into()], &any_owner).unwrap();
        assert_eq!(c.clocks, vec!["x".to_string()]);
    }

    #[test]
    fn partial_owner_is_rejected() {
        let a = automaton("a", "x", "go", 1);
        let b = automaton("b", "y", "stop", 1);
        let owner = |o: &[LocOrigin]| (o[0].location == "l0").then(|| "p".to_string());
        assert!(compose(&a, &b, &[], &owner).is_err());
    }

    #[test]
    fn reachable_product_matches_restricted_full_product() {
        let a = automaton("a", "x", "go", 1);
        let b = automaton("b", "y", "go", 2);
        let full = compose(&a, &b, &[], &any_owner).unwrap().restrict_reachable();
        let reach = compose_reachable(&a, &b, &[], &any_owner).unwrap();
        assert_eq!(full, reach);
        assert_eq!(reach.locations.len(), 4);
    }

    #[test]
    fn composition_is_associative_and_commutative_on_disjoint_alphabets() {
        let a = automaton("a", "x", "go", 1);
        let b = automaton("b", "y", "stop", 2);
        let c = automaton("c", "z", "halt", 3);
        let left = compose(&compose(&a, &b, &[], &any_owner).unwrap(), &c, &[], &any_owner).unwrap();
        let right = compose(&a, &compose(&b, &c, &[], &any_owner).unwrap(), &[], &any_owner).unwrap();
        assert_eq!(left, right);

        let ab = compose(&a, &b, &[], &any_owner).unwrap();
        let ba = compose(&b, &a, &[], &any_owner).unwrap().reorder_clocks(&ab.clocks);
        for la in 0..2 {
            for lb in 0..2 {
                let x = &ab.locations[la * 2 + lb];
                let y = &ba.locations[lb * 2 + la];
                assert_eq!(x.invariant, y.invariant);
                assert_eq!(x.rates, y.rates);
                let acts = |l: &Location| l.edges.iter().map(|e| e.action.clone()).collect::<Vec<_>>();
                assert_eq!(acts(x), acts(y));
                for (e, f) in x.edges.iter().zip(&y.edges) {
                    assert_eq!(e.enabling, f.enabling);
                    let swap = |t: LocId| (t % 2) * 2 + t / 2;
                    let tx: Vec<_> = e.branches.iter().map(|b| (b.prob.clone(), b.resets.clone(), b.target)).collect();
                    let ty: Vec<_> =
                        f.branches.iter().map(|b| (b.prob.clone(), b.resets.clone(), swap(b.target))).collect();
                    assert_eq!(tx, ty);
                }
            }
        }
    }
}
