//! The digital-clocks builder against a naive, independently written
//! enumerator of the same semantics.

use std::collections::{BTreeMap, VecDeque};

use num::{BigRational, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tptg::digital::{self, DEFAULT_STATE_LIMIT};
use tptg::dsl::{self, gen_nonrepudiation, gen_taskgraph, Variant};
use tptg::model::random::{random_tptg, RandomTptgParams};
use tptg::model::{ClockConstraint, Relation, Tptg};

type State = (usize, Vec<u32>);
/// `(delay, action, price, successor distribution)`
type Move = (u64, String, u64, BTreeMap<State, BigRational>);

fn bounds(m: &Tptg) -> Vec<u32> {
    let mut k = vec![0; m.clocks.len()];
    let mut see = |c: &ClockConstraint| {
        for a in c.atoms() {
            k[a.clock] = k[a.clock].max(a.bound);
        }
    };
    for l in &m.locations {
        see(&l.invariant);
        l.edges.iter().for_each(|e| see(&e.enabling));
    }
    m.labels.values().for_each(|t| see(&t.guard));
    k
}

fn sat(c: &ClockConstraint, v: &[u32]) -> bool {
    c.atoms().iter().all(|a| match a.rel {
        Relation::Le => v[a.clock] <= a.bound,
        Relation::Ge => v[a.clock] >= a.bound,
    })
}

/// Reachable states of the digital semantics with their moves.
fn naive(m: &Tptg, price: usize) -> BTreeMap<State, Vec<Move>> {
    let k = bounds(m);
    let init: State = (m.initial, vec![0; k.len()]);
    let mut seen = BTreeMap::new();
    let mut queue = VecDeque::from([init]);
    while let Some(s) = queue.pop_front() {
        if seen.contains_key(&s) {
            continue;
        }
        let loc = &m.locations[s.0];
        // Saturated clocks never change again, so delays past the largest
        // bound plus one are redundant.
        let horizon = k.iter().map(|&b| b + 1).max().unwrap_or(0);
        let mut moves = Vec::new();
        for t in 0..=horizon {
            let v: Vec<u32> = s.1.iter().zip(&k).map(|(&x, &b)| (x + t).min(b + 1)).collect();
            if !sat(&loc.invariant, &v) {
                break;
            }
            if t > 0 && v == s.1.iter().zip(&k).map(|(&x, &b)| (x + t - 1).min(b + 1)).collect::<Vec<_>>() {
                break;
            }
            'edges: for e in &loc.edges {
                if !sat(&e.enabling, &v) {
                    continue;
                }
                let mut dist: BTreeMap<State, BigRational> = BTreeMap::new();
                for b in &e.branches {
                    if b.prob.is_zero() {
                        continue;
                    }
                    let mut w = v.clone();
                    b.resets.iter().for_each(|&c| w[c] = 0);
                    if !sat(&m.locations[b.target].invariant, &w) {
                        continue 'edges;
                    }
                    *dist.entry((b.target, w)).or_insert_with(BigRational::zero) += &b.prob;
                }
                let p = loc.rates.get(price).map_or(0, |r| u64::from(t) * r + e.prices[price]);
                moves.push((u64::from(t), e.action.clone(), p, dist));
            }
        }
        for (.., d) in &moves {
            queue.extend(d.keys().cloned());
        }
        seen.insert(s, moves);
    }
    seen
}

fn agree(m: &Tptg) {
    let price = if m.price_names.is_empty() { None } else { Some(0) };
    let dg = digital::build(m, price, DEFAULT_STATE_LIMIT).unwrap();
    let oracle = naive(m, 0);
    assert_eq!(dg.game.num_states(), oracle.len());
    for (id, ds) in dg.states.iter().enumerate() {
        let key: State = (ds.location, ds.valuation.values().to_vec());
        let expect = oracle.get(&key).unwrap_or_else(|| panic!("builder reached {key:?}, oracle did not"));
        let got = &dg.game.choices[id];
        assert_eq!(got.len(), expect.len(), "move count at {key:?}");
        let mut expect = expect.clone();
        expect.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        for (c, (t, a, p, dist)) in got.iter().zip(&expect) {
            assert_eq!((c.label.duration, &c.label.name), (*t, a));
            if price.is_some() {
                assert_eq!(c.price, *p as f64);
            }
            assert_eq!(c.branches.len(), dist.len());
            for &(succ, q) in &c.branches {
                let s = &dg.states[succ];
                let r = &dist[&(s.location, s.valuation.values().to_vec())];
                assert!((q - r.to_f64().unwrap()).abs() < 1e-12);
            }
        }
        assert_eq!(dg.game.deadlock[id], got.is_empty());
    }
}

#[test]
fn fig1_matches_naive_enumeration() {
    agree(&dsl::load(dsl::FIG1).unwrap().tptg);
}

#[test]
fn taskgraph_without_faults_matches_naive_enumeration() {
    let half = BigRational::new(1.into(), 2.into());
    let m = dsl::compile(&gen_taskgraph(0, 0, &half).unwrap()).unwrap();
    agree(&m.tptg);
}

#[test]
fn nonrepudiation_matches_naive_enumeration() {
    let p = BigRational::new(1.into(), 10.into());
    for v in [Variant::Honest, Variant::Malicious1, Variant::Malicious2] {
        agree(&dsl::compile(&gen_nonrepudiation(v, &p).unwrap()).unwrap().tptg);
    }
}

#[test]
fn random_models_match_naive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let m = random_tptg(&mut rng, &RandomTptgParams::default());
        agree(&m);
    }
}

#[test]
fn time_bound_adds_one_saturating_clock() {
    let m = dsl::load(dsl::FIG1).unwrap().tptg;
    let (b, label) = m.with_time_bound("done", 10).unwrap();
    assert_eq!(b.clocks.len(), m.clocks.len() + 1);
    assert_eq!(*bounds(&b).last().unwrap(), 10);
    agree(&b);
    let dg = digital::build(&b, None, DEFAULT_STATE_LIMIT).unwrap();
    let t = dg.game.target(&label).unwrap();
    for (id, s) in dg.states.iter().enumerate() {
        let hit = s.location == b.location_by_name("done").unwrap() && *s.valuation.values().last().unwrap() <= 10;
        assert_eq!(t[id], hit);
    }
}

#[test]
fn state_limit_is_enforced() {
    let m = dsl::load(dsl::FIG1).unwrap().tptg;
    assert!(matches!(digital::build(&m, None, 10), Err(tptg::Error::StateLimit { limit: 10 })));
}
