//! Seeded random TPTGs satisfying the digital-clocks assumptions.

use std::collections::BTreeMap;

use num::BigRational;
use rand::Rng;

use super::clock::{Atom, ClockConstraint};
use super::compose::normalize;
use super::tptg::{Branch, Edge, LocOrigin, Location, TargetLabel, Tptg};

pub const GOAL: &str = "goal";

#[derive(Clone, Debug)]
pub struct RandomTptgParams {
    pub max_locations: usize,
    pub clocks: usize,
    pub players: usize,
    pub max_edges: usize,
    pub max_branches: usize,
    pub max_constant: u32,
}

impl Default for RandomTptgParams {
    fn default() -> Self {
        RandomTptgParams { max_locations: 4, clocks: 2, players: 2, max_edges: 2, max_branches: 2, max_constant: 3 }
    }
}

/// The last location is labelled [`GOAL`]. Every invariant bounds clock 0,
/// probabilities are multiples of 1/8.
pub fn random_tptg<R: Rng>(rng: &mut R, p: &RandomTptgParams) -> Tptg {
    let n = rng.gen_range(2..=p.max_locations.max(2));
    let nclocks = p.clocks.max(1);
    let kmax = p.max_constant.max(1);
    let atom = |rng: &mut R, upper: bool| {
        let c = rng.gen_range(0..nclocks);
        if upper {
            Atom::le(c, rng.gen_range(1..=kmax))
        } else {
            Atom::ge(c, rng.gen_range(0..=kmax))
        }
    };
    let mut locations = Vec::with_capacity(n);
    for l in 0..n {
        let mut inv = vec![Atom::le(0, rng.gen_range(1..=kmax))];
        if rng.gen_bool(0.3) {
            inv.push(atom(rng, true));
        }
        let mut edges = Vec::new();
        let k = if l + 1 == n { rng.gen_range(0..=1) } else { rng.gen_range(1..=p.max_edges.max(1)) };
        for a in 0..k {
            let mut guard = Vec::new();
            for _ in 0..rng.gen_range(0..=2) {
                let upper = rng.gen_bool(0.4);
                guard.push(atom(rng, upper));
            }
            let nb = rng.gen_range(1..=p.max_branches.max(1));
            let mut units: Vec<i64> = vec![1; nb];
            for _ in nb..8 {
                let i = rng.gen_range(0..nb);
                units[i] += 1;
            }
            let mut branches = Vec::with_capacity(nb);
            for u in units {
                // Resetting clock 0 on most branches keeps random games from
                // being time-locked at the saturation ceiling.
                let mut resets: Vec<usize> = (0..nclocks).filter(|_| rng.gen_bool(0.4)).collect();
                if rng.gen_bool(0.8) && !resets.contains(&0) {
                    resets.push(0);
                }
                branches.push(Branch {
                    prob: BigRational::new(u.into(), 8.into()),
                    resets,
                    target: rng.gen_range(0..n),
                });
            }
            edges.push(Edge {
                action: format!("a{a}"),
                enabling: ClockConstraint::new(guard),
                branches: normalize(branches),
                prices: vec![rng.gen_range(0..=3)],
            });
        }
        locations.push(Location {
            name: format!("l{l}"),
            origin: vec![LocOrigin::plain("r", format!("l{l}"))],
            owner: rng.gen_range(0..p.players.max(1)),
            invariant: ClockConstraint::new(inv),
            rates: vec![rng.gen_range(0..=2)],
            edges,
        });
    }
    let mut labels = BTreeMap::new();
    labels.insert(GOAL.to_string(), TargetLabel { locations: [n - 1].into(), guard: ClockConstraint::top() });
    Tptg {
        players: (1..=p.players.max(1)).map(|i| i.to_string()).collect(),
        clocks: (0..nclocks).map(|i| format!("c{i}")).collect(),
        price_names: vec!["price".into()],
        locations,
        initial: 0,
        labels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_models_have_no_assumption_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = random_tptg(&mut rng, &RandomTptgParams::default());
            let d = m.validate_assumptions();
            assert!(d.iter().all(|d| !d.is_error()), "{d:?}");
        }
    }
}
