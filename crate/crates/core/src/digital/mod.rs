//! The digital-clocks semantics `⟦G⟧_ℕ` of a TPTG as an explicit game.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num::{BigRational, ToPrimitive, Zero};
use serde::Serialize;

use crate::diag::Diagnostic;
use crate::error::{usage, Error, Result};
use crate::game::{ActionLabel, Choice, StateId, Tsg, DEADLOCK_LABEL};
use crate::model::{ClockValuation, LocId, Tptg};

/// Default bound on the number of explored states.
pub const DEFAULT_STATE_LIMIT: usize = 5_000_000;

/// A state `(l, v)` of the digital semantics.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DigitalState {
    pub location: LocId,
    pub valuation: ClockValuation,
}

impl DigitalState {
    pub fn display<'a>(&'a self, m: &'a Tptg) -> impl fmt::Display + 'a {
        StateDisplay { s: self, m }
    }
}

struct StateDisplay<'a> {
    s: &'a DigitalState,
    m: &'a Tptg,
}

impl fmt::Display for StateDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.m.locations[self.s.location].name)?;
        for (i, (c, v)) in self.m.clocks.iter().zip(self.s.valuation.values()).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}={v}")?;
        }
        f.write_str(")")
    }
}

/// A time-action move `(t, a)` out of a digital state.
#[derive(Clone, Debug, PartialEq)]
pub struct Move {
    pub label: ActionLabel,
    /// `t·r_L(l) + r_A(l,a)` for every price structure of the model.
    pub prices: Vec<u64>,
    /// Successors after the μ-sum over reset sets, in first-occurrence order.
    pub branches: Vec<(DigitalState, BigRational)>,
}

/// All moves `(t, a)` available in `s`, ordered by `(t, a)`.
///
/// A move whose distribution would send positive mass to a valuation that
/// violates the successor location's invariant is not a move of the
/// semantics (its successor is not a state); such moves are omitted and
/// counted in the second component.
pub fn enumerate_moves(m: &Tptg, s: &DigitalState) -> (Vec<Move>, usize) {
    let loc = &m.locations[s.location];
    let mut moves = Vec::new();
    let mut dropped = 0;
    let mut t = 0u64;
    loop {
        let v = s.valuation.advance(t);
        // Upper-bound atoms are antitone in t, so the first failure ends the
        // delay range; lower-bound atoms already hold at t = 0.
        if !loc.invariant.holds_on(v.values()) {
            break;
        }
        for e in &loc.edges {
            if !e.enabling.holds_on(v.values()) {
                continue;
            }
            let mut branches: Vec<(DigitalState, BigRational)> = Vec::with_capacity(e.branches.len());
            let mut ok = true;
            for b in &e.branches {
                if b.prob.is_zero() {
                    continue;
                }
                let succ = DigitalState {
                    location: b.target,
                    valuation: v.reset(&b.resets).expect("validated model resets known clocks"),
                };
                if !m.locations[b.target].invariant.holds_on(succ.valuation.values()) {
                    ok = false;
                    break;
                }
                match branches.iter_mut().find(|(d, _)| *d == succ) {
                    Some((_, p)) => *p += &b.prob,
                    None => branches.push((succ, b.prob.clone())),
                }
            }
            if !ok {
                dropped += 1;
                continue;
            }
            let prices = loc.rates.iter().zip(&e.prices).map(|(r, a)| t * r + a).collect();
            moves.push(Move { label: ActionLabel::new(t, e.action.clone()), prices, branches });
        }
        // Once every clock is saturated, further delay changes nothing.
        if (0..v.len()).all(|x| v.values()[x] == v.ceiling(x)) {
            break;
        }
        t += 1;
    }
    (moves, dropped)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BuildStats {
    pub states: usize,
    pub transitions: usize,
    pub branches: usize,
    pub states_per_player: Vec<(String, usize)>,
    pub deadlocks: usize,
    /// Moves omitted because a successor would violate its invariant.
    pub dropped_moves: usize,
}

/// The explicit game together with the digital state behind every index.
#[derive(Clone, Debug)]
pub struct DigitalGame {
    pub game: Tsg,
    pub states: Vec<DigitalState>,
    pub index: HashMap<DigitalState, StateId>,
    pub max_constants: Vec<u32>,
    /// Which price structure `game`'s prices were taken from.
    pub price: Option<usize>,
    pub stats: BuildStats,
    /// Non-fatal findings: assumption warnings and dropped moves.
    pub warnings: Vec<Diagnostic>,
}

impl DigitalGame {
    pub fn state_of(&self, s: &DigitalState) -> Option<StateId> {
        self.index.get(s).copied()
    }

    /// Recomputes the action prices of `game` from another price structure
    /// of the same model.
    pub fn with_price(&self, m: &Tptg, price: usize) -> Result<Tsg> {
        if price >= m.price_names.len() {
            return usage(format!("price structure index {price} out of range"));
        }
        let mut g = self.game.clone();
        for (s, cs) in g.choices.iter_mut().enumerate() {
            let loc = &m.locations[self.states[s].location];
            for c in cs {
                let e = loc
                    .edges
                    .iter()
                    .find(|e| e.action == c.label.name)
                    .ok_or_else(|| Error::Model(format!("action {} vanished from model", c.label.name)))?;
                c.price = (c.label.duration * loc.rates[price] + e.prices[price]) as f64;
            }
        }
        Ok(g)
    }
}

/// Every state `(l, v)` of `⟦m⟧_ℕ` with `v ⊨ inv(l)`, reachable or not, in
/// location-major, lexicographic valuation order.
pub fn state_space(m: &Tptg) -> Vec<DigitalState> {
    let k = m.max_constants();
    let mut out = Vec::new();
    for (l, loc) in m.locations.iter().enumerate() {
        let mut values = vec![0u32; k.len()];
        loop {
            if loc.invariant.holds_on(&values) {
                let valuation = ClockValuation::from_values(&values, &k).expect("arity matches");
                out.push(DigitalState { location: l, valuation });
            }
            // Odometer increment over 0..=k_x+1 per clock.
            let mut i = values.len();
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if values[i] <= k[i] {
                    values[i] += 1;
                    break;
                }
                values[i] = 0;
            }
            if values.iter().all(|&v| v == 0) {
                break;
            }
        }
    }
    out
}

/// Builds the reachable part of `⟦m⟧_ℕ` breadth-first from `(l̄, 𝟎)`.
///
/// Every model label becomes a game label `F_ℕ`; states without moves get
/// the [`DEADLOCK_LABEL`]. `price` selects the price structure copied into
/// the game (`None`: all prices 0).
pub fn build(m: &Tptg, price: Option<usize>, state_limit: usize) -> Result<DigitalGame> {
    let diags = m.validate_assumptions();
    let (errors, mut warnings): (Vec<_>, Vec<_>) = diags.into_iter().partition(Diagnostic::is_error);
    if !errors.is_empty() {
        return Err(Error::Assumptions(errors));
    }
    if let Some(p) = price {
        if p >= m.price_names.len() {
            return usage(format!("price structure index {p} out of range"));
        }
    }
    let k = m.max_constants();
    let init = DigitalState { location: m.initial, valuation: ClockValuation::zero(&k) };
    if !m.locations[m.initial].invariant.holds_on(init.valuation.values()) {
        return Err(Error::Model("the initial valuation violates the initial invariant".into()));
    }
    let mut game = Tsg::new(m.players.clone());
    let mut states = Vec::new();
    let mut index = HashMap::new();
    let mut queue = VecDeque::new();
    let mut dropped = 0;
    let mut intern = |s: DigitalState,
                      game: &mut Tsg,
                      states: &mut Vec<DigitalState>,
                      queue: &mut VecDeque<StateId>|
     -> Result<StateId> {
        if let Some(&id) = index.get(&s) {
            return Ok(id);
        }
        if states.len() >= state_limit {
            return Err(Error::StateLimit { limit: state_limit });
        }
        let id = game.add_state(s.display(m).to_string(), m.locations[s.location].owner);
        index.insert(s.clone(), id);
        states.push(s);
        queue.push_back(id);
        Ok(id)
    };
    intern(init, &mut game, &mut states, &mut queue)?;
    while let Some(id) = queue.pop_front() {
        let (moves, d) = enumerate_moves(m, &states[id]);
        dropped += d;
        for mv in moves {
            let mut branches = Vec::with_capacity(mv.branches.len());
            for (succ, p) in mv.branches {
                let t = intern(succ, &mut game, &mut states, &mut queue)?;
                branches.push((t, p.to_f64().expect("probabilities are finite")));
            }
            let price = price.map_or(0.0, |i| mv.prices[i] as f64);
            game.add_choice(id, Choice { label: mv.label, price, branches });
        }
    }
    for (name, t) in &m.labels {
        game.labels.entry(name.clone()).or_default();
        for (id, s) in states.iter().enumerate() {
            if t.locations.contains(&s.location) && t.guard.holds_on(s.valuation.values()) {
                game.label_state(name, id);
            }
        }
    }
    game.labels.entry(DEADLOCK_LABEL.to_string()).or_default();
    for id in 0..states.len() {
        if game.deadlock[id] {
            game.label_state(DEADLOCK_LABEL, id);
        }
    }
    if dropped > 0 {
        warnings.push(Diagnostic::warning(
            "dropped-moves",
            format!("{dropped} moves omitted because a successor would violate its location invariant"),
        ));
    }
    let mut per_player = vec![0usize; m.players.len()];
    for &o in &game.owner {
        per_player[o] += 1;
    }
    let stats = BuildStats {
        states: game.num_states(),
        transitions: game.num_choices(),
        branches: game.num_branches(),
        states_per_player: m.players.iter().cloned().zip(per_player).collect(),
        deadlocks: game.deadlock.iter().filter(|&&d| d).count(),
        dropped_moves: dropped,
    };
    Ok(DigitalGame { game, states, index, max_constants: k, price, stats, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::random::{random_tptg, RandomTptgParams};
    use crate::model::tptg::tests::{rat, single};
    use crate::model::{Atom, Branch, ClockConstraint, Edge};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_location_without_actions() {
        let m = single(2);
        let all = state_space(&m);
        assert_eq!(all.len(), 3);
        assert_eq!(all.iter().map(|s| s.valuation.values()[0]).collect::<Vec<_>>(), vec![0, 1, 2]);
        for s in &all {
            assert!(enumerate_moves(&m, s).0.is_empty());
        }
        // Without actions no time can pass, so only (l, 0) is reachable.
        let g = build(&m, None, DEFAULT_STATE_LIMIT).unwrap();
        assert_eq!(g.game.num_states(), 1);
        assert!(g.game.deadlock[0]);
        assert!(g.game.validate().is_empty());
        assert_eq!(g.game.labels[DEADLOCK_LABEL].len(), 1);
    }

    fn ticking(bound: u32) -> Tptg {
        let mut m = single(bound);
        m.locations[0].edges.push(Edge {
            action: "tick".into(),
            enabling: ClockConstraint::new(vec![Atom::ge(0, 1)]),
            branches: vec![Branch { prob: rat(1, 1), resets: vec![], target: 0 }],
            prices: vec![0],
        });
        m
    }

    #[test]
    fn delays_reach_every_valuation() {
        let g = build(&ticking(2), Some(0), DEFAULT_STATE_LIMIT).unwrap();
        assert_eq!(g.game.num_states(), 3);
        assert_eq!(g.game.names, vec!["l(x=0)", "l(x=1)", "l(x=2)"]);
        assert_eq!(g.game.available_actions(0).unwrap().len(), 2);
    }

    #[test]
    fn zero_delay_move_costs_the_action_price() {
        let mut m = single(2);
        m.locations[0].rates = vec![7];
        m.locations[0].edges.push(Edge {
            action: "a".into(),
            enabling: ClockConstraint::top(),
            branches: vec![Branch { prob: rat(1, 1), resets: vec![0], target: 0 }],
            prices: vec![3],
        });
        let s = DigitalState { location: 0, valuation: ClockValuation::zero(&[2]) };
        let (moves, _) = enumerate_moves(&m, &s);
        assert_eq!(moves.len(), 3);
        assert_eq!(moves[0].label, ActionLabel::new(0, "a"));
        assert_eq!(moves[0].prices, vec![3]);
        assert_eq!(moves[2].prices, vec![2 * 7 + 3]);
    }

    #[test]
    fn reset_sets_with_equal_effect_are_summed() {
        let mut m = single(2);
        m.clocks.push("y".into());
        m.locations[0].edges.push(Edge {
            action: "a".into(),
            enabling: ClockConstraint::new(vec![Atom::le(0, 0)]),
            branches: vec![
                Branch { prob: rat(1, 4), resets: vec![0], target: 0 },
                Branch { prob: rat(3, 4), resets: vec![0, 1], target: 0 },
            ],
            prices: vec![0],
        });
        let s = DigitalState { location: 0, valuation: ClockValuation::zero(&[2, 0]) };
        let (moves, _) = enumerate_moves(&m, &s);
        assert_eq!(moves.len(), 1);
        assert_eq!(moves[0].branches.len(), 1);
        assert_eq!(moves[0].branches[0].1, rat(1, 1));
    }

    #[test]
    fn unbounded_invariant_refuses_build() {
        let mut m = single(2);
        m.locations[0].invariant = ClockConstraint::top();
        assert!(matches!(build(&m, None, 10), Err(Error::Assumptions(_))));
    }

    #[test]
    fn state_limit_is_enforced() {
        assert!(matches!(build(&ticking(5), None, 3), Err(Error::StateLimit { limit: 3 })));
        assert!(build(&ticking(5), None, 6).is_ok());
    }

    #[test]
    fn random_builds_are_well_formed_and_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let m = random_tptg(&mut rng, &RandomTptgParams::default());
            let g = build(&m, Some(0), DEFAULT_STATE_LIMIT).unwrap();
            assert!(g.game.validate().is_empty(), "{:?}", g.game.validate());
            let t_bound = 1 + u64::from(*g.max_constants.iter().max().unwrap());
            for (id, s) in g.states.iter().enumerate() {
                assert!(m.locations[s.location].invariant.holds_on(s.valuation.values()));
                for c in &g.game.choices[id] {
                    assert!(c.label.duration <= t_bound);
                }
            }
            let again = build(&m, Some(0), DEFAULT_STATE_LIMIT).unwrap();
            assert_eq!(again.game, g.game);
        }
    }
}
