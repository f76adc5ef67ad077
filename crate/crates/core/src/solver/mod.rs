//! Value iteration, qualitative analysis and strategy synthesis on
//! two-player explicit games.
//!
//! Games passed here are coalition games: player index 0 (`"1"`) is the
//! coalition, index 1 (`"2"`) everyone else. The [`Direction`] says which of
//! the two maximizes.

mod determinacy;
mod oracle;
mod qualitative;
mod synth;
mod vi;

use std::fmt;

use serde::Serialize;

use crate::diag::Diagnostic;
use crate::error::{usage, Result};
use crate::game::{MemorylessProfile, StateId, Tsg};

pub use determinacy::{check_determinacy, restrict, Determinacy};
pub use oracle::{brute_force_solve, ExactValue, DEFAULT_PROFILE_LIMIT};
pub use qualitative::qualitative_reach;
pub use synth::{evaluate_profile, synthesize};
pub use vi::{bounded_expected_price, expected_price, prob_reach};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    /// Player 1 maximizes, player 2 minimizes.
    MaxMin,
    /// Player 1 minimizes, player 2 maximizes.
    MinMax,
}

impl Direction {
    /// Whether the owner of a state with owner index `owner` maximizes.
    pub fn maximizes(self, owner: usize) -> bool {
        (owner == 0) == (self == Direction::MaxMin)
    }

    pub fn flip(self) -> Direction {
        match self {
            Direction::MaxMin => Direction::MinMax,
            Direction::MinMax => Direction::MaxMin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Kind {
    ProbReach,
    ExpPrice,
    /// Expected price accumulated within `n` steps.
    BoundedExpPrice(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Objective {
    pub kind: Kind,
    pub direction: Direction,
    pub target: String,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = match self.direction {
            Direction::MaxMin => "max",
            Direction::MinMax => "min",
        };
        match self.kind {
            Kind::ProbReach => write!(f, "P{opt} [F {}]", self.target),
            Kind::ExpPrice => write!(f, "E{opt} [F {}]", self.target),
            Kind::BoundedExpPrice(n) => write!(f, "E{opt} [F {}] <= {n} steps", self.target),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolveOptions { tol, ..Default::default() }
    }

    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return usage(format!("tolerance must be positive, got {}", self.tol));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub objective: Objective,
    /// Value per state; `f64::INFINITY` marks unbounded expected price.
    pub values: Vec<f64>,
    pub initial: StateId,
    /// One chosen action per non-deadlock state (both players).
    pub strategy: MemorylessProfile,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// States with optimal reach probability 0 / 1 (for the price
    /// minimizer as reacher, in the expected-price case).
    pub prob0: Option<Vec<bool>>,
    pub prob1: Option<Vec<bool>>,
    /// Largest deviation between `values` and the value of the induced
    /// Markov chain of `strategy`, over states with finite value.
    pub certificate_error: f64,
    pub warnings: Vec<Diagnostic>,
}

impl SolveResult {
    pub fn value(&self) -> f64 {
        self.values[self.initial]
    }

    pub fn to_json(&self, game: &Tsg) -> serde_json::Value {
        let strategy: Vec<serde_json::Value> = self
            .strategy
            .choice
            .iter()
            .enumerate()
            .filter_map(|(s, c)| {
                c.map(|a| {
                    serde_json::json!({
                        "state": s,
                        "name": game.names[s],
                        "action": game.choices[s][a].label.to_string(),
                    })
                })
            })
            .collect();
        serde_json::json!({
            "objective": self.objective.to_string(),
            "value": json_number(self.value()),
            "iterations": self.iterations,
            "residual": json_number(self.residual),
            "converged": self.converged,
            "strategy": strategy,
        })
    }
}

/// Finite numbers as JSON numbers, infinity as the string `"inf"`.
pub fn json_number(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else if x > 0.0 {
        serde_json::json!("inf")
    } else {
        serde_json::json!("-inf")
    }
}

/// Reads back the `strategy` array of a [`SolveResult::to_json`] document as
/// a profile over `game`.
pub fn profile_from_json(game: &Tsg, doc: &serde_json::Value) -> Result<MemorylessProfile> {
    let Some(entries) = doc.get("strategy").and_then(|s| s.as_array()) else {
        return usage("strategy document has no `strategy` array");
    };
    let mut choice = vec![None; game.num_states()];
    for e in entries {
        let s = e.get("state").and_then(|s| s.as_u64()).map(|s| s as usize);
        let a = e.get("action").and_then(|a| a.as_str());
        let (Some(s), Some(a)) = (s, a) else {
            return usage(format!("malformed strategy entry {e}"));
        };
        if s >= game.num_states() {
            return usage(format!("strategy names state {s}, game has {}", game.num_states()));
        }
        let label = a.parse()?;
        match game.choice_index(s, &label) {
            Some(i) => choice[s] = Some(i),
            None => return usage(format!("strategy action {a} is not available in state {s} ({})", game.names[s])),
        }
    }
    Ok(MemorylessProfile { choice })
}

fn check_two_player(game: &Tsg) -> Result<()> {
    if game.players.len() != 2 || game.owner.iter().any(|&o| o > 1) {
        return usage("the solver needs a two-player (coalition) game");
    }
    Ok(())
}

/// Solves `objective` on a two-player game and synthesizes a strategy.
pub fn solve(game: &Tsg, objective: &Objective, opts: &SolveOptions) -> Result<SolveResult> {
    check_two_player(game)?;
    opts.check()?;
    let target = game.target(&objective.target)?;
    let mut result = match objective.kind {
        Kind::ProbReach => prob_reach(game, &target, objective.direction, opts)?,
        Kind::ExpPrice => expected_price(game, &target, objective.direction, opts)?,
        Kind::BoundedExpPrice(n) => {
            let values = bounded_expected_price(game, &target, objective.direction, n);
            vi::bounded_result(game, &target, objective.direction, values, n)
        }
    };
    result.objective = objective.clone();
    if result.converged && !matches!(objective.kind, Kind::BoundedExpPrice(_)) {
        let (strategy, mut warnings) = synthesize(game, objective, &result, opts)?;
        result.strategy = strategy;
        result.warnings.append(&mut warnings);
        let chain = evaluate_profile(game, &result.strategy, &target, objective.kind, opts)?;
        result.certificate_error = chain
            .iter()
            .zip(&result.values)
            .map(|(&c, &v)| {
                if c.is_infinite() && v.is_infinite() {
                    0.0
                } else {
                    (c - v).abs()
                }
            })
            .fold(0.0, f64::max);
        if result.certificate_error > 10.0 * opts.tol {
            result.warnings.push(Diagnostic::warning(
                "certificate",
                format!(
                    "induced chain of the synthesized profile deviates from the values by {:.3e}",
                    result.certificate_error
                ),
            ));
        }
    }
    Ok(result)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::game::{ActionLabel, Choice};

    /// One state with actions `a` (to the goal w.p. 0.5) and `b` (w.p. 0.3),
    /// owned by `owner`; the rest of the mass goes to a sink.
    pub(crate) fn half_vs_three_tenths(owner: usize) -> Tsg {
        let mut g = Tsg::new(vec!["1".into(), "2".into()]);
        g.add_state("s", owner);
        g.add_state("goal", 0);
        g.add_state("sink", 0);
        g.add_choice(0, Choice { label: ActionLabel::new(0, "a"), price: 1.0, branches: vec![(1, 0.5), (2, 0.5)] });
        g.add_choice(0, Choice { label: ActionLabel::new(0, "b"), price: 1.0, branches: vec![(1, 0.3), (2, 0.7)] });
        g.label_state("goal", 1);
        g.label_state("deadlock", 1);
        g.label_state("deadlock", 2);
        g
    }

    /// `s0 -> s1 -> s2 -> goal`, each step costing 1.
    pub(crate) fn chain3() -> Tsg {
        let mut g = Tsg::new(vec!["1".into(), "2".into()]);
        for i in 0..4 {
            g.add_state(format!("s{i}"), i % 2);
        }
        for i in 0..3 {
            g.add_choice(i, Choice { label: ActionLabel::new(1, "step"), price: 1.0, branches: vec![(i + 1, 1.0)] });
        }
        g.label_state("goal", 3);
        g.label_state("deadlock", 3);
        g
    }

    fn objective(kind: Kind, direction: Direction) -> Objective {
        Objective { kind, direction, target: "goal".into() }
    }

    #[test]
    fn half_vs_three_tenths_both_framings() {
        let opts = SolveOptions::default();
        let r = solve(&half_vs_three_tenths(0), &objective(Kind::ProbReach, Direction::MaxMin), &opts).unwrap();
        assert!((r.value() - 0.5).abs() < 1e-12);
        assert_eq!(r.strategy.choice[0], Some(0));
        let r = solve(&half_vs_three_tenths(1), &objective(Kind::ProbReach, Direction::MaxMin), &opts).unwrap();
        assert!((r.value() - 0.3).abs() < 1e-12);
        assert_eq!(r.strategy.choice[0], Some(1));
    }

    #[test]
    fn initial_target_has_trivial_values() {
        let mut g = chain3();
        g.label_state("goal", 0);
        let opts = SolveOptions::default();
        assert_eq!(solve(&g, &objective(Kind::ProbReach, Direction::MaxMin), &opts).unwrap().value(), 1.0);
        assert_eq!(solve(&g, &objective(Kind::ExpPrice, Direction::MinMax), &opts).unwrap().value(), 0.0);
    }

    #[test]
    fn chain_costs_three() {
        let opts = SolveOptions::default();
        for d in [Direction::MaxMin, Direction::MinMax] {
            let r = solve(&chain3(), &objective(Kind::ExpPrice, d), &opts).unwrap();
            assert!((r.value() - 3.0).abs() < 1e-12);
            assert!(r.converged);
        }
    }

    #[test]
    fn single_action_states_pick_that_action() {
        let r = solve(&chain3(), &objective(Kind::ExpPrice, Direction::MinMax), &SolveOptions::default()).unwrap();
        assert_eq!(r.strategy.choice, vec![Some(0), Some(0), Some(0), None]);
    }

    #[test]
    fn json_round_trip_of_strategy() {
        let g = half_vs_three_tenths(0);
        let r = solve(&g, &objective(Kind::ProbReach, Direction::MaxMin), &SolveOptions::default()).unwrap();
        let doc = r.to_json(&g);
        assert_eq!(profile_from_json(&g, &doc).unwrap(), r.strategy);
        assert_eq!(doc["converged"], true);
    }

    #[test]
    fn non_target_deadlock_has_infinite_price() {
        let g = half_vs_three_tenths(0);
        let r = solve(&g, &objective(Kind::ExpPrice, Direction::MinMax), &SolveOptions::default()).unwrap();
        assert!(r.value().is_infinite());
        assert!(!r.warnings.is_empty());
        assert_eq!(r.to_json(&g)["value"], "inf");
    }

    #[test]
    fn rejects_multi_player_games_and_bad_tolerance() {
        let mut g = chain3();
        g.players.push("3".into());
        g.owner[0] = 2;
        assert!(solve(&g, &objective(Kind::ProbReach, Direction::MaxMin), &SolveOptions::default()).is_err());
        let bad = SolveOptions { tol: 0.0, ..Default::default() };
        assert!(solve(&chain3(), &objective(Kind::ProbReach, Direction::MaxMin), &bad).is_err());
    }
}
