//! Strategy synthesis from converged values.

use super::determinacy::restrict;
use super::qualitative::almost_sure_strategies;
use super::vi::{bounded_expected_price, expected_price, prob_reach};
use super::{Kind, Objective, SolveOptions, SolveResult};
use crate::diag::Diagnostic;
use crate::error::{usage, Error, Result};
use crate::game::{MemorylessProfile, Tsg};

/// Picks an optimal action in every non-deadlock state.
///
/// Each state considers the actions whose one-step backup against the values
/// is within `10·tol` of the optimum; among those the first in
/// `(duration, name)` order wins. On the side that wants to reach the target
/// (the probability maximizer, or the price minimizer) the choice is further
/// restricted to actions that make progress towards the target, so that the
/// induced chain really reaches it. States where no such action exists are
/// reported in a warning.
pub fn synthesize(
    game: &Tsg,
    objective: &Objective,
    result: &SolveResult,
    opts: &SolveOptions,
) -> Result<(MemorylessProfile, Vec<Diagnostic>)> {
    if !result.converged {
        return Err(Error::Refused("strategy synthesis needs converged values".into()));
    }
    let target = game.target(&objective.target)?;
    let v = &result.values;
    let n = game.num_states();
    let dir = objective.direction;
    let price_kind = match objective.kind {
        Kind::ProbReach => false,
        Kind::ExpPrice => true,
        Kind::BoundedExpPrice(_) => return usage("bounded-horizon objectives have no memoryless optimal strategy"),
    };
    let reacher = |s: usize| dir.maximizes(game.owner[s]) != price_kind;
    let mut candidates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        let cs = &game.choices[s];
        if cs.is_empty() {
            continue;
        }
        let q: Vec<f64> = cs
            .iter()
            .map(|c| {
                let e: f64 = c.branches.iter().filter(|&&(_, p)| p > 0.0).map(|&(t, p)| p * v[t]).sum();
                if price_kind {
                    c.price + e
                } else {
                    e
                }
            })
            .collect();
        let best = if dir.maximizes(game.owner[s]) {
            q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            q.iter().copied().fold(f64::INFINITY, f64::min)
        };
        let eps = 10.0 * opts.tol + 1e-12 * best.abs();
        candidates[s] = (0..cs.len())
            .filter(|&a| if best.is_infinite() { q[a] == best } else { (q[a] - best).abs() <= eps })
            .collect();
    }
    let mut choice: Vec<Option<usize>> = candidates.iter().map(|c| c.first().copied()).collect();
    if price_kind {
        // Every action ties at an infinite value, so the price maximizer
        // must be told how to keep the target out of sure reach.
        let spoil = almost_sure_strategies(game, &target, dir.flip()).spoil;
        for s in 0..n {
            if v[s].is_infinite() && !reacher(s) && spoil[s].is_some() {
                choice[s] = spoil[s];
            }
        }
    }
    // States that need no progress: the target, deadlocks, and states whose
    // value makes reaching irrelevant (probability 0, infinite price).
    let mut done: Vec<bool> = (0..n)
        .map(|s| {
            target[s]
                || game.choices[s].is_empty()
                || if price_kind { v[s].is_infinite() } else { v[s] <= 10.0 * opts.tol }
        })
        .collect();
    loop {
        let mut layer = Vec::new();
        for s in 0..n {
            if done[s] {
                continue;
            }
            let hits = |a: usize| game.choices[s][a].support().any(|t| done[t]);
            if reacher(s) {
                if let Some(&a) = candidates[s].iter().find(|&&a| hits(a)) {
                    layer.push((s, Some(a)));
                }
            } else if choice[s].is_some_and(hits) {
                layer.push((s, None));
            }
        }
        if layer.is_empty() {
            break;
        }
        for (s, a) in layer {
            done[s] = true;
            if a.is_some() {
                choice[s] = a;
            }
        }
    }
    let mut warnings = Vec::new();
    let stuck = (0..n).filter(|&s| !done[s]).count();
    if stuck > 0 {
        warnings.push(Diagnostic::warning(
            "no-progress",
            format!(
                "{stuck} states have no optimal action leading towards the target; \
                 values there may be underestimated (zero-price cycle)"
            ),
        ));
    }
    Ok((MemorylessProfile { choice }, warnings))
}

/// Value of every state in the Markov chain induced by `profile`.
pub fn evaluate_profile(
    game: &Tsg,
    profile: &MemorylessProfile,
    target: &[bool],
    kind: Kind,
    opts: &SolveOptions,
) -> Result<Vec<f64>> {
    let chain = restrict(game, profile, None)?;
    // The direction is irrelevant once every state has a single action.
    let dir = super::Direction::MaxMin;
    let inner = SolveOptions { tol: opts.tol * 1e-2, ..*opts };
    Ok(match kind {
        Kind::ProbReach => prob_reach(&chain, target, dir, &inner)?.values,
        Kind::ExpPrice => expected_price(&chain, target, dir, &inner)?.values,
        Kind::BoundedExpPrice(n) => bounded_expected_price(&chain, target, dir, n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ActionLabel, Choice};
    use crate::solver::{solve, Direction};

    /// The maximizer can idle in place forever or move to the goal; both are
    /// value-optimal under the fixpoint equations, only the move reaches.
    #[test]
    fn reacher_avoids_value_preserving_self_loop() {
        let mut g = Tsg::new(vec!["1".into(), "2".into()]);
        g.add_state("s", 0);
        g.add_state("goal", 0);
        g.add_choice(0, Choice { label: ActionLabel::new(0, "a_idle"), price: 0.0, branches: vec![(0, 1.0)] });
        g.add_choice(0, Choice { label: ActionLabel::new(0, "b_go"), price: 0.0, branches: vec![(1, 1.0)] });
        g.label_state("goal", 1);
        g.label_state("deadlock", 1);
        let obj = Objective { kind: Kind::ProbReach, direction: Direction::MaxMin, target: "goal".into() };
        let r = solve(&g, &obj, &SolveOptions::default()).unwrap();
        assert_eq!(r.value(), 1.0);
        assert_eq!(r.strategy.choice[0], Some(1));
        assert_eq!(r.certificate_error, 0.0);
    }

    /// Every action of the price maximizer ties at ∞ through the self-loop;
    /// only `c_risk` actually avoids the goal with positive probability.
    #[test]
    fn price_maximizer_keeps_infinite_value() {
        let mut g = Tsg::new(vec!["1".into(), "2".into()]);
        g.add_state("s", 0);
        g.add_state("sink", 1);
        g.add_state("goal", 1);
        g.add_choice(0, Choice { label: ActionLabel::new(0, "a_loop"), price: 4.0, branches: vec![(0, 0.25), (2, 0.75)] });
        g.add_choice(0, Choice { label: ActionLabel::new(0, "c_risk"), price: 2.0, branches: vec![(1, 0.5), (2, 0.5)] });
        g.label_state("goal", 2);
        g.label_state("deadlock", 1);
        g.label_state("deadlock", 2);
        let obj = Objective { kind: Kind::ExpPrice, direction: Direction::MaxMin, target: "goal".into() };
        let r = solve(&g, &obj, &SolveOptions::default()).unwrap();
        assert_eq!(r.value(), f64::INFINITY);
        assert_eq!(r.strategy.choice[0], Some(1));
        assert_eq!(r.certificate_error, 0.0);
    }

    #[test]
    fn refuses_unconverged_values() {
        let g = crate::solver::tests::chain3();
        let obj = Objective { kind: Kind::ExpPrice, direction: Direction::MinMax, target: "goal".into() };
        let mut r = solve(&g, &obj, &SolveOptions::default()).unwrap();
        r.converged = false;
        assert!(synthesize(&g, &obj, &r, &SolveOptions::default()).is_err());
    }
}
