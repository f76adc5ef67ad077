//! Gauss–Seidel value iteration.
//!
//! Sweeps visit states in descending index order. Builders number states
//! breadth-first, so successors tend to have larger indices and a descending
//! sweep propagates values from the target in few passes.

use super::determinacy::restrict;
use super::qualitative::qualitative_reach;
use super::{Direction, Kind, Objective, SolveOptions, SolveResult};
use crate::diag::Diagnostic;
use crate::error::Result;
use crate::game::{Choice, MemorylessProfile, PlayerId, Tsg};

/// Slack allowed when asserting that iterates never decrease.
const MONOTONE_SLACK: f64 = 1e-12;

/// Stops when the sweep residual is below `tol` and so is the remaining
/// error extrapolated from the observed contraction, `r·λ/(1-λ)`. A small
/// residual alone can hide a large error when iterates creep slowly.
struct Stop {
    tol: f64,
    prev: f64,
    ratio: f64,
}

impl Stop {
    fn new(tol: f64) -> Self {
        Stop { tol, prev: f64::INFINITY, ratio: 1.0 }
    }

    fn done(&mut self, residual: f64) -> bool {
        if residual == 0.0 {
            return true;
        }
        let ratio = residual / self.prev;
        // The larger of the last two ratios guards against one lucky sweep.
        let lambda = ratio.max(self.ratio);
        self.prev = residual;
        self.ratio = ratio;
        residual < self.tol && lambda < 1.0 && residual * lambda / (1.0 - lambda) < self.tol
    }
}

fn expectation(c: &Choice, v: &[f64]) -> f64 {
    c.branches.iter().filter(|&&(_, p)| p > 0.0).map(|&(t, p)| p * v[t]).sum()
}

fn pick(maximize: bool, qs: impl Iterator<Item = f64>) -> f64 {
    if maximize {
        qs.fold(f64::NEG_INFINITY, f64::max)
    } else {
        qs.fold(f64::INFINITY, f64::min)
    }
}

fn deadlock_warning(game: &Tsg, target: &[bool], what: &str) -> Option<Diagnostic> {
    let n = (0..game.num_states()).filter(|&s| game.choices[s].is_empty() && !target[s]).count();
    (n > 0).then(|| Diagnostic::warning("deadlock", format!("{n} non-target deadlock states get {what}")))
}

fn empty_result(game: &Tsg, kind: Kind, dir: Direction, values: Vec<f64>) -> SolveResult {
    SolveResult {
        objective: Objective { kind, direction: dir, target: String::new() },
        values,
        initial: game.initial,
        strategy: MemorylessProfile { choice: vec![None; game.num_states()] },
        iterations: 0,
        residual: 0.0,
        converged: false,
        prob0: None,
        prob1: None,
        certificate_error: 0.0,
        warnings: Vec::new(),
    }
}

/// Optimal probability of reaching `target`. Starts from the indicator of
/// the target with the qualitative sets pinned to 0 and 1.
pub fn prob_reach(game: &Tsg, target: &[bool], dir: Direction, opts: &SolveOptions) -> Result<SolveResult> {
    let (prob0, prob1) = qualitative_reach(game, target, dir);
    let n = game.num_states();
    let mut v: Vec<f64> = (0..n).map(|s| if prob1[s] { 1.0 } else { 0.0 }).collect();
    let free: Vec<usize> = (0..n).rev().filter(|&s| !prob0[s] && !prob1[s]).collect();
    let mut res = empty_result(game, Kind::ProbReach, dir, Vec::new());
    let mut monotone = true;
    let mut residual = 0.0;
    let mut iterations = 0;
    let mut converged = free.is_empty();
    let mut stop = Stop::new(opts.tol);
    while !converged && iterations < opts.max_iters {
        iterations += 1;
        residual = 0.0f64;
        for &s in &free {
            let max = dir.maximizes(game.owner[s]);
            let new = pick(max, game.choices[s].iter().map(|c| expectation(c, &v)));
            monotone &= new >= v[s] - MONOTONE_SLACK;
            residual = residual.max((new - v[s]).abs());
            v[s] = new;
        }
        converged = stop.done(residual);
    }
    res.warnings.extend(deadlock_warning(game, target, "probability 0"));
    if !monotone {
        res.warnings.push(Diagnostic::warning("monotonicity", "value iterates decreased during a sweep"));
    }
    if !converged {
        res.warnings.push(Diagnostic::warning(
            "non-convergence",
            format!("no convergence after {iterations} sweeps (residual {residual:.3e})"),
        ));
    }
    res.values = v;
    res.iterations = iterations;
    res.residual = residual;
    res.converged = converged;
    res.prob0 = Some(prob0);
    res.prob1 = Some(prob1);
    Ok(res)
}

/// Optimal expected price accumulated before reaching `target`.
///
/// States where the price minimizer cannot force reaching the target almost
/// surely get `+∞`. The remaining states are solved from 0 upwards, then the
/// minimizer's side is corrected for zero-price cycles.
pub fn expected_price(game: &Tsg, target: &[bool], dir: Direction, opts: &SolveOptions) -> Result<SolveResult> {
    let mut res = least_fixpoint(game, target, dir, opts)?;
    if res.converged {
        improve_minimizer(game, target, dir, opts, &mut res)?;
    }
    Ok(res)
}

/// A minimizer strategy that reaches the target almost surely from every
/// state of `prob1`, preferring the actions in `preferred`.
///
/// States join an attractor layer by layer: a minimizer state through an
/// action that stays in `prob1` and touches an earlier layer, an opponent
/// state once all its actions do. Preferred actions are tried to exhaustion
/// before any other action may be used.
fn ranked_strategy(
    game: &Tsg,
    target: &[bool],
    prob1: &[bool],
    minimizer: PlayerId,
    preferred: &[Vec<usize>],
) -> Vec<Option<usize>> {
    let n = game.num_states();
    let mut x = target.to_vec();
    let mut choice = vec![None; n];
    let good = |c: &Choice, x: &[bool]| c.support().all(|t| prob1[t]) && c.support().any(|t| x[t]);
    let mut relaxed = false;
    loop {
        let mut changed = false;
        for s in (0..n).rev() {
            if x[s] || !prob1[s] || game.choices[s].is_empty() {
                continue;
            }
            let cs = &game.choices[s];
            let join = if game.owner[s] == minimizer {
                let pick = preferred[s]
                    .iter()
                    .copied()
                    .find(|&a| good(&cs[a], &x))
                    .or_else(|| if relaxed { (0..cs.len()).find(|&a| good(&cs[a], &x)) } else { None });
                choice[s] = pick;
                pick.is_some()
            } else {
                cs.iter().all(|c| good(c, &x))
            };
            if join {
                x[s] = true;
                changed = true;
                relaxed = false;
            }
        }
        if !changed {
            if relaxed {
                return choice;
            }
            relaxed = true;
        }
    }
}

/// Zero-price cycles of the price minimizer give the Bellman equations
/// fixpoints below the value: circling forever costs nothing but never
/// reaches the target, and iteration from 0 finds the least fixpoint.
/// This starts from a minimizer strategy that reaches the target almost
/// surely and is value-greedy where possible, evaluates it against the best
/// opponent, and switches the minimizer to strictly better actions until
/// none is left. Strict improvement never closes a zero-price cycle, so
/// every strategy in the sequence keeps reaching the target.
fn improve_minimizer(
    game: &Tsg,
    target: &[bool],
    dir: Direction,
    opts: &SolveOptions,
    res: &mut SolveResult,
) -> Result<()> {
    let n = game.num_states();
    let minimizer: PlayerId = if dir.maximizes(0) { 1 } else { 0 };
    let prob1 = res.prob1.clone().expect("expected-price results carry prob1");
    let decide: Vec<usize> = (0..n)
        .filter(|&s| prob1[s] && !target[s] && game.owner[s] == minimizer && game.choices[s].len() > 1)
        .collect();
    if decide.is_empty() {
        return Ok(());
    }
    let q = |s: usize, v: &[f64]| -> Vec<f64> { game.choices[s].iter().map(|c| c.price + expectation(c, v)).collect() };
    let mut preferred = vec![Vec::new(); n];
    for &s in &decide {
        let qs = q(s, &res.values);
        let best = qs.iter().copied().fold(f64::INFINITY, f64::min);
        let eps = 10.0 * opts.tol * best.abs().max(1.0);
        preferred[s] = (0..qs.len()).filter(|&a| qs[a] <= best + eps).collect();
    }
    let ranked = ranked_strategy(game, target, &prob1, minimizer, &preferred);
    let mut profile = MemorylessProfile {
        choice: (0..n)
            .map(|s| if game.choices[s].is_empty() { None } else { Some(ranked[s].unwrap_or(0)) })
            .collect(),
    };
    let lower = std::mem::take(&mut res.values);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let fixed = restrict(game, &profile, Some(minimizer))?;
        let eval = least_fixpoint(&fixed, target, dir, opts)?;
        res.iterations += eval.iterations;
        res.converged = eval.converged;
        res.residual = eval.residual;
        res.values = eval.values;
        if !res.converged {
            break;
        }
        let mut changed = false;
        for &s in &decide {
            let qs = q(s, &res.values);
            let cur = profile.choice[s].expect("decision states have a choice");
            let (a, best) =
                qs.iter().copied().enumerate().fold((cur, qs[cur]), |acc, (a, x)| if x < acc.1 { (a, x) } else { acc });
            if best < qs[cur] - 10.0 * opts.tol * qs[cur].abs().max(1.0) {
                profile.choice[s] = Some(a);
                changed = true;
            }
        }
        if !changed {
            break;
        }
        if rounds >= opts.max_iters {
            res.converged = false;
            res.warnings.push(Diagnostic::warning(
                "non-convergence",
                format!("strategy improvement did not stabilize after {rounds} rounds"),
            ));
            break;
        }
    }
    let gap = (0..n)
        .filter(|&s| lower[s].is_finite() && res.values[s].is_finite())
        .map(|s| res.values[s] - lower[s])
        .fold(0.0, f64::max);
    if gap > 10.0 * opts.tol {
        res.warnings.push(Diagnostic::warning(
            "zero-price-cycle",
            format!("the minimizer can circle without cost; corrected values by up to {gap:.3e}"),
        ));
    }
    Ok(())
}

fn least_fixpoint(game: &Tsg, target: &[bool], dir: Direction, opts: &SolveOptions) -> Result<SolveResult> {
    // The price minimizer is the one interested in reaching the target.
    let (prob0, prob1) = qualitative_reach(game, target, dir.flip());
    let n = game.num_states();
    let mut v: Vec<f64> = (0..n).map(|s| if prob1[s] { 0.0 } else { f64::INFINITY }).collect();
    let free: Vec<usize> = (0..n).rev().filter(|&s| prob1[s] && !target[s]).collect();
    let mut res = empty_result(game, Kind::ExpPrice, dir, Vec::new());
    let mut monotone = true;
    let mut residual = 0.0;
    let mut iterations = 0;
    let mut converged = free.is_empty();
    let mut stop = Stop::new(opts.tol);
    while !converged && iterations < opts.max_iters {
        iterations += 1;
        residual = 0.0f64;
        for &s in &free {
            let max = dir.maximizes(game.owner[s]);
            let new = pick(max, game.choices[s].iter().map(|c| c.price + expectation(c, &v)));
            monotone &= new >= v[s] - MONOTONE_SLACK * v[s].abs().max(1.0);
            residual = residual.max((new - v[s]).abs());
            v[s] = new;
        }
        converged = stop.done(residual);
    }
    let infinite = (0..n).filter(|&s| !prob1[s]).count();
    if infinite > 0 {
        res.warnings.push(Diagnostic::warning(
            "infinite-price",
            format!("{infinite} states cannot reach the target almost surely; their expected price is infinite"),
        ));
    }
    res.warnings.extend(deadlock_warning(game, target, "infinite expected price"));
    if !monotone {
        res.warnings.push(Diagnostic::warning("monotonicity", "value iterates decreased during a sweep"));
    }
    if !converged {
        res.warnings.push(Diagnostic::warning(
            "non-convergence",
            format!("no convergence after {iterations} sweeps (residual {residual:.3e})"),
        ));
    }
    res.values = v;
    res.iterations = iterations;
    res.residual = residual;
    res.converged = converged;
    res.prob0 = Some(prob0);
    res.prob1 = Some(prob1);
    Ok(res)
}

/// Optimal expected price accumulated within `n` steps: exactly `n`
/// synchronous backups from 0. Target states and deadlocks contribute 0.
pub fn bounded_expected_price(game: &Tsg, target: &[bool], dir: Direction, n: usize) -> Vec<f64> {
    let states = game.num_states();
    let mut v = vec![0.0; states];
    let mut next = vec![0.0; states];
    for _ in 0..n {
        for s in 0..states {
            next[s] = if target[s] || game.choices[s].is_empty() {
                0.0
            } else {
                let max = dir.maximizes(game.owner[s]);
                pick(max, game.choices[s].iter().map(|c| c.price + expectation(c, &v)))
            };
        }
        std::mem::swap(&mut v, &mut next);
    }
    v
}

pub(crate) fn bounded_result(game: &Tsg, _target: &[bool], dir: Direction, values: Vec<f64>, n: usize) -> SolveResult {
    let mut r = empty_result(game, Kind::BoundedExpPrice(n), dir, values);
    r.iterations = n;
    r.converged = true;
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::random::{random_game, RandomGameParams, GOAL};
    use crate::solver::tests::chain3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_steps_give_zero() {
        let g = chain3();
        let t = g.target("goal").unwrap();
        assert_eq!(bounded_expected_price(&g, &t, Direction::MinMax, 0), vec![0.0; 4]);
    }

    #[test]
    fn long_horizon_on_chain_matches_unbounded() {
        let g = chain3();
        let t = g.target("goal").unwrap();
        let b = bounded_expected_price(&g, &t, Direction::MinMax, 10);
        let e = expected_price(&g, &t, Direction::MinMax, &SolveOptions::default()).unwrap();
        assert_eq!(b, e.values);
        assert_eq!(bounded_expected_price(&g, &t, Direction::MinMax, 2)[0], 2.0);
    }

    /// Idling is free and every iterate stays 0 there, but only leaving
    /// reaches the goal. The opponent state in between may bounce back.
    #[test]
    fn free_idling_does_not_hide_the_exit_price() {
        use crate::game::ActionLabel;
        let mut g = Tsg::new(vec!["1".into(), "2".into()]);
        g.add_state("s", 0);
        g.add_state("o", 1);
        g.add_state("goal", 0);
        let go = |name: &str, price: f64, branches: Vec<(usize, f64)>| Choice {
            label: ActionLabel::new(0, name),
            price,
            branches,
        };
        g.add_choice(0, go("a_idle", 0.0, vec![(0, 1.0)]));
        g.add_choice(0, go("b_exit", 3.0, vec![(1, 1.0)]));
        g.add_choice(1, go("a_back", 1.0, vec![(0, 0.5), (2, 0.5)]));
        g.add_choice(1, go("b_done", 0.0, vec![(2, 1.0)]));
        g.label_state("goal", 2);
        g.label_state("deadlock", 2);
        let t = g.target("goal").unwrap();
        let r = expected_price(&g, &t, Direction::MinMax, &SolveOptions::default()).unwrap();
        // v(s) = 3 + v(o), v(o) = 1 + v(s)/2  ⇒  v(s) = 8.
        assert!((r.values[0] - 8.0).abs() < 1e-7, "{:?}", r.values);
        assert!((r.values[1] - 5.0).abs() < 1e-7);
        assert!(r.warnings.iter().any(|w| w.code == "zero-price-cycle"));
    }

    #[test]
    fn bounded_values_are_monotone_in_horizon() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let g = random_game(&mut rng, &RandomGameParams::default());
            let t = g.target(GOAL).unwrap();
            let mut prev = vec![0.0; g.num_states()];
            for n in 1..30 {
                let cur = bounded_expected_price(&g, &t, Direction::MaxMin, n);
                for (a, b) in prev.iter().zip(&cur) {
                    assert!(b + 1e-12 >= *a);
                }
                prev = cur;
            }
        }
    }

    #[test]
    fn probability_iterates_stay_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let g = random_game(&mut rng, &RandomGameParams::default());
            let t = g.target(GOAL).unwrap();
            let r = prob_reach(&g, &t, Direction::MaxMin, &SolveOptions::default()).unwrap();
            assert!(r.converged);
            assert!(r.values.iter().all(|&x| (0.0..=1.0).contains(&x)));
            assert!(r.warnings.iter().all(|w| w.code != "monotonicity"));
        }
    }
}
