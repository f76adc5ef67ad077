//! Exact brute-force oracle: enumerate every memoryless deterministic
//! profile pair and solve each induced Markov chain in rational arithmetic.

use std::cmp::Ordering;
use std::collections::VecDeque;

use num::{BigRational, One, ToPrimitive, Zero};

use super::{Direction, Kind};
use crate::error::{usage, Error, Result};
use crate::game::{StateId, Tsg};

/// Largest number of profile pairs the oracle agrees to enumerate.
pub const DEFAULT_PROFILE_LIMIT: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExactValue {
    Finite(BigRational),
    Infinite,
}

impl ExactValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            ExactValue::Finite(r) => r.to_f64().unwrap_or(f64::NAN),
            ExactValue::Infinite => f64::INFINITY,
        }
    }
}

impl PartialOrd for ExactValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExactValue::Infinite, ExactValue::Infinite) => Ordering::Equal,
            (ExactValue::Infinite, _) => Ordering::Greater,
            (_, ExactValue::Infinite) => Ordering::Less,
            (ExactValue::Finite(a), ExactValue::Finite(b)) => a.cmp(b),
        }
    }
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Usage(format!("non-finite number {x} in game")))
}

/// Exact optimal value at the initial state: player 1's optimum over its
/// memoryless deterministic strategies of player 2's optimum against it.
///
/// Refuses (with [`Error::Refused`]) when the number of profile pairs over
/// the reachable decision states exceeds `limit`.
pub fn brute_force_solve(game: &Tsg, target: &[bool], kind: Kind, dir: Direction, limit: u64) -> Result<ExactValue> {
    if matches!(kind, Kind::BoundedExpPrice(_)) {
        return usage("the oracle handles unbounded objectives only");
    }
    let n = game.num_states();
    let mut reach = vec![false; n];
    let mut queue = VecDeque::from([game.initial]);
    reach[game.initial] = true;
    while let Some(s) = queue.pop_front() {
        for c in &game.choices[s] {
            for t in c.support() {
                if !reach[t] {
                    reach[t] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    let decision = |p: usize| -> Vec<StateId> {
        (0..n).filter(|&s| reach[s] && !target[s] && !game.choices[s].is_empty() && game.owner[s] == p).collect()
    };
    let (d1, d2) = (decision(0), decision(1));
    let mut count: u64 = 1;
    for &s in d1.iter().chain(&d2) {
        count = count.saturating_mul(game.choices[s].len() as u64);
    }
    if count > limit {
        return Err(Error::Refused(format!("{count} profile pairs exceed the oracle limit of {limit}")));
    }
    // Exact copies of the numbers in the game.
    let mut probs: Vec<Vec<Vec<(StateId, BigRational)>>> = Vec::with_capacity(n);
    let mut prices: Vec<Vec<BigRational>> = Vec::with_capacity(n);
    for cs in &game.choices {
        let mut ps = Vec::with_capacity(cs.len());
        let mut rs = Vec::with_capacity(cs.len());
        for c in cs {
            let mut bs = Vec::new();
            for &(t, p) in &c.branches {
                if p > 0.0 {
                    bs.push((t, exact(p)?));
                }
            }
            ps.push(bs);
            rs.push(exact(c.price)?);
        }
        probs.push(ps);
        prices.push(rs);
    }
    let p1_max = dir == Direction::MaxMin;
    let mut choice = vec![0usize; n];
    let mut best1: Option<ExactValue> = None;
    let mut odo1 = Odometer::new(&d1, game);
    loop {
        odo1.apply(&mut choice);
        let mut best2: Option<ExactValue> = None;
        let mut odo2 = Odometer::new(&d2, game);
        loop {
            odo2.apply(&mut choice);
            let v = chain_value(game, &probs, &prices, &choice, &reach, target, kind);
            best2 = Some(match best2 {
                None => v,
                Some(b) if p1_max => b.min(v),
                Some(b) => b.max(v),
            });
            if !odo2.advance() {
                break;
            }
        }
        let v = best2.expect("at least one profile");
        best1 = Some(match best1 {
            None => v,
            Some(b) if p1_max => b.max(v),
            Some(b) => b.min(v),
        });
        if !odo1.advance() {
            break;
        }
    }
    Ok(best1.expect("at least one profile"))
}

struct Odometer {
    states: Vec<StateId>,
    sizes: Vec<usize>,
    digits: Vec<usize>,
}

impl Odometer {
    fn new(states: &[StateId], game: &Tsg) -> Self {
        Odometer {
            states: states.to_vec(),
            sizes: states.iter().map(|&s| game.choices[s].len()).collect(),
            digits: vec![0; states.len()],
        }
    }

    fn apply(&self, choice: &mut [usize]) {
        for (i, &s) in self.states.iter().enumerate() {
            choice[s] = self.digits[i];
        }
    }

    fn advance(&mut self) -> bool {
        for i in 0..self.digits.len() {
            self.digits[i] += 1;
            if self.digits[i] < self.sizes[i] {
                return true;
            }
            self.digits[i] = 0;
        }
        false
    }
}

/// Value at the initial state of the chain selecting `choice[s]` in every
/// reachable non-target state.
fn chain_value(
    game: &Tsg,
    probs: &[Vec<Vec<(StateId, BigRational)>>],
    prices: &[Vec<BigRational>],
    choice: &[usize],
    reach: &[bool],
    target: &[bool],
    kind: Kind,
) -> ExactValue {
    let n = game.num_states();
    let succ = |s: StateId| -> &[(StateId, BigRational)] {
        if target[s] || game.choices[s].is_empty() {
            &[]
        } else {
            &probs[s][choice[s]]
        }
    };
    // Backward closure of the target inside the chain.
    let mut can_reach = target.to_vec();
    let mut changed = true;
    while changed {
        changed = false;
        for s in 0..n {
            if reach[s] && !can_reach[s] && succ(s).iter().any(|(t, _)| can_reach[*t]) {
                can_reach[s] = true;
                changed = true;
            }
        }
    }
    let unknown: Vec<bool> = match kind {
        Kind::ProbReach => (0..n).map(|s| reach[s] && can_reach[s] && !target[s]).collect(),
        _ => {
            // Almost-sure states: those that cannot reach a state from which
            // the target is unreachable.
            let mut doomed: Vec<bool> = (0..n).map(|s| reach[s] && !can_reach[s]).collect();
            let mut changed = true;
            while changed {
                changed = false;
                for s in 0..n {
                    if reach[s] && !doomed[s] && !target[s] && succ(s).iter().any(|(t, _)| doomed[*t]) {
                        doomed[s] = true;
                        changed = true;
                    }
                }
            }
            if doomed[game.initial] {
                return ExactValue::Infinite;
            }
            (0..n).map(|s| reach[s] && !doomed[s] && !target[s]).collect()
        }
    };
    if target[game.initial] {
        let v = if kind == Kind::ProbReach { BigRational::one() } else { BigRational::zero() };
        return ExactValue::Finite(v);
    }
    if !unknown[game.initial] {
        return ExactValue::Finite(BigRational::zero());
    }
    let idx: Vec<Option<usize>> = {
        let mut k = 0;
        (0..n)
            .map(|s| {
                unknown[s].then(|| {
                    k += 1;
                    k - 1
                })
            })
            .collect()
    };
    let m = unknown.iter().filter(|&&u| u).count();
    // (I - P_UU) x = b
    let mut a = vec![vec![BigRational::zero(); m + 1]; m];
    for s in 0..n {
        let Some(i) = idx[s] else { continue };
        a[i][i] = BigRational::one();
        if kind != Kind::ProbReach {
            a[i][m] = prices[s][choice[s]].clone();
        }
        for (t, p) in succ(s) {
            if let Some(j) = idx[*t] {
                a[i][j] -= p;
            } else if kind == Kind::ProbReach && target[*t] {
                a[i][m] += p;
            }
        }
    }
    let x = gauss(a);
    ExactValue::Finite(x[idx[game.initial].unwrap()].clone())
}

/// Solves an augmented non-singular system by Gauss–Jordan elimination.
fn gauss(mut a: Vec<Vec<BigRational>>) -> Vec<BigRational> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m).find(|&r| !a[r][col].is_zero()).expect("system is non-singular");
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for j in col..=m {
            a[col][j] = &a[col][j] * &inv;
        }
        for r in 0..m {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in col..=m {
                    let delta = &f * &a[col][j];
                    a[r][j] -= delta;
                }
            }
        }
    }
    a.into_iter().map(|row| row[m].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::tests::{chain3, half_vs_three_tenths};

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn single_target_state() {
        let mut g = chain3();
        g.label_state("goal", 0);
        let t = g.target("goal").unwrap();
        let p = brute_force_solve(&g, &t, Kind::ProbReach, Direction::MaxMin, 10).unwrap();
        assert_eq!(p, ExactValue::Finite(r(1, 1)));
        let e = brute_force_solve(&g, &t, Kind::ExpPrice, Direction::MinMax, 10).unwrap();
        assert_eq!(e, ExactValue::Finite(r(0, 1)));
    }

    #[test]
    fn half_vs_three_tenths_exactly() {
        let g = half_vs_three_tenths(0);
        let t = g.target("goal").unwrap();
        let v = brute_force_solve(&g, &t, Kind::ProbReach, Direction::MaxMin, 10).unwrap();
        assert_eq!(v, ExactValue::Finite(r(1, 2)));
        let e = brute_force_solve(&g, &t, Kind::ExpPrice, Direction::MinMax, 10).unwrap();
        assert_eq!(e, ExactValue::Infinite);
    }

    #[test]
    fn chain_costs_exactly_three() {
        let g = chain3();
        let t = g.target("goal").unwrap();
        let e = brute_force_solve(&g, &t, Kind::ExpPrice, Direction::MinMax, 10).unwrap();
        assert_eq!(e, ExactValue::Finite(r(3, 1)));
    }

    #[test]
    fn oversized_games_are_refused() {
        let g = half_vs_three_tenths(0);
        let t = g.target("goal").unwrap();
        assert!(matches!(
            brute_force_solve(&g, &t, Kind::ProbReach, Direction::MaxMin, 1),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn gauss_solves_small_system() {
        let a = vec![vec![r(2, 1), r(1, 1), r(3, 1)], vec![r(1, 1), r(3, 1), r(5, 1)]];
        assert_eq!(gauss(a), vec![r(4, 5), r(7, 5)]);
    }
}
