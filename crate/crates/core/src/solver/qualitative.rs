use super::Direction;
use crate::game::Tsg;

/// States from which the maximizer can force a positive probability of
/// reaching `target` (the positive attractor).
pub(crate) fn positive_attractor(game: &Tsg, target: &[bool], dir: Direction) -> Vec<bool> {
    let n = game.num_states();
    let mut inside = target.to_vec();
    let mut changed = true;
    while changed {
        changed = false;
        for s in (0..n).rev() {
            if inside[s] || game.choices[s].is_empty() {
                continue;
            }
            let hits = |c: &crate::game::Choice| c.support().any(|t| inside[t]);
            let join = if dir.maximizes(game.owner[s]) {
                game.choices[s].iter().any(hits)
            } else {
                game.choices[s].iter().all(hits)
            };
            if join {
                inside[s] = true;
                changed = true;
            }
        }
    }
    inside
}

/// States from which the maximizer can force reaching `target` with
/// probability one: `νY. μX. F ∪ Pre(Y, X)` where maximizer states need some
/// action staying in `Y` and touching `X`, minimizer states need every
/// action to do so.
pub(crate) fn almost_sure(game: &Tsg, target: &[bool], dir: Direction) -> Vec<bool> {
    almost_sure_strategies(game, target, dir).set
}

/// The almost-sure set with a witnessing strategy for the minimizer.
pub(crate) struct AlmostSure {
    pub set: Vec<bool>,
    /// For minimizer states outside the set: an action that keeps the
    /// probability of reaching the target below one, whatever the maximizer
    /// does. Each one either leaves the current `Y` towards states removed
    /// earlier or never touches `X`.
    pub spoil: Vec<Option<usize>>,
}

pub(crate) fn almost_sure_strategies(game: &Tsg, target: &[bool], dir: Direction) -> AlmostSure {
    let n = game.num_states();
    let mut y = vec![true; n];
    let mut spoil = vec![None; n];
    loop {
        let mut x = target.to_vec();
        let good = |c: &crate::game::Choice, x: &[bool]| c.support().all(|t| y[t]) && c.support().any(|t| x[t]);
        let mut changed = true;
        while changed {
            changed = false;
            for s in (0..n).rev() {
                if x[s] || !y[s] || game.choices[s].is_empty() {
                    continue;
                }
                let join = if dir.maximizes(game.owner[s]) {
                    game.choices[s].iter().any(|c| good(c, &x))
                } else {
                    game.choices[s].iter().all(|c| good(c, &x))
                };
                if join {
                    x[s] = true;
                    changed = true;
                }
            }
        }
        for s in 0..n {
            if y[s] && !x[s] && !dir.maximizes(game.owner[s]) {
                spoil[s] = game.choices[s].iter().position(|c| !good(c, &x));
            }
        }
        if x == y {
            return AlmostSure { set: y, spoil };
        }
        y = x;
    }
}

/// `(prob0, prob1)`: the states whose optimal probability of reaching
/// `target` is 0, respectively 1, computed by graph fixpoints only.
/// Deadlocks outside the target belong to `prob0`.
pub fn qualitative_reach(game: &Tsg, target: &[bool], dir: Direction) -> (Vec<bool>, Vec<bool>) {
    let prob0 = positive_attractor(game, target, dir).into_iter().map(|b| !b).collect();
    (prob0, almost_sure(game, target, dir))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::tests::{chain3, half_vs_three_tenths};

    #[test]
    fn everything_is_target() {
        let g = chain3();
        let (p0, p1) = qualitative_reach(&g, &[true; 4], Direction::MaxMin);
        assert_eq!(p1, vec![true; 4]);
        assert_eq!(p0, vec![false; 4]);
    }

    #[test]
    fn unreachable_target_gives_prob0_everywhere() {
        let g = half_vs_three_tenths(0);
        let (p0, p1) = qualitative_reach(&g, &[false; 3], Direction::MaxMin);
        assert_eq!(p0, vec![true; 3]);
        assert_eq!(p1, vec![false; 3]);
    }

    #[test]
    fn lossy_choice_is_neither() {
        let g = half_vs_three_tenths(0);
        let (p0, p1) = qualitative_reach(&g, &[false, true, false], Direction::MaxMin);
        assert_eq!(p0, vec![false, false, true]);
        assert_eq!(p1, vec![false, true, false]);
    }
}
