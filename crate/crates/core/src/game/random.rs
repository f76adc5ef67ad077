//! Seeded random explicit games for property suites and benchmarks.
//!
//! Probabilities are multiples of 1/16, so they are exact in binary64 and
//! exact-rational oracles stay cheap.

use rand::Rng;

use super::{ActionLabel, Choice, Tsg, DEADLOCK_LABEL};

/// Label carried by the single target state of a random game.
pub const GOAL: &str = "goal";

#[derive(Clone, Debug)]
pub struct RandomGameParams {
    pub min_states: usize,
    pub max_states: usize,
    pub players: usize,
    pub max_actions: usize,
    pub max_branches: usize,
    pub min_price: u32,
    pub max_price: u32,
    /// Sixteenths of every action's mass sent straight to the goal.
    pub goal_mass: u32,
    /// Probability that a non-initial state is an unlabeled sink.
    pub sink_prob: f64,
}

impl Default for RandomGameParams {
    fn default() -> Self {
        RandomGameParams {
            min_states: 2,
            max_states: 10,
            players: 2,
            max_actions: 3,
            max_branches: 3,
            min_price: 0,
            max_price: 4,
            goal_mass: 0,
            sink_prob: 0.1,
        }
    }
}

/// Generates a game whose last state is the (deadlocked) goal.
pub fn random_game<R: Rng>(rng: &mut R, params: &RandomGameParams) -> Tsg {
    let n = rng.gen_range(params.min_states.max(2)..=params.max_states.max(2));
    let players = (1..=params.players.max(1)).map(|i| i.to_string()).collect();
    let mut g = Tsg::new(players);
    for s in 0..n {
        g.add_state(format!("s{s}"), rng.gen_range(0..params.players.max(1)));
    }
    let goal = n - 1;
    g.label_state(GOAL, goal);
    for s in 0..goal {
        if s > 0 && rng.gen_bool(params.sink_prob) {
            g.label_state(DEADLOCK_LABEL, s);
            continue;
        }
        let k = rng.gen_range(1..=params.max_actions.max(1));
        for a in 0..k {
            let mut units = 16 - params.goal_mass.min(16);
            let mut branches: Vec<(usize, f64)> = Vec::new();
            if params.goal_mass > 0 {
                branches.push((goal, f64::from(params.goal_mass.min(16)) / 16.0));
            }
            let b = rng.gen_range(1..=params.max_branches.max(1)).min(units.max(1) as usize);
            for i in 0..b {
                if units == 0 {
                    break;
                }
                let share = if i + 1 == b { units } else { rng.gen_range(1..=units - (b - 1 - i) as u32) };
                units -= share;
                let t = rng.gen_range(0..n);
                match branches.iter_mut().find(|(x, _)| *x == t) {
                    Some(e) => e.1 += f64::from(share) / 16.0,
                    None => branches.push((t, f64::from(share) / 16.0)),
                }
            }
            branches.sort_by_key(|&(t, _)| t);
            let price = f64::from(rng.gen_range(params.min_price..=params.max_price));
            g.add_choice(s, Choice { label: ActionLabel::new(0, format!("a{a}")), price, branches });
        }
    }
    g.label_state(DEADLOCK_LABEL, goal);
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_games_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = RandomGameParams { goal_mass: rng.gen_range(0..8), ..Default::default() };
            let g = random_game(&mut rng, &p);
            assert!(g.validate().is_empty(), "{:?}", g.validate());
        }
    }
}
