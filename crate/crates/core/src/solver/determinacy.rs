use super::{solve, Objective, SolveOptions};
use crate::error::{usage, Result};
use crate::game::{MemorylessProfile, PlayerId, Tsg};

/// The game in which every state of `player` (every state, for `None`) keeps
/// only the action `profile` chooses there.
pub fn restrict(game: &Tsg, profile: &MemorylessProfile, player: Option<PlayerId>) -> Result<Tsg> {
    if profile.choice.len() != game.num_states() {
        return usage(format!(
            "profile covers {} states, game has {}",
            profile.choice.len(),
            game.num_states()
        ));
    }
    let mut g = game.clone();
    for s in 0..g.num_states() {
        if g.choices[s].is_empty() || player.is_some_and(|p| g.owner[s] != p) {
            continue;
        }
        match profile.choice[s] {
            Some(a) if a < g.choices[s].len() => {
                let keep = g.choices[s].swap_remove(a);
                g.choices[s] = vec![keep];
            }
            _ => return usage(format!("profile undefined at state {s} ({})", g.names[s])),
        }
    }
    Ok(g)
}

/// Two certified bounds on the game value at the initial state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Determinacy {
    /// The value of the game itself.
    pub value: f64,
    /// Lower end of the sandwich `lower ≤ sup inf ≤ inf sup ≤ upper`.
    pub supinf: f64,
    /// Upper end of the sandwich.
    pub infsup: f64,
}

impl Determinacy {
    pub fn gap(&self) -> f64 {
        if self.supinf == self.infsup {
            0.0
        } else {
            self.infsup - self.supinf
        }
    }
}

/// Checks determinacy empirically. The game is solved, then each player's
/// synthesized strategy is fixed in turn and the opponent's best response
/// is computed. What player 1 can guarantee bounds `sup inf` from one side
/// and what player 2 can guarantee bounds `inf sup` from the other, so a
/// small gap between the two certifies that both orders of optimization
/// agree.
pub fn check_determinacy(game: &Tsg, objective: &Objective, opts: &SolveOptions) -> Result<Determinacy> {
    let inner = SolveOptions { tol: opts.tol * 1e-2, ..*opts };
    let r = solve(game, objective, &inner)?;
    let fix1 = restrict(game, &r.strategy, Some(0))?;
    let fix2 = restrict(game, &r.strategy, Some(1))?;
    let v1 = solve(&fix1, objective, &inner)?.value();
    let v2 = solve(&fix2, objective, &inner)?.value();
    Ok(Determinacy { value: r.value(), supinf: v1.min(v2), infsup: v1.max(v2) })
}
