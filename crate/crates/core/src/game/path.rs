use super::{ActionLabel, StateId, Tsg};
use crate::error::{usage, Result};

/// A finite path `s0 -a0-> s1 -a1-> ...` through an explicit game.
///
/// Actions are stored as indices into the source state's choice list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TsgPath {
    pub states: Vec<StateId>,
    pub actions: Vec<usize>,
}

impl TsgPath {
    pub fn starting_at(s: StateId) -> Self {
        TsgPath { states: vec![s], actions: Vec::new() }
    }

    /// Number of transitions, `|π|`.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn last(&self) -> StateId {
        *self.states.last().expect("a path has at least one state")
    }

    pub fn push(&mut self, action: usize, next: StateId) {
        self.actions.push(action);
        self.states.push(next);
    }

    /// The `k`-th prefix `π^(k)`.
    pub fn prefix(&self, k: usize) -> TsgPath {
        TsgPath { states: self.states[..=k].to_vec(), actions: self.actions[..k].to_vec() }
    }

    pub fn labels<'g>(&self, game: &'g Tsg) -> Vec<&'g ActionLabel> {
        self.actions
            .iter()
            .zip(&self.states)
            .map(|(&a, &s)| &game.choices[s][a].label)
            .collect()
    }

    /// Checks that every action is available in its state and every step has
    /// positive probability.
    pub fn check(&self, game: &Tsg) -> Result<()> {
        if self.states.len() != self.actions.len() + 1 {
            return usage("path must alternate states and actions");
        }
        for (i, &a) in self.actions.iter().enumerate() {
            let s = self.states[i];
            let next = self.states[i + 1];
            let Some(choice) = game.choices.get(s).and_then(|cs| cs.get(a)) else {
                return usage(format!("step {i}: action #{a} not available in state {s}"));
            };
            let p: f64 = choice.branches.iter().filter(|&&(t, _)| t == next).map(|&(_, p)| p).sum();
            if p <= 0.0 {
                return usage(format!("step {i}: state {next} has probability 0 under {}", choice.label));
            }
        }
        Ok(())
    }
}

/// A memoryless deterministic strategy profile: one chosen action index per
/// state (`None` for deadlocks).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemorylessProfile {
    pub choice: Vec<Option<usize>>,
}

impl MemorylessProfile {
    pub fn action<'g>(&self, game: &'g Tsg, s: StateId) -> Option<&'g ActionLabel> {
        self.choice.get(s).copied().flatten().map(|a| &game.choices[s][a].label)
    }

    pub fn check(&self, game: &Tsg) -> Result<()> {
        if self.choice.len() != game.num_states() {
            return usage("profile does not cover every state");
        }
        for (s, c) in self.choice.iter().enumerate() {
            match c {
                Some(a) if *a >= game.choices[s].len() => {
                    return usage(format!("profile picks unavailable action #{a} in state {s}"))
                }
                None if !game.choices[s].is_empty() => {
                    return usage(format!("profile undefined at non-deadlock state {s}"))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::Choice;
    use super::*;

    #[test]
    fn path_validation() {
        let mut g = Tsg::new(vec!["p".into()]);
        let a = g.add_state("a", 0);
        let b = g.add_state("b", 0);
        g.add_choice(a, Choice { label: ActionLabel::new(1, "x"), price: 0.0, branches: vec![(b, 1.0)] });
        let mut p = TsgPath::starting_at(a);
        p.push(0, b);
        assert!(p.check(&g).is_ok());
        assert_eq!(p.len(), 1);
        assert_eq!(p.prefix(0), TsgPath::starting_at(a));
        let mut bad = TsgPath::starting_at(a);
        bad.push(0, a);
        assert!(bad.check(&g).is_err());
    }
}
