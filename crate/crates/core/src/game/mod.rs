//! Explicit finite turn-based stochastic games.

mod json;
mod path;
pub mod random;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::diag::Diagnostic;
use crate::error::{usage, Error, Result};

pub use json::{GameJson, JsonBranch, JsonState, JsonTransition};
pub use path::{MemorylessProfile, TsgPath};

pub type StateId = usize;
pub type PlayerId = usize;

/// Probability masses are accepted as a distribution when they sum to one
/// within this absolute slack.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Name of the label automatically attached to deadlock states by the
/// digital-semantics builder.
pub const DEADLOCK_LABEL: &str = "deadlock";

/// An action of the explicit game: a delay followed by a named action.
///
/// Ordering is lexicographic by `(duration, name)`, which is also the
/// tie-breaking order used by strategy synthesis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionLabel {
    pub duration: u64,
    pub name: String,
}

impl ActionLabel {
    pub fn new(duration: u64, name: impl Into<String>) -> Self {
        ActionLabel { duration, name: name.into() }
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.duration, self.name)
    }
}

impl FromStr for ActionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Usage(format!("malformed action label `{s}`")))?;
        let (d, name) = inner
            .split_once(',')
            .ok_or_else(|| Error::Usage(format!("malformed action label `{s}`")))?;
        let duration =
            d.trim().parse().map_err(|_| Error::Usage(format!("bad duration in `{s}`")))?;
        Ok(ActionLabel { duration, name: name.trim().to_string() })
    }
}

/// One available action of a state: its label, price and successor
/// distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Choice {
    pub label: ActionLabel,
    pub price: f64,
    pub branches: Vec<(StateId, f64)>,
}

impl Choice {
    pub fn mass(&self) -> f64 {
        self.branches.iter().map(|&(_, p)| p).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.branches.iter().filter(|&&(_, p)| p > 0.0).map(|&(t, _)| t)
    }
}

/// An explicit turn-based stochastic game.
///
/// States are dense indices. The per-state `names` are opaque display
/// strings; whatever structure a state has lives in the module that built
/// the game. Fields are public so that malformed games can be represented
/// and reported by [`Tsg::validate`]; every algorithm in the crate assumes a
/// game that validates cleanly.
#[derive(Clone, Debug, PartialEq)]
pub struct Tsg {
    pub players: Vec<String>,
    pub initial: StateId,
    pub owner: Vec<PlayerId>,
    pub names: Vec<String>,
    /// Available actions per state, sorted by label.
    pub choices: Vec<Vec<Choice>>,
    /// States without available actions must be flagged here.
    pub deadlock: Vec<bool>,
    pub labels: BTreeMap<String, BTreeSet<StateId>>,
}

impl Tsg {
    /// An empty game over the given players; states are added with
    /// [`Tsg::add_state`].
    pub fn new(players: Vec<String>) -> Self {
        Tsg {
            players,
            initial: 0,
            owner: Vec::new(),
            names: Vec::new(),
            choices: Vec::new(),
            deadlock: Vec::new(),
            labels: BTreeMap::new(),
        }
    }

    pub fn add_state(&mut self, name: impl Into<String>, owner: PlayerId) -> StateId {
        let id = self.names.len();
        self.names.push(name.into());
        self.owner.push(owner);
        self.choices.push(Vec::new());
        self.deadlock.push(true);
        id
    }

    /// Adds an action to `state`, keeping the per-state list sorted.
    pub fn add_choice(&mut self, state: StateId, choice: Choice) {
        let list = &mut self.choices[state];
        let pos = list.partition_point(|c| c.label < choice.label);
        list.insert(pos, choice);
        self.deadlock[state] = false;
    }

    pub fn label_state(&mut self, label: &str, state: StateId) {
        self.labels.entry(label.to_string()).or_default().insert(state);
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_choices(&self) -> usize {
        self.choices.iter().map(Vec::len).sum()
    }

    pub fn num_branches(&self) -> usize {
        self.choices.iter().flatten().map(|c| c.branches.len()).sum()
    }

    pub fn player_id(&self, name: &str) -> Option<PlayerId> {
        self.players.iter().position(|p| p == name)
    }

    /// `A(s)` in insertion (= label) order.
    pub fn available_actions(&self, s: StateId) -> Result<Vec<&ActionLabel>> {
        match self.choices.get(s) {
            Some(cs) => Ok(cs.iter().map(|c| &c.label).collect()),
            None => usage(format!("state index {s} out of range ({} states)", self.num_states())),
        }
    }

    pub fn choice_index(&self, s: StateId, label: &ActionLabel) -> Option<usize> {
        self.choices.get(s)?.iter().position(|c| &c.label == label)
    }

    /// Membership vector of a label, or a usage error naming the label.
    pub fn target(&self, label: &str) -> Result<Vec<bool>> {
        let set = self
            .labels
            .get(label)
            .ok_or_else(|| Error::Usage(format!("unknown label `{label}`")))?;
        let mut v = vec![false; self.num_states()];
        for &s in set {
            v[s] = true;
        }
        Ok(v)
    }

    /// The two-player game in which player `1` owns every state of a
    /// coalition member and player `2` owns the rest.
    pub fn coalition_game<S: AsRef<str>>(&self, coalition: &[S]) -> Result<Tsg> {
        let mut members = vec![false; self.players.len()];
        for name in coalition {
            let name = name.as_ref();
            match self.player_id(name) {
                Some(p) => members[p] = true,
                None => return usage(format!("unknown player `{name}` in coalition")),
            }
        }
        let owner = self
            .owner
            .iter()
            .map(|&p| if members.get(p).copied().unwrap_or(false) { 0 } else { 1 })
            .collect();
        Ok(Tsg { players: vec!["1".into(), "2".into()], owner, ..self.clone() })
    }

    /// Checks every structural invariant and reports one diagnostic per
    /// violation. An empty result means the game is well formed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let n = self.num_states();
        if self.owner.len() != n {
            out.push(Diagnostic::error(
                "partition",
                format!("owner map covers {} of {} states", self.owner.len(), n),
            ));
        }
        for (s, &p) in self.owner.iter().enumerate() {
            if p >= self.players.len() {
                out.push(Diagnostic::error(
                    "partition",
                    format!("state {s} owned by unknown player index {p}"),
                ));
            }
        }
        if self.choices.len() != n || self.deadlock.len() != n {
            out.push(Diagnostic::error(
                "shape",
                format!(
                    "{} states but {} action lists and {} deadlock flags",
                    n,
                    self.choices.len(),
                    self.deadlock.len()
                ),
            ));
        }
        if n > 0 && self.initial >= n {
            out.push(Diagnostic::error("initial", format!("initial state {} out of range", self.initial)));
        }
        for (s, cs) in self.choices.iter().enumerate() {
            let flagged = self.deadlock.get(s).copied().unwrap_or(false);
            if cs.is_empty() && !flagged {
                out.push(Diagnostic::error(
                    "deadlock",
                    format!("state {s} has no actions but is not flagged as deadlock"),
                ));
            }
            if !cs.is_empty() && flagged {
                out.push(Diagnostic::error(
                    "deadlock",
                    format!("state {s} is flagged as deadlock but has {} actions", cs.len()),
                ));
            }
            for (i, c) in cs.iter().enumerate() {
                if !(c.price >= 0.0) {
                    out.push(Diagnostic::error(
                        "price",
                        format!("state {s} action {} has price {}", c.label, c.price),
                    ));
                }
                for &(t, p) in &c.branches {
                    if t >= n {
                        out.push(Diagnostic::error(
                            "successor",
                            format!("state {s} action {} targets missing state {t}", c.label),
                        ));
                    }
                    if !(0.0..=1.0).contains(&p) {
                        out.push(Diagnostic::error(
                            "probability-range",
                            format!("state {s} action {} has probability {p}", c.label),
                        ));
                    }
                }
                let mass = c.mass();
                if (mass - 1.0).abs() > MASS_TOLERANCE {
                    out.push(Diagnostic::error(
                        "distribution-mass",
                        format!("state {s} action #{i} {} has mass {mass}", c.label),
                    ));
                }
                if i > 0 && cs[i - 1].label >= c.label {
                    out.push(Diagnostic::error(
                        "action-order",
                        format!("state {s}: actions not strictly sorted at {}", c.label),
                    ));
                }
            }
        }
        for (name, set) in &self.labels {
            if let Some(&bad) = set.iter().find(|&&s| s >= n) {
                out.push(Diagnostic::error("label", format!("label `{name}` names missing state {bad}")));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_state() -> Tsg {
        let mut g = Tsg::new(vec!["a".into(), "b".into()]);
        let s0 = g.add_state("s0", 0);
        let s1 = g.add_state("s1", 1);
        g.add_choice(s0, Choice { label: ActionLabel::new(0, "go"), price: 1.0, branches: vec![(s1, 1.0)] });
        g.add_choice(s1, Choice { label: ActionLabel::new(0, "stay"), price: 0.0, branches: vec![(s1, 1.0)] });
        g.label_state("goal", s1);
        g
    }

    #[test]
    fn well_formed_game_has_no_diagnostics() {
        assert!(two_state().validate().is_empty());
    }

    #[test]
    fn short_distribution_is_reported() {
        let mut g = two_state();
        g.choices[0][0].branches[0].1 = 0.9;
        let d = g.validate();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "distribution-mass");
    }

    #[test]
    fn missing_owner_is_a_partition_violation() {
        let mut g = two_state();
        g.owner.pop();
        let d = g.validate();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "partition");
    }

    #[test]
    fn available_actions_in_label_order() {
        let mut g = Tsg::new(vec!["p".into()]);
        let s = g.add_state("s", 0);
        g.add_choice(s, Choice { label: ActionLabel::new(2, "send"), price: 0.0, branches: vec![(s, 1.0)] });
        g.add_choice(s, Choice { label: ActionLabel::new(1, "send"), price: 0.0, branches: vec![(s, 1.0)] });
        let acts: Vec<String> = g.available_actions(s).unwrap().iter().map(|a| a.to_string()).collect();
        assert_eq!(acts, vec!["(1,send)", "(2,send)"]);
        assert!(g.available_actions(7).is_err());
    }

    #[test]
    fn deadlock_state_has_no_actions() {
        let mut g = Tsg::new(vec!["p".into()]);
        let s = g.add_state("dead", 0);
        assert!(g.available_actions(s).unwrap().is_empty());
        assert!(g.deadlock[s]);
    }

    #[test]
    fn coalition_extremes() {
        let g = two_state();
        let all = g.coalition_game(&["a", "b"]).unwrap();
        assert!(all.owner.iter().all(|&p| p == 0));
        let none = g.coalition_game::<&str>(&[]).unwrap();
        assert!(none.owner.iter().all(|&p| p == 1));
        assert_eq!(none.players, vec!["1", "2"]);
        assert!(g.coalition_game(&["z"]).is_err());
    }

    #[test]
    fn coalition_game_is_idempotent_on_two_player_games() {
        let g = two_state().coalition_game(&["a"]).unwrap();
        assert_eq!(g.coalition_game(&["1"]).unwrap(), g);
    }

    #[test]
    fn action_label_text_round_trip() {
        let l = ActionLabel::new(12, "p1_t3");
        assert_eq!(l.to_string().parse::<ActionLabel>().unwrap(), l);
        assert!("1,send".parse::<ActionLabel>().is_err());
    }
}
