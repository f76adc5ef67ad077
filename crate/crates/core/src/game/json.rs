//! JSON import/export of explicit games.
//!
//! Probabilities travel as decimal strings carrying 17 significant digits so
//! that every binary64 value round-trips exactly.

use serde::{Deserialize, Serialize};

use super::{ActionLabel, Choice, Tsg};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GameJson {
    pub players: Vec<String>,
    pub states: Vec<JsonState>,
    pub initial: usize,
    pub transitions: Vec<JsonTransition>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct JsonState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub owner: String,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct JsonTransition {
    pub from: usize,
    pub action: String,
    pub price: f64,
    pub branches: Vec<JsonBranch>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct JsonBranch {
    pub to: usize,
    pub prob: String,
}

/// Positional decimal rendering with 17 significant digits.
pub(crate) fn decimal17(p: f64) -> String {
    if p == 0.0 || !p.is_finite() {
        return format!("{:.16}", p);
    }
    let magnitude = p.abs().log10().floor() as i32;
    let decimals = (16 - magnitude).max(0) as usize;
    format!("{:.*}", decimals, p)
}

impl Tsg {
    pub fn to_json(&self) -> GameJson {
        let mut state_labels = vec![Vec::new(); self.num_states()];
        for (name, set) in &self.labels {
            for &s in set {
                state_labels[s].push(name.clone());
            }
        }
        let states = (0..self.num_states())
            .map(|s| JsonState {
                name: Some(self.names[s].clone()),
                owner: self.players[self.owner[s]].clone(),
                labels: std::mem::take(&mut state_labels[s]),
            })
            .collect();
        let transitions = self
            .choices
            .iter()
            .enumerate()
            .flat_map(|(s, cs)| {
                cs.iter().map(move |c| JsonTransition {
                    from: s,
                    action: c.label.to_string(),
                    price: c.price,
                    branches: c
                        .branches
                        .iter()
                        .map(|&(to, p)| JsonBranch { to, prob: decimal17(p) })
                        .collect(),
                })
            })
            .collect();
        GameJson { players: self.players.clone(), states, initial: self.initial, transitions }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("game JSON is always serializable")
    }

    pub fn from_json(doc: &GameJson) -> Result<Tsg> {
        let mut g = Tsg::new(doc.players.clone());
        for (i, st) in doc.states.iter().enumerate() {
            let owner = g
                .player_id(&st.owner)
                .ok_or_else(|| Error::Model(format!("state {i}: unknown owner `{}`", st.owner)))?;
            let name = st.name.clone().unwrap_or_else(|| i.to_string());
            g.add_state(name, owner);
            for l in &st.labels {
                g.label_state(l, i);
            }
        }
        g.initial = doc.initial;
        for t in &doc.transitions {
            if t.from >= g.num_states() {
                return Err(Error::Model(format!("transition from missing state {}", t.from)));
            }
            let label: ActionLabel = t.action.parse()?;
            let mut branches = Vec::with_capacity(t.branches.len());
            for b in &t.branches {
                let p: f64 = b
                    .prob
                    .trim()
                    .parse()
                    .map_err(|_| Error::Model(format!("bad probability `{}`", b.prob)))?;
                branches.push((b.to, p));
            }
            g.add_choice(t.from, Choice { label, price: t.price, branches });
        }
        Ok(g)
    }

    pub fn from_json_str(text: &str) -> Result<Tsg> {
        let doc: GameJson = serde_json::from_str(text)?;
        Tsg::from_json(&doc)
    }
}
