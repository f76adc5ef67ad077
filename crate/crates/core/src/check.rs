//! Property checking: model → digital game → coalition game → solution.

use crate::diag::Diagnostic;
use crate::digital::{self, DigitalGame, DEFAULT_STATE_LIMIT};
use crate::dsl::ast::PropKind;
use crate::dsl::Property;
use crate::error::{usage, Result};
use crate::game::Tsg;
use crate::model::Tptg;
use crate::solver::{self, Direction, Kind, Objective, SolveOptions, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckOptions {
    pub solve: SolveOptions,
    pub state_limit: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { solve: SolveOptions::default(), state_limit: DEFAULT_STATE_LIMIT }
    }
}

/// Everything computed for one property.
#[derive(Clone, Debug)]
pub struct Checked {
    pub digital: DigitalGame,
    /// Two-player game: the coalition is player 0.
    pub game: Tsg,
    pub objective: Objective,
    pub result: SolveResult,
    pub warnings: Vec<Diagnostic>,
}

impl Checked {
    pub fn value(&self) -> f64 {
        self.result.value()
    }
}

/// The solver objective of a property on the coalition game, with the
/// name of its target label.
pub fn objective(prop: &Property, target: &str) -> Objective {
    let direction = match prop.kind {
        PropKind::Pmax | PropKind::Emax => Direction::MaxMin,
        PropKind::Pmin | PropKind::Emin => Direction::MinMax,
    };
    let kind = match (prop.kind.is_probability(), prop.bound) {
        (true, _) => Kind::ProbReach,
        (false, None) => Kind::ExpPrice,
        (false, Some(n)) => Kind::BoundedExpPrice(n as usize),
    };
    Objective { kind, direction, target: target.to_string() }
}

/// The games behind `prop`: the digital game of the (possibly time-bounded)
/// model with the property's price, its coalition game, and the objective
/// on the latter.
pub fn build_games(m: &Tptg, prop: &Property, state_limit: usize) -> Result<(DigitalGame, Tsg, Objective)> {
    let (model, target) = match (prop.kind.is_probability(), prop.bound) {
        (true, Some(t)) => {
            let Ok(t) = u32::try_from(t) else {
                return usage(format!("time bound {t} is too large"));
            };
            m.with_time_bound(&prop.label, t)?
        }
        _ => (m.clone(), prop.label.clone()),
    };
    let price = match &prop.price {
        Some(p) if !prop.kind.is_probability() => Some(model.price_index(p)?),
        _ => None,
    };
    let digital = digital::build(&model, price, state_limit)?;
    let game = digital.game.coalition_game(&prop.coalition)?;
    Ok((digital, game, objective(prop, &target)))
}

/// Builds the game for `prop` and solves it.
pub fn check_property(m: &Tptg, prop: &Property, opts: &CheckOptions) -> Result<Checked> {
    let (digital, game, objective) = build_games(m, prop, opts.state_limit)?;
    let result = solver::solve(&game, &objective, &opts.solve)?;
    let mut warnings = digital.warnings.clone();
    warnings.extend(result.warnings.iter().cloned());
    Ok(Checked { digital, game, objective, result, warnings })
}
