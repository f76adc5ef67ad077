//! ε-digitization of dense-time paths, in exact rational arithmetic.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::digital::{DigitalGame, DigitalState};
use crate::error::{usage, Result};
use crate::game::ActionLabel;
use crate::model::{ClockValuation, LocId, Relation, Tptg};

/// `[t]_ε`: `⌊t⌋` if `t ≤ ⌊t⌋ + ε`, otherwise `⌈t⌉`.
pub fn digitize_scalar(t: &BigRational, eps: &BigRational) -> Result<BigInt> {
    if eps.is_negative() || *eps > BigRational::one() {
        return usage(format!("ε must lie in [0,1], got {eps}"));
    }
    if t.is_negative() {
        return usage(format!("cannot digitize negative time {t}"));
    }
    let fl = t.floor();
    if *t <= &fl + eps {
        Ok(fl.to_integer())
    } else {
        Ok(t.ceil().to_integer())
    }
}

/// A state of the dense-time semantics with rational clock values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedState {
    pub location: LocId,
    pub valuation: Vec<BigRational>,
}

/// One dense-time move: delay, action, and which branch of the action's
/// distribution was taken.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedMove {
    pub duration: BigRational,
    pub action: String,
    pub branch: usize,
}

/// A finite path of the dense-time semantics starting in `(l̄, 𝟎)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedPath {
    pub states: Vec<TimedState>,
    pub moves: Vec<TimedMove>,
}

impl TimedPath {
    pub fn initial(m: &Tptg) -> Self {
        TimedPath {
            states: vec![TimedState { location: m.initial, valuation: vec![BigRational::zero(); m.clocks.len()] }],
            moves: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Appends a move, checking it against the dense-time semantics: the
    /// invariant holds throughout the delay, the enabling condition at its
    /// end, and the successor satisfies its invariant.
    pub fn push(&mut self, m: &Tptg, mv: TimedMove) -> Result<()> {
        let cur = self.states.last().expect("paths are non-empty");
        if mv.duration.is_negative() {
            return usage("negative delay");
        }
        let loc = &m.locations[cur.location];
        let moved: Vec<BigRational> = cur.valuation.iter().map(|v| v + &mv.duration).collect();
        let holds = |c: &crate::model::ClockConstraint, v: &[BigRational]| {
            c.atoms().iter().all(|a| {
                let bound = BigRational::from_integer(a.bound.into());
                match a.rel {
                    Relation::Le => v[a.clock] <= bound,
                    Relation::Ge => v[a.clock] >= bound,
                }
            })
        };
        if !holds(&loc.invariant, &cur.valuation) || !holds(&loc.invariant, &moved) {
            return usage(format!("invariant of {} violated during the delay", loc.name));
        }
        let Some(edge) = loc.edges.iter().find(|e| e.action == mv.action) else {
            return usage(format!("no action {} in {}", mv.action, loc.name));
        };
        if !holds(&edge.enabling, &moved) {
            return usage(format!("{} is not enabled after the delay", mv.action));
        }
        let Some(b) = edge.branches.get(mv.branch).filter(|b| !b.prob.is_zero()) else {
            return usage(format!("branch {} of {} does not exist", mv.branch, mv.action));
        };
        let mut next = moved;
        for &x in &b.resets {
            next[x] = BigRational::zero();
        }
        if !holds(&m.locations[b.target].invariant, &next) {
            return usage(format!("successor violates the invariant of {}", m.locations[b.target].name));
        }
        self.states.push(TimedState { location: b.target, valuation: next });
        self.moves.push(mv);
        Ok(())
    }
}

/// `dur(π, n)`: the total delay of the first `n` moves.
pub fn accumulated_duration(path: &TimedPath, n: usize) -> Result<BigRational> {
    if n > path.len() {
        return usage(format!("index {n} beyond path length {}", path.len()));
    }
    Ok(path.moves[..n].iter().fold(BigRational::zero(), |acc, m| acc + &m.duration))
}

/// A path of the digital semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitalPath {
    pub states: Vec<DigitalState>,
    pub moves: Vec<ActionLabel>,
}

/// `[π]_ε`: delays become differences of digitized accumulated durations,
/// and every clock value is the digitized time since its last reset,
/// saturated at `k_x + 1`.
pub fn digitize_path(m: &Tptg, path: &TimedPath, eps: &BigRational) -> Result<DigitalPath> {
    let k = m.max_constants();
    let n = path.len();
    let mut dig = Vec::with_capacity(n + 1);
    let mut acc = BigRational::zero();
    dig.push(digitize_scalar(&acc, eps)?);
    for mv in &path.moves {
        acc += &mv.duration;
        dig.push(digitize_scalar(&acc, eps)?);
    }
    // last[x]: index of the state right after the latest reset of x.
    let mut last = vec![0usize; m.clocks.len()];
    let mut states = Vec::with_capacity(n + 1);
    let mut moves = Vec::with_capacity(n);
    for i in 0..=n {
        if i > 0 {
            let mv = &path.moves[i - 1];
            let loc = &m.locations[path.states[i - 1].location];
            let edge = loc.edges.iter().find(|e| e.action == mv.action).expect("validated path");
            for &x in &edge.branches[mv.branch].resets {
                last[x] = i;
            }
            let t = (&dig[i] - &dig[i - 1]).to_u64().expect("digitized delays are non-negative");
            moves.push(ActionLabel::new(t, mv.action.clone()));
        }
        let values: Vec<u32> = (0..m.clocks.len())
            .map(|x| {
                let d = (&dig[i] - &dig[last[x]]).to_u64().expect("non-negative");
                d.min(u64::from(k[x]) + 1) as u32
            })
            .collect();
        let valuation = ClockValuation::from_values(&values, &k)?;
        states.push(DigitalState { location: path.states[i].location, valuation });
    }
    Ok(DigitalPath { states, moves })
}

/// Checks that `path` is a path of the built digital game: it starts in the
/// initial state, every state exists, and every step is an available move
/// giving the next state positive probability.
pub fn validate_digital_path(game: &DigitalGame, path: &DigitalPath) -> Result<()> {
    let Some(first) = path.states.first().and_then(|s| game.state_of(s)) else {
        return usage("first state of the path is not a state of the game");
    };
    if first != game.game.initial {
        return usage("the path does not start in the initial state");
    }
    let mut cur = first;
    for (i, label) in path.moves.iter().enumerate() {
        let Some(next) = game.state_of(&path.states[i + 1]) else {
            return usage(format!("state {} of the path is not a state of the game", i + 1));
        };
        let Some(a) = game.game.choice_index(cur, label) else {
            return usage(format!("step {i}: move {label} not available in {}", game.game.names[cur]));
        };
        let p: f64 = game.game.choices[cur][a].branches.iter().filter(|b| b.0 == next).map(|b| b.1).sum();
        if p <= 0.0 {
            return usage(format!("step {i}: {} unreachable under {label}", game.game.names[next]));
        }
        cur = next;
    }
    Ok(())
}

/// Grid resolution for random delays.
const GRID: i64 = 16;

/// A random dense-time path of at most `steps` moves from `(l̄, 𝟎)`.
///
/// Every step picks uniformly among the actions that have a feasible delay,
/// then a delay uniformly from the feasible interval on the `1/16` grid, then
/// a branch according to its probability. Stops early when nothing is
/// feasible.
pub fn random_timed_path<R: Rng>(m: &Tptg, rng: &mut R, steps: usize) -> TimedPath {
    let mut path = TimedPath::initial(m);
    let grid = |r: &BigRational| (r * BigRational::from_integer(GRID.into())).to_integer();
    for _ in 0..steps {
        let cur = path.states.last().unwrap().clone();
        let loc = &m.locations[cur.location];
        // Feasible delays as integer grid units [lo, hi].
        let mut options: Vec<(usize, i64, i64)> = Vec::new();
        for (ei, e) in loc.edges.iter().enumerate() {
            let mut lo = 0i64;
            let mut hi = i64::MAX;
            let mut apply = |c: &crate::model::ClockConstraint, vals: &[BigRational], skip: &[usize]| {
                for a in c.atoms() {
                    if skip.contains(&a.clock) {
                        // Reset clocks are 0 after the move.
                        let ok = match a.rel {
                            Relation::Le => true,
                            Relation::Ge => a.bound == 0,
                        };
                        if !ok {
                            hi = -1;
                        }
                        continue;
                    }
                    let v = grid(&vals[a.clock]).to_i64().unwrap();
                    let b = i64::from(a.bound) * GRID;
                    match a.rel {
                        Relation::Le => hi = hi.min(b - v),
                        Relation::Ge => lo = lo.max(b - v),
                    }
                }
            };
            apply(&loc.invariant, &cur.valuation, &[]);
            apply(&e.enabling, &cur.valuation, &[]);
            for b in e.branches.iter().filter(|b| !b.prob.is_zero()) {
                apply(&m.locations[b.target].invariant, &cur.valuation, &b.resets);
            }
            if lo <= hi && hi != i64::MAX {
                options.push((ei, lo, hi));
            }
        }
        if options.is_empty() {
            break;
        }
        let (ei, lo, hi) = options[rng.gen_range(0..options.len())];
        let units = rng.gen_range(lo..=hi);
        let e = &loc.edges[ei];
        let mut u: f64 = rng.gen();
        let mut branch = 0;
        for (bi, b) in e.branches.iter().enumerate() {
            if b.prob.is_zero() {
                continue;
            }
            branch = bi;
            let p = b.prob.to_f64().unwrap();
            if u < p {
                break;
            }
            u -= p;
        }
        let mv = TimedMove {
            duration: BigRational::new(units.into(), GRID.into()),
            action: e.action.clone(),
            branch,
        };
        path.push(m, mv).expect("feasible by construction");
    }
    path
}
