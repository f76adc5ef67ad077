//! Monte-Carlo simulation of explicit games under a policy.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{usage, Result};
use crate::game::{MemorylessProfile, StateId, Tsg, TsgPath};

/// z-score of the two-sided 99% normal interval.
pub const Z99: f64 = 2.5758293035489;

/// Chooses an action index in the last state of a (non-deadlocked) history.
pub trait Policy {
    fn choose(&mut self, game: &Tsg, history: &TsgPath, rng: &mut ChaCha8Rng) -> Result<usize>;
}

/// Follows a memoryless deterministic profile.
pub struct MemorylessPolicy(pub MemorylessProfile);

impl Policy for MemorylessPolicy {
    fn choose(&mut self, game: &Tsg, history: &TsgPath, _: &mut ChaCha8Rng) -> Result<usize> {
        let s = history.last();
        match self.0.choice.get(s).copied().flatten() {
            Some(a) if a < game.choices[s].len() => Ok(a),
            _ => usage(format!("strategy undefined in state {}", game.names[s])),
        }
    }
}

/// Picks uniformly among the available actions.
pub struct UniformPolicy;

impl Policy for UniformPolicy {
    fn choose(&mut self, game: &Tsg, history: &TsgPath, rng: &mut ChaCha8Rng) -> Result<usize> {
        Ok(rng.gen_range(0..game.choices[history.last()].len()))
    }
}

/// A history-dependent policy given by a closure.
pub struct ScriptedPolicy<F>(pub F);

impl<F> Policy for ScriptedPolicy<F>
where
    F: FnMut(&Tsg, &TsgPath) -> Option<usize>,
{
    fn choose(&mut self, game: &Tsg, history: &TsgPath, _: &mut ChaCha8Rng) -> Result<usize> {
        match (self.0)(game, history) {
            Some(a) if a < game.choices[history.last()].len() => Ok(a),
            _ => usage(format!("script has no valid action in state {}", game.names[history.last()])),
        }
    }
}

/// Per-player policies: state owners consult their own policy.
pub struct Joint<'a>(pub Vec<&'a mut dyn Policy>);

impl Policy for Joint<'_> {
    fn choose(&mut self, game: &Tsg, history: &TsgPath, rng: &mut ChaCha8Rng) -> Result<usize> {
        let owner = game.owner[history.last()];
        match self.0.get_mut(owner) {
            Some(p) => p.choose(game, history, rng),
            None => usage(format!("no policy for player {owner}")),
        }
    }
}

/// How a simulated run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ending {
    Target,
    Deadlock,
    /// The step bound was hit first.
    Censored,
}

#[derive(Clone, Debug)]
pub struct Run {
    pub path: TsgPath,
    pub price: f64,
    pub ending: Ending,
}

fn sample(branches: &[(StateId, f64)], rng: &mut ChaCha8Rng) -> StateId {
    let mut u: f64 = rng.gen();
    let mut last = branches[0].0;
    for &(t, p) in branches {
        if p <= 0.0 {
            continue;
        }
        last = t;
        if u < p {
            return t;
        }
        u -= p;
    }
    last
}

/// One run from the initial state until the target, a deadlock, or
/// `max_steps` transitions.
pub fn simulate(
    game: &Tsg,
    policy: &mut dyn Policy,
    target: &[bool],
    max_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Run> {
    let mut path = TsgPath::starting_at(game.initial);
    let mut price = 0.0;
    loop {
        let s = path.last();
        if target[s] {
            return Ok(Run { path, price, ending: Ending::Target });
        }
        if game.choices[s].is_empty() {
            return Ok(Run { path, price, ending: Ending::Deadlock });
        }
        if path.len() >= max_steps {
            return Ok(Run { path, price, ending: Ending::Censored });
        }
        let a = policy.choose(game, &path, rng)?;
        let c = &game.choices[s][a];
        price += c.price;
        let next = sample(&c.branches, rng);
        path.push(a, next);
    }
}

/// A mean with its 99% confidence half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub mean: f64,
    pub half_width: f64,
}

impl Interval {
    fn of(sum: f64, sum_sq: f64, n: usize) -> Option<Self> {
        if n == 0 {
            return None;
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        Some(Interval { mean, half_width: Z99 * (var / nf).sqrt() })
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        (x - self.mean).abs() <= self.half_width + slack
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub samples: usize,
    pub hits: usize,
    pub deadlocks: usize,
    pub censored: usize,
    /// Reachability probability over all runs (censored runs count as misses).
    pub probability: Interval,
    /// Accumulated price over the runs that reached the target.
    pub price: Option<Interval>,
}

/// Runs `samples` independent simulations. Run `i` draws from its own
/// ChaCha8 stream `i` under `seed`, so results do not depend on scheduling.
pub fn estimate(
    game: &Tsg,
    policy: &mut dyn Policy,
    target: &[bool],
    samples: usize,
    max_steps: usize,
    seed: u64,
) -> Result<Estimate> {
    if samples == 0 {
        return usage("need at least one sample");
    }
    let (mut hits, mut deadlocks, mut censored) = (0, 0, 0);
    let (mut ps, mut ps2) = (0.0, 0.0);
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let run = simulate(game, policy, target, max_steps, &mut rng)?;
        match run.ending {
            Ending::Target => {
                hits += 1;
                ps += run.price;
                ps2 += run.price * run.price;
            }
            Ending::Deadlock => deadlocks += 1,
            Ending::Censored => censored += 1,
        }
    }
    let h = hits as f64;
    Ok(Estimate {
        samples,
        hits,
        deadlocks,
        censored,
        probability: Interval::of(h, h, samples).expect("samples > 0"),
        price: Interval::of(ps, ps2, hits),
    })
}

#[derive(Serialize)]
struct TraceStep<'a> {
    step: usize,
    state: &'a str,
    action: &'a str,
    duration: u64,
    price: f64,
}

/// Writes a run as JSON lines, one per transition.
pub fn write_trace(game: &Tsg, run: &Run, out: &mut dyn Write) -> Result<()> {
    for (i, (&a, &s)) in run.path.actions.iter().zip(&run.path.states).enumerate() {
        let c = &game.choices[s][a];
        let step = TraceStep {
            step: i,
            state: &game.names[s],
            action: &c.label.name,
            duration: c.label.duration,
            price: c.price,
        };
        serde_json::to_writer(&mut *out, &step)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
