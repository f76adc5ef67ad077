use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{usage, Result};

pub type ClockId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Le,
    Ge,
}

/// `clock ≤ bound` or `clock ≥ bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub clock: ClockId,
    pub rel: Relation,
    pub bound: u32,
}

impl Atom {
    pub fn le(clock: ClockId, bound: u32) -> Self {
        Atom { clock, rel: Relation::Le, bound }
    }

    pub fn ge(clock: ClockId, bound: u32) -> Self {
        Atom { clock, rel: Relation::Ge, bound }
    }

    pub fn holds(&self, value: u64) -> bool {
        match self.rel {
            Relation::Le => value <= u64::from(self.bound),
            Relation::Ge => value >= u64::from(self.bound),
        }
    }
}

/// A closed, diagonal-free clock constraint: a conjunction of single-clock
/// non-strict bounds. The empty conjunction is `true`.
///
/// The representation cannot express strict or diagonal atoms, so closedness
/// holds by construction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ClockConstraint {
    atoms: Vec<Atom>,
}

impl ClockConstraint {
    pub fn top() -> Self {
        ClockConstraint::default()
    }

    pub fn new(mut atoms: Vec<Atom>) -> Self {
        atoms.sort();
        atoms.dedup();
        ClockConstraint { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_top(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn and(&self, other: &ClockConstraint) -> ClockConstraint {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        ClockConstraint::new(atoms)
    }

    /// Largest upper bound imposed on `clock`, if any.
    pub fn upper_bound(&self, clock: ClockId) -> Option<u32> {
        self.atoms
            .iter()
            .filter(|a| a.clock == clock && a.rel == Relation::Le)
            .map(|a| a.bound)
            .min()
    }

    pub fn has_upper_bound(&self) -> bool {
        self.atoms.iter().any(|a| a.rel == Relation::Le)
    }

    pub fn max_clock(&self) -> Option<ClockId> {
        self.atoms.iter().map(|a| a.clock).max()
    }

    /// Renames clocks through `map` (old index → new index).
    pub fn remap(&self, map: &[ClockId]) -> ClockConstraint {
        ClockConstraint::new(
            self.atoms.iter().map(|a| Atom { clock: map[a.clock], ..*a }).collect(),
        )
    }

    /// Evaluation against raw clock values; callers guarantee every clock is
    /// in range.
    pub fn holds_on(&self, values: &[u32]) -> bool {
        self.atoms.iter().all(|a| a.holds(u64::from(values[a.clock])))
    }

    pub fn display<'a>(&'a self, clocks: &'a [String]) -> impl fmt::Display + 'a {
        ConstraintDisplay { c: self, clocks }
    }
}

struct ConstraintDisplay<'a> {
    c: &'a ClockConstraint,
    clocks: &'a [String],
}

impl fmt::Display for ConstraintDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.atoms.is_empty() {
            return f.write_str("true");
        }
        for (i, a) in self.c.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            let name = self.clocks.get(a.clock).map(String::as_str).unwrap_or("?");
            let op = if a.rel == Relation::Le { "<=" } else { ">=" };
            write!(f, "{name} {op} {}", a.bound)?;
        }
        Ok(())
    }
}

/// A digital clock valuation together with the saturation ceilings
/// `k_x + 1` of its clocks. Equality and hashing look at the values only.
#[derive(Clone, Debug)]
pub struct ClockValuation {
    values: Vec<u32>,
    ceilings: Arc<[u32]>,
}

impl PartialEq for ClockValuation {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl Eq for ClockValuation {}

impl Hash for ClockValuation {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.values.hash(state);
    }
}

impl ClockValuation {
    /// The all-zero valuation `𝟎` for clocks with the given maximal
    /// constants `k_x`.
    pub fn zero(max_constants: &[u32]) -> Self {
        ClockValuation {
            values: vec![0; max_constants.len()],
            ceilings: max_constants.iter().map(|k| k + 1).collect(),
        }
    }

    /// Builds a valuation from explicit values, saturating each at `k_x+1`.
    pub fn from_values(values: &[u32], max_constants: &[u32]) -> Result<Self> {
        if values.len() != max_constants.len() {
            return usage(format!("{} values for {} clocks", values.len(), max_constants.len()));
        }
        let mut v = ClockValuation::zero(max_constants);
        for (i, &x) in values.iter().enumerate() {
            v.values[i] = x.min(v.ceilings[i]);
        }
        Ok(v)
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn get(&self, clock: ClockId) -> Option<u32> {
        self.values.get(clock).copied()
    }

    pub fn ceiling(&self, clock: ClockId) -> u32 {
        self.ceilings[clock]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `v + t` with per-clock saturation at `k_x + 1`.
    pub fn advance(&self, t: u64) -> ClockValuation {
        let values = self
            .values
            .iter()
            .zip(self.ceilings.iter())
            .map(|(&v, &c)| (u64::from(v) + t).min(u64::from(c)) as u32)
            .collect();
        ClockValuation { values, ceilings: Arc::clone(&self.ceilings) }
    }

    /// `v[X := 0]`.
    pub fn reset(&self, clocks: &[ClockId]) -> Result<ClockValuation> {
        let mut out = self.clone();
        for &x in clocks {
            match out.values.get_mut(x) {
                Some(v) => *v = 0,
                None => return usage(format!("reset of unknown clock index {x}")),
            }
        }
        Ok(out)
    }

    pub fn satisfies(&self, zeta: &ClockConstraint) -> Result<bool> {
        if let Some(max) = zeta.max_clock() {
            if max >= self.values.len() {
                return usage(format!("constraint mentions unknown clock index {max}"));
            }
        }
        Ok(zeta.holds_on(&self.values))
    }
}

/// Free-function form of [`ClockValuation::satisfies`].
pub fn satisfies(v: &ClockValuation, zeta: &ClockConstraint) -> Result<bool> {
    v.satisfies(zeta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const X: ClockId = 0;
    const Y: ClockId = 1;

    #[test]
    fn satisfaction_examples() {
        let v = ClockValuation::from_values(&[1, 3], &[5, 5]).unwrap();
        let zeta = ClockConstraint::new(vec![Atom::le(X, 2), Atom::ge(Y, 3)]);
        assert!(satisfies(&v, &zeta).unwrap());
        let zero = ClockValuation::zero(&[5, 5]);
        assert!(satisfies(&zero, &ClockConstraint::top()).unwrap());
    }

    #[test]
    fn saturated_value_exceeds_its_constant() {
        let k = 4;
        let v = ClockValuation::from_values(&[k + 1], &[k]).unwrap();
        assert!(!v.satisfies(&ClockConstraint::new(vec![Atom::le(X, k)])).unwrap());
    }

    #[test]
    fn unknown_clock_is_a_usage_error() {
        let v = ClockValuation::zero(&[3]);
        assert!(v.satisfies(&ClockConstraint::new(vec![Atom::le(Y, 1)])).is_err());
        assert!(v.reset(&[Y]).is_err());
    }

    #[test]
    fn reset_examples() {
        let zero = ClockValuation::zero(&[9, 9]);
        assert_eq!(zero.reset(&[]).unwrap(), zero);
        let v = ClockValuation::from_values(&[3, 5], &[9, 9]).unwrap();
        assert_eq!(v.reset(&[X]).unwrap().values(), &[0, 5]);
        assert_eq!(v.reset(&[X, Y]).unwrap(), zero);
    }

    #[test]
    fn advance_examples() {
        let zero = ClockValuation::zero(&[4]);
        assert_eq!(zero.advance(0), zero);
        let v = ClockValuation::from_values(&[3], &[4]).unwrap();
        assert_eq!(v.advance(5).values(), &[5]);
        let w = ClockValuation::from_values(&[2, 1], &[9, 2]).unwrap();
        assert_eq!(w.advance(2).values(), &[4, 3]);
    }

    fn arb_constraint(clocks: usize) -> impl Strategy<Value = ClockConstraint> {
        prop::collection::vec((0..clocks, any::<bool>(), 0u32..8), 0..5).prop_map(|atoms| {
            ClockConstraint::new(
                atoms
                    .into_iter()
                    .map(|(c, le, b)| if le { Atom::le(c, b) } else { Atom::ge(c, b) })
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn advance_is_additive(vals in prop::collection::vec(0u32..10, 3), s in 0u64..12, t in 0u64..12) {
            let v = ClockValuation::from_values(&vals, &[3, 7, 0]).unwrap();
            prop_assert_eq!(v.advance(s).advance(t), v.advance(s + t));
        }

        // Checking the two endpoints of a delay decides every intermediate
        // time point for conjunctions of non-strict single-clock bounds.
        #[test]
        fn endpoint_check_decides_whole_delay(
            vals in prop::collection::vec(0u32..9, 2),
            t in 0u64..9,
            zeta in arb_constraint(2),
        ) {
            let ks = [7u32, 7];
            let v = ClockValuation::from_values(&vals, &ks).unwrap();
            let lower_ok = zeta.atoms().iter()
                .filter(|a| a.rel == Relation::Ge)
                .all(|a| a.holds(u64::from(v.values()[a.clock])));
            let upper_ok = zeta.atoms().iter()
                .filter(|a| a.rel == Relation::Le)
                .all(|a| a.holds(u64::from(v.advance(t).values()[a.clock])));
            let brute = (0..=t).all(|tp| v.advance(tp).satisfies(&zeta).unwrap());
            prop_assert_eq!(lower_ok && upper_ok, brute);
        }
    }
}
