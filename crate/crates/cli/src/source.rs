//! Where the model comes from and which properties to check.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use num::{BigInt, BigRational};
use tptg::dsl::{self, ast::Model, Compiled, Property, Variant};
use tptg::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    /// Task-graph scheduling with faulty processors.
    Taskgraph,
    /// Non-repudiation protocol.
    Nonrep,
    /// The shipped communication-protocol example.
    Fig1,
}

#[derive(Args, Clone, Debug)]
pub struct ModelArgs {
    /// Model file (`.tptg`).
    #[arg(conflicts_with = "gen")]
    pub model: Option<PathBuf>,
    /// Use a built-in model generator instead of a file.
    #[arg(long = "gen", value_enum)]
    pub gen: Option<Generator>,
    /// Non-repudiation variant.
    #[arg(long, default_value = "honest")]
    pub variant: String,
    /// Fault or success probability (decimal or `n/d`).
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub k1: u32,
    #[arg(long, default_value_t = 1)]
    pub k2: u32,
    /// Property to check instead of those in the model (repeatable).
    #[arg(long = "prop")]
    pub props: Vec<String>,
    /// Override the coalition: comma-separated players, empty for none.
    #[arg(long, value_name = "PLAYERS")]
    pub coalition: Option<String>,
    /// Override the time bound (step bound for expected prices).
    #[arg(long)]
    pub bound: Option<u64>,
}

/// Parses `0.25`, `1/4` or `1` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Usage(format!("`{s}` is not a number"));
    let int = |t: &str| t.trim().parse::<BigInt>().map_err(|_| bad());
    if let Some((n, d)) = s.split_once('/') {
        let d = int(d)?;
        if d == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(BigRational::new(int(n)?, d));
    }
    match s.trim().split_once('.') {
        Some((i, f)) if f.chars().all(|c| c.is_ascii_digit()) && !i.starts_with('-') => {
            let digits = int(&format!("{i}{f}"))?;
            Ok(BigRational::new(digits, BigInt::from(10).pow(f.len() as u32)))
        }
        Some(_) => Err(bad()),
        None => Ok(BigRational::from_integer(int(s)?)),
    }
}

pub fn parse_coalition(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(String::from).collect()
}

impl ModelArgs {
    fn p_or(&self, default: (i64, i64)) -> Result<BigRational> {
        match &self.p {
            Some(p) => parse_rational(p),
            None => Ok(BigRational::new(default.0.into(), default.1.into())),
        }
    }

    /// The model syntax tree, with `p`, `k1` and `k2` taken from the
    /// arguments unless overridden.
    pub fn model_with(&self, p: Option<&BigRational>, k1: Option<u32>, k2: Option<u32>) -> Result<Model> {
        let mut model = match (&self.model, self.gen) {
            (Some(path), None) => {
                if p.is_some() || k1.is_some() || k2.is_some() {
                    return Err(Error::Usage("sweeping p, k1 or k2 needs --gen".into()));
                }
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
                dsl::parse(&text)?
            }
            (None, Some(Generator::Taskgraph)) => {
                let p = match p {
                    Some(p) => p.clone(),
                    None => self.p_or((1, 1))?,
                };
                dsl::gen_taskgraph(k1.unwrap_or(self.k1), k2.unwrap_or(self.k2), &p)?
            }
            (None, Some(Generator::Nonrep)) => {
                if k1.is_some() || k2.is_some() {
                    return Err(Error::Usage("the non-repudiation model has no k1 or k2".into()));
                }
                let p = match p {
                    Some(p) => p.clone(),
                    None => self.p_or((1, 10))?,
                };
                dsl::gen_nonrepudiation(self.variant.parse::<Variant>()?, &p)?
            }
            (None, Some(Generator::Fig1)) => {
                if p.is_some() || k1.is_some() || k2.is_some() {
                    return Err(Error::Usage("the fig1 model has no parameters".into()));
                }
                dsl::parse(dsl::FIG1)?
            }
            (None, None) => return Err(Error::Usage("give a model file or --gen".into())),
            (Some(_), Some(_)) => return Err(Error::Usage("a model file and --gen are mutually exclusive".into())),
        };
        if !self.props.is_empty() {
            model.props.clear();
            for text in &self.props {
                let parsed = dsl::parse(&format!("prop {text};"))?;
                model.props.extend(parsed.props);
            }
        }
        Ok(model)
    }

    pub fn load(&self) -> Result<Compiled> {
        self.compile(self.model_with(None, None, None)?)
    }

    pub fn compile(&self, model: Model) -> Result<Compiled> {
        let mut c = dsl::compile(&model)?;
        for p in &mut c.props {
            self.override_prop(p, &c.tptg.players)?;
        }
        Ok(c)
    }

    fn override_prop(&self, p: &mut Property, players: &[String]) -> Result<()> {
        if let Some(co) = &self.coalition {
            let co = parse_coalition(co);
            if let Some(bad) = co.iter().find(|c| !players.contains(c)) {
                return Err(Error::Usage(format!("unknown player `{bad}` (model has: {})", players.join(", "))));
            }
            p.coalition = co;
        }
        if let Some(b) = self.bound {
            p.bound = Some(b);
        }
        Ok(())
    }

    /// The single property a command works on.
    pub fn one_prop(c: &Compiled) -> Result<Property> {
        match c.props.as_slice() {
            [p] => Ok(p.clone()),
            [] => Err(Error::Usage("the model has no property; give one with --prop".into())),
            ps => Err(Error::Usage(format!(
                "this command works on one property, the model has {}; select one with --prop",
                ps.len()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("1/3").unwrap(), q(1, 3));
        assert_eq!(parse_rational("1").unwrap(), q(1, 1));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("0.5e3").is_err());
    }

    #[test]
    fn coalitions() {
        assert_eq!(parse_coalition("O, R"), vec!["O", "R"]);
        assert!(parse_coalition("").is_empty());
    }
}
