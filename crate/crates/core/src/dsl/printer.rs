//! Canonical pretty-printer; its output parses back to an equal tree.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        _ => 4,
    }
}

fn write_expr(f: &mut impl Write, e: &Expr, min: u8) -> fmt::Result {
    let p = expr_prec(e);
    if p < min {
        f.write_char('(')?;
    }
    match e {
        Expr::Num(n) => f.write_str(n)?,
        Expr::Ident(s) => f.write_str(s)?,
        Expr::Qual(a, b) => write!(f, "{a}.{b}")?,
        Expr::Neg(x) => {
            f.write_char('-')?;
            write_expr(f, x, 3)?;
        }
        Expr::Bin(op, a, b) => {
            write_expr(f, a, p)?;
            let s = match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => " * ",
                BinOp::Div => " / ",
            };
            f.write_str(s)?;
            // Operators are left-associative.
            write_expr(f, b, p + 1)?;
        }
    }
    if p < min {
        f.write_char(')')?;
    }
    Ok(())
}

fn bexpr_prec(e: &BExpr) -> u8 {
    match e {
        BExpr::Or(..) => 1,
        BExpr::And(..) => 2,
        BExpr::Not(_) => 3,
        _ => 4,
    }
}

fn write_bexpr(f: &mut impl Write, e: &BExpr, min: u8) -> fmt::Result {
    let p = bexpr_prec(e);
    if p < min {
        f.write_char('(')?;
    }
    match e {
        BExpr::True => f.write_str("true")?,
        BExpr::False => f.write_str("false")?,
        BExpr::At(a, b) => write!(f, "{a}.{b}")?,
        BExpr::Cmp(op, a, b) => {
            write_expr(f, a, 0)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, b, 0)?;
        }
        BExpr::Not(x) => {
            f.write_char('!')?;
            write_bexpr(f, x, 3)?;
        }
        BExpr::And(a, b) | BExpr::Or(a, b) => {
            write_bexpr(f, a, p)?;
            f.write_str(if p == 2 { " & " } else { " | " })?;
            write_bexpr(f, b, p + 1)?;
        }
    }
    if p < min {
        f.write_char(')')?;
    }
    Ok(())
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

impl Display for BExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_bexpr(f, self, 0)
    }
}

fn prices(list: &[(String, Expr)]) -> String {
    list.iter().map(|(n, e)| format!("{n} {e}")).collect::<Vec<_>>().join(", ")
}

impl Display for BranchDecl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.prob {
            write!(f, "{p} : ")?;
        }
        if !self.resets.is_empty() {
            write!(f, "{{{}}} & ", self.resets.join(", "))?;
        }
        f.write_str(&self.target)?;
        if !self.updates.is_empty() {
            let u: Vec<String> = self.updates.iter().map(|(v, e)| format!("{v} := {e}")).collect();
            write!(f, " & ({})", u.join(", "))?;
        }
        Ok(())
    }
}

impl Display for EdgeDecl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] ", self.action)?;
        if self.guard != BExpr::True {
            write!(f, "{} ", self.guard)?;
        }
        f.write_str("-> ")?;
        let bs: Vec<String> = self.branches.iter().map(ToString::to_string).collect();
        f.write_str(&bs.join(" + "))?;
        if !self.prices.is_empty() {
            write!(f, " price {}", prices(&self.prices))?;
        }
        f.write_char(';')
    }
}

impl Display for PropDecl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{} [F {}]", self.kind.name(), self.label)?;
        if let Some(b) = &self.bound {
            write!(f, " <= {b}")?;
        }
        if let Some(p) = &self.price {
            write!(f, " price {p}")?;
        }
        write!(f, " coalition {{{}}}", self.coalition.join(", "))
    }
}

impl Display for Model {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for c in &self.consts {
            writeln!(f, "const {} = {};", c.name, c.value)?;
        }
        if !self.consts.is_empty() {
            writeln!(f)?;
        }
        if !self.players.is_empty() {
            writeln!(f, "player {};", self.players.join(", "))?;
        }
        if !self.clocks.is_empty() {
            writeln!(f, "clock {};", self.clocks.join(", "))?;
        }
        if !self.prices.is_empty() {
            writeln!(f, "price {};", self.prices.join(", "))?;
        }
        for a in &self.automata {
            writeln!(f)?;
            writeln!(f, "automaton {} {{", a.name)?;
            for v in &a.vars {
                writeln!(f, "  var {} : [{}..{}] init {};", v.name, v.lo, v.hi, v.init)?;
            }
            writeln!(f, "  init {};", a.init)?;
            for l in &a.locations {
                writeln!(f)?;
                writeln!(f, "  location {} {{", l.name)?;
                if l.invariant != BExpr::True {
                    writeln!(f, "    inv {};", l.invariant)?;
                }
                if !l.rates.is_empty() {
                    writeln!(f, "    rate {};", prices(&l.rates))?;
                }
                for e in &l.edges {
                    writeln!(f, "    {e}")?;
                }
                writeln!(f, "  }}")?;
            }
            writeln!(f, "}}")?;
        }
        if !self.system.is_empty() {
            writeln!(f)?;
            writeln!(f, "system {};", self.system.join(" || "))?;
        }
        if !self.owner.is_empty() {
            writeln!(f)?;
            writeln!(f, "owner {{")?;
            for r in &self.owner {
                match &r.pred {
                    Some(p) => writeln!(f, "  {p} -> {};", r.player)?,
                    None => writeln!(f, "  else -> {};", r.player)?,
                }
            }
            writeln!(f, "}}")?;
        }
        if !self.labels.is_empty() {
            writeln!(f)?;
        }
        for l in &self.labels {
            writeln!(f, "label {} = {};", l.name, l.pred)?;
        }
        if !self.props.is_empty() {
            writeln!(f)?;
        }
        for p in &self.props {
            writeln!(f, "prop {p};")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;
    use proptest::prelude::*;

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..100).prop_map(Expr::num),
            "[a-c]".prop_map(Expr::Ident),
            Just(Expr::Qual("A".into(), "v".into())),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (0..4usize, inner.clone(), inner).prop_map(|(o, a, b)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][o];
                    Expr::bin(op, a, b)
                }),
            ]
        })
    }

    fn arb_bexpr() -> impl Strategy<Value = BExpr> {
        let leaf = prop_oneof![
            Just(BExpr::True),
            Just(BExpr::At("A".into(), "l".into())),
            (arb_expr(), arb_expr()).prop_map(|(a, b)| BExpr::cmp(CmpOp::Le, a, b)),
            (arb_expr(), arb_expr()).prop_map(|(a, b)| BExpr::cmp(CmpOp::Ne, a, b)),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| BExpr::Not(Box::new(e))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| BExpr::And(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| BExpr::Or(Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn printed_predicates_parse_back(e in arb_bexpr()) {
            let text = format!("label l = {e};\n");
            let m = parse(&text).unwrap();
            prop_assert_eq!(&m.labels[0].pred, &e);
        }
    }
}
