use std::collections::HashSet;

use super::ast::*;
use super::error::ParseError;
use super::lexer::{lex, Tok, Token};

pub(crate) const KEYWORDS: &[&str] = &[
    "const", "player", "clock", "price", "automaton", "var", "init", "location", "inv", "rate", "system", "owner",
    "else", "label", "prop", "coalition", "true", "false",
];

/// Constructs accepted by related tools that this format deliberately lacks.
const UNSUPPORTED: &[&str] = &["urgent", "committed", "invariant", "global", "formula", "rewards"];

type PResult<T> = Result<T, ParseError>;

/// Parses model text into its syntax tree.
pub fn parse(text: &str) -> Result<Model, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, i: 0, clocks: HashSet::new(), fatal: false };
    p.model()
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    clocks: HashSet<String>,
    /// Set by semantic errors that backtracking must not hide.
    fatal: bool,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(n) => format!("number `{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of file".into(),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: impl Into<String>, hint: impl Into<String>) -> PResult<T> {
        Err(ParseError::at(self.pos(), msg, hint))
    }

    fn fatal_err<T>(&mut self, pos: Pos, msg: impl Into<String>, hint: impl Into<String>) -> PResult<T> {
        self.fatal = true;
        Err(ParseError::at(pos, msg, hint))
    }

    fn unexpected<T>(&self, what: &str) -> PResult<T> {
        if let Tok::Ident(s) = self.peek() {
            if UNSUPPORTED.contains(&s.as_str()) {
                return self.err(format!("`{s}` is an unsupported extension"), "remove it; see the README for the format");
            }
        }
        self.err(format!("expected {what}, found {}", describe(self.peek())), format!("insert {what}"))
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{k}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => {
                self.err(format!("`{s}` is a keyword"), "choose another name")
            }
            Tok::Ident(s) if UNSUPPORTED.contains(&s.as_str()) => self.unexpected("a name"),
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("a name"),
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let mut v = vec![self.ident()?];
        while self.eat_sym(",") {
            v.push(self.ident()?);
        }
        Ok(v)
    }

    fn model(&mut self) -> PResult<Model> {
        let mut m = Model {
            consts: Vec::new(),
            players: Vec::new(),
            clocks: Vec::new(),
            prices: Vec::new(),
            automata: Vec::new(),
            system: Vec::new(),
            owner: Vec::new(),
            labels: Vec::new(),
            props: Vec::new(),
        };
        let mut seen_owner = false;
        loop {
            let pos = self.pos();
            let Tok::Ident(kw) = self.peek().clone() else {
                if *self.peek() == Tok::Eof {
                    break;
                }
                return self.unexpected("a declaration");
            };
            self.bump();
            match kw.as_str() {
                "const" => {
                    let name = self.ident()?;
                    self.expect_sym("=")?;
                    let value = self.expr()?;
                    self.expect_sym(";")?;
                    m.consts.push(ConstDecl { name, value, pos });
                }
                "player" => {
                    m.players.extend(self.ident_list()?);
                    self.expect_sym(";")?;
                }
                "clock" => {
                    for c in self.ident_list()? {
                        self.clocks.insert(c.clone());
                        m.clocks.push(c);
                    }
                    self.expect_sym(";")?;
                }
                "price" => {
                    m.prices.extend(self.ident_list()?);
                    self.expect_sym(";")?;
                }
                "automaton" => m.automata.push(self.automaton(pos)?),
                "system" => {
                    if !m.system.is_empty() {
                        return Err(ParseError::at(pos, "second `system` declaration", "keep a single one"));
                    }
                    m.system.push(self.ident()?);
                    while self.eat_sym("||") {
                        m.system.push(self.ident()?);
                    }
                    self.expect_sym(";")?;
                }
                "owner" => {
                    if seen_owner {
                        return Err(ParseError::at(pos, "second `owner` block", "merge the rules into one block"));
                    }
                    seen_owner = true;
                    self.expect_sym("{")?;
                    while !self.eat_sym("}") {
                        let pos = self.pos();
                        let pred = if self.is_kw("else") {
                            self.bump();
                            None
                        } else {
                            Some(self.bexpr()?)
                        };
                        self.expect_sym("->")?;
                        let player = self.ident()?;
                        self.expect_sym(";")?;
                        m.owner.push(OwnerRule { pred, player, pos });
                    }
                }
                "label" => {
                    let name = self.ident()?;
                    self.expect_sym("=")?;
                    let pred = self.bexpr()?;
                    self.expect_sym(";")?;
                    m.labels.push(LabelDecl { name, pred, pos });
                }
                "prop" => m.props.push(self.prop(pos)?),
                s if UNSUPPORTED.contains(&s) => {
                    return Err(ParseError::at(pos, format!("`{s}` is an unsupported extension"), "remove it"))
                }
                s => {
                    return Err(ParseError::at(
                        pos,
                        format!("unknown declaration `{s}`"),
                        "expected const, player, clock, price, automaton, system, owner, label or prop",
                    ))
                }
            }
        }
        Ok(m)
    }

    fn automaton(&mut self, pos: Pos) -> PResult<Automaton> {
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut vars = Vec::new();
        while self.is_kw("var") {
            let pos = self.pos();
            self.bump();
            let vname = self.ident()?;
            if self.clocks.contains(&vname) {
                return Err(ParseError::at(pos, format!("`{vname}` is already a clock"), "rename the variable"));
            }
            self.expect_sym(":")?;
            self.expect_sym("[")?;
            let lo = self.expr()?;
            self.expect_sym("..")?;
            let hi = self.expr()?;
            self.expect_sym("]")?;
            self.expect_kw("init")?;
            let init = self.expr()?;
            self.expect_sym(";")?;
            vars.push(VarDecl { name: vname, lo, hi, init, pos });
        }
        self.expect_kw("init")?;
        let init = self.ident()?;
        self.expect_sym(";")?;
        let mut locations = Vec::new();
        while !self.eat_sym("}") {
            let pos = self.pos();
            self.expect_kw("location")?;
            locations.push(self.location(pos)?);
        }
        Ok(Automaton { name, vars, init, locations, pos })
    }

    fn location(&mut self, pos: Pos) -> PResult<LocDecl> {
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut invariant = BExpr::True;
        if self.is_kw("inv") {
            self.bump();
            invariant = self.bexpr()?;
            self.expect_sym(";")?;
        }
        let mut rates = Vec::new();
        if self.is_kw("rate") {
            self.bump();
            rates = self.price_list()?;
            self.expect_sym(";")?;
        }
        let mut edges = Vec::new();
        while !self.eat_sym("}") {
            if !self.is_sym("[") {
                return self.unexpected("`[action]` or `}`");
            }
            edges.push(self.edge()?);
        }
        Ok(LocDecl { name, invariant, rates, edges, pos })
    }

    fn price_list(&mut self) -> PResult<Vec<(String, Expr)>> {
        let mut v = Vec::new();
        loop {
            let name = self.ident()?;
            let e = self.expr()?;
            v.push((name, e));
            if !self.eat_sym(",") {
                return Ok(v);
            }
        }
    }

    fn edge(&mut self) -> PResult<EdgeDecl> {
        let pos = self.pos();
        self.expect_sym("[")?;
        let action = self.ident()?;
        self.expect_sym("]")?;
        let guard = if self.is_sym("->") { BExpr::True } else { self.bexpr()? };
        self.expect_sym("->")?;
        let mut branches = vec![self.branch()?];
        while self.eat_sym("+") {
            branches.push(self.branch()?);
        }
        let mut prices = Vec::new();
        if self.is_kw("price") {
            self.bump();
            prices = self.price_list()?;
        }
        self.expect_sym(";")?;
        Ok(EdgeDecl { action, guard, branches, prices, pos })
    }

    fn branch(&mut self) -> PResult<BranchDecl> {
        let mut prob = None;
        let mut target = None;
        if !self.is_sym("{") {
            let e = self.expr()?;
            if self.eat_sym(":") {
                prob = Some(e);
            } else if let Expr::Ident(t) = e {
                target = Some(t);
            } else {
                return self.unexpected("`:` after the branch probability");
            }
        }
        let mut resets = Vec::new();
        if target.is_none() {
            if self.is_sym("{") {
                resets = self.resets()?;
                self.expect_sym("&")?;
            }
            target = Some(self.ident()?);
        }
        let mut updates = Vec::new();
        if self.is_sym("&") && matches!(self.peek_at(1), Tok::Sym("(")) {
            self.bump();
            self.bump();
            loop {
                let pos = self.pos();
                let v = self.ident()?;
                if self.clocks.contains(&v) {
                    return self.fatal_err(
                        pos,
                        format!("assigning clock `{v}` is an unsupported extension"),
                        "clocks can only be reset to 0, by listing them in `{...}`",
                    );
                }
                self.expect_sym(":=")?;
                updates.push((v, self.expr()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
        }
        Ok(BranchDecl { prob, resets, target: target.unwrap(), updates })
    }

    fn resets(&mut self) -> PResult<Vec<String>> {
        self.expect_sym("{")?;
        let mut v = Vec::new();
        if self.eat_sym("}") {
            return Ok(v);
        }
        loop {
            let pos = self.pos();
            let c = self.ident()?;
            if !self.clocks.contains(&c) {
                return self.fatal_err(pos, format!("unknown clock `{c}`"), format!("declare it with `clock {c};`"));
            }
            if self.is_sym(":=") || self.is_sym("=") {
                return self.fatal_err(
                    pos,
                    "resetting a clock to a non-zero value is an unsupported extension",
                    "list the clock alone to reset it to 0",
                );
            }
            v.push(c);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("}")?;
        Ok(v)
    }

    fn prop(&mut self, pos: Pos) -> PResult<PropDecl> {
        let kpos = self.pos();
        let k = self.ident()?;
        let Some(kind) = PropKind::from_name(&k) else {
            return Err(ParseError::at(kpos, format!("unknown property kind `{k}`"), "use Pmax, Pmin, Emax or Emin"));
        };
        self.expect_sym("[")?;
        self.expect_kw("F")?;
        let label = self.ident()?;
        self.expect_sym("]")?;
        let bound = if self.eat_sym("<=") { Some(self.expr()?) } else { None };
        let price = if self.is_kw("price") {
            self.bump();
            Some(self.ident()?)
        } else {
            None
        };
        self.expect_kw("coalition")?;
        self.expect_sym("{")?;
        let coalition = if self.is_sym("}") { Vec::new() } else { self.ident_list()? };
        self.expect_sym("}")?;
        self.expect_sym(";")?;
        Ok(PropDecl { kind, label, bound, price, coalition, pos })
    }

    // Arithmetic.

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.term()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.is_sym("-") {
                self.bump();
                BinOp::Sub
            } else {
                return Ok(e);
            };
            e = Expr::bin(op, e, self.term()?);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else {
                return Ok(e);
            };
            e = Expr::bin(op, e, self.unary()?);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_sym("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Num(n))
            }
            Tok::Ident(_) => {
                let a = self.ident()?;
                if self.is_sym(".") {
                    self.bump();
                    let b = self.ident()?;
                    Ok(Expr::Qual(a, b))
                } else {
                    Ok(Expr::Ident(a))
                }
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => self.unexpected("an expression"),
        }
    }

    fn has_clock(&self, e: &Expr) -> bool {
        self.clock_count(e) > 0
    }

    fn clock_count(&self, e: &Expr) -> usize {
        let mut ids = Vec::new();
        e.idents(&mut ids);
        ids.iter().filter(|i| self.clocks.contains(**i)).count()
    }

    // Boolean.

    fn bexpr(&mut self) -> PResult<BExpr> {
        let mut e = self.band()?;
        while self.eat_sym("|") {
            e = BExpr::Or(Box::new(e), Box::new(self.band()?));
        }
        Ok(e)
    }

    fn band(&mut self) -> PResult<BExpr> {
        let mut e = self.bnot()?;
        while self.eat_sym("&") {
            e = BExpr::And(Box::new(e), Box::new(self.bnot()?));
        }
        Ok(e)
    }

    fn bnot(&mut self) -> PResult<BExpr> {
        if self.eat_sym("!") {
            return Ok(BExpr::Not(Box::new(self.bnot()?)));
        }
        if self.is_kw("true") {
            self.bump();
            return Ok(BExpr::True);
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(BExpr::False);
        }
        if self.is_sym("(") {
            let save = self.i;
            match self.cmp() {
                Ok(c) => return Ok(c),
                Err(e) if self.fatal => return Err(e),
                Err(_) => self.i = save,
            }
            self.bump();
            let e = self.bexpr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        self.cmp()
    }

    fn cmp(&mut self) -> PResult<BExpr> {
        let lhs = self.expr()?;
        let op_pos = self.pos();
        let op = match self.peek() {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym("=") => {
                return self.err("`=` is not a comparison", "use `==`");
            }
            _ => {
                if let Expr::Qual(a, b) = lhs {
                    return Ok(BExpr::At(a, b));
                }
                return self.unexpected("a comparison operator");
            }
        };
        self.bump();
        let rhs = self.expr()?;
        let (lc, rc) = (self.has_clock(&lhs), self.has_clock(&rhs));
        if self.clock_count(&lhs) + self.clock_count(&rhs) > 1 {
            return self.fatal_err(
                op_pos,
                "diagonal constraints are not supported",
                "compare each clock with a constant instead",
            );
        }
        if lc || rc {
            let direct = matches!(&lhs, Expr::Ident(x) if self.clocks.contains(x));
            if !direct {
                return self.fatal_err(
                    op_pos,
                    "a clock may only be compared directly with a constant",
                    "write `x <= c` or `x >= c` with the clock on the left",
                );
            }
            match op {
                CmpOp::Lt | CmpOp::Gt => {
                    return self.fatal_err(
                        op_pos,
                        "strict inequalities not allowed (closed constraints)",
                        format!("use `{}` instead", if op == CmpOp::Lt { "<=" } else { ">=" }),
                    )
                }
                CmpOp::Eq | CmpOp::Ne => {
                    return self.fatal_err(
                        op_pos,
                        format!("clock constraints cannot use `{}`", op.symbol()),
                        "use `x >= c & x <= c` for equality",
                    )
                }
                _ => {}
            }
        }
        Ok(BExpr::Cmp(op, lhs, rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "player a; clock x, y;\n";

    fn err(text: &str) -> ParseError {
        parse(&format!("{HEAD}{text}")).unwrap_err()
    }

    #[test]
    fn strict_inequality_rejected() {
        let e = err("automaton A { init l; location l { inv x < 3; } }");
        assert_eq!(e.message, "strict inequalities not allowed (closed constraints)");
        assert_eq!((e.line, e.column), (2, 42));
        let e = err("automaton A { init l; location l { inv (x > 3); } }");
        assert_eq!(e.message, "strict inequalities not allowed (closed constraints)");
    }

    #[test]
    fn diagonal_and_unknown_clock() {
        assert!(err("automaton A { init l; location l { inv x <= y; } }").message.contains("diagonal"));
        let e = err("automaton A { init l; location l { [a] -> {z} & l; } }");
        assert_eq!(e.message, "unknown clock `z`");
        assert!(e.hint.contains("clock z"));
    }

    #[test]
    fn unsupported_extensions() {
        assert!(err("automaton A { init l; location l { urgent; } }").message.contains("unsupported extension"));
        assert!(err("automaton A { init l; location l { [a] -> {x := 2} & l; } }")
            .message
            .contains("unsupported extension"));
    }

    #[test]
    fn branches_with_and_without_probability() {
        let m = parse(&format!(
            "{HEAD}automaton A {{ var v : [0..2] init 0; init l; location l {{ \
             [a] x >= 1 & v < 2 -> 1/2 : {{x}} & l & (v := v + 1) + 1 - 1/2 : l; [b] -> l price c 2; }} }}"
        ))
        .unwrap();
        let l = &m.automata[0].locations[0];
        assert_eq!(l.edges[0].branches.len(), 2);
        assert_eq!(l.edges[0].branches[0].resets, vec!["x".to_string()]);
        assert_eq!(l.edges[0].branches[0].updates.len(), 1);
        assert_eq!(l.edges[1].branches[0].prob, None);
        assert_eq!(l.edges[1].guard, BExpr::True);
        assert_eq!(l.edges[1].prices, vec![("c".to_string(), Expr::num(2))]);
    }

    #[test]
    fn parenthesized_booleans_and_arithmetic() {
        let m = parse(&format!("{HEAD}label l = (A.v + 1) * 2 <= 4 & (A.l | !A.m);")).unwrap();
        let BExpr::And(a, b) = &m.labels[0].pred else { panic!() };
        assert!(matches!(**a, BExpr::Cmp(CmpOp::Le, _, _)));
        assert!(matches!(**b, BExpr::Or(..)));
    }

    #[test]
    fn props() {
        let m = parse("prop Emin [F done] <= 10 price time coalition {a, b}; prop Pmax [F d] coalition {};").unwrap();
        assert_eq!(m.props[0].kind, PropKind::Emin);
        assert_eq!(m.props[0].bound, Some(Expr::num(10)));
        assert_eq!(m.props[0].price.as_deref(), Some("time"));
        assert!(m.props[1].coalition.is_empty());
    }
}
