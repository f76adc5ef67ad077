//! Syntax tree of `.tptg` model files.

use std::fmt;

/// Source position (1-based). Positions never take part in equality, so two
/// trees parsed from differently formatted text compare equal.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Pos {}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Arithmetic expression over constants and integer variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    /// Decimal literal, kept verbatim (`3`, `0.25`).
    Num(String),
    Ident(String),
    /// `component.name`: a variable of another automaton.
    Qual(String, String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn num(n: impl ToString) -> Expr {
        Expr::Num(n.to_string())
    }

    pub fn ident(s: impl Into<String>) -> Expr {
        Expr::Ident(s.into())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Names referenced without qualification.
    pub fn idents<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Ident(s) => out.push(s),
            Expr::Neg(e) => e.idents(out),
            Expr::Bin(_, a, b) => {
                a.idents(out);
                b.idents(out);
            }
            Expr::Num(_) | Expr::Qual(..) => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// Boolean expression: clock constraints, data conditions, and location
/// tests `component.location`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BExpr {
    True,
    False,
    Cmp(CmpOp, Expr, Expr),
    At(String, String),
    Not(Box<BExpr>),
    And(Box<BExpr>, Box<BExpr>),
    Or(Box<BExpr>, Box<BExpr>),
}

impl BExpr {
    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> BExpr {
        BExpr::Cmp(op, a, b)
    }

    pub fn and(self, other: BExpr) -> BExpr {
        match self {
            BExpr::True => other,
            s => BExpr::And(Box::new(s), Box::new(other)),
        }
    }

    pub fn or(self, other: BExpr) -> BExpr {
        match self {
            BExpr::False => other,
            s => BExpr::Or(Box::new(s), Box::new(other)),
        }
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&BExpr> {
        match self {
            BExpr::True => Vec::new(),
            BExpr::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            e => vec![e],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstDecl {
    pub name: String,
    pub value: Expr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub lo: Expr,
    pub hi: Expr,
    pub init: Expr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchDecl {
    /// `None` stands for probability 1.
    pub prob: Option<Expr>,
    pub resets: Vec<String>,
    pub target: String,
    pub updates: Vec<(String, Expr)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeDecl {
    pub action: String,
    pub guard: BExpr,
    pub branches: Vec<BranchDecl>,
    pub prices: Vec<(String, Expr)>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocDecl {
    pub name: String,
    pub invariant: BExpr,
    pub rates: Vec<(String, Expr)>,
    pub edges: Vec<EdgeDecl>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    pub name: String,
    pub vars: Vec<VarDecl>,
    pub init: String,
    pub locations: Vec<LocDecl>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OwnerRule {
    /// `None` is the `else` rule.
    pub pred: Option<BExpr>,
    pub player: String,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelDecl {
    pub name: String,
    pub pred: BExpr,
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PropKind {
    Pmax,
    Pmin,
    Emax,
    Emin,
}

impl PropKind {
    pub fn name(self) -> &'static str {
        match self {
            PropKind::Pmax => "Pmax",
            PropKind::Pmin => "Pmin",
            PropKind::Emax => "Emax",
            PropKind::Emin => "Emin",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "Pmax" => PropKind::Pmax,
            "Pmin" => PropKind::Pmin,
            "Emax" => PropKind::Emax,
            "Emin" => PropKind::Emin,
            _ => return None,
        })
    }

    pub fn is_probability(self) -> bool {
        matches!(self, PropKind::Pmax | PropKind::Pmin)
    }
}

/// `Pmax [F label] (<= bound)? (price name)? coalition {players}`. For
/// probabilities the bound is a time bound, for expected prices a bound on
/// the number of steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropDecl {
    pub kind: PropKind,
    pub label: String,
    pub bound: Option<Expr>,
    pub price: Option<String>,
    pub coalition: Vec<String>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub consts: Vec<ConstDecl>,
    pub players: Vec<String>,
    pub clocks: Vec<String>,
    pub prices: Vec<String>,
    pub automata: Vec<Automaton>,
    pub system: Vec<String>,
    pub owner: Vec<OwnerRule>,
    pub labels: Vec<LabelDecl>,
    pub props: Vec<PropDecl>,
}
