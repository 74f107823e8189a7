//! Linear-expression grammar, parser and canonical form.
//!
//! The plain-text grammar accepted here (and produced by the renderer):
//!
//! ```text
//! expr   := ["-"] term (("+"|"-") term)*
//! term   := factor ("*" factor)*
//! factor := NUMBER ["^" INT] | NAME ["^" INT] | varref | "sum(" IDX "in" SET "," expr ")" | "(" expr ")"
//! varref := NAME ("[" idxexpr ("," idxexpr)* "]")?
//! idxexpr := NAME | NUMBER | NAME "[" idxexpr ("," idxexpr)* "]"
//! ```
//!
//! A limited LaTeX token set is translated before lexing: `\cdot` and
//! `\times` become `*`; `\leq`/`\le` become `<=`; `\geq`/`\ge` become `>=`.
//! Any other backslash token is a parse error.
//!
//! A product chain may mention at most one declared variable; which factor is
//! the variable is decided during resolution against the declaration
//! namespace, so `Rate * x` and `x * Rate` both parse. Chains with two
//! variable references are rejected as nonlinear.

use crate::scalar::{parse_decimal, rat_display, Rat};
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::fmt;

/// Positioned parse failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError {
            position,
            message: message.into(),
        }
    }
}

/// Relation between two sides of a constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }

    /// Relation after multiplying both sides by a negative scalar.
    pub fn flipped(self) -> Self {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Index expression inside `var[...]` or `Param[...]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexExpr {
    /// A quantifier- or sum-bound index name.
    Bound(String),
    /// A literal member label (numeric literals keep their written form).
    Label(String),
    /// A parameter whose (integer) value selects a member label.
    Param(ParamRef),
}

impl IndexExpr {
    fn render(&self) -> String {
        match self {
            IndexExpr::Bound(n) => n.clone(),
            IndexExpr::Label(l) => l.clone(),
            IndexExpr::Param(p) => p.render(),
        }
    }
}

/// Reference to a parameter, possibly indexed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamRef {
    pub name: String,
    pub indices: Vec<IndexExpr>,
}

impl ParamRef {
    fn render(&self) -> String {
        if self.indices.is_empty() {
            self.name.clone()
        } else {
            let idx: Vec<String> = self.indices.iter().map(|i| i.render()).collect();
            format!("{}[{}]", self.name, idx.join(","))
        }
    }
}

/// Reference to a decision variable, possibly indexed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    pub name: String,
    pub indices: Vec<IndexExpr>,
}

impl VarRef {
    pub fn scalar(name: impl Into<String>) -> Self {
        VarRef {
            name: name.into(),
            indices: Vec::new(),
        }
    }

    fn render(&self) -> String {
        if self.indices.is_empty() {
            self.name.clone()
        } else {
            let idx: Vec<String> = self.indices.iter().map(|i| i.render()).collect();
            format!("{}[{}]", self.name, idx.join(","))
        }
    }
}

/// One monomial of a coefficient polynomial: rational × product of parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mono {
    pub coef: Rat,
    /// Sorted parameter references; powers are repeated entries.
    pub refs: Vec<ParamRef>,
}

/// Coefficient over parameters and literals (affine in nothing — variables
/// never appear here). Kept as a merged, sorted sum of monomials.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoeffPoly {
    pub monos: Vec<Mono>,
}

impl CoeffPoly {
    pub fn zero() -> Self {
        CoeffPoly { monos: Vec::new() }
    }

    pub fn constant(r: Rat) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        CoeffPoly {
            monos: vec![Mono {
                coef: r,
                refs: Vec::new(),
            }],
        }
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn param(p: ParamRef) -> Self {
        CoeffPoly {
            monos: vec![Mono {
                coef: Rat::one(),
                refs: vec![p],
            }],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.monos.is_empty()
    }

    /// The rational value if the polynomial has no parameter references.
    pub fn as_rational(&self) -> Option<Rat> {
        match self.monos.len() {
            0 => Some(Rat::zero()),
            1 if self.monos[0].refs.is_empty() => Some(self.monos[0].coef.clone()),
            _ => None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.as_rational().map(|r| r.is_one()).unwrap_or(false)
    }

    fn normalize(mut self) -> Self {
        for m in &mut self.monos {
            m.refs.sort();
        }
        self.monos.sort_by(|a, b| a.refs.cmp(&b.refs));
        let mut merged: Vec<Mono> = Vec::with_capacity(self.monos.len());
        for m in self.monos {
            match merged.last_mut() {
                Some(last) if last.refs == m.refs => last.coef += m.coef,
                _ => merged.push(m),
            }
        }
        merged.retain(|m| !m.coef.is_zero());
        CoeffPoly { monos: merged }
    }

    pub fn add(&self, other: &CoeffPoly) -> CoeffPoly {
        let mut monos = self.monos.clone();
        monos.extend(other.monos.iter().cloned());
        CoeffPoly { monos }.normalize()
    }

    pub fn mul(&self, other: &CoeffPoly) -> CoeffPoly {
        let mut monos = Vec::with_capacity(self.monos.len() * other.monos.len());
        for a in &self.monos {
            for b in &other.monos {
                let mut refs = a.refs.clone();
                refs.extend(b.refs.iter().cloned());
                monos.push(Mono {
                    coef: &a.coef * &b.coef,
                    refs,
                });
            }
        }
        CoeffPoly { monos }.normalize()
    }

    pub fn scale(&self, k: &Rat) -> CoeffPoly {
        if k.is_zero() {
            return CoeffPoly::zero();
        }
        CoeffPoly {
            monos: self
                .monos
                .iter()
                .map(|m| Mono {
                    coef: &m.coef * k,
                    refs: m.refs.clone(),
                })
                .collect(),
        }
    }

    pub fn neg(&self) -> CoeffPoly {
        self.scale(&-Rat::one())
    }

    fn render(&self) -> String {
        if self.monos.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, m) in self.monos.iter().enumerate() {
            let (sign, mag) = if m.coef.is_negative() {
                ("-", -m.coef.clone())
            } else {
                ("+", m.coef.clone())
            };
            if i == 0 {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push_str(if sign == "-" { " - " } else { " + " });
            }
            out.push_str(&render_monomial(&mag, &m.refs));
        }
        out
    }
}

fn render_monomial(mag: &Rat, refs: &[ParamRef]) -> String {
    let mut factors: Vec<String> = Vec::new();
    if refs.is_empty() || !mag.is_one() {
        factors.push(rat_display(mag));
    }
    let mut i = 0;
    while i < refs.len() {
        let mut j = i + 1;
        while j < refs.len() && refs[j] == refs[i] {
            j += 1;
        }
        let power = j - i;
        if power == 1 {
            factors.push(refs[i].render());
        } else {
            factors.push(format!("{} ^ {}", refs[i].render(), power));
        }
        i = j;
    }
    factors.join(" * ")
}

/// One `coefficient · variable` term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeff: CoeffPoly,
    pub var: VarRef,
}

/// A sum node: `sum(index in set, body)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumNode {
    pub index: String,
    pub set: String,
    pub body: LinearExpr,
}

/// Canonicalized linear expression: merged variable terms, merged sum nodes
/// (one per set at each level) and a parameter-valued constant part.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearExpr {
    pub terms: Vec<Term>,
    pub sums: Vec<SumNode>,
    pub constant: CoeffPoly,
}

impl LinearExpr {
    pub fn zero() -> Self {
        LinearExpr::default()
    }

    pub fn from_constant(r: Rat) -> Self {
        LinearExpr {
            constant: CoeffPoly::constant(r),
            ..Default::default()
        }
    }

    pub fn from_var(var: VarRef) -> Self {
        LinearExpr {
            terms: vec![Term {
                coeff: CoeffPoly::one(),
                var,
            }],
            ..Default::default()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.sums.is_empty() && self.constant.is_zero()
    }

    pub fn add(&self, other: &LinearExpr) -> LinearExpr {
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out.sums.extend(other.sums.iter().cloned());
        out.constant = out.constant.add(&other.constant);
        canonicalize(&out)
    }

    pub fn sub(&self, other: &LinearExpr) -> LinearExpr {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, k: &Rat) -> LinearExpr {
        self.scale_poly(&CoeffPoly::constant(k.clone()))
    }

    pub fn scale_poly(&self, k: &CoeffPoly) -> LinearExpr {
        LinearExpr {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.mul(k),
                    var: t.var.clone(),
                })
                .collect(),
            sums: self
                .sums
                .iter()
                .map(|s| SumNode {
                    index: s.index.clone(),
                    set: s.set.clone(),
                    body: s.body.scale_poly(k),
                })
                .collect(),
            constant: self.constant.mul(k),
        }
    }

    /// Every variable name mentioned anywhere in the expression.
    pub fn variable_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        for t in &self.terms {
            out.push(t.var.name.clone());
        }
        for s in &self.sums {
            s.body.collect_vars(out);
        }
    }

    /// Replace every reference to variable `name` by the linear combination
    /// `sum_j c_j * w_j`, where each replacement variable inherits the
    /// original reference's index expressions.
    pub fn substitute_var(&self, name: &str, replacement: &[(Rat, String)]) -> LinearExpr {
        let mut out = LinearExpr {
            terms: Vec::new(),
            sums: self
                .sums
                .iter()
                .map(|s| SumNode {
                    index: s.index.clone(),
                    set: s.set.clone(),
                    body: s.body.substitute_var(name, replacement),
                })
                .collect(),
            constant: self.constant.clone(),
        };
        for t in &self.terms {
            if t.var.name == name {
                for (c, w) in replacement {
                    out.terms.push(Term {
                        coeff: t.coeff.scale(c),
                        var: VarRef {
                            name: w.clone(),
                            indices: t.var.indices.clone(),
                        },
                    });
                }
            } else {
                out.terms.push(t.clone());
            }
        }
        canonicalize(&out)
    }

    /// Apply an identifier rename map to variables, parameters and set names.
    pub fn rename_idents(&self, map: &HashMap<String, String>) -> LinearExpr {
        fn ren(map: &HashMap<String, String>, s: &str) -> String {
            map.get(s).cloned().unwrap_or_else(|| s.to_string())
        }
        fn ren_idx(map: &HashMap<String, String>, ix: &IndexExpr) -> IndexExpr {
            match ix {
                IndexExpr::Bound(n) => IndexExpr::Bound(n.clone()),
                IndexExpr::Label(l) => IndexExpr::Label(l.clone()),
                IndexExpr::Param(p) => IndexExpr::Param(ren_param(map, p)),
            }
        }
        fn ren_param(map: &HashMap<String, String>, p: &ParamRef) -> ParamRef {
            ParamRef {
                name: ren(map, &p.name),
                indices: p.indices.iter().map(|i| ren_idx(map, i)).collect(),
            }
        }
        LinearExpr {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: CoeffPoly {
                        monos: t
                            .coeff
                            .monos
                            .iter()
                            .map(|m| Mono {
                                coef: m.coef.clone(),
                                refs: m.refs.iter().map(|r| ren_param(map, r)).collect(),
                            })
                            .collect(),
                    },
                    var: VarRef {
                        name: ren(map, &t.var.name),
                        indices: t.var.indices.iter().map(|i| ren_idx(map, i)).collect(),
                    },
                })
                .collect(),
            sums: self
                .sums
                .iter()
                .map(|s| SumNode {
                    index: s.index.clone(),
                    set: ren(map, &s.set),
                    body: s.body.rename_idents(map),
                })
                .collect(),
            constant: CoeffPoly {
                monos: self
                    .constant
                    .monos
                    .iter()
                    .map(|m| Mono {
                        coef: m.coef.clone(),
                        refs: m.refs.iter().map(|r| ren_param(map, r)).collect(),
                    })
                    .collect(),
            },
        }
    }

    /// Grammar-conforming plain-text rendering, preserving user index names.
    pub fn render(&self) -> String {
        let mut pieces: Vec<(bool, String)> = Vec::new(); // (negative, magnitude text)
        for t in &self.terms {
            if let Some(r) = t.coeff.as_rational() {
                let neg = r.is_negative();
                let mag = if neg { -r.clone() } else { r };
                let text = if mag.is_one() {
                    t.var.render()
                } else {
                    format!("{} * {}", rat_display(&mag), t.var.render())
                };
                pieces.push((neg, text));
            } else {
                // Parameter-carrying coefficient: factor the sign of nothing,
                // render the polynomial, parenthesized when it is a sum.
                let text = if t.coeff.monos.len() == 1 {
                    format!("{} * {}", t.coeff.render(), t.var.render())
                } else {
                    format!("({}) * {}", t.coeff.render(), t.var.render())
                };
                pieces.push((false, text));
            }
        }
        for s in &self.sums {
            pieces.push((
                false,
                format!("sum({} in {}, {})", s.index, s.set, s.body.render()),
            ));
        }
        if !self.constant.is_zero() {
            if let Some(r) = self.constant.as_rational() {
                let neg = r.is_negative();
                let mag = if neg { -r.clone() } else { r };
                pieces.push((neg, rat_display(&mag)));
            } else {
                pieces.push((false, self.constant.render()));
            }
        }
        if pieces.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (neg, text)) in pieces.iter().enumerate() {
            if i == 0 {
                if *neg {
                    out.push_str("- ");
                }
            } else {
                out.push_str(if *neg { " - " } else { " + " });
            }
            out.push_str(text);
        }
        out
    }

    /// Canonical comparison string: sorted structure with sum and quantifier
    /// indices renamed positionally, so alpha-equivalent expressions agree.
    pub fn canonical_string(&self) -> String {
        canonical_render(self, &mut HashMap::new(), &mut 0)
    }
}

fn canonical_render(
    e: &LinearExpr,
    bound_names: &mut HashMap<String, String>,
    next_id: &mut usize,
) -> String {
    fn idx_str(ix: &IndexExpr, bound: &HashMap<String, String>) -> String {
        match ix {
            IndexExpr::Bound(n) => bound.get(n).cloned().unwrap_or_else(|| n.clone()),
            IndexExpr::Label(l) => format!("'{l}'"),
            IndexExpr::Param(p) => param_str(p, bound),
        }
    }
    fn param_str(p: &ParamRef, bound: &HashMap<String, String>) -> String {
        if p.indices.is_empty() {
            p.name.clone()
        } else {
            let idx: Vec<String> = p.indices.iter().map(|i| idx_str(i, bound)).collect();
            format!("{}[{}]", p.name, idx.join(","))
        }
    }
    fn poly_str(c: &CoeffPoly, bound: &HashMap<String, String>) -> String {
        if c.monos.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = c
            .monos
            .iter()
            .map(|m| {
                let refs: Vec<String> = m.refs.iter().map(|r| param_str(r, bound)).collect();
                if refs.is_empty() {
                    rat_display(&m.coef)
                } else {
                    format!("{}*{}", rat_display(&m.coef), refs.join("*"))
                }
            })
            .collect();
        parts.join("+")
    }

    let mut term_strs: Vec<String> = e
        .terms
        .iter()
        .map(|t| {
            let idx: Vec<String> = t.var.indices.iter().map(|i| idx_str(i, bound_names)).collect();
            let var = if idx.is_empty() {
                t.var.name.clone()
            } else {
                format!("{}[{}]", t.var.name, idx.join(","))
            };
            format!("({})·{}", poly_str(&t.coeff, bound_names), var)
        })
        .collect();
    term_strs.sort();
    let mut sum_strs: Vec<String> = e
        .sums
        .iter()
        .map(|s| {
            let canon = format!("__i{}", *next_id);
            *next_id += 1;
            let shadow = bound_names.insert(s.index.clone(), canon.clone());
            let body = canonical_render(&s.body, bound_names, next_id);
            match shadow {
                Some(prev) => {
                    bound_names.insert(s.index.clone(), prev);
                }
                None => {
                    bound_names.remove(&s.index);
                }
            }
            format!("Σ({} in {}; {})", canon, s.set, body)
        })
        .collect();
    sum_strs.sort();
    let mut parts = term_strs;
    parts.extend(sum_strs);
    parts.push(format!("const({})", poly_str(&e.constant, bound_names)));
    parts.join(" ⊕ ")
}

/// Merge, sort and fold an expression into canonical form. Idempotent.
pub fn canonicalize(e: &LinearExpr) -> LinearExpr {
    // Terms: sort by (variable, index tuple), then merge, then drop zeros.
    let mut terms = e.terms.clone();
    terms.sort_by(|a, b| a.var.cmp(&b.var));
    let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        match merged.last_mut() {
            Some(last) if last.var == t.var => last.coeff = last.coeff.add(&t.coeff),
            _ => merged.push(Term {
                coeff: t.coeff.normalize(),
                var: t.var,
            }),
        }
    }
    merged.retain(|t| !t.coeff.is_zero());

    // Sums over the same set at the same level merge into one node; the
    // merged node keeps the first sum's index name.
    let mut sums: Vec<SumNode> = Vec::new();
    for s in &e.sums {
        let body = canonicalize(&s.body);
        if body.is_zero() {
            continue;
        }
        if let Some(existing) = sums.iter_mut().find(|x| x.set == s.set) {
            let renamed = rename_bound(&body, &s.index, &existing.index);
            existing.body = existing.body.add(&renamed);
        } else {
            sums.push(SumNode {
                index: s.index.clone(),
                set: s.set.clone(),
                body,
            });
        }
    }
    sums.retain(|s| !s.body.is_zero());
    sums.sort_by(|a, b| a.set.cmp(&b.set));

    LinearExpr {
        terms: merged,
        sums,
        constant: e.constant.clone().normalize(),
    }
}

/// Rename a free or quantifier-bound index throughout an expression,
/// respecting sum-level shadowing.
pub fn rename_bound_index(e: &LinearExpr, from: &str, to: &str) -> LinearExpr {
    rename_bound(e, from, to)
}

/// Rename a bound index throughout an expression body, respecting shadowing.
fn rename_bound(e: &LinearExpr, from: &str, to: &str) -> LinearExpr {
    if from == to {
        return e.clone();
    }
    fn ren_idx(ix: &IndexExpr, from: &str, to: &str) -> IndexExpr {
        match ix {
            IndexExpr::Bound(n) if n == from => IndexExpr::Bound(to.to_string()),
            IndexExpr::Param(p) => IndexExpr::Param(ren_param(p, from, to)),
            other => other.clone(),
        }
    }
    fn ren_param(p: &ParamRef, from: &str, to: &str) -> ParamRef {
        ParamRef {
            name: p.name.clone(),
            indices: p.indices.iter().map(|i| ren_idx(i, from, to)).collect(),
        }
    }
    LinearExpr {
        terms: e
            .terms
            .iter()
            .map(|t| Term {
                coeff: CoeffPoly {
                    monos: t
                        .coeff
                        .monos
                        .iter()
                        .map(|m| Mono {
                            coef: m.coef.clone(),
                            refs: m.refs.iter().map(|r| ren_param(r, from, to)).collect(),
                        })
                        .collect(),
                },
                var: VarRef {
                    name: t.var.name.clone(),
                    indices: t.var.indices.iter().map(|i| ren_idx(i, from, to)).collect(),
                },
            })
            .collect(),
        sums: e
            .sums
            .iter()
            .map(|s| {
                if s.index == from {
                    s.clone() // inner binding shadows the renamed one
                } else {
                    SumNode {
                        index: s.index.clone(),
                        set: s.set.clone(),
                        body: rename_bound(&s.body, from, to),
                    }
                }
            })
            .collect(),
        constant: CoeffPoly {
            monos: e
                .constant
                .monos
                .iter()
                .map(|m| Mono {
                    coef: m.coef.clone(),
                    refs: m.refs.iter().map(|r| ren_param(r, from, to)).collect(),
                })
                .collect(),
        },
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Number(Rat),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Rel(Relation),
}

#[derive(Debug, Clone)]
struct SpannedTok {
    tok: Tok,
    pos: usize,
}

/// Translate the supported LaTeX tokens; any other backslash command fails.
pub fn translate_latex(text: &str) -> Result<String, ParseError> {
    let mut out = String::with_capacity(text.len());
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\\' {
            let rest = &text[i + 1..];
            let word: String = rest
                .chars()
                .take_while(|c| c.is_ascii_alphabetic())
                .collect();
            let repl = match word.as_str() {
                "cdot" | "times" => "*",
                "leq" | "le" => "<=",
                "geq" | "ge" => ">=",
                _ => {
                    return Err(ParseError::new(
                        i,
                        format!("unsupported LaTeX token \\{word}"),
                    ))
                }
            };
            out.push_str(repl);
            i += 1 + word.len();
        } else {
            out.push(text[i..].chars().next().unwrap());
            i += text[i..].chars().next().unwrap().len_utf8();
        }
    }
    Ok(out)
}

fn lex(text: &str) -> Result<Vec<SpannedTok>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                toks.push(SpannedTok { tok: Tok::Plus, pos: i });
                i += 1;
            }
            b'-' => {
                toks.push(SpannedTok { tok: Tok::Minus, pos: i });
                i += 1;
            }
            b'*' => {
                toks.push(SpannedTok { tok: Tok::Star, pos: i });
                i += 1;
            }
            b'^' => {
                toks.push(SpannedTok { tok: Tok::Caret, pos: i });
                i += 1;
            }
            b'(' => {
                toks.push(SpannedTok { tok: Tok::LParen, pos: i });
                i += 1;
            }
            b')' => {
                toks.push(SpannedTok { tok: Tok::RParen, pos: i });
                i += 1;
            }
            b'[' => {
                toks.push(SpannedTok { tok: Tok::LBracket, pos: i });
                i += 1;
            }
            b']' => {
                toks.push(SpannedTok { tok: Tok::RBracket, pos: i });
                i += 1;
            }
            b',' => {
                toks.push(SpannedTok { tok: Tok::Comma, pos: i });
                i += 1;
            }
            b'<' | b'>' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    let rel = if c == b'<' { Relation::Le } else { Relation::Ge };
                    toks.push(SpannedTok { tok: Tok::Rel(rel), pos: i });
                    i += 2;
                } else {
                    return Err(ParseError::new(i, "expected '<=' or '>='"));
                }
            }
            b'=' => {
                toks.push(SpannedTok {
                    tok: Tok::Rel(Relation::Eq),
                    pos: i,
                });
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // exponent part, only when followed by digits
                if i < bytes.len()
                    && (bytes[i] == b'e' || bytes[i] == b'E')
                    && i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_digit()
                        || ((bytes[i + 1] == b'+' || bytes[i + 1] == b'-')
                            && i + 2 < bytes.len()
                            && bytes[i + 2].is_ascii_digit()))
                {
                    i += 2;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let lit = &text[start..i];
                let value = parse_decimal(lit)
                    .ok_or_else(|| ParseError::new(start, format!("bad number '{lit}'")))?;
                toks.push(SpannedTok {
                    tok: Tok::Number(value),
                    pos: start,
                });
            }
            _ if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
                {
                    i += 1;
                }
                toks.push(SpannedTok {
                    tok: Tok::Name(text[start..i].to_string()),
                    pos: start,
                });
            }
            _ => {
                return Err(ParseError::new(
                    i,
                    format!("unexpected character '{}'", text[i..].chars().next().unwrap()),
                ))
            }
        }
    }
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser (raw AST, classification deferred)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum RawIndex {
    Ident(String),
    Number(String),
    Indexed(String, Vec<RawIndex>),
}

#[derive(Debug, Clone)]
enum RawAtom {
    Number(Rat),
    Ref { name: String, indices: Vec<RawIndex>, pos: usize },
    Paren(RawExpr),
    Sum { index: String, set: String, body: RawExpr },
}

#[derive(Debug, Clone)]
struct RawChain {
    negative: bool,
    atoms: Vec<RawAtom>,
}

#[derive(Debug, Clone)]
struct RawExpr {
    chains: Vec<RawChain>,
}

struct Parser {
    toks: Vec<SpannedTok>,
    at: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.pos).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.tok.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(want) {
            self.at += 1;
            Ok(())
        } else {
            Err(ParseError::new(self.pos(), format!("expected {what}")))
        }
    }

    fn parse_expr(&mut self) -> Result<RawExpr, ParseError> {
        let mut chains = Vec::new();
        let mut negative = matches!(self.peek(), Some(Tok::Minus));
        if negative || matches!(self.peek(), Some(Tok::Plus)) {
            self.at += 1;
        }
        loop {
            let mut chain = self.parse_chain()?;
            chain.negative = negative;
            chains.push(chain);
            match self.peek() {
                Some(Tok::Plus) => {
                    negative = false;
                    self.at += 1;
                }
                Some(Tok::Minus) => {
                    negative = true;
                    self.at += 1;
                }
                _ => break,
            }
        }
        Ok(RawExpr { chains })
    }

    fn parse_chain(&mut self) -> Result<RawChain, ParseError> {
        let mut atoms = vec![self.parse_atom()?];
        while matches!(self.peek(), Some(Tok::Star)) {
            self.at += 1;
            atoms.push(self.parse_atom()?);
        }
        Ok(RawChain {
            negative: false,
            atoms,
        })
    }

    fn parse_atom(&mut self) -> Result<RawAtom, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Number(n)) => {
                let base = RawAtom::Number(n);
                self.maybe_power(base, pos)
            }
            Some(Tok::Name(name)) if name == "sum" && self.peek() == Some(&Tok::LParen) => {
                self.at += 1;
                let idx = match self.bump() {
                    Some(Tok::Name(n)) => n,
                    _ => return Err(ParseError::new(pos, "expected sum index name")),
                };
                match self.bump() {
                    Some(Tok::Name(kw)) if kw == "in" => {}
                    _ => return Err(ParseError::new(pos, "expected 'in' inside sum(...)")),
                }
                let set = match self.bump() {
                    Some(Tok::Name(n)) => n,
                    _ => return Err(ParseError::new(pos, "expected set name inside sum(...)")),
                };
                self.expect(&Tok::Comma, "',' inside sum(...)")?;
                let body = self.parse_expr()?;
                self.expect(&Tok::RParen, "')' closing sum(...)")?;
                Ok(RawAtom::Sum {
                    index: idx,
                    set,
                    body,
                })
            }
            Some(Tok::Name(name)) => {
                let indices = if self.peek() == Some(&Tok::LBracket) {
                    self.parse_index_list()?
                } else {
                    Vec::new()
                };
                let base = RawAtom::Ref { name, indices, pos };
                self.maybe_power(base, pos)
            }
            Some(Tok::LParen) => {
                let inner = self.parse_expr()?;
                self.expect(&Tok::RParen, "closing ')'")?;
                Ok(RawAtom::Paren(inner))
            }
            _ => Err(ParseError::new(pos, "expected a term")),
        }
    }

    fn maybe_power(&mut self, base: RawAtom, pos: usize) -> Result<RawAtom, ParseError> {
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.at += 1;
        let exp = match self.bump() {
            Some(Tok::Number(n)) if n.is_integer() && !n.is_negative() => {
                n.to_integer().to_string().parse::<u32>().map_err(|_| {
                    ParseError::new(pos, "exponent too large")
                })?
            }
            _ => return Err(ParseError::new(self.pos(), "expected nonnegative integer exponent")),
        };
        match base {
            RawAtom::Number(n) => {
                let mut v = Rat::one();
                for _ in 0..exp {
                    v *= n.clone();
                }
                Ok(RawAtom::Number(v))
            }
            RawAtom::Ref { name, indices, pos } => {
                // expand NAME^k into a repeated product handled downstream
                let mut chain = Vec::new();
                for _ in 0..exp {
                    chain.push(RawAtom::Ref {
                        name: name.clone(),
                        indices: indices.clone(),
                        pos,
                    });
                }
                if chain.is_empty() {
                    Ok(RawAtom::Number(Rat::one()))
                } else {
                    Ok(RawAtom::Paren(RawExpr {
                        chains: vec![RawChain {
                            negative: false,
                            atoms: chain,
                        }],
                    }))
                }
            }
            _ => Err(ParseError::new(pos, "'^' applies to numbers and names only")),
        }
    }

    fn parse_index_list(&mut self) -> Result<Vec<RawIndex>, ParseError> {
        self.expect(&Tok::LBracket, "'['")?;
        let mut out = Vec::new();
        loop {
            out.push(self.parse_index()?);
            match self.bump() {
                Some(Tok::Comma) => continue,
                Some(Tok::RBracket) => break,
                _ => return Err(ParseError::new(self.pos(), "expected ',' or ']'")),
            }
        }
        Ok(out)
    }

    fn parse_index(&mut self) -> Result<RawIndex, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Name(n)) => {
                if self.peek() == Some(&Tok::LBracket) {
                    let inner = self.parse_index_list()?;
                    Ok(RawIndex::Indexed(n, inner))
                } else {
                    Ok(RawIndex::Ident(n))
                }
            }
            Some(Tok::Number(v)) => Ok(RawIndex::Number(crate::scalar::rat_display(&v))),
            _ => Err(ParseError::new(pos, "expected index expression")),
        }
    }
}

// ---------------------------------------------------------------------------
// Resolution: raw AST -> LinearExpr
// ---------------------------------------------------------------------------

/// Declaration namespace used to classify bare identifiers.
#[derive(Debug, Clone, Default)]
pub struct Namespace {
    pub variables: std::collections::HashSet<String>,
    pub parameters: std::collections::HashSet<String>,
}

impl Namespace {
    pub fn knows(&self, name: &str) -> bool {
        self.variables.contains(name) || self.parameters.contains(name)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ResolveError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("nonlinear construct: product of variables '{0}' and '{1}'")]
    Nonlinear(String, String),
    #[error("unresolved identifier '{0}'")]
    Unresolved(String),
    #[error("index '{0}' used as a value")]
    IndexAsValue(String),
}

/// Parse an expression string (after optional LaTeX translation) and
/// canonicalize it. With a namespace, identifiers are classified exactly and
/// unknown names are an error; without one, the last named factor of each
/// product is taken as the variable and every identifier is recorded for
/// later resolution.
pub fn parse_linear_expr(text: &str, ns: Option<&Namespace>) -> Result<LinearExpr, ResolveError> {
    let translated = translate_latex(text)?;
    let toks = lex(&translated)?;
    let len = translated.len();
    let mut p = Parser { toks, at: 0, len };
    let raw = p.parse_expr()?;
    if p.at != p.toks.len() {
        return Err(ParseError::new(p.pos(), "trailing input").into());
    }
    let expr = resolve_expr(&raw, ns, &mut Vec::new())?;
    Ok(canonicalize(&expr))
}

/// Split "lhs REL rhs" at the single top-level relation.
pub fn parse_relation(text: &str, ns: Option<&Namespace>) -> Result<(LinearExpr, Relation, LinearExpr), ResolveError> {
    let translated = translate_latex(text)?;
    let toks = lex(&translated)?;
    let mut rel_at = None;
    for (i, t) in toks.iter().enumerate() {
        if let Tok::Rel(r) = t.tok {
            if rel_at.is_some() {
                return Err(ParseError::new(t.pos, "multiple relations in one constraint").into());
            }
            rel_at = Some((i, r));
        }
    }
    let (split, rel) = rel_at
        .ok_or_else(|| ParseError::new(translated.len(), "missing relation (<=, >=, =)"))?;
    let len = translated.len();
    let mut left = Parser {
        toks: toks[..split].to_vec(),
        at: 0,
        len,
    };
    let lraw = left.parse_expr()?;
    if left.at != left.toks.len() {
        return Err(ParseError::new(left.pos(), "trailing input before relation").into());
    }
    let mut right = Parser {
        toks: toks[split + 1..].to_vec(),
        at: 0,
        len,
    };
    let rraw = right.parse_expr()?;
    if right.at != right.toks.len() {
        return Err(ParseError::new(right.pos(), "trailing input after relation").into());
    }
    let lhs = canonicalize(&resolve_expr(&lraw, ns, &mut Vec::new())?);
    let rhs = canonicalize(&resolve_expr(&rraw, ns, &mut Vec::new())?);
    Ok((lhs, rel, rhs))
}

fn resolve_expr(
    raw: &RawExpr,
    ns: Option<&Namespace>,
    bound: &mut Vec<String>,
) -> Result<LinearExpr, ResolveError> {
    let mut acc = LinearExpr::zero();
    for chain in &raw.chains {
        let piece = resolve_chain(chain, ns, bound)?;
        acc.terms.extend(piece.terms);
        acc.sums.extend(piece.sums);
        acc.constant = acc.constant.add(&piece.constant);
    }
    Ok(acc)
}

enum Factor {
    Coeff(CoeffPoly),
    Var(VarRef),
    Expr(LinearExpr),
}

fn resolve_chain(
    chain: &RawChain,
    ns: Option<&Namespace>,
    bound: &mut Vec<String>,
) -> Result<LinearExpr, ResolveError> {
    let mut factors = Vec::new();
    for atom in &chain.atoms {
        factors.push(resolve_atom(atom, ns, bound)?);
    }
    // Fold: multiply all coefficient factors, keep at most one variable or
    // one sub-expression carrying variables.
    let mut coeff = CoeffPoly::one();
    let mut carrier: Option<Factor> = None;
    for f in factors {
        match f {
            Factor::Coeff(c) => coeff = coeff.mul(&c),
            other => match carrier {
                None => carrier = Some(other),
                Some(prev) => {
                    // Without a namespace the earlier provisional variable is
                    // reinterpreted as a parameter: the last named factor wins.
                    if ns.is_none() {
                        if let Factor::Var(v) = prev {
                            coeff = coeff.mul(&CoeffPoly::param(ParamRef {
                                name: v.name,
                                indices: v.indices,
                            }));
                            carrier = Some(other);
                            continue;
                        }
                    }
                    // Two variable-carrying factors: only legal when at least
                    // one is actually constant (an Expr with no variables).
                    let (a, b) = (factor_into_expr(prev), factor_into_expr(other));
                    match (expr_as_poly(&a), expr_as_poly(&b)) {
                        (Some(pa), _) => {
                            coeff = coeff.mul(&pa);
                            carrier = Some(Factor::Expr(b));
                        }
                        (_, Some(pb)) => {
                            coeff = coeff.mul(&pb);
                            carrier = Some(Factor::Expr(a));
                        }
                        _ => {
                            let an = a.variable_names().join(",");
                            let bn = b.variable_names().join(",");
                            return Err(ResolveError::Nonlinear(an, bn));
                        }
                    }
                }
            },
        }
    }
    if chain.negative {
        coeff = coeff.neg();
    }
    let out = match carrier {
        None => LinearExpr {
            constant: coeff,
            ..Default::default()
        },
        Some(Factor::Var(v)) => LinearExpr {
            terms: vec![Term { coeff, var: v }],
            ..Default::default()
        },
        Some(Factor::Expr(e)) => e.scale_poly(&coeff),
        Some(Factor::Coeff(_)) => unreachable!(),
    };
    Ok(out)
}

fn factor_into_expr(f: Factor) -> LinearExpr {
    match f {
        Factor::Coeff(c) => LinearExpr {
            constant: c,
            ..Default::default()
        },
        Factor::Var(v) => LinearExpr::from_var(v),
        Factor::Expr(e) => e,
    }
}

/// An expression with no variables anywhere can be folded back into a
/// coefficient polynomial (sums over parameters are not foldable).
fn expr_as_poly(e: &LinearExpr) -> Option<CoeffPoly> {
    if e.terms.is_empty() && e.sums.is_empty() {
        Some(e.constant.clone())
    } else {
        None
    }
}

fn resolve_atom(
    atom: &RawAtom,
    ns: Option<&Namespace>,
    bound: &mut Vec<String>,
) -> Result<Factor, ResolveError> {
    match atom {
        RawAtom::Number(n) => Ok(Factor::Coeff(CoeffPoly::constant(n.clone()))),
        RawAtom::Paren(inner) => Ok(Factor::Expr(resolve_expr(inner, ns, bound)?)),
        RawAtom::Sum { index, set, body } => {
            bound.push(index.clone());
            let body = resolve_expr(body, ns, bound)?;
            bound.pop();
            Ok(Factor::Expr(LinearExpr {
                sums: vec![SumNode {
                    index: index.clone(),
                    set: set.clone(),
                    body,
                }],
                ..Default::default()
            }))
        }
        RawAtom::Ref { name, indices, .. } => {
            let idx = indices
                .iter()
                .map(|i| resolve_index(i, ns, bound))
                .collect::<Result<Vec<_>, _>>()?;
            match ns {
                Some(ns) => {
                    if ns.variables.contains(name) {
                        Ok(Factor::Var(VarRef {
                            name: name.clone(),
                            indices: idx,
                        }))
                    } else if ns.parameters.contains(name) {
                        Ok(Factor::Coeff(CoeffPoly::param(ParamRef {
                            name: name.clone(),
                            indices: idx,
                        })))
                    } else if bound.iter().any(|b| b == name) {
                        Err(ResolveError::IndexAsValue(name.clone()))
                    } else {
                        Err(ResolveError::Unresolved(name.clone()))
                    }
                }
                // No namespace: decide later; provisionally a variable. The
                // chain folding below treats a second named factor as the
                // coefficient, so `H * x` resolves with x as the variable.
                None => Ok(Factor::Var(VarRef {
                    name: name.clone(),
                    indices: idx,
                })),
            }
        }
    }
}

fn resolve_index(
    raw: &RawIndex,
    ns: Option<&Namespace>,
    bound: &mut Vec<String>,
) -> Result<IndexExpr, ResolveError> {
    match raw {
        RawIndex::Number(lit) => Ok(IndexExpr::Label(lit.clone())),
        RawIndex::Indexed(name, inner) => {
            let idx = inner
                .iter()
                .map(|i| resolve_index(i, ns, bound))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(ns) = ns {
                if !ns.parameters.contains(name) {
                    return Err(ResolveError::Unresolved(name.clone()));
                }
            }
            Ok(IndexExpr::Param(ParamRef {
                name: name.clone(),
                indices: idx,
            }))
        }
        RawIndex::Ident(name) => {
            if bound.iter().any(|b| b == name) {
                return Ok(IndexExpr::Bound(name.clone()));
            }
            match ns {
                Some(ns) if ns.parameters.contains(name) => Ok(IndexExpr::Param(ParamRef {
                    name: name.clone(),
                    indices: Vec::new(),
                })),
                Some(_) => Ok(IndexExpr::Bound(name.clone())), // quantifier index, checked later
                None => Ok(IndexExpr::Bound(name.clone())),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn ns(vars: &[&str], params: &[&str]) -> Namespace {
        Namespace {
            variables: vars.iter().map(|s| s.to_string()).collect(),
            parameters: params.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn parses_simple_sum_of_terms() {
        let e = parse_linear_expr("x + 2*y", Some(&ns(&["x", "y"], &[]))).unwrap();
        assert_eq!(e.terms.len(), 2);
        assert_eq!(e.terms[0].var.name, "x");
        assert_eq!(e.terms[0].coeff.as_rational().unwrap(), rat_int(1));
        assert_eq!(e.terms[1].var.name, "y");
        assert_eq!(e.terms[1].coeff.as_rational().unwrap(), rat_int(2));
        assert!(e.sums.is_empty());
        assert!(e.constant.is_zero());
    }

    #[test]
    fn parses_latex_digit_expansion() {
        // Appendix-style prompt fragment: parameter times a digit expansion.
        let e = parse_linear_expr(
            r"H \cdot (f_0*10^0 + f_1*10^1)",
            Some(&ns(&["f_0", "f_1"], &["H"])),
        )
        .unwrap();
        assert_eq!(e.terms.len(), 2);
        let t0 = &e.terms[0];
        assert_eq!(t0.var.name, "f_0");
        assert_eq!(t0.coeff.monos.len(), 1);
        assert_eq!(t0.coeff.monos[0].coef, rat_int(1));
        assert_eq!(t0.coeff.monos[0].refs[0].name, "H");
        let t1 = &e.terms[1];
        assert_eq!(t1.var.name, "f_1");
        assert_eq!(t1.coeff.monos[0].coef, rat_int(10));
        assert_eq!(t1.coeff.monos[0].refs[0].name, "H");
    }

    #[test]
    fn parses_single_sum_node() {
        let e = parse_linear_expr("sum(i in V, x[i])", Some(&ns(&["x"], &[]))).unwrap();
        assert!(e.terms.is_empty());
        assert_eq!(e.sums.len(), 1);
        let s = &e.sums[0];
        assert_eq!(s.set, "V");
        assert_eq!(s.body.terms.len(), 1);
        assert_eq!(s.body.terms[0].var.indices, vec![IndexExpr::Bound("i".into())]);
    }

    #[test]
    fn variable_times_parameter_in_either_order() {
        let a = parse_linear_expr("Rate * x", Some(&ns(&["x"], &["Rate"]))).unwrap();
        let b = parse_linear_expr("x * Rate", Some(&ns(&["x"], &["Rate"]))).unwrap();
        assert_eq!(a.canonical_string(), b.canonical_string());
    }

    #[test]
    fn rejects_variable_products() {
        let err = parse_linear_expr("x * y", Some(&ns(&["x", "y"], &[]))).unwrap_err();
        assert!(matches!(err, ResolveError::Nonlinear(..)));
        let err = parse_linear_expr("x * (y + 1)", Some(&ns(&["x", "y"], &[]))).unwrap_err();
        assert!(matches!(err, ResolveError::Nonlinear(..)));
    }

    #[test]
    fn rejects_unknown_latex() {
        let err = parse_linear_expr(r"\frac{x}{2}", Some(&ns(&["x"], &[]))).unwrap_err();
        assert!(err.to_string().contains("LaTeX"));
    }

    #[test]
    fn reports_position_on_syntax_error() {
        let err = parse_linear_expr("x + + y", Some(&ns(&["x", "y"], &[]))).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("byte 4"), "{msg}");
    }

    #[test]
    fn canonical_merges_and_cancels() {
        let ns2 = ns(&["x", "y"], &[]);
        let e = parse_linear_expr("x + x", Some(&ns2)).unwrap();
        assert_eq!(e.terms.len(), 1);
        assert_eq!(e.terms[0].coeff.as_rational().unwrap(), rat_int(2));

        let e = parse_linear_expr("2*y + x - 2*y", Some(&ns2)).unwrap();
        assert_eq!(e.terms.len(), 1);
        assert_eq!(e.terms[0].var.name, "x");

        let e = parse_linear_expr("0.5 * x + 0.5 * x - x", Some(&ns2)).unwrap();
        assert!(e.is_zero());
    }

    #[test]
    fn canonical_equal_under_permutation() {
        let ns2 = ns(&["x", "y", "z"], &["a"]);
        let e1 = parse_linear_expr("x + 2*y - 3*z + a", Some(&ns2)).unwrap();
        let e2 = parse_linear_expr("a - 3*z + 2*y + x", Some(&ns2)).unwrap();
        assert_eq!(e1.canonical_string(), e2.canonical_string());
    }

    #[test]
    fn sum_merging_same_set() {
        let ns2 = ns(&["x", "y"], &[]);
        let e = parse_linear_expr("sum(i in V, x[i]) + sum(j in V, y[j])", Some(&ns2)).unwrap();
        assert_eq!(e.sums.len(), 1);
        assert_eq!(e.sums[0].body.terms.len(), 2);
        let f = parse_linear_expr("sum(k in V, x[k] + y[k])", Some(&ns2)).unwrap();
        assert_eq!(e.canonical_string(), f.canonical_string());
    }

    #[test]
    fn render_round_trip_is_canonically_equal() {
        let ns2 = ns(&["x", "y"], &["W", "R"]);
        for src in [
            "3 * x - 0.5 * y + 7",
            "W * x + R * y - 4",
            "sum(i in V, 2 * x[i]) + y",
            "2 * W * R * x",
            "- x + y",
        ] {
            let e = parse_linear_expr(src, Some(&ns2)).unwrap();
            let back = parse_linear_expr(&e.render(), Some(&ns2)).unwrap();
            assert_eq!(e.canonical_string(), back.canonical_string(), "src={src}");
        }
    }

    #[test]
    fn substitution_distributes_coefficients() {
        let ns2 = ns(&["x", "y"], &[]);
        let e = parse_linear_expr("3 * x + y", Some(&ns2)).unwrap();
        let s = e.substitute_var("x", &[(rat_int(1), "p".into()), (rat_int(-1), "m".into())]);
        let want = parse_linear_expr("3 * p - 3 * m + y", Some(&ns(&["p", "m", "y"], &[]))).unwrap();
        assert_eq!(s.canonical_string(), want.canonical_string());
    }

    #[test]
    fn relation_parsing() {
        let ns2 = ns(&["x", "y"], &["B"]);
        let (lhs, rel, rhs) = parse_relation(r"x + 2*y \leq B", Some(&ns2)).unwrap();
        assert_eq!(rel, Relation::Le);
        assert_eq!(lhs.terms.len(), 2);
        assert!(rhs.terms.is_empty());
        assert!(parse_relation("x + y", Some(&ns2)).is_err());
        assert!(parse_relation("x <= y <= 2", Some(&ns2)).is_err());
    }

    #[test]
    fn standalone_parse_records_identifiers() {
        // Without a namespace the last named factor is the variable.
        let e = parse_linear_expr("H * x + 2 * y", None).unwrap();
        assert_eq!(e.terms.len(), 2);
        let names: Vec<&str> = e.terms.iter().map(|t| t.var.name.as_str()).collect();
        assert_eq!(names, vec!["x", "y"]);
    }
}
