//! Solution mappings between two formulations: representation, the JSON wire
//! format used with language models, exact application, verification, and the
//! offline finders (heuristic and brute-force).
//!
//! A mapping sends the variable space of the second formulation (α′) into the
//! first (α): per α variable, a linear combination of α′ variables with
//! rational constants and no affine offset. Set-indexed variables map at the
//! set level: one symbolic entry expands index-by-index (positionally), so an
//! entry over a set of cardinality k stands for k scalar entries.

use crate::instance::{Assignment, ConcreteModel};
use crate::model::Formulation;
use crate::scalar::{parse_decimal, rat_to_f64, Rat};
use crate::solver::{check_solution, objective_band, FeasibilityReport, Tolerances};
use indexmap::IndexMap;
use num_traits::{One, Signed, Zero};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum MapEntry {
    /// Linear combination of α′ variables.
    Terms(Vec<(Rat, String)>),
    /// The Appendix-style `{"constant": "none", "variable": "none"}` sentinel.
    NoMap,
}

/// Mapping f from α′ variables to α variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mapping {
    pub entries: IndexMap<String, MapEntry>,
}

impl Mapping {
    pub fn identity(names: impl IntoIterator<Item = String>) -> Self {
        let mut entries = IndexMap::new();
        for n in names {
            entries.insert(n.clone(), MapEntry::Terms(vec![(Rat::one(), n)]));
        }
        Mapping { entries }
    }

    pub fn insert_terms(&mut self, var: impl Into<String>, terms: Vec<(Rat, String)>) {
        self.entries.insert(var.into(), MapEntry::Terms(terms));
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MappingError {
    #[error("mapping incomplete: no entry covers variable '{0}'")]
    Incomplete(String),
    #[error("mapping references unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("entry for '{var}' repeats variable '{dup}'")]
    DuplicateTarget { var: String, dup: String },
    #[error("entry for '{var}' maps across incompatible index shapes (missing column {col})")]
    ShapeMismatch { var: String, col: String },
    #[error("assignment length {found} does not match column count {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

/// Apply a mapping to an α′ assignment: x̂_v = Σ c_j·x′_{w_j}, evaluated in
/// exact rationals. Set-indexed entries pair columns positionally, so both
/// sides must have identical per-dimension cardinalities.
pub fn apply_mapping(
    f: &Mapping,
    alpha: &ConcreteModel<Rat>,
    alpha_prime: &ConcreteModel<Rat>,
    x_prime: &Assignment<Rat>,
) -> Result<Assignment<Rat>, MappingError> {
    if x_prime.len() != alpha_prime.num_cols() {
        return Err(MappingError::LengthMismatch {
            expected: alpha_prime.num_cols(),
            found: x_prime.len(),
        });
    }
    let prime_cols = alpha_prime.column_index();
    let prime_vars: std::collections::HashSet<&str> = alpha_prime
        .columns
        .iter()
        .map(|c| c.var.as_str())
        .collect();
    let mut values = Vec::with_capacity(alpha.num_cols());
    for col in &alpha.columns {
        let entry = f
            .entries
            .get(&col.var)
            .ok_or_else(|| MappingError::Incomplete(col.var.clone()))?;
        let terms = match entry {
            MapEntry::NoMap => return Err(MappingError::Incomplete(col.var.clone())),
            MapEntry::Terms(t) => t,
        };
        let mut seen = std::collections::HashSet::new();
        let mut acc = Rat::zero();
        for (c, w) in terms {
            if !prime_vars.contains(w.as_str()) {
                return Err(MappingError::UnknownVariable(w.clone()));
            }
            if !seen.insert(w.clone()) {
                return Err(MappingError::DuplicateTarget {
                    var: col.var.clone(),
                    dup: w.clone(),
                });
            }
            let j = prime_cols
                .get(&(w.as_str(), col.positions.as_slice()))
                .ok_or_else(|| MappingError::ShapeMismatch {
                    var: col.var.clone(),
                    col: format!("{w}{:?}", col.positions),
                })?;
            acc += c * x_prime.values[*j].clone();
        }
        values.push(acc);
    }
    Ok(Assignment::new(values))
}

// ---------------------------------------------------------------------------
// Wire format (Appendix-style JSON object)
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("invalid mapping JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("mapping JSON: {0}")]
    Shape(String),
    #[error("non-numeric constant '{0}' (only the \"none\" sentinel is allowed)")]
    BadConstant(String),
}

/// Strict parse of the response contract: an object mapping variable names to
/// term lists, each term `{"constant": <number>, "variable": "<name>"}`, with
/// `{"constant": "none", "variable": "none"}` as the no-map sentinel.
/// Constants are read as exact decimals.
pub fn parse_mapping_json(text: &str) -> Result<Mapping, WireError> {
    parse_mapping_impl(text, false)
}

/// Like [`parse_mapping_json`] but also accepts exact fraction strings such
/// as `"1/60"` for constants; used for stored ground-truth mappings whose
/// constants have no finite decimal form.
pub fn parse_mapping_json_lenient(text: &str) -> Result<Mapping, WireError> {
    parse_mapping_impl(text, true)
}

fn parse_mapping_impl(text: &str, lenient: bool) -> Result<Mapping, WireError> {
    let value: Value = serde_json::from_str(text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| WireError::Shape("expected a JSON object".into()))?;
    if obj.is_empty() {
        return Err(WireError::Shape("empty mapping object".into()));
    }
    let mut entries = IndexMap::new();
    for (var, terms_v) in obj {
        let arr = terms_v
            .as_array()
            .ok_or_else(|| WireError::Shape(format!("entry '{var}' must be an array")))?;
        if arr.is_empty() {
            return Err(WireError::Shape(format!("entry '{var}' has no terms")));
        }
        let mut terms = Vec::with_capacity(arr.len());
        let mut sentinel = false;
        for item in arr {
            let t = item
                .as_object()
                .ok_or_else(|| WireError::Shape(format!("term in '{var}' must be an object")))?;
            let cv = t
                .get("constant")
                .ok_or_else(|| WireError::Shape(format!("term in '{var}' missing 'constant'")))?;
            let wv = t
                .get("variable")
                .and_then(Value::as_str)
                .ok_or_else(|| WireError::Shape(format!("term in '{var}' missing 'variable'")))?;
            match cv {
                Value::String(s) if s == "none" => {
                    if wv != "none" {
                        return Err(WireError::Shape(format!(
                            "sentinel in '{var}' must pair \"none\" with \"none\""
                        )));
                    }
                    sentinel = true;
                }
                Value::String(s) if lenient => {
                    let r = crate::scalar::parse_rat(s)
                        .ok_or_else(|| WireError::BadConstant(s.clone()))?;
                    terms.push((r, wv.to_string()));
                }
                Value::String(s) => return Err(WireError::BadConstant(s.clone())),
                Value::Number(n) => {
                    let r = parse_decimal(&n.to_string())
                        .ok_or_else(|| WireError::BadConstant(n.to_string()))?;
                    terms.push((r, wv.to_string()));
                }
                other => return Err(WireError::BadConstant(other.to_string())),
            }
        }
        if sentinel {
            if !terms.is_empty() || arr.len() != 1 {
                return Err(WireError::Shape(format!(
                    "entry '{var}' mixes the sentinel with real terms"
                )));
            }
            entries.insert(var.clone(), MapEntry::NoMap);
        } else {
            entries.insert(var.clone(), MapEntry::Terms(terms));
        }
    }
    Ok(Mapping { entries })
}

/// Serialize in the same wire shape. Constants with a finite decimal form
/// are emitted as JSON numbers; others (e.g. 1/60) as exact fraction strings.
pub fn mapping_to_value(m: &Mapping) -> Value {
    let mut obj = serde_json::Map::new();
    for (var, entry) in &m.entries {
        let arr = match entry {
            MapEntry::NoMap => vec![serde_json::json!({
                "constant": "none",
                "variable": "none"
            })],
            MapEntry::Terms(terms) => terms
                .iter()
                .map(|(c, w)| {
                    let mut t = serde_json::Map::new();
                    t.insert("constant".into(), crate::model::rat_to_value(c));
                    t.insert("variable".into(), Value::String(w.clone()));
                    Value::Object(t)
                })
                .collect(),
        };
        obj.insert(var.clone(), Value::Array(arr));
    }
    Value::Object(obj)
}

// ---------------------------------------------------------------------------
// Verification (the instance-specific accept test)
// ---------------------------------------------------------------------------

/// Shared per-pair solve results the finders and the mapping checker work
/// against.
#[derive(Debug)]
pub struct PairContext<'a> {
    pub alpha_exact: &'a ConcreteModel<Rat>,
    pub alpha_float: &'a ConcreteModel<f64>,
    pub alpha_prime_exact: &'a ConcreteModel<Rat>,
    /// Optimal assignment of α.
    pub x_star: Assignment<f64>,
    /// Optimal objective of α (native sense).
    pub z_star: f64,
    /// Optimal assignment of α′.
    pub x_prime_star: Assignment<f64>,
    pub tol: Tolerances,
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub accepted: bool,
    pub mapped_objective: f64,
    pub report: FeasibilityReport,
}

/// Map α′'s optimum through `f` and test feasibility for α plus objective
/// agreement with α's optimum within the mixed absolute/relative band.
pub fn verify_mapping(f: &Mapping, ctx: &PairContext) -> Result<VerifyOutcome, MappingError> {
    let x_prime = ctx.x_prime_star.to_exact();
    let mapped = apply_mapping(f, ctx.alpha_exact, ctx.alpha_prime_exact, &x_prime)?;
    let z_exact = crate::instance::objective_value(ctx.alpha_exact, &mapped.values);
    let mapped_objective = rat_to_f64(&z_exact);
    let report = check_solution(ctx.alpha_float, &mapped.to_f64(), ctx.tol);
    let band = objective_band(ctx.z_star, ctx.tol.feasibility);
    let accepted = report.feasible && (mapped_objective - ctx.z_star).abs() <= band;
    Ok(VerifyOutcome {
        accepted,
        mapped_objective,
        report,
    })
}

// ---------------------------------------------------------------------------
// Heuristic finder
// ---------------------------------------------------------------------------

/// Candidate mappings from structural signatures alone, in deterministic
/// order and never verified here: exact-name identity first, then the unique
/// shape-and-type bijection, then constraint-signature bijections. An empty
/// result is legitimate.
pub fn heuristic_finder(alpha: &Formulation, alpha_prime: &Formulation) -> Vec<Mapping> {
    let mut out: Vec<Mapping> = Vec::new();
    let push = |m: Mapping, out: &mut Vec<Mapping>| {
        if !out.contains(&m) {
            out.push(m);
        }
    };

    // 1. exact-name identity
    if alpha.variables.keys().all(|v| {
        alpha_prime
            .variables
            .get(v)
            .map(|d| d.shape.len() == alpha.variables[v].shape.len())
            .unwrap_or(false)
    }) {
        push(Mapping::identity(alpha.variables.keys().cloned()), &mut out);
    }

    // 2. unique shape-and-type-compatible matches
    let compat = |a: &crate::model::VariableDecl, b: &crate::model::VariableDecl| {
        a.var_type == b.var_type && a.shape.len() == b.shape.len()
    };
    let mut unique: Vec<(String, String)> = Vec::new();
    let mut ok = true;
    for (v, vd) in &alpha.variables {
        let matches: Vec<&String> = alpha_prime
            .variables
            .iter()
            .filter(|(_, wd)| compat(vd, wd))
            .map(|(w, _)| w)
            .collect();
        if matches.len() == 1 {
            unique.push((v.clone(), matches[0].clone()));
        } else {
            ok = false;
            break;
        }
    }
    if ok {
        let targets: std::collections::HashSet<&String> =
            unique.iter().map(|(_, w)| w).collect();
        if targets.len() == unique.len() {
            let mut m = Mapping::default();
            for (v, w) in unique {
                m.insert_terms(v, vec![(Rat::one(), w)]);
            }
            push(m, &mut out);
        }
    }

    // 3. constraint-signature bijections
    let sig_a = signatures(alpha);
    let sig_b = signatures(alpha_prime);
    let mut groups: IndexMap<String, (Vec<String>, Vec<String>)> = IndexMap::new();
    for (v, s) in sig_a {
        groups.entry(s).or_default().0.push(v);
    }
    for (w, s) in sig_b {
        groups.entry(s).or_default().1.push(w);
    }
    if groups.values().all(|(a, b)| a.len() == b.len()) {
        let mut assignments: Vec<Vec<(String, String)>> = vec![Vec::new()];
        const CAP: usize = 16;
        for (_, (avars, bvars)) in &groups {
            let perms = permutations(bvars, CAP);
            let mut next = Vec::new();
            for base in &assignments {
                for perm in &perms {
                    if next.len() >= CAP {
                        break;
                    }
                    let mut ext = base.clone();
                    ext.extend(avars.iter().cloned().zip(perm.iter().cloned()));
                    next.push(ext);
                }
            }
            assignments = next;
        }
        for pairs in assignments {
            if pairs.len() != alpha.variables.len() {
                continue;
            }
            let mut m = Mapping::default();
            // keep α declaration order
            for v in alpha.variables.keys() {
                if let Some((_, w)) = pairs.iter().find(|(a, _)| a == v) {
                    m.insert_terms(v.clone(), vec![(Rat::one(), w.clone())]);
                }
            }
            if m.entries.len() == alpha.variables.len() {
                push(m, &mut out);
            }
        }
    }
    out
}

/// Appearance-pattern signature of every variable: type, arity, objective
/// membership and the sorted multiset of (relation, #variables) of the
/// constraints mentioning it.
fn signatures(f: &Formulation) -> Vec<(String, String)> {
    let obj_vars: std::collections::HashSet<String> =
        f.objective.expr.variable_names().into_iter().collect();
    f.variables
        .iter()
        .map(|(name, decl)| {
            let mut pattern: Vec<String> = f
                .constraints
                .iter()
                .filter(|c| {
                    let mut names = c.lhs.variable_names();
                    names.extend(c.rhs.variable_names());
                    names.iter().any(|n| n == name)
                })
                .map(|c| {
                    let mut names = c.lhs.variable_names();
                    names.extend(c.rhs.variable_names());
                    names.sort();
                    names.dedup();
                    format!("{}#{}", c.relation.as_str(), names.len())
                })
                .collect();
            pattern.sort();
            let sig = format!(
                "{}|{}|{}|{}",
                decl.var_type.as_str(),
                decl.shape.len(),
                obj_vars.contains(name) as u8,
                pattern.join(",")
            );
            (name.clone(), sig)
        })
        .collect()
}

fn permutations(items: &[String], cap: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    let mut used = vec![false; items.len()];
    fn rec(
        items: &[String],
        used: &mut Vec<bool>,
        current: &mut Vec<String>,
        out: &mut Vec<Vec<String>>,
        cap: usize,
    ) {
        if out.len() >= cap {
            return;
        }
        if current.len() == items.len() {
            out.push(current.clone());
            return;
        }
        for i in 0..items.len() {
            if !used[i] {
                used[i] = true;
                current.push(items[i].clone());
                rec(items, used, current, out, cap);
                current.pop();
                used[i] = false;
            }
        }
    }
    rec(items, &mut used, &mut current, &mut out, cap);
    out
}

// ---------------------------------------------------------------------------
// Brute-force finder
// ---------------------------------------------------------------------------

/// Enumeration settings for the brute-force oracle.
#[derive(Debug, Clone)]
pub struct FinderConfig {
    pub coefficient_pool: Vec<Rat>,
    pub max_terms: usize,
    pub identity_template: bool,
    pub scale_template: bool,
    pub digit_template: bool,
    pub split_template: bool,
}

impl Default for FinderConfig {
    fn default() -> Self {
        use crate::scalar::rat;
        let mut pool = vec![
            rat(1, 1),
            rat(-1, 1),
            rat(1, 2),
            rat(-1, 2),
            rat(2, 1),
            rat(-2, 1),
            rat(1, 10),
            rat(10, 1),
            rat(1, 60),
            rat(60, 1),
            rat(1, 100),
            rat(100, 1),
        ];
        for i in 3..=6 {
            pool.push(Rat::from_integer(num_bigint::BigInt::from(10i64.pow(i))));
        }
        FinderConfig {
            coefficient_pool: pool,
            max_terms: 8,
            identity_template: true,
            scale_template: true,
            digit_template: true,
            split_template: true,
        }
    }
}

const MATCH_TOL: f64 = 1e-9;

/// Offline oracle finder: per α variable, enumerate pool-scaled single terms,
/// plus/minus pairs and decimal digit expansions of α′ variables whose values
/// at α′'s optimum reproduce α's optimal values, then assemble and verify the
/// full mapping. Deterministic; returns None when the search is exhausted.
pub fn brute_force_finder(ctx: &PairContext, cfg: &FinderConfig) -> Option<Mapping> {
    // positional value table per variable on both sides
    let alpha_groups = group_values(ctx.alpha_exact, &ctx.x_star);
    let prime_groups = group_values(ctx.alpha_prime_exact, &ctx.x_prime_star);

    let mut mapping = Mapping::default();
    for (var, targets) in &alpha_groups {
        let entry = find_entry(var, targets, &prime_groups, cfg)?;
        mapping.entries.insert(var.clone(), entry);
    }
    let outcome = verify_mapping(&mapping, ctx).ok()?;
    // sound by construction: every coordinate matched α's optimum
    assert!(
        outcome.accepted,
        "brute-force candidate failed verification for a coordinate-matched mapping"
    );
    Some(mapping)
}

type ValueGroups = Vec<(String, Vec<f64>)>;

fn group_values(m: &ConcreteModel<Rat>, x: &Assignment<f64>) -> ValueGroups {
    let mut out: ValueGroups = Vec::new();
    for (j, col) in m.columns.iter().enumerate() {
        match out.last_mut() {
            Some((name, vals)) if *name == col.var => vals.push(x.values[j]),
            _ => out.push((col.var.clone(), vec![x.values[j]])),
        }
    }
    out
}

fn matches_all(c: &Rat, source: &[f64], targets: &[f64]) -> bool {
    if source.len() != targets.len() {
        return false;
    }
    let cf = rat_to_f64(c);
    source
        .iter()
        .zip(targets)
        .all(|(s, t)| (cf * s - t).abs() <= MATCH_TOL.max(t.abs() * 1e-12))
}

fn find_entry(
    _var: &str,
    targets: &[f64],
    prime: &ValueGroups,
    cfg: &FinderConfig,
) -> Option<MapEntry> {
    // single-term scale (covers identity via coefficient 1, listed first in
    // the pool)
    if cfg.scale_template || cfg.identity_template {
        for (w, values) in prime {
            for c in &cfg.coefficient_pool {
                if matches_all(c, values, targets) {
                    return Some(MapEntry::Terms(vec![(c.clone(), w.clone())]));
                }
            }
        }
    }
    // plus-minus split pairs: t = w1 - w2 positionwise
    if cfg.split_template && cfg.max_terms >= 2 {
        for (w1, v1) in prime {
            for (w2, v2) in prime {
                if w1 == w2 || v1.len() != targets.len() || v2.len() != targets.len() {
                    continue;
                }
                let fits = v1
                    .iter()
                    .zip(v2)
                    .zip(targets)
                    .all(|((a, b), t)| (a - b - t).abs() <= MATCH_TOL.max(t.abs() * 1e-12));
                if fits {
                    return Some(MapEntry::Terms(vec![
                        (Rat::one(), w1.clone()),
                        (-Rat::one(), w2.clone()),
                    ]));
                }
            }
        }
    }
    // decimal digit expansion for scalar integer-valued targets
    if cfg.digit_template && targets.len() == 1 {
        let t = targets[0];
        if t >= -MATCH_TOL && (t - t.round()).abs() <= MATCH_TOL {
            let mut n = t.round() as i64;
            if n >= 0 {
                let mut digits: Vec<(u32, i64)> = Vec::new(); // (power, digit)
                let mut p = 0u32;
                while n > 0 {
                    let d = n % 10;
                    if d != 0 {
                        digits.push((p, d));
                    }
                    n /= 10;
                    p += 1;
                }
                if !digits.is_empty() && digits.len() <= cfg.max_terms && digits.len() >= 2 {
                    if let Some(terms) = assign_digits(&digits, prime) {
                        return Some(MapEntry::Terms(terms));
                    }
                }
            }
        }
    }
    None
}

/// Deterministic backtracking assignment of distinct scalar α′ variables to
/// the nonzero decimal digits of the target.
fn assign_digits(digits: &[(u32, i64)], prime: &ValueGroups) -> Option<Vec<(Rat, String)>> {
    fn rec(
        digits: &[(u32, i64)],
        k: usize,
        prime: &ValueGroups,
        used: &mut Vec<String>,
        acc: &mut Vec<(Rat, String)>,
    ) -> bool {
        if k == digits.len() {
            return true;
        }
        let (power, d) = digits[k];
        for (w, values) in prime {
            if values.len() != 1 || used.contains(w) {
                continue;
            }
            if (values[0] - d as f64).abs() <= MATCH_TOL {
                used.push(w.clone());
                acc.push((
                    Rat::from_integer(num_bigint::BigInt::from(10i64.pow(power))),
                    w.clone(),
                ));
                if rec(digits, k + 1, prime, used, acc) {
                    return true;
                }
                acc.pop();
                used.pop();
            }
        }
        false
    }
    let mut used = Vec::new();
    let mut acc = Vec::new();
    if rec(digits, 0, prime, &mut used, &mut acc) {
        Some(acc)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn exact_model(vars: &[(&str, usize)]) -> ConcreteModel<Rat> {
        // columns only; enough for apply_mapping shape checks
        let mut columns = Vec::new();
        for (name, card) in vars {
            if *card == 0 {
                columns.push(crate::instance::ColumnId {
                    var: name.to_string(),
                    labels: vec![],
                    positions: vec![],
                });
            } else {
                for i in 0..*card {
                    columns.push(crate::instance::ColumnId {
                        var: name.to_string(),
                        labels: vec![format!("{i}")],
                        positions: vec![i],
                    });
                }
            }
        }
        let n = columns.len();
        ConcreteModel {
            columns,
            objective: vec![Rat::zero(); n],
            sense: crate::model::Sense::Min,
            rows: vec![],
            lower: vec![Some(Rat::zero()); n],
            upper: vec![None; n],
            integral: vec![false; n],
        }
    }

    #[test]
    fn identity_mapping_moves_values_through() {
        let alpha = exact_model(&[("x", 3)]);
        let prime = exact_model(&[("y", 3)]);
        let mut f = Mapping::default();
        f.insert_terms("x", vec![(rat_int(1), "y".into())]);
        let x = apply_mapping(
            &f,
            &alpha,
            &prime,
            &Assignment::new(vec![rat_int(1), rat_int(0), rat_int(1)]),
        )
        .unwrap();
        assert_eq!(x.values, vec![rat_int(1), rat_int(0), rat_int(1)]);
    }

    #[test]
    fn scale_mapping_is_exact() {
        let alpha = exact_model(&[("x", 0)]);
        let prime = exact_model(&[("xp", 0)]);
        let mut f = Mapping::default();
        f.insert_terms("x", vec![(rat(1, 60), "xp".into())]);
        let x = apply_mapping(&f, &alpha, &prime, &Assignment::new(vec![rat_int(120)])).unwrap();
        assert_eq!(x.values, vec![rat_int(2)]);
    }

    #[test]
    fn digit_mapping_recomposes_value() {
        let alpha = exact_model(&[("x", 0)]);
        let prime = exact_model(&[("d0", 0), ("d1", 0), ("d2", 0)]);
        let mut f = Mapping::default();
        f.insert_terms(
            "x",
            vec![
                (rat_int(1), "d0".into()),
                (rat_int(10), "d1".into()),
                (rat_int(100), "d2".into()),
            ],
        );
        let x = apply_mapping(
            &f,
            &alpha,
            &prime,
            &Assignment::new(vec![rat_int(3), rat_int(2), rat_int(1)]),
        )
        .unwrap();
        assert_eq!(x.values, vec![rat_int(123)]);
    }

    #[test]
    fn uncovered_variable_and_unknown_target_error() {
        let alpha = exact_model(&[("x", 0), ("y", 0)]);
        let prime = exact_model(&[("a", 0)]);
        let mut f = Mapping::default();
        f.insert_terms("x", vec![(rat_int(1), "a".into())]);
        let err = apply_mapping(
            &f,
            &alpha,
            &prime,
            &Assignment::new(vec![rat_int(1)]),
        )
        .unwrap_err();
        assert!(matches!(err, MappingError::Incomplete(_)));

        let mut g = Mapping::default();
        g.insert_terms("x", vec![(rat_int(1), "zz".into())]);
        g.insert_terms("y", vec![(rat_int(1), "a".into())]);
        let err = apply_mapping(&g, &alpha, &prime, &Assignment::new(vec![rat_int(1)]))
            .unwrap_err();
        assert!(matches!(err, MappingError::UnknownVariable(_)));
    }

    #[test]
    fn set_indexed_entry_expands_per_index() {
        let alpha = exact_model(&[("x", 4)]);
        let prime = exact_model(&[("y", 4)]);
        let mut f = Mapping::default();
        f.insert_terms("x", vec![(rat(1, 2), "y".into())]);
        let x = apply_mapping(
            &f,
            &alpha,
            &prime,
            &Assignment::new((0..4).map(|i| rat_int(2 * i as i64)).collect()),
        )
        .unwrap();
        // one symbolic entry expanded to exactly |S| = 4 scalar values
        assert_eq!(x.values.len(), 4);
        assert_eq!(x.values, (0..4).map(|i| rat_int(i as i64)).collect::<Vec<_>>());
        // cardinality mismatch is an error
        let short = exact_model(&[("y", 3)]);
        assert!(matches!(
            apply_mapping(
                &f,
                &alpha,
                &short,
                &Assignment::new(vec![rat_int(0); 3])
            ),
            Err(MappingError::ShapeMismatch { .. })
        ));
    }

    const EX1: &str = r#"{
  "OdorRemovingChemicalUnits": [
    {
      "constant": 0.1,
      "variable": "a"
    }
  ]
}"#;
    const EX2: &str = r#"{
  "OdorRemovingChemicalUnits": [
    {
      "constant": 0.1,
      "variable": "a"
    },
    {
      "constant": 0.01,
      "variable": "b"
    }
  ]
}"#;
    const EX3: &str = r#"{
  "OdorRemovingChemicalUnits": [
    {
      "constant": 1,
      "variable": "a"
    }
  ]
}"#;
    const EX4: &str = r#"{
  "OdorRemovingChemicalUnits": [
    {
      "constant": "none",
      "variable": "none"
    }
  ]
}"#;

    #[test]
    fn wire_format_accepts_all_four_response_examples() {
        let m1 = parse_mapping_json(EX1).unwrap();
        assert_eq!(
            m1.entries["OdorRemovingChemicalUnits"],
            MapEntry::Terms(vec![(rat(1, 10), "a".into())])
        );
        let m2 = parse_mapping_json(EX2).unwrap();
        assert_eq!(
            m2.entries["OdorRemovingChemicalUnits"],
            MapEntry::Terms(vec![(rat(1, 10), "a".into()), (rat(1, 100), "b".into())])
        );
        let m3 = parse_mapping_json(EX3).unwrap();
        assert_eq!(
            m3.entries["OdorRemovingChemicalUnits"],
            MapEntry::Terms(vec![(rat_int(1), "a".into())])
        );
        let m4 = parse_mapping_json(EX4).unwrap();
        assert_eq!(m4.entries["OdorRemovingChemicalUnits"], MapEntry::NoMap);
    }

    #[test]
    fn wire_format_round_trips() {
        for src in [EX1, EX2, EX3, EX4] {
            let m = parse_mapping_json(src).unwrap();
            let text = serde_json::to_string_pretty(&mapping_to_value(&m)).unwrap();
            let back = parse_mapping_json(&text).unwrap();
            assert_eq!(m, back);
        }
    }

    #[test]
    fn wire_format_rejects_non_numeric_constants() {
        let bad = r#"{"x": [{"constant": "sqrt2", "variable": "a"}]}"#;
        assert!(matches!(
            parse_mapping_json(bad),
            Err(WireError::BadConstant(_))
        ));
        // strict parser also rejects fraction strings; the lenient one takes them
        let frac = r#"{"x": [{"constant": "1/60", "variable": "a"}]}"#;
        assert!(parse_mapping_json(frac).is_err());
        let m = parse_mapping_json_lenient(frac).unwrap();
        assert_eq!(m.entries["x"], MapEntry::Terms(vec![(rat(1, 60), "a".into())]));
    }

    #[test]
    fn heuristic_unique_signature_bijection() {
        let alpha = crate::model::load_formulation(
            r#"{
          "variables": {
            "x": {"description": "", "type": "continuous", "shape": []},
            "n": {"description": "", "type": "integer", "shape": [], "upper": 5}
          },
          "constraints": [{"description": "", "formulation": "x + n <= 4"}],
          "objective": {"description": "", "sense": "min", "formulation": "x + n"}
        }"#,
        )
        .unwrap();
        let prime = crate::model::load_formulation(
            r#"{
          "variables": {
            "q": {"description": "", "type": "integer", "shape": [], "upper": 5},
            "w": {"description": "", "type": "continuous", "shape": []}
          },
          "constraints": [{"description": "", "formulation": "w + q <= 4"}],
          "objective": {"description": "", "sense": "min", "formulation": "w + q"}
        }"#,
        )
        .unwrap();
        let cands = heuristic_finder(&alpha, &prime);
        assert!(!cands.is_empty());
        let m = &cands[0];
        assert_eq!(m.entries["x"], MapEntry::Terms(vec![(rat_int(1), "w".into())]));
        assert_eq!(m.entries["n"], MapEntry::Terms(vec![(rat_int(1), "q".into())]));
    }

    #[test]
    fn heuristic_symmetric_pair_emits_both_bijections() {
        let alpha = crate::model::load_formulation(
            r#"{
          "variables": {
            "x": {"description": "", "type": "continuous", "shape": []},
            "y": {"description": "", "type": "continuous", "shape": []}
          },
          "constraints": [{"description": "", "formulation": "x + y <= 4"}],
          "objective": {"description": "", "sense": "min", "formulation": "x + y"}
        }"#,
        )
        .unwrap();
        let prime = crate::model::load_formulation(
            r#"{
          "variables": {
            "a": {"description": "", "type": "continuous", "shape": []},
            "b": {"description": "", "type": "continuous", "shape": []}
          },
          "constraints": [{"description": "", "formulation": "a + b <= 4"}],
          "objective": {"description": "", "sense": "min", "formulation": "a + b"}
        }"#,
        )
        .unwrap();
        let cands = heuristic_finder(&alpha, &prime);
        let has = |m: &Mapping, v: &str, w: &str| {
            m.entries[v] == MapEntry::Terms(vec![(rat_int(1), w.into())])
        };
        assert!(cands.iter().any(|m| has(m, "x", "a") && has(m, "y", "b")));
        assert!(cands.iter().any(|m| has(m, "x", "b") && has(m, "y", "a")));
    }

    #[test]
    fn heuristic_disjoint_shapes_yield_nothing() {
        let alpha = crate::model::load_formulation(
            r#"{
          "sets": {"V": {"description": ""}},
          "variables": {"x": {"description": "", "type": "continuous", "shape": ["V"]}},
          "constraints": [],
          "objective": {"description": "", "sense": "min", "formulation": "sum(i in V, x[i])"}
        }"#,
        )
        .unwrap();
        let prime = crate::model::load_formulation(
            r#"{
          "variables": {"q": {"description": "", "type": "binary", "shape": []}},
          "constraints": [],
          "objective": {"description": "", "sense": "min", "formulation": "q"}
        }"#,
        )
        .unwrap();
        assert!(heuristic_finder(&alpha, &prime).is_empty());
    }
}
