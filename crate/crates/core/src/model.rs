//! Symbolic formulation data model and its JSON schema.
//!
//! The on-disk shape:
//!
//! ```json
//! { "description": "...",
//!   "parameters": { "Name": {"description": "...", "shape": ["SetName"]} },
//!   "sets":       { "SetName": {"description": "..."} },
//!   "variables":  { "x": {"description": "...", "type": "continuous|integer|binary",
//!                          "shape": [], "lower": 0, "upper": 10} },
//!   "constraints": [ {"description": "...", "forall": [["i","V"]],
//!                     "formulation": "x[i] + y[i] <= Cap[i]"} ],
//!   "objective":  {"description": "...", "sense": "min", "formulation": "sum(i in V, x[i])"} }
//! ```
//!
//! Bounds: omitted lower defaults to 0 for continuous/integer variables and
//! omitted upper to +∞; an explicit JSON `null` means unbounded in that
//! direction. Binary variables are fixed to [0, 1].
//!
//! Inputs in the NLP4LP house style also load: `parametrized_description`
//! aliases `description`, an objective `formulation` may carry a `Min \`/
//! `Max \` prefix (used to infer a missing `sense`), formulations may use the
//! translated LaTeX tokens, and `code`/`keywords` blocks are carried as
//! opaque values and never executed.

use crate::expr::{parse_linear_expr, parse_relation, LinearExpr, Namespace, Relation, ResolveError};
use crate::scalar::{parse_decimal, rat_display, to_decimal_string, Rat};
use indexmap::IndexMap;
use num_traits::One;
use serde_json::{Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate name '{0}' across parameter/set/variable namespaces")]
    DuplicateName(String),
    #[error("unresolved identifier '{name}' in {context}")]
    UnresolvedIdentifier { name: String, context: String },
    #[error("in {context}: {source}")]
    Expr {
        context: String,
        source: ResolveError,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn schema_err(path: &str, message: impl Into<String>) -> ModelError {
    ModelError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Variable domain kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarType {
    Continuous,
    Integer,
    Binary,
}

impl VarType {
    pub fn as_str(self) -> &'static str {
        match self {
            VarType::Continuous => "continuous",
            VarType::Integer => "integer",
            VarType::Binary => "binary",
        }
    }

    pub fn is_integral(self) -> bool {
        !matches!(self, VarType::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetDecl {
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterDecl {
    pub description: String,
    /// Set names; empty for a scalar parameter.
    pub shape: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDecl {
    pub description: String,
    pub var_type: VarType,
    pub shape: Vec<String>,
    /// None = unbounded below. Binary is always Some(0).
    pub lower: Option<Rat>,
    /// None = unbounded above. Binary is always Some(1).
    pub upper: Option<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintDecl {
    pub description: String,
    /// (index name, set name) pairs quantifying this constraint.
    pub quantifiers: Vec<(String, String)>,
    pub lhs: LinearExpr,
    pub relation: Relation,
    pub rhs: LinearExpr,
    /// Opaque solver-code block carried through load/serialize, never run.
    pub code: Option<Value>,
}

impl ConstraintDecl {
    /// Canonical one-line form used by the canonical-accuracy checker:
    /// quantifier indices renamed positionally, `>=` rows negated into `<=`
    /// form, everything moved to the left-hand side, and for equalities the
    /// sign fixed by the first canonical term.
    pub fn canonical_declaration(&self) -> String {
        let moved = self.lhs.sub(&self.rhs);
        let (expr, rel) = match self.relation {
            Relation::Ge => (moved.scale(&-Rat::one()), Relation::Le),
            rel => (moved, rel),
        };
        let expr = if rel == Relation::Eq {
            normalize_equality_sign(&expr)
        } else {
            expr
        };
        let mut quant: Vec<String> = Vec::new();
        let mut renamed = expr;
        for (pos, (idx, set)) in self.quantifiers.iter().enumerate() {
            let canon = format!("__q{pos}");
            renamed = rename_free_index(&renamed, idx, &canon);
            quant.push(format!("{canon}∈{set}"));
        }
        format!(
            "∀[{}] {} {} 0",
            quant.join(","),
            renamed.canonical_string(),
            rel.as_str()
        )
    }
}

/// Multiply an equality row by -1 when its lexically-first canonical term has
/// a negative leading rational, so `x - y = 0` and `y - x = 0` agree.
fn normalize_equality_sign(e: &LinearExpr) -> LinearExpr {
    use num_traits::Signed;
    let lead = e
        .terms
        .first()
        .and_then(|t| t.coeff.monos.first().map(|m| m.coef.clone()))
        .or_else(|| e.constant.monos.first().map(|m| m.coef.clone()));
    match lead {
        Some(c) if c.is_negative() => e.scale(&-Rat::one()),
        _ => e.clone(),
    }
}

fn rename_free_index(e: &LinearExpr, from: &str, to: &str) -> LinearExpr {
    // Quantifier indices appear as IndexExpr::Bound in expressions; reuse the
    // substitution machinery by a rename map over bound names.
    crate::expr::rename_bound_index(e, from, to)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectiveDecl {
    pub description: String,
    pub sense: Sense,
    pub expr: LinearExpr,
    pub code: Option<Value>,
}

impl ObjectiveDecl {
    pub fn canonical_declaration(&self) -> String {
        format!("{} {}", self.sense.as_str(), self.expr.canonical_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

impl Sense {
    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Min => "min",
            Sense::Max => "max",
        }
    }
}

/// A symbolic MILP formulation: declarations only, no instance data.
#[derive(Debug, Clone, PartialEq)]
pub struct Formulation {
    pub description: String,
    pub sets: IndexMap<String, SetDecl>,
    pub parameters: IndexMap<String, ParameterDecl>,
    pub variables: IndexMap<String, VariableDecl>,
    pub constraints: Vec<ConstraintDecl>,
    pub objective: ObjectiveDecl,
}

impl Formulation {
    pub fn namespace(&self) -> Namespace {
        Namespace {
            variables: self.variables.keys().cloned().collect(),
            parameters: self.parameters.keys().cloned().collect(),
        }
    }

    /// Canonical declaration multiset: one string per constraint plus one for
    /// the objective.
    pub fn canonical_declarations(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .constraints
            .iter()
            .map(|c| c.canonical_declaration())
            .collect();
        out.push(self.objective.canonical_declaration());
        out
    }

    /// Structural validation: unique names, resolvable shapes, quantifier
    /// hygiene, linearity (already enforced by the expression parser) and
    /// bound sanity.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = std::collections::HashSet::new();
        for name in self
            .sets
            .keys()
            .chain(self.parameters.keys())
            .chain(self.variables.keys())
        {
            if name.starts_with("__") {
                return Err(ModelError::Invalid(format!(
                    "identifier '{name}' uses the reserved '__' prefix"
                )));
            }
            if !seen.insert(name.clone()) {
                return Err(ModelError::DuplicateName(name.clone()));
            }
        }
        for (pname, p) in &self.parameters {
            for s in &p.shape {
                if !self.sets.contains_key(s) {
                    return Err(ModelError::UnresolvedIdentifier {
                        name: s.clone(),
                        context: format!("shape of parameter '{pname}'"),
                    });
                }
            }
        }
        for (vname, v) in &self.variables {
            for s in &v.shape {
                if !self.sets.contains_key(s) {
                    return Err(ModelError::UnresolvedIdentifier {
                        name: s.clone(),
                        context: format!("shape of variable '{vname}'"),
                    });
                }
            }
            if v.var_type == VarType::Binary {
                if v.lower != Some(Rat::from_integer(0.into()))
                    || v.upper != Some(Rat::from_integer(1.into()))
                {
                    return Err(ModelError::Invalid(format!(
                        "binary variable '{vname}' must have bounds [0, 1]"
                    )));
                }
            }
            if let (Some(l), Some(u)) = (&v.lower, &v.upper) {
                if l > u {
                    return Err(ModelError::Invalid(format!(
                        "variable '{vname}' has lower bound above upper bound"
                    )));
                }
            }
        }
        for (ci, c) in self.constraints.iter().enumerate() {
            let mut qnames = std::collections::HashSet::new();
            for (idx, set) in &c.quantifiers {
                if !qnames.insert(idx.clone()) {
                    return Err(ModelError::Invalid(format!(
                        "constraint {ci}: duplicate quantifier index '{idx}'"
                    )));
                }
                if self.parameters.contains_key(idx)
                    || self.variables.contains_key(idx)
                    || self.sets.contains_key(idx)
                {
                    return Err(ModelError::Invalid(format!(
                        "constraint {ci}: quantifier index '{idx}' shadows a declaration"
                    )));
                }
                if !self.sets.contains_key(set) {
                    return Err(ModelError::UnresolvedIdentifier {
                        name: set.clone(),
                        context: format!("quantifier of constraint {ci}"),
                    });
                }
            }
            let bound: Vec<String> = c.quantifiers.iter().map(|(i, _)| i.clone()).collect();
            for side in [&c.lhs, &c.rhs] {
                self.check_expr(side, &bound, &format!("constraint {ci}"))?;
            }
        }
        self.check_expr(&self.objective.expr, &[], "objective")?;
        Ok(())
    }

    fn check_expr(
        &self,
        e: &LinearExpr,
        bound: &[String],
        context: &str,
    ) -> Result<(), ModelError> {
        use crate::expr::IndexExpr;
        fn walk_idx(
            f: &Formulation,
            ix: &IndexExpr,
            bound: &[String],
            context: &str,
        ) -> Result<(), ModelError> {
            match ix {
                IndexExpr::Bound(n) => {
                    if !bound.iter().any(|b| b == n) {
                        return Err(ModelError::UnresolvedIdentifier {
                            name: n.clone(),
                            context: context.to_string(),
                        });
                    }
                    Ok(())
                }
                IndexExpr::Label(_) => Ok(()),
                IndexExpr::Param(p) => {
                    if !f.parameters.contains_key(&p.name) {
                        return Err(ModelError::UnresolvedIdentifier {
                            name: p.name.clone(),
                            context: context.to_string(),
                        });
                    }
                    for i in &p.indices {
                        walk_idx(f, i, bound, context)?;
                    }
                    Ok(())
                }
            }
        }
        for t in &e.terms {
            if !self.variables.contains_key(&t.var.name) {
                return Err(ModelError::UnresolvedIdentifier {
                    name: t.var.name.clone(),
                    context: context.to_string(),
                });
            }
            let shape_len = self.variables[&t.var.name].shape.len();
            if t.var.indices.len() != shape_len {
                return Err(ModelError::Invalid(format!(
                    "{context}: variable '{}' expects {shape_len} indices, found {}",
                    t.var.name,
                    t.var.indices.len()
                )));
            }
            for ix in &t.var.indices {
                walk_idx(self, ix, bound, context)?;
            }
            for m in &t.coeff.monos {
                for r in &m.refs {
                    if !self.parameters.contains_key(&r.name) {
                        return Err(ModelError::UnresolvedIdentifier {
                            name: r.name.clone(),
                            context: context.to_string(),
                        });
                    }
                    if r.indices.len() != self.parameters[&r.name].shape.len() {
                        return Err(ModelError::Invalid(format!(
                            "{context}: parameter '{}' expects {} indices, found {}",
                            r.name,
                            self.parameters[&r.name].shape.len(),
                            r.indices.len()
                        )));
                    }
                    for i in &r.indices {
                        walk_idx(self, i, bound, context)?;
                    }
                }
            }
        }
        for m in &e.constant.monos {
            for r in &m.refs {
                if !self.parameters.contains_key(&r.name) {
                    return Err(ModelError::UnresolvedIdentifier {
                        name: r.name.clone(),
                        context: context.to_string(),
                    });
                }
                for i in &r.indices {
                    walk_idx(self, i, bound, context)?;
                }
            }
        }
        for s in &e.sums {
            if !self.sets.contains_key(&s.set) {
                return Err(ModelError::UnresolvedIdentifier {
                    name: s.set.clone(),
                    context: context.to_string(),
                });
            }
            let mut inner: Vec<String> = bound.to_vec();
            inner.push(s.index.clone());
            self.check_expr(&s.body, &inner, context)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON loading
// ---------------------------------------------------------------------------

/// Parse a formulation document.
pub fn load_formulation(text: &str) -> Result<Formulation, ModelError> {
    let value: Value = serde_json::from_str(text)?;
    formulation_from_value(&value)
}

pub fn formulation_from_value(value: &Value) -> Result<Formulation, ModelError> {
    let obj = value
        .as_object()
        .ok_or_else(|| schema_err("$", "expected a JSON object"))?;

    let description = obj
        .get("description")
        .or_else(|| obj.get("parametrized_description"))
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();

    let mut sets = IndexMap::new();
    if let Some(v) = obj.get("sets") {
        let m = v
            .as_object()
            .ok_or_else(|| schema_err("$.sets", "expected an object"))?;
        for (name, decl) in m {
            let d = decl
                .as_object()
                .ok_or_else(|| schema_err(&format!("$.sets.{name}"), "expected an object"))?;
            sets.insert(
                name.clone(),
                SetDecl {
                    description: str_field(d, "description").unwrap_or_default(),
                },
            );
        }
    }

    let mut parameters = IndexMap::new();
    if let Some(v) = obj.get("parameters") {
        let m = v
            .as_object()
            .ok_or_else(|| schema_err("$.parameters", "expected an object"))?;
        for (name, decl) in m {
            let path = format!("$.parameters.{name}");
            let d = decl
                .as_object()
                .ok_or_else(|| schema_err(&path, "expected an object"))?;
            parameters.insert(
                name.clone(),
                ParameterDecl {
                    description: str_field(d, "description").unwrap_or_default(),
                    shape: shape_field(d, &path)?,
                },
            );
        }
    }

    let mut variables = IndexMap::new();
    {
        let v = obj
            .get("variables")
            .ok_or_else(|| schema_err("$", "missing 'variables'"))?;
        let m = v
            .as_object()
            .ok_or_else(|| schema_err("$.variables", "expected an object"))?;
        for (name, decl) in m {
            let path = format!("$.variables.{name}");
            let d = decl
                .as_object()
                .ok_or_else(|| schema_err(&path, "expected an object"))?;
            let var_type = match str_field(d, "type").as_deref() {
                Some("continuous") | None => VarType::Continuous,
                Some("integer") => VarType::Integer,
                Some("binary") => VarType::Binary,
                Some(other) => {
                    return Err(schema_err(&path, format!("unknown variable type '{other}'")))
                }
            };
            let mut lower = bound_field(d, "lower", &path)?;
            let mut upper = bound_field(d, "upper", &path)?;
            match var_type {
                VarType::Binary => {
                    lower = Bound::Finite(Rat::from_integer(0.into()));
                    upper = Bound::Finite(Rat::from_integer(1.into()));
                }
                _ => {
                    // Default box: [0, +inf) when omitted.
                    if matches!(lower, Bound::Omitted) {
                        lower = Bound::Finite(Rat::from_integer(0.into()));
                    }
                }
            }
            variables.insert(
                name.clone(),
                VariableDecl {
                    description: str_field(d, "description").unwrap_or_default(),
                    var_type,
                    shape: shape_field(d, &path)?,
                    lower: lower.into_option(),
                    upper: upper.into_option(),
                },
            );
        }
    }

    let ns = Namespace {
        variables: variables.keys().cloned().collect(),
        parameters: parameters.keys().cloned().collect(),
    };

    let mut constraints = Vec::new();
    if let Some(v) = obj.get("constraints") {
        let arr = v
            .as_array()
            .ok_or_else(|| schema_err("$.constraints", "expected an array"))?;
        for (ci, cv) in arr.iter().enumerate() {
            let path = format!("$.constraints[{ci}]");
            let d = cv
                .as_object()
                .ok_or_else(|| schema_err(&path, "expected an object"))?;
            let mut quantifiers = Vec::new();
            if let Some(fa) = d.get("forall") {
                let pairs = fa
                    .as_array()
                    .ok_or_else(|| schema_err(&path, "'forall' must be an array of pairs"))?;
                for pair in pairs {
                    let p = pair
                        .as_array()
                        .filter(|p| p.len() == 2)
                        .ok_or_else(|| schema_err(&path, "'forall' entries are [index, set]"))?;
                    let idx = p[0]
                        .as_str()
                        .ok_or_else(|| schema_err(&path, "quantifier index must be a string"))?;
                    let set = p[1]
                        .as_str()
                        .ok_or_else(|| schema_err(&path, "quantifier set must be a string"))?;
                    quantifiers.push((idx.to_string(), set.to_string()));
                }
            }
            let text = str_field(d, "formulation")
                .ok_or_else(|| schema_err(&path, "missing 'formulation'"))?;
            let (lhs, relation, rhs) =
                parse_relation(&text, Some(&ns)).map_err(|source| ModelError::Expr {
                    context: path.clone(),
                    source,
                })?;
            constraints.push(ConstraintDecl {
                description: str_field(d, "description").unwrap_or_default(),
                quantifiers,
                lhs,
                relation,
                rhs,
                code: d.get("code").cloned(),
            });
        }
    }

    let objective = {
        let v = obj
            .get("objective")
            .ok_or_else(|| schema_err("$", "missing 'objective'"))?;
        let d = v
            .as_object()
            .ok_or_else(|| schema_err("$.objective", "expected an object"))?;
        let raw = str_field(d, "formulation")
            .ok_or_else(|| schema_err("$.objective", "missing 'formulation'"))?;
        let (text, prefix_sense) = strip_sense_prefix(&raw);
        let sense = match (str_field(d, "sense").as_deref(), prefix_sense) {
            (Some("min"), _) => Sense::Min,
            (Some("max"), _) => Sense::Max,
            (Some(other), _) => {
                return Err(schema_err("$.objective", format!("unknown sense '{other}'")))
            }
            (None, Some(s)) => s,
            (None, None) => return Err(schema_err("$.objective", "missing 'sense'")),
        };
        if let (Some(declared), Some(prefixed)) = (str_field(d, "sense"), prefix_sense) {
            let declared = if declared == "min" { Sense::Min } else { Sense::Max };
            if declared != prefixed {
                return Err(schema_err(
                    "$.objective",
                    "sense field contradicts Min/Max prefix in formulation",
                ));
            }
        }
        let expr = parse_linear_expr(&text, Some(&ns)).map_err(|source| ModelError::Expr {
            context: "$.objective".to_string(),
            source,
        })?;
        ObjectiveDecl {
            description: str_field(d, "description").unwrap_or_default(),
            sense,
            expr,
            code: d.get("code").cloned(),
        }
    };

    let f = Formulation {
        description,
        sets,
        parameters,
        variables,
        constraints,
        objective,
    };
    f.validate()?;
    Ok(f)
}

fn strip_sense_prefix(text: &str) -> (String, Option<Sense>) {
    let trimmed = text.trim_start();
    for (prefix, sense) in [("Min", Sense::Min), ("Max", Sense::Max)] {
        if let Some(rest) = trimmed.strip_prefix(prefix) {
            let rest = rest.trim_start();
            if let Some(r) = rest.strip_prefix('\\') {
                return (r.trim_start().to_string(), Some(sense));
            }
        }
    }
    (text.to_string(), None)
}

fn str_field(d: &Map<String, Value>, key: &str) -> Option<String> {
    d.get(key).and_then(Value::as_str).map(str::to_string)
}

fn shape_field(d: &Map<String, Value>, path: &str) -> Result<Vec<String>, ModelError> {
    match d.get("shape") {
        None => Ok(Vec::new()),
        Some(v) => {
            let arr = v
                .as_array()
                .ok_or_else(|| schema_err(path, "'shape' must be an array of set names"))?;
            arr.iter()
                .map(|s| {
                    s.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| schema_err(path, "'shape' entries must be strings"))
                })
                .collect()
        }
    }
}

enum Bound {
    Omitted,
    Unbounded,
    Finite(Rat),
}

impl Bound {
    fn into_option(self) -> Option<Rat> {
        match self {
            Bound::Finite(r) => Some(r),
            _ => None,
        }
    }
}

fn bound_field(d: &Map<String, Value>, key: &str, path: &str) -> Result<Bound, ModelError> {
    match d.get(key) {
        None => Ok(Bound::Omitted),
        Some(Value::Null) => Ok(Bound::Unbounded),
        Some(v) => Ok(Bound::Finite(number_to_rat(v).ok_or_else(|| {
            schema_err(path, format!("'{key}' must be a number or null"))
        })?)),
    }
}

/// Exact decimal read of a JSON number (requires serde_json's
/// arbitrary-precision mode, enabled in this crate).
pub fn number_to_rat(v: &Value) -> Option<Rat> {
    match v {
        Value::Number(n) => parse_decimal(&n.to_string()),
        _ => None,
    }
}

/// Emit a rational as a JSON number when it has a finite decimal form,
/// otherwise as an exact "n/d" string.
pub fn rat_to_value(r: &Rat) -> Value {
    match to_decimal_string(r) {
        Some(dec) => serde_json::from_str::<serde_json::Number>(&dec)
            .map(Value::Number)
            .unwrap_or_else(|_| Value::String(rat_display(r))),
        None => Value::String(rat_display(r)),
    }
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

pub fn formulation_to_value(f: &Formulation) -> Value {
    let mut root = Map::new();
    root.insert("description".into(), Value::String(f.description.clone()));

    let mut sets = Map::new();
    for (name, s) in &f.sets {
        let mut d = Map::new();
        d.insert("description".into(), Value::String(s.description.clone()));
        sets.insert(name.clone(), Value::Object(d));
    }
    root.insert("sets".into(), Value::Object(sets));

    let mut params = Map::new();
    for (name, p) in &f.parameters {
        let mut d = Map::new();
        d.insert("description".into(), Value::String(p.description.clone()));
        d.insert(
            "shape".into(),
            Value::Array(p.shape.iter().map(|s| Value::String(s.clone())).collect()),
        );
        params.insert(name.clone(), Value::Object(d));
    }
    root.insert("parameters".into(), Value::Object(params));

    let mut vars = Map::new();
    for (name, v) in &f.variables {
        let mut d = Map::new();
        d.insert("description".into(), Value::String(v.description.clone()));
        d.insert("type".into(), Value::String(v.var_type.as_str().into()));
        d.insert(
            "shape".into(),
            Value::Array(v.shape.iter().map(|s| Value::String(s.clone())).collect()),
        );
        match &v.lower {
            Some(r) => {
                d.insert("lower".into(), rat_to_value(r));
            }
            None => {
                d.insert("lower".into(), Value::Null);
            }
        }
        match &v.upper {
            Some(r) => {
                d.insert("upper".into(), rat_to_value(r));
            }
            None => {}
        }
        vars.insert(name.clone(), Value::Object(d));
    }
    root.insert("variables".into(), Value::Object(vars));

    let constraints: Vec<Value> = f
        .constraints
        .iter()
        .map(|c| {
            let mut d = Map::new();
            d.insert("description".into(), Value::String(c.description.clone()));
            if !c.quantifiers.is_empty() {
                d.insert(
                    "forall".into(),
                    Value::Array(
                        c.quantifiers
                            .iter()
                            .map(|(i, s)| {
                                Value::Array(vec![
                                    Value::String(i.clone()),
                                    Value::String(s.clone()),
                                ])
                            })
                            .collect(),
                    ),
                );
            }
            d.insert(
                "formulation".into(),
                Value::String(format!(
                    "{} {} {}",
                    c.lhs.render(),
                    c.relation.as_str(),
                    c.rhs.render()
                )),
            );
            if let Some(code) = &c.code {
                d.insert("code".into(), code.clone());
            }
            Value::Object(d)
        })
        .collect();
    root.insert("constraints".into(), Value::Array(constraints));

    let mut obj = Map::new();
    obj.insert(
        "description".into(),
        Value::String(f.objective.description.clone()),
    );
    obj.insert(
        "sense".into(),
        Value::String(f.objective.sense.as_str().into()),
    );
    obj.insert(
        "formulation".into(),
        Value::String(f.objective.expr.render()),
    );
    if let Some(code) = &f.objective.code {
        obj.insert("code".into(), code.clone());
    }
    root.insert("objective".into(), Value::Object(obj));

    Value::Object(root)
}

pub fn serialize_formulation(f: &Formulation) -> String {
    serde_json::to_string_pretty(&formulation_to_value(f)).expect("formulation serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat_int;

    fn tiny() -> &'static str {
        r#"{
          "description": "toy",
          "sets": {"V": {"description": "nodes"}},
          "parameters": {"Cap": {"description": "capacity", "shape": []}},
          "variables": {
            "x": {"description": "flow", "type": "continuous", "shape": ["V"]},
            "y": {"description": "on", "type": "binary", "shape": []}
          },
          "constraints": [
            {"description": "cap", "forall": [["i", "V"]], "formulation": "x[i] <= Cap"},
            {"description": "link", "formulation": "sum(i in V, x[i]) - 3 * y <= 0"}
          ],
          "objective": {"description": "total", "sense": "max", "formulation": "sum(i in V, x[i])"}
        }"#
    }

    #[test]
    fn loads_and_validates() {
        let f = load_formulation(tiny()).unwrap();
        assert_eq!(f.variables.len(), 2);
        assert_eq!(f.constraints.len(), 2);
        assert_eq!(f.objective.sense, Sense::Max);
        // defaults: continuous lower 0, upper open; binary [0,1]
        assert_eq!(f.variables["x"].lower, Some(rat_int(0)));
        assert_eq!(f.variables["x"].upper, None);
        assert_eq!(f.variables["y"].upper, Some(rat_int(1)));
    }

    #[test]
    fn round_trip_is_identity() {
        let f = load_formulation(tiny()).unwrap();
        let text = serialize_formulation(&f);
        let g = load_formulation(&text).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn rejects_namespace_collision() {
        let bad = r#"{
          "parameters": {"x": {"description": "p", "shape": []}},
          "variables": {"x": {"description": "v", "type": "continuous", "shape": []}},
          "constraints": [],
          "objective": {"description": "", "sense": "min", "formulation": "x"}
        }"#;
        let err = load_formulation(bad).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateName(_)), "{err}");
    }

    #[test]
    fn rejects_unresolved_identifier() {
        let bad = r#"{
          "variables": {"x": {"description": "v", "type": "continuous", "shape": []}},
          "constraints": [{"description": "", "formulation": "x + z <= 1"}],
          "objective": {"description": "", "sense": "min", "formulation": "x"}
        }"#;
        let err = load_formulation(bad).unwrap_err();
        assert!(err.to_string().contains('z'), "{err}");
    }

    #[test]
    fn empty_constraints_is_valid() {
        let doc = r#"{
          "variables": {"x": {"description": "v", "type": "continuous", "shape": []}},
          "constraints": [],
          "objective": {"description": "", "sense": "min", "formulation": "x"}
        }"#;
        let f = load_formulation(doc).unwrap();
        assert!(f.constraints.is_empty());
    }

    #[test]
    fn objective_sense_from_prefix() {
        let doc = r#"{
          "variables": {"x": {"description": "v", "type": "continuous", "shape": []}},
          "constraints": [],
          "objective": {"description": "", "formulation": "Min \\ x"}
        }"#;
        let f = load_formulation(doc).unwrap();
        assert_eq!(f.objective.sense, Sense::Min);
    }

    #[test]
    fn canonical_declaration_ignores_orientation_and_quantifier_names() {
        let a = load_formulation(
            r#"{
          "sets": {"V": {"description": ""}},
          "variables": {"x": {"description": "", "type": "continuous", "shape": ["V"]}},
          "constraints": [{"description": "", "forall": [["i","V"]], "formulation": "x[i] <= 4"}],
          "objective": {"description": "", "sense": "min", "formulation": "sum(i in V, x[i])"}
        }"#,
        )
        .unwrap();
        let b = load_formulation(
            r#"{
          "sets": {"V": {"description": ""}},
          "variables": {"x": {"description": "", "type": "continuous", "shape": ["V"]}},
          "constraints": [{"description": "", "forall": [["node","V"]], "formulation": "4 >= x[node]"}],
          "objective": {"description": "", "sense": "min", "formulation": "sum(q in V, x[q])"}
        }"#,
        )
        .unwrap();
        assert_eq!(a.canonical_declarations(), b.canonical_declarations());
    }
}
