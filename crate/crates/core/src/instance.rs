//! Binding concrete data to a formulation and flattening it into matrix form.
//!
//! Instance documents look like:
//!
//! ```json
//! { "sets": {"V": ["1", "2", "3"]},
//!   "parameters": {"Cap": 7, "Weight": [[1, 2], [3, 4]]} }
//! ```
//!
//! Set members are labels; numeric labels may be written as JSON numbers.
//! Extra entries beyond what a formulation declares are ignored, which lets a
//! single instance file serve a pair of formulations with disjoint renamed
//! namespaces.

use crate::expr::{IndexExpr, LinearExpr, ParamRef, Relation};
use crate::model::{number_to_rat, Formulation, Sense};
use crate::scalar::{rat_to_f64, LpFloat, Rat, Scalar};
use indexmap::IndexMap;
use num_traits::Zero;
use serde_json::Value;
use std::collections::HashMap;

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("missing {kind} '{name}' in instance data")]
    Missing { kind: &'static str, name: String },
    #[error("parameter '{name}': shape mismatch, expected {expected} values, found {found}")]
    ShapeMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("index value '{label}' is not a member of set '{set}'")]
    IndexOutOfSet { label: String, set: String },
    #[error("index of '{context}' did not evaluate to an integer")]
    NonIntegerIndex { context: String },
    #[error("unresolved identifier '{0}' during evaluation")]
    Unresolved(String),
    #[error("invalid instance JSON: {0}")]
    Schema(String),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Concrete data: set contents and parameter values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InstanceData {
    pub sets: IndexMap<String, Vec<String>>,
    /// Row-major flattened values per parameter.
    pub parameters: IndexMap<String, ParamValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamValue {
    pub values: Vec<Rat>,
}

impl InstanceData {
    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let v: Value = serde_json::from_str(text)?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, InstanceError> {
        let obj = v
            .as_object()
            .ok_or_else(|| InstanceError::Schema("expected a JSON object".into()))?;
        let mut sets = IndexMap::new();
        if let Some(sv) = obj.get("sets") {
            let m = sv
                .as_object()
                .ok_or_else(|| InstanceError::Schema("'sets' must be an object".into()))?;
            for (name, members) in m {
                let arr = members.as_array().ok_or_else(|| {
                    InstanceError::Schema(format!("set '{name}' must be an array"))
                })?;
                let labels = arr
                    .iter()
                    .map(|x| match x {
                        Value::String(s) => Ok(s.clone()),
                        Value::Number(n) => Ok(n.to_string()),
                        _ => Err(InstanceError::Schema(format!(
                            "set '{name}' members must be strings or numbers"
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                sets.insert(name.clone(), labels);
            }
        }
        let mut parameters = IndexMap::new();
        if let Some(pv) = obj.get("parameters") {
            let m = pv
                .as_object()
                .ok_or_else(|| InstanceError::Schema("'parameters' must be an object".into()))?;
            for (name, val) in m {
                let mut values = Vec::new();
                flatten_param(val, name, &mut values)?;
                parameters.insert(name.clone(), ParamValue { values });
            }
        }
        Ok(InstanceData { sets, parameters })
    }

    pub fn to_value(&self) -> Value {
        let mut root = serde_json::Map::new();
        let mut sets = serde_json::Map::new();
        for (name, members) in &self.sets {
            sets.insert(
                name.clone(),
                Value::Array(members.iter().map(|m| Value::String(m.clone())).collect()),
            );
        }
        root.insert("sets".into(), Value::Object(sets));
        let mut params = serde_json::Map::new();
        for (name, pv) in &self.parameters {
            // Flat arrays round-trip; scalar stays scalar. Multi-dimensional
            // parameters are emitted flat, which instantiation accepts.
            let val = if pv.values.len() == 1 {
                crate::model::rat_to_value(&pv.values[0])
            } else {
                Value::Array(pv.values.iter().map(crate::model::rat_to_value).collect())
            };
            params.insert(name.clone(), val);
        }
        root.insert("parameters".into(), Value::Object(params));
        Value::Object(root)
    }
}

fn flatten_param(v: &Value, name: &str, out: &mut Vec<Rat>) -> Result<(), InstanceError> {
    match v {
        Value::Array(items) => {
            for item in items {
                flatten_param(item, name, out)?;
            }
            Ok(())
        }
        other => {
            let r = number_to_rat(other).ok_or_else(|| {
                InstanceError::Schema(format!("parameter '{name}' must contain numbers"))
            })?;
            out.push(r);
            Ok(())
        }
    }
}

/// Identifies the symbolic constraint and quantifier binding that produced a
/// flattened row.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct RowOrigin {
    pub constraint: usize,
    pub description: String,
    pub binding: Vec<(String, String)>,
}

impl std::fmt::Display for RowOrigin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "constraint #{}", self.constraint)?;
        if !self.binding.is_empty() {
            let parts: Vec<String> = self
                .binding
                .iter()
                .map(|(i, l)| format!("{i}={l}"))
                .collect();
            write!(f, "[{}]", parts.join(","))?;
        }
        Ok(())
    }
}

/// One flattened row: sparse coefficients over columns, a relation and a
/// right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct Row<S: Scalar> {
    pub coeffs: Vec<(usize, S)>,
    pub relation: Relation,
    pub rhs: S,
    pub origin: RowOrigin,
}

/// A column of the flattened model: variable name plus the index tuple both
/// as labels and as positions within the shape sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnId {
    pub var: String,
    pub labels: Vec<String>,
    pub positions: Vec<usize>,
}

impl std::fmt::Display for ColumnId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.labels.is_empty() {
            f.write_str(&self.var)
        } else {
            write!(f, "{}[{}]", self.var, self.labels.join(","))
        }
    }
}

/// Fully instantiated MILP over scalar type `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteModel<S: Scalar> {
    pub columns: Vec<ColumnId>,
    pub objective: Vec<S>,
    pub sense: Sense,
    pub rows: Vec<Row<S>>,
    pub lower: Vec<Option<S>>,
    pub upper: Vec<Option<S>>,
    pub integral: Vec<bool>,
}

impl<S: Scalar> ConcreteModel<S> {
    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self) -> HashMap<(&str, &[usize]), usize> {
        self.columns
            .iter()
            .enumerate()
            .map(|(i, c)| ((c.var.as_str(), c.positions.as_slice()), i))
            .collect()
    }
}

impl ConcreteModel<Rat> {
    /// Float view of the exact model for the solver and the graph encoding.
    pub fn to_float<F: LpFloat>(&self) -> ConcreteModel<F> {
        ConcreteModel {
            columns: self.columns.clone(),
            objective: self.objective.iter().map(F::from_rat).collect(),
            sense: self.sense,
            rows: self
                .rows
                .iter()
                .map(|r| Row {
                    coeffs: r.coeffs.iter().map(|(j, c)| (*j, F::from_rat(c))).collect(),
                    relation: r.relation,
                    rhs: F::from_rat(&r.rhs),
                    origin: r.origin.clone(),
                })
                .collect(),
            lower: self
                .lower
                .iter()
                .map(|b| b.as_ref().map(F::from_rat))
                .collect(),
            upper: self
                .upper
                .iter()
                .map(|b| b.as_ref().map(F::from_rat))
                .collect(),
            integral: self.integral.clone(),
        }
    }
}

/// Values aligned with a model's column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<S> {
    pub values: Vec<S>,
}

impl<S: Clone> Assignment<S> {
    pub fn new(values: Vec<S>) -> Self {
        Assignment { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Assignment<Rat> {
    pub fn to_f64(&self) -> Assignment<f64> {
        Assignment {
            values: self.values.iter().map(rat_to_f64).collect(),
        }
    }
}

impl Assignment<f64> {
    /// Exact rational view of solver output.
    pub fn to_exact(&self) -> Assignment<Rat> {
        Assignment {
            values: self
                .values
                .iter()
                .map(|v| crate::scalar::rat_from_f64(*v).expect("finite assignment value"))
                .collect(),
        }
    }
}

struct Binder<'a> {
    formulation: &'a Formulation,
    data: &'a InstanceData,
    /// index name -> (set name, position, label)
    binding: HashMap<String, (String, usize, String)>,
}

impl<'a> Binder<'a> {
    fn set_members(&self, set: &str) -> Result<&'a [String], InstanceError> {
        self.data
            .sets
            .get(set)
            .map(|v| v.as_slice())
            .ok_or_else(|| InstanceError::Missing {
                kind: "set",
                name: set.to_string(),
            })
    }

    fn param_value(&self, p: &ParamRef) -> Result<Rat, InstanceError> {
        let decl = self
            .formulation
            .parameters
            .get(&p.name)
            .ok_or_else(|| InstanceError::Unresolved(p.name.clone()))?;
        let stored = self
            .data
            .parameters
            .get(&p.name)
            .ok_or_else(|| InstanceError::Missing {
                kind: "parameter",
                name: p.name.clone(),
            })?;
        let mut extent = 1usize;
        let mut dims = Vec::with_capacity(decl.shape.len());
        for s in &decl.shape {
            let n = self.set_members(s)?.len();
            dims.push(n);
            extent *= n;
        }
        if stored.values.len() != extent {
            return Err(InstanceError::ShapeMismatch {
                name: p.name.clone(),
                expected: extent,
                found: stored.values.len(),
            });
        }
        let mut flat = 0usize;
        for (k, ix) in p.indices.iter().enumerate() {
            let set = &decl.shape[k];
            let pos = self.resolve_index(ix, set)?;
            flat = flat * dims[k] + pos;
        }
        Ok(stored.values[flat].clone())
    }

    /// Resolve an index expression to a position within `set`.
    fn resolve_index(&self, ix: &IndexExpr, set: &str) -> Result<usize, InstanceError> {
        let members = self.set_members(set)?;
        match ix {
            IndexExpr::Bound(name) => {
                let (bset, pos, label) = self.binding.get(name).ok_or_else(|| {
                    InstanceError::Unresolved(name.clone())
                })?;
                if bset == set {
                    Ok(*pos)
                } else {
                    // An index bound over one set may address another set by
                    // label (shared member labels), mirroring row/column sets
                    // of equal content.
                    members
                        .iter()
                        .position(|m| m == label)
                        .ok_or_else(|| InstanceError::IndexOutOfSet {
                            label: label.clone(),
                            set: set.to_string(),
                        })
                }
            }
            IndexExpr::Label(l) => members
                .iter()
                .position(|m| m == l)
                .ok_or_else(|| InstanceError::IndexOutOfSet {
                    label: l.clone(),
                    set: set.to_string(),
                }),
            IndexExpr::Param(p) => {
                let v = self.param_value(p)?;
                if !v.is_integer() {
                    return Err(InstanceError::NonIntegerIndex {
                        context: p.name.clone(),
                    });
                }
                let label = v.to_integer().to_string();
                members
                    .iter()
                    .position(|m| *m == label)
                    .ok_or_else(|| InstanceError::IndexOutOfSet {
                        label,
                        set: set.to_string(),
                    })
            }
        }
    }

    fn poly_value(&self, poly: &crate::expr::CoeffPoly) -> Result<Rat, InstanceError> {
        let mut total = Rat::zero();
        for m in &poly.monos {
            let mut v = m.coef.clone();
            for r in &m.refs {
                v *= self.param_value(r)?;
            }
            total += v;
        }
        Ok(total)
    }

    /// Walk an expression, emitting exact (column, coefficient) pairs through
    /// `sink` and returning the accumulated constant part.
    fn flatten(
        &mut self,
        e: &LinearExpr,
        columns: &HashMap<(String, Vec<usize>), usize>,
        sink: &mut dyn FnMut(usize, Rat),
    ) -> Result<Rat, InstanceError> {
        let mut constant = self.poly_value(&e.constant)?;
        for t in &e.terms {
            let coeff = self.poly_value(&t.coeff)?;
            if coeff.is_zero() {
                continue;
            }
            let decl = self
                .formulation
                .variables
                .get(&t.var.name)
                .ok_or_else(|| InstanceError::Unresolved(t.var.name.clone()))?;
            let mut pos = Vec::with_capacity(t.var.indices.len());
            for (k, ix) in t.var.indices.iter().enumerate() {
                pos.push(self.resolve_index(ix, &decl.shape[k])?);
            }
            let col = *columns
                .get(&(t.var.name.clone(), pos))
                .ok_or_else(|| InstanceError::Unresolved(t.var.name.clone()))?;
            sink(col, coeff);
        }
        for s in &e.sums {
            let members: Vec<(usize, String)> = self
                .set_members(&s.set)?
                .iter()
                .cloned()
                .enumerate()
                .collect();
            for (pos, label) in members {
                let shadow = self
                    .binding
                    .insert(s.index.clone(), (s.set.clone(), pos, label));
                let c = self.flatten(&s.body, columns, sink)?;
                constant += c;
                match shadow {
                    Some(prev) => {
                        self.binding.insert(s.index.clone(), prev);
                    }
                    None => {
                        self.binding.remove(&s.index);
                    }
                }
            }
        }
        Ok(constant)
    }
}

/// Visit every index tuple of the given extents in row-major order. Zero
/// extents yield no tuples; an empty dimension list yields one empty tuple.
fn for_each_tuple(dims: &[usize], mut visit: impl FnMut(&[usize])) {
    if dims.iter().any(|&n| n == 0) {
        return;
    }
    let mut tuple = vec![0usize; dims.len()];
    loop {
        visit(&tuple);
        let mut k = dims.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            tuple[k] += 1;
            if tuple[k] < dims[k] {
                break;
            }
            tuple[k] = 0;
        }
    }
}

fn column_order(f: &Formulation, d: &InstanceData) -> Result<Vec<ColumnId>, InstanceError> {
    let mut columns = Vec::new();
    for (name, decl) in &f.variables {
        let mut members = Vec::with_capacity(decl.shape.len());
        for s in &decl.shape {
            let m = d.sets.get(s).ok_or_else(|| InstanceError::Missing {
                kind: "set",
                name: s.clone(),
            })?;
            members.push(m.as_slice());
        }
        let dims: Vec<usize> = members.iter().map(|m| m.len()).collect();
        for_each_tuple(&dims, |tuple| {
            columns.push(ColumnId {
                var: name.clone(),
                labels: tuple
                    .iter()
                    .zip(&members)
                    .map(|(p, m)| m[*p].clone())
                    .collect(),
                positions: tuple.to_vec(),
            });
        });
    }
    Ok(columns)
}

/// Expand a formulation over instance data into Ax∘b matrix form.
///
/// Column order is declaration order then row-major over index tuples; row
/// order is constraint declaration order then row-major over quantifier
/// bindings. Empty quantifier sets contribute zero rows. All arithmetic is
/// exact.
pub fn instantiate(f: &Formulation, d: &InstanceData) -> Result<ConcreteModel<Rat>, InstanceError> {
    // Every declared parameter and set must be present (extras are ignored).
    for name in f.sets.keys() {
        if !d.sets.contains_key(name) {
            return Err(InstanceError::Missing {
                kind: "set",
                name: name.clone(),
            });
        }
    }
    for name in f.parameters.keys() {
        if !d.parameters.contains_key(name) {
            return Err(InstanceError::Missing {
                kind: "parameter",
                name: name.clone(),
            });
        }
    }

    let columns = column_order(f, d)?;
    let col_lookup: HashMap<(String, Vec<usize>), usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| ((c.var.clone(), c.positions.clone()), i))
        .collect();

    let mut binder = Binder {
        formulation: f,
        data: d,
        binding: HashMap::new(),
    };

    // Validate parameter extents up front so shape errors surface even for
    // parameters never referenced by an expression.
    for (pname, pdecl) in &f.parameters {
        let stored = &d.parameters[pname];
        let mut extent = 1usize;
        for s in &pdecl.shape {
            extent *= binder.set_members(s)?.len();
        }
        if stored.values.len() != extent {
            return Err(InstanceError::ShapeMismatch {
                name: pname.clone(),
                expected: extent,
                found: stored.values.len(),
            });
        }
    }

    let mut objective = vec![Rat::zero(); columns.len()];
    binder.flatten(&f.objective.expr, &col_lookup, &mut |col, c| {
        objective[col] += c;
    })?;

    let mut rows = Vec::new();
    for (ci, c) in f.constraints.iter().enumerate() {
        let mut quant_dims: Vec<(String, Vec<String>)> = Vec::new();
        for (_, set) in &c.quantifiers {
            quant_dims.push((set.clone(), binder.set_members(set)?.to_vec()));
        }
        let dims: Vec<usize> = quant_dims.iter().map(|(_, m)| m.len()).collect();
        let mut tuples: Vec<Vec<usize>> = Vec::new();
        for_each_tuple(&dims, |t| tuples.push(t.to_vec()));
        for tuple in tuples {
            for (k, (idx, _)) in c.quantifiers.iter().enumerate() {
                let (set, members) = &quant_dims[k];
                binder.binding.insert(
                    idx.clone(),
                    (set.clone(), tuple[k], members[tuple[k]].clone()),
                );
            }
            let mut dense: HashMap<usize, Rat> = HashMap::new();
            let lhs_const = binder.flatten(&c.lhs, &col_lookup, &mut |col, v| {
                *dense.entry(col).or_insert_with(Rat::zero) += v;
            })?;
            let rhs_const = binder.flatten(&c.rhs, &col_lookup, &mut |col, v| {
                *dense.entry(col).or_insert_with(Rat::zero) -= v;
            })?;
            let mut coeffs: Vec<(usize, Rat)> =
                dense.into_iter().filter(|(_, v)| !v.is_zero()).collect();
            coeffs.sort_by_key(|(j, _)| *j);
            rows.push(Row {
                coeffs,
                relation: c.relation,
                rhs: rhs_const - lhs_const,
                origin: RowOrigin {
                    constraint: ci,
                    description: c.description.clone(),
                    binding: c
                        .quantifiers
                        .iter()
                        .enumerate()
                        .map(|(k, (idx, _))| (idx.clone(), quant_dims[k].1[tuple[k]].clone()))
                        .collect(),
                },
            });
            for (idx, _) in &c.quantifiers {
                binder.binding.remove(idx);
            }
        }
    }

    let mut lower = Vec::with_capacity(columns.len());
    let mut upper = Vec::with_capacity(columns.len());
    let mut integral = Vec::with_capacity(columns.len());
    for col in &columns {
        let decl = &f.variables[&col.var];
        lower.push(decl.lower.clone());
        upper.push(decl.upper.clone());
        integral.push(decl.var_type.is_integral());
    }

    Ok(ConcreteModel {
        columns,
        objective,
        sense: f.objective.sense,
        rows,
        lower,
        upper,
        integral,
    })
}

/// Exact value of an expression under instance data, an index binding and an
/// assignment of variable values.
pub fn evaluate(
    e: &LinearExpr,
    f: &Formulation,
    d: &InstanceData,
    binding: &[(String, String)],
    x: &Assignment<Rat>,
    model: &ConcreteModel<Rat>,
) -> Result<Rat, InstanceError> {
    let mut binder = Binder {
        formulation: f,
        data: d,
        binding: HashMap::new(),
    };
    for (idx, label) in binding {
        // find which set holds the label: search declared sets in order
        let mut located = None;
        for (sname, members) in &d.sets {
            if let Some(pos) = members.iter().position(|m| m == label) {
                located = Some((sname.clone(), pos, label.clone()));
                break;
            }
        }
        let entry = located.ok_or_else(|| InstanceError::IndexOutOfSet {
            label: label.clone(),
            set: "<any>".into(),
        })?;
        binder.binding.insert(idx.clone(), entry);
    }
    let col_lookup: HashMap<(String, Vec<usize>), usize> = model
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| ((c.var.clone(), c.positions.clone()), i))
        .collect();
    let mut total = Rat::zero();
    let constant = binder.flatten(e, &col_lookup, &mut |col, c| {
        total += c * x.values[col].clone();
    })?;
    Ok(total + constant)
}

/// Exact dot product of a flattened sparse row with an assignment.
pub fn row_value<S: Scalar>(row: &Row<S>, x: &[S]) -> S {
    let mut acc = S::zero();
    for (j, c) in &row.coeffs {
        acc = acc + c.clone() * x[*j].clone();
    }
    acc
}

/// Exact objective value c·x.
pub fn objective_value<S: Scalar>(m: &ConcreteModel<S>, x: &[S]) -> S {
    let mut acc = S::zero();
    for (c, v) in m.objective.iter().zip(x) {
        acc = acc + c.clone() * v.clone();
    }
    acc
}
