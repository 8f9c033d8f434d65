//! Data model for IFJ programs, delta modules and product lines.
//!
//! Delta modules are stored in their abstract form: a set of abstract delta
//! operations (ADOs), each a triple of operator, target [`Reference`] and
//! payload. A class-level `modifies C { ... }` block has no ADO of its own; its
//! attribute operations become ADOs on `C.a` references, and an `extending D`
//! clause becomes a `modifies` on the synthetic `C.extends` reference.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::formula::Formula;

pub type FeatureName = String;
pub type DeltaName = String;
pub type ClassName = String;
pub type AttrName = String;

/// Attribute token standing for a class's superclass clause.
pub const EXTENDS: &str = "extends";
pub const OBJECT: &str = "Object";

/// Separator used in names of auxiliary methods produced by `original` resolution.
pub const ORIGINAL_MARKER: &str = "$orig$";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("duplicate feature `{0}`")]
    DuplicateFeature(FeatureName),
    #[error("duplicate delta module `{0}`")]
    DuplicateDelta(DeltaName),
    #[error("duplicate class `{0}`")]
    DuplicateClass(ClassName),
    #[error("duplicate attribute `{attr}` in class `{class}`")]
    DuplicateAttribute { class: ClassName, attr: AttrName },
    #[error("delta module `{delta}` targets `{reference}` more than once")]
    DuplicateReference { delta: DeltaName, reference: Reference },
    #[error("unknown feature `{feature}` in {context}")]
    UnknownFeature { feature: FeatureName, context: String },
    #[error("application order mismatch: {0}")]
    OrderMismatch(String),
    #[error("cyclic extends relation through class `{0}`")]
    ExtendsCycle(ClassName),
    #[error("`original` used outside a method modification ({0})")]
    OriginalOutsideModifies(String),
    #[error("`original` cannot name a method")]
    OriginalMethodName,
    #[error("`this` used as a parameter name in `{0}`")]
    ThisParameter(String),
    #[error("malformed operation on `{reference}`: {reason}")]
    MalformedAdo { reference: Reference, reason: String },
    #[error("reference `{0}` is not declared by the operation")]
    AbsentReference(Reference),
    #[error("operation on `{0}` is not a method modification")]
    NotMethodModifies(Reference),
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

// ---------------------------------------------------------------------------
// IFJ programs

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Add,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Mul => "*",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Expr {
    /// A variable, including `this`.
    Var(String),
    Field(Box<Expr>, AttrName),
    Call(Box<Expr>, AttrName, Vec<Expr>),
    Original(Vec<Expr>),
    New(ClassName),
    Cast(ClassName, Box<Expr>),
    Assign(Box<Expr>, AttrName, Box<Expr>),
    Null,
    Int(i64),
    Str(String),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn contains_original(&self) -> bool {
        match self {
            Expr::Original(_) => true,
            Expr::Var(_) | Expr::New(_) | Expr::Null | Expr::Int(_) | Expr::Str(_) => false,
            Expr::Field(e, _) | Expr::Cast(_, e) => e.contains_original(),
            Expr::Call(e, _, args) => e.contains_original() || args.iter().any(Expr::contains_original),
            Expr::Assign(a, _, b) | Expr::Binary(_, a, b) => {
                a.contains_original() || b.contains_original()
            }
        }
    }

    /// Replaces every `original(args)` with `this.<method>(args)`.
    pub fn redirect_original(&self, method: &str) -> Expr {
        let go = |e: &Expr| Box::new(e.redirect_original(method));
        match self {
            Expr::Original(args) => Expr::Call(
                Box::new(Expr::Var("this".into())),
                method.to_string(),
                args.iter().map(|a| a.redirect_original(method)).collect(),
            ),
            Expr::Var(_) | Expr::New(_) | Expr::Null | Expr::Int(_) | Expr::Str(_) => self.clone(),
            Expr::Field(e, f) => Expr::Field(go(e), f.clone()),
            Expr::Cast(c, e) => Expr::Cast(c.clone(), go(e)),
            Expr::Call(e, m, args) => Expr::Call(
                go(e),
                m.clone(),
                args.iter().map(|a| a.redirect_original(method)).collect(),
            ),
            Expr::Assign(a, f, b) => Expr::Assign(go(a), f.clone(), go(b)),
            Expr::Binary(op, a, b) => Expr::Binary(*op, go(a), go(b)),
        }
    }
}

/// A method body: zero or more expression statements followed by `return e;`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Body {
    pub effects: Vec<Expr>,
    pub result: Expr,
}

impl Body {
    pub fn returning(result: Expr) -> Self {
        Body { effects: Vec::new(), result }
    }

    pub fn contains_original(&self) -> bool {
        self.effects.iter().any(Expr::contains_original) || self.result.contains_original()
    }

    /// True iff the body is exactly `return null;`.
    pub fn is_return_null(&self) -> bool {
        self.effects.is_empty() && self.result == Expr::Null
    }

    pub fn redirect_original(&self, method: &str) -> Body {
        Body {
            effects: self.effects.iter().map(|e| e.redirect_original(method)).collect(),
            result: self.result.redirect_original(method),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Param {
    pub ty: ClassName,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FieldDecl {
    pub ty: ClassName,
    pub name: AttrName,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MethodDecl {
    pub ret: ClassName,
    pub name: AttrName,
    pub params: Vec<Param>,
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Attribute {
    Field(FieldDecl),
    Method(MethodDecl),
}

impl Attribute {
    pub fn name(&self) -> &str {
        match self {
            Attribute::Field(f) => &f.name,
            Attribute::Method(m) => &m.name,
        }
    }

    pub fn as_method(&self) -> Option<&MethodDecl> {
        match self {
            Attribute::Method(m) => Some(m),
            Attribute::Field(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ClassDecl {
    pub name: ClassName,
    pub superclass: ClassName,
    pub attributes: Vec<Attribute>,
}

impl ClassDecl {
    /// The class without its attributes.
    pub fn shell(&self) -> ClassDecl {
        ClassDecl {
            name: self.name.clone(),
            superclass: self.superclass.clone(),
            attributes: Vec::new(),
        }
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name() == name)
    }

    pub fn attribute_position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct Program {
    pub classes: Vec<ClassDecl>,
}

impl Program {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn class_mut(&mut self, name: &str) -> Option<&mut ClassDecl> {
        self.classes.iter_mut().find(|c| c.name == name)
    }

    /// Every class and attribute reference declared by the program.
    pub fn declared_refs(&self) -> BTreeSet<Reference> {
        let mut out = BTreeSet::new();
        for class in &self.classes {
            out.insert(Reference::class(&class.name));
            for attr in &class.attributes {
                out.insert(Reference::attr(&class.name, attr.name()));
            }
        }
        out
    }

    /// The declaration behind `reference`, if the program declares it.
    pub fn lookup(&self, reference: &Reference) -> Option<Payload> {
        match reference {
            Reference::Class(c) => self.class(c).cloned().map(Payload::Class),
            Reference::Attr(c, a) if a == EXTENDS => {
                self.class(c).map(|cd| Payload::Superclass(cd.superclass.clone()))
            }
            Reference::Attr(c, a) => self
                .class(c)
                .and_then(|cd| cd.attribute(a))
                .cloned()
                .map(Payload::Attribute),
        }
    }

    /// Returns the name of a class lying on an `extends` cycle, if any.
    pub fn find_extends_cycle(&self) -> Option<ClassName> {
        let parent: BTreeMap<&str, &str> = self
            .classes
            .iter()
            .map(|c| (c.name.as_str(), c.superclass.as_str()))
            .collect();
        for start in parent.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = *start;
            while let Some(next) = parent.get(cur) {
                if !seen.insert(cur) {
                    return Some(cur.to_string());
                }
                cur = next;
            }
        }
        None
    }
}

// ---------------------------------------------------------------------------
// References and abstract delta operations

/// A class name or a qualified attribute name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Reference {
    Class(ClassName),
    Attr(ClassName, AttrName),
}

impl Reference {
    pub fn class(name: impl Into<ClassName>) -> Self {
        Reference::Class(name.into())
    }

    pub fn attr(class: impl Into<ClassName>, attr: impl Into<AttrName>) -> Self {
        Reference::Attr(class.into(), attr.into())
    }

    pub fn extends(class: impl Into<ClassName>) -> Self {
        Reference::Attr(class.into(), EXTENDS.into())
    }

    pub fn class_name(&self) -> &str {
        match self {
            Reference::Class(c) | Reference::Attr(c, _) => c,
        }
    }

    pub fn attr_name(&self) -> Option<&str> {
        match self {
            Reference::Class(_) => None,
            Reference::Attr(_, a) => Some(a),
        }
    }

    pub fn is_class(&self) -> bool {
        matches!(self, Reference::Class(_))
    }

    pub fn is_extends(&self) -> bool {
        self.attr_name() == Some(EXTENDS)
    }

    /// Prefix order: `r <= r` and `C <= C.a`.
    pub fn leq(&self, other: &Reference) -> bool {
        match (self, other) {
            (Reference::Class(c), Reference::Class(d)) => c == d,
            (Reference::Class(c), Reference::Attr(d, _)) => c == d,
            (Reference::Attr(..), Reference::Class(_)) => false,
            (Reference::Attr(c, a), Reference::Attr(d, b)) => c == d && a == b,
        }
    }

    pub fn comparable(&self, other: &Reference) -> bool {
        self.leq(other) || other.leq(self)
    }

    fn sort_key(&self) -> (&str, Option<&str>) {
        (self.class_name(), self.attr_name())
    }
}

pub fn leq(a: &Reference, b: &Reference) -> bool {
    a.leq(b)
}

impl Ord for Reference {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Reference {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::Class(c) => write!(f, "{c}"),
            Reference::Attr(c, a) => write!(f, "{c}.{a}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Adds,
    Removes,
    Modifies,
    Readds,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Adds => "adds",
            Op::Removes => "removes",
            Op::Modifies => "modifies",
            Op::Readds => "readds",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Payload {
    None,
    Class(ClassDecl),
    Attribute(Attribute),
    Superclass(ClassName),
}

/// Abstract delta operation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Ado {
    pub op: Op,
    pub target: Reference,
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModifiesKind {
    Wraps,
    Voids,
    Plain,
}

impl Ado {
    pub fn adds_class(decl: ClassDecl) -> Self {
        Ado { op: Op::Adds, target: Reference::class(&decl.name), payload: Payload::Class(decl) }
    }

    pub fn adds_attr(class: &str, attr: Attribute) -> Self {
        Ado {
            op: Op::Adds,
            target: Reference::attr(class, attr.name()),
            payload: Payload::Attribute(attr),
        }
    }

    pub fn readds_attr(class: &str, attr: Attribute) -> Self {
        Ado {
            op: Op::Readds,
            target: Reference::attr(class, attr.name()),
            payload: Payload::Attribute(attr),
        }
    }

    pub fn removes(target: Reference) -> Self {
        Ado { op: Op::Removes, target, payload: Payload::None }
    }

    pub fn modifies_method(class: &str, method: MethodDecl) -> Self {
        Ado {
            op: Op::Modifies,
            target: Reference::attr(class, &method.name),
            payload: Payload::Attribute(Attribute::Method(method)),
        }
    }

    pub fn modifies_extends(class: &str, superclass: impl Into<ClassName>) -> Self {
        Ado {
            op: Op::Modifies,
            target: Reference::extends(class),
            payload: Payload::Superclass(superclass.into()),
        }
    }

    /// Checks that the payload kind matches the operator and target.
    pub fn check_shape(&self) -> Result<(), ModelError> {
        let bad = |reason: &str| {
            Err(ModelError::MalformedAdo { reference: self.target.clone(), reason: reason.into() })
        };
        let is_ext = self.target.is_extends();
        match (self.op, &self.target, &self.payload) {
            (Op::Removes, _, Payload::None) if !is_ext => Ok(()),
            (Op::Removes, ..) => bad("removes takes no payload and cannot target `extends`"),
            (Op::Adds, Reference::Class(c), Payload::Class(decl)) if *c == decl.name => Ok(()),
            (Op::Adds | Op::Readds, Reference::Attr(_, a), Payload::Attribute(attr))
                if !is_ext && a == attr.name() =>
            {
                Ok(())
            }
            (Op::Readds, Reference::Class(_), _) => bad("readds applies to attributes only"),
            (Op::Adds | Op::Readds, ..) => bad("payload does not declare the target"),
            (Op::Modifies, Reference::Class(_), _) => bad("modifies cannot target a class"),
            (Op::Modifies, Reference::Attr(..), Payload::Superclass(_)) if is_ext => Ok(()),
            (Op::Modifies, Reference::Attr(_, a), Payload::Attribute(Attribute::Method(m)))
                if !is_ext && *a == m.name =>
            {
                Ok(())
            }
            (Op::Modifies, ..) => bad("modifies needs a method or a superclass payload"),
        }
    }

    /// References declared by this operation (empty for removes and for
    /// modifications of `extends`).
    pub fn dom(&self) -> BTreeSet<Reference> {
        self.decompose().into_iter().map(|(r, _)| r).collect()
    }

    /// Element-level decomposition: for a class addition the class shell
    /// followed by each attribute, otherwise the single declared element.
    pub fn decompose(&self) -> Vec<(Reference, Payload)> {
        match (&self.op, &self.payload) {
            (Op::Removes, _) => Vec::new(),
            (_, Payload::Class(decl)) => {
                let mut out = vec![(Reference::class(&decl.name), Payload::Class(decl.shell()))];
                out.extend(decl.attributes.iter().map(|a| {
                    (Reference::attr(&decl.name, a.name()), Payload::Attribute(a.clone()))
                }));
                out
            }
            (_, Payload::Attribute(_)) => vec![(self.target.clone(), self.payload.clone())],
            (_, Payload::Superclass(_) | Payload::None) => Vec::new(),
        }
    }

    /// The payload this operation declares for `el`.
    pub fn data_at(&self, el: &Reference) -> Result<Payload, ModelError> {
        self.decompose()
            .into_iter()
            .find(|(r, _)| r == el)
            .map(|(_, p)| p)
            .ok_or_else(|| ModelError::AbsentReference(el.clone()))
    }

    pub fn method_payload(&self) -> Option<&MethodDecl> {
        match &self.payload {
            Payload::Attribute(Attribute::Method(m)) => Some(m),
            _ => None,
        }
    }

    /// Method declarations carried by this operation's payload.
    pub fn methods(&self) -> Vec<&MethodDecl> {
        match &self.payload {
            Payload::Class(decl) => decl.attributes.iter().filter_map(Attribute::as_method).collect(),
            Payload::Attribute(Attribute::Method(m)) => vec![m],
            _ => Vec::new(),
        }
    }
}

/// Wraps if the new body calls `original`, voids if it is exactly `return null;`.
pub fn classify_method_modifies(ado: &Ado) -> Result<ModifiesKind, ModelError> {
    match (ado.op, ado.method_payload()) {
        (Op::Modifies, Some(m)) => Ok(if m.body.contains_original() {
            ModifiesKind::Wraps
        } else if m.body.is_return_null() {
            ModifiesKind::Voids
        } else {
            ModifiesKind::Plain
        }),
        _ => Err(ModelError::NotMethodModifies(ado.target.clone())),
    }
}

// ---------------------------------------------------------------------------
// Delta modules and product lines

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaModule {
    pub name: DeltaName,
    pub activation: Formula,
    ops: BTreeMap<Reference, Ado>,
}

impl DeltaModule {
    pub fn new(name: impl Into<DeltaName>, activation: Formula) -> Self {
        DeltaModule { name: name.into(), activation, ops: BTreeMap::new() }
    }

    pub fn with_ops(
        name: impl Into<DeltaName>,
        activation: Formula,
        ops: impl IntoIterator<Item = Ado>,
    ) -> Result<Self, ModelError> {
        let mut module = DeltaModule::new(name, activation);
        for ado in ops {
            module.insert(ado)?;
        }
        Ok(module)
    }

    pub fn insert(&mut self, ado: Ado) -> Result<(), ModelError> {
        if self.ops.contains_key(&ado.target) {
            return Err(ModelError::DuplicateReference {
                delta: self.name.clone(),
                reference: ado.target,
            });
        }
        self.ops.insert(ado.target.clone(), ado);
        Ok(())
    }

    pub fn remove(&mut self, target: &Reference) -> Option<Ado> {
        self.ops.remove(target)
    }

    pub fn get(&self, target: &Reference) -> Option<&Ado> {
        self.ops.get(target)
    }

    /// Operations in reference order.
    pub fn ops(&self) -> impl Iterator<Item = &Ado> {
        self.ops.values()
    }

    pub fn refs(&self) -> impl Iterator<Item = &Reference> {
        self.ops.keys()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// A total order on a partition of the delta names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ApplicationOrder {
    pub partitions: Vec<BTreeSet<DeltaName>>,
}

impl ApplicationOrder {
    pub fn new(partitions: Vec<BTreeSet<DeltaName>>) -> Self {
        ApplicationOrder { partitions }
    }

    pub fn partition_of(&self, name: &str) -> Option<usize> {
        self.partitions.iter().position(|p| p.contains(name))
    }

    pub fn names(&self) -> impl Iterator<Item = &DeltaName> {
        self.partitions.iter().flatten()
    }

    /// Removes `name`; a partition left empty disappears.
    pub fn remove(&mut self, name: &str) -> bool {
        let Some(idx) = self.partition_of(name) else {
            return false;
        };
        self.partitions[idx].remove(name);
        if self.partitions[idx].is_empty() {
            self.partitions.remove(idx);
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductLine {
    pub features: Vec<FeatureName>,
    pub formula: Formula,
    pub base: Program,
    pub deltas: IndexMap<DeltaName, DeltaModule>,
    pub order: ApplicationOrder,
}

impl ProductLine {
    pub fn new(features: Vec<FeatureName>, formula: Formula, base: Program) -> Self {
        ProductLine {
            features,
            formula,
            base,
            deltas: IndexMap::new(),
            order: ApplicationOrder::default(),
        }
    }

    pub fn delta(&self, name: &str) -> Option<&DeltaModule> {
        self.deltas.get(name)
    }

    pub fn delta_mut(&mut self, name: &str) -> Option<&mut DeltaModule> {
        self.deltas.get_mut(name)
    }

    pub fn activation(&self, name: &str) -> Option<&Formula> {
        self.deltas.get(name).map(|d| &d.activation)
    }

    /// Appends `module` to an existing partition.
    pub fn add_to_partition(&mut self, module: DeltaModule, partition: usize) {
        self.order.partitions[partition].insert(module.name.clone());
        self.deltas.insert(module.name.clone(), module);
    }

    /// Inserts `module` in a new singleton partition at position `at`.
    pub fn add_in_new_partition(&mut self, module: DeltaModule, at: usize) {
        self.order.partitions.insert(at, BTreeSet::from([module.name.clone()]));
        self.deltas.insert(module.name.clone(), module);
    }

    /// Removes a module from the artifact base and the order.
    pub fn remove_delta(&mut self, name: &str) -> Option<DeltaModule> {
        self.order.remove(name);
        self.deltas.shift_remove(name)
    }

    /// All operations with the name of their module, in declaration order.
    pub fn all_ops(&self) -> impl Iterator<Item = (&DeltaName, &Ado)> {
        self.deltas.values().flat_map(|d| d.ops().map(move |a| (&d.name, a)))
    }

    pub fn ado_count(&self) -> usize {
        self.deltas.values().map(DeltaModule::len).sum()
    }

    pub fn count_op(&self, op: Op) -> usize {
        self.all_ops().filter(|(_, a)| a.op == op).count()
    }

    /// Checks every structural invariant of the model.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut features = BTreeSet::new();
        for f in &self.features {
            if !is_identifier(f) {
                return Err(ModelError::InvalidIdentifier(f.clone()));
            }
            if !features.insert(f) {
                return Err(ModelError::DuplicateFeature(f.clone()));
            }
        }
        check_atoms(&self.formula, &features, "the feature-model constraint")?;
        validate_program(&self.base, "base program")?;

        for (name, module) in &self.deltas {
            if name != &module.name {
                return Err(ModelError::OrderMismatch(format!(
                    "module `{}` stored under `{name}`",
                    module.name
                )));
            }
            if !is_identifier(name) {
                return Err(ModelError::InvalidIdentifier(name.clone()));
            }
            check_atoms(&module.activation, &features, &format!("activation of `{name}`"))?;
            for ado in module.ops() {
                ado.check_shape()?;
                validate_ado(ado, name)?;
            }
        }

        let mut ordered = BTreeSet::new();
        for part in &self.order.partitions {
            if part.is_empty() {
                return Err(ModelError::OrderMismatch("empty partition".into()));
            }
            for name in part {
                if !ordered.insert(name) {
                    return Err(ModelError::OrderMismatch(format!(
                        "`{name}` appears in several partitions"
                    )));
                }
                if !self.deltas.contains_key(name) {
                    return Err(ModelError::OrderMismatch(format!(
                        "`{name}` is ordered but not declared"
                    )));
                }
            }
        }
        if let Some(missing) = self.deltas.keys().find(|d| !ordered.contains(d)) {
            return Err(ModelError::OrderMismatch(format!("`{missing}` is declared but not ordered")));
        }
        Ok(())
    }
}

fn check_atoms(
    formula: &Formula,
    features: &BTreeSet<&FeatureName>,
    context: &str,
) -> Result<(), ModelError> {
    match formula.atoms().into_iter().find(|a| !features.contains(a)) {
        Some(feature) => Err(ModelError::UnknownFeature { feature, context: context.into() }),
        None => Ok(()),
    }
}

fn validate_method(m: &MethodDecl, original_allowed: bool, context: &str) -> Result<(), ModelError> {
    if !is_identifier(&m.name) {
        return Err(ModelError::InvalidIdentifier(m.name.clone()));
    }
    if m.name == "original" {
        return Err(ModelError::OriginalMethodName);
    }
    if m.params.iter().any(|p| p.name == "this") {
        return Err(ModelError::ThisParameter(m.name.clone()));
    }
    if !original_allowed && m.body.contains_original() {
        return Err(ModelError::OriginalOutsideModifies(format!("method `{}` in {context}", m.name)));
    }
    Ok(())
}

fn validate_class(class: &ClassDecl, context: &str) -> Result<(), ModelError> {
    if !is_identifier(&class.name) {
        return Err(ModelError::InvalidIdentifier(class.name.clone()));
    }
    let mut names = BTreeSet::new();
    for attr in &class.attributes {
        if !names.insert(attr.name()) {
            return Err(ModelError::DuplicateAttribute {
                class: class.name.clone(),
                attr: attr.name().into(),
            });
        }
        match attr {
            Attribute::Method(m) => validate_method(m, false, context)?,
            Attribute::Field(f) if !is_identifier(&f.name) => {
                return Err(ModelError::InvalidIdentifier(f.name.clone()))
            }
            Attribute::Field(_) => {}
        }
    }
    Ok(())
}

pub fn validate_program(program: &Program, context: &str) -> Result<(), ModelError> {
    let mut names = BTreeSet::new();
    for class in &program.classes {
        if !names.insert(&class.name) {
            return Err(ModelError::DuplicateClass(class.name.clone()));
        }
        validate_class(class, context)?;
    }
    match program.find_extends_cycle() {
        Some(c) => Err(ModelError::ExtendsCycle(c)),
        None => Ok(()),
    }
}

fn validate_ado(ado: &Ado, delta: &str) -> Result<(), ModelError> {
    let context = format!("delta `{delta}`");
    match &ado.payload {
        Payload::Class(decl) => validate_class(decl, &context),
        Payload::Attribute(Attribute::Method(m)) => {
            validate_method(m, ado.op == Op::Modifies, &context)
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn method(name: &str, result: Expr) -> MethodDecl {
        MethodDecl { ret: "String".into(), name: name.into(), params: vec![], body: Body::returning(result) }
    }

    fn neg_class() -> ClassDecl {
        ClassDecl {
            name: "Neg".into(),
            superclass: "Exp".into(),
            attributes: vec![
                Attribute::Field(FieldDecl { ty: "Exp".into(), name: "expr".into() }),
                Attribute::Method(MethodDecl {
                    ret: "Neg".into(),
                    name: "setNeg".into(),
                    params: vec![Param { ty: "Exp".into(), name: "a".into() }],
                    body: Body {
                        effects: vec![Expr::Assign(
                            Box::new(Expr::Var("this".into())),
                            "expr".into(),
                            Box::new(Expr::Var("a".into())),
                        )],
                        result: Expr::Var("this".into()),
                    },
                }),
            ],
        }
    }

    #[test]
    fn prefix_order_examples() {
        assert!(leq(&Reference::class("Add"), &Reference::attr("Add", "toString")));
        assert!(leq(&Reference::class("Add"), &Reference::class("Add")));
        assert!(!leq(&Reference::class("Lit"), &Reference::attr("Add", "toString")));
        assert!(!leq(&Reference::attr("Add", "toString"), &Reference::class("Add")));
        assert!(leq(&Reference::class("C"), &Reference::extends("C")));
    }

    #[test]
    fn prefix_order_is_a_partial_order() {
        let mut universe = Vec::new();
        for c in ["A", "B"] {
            universe.push(Reference::class(c));
            for a in ["x", "y", EXTENDS] {
                universe.push(Reference::attr(c, a));
            }
        }
        for a in &universe {
            assert!(a.leq(a));
            for b in &universe {
                if a.leq(b) && b.leq(a) {
                    assert_eq!(a, b);
                }
                for c in &universe {
                    if a.leq(b) && b.leq(c) {
                        assert!(a.leq(c));
                    }
                }
            }
        }
    }

    #[test]
    fn modifies_classification() {
        let wraps = Ado::modifies_method(
            "Add",
            method(
                "toString",
                Expr::Binary(
                    BinOp::Add,
                    Box::new(Expr::Binary(
                        BinOp::Add,
                        Box::new(Expr::Str("(".into())),
                        Box::new(Expr::Original(vec![])),
                    )),
                    Box::new(Expr::Str(")".into())),
                ),
            ),
        );
        assert_eq!(classify_method_modifies(&wraps), Ok(ModifiesKind::Wraps));
        let voids = Ado::modifies_method("Add", method("toString", Expr::Null));
        assert_eq!(classify_method_modifies(&voids), Ok(ModifiesKind::Voids));
        let plain = Ado::modifies_method(
            "Neg",
            method("get", Expr::Field(Box::new(Expr::Var("this".into())), "expr".into())),
        );
        assert_eq!(classify_method_modifies(&plain), Ok(ModifiesKind::Plain));
        let removes = Ado::removes(Reference::attr("Add", "toString"));
        assert!(classify_method_modifies(&removes).is_err());
        assert!(classify_method_modifies(&Ado::modifies_extends("Add", "Object")).is_err());
    }

    #[test]
    fn dom_and_data_at() {
        let adds = Ado::adds_class(neg_class());
        let dom: Vec<String> = adds.dom().iter().map(|r| r.to_string()).collect();
        assert_eq!(dom, ["Neg", "Neg.expr", "Neg.setNeg"]);
        assert_eq!(
            adds.data_at(&Reference::attr("Neg", "expr")).unwrap(),
            Payload::Attribute(Attribute::Field(FieldDecl { ty: "Exp".into(), name: "expr".into() }))
        );
        assert_eq!(
            adds.data_at(&Reference::attr("Neg", "setNeg")).unwrap(),
            Payload::Attribute(neg_class().attributes[1].clone())
        );
        assert_eq!(adds.data_at(&Reference::class("Neg")).unwrap(), Payload::Class(neg_class().shell()));

        let eval = Ado::adds_attr(
            "Lit",
            Attribute::Method(MethodDecl {
                ret: "int".into(),
                name: "eval".into(),
                params: vec![],
                body: Body::returning(Expr::Var("value".into())),
            }),
        );
        assert_eq!(eval.dom(), BTreeSet::from([Reference::attr("Lit", "eval")]));
        assert_eq!(
            eval.data_at(&Reference::attr("Neg", "expr")),
            Err(ModelError::AbsentReference(Reference::attr("Neg", "expr")))
        );
        assert!(Ado::removes(Reference::class("Add")).dom().is_empty());
    }

    #[test]
    fn dom_contains_target_of_additions() {
        let adds = Ado::adds_class(neg_class());
        assert!(adds.dom().contains(&adds.target));
        let readd = Ado::readds_attr("Neg", neg_class().attributes[0].clone());
        assert!(readd.dom().contains(&readd.target));
    }

    #[test]
    fn shape_checks() {
        assert!(Ado::adds_class(neg_class()).check_shape().is_ok());
        let bad = Ado { op: Op::Modifies, target: Reference::class("Neg"), payload: Payload::None };
        assert!(bad.check_shape().is_err());
        let bad = Ado { op: Op::Readds, target: Reference::class("Neg"), payload: Payload::Class(neg_class()) };
        assert!(bad.check_shape().is_err());
        assert!(Ado::removes(Reference::extends("Neg")).check_shape().is_err());
    }

    #[test]
    fn duplicate_reference_in_module_is_rejected() {
        let mut d = DeltaModule::new("D", Formula::True);
        d.insert(Ado::removes(Reference::class("A"))).unwrap();
        assert!(matches!(
            d.insert(Ado::removes(Reference::class("A"))),
            Err(ModelError::DuplicateReference { .. })
        ));
    }

    #[test]
    fn cycle_detection() {
        let prog = Program {
            classes: vec![
                ClassDecl { name: "A".into(), superclass: "B".into(), attributes: vec![] },
                ClassDecl { name: "B".into(), superclass: "A".into(), attributes: vec![] },
            ],
        };
        assert!(prog.find_extends_cycle().is_some());
        let prog = Program {
            classes: vec![ClassDecl { name: "A".into(), superclass: "Object".into(), attributes: vec![] }],
        };
        assert!(prog.find_extends_cycle().is_none());
    }
}
