//! Seeded generator of small well-behaved product lines for differential testing.
//!
//! Generated product lines validate, are unambiguous and generate every product
//! without error. They also keep to a discipline under which both refactorings
//! preserve variants:
//!
//! - a class is introduced once, by the base or by a single class addition;
//! - an attribute that arrived inside a class addition is never removed on its own;
//! - once a module removes a class, no later module touches it;
//! - references touched within one partition are pairwise incomparable;
//! - a superclass is `Object` or a class of lower index, so `extends` never cycles.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::formula::{models, Formula, Product};
use crate::generation::{check_unambiguity, enumerate_products, generate_variant};
use crate::model::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OpWeights {
    pub add_class: u32,
    pub remove_class: u32,
    pub add_attribute: u32,
    pub remove_attribute: u32,
    pub wraps: u32,
    pub voids: u32,
    pub plain: u32,
    pub modify_extends: u32,
}

impl Default for OpWeights {
    fn default() -> Self {
        OpWeights {
            add_class: 3,
            remove_class: 1,
            add_attribute: 5,
            remove_attribute: 2,
            wraps: 2,
            voids: 1,
            plain: 1,
            modify_extends: 1,
        }
    }
}

impl OpWeights {
    /// Weights without method modifications.
    pub fn without_modifies(self) -> Self {
        OpWeights { wraps: 0, voids: 0, plain: 0, modify_extends: 0, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RandomSplSpec {
    pub seed: u64,
    pub max_features: usize,
    pub max_deltas: usize,
    pub max_partitions: usize,
    pub classes: usize,
    pub fields: usize,
    pub methods: usize,
    pub weights: OpWeights,
    pub max_attempts: usize,
}

impl Default for RandomSplSpec {
    fn default() -> Self {
        RandomSplSpec {
            seed: 0,
            max_features: 6,
            max_deltas: 12,
            max_partitions: 6,
            classes: 6,
            fields: 2,
            methods: 3,
            weights: OpWeights::default(),
            max_attempts: 200,
        }
    }
}

impl RandomSplSpec {
    pub fn with_seed(seed: u64) -> Self {
        RandomSplSpec { seed, ..Default::default() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RandomError {
    #[error("feature, class and partition bounds must be positive")]
    BadBounds,
    #[error("no valid product line for seed {seed} after {attempts} attempts")]
    Exhausted { seed: u64, attempts: usize },
}

pub fn generate_random_spl(spec: &RandomSplSpec) -> Result<ProductLine, RandomError> {
    if spec.max_features == 0 || spec.classes == 0 || spec.max_partitions == 0 || spec.fields + spec.methods == 0
    {
        return Err(RandomError::BadBounds);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..spec.max_attempts {
        let pl = Builder::new(spec, &mut rng).build();
        if accept(&pl) {
            return Ok(pl);
        }
    }
    Err(RandomError::Exhausted { seed: spec.seed, attempts: spec.max_attempts })
}

fn accept(pl: &ProductLine) -> bool {
    pl.validate().is_ok()
        && check_unambiguity(pl).is_ok()
        && enumerate_products(pl).iter().all(|p| generate_variant(pl, p).is_ok())
}

#[derive(Clone, Copy)]
enum Kind {
    AddClass,
    RemoveClass,
    AddAttribute,
    RemoveAttribute,
    Wraps,
    Voids,
    Plain,
    ModifyExtends,
}

/// Abstract per-product program: class name to attribute names, flagged as methods.
type State = BTreeMap<ClassName, BTreeMap<AttrName, bool>>;

struct Builder<'a> {
    spec: &'a RandomSplSpec,
    rng: &'a mut ChaCha8Rng,
    counter: i64,
    features: Vec<FeatureName>,
    formula: Formula,
    products: Vec<Product>,
    states: Vec<State>,
    introduced: BTreeSet<ClassName>,
    payload_attrs: BTreeSet<(ClassName, AttrName)>,
    finalized: BTreeSet<ClassName>,
}

fn class_name(i: usize) -> ClassName {
    format!("C{i}")
}

fn class_index(c: &str) -> usize {
    c[1..].parse().expect("generated class name")
}

impl<'a> Builder<'a> {
    fn new(spec: &'a RandomSplSpec, rng: &'a mut ChaCha8Rng) -> Self {
        let n = rng.gen_range(1..=spec.max_features);
        let features: Vec<FeatureName> = (0..n).map(|i| format!("F{i}")).collect();
        let (formula, products) = loop {
            let f = if rng.gen_bool(0.3) { Formula::True } else { random_formula(rng, &features, 2) };
            let ps = models(&features, &f);
            if !ps.is_empty() {
                break (f, ps);
            }
        };
        let states = vec![State::new(); products.len()];
        Builder {
            spec,
            rng,
            counter: 0,
            features,
            formula,
            products,
            states,
            introduced: BTreeSet::new(),
            payload_attrs: BTreeSet::new(),
            finalized: BTreeSet::new(),
        }
    }

    fn next_literal(&mut self) -> i64 {
        self.counter += 1;
        self.counter
    }

    fn attr_names(&self) -> Vec<AttrName> {
        (0..self.spec.fields)
            .map(|i| format!("f{i}"))
            .chain((0..self.spec.methods).map(|i| format!("m{i}")))
            .collect()
    }

    fn params(name: &str) -> Vec<Param> {
        let i: usize = name[1..].parse().expect("generated method name");
        if i % 2 == 1 {
            vec![Param { ty: "int".into(), name: "x".into() }]
        } else {
            Vec::new()
        }
    }

    fn body(&mut self, name: &str) -> Body {
        let k = Expr::Int(self.next_literal());
        let this = || Box::new(Expr::Var("this".into()));
        let has_param = !Self::params(name).is_empty();
        match self.rng.gen_range(0..4) {
            0 => Body::returning(k),
            1 => Body::returning(Expr::Binary(BinOp::Add, Box::new(Expr::Field(this(), "f0".into())), Box::new(k))),
            2 => Body {
                effects: vec![Expr::Assign(this(), "f0".into(), Box::new(k))],
                result: Expr::Var("this".into()),
            },
            _ if has_param => Body::returning(Expr::Binary(BinOp::Mul, Box::new(Expr::Var("x".into())), Box::new(k))),
            _ => Body::returning(Expr::Call(this(), "m0".into(), vec![Expr::Str(format!("s{}", self.counter))])),
        }
    }

    fn method(&mut self, name: &str, body: Body) -> MethodDecl {
        MethodDecl { ret: "int".into(), name: name.into(), params: Self::params(name), body }
    }

    fn attribute(&mut self, name: &str) -> Attribute {
        if name.starts_with('f') {
            let ty = if self.rng.gen_bool(0.5) { "int".into() } else { class_name(0) };
            Attribute::Field(FieldDecl { ty, name: name.into() })
        } else {
            let body = self.body(name);
            Attribute::Method(self.method(name, body))
        }
    }

    fn superclass(&mut self, class: &str) -> ClassName {
        let i = class_index(class);
        if i == 0 || self.rng.gen_bool(0.5) {
            OBJECT.into()
        } else {
            class_name(self.rng.gen_range(0..i))
        }
    }

    fn class_decl(&mut self, name: &str) -> ClassDecl {
        let superclass = self.superclass(name);
        let count = self.rng.gen_range(0..=3);
        let names: Vec<AttrName> = self.attr_names().into_iter().choose_multiple(self.rng, count);
        let mut attributes = Vec::new();
        for a in names {
            attributes.push(self.attribute(&a));
        }
        ClassDecl { name: name.into(), superclass, attributes }
    }

    fn build(mut self) -> ProductLine {
        let mut base = Program::default();
        for i in 0..self.spec.classes {
            if self.rng.gen_bool(0.5) {
                let decl = self.class_decl(&class_name(i));
                self.introduced.insert(decl.name.clone());
                for s in &mut self.states {
                    s.insert(decl.name.clone(), attr_map(&decl));
                }
                base.classes.push(decl);
            }
        }
        let mut pl = ProductLine::new(self.features.clone(), self.formula.clone(), base);

        let n = self.rng.gen_range(0..=self.spec.max_deltas);
        let mut partition_refs: Vec<Reference> = Vec::new();
        for i in 0..n {
            let open = pl.order.partitions.is_empty()
                || (pl.order.partitions.len() < self.spec.max_partitions && self.rng.gen_bool(0.5));
            if open {
                pl.order.partitions.push(BTreeSet::new());
                partition_refs.clear();
            }
            let (activation, active) = loop {
                let f = random_formula(self.rng, &self.features, 1);
                let active: Vec<usize> = (0..self.products.len()).filter(|&p| f.eval(&self.products[p])).collect();
                if !active.is_empty() {
                    break (f, active);
                }
            };
            let name = format!("D{i}");
            let mut module = DeltaModule::new(name.clone(), activation);
            let op_count = if self.rng.gen_bool(0.05) { 0 } else { self.rng.gen_range(1..=3) };
            for _ in 0..op_count {
                for _ in 0..20 {
                    if let Some(ado) = self.candidate(&active, &partition_refs) {
                        self.commit(&ado, &active);
                        partition_refs.push(ado.target.clone());
                        module.insert(ado).expect("incomparable references");
                        break;
                    }
                }
            }
            pl.order.partitions.last_mut().expect("opened").insert(name.clone());
            pl.deltas.insert(name, module);
        }
        pl
    }

    fn pick_kind(&mut self) -> Kind {
        let w = self.spec.weights;
        let table = [
            (Kind::AddClass, w.add_class),
            (Kind::RemoveClass, w.remove_class),
            (Kind::AddAttribute, w.add_attribute),
            (Kind::RemoveAttribute, w.remove_attribute),
            (Kind::Wraps, w.wraps),
            (Kind::Voids, w.voids),
            (Kind::Plain, w.plain),
            (Kind::ModifyExtends, w.modify_extends),
        ];
        let dist = WeightedIndex::new(table.iter().map(|(_, w)| *w)).expect("some positive weight");
        table[dist.sample(self.rng)].0
    }

    /// A class that every active product declares and that is still open to changes.
    fn live_class(&mut self, active: &[usize]) -> Option<ClassName> {
        let candidates: Vec<ClassName> = (0..self.spec.classes)
            .map(class_name)
            .filter(|c| !self.finalized.contains(c) && active.iter().all(|&p| self.states[p].contains_key(c)))
            .collect();
        candidates.choose(self.rng).cloned()
    }

    fn attrs_everywhere(&self, active: &[usize], class: &str, method_only: bool) -> Vec<AttrName> {
        self.attr_names()
            .into_iter()
            .filter(|a| {
                active.iter().all(|&p| match self.states[p][class].get(a) {
                    Some(is_method) => !method_only || *is_method,
                    None => false,
                })
            })
            .collect()
    }

    fn candidate(&mut self, active: &[usize], taken: &[Reference]) -> Option<Ado> {
        let ado = match self.pick_kind() {
            Kind::AddClass => {
                let fresh: Vec<ClassName> =
                    (0..self.spec.classes).map(class_name).filter(|c| !self.introduced.contains(c)).collect();
                let c = fresh.choose(self.rng)?.clone();
                Ado::adds_class(self.class_decl(&c))
            }
            Kind::RemoveClass => Ado::removes(Reference::class(self.live_class(active)?)),
            Kind::AddAttribute => {
                let c = self.live_class(active)?;
                let absent: Vec<AttrName> = self
                    .attr_names()
                    .into_iter()
                    .filter(|a| active.iter().all(|&p| !self.states[p][&c].contains_key(a)))
                    .collect();
                let a = absent.choose(self.rng)?.clone();
                let attr = self.attribute(&a);
                Ado::adds_attr(&c, attr)
            }
            Kind::RemoveAttribute => {
                let c = self.live_class(active)?;
                let present: Vec<AttrName> = self
                    .attrs_everywhere(active, &c, false)
                    .into_iter()
                    .filter(|a| !self.payload_attrs.contains(&(c.clone(), a.clone())))
                    .collect();
                Ado::removes(Reference::attr(&c, present.choose(self.rng)?))
            }
            kind @ (Kind::Wraps | Kind::Voids | Kind::Plain) => {
                let c = self.live_class(active)?;
                let m = self.attrs_everywhere(active, &c, true).choose(self.rng)?.clone();
                let body = match kind {
                    Kind::Wraps => {
                        let args =
                            Self::params(&m).into_iter().map(|p| Expr::Var(p.name)).collect::<Vec<_>>();
                        let k = Expr::Int(self.next_literal());
                        Body::returning(Expr::Binary(BinOp::Add, Box::new(Expr::Original(args)), Box::new(k)))
                    }
                    Kind::Voids => Body::returning(Expr::Null),
                    _ => self.body(&m),
                };
                let method = self.method(&m, body);
                Ado::modifies_method(&c, method)
            }
            Kind::ModifyExtends => {
                let c = self.live_class(active)?;
                let sup = self.superclass(&c);
                Ado::modifies_extends(&c, sup)
            }
        };
        if taken.iter().any(|r| r.comparable(&ado.target)) {
            return None;
        }
        Some(ado)
    }

    fn commit(&mut self, ado: &Ado, active: &[usize]) {
        let c = ado.target.class_name().to_string();
        match (&ado.target, ado.op, &ado.payload) {
            (Reference::Class(_), Op::Adds, Payload::Class(decl)) => {
                self.introduced.insert(c.clone());
                for a in &decl.attributes {
                    self.payload_attrs.insert((c.clone(), a.name().to_string()));
                }
                for &p in active {
                    self.states[p].insert(c.clone(), attr_map(decl));
                }
            }
            (Reference::Class(_), Op::Removes, _) => {
                self.finalized.insert(c.clone());
                for &p in active {
                    self.states[p].remove(&c);
                }
            }
            (Reference::Attr(_, a), Op::Adds, Payload::Attribute(attr)) => {
                for &p in active {
                    self.states[p].get_mut(&c).expect("live").insert(a.clone(), attr.as_method().is_some());
                }
            }
            (Reference::Attr(_, a), Op::Removes, _) => {
                for &p in active {
                    self.states[p].get_mut(&c).expect("live").remove(a);
                }
            }
            _ => {}
        }
    }
}

fn attr_map(decl: &ClassDecl) -> BTreeMap<AttrName, bool> {
    decl.attributes.iter().map(|a| (a.name().to_string(), a.as_method().is_some())).collect()
}

fn random_formula(rng: &mut ChaCha8Rng, features: &[FeatureName], depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.4) {
        let v = Formula::var(features.choose(rng).expect("at least one feature").clone());
        return if rng.gen_bool(0.4) { Formula::not(v) } else { v };
    }
    let a = random_formula(rng, features, depth - 1);
    let b = random_formula(rng, features, depth - 1);
    if rng.gen_bool(0.6) {
        Formula::and(a, b)
    } else {
        Formula::or(a, b)
    }
}
