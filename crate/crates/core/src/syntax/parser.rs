use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{tokenize, Tok};
use super::{ParseError, ParseErrorKind, Pos};
use crate::formula::Formula;
use crate::model::*;

const RESERVED: &[&str] = &["class", "extends", "return", "new", "null", "this", "original"];

pub fn parse_spl(src: &str) -> Result<ProductLine, ParseError> {
    let mut p = Parser::new(src)?;
    let pl = p.file()?;
    pl.validate().map_err(|e| ParseError { pos: p.pos(), kind: ParseErrorKind::Invalid(e.to_string()) })?;
    Ok(pl)
}

/// Parses a standalone formula. Atoms are checked against `features` when given.
pub fn parse_formula(src: &str, features: Option<&[FeatureName]>) -> Result<Formula, ParseError> {
    let mut p = Parser::new(src)?;
    p.features = features.map(|fs| fs.iter().cloned().collect());
    let f = p.formula()?;
    p.expect(Tok::Eof)?;
    Ok(f)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    idx: usize,
    features: Option<BTreeSet<FeatureName>>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser { toks: tokenize(src)?, idx: 0, features: None })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.idx + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.idx].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].0.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn fail<T>(&self, pos: Pos, kind: ParseErrorKind) -> PResult<T> {
        Err(ParseError { pos, kind })
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.fail(
            self.pos(),
            ParseErrorKind::Syntax(format!("expected {wanted}, found {}", self.peek().describe())),
        )
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.at_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, pos))
            }
            _ => self.unexpected("identifier"),
        }
    }

    /// An identifier that is not a reserved word.
    fn name(&mut self, what: &str) -> PResult<(String, Pos)> {
        let (s, pos) = self.ident()?;
        if RESERVED.contains(&s.as_str()) {
            return self.fail(pos, ParseErrorKind::Syntax(format!("`{s}` cannot be used as a {what} name")));
        }
        Ok((s, pos))
    }

    // ---- file structure

    fn file(&mut self) -> PResult<ProductLine> {
        self.keyword("features")?;
        let mut features = Vec::new();
        if !self.eat(&Tok::Semi) {
            loop {
                let (f, pos) = self.ident()?;
                if f == "true" || f == "false" {
                    return self.fail(pos, ParseErrorKind::Syntax(format!("`{f}` cannot name a feature")));
                }
                if features.contains(&f) {
                    return self.fail(pos, ParseErrorKind::Duplicate(format!("feature `{f}`")));
                }
                features.push(f);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Semi)?;
        }
        self.features = Some(features.iter().cloned().collect());

        self.keyword("constraint")?;
        let formula = self.formula()?;
        self.expect(Tok::Semi)?;

        self.keyword("base")?;
        self.expect(Tok::LBrace)?;
        let mut base = Program::default();
        let mut class_pos = BTreeMap::new();
        while !self.eat(&Tok::RBrace) {
            let pos = self.pos();
            let class = self.class_decl()?;
            if base.class(&class.name).is_some() {
                return self.fail(pos, ParseErrorKind::Duplicate(format!("class `{}`", class.name)));
            }
            class_pos.insert(class.name.clone(), pos);
            base.classes.push(class);
        }
        if let Some(c) = base.find_extends_cycle() {
            return self.fail(class_pos[&c], ParseErrorKind::ExtendsCycle(c));
        }

        let mut pl = ProductLine::new(features, formula, base);
        while self.at_kw("delta") {
            self.bump();
            let (name, pos) = self.name("delta")?;
            if pl.deltas.contains_key(&name) {
                return self.fail(pos, ParseErrorKind::Duplicate(format!("delta module `{name}`")));
            }
            self.keyword("when")?;
            let activation = self.formula()?;
            let mut module = DeltaModule::new(name.clone(), activation);
            self.expect(Tok::LBrace)?;
            while !self.eat(&Tok::RBrace) {
                self.delta_op(&mut module)?;
            }
            pl.deltas.insert(name, module);
        }

        if self.at_kw("order") {
            let order_pos = self.pos();
            self.bump();
            pl.order = self.order(&pl)?;
            let ordered: BTreeSet<&DeltaName> = pl.order.names().collect();
            if let Some(missing) = pl.deltas.keys().find(|d| !ordered.contains(d)) {
                return self.fail(
                    order_pos,
                    ParseErrorKind::OrderMismatch(format!("delta module `{missing}` is not ordered")),
                );
            }
        } else if let Some(first) = pl.deltas.keys().next() {
            return self.fail(
                self.pos(),
                ParseErrorKind::OrderMismatch(format!("missing `order` declaration (needed for `{first}`)")),
            );
        }
        self.expect(Tok::Eof)?;
        Ok(pl)
    }

    fn order(&mut self, pl: &ProductLine) -> PResult<ApplicationOrder> {
        let mut parts = Vec::new();
        let mut seen = BTreeSet::new();
        if self.eat(&Tok::Semi) {
            return Ok(ApplicationOrder::default());
        }
        loop {
            let mut part = BTreeSet::new();
            let grouped = self.eat(&Tok::LBrace);
            loop {
                let (name, pos) = self.ident()?;
                if !pl.deltas.contains_key(&name) {
                    return self.fail(
                        pos,
                        ParseErrorKind::OrderMismatch(format!("`{name}` is not a declared delta module")),
                    );
                }
                if !seen.insert(name.clone()) {
                    return self.fail(pos, ParseErrorKind::OrderMismatch(format!("`{name}` is ordered twice")));
                }
                part.insert(name);
                if !grouped || !self.eat(&Tok::Comma) {
                    break;
                }
            }
            if grouped {
                self.expect(Tok::RBrace)?;
            }
            parts.push(part);
            if !self.eat(&Tok::Lt) {
                break;
            }
        }
        self.expect(Tok::Semi)?;
        Ok(ApplicationOrder::new(parts))
    }

    fn insert_op(&self, module: &mut DeltaModule, ado: Ado, pos: Pos) -> PResult<()> {
        let target = ado.target.clone();
        module.insert(ado).or_else(|_| {
            self.fail(pos, ParseErrorKind::Duplicate(format!("operation on `{target}` in `{}`", module.name)))
        })
    }

    fn delta_op(&mut self, module: &mut DeltaModule) -> PResult<()> {
        let pos = self.pos();
        let (kw, _) = self.ident()?;
        match kw.as_str() {
            "adds" => {
                let class = self.class_decl()?;
                self.insert_op(module, Ado::adds_class(class), pos)
            }
            "removes" => {
                let (c, _) = self.name("class")?;
                self.eat(&Tok::Semi);
                self.insert_op(module, Ado::removes(Reference::class(c)), pos)
            }
            "modifies" => {
                let (c, _) = self.name("class")?;
                if self.at_kw("extending") {
                    let ext_pos = self.pos();
                    self.bump();
                    let (sup, _) = self.name("class")?;
                    if sup == c {
                        return self.fail(ext_pos, ParseErrorKind::ExtendsCycle(c));
                    }
                    self.insert_op(module, Ado::modifies_extends(&c, sup), ext_pos)?;
                }
                self.expect(Tok::LBrace)?;
                while !self.eat(&Tok::RBrace) {
                    self.attr_op(&c, module)?;
                }
                Ok(())
            }
            _ => self.fail(
                pos,
                ParseErrorKind::Syntax(format!("expected `adds`, `removes` or `modifies`, found `{kw}`")),
            ),
        }
    }

    fn attr_op(&mut self, class: &str, module: &mut DeltaModule) -> PResult<()> {
        let pos = self.pos();
        let (kw, _) = self.ident()?;
        let ado = match kw.as_str() {
            "adds" => Ado::adds_attr(class, self.member(false)?),
            "readds" => Ado::readds_attr(class, self.member(false)?),
            "removes" => {
                let (a, _) = self.name("attribute")?;
                self.eat(&Tok::Semi);
                Ado::removes(Reference::attr(class, a))
            }
            "modifies" => match self.member(true)? {
                Attribute::Method(m) => Ado::modifies_method(class, m),
                Attribute::Field(_) => {
                    return self.fail(pos, ParseErrorKind::Syntax("only methods can be modified".into()))
                }
            },
            _ => {
                return self.fail(
                    pos,
                    ParseErrorKind::Syntax(format!(
                        "expected `adds`, `removes`, `modifies` or `readds`, found `{kw}`"
                    )),
                )
            }
        };
        self.insert_op(module, ado, pos)
    }

    // ---- classes and members

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        self.keyword("class")?;
        let (name, pos) = self.name("class")?;
        let superclass = if self.at_kw("extends") {
            self.bump();
            self.name("class")?.0
        } else {
            OBJECT.to_string()
        };
        if superclass == name {
            return self.fail(pos, ParseErrorKind::ExtendsCycle(name));
        }
        self.expect(Tok::LBrace)?;
        let mut class = ClassDecl { name, superclass, attributes: Vec::new() };
        while !self.eat(&Tok::RBrace) {
            let pos = self.pos();
            let attr = self.member(false)?;
            if class.attribute(attr.name()).is_some() {
                return self.fail(
                    pos,
                    ParseErrorKind::Duplicate(format!("attribute `{}` in class `{}`", attr.name(), class.name)),
                );
            }
            class.attributes.push(attr);
        }
        Ok(class)
    }

    fn member(&mut self, original_allowed: bool) -> PResult<Attribute> {
        let (ty, _) = self.name("type")?;
        let (name, pos) = self.ident()?;
        if name == "original" {
            return self.fail(pos, ParseErrorKind::Syntax("`original` cannot name a method".into()));
        }
        if RESERVED.contains(&name.as_str()) {
            return self.fail(pos, ParseErrorKind::Syntax(format!("`{name}` cannot name an attribute")));
        }
        if self.eat(&Tok::Semi) {
            return Ok(Attribute::Field(FieldDecl { ty, name }));
        }
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let (pty, _) = self.name("type")?;
                let (pname, ppos) = self.ident()?;
                if pname == "this" {
                    return self.fail(ppos, ParseErrorKind::Syntax("`this` cannot name a parameter".into()));
                }
                if params.iter().any(|p: &Param| p.name == pname) {
                    return self.fail(ppos, ParseErrorKind::Duplicate(format!("parameter `{pname}`")));
                }
                params.push(Param { ty: pty, name: pname });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        self.expect(Tok::LBrace)?;
        let mut effects = Vec::new();
        let body_start = self.idx;
        while !self.at_kw("return") {
            effects.push(self.expr()?);
            self.expect(Tok::Semi)?;
        }
        self.bump();
        let result = self.expr()?;
        self.expect(Tok::Semi)?;
        self.expect(Tok::RBrace)?;
        let body = Body { effects, result };
        if !original_allowed && body.contains_original() {
            let at = self.toks[body_start..self.idx]
                .iter()
                .find(|(t, _)| *t == Tok::Ident("original".into()))
                .map(|(_, p)| *p)
                .unwrap_or(pos);
            return self.fail(at, ParseErrorKind::OriginalOutsideModifies);
        }
        Ok(Attribute::Method(MethodDecl { ret: ty, name, params, body }))
    }

    // ---- expressions

    fn expr(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let lhs = self.additive()?;
        if !self.eat(&Tok::Assign) {
            return Ok(lhs);
        }
        match lhs {
            Expr::Field(obj, f) => Ok(Expr::Assign(obj, f, Box::new(self.expr()?))),
            _ => self.fail(pos, ParseErrorKind::Syntax("only fields can be assigned".into())),
        }
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut e = self.multiplicative()?;
        while self.eat(&Tok::Plus) {
            let rhs = self.multiplicative()?;
            e = Expr::Binary(BinOp::Add, Box::new(e), Box::new(rhs));
        }
        Ok(e)
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        while self.eat(&Tok::Star) {
            let rhs = self.unary()?;
            e = Expr::Binary(BinOp::Mul, Box::new(e), Box::new(rhs));
        }
        Ok(e)
    }

    fn starts_expr(tok: &Tok) -> bool {
        matches!(tok, Tok::Ident(_) | Tok::Int(_) | Tok::Str(_) | Tok::LParen | Tok::Minus)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return match self.bump() {
                Tok::Int(n) => Ok(Expr::Int(-n)),
                _ => self.fail(self.toks[self.idx - 1].1, ParseErrorKind::Syntax("`-` must precede an integer".into())),
            };
        }
        let is_cast = *self.peek() == Tok::LParen
            && matches!(self.peek_at(1), Tok::Ident(s) if !RESERVED.contains(&s.as_str()))
            && *self.peek_at(2) == Tok::RParen
            && Self::starts_expr(self.peek_at(3));
        if is_cast {
            self.bump();
            let (c, _) = self.ident()?;
            self.bump();
            return Ok(Expr::Cast(c, Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.eat(&Tok::Dot) {
            let (m, _) = self.ident()?;
            if *self.peek() == Tok::LParen {
                let args = self.args()?;
                e = Expr::Call(Box::new(e), m, args);
            } else {
                e = Expr::Field(Box::new(e), m);
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) => Ok(Expr::Int(n)),
            Tok::Str(s) => Ok(Expr::Str(s)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s) => match s.as_str() {
                "null" => Ok(Expr::Null),
                "new" => {
                    let (c, _) = self.name("class")?;
                    self.expect(Tok::LParen)?;
                    self.expect(Tok::RParen)?;
                    Ok(Expr::New(c))
                }
                "original" => Ok(Expr::Original(self.args()?)),
                "class" | "extends" | "return" => {
                    self.fail(pos, ParseErrorKind::Syntax(format!("unexpected keyword `{s}`")))
                }
                _ => Ok(Expr::Var(s)),
            },
            other => self.fail(pos, ParseErrorKind::Syntax(format!("expected expression, found {}", other.describe()))),
        }
    }

    // ---- formulas: `!` binds tighter than `&&`, which binds tighter than `||`

    fn formula(&mut self) -> PResult<Formula> {
        let mut f = self.conjunction()?;
        while self.eat(&Tok::OrOr) {
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut f = self.negation()?;
        while self.eat(&Tok::AndAnd) {
            f = Formula::and(f, self.negation()?);
        }
        Ok(f)
    }

    fn negation(&mut self) -> PResult<Formula> {
        if self.eat(&Tok::Bang) {
            return Ok(Formula::not(self.negation()?));
        }
        if self.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        let (name, pos) = self.ident()?;
        match name.as_str() {
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::False),
            _ => {
                if let Some(fs) = &self.features {
                    if !fs.contains(&name) {
                        return self.fail(pos, ParseErrorKind::UnknownFeature(name));
                    }
                }
                Ok(Formula::Var(name))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(src: &str) -> ParseErrorKind {
        parse_spl(src).unwrap_err().kind
    }

    #[test]
    fn minimal_file() {
        let pl = parse_spl("features F; constraint F; base { }").unwrap();
        assert!(pl.base.classes.is_empty());
        assert!(pl.deltas.is_empty());
        assert_eq!(pl.features, vec!["F".to_string()]);
    }

    #[test]
    fn class_removal() {
        let pl = parse_spl(
            "features F; constraint true; base { class Add { } }
             delta D when F { removes Add } order D;",
        )
        .unwrap();
        let d = pl.delta("D").unwrap();
        assert_eq!(d.ops().cloned().collect::<Vec<_>>(), vec![Ado::removes(Reference::class("Add"))]);
    }

    #[test]
    fn formula_precedence() {
        let f = parse_formula("!a && b || c", None).unwrap();
        assert_eq!(
            f,
            Formula::or(Formula::and(Formula::not(Formula::var("a")), Formula::var("b")), Formula::var("c"))
        );
    }

    #[test]
    fn expression_forms() {
        let pl = parse_spl(
            r#"features F; constraint F; base {
                class A extends Object {
                  int v;
                  A set(int n) { this.v = n; return this; }
                  int neg() { return (-1) * this.v + 2; }
                  A cast(Object o) { return (A) o; }
                  int group(Object o) { return ((A) o).v; }
                }
            }"#,
        )
        .unwrap();
        let a = pl.base.class("A").unwrap();
        let body = |n: &str| a.attribute(n).unwrap().as_method().unwrap().body.clone();
        assert_eq!(body("set").effects.len(), 1);
        assert!(matches!(body("set").effects[0], Expr::Assign(..)));
        match body("neg").result {
            Expr::Binary(BinOp::Add, lhs, _) => match *lhs {
                Expr::Binary(BinOp::Mul, l, _) => assert_eq!(*l, Expr::Int(-1)),
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
        assert!(matches!(body("cast").result, Expr::Cast(..)));
        assert!(matches!(body("group").result, Expr::Field(..)));
    }

    #[test]
    fn empty_modifies_is_dropped_and_extending_kept() {
        let pl = parse_spl(
            "features F; constraint F; base { class A { } class B { } }
             delta D when F { modifies A { } modifies B extending A { } } order D;",
        )
        .unwrap();
        let ops: Vec<_> = pl.delta("D").unwrap().ops().cloned().collect();
        assert_eq!(ops, vec![Ado::modifies_extends("B", "A")]);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_spl("features F;\nconstraint G;\nbase { }").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownFeature("G".into()));
        assert_eq!(e.pos, Pos { line: 2, col: 12 });

        let e = parse_spl("features F; constraint F;\nbase { class A { String m() { return original(); } } }")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::OriginalOutsideModifies);
        assert_eq!(e.pos.line, 2);
    }

    #[test]
    fn rejected_inputs() {
        assert!(matches!(kind("features F, F; constraint F; base { }"), ParseErrorKind::Duplicate(_)));
        assert!(matches!(
            kind("features F; constraint F; base { class A extends B { } class B extends A { } }"),
            ParseErrorKind::ExtendsCycle(_)
        ));
        assert!(matches!(
            kind("features F; constraint F; base { } delta D when F { } delta E when F { } order D;"),
            ParseErrorKind::OrderMismatch(_)
        ));
        assert!(matches!(
            kind("features F; constraint F; base { } delta D when F { } order D < X;"),
            ParseErrorKind::OrderMismatch(_)
        ));
        assert!(matches!(
            kind("features F; constraint F; base { } delta D when F { } delta D when F { } order D;"),
            ParseErrorKind::Duplicate(_)
        ));
        assert!(matches!(
            kind("features F; constraint F; base { class A { A m(A this) { return this; } } }"),
            ParseErrorKind::Syntax(_)
        ));
        assert!(matches!(
            kind("features F; constraint F; base { class A { A original() { return this; } } }"),
            ParseErrorKind::Syntax(_)
        ));
        assert!(matches!(kind("features F; constraint F; base {"), ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn original_allowed_in_method_modification() {
        let pl = parse_spl(
            r#"features F; constraint F; base { class A { String m() { return ""; } } }
               delta D when F { modifies A { modifies String m() { return "(" + original() + ")"; } } }
               order D;"#,
        )
        .unwrap();
        let ado = pl.delta("D").unwrap().ops().next().unwrap().clone();
        assert_eq!(classify_method_modifies(&ado), Ok(ModifiesKind::Wraps));
    }
}
