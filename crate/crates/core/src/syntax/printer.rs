use std::fmt::Write;

use crate::model::*;

// Binding strength used to decide where parentheses are needed.
const ASSIGN: u8 = 0;
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POSTFIX: u8 = 4;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Assign(..) => ASSIGN,
        Expr::Binary(BinOp::Add, ..) => SUM,
        Expr::Binary(BinOp::Mul, ..) => PRODUCT,
        Expr::Cast(..) => UNARY,
        Expr::Int(n) if *n < 0 => UNARY,
        _ => POSTFIX,
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let paren = level(e) < min;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Var(v) => out.push_str(v),
        Expr::Null => out.push_str("null"),
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Str(s) => out.push_str(&quote(s)),
        Expr::New(c) => {
            let _ = write!(out, "new {c}()");
        }
        Expr::Field(obj, f) => {
            write_expr(out, obj, POSTFIX);
            let _ = write!(out, ".{f}");
        }
        Expr::Call(obj, m, args) => {
            write_expr(out, obj, POSTFIX);
            let _ = write!(out, ".{m}");
            write_args(out, args);
        }
        Expr::Original(args) => {
            out.push_str("original");
            write_args(out, args);
        }
        Expr::Cast(c, inner) => {
            let _ = write!(out, "({c}) ");
            write_expr(out, inner, UNARY);
        }
        Expr::Assign(obj, f, rhs) => {
            write_expr(out, obj, POSTFIX);
            let _ = write!(out, ".{f} = ");
            write_expr(out, rhs, ASSIGN);
        }
        Expr::Binary(op, a, b) => {
            let l = level(e);
            write_expr(out, a, l);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, l + 1);
        }
    }
    if paren {
        out.push(')');
    }
}

fn write_args(out: &mut String, args: &[Expr]) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a, ASSIGN);
    }
    out.push(')');
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, ASSIGN);
    out
}

fn method_text(m: &MethodDecl) -> String {
    let params: Vec<String> = m.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
    let mut out = format!("{} {}({}) {{ ", m.ret, m.name, params.join(", "));
    for e in &m.body.effects {
        write_expr(&mut out, e, ASSIGN);
        out.push_str("; ");
    }
    out.push_str("return ");
    write_expr(&mut out, &m.body.result, ASSIGN);
    out.push_str("; }");
    out
}

fn attribute_text(a: &Attribute) -> String {
    match a {
        Attribute::Field(f) => format!("{} {};", f.ty, f.name),
        Attribute::Method(m) => method_text(m),
    }
}

fn write_class(out: &mut String, c: &ClassDecl, indent: &str, lead: &str) {
    let _ = writeln!(out, "{indent}{lead}class {} extends {} {{", c.name, c.superclass);
    for a in &c.attributes {
        let _ = writeln!(out, "{indent}  {}", attribute_text(a));
    }
    let _ = writeln!(out, "{indent}}}");
}

/// Prints a program in plain Java-like syntax.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for c in &p.classes {
        write_class(&mut out, c, "", "");
    }
    out
}

fn write_delta(out: &mut String, d: &DeltaModule) {
    let _ = writeln!(out, "delta {} when {} {{", d.name, d.activation);
    let ops: Vec<&Ado> = d.ops().collect();
    let mut i = 0;
    while i < ops.len() {
        let class = ops[i].target.class_name().to_string();
        let mut attr_ops = Vec::new();
        let mut extending = None;
        while i < ops.len() && ops[i].target.class_name() == class {
            let ado = ops[i];
            match (&ado.target, &ado.payload) {
                (Reference::Class(_), Payload::Class(decl)) => {
                    write_class(out, decl, "  ", "adds ");
                }
                (Reference::Class(c), _) => {
                    let _ = writeln!(out, "  removes {c}");
                }
                (_, Payload::Superclass(sup)) => extending = Some(sup.clone()),
                _ => attr_ops.push(ado),
            }
            i += 1;
        }
        if attr_ops.is_empty() && extending.is_none() {
            continue;
        }
        let _ = write!(out, "  modifies {class}");
        if let Some(sup) = extending {
            let _ = write!(out, " extending {sup}");
        }
        if attr_ops.is_empty() {
            out.push_str(" { }\n");
            continue;
        }
        out.push_str(" {\n");
        for ado in attr_ops {
            match (&ado.op, &ado.payload) {
                (Op::Removes, _) => {
                    let _ = writeln!(out, "    removes {}", ado.target.attr_name().unwrap_or_default());
                }
                (op, Payload::Attribute(a)) => {
                    let _ = writeln!(out, "    {op} {}", attribute_text(a));
                }
                _ => {}
            }
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
}

/// Deterministic `.spl` rendering; `parse_spl` reads it back to an equal product line.
pub fn print_spl(pl: &ProductLine) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "features {};", pl.features.join(", "));
    let _ = writeln!(out, "constraint {};", pl.formula);
    out.push_str("\nbase {\n");
    for c in &pl.base.classes {
        write_class(&mut out, c, "  ", "");
    }
    out.push_str("}\n");
    for d in pl.deltas.values() {
        out.push('\n');
        write_delta(&mut out, d);
    }
    let parts: Vec<String> = pl
        .order
        .partitions
        .iter()
        .map(|p| {
            let names: Vec<&str> = p.iter().map(String::as_str).collect();
            if names.len() == 1 {
                names[0].to_string()
            } else {
                format!("{{{}}}", names.join(", "))
            }
        })
        .collect();
    let _ = writeln!(out, "\norder {};", parts.join(" < "));
    out
}
