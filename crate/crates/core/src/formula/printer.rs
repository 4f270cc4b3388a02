use super::{ops_names, Binder, Declaration, Formula, RelOp};

/// Output notation. `Ascii` uses keywords and bracketed quantifiers;
/// `Unicode` uses logical symbols and the prefix quantifier form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Style {
    Ascii,
    #[default]
    Unicode,
}

// Binding strengths, loosest first.
const QUANT: u8 = 0;
const DEF: u8 = 1;
const IFF: u8 = 2;
const IMPLIES: u8 = 3;
const OR: u8 = 4;
const AND: u8 = 5;
const NOT: u8 = 6;
const REL: u8 = 7;
const ADD: u8 = 8;
const MUL: u8 = 9;
const UNARY: u8 = 10;
const POWER: u8 = 11;
const ATOM: u8 = 12;

pub fn format(f: &Formula, style: Style) -> String {
    let mut p = Printer {
        style,
        out: String::new(),
    };
    p.print(f, QUANT, true);
    p.out
}

pub(crate) fn format_declaration(d: &Declaration, style: Style) -> String {
    let mut p = Printer {
        style,
        out: String::new(),
    };
    p.declaration(d);
    p.out
}

struct Printer {
    style: Style,
    out: String,
}

fn infix_name(name: &str) -> Option<(&'static str, u8)> {
    Some(match name {
        ops_names::PLUS => ("+", ADD),
        ops_names::MINUS => ("-", ADD),
        ops_names::TIMES => ("*", MUL),
        ops_names::DIVIDE => ("/", MUL),
        ops_names::POWER => ("^", POWER),
        _ => return None,
    })
}

impl Printer {
    fn unicode(&self) -> bool {
        self.style == Style::Unicode
    }

    fn sym(&self, ascii: &'static str, unicode: &'static str) -> &'static str {
        if self.unicode() {
            unicode
        } else {
            ascii
        }
    }

    fn precedence(&self, f: &Formula) -> u8 {
        match f {
            Formula::Int(n) if *n < 0 => UNARY,
            Formula::App(head, args) => match head.as_ref() {
                Formula::Const(name) => match (infix_name(name), args.len()) {
                    (Some((_, prec)), 2) => prec,
                    _ if name == ops_names::MINUS && args.len() == 1 => UNARY,
                    _ => ATOM,
                },
                _ => ATOM,
            },
            Formula::Not(_) => NOT,
            Formula::And(_) => AND,
            Formula::Or(_) => OR,
            Formula::Implies(..) => IMPLIES,
            Formula::Iff(..) => IFF,
            Formula::DefIff(..) | Formula::DefEq(..) => DEF,
            Formula::Rel(..) => REL,
            Formula::Forall(..) | Formula::Exists(..) if self.unicode() => QUANT,
            _ => ATOM,
        }
    }

    /// Prints `f` where the context requires binding strength `min`.
    /// `trailing` means nothing follows `f` before a closing delimiter,
    /// so a prefix quantifier may stay unparenthesized.
    fn print(&mut self, f: &Formula, min: u8, trailing: bool) {
        let prec = self.precedence(f);
        let needs_parens = prec < min && !(prec == QUANT && trailing);
        if needs_parens {
            self.out.push('(');
            self.print_bare(f, true);
            self.out.push(')');
        } else {
            self.print_bare(f, trailing);
        }
    }

    fn print_bare(&mut self, f: &Formula, trailing: bool) {
        match f {
            Formula::True => self.out.push_str("True"),
            Formula::False => self.out.push_str("False"),
            Formula::Const(name) | Formula::Var(name) => self.out.push_str(name),
            Formula::Int(n) => self.out.push_str(&n.to_string()),
            Formula::Rational(n, d) => self.out.push_str(&format!("rat[{n}, {d}]")),
            Formula::App(head, args) => self.app(head, args, trailing),
            Formula::Index(base, index) => {
                self.print(base, ATOM, false);
                self.out.push('_');
                match index.as_ref() {
                    Formula::Var(_) | Formula::Const(_) => self.print(index, ATOM, false),
                    Formula::Int(n) if *n >= 0 => self.print(index, ATOM, false),
                    other => {
                        self.out.push('(');
                        self.print(other, QUANT, true);
                        self.out.push(')');
                    }
                }
            }
            Formula::Set(items) => {
                self.out.push('{');
                self.list(items);
                self.out.push('}');
            }
            Formula::Tuple(items) => {
                if self.unicode() {
                    self.out.push('⟨');
                    self.list(items);
                    self.out.push('⟩');
                } else {
                    self.out.push_str("tuple[");
                    self.list(items);
                    self.out.push(']');
                }
            }
            Formula::Length(inner) => {
                self.out.push('|');
                self.print(inner, QUANT, true);
                self.out.push('|');
            }
            Formula::Not(inner) => {
                self.out.push_str(self.sym("not ", "¬"));
                self.print(inner, NOT, trailing);
            }
            Formula::And(items) => self.nary(items, self.sym(" and ", " ∧ "), AND, trailing),
            Formula::Or(items) => self.nary(items, self.sym(" or ", " ∨ "), OR, trailing),
            Formula::Implies(l, r) => self.binary(
                l,
                self.sym(" => ", " ⇒ "),
                r,
                IMPLIES + 1,
                IMPLIES,
                trailing,
            ),
            Formula::Iff(l, r) => {
                self.binary(l, self.sym(" <=> ", " ⇔ "), r, IFF + 1, IFF, trailing)
            }
            Formula::DefIff(l, r) => {
                self.binary(l, self.sym(" :<=> ", " :⟺ "), r, DEF + 1, DEF + 1, trailing)
            }
            Formula::DefEq(l, r) => self.binary(l, " := ", r, DEF + 1, DEF + 1, trailing),
            Formula::Rel(op, l, r) => {
                let sym = match (self.style, op) {
                    (Style::Ascii, RelOp::In) => " in ".to_string(),
                    (Style::Ascii, op) => format!(" {} ", op.ascii()),
                    (Style::Unicode, op) => format!(" {} ", op.unicode()),
                };
                self.print(l, REL + 1, false);
                self.out.push_str(&sym);
                self.print(r, REL + 1, trailing);
            }
            Formula::Forall(binder, body) => self.quantifier("forall", "∀", binder, body),
            Formula::Exists(binder, body) => self.quantifier("exists", "∃", binder, body),
        }
    }

    fn list(&mut self, items: &[Formula]) {
        for (i, item) in items.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.print(item, QUANT, true);
        }
    }

    fn nary(&mut self, items: &[Formula], sep: &str, prec: u8, trailing: bool) {
        for (i, item) in items.iter().enumerate() {
            if i > 0 {
                self.out.push_str(sep);
            }
            let last = i + 1 == items.len();
            self.print(item, prec + 1, last && trailing);
        }
    }

    fn binary(&mut self, l: &Formula, sym: &str, r: &Formula, lmin: u8, rmin: u8, trailing: bool) {
        self.print(l, lmin, false);
        self.out.push_str(sym);
        self.print(r, rmin, trailing);
    }

    fn app(&mut self, head: &Formula, args: &[Formula], trailing: bool) {
        if let Formula::Const(name) = head {
            if let (Some((sym, prec)), 2) = (infix_name(name), args.len()) {
                // Left-associative except for `^`.
                let (lmin, rmin) = if prec == POWER {
                    (ATOM, UNARY)
                } else {
                    (prec, prec + 1)
                };
                self.print(&args[0], lmin, false);
                self.out.push(' ');
                self.out.push_str(sym);
                self.out.push(' ');
                self.print(&args[1], rmin, trailing);
                return;
            }
            if name == ops_names::MINUS && args.len() == 1 {
                self.out.push('-');
                let mut sub = Printer {
                    style: self.style,
                    out: String::new(),
                };
                sub.print(&args[0], UNARY, trailing);
                // `-3` would read back as a literal.
                if sub
                    .out
                    .starts_with(|c: char| c.is_ascii_digit() || c == '-')
                {
                    self.out.push('(');
                    self.print(&args[0], QUANT, true);
                    self.out.push(')');
                } else {
                    self.out.push_str(&sub.out);
                }
                return;
            }
            self.out.push_str(name);
        } else if matches!(head, Formula::Var(_)) {
            self.out.push('(');
            self.print(head, QUANT, true);
            self.out.push(')');
        } else {
            self.print(head, ATOM, false);
        }
        self.out.push('[');
        self.list(args);
        self.out.push(']');
    }

    fn binder(&mut self, binder: &Binder, bracketed: bool) {
        if bracketed && binder.vars.len() > 1 {
            self.out.push('{');
            self.out.push_str(&binder.vars.join(", "));
            self.out.push('}');
        } else {
            self.out.push_str(&binder.vars.join(", "));
        }
        if let Some(range) = &binder.range {
            self.out.push_str(" = ");
            self.print(&range.lo, ADD, false);
            self.out.push_str(if self.unicode() { ",…," } else { ".." });
            self.print(&range.hi, ADD, false);
        }
        if let Some(cond) = &binder.condition {
            self.out.push_str(" with ");
            let conjuncts: Vec<&Formula> = match cond {
                Formula::And(items) => items.iter().collect(),
                other => vec![other],
            };
            for (i, c) in conjuncts.into_iter().enumerate() {
                if i > 0 {
                    self.out.push_str(", ");
                }
                // In the prefix form the condition is followed by `:` or by
                // the next quantifier, so nested prefix quantifiers get parens.
                if bracketed {
                    self.print(c, QUANT, true);
                } else {
                    self.print(c, DEF, false);
                }
            }
        }
    }

    fn quantifier(&mut self, ascii: &str, unicode: &str, binder: &Binder, body: &Formula) {
        if self.unicode() {
            self.out.push_str(unicode);
            self.out.push(' ');
            self.binder(binder, false);
            self.out.push_str(" : ");
            self.print(body, QUANT, true);
        } else {
            self.out.push_str(ascii);
            self.out.push('[');
            self.binder(binder, true);
            self.out.push_str(", ");
            self.print(body, QUANT, true);
            self.out.push(']');
        }
    }

    fn declaration(&mut self, d: &Declaration) {
        match d {
            Declaration::Quantifier { binder } => {
                if self.unicode() {
                    self.out.push_str("∀ ");
                    self.binder(binder, false);
                } else {
                    self.out.push_str("forall[");
                    self.binder(binder, true);
                    self.out.push(']');
                }
            }
            Declaration::Implication { lhs } => {
                self.print(lhs, OR, false);
                self.out.push_str(self.sym(" =>", " ⇒"));
            }
            Declaration::Let { name, replacement } => {
                self.out.push_str("let ");
                self.out.push_str(name);
                self.out.push_str(" = ");
                self.print(replacement, IMPLIES, true);
            }
            Declaration::Sequence { items } => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        self.out.push(' ');
                    }
                    self.declaration(item);
                }
            }
        }
    }
}
