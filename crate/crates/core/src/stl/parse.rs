//! Text syntax for STL specifications.
//!
//! ```text
//! formula := disj ('->' formula)?
//! disj    := conj (('or' | '|' | '||' | '∨') conj)*
//! conj    := until (('and' | '&' | '&&' | '∧') until)*
//! until   := unary ('U' interval? unary)*
//! unary   := ('not' | '!' | '¬') unary | ('G' | '□') interval? unary
//!          | ('F' | '◇') interval? unary | 'true' | 'false' | atom | '(' formula ')'
//! interval:= '[' number ',' (number | 'inf') (']' | ')')
//! atom    := linexpr ('<' | '>' | '<=' | '>=') linexpr
//! ```
//!
//! Linear expressions allow `+ - * /` and parentheses as long as the result stays affine.

use super::{Affine, Formula, Interval, StlError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Lt,
    Gt,
    Le,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Or,
    And,
    Not,
    Implies,
    Always,
    Eventually,
    Until,
    True,
    False,
    Inf,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(x) => format!("number {x}"),
        Tok::Ident(s) => format!("identifier '{s}'"),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, StlError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let err = |pos: usize, msg: String| StlError::Parse { pos, msg };
    while i < chars.len() {
        let (pos, c) = chars[i];
        let peek = chars.get(i + 1).map(|p| p.1);
        let mut step = 1;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '-' if peek == Some('>') => {
                step = 2;
                Tok::Implies
            }
            '-' => Tok::Minus,
            '→' => Tok::Implies,
            '<' if peek == Some('=') => {
                step = 2;
                Tok::Le
            }
            '>' if peek == Some('=') => {
                step = 2;
                Tok::Ge
            }
            '≤' => Tok::Le,
            '≥' => Tok::Ge,
            '<' => Tok::Lt,
            '>' => Tok::Gt,
            '|' => {
                if peek == Some('|') {
                    step = 2;
                }
                Tok::Or
            }
            '&' => {
                if peek == Some('&') {
                    step = 2;
                }
                Tok::And
            }
            '∨' => Tok::Or,
            '∧' => Tok::And,
            '!' | '¬' => Tok::Not,
            '□' => Tok::Always,
            '◇' => Tok::Eventually,
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                let mut seen_exp = false;
                while j < chars.len() {
                    let d = chars[j].1;
                    let prev = if j > i { chars[j - 1].1 } else { ' ' };
                    if d.is_ascii_digit() || d == '.' {
                        j += 1;
                    } else if (d == 'e' || d == 'E') && !seen_exp {
                        seen_exp = true;
                        j += 1;
                    } else if (d == '+' || d == '-') && (prev == 'e' || prev == 'E') {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let end = chars.get(j).map_or(text.len(), |p| p.0);
                let s = &text[pos..end];
                let v: f64 = s.parse().map_err(|_| err(pos, format!("invalid number '{s}'")))?;
                step = j - i;
                Tok::Num(v)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_') {
                    j += 1;
                }
                let end = chars.get(j).map_or(text.len(), |p| p.0);
                step = j - i;
                match &text[pos..end] {
                    "or" => Tok::Or,
                    "and" => Tok::And,
                    "not" => Tok::Not,
                    "G" => Tok::Always,
                    "F" => Tok::Eventually,
                    "U" => Tok::Until,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "inf" => Tok::Inf,
                    s => Tok::Ident(s.to_string()),
                }
            }
            other => return Err(err(pos, format!("unexpected character '{other}'"))),
        };
        out.push((tok, pos));
        i += step;
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [String],
}

type PResult<T> = Result<T, StlError>;

fn further(a: StlError, b: StlError) -> StlError {
    let p = |e: &StlError| match e {
        StlError::Parse { pos, .. } | StlError::UnknownVariable { pos, .. } | StlError::BadInterval { pos, .. } => *pos,
        _ => 0,
    };
    if p(&b) > p(&a) {
        b
    } else {
        a
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(StlError::Parse { pos: self.offset(), msg: msg.into() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.disj()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> PResult<Formula> {
        let mut f = self.conj()?;
        while *self.peek() == Tok::Or {
            self.bump();
            f = Formula::or(f, self.conj()?);
        }
        Ok(f)
    }

    fn conj(&mut self) -> PResult<Formula> {
        let mut f = self.until()?;
        while *self.peek() == Tok::And {
            self.bump();
            f = Formula::and(f, self.until()?);
        }
        Ok(f)
    }

    fn until(&mut self) -> PResult<Formula> {
        let mut f = self.unary()?;
        while *self.peek() == Tok::Until {
            self.bump();
            let i = self.opt_interval()?;
            f = Formula::until(i, f, self.unary()?);
        }
        Ok(f)
    }

    fn opt_interval(&mut self) -> PResult<Interval> {
        if *self.peek() != Tok::LBrack {
            return Ok(Interval::unbounded());
        }
        let at = self.offset();
        self.bump();
        let lo = self.number()?;
        self.expect(Tok::Comma, "','")?;
        let hi = if *self.peek() == Tok::Inf {
            self.bump();
            f64::INFINITY
        } else {
            self.number()?
        };
        match self.peek() {
            Tok::RBrack => {}
            Tok::RParen if hi == f64::INFINITY => {}
            _ => return self.error(format!("expected ']', found {}", describe(self.peek()))),
        }
        self.bump();
        Interval::new(lo, hi).map_err(|e| StlError::BadInterval { pos: at, msg: e.to_string() })
    }

    fn number(&mut self) -> PResult<f64> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(if neg { -x } else { x })
            }
            t => self.error(format!("expected number, found {}", describe(&t))),
        }
    }

    fn unary(&mut self) -> PResult<Formula> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Always => {
                self.bump();
                let i = self.opt_interval()?;
                Ok(Formula::always(i, self.unary()?))
            }
            Tok::Eventually => {
                self.bump();
                let i = self.opt_interval()?;
                Ok(Formula::eventually(i, self.unary()?))
            }
            Tok::True => {
                self.bump();
                Ok(Formula::top())
            }
            Tok::False => {
                self.bump();
                Ok(Formula::Bottom)
            }
            _ => {
                let start = self.pos;
                match self.atom() {
                    Ok(f) => Ok(f),
                    Err(atom_err) => {
                        self.pos = start;
                        if *self.peek() != Tok::LParen {
                            return Err(atom_err);
                        }
                        self.bump();
                        let inner = self.formula().and_then(|f| {
                            self.expect(Tok::RParen, "')'")?;
                            Ok(f)
                        });
                        inner.map_err(|e| further(atom_err, e))
                    }
                }
            }
        }
    }

    fn atom(&mut self) -> PResult<Formula> {
        let lhs = self.linexpr()?;
        let op = self.peek().clone();
        if !matches!(op, Tok::Lt | Tok::Gt | Tok::Le | Tok::Ge) {
            return self.error(format!("expected comparison, found {}", describe(&op)));
        }
        self.bump();
        let rhs = self.linexpr()?;
        let f = match op {
            Tok::Lt => Formula::atom(rhs.sub(&lhs)),
            Tok::Gt => Formula::atom(lhs.sub(&rhs)),
            Tok::Le => Formula::not(Formula::atom(lhs.sub(&rhs))),
            Tok::Ge => Formula::not(Formula::atom(rhs.sub(&lhs))),
            _ => unreachable!(),
        };
        Ok(f)
    }

    fn linexpr(&mut self) -> PResult<Affine> {
        let mut e = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    e = e.add(&self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    e = e.sub(&self.term()?);
                }
                _ => return Ok(e),
            }
        }
    }

    fn term(&mut self) -> PResult<Affine> {
        let mut e = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    let at = self.offset();
                    self.bump();
                    let r = self.factor()?;
                    e = match (e.is_constant(), r.is_constant()) {
                        (true, _) => r.scale(e.constant),
                        (_, true) => e.scale(r.constant),
                        _ => return Err(StlError::Parse { pos: at, msg: "product of variables is not affine".into() }),
                    };
                }
                Tok::Slash => {
                    let at = self.offset();
                    self.bump();
                    let r = self.factor()?;
                    if !r.is_constant() {
                        return Err(StlError::Parse { pos: at, msg: "division by a variable is not affine".into() });
                    }
                    if r.constant == 0.0 {
                        return Err(StlError::Parse { pos: at, msg: "division by zero".into() });
                    }
                    e = e.scale(1.0 / r.constant);
                }
                _ => return Ok(e),
            }
        }
    }

    fn factor(&mut self) -> PResult<Affine> {
        let at = self.offset();
        if matches!(self.peek(), Tok::Eof) {
            return self.error("expected expression, found end of input");
        }
        match self.bump() {
            Tok::Num(x) => Ok(Affine::constant(x)),
            Tok::Ident(name) => match self.vars.iter().position(|v| *v == name) {
                Some(ch) => Ok(Affine::var(ch)),
                None => Err(StlError::UnknownVariable { name, pos: at }),
            },
            Tok::Minus => Ok(self.factor()?.scale(-1.0)),
            Tok::Plus => self.factor(),
            Tok::LParen => {
                let e = self.linexpr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            t => {
                self.pos -= 1;
                self.error(format!("expected expression, found {}", describe(&t)))
            }
        }
    }
}

/// Parses `text`, resolving variable names to channel indices by their position in `vars`.
pub fn parse(text: &str, vars: &[String]) -> Result<Formula, StlError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, vars };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {}", describe(p.peek())));
    }
    Ok(f)
}
