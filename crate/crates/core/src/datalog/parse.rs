use super::ast::{Atom, Bound, Literal, Program, Rule, Term};
use super::check::check_safety;
use super::DatalogError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Turnstile,
    Bang,
    Le,
    Minus,
    Eof,
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("`{w}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Turnstile => "`:-`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Le => "`<=`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Tokens plus the goal named by a `% goal: G` directive, if present.
fn lex(text: &str) -> Result<(Vec<Spanned>, Option<String>), DatalogError> {
    let mut toks = Vec::new();
    let mut goal = None;
    for (li, line_text) in text.lines().enumerate() {
        let line = li + 1;
        let chars: Vec<char> = line_text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '%' {
                let rest: String = chars[i + 1..].iter().collect();
                if let Some(name) = rest.trim().strip_prefix("goal:") {
                    let name = name.trim();
                    if name.is_empty() || !name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                        return Err(DatalogError::Syntax {
                            line,
                            col,
                            message: format!("invalid goal directive `{}`", rest.trim()),
                        });
                    }
                    goal = Some(name.to_string());
                }
                break;
            }
            let (tok, width) = match c {
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                ',' => (Tok::Comma, 1),
                '.' => (Tok::Dot, 1),
                '!' => (Tok::Bang, 1),
                '-' => (Tok::Minus, 1),
                ':' if chars.get(i + 1) == Some(&'-') => (Tok::Turnstile, 2),
                '<' if chars.get(i + 1) == Some(&'=') => (Tok::Le, 2),
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let start = i;
                    let mut j = i;
                    while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                        j += 1;
                    }
                    (Tok::Word(chars[start..j].iter().collect()), j - start)
                }
                other => {
                    return Err(DatalogError::Syntax { line, col, message: format!("unexpected character `{other}`") })
                }
            };
            toks.push(Spanned { tok, line, col });
            i += width;
        }
    }
    let (line, col) = toks.last().map_or((1, 1), |t| (t.line, t.col + 1));
    toks.push(Spanned { tok: Tok::Eof, line, col });
    Ok((toks, goal))
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn err(&self, message: String) -> DatalogError {
        let t = &self.toks[self.pos];
        DatalogError::Syntax { line: t.line, col: t.col, message }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), DatalogError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {}, found {}", describe(&want), describe(self.peek()))))
        }
    }

    fn rule(&mut self) -> Result<Rule, DatalogError> {
        let head = self.atom()?;
        let mut body = Vec::new();
        if *self.peek() == Tok::Turnstile {
            self.bump();
            loop {
                body.push(self.literal()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Dot)?;
        Ok(Rule { head, body })
    }

    fn literal(&mut self) -> Result<Literal, DatalogError> {
        if *self.peek() == Tok::Bang {
            self.bump();
            return Ok(Literal::Neg(self.atom()?));
        }
        if *self.peek2() == Tok::Le {
            let Tok::Word(v) = self.peek().clone() else {
                return Err(self.err(format!("expected a variable, found {}", describe(self.peek()))));
            };
            if !is_var(&v) {
                return Err(self.err(format!("`{v}` is not a variable")));
            }
            self.bump();
            self.bump();
            let bound = match self.bump() {
                Tok::Word(w) if w == "cmax" => Bound::CMax,
                Tok::Word(w) if w.chars().all(|c| c.is_ascii_digit()) => Bound::Int(self.int(&w)?),
                other => {
                    self.pos -= 1;
                    return Err(self.err(format!("expected `cmax` or an integer, found {}", describe(&other))));
                }
            };
            return Ok(Literal::Le(v, bound));
        }
        Ok(Literal::Pos(self.atom()?))
    }

    fn int(&self, w: &str) -> Result<u32, DatalogError> {
        w.parse().map_err(|_| self.err(format!("integer `{w}` out of range")))
    }

    fn atom(&mut self) -> Result<Atom, DatalogError> {
        let pred = match self.peek().clone() {
            Tok::Word(w) => w,
            other => return Err(self.err(format!("expected a predicate, found {}", describe(&other)))),
        };
        self.bump();
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                args.push(self.term()?);
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    other => {
                        self.pos -= 1;
                        return Err(self.err(format!("expected `,` or `)`, found {}", describe(&other))));
                    }
                }
            }
        }
        Ok(Atom { pred, args })
    }

    fn term(&mut self) -> Result<Term, DatalogError> {
        let w = match self.peek().clone() {
            Tok::Word(w) => w,
            other => return Err(self.err(format!("expected a term, found {}", describe(&other)))),
        };
        if w.chars().all(|c| c.is_ascii_digit()) {
            let n = self.int(&w)?;
            self.bump();
            return Ok(Term::Int(n));
        }
        if is_var(&w) {
            self.bump();
            if *self.peek() == Tok::Minus {
                self.bump();
                return match self.peek().clone() {
                    Tok::Word(k) if k.chars().all(|c| c.is_ascii_digit()) => {
                        let k = self.int(&k)?;
                        self.bump();
                        Ok(Term::Minus(w, k))
                    }
                    other => Err(self.err(format!("expected an integer after `-`, found {}", describe(&other)))),
                };
            }
            return Ok(Term::Var(w));
        }
        if w.starts_with(|c: char| c.is_ascii_lowercase()) {
            self.bump();
            return Ok(Term::Const(w));
        }
        Err(self.err(format!("`{w}` is neither a variable, a constant nor an integer")))
    }
}

fn is_var(w: &str) -> bool {
    w.starts_with(|c: char| c.is_ascii_uppercase())
}

/// Parses a program and checks rule safety.
///
/// Without a `% goal:` directive the goal is `G` if some rule defines it,
/// otherwise the head of the first rule.
pub fn parse_program(text: &str) -> Result<Program, DatalogError> {
    let (toks, goal) = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let mut rules = Vec::new();
    while *p.peek() != Tok::Eof {
        rules.push(p.rule()?);
    }
    let goal = goal.unwrap_or_else(|| {
        if rules.iter().any(|r| r.head.pred == "G") {
            "G".to_string()
        } else {
            rules.first().map_or_else(|| "G".to_string(), |r| r.head.pred.clone())
        }
    });
    let program = Program { rules, goal };
    check_safety(&program)?;
    Ok(program)
}
