use thiserror::Error;

use super::formula::{AtomTable, Formula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaParseError {
    #[error("{line}:{col}: unknown token `{token}`")]
    UnknownToken {
        line: usize,
        col: usize,
        token: String,
    },
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: atom `{name}` is not declared")]
    UndeclaredAtom {
        line: usize,
        col: usize,
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    True,
    False,
    Ident(String),
    Bang,
    Amp,
    Bar,
    Ex,
    Ax,
    E,
    A,
    U,
    TildeU,
    LBrack,
    RBrack,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Ident(s) => format!("atom `{s}`"),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Ex => "`EX`".into(),
            Tok::Ax => "`AX`".into(),
            Tok::E => "`E`".into(),
            Tok::A => "`A`".into(),
            Tok::U => "`U`".into(),
            Tok::TildeU => "`~U`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, FormulaParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '!' => Some(Tok::Bang),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Bar),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, line: l0, col: c0 });
            i += 1;
            col += 1;
            continue;
        }
        if c == '~' {
            if chars.get(i + 1) == Some(&'U')
                && !chars.get(i + 2).is_some_and(|d| d.is_ascii_alphanumeric() || *d == '_')
            {
                out.push(Spanned { tok: Tok::TildeU, line: l0, col: c0 });
                i += 2;
                col += 2;
                continue;
            }
            return Err(FormulaParseError::UnknownToken { line: l0, col: c0, token: "~".into() });
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "true" => Tok::True,
                "false" => Tok::False,
                "EX" => Tok::Ex,
                "AX" => Tok::Ax,
                "E" => Tok::E,
                "A" => Tok::A,
                "U" => Tok::U,
                w if w.starts_with(|ch: char| ch.is_ascii_lowercase()) => {
                    if w.chars().all(|ch| ch.is_ascii_lowercase() || ch.is_ascii_digit() || ch == '_') {
                        Tok::Ident(word)
                    } else {
                        return Err(FormulaParseError::UnknownToken { line: l0, col: c0, token: word });
                    }
                }
                _ => return Err(FormulaParseError::UnknownToken { line: l0, col: c0, token: word }),
            };
            out.push(Spanned { tok, line: l0, col: c0 });
            continue;
        }
        return Err(FormulaParseError::UnknownToken { line: l0, col: c0, token: c.to_string() });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

enum Atoms<'a> {
    Extend(&'a mut AtomTable),
    Fixed(&'a AtomTable),
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    atoms: Atoms<'a>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> &Spanned {
        let t = &self.toks[self.pos];
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: String) -> FormulaParseError {
        let t = &self.toks[self.pos];
        FormulaParseError::Syntax { line: t.line, col: t.col, message }
    }

    fn expect(&mut self, want: Tok) -> Result<(), FormulaParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn or(&mut self) -> Result<Formula, FormulaParseError> {
        let mut l = self.and()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let r = self.and()?;
            l = Formula::or(l, r);
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<Formula, FormulaParseError> {
        let mut l = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let r = self.unary()?;
            l = Formula::and(l, r);
        }
        Ok(l)
    }

    fn unary(&mut self) -> Result<Formula, FormulaParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ex => {
                self.bump();
                Ok(Formula::ex(self.unary()?))
            }
            Tok::Ax => {
                self.bump();
                Ok(Formula::ax(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, FormulaParseError> {
        let t = self.bump();
        let (line, col) = (t.line, t.col);
        match t.tok.clone() {
            Tok::True => Ok(Formula::True),
            Tok::False => Ok(Formula::False),
            Tok::Ident(name) => {
                let id = match &mut self.atoms {
                    Atoms::Extend(table) => table.intern(&name),
                    Atoms::Fixed(table) => table
                        .get(&name)
                        .ok_or(FormulaParseError::UndeclaredAtom { line, col, name })?,
                };
                Ok(Formula::Atom(id))
            }
            Tok::LParen => {
                let f = self.or()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            q @ (Tok::E | Tok::A) => {
                self.expect(Tok::LBrack)?;
                let l = self.or()?;
                let tilde = match self.peek() {
                    Tok::U => false,
                    Tok::TildeU => true,
                    other => {
                        return Err(self.error_here(format!(
                            "expected `U` or `~U`, found {}",
                            other.describe()
                        )))
                    }
                };
                self.bump();
                let r = self.or()?;
                self.expect(Tok::RBrack)?;
                Ok(match (q == Tok::E, tilde) {
                    (true, false) => Formula::eu(l, r),
                    (false, false) => Formula::au(l, r),
                    (true, true) => Formula::eut(l, r),
                    (false, true) => Formula::aut(l, r),
                })
            }
            other => Err(FormulaParseError::Syntax {
                line,
                col,
                message: format!("expected a formula, found {}", other.describe()),
            }),
        }
    }
}

fn run(text: &str, atoms: Atoms<'_>) -> Result<Formula, FormulaParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, atoms };
    let f = p.or()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.peek().describe())));
    }
    Ok(f)
}

/// Parses a formula, numbering atoms in order of first occurrence.
pub fn parse_formula(text: &str) -> Result<(Formula, AtomTable), FormulaParseError> {
    let mut table = AtomTable::new();
    let f = run(text, Atoms::Extend(&mut table))?;
    Ok((f, table))
}

/// Parses a formula, adding unseen atoms to the end of `table`.
pub fn parse_formula_with(text: &str, table: &mut AtomTable) -> Result<Formula, FormulaParseError> {
    run(text, Atoms::Extend(table))
}

/// Parses a formula whose atoms must all appear in `table`.
pub fn parse_formula_in(text: &str, table: &AtomTable) -> Result<Formula, FormulaParseError> {
    run(text, Atoms::Fixed(table))
}
