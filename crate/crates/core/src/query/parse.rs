use super::{Atom, CqNeq, QueryError, UcqNeq};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Constant(String),
    LParen,
    RParen,
    Comma,
    And,
    Or,
    Neq,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, QueryError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((start, Token::LParen));
                i += 1;
            }
            ')' => {
                out.push((start, Token::RParen));
                i += 1;
            }
            ',' => {
                out.push((start, Token::Comma));
                i += 1;
            }
            '&' => {
                out.push((start, Token::And));
                i += 1;
            }
            '|' => {
                out.push((start, Token::Or));
                i += 1;
            }
            '!' if bytes.get(i + 1) == Some(&b'=') => {
                out.push((start, Token::Neq));
                i += 2;
            }
            '"' | '\'' => {
                let end = text[i + 1..]
                    .find(c)
                    .map(|e| i + 1 + e)
                    .ok_or(QueryError::SyntaxError {
                        pos: start,
                        message: "unterminated string".into(),
                    })?;
                out.push((start, Token::Constant(text[start..=end].to_string())));
                i = end + 1;
            }
            c if c.is_ascii_digit() => {
                while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push((start, Token::Constant(text[start..i].to_string())));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Token::Ident(text[start..i].to_string())));
            }
            other => {
                return Err(QueryError::SyntaxError {
                    pos: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, QueryError> {
        Err(QueryError::SyntaxError {
            pos: self.offset(),
            message: message.into(),
        })
    }

    fn ident(&mut self, what: &str) -> Result<String, QueryError> {
        match self.tokens.get(self.pos).cloned() {
            Some((_, Token::Ident(s))) => {
                self.pos += 1;
                Ok(s)
            }
            Some((_, Token::Constant(c))) => Err(QueryError::ConstantNotAllowed(c)),
            _ => self.error(format!("expected {what}")),
        }
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<(), QueryError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn disjunct(&mut self) -> Result<CqNeq, QueryError> {
        let mut atoms: Vec<(String, Vec<String>)> = Vec::new();
        let mut diseqs: Vec<(String, String)> = Vec::new();
        loop {
            let name = self.ident("an atom or a disequality")?;
            match self.peek() {
                Some(Token::LParen) => {
                    self.pos += 1;
                    let mut args = vec![self.ident("a variable")?];
                    while self.peek() == Some(&Token::Comma) {
                        self.pos += 1;
                        args.push(self.ident("a variable")?);
                    }
                    self.expect(Token::RParen, "`)`")?;
                    atoms.push((name, args));
                }
                Some(Token::Neq) => {
                    self.pos += 1;
                    let other = self.ident("a variable")?;
                    diseqs.push((name, other));
                }
                _ => return self.error("expected `(` or `!=`"),
            }
            if self.peek() == Some(&Token::And) {
                self.pos += 1;
            } else {
                break;
            }
        }
        let atom_refs: Vec<(&str, Vec<&str>)> = atoms
            .iter()
            .map(|(r, a)| (r.as_str(), a.iter().map(String::as_str).collect()))
            .collect();
        let atom_slices: Vec<(&str, &[&str])> =
            atom_refs.iter().map(|(r, a)| (*r, a.as_slice())).collect();
        let diseq_refs: Vec<(&str, &str)> = diseqs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        CqNeq::new(&atom_slices, &diseq_refs)
    }
}

/// Parses the textual query syntax described in the module documentation.
pub fn parse_query(text: &str) -> Result<UcqNeq, QueryError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let mut disjuncts = vec![p.disjunct()?];
    while p.peek() == Some(&Token::Or) {
        p.pos += 1;
        disjuncts.push(p.disjunct()?);
    }
    if p.pos != p.tokens.len() {
        return p.error("trailing input");
    }
    let q = UcqNeq { disjuncts };
    check_arities(&q)?;
    Ok(q)
}

pub(crate) fn check_arities(q: &UcqNeq) -> Result<(), QueryError> {
    let mut seen: Vec<(&str, usize)> = Vec::new();
    for atom in q.disjuncts.iter().flat_map(|d| &d.atoms) {
        let Atom { relation, vars } = atom;
        match seen.iter().find(|(r, _)| r == relation) {
            Some((_, a)) if *a != vars.len() => return Err(QueryError::ArityConflict(relation.clone())),
            Some(_) => {}
            None => seen.push((relation, vars.len())),
        }
    }
    Ok(())
}
