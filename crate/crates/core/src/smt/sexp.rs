//! Minimal s-expression reader for solver output.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    /// A symbol or numeral. Quoted symbols lose their bars.
    Atom(String),
    /// A string literal, without its quotes.
    Str(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("s-expression error at byte {pos}: {msg}")]
pub struct SexpError {
    pub pos: usize,
    pub msg: String,
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(xs) => Some(xs),
            _ => None,
        }
    }

    /// `true` when this is a list whose head is the atom `head`.
    pub fn is_call(&self, head: &str) -> bool {
        matches!(self.list(), Some([Sexp::Atom(h), ..]) if h == head)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => write!(f, "{a}"),
            Sexp::Str(s) => write!(f, "{s:?}"),
            Sexp::List(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Reads every top-level s-expression of `text`. `;` starts a comment.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SexpError> {
    let bytes = text.as_bytes();
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut i = 0;
    let err = |pos, msg: &str| SexpError {
        pos,
        msg: msg.to_string(),
    };
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'(' => {
                stack.push(Vec::new());
                i += 1;
            }
            b')' => {
                if stack.len() == 1 {
                    return Err(err(i, "unbalanced ')'"));
                }
                let done = stack.pop().unwrap();
                stack.last_mut().unwrap().push(Sexp::List(done));
                i += 1;
            }
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'|' => {
                let end = text[i + 1..].find('|').ok_or_else(|| err(i, "unterminated '|'"))?;
                stack
                    .last_mut()
                    .unwrap()
                    .push(Sexp::Atom(text[i + 1..i + 1 + end].to_string()));
                i += end + 2;
            }
            b'"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match bytes.get(j) {
                        None => return Err(err(i, "unterminated string")),
                        Some(b'"') if bytes.get(j + 1) == Some(&b'"') => {
                            s.push('"');
                            j += 2;
                        }
                        Some(b'"') => break,
                        Some(_) => {
                            let ch = text[j..].chars().next().unwrap();
                            s.push(ch);
                            j += ch.len_utf8();
                        }
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Str(s));
                i = j + 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'(' | b')' | b';' | b'|' | b'"')
                {
                    i += 1;
                }
                stack
                    .last_mut()
                    .unwrap()
                    .push(Sexp::Atom(text[start..i].to_string()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(err(bytes.len(), "unbalanced '('"));
    }
    Ok(stack.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_quotes() {
        let xs = parse_all("sat\n((define-fun |k1#2| () Int 3)) ; done\n(error \"a \"\"b\"\"\")").unwrap();
        assert_eq!(xs.len(), 3);
        assert_eq!(xs[0], Sexp::Atom("sat".into()));
        let def = &xs[1].list().unwrap()[0];
        assert!(def.is_call("define-fun"));
        assert_eq!(def.list().unwrap()[1], Sexp::Atom("k1#2".into()));
        assert_eq!(xs[2].list().unwrap()[1], Sexp::Str("a \"b\"".into()));
    }

    #[test]
    fn unbalanced_is_an_error() {
        assert!(parse_all("(a (b)").is_err());
        assert!(parse_all("a)").is_err());
    }
}
