//! Parser for the line-oriented flowgraph language.
//!
//! ```text
//! var k, i, n : int
//! array A : int[1]
//! node a start
//! node h target
//! edge a -> b : k := 0
//! edge c -> d : assume i < n
//! edge c -> g : assume !(i < n)
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use super::flowgraph::{Edge, Flowgraph, GraphError};
use super::program::{BinOp, CmpOp, Cond, Expr, Instruction, Int};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Semantic(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(Int),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
}

const SYMBOLS: &[&str] = &[
    "==>", ":=", "->", "==", "!=", "<=", ">=", "&&", "||", "<", ">", "!", "+", "-", "*", "/",
    "%", "(", ")", "[", "]", ",", ":",
];

fn lex(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[s..i].iter().collect()),
                col,
            });
        } else if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[s..i].iter().collect();
            let n = text.parse().map_err(|_| ParseError::Syntax {
                line: line_no,
                col,
                msg: format!("integer literal `{text}` is too large"),
            })?;
            out.push(Token { tok: Tok::Int(n), col });
        } else {
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) else {
                return Err(ParseError::Syntax {
                    line: line_no,
                    col,
                    msg: format!("unexpected character `{c}`"),
                });
            };
            i += sym.chars().count();
            out.push(Token { tok: Tok::Sym(sym), col });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl Parser {
    fn new(text: &str, line: usize) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(text, line)?,
            pos: 0,
            line,
            end_col: text.chars().count() + 1,
        })
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let col = self.toks.get(self.pos).map_or(self.end_col, |t| t.col);
        Err(ParseError::Syntax {
            line: self.line,
            col,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_kw(kw) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{kw}`"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected an identifier"),
        }
    }

    fn int(&mut self) -> Result<Int, ParseError> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.err("expected an integer"),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos < self.toks.len() {
            self.err("unexpected trailing input")
        } else {
            Ok(())
        }
    }

    fn cond(&mut self) -> Result<Cond, ParseError> {
        let lhs = self.disjunction()?;
        if self.eat_sym("==>") {
            let rhs = self.cond()?;
            return Ok(Cond::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Cond, ParseError> {
        let mut c = self.conjunction()?;
        while self.eat_sym("||") {
            let r = self.conjunction()?;
            c = Cond::Or(Box::new(c), Box::new(r));
        }
        Ok(c)
    }

    fn conjunction(&mut self) -> Result<Cond, ParseError> {
        let mut c = self.unary_cond()?;
        while self.eat_sym("&&") {
            let r = self.unary_cond()?;
            c = Cond::And(Box::new(c), Box::new(r));
        }
        Ok(c)
    }

    fn unary_cond(&mut self) -> Result<Cond, ParseError> {
        if self.eat_sym("!") {
            return Ok(Cond::not(self.unary_cond()?));
        }
        if self.at_kw("true") {
            self.pos += 1;
            return Ok(Cond::True);
        }
        if self.at_kw("false") {
            self.pos += 1;
            return Ok(Cond::False);
        }
        if self.at_sym("(") {
            let save = self.pos;
            self.pos += 1;
            if let Ok(c) = self.cond() {
                if self.eat_sym(")") && !self.at_expr_continuation() {
                    return Ok(c);
                }
            }
            self.pos = save;
        }
        self.comparison()
    }

    fn at_expr_continuation(&self) -> bool {
        matches!(self.peek(), Some(Tok::Sym(s)) if matches!(*s, "+" | "-" | "*" | "/" | "%" | "==" | "!=" | "<" | "<=" | ">" | ">="))
    }

    fn comparison(&mut self) -> Result<Cond, ParseError> {
        let a = self.expr()?;
        let op = match self.peek() {
            Some(Tok::Sym("==")) => CmpOp::Eq,
            Some(Tok::Sym("!=")) => CmpOp::Ne,
            Some(Tok::Sym("<")) => CmpOp::Lt,
            Some(Tok::Sym("<=")) => CmpOp::Le,
            Some(Tok::Sym(">")) => CmpOp::Gt,
            Some(Tok::Sym(">=")) => CmpOp::Ge,
            _ => return self.err("expected a comparison operator"),
        };
        self.pos += 1;
        let b = self.expr()?;
        Ok(Cond::cmp(op, a, b))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.term()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(e);
            };
            let r = self.term()?;
            e = Expr::bin(op, e, r);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.factor()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else if self.eat_sym("%") {
                BinOp::Mod
            } else {
                return Ok(e);
            };
            let r = self.factor()?;
            e = Expr::bin(op, e, r);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym("-") {
            return Ok(match self.factor()? {
                Expr::Int(n) => Expr::Int(-n),
                e => Expr::Neg(Box::new(e)),
            });
        }
        if self.eat_sym("(") {
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        if let Some(Tok::Int(_)) = self.peek() {
            return Ok(Expr::Int(self.int()?));
        }
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == "true" || s == "false") {
            return self.err("expected an expression");
        }
        let name = self.ident()?;
        let mut idx = Vec::new();
        while self.eat_sym("[") {
            idx.push(self.expr()?);
            while self.eat_sym(",") {
                idx.push(self.expr()?);
            }
            self.expect_sym("]")?;
        }
        Ok(if idx.is_empty() {
            Expr::Var(name)
        } else {
            Expr::Read(name, idx)
        })
    }

    fn instruction(&mut self) -> Result<Instruction, ParseError> {
        if self.at_kw("skip") {
            self.pos += 1;
            return Ok(Instruction::skip());
        }
        if self.at_kw("assume") {
            self.pos += 1;
            return Ok(Instruction::Assume(self.cond()?));
        }
        let target = self.ident()?;
        if self.at_sym("[") {
            return Err(GraphError::ArrayWrite(target).into());
        }
        self.expect_sym(":=")?;
        Ok(Instruction::Assign(target, self.expr()?))
    }
}

/// Parses a condition in the language's syntax, e.g. `n >= 20 && A[0] == 1`.
pub fn parse_cond(text: &str) -> Result<Cond, ParseError> {
    let mut p = Parser::new(text, 1)?;
    let c = p.cond()?;
    p.finish()?;
    Ok(c)
}

/// Parses and validates a flowgraph. Declarations may appear in any order.
pub fn parse_flowgraph(text: &str) -> Result<Flowgraph, ParseError> {
    let mut scalars = Vec::new();
    let mut arrays = BTreeMap::new();
    let mut edges = Vec::new();
    let mut start = None;
    let mut target = None;
    for (i, line) in text.lines().enumerate() {
        let mut p = Parser::new(line, i + 1)?;
        let Some(Tok::Ident(kw)) = p.peek().cloned() else {
            if p.peek().is_none() {
                continue;
            }
            return p.err("expected `var`, `array`, `node` or `edge`");
        };
        p.pos += 1;
        match kw.as_str() {
            "var" => {
                let mut names = vec![p.ident()?];
                while p.eat_sym(",") {
                    names.push(p.ident()?);
                }
                p.expect_sym(":")?;
                p.expect_kw("int")?;
                for n in names {
                    if scalars.contains(&n) || arrays.contains_key(&n) {
                        return Err(GraphError::DuplicateDeclaration(n).into());
                    }
                    scalars.push(n);
                }
            }
            "array" => {
                let mut names = vec![p.ident()?];
                while p.eat_sym(",") {
                    names.push(p.ident()?);
                }
                p.expect_sym(":")?;
                p.expect_kw("int")?;
                p.expect_sym("[")?;
                let dim = p.int()?;
                if dim < 1 {
                    return p.err("array dimension must be positive");
                }
                p.expect_sym("]")?;
                for n in names {
                    if scalars.contains(&n) || arrays.contains_key(&n) {
                        return Err(GraphError::DuplicateDeclaration(n).into());
                    }
                    arrays.insert(n, dim as usize);
                }
            }
            "node" => {
                let name = p.ident()?;
                let mut marked = false;
                while let Some(Tok::Ident(m)) = p.peek().cloned() {
                    let slot = match m.as_str() {
                        "start" => &mut start,
                        "target" => &mut target,
                        _ => return p.err("expected `start` or `target`"),
                    };
                    if slot.is_some() {
                        return Err(GraphError::DuplicateMark(if m == "start" {
                            "start"
                        } else {
                            "target"
                        })
                        .into());
                    }
                    *slot = Some(name.clone());
                    marked = true;
                    p.pos += 1;
                }
                if !marked {
                    return p.err("expected `start` or `target`");
                }
            }
            "edge" => {
                let from = p.ident()?;
                p.expect_sym("->")?;
                let to = p.ident()?;
                p.expect_sym(":")?;
                let instr = p.instruction()?;
                edges.push(Edge { from, to, instr });
            }
            _ => {
                p.pos -= 1;
                return p.err("expected `var`, `array`, `node` or `edge`");
            }
        }
        p.finish()?;
    }
    let start = start.ok_or(GraphError::MissingStart)?;
    let target = target.ok_or(GraphError::MissingTarget)?;
    Ok(Flowgraph::new(scalars, arrays, edges, start, target)?)
}
