//! Recursive-descent parser for the polynomial grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' uint)?
//! atom   := number ['i'] | 'i' | 'z' digit | '(' expr ')'
//! number := decimal ['/' decimal]
//! ```
//!
//! Literals are read exactly as rationals and only then converted to the
//! requested coefficient backend.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use super::coeff::Coeff;
use super::poly::{HomogeneousPoly, Polynomial};
use super::PolyError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num { value: BigRational, imag: bool },
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    _src: &'a str,
}

fn syntax(pos: usize, msg: impl Into<String>) -> PolyError {
    PolyError::Syntax {
        pos,
        msg: msg.into(),
    }
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.char_indices().collect(),
            pos: 0,
            _src: src,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars
            .get(self.pos)
            .map(|&(o, _)| o)
            .unwrap_or_else(|| {
                self.chars
                    .last()
                    .map(|&(o, c)| o + c.len_utf8())
                    .unwrap_or(0)
            })
    }

    fn digits(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.pos += 1;
        }
        s
    }

    /// `digits ['.' digits] [('e'|'E') ['+'|'-'] digits]`
    fn decimal(&mut self) -> Result<BigRational, PolyError> {
        let start = self.offset();
        let int_part = self.digits();
        let mut frac_part = String::new();
        if self.peek() == Some('.') {
            self.pos += 1;
            frac_part = self.digits();
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(syntax(start, "expected a number"));
        }
        let mut exp: i64 = 0;
        if matches!(self.peek(), Some('e' | 'E')) {
            self.pos += 1;
            let sign = match self.peek() {
                Some('-') => {
                    self.pos += 1;
                    -1
                }
                Some('+') => {
                    self.pos += 1;
                    1
                }
                _ => 1,
            };
            let e = self.digits();
            if e.is_empty() {
                return Err(syntax(
                    self.offset(),
                    "malformed exponent in numeric literal",
                ));
            }
            exp = sign
                * e.parse::<i64>()
                    .map_err(|_| syntax(start, "exponent too large"))?;
        }
        let mantissa: BigInt = format!("{int_part}{frac_part}")
            .parse()
            .unwrap_or_else(|_| BigInt::zero());
        exp -= frac_part.len() as i64;
        if exp.unsigned_abs() > 4000 {
            return Err(syntax(start, "exponent out of range"));
        }
        let ten = BigInt::from(10);
        let scale: BigInt = Pow::pow(&ten, exp.unsigned_abs());
        Ok(if exp >= 0 {
            BigRational::from_integer(mantissa * scale)
        } else {
            BigRational::new(mantissa, scale)
        })
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, PolyError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            let at = self.offset();
            if c.is_whitespace() {
                self.pos += 1;
                continue;
            }
            let tok = match c {
                '+' => {
                    self.pos += 1;
                    Tok::Plus
                }
                '-' => {
                    self.pos += 1;
                    Tok::Minus
                }
                '*' => {
                    self.pos += 1;
                    Tok::Star
                }
                '^' => {
                    self.pos += 1;
                    Tok::Caret
                }
                '(' => {
                    self.pos += 1;
                    Tok::LParen
                }
                ')' => {
                    self.pos += 1;
                    Tok::RParen
                }
                'i' => {
                    self.pos += 1;
                    Tok::Num {
                        value: BigRational::one(),
                        imag: true,
                    }
                }
                'z' => {
                    self.pos += 1;
                    let d = self.digits();
                    if d.is_empty() {
                        return Err(syntax(at, "expected variable index after 'z'"));
                    }
                    let k: usize = d
                        .parse()
                        .map_err(|_| syntax(at, "variable index too large"))?;
                    Tok::Var(k)
                }
                c if c.is_ascii_digit() || c == '.' => {
                    let mut value = self.decimal()?;
                    if self.peek() == Some('/') {
                        self.pos += 1;
                        let den_at = self.offset();
                        let den = self.decimal()?;
                        if den.is_zero() {
                            return Err(syntax(den_at, "zero denominator"));
                        }
                        value /= den;
                    }
                    let imag = if self.peek() == Some('i') {
                        self.pos += 1;
                        true
                    } else {
                        false
                    };
                    Tok::Num { value, imag }
                }
                other => return Err(syntax(at, format!("unexpected character {other:?}"))),
            };
            out.push((at, tok));
        }
        Ok(out)
    }
}

struct Parser<C> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    num_vars: usize,
    _c: std::marker::PhantomData<C>,
}

impl<C: Coeff> Parser<C> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|&(o, _)| o).unwrap_or(self.end)
    }

    fn expr(&mut self) -> Result<Polynomial<C>, PolyError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?)?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial<C>, PolyError> {
        let mut acc = self.unary()?;
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            acc = acc.mul(&self.unary()?)?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial<C>, PolyError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial<C>, PolyError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let at = self.offset();
            match self.peek().cloned() {
                Some(Tok::Num { value, imag: false }) if value.is_integer() => {
                    self.pos += 1;
                    let k: u32 = value
                        .to_integer()
                        .try_into()
                        .map_err(|_| syntax(at, "exponent must be a small nonnegative integer"))?;
                    if k > 64 {
                        return Err(syntax(at, "exponent too large"));
                    }
                    Ok(base.pow(k))
                }
                _ => Err(syntax(at, "expected nonnegative integer exponent")),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial<C>, PolyError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num { value, imag }) => {
                self.pos += 1;
                let zero = BigRational::zero();
                let c = if imag {
                    C::from_parts(&zero, &value)
                } else {
                    C::from_parts(&value, &zero)
                };
                Ok(Polynomial::constant(self.num_vars, c))
            }
            Some(Tok::Var(k)) => {
                self.pos += 1;
                Polynomial::var(self.num_vars, k)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(syntax(self.offset(), "expected ')'")),
                }
            }
            Some(t) => Err(syntax(at, format!("unexpected token {t:?}"))),
            None => Err(syntax(at, "unexpected end of input")),
        }
    }
}

/// Parses an arbitrary (not necessarily homogeneous) polynomial.
pub fn parse_polynomial<C: Coeff>(text: &str, num_vars: usize) -> Result<Polynomial<C>, PolyError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser::<C> {
        toks,
        pos: 0,
        end: text.len(),
        num_vars,
        _c: std::marker::PhantomData,
    };
    if p.toks.is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let out = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(syntax(p.offset(), "trailing input"));
    }
    Ok(out)
}

/// Parses a homogeneous polynomial in the requested backend.
pub fn parse_homogeneous<C: Coeff>(
    text: &str,
    num_vars: usize,
) -> Result<HomogeneousPoly<C>, PolyError> {
    let p = parse_polynomial::<C>(text, num_vars)?;
    {
        let mut degs = p.terms().map(|(e, _)| e.iter().sum::<u32>());
        if let Some(first) = degs.next() {
            if let Some(bad) = degs.find(|&d| d != first) {
                return Err(PolyError::Inhomogeneous {
                    expected: first,
                    found: bad,
                });
            }
        }
    }
    HomogeneousPoly::from_poly(p)
}

/// Parses and checks the degree; the zero polynomial is accepted at any degree.
pub fn parse_homogeneous_with_degree<C: Coeff>(
    text: &str,
    num_vars: usize,
    degree: u32,
) -> Result<HomogeneousPoly<C>, PolyError> {
    let p = parse_homogeneous::<C>(text, num_vars)?;
    if p.is_zero() {
        return Ok(HomogeneousPoly::zero(num_vars, degree));
    }
    if p.degree() != degree {
        return Err(PolyError::DegreeMismatch {
            expected: degree,
            got: p.degree(),
        });
    }
    Ok(p)
}
