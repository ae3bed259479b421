//! Sparse integral homogeneous forms and systems of forms.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exponent vector of a monomial.
///
/// Ordered graded-lexicographically: total degree first, then
/// lexicographically with `x1 > x2 > ...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A homogeneous polynomial with integer coefficients.
///
/// User-facing constructors reject the zero polynomial; it only appears as the
/// output of [`FormSystem::pencil_form`] for a degenerate pencil member.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Form {
    n_vars: usize,
    degree: u32,
    terms: BTreeMap<Monomial, BigInt>,
}

impl Form {
    /// Builds a form from `(exponents, coefficient)` pairs, merging repeated
    /// monomials and dropping zero coefficients.
    pub fn new(n_vars: usize, terms: impl IntoIterator<Item = (Vec<u32>, BigInt)>) -> Result<Form> {
        let form = Self::collect(n_vars, None, terms)?;
        if form.is_zero() {
            return Err(Error::ZeroForm);
        }
        Ok(form)
    }

    fn collect(
        n_vars: usize,
        degree: Option<u32>,
        terms: impl IntoIterator<Item = (Vec<u32>, BigInt)>,
    ) -> Result<Form> {
        if n_vars == 0 {
            return Err(Error::InvalidArgument("a form needs at least one variable".into()));
        }
        let mut degree = degree;
        let mut map: BTreeMap<Monomial, BigInt> = BTreeMap::new();
        for (exps, c) in terms {
            if exps.len() != n_vars {
                return Err(Error::DimensionMismatch { expected: n_vars, found: exps.len() });
            }
            let m = Monomial(exps);
            let deg = m.degree();
            match degree {
                None => degree = Some(deg),
                Some(d) if d != deg => return Err(Error::Inhomogeneous { expected: d, found: deg }),
                _ => {}
            }
            *map.entry(m).or_insert_with(BigInt::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        let degree = degree.unwrap_or(0);
        if degree == 0 && !map.is_empty() {
            return Err(Error::Inhomogeneous { expected: 1, found: 0 });
        }
        Ok(Form { n_vars, degree, terms: map })
    }

    /// The zero polynomial of the given shape.
    pub(crate) fn zero(n_vars: usize, degree: u32) -> Form {
        Form { n_vars, degree, terms: BTreeMap::new() }
    }

    /// Parses `term (('+'|'-') term)*` with `term = [int '*'] factor ('*' factor)*`
    /// and `factor = x<index> ['^' exponent]`. Whitespace is ignored.
    pub fn parse(text: &str, n_vars: usize) -> Result<Form> {
        Parser::new(text, n_vars).parse()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in canonical (descending graded-lex) order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter().rev()
    }

    pub fn coefficient(&self, exps: &[u32]) -> BigInt {
        self.terms.get(&Monomial(exps.to_vec())).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Largest absolute coefficient (0 for the zero form).
    pub fn height(&self) -> BigInt {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_else(BigInt::zero)
    }

    /// Sum of absolute coefficients.
    pub fn l1_norm(&self) -> BigInt {
        self.terms.values().map(|c| c.abs()).sum()
    }

    fn check_point(&self, x: &[BigInt]) -> Result<()> {
        if x.len() != self.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, found: x.len() });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[BigInt]) -> Result<BigInt> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[BigInt]) -> BigInt {
        let mut total = BigInt::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &e) in x.iter().zip(&m.0) {
                if e > 0 {
                    t *= num_traits::pow(xi.clone(), e as usize);
                }
            }
            total += t;
        }
        total
    }

    /// Vector of partial derivatives evaluated at `x`.
    pub fn gradient(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        self.check_point(x)?;
        let mut g = vec![BigInt::zero(); self.n_vars];
        for (m, c) in &self.terms {
            for (j, gj) in g.iter_mut().enumerate() {
                let ej = m.0[j];
                if ej == 0 {
                    continue;
                }
                let mut t = c * BigInt::from(ej);
                for (i, (xi, &e)) in x.iter().zip(&m.0).enumerate() {
                    let e = if i == j { e - 1 } else { e };
                    if e > 0 {
                        t *= num_traits::pow(xi.clone(), e as usize);
                    }
                }
                *gj += t;
            }
        }
        Ok(g)
    }

    /// The partial derivative `∂f/∂x_j` as a form of degree `d - 1`.
    /// Requires `d >= 2`; the result may be the zero form.
    pub fn partial_derivative(&self, j: usize) -> Result<Form> {
        if self.degree < 2 {
            return Err(Error::InvalidArgument("partial derivative form needs degree >= 2".into()));
        }
        if j >= self.n_vars {
            return Err(Error::VariableOutOfRange { index: j + 1, n_vars: self.n_vars });
        }
        let terms = self.terms.iter().filter(|(m, _)| m.0[j] > 0).map(|(m, c)| {
            let mut e = m.0.clone();
            let k = e[j];
            e[j] -= 1;
            (e, c * BigInt::from(k))
        });
        let mut f = Self::collect(self.n_vars, Some(self.degree - 1), terms)?;
        f.degree = self.degree - 1;
        Ok(f)
    }

    pub(crate) fn scaled_add(&mut self, other: &Form, factor: &BigInt) {
        debug_assert_eq!(self.n_vars, other.n_vars);
        for (m, c) in &other.terms {
            *self.terms.entry(m.clone()).or_insert_with(BigInt::zero) += c * factor;
        }
        self.terms.retain(|_, c| !c.is_zero());
    }

    /// Multiplies every coefficient by `-1`.
    pub fn negated(&self) -> Form {
        Form {
            n_vars: self.n_vars,
            degree: self.degree,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    /// Same polynomial viewed in `n_vars` variables where `map[j]` is the new
    /// index of old variable `j`.
    pub fn relabel(&self, n_vars: usize, map: &[usize]) -> Result<Form> {
        if map.len() != self.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, found: map.len() });
        }
        let terms = self.terms.iter().map(|(m, c)| {
            let mut e = vec![0u32; n_vars];
            for (j, &k) in m.0.iter().enumerate() {
                e[map[j]] += k;
            }
            (e, c.clone())
        });
        Self::collect(n_vars, Some(self.degree), terms)
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms().enumerate() {
            let neg = c.is_negative();
            match (idx, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let abs = c.abs();
            let mut first = true;
            if !abs.is_one() {
                write!(f, "{abs}")?;
                first = false;
            }
            for (j, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "x{}", j + 1)?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    n_vars: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, n_vars: usize) -> Self {
        Parser { text, bytes: text.as_bytes(), pos: 0, n_vars }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn digits(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.text[start..self.pos])
    }

    fn parse(mut self) -> Result<Form> {
        if self.n_vars == 0 {
            return Err(Error::InvalidArgument("a form needs at least one variable".into()));
        }
        let mut terms = Vec::new();
        let mut sign = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -1
            }
            Some(b'+') => {
                self.pos += 1;
                1
            }
            _ => 1,
        };
        loop {
            let (exps, c) = self.term()?;
            terms.push((exps, c * BigInt::from(sign)));
            match self.peek() {
                None => break,
                Some(b'+') => sign = 1,
                Some(b'-') => sign = -1,
                Some(ch) => return self.err(format!("unexpected character `{}`", ch as char)),
            }
            self.pos += 1;
        }
        let mut degree = None;
        for (e, _) in &terms {
            let d: u32 = e.iter().sum();
            match degree {
                None => degree = Some(d),
                Some(d0) if d0 != d => return Err(Error::Inhomogeneous { expected: d0, found: d }),
                _ => {}
            }
        }
        Form::new(self.n_vars, terms)
    }

    fn term(&mut self) -> Result<(Vec<u32>, BigInt)> {
        let mut coeff = BigInt::one();
        let mut exps = vec![0u32; self.n_vars];
        if let Some(ds) = self.digits() {
            coeff = ds.parse().expect("digit run");
            if self.peek() != Some(b'*') {
                return self.err("a coefficient must be followed by `*` and a variable");
            }
            self.pos += 1;
        }
        loop {
            self.factor(&mut exps)?;
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok((exps, coeff))
    }

    fn factor(&mut self, exps: &mut [u32]) -> Result<()> {
        if self.peek() != Some(b'x') {
            return self.err("expected a variable `x<index>`");
        }
        self.pos += 1;
        let Some(idx) = self.digits() else {
            return self.err("expected a variable index after `x`");
        };
        let index: usize = idx.parse().map_err(|_| Error::Syntax { pos: self.pos, msg: "bad index".into() })?;
        if index == 0 || index > self.n_vars {
            return Err(Error::VariableOutOfRange { index, n_vars: self.n_vars });
        }
        let mut e = 1u32;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let Some(ds) = self.digits() else {
                return self.err("expected an exponent after `^`");
            };
            e = ds.parse().map_err(|_| Error::Syntax { pos: self.pos, msg: "exponent too large".into() })?;
        }
        exps[index - 1] += e;
        Ok(())
    }
}

/// Integer coefficient vector `b` selecting the pencil member `f_b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PencilVector(pub Vec<BigInt>);

impl PencilVector {
    pub fn from_i64(v: &[i64]) -> Self {
        PencilVector(v.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `r` forms sharing the number of variables and the degree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FormSystem {
    forms: Vec<Form>,
}

impl FormSystem {
    pub fn new(forms: Vec<Form>) -> Result<FormSystem> {
        let Some(first) = forms.first() else {
            return Err(Error::InvalidArgument("a system needs at least one form".into()));
        };
        for f in &forms {
            if f.n_vars != first.n_vars {
                return Err(Error::DimensionMismatch { expected: first.n_vars, found: f.n_vars });
            }
            if f.degree != first.degree {
                return Err(Error::Inhomogeneous { expected: first.degree, found: f.degree });
            }
            if f.is_zero() {
                return Err(Error::ZeroForm);
            }
        }
        Ok(FormSystem { forms })
    }

    pub fn single(f: Form) -> FormSystem {
        FormSystem { forms: vec![f] }
    }

    /// Parses forms separated by newlines or `;`. `#` starts a comment.
    pub fn parse(text: &str, n_vars: usize) -> Result<FormSystem> {
        let forms = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(|l| l.split(';'))
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| Form::parse(l, n_vars))
            .collect::<Result<Vec<_>>>()?;
        FormSystem::new(forms)
    }

    /// Parses the system file format (header line required).
    pub fn parse_file(text: &str) -> Result<FormSystem> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::InvalidArgument("empty system file".into()))?;
        let (mut n, mut d, mut r) = (None, None, None);
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("bad header field `{field}`")))?;
            let v: usize = value
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad header value `{field}`")))?;
            match key {
                "n" => n = Some(v),
                "d" => d = Some(v),
                "r" => r = Some(v),
                _ => return Err(Error::InvalidArgument(format!("unknown header key `{key}`"))),
            }
        }
        let (Some(n), Some(d), Some(r)) = (n, d, r) else {
            return Err(Error::InvalidArgument("header must be `n=<int> d=<int> r=<int>`".into()));
        };
        let forms = lines.map(|l| Form::parse(l, n)).collect::<Result<Vec<_>>>()?;
        if forms.len() != r {
            return Err(Error::DimensionMismatch { expected: r, found: forms.len() });
        }
        let sys = FormSystem::new(forms)?;
        if sys.degree() as usize != d {
            return Err(Error::Inhomogeneous { expected: d as u32, found: sys.degree() });
        }
        Ok(sys)
    }

    /// Text in the system file format.
    pub fn to_file_string(&self) -> String {
        let mut s = format!("n={} d={} r={}\n", self.n_vars(), self.degree(), self.r());
        for f in &self.forms {
            s.push_str(&f.to_string());
            s.push('\n');
        }
        s
    }

    pub fn forms(&self) -> &[Form] {
        &self.forms
    }

    pub fn r(&self) -> usize {
        self.forms.len()
    }

    pub fn n_vars(&self) -> usize {
        self.forms[0].n_vars
    }

    pub fn degree(&self) -> u32 {
        self.forms[0].degree
    }

    /// `f_b = b_1 f_1 + ... + b_r f_r`; the result may be the zero polynomial.
    pub fn pencil_form(&self, b: &PencilVector) -> Result<Form> {
        if b.len() != self.r() {
            return Err(Error::DimensionMismatch { expected: self.r(), found: b.len() });
        }
        if b.is_zero() {
            return Err(Error::ZeroPencil);
        }
        let mut acc = Form::zero(self.n_vars(), self.degree());
        for (f, bi) in self.forms.iter().zip(&b.0) {
            if !bi.is_zero() {
                acc.scaled_add(f, bi);
            }
        }
        Ok(acc)
    }

    /// Evaluates every form at `x`.
    pub fn evaluate(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        self.forms.iter().map(|f| f.evaluate(x)).collect()
    }
}

impl fmt::Display for FormSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.forms.iter().map(|g| g.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ivec;

    fn form(s: &str, n: usize) -> Form {
        Form::parse(s, n).unwrap()
    }

    #[test]
    fn parse_difference_of_squares() {
        let f = form("x1^2 - x2^2", 2);
        assert_eq!(f.degree(), 2);
        assert_eq!(f.num_terms(), 2);
        assert_eq!(f.coefficient(&[2, 0]), BigInt::from(1));
        assert_eq!(f.coefficient(&[0, 2]), BigInt::from(-1));
        assert_eq!(f.to_string(), "x1^2 - x2^2");
    }

    #[test]
    fn parse_bilinear_instance() {
        let f = form("x1*x3 + x2*x4", 4);
        assert_eq!(f, crate::families::bilinear_family(1, 2).unwrap().forms()[0]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Form::parse("x1^2 + x2", 2), Err(Error::Inhomogeneous { .. })));
        assert!(matches!(Form::parse("x3^2", 2), Err(Error::VariableOutOfRange { index: 3, .. })));
        assert!(matches!(Form::parse("x1 +", 2), Err(Error::Syntax { .. })));
        assert!(matches!(Form::parse("3 x1", 2), Err(Error::Syntax { .. })));
        assert!(matches!(Form::parse("x1 - x1", 2), Err(Error::ZeroForm)));
        assert!(matches!(Form::parse("y1", 2), Err(Error::Syntax { .. })));
    }

    #[test]
    fn parse_whitespace_signs_and_repeats() {
        let f = form(" - 3 * x1 * x1*x2 +x2^3 ", 2);
        assert_eq!(f.to_string(), "-3*x1^2*x2 + x2^3");
        let g = form("2*x1*x2 + x2*x1", 2);
        assert_eq!(g.to_string(), "3*x1*x2");
    }

    #[test]
    fn evaluation() {
        let f = form("x1^2 - x2^2", 2);
        assert_eq!(f.evaluate(&ivec(&[3, 3])).unwrap(), BigInt::from(0));
        assert_eq!(f.evaluate(&ivec(&[5, 4])).unwrap(), BigInt::from(9));
        let g = form("x1*x2*x3", 3);
        assert_eq!(g.evaluate(&ivec(&[2, 3, -1])).unwrap(), BigInt::from(-6));
        assert!(matches!(g.evaluate(&ivec(&[1, 2])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gradients() {
        let f = form("x1^2 - x2^2", 2);
        assert_eq!(f.gradient(&ivec(&[1, 2])).unwrap(), ivec(&[2, -4]));
        let g = form("x1*x2*x3", 3);
        assert_eq!(g.gradient(&ivec(&[1, 1, 1])).unwrap(), ivec(&[1, 1, 1]));
        let h = form("x1^3 + 2*x1*x2^2", 2);
        assert_eq!(h.gradient(&ivec(&[0, 0])).unwrap(), ivec(&[0, 0]));
    }

    #[test]
    fn pencils() {
        let sys = FormSystem::new(vec![form("x1^2", 2), form("x2^2", 2)]).unwrap();
        let fb = sys.pencil_form(&PencilVector::from_i64(&[1, -1])).unwrap();
        assert_eq!(fb, form("x1^2 - x2^2", 2));

        let dup = FormSystem::new(vec![form("x1*x2", 2), form("x1*x2", 2)]).unwrap();
        let z = dup.pencil_form(&PencilVector::from_i64(&[1, -1])).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.to_string(), "0");

        assert!(matches!(sys.pencil_form(&PencilVector::from_i64(&[0, 0])), Err(Error::ZeroPencil)));

        let q = crate::families::bilinear_family(2, 2).unwrap();
        let q2 = q.pencil_form(&PencilVector::from_i64(&[0, 1])).unwrap();
        assert_eq!(&q2, &q.forms()[1]);
    }

    #[test]
    fn system_file_round_trip() {
        let text = "# sample\nn=3 d=2 r=2\nx1^2 + x2^2 - x3^2  # cone\nx1*x2\n";
        let sys = FormSystem::parse_file(text).unwrap();
        assert_eq!(sys.r(), 2);
        let again = FormSystem::parse_file(&sys.to_file_string()).unwrap();
        assert_eq!(sys, again);
        assert!(FormSystem::parse_file("n=3 d=3 r=1\nx1^2\n").is_err());
        assert!(FormSystem::parse_file("n=3 d=2 r=2\nx1^2\n").is_err());
    }

    #[test]
    fn partial_derivatives() {
        let f = form("x1^2*x2 + 3*x2^3", 2);
        assert_eq!(f.partial_derivative(0).unwrap(), form("2*x1*x2", 2));
        assert_eq!(f.partial_derivative(1).unwrap(), form("x1^2 + 9*x2^2", 2));
    }
}
