//! Truncated Taylor polynomials in the four base coordinates.
//!
//! Coefficients are stored densely in graded order: all monomials of total
//! degree 0, then degree 1, and so on. Because the ordering is graded, the
//! coefficients of a jet of order k are a prefix of those of any higher order,
//! which lets one product table serve every order.

use super::scalar::Scalar;
use crate::error::{Error, Result};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

pub const MAX_ORDER: usize = 4;
/// Number of monomials of total degree ≤ k in four variables, k = 0..=4.
pub const NCOEF: [usize; MAX_ORDER + 1] = [1, 5, 15, 35, 70];
/// Sentinel order for exact constants, which adapt to the other operand.
const EXACT: u8 = u8::MAX;

pub type MultiIndex = [u8; 4];

struct Tables {
    monomials: Vec<MultiIndex>,
    lookup: [[[[usize; 5]; 5]; 5]; 5],
    /// For each output monomial, the (i, j) pairs with m_i + m_j = m_out.
    products: Vec<Vec<(u8, u8)>>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut monomials = Vec::with_capacity(70);
        for deg in 0..=MAX_ORDER as u8 {
            for a in (0..=deg).rev() {
                for b in (0..=deg - a).rev() {
                    for c in (0..=deg - a - b).rev() {
                        monomials.push([a, b, c, deg - a - b - c]);
                    }
                }
            }
        }
        let mut lookup = [[[[usize::MAX; 5]; 5]; 5]; 5];
        for (i, m) in monomials.iter().enumerate() {
            lookup[m[0] as usize][m[1] as usize][m[2] as usize][m[3] as usize] = i;
        }
        let mut products = vec![Vec::new(); monomials.len()];
        for (i, mi) in monomials.iter().enumerate() {
            for (j, mj) in monomials.iter().enumerate() {
                let s = [mi[0] + mj[0], mi[1] + mj[1], mi[2] + mj[2], mi[3] + mj[3]];
                if s.iter().map(|&v| v as usize).sum::<usize>() <= MAX_ORDER {
                    let k = lookup[s[0] as usize][s[1] as usize][s[2] as usize][s[3] as usize];
                    products[k].push((i as u8, j as u8));
                }
            }
        }
        Tables { monomials, lookup, products }
    })
}

pub fn monomial(i: usize) -> MultiIndex {
    tables().monomials[i]
}

pub fn monomial_index(m: MultiIndex) -> Option<usize> {
    if m.iter().map(|&v| v as usize).sum::<usize>() > MAX_ORDER {
        return None;
    }
    Some(tables().lookup[m[0] as usize][m[1] as usize][m[2] as usize][m[3] as usize])
}

/// Truncated Taylor polynomial with capacity for `N` coefficients.
///
/// `TaylorJet<5>` holds order ≤ 1, `TaylorJet<35>` order ≤ 3 and
/// `TaylorJet<70>` order ≤ 4.
#[derive(Clone, Copy, PartialEq)]
pub struct TaylorJet<const N: usize> {
    order: u8,
    c: [f64; N],
}

pub type Taylor3 = TaylorJet<35>;
pub type Taylor4 = TaylorJet<70>;

impl<const N: usize> std::fmt::Debug for TaylorJet<N> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TaylorJet")
            .field("order", &self.order())
            .field("coeffs", &self.coeffs())
            .finish()
    }
}

impl<const N: usize> TaylorJet<N> {
    fn check_order(order: i64) -> Result<u8> {
        if order < 0 || order as usize > MAX_ORDER || NCOEF[order as usize] > N {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(order as u8)
    }

    /// The constant `v` truncated at `order`.
    pub fn constant(v: f64, order: i64) -> Result<Self> {
        let order = Self::check_order(order)?;
        let mut c = [0.0; N];
        c[0] = v;
        Ok(TaylorJet { order, c })
    }

    /// The coordinate function x_i expanded about `value`.
    pub fn variable(i: usize, value: f64, order: i64) -> Result<Self> {
        if i > 3 {
            return Err(Error::IndexOutOfRange(i));
        }
        let mut t = Self::constant(value, order)?;
        if t.order >= 1 {
            t.c[1 + i] = 1.0;
        }
        Ok(t)
    }

    /// Build from graded coefficients; missing trailing entries are zero.
    pub fn from_coeffs(coeffs: &[f64], order: i64) -> Result<Self> {
        let o = Self::check_order(order)?;
        let n = NCOEF[o as usize];
        if coeffs.len() > n {
            return Err(Error::Input(format!(
                "{} coefficients exceed the {} monomials of order {}",
                coeffs.len(),
                n,
                order
            )));
        }
        let mut c = [0.0; N];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Ok(TaylorJet { order: o, c })
    }

    pub fn order(&self) -> usize {
        if self.order == EXACT {
            0
        } else {
            self.order as usize
        }
    }

    pub fn is_exact_constant(&self) -> bool {
        self.order == EXACT
    }

    #[inline]
    fn len(&self) -> usize {
        if self.order == EXACT {
            1
        } else {
            NCOEF[self.order as usize]
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.len()]
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Coefficient of the monomial x^m (zero beyond the truncation order).
    pub fn coeff(&self, m: MultiIndex) -> f64 {
        match monomial_index(m) {
            Some(i) if i < self.len() => self.c[i],
            _ => 0.0,
        }
    }

    /// The partial derivative ∂^m at the expansion point.
    pub fn derivative(&self, m: MultiIndex) -> f64 {
        let fact: f64 = m.iter().map(|&k| (1..=k as u32).product::<u32>() as f64).product();
        self.coeff(m) * fact
    }

    /// ∂/∂x_i as a jet of one order less.
    pub fn partial(&self, i: usize) -> Self {
        if self.order == EXACT || self.order == 0 {
            return TaylorJet { order: self.order, c: [0.0; N] }.with_zero_constant();
        }
        let t = tables();
        let new_order = self.order - 1;
        let mut c = [0.0; N];
        for (k, m) in t.monomials[..NCOEF[new_order as usize]].iter().enumerate() {
            let mut up = *m;
            up[i] += 1;
            let src = t.lookup[up[0] as usize][up[1] as usize][up[2] as usize][up[3] as usize];
            c[k] = self.c[src] * up[i] as f64;
        }
        TaylorJet { order: new_order, c }
    }

    fn with_zero_constant(mut self) -> Self {
        self.c[0] = 0.0;
        self
    }

    /// Drop coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        if self.order == EXACT || order >= self.order as usize {
            return *self;
        }
        let mut c = [0.0; N];
        let n = NCOEF[order];
        c[..n].copy_from_slice(&self.c[..n]);
        TaylorJet { order: order as u8, c }
    }

    /// Evaluate the polynomial at a displacement `h` from the expansion point.
    pub fn eval_at(&self, h: [f64; 4]) -> f64 {
        let t = tables();
        self.coeffs()
            .iter()
            .zip(&t.monomials)
            .map(|(c, m)| c * (0..4).map(|i| h[i].powi(m[i] as i32)).product::<f64>())
            .sum()
    }

    fn result_order(a: u8, b: u8) -> u8 {
        a.min(b)
    }

    /// Σ_n coef[n]·(self − self₀)^n, the composition of a univariate series.
    fn compose(&self, coef: &[f64]) -> Self {
        if self.order == EXACT || self.order == 0 {
            let mut c = [0.0; N];
            c[0] = coef[0];
            return TaylorJet { order: self.order, c };
        }
        let mut d = *self;
        d.c[0] = 0.0;
        let mut out = TaylorJet { order: self.order, c: [0.0; N] };
        out.c[0] = coef[0];
        let mut p = d;
        for (n, &k) in coef.iter().enumerate().skip(1) {
            if n > self.order as usize {
                break;
            }
            if k != 0.0 {
                for i in 0..out.len() {
                    out.c[i] += k * p.c[i];
                }
            }
            if n < self.order as usize {
                p *= d;
            }
        }
        out
    }

    fn series<F: Fn(usize) -> f64>(&self, f: F) -> Self {
        let n = self.order() + 1;
        let coef: Vec<f64> = (0..n.max(1)).map(f).collect();
        self.compose(&coef)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl<const N: usize> Add for TaylorJet<N> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let order = Self::result_order(self.order, o.order);
        let mut out = TaylorJet { order, c: [0.0; N] };
        let n = out.len();
        for i in 0..n {
            out.c[i] = self.c[i] + o.c[i];
        }
        out
    }
}
impl<const N: usize> Sub for TaylorJet<N> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let order = Self::result_order(self.order, o.order);
        let mut out = TaylorJet { order, c: [0.0; N] };
        let n = out.len();
        for i in 0..n {
            out.c[i] = self.c[i] - o.c[i];
        }
        out
    }
}
impl<const N: usize> Mul for TaylorJet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        if self.order == EXACT {
            let mut r = o * self.c[0];
            r.order = o.order;
            return r;
        }
        if o.order == EXACT {
            return self * o.c[0];
        }
        let order = Self::result_order(self.order, o.order);
        let mut out = TaylorJet { order, c: [0.0; N] };
        let t = tables();
        for k in 0..out.len() {
            let mut s = 0.0;
            for &(i, j) in &t.products[k] {
                s += self.c[i as usize] * o.c[j as usize];
            }
            out.c[k] = s;
        }
        out
    }
}
impl<const N: usize> Div for TaylorJet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        if o.order == EXACT {
            return self * (1.0 / o.c[0]);
        }
        self * o.recip()
    }
}
impl<const N: usize> Neg for TaylorJet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}
impl<const N: usize> Mul<f64> for TaylorJet<N> {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        let mut out = self;
        let n = out.len();
        for v in &mut out.c[..n] {
            *v *= s;
        }
        out
    }
}
impl<const N: usize> AddAssign for TaylorJet<N> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl<const N: usize> SubAssign for TaylorJet<N> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl<const N: usize> MulAssign for TaylorJet<N> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<const N: usize> Scalar for TaylorJet<N> {
    fn cst(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        TaylorJet { order: EXACT, c }
    }
    fn re(&self) -> f64 {
        self.c[0]
    }
    fn exp(self) -> Self {
        let e = self.c[0].exp();
        self.series(|n| e / factorial(n))
    }
    fn ln(self) -> Self {
        let a = self.c[0];
        self.series(|n| {
            if n == 0 {
                a.ln()
            } else {
                let s = if n % 2 == 1 { 1.0 } else { -1.0 };
                s / (n as f64 * a.powi(n as i32))
            }
        })
    }
    fn sin(self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        self.series(|n| [s, c, -s, -c][n % 4] / factorial(n))
    }
    fn cos(self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        self.series(|n| [c, -s, -c, s][n % 4] / factorial(n))
    }
    fn powf(self, p: f64) -> Self {
        let a = self.c[0];
        self.series(|n| {
            let mut falling = 1.0;
            for k in 0..n {
                falling *= p - k as f64;
            }
            falling / factorial(n) * a.powf(p - n as f64)
        })
    }
    fn recip(self) -> Self {
        let a = self.c[0];
        self.series(|n| {
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            s / a.powi(n as i32 + 1)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    #[test]
    fn exp_series_along_x0() {
        let x = Taylor3::variable(0, 0.0, 3).unwrap();
        let e = x.exp();
        for (k, want) in [1.0, 1.0, 0.5, 1.0 / 6.0].iter().enumerate() {
            assert!((e.coeff([k as u8, 0, 0, 0]) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn product_monomial() {
        let x1 = Taylor3::variable(1, 0.0, 3).unwrap();
        let x2 = Taylor3::variable(2, 0.0, 3).unwrap();
        let p = x1 * x2;
        for (i, &c) in p.coeffs().iter().enumerate() {
            let want = if monomial(i) == [0, 1, 1, 0] { 1.0 } else { 0.0 };
            assert_eq!(c, want);
        }
    }

    #[test]
    fn pythagorean_identity() {
        let x = Taylor3::variable(0, 0.83, 3).unwrap() * Taylor3::variable(3, 1.2, 3).unwrap();
        let one = x.sin() * x.sin() + x.cos() * x.cos();
        assert!((one.value() - 1.0).abs() < 1e-15);
        for &c in &one.coeffs()[1..] {
            assert!(c.abs() < 1e-14);
        }
    }

    #[test]
    fn orders_and_errors() {
        assert!(Taylor3::constant(1.0, 4).is_err());
        assert!(Taylor4::constant(1.0, 4).is_ok());
        assert_eq!(Taylor3::constant(1.0, -1), Err(Error::UnsupportedOrder(-1)));
        let x = TaylorJet::<5>::variable(2, 3.0, 1).unwrap();
        assert_eq!(x.coeffs(), &[3.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn derivative_and_partial() {
        // f = x0^2 x1 at (1, 2): ∂0∂1 f = 2 x0 = 2, ∂0² f = 2 x1 = 4
        let x0 = Taylor3::variable(0, 1.0, 3).unwrap();
        let x1 = Taylor3::variable(1, 2.0, 3).unwrap();
        let f = x0 * x0 * x1;
        assert!((f.derivative([1, 1, 0, 0]) - 2.0).abs() < 1e-15);
        assert!((f.derivative([2, 0, 0, 0]) - 4.0).abs() < 1e-15);
        let d0 = f.partial(0);
        assert_eq!(d0.order(), 2);
        assert!((d0.value() - 4.0).abs() < 1e-15);
        assert!((d0.derivative([0, 1, 0, 0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn powf_matches_known_series() {
        // sqrt(1 + x) = 1 + x/2 − x²/8 + x³/16
        let x = Taylor3::variable(0, 1.0, 3).unwrap();
        let s = x.sqrt();
        let want = [1.0, 0.5, -0.125, 0.0625];
        for (k, w) in want.iter().enumerate() {
            assert!((s.coeff([k as u8, 0, 0, 0]) - w).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_constants_adapt() {
        let x = Taylor3::variable(0, 2.0, 2).unwrap();
        let y = Taylor3::cst(3.0) * x + Taylor3::cst(1.0);
        assert_eq!(y.order(), 2);
        assert_eq!(y.value(), 7.0);
        assert_eq!(y.coeff([1, 0, 0, 0]), 3.0);
    }

    fn arb_jet() -> impl Strategy<Value = Taylor3> {
        (prop::collection::vec(-2.0f64..2.0, 35), 0.5f64..2.0).prop_map(|(mut v, c0)| {
            v[0] = c0;
            Taylor3::from_coeffs(&v, 3).unwrap()
        })
    }

    proptest! {
        #[test]
        fn mul_associative(a in arb_jet(), b in arb_jet(), c in arb_jet()) {
            let l = (a * b) * c;
            let r = a * (b * c);
            // rounding bound: the same product taken on absolute values
            let abs = |j: Taylor3| {
                let v: Vec<f64> = j.coeffs().iter().map(|x| x.abs()).collect();
                Taylor3::from_coeffs(&v, 3).unwrap()
            };
            let bound = abs(a) * abs(b) * abs(c);
            for ((x, y), s) in l.coeffs().iter().zip(r.coeffs()).zip(bound.coeffs()) {
                prop_assert!((x - y).abs() <= 1e-14 * s.max(1.0));
            }
        }

        #[test]
        fn division_roundtrip(a in arb_jet(), b in arb_jet()) {
            let q = (a / b) * b;
            prop_assert!(close(q.coeffs(), a.coeffs(), 1e-12));
        }

        #[test]
        fn one_is_identity(a in arb_jet()) {
            let one = Taylor3::constant(1.0, 3).unwrap();
            let p = a * one;
            prop_assert_eq!(p.coeffs(), a.coeffs());
        }

        #[test]
        fn exp_ln_inverse(a in arb_jet()) {
            let r = a.ln().exp();
            prop_assert!(close(r.coeffs(), a.coeffs(), 1e-12));
        }
    }
}
