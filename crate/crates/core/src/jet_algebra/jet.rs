//! Jet coordinates: the generic view used by formulas and the concrete
//! `MetricJet` point of J³π.

use super::pair::{pidx, tidx, PAIRS};
use super::scalar::{Dual, Scalar};
use crate::error::{Error, Result};
use nalgebra::{Matrix4, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Jet coordinates up to second order over any scalar type.
#[derive(Clone, Copy, Debug)]
pub struct Jet<T> {
    pub x: [T; 4],
    pub g: [T; 10],
    pub dg: [[T; 4]; 10],
    /// g_{αβ,μν}, indexed [pair(αβ)][pair(μν)].
    pub d2g: [[T; 10]; 10],
}

impl<T: Scalar> Jet<T> {
    pub fn zero() -> Self {
        let z = T::zero();
        Jet { x: [z; 4], g: [z; 10], dg: [[z; 4]; 10], d2g: [[z; 10]; 10] }
    }

    #[inline]
    pub fn g(&self, a: usize, b: usize) -> T {
        self.g[pidx(a, b)]
    }
    #[inline]
    pub fn dg(&self, a: usize, b: usize, m: usize) -> T {
        self.dg[pidx(a, b)][m]
    }
    #[inline]
    pub fn d2g(&self, a: usize, b: usize, m: usize, n: usize) -> T {
        self.d2g[pidx(a, b)][pidx(m, n)]
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Jet<U> {
        Jet {
            x: self.x.map(&f),
            g: self.g.map(&f),
            dg: self.dg.map(|r| r.map(&f)),
            d2g: self.d2g.map(|r| r.map(&f)),
        }
    }

    /// Embed as constants of the dual type.
    pub fn to_dual(&self) -> Jet<Dual<T>> {
        self.map(Dual::constant)
    }

    /// Seed a single jet coordinate with tangent 1.
    pub fn seed(&self, c: Coord) -> Jet<Dual<T>> {
        let mut j = self.to_dual();
        let one = T::one();
        match c {
            Coord::X(m) => j.x[m].eps = one,
            Coord::G(k) => j.g[k].eps = one,
            Coord::Dg(k, m) => j.dg[k][m].eps = one,
            Coord::D2g(k, p) => j.d2g[k][p].eps = one,
            Coord::D3g(..) => {}
        }
        j
    }

    /// Seed the tangent of the prolonged section along x^τ, i.e. the
    /// next-order data contracted as in the coordinate total derivative.
    /// Third-order data (if any) feeds the tangent of d2g.
    pub fn seed_total(&self, tau: usize, d3g: Option<&[[T; 20]; 10]>) -> Jet<Dual<T>> {
        let mut j = self.to_dual();
        j.x[tau].eps = T::one();
        for k in 0..10 {
            j.g[k].eps = self.dg[k][tau];
            for m in 0..4 {
                j.dg[k][m].eps = self.d2g[k][pidx(m, tau)];
            }
            if let Some(d3) = d3g {
                for (p, &(m, n)) in PAIRS.iter().enumerate() {
                    j.d2g[k][p].eps = d3[k][tidx(m, n, tau)];
                }
            }
        }
        j
    }

    /// Seed an arbitrary tangent direction on the g and dg coordinates.
    pub fn seed_direction(&self, dg_dir: Option<&[T; 10]>, ddg_dir: Option<&[[T; 4]; 10]>) -> Jet<Dual<T>> {
        let mut j = self.to_dual();
        if let Some(v) = dg_dir {
            for k in 0..10 {
                j.g[k].eps = v[k];
            }
        }
        if let Some(v) = ddg_dir {
            for k in 0..10 {
                for m in 0..4 {
                    j.dg[k][m].eps = v[k][m];
                }
            }
        }
        j
    }
}

/// Extract the tangent parts of a dual-valued result.
pub fn tangent<T: Scalar>(v: &[Dual<T>]) -> Vec<T> {
    v.iter().map(|d| d.eps).collect()
}

/// A single jet coordinate of J³π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coord {
    X(usize),
    G(usize),
    Dg(usize, usize),
    D2g(usize, usize),
    D3g(usize, usize),
}

impl Coord {
    /// Jet order of the coordinate (base coordinates count as order 0).
    pub fn order(&self) -> usize {
        match self {
            Coord::X(_) | Coord::G(_) => 0,
            Coord::Dg(..) => 1,
            Coord::D2g(..) => 2,
            Coord::D3g(..) => 3,
        }
    }

    /// All 4 + 10 + 40 + 100 + 200 = 354 coordinates of J³π.
    pub fn all_j3() -> Vec<Coord> {
        let mut v: Vec<Coord> = (0..4).map(Coord::X).collect();
        v.extend((0..10).map(Coord::G));
        for k in 0..10 {
            v.extend((0..4).map(|m| Coord::Dg(k, m)));
        }
        for k in 0..10 {
            v.extend((0..10).map(|p| Coord::D2g(k, p)));
        }
        for k in 0..10 {
            v.extend((0..20).map(|t| Coord::D3g(k, t)));
        }
        v
    }
}

/// A function of jet coordinates that can be evaluated on any scalar type.
pub trait JetFn {
    /// Highest derivative order of the metric that `eval` reads.
    fn order(&self) -> usize;
    fn eval<T: Scalar>(&self, jet: &Jet<T>) -> Result<Vec<T>>;
}

/// A point of J³π (or of a lower jet bundle, as recorded by `order`).
#[derive(Clone, Debug, PartialEq)]
pub struct MetricJet {
    pub x: [f64; 4],
    pub g: [f64; 10],
    pub dg: [[f64; 4]; 10],
    pub d2g: [[f64; 10]; 10],
    /// g_{αβ,μνλ}, indexed [pair(αβ)][triple(μνλ)].
    pub d3g: [[f64; 20]; 10],
    pub order: usize,
}

impl MetricJet {
    /// The jet of a constant section with metric components `g`.
    pub fn constant(g: [f64; 10]) -> Self {
        MetricJet {
            x: [0.0; 4],
            g,
            dg: [[0.0; 4]; 10],
            d2g: [[0.0; 10]; 10],
            d3g: [[0.0; 20]; 10],
            order: 3,
        }
    }

    pub fn minkowski() -> Self {
        Self::constant(MINKOWSKI)
    }

    pub fn from_matrix(g: &Matrix4<f64>) -> [f64; 10] {
        let mut out = [0.0; 10];
        for (k, &(a, b)) in PAIRS.iter().enumerate() {
            out[k] = g[(a, b)];
        }
        out
    }

    pub fn view(&self) -> Jet<f64> {
        Jet { x: self.x, g: self.g, dg: self.dg, d2g: self.d2g }
    }

    pub fn g(&self, a: usize, b: usize) -> f64 {
        self.g[pidx(a, b)]
    }
    pub fn dg(&self, a: usize, b: usize, m: usize) -> f64 {
        self.dg[pidx(a, b)][m]
    }
    pub fn d2g(&self, a: usize, b: usize, m: usize, n: usize) -> f64 {
        self.d2g[pidx(a, b)][pidx(m, n)]
    }
    pub fn d3g(&self, a: usize, b: usize, m: usize, n: usize, l: usize) -> f64 {
        self.d3g[pidx(a, b)][tidx(m, n, l)]
    }

    pub fn metric_matrix(&self) -> Matrix4<f64> {
        packed_to_matrix(&self.g)
    }

    pub fn require(&self, order: usize) -> Result<()> {
        if self.order < order {
            return Err(Error::InsufficientOrder { have: self.order, need: order });
        }
        Ok(())
    }

    /// Check invertibility and Lorentzian signature (−+++).
    pub fn validate(&self) -> Result<()> {
        validate_metric(&self.g)
    }

    /// Same jet with all data above `order` cleared.
    pub fn truncated(&self, order: usize) -> Self {
        let mut j = self.clone();
        if order < 1 {
            j.dg = [[0.0; 4]; 10];
        }
        if order < 2 {
            j.d2g = [[0.0; 10]; 10];
        }
        if order < 3 {
            j.d3g = [[0.0; 20]; 10];
        }
        j.order = j.order.min(order);
        j
    }
}

pub const MINKOWSKI: [f64; 10] = [-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];

pub fn packed_to_matrix(g: &[f64; 10]) -> Matrix4<f64> {
    Matrix4::from_fn(|a, b| g[pidx(a, b)])
}

pub fn validate_metric(g: &[f64; 10]) -> Result<()> {
    let m = packed_to_matrix(g);
    let scale = g.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let det = m.determinant();
    if !det.is_finite() || det.abs() <= 1e-13 * scale.powi(4).max(f64::MIN_POSITIVE) {
        return Err(Error::SingularMetric { det });
    }
    let eig = SymmetricEigen::new(m);
    let negative = eig.eigenvalues.iter().filter(|&&v| v < 0.0).count();
    if negative != 1 {
        return Err(Error::Signature { negative });
    }
    Ok(())
}

/// D_τ f: forward-mode derivative of `f` along the prolonged section.
pub fn total_derivative<F: JetFn>(f: &F, tau: usize, jet: &MetricJet) -> Result<Vec<f64>> {
    if tau > 3 {
        return Err(Error::IndexOutOfRange(tau));
    }
    jet.require(f.order() + 1)?;
    let seeded = jet.view().seed_total(tau, Some(&jet.d3g));
    Ok(tangent(&f.eval(&seeded)?))
}

/// ∂f/∂c for a single jet coordinate c (ordered-pair convention).
pub fn partial<F: JetFn>(f: &F, c: Coord, jet: &MetricJet) -> Result<Vec<f64>> {
    if c.order() > f.order() && !matches!(c, Coord::X(_)) {
        return Ok(vec![0.0; f.eval(&jet.view())?.len()]);
    }
    Ok(tangent(&f.eval(&jet.view().seed(c))?))
}

/// Random valid jet: g = A·η·Aᵀ with A = I + 0.2·N(0,1); derivatives U(−1,1).
pub fn random_jet<R: Rng>(rng: &mut R, order: usize) -> MetricJet {
    let a = Matrix4::from_fn(|i, j| {
        let n: f64 = StandardNormal.sample(rng);
        if i == j {
            1.0 + 0.2 * n
        } else {
            0.2 * n
        }
    });
    let eta = packed_to_matrix(&MINKOWSKI);
    let gm = a * eta * a.transpose();
    let mut jet = MetricJet::constant(MetricJet::from_matrix(&gm));
    jet.order = order;
    for k in 0..10 {
        if order >= 1 {
            for m in 0..4 {
                jet.dg[k][m] = rng.gen_range(-1.0..1.0);
            }
        }
        if order >= 2 {
            for p in 0..10 {
                jet.d2g[k][p] = rng.gen_range(-1.0..1.0);
            }
        }
        if order >= 3 {
            for t in 0..20 {
                jet.d3g[k][t] = rng.gen_range(-1.0..1.0);
            }
        }
    }
    jet
}

/// Random metric point drawn the same way as [`random_jet`].
pub fn random_metric<R: Rng>(rng: &mut R) -> [f64; 10] {
    random_jet(rng, 0).g
}
