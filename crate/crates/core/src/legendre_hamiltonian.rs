//! Legendre maps onto multimomenta, their rank, the inversion of the
//! first-order momenta and the residuals of the unified-formalism section
//! equations.

use crate::curvature::inverse;
use crate::eh_lagrangian::{euler_lagrange, l_coeff_1, l_coeff_2_at, l_zero};
use crate::error::Result;
use crate::jet_algebra::{pidx, Coord, Dual, Jet, MetricJet, Scalar, MULT, PAIRS};
use nalgebra::DMatrix;

/// Number of multimomentum coordinates p^{αβ,μ}, p^{αβ,μν}.
pub const MOMENTUM_COORDINATES: usize = 10 * 4 + 10 * 10;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Momenta {
    /// p^{αβ,μ}
    pub p1: [[f64; 4]; 10],
    /// p^{αβ,μν} for ordered μ ≤ ν; equals ∂L/∂g_{αβ,μν} = n(μν) L^{αβ,μν}.
    pub p2: [[f64; 10]; 10],
    /// The extended momentum p.
    pub p_ext: f64,
}

/// p2 = ∂L/∂g_{αβ,μν}: the one place where the n(μν) packing factor enters.
pub fn p2_of<T: Scalar>(g: &[T; 10]) -> Result<[[T; 10]; 10]> {
    let mut l = l_coeff_2_at(g)?;
    for row in l.iter_mut() {
        for (p, v) in row.iter_mut().enumerate() {
            *v = *v * MULT[p];
        }
    }
    Ok(l)
}

/// The extended Legendre map; needs only 1-jet data.
pub fn legendre(jet: &MetricJet) -> Result<Momenta> {
    jet.require(1)?;
    let v = jet.view();
    let p1 = l_coeff_1(&v)?;
    let p2 = p2_of(&v.g)?;
    // p = L − Σp1·g_{,μ} − Σp2·g_{,μν} = L0 − Σp1·g_{,μ} on the image
    let mut p_ext = l_zero(&v)?;
    for k in 0..10 {
        for m in 0..4 {
            p_ext -= p1[k][m] * v.dg[k][m];
        }
    }
    Ok(Momenta { p1, p2, p_ext })
}

/// Outputs of the restricted Legendre map read as coordinates
/// (x, g, dg, p1, p2): 4 + 10 + 40 + 40 + 100 = 194 components.
fn legendre_outputs<T: Scalar>(jet: &Jet<T>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(194);
    out.extend_from_slice(&jet.x);
    out.extend_from_slice(&jet.g);
    out.extend(jet.dg.iter().flatten().copied());
    out.extend(l_coeff_1(jet)?.iter().flatten().copied());
    out.extend(p2_of(&jet.g)?.iter().flatten().copied());
    Ok(out)
}

/// Numerical rank of the tangent map of the Legendre map on J³.
///
/// The outputs are J¹ functions, so the 300 columns belonging to second and
/// third derivatives vanish identically and are not built.
pub fn legendre_rank(jet: &MetricJet) -> Result<usize> {
    Ok(rank_of(&legendre_jacobian(jet)?))
}

/// Jacobian of the Legendre outputs with respect to (x, g, dg): 194 × 54.
pub fn legendre_jacobian(jet: &MetricJet) -> Result<DMatrix<f64>> {
    let v = jet.view();
    let cols: Vec<Coord> = Coord::all_j3().into_iter().filter(|c| c.order() <= 1).collect();
    let mut m = DMatrix::zeros(194, cols.len());
    for (j, c) in cols.iter().enumerate() {
        let out = legendre_outputs(&v.seed(*c))?;
        for (i, o) in out.iter().enumerate() {
            m[(i, j)] = o.eps;
        }
    }
    Ok(m)
}

pub fn rank_of(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0f64, |s, v| s.max(*v));
    sv.iter().filter(|&&s| s > RANK_THRESHOLD * max).count()
}

/// g_{αβ,μ} from p^{λσ,ν}:
/// (1/3ρ) Σ_{λ≤σ,ν} p^{λσ,ν} Sym_{λσ}[−2g_{αλ}g_{βμ}g_{σν} − 2g_{αμ}g_{βλ}g_{σν}
/// + 6g_{αλ}g_{βσ}g_{μν} + g_{αν}g_{βμ}g_{λσ} + g_{αμ}g_{βν}g_{λσ}].
pub fn invert_momenta<T: Scalar>(g: &[T; 10], p1: &[[T; 4]; 10]) -> Result<[[T; 4]; 10]> {
    let inv = inverse(g)?;
    let gf = |a: usize, b: usize| g[pidx(a, b)];
    let term = |a: usize, b: usize, m: usize, l: usize, s: usize, n: usize| {
        (gf(a, l) * gf(b, m) * gf(s, n) + gf(a, m) * gf(b, l) * gf(s, n)) * -2.0
            + gf(a, l) * gf(b, s) * gf(m, n) * 6.0
            + gf(a, n) * gf(b, m) * gf(l, s)
            + gf(a, m) * gf(b, n) * gf(l, s)
    };
    let scale = (inv.rho * 3.0).recip();
    let mut out = [[T::zero(); 4]; 10];
    for (k, &(a, b)) in PAIRS.iter().enumerate() {
        for m in 0..4 {
            let mut acc = T::zero();
            for (q, &(l, s)) in PAIRS.iter().enumerate() {
                for n in 0..4 {
                    let sym = if l == s {
                        term(a, b, m, l, s, n)
                    } else {
                        (term(a, b, m, l, s, n) + term(a, b, m, s, l, n)) * 0.5
                    };
                    acc += p1[q][n] * sym;
                }
            }
            out[k][m] = acc * scale;
        }
    }
    Ok(out)
}

/// The five residual blocks of the unified section equations.
#[derive(Debug, Clone)]
pub struct UnifiedResiduals {
    /// Einstein block L^{αβ} (10).
    pub einstein: Vec<f64>,
    /// p^{αβ,μ} − L^{αβ,μ} (40).
    pub momentum1: Vec<f64>,
    /// p^{αβ,μν} − ∂L/∂g_{αβ,μν} (100).
    pub momentum2: Vec<f64>,
    /// First-order holonomy (40); identically zero for jet-derived data.
    pub holonomy1: Vec<f64>,
    /// Second-order holonomy (100); identically zero for jet-derived data.
    pub holonomy2: Vec<f64>,
}

impl UnifiedResiduals {
    pub fn blocks(&self) -> [(&'static str, &[f64]); 5] {
        [
            ("einstein", &self.einstein),
            ("momentum_first_order", &self.momentum1),
            ("momentum_second_order", &self.momentum2),
            ("holonomy_first_order", &self.holonomy1),
            ("holonomy_second_order", &self.holonomy2),
        ]
    }

    pub fn max_abs(&self) -> [f64; 5] {
        self.blocks().map(|(_, b)| b.iter().fold(0.0, |s: f64, v| s.max(v.abs())))
    }
}

pub fn unified_residuals(jet: &MetricJet, mom: &Momenta) -> Result<UnifiedResiduals> {
    jet.require(2)?;
    let v = jet.view();
    let el = euler_lagrange(&v)?;
    let lm1 = l_coeff_1(&v)?;
    let p2 = p2_of(&v.g)?;
    let mut m1 = Vec::with_capacity(40);
    let mut m2 = Vec::with_capacity(100);
    for k in 0..10 {
        for m in 0..4 {
            m1.push(mom.p1[k][m] - lm1[k][m]);
        }
        for p in 0..10 {
            m2.push(mom.p2[k][p] - p2[k][p]);
        }
    }
    Ok(UnifiedResiduals {
        einstein: el.to_vec(),
        momentum1: m1,
        momentum2: m2,
        holonomy1: vec![0.0; 40],
        holonomy2: vec![0.0; 100],
    })
}

/// Derivative of the Legendre outputs along one second-derivative direction.
pub fn legendre_d2g_derivative(jet: &MetricJet, k: usize, p: usize) -> Result<Vec<f64>> {
    let mut j = jet.view().to_dual();
    j.d2g[k][p] = Dual::new(jet.d2g[k][p], 1.0);
    Ok(legendre_outputs(&j)?.iter().map(|d| d.eps).collect())
}
