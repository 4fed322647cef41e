//! Metric algebra and Levi-Civita curvature on jets.
//!
//! Everything here is generic over [`Scalar`] so the same formulas feed the
//! automatic-differentiation checks elsewhere in the crate.

use crate::error::{Error, Result};
use crate::jet_algebra::{pidx, Jet, MetricJet, Scalar};

pub type Mat4<T> = [[T; 4]; 4];
pub type Gamma<T> = [[[T; 4]; 4]; 4];

pub fn full_metric<T: Scalar>(g: &[T; 10]) -> Mat4<T> {
    std::array::from_fn(|a| std::array::from_fn(|b| g[pidx(a, b)]))
}

/// Inverse metric, determinant and ρ = √|det g|.
#[derive(Debug, Clone, Copy)]
pub struct Inverse<T> {
    pub ginv: Mat4<T>,
    pub det: T,
    pub rho: T,
}

/// Cofactor inverse of the packed symmetric metric.
pub fn inverse<T: Scalar>(g: &[T; 10]) -> Result<Inverse<T>> {
    let m = full_metric(g);
    // 2×2 minors of the bottom two rows
    let s0 = m[0][0] * m[1][1] - m[1][0] * m[0][1];
    let s1 = m[0][0] * m[1][2] - m[1][0] * m[0][2];
    let s2 = m[0][0] * m[1][3] - m[1][0] * m[0][3];
    let s3 = m[0][1] * m[1][2] - m[1][1] * m[0][2];
    let s4 = m[0][1] * m[1][3] - m[1][1] * m[0][3];
    let s5 = m[0][2] * m[1][3] - m[1][2] * m[0][3];
    let c5 = m[2][2] * m[3][3] - m[3][2] * m[2][3];
    let c4 = m[2][1] * m[3][3] - m[3][1] * m[2][3];
    let c3 = m[2][1] * m[3][2] - m[3][1] * m[2][2];
    let c2 = m[2][0] * m[3][3] - m[3][0] * m[2][3];
    let c1 = m[2][0] * m[3][2] - m[3][0] * m[2][2];
    let c0 = m[2][0] * m[3][1] - m[3][0] * m[2][1];
    let det = s0 * c5 - s1 * c4 + s2 * c3 + s3 * c2 - s4 * c1 + s5 * c0;
    let scale = g.iter().fold(0.0f64, |s, v| s.max(v.re().abs()));
    let d = det.re();
    if !d.is_finite() || d.abs() <= 1e-13 * scale.powi(4).max(f64::MIN_POSITIVE) {
        return Err(Error::SingularMetric { det: d });
    }
    let inv = det.recip();
    let mut r = [[T::zero(); 4]; 4];
    r[0][0] = (m[1][1] * c5 - m[1][2] * c4 + m[1][3] * c3) * inv;
    r[0][1] = (-m[0][1] * c5 + m[0][2] * c4 - m[0][3] * c3) * inv;
    r[0][2] = (m[3][1] * s5 - m[3][2] * s4 + m[3][3] * s3) * inv;
    r[0][3] = (-m[2][1] * s5 + m[2][2] * s4 - m[2][3] * s3) * inv;
    r[1][1] = (m[0][0] * c5 - m[0][2] * c2 + m[0][3] * c1) * inv;
    r[1][2] = (-m[3][0] * s5 + m[3][2] * s2 - m[3][3] * s1) * inv;
    r[1][3] = (m[2][0] * s5 - m[2][2] * s2 + m[2][3] * s1) * inv;
    r[2][2] = (m[3][0] * s4 - m[3][1] * s2 + m[3][3] * s0) * inv;
    r[2][3] = (-m[2][0] * s4 + m[2][1] * s2 - m[2][3] * s0) * inv;
    r[3][3] = (m[2][0] * s3 - m[2][1] * s1 + m[2][2] * s0) * inv;
    for a in 0..4 {
        for b in 0..a {
            r[a][b] = r[b][a];
        }
    }
    Ok(Inverse { ginv: r, det, rho: det.abs().sqrt() })
}

/// g^{αβ} for a packed metric.
pub fn invert_metric(g: &[f64; 10]) -> Result<Mat4<f64>> {
    Ok(inverse(g)?.ginv)
}

/// Γ^λ_{μν} = ½ g^{λρ}(g_{νρ,μ} + g_{ρμ,ν} − g_{μν,ρ}), indexed [λ][μ][ν].
pub fn gamma<T: Scalar>(jet: &Jet<T>, ginv: &Mat4<T>) -> Gamma<T> {
    let mut first = [[[T::zero(); 4]; 4]; 4];
    for r in 0..4 {
        for m in 0..4 {
            for n in m..4 {
                let v = (jet.dg(n, r, m) + jet.dg(r, m, n) - jet.dg(m, n, r)) * 0.5;
                first[r][m][n] = v;
                first[r][n][m] = v;
            }
        }
    }
    let mut out = [[[T::zero(); 4]; 4]; 4];
    for l in 0..4 {
        for m in 0..4 {
            for n in m..4 {
                let mut s = T::zero();
                for r in 0..4 {
                    s += ginv[l][r] * first[r][m][n];
                }
                out[l][m][n] = s;
                out[l][n][m] = s;
            }
        }
    }
    out
}

/// Christoffel symbols of a 1-jet.
pub fn christoffel(jet: &MetricJet) -> Result<Gamma<f64>> {
    jet.require(1)?;
    let inv = inverse(&jet.g)?;
    Ok(gamma(&jet.view(), &inv.ginv))
}

/// D_γΓ^λ_{μν} on holonomic data, indexed [γ][λ][μ][ν].
pub fn d_gamma<T: Scalar>(jet: &Jet<T>) -> Result<[Gamma<T>; 4]> {
    let mut out = [[[[T::zero(); 4]; 4]; 4]; 4];
    for (c, slot) in out.iter_mut().enumerate() {
        let seeded = jet.seed_total(c, None);
        let inv = inverse(&seeded.g)?;
        let gm = gamma(&seeded, &inv.ginv);
        for l in 0..4 {
            for m in 0..4 {
                for n in 0..4 {
                    slot[l][m][n] = gm[l][m][n].eps;
                }
            }
        }
    }
    Ok(out)
}

/// R_{αβ} = D_γΓ^γ_{αβ} − D_αΓ^γ_{γβ} + Γ^γ_{αβ}Γ^δ_{δγ} − Γ^γ_{δβ}Γ^δ_{αγ}.
pub fn ricci_from<T: Scalar>(gm: &Gamma<T>, dgm: &[Gamma<T>; 4]) -> Mat4<T> {
    let mut trace = [T::zero(); 4];
    for (c, t) in trace.iter_mut().enumerate() {
        for d in 0..4 {
            *t += gm[d][d][c];
        }
    }
    let mut r = [[T::zero(); 4]; 4];
    for a in 0..4 {
        for b in a..4 {
            let mut s = T::zero();
            for c in 0..4 {
                s += dgm[c][c][a][b] - dgm[a][c][c][b] + gm[c][a][b] * trace[c];
                for d in 0..4 {
                    s -= gm[c][d][b] * gm[d][a][c];
                }
            }
            r[a][b] = s;
            r[b][a] = s;
        }
    }
    r
}

/// Every curvature quantity of a 2-jet.
#[derive(Debug, Clone, Copy)]
pub struct CurvaturePack<T> {
    pub ginv: Mat4<T>,
    pub rho: T,
    pub gamma: Gamma<T>,
    pub ricci: Mat4<T>,
    pub scalar: T,
    pub einstein_upper: Mat4<T>,
}

pub fn pack<T: Scalar>(jet: &Jet<T>) -> Result<CurvaturePack<T>> {
    let inv = inverse(&jet.g)?;
    let gm = gamma(jet, &inv.ginv);
    let ric = ricci_from(&gm, &d_gamma(jet)?);
    let (scalar, einstein_upper) = einstein_from(&inv.ginv, &ric);
    Ok(CurvaturePack { ginv: inv.ginv, rho: inv.rho, gamma: gm, ricci: ric, scalar, einstein_upper })
}

/// R = g^{αβ}R_{αβ} and G^{αβ} = g^{αμ}g^{βν}R_{μν} − ½g^{αβ}R.
pub fn einstein_from<T: Scalar>(ginv: &Mat4<T>, ric: &Mat4<T>) -> (T, Mat4<T>) {
    let mut scalar = T::zero();
    for a in 0..4 {
        for b in 0..4 {
            scalar += ginv[a][b] * ric[a][b];
        }
    }
    // half-raised: h[a][n] = g^{aμ}R_{μn}
    let mut h = [[T::zero(); 4]; 4];
    for a in 0..4 {
        for n in 0..4 {
            let mut s = T::zero();
            for m in 0..4 {
                s += ginv[a][m] * ric[m][n];
            }
            h[a][n] = s;
        }
    }
    let mut g_up = [[T::zero(); 4]; 4];
    for a in 0..4 {
        for b in a..4 {
            let mut s = T::zero();
            for n in 0..4 {
                s += h[a][n] * ginv[b][n];
            }
            s -= ginv[a][b] * scalar * 0.5;
            g_up[a][b] = s;
            g_up[b][a] = s;
        }
    }
    (scalar, g_up)
}

pub fn curvature_pack(jet: &MetricJet) -> Result<CurvaturePack<f64>> {
    jet.require(2)?;
    pack(&jet.view())
}

pub fn ricci(jet: &MetricJet) -> Result<Mat4<f64>> {
    Ok(curvature_pack(jet)?.ricci)
}

pub fn scalar_and_einstein(jet: &MetricJet) -> Result<(f64, Mat4<f64>)> {
    let p = curvature_pack(jet)?;
    Ok((p.scalar, p.einstein_upper))
}

/// Largest absolute entry.
pub fn max_abs(m: &Mat4<f64>) -> f64 {
    m.iter().flatten().fold(0.0, |s, v| s.max(v.abs()))
}
