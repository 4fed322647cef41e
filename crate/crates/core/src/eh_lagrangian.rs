//! The Einstein–Hilbert density, its split into an acceleration-linear part
//! and a remainder, the Euler–Lagrange tensors and the covariant Hamiltonian.
//!
//! Packing: `Lmn[k][p]` is L^{αβ,μν} for ordered pairs k = (αβ), p = (μν), so
//! that L = Σ_k Σ_{all μ,ν} L^{αβ,μν} g_{αβ,μν} + L0, i.e. the ordered (μν)
//! sum carries a factor n(μν).

use crate::curvature::{self, inverse, Mat4};
use crate::error::Result;
use crate::jet_algebra::{pidx, Jet, MetricJet, Scalar, MULT, PAIRS};

/// L_V = ρ g^{αβ} R_{αβ}.
pub fn lagrangian<T: Scalar>(jet: &Jet<T>) -> Result<T> {
    let p = curvature::pack(jet)?;
    Ok(p.rho * p.scalar)
}

/// L^{αβ,μν} = (n(αβ)/2) ρ (g^{αμ}g^{βν} + g^{αν}g^{βμ} − 2g^{αβ}g^{μν}).
pub fn l_coeff_2<T: Scalar>(ginv: &Mat4<T>, rho: T) -> [[T; 10]; 10] {
    let mut out = [[T::zero(); 10]; 10];
    for (k, &(a, b)) in PAIRS.iter().enumerate() {
        let f = rho * (MULT[k] * 0.5);
        for (p, &(m, n)) in PAIRS.iter().enumerate() {
            out[k][p] = f * (ginv[a][m] * ginv[b][n] + ginv[a][n] * ginv[b][m] - ginv[a][b] * ginv[m][n] * 2.0);
        }
    }
    out
}

/// L^{αβ,μν} at a metric point.
pub fn l_coeff_2_at<T: Scalar>(g: &[T; 10]) -> Result<[[T; 10]; 10]> {
    let inv = inverse(g)?;
    Ok(l_coeff_2(&inv.ginv, inv.rho))
}

/// L0 = ρ g^{αβ}{ g^{γδ}(g_{δμ,β}Γ^μ_{αγ} − g_{δμ,γ}Γ^μ_{αβ}) + Γ^δ_{αβ}Γ^γ_{γδ} − Γ^δ_{αγ}Γ^γ_{βδ} }.
pub fn l_zero<T: Scalar>(jet: &Jet<T>) -> Result<T> {
    let inv = inverse(&jet.g)?;
    let gi = &inv.ginv;
    let gm = curvature::gamma(jet, gi);
    // x[c][m][b] = g^{cd} g_{dm,b}
    let mut x = [[[T::zero(); 4]; 4]; 4];
    for c in 0..4 {
        for m in 0..4 {
            for b in 0..4 {
                let mut s = T::zero();
                for d in 0..4 {
                    s += gi[c][d] * jet.dg(d, m, b);
                }
                x[c][m][b] = s;
            }
        }
    }
    // contracted Christoffels: v^μ = g^{αβ}Γ^μ_{αβ}, trace_δ = Γ^γ_{γδ}
    let mut v = [T::zero(); 4];
    let mut trace = [T::zero(); 4];
    for m in 0..4 {
        for a in 0..4 {
            trace[m] += gm[a][a][m];
            for b in 0..4 {
                v[m] += gi[a][b] * gm[m][a][b];
            }
        }
    }
    let mut s = T::zero();
    for m in 0..4 {
        // −g^{γδ} g_{δμ,γ} v^μ + v^δ trace_δ
        let mut w = T::zero();
        for c in 0..4 {
            w += x[c][m][c];
        }
        s += v[m] * (trace[m] - w);
    }
    for a in 0..4 {
        for b in 0..4 {
            let gab = gi[a][b];
            let mut t = T::zero();
            for c in 0..4 {
                for m in 0..4 {
                    t += x[c][m][b] * gm[m][a][c] - gm[m][a][c] * gm[c][b][m];
                }
            }
            s += gab * t;
        }
    }
    Ok(inv.rho * s)
}

/// ∂L0/∂g_{αβ,μ} (ordered pairs) by forward differentiation.
pub fn dl0_ddg<T: Scalar>(jet: &Jet<T>) -> Result<[[T; 4]; 10]> {
    let base = jet.to_dual();
    let mut out = [[T::zero(); 4]; 10];
    for k in 0..10 {
        for m in 0..4 {
            let mut j = base;
            j.dg[k][m].eps = T::one();
            out[k][m] = l_zero(&j)?.eps;
        }
    }
    Ok(out)
}

/// D_ν L^{αβ,μν} summed over ν, i.e. Σ_ν Σ_{λ≤σ} ∂L^{αβ,μν}/∂g_{λσ} g_{λσ,ν}.
pub fn div_l_coeff_2<T: Scalar>(jet: &Jet<T>) -> Result<[[T; 4]; 10]> {
    let mut out = [[T::zero(); 4]; 10];
    for n in 0..4 {
        let g = std::array::from_fn(|k| crate::jet_algebra::Dual::new(jet.g[k], jet.dg[k][n]));
        let lmn = l_coeff_2_at(&g)?;
        for k in 0..10 {
            for m in 0..4 {
                out[k][m] += lmn[k][pidx(m, n)].eps;
            }
        }
    }
    Ok(out)
}

/// L^{αβ,μ} = ∂L0/∂g_{αβ,μ} − D_ν L^{αβ,μν}; a function on J¹.
pub fn l_coeff_1<T: Scalar>(jet: &Jet<T>) -> Result<[[T; 4]; 10]> {
    let mut out = dl0_ddg(jet)?;
    let div = div_l_coeff_2(jet)?;
    for k in 0..10 {
        for m in 0..4 {
            out[k][m] -= div[k][m];
        }
    }
    Ok(out)
}

/// L^{αβ} = −ρ n(αβ)(R^{αβ} − ½g^{αβ}R).
pub fn euler_lagrange<T: Scalar>(jet: &Jet<T>) -> Result<[T; 10]> {
    let p = curvature::pack(jet)?;
    Ok(std::array::from_fn(|k| {
        let (a, b) = PAIRS[k];
        -(p.rho * p.einstein_upper[a][b]) * MULT[k]
    }))
}

/// The defining expression ∂L/∂g_{αβ} − D_μ L^{αβ,μ} (2-jet data suffices).
pub fn euler_lagrange_defining<T: Scalar>(jet: &Jet<T>) -> Result<[T; 10]> {
    let base = jet.to_dual();
    let mut out = [T::zero(); 10];
    for (k, o) in out.iter_mut().enumerate() {
        let mut j = base;
        j.g[k].eps = T::one();
        *o = lagrangian(&j)?.eps;
    }
    for m in 0..4 {
        let lm1 = l_coeff_1(&jet.seed_total(m, None))?;
        for k in 0..10 {
            out[k] -= lm1[k][m].eps;
        }
    }
    Ok(out)
}

/// D_τ L^{αβ}, indexed [pair][τ]; needs a 3-jet.
pub fn d_euler_lagrange(jet: &MetricJet) -> Result<[[f64; 4]; 10]> {
    jet.require(3)?;
    let mut out = [[0.0; 4]; 10];
    for t in 0..4 {
        let el = euler_lagrange(&jet.view().seed_total(t, Some(&jet.d3g)))?;
        for k in 0..10 {
            out[k][t] = el[k].eps;
        }
    }
    Ok(out)
}

/// H = ρ g_{αβ,μ} g_{kl,ν} H^{αβklμν}, summed over all index values, with
/// H^{αβklμν} = ¼g^{αβ}g^{kl}g^{μν} − ¼g^{αk}g^{βl}g^{μν} + ½g^{αk}g^{lμ}g^{βν} − ½g^{αβ}g^{lν}g^{kμ}.
pub fn hamiltonian<T: Scalar>(jet: &Jet<T>) -> Result<T> {
    let inv = inverse(&jet.g)?;
    let gi = &inv.ginv;
    let d = |a: usize, b: usize, m: usize| jet.dg(a, b, m);
    // raise the three indices of g_{ab,c} one at a time
    let mut r1 = [[[T::zero(); 4]; 4]; 4];
    let mut r2 = [[[T::zero(); 4]; 4]; 4];
    let mut up = [[[T::zero(); 4]; 4]; 4];
    for k in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let mut s = T::zero();
                for a in 0..4 {
                    s += gi[k][a] * d(a, b, c);
                }
                r1[k][b][c] = s;
            }
        }
    }
    for k in 0..4 {
        for l in 0..4 {
            for c in 0..4 {
                let mut s = T::zero();
                for b in 0..4 {
                    s += gi[l][b] * r1[k][b][c];
                }
                r2[k][l][c] = s;
            }
        }
    }
    for k in 0..4 {
        for l in 0..4 {
            for n in 0..4 {
                let mut s = T::zero();
                for c in 0..4 {
                    s += gi[n][c] * r2[k][l][c];
                }
                up[k][l][n] = s;
            }
        }
    }
    let mut t = [T::zero(); 4];
    for m in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                t[m] += gi[a][b] * d(a, b, m);
            }
        }
    }
    let mut s = T::zero();
    for m in 0..4 {
        for n in 0..4 {
            s += t[m] * t[n] * gi[m][n] * 0.25;
        }
        // s^μ = g^{kμ}g^{lν} g_{kl,ν} = r2 traced on (l, ν) with k raised
        let mut sm = T::zero();
        for l in 0..4 {
            sm += r2[m][l][l];
        }
        s -= t[m] * sm * 0.5;
    }
    for k in 0..4 {
        for l in 0..4 {
            for n in 0..4 {
                s += d(k, l, n) * (up[k][n][l] * 0.5 - up[k][l][n] * 0.25);
            }
        }
    }
    Ok(inv.rho * s)
}

/// The Hamiltonian by the literal 4⁶-term kernel contraction.
pub fn hamiltonian_kernel(jet: &MetricJet) -> Result<f64> {
    let inv = inverse(&jet.g)?;
    let gi = &inv.ginv;
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for m in 0..4 {
                let x = jet.dg(a, b, m);
                for k in 0..4 {
                    for l in 0..4 {
                        for n in 0..4 {
                            let h = 0.25 * gi[a][b] * gi[k][l] * gi[m][n] - 0.25 * gi[a][k] * gi[b][l] * gi[m][n]
                                + 0.5 * gi[a][k] * gi[l][m] * gi[b][n]
                                - 0.5 * gi[a][b] * gi[l][n] * gi[k][m];
                            s += x * jet.dg(k, l, n) * h;
                        }
                    }
                }
            }
        }
    }
    Ok(inv.rho * s)
}

/// Σ n(μν)L^{αβ,μν}g_{αβ,μν} + Σ L^{αβ,μ}g_{αβ,μ} − L, the Legendre-transform form.
pub fn hamiltonian_legendre(jet: &Jet<f64>) -> Result<f64> {
    let lmn = l_coeff_2_at(&jet.g)?;
    let lm1 = l_coeff_1(jet)?;
    let mut s = -lagrangian(jet)?;
    for k in 0..10 {
        for p in 0..10 {
            s += MULT[p] * lmn[k][p] * jet.d2g[k][p];
        }
        for m in 0..4 {
            s += lm1[k][m] * jet.dg[k][m];
        }
    }
    Ok(s)
}

/// ∂L/∂g_{αβ,μν} (ordered coordinates), indexed [pair][pair].
pub fn dl_dd2g(jet: &Jet<f64>) -> Result<[[f64; 10]; 10]> {
    let base = jet.to_dual();
    let mut out = [[0.0; 10]; 10];
    for k in 0..10 {
        for p in 0..10 {
            let mut j = base;
            j.d2g[k][p].eps = 1.0;
            out[k][p] = lagrangian(&j)?.eps;
        }
    }
    Ok(out)
}

/// All evaluated pieces of the decomposition at a jet.
#[derive(Debug, Clone)]
pub struct EHFields {
    pub l: f64,
    pub l0: f64,
    pub lmn: [[f64; 10]; 10],
    pub lm1: [[f64; 4]; 10],
    pub el: [f64; 10],
    /// Present for 3-jets.
    pub del: Option<[[f64; 4]; 10]>,
    pub h: f64,
}

impl EHFields {
    pub fn evaluate(jet: &MetricJet) -> Result<Self> {
        jet.require(2)?;
        let v = jet.view();
        Ok(EHFields {
            l: lagrangian(&v)?,
            l0: l_zero(&v)?,
            lmn: l_coeff_2_at(&v.g)?,
            lm1: l_coeff_1(&v)?,
            el: euler_lagrange(&v)?,
            del: if jet.order >= 3 { Some(d_euler_lagrange(jet)?) } else { None },
            h: hamiltonian(&v)?,
        })
    }
}

/// Residual of L = Σ n(μν)Lmn·g_{,μν} + L0, normalised by (1 + largest term).
pub fn decomposition_residual(jet: &Jet<f64>) -> Result<f64> {
    let l = lagrangian(jet)?;
    let l0 = l_zero(jet)?;
    let lmn = l_coeff_2_at(&jet.g)?;
    let mut biggest = l.abs().max(l0.abs());
    let mut s = l0;
    for k in 0..10 {
        for p in 0..10 {
            let t = MULT[p] * lmn[k][p] * jet.d2g[k][p];
            biggest = biggest.max(t.abs());
            s += t;
        }
    }
    Ok((l - s).abs() / (1.0 + biggest))
}

/// Residual of the Euler identity Σ(∂L0/∂g_{,μ})g_{,μ} = 2L0.
pub fn euler_homogeneity_residual(jet: &Jet<f64>) -> Result<f64> {
    let d = dl0_ddg(jet)?;
    let l0 = l_zero(jet)?;
    let mut s = 0.0;
    let mut biggest = 2.0 * l0.abs();
    for k in 0..10 {
        for m in 0..4 {
            let t = d[k][m] * jet.dg[k][m];
            biggest = biggest.max(t.abs());
            s += t;
        }
    }
    Ok((s - 2.0 * l0).abs() / (1.0 + biggest))
}
