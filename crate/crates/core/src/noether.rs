//! Canonical lifts of spacetime vector fields to the bundle of metrics, the
//! invariance of the Einstein–Hilbert density under them, and the
//! associated Noether current S^μ with its divergence.
//!
//! Everything is evaluated on Taylor expansions of a section in the base
//! coordinates, so the prolongation D_μ is an exact partial derivative.

use crate::eh_lagrangian::{hamiltonian, l_coeff_1, l_coeff_2_at, lagrangian};
use crate::error::Result;
use crate::jet_algebra::{pidx, Jet, MetricJet, Scalar, TaylorJet, PAIRS};
use crate::metric_dsl::{taylor_metric_jet, MetricFamily, VectorFamily};

type T3 = TaylorJet<35>;

/// The third-order Taylor polynomial of a section with the given jet.
pub fn section_from_jet(jet: &MetricJet) -> Result<Jet<T3>> {
    let o = 3;
    let x: [T3; 4] = [
        T3::variable(0, jet.x[0], o)?,
        T3::variable(1, jet.x[1], o)?,
        T3::variable(2, jet.x[2], o)?,
        T3::variable(3, jet.x[3], o)?,
    ];
    let h: [T3; 4] = [T3::variable(0, 0.0, o)?, T3::variable(1, 0.0, o)?, T3::variable(2, 0.0, o)?, T3::variable(3, 0.0, o)?];
    let zero = T3::constant(0.0, o)?;
    let mut out = Jet { x, g: [zero; 10], dg: [[zero; 4]; 10], d2g: [[zero; 10]; 10] };
    for k in 0..10 {
        let mut p = T3::constant(jet.g[k], o)?;
        for m in 0..4 {
            p += h[m] * jet.dg[k][m];
            for n in 0..4 {
                let hh = h[m] * h[n];
                p += hh * (0.5 * jet.d2g[k][pidx(m, n)]);
                for l in 0..4 {
                    p += hh * h[l] * (jet.d3g[k][crate::jet_algebra::tidx(m, n, l)] / 6.0);
                }
            }
        }
        out.g[k] = p;
        for m in 0..4 {
            out.dg[k][m] = p.partial(m);
        }
        for (q, &(a, b)) in PAIRS.iter().enumerate() {
            out.d2g[k][q] = out.dg[k][a].partial(b);
        }
    }
    Ok(out)
}

/// The lift j²Y_Z along a section, as Taylor expansions.
#[derive(Debug, Clone)]
pub struct Lift<S> {
    pub f: [S; 4],
    /// Y_{αβ}
    pub y: [S; 10],
    /// Y_{αβμ}, [pair][μ]
    pub y1: [[S; 4]; 10],
    /// Y_{αβ,μν}, [pair][pair]
    pub y2: [[S; 10]; 10],
}

/// Y_{αβ} = −(∂_αf^μ g_{μβ} + ∂_βf^μ g_{μα}),
/// Y_{αβμ} = D_μY_{αβ} − g_{αβ,ν}∂_μf^ν,
/// Y_{αβ,μν} = D_νY_{αβμ} − g_{αβ,μσ}∂_νf^σ.
pub fn lift_on_section(z: &VectorFamily, sec: &Jet<T3>) -> Result<Lift<T3>> {
    let f = z.eval(&sec.x)?;
    let df: [[T3; 4]; 4] = std::array::from_fn(|m| std::array::from_fn(|a| f[m].partial(a))); // df[μ][a] = ∂_a f^μ
    let y: [T3; 10] = std::array::from_fn(|k| {
        let (a, b) = PAIRS[k];
        let mut s = T3::cst(0.0);
        for m in 0..4 {
            s += df[m][a] * sec.g(m, b) + df[m][b] * sec.g(m, a);
        }
        -s
    });
    let y1: [[T3; 4]; 10] = std::array::from_fn(|k| {
        std::array::from_fn(|m| {
            let mut s = y[k].partial(m);
            for n in 0..4 {
                s -= sec.dg[k][n] * df[n][m];
            }
            s
        })
    });
    let y2: [[T3; 10]; 10] = std::array::from_fn(|k| {
        std::array::from_fn(|p| {
            let (m, n) = PAIRS[p];
            let mut s = y1[k][m].partial(n);
            for sg in 0..4 {
                s -= sec.d2g[k][pidx(m, sg)] * df[sg][n];
            }
            s
        })
    });
    Ok(Lift { f, y, y1, y2 })
}

/// Pointwise values of j²Y_Z at a jet.
#[derive(Debug, Clone)]
pub struct LiftedField {
    pub f: [f64; 4],
    pub y_ab: [f64; 10],
    pub y_abm: [[f64; 4]; 10],
    pub y_abmn: [[f64; 10]; 10],
    /// ∂_μ f^μ
    pub div_f: f64,
}

pub fn canonical_lift(z: &VectorFamily, jet: &MetricJet) -> Result<LiftedField> {
    jet.require(2)?;
    let sec = section_from_jet(jet)?;
    let l = lift_on_section(z, &sec)?;
    Ok(LiftedField {
        f: l.f.map(|v| v.value()),
        y_ab: l.y.map(|v| v.value()),
        y_abm: l.y1.map(|r| r.map(|v| v.value())),
        y_abmn: l.y2.map(|r| r.map(|v| v.value())),
        div_f: (0..4).map(|m| l.f[m].partial(m).value()).sum(),
    })
}

/// A residual together with the size of the largest term that entered it.
#[derive(Debug, Clone, Copy)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        self.value.abs() / self.scale
    }
}

/// Lie derivative of the density L d⁴x along j²Y_Z: j²Y_Z(L) + L ∂_μf^μ.
pub fn lagrangian_symmetry_residual(z: &VectorFamily, jet: &MetricJet) -> Result<Residual> {
    let y = canonical_lift(z, jet)?;
    let v = jet.view();
    let base = v.to_dual();
    let mut terms = vec![lagrangian(&v)? * y.div_f];
    for k in 0..10 {
        let mut j = base;
        j.g[k].eps = 1.0;
        terms.push(lagrangian(&j)?.eps * y.y_ab[k]);
        for m in 0..4 {
            let mut j = base;
            j.dg[k][m].eps = 1.0;
            terms.push(lagrangian(&j)?.eps * y.y_abm[k][m]);
        }
        for p in 0..10 {
            let mut j = base;
            j.d2g[k][p].eps = 1.0;
            terms.push(lagrangian(&j)?.eps * y.y_abmn[k][p]);
        }
    }
    Ok(Residual { value: terms.iter().sum(), scale: 1.0 + terms.iter().fold(0.0f64, |s, t| s.max(t.abs())) })
}

/// S^μ = A^μ − Σ_ν B^{νμ}g_{,ν} − Σ_{λ,ν} C^{λ,νμ}g_{,λν} (pair sums implied), with
/// A^μ = Y_{αβ}L^{αβ,μ} + Y_{αβν}L^{αβ,νμ} − f^μH,
/// B^{νμ} = f^νL^{αβ,μ} − f^μL^{αβ,ν},
/// C^{λ,νμ} = f^νL^{αβ,λμ} − f^μL^{αβ,λν}.
pub fn current_density<S: Scalar>(jet: &Jet<S>, f: &[S; 4], y: &[S; 10], y1: &[[S; 4]; 10]) -> Result<[S; 4]> {
    let lm1 = l_coeff_1(jet)?;
    let lmn = l_coeff_2_at(&jet.g)?;
    let h = hamiltonian(jet)?;
    Ok(std::array::from_fn(|mu| {
        let mut s = -(f[mu] * h);
        for k in 0..10 {
            s += y[k] * lm1[k][mu];
            for nu in 0..4 {
                s += y1[k][nu] * lmn[k][pidx(nu, mu)];
                s -= (f[nu] * lm1[k][mu] - f[mu] * lm1[k][nu]) * jet.dg[k][nu];
                for la in 0..4 {
                    s -= (f[nu] * lmn[k][pidx(la, mu)] - f[mu] * lmn[k][pidx(la, nu)]) * jet.d2g[k][pidx(la, nu)];
                }
            }
        }
        s
    }))
}

/// The current along a family and its divergence at a point.
#[derive(Debug, Clone)]
pub struct NoetherCurrent {
    pub s: [f64; 4],
    /// ∂_μS^μ
    pub divergence: Residual,
}

pub fn noether_current(z: &VectorFamily, fam: &MetricFamily, point: [f64; 4]) -> Result<NoetherCurrent> {
    let sec: Jet<T3> = taylor_metric_jet(fam, point, 3)?;
    let l = lift_on_section(z, &sec)?;
    let s = current_density(&sec, &l.f, &l.y, &l.y1)?;
    let parts: Vec<f64> = (0..4).map(|m| s[m].partial(m).value()).collect();
    let scale = 1.0 + s.iter().fold(0.0f64, |a, v| a.max(v.value().abs())) + parts.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(NoetherCurrent { s: s.map(|v| v.value()), divergence: Residual { value: parts.iter().sum(), scale } })
}

pub fn divergence_residual(z: &VectorFamily, fam: &MetricFamily, point: [f64; 4]) -> Result<f64> {
    Ok(noether_current(z, fam, point)?.divergence.value)
}

/// Five fixed polynomial vector fields in coordinates x0..x3.
pub fn polynomial_fields() -> Result<Vec<VectorFamily>> {
    let c = ["x0", "x1", "x2", "x3"];
    [
        ["1", "0", "0", "0"],
        ["0", "0", "0", "1"],
        ["x1", "0", "0", "0"],
        ["x0*x1", "x0^2", "0", "x2"],
        ["x1^2", "x0", "x3*x2", "1 + x0*x3"],
    ]
    .iter()
    .map(|comps| VectorFamily::from_strs(c, *comps))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet_algebra::random_jet;
    use crate::metric_dsl::corpus;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const XS: [&str; 4] = ["x0", "x1", "x2", "x3"];

    fn schw() -> MetricFamily {
        MetricFamily::from_json(corpus::SCHWARZSCHILD).unwrap()
    }

    const POINTS: [[f64; 4]; 4] = [[0.0, 3.0, 1.2, 0.0], [0.4, 4.5, 0.7, 1.0], [-1.0, 6.0, 2.0, 2.5], [2.0, 9.0, 1.5, -0.5]];

    #[test]
    fn section_reproduces_jet() {
        let jet = random_jet(&mut ChaCha8Rng::seed_from_u64(3), 3);
        let s = section_from_jet(&jet).unwrap();
        for k in 0..10 {
            assert!((s.g[k].value() - jet.g[k]).abs() < 1e-15);
            for m in 0..4 {
                assert!((s.dg[k][m].value() - jet.dg[k][m]).abs() < 1e-15);
            }
            for p in 0..10 {
                assert!((s.d2g[k][p].value() - jet.d2g[k][p]).abs() < 1e-14);
                for t in 0..4 {
                    let (a, b) = PAIRS[p];
                    let want = jet.d3g[k][crate::jet_algebra::tidx(a, b, t)];
                    assert!((s.d2g[k][p].partial(t).value() - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn lift_hand_values() {
        let jet = random_jet(&mut ChaCha8Rng::seed_from_u64(5), 2);
        let z = VectorFamily::from_strs(XS, ["x1", "0", "0", "0"]).unwrap();
        let y = canonical_lift(&z, &jet).unwrap();
        assert_eq!(y.y_ab[pidx(0, 1)], -jet.g[0]);
        assert_eq!(y.y_ab[pidx(1, 1)], -2.0 * jet.g[pidx(0, 1)]);
        assert_eq!(y.y_ab[pidx(2, 3)], 0.0);
        // a constant field is pure transport
        let t = VectorFamily::from_strs(XS, ["1", "0", "2", "0"]).unwrap();
        let y = canonical_lift(&t, &jet).unwrap();
        assert!(y.y_ab.iter().chain(y.y_abm.iter().flatten()).chain(y.y_abmn.iter().flatten()).all(|&v| v == 0.0));
        assert_eq!(y.f, [1.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn first_prolongation_matches_displayed_formula() {
        let mut r = ChaCha8Rng::seed_from_u64(6);
        let z = VectorFamily::from_strs(XS, ["x1^2 + x3", "x0*x2", "x1*x1*x3", "1 - x0^2"]).unwrap();
        for _ in 0..5 {
            let jet = random_jet(&mut r, 2);
            let y = canonical_lift(&z, &jet).unwrap();
            let xt: [T3; 4] = std::array::from_fn(|i| T3::variable(i, jet.x[i], 3).unwrap());
            let f = z.eval(&xt).unwrap();
            let d1 = |n: usize, a: usize| f[n].partial(a).value();
            let d2 = |n: usize, a: usize, m: usize| f[n].partial(a).partial(m).value();
            for (k, &(a, b)) in PAIRS.iter().enumerate() {
                for m in 0..4 {
                    let mut want = 0.0;
                    for n in 0..4 {
                        want -= d2(n, a, m) * jet.g(n, b) + d2(n, b, m) * jet.g(a, n) + d1(n, a) * jet.dg(n, b, m)
                            + d1(n, b) * jet.dg(a, n, m)
                            + d1(n, m) * jet.dg(a, b, n);
                    }
                    assert!((y.y_abm[k][m] - want).abs() < 1e-12 * (1.0 + want.abs()));
                }
            }
        }
    }

    #[test]
    fn lift_matches_finite_flow() {
        // Y_{αβ} = f^μ g_{αβ,μ} − (L_Z g)_{αβ}, with L_Z g from pulling g back
        // along the flow of Z
        let fam = schw();
        let z = VectorFamily::from_strs(XS, ["x1*0.3", "0.1*x0", "0.2*x2*x1", "x3 + 0.5"]).unwrap();
        let x0 = [0.2, 4.0, 1.1, 0.3];
        let jet = crate::metric_dsl::prolong_family(&fam, x0, 2).unwrap();
        let y = canonical_lift(&z, &jet).unwrap();
        let pulled = |t: f64| -> [f64; 10] {
            // RK4 on (x, J) with J the flow Jacobian
            let steps = 40;
            let h = t / steps as f64;
            let rhs = |s: &[f64; 20]| -> [f64; 20] {
                let xt: [T3; 4] = std::array::from_fn(|i| T3::variable(i, s[i], 1).unwrap());
                let f = z.eval(&xt).unwrap();
                let mut d = [0.0; 20];
                for m in 0..4 {
                    d[m] = f[m].value();
                    for a in 0..4 {
                        d[4 + 4 * m + a] = (0..4).map(|n| f[m].partial(n).value() * s[4 + 4 * n + a]).sum();
                    }
                }
                d
            };
            let mut s = [0.0; 20];
            s[..4].copy_from_slice(&x0);
            for i in 0..4 {
                s[4 + 5 * i] = 1.0;
            }
            let add = |a: &[f64; 20], b: &[f64; 20], c: f64| -> [f64; 20] { std::array::from_fn(|i| a[i] + c * b[i]) };
            for _ in 0..steps {
                let k1 = rhs(&s);
                let k2 = rhs(&add(&s, &k1, h / 2.0));
                let k3 = rhs(&add(&s, &k2, h / 2.0));
                let k4 = rhs(&add(&s, &k3, h));
                s = std::array::from_fn(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
            }
            let g = crate::metric_dsl::prolong_family(&fam, [s[0], s[1], s[2], s[3]], 0).unwrap();
            std::array::from_fn(|k| {
                let (a, b) = PAIRS[k];
                let mut v = 0.0;
                for m in 0..4 {
                    for n in 0..4 {
                        v += g.g(m, n) * s[4 + 4 * m + a] * s[4 + 4 * n + b];
                    }
                }
                v
            })
        };
        let e = 1e-3;
        let (p1, m1, p2, m2) = (pulled(e), pulled(-e), pulled(2.0 * e), pulled(-2.0 * e));
        for k in 0..10 {
            let lie = (8.0 * (p1[k] - m1[k]) - (p2[k] - m2[k])) / (12.0 * e);
            let transport: f64 = (0..4).map(|n| y.f[n] * jet.dg[k][n]).sum();
            assert!((y.y_ab[k] - (transport - lie)).abs() < 1e-7, "{k}");
        }
    }

    #[test]
    fn density_is_invariant() {
        let mut r = ChaCha8Rng::seed_from_u64(8);
        let zs = polynomial_fields().unwrap();
        let flat = MetricJet::minkowski();
        for z in &zs {
            assert_eq!(lagrangian_symmetry_residual(z, &flat).unwrap().value, 0.0);
            for _ in 0..3 {
                let jet = random_jet(&mut r, 3);
                let res = lagrangian_symmetry_residual(z, &jet).unwrap();
                assert!(res.relative() < 1e-8, "{res:?}");
            }
        }
        // a generic non-natural vertical field does change L
        let jet = random_jet(&mut r, 2);
        let mut j = jet.view().to_dual();
        j.g[0].eps = 1.0;
        assert!(lagrangian(&j).unwrap().eps.abs() > 1e-3);
    }

    #[test]
    fn current_is_the_canonical_current() {
        let fam = schw();
        let z = &polynomial_fields().unwrap()[4];
        let sec: Jet<T3> = taylor_metric_jet(&fam, POINTS[1], 3).unwrap();
        let l = lift_on_section(z, &sec).unwrap();
        let s = current_density(&sec, &l.f, &l.y, &l.y1).unwrap();
        let lm1 = l_coeff_1(&sec).unwrap();
        let lmn = l_coeff_2_at(&sec.g).unwrap();
        let lag = lagrangian(&sec).unwrap();
        for mu in 0..4 {
            let mut want = l.f[mu].value() * lag.value();
            for k in 0..10 {
                let fd: f64 = (0..4).map(|n| l.f[n].value() * sec.dg[k][n].value()).sum();
                want += (l.y[k].value() - fd) * lm1[k][mu].value();
                for la in 0..4 {
                    let fd2: f64 = (0..4).map(|n| l.f[n].value() * sec.d2g[k][pidx(la, n)].value()).sum();
                    want += (l.y1[k][la].value() - fd2) * lmn[k][pidx(la, mu)].value();
                }
            }
            assert!((s[mu].value() - want).abs() < 1e-10 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn current_is_conserved_on_vacuum_solutions() {
        let fam = schw();
        for z in polynomial_fields().unwrap() {
            for p in POINTS {
                let c = noether_current(&z, &fam, p).unwrap();
                assert!(c.divergence.value.abs() < 1e-6, "{c:?}");
            }
        }
        let t = &polynomial_fields().unwrap()[0];
        let c = noether_current(t, &fam, POINTS[0]).unwrap();
        assert!(c.s.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn flat_space_and_linearity() {
        let flat = MetricFamily::from_json(corpus::MINKOWSKI).unwrap();
        let affine = VectorFamily::from_strs(XS, ["x1 + 2", "x0", "3*x3", "-x2"]).unwrap();
        let c = noether_current(&affine, &flat, [0.3, 1.0, -2.0, 0.5]).unwrap();
        assert_eq!(c.s, [0.0; 4]);
        for z in polynomial_fields().unwrap() {
            let c = noether_current(&z, &flat, [0.3, 1.0, -2.0, 0.5]).unwrap();
            assert!(c.divergence.value.abs() < 1e-12);
            let c2 = noether_current(&z.scaled(2.0), &schw(), POINTS[2]).unwrap();
            let c1 = noether_current(&z, &schw(), POINTS[2]).unwrap();
            for m in 0..4 {
                assert!((c2.s[m] - 2.0 * c1.s[m]).abs() <= 1e-14 * (1.0 + c1.s[m].abs()));
            }
        }
    }

    #[test]
    fn current_is_not_conserved_off_shell() {
        let fam = MetricFamily::from_json(corpus::NON_SOLUTION).unwrap();
        let z = &polynomial_fields().unwrap()[3];
        let worst = [[0.2, 0.8, 0.1, 0.0], [0.5, 0.3, 0.0, 0.2]]
            .iter()
            .map(|&p| noether_current(z, &fam, p).unwrap().divergence.relative())
            .fold(0.0f64, f64::max);
        assert!(worst > 1e-3, "{worst}");
    }
}
