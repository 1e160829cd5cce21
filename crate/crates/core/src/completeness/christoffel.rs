use crate::error::{Error, Result};
use crate::field::SymMetricField;
use crate::linalg::Sym3;

/// `gamma[k][i][j]` = `Gamma^k_ij`.
pub type Christoffel = [[[f64; 3]; 3]; 3];

/// Levi-Civita symbols `Gamma^k_ij = g^kl (d_i g_jl + d_j g_il - d_l g_ij) / 2`.
pub fn christoffel(metric: &SymMetricField, p: [f64; 3]) -> Result<Christoffel> {
    let g = metric.jet(p)?;
    let gv: Sym3<f64> = g.values();
    if !gv.is_positive_definite() {
        return Err(Error::NotPositiveDefinite { what: "metric", point: p });
    }
    let inv = gv.inverse().ok_or(Error::Degenerate { what: "metric", point: p, value: gv.det() })?;
    let d = |a: usize, b: usize, c: usize| g.get(a, b).grad[c];
    let mut out = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let mut first = [0.0; 3];
            for (l, f) in first.iter_mut().enumerate() {
                *f = 0.5 * (d(j, l, i) + d(i, l, j) - d(i, j, l));
            }
            for k in 0..3 {
                let v = (0..3).map(|l| inv.get(k, l) * first[l]).sum();
                out[k][i][j] = v;
                out[k][j][i] = v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::jet::Scalar;

    #[test]
    fn flat_is_zero() {
        let g = christoffel(&SymMetricField::euclidean(), [0.3, 0.1, 2.0]).unwrap();
        assert!(g.iter().flatten().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn conformally_flat_closed_form() {
        // phi = 0.3 x + 0.2 y z, metric e^{2 phi} delta.
        let e = ScalarField::from_jet_fn(|[x, y, z]| ((x * 0.3 + y * z * 0.2) * 2.0).exp());
        let z = ScalarField::constant(0.0);
        let g = SymMetricField::from_components([e.clone(), z.clone(), z.clone(), e.clone(), z, e]);
        let p = [0.4, -0.7, 1.1];
        let dphi = [0.3, 0.2 * p[2], 0.2 * p[1]];
        let gam = christoffel(&g, p).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let kd = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    let want = kd(k, i) * dphi[j] + kd(k, j) * dphi[i] - kd(i, j) * dphi[k];
                    assert!((gam[k][i][j] - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn sphere_block() {
        // r^2 (dtheta^2 + sin^2 theta dphi^2) with a unit radial part.
        let one = ScalarField::constant(1.0);
        let z = ScalarField::constant(0.0);
        let r2 = ScalarField::from_jet_fn(|[r, _, _]| r * r);
        let r2s2 = ScalarField::from_jet_fn(|[r, th, _]| r * r * th.sin().square());
        let g = SymMetricField::from_components([one, z.clone(), z.clone(), r2, z, r2s2]);
        let th = 0.7;
        let gam = christoffel(&g, [3.0, th, 0.2]).unwrap();
        assert!((gam[2][1][2] - th.cos() / th.sin()).abs() < 1e-14);
        assert!((gam[1][2][2] + th.sin() * th.cos()).abs() < 1e-14);
    }
}
