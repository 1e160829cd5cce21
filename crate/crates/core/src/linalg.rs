//! Small dense linear algebra used pointwise: packed symmetric 3x3
//! matrices generic over [`Scalar`], pivoted 4x4 LU, and f64 eigen helpers.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::jet::{sym_index, Scalar};

/// Packed symmetric 3x3 matrix `[xx, xy, xz, yy, yz, zz]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym3<T>(pub [T; 6]);

impl<T: Scalar> Sym3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::constant(1.0), T::constant(0.0));
        Sym3([o, z, z, o, z, o])
    }

    pub fn diagonal(d: [T; 3]) -> Self {
        let z = T::constant(0.0);
        Sym3([d[0], z, z, d[1], z, d[2]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.0[sym_index(i, j)]
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> T) -> Self {
        let z = T::constant(0.0);
        let mut out = [z; 6];
        let mut n = 0;
        for i in 0..3 {
            for j in i..3 {
                out[n] = f(i, j);
                n += 1;
            }
        }
        Sym3(out)
    }

    pub fn scale(&self, s: T) -> Self {
        Sym3(self.0.map(|x| x * s))
    }

    pub fn add(&self, o: &Self) -> Self {
        Sym3::from_fn(|i, j| self.get(i, j) + o.get(i, j))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Sym3::from_fn(|i, j| self.get(i, j) - o.get(i, j))
    }

    /// `self + s * v v^T`.
    pub fn add_outer(&self, v: &[T; 3], s: T) -> Self {
        Sym3::from_fn(|i, j| self.get(i, j) + s * v[i] * v[j])
    }

    pub fn det(&self) -> T {
        let a = self;
        a.get(0, 0) * (a.get(1, 1) * a.get(2, 2) - a.get(1, 2) * a.get(1, 2))
            - a.get(0, 1) * (a.get(0, 1) * a.get(2, 2) - a.get(1, 2) * a.get(0, 2))
            + a.get(0, 2) * (a.get(0, 1) * a.get(1, 2) - a.get(1, 1) * a.get(0, 2))
    }

    /// Cofactor inverse; `None` when the determinant value is zero.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.value() == 0.0 {
            return None;
        }
        let a = self;
        let inv_d = d.recip();
        let c00 = a.get(1, 1) * a.get(2, 2) - a.get(1, 2) * a.get(1, 2);
        let c01 = a.get(0, 2) * a.get(1, 2) - a.get(0, 1) * a.get(2, 2);
        let c02 = a.get(0, 1) * a.get(1, 2) - a.get(0, 2) * a.get(1, 1);
        let c11 = a.get(0, 0) * a.get(2, 2) - a.get(0, 2) * a.get(0, 2);
        let c12 = a.get(0, 2) * a.get(0, 1) - a.get(0, 0) * a.get(1, 2);
        let c22 = a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(0, 1);
        Some(Sym3([c00, c01, c02, c11, c12, c22]).scale(inv_d))
    }

    pub fn mul_vec(&self, v: &[T; 3]) -> [T; 3] {
        let z = T::constant(0.0);
        let mut out = [z; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.get(i, 0) * v[0] + self.get(i, 1) * v[1] + self.get(i, 2) * v[2];
        }
        out
    }

    /// `u^T A v`.
    pub fn quad(&self, u: &[T; 3], v: &[T; 3]) -> T {
        let av = self.mul_vec(v);
        u[0] * av[0] + u[1] * av[1] + u[2] * av[2]
    }

    pub fn values(&self) -> Sym3<f64> {
        Sym3(self.0.map(|x| x.value()))
    }
}

impl Sym3<f64> {
    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.get(i, j))
    }

    /// Product of two symmetric matrices as a general 3x3.
    pub fn matmul(&self, o: &Sym3<f64>) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|k| self.get(i, k) * o.get(k, j)).sum();
            }
        }
        m
    }

    pub fn is_positive_definite(&self) -> bool {
        cholesky3(self).is_some()
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        let e = SymmetricEigen::new(self.to_matrix()).eigenvalues;
        let mut v = [e[0], e[1], e[2]];
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Lower Cholesky factor of an SPD matrix.
pub fn cholesky3(a: &Sym3<f64>) -> Option<[[f64; 3]; 3]> {
    let mut l = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 0.0) {
            return None;
        }
        l[j][j] = d.sqrt();
        for i in (j + 1)..3 {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    Some(l)
}

/// Extreme generalized eigenvalues of the pencil `(a, b)` with `b` SPD:
/// Cholesky-reduce `b` and solve the symmetric problem `L^-1 a L^-T`.
pub fn generalized_eigen_range(a: &Sym3<f64>, b: &Sym3<f64>) -> Option<(f64, f64)> {
    let l = cholesky3(b)?;
    let lm = Matrix3::from_fn(|i, j| l[i][j]);
    let linv = lm.try_inverse()?;
    let m = linv * a.to_matrix() * linv.transpose();
    let m = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(m).eigenvalues;
    let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi))
}

/// Determinant of a 4x4 matrix by LU with partial pivoting (pivot choice
/// on values, so the same sequence of operations is used for jets).
pub fn lu_det4<T: Scalar>(m: [[T; 4]; 4]) -> T {
    let mut a = m;
    let mut det = T::constant(1.0);
    for col in 0..4 {
        let mut piv = col;
        for r in (col + 1)..4 {
            if a[r][col].value().abs() > a[piv][col].value().abs() {
                piv = r;
            }
        }
        if a[piv][col].value() == 0.0 {
            return T::constant(0.0);
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let p = a[col][col];
        det = det * p;
        let inv_p = p.recip();
        for r in (col + 1)..4 {
            let f = a[r][col] * inv_p;
            for c in (col + 1)..4 {
                a[r][c] = a[r][c] - f * a[col][c];
            }
        }
    }
    det
}

/// Inverse of a 4x4 matrix by Gauss-Jordan elimination with partial pivoting.
pub fn inverse4<T: Scalar>(m: [[T; 4]; 4]) -> Option<[[T; 4]; 4]> {
    let z = T::constant(0.0);
    let mut a = m;
    let mut inv = [[z; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = T::constant(1.0);
    }
    for col in 0..4 {
        let mut piv = col;
        for r in (col + 1)..4 {
            if a[r][col].value().abs() > a[piv][col].value().abs() {
                piv = r;
            }
        }
        if a[piv][col].value() == 0.0 {
            return None;
        }
        a.swap(piv, col);
        inv.swap(piv, col);
        let inv_p = a[col][col].recip();
        for c in 0..4 {
            a[col][c] = a[col][c] * inv_p;
            inv[col][c] = inv[col][c] * inv_p;
        }
        for r in 0..4 {
            if r == col {
                continue;
            }
            let f = a[r][col];
            for c in 0..4 {
                a[r][c] = a[r][c] - f * a[col][c];
                inv[r][c] = inv[r][c] - f * inv[col][c];
            }
        }
    }
    Some(inv)
}
