//! Least-squares fit maintained through an incrementally updated thin QR
//! factorization (modified Gram–Schmidt with one reorthogonalization pass).
//! Appending the `k`-th column costs O(n k).

use num_complex::Complex64;

use crate::{Error, Result};

const DEPENDENCE_TOL: f64 = 1e-8;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
pub struct LsqState {
    y: Vec<Complex64>,
    q: Vec<Vec<Complex64>>,
    /// Column `k` of R, length `k + 1`.
    r: Vec<Vec<Complex64>>,
    qy: Vec<Complex64>,
    residual: Vec<Complex64>,
}

impl LsqState {
    pub fn new(y: &[Complex64]) -> Self {
        Self {
            y: y.to_vec(),
            q: Vec::new(),
            r: Vec::new(),
            qy: Vec::new(),
            residual: y.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn residual(&self) -> &[Complex64] {
        &self.residual
    }

    pub fn residual_norm(&self) -> f64 {
        norm(&self.residual)
    }

    pub fn measurement(&self) -> &[Complex64] {
        &self.y
    }

    /// Orthonormal basis of the selected columns.
    pub fn basis(&self) -> &[Vec<Complex64>] {
        &self.q
    }

    /// Appends `column` to the fit and returns the refitted coefficients.
    ///
    /// On [`Error::DependentColumn`] the state is left unchanged.
    pub fn add_column(&mut self, column: &[Complex64]) -> Result<Vec<Complex64>> {
        if column.len() != self.y.len() {
            return Err(Error::DimensionMismatch {
                expected: self.y.len(),
                actual: column.len(),
            });
        }
        let col_norm = norm(column);
        let mut v = column.to_vec();
        let mut rcol = vec![Complex64::new(0.0, 0.0); self.q.len() + 1];
        for _ in 0..2 {
            for (k, qk) in self.q.iter().enumerate() {
                let h = dot(qk, &v);
                for (vi, qi) in v.iter_mut().zip(qk) {
                    *vi -= h * qi;
                }
                rcol[k] += h;
            }
        }
        let v_norm = norm(&v);
        if col_norm == 0.0 || v_norm < DEPENDENCE_TOL * col_norm {
            return Err(Error::DependentColumn);
        }
        for vi in v.iter_mut() {
            *vi /= v_norm;
        }
        *rcol.last_mut().unwrap() = Complex64::new(v_norm, 0.0);
        self.qy.push(dot(&v, &self.y));
        let h = dot(&v, &self.residual);
        for (ri, qi) in self.residual.iter_mut().zip(&v) {
            *ri -= h * qi;
        }
        self.q.push(v);
        self.r.push(rcol);
        Ok(self.coefficients())
    }

    /// Solves `R c = Qᴴ y` by back substitution.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let k = self.q.len();
        let mut c = vec![Complex64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut acc = self.qy[i];
            for j in i + 1..k {
                acc -= self.r[j][i] * c[j];
            }
            c[i] = acc / self.r[i][i];
        }
        c
    }
}
