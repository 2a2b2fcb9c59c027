//! Small dense square matrices over [`QuadScalar`].

use std::cmp::Ordering;

use crate::scalar::QuadScalar;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    n: usize,
    data: Vec<QuadScalar>,
}

impl Matrix {
    pub fn zero(n: usize) -> Self {
        Matrix {
            n,
            data: vec![QuadScalar::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.data[i * n + i] = QuadScalar::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<QuadScalar>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Matrix {
            n,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// `v vᵀ / (vᵀ v)`, the orthogonal projector onto the line through `v`.
    pub fn rank_one_projector(v: &[QuadScalar]) -> Self {
        let n = v.len();
        let norm: QuadScalar = v.iter().map(|x| x * x).sum();
        let inv = norm.inverse().expect("projector onto zero vector");
        let mut m = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = &(&v[i] * &v[j]) * &inv;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &QuadScalar {
        &self.data[i * self.n + j]
    }

    pub fn entries(&self) -> &[QuadScalar] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<QuadScalar>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn add(&self, o: &Matrix) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Matrix) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mul(&self, o: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Self::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &o.data[k * n + j];
                    if !b.is_zero() {
                        out.data[i * n + j] = &out.data[i * n + j] + &(a * b);
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[QuadScalar]) -> Vec<QuadScalar> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .filter(|&j| !v[j].is_zero())
                    .map(|j| self.get(i, j) * &v[j])
                    .sum()
            })
            .collect()
    }

    pub fn scale(&self, k: &QuadScalar) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|x| x * k).collect(),
        }
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.n;
        let mut out = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].clone();
            }
        }
        out
    }

    pub fn trace(&self) -> QuadScalar {
        (0..self.n).map(|i| self.get(i, i).clone()).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.transpose()
    }

    pub fn is_idempotent(&self) -> bool {
        self.mul(self) == *self
    }

    /// Columns of the matrix; for a projector these span its range.
    pub fn columns(&self) -> Vec<Vec<QuadScalar>> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).clone()).collect())
            .filter(|c: &Vec<QuadScalar>| c.iter().any(|x| !x.is_zero()))
            .collect()
    }

    /// Lexicographic comparison of entries in row-major order.
    pub fn lex_cmp(&self, o: &Matrix) -> Ordering {
        for (a, b) in self.data.iter().zip(&o.data) {
            match a.cmp(b) {
                Ordering::Equal => continue,
                x => return x,
            }
        }
        Ordering::Equal
    }
}

pub fn dot(a: &[QuadScalar], b: &[QuadScalar]) -> QuadScalar {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .map(|(x, y)| x * y)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[i64]) -> Vec<QuadScalar> {
        xs.iter().map(|&x| QuadScalar::from_int(x)).collect()
    }

    #[test]
    fn rank_one_projector_is_exact() {
        let p = Matrix::rank_one_projector(&v(&[1, -1, 1]));
        assert!(p.is_symmetric());
        assert!(p.is_idempotent());
        assert_eq!(p.trace(), QuadScalar::one());
    }

    #[test]
    fn projector_with_sqrt2_entries() {
        let r = QuadScalar::sqrt(2).unwrap();
        let vec = vec![QuadScalar::one(), QuadScalar::one(), r];
        let p = Matrix::rank_one_projector(&vec);
        assert!(p.is_idempotent());
        assert_eq!(p.trace(), QuadScalar::one());
        assert_eq!(p.apply(&vec), vec);
    }

    #[test]
    fn complementary_projectors_sum_to_identity() {
        let a = Matrix::rank_one_projector(&v(&[1, 1, 0]));
        let b = Matrix::rank_one_projector(&v(&[1, -1, 0]));
        let c = Matrix::rank_one_projector(&v(&[0, 0, 1]));
        assert_eq!(a.add(&b).add(&c), Matrix::identity(3));
        assert_eq!(a.mul(&b), Matrix::zero(3));
    }
}
