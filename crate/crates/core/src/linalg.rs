//! Symmetric tridiagonal matrices: products, LDL^T solves and inertia.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal<T> {
    pub diag: Vec<T>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<T>,
}

impl<T: Real> SymTridiagonal<T> {
    pub fn zeros(n: usize) -> Self {
        SymTridiagonal { diag: vec![T::zero(); n], off: vec![T::zero(); n.saturating_sub(1)] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Adds a 2x2 element block `[[a, b], [b, c]]` at rows `i, i + 1`; rows past the
    /// end are dropped (eliminated Dirichlet node).
    pub fn add_block(&mut self, i: usize, a: T, b: T, c: T) {
        let n = self.len();
        if i < n {
            self.diag[i] += a;
        }
        if i + 1 < n {
            self.diag[i + 1] += c;
            self.off[i] += b;
        }
    }

    /// Leading principal block of size `k`.
    pub fn leading(&self, k: usize) -> Self {
        SymTridiagonal { diag: self.diag[..k].to_vec(), off: self.off[..k.saturating_sub(1)].to_vec() }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// `x^T A x`.
    pub fn quad(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.len() {
            acc += self.diag[i] * x[i] * x[i];
        }
        let two = T::lit(2.0);
        for i in 0..self.off.len() {
            acc += two * self.off[i] * x[i] * x[i + 1];
        }
        acc
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        self.matvec(x).iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + *a * *b)
    }

    /// `|x|^T |A| |x|`, the scale of the rounding error committed by [`Self::quad`].
    pub fn quad_abs(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.len() {
            acc += (self.diag[i] * x[i] * x[i]).abs();
        }
        let two = T::lit(2.0);
        for i in 0..self.off.len() {
            acc += (two * self.off[i] * x[i] * x[i + 1]).abs();
        }
        acc
    }

    /// `x^T A x` restricted to the leading `k` indices.
    pub fn quad_leading(&self, x: &[T], k: usize) -> T {
        let k = k.min(self.len());
        let mut acc = T::zero();
        for i in 0..k {
            acc += self.diag[i] * x[i] * x[i];
        }
        let two = T::lit(2.0);
        for i in 0..k.saturating_sub(1) {
            acc += two * self.off[i] * x[i] * x[i + 1];
        }
        acc
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: T, other: &Self, beta: T) -> Self {
        SymTridiagonal {
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| alpha * *a + beta * *b).collect(),
            off: self.off.iter().zip(&other.off).map(|(a, b)| alpha * *a + beta * *b).collect(),
        }
    }

    /// Pivots of the LDL^T factorisation, `None` on an exactly zero pivot.
    pub fn ldlt_pivots(&self) -> Option<Vec<T>> {
        let n = self.len();
        let mut d = Vec::with_capacity(n);
        for i in 0..n {
            let mut p = self.diag[i];
            if i > 0 {
                p -= self.off[i - 1] * self.off[i - 1] / d[i - 1];
            }
            if p == T::zero() || !p.is_finite() {
                return None;
            }
            d.push(p);
        }
        Some(d)
    }

    /// Number of negative eigenvalues (Sylvester), `None` on breakdown.
    pub fn negative_count(&self) -> Option<usize> {
        self.ldlt_pivots().map(|d| d.iter().filter(|p| **p < T::zero()).count())
    }

    /// Solves `A x = b` by LDL^T without pivoting, `None` on breakdown.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        let n = self.len();
        let d = self.ldlt_pivots()?;
        let mut y = b.to_vec();
        for i in 1..n {
            let l = self.off[i - 1] / d[i - 1];
            y[i] = y[i] - l * y[i - 1];
        }
        for i in 0..n {
            y[i] /= d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let l = self.off[i] / d[i];
            y[i] = y[i] - l * y[i + 1];
        }
        Some(y)
    }

    /// Gershgorin interval containing every eigenvalue.
    pub fn gershgorin(&self) -> (T, T) {
        let n = self.len();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let mut rad = T::zero();
            if i > 0 {
                rad += self.off[i - 1].abs();
            }
            if i + 1 < n {
                rad += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - rad);
            hi = hi.max(self.diag[i] + rad);
        }
        (lo, hi)
    }

    pub fn is_finite(&self) -> bool {
        self.diag.iter().chain(&self.off).all(|x| x.is_finite())
    }
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SymTridiagonal<f64> {
        SymTridiagonal { diag: vec![4.0, 5.0, 6.0, 7.0], off: vec![1.0, -2.0, 0.5] }
    }

    #[test]
    fn solve_roundtrip() {
        let a = sample();
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let x = a.solve(&b).unwrap();
        let back = a.matvec(&x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn quad_matches_matvec() {
        let a = sample();
        let x = vec![0.3, -1.0, 2.0, 0.7];
        assert!((a.quad(&x) - dot(&x, &a.matvec(&x))).abs() < 1e-13);
        assert!((a.quad_leading(&x, 4) - a.quad(&x)).abs() < 1e-15);
        assert!((a.quad_leading(&x, 2) - a.leading(2).quad(&x[..2])).abs() < 1e-15);
    }

    #[test]
    fn inertia_of_shifted_identity() {
        let id = SymTridiagonal { diag: vec![1.0; 5], off: vec![0.0; 4] };
        assert_eq!(id.combine(1.0, &id, -0.5).negative_count(), Some(0));
        assert_eq!(id.combine(1.0, &id, -1.5).negative_count(), Some(5));
        assert_eq!(id.combine(1.0, &id, -1.0).negative_count(), None);
    }
}
