//! Minimal exact rational matrix arithmetic: products, determinants,
//! inverses, linear solves, and definiteness/signature tests.
//!
//! Everything is Gaussian elimination over `Rat`; sizes here are tiny
//! (plumbing graphs have at most a dozen vertices), so no effort is spent
//! on fraction-free pivoting strategies.

use crate::numeric::Rat;

/// Dense row-major exact rational matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMat {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMat {
            rows,
            cols,
            data: vec![Rat::new(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::from(1);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rat) -> Self {
        let mut m = RatMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        RatMat::from_fn(r, c, |i, j| Rat::from(rows[i][j]))
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> RatMat {
        RatMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, other: &RatMat) -> RatMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        RatMat::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = Rat::new();
            for k in 0..self.cols {
                acc += self[(i, k)].clone() * &other[(k, j)];
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Rat::new();
                for k in 0..self.cols {
                    acc += self[(i, k)].clone() * &v[k];
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, other: &RatMat) -> RatMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RatMat::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)].clone() + &other[(i, j)]
        })
    }

    pub fn sub(&self, other: &RatMat) -> RatMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RatMat::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)].clone() - &other[(i, j)]
        })
    }

    pub fn scale(&self, s: &Rat) -> RatMat {
        RatMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() * s)
    }

    /// Submatrix on the given row and column index sets.
    pub fn submatrix(&self, ris: &[usize], cis: &[usize]) -> RatMat {
        RatMat::from_fn(ris.len(), cis.len(), |i, j| self[(ris[i], cis[j])].clone())
    }

    pub fn det(&self) -> Rat {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rat::from(1);
        for col in 0..n {
            let pivot = (col..n).find(|&r| a[(r, col)].cmp0() != std::cmp::Ordering::Equal);
            let Some(p) = pivot else {
                return Rat::new();
            };
            if p != col {
                a.swap_rows(p, col);
                det = -det;
            }
            let pv = a[(col, col)].clone();
            det *= &pv;
            for r in col + 1..n {
                if a[(r, col)].cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                let factor = a[(r, col)].clone() / &pv;
                for c in col..n {
                    let sub = factor.clone() * &a[(col, c)];
                    a[(r, c)] -= sub;
                }
            }
        }
        det
    }

    /// Exact inverse; `None` if singular.
    pub fn inverse(&self) -> Option<RatMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = RatMat::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| a[(r, col)].cmp0() != std::cmp::Ordering::Equal)?;
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let pv = a[(col, col)].clone();
            for c in 0..n {
                a[(col, c)] /= &pv;
                inv[(col, c)] /= &pv;
            }
            for r in 0..n {
                if r == col || a[(r, col)].cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                let factor = a[(r, col)].clone();
                for c in 0..n {
                    let s1 = factor.clone() * &a[(col, c)];
                    a[(r, c)] -= s1;
                    let s2 = factor.clone() * &inv[(col, c)];
                    inv[(r, c)] -= s2;
                }
            }
        }
        Some(inv)
    }

    /// Solve `A x = b`; `None` if singular.
    pub fn solve(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        Some(self.inverse()?.mul_vec(b))
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    /// Leading principal minors `det A[..k, ..k]` for `k = 1..=n`.
    pub fn leading_principal_minors(&self) -> Vec<Rat> {
        let n = self.rows;
        (1..=n)
            .map(|k| {
                let idx: Vec<usize> = (0..k).collect();
                self.submatrix(&idx, &idx).det()
            })
            .collect()
    }

    /// Positive definiteness by the sign of leading principal minors.
    pub fn is_positive_definite(&self) -> bool {
        self.leading_principal_minors()
            .iter()
            .all(|m| m.cmp0() == std::cmp::Ordering::Greater)
    }

    /// Negative definiteness: minors alternate starting negative.
    pub fn is_negative_definite(&self) -> bool {
        self.leading_principal_minors()
            .iter()
            .enumerate()
            .all(|(i, m)| {
                if i % 2 == 0 {
                    m.cmp0() == std::cmp::Ordering::Less
                } else {
                    m.cmp0() == std::cmp::Ordering::Greater
                }
            })
    }

    /// Signature (n_plus - n_minus) of a symmetric matrix, by exact congruence
    /// diagonalization (Sylvester's law of inertia).
    pub fn signature(&self) -> i64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut sig = 0i64;
        let mut rows: Vec<usize> = (0..n).collect();
        // Symmetric elimination with symmetric pivoting; an off-diagonal
        // pivot (all diagonal zero) contributes a +1/-1 pair, i.e. 0.
        while let Some(&r0) = rows.first() {
            let _ = r0;
            let active = rows.clone();
            // find nonzero diagonal pivot
            let diag = active
                .iter()
                .find(|&&i| a[(i, i)].cmp0() != std::cmp::Ordering::Equal)
                .copied();
            if let Some(p) = diag {
                let pv = a[(p, p)].clone();
                sig += if pv.cmp0() == std::cmp::Ordering::Greater {
                    1
                } else {
                    -1
                };
                for &r in active.iter().filter(|&&r| r != p) {
                    if a[(r, p)].cmp0() == std::cmp::Ordering::Equal {
                        continue;
                    }
                    let factor = a[(r, p)].clone() / &pv;
                    for &c in active.iter() {
                        let s = factor.clone() * &a[(p, c)];
                        a[(r, c)] -= s;
                    }
                }
                for &c in active.iter().filter(|&&c| c != p) {
                    if a[(p, c)].cmp0() == std::cmp::Ordering::Equal {
                        continue;
                    }
                    let factor = a[(p, c)].clone() / &pv;
                    for &r in active.iter() {
                        let s = factor.clone() * &a[(r, p)];
                        a[(r, c)] -= s;
                    }
                }
                rows.retain(|&r| r != p);
            } else {
                // look for a nonzero off-diagonal entry among active rows
                let mut found = None;
                'outer: for (ii, &i) in active.iter().enumerate() {
                    for &j in active[ii + 1..].iter() {
                        if a[(i, j)].cmp0() != std::cmp::Ordering::Equal {
                            found = Some((i, j));
                            break 'outer;
                        }
                    }
                }
                match found {
                    Some((i, j)) => {
                        // x_i x_j block: signature 0; eliminate both.
                        // Congruence-transform: add row/col j to i to create a
                        // diagonal entry, then proceed (handled next loop pass).
                        for &c in active.iter() {
                            let s = a[(j, c)].clone();
                            a[(i, c)] += s;
                        }
                        for &r in active.iter() {
                            let s = a[(r, j)].clone();
                            a[(r, i)] += s;
                        }
                    }
                    None => break, // zero block
                }
            }
        }
        sig
    }
}

impl std::ops::Index<(usize, usize)> for RatMat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn det_inverse_roundtrip() {
        let m = RatMat::from_i64(&[&[2, 1, 0], &[1, -3, 2], &[0, 2, 5]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), RatMat::identity(3));
        let d = m.det();
        let dinv = inv.det();
        assert_eq!(d * dinv, Rat::from(1));
    }

    #[test]
    fn definiteness() {
        let nd = RatMat::from_i64(&[&[-2, 1], &[1, -2]]);
        assert!(nd.is_negative_definite());
        assert!(!nd.is_positive_definite());
        assert_eq!(nd.signature(), -2);
        let indef = RatMat::from_i64(&[&[0, 1], &[1, 0]]);
        assert_eq!(indef.signature(), 0);
        assert_eq!(indef.det(), rat(-1, 1));
        let pd = RatMat::from_i64(&[&[2, 1], &[1, 2]]);
        assert_eq!(pd.signature(), 2);
        assert!(pd.is_positive_definite());
    }

    #[test]
    fn signature_matches_minor_count_on_random_symmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.gen_range(1..5);
            let mut m = RatMat::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = rat(rng.gen_range(-5..6), 1);
                    m[(i, j)] = v.clone();
                    m[(j, i)] = v;
                }
            }
            // Oracle: eigen-count via f64 (Jacobi-free: use characteristic
            // signs through leading minors only when all nonzero).
            let minors = m.leading_principal_minors();
            if minors.iter().any(|x| x.cmp0() == std::cmp::Ordering::Equal) {
                continue;
            }
            let mut n_neg = 0;
            let mut prev = Rat::from(1);
            for mk in &minors {
                if (prev.cmp0() == std::cmp::Ordering::Greater)
                    != (mk.cmp0() == std::cmp::Ordering::Greater)
                {
                    n_neg += 1;
                }
                prev = mk.clone();
            }
            let want = (n as i64 - n_neg) - n_neg;
            assert_eq!(m.signature(), want);
        }
    }
}
