//! Truncated multivariate power series in `u_1..u_k`, keeping every
//! coefficient whose multi-index lies in the box `m_i <= n_i`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Shape shared by all series of one computation.
#[derive(Debug, PartialEq, Eq)]
pub struct SeriesShape {
    orders: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
    /// Total degree of each flat index.
    degree: Vec<usize>,
    /// `(a, b, a + b)` for every pair whose sum stays in the box, `a, b != 0`.
    pairs: Vec<(u32, u32, u32)>,
}

impl SeriesShape {
    pub fn new(orders: &[usize]) -> Arc<Self> {
        let mut strides = vec![0; orders.len()];
        let mut len = 1usize;
        for (i, &n) in orders.iter().enumerate() {
            strides[i] = len;
            len *= n + 1;
        }
        let multi = |mut flat: usize| -> Vec<usize> {
            orders
                .iter()
                .map(|&n| {
                    let d = flat % (n + 1);
                    flat /= n + 1;
                    d
                })
                .collect()
        };
        let indices: Vec<Vec<usize>> = (0..len).map(multi).collect();
        let degree = indices.iter().map(|m| m.iter().sum()).collect();
        let mut pairs = Vec::new();
        for a in 1..len {
            for b in 1..len {
                if indices[a]
                    .iter()
                    .zip(&indices[b])
                    .zip(orders)
                    .all(|((x, y), n)| x + y <= *n)
                {
                    pairs.push((a as u32, b as u32, (a + b) as u32));
                }
            }
        }
        Arc::new(Self {
            orders: orders.to_vec(),
            strides,
            len,
            degree,
            pairs,
        })
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn n_vars(&self) -> usize {
        self.orders.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn total_order(&self) -> usize {
        self.orders.iter().sum()
    }

    /// Flat position of a multi-index, `None` outside the box.
    pub fn flat(&self, m: &[usize]) -> Option<usize> {
        if m.len() != self.orders.len() {
            return None;
        }
        let mut f = 0;
        for i in 0..m.len() {
            if m[i] > self.orders[i] {
                return None;
            }
            f += m[i] * self.strides[i];
        }
        Some(f)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.orders
            .iter()
            .map(|&n| {
                let d = flat % (n + 1);
                flat /= n + 1;
                d
            })
            .collect()
    }

    fn mul_into(&self, a: &[C64], b: &[C64], out: &mut [C64]) {
        let a0 = a[0];
        let b0 = b[0];
        out[0] = a0 * b0;
        for k in 1..self.len {
            out[k] = a0 * b[k] + a[k] * b0;
        }
        for &(i, j, k) in &self.pairs {
            out[k as usize] += a[i as usize] * b[j as usize];
        }
    }

    /// `acc -= a * b`.
    fn sub_mul_assign(&self, acc: &mut [C64], a: &[C64], b: &[C64]) {
        let a0 = a[0];
        let b0 = b[0];
        acc[0] -= a0 * b0;
        for k in 1..self.len {
            acc[k] -= a0 * b[k] + a[k] * b0;
        }
        for &(i, j, k) in &self.pairs {
            acc[k as usize] -= a[i as usize] * b[j as usize];
        }
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSeries {
    shape: Arc<SeriesShape>,
    coeffs: Vec<C64>,
}

impl PartialEq for TruncatedSeries {
    fn eq(&self, other: &Self) -> bool {
        self.shape.orders == other.shape.orders && self.coeffs == other.coeffs
    }
}

impl TruncatedSeries {
    pub fn zero(shape: &Arc<SeriesShape>) -> Self {
        Self {
            shape: Arc::clone(shape),
            coeffs: vec![C64::new(0.0, 0.0); shape.len],
        }
    }

    pub fn constant(shape: &Arc<SeriesShape>, c: C64) -> Self {
        let mut s = Self::zero(shape);
        s.coeffs[0] = c;
        s
    }

    /// The series `u_i`.
    pub fn variable(shape: &Arc<SeriesShape>, i: usize) -> Self {
        let mut s = Self::zero(shape);
        if shape.orders[i] > 0 {
            s.coeffs[shape.strides[i]] = C64::new(1.0, 0.0);
        }
        s
    }

    pub fn from_coeffs(shape: &Arc<SeriesShape>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != shape.len {
            return Err(Error::DimensionMismatch {
                expected: shape.len,
                found: coeffs.len(),
            });
        }
        Ok(Self {
            shape: Arc::clone(shape),
            coeffs,
        })
    }

    pub fn shape(&self) -> &Arc<SeriesShape> {
        &self.shape
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn constant_term(&self) -> C64 {
        self.coeffs[0]
    }

    /// Coefficient of `u^m`; zero outside the box.
    pub fn coeff(&self, m: &[usize]) -> C64 {
        self.shape
            .flat(m)
            .map_or(C64::new(0.0, 0.0), |f| self.coeffs[f])
    }

    fn check(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.shape, &other.shape) || self.shape.orders == other.shape.orders,
            "series with different truncation boxes"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Self {
            shape: Arc::clone(&self.shape),
            coeffs,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Self {
            shape: Arc::clone(&self.shape),
            coeffs,
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            shape: Arc::clone(&self.shape),
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        let mut out = Self::zero(&self.shape);
        self.shape.mul_into(&self.coeffs, &other.coeffs, &mut out.coeffs);
        out
    }

    /// Sum of `c_k x^k` for `k = 0..=K`, `x` without constant term.
    fn nilpotent_sum(x: &Self, c: impl Fn(usize) -> C64) -> Self {
        let k_max = x.shape.total_order();
        let mut out = Self::constant(&x.shape, c(0));
        let mut power = Self::constant(&x.shape, C64::new(1.0, 0.0));
        for k in 1..=k_max {
            power = power.mul(x);
            let ck = c(k);
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += ck * p;
            }
        }
        out
    }

    fn without_constant(&self, divide_by: C64) -> Self {
        let mut x = self.scale(1.0 / divide_by);
        x.coeffs[0] = C64::new(0.0, 0.0);
        x
    }

    pub fn inv(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.norm() == 0.0 {
            return Err(Error::Unphysical("series inverse of zero constant term".into()));
        }
        let x = self.without_constant(c0);
        let inv0 = 1.0 / c0;
        Ok(Self::nilpotent_sum(&x, |k| {
            if k % 2 == 0 {
                inv0
            } else {
                -inv0
            }
        }))
    }

    /// Principal logarithm; the constant term is `ln c0` on the principal branch.
    pub fn ln(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.norm() == 0.0 {
            return Err(Error::Unphysical("series logarithm of zero constant term".into()));
        }
        let x = self.without_constant(c0);
        let l0 = c0.ln();
        Ok(Self::nilpotent_sum(&x, |k| {
            if k == 0 {
                l0
            } else {
                let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                C64::new(s / k as f64, 0.0)
            }
        }))
    }

    pub fn exp(&self) -> Self {
        let c0 = self.constant_term();
        let x = self.without_constant(C64::new(1.0, 0.0));
        let e0 = c0.exp();
        let mut fact = 1.0;
        let mut factorials = vec![1.0];
        for k in 1..=self.shape.total_order() {
            fact *= k as f64;
            factorials.push(fact);
        }
        Self::nilpotent_sum(&x, |k| e0 / factorials[k])
    }
}

/// Taylor series of `det(A0 + sum_i u_i B_i)^{-1/2}` truncated to the box
/// `orders`.
///
/// The determinant is taken by LU factorization over the series ring,
/// pivoting on constant terms. The constant term of the determinant must be
/// real and positive; its principal inverse square root fixes the branch.
pub fn series_inv_sqrt_det(a0: &CMatrix, b: &[CMatrix], orders: &[usize]) -> Result<TruncatedSeries> {
    if b.len() != orders.len() {
        return Err(Error::DimensionMismatch {
            expected: orders.len(),
            found: b.len(),
        });
    }
    let d = a0.nrows();
    if !a0.is_square() || b.iter().any(|m| m.shape() != a0.shape()) {
        return Err(Error::param("series", "matrices must be square and equally sized"));
    }
    let shape = SeriesShape::new(orders);
    let p = shape.len();
    if d == 0 {
        return Ok(TruncatedSeries::constant(&shape, C64::new(1.0, 0.0)));
    }

    // Entry (r, c) occupies m[(r * d + c) * p .. + p].
    let mut m = vec![C64::new(0.0, 0.0); d * d * p];
    for r in 0..d {
        for c in 0..d {
            let base = (r * d + c) * p;
            m[base] = a0[(r, c)];
            for (i, bi) in b.iter().enumerate() {
                if orders[i] > 0 {
                    m[base + shape.strides[i]] += bi[(r, c)];
                }
            }
        }
    }

    let mut sign = 1.0;
    let mut log_rest = TruncatedSeries::zero(&shape);
    let mut det0 = C64::new(1.0, 0.0);
    let mut pivot_inv = vec![C64::new(0.0, 0.0); p];
    let mut factor = vec![C64::new(0.0, 0.0); p];
    for k in 0..d {
        let (piv, best) = (k..d)
            .map(|r| (r, m[(r * d + k) * p].norm()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= 0.0 {
            return Err(Error::Unphysical(
                "singular constant term in series determinant".into(),
            ));
        }
        if piv != k {
            for c in 0..d {
                for q in 0..p {
                    m.swap((k * d + c) * p + q, (piv * d + c) * p + q);
                }
            }
            sign = -sign;
        }
        let pivot = TruncatedSeries::from_coeffs(&shape, m[(k * d + k) * p..(k * d + k + 1) * p].to_vec())?;
        let c0 = pivot.constant_term();
        det0 *= c0;
        log_rest = log_rest.add(&pivot.ln()?);
        log_rest.coeffs[0] = C64::new(0.0, 0.0);
        pivot_inv.copy_from_slice(pivot.inv()?.coeffs());

        for r in k + 1..d {
            let lead = (r * d + k) * p;
            if m[lead..lead + p].iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                continue;
            }
            shape.mul_into(&m[lead..lead + p], &pivot_inv, &mut factor);
            let (top, bottom) = m.split_at_mut(r * d * p);
            let pivot_row = &top[k * d * p..(k + 1) * d * p];
            let row = &mut bottom[..d * p];
            for c in k + 1..d {
                shape.sub_mul_assign(&mut row[c * p..(c + 1) * p], &factor, &pivot_row[c * p..(c + 1) * p]);
            }
        }
    }
    let det0 = det0 * sign;
    if det0.re <= 0.0 || det0.im.abs() > 1e-10 * det0.norm().max(1.0) {
        return Err(Error::Unphysical(format!(
            "determinant constant term {det0} is not real positive"
        )));
    }
    log_rest.coeffs[0] = C64::new(det0.re.ln(), 0.0);
    Ok(log_rest.scale(C64::new(-0.5, 0.0)).exp())
}
