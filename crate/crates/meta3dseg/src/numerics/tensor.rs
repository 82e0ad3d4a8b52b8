//! Dense row-major tensors generic over the element type.
//!
//! Training runs in `f32`; gradient checks rerun the same code in `f64`.
//! The element type is fixed per run through the [`Scalar`] bound instead of
//! a runtime switch.

use num_traits::Float;

use crate::{Error, Result};

/// Element types the numeric stack accepts.
pub trait Scalar:
    Float + Default + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Dense row-major tensor. All dimensions must be positive.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        let numel = checked_numel(shape).expect("zeros: zero-sized dimension");
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); numel],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let numel = checked_numel(shape)
            .ok_or_else(|| Error::ShapeMismatch(format!("zero-sized dimension in {shape:?}")))?;
        if numel != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} wants {numel} elements, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn from_f64(shape: &[usize], data: &[f64]) -> Result<Self> {
        Self::from_vec(shape, data.iter().map(|&x| T::from_f64(x)).collect())
    }

    /// Single-element tensor of shape `[1]`.
    pub fn scalar(x: T) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![x],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Value of a `[1]`-shaped tensor.
    pub fn item(&self) -> Result<T> {
        if self.data.len() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "item() on shape {:?}",
                self.shape
            )));
        }
        Ok(self.data[0])
    }
}

fn checked_numel(shape: &[usize]) -> Option<usize> {
    if shape.iter().any(|&d| d == 0) {
        return None;
    }
    Some(shape.iter().product())
}

/// C = A B with A `[m, k]`, B `[k, n]`, both row-major.
pub fn matmul<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut c = vec![T::zero(); m * n];
    for i in 0..m {
        for l in 0..k {
            let aval = a[i * k + l];
            if aval == T::zero() {
                continue;
            }
            let brow = &b[l * n..(l + 1) * n];
            let crow = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                crow[j] = crow[j] + aval * brow[j];
            }
        }
    }
    c
}

/// C = A Bᵀ with A `[m, k]`, B `[n, k]`.
pub fn matmul_bt<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    let mut c = vec![T::zero(); m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut acc = T::zero();
            for l in 0..k {
                acc = acc + arow[l] * brow[l];
            }
            c[i * n + j] = acc;
        }
    }
    c
}

/// C = Aᵀ B with A `[k, m]`, B `[k, n]`.
pub fn matmul_at<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    let mut c = vec![T::zero(); m * n];
    for l in 0..k {
        let arow = &a[l * m..(l + 1) * m];
        let brow = &b[l * n..(l + 1) * n];
        for i in 0..m {
            let aval = arow[i];
            if aval == T::zero() {
                continue;
            }
            let crow = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                crow[j] = crow[j] + aval * brow[j];
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_validates_numel() {
        assert!(Tensor::<f32>::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::<f32>::from_vec(&[2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::<f32>::from_vec(&[2, 0], vec![]).is_err());
    }

    #[test]
    fn matmul_small_case() {
        // [[1,2],[3,4]] x [[5,6],[7,8]] = [[19,22],[43,50]]
        let a = [1.0f64, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        assert_eq!(matmul(&a, &b, 2, 2, 2), vec![19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn transposed_variants_agree_with_plain_matmul() {
        let a = [1.0f64, -2.0, 0.5, 3.0, 4.0, -1.0]; // [2, 3]
        let bt = [2.0, 1.0, -1.0, 0.0, 0.5, 2.0]; // [2, 3] read as Bᵀ
        let plain = matmul(&a, &transpose(&bt, 2, 3), 2, 3, 2);
        assert_eq!(matmul_bt(&a, &bt, 2, 3, 2), plain);

        let sq = [1.0, -2.0, 3.0, 4.0]; // [2, 2]
        let b = [1.0, 0.0, 2.0, -1.0, 0.5, 0.5]; // [2, 3]
        let expected = matmul(&sq, &b, 2, 2, 3);
        assert_eq!(matmul_at(&transpose(&sq, 2, 2), &b, 2, 2, 3), expected);
    }

    fn transpose(x: &[f64], r: usize, c: usize) -> Vec<f64> {
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = x[i * c + j];
            }
        }
        out
    }
}
