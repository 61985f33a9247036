use alloc::vec;
use alloc::vec::Vec;

use super::Scalar;
use crate::{Error, Result};

/// Row-major dense array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F> {
    shape: Vec<usize>,
    data: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![F::zero(); n] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<F>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::ShapeMismatch { expected: shape.to_vec(), actual: vec![data.len()] });
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    /// Width of a row: product of all but the leading dimension.
    pub fn cols(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<F> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[F] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn fill(&mut self, v: F) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn ensure_shape(&self, shape: &[usize]) -> Result<()> {
        if self.shape != shape {
            return Err(Error::ShapeMismatch { expected: shape.to_vec(), actual: self.shape.clone() });
        }
        Ok(())
    }

    /// Elementwise `self += alpha * other`; shapes must match exactly.
    pub fn add_scaled(&mut self, alpha: F, other: &Tensor<F>) -> Result<()> {
        other.ensure_shape(&self.shape)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * *b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: F) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    /// Matrix–vector product for a rank-2 tensor.
    pub fn matvec(&self, x: &[F]) -> Result<Vec<F>> {
        if self.shape.len() != 2 || self.shape[1] != x.len() {
            return Err(Error::ShapeMismatch { expected: vec![self.rows(), x.len()], actual: self.shape.clone() });
        }
        let mut out = vec![F::zero(); self.shape[0]];
        super::linalg::gemv(&self.data, self.shape[1], x, &mut out);
        Ok(out)
    }

    pub fn map<G: Scalar>(&self) -> Tensor<G> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|v| super::cast(*v)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        assert!(Tensor::<f32>::from_vec(&[2, 3], vec![0.0; 5]).is_err());
        let mut a = Tensor::<f32>::zeros(&[2, 3]);
        let b = Tensor::<f32>::zeros(&[3, 2]);
        assert!(matches!(a.add_scaled(1.0, &b), Err(Error::ShapeMismatch { .. })));
        assert!(a.matvec(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn matvec_and_rows() {
        let t = Tensor::from_vec(&[2, 3], vec![1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(t.matvec(&[1.0, 0.0, -1.0]).unwrap(), [-2.0, -2.0]);
        assert_eq!(t.row(1), [4.0, 5.0, 6.0]);
        assert_eq!(t.cols(), 3);
        let g: Tensor<f32> = t.map();
        assert_eq!(g.as_slice()[5], 6.0f32);
    }
}
