use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Dimensions of a [`Tensor`]. Scalars are vectors of length one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(n) => n,
            Shape::Matrix(r, c) => r * c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Vector(n) => vec![n],
            Shape::Matrix(r, c) => vec![r, c],
        }
    }

    pub fn from_dims(dims: &[usize]) -> Option<Shape> {
        match *dims {
            [n] if n > 0 => Some(Shape::Vector(n)),
            [r, c] if r > 0 && c > 0 => Some(Shape::Matrix(r, c)),
            _ => None,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Vector(n) => write!(f, "[{n}]"),
            Shape::Matrix(r, c) => write!(f, "[{r}x{c}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dimension mismatch for `{operand}`: expected {expected}, got {found}")]
pub struct ShapeError {
    pub operand: &'static str,
    pub expected: Shape,
    pub found: Shape,
}

impl ShapeError {
    pub fn check(operand: &'static str, expected: Shape, found: Shape) -> Result<(), ShapeError> {
        if expected == found {
            Ok(())
        } else {
            Err(ShapeError { operand, expected, found })
        }
    }
}

/// Dense row-major `f64` array. Cloning shares the buffer.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Arc<Vec<f64>>,
}

impl Tensor {
    /// Panics if `data.len()` disagrees with `shape`.
    pub fn new(shape: Shape, data: Vec<f64>) -> Tensor {
        assert_eq!(shape.len(), data.len(), "tensor data does not match shape {shape}");
        Tensor { shape, data: Arc::new(data) }
    }

    pub fn vector(data: Vec<f64>) -> Tensor {
        Tensor::new(Shape::Vector(data.len()), data)
    }

    pub fn scalar(x: f64) -> Tensor {
        Tensor::vector(vec![x])
    }

    pub fn zeros(shape: Shape) -> Tensor {
        Tensor::new(shape, vec![0.0; shape.len()])
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Copy-on-write access to the values.
    pub fn data_mut(&mut self) -> &mut [f64] {
        Arc::make_mut(&mut self.data).as_mut_slice()
    }

    pub fn item(&self) -> f64 {
        self.data[0]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        match self.shape {
            Shape::Matrix(rows, cols) => {
                assert!(r < rows, "row {r} out of range for {}", self.shape);
                &self.data[r * cols..(r + 1) * cols]
            }
            Shape::Vector(_) => panic!("row() on a vector"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor").field("shape", &self.shape).field("data", &self.data).finish()
    }
}
