//! Minimal reverse-mode automatic differentiation engine.
//!
//! Dynamic (define-by-run) tape: a [`Tape`] records every primitive as it
//! executes, [`Tape::backward`] replays the record in reverse. Values are
//! dense row-major buffers; `f32` is the training precision, `f64` the
//! gradient-check precision (finite differences are too noisy at 32-bit).

use std::cell::{Ref, RefCell};
use std::fmt;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

mod conv;
pub mod gradcheck;
mod ops;
mod tape;

pub use tape::Tape;

/// Element type of a tensor. Implemented for `f32` and `f64`.
pub trait Scalar:
    num_traits::Float + num_traits::NumAssignOps + fmt::Debug + fmt::Display + Default + 'static
{
    fn from_f64(v: f64) -> Self;
    fn into_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn into_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn into_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: axis {axis} out of range for rank {rank}")]
    AxisOutOfRange {
        op: &'static str,
        axis: usize,
        rank: usize,
    },
    #[error("softmax: slice {slice} has no unmasked entries")]
    DegenerateMask { slice: usize },
    #[error("backward: loss must be a scalar, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("backward: tape already consumed by a previous backward pass")]
    TapeConsumed,
    #[error("conv2d: kernel {kernel:?} does not fit padded input {input:?}")]
    KernelTooLarge {
        kernel: Vec<usize>,
        input: Vec<usize>,
    },
    #[error("{op}: {msg}")]
    Invalid { op: &'static str, msg: String },
}

pub type Result<V> = std::result::Result<V, TensorError>;

static NEXT_TENSOR_ID: AtomicU64 = AtomicU64::new(1);

struct TensorInner<T: Scalar> {
    id: u64,
    shape: Vec<usize>,
    data: RefCell<Vec<T>>,
    grad: RefCell<Option<Vec<T>>>,
    requires_grad: bool,
}

/// Dense n-dimensional value, optionally carrying an accumulated gradient.
///
/// Cloning is cheap (shared handle). A tensor is a free value until an op
/// touches it on some tape; gradients accumulate across backward passes
/// until [`Tensor::zero_grad`].
pub struct Tensor<T: Scalar> {
    inner: Rc<TensorInner<T>>,
}

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor {
            inner: Rc::clone(&self.inner),
        }
    }
}

impl<T: Scalar> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Tensor(shape={:?}, requires_grad={})",
            self.inner.shape, self.inner.requires_grad
        )
    }
}

impl<T: Scalar> Tensor<T> {
    fn new(data: Vec<T>, shape: Vec<usize>, requires_grad: bool) -> Self {
        debug_assert_eq!(data.len(), shape.iter().product::<usize>());
        Tensor {
            inner: Rc::new(TensorInner {
                id: NEXT_TENSOR_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                data: RefCell::new(data),
                grad: RefCell::new(None),
                requires_grad,
            }),
        }
    }

    /// Constant tensor (no gradient tracking).
    pub fn from_vec(data: Vec<T>, shape: &[usize]) -> Result<Self> {
        if data.len() != shape.iter().product::<usize>() {
            return Err(TensorError::Invalid {
                op: "from_vec",
                msg: format!("{} values do not fill shape {:?}", data.len(), shape),
            });
        }
        Ok(Tensor::new(data, shape.to_vec(), false))
    }

    /// Trainable parameter: gradients accumulate into it across backward passes.
    pub fn param(data: Vec<T>, shape: &[usize]) -> Result<Self> {
        if data.len() != shape.iter().product::<usize>() {
            return Err(TensorError::Invalid {
                op: "param",
                msg: format!("{} values do not fill shape {:?}", data.len(), shape),
            });
        }
        Ok(Tensor::new(data, shape.to_vec(), true))
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor::new(vec![T::zero(); len], shape.to_vec(), false)
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        let len = shape.iter().product();
        Tensor::new(vec![value; len], shape.to_vec(), false)
    }

    pub fn scalar(value: T) -> Self {
        Tensor::new(vec![value], vec![1], false)
    }

    pub(crate) fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn rank(&self) -> usize {
        self.inner.shape.len()
    }

    pub fn len(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    pub fn data(&self) -> Ref<'_, Vec<T>> {
        self.inner.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.inner.data.borrow().clone()
    }

    /// Value of a scalar (single-element) tensor.
    pub fn item(&self) -> T {
        debug_assert_eq!(self.len(), 1, "item() on non-scalar tensor");
        self.inner.data.borrow()[0]
    }

    pub fn get(&self, flat_index: usize) -> T {
        self.inner.data.borrow()[flat_index]
    }

    /// Overwrite one element in place (used by optimizers and finite differences).
    pub fn set(&self, flat_index: usize, value: T) {
        self.inner.data.borrow_mut()[flat_index] = value;
    }

    /// Replace the whole buffer in place; shape must be preserved.
    pub fn set_data(&self, data: Vec<T>) {
        assert_eq!(data.len(), self.len(), "set_data length mismatch");
        *self.inner.data.borrow_mut() = data;
    }

    /// Accumulated gradient, if any backward pass has deposited one.
    pub fn grad(&self) -> Option<Vec<T>> {
        self.inner.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.inner.grad.borrow_mut() = None;
    }

    pub(crate) fn accumulate_grad(&self, g: &[T]) {
        let mut slot = self.inner.grad.borrow_mut();
        match slot.as_mut() {
            Some(buf) => {
                for (b, v) in buf.iter_mut().zip(g) {
                    *b += *v;
                }
            }
            None => *slot = Some(g.to_vec()),
        }
    }

    /// Detached copy: same values, no gradient tracking, fresh identity.
    pub fn detach(&self) -> Tensor<T> {
        Tensor::new(self.to_vec(), self.inner.shape.clone(), false)
    }

    /// Copy with values converted to another precision. Keeps parameter-ness,
    /// drops any accumulated gradient.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        let data = self
            .inner
            .data
            .borrow()
            .iter()
            .map(|v| U::from_f64(v.into_f64()))
            .collect();
        Tensor::<U>::new(data, self.inner.shape.clone(), self.inner.requires_grad)
    }
}

/// Uniform random tensor in `(-bound, bound)`, marked as a parameter.
pub fn uniform_param<T: Scalar, R: rand::Rng>(
    shape: &[usize],
    bound: f64,
    rng: &mut R,
) -> Tensor<T> {
    let len: usize = shape.iter().product();
    let data = (0..len)
        .map(|_| T::from_f64(rng.gen_range(-bound..bound)))
        .collect();
    Tensor::param(data, shape).expect("uniform_param shape/data agree by construction")
}

#[cfg(test)]
mod tests;
