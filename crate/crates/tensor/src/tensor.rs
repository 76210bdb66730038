use std::cell::{Ref, RefCell};
use std::collections::HashSet;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::Scalar;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

type BackwardFn<T> = Box<dyn Fn(&[T], &[Tensor<T>])>;

struct Inner<T: Scalar> {
    id: u64,
    shape: Vec<usize>,
    data: RefCell<Vec<T>>,
    grad: RefCell<Option<Vec<T>>>,
    parents: Vec<Tensor<T>>,
    backward: Option<BackwardFn<T>>,
    tracked: bool,
}

/// An n-dimensional array participating in a dynamically recorded
/// computation graph.
///
/// Cloning is cheap (reference counted). A tensor is either a leaf
/// (constant or trainable parameter) or the output of an operation that
/// recorded its parents and a backward closure. Graphs are confined to one
/// thread; data-parallelism lives inside individual operations.
pub struct Tensor<T: Scalar> {
    inner: Rc<Inner<T>>,
}

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor { inner: Rc::clone(&self.inner) }
    }
}

impl<T: Scalar> std::fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("id", &self.inner.id)
            .field("shape", &self.inner.shape)
            .field("tracked", &self.inner.tracked)
            .finish()
    }
}

impl<T: Scalar> Tensor<T> {
    /// Constant leaf; does not receive gradients.
    pub fn leaf(shape: &[usize], data: Vec<T>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "shape/data mismatch");
        Tensor {
            inner: Rc::new(Inner {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape: shape.to_vec(),
                data: RefCell::new(data),
                grad: RefCell::new(None),
                parents: Vec::new(),
                backward: None,
                tracked: false,
            }),
        }
    }

    /// Trainable leaf; accumulates gradients during backward passes.
    pub fn param(shape: &[usize], data: Vec<T>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "shape/data mismatch");
        Tensor {
            inner: Rc::new(Inner {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape: shape.to_vec(),
                data: RefCell::new(data),
                grad: RefCell::new(None),
                parents: Vec::new(),
                backward: None,
                tracked: true,
            }),
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor::leaf(shape, vec![T::zero(); shape.iter().product()])
    }

    pub fn scalar(v: T) -> Self {
        Tensor::leaf(&[1], vec![v])
    }

    pub fn from_f64_slice(shape: &[usize], data: &[f64]) -> Self {
        Tensor::leaf(shape, data.iter().map(|&v| T::of_f64(v)).collect())
    }

    /// Output of an operation. The backward closure receives the gradient of
    /// this tensor and the parent list, and accumulates into parent grads.
    pub fn from_op(
        shape: Vec<usize>,
        data: Vec<T>,
        parents: Vec<Tensor<T>>,
        backward: impl Fn(&[T], &[Tensor<T>]) + 'static,
    ) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "shape/data mismatch");
        let tracked = parents.iter().any(|p| p.inner.tracked);
        Tensor {
            inner: Rc::new(Inner {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                data: RefCell::new(data),
                grad: RefCell::new(None),
                parents: if tracked { parents } else { Vec::new() },
                backward: if tracked { Some(Box::new(backward)) } else { None },
                tracked,
            }),
        }
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn len(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_tracked(&self) -> bool {
        self.inner.tracked
    }

    pub fn data(&self) -> Ref<'_, Vec<T>> {
        self.inner.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.inner.data.borrow().clone()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.inner.data.borrow().iter().map(|v| v.as_f64()).collect()
    }

    /// Value of a 1-element tensor.
    pub fn item(&self) -> T {
        let d = self.inner.data.borrow();
        assert_eq!(d.len(), 1, "item() requires a scalar tensor");
        d[0]
    }

    /// Overwrites the stored values (used by optimizers; shape preserved).
    pub fn set_data(&self, new: &[T]) {
        let mut d = self.inner.data.borrow_mut();
        assert_eq!(d.len(), new.len(), "set_data length mismatch");
        d.copy_from_slice(new);
    }

    /// Mutable access to the stored values.
    pub fn with_data_mut(&self, f: impl FnOnce(&mut [T])) {
        f(&mut self.inner.data.borrow_mut());
    }

    pub fn grad(&self) -> Option<Vec<T>> {
        self.inner.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.inner.grad.borrow_mut() = None;
    }

    /// Accumulates into the gradient buffer, allocating zeros on first use.
    pub fn with_grad_mut(&self, f: impl FnOnce(&mut [T])) {
        let mut slot = self.inner.grad.borrow_mut();
        let buf = slot.get_or_insert_with(|| vec![T::zero(); self.len()]);
        f(buf);
    }

    pub fn accumulate_grad(&self, delta: &[T]) {
        self.with_grad_mut(|g| {
            for (gi, di) in g.iter_mut().zip(delta) {
                *gi = *gi + *di;
            }
        });
    }

    /// Reverse-mode sweep from a scalar output.
    ///
    /// Gradients accumulate into every tracked tensor reachable through the
    /// parent links; call `zero_grad` on parameters between steps.
    pub fn backward(&self) {
        assert_eq!(self.len(), 1, "backward() requires a scalar loss");
        let order = self.topo_order();
        self.with_grad_mut(|g| g[0] = g[0] + T::one());
        for node in order.iter().rev() {
            if let Some(bw) = &node.inner.backward {
                let grad = node.inner.grad.borrow().clone();
                if let Some(grad) = grad {
                    bw(&grad, &node.inner.parents);
                }
            }
        }
    }

    fn topo_order(&self) -> Vec<Tensor<T>> {
        let mut order: Vec<Tensor<T>> = Vec::new();
        let mut visited: HashSet<u64> = HashSet::new();
        // Iterative post-order DFS; (node, child_cursor) stack.
        let mut stack: Vec<(Tensor<T>, usize)> = vec![(self.clone(), 0)];
        visited.insert(self.inner.id);
        while let Some((node, cursor)) = stack.pop() {
            if cursor < node.inner.parents.len() {
                let child = node.inner.parents[cursor].clone();
                stack.push((node, cursor + 1));
                if child.inner.tracked && visited.insert(child.inner.id) {
                    stack.push((child, 0));
                }
            } else {
                order.push(node);
            }
        }
        order
    }
}
