use std::cell::RefCell;
use std::collections::HashMap;

use super::{Result, Scalar, Tensor, TensorError};

/// Backward rule of one recorded op: given the output gradient and a flag per
/// parent saying whether that parent's gradient is needed, produce the parent
/// gradients (entries for unneeded parents may be `None`).
pub(super) type BackwardFn<T> = Box<dyn Fn(&[T], &[bool]) -> Vec<Option<Vec<T>>>>;

pub(super) struct Node<T: Scalar> {
    pub(super) len: usize,
    pub(super) parents: Vec<usize>,
    pub(super) backward: Option<BackwardFn<T>>,
    pub(super) needs_grad: bool,
    /// For leaves that are parameters: where the final gradient lands.
    pub(super) sink: Option<Tensor<T>>,
}

pub(super) struct TapeInner<T: Scalar> {
    pub(super) nodes: Vec<Node<T>>,
    /// tensor id -> node index, for leaves and op outputs alike.
    pub(super) index: HashMap<u64, usize>,
    pub(super) consumed: bool,
}

/// Record of one forward computation. Ops are recorded in execution order,
/// which is a topological order of the graph; [`Tape::backward`] walks it in
/// reverse exactly once.
pub struct Tape<T: Scalar> {
    pub(super) inner: RefCell<TapeInner<T>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            inner: RefCell::new(TapeInner {
                nodes: Vec::new(),
                index: HashMap::new(),
                consumed: false,
            }),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    /// Node for `t`, registering it as a leaf on first contact with this tape.
    /// A tensor produced by another (dropped) tape re-enters as a constant
    /// leaf here: gradients do not flow across tapes.
    pub(super) fn node_of(&self, t: &Tensor<T>) -> usize {
        let mut inner = self.inner.borrow_mut();
        if let Some(&idx) = inner.index.get(&t.id()) {
            return idx;
        }
        let idx = inner.nodes.len();
        inner.nodes.push(Node {
            len: t.len(),
            parents: Vec::new(),
            backward: None,
            needs_grad: t.requires_grad(),
            sink: if t.requires_grad() {
                Some(t.clone())
            } else {
                None
            },
        });
        inner.index.insert(t.id(), idx);
        idx
    }

    /// Record an op output. `backward` may be `None` when no parent needs a
    /// gradient; the node is then a dead end on the reverse pass.
    pub(super) fn record(
        &self,
        out: &Tensor<T>,
        parents: Vec<usize>,
        backward: Option<BackwardFn<T>>,
    ) {
        let mut inner = self.inner.borrow_mut();
        let needs_grad = parents.iter().any(|&p| inner.nodes[p].needs_grad);
        let idx = inner.nodes.len();
        inner.nodes.push(Node {
            len: out.len(),
            parents,
            backward: if needs_grad { backward } else { None },
            needs_grad,
            sink: None,
        });
        inner.index.insert(out.id(), idx);
    }


    /// Reverse pass from a scalar loss. Every parameter reachable from the
    /// loss gets its gradient accumulated (added to whatever is already
    /// there). Consumes the tape: a second call is an error.
    pub fn backward(&self, loss: &Tensor<T>) -> Result<()> {
        if loss.len() != 1 {
            return Err(TensorError::NonScalarLoss {
                shape: loss.shape().to_vec(),
            });
        }
        let mut inner = self.inner.borrow_mut();
        if inner.consumed {
            return Err(TensorError::TapeConsumed);
        }
        inner.consumed = true;
        let loss_node = match inner.index.get(&loss.id()) {
            Some(&idx) => idx,
            None => {
                // A loss the tape never saw has no dependencies to follow.
                return Err(TensorError::Invalid {
                    op: "backward",
                    msg: "loss tensor was not produced on this tape".into(),
                });
            }
        };

        let n = inner.nodes.len();
        let mut grads: Vec<Option<Vec<T>>> = (0..n).map(|_| None).collect();
        grads[loss_node] = Some(vec![T::one()]);

        for i in (0..=loss_node).rev() {
            let Some(g) = grads[i].take() else { continue };
            if !inner.nodes[i].needs_grad {
                continue;
            }
            if let Some(sink) = &inner.nodes[i].sink {
                sink.accumulate_grad(&g);
            }
            let Some(backward) = &inner.nodes[i].backward else {
                continue;
            };
            let parents = inner.nodes[i].parents.clone();
            let needs: Vec<bool> = parents.iter().map(|&p| inner.nodes[p].needs_grad).collect();
            let parent_grads = backward(&g, &needs);
            debug_assert_eq!(parent_grads.len(), parents.len());
            for (p, pg) in parents.iter().zip(parent_grads) {
                let Some(pg) = pg else { continue };
                debug_assert_eq!(pg.len(), inner.nodes[*p].len);
                match grads[*p].as_mut() {
                    Some(buf) => {
                        for (b, v) in buf.iter_mut().zip(&pg) {
                            *b += *v;
                        }
                    }
                    None => grads[*p] = Some(pg),
                }
            }
        }
        Ok(())
    }
}
