use super::{Result, Scalar, Tape, Tensor, TensorError};

impl<T: Scalar> Tape<T> {
    /// 2-D cross-correlation. `x` is `[b, c, h, w]`, `kernels` is
    /// `[o, c, kh, kw]`; output spatial dims are
    /// `floor((in + 2·pad - k) / stride) + 1`.
    pub fn conv2d(
        &self,
        x: &Tensor<T>,
        kernels: &Tensor<T>,
        stride: usize,
        padding: usize,
    ) -> Result<Tensor<T>> {
        if x.rank() != 4 || kernels.rank() != 4 || x.shape()[1] != kernels.shape()[1] {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                lhs: x.shape().to_vec(),
                rhs: kernels.shape().to_vec(),
            });
        }
        let (b, c, h, w) = dims4(x.shape());
        let (o, _, kh, kw) = dims4(kernels.shape());
        if kh > h + 2 * padding || kw > w + 2 * padding || stride == 0 {
            return Err(TensorError::KernelTooLarge {
                kernel: kernels.shape().to_vec(),
                input: x.shape().to_vec(),
            });
        }
        let oh = (h + 2 * padding - kh) / stride + 1;
        let ow = (w + 2 * padding - kw) / stride + 1;

        let mut data = vec![T::zero(); b * o * oh * ow];
        {
            let xd = x.data();
            let kd = kernels.data();
            for bi in 0..b {
                for oi in 0..o {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut acc = T::zero();
                            for ci in 0..c {
                                for ky in 0..kh {
                                    let iy = (oy * stride + ky) as isize - padding as isize;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    let xrow = ((bi * c + ci) * h + iy as usize) * w;
                                    let krow = ((oi * c + ci) * kh + ky) * kw;
                                    for kx in 0..kw {
                                        let ix = (ox * stride + kx) as isize - padding as isize;
                                        if ix < 0 || ix >= w as isize {
                                            continue;
                                        }
                                        acc += xd[xrow + ix as usize] * kd[krow + kx];
                                    }
                                }
                            }
                            data[((bi * o + oi) * oh + oy) * ow + ox] = acc;
                        }
                    }
                }
            }
        }
        let parents = vec![self.node_of(x), self.node_of(kernels)];
        let (xc, kc) = (x.clone(), kernels.clone());
        Ok(self.output(
            data,
            vec![b, o, oh, ow],
            parents,
            Box::new(move |g, needs| {
                let xd = xc.data();
                let kd = kc.data();
                let mut dx = needs[0].then(|| vec![T::zero(); xd.len()]);
                let mut dk = needs[1].then(|| vec![T::zero(); kd.len()]);
                for bi in 0..b {
                    for oi in 0..o {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let gv = g[((bi * o + oi) * oh + oy) * ow + ox];
                                if gv == T::zero() {
                                    continue;
                                }
                                for ci in 0..c {
                                    for ky in 0..kh {
                                        let iy = (oy * stride + ky) as isize - padding as isize;
                                        if iy < 0 || iy >= h as isize {
                                            continue;
                                        }
                                        let xrow = ((bi * c + ci) * h + iy as usize) * w;
                                        let krow = ((oi * c + ci) * kh + ky) * kw;
                                        for kx in 0..kw {
                                            let ix =
                                                (ox * stride + kx) as isize - padding as isize;
                                            if ix < 0 || ix >= w as isize {
                                                continue;
                                            }
                                            if let Some(dx) = dx.as_mut() {
                                                dx[xrow + ix as usize] += gv * kd[krow + kx];
                                            }
                                            if let Some(dk) = dk.as_mut() {
                                                dk[krow + kx] += gv * xd[xrow + ix as usize];
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                vec![dx, dk]
            }),
        ))
    }

    /// Non-padded max pooling over `[b, c, h, w]` windows. Gradient goes to
    /// the first maximum in scan order.
    pub fn maxpool2d(&self, x: &Tensor<T>, window: usize, stride: usize) -> Result<Tensor<T>> {
        if x.rank() != 4 {
            return Err(TensorError::Invalid {
                op: "maxpool2d",
                msg: format!("expected rank 4, got shape {:?}", x.shape()),
            });
        }
        let (b, c, h, w) = dims4(x.shape());
        if window == 0 || stride == 0 || window > h || window > w {
            return Err(TensorError::Invalid {
                op: "maxpool2d",
                msg: format!("window {window} does not fit input {h}x{w}"),
            });
        }
        let oh = (h - window) / stride + 1;
        let ow = (w - window) / stride + 1;
        let mut data = vec![T::zero(); b * c * oh * ow];
        let mut argmax = vec![0usize; b * c * oh * ow];
        {
            let xd = x.data();
            for bc in 0..b * c {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut best = T::neg_infinity();
                        let mut best_idx = 0usize;
                        for ky in 0..window {
                            for kx in 0..window {
                                let idx =
                                    bc * h * w + (oy * stride + ky) * w + (ox * stride + kx);
                                if xd[idx] > best {
                                    best = xd[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        data[(bc * oh + oy) * ow + ox] = best;
                        argmax[(bc * oh + oy) * ow + ox] = best_idx;
                    }
                }
            }
        }
        let parents = vec![self.node_of(x)];
        let xlen = x.len();
        Ok(self.output(
            data,
            vec![b, c, oh, ow],
            parents,
            Box::new(move |g, _| {
                let mut dx = vec![T::zero(); xlen];
                for (gi, &xi) in argmax.iter().enumerate() {
                    dx[xi] += g[gi];
                }
                vec![Some(dx)]
            }),
        ))
    }
}

fn dims4(shape: &[usize]) -> (usize, usize, usize, usize) {
    (shape[0], shape[1], shape[2], shape[3])
}
