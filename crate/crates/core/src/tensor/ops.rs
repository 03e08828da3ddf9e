use rand::Rng;

use super::{Result, Scalar, Tape, Tensor, TensorError};

// ---------------------------------------------------------------------------
// broadcasting (numpy rule, shapes aligned at the trailing axes)
// ---------------------------------------------------------------------------

pub(super) fn broadcast_shape(
    op: &'static str,
    a: &[usize],
    b: &[usize],
) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0usize; rank];
    for i in 0..rank {
        let da = if i < rank - a.len() { 1 } else { a[i - (rank - a.len())] };
        let db = if i < rank - b.len() { 1 } else { b[i - (rank - b.len())] };
        if da != db && da != 1 && db != 1 {
            return Err(TensorError::ShapeMismatch {
                op,
                lhs: a.to_vec(),
                rhs: b.to_vec(),
            });
        }
        out[i] = da.max(db);
    }
    Ok(out)
}

/// Strides into a smaller operand for each axis of the broadcast output;
/// zero stride where the operand is repeated.
fn bcast_strides(shape: &[usize], out_shape: &[usize]) -> Vec<usize> {
    let off = out_shape.len() - shape.len();
    let mut strides = vec![0usize; out_shape.len()];
    let mut s = 1usize;
    for d in (0..shape.len()).rev() {
        strides[off + d] = if shape[d] == 1 { 0 } else { s };
        s *= shape[d];
    }
    strides
}

/// Visit every output position of a broadcast binary op, yielding flat
/// indices (out, a, b).
fn for_each_broadcast(
    out_shape: &[usize],
    a_shape: &[usize],
    b_shape: &[usize],
    mut f: impl FnMut(usize, usize, usize),
) {
    let total: usize = out_shape.iter().product();
    if a_shape == out_shape && b_shape == out_shape {
        for i in 0..total {
            f(i, i, i);
        }
        return;
    }
    let sa = bcast_strides(a_shape, out_shape);
    let sb = bcast_strides(b_shape, out_shape);
    let rank = out_shape.len();
    let mut coords = vec![0usize; rank];
    let mut ia = 0usize;
    let mut ib = 0usize;
    for io in 0..total {
        f(io, ia, ib);
        // odometer increment from the last axis
        for d in (0..rank).rev() {
            coords[d] += 1;
            ia += sa[d];
            ib += sb[d];
            if coords[d] < out_shape[d] {
                break;
            }
            ia -= sa[d] * out_shape[d];
            ib -= sb[d] * out_shape[d];
            coords[d] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// raw matmul kernels
// ---------------------------------------------------------------------------

/// C[m,n] = A[m,k] · B[k,n]
pub(crate) fn mm<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += av * bv;
            }
        }
    }
    c
}

/// C[m,n] = A[m,k] · B[n,k]ᵀ — both operands are scanned along contiguous rows.
fn mm_nt<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * n..(i + 1) * n];
        for (j, cv) in crow.iter_mut().enumerate() {
            let brow = &b[j * k..(j + 1) * k];
            let mut s = T::zero();
            for (&av, &bv) in arow.iter().zip(brow) {
                s += av * bv;
            }
            *cv = s;
        }
    }
    c
}

/// C[k,n] = A[m,k]ᵀ · B[m,n]
fn mm_tn<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); k * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let brow = &b[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let crow = &mut c[p * n..(p + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += av * bv;
            }
        }
    }
    c
}

fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer: usize = shape[..axis].iter().product();
    let len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    (outer, len, inner)
}

impl<T: Scalar> Tape<T> {
    pub(super) fn output(
        &self,
        data: Vec<T>,
        shape: Vec<usize>,
        parents: Vec<usize>,
        backward: super::tape::BackwardFn<T>,
    ) -> Tensor<T> {
        let out = Tensor::new(data, shape, false);
        self.record(&out, parents, Some(backward));
        out
    }

    // -----------------------------------------------------------------------
    // elementwise
    // -----------------------------------------------------------------------

    fn binary(
        &self,
        op: &'static str,
        a: &Tensor<T>,
        b: &Tensor<T>,
        f: impl Fn(T, T) -> T,
        // df(gout, a_val, b_val) -> (contribution to da, contribution to db)
        df: impl Fn(T, T, T) -> (T, T) + 'static,
    ) -> Result<Tensor<T>> {
        let out_shape = broadcast_shape(op, a.shape(), b.shape())?;
        let mut data = vec![T::zero(); out_shape.iter().product()];
        {
            let ad = a.data();
            let bd = b.data();
            for_each_broadcast(&out_shape, a.shape(), b.shape(), |io, ia, ib| {
                data[io] = f(ad[ia], bd[ib]);
            });
        }
        let parents = vec![self.node_of(a), self.node_of(b)];
        let (ac, bc, os) = (a.clone(), b.clone(), out_shape.clone());
        Ok(self.output(
            data,
            out_shape,
            parents,
            Box::new(move |g, needs| {
                let ad = ac.data();
                let bd = bc.data();
                let mut da = needs[0].then(|| vec![T::zero(); ad.len()]);
                let mut db = needs[1].then(|| vec![T::zero(); bd.len()]);
                for_each_broadcast(&os, ac.shape(), bc.shape(), |io, ia, ib| {
                    let (ga, gb) = df(g[io], ad[ia], bd[ib]);
                    if let Some(da) = da.as_mut() {
                        da[ia] += ga;
                    }
                    if let Some(db) = db.as_mut() {
                        db[ib] += gb;
                    }
                });
                vec![da, db]
            }),
        ))
    }

    pub fn add(&self, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        self.binary("add", a, b, |x, y| x + y, |g, _, _| (g, g))
    }

    pub fn sub(&self, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        self.binary("sub", a, b, |x, y| x - y, |g, _, _| (g, -g))
    }

    pub fn mul(&self, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        self.binary("mul", a, b, |x, y| x * y, |g, x, y| (g * y, g * x))
    }

    fn unary(
        &self,
        x: &Tensor<T>,
        f: impl Fn(T) -> T,
        // df(x_val, y_val) -> local derivative
        df: impl Fn(T, T) -> T + 'static,
    ) -> Tensor<T> {
        let data: Vec<T> = x.data().iter().map(|&v| f(v)).collect();
        let out = Tensor::new(data, x.shape().to_vec(), false);
        let parents = vec![self.node_of(x)];
        let (xc, oc) = (x.clone(), out.clone());
        self.record(
            &out,
            parents,
            Some(Box::new(move |g, _| {
                let xd = xc.data();
                let yd = oc.data();
                let dx = g
                    .iter()
                    .zip(xd.iter().zip(yd.iter()))
                    .map(|(&gv, (&xv, &yv))| gv * df(xv, yv))
                    .collect();
                vec![Some(dx)]
            })),
        );
        out
    }

    pub fn neg(&self, x: &Tensor<T>) -> Tensor<T> {
        self.unary(x, |v| -v, |_, _| -T::one())
    }

    pub fn tanh(&self, x: &Tensor<T>) -> Tensor<T> {
        self.unary(x, |v| v.tanh(), |_, y| T::one() - y * y)
    }

    pub fn sigmoid(&self, x: &Tensor<T>) -> Tensor<T> {
        self.unary(
            x,
            |v| T::one() / (T::one() + (-v).exp()),
            |_, y| y * (T::one() - y),
        )
    }

    pub fn relu(&self, x: &Tensor<T>) -> Tensor<T> {
        self.unary(
            x,
            |v| if v > T::zero() { v } else { T::zero() },
            |x, _| if x > T::zero() { T::one() } else { T::zero() },
        )
    }

    pub fn exp(&self, x: &Tensor<T>) -> Tensor<T> {
        self.unary(x, |v| v.exp(), |_, y| y)
    }

    pub fn abs(&self, x: &Tensor<T>) -> Tensor<T> {
        self.unary(
            x,
            |v| v.abs(),
            |x, _| {
                if x > T::zero() {
                    T::one()
                } else if x < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            },
        )
    }

    /// y = scale·x + shift, with scalar constants.
    pub fn affine(&self, x: &Tensor<T>, scale: T, shift: T) -> Tensor<T> {
        self.unary(x, |v| scale * v + shift, move |_, _| scale)
    }

    pub fn scale(&self, x: &Tensor<T>, factor: T) -> Tensor<T> {
        self.affine(x, factor, T::zero())
    }

    // -----------------------------------------------------------------------
    // matrix products
    // -----------------------------------------------------------------------

    /// C[m,n] = A[m,k] · B[k,n]; backward dA = dC·Bᵀ, dB = Aᵀ·dC.
    pub fn matmul(&self, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        if a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0] {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let (m, k) = (a.shape()[0], a.shape()[1]);
        let n = b.shape()[1];
        let data = mm(&a.data(), &b.data(), m, k, n);
        let parents = vec![self.node_of(a), self.node_of(b)];
        let (ac, bc) = (a.clone(), b.clone());
        Ok(self.output(
            data,
            vec![m, n],
            parents,
            Box::new(move |g, needs| {
                let da = needs[0].then(|| mm_nt(g, &bc.data(), m, n, k));
                let db = needs[1].then(|| mm_tn(&ac.data(), g, m, k, n));
                vec![da, db]
            }),
        ))
    }

    /// Batched matmul: C[b,m,n] = A[b,m,k] · B[b,k,n].
    pub fn bmm(&self, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        if a.rank() != 3
            || b.rank() != 3
            || a.shape()[0] != b.shape()[0]
            || a.shape()[2] != b.shape()[1]
        {
            return Err(TensorError::ShapeMismatch {
                op: "bmm",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let (bs, m, k) = (a.shape()[0], a.shape()[1], a.shape()[2]);
        let n = b.shape()[2];
        let mut data = Vec::with_capacity(bs * m * n);
        {
            let ad = a.data();
            let bd = b.data();
            for i in 0..bs {
                data.extend(mm(
                    &ad[i * m * k..(i + 1) * m * k],
                    &bd[i * k * n..(i + 1) * k * n],
                    m,
                    k,
                    n,
                ));
            }
        }
        let parents = vec![self.node_of(a), self.node_of(b)];
        let (ac, bc) = (a.clone(), b.clone());
        Ok(self.output(
            data,
            vec![bs, m, n],
            parents,
            Box::new(move |g, needs| {
                let ad = ac.data();
                let bd = bc.data();
                let da = needs[0].then(|| {
                    let mut da = Vec::with_capacity(bs * m * k);
                    for i in 0..bs {
                        da.extend(mm_nt(
                            &g[i * m * n..(i + 1) * m * n],
                            &bd[i * k * n..(i + 1) * k * n],
                            m,
                            n,
                            k,
                        ));
                    }
                    da
                });
                let db = needs[1].then(|| {
                    let mut db = Vec::with_capacity(bs * k * n);
                    for i in 0..bs {
                        db.extend(mm_tn(
                            &ad[i * m * k..(i + 1) * m * k],
                            &g[i * m * n..(i + 1) * m * n],
                            m,
                            k,
                            n,
                        ));
                    }
                    db
                });
                vec![da, db]
            }),
        ))
    }

    // -----------------------------------------------------------------------
    // reductions
    // -----------------------------------------------------------------------

    fn check_axis(&self, op: &'static str, x: &Tensor<T>, axis: usize) -> Result<()> {
        if axis >= x.rank() {
            return Err(TensorError::AxisOutOfRange {
                op,
                axis,
                rank: x.rank(),
            });
        }
        Ok(())
    }

    pub fn reduce_sum(&self, x: &Tensor<T>, axis: usize) -> Result<Tensor<T>> {
        self.check_axis("reduce_sum", x, axis)?;
        let (outer, len, inner) = axis_split(x.shape(), axis);
        let mut out_shape = x.shape().to_vec();
        out_shape.remove(axis);
        let mut data = vec![T::zero(); outer * inner];
        {
            let xd = x.data();
            for o in 0..outer {
                for a in 0..len {
                    let base = (o * len + a) * inner;
                    let orow = &mut data[o * inner..(o + 1) * inner];
                    for (ov, &xv) in orow.iter_mut().zip(&xd[base..base + inner]) {
                        *ov += xv;
                    }
                }
            }
        }
        let parents = vec![self.node_of(x)];
        let xlen = x.len();
        Ok(self.output(
            data,
            out_shape,
            parents,
            Box::new(move |g, _| {
                let mut dx = vec![T::zero(); xlen];
                for o in 0..outer {
                    for a in 0..len {
                        let base = (o * len + a) * inner;
                        dx[base..base + inner].copy_from_slice(&g[o * inner..(o + 1) * inner]);
                    }
                }
                vec![Some(dx)]
            }),
        ))
    }

    pub fn reduce_mean(&self, x: &Tensor<T>, axis: usize) -> Result<Tensor<T>> {
        self.check_axis("reduce_mean", x, axis)?;
        let len = x.shape()[axis];
        let s = self.reduce_sum(x, axis)?;
        Ok(self.scale(&s, T::one() / T::from_f64(len as f64)))
    }

    /// Max along `axis`. The backward pass routes the gradient to the first
    /// maximum position (ties break toward the lowest index).
    pub fn reduce_max(&self, x: &Tensor<T>, axis: usize) -> Result<Tensor<T>> {
        self.check_axis("reduce_max", x, axis)?;
        let (outer, len, inner) = axis_split(x.shape(), axis);
        let mut out_shape = x.shape().to_vec();
        out_shape.remove(axis);
        let mut data = vec![T::zero(); outer * inner];
        let mut argmax = vec![0usize; outer * inner];
        {
            let xd = x.data();
            for o in 0..outer {
                for i in 0..inner {
                    let mut best = xd[(o * len) * inner + i];
                    let mut best_a = 0usize;
                    for a in 1..len {
                        let v = xd[(o * len + a) * inner + i];
                        if v > best {
                            best = v;
                            best_a = a;
                        }
                    }
                    data[o * inner + i] = best;
                    argmax[o * inner + i] = best_a;
                }
            }
        }
        let parents = vec![self.node_of(x)];
        let xlen = x.len();
        Ok(self.output(
            data,
            out_shape,
            parents,
            Box::new(move |g, _| {
                let mut dx = vec![T::zero(); xlen];
                for o in 0..outer {
                    for i in 0..inner {
                        let a = argmax[o * inner + i];
                        dx[(o * len + a) * inner + i] += g[o * inner + i];
                    }
                }
                vec![Some(dx)]
            }),
        ))
    }

    /// Sum of every element, as a scalar tensor.
    pub fn sum_all(&self, x: &Tensor<T>) -> Tensor<T> {
        let total = x.data().iter().fold(T::zero(), |acc, &v| acc + v);
        let out = Tensor::new(vec![total], vec![1], false);
        let parents = vec![self.node_of(x)];
        let xlen = x.len();
        self.record(
            &out,
            parents,
            Some(Box::new(move |g, _| vec![Some(vec![g[0]; xlen])])),
        );
        out
    }

    pub fn mean_all(&self, x: &Tensor<T>) -> Tensor<T> {
        let n = T::from_f64(x.len() as f64);
        let s = self.sum_all(x);
        self.scale(&s, T::one() / n)
    }

    // -----------------------------------------------------------------------
    // softmax
    // -----------------------------------------------------------------------

    /// Numerically stabilized softmax along `axis`. With a mask (same shape,
    /// entries 0 or 1, treated as a constant), masked positions come out as
    /// exactly 0 and are excluded from the normalization.
    pub fn softmax(
        &self,
        x: &Tensor<T>,
        axis: usize,
        mask: Option<&Tensor<T>>,
    ) -> Result<Tensor<T>> {
        self.check_axis("softmax", x, axis)?;
        if let Some(m) = mask {
            if m.shape() != x.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "softmax",
                    lhs: x.shape().to_vec(),
                    rhs: m.shape().to_vec(),
                });
            }
        }
        let (outer, len, inner) = axis_split(x.shape(), axis);
        let mut data = vec![T::zero(); x.len()];
        {
            let xd = x.data();
            let md = mask.map(|m| m.data());
            let live = |idx: usize| md.as_ref().map_or(true, |m| m[idx] > T::from_f64(0.5));
            for o in 0..outer {
                for i in 0..inner {
                    let idx = |a: usize| (o * len + a) * inner + i;
                    let mut mx: Option<T> = None;
                    for a in 0..len {
                        if live(idx(a)) {
                            let v = xd[idx(a)];
                            mx = Some(mx.map_or(v, |m: T| m.max(v)));
                        }
                    }
                    let Some(mx) = mx else {
                        return Err(TensorError::DegenerateMask { slice: o * inner + i });
                    };
                    let mut sum = T::zero();
                    for a in 0..len {
                        if live(idx(a)) {
                            let e = (xd[idx(a)] - mx).exp();
                            data[idx(a)] = e;
                            sum += e;
                        }
                    }
                    for a in 0..len {
                        data[idx(a)] = data[idx(a)] / sum;
                    }
                }
            }
        }
        let out = Tensor::new(data, x.shape().to_vec(), false);
        let parents = vec![self.node_of(x)];
        let oc = out.clone();
        let xlen = x.len();
        self.record(
            &out,
            parents,
            Some(Box::new(move |g, _| {
                let yd = oc.data();
                let mut dx = vec![T::zero(); xlen];
                for o in 0..outer {
                    for i in 0..inner {
                        let idx = |a: usize| (o * len + a) * inner + i;
                        let mut dot = T::zero();
                        for a in 0..len {
                            dot += g[idx(a)] * yd[idx(a)];
                        }
                        for a in 0..len {
                            dx[idx(a)] = yd[idx(a)] * (g[idx(a)] - dot);
                        }
                    }
                }
                vec![Some(dx)]
            })),
        );
        Ok(out)
    }

    // -----------------------------------------------------------------------
    // similarity
    // -----------------------------------------------------------------------

    /// Word-pair similarity features of two equal-length vectors, as a `[3]`
    /// tensor `[cos, -euclid, dot]`. The Euclidean channel is negated so all
    /// three grow with similarity. Cosine against a zero vector is 0.
    pub fn similarity_triple(&self, u: &Tensor<T>, v: &Tensor<T>) -> Result<Tensor<T>> {
        if u.shape() != v.shape() || u.rank() != 1 || u.is_empty() {
            return Err(TensorError::ShapeMismatch {
                op: "similarity_triple",
                lhs: u.shape().to_vec(),
                rhs: v.shape().to_vec(),
            });
        }
        let (cos, neg_euclid, dot, nu, nv) = {
            let ud = u.data();
            let vd = v.data();
            sim_triple_raw(&ud, &vd)
        };
        let parents = vec![self.node_of(u), self.node_of(v)];
        let (uc, vc) = (u.clone(), v.clone());
        Ok(self.output(
            vec![cos, neg_euclid, dot],
            vec![3],
            parents,
            Box::new(move |g, needs| {
                let ud = uc.data();
                let vd = vc.data();
                let d = ud.len();
                let euclid = -neg_euclid;
                let mut du = needs[0].then(|| vec![T::zero(); d]);
                let mut dv = needs[1].then(|| vec![T::zero(); d]);
                for i in 0..d {
                    let (ui, vi) = (ud[i], vd[i]);
                    // cos channel
                    let (mut cu, mut cv) = (T::zero(), T::zero());
                    if nu > T::zero() && nv > T::zero() {
                        cu = vi / (nu * nv) - cos * ui / (nu * nu);
                        cv = ui / (nu * nv) - cos * vi / (nv * nv);
                    }
                    // negated euclidean channel
                    let (mut eu, mut ev) = (T::zero(), T::zero());
                    if euclid > T::zero() {
                        eu = -(ui - vi) / euclid;
                        ev = (ui - vi) / euclid;
                    }
                    if let Some(du) = du.as_mut() {
                        du[i] = g[0] * cu + g[1] * eu + g[2] * vi;
                    }
                    if let Some(dv) = dv.as_mut() {
                        dv[i] = g[0] * cv + g[1] * ev + g[2] * ui;
                    }
                }
                vec![du, dv]
            }),
        ))
    }

    // -----------------------------------------------------------------------
    // shape surgery
    // -----------------------------------------------------------------------

    pub fn concat(&self, xs: &[&Tensor<T>], axis: usize) -> Result<Tensor<T>> {
        if xs.is_empty() {
            return Err(TensorError::Invalid {
                op: "concat",
                msg: "no inputs".into(),
            });
        }
        self.check_axis("concat", xs[0], axis)?;
        let rank = xs[0].rank();
        for x in xs {
            if x.rank() != rank
                || x.shape()[..axis] != xs[0].shape()[..axis]
                || x.shape()[axis + 1..] != xs[0].shape()[axis + 1..]
            {
                return Err(TensorError::ShapeMismatch {
                    op: "concat",
                    lhs: xs[0].shape().to_vec(),
                    rhs: x.shape().to_vec(),
                });
            }
        }
        let (outer, _, inner) = axis_split(xs[0].shape(), axis);
        let axis_total: usize = xs.iter().map(|x| x.shape()[axis]).sum();
        let mut out_shape = xs[0].shape().to_vec();
        out_shape[axis] = axis_total;
        let mut data = vec![T::zero(); outer * axis_total * inner];
        let blocks: Vec<usize> = xs.iter().map(|x| x.shape()[axis] * inner).collect();
        let out_stride = axis_total * inner;
        for (xi, x) in xs.iter().enumerate() {
            let xd = x.data();
            let block = blocks[xi];
            let offset: usize = blocks[..xi].iter().sum();
            for o in 0..outer {
                data[o * out_stride + offset..o * out_stride + offset + block]
                    .copy_from_slice(&xd[o * block..(o + 1) * block]);
            }
        }
        let parents: Vec<usize> = xs.iter().map(|x| self.node_of(x)).collect();
        Ok(self.output(
            data,
            out_shape,
            parents,
            Box::new(move |g, needs| {
                let n = blocks.len();
                let mut grads: Vec<Option<Vec<T>>> = Vec::with_capacity(n);
                for xi in 0..n {
                    if !needs[xi] {
                        grads.push(None);
                        continue;
                    }
                    let block = blocks[xi];
                    let offset: usize = blocks[..xi].iter().sum();
                    let mut dx = vec![T::zero(); outer * block];
                    for o in 0..outer {
                        dx[o * block..(o + 1) * block].copy_from_slice(
                            &g[o * out_stride + offset..o * out_stride + offset + block],
                        );
                    }
                    grads.push(Some(dx));
                }
                grads
            }),
        ))
    }

    /// Contiguous sub-range `[start, start+len)` along `axis`.
    pub fn narrow(
        &self,
        x: &Tensor<T>,
        axis: usize,
        start: usize,
        len: usize,
    ) -> Result<Tensor<T>> {
        self.check_axis("narrow", x, axis)?;
        if start + len > x.shape()[axis] || len == 0 {
            return Err(TensorError::Invalid {
                op: "narrow",
                msg: format!(
                    "range {}..{} out of bounds for axis of size {}",
                    start,
                    start + len,
                    x.shape()[axis]
                ),
            });
        }
        let (outer, alen, inner) = axis_split(x.shape(), axis);
        let mut out_shape = x.shape().to_vec();
        out_shape[axis] = len;
        let mut data = vec![T::zero(); outer * len * inner];
        {
            let xd = x.data();
            for o in 0..outer {
                let src = (o * alen + start) * inner;
                data[o * len * inner..(o + 1) * len * inner]
                    .copy_from_slice(&xd[src..src + len * inner]);
            }
        }
        let parents = vec![self.node_of(x)];
        let xlen = x.len();
        Ok(self.output(
            data,
            out_shape,
            parents,
            Box::new(move |g, _| {
                let mut dx = vec![T::zero(); xlen];
                for o in 0..outer {
                    let dst = (o * alen + start) * inner;
                    dx[dst..dst + len * inner]
                        .copy_from_slice(&g[o * len * inner..(o + 1) * len * inner]);
                }
                vec![Some(dx)]
            }),
        ))
    }

    pub fn reshape(&self, x: &Tensor<T>, shape: &[usize]) -> Result<Tensor<T>> {
        if shape.iter().product::<usize>() != x.len() {
            return Err(TensorError::ShapeMismatch {
                op: "reshape",
                lhs: x.shape().to_vec(),
                rhs: shape.to_vec(),
            });
        }
        let out = Tensor::new(x.to_vec(), shape.to_vec(), false);
        let parents = vec![self.node_of(x)];
        self.record(
            &out,
            parents,
            Some(Box::new(move |g, _| vec![Some(g.to_vec())])),
        );
        Ok(out)
    }

    pub fn transpose2d(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.rank() != 2 {
            return Err(TensorError::Invalid {
                op: "transpose2d",
                msg: format!("expected rank 2, got shape {:?}", x.shape()),
            });
        }
        let (m, n) = (x.shape()[0], x.shape()[1]);
        let xd = x.data();
        let mut data = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = xd[i * n + j];
            }
        }
        drop(xd);
        let parents = vec![self.node_of(x)];
        Ok(self.output(
            data,
            vec![n, m],
            parents,
            Box::new(move |g, _| {
                let mut dx = vec![T::zero(); m * n];
                for j in 0..n {
                    for i in 0..m {
                        dx[i * n + j] = g[j * m + i];
                    }
                }
                vec![Some(dx)]
            }),
        ))
    }

    // -----------------------------------------------------------------------
    // regularization and losses
    // -----------------------------------------------------------------------

    /// Inverted dropout: keeps each element with probability `1-p`, scaling
    /// the kept ones by `1/(1-p)`. The sampled mask is a constant for the
    /// backward pass.
    pub fn dropout<R: Rng>(&self, x: &Tensor<T>, p: f64, rng: &mut R) -> Result<Tensor<T>> {
        if !(0.0..1.0).contains(&p) {
            return Err(TensorError::Invalid {
                op: "dropout",
                msg: format!("rate {p} outside [0, 1)"),
            });
        }
        if p == 0.0 {
            return self.reshape(x, &x.shape().to_vec());
        }
        let keep = T::from_f64(1.0 / (1.0 - p));
        let mask: Vec<T> = (0..x.len())
            .map(|_| {
                if rng.gen_range(0.0..1.0) < p {
                    T::zero()
                } else {
                    keep
                }
            })
            .collect();
        let data = x
            .data()
            .iter()
            .zip(&mask)
            .map(|(&v, &m)| v * m)
            .collect();
        let parents = vec![self.node_of(x)];
        Ok(self.output(
            data,
            x.shape().to_vec(),
            parents,
            Box::new(move |g, _| {
                vec![Some(
                    g.iter().zip(&mask).map(|(&gv, &m)| gv * m).collect(),
                )]
            }),
        ))
    }

    /// Mean cross-entropy of row-wise logits `[b, c]` against class indices.
    pub fn cross_entropy(&self, logits: &Tensor<T>, targets: &[usize]) -> Result<Tensor<T>> {
        if logits.rank() != 2 || logits.shape()[0] != targets.len() {
            return Err(TensorError::Invalid {
                op: "cross_entropy",
                msg: format!(
                    "logits {:?} incompatible with {} targets",
                    logits.shape(),
                    targets.len()
                ),
            });
        }
        let (b, c) = (logits.shape()[0], logits.shape()[1]);
        if let Some(&bad) = targets.iter().find(|&&t| t >= c) {
            return Err(TensorError::Invalid {
                op: "cross_entropy",
                msg: format!("target class {bad} out of range for {c} classes"),
            });
        }
        let mut probs = vec![T::zero(); b * c];
        let mut loss = T::zero();
        {
            let zd = logits.data();
            for i in 0..b {
                let row = &zd[i * c..(i + 1) * c];
                let mx = row.iter().fold(row[0], |m, &v| m.max(v));
                let mut sum = T::zero();
                for j in 0..c {
                    let e = (row[j] - mx).exp();
                    probs[i * c + j] = e;
                    sum += e;
                }
                for j in 0..c {
                    probs[i * c + j] = probs[i * c + j] / sum;
                }
                loss += sum.ln() + mx - row[targets[i]];
            }
        }
        loss = loss / T::from_f64(b as f64);
        let parents = vec![self.node_of(logits)];
        let targets = targets.to_vec();
        Ok(self.output(
            vec![loss],
            vec![1],
            parents,
            Box::new(move |g, _| {
                let scale = g[0] / T::from_f64(b as f64);
                let mut dz = probs.clone();
                for i in 0..b {
                    dz[i * c + targets[i]] -= T::one();
                }
                for v in dz.iter_mut() {
                    *v *= scale;
                }
                vec![Some(dz)]
            }),
        ))
    }
}

/// Plain-value similarity triple; shared by the op and by eval-only callers.
/// Returns (cos, -euclid, dot, |u|, |v|).
pub(crate) fn sim_triple_raw<T: Scalar>(u: &[T], v: &[T]) -> (T, T, T, T, T) {
    let mut dot = T::zero();
    let mut uu = T::zero();
    let mut vv = T::zero();
    let mut dd = T::zero();
    for (&a, &b) in u.iter().zip(v) {
        dot += a * b;
        uu += a * a;
        vv += b * b;
        dd += (a - b) * (a - b);
    }
    let nu = uu.sqrt();
    let nv = vv.sqrt();
    let cos = if nu > T::zero() && nv > T::zero() {
        dot / (nu * nv)
    } else {
        T::zero()
    };
    (cos, -dd.sqrt(), dot, nu, nv)
}
