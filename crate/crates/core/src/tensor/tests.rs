use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gradcheck::{check_gradients, DEFAULT_EPSILON};
use super::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_param(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let len = shape.iter().product();
    let data = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::param(data, shape).unwrap()
}

/// Loss = sum(out ⊙ w) with fixed pseudo-random weights, so gradient bugs
/// that a plain sum would cancel out still show up.
fn weighted_sum(tape: &Tape<f64>, out: &Tensor<f64>) -> Tensor<f64> {
    let w: Vec<f64> = (0..out.len()).map(|i| ((i * 37 + 11) % 17) as f64 / 7.0 - 1.0).collect();
    let w = Tensor::from_vec(w, out.shape()).unwrap();
    tape.sum_all(&tape.mul(out, &w).unwrap())
}

#[test]
fn matmul_identity() {
    let tape = Tape::<f64>::new();
    let eye = Tensor::from_vec(vec![1.0, 0.0, 0.0, 1.0], &[2, 2]).unwrap();
    let x = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0], &[2, 2]).unwrap();
    let y = tape.matmul(&eye, &x).unwrap();
    assert_eq!(y.to_vec(), vec![1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn matmul_row_times_column() {
    let tape = Tape::<f64>::new();
    let a = Tensor::from_vec(vec![1.0, 2.0], &[1, 2]).unwrap();
    let b = Tensor::from_vec(vec![3.0, 4.0], &[2, 1]).unwrap();
    let c = tape.matmul(&a, &b).unwrap();
    assert_eq!(c.shape(), &[1, 1]);
    assert_eq!(c.item(), 11.0);
}

#[test]
fn matmul_shape_mismatch_names_both_shapes() {
    let tape = Tape::<f64>::new();
    let a = Tensor::zeros(&[2, 3]);
    let b = Tensor::zeros(&[2, 3]);
    let err = tape.matmul(&a, &b).unwrap_err().to_string();
    assert!(err.contains("[2, 3]"), "{err}");
}

#[test]
fn matmul_gradient_matches_finite_differences() {
    let mut r = rng(7);
    let a = rand_param(&[3, 4], &mut r);
    let b = rand_param(&[4, 2], &mut r);
    let params = vec![("a".to_string(), a.clone()), ("b".to_string(), b.clone())];
    let report = check_gradients(
        &params,
        |tape| {
            let c = tape.matmul(&a, &b)?;
            Ok(weighted_sum(tape, &c))
        },
        DEFAULT_EPSILON,
    )
    .unwrap();
    assert!(report.within(1e-4), "max rel err {}", report.max_rel_err);
}

#[test]
fn bmm_gradient_matches_finite_differences() {
    let mut r = rng(8);
    let a = rand_param(&[2, 3, 4], &mut r);
    let b = rand_param(&[2, 4, 2], &mut r);
    let params = vec![("a".to_string(), a.clone()), ("b".to_string(), b.clone())];
    let report = check_gradients(
        &params,
        |tape| {
            let c = tape.bmm(&a, &b)?;
            Ok(weighted_sum(tape, &c))
        },
        DEFAULT_EPSILON,
    )
    .unwrap();
    assert!(report.within(1e-4), "max rel err {}", report.max_rel_err);
}

#[test]
fn sigmoid_at_zero_is_half() {
    let tape = Tape::<f64>::new();
    let x = Tensor::scalar(0.0);
    assert_eq!(tape.sigmoid(&x).item(), 0.5);
}

#[test]
fn tanh_gradient_at_0_3() {
    let x = Tensor::param(vec![0.3], &[1]).unwrap();
    let params = vec![("x".to_string(), x.clone())];
    let report = check_gradients(&params, |t| Ok(t.tanh(&x)), 1e-5).unwrap();
    // finite difference vs analytic 1 - tanh²(0.3)
    assert!(report.max_rel_err < 1e-6, "{}", report.max_rel_err);
    let tape = Tape::new();
    let y = tape.tanh(&x);
    x.zero_grad();
    tape.backward(&y).unwrap();
    let g = x.grad().unwrap()[0];
    assert!((g - (1.0 - 0.3f64.tanh().powi(2))).abs() < 1e-12);
}

#[test]
fn mul_by_zero_annihilates() {
    let tape = Tape::<f64>::new();
    let a = Tensor::from_vec(vec![1.0, 2.0, 3.0], &[3]).unwrap();
    let b = Tensor::zeros(&[3]);
    assert_eq!(tape.mul(&a, &b).unwrap().to_vec(), vec![0.0, 0.0, 0.0]);
}

#[test]
fn broadcast_trailing_axes() {
    let tape = Tape::<f64>::new();
    let a = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[2, 3]).unwrap();
    let b = Tensor::from_vec(vec![10.0, 20.0], &[2, 1]).unwrap();
    let y = tape.mul(&a, &b).unwrap();
    assert_eq!(y.to_vec(), vec![10.0, 20.0, 30.0, 80.0, 100.0, 120.0]);
    let c = Tensor::from_vec(vec![1.0, 2.0, 3.0], &[3]).unwrap();
    let z = tape.add(&a, &c).unwrap();
    assert_eq!(z.to_vec(), vec![2.0, 4.0, 6.0, 5.0, 7.0, 9.0]);
}

#[test]
fn broadcast_rejects_incompatible() {
    let tape = Tape::<f64>::new();
    let a = Tensor::zeros(&[2, 3]);
    let b = Tensor::zeros(&[2, 2]);
    assert!(tape.add(&a, &b).is_err());
}

#[test]
fn broadcast_gradients_match_finite_differences() {
    let mut r = rng(9);
    let a = rand_param(&[2, 3, 4], &mut r);
    let b = rand_param(&[3, 1], &mut r);
    let params = vec![("a".to_string(), a.clone()), ("b".to_string(), b.clone())];
    let report = check_gradients(
        &params,
        |tape| {
            let y = tape.mul(&a, &b)?;
            let z = tape.add(&y, &b)?;
            Ok(weighted_sum(tape, &z))
        },
        DEFAULT_EPSILON,
    )
    .unwrap();
    assert!(report.within(1e-4), "max rel err {}", report.max_rel_err);
}

#[test]
fn elementwise_unary_gradients() {
    let mut r = rng(10);
    let x = rand_param(&[5], &mut r);
    let params = vec![("x".to_string(), x.clone())];
    let report = check_gradients(
        &params,
        |tape| {
            let a = tape.tanh(&x);
            let b = tape.sigmoid(&a);
            let c = tape.exp(&b);
            let d = tape.abs(&c);
            let e = tape.relu(&d);
            let f = tape.neg(&e);
            let g = tape.affine(&f, 0.5, 1.0);
            Ok(weighted_sum(tape, &g))
        },
        DEFAULT_EPSILON,
    )
    .unwrap();
    assert!(report.within(1e-4), "max rel err {}", report.max_rel_err);
}

#[test]
fn reduce_max_over_rows() {
    let tape = Tape::<f64>::new();
    let x = Tensor::from_vec(vec![1.0, 5.0, 3.0, 2.0], &[2, 2]).unwrap();
    let y = tape.reduce_max(&x, 0).unwrap();
    assert_eq!(y.to_vec(), vec![3.0, 5.0]);
}

#[test]
fn reduce_mean_vector() {
    let tape = Tape::<f64>::new();
    let x = Tensor::from_vec(vec![2.0, 4.0, 6.0], &[3]).unwrap();
    assert_eq!(tape.reduce_mean(&x, 0).unwrap().item(), 4.0);
}

#[test]
fn reduce_max_tie_breaks_to_lowest_index() {
    let tape = Tape::<f64>::new();
    let x = Tensor::param(vec![5.0, 5.0], &[2]).unwrap();
    let y = tape.reduce_max(&x, 0).unwrap();
    tape.backward(&y).unwrap();
    assert_eq!(x.grad().unwrap(), vec![1.0, 0.0]);
}

#[test]
fn reduce_axis_out_of_range() {
    let tape = Tape::<f64>::new();
    let x = Tensor::zeros(&[2, 2]);
    assert!(matches!(
        tape.reduce_sum(&x, 2),
        Err(TensorError::AxisOutOfRange { .. })
    ));
}

#[test]
fn reduce_gradients_match_finite_differences() {
    let mut r = rng(11);
    let x = rand_param(&[3, 4, 2], &mut r);
    let params = vec![("x".to_string(), x.clone())];
    let report = check_gradients(
        &params,
        |tape| {
            let a = tape.reduce_max(&x, 1)?;
            let b = tape.reduce_mean(&x, 2)?;
            let c = tape.reduce_sum(&b, 0)?;
            let s1 = weighted_sum(tape, &a);
            let s2 = weighted_sum(tape, &c);
            tape.add(&s1, &s2)
        },
        DEFAULT_EPSILON,
    )
    .unwrap();
    assert!(report.within(1e-4), "max rel err {}", report.max_rel_err);
}

#[test]
fn softmax_uniform() {
    let tape = Tape::<f64>::new();
    let x = Tensor::zeros(&[3]);
    let y = tape.softmax(&x, 0, None).unwrap();
    for v in y.to_vec() {
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn softmax_matches_direct_formula() {
    let tape = Tape::<f64>::new();
    let x = Tensor::from_vec(vec![1.0, 2.0, 3.0], &[3]).unwrap();
    let y = tape.softmax(&x, 0, None).unwrap();
    // direct formula oracle: exp(x_i - 3) / Σ exp(x_k - 3)
    let exps: Vec<f64> = [1.0f64, 2.0, 3.0].iter().map(|v| (v - 3.0).exp()).collect();
    let total: f64 = exps.iter().sum();
    for (got, want) in y.to_vec().iter().zip(exps.iter().map(|e| e / total)) {
        assert!((got - want).abs() < 1e-6);
    }
}

#[test]
fn softmax_single_unmasked_entry() {
    let tape = Tape::<f64>::new();
    let x = Tensor::from_vec(vec![5.0, 5.0], &[2]).unwrap();
    let m = Tensor::from_vec(vec![1.0, 0.0], &[2]).unwrap();
    let y = tape.softmax(&x, 0, Some(&m)).unwrap();
    assert_eq!(y.to_vec(), vec![1.0, 0.0]);
}

#[test]
fn softmax_fully_masked_slice_is_an_error() {
    let tape = Tape::<f64>::new();
    let x = Tensor::zeros(&[2, 2]);
    let m = Tensor::from_vec(vec![1.0, 1.0, 0.0, 0.0], &[2, 2]).unwrap();
    assert!(matches!(
        tape.softmax(&x, 1, Some(&m)),
        Err(TensorError::DegenerateMask { .. })
    ));
}

#[test]
fn softmax_slices_sum_to_one_and_masked_positions_are_zero() {
    let mut r = rng(12);
    let tape = Tape::<f64>::new();
    let data: Vec<f64> = (0..24).map(|_| r.gen_range(-3.0..3.0)).collect();
    let mask: Vec<f64> = (0..24).map(|i| if i % 5 == 0 { 0.0 } else { 1.0 }).collect();
    let x = Tensor::from_vec(data, &[2, 3, 4]).unwrap();
    let m = Tensor::from_vec(mask.clone(), &[2, 3, 4]).unwrap();
    let y = tape.softmax(&x, 1, Some(&m)).unwrap();
    let yd = y.to_vec();
    for (i, v) in yd.iter().enumerate() {
        if mask[i] == 0.0 {
            assert_eq!(*v, 0.0);
        }
    }
    for o in 0..2 {
        for i in 0..4 {
            let s: f64 = (0..3).map(|a| yd[(o * 3 + a) * 4 + i]).sum();
            assert!((s - 1.0).abs() < 1e-6, "slice sum {s}");
        }
    }
}

#[test]
fn softmax_gradient_matches_finite_differences() {
    let mut r = rng(13);
    let x = rand_param(&[2, 4], &mut r);
    let m = Tensor::from_vec(vec![1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0], &[2, 4]).unwrap();
    let params = vec![("x".to_string(), x.clone())];
    let report = check_gradients(
        &params,
        |tape| {
            let y = tape.softmax(&x, 1, Some(&m))?;
            Ok(weighted_sum(tape, &y))
        },
        DEFAULT_EPSILON,
    )
    .unwrap();
    assert!(report.within(1e-4), "max rel err {}", report.max_rel_err);
}

#[test]
fn similarity_triple_self_pair() {
    let tape = Tape::<f64>::new();
    let u = Tensor::from_vec(vec![3.0, 4.0], &[2]).unwrap();
    let y = tape.similarity_triple(&u, &u).unwrap();
    let v = y.to_vec();
    assert!((v[0] - 1.0).abs() < 1e-12);
    assert_eq!(v[1], 0.0);
    assert!((v[2] - 25.0).abs() < 1e-12);
}

#[test]
fn similarity_triple_orthogonal() {
    let tape = Tape::<f64>::new();
    let u = Tensor::from_vec(vec![1.0, 0.0], &[2]).unwrap();
    let v = Tensor::from_vec(vec![0.0, 1.0], &[2]).unwrap();
    let y = tape.similarity_triple(&u, &v).unwrap().to_vec();
    assert_eq!(y[0], 0.0);
    assert!((y[1] + 2.0f64.sqrt()).abs() < 1e-12);
    assert_eq!(y[2], 0.0);
}

#[test]
fn similarity_triple_zero_vector_cosine_convention() {
    let tape = Tape::<f64>::new();
    let u = Tensor::zeros(&[3]);
    let v = Tensor::from_vec(vec![1.0, 2.0, 3.0], &[3]).unwrap();
    let y = tape.similarity_triple(&u, &v).unwrap().to_vec();
    assert_eq!(y[0], 0.0);
}

#[test]
fn similarity_triple_matches_direct_formula() {
    let mut r = rng(14);
    let tape = Tape::<f64>::new();
    let ud: Vec<f64> = (0..5).map(|_| r.gen_range(-2.0..2.0)).collect();
    let vd: Vec<f64> = (0..5).map(|_| r.gen_range(-2.0..2.0)).collect();
    let u = Tensor::from_vec(ud.clone(), &[5]).unwrap();
    let v = Tensor::from_vec(vd.clone(), &[5]).unwrap();
    let y = tape.similarity_triple(&u, &v).unwrap().to_vec();
    // independent recomputation straight from the definitions
    let dot: f64 = ud.iter().zip(&vd).map(|(a, b)| a * b).sum();
    let nu: f64 = ud.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = vd.iter().map(|a| a * a).sum::<f64>().sqrt();
    let euclid: f64 = ud
        .iter()
        .zip(&vd)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    assert!((y[0] - dot / (nu * nv)).abs() < 1e-6);
    assert!((y[1] + euclid).abs() < 1e-6);
    assert!((y[2] - dot).abs() < 1e-6);
}

#[test]
fn similarity_triple_symmetry_and_dot_equals_matmul() {
    let mut r = rng(15);
    let tape = Tape::<f64>::new();
    let ud: Vec<f64> = (0..6).map(|_| r.gen_range(-2.0..2.0)).collect();
    let vd: Vec<f64> = (0..6).map(|_| r.gen_range(-2.0..2.0)).collect();
    let u = Tensor::from_vec(ud.clone(), &[6]).unwrap();
    let v = Tensor::from_vec(vd.clone(), &[6]).unwrap();
    let uv = tape.similarity_triple(&u, &v).unwrap().to_vec();
    let vu = tape.similarity_triple(&v, &u).unwrap().to_vec();
    assert!((uv[0] - vu[0]).abs() < 1e-12);
    assert!((uv[1] - vu[1]).abs() < 1e-12);
    let row = Tensor::from_vec(ud, &[1, 6]).unwrap();
    let col = Tensor::from_vec(vd, &[6, 1]).unwrap();
    let dot = tape.matmul(&row, &col).unwrap().item();
    assert!((uv[2] - dot).abs() < 1e-12);
}

#[test]
fn similarity_triple_gradient_matches_finite_differences() {
    let mut r = rng(16);
    let u = rand_param(&[5], &mut r);
    let v = rand_param(&[5], &mut r);
    let params = vec![("u".to_string(), u.clone()), ("v".to_string(), v.clone())];
    let report = check_gradients(
        &params,
        |tape| {
            let y = tape.similarity_triple(&u, &v)?;
            Ok(weighted_sum(tape, &y))
        },
        DEFAULT_EPSILON,
    )
    .unwrap();
    assert!(report.within(1e-4), "max rel err {}", report.max_rel_err);
}

#[test]
fn conv2d_identity_kernel() {
    let tape = Tape::<f64>::new();
    let x = Tensor::from_vec((1..=9).map(|v| v as f64).collect(), &[1, 1, 3, 3]).unwrap();
    let k = Tensor::from_vec(vec![1.0], &[1, 1, 1, 1]).unwrap();
    let y = tape.conv2d(&x, &k, 1, 0).unwrap();
    assert_eq!(y.shape(), &[1, 1, 3, 3]);
    assert_eq!(y.to_vec(), x.to_vec());
}

#[test]
fn conv2d_all_ones() {
    let tape = Tape::<f64>::new();
    let x = Tensor::full(&[1, 1, 3, 3], 1.0);
    let k = Tensor::full(&[1, 1, 2, 2], 1.0);
    let y = tape.conv2d(&x, &k, 1, 0).unwrap();
    assert_eq!(y.shape(), &[1, 1, 2, 2]);
    assert_eq!(y.to_vec(), vec![4.0; 4]);
}

#[test]
fn conv2d_kernel_too_large() {
    let tape = Tape::<f64>::new();
    let x = Tensor::zeros(&[1, 1, 2, 2]);
    let k = Tensor::zeros(&[1, 1, 5, 5]);
    assert!(matches!(
        tape.conv2d(&x, &k, 1, 0),
        Err(TensorError::KernelTooLarge { .. })
    ));
}

#[test]
fn conv2d_gradient_matches_finite_differences() {
    let mut r = rng(17);
    let x = rand_param(&[1, 2, 5, 5], &mut r);
    let k = rand_param(&[3, 2, 3, 3], &mut r);
    let params = vec![("x".to_string(), x.clone()), ("k".to_string(), k.clone())];
    let report = check_gradients(
        &params,
        |tape| {
            let y = tape.conv2d(&x, &k, 2, 1)?;
            Ok(weighted_sum(tape, &y))
        },
        DEFAULT_EPSILON,
    )
    .unwrap();
    assert!(report.within(1e-4), "max rel err {}", report.max_rel_err);
}

#[test]
fn maxpool2d_forward_and_gradient() {
    let tape = Tape::<f64>::new();
    let x = Tensor::param(
        vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0],
        &[1, 1, 4, 4],
    )
    .unwrap();
    let y = tape.maxpool2d(&x, 2, 2).unwrap();
    assert_eq!(y.to_vec(), vec![6.0, 8.0, 14.0, 16.0]);
    let s = tape.sum_all(&y);
    tape.backward(&s).unwrap();
    let g = x.grad().unwrap();
    let expected: Vec<f64> = (0..16)
        .map(|i| if [5, 7, 13, 15].contains(&i) { 1.0 } else { 0.0 })
        .collect();
    assert_eq!(g, expected);
}

#[test]
fn backward_of_sum_is_all_ones() {
    let tape = Tape::<f64>::new();
    let x = Tensor::param(vec![1.0, -2.0, 3.0, 0.5, 0.0, 9.0], &[2, 3]).unwrap();
    let s = tape.sum_all(&x);
    tape.backward(&s).unwrap();
    assert_eq!(x.grad().unwrap(), vec![1.0; 6]);
}

#[test]
fn backward_of_scalar_product() {
    let tape = Tape::<f64>::new();
    let x = Tensor::param(vec![3.0], &[1]).unwrap();
    let y = Tensor::param(vec![4.0], &[1]).unwrap();
    let p = tape.mul(&x, &y).unwrap();
    tape.backward(&p).unwrap();
    assert_eq!(x.grad().unwrap(), vec![4.0]);
    assert_eq!(y.grad().unwrap(), vec![3.0]);
}

#[test]
fn backward_rejects_non_scalar_loss() {
    let tape = Tape::<f64>::new();
    let x = Tensor::param(vec![1.0, 2.0], &[2]).unwrap();
    let y = tape.neg(&x);
    assert!(matches!(
        tape.backward(&y),
        Err(TensorError::NonScalarLoss { .. })
    ));
}

#[test]
fn backward_rejects_reused_tape() {
    let tape = Tape::<f64>::new();
    let x = Tensor::param(vec![1.0], &[1]).unwrap();
    let y = tape.neg(&x);
    tape.backward(&y).unwrap();
    assert!(matches!(tape.backward(&y), Err(TensorError::TapeConsumed)));
}

#[test]
fn grads_accumulate_across_tapes() {
    let x = Tensor::param(vec![2.0], &[1]).unwrap();
    for _ in 0..2 {
        let tape = Tape::new();
        let y = tape.mul(&x, &x).unwrap();
        tape.backward(&y).unwrap();
    }
    // d(x²)/dx = 4 per pass, accumulated twice
    assert_eq!(x.grad().unwrap(), vec![8.0]);
    x.zero_grad();
    assert!(x.grad().is_none());
}

#[test]
fn no_grad_for_constants() {
    let tape = Tape::<f64>::new();
    let x = Tensor::param(vec![1.0, 2.0], &[2]).unwrap();
    let c = Tensor::from_vec(vec![3.0, 4.0], &[2]).unwrap();
    let y = tape.mul(&x, &c).unwrap();
    let s = tape.sum_all(&y);
    tape.backward(&s).unwrap();
    assert_eq!(x.grad().unwrap(), vec![3.0, 4.0]);
    assert!(c.grad().is_none());
}

#[test]
fn shape_surgery_gradients() {
    let mut r = rng(18);
    let x = rand_param(&[3, 4], &mut r);
    let y = rand_param(&[3, 2], &mut r);
    let params = vec![("x".to_string(), x.clone()), ("y".to_string(), y.clone())];
    let report = check_gradients(
        &params,
        |tape| {
            let cat = tape.concat(&[&x, &y], 1)?;
            let nar = tape.narrow(&cat, 1, 1, 4)?;
            let tr = tape.transpose2d(&nar)?;
            let rs = tape.reshape(&tr, &[2, 6])?;
            Ok(weighted_sum(tape, &rs))
        },
        DEFAULT_EPSILON,
    )
    .unwrap();
    assert!(report.within(1e-4), "max rel err {}", report.max_rel_err);
}

#[test]
fn concat_narrow_roundtrip() {
    let tape = Tape::<f64>::new();
    let a = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0], &[2, 2]).unwrap();
    let b = Tensor::from_vec(vec![5.0, 6.0], &[2, 1]).unwrap();
    let cat = tape.concat(&[&a, &b], 1).unwrap();
    assert_eq!(cat.to_vec(), vec![1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
    let back = tape.narrow(&cat, 1, 0, 2).unwrap();
    assert_eq!(back.to_vec(), a.to_vec());
}

#[test]
fn cross_entropy_uniform_logits() {
    let tape = Tape::<f64>::new();
    let logits = Tensor::zeros(&[2, 3]);
    let loss = tape.cross_entropy(&logits, &[0, 2]).unwrap();
    assert!((loss.item() - 3.0f64.ln()).abs() < 1e-12);
}

#[test]
fn cross_entropy_gradient_matches_finite_differences() {
    let mut r = rng(19);
    let logits = rand_param(&[3, 4], &mut r);
    let params = vec![("logits".to_string(), logits.clone())];
    let report = check_gradients(
        &params,
        |tape| tape.cross_entropy(&logits, &[1, 3, 0]),
        DEFAULT_EPSILON,
    )
    .unwrap();
    assert!(report.within(1e-4), "max rel err {}", report.max_rel_err);
}

#[test]
fn dropout_zero_rate_is_identity_and_mask_is_seeded() {
    let x = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0], &[4]).unwrap();
    let tape = Tape::<f64>::new();
    let y = tape.dropout(&x, 0.0, &mut rng(1)).unwrap();
    assert_eq!(y.to_vec(), x.to_vec());
    let a = tape.dropout(&x, 0.5, &mut rng(2)).unwrap();
    let b = tape.dropout(&x, 0.5, &mut rng(2)).unwrap();
    assert_eq!(a.to_vec(), b.to_vec());
}

#[test]
fn backward_is_deterministic() {
    let run = || {
        let mut r = rng(21);
        let x = rand_param(&[4, 4], &mut r);
        let w = rand_param(&[4, 4], &mut r);
        let tape = Tape::new();
        let y = tape.matmul(&x, &w).unwrap();
        let z = tape.tanh(&y);
        let s = tape.sum_all(&z);
        tape.backward(&s).unwrap();
        (x.grad().unwrap(), w.grad().unwrap())
    };
    let (g1, g2) = run();
    let (h1, h2) = run();
    assert_eq!(g1, h1);
    assert_eq!(g2, h2);
}

#[test]
fn from_vec_rejects_bad_length() {
    assert!(Tensor::from_vec(vec![1.0f64, 2.0, 3.0], &[2, 2]).is_err());
}
