use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sentcap::autodiff::{Tape, Var};
use sentcap::error::TensorError;
use sentcap::tensor::Tensor;

const EPS: f64 = 1e-5;
const REL: f64 = 1e-6;
/// Rounding noise of a central difference at this step size.
const ABS: f64 = 1e-10;

fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(lo..hi, rows * cols).prop_map(move |d| Tensor::matrix(rows, cols, d).unwrap())
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..4, 1usize..5)
}

/// Reduces `y` to a scalar with fixed pseudo-random weights, so every output
/// coordinate contributes a distinct amount.
fn weighted_sum(tape: &mut Tape, y: Var) -> Result<Var, TensorError> {
    let shape = tape.shape(y).to_vec();
    let n: usize = shape.iter().product();
    let w = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 / 5.5 - 0.9).collect();
    let w = tape.constant(Tensor::new(shape, w)?)?;
    let p = tape.mul(y, w)?;
    tape.sum(p)
}

/// Tape gradients of `weighted_sum(f(inputs))` against central differences,
/// coordinate by coordinate: `|a - n| <= REL * max(|a|, |n|) + ABS`.
fn check<F>(inputs: &[Tensor], mut f: F) -> Result<(), TestCaseError>
where
    F: FnMut(&mut Tape, &[Var]) -> Result<Var, TensorError>,
{
    let mut eval = |values: &[Tensor]| -> (Tape, Vec<Var>, Var) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.leaf(t.clone()).unwrap()).collect();
        let y = f(&mut tape, &vars).unwrap();
        let out = weighted_sum(&mut tape, y).unwrap();
        (tape, vars, out)
    };
    let (mut tape, vars, out) = eval(inputs);
    let grads = tape.backward(out).unwrap();
    let mut work = inputs.to_vec();
    for (i, v) in vars.iter().enumerate() {
        let analytic = grads.get(*v);
        for c in 0..analytic.numel() {
            let orig = work[i].data()[c];
            work[i].data_mut()[c] = orig + EPS;
            let (t, _, o) = eval(&work);
            let plus = t.value(o).data()[0];
            work[i].data_mut()[c] = orig - EPS;
            let (t, _, o) = eval(&work);
            let minus = t.value(o).data()[0];
            work[i].data_mut()[c] = orig;
            let (a, n) = (analytic.data()[c], (plus - minus) / (2.0 * EPS));
            prop_assert!(
                (a - n).abs() <= REL * a.abs().max(n.abs()) + ABS,
                "input {i}[{c}]: tape {a}, finite difference {n}"
            );
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn matmul(a in matrix(2, 3, -2.0, 2.0), b in matrix(3, 4, -2.0, 2.0)) {
        check(&[a, b], |t, v| t.matmul(v[0], v[1]))?;
    }

    #[test]
    fn elementwise_binary((r, c) in dims(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            use rand::Rng;
            Tensor::matrix(r, c, (0..r * c).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
        };
        let (a, b) = (draw(), draw());
        check(&[a.clone(), b.clone()], |t, v| t.add(v[0], v[1]))?;
        check(&[a.clone(), b.clone()], |t, v| t.sub(v[0], v[1]))?;
        check(&[a, b], |t, v| t.mul(v[0], v[1]))?;
    }

    #[test]
    fn add_row(a in matrix(3, 4, -2.0, 2.0), row in matrix(1, 4, -2.0, 2.0)) {
        check(&[a, row], |t, v| t.add_row(v[0], v[1]))?;
    }

    #[test]
    fn unary(a in matrix(2, 3, -3.0, 3.0), k in -3.0f64..3.0) {
        check(std::slice::from_ref(&a), |t, v| t.sigmoid(v[0]))?;
        check(std::slice::from_ref(&a), |t, v| t.tanh(v[0]))?;
        check(std::slice::from_ref(&a), |t, v| t.scale(v[0], k))?;
        check(std::slice::from_ref(&a), |t, v| t.offset(v[0], k))?;
        check(&[a], |t, v| t.transpose(v[0]))?;
    }

    #[test]
    fn log(a in matrix(2, 3, 0.2, 4.0)) {
        check(&[a], |t, v| t.log(v[0]))?;
    }

    #[test]
    fn softmaxes(a in matrix(3, 4, -4.0, 4.0), axis in 0usize..2) {
        check(std::slice::from_ref(&a), |t, v| t.softmax(v[0], axis))?;
        check(&[a], |t, v| t.log_softmax(v[0], axis))?;
    }

    #[test]
    fn softmax_is_a_distribution_at_large_magnitude(a in matrix(3, 5, -1e3, 1e3)) {
        let mut tape = Tape::new();
        let v = tape.constant(a).unwrap();
        let p = tape.softmax(v, 1).unwrap();
        let out = tape.value(p);
        for r in 0..3 {
            let row = out.row_slice(r);
            prop_assert!(row.iter().all(|&x| x >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn reductions(a in matrix(3, 4, -2.0, 2.0), axis in 0usize..2) {
        check(std::slice::from_ref(&a), |t, v| t.sum(v[0]))?;
        check(std::slice::from_ref(&a), |t, v| t.sum_axis(v[0], axis))?;
        check(&[a], |t, v| t.mean_axis(v[0], axis))?;
    }

    #[test]
    fn concat(a in matrix(2, 3, -2.0, 2.0), b in matrix(2, 3, -2.0, 2.0), axis in 0usize..2) {
        check(&[a, b], |t, v| t.concat(&[v[0], v[1], v[0]], axis))?;
    }

    #[test]
    fn lookups(table in matrix(5, 3, -2.0, 2.0), rows in prop::collection::vec(0usize..5, 1..4), flat in 0usize..15) {
        check(std::slice::from_ref(&table), |t, v| {
            let picked = rows.iter().map(|&r| t.embedding_lookup(v[0], r)).collect::<Result<Vec<_>, _>>()?;
            t.concat(&picked, 0)
        })?;
        check(&[table], |t, v| t.pick(v[0], flat))?;
    }

    #[test]
    fn dropout_with_a_fixed_mask(a in matrix(3, 4, -2.0, 2.0), seed in any::<u64>(), rate in 0.1f64..0.9) {
        check(&[a], |t, v| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            t.dropout(v[0], rate, Some(&mut rng))
        })?;
    }

    #[test]
    fn composite_attention_shape(f in matrix(4, 3, -1.0, 1.0), w in matrix(3, 1, -1.0, 1.0)) {
        check(&[f, w], |t, v| {
            let s = t.matmul(v[0], v[1])?;
            let s = t.tanh(s)?;
            let s = t.transpose(s)?;
            let a = t.softmax(s, 1)?;
            t.matmul(a, v[0])
        })?;
    }

    #[test]
    fn matmul_gradient_matches_closed_form(a in matrix(2, 3, -2.0, 2.0), b in matrix(3, 2, -2.0, 2.0)) {
        let mut tape = Tape::new();
        let av = tape.leaf(a.clone()).unwrap();
        let bv = tape.leaf(b.clone()).unwrap();
        let y = tape.matmul(av, bv).unwrap();
        let s = tape.sum(y).unwrap();
        let g = tape.backward(s).unwrap();
        // d sum(AB) / dA[i][k] = sum_j B[k][j]; d / dB[k][j] = sum_i A[i][k].
        let ga = g.get(av);
        let gb = g.get(bv);
        for i in 0..2 {
            for k in 0..3 {
                let want: f64 = b.row_slice(k).iter().sum();
                prop_assert!((ga.data()[i * 3 + k] - want).abs() < 1e-12);
            }
        }
        for k in 0..3 {
            for j in 0..2 {
                let want = a.data()[k] + a.data()[3 + k];
                prop_assert!((gb.data()[k * 2 + j] - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn shared_inputs_accumulate() {
    let x = Tensor::row(vec![0.3, -1.2, 2.0]);
    let mut tape = Tape::new();
    let v = tape.leaf(x.clone()).unwrap();
    let sq = tape.mul(v, v).unwrap();
    let y = tape.add(sq, v).unwrap();
    let s = tape.sum(y).unwrap();
    let g = tape.backward(s).unwrap().get(v);
    for (gi, xi) in g.data().iter().zip(x.data()) {
        assert!((gi - (2.0 * xi + 1.0)).abs() < 1e-12);
    }
}
