//! Analytic selector gradients versus central finite differences.

use logicforge_autodiff::{fd_gradients, max_rel_err, ParamSet, Tape};
use logicforge_core::seed::stream_rng;
use logicforge_core::{Layering, TruthTable};
use logicforge_das::{LayeredNet, SelectionMode};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_net_and_table(rng: &mut ChaCha8Rng) -> (LayeredNet, TruthTable) {
    let num_pi = rng.gen_range(2..=3);
    let num_po = rng.gen_range(1..=2);
    let depth = rng.gen_range(1..=3);
    let hidden: Vec<usize> = (0..depth).map(|_| rng.gen_range(1..=4)).collect();
    let layering = Layering::from_widths(num_pi, &hidden, num_po);
    let mut net = LayeredNet::new(layering);
    for slot in 0..net.params().len() {
        let dim = net.params().get(slot).dim();
        let fresh = Array2::from_shape_fn(dim, |_| rng.gen_range(-1.5..1.5));
        *net.params_mut().get_mut(slot) = fresh;
    }
    let table = TruthTable::from_fn(num_pi, num_po, |_, _| rng.gen_bool(0.5)).unwrap();
    (net, table)
}

fn loss_with(net: &LayeredNet, params: &ParamSet, labels: &Array2<f64>) -> (f64, Vec<Array2<f64>>) {
    let mut tape = Tape::new();
    let outs = net.forward_on_tape_with(&mut tape, params, SelectionMode::Soft);
    let stacked = tape.concat_rows(&outs);
    let loss = tape.bce_mean(stacked, labels, 1e-7);
    let grads = tape.backward(loss);
    let flat = (0..params.len())
        .map(|s| {
            grads
                .slot(s)
                .cloned()
                .unwrap_or_else(|| Array2::zeros(params.get(s).dim()))
        })
        .collect();
    (tape.scalar(loss), flat)
}

#[test]
fn selector_gradients_match_finite_differences() {
    let mut rng = stream_rng(501, "das-fd");
    for round in 0..10 {
        let (net, table) = random_net_and_table(&mut rng);
        let labels = Array2::from_shape_fn((table.num_outputs(), table.num_rows()), |(o, r)| {
            f64::from(u8::from(table.bit(o, r)))
        });
        let (_, analytic) = loss_with(&net, net.params(), &labels);
        let mut probe = net.params().clone();
        let numeric = fd_gradients(&mut probe, 1e-5, |p| loss_with(&net, p, &labels).0);
        let err = max_rel_err(&analytic, &numeric);
        assert!(err < 1e-4, "round {round}: max rel err {err}");
    }
}

#[test]
fn singleton_selectors_are_stationary() {
    // A wire net's only selector has one candidate; its softmax is constant,
    // so the loss is flat in the logit and the exact gradient is zero.
    let net = LayeredNet::new(Layering::from_widths(1, &[], 1));
    let labels = Array2::from_shape_fn((1, 2), |(_, r)| r as f64);
    let (_, grads) = loss_with(&net, net.params(), &labels);
    for g in &grads {
        assert!(g.iter().all(|&v| v == 0.0), "singleton selector leaked gradient");
    }
}
