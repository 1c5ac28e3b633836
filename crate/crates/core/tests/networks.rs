use ganfair::models::{concat_condition, Activation, MlpNetwork};
use ganfair::numerics::{grad_check, Graph, Rng, Tensor, Var};
use ganfair::training::{discriminator_loss_graph, generator_loss_graph, GeneratorLoss};

fn batch(rows: usize, cols: usize, rng: &mut Rng) -> Tensor {
    rng.standard_normal(&[rows, cols]).unwrap()
}

#[test]
fn two_layer_mlp_loss_passes_grad_check() {
    let mut rng = Rng::new(7);
    for _ in 0..5 {
        let net = MlpNetwork::new(&[3, 5, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let x = batch(4, 3, &mut rng);
        let f = |g: &mut Graph, p: &[Var]| {
            let input = g.constant(x.clone())?;
            let h = g.matmul(input, p[0])?;
            let h = g.add(h, p[1])?;
            let h = g.tanh(h)?;
            let o = g.matmul(h, p[2])?;
            let o = g.add(o, p[3])?;
            let sq = g.mul(o, o)?;
            g.mean(sq)
        };
        let err = grad_check(f, net.params(), 1e-6).unwrap();
        assert!(err < 1e-4, "{err}");
    }
}

/// Both adversarial losses differentiated through real generator and discriminator parameters.
#[test]
fn adversarial_losses_pass_grad_check_through_networks() {
    let mut rng = Rng::new(8);
    let gen = MlpNetwork::new(&[2, 6, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
    let disc = MlpNetwork::new(&[2, 6, 1], Activation::leaky_relu(), Activation::Sigmoid, &mut rng).unwrap();
    let z = batch(6, 2, &mut rng);
    let real = batch(6, 2, &mut rng);
    let n_gen = gen.params().len();
    let mut point = gen.params().to_vec();
    point.extend_from_slice(disc.params());

    let forward = |g: &mut Graph, p: &[Var], sizes: &[usize], hidden: Activation, output: Activation, x: Var| -> ganfair::Result<Var> {
        let mut h = x;
        for layer in 0..sizes.len() - 1 {
            let w = g.matmul(h, p[2 * layer])?;
            h = g.add(w, p[2 * layer + 1])?;
            let act = if layer + 2 == sizes.len() { output } else { hidden };
            h = act.apply(g, h)?;
        }
        Ok(h)
    };

    for mode in [GeneratorLoss::NonSaturating, GeneratorLoss::LiteralSaturating] {
        let f = |g: &mut Graph, p: &[Var]| {
            let zv = g.constant(z.clone())?;
            let fake = forward(g, &p[..n_gen], gen.sizes(), Activation::Tanh, Activation::Identity, zv)?;
            let d = forward(g, &p[n_gen..], disc.sizes(), Activation::leaky_relu(), Activation::Sigmoid, fake)?;
            generator_loss_graph(g, d, mode)
        };
        let err = grad_check(f, &point, 1e-6).unwrap();
        assert!(err < 1e-4, "{mode:?}: {err}");
    }

    let f = |g: &mut Graph, p: &[Var]| {
        let zv = g.constant(z.clone())?;
        let rv = g.constant(real.clone())?;
        let fake = forward(g, &p[..n_gen], gen.sizes(), Activation::Tanh, Activation::Identity, zv)?;
        let d_fake = forward(g, &p[n_gen..], disc.sizes(), Activation::leaky_relu(), Activation::Sigmoid, fake)?;
        let d_real = forward(g, &p[n_gen..], disc.sizes(), Activation::leaky_relu(), Activation::Sigmoid, rv)?;
        discriminator_loss_graph(g, d_real, d_fake)
    };
    let err = grad_check(f, &point, 1e-6).unwrap();
    assert!(err < 1e-4, "{err}");
}

#[test]
fn bound_network_matches_plain_forward() {
    let mut rng = Rng::new(9);
    let net = MlpNetwork::new(&[4, 8, 8, 3], Activation::leaky_relu(), Activation::Sigmoid, &mut rng).unwrap();
    let x = batch(5, 4, &mut rng);
    let mut g = Graph::new();
    let bound = net.bind(&mut g, false).unwrap();
    let xv = g.constant(x.clone()).unwrap();
    let out = bound.forward(&mut g, xv).unwrap();
    assert_eq!(g.value(out), &net.forward(&x).unwrap());
    assert!(g.value(out).data().iter().all(|&p| p > 0.0 && p < 1.0));
}

#[test]
fn condition_changes_output_of_random_networks() {
    let mut rng = Rng::new(10);
    for _ in 0..20 {
        let net = MlpNetwork::new(&[2 + 3, 16, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let z = batch(4, 2, &mut rng);
        let a = net.forward(&concat_condition(&z, 0, 3).unwrap()).unwrap();
        let b = net.forward(&concat_condition(&z, 2, 3).unwrap()).unwrap();
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x != y));
    }
}
