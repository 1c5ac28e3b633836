//! Finite-difference checks over every differentiable op and the training losses.

use crate::ensemble::{theta_graph, EnsembleMemory, ThetaPenalty};
use crate::error::Result;
use crate::numerics::{grad_check, Graph, Rng, Tensor, Var, DEFAULT_LEAKY_SLOPE};
use crate::training::{discriminator_loss_graph, generator_loss_graph, GeneratorLoss};

pub const GRAD_CHECK_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
enum Domain {
    Normal,
    /// Uniform on [0.5, 2], for log and reciprocal.
    Positive,
    /// Uniform on [−0.5, 0.5], away from clamp bounds.
    Interior,
}

type Build = Box<dyn Fn(&mut Graph, &[Var]) -> Result<Var>>;

struct Case {
    name: &'static str,
    inputs: Vec<(Vec<usize>, Domain)>,
    build: Build,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckOutcome {
    pub name: &'static str,
    pub points: usize,
    pub max_error: f64,
}

fn draw(shape: &[usize], domain: Domain, rng: &mut Rng) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| match domain {
            Domain::Normal => rng.normal(),
            Domain::Positive => rng.uniform(0.5, 2.0),
            Domain::Interior => rng.uniform(-0.5, 0.5),
        })
        .collect();
    Tensor::new(shape, data)
}

/// Contracts a non-scalar output with fixed random weights so every coordinate matters.
fn probe(g: &mut Graph, out: Var, weights: &Tensor) -> Result<Var> {
    let w = g.constant(weights.clone())?;
    let p = g.mul(out, w)?;
    g.sum(p)
}

fn unary(name: &'static str, domain: Domain, rng: &mut Rng, op: fn(&mut Graph, Var) -> Result<Var>) -> Result<Case> {
    let w = draw(&[3, 4], Domain::Normal, rng)?;
    Ok(Case {
        name,
        inputs: vec![(vec![3, 4], domain)],
        build: Box::new(move |g, v| {
            let out = op(g, v[0])?;
            probe(g, out, &w)
        }),
    })
}

fn binary(name: &'static str, rhs: Vec<usize>, rng: &mut Rng, op: fn(&mut Graph, Var, Var) -> Result<Var>) -> Result<Case> {
    let w = draw(&[3, 4], Domain::Normal, rng)?;
    Ok(Case {
        name,
        inputs: vec![(vec![3, 4], Domain::Normal), (rhs, Domain::Normal)],
        build: Box::new(move |g, v| {
            let out = op(g, v[0], v[1])?;
            probe(g, out, &w)
        }),
    })
}

fn cases(rng: &mut Rng) -> Result<Vec<Case>> {
    let mut cases = vec![
        binary("add", vec![3, 4], rng, |g, a, b| g.add(a, b))?,
        binary("add_row_broadcast", vec![1, 4], rng, |g, a, b| g.add(a, b))?,
        binary("sub", vec![3, 4], rng, |g, a, b| g.sub(a, b))?,
        binary("mul", vec![3, 4], rng, |g, a, b| g.mul(a, b))?,
        unary("neg", Domain::Normal, rng, |g, a| g.neg(a))?,
        unary("exp", Domain::Normal, rng, |g, a| g.exp(a))?,
        unary("log", Domain::Positive, rng, |g, a| g.log(a))?,
        unary("sigmoid", Domain::Normal, rng, |g, a| g.sigmoid(a))?,
        unary("tanh", Domain::Normal, rng, |g, a| g.tanh(a))?,
        unary("leaky_relu", Domain::Normal, rng, |g, a| g.leaky_relu(a, DEFAULT_LEAKY_SLOPE))?,
        unary("scale", Domain::Normal, rng, |g, a| g.scale(a, -1.7))?,
        unary("add_scalar", Domain::Normal, rng, |g, a| g.add_scalar(a, 0.3))?,
        unary("recip", Domain::Positive, rng, |g, a| g.recip(a))?,
        unary("clamp", Domain::Interior, rng, |g, a| g.clamp(a, -1.0, 1.0))?,
        Case {
            name: "sum",
            inputs: vec![(vec![3, 4], Domain::Normal)],
            build: Box::new(|g, v| {
                let sq = g.mul(v[0], v[0])?;
                g.sum(sq)
            }),
        },
        Case {
            name: "mean",
            inputs: vec![(vec![3, 4], Domain::Normal)],
            build: Box::new(|g, v| {
                let sq = g.mul(v[0], v[0])?;
                g.mean(sq)
            }),
        },
    ];

    let w = draw(&[3, 2], Domain::Normal, rng)?;
    cases.push(Case {
        name: "matmul",
        inputs: vec![(vec![3, 4], Domain::Normal), (vec![4, 2], Domain::Normal)],
        build: Box::new(move |g, v| {
            let out = g.matmul(v[0], v[1])?;
            probe(g, out, &w)
        }),
    });

    let w = draw(&[3, 5], Domain::Normal, rng)?;
    cases.push(Case {
        name: "concat_cols",
        inputs: vec![(vec![3, 2], Domain::Normal), (vec![3, 3], Domain::Normal)],
        build: Box::new(move |g, v| {
            let out = g.concat_cols(v[0], v[1])?;
            probe(g, out, &w)
        }),
    });

    let w = draw(&[3, 4], Domain::Normal, rng)?;
    cases.push(Case {
        name: "pairwise_distance",
        inputs: vec![(vec![3, 2], Domain::Normal), (vec![4, 2], Domain::Normal)],
        build: Box::new(move |g, v| {
            let out = g.pairwise_distance(v[0], v[1], 1e-6)?;
            probe(g, out, &w)
        }),
    });

    cases.push(Case {
        name: "discriminator_loss",
        inputs: vec![(vec![8, 1], Domain::Normal), (vec![8, 1], Domain::Normal)],
        build: Box::new(|g, v| {
            let real = g.sigmoid(v[0])?;
            let fake = g.sigmoid(v[1])?;
            discriminator_loss_graph(g, real, fake)
        }),
    });
    for (name, mode) in [
        ("generator_loss_non_saturating", GeneratorLoss::NonSaturating),
        ("generator_loss_literal", GeneratorLoss::LiteralSaturating),
    ] {
        cases.push(Case {
            name,
            inputs: vec![(vec![8, 1], Domain::Normal)],
            build: Box::new(move |g, v| {
                let fake = g.sigmoid(v[0])?;
                generator_loss_graph(g, fake, mode)
            }),
        });
    }

    let mut memory = EnsembleMemory::new();
    memory.push(draw(&[6, 2], Domain::Normal, rng)?)?;
    memory.push(draw(&[6, 2], Domain::Normal, rng)?)?;
    let penalty = ThetaPenalty::new(&memory, 0.1, 1e-6)?;
    cases.push(Case {
        name: "regularized_generator_loss",
        inputs: vec![(vec![8, 1], Domain::Normal), (vec![8, 2], Domain::Normal)],
        build: Box::new(move |g, v| {
            let fake = g.sigmoid(v[0])?;
            let base = generator_loss_graph(g, fake, GeneratorLoss::NonSaturating)?;
            let theta = theta_graph(g, v[1], &penalty)?;
            g.add(base, theta)
        }),
    });
    Ok(cases)
}

/// Runs every case at `points` random points and reports the worst relative error per case.
pub fn gradient_suite(points: usize, seed: u64) -> Result<Vec<GradCheckOutcome>> {
    let mut rng = Rng::new(seed);
    let cases = cases(&mut rng)?;
    let mut out = Vec::with_capacity(cases.len());
    for case in cases {
        let mut worst: f64 = 0.0;
        for _ in 0..points {
            let point = case
                .inputs
                .iter()
                .map(|(shape, domain)| draw(shape, *domain, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            worst = worst.max(grad_check(&case.build, &point, GRAD_CHECK_EPS)?);
        }
        out.push(GradCheckOutcome {
            name: case.name,
            points,
            max_error: worst,
        });
    }
    Ok(out)
}
