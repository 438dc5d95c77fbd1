use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{Edge, Network, NodeId, SpDecomposition, SpKind, SpNode};
use crate::rational::{rat, Rational};

/// Parameters of the random shortcut-free SPG generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpgSpec {
    pub seed: u64,
    /// Total number of nodes, source and sink included.
    pub budget: usize,
    /// Probability of a series composition at each internal tree node.
    pub series_bias: f64,
}

impl RandomSpgSpec {
    pub fn new(seed: u64, budget: usize) -> RandomSpgSpec {
        RandomSpgSpec {
            seed,
            budget,
            series_bias: 0.5,
        }
    }
}

struct Task {
    interior: usize,
    source: usize,
    sink: usize,
    slot: usize,
}

/// Builds a random composition tree with exactly `budget` vertices. Both sides of
/// a parallel composition get at least one interior vertex, so no parallel arc or
/// shortcut can arise.
pub fn generate_spg(spec: &RandomSpgSpec) -> Result<(Network, SpDecomposition)> {
    if spec.budget < 3 {
        return Err(Error::BadParameter(format!(
            "node budget {} exhausted: at least 3 nodes are needed",
            spec.budget
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut shape: Vec<(SpKind, usize, usize)> = vec![(placeholder(), 0, 1)];
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    let mut vertices = 2usize;
    let mut stack = vec![Task {
        interior: spec.budget - 2,
        source: 0,
        sink: 1,
        slot: 0,
    }];
    while let Some(task) = stack.pop() {
        let Task {
            interior: n,
            source,
            sink,
            slot,
        } = task;
        if n == 0 {
            shape[slot] = (leaf(source, sink), source, sink);
            arcs.push((source, sink));
            continue;
        }
        let a = shape.len();
        let b = a + 1;
        shape.push((placeholder(), 0, 0));
        shape.push((placeholder(), 0, 0));
        if n == 1 || rng.random_bool(spec.series_bias) {
            let k = rng.random_range(0..n);
            let middle = vertices;
            vertices += 1;
            shape[slot] = (
                SpKind::Series {
                    first: a,
                    second: b,
                },
                source,
                sink,
            );
            stack.push(Task {
                interior: n - 1 - k,
                source: middle,
                sink,
                slot: b,
            });
            stack.push(Task {
                interior: k,
                source,
                sink: middle,
                slot: a,
            });
        } else {
            let k = rng.random_range(1..n);
            shape[slot] = (SpKind::Parallel { left: a, right: b }, source, sink);
            stack.push(Task {
                interior: n - k,
                source,
                sink,
                slot: b,
            });
            stack.push(Task {
                interior: k,
                source,
                sink,
                slot: a,
            });
        }
    }

    let name = |v: usize| match v {
        0 => "s".to_string(),
        1 => "t".to_string(),
        k => format!("v{}", k - 1),
    };
    let cost = rat(rng.random_range(1..=10), rng.random_range(1..=4));
    let demand = &cost + rat(rng.random_range(1..=20), rng.random_range(1..=4));
    let slope: Rational = rat(rng.random_range(1..=5), rng.random_range(1..=3));
    let net = Network::from_parts(
        (0..vertices).map(name).collect(),
        vec![("s".into(), cost)],
        vec![("t".into(), demand, slope)],
        arcs.iter().map(|&(u, v)| (name(u), name(v))).collect(),
    )?;
    let id = |v: usize| net.id(&name(v)).expect("generated vertex");
    let nodes = shape
        .into_iter()
        .map(|(kind, source, sink)| SpNode {
            kind: match kind {
                SpKind::Leaf(e) => SpKind::Leaf(Edge::new(id(e.seller.0), id(e.buyer.0))),
                other => other,
            },
            source: id(source),
            sink: id(sink),
        })
        .collect();
    let dec = SpDecomposition::from_tree(nodes, 0)?;
    Ok((net, dec))
}

fn placeholder() -> SpKind {
    SpKind::Leaf(Edge::new(NodeId(usize::MAX), NodeId(usize::MAX)))
}

fn leaf(u: usize, v: usize) -> SpKind {
    SpKind::Leaf(Edge::new(NodeId(u), NodeId(v)))
}
