//! Small worked networks with known equilibria.

use crate::network::Network;
use crate::rational::{int, Rational};

fn spg(cost: i64, demand: i64, slope: i64, arcs: &[(&str, &str)]) -> Network {
    Network::spg("s", int(cost), "t", int(demand), int(slope), arcs)
        .expect("catalog networks are valid")
}

/// s -> v -> t with a_s = 1, a_t = 9, b_t = 1.
pub fn line() -> Network {
    spg(1, 9, 1, &[("s", "v"), ("v", "t")])
}

/// Two disjoint two-arc paths, a_s = 1, a_t = 7, b_t = 1.
pub fn diamond() -> Network {
    spg(1, 7, 1, &[("s", "u"), ("s", "v"), ("u", "t"), ("v", "t")])
}

pub fn single_arc(cost: i64, demand: i64, slope: i64) -> Network {
    spg(cost, demand, slope, &[("s", "t")])
}

/// Nested merges, used for the merging-child sets (a_s = 1, a_t = 2, b_t = 1).
pub fn merging() -> Network {
    spg(
        1,
        2,
        1,
        &[
            ("s", "a"),
            ("s", "e"),
            ("a", "b"),
            ("a", "c"),
            ("a", "d"),
            ("c", "g"),
            ("d", "f"),
            ("f", "g"),
            ("b", "h"),
            ("e", "h"),
            ("g", "h"),
            ("h", "i"),
            ("h", "j"),
            ("i", "t"),
            ("j", "t"),
        ],
    )
}

const TWO_LEVEL_ARCS: [(&str, &str); 9] = [
    ("s", "j1"),
    ("s", "j2"),
    ("j1", "k"),
    ("j2", "v1"),
    ("j2", "v2"),
    ("v1", "l"),
    ("v2", "l"),
    ("k", "t"),
    ("l", "t"),
];

/// Two levels of single-seller splits: a_s = 1, a_t = 2, b_t = 1.
pub fn two_level() -> Network {
    spg(1, 2, 1, &TWO_LEVEL_ARCS)
}

/// The general single-seller case, a_s = 1, a_t = 2, b_t = 1.
pub fn three_buyers() -> Network {
    spg(
        1,
        2,
        1,
        &[
            ("s", "j1"),
            ("s", "j2"),
            ("s", "j3"),
            ("j1", "k"),
            ("j2", "l"),
            ("j3", "l"),
            ("k", "t"),
            ("l", "t"),
        ],
    )
}

/// s -> v -> t plus the shortcut s -> t, a_s = 1, a_t = 3, b_t = 1.
pub fn shortcut_triangle() -> Network {
    spg(1, 3, 1, &[("s", "v"), ("v", "t"), ("s", "t")])
}

/// Two nested shortcuts: a -> c skips a -> b -> c, and s -> c skips both.
pub fn nested_shortcuts() -> Network {
    spg(
        1,
        9,
        1,
        &[
            ("s", "a"),
            ("a", "b"),
            ("b", "c"),
            ("a", "c"),
            ("s", "c"),
            ("c", "t"),
        ],
    )
}

/// The Wheatstone bridge, the smallest DAG that is not series-parallel.
pub fn bridge() -> Network {
    spg(
        1,
        9,
        1,
        &[("s", "a"), ("s", "b"), ("a", "b"), ("a", "t"), ("b", "t")],
    )
}

/// A shortcut-free DAG that is not series-parallel, a_s = 1, a_t = 11.
pub fn crossed_dag() -> Network {
    spg(
        1,
        11,
        1,
        &[
            ("s", "a"),
            ("s", "b"),
            ("a", "c"),
            ("b", "c"),
            ("b", "d"),
            ("c", "t"),
            ("d", "t"),
        ],
    )
}

/// Two sources of cost 1 selling to c, which serves p_t = 2 - X.
pub fn two_sources() -> Network {
    Network::build(
        &[("s1", int(1)), ("s2", int(1))],
        &[("t", int(2), int(1))],
        &[("s1", "c"), ("s2", "c"), ("c", "t")],
    )
    .expect("catalog networks are valid")
}

/// s -> v -> {t1, t2} with separate markets.
pub fn two_market(cost: Rational, m1: (Rational, Rational), m2: (Rational, Rational)) -> Network {
    Network::build(
        &[("s", cost)],
        &[("t1", m1.0, m1.1), ("t2", m2.0, m2.1)],
        &[("s", "v"), ("v", "t1"), ("v", "t2")],
    )
    .expect("catalog networks are valid")
}

/// [`two_level`] with its sink deleted: markets at k and l, both p = 2 - X.
pub fn two_level_markets() -> Network {
    let arcs: Vec<(&str, &str)> = TWO_LEVEL_ARCS
        .iter()
        .copied()
        .filter(|&(_, b)| b != "t")
        .collect();
    Network::build(
        &[("s", int(1))],
        &[("k", int(2), int(1)), ("l", int(2), int(1))],
        &arcs,
    )
    .expect("catalog networks are valid")
}
