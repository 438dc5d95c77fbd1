//! Workloads shared by the benchmarks.

use spg_core::oracle::{generate_spg, RandomSpgSpec};
use spg_core::{catalog, Network};

pub const SIZES: [usize; 3] = [100, 1_000, 10_000];

pub fn random_spg(nodes: usize) -> Network {
    generate_spg(&RandomSpgSpec::new(nodes as u64, nodes))
        .expect("budget is at least 3")
        .0
}

/// The worked example networks, by name.
pub fn examples() -> Vec<(&'static str, Network)> {
    vec![
        ("line", catalog::line()),
        ("diamond", catalog::diamond()),
        ("c1", catalog::merging()),
        ("c2", catalog::two_level()),
        ("c3", catalog::three_buyers()),
        ("shortcut", catalog::shortcut_triangle()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_solve() {
        for (name, net) in examples() {
            assert!(spg_core::solve(&net).is_ok(), "{name}");
        }
        let net = random_spg(SIZES[0]);
        assert_eq!(net.len(), SIZES[0]);
        assert!(spg_core::solve(&net).is_ok());
    }
}
