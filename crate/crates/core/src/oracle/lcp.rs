use malachite::num::basic::traits::{Two, Zero};

use super::linalg::solve_linear;
use crate::error::{Error, Result};
use crate::flow::Solution;
use crate::network::{Edge, NodeId};
use crate::rational::{format_rational, Rational, Signs};

/// How a seller with several buyers splits a fixed inflow `C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmAllocationProblem {
    pub seller: NodeId,
    pub buyers: Vec<NodeId>,
    pub buyer_slope: Vec<Rational>,
    /// C_T(i,j) for each buyer, as indices into `hubs`.
    pub internal: Vec<Vec<usize>>,
    pub hubs: Vec<NodeId>,
    pub hub_slope: Vec<Rational>,
    /// Total inflow C to distribute.
    pub capacity: Rational,
    /// `Σ_{C_P(i)} b_l (X_l + X_i) + p_i`.
    pub constant: Rational,
    /// Demand intercept a_t.
    pub demand: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    /// x_ij, aligned with the problem's buyers.
    pub flows: Vec<Rational>,
    /// The common level D of `2 b_j x_ij + 2 Σ_{C_T(i,j)} b_l X_l` over active buyers.
    pub level: Rational,
    pub active: Vec<bool>,
}

impl SmAllocationProblem {
    /// The problem seller `i` faces at the equilibrium of `sol`.
    pub fn at(sol: &Solution, seller: NodeId) -> Result<SmAllocationProblem> {
        let net = &sol.network;
        let ps = &sol.schedule;
        let eq = &sol.equilibrium;
        let buyers = net.buyers(seller).to_vec();
        let mut hubs: Vec<NodeId> = Vec::new();
        let mut internal = Vec::with_capacity(buyers.len());
        for &j in &buyers {
            let mut idx = Vec::new();
            for h in sol.merge.internal(Edge::new(seller, j)) {
                let k = match hubs.iter().position(|&x| x == h) {
                    Some(k) => k,
                    None => {
                        hubs.push(h);
                        hubs.len() - 1
                    }
                };
                idx.push(k);
            }
            internal.push(idx);
        }
        let xi = &eq.throughput[seller.0];
        let mut constant = eq.price[seller.0].clone();
        for &l in &ps.parent_merging[seller.0] {
            constant += ps.b(l) * (&eq.throughput[l.0] + xi);
        }
        Ok(SmAllocationProblem {
            seller,
            buyer_slope: buyers.iter().map(|&j| ps.b(j).clone()).collect(),
            buyers,
            hub_slope: hubs.iter().map(|&h| ps.b(h).clone()).collect(),
            hubs,
            internal,
            capacity: xi.clone(),
            constant,
            demand: ps.demand.clone(),
        })
    }

    /// `a_t - const_i - D`; zero when the seller's price is consistent with the split.
    pub fn residual(&self, alloc: &Allocation) -> Rational {
        &self.demand - &self.constant - &alloc.level
    }

    /// `2 b_j x_j + 2 Σ_{C_T(i,j)} b_l X_l` for every buyer.
    fn marginal(&self, x: &[Rational]) -> Vec<Rational> {
        let hub_flow: Vec<Rational> = (0..self.hubs.len())
            .map(|h| {
                self.internal
                    .iter()
                    .zip(x)
                    .filter(|(t, _)| t.contains(&h))
                    .map(|(_, v)| v)
                    .sum()
            })
            .collect();
        (0..self.buyers.len())
            .map(|j| {
                let mut g = &self.buyer_slope[j] * &x[j];
                for &h in &self.internal[j] {
                    g += &self.hub_slope[h] * &hub_flow[h];
                }
                Rational::TWO * g
            })
            .collect()
    }
}

/// Enumerates active buyer sets, solves the stationarity system on each and keeps
/// the allocation meeting every complementarity condition. Distinct accepted
/// allocations are an invariant violation.
pub fn lcp_solve(prob: &SmAllocationProblem) -> Result<Allocation> {
    let m = prob.buyers.len();
    if m == 0 || m > 20 {
        return Err(Error::BadParameter(format!(
            "cannot enumerate active sets for {m} buyers"
        )));
    }
    if prob.capacity.is_negative() {
        return Err(Error::BadParameter("negative inflow".into()));
    }
    let mut accepted: Option<Allocation> = None;
    for mask in 1u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        let n = active.len();
        // Unknowns: x_j for active j, then D.
        let mut a = vec![vec![Rational::ZERO; n + 1]; n + 1];
        let mut b = vec![Rational::ZERO; n + 1];
        for (r, &j) in active.iter().enumerate() {
            a[r][r] += Rational::TWO * &prob.buyer_slope[j];
            for &h in &prob.internal[j] {
                for (c, &k) in active.iter().enumerate() {
                    if prob.internal[k].contains(&h) {
                        a[r][c] += Rational::TWO * &prob.hub_slope[h];
                    }
                }
            }
            a[r][n] = Rational::from(-1);
        }
        for c in 0..n {
            a[n][c] = Rational::from(1);
        }
        b[n] = prob.capacity.clone();
        let Some(sol) = solve_linear(a, b) else {
            continue;
        };
        let mut flows = vec![Rational::ZERO; m];
        for (r, &j) in active.iter().enumerate() {
            flows[j] = sol[r].clone();
        }
        if flows.iter().any(|x| x.is_negative()) {
            continue;
        }
        let level = sol[n].clone();
        let g = prob.marginal(&flows);
        let complementary = (0..m).all(|j| mask & (1 << j) != 0 || g[j] >= level);
        if !complementary {
            continue;
        }
        let candidate = Allocation {
            active: (0..m).map(|j| mask & (1 << j) != 0).collect(),
            flows,
            level,
        };
        match &accepted {
            None => accepted = Some(candidate),
            Some(prev) if prev.flows == candidate.flows => {}
            Some(prev) => {
                return Err(Error::Invariant(format!(
                    "two allocations satisfy the complementarity conditions: [{}] and [{}]",
                    join(&prev.flows),
                    join(&candidate.flows)
                )))
            }
        }
    }
    accepted.ok_or_else(|| Error::Invariant("no active set satisfies the conditions".into()))
}

fn join(xs: &[Rational]) -> String {
    xs.iter()
        .map(format_rational)
        .collect::<Vec<_>>()
        .join(", ")
}
