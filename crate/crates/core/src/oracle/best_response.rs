use malachite::num::basic::traits::{One, Two, Zero};

use super::linalg::solve_linear;
use crate::error::{Error, Result};
use crate::flow::Solution;
use crate::network::NodeId;
use crate::rational::{Rational, Signs};

/// A take-it-or-leave-it offer: up to `quantity` units at `price`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Offer {
    pub buyer: NodeId,
    pub price: Rational,
    pub quantity: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Strategy {
    pub offers: Vec<Offer>,
}

/// Deviations tried around the current split. The pitch is `X_i / divisions`
/// (or `1 / divisions` when the firm carries no flow).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationGrid {
    pub divisions: u32,
    /// Pitch multiples for single-arc and pairwise moves, both signs.
    pub steps: Vec<i64>,
    /// Try `k / divisions` times the whole split for `k` up to `2 * divisions`.
    pub scaling: bool,
    /// Also evaluate the exact maximizer found by active-set enumeration.
    pub stationary: bool,
}

impl Default for DeviationGrid {
    fn default() -> Self {
        DeviationGrid {
            divisions: 64,
            steps: vec![1, 2, 4, 8, 16, 32, 64],
            scaling: true,
            stationary: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestResponse {
    pub firm: NodeId,
    /// Utility of the candidate strategy (the equilibrium split when none is given).
    pub current: Rational,
    pub best: Rational,
    pub gain: Rational,
    pub best_flows: Vec<Rational>,
    pub tried: usize,
}

impl BestResponse {
    pub fn improves(&self) -> bool {
        self.gain.is_positive()
    }
}

/// The firm's revenue as a function of its own outflows, with every other flow
/// held at equilibrium and each buyer paying its downstream price function:
/// `p(y) = c - M y`.
#[derive(Debug, Clone)]
struct Deviation {
    buyers: Vec<NodeId>,
    intercept: Vec<Rational>,
    slope: Vec<Vec<Rational>>,
    cost: Rational,
    capacity: Option<Rational>,
    base: Vec<Rational>,
}

impl Deviation {
    fn new(sol: &Solution, firm: NodeId) -> Deviation {
        let net = &sol.network;
        let ps = &sol.schedule;
        let eq = &sol.equilibrium;
        let buyers = net.buyers(firm).to_vec();
        let base: Vec<Rational> = buyers
            .iter()
            .map(|&j| {
                eq.flow_on(net, crate::network::Edge::new(firm, j))
                    .cloned()
                    .unwrap_or(Rational::ZERO)
            })
            .collect();
        let reach_set = |k: NodeId| {
            let mut set = ps.parent_merging[k.0].clone();
            set.push(k);
            set
        };
        let reach: Vec<Vec<NodeId>> = buyers.iter().map(|&k| reach_set(k)).collect();
        let m = buyers.len();
        let mut intercept = Vec::with_capacity(m);
        let mut slope = vec![vec![Rational::ZERO; m]; m];
        for (j, r) in reach.iter().enumerate() {
            let mut c = ps.demand.clone();
            for &l in r {
                let mut other = eq.throughput[l.0].clone();
                for (k, rk) in reach.iter().enumerate() {
                    if rk.contains(&l) {
                        other -= &base[k];
                        slope[j][k] += ps.b(l);
                    }
                }
                c -= ps.b(l) * other;
            }
            intercept.push(c);
        }
        let (cost, capacity) = match net.sources().iter().find(|s| s.node == firm) {
            Some(s) => (s.cost.clone(), None),
            None => (
                eq.price[firm.0].clone(),
                Some(eq.throughput[firm.0].clone()),
            ),
        };
        Deviation {
            buyers,
            intercept,
            slope,
            cost,
            capacity,
            base,
        }
    }

    fn prices(&self, y: &[Rational]) -> Vec<Rational> {
        self.intercept
            .iter()
            .zip(&self.slope)
            .map(|(c, row)| c - row.iter().zip(y).map(|(m, v)| m * v).sum::<Rational>())
            .collect()
    }

    fn feasible(&self, y: &[Rational]) -> bool {
        !y.iter().any(|v| v.is_negative())
            && self
                .capacity
                .as_ref()
                .is_none_or(|cap| y.iter().sum::<Rational>() <= *cap)
    }

    fn value(&self, y: &[Rational]) -> Rational {
        let p = self.prices(y);
        p.iter().zip(y).map(|(p, v)| (p - &self.cost) * v).sum()
    }

    /// Quantities the buyers take when offered `(price, cap)` each: every buyer
    /// moves toward the point where its own price function meets the offer.
    fn accepted(&self, offers: &[(Rational, Rational)]) -> Option<Vec<Rational>> {
        let m = self.buyers.len();
        let regimes = 3usize.checked_pow(m as u32)?;
        for code in 0..regimes {
            // 0: takes nothing, 1: interior, 2: takes the whole cap.
            let regime: Vec<usize> = (0..m).map(|j| code / 3usize.pow(j as u32) % 3).collect();
            let interior: Vec<usize> = (0..m).filter(|&j| regime[j] == 1).collect();
            let mut y: Vec<Rational> = (0..m)
                .map(|j| {
                    if regime[j] == 2 {
                        offers[j].1.clone()
                    } else {
                        Rational::ZERO
                    }
                })
                .collect();
            if !interior.is_empty() {
                let n = interior.len();
                let mut a = vec![vec![Rational::ZERO; n]; n];
                let mut b = vec![Rational::ZERO; n];
                for (r, &j) in interior.iter().enumerate() {
                    let mut rhs = &self.intercept[j] - &offers[j].0;
                    for k in 0..m {
                        if regime[k] == 2 {
                            rhs -= &self.slope[j][k] * &y[k];
                        }
                    }
                    b[r] = rhs;
                    for (c, &k) in interior.iter().enumerate() {
                        a[r][c] = self.slope[j][k].clone();
                    }
                }
                let sol = solve_linear(a, b)?;
                for (r, &j) in interior.iter().enumerate() {
                    y[j] = sol[r].clone();
                }
            }
            let p = self.prices(&y);
            let consistent = (0..m).all(|j| match regime[j] {
                0 => p[j] <= offers[j].0,
                1 => !y[j].is_negative() && y[j] <= offers[j].1,
                _ => p[j] >= offers[j].0,
            });
            if consistent {
                return Some(y);
            }
        }
        None
    }

    /// Exact maximizer of the concave utility over the feasible region.
    fn stationary(&self) -> Option<Vec<Rational>> {
        let m = self.buyers.len();
        if m > 16 {
            return None;
        }
        for mask in 0u32..(1 << m) {
            let active: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
            let bound = [false, true];
            for &binding in bound
                .iter()
                .take(if self.capacity.is_some() { 2 } else { 1 })
            {
                let n = active.len();
                let size = n + usize::from(binding);
                let mut y = vec![Rational::ZERO; m];
                let mut mu = Rational::ZERO;
                if size > 0 {
                    let mut a = vec![vec![Rational::ZERO; size]; size];
                    let mut b = vec![Rational::ZERO; size];
                    for (r, &j) in active.iter().enumerate() {
                        for (c, &k) in active.iter().enumerate() {
                            a[r][c] = Rational::TWO * &self.slope[j][k];
                        }
                        if binding {
                            a[r][n] = Rational::ONE;
                        }
                        b[r] = &self.intercept[j] - &self.cost;
                    }
                    if binding {
                        for c in 0..n {
                            a[n][c] = Rational::ONE;
                        }
                        b[n] = self.capacity.clone().unwrap_or(Rational::ZERO);
                    }
                    let Some(sol) = solve_linear(a, b) else {
                        continue;
                    };
                    for (r, &j) in active.iter().enumerate() {
                        y[j] = sol[r].clone();
                    }
                    if binding {
                        mu = sol[n].clone();
                    }
                } else if binding {
                    continue;
                }
                if mu.is_negative() || !self.feasible(&y) {
                    continue;
                }
                let p = self.prices(&y);
                let kkt = (0..m).filter(|j| mask & (1 << j) == 0).all(|j| {
                    let grad = &p[j]
                        - &self.cost
                        - (0..m).map(|k| &self.slope[j][k] * &y[k]).sum::<Rational>();
                    grad <= mu
                });
                if kkt {
                    return Some(y);
                }
            }
        }
        None
    }
}

/// Largest utility gain firm `firm` can find by deviating from `strategy`, or from
/// its equilibrium split when no strategy is given. Every deviation is priced so
/// buyers take exactly the deviating quantities, the downstream responding through
/// its price functions.
pub fn best_response_check(
    sol: &Solution,
    firm: NodeId,
    strategy: Option<&Strategy>,
    grid: &DeviationGrid,
) -> Result<BestResponse> {
    if firm.0 >= sol.network.len() {
        return Err(Error::BadParameter(format!(
            "no node with index {}",
            firm.0
        )));
    }
    let dev = Deviation::new(sol, firm);
    let m = dev.buyers.len();
    let (current, current_flows) = match strategy {
        None => (dev.value(&dev.base), dev.base.clone()),
        Some(st) => {
            let mut offers = vec![(Rational::ZERO, Rational::ZERO); m];
            for o in &st.offers {
                let j = dev
                    .buyers
                    .iter()
                    .position(|&b| b == o.buyer)
                    .ok_or_else(|| {
                        Error::BadParameter(format!(
                            "{} is not a buyer of {}",
                            sol.network.name(o.buyer),
                            sol.network.name(firm)
                        ))
                    })?;
                offers[j] = (o.price.clone(), o.quantity.clone());
            }
            let y = dev
                .accepted(&offers)
                .ok_or_else(|| Error::Invariant("buyers have no consistent response".into()))?;
            let produced: Rational = offers.iter().map(|o| &o.1).sum();
            let revenue: Rational = offers.iter().zip(&y).map(|(o, v)| &o.0 * v).sum();
            (revenue - &dev.cost * produced, y)
        }
    };

    let mut best = current.clone();
    let mut best_flows = current_flows.clone();
    let mut tried = 0usize;
    let mut consider = |y: Vec<Rational>, best: &mut Rational, best_flows: &mut Vec<Rational>| {
        if !dev.feasible(&y) {
            return;
        }
        tried += 1;
        let v = dev.value(&y);
        if v > *best {
            *best = v;
            *best_flows = y;
        }
    };

    if m > 0 {
        let divisions = Rational::from(grid.divisions.max(1));
        let total: Rational = current_flows.iter().sum();
        let pitch = if total.is_positive() {
            &total / &divisions
        } else {
            Rational::ONE / &divisions
        };
        for &s in &grid.steps {
            for sign in [1i64, -1] {
                let delta = &pitch * Rational::from(s * sign);
                for j in 0..m {
                    let mut y = current_flows.clone();
                    y[j] += &delta;
                    consider(y, &mut best, &mut best_flows);
                    for k in 0..m {
                        if k != j {
                            let mut y = current_flows.clone();
                            y[j] += &delta;
                            y[k] -= &delta;
                            consider(y, &mut best, &mut best_flows);
                        }
                    }
                }
            }
        }
        if grid.scaling {
            for k in 0..=2 * grid.divisions {
                let f = Rational::from(k) / &divisions;
                let y = current_flows.iter().map(|v| v * &f).collect();
                consider(y, &mut best, &mut best_flows);
            }
        }
        if grid.stationary {
            if let Some(y) = dev.stationary() {
                consider(y, &mut best, &mut best_flows);
            }
        }
    }

    Ok(BestResponse {
        firm,
        gain: &best - &current,
        current,
        best,
        best_flows,
        tried,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::node_utilities;
    use crate::catalog;
    use crate::flow::solve;
    use crate::rational::int;

    #[test]
    fn line_candidate_gains_three() {
        let sol = solve(&catalog::line()).unwrap();
        let s = sol.network.node("s").unwrap();
        let v = sol.network.node("v").unwrap();
        let st = Strategy {
            offers: vec![Offer {
                buyer: v,
                price: int(7),
                quantity: int(2),
            }],
        };
        let br = best_response_check(&sol, s, Some(&st), &DeviationGrid::default()).unwrap();
        assert_eq!(br.current, int(5));
        assert_eq!(br.best, int(8));
        assert_eq!(br.gain, int(3));
        assert_eq!(br.best_flows, vec![int(2)]);
    }

    #[test]
    fn diamond_equilibrium_has_no_gain() {
        let sol = solve(&catalog::diamond()).unwrap();
        for v in sol.network.nodes() {
            let br = best_response_check(&sol, v, None, &DeviationGrid::default()).unwrap();
            assert!(!br.improves(), "{}", sol.network.name(v));
        }
    }

    #[test]
    fn current_value_is_equilibrium_utility() {
        let sol = solve(&catalog::two_level()).unwrap();
        let u = node_utilities(&sol.network, &sol.merge, &sol.schedule, &sol.equilibrium).unwrap();
        for v in sol.network.nodes().filter(|&v| !sol.network.is_sink(v)) {
            let br = best_response_check(&sol, v, None, &DeviationGrid::default()).unwrap();
            assert_eq!(br.current, u[&v], "{}", sol.network.name(v));
            assert_eq!(br.gain, int(0), "{}", sol.network.name(v));
        }
    }
}
