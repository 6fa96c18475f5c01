//! The maximum value function.
//!
//! `V(x)` is the best total value the agents can reach by splitting the
//! bundle `x` among themselves. It is tabulated for every point of
//! `C(2w)` by an agent-by-agent dynamic program
//! `W_k(x) = max_{y <= m(x, w)} [f^k(y) + W_{k-1}(x - y)]`, keeping all
//! intermediate layers so that a witness allocation can be recovered by
//! backtracking. Ties during backtracking resolve to the lexicographically
//! smallest bundle for the agent under consideration, which makes witnesses
//! deterministic.

use crate::auction::{Allocation, MultiUnitAuction};
use crate::bundle::{Bundle, Cube};
use crate::error::{Error, Result};
use crate::rat::Rat;

/// Work guard for table construction: box size times agent count.
pub const DEFAULT_CELL_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct WeakMonotonicityReport {
    /// `V(w + e^j) >= V(w)` per item axis.
    pub axis_ok: Vec<bool>,
    /// `V(w + e) > V(w)` strictly.
    pub strict_step_ok: bool,
    pub overall: bool,
}

#[derive(Clone, Debug)]
enum DpKind {
    /// Generic per-agent DP over all sub-bundle choices.
    Generic,
    /// Induced-auction specialization: buyer `k` takes its coalition
    /// indicator or nothing. Equivalent to the generic DP on induced
    /// valuations because any optimal consumption is support-determined;
    /// the equivalence is property-tested against `Generic`.
    CoalitionPacking { indicators: Vec<Bundle> },
}

/// The tabulated maximum value function on `C(2w)`, with enough retained
/// state to answer witness queries.
#[derive(Clone, Debug)]
pub struct ValueFunction {
    auction: MultiUnitAuction,
    cube: Cube,
    /// layers[k][rank] = best value over agents 1..=k; layers[0] is zero
    layers: Vec<Vec<Rat>>,
    kind: DpKind,
}

/// Builds the table with the default work budget.
pub fn build_value_function(auction: &MultiUnitAuction) -> Result<ValueFunction> {
    build_value_function_with_budget(auction, DEFAULT_CELL_BUDGET)
}

pub fn build_value_function_with_budget(
    auction: &MultiUnitAuction,
    cell_budget: u64,
) -> Result<ValueFunction> {
    let cube = Cube::new(auction.endowment().double());
    check_budget(cube.len(), auction.num_agents(), cell_budget)?;
    let endowment = auction.endowment().clone();
    let endowment_cube = Cube::new(endowment.clone());
    let points: Vec<Bundle> = cube.iter().collect();

    let mut layers: Vec<Vec<Rat>> = Vec::with_capacity(auction.num_agents() + 1);
    layers.push(vec![Rat::zero(); points.len()]);
    for agent in 0..auction.num_agents() {
        let table = auction.agent(agent);
        let prev = &layers[agent];
        let mut layer = Vec::with_capacity(points.len());
        for x in &points {
            let cap = x.meet(&endowment).expect("dimensions agree");
            let mut best: Option<Rat> = None;
            for y in Cube::new(cap).iter() {
                let value = table.value_ranked(&y, endowment_cube.index_of(&y));
                let rest = cube.index_of(&x.sub(&y));
                let candidate = value + &prev[rest];
                if best.as_ref().is_none_or(|b| candidate > *b) {
                    best = Some(candidate);
                }
            }
            layer.push(best.expect("the empty bundle is always available"));
        }
        layers.push(layer);
    }
    Ok(ValueFunction {
        auction: auction.clone(),
        cube,
        layers,
        kind: DpKind::Generic,
    })
}

/// Builds the same table for a coalition-indicator auction by packing
/// coalitions instead of enumerating every sub-bundle choice per buyer.
pub(crate) fn build_value_function_packing(
    auction: &MultiUnitAuction,
    indicators: Vec<Bundle>,
    worths: Vec<Rat>,
    cell_budget: u64,
) -> Result<ValueFunction> {
    let cube = Cube::new(auction.endowment().double());
    check_budget(cube.len(), auction.num_agents(), cell_budget)?;
    debug_assert_eq!(indicators.len(), auction.num_agents());
    let points: Vec<Bundle> = cube.iter().collect();

    let mut layers: Vec<Vec<Rat>> = Vec::with_capacity(indicators.len() + 1);
    layers.push(vec![Rat::zero(); points.len()]);
    for (indicator, worth) in indicators.iter().zip(&worths) {
        let prev = layers.last().expect("seeded");
        let mut layer = prev.clone();
        if worth.is_positive() {
            for (rank, x) in points.iter().enumerate() {
                if indicator.leq(x) {
                    let taken = worth + &prev[cube.index_of(&x.sub(indicator))];
                    if taken > layer[rank] {
                        layer[rank] = taken;
                    }
                }
            }
        }
        layers.push(layer);
    }
    Ok(ValueFunction {
        auction: auction.clone(),
        cube,
        layers,
        kind: DpKind::CoalitionPacking { indicators },
    })
}

fn check_budget(points: u64, agents: usize, cell_budget: u64) -> Result<()> {
    let required = points as u128 * agents as u128;
    if required > cell_budget as u128 {
        return Err(Error::BudgetExceeded {
            required,
            allowed: cell_budget as u128,
        });
    }
    Ok(())
}

impl ValueFunction {
    pub fn auction(&self) -> &MultiUnitAuction {
        &self.auction
    }

    pub fn endowment(&self) -> &Bundle {
        self.auction.endowment()
    }

    /// The box `C(2w)` the table covers.
    pub fn cube(&self) -> &Cube {
        &self.cube
    }

    /// `V(x)`; `x` must lie in `C(2w)`.
    pub fn value(&self, x: &Bundle) -> Result<&Rat> {
        if !self.cube.contains(x) {
            return Err(Error::OutsideDomain);
        }
        Ok(&self.layers[self.auction.num_agents()][self.cube.index_of(x)])
    }

    pub fn value_at_rank(&self, rank: usize) -> &Rat {
        &self.layers[self.auction.num_agents()][rank]
    }

    pub fn value_at_endowment(&self) -> &Rat {
        self.value_at_rank(self.cube.index_of(self.auction.endowment()))
    }

    /// A member of `F(x)` attaining `V(x)`, recovered by backtracking.
    pub fn efficient_allocation(&self, x: &Bundle) -> Result<Allocation> {
        if !self.cube.contains(x) {
            return Err(Error::OutsideDomain);
        }
        let agents = self.auction.num_agents();
        let mut bundles = vec![Bundle::zeros(x.len()); agents];
        let mut remaining = x.clone();
        match &self.kind {
            DpKind::Generic => {
                let endowment_cube = Cube::new(self.auction.endowment().clone());
                for agent in (0..agents).rev() {
                    let target = &self.layers[agent + 1][self.cube.index_of(&remaining)];
                    let cap = remaining
                        .meet(self.auction.endowment())
                        .expect("dimensions agree");
                    let mut chosen = None;
                    for y in Cube::new(cap).iter() {
                        let value = self
                            .auction
                            .agent(agent)
                            .value_ranked(&y, endowment_cube.index_of(&y));
                        let rest = self.cube.index_of(&remaining.sub(&y));
                        if &(value + &self.layers[agent][rest]) == target {
                            chosen = Some(y);
                            break;
                        }
                    }
                    let y = chosen.expect("the layer value must be attainable");
                    remaining = remaining.sub(&y);
                    bundles[agent] = y;
                }
                // units the DP left unconsumed go to the first agent; its
                // chosen bundle already maximizes the clamped value over
                // everything left at its stage, so the enlarged bundle is
                // worth exactly the same
                if !remaining.is_zero() {
                    bundles[0] = bundles[0].add(&remaining);
                }
            }
            DpKind::CoalitionPacking { indicators } => {
                for agent in (0..agents).rev() {
                    let rank = self.cube.index_of(&remaining);
                    if self.layers[agent + 1][rank] == self.layers[agent][rank] {
                        continue; // ties prefer not taking, matching the DP
                    }
                    let indicator = &indicators[agent];
                    debug_assert!(indicator.leq(&remaining));
                    remaining = remaining.sub(indicator);
                    bundles[agent] = indicator.clone();
                }
                // leftover units carry no value for any buyer; park them on
                // the first buyer, whose valuation is identically zero (a
                // singleton coalition)
                if !remaining.is_zero() {
                    bundles[0] = bundles[0].add(&remaining);
                }
            }
        }
        let allocation = Allocation::new(bundles);
        debug_assert_eq!(&allocation.total(), x);
        Ok(allocation)
    }

    /// Monotone-step report at the endowment: every axis step must not
    /// decrease `V`, and the full step to `2w` must strictly increase it.
    pub fn check_weak_monotonicity(&self) -> WeakMonotonicityReport {
        let w = self.auction.endowment();
        let at_w = self.value_at_endowment().clone();
        let axis_ok: Vec<bool> = (0..w.len())
            .map(|j| {
                let up = w.add(&Bundle::unit(w.len(), j));
                self.layers[self.auction.num_agents()][self.cube.index_of(&up)] >= at_w
            })
            .collect();
        let strict_step_ok =
            self.layers[self.auction.num_agents()][self.cube.index_of(&w.double())] > at_w;
        let overall = strict_step_ok && axis_ok.iter().all(|&b| b);
        WeakMonotonicityReport {
            axis_ok,
            strict_step_ok,
            overall,
        }
    }

    /// CSV dump: `x_1,...,x_L,V` with exact fraction strings.
    pub fn dump_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        let l = self.auction.num_items();
        let header: Vec<String> = (1..=l).map(|j| format!("x_{j}")).collect();
        writeln!(out, "{},V", header.join(","))?;
        for (rank, x) in self.cube.iter().enumerate() {
            let coords: Vec<String> = x.as_slice().iter().map(|c| c.to_string()).collect();
            writeln!(out, "{},{}", coords.join(","), self.value_at_rank(rank))?;
        }
        Ok(())
    }
}
