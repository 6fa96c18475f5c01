//! Multi-unit auctions as bundle auctions over their individual units.
//!
//! Splitting every item into distinct unit-items turns a multi-unit auction
//! into a bundle auction on `M = sum w_j` commodities whose valuations
//! aggregate unit holdings back through the original tables. Equilibria map
//! both ways: prices replicate across a group going up, and collapse to the
//! common group price coming down — at an equilibrium all units of one item
//! must carry equal prices, or the buyer of a dearer unit would switch to a
//! cheaper one.
//!
//! The existence decision itself never expands: the mixture program runs
//! directly on `C(2w)`, which answers identically at exponentially lower
//! cost. The expansion is exercised as a tested mapping.

use crate::auction::{Allocation, BundleAuction, MultiUnitAuction, PriceVector, ValuationTable};
use crate::bundle::{Bundle, Cube};
use crate::equilibrium::{decide_existence_with, verify_equilibrium, ExistenceVerdict, VerificationMode};
use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::value::{build_value_function_with_budget, DEFAULT_CELL_BUDGET};

/// A multi-unit auction together with its per-unit bundle auction and the
/// item-to-unit index groups.
#[derive(Clone, Debug)]
pub struct UnitExpansion {
    source: MultiUnitAuction,
    /// unit indices (0-based) representing each original item
    groups: Vec<Vec<usize>>,
    expanded: BundleAuction,
}

pub fn expand(auction: &MultiUnitAuction) -> Result<UnitExpansion> {
    expand_with_budget(auction, DEFAULT_CELL_BUDGET)
}

pub fn expand_with_budget(auction: &MultiUnitAuction, cell_budget: u64) -> Result<UnitExpansion> {
    let total_units = auction.endowment().total_units();
    if total_units > 62 {
        return Err(Error::BudgetExceeded {
            required: u128::MAX,
            allowed: cell_budget as u128,
        });
    }
    let table_cells = (1u128 << total_units) * auction.num_agents() as u128;
    if table_cells > cell_budget as u128 {
        return Err(Error::BudgetExceeded {
            required: table_cells,
            allowed: cell_budget as u128,
        });
    }
    let m = total_units as usize;
    let mut groups = Vec::with_capacity(auction.num_items());
    let mut cursor = 0usize;
    for j in 0..auction.num_items() {
        let units = auction.endowment().get(j) as usize;
        groups.push((cursor..cursor + units).collect());
        cursor += units;
    }

    let unit_box = Bundle::ones(m);
    let aggregate = |y: &Bundle| -> Bundle {
        Bundle::new(
            groups
                .iter()
                .map(|group: &Vec<usize>| group.iter().map(|&k| y.get(k)).sum())
                .collect(),
        )
    };
    let tables: Vec<ValuationTable> = (0..auction.num_agents())
        .map(|i| {
            let values: Vec<Rat> = Cube::new(unit_box.clone())
                .iter()
                .map(|y| auction.effective_value(i, &aggregate(&y)))
                .collect();
            ValuationTable::from_dense(auction.agent(i).label(), unit_box.clone(), values)
        })
        .collect::<Result<_>>()?;
    let expanded = BundleAuction::from_tables(tables)?;
    Ok(UnitExpansion {
        source: auction.clone(),
        groups,
        expanded,
    })
}

impl UnitExpansion {
    pub fn source(&self) -> &MultiUnitAuction {
        &self.source
    }

    pub fn expanded(&self) -> &BundleAuction {
        &self.expanded
    }

    pub fn num_units(&self) -> usize {
        self.expanded.num_items()
    }

    /// Unit groups `I_j`, 0-based.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Collapses a unit bundle back to item multiplicities.
    pub fn aggregate(&self, y: &Bundle) -> Bundle {
        Bundle::new(
            self.groups
                .iter()
                .map(|group| group.iter().map(|&k| y.get(k)).sum())
                .collect(),
        )
    }

    /// Maps a source equilibrium up: every unit of item `j` is priced at
    /// `p_j`, and units are handed out greedily in agent order.
    pub fn push_equilibrium(
        &self,
        prices: &PriceVector,
        allocation: &Allocation,
    ) -> Result<(PriceVector, Allocation)> {
        self.require_source_equilibrium(prices, allocation)?;
        let m = self.num_units();
        let mut unit_prices = vec![Rat::zero(); m];
        for (j, group) in self.groups.iter().enumerate() {
            for &k in group {
                unit_prices[k] = prices.get(j).clone();
            }
        }
        let unit_prices = PriceVector::new(unit_prices)?;
        let mut bundles = vec![Bundle::zeros(m); allocation.len()];
        for (j, group) in self.groups.iter().enumerate() {
            let mut next = group.iter().copied();
            for (agent, bundle) in bundles.iter_mut().enumerate() {
                for _ in 0..allocation.bundle(agent).get(j) {
                    let unit = next.next().expect("feasible allocations fit the supply");
                    *bundle = bundle.add(&Bundle::unit(m, unit));
                }
            }
        }
        let unit_allocation = Allocation::new(bundles);
        let report = verify_equilibrium(
            &self.expanded,
            &unit_prices,
            &unit_allocation,
            VerificationMode::Constrained,
        );
        assert!(report.ok, "pushed pairs always clear the expanded market");
        Ok((unit_prices, unit_allocation))
    }

    /// Maps an expanded equilibrium down. Within-group price equality is
    /// asserted first: a disparity means the input was no equilibrium, and
    /// the offending unit pair is reported as the arbitrage witness.
    pub fn pull_equilibrium(
        &self,
        unit_prices: &PriceVector,
        unit_allocation: &Allocation,
    ) -> Result<(PriceVector, Allocation)> {
        for (j, group) in self.groups.iter().enumerate() {
            for window in group.windows(2) {
                let (a, b) = (window[0], window[1]);
                if unit_prices.get(a) != unit_prices.get(b) {
                    let (cheap, dear) = if unit_prices.get(a) < unit_prices.get(b) {
                        (a, b)
                    } else {
                        (b, a)
                    };
                    return Err(Error::PriceArbitrage {
                        item: j + 1,
                        cheap_unit: cheap + 1,
                        dear_unit: dear + 1,
                        cheap_price: unit_prices.get(cheap).to_string(),
                        dear_price: unit_prices.get(dear).to_string(),
                    });
                }
            }
        }
        let report = verify_equilibrium(
            &self.expanded,
            unit_prices,
            unit_allocation,
            VerificationMode::Constrained,
        );
        if !report.feasible {
            return Err(Error::InfeasibleAllocation);
        }
        if let Some(v) = report.deviations.first() {
            return Err(Error::NotAnEquilibrium {
                agent: v.agent,
                deviation: v.deviation.as_slice().to_vec(),
                gain: v.gain.to_string(),
            });
        }
        let prices = PriceVector::new(
            self.groups
                .iter()
                .map(|group| unit_prices.get(group[0]).clone())
                .collect(),
        )?;
        let allocation = Allocation::new(
            unit_allocation
                .bundles()
                .iter()
                .map(|y| self.aggregate(y))
                .collect(),
        );
        self.require_source_equilibrium(&prices, &allocation)
            .expect("pulled pairs always clear the source market");
        Ok((prices, allocation))
    }

    fn require_source_equilibrium(
        &self,
        prices: &PriceVector,
        allocation: &Allocation,
    ) -> Result<()> {
        let report =
            verify_equilibrium(&self.source, prices, allocation, VerificationMode::Constrained);
        if !report.feasible {
            return Err(Error::InfeasibleAllocation);
        }
        if let Some(v) = report.deviations.first() {
            return Err(Error::NotAnEquilibrium {
                agent: v.agent,
                deviation: v.deviation.as_slice().to_vec(),
                gain: v.gain.to_string(),
            });
        }
        Ok(())
    }
}

/// Existence decision for a multi-unit auction: the mixture program over
/// `C(2w)` with the endowment on the right-hand side.
pub fn decide_existence_multiunit(auction: &MultiUnitAuction) -> Result<ExistenceVerdict> {
    decide_existence_multiunit_with_budget(auction, DEFAULT_CELL_BUDGET)
}

pub fn decide_existence_multiunit_with_budget(
    auction: &MultiUnitAuction,
    cell_budget: u64,
) -> Result<ExistenceVerdict> {
    let vf = build_value_function_with_budget(auction, cell_budget)?;
    Ok(decide_existence_with(&vf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::decide_existence;
    use crate::rat::rat;
    use crate::value::build_value_function;

    fn b(v: &[u32]) -> Bundle {
        Bundle::new(v.to_vec())
    }

    fn two_unit_single_item() -> MultiUnitAuction {
        // one item with two units, two agents each wanting one unit at 5
        let w = b(&[2]);
        let table = |label: &str| {
            ValuationTable::from_entries(
                label,
                w.clone(),
                &[(b(&[1]), rat("5")), (b(&[2]), rat("5"))],
            )
            .unwrap()
        };
        let tables = vec![table("a"), table("b")];
        MultiUnitAuction::new(w, tables).unwrap()
    }

    fn additive_two_items() -> MultiUnitAuction {
        // w = (2,1); one agent values units of item 1 at 3 and item 2 at 4
        let w = b(&[2, 1]);
        let entries: Vec<(Bundle, Rat)> = Cube::new(w.clone())
            .iter()
            .map(|x| {
                let v = Rat::from_int(3 * x.get(0) as i64 + 4 * x.get(1) as i64);
                (x, v)
            })
            .collect();
        let a = ValuationTable::from_entries("a", w.clone(), &entries).unwrap();
        MultiUnitAuction::new(w, vec![a]).unwrap()
    }

    #[test]
    fn unit_groups_count_the_endowment() {
        let exp = expand(&additive_two_items()).unwrap();
        assert_eq!(exp.num_units(), 3);
        assert_eq!(exp.groups(), &[vec![0, 1], vec![2]]);

        let identity = expand(&two_unit_single_item()).unwrap();
        assert_eq!(identity.num_units(), 2);
        let bundle_auction = BundleAuction::from_tables(vec![ValuationTable::from_entries(
            "x",
            b(&[1, 1]),
            &[(b(&[1, 1]), rat("2"))],
        )
        .unwrap()])
        .unwrap();
        let exp = expand(bundle_auction.as_ref()).unwrap();
        assert_eq!(exp.groups(), &[vec![0], vec![1]]);
    }

    #[test]
    fn expanded_values_compose_through_aggregation() {
        let exp = expand(&additive_two_items()).unwrap();
        // two units of item 1: worth 6 under the original table
        assert_eq!(
            exp.expanded().effective_value(0, &b(&[1, 1, 0])),
            rat("6")
        );
        assert_eq!(exp.expanded().effective_value(0, &b(&[0, 1, 1])), rat("7"));
        assert_eq!(exp.expanded().effective_value(0, &b(&[0, 0, 0])), rat("0"));
    }

    #[test]
    fn expanded_value_function_factors_through_aggregation() {
        let auction = two_unit_single_item();
        let exp = expand(&auction).unwrap();
        let vf = build_value_function(&auction).unwrap();
        let vf_expanded = build_value_function(exp.expanded()).unwrap();
        for y in vf_expanded.cube().clone().iter() {
            assert_eq!(
                vf_expanded.value(&y).unwrap(),
                vf.value(&exp.aggregate(&y)).unwrap(),
            );
        }
    }

    #[test]
    fn push_uses_greedy_agent_order() {
        let auction = two_unit_single_item();
        let exp = expand(&auction).unwrap();
        let prices = PriceVector::new(vec![rat("3")]).unwrap();
        let allocation = Allocation::new(vec![b(&[1]), b(&[1])]);
        let (q, y) = exp.push_equilibrium(&prices, &allocation).unwrap();
        assert_eq!(q.as_slice(), &[rat("3"), rat("3")]);
        assert_eq!(y.bundle(0), &b(&[1, 0]));
        assert_eq!(y.bundle(1), &b(&[0, 1]));
    }

    #[test]
    fn pull_rejects_group_price_disparity_with_an_arbitrage_pair() {
        let auction = two_unit_single_item();
        let exp = expand(&auction).unwrap();
        let q = PriceVector::new(vec![rat("3"), rat("5")]).unwrap();
        let y = Allocation::new(vec![b(&[1, 0]), b(&[0, 1])]);
        match exp.pull_equilibrium(&q, &y) {
            Err(Error::PriceArbitrage {
                item,
                cheap_unit,
                dear_unit,
                ..
            }) => {
                assert_eq!(item, 1);
                assert_eq!(cheap_unit, 1);
                assert_eq!(dear_unit, 2);
            }
            other => panic!("expected an arbitrage witness, got {other:?}"),
        }
    }

    #[test]
    fn push_then_pull_round_trips() {
        let auction = two_unit_single_item();
        let exp = expand(&auction).unwrap();
        let prices = PriceVector::new(vec![rat("3")]).unwrap();
        let allocation = Allocation::new(vec![b(&[1]), b(&[1])]);
        let (q, y) = exp.push_equilibrium(&prices, &allocation).unwrap();
        let (p_back, x_back) = exp.pull_equilibrium(&q, &y).unwrap();
        assert_eq!(p_back.as_slice(), prices.as_slice());
        assert_eq!(x_back, allocation);
    }

    #[test]
    fn non_equilibrium_inputs_are_refused() {
        let auction = two_unit_single_item();
        let exp = expand(&auction).unwrap();
        let prices = PriceVector::new(vec![rat("9")]).unwrap();
        let allocation = Allocation::new(vec![b(&[1]), b(&[1])]);
        assert!(matches!(
            exp.push_equilibrium(&prices, &allocation),
            Err(Error::NotAnEquilibrium { .. })
        ));
    }

    #[test]
    fn unit_demand_market_clears_with_both_agents_served() {
        let auction = two_unit_single_item();
        let verdict = decide_existence_multiunit(&auction).unwrap();
        assert!(verdict.exists, "V(w) = 10 is the mixture optimum");
        let cert = verdict.witness.expect("witness expected");
        assert!(cert.is_valid());
        let price = cert.prices.get(0);
        assert!(price > &rat("0") && price <= &rat("5"));
        assert_eq!(cert.allocation.bundle(0), &b(&[1]));
        assert_eq!(cert.allocation.bundle(1), &b(&[1]));
    }

    #[test]
    fn bundle_auctions_decide_identically_through_either_entry_point() {
        let table = ValuationTable::from_entries(
            "u",
            b(&[1, 1]),
            &[(b(&[1, 1]), rat("10"))],
        )
        .unwrap();
        let auction = BundleAuction::from_tables(vec![table]).unwrap();
        let via_bundle = decide_existence(&auction).unwrap();
        let via_multi = decide_existence_multiunit(auction.as_ref()).unwrap();
        assert_eq!(via_bundle.exists, via_multi.exists);
        assert_eq!(via_bundle.lp_optimum, via_multi.lp_optimum);
    }

    #[test]
    fn decision_agrees_with_expand_then_decide_on_small_instances() {
        let auction = two_unit_single_item();
        let direct = decide_existence_multiunit(&auction).unwrap();
        let exp = expand(&auction).unwrap();
        let expanded_verdict = decide_existence(exp.expanded()).unwrap();
        assert_eq!(direct.exists, expanded_verdict.exists);
    }
}
