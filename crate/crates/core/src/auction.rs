//! Integer allocation problems: multi-unit auctions and bundle auctions.
//!
//! Valuations are stored as explicit tables over the endowment box `C(w)`;
//! the value of any bundle outside the box is the table value at the clamp
//! `m(x, w)`, which is the defining property of a multi-unit auction. Tables
//! are validated nondecreasing and nonnegative at construction.

use crate::bundle::{Bundle, Cube};
use crate::error::{Error, Result};
use crate::rat::Rat;

#[derive(Clone, Debug)]
enum TableRepr {
    /// One value per point of `C(domain)`, in box enumeration order.
    Dense(Vec<Rat>),
    /// Coalition-indicator valuation: `worth` on any bundle whose support
    /// covers `members`, zero elsewhere. Used by induced auctions, where a
    /// dense table per buyer would be exponential in the player count.
    Coalition { members: Bundle, worth: Rat },
}

/// One agent's nonnegative, nondecreasing valuation over sub-bundles of the
/// endowment.
#[derive(Clone, Debug)]
pub struct ValuationTable {
    label: String,
    domain: Bundle,
    repr: TableRepr,
}

impl ValuationTable {
    /// Builds a table from one value per point of `C(domain)` in box order,
    /// rejecting negative values and monotonicity violations.
    pub fn from_dense(label: impl Into<String>, domain: Bundle, values: Vec<Rat>) -> Result<Self> {
        let cube = Cube::new(domain.clone());
        if values.len() as u64 != cube.len() {
            return Err(Error::LengthMismatch {
                expected: cube.len() as usize,
                got: values.len(),
            });
        }
        for (rank, x) in cube.iter().enumerate() {
            if values[rank].is_negative() {
                return Err(Error::InvalidInstance(format!(
                    "negative value at bundle {x:?}"
                )));
            }
            for j in 0..x.len() {
                if x.get(j) > 0 {
                    let below = cube.index_of(&x.sub(&Bundle::unit(x.len(), j)));
                    if values[below] > values[rank] {
                        return Err(Error::NotMonotone {
                            lower: cube.at(below as u64).as_slice().to_vec(),
                            higher: x.as_slice().to_vec(),
                        });
                    }
                }
            }
        }
        Ok(ValuationTable {
            label: label.into(),
            domain,
            repr: TableRepr::Dense(values),
        })
    }

    /// Ingests a sparse list of `(bundle, value)` pairs, completing missing
    /// points monotonically: an absent point takes the maximum stored value
    /// among dominated points (zero when none). Stored values that sit below
    /// that maximum contradict monotonicity and are rejected.
    pub fn from_entries(
        label: impl Into<String>,
        domain: Bundle,
        entries: &[(Bundle, Rat)],
    ) -> Result<Self> {
        let cube = Cube::new(domain.clone());
        let mut stored: Vec<Option<Rat>> = vec![None; cube.len() as usize];
        for (bundle, value) in entries {
            if bundle.len() != domain.len() {
                return Err(Error::LengthMismatch {
                    expected: domain.len(),
                    got: bundle.len(),
                });
            }
            if !cube.contains(bundle) {
                return Err(Error::InvalidInstance(format!(
                    "bundle {bundle:?} exceeds the endowment {domain:?}"
                )));
            }
            if value.is_negative() {
                return Err(Error::InvalidInstance(format!(
                    "negative value at bundle {bundle:?}"
                )));
            }
            let rank = cube.index_of(bundle);
            if let Some(previous) = &stored[rank] {
                if previous != value {
                    return Err(Error::InvalidInstance(format!(
                        "conflicting values at bundle {bundle:?}"
                    )));
                }
            }
            stored[rank] = Some(value.clone());
        }
        let mut values = vec![Rat::zero(); cube.len() as usize];
        for (rank, x) in cube.iter().enumerate() {
            let mut floor = Rat::zero();
            for j in 0..x.len() {
                if x.get(j) > 0 {
                    let below = cube.index_of(&x.sub(&Bundle::unit(x.len(), j)));
                    if values[below] > floor {
                        floor = values[below].clone();
                    }
                }
            }
            match &stored[rank] {
                Some(v) if *v < floor => {
                    return Err(Error::NotMonotone {
                        lower: vec![],
                        higher: x.as_slice().to_vec(),
                    });
                }
                Some(v) => values[rank] = v.clone(),
                None => values[rank] = floor,
            }
        }
        Ok(ValuationTable {
            label: label.into(),
            domain,
            repr: TableRepr::Dense(values),
        })
    }

    /// Coalition-indicator valuation over the unit box: worth on any bundle
    /// whose support includes every member, zero otherwise.
    pub fn coalition(label: impl Into<String>, members: Bundle, worth: Rat) -> Result<Self> {
        if worth.is_negative() {
            return Err(Error::InvalidInstance("negative coalition worth".into()));
        }
        let domain = Bundle::ones(members.len());
        Ok(ValuationTable {
            label: label.into(),
            domain,
            repr: TableRepr::Coalition { members, worth },
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &Bundle {
        &self.domain
    }

    /// Table lookup; `y` must lie in `C(domain)`.
    pub fn value(&self, y: &Bundle) -> Rat {
        debug_assert!(y.leq(&self.domain));
        match &self.repr {
            TableRepr::Dense(values) => values[Cube::new(self.domain.clone()).index_of(y)].clone(),
            TableRepr::Coalition { members, worth } => {
                if members.leq(&y.support_indicator()) {
                    worth.clone()
                } else {
                    Rat::zero()
                }
            }
        }
    }

    /// Lookup with a precomputed rank in `cube` (which must be the domain
    /// box). Avoids re-deriving strides in DP inner loops.
    pub(crate) fn value_ranked(&self, y: &Bundle, rank: usize) -> Rat {
        match &self.repr {
            TableRepr::Dense(values) => values[rank].clone(),
            TableRepr::Coalition { members, worth } => {
                if members.leq(&y.support_indicator()) {
                    worth.clone()
                } else {
                    Rat::zero()
                }
            }
        }
    }
}

/// An integer allocation problem whose valuations depend only on the bundle
/// clamped at the endowment.
#[derive(Clone, Debug)]
pub struct MultiUnitAuction {
    endowment: Bundle,
    agents: Vec<ValuationTable>,
}

impl MultiUnitAuction {
    pub fn new(endowment: Bundle, agents: Vec<ValuationTable>) -> Result<Self> {
        if endowment.is_empty() {
            return Err(Error::InvalidInstance(
                "an auction needs at least one item".into(),
            ));
        }
        if agents.is_empty() {
            return Err(Error::InvalidInstance(
                "an auction needs at least one agent".into(),
            ));
        }
        if endowment.as_slice().iter().any(|&w| w == 0) {
            return Err(Error::InvalidInstance(
                "every item must have at least one unit in the endowment".into(),
            ));
        }
        for table in &agents {
            if table.domain() != &endowment {
                return Err(Error::InvalidInstance(format!(
                    "agent {} table domain {:?} differs from the endowment {:?}",
                    table.label(),
                    table.domain(),
                    endowment
                )));
            }
        }
        Ok(MultiUnitAuction { endowment, agents })
    }

    pub fn endowment(&self) -> &Bundle {
        &self.endowment
    }

    pub fn num_items(&self) -> usize {
        self.endowment.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agent(&self, i: usize) -> &ValuationTable {
        &self.agents[i]
    }

    pub fn agents(&self) -> &[ValuationTable] {
        &self.agents
    }

    /// `f^i(x) = f^i(m(x, w))`: total on all integer bundles.
    pub fn effective_value(&self, agent: usize, x: &Bundle) -> Rat {
        let clamped = x.meet(&self.endowment).expect("dimension checked");
        self.agents[agent].value(&clamped)
    }

    /// True exactly when the allocation distributes the endowment: sum = w.
    pub fn is_feasible(&self, allocation: &Allocation) -> bool {
        if allocation.len() != self.num_agents() {
            return false;
        }
        let mut total = Bundle::zeros(self.num_items());
        for bundle in allocation.bundles() {
            if bundle.len() != self.num_items() {
                return false;
            }
            total = total.add(bundle);
        }
        total == self.endowment
    }

    /// Agent profit `f^i(x) - p^T x`.
    pub fn profit(&self, agent: usize, x: &Bundle, prices: &PriceVector) -> Rat {
        self.effective_value(agent, x) - x.dot(prices.as_slice())
    }
}

/// A multi-unit auction with unit endowment of every item.
#[derive(Clone, Debug)]
pub struct BundleAuction(MultiUnitAuction);

impl BundleAuction {
    pub fn new(auction: MultiUnitAuction) -> Result<Self> {
        if auction.endowment().as_slice().iter().any(|&w| w != 1) {
            return Err(Error::InvalidInstance(
                "a bundle auction requires a unit endowment of every item".into(),
            ));
        }
        Ok(BundleAuction(auction))
    }

    pub fn from_tables(agents: Vec<ValuationTable>) -> Result<Self> {
        let items = agents
            .first()
            .map(|t| t.domain().len())
            .ok_or_else(|| Error::InvalidInstance("an auction needs at least one agent".into()))?;
        BundleAuction::new(MultiUnitAuction::new(Bundle::ones(items), agents)?)
    }
}

impl std::ops::Deref for BundleAuction {
    type Target = MultiUnitAuction;
    fn deref(&self) -> &MultiUnitAuction {
        &self.0
    }
}

impl AsRef<MultiUnitAuction> for BundleAuction {
    fn as_ref(&self) -> &MultiUnitAuction {
        &self.0
    }
}

/// One bundle per agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation(Vec<Bundle>);

impl Allocation {
    pub fn new(bundles: Vec<Bundle>) -> Self {
        Allocation(bundles)
    }

    pub fn zeros(agents: usize, items: usize) -> Self {
        Allocation(vec![Bundle::zeros(items); agents])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bundle(&self, agent: usize) -> &Bundle {
        &self.0[agent]
    }

    pub fn bundle_mut(&mut self, agent: usize) -> &mut Bundle {
        &mut self.0[agent]
    }

    pub fn bundles(&self) -> &[Bundle] {
        &self.0
    }

    pub fn total(&self) -> Bundle {
        let items = self.0.first().map_or(0, Bundle::len);
        self.0.iter().fold(Bundle::zeros(items), |acc, b| acc.add(b))
    }
}

/// Nonnegative, nonzero item prices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceVector(Vec<Rat>);

impl PriceVector {
    pub fn new(prices: Vec<Rat>) -> Result<Self> {
        if prices.iter().any(Rat::is_negative) {
            return Err(Error::InvalidPrices("negative price".into()));
        }
        if prices.iter().all(Rat::is_zero) {
            return Err(Error::InvalidPrices(
                "a price vector must have at least one positive entry".into(),
            ));
        }
        Ok(PriceVector(prices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> &Rat {
        &self.0[j]
    }

    pub fn as_slice(&self) -> &[Rat] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn b(v: &[u32]) -> Bundle {
        Bundle::new(v.to_vec())
    }

    pub(crate) fn unit_demand_agent(label: &str, items: usize, value: &str) -> ValuationTable {
        let e = Bundle::ones(items);
        let entries: Vec<(Bundle, Rat)> = Cube::new(e.clone())
            .iter()
            .filter(|x| !x.is_zero())
            .map(|x| (x, rat(value)))
            .collect();
        ValuationTable::from_entries(label, e, &entries).unwrap()
    }

    #[test]
    fn effective_value_clamps_to_the_endowment() {
        let agent =
            ValuationTable::from_entries("a", b(&[1, 1]), &[(b(&[1, 1]), rat("7"))]).unwrap();
        let auction = MultiUnitAuction::new(b(&[1, 1]), vec![agent]).unwrap();
        assert_eq!(auction.effective_value(0, &b(&[2, 2])), rat("7"));
        assert_eq!(auction.effective_value(0, &b(&[0, 0])), rat("0"));
    }

    #[test]
    fn monotone_completion_fills_the_lattice() {
        let table =
            ValuationTable::from_entries("a", b(&[1, 1]), &[(b(&[1, 0]), rat("3"))]).unwrap();
        assert_eq!(table.value(&b(&[1, 1])), rat("3"));
        assert_eq!(table.value(&b(&[0, 1])), rat("0"));
        assert_eq!(table.value(&b(&[0, 0])), rat("0"));
    }

    #[test]
    fn monotonicity_violations_are_rejected() {
        let err = ValuationTable::from_entries(
            "a",
            b(&[1, 1]),
            &[(b(&[1, 0]), rat("3")), (b(&[1, 1]), rat("2"))],
        );
        assert!(err.is_err());
        let err = ValuationTable::from_dense("a", b(&[1]), vec![rat("2"), rat("1")]);
        assert!(err.is_err());
    }

    #[test]
    fn negative_values_are_rejected() {
        let err = ValuationTable::from_entries("a", b(&[1]), &[(b(&[1]), rat("-1"))]);
        assert!(err.is_err());
    }

    #[test]
    fn feasibility_means_exact_market_clearing() {
        let agents = vec![
            unit_demand_agent("a", 2, "5"),
            unit_demand_agent("b", 2, "5"),
        ];
        let auction = BundleAuction::from_tables(agents).unwrap();
        assert!(auction.is_feasible(&Allocation::new(vec![b(&[1, 0]), b(&[0, 1])])));
        assert!(!auction.is_feasible(&Allocation::new(vec![b(&[1, 1]), b(&[0, 1])])));
        assert!(!auction.is_feasible(&Allocation::new(vec![b(&[1, 0]), b(&[0, 0])])));
    }

    #[test]
    fn profit_is_value_minus_payment() {
        let agent =
            ValuationTable::from_entries("a", b(&[1, 1]), &[(b(&[1, 0]), rat("3"))]).unwrap();
        let auction = MultiUnitAuction::new(b(&[1, 1]), vec![agent]).unwrap();
        let p = PriceVector::new(vec![rat("1"), rat("1")]).unwrap();
        assert_eq!(auction.profit(0, &b(&[1, 0]), &p), rat("2"));
        assert_eq!(auction.profit(0, &b(&[0, 0]), &p), rat("0"));
    }

    #[test]
    fn coalition_tables_value_by_support_cover() {
        let members = b(&[1, 1, 1, 0, 0]);
        let table = ValuationTable::coalition("S", members, rat("30")).unwrap();
        assert_eq!(table.value(&b(&[1, 1, 1, 1, 0])), rat("30"));
        assert_eq!(table.value(&b(&[1, 1, 0, 0, 0])), rat("0"));
        assert_eq!(table.value(&b(&[1, 1, 1, 1, 1])), rat("30"));
    }

    #[test]
    fn degenerate_auctions_are_rejected() {
        assert!(MultiUnitAuction::new(b(&[]), vec![]).is_err());
        assert!(MultiUnitAuction::new(b(&[1]), vec![]).is_err());
        assert!(MultiUnitAuction::new(b(&[0]), vec![unit_demand_agent("a", 1, "1")]).is_err());
    }

    #[test]
    fn price_vector_must_be_nonnegative_and_nonzero() {
        assert!(PriceVector::new(vec![rat("0"), rat("0")]).is_err());
        assert!(PriceVector::new(vec![rat("-1"), rat("2")]).is_err());
        assert!(PriceVector::new(vec![rat("0"), rat("2")]).is_ok());
    }

    #[test]
    fn effective_value_agrees_with_its_clamp_everywhere() {
        let agent = ValuationTable::from_entries(
            "a",
            b(&[2, 1]),
            &[(b(&[1, 0]), rat("2")), (b(&[2, 1]), rat("5"))],
        )
        .unwrap();
        let auction = MultiUnitAuction::new(b(&[2, 1]), vec![agent]).unwrap();
        for x in Cube::new(b(&[4, 3])).iter() {
            let clamped = x.meet(auction.endowment()).unwrap();
            assert_eq!(
                auction.effective_value(0, &x),
                auction.effective_value(0, &clamped)
            );
        }
    }

    #[test]
    fn support_indicator_is_meet_with_ones_on_unit_boxes() {
        let e = Bundle::ones(3);
        for x in Cube::new(b(&[2, 2, 2])).iter() {
            assert_eq!(x.support_indicator(), x.meet(&e).unwrap());
        }
    }
}
