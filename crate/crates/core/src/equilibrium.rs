//! Market-equilibrium existence, price recovery, and certificate checking.
//!
//! Existence is decided by one exact linear program: maximize the mixture
//! value `sum a(x) V(x)` over `x` in `C(2w)` subject to `sum a(x) x = w` and
//! `sum a(x) = 1`. The auction clears at some price vector exactly when the
//! optimum equals `V(w)`. On equality the duals of the endowment rows are
//! supporting prices and an efficient allocation completes a full
//! certificate; on strict excess the optimal mixture itself is a
//! machine-checkable refutation.
//!
//! Supporting prices are automatically nonnegative because `V` is
//! nondecreasing. They can however all be zero when `V(2w) = V(w)` (the
//! strict monotone step fails); in that degenerate case a second LP
//! maximizes the price sum over the supporting-price polytope, which either
//! produces a valid nonzero price vector or proves that only the zero price
//! supports the value function, i.e. that no market equilibrium exists even
//! though the mixture bound is tight.

use crate::auction::{Allocation, BundleAuction, MultiUnitAuction, PriceVector};
use crate::bundle::{Bundle, Cube};
use crate::error::Result;
use crate::lp::{lp_solve, LinearProgramSpec, LpSolution, LpStatus, Relation, Sense};
use crate::rat::Rat;
use crate::value::{build_value_function, ValueFunction, WeakMonotonicityReport};

/// A convex mixture of bundles that averages to the endowment while beating
/// `V(w)` in expected value: exact evidence that no equilibrium exists.
#[derive(Clone, Debug)]
pub struct ImprovingMixture {
    pub entries: Vec<(Bundle, Rat)>,
}

impl ImprovingMixture {
    /// Checks all three identities against the value function.
    pub fn verify(&self, vf: &ValueFunction) -> bool {
        let w = vf.endowment();
        let mut weight = Rat::zero();
        let mut mean = vec![Rat::zero(); w.len()];
        let mut value = Rat::zero();
        for (x, a) in &self.entries {
            if a.is_negative() {
                return false;
            }
            weight += a;
            for j in 0..w.len() {
                mean[j] += a * Rat::from(x.get(j));
            }
            match vf.value(x) {
                Ok(v) => value += a * v,
                Err(_) => return false,
            }
        }
        weight.is_one()
            && mean
                .iter()
                .zip(w.as_slice())
                .all(|(m, &t)| m == &Rat::from(t))
            && value > *vf.value_at_endowment()
    }
}

/// A full price/allocation pair with per-agent surpluses and verification
/// flags. Flags are computed by enumeration, never assumed.
#[derive(Clone, Debug)]
pub struct EquilibriumCertificate {
    pub prices: PriceVector,
    pub allocation: Allocation,
    pub surplus: Vec<Rat>,
    pub feasible: bool,
    pub profit_maximal: bool,
    pub zero_profit: bool,
}

impl EquilibriumCertificate {
    pub fn is_valid(&self) -> bool {
        self.feasible && self.profit_maximal
    }
}

/// Outcome of the existence decision.
///
/// `exists` records the exact equality test `lp_optimum = V(w)`. When the
/// strict monotone step holds, equality is equivalent to the existence of a
/// market equilibrium and `witness` is present; without it, equality is
/// still necessary, and `witness`/`price_certified` report whether a nonzero
/// supporting price vector could be recovered anyway.
#[derive(Clone, Debug)]
pub struct ExistenceVerdict {
    pub exists: bool,
    pub lp_optimum: Rat,
    pub value_at_endowment: Rat,
    pub weak_monotonicity: WeakMonotonicityReport,
    pub price_certified: bool,
    pub witness: Option<EquilibriumCertificate>,
    pub refutation: Option<ImprovingMixture>,
}

/// The mixture program over `C(2w)`: one variable per box point (in box
/// enumeration order), one equality row per item, one convexity row.
pub fn theorem_lp(vf: &ValueFunction) -> LinearProgramSpec {
    let cube = vf.cube();
    let w = vf.endowment();
    let n = cube.len() as usize;
    let objective: Vec<Rat> = (0..n).map(|rank| vf.value_at_rank(rank).clone()).collect();
    let mut lp = LinearProgramSpec::new(Sense::Maximize, objective);
    for j in 0..w.len() {
        let coeffs: Vec<Rat> = cube.iter().map(|x| Rat::from(x.get(j))).collect();
        lp.push_constraint(coeffs, Relation::Eq, Rat::from(w.get(j)))
            .expect("row length matches");
    }
    lp.push_constraint(vec![Rat::one(); n], Relation::Eq, Rat::one())
        .expect("row length matches");
    lp
}

/// Supporting prices from the mixture LP duals, post-validated: nonnegative,
/// nonzero, and `V(w) - p.w >= V(x) - p.x` on every tabulated point.
pub fn recover_prices(vf: &ValueFunction, solution: &LpSolution) -> Result<PriceVector> {
    let l = vf.endowment().len();
    let candidate: Vec<Rat> = solution.duals[..l].to_vec();
    let prices = PriceVector::new(candidate)?;
    validate_support(vf, &prices)?;
    Ok(prices)
}

fn validate_support(vf: &ValueFunction, prices: &PriceVector) -> Result<()> {
    let w = vf.endowment();
    let baseline = vf.value_at_endowment() - w.dot(prices.as_slice());
    for (rank, x) in vf.cube().iter().enumerate() {
        if vf.value_at_rank(rank) - x.dot(prices.as_slice()) > baseline {
            return Err(crate::error::Error::InvalidPrices(format!(
                "price vector does not support the value function at {x:?}"
            )));
        }
    }
    Ok(())
}

/// Maximizes the price sum over the supporting-price polytope
/// `{ p >= 0 : V(w) - p.w >= V(x) - p.x for all x in C(2w) }`. The polytope
/// is nonempty whenever the mixture LP is tight, and bounded because each
/// `p_j` is capped by `V(w) - V(w - e^j)`.
fn best_supporting_prices(vf: &ValueFunction) -> Option<PriceVector> {
    let w = vf.endowment();
    let l = w.len();
    let mut lp = LinearProgramSpec::new(Sense::Maximize, vec![Rat::one(); l]);
    let v_at_w = vf.value_at_endowment().clone();
    for (rank, x) in vf.cube().iter().enumerate() {
        // p.(x - w) >= V(x) - V(w)
        let coeffs: Vec<Rat> = (0..l)
            .map(|j| Rat::from(x.get(j) as i64 - w.get(j) as i64))
            .collect();
        let rhs = vf.value_at_rank(rank) - &v_at_w;
        lp.push_constraint(coeffs, Relation::Ge, rhs)
            .expect("row length matches");
    }
    let solution = lp_solve(&lp).expect("well-formed program");
    if solution.status != LpStatus::Optimal || !solution.objective.is_positive() {
        return None;
    }
    Some(PriceVector::new(solution.primal).expect("positive sum implies a valid price vector"))
}

/// Builds the full certificate for validated supporting prices: an efficient
/// allocation at the endowment, per-agent surpluses, and enumeration-checked
/// flags.
pub fn assemble_certificate(
    auction: &MultiUnitAuction,
    prices: &PriceVector,
    vf: &ValueFunction,
) -> EquilibriumCertificate {
    let allocation = vf
        .efficient_allocation(auction.endowment())
        .expect("the endowment lies in the table");
    certificate_for(auction, prices, allocation)
}

/// Certificate fields for a given pair, all flags recomputed.
pub fn certificate_for(
    auction: &MultiUnitAuction,
    prices: &PriceVector,
    allocation: Allocation,
) -> EquilibriumCertificate {
    let surplus: Vec<Rat> = (0..auction.num_agents())
        .map(|i| auction.profit(i, allocation.bundle(i), prices))
        .collect();
    let report = verify_equilibrium(auction, prices, &allocation, VerificationMode::Constrained);
    let zero_profit = surplus.iter().all(Rat::is_zero);
    EquilibriumCertificate {
        prices: prices.clone(),
        allocation,
        feasible: report.feasible,
        profit_maximal: report.deviations.is_empty(),
        zero_profit,
        surplus,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerificationMode {
    /// Deviations range over `C(w)`.
    Constrained,
    /// Deviations range over `C(2w)`; because valuations clamp at the
    /// endowment and prices are nonnegative, a best response in `C(w)` beats
    /// every bundle in the integer lattice, so both modes certify all of it.
    Unconstrained,
}

#[derive(Clone, Debug)]
pub struct DeviationViolation {
    pub agent: usize,
    pub deviation: Bundle,
    pub gain: Rat,
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub feasible: bool,
    pub deviations: Vec<DeviationViolation>,
    pub ok: bool,
}

/// Checks a candidate pair by full deviation enumeration. The report carries
/// the first violating deviation per agent.
pub fn verify_equilibrium(
    auction: &MultiUnitAuction,
    prices: &PriceVector,
    allocation: &Allocation,
    mode: VerificationMode,
) -> VerificationReport {
    let feasible = auction.is_feasible(allocation);
    let deviation_box = match mode {
        VerificationMode::Constrained => auction.endowment().clone(),
        VerificationMode::Unconstrained => auction.endowment().double(),
    };
    let mut deviations = Vec::new();
    if prices.len() == auction.num_items() && allocation.len() == auction.num_agents() {
        for agent in 0..auction.num_agents() {
            let own = auction.profit(agent, allocation.bundle(agent), prices);
            for y in Cube::new(deviation_box.clone()).iter() {
                let profit = auction.profit(agent, &y, prices);
                if profit > own {
                    deviations.push(DeviationViolation {
                        agent,
                        gain: profit - &own,
                        deviation: y,
                    });
                    break;
                }
            }
        }
    }
    VerificationReport {
        ok: feasible && deviations.is_empty(),
        feasible,
        deviations,
    }
}

/// Existence decision for a bundle auction.
pub fn decide_existence(auction: &BundleAuction) -> Result<ExistenceVerdict> {
    let vf = build_value_function(auction)?;
    Ok(decide_existence_with(&vf))
}

/// Existence decision over a prebuilt value function (bundle or multi-unit).
pub fn decide_existence_with(vf: &ValueFunction) -> ExistenceVerdict {
    let auction = vf.auction();
    let weak_monotonicity = vf.check_weak_monotonicity();
    let lp = theorem_lp(vf);
    let solution = lp_solve(&lp).expect("the mixture program is always solvable");
    assert_eq!(
        solution.status,
        LpStatus::Optimal,
        "the mixture program is feasible and bounded"
    );
    let value_at_endowment = vf.value_at_endowment().clone();
    let exists = solution.objective == value_at_endowment;

    if !exists {
        let entries: Vec<(Bundle, Rat)> = solution
            .primal
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_positive())
            .map(|(rank, a)| (vf.cube().at(rank as u64), a.clone()))
            .collect();
        let refutation = ImprovingMixture { entries };
        assert!(
            refutation.verify(vf),
            "optimal mixture must certify the strict excess"
        );
        return ExistenceVerdict {
            exists,
            lp_optimum: solution.objective,
            value_at_endowment,
            weak_monotonicity,
            price_certified: true,
            witness: None,
            refutation: Some(refutation),
        };
    }

    let prices = match recover_prices(vf, &solution) {
        Ok(p) => Some(p),
        Err(_) => {
            // the dual landed on the zero price; only possible when the
            // strict monotone step fails, and a nonzero supporting vector
            // may still exist elsewhere on the optimal face
            assert!(
                !weak_monotonicity.overall,
                "zero dual prices contradict the strict monotone step"
            );
            best_supporting_prices(vf)
        }
    };
    match prices {
        Some(prices) => {
            validate_support(vf, &prices).expect("recovered prices must support the table");
            let certificate = assemble_certificate(auction, &prices, vf);
            assert!(
                certificate.is_valid(),
                "supporting prices with an efficient allocation must verify"
            );
            ExistenceVerdict {
                exists,
                lp_optimum: solution.objective,
                value_at_endowment,
                weak_monotonicity,
                price_certified: true,
                witness: Some(certificate),
                refutation: None,
            }
        }
        None => ExistenceVerdict {
            exists,
            lp_optimum: solution.objective,
            value_at_endowment,
            weak_monotonicity,
            price_certified: false,
            witness: None,
            refutation: None,
        },
    }
}

/// The support-price feasibility system of the appendix argument, over free
/// price variables: `p.(x - w) >= V(x) - V(w)` for every tabulated `x`.
/// Solvable exactly when the mixture LP is tight.
pub fn support_price_system(vf: &ValueFunction) -> LinearProgramSpec {
    let w = vf.endowment();
    let l = w.len();
    let v_at_w = vf.value_at_endowment().clone();
    let mut lp = LinearProgramSpec::feasibility(l);
    for j in 0..l {
        lp.set_free(j);
    }
    for (rank, x) in vf.cube().iter().enumerate() {
        let coeffs: Vec<Rat> = (0..l)
            .map(|j| Rat::from(x.get(j) as i64 - w.get(j) as i64))
            .collect();
        let rhs = vf.value_at_rank(rank) - &v_at_w;
        lp.push_constraint(coeffs, Relation::Ge, rhs)
            .expect("row length matches");
    }
    lp
}

/// The dual-side program characterizing equilibria: minimize
/// `sum m(i) + p.w` over free surpluses and nonnegative prices subject to
/// `sum m(i) + p.x >= V(x)` for all tabulated `x`. A pair `(p, X)` is an
/// equilibrium exactly when `(p, m)` with `m(i) = f^i(X^i) - p.X^i` attains
/// the optimum.
pub fn surplus_price_program(vf: &ValueFunction) -> LinearProgramSpec {
    let auction = vf.auction();
    let h = auction.num_agents();
    let l = auction.num_items();
    let w = vf.endowment();
    let mut objective = vec![Rat::one(); h];
    objective.extend((0..l).map(|j| Rat::from(w.get(j))));
    let mut lp = LinearProgramSpec::new(Sense::Minimize, objective);
    for i in 0..h {
        lp.set_free(i);
    }
    for (rank, x) in vf.cube().iter().enumerate() {
        let mut coeffs = vec![Rat::one(); h];
        coeffs.extend((0..l).map(|j| Rat::from(x.get(j))));
        lp.push_constraint(coeffs, Relation::Ge, vf.value_at_rank(rank).clone())
            .expect("row length matches");
    }
    lp
}
