//! Exact linear programming.
//!
//! A dense two-phase primal simplex over rationals with Bland's pivoting
//! rule. Exact arithmetic means the solver classifies status without any
//! tolerance, Bland's rule guarantees termination on degenerate inputs, and
//! every optimal solve returns primal values, constraint duals and reduced
//! costs satisfying strong duality and complementary slackness as identities.
//!
//! Infeasible systems yield machine-checkable certificates: nonnegative
//! multipliers on the constraints (oriented as `<=`) whose combination is
//! contradictory. `farkas_certificate` exposes exactly one of a feasible
//! point or such a certificate.

use crate::error::{Error, Result};
use crate::rat::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub relation: Relation,
    pub rhs: Rat,
}

/// Per-variable domain: bounded below (default 0) or unbounded below.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarBound {
    At(Rat),
    Free,
}

#[derive(Clone, Debug)]
pub struct LinearProgramSpec {
    pub sense: Sense,
    pub objective: Vec<Rat>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<VarBound>,
}

impl LinearProgramSpec {
    pub fn new(sense: Sense, objective: Vec<Rat>) -> Self {
        let n = objective.len();
        LinearProgramSpec {
            sense,
            objective,
            constraints: Vec::new(),
            bounds: vec![VarBound::At(Rat::zero()); n],
        }
    }

    pub fn maximize(objective: Vec<Rat>) -> Self {
        Self::new(Sense::Maximize, objective)
    }

    pub fn minimize(objective: Vec<Rat>) -> Self {
        Self::new(Sense::Minimize, objective)
    }

    /// A pure feasibility system over `num_vars` nonnegative variables.
    pub fn feasibility(num_vars: usize) -> Self {
        Self::new(Sense::Maximize, vec![Rat::zero(); num_vars])
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn push_constraint(&mut self, coeffs: Vec<Rat>, relation: Relation, rhs: Rat) -> Result<()> {
        if coeffs.len() != self.num_vars() {
            return Err(Error::LengthMismatch {
                expected: self.num_vars(),
                got: coeffs.len(),
            });
        }
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        Ok(())
    }

    pub fn set_free(&mut self, var: usize) {
        self.bounds[var] = VarBound::Free;
    }

    pub fn set_lower_bound(&mut self, var: usize, lb: Rat) {
        self.bounds[var] = VarBound::At(lb);
    }

    fn validate(&self) -> Result<()> {
        if self.bounds.len() != self.num_vars() {
            return Err(Error::LengthMismatch {
                expected: self.num_vars(),
                got: self.bounds.len(),
            });
        }
        for c in &self.constraints {
            if c.coeffs.len() != self.num_vars() {
                return Err(Error::LengthMismatch {
                    expected: self.num_vars(),
                    got: c.coeffs.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of an exact solve. For `Optimal` status the invariants
/// `primal feasible`, `duals sign-correct`, `complementary slackness` and
/// `objective = dual objective` all hold exactly; `verify` re-checks them.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<Rat>,
    pub duals: Vec<Rat>,
    pub reduced_costs: Vec<Rat>,
    pub objective: Rat,
}

impl LpSolution {
    fn non_optimal(status: LpStatus) -> Self {
        LpSolution {
            status,
            primal: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            objective: Rat::zero(),
        }
    }

    /// Re-derives every optimality condition from scratch. Returns a
    /// description of the first violated identity, if any.
    pub fn verify(&self, spec: &LinearProgramSpec) -> std::result::Result<(), String> {
        if self.status != LpStatus::Optimal {
            return Ok(());
        }
        let n = spec.num_vars();
        let m = spec.num_constraints();
        if self.primal.len() != n || self.duals.len() != m || self.reduced_costs.len() != n {
            return Err("solution dimensions do not match the program".into());
        }
        for (j, bound) in spec.bounds.iter().enumerate() {
            if let VarBound::At(l) = bound {
                if &self.primal[j] < l {
                    return Err(format!("variable {j} below its lower bound"));
                }
            }
        }
        for (k, c) in spec.constraints.iter().enumerate() {
            let lhs = dot(&c.coeffs, &self.primal);
            let ok = match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Eq => lhs == c.rhs,
                Relation::Ge => lhs >= c.rhs,
            };
            if !ok {
                return Err(format!("constraint {k} violated by primal point"));
            }
            // dual sign convention
            let y = &self.duals[k];
            let sign_ok = match (spec.sense, c.relation) {
                (_, Relation::Eq) => true,
                (Sense::Maximize, Relation::Le) | (Sense::Minimize, Relation::Ge) => {
                    !y.is_negative()
                }
                (Sense::Maximize, Relation::Ge) | (Sense::Minimize, Relation::Le) => {
                    !y.is_positive()
                }
            };
            if !sign_ok {
                return Err(format!("dual {k} has the wrong sign"));
            }
            // complementary slackness on constraints
            if !y.is_zero() && lhs != c.rhs {
                return Err(format!("complementary slackness fails on constraint {k}"));
            }
        }
        let mut dual_objective = Rat::zero();
        for (k, c) in spec.constraints.iter().enumerate() {
            dual_objective += &self.duals[k] * &c.rhs;
        }
        for j in 0..n {
            let mut rho = spec.objective[j].clone();
            for (k, c) in spec.constraints.iter().enumerate() {
                if !c.coeffs[j].is_zero() {
                    rho -= &self.duals[k] * &c.coeffs[j];
                }
            }
            if rho != self.reduced_costs[j] {
                return Err(format!("stored reduced cost {j} is inconsistent"));
            }
            match &spec.bounds[j] {
                VarBound::Free => {
                    if !rho.is_zero() {
                        return Err(format!("free variable {j} has nonzero reduced cost"));
                    }
                }
                VarBound::At(l) => {
                    let sign_ok = match spec.sense {
                        Sense::Maximize => !rho.is_positive(),
                        Sense::Minimize => !rho.is_negative(),
                    };
                    if !sign_ok {
                        return Err(format!("reduced cost {j} has the wrong sign"));
                    }
                    if self.primal[j] != *l && !rho.is_zero() {
                        return Err(format!("complementary slackness fails on variable {j}"));
                    }
                    dual_objective += l * &rho;
                }
            }
        }
        let primal_objective = dot(&spec.objective, &self.primal);
        if primal_objective != self.objective {
            return Err("stored objective differs from c^T x".into());
        }
        if primal_objective != dual_objective {
            return Err("nonzero duality gap".into());
        }
        Ok(())
    }
}

/// Nonnegative multipliers proving a system infeasible. `multipliers[k]`
/// applies to constraint `k` oriented as `<=` (a `>=` row enters negated;
/// an equality row keeps its sign and its multiplier may be negative).
#[derive(Clone, Debug)]
pub struct FarkasCertificate {
    pub multipliers: Vec<Rat>,
}

impl FarkasCertificate {
    /// Checks the certificate against the system: the oriented combination
    /// must have nonnegative coefficients on bounded variables, zero on free
    /// ones, and a combined right-hand side strictly below the bound floor.
    pub fn verify(&self, spec: &LinearProgramSpec) -> bool {
        if self.multipliers.len() != spec.num_constraints() {
            return false;
        }
        let n = spec.num_vars();
        let mut combined = vec![Rat::zero(); n];
        let mut beta = Rat::zero();
        for (lambda, c) in self.multipliers.iter().zip(&spec.constraints) {
            let oriented_sign = match c.relation {
                Relation::Le | Relation::Eq => Rat::one(),
                Relation::Ge => -Rat::one(),
            };
            if c.relation != Relation::Eq && lambda.is_negative() {
                return false;
            }
            if lambda.is_zero() {
                continue;
            }
            let factor = lambda * &oriented_sign;
            for j in 0..n {
                if !c.coeffs[j].is_zero() {
                    combined[j] += &factor * &c.coeffs[j];
                }
            }
            beta += &factor * &c.rhs;
        }
        let mut floor = Rat::zero();
        for (j, bound) in spec.bounds.iter().enumerate() {
            match bound {
                VarBound::Free => {
                    if !combined[j].is_zero() {
                        return false;
                    }
                }
                VarBound::At(l) => {
                    if combined[j].is_negative() {
                        return false;
                    }
                    floor += &combined[j] * l;
                }
            }
        }
        beta < floor
    }
}

#[derive(Clone, Debug)]
pub enum FeasibilityOutcome {
    Feasible(Vec<Rat>),
    Infeasible(FarkasCertificate),
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Rat::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

#[derive(Clone, Copy, Debug)]
enum VarMap {
    Shifted { col: usize },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    ncols: usize,
    art_start: usize,
    rows: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
    /// original constraint index of each surviving row
    origin: Vec<usize>,
    /// artificial column attached to each surviving row
    art_col: Vec<usize>,
    /// per original constraint: whether the row was negated to make rhs >= 0
    flipped: Vec<bool>,
    var_map: Vec<VarMap>,
    /// internal maximize objective over non-artificial columns
    obj: Vec<Rat>,
    /// reduced costs z_j - c_j for the phase currently running
    zrow: Vec<Rat>,
    zval: Rat,
    pivots: usize,
}

const PIVOT_CAP: usize = 40_000_000;

impl Tableau {
    fn build(spec: &LinearProgramSpec) -> Tableau {
        let n = spec.num_vars();
        let m = spec.num_constraints();

        let mut var_map = Vec::with_capacity(n);
        let mut shifts: Vec<Option<Rat>> = Vec::with_capacity(n);
        let mut col = 0usize;
        for bound in &spec.bounds {
            match bound {
                VarBound::At(l) => {
                    var_map.push(VarMap::Shifted { col });
                    shifts.push(Some(l.clone()));
                    col += 1;
                }
                VarBound::Free => {
                    var_map.push(VarMap::Split {
                        pos: col,
                        neg: col + 1,
                    });
                    shifts.push(None);
                    col += 2;
                }
            }
        }
        let n_struct = col;
        let n_slack = spec
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let art_start = n_struct + n_slack;
        let ncols = art_start + m;

        let sign = match spec.sense {
            Sense::Maximize => Rat::one(),
            Sense::Minimize => -Rat::one(),
        };
        let mut obj = vec![Rat::zero(); ncols];
        for (j, map) in var_map.iter().enumerate() {
            let c = &sign * &spec.objective[j];
            match map {
                VarMap::Shifted { col } => obj[*col] = c,
                VarMap::Split { pos, neg } => {
                    obj[*pos] = c.clone();
                    obj[*neg] = -c;
                }
            }
        }

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut flipped = vec![false; m];
        let mut slack_cursor = n_struct;
        for (k, cons) in spec.constraints.iter().enumerate() {
            let mut row = vec![Rat::zero(); ncols];
            for (j, map) in var_map.iter().enumerate() {
                let a = &cons.coeffs[j];
                if a.is_zero() {
                    continue;
                }
                match map {
                    VarMap::Shifted { col } => row[*col] = a.clone(),
                    VarMap::Split { pos, neg } => {
                        row[*pos] = a.clone();
                        row[*neg] = -a;
                    }
                }
            }
            let mut b = cons.rhs.clone();
            for (j, shift) in shifts.iter().enumerate() {
                if let Some(l) = shift {
                    if !l.is_zero() && !cons.coeffs[j].is_zero() {
                        b -= &cons.coeffs[j] * l;
                    }
                }
            }
            match cons.relation {
                Relation::Le => {
                    row[slack_cursor] = Rat::one();
                    slack_cursor += 1;
                }
                Relation::Ge => {
                    row[slack_cursor] = -Rat::one();
                    slack_cursor += 1;
                }
                Relation::Eq => {}
            }
            if b.is_negative() {
                flipped[k] = true;
                for cell in row.iter_mut() {
                    if !cell.is_zero() {
                        *cell = -cell.clone();
                    }
                }
                b = -b;
            }
            row[art_start + k] = Rat::one();
            rows.push(row);
            rhs.push(b);
        }

        Tableau {
            ncols,
            art_start,
            rows,
            rhs,
            basis: (0..m).map(|k| art_start + k).collect(),
            origin: (0..m).collect(),
            art_col: (0..m).map(|k| art_start + k).collect(),
            flipped,
            var_map,
            obj,
            zrow: vec![Rat::zero(); ncols],
            zval: Rat::zero(),
            pivots: 0,
        }
    }


    fn pivot(&mut self, r: usize, j: usize) {
        self.pivots += 1;
        assert!(self.pivots < PIVOT_CAP, "simplex pivot budget exhausted");
        let pivot = self.rows[r][j].clone();
        debug_assert!(!pivot.is_zero());
        if !pivot.is_one() {
            let inv = pivot.recip();
            for cell in self.rows[r].iter_mut() {
                if !cell.is_zero() {
                    *cell *= &inv;
                }
            }
            self.rhs[r] *= &inv;
        }
        let (pivot_row, pivot_rhs) = (self.rows[r].clone(), self.rhs[r].clone());
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][j].is_zero() {
                continue;
            }
            let factor = self.rows[i][j].clone();
            for (cell, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *cell -= &factor * p;
                }
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        let rc = self.zrow[j].clone();
        if !rc.is_zero() {
            for (cell, p) in self.zrow.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *cell -= &rc * p;
                }
            }
            self.zval -= &rc * &pivot_rhs;
        }
        self.basis[r] = j;
    }

    /// One simplex phase with Bland's rule; artificials never enter.
    /// Returns false when an unbounded ray is detected.
    fn run(&mut self) -> bool {
        loop {
            let mut entering = None;
            for j in 0..self.art_start {
                if self.zrow[j].is_negative() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else {
                return true;
            };
            let mut leaving: Option<usize> = None;
            let mut best: Option<Rat> = None;
            for i in 0..self.rows.len() {
                if !self.rows[i][j].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / &self.rows[i][j];
                let better = match &best {
                    None => true,
                    Some(b) => {
                        ratio < *b
                            || (ratio == *b && self.basis[i] < self.basis[leaving.unwrap()])
                    }
                };
                if better {
                    best = Some(ratio);
                    leaving = Some(i);
                }
            }
            let Some(r) = leaving else {
                return false;
            };
            self.pivot(r, j);
        }
    }

    fn load_phase1_objective(&mut self) {
        // maximize -(sum of artificials); initial basis is the artificials
        for j in 0..self.ncols {
            let mut z = Rat::zero();
            if j < self.art_start {
                for row in &self.rows {
                    if !row[j].is_zero() {
                        z -= &row[j];
                    }
                }
            }
            self.zrow[j] = z;
        }
        self.zval = -self.rhs.iter().sum::<Rat>();
    }

    fn load_phase2_objective(&mut self) {
        let cb: Vec<Rat> = self.basis.iter().map(|&b| self.obj[b].clone()).collect();
        for j in 0..self.ncols {
            let mut z = -self.obj[j].clone();
            for (i, row) in self.rows.iter().enumerate() {
                if !cb[i].is_zero() && !row[j].is_zero() {
                    z += &cb[i] * &row[j];
                }
            }
            self.zrow[j] = z;
        }
        self.zval = Rat::zero();
        for (i, c) in cb.iter().enumerate() {
            if !c.is_zero() {
                self.zval += c * &self.rhs[i];
            }
        }
    }

    /// Phase-one duals with respect to the artificial-sum objective.
    fn phase1_duals(&self) -> Vec<Rat> {
        let mut y = vec![Rat::zero(); self.rows.len()];
        for (i, item) in y.iter_mut().enumerate() {
            let col = self.art_col[i];
            let mut acc = Rat::zero();
            for (r, row) in self.rows.iter().enumerate() {
                if self.basis[r] >= self.art_start && !row[col].is_zero() {
                    acc -= &row[col];
                }
            }
            *item = acc;
        }
        y
    }

    /// Pivots basic artificials out; drops rows proved redundant. Only
    /// equality rows can become redundant (an inequality row always keeps a
    /// nonzero slack entry to pivot on).
    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] < self.art_start {
                r += 1;
                continue;
            }
            debug_assert!(self.rhs[r].is_zero());
            let col = (0..self.art_start).find(|&j| !self.rows[r][j].is_zero());
            match col {
                Some(j) => {
                    self.pivot(r, j);
                    r += 1;
                }
                None => {
                    self.rows.remove(r);
                    self.rhs.remove(r);
                    self.basis.remove(r);
                    self.origin.remove(r);
                    self.art_col.remove(r);
                }
            }
        }
    }

    fn structural_values(&self) -> Vec<Rat> {
        let mut vals = vec![Rat::zero(); self.art_start];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.art_start {
                vals[b] = self.rhs[i].clone();
            }
        }
        vals
    }

    fn user_primal(&self, spec: &LinearProgramSpec) -> Vec<Rat> {
        let vals = self.structural_values();
        self.var_map
            .iter()
            .zip(&spec.bounds)
            .map(|(map, bound)| match (map, bound) {
                (VarMap::Shifted { col }, VarBound::At(l)) => &vals[*col] + l,
                (VarMap::Split { pos, neg }, _) => &vals[*pos] - &vals[*neg],
                (VarMap::Shifted { .. }, VarBound::Free) => unreachable!(),
            })
            .collect()
    }

    /// Maps internal row duals back to the caller's constraints.
    fn user_duals(&self, spec: &LinearProgramSpec, internal: &[Rat]) -> Vec<Rat> {
        let sense_sign = match spec.sense {
            Sense::Maximize => Rat::one(),
            Sense::Minimize => -Rat::one(),
        };
        let mut duals = vec![Rat::zero(); spec.num_constraints()];
        for (i, y) in internal.iter().enumerate() {
            let k = self.origin[i];
            let mut v = &sense_sign * y;
            if self.flipped[k] {
                v = -v;
            }
            duals[k] = v;
        }
        duals
    }

    fn phase2_duals(&self) -> Vec<Rat> {
        let cb: Vec<Rat> = self.basis.iter().map(|&b| self.obj[b].clone()).collect();
        self.art_col
            .iter()
            .map(|&col| {
                let mut acc = Rat::zero();
                for (r, row) in self.rows.iter().enumerate() {
                    if !cb[r].is_zero() && !row[col].is_zero() {
                        acc += &cb[r] * &row[col];
                    }
                }
                acc
            })
            .collect()
    }
}

/// Solves the program exactly. Classification is exact: no tolerances exist
/// anywhere. On `Optimal` the returned solution re-verifies strong duality
/// and complementary slackness as identities before being returned.
pub fn lp_solve(spec: &LinearProgramSpec) -> Result<LpSolution> {
    spec.validate()?;
    let mut t = Tableau::build(spec);
    t.load_phase1_objective();
    let finished = t.run();
    debug_assert!(finished, "phase one cannot be unbounded");
    if t.zval.is_negative() {
        return Ok(LpSolution::non_optimal(LpStatus::Infeasible));
    }
    t.drive_out_artificials();
    t.load_phase2_objective();
    if !t.run() {
        return Ok(LpSolution::non_optimal(LpStatus::Unbounded));
    }
    let primal = t.user_primal(spec);
    let duals = t.user_duals(spec, &t.phase2_duals());
    let reduced_costs: Vec<Rat> = (0..spec.num_vars())
        .map(|j| {
            let mut rho = spec.objective[j].clone();
            for (k, c) in spec.constraints.iter().enumerate() {
                if !c.coeffs[j].is_zero() && !duals[k].is_zero() {
                    rho -= &duals[k] * &c.coeffs[j];
                }
            }
            rho
        })
        .collect();
    let objective = dot(&spec.objective, &primal);
    let solution = LpSolution {
        status: LpStatus::Optimal,
        primal,
        duals,
        reduced_costs,
        objective,
    };
    if let Err(why) = solution.verify(spec) {
        panic!("exact solver produced an invalid optimum: {why}");
    }
    Ok(solution)
}

/// Decides feasibility of the constraint system (the objective is ignored)
/// and returns either an exact feasible point or an exact infeasibility
/// certificate — never both, never neither.
pub fn farkas_certificate(spec: &LinearProgramSpec) -> Result<FeasibilityOutcome> {
    spec.validate()?;
    let mut t = Tableau::build(spec);
    t.load_phase1_objective();
    let finished = t.run();
    debug_assert!(finished);
    if t.zval.is_negative() {
        let internal = t.phase1_duals();
        let base = t.user_duals(spec, &internal);
        let multipliers: Vec<Rat> = base
            .into_iter()
            .zip(&spec.constraints)
            .map(|(lambda, c)| match c.relation {
                Relation::Le | Relation::Eq => lambda,
                Relation::Ge => -lambda,
            })
            .collect();
        let cert = FarkasCertificate { multipliers };
        assert!(
            cert.verify(spec),
            "phase one reported infeasibility but produced an invalid certificate"
        );
        return Ok(FeasibilityOutcome::Infeasible(cert));
    }
    let point = t.user_primal(spec);
    for (k, c) in spec.constraints.iter().enumerate() {
        let lhs = dot(&c.coeffs, &point);
        let ok = match c.relation {
            Relation::Le => lhs <= c.rhs,
            Relation::Eq => lhs == c.rhs,
            Relation::Ge => lhs >= c.rhs,
        };
        assert!(ok, "phase one produced an infeasible point at row {k}");
    }
    Ok(FeasibilityOutcome::Feasible(point))
}
