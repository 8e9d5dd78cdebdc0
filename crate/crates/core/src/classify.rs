//! Structural predicates on acyclic closures (closed, weakly-closed,
//! complete intersection, quasi-complete intersection), deviation tables
//! with the case-formula cross-check, the numeric rigidity checks on
//! deviations, and the truncated Poincaré product identity.

use std::collections::BTreeMap;

use crate::dga::VarKind;
use crate::error::Result;
use crate::resolve::{Flavor, ResolutionBuild};

/// Window-relative verdicts: predicates on a truncated build can be
/// affirmed, refuted, or out of reach of the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriState {
    True,
    False,
    NotTestable,
}

impl TriState {
    pub fn as_str(self) -> &'static str {
        match self {
            TriState::True => "true",
            TriState::False => "false",
            TriState::NotTestable => "not-testable-in-window",
        }
    }
}

/// `true` when every boundary lies in `m * R<Y>`; the witness is the first
/// unit-coefficient term found otherwise.
pub fn is_closed(build: &ResolutionBuild) -> (bool, Option<String>) {
    for v in build.ext.vars() {
        for (m, c) in &v.boundary.terms {
            if c.terms.iter().any(|(_, rm)| rm.is_one()) {
                let ext = &build.ext;
                return (
                    false,
                    Some(format!(
                        "d({}) contains the unit-coefficient term {}",
                        v.name,
                        ext.format_element(&ext.element_from_monomial(
                            &crate::ring::Polynomial::constant(
                                crate::coeffs::FieldScalar::ONE,
                                ext.base.nvars()
                            ),
                            m
                        ))
                    )),
                );
            }
        }
    }
    (true, None)
}

/// `true` when every boundary lies in `m * R<Y> + (Y)^2`. Equivalently, no
/// boundary contains a unit multiple of a bare variable or of a divided
/// power `y^(p^i)` with `i >= 1`; every other monomial of exponent at
/// least two factors with a unit binomial.
pub fn is_weakly_closed(build: &ResolutionBuild) -> (bool, Option<String>) {
    let p = build.ext.p().get();
    for v in build.ext.vars() {
        for (m, c) in &v.boundary.terms {
            let has_unit = c.terms.iter().any(|(_, rm)| rm.is_one());
            if !has_unit {
                continue;
            }
            let obstruction = match m.factors.as_slice() {
                [] => false,
                [(_, 1)] => true, // bare variable with a unit coefficient
                [(id, e)] => {
                    build.ext.var(*id).kind == VarKind::Divided && is_power_of(*e, p)
                }
                _ => false,
            };
            if obstruction {
                let (id, e) = m.factors[0];
                let name = &build.ext.var(id).name;
                return (
                    false,
                    Some(if e == 1 {
                        format!("d({}) contains a unit multiple of {}", v.name, name)
                    } else {
                        format!("d({}) contains a unit multiple of {}^({})", v.name, name, e)
                    }),
                );
            }
        }
    }
    (true, None)
}

fn is_power_of(mut n: u32, p: u32) -> bool {
    if n < p {
        return false;
    }
    while n % p == 0 {
        n /= p;
    }
    n == 1
}

/// Complete intersection within the window: `Y_i` empty for `i >= 2`.
pub fn is_ci(build: &ResolutionBuild) -> TriState {
    if build.window.n < 2 {
        return TriState::NotTestable;
    }
    let counts = build.variable_counts();
    if counts[2..].iter().all(|&c| c == 0) {
        TriState::True
    } else {
        TriState::False
    }
}

/// Quasi-complete intersection within the window: `Y_i` empty for `i >= 3`.
pub fn is_qci(build: &ResolutionBuild) -> TriState {
    if build.window.n < 3 {
        return TriState::NotTestable;
    }
    let counts = build.variable_counts();
    if counts[3..].iter().all(|&c| c == 0) {
        TriState::True
    } else {
        TriState::False
    }
}

/// Everything the predicates say about one closure, with witnesses.
#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub closed: bool,
    pub closed_witness: Option<String>,
    pub weakly_closed: bool,
    pub weakly_closed_witness: Option<String>,
    pub ci: TriState,
    pub qci: TriState,
    pub window_n: u32,
    pub certified_d: u32,
}

pub fn classify(build: &ResolutionBuild) -> ClassificationReport {
    let (closed, closed_witness) = is_closed(build);
    let (weakly_closed, weakly_closed_witness) = is_weakly_closed(build);
    ClassificationReport {
        closed,
        closed_witness,
        weakly_closed,
        weakly_closed_witness,
        ci: is_ci(build),
        qci: is_qci(build),
        window_n: build.window.n,
        certified_d: build.certified_d(),
    }
}

/// Deviations from the model, Γ-deviations from the closure, and the
/// prediction of the former from the latter through the case formula
///
/// ```text
///   eps_i = sum_{s=0}^{t} gdev_{2 j p^s + 1}                   i = 2 j p^t + 1
///   eps_i = gdev_i + sum_{s=0}^{t-1} gdev_{2 j p^s + 1}        i = 2 j p^t + 2
///   eps_i = gdev_i                                             otherwise
/// ```
///
/// with `p` coprime to `j` and `t` maximal. Index convention: `eps_i`
/// counts the model variables of homological degree `i - 1`, `gdev_i` the
/// closure variables of degree `i - 1`.
#[derive(Debug, Clone)]
pub struct DeviationTable {
    pub eps: BTreeMap<u32, usize>,
    pub gamma: BTreeMap<u32, usize>,
    pub eps_predicted: BTreeMap<u32, usize>,
    /// largest index the window certifies (N + 1)
    pub certified_through: u32,
}

pub fn deviations(model: &ResolutionBuild, closure: &ResolutionBuild) -> DeviationTable {
    assert_eq!(model.flavor, Flavor::MinimalModel);
    assert_eq!(closure.flavor, Flavor::AcyclicClosure);
    let p = closure.ext.p().get();
    let mcounts = model.variable_counts();
    let ccounts = closure.variable_counts();
    let bound = model.window.n.min(closure.window.n) + 1;
    let mut eps = BTreeMap::new();
    let mut gamma = BTreeMap::new();
    for i in 2..=bound {
        eps.insert(i, mcounts[(i - 1) as usize]);
        gamma.insert(i, ccounts[(i - 1) as usize]);
    }
    let mut eps_predicted = BTreeMap::new();
    for i in 2..=bound {
        eps_predicted.insert(i, predict_eps(&gamma, p, i));
    }
    DeviationTable { eps, gamma, eps_predicted, certified_through: bound }
}

/// Γ-deviations alone, when no model is available.
pub fn gamma_deviations(closure: &ResolutionBuild) -> BTreeMap<u32, usize> {
    let ccounts = closure.variable_counts();
    (2..=closure.window.n + 1)
        .map(|i| (i, ccounts[(i - 1) as usize]))
        .collect()
}

fn v_p(mut m: u32, p: u32) -> u32 {
    let mut t = 0;
    while m % p == 0 {
        m /= p;
        t += 1;
    }
    t
}

/// The case formula, reading missing Γ-deviations as zero.
pub fn predict_eps(gamma: &BTreeMap<u32, usize>, p: u32, i: u32) -> usize {
    let g = |idx: u32| gamma.get(&idx).copied().unwrap_or(0);
    if i < 2 {
        return 0;
    }
    if i % 2 == 1 {
        // i = 2 m + 1 = 2 j p^t + 1
        let m = (i - 1) / 2;
        if m == 0 {
            return g(i);
        }
        let t = v_p(m, p);
        let j = m / p.pow(t);
        (0..=t).map(|s| g(2 * j * p.pow(s) + 1)).sum()
    } else {
        // i = 2 m + 2 = 2 j p^t + 2
        let m = (i - 2) / 2;
        if m == 0 {
            return g(i);
        }
        let t = v_p(m, p);
        let j = m / p.pow(t);
        g(i) + (0..t).map(|s| g(2 * j * p.pow(s) + 1)).sum::<usize>()
    }
}

/// The indices `2 p^t + 1` and `2 p^t + 2` with `t >= 1`, up to `bound`.
pub fn special_indices(p: u32, bound: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut q = p as u64;
    loop {
        let a = 2 * q + 1;
        if a > bound as u64 {
            break;
        }
        out.push(a as u32);
        if a + 1 <= bound as u64 {
            out.push(a as u32 + 1);
        }
        q *= p as u64;
    }
    out
}

/// CI rigidity: (1) the CI predicate on the closure, (2) vanishing of the
/// deviations on the upper half of the window, (3) vanishing at some index
/// `2 p^t + 1` or `2 p^t + 2`, `t >= 1`. The three agree for weakly-closed
/// maps.
#[derive(Debug, Clone)]
pub struct CiRigidityReport {
    pub ci: TriState,
    pub tail_vanishes: TriState,
    pub tail_range: (u32, u32),
    pub special_vanishes: TriState,
    pub special_indices: Vec<u32>,
    pub consistent: bool,
}

pub fn check_ci_rigidity(table: &DeviationTable, closure: &ResolutionBuild) -> CiRigidityReport {
    let p = closure.ext.p().get();
    let n = closure.window.n;
    let ci = is_ci(closure);
    let lo = n / 2 + 1;
    let hi = n;
    let tail_vanishes = if lo > hi {
        TriState::NotTestable
    } else if (lo..=hi).all(|i| table.eps.get(&i).copied().unwrap_or(0) == 0) {
        TriState::True
    } else {
        TriState::False
    };
    let idxs = special_indices(p, table.certified_through);
    let special_vanishes = if idxs.is_empty() {
        TriState::NotTestable
    } else if idxs
        .iter()
        .any(|i| table.eps.get(i).copied().unwrap_or(0) == 0)
    {
        TriState::True
    } else {
        TriState::False
    };
    // agreement among the conditions the window can actually test
    let testable: Vec<TriState> = [ci, tail_vanishes, special_vanishes]
        .into_iter()
        .filter(|t| *t != TriState::NotTestable)
        .collect();
    let consistent = testable.windows(2).all(|w| w[0] == w[1]);
    CiRigidityReport {
        ci,
        tail_vanishes,
        tail_range: (lo, hi),
        special_vanishes,
        special_indices: idxs,
        consistent,
    }
}

/// QCI rigidity: for `4 <= i <= bound` the deviations match
/// `eps_i = eps_3` at the special indices and vanish elsewhere, if and
/// only if the closure is quasi-complete intersection.
#[derive(Debug, Clone)]
pub struct QciRigidityReport {
    pub qci: TriState,
    pub pattern_holds: TriState,
    pub first_violation: Option<(u32, usize, usize)>,
    pub consistent: bool,
}

pub fn check_qci_rigidity(table: &DeviationTable, closure: &ResolutionBuild) -> QciRigidityReport {
    let p = closure.ext.p().get();
    let qci = is_qci(closure);
    let eps3 = table.eps.get(&3).copied().unwrap_or(0);
    let specials = special_indices(p, table.certified_through);
    let mut pattern = TriState::True;
    let mut first_violation = None;
    if table.certified_through < 4 {
        pattern = TriState::NotTestable;
    } else {
        for i in 4..=table.certified_through {
            let want = if specials.contains(&i) { eps3 } else { 0 };
            let got = table.eps.get(&i).copied().unwrap_or(0);
            if got != want {
                pattern = TriState::False;
                first_violation = Some((i, got, want));
                break;
            }
        }
    }
    let consistent = match (qci, pattern) {
        (TriState::NotTestable, _) | (_, TriState::NotTestable) => true,
        (a, b) => a == b,
    };
    QciRigidityReport { qci, pattern_holds: pattern, first_violation, consistent }
}

/// Truncated generating-function identity: the number of normal
/// (Γ-)monomials of homological degree `d` equals the coefficient of `t^d`
/// in `prod_odd (1+t^j)^{c_j} * prod_even (1-t^j)^{-c_j}`, where `c_j`
/// counts the variables of degree `j`.
#[derive(Debug, Clone)]
pub struct PoincareReport {
    pub ok: bool,
    pub monomial_counts: Vec<u64>,
    pub product_series: Vec<u64>,
}

pub fn poincare_check(build: &ResolutionBuild) -> PoincareReport {
    let n = build.window.n as usize;
    let monomial_counts: Vec<u64> = (0..=n as u32)
        .map(|h| build.ext.monomials_of_hdeg(h).len() as u64)
        .collect();
    let counts = build.variable_counts();
    let mut series = vec![0u64; n + 1];
    series[0] = 1;
    for (j, &c) in counts.iter().enumerate().skip(1) {
        for _ in 0..c {
            if j % 2 == 1 {
                // multiply by (1 + t^j)
                let mut next = series.clone();
                for d in j..=n {
                    next[d] += series[d - j];
                }
                series = next;
            } else {
                // multiply by 1/(1 - t^j) = sum_k t^{jk}
                let mut next = series.clone();
                for d in j..=n {
                    next[d] += next[d - j];
                }
                series = next;
            }
        }
    }
    PoincareReport {
        ok: monomial_counts == series,
        monomial_counts,
        product_series: series,
    }
}

/// Model deviations must match the prediction from Γ-deviations on every
/// index the window certifies.
pub fn deviations_consistent(table: &DeviationTable) -> Result<Vec<u32>> {
    let mut mismatches = Vec::new();
    for i in 2..=table.certified_through {
        let a = table.eps.get(&i).copied().unwrap_or(0);
        let b = table.eps_predicted.get(&i).copied().unwrap_or(0);
        if a != b {
            mismatches.push(i);
        }
    }
    Ok(mismatches)
}
