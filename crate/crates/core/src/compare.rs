//! The comparison machinery between the two constructions: a lifting-lemma
//! extension step, the explicit build of a minimal model on top of a
//! weakly-closed acyclic closure, and the verifiers for the induced
//! chain-map, quasi-isomorphism and indecomposable exact-sequence claims.
//!
//! For each closure variable `y` the model receives `x0(y)` with boundary a
//! decomposable cycle lifting `d(y)`. Even-degree `y` additionally spawn a
//! tower inside the window:
//!
//! ```text
//!   d(x_i(y))  = z * x_0(y)^(p-1) * ... * x_{i-1}(y)^(p-1)
//!   d(x_i'(y)) = x_{i-1}(y)^p          (the p * x_i(y) term vanishes mod p)
//! ```
//!
//! mapped by `x_i(y) -> d_i y^(p^i)` and `x_i'(y) -> 0`.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use crate::coeffs::{coeff_d, FieldScalar};
use crate::dga::{DgElement, NormalMonomial, SemifreeExtension, VarId, VarKind, Window};
use crate::error::{EngineError, Result};
use crate::linalg::{Echelon, SparseVec, TrackedReducer};
use crate::resolve::{boundary_matrices, Adjunction, BidegreeBasis, Flavor, ResolutionBuild};
use crate::ring::Polynomial;

/// Which role a model variable plays relative to the closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarFamily {
    /// `x_0(y)`: degree of `y`
    X0 { y: VarId },
    /// `x_i(y)`, `i >= 1`: degree `|y| p^i`
    Xi { y: VarId, i: u32 },
    /// `x_i'(y)`, `i >= 1`: degree `|y| p^i + 1`
    XiPrime { y: VarId, i: u32 },
}

/// The comparison map from a model onto a closure, as variable assignments.
#[derive(Debug, Clone)]
pub struct ComparisonMap {
    /// model variable -> its image in the closure
    pub assignment: BTreeMap<VarId, DgElement>,
    /// closure variable y -> the chosen cycle in the model lifting d(y)
    pub lifts: BTreeMap<VarId, DgElement>,
    /// model variable -> family tag
    pub family: BTreeMap<VarId, VarFamily>,
}

/// Evaluates the algebra map determined by `assignment` on elements of the
/// source extension. Variable powers are memoized.
pub struct Applier<'a> {
    pub source: &'a SemifreeExtension,
    pub target: &'a SemifreeExtension,
    pub assignment: &'a BTreeMap<VarId, DgElement>,
    cache: RefCell<HashMap<(VarId, u32), DgElement>>,
}

impl<'a> Applier<'a> {
    pub fn new(
        source: &'a SemifreeExtension,
        target: &'a SemifreeExtension,
        assignment: &'a BTreeMap<VarId, DgElement>,
    ) -> Self {
        Applier { source, target, assignment, cache: RefCell::new(HashMap::new()) }
    }

    fn power(&self, id: VarId, exp: u32) -> DgElement {
        if let Some(hit) = self.cache.borrow().get(&(id, exp)) {
            return hit.clone();
        }
        let value = if exp == 1 {
            self.assignment
                .get(&id)
                .cloned()
                .unwrap_or_else(|| panic!("no assignment for source variable {id}"))
        } else {
            let lower = self.power(id, exp - 1);
            let base = self.power(id, 1);
            self.target.multiply_exact(&lower, &base)
        };
        self.cache.borrow_mut().insert((id, exp), value.clone());
        value
    }

    /// Image of an element of the source under the algebra map.
    pub fn apply(&self, u: &DgElement) -> DgElement {
        let mut out = DgElement::zero(u.hdeg, u.ideg);
        for (m, c) in &u.terms {
            let mut acc = self
                .target
                .element_from_ring(c)
                .expect("coefficients are homogeneous");
            for &(id, exp) in &m.factors {
                if acc.is_zero() {
                    break;
                }
                acc = self.target.multiply_exact(&acc, &self.power(id, exp));
            }
            acc.hdeg = u.hdeg;
            acc.ideg = u.ideg;
            out = self.target.add(&out, &acc);
        }
        out
    }
}

/// Extend a dg-algebra map along one variable adjunction: given a cycle `z`
/// in the source and `b` in the target with `map(z) = d(b)`, adjoin a
/// variable with boundary `z` and send it to `b`. Fails with
/// `PreimageMismatch` when the defining equation does not hold.
pub fn extend_map_by_variable(
    source: &mut SemifreeExtension,
    target: &SemifreeExtension,
    assignment: &mut BTreeMap<VarId, DgElement>,
    name: String,
    kind: VarKind,
    hdeg: u32,
    z: DgElement,
    b: DgElement,
) -> Result<VarId> {
    let image_of_z = {
        let applier = Applier::new(source, target, assignment);
        applier.apply(&z)
    };
    let db = target.differential(&b);
    if image_of_z != db {
        return Err(EngineError::PreimageMismatch(format!(
            "map(z) = {} but d(b) = {}",
            target.format_element(&image_of_z),
            target.format_element(&db)
        )));
    }
    let id = source.adjoin_variable(name, kind, hdeg, z)?;
    assignment.insert(id, b);
    Ok(id)
}

/// Find a cycle in the model, supported on decomposable basis vectors, that
/// maps onto `z` under the partial comparison map: solve `[map; d] w = [z; 0]`
/// with columns restricted to the decomposable pairs, taking the
/// deterministic echelon solution.
fn lift_cycle(
    model: &SemifreeExtension,
    closure: &SemifreeExtension,
    assignment: &BTreeMap<VarId, DgElement>,
    z: &DgElement,
) -> Result<DgElement> {
    if z.hdeg == 0 {
        let poly = z
            .terms
            .get(&NormalMonomial::one())
            .cloned()
            .unwrap_or_else(Polynomial::zero);
        let mut elem = model.element_from_ring(&poly)?;
        elem.ideg = z.ideg;
        return Ok(elem);
    }
    let p = model.p();
    let (h, e) = (z.hdeg, z.ideg);
    let dom = BidegreeBasis::new(model, h, e);
    let tgt = BidegreeBasis::new(closure, h, e);
    let cod = BidegreeBasis::new(model, h - 1, e);
    let applier = Applier::new(model, closure, assignment);
    let offset = tgt.len();
    let mut tracked = TrackedReducer::new(p);
    for (j, (m, s)) in dom.pairs.iter().enumerate() {
        let decomposable = !s.is_one() || m.total_exponent() >= 2;
        if !decomposable {
            continue;
        }
        let elem =
            model.element_from_monomial(&Polynomial::monomial(FieldScalar::ONE, s.clone()), m);
        let image = applier.apply(&elem);
        let de = model.differential(&elem);
        let mut stacked = tgt.flatten(&image).entries;
        stacked.extend(
            cod.flatten(&de)
                .entries
                .into_iter()
                .map(|(i, c)| (i + offset, c)),
        );
        tracked.insert(j, &SparseVec::from_entries(stacked));
    }
    let rhs = tgt.flatten(z);
    let combo = tracked.express(&rhs).ok_or_else(|| {
        EngineError::NotWeaklyClosed(format!(
            "no decomposable cycle in the model lifts {} at bidegree ({h},{e})",
            closure.format_element(z)
        ))
    })?;
    Ok(dom.unflatten(model, &combo))
}

/// Build the minimal model of a weakly-closed map directly from its acyclic
/// closure, together with the comparison map onto the closure.
pub fn comparison_from_closure(
    closure: &ResolutionBuild,
    window: Window,
) -> Result<(ResolutionBuild, ComparisonMap)> {
    if closure.flavor != Flavor::AcyclicClosure {
        return Err(EngineError::Schema(
            "comparison must start from an acyclic closure".into(),
        ));
    }
    let (weakly, witness) = crate::classify::is_weakly_closed(closure);
    if !weakly {
        return Err(EngineError::NotWeaklyClosed(witness.unwrap_or_default()));
    }
    let p = closure.ext.p();
    let certified_d = closure.certified_d();
    let mut model = SemifreeExtension::new(closure.ext.base.clone(), window);
    let mut assignment: BTreeMap<VarId, DgElement> = BTreeMap::new();
    let mut lifts = BTreeMap::new();
    let mut family = BTreeMap::new();
    let mut log = Vec::new();

    let mut ys: Vec<VarId> = closure.ext.vars().iter().map(|v| v.id).collect();
    ys.sort_by_key(|&id| closure.ext.rank(id));
    for yid in ys {
        let y = closure.ext.var(yid).clone();
        let z = y.boundary.clone();
        let ztilde = lift_cycle(&model, &closure.ext, &assignment, &z)?;
        let kind = if y.hdeg % 2 == 1 { VarKind::Exterior } else { VarKind::Polynomial };
        let x0 = extend_map_by_variable(
            &mut model,
            &closure.ext,
            &mut assignment,
            format!("x0_{}", y.name),
            kind,
            y.hdeg,
            ztilde.clone(),
            closure.ext.variable_element(yid),
        )?;
        lifts.insert(yid, ztilde.clone());
        family.insert(x0, VarFamily::X0 { y: yid });
        log.push(Adjunction { var: x0, killed: ztilde.clone() });
        if y.hdeg % 2 == 1 {
            continue;
        }
        // tower over an even variable
        let mut tower: Vec<VarId> = vec![x0];
        let mut i = 1u32;
        let mut pe: u64 = 1;
        loop {
            pe = pe.saturating_mul(p.get() as u64);
            let hi64 = y.hdeg as u64 * pe;
            if hi64 > window.n as u64 {
                break;
            }
            let hi = hi64 as u32;
            let idegi64 = y.ideg as u64 * pe;
            if idegi64 > certified_d as u64 {
                return Err(EngineError::WindowTooSmall(format!(
                    "tower variable over {} at internal degree {idegi64} lies beyond the \
                     certified bound {certified_d}",
                    y.name
                )));
            }
            let idegi = idegi64 as u32;
            // d(x_i) = z * x_0^(p-1) ... x_{i-1}^(p-1)
            let mut boundary = ztilde.clone();
            for &xj in &tower {
                let base = model.variable_element(xj);
                let mut pw = base.clone();
                for _ in 1..p.get() - 1 {
                    pw = model.multiply_exact(&pw, &base);
                }
                boundary = model.multiply_exact(&boundary, &pw);
            }
            let image = closure.ext.scale(
                &closure.ext.element_from_monomial(
                    &Polynomial::constant(FieldScalar::ONE, closure.ext.base.nvars()),
                    &NormalMonomial::power(yid, pe as u32),
                ),
                coeff_d(i, p),
            );
            let xi = extend_map_by_variable(
                &mut model,
                &closure.ext,
                &mut assignment,
                format!("x{i}_{}", y.name),
                VarKind::Polynomial,
                hi,
                boundary.clone(),
                image,
            )?;
            family.insert(xi, VarFamily::Xi { y: yid, i });
            log.push(Adjunction { var: xi, killed: boundary });
            // d(x_i') = x_{i-1}^p, mapped to zero
            let hpi = hi + 1;
            if hpi <= window.n {
                let prev = *tower.last().unwrap();
                let base = model.variable_element(prev);
                let mut pw = base.clone();
                for _ in 1..p.get() {
                    pw = model.multiply_exact(&pw, &base);
                }
                let xip = extend_map_by_variable(
                    &mut model,
                    &closure.ext,
                    &mut assignment,
                    format!("x{i}p_{}", y.name),
                    VarKind::Exterior,
                    hpi,
                    pw.clone(),
                    DgElement::zero(hpi, idegi),
                )?;
                family.insert(xip, VarFamily::XiPrime { y: yid, i });
                log.push(Adjunction { var: xip, killed: pw });
            }
            tower.push(xi);
            i += 1;
        }
    }
    let build = ResolutionBuild {
        ext: model,
        map: closure.map.clone(),
        flavor: Flavor::MinimalModel,
        adjunction_log: log,
        window,
        guard: closure.guard,
    };
    let cmp = ComparisonMap { assignment, lifts, family };
    Ok((build, cmp))
}

/// Per-variable commutation check `map(d v) = d(map v)`.
#[derive(Debug, Clone)]
pub struct ChainMapReport {
    pub ok: bool,
    pub checked: usize,
    pub first_failure: Option<String>,
}

pub fn verify_chain_map(
    model: &ResolutionBuild,
    closure: &ResolutionBuild,
    cmp: &ComparisonMap,
) -> ChainMapReport {
    let applier = Applier::new(&model.ext, &closure.ext, &cmp.assignment);
    let mut checked = 0usize;
    for v in model.ext.vars() {
        let lhs = applier.apply(&v.boundary);
        let rhs = closure.ext.differential(
            cmp.assignment
                .get(&v.id)
                .expect("every model variable carries an assignment"),
        );
        checked += 1;
        if lhs != rhs {
            return ChainMapReport {
                ok: false,
                checked,
                first_failure: Some(format!(
                    "{}: map(d {}) = {} but d(map {}) = {}",
                    v.name,
                    v.name,
                    closure.ext.format_element(&lhs),
                    v.name,
                    closure.ext.format_element(&rhs)
                )),
            };
        }
    }
    ChainMapReport { ok: true, checked, first_failure: None }
}

/// Bidegreewise surjectivity of the comparison map plus bijectivity of the
/// induced map on homology for homological degrees up to `N - 1`, inside
/// the certified internal window.
#[derive(Debug, Clone)]
pub struct QuasiIsoReport {
    pub ok: bool,
    pub certified_d: u32,
    pub surjectivity_failures: Vec<(u32, u32)>,
    pub homology_failures: Vec<(u32, u32, String)>,
}

pub fn verify_quasi_iso(
    model: &ResolutionBuild,
    closure: &ResolutionBuild,
    cmp: &ComparisonMap,
) -> QuasiIsoReport {
    let p = model.ext.p();
    let certified_d = model.certified_d().min(closure.certified_d());
    let applier = Applier::new(&model.ext, &closure.ext, &cmp.assignment);
    let mut surj = Vec::new();
    let mut homl = Vec::new();
    for h in 0..model.window.n {
        let model_mats = boundary_matrices(&model.ext, h, certified_d);
        let model_above = boundary_matrices(&model.ext, h + 1, certified_d);
        let closure_mats = boundary_matrices(&closure.ext, h, certified_d);
        let closure_above = boundary_matrices(&closure.ext, h + 1, certified_d);
        for e in 0..=certified_d {
            let dom = &model_mats[&e].dom;
            let tgt = &closure_mats[&e].dom;
            // images of the model basis
            let images: Vec<SparseVec> = dom
                .pairs
                .iter()
                .map(|(m, s)| {
                    let elem = model.ext.element_from_monomial(
                        &Polynomial::monomial(FieldScalar::ONE, s.clone()),
                        m,
                    );
                    tgt.flatten(&applier.apply(&elem))
                })
                .collect();
            // surjectivity via echelon of the map's matrix
            let mut image_ech = Echelon::new(p, tgt.len());
            for col in &images {
                image_ech.insert(col);
            }
            if image_ech.rank() != tgt.len() {
                surj.push((h, e));
            }
            // induced map on homology
            let z_src: Vec<SparseVec> = if h == 0 {
                (0..dom.len()).map(SparseVec::unit).collect()
            } else {
                model_mats[&e].matrix.kernel_basis()
            };
            let b_src = model_above[&e].matrix.image_echelon();
            let b_tgt = closure_above[&e].matrix.image_echelon();
            let z_tgt_count: usize = if h == 0 {
                tgt.len()
            } else {
                closure_mats[&e].matrix.kernel_basis().len()
            };
            let h_tgt = z_tgt_count - b_tgt.rank();
            let mut src_classes = Echelon::new(p, dom.len());
            for row in b_src.rows() {
                src_classes.insert(row);
            }
            let mut mapped = Echelon::new(p, tgt.len());
            for row in b_tgt.rows() {
                mapped.insert(row);
            }
            let mut h_src = 0usize;
            let mut injective = true;
            for zv in &z_src {
                if src_classes.insert(zv).is_none() {
                    continue; // boundary or dependent on previous classes
                }
                h_src += 1;
                let mut img = SparseVec::zero();
                for &(jj, c) in &zv.entries {
                    img = img.add_scaled(&images[jj], c, p);
                }
                if mapped.insert(&img).is_none() {
                    injective = false;
                }
            }
            if !injective || h_src != h_tgt {
                homl.push((
                    h,
                    e,
                    format!("dim H_src = {h_src}, dim H_tgt = {h_tgt}, injective = {injective}"),
                ));
            }
        }
    }
    QuasiIsoReport {
        ok: surj.is_empty() && homl.is_empty(),
        certified_d,
        surjectivity_failures: surj,
        homology_failures: homl,
    }
}

/// The indecomposable bookkeeping: in each degree `d`,
/// `dim ind(model) = dim Γ-ind(closure) + pinf_d + pinf_{d-1}`, and the
/// kernel of the induced map on indecomposables is spanned exactly by the
/// tower variables.
#[derive(Debug, Clone)]
pub struct ExactSequenceReport {
    pub ok: bool,
    /// degree -> (lhs, y-part, pinf_d, pinf_{d-1})
    pub dims: BTreeMap<u32, (usize, usize, usize, usize)>,
    pub dim_failures: Vec<u32>,
    pub kernel_failures: Vec<u32>,
}

pub fn exact_sequence_check(
    model: &ResolutionBuild,
    closure: &ResolutionBuild,
    cmp: &ComparisonMap,
) -> Result<ExactSequenceReport> {
    let p = model.ext.p();
    let ind = model.ext.indecomposables()?;
    let gind = closure.ext.gamma_indecomposables()?;
    let closure_ind = closure.ext.indecomposables()?;
    let pinf = closure.ext.y_p_infinity(&closure_ind);
    let applier = Applier::new(&model.ext, &closure.ext, &cmp.assignment);
    let mut dims = BTreeMap::new();
    let mut dim_failures = Vec::new();
    let mut kernel_failures = Vec::new();
    for d in 1..=model.window.n {
        let lhs = ind.dim(d);
        let y_part = gind.dim(d);
        let pd = pinf.iter().filter(|c| c.hdeg == d).count();
        let pd1 = pinf.iter().filter(|c| c.hdeg + 1 == d).count();
        dims.insert(d, (lhs, y_part, pd, pd1));
        if lhs != y_part + pd + pd1 {
            dim_failures.push(d);
        }
        // kernel of ind(map): tower variables must map to zero classes,
        // x0 variables to independent Γ-classes
        let model_vars = model.ext.variables_of_hdeg(d);
        let gind_basis = &gind.basis[&d];
        let mut image_ech = Echelon::new(p, gind_basis.len().max(1));
        let mut x0_rank = 0usize;
        let mut tower_ok = true;
        for v in &model_vars {
            let img = applier.apply(&model.ext.variable_element(v.id));
            // class in Γ-ind: unit-coefficient variable terms only
            let mut entries = Vec::new();
            for (m, c) in &img.terms {
                if m.total_exponent() >= 2 {
                    continue;
                }
                if let Some((s, _)) = c.terms.iter().find(|(_, rm)| rm.is_one()) {
                    if let Some(row) = gind_basis.iter().position(|b| b == m) {
                        entries.push((row, *s));
                    }
                }
            }
            let class = SparseVec::from_entries(entries);
            match cmp.family.get(&v.id) {
                Some(VarFamily::X0 { .. }) => {
                    if image_ech.insert(&class).is_some() {
                        x0_rank += 1;
                    }
                }
                Some(_) => {
                    if !class.is_zero() {
                        tower_ok = false;
                    }
                }
                None => {
                    return Err(EngineError::Internal(format!(
                        "variable {} has no family tag",
                        v.name
                    )))
                }
            }
        }
        let x0_count = model_vars
            .iter()
            .filter(|v| matches!(cmp.family.get(&v.id), Some(VarFamily::X0 { .. })))
            .count();
        if !(tower_ok && x0_rank == x0_count && x0_rank == y_part) {
            kernel_failures.push(d);
        }
    }
    Ok(ExactSequenceReport {
        ok: dim_failures.is_empty() && kernel_failures.is_empty(),
        dims,
        dim_failures,
        kernel_failures,
    })
}
