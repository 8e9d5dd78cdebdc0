//! Weighted-homogeneous quotient rings `R = F_p[x_1..x_n]/I` with normal
//! forms, graded bases, and presentations of surjective maps `R -> S`.
//!
//! The monomial order is fixed: weighted degree first, ties broken by
//! reverse lexicographic comparison in a fixed generator order. All ideals
//! are homogeneous, which both guarantees Buchberger termination and keeps
//! every computation graded.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::coeffs::{FieldScalar, PrimeP};
use crate::error::{EngineError, Result};
use crate::linalg::Echelon;

/// Exponent vector over the ring generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub exps: Vec<u32>,
}

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial { exps: vec![0; nvars] }
    }

    pub fn is_one(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    pub fn weighted_degree(&self, weights: &[u32]) -> u32 {
        self.exps
            .iter()
            .zip(weights)
            .map(|(&e, &w)| e * w)
            .sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(&other.exps).all(|(&a, &b)| a <= b)
    }

    pub fn div(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(&a, &b)| a.max(b))
                .collect(),
        }
    }
}

/// Weighted-degree-then-reverse-lexicographic comparison. With equal
/// weighted degrees, the monomial whose last differing exponent is smaller
/// is the larger one.
pub fn cmp_monomials(a: &Monomial, b: &Monomial, weights: &[u32]) -> Ordering {
    let (da, db) = (a.weighted_degree(weights), b.weighted_degree(weights));
    match da.cmp(&db) {
        Ordering::Equal => {}
        ord => return ord,
    }
    for i in (0..a.exps.len()).rev() {
        match a.exps[i].cmp(&b.exps[i]) {
            Ordering::Equal => continue,
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
        }
    }
    Ordering::Equal
}

/// Homogeneous polynomial over F_p: terms sorted descending in the monomial
/// order, no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    pub terms: Vec<(FieldScalar, Monomial)>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant(c: FieldScalar, nvars: usize) -> Self {
        if c.is_zero() {
            Polynomial::zero()
        } else {
            Polynomial { terms: vec![(c, Monomial::one(nvars))] }
        }
    }

    pub fn monomial(c: FieldScalar, m: Monomial) -> Self {
        if c.is_zero() {
            Polynomial::zero()
        } else {
            Polynomial { terms: vec![(c, m)] }
        }
    }

    pub fn leading(&self) -> Option<&(FieldScalar, Monomial)> {
        self.terms.first()
    }

    fn normalize(mut terms: Vec<(FieldScalar, Monomial)>, p: PrimeP, weights: &[u32]) -> Polynomial {
        terms.sort_by(|a, b| cmp_monomials(&b.1, &a.1, weights));
        let mut out: Vec<(FieldScalar, Monomial)> = Vec::with_capacity(terms.len());
        for (c, m) in terms {
            if let Some(last) = out.last_mut() {
                if last.1 == m {
                    last.0 = p.add(last.0, c);
                    continue;
                }
            }
            out.push((c, m));
        }
        out.retain(|(c, _)| !c.is_zero());
        Polynomial { terms: out }
    }

    pub fn add(&self, other: &Polynomial, p: PrimeP, weights: &[u32]) -> Polynomial {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Polynomial::normalize(terms, p, weights)
    }

    pub fn scale(&self, c: FieldScalar, p: PrimeP) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(a, m)| (p.mul(*a, c), m.clone()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Polynomial, p: PrimeP, weights: &[u32]) -> Polynomial {
        self.add(&other.scale(p.neg(FieldScalar::ONE), p), p, weights)
    }

    pub fn mul(&self, other: &Polynomial, p: PrimeP, weights: &[u32]) -> Polynomial {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, m) in &self.terms {
            for (b, n) in &other.terms {
                terms.push((p.mul(*a, *b), m.mul(n)));
            }
        }
        Polynomial::normalize(terms, p, weights)
    }

    pub fn mul_term(&self, c: FieldScalar, m: &Monomial, p: PrimeP) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(a, n)| (p.mul(*a, c), n.mul(m)))
                .collect(),
        }
    }

    /// Weighted degree if homogeneous, else an error.
    pub fn homogeneous_degree(&self, weights: &[u32]) -> Result<u32> {
        let mut deg = None;
        for (_, m) in &self.terms {
            let d = m.weighted_degree(weights);
            match deg {
                None => deg = Some(d),
                Some(e) if e == d => {}
                Some(e) => {
                    return Err(EngineError::Schema(format!(
                        "mixed weighted degrees {e} and {d} in one polynomial"
                    )))
                }
            }
        }
        Ok(deg.unwrap_or(0))
    }
}

/// Presentation data: prime, weighted generators, homogeneous relations.
#[derive(Debug, Clone)]
pub struct RingPresentation {
    pub p: PrimeP,
    pub generators: Vec<(String, u32)>,
    pub relations: Vec<Polynomial>,
}

impl RingPresentation {
    pub fn weights(&self) -> Vec<u32> {
        self.generators.iter().map(|&(_, w)| w).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (name, w) in &self.generators {
            if *w == 0 {
                return Err(EngineError::Schema(format!(
                    "generator {name} has weight 0; weights must be positive"
                )));
            }
            if !is_valid_generator_name(name) {
                return Err(EngineError::Schema(format!(
                    "invalid generator name {name:?}: must be lowercase [a-z][a-z0-9_]* and \
                     must not match the reserved dg-variable patterns y<digits>, x<digits>"
                )));
            }
            if !seen.insert(name.clone()) {
                return Err(EngineError::Schema(format!("duplicate generator name {name}")));
            }
        }
        let weights = self.weights();
        for (i, r) in self.relations.iter().enumerate() {
            if r.is_zero() {
                return Err(EngineError::Inhomogeneous {
                    index: i,
                    detail: "zero polynomial is not a valid relation".into(),
                });
            }
            let deg = r
                .homogeneous_degree(&weights)
                .map_err(|e| EngineError::Inhomogeneous { index: i, detail: e.to_string() })?;
            if deg == 0 {
                return Err(EngineError::Inhomogeneous {
                    index: i,
                    detail: "relation of degree 0".into(),
                });
            }
        }
        Ok(())
    }
}

pub fn is_valid_generator_name(name: &str) -> bool {
    let mut chars = name.chars();
    let ok_shape = match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {
            name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        }
        _ => false,
    };
    if !ok_shape {
        return false;
    }
    // reserved for dg variables: y1, x2, x1p_y2, ...
    let bytes = name.as_bytes();
    if bytes.len() >= 2 && (bytes[0] == b'x' || bytes[0] == b'y') && bytes[1].is_ascii_digit() {
        return false;
    }
    true
}

/// A quotient ring frozen behind its reduced Groebner basis.
#[derive(Debug)]
pub struct QuotientRing {
    pub presentation: RingPresentation,
    pub groebner: Vec<Polynomial>,
}

impl QuotientRing {
    pub fn new(presentation: RingPresentation) -> Result<Arc<Self>> {
        presentation.validate()?;
        let weights = presentation.weights();
        let groebner = buchberger(&presentation.relations, presentation.p, &weights);
        Ok(Arc::new(QuotientRing { presentation, groebner }))
    }

    pub fn p(&self) -> PrimeP {
        self.presentation.p
    }

    pub fn nvars(&self) -> usize {
        self.presentation.generators.len()
    }

    pub fn weights(&self) -> Vec<u32> {
        self.presentation.weights()
    }

    pub fn normal_form(&self, poly: &Polynomial) -> Polynomial {
        normal_form(poly, &self.groebner, self.p(), &self.weights())
    }

    /// The standard monomials of weighted degree `e`, descending in the
    /// monomial order.
    pub fn degree_basis(&self, e: u32) -> Vec<Monomial> {
        let weights = self.weights();
        let mut out: Vec<Monomial> = enumerate_monomials(e, &weights)
            .into_iter()
            .filter(|m| {
                !self
                    .groebner
                    .iter()
                    .any(|g| g.leading().map(|(_, lm)| lm.divides(m)).unwrap_or(false))
            })
            .collect();
        out.sort_by(|a, b| cmp_monomials(b, a, &weights));
        out
    }

    pub fn dim(&self, e: u32) -> usize {
        self.degree_basis(e).len()
    }

    /// True when the normal form of `poly` lies in the irrelevant maximal
    /// ideal, i.e. has no degree-0 term. For homogeneous nonzero input this
    /// is just positivity of the degree.
    pub fn in_maximal_ideal(&self, poly: &Polynomial) -> bool {
        self.normal_form(poly)
            .terms
            .iter()
            .all(|(_, m)| !m.is_one())
    }
}

/// All exponent vectors of exact weighted degree `e`.
fn enumerate_monomials(e: u32, weights: &[u32]) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut current = vec![0u32; weights.len()];
    fn rec(i: usize, left: u32, weights: &[u32], current: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i == weights.len() {
            if left == 0 {
                out.push(Monomial { exps: current.clone() });
            }
            return;
        }
        let w = weights[i];
        let max = left / w;
        for k in 0..=max {
            current[i] = k;
            rec(i + 1, left - k * w, weights, current, out);
        }
        current[i] = 0;
    }
    rec(0, e, weights, &mut current, &mut out);
    out
}

/// Remainder of `poly` on division by `basis`; zero iff `poly` lies in the
/// ideal when `basis` is a Groebner basis.
pub fn normal_form(poly: &Polynomial, basis: &[Polynomial], p: PrimeP, weights: &[u32]) -> Polynomial {
    let mut rest = poly.clone();
    let mut out: Vec<(FieldScalar, Monomial)> = Vec::new();
    'outer: while let Some((lc, lm)) = rest.leading().cloned() {
        for g in basis {
            if let Some((gc, gm)) = g.leading() {
                if gm.divides(&lm) {
                    let factor = p.mul(lc, p.inv(*gc).expect("leading coefficient is a unit"));
                    let shift = lm.div(gm);
                    rest = rest.sub(&g.mul_term(factor, &shift, p), p, weights);
                    continue 'outer;
                }
            }
        }
        out.push((lc, lm.clone()));
        rest.terms.remove(0);
    }
    // terms were moved over in descending order already
    Polynomial { terms: out }
}

/// Buchberger's algorithm, followed by autoreduction and monic
/// normalization. For a homogeneous input the result is the unique reduced
/// Groebner basis of the ideal, independent of input order.
pub fn buchberger(relations: &[Polynomial], p: PrimeP, weights: &[u32]) -> Vec<Polynomial> {
    let mut basis: Vec<Polynomial> = relations.iter().filter(|r| !r.is_zero()).cloned().collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..basis.len() {
        for j in 0..i {
            pairs.push((j, i));
        }
    }
    while let Some((i, j)) = pairs.pop() {
        let s = s_polynomial(&basis[i], &basis[j], p, weights);
        let r = normal_form(&s, &basis, p, weights);
        if !r.is_zero() {
            for k in 0..basis.len() {
                pairs.push((k, basis.len()));
            }
            basis.push(r);
        }
    }
    // autoreduce: each element fully reduced against the others
    loop {
        let mut changed = false;
        for i in 0..basis.len() {
            let others: Vec<Polynomial> = basis
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, g)| g.clone())
                .collect();
            let r = normal_form(&basis[i], &others, p, weights);
            if r != basis[i] {
                basis[i] = r;
                changed = true;
            }
        }
        basis.retain(|g| !g.is_zero());
        if !changed {
            break;
        }
    }
    for g in &mut basis {
        let inv = p.inv(g.leading().unwrap().0).expect("leading unit");
        *g = g.scale(inv, p);
    }
    basis.sort_by(|a, b| cmp_monomials(&b.leading().unwrap().1, &a.leading().unwrap().1, weights));
    basis
}

fn s_polynomial(f: &Polynomial, g: &Polynomial, p: PrimeP, weights: &[u32]) -> Polynomial {
    let (fc, fm) = f.leading().unwrap();
    let (gc, gm) = g.leading().unwrap();
    let l = fm.lcm(gm);
    let a = f.mul_term(p.inv(*fc).unwrap(), &l.div(fm), p);
    let b = g.mul_term(p.inv(*gc).unwrap(), &l.div(gm), p);
    a.sub(&b, p, weights)
}

/// A surjective map `R -> S = R/(f_1..f_c)` recorded through homogeneous
/// kernel generators of positive degree.
#[derive(Debug, Clone)]
pub struct MapPresentation {
    pub source: Arc<QuotientRing>,
    pub kernel_generators: Vec<Polynomial>,
}

impl MapPresentation {
    pub fn new(source: Arc<QuotientRing>, kernel_generators: Vec<Polynomial>) -> Result<Self> {
        let weights = source.weights();
        for (i, f) in kernel_generators.iter().enumerate() {
            let nf = source.normal_form(f);
            if nf.is_zero() {
                return Err(EngineError::Inhomogeneous {
                    index: i,
                    detail: "kernel generator is zero in R".into(),
                });
            }
            let deg = nf
                .homogeneous_degree(&weights)
                .map_err(|e| EngineError::Inhomogeneous { index: i, detail: e.to_string() })?;
            if deg == 0 {
                return Err(EngineError::Inhomogeneous {
                    index: i,
                    detail: "kernel generator of degree 0 would make S = 0".into(),
                });
            }
        }
        Ok(MapPresentation { source, kernel_generators })
    }

    /// The target ring `S`, presented by the relations of `R` together with
    /// the kernel generators.
    pub fn target_ring(&self) -> Result<Arc<QuotientRing>> {
        let mut relations = self.source.presentation.relations.clone();
        relations.extend(self.kernel_generators.iter().cloned());
        QuotientRing::new(RingPresentation {
            p: self.source.p(),
            generators: self.source.presentation.generators.clone(),
            relations,
        })
    }

    /// Degree of each kernel generator.
    pub fn kernel_degrees(&self) -> Vec<u32> {
        let weights = self.source.weights();
        self.kernel_generators
            .iter()
            .map(|f| f.homogeneous_degree(&weights).expect("validated"))
            .collect()
    }
}

/// Replace the kernel generators by a subset whose classes form a k-basis
/// of `(f) / m(f)` (graded Nakayama). Processing is by ascending degree and
/// then input order, so the selection is deterministic.
pub fn minimalize_kernel(map: &MapPresentation) -> Result<MapPresentation> {
    let ring = &map.source;
    let p = ring.p();
    let weights = ring.weights();
    let gens: Vec<Polynomial> = map
        .kernel_generators
        .iter()
        .map(|f| ring.normal_form(f))
        .collect();
    let mut degrees: Vec<u32> = gens
        .iter()
        .map(|f| f.homogeneous_degree(&weights).expect("validated"))
        .collect::<Vec<_>>();
    let mut order: Vec<usize> = (0..gens.len()).collect();
    order.sort_by_key(|&i| (degrees[i], i));
    degrees.sort_unstable();
    degrees.dedup();

    let mut selected: Vec<usize> = Vec::new();
    for &e in &degrees {
        let basis = ring.degree_basis(e);
        let index_of = |m: &Monomial| basis.iter().position(|b| b == m).expect("standard monomial");
        let to_vec = |f: &Polynomial| {
            crate::linalg::SparseVec::from_entries(
                f.terms.iter().map(|(c, m)| (index_of(m), *c)).collect(),
            )
        };
        let mut ech = Echelon::new(p, basis.len());
        // span of m*(f) in degree e: standard-monomial multiples of every
        // input generator, by monomials of positive degree
        for g in &gens {
            let dg = g.homogeneous_degree(&weights).expect("validated");
            if dg >= e {
                continue;
            }
            for u in ring.degree_basis(e - dg) {
                if u.is_one() {
                    continue;
                }
                let prod = ring.normal_form(&g.mul_term(FieldScalar::ONE, &u, p));
                if !prod.is_zero() {
                    ech.insert(&to_vec(&prod));
                }
            }
        }
        for &i in &order {
            if gens[i].homogeneous_degree(&weights).expect("validated") != e {
                continue;
            }
            if ech.insert(&to_vec(&gens[i])).is_some() {
                selected.push(i);
            }
        }
    }
    selected.sort_unstable();
    MapPresentation::new(
        map.source.clone(),
        selected.iter().map(|&i| gens[i].clone()).collect(),
    )
}
