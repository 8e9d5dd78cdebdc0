//! Bidegree linear algebra over the free modules of a semifree extension —
//! cycles, boundaries, homology, Nakayama-minimal generators — and the two
//! inductive constructions built on top of it: the acyclic closure (divided
//! variables in even degrees) and the minimal model (polynomial variables).
//!
//! Homology is computed exactly for internal degrees up to `D`, but the
//! constructions certify statements only up to `D - g`, where the guard
//! band `g` is the largest internal degree among the ring relations and
//! kernel generators. A minimal homology generator detected inside the
//! guard band aborts the construction with `WindowTooSmall` rather than
//! truncating silently.

use std::collections::{BTreeMap, HashMap};

use crate::coeffs::FieldScalar;
use crate::dga::{DgElement, NormalMonomial, SemifreeExtension, VarId, VarKind, Window};
use crate::error::{EngineError, Result};
use crate::linalg::{Echelon, GfMatrix, SparseVec};
use crate::ring::{MapPresentation, Monomial, Polynomial};

/// Which construction produced a build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    AcyclicClosure,
    MinimalModel,
}

impl Flavor {
    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::AcyclicClosure => "closure",
            Flavor::MinimalModel => "model",
        }
    }

    pub fn parse(s: &str) -> Result<Flavor> {
        match s {
            "closure" => Ok(Flavor::AcyclicClosure),
            "model" => Ok(Flavor::MinimalModel),
            _ => Err(EngineError::Cache(format!("unknown flavor {s:?}"))),
        }
    }

    fn even_kind(self) -> VarKind {
        match self {
            Flavor::AcyclicClosure => VarKind::Divided,
            Flavor::MinimalModel => VarKind::Polynomial,
        }
    }

    fn var_prefix(self) -> &'static str {
        match self {
            Flavor::AcyclicClosure => "y",
            Flavor::MinimalModel => "x",
        }
    }
}

/// One inductive step: the variable and the cycle it kills.
#[derive(Debug, Clone)]
pub struct Adjunction {
    pub var: VarId,
    pub killed: DgElement,
}

/// A finished construction inside its window.
#[derive(Debug, Clone)]
pub struct ResolutionBuild {
    pub ext: SemifreeExtension,
    pub map: MapPresentation,
    pub flavor: Flavor,
    pub adjunction_log: Vec<Adjunction>,
    pub window: Window,
    /// guard band: statements are certified for internal degree <= D - guard
    pub guard: u32,
}

impl ResolutionBuild {
    pub fn certified_d(&self) -> u32 {
        self.window.d.saturating_sub(self.guard)
    }

    /// Number of variables per homological degree, `0..=N`.
    pub fn variable_counts(&self) -> Vec<usize> {
        self.ext.variable_counts()
    }
}

/// Guard band for a map: largest internal degree among ring relations and
/// kernel generators.
pub fn guard_band(map: &MapPresentation) -> u32 {
    let weights = map.source.weights();
    let rel = map
        .source
        .presentation
        .relations
        .iter()
        .filter_map(|r| r.homogeneous_degree(&weights).ok())
        .max()
        .unwrap_or(0);
    let ker = map
        .kernel_generators
        .iter()
        .filter_map(|f| f.homogeneous_degree(&weights).ok())
        .max()
        .unwrap_or(0);
    rel.max(ker)
}

/// Basis of a fixed bidegree with constant-time coordinate lookup.
pub struct BidegreeBasis {
    pub hdeg: u32,
    pub ideg: u32,
    pub pairs: Vec<(NormalMonomial, Monomial)>,
    index: HashMap<(NormalMonomial, Monomial), usize>,
}

impl BidegreeBasis {
    pub fn new(ext: &SemifreeExtension, h: u32, e: u32) -> Self {
        let pairs = ext.bidegree_basis(h, e);
        let index = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        BidegreeBasis { hdeg: h, ideg: e, pairs, index }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn flatten(&self, u: &DgElement) -> SparseVec {
        let mut entries = Vec::new();
        for (m, c) in &u.terms {
            for (s, rm) in &c.terms {
                let idx = *self
                    .index
                    .get(&(m.clone(), rm.clone()))
                    .expect("term must lie on the bidegree basis");
                entries.push((idx, *s));
            }
        }
        SparseVec::from_entries(entries)
    }

    pub fn unflatten(&self, ext: &SemifreeExtension, v: &SparseVec) -> DgElement {
        ext.unflatten(v, self.hdeg, self.ideg, &self.pairs)
    }
}

/// The differential of one bidegree as a sparse matrix: columns indexed by
/// the `(monomial, ring monomial)` basis of `(h, e)`, rows by `(h-1, e)`.
pub struct BidegreeMatrix {
    pub dom: BidegreeBasis,
    pub cod: BidegreeBasis,
    pub matrix: GfMatrix,
}

/// Differentials of every internal degree at one homological degree, with
/// the per-monomial differential computed once and shared.
pub fn boundary_matrices(
    ext: &SemifreeExtension,
    h: u32,
    max_e: u32,
) -> BTreeMap<u32, BidegreeMatrix> {
    let p = ext.p();
    let one = Polynomial::constant(FieldScalar::ONE, ext.base.nvars());
    let diffs: HashMap<NormalMonomial, DgElement> = ext
        .monomials_of_hdeg(h)
        .into_iter()
        .map(|m| {
            let d = ext.differential(&ext.element_from_monomial(&one, &m));
            (m, d)
        })
        .collect();
    let mut out = BTreeMap::new();
    for e in 0..=max_e {
        let dom = BidegreeBasis::new(ext, h, e);
        let cod = BidegreeBasis::new(ext, h.saturating_sub(1), e);
        let mut triplets = Vec::new();
        for (col, (m, s)) in dom.pairs.iter().enumerate() {
            if h == 0 {
                continue;
            }
            let dm = &diffs[m];
            let image = ext.ring_scale(dm, &Polynomial::monomial(FieldScalar::ONE, s.clone()));
            for &(row, c) in cod.flatten(&image).entries.iter() {
                triplets.push((row, col, c));
            }
        }
        let matrix = GfMatrix::from_triplets(p, cod.len(), dom.len(), &triplets);
        out.insert(e, BidegreeMatrix { dom, cod, matrix });
    }
    out
}

/// Cycles, boundaries and reduced homology representatives of one
/// homological degree, for every internal degree up to the window bound.
pub struct HomologySlice {
    pub hdeg: u32,
    /// internal degree -> cycle basis (domain coordinates)
    pub cycles: BTreeMap<u32, Vec<SparseVec>>,
    /// internal degree -> echelon of boundary image
    pub boundaries: BTreeMap<u32, Echelon>,
    /// internal degree -> reduced-echelon homology representatives
    pub reps: BTreeMap<u32, Vec<DgElement>>,
    pub bases: BTreeMap<u32, BidegreeBasis>,
}

impl HomologySlice {
    pub fn dim(&self, e: u32) -> usize {
        self.reps.get(&e).map(|r| r.len()).unwrap_or(0)
    }

    pub fn total_dim(&self) -> usize {
        self.reps.values().map(|r| r.len()).sum()
    }
}

/// Homology of the extension at homological degree `h`, internal degrees up
/// to `window.d`. Representatives are fully reduced against the boundary
/// echelon and against each other, so the choice is canonical.
pub fn homology_basis(ext: &SemifreeExtension, h: u32, window: Window) -> HomologySlice {
    let p = ext.p();
    let max_e = window.d;
    let at_h = boundary_matrices(ext, h, max_e);
    let above = boundary_matrices(ext, h + 1, max_e);
    let mut cycles = BTreeMap::new();
    let mut boundaries = BTreeMap::new();
    let mut reps = BTreeMap::new();
    let mut bases = BTreeMap::new();
    for e in 0..=max_e {
        let bm = &at_h[&e];
        let z: Vec<SparseVec> = if h == 0 {
            (0..bm.dom.len()).map(SparseVec::unit).collect()
        } else {
            bm.matrix.kernel_basis()
        };
        let b_ech = above[&e].matrix.image_echelon();
        let mut chosen = Echelon::new(p, bm.dom.len());
        let mut local_reps = Vec::new();
        for zv in &z {
            let red = chosen.reduce(&b_ech.reduce(zv));
            if !red.is_zero() {
                chosen.insert(&red);
                local_reps.push(bm.dom.unflatten(ext, &red));
            }
        }
        cycles.insert(e, z);
        boundaries.insert(e, b_ech);
        reps.insert(e, local_reps);
    }
    for (e, bm) in at_h {
        bases.insert(e, bm.dom);
    }
    HomologySlice { hdeg: h, cycles, boundaries, reps, bases }
}

/// Cycle representatives whose classes form a k-basis of `H_h / m H_h`,
/// chosen by ascending internal degree and reduced echelon order.
pub fn minimal_generators_of_homology(
    ext: &SemifreeExtension,
    h: u32,
    window: Window,
) -> Vec<DgElement> {
    let p = ext.p();
    let slice = homology_basis(ext, h, window);
    let gens = ext.base.presentation.generators.clone();
    let mut out = Vec::new();
    for e in 0..=window.d {
        let basis = &slice.bases[&e];
        if basis.is_empty() {
            continue;
        }
        // span of boundaries plus m * (cycles of lower internal degree)
        let mut ech = Echelon::new(p, basis.len());
        for row in slice.boundaries[&e].rows() {
            ech.insert(row);
        }
        for (gi, &(_, w)) in gens.iter().enumerate() {
            if w > e {
                continue;
            }
            let lower = &slice.cycles[&(e - w)];
            let lower_basis = &slice.bases[&(e - w)];
            let mut xg = Monomial::one(ext.base.nvars());
            xg.exps[gi] = 1;
            let xg_poly = Polynomial::monomial(FieldScalar::ONE, xg);
            for zv in lower {
                let elem = lower_basis.unflatten(ext, zv);
                let shifted = ext.ring_scale(&elem, &xg_poly);
                ech.insert(&basis.flatten(&shifted));
            }
        }
        for zv in &slice.cycles[&e] {
            let red = ech.reduce(zv);
            if !red.is_zero() {
                ech.insert(&red);
                out.push(basis.unflatten(ext, &red));
            }
        }
    }
    out
}

fn construct(map: &MapPresentation, window: Window, flavor: Flavor) -> Result<ResolutionBuild> {
    let minimized = crate::ring::minimalize_kernel(map)?;
    let guard = guard_band(map);
    let certified_d = window.d.saturating_sub(guard);
    let mut ext = SemifreeExtension::new(minimized.source.clone(), window);
    let mut log = Vec::new();
    let mut counter = 1usize;
    for f in &minimized.kernel_generators {
        let boundary = ext.element_from_ring(f)?;
        if boundary.ideg > certified_d {
            return Err(EngineError::WindowTooSmall(format!(
                "kernel generator of internal degree {} exceeds certified bound {} (D = {}, guard = {})",
                boundary.ideg, certified_d, window.d, guard
            )));
        }
        let killed = boundary.clone();
        let id = ext.adjoin_variable(
            format!("{}{}", flavor.var_prefix(), counter),
            VarKind::Exterior,
            1,
            boundary,
        )?;
        log.push(Adjunction { var: id, killed });
        counter += 1;
    }
    for n in 1..window.n {
        let gens = minimal_generators_of_homology(&ext, n, window);
        let kind = if (n + 1) % 2 == 0 {
            flavor.even_kind()
        } else {
            VarKind::Exterior
        };
        for z in gens {
            if z.ideg > certified_d {
                return Err(EngineError::WindowTooSmall(format!(
                    "minimal generator of H_{n} at internal degree {} lies inside the guard band \
                     (certified bound {}, D = {}, guard = {})",
                    z.ideg, certified_d, window.d, guard
                )));
            }
            let killed = z.clone();
            let id = ext.adjoin_variable(
                format!("{}{}", flavor.var_prefix(), counter),
                kind,
                n + 1,
                z,
            )?;
            log.push(Adjunction { var: id, killed });
            counter += 1;
        }
    }
    Ok(ResolutionBuild {
        ext,
        map: minimized,
        flavor,
        adjunction_log: log,
        window,
        guard,
    })
}

/// Tate's construction: adjoin Γ-variables that minimally kill homology,
/// divided powers in even degrees and exterior variables in odd degrees.
pub fn acyclic_closure(map: &MapPresentation, window: Window) -> Result<ResolutionBuild> {
    construct(map, window, Flavor::AcyclicClosure)
}

/// The same induction with polynomial variables in even degrees.
pub fn minimal_model(map: &MapPresentation, window: Window) -> Result<ResolutionBuild> {
    construct(map, window, Flavor::MinimalModel)
}

/// Rank of the build in each homological degree `0..=N`: the number of
/// normal (Γ-)monomials of that degree.
pub fn betti_numbers(build: &ResolutionBuild) -> Vec<usize> {
    (0..=build.window.n)
        .map(|h| build.ext.monomials_of_hdeg(h).len())
        .collect()
}

/// Post-construction audit: `H_i = 0` for `1 <= i <= N-1` and `H_0 = S`
/// degreewise, inside the certified internal window.
#[derive(Debug, Clone)]
pub struct AcyclicityReport {
    pub ok: bool,
    pub certified_d: u32,
    /// (homological degree, internal degree, homology dimension) triples
    /// that should have been zero
    pub failures: Vec<(u32, u32, usize)>,
    /// internal degrees where `dim H_0` differs from `dim S`
    pub h0_mismatches: Vec<u32>,
}

pub fn verify_acyclicity(build: &ResolutionBuild) -> Result<AcyclicityReport> {
    let certified_d = build.certified_d();
    let mut failures = Vec::new();
    for h in 1..build.window.n {
        let slice = homology_basis(&build.ext, h, build.window);
        for e in 0..=certified_d {
            let dim = slice.dim(e);
            if dim != 0 {
                failures.push((h, e, dim));
            }
        }
    }
    let target = build.map.target_ring()?;
    let slice0 = homology_basis(&build.ext, 0, build.window);
    let mut h0_mismatches = Vec::new();
    for e in 0..=certified_d {
        if slice0.dim(e) != target.dim(e) {
            h0_mismatches.push(e);
        }
    }
    Ok(AcyclicityReport {
        ok: failures.is_empty() && h0_mismatches.is_empty(),
        certified_d,
        failures,
        h0_mismatches,
    })
}
