//! The job document: a JSON description of the prime, the presentation of
//! `R`, the kernel generators of `R -> S`, the window, and optionally a
//! command list. Every polynomial is a list of `(coefficient, exponent
//! vector)` terms; schema validation happens before any computation and
//! reports the index of an offending polynomial.

use std::sync::Arc;

use serde::Deserialize;

use crate::coeffs::PrimeP;
use crate::dga::Window;
use crate::error::{EngineError, Result};
use crate::ring::{MapPresentation, Monomial, Polynomial, QuotientRing, RingPresentation};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobDocument {
    pub p: u32,
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub relations: Vec<Vec<TermSpec>>,
    #[serde(default)]
    pub kernel_generators: Vec<Vec<TermSpec>>,
    pub window: WindowSpec,
    #[serde(default)]
    pub commands: Vec<String>,
    #[serde(default)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    pub weight: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    /// coefficient, reduced mod p
    pub c: i64,
    /// exponent vector over the generators
    pub e: Vec<u32>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub n: u32,
    pub d: u32,
}

impl JobDocument {
    pub fn load(path: &str) -> Result<JobDocument> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::Schema(format!("cannot read {path}: {e}")))?;
        JobDocument::parse(&text)
    }

    pub fn parse(text: &str) -> Result<JobDocument> {
        serde_json::from_str(text).map_err(|e| EngineError::Schema(format!("invalid JSON: {e}")))
    }

    pub fn window(&self) -> Result<Window> {
        Window::new(self.window.n, self.window.d)
    }

    fn polynomial(&self, p: PrimeP, terms: &[TermSpec], index: usize) -> Result<Polynomial> {
        let nvars = self.generators.len();
        let mut out: Vec<(crate::coeffs::FieldScalar, Monomial)> = Vec::new();
        for t in terms {
            if t.e.len() != nvars {
                return Err(EngineError::Inhomogeneous {
                    index,
                    detail: format!(
                        "exponent vector has length {}, expected {nvars}",
                        t.e.len()
                    ),
                });
            }
            out.push((p.scalar(t.c), Monomial { exps: t.e.clone() }));
        }
        Ok(Polynomial { terms: out })
    }

    /// Validate and build the map presentation, optionally permuting the
    /// relation list first (determinism smoke tests).
    pub fn map_presentation(&self, seed_order: Option<&[usize]>) -> Result<MapPresentation> {
        let p = PrimeP::new(self.p)?;
        let mut relations = Vec::new();
        for (i, r) in self.relations.iter().enumerate() {
            relations.push(self.polynomial(p, r, i)?);
        }
        if let Some(perm) = seed_order {
            let mut sorted: Vec<usize> = perm.to_vec();
            sorted.sort_unstable();
            if sorted != (0..relations.len()).collect::<Vec<_>>() {
                return Err(EngineError::Schema(format!(
                    "--seed-order {perm:?} is not a permutation of 0..{}",
                    relations.len()
                )));
            }
            relations = perm.iter().map(|&i| relations[i].clone()).collect();
        }
        let ring = QuotientRing::new(RingPresentation {
            p,
            generators: self
                .generators
                .iter()
                .map(|g| (g.name.clone(), g.weight))
                .collect(),
            relations,
        })?;
        let mut kernel = Vec::new();
        for (i, f) in self.kernel_generators.iter().enumerate() {
            kernel.push(self.polynomial(p, f, i)?);
        }
        MapPresentation::new(ring, kernel)
    }

    /// Canonical hash of the presentation, used to guard caches. Hashing
    /// the reduced Groebner basis rather than the raw relation list makes
    /// the hash independent of relation order, matching the engine's
    /// output; the kernel generators are hashed after minimalization for
    /// the same reason.
    pub fn presentation_hash(map: &MapPresentation) -> Result<String> {
        use sha2::{Digest, Sha256};
        let ring: &Arc<QuotientRing> = &map.source;
        let minimized = crate::ring::minimalize_kernel(map)?;
        let mut hasher = Sha256::new();
        hasher.update(ring.p().get().to_le_bytes());
        for (name, w) in &ring.presentation.generators {
            hasher.update(name.as_bytes());
            hasher.update([b':']);
            hasher.update(w.to_le_bytes());
            hasher.update([b';']);
        }
        let mut feed_poly = |poly: &Polynomial| {
            for (c, m) in &poly.terms {
                hasher.update(c.0.to_le_bytes());
                for &e in &m.exps {
                    hasher.update(e.to_le_bytes());
                }
                hasher.update([b'|']);
            }
            hasher.update([b'!']);
        };
        for r in &ring.groebner {
            feed_poly(r);
        }
        for f in &minimized.kernel_generators {
            feed_poly(f);
        }
        let digest = hasher.finalize();
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
