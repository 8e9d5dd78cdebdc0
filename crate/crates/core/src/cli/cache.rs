//! Versioned resolution caches: a line-based text format holding the
//! variable registry (and, for comparisons, the assignment and lift
//! tables). Reload re-adjoins every variable, which re-verifies the cycle
//! conditions; a presentation-hash mismatch or window mismatch rejects the
//! file up front. Saving a reloaded build reproduces the bytes exactly.

use std::collections::BTreeMap;

use crate::compare::{ComparisonMap, VarFamily};
use crate::dga::{DgElement, SemifreeExtension, VarId, VarKind, Window};
use crate::error::{EngineError, Result};
use crate::resolve::{Adjunction, Flavor, ResolutionBuild};
use crate::ring::MapPresentation;

pub const CACHE_HEADER: &str = "#tate-cache v1";

fn render_extension(out: &mut String, ext: &SemifreeExtension) {
    for v in ext.vars() {
        out.push_str(&format!(
            "var {} {} {} {} {} {}\n",
            v.id,
            v.name,
            v.kind.as_str(),
            v.hdeg,
            v.ideg,
            ext.format_element(&v.boundary)
        ));
    }
}

fn render_header(
    out: &mut String,
    hash: &str,
    p: u32,
    window: Window,
    guard: u32,
    flavor: &str,
) {
    out.push_str(CACHE_HEADER);
    out.push('\n');
    out.push_str(&format!("hash {hash}\n"));
    out.push_str(&format!("p {p}\n"));
    out.push_str(&format!("window {} {}\n", window.n, window.d));
    out.push_str(&format!("guard {guard}\n"));
    out.push_str(&format!("flavor {flavor}\n"));
}

pub fn render_build(build: &ResolutionBuild, hash: &str) -> String {
    let mut out = String::new();
    render_header(
        &mut out,
        hash,
        build.ext.p().get(),
        build.window,
        build.guard,
        build.flavor.as_str(),
    );
    render_extension(&mut out, &build.ext);
    out.push_str("end\n");
    out
}

pub fn render_comparison(
    model: &ResolutionBuild,
    closure: &ResolutionBuild,
    cmp: &ComparisonMap,
    hash: &str,
) -> String {
    let mut out = String::new();
    render_header(
        &mut out,
        hash,
        model.ext.p().get(),
        model.window,
        model.guard,
        "comparison",
    );
    out.push_str("section closure\n");
    render_extension(&mut out, &closure.ext);
    out.push_str("section model\n");
    render_extension(&mut out, &model.ext);
    for (id, elem) in &cmp.assignment {
        out.push_str(&format!("asg {id} {}\n", closure.ext.format_element(elem)));
    }
    for (id, elem) in &cmp.lifts {
        out.push_str(&format!("lift {id} {}\n", model.ext.format_element(elem)));
    }
    for (id, fam) in &cmp.family {
        match fam {
            VarFamily::X0 { y } => out.push_str(&format!("fam {id} x0 {y} 0\n")),
            VarFamily::Xi { y, i } => out.push_str(&format!("fam {id} xi {y} {i}\n")),
            VarFamily::XiPrime { y, i } => out.push_str(&format!("fam {id} xip {y} {i}\n")),
        }
    }
    out.push_str("end\n");
    out
}

pub fn save_build(build: &ResolutionBuild, hash: &str, path: &str) -> Result<()> {
    std::fs::write(path, render_build(build, hash))
        .map_err(|e| EngineError::Cache(format!("cannot write {path}: {e}")))
}

pub fn save_comparison(
    model: &ResolutionBuild,
    closure: &ResolutionBuild,
    cmp: &ComparisonMap,
    hash: &str,
    path: &str,
) -> Result<()> {
    std::fs::write(path, render_comparison(model, closure, cmp, hash))
        .map_err(|e| EngineError::Cache(format!("cannot write {path}: {e}")))
}

struct Parser<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
    lineno: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { lines: text.lines().peekable(), lineno: 0 }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        self.lineno += 1;
        self.lines
            .next()
            .ok_or_else(|| EngineError::Cache("unexpected end of cache file".into()))
    }

    fn peek(&mut self) -> Option<&&'a str> {
        self.lines.peek()
    }

    fn expect_kv(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        let mut it = line.splitn(2, ' ');
        let k = it.next().unwrap_or_default();
        let v = it.next().unwrap_or_default();
        if k != key {
            return Err(EngineError::Cache(format!(
                "line {}: expected `{key} ...`, found {line:?}",
                self.lineno
            )));
        }
        Ok(v.to_string())
    }
}

fn parse_var_line(line: &str, lineno: usize) -> Result<(VarId, String, VarKind, u32, u32, String)> {
    let toks: Vec<&str> = line.split(' ').collect();
    if toks.len() != 7 || toks[0] != "var" {
        return Err(EngineError::Cache(format!("line {lineno}: malformed var line {line:?}")));
    }
    let id: VarId = toks[1]
        .parse()
        .map_err(|_| EngineError::Cache(format!("line {lineno}: bad id")))?;
    let kind = VarKind::parse(toks[3])?;
    let hdeg: u32 = toks[4]
        .parse()
        .map_err(|_| EngineError::Cache(format!("line {lineno}: bad hdeg")))?;
    let ideg: u32 = toks[5]
        .parse()
        .map_err(|_| EngineError::Cache(format!("line {lineno}: bad ideg")))?;
    Ok((id, toks[2].to_string(), kind, hdeg, ideg, toks[6].to_string()))
}

fn read_extension_vars(
    parser: &mut Parser<'_>,
    ext: &mut SemifreeExtension,
) -> Result<Vec<Adjunction>> {
    let mut log = Vec::new();
    while let Some(line) = parser.peek() {
        if !line.starts_with("var ") {
            break;
        }
        let line = parser.next_line()?;
        let (id, name, kind, hdeg, ideg, btext) = parse_var_line(line, parser.lineno)?;
        if id as usize != ext.vars().len() {
            return Err(EngineError::Cache(format!(
                "variable ids must be contiguous; found {id} at position {}",
                ext.vars().len()
            )));
        }
        let boundary = if btext == "0" {
            DgElement::zero(hdeg - 1, ideg)
        } else {
            ext.parse_element(&btext)?
        };
        let killed = boundary.clone();
        let got = ext.adjoin_variable(name, kind, hdeg, boundary)?;
        let v = ext.var(got);
        if v.ideg != ideg {
            return Err(EngineError::Cache(format!(
                "variable {} reloads with internal degree {}, file says {ideg}",
                v.name, v.ideg
            )));
        }
        log.push(Adjunction { var: got, killed });
    }
    Ok(log)
}

struct CacheHeader {
    hash: String,
    p: u32,
    window: Window,
    guard: u32,
    flavor: String,
}

fn read_header(parser: &mut Parser<'_>) -> Result<CacheHeader> {
    let first = parser.next_line()?;
    if first != CACHE_HEADER {
        return Err(EngineError::Cache(format!(
            "unsupported cache version header {first:?}"
        )));
    }
    let hash = parser.expect_kv("hash")?;
    let p: u32 = parser
        .expect_kv("p")?
        .parse()
        .map_err(|_| EngineError::Cache("bad p".into()))?;
    let w = parser.expect_kv("window")?;
    let parts: Vec<&str> = w.split(' ').collect();
    if parts.len() != 2 {
        return Err(EngineError::Cache("bad window line".into()));
    }
    let window = Window::new(
        parts[0].parse().map_err(|_| EngineError::Cache("bad N".into()))?,
        parts[1].parse().map_err(|_| EngineError::Cache("bad D".into()))?,
    )?;
    let guard: u32 = parser
        .expect_kv("guard")?
        .parse()
        .map_err(|_| EngineError::Cache("bad guard".into()))?;
    let flavor = parser.expect_kv("flavor")?;
    Ok(CacheHeader { hash, p, window, guard, flavor })
}

fn check_header(header: &CacheHeader, map: &MapPresentation, hash: &str, window: Window) -> Result<()> {
    if header.hash != hash {
        return Err(EngineError::Cache(
            "cache was produced from a different presentation (hash mismatch)".into(),
        ));
    }
    if header.p != map.source.p().get() {
        return Err(EngineError::Cache("cache prime differs".into()));
    }
    if header.window != window {
        return Err(EngineError::Cache(format!(
            "cache window ({},{}) differs from requested ({},{})",
            header.window.n, header.window.d, window.n, window.d
        )));
    }
    Ok(())
}

/// Load a closure or model cache.
pub fn load_build(
    path: &str,
    map: &MapPresentation,
    hash: &str,
    window: Window,
) -> Result<ResolutionBuild> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EngineError::Cache(format!("cannot read {path}: {e}")))?;
    let mut parser = Parser::new(&text);
    let header = read_header(&mut parser)?;
    check_header(&header, map, hash, window)?;
    let flavor = Flavor::parse(&header.flavor)?;
    let mut ext = SemifreeExtension::new(map.source.clone(), header.window);
    let log = read_extension_vars(&mut parser, &mut ext)?;
    let end = parser.next_line()?;
    if end != "end" {
        return Err(EngineError::Cache(format!("expected `end`, found {end:?}")));
    }
    Ok(ResolutionBuild {
        ext,
        map: map.clone(),
        flavor,
        adjunction_log: log,
        window: header.window,
        guard: header.guard,
    })
}

/// Load a comparison cache: the closure, the model, and the map tables.
pub fn load_comparison(
    path: &str,
    map: &MapPresentation,
    hash: &str,
    window: Window,
) -> Result<(ResolutionBuild, ResolutionBuild, ComparisonMap)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EngineError::Cache(format!("cannot read {path}: {e}")))?;
    let mut parser = Parser::new(&text);
    let header = read_header(&mut parser)?;
    check_header(&header, map, hash, window)?;
    if header.flavor != "comparison" {
        return Err(EngineError::Cache(format!(
            "expected a comparison cache, found flavor {}",
            header.flavor
        )));
    }
    let sec = parser.next_line()?;
    if sec != "section closure" {
        return Err(EngineError::Cache("expected `section closure`".into()));
    }
    let mut closure_ext = SemifreeExtension::new(map.source.clone(), header.window);
    let closure_log = read_extension_vars(&mut parser, &mut closure_ext)?;
    let sec = parser.next_line()?;
    if sec != "section model" {
        return Err(EngineError::Cache("expected `section model`".into()));
    }
    let mut model_ext = SemifreeExtension::new(map.source.clone(), header.window);
    let model_log = read_extension_vars(&mut parser, &mut model_ext)?;
    let mut assignment = BTreeMap::new();
    let mut lifts = BTreeMap::new();
    let mut family = BTreeMap::new();
    loop {
        let line = parser.next_line()?;
        if line == "end" {
            break;
        }
        let toks: Vec<&str> = line.split(' ').collect();
        match toks.as_slice() {
            ["asg", id, text] => {
                let id: VarId = id.parse().map_err(|_| EngineError::Cache("bad asg id".into()))?;
                let v = model_ext
                    .vars()
                    .get(id as usize)
                    .ok_or_else(|| EngineError::Cache(format!("asg references unknown id {id}")))?;
                let elem = if *text == "0" {
                    DgElement::zero(v.hdeg, v.ideg)
                } else {
                    closure_ext.parse_element(text)?
                };
                assignment.insert(id, elem);
            }
            ["lift", id, text] => {
                let id: VarId = id.parse().map_err(|_| EngineError::Cache("bad lift id".into()))?;
                let v = closure_ext
                    .vars()
                    .get(id as usize)
                    .ok_or_else(|| EngineError::Cache(format!("lift references unknown id {id}")))?;
                let elem = if *text == "0" {
                    DgElement::zero(v.hdeg.saturating_sub(1), v.ideg)
                } else {
                    model_ext.parse_element(text)?
                };
                lifts.insert(id, elem);
            }
            ["fam", id, tag, y, i] => {
                let id: VarId = id.parse().map_err(|_| EngineError::Cache("bad fam id".into()))?;
                let y: VarId = y.parse().map_err(|_| EngineError::Cache("bad fam y".into()))?;
                let i: u32 = i.parse().map_err(|_| EngineError::Cache("bad fam i".into()))?;
                let fam = match *tag {
                    "x0" => VarFamily::X0 { y },
                    "xi" => VarFamily::Xi { y, i },
                    "xip" => VarFamily::XiPrime { y, i },
                    other => {
                        return Err(EngineError::Cache(format!("unknown family {other:?}")))
                    }
                };
                family.insert(id, fam);
            }
            _ => {
                return Err(EngineError::Cache(format!(
                    "line {}: unexpected {line:?}",
                    parser.lineno
                )))
            }
        }
    }
    let closure = ResolutionBuild {
        ext: closure_ext,
        map: map.clone(),
        flavor: Flavor::AcyclicClosure,
        adjunction_log: closure_log,
        window: header.window,
        guard: header.guard,
    };
    let model = ResolutionBuild {
        ext: model_ext,
        map: map.clone(),
        flavor: Flavor::MinimalModel,
        adjunction_log: model_log,
        window: header.window,
        guard: header.guard,
    };
    Ok((closure, model, ComparisonMap { assignment, lifts, family }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::document::JobDocument;
    use crate::compare::comparison_from_closure;
    use crate::resolve::acyclic_closure;

    const DOC: &str = r#"{
        "p": 2,
        "generators": [{"name": "x", "weight": 1}],
        "relations": [[{"c": 1, "e": [2]}]],
        "kernel_generators": [[{"c": 1, "e": [1]}]],
        "window": {"n": 8, "d": 14}
    }"#;

    #[test]
    fn build_cache_roundtrip_is_byte_identical() {
        let doc = JobDocument::parse(DOC).unwrap();
        let map = doc.map_presentation(None).unwrap();
        let window = doc.window().unwrap();
        let hash = JobDocument::presentation_hash(&map).unwrap();
        let build = acyclic_closure(&map, window).unwrap();
        let bytes = render_build(&build, &hash);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("closure.cache");
        std::fs::write(&path, &bytes).unwrap();
        let reloaded = load_build(path.to_str().unwrap(), &map, &hash, window).unwrap();
        assert_eq!(render_build(&reloaded, &hash), bytes);
        assert_eq!(reloaded.ext.vars().len(), build.ext.vars().len());
    }

    #[test]
    fn comparison_cache_roundtrip() {
        let doc = JobDocument::parse(DOC).unwrap();
        let map = doc.map_presentation(None).unwrap();
        let window = doc.window().unwrap();
        let hash = JobDocument::presentation_hash(&map).unwrap();
        let closure = acyclic_closure(&map, window).unwrap();
        let (model, cmp) = comparison_from_closure(&closure, window).unwrap();
        let bytes = render_comparison(&model, &closure, &cmp, &hash);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cmp.cache");
        std::fs::write(&path, &bytes).unwrap();
        let (c2, m2, cmp2) = load_comparison(path.to_str().unwrap(), &map, &hash, window).unwrap();
        assert_eq!(render_comparison(&m2, &c2, &cmp2, &hash), bytes);
        // the reloaded comparison still verifies
        assert!(crate::compare::verify_chain_map(&m2, &c2, &cmp2).ok);
    }

    #[test]
    fn mismatched_hash_or_window_is_rejected() {
        let doc = JobDocument::parse(DOC).unwrap();
        let map = doc.map_presentation(None).unwrap();
        let window = doc.window().unwrap();
        let hash = JobDocument::presentation_hash(&map).unwrap();
        let build = acyclic_closure(&map, window).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cache");
        save_build(&build, &hash, path.to_str().unwrap()).unwrap();
        let err = load_build(path.to_str().unwrap(), &map, "deadbeef", window).unwrap_err();
        assert!(matches!(err, EngineError::Cache(_)));
        let other = Window::new(6, 14).unwrap();
        let err = load_build(path.to_str().unwrap(), &map, &hash, other).unwrap_err();
        assert!(matches!(err, EngineError::Cache(_)));
    }

    #[test]
    fn truncated_cache_is_a_clean_error() {
        let doc = JobDocument::parse(DOC).unwrap();
        let map = doc.map_presentation(None).unwrap();
        let window = doc.window().unwrap();
        let hash = JobDocument::presentation_hash(&map).unwrap();
        let build = acyclic_closure(&map, window).unwrap();
        let full = render_build(&build, &hash);
        let truncated: String = full.lines().take(6).collect::<Vec<_>>().join("\n");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.cache");
        std::fs::write(&path, truncated).unwrap();
        let err = load_build(path.to_str().unwrap(), &map, &hash, window).unwrap_err();
        assert!(matches!(err, EngineError::Cache(_)));
    }
}
