//! Command handlers. Every handler emits both the aligned table and the
//! structured records; `check-all` aggregates the whole battery of
//! verdicts into pass/fail lines and drives the exit code.

use std::collections::BTreeMap;

use crate::classify::{self, TriState};
use crate::compare::{self, ComparisonMap};
use crate::dga::Window;
use crate::error::{EngineError, Result};
use crate::pi;
use crate::resolve::{self, Flavor, ResolutionBuild};

use super::cache;
use super::document::JobDocument;
use super::report::{Record, Report};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: String,
    pub window: Option<Window>,
    pub seed_order: Option<Vec<usize>>,
    pub format: Option<String>,
    pub save_cache: Option<String>,
    pub load_cache: Option<String>,
}

pub struct RunOutput {
    pub text: String,
    pub failed: bool,
}

struct Session {
    map: crate::ring::MapPresentation,
    window: Window,
    hash: String,
    closure: Option<ResolutionBuild>,
    model_direct: Option<ResolutionBuild>,
    comparison: Option<(ResolutionBuild, ComparisonMap)>,
}

impl Session {
    fn closure(&mut self) -> Result<&ResolutionBuild> {
        if self.closure.is_none() {
            self.closure = Some(resolve::acyclic_closure(&self.map, self.window)?);
        }
        Ok(self.closure.as_ref().unwrap())
    }

    fn model_direct(&mut self) -> Result<&ResolutionBuild> {
        if self.model_direct.is_none() {
            self.model_direct = Some(resolve::minimal_model(&self.map, self.window)?);
        }
        Ok(self.model_direct.as_ref().unwrap())
    }

    fn comparison(&mut self) -> Result<(&ResolutionBuild, &ResolutionBuild, &ComparisonMap)> {
        if self.comparison.is_none() {
            let window = self.window;
            let closure = self.closure()?.clone();
            let built = compare::comparison_from_closure(&closure, window)?;
            self.comparison = Some(built);
        }
        let closure = self.closure.as_ref().unwrap();
        let (model, cmp) = self.comparison.as_ref().unwrap();
        Ok((closure, model, cmp))
    }
}

pub fn run_command(doc: &JobDocument, opts: &RunOptions) -> Result<RunOutput> {
    let map = doc.map_presentation(opts.seed_order.as_deref())?;
    let window = match opts.window {
        Some(w) => w,
        None => doc.window()?,
    };
    let format = opts
        .format
        .clone()
        .or_else(|| doc.format.clone())
        .unwrap_or_else(|| "table".to_string());
    if format != "table" && format != "structured" {
        return Err(EngineError::Schema(format!("unknown format {format:?}")));
    }
    let hash = JobDocument::presentation_hash(&map)?;
    let guard = resolve::guard_band(&map);
    let mut session = Session {
        map,
        window,
        hash: hash.clone(),
        closure: None,
        model_direct: None,
        comparison: None,
    };
    let mut report = Report::new();
    let certified = window.d.saturating_sub(guard);
    report.record(
        Record::new("meta")
            .field("command", &opts.command)
            .field("p", doc.p)
            .field("window", format!("{},{}", window.n, window.d))
            .field("certified", format!("{},{}", window.n, certified))
            .field("guard", guard)
            .field("ring-hash", &hash),
    );
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    report.record(Record::new("meta").field("timestamp", timestamp));
    report.table_line(format!(
        "window N={} D={} (certified internal degree <= {certified}, guard {guard})",
        window.n, window.d
    ));

    let commands: Vec<String> = if opts.command == "run" {
        if doc.commands.is_empty() {
            return Err(EngineError::Schema(
                "`run` needs a non-empty `commands` list in the document".into(),
            ));
        }
        doc.commands.clone()
    } else {
        vec![opts.command.clone()]
    };
    for command in &commands {
        let canonical = if command == "check all" { "check-all" } else { command.as_str() };
        match canonical {
            "closure" => cmd_closure(&mut session, opts, &mut report)?,
            "model" => cmd_model(&mut session, opts, &mut report)?,
            "compare" => cmd_compare(&mut session, opts, &mut report)?,
            "pi" => cmd_pi(&mut session, &mut report)?,
            "deviations" => cmd_deviations(&mut session, &mut report)?,
            "classify" => cmd_classify(&mut session, &mut report)?,
            "betti" => cmd_betti(&mut session, &mut report)?,
            "poincare" => cmd_poincare(&mut session, &mut report)?,
            "check-all" => cmd_check_all(&mut session, &mut report)?,
            other => {
                return Err(EngineError::Schema(format!("unknown command {other:?}")))
            }
        }
    }

    let text = match format.as_str() {
        "structured" => report.render_structured(),
        _ => report.table.clone(),
    };
    Ok(RunOutput { text, failed: report.failed })
}

fn emit_build(build: &ResolutionBuild, report: &mut Report) {
    let flavor = build.flavor.as_str();
    let cert = format!("{},{}", build.window.n, build.certified_d());
    let mut rows = Vec::new();
    for v in build.ext.vars() {
        report.record(
            Record::new("var")
                .field("flavor", flavor)
                .field("id", v.id)
                .field("name", &v.name)
                .field("kind", v.kind.as_str())
                .field("hdeg", v.hdeg)
                .field("ideg", v.ideg)
                .field("boundary", build.ext.format_element(&v.boundary)),
        );
        rows.push(vec![
            v.name.clone(),
            v.kind.as_str().to_string(),
            v.hdeg.to_string(),
            v.ideg.to_string(),
            build.ext.format_element(&v.boundary),
        ]);
    }
    report.table_line(format!("{flavor} variables:"));
    report.table_rows(&["name", "kind", "hdeg", "ideg", "boundary"], &rows);
    let counts = build.variable_counts();
    for (h, c) in counts.iter().enumerate().skip(1) {
        report.record(
            Record::new("count")
                .field("flavor", flavor)
                .field("hdeg", h)
                .field("vars", c)
                .field("cert", &cert),
        );
    }
    report.table_line(format!(
        "counts by degree 1..{}: {:?}",
        build.window.n,
        &counts[1..]
    ));
    report.table_line("");
}

fn cmd_closure(session: &mut Session, opts: &RunOptions, report: &mut Report) -> Result<()> {
    if let Some(path) = &opts.load_cache {
        let build = cache::load_build(path, &session.map, &session.hash, session.window)?;
        if build.flavor != Flavor::AcyclicClosure {
            return Err(EngineError::Cache("cache does not hold a closure".into()));
        }
        session.closure = Some(build);
    }
    let hash = session.hash.clone();
    let build = session.closure()?;
    emit_build(build, report);
    if let Some(path) = &opts.save_cache {
        cache::save_build(build, &hash, path)?;
    }
    Ok(())
}

fn cmd_model(session: &mut Session, opts: &RunOptions, report: &mut Report) -> Result<()> {
    if let Some(path) = &opts.load_cache {
        let build = cache::load_build(path, &session.map, &session.hash, session.window)?;
        if build.flavor != Flavor::MinimalModel {
            return Err(EngineError::Cache("cache does not hold a model".into()));
        }
        session.model_direct = Some(build);
    }
    let hash = session.hash.clone();
    let build = session.model_direct()?;
    emit_build(build, report);
    if let Some(path) = &opts.save_cache {
        cache::save_build(build, &hash, path)?;
    }
    Ok(())
}

fn cmd_compare(session: &mut Session, opts: &RunOptions, report: &mut Report) -> Result<()> {
    if let Some(path) = &opts.load_cache {
        let (closure, model, cmp) =
            cache::load_comparison(path, &session.map, &session.hash, session.window)?;
        session.closure = Some(closure);
        session.comparison = Some((model, cmp));
    }
    let hash = session.hash.clone();
    let save = opts.save_cache.clone();
    let (closure, model, cmp) = session.comparison()?;
    emit_build(model, report);
    let cert = format!("{},{}", model.window.n, model.certified_d());
    let mut rows = Vec::new();
    for v in model.ext.vars() {
        let image = closure.ext.format_element(&cmp.assignment[&v.id]);
        report.record(
            Record::new("assignment")
                .field("var", &v.name)
                .field("image", &image),
        );
        rows.push(vec![v.name.clone(), image]);
    }
    report.table_line("comparison map:");
    report.table_rows(&["variable", "image"], &rows);
    let mut lift_rows = Vec::new();
    for (yid, lift) in &cmp.lifts {
        let yname = &closure.ext.var(*yid).name;
        let text = model.ext.format_element(lift);
        report.record(Record::new("lift").field("y", yname).field("cycle", &text));
        lift_rows.push(vec![yname.clone(), text]);
    }
    report.table_line("chosen lifts:");
    report.table_rows(&["y", "lift of d(y)"], &lift_rows);

    let chain = compare::verify_chain_map(model, closure, cmp);
    report.record(
        Record::new("check")
            .field("name", "chain-map")
            .field("pass", chain.ok)
            .field("checked", chain.checked)
            .field("cert", &cert),
    );
    report.table_line(format!(
        "chain map: {} ({} variables checked)",
        pass_str(chain.ok),
        chain.checked
    ));
    if !chain.ok {
        report.mark_failed();
        if let Some(f) = &chain.first_failure {
            report.table_line(format!("  first failure: {f}"));
        }
    }
    let qi = compare::verify_quasi_iso(model, closure, cmp);
    report.record(
        Record::new("check")
            .field("name", "quasi-iso")
            .field("pass", qi.ok)
            .field("cert", &cert),
    );
    report.table_line(format!("surjective quasi-isomorphism: {}", pass_str(qi.ok)));
    if !qi.ok {
        report.mark_failed();
    }
    report.table_line("");
    if let Some(path) = save {
        cache::save_comparison(model, closure, cmp, &hash, &path)?;
    }
    Ok(())
}

fn cmd_pi(session: &mut Session, report: &mut Report) -> Result<()> {
    let (closure, model, cmp) = session.comparison()?;
    let lie = pi::homotopy_lie_algebra(model)?;
    let split = pi::split_structure(&lie, cmp)?;
    let cert = format!("{},{}", model.window.n, model.certified_d());
    let mut rows = Vec::new();
    for (pos, g) in lie.generators.iter().enumerate() {
        let part = if split.l_part.contains(&pos) { "L" } else { "L-inf" };
        report.record(
            Record::new("pi-generator")
                .field("name", format!("s:{}*", g.name))
                .field("degree", g.degree)
                .field("part", part)
                .field("square-defined", g.has_square)
                .field("cert", &cert),
        );
        rows.push(vec![
            format!("s:{}*", g.name),
            g.degree.to_string(),
            part.to_string(),
        ]);
    }
    report.table_line("homotopy Lie algebra basis:");
    report.table_rows(&["functional", "degree", "part"], &rows);
    let mut nonzero_brackets = 0usize;
    for &(j, i, l, c) in &lie.brackets {
        if c.is_zero() {
            continue;
        }
        nonzero_brackets += 1;
        report.record(
            Record::new("pi-bracket")
                .field("j", &lie.generators[j].name)
                .field("i", &lie.generators[i].name)
                .field("l", &lie.generators[l].name)
                .field("coeff", c)
                .field("cert", &cert),
        );
    }
    let mut square_rows = Vec::new();
    for &(i, l, c) in &lie.squares {
        if c.is_zero() {
            continue;
        }
        report.record(
            Record::new("pi-square")
                .field("i", &lie.generators[i].name)
                .field("l", &lie.generators[l].name)
                .field("coeff", c)
                .field("cert", &cert),
        );
        square_rows.push(vec![
            format!("(s:{}*)^[2]", lie.generators[i].name),
            format!("{} s:{}*", c, lie.generators[l].name),
        ]);
    }
    report.table_line(format!("nonzero brackets: {nonzero_brackets}"));
    if !square_rows.is_empty() {
        report.table_line("reduced squares:");
        report.table_rows(&["source", "value"], &square_rows);
    }
    let (abelian, witness) = pi::check_abelian(&lie);
    report.record(
        Record::new("check")
            .field("name", "abelian")
            .field("pass", abelian)
            .field("cert", &cert),
    );
    report.table_line(format!("abelian bracket: {}", pass_str(abelian)));
    if let Some(w) = witness {
        report.table_line(format!("  witness: {w}"));
    }
    let axioms = pi::verify_lie_axioms(&lie);
    report.record(
        Record::new("check")
            .field("name", "lie-axioms")
            .field("pass", axioms.is_ok())
            .field("cert", &cert),
    );
    if let Err(e) = &axioms {
        report.mark_failed();
        report.table_line(format!("lie axioms: FAIL ({e})"));
    } else {
        report.table_line("lie axioms: PASS");
    }
    let structure = pi::check_abelian_structure(closure, model, cmp, &lie)?;
    report.record(
        Record::new("check")
            .field("name", "abelian-structure")
            .field("centrality", structure.centrality.as_str())
            .field("dims", structure.dims.as_str())
            .field("squares", structure.squares.as_str())
            .field("pass", structure.ok)
            .field("cert", &cert),
    );
    report.table_line(format!(
        "splitting structure: {} (centrality {}, dimensions {}, squares {})",
        pass_str(structure.ok),
        structure.centrality.as_str(),
        structure.dims.as_str(),
        structure.squares.as_str()
    ));
    for (src, tgt) in &structure.square_chain {
        report.record(
            Record::new("square-chain")
                .field("source", format!("s:{src}*"))
                .field("target", format!("s:{tgt}*"))
                .field("cert", &cert),
        );
    }
    if !structure.ok {
        report.mark_failed();
    }
    report.table_line("");
    Ok(())
}

fn tri(t: TriState) -> &'static str {
    t.as_str()
}

fn pass_str(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_deviations(session: &mut Session, report: &mut Report) -> Result<()> {
    session.model_direct()?;
    session.closure()?;
    let model = session.model_direct.as_ref().unwrap();
    let closure = session.closure.as_ref().unwrap();
    let table = classify::deviations(model, closure);
    let cert = format!("{},{}", model.window.n, model.certified_d());
    let (weak, _) = classify::is_weakly_closed(closure);
    let mut rows = Vec::new();
    let mut all_agree = true;
    for i in 2..=table.certified_through {
        let eps = table.eps.get(&i).copied().unwrap_or(0);
        let gamma = table.gamma.get(&i).copied().unwrap_or(0);
        let pred = table.eps_predicted.get(&i).copied().unwrap_or(0);
        let agree = eps == pred;
        all_agree &= agree;
        report.record(
            Record::new("deviation")
                .field("i", i)
                .field("eps", eps)
                .field("gamma", gamma)
                .field("predicted", pred)
                .field("agree", agree)
                .field("cert", &cert),
        );
        rows.push(vec![
            i.to_string(),
            eps.to_string(),
            gamma.to_string(),
            pred.to_string(),
            agree.to_string(),
        ]);
    }
    report.table_line("deviations:");
    report.table_rows(&["i", "eps", "gamma-dev", "predicted", "agree"], &rows);
    report.record(
        Record::new("check")
            .field("name", "deviation-prediction")
            .field("pass", all_agree || !weak)
            .field("weakly-closed", weak)
            .field("cert", &cert),
    );
    if weak && !all_agree {
        report.mark_failed();
        report.table_line("prediction formula: FAIL (weakly-closed map disagrees)");
    } else {
        report.table_line(format!(
            "prediction formula: {}",
            if weak { "PASS" } else { "not applicable (map is not weakly-closed)" }
        ));
    }
    report.table_line("");
    Ok(())
}

fn cmd_classify(session: &mut Session, report: &mut Report) -> Result<()> {
    let closure = session.closure()?;
    let c = classify::classify(closure);
    let cert = format!("{},{}", c.window_n, c.certified_d);
    report.record(
        Record::new("classify")
            .field("closed", c.closed)
            .field("weakly-closed", c.weakly_closed)
            .field("ci", tri(c.ci))
            .field("qci", tri(c.qci))
            .field("cert", &cert),
    );
    report.table_line("classification:");
    report.table_rows(
        &["predicate", "verdict", "witness"],
        &[
            vec![
                "closed".into(),
                c.closed.to_string(),
                c.closed_witness.clone().unwrap_or_default(),
            ],
            vec![
                "weakly-closed".into(),
                c.weakly_closed.to_string(),
                c.weakly_closed_witness.clone().unwrap_or_default(),
            ],
            vec!["complete-intersection".into(), tri(c.ci).into(), String::new()],
            vec!["quasi-complete-intersection".into(), tri(c.qci).into(), String::new()],
        ],
    );
    report.table_line("");
    Ok(())
}

fn cmd_betti(session: &mut Session, report: &mut Report) -> Result<()> {
    let closure = session.closure()?;
    let betti = resolve::betti_numbers(closure);
    let cert = format!("{},{}", closure.window.n, closure.certified_d());
    let mut rows = Vec::new();
    for (h, b) in betti.iter().enumerate() {
        report.record(
            Record::new("betti")
                .field("hdeg", h)
                .field("rank", b)
                .field("cert", &cert),
        );
        rows.push(vec![h.to_string(), b.to_string()]);
    }
    report.table_line("ranks of the closure:");
    report.table_rows(&["hdeg", "rank"], &rows);
    report.table_line("");
    Ok(())
}

fn cmd_poincare(session: &mut Session, report: &mut Report) -> Result<()> {
    session.closure()?;
    session.model_direct()?;
    for build in [
        session.closure.as_ref().unwrap(),
        session.model_direct.as_ref().unwrap(),
    ] {
        let flavor = build.flavor.as_str();
        let p = classify::poincare_check(build);
        let cert = format!("{},{}", build.window.n, build.certified_d());
        let mut rows = Vec::new();
        for (d, (lhs, rhs)) in p
            .monomial_counts
            .iter()
            .zip(p.product_series.iter())
            .enumerate()
        {
            report.record(
                Record::new("poincare")
                    .field("flavor", flavor)
                    .field("degree", d)
                    .field("monomials", lhs)
                    .field("series", rhs)
                    .field("cert", &cert),
            );
            rows.push(vec![d.to_string(), lhs.to_string(), rhs.to_string()]);
        }
        report.table_line(format!("generating function identity ({flavor}):"));
        report.table_rows(&["degree", "monomials", "product"], &rows);
        report.record(
            Record::new("check")
                .field("name", format!("poincare-{flavor}"))
                .field("pass", p.ok)
                .field("cert", &cert),
        );
        report.table_line(format!("identity: {}", pass_str(p.ok)));
        if !p.ok {
            report.mark_failed();
        }
        report.table_line("");
    }
    Ok(())
}

fn cmd_check_all(session: &mut Session, report: &mut Report) -> Result<()> {
    let window = session.window;
    let mut verdicts: BTreeMap<String, bool> = BTreeMap::new();
    let cert_of = |b: &ResolutionBuild| format!("{},{}", b.window.n, b.certified_d());

    // closure-side invariants
    let closure = session.closure()?.clone();
    let closure_cert = cert_of(&closure);
    let acyc = resolve::verify_acyclicity(&closure)?;
    verdicts.insert("closure-acyclicity".into(), acyc.ok);
    let gind_zero = closure
        .ext
        .gamma_indecomposables()?
        .differential_is_zero();
    verdicts.insert("closure-gamma-decomposable".into(), gind_zero);

    // model-side invariants
    let model_direct = session.model_direct()?.clone();
    let macyc = resolve::verify_acyclicity(&model_direct)?;
    verdicts.insert("model-acyclicity".into(), macyc.ok);
    let ind_zero = model_direct.ext.indecomposables()?.differential_is_zero();
    verdicts.insert("model-minimality".into(), ind_zero);

    // two pipelines agree on variable counts
    let (weak, _) = classify::is_weakly_closed(&closure);
    if weak {
        let (closure_ref, cmp_model, cmp) = session.comparison()?;
        verdicts.insert(
            "pipelines-agree".into(),
            cmp_model.variable_counts() == model_direct.variable_counts(),
        );
        let chain = compare::verify_chain_map(cmp_model, closure_ref, cmp);
        verdicts.insert("chain-map".into(), chain.ok);
        let qi = compare::verify_quasi_iso(cmp_model, closure_ref, cmp);
        verdicts.insert("quasi-iso".into(), qi.ok);
        let ta = compare::exact_sequence_check(cmp_model, closure_ref, cmp)?;
        verdicts.insert("indecomposable-exact-sequence".into(), ta.ok);
        for (d, (lhs, y, pd, pd1)) in &ta.dims {
            report.record(
                Record::new("ind-sequence")
                    .field("degree", d)
                    .field("ind", lhs)
                    .field("gind", y)
                    .field("pinf", pd)
                    .field("pinf-prev", pd1)
                    .field("pass", lhs == &(y + pd + pd1))
                    .field("cert", &closure_cert),
            );
        }
        let lie = pi::homotopy_lie_algebra(cmp_model)?;
        let (closed, _) = classify::is_closed(&closure);
        if closed {
            let (abelian, _) = pi::check_abelian(&lie);
            verdicts.insert("abelian-bracket".into(), abelian);
        }
        let abelian_report = pi::check_abelian_structure(closure_ref, cmp_model, cmp, &lie)?;
        verdicts.insert("abelian-structure".into(), abelian_report.ok);
        verdicts.insert("lie-axioms".into(), pi::verify_lie_axioms(&lie).is_ok());
    }

    // deviation machinery
    let table = classify::deviations(&model_direct, &closure);
    if weak {
        let mismatches = classify::deviations_consistent(&table)?;
        verdicts.insert("deviation-prediction".into(), mismatches.is_empty());
        let eps2 = table.eps.get(&2) == table.gamma.get(&2);
        let eps3 = table.eps.get(&3) == table.gamma.get(&3);
        verdicts.insert("low-degree-deviations".into(), eps2 && eps3);
        let ci = classify::check_ci_rigidity(&table, &closure);
        verdicts.insert("ci-rigidity".into(), ci.consistent);
        let qci = classify::check_qci_rigidity(&table, &closure);
        verdicts.insert("qci-rigidity".into(), qci.consistent);
    }

    // generating function identities
    verdicts.insert(
        "poincare-closure".into(),
        classify::poincare_check(&closure).ok,
    );
    verdicts.insert(
        "poincare-model".into(),
        classify::poincare_check(&model_direct).ok,
    );

    let mut failures = 0usize;
    report.table_line("check all:");
    for (name, ok) in &verdicts {
        report.record(
            Record::new("check")
                .field("name", name)
                .field("pass", ok)
                .field("cert", &closure_cert),
        );
        report.table_line(format!("  {} {}", pass_str(*ok), name));
        if !ok {
            failures += 1;
        }
    }
    report.record(
        Record::new("summary")
            .field("pass", failures == 0)
            .field("checks", verdicts.len())
            .field("failures", failures)
            .field("window", format!("{},{}", window.n, window.d)),
    );
    report.table_line(format!(
        "summary: {} ({} checks, {} failures)",
        pass_str(failures == 0),
        verdicts.len(),
        failures
    ));
    if failures > 0 {
        report.mark_failed();
    }
    report.table_line("");
    Ok(())
}
