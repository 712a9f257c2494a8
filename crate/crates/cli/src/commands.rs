use std::fmt::Write as _;

use invalg::bounds::{self, BoundsRow, LOWER_BOUND_HYPOTHESIS, NOETHERIAN_EXCLUSION};
use invalg::census::{self, CensusOptions, DEFAULT_BUDGET};
use invalg::field::{extension, AnyField, Field, FieldSpec, Fq};
use invalg::matrix::Matrix;
use invalg::mualg::{matrix_element, AlgebraDescription, AlgebraError, InvAlgebra};
use invalg::unitary::{dims as dims_record, general_dim_zr, orbit_data};
use invalg::unitary::{
    classify as classify_tuple, orthogonal_matrix_algebra, symplectic_matrix_algebra, unitary_finite, ClassifyError,
    ClassifyOptions, TupleFile, UnitaryModel, Witness,
};
use serde::Serialize;
use serde_json::json;

use crate::{BoundsArgs, CensusArgs, ClassifyArgs, DerivationsArgs, DimsArgs, Failure, IdentitiesArgs, ModeArg, Report, ValidateArgs, VerifyArgs};

macro_rules! on_field {
    ($field:expr, |$f:ident| $body:expr) => {
        match $field {
            AnyField::Q($f) => $body,
            AnyField::Fq($f) => $body,
        }
    };
}

fn parse_field(spec: &str) -> Result<(FieldSpec, AnyField), Failure> {
    let s: FieldSpec = spec.parse()?;
    let f = s.build()?;
    Ok((s, f))
}

fn finite_field(spec: &str) -> Result<Fq, Failure> {
    match parse_field(spec)?.1 {
        AnyField::Fq(f) => Ok(f),
        AnyField::Q(_) => Err(Failure::Usage("this subcommand needs a finite field".into())),
    }
}

fn read_file(path: &std::path::Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn budget(flag: Option<u128>) -> Result<u128, Failure> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var("INVALG_BUDGET") {
        Ok(s) => s.trim().parse().map_err(|_| Failure::Usage(format!("INVALG_BUDGET is not an integer: {s:?}"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

#[derive(Serialize)]
struct GeneratorCheck {
    name: String,
    expected: usize,
    got: usize,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn check(name: impl Into<String>, expected: usize, got: usize) -> GeneratorCheck {
    GeneratorCheck { name: name.into(), expected, got, pass: expected == got, note: None }
}

fn generator_checks<F: Field>(f: &F, n: usize, out: &mut Vec<GeneratorCheck>) -> Result<(), Failure> {
    let m = UnitaryModel::new(f, n)?;
    let alg = m.algebra();
    let nn = n * n;
    out.push(check("(u, d_1n) generates A", 2 * nn, alg.closure_dim(&[m.full_generator()])));
    out.push(check("(u, u) generates B[I]", nn, alg.closure_dim(&[m.bi_generator()])));
    if n % 2 == 0 {
        if n > 2 {
            out.push(check("(u, Ω u Ω⁻¹) generates B[Ω]", nn, alg.closure_dim(&[m.bomega_generator()?])));
        } else {
            out.push(check("pair of graph elements generates B[Ω]", nn, alg.closure_dim(&m.bomega_pair()?)));
        }
    }
    let u = [matrix_element(&m.u())];
    let ones = vec![f.one(); n];
    out.push(check("u generates (M_n, t)", nn, orthogonal_matrix_algebra(f, n, &ones)?.closure_dim(&u)));
    if n % 2 == 0 && n > 2 {
        out.push(check("u generates (M_n, Ω-involution)", nn, symplectic_matrix_algebra(f, n)?.closure_dim(&u)));
    }
    Ok(())
}

fn av_checks_q<F: Field>(f: &F, n: usize, out: &mut Vec<GeneratorCheck>) -> Result<(), Failure> {
    let m = UnitaryModel::new(f, n)?;
    for k in 1..n {
        let g = m.av_generator(k, &f.from_i64(2))?;
        out.push(check(format!("(u, d_1k + 2 d_(k+1)n) generates A[V({k})]"), 2 * (n * n - k * (n - k)), m.algebra().closure_dim(&[g])));
    }
    Ok(())
}

fn av_checks_fq(f: &Fq, n: usize, out: &mut Vec<GeneratorCheck>) -> Result<(), Failure> {
    let m = UnitaryModel::new(f, n)?;
    for k in 1..n {
        let g = m.av_generator_auto(k)?;
        let alpha = g.model.field().format_elem(&g.alpha);
        let mut c = check(
            format!("(u, d_1k + α d_(k+1)n) generates A[V({k})]"),
            2 * (n * n - k * (n - k)),
            g.model.algebra().closure_dim(&g.tuple),
        );
        c.note = Some(if g.escalated { format!("α = {alpha} over {}", g.model.field().spec()) } else { format!("α = {alpha}") });
        out.push(c);
    }
    Ok(())
}

pub fn verify_generators(a: &VerifyArgs) -> Result<Report, Failure> {
    let (spec, field) = parse_field(&a.field)?;
    if a.n == 0 {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    let mut checks = Vec::new();
    match &field {
        AnyField::Q(f) => {
            generator_checks(f, a.n, &mut checks)?;
            av_checks_q(f, a.n, &mut checks)?;
        }
        AnyField::Fq(f) => {
            generator_checks(f, a.n, &mut checks)?;
            av_checks_fq(f, a.n, &mut checks)?;
            if f.degree() == 1 {
                let (alg, g) = unitary_finite(a.n, f.p())?;
                checks.push(check(
                    format!("θI + u generates (M_n(F_{}²), conjugate transpose) over F_{}", f.p(), f.p()),
                    2 * a.n * a.n,
                    alg.closure_dim(&[g]),
                ));
            }
        }
    }
    let mut text = String::new();
    for c in &checks {
        let note = c.note.as_deref().map(|s| format!(" ({s})")).unwrap_or_default();
        writeln!(text, "{:<4} {}: {} (expected {}){note}", if c.pass { "ok" } else { "FAIL" }, c.name, c.got, c.expected).unwrap();
    }
    let failed: Vec<&GeneratorCheck> = checks.iter().filter(|c| !c.pass).collect();
    let violation = (!failed.is_empty()).then(|| ("generator closure dimension mismatch".to_string(), serde_json::to_value(&failed).unwrap()));
    let mut r = Report::new(json!({ "n": a.n, "field": spec.to_string(), "checks": checks }), text);
    r.field = Some(spec.to_string());
    r.violation = violation;
    Ok(r)
}

pub fn identities(a: &IdentitiesArgs) -> Result<Report, Failure> {
    let (spec, field) = parse_field(&a.field)?;
    if a.n < 2 {
        return Err(Failure::Usage("identities need n >= 2".into()));
    }
    let checks = on_field!(&field, |f| UnitaryModel::new(f, a.n)?.identity_suite());
    let mut per_family = [0usize; 3];
    for c in &checks {
        per_family[c.family as usize - 1] += 1;
    }
    let failures: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
    let text = format!(
        "n = {} over {spec}: {} checks (families {}/{}/{}), {} failures\n",
        a.n,
        checks.len(),
        per_family[0],
        per_family[1],
        per_family[2],
        failures.len()
    );
    let result = json!({ "n": a.n, "field": spec.to_string(), "total": checks.len(), "per_family": per_family, "failures": failures });
    let mut r = Report::new(result, text);
    r.field = Some(spec.to_string());
    r.violation = (!failures.is_empty()).then(|| ("identity check failed".to_string(), serde_json::to_value(&failures).unwrap()));
    Ok(r)
}

fn classify_failure(e: ClassifyError) -> Failure {
    match e {
        ClassifyError::TheoryViolation { detail, tuple } | ClassifyError::InvariantFailure { detail, tuple } => {
            Failure::Violation { message: detail, counterexample: serde_json::to_value(tuple).unwrap() }
        }
        other => Failure::Usage(other.to_string()),
    }
}

fn matrix_rows(f: &Fq, m: &Matrix<Fq>) -> Vec<Vec<String>> {
    (0..m.rows()).map(|r| m.row(r).iter().map(|x| f.format_elem(x)).collect()).collect()
}

fn witness_field(f: &Fq, degree: u32) -> Result<Fq, Failure> {
    Ok(if degree == 1 { f.clone() } else { extension(f, degree)?.field.clone() })
}

pub fn classify(a: &ClassifyArgs) -> Result<Report, Failure> {
    let f = finite_field(&a.field)?;
    let file: TupleFile = serde_json::from_str(&read_file(&a.tuple)?)?;
    if file.n != a.n {
        return Err(Failure::Usage(format!("tuple file has n = {}, --n is {}", file.n, a.n)));
    }
    let file_field: FieldSpec = file.field.parse()?;
    if file_field != f.spec() {
        return Err(Failure::Usage(format!("tuple file is over {file_field}, --field is {}", f.spec())));
    }
    let model = UnitaryModel::new(&f, a.n)?;
    let tuple = file.to_tuple(&model)?;
    let opts = ClassifyOptions { all_witnesses: a.all_witnesses, max_ext: a.max_ext, budget: budget(None)? };
    let c = classify_tuple(&model, &tuple, &opts).map_err(classify_failure)?;
    let mut text = format!("closure dim {} of {}, first projection dim {}\n", c.closure_dim, model.dim(), c.p1_dim);
    let mut witnesses = Vec::new();
    for w in &c.witnesses {
        match w {
            Witness::Generates => {
                text.push_str("generates\n");
                witnesses.push(json!({ "kind": "generates" }));
            }
            Witness::InvariantSubspace { subspace, degree } => {
                let big = witness_field(&f, *degree)?;
                let basis: Vec<Vec<String>> = subspace.basis().iter().map(|v| v.iter().map(|x| big.format_elem(x)).collect()).collect();
                writeln!(text, "invariant subspace of dim {} over {}: {:?}", subspace.dim(), big.spec(), basis).unwrap();
                witnesses.push(json!({ "kind": "invariant-subspace", "field": big.spec().to_string(), "degree": degree, "dim": subspace.dim(), "basis": basis }));
            }
            Witness::Conjugator { p, kind, degree } => {
                let big = witness_field(&f, *degree)?;
                let rows = matrix_rows(&big, p);
                writeln!(text, "conjugator ({}) over {}: {:?}", serde_json::to_value(kind).unwrap().as_str().unwrap(), big.spec(), rows).unwrap();
                witnesses.push(json!({ "kind": "conjugator", "symmetry": kind, "field": big.spec().to_string(), "degree": degree, "p": rows }));
            }
        }
    }
    let cls = c.classes();
    let classes = json!({ "x_rational": cls.x_rational, "x_geometric": cls.x_geometric, "y": cls.y, "y_prime": cls.y_prime });
    let result = json!({
        "n": a.n,
        "field": f.spec().to_string(),
        "closure_dim": c.closure_dim,
        "p1_dim": c.p1_dim,
        "generates": c.generates(),
        "witnesses": witnesses,
        "classes": classes,
    });
    let mut r = Report::new(result, text);
    r.field = Some(f.spec().to_string());
    Ok(r)
}

pub fn census(a: &CensusArgs) -> Result<Report, Failure> {
    let opts = CensusOptions {
        classify: a.classify,
        workers: a.workers,
        budget: budget(a.budget)?,
        checkpoint: a.checkpoint.clone(),
        ..Default::default()
    };
    let run = match a.mode {
        ModeArg::Exhaustive => census::run_exhaustive(a.n, a.r, a.q, &opts),
        ModeArg::Sampled => census::run_sampled(a.n, a.r, a.q, a.samples, a.seed, &opts),
    };
    let rep = match run {
        Ok(rep) => rep,
        Err(census::CensusError::Classify(e)) => return Err(classify_failure(e)),
        Err(e) => return Err(e.into()),
    };
    let mut text = format!(
        "n = {}, r = {}, q = {}: {} of {} tuples do not generate (frequency {:.6}, 95% CI [{:.6}, {:.6}])\n",
        rep.n, rep.r, rep.q, rep.nongen, rep.total, rep.frequency, rep.wilson95.0, rep.wilson95.1
    );
    if let Some(e) = rep.exponent_estimate {
        writeln!(text, "exponent estimate {e:.4} (dim Z_r = {})", rep.predicted_dim_z).unwrap();
    }
    writeln!(text, "frequency · q^c_A = {:.4} (c_A = {})", rep.scaled_frequency, rep.predicted_c_a).unwrap();
    if let Some(t) = &rep.classes {
        for (i, (x, g)) in t.x_rational.iter().zip(&t.x_geometric_only).enumerate() {
            writeln!(text, "X_{}: {x} rational, {g} geometric only", i + 1).unwrap();
        }
        writeln!(text, "Y: {}, Y': {}, in several classes: {}", t.y, t.y_prime, t.multi_class).unwrap();
    }
    let mut r = Report::new(&rep, text);
    r.field = Some(FieldSpec::of_order(a.q)?.to_string());
    r.seed = (a.mode == ModeArg::Sampled).then_some(a.seed);
    Ok(r)
}

pub fn dims(a: &DimsArgs) -> Result<Report, Failure> {
    if a.n == 0 || a.r == 0 {
        return Err(Failure::Usage("n and r must be at least 1".into()));
    }
    let rec = dims_record(a.n, a.r, a.characteristic);
    let orbits = orbit_data(a.n, a.r);
    let general = general_dim_zr(rec.dim_g, &orbits, a.r);
    let mut text = format!("dim Z = {}, c_A = {}\n", rec.dim_z, rec.c_a);
    let mut comps: Vec<String> = rec.dim_x.iter().map(|(i, d)| format!("X_{i} {d}")).collect();
    if a.n > 1 {
        let bound = if rec.dim_y_bar_exact { "" } else { " (upper bound)" };
        comps.push(format!("Y {}{bound}", rec.dim_y_bar));
    }
    if let Some(y) = rec.dim_y_prime_bar {
        comps.push(format!("Y' {y}"));
    }
    if !comps.is_empty() {
        writeln!(text, "components: {}", comps.join(", ")).unwrap();
    }
    if let Some((d, exact)) = general {
        writeln!(text, "orbit bound: {d}{}", if exact { " (exact)" } else { " (upper bound)" }).unwrap();
    }
    let result = json!({ "dims": rec, "orbits": orbits, "orbit_bound": general.map(|(d, e)| json!({ "dim": d, "exact": e })) });
    Ok(Report::new(result, text))
}

pub fn bounds(a: &BoundsArgs) -> Result<Report, Failure> {
    if let Some(t) = &a.table {
        let (nmax, dmax) = (t[0], t[1]);
        if nmax < 2 {
            return Err(Failure::Usage("table needs nmax >= 2".into()));
        }
        let rows = bounds::bounds_table(nmax, dmax);
        let csv = bounds::table_csv(&rows);
        let text = match &a.csv {
            Some(path) => {
                std::fs::write(path, &csv).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
                format!("{} rows written to {}\n", rows.len(), path.display())
            }
            None => csv,
        };
        return Ok(Report::new(json!({ "rows": rows }), text));
    }
    let (Some(n), Some(d)) = (a.n, a.d) else {
        return Err(Failure::Usage("bounds needs --n and --d, or --table NMAX DMAX".into()));
    };
    if n == 0 {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    if n == 1 {
        let least = bounds::theorem32_formula(1, d).expect("c_A(r) = r exceeds d at r = d + 1");
        let text = format!(
            "n = 1: c_A(r) = r, so c_A(r) > {d} first at r = {least}; the closed-form upper bound assumes n > 1\nnoetherian bound {}\n",
            bounds::noetherian_bound(d)
        );
        let result = json!({ "n": 1, "d": d, "theorem32": least, "noetherian": bounds::noetherian_bound(d), "upper": null, "lower": null });
        return Ok(Report::new(result, text));
    }
    let row: BoundsRow = bounds::bounds_row(n, d)?;
    if row.upper != row.theorem32 {
        return Err(Failure::Violation {
            message: "closed-form upper bound disagrees with the codimension criterion".into(),
            counterexample: serde_json::to_value(&row).unwrap(),
        });
    }
    let text = format!(
        "n = {n}, d = {d}\nupper bound {} (least r with c_A(r) > d: {})\nlower bound examples {} ({})\nnoetherian bound {} ({})\n",
        row.upper, row.theorem32, row.lower, LOWER_BOUND_HYPOTHESIS, row.noetherian, NOETHERIAN_EXCLUSION
    );
    Ok(Report::new(row, text))
}

fn derivation_report<F: Field>(alg: &InvAlgebra<F>, expected: Option<usize>) -> Result<Report, Failure> {
    let (dim, _) = alg.derivation_algebra();
    let spec = alg.field().spec().to_string();
    let mut text = format!("dim Der = {dim} over {spec} (algebra of dimension {})\n", alg.dim());
    if let Some(e) = expected {
        writeln!(text, "expected n² - 1 = {e}").unwrap();
    }
    let result = json!({ "field": spec, "algebra_dim": alg.dim(), "derivations": dim, "expected": expected });
    let mut r = Report::new(result, text);
    r.field = Some(spec);
    if let Some(e) = expected.filter(|&e| e != dim) {
        r.violation = Some((format!("dim Der = {dim}, expected {e}"), json!({ "derivations": dim, "expected": e })));
    }
    Ok(r)
}

pub fn derivations(a: &DerivationsArgs) -> Result<Report, Failure> {
    if let Some(path) = &a.algebra {
        let desc: AlgebraDescription = serde_json::from_str(&read_file(path)?)?;
        let field = desc.field_spec()?.build()?;
        return on_field!(&field, |f| derivation_report(&build_algebra(&desc, f)?, None));
    }
    let n = a.n.expect("clap requires --n without --algebra");
    if n == 0 {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    let (_, field) = parse_field(&a.field)?;
    on_field!(&field, |f| {
        let m = UnitaryModel::new(f, n)?;
        // the automorphism group is PGL_n ⋊ S_2; derivations see its Lie algebra in characteristic 0
        let expected = (f.characteristic() == 0).then_some(n * n - 1);
        derivation_report(m.algebra(), expected)
    })
}

fn build_algebra<F: Field>(desc: &AlgebraDescription, f: &F) -> Result<InvAlgebra<F>, Failure> {
    desc.build(f).map_err(|e| match e {
        AlgebraError::Field(_) | AlgebraError::Shape(_) | AlgebraError::IndexOutOfRange { .. } => Failure::Usage(e.to_string()),
        axiom => Failure::Violation { message: axiom.to_string(), counterexample: serde_json::to_value(desc).unwrap() },
    })
}

pub fn validate_algebra(a: &ValidateArgs) -> Result<Report, Failure> {
    let desc: AlgebraDescription = serde_json::from_str(&read_file(&a.file)?)?;
    let spec = desc.field_spec()?;
    let field = spec.build()?;
    let (dim, fingerprint) = on_field!(&field, |f| {
        let alg = build_algebra(&desc, f)?;
        (alg.dim(), alg.fingerprint())
    });
    let text = format!("valid algebra with involution: dim {dim} over {spec}\nfingerprint {fingerprint}\n");
    let mut r = Report::new(json!({ "dim": dim, "field": spec.to_string(), "fingerprint": fingerprint }), text);
    r.field = Some(spec.to_string());
    Ok(r)
}

