use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest as _, Sha256};

use realizability::field::{check_bounded_density, check_radon, default_phi_samples, generalized_moment_matrix, Grid};
use realizability::io::{self, EnsembleJson, MomentSequenceJson, SampledFunctionJson, SemiAlgebraicJson, SequenceJson, TensorSeqJson};
use realizability::linalg::is_psd_scaled;
use realizability::moments::{check_semialgebraic, MomentSequence, SemiAlgebraicSpec};
use realizability::oracle::{self, exact_moments, sample_atomic_ensemble, Domain, ExactMoments, FitStatus};
use realizability::poly::MultiIndex;
use realizability::quasi::{
    bump_derivative_bounds, classify, dj_carleman_sums, dominating_summable_sequence, log_convex_regularize, log_convexity_defect,
    regularization_vertices, hurwitz_zeta, PositiveSequence, QaClass, SummableSequence, Thresholds,
};
use realizability::sobolev::{bump_test_family, condition_d_witness, bump_norm_bound, weighted_sobolev_norm, SampledFunction, SobolevIndex};
use realizability::{Phi, Tensors};

use crate::{write_json, CheckCmd, Cli, Command, Digest, Failure, GenArgs, MomentsArgs, OracleCmd, Outcome, QaCmd, SobolevCmd, Status};

#[derive(Default)]
pub struct Context {
    pub digests: Vec<Digest>,
}

impl Context {
    /// Reads a path, or takes the argument itself when it is inline JSON.
    fn load(&mut self, arg: &str) -> Result<String, Failure> {
        let trimmed = arg.trim_start();
        let (source, text) = if trimmed.starts_with('{') || trimmed.starts_with('[') {
            ("inline".to_string(), arg.to_string())
        } else {
            let text = std::fs::read_to_string(arg).map_err(|e| Failure::input(format!("cannot read {arg}: {e}")))?;
            (arg.to_string(), text)
        };
        let sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        self.digests.push(Digest { source, sha256 });
        Ok(text)
    }

    fn parse<T: serde::de::DeserializeOwned>(&mut self, arg: &str) -> Result<T, Failure> {
        let text = self.load(arg)?;
        Ok(io::parse(&text)?)
    }

    fn moments(&mut self, arg: &str) -> Result<Loaded, Failure> {
        let text = self.load(arg)?;
        let v: Value = io::parse(&text)?;
        if v.get("values").is_some() {
            let j: MomentSequenceJson = io::parse(&text)?;
            Ok(Loaded::Points(j.try_into()?))
        } else if v.get("grid").is_some() {
            let j: TensorSeqJson = io::parse(&text)?;
            Ok(Loaded::Field(j.try_into()?))
        } else {
            Err(Failure::input("moment file is neither a moment sequence nor a tensor sequence"))
        }
    }
}

enum Loaded {
    Points(MomentSequence<f64>),
    Field(Tensors),
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn verdict(passed: bool) -> Status {
    if passed {
        Status::Passed
    } else {
        Status::Disproved
    }
}

pub fn dispatch(cli: &Cli, ctx: &mut Context) -> Result<Outcome, Failure> {
    let tol = cli.tol;
    if tol.is_nan() || tol < 0.0 {
        return Err(Failure::input(format!("--tol must be non-negative, got {tol}")));
    }
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Check(c) => check(c, tol, ctx),
        Command::Qa(q) => qa(q, ctx),
        Command::Sobolev(s) => sobolev(s, ctx),
        Command::Oracle(o) => oracle_cmd(o, tol, ctx),
    }
}

fn gen(a: &GenArgs) -> Result<Outcome, Failure> {
    let domain = if a.point {
        Domain::unit_box(a.d)
    } else {
        let h = a.h.unwrap_or(1.0 / a.grid as f64);
        Domain::Field { grid: Grid::new(a.d, a.grid, h, 0.0)?, max_density: a.max_density }
    };
    let e = sample_atomic_ensemble::<f64>(a.seed, a.atoms, &domain)?;
    let ensemble = to_value(&EnsembleJson::new(&e, a.n));
    let moments = match exact_moments(&e, a.n)? {
        ExactMoments::Points(m) => to_value(&MomentSequenceJson::from(&m)),
        ExactMoments::Field(m) => {
            let mut j = TensorSeqJson::from(&m);
            if let TensorSeqJson::Atomic { seed, recipe, .. } = &mut j {
                *seed = e.seed;
                *recipe = Some(e.recipe.clone());
            }
            to_value(&j)
        }
    };
    let summary = json!({ "atoms": e.len(), "mass": e.mass(), "max_density": e.max_density(), "seed": a.seed });
    let result = match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
            let (ep, mp) = (dir.join("ensemble.json"), dir.join("moments.json"));
            write_json(&ep, &ensemble)?;
            write_json(&mp, &moments)?;
            json!({ "summary": summary, "ensemble": ep.display().to_string(), "moments": mp.display().to_string() })
        }
        None => json!({ "summary": summary, "ensemble": ensemble, "moments": moments }),
    };
    Ok(Outcome { status: Status::Passed, result })
}

fn indicator_basis(grid: &Grid) -> Result<Vec<Phi>, Failure> {
    Ok((0..grid.cells()).map(|c| Phi::indicator(grid.clone(), c)).collect::<realizability::Result<_>>()?)
}

fn level(t: Option<usize>, max: usize, what: &str) -> Result<usize, Failure> {
    match t {
        Some(t) if t > max => Err(Failure::input(format!("--t {t} exceeds the largest level {max} available for {what}"))),
        Some(t) => Ok(t),
        None => Ok(max),
    }
}

fn field_level(m: &Tensors, t: Option<usize>) -> Result<usize, Failure> {
    if m.max_order() == 0 {
        return Err(Failure::input("field checks need moments of order >= 1"));
    }
    level(t, (m.max_order() - 1) / 2, "field checks (2t+1 <= N)")
}

fn check(c: &CheckCmd, tol: f64, ctx: &mut Context) -> Result<Outcome, Failure> {
    match c {
        CheckCmd::Psd(MomentsArgs { moments, t }) => match ctx.moments(moments)? {
            Loaded::Points(m) => {
                let t = level(*t, m.max_degree() / 2, "the moment matrix (2t <= N)")?;
                let r = is_psd_scaled(&m.moment_matrix(t)?, tol)?;
                Ok(Outcome { status: verdict(r.is_psd()), result: json!({ "level": t, "report": to_value(&r) }) })
            }
            Loaded::Field(m) => {
                let t = level(*t, m.max_order() / 2, "the generalized moment matrix (2t <= N)")?;
                let basis = indicator_basis(m.grid())?;
                let r = is_psd_scaled(&generalized_moment_matrix(&m, &basis, t)?, tol)?;
                Ok(Outcome { status: verdict(r.is_psd()), result: json!({ "level": t, "basis": "cell indicators", "report": to_value(&r) }) })
            }
        },
        CheckCmd::Semialgebraic { m, spec } => {
            let Loaded::Points(seq) = ctx.moments(&m.moments)? else {
                return Err(Failure::input("semialgebraic check needs a finite-dimensional moment sequence"));
            };
            let spec: SemiAlgebraicSpec<f64> = ctx.parse::<SemiAlgebraicJson>(spec)?.try_into()?;
            let t = level(m.t, seq.max_degree() / 2, "the moment matrix (2t <= N)")?;
            let r = check_semialgebraic(&seq, &spec, t, tol)?;
            Ok(Outcome { status: verdict(r.passed), result: to_value(&r) })
        }
        CheckCmd::Radon(a) => {
            let m = field_moments(ctx, &a.moments)?;
            let t = field_level(&m, a.t)?;
            let basis = indicator_basis(m.grid())?;
            let phis = default_phi_samples(m.grid(), false);
            let r = check_radon(&m, &basis, &phis, t, tol)?;
            Ok(Outcome { status: verdict(r.passed), result: to_value(&r) })
        }
        CheckCmd::BoundedDensity { m: a, c } => {
            let m = field_moments(ctx, &a.moments)?;
            let t = field_level(&m, a.t)?;
            let basis = indicator_basis(m.grid())?;
            let phis = default_phi_samples(m.grid(), false);
            let r = check_bounded_density(&m, *c, &basis, &phis, t, tol)?;
            Ok(Outcome { status: verdict(r.passed), result: to_value(&r) })
        }
    }
}

fn field_moments(ctx: &mut Context, arg: &str) -> Result<Tensors, Failure> {
    match ctx.moments(arg)? {
        Loaded::Field(m) => Ok(m),
        Loaded::Points(_) => Err(Failure::input("field checks need a moment tensor sequence")),
    }
}

fn sequence(ctx: &mut Context, arg: &str) -> Result<PositiveSequence<f64>, Failure> {
    Ok(ctx.parse::<SequenceJson>(arg)?.try_into()?)
}

fn qa(q: &QaCmd, ctx: &mut Context) -> Result<Outcome, Failure> {
    match q {
        QaCmd::Classify(a) => {
            let s = sequence(ctx, &a.seq)?;
            let v = classify(&s, a.n, Thresholds::default())?;
            let status = if v.classification == QaClass::Inconclusive { Status::Inconclusive } else { Status::Passed };
            Ok(Outcome { status, result: to_value(&v) })
        }
        QaCmd::Regularize(a) => {
            let s = sequence(ctx, &a.seq)?;
            let r = log_convex_regularize(&s, a.n)?;
            let ln: Vec<f64> = r.ln_terms_upto(a.n)?;
            let ln_orig = s.ln_terms_upto(a.n)?;
            let result = json!({
                "n_terms": a.n,
                "ln_terms": ln,
                "ln_original": ln_orig,
                "hull_vertices": regularization_vertices(&s, a.n)?,
                "log_convexity_defect": log_convexity_defect(&ln),
            });
            Ok(Outcome { status: Status::Passed, result })
        }
        QaCmd::Sums(a) => {
            let s = sequence(ctx, &a.seq)?;
            let sums = dj_carleman_sums(&s, a.n)?;
            Ok(Outcome { status: Status::Passed, result: json!({ "totals": sums.totals(), "sums": to_value(&sums) }) })
        }
        QaCmd::Dominate { family, param, n } => {
            let a = match family.as_str() {
                "geometric" => SummableSequence::geometric(*param)?,
                "inverse_power" => SummableSequence::inverse_power(*param)?,
                other => return Err(Failure::input(format!("unknown summable family {other:?}; use geometric or inverse_power"))),
            };
            let dom = dominating_summable_sequence(&a, *n)?;
            let len = dom.len();
            let b_non_increasing = (1..len).all(|i| dom.b(i) <= dom.b(i - 1));
            let ln_ratio = |i: usize| dom.ln_b[i] - dom.ln_a[i];
            let ratio_non_decreasing = (1..len).all(|i| ln_ratio(i) >= ln_ratio(i - 1) - 1e-12 * (1.0 + ln_ratio(i - 1).abs()));
            let sum_a: f64 = (0..len).map(|i| dom.a(i)).sum();
            let sum_b: f64 = (0..len).map(|i| dom.b(i)).sum();
            let budget = sum_a + hurwitz_zeta(1.5, 1.0) + 1.0;
            let samples: Vec<Value> = std::iter::successors(Some(1usize), |k| Some(k * 10))
                .take_while(|&k| k <= len)
                .map(|k| json!({ "n": k - 1, "ln_b": dom.ln_b[k - 1], "ln_ratio": dom.ln_b[k - 1] - dom.ln_a[k - 1] }))
                .collect();
            let passed = b_non_increasing && ratio_non_decreasing && sum_b <= budget;
            let result = json!({
                "sequence": a.label(),
                "n_terms": len,
                "b_non_increasing": b_non_increasing,
                "ratio_non_decreasing": ratio_non_decreasing,
                "sum_a": sum_a,
                "sum_b": sum_b,
                "sum_budget": budget,
                "samples": samples,
            });
            Ok(Outcome { status: verdict(passed), result })
        }
    }
}

fn sobolev(s: &SobolevCmd, ctx: &mut Context) -> Result<Outcome, Failure> {
    match s {
        SobolevCmd::Norm { f, k } => {
            let f: SampledFunction<f64> = ctx.parse::<SampledFunctionJson>(f)?.try_into()?;
            let k: SobolevIndex = ctx.parse(k)?;
            let norm = weighted_sobolev_norm(&f, &k)?;
            Ok(Outcome { status: Status::Passed, result: json!({ "norm": norm, "k": to_value(&k) }) })
        }
        SobolevCmd::Bound { y, p, k, seq, h, n } => {
            let k: SobolevIndex = ctx.parse(k)?;
            let d = sequence(ctx, seq)?;
            let token = bump_derivative_bounds(&d, *n)?;
            let member = bump_test_family(*y, *p, &token, k.k1, *h)?;
            let re = weighted_sobolev_norm(&member.re, &k)?;
            let im = weighted_sobolev_norm(&member.im, &k)?;
            let bound = bump_norm_bound(*y, *p, &k, token.sequence())?;
            let result = json!({
                "y": y,
                "p": p,
                "k": to_value(&k),
                "h": h,
                "bump_scale": member.scale,
                "derivative_max": member.derivative_max,
                "norm_re": re,
                "norm_im": im,
                "bound": bound,
            });
            Ok(Outcome { status: verdict(re <= bound && im <= bound), result })
        }
        SobolevCmd::ConditionD { k, window } => {
            let k: SobolevIndex = ctx.parse(k)?;
            let w = condition_d_witness(&k, *window)?;
            Ok(Outcome { status: verdict(w.witness_ratio_min >= 1.0), result: to_value(&w) })
        }
    }
}

fn oracle_cmd(o: &OracleCmd, tol: f64, ctx: &mut Context) -> Result<Outcome, Failure> {
    match o {
        OracleCmd::Fit { moments, candidates, t } => {
            let Loaded::Points(m) = ctx.moments(moments)? else {
                return Err(Failure::input("fitting needs a finite-dimensional moment sequence"));
            };
            let cands: Vec<Vec<f64>> = ctx.parse(candidates)?;
            let fit = oracle::brute_force_realizable(&m, &cands, *t, tol)?;
            let status = match fit.status {
                FitStatus::Feasible => Status::Passed,
                FitStatus::Infeasible => Status::Disproved,
                FitStatus::IterationCapReached => Status::Inconclusive,
            };
            Ok(Outcome { status, result: to_value(&fit) })
        }
        OracleCmd::Perturb { moments, at, eps, out } => {
            let at: Vec<u32> = io::parse(at)?;
            let perturbed = match ctx.moments(moments)? {
                Loaded::Points(m) => to_value(&MomentSequenceJson::from(&oracle::perturb(&m, &MultiIndex::new(at), *eps)?)),
                Loaded::Field(m) => {
                    let cells: Vec<usize> = at.iter().map(|&c| c as usize).collect();
                    to_value(&TensorSeqJson::from(&oracle::perturb_tensor(&m, &cells, *eps)?))
                }
            };
            let result = match out {
                Some(path) => {
                    write_json(path, &perturbed)?;
                    json!({ "written": path.display().to_string(), "eps": eps })
                }
                None => json!({ "moments": perturbed, "eps": eps }),
            };
            Ok(Outcome { status: Status::Passed, result })
        }
    }
}
