use std::path::PathBuf;
use std::time::Instant;

use serde_json::{json, Value};

use allab_core::anosov::{suspension_model, weak_foliations_on_torus, AnosovError, FlowModel};
use allab_core::contact::{al_check, default_s_samples, liouville_direct_check, PerturbOptions, Verdict};
use allab_core::foliation::{
    compact_leaves_with, cone_separation, models, parallel_compact_leaves, reeb_annuli, return_map, rotation_number,
    winding, CompactLeafSet, ConeSearch, Foliation2, LeafSearch, Transversal,
};
use allab_core::geom::{Chart, DifferentialForm, Gluing3, GluingKind, Grid3, TorusEmbedding, VectorField3};
use allab_core::prelag::{pre_lagrangian_certificate, Construction, PreLagInput, PreLagParams, SolverParams};

use crate::config::{FieldSpec, FoliationSpec, ModelSpec, RunConfig, TorusSpec};
use crate::render::render_foliation;
use crate::report::{self, Stage};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    CheckPair,
    Foliation,
    PreLagrangian,
    Render,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckPair => "check-pair",
            Command::Foliation => "foliation",
            Command::PreLagrangian => "pre-lagrangian",
            Command::Render => "render",
            Command::All => "all",
        }
    }
}

/// Tool failure: bad input or an error that is not a verdict.
#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn input<E: std::fmt::Display>(e: E) -> ToolError {
    ToolError::Input(e.to_string())
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Value,
    /// `(file name, document)`.
    pub svgs: Vec<(String, String)>,
    pub exit_code: i32,
    /// One line per stage for the terminal.
    pub summary: Vec<String>,
}

pub fn build_model(spec: &ModelSpec) -> Result<FlowModel, AnosovError> {
    match spec {
        ModelSpec::Suspension { matrix } => suspension_model(*matrix),
        ModelSpec::Forms {
            name,
            alpha_u,
            alpha_s,
            r_u,
            r_s,
            generator,
            three_torus,
            lattice,
            deck,
            shift,
        } => {
            let kind = if *three_torus {
                GluingKind::ThreeTorus
            } else {
                GluingKind::MappingTorus
            };
            let gluing = Gluing3::new(*lattice, *deck, *shift, kind)?;
            let fibers = vec![TorusEmbedding::fiber(&gluing, 0.0)];
            FlowModel::new(
                name,
                gluing,
                VectorField3::new(generator.clone()),
                DifferentialForm::one_form(Chart::Ambient, alpha_u.to_vec())?,
                DifferentialForm::one_form(Chart::Ambient, alpha_s.to_vec())?,
                r_u.clone(),
                r_s.clone(),
                fibers,
            )
        }
    }
}

fn torus(model: &FlowModel, spec: &TorusSpec) -> Result<TorusEmbedding, ToolError> {
    match spec {
        TorusSpec::Fiber(i) => model
            .fibers
            .get(*i)
            .cloned()
            .ok_or_else(|| ToolError::Input(format!("model has {} fibers, no fiber {i}", model.fibers.len()))),
        TorusSpec::Level(z) => Ok(TorusEmbedding::fiber(&model.gluing, *z)),
        TorusSpec::Affine { base, du, dv } => TorusEmbedding::new(*base, *du, *dv).map_err(input),
    }
}

fn field(spec: &FieldSpec) -> Result<Foliation2, ToolError> {
    match spec {
        FieldSpec::Direction([a, b]) => Foliation2::new(a.clone(), b.clone()).map_err(input),
        FieldSpec::Form(c) => {
            let form = DifferentialForm::one_form(Chart::Torus, c.to_vec()).map_err(input)?;
            Foliation2::from_form(&form).map_err(input)
        }
    }
}

pub fn builtin_foliations(name: &str, rho: f64) -> Result<(Foliation2, Foliation2), ToolError> {
    Ok(match name {
        "franks_williams" => (models::franks_williams(), models::franks_williams_partner()),
        "figure3" => (models::figure3(), models::figure3_partner()),
        "two_reeb" => (models::two_reeb(), models::two_reeb_partner()),
        "morse_smale" => {
            let f = models::morse_smale();
            let g = f.rotated();
            (f, g)
        }
        "rotation" => {
            let f = models::rotation(rho);
            let g = f.rotated();
            (f, g)
        }
        other => return Err(ToolError::Input(format!("unknown builtin foliation {other}"))),
    })
}

struct Context<'a> {
    cfg: &'a RunConfig,
    model: Option<FlowModel>,
    sigma: Option<TorusEmbedding>,
    foliations: Option<(Foliation2, Foliation2)>,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self, ToolError> {
        let model = cfg.model.as_ref().map(build_model).transpose().map_err(input)?;
        let sigma = model.as_ref().map(|m| torus(m, &cfg.torus)).transpose()?;
        let foliations = match &cfg.foliations {
            Some(FoliationSpec::Builtin { name, rho }) => Some(builtin_foliations(name, *rho)?),
            Some(FoliationSpec::Declared { ws, wu }) => Some((field(ws)?, field(wu)?)),
            None => None,
        };
        Ok(Context {
            cfg,
            model,
            sigma,
            foliations,
        })
    }

    fn model(&self) -> Result<(&FlowModel, &TorusEmbedding), ToolError> {
        match (&self.model, &self.sigma) {
            (Some(m), Some(s)) => Ok((m, s)),
            _ => Err(ToolError::Input("this command needs a [model] section".into())),
        }
    }

    /// Declared foliations win; otherwise the weak foliations of the model torus.
    fn foliations(&self) -> Result<(Foliation2, Foliation2), ToolError> {
        if let Some(pair) = &self.foliations {
            return Ok(pair.clone());
        }
        let (m, s) = self.model()?;
        weak_foliations_on_torus(m, s).map_err(input)
    }

    fn grid(&self) -> Grid3 {
        Grid3::cube(self.cfg.grids.al)
    }

    fn leaf_search(&self) -> LeafSearch {
        LeafSearch {
            circles: self.cfg.grids.leaf_circles,
            ..LeafSearch::default()
        }
    }

    fn prelag_params(&self) -> PreLagParams {
        let c = &self.cfg;
        PreLagParams {
            scale_c: c.certificate.scale_c,
            epsilon: c.certificate.epsilon,
            delta: c.certificate.delta,
            solver: SolverParams {
                grid: c.grids.solver,
                max_iterations: c.solver.max_iterations,
                tolerance: c.solver.tolerance,
                memory: c.solver.memory,
                ..SolverParams::default()
            },
            perturb: PerturbOptions {
                width: c.certificate.width,
                grid: self.grid(),
                torus_samples: c.grids.torus,
                c1_threshold: c.certificate.c1_threshold,
                ..PerturbOptions::default()
            },
            cone: ConeSearch::default(),
            tolerance: c.certificate.tolerance,
            inner_rule: c.certificate.inner_rule,
            ..PreLagParams::default()
        }
    }
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report data serializes")
}

fn check_pair(ctx: &Context) -> Result<(Value, i32, String), ToolError> {
    let (m, _) = ctx.model()?;
    let grid = ctx.grid();
    let model = m.validate(&grid).map_err(input)?;
    let pair = m.standard_pair().map_err(input)?;
    let al = al_check(&pair, &m.volume(), &grid).map_err(input)?;
    let s = default_s_samples();
    let direct = liouville_direct_check(&pair, &s, &grid).map_err(input)?;
    let negated = liouville_direct_check(&pair.with_negated_minus(), &s, &grid).map_err(input)?;
    let pass = al.verdict == Verdict::AnosovLiouville && direct.pass && negated.pass;
    let line = format!(
        "check-pair: {} (f+ in [{:.6}, {:.6}], f- in [{:.6}, {:.6}], f0 in [{:.2e}, {:.2e}])",
        if pass { "anosov-liouville" } else { "fail" },
        al.f_plus.min,
        al.f_plus.max,
        al.f_minus.min,
        al.f_minus.max,
        al.f_zero.min,
        al.f_zero.max
    );
    let value = json!({
        "model": m.name,
        "model_report": to_value(&model),
        "al": to_value(&al),
        "liouville": to_value(&direct),
        "liouville_negated": to_value(&negated),
        "pass": pass,
    });
    Ok((value, if pass { 0 } else { 2 }, line))
}

fn describe(f: &Foliation2, search: &LeafSearch) -> Result<(Value, CompactLeafSet), ToolError> {
    let w = winding(f).map_err(input)?;
    let leaves = compact_leaves_with(f, search);
    let annuli = reeb_annuli(f, &leaves);
    let mut rotation = Value::Null;
    let mut attempts = Vec::new();
    for t in [Transversal::U(0.0), Transversal::V(0.0)] {
        match return_map(f, t) {
            Ok(r) => {
                let rho = rotation_number(&r, 10_000);
                rotation = json!({ "transversal": to_value(&t), "backward": r.backward, "estimate": to_value(&rho) });
                break;
            }
            Err(e) => attempts.push(json!({ "transversal": to_value(&t), "error": e.to_string() })),
        }
    }
    let value = json!({
        "field": [f.field[0].to_string(), f.field[1].to_string()],
        "winding": to_value(&w),
        "compact_leaves": to_value(&leaves),
        "reeb_annuli": to_value(&annuli),
        "rotation": rotation,
        "return_map_failures": attempts,
    });
    Ok((value, leaves))
}

fn foliation(ctx: &Context) -> Result<(Value, String), ToolError> {
    let (ws, wu) = ctx.foliations()?;
    let search = ctx.leaf_search();
    let (a, la) = describe(&ws, &search)?;
    let (b, lb) = describe(&wu, &search)?;
    let parallel = parallel_compact_leaves(&ws, &wu).map_err(input)?;
    let separation = cone_separation(&ws, &wu, &ConeSearch::default()).map_err(input)?;
    let line = format!(
        "foliation: winding ({}, {}) / ({}, {}), compact leaves {} / {}, parallel {:?}",
        a["winding"]["w_u"],
        a["winding"]["w_v"],
        b["winding"]["w_u"],
        b["winding"]["w_v"], la.leaves.len(), lb.leaves.len(), parallel.verdict
    );
    Ok((
        json!({ "ws": a, "wu": b, "parallel": to_value(&parallel), "separation": to_value(&separation) }),
        line,
    ))
}

fn pre_lagrangian(ctx: &Context) -> Result<(Value, i32, String), ToolError> {
    let params = ctx.prelag_params();
    let report = match (&ctx.foliations, ctx.model.as_ref().zip(ctx.sigma.as_ref())) {
        (Some((ws, wu)), _) => pre_lagrangian_certificate(PreLagInput::Foliations { ws, wu }, &params),
        (None, Some((model, sigma))) => pre_lagrangian_certificate(PreLagInput::Model { model, sigma }, &params),
        (None, None) => return Err(ToolError::Input("pre-lagrangian needs a model or foliations".into())),
    };
    let passes = report.construction == Construction::Certificate
        || (report.construction == Construction::NotAttempted
            && report.obstruction.is_some()
            && !report.obstructed()
            && report.parallel.is_some()
            && !report.parallel_leaves());
    let code = if passes { 0 } else { 2 };
    let verdict = if report.obstructed() {
        "obstructed"
    } else {
        "passes_obstruction"
    };
    let construction = match report.construction {
        Construction::Certificate => "certificate",
        Construction::NotAttempted => "not_attempted",
        Construction::Failed => "failed",
    };
    let mut line = format!("pre-lagrangian: {verdict}, construction {construction}");
    if let Some(d) = &report.diagnostic {
        line.push_str(&format!(" ({d})"));
    }
    Ok((to_value(&report), code, line))
}

fn render(ctx: &Context) -> Result<(Value, Vec<(String, String)>, String), ToolError> {
    let (ws, wu) = ctx.foliations()?;
    let search = ctx.leaf_search();
    let mut svgs = Vec::new();
    let mut files = Vec::new();
    for (name, f) in [("ws", &ws), ("wu", &wu)] {
        let leaves = compact_leaves_with(f, &search);
        let svg = render_foliation(f, &leaves, &ctx.cfg.render, name).map_err(input)?;
        let file = format!("{name}.svg");
        files.push(json!({ "file": file, "compact_leaves": leaves.leaves.len() }));
        svgs.push((file, svg));
    }
    let line = format!("render: {}", svgs.iter().map(|s| s.0.as_str()).collect::<Vec<_>>().join(", "));
    Ok((json!({ "files": files }), svgs, line))
}

/// Runs a command; verdicts go to the exit code, tool failures to `Err`.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome, ToolError> {
    let ctx = Context::new(cfg)?;
    let mut stages = Vec::new();
    let mut svgs = Vec::new();
    let mut summary = Vec::new();
    let mut exit_code = 0;
    let wants = |c: Command| cmd == c || cmd == Command::All;
    let mut clock = Instant::now();
    let mut lap = |name: &str, result: Value, stages: &mut Vec<Stage>| {
        let now = Instant::now();
        stages.push(Stage {
            name: name.into(),
            seconds: (now - clock).as_secs_f64(),
            result,
        });
        clock = now;
    };
    if wants(Command::CheckPair) && (cmd == Command::CheckPair || ctx.model.is_some()) {
        let (v, code, line) = check_pair(&ctx)?;
        exit_code = exit_code.max(code);
        summary.push(line);
        lap("check_pair", v, &mut stages);
    }
    if wants(Command::Foliation) {
        let (v, line) = foliation(&ctx)?;
        summary.push(line);
        lap("foliation", v, &mut stages);
    }
    if wants(Command::PreLagrangian) {
        let (v, code, line) = pre_lagrangian(&ctx)?;
        exit_code = exit_code.max(code);
        summary.push(line);
        lap("pre_lagrangian", v, &mut stages);
    }
    if wants(Command::Render) {
        let (v, files, line) = render(&ctx)?;
        svgs.extend(files);
        summary.push(line);
        lap("render", v, &mut stages);
    }
    Ok(Outcome {
        report: report::build(cmd.name(), &cfg.digest, &stages, exit_code),
        svgs,
        exit_code,
        summary,
    })
}

/// Writes the report and pictures into `dir`.
pub fn write_outputs(outcome: &Outcome, dir: &PathBuf, report_name: &str) -> Result<(), ToolError> {
    let text = serde_json::to_string_pretty(&outcome.report).map_err(input)? + "\n";
    report::write_atomic(dir, report_name, text.as_bytes())?;
    for (name, svg) in &outcome.svgs {
        report::write_atomic(dir, name, svg.as_bytes())?;
    }
    Ok(())
}
