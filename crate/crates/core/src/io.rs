//! Experiment configuration, config hashing and on-disk artifacts.
//!
//! Metadata is JSON, per-node payloads are CSV. Floats are written in
//! shortest round-trip form, so an artifact reloaded by the same build
//! reproduces its diagnostics bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{applicable_identities, pohozaev_residual, IdentityReport};
use crate::error::{Error, Result};
use crate::grid::{default_outer_radius, RadialGrid};
use crate::mass_min::{Crossing, CurveOptions, CurveSample, ExpressionReport, FlowOptions, MassCurve, MinimizeOptions};
use crate::problem::{Model, ProblemParams, ProblemSpec};
use crate::solve::{Branch, NewtonOptions, Solution, StepControl};
use crate::spectrum::SpectrumReport;

pub const FORMAT_VERSION: u32 = 1;

pub const CONFIG_FILE: &str = "config.json";
pub const SOLUTION_FILE: &str = "solution.json";
pub const PROFILE_FILE: &str = "profile.csv";
pub const BRANCH_FILE: &str = "branch.json";
pub const BRANCH_TABLE: &str = "branch.csv";
pub const CURVE_FILE: &str = "masscurve.json";
pub const CURVE_TABLE: &str = "masscurve.csv";
pub const IDENTITY_FILE: &str = "identities.json";
const NODE_DIR: &str = "nodes";
const MINIMIZER_DIR: &str = "minimizers";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainChoice {
    WholeSpace,
    UnitBall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n: usize,
    /// Truncation radius; defaults to a λ-dependent value on the whole space.
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub outer_radius: Option<f64>,
    pub domain: DomainChoice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub step: StepControl,
    pub flow_tol: f64,
    pub polish_tol: f64,
    pub cluster_tol: f64,
    pub probe: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let min = MinimizeOptions::default();
        Self {
            newton_tol: NewtonOptions::default().tol,
            newton_max_iters: NewtonOptions::default().max_iters,
            step: StepControl::default(),
            flow_tol: min.flow.tol,
            polish_tol: min.polish_tol,
            cluster_tol: min.cluster_tol,
            probe: CurveOptions::default().probe,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_end: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub c_grid: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultistartConfig {
    pub seed: u64,
    pub budget: usize,
}

impl Default for MultistartConfig {
    fn default() -> Self {
        let min = MinimizeOptions::default();
        Self {
            seed: min.seed,
            budget: min.starts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub format_version: u32,
    pub problem: ProblemParams,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub multistart: MultistartConfig,
    /// Not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn new(problem: ProblemParams, grid: GridConfig) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            problem,
            grid,
            solver: SolverConfig::default(),
            sweep: SweepConfig::default(),
            multistart: MultistartConfig::default(),
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Checks every field against the family constraints; no compute.
    pub fn validate(&self) -> Result<ProblemSpec> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let sv = &self.solver;
        positive("newton_tol", sv.newton_tol)?;
        positive("flow_tol", sv.flow_tol)?;
        positive("polish_tol", sv.polish_tol)?;
        positive("cluster_tol", sv.cluster_tol)?;
        if let Some(p) = sv.probe {
            positive("probe", p)?;
        }
        positive("step.initial", sv.step.initial)?;
        positive("step.min", sv.step.min)?;
        positive("step.max", sv.step.max)?;
        if sv.newton_max_iters == 0 || self.multistart.budget == 0 {
            return Err(Error::Validation("iteration counts and budget must be positive".into()));
        }
        if self.grid.n < 3 {
            return Err(Error::Validation(format!("grid needs at least 3 nodes, got {}", self.grid.n)));
        }
        if let Some(r) = self.grid.outer_radius {
            positive("R", r)?;
        }
        for (name, v) in [
            ("lambda", self.sweep.lambda),
            ("lambda_start", self.sweep.lambda_start),
            ("lambda_end", self.sweep.lambda_end),
        ] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::Validation(format!("{name} must be finite")));
                }
            }
        }
        let spec = ProblemSpec::from_params(&self.problem)?;
        let wants_ball = self.grid.domain == DomainChoice::UnitBall;
        if spec.is_ball() != wants_ball {
            return Err(Error::Validation(format!(
                "preset '{}' is posed on {}, grid domain is {:?}",
                spec.id(),
                if spec.is_ball() { "the unit ball" } else { "the whole space" },
                self.grid.domain
            )));
        }
        Ok(spec)
    }

    /// Hex SHA-256 of the canonical JSON of everything except `output_dir`.
    pub fn config_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output_dir");
        }
        let text = serde_json::to_string(&value).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn grid_for(&self, lambda_hint: Option<f64>) -> Result<RadialGrid> {
        let dim = self.problem.dim;
        match self.grid.domain {
            DomainChoice::UnitBall => RadialGrid::unit_ball(dim, self.grid.n),
            DomainChoice::WholeSpace => {
                let r = self
                    .grid
                    .outer_radius
                    .unwrap_or_else(|| default_outer_radius(lambda_hint.unwrap_or(-1.0), self.problem.s));
                RadialGrid::whole_space(dim, self.grid.n, r)
            }
        }
    }

    pub fn model(&self, lambda_hint: Option<f64>) -> Result<Model> {
        let spec = self.validate()?;
        Model::new(&spec, &self.grid_for(lambda_hint)?)
    }

    pub fn newton_options(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.solver.newton_tol,
            max_iters: self.solver.newton_max_iters,
        }
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        let base = MinimizeOptions::default();
        MinimizeOptions {
            starts: self.multistart.budget,
            seed: self.multistart.seed,
            flow: FlowOptions {
                tol: self.solver.flow_tol,
                ..base.flow
            },
            polish_tol: self.solver.polish_tol,
            cluster_tol: self.solver.cluster_tol,
            ..base
        }
    }

    pub fn curve_options(&self) -> CurveOptions {
        CurveOptions {
            probe: self.solver.probe,
        }
    }

    pub fn lambda(&self) -> Result<f64> {
        self.sweep
            .lambda
            .ok_or_else(|| Error::Validation("config has no lambda".into()))
    }

    pub fn lambda_range(&self) -> Result<(f64, f64)> {
        match (self.sweep.lambda_start, self.sweep.lambda_end) {
            (Some(a), Some(b)) if a != b => Ok((a, b)),
            (Some(a), Some(_)) => Err(Error::Validation(format!("empty λ range [{a}, {a}]"))),
            _ => Err(Error::Validation("config needs lambda_start and lambda_end".into())),
        }
    }

    pub fn c_grid(&self) -> Result<Vec<f64>> {
        let g = &self.sweep.c_grid;
        if g.is_empty() {
            return Err(Error::Validation("empty c_grid".into()));
        }
        if g.iter().any(|c| !(c.is_finite() && *c > 0.0)) || g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("c_grid must be positive and strictly increasing".into()));
        }
        Ok(g.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Solution,
    Branch,
    MassCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub format_version: u32,
    pub kind: ArtifactKind,
    pub config_hash: String,
    pub config: ExperimentConfig,
}

impl ArtifactHeader {
    pub fn new(kind: ArtifactKind, config: &ExperimentConfig) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind,
            config_hash: config.config_hash(),
            config: config.clone(),
        }
    }

    fn check(&self, kind: ArtifactKind, expected_hash: Option<&str>) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Artifact(format!("unsupported format_version {}", self.format_version)));
        }
        if self.kind != kind {
            return Err(Error::Artifact(format!("expected a {kind:?} artifact, found {:?}", self.kind)));
        }
        let actual = self.config.config_hash();
        if actual != self.config_hash {
            return Err(Error::Artifact(format!(
                "embedded config hashes to {actual}, artifact records {}",
                self.config_hash
            )));
        }
        if let Some(h) = expected_hash {
            if h != self.config_hash {
                return Err(Error::Artifact(format!(
                    "config hash mismatch: artifact {}, expected {h}",
                    self.config_hash
                )));
            }
        }
        Ok(())
    }
}

/// Everything in a [`Solution`] except the profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub lambda: f64,
    pub mass: f64,
    pub energy: f64,
    pub peak: f64,
    pub residual_norm: f64,
    pub converged: bool,
    pub tolerance: f64,
    pub positive: bool,
    pub monotone: bool,
    pub iterations: usize,
}

impl SolutionRecord {
    pub fn of(sol: &Solution) -> Self {
        Self {
            lambda: sol.lambda,
            mass: sol.mass,
            energy: sol.energy,
            peak: sol.peak(),
            residual_norm: sol.residual_norm,
            converged: sol.converged,
            tolerance: sol.tolerance,
            positive: sol.positive,
            monotone: sol.monotone,
            iterations: sol.iterations,
        }
    }

    fn restore(&self, model: &Model, u: Vec<f64>) -> Solution {
        Solution::assemble(model, self.lambda, u, self.iterations, self.converged, self.tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionArtifact {
    #[serde(flatten)]
    pub header: ArtifactHeader,
    pub solution: SolutionRecord,
    pub spectrum: Option<SpectrumReport>,
    pub profile: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    #[serde(flatten)]
    pub solution: SolutionRecord,
    pub mass_derivative: f64,
    pub tangent_at_origin: f64,
    pub sign_changes: usize,
    pub morse_index: usize,
    pub condition: f64,
    pub profile: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchArtifact {
    #[serde(flatten)]
    pub header: ArtifactHeader,
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub truncated: Option<String>,
    pub nodes: Vec<NodeRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerRecord {
    pub c: f64,
    pub m: f64,
    pub lambda: f64,
    pub converged: bool,
    pub profile: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassCurveArtifact {
    #[serde(flatten)]
    pub header: ArtifactHeader,
    pub samples: Vec<CurveSample>,
    pub kinks: Vec<f64>,
    pub crossing: Option<Crossing>,
    pub expression: Option<ExpressionReport>,
    pub minimizers: Vec<MinimizerRecord>,
}

/// An identity report tagged with the profile it was computed on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub source: String,
    #[serde(flatten)]
    pub report: IdentityReport,
}

#[derive(Serialize, Deserialize)]
struct ProfileRow {
    r: f64,
    u: f64,
    #[serde(default)]
    v: Option<f64>,
}

#[derive(Serialize)]
struct CurveRow {
    c: f64,
    m: f64,
    lambda: f64,
    dq_left: Option<f64>,
    dq_right: Option<f64>,
    n_clusters: usize,
    morse_index: Option<usize>,
}

#[derive(Serialize)]
struct BranchRow {
    lambda: f64,
    mass: f64,
    mass_derivative: f64,
    energy: f64,
    morse_index: usize,
    sign_changes: usize,
    condition: f64,
    residual_norm: f64,
}

pub fn write_profile(path: &Path, r: &[f64], u: &[f64], v: Option<&[f64]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (i, (&r, &u)) in r.iter().zip(u).enumerate() {
        w.serialize(ProfileRow {
            r,
            u,
            v: v.map(|v| v[i]),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// `(u, v)` columns of a profile file; `v` only if every row carries it.
pub fn read_profile(path: &Path) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut u = Vec::new();
    let mut v = Vec::new();
    for row in rd.deserialize::<ProfileRow>() {
        let row = row?;
        u.push(row.u);
        v.push(row.v);
    }
    if u.is_empty() {
        return Err(Error::Validation(format!("empty profile {}", path.display())));
    }
    let v = v.into_iter().collect::<Option<Vec<f64>>>();
    Ok((u, v))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(Error::Validation(format!("empty artifact file {}", path.display())));
    }
    Ok(serde_json::from_str(&text)?)
}

pub fn write_config(dir: &Path, config: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join(CONFIG_FILE), config)
}

pub fn write_identities(dir: &Path, records: &[IdentityRecord]) -> Result<()> {
    write_json(&dir.join(IDENTITY_FILE), &records)
}

pub fn read_identities(dir: &Path) -> Result<Vec<IdentityRecord>> {
    read_json(&dir.join(IDENTITY_FILE))
}

pub fn write_solution(
    dir: &Path,
    config: &ExperimentConfig,
    model: &Model,
    sol: &Solution,
    tangent: Option<&[f64]>,
    spectrum: Option<&SpectrumReport>,
) -> Result<SolutionArtifact> {
    fs::create_dir_all(dir)?;
    write_profile(&dir.join(PROFILE_FILE), model.grid().nodes(), &sol.u, tangent)?;
    let art = SolutionArtifact {
        header: ArtifactHeader::new(ArtifactKind::Solution, config),
        solution: SolutionRecord::of(sol),
        spectrum: spectrum.cloned(),
        profile: PROFILE_FILE.into(),
    };
    write_json(&dir.join(SOLUTION_FILE), &art)?;
    Ok(art)
}

/// Per-node profiles are written in parallel; the summary files are written
/// afterwards by the calling thread.
pub fn write_branch(dir: &Path, config: &ExperimentConfig, model: &Model, branch: &Branch) -> Result<BranchArtifact> {
    let node_dir = dir.join(NODE_DIR);
    fs::create_dir_all(&node_dir)?;
    let r = model.grid().nodes();
    let records: Vec<NodeRecord> = branch
        .nodes
        .par_iter()
        .enumerate()
        .map(|(k, node)| {
            let name = format!("{NODE_DIR}/node_{k:04}.csv");
            write_profile(&dir.join(&name), r, &node.solution.u, Some(&node.tangent))?;
            Ok(NodeRecord {
                solution: SolutionRecord::of(&node.solution),
                mass_derivative: node.mass_derivative,
                tangent_at_origin: node.tangent_at_origin,
                sign_changes: node.sign_changes,
                morse_index: node.morse_index,
                condition: node.condition,
                profile: name,
            })
        })
        .collect::<Result<_>>()?;
    let mut table = csv::Writer::from_path(dir.join(BRANCH_TABLE))?;
    for n in &records {
        table.serialize(BranchRow {
            lambda: n.solution.lambda,
            mass: n.solution.mass,
            mass_derivative: n.mass_derivative,
            energy: n.solution.energy,
            morse_index: n.morse_index,
            sign_changes: n.sign_changes,
            condition: n.condition,
            residual_norm: n.solution.residual_norm,
        })?;
    }
    table.flush()?;
    let art = BranchArtifact {
        header: ArtifactHeader::new(ArtifactKind::Branch, config),
        lambda_start: branch.lambda_start,
        lambda_end: branch.lambda_end,
        truncated: branch.truncated.clone(),
        nodes: records,
    };
    write_json(&dir.join(BRANCH_FILE), &art)?;
    Ok(art)
}

pub fn write_mass_curve(
    dir: &Path,
    config: &ExperimentConfig,
    model: &Model,
    curve: &MassCurve,
    crossing: Option<&Crossing>,
    expression: Option<&ExpressionReport>,
) -> Result<MassCurveArtifact> {
    let min_dir = dir.join(MINIMIZER_DIR);
    fs::create_dir_all(&min_dir)?;
    let r = model.grid().nodes();
    let minimizers: Vec<MinimizerRecord> = curve
        .minimizers
        .par_iter()
        .enumerate()
        .map(|(k, res)| {
            let name = format!("{MINIMIZER_DIR}/c_{k:04}.csv");
            write_profile(&dir.join(&name), r, &res.u, None)?;
            Ok(MinimizerRecord {
                c: res.c,
                m: res.m,
                lambda: res.lambda,
                converged: res.converged,
                profile: name,
            })
        })
        .collect::<Result<_>>()?;
    let mut table = csv::Writer::from_path(dir.join(CURVE_TABLE))?;
    for s in &curve.samples {
        table.serialize(CurveRow {
            c: s.c,
            m: s.m,
            lambda: s.lambda,
            dq_left: s.dq_left,
            dq_right: s.dq_right,
            n_clusters: s.distinct_minima,
            morse_index: s.morse_index,
        })?;
    }
    table.flush()?;
    let art = MassCurveArtifact {
        header: ArtifactHeader::new(ArtifactKind::MassCurve, config),
        samples: curve.samples.clone(),
        kinks: curve.kinks(),
        crossing: crossing.cloned(),
        expression: expression.cloned(),
        minimizers,
    };
    write_json(&dir.join(CURVE_FILE), &art)?;
    Ok(art)
}

/// Identity reports on a solution, tagged with `source`.
pub fn identity_records(model: &Model, sol: &Solution, tangent: Option<&[f64]>, source: &str) -> Result<Vec<IdentityRecord>> {
    Ok(applicable_identities(model, sol, tangent)?
        .into_iter()
        .map(|report| IdentityRecord {
            source: source.to_string(),
            report,
        })
        .collect())
}

/// Result of re-running diagnostics on a stored artifact.
#[derive(Clone, Debug)]
pub struct Verification {
    pub kind: ArtifactKind,
    pub config_hash: String,
    pub records: Vec<IdentityRecord>,
    /// Whether the recomputed reports equal the stored `identities.json`
    /// exactly (`None` when nothing was stored).
    pub matches_stored: Option<bool>,
    /// Stored profiles flagged as not converged.
    pub unconverged: usize,
}

impl Verification {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.report.pass)
    }
}

/// Detects the artifact type stored in `dir`.
pub fn artifact_kind(dir: &Path) -> Result<ArtifactKind> {
    if !dir.is_dir() {
        return Err(Error::Validation(format!("{} is not an artifact directory", dir.display())));
    }
    for (file, kind) in [
        (SOLUTION_FILE, ArtifactKind::Solution),
        (BRANCH_FILE, ArtifactKind::Branch),
        (CURVE_FILE, ArtifactKind::MassCurve),
    ] {
        if dir.join(file).is_file() {
            return Ok(kind);
        }
    }
    Err(Error::Validation(format!("empty artifact: no metadata file in {}", dir.display())))
}

fn load_profile(dir: &Path, name: &str, model: &Model) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let (u, v) = read_profile(&dir.join(name))?;
    if u.len() != model.len() {
        return Err(Error::Artifact(format!(
            "profile {name} has {} nodes, config grid has {}",
            u.len(),
            model.len()
        )));
    }
    Ok((u, v))
}

/// Reloads the artifact in `dir` and recomputes every applicable identity.
/// Refuses artifacts whose config hash does not match `expected_hash`.
pub fn verify_artifact(dir: &Path, expected_hash: Option<&str>) -> Result<Verification> {
    let kind = artifact_kind(dir)?;
    let mut unconverged = 0;
    let (header, records) = match kind {
        ArtifactKind::Solution => {
            let art: SolutionArtifact = read_json(&dir.join(SOLUTION_FILE))?;
            art.header.check(kind, expected_hash)?;
            let model = art.header.config.model(Some(art.solution.lambda))?;
            let (u, v) = load_profile(dir, &art.profile, &model)?;
            let sol = art.solution.restore(&model, u);
            unconverged += usize::from(!sol.converged);
            let recs = identity_records(&model, &sol, v.as_deref(), "solution")?;
            (art.header, recs)
        }
        ArtifactKind::Branch => {
            let art: BranchArtifact = read_json(&dir.join(BRANCH_FILE))?;
            art.header.check(kind, expected_hash)?;
            if art.nodes.is_empty() {
                return Err(Error::Validation("branch artifact has no nodes".into()));
            }
            let model = art.header.config.model(Some(art.lambda_start))?;
            let mut recs = Vec::new();
            for (k, node) in art.nodes.iter().enumerate() {
                let (u, v) = load_profile(dir, &node.profile, &model)?;
                let sol = node.solution.restore(&model, u);
                unconverged += usize::from(!sol.converged);
                let source = format!("node {k} (λ = {})", sol.lambda);
                recs.extend(identity_records(&model, &sol, v.as_deref(), &source)?);
            }
            (art.header, recs)
        }
        ArtifactKind::MassCurve => {
            let art: MassCurveArtifact = read_json(&dir.join(CURVE_FILE))?;
            art.header.check(kind, expected_hash)?;
            if art.minimizers.is_empty() {
                return Err(Error::Validation("mass-curve artifact has no minimizers".into()));
            }
            let model = art.header.config.model(None)?;
            let mut recs = Vec::new();
            for rec in &art.minimizers {
                let (u, _) = load_profile(dir, &rec.profile, &model)?;
                unconverged += usize::from(!rec.converged);
                let sol = Solution::assemble(&model, rec.lambda, u, 0, rec.converged, 0.0);
                let source = format!("minimizer c = {}", rec.c);
                recs.extend(pohozaev_residual(&model, &sol)?.into_iter().map(|report| IdentityRecord {
                    source: source.clone(),
                    report,
                }));
            }
            (art.header, recs)
        }
    };
    let matches_stored = if dir.join(IDENTITY_FILE).is_file() {
        Some(read_identities(dir)? == records)
    } else {
        None
    };
    Ok(Verification {
        kind,
        config_hash: header.config_hash,
        records,
        matches_stored,
        unconverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::{branch_tangent, seed_solution};
    use crate::spectrum::morse_index;

    fn soliton_config(n: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(
            ProblemParams::new("frac_power", 1.0, 1, 4.0),
            GridConfig {
                n,
                outer_radius: Some(30.0),
                domain: DomainChoice::WholeSpace,
            },
        );
        cfg.sweep.lambda = Some(-1.0);
        cfg
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = soliton_config(512);
        let mut b = a.clone();
        b.output_dir = Some("/tmp/elsewhere".into());
        assert_eq!(a.config_hash(), b.config_hash());
        b.multistart.seed += 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = soliton_config(512);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
        let minimal = r#"{"format_version":1,"problem":{"preset":"ball_hardy","N":3,"p":2.5,"k":1.0},
            "grid":{"n":1000,"domain":"unit_ball"}}"#;
        let cfg = ExperimentConfig::from_json(minimal).unwrap();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.multistart, MultistartConfig::default());
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let mut cfg = soliton_config(512);
        cfg.problem.p = 9.0;
        assert!(matches!(cfg.validate(), Err(Error::Validation(_))));
        let mut cfg = soliton_config(512);
        cfg.solver.newton_tol = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = soliton_config(512);
        cfg.grid.domain = DomainChoice::UnitBall;
        assert!(cfg.validate().is_err());
        let mut cfg = soliton_config(512);
        cfg.sweep.lambda_start = Some(-1.0);
        cfg.sweep.lambda_end = Some(-1.0);
        assert!(cfg.lambda_range().is_err());
        cfg.sweep.c_grid = vec![1.0, 0.5];
        assert!(cfg.c_grid().is_err());
    }

    #[test]
    fn solution_artifact_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = soliton_config(1024);
        let model = cfg.model(cfg.sweep.lambda).unwrap();
        let sol = seed_solution(&model, -1.0, &cfg.newton_options()).unwrap();
        let v = branch_tangent(&model, &sol).unwrap();
        let spec = morse_index(&model, &sol).unwrap();
        write_solution(dir.path(), &cfg, &model, &sol, Some(&v), Some(&spec)).unwrap();
        let recs = identity_records(&model, &sol, Some(&v), "solution").unwrap();
        write_identities(dir.path(), &recs).unwrap();

        let (u, w) = read_profile(&dir.path().join(PROFILE_FILE)).unwrap();
        assert_eq!(u, sol.u);
        assert_eq!(w.unwrap(), v);
        let ver = verify_artifact(dir.path(), Some(&cfg.config_hash())).unwrap();
        assert_eq!(ver.matches_stored, Some(true));
        assert_eq!(ver.records, recs);
        assert!(matches!(
            verify_artifact(dir.path(), Some("deadbeef")),
            Err(Error::Artifact(_))
        ));
    }

    #[test]
    fn empty_artifacts_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(verify_artifact(dir.path(), None), Err(Error::Validation(_))));
        fs::write(dir.path().join(SOLUTION_FILE), "").unwrap();
        assert!(matches!(verify_artifact(dir.path(), None), Err(Error::Validation(_))));
    }
}
