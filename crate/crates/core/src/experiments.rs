//! Monte Carlo runs of the excitable models, wave classification and
//! parameter sweeps.
//!
//! A run is summarized by its activated fraction (share of unknowns with
//! `u >= u_act`), the number of excited components and the number of
//! nucleations (components that appear where nothing was excited one step
//! earlier). [`classify_run`] turns that record into one of the labels of
//! the bifurcation diagrams.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Deserialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::fem::{DofLayout, FemOperators};
use crate::mesh::Mesh;
use crate::models::{Model, ModelState, Stepper};
use crate::noise::{project_noise, NoiseFactor};
use crate::rng::stream;

/// Thresholds of the wave classifier.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyPolicy {
    pub u_act: f64,
    pub f_wave: f64,
    pub f_quiet: f64,
    pub t_sustain_frac: f64,
    pub c_max: usize,
    /// share of late frames above `c_max` that makes a run disorganized
    pub dw_late_share: f64,
    /// share of seeds each of RW and DW must reach to flag a cell as transition
    pub transition_share: f64,
}

impl Default for ClassifyPolicy {
    fn default() -> Self {
        ClassifyPolicy {
            u_act: 0.5,
            f_wave: 0.05,
            f_quiet: 0.01,
            t_sustain_frac: 0.6,
            c_max: 4,
            dw_late_share: 0.5,
            transition_share: 0.25,
        }
    }
}

impl ClassifyPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = self.u_act > 0.0
            && self.u_act < 1.0
            && self.f_quiet >= 0.0
            && self.f_wave > 0.0
            && self.f_wave <= 1.0
            && self.t_sustain_frac > 0.0
            && self.t_sustain_frac < 1.0
            && (0.0..=1.0).contains(&self.dw_late_share)
            && (0.0..=0.5).contains(&self.transition_share);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid classification policy {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
pub enum Label {
    /// no wave
    NW,
    /// waves that die out
    W,
    /// sustained, organized activity
    RW,
    /// sustained, fragmented activity
    DW,
    /// cell split between RW and DW
    T,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Label::NW => "NW",
            Label::W => "W",
            Label::RW => "RW",
            Label::DW => "DW",
            Label::T => "T",
        };
        f.write_str(s)
    }
}

/// A label with the numbers that decided it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveClass {
    pub label: Label,
    pub max_fraction: f64,
    /// last recorded time with activated fraction at or above `f_quiet`
    pub sustain_time: f64,
    pub t_sustain: f64,
    /// mean component count over frames at or after `t_sustain`
    pub components_late: f64,
    /// share of late frames with more than `c_max` components
    pub late_share_above: f64,
}

/// Time series of one trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    pub times: Vec<f64>,
    pub activated_fraction: Vec<f64>,
    pub component_count: Vec<usize>,
    /// components born in quiescent tissue, counted every step
    pub nucleations: usize,
    /// `(t, u, v)` over all mesh nodes
    pub snapshots: Vec<(f64, Vec<f64>, Vec<f64>)>,
    pub t_obs: f64,
    pub seed: u64,
    pub replica: u64,
}

impl RunRecord {
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.activated_fraction.len() != n || self.component_count.len() != n {
            return Err(Error::InvalidParameter("record series have different lengths".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("record times must increase".into()));
        }
        if self.activated_fraction.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidParameter("activated fraction outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Pure classification of a record.
pub fn classify_run(record: &RunRecord, policy: &ClassifyPolicy) -> Result<WaveClass> {
    record.validate()?;
    let covered = record.times.last().copied().unwrap_or(0.0);
    if record.times.is_empty() || covered < record.t_obs * (1.0 - 1e-9) {
        return Err(Error::RecordTooShort { covered, required: record.t_obs });
    }
    let t_sustain = policy.t_sustain_frac * record.t_obs;
    let max_fraction = record.activated_fraction.iter().copied().fold(0.0, f64::max);
    let sustain_time = record
        .times
        .iter()
        .zip(&record.activated_fraction)
        .filter(|(_, f)| **f >= policy.f_quiet && **f > 0.0)
        .map(|(t, _)| *t)
        .fold(0.0, f64::max);
    let late: Vec<usize> =
        record.times.iter().zip(&record.component_count).filter(|(t, _)| **t >= t_sustain).map(|(_, c)| *c).collect();
    let components_late = if late.is_empty() { 0.0 } else { late.iter().sum::<usize>() as f64 / late.len() as f64 };
    let late_share_above = if late.is_empty() {
        0.0
    } else {
        late.iter().filter(|&&c| c > policy.c_max).count() as f64 / late.len() as f64
    };
    let label = if max_fraction <= policy.f_wave {
        Label::NW
    } else if sustain_time < t_sustain {
        Label::W
    } else if late_share_above >= policy.dw_late_share {
        Label::DW
    } else {
        Label::RW
    };
    Ok(WaveClass { label, max_fraction, sustain_time, t_sustain, components_late, late_share_above })
}

/// Union-find over triangles with edge adjacency taken in unknown space, so
/// that periodic seams do not split a component.
#[derive(Debug, Clone)]
pub struct ComponentLabeler {
    /// unknown index of each triangle vertex
    tri_dofs: Vec<[usize; 3]>,
    /// pairs of triangles sharing an edge
    adjacency: Vec<(usize, usize)>,
}

impl ComponentLabeler {
    pub fn new(mesh: &Mesh, layout: &DofLayout) -> Result<Self> {
        let mut tri_dofs = Vec::with_capacity(mesh.num_triangles());
        for tri in &mesh.triangles {
            let mut d = [0usize; 3];
            for (k, &node) in tri.iter().enumerate() {
                d[k] = layout.dof(node).ok_or_else(|| {
                    Error::InvalidParameter("component labelling needs every node to carry an unknown".into())
                })?;
            }
            tri_dofs.push(d);
        }
        let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, d) in tri_dofs.iter().enumerate() {
            for (a, b) in [(d[0], d[1]), (d[1], d[2]), (d[2], d[0])] {
                edges.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        let mut adjacency = Vec::new();
        for ts in edges.values() {
            for i in 0..ts.len() {
                for j in i + 1..ts.len() {
                    adjacency.push((ts[i], ts[j]));
                }
            }
        }
        Ok(ComponentLabeler { tri_dofs, adjacency })
    }

    /// Triangles whose three vertices reach `threshold`.
    pub fn excited(&self, u: &[f64], threshold: f64) -> Vec<bool> {
        self.tri_dofs.iter().map(|d| d.iter().all(|&i| u[i] >= threshold)).collect()
    }

    /// Component root of every excited triangle (`usize::MAX` elsewhere)
    /// and the number of components.
    pub fn label(&self, excited: &[bool]) -> (Vec<usize>, usize) {
        let n = excited.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &self.adjacency {
            if excited[a] && excited[b] {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut roots = vec![usize::MAX; n];
        let mut count = 0;
        for t in 0..n {
            if excited[t] {
                let r = find(&mut parent, t);
                roots[t] = r;
                if r == t {
                    count += 1;
                }
            }
        }
        (roots, count)
    }

    pub fn count(&self, u: &[f64], threshold: f64) -> usize {
        self.label(&self.excited(u, threshold)).1
    }
}

/// Number of edge-connected components of `{T : u >= threshold at all three
/// vertices}` for nodal values `u` over every mesh node.
pub fn excited_components(u: &[f64], mesh: &Mesh, threshold: f64) -> Result<usize> {
    if u.len() != mesh.num_nodes() {
        return Err(Error::Dimension { expected: mesh.num_nodes(), got: u.len() });
    }
    Ok(ComponentLabeler::new(mesh, &DofLayout::free(mesh))?.count(u, threshold))
}

/// Time horizon and recording cadence of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub t_obs: f64,
    /// record summary statistics every this many steps
    pub record_every: usize,
    /// keep a snapshot every this many steps (0: none)
    pub snapshot_every: usize,
    pub u_act: f64,
}

/// Everything shared by the runs of one configuration.
pub struct Experiment<'a> {
    pub mesh: &'a Mesh,
    pub layout: DofLayout,
    pub factor: Option<&'a NoiseFactor>,
    pub labeler: ComponentLabeler,
}

impl<'a> Experiment<'a> {
    pub fn new(mesh: &'a Mesh, layout: DofLayout, factor: Option<&'a NoiseFactor>) -> Result<Self> {
        let labeler = ComponentLabeler::new(mesh, &layout)?;
        Ok(Experiment { mesh, layout, factor, labeler })
    }

    pub fn stepper(&self, model: Model, dt: f64) -> Result<Stepper> {
        Stepper::new(model, FemOperators::new(self.mesh, self.layout.clone()), dt)
    }

    /// Runs one trajectory from the rest state; noise comes from stream
    /// `replica` of `seed`.
    pub fn run(&self, stepper: &Stepper, settings: &RunSettings, seed: u64, replica: u64) -> Result<RunRecord> {
        let (u0, v0) = stepper.model.rest_state();
        let init = ModelState::uniform(stepper.num_dofs(), u0, v0);
        self.run_from(stepper, init, settings, seed, replica)
    }

    pub fn run_from(
        &self,
        stepper: &Stepper,
        init: ModelState,
        settings: &RunSettings,
        seed: u64,
        replica: u64,
    ) -> Result<RunRecord> {
        if settings.record_every == 0 || !(settings.t_obs > 0.0) {
            return Err(Error::InvalidParameter("record_every and t_obs must be positive".into()));
        }
        let steps = (settings.t_obs / stepper.dt).round() as usize;
        let noisy = stepper.model.sigma() > 0.0 && self.factor.is_some();
        let mut sampler = self.factor.map(|f| f.sampler(stream(seed, replica)));
        let n = stepper.num_dofs() as f64;
        let mut state = init;
        let mut record = RunRecord { t_obs: settings.t_obs, seed, replica, ..Default::default() };
        let mut prev_excited = self.labeler.excited(&state.u, settings.u_act);

        let observe = |state: &ModelState, record: &mut RunRecord, count: usize, k: usize| {
            if k.is_multiple_of(settings.record_every) {
                let active = state.u.iter().filter(|&&x| x >= settings.u_act).count() as f64 / n;
                record.times.push(state.t);
                record.activated_fraction.push(active);
                record.component_count.push(count);
            }
            if settings.snapshot_every > 0 && k.is_multiple_of(settings.snapshot_every) {
                record.snapshots.push((state.t, self.layout.expand(&state.u), self.layout.expand(&state.v)));
            }
        };
        let (_, c0) = self.labeler.label(&prev_excited);
        observe(&state, &mut record, c0, 0);

        for k in 1..=steps {
            let field = match (&mut sampler, noisy) {
                (Some(s), true) => {
                    let w = s.sample_increment(1.0);
                    Some(project_noise(&w, &s.factor().sites, self.mesh)?)
                }
                _ => None,
            };
            state = stepper.step(&state, field.as_ref())?;
            let excited = self.labeler.excited(&state.u, settings.u_act);
            let (roots, count) = self.labeler.label(&excited);
            record.nucleations += newborn_components(&roots, &prev_excited);
            observe(&state, &mut record, count, k);
            prev_excited = excited;
        }
        Ok(record)
    }
}

/// Components none of whose triangles were excited in the previous frame.
fn newborn_components(roots: &[usize], prev_excited: &[bool]) -> usize {
    let mut seen: BTreeMap<usize, bool> = BTreeMap::new();
    for (t, &r) in roots.iter().enumerate() {
        if r != usize::MAX {
            let old = seen.entry(r).or_insert(false);
            *old |= prev_excited[t];
        }
    }
    seen.values().filter(|&&old| !old).count()
}

/// Parameter that a sweep axis varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Sigma,
    Epsilon,
    TauClose,
}

impl Axis {
    pub fn apply(&self, model: &Model, value: f64) -> Result<Model> {
        let mut m = *model;
        match (self, &mut m) {
            (Axis::Sigma, Model::Fhn(p)) => p.sigma = value,
            (Axis::Sigma, Model::Barkley(p)) => p.sigma = value,
            (Axis::Sigma, Model::Ms(p)) => p.sigma = value,
            (Axis::Epsilon, Model::Fhn(p)) => p.epsilon = value,
            (Axis::Epsilon, Model::Barkley(p)) => p.epsilon = value,
            (Axis::TauClose, Model::Ms(p)) => p.tau_close = value,
            _ => {
                return Err(Error::InvalidParameter(format!("axis {self:?} does not apply to {}", model.name())));
            }
        }
        Ok(m)
    }
}

/// A two-parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: Model,
    pub axis1: (Axis, Vec<f64>),
    pub axis2: (Axis, Vec<f64>),
    pub seeds_per_cell: usize,
    pub dt: f64,
    pub settings: RunSettings,
    pub policy: ClassifyPolicy,
    pub seed: u64,
}

/// Outcome of one `(cell, seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis1: f64,
    pub axis2: f64,
    pub seed: usize,
    /// `Err` carries the failure message of a run that did not finish
    pub class: std::result::Result<WaveClass, String>,
    pub nucleations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub axis1: f64,
    pub axis2: f64,
    pub modal: Option<Label>,
    pub histogram: BTreeMap<Label, usize>,
    pub failures: usize,
    pub transition: bool,
    pub mean_nucleations: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis_names: (Axis, Axis),
    pub rows: Vec<SweepRow>,
    pub cells: Vec<CellSummary>,
}

fn axis_name(a: Axis) -> &'static str {
    match a {
        Axis::Sigma => "sigma",
        Axis::Epsilon => "epsilon",
        Axis::TauClose => "tau_close",
    }
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("axis1,axis2,seed,label,max_fraction,sustain_time,components_late\n");
        for r in &self.rows {
            match &r.class {
                Ok(c) => s.push_str(&format!(
                    "{},{},{},{},{:.6},{:.4},{:.4}\n",
                    r.axis1, r.axis2, r.seed, c.label, c.max_fraction, c.sustain_time, c.components_late
                )),
                Err(_) => s.push_str(&format!("{},{},{},ERR,,,\n", r.axis1, r.axis2, r.seed)),
            }
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = format!(
            "{},{},modal,transition,NW,W,RW,DW,failures,mean_nucleations\n",
            axis_name(self.axis_names.0),
            axis_name(self.axis_names.1)
        );
        for c in &self.cells {
            let h = |l| c.histogram.get(&l).copied().unwrap_or(0);
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{:.3}\n",
                c.axis1,
                c.axis2,
                c.modal.map_or("ERR".to_string(), |l| l.to_string()),
                c.transition,
                h(Label::NW),
                h(Label::W),
                h(Label::RW),
                h(Label::DW),
                c.failures,
                c.mean_nucleations
            ));
        }
        s
    }

    /// Finished runs of the cells with `axis1 == a1`, as
    /// `(axis2, nucleations)`.
    pub fn nucleations_along_axis2(&self, a1: f64) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.axis1 == a1 && r.class.is_ok()).map(|r| (r.axis2, r.nucleations as f64)).collect()
    }
}

/// Runs every `(cell, seed)` pair. Seed index `s` uses stream `s` of
/// `spec.seed` in every cell, so cells share their noise paths and results
/// are independent of scheduling.
pub fn sweep(spec: &SweepSpec, exp: &Experiment<'_>) -> Result<SweepTable> {
    spec.policy.validate()?;
    if spec.seeds_per_cell == 0 {
        return Err(Error::InvalidParameter("seeds_per_cell must be >= 1".into()));
    }
    let mut cells = Vec::new();
    for &a1 in &spec.axis1.1 {
        for &a2 in &spec.axis2.1 {
            let m = spec.axis2.0.apply(&spec.axis1.0.apply(&spec.base, a1)?, a2)?;
            m.validate()?;
            cells.push((a1, a2, m));
        }
    }
    let tasks: Vec<(usize, usize)> =
        (0..cells.len()).flat_map(|c| (0..spec.seeds_per_cell).map(move |s| (c, s))).collect();
    let rows: Vec<SweepRow> = tasks
        .par_iter()
        .map(|&(c, s)| {
            let (a1, a2, model) = cells[c];
            let outcome = exp
                .stepper(model, spec.dt)
                .and_then(|st| exp.run(&st, &spec.settings, spec.seed, s as u64))
                .and_then(|rec| classify_run(&rec, &spec.policy).map(|cl| (cl, rec.nucleations)));
            match outcome {
                Ok((class, nucleations)) => SweepRow { axis1: a1, axis2: a2, seed: s, class: Ok(class), nucleations },
                Err(e) => SweepRow { axis1: a1, axis2: a2, seed: s, class: Err(e.to_string()), nucleations: 0 },
            }
        })
        .collect();

    let summaries = cells
        .iter()
        .enumerate()
        .map(|(c, &(a1, a2, _))| {
            let rs = &rows[c * spec.seeds_per_cell..(c + 1) * spec.seeds_per_cell];
            summarize_cell(a1, a2, rs, &spec.policy)
        })
        .collect();
    Ok(SweepTable { axis_names: (spec.axis1.0, spec.axis2.0), rows, cells: summaries })
}

fn summarize_cell(a1: f64, a2: f64, rows: &[SweepRow], policy: &ClassifyPolicy) -> CellSummary {
    let mut histogram = BTreeMap::new();
    let mut failures = 0;
    for r in rows {
        match &r.class {
            Ok(c) => *histogram.entry(c.label).or_insert(0) += 1,
            Err(_) => failures += 1,
        }
    }
    // ties resolve to the earlier label in NW < W < RW < DW
    let modal = histogram.iter().fold(None, |best: Option<(Label, usize)>, (&l, &n)| match best {
        Some((_, m)) if m >= n => best,
        _ => Some((l, n)),
    });
    let ok = (rows.len() - failures).max(1) as f64;
    let share = |l| histogram.get(&l).copied().unwrap_or(0) as f64 / ok;
    let transition = share(Label::RW) >= policy.transition_share && share(Label::DW) >= policy.transition_share;
    let mean_nucleations = rows.iter().map(|r| r.nucleations as f64).sum::<f64>() / rows.len() as f64;
    CellSummary {
        axis1: a1,
        axis2: a2,
        modal: modal.map(|(l, _)| if transition { Label::T } else { l }),
        histogram,
        failures,
        transition,
        mean_nucleations,
    }
}

/// Spearman rank correlation with its one-sided p-value for a positive
/// trend (Student-t approximation with `n - 2` degrees of freedom).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendTest {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman_trend(x: &[f64], y: &[f64]) -> Result<TrendTest> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(Error::InvalidParameter("need at least three paired observations".into()));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(TrendTest { rho: 0.0, p_value: 1.0, n });
    }
    let rho = sxy / (sxx * syy).sqrt();
    let df = (n - 2) as f64;
    let p_value = if rho >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        1.0 - dist.cdf(t)
    };
    Ok(TrendTest { rho, p_value, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_square_grid;

    fn record(fraction: &[f64], comps: &[usize]) -> RunRecord {
        let n = fraction.len();
        RunRecord {
            times: (0..n).map(|i| i as f64).collect(),
            activated_fraction: fraction.to_vec(),
            component_count: comps.to_vec(),
            t_obs: (n - 1) as f64,
            ..Default::default()
        }
    }

    #[test]
    fn classify_branches() {
        let p = ClassifyPolicy::default();
        assert_eq!(classify_run(&record(&[0.0; 11], &[0; 11]), &p).unwrap().label, Label::NW);
        let bump = [0.0, 0.1, 0.4, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(classify_run(&record(&bump, &[1; 11]), &p).unwrap().label, Label::W);
        let osc: Vec<f64> = (0..11).map(|i| if i % 2 == 0 { 0.1 } else { 0.4 }).collect();
        assert_eq!(classify_run(&record(&osc, &[1; 11]), &p).unwrap().label, Label::RW);
        assert_eq!(classify_run(&record(&osc, &[8; 11]), &p).unwrap().label, Label::DW);
    }

    #[test]
    fn short_record_is_rejected() {
        let mut r = record(&[0.0; 5], &[0; 5]);
        r.t_obs = 10.0;
        assert!(matches!(classify_run(&r, &ClassifyPolicy::default()), Err(Error::RecordTooShort { .. })));
    }

    #[test]
    fn components_on_grid() {
        let mesh = generate_square_grid(1.0, 20).unwrap();
        assert_eq!(excited_components(&vec![0.0; mesh.num_nodes()], &mesh, 0.5).unwrap(), 0);
        assert_eq!(excited_components(&vec![1.0; mesh.num_nodes()], &mesh, 0.5).unwrap(), 1);
        let blobs: Vec<f64> = mesh
            .nodes
            .iter()
            .map(|p| {
                let d1 = (p[0] - 0.25).hypot(p[1] - 0.25);
                let d2 = (p[0] - 0.75).hypot(p[1] - 0.7);
                if d1 < 0.15 || d2 < 0.15 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        assert_eq!(excited_components(&blobs, &mesh, 0.5).unwrap(), 2);
    }

    #[test]
    fn periodic_seam_joins_components() {
        let mesh = generate_square_grid(1.0, 10).unwrap();
        let pmap = crate::mesh::periodic_node_map(&mesh, 1.0).unwrap();
        let layout = DofLayout::periodic(&mesh, &pmap);
        // a band touching both the left and the right edge
        let u: Vec<f64> = layout
            .representatives()
            .iter()
            .map(|&i| if (mesh.nodes[i][0] - 0.5).abs() > 0.3 { 1.0 } else { 0.0 })
            .collect();
        let lab = ComponentLabeler::new(&mesh, &layout).unwrap();
        assert_eq!(lab.count(&u, 0.5), 1);
        assert_eq!(excited_components(&layout.expand(&u), &mesh, 0.5).unwrap(), 2);
    }

    #[test]
    fn newborns() {
        let roots = vec![0, 0, usize::MAX, 3, 3, 5];
        let prev = vec![false, true, false, false, false, false];
        assert_eq!(newborn_components(&roots, &prev), 2);
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let t = spearman_trend(&x, &[2.0, 4.0, 6.0, 8.0, 10.0]).unwrap();
        assert_eq!((t.rho, t.p_value), (1.0, 0.0));
        let t = spearman_trend(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        assert!((t.rho + 1.0).abs() < 1e-12 && t.p_value > 0.99);
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }
}
