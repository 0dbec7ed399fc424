//! TOML experiment configuration.
//!
//! Sections: `[mesh]`, `[kernel]`, `[noise]`, `[model]`, `[time]`,
//! `[output]`, `[classify]`, plus `[heat]`, `[strong]` and `[sweep]` for the
//! commands that need them, and top-level `seed` and `threads`. Unknown keys
//! are rejected and every error names the offending key path.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiments::{Axis, ClassifyPolicy};
use crate::fem::DofLayout;
use crate::mesh::{generate_square_grid, import_mesh, periodic_node_map, Mesh};
use crate::models::{BarkleyParams, EpsilonPlacement, FhnParams, Model, MsParams};
use crate::noise::{Discretization, Kernel};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub classify: ClassifyPolicy,
    #[serde(default)]
    pub heat: HeatSection,
    #[serde(default)]
    pub strong: StrongSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Neumann,
    Dirichlet,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    /// `"square"` or a path to a mesh file
    pub source: String,
    pub square_l: f64,
    pub square_n: usize,
    pub boundary: Option<Boundary>,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection { source: "square".into(), square_l: 1.0, square_n: 10, boundary: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    #[serde(rename = "type")]
    pub kind: String,
    pub xi: f64,
    pub k0: u32,
    pub p0: u32,
    pub l: Option<f64>,
    pub a: f64,
    pub b: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection { kind: "gaussian".into(), xi: 2.0, k0: 1, p0: 1, l: None, a: 1.0, b: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub sigma: f64,
    pub discretization: Discretization,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection { sigma: 0.0, discretization: Discretization::P1 }
    }
}

/// Model parameters; keys left out take the model's reference values.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kappa: Option<f64>,
    pub nu: Option<f64>,
    pub epsilon: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub placement: Option<EpsilonPlacement>,
    pub clamp: Option<bool>,
    pub tau_in: Option<f64>,
    pub tau_out: Option<f64>,
    pub tau_open: Option<f64>,
    pub tau_close: Option<f64>,
    pub u_gate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection { dt: 0.05, t_end: 10.0, record_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub snapshot_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), snapshot_every: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatSection {
    pub replicas: usize,
    pub k_max: usize,
}

impl Default for HeatSection {
    fn default() -> Self {
        HeatSection { replicas: 40, k_max: crate::heat::DEFAULT_K_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrongSection {
    pub sigma: f64,
    pub t_end: f64,
    pub spatial_n: Vec<usize>,
    pub spatial_dt: f64,
    pub temporal_dt: Vec<f64>,
    pub temporal_n: usize,
    pub joint_n: Vec<usize>,
    pub joint_dt: Vec<f64>,
    pub replicas: usize,
}

impl Default for StrongSection {
    fn default() -> Self {
        let d = crate::heat::StrongErrorConfig::default();
        StrongSection {
            sigma: d.sigma,
            t_end: d.t_end,
            spatial_n: d.spatial_n,
            spatial_dt: d.spatial_dt,
            temporal_dt: d.temporal_dt,
            temporal_n: d.temporal_n,
            joint_n: d.joint.iter().map(|j| j.0).collect(),
            joint_dt: d.joint.iter().map(|j| j.1).collect(),
            replicas: d.replicas,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub axis1: Option<Axis>,
    pub values1: Vec<f64>,
    pub axis2: Option<Axis>,
    pub values2: Vec<f64>,
    pub seeds_per_cell: Option<usize>,
}

fn config_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config { key: key.into(), msg: msg.into() }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_err("<document>", e.to_string()))?;
        serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let key = e.path().to_string();
            config_err(&key, e.into_inner().to_string())
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Builds the mesh, reading it from disk when `mesh.source` is a path.
    /// Relative paths are resolved against `base`.
    pub fn build_mesh(&self, base: &Path) -> Result<Mesh> {
        let m = &self.mesh;
        if m.source == "square" {
            if !(m.square_l > 0.0) {
                return Err(config_err("mesh.square_l", "must be > 0"));
            }
            if m.square_n == 0 {
                return Err(config_err("mesh.square_n", "must be >= 1"));
            }
            generate_square_grid(m.square_l, m.square_n)
        } else {
            let path = self.mesh_path(base).expect("not a square");
            let file = std::fs::File::open(&path)
                .map_err(|e| config_err("mesh.source", format!("cannot open {}: {e}", path.display())))?;
            import_mesh(std::io::BufReader::new(file))
        }
    }

    pub fn mesh_path(&self, base: &Path) -> Option<PathBuf> {
        (self.mesh.source != "square").then(|| base.join(&self.mesh.source))
    }

    pub fn boundary(&self, default: Boundary) -> Boundary {
        self.mesh.boundary.unwrap_or(default)
    }

    pub fn layout(&self, mesh: &Mesh, boundary: Boundary) -> Result<DofLayout> {
        Ok(match boundary {
            Boundary::Neumann => DofLayout::free(mesh),
            Boundary::Dirichlet => DofLayout::dirichlet(mesh),
            Boundary::Periodic => {
                if self.mesh.source != "square" {
                    return Err(config_err("mesh.boundary", "periodic conditions need the generated square"));
                }
                DofLayout::periodic(mesh, &periodic_node_map(mesh, self.mesh.square_l)?)
            }
        })
    }

    pub fn kernel(&self) -> Result<Kernel> {
        let k = &self.kernel;
        let kernel = match k.kind.as_str() {
            "gaussian" => Kernel::Gaussian { xi: k.xi },
            "separable" => Kernel::Separable { k0: k.k0, p0: k.p0, l: k.l.unwrap_or(self.mesh.square_l) },
            "scaled_gaussian" => Kernel::ScaledGaussian { a: k.a, b: k.b, xi: k.xi },
            other => {
                return Err(config_err(
                    "kernel.type",
                    format!("unknown kernel `{other}` (gaussian, separable, scaled_gaussian)"),
                ))
            }
        };
        kernel.validate().map_err(|e| config_err("kernel", e.to_string()))?;
        Ok(kernel)
    }

    /// Model with reference parameters overridden by `[model]` and the noise
    /// intensity from `noise.sigma`.
    pub fn model(&self, name: &str) -> Result<Model> {
        let m = &self.model;
        let sigma = self.noise.sigma;
        let reject = |allowed: &[&str]| -> Result<()> {
            let given = [
                ("kappa", m.kappa.is_some()),
                ("nu", m.nu.is_some()),
                ("epsilon", m.epsilon.is_some()),
                ("a", m.a.is_some()),
                ("b", m.b.is_some()),
                ("placement", m.placement.is_some()),
                ("clamp", m.clamp.is_some()),
                ("tau_in", m.tau_in.is_some()),
                ("tau_out", m.tau_out.is_some()),
                ("tau_open", m.tau_open.is_some()),
                ("tau_close", m.tau_close.is_some()),
                ("u_gate", m.u_gate.is_some()),
            ];
            match given.iter().find(|(k, set)| *set && !allowed.contains(k)) {
                Some((k, _)) => Err(config_err(&format!("model.{k}"), format!("not a parameter of the {name} model"))),
                None => Ok(()),
            }
        };
        let model = match name {
            "fhn" => {
                reject(&["kappa", "epsilon", "a", "placement"])?;
                Model::Fhn(FhnParams {
                    kappa: m.kappa.unwrap_or(1.0),
                    epsilon: m.epsilon.unwrap_or(0.1),
                    a: m.a.unwrap_or(0.1),
                    sigma,
                    placement: m.placement.unwrap_or_default(),
                })
            }
            "barkley" => {
                reject(&["nu", "epsilon", "a", "b", "clamp"])?;
                Model::Barkley(BarkleyParams {
                    nu: m.nu.unwrap_or(1.0),
                    epsilon: m.epsilon.unwrap_or(0.05),
                    a: m.a.unwrap_or(0.75),
                    b: m.b.unwrap_or(0.01),
                    sigma,
                    clamp: m.clamp.unwrap_or(false),
                })
            }
            "ms" => {
                reject(&["nu", "tau_in", "tau_out", "tau_open", "tau_close", "u_gate"])?;
                Model::Ms(MsParams {
                    nu: m.nu.unwrap_or(0.03),
                    tau_in: m.tau_in.unwrap_or(0.07),
                    tau_out: m.tau_out.unwrap_or(0.7),
                    tau_open: m.tau_open.unwrap_or(8.0),
                    tau_close: m.tau_close.unwrap_or(4.0),
                    u_gate: m.u_gate.unwrap_or(0.13),
                    sigma,
                })
            }
            other => return Err(config_err("model", format!("unknown model `{other}` (fhn, barkley, ms)"))),
        };
        model.validate().map_err(|e| config_err("model", e.to_string()))?;
        Ok(model)
    }

    pub fn check_time(&self) -> Result<()> {
        if !(self.time.dt > 0.0) || !self.time.dt.is_finite() {
            return Err(config_err("time.dt", "must be > 0"));
        }
        if !(self.time.t_end > 0.0) || !self.time.t_end.is_finite() {
            return Err(config_err("time.t_end", "must be > 0"));
        }
        if self.time.record_every == 0 {
            return Err(config_err("time.record_every", "must be >= 1"));
        }
        if !(self.noise.sigma >= 0.0) {
            return Err(config_err("noise.sigma", "must be >= 0"));
        }
        Ok(())
    }

    /// Number of whole steps covering `t_end`.
    pub fn n_steps(&self) -> Result<usize> {
        self.check_time()?;
        let n = (self.time.t_end / self.time.dt).round() as usize;
        if n == 0 || ((n as f64) * self.time.dt - self.time.t_end).abs() > 1e-9 * self.time.t_end {
            return Err(config_err("time.t_end", "must be a whole number of time steps"));
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_document() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            seed = 7
            threads = 2
            [mesh]
            source = "square"
            square_l = 40.0
            square_n = 25
            boundary = "periodic"
            [kernel]
            type = "gaussian"
            xi = 2.0
            [noise]
            sigma = 0.15
            discretization = "p0a"
            [model]
            epsilon = 0.05
            [time]
            dt = 0.05
            t_end = 60.0
            [output]
            dir = "runs/a"
            snapshot_every = 10
            [classify]
            c_max = 6
            [sweep]
            axis1 = "epsilon"
            values1 = [0.03, 0.05]
            axis2 = "sigma"
            values2 = [0.0, 0.15]
            seeds_per_cell = 3
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed(), 7);
        assert_eq!(cfg.noise.discretization, Discretization::P0a);
        assert_eq!(cfg.classify.c_max, 6);
        assert_eq!(cfg.classify.u_act, 0.5);
        assert_eq!(cfg.n_steps().unwrap(), 1200);
        match cfg.model("barkley").unwrap() {
            Model::Barkley(p) => assert_eq!((p.epsilon, p.a, p.sigma), (0.05, 0.75, 0.15)),
            m => panic!("{m:?}"),
        }
        let mesh = cfg.build_mesh(Path::new(".")).unwrap();
        assert_eq!(cfg.layout(&mesh, cfg.boundary(Boundary::Neumann)).unwrap().num_dofs(), 625);
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let err = ExperimentConfig::from_toml("[time]\ndt = 0.1\nsteps = 3\n").unwrap_err();
        match err {
            Error::Config { key, msg } => {
                assert!(key.starts_with("time"), "{key}");
                assert!(msg.contains("steps"), "{msg}");
            }
            e => panic!("{e}"),
        }
        let err = ExperimentConfig::from_toml("[noise]\ndiscretization = \"p2\"\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key.starts_with("noise")), "{err}");
    }

    #[test]
    fn model_keys_are_checked() {
        let cfg = ExperimentConfig::from_toml("[model]\ntau_in = 0.1\n").unwrap();
        assert!(matches!(cfg.model("barkley"), Err(Error::Config { ref key, .. }) if key == "model.tau_in"));
        assert!(cfg.model("ms").is_ok());
        assert!(matches!(cfg.model("hh"), Err(Error::Config { .. })));
    }

    #[test]
    fn time_grid_must_be_whole() {
        let cfg = ExperimentConfig::from_toml("[time]\ndt = 0.3\nt_end = 1.0\n").unwrap();
        assert!(matches!(cfg.n_steps(), Err(Error::Config { ref key, .. }) if key == "time.t_end"));
    }
}
