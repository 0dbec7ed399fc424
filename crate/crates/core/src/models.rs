//! Reaction kinetics and semi-implicit Euler-Maruyama steppers.
//!
//! Every model is advanced with diffusion (and any linear reaction part)
//! implicit, the nonlinear reaction explicit, and additive noise
//! `(σ/√Δt) (W_1, ψ)` built from a unit-time noise sample. The system matrix
//! does not depend on time, so each [`Stepper`] factorizes it once.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fem::{nonlinear_load, FemOperators};
use crate::linalg::EnvelopeCholesky;
use crate::noise::FeField;

/// Where the FitzHugh-Nagumo recovery variable enters the `u` equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonPlacement {
    /// `du = [κΔu + f(u)/ε - v] dt`, as in the discrete scheme
    #[default]
    Scheme,
    /// `du = [κΔu + (f(u) - v)/ε] dt`
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhnParams {
    pub kappa: f64,
    pub epsilon: f64,
    pub a: f64,
    pub sigma: f64,
    pub placement: EpsilonPlacement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarkleyParams {
    pub nu: f64,
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    /// cap `u_{n+1}` at 1 after every solve
    pub clamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsParams {
    pub nu: f64,
    pub tau_in: f64,
    pub tau_out: f64,
    pub tau_open: f64,
    pub tau_close: f64,
    pub u_gate: f64,
    pub sigma: f64,
}

impl FhnParams {
    pub fn validate(&self) -> Result<()> {
        check(self.kappa > 0.0, "kappa must be > 0")?;
        check(self.epsilon > 0.0, "epsilon must be > 0")?;
        check(self.a > 0.0 && self.a < 1.0, "a must lie in (0, 1)")?;
        check(self.sigma >= 0.0, "sigma must be >= 0")
    }

    /// `k(x) = (-x³ + x²(1 + a)) / ε`, the nonlinear part of `f(x)/ε`.
    pub fn k(&self, x: f64) -> f64 {
        x * x * (1.0 + self.a - x) / self.epsilon
    }
}

impl BarkleyParams {
    pub fn validate(&self) -> Result<()> {
        check(self.nu > 0.0, "nu must be > 0")?;
        check(self.epsilon > 0.0, "epsilon must be > 0")?;
        check(self.a > 0.0, "a must be > 0")?;
        check(self.b > 0.0, "b must be > 0")?;
        check(self.sigma >= 0.0, "sigma must be >= 0")
    }

    /// `u (1 - u) (u - (v + b)/a) / ε`
    pub fn reaction(&self, u: f64, v: f64) -> f64 {
        u * (1.0 - u) * (u - (v + self.b) / self.a) / self.epsilon
    }
}

impl MsParams {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.nu, "nu"),
            (self.tau_in, "tau_in"),
            (self.tau_out, "tau_out"),
            (self.tau_open, "tau_open"),
            (self.tau_close, "tau_close"),
        ] {
            check(v > 0.0, &format!("{name} must be > 0"))?;
        }
        check(self.u_gate > 0.0 && self.u_gate < 1.0, "u_gate must lie in (0, 1)")?;
        check(self.sigma >= 0.0, "sigma must be >= 0")
    }

    /// `v u² (1 - u) / τ_in - u / τ_out`
    pub fn reaction(&self, u: f64, v: f64) -> f64 {
        v * u * u * (1.0 - u) / self.tau_in - u / self.tau_out
    }

    /// Right-hand side of the gate equation.
    pub fn gate(&self, u: f64, v: f64) -> f64 {
        if u < self.u_gate {
            (1.0 - v) / self.tau_open
        } else {
            -v / self.tau_close
        }
    }
}

fn check(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg.into()))
    }
}

/// `f(x) = x (1 - x) (x - a)`
pub fn fhn_cubic(a: f64, x: f64) -> f64 {
    x * (1.0 - x) * (x - a)
}

/// One-sided Lipschitz constant of [`fhn_cubic`], `(1 + a² - a)/3`.
pub fn fhn_dissipativity_constant(a: f64) -> f64 {
    (1.0 + a * a - a) / 3.0
}

/// Checks `(f(x) - f(y))(x - y) <= c (x - y)²` on `samples` pairs drawn
/// uniformly from `[-2, 3]²`.
pub fn fhn_dissipativity_check(a: f64, samples: usize, seed: u64) -> bool {
    use rand::Rng;
    let c = fhn_dissipativity_constant(a);
    let mut rng = crate::rng::stream(seed, 0);
    (0..samples).all(|_| {
        let x: f64 = rng.random_range(-2.0..3.0);
        let y: f64 = rng.random_range(-2.0..3.0);
        let d = x - y;
        let lhs = (fhn_cubic(a, x) - fhn_cubic(a, y)) * d;
        // rounding in the cubic differences scales with the operands
        lhs <= c * d * d + 1e-12 * d.abs() * (1.0 + x.abs() + y.abs()).powi(2)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Fhn(FhnParams),
    Barkley(BarkleyParams),
    Ms(MsParams),
}

impl Model {
    pub fn sigma(&self) -> f64 {
        match self {
            Model::Fhn(p) => p.sigma,
            Model::Barkley(p) => p.sigma,
            Model::Ms(p) => p.sigma,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Fhn(_) => "fhn",
            Model::Barkley(_) => "barkley",
            Model::Ms(_) => "ms",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Fhn(p) => p.validate(),
            Model::Barkley(p) => p.validate(),
            Model::Ms(p) => p.validate(),
        }
    }

    /// Spatially uniform rest state `(u, v)`.
    pub fn rest_state(&self) -> (f64, f64) {
        match self {
            Model::Fhn(_) | Model::Barkley(_) => (0.0, 0.0),
            Model::Ms(_) => (0.0, 1.0),
        }
    }

    /// Right-hand side of the space-independent kinetics.
    pub fn ode_rhs(&self, u: f64, v: f64) -> (f64, f64) {
        match self {
            Model::Fhn(p) => {
                let f = fhn_cubic(p.a, u) / p.epsilon;
                let du = match p.placement {
                    EpsilonPlacement::Scheme => f - v,
                    EpsilonPlacement::Model => f - v / p.epsilon,
                };
                (du, u - v)
            }
            Model::Barkley(p) => (p.reaction(u, v), u - v),
            Model::Ms(p) => (p.reaction(u, v), p.gate(u, v)),
        }
    }
}

/// Nodal fields over the unknowns of a layout, at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl ModelState {
    pub fn uniform(n: usize, u: f64, v: f64) -> Self {
        ModelState { u: vec![u; n], v: vec![v; n], t: 0.0 }
    }
}

/// A model bound to its finite-element operators and time step, with the
/// factorized system matrix.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub model: Model,
    pub ops: FemOperators,
    pub dt: f64,
    solver: EnvelopeCholesky,
}

impl Stepper {
    pub fn new(model: Model, ops: FemOperators, dt: f64) -> Result<Self> {
        model.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if let Model::Ms(p) = &model {
            let bound = p.tau_open.min(p.tau_close);
            if dt > bound {
                return Err(Error::StepSize { dt, bound });
            }
        }
        let (mass_coeff, diffusion) = match &model {
            Model::Fhn(p) => {
                let coupling = match p.placement {
                    EpsilonPlacement::Scheme => 1.0,
                    EpsilonPlacement::Model => 1.0 / p.epsilon,
                };
                (1.0 / dt + p.a / p.epsilon + coupling * dt / (1.0 + dt), p.kappa)
            }
            Model::Barkley(p) => (1.0 / dt, p.nu),
            Model::Ms(p) => (1.0 / dt, p.nu),
        };
        let system = ops.mass.linear_combination(mass_coeff, &ops.stiffness, diffusion);
        let solver = EnvelopeCholesky::factor(&system)?;
        Ok(Stepper { model, ops, dt, solver })
    }

    pub fn num_dofs(&self) -> usize {
        self.ops.num_dofs()
    }

    /// Advances `state` by one step. `noise` is a unit-time sample `W_1` of
    /// the discrete noise, or `None` for the deterministic system.
    pub fn step(&self, state: &ModelState, noise: Option<&FeField>) -> Result<ModelState> {
        let n = self.num_dofs();
        for len in [state.u.len(), state.v.len()] {
            if len != n {
                return Err(Error::Dimension { expected: n, got: len });
            }
        }
        let dt = self.dt;
        let (u, v) = (&state.u, &state.v);
        let explicit: Vec<f64> = match &self.model {
            Model::Fhn(p) => {
                let coupling = match p.placement {
                    EpsilonPlacement::Scheme => 1.0,
                    EpsilonPlacement::Model => 1.0 / p.epsilon,
                };
                u.iter().zip(v).map(|(&u, &v)| u / dt + p.k(u) - coupling * v / (1.0 + dt)).collect()
            }
            Model::Barkley(p) => u.iter().zip(v).map(|(&u, &v)| u / dt + p.reaction(u, v)).collect(),
            Model::Ms(p) => u.iter().zip(v).map(|(&u, &v)| u / dt + p.reaction(u, v)).collect(),
        };
        let t = state.t + dt;
        if let Some((i, &value)) = explicit.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFinite { time: t, node: self.ops.layout.representatives()[i], value });
        }
        let mut rhs = nonlinear_load(&explicit, &self.ops.mass)?;
        let sigma = self.model.sigma();
        if let Some(field) = noise {
            if sigma != 0.0 {
                let load = field.load(&self.ops)?;
                let s = sigma / dt.sqrt();
                for (r, l) in rhs.iter_mut().zip(&load) {
                    *r += s * l;
                }
            }
        }
        let mut u_next = self.solver.solve(&rhs);
        if let Model::Barkley(BarkleyParams { clamp: true, .. }) = self.model {
            for x in &mut u_next {
                *x = x.min(1.0);
            }
        }
        let v_next: Vec<f64> = match &self.model {
            Model::Fhn(_) | Model::Barkley(_) => {
                v.iter().zip(&u_next).map(|(&v, &u1)| (v + dt * u1) / (1.0 + dt)).collect()
            }
            Model::Ms(p) => u.iter().zip(v).map(|(&u, &v)| v + dt * p.gate(u, v)).collect(),
        };
        for field in [&u_next, &v_next] {
            if let Some((i, &value)) = field.iter().enumerate().find(|(_, x)| !x.is_finite()) {
                return Err(Error::NonFinite { time: t, node: self.ops.layout.representatives()[i], value });
            }
        }
        Ok(ModelState { u: u_next, v: v_next, t })
    }
}

/// Classical fourth-order Runge-Kutta for the space-independent kinetics,
/// returning `(u, v)` at `t_end`.
pub fn integrate_kinetics(model: &Model, u0: f64, v0: f64, t_end: f64, steps: usize) -> (f64, f64) {
    let h = t_end / steps as f64;
    let (mut u, mut v) = (u0, v0);
    for _ in 0..steps {
        let k1 = model.ode_rhs(u, v);
        let k2 = model.ode_rhs(u + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = model.ode_rhs(u + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = model.ode_rhs(u + h * k3.0, v + h * k3.1);
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::DofLayout;
    use crate::mesh::generate_square_grid;

    pub(crate) fn fhn() -> FhnParams {
        FhnParams { kappa: 1.0, epsilon: 0.1, a: 0.1, sigma: 0.0, placement: EpsilonPlacement::Scheme }
    }

    fn ms() -> MsParams {
        MsParams { nu: 0.03, tau_in: 0.07, tau_out: 0.7, tau_open: 8.0, tau_close: 4.0, u_gate: 0.13, sigma: 0.0 }
    }

    fn ops(n: usize) -> FemOperators {
        let mesh = generate_square_grid(1.0, n).unwrap();
        FemOperators::new(&mesh, DofLayout::free(&mesh))
    }

    #[test]
    fn k_is_the_nonlinear_part() {
        let p = fhn();
        for x in [-1.0, 0.0, 0.3, 1.7] {
            assert!((p.k(x) - p.a * x / p.epsilon - fhn_cubic(p.a, x) / p.epsilon).abs() < 1e-12);
        }
    }

    #[test]
    fn rest_is_fixed() {
        for model in [
            Model::Fhn(fhn()),
            Model::Barkley(BarkleyParams { nu: 1.0, epsilon: 0.05, a: 0.75, b: 0.01, sigma: 0.0, clamp: false }),
            Model::Ms(ms()),
        ] {
            let s = Stepper::new(model, ops(4), 0.05).unwrap();
            let (u, v) = model.rest_state();
            let mut st = ModelState::uniform(s.num_dofs(), u, v);
            for _ in 0..20 {
                st = s.step(&st, None).unwrap();
            }
            assert!(st.u.iter().all(|x| x.abs() < 1e-14), "{}", model.name());
            assert!(st.v.iter().all(|x| (x - v).abs() < 1e-14), "{}", model.name());
        }
    }

    #[test]
    fn ms_closed_gate_fixed_point() {
        let s = Stepper::new(Model::Ms(ms()), ops(3), 0.05).unwrap();
        let st = ModelState { u: vec![0.05; 16], v: vec![1.0; 16], t: 0.0 };
        assert!(s.step(&st, None).unwrap().v.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn ms_step_bound() {
        let p = MsParams { tau_close: 0.04, ..ms() };
        assert!(matches!(Stepper::new(Model::Ms(p), ops(2), 0.05), Err(Error::StepSize { .. })));
    }

    #[test]
    fn blow_up_is_reported() {
        let p = BarkleyParams { nu: 1.0, epsilon: 1e-4, a: 0.75, b: 0.01, sigma: 0.0, clamp: false };
        let s = Stepper::new(Model::Barkley(p), ops(2), 0.5).unwrap();
        let mut st = ModelState::uniform(s.num_dofs(), 5.0, 0.0);
        let mut err = None;
        for _ in 0..50 {
            match s.step(&st, None) {
                Ok(next) => st = next,
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        assert!(matches!(err, Some(Error::NonFinite { .. })));
    }

    #[test]
    fn dissipativity_constant_is_attained() {
        for a in [0.1, 0.5, 0.9] {
            let c = fhn_dissipativity_constant(a);
            // f'(x) = -3x² + 2(1+a)x - a is maximal at x = (1+a)/3
            let x = (1.0 + a) / 3.0;
            let fp = -3.0 * x * x + 2.0 * (1.0 + a) * x - a;
            assert!((fp - c).abs() < 1e-12);
        }
        assert!((fhn_dissipativity_constant(0.1) - 0.91 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn placement_changes_coupling() {
        let m = Model::Fhn(FhnParams { placement: EpsilonPlacement::Model, ..fhn() });
        assert_eq!(m.ode_rhs(0.0, 1.0).0, -10.0);
        assert_eq!(Model::Fhn(fhn()).ode_rhs(0.0, 1.0).0, -1.0);
    }
}
