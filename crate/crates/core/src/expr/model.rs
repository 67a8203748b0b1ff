use super::{parse, CompiledExpr, Expr, Params, Variable};
use crate::error::{Error, Result};

/// Separable Hamiltonian `H = T(p, t) + U(x, t)` with bound parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianModel {
    kinetic: Expr,
    potential: Expr,
    params: Params,
}

impl HamiltonianModel {
    pub fn new(kinetic: Expr, potential: Expr, params: Params) -> Result<HamiltonianModel> {
        for name in params.keys() {
            if Variable::from_name(name).is_some() {
                return Err(Error::Model(format!("`{name}` is a reserved variable and cannot be a parameter")));
            }
        }
        check_vars("T", &kinetic, &[Variable::X, Variable::E])?;
        check_vars("U", &potential, &[Variable::P, Variable::E])?;
        for (which, e) in [("T", &kinetic), ("U", &potential)] {
            if let Some(missing) = e.parameters().into_iter().find(|n| !params.contains_key(n)) {
                return Err(Error::Model(format!("{which} references unbound parameter `{missing}`")));
            }
        }
        Ok(HamiltonianModel { kinetic, potential, params })
    }

    /// Parses `T` and `U` from text and validates the model.
    pub fn parse(kinetic: &str, potential: &str, params: Params) -> Result<HamiltonianModel> {
        HamiltonianModel::new(parse(kinetic)?, parse(potential)?, params)
    }

    pub fn kinetic(&self) -> &Expr {
        &self.kinetic
    }

    pub fn potential(&self) -> &Expr {
        &self.potential
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn hamiltonian(&self) -> Expr {
        self.kinetic.clone() + self.potential.clone()
    }

    /// True when neither term depends on `t`.
    pub fn is_stationary(&self) -> bool {
        !self.kinetic.depends_on(Variable::T) && !self.potential.depends_on(Variable::T)
    }

    /// Same terms with one parameter replaced or added.
    pub fn with_param(&self, name: &str, value: f64) -> Result<HamiltonianModel> {
        let mut params = self.params.clone();
        params.insert(name.to_string(), value);
        HamiltonianModel::new(self.kinetic.clone(), self.potential.clone(), params)
    }

    pub fn functions(&self) -> Result<ModelFunctions> {
        ModelFunctions::new(self)
    }

    /// Checked evaluation of `H(x, p, t)`.
    pub fn energy(&self, x: f64, p: f64, t: f64) -> Result<f64> {
        let mut b = self.params.clone();
        b.insert("x".into(), x);
        b.insert("p".into(), p);
        b.insert("t".into(), t);
        Ok(self.kinetic.eval(&b)? + self.potential.eval(&b)?)
    }
}

fn check_vars(which: &str, e: &Expr, forbidden: &[Variable]) -> Result<()> {
    for v in forbidden {
        if e.depends_on(*v) {
            return Err(Error::Model(format!("{which} must not reference {}", v.name())));
        }
    }
    Ok(())
}

/// Compiled `T`, `U` and the partial derivatives the kernels and the
/// characteristics integrator need.
#[derive(Clone, Debug)]
pub struct ModelFunctions {
    pub kinetic: CompiledExpr,
    pub potential: CompiledExpr,
    pub dkinetic_dp: CompiledExpr,
    pub dkinetic_dt: CompiledExpr,
    pub dpotential_dx: CompiledExpr,
    pub dpotential_dt: CompiledExpr,
    stationary: bool,
}

impl ModelFunctions {
    pub fn new(model: &HamiltonianModel) -> Result<ModelFunctions> {
        let p = &model.params;
        let t = &model.kinetic;
        let u = &model.potential;
        Ok(ModelFunctions {
            kinetic: t.compile(p)?,
            potential: u.compile(p)?,
            dkinetic_dp: t.diff(Variable::P).compile(p)?,
            dkinetic_dt: t.diff(Variable::T).compile(p)?,
            dpotential_dx: u.diff(Variable::X).compile(p)?,
            dpotential_dt: u.diff(Variable::T).compile(p)?,
            stationary: model.is_stationary(),
        })
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    #[inline]
    pub fn t(&self, p: f64, t: f64) -> f64 {
        self.kinetic.eval(&[0.0, p, t, 0.0])
    }

    #[inline]
    pub fn u(&self, x: f64, t: f64) -> f64 {
        self.potential.eval(&[x, 0.0, t, 0.0])
    }

    #[inline]
    pub fn h(&self, x: f64, p: f64, t: f64) -> f64 {
        self.t(p, t) + self.u(x, t)
    }

    /// ∂H/∂p
    #[inline]
    pub fn dh_dp(&self, p: f64, t: f64) -> f64 {
        self.dkinetic_dp.eval(&[0.0, p, t, 0.0])
    }

    /// ∂H/∂x
    #[inline]
    pub fn dh_dx(&self, x: f64, t: f64) -> f64 {
        self.dpotential_dx.eval(&[x, 0.0, t, 0.0])
    }

    /// ∂H/∂t
    #[inline]
    pub fn dh_dt(&self, x: f64, p: f64, t: f64) -> f64 {
        self.dkinetic_dt.eval(&[0.0, p, t, 0.0]) + self.dpotential_dt.eval(&[x, 0.0, t, 0.0])
    }
}
