//! The compositional problem
//!
//! ```text
//! minimize_{x in X}  f(E[g(x, ζ)])   subject to   q(E[h(x, ζ)]) <= 0
//! ```
//!
//! described by its sampling oracle, the inner maps with their Jacobians,
//! the outer maps with their gradients, and the feasible set.

use crate::distributions::ProductDistribution;
use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::linalg::Matrix;
use crate::rng::RngStream;

/// One realization of the random vector.
pub type Sample = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    /// Decision variable.
    pub n: usize,
    /// Output of the objective's inner map.
    pub m: usize,
    /// Output of the constraint's inner map.
    pub d: usize,
    /// Number of constraints.
    pub j: usize,
}

/// Jacobians use `[J]_{ij} = ∂g_j/∂x_i` (shape `n × m`); the outer
/// constraint Jacobian is `d × J`.
///
/// Implementations must be shareable read-only across parallel runs.
pub trait CompositionalProblem: Send + Sync {
    fn dims(&self) -> Dims;

    fn sample(&self, rng: &mut RngStream) -> Sample;

    fn inner_g(&self, x: &[f64], sample: &[f64]) -> Vec<f64>;
    fn inner_g_jacobian(&self, x: &[f64], sample: &[f64]) -> Matrix;

    fn inner_h(&self, x: &[f64], sample: &[f64]) -> Vec<f64>;
    fn inner_h_jacobian(&self, x: &[f64], sample: &[f64]) -> Matrix;

    fn outer_f(&self, y: &[f64]) -> f64;
    fn outer_f_gradient(&self, y: &[f64]) -> Vec<f64>;

    fn outer_q(&self, z: &[f64]) -> Vec<f64>;
    fn outer_q_jacobian(&self, z: &[f64]) -> Matrix;

    fn feasible_set(&self) -> &FeasibleSet;

    fn name(&self) -> String {
        "problem".to_string()
    }

    /// `(E g(x, ζ), E h(x, ζ))` when the instance knows them in closed form.
    fn exact_expectations(&self, _x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    /// Distance from `(x, sample)` to the nearest non-differentiable point of
    /// the inner maps. Finite-difference checks skip points closer than the
    /// stencil width.
    fn inner_kink_distance(&self, _x: &[f64], _sample: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn outer_f_kink_distance(&self, _y: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn outer_q_kink_distance(&self, _z: &[f64]) -> f64 {
        f64::INFINITY
    }
}

/// Checks every declared shape at one point. Used by tests over random
/// draws and by the CLI `check` verb.
pub fn check_shapes<P: CompositionalProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    sample: &[f64],
    y: &[f64],
    z: &[f64],
) -> Result<()> {
    let Dims { n, m, d, j } = problem.dims();
    let expect = |expected: usize, actual: usize, context: &'static str| {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected,
                actual,
                context,
            })
        }
    };
    expect(n, problem.feasible_set().dim(), "feasible set")?;
    expect(m, problem.inner_g(x, sample).len(), "g output")?;
    expect(d, problem.inner_h(x, sample).len(), "h output")?;
    let jg = problem.inner_g_jacobian(x, sample);
    expect(n, jg.rows(), "g Jacobian rows")?;
    expect(m, jg.cols(), "g Jacobian cols")?;
    let jh = problem.inner_h_jacobian(x, sample);
    expect(n, jh.rows(), "h Jacobian rows")?;
    expect(d, jh.cols(), "h Jacobian cols")?;
    expect(m, problem.outer_f_gradient(y).len(), "f gradient")?;
    expect(j, problem.outer_q(z).len(), "q output")?;
    let jq = problem.outer_q_jacobian(z);
    expect(d, jq.rows(), "q Jacobian rows")?;
    expect(j, jq.cols(), "q Jacobian cols")?;
    Ok(())
}

type InnerFn = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
type InnerJac = Box<dyn Fn(&[f64], &[f64]) -> Matrix + Send + Sync>;
type OuterScalar = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type OuterVec = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type OuterJac = Box<dyn Fn(&[f64]) -> Matrix + Send + Sync>;

/// A problem assembled from closures, for toy instances and tests.
pub struct FnProblem {
    name: String,
    dims: Dims,
    set: FeasibleSet,
    sampler: ProductDistribution,
    g: InnerFn,
    g_jac: InnerJac,
    f: OuterScalar,
    f_grad: OuterVec,
    h: InnerFn,
    h_jac: InnerJac,
    q: OuterVec,
    q_jac: OuterJac,
}

impl FnProblem {
    /// Unconstrained problem (`d = J = 0`).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        m: usize,
        set: FeasibleSet,
        sampler: ProductDistribution,
        g: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        g_jac: impl Fn(&[f64], &[f64]) -> Matrix + Send + Sync + 'static,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        f_grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        let n = set.dim();
        Self {
            name: name.into(),
            dims: Dims { n, m, d: 0, j: 0 },
            set,
            sampler,
            g: Box::new(g),
            g_jac: Box::new(g_jac),
            f: Box::new(f),
            f_grad: Box::new(f_grad),
            h: Box::new(|_, _| Vec::new()),
            h_jac: Box::new(move |_, _| Matrix::zeros(n, 0)),
            q: Box::new(|_| Vec::new()),
            q_jac: Box::new(|_| Matrix::zeros(0, 0)),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_constraint(
        mut self,
        d: usize,
        j: usize,
        h: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        h_jac: impl Fn(&[f64], &[f64]) -> Matrix + Send + Sync + 'static,
        q: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        q_jac: impl Fn(&[f64]) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        self.dims.d = d;
        self.dims.j = j;
        self.h = Box::new(h);
        self.h_jac = Box::new(h_jac);
        self.q = Box::new(q);
        self.q_jac = Box::new(q_jac);
        self
    }
}

impl CompositionalProblem for FnProblem {
    fn dims(&self) -> Dims {
        self.dims
    }
    fn sample(&self, rng: &mut RngStream) -> Sample {
        self.sampler.draw(rng)
    }
    fn inner_g(&self, x: &[f64], s: &[f64]) -> Vec<f64> {
        (self.g)(x, s)
    }
    fn inner_g_jacobian(&self, x: &[f64], s: &[f64]) -> Matrix {
        (self.g_jac)(x, s)
    }
    fn inner_h(&self, x: &[f64], s: &[f64]) -> Vec<f64> {
        (self.h)(x, s)
    }
    fn inner_h_jacobian(&self, x: &[f64], s: &[f64]) -> Matrix {
        (self.h_jac)(x, s)
    }
    fn outer_f(&self, y: &[f64]) -> f64 {
        (self.f)(y)
    }
    fn outer_f_gradient(&self, y: &[f64]) -> Vec<f64> {
        (self.f_grad)(y)
    }
    fn outer_q(&self, z: &[f64]) -> Vec<f64> {
        (self.q)(z)
    }
    fn outer_q_jacobian(&self, z: &[f64]) -> Matrix {
        (self.q_jac)(z)
    }
    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}
