//! Primal-dual interior-point iteration.
//!
//! Variables are the allowed cells `z`. With slack `s = 1 - A z` and
//! multipliers `lambda` (capacity rows) and `nu` (`z >= 0`), each Newton step
//! solves the condensed system
//!
//! ```text
//! (-H + A' diag(lambda/s) A + diag(nu/z)) dz = grad - A'(mu/s) + mu/z
//! ```
//!
//! and recovers the dual directions from the perturbed complementarity
//! conditions `lambda s = mu`, `nu z = mu`.

use nalgebra::{DMatrix, DVector};

use super::{FluidSolution, ObjectiveSpec, SolverConfig, StartPoint, Utility, KKT_TOL};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scenario::Scenario;

const SIGMA: f64 = 0.1;
const TO_BOUNDARY: f64 = 0.995;

/// Scalar concave curve `h` applied to each framework's linear form.
#[derive(Debug, Clone, Copy)]
enum Curve {
    Log,
    /// `y^(1-a) / (1-a)`, `a != 1`.
    Power(f64),
    Log1p,
    /// `((1+y)^(1-a) - 1) / (1-a)`, `a != 1`.
    ShiftedPower(f64),
}

impl Curve {
    fn value(self, y: f64) -> f64 {
        match self {
            Curve::Log => y.ln(),
            Curve::Power(a) => y.powf(1.0 - a) / (1.0 - a),
            Curve::Log1p => y.ln_1p(),
            Curve::ShiftedPower(a) => ((1.0 + y).powf(1.0 - a) - 1.0) / (1.0 - a),
        }
    }

    fn d1(self, y: f64) -> f64 {
        match self {
            Curve::Log => 1.0 / y,
            Curve::Power(a) => y.powf(-a),
            Curve::Log1p => 1.0 / (1.0 + y),
            Curve::ShiftedPower(a) => (1.0 + y).powf(-a),
        }
    }

    fn d2(self, y: f64) -> f64 {
        match self {
            Curve::Log => -1.0 / (y * y),
            Curve::Power(a) => -a * y.powf(-a - 1.0),
            Curve::Log1p => -1.0 / ((1.0 + y) * (1.0 + y)),
            Curve::ShiftedPower(a) => -a * (1.0 + y).powf(-a - 1.0),
        }
    }
}

struct Problem {
    nf: usize,
    ns: usize,
    nr: usize,
    /// Allowed `(n, i)` cells, in row-major order.
    cells: Vec<(usize, usize)>,
    /// Capacity rows `(i, r)` with at least one nonzero coefficient.
    rows: Vec<(usize, usize)>,
    a: DMatrix<f64>,
    /// Coefficient of each cell in its framework's linear form.
    w: Vec<f64>,
    phi: Vec<f64>,
    curve: Curve,
}

impl Problem {
    fn new(scenario: &Scenario, objective: &ObjectiveSpec) -> Self {
        let nf = scenario.num_frameworks();
        let ns = scenario.num_servers();
        let nr = scenario.num_resources();
        let cells: Vec<(usize, usize)> = (0..nf)
            .flat_map(|n| (0..ns).map(move |i| (n, i)))
            .filter(|&(n, i)| scenario.allowed(n, i))
            .collect();
        let coeff = |(n, i): (usize, usize), r: usize| scenario.demand(n)[r] / scenario.capacity(i)[r];
        let rows: Vec<(usize, usize)> = (0..ns)
            .flat_map(|i| (0..nr).map(move |r| (i, r)))
            .filter(|&(i, r)| cells.iter().any(|&c| c.1 == i && coeff(c, r) > 0.0))
            .collect();
        let a = DMatrix::from_fn(rows.len(), cells.len(), |k, c| {
            let (i, r) = rows[k];
            if cells[c].1 == i {
                coeff(cells[c], r)
            } else {
                0.0
            }
        });
        let phi: Vec<f64> = (0..nf).map(|n| scenario.priority(n)).collect();
        let (w, curve) = match objective {
            ObjectiveSpec::Proportional { a } => {
                let curve = if *a == 1.0 { Curve::Log } else { Curve::Power(*a) };
                (vec![1.0; cells.len()], curve)
            }
            ObjectiveSpec::MaxMin { utility, weights } => {
                let curve = match *utility {
                    Utility::Log1p | Utility::Alpha(1.0) => Curve::Log1p,
                    Utility::Alpha(a) => Curve::ShiftedPower(a),
                };
                (cells.iter().map(|&(n, i)| weights.get(n, i) / phi[n]).collect(), curve)
            }
            ObjectiveSpec::CriterionLog { weights } => (
                cells.iter().map(|&(n, i)| weights.get(n, i) / phi[n]).collect(),
                Curve::Log,
            ),
        };
        Self {
            nf,
            ns,
            nr,
            cells,
            rows,
            a,
            w,
            phi,
            curve,
        }
    }

    fn forms(&self, z: &DVector<f64>) -> Vec<f64> {
        let mut y = vec![0.0; self.nf];
        for (c, &(n, _)) in self.cells.iter().enumerate() {
            y[n] += self.w[c] * z[c];
        }
        y
    }

    fn objective(&self, z: &DVector<f64>) -> f64 {
        self.forms(z)
            .iter()
            .zip(&self.phi)
            .map(|(&y, &p)| p * self.curve.value(y))
            .sum()
    }

    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.cells.len(), |c, _| {
            let n = self.cells[c].0;
            self.phi[n] * self.curve.d1(y[n]) * self.w[c]
        })
    }

    /// Negated Hessian, positive semidefinite.
    fn neg_hessian(&self, y: &[f64]) -> DMatrix<f64> {
        let m = self.cells.len();
        DMatrix::from_fn(m, m, |c, e| {
            let n = self.cells[c].0;
            if self.cells[e].0 != n {
                return 0.0;
            }
            -self.phi[n] * self.curve.d2(y[n]) * self.w[c] * self.w[e]
        })
    }

    fn start(&self, start: StartPoint) -> DVector<f64> {
        let m = self.cells.len();
        let dir = match start {
            StartPoint::Uniform => DVector::from_element(m, 1.0),
            StartPoint::Random(seed) => {
                let mut rng = RngStream::new(seed);
                DVector::from_fn(m, |_, _| rng.uniform_in(0.05, 1.0))
            }
        };
        let load = &self.a * &dir;
        let peak = load.iter().copied().fold(0.0, f64::max);
        dir * (0.5 / peak)
    }
}

struct Residuals {
    stationarity: f64,
    complementarity: f64,
    primal: f64,
}

impl Residuals {
    fn max(&self) -> f64 {
        self.stationarity.max(self.complementarity).max(self.primal)
    }
}

struct Iterate {
    z: DVector<f64>,
    lambda: DVector<f64>,
    nu: DVector<f64>,
}

fn residuals(p: &Problem, it: &Iterate) -> Residuals {
    let y = p.forms(&it.z);
    let grad = p.gradient(&y);
    let s = slack(p, &it.z);
    let rd = grad - p.a.transpose() * &it.lambda + &it.nu;
    let comp_rows = it.lambda.iter().zip(s.iter()).map(|(l, s)| (l * s).abs());
    let comp_cells = it.nu.iter().zip(it.z.iter()).map(|(v, z)| (v * z).abs());
    Residuals {
        stationarity: rd.amax(),
        complementarity: comp_rows.chain(comp_cells).fold(0.0, f64::max),
        primal: s.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max),
    }
}

fn slack(p: &Problem, z: &DVector<f64>) -> DVector<f64> {
    DVector::from_element(p.rows.len(), 1.0) - &p.a * z
}

/// Largest step in `(0, 1]` keeping `v + t dv` positive, damped.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -TO_BOUNDARY * x / d)
        .fold(1.0, f64::min)
}

fn solve_linear(m: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    m.lu().solve(rhs)
}

pub(super) fn solve(scenario: &Scenario, objective: &ObjectiveSpec, config: &SolverConfig) -> Result<FluidSolution> {
    let p = Problem::new(scenario, objective);
    let mut it = Iterate {
        z: p.start(config.start),
        lambda: DVector::from_element(p.rows.len(), 1.0),
        nu: DVector::from_element(p.cells.len(), 1.0),
    };
    let mut best: Option<(f64, Iterate, usize)> = None;
    let mut iterations = 0;
    loop {
        let res = residuals(&p, &it).max();
        if best.as_ref().is_none_or(|(b, _, _)| res < *b) {
            let snapshot = Iterate {
                z: it.z.clone(),
                lambda: it.lambda.clone(),
                nu: it.nu.clone(),
            };
            best = Some((res, snapshot, iterations));
        }
        if res <= config.target_residual || iterations >= config.max_iterations {
            break;
        }
        iterations += 1;

        let y = p.forms(&it.z);
        let grad = p.gradient(&y);
        let s = slack(&p, &it.z);
        let pairs = (p.rows.len() + p.cells.len()) as f64;
        let mu = SIGMA * (it.lambda.dot(&s) + it.nu.dot(&it.z)) / pairs;

        let row_w = it.lambda.component_div(&s);
        let cell_w = it.nu.component_div(&it.z);
        let at = p.a.transpose();
        let m = p.neg_hessian(&y) + &at * DMatrix::from_diagonal(&row_w) * &p.a + DMatrix::from_diagonal(&cell_w);
        let mu_s = s.map(|v| mu / v);
        let mu_z = it.z.map(|v| mu / v);
        let rhs = &grad - &at * &mu_s + &mu_z;
        let Some(dz) = solve_linear(m, &rhs) else {
            break;
        };
        let a_dz = &p.a * &dz;
        let ds = -&a_dz;
        let dlambda = &mu_s - &it.lambda + row_w.component_mul(&a_dz);
        let dnu = &mu_z - &it.nu - cell_w.component_mul(&dz);

        let step = max_step(&it.z, &dz)
            .min(max_step(&s, &ds))
            .min(max_step(&it.lambda, &dlambda))
            .min(max_step(&it.nu, &dnu));
        it.z += step * dz;
        it.lambda += step * dlambda;
        it.nu += step * dnu;
    }

    let (best_res, it, at_iteration) = best.expect("at least one iterate");
    if best_res > KKT_TOL {
        return Err(Error::NonConvergence {
            iterations,
            best_residual: best_res,
        });
    }
    let res = residuals(&p, &it);
    let mut x_star = vec![0.0; p.nf * p.ns];
    let mut nu = vec![0.0; p.nf * p.ns];
    for (c, &(n, i)) in p.cells.iter().enumerate() {
        x_star[n * p.ns + i] = it.z[c];
        nu[n * p.ns + i] = it.nu[c];
    }
    let mut lambda = vec![0.0; p.ns * p.nr];
    for (k, &(i, r)) in p.rows.iter().enumerate() {
        lambda[i * p.nr + r] = it.lambda[k];
    }
    let totals = x_star.chunks(p.ns).map(|row| row.iter().sum()).collect();
    Ok(FluidSolution {
        frameworks: p.nf,
        servers: p.ns,
        resources: p.nr,
        x_star,
        totals,
        objective_value: p.objective(&it.z),
        lambda,
        nu,
        stationarity: res.stationarity,
        complementarity: res.complementarity,
        primal_infeasibility: res.primal,
        kkt_residual: res.max(),
        iterations: at_iteration,
    })
}
