//! Brute-force references for tiny instances: finite differences, a projected-gradient
//! QP and obstacle solver, a joint descent probe, and an exact solver for the decoupled
//! case. None of this shares code with the Newton solvers; only energy evaluation is
//! reused.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{unilateral_slope_from_gradient, Model};
use crate::error::{Error, Result};
use crate::evolution::{staggered_step, EvolutionConfig};
use crate::material::MaterialModel;
use crate::mesh::{build_structured_mesh, EdgeMarker, TriMesh};
use crate::tensor::SymTensor2;

/// Largest joint problem the descent probe accepts (free displacement dofs plus nodes).
pub const MAX_PROBE_DOFS: usize = 12;
/// Largest node count for exact active-set enumeration.
pub const MAX_ENUMERATION_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleVerdict {
    pub name: String,
    pub value: f64,
    pub oracle: f64,
    pub err: f64,
    pub tol: f64,
    pub pass: bool,
}

impl OracleVerdict {
    pub fn new(name: impl Into<String>, value: f64, oracle: f64, err: f64, tol: f64) -> Self {
        OracleVerdict {
            name: name.into(),
            value,
            oracle,
            err,
            tol,
            pass: err <= tol,
        }
    }
}

/// Central differences of `f` at `x`, one dof at a time.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + step;
            let fp = f(&y);
            y[i] = x[i] - step;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

/// `max|a − b| / max|b|` with a tiny floor.
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    num / (den + 1e-300)
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power iteration.
pub fn power_iteration(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * (i % 7) as f64);
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = a * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w) / v.dot(&v);
        v = w / norm;
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

#[derive(Debug, Clone, Copy)]
pub struct PgOptions {
    pub max_iter: usize,
    /// Stop when the projected-gradient step `‖x − P(x − ∇/L)‖∞ · L` is below this.
    pub tol: f64,
}

impl Default for PgOptions {
    fn default() -> Self {
        PgOptions {
            max_iter: 1_000_000,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PgResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub pg_norm: f64,
    pub converged: bool,
}

/// Projected gradient for `min φ(x)` subject to `x ≤ upper` (use `+∞` for free entries),
/// with step `1/L`; `L` doubles whenever the quadratic upper bound fails.
pub fn projected_gradient(
    value: impl Fn(&[f64]) -> f64,
    grad: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    upper: &[f64],
    lipschitz: f64,
    opts: PgOptions,
) -> PgResult {
    let mut l = lipschitz.max(1e-12);
    let mut x: Vec<f64> = x0.iter().zip(upper).map(|(a, b)| a.min(*b)).collect();
    let mut fx = value(&x);
    let mut pg_norm = f64::INFINITY;
    for it in 0..opts.max_iter {
        let g = grad(&x);
        loop {
            let next: Vec<f64> = x
                .iter()
                .zip(&g)
                .zip(upper)
                .map(|((xi, gi), ui)| (xi - gi / l).min(*ui))
                .collect();
            pg_norm = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) * l;
            if pg_norm <= opts.tol {
                return PgResult {
                    x,
                    value: fx,
                    iterations: it,
                    pg_norm,
                    converged: true,
                };
            }
            let fn_ = value(&next);
            let (mut lin, mut sq) = (0.0, 0.0);
            for ((a, b), gi) in next.iter().zip(&x).zip(&g) {
                lin += gi * (a - b);
                sq += (a - b) * (a - b);
            }
            if fn_ <= fx + lin + 0.5 * l * sq + 1e-15 * fx.abs().max(1.0) {
                x = next;
                fx = fn_;
                break;
            }
            l *= 2.0;
        }
    }
    PgResult {
        x,
        value: fx,
        iterations: opts.max_iter,
        pg_norm,
        converged: false,
    }
}

/// Dense Hessian of a gradient map by central differences.
pub fn fd_hessian(grad: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], step: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    let mut y = x.to_vec();
    for j in 0..n {
        y[j] = x[j] + step;
        let gp = grad(&y);
        y[j] = x[j] - step;
        let gm = grad(&y);
        y[j] = x[j];
        for i in 0..n {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    0.5 * (&h + h.transpose())
}

/// `sup{ gᵀψ : ψ ≥ 0, ψᵀMψ ≤ 1 }` via the QP `min ½wᵀMw − gᵀw, w ≥ 0`, solved by
/// projected gradient; the value is `sqrt(gᵀw*)`.
pub fn slope_qp(g: &[f64], m: &DMatrix<f64>) -> Result<f64> {
    let n = g.len();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::InvalidArgument("matrix and vector sizes differ".into()));
    }
    let scale = m.amax();
    if (m - m.transpose()).amax() > 1e-12 * scale || m.clone().cholesky().is_none() {
        return Err(Error::InvalidArgument("metric must be symmetric positive definite".into()));
    }
    // substitute v = −w so the bound reads v ≤ 0
    let value = |v: &[f64]| {
        let v = DVector::from_column_slice(v);
        0.5 * v.dot(&(m * &v)) + v.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    };
    let grad = |v: &[f64]| {
        let mv = m * DVector::from_column_slice(v);
        mv.iter().zip(g).map(|(a, b)| a + b).collect::<Vec<_>>()
    };
    let gnorm = g.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let opts = PgOptions {
        tol: 1e-10 * (1.0 + gnorm),
        ..Default::default()
    };
    let res = projected_gradient(value, grad, &vec![0.0; n], &vec![0.0; n], 1.05 * power_iteration(m), opts);
    let gw: f64 = -res.x.iter().zip(g).map(|(v, gi)| v * gi).sum::<f64>();
    Ok(gw.max(0.0).sqrt())
}

fn penalized_value(model: &Model, u: &[f64], z: &[f64], z_prev: &[f64], penalty: f64) -> f64 {
    let m = model.lumped();
    let pen: f64 = z
        .iter()
        .zip(z_prev)
        .zip(m)
        .map(|((a, b), w)| w * (a - b) * (a - b))
        .sum();
    model.total_energy(u, z).total + 0.5 * penalty * pen
}

fn penalized_grad_z(model: &Model, u: &[f64], z: &[f64], z_prev: &[f64], penalty: f64) -> Vec<f64> {
    let m = model.lumped();
    let mut g = model.grad_z(u, z);
    for i in 0..g.len() {
        g[i] += penalty * m[i] * (z[i] - z_prev[i]);
    }
    g
}

/// Long-run projected gradient on `min F(u,·) + (penalty/2)‖z − z_prev‖²` over `z ≤ z_prev`.
pub fn obstacle_oracle(
    model: &Model,
    u: &[f64],
    z_prev: &[f64],
    penalty: f64,
    opts: PgOptions,
) -> Result<PgResult> {
    model.check_sizes(u, z_prev)?;
    let value = |z: &[f64]| penalized_value(model, u, z, z_prev, penalty);
    let grad = |z: &[f64]| penalized_grad_z(model, u, z, z_prev, penalty);
    let l = power_iteration(&fd_hessian(grad, z_prev, 1e-4));
    let res = projected_gradient(value, grad, z_prev, z_prev, 1.05 * l, opts);
    Ok(res)
}

/// Oracle-side KKT residual of a phase-field step (independent of the solver code).
pub fn phase_kkt_residual(model: &Model, u: &[f64], z: &[f64], z_prev: &[f64], penalty: f64) -> f64 {
    let g = penalized_grad_z(model, u, z, z_prev, penalty);
    let mut r: f64 = 0.0;
    for i in 0..z.len() {
        if z[i] > z_prev[i] {
            return f64::INFINITY;
        }
        r = r.max(if z[i] == z_prev[i] { g[i].max(0.0) } else { g[i].abs() });
        r = r.max((-g[i]).max(0.0) * (z_prev[i] - z[i]));
    }
    r
}

/// Oracle-side free-dof equilibrium residual.
pub fn equilibrium_residual(model: &Model, u: &[f64], z: &[f64]) -> f64 {
    let mask = model.mesh.dirichlet_dof_mask();
    model
        .residual_u(u, z)
        .iter()
        .zip(&mask)
        .filter(|(_, &f)| !f)
        .map(|(r, _)| r.abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct ProbeOutcome {
    pub verdict: OracleVerdict,
    pub fixed_value: f64,
    pub best_probe_value: f64,
    pub equilibrium_residual: f64,
    pub kkt_residual: f64,
}

/// Descent probe of the joint penalized objective around a staggered fixed point `(u, z)`
/// at time `t`, with previous phase field `z_prev`. Passes when no probe improves the
/// objective by more than `1e-8(1 + |F|)` and both partial certificates hold.
#[allow(clippy::too_many_arguments)]
pub fn joint_descent_probe(
    model: &Model,
    config: &EvolutionConfig,
    t: f64,
    u: &[f64],
    z: &[f64],
    z_prev: &[f64],
    n_starts: usize,
    seed: u64,
) -> Result<ProbeOutcome> {
    model.check_sizes(u, z)?;
    let mask = model.mesh.dirichlet_dof_mask();
    let free: Vec<usize> = (0..mask.len()).filter(|&d| !mask[d]).collect();
    let nz = z.len();
    if free.len() + nz > MAX_PROBE_DOFS {
        return Err(Error::InvalidArgument(format!(
            "descent probe is limited to {MAX_PROBE_DOFS} dofs, instance has {}",
            free.len() + nz
        )));
    }
    let penalty = config.delta / config.tau();
    let g_t = config.load.at(t);
    let nf = free.len();
    let unpack = |x: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut uu = g_t.clone();
        for (k, &d) in free.iter().enumerate() {
            uu[d] = x[k];
        }
        (uu, x[nf..].to_vec())
    };
    let value = |x: &[f64]| {
        let (uu, zz) = unpack(x);
        penalized_value(model, &uu, &zz, z_prev, penalty)
    };
    let grad = |x: &[f64]| {
        let (uu, zz) = unpack(x);
        let r = model.residual_u(&uu, &zz);
        let mut g: Vec<f64> = free.iter().map(|&d| r[d]).collect();
        g.extend(penalized_grad_z(model, &uu, &zz, z_prev, penalty));
        g
    };
    let mut x0: Vec<f64> = free.iter().map(|&d| u[d]).collect();
    x0.extend_from_slice(z);
    let mut upper = vec![f64::INFINITY; nf];
    upper.extend_from_slice(z_prev);
    let l = 2.0 * power_iteration(&fd_hessian(grad, &x0, 1e-5));
    let fixed_value = value(&x0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..n_starts)
        .map(|_| {
            x0.iter()
                .zip(&upper)
                .map(|(x, ub)| (x + rng.random_range(-0.05..0.05)).min(*ub))
                .collect()
        })
        .collect();
    let best_probe_value = starts
        .par_iter()
        .map(|s| projected_gradient(value, grad, s, &upper, l, PgOptions::default()).value)
        .reduce(|| f64::INFINITY, f64::min);

    let energy = model.total_energy(u, z).total;
    let improvement = (fixed_value - best_probe_value).max(0.0) / (1.0 + energy.abs());
    let eq = equilibrium_residual(model, u, z);
    let kkt = phase_kkt_residual(model, u, z, z_prev, penalty);
    let mut verdict = OracleVerdict::new("joint_descent_probe", fixed_value, best_probe_value, improvement, 1e-8);
    verdict.pass &= eq <= config.tol.tol_u && kkt <= config.tol.tol_z;
    Ok(ProbeOutcome {
        verdict,
        fixed_value,
        best_probe_value,
        equilibrium_residual: eq,
        kkt_residual: kkt,
    })
}

/// Exact staggered fixed point when `h ≡ 1` and `f` is quadratic: the displacement
/// problem is linear and the phase-field problem a strictly convex QP, solved by
/// enumerating active sets.
pub fn decoupled_exact(
    model: &Model,
    g_t: &[f64],
    z_prev: &[f64],
    penalty: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    model.check_sizes(g_t, z_prev)?;
    let mat = &model.material;
    let samples: Vec<f64> = (0..=20).map(|i| -0.5 + 0.1 * i as f64).collect();
    if samples.iter().any(|&s| mat.h.value(s) != 1.0 || mat.h.d1(s) != 0.0) {
        return Err(Error::InvalidArgument("decoupled oracle needs h ≡ 1".into()));
    }
    let f2 = mat.f.d2(0.0);
    if samples.iter().any(|&s| (mat.f.d2(s) - f2).abs() > 1e-14) {
        return Err(Error::InvalidArgument("decoupled oracle needs a quadratic f".into()));
    }
    let n = z_prev.len();
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::InvalidArgument("too many nodes for active-set enumeration".into()));
    }

    // displacement: probe the (linear) residual column by column
    let mask = model.mesh.dirichlet_dof_mask();
    let free: Vec<usize> = (0..mask.len()).filter(|&d| !mask[d]).collect();
    let z1 = vec![1.0; n];
    let mut base = g_t.to_vec();
    for &d in &free {
        base[d] = 0.0;
    }
    let r0 = model.residual_u(&base, &z1);
    let nf = free.len();
    let mut a = DMatrix::zeros(nf, nf);
    for (j, &dj) in free.iter().enumerate() {
        let mut e = base.clone();
        e[dj] = 1.0;
        let r = model.residual_u(&e, &z1);
        for (i, &di) in free.iter().enumerate() {
            a[(i, j)] = r[di] - r0[di];
        }
    }
    let rhs = DVector::from_iterator(nf, free.iter().map(|&d| -r0[d]));
    let sol = a
        .cholesky()
        .ok_or_else(|| Error::Linear("decoupled displacement matrix is not SPD".into()))?
        .solve(&rhs);
    let mut u = base;
    for (k, &d) in free.iter().enumerate() {
        u[d] = sol[k];
    }

    // phase field: quadratic objective ½zᵀHz − bᵀz + const
    let zero = vec![0.0; n];
    let g0 = penalized_grad_z(model, &u, &zero, z_prev, penalty);
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = zero.clone();
        e[j] = 1.0;
        let gj = penalized_grad_z(model, &u, &e, z_prev, penalty);
        for i in 0..n {
            h[(i, j)] = gj[i] - g0[i];
        }
    }
    let h = 0.5 * (&h + h.transpose());
    let b: Vec<f64> = g0.iter().map(|x| -x).collect();
    let scale = 1e-11 * (1.0 + b.iter().map(|x| x.abs()).fold(0.0, f64::max));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for set in 0u32..(1u32 << n) {
        let active: Vec<bool> = (0..n).map(|i| set & (1 << i) != 0).collect();
        let fr: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        let mut z: Vec<f64> = z_prev.to_vec();
        if !fr.is_empty() {
            let hff = DMatrix::from_fn(fr.len(), fr.len(), |i, j| h[(fr[i], fr[j])]);
            let rhs = DVector::from_iterator(
                fr.len(),
                fr.iter().map(|&i| {
                    b[i] - (0..n).filter(|&j| active[j]).map(|j| h[(i, j)] * z_prev[j]).sum::<f64>()
                }),
            );
            let Some(ch) = hff.cholesky() else { continue };
            let zf = ch.solve(&rhs);
            for (k, &i) in fr.iter().enumerate() {
                z[i] = zf[k];
            }
        }
        if fr.iter().any(|&i| z[i] > z_prev[i] + scale) {
            continue;
        }
        let grad: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| h[(i, j)] * z[j]).sum::<f64>() - b[i])
            .collect();
        if (0..n).any(|i| active[i] && grad[i] > scale) {
            continue;
        }
        for i in 0..n {
            z[i] = z[i].min(z_prev[i]);
        }
        let val = penalized_value(model, &u, &z, z_prev, penalty);
        if best.as_ref().is_none_or(|(v, _)| val < *v) {
            best = Some((val, z));
        }
    }
    let (_, z) = best.ok_or_else(|| Error::Linear("no admissible active set found".into()))?;
    Ok((u, z))
}

/// Unit square with `n × n` cells, all boundary edges Dirichlet.
pub fn unit_square(n: usize) -> TriMesh {
    build_structured_mesh(n, n, 1.0, 1.0, |_, _| EdgeMarker::Dirichlet).expect("valid structured mesh")
}

/// Unit square with `n × n` cells and only the bottom edge Dirichlet.
pub fn clamped_bottom_square(n: usize) -> TriMesh {
    build_structured_mesh(n, n, 1.0, 1.0, |_, y| {
        if y < 1e-12 {
            EdgeMarker::Dirichlet
        } else {
            EdgeMarker::Free
        }
    })
    .expect("valid structured mesh")
}

fn random_state(model: &Model, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n = model.num_nodes();
    let u = (0..2 * n).map(|_| rng.random_range(-0.3..0.3)).collect();
    let z = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    (u, z)
}

fn random_tensor(rng: &mut ChaCha8Rng) -> SymTensor2 {
    SymTensor2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Gradient checks on the 2-, 8- and 50-triangle unit squares: worst relative error of
/// `grad_z` and `residual_u` over `states` random states per mesh.
pub fn gradient_checks(material: &MaterialModel, states: usize, seed: u64) -> Vec<OracleVerdict> {
    const STEP: f64 = 1e-6;
    const TOL: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for cells in [1usize, 2, 5] {
        let model = Model::new(unit_square(cells), material.clone());
        let tris = model.mesh.num_triangles();
        let (mut ez, mut eu) = (0.0f64, 0.0f64);
        for _ in 0..states {
            let (u, z) = random_state(&model, &mut rng);
            let fd = fd_gradient(|zz| model.total_energy(&u, zz).total, &z, STEP);
            ez = ez.max(max_rel_err(&model.grad_z(&u, &z), &fd));
            let fd = fd_gradient(|uu| model.total_energy(uu, &z).total, &u, STEP);
            eu = eu.max(max_rel_err(&model.residual_u(&u, &z), &fd));
        }
        out.push(OracleVerdict::new(format!("grad_z_fd_{tris}tri"), ez, 0.0, ez, TOL));
        out.push(OracleVerdict::new(format!("residual_u_fd_{tris}tri"), eu, 0.0, eu, TOL));
    }
    let (mut es, mut ed) = (0.0f64, 0.0f64);
    for _ in 0..states.max(20) * 5 {
        let z = rng.random_range(0.0..1.0);
        let e = random_tensor(&mut rng);
        let w = |zz: f64, ee: &SymTensor2| material.energy_density(zz, ee);
        let fd = (w(z + STEP, &e) - w(z - STEP, &e)) / (2.0 * STEP);
        ed = ed.max((material.dw_dz(z, &e) - fd).abs() / (fd.abs() + 1e-300).max(1e-8));
        let s = material.stress(z, &e);
        // ddot counts off-diagonals twice, so d/dε_xy picks up 2σ_xy
        let comps = [
            (SymTensor2::new(1.0, 0.0, 0.0), s.xx),
            (SymTensor2::new(0.0, 1.0, 0.0), s.yy),
            (SymTensor2::new(0.0, 0.0, 1.0), 2.0 * s.xy),
        ];
        let scale = s.norm().max(1e-8);
        for (dir, exact) in comps {
            let fd = (w(z, &(e + STEP * dir)) - w(z, &(e - STEP * dir))) / (2.0 * STEP);
            es = es.max((exact - fd).abs() / scale);
        }
    }
    out.push(OracleVerdict::new("dw_dz_fd", ed, 0.0, ed, TOL));
    out.push(OracleVerdict::new("stress_dw_fd", es, 0.0, es, TOL));
    out
}

/// Closed-form slope versus the QP oracle on random gradients with the lumped mass of the
/// 8-triangle square.
pub fn slope_checks(instances: usize, seed: u64) -> Result<Vec<OracleVerdict>> {
    const TOL: f64 = 1e-8;
    let mesh = unit_square(2);
    let mats = crate::fem::assemble_scalar_matrices(&mesh);
    let m = DMatrix::from_diagonal(&DVector::from_column_slice(&mats.lumped));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut zero_ok = true;
    for k in 0..instances {
        let mut g: Vec<f64> = (0..mats.lumped.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        if k % 10 == 0 {
            g.iter_mut().for_each(|x| *x = -x.abs());
        }
        let closed = unilateral_slope_from_gradient(&g, &mats.lumped).value;
        let qp = slope_qp(&g, &m)?;
        let all_nonpositive = g.iter().all(|x| *x <= 0.0);
        zero_ok &= (closed == 0.0) == all_nonpositive && (qp == 0.0) == all_nonpositive;
        if closed != qp {
            worst = worst.max((closed - qp).abs() / closed.abs().max(1e-300));
        }
    }
    let mut v = vec![OracleVerdict::new("slope_closed_form_vs_qp", worst, 0.0, worst, TOL)];
    v.push(OracleVerdict::new(
        "slope_zero_iff_no_positive_part",
        f64::from(u8::from(zero_ok)),
        1.0,
        f64::from(u8::from(!zero_ok)),
        0.0,
    ));
    Ok(v)
}

/// Probe and decoupled-case verdicts on the tiny instances.
pub fn fixed_point_checks(seed: u64) -> Result<Vec<OracleVerdict>> {
    let mut out = Vec::new();
    for (name, rate) in [("zero_load", 0.0), ("loaded", 0.6)] {
        let (model, cfg, z_prev) = probe_instance(rate)?;
        let n = model.num_nodes();
        let u_prev = vec![0.0; 2 * n];
        let (u, z, _) = staggered_step(&model, &u_prev, &z_prev, 1, &cfg)?;
        let probe = joint_descent_probe(&model, &cfg, cfg.time(1), &u, &z, &z_prev, 8, seed)?;
        let mut v = probe.verdict;
        v.name = format!("joint_probe_{name}");
        out.push(v);
    }
    let (model, cfg, z_prev) = decoupled_instance()?;
    let n = model.num_nodes();
    let (u, z, _) = staggered_step(&model, &vec![0.0; 2 * n], &z_prev, 1, &cfg)?;
    let (ue, ze) = decoupled_exact(&model, &cfg.load.at(cfg.time(1)), &z_prev, cfg.delta / cfg.tau())?;
    let du = max_abs_diff(&u, &ue);
    let dz = max_abs_diff(&z, &ze);
    out.push(OracleVerdict::new("decoupled_u_exact", du, 0.0, du, 1e-8));
    out.push(OracleVerdict::new("decoupled_z_exact", dz, 0.0, dz, 1e-8));
    Ok(out)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Two-triangle square clamped at the bottom, bottom edge stretched by `rate · t · x`;
/// 4 free displacement dofs plus 4 nodes. The previous phase field is mildly damaged.
pub fn probe_instance(rate: f64) -> Result<(Model, EvolutionConfig, Vec<f64>)> {
    let mesh = clamped_bottom_square(1);
    let model = Model::new(mesh, MaterialModel::standard(1.0, 1.5, 0.01)?);
    let profile: Vec<f64> = model.mesh.nodes().iter().flat_map(|p| [p[0], 0.0]).collect();
    let cfg = EvolutionConfig {
        horizon: 1.0,
        steps: 1,
        delta: 0.5,
        load: crate::evolution::BoundaryLoad { profile, rate },
        tol: Default::default(),
    };
    Ok((model, cfg, vec![1.0, 0.9, 0.8, 0.95]))
}

/// Eight-triangle square with `h ≡ 1`, fully clamped boundary driven by an affine field.
pub fn decoupled_instance() -> Result<(Model, EvolutionConfig, Vec<f64>)> {
    let mesh = unit_square(2);
    let model = Model::new(mesh, MaterialModel::decoupled(1.0, 2.0, 1.0)?);
    let profile: Vec<f64> = model
        .mesh
        .nodes()
        .iter()
        .flat_map(|p| [0.3 * p[0] + 0.2 * p[1], -0.1 * p[0] + 0.25 * p[1]])
        .collect();
    let n = model.num_nodes();
    let z_prev: Vec<f64> = (0..n).map(|i| if i == 4 { 0.2 } else { 0.6 + 0.04 * i as f64 }).collect();
    let cfg = EvolutionConfig {
        horizon: 1.0,
        steps: 4,
        delta: 0.3,
        load: crate::evolution::BoundaryLoad { profile, rate: 1.0 },
        tol: Default::default(),
    };
    Ok((model, cfg, z_prev))
}

/// Phase-field Newton solve versus the projected-gradient obstacle oracle, with the
/// degradable energy concentrated near one node of a coarse mesh.
pub fn obstacle_checks() -> Result<Vec<OracleVerdict>> {
    let mesh = unit_square(4);
    let model = Model::new(mesh, MaterialModel::standard(1.0, 1.0, 0.01)?);
    let n = model.num_nodes();
    let centre = 12;
    let mut u = vec![0.0; 2 * n];
    // a radial bump around the centre node produces tensile strain in its star only
    let c = model.mesh.nodes()[centre];
    for (i, p) in model.mesh.nodes().iter().enumerate() {
        let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
        if (dx * dx + dy * dy).sqrt() < 0.3 && i != centre {
            u[2 * i] = 0.4 * dx;
            u[2 * i + 1] = 0.4 * dy;
        }
    }
    let z_prev = vec![1.0; n];
    let mut out = Vec::new();
    for (name, penalty) in [("penalized", 2.0), ("unpenalized", 0.0)] {
        let (z, _) = crate::solvers::PhaseSolver::default().solve(&model, &u, &z_prev, penalty, &z_prev)?;
        let oracle = obstacle_oracle(&model, &u, &z_prev, penalty, PgOptions::default())?;
        let d = max_abs_diff(&z, &oracle.x);
        out.push(OracleVerdict::new(format!("phase_solve_vs_pg_{name}"), d, 0.0, d, 1e-8));
    }
    Ok(out)
}

/// Every oracle verdict, in a fixed order.
pub fn run_suite(seed: u64) -> Result<Vec<OracleVerdict>> {
    let mut out = Vec::new();
    out.extend(fd_self_tests());
    out.extend(gradient_checks(&MaterialModel::standard(1.0, 1.5, 0.01)?, 20, seed));
    out.extend(slope_checks(60, seed.wrapping_add(1))?);
    out.extend(obstacle_checks()?);
    out.extend(fixed_point_checks(seed.wrapping_add(2))?);
    Ok(out)
}

/// Finite differences and the QP on closed-form cases.
pub fn fd_self_tests() -> Vec<OracleVerdict> {
    let x = [0.3, -1.2, 2.5];
    let g = fd_gradient(|v| 0.5 * v.iter().map(|a| a * a).sum::<f64>(), &x, 1e-4);
    let e1 = max_abs_diff(&g, &x);
    let g = fd_gradient(|_| 3.0, &x, 1e-4);
    let e2 = g.iter().map(|a| a.abs()).fold(0.0, f64::max);
    let m = DMatrix::from_element(1, 1, 4.0);
    let s = slope_qp(&[2.0], &m).unwrap_or(f64::NAN);
    vec![
        OracleVerdict::new("fd_quadratic", e1, 0.0, e1, 1e-10),
        OracleVerdict::new("fd_constant", e2, 0.0, e2, 0.0),
        OracleVerdict::new("slope_qp_scalar", s, 1.0, (s - 1.0).abs(), 1e-9),
    ]
}

pub const VERDICT_HEADER: &str = "name,value,oracle,err,pass";

pub fn verdicts_to_csv(v: &[OracleVerdict]) -> String {
    let mut s = String::from(VERDICT_HEADER);
    s.push('\n');
    for x in v {
        s.push_str(&format!("{},{:.17e},{:.17e},{:.17e},{}\n", x.name, x.value, x.oracle, x.err, x.pass));
    }
    s
}
