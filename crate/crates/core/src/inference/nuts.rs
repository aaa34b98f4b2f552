//! No-U-turn Hamiltonian sampler with multinomial trajectory sampling, a
//! dense metric and dual-averaging step-size adaptation.
//!
//! Gradients are central finite differences of the log density, which is
//! cheap for these 1 to 4 parameter models.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng::Rng;

const MAX_DELTA_H: f64 = 1000.0;
const GRAD_REL_STEP: f64 = 1e-5;
const DA_GAMMA: f64 = 0.05;
const DA_T0: f64 = 10.0;
const DA_KAPPA: f64 = 0.75;

#[derive(Debug, Clone, Copy)]
pub(crate) struct NutsSettings {
    pub iterations: usize,
    pub warmup: usize,
    pub delta: f64,
    pub max_depth: usize,
}

pub(crate) struct NutsOutput {
    /// Post-warmup positions, flattened.
    pub draws: Vec<f64>,
    pub mean_accept: f64,
    pub divergences: usize,
}

#[derive(Clone)]
struct State {
    q: Vec<f64>,
    p: Vec<f64>,
    grad: Vec<f64>,
    log_p: f64,
}

struct Metric {
    /// Inverse mass matrix (posterior covariance estimate).
    inv: DMatrix<f64>,
    /// Lower Cholesky factor of `inv`.
    chol: DMatrix<f64>,
}

impl Metric {
    fn identity(dim: usize) -> Self {
        Self { inv: DMatrix::identity(dim, dim), chol: DMatrix::identity(dim, dim) }
    }

    fn from_covariance(cov: DMatrix<f64>) -> Option<Self> {
        let chol = cov.clone().cholesky()?.l();
        if chol.iter().all(|v| v.is_finite()) {
            Some(Self { inv: cov, chol })
        } else {
            None
        }
    }

    fn sharp(&self, p: &[f64]) -> Vec<f64> {
        (&self.inv * DVector::from_column_slice(p)).as_slice().to_vec()
    }

    fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * dot(p, &self.sharp(p))
    }

    /// `p ~ N(0, inv⁻¹)` as `L⁻ᵀ z`.
    fn sample_momentum(&self, rng: &mut Rng) -> Vec<f64> {
        let z = DVector::from_iterator(self.inv.nrows(), (0..self.inv.nrows()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let p = self.chol.transpose().solve_upper_triangular(&z).expect("positive-definite metric");
        p.as_slice().to_vec()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

struct Hamiltonian<'a> {
    log_density: &'a dyn Fn(&[f64]) -> f64,
    metric: Metric,
}

impl Hamiltonian<'_> {
    fn evaluate(&self, q: Vec<f64>, p: Vec<f64>) -> State {
        let log_p = (self.log_density)(&q);
        let mut grad = vec![f64::NAN; q.len()];
        if log_p.is_finite() {
            let mut x = q.clone();
            for j in 0..q.len() {
                let h = GRAD_REL_STEP * q[j].abs().max(1.0);
                x[j] = q[j] + h;
                let up = (self.log_density)(&x);
                x[j] = q[j] - h;
                let dn = (self.log_density)(&x);
                x[j] = q[j];
                grad[j] = (up - dn) / (2.0 * h);
            }
        }
        State { q, p, grad, log_p }
    }

    fn energy(&self, s: &State) -> f64 {
        let h = -s.log_p + self.metric.kinetic(&s.p);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    fn leapfrog(&self, s: &State, eps: f64) -> State {
        let dim = s.q.len();
        let mut p: Vec<f64> = (0..dim).map(|j| s.p[j] + 0.5 * eps * s.grad[j]).collect();
        let v = self.metric.sharp(&p);
        let q: Vec<f64> = (0..dim).map(|j| s.q[j] + eps * v[j]).collect();
        let mut next = self.evaluate(q, vec![0.0; dim]);
        for j in 0..dim {
            p[j] += 0.5 * eps * next.grad[j];
        }
        next.p = p;
        next
    }
}

fn no_u_turn(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Edge summary of a subtree.
struct Subtree {
    valid: bool,
    propose: State,
    log_sum_weight: f64,
    rho: Vec<f64>,
    p_beg: Vec<f64>,
    p_end: Vec<f64>,
    p_sharp_beg: Vec<f64>,
    p_sharp_end: Vec<f64>,
}

struct Tree<'a, 'b> {
    ham: &'a Hamiltonian<'b>,
    eps: f64,
    h0: f64,
    n_leapfrog: usize,
    sum_metro_prob: f64,
    divergent: bool,
}

impl Tree<'_, '_> {
    /// Extend from `z` by `2^depth` steps in direction `sign`; `z` is left at the new edge.
    fn build(&mut self, depth: usize, z: &mut State, sign: f64, rng: &mut Rng) -> Subtree {
        if depth == 0 {
            let next = self.ham.leapfrog(z, sign * self.eps);
            *z = next;
            self.n_leapfrog += 1;
            let h = self.ham.energy(z);
            let valid = h - self.h0 <= MAX_DELTA_H;
            if !valid {
                self.divergent = true;
            }
            let w = self.h0 - h;
            self.sum_metro_prob += if w > 0.0 { 1.0 } else { w.exp() };
            let ps = self.ham.metric.sharp(&z.p);
            return Subtree {
                valid,
                propose: z.clone(),
                log_sum_weight: w,
                rho: z.p.clone(),
                p_beg: z.p.clone(),
                p_end: z.p.clone(),
                p_sharp_beg: ps.clone(),
                p_sharp_end: ps,
            };
        }
        let init = self.build(depth - 1, z, sign, rng);
        if !init.valid {
            return init;
        }
        let fin = self.build(depth - 1, z, sign, rng);
        if !fin.valid {
            return Subtree { valid: false, ..fin };
        }
        let log_sum_weight = log_sum_exp2(init.log_sum_weight, fin.log_sum_weight);
        let take_final = fin.log_sum_weight > log_sum_weight || rng.random::<f64>() < (fin.log_sum_weight - log_sum_weight).exp();
        let rho = add(&init.rho, &fin.rho);
        let mut persist = no_u_turn(&init.p_sharp_beg, &fin.p_sharp_end, &rho);
        persist &= no_u_turn(&init.p_sharp_beg, &fin.p_sharp_beg, &add(&init.rho, &fin.p_beg));
        persist &= no_u_turn(&init.p_sharp_end, &fin.p_sharp_end, &add(&fin.rho, &init.p_end));
        Subtree {
            valid: persist,
            propose: if take_final { fin.propose } else { init.propose },
            log_sum_weight,
            rho,
            p_beg: init.p_beg,
            p_end: fin.p_end,
            p_sharp_beg: init.p_sharp_beg,
            p_sharp_end: fin.p_sharp_end,
        }
    }
}

/// One NUTS transition from `current`; returns the new state, the
/// acceptance statistic and whether the trajectory diverged.
fn transition(ham: &Hamiltonian, current: &State, eps: f64, max_depth: usize, rng: &mut Rng) -> (State, f64, bool) {
    let mut start = current.clone();
    start.p = ham.metric.sample_momentum(rng);
    let h0 = ham.energy(&start);
    let ps = ham.metric.sharp(&start.p);

    // `x_fwd_bck` is at the backward end of the forward part, and so on.
    let mut z_fwd = start.clone();
    let mut z_bck = start.clone();
    let mut p_fwd_fwd = start.p.clone();
    let mut p_fwd_bck = start.p.clone();
    let mut p_bck_fwd = start.p.clone();
    let mut p_bck_bck = start.p.clone();
    let mut ps_fwd_fwd = ps.clone();
    let mut ps_fwd_bck = ps.clone();
    let mut ps_bck_fwd = ps.clone();
    let mut ps_bck_bck = ps;
    let mut rho = start.p.clone();
    let mut log_sum_weight = 0.0;
    let mut sample = start.clone();
    let mut tree = Tree { ham, eps, h0, n_leapfrog: 0, sum_metro_prob: 0.0, divergent: false };

    for depth in 0..max_depth {
        let (rho_fwd, rho_bck, sub);
        if rng.random::<f64>() > 0.5 {
            rho_bck = rho.clone();
            p_bck_fwd = p_fwd_bck.clone();
            ps_bck_fwd = ps_fwd_bck.clone();
            let t = tree.build(depth, &mut z_fwd, 1.0, rng);
            ps_fwd_bck = t.p_sharp_beg.clone();
            ps_fwd_fwd = t.p_sharp_end.clone();
            p_fwd_bck = t.p_beg.clone();
            p_fwd_fwd = t.p_end.clone();
            rho_fwd = t.rho.clone();
            sub = t;
        } else {
            rho_fwd = rho.clone();
            p_fwd_bck = p_bck_fwd.clone();
            ps_fwd_bck = ps_bck_fwd.clone();
            let t = tree.build(depth, &mut z_bck, -1.0, rng);
            ps_bck_fwd = t.p_sharp_beg.clone();
            ps_bck_bck = t.p_sharp_end.clone();
            p_bck_fwd = t.p_beg.clone();
            p_bck_bck = t.p_end.clone();
            rho_bck = t.rho.clone();
            sub = t;
        }
        if !sub.valid {
            break;
        }
        if sub.log_sum_weight > log_sum_weight || rng.random::<f64>() < (sub.log_sum_weight - log_sum_weight).exp() {
            sample = sub.propose;
        }
        log_sum_weight = log_sum_exp2(log_sum_weight, sub.log_sum_weight);
        rho = add(&rho_bck, &rho_fwd);
        let mut persist = no_u_turn(&ps_bck_bck, &ps_fwd_fwd, &rho);
        persist &= no_u_turn(&ps_bck_bck, &ps_fwd_bck, &add(&rho_bck, &p_fwd_bck));
        persist &= no_u_turn(&ps_bck_fwd, &ps_fwd_fwd, &add(&rho_fwd, &p_bck_fwd));
        if !persist {
            break;
        }
    }
    let _ = (&p_fwd_fwd, &p_bck_bck);
    let accept = if tree.n_leapfrog > 0 { tree.sum_metro_prob / tree.n_leapfrog as f64 } else { 0.0 };
    (sample, accept, tree.divergent)
}

/// Double or halve `eps` until a single leapfrog step crosses 80% acceptance.
fn initial_step_size(ham: &Hamiltonian, current: &State, mut eps: f64, rng: &mut Rng) -> f64 {
    let threshold = 0.8f64.ln();
    let mut delta_h = || {
        let mut z = current.clone();
        z.p = ham.metric.sample_momentum(rng);
        let h0 = ham.energy(&z);
        let next = ham.leapfrog(&z, eps);
        h0 - ham.energy(&next)
    };
    let direction = if delta_h() > threshold { 1.0 } else { -1.0 };
    for _ in 0..100 {
        let mut z = current.clone();
        z.p = ham.metric.sample_momentum(rng);
        let h0 = ham.energy(&z);
        let d = h0 - ham.energy(&ham.leapfrog(&z, eps));
        if (direction > 0.0 && !(d > threshold)) || (direction < 0.0 && !(d < threshold)) {
            break;
        }
        eps *= if direction > 0.0 { 2.0 } else { 0.5 };
        if !(1e-12..=1e7).contains(&eps) {
            break;
        }
    }
    eps.clamp(1e-12, 1e7)
}

struct DualAveraging {
    mu: f64,
    delta: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
}

impl DualAveraging {
    fn new(eps: f64, delta: f64) -> Self {
        Self { mu: (10.0 * eps).ln(), delta, counter: 0.0, s_bar: 0.0, x_bar: 0.0 }
    }

    fn learn(&mut self, accept: f64) -> f64 {
        self.counter += 1.0;
        let a = accept.min(1.0);
        let eta = 1.0 / (self.counter + DA_T0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.delta - a);
        let x = self.mu - self.s_bar * self.counter.sqrt() / DA_GAMMA;
        let x_eta = self.counter.powf(-DA_KAPPA);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    fn final_step(&self) -> f64 {
        self.x_bar.exp()
    }
}

fn window_covariance(draws: &[f64], dim: usize) -> DMatrix<f64> {
    let n = (draws.len() / dim) as f64;
    let mut mean = DVector::<f64>::zeros(dim);
    for d in draws.chunks_exact(dim) {
        mean += DVector::from_column_slice(d) / n;
    }
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for d in draws.chunks_exact(dim) {
        let c = DVector::from_column_slice(d) - &mean;
        cov += &c * c.transpose();
    }
    cov /= (n - 1.0).max(1.0);
    cov * (n / (n + 5.0)) + DMatrix::identity(dim, dim) * (1e-3 * 5.0 / (n + 5.0))
}

/// Run one chain from `init`. `window_ends` are the slow-window end points,
/// the first window starting at `first_window_start`.
pub(crate) fn nuts_chain(
    log_density: &dyn Fn(&[f64]) -> f64,
    init: Vec<f64>,
    first_window_start: usize,
    window_ends: &[usize],
    settings: NutsSettings,
    rng: &mut Rng,
) -> Option<NutsOutput> {
    let dim = init.len();
    let mut ham = Hamiltonian { log_density, metric: Metric::identity(dim) };
    let mut state = ham.evaluate(init, vec![0.0; dim]);
    if !state.log_p.is_finite() || state.grad.iter().any(|g| !g.is_finite()) {
        return None;
    }
    let mut eps = initial_step_size(&ham, &state, 1.0, rng);
    let mut da = DualAveraging::new(eps, settings.delta);
    let mut next_window = 0;
    let mut window_start = first_window_start;
    let mut window_draws = Vec::new();

    let kept = settings.iterations - settings.warmup;
    let mut out = NutsOutput { draws: Vec::with_capacity(kept * dim), mean_accept: 0.0, divergences: 0 };
    for it in 0..settings.iterations {
        let (next, accept, divergent) = transition(&ham, &state, eps, settings.max_depth, rng);
        state = next;
        if it < settings.warmup {
            eps = da.learn(accept);
            if it >= window_start && next_window < window_ends.len() {
                window_draws.extend_from_slice(&state.q);
            }
            if next_window < window_ends.len() && it + 1 == window_ends[next_window] {
                if let Some(m) = Metric::from_covariance(window_covariance(&window_draws, dim)) {
                    ham.metric = m;
                }
                eps = initial_step_size(&ham, &state, eps, rng);
                da = DualAveraging::new(eps, settings.delta);
                window_draws.clear();
                window_start = it + 1;
                next_window += 1;
            }
            if it + 1 == settings.warmup {
                eps = da.final_step();
            }
        } else {
            out.draws.extend_from_slice(&state.q);
            out.mean_accept += accept / kept as f64;
            if divergent {
                out.divergences += 1;
            }
        }
    }
    Some(out)
}
