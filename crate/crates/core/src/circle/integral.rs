use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::form::FormSystem;
use crate::region::BoxRegion;
use crate::weyl::{e, Kahan};

use super::series::rational_to_f64;

/// Target phase change across one inner cell.
const INNER_CELL_PHASE: f64 = PI / 32.0;
/// Target phase change across one outer cell.
const OUTER_CELL_PHASE: f64 = PI / 8.0;
/// Most nodes a single inner component may use.
const INNER_NODE_CAP: usize = 1 << 24;
/// Most `(outer node, inner node)` pairs one run may visit.
const WORK_CAP: f64 = 4e9;
/// Relative change between `T/2` and `T` that marks the trace as unconverged.
pub const CONVERGENCE_TOLERANCE: f64 = 0.2;

/// The singular integral over `[-T, T]^r`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularIntegralTruncation {
    pub t_max: f64,
    /// Inner midpoint nodes per dimension (largest over the factors).
    pub grid_resolution: usize,
    /// Outer midpoint nodes per dimension.
    pub outer_nodes: usize,
    pub value: f64,
    pub imaginary: f64,
    /// `(T, value)` at `T_max/4`, `T_max/2`, `T_max`.
    pub convergence_trace: Vec<(f64, f64)>,
    pub converged: bool,
    /// Worst phase change across a single inner or outer cell, in radians.
    pub max_cell_phase: f64,
    /// False when a budget cap forced cells wider than a phase change of `pi/4`.
    pub resolved: bool,
    /// Number of independent variable blocks the integrand factors into.
    pub factors: usize,
    /// For one form: whether it fails to change sign on the box.
    pub real_obstruction: Option<bool>,
}

/// One block of variables that no monomial connects to another block.
#[derive(Clone, Debug)]
struct Factor {
    multiplicity: u32,
    cell_volume: f64,
    /// `values[i][node]`: the block's part of form `i` at each midpoint node.
    values: Vec<Vec<f64>>,
}

/// The inner integral `γ -> ∫_B e(γ·f(x)) dx` by a composite midpoint rule on each
/// independent block of variables.
#[derive(Clone, Debug)]
pub struct InnerIntegral {
    r: usize,
    factors: Vec<Factor>,
    /// Volume of the sides whose variables occur in no monomial.
    free_volume: f64,
    nodes_per_dim: usize,
    max_cell_phase: f64,
    blocks: usize,
}

type LocalTerm = (usize, Vec<u32>, f64);

impl InnerIntegral {
    /// Lays out nodes fine enough for every `|γ_i| <= t_max`.
    pub fn new(sys: &FormSystem, region: &BoxRegion, t_max: f64, grid: usize) -> Result<InnerIntegral> {
        let n = sys.n_vars();
        if region.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: region.dim() });
        }
        let sides: Vec<(f64, f64)> =
            region.intervals().iter().map(|(lo, hi)| (rational_to_f64(lo), rational_to_f64(hi))).collect();
        let blocks = blocks(sys);
        let mut free_volume = 1.0;
        let mut distinct: BTreeMap<String, Factor> = BTreeMap::new();
        let mut nodes_per_dim = 0;
        let mut max_cell_phase = 0.0f64;
        let mut count = 0;
        for vars in blocks {
            let local = local_terms(sys, &vars);
            if local.is_empty() {
                free_volume *= vars.iter().map(|&v| sides[v].1 - sides[v].0).product::<f64>();
                continue;
            }
            count += 1;
            let local_sides: Vec<(f64, f64)> = vars.iter().map(|&v| sides[v]).collect();
            let key = format!("{local:?}|{local_sides:?}");
            if let Some(f) = distinct.get_mut(&key) {
                f.multiplicity += 1;
                continue;
            }
            let dim = vars.len();
            let reach = local_sides.iter().map(|(lo, hi)| lo.abs().max(hi.abs())).fold(0.0, f64::max);
            // Σ_j sup|∂f_i/∂x_j| · width_j, summed over the forms.
            let mut spread = 0.0;
            for (_, exps, c) in &local {
                let deg: u32 = exps.iter().sum();
                for (j, &ej) in exps.iter().enumerate() {
                    if ej > 0 {
                        let w = local_sides[j].1 - local_sides[j].0;
                        spread += c.abs() * ej as f64 * reach.powi(deg as i32 - 1) * w;
                    }
                }
            }
            let wanted = (2.0 * PI * t_max * spread / INNER_CELL_PHASE).ceil() as usize;
            let cap = (INNER_NODE_CAP as f64).powf(1.0 / dim as f64).floor() as usize;
            let per_dim = wanted.max(grid).min(cap.max(1));
            max_cell_phase = max_cell_phase.max(2.0 * PI * t_max * spread / per_dim as f64);
            nodes_per_dim = nodes_per_dim.max(per_dim);
            distinct.insert(key, build_factor(sys.r(), &local, &local_sides, per_dim));
        }
        Ok(InnerIntegral {
            r: sys.r(),
            factors: distinct.into_values().collect(),
            free_volume,
            nodes_per_dim,
            max_cell_phase,
            blocks: count,
        })
    }

    pub fn nodes_per_dim(&self) -> usize {
        self.nodes_per_dim
    }

    /// Midpoint nodes visited per call to [`InnerIntegral::value`].
    pub fn cost(&self) -> usize {
        self.factors.iter().map(|f| f.values.first().map_or(0, Vec::len)).sum()
    }

    pub fn value(&self, gamma: &[f64]) -> Complex64 {
        let mut total = Complex64::new(self.free_volume, 0.0);
        for f in &self.factors {
            let mut k = Kahan::default();
            let nodes = f.values[0].len();
            for node in 0..nodes {
                let phase: f64 = (0..self.r).map(|i| gamma[i] * f.values[i][node]).sum();
                k.add(e(phase));
            }
            total *= (k.value() * f.cell_volume).powu(f.multiplicity);
        }
        total
    }
}

/// Variable blocks: connected components of the graph joining variables that share
/// a monomial.
fn blocks(sys: &FormSystem) -> Vec<Vec<usize>> {
    let n = sys.n_vars();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for f in sys.forms() {
        for (mono, _) in f.terms() {
            let vars: Vec<usize> = mono.exponents().iter().enumerate().filter(|(_, &e)| e > 0).map(|(j, _)| j).collect();
            for w in vars.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        let root = find(&mut parent, v);
        groups.entry(root).or_default().push(v);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

fn local_terms(sys: &FormSystem, vars: &[usize]) -> Vec<LocalTerm> {
    let mut out = Vec::new();
    for (i, f) in sys.forms().iter().enumerate() {
        for (mono, c) in f.terms() {
            let exps = mono.exponents();
            if vars.iter().any(|&v| exps[v] > 0) {
                let local: Vec<u32> = vars.iter().map(|&v| exps[v]).collect();
                out.push((i, local, c.to_f64().unwrap_or(f64::INFINITY)));
            }
        }
    }
    out
}

fn build_factor(r: usize, local: &[LocalTerm], sides: &[(f64, f64)], per_dim: usize) -> Factor {
    let dim = sides.len();
    let widths: Vec<f64> = sides.iter().map(|(lo, hi)| (hi - lo) / per_dim as f64).collect();
    let axis: Vec<Vec<f64>> = sides
        .iter()
        .zip(&widths)
        .map(|((lo, _), w)| (0..per_dim).map(|k| lo + (k as f64 + 0.5) * w).collect())
        .collect();
    let total = per_dim.pow(dim as u32);
    let mut values = vec![vec![0.0; total]; r];
    let mut idx = vec![0usize; dim];
    for node in 0..total {
        for (i, exps, c) in local {
            let mut v = *c;
            for (j, &ej) in exps.iter().enumerate() {
                v *= axis[j][idx[j]].powi(ej as i32);
            }
            values[*i][node] += v;
        }
        for j in (0..dim).rev() {
            idx[j] += 1;
            if idx[j] < per_dim {
                break;
            }
            idx[j] = 0;
        }
    }
    Factor { multiplicity: 1, cell_volume: widths.iter().product(), values }
}

/// Whether a single form keeps one sign on a lattice of sample points of the box.
fn sign_obstruction(sys: &FormSystem, region: &BoxRegion) -> Option<bool> {
    if sys.r() != 1 {
        return None;
    }
    let n = sys.n_vars();
    let per_dim = ((1u64 << 20) as f64).powf(1.0 / n as f64).floor().clamp(2.0, 33.0) as usize;
    let sides: Vec<(f64, f64)> =
        region.intervals().iter().map(|(lo, hi)| (rational_to_f64(lo), rational_to_f64(hi))).collect();
    let terms: Vec<(Vec<u32>, f64)> =
        sys.forms()[0].terms().map(|(m, c)| (m.exponents().to_vec(), c.to_f64().unwrap_or(0.0))).collect();
    let mut idx = vec![0usize; n];
    let (mut pos, mut neg) = (false, false);
    loop {
        let x: Vec<f64> = (0..n)
            .map(|j| sides[j].0 + (sides[j].1 - sides[j].0) * idx[j] as f64 / (per_dim - 1) as f64)
            .collect();
        let v: f64 = terms
            .iter()
            .map(|(ex, c)| c * ex.iter().zip(&x).map(|(&e, xi)| xi.powi(e as i32)).product::<f64>())
            .sum();
        pos |= v > 0.0;
        neg |= v < 0.0;
        if pos && neg {
            return Some(false);
        }
        let mut j = 0;
        loop {
            if j == n {
                return Some(true);
            }
            idx[j] += 1;
            if idx[j] < per_dim {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// `∫_{[-T,T]^r} ∫_B e(γ·f(x)) dx dγ` with midpoint rules inside and out.
pub fn singular_integral(sys: &FormSystem, region: &BoxRegion, t_max: f64, grid: usize) -> Result<SingularIntegralTruncation> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("T_max must be positive, got {t_max}")));
    }
    if grid < 16 {
        return Err(Error::InvalidArgument(format!("grid must be at least 16, got {grid}")));
    }
    if sys.degree() < 2 {
        return Err(Error::InvalidArgument("singular integral needs degree >= 2".into()));
    }
    let r = sys.r();
    let inner = InnerIntegral::new(sys, region, t_max, grid)?;
    let reach = region.sup_abs();
    let reach = rational_to_f64(&reach);
    let f_max = sys
        .forms()
        .iter()
        .map(|f| f.l1_norm().to_f64().unwrap_or(f64::INFINITY) * reach.powi(sys.degree() as i32))
        .fold(0.0, f64::max);
    let wanted = (2.0 * t_max * 2.0 * PI * f_max / OUTER_CELL_PHASE).ceil() as usize;
    let mut m = round_up8(wanted.max(grid));
    let cost = inner.cost().max(1) as f64;
    while m > 16 && (m as f64).powi(r as i32) * cost > WORK_CAP {
        m = round_up8(m / 2);
    }
    let step = 2.0 * t_max / m as f64;
    let outer_phase = 2.0 * PI * step * f_max;
    let total = m.pow(r as u32);
    let samples: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut gamma = vec![0.0; r];
            for g in gamma.iter_mut() {
                *g = -t_max + ((idx % m) as f64 + 0.5) * step;
                idx /= m;
            }
            inner.value(&gamma)
        })
        .collect();
    let cell = step.powi(r as i32);
    let within = |idx: usize, frac: usize| {
        // Nodes inside [-T/frac, T/frac] per axis; m is a multiple of 8.
        let lo = m / 2 - m / (2 * frac);
        let hi = m / 2 + m / (2 * frac);
        let mut idx = idx;
        (0..r).all(|_| {
            let k = idx % m;
            idx /= m;
            k >= lo && k < hi
        })
    };
    let mut trace = Vec::new();
    let mut value = Complex64::new(0.0, 0.0);
    for frac in [4usize, 2, 1] {
        let mut k = Kahan::default();
        for (idx, s) in samples.iter().enumerate() {
            if within(idx, frac) {
                k.add(*s);
            }
        }
        value = k.value() * cell;
        trace.push((t_max / frac as f64, value.re));
    }
    if value.im.abs() > 1e-9 * value.re.abs().max(1.0) {
        return Err(Error::Precision(format!("singular integral has imaginary part {:e}", value.im)));
    }
    let (half, full) = (trace[1].1, trace[2].1);
    let scale = half.abs().max(full.abs());
    let converged = scale == 0.0 || (full - half).abs() <= CONVERGENCE_TOLERANCE * scale;
    let max_cell_phase = inner.max_cell_phase.max(outer_phase);
    Ok(SingularIntegralTruncation {
        t_max,
        grid_resolution: inner.nodes_per_dim(),
        outer_nodes: m,
        value: value.re,
        imaginary: value.im,
        convergence_trace: trace,
        converged,
        max_cell_phase,
        resolved: max_cell_phase <= PI / 4.0,
        factors: inner.blocks,
        real_obstruction: sign_obstruction(sys, region),
    })
}

fn round_up8(m: usize) -> usize {
    m.div_ceil(8) * 8
}
