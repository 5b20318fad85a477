//! Zeitlin flow `W' = -(1/hbar) [P, W]`, `Delta_n P = W`, integrated by the
//! isospectral midpoint scheme
//!
//! ```text
//! A  = (h/2) B(Wt),  B(Wt) = -(1/hbar) Delta_n^{-1} Wt
//! W  = Wt - [A, Wt] - A Wt A
//! W' = Wt + [A, Wt] - A Wt A
//! ```
//!
//! which conjugates `W` by the Cayley unitary `(I + A)(I - A)^{-1}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::algebra::element::{commutator, dot, norm};
use crate::algebra::{sorted_spectrum, AlgebraElement, CMatrix, RealBasis, SpinBasis, C64};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::random::unit_su;
use crate::stability::{certify, CertifyOptions, StabilityCertificate};
use crate::steady::SteadyState;

/// `-(1/hbar) [Delta_n^{-1} W, W]`.
pub fn vector_field(basis: &SpinBasis, w: &AlgebraElement) -> Result<AlgebraElement> {
    let p = basis.poisson_solve(w)?;
    let f = commutator(&p, w) * C64::new(-1.0 / basis.hbar(), 0.0);
    Ok(AlgebraElement::from_raw(f))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsompOptions {
    /// Inner residual target relative to `||W||`.
    pub inner_tol: f64,
    /// Total inner iterations (fixed point plus Newton).
    pub max_inner: usize,
    /// Fixed-point iterations before switching to Newton.
    pub fixed_point_iters: usize,
}

impl Default for IsompOptions {
    fn default() -> Self {
        Self {
            inner_tol: 1e-13,
            max_inner: 60,
            fixed_point_iters: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub fixed_point_iterations: usize,
    pub newton_iterations: usize,
    pub residual: f64,
}

fn cayley_a(basis: &SpinBasis, wt: &CMatrix, h: f64) -> CMatrix {
    basis.poisson_matrix(wt) * C64::new(-0.5 * h / basis.hbar(), 0.0)
}

/// `Wt - [A, Wt] - A Wt A` and `Wt + [A, Wt] - A Wt A`.
fn backward_forward(wt: &CMatrix, a: &CMatrix) -> (CMatrix, CMatrix) {
    let c = commutator(a, wt);
    let awa = a * wt * a;
    (wt - &c - &awa, wt + &c - &awa)
}

struct NewtonSystem {
    rb: RealBasis,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl NewtonSystem {
    /// Coordinates on u(n): the unit `i I` direction first, then the real
    /// orthonormal basis of su(n).
    fn coords(&self, x: &CMatrix) -> DVector<f64> {
        let n = x.nrows();
        let mut v = DVector::zeros(self.rb.len() + 1);
        v[0] = x.trace().im / n as f64;
        v.rows_mut(1, self.rb.len()).copy_from(&self.rb.coords(x));
        v
    }

    fn synthesize(&self, v: &DVector<f64>) -> CMatrix {
        let n = self.rb.n();
        let mut x = self.rb.synthesize(&v.as_slice()[1..]);
        for j in 0..n {
            x[(j, j)] += C64::new(0.0, v[0]);
        }
        x
    }

    fn build(basis: &SpinBasis, wt: &CMatrix, h: f64) -> Option<Self> {
        let rb = RealBasis::new(basis);
        let a = cayley_a(basis, wt, h);
        let dim = rb.len() + 1;
        let mut jac = DMatrix::zeros(dim, dim);
        let mut sys = Self {
            rb,
            lu: DMatrix::<f64>::identity(1, 1).lu(),
        };
        let wa = wt * &a;
        let aw = &a * wt;
        for k in 0..dim {
            let mut e = DVector::zeros(dim);
            e[k] = 1.0;
            let d = sys.synthesize(&e);
            let da = cayley_a(basis, &d, h);
            // dF = d - [dA, Wt] - [A, d] - dA Wt A - A d A - A Wt dA
            let col = &d - commutator(&da, wt) - commutator(&a, &d) - &da * &wa - &a * &d * &a
                - &aw * &da;
            jac.set_column(k, &sys.coords(&col));
        }
        let lu = jac.lu();
        if !lu.is_invertible() {
            return None;
        }
        sys.lu = lu;
        Some(sys)
    }
}

/// One isospectral midpoint step of size `h` (either sign).
pub fn isomp_step(
    basis: &SpinBasis,
    w: &CMatrix,
    h: f64,
    opts: &IsompOptions,
) -> Result<(CMatrix, StepStats)> {
    basis.check_same(w, w)?;
    // Round-off leaves a Hermitian residue that the u(n) Newton solve cannot remove.
    let w = &skew_part(w);
    let mut stats = StepStats::default();
    if h == 0.0 {
        return Ok((w.clone(), stats));
    }
    let target = opts.inner_tol * norm(w).max(f64::MIN_POSITIVE);

    let mut wt = w.clone();
    let mut a = cayley_a(basis, &wt, h);
    let mut res = f64::INFINITY;
    // Best fixed-point iterate; the iteration is abandoned once it stops contracting.
    let mut best = (f64::INFINITY, wt.clone());
    let fp_budget = opts.fixed_point_iters.min(opts.max_inner);
    while stats.fixed_point_iterations < fp_budget {
        stats.fixed_point_iterations += 1;
        let (back, _) = backward_forward(&wt, &a);
        let next = &wt + w - back;
        res = norm(&(&next - &wt));
        if res < best.0 {
            best = (res, wt.clone());
        } else if stats.fixed_point_iterations > 2 {
            break;
        }
        wt = next;
        a = cayley_a(basis, &wt, h);
        if res <= target {
            break;
        }
    }

    if res > target {
        wt = best.1;
        a = cayley_a(basis, &wt, h);
        let mut sys: Option<NewtonSystem> = None;
        let mut prev = f64::INFINITY;
        while stats.fixed_point_iterations + stats.newton_iterations < opts.max_inner {
            let (back, _) = backward_forward(&wt, &a);
            let f = back - w;
            res = norm(&f);
            if res <= target {
                break;
            }
            // Refresh the Jacobian whenever the frozen one contracts slowly.
            if sys.is_none() || res > 0.1 * prev {
                sys = NewtonSystem::build(basis, &wt, h);
            }
            prev = res;
            let Some(s) = sys.as_ref() else { break };
            stats.newton_iterations += 1;
            let mut rhs = -s.coords(&f);
            if !s.lu.solve_mut(&mut rhs) {
                break;
            }
            wt += s.synthesize(&rhs);
            a = cayley_a(basis, &wt, h);
        }
        let (back, _) = backward_forward(&wt, &a);
        res = norm(&(back - w));
        if !(res <= target) {
            return Err(Error::InnerNonConvergence {
                iterations: stats.fixed_point_iterations + stats.newton_iterations,
                residual: res / norm(w).max(f64::MIN_POSITIVE),
            });
        }
    }
    stats.residual = res / norm(w).max(f64::MIN_POSITIVE);
    let (_, forward) = backward_forward(&wt, &a);
    Ok((skew_part(&forward), stats))
}

fn skew_part(x: &CMatrix) -> CMatrix {
    (x - x.adjoint()) * C64::new(0.5, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorConfig {
    /// Highest Casimir order recorded (`C2 .. Ck`).
    pub casimir_max: u32,
    /// Keep every `snapshot_stride`-th state; 0 keeps none.
    pub snapshot_stride: usize,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            casimir_max: 5,
            snapshot_stride: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub t: f64,
    #[serde(rename = "H")]
    pub energy: f64,
    /// `C2 .. Ck`.
    pub casimirs: Vec<f64>,
    pub momentum: [f64; 3],
    /// Largest change of the sorted spectrum of `-iW` since `t = 0`.
    pub spec_drift: f64,
    pub dist: Option<f64>,
}

impl MonitorRow {
    pub fn csv_header(casimir_max: u32) -> String {
        let mut s = String::from("t,H");
        for k in 2..=casimir_max {
            s.push_str(&format!(",C{k}"));
        }
        s.push_str(",L1,L2,L3,spec_drift,dist");
        s
    }

    pub fn to_csv(&self) -> String {
        let mut fields = vec![fmt_f64(self.t), fmt_f64(self.energy)];
        fields.extend(self.casimirs.iter().map(|&c| fmt_f64(c)));
        fields.extend(self.momentum.iter().map(|&c| fmt_f64(c)));
        fields.push(fmt_f64(self.spec_drift));
        fields.push(self.dist.map_or("nan".into(), fmt_f64));
        fields.join(",")
    }

    pub fn from_csv(line: &str, casimir_max: u32) -> Result<Self> {
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Serialization(format!("bad CSV number: {e}")))?;
        let nc = casimir_max.saturating_sub(1) as usize;
        if vals.len() != 2 + nc + 5 {
            return Err(Error::Serialization(format!(
                "expected {} columns, got {}",
                7 + nc,
                vals.len()
            )));
        }
        let dist = vals[6 + nc];
        Ok(Self {
            t: vals[0],
            energy: vals[1],
            casimirs: vals[2..2 + nc].to_vec(),
            momentum: [vals[2 + nc], vals[3 + nc], vals[4 + nc]],
            spec_drift: vals[5 + nc],
            dist: (!dist.is_nan()).then_some(dist),
        })
    }
}

/// Parses monitor CSV text, skipping the header and `#` comment lines.
pub fn read_monitor_csv(text: &str, casimir_max: u32) -> Result<Vec<MonitorRow>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| MonitorRow::from_csv(l, casimir_max))
        .collect()
}

pub struct Monitor<'a> {
    basis: &'a SpinBasis,
    spec0: Vec<f64>,
    w_ref: Option<&'a CMatrix>,
    casimir_max: u32,
}

impl<'a> Monitor<'a> {
    pub fn new(basis: &'a SpinBasis, w0: &CMatrix, w_ref: Option<&'a CMatrix>, casimir_max: u32) -> Self {
        Self {
            basis,
            spec0: sorted_spectrum(w0),
            w_ref,
            casimir_max,
        }
    }

    pub fn row(&self, t: f64, w: &CMatrix) -> MonitorRow {
        let n = w.nrows() as f64;
        let spec = sorted_spectrum(w);
        let casimirs = (2..=self.casimir_max)
            .map(|k| spec.iter().map(|x| x.powi(k as i32)).sum::<f64>() / n)
            .collect();
        let spec_drift = spec
            .iter()
            .zip(&self.spec0)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        let p = self.basis.poisson_matrix(w);
        let m = self.basis.momentum(w).expect("dimension checked");
        MonitorRow {
            t,
            energy: 0.5 * dot(&p, w),
            casimirs,
            momentum: [m[0], m[1], m[2]],
            spec_drift,
            dist: self.w_ref.map(|r| norm(&(w - r))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub h: f64,
    pub casimir_max: u32,
    /// One row per time `k h`, `k = 0 ..= steps`.
    pub rows: Vec<MonitorRow>,
    /// `(step, W)` every `snapshot_stride` steps.
    pub snapshots: Vec<(usize, AlgebraElement)>,
    pub stats: Vec<StepStats>,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = MonitorRow::csv_header(self.casimir_max);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.to_csv());
            s.push('\n');
        }
        s
    }
}

/// `ceil(T / h)` with a relative guard against round-off in the ratio.
pub fn step_count(h: f64, t_final: f64) -> Result<usize> {
    if !(h > 0.0) || !(t_final >= h) || !t_final.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need h > 0 and T >= h (h = {h}, T = {t_final})"
        )));
    }
    Ok((t_final / h * (1.0 - 1e-12)).ceil() as usize)
}

/// Runs the integrator, calling `on_step(k, row, W)` for `k = 0 ..= steps`.
/// Failures are wrapped in [`Error::StepFailed`] with the failing step.
#[allow(clippy::too_many_arguments)]
pub fn evolve_streaming<F>(
    basis: &SpinBasis,
    w_init: &CMatrix,
    h: f64,
    t_final: f64,
    monitor: &MonitorConfig,
    opts: &IsompOptions,
    w_ref: Option<&CMatrix>,
    mut on_step: F,
) -> Result<usize>
where
    F: FnMut(usize, &MonitorRow, &CMatrix, Option<&StepStats>) -> Result<()>,
{
    basis.check_same(w_init, w_init)?;
    if let Some(r) = w_ref {
        basis.check_same(r, r)?;
    }
    let steps = step_count(h, t_final)?;
    let mon = Monitor::new(basis, w_init, w_ref, monitor.casimir_max);
    let mut w = w_init.clone();
    on_step(0, &mon.row(0.0, &w), &w, None)?;
    for k in 1..=steps {
        let (next, stats) = isomp_step(basis, &w, h, opts).map_err(|e| Error::StepFailed {
            step: k,
            source: Box::new(e),
        })?;
        w = next;
        on_step(k, &mon.row(k as f64 * h, &w), &w, Some(&stats))?;
    }
    Ok(steps)
}

pub fn evolve(
    basis: &SpinBasis,
    w_init: &CMatrix,
    h: f64,
    t_final: f64,
    monitor: &MonitorConfig,
    opts: &IsompOptions,
    w_ref: Option<&CMatrix>,
) -> Result<TrajectoryRecord> {
    let mut rec = TrajectoryRecord {
        h,
        casimir_max: monitor.casimir_max,
        rows: Vec::new(),
        snapshots: Vec::new(),
        stats: Vec::new(),
    };
    let stride = monitor.snapshot_stride;
    evolve_streaming(basis, w_init, h, t_final, monitor, opts, w_ref, |k, row, w, st| {
        rec.rows.push(row.clone());
        if let Some(s) = st {
            rec.stats.push(*s);
        }
        if stride > 0 && k % stride == 0 {
            rec.snapshots.push((k, AlgebraElement::project(w)));
        }
        Ok(())
    })?;
    Ok(rec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PerturbationMode {
    #[serde(alias = "orbit")]
    Orbit,
    #[serde(alias = "generic")]
    Generic,
}

/// `ORBIT`: `e^{eps X} W0 e^{-eps X}`; `GENERIC`: `W0 + eps X`, with `X` the
/// unit-norm sample of [`unit_su`] for `seed`.
pub fn perturbed_initial(w0: &CMatrix, epsilon: f64, mode: PerturbationMode, seed: u64) -> CMatrix {
    let x = unit_su(w0.nrows(), seed);
    match mode {
        PerturbationMode::Orbit => {
            let u = crate::algebra::expm_skew(&(x.as_matrix() * C64::new(epsilon, 0.0)));
            &u * w0 * u.adjoint()
        }
        PerturbationMode::Generic => w0 + x.as_matrix() * C64::new(epsilon, 0.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub epsilon: f64,
    pub mode: PerturbationMode,
    pub seed: u64,
    pub h: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub initial_deviation: f64,
    pub max_deviation: f64,
    /// `(t, ||W(t) - W0||)`.
    pub deviation_series: Vec<(f64, f64)>,
    pub certificate: Option<StabilityCertificate>,
}

#[allow(clippy::too_many_arguments)]
pub fn lyapunov_experiment(
    basis: &SpinBasis,
    state: &SteadyState,
    epsilon: f64,
    mode: PerturbationMode,
    seed: u64,
    h: f64,
    t_final: f64,
    opts: &IsompOptions,
    certify_opts: Option<&CertifyOptions>,
) -> Result<LyapunovReport> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be >= 0")));
    }
    let certificate = certify_opts
        .map(|c| certify(basis, &state.w0, &state.p0, c))
        .transpose()?;
    let w_init = perturbed_initial(&state.w0, epsilon, mode, seed);
    let mut series = Vec::new();
    let mon = MonitorConfig {
        casimir_max: 2,
        snapshot_stride: 0,
    };
    evolve_streaming(basis, &w_init, h, t_final, &mon, opts, Some(&state.w0), |_, row, _, _| {
        series.push((row.t, row.dist.unwrap_or(f64::NAN)));
        Ok(())
    })?;
    let max_deviation = series.iter().fold(0.0_f64, |a, &(_, d)| a.max(d));
    Ok(LyapunovReport {
        epsilon,
        mode,
        seed,
        h,
        t_final,
        initial_deviation: series[0].1,
        max_deviation,
        deviation_series: series,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::inner;
    use crate::random::{random_su, rng};
    use crate::steady::{eigen_state, zonal_coeffs, zonal_state};
    use crate::Tolerances;

    #[test]
    fn vector_field_vanishes_on_steady_states_and_zero() {
        let b = SpinBasis::new(6).unwrap();
        let s = eigen_state(&b, 2, &[0.2, 0.1, 1.0, -0.3, 0.4], &Tolerances::default()).unwrap();
        assert!(vector_field(&b, &s.w0).unwrap().norm() < 1e-10);
        assert_eq!(vector_field(&b, &AlgebraElement::zeros(6)).unwrap().norm(), 0.0);
    }

    #[test]
    fn energy_is_instantaneously_conserved() {
        let b = SpinBasis::new(7).unwrap();
        let w = random_su(7, &mut rng(1));
        let f = vector_field(&b, &w).unwrap();
        let p = b.poisson_solve(&w).unwrap();
        assert!(inner(&f, &p).unwrap().re.abs() < 1e-12);
    }

    #[test]
    fn steady_state_is_a_fixed_point() {
        let b = SpinBasis::new(8).unwrap();
        let s = zonal_state(&b, &crate::random::random_traceless(8, &mut rng(2)), &Tolerances::default())
            .unwrap();
        let (w1, _) = isomp_step(&b, &s.w0, 0.1, &IsompOptions::default()).unwrap();
        assert!(norm(&(w1 - s.w0.as_matrix())) <= 1e-13 * s.w0.norm());
    }

    #[test]
    fn step_is_isospectral_and_reversible() {
        let b = SpinBasis::new(10).unwrap();
        let w = random_su(10, &mut rng(3));
        let opts = IsompOptions::default();
        let (w1, st) = isomp_step(&b, &w, 0.1, &opts).unwrap();
        assert!(st.residual <= opts.inner_tol);
        let s0 = sorted_spectrum(&w);
        let s1 = sorted_spectrum(&w1);
        let drift = s0.iter().zip(&s1).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(drift <= 10.0 * opts.inner_tol * w.norm().max(1.0));
        let (w2, _) = isomp_step(&b, &w1, -0.1, &opts).unwrap();
        assert!(norm(&(w2 - w.as_matrix())) <= 10.0 * opts.inner_tol * w.norm().max(1.0));
    }

    #[test]
    fn newton_fallback_converges() {
        let b = SpinBasis::new(5).unwrap();
        let w = random_su(5, &mut rng(4)).scale(3.0);
        let opts = IsompOptions {
            fixed_point_iters: 2,
            ..Default::default()
        };
        let (w1, st) = isomp_step(&b, &w, 0.2, &opts).unwrap();
        assert!(st.newton_iterations > 0);
        let (w_ref, _) = isomp_step(&b, &w, 0.2, &IsompOptions { max_inner: 500, fixed_point_iters: 500, ..Default::default() }).unwrap();
        assert!(norm(&(w1 - w_ref)) < 1e-11 * w.norm());
    }

    #[test]
    fn inner_budget_failure_is_reported() {
        let b = SpinBasis::new(4).unwrap();
        let w = random_su(4, &mut rng(5));
        let opts = IsompOptions {
            max_inner: 1,
            fixed_point_iters: 1,
            ..Default::default()
        };
        let err = isomp_step(&b, &w, 0.5, &opts);
        assert!(matches!(err, Err(Error::InnerNonConvergence { .. })));
    }

    #[test]
    fn first_order_consistency() {
        let b = SpinBasis::new(6).unwrap();
        let w = random_su(6, &mut rng(6));
        let f = vector_field(&b, &w).unwrap();
        let err = |h: f64| {
            let (w1, _) = isomp_step(&b, &w, h, &IsompOptions::default()).unwrap();
            norm(&((w1 - w.as_matrix()) / C64::new(h, 0.0) - f.as_matrix()))
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!((e1 / e2).log2() >= 0.9);
    }

    #[test]
    fn csv_round_trip_and_header() {
        let b = SpinBasis::new(4).unwrap();
        let w = random_su(4, &mut rng(7));
        let rec = evolve(&b, &w, 0.1, 0.3, &MonitorConfig::default(), &IsompOptions::default(), Some(&w)).unwrap();
        assert_eq!(rec.rows.len(), 4);
        let csv = rec.to_csv();
        assert!(csv.starts_with("t,H,C2,C3,C4,C5,L1,L2,L3,spec_drift,dist\n"));
        assert_eq!(read_monitor_csv(&csv, 5).unwrap(), rec.rows);
        let text = serde_json::to_string(&rec).unwrap();
        assert_eq!(serde_json::from_str::<TrajectoryRecord>(&text).unwrap(), rec);
    }

    #[test]
    fn step_count_guards() {
        assert_eq!(step_count(0.05, 100.0).unwrap(), 2000);
        assert_eq!(step_count(0.1, 0.25).unwrap(), 3);
        assert!(step_count(0.0, 1.0).is_err());
        assert!(step_count(0.1, 0.01).is_err());
    }

    #[test]
    fn orbit_perturbation_keeps_casimirs() {
        let b = SpinBasis::new(6).unwrap();
        let s = eigen_state(&b, 1, &zonal_coeffs(1), &Tolerances::default()).unwrap();
        let w = perturbed_initial(&s.w0, 1e-2, PerturbationMode::Orbit, 3);
        for k in 2..=5 {
            let a = crate::algebra::casimir(&w, k).unwrap();
            let c = crate::algebra::casimir(&s.w0, k).unwrap();
            assert!((a - c).abs() < 1e-12);
        }
        let g = perturbed_initial(&s.w0, 1e-2, PerturbationMode::Generic, 3);
        assert!((norm(&(g - s.w0.as_matrix())) - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn zero_epsilon_stays_put() {
        let b = SpinBasis::new(5).unwrap();
        let s = eigen_state(&b, 1, &zonal_coeffs(1), &Tolerances::default()).unwrap();
        let r = lyapunov_experiment(&b, &s, 0.0, PerturbationMode::Orbit, 1, 0.1, 1.0, &IsompOptions::default(), None)
            .unwrap();
        assert!(r.max_deviation <= 100.0 * 1e-13 * 10.0);
        assert_eq!(r.deviation_series.len(), 11);
    }
}
