//! Cyclic quantum evolution around loops in parameter space.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HolonomyError, Result};
use crate::linalg::{eigh, ComplexMatrix, EigenSystem, State};

/// Default absolute spectral gap below which a level counts as degenerate.
pub const DEFAULT_GAP_TOL: f64 = 1e-8;

/// Default number of exponential sub-steps per loop segment.
pub const DEFAULT_STEPS_PER_SEGMENT: usize = 16;

/// Consecutive tracked eigenvectors must overlap at least this much.
pub const MIN_TRACK_OVERLAP: f64 = 0.1;

const HERMITICITY_PROBES: usize = 32;

type MatrixFn = dyn Fn(&[f64]) -> ComplexMatrix + Send + Sync;

/// A parameter-dependent Hamiltonian `R -> H(R)`.
#[derive(Clone)]
pub struct HamiltonianFamily {
    dim: usize,
    param_dim: usize,
    kind: FamilyKind,
}

#[derive(Clone)]
enum FamilyKind {
    /// `H = -(hbar/2) b.sigma`, parameters are the field components `b`.
    SpinHalf {
        hbar: f64,
    },
    /// `E_i(R) = offsets[i] + slopes[i] . R` on the diagonal.
    DiagonalDrift {
        offsets: Vec<f64>,
        slopes: Vec<Vec<f64>>,
    },
    Table(UserMatrixTable),
    Custom(Arc<MatrixFn>),
}

impl fmt::Debug for HamiltonianFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            FamilyKind::SpinHalf { .. } => "SpinHalfInField",
            FamilyKind::DiagonalDrift { .. } => "DiagonalDrift",
            FamilyKind::Table(_) => "UserMatrixTable",
            FamilyKind::Custom(_) => "Custom",
        };
        f.debug_struct("HamiltonianFamily")
            .field("kind", &kind)
            .field("dim", &self.dim)
            .field("param_dim", &self.param_dim)
            .finish()
    }
}

/// Matrices tabulated on a 1-D parameter grid, linearly interpolated and
/// clamped outside the grid.
#[derive(Clone, Debug)]
pub struct UserMatrixTable {
    nodes: Vec<f64>,
    matrices: Vec<ComplexMatrix>,
}

impl UserMatrixTable {
    pub fn new(nodes: Vec<f64>, matrices: Vec<ComplexMatrix>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != matrices.len() {
            return Err(HolonomyError::InvalidInput(
                "matrix table needs at least two nodes and one matrix per node".into(),
            ));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|x| !x.is_finite()) {
            return Err(HolonomyError::InvalidInput(
                "matrix table nodes must be finite and strictly increasing".into(),
            ));
        }
        let dim = matrices[0].dim();
        for m in &matrices {
            if m.dim() != dim {
                return Err(HolonomyError::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            m.check_hermitian()?;
        }
        Ok(Self { nodes, matrices })
    }

    fn eval(&self, s: f64) -> ComplexMatrix {
        let last = self.nodes.len() - 1;
        if s <= self.nodes[0] {
            return self.matrices[0].clone();
        }
        if s >= self.nodes[last] {
            return self.matrices[last].clone();
        }
        let i = self.nodes.partition_point(|&x| x <= s) - 1;
        let w = (s - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i]);
        let a = self.matrices[i].scale(Complex64::new(1.0 - w, 0.0));
        let b = self.matrices[i + 1].scale(Complex64::new(w, 0.0));
        &a + &b
    }
}

/// The three Pauli matrices.
pub fn pauli() -> [ComplexMatrix; 3] {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    [
        ComplexMatrix::from_fn(2, |r, c| if r != c { one } else { z }),
        ComplexMatrix::from_fn(2, |r, c| match (r, c) {
            (0, 1) => -i,
            (1, 0) => i,
            _ => z,
        }),
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0]),
    ]
}

/// The spin-1/2 state polarized along the direction `n` (normalized here).
///
/// `(cos(theta/2), e^{i phi} sin(theta/2))` in polar coordinates of `n`; it is
/// the ground state of `-(hbar/2) b.sigma` for `b` parallel to `n`.
pub fn coherent_spin_state(n: [f64; 3]) -> Result<State> {
    let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !(r > 0.0 && r.is_finite()) {
        return Err(HolonomyError::InvalidInput("zero or non-finite direction".into()));
    }
    let theta = (n[2] / r).clamp(-1.0, 1.0).acos();
    let phi = n[1].atan2(n[0]);
    State::new(vec![
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ])
}

impl HamiltonianFamily {
    /// `H = -(hbar/2) b.sigma` with `b` (angular-frequency units) as the parameter.
    pub fn spin_half_in_field(hbar: f64) -> Self {
        Self {
            dim: 2,
            param_dim: 3,
            kind: FamilyKind::SpinHalf { hbar },
        }
    }

    /// Diagonal Hamiltonian whose eigenvalues drift linearly with the
    /// parameters; its eigenvectors are constant.
    pub fn diagonal_drift(offsets: Vec<f64>, slopes: Vec<Vec<f64>>) -> Result<Self> {
        if offsets.is_empty() || offsets.len() != slopes.len() {
            return Err(HolonomyError::InvalidInput(
                "diagonal drift needs one slope vector per level".into(),
            ));
        }
        let param_dim = slopes[0].len();
        if slopes.iter().any(|s| s.len() != param_dim) {
            return Err(HolonomyError::InvalidInput(
                "slope vectors must share one parameter dimension".into(),
            ));
        }
        let family = Self {
            dim: offsets.len(),
            param_dim,
            kind: FamilyKind::DiagonalDrift { offsets, slopes },
        };
        family.probe_hermiticity(1.0)?;
        Ok(family)
    }

    pub fn user_table(table: UserMatrixTable) -> Result<Self> {
        let dim = table.matrices[0].dim();
        let family = Self {
            dim,
            param_dim: 1,
            kind: FamilyKind::Table(table),
        };
        Ok(family)
    }

    /// Wraps an arbitrary matrix-valued function, checking Hermiticity at 32
    /// pseudo-random points in `[-sample_scale, sample_scale]^param_dim`.
    pub fn from_fn(
        dim: usize,
        param_dim: usize,
        sample_scale: f64,
        f: impl Fn(&[f64]) -> ComplexMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        let family = Self {
            dim,
            param_dim,
            kind: FamilyKind::Custom(Arc::new(f)),
        };
        family.probe_hermiticity(sample_scale)?;
        Ok(family)
    }

    fn probe_hermiticity(&self, scale: f64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..HERMITICITY_PROBES {
            let p: Vec<f64> = (0..self.param_dim).map(|_| rng.random_range(-scale..=scale)).collect();
            let h = self.eval_unchecked(&p);
            if h.dim() != self.dim {
                return Err(HolonomyError::DimensionMismatch {
                    expected: self.dim,
                    found: h.dim(),
                });
            }
            h.check_hermitian()?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn eval(&self, point: &[f64]) -> Result<ComplexMatrix> {
        if point.len() != self.param_dim {
            return Err(HolonomyError::DimensionMismatch {
                expected: self.param_dim,
                found: point.len(),
            });
        }
        if point.iter().any(|x| !x.is_finite()) {
            return Err(HolonomyError::InvalidInput("non-finite parameter point".into()));
        }
        let h = self.eval_unchecked(point);
        if h.dim() != self.dim {
            return Err(HolonomyError::DimensionMismatch {
                expected: self.dim,
                found: h.dim(),
            });
        }
        Ok(h)
    }

    fn eval_unchecked(&self, p: &[f64]) -> ComplexMatrix {
        match &self.kind {
            FamilyKind::SpinHalf { hbar } => {
                let k = -hbar / 2.0;
                ComplexMatrix::from_rows(vec![
                    vec![Complex64::new(k * p[2], 0.0), Complex64::new(k * p[0], -k * p[1])],
                    vec![Complex64::new(k * p[0], k * p[1]), Complex64::new(-k * p[2], 0.0)],
                ])
                .expect("2x2 rows")
            }
            FamilyKind::DiagonalDrift { offsets, slopes } => {
                let diag: Vec<f64> = offsets
                    .iter()
                    .zip(slopes)
                    .map(|(e0, s)| e0 + s.iter().zip(p).map(|(a, b)| a * b).sum::<f64>())
                    .collect();
                ComplexMatrix::from_real_diagonal(&diag)
            }
            FamilyKind::Table(t) => t.eval(p[0]),
            FamilyKind::Custom(f) => f(p),
        }
    }

    pub fn eigensystem(&self, point: &[f64]) -> Result<EigenSystem> {
        eigh(&self.eval(point)?)
    }
}

/// A closed, discretized loop `R(t)` in parameter space.
///
/// `points` holds the N distinct loop points; the closing segment from the
/// last point back to the first is implicit. `times` has N+1 entries,
/// `t_0 = 0 < t_1 < ... < t_N = T`; segment k runs from `points[k]` to
/// `points[(k+1) % N]` over `[t_k, t_{k+1}]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterLoop {
    points: Vec<Vec<f64>>,
    times: Vec<f64>,
}

impl ParameterLoop {
    pub fn new(points: Vec<Vec<f64>>, times: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(HolonomyError::InvalidInput(format!(
                "a parameter loop needs at least 3 points, got {n}"
            )));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(HolonomyError::InvalidInput("empty parameter points".into()));
        }
        for p in &points {
            if p.len() != d {
                return Err(HolonomyError::DimensionMismatch {
                    expected: d,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(HolonomyError::InvalidInput("non-finite loop point".into()));
            }
        }
        for k in 0..n {
            if points[k] == points[(k + 1) % n] {
                return Err(HolonomyError::InvalidInput(format!(
                    "loop points {k} and {} coincide",
                    (k + 1) % n
                )));
            }
        }
        if times.len() != n + 1 {
            return Err(HolonomyError::InvalidInput(format!(
                "expected {} time stamps for {n} points, got {}",
                n + 1,
                times.len()
            )));
        }
        if times[0] != 0.0 || times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HolonomyError::InvalidInput(
                "time grid must start at 0 and be strictly increasing".into(),
            ));
        }
        Ok(Self { points, times })
    }

    /// Equally spaced time grid over `period`.
    pub fn uniform(points: Vec<Vec<f64>>, period: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(HolonomyError::InvalidInput("period must be positive".into()));
        }
        let n = points.len();
        let times = (0..=n).map(|k| period * k as f64 / n as f64).collect();
        Self::new(points, times)
    }

    /// Field of magnitude `b` precessing counterclockwise (seen from +z) on a
    /// cone of half-angle `theta` about +z, sampled at `n` equally spaced azimuths.
    pub fn field_cone(b: f64, theta: f64, n: usize, period: f64) -> Result<Self> {
        let points = (0..n)
            .map(|k| {
                let phi = TAU * k as f64 / n as f64;
                vec![
                    b * theta.sin() * phi.cos(),
                    b * theta.sin() * phi.sin(),
                    b * theta.cos(),
                ]
            })
            .collect();
        Self::uniform(points, period)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn param_dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn period(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Loop point `k` with wrap-around (so `point(N) == point(0)`).
    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k % self.points.len()]
    }

    /// Same loop with a new time grid.
    pub fn with_times(&self, times: Vec<f64>) -> Result<Self> {
        Self::new(self.points.clone(), times)
    }

    /// Same base point, opposite orientation; segment durations are mirrored.
    pub fn reversed(&self) -> Self {
        let n = self.points.len();
        let mut points = Vec::with_capacity(n);
        points.push(self.points[0].clone());
        points.extend(self.points[1..].iter().rev().cloned());
        let durations: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).rev().collect();
        let mut times = vec![0.0];
        for d in durations {
            times.push(times[times.len() - 1] + d);
        }
        Self { points, times }
    }

    /// The loop traversed `count` times in succession.
    pub fn repeated(&self, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(HolonomyError::InvalidInput("repeat count must be positive".into()));
        }
        let period = self.period();
        let n = self.points.len();
        let mut points = Vec::with_capacity(n * count);
        let mut times = Vec::with_capacity(n * count + 1);
        for r in 0..count {
            points.extend(self.points.iter().cloned());
            times.extend(self.times[..n].iter().map(|t| t + r as f64 * period));
        }
        times.push(period * count as f64);
        Self::new(points, times)
    }
}

/// The recorded trajectory of one propagation.
#[derive(Clone, Debug)]
pub struct EvolutionRecord {
    /// `psi(t_k)` for k = 0..=N (the last entry is the state after the full loop).
    pub states: Vec<State>,
    /// `<psi(t_k)|H(R(t_k))|psi(t_k)>` on the same grid.
    pub energies: Vec<f64>,
    pub loop_: ParameterLoop,
    pub initial_eigenindex: Option<usize>,
    pub steps_per_segment: usize,
    pub hbar: f64,
    /// Largest `|‖psi‖ - 1|` observed before any renormalization.
    pub max_norm_drift: f64,
}

impl EvolutionRecord {
    pub fn final_state(&self) -> &State {
        &self.states[self.states.len() - 1]
    }

    pub fn initial_state(&self) -> &State {
        &self.states[0]
    }
}

/// Integrates `i hbar d/dt psi = H(R(t)) psi` around the loop.
///
/// Each segment is split into `steps_per_segment` sub-steps. Within a
/// sub-step the Hamiltonian is frozen at the parameter midpoint of the
/// sub-step (linear interpolation between the loop points) and the exact
/// exponential is applied, which is second-order accurate and unitary.
pub fn propagate(
    family: &HamiltonianFamily,
    loop_: &ParameterLoop,
    psi0: &State,
    steps_per_segment: usize,
    hbar: f64,
) -> Result<EvolutionRecord> {
    if psi0.dim() != family.dim() {
        return Err(HolonomyError::DimensionMismatch {
            expected: family.dim(),
            found: psi0.dim(),
        });
    }
    if loop_.param_dim() != family.param_dim() {
        return Err(HolonomyError::DimensionMismatch {
            expected: family.param_dim(),
            found: loop_.param_dim(),
        });
    }
    if steps_per_segment == 0 {
        return Err(HolonomyError::InvalidInput(
            "steps_per_segment must be at least 1".into(),
        ));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(HolonomyError::InvalidInput("hbar must be positive".into()));
    }

    let n = loop_.len();
    let mut states = Vec::with_capacity(n + 1);
    let mut energies = Vec::with_capacity(n + 1);
    let mut psi: Vec<Complex64> = psi0.amplitudes().to_vec();
    let mut max_norm_drift: f64 = 0.0;
    let mut mid = vec![0.0; family.param_dim()];

    let record = |psi: &[Complex64], k: usize, states: &mut Vec<State>, energies: &mut Vec<f64>| -> Result<()> {
        let s = State::new(psi.to_vec()).map_err(|_| HolonomyError::NonFiniteState { step: k })?;
        let h = family.eval(loop_.point(k))?;
        energies.push(h.expectation(&s).re);
        states.push(s);
        Ok(())
    };

    record(&psi, 0, &mut states, &mut energies)?;
    for k in 0..n {
        let a = loop_.point(k);
        let b = loop_.point(k + 1);
        let dt = (loop_.times()[k + 1] - loop_.times()[k]) / steps_per_segment as f64;
        for m in 0..steps_per_segment {
            let w = (m as f64 + 0.5) / steps_per_segment as f64;
            for (j, x) in mid.iter_mut().enumerate() {
                *x = a[j] + w * (b[j] - a[j]);
            }
            let eig = family.eigensystem(&mid)?;
            psi = apply_spectral(&eig, &psi, dt / hbar);
            if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(HolonomyError::NonFiniteState {
                    step: k * steps_per_segment + m,
                });
            }
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        max_norm_drift = max_norm_drift.max((norm - 1.0).abs());
        record(&psi, k + 1, &mut states, &mut energies)?;
    }

    Ok(EvolutionRecord {
        states,
        energies,
        loop_: loop_.clone(),
        initial_eigenindex: None,
        steps_per_segment,
        hbar,
        max_norm_drift,
    })
}

/// Prepares the `level` eigenstate at the loop's base point and propagates it.
pub fn propagate_eigenstate(
    family: &HamiltonianFamily,
    loop_: &ParameterLoop,
    level: usize,
    steps_per_segment: usize,
    hbar: f64,
) -> Result<EvolutionRecord> {
    let eig = family.eigensystem(loop_.point(0))?;
    let psi0 = eig.vectors.get(level).ok_or_else(|| {
        HolonomyError::InvalidInput(format!("level {level} out of range for dimension {}", eig.dim()))
    })?;
    let mut rec = propagate(family, loop_, psi0, steps_per_segment, hbar)?;
    rec.initial_eigenindex = Some(level);
    Ok(rec)
}

/// `sum_k e^{-i lambda_k tau} |v_k><v_k|psi>`
fn apply_spectral(eig: &EigenSystem, psi: &[Complex64], tau: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
        let amps = v.amplitudes();
        let proj: Complex64 = amps.iter().zip(psi).map(|(a, b)| a.conj() * b).sum();
        let c = proj * Complex64::from_polar(1.0, -lambda * tau);
        for (o, a) in out.iter_mut().zip(amps) {
            *o += c * a;
        }
    }
    out
}

/// Instantaneous eigenvectors of `level` at each loop point, in the discrete
/// parallel-transport gauge: `<psi_k|psi_{k+1}>` is real and positive for
/// k = 0..N-2. The closing overlap `<psi_{N-1}|psi_0>` carries the holonomy.
pub fn adiabatic_track(
    family: &HamiltonianFamily,
    loop_: &ParameterLoop,
    level: usize,
    gap_tol: f64,
) -> Result<Vec<State>> {
    if level >= family.dim() {
        return Err(HolonomyError::InvalidInput(format!(
            "level {level} out of range for dimension {}",
            family.dim()
        )));
    }
    let n = loop_.len();
    let mut tracked: Vec<State> = Vec::with_capacity(n);
    for k in 0..n {
        let eig = family.eigensystem(loop_.point(k))?;
        let gap = eig.level_gap(level);
        if gap < gap_tol {
            return Err(HolonomyError::DegenerateSpectrum {
                gap,
                tolerance: gap_tol,
                point: k,
            });
        }
        let v = eig.vectors[level].clone();
        match tracked.last() {
            None => tracked.push(v),
            Some(prev) => {
                let ov = prev.braket(&v);
                let modulus = ov.norm();
                if modulus < MIN_TRACK_OVERLAP {
                    return Err(HolonomyError::GaugeObstruction {
                        modulus,
                        from: k - 1,
                        to: k,
                    });
                }
                tracked.push(v.scaled_unit(ov.conj() / modulus));
            }
        }
    }
    let seam = tracked[n - 1].braket(&tracked[0]).norm();
    if seam < MIN_TRACK_OVERLAP {
        return Err(HolonomyError::GaugeObstruction {
            modulus: seam,
            from: n - 1,
            to: 0,
        });
    }
    Ok(tracked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Ray;
    use std::f64::consts::PI;

    fn constant_loop(param: f64, period: f64) -> ParameterLoop {
        // Three distinct points whose Hamiltonian is the same for the drift family
        // with zero slope in the second coordinate.
        ParameterLoop::uniform(vec![vec![param, 0.0], vec![param, 1.0], vec![param, 2.0]], period).unwrap()
    }

    #[test]
    fn stationary_ground_state_with_zero_energy() {
        let fam = HamiltonianFamily::diagonal_drift(vec![0.0, 1.0], vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let lp = constant_loop(0.0, 1.0);
        let rec = propagate(&fam, &lp, &State::basis(2, 0), 4, 1.0).unwrap();
        let fin = rec.final_state();
        assert!((fin.braket(&State::basis(2, 0)) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(rec.energies.iter().all(|e| e.abs() < 1e-15));
    }

    #[test]
    fn phase_winds_full_cycle() {
        let fam = HamiltonianFamily::diagonal_drift(vec![1.0, 2.0], vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let lp = constant_loop(0.0, TAU);
        let rec = propagate(&fam, &lp, &State::basis(2, 0), 16, 1.0).unwrap();
        let ov = rec.final_state().braket(&State::basis(2, 0));
        assert!((ov - Complex64::new(1.0, 0.0)).norm() < 1e-8);
        assert!(rec.max_norm_drift < 1e-10);
    }

    #[test]
    fn slow_equatorial_precession_returns_to_initial_ray() {
        let b = 1.0;
        let fam = HamiltonianFamily::spin_half_in_field(1.0);
        let lp = ParameterLoop::field_cone(b, PI / 2.0, 400, 1000.0 / b).unwrap();
        let rec = propagate_eigenstate(&fam, &lp, 0, 16, 1.0).unwrap();
        // Oracle: instantaneous eigenvector at T is the aligned state at the base point.
        let aligned = coherent_spin_state([1.0, 0.0, 0.0]).unwrap();
        let f = Ray::new(rec.final_state()).fidelity(&Ray::new(&aligned));
        assert!(f > 1.0 - 1e-4, "fidelity {f}");
        assert!(rec.max_norm_drift < 1e-10);
    }

    #[test]
    fn track_constant_eigenvector_for_diagonal_family() {
        let fam = HamiltonianFamily::diagonal_drift(vec![0.0, 1.0], vec![vec![0.0, 0.0], vec![0.5, 0.2]]).unwrap();
        let lp = ParameterLoop::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], 1.0).unwrap();
        let t = adiabatic_track(&fam, &lp, 0, DEFAULT_GAP_TOL).unwrap();
        for s in &t {
            assert!((s.braket(&State::basis(2, 0)) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn tracked_spin_aligned_with_field() {
        let fam = HamiltonianFamily::spin_half_in_field(1.0);
        let theta = 0.7;
        let lp = ParameterLoop::field_cone(2.0, theta, 64, 1.0).unwrap();
        let t = adiabatic_track(&fam, &lp, 0, DEFAULT_GAP_TOL).unwrap();
        let sigma = pauli();
        for (k, s) in t.iter().enumerate() {
            let p = lp.point(k);
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let proj = (0..3).map(|j| sigma[j].expectation(s).re * p[j] / r).sum::<f64>();
            assert!((proj - 1.0).abs() < 1e-8, "point {k}: {proj}");
            // Closed-form eigenvector oracle.
            let oracle = coherent_spin_state([p[0], p[1], p[2]]).unwrap();
            assert!(s.fidelity(&oracle) > 1.0 - 1e-12);
        }
        for w in t.windows(2) {
            let ov = w[0].braket(&w[1]);
            assert!(ov.re > 0.0 && ov.im.abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_loop_is_a_gauge_obstruction() {
        let fam = HamiltonianFamily::spin_half_in_field(1.0);
        let a = 170f64.to_radians();
        let lp = ParameterLoop::uniform(
            vec![vec![0.0, 0.0, 1.0], vec![a.sin(), 0.0, a.cos()], vec![0.0, 1.0, 0.0]],
            1.0,
        )
        .unwrap();
        assert!(matches!(
            adiabatic_track(&fam, &lp, 0, DEFAULT_GAP_TOL),
            Err(HolonomyError::GaugeObstruction { from: 0, to: 1, .. })
        ));
    }

    #[test]
    fn degenerate_point_is_rejected() {
        let fam = HamiltonianFamily::spin_half_in_field(1.0);
        let lp =
            ParameterLoop::uniform(vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 1.0).unwrap();
        assert!(matches!(
            adiabatic_track(&fam, &lp, 0, DEFAULT_GAP_TOL),
            Err(HolonomyError::DegenerateSpectrum { point: 1, .. })
        ));
    }

    #[test]
    fn custom_family_must_be_hermitian() {
        let bad = HamiltonianFamily::from_fn(2, 1, 1.0, |p| {
            ComplexMatrix::from_fn(2, |i, j| {
                if i == 0 && j == 1 {
                    Complex64::new(p[0] + 1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        });
        assert!(matches!(bad, Err(HolonomyError::NotHermitian { .. })));
    }

    #[test]
    fn loop_validation() {
        assert!(ParameterLoop::uniform(vec![vec![0.0], vec![1.0]], 1.0).is_err());
        assert!(ParameterLoop::uniform(vec![vec![0.0], vec![1.0], vec![0.0]], 1.0).is_err());
        assert!(ParameterLoop::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.0, 1.0, 1.0, 2.0]).is_err());
        let lp = ParameterLoop::uniform(vec![vec![0.0], vec![1.0], vec![2.0]], 3.0).unwrap();
        let r = lp.reversed();
        assert_eq!(r.points(), &[vec![0.0], vec![2.0], vec![1.0]]);
        let twice = lp.repeated(2).unwrap();
        assert_eq!(twice.len(), 6);
        assert_eq!(twice.period(), 6.0);
    }

    #[test]
    fn table_family_interpolates() {
        let m0 = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        let m1 = ComplexMatrix::from_real_diagonal(&[2.0, 1.0]);
        let fam = HamiltonianFamily::user_table(UserMatrixTable::new(vec![0.0, 1.0], vec![m0, m1]).unwrap()).unwrap();
        let h = fam.eval(&[0.25]).unwrap();
        assert!((h[(0, 0)].re - 0.5).abs() < 1e-15);
        let clamped = fam.eval(&[5.0]).unwrap();
        assert!((clamped[(0, 0)].re - 2.0).abs() < 1e-15);
    }
}
