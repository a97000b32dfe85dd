//! Phases of cyclic evolutions and the holonomy of the U(1) bundle over
//! ray space.
//!
//! Sign conventions: the geometric phase is `gamma = i ∮ <phi|d phi>`, so a
//! discrete closed chain of states gives `gamma = -arg prod_k <s_k|s_{k+1}>`.
//! For the spin-1/2 state aligned with a field that sweeps a solid angle
//! `Omega` counterclockwise, `gamma = -Omega / 2`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{EvolutionRecord, HamiltonianFamily, ParameterLoop};
use crate::error::{HolonomyError, Result};
use crate::linalg::State;
use crate::principal_angle;

/// Default minimum closure fidelity `|<psi(0)|psi(T)>|^2` for a cyclic evolution.
pub const DEFAULT_CLOSURE_TOL: f64 = 1.0 - 1e-6;

/// Consecutive states closer to orthogonal than this make the discrete
/// geodesic between their rays ill-conditioned.
pub const MIN_OVERLAP: f64 = 0.1;

/// Relative finite-difference step used when none is given.
pub const DEFAULT_FD_RELATIVE_STEP: f64 = 1e-3;

/// Reference-gauge components smaller than this along a loop cannot fix a
/// smooth phase convention.
const MIN_GAUGE_PIVOT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseDecomposition {
    /// `arg <psi(0)|psi(T)>`, in (-π, π].
    pub total: f64,
    /// `-(1/hbar) ∫ <H> dt`, unwrapped.
    pub dynamical: f64,
    /// `total - dynamical` reduced to (-π, π].
    pub geometric: f64,
    pub closure_fidelity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HolonomyMethod {
    AdiabaticSplit,
    HorizontalLift,
    BargmannProduct,
    ConnectionIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Discretization {
    pub points: usize,
    pub steps_per_segment: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolonomyDiagnostics {
    pub closure_fidelity: f64,
    /// Discretization error estimate (Richardson halving or an independent
    /// route), when one is available.
    pub estimated_error: Option<f64>,
    /// Running phase before reduction mod 2π, when the method has one.
    pub unwrapped_phase: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolonomyReport {
    /// In (-π, π].
    pub geometric_phase: f64,
    pub method: HolonomyMethod,
    pub discretization: Discretization,
    pub diagnostics: HolonomyDiagnostics,
}

/// Splits the phase of a cyclic evolution into dynamical and geometric parts
/// (the Aharonov-Anandan split, which reduces to Berry's in the adiabatic limit).
pub fn decompose_phase(record: &EvolutionRecord, closure_tol: f64) -> Result<PhaseDecomposition> {
    let first = record.initial_state();
    let last = record.final_state();
    let ov = first.braket(last);
    let closure_fidelity = ov.norm_sqr().min(1.0);
    if closure_fidelity < closure_tol {
        return Err(HolonomyError::OpenLoop {
            fidelity: closure_fidelity,
            tolerance: closure_tol,
        });
    }
    let total = ov.arg();
    let times = record.loop_.times();
    let integral: f64 = record
        .energies
        .windows(2)
        .zip(times.windows(2))
        .map(|(e, t)| 0.5 * (e[0] + e[1]) * (t[1] - t[0]))
        .sum();
    let dynamical = -integral / record.hbar;
    Ok(PhaseDecomposition {
        total,
        dynamical,
        geometric: principal_angle(total - dynamical),
        closure_fidelity,
    })
}

/// [`decompose_phase`] packaged as a holonomy report. The error estimate is
/// the disagreement with the Bargmann product over the recorded ray path,
/// which measures the same holonomy by an independent route.
pub fn adiabatic_split(record: &EvolutionRecord, closure_tol: f64) -> Result<HolonomyReport> {
    let split = decompose_phase(record, closure_tol)?;
    let cross = bargmann_holonomy(&record.states, false).ok();
    let estimated_error = cross.map(|b| {
        crate::angle_diff(split.geometric, b.geometric_phase).abs() + b.diagnostics.estimated_error.unwrap_or(0.0)
    });
    Ok(HolonomyReport {
        geometric_phase: split.geometric,
        method: HolonomyMethod::AdiabaticSplit,
        discretization: Discretization {
            points: record.loop_.len(),
            steps_per_segment: Some(record.steps_per_segment),
        },
        diagnostics: HolonomyDiagnostics {
            closure_fidelity: split.closure_fidelity,
            estimated_error,
            unwrapped_phase: None,
        },
    })
}

fn check_chain(states: &[State]) -> Result<()> {
    if states.len() < 3 {
        return Err(HolonomyError::InvalidInput(format!(
            "a holonomy chain needs at least 3 states, got {}",
            states.len()
        )));
    }
    let d = states[0].dim();
    for s in states {
        if s.dim() != d {
            return Err(HolonomyError::DimensionMismatch {
                expected: d,
                found: s.dim(),
            });
        }
    }
    Ok(())
}

/// Phase of the unit-normalized link product around the chain, with the
/// closing link from the last state back to the first.
fn link_product(states: &[State]) -> Result<Complex64> {
    let n = states.len();
    let mut prod = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let next = (k + 1) % n;
        let z = states[k].braket(&states[next]);
        let modulus = z.norm();
        if modulus < MIN_OVERLAP {
            return Err(HolonomyError::DegenerateOverlap {
                modulus,
                from: k,
                to: next,
            });
        }
        prod *= z / modulus;
    }
    Ok(prod)
}

/// Gauge-invariant discrete holonomy `-arg prod_k <s_k|s_{k+1}>`.
///
/// With `closed = true` the segment from the last state back to the first is
/// a genuine step of the path. With `closed = false` the last state is taken
/// to be the return of the evolution to the initial fiber (as in an
/// [`EvolutionRecord`]); the closing overlap then only identifies the fiber,
/// and its fidelity is reported as the closure diagnostic.
pub fn bargmann_holonomy(states: &[State], closed: bool) -> Result<HolonomyReport> {
    check_chain(states)?;
    let gamma = -link_product(states)?.arg();
    let n = states.len();
    let closure_fidelity = if closed {
        1.0
    } else {
        states[n - 1].fidelity(&states[0]).min(1.0)
    };
    Ok(HolonomyReport {
        geometric_phase: gamma,
        method: HolonomyMethod::BargmannProduct,
        discretization: Discretization {
            points: n,
            steps_per_segment: None,
        },
        diagnostics: HolonomyDiagnostics {
            closure_fidelity,
            estimated_error: richardson_halving(states, closed, gamma),
            unwrapped_phase: None,
        },
    })
}

/// Second-order Richardson estimate from the chain with every other state.
fn richardson_halving(states: &[State], closed: bool, fine: f64) -> Option<f64> {
    let n = states.len();
    if n < 6 {
        return None;
    }
    let mut coarse: Vec<State> = states.iter().step_by(2).cloned().collect();
    if !closed && !(n - 1).is_multiple_of(2) {
        coarse.push(states[n - 1].clone());
    }
    let c = -link_product(&coarse).ok()?.arg();
    Some(crate::angle_diff(fine, c).abs() / 3.0)
}

/// Discrete horizontal lift of the ray path through `states`: each
/// representative is rephased so that `<phi_k|phi_{k+1}>` is real and
/// positive. For `closed = true` the returned list has one extra element,
/// the lift's return to the initial fiber.
pub fn horizontal_lift_path(states: &[State], closed: bool) -> Result<Vec<State>> {
    check_chain(states)?;
    let n = states.len();
    let mut lift: Vec<State> = Vec::with_capacity(n + 1);
    lift.push(states[0].clone());
    let targets = states[1..]
        .iter()
        .enumerate()
        .map(|(i, s)| (i + 1, s))
        .chain(closed.then_some((0, &states[0])));
    for (idx, s) in targets {
        let prev = &lift[lift.len() - 1];
        let z = prev.braket(s);
        let modulus = z.norm();
        if modulus < MIN_OVERLAP {
            return Err(HolonomyError::DegenerateOverlap {
                modulus,
                from: lift.len() - 1,
                to: idx,
            });
        }
        lift.push(s.scaled_unit(z.conj() / modulus));
    }
    Ok(lift)
}

/// Holonomy from the horizontal lift: `gamma = arg <phi_0|phi_return>`.
///
/// Algebraically identical to [`bargmann_holonomy`]; the two are kept as a
/// mutual check of the implementation.
pub fn horizontal_lift(states: &[State], closed: bool) -> Result<HolonomyReport> {
    let lift = horizontal_lift_path(states, closed)?;
    let ret = &lift[lift.len() - 1];
    let gamma = lift[0].braket(ret).arg();
    let n = states.len();
    let closure_fidelity = if closed {
        1.0
    } else {
        states[n - 1].fidelity(&states[0]).min(1.0)
    };
    Ok(HolonomyReport {
        geometric_phase: gamma,
        method: HolonomyMethod::HorizontalLift,
        discretization: Discretization {
            points: n,
            steps_per_segment: None,
        },
        diagnostics: HolonomyDiagnostics {
            closure_fidelity,
            estimated_error: richardson_halving(states, closed, gamma),
            unwrapped_phase: None,
        },
    })
}

/// Berry potential and curvature at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionSample {
    pub point: Vec<f64>,
    /// `A_j = i <psi|d_j psi>` in the reference-section gauge at `point`.
    pub berry_potential: Vec<f64>,
    /// `F_ij` from plaquette link phases (antisymmetric).
    pub curvature: Vec<Vec<f64>>,
}

/// Eigenvector of `level` in the gauge where component `pivot` is real and
/// positive (a local section of the bundle).
fn section(family: &HamiltonianFamily, point: &[f64], level: usize, gap_tol: f64, pivot: usize) -> Result<State> {
    let eig = family.eigensystem(point)?;
    if level >= eig.dim() {
        return Err(HolonomyError::InvalidInput(format!("level {level} out of range")));
    }
    let gap = eig.level_gap(level);
    if gap < gap_tol {
        return Err(HolonomyError::DegenerateSpectrum {
            gap,
            tolerance: gap_tol,
            point: 0,
        });
    }
    let v = &eig.vectors[level];
    let z = v.amplitudes()[pivot];
    if z.norm() < 1e-300 {
        return Err(HolonomyError::GaugeObstruction {
            modulus: 0.0,
            from: 0,
            to: 0,
        });
    }
    Ok(v.scaled_unit(z.conj() / z.norm()))
}

fn largest_component(s: &State) -> usize {
    let amps = s.amplitudes();
    let max = amps.iter().map(|z| z.norm()).fold(0.0, f64::max);
    amps.iter().position(|z| z.norm() >= max * (1.0 - 1e-12)).unwrap_or(0)
}

fn shifted(point: &[f64], offsets: &[(usize, f64)]) -> Vec<f64> {
    let mut p = point.to_vec();
    for &(i, d) in offsets {
        p[i] += d;
    }
    p
}

/// Default finite-difference step at `point`: `1e-3` times its norm (or
/// times 1 at the origin).
pub fn default_step(point: &[f64]) -> f64 {
    let scale = point.iter().map(|x| x * x).sum::<f64>().sqrt();
    DEFAULT_FD_RELATIVE_STEP * if scale > 0.0 { scale } else { 1.0 }
}

fn potential_at(
    family: &HamiltonianFamily,
    point: &[f64],
    level: usize,
    h: f64,
    gap_tol: f64,
    pivot: usize,
) -> Result<Vec<f64>> {
    let center = section(family, point, level, gap_tol, pivot)?;
    (0..point.len())
        .map(|j| {
            let plus = section(family, &shifted(point, &[(j, h)]), level, gap_tol, pivot)?;
            let minus = section(family, &shifted(point, &[(j, -h)]), level, gap_tol, pivot)?;
            let d = center.braket(&plus) - center.braket(&minus);
            // i <psi|d psi> = -Im <psi|d psi> for a normalized section.
            Ok(-d.im / (2.0 * h))
        })
        .collect()
}

/// Curvature `F_ij` from the link-phase product around the square of side
/// `2h` centred at `point` in the (i, j) plane, traversed counterclockwise.
fn plaquette_curvature(
    family: &HamiltonianFamily,
    point: &[f64],
    level: usize,
    h: f64,
    gap_tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let d = point.len();
    let mut f = vec![vec![0.0; d]; d];
    let eig_state = |p: Vec<f64>| -> Result<State> {
        let eig = family.eigensystem(&p)?;
        let gap = eig.level_gap(level);
        if gap < gap_tol {
            return Err(HolonomyError::DegenerateSpectrum {
                gap,
                tolerance: gap_tol,
                point: 0,
            });
        }
        Ok(eig.vectors[level].clone())
    };
    for i in 0..d {
        for j in i + 1..d {
            let corners = [
                eig_state(shifted(point, &[(i, -h), (j, -h)]))?,
                eig_state(shifted(point, &[(i, h), (j, -h)]))?,
                eig_state(shifted(point, &[(i, h), (j, h)]))?,
                eig_state(shifted(point, &[(i, -h), (j, h)]))?,
            ];
            let phase = -link_product(&corners)?.arg();
            let fij = phase / (4.0 * h * h);
            f[i][j] = fij;
            f[j][i] = -fij;
        }
    }
    Ok(f)
}

/// Samples the Berry potential (central differences in a smooth local
/// section) and the curvature (plaquette link phases) at `point`.
pub fn berry_connection(
    family: &HamiltonianFamily,
    point: &[f64],
    level: usize,
    h: f64,
    gap_tol: f64,
) -> Result<ConnectionSample> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(HolonomyError::InvalidInput(
            "finite-difference step must be positive".into(),
        ));
    }
    let eig = family.eigensystem(point)?;
    if level >= eig.dim() {
        return Err(HolonomyError::InvalidInput(format!("level {level} out of range")));
    }
    let gap = eig.level_gap(level);
    if gap < gap_tol {
        return Err(HolonomyError::DegenerateSpectrum {
            gap,
            tolerance: gap_tol,
            point: 0,
        });
    }
    let pivot = largest_component(&eig.vectors[level]);
    Ok(ConnectionSample {
        point: point.to_vec(),
        berry_potential: potential_at(family, point, level, h, gap_tol, pivot)?,
        curvature: plaquette_curvature(family, point, level, h, gap_tol)?,
    })
}

/// Curvature as the antisymmetrized derivative `d_i A_j - d_j A_i` of the
/// potential, all in one fixed section. Cross-check for the plaquette route.
pub fn curvature_finite_difference(
    family: &HamiltonianFamily,
    point: &[f64],
    level: usize,
    h: f64,
    gap_tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let eig = family.eigensystem(point)?;
    if level >= eig.dim() {
        return Err(HolonomyError::InvalidInput(format!("level {level} out of range")));
    }
    let pivot = largest_component(&eig.vectors[level]);
    let d = point.len();
    let mut grads = Vec::with_capacity(d);
    for i in 0..d {
        let plus = potential_at(family, &shifted(point, &[(i, h)]), level, h, gap_tol, pivot)?;
        let minus = potential_at(family, &shifted(point, &[(i, -h)]), level, h, gap_tol, pivot)?;
        grads.push(
            plus.iter()
                .zip(&minus)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect::<Vec<f64>>(),
        );
    }
    let mut f = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            f[i][j] = grads[i][j] - grads[j][i];
        }
    }
    Ok(f)
}

/// Integrates the Berry potential along the loop with the trapezoidal rule.
///
/// One reference section is used for the whole loop: the basis component
/// whose smallest modulus along the loop is largest is held real positive.
/// The unwrapped integral is reported in the diagnostics.
pub fn connection_integral(
    family: &HamiltonianFamily,
    loop_: &ParameterLoop,
    level: usize,
    gap_tol: f64,
) -> Result<HolonomyReport> {
    let n = loop_.len();
    if level >= family.dim() {
        return Err(HolonomyError::InvalidInput(format!("level {level} out of range")));
    }
    let mut vecs = Vec::with_capacity(n);
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
        vecs.push(eig.vectors[level].clone());
    }
    let pivot = (0..family.dim())
        .max_by(|&a, &b| {
            let ma = vecs
                .iter()
                .map(|v| v.amplitudes()[a].norm())
                .fold(f64::INFINITY, f64::min);
            let mb = vecs
                .iter()
                .map(|v| v.amplitudes()[b].norm())
                .fold(f64::INFINITY, f64::min);
            ma.total_cmp(&mb)
        })
        .unwrap_or(0);
    let worst = vecs
        .iter()
        .map(|v| v.amplitudes()[pivot].norm())
        .fold(f64::INFINITY, f64::min);
    if worst < MIN_GAUGE_PIVOT {
        return Err(HolonomyError::GaugeObstruction {
            modulus: worst,
            from: 0,
            to: n - 1,
        });
    }

    let potentials = loop_
        .points()
        .iter()
        .map(|p| potential_at(family, p, level, default_step(p), gap_tol, pivot))
        .collect::<Result<Vec<_>>>()?;

    let integrate = |idx: &[usize]| -> f64 {
        let m = idx.len();
        (0..m)
            .map(|s| {
                let (a, b) = (idx[s], idx[(s + 1) % m]);
                let pa = loop_.point(a);
                let pb = loop_.point(b);
                potentials[a]
                    .iter()
                    .zip(&potentials[b])
                    .enumerate()
                    .map(|(j, (x, y))| 0.5 * (x + y) * (pb[j] - pa[j]))
                    .sum::<f64>()
            })
            .sum()
    };
    let all: Vec<usize> = (0..n).collect();
    let fine = integrate(&all);
    let estimated_error = (n >= 6).then(|| {
        let even: Vec<usize> = (0..n).step_by(2).collect();
        (fine - integrate(&even)).abs() / 3.0
    });

    Ok(HolonomyReport {
        geometric_phase: principal_angle(fine),
        method: HolonomyMethod::ConnectionIntegral,
        discretization: Discretization {
            points: n,
            steps_per_segment: None,
        },
        diagnostics: HolonomyDiagnostics {
            closure_fidelity: 1.0,
            estimated_error,
            unwrapped_phase: Some(fine),
        },
    })
}

/// Total plaquette flux of the Berry curvature through a sphere in a
/// three-parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureFlux {
    /// Sum of plaquette phases, outward orientation.
    pub total: f64,
    /// `total / 2π`, rounded.
    pub chern_number: i64,
    /// Distance of `total / 2π` from the nearest integer.
    pub quantization_error: f64,
    pub plaquettes: usize,
}

/// Lattice (link-variable) flux of the Berry curvature of `level` through the
/// sphere of `radius` about `center`, on an `n_theta` x `n_phi` polar grid.
/// The result is an integer multiple of 2π up to rounding, for any gauge.
pub fn curvature_flux_sphere(
    family: &HamiltonianFamily,
    level: usize,
    center: [f64; 3],
    radius: f64,
    n_theta: usize,
    n_phi: usize,
    gap_tol: f64,
) -> Result<CurvatureFlux> {
    if family.param_dim() != 3 {
        return Err(HolonomyError::DimensionMismatch {
            expected: 3,
            found: family.param_dim(),
        });
    }
    if n_theta < 2 || n_phi < 3 || !(radius > 0.0) {
        return Err(HolonomyError::InvalidInput(
            "sphere grid too coarse or radius not positive".into(),
        ));
    }
    let node = |i: usize, j: usize| -> [f64; 3] {
        let th = std::f64::consts::PI * i as f64 / n_theta as f64;
        let ph = TAU * j as f64 / n_phi as f64;
        [
            center[0] + radius * th.sin() * ph.cos(),
            center[1] + radius * th.sin() * ph.sin(),
            center[2] + radius * th.cos(),
        ]
    };
    let vec_at = |p: [f64; 3]| -> Result<State> {
        let eig = family.eigensystem(&p)?;
        let gap = eig.level_gap(level);
        if gap < gap_tol {
            return Err(HolonomyError::DegenerateSpectrum {
                gap,
                tolerance: gap_tol,
                point: 0,
            });
        }
        Ok(eig.vectors[level].clone())
    };
    // One eigenvector per lattice node so that every link is shared exactly.
    let north = vec_at(node(0, 0))?;
    let south = vec_at(node(n_theta, 0))?;
    let mut rings: Vec<Vec<State>> = Vec::with_capacity(n_theta - 1);
    for i in 1..n_theta {
        rings.push((0..n_phi).map(|j| vec_at(node(i, j))).collect::<Result<Vec<_>>>()?);
    }
    let at = |i: usize, j: usize| -> &State {
        if i == 0 {
            &north
        } else if i == n_theta {
            &south
        } else {
            &rings[i - 1][j % n_phi]
        }
    };
    let mut total = 0.0;
    let mut plaquettes = 0;
    for i in 0..n_theta {
        for j in 0..n_phi {
            // (theta, phi) ordering is counterclockwise seen from outside.
            let corners = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let mut prod = Complex64::new(1.0, 0.0);
            for k in 0..4 {
                let z = corners[k].braket(corners[(k + 1) % 4]);
                let modulus = z.norm();
                if modulus < MIN_OVERLAP {
                    return Err(HolonomyError::DegenerateOverlap {
                        modulus,
                        from: k,
                        to: (k + 1) % 4,
                    });
                }
                prod *= z / modulus;
            }
            total += -prod.arg();
            plaquettes += 1;
        }
    }
    let windings = total / TAU;
    Ok(CurvatureFlux {
        total,
        chern_number: windings.round() as i64,
        quantization_error: (windings - windings.round()).abs(),
        plaquettes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{coherent_spin_state, propagate, DEFAULT_GAP_TOL};
    use std::f64::consts::PI;

    fn stationary_record(energy: f64, period: f64) -> EvolutionRecord {
        let fam = HamiltonianFamily::diagonal_drift(vec![energy, energy + 1.0], vec![vec![0.0], vec![0.0]]).unwrap();
        let lp = ParameterLoop::uniform(vec![vec![0.0], vec![1.0], vec![2.0]], period).unwrap();
        propagate(&fam, &lp, &State::basis(2, 0), 8, 1.0).unwrap()
    }

    #[test]
    fn stationary_zero_energy_has_no_phase() {
        let d = decompose_phase(&stationary_record(0.0, 1.0), DEFAULT_CLOSURE_TOL).unwrap();
        assert!(d.total.abs() < 1e-14 && d.dynamical.abs() < 1e-14 && d.geometric.abs() < 1e-14);
    }

    #[test]
    fn stationary_unit_energy_is_purely_dynamical() {
        let d = decompose_phase(&stationary_record(1.0, PI / 2.0), DEFAULT_CLOSURE_TOL).unwrap();
        assert!((d.total + PI / 2.0).abs() < 1e-12);
        assert!((d.dynamical + PI / 2.0).abs() < 1e-12);
        assert!(d.geometric.abs() < 1e-12);
    }

    #[test]
    fn open_evolution_is_rejected() {
        let fam = HamiltonianFamily::spin_half_in_field(1.0);
        let lp =
            ParameterLoop::uniform(vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.5], vec![0.0, 0.0, 2.0]], 1.0).unwrap();
        let plus_x = coherent_spin_state([1.0, 0.0, 0.0]).unwrap();
        let rec = propagate(&fam, &lp, &plus_x, 8, 1.0).unwrap();
        assert!(matches!(
            decompose_phase(&rec, DEFAULT_CLOSURE_TOL),
            Err(HolonomyError::OpenLoop { .. })
        ));
    }

    #[test]
    fn single_ray_chain_has_zero_holonomy() {
        let s = State::from_real(&[0.6, 0.8]).unwrap();
        let chain = vec![s.with_phase(0.3), s.with_phase(-1.2), s.with_phase(2.9)];
        assert!(bargmann_holonomy(&chain, true).unwrap().geometric_phase.abs() < 1e-15);
        assert!(horizontal_lift(&chain, true).unwrap().geometric_phase.abs() < 1e-15);
    }

    #[test]
    fn orthogonal_neighbours_are_degenerate() {
        let chain = vec![
            State::basis(2, 0),
            State::basis(2, 1),
            State::from_real(&[1.0, 1.0]).unwrap(),
        ];
        assert!(matches!(
            bargmann_holonomy(&chain, true),
            Err(HolonomyError::DegenerateOverlap { from: 0, to: 1, .. })
        ));
        assert!(matches!(
            horizontal_lift(&chain, true),
            Err(HolonomyError::DegenerateOverlap { .. })
        ));
    }

    #[test]
    fn horizontal_lift_is_horizontal() {
        let chain: Vec<State> = (0..40)
            .map(|k| {
                let phi = TAU * k as f64 / 40.0;
                coherent_spin_state([0.8 * phi.cos(), 0.8 * phi.sin(), 0.6])
                    .unwrap()
                    .with_phase(k as f64)
            })
            .collect();
        let lift = horizontal_lift_path(&chain, true).unwrap();
        assert_eq!(lift.len(), 41);
        for w in lift.windows(2) {
            let z = w[0].braket(&w[1]);
            assert!(z.re > 0.0 && z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_drift_has_flat_connection() {
        let fam = HamiltonianFamily::diagonal_drift(vec![0.0, 2.0], vec![vec![0.3, 0.1], vec![-0.2, 0.4]]).unwrap();
        let s = berry_connection(&fam, &[0.4, -0.7], 0, 1e-3, DEFAULT_GAP_TOL).unwrap();
        assert!(s.berry_potential.iter().all(|a| a.abs() < 1e-12));
        assert!(s.curvature.iter().flatten().all(|f| f.abs() < 1e-9));
        let lp = ParameterLoop::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], 1.0).unwrap();
        assert!(
            connection_integral(&fam, &lp, 0, DEFAULT_GAP_TOL)
                .unwrap()
                .geometric_phase
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn monopole_curvature_at_north_pole() {
        let fam = HamiltonianFamily::spin_half_in_field(1.0);
        for b in [1.0, 2.0] {
            let s = berry_connection(&fam, &[0.0, 0.0, b], 0, 1e-3 * b, DEFAULT_GAP_TOL).unwrap();
            let oracle = -1.0 / (2.0 * b * b);
            assert!(
                (s.curvature[0][1] - oracle).abs() < 1e-6,
                "{} vs {oracle}",
                s.curvature[0][1]
            );
            assert!((s.curvature[1][0] + oracle).abs() < 1e-6);
            let fd = curvature_finite_difference(&fam, &[0.0, 0.0, b], 0, 1e-3 * b, DEFAULT_GAP_TOL).unwrap();
            assert!((fd[0][1] - oracle).abs() < 1e-4, "{} vs {oracle}", fd[0][1]);
        }
    }

    #[test]
    fn berry_potential_matches_north_gauge() {
        // In the gauge with the up component real, A_phi = -sin^2(theta/2), so
        // A = -sin^2(theta/2) / (b sin theta) along e_phi.
        let fam = HamiltonianFamily::spin_half_in_field(1.0);
        let (theta, phi, b): (f64, f64, f64) = (0.9, 0.4, 1.5);
        let p = [
            b * theta.sin() * phi.cos(),
            b * theta.sin() * phi.sin(),
            b * theta.cos(),
        ];
        let s = berry_connection(&fam, &p, 0, 1e-4, DEFAULT_GAP_TOL).unwrap();
        let a_phi = -(theta / 2.0).sin().powi(2) / (b * theta.sin());
        let expected = [-phi.sin() * a_phi, phi.cos() * a_phi, 0.0];
        for j in 0..3 {
            assert!(
                (s.berry_potential[j] - expected[j]).abs() < 1e-7,
                "{j}: {:?}",
                s.berry_potential
            );
        }
    }

    #[test]
    fn chern_number_of_spin_half() {
        let fam = HamiltonianFamily::spin_half_in_field(1.0);
        let flux = curvature_flux_sphere(&fam, 0, [0.0; 3], 1.0, 24, 24, DEFAULT_GAP_TOL).unwrap();
        assert!((flux.total + TAU).abs() < 1e-6, "{}", flux.total);
        assert_eq!(flux.chern_number, -1);
        let upper = curvature_flux_sphere(&fam, 1, [0.0; 3], 1.0, 24, 24, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(upper.chern_number, 1);
        let off = curvature_flux_sphere(&fam, 0, [0.0, 0.0, 3.0], 1.0, 24, 24, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(off.chern_number, 0);
    }

    #[test]
    fn equator_connection_integral_and_double_traversal() {
        let fam = HamiltonianFamily::spin_half_in_field(1.0);
        let lp = ParameterLoop::field_cone(1.0, PI / 2.0, 2000, 1.0).unwrap();
        let once = connection_integral(&fam, &lp, 0, DEFAULT_GAP_TOL).unwrap();
        assert!(crate::angle_diff(once.geometric_phase, -PI).abs() < 1e-3);
        let twice = connection_integral(&fam, &lp.repeated(2).unwrap(), 0, DEFAULT_GAP_TOL).unwrap();
        assert!(crate::angle_diff(twice.geometric_phase, 0.0).abs() < 1e-3);
        assert!((twice.diagnostics.unwrapped_phase.unwrap() + TAU).abs() < 2e-3);
    }
}
