use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{cumulative_trapezoid, gauss_legendre, random_stream, trapezoid, CompensatedSum};
use crate::solver::DuhamelSplit;
use crate::spectral::{
    curl, dealias_cutoff, forward_unchecked, partial, synthesize, synthesize_padded, Grid3, RealField,
    SpectralField,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LedgerVariant {
    Global,
    Local,
}

/// Time window `[t_lo, t_hi]` over the stored split times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerWindow {
    pub t_lo: f64,
    pub t_hi: f64,
}

/// The enstrophy balance `dE/dt = sum_i sign_i Y_i` at the interior times of
/// a window, with `dE/dt` from centred differences of the stored `E`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnstrophyLedger {
    pub variant: LedgerVariant,
    pub t_ref: f64,
    pub term_names: Vec<String>,
    pub signs: Vec<f64>,
    /// Every time in the window, with its enstrophy.
    pub sample_times: Vec<f64>,
    pub sample_energy: Vec<f64>,
    /// Interior times, where the balance is evaluated.
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// `terms[k][i]` is `Y_{i+1}` at `times[k]`.
    pub terms: Vec<Vec<f64>>,
    pub fd_dedt: Vec<f64>,
    /// `fd_dedt - sum_i sign_i Y_i`.
    pub defect: Vec<f64>,
    /// Local variant: `-int eta omega_nl . (I - D) X` with `D` the dealiasing
    /// mask and `X` the exact vorticity nonlinearity; the semi-discrete
    /// balance is `dE/dt = sum + remainder`.
    pub dealias_remainder: Option<Vec<f64>>,
    pub cutoff: Option<CutoffTrack>,
}

impl EnstrophyLedger {
    pub fn max_abs_defect(&self) -> f64 {
        self.defect.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn term(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.term_names.iter().position(|n| n == name)?;
        Some(self.terms.iter().map(|row| row[i]).collect())
    }
}

fn window_positions(split: &DuhamelSplit, window: &LedgerWindow) -> Result<Vec<usize>> {
    let tol = 1e-12 * window.t_hi.abs().max(1.0);
    let pos: Vec<usize> = (0..split.times.len())
        .filter(|&k| split.times[k] >= window.t_lo - tol && split.times[k] <= window.t_hi + tol)
        .collect();
    if pos.len() < 3 {
        return Err(Error::Precondition(format!(
            "window [{}, {}] holds {} stored times; centred differences need 3",
            window.t_lo,
            window.t_hi,
            pos.len()
        )));
    }
    Ok(pos)
}

/// Three-point derivative at the interior nodes of a nonuniform grid.
fn centred_derivative(t: &[f64], f: &[f64]) -> Vec<f64> {
    (1..t.len() - 1)
        .map(|i| {
            let h1 = t[i] - t[i - 1];
            let h2 = t[i + 1] - t[i];
            -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * (h1 + h2)) * f[i + 1]
        })
        .collect()
}

fn gradient_field(u: &SpectralField) -> Result<SpectralField> {
    let mut parts = Vec::with_capacity(3 * u.components());
    for c in 0..u.components() {
        let uc = u.component_field(c);
        for a in 0..3 {
            parts.push(partial(&uc, a));
        }
    }
    SpectralField::stack(&parts)
}

/// `sum_i w_i (a . grad) b_i` pointwise, with `grad_b` stored as `3 i + j`.
fn stretch(w: &RealField, a: &RealField, grad_b: &RealField, idx: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let mut d = 0.0;
        for j in 0..3 {
            d += a.component(j)[idx] * grad_b.component(3 * i + j)[idx];
        }
        s += w.component(i)[idx] * d;
    }
    s
}

fn assemble(
    variant: LedgerVariant,
    split: &DuhamelSplit,
    names: &[&str],
    signs: &[f64],
    sample_times: Vec<f64>,
    sample_energy: Vec<f64>,
    rows: Vec<Vec<f64>>,
    remainder: Option<Vec<f64>>,
    cutoff: Option<CutoffTrack>,
) -> Result<EnstrophyLedger> {
    let fd = centred_derivative(&sample_times, &sample_energy);
    let inner = 1..sample_times.len() - 1;
    let terms: Vec<Vec<f64>> = rows[inner.clone()].to_vec();
    let defect: Vec<f64> = terms
        .iter()
        .zip(&fd)
        .map(|(row, d)| {
            let s: f64 = row.iter().zip(signs).map(|(y, s)| s * y).collect::<CompensatedSum>().value();
            d - s
        })
        .collect();
    for row in &terms {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "enstrophy ledger term".into(),
            });
        }
    }
    Ok(EnstrophyLedger {
        variant,
        t_ref: split.t_ref,
        term_names: names.iter().map(|s| s.to_string()).collect(),
        signs: signs.to_vec(),
        times: sample_times[inner.clone()].to_vec(),
        energy: sample_energy[inner.clone()].to_vec(),
        sample_times,
        sample_energy,
        terms,
        fd_dedt: fd,
        defect,
        dealias_remainder: remainder.map(|r| r[inner].to_vec()),
        cutoff,
    })
}

pub const GLOBAL_TERMS: [&str; 6] = ["Y1", "Y2", "Y3", "Y4", "Y5", "Y6"];
pub const GLOBAL_SIGNS: [f64; 6] = [-1.0, 1.0, 1.0, 1.0, 1.0, 1.0];

/// Nonlinear enstrophy `E = 1/2 ||omega_nl||^2` and the six terms
/// `Y1 = ||grad omega_nl||^2`, `Y2 = -<omega_nl, (u.grad) omega_lin>` and the
/// four stretching pairings `<omega_nl, (a.grad) b>` with
/// `(a, b)` in `(nl, nl), (nl, lin), (lin, nl), (lin, lin)`.
///
/// Triple products of fields inside the dealiasing cube are integrated
/// exactly by the grid sum.
pub fn global_enstrophy_ledger(split: &DuhamelSplit, window: &LedgerWindow) -> Result<EnstrophyLedger> {
    let pos = window_positions(split, window)?;
    let grid = *split.u_nl[pos[0]].grid();
    let dv = grid.cell_volume();
    let vol = grid.volume();
    let rows: Vec<(f64, Vec<f64>)> = pos
        .par_iter()
        .map(|&k| -> Result<(f64, Vec<f64>)> {
            let unl = &split.u_nl[k];
            let ulin = &split.u_lin[k];
            let wnl_s = curl(unl)?;
            let wlin_s = curl(ulin)?;
            let mut e = CompensatedSum::new();
            let mut y1 = CompensatedSum::new();
            for c in 0..3 {
                for (idx, v) in wnl_s.component(c).iter().enumerate() {
                    let a = v.norm_sqr();
                    e.add(a);
                    y1.add(4.0 * PI * PI * grid.frequency_norm_sq(idx) * a);
                }
            }
            let u = synthesize(&unl.add(ulin)?);
            let wnl = synthesize(&wnl_s);
            let wlin = synthesize(&wlin_s);
            let g_wlin = synthesize(&gradient_field(&wlin_s)?);
            let g_unl = synthesize(&gradient_field(unl)?);
            let g_ulin = synthesize(&gradient_field(ulin)?);
            let mut acc = [CompensatedSum::new(); 5];
            for idx in 0..grid.points() {
                acc[0].add(-stretch(&wnl, &u, &g_wlin, idx));
                acc[1].add(stretch(&wnl, &wnl, &g_unl, idx));
                acc[2].add(stretch(&wnl, &wnl, &g_ulin, idx));
                acc[3].add(stretch(&wnl, &wlin, &g_unl, idx));
                acc[4].add(stretch(&wnl, &wlin, &g_ulin, idx));
            }
            let mut row = vec![vol * y1.value()];
            row.extend(acc.iter().map(|a| dv * a.value()));
            Ok((0.5 * vol * e.value(), row))
        })
        .collect::<Result<_>>()?;
    let times: Vec<f64> = pos.iter().map(|&k| split.times[k]).collect();
    let energy = rows.iter().map(|r| r.0).collect();
    let rows = rows.into_iter().map(|r| r.1).collect();
    assemble(
        LedgerVariant::Global,
        split,
        &GLOBAL_TERMS,
        &GLOBAL_SIGNS,
        times,
        energy,
        rows,
        None,
        None,
    )
}

/// Radial profile `eta(r) = max(min(A, r - R_-, R_+ - r), 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub r_minus: f64,
    pub r_plus: f64,
    pub plateau: f64,
}

/// Linear pieces `(a, b, c0, c1)` meaning `c0 + c1 r` on `[a, b]`.
type Pieces = Vec<(f64, f64, f64, f64)>;

impl CutoffProfile {
    pub fn eval(&self, r: f64) -> f64 {
        (self.plateau.min(r - self.r_minus).min(self.r_plus - r)).max(0.0)
    }

    /// `|grad eta|` away from the kinks: one on the ramps, zero elsewhere.
    pub fn slope(&self, r: f64) -> f64 {
        let e = self.eval(r);
        if e > 0.0 && e < self.plateau {
            1.0
        } else {
            0.0
        }
    }

    fn ramps(&self) -> (f64, f64) {
        let mid = 0.5 * (self.r_minus + self.r_plus);
        let a = (self.r_minus + self.plateau).min(mid);
        let b = (self.r_plus - self.plateau).max(mid);
        (a, b)
    }

    fn pieces(&self) -> Pieces {
        let (a, b) = self.ramps();
        let mut p = vec![(self.r_minus, a, -self.r_minus, 1.0)];
        if b > a {
            p.push((a, b, self.plateau, 0.0));
        }
        p.push((b, self.r_plus, self.r_plus, -1.0));
        p
    }

    fn shell_pieces(&self) -> Pieces {
        let (a, b) = self.ramps();
        if b > a {
            vec![(self.r_minus, a, 1.0, 0.0), (b, self.r_plus, 1.0, 0.0)]
        } else {
            vec![(self.r_minus, self.r_plus, 1.0, 0.0)]
        }
    }
}

/// Fourier transform `4 pi int h(r) r^2 sinc(2 pi rho r) dr` of a radial
/// piecewise-linear profile, by Gauss-Legendre on sub-intervals short
/// against the oscillation.
struct RadialTransform {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialTransform {
    fn new() -> Self {
        let (nodes, weights) = gauss_legendre(20);
        RadialTransform { nodes, weights }
    }

    fn eval(&self, pieces: &Pieces, rho: f64) -> f64 {
        let k = 2.0 * PI * rho;
        let mut acc = CompensatedSum::new();
        for &(a, b, c0, c1) in pieces {
            if b <= a {
                continue;
            }
            let subs = ((b - a) * rho * 2.0).ceil().max(1.0) as usize;
            let h = (b - a) / subs as f64;
            for s in 0..subs {
                let lo = a + s as f64 * h;
                for (x, w) in self.nodes.iter().zip(&self.weights) {
                    let r = lo + 0.5 * h * (x + 1.0);
                    let kr = k * r;
                    let sinc = if kr.abs() < 1e-6 {
                        1.0 - kr * kr / 6.0
                    } else {
                        kr.sin() / kr
                    };
                    acc.add(0.5 * h * w * (c0 + c1 * r) * r * r * sinc);
                }
            }
        }
        4.0 * PI * acc.value()
    }
}

/// `R_-(t) = R_- + C0 int (A + ||u||_inf)`, `R_+(t) = R_+ - C0 int (A + ||u||_inf)`
/// from the window start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovingCutoff {
    pub center: [f64; 3],
    pub r_minus: f64,
    pub r_plus: f64,
    pub plateau: f64,
    pub c0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffTrack {
    pub times: Vec<f64>,
    /// `C0 (A + ||u(t)||_inf)`.
    pub speed: Vec<f64>,
    pub r_minus: Vec<f64>,
    pub r_plus: Vec<f64>,
}

impl MovingCutoff {
    pub fn new(center: [f64; 3], r_minus: f64, r_plus: f64, plateau: f64, c0: f64) -> Result<Self> {
        if !(r_minus > 0.0 && r_plus > r_minus) {
            return Err(Error::param("r_minus", "need 0 < R_- < R_+"));
        }
        if !(plateau > 0.0 && c0 > 0.0) {
            return Err(Error::param("plateau", "plateau and C0 must be positive"));
        }
        Ok(MovingCutoff {
            center,
            r_minus,
            r_plus,
            plateau,
            c0,
        })
    }

    /// Radii at `times` given `||u||_inf` there.
    pub fn track(&self, times: &[f64], linf: &[f64]) -> Result<CutoffTrack> {
        let speed: Vec<f64> = linf.iter().map(|m| self.c0 * (self.plateau + m)).collect();
        let moved = cumulative_trapezoid(times, &speed);
        let r_minus: Vec<f64> = moved.iter().map(|d| self.r_minus + d).collect();
        let r_plus: Vec<f64> = moved.iter().map(|d| self.r_plus - d).collect();
        for (i, t) in times.iter().enumerate() {
            if r_minus[i] >= r_plus[i] {
                return Err(Error::CutoffCollapse {
                    time: *t,
                    r_minus: r_minus[i],
                    r_plus: r_plus[i],
                });
            }
        }
        Ok(CutoffTrack {
            times: times.to_vec(),
            speed,
            r_minus,
            r_plus,
        })
    }

    pub fn profile_at(&self, track: &CutoffTrack, k: usize) -> CutoffProfile {
        CutoffProfile {
            r_minus: track.r_minus[k],
            r_plus: track.r_plus[k],
            plateau: self.plateau,
        }
    }
}

/// Modes of the padded grid that products of dealiased fields can reach,
/// with the phase `e^{2 pi i xi . x0}` of the cutoff centre.
struct PairingModes {
    grid: Grid3,
    index: Vec<usize>,
    xi: Vec<[f64; 3]>,
    norm_sq: Vec<i64>,
    phase: Vec<Complex64>,
    max_norm_sq: i64,
}

impl PairingModes {
    fn new(grid: Grid3, k_max: i64, center: [f64; 3]) -> Self {
        let mut index = Vec::new();
        let mut xi = Vec::new();
        let mut norm_sq = Vec::new();
        let mut phase = Vec::new();
        for idx in 0..grid.points() {
            let k = grid.mode(idx);
            if k.iter().any(|c| c.abs() > k_max) {
                continue;
            }
            let f = grid.frequency(idx);
            let arg = 2.0 * PI * (f[0] * center[0] + f[1] * center[1] + f[2] * center[2]);
            index.push(idx);
            xi.push(f);
            norm_sq.push(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
            phase.push(Complex64::from_polar(1.0, arg));
        }
        PairingModes {
            grid,
            index,
            xi,
            norm_sq,
            phase,
            max_norm_sq: 3 * k_max * k_max,
        }
    }

    /// Per-mode `H(|xi|) e^{2 pi i xi . x0}` for a radial profile.
    fn weights(&self, tr: &RadialTransform, pieces: &Pieces) -> Vec<Complex64> {
        let l = self.grid.length();
        let h: Vec<f64> = (0..=self.max_norm_sq)
            .map(|q| tr.eval(pieces, (q as f64).sqrt() / l))
            .collect();
        self.norm_sq
            .iter()
            .zip(&self.phase)
            .map(|(&q, p)| p * h[q as usize])
            .collect()
    }

    /// `int P w` where `w` has per-mode weights `wt` times `factor(xi)`.
    fn pair<F: Fn(&[f64; 3]) -> Complex64>(&self, p: &SpectralField, wt: &[Complex64], factor: F) -> f64 {
        let c = p.coeffs();
        self.index
            .iter()
            .zip(wt)
            .zip(&self.xi)
            .map(|((&i, w), xi)| (c[i] * w * factor(xi)).re)
            .collect::<CompensatedSum>()
            .value()
    }
}

fn coeffs_of(grid: Grid3, values: Vec<f64>) -> Result<SpectralField> {
    Ok(forward_unchecked(&RealField::from_values(grid, 1, values)?))
}

/// Physical fields of one split time on the padded grid.
struct LocalFields {
    u: RealField,
    wnl: RealField,
    wlin: RealField,
    g_wnl: RealField,
    g_wlin: RealField,
    g_unl: RealField,
    g_ulin: RealField,
    linf: f64,
}

fn local_fields(split: &DuhamelSplit, k: usize, m: usize) -> Result<LocalFields> {
    let unl = &split.u_nl[k];
    let ulin = &split.u_lin[k];
    let u_s = unl.add(ulin)?;
    let wnl_s = curl(unl)?;
    let wlin_s = curl(ulin)?;
    let u_grid = synthesize(&u_s);
    let linf = (0..u_grid.grid().points())
        .map(|i| u_grid.magnitude_at(i))
        .fold(0.0, f64::max);
    Ok(LocalFields {
        u: synthesize_padded(&u_s, m)?,
        wnl: synthesize_padded(&wnl_s, m)?,
        wlin: synthesize_padded(&wlin_s, m)?,
        g_wnl: synthesize_padded(&gradient_field(&wnl_s)?, m)?,
        g_wlin: synthesize_padded(&gradient_field(&wlin_s)?, m)?,
        g_unl: synthesize_padded(&gradient_field(unl)?, m)?,
        g_ulin: synthesize_padded(&gradient_field(ulin)?, m)?,
        linf,
    })
}

/// Spectra of the products that the local terms pair against `eta`.
struct LocalProducts {
    w2: SpectralField,
    gw2: SpectralField,
    w2u: [SpectralField; 3],
    y5_to_y9: [SpectralField; 5],
    remainder: SpectralField,
}

fn local_products(f: &LocalFields, k_dealias: i64) -> Result<LocalProducts> {
    let grid = *f.u.grid();
    let p = grid.points();
    let mut w2 = vec![0.0; p];
    let mut gw2 = vec![0.0; p];
    let mut w2u = [vec![0.0; p], vec![0.0; p], vec![0.0; p]];
    let mut yy: [Vec<f64>; 5] = Default::default();
    for v in yy.iter_mut() {
        *v = vec![0.0; p];
    }
    let mut x = [vec![0.0; p], vec![0.0; p], vec![0.0; p]];
    for idx in 0..p {
        let a = f.wnl.magnitude_sq_at(idx);
        w2[idx] = a;
        gw2[idx] = f.g_wnl.magnitude_sq_at(idx);
        for c in 0..3 {
            w2u[c][idx] = a * f.u.component(c)[idx];
        }
        yy[0][idx] = -stretch(&f.wnl, &f.u, &f.g_wlin, idx);
        yy[1][idx] = stretch(&f.wnl, &f.wnl, &f.g_unl, idx);
        yy[2][idx] = stretch(&f.wnl, &f.wnl, &f.g_ulin, idx);
        yy[3][idx] = stretch(&f.wnl, &f.wlin, &f.g_unl, idx);
        yy[4][idx] = stretch(&f.wnl, &f.wlin, &f.g_ulin, idx);
        // X = -(u . grad) omega + (omega . grad) u
        for i in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                let wj = f.wnl.component(j)[idx] + f.wlin.component(j)[idx];
                let gu = f.g_unl.component(3 * i + j)[idx] + f.g_ulin.component(3 * i + j)[idx];
                let gw = f.g_wnl.component(3 * i + j)[idx] + f.g_wlin.component(3 * i + j)[idx];
                s += wj * gu - f.u.component(j)[idx] * gw;
            }
            x[i][idx] = s;
        }
    }
    // (I - D) X, then its pointwise product with omega_nl.
    let mut rem = vec![0.0; p];
    for (i, xi) in x.into_iter().enumerate() {
        let mut hat = coeffs_of(grid, xi)?;
        let low = hat.clone();
        let mut low = low;
        low.truncate_cube(k_dealias);
        hat.axpy(-1.0, &low);
        let high = synthesize(&hat);
        for idx in 0..p {
            rem[idx] -= f.wnl.component(i)[idx] * high.values()[idx];
        }
    }
    let [a, b, c] = w2u;
    let [y5, y6, y7, y8, y9] = yy;
    Ok(LocalProducts {
        w2: coeffs_of(grid, w2)?,
        gw2: coeffs_of(grid, gw2)?,
        w2u: [coeffs_of(grid, a)?, coeffs_of(grid, b)?, coeffs_of(grid, c)?],
        y5_to_y9: [
            coeffs_of(grid, y5)?,
            coeffs_of(grid, y6)?,
            coeffs_of(grid, y7)?,
            coeffs_of(grid, y8)?,
            coeffs_of(grid, y9)?,
        ],
        remainder: coeffs_of(grid, rem)?,
    })
}

fn padded_size(n: usize, k_dealias: i64) -> usize {
    let need = (6 * k_dealias + 2) as usize;
    let m = (2 * n).max(need);
    m + (m % 2)
}

pub const LOCAL_TERMS: [&str; 9] = ["Y1", "Y2", "Y3", "Y4", "Y5", "Y6", "Y7", "Y8", "Y9"];
pub const LOCAL_SIGNS: [f64; 9] = [-1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];

struct LocalSetup {
    pos: Vec<usize>,
    times: Vec<f64>,
    k_dealias: i64,
    m: usize,
    modes: PairingModes,
}

fn local_setup(split: &DuhamelSplit, window: &LedgerWindow, center: [f64; 3]) -> Result<LocalSetup> {
    let pos = window_positions(split, window)?;
    let grid = *split.u_nl[pos[0]].grid();
    let k_dealias = dealias_cutoff(grid.n(), split.dealias_fraction);
    let m = padded_size(grid.n(), k_dealias);
    let pgrid = Grid3::new(m, grid.length())?;
    let modes = PairingModes::new(pgrid, 3 * k_dealias, center);
    Ok(LocalSetup {
        times: pos.iter().map(|&k| split.times[k]).collect(),
        pos,
        k_dealias,
        m,
        modes,
    })
}

fn check_in_box(cutoff: &MovingCutoff, grid: &Grid3) -> Result<()> {
    if cutoff.r_plus >= 0.5 * grid.length() {
        return Err(Error::OutsideBox(format!(
            "cutoff outer radius {} reaches half the box {}",
            cutoff.r_plus,
            0.5 * grid.length()
        )));
    }
    Ok(())
}

/// Local enstrophy `E = 1/2 int |omega_nl|^2 eta` with the moving cutoff and
/// its nine-term balance. Every term pairs an exactly computed product
/// spectrum with the analytic Fourier coefficients of `eta`, `grad eta`,
/// `Lap eta` and the ramp indicator, so the distributional derivatives of
/// the Lipschitz cutoff enter exactly.
pub fn local_enstrophy_ledger(
    split: &DuhamelSplit,
    cutoff: &MovingCutoff,
    window: &LedgerWindow,
) -> Result<EnstrophyLedger> {
    let setup = local_setup(split, window, cutoff.center)?;
    let grid = *split.u_nl[setup.pos[0]].grid();
    check_in_box(cutoff, &grid)?;
    let fields: Vec<LocalFields> = setup
        .pos
        .par_iter()
        .map(|&k| local_fields(split, k, setup.m))
        .collect::<Result<_>>()?;
    let linf: Vec<f64> = fields.iter().map(|f| f.linf).collect();
    let track = cutoff.track(&setup.times, &linf)?;
    let tr = RadialTransform::new();
    let two_pi = 2.0 * PI;
    let results: Vec<(f64, Vec<f64>, f64)> = fields
        .into_par_iter()
        .enumerate()
        .map(|(k, f)| -> Result<(f64, Vec<f64>, f64)> {
            let prof = cutoff.profile_at(&track, k);
            let w_eta = setup.modes.weights(&tr, &prof.pieces());
            let w_shell = setup.modes.weights(&tr, &prof.shell_pieces());
            let pr = local_products(&f, setup.k_dealias)?;
            let one = |_: &[f64; 3]| Complex64::new(1.0, 0.0);
            let e = 0.5 * setup.modes.pair(&pr.w2, &w_eta, one);
            let y1 = setup.modes.pair(&pr.gw2, &w_eta, one);
            let y2 = 0.5 * track.speed[k] * setup.modes.pair(&pr.w2, &w_shell, one);
            let y3 = 0.5
                * setup.modes.pair(&pr.w2, &w_eta, |xi| {
                    Complex64::new(-two_pi * two_pi * (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]), 0.0)
                });
            let mut y4 = 0.0;
            for a in 0..3 {
                y4 += 0.5 * setup.modes.pair(&pr.w2u[a], &w_eta, |xi| Complex64::new(0.0, -two_pi * xi[a]));
            }
            let mut row = vec![y1, y2, y3, y4];
            for p in &pr.y5_to_y9 {
                row.push(setup.modes.pair(p, &w_eta, one));
            }
            let rem = setup.modes.pair(&pr.remainder, &w_eta, one);
            Ok((e, row, rem))
        })
        .collect::<Result<_>>()?;
    let energy = results.iter().map(|r| r.0).collect();
    let remainder = results.iter().map(|r| r.2).collect();
    let rows = results.into_iter().map(|r| r.1).collect();
    assemble(
        LedgerVariant::Local,
        split,
        &LOCAL_TERMS,
        &LOCAL_SIGNS,
        setup.times,
        energy,
        rows,
        Some(remainder),
        Some(track),
    )
}

/// Ranges and draw count for choosing the cutoff radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSearch {
    pub center: [f64; 3],
    pub r_minus_range: (f64, f64),
    pub r_plus_range: (f64, f64),
    pub plateau: f64,
    pub c0: f64,
    pub seed: u64,
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffCandidate {
    pub r_minus: f64,
    pub r_plus: f64,
    /// `int |Y3| dt` over the window, absent when the radii are unusable.
    pub heat_flux: Option<f64>,
    pub rejection: Option<String>,
}

/// The first seeded uniform draw and the best of all draws by `int |Y3|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSelection {
    pub search: CutoffSearch,
    pub drawn: CutoffCandidate,
    pub best: Option<CutoffCandidate>,
    pub candidates: Vec<CutoffCandidate>,
}

pub fn select_cutoff_radii(
    split: &DuhamelSplit,
    window: &LedgerWindow,
    search: &CutoffSearch,
) -> Result<CutoffSelection> {
    let (a0, a1) = search.r_minus_range;
    let (b0, b1) = search.r_plus_range;
    if !(a0 > 0.0 && a1 >= a0 && b1 >= b0 && b0 > a1) {
        return Err(Error::param("r_minus_range", "need 0 < R_- range below the R_+ range"));
    }
    if search.candidates == 0 {
        return Err(Error::param("candidates", "need at least one draw"));
    }
    let setup = local_setup(split, window, search.center)?;
    let grid = *split.u_nl[setup.pos[0]].grid();
    let mut rng = random_stream(search.seed, 0);
    let draws: Vec<(f64, f64)> = (0..search.candidates)
        .map(|_| {
            let s: f64 = rng.gen();
            let u: f64 = rng.gen();
            (a0 + (a1 - a0) * s, b0 + (b1 - b0) * u)
        })
        .collect();
    let prepared: Vec<(SpectralField, f64)> = setup
        .pos
        .par_iter()
        .map(|&k| -> Result<(SpectralField, f64)> {
            let f = local_fields(split, k, setup.m)?;
            let p = f.wnl.grid().points();
            let w2: Vec<f64> = (0..p).map(|i| f.wnl.magnitude_sq_at(i)).collect();
            Ok((coeffs_of(*f.wnl.grid(), w2)?, f.linf))
        })
        .collect::<Result<_>>()?;
    let linf: Vec<f64> = prepared.iter().map(|p| p.1).collect();
    let tr = RadialTransform::new();
    let two_pi = 2.0 * PI;
    let candidates: Vec<CutoffCandidate> = draws
        .par_iter()
        .map(|&(rm, rp)| {
            let reject = |reason: String| CutoffCandidate {
                r_minus: rm,
                r_plus: rp,
                heat_flux: None,
                rejection: Some(reason),
            };
            let cutoff = match MovingCutoff::new(search.center, rm, rp, search.plateau, search.c0) {
                Ok(c) => c,
                Err(e) => return reject(e.to_string()),
            };
            if let Err(e) = check_in_box(&cutoff, &grid) {
                return reject(e.to_string());
            }
            let track = match cutoff.track(&setup.times, &linf) {
                Ok(t) => t,
                Err(e) => return reject(e.to_string()),
            };
            let y3: Vec<f64> = prepared
                .iter()
                .enumerate()
                .map(|(k, (w2, _))| {
                    let prof = cutoff.profile_at(&track, k);
                    let w = setup.modes.weights(&tr, &prof.pieces());
                    (0.5 * setup.modes.pair(w2, &w, |xi| {
                        Complex64::new(-two_pi * two_pi * (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]), 0.0)
                    }))
                    .abs()
                })
                .collect();
            CutoffCandidate {
                r_minus: rm,
                r_plus: rp,
                heat_flux: Some(trapezoid(&setup.times, &y3)),
                rejection: None,
            }
        })
        .collect();
    let mut best: Option<&CutoffCandidate> = None;
    for c in &candidates {
        if let Some(h) = c.heat_flux {
            if best.and_then(|b| b.heat_flux).is_none_or(|bh| h < bh) {
                best = Some(c);
            }
        }
    }
    Ok(CutoffSelection {
        search: *search,
        drawn: candidates[0].clone(),
        best: best.cloned(),
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_transform_at_zero_is_the_volume_integral() {
        let prof = CutoffProfile {
            r_minus: 1.0,
            r_plus: 3.0,
            plateau: 0.5,
        };
        let tr = RadialTransform::new();
        // 4 pi int r^2 h(r) dr for the trapezoid profile, piece by piece.
        let ramp_in = |a: f64, b: f64| (b.powi(4) - a.powi(4)) / 4.0 - (b.powi(3) - a.powi(3)) / 3.0;
        let plateau = 0.5 * (2.5f64.powi(3) - 1.5f64.powi(3)) / 3.0;
        let ramp_out = 3.0 * (3.0f64.powi(3) - 2.5f64.powi(3)) / 3.0 - (3.0f64.powi(4) - 2.5f64.powi(4)) / 4.0;
        let exact = 4.0 * PI * (ramp_in(1.0, 1.5) + plateau + ramp_out);
        assert!((tr.eval(&prof.pieces(), 0.0) - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn radial_transform_matches_shell_closed_form() {
        // Indicator of a ball of radius R: (sin kR - kR cos kR) 4 pi / k^3.
        let pieces = vec![(0.0, 2.0, 1.0, 0.0)];
        let tr = RadialTransform::new();
        for rho in [0.3, 1.7, 5.2] {
            let k = 2.0 * PI * rho;
            let exact = 4.0 * PI * ((k * 2.0).sin() - k * 2.0 * (k * 2.0).cos()) / k.powi(3);
            assert!((tr.eval(&pieces, rho) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn tent_profile_when_the_annulus_is_thin() {
        let prof = CutoffProfile {
            r_minus: 1.0,
            r_plus: 1.6,
            plateau: 0.5,
        };
        assert!((prof.eval(1.3) - 0.3).abs() < 1e-15);
        assert_eq!(prof.pieces().len(), 2);
        assert_eq!(prof.shell_pieces().len(), 1);
    }

    #[test]
    fn cutoff_collapse_is_reported() {
        let c = MovingCutoff::new([0.0; 3], 1.0, 1.5, 0.5, 1.0).unwrap();
        let t = [0.0, 0.5, 1.0];
        let e = c.track(&t, &[0.0, 0.0, 0.0]);
        assert!(matches!(e, Err(Error::CutoffCollapse { .. })));
    }
}
