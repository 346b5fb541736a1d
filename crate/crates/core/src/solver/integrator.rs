use crate::error::Result;
use crate::spectral::{heat_propagate, SpectralField};

/// One integrating-factor (Lawson) RK4 step of `dv/dt = Lap v + N(v)`.
///
/// `k1` may be supplied when `N(v)` is already known; the linear part is
/// integrated exactly, so `N = 0` reproduces the heat flow.
pub fn lawson_rk4_step<F>(v: &SpectralField, h: f64, k1: Option<SpectralField>, rhs: &F) -> Result<SpectralField>
where
    F: Fn(&SpectralField) -> Result<SpectralField>,
{
    let half = |f: &SpectralField| heat_propagate(f, 0.5 * h);
    let full = |f: &SpectralField| heat_propagate(f, h);
    let k1 = match k1 {
        Some(k) => k,
        None => rhs(v)?,
    };
    let ev_half = half(v)?;
    let mut a = v.clone();
    a.axpy(0.5 * h, &k1);
    let k2 = rhs(&half(&a)?)?;
    let mut b = ev_half.clone();
    b.axpy(0.5 * h, &k2);
    let k3 = rhs(&b)?;
    let mut c = full(v)?;
    c.axpy(h, &half(&k3)?);
    let k4 = rhs(&c)?;
    let mut out = full(v)?;
    let mut mid = k2;
    mid.axpy(1.0, &k3);
    out.axpy(h / 6.0, &full(&k1)?);
    out.axpy(h / 3.0, &half(&mid)?);
    out.axpy(h / 6.0, &k4);
    Ok(out)
}
