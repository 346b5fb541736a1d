use super::field::RealField;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Riemann-sum `L^p` norm of the pointwise Euclidean magnitude; `p = f64::INFINITY`
/// gives the grid maximum.
pub fn lp_norm(f: &RealField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::param("p", format!("exponent {p} must be >= 1")));
    }
    let pts = f.grid().points();
    if p.is_infinite() {
        return Ok((0..pts).map(|i| f.magnitude_at(i)).fold(0.0, f64::max));
    }
    let mut acc = CompensatedSum::new();
    if p == 2.0 {
        for i in 0..pts {
            acc.add(f.magnitude_sq_at(i));
        }
    } else {
        for i in 0..pts {
            acc.add(f.magnitude_at(i).powf(p));
        }
    }
    Ok((acc.value() * f.grid().cell_volume()).powf(1.0 / p))
}

/// Riemann-sum `L^p` norm restricted to grid points selected by `mask`.
pub fn lp_norm_masked<M>(f: &RealField, p: f64, mask: M) -> Result<f64>
where
    M: Fn([f64; 3]) -> bool,
{
    if p.is_nan() || p < 1.0 {
        return Err(Error::param("p", format!("exponent {p} must be >= 1")));
    }
    let g = *f.grid();
    let sel = (0..g.points()).filter(|&i| mask(g.position(i)));
    if p.is_infinite() {
        return Ok(sel.map(|i| f.magnitude_at(i)).fold(0.0, f64::max));
    }
    let mut acc = CompensatedSum::new();
    for i in sel {
        acc.add(f.magnitude_at(i).powf(p));
    }
    Ok((acc.value() * g.cell_volume()).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::Grid3;

    #[test]
    fn constants_and_exponents() {
        let g = Grid3::new(8, 2.0).unwrap();
        let f = RealField::from_fn(g, 1, |_, o| o[0] = -3.0);
        for p in [1.0, 2.0, 3.0, 7.5] {
            let expect = 3.0 * 8f64.powf(1.0 / p);
            assert!((lp_norm(&f, p).unwrap() - expect).abs() < 1e-12 * expect);
        }
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 3.0);
        assert!(lp_norm(&f, 0.5).is_err());
        assert_eq!(lp_norm(&RealField::zeros(g, 3), 3.0).unwrap(), 0.0);
    }
}
