use std::sync::Arc;

use crate::numeric::gauss_legendre;

/// Radial bump `phi`: equal to 1 on `[0, 1/2]`, 0 on `[1, inf)`, with a
/// `C^inf` monotone transition built from the integrated flat mollifier
/// `exp(-1/(1 - s^2))`.
#[derive(Clone, Debug)]
pub struct BumpProfile {
    nodes: Arc<Vec<f64>>,
    weights: Arc<Vec<f64>>,
    total: f64,
}

const ORDER: usize = 48;

fn mollifier(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

impl Default for BumpProfile {
    fn default() -> Self {
        Self::new()
    }
}

impl BumpProfile {
    pub fn new() -> Self {
        let (nodes, weights) = gauss_legendre(ORDER);
        let mut p = BumpProfile {
            nodes: Arc::new(nodes),
            weights: Arc::new(weights),
            total: 1.0,
        };
        p.total = p.primitive(1.0);
        p
    }

    /// `int_{-1}^{-1 + 2 s} mollifier`, split at the midpoint for accuracy.
    fn primitive(&self, s: f64) -> f64 {
        let upper = -1.0 + 2.0 * s;
        let mut acc = 0.0;
        let mut lo = -1.0;
        for hi in [0.0f64.min(upper), upper] {
            if hi > lo {
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                let mut part = 0.0;
                for (x, w) in self.nodes.iter().zip(self.weights.iter()) {
                    part += w * mollifier(mid + half * x);
                }
                acc += half * part;
                lo = hi;
            }
        }
        acc
    }

    /// Smooth step `S(s)` on `[0, 1]`: 0 at 0, 1 at 1, `S(s) + S(1 - s) = 1`.
    pub fn smooth_step(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else if s >= 1.0 {
            1.0
        } else if s > 0.5 {
            1.0 - self.primitive(1.0 - s) / self.total
        } else {
            self.primitive(s) / self.total
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.5 {
            1.0
        } else if r >= 1.0 {
            0.0
        } else {
            1.0 - self.smooth_step(2.0 * r - 1.0)
        }
    }

    /// Number of continuous derivatives; `None` means smooth.
    pub fn smoothness_order(&self) -> Option<u32> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_support_and_monotone() {
        let p = BumpProfile::new();
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(1.0), 0.0);
        assert_eq!(p.eval(3.0), 0.0);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let v = p.eval(0.5 + 0.5 * i as f64 / 1000.0);
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
        assert!((p.eval(0.75) - 0.5).abs() < 1e-14);
        for s in [0.1, 0.3, 0.45] {
            assert!((p.smooth_step(s) + p.smooth_step(1.0 - s) - 1.0).abs() < 1e-14);
        }
    }
}
