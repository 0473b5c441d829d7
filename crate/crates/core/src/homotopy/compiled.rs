//! Flat, allocation-free evaluation of a system and its jacobian.

use num_complex::Complex64;

use crate::polysys::{PolySystem, Polynomial};

#[derive(Debug, Clone)]
pub(crate) struct CompiledPoly {
    coefs: Vec<Complex64>,
    offsets: Vec<u32>,
    factors: Vec<(u32, u32)>,
}

impl CompiledPoly {
    pub(crate) fn new(p: &Polynomial) -> Self {
        let mut coefs = Vec::with_capacity(p.n_terms());
        let mut offsets = vec![0];
        let mut factors = Vec::new();
        for (e, c) in p.terms() {
            coefs.push(*c);
            factors.extend(
                e.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (i as u32, k)),
            );
            offsets.push(factors.len() as u32);
        }
        Self { coefs, offsets, factors }
    }

    #[inline]
    pub(crate) fn eval(&self, x: &[Complex64]) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for (k, c) in self.coefs.iter().enumerate() {
            let mut term = *c;
            for &(i, e) in &self.factors[self.offsets[k] as usize..self.offsets[k + 1] as usize] {
                let xi = x[i as usize];
                term *= match e {
                    1 => xi,
                    2 => xi * xi,
                    _ => xi.powu(e),
                };
            }
            sum += term;
        }
        sum
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledSystem {
    pub(crate) n: usize,
    equations: Vec<CompiledPoly>,
    jacobian: Vec<(usize, CompiledPoly)>,
}

impl CompiledSystem {
    pub(crate) fn new(system: &PolySystem) -> Self {
        let n = system.n_vars();
        let mut jacobian = Vec::new();
        for (i, p) in system.equations.iter().enumerate() {
            for v in 0..n {
                let d = p.derivative(v);
                if !d.is_zero() {
                    jacobian.push((i * n + v, CompiledPoly::new(&d)));
                }
            }
        }
        Self {
            n,
            equations: system.equations.iter().map(CompiledPoly::new).collect(),
            jacobian,
        }
    }

    pub(crate) fn eval_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (o, p) in out.iter_mut().zip(&self.equations) {
            *o = p.eval(x);
        }
    }

    /// Row-major jacobian.
    pub(crate) fn jacobian_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        for (k, p) in &self.jacobian {
            out[*k] = p.eval(x);
        }
    }
}
