use super::{rational_to_f64, MultiPoly};

/// A polynomial with coefficients rounded to doubles, for inner loops.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    arity: usize,
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    pub fn new(p: &MultiPoly) -> Self {
        let terms = p
            .terms()
            .iter()
            .map(|t| {
                let factors = t
                    .exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(v, &k)| (v, k as i32))
                    .collect();
                (rational_to_f64(&t.coeff), factors)
            })
            .collect();
        CompiledPoly { arity: p.arity(), terms }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.arity);
        let mut acc = 0.0;
        for (c, fs) in &self.terms {
            let mut m = *c;
            for &(v, k) in fs {
                m *= if k == 1 { x[v] } else { x[v].powi(k) };
            }
            acc += m;
        }
        acc
    }
}
