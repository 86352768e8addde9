//! Taylor coefficients of solutions of polynomial systems by series recursion.
//!
//! Every monomial is built as a chain of products sharing common prefixes,
//! and coefficient `j` of a product is a Cauchy sum over coefficients `<= j`.

use crate::poly::{rational_to_f64, PolyVector};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy)]
enum Node {
    One,
    Var(usize),
    Mul(usize, usize),
}

#[derive(Debug, Clone)]
pub struct SeriesTape {
    n_state: usize,
    n_vars: usize,
    nodes: Vec<Node>,
    /// Per component: (coefficient, node).
    rows: Vec<Vec<(f64, usize)>>,
}

impl SeriesTape {
    pub fn new(rhs: &PolyVector, n_state: usize) -> Self {
        let n_vars = rhs.arity;
        let mut nodes = vec![Node::One];
        let mut memo: HashMap<Vec<u32>, usize> = HashMap::new();
        memo.insert(vec![0; n_vars], 0);
        let var_nodes: Vec<usize> = (0..n_vars)
            .map(|i| {
                nodes.push(Node::Var(i));
                let mut e = vec![0; n_vars];
                e[i] = 1;
                memo.insert(e, nodes.len() - 1);
                nodes.len() - 1
            })
            .collect();
        fn build(e: &[u32], memo: &mut HashMap<Vec<u32>, usize>, nodes: &mut Vec<Node>, var_nodes: &[usize]) -> usize {
            if let Some(&i) = memo.get(e) {
                return i;
            }
            let v = e.iter().rposition(|&k| k > 0).expect("nonconstant monomial");
            let mut parent = e.to_vec();
            parent[v] -= 1;
            let p = build(&parent, memo, nodes, var_nodes);
            nodes.push(Node::Mul(p, var_nodes[v]));
            let id = nodes.len() - 1;
            memo.insert(e.to_vec(), id);
            id
        }
        let rows = rhs
            .components
            .iter()
            .map(|p| {
                p.terms()
                    .iter()
                    .map(|t| (rational_to_f64(&t.coeff), build(&t.exponents, &mut memo, &mut nodes, &var_nodes)))
                    .collect()
            })
            .collect();
        SeriesTape { n_state, n_vars, nodes, rows }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Coefficients `c[i][0..=order]` of the solution through `y0`.
    ///
    /// `inputs[j]` are Taylor coefficients of input `j`, `forcing[i]` those of
    /// an additive term in equation `i`.
    pub fn coefficients(&self, y0: &[f64], inputs: &[Vec<f64>], forcing: &[Vec<f64>], order: usize) -> Vec<Vec<f64>> {
        let k1 = order + 1;
        let mut ys: Vec<Vec<f64>> = y0.iter().map(|&v| {
            let mut c = vec![0.0; k1];
            c[0] = v;
            c
        }).collect();
        let mut vals = vec![0.0; self.nodes.len() * k1];
        for j in 0..order {
            for (n, node) in self.nodes.iter().enumerate() {
                let v = match *node {
                    Node::One => {
                        if j == 0 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Node::Var(i) => {
                        if i < self.n_state {
                            ys[i][j]
                        } else {
                            inputs[i - self.n_state].get(j).copied().unwrap_or(0.0)
                        }
                    }
                    Node::Mul(a, b) => {
                        let (ra, rb) = (a * k1, b * k1);
                        let mut acc = 0.0;
                        for i in 0..=j {
                            acc += vals[ra + i] * vals[rb + j - i];
                        }
                        acc
                    }
                };
                vals[n * k1 + j] = v;
            }
            for (i, row) in self.rows.iter().enumerate() {
                let mut acc = forcing.get(i).and_then(|f| f.get(j)).copied().unwrap_or(0.0);
                for &(c, n) in row {
                    acc += c * vals[n * k1 + j];
                }
                ys[i][j + 1] = acc / (j as f64 + 1.0);
            }
        }
        debug_assert_eq!(self.n_vars, self.n_state + inputs.len());
        ys
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MultiPoly;

    #[test]
    fn exponential_coefficients() {
        let rhs = PolyVector::new(1, vec!["x1".parse().unwrap()]).unwrap();
        let tape = SeriesTape::new(&rhs, 1);
        let c = tape.coefficients(&[1.0], &[], &[], 6);
        let mut f = 1.0;
        for (j, &cj) in c[0].iter().enumerate() {
            if j > 0 {
                f *= j as f64;
            }
            assert!((cj - 1.0 / f).abs() < 1e-15);
        }
    }

    #[test]
    fn riccati_coefficients() {
        // y' = y^2, y(0) = 1 has y = 1/(1 - t) with all coefficients 1
        let rhs = PolyVector::new(1, vec!["x1^2".parse().unwrap()]).unwrap();
        let tape = SeriesTape::new(&rhs, 1);
        let c = tape.coefficients(&[1.0], &[], &[], 10);
        assert!(c[0].iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn shared_prefixes() {
        let p = MultiPoly::parse_with_arity("x1^3 + x1^2 + x1^2*x2", 2).unwrap();
        let rhs = PolyVector::new(2, vec![p.clone(), p]).unwrap();
        let tape = SeriesTape::new(&rhs, 2);
        // one, two vars, x1^2, x1^3, x1^2*x2
        assert_eq!(tape.n_nodes(), 6);
    }

    #[test]
    fn driven_by_input() {
        // y' = u with u(t) = t gives y = t^2 / 2
        let rhs = PolyVector::new(2, vec!["x2".parse::<MultiPoly>().unwrap()]).unwrap();
        let tape = SeriesTape::new(&rhs, 1);
        let c = tape.coefficients(&[0.0], &[vec![0.0, 1.0, 0.0, 0.0]], &[], 3);
        assert_eq!(c[0], vec![0.0, 0.0, 0.5, 0.0]);
    }
}
