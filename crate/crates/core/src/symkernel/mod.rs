//! Exact scalar kernel: rationals, sparse polynomials on named charts, and
//! polynomial maps between charts.

mod linear;
mod parse;
mod poly;
mod polymap;
mod rat;

pub use linear::solve_linear;
pub use parse::parse_scalar;
pub use poly::{sum, Chart, ChartRef, Exps, ScalarFn};
pub use polymap::{monomials_up_to, PolyMap};
pub use rat::{ParseRatError, Rat};

pub(crate) use poly::is_identifier;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymError {
    #[error("variable index {index} out of range for chart of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("chart mismatch: expected `{expected}`, found `{found}`")]
    ChartMismatch { expected: String, found: String },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("invalid variable name `{0}`")]
    BadVariable(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("shape error: {0}")]
    Shape(String),
}

/// Square matrix of polynomials, row-major `m[row][col]`.
pub type Matrix = Vec<Vec<ScalarFn>>;

/// Partial derivative with range checking.
pub fn partial_derivative(f: &ScalarFn, var_index: usize) -> Result<ScalarFn, SymError> {
    f.partial_derivative(var_index)
}

pub fn pullback(f: &ScalarFn, phi: &PolyMap) -> Result<ScalarFn, SymError> {
    phi.pullback(f)
}

pub fn jacobian(phi: &PolyMap) -> Matrix {
    phi.jacobian()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chart2() -> ChartRef {
        Chart::from_names("M", &["x", "y"])
    }

    fn p(s: &str) -> ScalarFn {
        ScalarFn::parse(&chart2(), s).unwrap()
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(p("x^2*y").diff(0), p("2*x*y"));
        assert!(p("7").diff(1).is_zero());
        assert!(partial_derivative(&p("x"), 2).is_err());
    }

    /// Lagrange interpolation of f(t) = t^3 - t at 4 nodes, differentiated
    /// as a cubic through divided differences.
    #[test]
    fn derivative_matches_interpolation_oracle() {
        let c = Chart::from_names("L", &["x"]);
        let f = ScalarFn::parse(&c, "x^3 - x").unwrap();
        let df = f.diff(0);
        let nodes: Vec<Rat> = [-1, 0, 1, 2].iter().map(|&k| Rat::int(k)).collect();
        let vals: Vec<Rat> = nodes
            .iter()
            .map(|t| f.eval(std::slice::from_ref(t)))
            .collect();
        // Newton divided differences.
        let mut dd = vals.clone();
        let mut coef = vec![dd[0].clone()];
        for lvl in 1..4 {
            for i in 0..4 - lvl {
                dd[i] = &(&dd[i + 1] - &dd[i]) / &(&nodes[i + lvl] - &nodes[i]);
            }
            coef.push(dd[0].clone());
        }
        let x = ScalarFn::var(&c, 0);
        let mut newton = ScalarFn::zero(&c);
        let mut basis = ScalarFn::one(&c);
        for (k, a) in coef.iter().enumerate() {
            newton += &basis.scale(a);
            basis = &basis * &(&x - &ScalarFn::constant(&c, nodes[k].clone()));
        }
        assert_eq!(newton, f);
        assert_eq!(newton.diff(0), df);
        assert_eq!(df, ScalarFn::parse(&c, "3*x^2 - 1").unwrap());
    }

    fn arb_poly(vars: usize, deg: u32) -> impl Strategy<Value = (Vec<i64>, u32)> {
        let n = monomials_up_to(vars, deg).len();
        (proptest::collection::vec(-3i64..=3, n), Just(deg))
    }

    fn build(chart: &ChartRef, coefs: &[i64], deg: u32) -> ScalarFn {
        let ms = monomials_up_to(chart.dim(), deg);
        let terms = ms
            .into_iter()
            .zip(coefs)
            .map(|(e, c)| (e, Rat::int(*c)))
            .collect();
        ScalarFn::from_terms(chart, terms)
    }

    proptest! {
        #[test]
        fn ring_axioms((a, d) in arb_poly(2, 3), (b, _) in arb_poly(2, 3), (c, _) in arb_poly(2, 3)) {
            let m = chart2();
            let (a, b, c) = (build(&m, &a, d), build(&m, &b, d), build(&m, &c, d));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert!((&a - &a).is_zero());
            let s = a.to_string();
            prop_assert_eq!(ScalarFn::parse(&m, &s).unwrap(), a);
        }

        #[test]
        fn derivatives_commute((a, d) in arb_poly(3, 3)) {
            let m = Chart::from_names("N", &["x", "y", "z"]);
            let f = build(&m, &a, d);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(f.diff(i).diff(j), f.diff(j).diff(i));
                }
            }
        }

        #[test]
        fn pullback_is_ring_hom_and_chain_rule(
            (a, d) in arb_poly(2, 2), (b, _) in arb_poly(2, 2),
            (p0, _) in arb_poly(2, 2), (p1, _) in arb_poly(2, 2)
        ) {
            let src = Chart::from_names("S", &["u", "v"]);
            let tgt = chart2();
            let f = build(&tgt, &a, d);
            let g = build(&tgt, &b, d);
            let phi = PolyMap::new(&src, &tgt, vec![build(&src, &p0, 2), build(&src, &p1, 2)]).unwrap();
            prop_assert_eq!(phi.pull(&(&f * &g)), &phi.pull(&f) * &phi.pull(&g));
            prop_assert_eq!(phi.pull(&(&f + &g)), &phi.pull(&f) + &phi.pull(&g));
            let jac = phi.jacobian();
            for i in 0..2 {
                let lhs = phi.pull(&f).diff(i);
                let mut rhs = ScalarFn::zero(&src);
                for a in 0..2 {
                    rhs += &(&phi.pull(&f.diff(a)) * &jac[a][i]);
                }
                prop_assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn identity_jacobian() {
        let m = chart2();
        let j = PolyMap::identity(&m).jacobian();
        assert_eq!(j[0][0], ScalarFn::one(&m));
        assert!(j[0][1].is_zero());
        assert_eq!(j[1][1], ScalarFn::one(&m));
    }

    #[test]
    fn embed_split_and_scaling() {
        let m = chart2();
        let f = p("x^2*y + 3*y - 2");
        let parts = f.split_by(&[1]);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].1, p("-2"));
        assert_eq!(parts[1].1, p("x^2 + 3"));
        assert_eq!(f.set_zero(&[1]), p("-2"));
        assert_eq!(f.scale_vars(&[1], &Rat::int(2)), p("2*x^2*y + 6*y - 2"));
        let big = Chart::from_names("B", &["a", "x", "b", "y"]);
        let g = f.embed(&big, &[1, 3]);
        assert_eq!(g, ScalarFn::parse(&big, "x^2*y + 3*y - 2").unwrap());
        assert_eq!(m.dim(), 2);
        assert_eq!(f.leading_term(), "x^2*y");
    }
}
