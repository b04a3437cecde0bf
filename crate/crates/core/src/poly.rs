//! Dense univariate polynomials in the power basis, interpolation through
//! sample points, and real-root isolation with Sturm sequences.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial with coefficients in ascending degree order. The leading
/// coefficient may be zero, so the length is only an upper bound on degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            Self { coeffs: vec![0.0] }
        } else {
            Self { coeffs }
        }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Upper bound on the degree (trailing zero coefficients included).
    pub fn degree_bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn add_constant(&self, c: f64) -> Polynomial {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] += c;
        Polynomial::new(coeffs)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, &c| m.max(c.abs()))
    }

    /// Drops leading coefficients that are negligible relative to the largest
    /// coefficient magnitude.
    pub fn trimmed(&self, rel_tol: f64) -> Polynomial {
        let cutoff = self.max_abs_coeff() * rel_tol;
        let mut len = self.coeffs.len();
        while len > 1 && self.coeffs[len - 1].abs() <= cutoff {
            len -= 1;
        }
        Polynomial::new(self.coeffs[..len].to_vec())
    }

    /// `p(a*x + b)` expanded back into the power basis.
    pub fn compose_affine(&self, a: f64, b: f64) -> Polynomial {
        let lin = Polynomial::new(vec![b, a]);
        let mut result = Polynomial::constant(self.coeffs[self.coeffs.len() - 1]);
        for &c in self.coeffs.iter().rev().skip(1) {
            result = &(&result * &lin) + &Polynomial::constant(c);
        }
        result
    }
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = vec![0.0; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, &c) in rhs.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        Polynomial::new(coeffs)
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &rhs.scale(-1.0)
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut coeffs = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial::new(coeffs)
    }
}

/// Interpolating polynomial of degree `nodes.len() - 1` through the given
/// nodes, by solving the Vandermonde system.
pub fn interpolate(nodes: &[f64], values: &[f64]) -> Result<Polynomial> {
    if nodes.is_empty() || nodes.len() != values.len() {
        return Err(Error::InvalidInput(format!(
            "interpolation needs matching nonempty nodes/values (got {}/{})",
            nodes.len(),
            values.len()
        )));
    }
    let n = nodes.len();
    let mut vander = DMatrix::zeros(n, n);
    for (i, &x) in nodes.iter().enumerate() {
        let mut pow = 1.0;
        for j in 0..n {
            vander[(i, j)] = pow;
            pow *= x;
        }
    }
    let rhs = DVector::from_column_slice(values);
    let coeffs = vander
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidInput("interpolation nodes are not distinct".into()))?;
    Ok(Polynomial::new(coeffs.iter().cloned().collect()))
}

/// Cubic Hermite segment through `(t0, p0)` and `(t1, p1)` with end slopes
/// `v0`, `v1`, expanded in the time coordinate.
pub fn cubic_hermite(t0: f64, t1: f64, p0: f64, v0: f64, p1: f64, v1: f64) -> Polynomial {
    let h = t1 - t0;
    // Hermite basis in s = (t - t0)/h:
    //   h00 = 1 - 3s^2 + 2s^3, h10 = s - 2s^2 + s^3,
    //   h01 = 3s^2 - 2s^3,     h11 = -s^2 + s^3
    let c0 = p0;
    let c1 = h * v0;
    let c2 = -3.0 * p0 - 2.0 * h * v0 + 3.0 * p1 - h * v1;
    let c3 = 2.0 * p0 + h * v0 - 2.0 * p1 + h * v1;
    Polynomial::new(vec![c0, c1, c2, c3]).compose_affine(1.0 / h, -t0 / h)
}

pub mod roots {
    //! Distinct real roots of a polynomial on an interval, located by
    //! bisection guided by Sturm-sequence root counts. Works on f64
    //! coefficients; every chain element is rescaled to unit max coefficient,
    //! which preserves sign variations.

    use super::Polynomial;
    use crate::error::{Error, Result};

    // Relative cutoffs for treating coefficients and remainders as zero once
    // a polynomial is normalized to unit max coefficient.
    const COEFF_TRIM: f64 = 1e-12;
    const REMAINDER_ZERO: f64 = 1e-13;

    pub struct SturmChain {
        chain: Vec<Polynomial>,
    }

    impl SturmChain {
        pub fn new(p: &Polynomial) -> Self {
            // A multiple root makes the remainder sequence terminate at a
            // nontrivial gcd, and every chain element vanishes at that root,
            // which breaks sign counting at points landing exactly on it.
            // Dividing out the gcd and rebuilding counts the same distinct
            // roots with a square-free head.
            let mut head = normalize(&p.trimmed(COEFF_TRIM));
            loop {
                let chain = Self::build(&head);
                let tail = &chain.chain[chain.chain.len() - 1];
                if chain.chain.len() < 2 || tail.degree_bound() == 0 {
                    return chain;
                }
                head = normalize(&poly_quot(&head, tail).trimmed(COEFF_TRIM));
                if head.degree_bound() == 0 {
                    return chain;
                }
            }
        }

        fn build(p: &Polynomial) -> Self {
            if p.degree_bound() == 0 {
                return Self {
                    chain: vec![p.clone()],
                };
            }
            let dp = normalize(&p.derivative().trimmed(COEFF_TRIM));
            let mut chain = vec![p.clone(), dp];
            loop {
                let n = chain.len();
                if chain[n - 1].degree_bound() == 0 {
                    break;
                }
                let rem = poly_rem(&chain[n - 2], &chain[n - 1]).trimmed(COEFF_TRIM);
                if rem.max_abs_coeff() < REMAINDER_ZERO {
                    break;
                }
                chain.push(normalize(&rem.scale(-1.0)));
            }
            Self { chain }
        }

        fn sign_variations(&self, x: f64) -> usize {
            let mut variations = 0;
            let mut last_sign = 0i8;
            for p in &self.chain {
                let v = p.eval(x);
                let sign = if v > 0.0 {
                    1
                } else if v < 0.0 {
                    -1
                } else {
                    continue;
                };
                if last_sign != 0 && sign != last_sign {
                    variations += 1;
                }
                last_sign = sign;
            }
            variations
        }

        /// Number of distinct real roots in the half-open interval `(a, b]`.
        pub fn count_roots(&self, a: f64, b: f64) -> usize {
            self.sign_variations(a)
                .saturating_sub(self.sign_variations(b))
        }
    }

    fn normalize(p: &Polynomial) -> Polynomial {
        let m = p.max_abs_coeff();
        if m > 0.0 {
            p.scale(1.0 / m)
        } else {
            p.clone()
        }
    }

    fn poly_rem(num: &Polynomial, den: &Polynomial) -> Polynomial {
        let den_coeffs = den.coeffs();
        let dn = den_coeffs.len();
        let lead = den_coeffs[dn - 1];
        let mut rem: Vec<f64> = num.coeffs().to_vec();
        while rem.len() >= dn && dn > 1 {
            let factor = rem[rem.len() - 1] / lead;
            let shift = rem.len() - dn;
            for i in 0..dn - 1 {
                rem[shift + i] -= factor * den_coeffs[i];
            }
            rem.pop();
        }
        Polynomial::new(rem)
    }

    // Quotient of the division `num / den`, remainder discarded.
    fn poly_quot(num: &Polynomial, den: &Polynomial) -> Polynomial {
        let den_coeffs = den.coeffs();
        let dn = den_coeffs.len();
        let lead = den_coeffs[dn - 1];
        let mut rem: Vec<f64> = num.coeffs().to_vec();
        if rem.len() < dn || dn == 1 {
            if dn == 1 {
                return num.scale(1.0 / lead);
            }
            return Polynomial::zero();
        }
        let mut quot = vec![0.0; rem.len() - dn + 1];
        while rem.len() >= dn {
            let factor = rem[rem.len() - 1] / lead;
            let shift = rem.len() - dn;
            quot[shift] = factor;
            for i in 0..dn - 1 {
                rem[shift + i] -= factor * den_coeffs[i];
            }
            rem.pop();
        }
        Polynomial::new(quot)
    }

    /// Distinct real roots of `p` in `[a, b]`, each located to within `tol`.
    /// Roots are returned sorted; clusters tighter than `tol` may merge.
    pub fn isolate_roots(p: &Polynomial, a: f64, b: f64, tol: f64) -> Result<Vec<f64>> {
        assert!(a < b && tol > 0.0);
        let trimmed = p.trimmed(COEFF_TRIM);
        if trimmed.max_abs_coeff() == 0.0 || trimmed.degree_bound() == 0 {
            return Ok(Vec::new());
        }
        let chain = SturmChain::new(&trimmed);
        let mut found = Vec::new();
        // Roots exactly at `a` belong to the enclosing cell boundary and are
        // deliberately excluded by the (a, b] count convention.
        let mut stack = vec![(a, b, chain.count_roots(a, b))];
        let mut steps = 0usize;
        let step_budget = 256 * (trimmed.degree_bound() + 1);
        while let Some((lo, hi, count)) = stack.pop() {
            steps += 1;
            if steps > step_budget {
                return Err(Error::RootIsolation { start: a, end: b });
            }
            if count == 0 {
                continue;
            }
            if hi - lo < tol {
                found.push(0.5 * (lo + hi));
                continue;
            }
            if count == 1 {
                found.push(refine(&chain, lo, hi, tol));
                continue;
            }
            let mut mid = 0.5 * (lo + hi);
            // Subdivision points must not sit on a root, or the half-open
            // counts on either side become unreliable.
            let mut nudge = (hi - lo) * 1e-3;
            for _ in 0..4 {
                if trimmed.eval(mid) != 0.0 {
                    break;
                }
                mid += nudge;
                nudge *= 2.0;
            }
            let left = chain.count_roots(lo, mid);
            let right = chain.count_roots(mid, hi);
            stack.push((lo, mid, left));
            stack.push((mid, hi, right));
        }
        found.sort_by(|x, y| x.partial_cmp(y).unwrap());
        found.dedup_by(|x, y| (*x - *y).abs() < tol);
        Ok(found)
    }

    fn refine(chain: &SturmChain, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if chain.count_roots(lo, mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}
