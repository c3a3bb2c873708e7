//! Deterministic two-economy system with a constant exchange parameter.
//!
//! With `eps = (epsilon, 1 - epsilon)` held fixed the evolution law is the
//! linear recurrence `v(m+1) = M v(m)`. Its Z-transform gives
//! `S(z) X(z) = z v(0)` with `S(z) = zI - M`, and Cramer's rule expresses
//! `X(z)` and `Y(z)` as `det(m_x) / det(S)` and `det(m_y) / det(S)`. The
//! determinant factors as `(z - 1)(z - r)`, so the inverse transform is a
//! constant plus a geometric transient:
//!
//! ```text
//! x(m) = x* + (x0 - x*) r^m,   y(m) = y* + (y0 - y*) r^m
//! ```
//!
//! The solution is built from that eigen-structure rather than symbolic
//! partial fractions; the Z-domain matrices are kept for verification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::{AgentParams, NoiseBackground, RngSeed, Simulation};

pub type Matrix2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoEconomyParams {
    pub lambda_x: f64,
    pub lambda_y: f64,
    /// Share of the pool received by economy `x`; `y` receives `1 - epsilon`.
    pub epsilon: f64,
    pub x0: f64,
    pub y0: f64,
}

impl TwoEconomyParams {
    pub fn new(lambda_x: f64, lambda_y: f64, epsilon: f64, x0: f64, y0: f64) -> Result<Self> {
        let p = TwoEconomyParams {
            lambda_x,
            lambda_y,
            epsilon,
            x0,
            y0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_x", self.lambda_x),
            ("lambda_y", self.lambda_y),
            ("epsilon", self.epsilon),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name} = {v} outside [0, 1]")));
            }
        }
        for (name, v) in [("x0", self.x0), ("y0", self.y0)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(format!(
                    "{name} = {v} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }

    pub fn total_wealth(&self) -> f64 {
        self.x0 + self.y0
    }

    pub fn agents(&self) -> [AgentParams; 2] {
        [
            AgentParams {
                lambda: self.lambda_x,
                initial_wealth: self.x0,
            },
            AgentParams {
                lambda: self.lambda_y,
                initial_wealth: self.y0,
            },
        ]
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        TwoEconomyParams { epsilon, ..self }
    }

    /// `1 - r`, the weight tying the system to its fixed point.
    fn contraction_gap(&self) -> f64 {
        (1.0 - self.epsilon) * (1.0 - self.lambda_x) + self.epsilon * (1.0 - self.lambda_y)
    }
}

/// Time-domain update matrix `M`; both columns sum to one.
pub fn system_matrix(p: &TwoEconomyParams) -> Matrix2 {
    let e = p.epsilon;
    [
        [p.lambda_x + e * (1.0 - p.lambda_x), e * (1.0 - p.lambda_y)],
        [
            (1.0 - e) * (1.0 - p.lambda_x),
            p.lambda_y + (1.0 - e) * (1.0 - p.lambda_y),
        ],
    ]
}

/// `S(z) = zI - M`, written entry by entry as in the Z-domain system.
pub fn z_domain_matrix(p: &TwoEconomyParams, z: f64) -> Matrix2 {
    let e = p.epsilon;
    let (lx, ly) = (p.lambda_x, p.lambda_y);
    [
        [z - e * (1.0 - lx) - lx, e * (-1.0 + ly)],
        [(1.0 - e) * (-1.0 + lx), z - (1.0 - e) * (1.0 - ly) - ly],
    ]
}

/// Cramer numerators `m_x(z)` and `m_y(z)`: `S(z)` with one column replaced
/// by `z (x0, y0)`.
pub fn numerator_matrices(p: &TwoEconomyParams, z: f64) -> (Matrix2, Matrix2) {
    let s = z_domain_matrix(p, z);
    let m_x = [[p.x0 * z, s[0][1]], [p.y0 * z, s[1][1]]];
    let m_y = [[s[0][0], p.x0 * z], [s[1][0], p.y0 * z]];
    (m_x, m_y)
}

pub fn det2(m: &Matrix2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Monic quadratic `z^2 + linear z + constant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicPolynomial {
    pub linear: f64,
    pub constant: f64,
}

impl CharacteristicPolynomial {
    pub fn eval(&self, z: f64) -> f64 {
        z * z + self.linear * z + self.constant
    }
}

/// Expanded `det S(z) = z^2 + lx - e lx + e ly + z (-1 - lx + e lx - e ly)`.
pub fn characteristic_polynomial(p: &TwoEconomyParams) -> CharacteristicPolynomial {
    let (lx, ly, e) = (p.lambda_x, p.lambda_y, p.epsilon);
    CharacteristicPolynomial {
        linear: -1.0 - lx + e * lx - e * ly,
        constant: lx - e * lx + e * ly,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    /// `r < 1`: every trajectory decays geometrically to the fixed point.
    Convergent,
    /// `r = 1`: `M` is the identity and every state is fixed.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootPair {
    pub root_unit: f64,
    pub root_decay: f64,
}

impl RootPair {
    pub fn stability(&self) -> Stability {
        if self.root_decay < 1.0 {
            Stability::Convergent
        } else {
            Stability::Frozen
        }
    }
}

/// Roots of the characteristic polynomial: `1` and `r = lx - e lx + e ly`.
///
/// `r` is evaluated as `lx + e (ly - lx)` so that equal propensities give
/// exactly `r = lx`.
pub fn characteristic_roots(p: &TwoEconomyParams) -> RootPair {
    RootPair {
        root_unit: 1.0,
        root_decay: p.lambda_x + p.epsilon * (p.lambda_y - p.lambda_x),
    }
}

/// Equilibrium allocation; the initial state when the system is frozen.
pub fn fixed_point(p: &TwoEconomyParams) -> (f64, f64) {
    let gap = p.contraction_gap();
    if gap <= 0.0 {
        return (p.x0, p.y0);
    }
    let w = p.total_wealth();
    (
        w * p.epsilon * (1.0 - p.lambda_y) / gap,
        w * (1.0 - p.epsilon) * (1.0 - p.lambda_x) / gap,
    )
}

/// `x(m) = fixed_point_x + coeff_x r^m`, likewise for `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSolution {
    pub fixed_point_x: f64,
    pub fixed_point_y: f64,
    pub decay_root: f64,
    pub coeff_x: f64,
    pub coeff_y: f64,
    pub x0: f64,
    pub y0: f64,
    pub stability: Stability,
}

pub fn closed_form(p: &TwoEconomyParams) -> ClosedFormSolution {
    let roots = characteristic_roots(p);
    let (fx, fy) = fixed_point(p);
    let frozen = p.contraction_gap() <= 0.0;
    let coeff_x = if frozen { 0.0 } else { p.x0 - fx };
    ClosedFormSolution {
        fixed_point_x: fx,
        fixed_point_y: fy,
        decay_root: if frozen { 1.0 } else { roots.root_decay },
        coeff_x,
        coeff_y: -coeff_x,
        x0: p.x0,
        y0: p.y0,
        stability: if frozen {
            Stability::Frozen
        } else {
            roots.stability()
        },
    }
}

impl ClosedFormSolution {
    pub fn evaluate(&self, m: u64) -> (f64, f64) {
        if m == 0 || self.stability == Stability::Frozen {
            return (self.x0, self.y0);
        }
        let decay = match i32::try_from(m) {
            Ok(k) => self.decay_root.powi(k),
            Err(_) => self.decay_root.powf(m as f64),
        };
        let x = self.fixed_point_x + self.coeff_x * decay;
        let y = self.fixed_point_y + self.coeff_y * decay;
        debug_assert!({
            let w = self.x0 + self.y0;
            (x + y - w).abs() <= 1e-9 * w.max(1.0)
        });
        (x, y)
    }

    pub fn total_wealth(&self) -> f64 {
        self.x0 + self.y0
    }
}

/// Applies `M` directly `m` times.
pub fn iterate_system(p: &TwoEconomyParams, m: u64) -> (f64, f64) {
    let a = system_matrix(p);
    let (mut x, mut y) = (p.x0, p.y0);
    for _ in 0..m {
        (x, y) = (a[0][0] * x + a[0][1] * y, a[1][0] * x + a[1][1] * y);
    }
    (x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceRow {
    pub m: u64,
    pub ensemble_mean_x: f64,
    pub deterministic_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceReport {
    /// Constant exchange parameter of the deterministic arm.
    pub epsilon_det: f64,
    pub replicas: u64,
    pub transactions: u64,
    pub total_wealth: f64,
    /// `max_m |mean_x(m) - x_det(m)| / W`.
    pub max_relative_deviation: f64,
    /// Largest relative drift of total wealth in any stochastic replica.
    pub max_total_drift: f64,
    pub rows: Vec<ConcordanceRow>,
}

/// Compares the replica-averaged `x(m)` of a stochastic two-agent ensemble
/// with the closed form driven by the mean exchange parameter the
/// background induces.
pub fn concordance(
    p: &TwoEconomyParams,
    background: &NoiseBackground,
    replicas: u64,
    transactions: u64,
    base_seed: RngSeed,
) -> Result<ConcordanceReport> {
    p.validate()?;
    if replicas == 0 {
        return Err(Error::param("replicas must be >= 1"));
    }
    let epsilon_det = background.induced_epsilon_mean(2)?;
    let solution = closed_form(&p.with_epsilon(epsilon_det));
    let sim = Simulation::new(&p.agents(), background.clone())?;

    let mut sum_x = vec![0.0; transactions as usize + 1];
    let mut max_total_drift = 0.0_f64;
    if transactions > 0 {
        for k in 0..replicas {
            let outcome = sim.run(transactions, base_seed.offset(k), 1, |s| {
                sum_x[s.transaction_index as usize] += s.wealth[0];
            })?;
            max_total_drift = max_total_drift.max(outcome.max_total_drift);
        }
    } else {
        sum_x[0] = p.x0 * replicas as f64;
    }

    let w = p.total_wealth();
    let scale = if w > 0.0 { w } else { 1.0 };
    let rows: Vec<ConcordanceRow> = sum_x
        .iter()
        .enumerate()
        .map(|(m, s)| ConcordanceRow {
            m: m as u64,
            ensemble_mean_x: s / replicas as f64,
            deterministic_x: solution.evaluate(m as u64).0,
        })
        .collect();
    let max_relative_deviation = rows
        .iter()
        .map(|r| (r.ensemble_mean_x - r.deterministic_x).abs() / scale)
        .fold(0.0, f64::max);
    Ok(ConcordanceReport {
        epsilon_det,
        replicas,
        transactions,
        total_wealth: w,
        max_relative_deviation,
        max_total_drift,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> TwoEconomyParams {
        TwoEconomyParams::new(0.95, 0.8, 0.51, 1000.0, 2000.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn system_matrix_examples() {
        let frozen = TwoEconomyParams::new(1.0, 1.0, 0.3, 1.0, 2.0).unwrap();
        assert_eq!(system_matrix(&frozen), [[1.0, 0.0], [0.0, 1.0]]);

        let absorb = TwoEconomyParams::new(0.0, 0.0, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(system_matrix(&absorb), [[1.0, 1.0], [0.0, 0.0]]);

        let m = system_matrix(&reference());
        let expected = [[0.9755, 0.102], [0.0245, 0.898]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(m[i][j], expected[i][j], 1e-12), "{m:?}");
            }
        }
        assert!(close(m[0][0] + m[1][0], 1.0, 1e-15));
        assert!(close(m[0][1] + m[1][1], 1.0, 1e-15));
    }

    #[test]
    fn z_domain_matrix_is_zi_minus_m() {
        let p = reference();
        let m = system_matrix(&p);
        for z in [-1.3, 0.0, 0.5, 2.7] {
            let s = z_domain_matrix(&p, z);
            for i in 0..2 {
                for j in 0..2 {
                    let id = if i == j { z } else { 0.0 };
                    assert!(close(s[i][j], id - m[i][j], 1e-14));
                }
            }
        }
    }

    #[test]
    fn roots_examples() {
        let r = characteristic_roots(&reference());
        assert_eq!(r.root_unit, 1.0);
        assert!(close(r.root_decay, 0.8735, 1e-15));
        let m = system_matrix(&reference());
        assert!(close(r.root_decay, m[0][0] + m[1][1] - 1.0, 1e-12));

        let equal = TwoEconomyParams::new(0.6, 0.6, 0.27, 1.0, 1.0).unwrap();
        assert_eq!(characteristic_roots(&equal).root_decay, 0.6);

        let zero = TwoEconomyParams::new(0.0, 0.0, 0.4, 1.0, 1.0).unwrap();
        assert_eq!(characteristic_roots(&zero).root_decay, 0.0);
        assert_eq!(closed_form(&zero).evaluate(1), (0.8, 1.2));
    }

    #[test]
    fn fixed_point_examples() {
        let (x, y) = fixed_point(&reference());
        // 3000 * 0.51 * 0.2 / 0.1265
        assert!(close(x, 306.0 / 0.1265, 1e-9));
        assert!(close(x, 2418.97, 0.01) && close(y, 581.03, 0.01));
        assert!(close(x + y, 3000.0, 1e-9));

        let sym = TwoEconomyParams::new(0.7, 0.7, 0.5, 100.0, 300.0).unwrap();
        let (x, y) = fixed_point(&sym);
        assert!(close(x, 200.0, 1e-9) && close(y, 200.0, 1e-9));

        let winner = TwoEconomyParams::new(0.3, 0.9, 1.0, 100.0, 300.0).unwrap();
        assert_eq!(fixed_point(&winner), (400.0, 0.0));
    }

    #[test]
    fn fixed_point_matches_long_iteration() {
        let (x, y) = fixed_point(&reference());
        let (xi, yi) = iterate_system(&reference(), 200);
        assert!(close(x, xi, 1e-6 * 3000.0) && close(y, yi, 1e-6 * 3000.0));
    }

    #[test]
    fn closed_form_initial_and_frozen() {
        let sol = closed_form(&reference());
        assert_eq!(sol.evaluate(0), (1000.0, 2000.0));
        assert_eq!(sol.coeff_x + sol.coeff_y, 0.0);
        assert!(close(sol.coeff_x, -1418.97, 0.01));

        for p in [
            TwoEconomyParams::new(1.0, 1.0, 0.4, 5.0, 7.0).unwrap(),
            TwoEconomyParams::new(1.0, 0.3, 0.0, 5.0, 7.0).unwrap(),
            TwoEconomyParams::new(0.2, 1.0, 1.0, 5.0, 7.0).unwrap(),
        ] {
            let sol = closed_form(&p);
            assert_eq!(sol.stability, Stability::Frozen);
            assert_eq!(sol.decay_root, 1.0);
            for m in [0, 1, 50, 10_000] {
                assert_eq!(sol.evaluate(m), (5.0, 7.0));
            }
            assert_eq!(iterate_system(&p, 30), (5.0, 7.0));
        }
    }

    #[test]
    fn evaluate_converges_and_is_monotone() {
        let sol = closed_form(&reference());
        let (x, y) = sol.evaluate(500);
        assert!((x - sol.fixed_point_x).abs() <= 1e-20 * 3000.0 + 4.0 * f64::EPSILON * x);
        assert!((y - sol.fixed_point_y).abs() <= 1e-20 * 3000.0 + 4.0 * f64::EPSILON * x);
        let mut prev = sol.evaluate(0);
        for m in 1..=150 {
            let cur = sol.evaluate(m);
            assert!(cur.0 > prev.0 && cur.1 < prev.1, "m = {m}");
            prev = cur;
        }
        // Large m goes through powf without overflow.
        let far = sol.evaluate(u64::MAX);
        assert_eq!(far, (sol.fixed_point_x, sol.fixed_point_y));
    }

    #[test]
    fn determinant_of_s_matches_expansion() {
        let p = reference();
        let poly = characteristic_polynomial(&p);
        for z in [-2.0, -0.5, 0.0, 0.3, 0.8735, 1.0, 4.5] {
            let d = det2(&z_domain_matrix(&p, z));
            assert!(close(d, poly.eval(z), 1e-12), "z = {z}");
        }
        assert!(poly.eval(1.0).abs() < 1e-15);
        assert!(poly.eval(0.8735).abs() < 1e-15);
    }

    #[test]
    fn cramer_solution_matches_closed_form_transform() {
        // X(z) = det(m_x)/det(S) must equal the transform of x* + c r^m,
        // i.e. x* z/(z-1) + c z/(z-r), for |z| > 1.
        let p = reference();
        let sol = closed_form(&p);
        for z in [1.5, 2.0, 3.7, 10.0] {
            let (m_x, m_y) = numerator_matrices(&p, z);
            let det_s = det2(&z_domain_matrix(&p, z));
            let r = sol.decay_root;
            let big_x = sol.fixed_point_x * z / (z - 1.0) + sol.coeff_x * z / (z - r);
            let big_y = sol.fixed_point_y * z / (z - 1.0) + sol.coeff_y * z / (z - r);
            assert!(close(det2(&m_x) / det_s, big_x, 1e-9 * big_x.abs()));
            assert!(close(det2(&m_y) / det_s, big_y, 1e-9 * big_y.abs()));
        }
    }

    #[test]
    fn concordance_with_constant_background_is_exact() {
        let p = reference();
        let bg = NoiseBackground::constant(vec![0.51, 0.49]).unwrap();
        let rep = concordance(&p, &bg, 5, 200, RngSeed(1)).unwrap();
        assert_eq!(rep.epsilon_det, 0.51);
        assert_eq!(rep.rows.len(), 201);
        assert!(rep.max_relative_deviation <= 1e-9);
    }

    #[test]
    fn single_replica_deviation_is_bounded_by_transient_scale() {
        let p = reference();
        let rep = concordance(&p, &NoiseBackground::gaussian(), 1, 200, RngSeed(4)).unwrap();
        let (x_star, _) = fixed_point(&p.with_epsilon(0.5));
        let bound = (p.x0 - x_star).abs() / p.total_wealth();
        assert!(
            rep.max_relative_deviation <= bound,
            "{} > {bound}",
            rep.max_relative_deviation
        );
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(TwoEconomyParams::new(1.2, 0.5, 0.5, 1.0, 1.0).is_err());
        assert!(TwoEconomyParams::new(0.2, 0.5, -0.1, 1.0, 1.0).is_err());
        assert!(TwoEconomyParams::new(0.2, 0.5, 0.5, -1.0, 1.0).is_err());
        let p = reference();
        assert!(concordance(&p, &NoiseBackground::Uniform, 0, 10, RngSeed(0)).is_err());
    }
}
