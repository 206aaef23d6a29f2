//! Symmetric triangle rules, Gauss-Legendre edge rules, and the closed-form
//! integral of barycentric monomials.
//!
//! Weights are normalized to sum to one: the integral over a cell of measure
//! `|K|` is `|K| * sum(w_q * g(x_q))`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

/// Points in barycentric coordinates.
pub type TriangleRule = QuadratureRule<[f64; 3]>;
/// Points as the parameter `t` in `[0, 1]` along the edge.
pub type EdgeRule = QuadratureRule<f64>;

impl<P: Copy> QuadratureRule<P> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (P, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

impl TriangleRule {
    /// Reference coordinates `(x_hat, y_hat) = (lambda_1, lambda_2)`.
    pub fn reference_points(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.iter().map(|(l, w)| ([l[1], l[2]], w))
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `int_K l1^a1 l2^a2 l3^a3 = |K| 2! a1! a2! a3! / (2 + a1 + a2 + a3)!`.
pub fn barycentric_monomial_integral(alphas: [u32; 3], area: f64) -> f64 {
    let num = 2.0 * alphas.iter().map(|&a| factorial(a)).product::<f64>();
    area * num / factorial(2 + alphas.iter().sum::<u32>())
}

enum Orbit {
    /// Barycenter.
    S3(f64),
    /// Permutations of `(a, a, 1 - 2a)`.
    S21(f64, f64),
    /// Permutations of `(a, b, 1 - a - b)`.
    S111(f64, f64, f64),
}

// Orbit weights are totals over the orbit.
const RULE_4: &[Orbit] = &[
    Orbit::S21(0.445_948_490_915_964_886_3, 0.670_144_769_034_034_397_1),
    Orbit::S21(0.091_576_213_509_770_743_46, 0.329_855_230_965_965_602_9),
];

const RULE_6: &[Orbit] = &[
    Orbit::S21(0.249_286_745_170_910_421_3, 0.350_358_827_179_138_098_1),
    Orbit::S21(0.063_089_014_491_502_228_34, 0.152_534_719_110_620_450_8),
    Orbit::S111(
        0.053_145_049_844_816_947_35,
        0.310_352_451_033_784_405_4,
        0.497_106_453_710_241_451_2,
    ),
];

const RULE_8: &[Orbit] = &[
    Orbit::S3(0.144_315_607_677_787_168_3),
    Orbit::S21(0.459_292_588_292_723_156_0, 0.285_274_902_801_853_874_4),
    Orbit::S21(0.170_569_307_751_760_206_6, 0.309_652_111_604_154_750_9),
    Orbit::S21(0.050_547_228_317_030_975_46, 0.097_375_492_869_594_240_93),
    Orbit::S111(
        0.008_394_777_409_957_605_337,
        0.263_112_829_634_638_113_4,
        0.163_381_885_046_609_965_6,
    ),
];

const RULE_10: &[Orbit] = &[
    Orbit::S3(0.090_817_990_382_753_580_10),
    Orbit::S21(0.485_577_633_383_657_377_4, 0.110_177_873_269_400_114_2),
    Orbit::S21(0.109_481_575_485_037_054_8, 0.135_963_178_306_583_804_4),
    Orbit::S111(
        0.141_707_219_414_879_954_8,
        0.307_939_838_764_120_950_2,
        0.436_547_501_072_520_651_6,
    ),
    Orbit::S111(
        0.025_003_534_762_686_386_07,
        0.246_672_560_639_902_693_9,
        0.169_963_455_186_344_909_0,
    ),
    Orbit::S111(
        0.009_540_815_400_299_457_580,
        0.066_803_251_012_200_265_77,
        0.056_530_001_782_396_940_76,
    ),
];

fn expand(orbits: &[Orbit], exact_degree: usize) -> TriangleRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for o in orbits {
        match *o {
            Orbit::S3(w) => {
                points.push([1.0 / 3.0; 3]);
                weights.push(w);
            }
            Orbit::S21(a, w) => {
                let c = 1.0 - 2.0 * a;
                for p in [[a, a, c], [a, c, a], [c, a, a]] {
                    points.push(p);
                    weights.push(w / 3.0);
                }
            }
            Orbit::S111(a, b, w) => {
                let c = 1.0 - a - b;
                for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                    points.push(p);
                    weights.push(w / 6.0);
                }
            }
        }
    }
    TriangleRule {
        points,
        weights,
        exact_degree,
    }
}

/// Degrees of the shipped triangle rules.
pub const TRIANGLE_RULE_DEGREES: [usize; 6] = [1, 2, 4, 6, 8, 10];

fn shipped_rules() -> &'static [TriangleRule; 6] {
    static RULES: OnceLock<[TriangleRule; 6]> = OnceLock::new();
    RULES.get_or_init(|| {
        let a = 2.0 / 3.0;
        let b = 1.0 / 6.0;
        [
            TriangleRule {
                points: vec![[1.0 / 3.0; 3]],
                weights: vec![1.0],
                exact_degree: 1,
            },
            TriangleRule {
                points: vec![[a, b, b], [b, a, b], [b, b, a]],
                weights: vec![1.0 / 3.0; 3],
                exact_degree: 2,
            },
            expand(RULE_4, 4),
            expand(RULE_6, 6),
            expand(RULE_8, 8),
            expand(RULE_10, 10),
        ]
    })
}

/// Smallest shipped symmetric rule exact for polynomials of total degree
/// `degree`.
pub fn triangle_rule(degree: usize) -> Result<&'static TriangleRule> {
    if degree > 10 {
        return Err(Error::UnsupportedDegree(degree));
    }
    Ok(shipped_rules()
        .iter()
        .find(|r| r.exact_degree >= degree)
        .expect("degree <= 10 is always covered"))
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn gauss_legendre(n: usize) -> EdgeRule {
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-like initial guess, Newton to convergence
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points.push(0.5 * (x + 1.0));
        weights.push(0.5 * w);
    }
    EdgeRule {
        points,
        weights,
        exact_degree: 2 * n - 1,
    }
}

/// `num_points`-point Gauss-Legendre rule on `[0, 1]`, points ascending.
pub fn edge_gauss_rule(num_points: usize) -> Result<&'static EdgeRule> {
    static RULES: OnceLock<Vec<EdgeRule>> = OnceLock::new();
    if !(1..=10).contains(&num_points) {
        return Err(Error::Config(format!(
            "edge rule with {num_points} points (supported: 1..=10)"
        )));
    }
    let rules = RULES.get_or_init(|| {
        (1..=10)
            .map(|n| match n {
                1 => EdgeRule {
                    points: vec![0.5],
                    weights: vec![1.0],
                    exact_degree: 1,
                },
                _ => gauss_legendre(n),
            })
            .collect()
    });
    Ok(&rules[num_points - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomials(degree: u32) -> impl Iterator<Item = [u32; 3]> {
        (0..=degree).flat_map(move |a| {
            (0..=degree - a).flat_map(move |b| (0..=degree - a - b).map(move |c| [a, b, c]))
        })
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(barycentric_monomial_integral([0, 0, 0], 1.0), 1.0);
        let a = 0.37;
        assert!((barycentric_monomial_integral([1, 0, 0], a) - a / 3.0).abs() < 1e-16);
        assert!((barycentric_monomial_integral([1, 1, 1], a) - a / 60.0).abs() < 1e-16);
    }

    #[test]
    fn every_rule_is_exact_to_its_degree() {
        for &d in &TRIANGLE_RULE_DEGREES {
            let rule = triangle_rule(d).unwrap();
            assert_eq!(rule.exact_degree, d);
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for p in &rule.points {
                assert!(p.iter().all(|&l| (-1e-15..=1.0 + 1e-15).contains(&l)));
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
            for al in monomials(d as u32) {
                let q: f64 = rule
                    .iter()
                    .map(|(l, w)| w * (0..3).map(|i| l[i].powi(al[i] as i32)).product::<f64>())
                    .sum();
                let exact = barycentric_monomial_integral(al, 1.0);
                assert!(
                    (q - exact).abs() <= 1e-13 * exact,
                    "degree {d} monomial {al:?}: {q} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn rule_selection_and_worked_values() {
        let r1 = triangle_rule(1).unwrap();
        assert_eq!(r1.points, vec![[1.0 / 3.0; 3]]);
        assert_eq!(r1.weights, vec![1.0]);
        assert_eq!(triangle_rule(3).unwrap().exact_degree, 4);
        assert_eq!(triangle_rule(0).unwrap().exact_degree, 1);
        assert!(matches!(triangle_rule(11), Err(Error::UnsupportedDegree(11))));

        let r2 = triangle_rule(2).unwrap();
        let q: f64 = r2.iter().map(|(l, w)| w * l[0] * l[1]).sum();
        assert!((q - 1.0 / 12.0).abs() < 1e-15);

        let area = 0.3;
        let r8 = triangle_rule(8).unwrap();
        let q: f64 = area * r8.iter().map(|(l, w)| w * l[0].powi(4) * l[1].powi(4)).sum::<f64>();
        let exact = area * 2.0 * 24.0 * 24.0 / factorial(10);
        assert!((q - exact).abs() <= 1e-13 * exact);
    }

    #[test]
    fn gauss_legendre_rules() {
        let r = edge_gauss_rule(2).unwrap();
        let c = 0.5 / 3f64.sqrt();
        assert!((r.points[0] - (0.5 - c)).abs() < 1e-15);
        assert!((r.points[1] - (0.5 + c)).abs() < 1e-15);
        assert!((r.points[1] - 0.788675).abs() < 1e-6);
        assert_eq!(r.weights.len(), 2);
        assert!(r.weights.iter().all(|w| (w - 0.5).abs() < 1e-15));
        let cubic: f64 = r.iter().map(|(t, w)| w * t.powi(3)).sum();
        assert!((cubic - 0.25).abs() < 1e-15);

        let r1 = edge_gauss_rule(1).unwrap();
        assert_eq!((r1.points.clone(), r1.weights.clone()), (vec![0.5], vec![1.0]));

        for n in 1..=10 {
            let r = edge_gauss_rule(n).unwrap();
            assert_eq!(r.exact_degree, 2 * n - 1);
            for k in 0..=(2 * n - 1) as i32 {
                let q: f64 = r.iter().map(|(t, w)| w * t.powi(k)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
        assert!(edge_gauss_rule(0).is_err());
        assert!(edge_gauss_rule(11).is_err());
    }
}
