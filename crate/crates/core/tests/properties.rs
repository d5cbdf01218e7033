use std::sync::Arc;

use ndarray::Array2;
use nids::bilinear::{hirota_d, BilinearPair, ExpSum, ExpTerm, Orders, Point};
use nids::exact::{gauge_to_isospectral, refine_maximum, DromionParams, ExactSolution, LineSoliton};
use nids::grid::{FieldSnapshot, Grid};
use nids::io::{decode_snapshot, encode_snapshot};
use nids::model::{NonisoCoefficients, PhaseVariant, SpectralMode};
use nids::residual::{observed_order, reconstruct_potentials, BoundaryData};
use num_complex::Complex64;
use proptest::prelude::*;

fn coeffs() -> impl Strategy<Value = NonisoCoefficients> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_map(|(w0, w1, a1, a0)| NonisoCoefficients::new(w0, w1, a1, a0).unwrap())
}

fn mode() -> impl Strategy<Value = SpectralMode> {
    (0.3..1.0f64, -0.5..0.5f64, 0.3..1.0f64, -0.5..0.5f64, coeffs())
        .prop_map(|(kr, ki, lr, li, c)| SpectralMode::new(kr, ki, lr, li, c).unwrap())
}

fn dromion() -> impl Strategy<Value = DromionParams> {
    (0.0..2.0f64, 0.0..2.0f64, 0.5..3.0f64, 0.5..3.0f64, mode())
        .prop_filter("non-degenerate", |(a, b, g, d, _)| d * g - a * b > 0.1)
        .prop_map(|(a, b, g, d, m)| DromionParams::new(a, b, g, d, m).unwrap())
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

const VARIANTS: [PhaseVariant; 3] = [PhaseVariant::FullPlaneWave, PhaseVariant::DromionXi, PhaseVariant::DromionEta];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_parameters_solve_their_ode(m in mode(), t in -1.0..1.0f64) {
        let c = m.coeffs();
        let rhs = |p: Complex64| p * c.omega1 + Complex64::new(0.0, c.omega0);
        let h = 1e-4;
        for (p, rate) in [(m.evolve_k(t), m.k_rate(t)), (m.evolve_l(t), m.l_rate(t))] {
            prop_assert!((rate - rhs(p)).norm() < 1e-12);
        }
        let fd = (m.evolve_k(t + h) - m.evolve_k(t - h)) / (2.0 * h);
        prop_assert!((fd - rhs(m.evolve_k(t))).norm() < 1e-7);
    }

    #[test]
    fn real_parts_scale_exponentially(m in mode(), t in -1.0..1.0f64) {
        let w1 = m.coeffs().omega1;
        let expect = m.evolve_k(0.0).re * m.evolve_l(0.0).re * (2.0 * w1 * t).exp();
        prop_assert!((m.re_product(t) - expect).abs() < 1e-12 * expect.max(1.0));
    }

    #[test]
    fn phase_is_additive(m in mode(), t1 in -0.8..0.8f64, t2 in -0.8..0.8f64) {
        for v in VARIANTS {
            let whole = m.accumulated_phase(t1 + t2, v);
            let split = m.accumulated_phase(t1, v) + m.rebased(t1).accumulated_phase(t2, v);
            prop_assert!((whole - split).norm() < 1e-11 * (1.0 + whole.norm()), "{:?}", v);
        }
    }

    #[test]
    fn hirota_operator_antisymmetry(a in complex(), b in complex(), c in complex(), d in complex(),
                                    xi in -1.0..1.0f64, eta in -1.0..1.0f64) {
        let z = Complex64::new(0.0, 0.0);
        let g: Arc<ExpSum> = Arc::new(ExpSum::from_terms(vec![ExpTerm::steady(a, b, z)]));
        let f: Arc<ExpSum> = Arc::new(ExpSum::from_terms(vec![ExpTerm::steady(c, d, z)]));
        let gf = BilinearPair::new(g.clone(), f.clone());
        let fg = BilinearPair::new(f.clone(), g);
        let ff = BilinearPair::new(f.clone(), f);
        let p = Point::new(xi, eta, 0.0);
        for (n, m) in [(1u8, 0u8), (0, 1), (2, 0), (1, 1), (2, 1), (1, 2), (2, 2)] {
            let o = Orders::new(0, n, m);
            let sign = if (n + m) % 2 == 0 { 1.0 } else { -1.0 };
            let x = hirota_d(o, &gf, p, 1e-3).unwrap();
            let y = hirota_d(o, &fg, p, 1e-3).unwrap();
            prop_assert!((x - y * sign).norm() < 1e-12 * (1.0 + x.norm()));
            if (n + m) % 2 == 1 {
                prop_assert_eq!(hirota_d(o, &ff, p, 1e-3).unwrap(), z);
            }
        }
    }

    #[test]
    fn gauge_preserves_modulus_and_commutes_with_scaling(
        c in coeffs(), q in complex(), lam in complex(), u in -2.0..2.0f64, v in -2.0..2.0f64,
        xi in -10.0..10.0f64, eta in -10.0..10.0f64, t in -1.0..1.0f64,
    ) {
        let (qh, uh, vh) = gauge_to_isospectral(q, u, v, xi, eta, t, &c);
        prop_assert!((qh.norm() - q.norm()).abs() <= 1e-15 * (1.0 + q.norm()));
        let (qs, us, vs) = gauge_to_isospectral(q * lam, u + 1.0, v - 1.0, xi, eta, t, &c);
        prop_assert!((qs - qh * lam).norm() < 1e-14);
        prop_assert!((us - (uh + 1.0)).abs() < 1e-12 && (vs - (vh - 1.0)).abs() < 1e-12);
        // potential shifts depend on one coordinate only
        let (_, u2, v2) = gauge_to_isospectral(q, u, v, xi + 1.0, eta, t, &c);
        prop_assert!((u2 - uh).abs() < 1e-12);
        let (_, u3, v3) = gauge_to_isospectral(q, u, v, xi, eta + 1.0, t, &c);
        prop_assert!((v3 - vh).abs() < 1e-12);
        let _ = (v2, u3);
    }

    #[test]
    fn zero_coefficient_gauge_is_identity(q in complex(), u in -2.0..2.0f64, v in -2.0..2.0f64,
                                          xi in -10.0..10.0f64, eta in -10.0..10.0f64, t in -1.0..1.0f64) {
        let out = gauge_to_isospectral(q, u, v, xi, eta, t, &NonisoCoefficients::default());
        prop_assert_eq!(out.0.re.to_bits(), q.re.to_bits());
        prop_assert_eq!(out.0.im.to_bits(), q.im.to_bits());
        prop_assert_eq!(out.1.to_bits(), u.to_bits());
        prop_assert_eq!(out.2.to_bits(), v.to_bits());
    }

    #[test]
    fn snapshot_round_trip(n in 5usize..9, half in 0.1..20.0f64, t in -5.0..5.0f64,
                           bits in prop::collection::vec(any::<u64>(), 4 * 81)) {
        let grid = Grid::new(half, n).unwrap();
        let val = |k: usize| {
            let x = f64::from_bits(bits[k]);
            if x.is_finite() { x } else { k as f64 }
        };
        let q = Array2::from_shape_fn((n, n), |(i, j)| Complex64::new(val(i * n + j), val(81 + i * n + j)));
        let u = Array2::from_shape_fn((n, n), |(i, j)| val(162 + i * n + j));
        let v = Array2::from_shape_fn((n, n), |(i, j)| val(243 + i * n + j));
        let s = FieldSnapshot::new(grid, t, q, u, v).unwrap();
        let bytes = encode_snapshot(&s);
        let back = decode_snapshot(&bytes).unwrap();
        prop_assert_eq!(encode_snapshot(&back), bytes);
        prop_assert_eq!(back.t.to_bits(), t.to_bits());
    }

    #[test]
    fn dromion_amplitude_invariants(d in dromion(), t in -0.5..0.5f64) {
        let rho = d.rho(t);
        prop_assert!((rho - d.rho_from_constraint(t)).abs() < 1e-12 * rho);
        let kl = d.mode().re_product(t);
        prop_assert!((rho * rho - 16.0 * kl * d.determinant()).abs() < 1e-11 * rho * rho);
        let w1 = d.coeffs().omega1;
        prop_assert!((d.peak_amplitude(t) / d.peak_amplitude(0.0) - (w1 * t).exp()).abs() < 1e-12);
    }

    #[test]
    fn dromion_potentials_bounded_by_soliton_heights(d in dromion(), xi in -6.0..6.0f64, eta in -6.0..6.0f64,
                                                     t in -0.5..0.5f64) {
        let (u, v) = d.potentials(xi, eta, t);
        let (kr, lr) = (d.mode().evolve_k(t).re, d.mode().evolve_l(t).re);
        prop_assert!(u >= 0.0 && u <= 2.0 * lr * lr * (1.0 + 1e-12));
        prop_assert!(v >= 0.0 && v <= 2.0 * kr * kr * (1.0 + 1e-12));
        prop_assert!(d.q(xi, eta, t).norm() <= d.peak_amplitude(t) * (1.0 + 1e-12));
    }

    #[test]
    fn line_soliton_crest_height(m in mode(), t in -0.5..0.5f64, eta in -3.0..3.0f64) {
        let s = LineSoliton::new(m);
        let (kr, lr) = (m.evolve_k(t).re, m.evolve_l(t).re);
        // crest: χR + ψ = 0 solved for ξ at fixed η
        let chi0 = m.chi(0.0, eta, t, PhaseVariant::FullPlaneWave).re();
        let xi = -(chi0 + s.psi(t)) / kr;
        prop_assert!((s.q(xi, eta, t).norm() - 2.0 * (kr * lr).sqrt()).abs() < 1e-12);
        let (u, v) = s.potentials(xi, eta, t);
        prop_assert!((u - 2.0 * lr * lr).abs() < 1e-12 && (v - 2.0 * kr * kr).abs() < 1e-12);
    }

    #[test]
    fn observed_order_recovers_power_law(p in 1.0..6.0f64, c in 0.01..100.0f64) {
        let levels: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05].iter().map(|&h: &f64| (h, c * h.powf(p))).collect();
        prop_assert!((observed_order(&levels).unwrap() - p).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn reconstructed_potentials_converge(d in dromion(), t in -0.5..0.2f64) {
        let d = DromionParams::new(d.alpha(), d.beta(), d.gamma(), d.delta(),
            SpectralMode::new(0.5, 0.1, 0.5, -0.1, *d.coeffs()).unwrap()).unwrap();
        let sol = ExactSolution::Dromion(d);
        let err = |n: usize| {
            let grid = Grid::new(8.0, n).unwrap();
            let s = sol.snapshot(grid, t);
            let (u, v) = reconstruct_potentials(&s.q, &grid, t, &BoundaryData::EdgeValues(sol), None).unwrap();
            let eu = (&u - &s.u).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let ev = (&v - &s.v).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            eu.max(ev)
        };
        let (e1, e2, e3) = (err(65), err(129), err(257));
        prop_assert!(e3 < 1e-5, "{} {} {}", e1, e2, e3);
        let order = observed_order(&[(0.25, e1), (0.125, e2), (0.0625, e3)]).unwrap();
        prop_assert!(order > 3.5, "order {} from {} {} {}", order, e1, e2, e3);
    }

    #[test]
    fn refined_maximum_matches_peak_law(d in dromion(), t in -0.5..0.2f64) {
        let d = DromionParams::new(d.alpha(), d.beta(), d.gamma(), d.delta(),
            SpectralMode::new(0.6, 0.0, 0.5, 0.0, *d.coeffs()).unwrap()).unwrap();
        let grid = Grid::new(12.0, 97).unwrap();
        let (_, _, peak) = refine_maximum(&grid, |x, y| d.q(x, y, t).norm());
        prop_assert!((peak / d.peak_amplitude(t) - 1.0).abs() < 1e-6, "{} {}", peak, d.peak_amplitude(t));
    }
}
