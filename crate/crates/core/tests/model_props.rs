use proptest::prelude::*;

use nlreg::internal_model::{LinearModel, PredictionModel, Saturation};
use nlreg::numerics::DenseMatrix;
use nlreg::plant::ChainStructure;
use nlreg::regulator::{control_law, tuning_schedule, GainSet, Multipliers, ScheduleFloors, StabilizerConfig};

fn vec_of(n: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, n)
}

proptest! {
    #[test]
    fn eta_jacobian_matches_finite_differences(eta in vec_of(4, 2.0), theta in vec_of(4, 2.0)) {
        let model = LinearModel::chain(2, 2, Saturation::with_linear_core(1.5, 0.6).unwrap());
        let jac = model.jacobian_eta(&eta, &theta);
        let h = 1e-6;
        for k in 0..4 {
            let (mut up, mut dn) = (eta.clone(), eta.clone());
            up[k] += h;
            dn[k] -= h;
            let (fu, fd) = (model.value(&up, &theta), model.value(&dn, &theta));
            for j in 0..2 {
                prop_assert!(((fu[j] - fd[j]) / (2.0 * h) - jac[(j, k)]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn theta_jacobian_is_the_regressor(eta in vec_of(2, 3.0), theta in vec_of(2, 2.0)) {
        let model = LinearModel::chain(2, 1, Saturation::tanh(2.0).unwrap());
        let jac = model.jacobian_theta(&eta, &theta);
        let sigma = model.sigma(0, &eta);
        for i in 0..2 {
            prop_assert!((jac[(0, i)] - sigma[i]).abs() <= 1e-15);
        }
    }

    #[test]
    fn control_law_is_linear(
        chi in vec_of(3, 1.0), zeta in vec_of(1, 1.0), eta1 in vec_of(1, 1.0),
        chi2 in vec_of(3, 1.0), zeta2 in vec_of(1, 1.0), eta2 in vec_of(1, 1.0),
        a in -2.0f64..2.0,
    ) {
        let s = ChainStructure::new(0, 1, vec![3]).unwrap();
        let cfg = StabilizerConfig::new(&s, 3.0, 4.0, vec![vec![1.0, 3.0, 3.0]], DenseMatrix::identity(1).scale(-1.0), None).unwrap();
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + a * q).collect::<Vec<_>>();
        let lhs = control_law(&cfg, &s, &mix(&chi, &chi2), &mix(&zeta, &zeta2), &mix(&eta1, &eta2), None);
        let u1 = control_law(&cfg, &s, &chi, &zeta, &eta1, None);
        let u2 = control_law(&cfg, &s, &chi2, &zeta2, &eta2, None);
        prop_assert!((lhs[0] - (u1[0] + a * u2[0])).abs() <= 1e-9 * (1.0 + lhs[0].abs()));
    }

    #[test]
    fn schedule_respects_floors(mg in 0.5f64..8.0, mk in 0.5f64..4.0, ml in 0.5f64..4.0, kpg in 0.0f64..5.0) {
        let seed = GainSet::new(5.0, 2.0, 6.0, 20.0).unwrap();
        let floors = ScheduleFloors { kappa_per_g: kpg, ell_per_kappa: 1.0 };
        let m = Multipliers { g: mg, kappa: mk, ell: ml, ..Default::default() };
        if let Ok(gs) = tuning_schedule(&seed, &m, &floors) {
            prop_assert!(gs.kappa >= kpg * gs.g && gs.ell >= gs.kappa);
            prop_assert!(gs.kappa >= 6.0 * mk && gs.ell >= 20.0 * ml);
            prop_assert_eq!(gs.rho, 5.0);
        }
    }
}
