mod common;

use cfmimo::downlink::{dl_power_allocation, precoder, se_dl_closed, se_dl_mc, DlFormula, DlNormalization};
use cfmimo::estimation::EstimatorSpec;
use cfmimo::montecarlo::LinkSampler;
use cfmimo::scenario::{assign_pilots, LinkStatistics};
use cfmimo::uplink::LocalScheme;
use cfmimo::{ChannelStatistics, CMatrix, CVector, CombinerBank, EstimatorBank, Error, McSettings, RngStream, ScenarioConfig, C64};
use common::{rel_diff, Fixture};

#[test]
fn power_split_meets_per_ue_budget() {
    for (m, seed) in [(10, 1), (4, 2), (1, 3)] {
        let fx = Fixture::new(m, 2, 5, 1, false, seed);
        let map = dl_power_allocation(&fx.stats, &fx.cfg);
        for k in 0..5 {
            assert!((map.ue_total(k) - 0.2).abs() <= 1e-15);
            if m == 1 {
                assert_eq!(map.power(0, k), 0.2);
            }
        }
        assert!(map.scaled_aps.is_empty());
    }
}

#[test]
fn equal_gains_split_power_equally() {
    let n = 2;
    let link = LinkStatistics {
        los_mean: CVector::zeros(n),
        nlos_corr: CMatrix::identity(n, n) * C64::new(1e-9, 0.0),
        beta: 1e-9,
        rician_factor: 0.0,
    };
    let stats = ChannelStatistics::from_links(4, 3, n, vec![link; 12]).unwrap();
    let cfg = ScenarioConfig { num_aps: 4, num_ues: 3, antennas: n, ..ScenarioConfig::default() };
    let map = dl_power_allocation(&stats, &cfg);
    assert!(map.power.iter().all(|p| (p - 0.05).abs() <= 1e-15));
}

#[test]
fn ap_budget_is_enforced() {
    let mut fx = Fixture::new(3, 2, 4, 1, false, 4);
    fx.cfg.ap_power_budget = Some(0.1);
    let map = dl_power_allocation(&fx.stats, &fx.cfg);
    for m in 0..3 {
        assert!(map.ap_total(m) <= 0.1 * (1.0 + 1e-12));
    }
}

#[test]
fn closed_form_normalization_delivers_allocated_power() {
    let fx = Fixture::new(2, 2, 3, 2, false, 5);
    for spec in [EstimatorSpec::Mmse, EstimatorSpec::Gls] {
        let est = fx.bank(&spec);
        let bank = CombinerBank::random(2, 3, 2, &mut RngStream::new(5, 1));
        let map = dl_power_allocation(&fx.stats, &fx.cfg);
        let out = se_dl_mc(&LocalScheme::Bilinear(bank), &map, DlNormalization::ClosedForm, &fx.stats, &fx.pilots, &est, &fx.cfg, &McSettings::new(100_000, 6)).unwrap();
        for (i, (&p, (&mc, &se))) in map.power.iter().zip(out.power_mc.iter().zip(&out.power_stderr)).enumerate() {
            assert!((mc - p).abs() <= 3.0 * se, "{spec} link {i}: E‖f‖² = {mc} vs p = {p} (stderr {se})");
        }
    }
}

#[test]
fn precoder_matches_definition_and_rejects_zero_matrix() {
    let fx = Fixture::new(2, 2, 2, 1, false, 7);
    let est = fx.bank(&EstimatorSpec::Mmse);
    let bank = CombinerBank::random(2, 2, 2, &mut RngStream::new(7, 0));
    let mut map = dl_power_allocation(&fx.stats, &fx.cfg);
    map.set_closed_form_eta(&bank, &est).unwrap();
    let sampler = LinkSampler::new(&fx.stats, &fx.pilots, &fx.cfg, &est).unwrap();
    let draw = {
        let mut d = sampler.blank();
        sampler.draw_into(&mut RngStream::new(1, 1), &mut d);
        d
    };
    let f = precoder(&bank, &draw.ghat, &map, 1, 0).unwrap();
    let eta = map.eta_cf.as_ref().unwrap()[2];
    let w = bank.w(1, 0);
    let avg = (w.adjoint() * w * &est.link(1, 0).est_second_moment).trace().re;
    assert!(rel_diff(eta, (map.power(1, 0) / avg).sqrt()) <= 1e-12);
    assert!((f - w * draw.ghat.get(1, 0) * C64::new(eta, 0.0)).norm() <= 1e-12 * eta);

    let zero = CombinerBank::from_matrices(2, 2, 2, vec![CMatrix::zeros(2, 2); 4]).unwrap();
    let mut map = dl_power_allocation(&fx.stats, &fx.cfg);
    assert!(matches!(map.set_closed_form_eta(&zero, &est), Err(Error::ZeroPrecoderPower { .. })));
    assert!(precoder(&zero, &draw.ghat, &map, 0, 0).is_err());
}

#[test]
fn deterministic_single_link_sinr_is_inverse_noise() {
    let cfg = ScenarioConfig {
        num_aps: 1,
        antennas: 1,
        num_ues: 1,
        ul_power: 1.0,
        dl_power_per_ue: 1.0,
        noise_power: 0.5,
        ..ScenarioConfig::default()
    };
    let link = LinkStatistics {
        los_mean: CVector::from_element(1, C64::new(1.0, 0.0)),
        nlos_corr: CMatrix::zeros(1, 1),
        beta: 1.0,
        rician_factor: f64::INFINITY,
    };
    let stats = ChannelStatistics::from_links(1, 1, 1, vec![link]).unwrap();
    let pilots = assign_pilots(&cfg);
    let est = EstimatorBank::build(&EstimatorSpec::Custom(vec![CMatrix::zeros(1, 1)]), &stats, &pilots, &cfg).unwrap();
    let bank = CombinerBank::identity(1, 1, 1);
    let map = dl_power_allocation(&stats, &cfg);
    let cf = se_dl_closed(&bank, &stats, &pilots, &est, &map, &cfg, DlFormula::Consistent).unwrap();
    let mc = se_dl_mc(&LocalScheme::Bilinear(bank), &map, DlNormalization::ClosedForm, &stats, &pilots, &est, &cfg, &McSettings::new(1000, 0)).unwrap();
    assert!((cf.report.ues[0].sinr_cf.unwrap() - 2.0).abs() <= 1e-12);
    assert!((mc.report.ues[0].sinr_mc.unwrap() - 2.0).abs() <= 1e-12);
}

/// Rayleigh fading, orthogonal pilots, MR precoding with MMSE estimates:
/// `(Σ_m √(p_mk tr Φ_mk))² / (Σ_l Σ_m p_ml tr(Ř_mk Φ_ml) / tr Φ_ml + σ²)`.
#[test]
fn classical_mr_precoding_closed_form() {
    let fx = Fixture::new(3, 2, 3, 3, true, 8);
    let est = fx.bank(&EstimatorSpec::Mmse);
    let map = dl_power_allocation(&fx.stats, &fx.cfg);
    let cf = se_dl_closed(&CombinerBank::identity(3, 3, 2), &fx.stats, &fx.pilots, &est, &map, &fx.cfg, DlFormula::Consistent).unwrap();
    let tau = fx.cfg.tau_p as f64;
    let phi = |m: usize, k: usize| {
        let r = fx.stats.corr(m, k);
        let p = fx.cfg.ul_power(k) * tau;
        let psi = r * C64::new(p, 0.0) + CMatrix::identity(2, 2) * C64::new(fx.cfg.noise_power, 0.0);
        r * psi.try_inverse().unwrap() * r * C64::new(p, 0.0)
    };
    for k in 0..3 {
        let gain: f64 = (0..3).map(|m| (map.power(m, k) * phi(m, k).trace().re).sqrt()).sum();
        let mut den = fx.cfg.noise_power;
        for l in 0..3 {
            for m in 0..3 {
                let p = phi(m, l);
                den += map.power(m, l) * (fx.stats.corr(m, k) * &p).trace().re / p.trace().re;
            }
        }
        let oracle = gain * gain / den;
        let got = cf.report.ues[k].sinr_cf.unwrap();
        assert!(rel_diff(got, oracle) <= 1e-9, "UE {k}: {got} vs {oracle}");
    }
}

#[test]
fn closed_form_agrees_with_sampling() {
    let fx = Fixture::new(2, 2, 2, 1, false, 9);
    for spec in [EstimatorSpec::Mmse, EstimatorSpec::Gls] {
        let est = fx.bank(&spec);
        let bank = CombinerBank::random(2, 2, 2, &mut RngStream::new(9, 2));
        let map = dl_power_allocation(&fx.stats, &fx.cfg);
        let cf = se_dl_closed(&bank, &fx.stats, &fx.pilots, &est, &map, &fx.cfg, DlFormula::Consistent).unwrap();
        let mc = se_dl_mc(&LocalScheme::Bilinear(bank), &map, DlNormalization::ClosedForm, &fx.stats, &fx.pilots, &est, &fx.cfg, &McSettings::new(100_000, 10)).unwrap();
        for (c, m) in cf.report.ues.iter().zip(&mc.report.ues) {
            let (a, b, s) = (c.se_cf.unwrap(), m.se_mc.unwrap(), m.stderr.unwrap());
            assert!(m.sinr_mc.unwrap() >= 0.0);
            assert!((a - b).abs() <= 3.0 * s, "{spec}: cf {a} mc {b} stderr {s}");
        }
    }
}

#[test]
fn precoder_scaling_is_normalized_away() {
    let fx = Fixture::new(3, 2, 3, 1, false, 11);
    let est = fx.bank(&EstimatorSpec::Gls);
    let bank = CombinerBank::random(3, 3, 2, &mut RngStream::new(11, 0));
    let map = dl_power_allocation(&fx.stats, &fx.cfg);
    let scaled = bank.scaled(|m, l| C64::from_polar(0.1 + 3.0 * m as f64 + l as f64, 0.9 * l as f64));
    let a = se_dl_closed(&bank, &fx.stats, &fx.pilots, &est, &map, &fx.cfg, DlFormula::Consistent).unwrap();
    let b = se_dl_closed(&scaled, &fx.stats, &fx.pilots, &est, &map, &fx.cfg, DlFormula::Consistent).unwrap();
    for (x, y) in a.report.ues.iter().zip(&b.report.ues) {
        assert!(rel_diff(x.sinr_cf.unwrap(), y.sinr_cf.unwrap()) <= 1e-9);
    }
}

#[test]
fn printed_mu_term_coincides_for_shared_matrices() {
    // with W_mk identical across UEs the two readings of the last μ term agree
    let fx = Fixture::new(2, 2, 3, 1, false, 12);
    let est = fx.bank(&EstimatorSpec::Mmse);
    let map = dl_power_allocation(&fx.stats, &fx.cfg);
    let bank = CombinerBank::identity(2, 3, 2);
    let a = se_dl_closed(&bank, &fx.stats, &fx.pilots, &est, &map, &fx.cfg, DlFormula::Consistent).unwrap();
    let b = se_dl_closed(&bank, &fx.stats, &fx.pilots, &est, &map, &fx.cfg, DlFormula::AsPrinted).unwrap();
    for (x, y) in a.report.ues.iter().zip(&b.report.ues) {
        assert!(rel_diff(x.sinr_cf.unwrap(), y.sinr_cf.unwrap()) <= 1e-12);
    }
}
