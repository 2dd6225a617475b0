#![allow(clippy::needless_range_loop)]
mod common;

use cfmimo::estimation::EstimatorSpec;
use cfmimo::montecarlo::LinkSampler;
use cfmimo::scenario::{assign_pilots, LinkStatistics};
use cfmimo::uplink::{
    local_combiner, lsfd_two_layer, obe_closed, optimal_estimator_rayleigh, se_closed_form_ul, se_uatf_mc,
    ul_closed_form_sinr, LocalScheme, NoiseTerm, ObeOptions,
};
use cfmimo::{ChannelStatistics, CMatrix, CVector, CombinerBank, Error, McSettings, RngStream, ScenarioConfig, C64};
use common::{rel_diff, Fixture};

/// Single link with `g = 1` deterministically, `p = σ² = 1`.
fn deterministic_unit() -> (ScenarioConfig, ChannelStatistics) {
    let cfg = ScenarioConfig {
        num_aps: 1,
        antennas: 1,
        num_ues: 1,
        tau_p: 1,
        ul_power: 1.0,
        dl_power_per_ue: 1.0,
        noise_power: 1.0,
        ..ScenarioConfig::default()
    };
    let link = LinkStatistics {
        los_mean: CVector::from_element(1, C64::new(1.0, 0.0)),
        nlos_corr: CMatrix::zeros(1, 1),
        beta: 1.0,
        rician_factor: f64::INFINITY,
    };
    (cfg, ChannelStatistics::from_links(1, 1, 1, vec![link]).unwrap())
}

#[test]
fn deterministic_single_link_has_unit_sinr() {
    let (cfg, stats) = deterministic_unit();
    let pilots = assign_pilots(&cfg);
    // A = 0 makes the estimate equal the known LoS exactly
    let est = cfmimo::EstimatorBank::build(&EstimatorSpec::Custom(vec![CMatrix::zeros(1, 1)]), &stats, &pilots, &cfg).unwrap();
    let bank = CombinerBank::identity(1, 1, 1);
    let cf = se_closed_form_ul(&bank, &stats, &pilots, &est, &cfg, "be").unwrap();
    let mc = se_uatf_mc(&LocalScheme::Bilinear(bank), &stats, &pilots, &est, &cfg, &McSettings::new(1000, 1)).unwrap();
    for r in [&cf.ues[0].sinr_cf, &mc.ues[0].sinr_mc] {
        assert!((r.unwrap() - 1.0).abs() < 1e-12);
    }
    assert!((mc.ues[0].se_mc.unwrap() - cfg.prelog()).abs() < 1e-12);
    assert!((cf.ues[0].se_cf.unwrap() - 199.0 / 200.0).abs() < 1e-12);
}

#[test]
fn sinr_is_scale_invariant() {
    let fx = Fixture::new(3, 2, 3, 2, false, 61);
    let est = fx.bank(&EstimatorSpec::Gls);
    let bank = CombinerBank::random(3, 3, 2, &mut RngStream::new(61, 0));
    // one complex factor per UE, shared by all of its APs
    let a = ul_closed_form_sinr(&bank, &fx.stats, &fx.pilots, &est, &fx.cfg, NoiseTerm::Direct).unwrap();
    let per_ue = bank.scaled(|_, k| C64::from_polar(1.0 + k as f64 * 7.0, 1.3 * k as f64));
    let b = ul_closed_form_sinr(&per_ue, &fx.stats, &fx.pilots, &est, &fx.cfg, NoiseTerm::Direct).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(rel_diff(*x, *y) <= 1e-9);
    }
    let settings = McSettings::new(2000, 3);
    let mc_a = se_uatf_mc(&LocalScheme::Bilinear(bank), &fx.stats, &fx.pilots, &est, &fx.cfg, &settings).unwrap();
    let mc_b = se_uatf_mc(&LocalScheme::Bilinear(per_ue), &fx.stats, &fx.pilots, &est, &fx.cfg, &settings).unwrap();
    for (x, y) in mc_a.ues.iter().zip(&mc_b.ues) {
        assert!(rel_diff(x.sinr_mc.unwrap(), y.sinr_mc.unwrap()) <= 1e-9);
    }
}

#[test]
fn identity_bank_is_maximum_ratio() {
    let fx = Fixture::new(2, 3, 3, 1, false, 62);
    let est = fx.bank(&EstimatorSpec::Mmse);
    let settings = McSettings::new(2000, 9);
    let be = se_uatf_mc(&LocalScheme::Bilinear(CombinerBank::identity(2, 3, 3)), &fx.stats, &fx.pilots, &est, &fx.cfg, &settings).unwrap();
    let mr = se_uatf_mc(&LocalScheme::Mr, &fx.stats, &fx.pilots, &est, &fx.cfg, &settings).unwrap();
    for (a, b) in be.ues.iter().zip(&mr.ues) {
        assert_eq!(a.sinr_mc, b.sinr_mc);
    }
}

/// Rayleigh fading, orthogonal pilots, MR with MMSE estimates:
/// `p_k (Σ_m tr Φ_mk)² / (Σ_l p_l Σ_m tr(Ř_ml Φ_mk) + σ² Σ_m tr Φ_mk)` with
/// `Φ = p_k τ_p Ř Ψ⁻¹ Ř`.
#[test]
fn classical_mr_closed_form() {
    let fx = Fixture::new(3, 3, 3, 3, true, 63);
    let est = fx.bank(&EstimatorSpec::Mmse);
    let cf = ul_closed_form_sinr(&CombinerBank::identity(3, 3, 3), &fx.stats, &fx.pilots, &est, &fx.cfg, NoiseTerm::Direct).unwrap();
    let tau = fx.cfg.tau_p as f64;
    for k in 0..3 {
        let pk = fx.cfg.ul_power(k);
        let (mut gain, mut inter) = (0.0, 0.0);
        for m in 0..3 {
            let r = fx.stats.corr(m, k);
            let psi = r * C64::new(pk * tau, 0.0) + CMatrix::identity(3, 3) * C64::new(fx.cfg.noise_power, 0.0);
            let phi = r * psi.try_inverse().unwrap() * r * C64::new(pk * tau, 0.0);
            gain += phi.trace().re;
            for l in 0..3 {
                inter += fx.cfg.ul_power(l) * (fx.stats.corr(m, l) * &phi).trace().re;
            }
        }
        let oracle = pk * gain * gain / (inter + fx.cfg.noise_power * gain);
        assert!(rel_diff(cf[k], oracle) <= 1e-9, "{} vs {oracle}", cf[k]);
    }
}

#[test]
fn closed_form_agrees_with_sampling() {
    let fx = Fixture::new(2, 2, 2, 1, false, 64);
    for spec in [EstimatorSpec::Mmse, EstimatorSpec::Gls] {
        let est = fx.bank(&spec);
        let bank = CombinerBank::random(2, 2, 2, &mut RngStream::new(64, 1));
        let cf = se_closed_form_ul(&bank, &fx.stats, &fx.pilots, &est, &fx.cfg, "be").unwrap();
        let mc = se_uatf_mc(&LocalScheme::Bilinear(bank), &fx.stats, &fx.pilots, &est, &fx.cfg, &McSettings::new(100_000, 5)).unwrap();
        for (c, m) in cf.ues.iter().zip(&mc.ues) {
            let (a, b, s) = (c.se_cf.unwrap(), m.se_mc.unwrap(), m.stderr.unwrap());
            assert!((a - b).abs() <= 3.0 * s, "{spec}: cf {a} mc {b} stderr {s}");
        }
    }
}

#[test]
fn lsfd_beats_equal_weights_and_reduces_at_one_ap() {
    let fx = Fixture::new(4, 2, 3, 1, false, 65);
    let est = fx.bank(&EstimatorSpec::Mmse);
    let settings = McSettings::new(4000, 2);
    for scheme in [LocalScheme::Lmmse, LocalScheme::Lrzf] {
        let out = lsfd_two_layer(&scheme, &fx.stats, &fx.pilots, &est, &fx.cfg, &settings).unwrap();
        for (a, b) in out.report.ues.iter().zip(&out.equal_weight.ues) {
            assert!(a.sinr_mc.unwrap() >= b.sinr_mc.unwrap() * (1.0 - 1e-9));
        }
        assert_eq!(out.weights[0].len(), 4);
    }
    let single = Fixture::new(1, 2, 3, 1, false, 66);
    let est = single.bank(&EstimatorSpec::Mmse);
    let out = lsfd_two_layer(&LocalScheme::Lmmse, &single.stats, &single.pilots, &est, &single.cfg, &settings).unwrap();
    let plain = se_uatf_mc(&LocalScheme::Lmmse, &single.stats, &single.pilots, &est, &single.cfg, &settings).unwrap();
    for (a, b) in out.report.ues.iter().zip(&plain.ues) {
        assert!(rel_diff(a.se_mc.unwrap(), b.se_mc.unwrap()) <= 1e-9);
    }
    assert!(lsfd_two_layer(&LocalScheme::Mr, &single.stats, &single.pilots, &est, &single.cfg, &settings).is_err());
}

#[test]
fn lrzf_nulls_other_users_at_low_noise() {
    let mut fx = Fixture::new(1, 4, 3, 3, false, 67);
    fx.cfg.noise_power *= 1e-12;
    let est = fx.bank(&EstimatorSpec::Mmse);
    let sampler = LinkSampler::new(&fx.stats, &fx.pilots, &fx.cfg, &est).unwrap();
    let mut draw = sampler.blank();
    let mut rng = RngStream::new(67, 0);
    for _ in 0..20 {
        sampler.draw_into(&mut rng, &mut draw);
        let v = local_combiner(&LocalScheme::Lrzf, &draw.ghat, &est, &fx.cfg, 0).unwrap().v;
        for k in 0..3 {
            let own = draw.ghat.get(0, k).dotc(&v[k]).norm();
            for l in (0..3).filter(|&l| l != k) {
                assert!(draw.ghat.get(0, l).dotc(&v[k]).norm() <= 1e-6 * own);
            }
        }
    }
}

#[test]
fn single_user_lmmse_beats_mr() {
    let fx = Fixture::new(2, 4, 1, 1, false, 68);
    let est = fx.bank(&EstimatorSpec::Mmse);
    let settings = McSettings::new(20_000, 4);
    let lmmse = se_uatf_mc(&LocalScheme::Lmmse, &fx.stats, &fx.pilots, &est, &fx.cfg, &settings).unwrap();
    let mr = se_uatf_mc(&LocalScheme::Mr, &fx.stats, &fx.pilots, &est, &fx.cfg, &settings).unwrap();
    assert!(lmmse.ues[0].sinr_mc.unwrap() >= mr.ues[0].sinr_mc.unwrap());
}

#[test]
fn optimal_estimator_rejects_rician() {
    let fx = Fixture::new(2, 2, 2, 1, false, 69);
    let err = optimal_estimator_rayleigh(&CombinerBank::identity(2, 2, 2), &fx.stats, &fx.pilots, &fx.cfg, &McSettings::new(2000, 1), 1e-10);
    assert!(matches!(err, Err(Error::RicianNotSupported { .. })));
}

#[test]
fn optimal_estimator_dominates_mmse_for_fixed_combiner() {
    let fx = Fixture::new(2, 2, 3, 2, true, 70);
    let bank = CombinerBank::identity(2, 3, 2);
    let opt = optimal_estimator_rayleigh(&bank, &fx.stats, &fx.pilots, &fx.cfg, &McSettings::new(50_000, 2), 1e-10).unwrap();
    let mmse = ul_closed_form_sinr(&bank, &fx.stats, &fx.pilots, &fx.bank(&EstimatorSpec::Mmse), &fx.cfg, NoiseTerm::Direct).unwrap();
    let obe = obe_closed(&fx.stats, &fx.pilots, &fx.bank(&EstimatorSpec::Mmse), &fx.cfg, &ObeOptions::default()).unwrap().sinr();
    // the sampled A* evaluated exactly can only lose to the true optimum
    let exact = ul_closed_form_sinr(&bank, &fx.stats, &fx.pilots, &fx.bank(&opt.spec()), &fx.cfg, NoiseTerm::Direct).unwrap();
    for k in 0..3 {
        assert!(exact[k] >= mmse[k] * 0.99, "UE {k}: A* {} vs MMSE {}", exact[k], mmse[k]);
        assert!(exact[k] <= obe[k] * (1.0 + 1e-6));
        assert!(rel_diff(opt.sinr()[k], obe[k]) <= 0.02, "UE {k}: {} vs {}", opt.sinr()[k], obe[k]);
    }
}
