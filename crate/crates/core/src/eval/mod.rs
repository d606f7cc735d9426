//! End-to-end link evaluation, FLOPS accounting and noise-weight histograms.

mod flops;
mod histogram;
mod link;

pub use flops::{count_flops, FlopsReport, LayerFlops};
pub use histogram::{noise_weight_histogram, WeightHistogram};
pub use link::{
    ber_curve, collect_dataset, frame_seed, point_seed, receive_frame, run_link, simulate_frame, BerCurve, FrameObservation,
    FrameOutcome, LinkChannel, LinkConfig, LinkResult,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_profile, ProfileName};
    use crate::estimators::EstimatorKind;
    use crate::phy::{FrameSpec, HpaModel, Modulation, ModulationScheme};

    fn flat(n_frames: usize) -> LinkConfig {
        let mut cfg = LinkConfig::new(FrameSpec::ieee80211p(), ModulationScheme::new(Modulation::Qpsk), LinkChannel::Flat);
        cfg.genie = true;
        cfg.n_frames = n_frames;
        cfg
    }

    #[test]
    fn noiseless_genie_is_error_free() {
        let cfg = flat(3);
        let r = run_link(&cfg, f64::INFINITY, 1).unwrap();
        assert_eq!(r.bit_errors, 0);
        assert_eq!(r.total_bits, 3 * 50 * 48 * 2);
        assert_eq!(r.mse, 0.0);

        let mut faded = LinkConfig::new(
            FrameSpec::ieee80211p(),
            ModulationScheme::new(Modulation::Qam16),
            LinkChannel::Fading(make_profile(ProfileName::VtvSdww, 100.0).unwrap()),
        );
        faded.genie = true;
        faded.n_frames = 2;
        let r = run_link(&faded, f64::INFINITY, 2).unwrap();
        assert_eq!(r.bit_errors, 0);
    }

    #[test]
    fn noiseless_static_estimators_are_error_free() {
        for kind in [EstimatorKind::Dpa, EstimatorKind::Sta, EstimatorKind::Trfi] {
            let mut cfg = flat(2);
            cfg.genie = false;
            cfg.estimator = kind;
            cfg.scheme = ModulationScheme::new(Modulation::Qam64);
            let r = run_link(&cfg, f64::INFINITY, 3).unwrap();
            assert_eq!(r.bit_errors, 0, "{kind:?}");
            assert!(r.mse < 1e-20);
        }
    }

    #[test]
    fn deterministic_and_frame_count_exact() {
        let mut cfg = LinkConfig::new(
            FrameSpec::ieee80211p(),
            ModulationScheme::new(Modulation::Qpsk),
            LinkChannel::Fading(make_profile(ProfileName::VtvEx, 500.0).unwrap()),
        );
        cfg.n_frames = 4;
        cfg.hpa = HpaModel::rapp(2.0, 3.0);
        let a = run_link(&cfg, 20.0, 9).unwrap();
        let b = run_link(&cfg, 20.0, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_bits as usize, 4 * cfg.bits_per_frame());
        assert!(a.mse.is_finite());
    }

    #[test]
    fn single_point_curve_is_run_link() {
        let mut cfg = flat(2);
        cfg.snr_grid_db = vec![6.0];
        let curve = ber_curve(&cfg, "abc").unwrap();
        assert_eq!(curve.points.len(), 1);
        assert_eq!(curve.points[0], run_link(&cfg, 6.0, point_seed(cfg.seed, 0)).unwrap());
        cfg.snr_grid_db = (0..=8).map(|i| 5.0 * i as f64).collect();
        cfg.n_frames = 1;
        assert_eq!(ber_curve(&cfg, "abc").unwrap().points.len(), 9);
    }

    #[test]
    fn dataset_rows_per_frame() {
        let mut cfg = flat(1);
        cfg.genie = false;
        let ds = collect_dataset(&cfg, 30.0, 0..3).unwrap();
        assert_eq!(ds.len(), 150);
        assert_eq!((ds.d_in, ds.d_out), (104, 104));
        assert_eq!(collect_dataset(&cfg, 30.0, 0..3).unwrap(), ds);
    }

    #[test]
    fn model_dimension_checked() {
        let mut cfg = flat(1);
        cfg.model = Some(crate::neural::Mlp::zeros(&[10, 104], crate::neural::Activation::Identity).unwrap());
        assert!(run_link(&cfg, 10.0, 0).is_err());
    }
}
