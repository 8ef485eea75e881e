//! Propagation model: Rician communication channel, rank-one sensing channel,
//! near-field self-interference channel between the collinear transmit and
//! receive arrays, and the bounded-uncertainty model for residual
//! self-interference after cancellation.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::beams::{steering_vector, ArrayGeometry, BeamError};

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("carrier frequency must be positive, got {0} GHz")]
    NonPositiveCarrier(f64),
    #[error("Rician K-factor must be nonnegative, got {0}")]
    NegativeKFactor(f64),
    #[error("coincident transmit/receive elements (zero separation)")]
    CoincidentElements,
    #[error("SI uncertainty must satisfy nominal >= 0, radius >= 0, nominal + radius <= {cap}")]
    InvalidUncertainty { cap: f64 },
    #[error("reflection coefficient must be positive, got {0}")]
    NonPositiveReflection(f64),
    #[error("SINR threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
}

/// Parameters of the base-station-to-user link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommChannelParams {
    /// Rician K-factor (power ratio of the deterministic path).
    pub k_factor: f64,
    /// Line-of-sight angle of departure, degrees.
    pub los_angle_deg: f64,
    /// Link distance, meters.
    pub distance_m: f64,
    /// Carrier frequency, GHz.
    pub carrier_ghz: f64,
    /// Noise power at the user, dB relative to 1 W.
    pub noise_power_dbw: f64,
}

/// Parameters of the monostatic sensing link and its feasibility requirement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingParams {
    /// Target angle (angle of departure = angle of arrival), degrees.
    pub target_angle_deg: f64,
    /// Reflection coefficient: radar cross-section combined with round-trip
    /// path loss.
    pub reflection_coeff: f64,
    /// Receiver noise power, dB relative to 1 W.
    pub noise_power_dbw: f64,
    /// Minimum sensing SINR per sensing slot, linear ratio.
    pub sinr_threshold: f64,
    /// Minimum number of sensing timeslots in the horizon.
    pub min_sensing_slots: usize,
}

impl SensingParams {
    /// Linear receiver noise power in watts.
    pub fn noise_power_w(&self) -> f64 {
        10f64.powf(self.noise_power_dbw / 10.0)
    }
}

/// Residual self-interference factor, known only to lie in
/// [nominal - radius, nominal + radius].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiUncertainty {
    pub nominal: f64,
    pub radius: f64,
}

impl SiUncertainty {
    pub const DEFAULT_CAP: f64 = 1.0;

    pub fn new(nominal: f64, radius: f64) -> Result<Self, ChannelError> {
        Self::with_cap(nominal, radius, Self::DEFAULT_CAP)
    }

    pub fn with_cap(nominal: f64, radius: f64, cap: f64) -> Result<Self, ChannelError> {
        if nominal < 0.0 || radius < 0.0 || nominal + radius > cap {
            return Err(ChannelError::InvalidUncertainty { cap });
        }
        Ok(Self { nominal, radius })
    }

    /// The residual-SI factor attaining the worst-case SINR.
    pub fn worst_case(&self) -> f64 {
        self.nominal + self.radius
    }
}

/// Everything the metrics and the optimizer need to know about propagation:
/// user channel (raw and noise-normalized), sensing steering outer product,
/// self-interference matrix, sensing parameters, and the SI uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// User channel, length N_tx.
    pub h: Array1<Complex64>,
    /// h divided by the communication noise standard deviation.
    pub h_bar: Array1<Complex64>,
    /// Steering outer product A(theta) = a_rx(theta) a_tx(theta)^H, N_rx x N_tx.
    pub steering_outer: Array2<Complex64>,
    /// Self-interference channel Q, N_rx x N_tx.
    pub si_matrix: Array2<Complex64>,
    pub sensing: SensingParams,
    pub si: SiUncertainty,
}

impl ChannelSet {
    /// Assemble a channel set from precomputed parts. `noise_com_dbw` is the
    /// communication noise power in dBW; h_bar is derived exactly as
    /// h / sigma_com.
    pub fn from_parts(
        h: Array1<Complex64>,
        noise_com_dbw: f64,
        steering_outer: Array2<Complex64>,
        si_matrix: Array2<Complex64>,
        sensing: SensingParams,
        si: SiUncertainty,
    ) -> Result<Self, ChannelError> {
        if sensing.reflection_coeff <= 0.0 {
            return Err(ChannelError::NonPositiveReflection(sensing.reflection_coeff));
        }
        if sensing.sinr_threshold <= 0.0 {
            return Err(ChannelError::NonPositiveThreshold(sensing.sinr_threshold));
        }
        let sigma_com = 10f64.powf(noise_com_dbw / 20.0);
        let h_bar = h.mapv(|x| x / sigma_com);
        Ok(Self { h, h_bar, steering_outer, si_matrix, sensing, si })
    }

    /// Draw a fresh channel realization and build all propagation objects.
    pub fn build<R: Rng>(
        tx_geom: &ArrayGeometry,
        rx_geom: &ArrayGeometry,
        comm: &CommChannelParams,
        sensing: SensingParams,
        si: SiUncertainty,
        rng: &mut R,
    ) -> Result<Self, ChannelError> {
        let h = rician_channel(tx_geom, comm, rng)?;
        let steering_outer = sensing_outer(tx_geom, rx_geom, sensing.target_angle_deg)?;
        let si_matrix = si_channel(tx_geom, rx_geom, comm.carrier_ghz)?;
        Self::from_parts(h, comm.noise_power_dbw, steering_outer, si_matrix, sensing, si)
    }

    pub fn n_tx(&self) -> usize {
        self.steering_outer.ncols()
    }

    pub fn n_rx(&self) -> usize {
        self.steering_outer.nrows()
    }
}

/// Urban-macro large-scale fading: 28 + 22 log10(l) + 20 log10(f_c) dB with
/// l in meters and f_c in GHz.
pub fn uma_pathloss_db(distance_m: f64, carrier_ghz: f64) -> Result<f64, ChannelError> {
    if distance_m <= 0.0 {
        return Err(ChannelError::NonPositiveDistance(distance_m));
    }
    if carrier_ghz <= 0.0 {
        return Err(ChannelError::NonPositiveCarrier(carrier_ghz));
    }
    Ok(28.0 + 22.0 * distance_m.log10() + 20.0 * carrier_ghz.log10())
}

/// Rician user channel: h = 10^(-PL/20) (sqrt(K/(K+1)) v_los +
/// sqrt(1/(K+1)) v_nlos). The deterministic component has unit-magnitude
/// entries e^{j phi cos(beta)}; the diffuse entries are i.i.d. CN(0, 1).
/// Deterministic for a fixed RNG state.
pub fn rician_channel<R: Rng>(
    geometry: &ArrayGeometry,
    params: &CommChannelParams,
    rng: &mut R,
) -> Result<Array1<Complex64>, ChannelError> {
    if params.k_factor < 0.0 {
        return Err(ChannelError::NegativeKFactor(params.k_factor));
    }
    let pl_db = uma_pathloss_db(params.distance_m, params.carrier_ghz)?;
    let amplitude = 10f64.powf(-pl_db / 20.0);
    let n = geometry.n_elements as f64;
    // unit-magnitude phase ramp: steering vector scaled back by sqrt(N)
    let v_los = steering_vector(geometry, params.los_angle_deg)?.mapv(|x| x * n.sqrt());
    let k = params.k_factor;
    let w_los = (k / (k + 1.0)).sqrt();
    let w_nlos = (1.0 / (k + 1.0)).sqrt();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    Ok(Array1::from_iter(v_los.iter().map(|los| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let nlos = Complex64::new(re * half, im * half);
        amplitude * (w_los * los + w_nlos * nlos)
    })))
}

/// Rank-one steering outer product A(theta) = a_rx(theta) a_tx(theta)^H.
pub fn sensing_outer(
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
    theta_deg: f64,
) -> Result<Array2<Complex64>, ChannelError> {
    let a_tx = steering_vector(tx_geom, theta_deg)?;
    let a_rx = steering_vector(rx_geom, theta_deg)?;
    let mut outer = Array2::from_elem((rx_geom.n_elements, tx_geom.n_elements), Complex64::new(0.0, 0.0));
    for (m, rm) in a_rx.iter().enumerate() {
        for (n, tn) in a_tx.iter().enumerate() {
            outer[[m, n]] = rm * tn.conj();
        }
    }
    Ok(outer)
}

/// Near-field self-interference channel between the two collinear arrays:
/// entry (m, n) = lambda / (4 pi d_mn) / sqrt(N_rx N_tx) e^{-j 2 pi d_mn / lambda}
/// where d_mn is the element-to-element distance.
pub fn si_channel(
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
    carrier_ghz: f64,
) -> Result<Array2<Complex64>, ChannelError> {
    if carrier_ghz <= 0.0 {
        return Err(ChannelError::NonPositiveCarrier(carrier_ghz));
    }
    let lambda = SPEED_OF_LIGHT_M_S / (carrier_ghz * 1e9);
    let tx_pos = tx_geom.element_positions_m(lambda);
    let rx_pos = rx_geom.element_positions_m(lambda);
    let norm = 1.0 / ((rx_geom.n_elements * tx_geom.n_elements) as f64).sqrt();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut q = Array2::from_elem((rx_pos.len(), tx_pos.len()), Complex64::new(0.0, 0.0));
    for (m, &pm) in rx_pos.iter().enumerate() {
        for (n, &pn) in tx_pos.iter().enumerate() {
            let d = (pm - pn).abs();
            if d <= 0.0 {
                return Err(ChannelError::CoincidentElements);
            }
            let amp = lambda / (4.0 * std::f64::consts::PI * d) * norm;
            q[[m, n]] = Complex64::from_polar(amp, -two_pi * d / lambda);
        }
    }
    Ok(q)
}

/// Residual self-interference channel after cancellation: R = upsilon Q.
pub fn residual_si(q: &Array2<Complex64>, upsilon: f64) -> Array2<Complex64> {
    q.mapv(|x| upsilon * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_sq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_comm_params() -> CommChannelParams {
        CommChannelParams {
            k_factor: 100.0,
            los_angle_deg: 90.0,
            distance_m: 60.0,
            carrier_ghz: 41.0,
            noise_power_dbw: -114.0,
        }
    }

    #[test]
    fn pathloss_reference_points() {
        assert!((uma_pathloss_db(1.0, 1.0).unwrap() - 28.0).abs() < 1e-12);
        assert!((uma_pathloss_db(10.0, 1.0).unwrap() - 50.0).abs() < 1e-12);
        // frozen from direct formula evaluation
        assert!((uma_pathloss_db(60.0, 41.0).unwrap() - 99.37500464283488).abs() < 1e-10);
    }

    #[test]
    fn pathloss_rejects_nonpositive() {
        assert!(uma_pathloss_db(0.0, 1.0).is_err());
        assert!(uma_pathloss_db(1.0, -2.0).is_err());
    }

    #[test]
    fn rician_los_limit() {
        let geom = ArrayGeometry::half_wavelength(8);
        let mut params = test_comm_params();
        params.k_factor = 1e12;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = rician_channel(&geom, &params, &mut rng).unwrap();
        let amp = 10f64.powf(-uma_pathloss_db(60.0, 41.0).unwrap() / 20.0);
        let v_los = steering_vector(&geom, 90.0).unwrap().mapv(|x| x * 8f64.sqrt());
        let diff: f64 = h
            .iter()
            .zip(v_los.iter())
            .map(|(a, b)| (a / amp - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-5, "||v - v_los|| = {diff}");
    }

    #[test]
    fn rician_average_power_matches_element_count() {
        // Monte Carlo oracle for the small-scale normalization: with
        // unit-magnitude LoS entries and CN(0,1) diffuse entries,
        // E||v||^2 = N_tx.
        let geom = ArrayGeometry::half_wavelength(8);
        let params = test_comm_params();
        let amp = 10f64.powf(-uma_pathloss_db(60.0, 41.0).unwrap() / 20.0);
        let mut acc = 0.0;
        let draws = 10_000;
        for seed in 0..draws {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = rician_channel(&geom, &params, &mut rng).unwrap();
            acc += norm_sq(&h) / (amp * amp);
        }
        let mean = acc / draws as f64;
        assert!((mean / 8.0 - 1.0).abs() < 0.02, "E||v||^2 = {mean}");
    }

    #[test]
    fn rician_is_deterministic_per_seed() {
        let geom = ArrayGeometry::half_wavelength(8);
        let params = test_comm_params();
        let mut rng_a = ChaCha8Rng::seed_from_u64(42);
        let mut rng_b = ChaCha8Rng::seed_from_u64(42);
        let a = rician_channel(&geom, &params, &mut rng_a).unwrap();
        let b = rician_channel(&geom, &params, &mut rng_b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sensing_outer_broadside_entries() {
        let tx = ArrayGeometry::half_wavelength(8);
        let rx = ArrayGeometry::half_wavelength(16);
        let a = sensing_outer(&tx, &rx, 90.0).unwrap();
        let expect = 1.0 / ((16.0 * 8.0) as f64).sqrt();
        for entry in a.iter() {
            assert!((entry.re - expect).abs() < 1e-12 && entry.im.abs() < 1e-12);
        }
    }

    #[test]
    fn sensing_outer_unit_frobenius() {
        let tx = ArrayGeometry::half_wavelength(8);
        let rx = ArrayGeometry::half_wavelength(16);
        for theta in [50.0, 77.0, 90.0, 111.5, 130.0] {
            let a = sensing_outer(&tx, &rx, theta).unwrap();
            let fro: f64 = a.iter().map(|x| x.norm_sqr()).sum();
            assert!((fro - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sensing_outer_matches_entrywise_product() {
        let tx = ArrayGeometry::half_wavelength(8);
        let rx = ArrayGeometry::half_wavelength(16);
        let theta = 104.0;
        let a = sensing_outer(&tx, &rx, theta).unwrap();
        let a_tx = steering_vector(&tx, theta).unwrap();
        let a_rx = steering_vector(&rx, theta).unwrap();
        for m in 0..16 {
            for n in 0..8 {
                let expect = a_rx[m] * a_tx[n].conj();
                assert!((a[[m, n]] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn sensing_outer_is_rank_one() {
        // Singular-value oracle: power iteration on A^H A gives the dominant
        // singular value; A has rank one iff sigma_max equals ||A||_F.
        let tx = ArrayGeometry::half_wavelength(8);
        let rx = ArrayGeometry::half_wavelength(16);
        let a = sensing_outer(&tx, &rx, 110.0).unwrap();
        let fro_sq: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        let mut v = Array1::from_elem(8, Complex64::new(1.0, 0.3));
        for _ in 0..200 {
            // v <- A^H (A v), normalized
            let av = crate::linalg::matvec(&a, &v);
            let mut next = Array1::from_elem(8, Complex64::new(0.0, 0.0));
            for n in 0..8 {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..16 {
                    acc += a[[m, n]].conj() * av[m];
                }
                next[n] = acc;
            }
            let norm = norm_sq(&next).sqrt();
            v = next.mapv(|x| x / norm);
        }
        let av = crate::linalg::matvec(&a, &v);
        let sigma_max_sq = norm_sq(&av);
        assert!(fro_sq > 0.0);
        assert!(
            (sigma_max_sq - fro_sq).abs() < 1e-12,
            "sigma_max^2 {} vs ||A||_F^2 {}",
            sigma_max_sq,
            fro_sq
        );
    }

    #[test]
    fn si_channel_vanishes_at_far_separation() {
        let tx = ArrayGeometry::half_wavelength(8);
        let rx = ArrayGeometry::half_wavelength(16).with_axis_offset(1e6);
        let q = si_channel(&tx, &rx, 41.0).unwrap();
        let max = q.iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(max < 1e-9, "max |Q| = {max}");
    }

    #[test]
    fn si_channel_single_pair_at_one_wavelength() {
        let lambda = SPEED_OF_LIGHT_M_S / 1e9;
        let tx = ArrayGeometry::new(1, 0.5, 0.0).unwrap();
        let rx = ArrayGeometry::new(1, 0.5, lambda).unwrap();
        let q = si_channel(&tx, &rx, 1.0).unwrap();
        let expect = 1.0 / (4.0 * std::f64::consts::PI);
        assert!((q[[0, 0]].norm() - expect).abs() < 1e-12);
        assert!((q[[0, 0]].re - expect).abs() < 1e-12);
        assert!(q[[0, 0]].im.abs() < 1e-9); // phase e^{-j 2 pi} ~ 1
    }

    #[test]
    fn si_channel_rejects_coincident_elements() {
        let tx = ArrayGeometry::new(1, 0.5, 0.0).unwrap();
        let rx = ArrayGeometry::new(1, 0.5, 0.0).unwrap();
        assert_eq!(si_channel(&tx, &rx, 41.0), Err(ChannelError::CoincidentElements));
    }

    #[test]
    fn si_entries_match_independent_recomputation() {
        // Per-entry oracle at the default geometry: |Q_mn| depends only on
        // the element distance and decreases monotonically with it.
        let tx = ArrayGeometry::half_wavelength(8);
        let rx = ArrayGeometry::half_wavelength(16).with_axis_offset(0.15);
        let q = si_channel(&tx, &rx, 41.0).unwrap();
        let lambda = SPEED_OF_LIGHT_M_S / 41e9;
        let tx_pos = tx.element_positions_m(lambda);
        let rx_pos = rx.element_positions_m(lambda);
        let mut by_distance: Vec<(f64, f64)> = Vec::new();
        for m in 0..16 {
            for n in 0..8 {
                let d = (rx_pos[m] - tx_pos[n]).abs();
                let expect = lambda / (4.0 * std::f64::consts::PI * d) / (128f64).sqrt();
                assert!((q[[m, n]].norm() - expect).abs() < 1e-15);
                by_distance.push((d, q[[m, n]].norm()));
            }
        }
        by_distance.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in by_distance.windows(2) {
            if w[1].0 > w[0].0 + 1e-12 {
                assert!(w[1].1 < w[0].1, "|Q| not decreasing: {:?} -> {:?}", w[0], w[1]);
            } else {
                assert!((w[1].1 - w[0].1).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn residual_si_scales_linearly() {
        let tx = ArrayGeometry::half_wavelength(8);
        let rx = ArrayGeometry::half_wavelength(16).with_axis_offset(0.15);
        let q = si_channel(&tx, &rx, 41.0).unwrap();
        let zero = residual_si(&q, 0.0);
        assert!(zero.iter().all(|x| x.norm() == 0.0));
        let full = residual_si(&q, 1.0);
        assert_eq!(full, q);
        let half = residual_si(&q, 0.5);
        let fro = |m: &Array2<Complex64>| m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!((fro(&half) - 0.5 * fro(&q)).abs() < 1e-12);
    }

    #[test]
    fn si_uncertainty_validation() {
        assert!(SiUncertainty::new(0.5, 0.5).is_ok());
        assert!(SiUncertainty::new(1.0, 0.0).is_ok());
        assert!(SiUncertainty::new(0.96, 0.05).is_err());
        assert!(SiUncertainty::new(-0.1, 0.0).is_err());
        assert!(SiUncertainty::new(0.1, -0.1).is_err());
        assert!(SiUncertainty::with_cap(1.4, 0.1, 2.0).is_ok());
    }

    #[test]
    fn h_bar_is_exact_scaling() {
        let geom = ArrayGeometry::half_wavelength(8);
        let params = test_comm_params();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sensing = SensingParams {
            target_angle_deg: 90.0,
            reflection_coeff: 6e-4,
            noise_power_dbw: -74.0,
            sinr_threshold: 3.0,
            min_sensing_slots: 1,
        };
        let set = ChannelSet::build(
            &geom,
            &ArrayGeometry::half_wavelength(16).with_axis_offset(0.15),
            &params,
            sensing,
            SiUncertainty::new(0.0, 0.0).unwrap(),
            &mut rng,
        )
        .unwrap();
        let sigma = 10f64.powf(-114.0 / 20.0);
        for (hb, h) in set.h_bar.iter().zip(set.h.iter()) {
            assert_eq!(*hb, h / sigma);
        }
        let ratio = norm_sq(&set.h_bar).sqrt() / (norm_sq(&set.h).sqrt() / sigma);
        assert!((ratio - 1.0).abs() < 1e-14);
    }
}
