//! Steering vectors and discrete transmit/receive beam codebooks for uniform
//! linear arrays.
//!
//! A codebook enumerates every (direction, beamwidth) combination. Beamwidth
//! is controlled by switching off the extreme array elements and scaling the
//! remaining ones so that every codeword carries the same total power.

use ndarray::Array1;
use num_complex::Complex64;
use thiserror::Error;

/// Nominal half-power beamwidth of a half-wavelength ULA, degrees per active
/// element: HPBW ~ 101.5 / n_active.
pub const HPBW_RULE_DEG: f64 = 101.5;

#[derive(Debug, Error, PartialEq)]
pub enum BeamError {
    #[error("array must have at least one element")]
    EmptyArray,
    #[error("element spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("steering angle {0} deg lies outside the open interval (0, 180)")]
    AngleOutOfRange(f64),
    #[error("active element count {n_active} outside 1..={n_elements}")]
    ActiveCountOutOfRange { n_active: usize, n_elements: usize },
    #[error("codeword power must be positive, got {0}")]
    NonPositivePower(f64),
    #[error("directions must be nonempty and strictly increasing")]
    BadDirections,
    #[error("beamwidth map must be nonempty with distinct beamwidths")]
    BadBeamwidths,
}

/// A uniform linear array: element count, spacing in wavelengths, and the
/// position of the array center along the shared axis (meters). The offset
/// only matters for the self-interference geometry, where the transmit and
/// receive arrays sit on one line with separated centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub n_elements: usize,
    pub element_spacing: f64,
    pub axis_offset: f64,
}

impl ArrayGeometry {
    pub fn new(n_elements: usize, element_spacing: f64, axis_offset: f64) -> Result<Self, BeamError> {
        if n_elements == 0 {
            return Err(BeamError::EmptyArray);
        }
        if element_spacing <= 0.0 {
            return Err(BeamError::NonPositiveSpacing(element_spacing));
        }
        Ok(Self { n_elements, element_spacing, axis_offset })
    }

    /// Half-wavelength ULA centered at the axis origin.
    pub fn half_wavelength(n_elements: usize) -> Self {
        Self { n_elements, element_spacing: 0.5, axis_offset: 0.0 }
    }

    pub fn with_axis_offset(mut self, axis_offset: f64) -> Self {
        self.axis_offset = axis_offset;
        self
    }

    /// Element positions along the array axis in meters for wavelength
    /// `lambda_m`, symmetric around `axis_offset`.
    pub fn element_positions_m(&self, lambda_m: f64) -> Vec<f64> {
        let n = self.n_elements;
        (0..n)
            .map(|k| {
                let centered = k as f64 - (n as f64 - 1.0) / 2.0;
                self.axis_offset + lambda_m * self.element_spacing * centered
            })
            .collect()
    }
}

/// One codebook entry: a steered, beamwidth-configured complex weight vector.
/// Inactive (extreme) elements are exactly zero and the squared norm of the
/// weights equals the codebook's configured power.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    pub index: usize,
    pub direction_deg: f64,
    pub beamwidth_deg: f64,
    pub n_active: usize,
    pub weights: Array1<Complex64>,
}

impl Codeword {
    /// Squared Euclidean norm of the weights (the codeword's radiated power).
    pub fn power(&self) -> f64 {
        crate::linalg::norm_sq(&self.weights)
    }
}

/// Ordered set of codewords covering every (direction, beamwidth) pair,
/// direction-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub codewords: Vec<Codeword>,
    pub directions: Vec<f64>,
    pub beamwidths: Vec<f64>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codeword(&self, index: usize) -> Option<&Codeword> {
        self.codewords.get(index)
    }
}

/// Unit-norm array response for a plane wave from `theta_deg`. Element k has
/// phase (2 pi spacing) (k - (N-1)/2) cos(theta).
pub fn steering_vector(geometry: &ArrayGeometry, theta_deg: f64) -> Result<Array1<Complex64>, BeamError> {
    if !(theta_deg > 0.0 && theta_deg < 180.0) {
        return Err(BeamError::AngleOutOfRange(theta_deg));
    }
    let n = geometry.n_elements;
    let cos_theta = theta_deg.to_radians().cos();
    let amp = 1.0 / (n as f64).sqrt();
    let step = 2.0 * std::f64::consts::PI * geometry.element_spacing;
    Ok(Array1::from_iter((0..n).map(|k| {
        let centered = k as f64 - (n as f64 - 1.0) / 2.0;
        Complex64::from_polar(amp, step * centered * cos_theta)
    })))
}

/// Beampattern power `|a(theta)^H w|^2` of a weight vector on the given array.
pub fn beam_gain(
    geometry: &ArrayGeometry,
    theta_deg: f64,
    weights: &Array1<Complex64>,
) -> Result<f64, BeamError> {
    let a = steering_vector(geometry, theta_deg)?;
    Ok(crate::linalg::inner(&a, weights).norm_sqr())
}

/// Build a codeword steered at `direction_deg` using the `n_active` centered
/// elements of the array, scaled so the squared weight norm equals `power`.
/// When `n_elements - n_active` is odd the active block shifts toward the
/// lower indices. The beamwidth label defaults to the HPBW rule estimate;
/// [`build_codebook`] overrides it with the configured value.
pub fn make_codeword(
    geometry: &ArrayGeometry,
    direction_deg: f64,
    n_active: usize,
    power: f64,
) -> Result<Codeword, BeamError> {
    if n_active == 0 || n_active > geometry.n_elements {
        return Err(BeamError::ActiveCountOutOfRange { n_active, n_elements: geometry.n_elements });
    }
    if power <= 0.0 {
        return Err(BeamError::NonPositivePower(power));
    }
    let sub = ArrayGeometry {
        n_elements: n_active,
        element_spacing: geometry.element_spacing,
        axis_offset: 0.0,
    };
    let sub_steering = steering_vector(&sub, direction_deg)?;
    let start = (geometry.n_elements - n_active) / 2;
    let amp = power.sqrt();
    let mut weights = Array1::from_elem(geometry.n_elements, Complex64::new(0.0, 0.0));
    for (m, w) in sub_steering.iter().enumerate() {
        weights[start + m] = amp * w;
    }
    Ok(Codeword {
        index: 0,
        direction_deg,
        beamwidth_deg: HPBW_RULE_DEG / n_active as f64,
        n_active,
        weights,
    })
}

/// Build the full codebook over `directions` x `beamwidth_map`, ordered
/// direction-major then beamwidth, with contiguous indices from 0. Each
/// `beamwidth_map` entry pairs a beamwidth label with its active element
/// count.
pub fn build_codebook(
    geometry: &ArrayGeometry,
    directions: &[f64],
    beamwidth_map: &[(f64, usize)],
    power: f64,
) -> Result<Codebook, BeamError> {
    if directions.is_empty() || directions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BeamError::BadDirections);
    }
    if beamwidth_map.is_empty() {
        return Err(BeamError::BadBeamwidths);
    }
    for (i, (bw, _)) in beamwidth_map.iter().enumerate() {
        if beamwidth_map[..i].iter().any(|(other, _)| other == bw) {
            return Err(BeamError::BadBeamwidths);
        }
    }
    let mut codewords = Vec::with_capacity(directions.len() * beamwidth_map.len());
    for &direction in directions {
        for &(beamwidth, n_active) in beamwidth_map {
            let mut cw = make_codeword(geometry, direction, n_active, power)?;
            cw.index = codewords.len();
            cw.beamwidth_deg = beamwidth;
            codewords.push(cw);
        }
    }
    Ok(Codebook {
        codewords,
        directions: directions.to_vec(),
        beamwidths: beamwidth_map.iter().map(|&(bw, _)| bw).collect(),
    })
}

/// Default steering grid: 50 deg to 130 deg in 5 deg steps (17 directions).
pub fn default_directions() -> Vec<f64> {
    (0..17).map(|i| 50.0 + 5.0 * i as f64).collect()
}

/// Default transmit beamwidths for an 8-element array, widest realized by
/// keeping only the 2 center elements.
pub fn default_tx_beamwidth_map() -> Vec<(f64, usize)> {
    vec![(13.0, 8), (17.0, 6), (26.0, 4), (60.0, 2)]
}

/// Default receive beamwidths for a 16-element array.
pub fn default_rx_beamwidth_map() -> Vec<(f64, usize)> {
    vec![(6.0, 16), (13.0, 8), (17.0, 6), (26.0, 4)]
}
