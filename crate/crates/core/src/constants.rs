//! Physical constants (SI, CODATA 2018) and special-function values.

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Mass of a rubidium-87 atom, kg. Default species.
pub const RB87_MASS: f64 = 1.4431e-25;

/// Riemann zeta(3).
pub const ZETA_3: f64 = 1.202_056_903_159_594_3;

/// Riemann zeta(3/2).
pub const ZETA_3_2: f64 = 2.612_375_348_685_488;
