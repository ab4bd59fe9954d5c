#pragma once

namespace ietlab {

/// Every numeric tolerance and search parameter used by the library.
///
/// A single instance travels with each SystemSpec (and each synthetic map),
/// so a test or a run config can tighten or loosen everything in one place.
struct NumericPolicy {
  // planar_core
  double defective_disc_tol = 1e-9;     ///< |tr^2 - 4 det| <= tol * max(1, tr^2)
  double singular_a_tol = 1e-9;         ///< |det A| <= tol * |A|_max^2 selects the augmented path
  double overflow_limit = 1e12;         ///< matrix exponential entries above this are an error
  double zero_vector_tol = 1e-300;
  double lyapunov_residual_tol = 1e-9;

  // trigger_rules
  double probe_start = 1e-6;            ///< first tau probed when locating tau_m
  double probe_limit = 1e4;             ///< give up locating tau_m beyond this
  int probe_substeps = 16;              ///< linear substeps inside each geometric probe step
  double root_tol = 1e-10;              ///< absolute bisection tolerance in tau
  int definiteness_samples = 256;       ///< refinement points on (0, tau_m)

  // iet_function
  int scan_steps_per_tau_m = 200;       ///< scan step h = tau_m / this
  double scan_start_factor = 1e-3;      ///< scan starts at tau_m * (1 - factor)
  double horizon_factor = 100.0;        ///< T_max = factor * tau_m unless overridden
  double horizon_override = 0.0;        ///< > 0 replaces the factor rule
  double tangent_tol = 1e-10;           ///< tangential touch accepted when max f >= -tol * scale
  double det_zero_tol = 1e-12;          ///< |det M| <= tol * |M|_max^2 counts as zero
  double zero_matrix_tol = 1e-8;        ///< |M|_max <= tol * scale counts as the zero matrix
  double jump_factor = 10.0;            ///< discontinuity: jump > factor * median jump
  int jump_refine_levels = 3;           ///< 4x refinements a jump must survive
  double extremum_rel_tol = 1e-6;

  // angle_map
  double fixed_point_tol = 1e-8;
  double stability_delta0 = 0.05;
  int stability_levels = 9;             ///< delta_j = delta0 * 2^-j, j < levels
  int stability_samples = 33;
  double degenerate_g_tol = 1e-12;

  // circle_dynamics
  int rational_qmax = 64;
  double uniformity_rel_tol = 1e-3;
  double divergence_rel_tol = 1e-2;

  // simulation
  double underflow_norm = 1e-280;
};

}  // namespace ietlab
