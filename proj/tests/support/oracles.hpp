#pragma once

#include "wdje/measures.hpp"

namespace wdje::testing {

/// Minimum of sum_ij P_ij C_ij over the transport polytope, by enumerating
/// every basis of the equality system (one redundant row dropped), solving
/// it densely and keeping the feasible ones. Exponential; n*m <= 16.
double transport_lp_by_vertices(const Vector& a, const Vector& b, const Matrix& cost);

/// log p(y | F, alpha, beta) / n from explicit matrices (no SVD).
double evidence_dense(const Matrix& f, const Vector& y, double alpha, double beta);

/// Max of evidence_dense over (alpha, beta) in [lo, hi]^2: a log-spaced grid
/// followed by repeated local zooms around the best cell.
double evidence_grid_max(const Matrix& f, const Vector& y, double lo = 1e-6, double hi = 1e6);

}  // namespace wdje::testing
