#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "wdje/measures.hpp"

namespace wdje::ot {

/// Ground metric between support points. `absolute` is the L1 distance
/// (|u - v| on scalars); `zero_one` is 0 for identical points and 1 otherwise.
enum class GroundMetric { euclidean, squared_euclidean, absolute, zero_one };

enum class Solver { exact, sinkhorn, closed_form_1d };
enum class SolverChoice { exact, sinkhorn, automatic };

std::string to_string(GroundMetric metric);
std::string to_string(Solver solver);
std::string to_string(SolverChoice choice);
GroundMetric parse_metric(const std::string& name);
SolverChoice parse_solver(const std::string& name);

/// values(i, j) = metric(u_i, v_j)^power.
struct CostMatrix {
    Matrix values;
    GroundMetric metric = GroundMetric::euclidean;
    double power = 1.0;
};

struct TransportPlan {
    Matrix coupling;        // n x m, rows follow u, columns follow v
    double objective = 0;   // sum_ij coupling_ij * C_ij
    double distance = 0;    // objective^(1/p)
    Solver solver = Solver::exact;
    std::size_t iterations = 0;
    bool converged = true;
};

CostMatrix ground_cost(const DiscreteMeasure& u, const DiscreteMeasure& v, GroundMetric metric, double p = 1.0);

/// Exact Kantorovich solution by the transportation network simplex.
///
/// The basis is a spanning tree over the n + m marginal nodes. Pivoting runs
/// on supplies perturbed by a vanishing epsilon (which rules out degenerate
/// pivots and therefore cycling); once optimal, the flows of the final tree
/// are recomputed from the unperturbed marginals. Atoms of zero weight are
/// removed before solving and get zero rows/columns in the coupling.
TransportPlan emd_exact(const DiscreteMeasure& u, const DiscreteMeasure& v, const CostMatrix& cost);

/// Entropic OT by log-domain Sinkhorn iterations. Non-convergence is reported
/// through `converged`, not thrown; a NaN in the dual potentials throws
/// NumericalError.
TransportPlan sinkhorn(const DiscreteMeasure& u, const DiscreteMeasure& v, const CostMatrix& cost, double epsilon,
                       std::size_t max_iter = 10'000, double tol = 1e-8);

/// W_p between measures on the real line with ground cost |x - y|, via the
/// merged quantile grid of the two sorted supports.
double wasserstein_1d(const DiscreteMeasure& u, const DiscreteMeasure& v, double p = 1.0);

/// Monotone (north-west on sorted supports) coupling realizing wasserstein_1d.
TransportPlan transport_1d(const DiscreteMeasure& u, const DiscreteMeasure& v, double p = 1.0);

struct WassersteinConfig {
    GroundMetric metric = GroundMetric::euclidean;
    double p = 1.0;
    SolverChoice solver = SolverChoice::automatic;
    std::optional<double> epsilon;          // absolute; default 0.1 * mean(C)
    double epsilon_scale = 0.1;             // used when epsilon is unset
    std::size_t max_iter = 10'000;
    double tol = 1e-8;
    std::size_t exact_threshold = 250'000;  // largest n*m handed to the exact solver by `automatic`

    void validate() const;
};

struct WassersteinResult {
    double distance = 0;
    TransportPlan plan;
};

/// Solver facade. `automatic` picks the closed form for scalar supports
/// (euclidean/absolute metrics), the exact solver when n*m is at most
/// exact_threshold, and Sinkhorn otherwise. Point-wise identical measures
/// return distance 0 without solving.
WassersteinResult wasserstein(const DiscreteMeasure& u, const DiscreteMeasure& v, const WassersteinConfig& config = {});

}  // namespace wdje::ot
