#include "wdje/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <fmt/core.h>

#include "wdje/error.hpp"

namespace wdje::ot {

std::string to_string(GroundMetric metric) {
    switch (metric) {
        case GroundMetric::euclidean: return "euclidean";
        case GroundMetric::squared_euclidean: return "squared_euclidean";
        case GroundMetric::absolute: return "absolute";
        case GroundMetric::zero_one: return "zero_one";
    }
    return "unknown";
}

std::string to_string(Solver solver) {
    switch (solver) {
        case Solver::exact: return "exact";
        case Solver::sinkhorn: return "sinkhorn";
        case Solver::closed_form_1d: return "closed_form_1d";
    }
    return "unknown";
}

std::string to_string(SolverChoice choice) {
    switch (choice) {
        case SolverChoice::exact: return "exact";
        case SolverChoice::sinkhorn: return "sinkhorn";
        case SolverChoice::automatic: return "auto";
    }
    return "unknown";
}

GroundMetric parse_metric(const std::string& name) {
    if (name == "euclidean") return GroundMetric::euclidean;
    if (name == "squared_euclidean") return GroundMetric::squared_euclidean;
    if (name == "absolute") return GroundMetric::absolute;
    if (name == "zero_one") return GroundMetric::zero_one;
    throw ValidationError(fmt::format("unknown ground metric '{}'", name));
}

SolverChoice parse_solver(const std::string& name) {
    if (name == "exact") return SolverChoice::exact;
    if (name == "sinkhorn") return SolverChoice::sinkhorn;
    if (name == "auto") return SolverChoice::automatic;
    throw ValidationError(fmt::format("unknown solver '{}'", name));
}

namespace {

void require_nonempty(const DiscreteMeasure& u, const DiscreteMeasure& v) {
    if (u.is_empty() || v.is_empty()) {
        throw ValidationError("empty measure");
    }
}

void require_cost_shape(const DiscreteMeasure& u, const DiscreteMeasure& v, const CostMatrix& cost) {
    require_nonempty(u, v);
    if (cost.values.rows() != u.size() || cost.values.cols() != v.size()) {
        throw ValidationError(fmt::format("cost matrix is {}x{}, measures need {}x{}", cost.values.rows(),
                                          cost.values.cols(), u.size(), v.size()));
    }
    if (!(cost.power >= 1.0)) {
        throw ValidationError(fmt::format("Wasserstein order p = {} must be >= 1", cost.power));
    }
}

double plan_distance(double objective, double p) {
    return std::pow(std::max(objective, 0.0), 1.0 / p);
}

// Indices of strictly positive weights.
std::vector<Eigen::Index> support_of(const Vector& w) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) > 0.0) idx.push_back(i);
    }
    return idx;
}

// --------------------------------------------------------------------------
// Transportation network simplex.

class TransportSimplex {
  public:
    TransportSimplex(const Vector& supply, const Vector& demand, const Matrix& cost)
        : n_(static_cast<int>(supply.size())),
          m_(static_cast<int>(demand.size())),
          supply_(supply),
          demand_(demand),
          cost_(cost) {}

    // Returns the optimal basic flows as (row, col, flow) arcs.
    struct Arc {
        int row;
        int col;
        double flow;
    };

    std::vector<Arc> solve(std::size_t& iterations) {
        initial_basis();
        rebuild_tree();

        const double scale = std::max(1.0, cost_.cwiseAbs().maxCoeff());
        const double tol = 1e-12 * scale;
        const std::size_t cells = static_cast<std::size_t>(n_) * static_cast<std::size_t>(m_);
        const std::size_t block = std::max<std::size_t>(
            std::min<std::size_t>(cells, 32), static_cast<std::size_t>(std::sqrt(static_cast<double>(cells))));
        const std::size_t max_pivots = 50 * cells + 1000;

        std::size_t cursor = 0;
        iterations = 0;
        while (true) {
            // Block pricing: scan cells in blocks, pivot on the most negative
            // reduced cost of the first block that has one.
            double best = -tol;
            int best_row = -1;
            int best_col = -1;
            std::size_t scanned = 0;
            while (scanned < cells) {
                const std::size_t stop = std::min(cells, scanned + block);
                for (; scanned < stop; ++scanned) {
                    const int i = static_cast<int>(cursor / static_cast<std::size_t>(m_));
                    const int j = static_cast<int>(cursor % static_cast<std::size_t>(m_));
                    const double reduced = cost_(i, j) - pot_row_[i] - pot_col_[j];
                    if (reduced < best) {
                        best = reduced;
                        best_row = i;
                        best_col = j;
                    }
                    if (++cursor == cells) cursor = 0;
                }
                if (best_row >= 0) break;
            }
            if (best_row < 0) break;
            pivot(best_row, best_col);
            rebuild_tree();
            if (++iterations > max_pivots) {
                throw NumericalError("network simplex exceeded its pivot budget");
            }
        }

        restore_flows();
        return arcs_;
    }

  private:
    int node_of_col(int j) const { return n_ + j; }

    void initial_basis() {
        // North-west corner rule on perturbed marginals: every basic flow is
        // strictly positive, so no pivot is degenerate.
        const double eps = 1e-10 * supply_.sum() / (n_ + 1);
        perturbed_supply_ = supply_.array() + eps;
        perturbed_demand_ = demand_;
        perturbed_demand_(m_ - 1) += eps * n_;

        std::vector<double> ra(perturbed_supply_.data(), perturbed_supply_.data() + n_);
        std::vector<double> rb(perturbed_demand_.data(), perturbed_demand_.data() + m_);
        arcs_.clear();
        arcs_.reserve(static_cast<std::size_t>(n_ + m_ - 1));
        int i = 0;
        int j = 0;
        while (true) {
            const double f = std::max(0.0, std::min(ra[i], rb[j]));
            arcs_.push_back({i, j, f});
            ra[i] -= f;
            rb[j] -= f;
            if (i == n_ - 1 && j == m_ - 1) break;
            if (i == n_ - 1) {
                ++j;
            } else if (j == m_ - 1) {
                ++i;
            } else if (ra[i] <= rb[j]) {
                ++i;
            } else {
                ++j;
            }
        }
        adjacency_.assign(static_cast<std::size_t>(n_ + m_), {});
        for (int e = 0; e < static_cast<int>(arcs_.size()); ++e) {
            adjacency_[arcs_[e].row].push_back(e);
            adjacency_[node_of_col(arcs_[e].col)].push_back(e);
        }
    }

    int other_end(int arc, int node) const {
        const int r = arcs_[arc].row;
        return node == r ? node_of_col(arcs_[arc].col) : r;
    }

    // BFS from row 0: parent links, depths, visiting order and dual potentials
    // satisfying pot_row[i] + pot_col[j] = C(i, j) on every basic arc.
    void rebuild_tree() {
        const int nodes = n_ + m_;
        parent_.assign(nodes, -1);
        parent_arc_.assign(nodes, -1);
        depth_.assign(nodes, -1);
        order_.clear();
        pot_row_.assign(n_, 0.0);
        pot_col_.assign(m_, 0.0);

        depth_[0] = 0;
        order_.push_back(0);
        for (std::size_t head = 0; head < order_.size(); ++head) {
            const int x = order_[head];
            for (const int e : adjacency_[x]) {
                const int y = other_end(e, x);
                if (depth_[y] >= 0) continue;
                depth_[y] = depth_[x] + 1;
                parent_[y] = x;
                parent_arc_[y] = e;
                const double c = cost_(arcs_[e].row, arcs_[e].col);
                if (y >= n_) {
                    pot_col_[y - n_] = c - pot_row_[x];
                } else {
                    pot_row_[y] = c - pot_col_[x - n_];
                }
                order_.push_back(y);
            }
        }
        if (static_cast<int>(order_.size()) != nodes) {
            throw NumericalError("network simplex basis is not a spanning tree");
        }
    }

    void pivot(int row, int col) {
        // Tree path from the row node to the column node; together with the
        // entering arc it closes the pivot cycle. Edges alternate -theta/+theta
        // starting (and ending) with -theta.
        int x = row;
        int y = node_of_col(col);
        path_a_.clear();
        path_b_.clear();
        while (x != y) {
            if (depth_[x] >= depth_[y]) {
                path_a_.push_back(parent_arc_[x]);
                x = parent_[x];
            } else {
                path_b_.push_back(parent_arc_[y]);
                y = parent_[y];
            }
        }
        path_a_.insert(path_a_.end(), path_b_.rbegin(), path_b_.rend());

        int leaving = -1;
        double theta = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < path_a_.size(); k += 2) {
            const int e = path_a_[k];
            if (arcs_[e].flow < theta) {
                theta = arcs_[e].flow;
                leaving = e;
            }
        }
        for (std::size_t k = 0; k < path_a_.size(); ++k) {
            Arc& arc = arcs_[path_a_[k]];
            arc.flow += (k % 2 == 0) ? -theta : theta;
        }

        auto detach = [this](int node, int e) {
            auto& list = adjacency_[node];
            list.erase(std::find(list.begin(), list.end(), e));
        };
        detach(arcs_[leaving].row, leaving);
        detach(node_of_col(arcs_[leaving].col), leaving);
        arcs_[leaving] = {row, col, theta};
        adjacency_[row].push_back(leaving);
        adjacency_[node_of_col(col)].push_back(leaving);
    }

    // Flows of the final tree under the original (unperturbed) marginals,
    // assigned leaf-first: each node's parent arc carries whatever its own
    // marginal leaves after its child arcs.
    void restore_flows() {
        std::vector<double> residual(static_cast<std::size_t>(n_ + m_));
        for (int i = 0; i < n_; ++i) residual[i] = supply_(i);
        for (int j = 0; j < m_; ++j) residual[n_ + j] = demand_(j);
        for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
            const int x = *it;
            if (x == 0) continue;
            const int e = parent_arc_[x];
            const double flow = residual[x];
            arcs_[e].flow = flow;
            residual[parent_[x]] -= flow;
        }
        for (auto& arc : arcs_) {
            if (arc.flow < 0.0) arc.flow = 0.0;
        }
    }

    int n_;
    int m_;
    const Vector& supply_;
    const Vector& demand_;
    const Matrix& cost_;
    Vector perturbed_supply_;
    Vector perturbed_demand_;

    std::vector<Arc> arcs_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<int> parent_;
    std::vector<int> parent_arc_;
    std::vector<int> depth_;
    std::vector<int> order_;
    std::vector<double> pot_row_;
    std::vector<double> pot_col_;
    std::vector<int> path_a_;
    std::vector<int> path_b_;
};

TransportPlan identity_plan(const DiscreteMeasure& u) {
    TransportPlan plan;
    plan.coupling = Matrix(u.weights().asDiagonal());
    plan.objective = 0.0;
    plan.distance = 0.0;
    plan.solver = Solver::exact;
    plan.iterations = 0;
    plan.converged = true;
    return plan;
}

double log_sum_exp(const double* values, Eigen::Index count, Eigen::Index stride) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < count; ++k) peak = std::max(peak, values[k * stride]);
    if (!std::isfinite(peak)) return peak;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < count; ++k) sum += std::exp(values[k * stride] - peak);
    return peak + std::log(sum);
}

}  // namespace

CostMatrix ground_cost(const DiscreteMeasure& u, const DiscreteMeasure& v, GroundMetric metric, double p) {
    require_nonempty(u, v);
    if (!(p >= 1.0)) {
        throw ValidationError(fmt::format("Wasserstein order p = {} must be >= 1", p));
    }
    if (u.dim() != v.dim()) {
        throw ValidationError(fmt::format("support dimension mismatch: {} vs {}", u.dim(), v.dim()));
    }
    CostMatrix cost{Matrix(u.size(), v.size()), metric, p};
    const Matrix& a = u.points();
    const Matrix& b = v.points();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            double d = 0.0;
            switch (metric) {
                case GroundMetric::euclidean: d = (a.row(i) - b.row(j)).norm(); break;
                case GroundMetric::squared_euclidean: d = (a.row(i) - b.row(j)).squaredNorm(); break;
                case GroundMetric::absolute: d = (a.row(i) - b.row(j)).cwiseAbs().sum(); break;
                case GroundMetric::zero_one: d = a.row(i) == b.row(j) ? 0.0 : 1.0; break;
            }
            cost.values(i, j) = p == 1.0 ? d : std::pow(d, p);
        }
    }
    return cost;
}

TransportPlan emd_exact(const DiscreteMeasure& u, const DiscreteMeasure& v, const CostMatrix& cost) {
    require_cost_shape(u, v, cost);
    const double imbalance = std::abs(u.weights().sum() - v.weights().sum());
    if (imbalance > 1e-9) {
        throw ValidationError(fmt::format("marginals differ in mass by {:.3g}", imbalance));
    }
    if ((cost.values.array() < 0.0).any() || !cost.values.allFinite()) {
        throw ValidationError("cost matrix must be finite and nonnegative");
    }
    if (u.identical_to(v) && (cost.values.diagonal().array() == 0.0).all()) {
        return identity_plan(u);
    }

    const auto rows = support_of(u.weights());
    const auto cols = support_of(v.weights());
    Vector supply(static_cast<Eigen::Index>(rows.size()));
    Vector demand(static_cast<Eigen::Index>(cols.size()));
    Matrix reduced(supply.size(), demand.size());
    for (std::size_t i = 0; i < rows.size(); ++i) supply(static_cast<Eigen::Index>(i)) = u.weights()(rows[i]);
    for (std::size_t j = 0; j < cols.size(); ++j) demand(static_cast<Eigen::Index>(j)) = v.weights()(cols[j]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            reduced(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cost.values(rows[i], cols[j]);
        }
    }

    TransportPlan plan;
    plan.solver = Solver::exact;
    plan.coupling = Matrix::Zero(u.size(), v.size());
    TransportSimplex simplex(supply, demand, reduced);
    const auto arcs = simplex.solve(plan.iterations);
    double objective = 0.0;
    for (const auto& arc : arcs) {
        const auto i = rows[static_cast<std::size_t>(arc.row)];
        const auto j = cols[static_cast<std::size_t>(arc.col)];
        plan.coupling(i, j) += arc.flow;
        objective += arc.flow * cost.values(i, j);
    }
    plan.objective = objective;
    plan.distance = plan_distance(objective, cost.power);
    plan.converged = true;
    return plan;
}

TransportPlan sinkhorn(const DiscreteMeasure& u, const DiscreteMeasure& v, const CostMatrix& cost, double epsilon,
                       std::size_t max_iter, double tol) {
    require_cost_shape(u, v, cost);
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw ValidationError(fmt::format("Sinkhorn epsilon must be positive, got {}", epsilon));
    }
    if (!(tol > 0.0)) {
        throw ValidationError(fmt::format("Sinkhorn tolerance must be positive, got {}", tol));
    }

    const auto rows = support_of(u.weights());
    const auto cols = support_of(v.weights());
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto m = static_cast<Eigen::Index>(cols.size());
    Vector log_a(n), log_b(m);
    Vector a(n), b(m);
    // Scaled kernel exponent -C/eps, row-major so row and column passes both stride predictably.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> neg_cost(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i) = u.weights()(rows[static_cast<std::size_t>(i)]);
        log_a(i) = std::log(a(i));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        b(j) = v.weights()(cols[static_cast<std::size_t>(j)]);
        log_b(j) = std::log(b(j));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            neg_cost(i, j) = -cost.values(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]) / epsilon;
        }
    }

    // Dual potentials divided by epsilon.
    Vector f = Vector::Zero(n);
    Vector g = Vector::Zero(m);
    std::vector<double> scratch(static_cast<std::size_t>(std::max(n, m)));
    TransportPlan plan;
    plan.solver = Solver::sinkhorn;
    plan.converged = false;

    auto row_marginal_error = [&]() {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double mass = 0.0;
            for (Eigen::Index j = 0; j < m; ++j) mass += std::exp(f(i) + g(j) + neg_cost(i, j));
            worst = std::max(worst, std::abs(mass - a(i)));
        }
        return worst;
    };

    for (std::size_t it = 1; it <= max_iter; ++it) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) scratch[static_cast<std::size_t>(j)] = g(j) + neg_cost(i, j);
            f(i) = log_a(i) - log_sum_exp(scratch.data(), m, 1);
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) scratch[static_cast<std::size_t>(i)] = f(i) + neg_cost(i, j);
            g(j) = log_b(j) - log_sum_exp(scratch.data(), n, 1);
        }
        if (!f.allFinite() || !g.allFinite()) {
            throw NumericalError(fmt::format(
                "Sinkhorn scalings became non-finite at iteration {} (epsilon = {:.3g} is too small for the cost "
                "scale; use a larger epsilon)",
                it, epsilon));
        }
        plan.iterations = it;
        // Column marginals are exact after the g-update; only rows can lag.
        if (row_marginal_error() <= tol) {
            plan.converged = true;
            break;
        }
    }

    plan.coupling = Matrix::Zero(u.size(), v.size());
    double objective = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double mass = std::exp(f(i) + g(j) + neg_cost(i, j));
            const auto ui = rows[static_cast<std::size_t>(i)];
            const auto vj = cols[static_cast<std::size_t>(j)];
            plan.coupling(ui, vj) = mass;
            objective += mass * cost.values(ui, vj);
        }
    }
    if (!std::isfinite(objective)) {
        throw NumericalError("Sinkhorn produced a non-finite objective; use a larger epsilon");
    }
    plan.objective = objective;
    plan.distance = plan_distance(objective, cost.power);
    return plan;
}

namespace {

struct SortedAtoms {
    std::vector<Eigen::Index> order;
    std::vector<double> cumulative;  // cumulative weight, last entry forced to 1
};

SortedAtoms sort_atoms(const DiscreteMeasure& m) {
    SortedAtoms s;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        if (m.weights()(i) > 0.0) s.order.push_back(i);
    }
    std::stable_sort(s.order.begin(), s.order.end(), [&](Eigen::Index x, Eigen::Index y) {
        return m.points()(x, 0) < m.points()(y, 0);
    });
    double acc = 0.0;
    for (const auto i : s.order) {
        acc += m.weights()(i);
        s.cumulative.push_back(acc);
    }
    s.cumulative.back() = 1.0;
    return s;
}

void require_scalar(const DiscreteMeasure& u, const DiscreteMeasure& v, double p) {
    require_nonempty(u, v);
    if (u.dim() != 1 || v.dim() != 1) {
        throw ValidationError(fmt::format("1-D Wasserstein needs scalar supports, got dimensions {} and {}",
                                          u.dim(), v.dim()));
    }
    if (!(p >= 1.0)) {
        throw ValidationError(fmt::format("Wasserstein order p = {} must be >= 1", p));
    }
}

// Walks the merged quantile grid, calling visit(i, j, mass) for each piece on
// which the two quantile functions are constant.
template <typename Visit>
void merge_quantiles(const SortedAtoms& a, const SortedAtoms& b, Visit&& visit) {
    std::size_t i = 0;
    std::size_t j = 0;
    double t = 0.0;
    while (i < a.order.size() && j < b.order.size()) {
        const double next = std::min(a.cumulative[i], b.cumulative[j]);
        if (next > t) visit(a.order[i], b.order[j], next - t);
        t = std::max(t, next);
        if (a.cumulative[i] <= next) ++i;
        if (b.cumulative[j] <= next) ++j;
    }
}

}  // namespace

double wasserstein_1d(const DiscreteMeasure& u, const DiscreteMeasure& v, double p) {
    require_scalar(u, v, p);
    const auto a = sort_atoms(u);
    const auto b = sort_atoms(v);
    double total = 0.0;
    merge_quantiles(a, b, [&](Eigen::Index i, Eigen::Index j, double mass) {
        const double gap = std::abs(u.points()(i, 0) - v.points()(j, 0));
        total += mass * (p == 1.0 ? gap : std::pow(gap, p));
    });
    return plan_distance(total, p);
}

TransportPlan transport_1d(const DiscreteMeasure& u, const DiscreteMeasure& v, double p) {
    require_scalar(u, v, p);
    const auto a = sort_atoms(u);
    const auto b = sort_atoms(v);
    TransportPlan plan;
    plan.solver = Solver::closed_form_1d;
    plan.coupling = Matrix::Zero(u.size(), v.size());
    double total = 0.0;
    merge_quantiles(a, b, [&](Eigen::Index i, Eigen::Index j, double mass) {
        const double gap = std::abs(u.points()(i, 0) - v.points()(j, 0));
        plan.coupling(i, j) += mass;
        total += mass * (p == 1.0 ? gap : std::pow(gap, p));
    });
    plan.objective = total;
    plan.distance = plan_distance(total, p);
    plan.iterations = 0;
    plan.converged = true;
    return plan;
}

void WassersteinConfig::validate() const {
    if (!(p >= 1.0)) throw ValidationError(fmt::format("Wasserstein order p = {} must be >= 1", p));
    if (epsilon && !(*epsilon > 0.0)) throw ValidationError("Sinkhorn epsilon must be positive");
    if (!(epsilon_scale > 0.0)) throw ValidationError("Sinkhorn epsilon scale must be positive");
    if (max_iter == 0) throw ValidationError("Sinkhorn max_iter must be >= 1");
    if (!(tol > 0.0)) throw ValidationError("Sinkhorn tolerance must be positive");
}

WassersteinResult wasserstein(const DiscreteMeasure& u, const DiscreteMeasure& v, const WassersteinConfig& config) {
    config.validate();
    require_nonempty(u, v);
    if (u.dim() != v.dim()) {
        throw ValidationError(fmt::format("support dimension mismatch: {} vs {}", u.dim(), v.dim()));
    }
    if (u.identical_to(v)) {
        auto plan = identity_plan(u);
        return {0.0, std::move(plan)};
    }

    const bool scalar_metric =
        config.metric == GroundMetric::euclidean || config.metric == GroundMetric::absolute;
    if (config.solver == SolverChoice::automatic && u.dim() == 1 && scalar_metric) {
        auto plan = transport_1d(u, v, config.p);
        return {plan.distance, std::move(plan)};
    }

    const auto cost = ground_cost(u, v, config.metric, config.p);
    const auto cells = static_cast<std::size_t>(u.size()) * static_cast<std::size_t>(v.size());
    const bool use_exact = config.solver == SolverChoice::exact ||
                           (config.solver == SolverChoice::automatic && cells <= config.exact_threshold);
    if (use_exact) {
        auto plan = emd_exact(u, v, cost);
        return {plan.distance, std::move(plan)};
    }
    double epsilon = config.epsilon.value_or(config.epsilon_scale * cost.values.mean());
    if (!(epsilon > 0.0)) epsilon = 1.0;  // zero cost everywhere: any epsilon gives the exact answer
    auto plan = sinkhorn(u, v, cost, epsilon, config.max_iter, config.tol);
    return {plan.distance, std::move(plan)};
}

}  // namespace wdje::ot
