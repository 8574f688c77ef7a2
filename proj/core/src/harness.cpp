#include "wdje/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/core.h>

#include "wdje/baselines.hpp"
#include "wdje/error.hpp"

namespace wdje::harness {

void SyntheticConfig::validate() const {
    if (feature_dim < 1) throw ValidationError(fmt::format("feature_dim = {} must be >= 1", feature_dim));
    if (samples_per_domain < 1) {
        throw ValidationError(fmt::format("samples_per_domain = {} must be >= 1", samples_per_domain));
    }
    if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
        throw ValidationError(fmt::format("noise_sigma = {} must be > 0", noise_sigma));
    }
    if (!(mean_shift >= 0.0) || !std::isfinite(mean_shift)) {
        throw ValidationError(fmt::format("mean_shift = {} must be finite and >= 0", mean_shift));
    }
    if (!std::isfinite(label_shift)) throw ValidationError("label_shift must be finite");
    if (task.is_classification()) {
        if (task.class_count < 2) {
            throw ValidationError(fmt::format("classes = {} must be >= 2", task.class_count));
        }
        if (!label_permutation.empty()) {
            std::vector<int> sorted = label_permutation;
            std::sort(sorted.begin(), sorted.end());
            std::vector<int> identity(static_cast<std::size_t>(task.class_count));
            std::iota(identity.begin(), identity.end(), 0);
            if (sorted != identity) {
                throw ValidationError(
                    fmt::format("label_permutation must be a permutation of 0..{}", task.class_count - 1));
            }
        }
        if (label_shift != 0.0) throw ValidationError("label_shift applies to regression only");
    } else if (!label_permutation.empty()) {
        throw ValidationError("label_permutation applies to classification only");
    }
}

std::pair<Dataset, Dataset> gen_synthetic_pair(const SyntheticConfig& config) {
    config.validate();
    const auto n = static_cast<Eigen::Index>(config.samples_per_domain);
    const auto d = static_cast<Eigen::Index>(config.feature_dim);
    const Eigen::RowVectorXd shift =
        Eigen::RowVectorXd::Constant(d, config.mean_shift / std::sqrt(static_cast<double>(d)));

    std::seed_seq source_seq{config.seed, std::uint64_t{0}};
    std::seed_seq target_seq{config.seed, std::uint64_t{1}};
    std::seed_seq model_seq{config.seed, std::uint64_t{2}};
    std::mt19937_64 source_rng(source_seq);
    std::mt19937_64 target_rng(target_seq);
    std::normal_distribution<double> normal(0.0, 1.0);

    auto noise = [&](std::mt19937_64& rng) {
        Matrix z(n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) z(i, j) = normal(rng);
        }
        return z;
    };

    if (config.task.is_classification()) {
        const int classes = config.task.class_count;
        auto draw = [&](std::mt19937_64& rng, bool is_target) {
            Matrix x = config.noise_sigma * noise(rng);
            Vector y(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const int cls = static_cast<int>(i % classes);
                x(i, 0) += cls;
                if (is_target) x.row(i) += shift;
                const int label = is_target && !config.label_permutation.empty()
                                      ? config.label_permutation[static_cast<std::size_t>(cls)]
                                      : cls;
                y(i) = label;
            }
            return Dataset(std::move(x), std::move(y), config.task, is_target ? "synthetic_target" : "synthetic_source");
        };
        auto source = draw(source_rng, false);
        auto target = draw(target_rng, true);
        return {std::move(source), std::move(target)};
    }

    std::mt19937_64 model_rng(model_seq);
    Vector w(d);
    for (Eigen::Index j = 0; j < d; ++j) w(j) = normal(model_rng) / std::sqrt(static_cast<double>(d));
    const double b = normal(model_rng);
    auto draw = [&](std::mt19937_64& rng, bool is_target) {
        Matrix x = noise(rng);
        if (is_target) x.rowwise() += shift;
        Vector y = (x * w).array() + b;
        for (Eigen::Index i = 0; i < n; ++i) y(i) += config.noise_sigma * normal(rng);
        if (is_target) y.array() += config.label_shift;
        return Dataset(std::move(x), std::move(y), config.task, is_target ? "synthetic_target" : "synthetic_source");
    };
    auto source = draw(source_rng, false);
    auto target = draw(target_rng, true);
    return {std::move(source), std::move(target)};
}

std::string to_string(Evaluation evaluation) { return evaluation == Evaluation::held_out ? "held_out" : "training"; }

Evaluation parse_evaluation(const std::string& name) {
    if (name == "training") return Evaluation::training;
    if (name == "held_out") return Evaluation::held_out;
    throw ValidationError(fmt::format("unknown evaluation '{}' (expected training or held_out)", name));
}

void PipelineConfig::validate() const {
    bound.validate();
    ot.validate();
    hyper.validate();
    if (bound.p != ot.p) {
        throw ValidationError(fmt::format("bound p = {} and OT p = {} must agree", bound.p, ot.p));
    }
    if (!(labelled_fraction >= 0.0 && labelled_fraction <= 1.0)) {
        throw ValidationError(fmt::format("labelled_fraction = {} outside [0, 1]", labelled_fraction));
    }
    if (threads < 1) throw ValidationError("threads must be >= 1");
}

void SweepGrid::validate() const {
    if (c_values.empty() || r_values.empty() || seeds.empty()) {
        throw ValidationError("sweep grid must have at least one c, r and seed value");
    }
    for (const double r : r_values) {
        if (!(r > 0.0 && r <= 1.0)) throw ValidationError(fmt::format("grid ratio r = {} outside (0, 1]", r));
    }
    for (const auto& c : c_values) {
        if (c && *c < 2) throw ValidationError(fmt::format("grid class count c = {} must be >= 2", *c));
    }
}

namespace {

std::string task_id(const std::string& prefix, std::optional<int> c, double r, std::uint64_t seed) {
    return fmt::format("{}c{}_r{}_s{}", prefix, c ? std::to_string(*c) : std::string("all"), r, seed);
}

std::vector<int> integer_labels(const Vector& y) {
    std::vector<int> out(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<int>(y(i));
    return out;
}

template <typename F>
std::optional<double> guarded(SweepRow& row, const char* name, F&& compute) {
    try {
        return compute();
    } catch (const std::exception& e) {
        row.warnings.push_back(fmt::format("{}: {}", name, e.what()));
        return std::nullopt;
    }
}

void fill_cell(SweepRow& row, const Dataset& source, const Dataset& target, const PipelineConfig& config) {
    config.validate();
    source.require_labels();
    target.require_labels();
    if (source.task().kind != target.task().kind) {
        throw ValidationError("source and target tasks differ in kind");
    }
    const Dataset src = row.c ? subsample_task(source, row.c, 1.0, row.seed) : source;
    const Dataset tgt = subsample_task(target, row.c, row.r, row.seed);
    const TaskSpec task = tgt.task();
    const bool classification = task.is_classification();

    bound::BoundConfig bcfg = config.bound;
    bcfg.loss = classification ? bound::Loss::cross_entropy : bound::Loss::mse;
    bcfg.label_encoding = LabelEncoding::default_for(task);
    const LabelEncoding& encoding = bcfg.label_encoding;

    auto n_t1 = static_cast<Eigen::Index>(
        std::ceil(config.labelled_fraction * static_cast<double>(tgt.size()) - 1e-9));
    if (n_t1 > src.size()) {
        row.warnings.push_back(fmt::format("labelled target rows clamped from {} to N_S = {}", n_t1, src.size()));
        n_t1 = src.size();
    }
    row.n_source = static_cast<long>(src.size());
    row.n_target = static_cast<long>(tgt.size());
    row.n_t1 = static_cast<long>(n_t1);

    const Dataset labelled = tgt.head(n_t1);
    std::vector<Eigen::Index> rest(static_cast<std::size_t>(tgt.size() - n_t1));
    std::iota(rest.begin(), rest.end(), n_t1);

    // Rows the risks are scored on.
    const Dataset* scored = &labelled;
    Dataset held_out = tgt.select_rows(rest);
    if (config.evaluation == Evaluation::held_out && held_out.size() > 0) {
        scored = &held_out;
    } else if (config.evaluation == Evaluation::held_out) {
        row.warnings.emplace_back("held_out: no unlabelled rows left, scoring on the labelled rows");
    }
    if (n_t1 == 0) {
        scored = &tgt;
        row.warnings.emplace_back("no labelled target rows: risks scored on all target rows with untrained heads");
    }

    row.w_x = ot::wasserstein(empirical_measure(src.features()), empirical_measure(tgt.features()), config.ot).distance;

    bound::LipschitzEstimate lipschitz;
    if (classification) {
        lipschitz = bound::lipschitz_cross_entropy(tgt.features(), task.class_count);
    } else {
        if (n_t1 == 0) throw ValidationError("the squared-error Lipschitz estimate needs labelled target rows");
        lipschitz = bound::lipschitz_mse(labelled.features(), labelled.require_labels(), bcfg.K_weight_sup,
                                         bcfg.k_floor);
    }
    for (const auto& flag : lipschitz.flags) row.warnings.push_back("lipschitz: " + flag);

    const auto source_model = models::fit(src, config.model, config.hyper);
    const double source_risk = models::risk(source_model, src);
    const auto transfer_model =
        models::continue_training(source_model, labelled, config.hyper, n_t1 > 0 ? config.hyper.finetune_epochs : 0);
    const auto target_model = n_t1 > 0 ? models::fit(labelled, config.model, config.hyper)
                                       : models::LinearModel::zeros(config.model, tgt.dim(),
                                                                    classification ? task.class_count : 1);
    row.risk_without = models::risk(target_model, *scored);
    row.risk_with = models::risk(transfer_model, *scored);
    row.accuracy_without = models::accuracy(target_model, *scored);
    row.accuracy_with = models::accuracy(transfer_model, *scored);
    if (!std::isfinite(row.risk_with) || !std::isfinite(row.risk_without) || !std::isfinite(source_risk)) {
        throw NumericalError("non-finite empirical risk; lower learning_rate");
    }

    if (n_t1 > 0) {
        const auto split = split_source_labels(src, n_t1, encoding);
        const double w_y = ot::wasserstein(split.s1, label_measure(labelled, encoding), config.ot).distance;
        const double moment = bound::source_label_moment(split.s2, bcfg.p);
        row.bound = bound::target_risk_bound(source_risk, row.w_x, w_y, moment, lipschitz.k, bcfg);
    } else {
        row.bound = bound::target_risk_bound_unsupervised(source_risk, row.w_x, label_measure(src, encoding),
                                                          lipschitz.k, bcfg);
    }
    const auto record = make_record(row.task_id, row.bound, row.risk_without,
                                    empirical_transferability(row.risk_with, row.risk_without));
    row.bound_total = row.bound.total;
    row.tr_score = record.tr_score;
    row.empirical_tr = *record.empirical_tr;

    if (!config.baselines) return;
    if (n_t1 < 2) {
        row.warnings.emplace_back("baselines skipped: fewer than 2 labelled target rows");
        return;
    }
    const Vector& y = labelled.require_labels();
    row.logme = guarded(row, "logme", [&] {
        const auto result = baselines::logme(labelled.features(), y, task);
        if (!result.converged) row.warnings.emplace_back("logme: not converged");
        return result.value;
    });
    if (!classification) return;
    const baselines::SourcePredictions preds(source_model.predict_proba(labelled.features()));
    row.leep = guarded(row, "leep", [&] { return baselines::leep(preds, y, task.class_count); });
    row.nce = guarded(row, "nce", [&] { return baselines::nce(preds.pseudo_labels(), integer_labels(y)); });
    row.hscore = guarded(row, "hscore", [&] { return baselines::hscore(labelled.features(), y); });
}

}  // namespace

SweepRow run_cell(const Dataset& source, const Dataset& target, std::optional<int> c, double r, std::uint64_t seed,
                  const PipelineConfig& config) {
    SweepRow row;
    row.task_id = task_id(config.task_prefix, c, r, seed);
    row.c = c;
    row.r = r;
    row.seed = seed;
    try {
        fill_cell(row, source, target, config);
    } catch (const std::exception& e) {
        row.status = fmt::format("error: {}", e.what());
    }
    return row;
}

std::vector<SweepRow> run_sweep(const SweepInput& input, const SweepGrid& grid, const PipelineConfig& config) {
    grid.validate();
    config.validate();

    struct Cell {
        std::optional<int> c;
        double r;
        std::uint64_t seed;
        std::size_t pair;
    };
    std::vector<std::pair<Dataset, Dataset>> pairs;
    std::vector<std::size_t> pair_of_seed(grid.seeds.size(), 0);
    if (const auto* given = std::get_if<std::pair<Dataset, Dataset>>(&input)) {
        pairs.push_back(*given);
    } else {
        auto synthetic = std::get<SyntheticConfig>(input);
        for (std::size_t s = 0; s < grid.seeds.size(); ++s) {
            synthetic.seed = grid.seeds[s];
            pairs.push_back(gen_synthetic_pair(synthetic));
            pair_of_seed[s] = s;
        }
    }
    std::vector<Cell> cells;
    cells.reserve(grid.size());
    for (const auto& c : grid.c_values) {
        for (const double r : grid.r_values) {
            for (std::size_t s = 0; s < grid.seeds.size(); ++s) cells.push_back({c, r, grid.seeds[s], pair_of_seed[s]});
        }
    }

    std::vector<SweepRow> rows(cells.size());
    auto work = [&](std::size_t i) {
        const auto& cell = cells[i];
        const auto& [source, target] = pairs[cell.pair];
        rows[i] = run_cell(source, target, cell.c, cell.r, cell.seed, config);
    };
    const std::size_t workers = std::min(config.threads, cells.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) work(i);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < cells.size(); i = next++) work(i);
        });
    }
    for (auto& t : pool) t.join();
    return rows;
}

SweepEvaluation evaluate_sweep(const std::vector<SweepRow>& rows) {
    std::vector<const SweepRow*> ok;
    for (const auto& row : rows) {
        if (row.ok()) ok.push_back(&row);
    }
    if (ok.size() < 3) {
        throw ValidationError(fmt::format("evaluation needs at least 3 rows with status ok, got {}", ok.size()));
    }
    SweepEvaluation out;
    out.rows_used = ok.size();

    auto correlate = [&](const std::string& metric, const std::string& against, auto metric_of, auto against_of) {
        std::vector<double> a;
        std::vector<double> b;
        for (const auto* row : ok) {
            const std::optional<double> value = metric_of(*row);
            if (!value) continue;
            a.push_back(*value);
            b.push_back(against_of(*row));
        }
        MetricCorrelation mc{metric, against, std::nullopt, a.size()};
        if (a.size() >= 3) mc.pearson = baselines::pearson(a, b);
        out.pearson.push_back(std::move(mc));
    };
    auto risk_with = [](const SweepRow& r) { return r.risk_with; };
    correlate("bound_total", "risk_with", [](const SweepRow& r) { return std::optional(r.bound_total); }, risk_with);
    correlate("tr_score", "empirical_tr", [](const SweepRow& r) { return std::optional(r.tr_score); },
              [](const SweepRow& r) { return r.empirical_tr; });
    correlate("leep", "risk_with", [](const SweepRow& r) { return r.leep; }, risk_with);
    correlate("nce", "risk_with", [](const SweepRow& r) { return r.nce; }, risk_with);
    correlate("logme", "risk_with", [](const SweepRow& r) { return r.logme; }, risk_with);
    correlate("hscore", "risk_with", [](const SweepRow& r) { return r.hscore; }, risk_with);

    std::vector<double> empirical;
    std::vector<double> predicted;
    for (const auto* row : ok) {
        empirical.push_back(row->empirical_tr);
        predicted.push_back(row->tr_score);
    }
    out.confusion = confusion_from_scores(empirical, predicted);
    out.ci = consistency_index(out.confusion);
    return out;
}

}  // namespace wdje::harness
