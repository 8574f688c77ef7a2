#include "cli.hpp"

#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "wdje/baselines.hpp"
#include "wdje/bound.hpp"
#include "wdje/error.hpp"
#include "wdje/harness.hpp"
#include "wdje/measures.hpp"
#include "wdje/models.hpp"
#include "wdje/ot.hpp"
#include "wdje/report.hpp"
#include "wdje/transferability.hpp"

namespace wdje::cli {

namespace {

using report::Json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Option groups shared between subcommands.

struct OutputOptions {
    std::string output;
    std::string format = "json";

    void add(CLI::App& app, bool csv) {
        app.add_option("-o,--output", output, "Write the result here instead of standard output");
        app.add_option("--format", format, csv ? "Report format" : "Report format (csv: one header line, one row)")
            ->check(CLI::IsMember({"json", "csv"}));
    }
};

struct DataOptions {
    std::string data_format = "csv";
    std::string label_column = "label";

    void add(CLI::App& app) {
        app.add_option("--data-format", data_format, "Input/output dataset format")
            ->check(CLI::IsMember({"csv", "binary"}));
        app.add_option("--label-column", label_column, "Name of the label column in CSV inputs (must be last)");
    }

    DataFormat format() const { return data_format == "binary" ? DataFormat::binary : DataFormat::csv; }
};

struct TaskOptions {
    std::string task = "classification";
    int classes = 0;

    void add(CLI::App& app) {
        app.add_option("--task", task, "Task kind")->check(CLI::IsMember({"classification", "regression"}));
        app.add_option("--classes", classes, "Class count (required for classification)")
            ->check(CLI::Range(0, 1 << 20));
    }

    TaskSpec spec() const {
        if (task == "regression") return TaskSpec::regression();
        if (classes < 2) throw ValidationError("--classes >= 2 is required for --task classification");
        return TaskSpec::classification(classes);
    }
};

struct OtOptions {
    std::string metric = "euclidean";
    double p = 1.0;
    std::string solver = "auto";
    double epsilon = 0.0;
    double epsilon_scale = 0.1;
    std::size_t max_iter = 10'000;
    double tol = 1e-8;
    std::size_t exact_threshold = 250'000;

    void add(CLI::App& app) {
        app.add_option("--metric", metric, "Ground metric")
            ->check(CLI::IsMember({"euclidean", "squared_euclidean", "absolute", "zero_one"}));
        app.add_option("--p", p, "Wasserstein order (shared with the bound)")->check(CLI::Range(1.0, kInf));
        app.add_option("--solver", solver, "OT solver")->check(CLI::IsMember({"exact", "sinkhorn", "auto"}));
        app.add_option("--epsilon", epsilon, "Absolute Sinkhorn regularization; 0 uses epsilon-scale * mean cost")
            ->check(CLI::Range(0.0, kInf));
        app.add_option("--epsilon-scale", epsilon_scale, "Sinkhorn regularization relative to the mean cost")
            ->check(CLI::PositiveNumber);
        app.add_option("--max-iter", max_iter, "Sinkhorn iteration cap")->check(CLI::PositiveNumber);
        app.add_option("--tol", tol, "Sinkhorn marginal tolerance")->check(CLI::PositiveNumber);
        app.add_option("--exact-threshold", exact_threshold, "Largest n*m solved exactly by --solver auto");
    }

    ot::WassersteinConfig config() const {
        ot::WassersteinConfig c;
        c.metric = ot::parse_metric(metric);
        c.p = p;
        c.solver = ot::parse_solver(solver);
        if (epsilon > 0.0) c.epsilon = epsilon;
        c.epsilon_scale = epsilon_scale;
        c.max_iter = max_iter;
        c.tol = tol;
        c.exact_threshold = exact_threshold;
        c.validate();
        return c;
    }
};

struct BoundOptions {
    std::string loss;
    double k_lambda = 0.001;
    double M = 1.0;
    double K_weight_sup = 1.0;
    double k_floor = 1e-6;

    void add(CLI::App& app) {
        app.add_option("--loss", loss, "Loss (default: cross_entropy for classification, mse for regression)")
            ->check(CLI::IsMember({"cross_entropy", "mse"}));
        app.add_option("--k-lambda", k_lambda, "Product k * lambda")->check(CLI::PositiveNumber);
        app.add_option("--M", M, "Bound on the loss over the output space")->check(CLI::PositiveNumber);
        app.add_option("--K-weight-sup", K_weight_sup, "Supremum of regressor weights (mse)")
            ->check(CLI::PositiveNumber);
        app.add_option("--k-floor", k_floor, "Floor for non-positive mse Lipschitz estimates")
            ->check(CLI::PositiveNumber);
    }

    bound::BoundConfig config(const TaskSpec& task, double p) const {
        bound::BoundConfig c;
        c.loss = loss.empty() ? (task.is_classification() ? bound::Loss::cross_entropy : bound::Loss::mse)
                              : bound::parse_loss(loss);
        if (c.loss == bound::Loss::cross_entropy && !task.is_classification()) {
            throw ValidationError("--loss cross_entropy requires --task classification");
        }
        if (c.loss == bound::Loss::mse && task.is_classification()) {
            throw ValidationError("--loss mse requires --task regression");
        }
        c.k_lambda_product = k_lambda;
        c.M = M;
        c.p = p;
        c.K_weight_sup = K_weight_sup;
        c.k_floor = k_floor;
        c.label_encoding = LabelEncoding::default_for(task);
        c.validate();
        return c;
    }
};

struct ModelOptions {
    std::string model;
    models::Hyper hyper;

    void add(CLI::App& app) {
        app.add_option("--model", model, "Linear head (default: multinomial_logistic or ridge by task)")
            ->check(CLI::IsMember({"multinomial_logistic", "ridge"}));
        app.add_option("--learning-rate", hyper.learning_rate, "Gradient-descent step")->check(CLI::PositiveNumber);
        app.add_option("--epochs", hyper.epochs, "Full-batch epochs for logistic fits");
        app.add_option("--l2", hyper.l2, "Weight decay")->check(CLI::Range(0.0, kInf));
        app.add_option("--finetune-epochs", hyper.finetune_epochs, "Continuation epochs on the target");
    }

    models::ModelKind kind(const TaskSpec& task) const {
        if (!model.empty()) return models::parse_model(model);
        return task.is_classification() ? models::ModelKind::multinomial_logistic : models::ModelKind::ridge;
    }
};

struct SyntheticOptions {
    harness::SyntheticConfig config;
    std::string task = "classification";
    int classes = 4;
    std::vector<int> permutation;

    void add(CLI::App& app) {
        app.add_option("--task", task, "Task kind")->check(CLI::IsMember({"classification", "regression"}));
        app.add_option("--classes", classes, "Class count")->check(CLI::Range(2, 1 << 20));
        app.add_option("--feature-dim", config.feature_dim, "Feature dimension")->check(CLI::Range(1, 1 << 20));
        app.add_option("--samples", config.samples_per_domain, "Samples per domain")->check(CLI::Range(1, 1 << 30));
        app.add_option("--mean-shift", config.mean_shift, "Target translation delta")->check(CLI::Range(0.0, kInf));
        app.add_option("--label-permutation", permutation, "Target class relabelling, e.g. 1,0,2,3")
            ->delimiter(',');
        app.add_option("--label-shift", config.label_shift, "Additive target output shift (regression)");
        app.add_option("--noise-sigma", config.noise_sigma, "Noise standard deviation")->check(CLI::PositiveNumber);
    }

    harness::SyntheticConfig resolve(std::uint64_t seed) const {
        auto c = config;
        c.task = task == "regression" ? TaskSpec::regression() : TaskSpec::classification(classes);
        c.label_permutation = permutation;
        c.seed = seed;
        c.validate();
        return c;
    }
};

// ---------------------------------------------------------------------------
// I/O helpers.

void emit(const std::string& text, const OutputOptions& opts, std::ostream& out) {
    if (opts.output.empty()) {
        out << text;
        return;
    }
    std::ofstream file(opts.output, std::ios::binary);
    if (!file) throw ValidationError(fmt::format("cannot open output file '{}'", opts.output));
    file << text;
    if (!file) throw Error(fmt::format("failed writing '{}'", opts.output));
}

std::string scalar_text(const Json& value) {
    if (value.is_null()) return {};
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_float()) return fmt::format("{}", value.get<double>());
    return value.dump();
}

/// Top-level scalar fields of an object as a header line and one row.
std::string flat_csv(const Json& object) {
    std::string header;
    std::string row;
    for (const auto& [key, value] : object.items()) {
        if (value.is_object() || value.is_array()) continue;
        if (!header.empty()) {
            header += ',';
            row += ',';
        }
        header += key;
        row += scalar_text(value);
    }
    return header + "\n" + row + "\n";
}

void emit_json(const Json& json, const OutputOptions& opts, std::ostream& out) {
    emit(opts.format == "csv" ? flat_csv(json) : report::dump(json), opts, out);
}

Dataset load_input(const std::string& features, const std::string& labels, const DataOptions& data,
                   const TaskSpec& task) {
    Dataset ds = load_dataset(features, data.format(), task, data.label_column);
    if (labels.empty()) return ds;
    const Dataset column = load_dataset(labels, data.format(), TaskSpec::regression(), data.label_column);
    if (column.dim() != 1 || column.has_labels()) {
        throw ValidationError(fmt::format("labels file '{}' must have exactly one column", labels));
    }
    return Dataset(ds.features(), Vector(column.features().col(0)), task, ds.name());
}

Json task_json(const TaskSpec& task) {
    return {{"kind", task.is_classification() ? "classification" : "regression"}, {"classes", task.class_count}};
}

// ---------------------------------------------------------------------------
// Subcommands.

struct WassersteinCmd {
    std::string u;
    std::string v;
    std::string weight_column = "weight";
    bool plan = false;
    DataOptions data;
    OtOptions ot;
    OutputOptions output;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("wasserstein", "Wasserstein distance between two point clouds");
        sub->add_option("--u", u, "First point set")->required()->check(CLI::ExistingFile);
        sub->add_option("--v", v, "Second point set")->required()->check(CLI::ExistingFile);
        sub->add_option("--weight-column", weight_column, "Optional trailing weight column (uniform when absent)");
        sub->add_flag("--plan", plan, "Include the coupling matrix");
        data.add(*sub);
        ot.add(*sub);
        output.add(*sub, false);
    }

    DiscreteMeasure measure(const std::string& path) const {
        const Dataset ds = load_dataset(path, data.format(), TaskSpec::regression(), weight_column);
        return empirical_measure(ds.features(), ds.labels());
    }

    void run(std::ostream& out) const {
        const auto cfg = ot.config();
        const auto mu = measure(u);
        const auto nu = measure(v);
        const auto result = ot::wasserstein(mu, nu, cfg);
        Json j = {
            {"distance", result.distance},
            {"objective", result.plan.objective},
            {"solver", ot::to_string(result.plan.solver)},
            {"iterations", result.plan.iterations},
            {"converged", result.plan.converged},
            {"n", mu.size()},
            {"m", nu.size()},
            {"config", report::to_json(cfg)},
        };
        if (plan) {
            Json rows = Json::array();
            for (Eigen::Index i = 0; i < result.plan.coupling.rows(); ++i) {
                Json row = Json::array();
                for (Eigen::Index k = 0; k < result.plan.coupling.cols(); ++k) row.push_back(result.plan.coupling(i, k));
                rows.push_back(std::move(row));
            }
            j["coupling"] = std::move(rows);
        }
        emit_json(j, output, out);
    }
};

struct DiagnosticOptions {
    bool enabled = false;
    bound::GeneralizationDiagnostics diag;

    void add(CLI::App& app) {
        app.add_flag("--diagnostics", enabled, "Attach the finite-sample slack terms");
        app.add_option("--delta", diag.delta, "Confidence parameter")->check(CLI::Range(0.0, 1.0));
        app.add_option("--B", diag.B, "Bound on the loss for concentration terms")->check(CLI::Range(0.0, kInf));
        app.add_option("--M-S", diag.M_S, "Source loss bound")->check(CLI::Range(0.0, kInf));
        app.add_option("--rademacher", diag.rademacher, "Rademacher complexity")->check(CLI::Range(0.0, kInf));
        app.add_option("--zeta", diag.zeta, "Empirical-measure concentration constant")
            ->check(CLI::Range(0.0, kInf));
        app.add_option("--q", diag.q, "Moment order q")->check(CLI::PositiveNumber);
        app.add_option("--d", diag.d, "Dimension in the convergence rate")->check(CLI::Range(1, 1 << 20));
    }
};

struct BoundCmd {
    std::string source_features;
    std::string source_labels;
    std::string target_features;
    std::string target_labels;
    long n_t1 = -1;
    double source_risk = -1.0;
    DataOptions data;
    TaskOptions task;
    OtOptions ot;
    BoundOptions bound;
    ModelOptions model;
    DiagnosticOptions diagnostics;
    OutputOptions output;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("bound", "Target-risk upper bound for a source/target pair");
        sub->add_option("--source-features", source_features, "Source dataset (features, label column last)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--source-labels", source_labels, "Separate one-column source label file")
            ->check(CLI::ExistingFile);
        sub->add_option("--target-features", target_features, "Target dataset (label column optional)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--target-labels", target_labels, "Separate one-column target label file")
            ->check(CLI::ExistingFile);
        sub->add_option("--n-t1", n_t1, "Labelled target rows used (first rows; -1 = all labelled rows)")
            ->check(CLI::Range(-1L, std::numeric_limits<long>::max()));
        sub->add_option("--source-risk", source_risk, "Source empirical risk (-1 = fit the linear head on the source)")
            ->check(CLI::Range(-1.0, kInf));
        data.add(*sub);
        task.add(*sub);
        ot.add(*sub);
        bound.add(*sub);
        model.add(*sub);
        diagnostics.add(*sub);
        output.add(*sub, false);
    }

    void run(std::ostream& out) const {
        const TaskSpec spec = task.spec();
        const auto ot_cfg = ot.config();
        const auto bcfg = bound.config(spec, ot_cfg.p);
        const auto kind = model.kind(spec);
        model.hyper.validate();

        const Dataset source = load_input(source_features, source_labels, data, spec);
        const Dataset target = load_input(target_features, target_labels, data, spec);
        source.require_labels();
        if (source.dim() != target.dim()) {
            throw ValidationError(fmt::format("source has {} features, target has {}", source.dim(), target.dim()));
        }
        Eigen::Index labelled = target.has_labels() ? target.size() : 0;
        if (n_t1 >= 0) {
            if (n_t1 > labelled) {
                throw ValidationError(fmt::format("--n-t1 {} exceeds the {} labelled target rows", n_t1, labelled));
            }
            labelled = n_t1;
        }
        if (labelled > source.size()) {
            throw ValidationError(fmt::format("N_t1 = {} exceeds the source size {}", labelled, source.size()));
        }

        const double w_x =
            ot::wasserstein(empirical_measure(source.features()), empirical_measure(target.features()), ot_cfg)
                .distance;
        const Dataset target_labelled = target.head(labelled);
        const auto lipschitz =
            bcfg.loss == bound::Loss::cross_entropy
                ? bound::lipschitz_cross_entropy(target.features(), spec.class_count)
                : bound::lipschitz_mse(target_labelled.features(),
                                       labelled > 0 ? target_labelled.require_labels() : Vector(),
                                       bcfg.K_weight_sup, bcfg.k_floor);
        std::string risk_origin = "given";
        double risk = source_risk;
        if (risk < 0.0) {
            risk = models::risk(models::fit(source, kind, model.hyper), source);
            risk_origin = "fitted_" + models::to_string(kind);
        }

        Json inputs = {{"w_x", w_x},
                       {"k", lipschitz.k},
                       {"lipschitz_norm", lipschitz.norm},
                       {"lipschitz_flags", lipschitz.flags},
                       {"n_source", source.size()},
                       {"n_target", target.size()},
                       {"n_t1", labelled},
                       {"source_risk", risk},
                       {"source_risk_origin", risk_origin}};
        bound::BoundReport rep;
        if (labelled > 0) {
            const auto split = split_source_labels(source, labelled, bcfg.label_encoding);
            const double w_y =
                ot::wasserstein(split.s1, label_measure(target_labelled, bcfg.label_encoding), ot_cfg).distance;
            const double moment = bound::source_label_moment(split.s2, bcfg.p);
            inputs["w_y"] = w_y;
            inputs["moment_s2"] = moment;
            rep = bound::target_risk_bound(risk, w_x, w_y, moment, lipschitz.k, bcfg);
        } else {
            rep = bound::target_risk_bound_unsupervised(risk, w_x, label_measure(source, bcfg.label_encoding),
                                                        lipschitz.k, bcfg);
        }
        if (diagnostics.enabled) {
            rep = bound::with_diagnostics(rep, bound::generalization_terms(diagnostics.diag, source.size(),
                                                                           target.size(), labelled));
        }
        Json j = {
            {"bound", report::to_json(rep)},
            {"inputs", inputs},
            {"config",
             {{"task", task_json(spec)},
              {"bound", report::to_json(bcfg)},
              {"ot", report::to_json(ot_cfg)},
              {"model", models::to_string(kind)},
              {"hyper", report::to_json(model.hyper)}}},
        };
        if (output.format == "csv") {
            Json flat = j["bound"];
            flat.erase("flags");
            emit(flat_csv(flat), output, out);
            return;
        }
        emit_json(j, output, out);
    }
};

struct ScoreCmd {
    double bound_total = 0.0;
    std::string bound_json;
    double risk_without = 0.0;
    double risk_with = -1.0;
    std::string task_id = "task";
    OutputOptions output;
    CLI::Option* total_opt = nullptr;
    CLI::Option* json_opt = nullptr;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("score", "WDJE score and transfer decision");
        total_opt = sub->add_option("--bound-total", bound_total, "Bound total");
        json_opt = sub->add_option("--bound-json", bound_json, "JSON file from `bound` (reads bound.total)")
                       ->check(CLI::ExistingFile);
        total_opt->excludes(json_opt);
        sub->add_option("--risk-without", risk_without, "Target-only empirical risk")
            ->required()
            ->check(CLI::Range(0.0, kInf));
        sub->add_option("--risk-with", risk_with, "Empirical risk after transfer (-1 = not measured)")
            ->check(CLI::Range(-1.0, kInf));
        sub->add_option("--task-id", task_id, "Identifier echoed in the output");
        output.add(*sub, false);
    }

    void run(std::ostream& out) const {
        double total = bound_total;
        if (json_opt->count() > 0) {
            std::ifstream in(bound_json);
            Json parsed;
            try {
                parsed = Json::parse(in);
            } catch (const Json::exception& e) {
                throw ValidationError(fmt::format("'{}' is not valid JSON: {}", bound_json, e.what()));
            }
            const Json* node = parsed.contains("bound") ? &parsed["bound"] : &parsed;
            if (!node->contains("total") || !(*node)["total"].is_number()) {
                throw ValidationError(fmt::format("'{}' has no numeric bound.total", bound_json));
            }
            total = (*node)["total"].get<double>();
        } else if (total_opt->count() == 0) {
            throw ValidationError("one of --bound-total or --bound-json is required");
        }
        bound::BoundReport rep;
        rep.total = total;
        std::optional<double> empirical;
        if (risk_with >= 0.0) empirical = empirical_transferability(risk_with, risk_without);
        const auto record = make_record(task_id, rep, risk_without, empirical);
        Json j = {
            {"task_id", record.task_id},
            {"bound_total", total},
            {"risk_without", risk_without},
            {"tr_score", record.tr_score},
            {"decision", to_string(record.decision)},
        };
        j["empirical_tr"] = empirical ? Json(*empirical) : Json();
        j["empirical_transferable"] = record.empirical_transferable ? Json(*record.empirical_transferable) : Json();
        emit_json(j, output, out);
    }
};

struct BaselineCmd {
    std::string metric = "all";
    std::string target_features;
    std::string target_labels;
    std::string predictions;
    DataOptions data;
    TaskOptions task;
    OutputOptions output;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("baseline", "LEEP, NCE, LogME and H-score on target data");
        sub->add_option("--metric", metric, "Metric to compute")
            ->check(CLI::IsMember({"leep", "nce", "logme", "hscore", "all"}));
        sub->add_option("--target-features", target_features, "Labelled target dataset")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--target-labels", target_labels, "Separate one-column target label file")
            ->check(CLI::ExistingFile);
        sub->add_option("--predictions", predictions, "Source-model softmax on the target rows (needed by leep, nce)")
            ->check(CLI::ExistingFile);
        data.add(*sub);
        task.add(*sub);
        output.add(*sub, false);
    }

    void run(std::ostream& out) const {
        const TaskSpec spec = task.spec();
        const bool all = metric == "all";
        const bool wants_predictions = all || metric == "leep" || metric == "nce";
        if (wants_predictions && predictions.empty() && !all) {
            throw ValidationError(fmt::format("--predictions is required for {}", metric));
        }
        if (!spec.is_classification() && (metric == "leep" || metric == "nce" || metric == "hscore")) {
            throw ValidationError(fmt::format("{} needs --task classification", metric));
        }
        const Dataset target = load_input(target_features, target_labels, data, spec);
        const Vector& y = target.require_labels();
        Json j = {{"n", target.size()}, {"config", {{"task", task_json(spec)}, {"metric", metric}}}};
        if (spec.is_classification() && wants_predictions && !predictions.empty()) {
            const Dataset probs = load_dataset(predictions, data.format(), TaskSpec::regression(), data.label_column);
            if (probs.size() != target.size()) {
                throw ValidationError(
                    fmt::format("{} prediction rows for {} target rows", probs.size(), target.size()));
            }
            const baselines::SourcePredictions preds(probs.features());
            std::vector<int> labels(static_cast<std::size_t>(y.size()));
            for (Eigen::Index i = 0; i < y.size(); ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(y(i));
            if (all || metric == "leep") j["leep"] = baselines::leep(preds, y, spec.class_count);
            if (all || metric == "nce") j["nce"] = baselines::nce(preds.pseudo_labels(), labels);
        }
        if (all || metric == "logme") {
            const auto result = baselines::logme(target.features(), y, spec);
            j["logme"] = result.value;
            j["logme_converged"] = result.converged;
        }
        if (spec.is_classification() && (all || metric == "hscore")) {
            j["hscore"] = baselines::hscore(target.features(), y);
        }
        emit_json(j, output, out);
    }
};

struct SweepCmd {
    std::string source_features;
    std::string source_labels;
    std::string target_features;
    std::string target_labels;
    std::vector<int> c_values;
    std::vector<double> r_values{1.0};
    std::vector<std::uint64_t> seeds{0};
    double labelled_fraction = 1.0;
    std::string evaluation = "training";
    bool no_baselines = false;
    std::size_t threads = 1;
    std::string task_prefix;
    DataOptions data;
    SyntheticOptions synthetic;  // its --task/--classes also describe given datasets
    OtOptions ot;
    BoundOptions bound;
    ModelOptions model;
    OutputOptions output;
    CLI::App* sub = nullptr;

    void add(CLI::App& app) {
        sub = app.add_subcommand("sweep", "Subtask sweep over (c, r, seed) with bound, risks and baselines");
        sub->footer(
            "Without --source-features the source/target pair is generated per seed from the synthetic options.");
        sub->add_option("--source-features", source_features, "Source dataset")->check(CLI::ExistingFile);
        sub->add_option("--source-labels", source_labels, "Separate source label file")->check(CLI::ExistingFile);
        sub->add_option("--target-features", target_features, "Target dataset")->check(CLI::ExistingFile);
        sub->add_option("--target-labels", target_labels, "Separate target label file")->check(CLI::ExistingFile);
        sub->add_option("--c", c_values, "Class-subset sizes (empty = all classes)")
            ->delimiter(',')
            ->check(CLI::Range(2, 1 << 20));
        sub->add_option("--r", r_values, "Target sampling ratios")->delimiter(',')->check(CLI::Range(1e-12, 1.0));
        sub->add_option("--seeds", seeds, "Seeds")->delimiter(',');
        sub->add_option("--labelled-fraction", labelled_fraction, "Fraction of each target subset that is labelled")
            ->check(CLI::Range(0.0, 1.0));
        sub->add_option("--evaluation", evaluation, "Rows the empirical risks are scored on")
            ->check(CLI::IsMember({"training", "held_out"}));
        sub->add_flag("--no-baselines", no_baselines, "Skip LEEP, NCE, LogME and H-score");
        sub->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024));
        sub->add_option("--task-prefix", task_prefix, "Prefix for task ids");
        sub->add_option("--data-format", data.data_format, "Input dataset format")
            ->check(CLI::IsMember({"csv", "binary"}));
        sub->add_option("--label-column", data.label_column, "Name of the label column in CSV inputs");
        synthetic.add(*sub);
        ot.add(*sub);
        bound.add(*sub);
        model.add(*sub);
        output.add(*sub, true);
    }

    void run(std::ostream& out) const {
        const bool given = !source_features.empty() || !target_features.empty();
        if (given && (source_features.empty() || target_features.empty())) {
            throw ValidationError("--source-features and --target-features must be given together");
        }
        TaskSpec spec;
        Json input_json;
        std::optional<harness::SweepInput> input;
        if (given) {
            const TaskOptions resolved{synthetic.task, synthetic.classes};
            spec = resolved.spec();
        } else {
            const auto cfg = synthetic.resolve(seeds.front());
            spec = cfg.task;
            input_json = {{"synthetic", report::to_json(cfg)}};
            input = cfg;
        }

        harness::PipelineConfig pipeline;
        pipeline.ot = ot.config();
        pipeline.bound = bound.config(spec, pipeline.ot.p);
        pipeline.model = model.kind(spec);
        pipeline.hyper = model.hyper;
        pipeline.labelled_fraction = labelled_fraction;
        pipeline.evaluation = harness::parse_evaluation(evaluation);
        pipeline.baselines = !no_baselines;
        pipeline.threads = threads;
        pipeline.task_prefix = task_prefix;
        pipeline.validate();

        harness::SweepGrid grid;
        if (!c_values.empty()) {
            if (!spec.is_classification()) throw ValidationError("--c applies to classification only");
            grid.c_values.assign(c_values.begin(), c_values.end());
        }
        grid.r_values = r_values;
        grid.seeds = seeds;
        grid.validate();

        if (given) {
            auto source = load_input(source_features, source_labels, data, spec);
            auto target = load_input(target_features, target_labels, data, spec);
            input_json = {{"source", source_features}, {"target", target_features}, {"task", task_json(spec)}};
            input = std::pair<Dataset, Dataset>(std::move(source), std::move(target));
        }
        const auto rows = harness::run_sweep(*input, grid, pipeline);
        if (output.format == "csv") {
            emit(report::sweep_csv(rows), output, out);
            return;
        }
        Json config = {{"input", input_json}, {"grid", report::to_json(grid)}, {"pipeline", report::to_json(pipeline)}};
        emit(report::dump(report::sweep_report(config, rows)), output, out);
    }
};

struct ConsistencyCmd {
    std::vector<long long> counts;
    std::string scores;
    OutputOptions output;
    CLI::Option* counts_opt = nullptr;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("consistency", "Confusion counts and consistency index");
        counts_opt = sub->add_option("--counts", counts, "n_pp,n_pm,n_mp,n_mm (empirical sign first)")
                         ->delimiter(',')
                         ->expected(4)
                         ->check(CLI::Range(0LL, std::numeric_limits<long long>::max()));
        auto* scores_opt =
            sub->add_option("--scores", scores, "CSV with empirical_tr and tr_score columns (e.g. a sweep CSV)")
                ->check(CLI::ExistingFile);
        counts_opt->excludes(scores_opt);
        output.add(*sub, false);
    }

    static std::vector<std::string> split_csv_line(const std::string& line) {
        std::vector<std::string> fields(1);
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char ch = line[i];
            if (quoted) {
                if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else if (ch == '"') {
                    quoted = false;
                } else {
                    fields.back() += ch;
                }
            } else if (ch == '"') {
                quoted = true;
            } else if (ch == ',') {
                fields.emplace_back();
            } else if (ch != '\r') {
                fields.back() += ch;
            }
        }
        return fields;
    }

    ConfusionMatrix from_scores() const {
        std::ifstream in(scores);
        std::string line;
        if (!std::getline(in, line)) throw ValidationError(fmt::format("'{}' is empty", scores));
        const auto header = split_csv_line(line);
        auto column = [&](const std::string& name) {
            for (std::size_t i = 0; i < header.size(); ++i) {
                if (header[i] == name) return i;
            }
            throw ValidationError(fmt::format("'{}' has no '{}' column", scores, name));
        };
        const auto e_col = column("empirical_tr");
        const auto t_col = column("tr_score");
        std::vector<double> empirical;
        std::vector<double> predicted;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            if (fields.size() <= std::max(e_col, t_col)) {
                throw ValidationError(fmt::format("'{}' line {} has too few fields", scores, line_no));
            }
            if (fields[e_col].empty() || fields[t_col].empty()) continue;  // failed sweep cells
            auto parse = [&](const std::string& text) {
                char* end = nullptr;
                const double v = std::strtod(text.c_str(), &end);
                if (end != text.c_str() + text.size()) {
                    throw ValidationError(fmt::format("'{}' line {}: '{}' is not a number", scores, line_no, text));
                }
                return v;
            };
            empirical.push_back(parse(fields[e_col]));
            predicted.push_back(parse(fields[t_col]));
        }
        return confusion_from_scores(empirical, predicted);
    }

    void run(std::ostream& out) const {
        ConfusionMatrix cm;
        if (!counts.empty()) {
            cm.n_pp = static_cast<std::size_t>(counts[0]);
            cm.n_pm = static_cast<std::size_t>(counts[1]);
            cm.n_mp = static_cast<std::size_t>(counts[2]);
            cm.n_mm = static_cast<std::size_t>(counts[3]);
        } else if (!scores.empty()) {
            cm = from_scores();
        } else {
            throw ValidationError("one of --counts or --scores is required");
        }
        const auto ci = consistency_index(cm);
        Json j = report::to_json(ci);
        j["confusion"] = report::to_json(cm);
        emit_json(j, output, out);
    }
};

struct SynthCmd {
    SyntheticOptions synthetic;
    std::uint64_t seed = 0;
    std::string source_out;
    std::string target_out;
    DataOptions data;
    OutputOptions output;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("synth", "Generate a synthetic source/target pair");
        synthetic.add(*sub);
        sub->add_option("--seed", seed, "Generator seed");
        sub->add_option("--source-out", source_out, "Source dataset path")->required();
        sub->add_option("--target-out", target_out, "Target dataset path")->required();
        sub->add_option("--data-format", data.data_format, "Dataset output format")
            ->check(CLI::IsMember({"csv", "binary"}));
        output.add(*sub, false);
    }

    void run(std::ostream& out) const {
        const auto cfg = synthetic.resolve(seed);
        const auto [source, target] = harness::gen_synthetic_pair(cfg);
        save_dataset(source, source_out, data.format());
        save_dataset(target, target_out, data.format());
        Json j = {
            {"source_out", source_out},
            {"target_out", target_out},
            {"rows", cfg.samples_per_domain},
            {"config", report::to_json(cfg)},
        };
        emit_json(j, output, out);
    }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Transferability estimation from Wasserstein bounds on source/target data", "wdje"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", "wdje 0.1.0");

    WassersteinCmd wasserstein;
    BoundCmd bound;
    ScoreCmd score;
    BaselineCmd baseline;
    SweepCmd sweep;
    ConsistencyCmd consistency;
    SynthCmd synth;
    wasserstein.add(app);
    bound.add(app);
    score.add(app);
    baseline.add(app);
    sweep.add(app);
    consistency.add(app);
    synth.add(app);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream sink;
        const int code = app.exit(e, out, sink);
        if (code != 0) err << "error: " << e.what() << "\n";
        return code == 0 ? 0 : 1;
    }

    try {
        const auto* selected = app.get_subcommands().front();
        const std::string name = selected->get_name();
        if (name == "wasserstein") wasserstein.run(out);
        else if (name == "bound") bound.run(out);
        else if (name == "score") score.run(out);
        else if (name == "baseline") baseline.run(out);
        else if (name == "sweep") sweep.run(out);
        else if (name == "consistency") consistency.run(out);
        else synth.run(out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace wdje::cli
