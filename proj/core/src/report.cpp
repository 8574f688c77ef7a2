#include "wdje/report.hpp"

#include <cmath>

#include <fmt/core.h>

#include "wdje/error.hpp"

namespace wdje::report {

namespace {

Json number(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

Json number(const std::optional<double>& value) { return value ? number(*value) : Json(nullptr); }

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
    std::string quoted = "\"";
    for (const char ch : text) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    return quoted + '"';
}

std::string csv_number(double value) { return std::isfinite(value) ? fmt::format("{}", value) : std::string(); }

std::string csv_number(const std::optional<double>& value) { return value ? csv_number(*value) : std::string(); }

}  // namespace

Json to_json(const ot::WassersteinConfig& config) {
    return {
        {"metric", ot::to_string(config.metric)},
        {"p", number(config.p)},
        {"solver", ot::to_string(config.solver)},
        {"epsilon", number(config.epsilon)},
        {"epsilon_scale", number(config.epsilon_scale)},
        {"max_iter", config.max_iter},
        {"tol", number(config.tol)},
        {"exact_threshold", config.exact_threshold},
    };
}

Json to_json(const bound::BoundConfig& config) {
    Json encoding = {{"mode", config.label_encoding.mode == LabelEncoding::Mode::one_hot ? "one_hot" : "raw_scalar"}};
    encoding["class_count"] = config.label_encoding.class_count ? Json(*config.label_encoding.class_count) : Json();
    return {
        {"loss", bound::to_string(config.loss)},
        {"k_lambda_product", number(config.k_lambda_product)},
        {"M", number(config.M)},
        {"p", number(config.p)},
        {"K_weight_sup", number(config.K_weight_sup)},
        {"k_floor", number(config.k_floor)},
        {"label_encoding", encoding},
    };
}

Json to_json(const bound::GeneralizationDiagnostics& d) {
    Json terms = Json::object();
    for (const auto& [name, value] : d.sampling_terms) terms[name] = number(value);
    return {
        {"delta", number(d.delta)},
        {"B", number(d.B)},
        {"M_S", number(d.M_S)},
        {"rademacher", number(d.rademacher)},
        {"zeta", number(d.zeta)},
        {"q", number(d.q)},
        {"d", d.d},
        {"p", number(d.p)},
        {"moment_q_source_x", number(d.moment_q_source_x)},
        {"moment_q_target_x", number(d.moment_q_target_x)},
        {"moment_q_s1_y", number(d.moment_q_s1_y)},
        {"moment_q_target_y", number(d.moment_q_target_y)},
        {"sampling_terms", terms},
        {"total_slack", number(d.total_slack)},
    };
}

Json to_json(const bound::BoundReport& r) {
    Json out = {
        {"source_risk", number(r.source_risk)},
        {"k", number(r.k)},
        {"lambda", number(r.lambda)},
        {"phi_lambda", number(r.phi_lambda)},
        {"domain_term", number(r.domain_term)},
        {"task_term_w", number(r.task_term_w)},
        {"task_term_moment", number(r.task_term_moment)},
        {"slack_term", number(r.slack_term)},
        {"total", number(r.total)},
        {"mode", bound::to_string(r.mode)},
        {"flags", r.flags},
    };
    out["diagnostics"] = r.diagnostics ? to_json(*r.diagnostics) : Json();
    return out;
}

Json to_json(const DecisionRecord& record) {
    Json out = {
        {"task_id", record.task_id},
        {"tr_score", number(record.tr_score)},
        {"decision", to_string(record.decision)},
        {"bound", to_json(record.bound)},
        {"risk_without", number(record.risk_without)},
        {"empirical_tr", number(record.empirical_tr)},
    };
    out["empirical_transferable"] = record.empirical_transferable ? Json(*record.empirical_transferable) : Json();
    return out;
}

Json to_json(const ConfusionMatrix& cm) {
    return {
        {"n_pp", cm.n_pp}, {"n_pm", cm.n_pm}, {"n_mp", cm.n_mp},
        {"n_mm", cm.n_mm}, {"zero_ties", cm.zero_ties}, {"total", cm.total()},
    };
}

Json to_json(const ConsistencyResult& ci) {
    return {{"ci_definition", number(ci.ci_definition)}, {"ci_table", number(ci.ci_table)}};
}

Json to_json(const models::Hyper& hyper) {
    return {
        {"learning_rate", number(hyper.learning_rate)},
        {"epochs", hyper.epochs},
        {"l2", number(hyper.l2)},
        {"finetune_epochs", hyper.finetune_epochs},
    };
}

Json to_json(const harness::SyntheticConfig& config) {
    Json out = {
        {"task", config.task.is_classification() ? "classification" : "regression"},
        {"classes", config.task.class_count},
        {"feature_dim", config.feature_dim},
        {"samples_per_domain", config.samples_per_domain},
        {"mean_shift", number(config.mean_shift)},
        {"label_permutation", config.label_permutation},
        {"label_shift", number(config.label_shift)},
        {"noise_sigma", number(config.noise_sigma)},
        {"seed", config.seed},
    };
    return out;
}

Json to_json(const harness::PipelineConfig& config) {
    return {
        {"bound", to_json(config.bound)},
        {"ot", to_json(config.ot)},
        {"model", models::to_string(config.model)},
        {"hyper", to_json(config.hyper)},
        {"labelled_fraction", number(config.labelled_fraction)},
        {"evaluation", harness::to_string(config.evaluation)},
        {"baselines", config.baselines},
        {"threads", config.threads},
        {"task_prefix", config.task_prefix},
    };
}

Json to_json(const harness::SweepGrid& grid) {
    Json c = Json::array();
    for (const auto& value : grid.c_values) c.push_back(value ? Json(*value) : Json());
    Json r = Json::array();
    for (const double value : grid.r_values) r.push_back(number(value));
    return {{"c_values", c}, {"r_values", r}, {"seeds", grid.seeds}};
}

Json to_json(const harness::SweepRow& row) {
    Json out = {
        {"task_id", row.task_id},
        {"r", number(row.r)},
        {"seed", row.seed},
        {"bound_total", number(row.bound_total)},
        {"tr_score", number(row.tr_score)},
        {"risk_without", number(row.risk_without)},
        {"risk_with", number(row.risk_with)},
        {"empirical_tr", number(row.empirical_tr)},
        {"leep", number(row.leep)},
        {"nce", number(row.nce)},
        {"logme", number(row.logme)},
        {"hscore", number(row.hscore)},
        {"status", row.status},
        {"accuracy_without", number(row.accuracy_without)},
        {"accuracy_with", number(row.accuracy_with)},
        {"w_x", number(row.w_x)},
        {"n_source", row.n_source},
        {"n_target", row.n_target},
        {"n_t1", row.n_t1},
        {"warnings", row.warnings},
    };
    out["c"] = row.c ? Json(*row.c) : Json();
    out["bound"] = row.ok() ? to_json(row.bound) : Json();
    return out;
}

Json to_json(const harness::SweepEvaluation& evaluation) {
    Json pearson = Json::object();
    for (const auto& mc : evaluation.pearson) {
        pearson[mc.metric] = {{"against", mc.against}, {"value", number(mc.pearson)}, {"rows", mc.rows}};
    }
    return {
        {"pearson", pearson},
        {"confusion", to_json(evaluation.confusion)},
        {"ci", to_json(evaluation.ci)},
        {"rows_used", evaluation.rows_used},
    };
}

Json sweep_report(const Json& config, const std::vector<harness::SweepRow>& rows) {
    Json out;
    out["config"] = config;
    Json row_list = Json::array();
    for (const auto& row : rows) row_list.push_back(to_json(row));
    out["rows"] = std::move(row_list);
    try {
        out["evaluation"] = to_json(harness::evaluate_sweep(rows));
    } catch (const Error& e) {
        out["evaluation"] = {{"error", e.what()}};
    }
    return out;
}

std::string sweep_csv(const std::vector<harness::SweepRow>& rows) {
    std::string out = "task_id,c,r,bound_total,tr_score,risk_without,risk_with,empirical_tr,leep,nce,logme,hscore,status\n";
    for (const auto& row : rows) {
        const bool ok = row.ok();
        auto value = [ok](double v) { return ok ? csv_number(v) : std::string(); };
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(row.task_id),
                           row.c ? std::to_string(*row.c) : std::string(), csv_number(row.r), value(row.bound_total),
                           value(row.tr_score), value(row.risk_without), value(row.risk_with),
                           value(row.empirical_tr), csv_number(row.leep), csv_number(row.nce), csv_number(row.logme),
                           csv_number(row.hscore), csv_field(row.status));
    }
    return out;
}

std::string dump(const Json& json) { return json.dump(2) + "\n"; }

}  // namespace wdje::report
