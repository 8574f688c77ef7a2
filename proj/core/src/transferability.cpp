#include "wdje/transferability.hpp"

#include <cmath>

#include <fmt/core.h>

#include "wdje/error.hpp"

namespace wdje {

std::string to_string(Decision decision) { return decision == Decision::transfer ? "transfer" : "no_transfer"; }

WdjeScore wdje_score(const bound::BoundReport& bound, double risk_without) {
    if (!(risk_without >= 0.0) || !std::isfinite(risk_without)) {
        throw ValidationError(fmt::format("risk without transfer = {} must be finite and >= 0", risk_without));
    }
    WdjeScore s;
    s.tr = bound.total - risk_without;
    s.decision = s.tr < 0.0 ? Decision::transfer : Decision::no_transfer;
    return s;
}

double empirical_transferability(double loss_with_transfer, double loss_without_transfer) {
    if (!(loss_with_transfer >= 0.0) || !(loss_without_transfer >= 0.0) || !std::isfinite(loss_with_transfer) ||
        !std::isfinite(loss_without_transfer)) {
        throw ValidationError(fmt::format("losses ({}, {}) must be finite and >= 0", loss_with_transfer,
                                          loss_without_transfer));
    }
    return loss_with_transfer - loss_without_transfer;
}

DecisionRecord make_record(std::string task_id, bound::BoundReport bound, double risk_without,
                           std::optional<double> empirical_tr) {
    const auto score = wdje_score(bound, risk_without);
    DecisionRecord r;
    r.task_id = std::move(task_id);
    r.tr_score = score.tr;
    r.decision = score.decision;
    r.bound = std::move(bound);
    r.risk_without = risk_without;
    r.empirical_tr = empirical_tr;
    if (empirical_tr) r.empirical_transferable = *empirical_tr < 0.0;
    return r;
}

namespace {

void bin(ConfusionMatrix& cm, double empirical, double predicted) {
    const bool empirical_plus = empirical >= 0.0;
    const bool predicted_plus = predicted >= 0.0;
    if (empirical == 0.0 || predicted == 0.0) ++cm.zero_ties;
    if (empirical_plus && predicted_plus) ++cm.n_pp;
    else if (empirical_plus) ++cm.n_pm;
    else if (predicted_plus) ++cm.n_mp;
    else ++cm.n_mm;
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const DecisionRecord> records) {
    ConfusionMatrix cm;
    for (const auto& r : records) {
        if (!r.empirical_tr) {
            throw ValidationError(fmt::format("record '{}' has no empirical transferability", r.task_id));
        }
        bin(cm, *r.empirical_tr, r.tr_score);
    }
    return cm;
}

ConfusionMatrix confusion_from_scores(std::span<const double> empirical_tr, std::span<const double> tr_score) {
    if (empirical_tr.size() != tr_score.size()) {
        throw ValidationError(fmt::format("{} empirical scores for {} WDJE scores", empirical_tr.size(),
                                          tr_score.size()));
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < tr_score.size(); ++i) bin(cm, empirical_tr[i], tr_score[i]);
    return cm;
}

ConsistencyResult consistency_index(const ConfusionMatrix& cm) {
    ConsistencyResult out;
    const auto mm = static_cast<double>(cm.n_mm);
    if (cm.n_pm + cm.n_mm > 0) out.ci_definition = mm / static_cast<double>(cm.n_pm + cm.n_mm);
    if (cm.n_mp + cm.n_mm > 0) out.ci_table = mm / static_cast<double>(cm.n_mp + cm.n_mm);
    return out;
}

}  // namespace wdje
