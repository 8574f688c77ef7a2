#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "wdje/bound.hpp"

namespace wdje {

enum class Decision { transfer, no_transfer };

std::string to_string(Decision decision);

struct DecisionRecord {
    std::string task_id;
    double tr_score = 0;  // bound.total - risk_without
    Decision decision = Decision::no_transfer;
    bound::BoundReport bound;
    double risk_without = 0;
    std::optional<double> empirical_tr;  // risk_with - risk_without, when measured
    std::optional<bool> empirical_transferable;
};

/// Sign-pair counts. The first sign is the empirical transferability, the
/// second the WDJE score; zeros count as "+".
struct ConfusionMatrix {
    std::size_t n_pp = 0;
    std::size_t n_pm = 0;
    std::size_t n_mp = 0;
    std::size_t n_mm = 0;
    std::size_t zero_ties = 0;  // records with an exact zero in either score

    std::size_t total() const { return n_pp + n_pm + n_mp + n_mm; }
};

/// Two readings of the consistency index; nullopt means a zero denominator.
///   ci_definition = N_{-,-} / (N_{+,-} + N_{-,-})
///   ci_table      = N_{-,-} / (N_{-,+} + N_{-,-})   (the reading used for reporting)
struct ConsistencyResult {
    std::optional<double> ci_definition;
    std::optional<double> ci_table;
};

struct WdjeScore {
    double tr = 0;
    Decision decision = Decision::no_transfer;
};

/// tr = bound.total - risk_without; transfer iff tr < 0.
WdjeScore wdje_score(const bound::BoundReport& bound, double risk_without);

/// Signed loss difference, negative when transfer helped.
double empirical_transferability(double loss_with_transfer, double loss_without_transfer);

DecisionRecord make_record(std::string task_id, bound::BoundReport bound, double risk_without,
                           std::optional<double> empirical_tr = std::nullopt);

ConfusionMatrix confusion_matrix(std::span<const DecisionRecord> records);

/// Bins raw (empirical_tr, tr_score) pairs with the same tie rule.
ConfusionMatrix confusion_from_scores(std::span<const double> empirical_tr, std::span<const double> tr_score);

ConsistencyResult consistency_index(const ConfusionMatrix& cm);

}  // namespace wdje
