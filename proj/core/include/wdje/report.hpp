#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wdje/bound.hpp"
#include "wdje/harness.hpp"
#include "wdje/ot.hpp"
#include "wdje/transferability.hpp"

namespace wdje::report {

using Json = nlohmann::json;

// Non-finite numbers serialize as null.
Json to_json(const ot::WassersteinConfig& config);
Json to_json(const bound::BoundConfig& config);
Json to_json(const bound::GeneralizationDiagnostics& diagnostics);
Json to_json(const bound::BoundReport& report);
Json to_json(const DecisionRecord& record);
Json to_json(const ConfusionMatrix& cm);
Json to_json(const ConsistencyResult& ci);
Json to_json(const models::Hyper& hyper);
Json to_json(const harness::SyntheticConfig& config);
Json to_json(const harness::PipelineConfig& config);
Json to_json(const harness::SweepGrid& grid);
Json to_json(const harness::SweepRow& row);
Json to_json(const harness::SweepEvaluation& evaluation);

/// {config, rows, evaluation}. A failed evaluation is reported as
/// {"error": message}.
Json sweep_report(const Json& config, const std::vector<harness::SweepRow>& rows);

/// Header task_id,c,r,bound_total,tr_score,risk_without,risk_with,empirical_tr,
/// leep,nce,logme,hscore,status; absent values are empty fields.
std::string sweep_csv(const std::vector<harness::SweepRow>& rows);

/// Two-space indented JSON with a trailing newline.
std::string dump(const Json& json);

}  // namespace wdje::report
