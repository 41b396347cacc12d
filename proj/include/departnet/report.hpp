#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "departnet/matching.hpp"
#include "departnet/model.hpp"

namespace departnet {

// `metric,kind,period,estimate,se,z,p_raw,significant`
void write_estimates(std::ostream& out, const std::vector<DiDEstimate>& estimates);
std::vector<DiDEstimate> read_estimates(std::istream& in);
nlohmann::json estimates_to_json(const std::vector<DiDEstimate>& estimates);

// `metric,value_did,slope_did,period`
void write_quadrant(std::ostream& out, const std::vector<DiDEstimate>& estimates);

// `metric,A,t,yhat,se,period`
void write_trajectories(std::ostream& out, const std::vector<TrajectoryPoint>& points);

// `metric,attribute,period,lo,hi,estimate,se,z,p_raw,significant`
void write_heterogeneous(std::ostream& out, const std::vector<HetContrast>& contrasts);
std::vector<HetContrast> read_heterogeneous(std::istream& in);

// One row per (metric, period), one column per attribute; empty cells for
// skipped attributes.
void write_het_grid(std::ostream& out, const std::vector<HetContrast>& contrasts);

// `metric,kind,period,estimate,se,significant`, periods side by side in row order.
void write_period_overlay(std::ostream& out, const std::vector<DiDEstimate>& estimates);

// Plain-text summary: one line per estimate, "*" marks Bonferroni significance.
void write_summary(std::ostream& out, const std::vector<DiDEstimate>& estimates,
                   const std::vector<std::string>& diagnostics);

}  // namespace departnet
