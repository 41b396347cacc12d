#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "departnet/panel.hpp"

namespace departnet {

enum class Estimation { reml, ols_cluster_robust };
enum class Inference { normal, student_t };

Estimation parse_estimation(std::string_view s);
Inference parse_inference(std::string_view s);
std::string_view to_string(Estimation e);
std::string_view to_string(Inference i);

inline double hinge(int t) { return t > 0 ? static_cast<double>(t) : 0.0; }
inline double jump(int t) { return t > 0 ? 1.0 : 0.0; }

// Fixed-effect column order of the DiD design.
enum Column : int { col_intercept, col_a, col_t, col_hinge, col_jump, col_a_t, col_a_hinge, col_a_jump, col_controls };

struct ModelSpec {
    Estimation estimation = Estimation::reml;
    std::vector<std::string> controls = {"baseline_size", "anchor_week"};
};

struct Design {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<int> group;  // 0..n_groups-1, in order of first appearance
    int n_groups = 0;
    std::vector<std::string> columns;
    std::vector<std::string> group_ids;
    std::vector<std::string> diagnostics;
};

// Throws ModelError naming the columns that are linear combinations of the others.
void check_rank(const Eigen::MatrixXd& x, const std::vector<std::string>& columns);

// Rows of one metric. Controls are centered; a constant control is dropped
// with a diagnostic.
Design build_design(std::span<const PanelRow> rows, const ModelSpec& spec = {});

struct ProfilePoint {
    double ratio = 0;
    double deviance = 0;
};

struct FitOptions {
    Estimation estimation = Estimation::reml;
    std::optional<double> fixed_ratio;  // skip the search and use this group/residual variance ratio
    int max_iterations = 200;
    double tolerance = 1e-8;
};

struct FitResult {
    Estimation estimation = Estimation::reml;
    Eigen::VectorXd beta;
    Eigen::MatrixXd cov;
    double var_group = 0;
    double var_resid = 0;
    double ratio = 0;
    double deviance = 0;  // REML criterion at the optimum, up to a constant
    std::size_t n_obs = 0;
    std::size_t n_groups = 0;
    std::vector<std::string> columns;
    std::vector<ProfilePoint> trace;
};

// Random-intercept model by profiled REML over the variance ratio.
FitResult fit_mixed(const Design& design, const FitOptions& options = {});
// OLS with CR1 cluster-robust covariance by group.
FitResult fit_ols_cluster_robust(const Design& design);
FitResult fit_model(const Design& design, const FitOptions& options);

// REML criterion at one ratio (for tests and diagnostics).
double reml_deviance(const Design& design, double ratio);

enum class DiDKind { value, slope };
std::string_view to_string(DiDKind k);

struct InferenceOptions {
    Inference inference = Inference::normal;
    double alpha = 0.01;
    int t_minus = -8;
    int t_plus = 8;
};

struct DiDEstimate {
    Metric metric = Metric::closeness;
    DiDKind kind = DiDKind::value;
    int period = 0;
    double estimate = 0;
    double std_error = 0;
    double z = 0;
    double p_raw = 1;
    bool significant = false;
};

struct ContrastTest {
    double estimate = 0;
    double std_error = 0;
    double z = 0;
    double p_raw = 1;
};

ContrastTest test_contrast(const FitResult& fit, const Eigen::VectorXd& c, Inference inference = Inference::normal);

Eigen::VectorXd value_contrast(Eigen::Index p, int t_minus = -8, int t_plus = 8);
Eigen::VectorXd slope_contrast(Eigen::Index p);

DiDEstimate value_did(const FitResult& fit, Metric metric, const InferenceOptions& options = {});
DiDEstimate slope_did(const FitResult& fit, Metric metric, const InferenceOptions& options = {});

// Bonferroni over the whole list.
void correct_significance(std::vector<DiDEstimate>& estimates, double alpha = 0.01);

// Model mean at (A, t) with controls at their sample means.
Eigen::VectorXd prediction_vector(Eigen::Index p, bool treated, int t);
double predict_mean(const FitResult& fit, bool treated, int t);

struct TrajectoryPoint {
    Metric metric = Metric::closeness;
    int period = 0;
    bool treated = false;
    int t = 0;
    double yhat = 0;
    double se = 0;
};
std::vector<TrajectoryPoint> trajectory(const FitResult& fit, Metric metric, int period, int horizon = 16);

struct MetricFit {
    Metric metric = Metric::closeness;
    int period = 0;
    FitResult fit;
};

struct PanelFit {
    std::vector<MetricFit> fits;
    std::vector<DiDEstimate> estimates;
    std::vector<TrajectoryPoint> trajectories;
    std::vector<std::string> diagnostics;
};

// Fits every metric of every panel (one per period) and applies Bonferroni
// over all value and slope estimates together. A panel without sets is a
// ModelError when more than one period is given.
PanelFit fit_panels(std::span<const Panel> panels, const ModelSpec& spec, const FitOptions& fit_options,
                    const InferenceOptions& inference, int horizon = 16);

// Per-ego attributes for the heterogeneous-effects model, keyed by treated set id.
struct EgoAttributeTable {
    std::vector<std::string> names;
    std::vector<bool> binary;
    std::unordered_map<std::string, std::vector<double>> by_set;
};

struct HetContrast {
    Metric metric = Metric::closeness;
    int period = 0;
    std::string attribute;
    double lo = 0;  // attribute levels compared, original scale
    double hi = 0;
    double estimate = 0;
    double std_error = 0;
    double z = 0;
    double p_raw = 1;
    bool significant = false;
};

struct HetFit {
    std::vector<HetContrast> contrasts;
    std::vector<std::string> diagnostics;
};

// Treated-only model with every attribute interacting with (t, hinge, jump).
// Contrasts compare level 1 vs 0 (binary) or Q3 vs Q1 (continuous) at t = +-8.
HetFit fit_heterogeneous(const Panel& panel, const EgoAttributeTable& attributes, const ModelSpec& spec,
                         const FitOptions& fit_options, const InferenceOptions& inference);

}  // namespace departnet
