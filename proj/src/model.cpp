#include "departnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>

#include "departnet/numeric.hpp"
#include "departnet/table_io.hpp"

namespace departnet {

Estimation parse_estimation(std::string_view s) {
    if (s == "reml") return Estimation::reml;
    if (s == "ols_cluster_robust") return Estimation::ols_cluster_robust;
    throw ConfigError("unknown estimation mode '" + std::string(s) + "' (expected reml or ols_cluster_robust)");
}

Inference parse_inference(std::string_view s) {
    if (s == "normal") return Inference::normal;
    if (s == "student_t") return Inference::student_t;
    throw ConfigError("unknown inference '" + std::string(s) + "' (expected normal or student_t)");
}

std::string_view to_string(Estimation e) { return e == Estimation::reml ? "reml" : "ols_cluster_robust"; }
std::string_view to_string(Inference i) { return i == Inference::normal ? "normal" : "student_t"; }
std::string_view to_string(DiDKind k) { return k == DiDKind::value ? "value" : "slope"; }

void check_rank(const Eigen::MatrixXd& x, const std::vector<std::string>& columns) {
    if (x.rows() < x.cols())
        throw ModelError("design has " + std::to_string(x.rows()) + " rows for " + std::to_string(x.cols()) +
                         " columns");
    Eigen::MatrixXd scaled = x;
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
        const double norm = scaled.col(j).norm();
        if (norm > 0) scaled.col(j) /= norm;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    qr.setThreshold(1e-9);
    if (qr.rank() == x.cols()) return;
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < x.cols(); ++k) {
        if (!names.empty()) names += ", ";
        names += columns.at(static_cast<std::size_t>(perm(k)));
    }
    throw ModelError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                     std::to_string(x.cols()) + "); collinear columns: " + names);
}

namespace {

double control_value(const PanelRow& row, const std::string& name) {
    if (name == "baseline_size") return row.baseline_size;
    if (name == "anchor_week") return static_cast<double>(row.anchor_week);
    throw ConfigError("unknown control '" + name + "' (expected baseline_size or anchor_week)");
}

// Group index by first appearance of set_id.
void index_groups(std::span<const PanelRow> rows, Design& d) {
    std::unordered_map<std::string, int> ids;
    d.group.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto [it, inserted] = ids.emplace(rows[i].set_id, d.n_groups);
        if (inserted) {
            ++d.n_groups;
            d.group_ids.push_back(rows[i].set_id);
        }
        d.group[i] = it->second;
    }
}

// Appends centered control columns, skipping constant ones.
void append_controls(std::span<const PanelRow> rows, const std::vector<std::string>& controls, Design& d,
                     Eigen::Index first_col) {
    std::vector<Eigen::VectorXd> kept;
    std::vector<std::string> names;
    for (const auto& name : controls) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) v(static_cast<Eigen::Index>(i)) = control_value(rows[i], name);
        const double mu = v.size() ? v.mean() : 0.0;
        v.array() -= mu;
        if (v.size() == 0 || v.cwiseAbs().maxCoeff() == 0.0) {
            d.diagnostics.push_back("control " + name + " is constant and was dropped");
            continue;
        }
        kept.push_back(std::move(v));
        names.push_back(name);
    }
    d.x.conservativeResize(Eigen::NoChange, first_col + static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) {
        d.x.col(first_col + static_cast<Eigen::Index>(k)) = kept[k];
        d.columns.push_back(names[k]);
    }
}

}  // namespace

Design build_design(std::span<const PanelRow> rows, const ModelSpec& spec) {
    Design d;
    const auto n = static_cast<Eigen::Index>(rows.size());
    d.x.resize(n, col_controls);
    d.y.resize(n);
    d.columns = {"intercept", "A", "t", "hinge", "jump", "A:t", "A:hinge", "A:jump"};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        const double a = r.treated ? 1.0 : 0.0;
        const double t = r.t;
        d.x.row(i) << 1.0, a, t, hinge(r.t), jump(r.t), a * t, a * hinge(r.t), a * jump(r.t);
        d.y(i) = r.y;
    }
    index_groups(rows, d);
    append_controls(rows, spec.controls, d, col_controls);
    check_rank(d.x, d.columns);
    return d;
}

namespace {

// Cross-products aggregated by group size: the REML criterion depends on
// groups only through n_g, s_g = X_g'1 and u_g = 1'y_g.
struct SizeClass {
    double n = 0;
    double count = 0;
    Eigen::MatrixXd s_outer;  // sum of s_g s_g'
    Eigen::VectorXd s_u;      // sum of s_g u_g
    double u2 = 0;            // sum of u_g^2
};

struct Sufficient {
    double y_shift = 0;  // response mean removed before accumulation, restored on the intercept
    Eigen::Index n_obs = 0;
    Eigen::Index p = 0;
    Eigen::MatrixXd xtx;
    Eigen::VectorXd xty;
    double yty = 0;
    std::vector<SizeClass> classes;
};

Sufficient sufficient_statistics(const Design& d) {
    Sufficient s;
    s.n_obs = d.x.rows();
    s.p = d.x.cols();
    s.y_shift = d.y.size() ? d.y.mean() : 0.0;
    const Eigen::VectorXd y = d.y.array() - s.y_shift;
    s.xtx = d.x.transpose() * d.x;
    s.xty = d.x.transpose() * y;
    s.yty = y.squaredNorm();
    Eigen::MatrixXd sg = Eigen::MatrixXd::Zero(s.p, d.n_groups);
    Eigen::VectorXd ug = Eigen::VectorXd::Zero(d.n_groups);
    std::vector<int> ng(static_cast<std::size_t>(d.n_groups), 0);
    for (Eigen::Index i = 0; i < s.n_obs; ++i) {
        const int g = d.group[static_cast<std::size_t>(i)];
        sg.col(g) += d.x.row(i).transpose();
        ug(g) += y(i);
        ++ng[static_cast<std::size_t>(g)];
    }
    std::map<int, std::size_t> slot;
    for (int g = 0; g < d.n_groups; ++g) {
        auto [it, inserted] = slot.emplace(ng[static_cast<std::size_t>(g)], s.classes.size());
        if (inserted) {
            SizeClass c;
            c.n = ng[static_cast<std::size_t>(g)];
            c.s_outer = Eigen::MatrixXd::Zero(s.p, s.p);
            c.s_u = Eigen::VectorXd::Zero(s.p);
            s.classes.push_back(std::move(c));
        }
        auto& c = s.classes[it->second];
        c.count += 1;
        c.s_outer.noalias() += sg.col(g) * sg.col(g).transpose();
        c.s_u += sg.col(g) * ug(g);
        c.u2 += ug(g) * ug(g);
    }
    return s;
}

struct Evaluation {
    double deviance = 0;
    double rss = 0;  // y'V^-1 y - b'beta, V scaled by the residual variance
    Eigen::VectorXd beta;
    Eigen::MatrixXd a;
};

Evaluation evaluate(const Sufficient& s, double ratio) {
    Eigen::MatrixXd a = s.xtx;
    Eigen::VectorXd b = s.xty;
    double q = s.yty;
    double log_det_v = 0;
    for (const auto& c : s.classes) {
        const double w = ratio / (1.0 + c.n * ratio);
        a -= w * c.s_outer;
        b -= w * c.s_u;
        q -= w * c.u2;
        log_det_v += c.count * std::log1p(c.n * ratio);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw ModelError("weighted cross-product matrix is not positive definite");
    Evaluation e;
    e.beta = llt.solve(b);
    e.rss = q - b.dot(e.beta);
    if (!(e.rss > 0)) throw ModelError("residual sum of squares is not positive (perfect fit)");
    const double log_det_a = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    e.deviance = static_cast<double>(s.n_obs - s.p) * std::log(e.rss) + log_det_v + log_det_a;
    e.a = std::move(a);
    return e;
}

FitResult finish(const Sufficient& s, const Design& d, double ratio, std::vector<ProfilePoint> trace) {
    auto e = evaluate(s, ratio);
    FitResult f;
    f.estimation = Estimation::reml;
    f.beta = e.beta;
    f.beta(col_intercept) += s.y_shift;
    f.var_resid = e.rss / static_cast<double>(s.n_obs - s.p);
    f.var_group = ratio * f.var_resid;
    f.ratio = ratio;
    f.deviance = e.deviance;
    f.cov = f.var_resid * e.a.llt().solve(Eigen::MatrixXd::Identity(s.p, s.p));
    f.cov = 0.5 * (f.cov + f.cov.transpose());
    f.n_obs = static_cast<std::size_t>(s.n_obs);
    f.n_groups = static_cast<std::size_t>(d.n_groups);
    f.columns = d.columns;
    f.trace = std::move(trace);
    return f;
}

void require_estimable(const Design& d) {
    if (d.n_groups < 2) throw ModelError("mixed model needs at least 2 groups, got " + std::to_string(d.n_groups));
    if (d.x.rows() <= d.x.cols())
        throw ModelError("mixed model needs more observations (" + std::to_string(d.x.rows()) + ") than columns (" +
                         std::to_string(d.x.cols()) + ")");
}

std::string format_trace(const std::vector<ProfilePoint>& trace) {
    std::string out;
    const std::size_t start = trace.size() > 8 ? trace.size() - 8 : 0;
    for (std::size_t i = start; i < trace.size(); ++i)
        out += " (" + format_double(trace[i].ratio) + ", " + format_double(trace[i].deviance) + ")";
    return out;
}

}  // namespace

double reml_deviance(const Design& design, double ratio) {
    return evaluate(sufficient_statistics(design), ratio).deviance;
}

FitResult fit_mixed(const Design& design, const FitOptions& options) {
    require_estimable(design);
    const auto s = sufficient_statistics(design);
    std::vector<ProfilePoint> trace;
    auto dev = [&](double ratio) {
        const double v = evaluate(s, ratio).deviance;
        trace.push_back({ratio, v});
        return v;
    };
    if (options.fixed_ratio) {
        if (*options.fixed_ratio < 0) throw ModelError("variance ratio must be non-negative");
        dev(*options.fixed_ratio);
        return finish(s, design, *options.fixed_ratio, std::move(trace));
    }

    // Grid over log ratio, then golden-section refinement around the best
    // grid point; ratio 0 is the boundary candidate.
    constexpr double lo = -16.0, hi = 10.0, step = 0.25;
    const int n_grid = static_cast<int>(std::lround((hi - lo) / step)) + 1;
    std::vector<double> grid_dev(static_cast<std::size_t>(n_grid));
    int best = 0;
    for (int i = 0; i < n_grid; ++i) {
        grid_dev[static_cast<std::size_t>(i)] = dev(std::exp(lo + step * i));
        if (grid_dev[static_cast<std::size_t>(i)] < grid_dev[static_cast<std::size_t>(best)]) best = i;
    }
    const double zero_dev = dev(0.0);

    double a = lo + step * std::max(best - 1, 0);
    double b = lo + step * std::min(best + 1, n_grid - 1);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = dev(std::exp(c)), fd = dev(std::exp(d));
    int iterations = 0;
    while (std::exp(b) - std::exp(a) > options.tolerance * std::max(1.0, std::exp(a))) {
        if (++iterations > options.max_iterations)
            throw ModelError("REML search did not converge in " + std::to_string(options.max_iterations) +
                             " iterations; last (ratio, deviance):" + format_trace(trace));
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = dev(std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = dev(std::exp(d));
        }
    }
    double ratio = std::exp(0.5 * (a + b));
    double best_dev = dev(ratio);
    if (zero_dev <= best_dev) ratio = 0.0;
    return finish(s, design, ratio, std::move(trace));
}

FitResult fit_ols_cluster_robust(const Design& design) {
    require_estimable(design);
    const auto& x = design.x;
    const Eigen::Index p = x.cols(), n = x.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(x.transpose() * x);
    if (llt.info() != Eigen::Success) throw ModelError("cross-product matrix is not positive definite");
    FitResult f;
    f.estimation = Estimation::ols_cluster_robust;
    const double shift = design.y.size() ? design.y.mean() : 0.0;
    const Eigen::VectorXd y = design.y.array() - shift;
    f.beta = llt.solve(x.transpose() * y);
    const Eigen::VectorXd resid = y - x * f.beta;
    f.beta(col_intercept) += shift;
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(p, design.n_groups);
    for (Eigen::Index i = 0; i < n; ++i) scores.col(design.group[static_cast<std::size_t>(i)]) += x.row(i).transpose() * resid(i);
    const Eigen::MatrixXd bread = llt.solve(Eigen::MatrixXd::Identity(p, p));
    const double g = design.n_groups;
    const double scale = g / (g - 1.0) * static_cast<double>(n - 1) / static_cast<double>(n - p);
    f.cov = scale * bread * (scores * scores.transpose()) * bread;
    f.cov = 0.5 * (f.cov + f.cov.transpose());
    f.var_resid = resid.squaredNorm() / static_cast<double>(n - p);
    f.var_group = 0;
    f.ratio = 0;
    f.n_obs = static_cast<std::size_t>(n);
    f.n_groups = static_cast<std::size_t>(design.n_groups);
    f.columns = design.columns;
    return f;
}

FitResult fit_model(const Design& design, const FitOptions& options) {
    return options.estimation == Estimation::reml ? fit_mixed(design, options) : fit_ols_cluster_robust(design);
}

ContrastTest test_contrast(const FitResult& fit, const Eigen::VectorXd& c, Inference inference) {
    ContrastTest t;
    t.estimate = c.dot(fit.beta);
    t.std_error = std::sqrt(std::max(0.0, c.dot(fit.cov * c)));
    if (t.std_error == 0.0) {
        t.z = 0.0;
        t.p_raw = 1.0;
        return t;
    }
    t.z = t.estimate / t.std_error;
    if (inference == Inference::normal) {
        t.p_raw = std::erfc(std::abs(t.z) / std::sqrt(2.0));
    } else {
        const double df = static_cast<double>(fit.n_obs) - static_cast<double>(fit.beta.size());
        if (df < 1) throw ModelError("no residual degrees of freedom for a t test");
        boost::math::students_t dist(df);
        t.p_raw = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t.z)));
    }
    return t;
}

Eigen::VectorXd value_contrast(Eigen::Index p, int t_minus, int t_plus) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
    c(col_a_t) = t_plus - t_minus;
    c(col_a_hinge) = hinge(t_plus) - hinge(t_minus);
    c(col_a_jump) = jump(t_plus) - jump(t_minus);
    return c;
}

Eigen::VectorXd slope_contrast(Eigen::Index p) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
    c(col_a_hinge) = 1.0;
    return c;
}

namespace {

DiDEstimate make_estimate(const FitResult& fit, Metric metric, DiDKind kind, const Eigen::VectorXd& c,
                          Inference inference) {
    auto t = test_contrast(fit, c, inference);
    DiDEstimate e;
    e.metric = metric;
    e.kind = kind;
    e.estimate = t.estimate;
    e.std_error = t.std_error;
    e.z = t.z;
    e.p_raw = t.p_raw;
    return e;
}

}  // namespace

DiDEstimate value_did(const FitResult& fit, Metric metric, const InferenceOptions& options) {
    return make_estimate(fit, metric, DiDKind::value, value_contrast(fit.beta.size(), options.t_minus, options.t_plus),
                         options.inference);
}

DiDEstimate slope_did(const FitResult& fit, Metric metric, const InferenceOptions& options) {
    return make_estimate(fit, metric, DiDKind::slope, slope_contrast(fit.beta.size()), options.inference);
}

void correct_significance(std::vector<DiDEstimate>& estimates, double alpha) {
    const double threshold = alpha / static_cast<double>(std::max<std::size_t>(estimates.size(), 1));
    for (auto& e : estimates) e.significant = e.p_raw < threshold;
}

Eigen::VectorXd prediction_vector(Eigen::Index p, bool treated, int t) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
    const double a = treated ? 1.0 : 0.0;
    c(col_intercept) = 1.0;
    c(col_a) = a;
    c(col_t) = t;
    c(col_hinge) = hinge(t);
    c(col_jump) = jump(t);
    c(col_a_t) = a * t;
    c(col_a_hinge) = a * hinge(t);
    c(col_a_jump) = a * jump(t);
    return c;
}

double predict_mean(const FitResult& fit, bool treated, int t) {
    return prediction_vector(fit.beta.size(), treated, t).dot(fit.beta);
}

std::vector<TrajectoryPoint> trajectory(const FitResult& fit, Metric metric, int period, int horizon) {
    std::vector<TrajectoryPoint> out;
    for (bool treated : {false, true})
        for (int t = -horizon; t <= horizon; ++t) {
            const auto c = prediction_vector(fit.beta.size(), treated, t);
            out.push_back({metric, period, treated, t, c.dot(fit.beta), std::sqrt(std::max(0.0, c.dot(fit.cov * c)))});
        }
    return out;
}

PanelFit fit_panels(std::span<const Panel> panels, const ModelSpec& spec, const FitOptions& fit_options,
                    const InferenceOptions& inference, int horizon) {
    PanelFit out;
    struct Job {
        const Panel* panel;
        Metric metric;
    };
    std::vector<Job> jobs;
    for (const auto& panel : panels) {
        if (panels.size() > 1 && panel.rows.empty())
            throw ModelError("period " + std::to_string(panel.period) + " has no sets");
        for (auto m : panel_metrics(panel)) jobs.push_back({&panel, m});
        for (const auto& d : panel.diagnostics)
            out.diagnostics.push_back(panel.period ? "period " + std::to_string(panel.period) + ": " + d : d);
    }

    std::vector<std::optional<MetricFit>> fits(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::vector<std::vector<std::string>> design_notes(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        try {
            const auto rows = rows_for(*jobs[i].panel, jobs[i].metric);
            auto design = build_design(rows, spec);
            design_notes[i] = design.diagnostics;
            fits[i] = MetricFit{jobs[i].metric, jobs[i].panel->period, fit_model(design, fit_options)};
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const std::string label = std::string(metric_name(jobs[i].metric)) +
                                  (jobs[i].panel->period ? " (period " + std::to_string(jobs[i].panel->period) + ")" : "");
        if (!errors[i].empty()) throw ModelError(label + ": " + errors[i]);
        for (const auto& note : design_notes[i]) {
            const std::string line = label + ": " + note;
            if (std::find(out.diagnostics.begin(), out.diagnostics.end(), line) == out.diagnostics.end())
                out.diagnostics.push_back(line);
        }
        const auto& mf = *fits[i];
        out.estimates.push_back(value_did(mf.fit, mf.metric, inference));
        out.estimates.back().period = mf.period;
        out.estimates.push_back(slope_did(mf.fit, mf.metric, inference));
        out.estimates.back().period = mf.period;
        auto traj = trajectory(mf.fit, mf.metric, mf.period, horizon);
        out.trajectories.insert(out.trajectories.end(), traj.begin(), traj.end());
        out.fits.push_back(std::move(*fits[i]));
    }
    correct_significance(out.estimates, inference.alpha);
    return out;
}

HetFit fit_heterogeneous(const Panel& panel, const EgoAttributeTable& attributes, const ModelSpec& spec,
                         const FitOptions& fit_options, const InferenceOptions& inference) {
    HetFit out;
    std::vector<PanelRow> treated;
    for (const auto& r : panel.rows)
        if (r.treated) treated.push_back(r);

    // Attribute distribution over treated sets present in the panel.
    std::vector<std::string> set_ids;
    for (const auto& r : treated)
        if (set_ids.empty() || set_ids.back() != r.set_id) set_ids.push_back(r.set_id);
    std::sort(set_ids.begin(), set_ids.end());
    set_ids.erase(std::unique(set_ids.begin(), set_ids.end()), set_ids.end());
    for (const auto& id : set_ids)
        if (!attributes.by_set.contains(id)) throw DataError("heterogeneous: no attributes for set " + id);

    struct Active {
        std::size_t index;
        double mu, sd, lo, hi;
    };
    std::vector<Active> active;
    for (std::size_t k = 0; k < attributes.names.size(); ++k) {
        std::vector<double> v;
        for (const auto& id : set_ids) v.push_back(attributes.by_set.at(id).at(k));
        if (v.empty()) continue;
        const double mu = mean(v), sd = std::sqrt(variance(v));
        if (!(sd > 0)) {
            out.diagnostics.push_back("attribute " + attributes.names[k] + " is constant and was skipped");
            continue;
        }
        if (attributes.binary[k]) active.push_back({k, 0.0, 1.0, 0.0, 1.0});
        else active.push_back({k, mu, sd, quantile(v, 0.25), quantile(v, 0.75)});
        if (!attributes.binary[k] && active.back().hi == active.back().lo) {
            out.diagnostics.push_back("attribute " + attributes.names[k] + " has equal quartiles and was skipped");
            active.pop_back();
        }
    }
    if (active.empty()) return out;

    for (auto metric : panel_metrics(panel)) {
        std::vector<PanelRow> rows;
        for (const auto& r : treated)
            if (r.metric == metric) rows.push_back(r);
        Design d;
        const auto n = static_cast<Eigen::Index>(rows.size());
        const auto base = static_cast<Eigen::Index>(4 + 4 * active.size());
        d.x.resize(n, base);
        d.y.resize(n);
        d.columns = {"intercept", "t", "hinge", "jump"};
        for (const auto& a : active)
            for (const char* suffix : {"", ":t", ":hinge", ":jump"})
                d.columns.push_back(attributes.names[a.index] + suffix);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& r = rows[static_cast<std::size_t>(i)];
            const double t = r.t, h = hinge(r.t), j = jump(r.t);
            d.x(i, 0) = 1.0;
            d.x(i, 1) = t;
            d.x(i, 2) = h;
            d.x(i, 3) = j;
            const auto& values = attributes.by_set.at(r.set_id);
            for (std::size_t k = 0; k < active.size(); ++k) {
                const double xk = (values[active[k].index] - active[k].mu) / active[k].sd;
                const auto c = static_cast<Eigen::Index>(4 + 4 * k);
                d.x(i, c) = xk;
                d.x(i, c + 1) = xk * t;
                d.x(i, c + 2) = xk * h;
                d.x(i, c + 3) = xk * j;
            }
            d.y(i) = r.y;
        }
        index_groups(rows, d);
        append_controls(rows, spec.controls, d, base);
        check_rank(d.x, d.columns);
        for (const auto& note : d.diagnostics)
            out.diagnostics.push_back(std::string(metric_name(metric)) + ": " + note);
        const auto fit = fit_model(d, fit_options);

        for (std::size_t k = 0; k < active.size(); ++k) {
            const auto& a = active[k];
            const double delta = (a.hi - a.lo) / a.sd;
            Eigen::VectorXd c = Eigen::VectorXd::Zero(fit.beta.size());
            const auto col = static_cast<Eigen::Index>(4 + 4 * k);
            c(col + 1) = delta * (inference.t_plus - inference.t_minus);
            c(col + 2) = delta * (hinge(inference.t_plus) - hinge(inference.t_minus));
            c(col + 3) = delta * (jump(inference.t_plus) - jump(inference.t_minus));
            const auto test = test_contrast(fit, c, inference.inference);
            out.contrasts.push_back({metric, panel.period, attributes.names[a.index], a.lo, a.hi, test.estimate,
                                     test.std_error, test.z, test.p_raw, false});
        }
    }
    const double threshold = inference.alpha / static_cast<double>(std::max<std::size_t>(out.contrasts.size(), 1));
    for (auto& c : out.contrasts) c.significant = c.p_raw < threshold;
    return out;
}

}  // namespace departnet
