#include "pssm/datadriven.hpp"

#include "pssm/error.hpp"
#include "pssm/io.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace pssm {

// ---------------------------------------------------------------- POD

double PodChart::gap() const {
    if (singular_values.size() < 3 || singular_values[2] == 0.0) return std::numeric_limits<double>::infinity();
    return singular_values[1] / singular_values[2];
}

PodChart pod_chart(const TrajectoryDataset& data) {
    if (data.rows() < 3) throw Error(ErrorCode::TooShort, "POD needs at least three snapshots");
    if (data.dimension() < 2) throw Error(ErrorCode::InvalidArgument, "POD needs at least two state components");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(data.states, Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    if (!(s[0] > 0) || s[1] / s[0] < 1e-12) {
        std::ostringstream msg;
        msg << "sigma_2 / sigma_1 = " << (s[0] > 0 ? s[1] / s[0] : 0.0);
        throw Error(ErrorCode::RankDeficient, msg.str());
    }
    PodChart chart;
    chart.V = svd.matrixV().leftCols<2>();
    for (int j = 0; j < 2; ++j) {
        Eigen::Index imax = 0;
        chart.V.col(j).cwiseAbs().maxCoeff(&imax);
        if (chart.V(imax, j) < 0) chart.V.col(j) *= -1.0;
    }
    chart.singular_values = s;
    chart.fixed_point = data.fixed_point.size() == data.dimension() ? data.fixed_point
                                                                      : Eigen::VectorXd::Zero(data.dimension());
    return chart;
}

// ---------------------------------------------------------------- regression

namespace {

struct LeastSquares {
    Eigen::MatrixXd coeffs;  // unknowns x targets
    FitDiagnostics diagnostics;
};

LeastSquares solve_scaled(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y, double ridge) {
    const Eigen::Index m = D.rows(), p = D.cols();
    Eigen::VectorXd scale = D.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < p; ++j)
        if (scale[j] == 0.0) scale[j] = 1.0;
    const Eigen::VectorXd inv = scale.cwiseInverse();

    Eigen::MatrixXd A(ridge > 0 ? m + p : m, p);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(A.rows(), Y.cols());
    A.topRows(m) = D * inv.asDiagonal();
    B.topRows(m) = Y;
    // Ridge acts on the unknowns of the unit-column design, so it is blind to
    // the units of u and of the target.
    if (ridge > 0) A.bottomRows(p) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(p, p);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    LeastSquares out;
    out.coeffs = inv.asDiagonal() * qr.solve(B);

    const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(A.topRows(m)).singularValues();
    auto& d = out.diagnostics;
    d.rows = static_cast<int>(m);
    d.unknowns = static_cast<int>(p);
    d.condition = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
    d.ill_conditioned = d.condition > kIllConditioned;
    const double ynorm = Y.norm();
    d.relative_residual = ynorm > 0 ? (D * out.coeffs - Y).norm() / ynorm : (D * out.coeffs).norm();
    return out;
}

void require_rows(Eigen::Index rows, int unknowns, const char* what) {
    if (rows < 2 * static_cast<Eigen::Index>(unknowns)) {
        std::ostringstream msg;
        msg << what << ": " << rows << " rows for " << unknowns << " unknowns (need twice as many rows)";
        throw Error(ErrorCode::TooShort, msg.str());
    }
}

Eigen::MatrixX2d reduced_coordinates(const TrajectoryDataset& data, const PodChart& chart) {
    if (chart.V.rows() != data.dimension() || chart.V.cols() != 2)
        throw Error(ErrorCode::InvalidArgument, "chart does not match the dataset dimension");
    return data.states * chart.V;
}

}  // namespace

ManifoldFit fit_manifold(const TrajectoryDataset& data, const PodChart& chart, int mw, double ridge) {
    if (mw < 2) throw Error(ErrorCode::InvalidArgument, "M_W must be at least 2");
    const int p = monomial_count(2, mw);
    require_rows(data.rows(), p, "fit_manifold");
    const Eigen::MatrixX2d U = reduced_coordinates(data, chart);
    const Eigen::MatrixXd target = data.states - U * chart.V.transpose();
    auto ls = solve_scaled(monomial_design(U, 2, mw), target, ridge);
    return {Poly2(2, mw, ls.coeffs.transpose()), ls.diagnostics};
}

Eigen::MatrixXd central_difference4(const Eigen::MatrixXd& Y, double dt) {
    const Eigen::Index m = Y.rows();
    if (m < 5) throw Error(ErrorCode::TooShort, "fourth-order differences need at least five rows");
    const Eigen::Index k = m - 4;
    return (Y.middleRows(0, k) - 8.0 * Y.middleRows(1, k) + 8.0 * Y.middleRows(3, k) - Y.middleRows(4, k)) /
           (12.0 * dt);
}

ReducedFit fit_reduced_dynamics(const TrajectoryDataset& data, const PodChart& chart, int mr, double ridge) {
    if (mr < 1) throw Error(ErrorCode::InvalidArgument, "M_R must be at least 1");
    if (data.rows() < 5) throw Error(ErrorCode::TooShort, "reduced dynamics fit needs at least five rows");
    if (!(data.dt > 0)) throw Error(ErrorCode::InvalidArgument, "dataset dt must be positive");
    const int p = monomial_count(1, mr);
    require_rows(data.rows() - 4, p, "fit_reduced_dynamics");
    const Eigen::MatrixX2d U = reduced_coordinates(data, chart);
    const Eigen::MatrixXd dU = central_difference4(U, data.dt);
    const Eigen::MatrixX2d Ui = U.middleRows(2, dU.rows());
    auto ls = solve_scaled(monomial_design(Ui, 1, mr), dU, ridge);
    return {Poly2(1, mr, ls.coeffs.transpose()), ls.diagnostics};
}

Eigen::Matrix2d SsmModel::linear_part() const {
    Eigen::Matrix2d A;
    A.col(0) = R.coefficient({1, 0});
    A.col(1) = R.coefficient({0, 1});
    return A;
}

SsmModel fit_ssm_model(const TrajectoryDataset& data, int mw, int mr, double ridge) {
    SsmModel m;
    m.mu = data.mu;
    m.chart = pod_chart(data);
    auto wf = fit_manifold(data, m.chart, mw, ridge);
    auto rf = fit_reduced_dynamics(data, m.chart, mr, ridge);
    m.W = std::move(wf.W);
    m.R = std::move(rf.R);
    m.manifold_diagnostics = wf.diagnostics;
    m.reduced_diagnostics = rf.diagnostics;
    return m;
}

SsmModel apply_gauge(const SsmModel& model, const Eigen::Matrix2d& Q) {
    if (!(Q.transpose() * Q).isApprox(Eigen::Matrix2d::Identity(), 1e-12))
        throw Error(ErrorCode::InvalidArgument, "gauge matrix must be orthogonal");
    SsmModel out = model;
    out.chart.V = model.chart.V * Q;
    out.W = model.W.compose_linear(Q);
    out.R = model.R.compose_linear(Q).left_multiply(Q.transpose());
    return out;
}

// ---------------------------------------------------------------- alignment

Eigen::Matrix2d procrustes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::Matrix2d M = B.transpose() * A;
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

double principal_angle_deg(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::Matrix2d M = A.transpose() * B;
    const double smin = Eigen::JacobiSVD<Eigen::Matrix2d>(M).singularValues().minCoeff();
    return std::acos(std::clamp(smin, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

std::vector<SsmModel> align_charts(const std::vector<SsmModel>& models) {
    if (models.size() < 2) throw Error(ErrorCode::InvalidArgument, "alignment needs at least two models");
    std::vector<SsmModel> out;
    out.reserve(models.size());
    out.push_back(models.front());
    for (std::size_t i = 1; i < models.size(); ++i) {
        const auto& prev = out.back().chart.V;
        const auto& cur = models[i].chart.V;
        if (cur.rows() != prev.rows()) throw Error(ErrorCode::KeyMismatch, "charts differ in dimension");
        const double angle = principal_angle_deg(prev, cur);
        if (angle > kMaxPrincipalAngleDeg) {
            std::ostringstream msg;
            msg << "principal angle " << angle << " deg between mu = " << models[i - 1].mu << " and mu = "
                << models[i].mu;
            throw Error(ErrorCode::SubspaceJump, msg.str());
        }
        out.push_back(apply_gauge(models[i], procrustes(prev, cur)));
    }
    return out;
}

// ---------------------------------------------------------------- interpolation

namespace {

Eigen::Index packed_size(int n, int mw, int mr) {
    return n + 2 * n + static_cast<Eigen::Index>(n) * monomial_count(2, mw) + 2 * monomial_count(1, mr);
}

Eigen::RowVectorXd pack(const SsmModel& m) {
    const int n = m.dimension();
    Eigen::RowVectorXd v(packed_size(n, m.mw(), m.mr()));
    Eigen::Index o = 0;
    auto put = [&](const Eigen::MatrixXd& block) {
        v.segment(o, block.size()) = Eigen::Map<const Eigen::RowVectorXd>(block.data(), block.size());
        o += block.size();
    };
    put(m.chart.fixed_point);
    put(m.chart.V);
    put(m.W.coeffs());
    put(m.R.coeffs());
    return v;
}

SsmModel unpack(const Eigen::RowVectorXd& v, int n, int mw, int mr, double mu) {
    SsmModel m;
    m.mu = mu;
    Eigen::Index o = 0;
    auto take = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd block = Eigen::Map<const Eigen::MatrixXd>(v.data() + o, rows, cols);
        o += rows * cols;
        return block;
    };
    m.chart.fixed_point = take(n, 1);
    m.chart.V = take(n, 2);
    m.W = Poly2(2, mw, take(n, monomial_count(2, mw)));
    m.R = Poly2(1, mr, take(2, monomial_count(1, mr)));
    return m;
}

Eigen::MatrixXd polar_orthonormalize(const Eigen::MatrixXd& V) {
    const Eigen::Matrix2d G = V.transpose() * V;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(G);
    const Eigen::Matrix2d inv_sqrt =
        es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    return V * inv_sqrt;
}

}  // namespace

ParametricSsmModel::ParametricSsmModel(std::vector<SsmModel> models) : models_(std::move(models)) {
    if (models_.size() < 3) throw Error(ErrorCode::InvalidArgument, "interpolation needs at least three knots");
    const auto& first = models_.front();
    for (const auto& m : models_) {
        if (m.mw() != first.mw() || m.mr() != first.mr() || m.W.min_degree() != 2 || m.R.min_degree() != 1 ||
            m.dimension() != first.dimension() || m.W.dim() != first.dimension() || m.R.dim() != 2 ||
            m.chart.fixed_point.size() != first.dimension())
            throw Error(ErrorCode::KeyMismatch, "knot models do not share dimension and (M_W, M_R) key sets");
        if (!knots_.empty() && !(m.mu > knots_.back()))
            throw Error(ErrorCode::InvalidArgument, "knot parameters must increase strictly");
        knots_.push_back(m.mu);
    }
    Eigen::MatrixXd values(static_cast<Eigen::Index>(models_.size()), packed_size(dimension(), mw(), mr()));
    for (std::size_t i = 0; i < models_.size(); ++i) values.row(static_cast<Eigen::Index>(i)) = pack(models_[i]);
    splines_ = NaturalCubicSplines(knots_, std::move(values));
}

SsmModel ParametricSsmModel::at(double mu) const {
    SsmModel m = unpack(splines_(mu), dimension(), mw(), mr(), mu);
    m.chart.V = polar_orthonormalize(m.chart.V);
    return m;
}

Eigen::Matrix2d ParametricSsmModel::linear_part(double mu) const { return at(mu).linear_part(); }

ParametricSsmModel interpolate_models(const std::vector<SsmModel>& aligned) { return ParametricSsmModel(aligned); }

// ---------------------------------------------------------------- prediction

TrajectoryDataset predict_trajectory(const SsmModel& model, const Eigen::VectorXd& x0, double t_end, double dt,
                                     double t0, const IntegratorOptions& options) {
    if (x0.size() != model.dimension()) throw Error(ErrorCode::InvalidArgument, "initial state has wrong size");
    const Eigen::VectorXd u0 = model.project(x0);
    auto rhs = [&model](const Eigen::VectorXd& u, Eigen::VectorXd& du) { du = model.R(Eigen::Vector2d(u)); };
    const auto traj = integrate(rhs, u0, t_end, dt, options, nullptr, t0);
    TrajectoryDataset d;
    d.mu = model.mu;
    d.dt = dt;
    d.times = traj.times;
    d.fixed_point = model.chart.fixed_point;
    d.states.resize(traj.states.rows(), model.dimension());
    for (Eigen::Index i = 0; i < traj.states.rows(); ++i)
        d.states.row(i) = model.lift_centered(traj.states.row(i).transpose()).transpose();
    d.provenance.protocol = "prediction";
    d.provenance.initial_condition = x0;
    return d;
}

TrajectoryDataset predict_trajectory(const ParametricSsmModel& pm, double mu, const Eigen::VectorXd& x0, double t_end,
                                     double dt, double t0, const IntegratorOptions& options) {
    if (mu < pm.lo() || mu > pm.hi()) {
        std::ostringstream msg;
        msg << "mu = " << mu << " outside the knot hull [" << pm.lo() << ", " << pm.hi() << "]";
        throw Error(ErrorCode::OutOfRange, msg.str());
    }
    return predict_trajectory(pm.at(mu), x0, t_end, dt, t0, options);
}

double leading_growth_rate(const ParametricSsmModel& pm, double mu) {
    return Eigen::EigenSolver<Eigen::Matrix2d>(pm.linear_part(mu), false).eigenvalues().real().maxCoeff();
}

double predict_bifurcation(const ParametricSsmModel& pm, double lo, double hi, double tol) {
    if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "bifurcation search needs lo < hi");
    if (lo < pm.lo() || hi > pm.hi()) throw Error(ErrorCode::OutOfRange, "search interval leaves the knot hull");
    double flo = leading_growth_rate(pm, lo), fhi = leading_growth_rate(pm, hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0) == (fhi < 0)) {
        std::ostringstream msg;
        msg << "leading growth rate has one sign on [" << lo << ", " << hi << "] (" << flo << ", " << fhi << ")";
        throw Error(ErrorCode::NoSignChange, msg.str());
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = leading_growth_rate(pm, mid);
        if (fm == 0.0) return mid;
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------- metrics

double nmte(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction) {
    if (truth.rows() != prediction.rows() || truth.cols() != prediction.cols())
        throw Error(ErrorCode::GridMismatch, "trajectories differ in shape");
    if (truth.rows() == 0) throw Error(ErrorCode::TooShort, "empty trajectory");
    const double err = (truth - prediction).rowwise().norm().sum();
    const double peak = truth.rowwise().norm().maxCoeff();
    if (err == 0.0) return 0.0;
    return peak > 0 ? err / (static_cast<double>(truth.rows()) * peak) : std::numeric_limits<double>::infinity();
}

double nmae(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction) {
    if (truth.rows() != prediction.rows() || truth.cols() != prediction.cols())
        throw Error(ErrorCode::GridMismatch, "trajectories differ in shape");
    const Eigen::VectorXd a = truth.rowwise().norm(), b = prediction.rowwise().norm();
    const double err = (a - b).cwiseAbs().sum();
    if (err == 0.0) return 0.0;
    const double total = a.sum();
    return total > 0 ? err / total : std::numeric_limits<double>::infinity();
}

double reconstruction_error(const TrajectoryDataset& data, const SsmModel& model) {
    if (data.dimension() != model.dimension()) throw Error(ErrorCode::InvalidArgument, "model dimension mismatch");
    const Eigen::VectorXd fp = data.fixed_point.size() == data.dimension()
                                   ? data.fixed_point
                                   : Eigen::VectorXd::Zero(data.dimension());
    Eigen::MatrixXd rec(data.rows(), data.dimension());
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const Eigen::VectorXd x = data.states.row(i).transpose() + fp;
        rec.row(i) = (model.lift(model.project(x)) - fp).transpose();
    }
    return nmte(data.states, rec);
}

ErrorSummary metrics(const TrajectoryDataset& truth, const TrajectoryDataset& prediction, const SsmModel* model) {
    if (truth.rows() != prediction.rows() || truth.dimension() != prediction.dimension() ||
        truth.times.size() != prediction.times.size())
        throw Error(ErrorCode::GridMismatch, "truth and prediction have different shapes");
    for (Eigen::Index i = 0; i < truth.times.size(); ++i)
        if (std::abs(truth.times[i] - prediction.times[i]) > 1e-9 * std::max(1.0, std::abs(truth.times[i])))
            throw Error(ErrorCode::GridMismatch, "truth and prediction use different time grids");
    ErrorSummary s;
    s.nmte = nmte(truth.states, prediction.states);
    s.nmae = nmae(truth.states, prediction.states);
    s.rec_error = model ? reconstruction_error(truth, *model) : std::numeric_limits<double>::quiet_NaN();
    return s;
}

// ---------------------------------------------------------------- JSON

namespace {

Poly2 coefficients_from_json(const nlohmann::json& j, int dim, int min_degree, int max_degree) {
    Poly2 p(dim, min_degree, max_degree);
    const auto keys = monomials(min_degree, max_degree);
    if (j.size() != keys.size()) throw Error(ErrorCode::KeyMismatch, "coefficient key set has the wrong size");
    for (const auto& k : keys) {
        const auto key = exponent_key(k);
        if (!j.contains(key)) throw Error(ErrorCode::KeyMismatch, "missing coefficient key '" + key + "'");
        const auto v = vector_from_json(j[key]);
        if (v.size() != dim) throw Error(ErrorCode::KeyMismatch, "coefficient '" + key + "' has the wrong length");
        p.coefficient(k) = v;
    }
    return p;
}

nlohmann::json diagnostics_json(const FitDiagnostics& d) {
    return {{"rows", d.rows},
            {"unknowns", d.unknowns},
            {"relative_residual", d.relative_residual},
            {"condition", std::isfinite(d.condition) ? nlohmann::json(d.condition) : nlohmann::json(nullptr)},
            {"ill_conditioned", d.ill_conditioned}};
}

FitDiagnostics diagnostics_from_json(const nlohmann::json& j) {
    FitDiagnostics d;
    if (!j.is_object()) return d;
    d.rows = j.value("rows", 0);
    d.unknowns = j.value("unknowns", 0);
    d.relative_residual = j.value("relative_residual", 0.0);
    d.condition = j.contains("condition") && j["condition"].is_number() ? j["condition"].get<double>()
                                                                         : std::numeric_limits<double>::infinity();
    d.ill_conditioned = j.value("ill_conditioned", false);
    return d;
}

}  // namespace

nlohmann::json to_json(const SsmModel& m) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["mu"] = m.mu;
    j["M_W"] = m.mw();
    j["M_R"] = m.mr();
    j["fixed_point"] = to_json(m.chart.fixed_point);
    j["chart"] = to_json(m.chart.V);
    j["singular_values"] = to_json(m.chart.singular_values);
    j["W"] = to_json(m.W);
    j["R"] = to_json(m.R);
    j["diagnostics"] = {{"manifold", diagnostics_json(m.manifold_diagnostics)},
                        {"reduced", diagnostics_json(m.reduced_diagnostics)},
                        {"pod_gap", std::isfinite(m.chart.gap()) ? nlohmann::json(m.chart.gap()) : nlohmann::json(nullptr)},
                        {"bifurcation_capturing", m.bifurcation_capturing()}};
    return j;
}

SsmModel ssm_model_from_json(const nlohmann::json& j) {
    try {
        SsmModel m;
        m.mu = j.at("mu").get<double>();
        const int mw = j.at("M_W").get<int>(), mr = j.at("M_R").get<int>();
        m.chart.V = matrix_from_json(j.at("chart"));
        if (m.chart.V.cols() != 2) throw Error(ErrorCode::ParseError, "chart must have two columns");
        const int n = static_cast<int>(m.chart.V.rows());
        m.chart.fixed_point = vector_from_json(j.at("fixed_point"));
        if (m.chart.fixed_point.size() != n) throw Error(ErrorCode::ParseError, "fixed point length mismatch");
        if (j.contains("singular_values")) m.chart.singular_values = vector_from_json(j["singular_values"]);
        m.W = coefficients_from_json(j.at("W"), n, 2, mw);
        m.R = coefficients_from_json(j.at("R"), 2, 1, mr);
        if (j.contains("diagnostics")) {
            m.manifold_diagnostics = diagnostics_from_json(j["diagnostics"].value("manifold", nlohmann::json()));
            m.reduced_diagnostics = diagnostics_from_json(j["diagnostics"].value("reduced", nlohmann::json()));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("model JSON: ") + e.what());
    }
}

nlohmann::json to_json(const ParametricSsmModel& pm) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "parametric";
    j["knots"] = pm.knots();
    j["M_W"] = pm.mw();
    j["M_R"] = pm.mr();
    j["spline"] = {{"type", "natural-cubic"},
                   {"layout", "fixed_point, chart (column-major), W (column-major), R (column-major)"},
                   {"second_derivatives", to_json(pm.splines().second_derivatives())}};
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : pm.models()) models.push_back(to_json(m));
    j["models"] = std::move(models);
    return j;
}

ParametricSsmModel parametric_model_from_json(const nlohmann::json& j) {
    if (!j.contains("models")) throw Error(ErrorCode::ParseError, "parametric model JSON lacks 'models'");
    std::vector<SsmModel> models;
    for (const auto& m : j["models"]) models.push_back(ssm_model_from_json(m));
    return ParametricSsmModel(std::move(models));
}

}  // namespace pssm
