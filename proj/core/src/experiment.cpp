#include "pssm/experiment.hpp"

#include "pssm/error.hpp"
#include "pssm/io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

namespace pssm {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

fs::path ExperimentConfig::system_path() const {
    if (system.empty() || system.is_absolute() || base_dir.empty()) return system;
    return base_dir / system;
}

void ExperimentConfig::validate(bool require_system_file) const {
    if (training.size() < 3) throw Error(ErrorCode::InvalidArgument, "need at least three training parameters");
    for (std::size_t i = 1; i < training.size(); ++i)
        if (!(training[i] > training[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "training parameters must increase strictly");
    const std::set<double> train(training.begin(), training.end());
    std::set<double> seen;
    for (double mu : test) {
        if (train.count(mu)) {
            std::ostringstream msg;
            msg << "test parameter " << mu << " is also a training parameter";
            throw Error(ErrorCode::InvalidArgument, msg.str());
        }
        if (!seen.insert(mu).second) throw Error(ErrorCode::InvalidArgument, "duplicate test parameter");
    }
    if (orders.empty()) throw Error(ErrorCode::InvalidArgument, "no (M_W, M_R) pairs configured");
    for (const auto& o : orders)
        if (o.mw < 2 || o.mr < 1) throw Error(ErrorCode::InvalidArgument, "invalid (M_W, M_R) pair");
    if (!(data.dt > 0)) throw Error(ErrorCode::InvalidArgument, "integrator dt must be positive");
    if (bifurcation_range && !(bifurcation_range->first < bifurcation_range->second))
        throw Error(ErrorCode::InvalidArgument, "bifurcation range must satisfy lo < hi");
    if (require_system_file) {
        if (system.empty()) throw Error(ErrorCode::InvalidArgument, "config names no system spec");
        if (!fs::exists(system_path()))
            throw Error(ErrorCode::IoError, "system spec '" + system_path().string() + "' does not exist");
    }
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
    ExperimentConfig c;
    c.base_dir = base_dir;
    try {
        if (j.contains("system")) c.system = j["system"].get<std::string>();
        if (j.contains("training")) c.training = j["training"].get<std::vector<double>>();
        if (j.contains("test")) c.test = j["test"].get<std::vector<double>>();
        if (j.contains("orders")) {
            c.orders.clear();
            for (const auto& o : j["orders"]) c.orders.push_back({o.at(0).get<int>(), o.at(1).get<int>()});
        }
        if (j.contains("seeds")) c.data_seed = j["seeds"].value("data", c.data_seed);
        if (j.contains("integrator")) {
            const auto& g = j["integrator"];
            c.data.dt = g.value("dt", c.data.dt);
            c.data.integrator.atol = g.value("atol", c.data.integrator.atol);
            c.data.integrator.rtol = g.value("rtol", c.data.integrator.rtol);
        }
        if (j.contains("data")) {
            const auto& d = j["data"];
            c.data.pre_perturbation = d.value("pre_perturbation", c.data.pre_perturbation);
            c.data.pre_scale_in_pair_plane = d.value("pre_scale_in_pair_plane", c.data.pre_scale_in_pair_plane);
            c.data.pre_discard = d.value("pre_discard", c.data.pre_discard);
            c.data.pre_decay = d.value("pre_decay", c.data.pre_decay);
            c.data.pre_t_max = d.value("pre_t_max", c.data.pre_t_max);
            c.data.post_perturbation = d.value("post_perturbation", c.data.post_perturbation);
            c.data.post_settle_tol = d.value("post_settle_tol", c.data.post_settle_tol);
            c.data.post_t_max = d.value("post_t_max", c.data.post_t_max);
        }
        if (j.contains("bifurcation_range") && !j["bifurcation_range"].is_null())
            c.bifurcation_range = std::make_pair(j["bifurcation_range"].at(0).get<double>(),
                                                 j["bifurcation_range"].at(1).get<double>());
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
        c.write_datasets = j.value("write_datasets", false);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("experiment config: ") + e.what());
    }
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path), nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return experiment_config_from_json(j, path.parent_path());
}

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json orders = nlohmann::json::array();
    for (const auto& o : c.orders) orders.push_back({o.mw, o.mr});
    return {{"system", c.system.string()},
            {"training", c.training},
            {"test", c.test},
            {"orders", orders},
            {"seeds", {{"data", c.data_seed}}},
            {"integrator", {{"dt", c.data.dt}, {"atol", c.data.integrator.atol}, {"rtol", c.data.integrator.rtol}}},
            {"data",
             {{"pre_perturbation", c.data.pre_perturbation},
              {"pre_scale_in_pair_plane", c.data.pre_scale_in_pair_plane},
              {"pre_discard", c.data.pre_discard},
              {"pre_decay", c.data.pre_decay},
              {"pre_t_max", c.data.pre_t_max},
              {"post_perturbation", c.data.post_perturbation},
              {"post_settle_tol", c.data.post_settle_tol},
              {"post_t_max", c.data.post_t_max}}},
            {"bifurcation_range", c.bifurcation_range ? nlohmann::json{c.bifurcation_range->first,
                                                                       c.bifurcation_range->second}
                                                      : nlohmann::json(nullptr)},
            {"output_dir", c.output_dir.string()},
            {"write_datasets", c.write_datasets}};
}

// ---------------------------------------------------------------- pipeline

namespace {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.code(), std::string("stage '") + name + "': " + e.what());
    }
}

std::string mu_tag(double mu) {
    std::ostringstream s;
    s << "mu_" << mu;
    return s.str();
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const DynamicalSystem& system,
                                const fs::path& out_dir) {
    config.validate(false);
    if (!system.is_surrogate())
        throw Error(ErrorCode::InvalidArgument, "the data-driven experiment needs a surrogate system");
    const SurrogateSystem& sys = system.surrogate();
    const bool write = !out_dir.empty();
    ExperimentReport report;

    auto protocol_for = [&](double mu) {
        const double a = sys.alpha(mu);
        if (a == 0.0) throw Error(ErrorCode::WrongRegime, "parameter sits exactly at the bifurcation");
        return a < 0 ? Protocol::PreBifurcation : Protocol::PostBifurcation;
    };

    // Stage: data. One generator; seeds drawn in training-then-test order.
    std::vector<TrajectoryDataset> train_data, test_data;
    stage("data", [&] {
        std::mt19937_64 gen(config.data_seed);
        for (double mu : config.training) {
            report.training_seeds.push_back(gen());
            train_data.push_back(generate_training_data(sys, mu, protocol_for(mu), report.training_seeds.back(),
                                                        config.data));
        }
        for (double mu : config.test) {
            report.test_seeds.push_back(gen());
            test_data.push_back(generate_training_data(sys, mu, protocol_for(mu), report.test_seeds.back(),
                                                       config.data));
        }
        if (write && config.write_datasets) {
            for (const auto& d : train_data) write_dataset(out_dir / "data" / ("train_" + mu_tag(d.mu) + ".csv"), d);
            for (const auto& d : test_data) write_dataset(out_dir / "data" / ("test_" + mu_tag(d.mu) + ".csv"), d);
        }
        return 0;
    });

    for (const auto& orders : config.orders) {
        OrderResult result;
        result.orders = orders;
        const fs::path dir = out_dir / orders.label();

        auto knots = stage("fit", [&] {
            std::vector<SsmModel> models;
            for (const auto& d : train_data) models.push_back(fit_ssm_model(d, orders.mw, orders.mr));
            return models;
        });
        auto aligned = stage("align", [&] { return align_charts(knots); });
        for (const auto& m : aligned) {
            nlohmann::json d = to_json(m)["diagnostics"];
            d["mu"] = m.mu;
            d["training_rec_error"] = finite_or_null(
                reconstruction_error(train_data[static_cast<std::size_t>(&m - aligned.data())], m));
            result.knot_diagnostics.push_back(std::move(d));
        }
        if (write)
            for (const auto& m : aligned) write_text(dir / "models" / (mu_tag(m.mu) + ".json"), to_json(m).dump(2) + "\n");

        auto pm = stage("interpolate", [&] { return interpolate_models(aligned); });
        if (write) write_text(dir / "parametric_model.json", to_json(pm).dump(2) + "\n");

        stage("predict", [&] {
            for (std::size_t i = 0; i < test_data.size(); ++i) {
                const auto& truth = test_data[i];
                const Eigen::VectorXd x0 = truth.states.row(0).transpose() + truth.fixed_point;
                const double t0 = truth.times[0];
                const double t_end = truth.times[truth.times.size() - 1];
                const auto pred = predict_trajectory(pm, truth.mu, x0, t_end, truth.dt, t0, config.data.integrator);
                const SsmModel local = pm.at(truth.mu);
                result.rows.push_back({orders, truth.mu, truth.provenance.protocol, metrics(truth, pred, &local)});
                if (write && config.write_datasets)
                    write_dataset(dir / "predictions" / ("pred_" + mu_tag(truth.mu) + ".csv"), pred);
            }
            return 0;
        });

        stage("bifurcation", [&] {
            const auto range = config.bifurcation_range.value_or(std::make_pair(pm.lo(), pm.hi()));
            try {
                result.mu_pred = predict_bifurcation(pm, range.first, range.second);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoSignChange) throw;
                result.bifurcation_note = e.what();
            }
            return 0;
        });

        if (write) write_text(dir / "metrics.csv", report.table_csv(result));
        report.results.push_back(std::move(result));
    }
    if (write) write_text(out_dir / "report.json", report.to_json(config).dump(2) + "\n");
    return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate(true);
    const auto system = load_system_spec(config.system_path().string());
    return run_experiment(config, system, resolve_output(config.output_dir));
}

nlohmann::json ExperimentReport::to_json(const ExperimentConfig& config) const {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = pssm::to_json(config);
    j["seeds"] = {{"data", config.data_seed}, {"training", training_seeds}, {"test", test_seeds}};
    nlohmann::json results = nlohmann::json::array();
    for (const auto& r : this->results) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : r.rows)
            rows.push_back({{"mu", row.mu},
                            {"protocol", row.protocol},
                            {"nmte", finite_or_null(row.errors.nmte)},
                            {"nmae", finite_or_null(row.errors.nmae)},
                            {"rec_error", finite_or_null(row.errors.rec_error)}});
        results.push_back({{"M_W", r.orders.mw},
                           {"M_R", r.orders.mr},
                           {"mu_pred", r.mu_pred ? nlohmann::json(*r.mu_pred) : nlohmann::json(nullptr)},
                           {"bifurcation_note", r.bifurcation_note},
                           {"test", rows},
                           {"knots", r.knot_diagnostics}});
    }
    j["results"] = results;
    return j;
}

std::string ExperimentReport::table_csv(const OrderResult& r) const {
    std::ostringstream out;
    out << "mu,nmte,nmae,rec_error\n";
    for (const auto& row : r.rows)
        out << format_double(row.mu) << ',' << format_double(row.errors.nmte) << ',' << format_double(row.errors.nmae)
            << ',' << format_double(row.errors.rec_error) << '\n';
    return out.str();
}

std::string ExperimentReport::table_text() const {
    std::ostringstream out;
    for (const auto& r : results) {
        out << "M_W=" << r.orders.mw << ", M_R=" << r.orders.mr << "\n";
        out << "  " << std::setw(10) << "mu" << std::setw(12) << "NMTE" << std::setw(12) << "NMAE" << std::setw(12)
            << "RecError" << "\n";
        out << std::fixed;
        for (const auto& row : r.rows)
            out << "  " << std::setw(10) << std::setprecision(1) << row.mu << std::setprecision(5) << std::setw(12)
                << row.errors.nmte << std::setw(12) << row.errors.nmae << std::setw(12) << row.errors.rec_error << "\n";
        out.unsetf(std::ios::floatfield);
        if (r.mu_pred) out << "  predicted bifurcation: " << std::setprecision(10) << *r.mu_pred << "\n";
        else out << "  predicted bifurcation: none (" << r.bifurcation_note << ")\n";
    }
    return out.str();
}

// ---------------------------------------------------------------- figure data

std::string cross_section_csv(const HopfParams& p, double rho0, const std::vector<double>& branches, double x_min,
                              double x_max, int points) {
    std::ostringstream out;
    out << "series,x,z\n";
    auto emit = [&](const std::string& name, const ToyBranch& b) {
        for (const auto& pt : cross_section(b, x_min, x_max, points))
            out << name << ',' << format_double(pt.x) << ',' << format_double(pt.z) << '\n';
    };
    for (double h0 : branches) emit("h0=" + format_double(h0), ToyBranch{p, rho0, h0});
    if (classify_regularity(p).analytic_branch_exists && rho0 < std::abs(p.mu))
        emit("analytic", ToyBranch{p, rho0, select_analytic_branch(p, rho0)});
    return out.str();
}

std::string resonance_csv(const EigenCurves& curves, int m_max, std::vector<std::string>* diagnostics) {
    if (m_max < 1) throw Error(ErrorCode::InvalidArgument, "m_max must be positive");
    std::vector<int> ms(static_cast<std::size_t>(m_max));
    for (int m = 1; m <= m_max; ++m) ms[static_cast<std::size_t>(m - 1)] = m;
    const auto scan = locate_resonances(curves, ms);
    if (diagnostics) *diagnostics = scan.diagnostics;
    std::ostringstream out;
    out << "order,location,residual,asymptotic_estimate\n";
    for (const auto& r : scan.reports)
        out << r.order << ',' << format_double(r.location) << ',' << format_double(r.residual) << ','
            << format_double(r.asymptotic_estimate) << '\n';
    return out.str();
}

std::string phase_portrait_csv(const SsmModel& model, double extent, int n) {
    if (!(extent > 0) || n < 2) throw Error(ErrorCode::InvalidArgument, "phase portrait needs extent > 0 and n >= 2");
    std::ostringstream out;
    out << "u1,u2,du1,du2\n";
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Eigen::Vector2d u(-extent + 2 * extent * i / (n - 1), -extent + 2 * extent * j / (n - 1));
            const Eigen::Vector2d du = model.reduced(u);
            out << format_double(u[0]) << ',' << format_double(u[1]) << ',' << format_double(du[0]) << ','
                << format_double(du[1]) << '\n';
        }
    return out.str();
}

std::string emit_figure_data(const std::string& kind, const nlohmann::json& a) {
    if (kind == "normal-form-cross-section") {
        HopfParams p{a.value("mu", -1.0), a.value("omega", 1.0), a.value("sigma", -2.0)};
        const auto branches = a.value("branches", std::vector<double>{-0.2, 0.0, 0.2});
        return cross_section_csv(p, a.value("rho0", 0.1 * std::abs(p.mu)), branches, a.value("x_min", 5e-3),
                                 a.value("x_max", 0.5), a.value("points", 100));
    }
    if (kind == "resonance-locations") {
        const int m_max = a.value("m_max", 10);
        if (a.contains("system") && !a["system"].get<std::string>().empty()) {
            const auto sys = load_system_spec(a["system"].get<std::string>());
            const double c = sys.default_parameter();
            const double lo = a.value("lo", sys.is_surrogate() ? c - 6000.0 : c - 1.0);
            const double hi = a.value("hi", sys.is_surrogate() ? c + 500.0 : c + 1.0);
            return resonance_csv(sys.curves(lo, hi), m_max);
        }
        const SurrogateSystem sys;
        return resonance_csv(sys.curves(a.value("lo", sys.config().mu0 - 6000.0), a.value("hi", sys.config().mu0 + 500.0)),
                             m_max);
    }
    if (kind == "reduced-phase-portrait") {
        if (!a.contains("model")) throw Error(ErrorCode::InvalidArgument, "reduced-phase-portrait needs a model");
        const auto j = nlohmann::json::parse(read_text(a["model"].get<std::string>()));
        SsmModel m;
        if (j.value("kind", "") == "parametric") {
            const auto pm = parametric_model_from_json(j);
            m = pm.at(a.value("mu", 0.5 * (pm.lo() + pm.hi())));
        } else {
            m = ssm_model_from_json(j);
        }
        return phase_portrait_csv(m, a.value("extent", 0.5), a.value("n", 21));
    }
    throw Error(ErrorCode::UnknownKind, "unknown figure kind '" + kind + "'");
}

}  // namespace pssm
