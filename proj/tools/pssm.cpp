// pssm: command-line front end for the parametric SSM library.
//
// Machine-readable output (JSON or CSV) goes to stdout or --out; the
// human-readable summary goes to stderr. Relative output paths land under
// $PSSM_OUTPUT_ROOT when it is set.

#include "pssm/cohomology.hpp"
#include "pssm/datadriven.hpp"
#include "pssm/error.hpp"
#include "pssm/experiment.hpp"
#include "pssm/io.hpp"
#include "pssm/normal_form.hpp"
#include "pssm/spectra.hpp"
#include "pssm/systems.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pssm;

namespace {

void emit(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    const auto path = resolve_output(out);
    write_text(path, text);
    std::cerr << "wrote " << path.string() << "\n";
}

void emit(const json& j, const std::string& out) { emit(j.dump(2) + "\n", out); }

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

json complex_list(const std::vector<Complex>& v) {
    json out = json::array();
    for (const auto& z : v) out.push_back({z.real(), z.imag()});
    return out;
}

json hits_json(const std::vector<ResonanceHit>& hits) {
    json out = json::array();
    for (const auto& h : hits)
        out.push_back({{"m1", h.m1}, {"m2", h.m2}, {"order", h.m1 + h.m2}, {"outer", h.outer},
                       {"relative_gap", h.relative_gap}});
    return out;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, "not a number: '" + item + "'");
        }
    }
    return out;
}

/// Model JSON may hold a single fitted model or a parametric one.
json load_json(const std::string& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
}

bool is_parametric(const json& j) { return j.value("kind", "") == "parametric"; }

// --------------------------------------------------------------- subcommands

int cmd_spectra(const std::string& matrix_path, int order, double tol, const std::string& out) {
    const Eigen::MatrixXd A = read_matrix_csv(matrix_path);
    const Spectrum s = compute_spectrum(A);
    json j{{"schema_version", kSchemaVersion},
           {"eigenvalues", complex_list(s.eigenvalues)},
           {"subspace", {s.subspace[0], s.subspace[1]}},
           {"alpha", s.alpha()},
           {"omega", s.omega()}};
    int max_order = order;
    if (s.alpha() < 0) {
        const int q = spectral_quotient(s);
        j["spectral_quotient"] = q;
        if (max_order <= 0) max_order = q;
    } else {
        j["spectral_quotient"] = nullptr;
        if (max_order <= 0) max_order = 5;
    }
    j["max_order"] = max_order;
    const auto hits = check_nonresonance(s, max_order, tol);
    j["resonances"] = hits_json(hits);
    j["near_resonances"] = hits_json(near_resonances(s, max_order, tol));
    j["nonresonant"] = hits.empty();
    emit(j, out);

    std::cerr << "lambda_1,2 = " << fmt(s.alpha()) << " +- " << fmt(s.omega()) << "i, N = " << A.rows()
              << ", orders 2.." << max_order << ": "
              << (hits.empty() ? "nonresonant" : std::to_string(hits.size()) + " resonance(s)") << "\n";
    for (const auto& h : hits)
        std::cerr << "  (" << h.m1 << "," << h.m2 << ") vs eigenvalue " << h.outer << "  gap " << fmt(h.relative_gap)
                  << "\n";
    return 0;
}

int cmd_resonances(const std::string& curves_path, const std::string& system_path, int m_max, double lo, double hi,
                   const std::string& out) {
    EigenCurves curves = [&] {
        if (!curves_path.empty()) {
            const Eigen::MatrixXd t = read_matrix_csv(curves_path);
            if (t.cols() < 4) throw Error(ErrorCode::ParseError, "curves CSV needs mu, Re l1, Im l1, Re l3 columns");
            auto col = [&](int c) { return std::vector<double>(t.col(c).data(), t.col(c).data() + t.rows()); };
            return EigenCurves::from_table(col(0), col(1), col(2), col(3));
        }
        if (system_path.empty()) throw Error(ErrorCode::InvalidArgument, "give --curves or --system");
        const auto sys = load_system_spec(system_path);
        const double c = sys.default_parameter();
        return sys.curves(std::isnan(lo) ? c - (sys.is_surrogate() ? 6000.0 : 1.0) : lo,
                          std::isnan(hi) ? c + (sys.is_surrogate() ? 500.0 : 1.0) : hi);
    }();
    std::vector<std::string> diagnostics;
    emit(resonance_csv(curves, m_max, &diagnostics), out);
    for (const auto& d : diagnostics) std::cerr << "note: " << d << "\n";
    return 0;
}

int cmd_normal_form(const HopfParams& p, int order, double rho0, const std::string& branches, const std::string& out,
                    const std::string& csv_out) {
    p.validate();
    json j{{"schema_version", kSchemaVersion},
           {"mu", p.mu},
           {"omega", p.omega},
           {"sigma", p.sigma},
           {"alpha", p.alpha()}};
    const auto reg = classify_regularity(p);
    j["regularity"] = {{"class", reg.describe()},
                       {"integer_part", reg.integer_part},
                       {"exponent", std::isnan(reg.exponent) ? json(nullptr) : json(reg.exponent)},
                       {"xy_integer_part", reg.xy_integer_part},
                       {"xy_exponent", std::isnan(reg.xy_exponent) ? json(nullptr) : json(reg.xy_exponent)},
                       {"analytic_branch_exists", reg.analytic_branch_exists}};
    try {
        const auto series = taylor_coefficients(p, order);
        j["coefficients"] = series.a;
        j["radius_estimate"] = series.radius_estimate();
        j["radius_expected"] = std::abs(p.mu);
    } catch (const ResonantCoefficientError& e) {
        j["coefficients"] = nullptr;
        j["resonant_index"] = e.k0();
        std::cerr << "note: " << e.what() << "\n";
    }
    emit(j, out);

    const auto values = parse_list(branches);
    if (!values.empty()) {
        const double r0 = std::isnan(rho0) ? 0.1 * std::abs(p.mu) : rho0;
        const auto path = resolve_output(csv_out);
        write_text(path, cross_section_csv(p, r0, values));
        std::cerr << "wrote " << path.string() << "\n";
    }
    std::cerr << "alpha = sigma/(2 mu) = " << fmt(p.alpha()) << ", class " << reg.describe() << "\n";
    return 0;
}

int cmd_simulate(const std::string& system_path, double mu, const std::string& protocol, std::uint64_t seed,
                 const std::string& x0_path, double t_end, double dt, const std::string& out) {
    const auto sys = load_system_spec(system_path);
    TrajectoryDataset d;
    if (protocol == "direct") {
        if (x0_path.empty() || !(t_end > 0)) throw Error(ErrorCode::InvalidArgument, "direct runs need --x0 and --t-end");
        const Eigen::MatrixXd x = read_matrix_csv(x0_path);
        const Eigen::VectorXd x0 = x.reshaped();
        if (x0.size() != sys.dimension()) throw Error(ErrorCode::InvalidArgument, "x0 has the wrong dimension");
        d = sys.is_surrogate() ? integrate(sys.surrogate(), x0, mu, t_end, dt)
                               : integrate(sys.polynomial().at(mu), x0, mu, t_end, dt);
    } else {
        if (!sys.is_surrogate())
            throw Error(ErrorCode::InvalidArgument, "pre-bif/post-bif protocols need a surrogate system");
        DataOptions opt;
        opt.dt = dt;
        d = generate_training_data(sys.surrogate(), mu, parse_protocol(protocol), seed, opt);
    }
    const auto path = resolve_output(out);
    write_dataset(path, d);
    std::cerr << "wrote " << path.string() << " (" << d.rows() << " rows, t in [" << fmt(d.times[0]) << ", "
              << fmt(d.times[d.rows() - 1]) << "])\n";
    return 0;
}

int cmd_ssm_solve(const std::string& system_path, const std::string& mus, int order, double res_tol,
                  const std::string& out) {
    const auto sys = load_system_spec(system_path);
    if (sys.is_surrogate())
        throw Error(ErrorCode::InvalidArgument, "ssm-solve needs a polynomial system spec");
    auto values = parse_list(mus);
    if (values.empty()) values.push_back(sys.default_parameter());
    json results = json::array();
    for (double mu : values) {
        const auto field = sys.polynomial().at(mu);
        const Eigen::MatrixXd A = field.linear_part();
        const auto frame = build_eigenframe(A, compute_spectrum(A));
        json r = to_json(solve_ssm(field, frame, order, res_tol));
        r["mu"] = mu;
        results.push_back(std::move(r));
        std::cerr << "mu = " << fmt(mu) << ": solved to order " << order << "\n";
    }
    emit(json{{"schema_version", kSchemaVersion}, {"results", results}}, out);
    return 0;
}

int cmd_fit(const std::string& data_path, int mw, int mr, double ridge, const std::string& out) {
    const auto d = read_dataset(data_path);
    const auto m = fit_ssm_model(d, mw, mr, ridge);
    emit(to_json(m), out);
    std::cerr << "mu = " << fmt(m.mu) << "  rows " << d.rows() << "  W residual "
              << fmt(m.manifold_diagnostics.relative_residual) << "  R residual "
              << fmt(m.reduced_diagnostics.relative_residual) << "  POD gap " << fmt(m.chart.gap()) << "\n";
    if (m.manifold_diagnostics.ill_conditioned || m.reduced_diagnostics.ill_conditioned)
        std::cerr << "warning: IllConditioned design (condition > " << fmt(kIllConditioned) << ")\n";
    return 0;
}

int cmd_interpolate(const std::string& dir, const std::string& out) {
    std::vector<SsmModel> models;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        const auto j = load_json(entry.path().string());
        if (is_parametric(j)) continue;
        models.push_back(ssm_model_from_json(j));
    }
    std::sort(models.begin(), models.end(), [](const SsmModel& a, const SsmModel& b) { return a.mu < b.mu; });
    const auto pm = interpolate_models(align_charts(models));
    emit(to_json(pm), out);
    std::cerr << pm.knots().size() << " knots on [" << fmt(pm.lo()) << ", " << fmt(pm.hi()) << "], M_W = " << pm.mw()
              << ", M_R = " << pm.mr() << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, double mu, const std::string& x0_path, double t_end, double dt,
                const std::string& out) {
    const auto j = load_json(model_path);
    // x0 is either a bare state vector or a trajectory CSV whose first row is used.
    std::vector<std::string> header;
    const Eigen::MatrixXd x = read_matrix_csv(x0_path, &header);
    Eigen::VectorXd x0;
    double t0 = 0.0;
    if (!header.empty() && header.front() == "t") {
        t0 = x(0, 0);
        x0 = x.row(0).tail(x.cols() - 1).transpose();
    } else {
        x0 = x.reshaped();
    }
    TrajectoryDataset pred;
    if (is_parametric(j)) {
        const auto pm = parametric_model_from_json(j);
        if (std::isnan(mu)) throw Error(ErrorCode::InvalidArgument, "a parametric model needs --mu");
        pred = predict_trajectory(pm, mu, x0, t_end, dt, t0);
    } else {
        pred = predict_trajectory(ssm_model_from_json(j), x0, t_end, dt, t0);
    }
    const auto path = resolve_output(out);
    write_dataset(path, pred);
    std::cerr << "wrote " << path.string() << " (" << pred.rows() << " rows)\n";
    return 0;
}

int cmd_metrics(const std::string& truth_path, const std::string& pred_path, const std::string& model_path,
                const std::string& out) {
    const auto truth = read_dataset(truth_path);
    const auto pred = read_dataset(pred_path);
    std::optional<SsmModel> model;
    if (!model_path.empty()) {
        const auto j = load_json(model_path);
        model = is_parametric(j) ? parametric_model_from_json(j).at(truth.mu) : ssm_model_from_json(j);
    }
    const auto e = metrics(truth, pred, model ? &*model : nullptr);
    auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    emit(json{{"schema_version", kSchemaVersion},
              {"mu", truth.mu},
              {"nmte", e.nmte},
              {"nmae", e.nmae},
              {"rec_error", num(e.rec_error)}},
         out);
    std::cerr << "mu        NMTE        NMAE        RecError\n"
              << fmt(truth.mu) << "  " << fmt(e.nmte) << "  " << fmt(e.nmae) << "  "
              << (std::isnan(e.rec_error) ? "-" : fmt(e.rec_error)) << "\n";
    return 0;
}

int cmd_bifurcation(const std::string& model_path, const std::string& range, double tol, const std::string& out) {
    const auto j = load_json(model_path);
    if (!is_parametric(j)) throw Error(ErrorCode::InvalidArgument, "bifurcation needs a parametric model");
    const auto pm = parametric_model_from_json(j);
    double lo = pm.lo(), hi = pm.hi();
    if (!range.empty()) {
        const auto r = parse_list(range);
        if (r.size() != 2) throw Error(ErrorCode::InvalidArgument, "--range takes lo,hi");
        lo = r[0];
        hi = r[1];
    }
    const double mu = predict_bifurcation(pm, lo, hi, tol);
    emit(json{{"schema_version", kSchemaVersion}, {"mu_pred", mu}, {"range", {lo, hi}}}, out);
    std::cerr << "predicted bifurcation at mu = " << fmt(mu, 10) << "\n";
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& output_dir) {
    auto config = load_experiment_config(config_path);
    if (!output_dir.empty()) config.output_dir = output_dir;
    const auto report = run_experiment(config);
    std::cout << report.table_text();
    std::cerr << "outputs in " << resolve_output(config.output_dir).string() << "\n";
    return 0;
}

int cmd_figure_data(const std::string& kind, const std::string& args, const std::string& args_file,
                    const std::string& out) {
    json a = json::object();
    if (!args_file.empty()) a = load_json(args_file);
    if (!args.empty()) {
        try {
            a.update(json::parse(args));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, std::string("--args: ") + e.what());
        }
    }
    emit(emit_figure_data(kind, a), out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parametric spectral submanifolds near a Hopf bifurcation"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");
    const double nan = std::nan("");

    std::string out;

    auto* spectra = app.add_subcommand("spectra", "Spectrum, spectral quotient and nonresonance check of a matrix");
    std::string matrix;
    int order = 0;
    double tol = kDefaultNonresonanceTol;
    spectra->add_option("--matrix", matrix, "Row-major N x N CSV")->required()->check(CLI::ExistingFile);
    spectra->add_option("--order", order, "Max resonance order (default: spectral quotient)");
    spectra->add_option("--tol", tol, "Relative nonresonance tolerance")->capture_default_str();
    spectra->add_option("--out", out, "JSON output path");

    auto* resonances = app.add_subcommand("resonances", "Locate the resonance parameters mu_2m");
    std::string curves, system;
    int m_max = 10;
    double lo = nan, hi = nan;
    auto* curves_opt = resonances->add_option("--curves", curves, "CSV: mu, Re l1, Im l1, Re l3")->check(CLI::ExistingFile);
    resonances->add_option("--system", system, "System spec file")->check(CLI::ExistingFile)->excludes(curves_opt);
    resonances->add_option("--m-max", m_max, "Largest m")->capture_default_str();
    resonances->add_option("--lo", lo, "Parameter interval start (with --system)");
    resonances->add_option("--hi", hi, "Parameter interval end (with --system)");
    resonances->add_option("--out", out, "CSV output path");

    auto* normal = app.add_subcommand("normal-form", "Radial Taylor series, regularity and branches of the toy model");
    HopfParams hp;
    int nf_order = 20;
    double rho0 = nan;
    std::string branches, csv_out = "normal_form_cross_section.csv";
    normal->add_option("--mu", hp.mu)->required();
    normal->add_option("--omega", hp.omega)->capture_default_str();
    normal->add_option("--sigma", hp.sigma)->required();
    normal->add_option("--order", nf_order, "Number of Taylor coefficients")->capture_default_str();
    normal->add_option("--rho0", rho0, "Anchor radius for branches (default 0.1 |mu|)");
    normal->add_option("--branches", branches, "Comma list of h(rho0) values for the cross-section CSV");
    normal->add_option("--csv", csv_out, "Cross-section CSV path")->capture_default_str();
    normal->add_option("--out", out, "JSON output path");

    auto* simulate = app.add_subcommand("simulate", "Generate a trajectory dataset");
    double mu = nan, t_end = 0, dt = 0.04;
    std::string protocol = "pre-bif", x0;
    std::uint64_t seed = 1;
    std::string traj_out = "trajectory.csv";
    simulate->add_option("--system", system, "System spec file")->required()->check(CLI::ExistingFile);
    simulate->add_option("--mu", mu)->required();
    simulate->add_option("--protocol", protocol, "pre-bif | post-bif | direct")
        ->check(CLI::IsMember({"pre-bif", "post-bif", "direct"}))
        ->capture_default_str();
    simulate->add_option("--seed", seed)->capture_default_str();
    simulate->add_option("--x0", x0, "Initial state CSV (direct)")->check(CLI::ExistingFile);
    simulate->add_option("--t-end", t_end, "Final time (direct)");
    simulate->add_option("--dt", dt)->capture_default_str();
    simulate->add_option("--out", traj_out, "Trajectory CSV path")->capture_default_str();

    auto* ssm = app.add_subcommand("ssm-solve", "Taylor coefficients of the SSM and its reduced dynamics");
    std::string mus;
    int ssm_order = 5;
    double res_tol = kDefaultResonanceTol;
    ssm->add_option("--system", system, "Polynomial system spec")->required()->check(CLI::ExistingFile);
    ssm->add_option("--mu", mus, "Parameter value or comma list (default: spec default)");
    ssm->add_option("--order", ssm_order, "Expansion order K")->capture_default_str();
    ssm->add_option("--res-tol", res_tol)->capture_default_str();
    ssm->add_option("--out", out, "JSON output path");

    auto* fit = app.add_subcommand("fit", "Fit an SSM model to one trajectory dataset");
    std::string data;
    int mw = 4, mr = 5;
    double ridge = kDefaultRidge;
    fit->add_option("--data", data, "Trajectory CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--mw", mw)->capture_default_str();
    fit->add_option("--mr", mr)->capture_default_str();
    fit->add_option("--ridge", ridge)->capture_default_str();
    fit->add_option("--out", out, "Model JSON path");

    auto* interp = app.add_subcommand("interpolate", "Align and spline-interpolate fitted models");
    std::string models;
    interp->add_option("--models", models, "Directory of model JSON files")->required()->check(CLI::ExistingDirectory);
    interp->add_option("--out", out, "Parametric model JSON path");

    auto* predict = app.add_subcommand("predict", "Predict a trajectory with a (parametric) model");
    std::string model;
    predict->add_option("--model", model)->required()->check(CLI::ExistingFile);
    predict->add_option("--mu", mu, "Parameter (parametric models)");
    predict->add_option("--x0", x0, "State CSV or trajectory CSV (first row)")->required()->check(CLI::ExistingFile);
    predict->add_option("--t-end", t_end)->required();
    predict->add_option("--dt", dt)->capture_default_str();
    std::string pred_out = "prediction.csv";
    predict->add_option("--out", pred_out, "Trajectory CSV path")->capture_default_str();

    auto* metrics_cmd = app.add_subcommand("metrics", "NMTE, NMAE and reconstruction error");
    std::string truth, pred;
    metrics_cmd->add_option("--truth", truth)->required()->check(CLI::ExistingFile);
    metrics_cmd->add_option("--pred", pred)->required()->check(CLI::ExistingFile);
    metrics_cmd->add_option("--model", model, "Model for RecError")->check(CLI::ExistingFile);
    metrics_cmd->add_option("--out", out, "JSON output path");

    auto* bif = app.add_subcommand("bifurcation", "Predicted bifurcation parameter of a parametric model");
    std::string range;
    double bif_tol = 1e-6;
    bif->add_option("--model", model)->required()->check(CLI::ExistingFile);
    bif->add_option("--range", range, "lo,hi (default: knot hull)");
    bif->add_option("--tol", bif_tol)->capture_default_str();
    bif->add_option("--out", out, "JSON output path");

    auto* experiment = app.add_subcommand("experiment", "Run a configured end-to-end experiment");
    std::string config, output_dir;
    experiment->add_option("--config", config, "Experiment JSON")->required()->check(CLI::ExistingFile);
    experiment->add_option("--output-dir", output_dir, "Override the configured output directory");

    auto* figure = app.add_subcommand("figure-data", "CSV data for plots");
    std::string kind, args, args_file;
    figure->add_option("--kind", kind, "normal-form-cross-section | resonance-locations | reduced-phase-portrait")
        ->required();
    figure->add_option("--args", args, "JSON object of arguments");
    figure->add_option("--args-file", args_file, "JSON file of arguments")->check(CLI::ExistingFile);
    figure->add_option("--out", out, "CSV output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*spectra) return cmd_spectra(matrix, order, tol, out);
        if (*resonances) return cmd_resonances(curves, system, m_max, lo, hi, out);
        if (*normal) return cmd_normal_form(hp, nf_order, rho0, branches, out, csv_out);
        if (*simulate) return cmd_simulate(system, mu, protocol, seed, x0, t_end, dt, traj_out);
        if (*ssm) return cmd_ssm_solve(system, mus, ssm_order, res_tol, out);
        if (*fit) return cmd_fit(data, mw, mr, ridge, out);
        if (*interp) return cmd_interpolate(models, out);
        if (*predict) return cmd_predict(model, mu, x0, t_end, dt, pred_out);
        if (*metrics_cmd) return cmd_metrics(truth, pred, model, out);
        if (*bif) return cmd_bifurcation(model, range, bif_tol, out);
        if (*experiment) return cmd_experiment(config, output_dir);
        if (*figure) return cmd_figure_data(kind, args, args_file, out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
