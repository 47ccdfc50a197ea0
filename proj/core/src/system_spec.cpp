#include "pssm/error.hpp"
#include "pssm/systems.hpp"

#include <fstream>
#include <sstream>

namespace pssm {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
    std::ostringstream msg;
    msg << "line " << line << ": " << what;
    throw Error(ErrorCode::ParseError, msg.str());
}

double to_number(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) fail(line, "trailing characters in number '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        fail(line, "expected a number, got '" + s + "'");
    } catch (const std::out_of_range&) {
        fail(line, "number out of range '" + s + "'");
    }
}

}  // namespace

DynamicalSystem parse_system_spec(const std::string& text) {
    std::istringstream in(text);
    std::string raw, kind;
    int line_no = 0;
    ParametricPolyField poly;
    SurrogateConfig sc;
    bool have_dimension = false;
    std::vector<std::pair<int, std::string>> pending_terms;

    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        const std::string& key = tok[0];
        auto need = [&](std::size_t n) {
            if (tok.size() != n) fail(line_no, "'" + key + "' expects " + std::to_string(n - 1) + " value(s)");
        };

        if (key == "system") {
            need(2);
            if (tok[1] != "polynomial" && tok[1] != "surrogate") fail(line_no, "unknown system kind '" + tok[1] + "'");
            kind = tok[1];
        } else if (key == "dimension") {
            need(2);
            const double d = to_number(tok[1], line_no);
            if (d < 1 || d != std::floor(d)) fail(line_no, "dimension must be a positive integer");
            poly.dimension = sc.dimension = static_cast<int>(d);
            have_dimension = true;
        } else if (kind.empty()) {
            fail(line_no, "the first directive must be 'system polynomial|surrogate'");
        } else if (kind == "polynomial") {
            if (key == "degree") {
                need(2);
                poly.degree = static_cast<int>(to_number(tok[1], line_no));
            } else if (key == "parameter") {
                if (tok.size() != 2 && tok.size() != 3) fail(line_no, "'parameter' expects a name and optional default");
                poly.parameter = tok[1];
                if (tok.size() == 3) poly.parameter_default = to_number(tok[2], line_no);
            } else if (key == "constant") {
                need(3);
                poly.constants[tok[1]] = to_number(tok[2], line_no);
            } else if (key == "term") {
                pending_terms.emplace_back(line_no, raw);
            } else {
                fail(line_no, "unknown directive '" + key + "'");
            }
        } else {
            need(2);
            const double v = to_number(tok[1], line_no);
            if (key == "mu0") sc.mu0 = v;
            else if (key == "omega0") sc.omega0 = v;
            else if (key == "alpha_slope") sc.alpha_slope = v;
            else if (key == "omega_slope") sc.omega_slope = v;
            else if (key == "cubic_damping") sc.cubic_damping = v;
            else if (key == "cubic_frequency") sc.cubic_frequency = v;
            else if (key == "coupling_scale") sc.coupling_scale = v;
            else if (key == "stable_leading") sc.stable_leading = v;
            else if (key == "stable_trailing") sc.stable_trailing = v;
            else if (key == "reference_offset") sc.reference_offset = v;
            else if (key == "seed") sc.seed = static_cast<std::uint64_t>(v);
            else fail(line_no, "unknown surrogate key '" + key + "'");
        }
    }
    if (kind.empty()) throw Error(ErrorCode::ParseError, "missing 'system' directive");
    if (!have_dimension) throw Error(ErrorCode::ParseError, "missing 'dimension' directive");
    if (kind == "surrogate") return DynamicalSystem(SurrogateSystem(sc));

    // term <component> <e_1> ... <e_N> <coefficient expression>
    int max_degree = 0;
    for (const auto& [ln, text] : pending_terms) {
        std::istringstream ls(text);
        std::string word;
        ls >> word;
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.size() < static_cast<std::size_t>(poly.dimension) + 2)
            fail(ln, "'term' expects a component, " + std::to_string(poly.dimension) + " exponents and a coefficient");
        ParametricPolyField::Entry e;
        e.component = static_cast<int>(to_number(tok[0], ln)) - 1;
        if (e.component < 0 || e.component >= poly.dimension) fail(ln, "component out of range");
        for (int i = 0; i < poly.dimension; ++i) {
            const double v = to_number(tok[static_cast<std::size_t>(i) + 1], ln);
            if (v < 0 || v != std::floor(v)) fail(ln, "exponents must be nonnegative integers");
            e.exponents.push_back(static_cast<int>(v));
        }
        std::string expr;
        for (std::size_t i = static_cast<std::size_t>(poly.dimension) + 1; i < tok.size(); ++i) expr += tok[i];
        try {
            e.coefficient = CoefficientExpr::parse(expr);
        } catch (const Error& err) {
            fail(ln, err.what());
        }
        if (total_degree(e.exponents) == 0) fail(ln, "constant terms are not allowed (origin must be a fixed point)");
        max_degree = std::max(max_degree, total_degree(e.exponents));
        poly.entries.push_back(std::move(e));
    }
    if (poly.degree == 0) poly.degree = max_degree;
    if (max_degree > poly.degree) throw Error(ErrorCode::ParseError, "a term exceeds the declared degree");
    // Unknown symbols surface here rather than at first use.
    (void)poly.at(poly.parameter_default);
    return DynamicalSystem(std::move(poly));
}

DynamicalSystem load_system_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open system spec '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_system_spec(buf.str());
}

}  // namespace pssm
