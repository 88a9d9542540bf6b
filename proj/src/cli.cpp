#include "khabi/cli.hpp"

#include "khabi/constants.hpp"
#include "khabi/dahlberg.hpp"
#include "khabi/error.hpp"
#include "khabi/functional.hpp"
#include "khabi/sign_analysis.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace khabi::cli {
namespace {

using nlohmann::json;

struct Output {
    Table table;
    json residuals = json::object();
    int code = ExitCode::ok;
};

std::string format_double(double v, int digits) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string cell_text(const Cell& c, int digits) {
    return std::visit(
        [digits](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return "";
            else if constexpr (std::is_same_v<T, double>) return format_double(v, digits);
            else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else return v;
        },
        c);
}

json cell_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
            else if constexpr (std::is_same_v<T, double>) return std::isfinite(v) ? json(v) : json(nullptr);
            else return json(v);
        },
        c);
}

Cell opt(const std::optional<double>& v) { return v ? Cell{*v} : Cell{}; }

const char* format_name(Format f) {
    switch (f) {
    case Format::csv: return "csv";
    case Format::json: return "json";
    default: return "human";
    }
}

json config_json(const RunConfig& c) {
    json j;
    j["command"] = c.command;
    j["n"] = c.n;
    if (c.rho) j["rho"] = *c.rho;
    if (c.rho_min) {
        j["rho_min"] = *c.rho_min;
        j["rho_max"] = *c.rho_max;
        j["steps"] = c.steps;
    }
    if (c.command == "maximize") j["iters"] = c.iters;
    j["tol"] = c.tol;
    j["root_tol"] = c.root_tol;
    j["precision"] = c.extended ? "extended" : "double";
    j["format"] = format_name(c.format);
    return j;
}

// Evaluates f for every rho concurrently and returns results in rho order.
template <class F>
auto for_each_rho(const std::vector<double>& rhos, F f) {
    using R = decltype(f(0.0));
    std::vector<std::future<R>> jobs;
    jobs.reserve(rhos.size());
    for (double r : rhos) jobs.push_back(std::async(std::launch::async, f, r));
    std::vector<R> out;
    out.reserve(rhos.size());
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

ConstantsOptions constants_options(const RunConfig& c) {
    ConstantsOptions o;
    o.quad_tol = c.tol;
    o.roots.rel_tol = c.root_tol;
    o.roots.extended = c.extended;
    o.extended = c.extended;
    return o;
}

Output cmd_constants(const RunConfig& c) {
    const auto rhos = c.rho_values();
    for (double r : rhos) ProblemParams{c.n, r}.validate_pipeline();
    const auto opts = constants_options(c);
    const auto reports = for_each_rho(rhos, [&](double r) { return compute_constants({c.n, r}, opts); });

    Output o;
    o.table.columns = {"n",         "rho",      "p_n",          "deficiency",     "j",
                       "k_n",       "k_n_without_scaling",       "e_pow_p_n",      "zeros",
                       "lower_ok",  "upper_ok", "full_integral", "dminus_integral", "antiderivative",
                       "closed_form_n2"};
    json rows = json::array();
    bool pass = true;
    for (const auto& r : reports) {
        std::map<std::string, double> res;
        json jr;
        jr["rho"] = r.params.rho;
        for (const auto& x : r.residuals) {
            res[x.name] = x.value;
            jr[x.name] = {{"value", x.value}, {"tolerance", x.tolerance}, {"pass", x.pass}};
        }
        auto get = [&](const char* k) { return res.count(k) ? Cell{res[k]} : Cell{}; };
        o.table.rows.push_back({static_cast<long long>(r.params.n), r.params.rho, r.p_n, r.deficiency, r.j_sup, r.k_n,
                                r.k_n_without_scaling, std::exp(r.params.n - 1.0) * r.p_n,
                                static_cast<long long>(r.pattern.zeros.size()), r.lower_bound_ok, r.upper_bound_ok,
                                get("full_integral"), get("dminus_integral"), get("antiderivative"),
                                get("closed_form_n2")});
        jr["all_pass"] = r.all_pass();
        rows.push_back(jr);
        pass = pass && r.all_pass();
    }
    o.residuals = {{"rows", rows}, {"all_pass", pass}};
    o.code = pass ? ExitCode::ok : ExitCode::oracle_failure;
    return o;
}

// Sign changes of psi on a fine log grid, as independent evidence for the root list.
int scanned_sign_changes(const DerivativeStack& stack, double lo, double hi) {
    constexpr int kPoints = 20000;
    int changes = 0, prev = 0;
    for (int i = 0; i < kPoints; ++i) {
        const double t = lo * std::pow(hi / lo, static_cast<double>(i) / (kPoints - 1));
        const double v = stack.psi<double>(t);
        const int s = (v > 0) - (v < 0);
        if (s != 0 && prev != 0 && s != prev) ++changes;
        if (s != 0) prev = s;
    }
    return changes;
}

Output cmd_psi_roots(const RunConfig& c) {
    const auto rhos = c.rho_values();
    for (double r : rhos) ProblemParams{c.n, r}.validate();
    RootOptions ropts;
    ropts.rel_tol = c.root_tol;
    ropts.extended = c.extended;
    struct Item {
        double rho;
        SignPattern pattern;
        int variations;
        int scanned;
    };
    const auto items = for_each_rho(rhos, [&](double r) {
        const auto stack = DerivativeStack::build({c.n, r});
        auto pattern = sign_pattern(stack, positive_roots(stack, ropts));
        const double lo = pattern.zeros.empty() ? 1e-3 : pattern.zeros.front().tau * 1e-2;
        const double hi = pattern.zeros.empty() ? 1e3 : pattern.zeros.back().tau * 1e2;
        return Item{r, std::move(pattern), descartes_variations(stack.q(c.n)), scanned_sign_changes(stack, lo, hi)};
    });

    Output o;
    o.table.columns = {"n", "rho", "i", "lo", "hi", "sign", "in_d_minus", "tangential_hi"};
    json rows = json::array();
    bool pass = true;
    for (const auto& it : items) {
        const auto& p = it.pattern;
        for (std::size_t k = 0; k < p.intervals.size(); ++k) {
            const auto& iv = p.intervals[k];
            const bool in_i = std::find(p.index_set.begin(), p.index_set.end(), static_cast<int>(k) + 1) !=
                              p.index_set.end();
            const Cell tangential = k < p.zeros.size() ? Cell{p.zeros[k].tangential} : Cell{};
            o.table.rows.push_back({static_cast<long long>(c.n), it.rho, static_cast<long long>(k + 1), iv.lo, iv.hi,
                                    static_cast<long long>(iv.sign), in_i, tangential});
        }
        int crossings = 0;
        for (const auto& z : p.zeros) crossings += z.tangential ? 0 : 1;
        json d = json::array();
        for (const auto& iv : p.d_minus) d.push_back({iv.lo, iv.hi});
        const bool ok = crossings == it.scanned && static_cast<int>(p.zeros.size()) <= it.variations;
        rows.push_back({{"rho", it.rho},
                        {"zeros", p.zeros.size()},
                        {"descartes_variations", it.variations},
                        {"scanned_sign_changes", it.scanned},
                        {"d_minus", d},
                        {"pass", ok}});
        pass = pass && ok;
    }
    o.residuals = {{"rows", rows}, {"all_pass", pass}};
    o.code = pass ? ExitCode::ok : ExitCode::oracle_failure;
    return o;
}

Output cmd_maximize(const RunConfig& c) {
    if (c.rho_min) throw DomainError("maximize takes a single --rho");
    if (c.iters < 0) throw DomainError("--iters must be nonnegative");
    const ProblemParams params{c.n, c.rho.value_or(2.0)};
    params.validate_pipeline();
    const auto res = maximize(params, c.iters);

    Output o;
    o.table.columns = {"k", "epsilon", "j", "gap", "growth_margin", "min_slope", "halvings"};
    bool monotone = true, bounded = true;
    for (std::size_t i = 0; i < res.iterations.size(); ++i) {
        const auto& it = res.iterations[i];
        o.table.rows.push_back({static_cast<long long>(it.k), it.epsilon, it.j_value, it.gap, it.growth_margin,
                                it.min_slope, static_cast<long long>(it.halvings)});
        if (i > 0 && it.j_value < res.iterations[i - 1].j_value - 1e-14 * std::abs(it.j_value)) monotone = false;
        if (it.j_value > res.j_sup * (1.0 + 1e-8)) bounded = false;
    }
    const int last = static_cast<int>(res.iterations.size()) - 1;
    const double direct = j_functional(res.sequence().member(last, res.grid), params, std::max(c.tol, 1e-12));
    const double recorded = res.iterations.back().j_value;
    const double direct_residual = std::abs(direct - recorded) / recorded;
    const bool direct_ok = direct_residual < 1e-8;
    o.residuals = {{"j_sup", res.j_sup},
                   {"final_gap", res.iterations.back().gap},
                   {"monotone", monotone},
                   {"bounded", bounded},
                   {"direct_j", direct},
                   {"direct_residual", direct_residual},
                   {"alpha", res.schedule.alpha},
                   {"alpha_used", res.schedule.alpha_used},
                   {"restarts", res.schedule.restarts},
                   {"grid_points", res.grid.size()}};
    o.code = (monotone && bounded && direct_ok) ? ExitCode::ok : ExitCode::oracle_failure;

    if (!c.plot.empty()) {
        std::ofstream plot(c.plot);
        if (!plot) throw DomainError("cannot open plot file " + c.plot);
        plot << "k,j,gap\n";
        for (const auto& it : res.iterations)
            plot << it.k << ',' << format_double(it.j_value, 17) << ',' << format_double(it.gap, 17) << '\n';
    }
    return o;
}

Output cmd_dahlberg(const RunConfig& c) {
    const auto rhos = c.rho_values();
    for (double r : rhos) ProblemParams{c.n, r}.validate_pipeline();
    const auto opts = constants_options(c);
    const auto reports = for_each_rho(rhos, [&](double r) { return compare(c.n, r, compute_constants({c.n, r}, opts)); });

    Output o;
    o.table.columns = {"n",
                       "rho",
                       "theta_star",
                       "theta_star_approx",
                       "vartheta",
                       "vartheta_solution_mode",
                       "closed_n2",
                       "closed_n2_mixed",
                       "closed_n3",
                       "closed_n3_coef3",
                       "n3_coefficient",
                       "e_pow_p_n",
                       "k_n",
                       "exceeds_e_pow_p_n",
                       "dominates_k_n"};
    json rows = json::array();
    bool pass = true;
    for (const auto& r : reports) {
        const double norm_res = std::abs(r.vartheta_solution_mode - r.vartheta_numeric) / r.vartheta_numeric;
        json jr{{"rho", r.rho}, {"normalization_invariance", norm_res}};
        bool ok = norm_res < 1e-12 && r.dominates_k_n;
        if (r.vartheta_closed_n2) {
            const double cr = std::abs(*r.vartheta_closed_n2 - r.vartheta_numeric) / r.vartheta_numeric;
            jr["closed_n2"] = cr;
            jr["mixed_ratio_n2"] = *r.vartheta_closed_n2_mixed / r.vartheta_numeric;
            ok = ok && cr < 1e-8;
        }
        Cell coef;
        if (r.n3_fit) {
            coef = std::to_string(r.n3_fit->numerator) + "/" + std::to_string(r.n3_fit->denominator);
            jr["n3_fit"] = {{"numerator", r.n3_fit->numerator},
                            {"denominator", r.n3_fit->denominator},
                            {"raw", r.n3_fit->raw},
                            {"residual", r.n3_fit->residual}};
            ok = ok && r.n3_fit->residual < 1e-8;
        }
        jr["pass"] = ok;
        pass = pass && ok;
        rows.push_back(jr);
        o.table.rows.push_back({static_cast<long long>(r.n), r.rho, r.theta_star, r.theta_star_approx,
                                r.vartheta_numeric, r.vartheta_solution_mode, opt(r.vartheta_closed_n2),
                                opt(r.vartheta_closed_n2_mixed), opt(r.vartheta_closed_n3),
                                opt(r.vartheta_closed_n3_coef3), coef, r.e_pow_p, r.k_n, r.exceeds_e_pow_p,
                                r.dominates_k_n});
    }
    o.residuals = {{"rows", rows}, {"all_pass", pass}};
    o.code = pass ? ExitCode::ok : ExitCode::oracle_failure;
    return o;
}

double parse_tolerance(const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw DomainError("KHABI_TOL is not a number: " + text);
    }
    if (used != text.size()) throw DomainError("KHABI_TOL is not a number: " + text);
    return v;
}

} // namespace

std::vector<double> RunConfig::rho_values() const {
    if (rho_min) {
        if (!rho_max) throw DomainError("--rho-min needs --rho-max");
        if (steps < 1) throw DomainError("--steps must be at least 1");
        if (!(*rho_max >= *rho_min)) throw DomainError("--rho-max must not be below --rho-min");
        std::vector<double> v;
        for (int i = 0; i < steps; ++i)
            v.push_back(steps == 1 ? *rho_min : *rho_min + (*rho_max - *rho_min) * i / (steps - 1));
        return v;
    }
    return {rho.value_or(2.0)};
}

std::string render(const RunConfig& config, const Table& table, const std::string& residuals_json) {
    std::ostringstream s;
    switch (config.format) {
    case Format::csv: {
        for (std::size_t i = 0; i < table.columns.size(); ++i) s << (i ? "," : "") << table.columns[i];
        s << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << cell_text(row[i], 17);
            s << '\n';
        }
        break;
    }
    case Format::json: {
        json rows = json::array();
        for (const auto& row : table.rows) {
            json r = json::object();
            for (std::size_t i = 0; i < row.size(); ++i) r[table.columns[i]] = cell_json(row[i]);
            rows.push_back(r);
        }
        json doc{{"config", config_json(config)}, {"rows", rows}, {"residuals", json::parse(residuals_json)}};
        s << doc.dump(2) << '\n';
        break;
    }
    case Format::human: {
        std::vector<std::size_t> width;
        for (const auto& c : table.columns) width.push_back(c.size());
        std::vector<std::vector<std::string>> text;
        for (const auto& row : table.rows) {
            auto& t = text.emplace_back();
            for (std::size_t i = 0; i < row.size(); ++i) {
                t.push_back(cell_text(row[i], 10));
                width[i] = std::max(width[i], t.back().size());
            }
        }
        for (std::size_t i = 0; i < table.columns.size(); ++i)
            s << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << table.columns[i];
        s << '\n';
        for (const auto& t : text) {
            for (std::size_t i = 0; i < t.size(); ++i)
                s << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << t[i];
            s << '\n';
        }
        s << "residuals: " << json::parse(residuals_json).dump() << '\n';
        break;
    }
    }
    return s.str();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const char* env_tol) {
    RunConfig cfg;
    double rho = 2.0, rho_min = 0.0, rho_max = 0.0;
    std::string precision = "double", format = "human";

    CLI::App app{"Sharp Paley-problem constants for plurisubharmonic functions of lower order rho > 1", "khabi"};
    app.require_subcommand(1);
    CLI::Option* tol_opt = nullptr;
    CLI::Option* rho_opt = nullptr;
    CLI::Option* rmin_opt = nullptr;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--n", cfg.n, "complex dimension n >= 2")->check(CLI::Range(2, 40));
        auto* r = sub->add_option("--rho", rho, "lower order");
        auto* lo = sub->add_option("--rho-min", rho_min, "first rho of a grid");
        auto* hi = sub->add_option("--rho-max", rho_max, "last rho of a grid");
        r->excludes(lo)->excludes(hi);
        lo->needs(hi);
        hi->needs(lo);
        sub->add_option("--steps", cfg.steps, "number of grid points")->check(CLI::PositiveNumber);
        auto* t = sub->add_option("--tol", cfg.tol, "relative tolerance for quadrature oracles");
        sub->add_option("--root-tol", cfg.root_tol, "relative bisection width for roots");
        sub->add_option("--precision", precision, "double or extended")
            ->check(CLI::IsMember({"double", "extended"}));
        sub->add_option("--format", format, "csv, json or human")->check(CLI::IsMember({"csv", "json", "human"}));
        sub->add_option("--out", cfg.out, "write output to this file");
        return std::make_tuple(r, lo, t);
    };

    std::vector<std::tuple<CLI::App*, CLI::Option*, CLI::Option*, CLI::Option*>> subs;
    for (auto [name, help] : {std::pair{"constants", "P_n, deficiency, J and K_n with oracle residuals"},
                              std::pair{"psi-roots", "zeros and sign pattern of psi"},
                              std::pair{"maximize", "run the maximizing sequence s_k"},
                              std::pair{"dahlberg", "compare with the subharmonic extremal"}}) {
        auto* sub = app.add_subcommand(name, help);
        auto [r, lo, t] = common(sub);
        if (std::string(name) == "maximize") {
            sub->add_option("--iters", cfg.iters, "number of iterations K");
            sub->add_option("--plot", cfg.plot, "write k, J, gap as CSV to this file");
        }
        subs.emplace_back(sub, r, lo, t);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ExitCode::ok : ExitCode::usage;
    }

    for (auto& [sub, r, lo, t] : subs) {
        if (!sub->parsed()) continue;
        cfg.command = sub->get_name();
        rho_opt = r;
        rmin_opt = lo;
        tol_opt = t;
    }
    if (rho_opt->count()) cfg.rho = rho;
    if (rmin_opt->count()) {
        cfg.rho_min = rho_min;
        cfg.rho_max = rho_max;
    }
    cfg.extended = precision == "extended";
    cfg.format = format == "csv" ? Format::csv : format == "json" ? Format::json : Format::human;

    try {
        if (!tol_opt->count() && env_tol != nullptr && *env_tol != '\0') cfg.tol = parse_tolerance(env_tol);
        if (!(cfg.tol > 1e-14 && cfg.tol < 1e-2)) throw DomainError("tolerance must lie in (1e-14, 1e-2)");
        if (!(cfg.root_tol > 0.0 && cfg.root_tol < 1e-2)) throw DomainError("--root-tol must lie in (0, 1e-2)");

        Output o;
        if (cfg.command == "constants") o = cmd_constants(cfg);
        else if (cfg.command == "psi-roots") o = cmd_psi_roots(cfg);
        else if (cfg.command == "maximize") o = cmd_maximize(cfg);
        else o = cmd_dahlberg(cfg);

        const std::string text = render(cfg, o.table, o.residuals.dump());
        if (cfg.out.empty()) {
            out << text;
        } else {
            std::ofstream file(cfg.out);
            if (!file) throw DomainError("cannot open output file " + cfg.out);
            file << text;
        }
        if (o.code != ExitCode::ok) err << "khabi: oracle or invariant check failed; see residuals\n";
        return o.code;
    } catch (const DomainError& e) {
        err << "khabi: " << e.what() << '\n';
        return ExitCode::usage;
    } catch (const OracleFailure& e) {
        err << "khabi: oracle failure: " << e.what() << '\n';
        return ExitCode::oracle_failure;
    } catch (const NonConvergence& e) {
        err << "khabi: no convergence: " << e.what() << " (partial value " << format_double(e.partial_value(), 17)
            << ")\n";
        return ExitCode::non_convergence;
    }
}

} // namespace khabi::cli
