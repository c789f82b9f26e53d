#ifndef FREEMAX_TOOLS_FREEMAX_CLI_HPP
#define FREEMAX_TOOLS_FREEMAX_CLI_HPP

// Command-line driver. `run` does all the work and never exits the process,
// so the test suite can call it directly.

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "freemax/freemax.hpp"

namespace freemax::cli {

using io::json;

inline constexpr std::string_view kToolName = "freemax";
inline constexpr std::string_view kVersion = "1.0.0";

enum Exit : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_usage = 2,
    exit_unknown_subcommand = 3,
    exit_invalid_argument = 4,
    exit_invalid_law = 5,
    exit_domain = 6,
    exit_io = 7,
    exit_parse = 8,
    exit_numerical = 9,
};

inline int exit_code(ErrorCode c) {
    switch (c) {
    case ErrorCode::invalid_argument: return exit_invalid_argument;
    case ErrorCode::invalid_law: return exit_invalid_law;
    case ErrorCode::domain: return exit_domain;
    case ErrorCode::io: return exit_io;
    case ErrorCode::parse: return exit_parse;
    case ErrorCode::numerical: return exit_numerical;
    }
    return exit_internal;
}

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"law",    "conv", "iterate", "stable",
                                                "attract", "pot",  "spectral", "poisson"};
    return names;
}

struct Environment {
    /// value of FREEMAX_THREADS, if set
    std::optional<std::string> threads;
};

// ---------------------------------------------------------------------------
// argument helpers

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(text);
    while (std::getline(ss, item, sep)) out.emplace_back(io::trim(item));
    return out;
}

inline std::vector<double> number_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    for (const auto& s : split(text, ',')) out.push_back(io::parse_number(s, flag));
    require(!out.empty(), ErrorCode::parse, std::string(flag) + ": empty list");
    return out;
}

inline std::vector<long long> integer_list(const std::string& text, const char* flag) {
    std::vector<long long> out;
    for (double x : number_list(text, flag)) {
        require(std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15, ErrorCode::parse,
                std::string(flag) + ": expected integers, got " + io::format_number(x));
        out.push_back(static_cast<long long>(x));
    }
    return out;
}

/// one value for everything, or one value per item
template <typename T>
T pick(const std::vector<T>& values, std::size_t i, const char* flag) {
    require(!values.empty(), ErrorCode::invalid_argument, std::string(flag) + " is required");
    if (values.size() == 1) return values.front();
    require(i < values.size(), ErrorCode::invalid_argument,
            std::string(flag) + ": give one value or one per law");
    return values[i];
}

inline std::string csv_field(const json& v) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    }
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return io::format_number(v.get<double>());
    if (v.is_null()) return "";
    return v.dump();
}

inline std::string csv_table(const std::vector<std::string>& columns, const std::vector<json>& rows) {
    std::string out;
    for (std::size_t k = 0; k < columns.size(); ++k) out += (k ? "," : "") + columns[k];
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < columns.size(); ++k)
            out += (k ? "," : "") + csv_field(r.contains(columns[k]) ? r.at(columns[k]) : json());
        out += "\n";
    }
    return out;
}

/// JSON payload plus its CSV rendering.
struct Result {
    json payload;
    std::string csv;
};

inline Result tabular(const std::vector<std::string>& columns, std::vector<json> rows) {
    std::string csv = csv_table(columns, rows);
    return {json(std::move(rows)), std::move(csv)};
}

struct LawInput {
    std::string label;
    Cdf cdf;
};

/// Per-invocation state: what went into the inputs hash, the seed, threads.
class Context {
public:
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;

    void hash_token(std::string_view token) {
        hash_ = io::fnv1a(token, hash_);
        hash_ = io::fnv1a(std::string_view("\0", 1), hash_);
    }

    std::string read(const std::string& path) {
        std::string text = io::read_text(path);
        hash_token(text);
        return text;
    }

    RngSeed require_seed(const char* what) const {
        require(seed.has_value(), ErrorCode::invalid_argument, std::string(what) + " needs --seed");
        return RngSeed{*seed};
    }

    std::string inputs_hash() const { return io::hex64(hash_); }

    std::vector<LawInput> laws(const std::vector<std::string>& specs, const std::vector<std::string>& tables) {
        std::vector<LawInput> out;
        for (const auto& s : specs) {
            const LawSpec spec = io::parse_law_spec(s);
            out.push_back({io::to_json(spec).dump(), make_law(spec)});
        }
        for (const auto& path : tables) out.push_back({path, io::parse_cdf_table(read(path))});
        return out;
    }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

inline std::vector<double> grid_for(std::span<const Cdf> laws, const std::string& grid, std::size_t points) {
    if (!grid.empty()) {
        const auto g = number_list(grid, "--grid");
        require(g.size() == 3, ErrorCode::invalid_argument, "--grid expects lo,hi,count");
        require(g[0] < g[1] && g[2] >= 2 && g[2] == std::floor(g[2]), ErrorCode::invalid_argument,
                "--grid needs lo < hi and an integer count >= 2");
        return linspace(g[0], g[1], static_cast<std::size_t>(g[2]));
    }
    return comparison_grid(laws, GridSpec{points});
}

inline double sup_on_joint_grid(const Cdf& f, const Cdf& g, std::size_t points) {
    const auto grid = comparison_grid(f, g, GridSpec{points});
    return sup_distance(f, g, grid);
}

// ---------------------------------------------------------------------------
// options shared by the subcommands; each subcommand reads what it declares

struct Options {
    std::string out;
    std::string format = "json";
    std::vector<std::string> law, cdf, compare;
    std::string grid;
    std::size_t points = 2001;
    std::optional<double> fc;
    std::string op;
    std::string c = "1";
    std::string type, alpha = "1", n, k = "2";
    double tol = 1e-10;
    bool minimize = false;
    std::string rv_alpha, rv_mode = "infinity", rv_x, rv_t;
    std::string samples;
    std::vector<std::string> u;
    std::string gamma;
    long long sample_size = 0;
    std::string a_path, b_path;
    double p = 16.0;
    bool shift = false;
    bool eigenvalues_only = false;
    std::string experiment, ranks = "10,25,40", p_list = "16,256,16384";
    long long big_n = 0;
    std::string n_list;
    long long trials = 1;
    std::string partition, subsets, eigen_dump, dump_subset;
    bool triangular = false;
};

// ---------------------------------------------------------------------------
// subcommands

inline Result run_law(Context& ctx, const Options& o) {
    auto laws = ctx.laws(o.law, o.cdf);
    require(!laws.empty(), ErrorCode::invalid_argument, "law: give --law or --cdf");
    if (o.fc)
        for (auto& l : laws) l.cdf = f_c_map(l.cdf, *o.fc);
    if (!o.compare.empty()) {
        std::vector<json> rows;
        for (std::size_t i = 0; i < laws.size(); ++i) {
            const LawSpec target = io::parse_law_spec(pick(o.compare, i, "--compare"));
            const double d = sup_on_joint_grid(laws[i].cdf, make_law(target), o.points);
            rows.push_back({{"law", laws[i].label}, {"compare", io::to_json(target).dump()}, {"sup_distance", d}});
        }
        return tabular({"law", "compare", "sup_distance"}, std::move(rows));
    }
    require(laws.size() == 1, ErrorCode::invalid_argument, "law: a table needs exactly one law");
    const auto grid = grid_for(std::span<const Cdf>(&laws[0].cdf, 1), o.grid, o.points);
    std::vector<json> rows;
    for (double x : grid) rows.push_back({{"x", x}, {"F", laws[0].cdf(x)}});
    return {json{{"law", laws[0].label}, {"table", rows}}, io::cdf_table_csv(laws[0].cdf, grid)};
}

inline Result run_conv(Context& ctx, const Options& o) {
    const auto laws = ctx.laws(o.law, o.cdf);
    require(!laws.empty(), ErrorCode::invalid_argument, "conv: give --law or --cdf");
    if (o.op == "fc_homomorphism") {
        std::vector<json> rows;
        double worst = 0.0;
        for (double c : number_list(o.c, "--c"))
            for (std::size_t i = 0; i < laws.size(); ++i)
                for (std::size_t j = laws.size() == 1 ? i : i + 1; j < laws.size(); ++j) {
                    const Cdf& f = laws[i].cdf;
                    const Cdf& g = laws[j].cdf;
                    const Cdf lhs = f_c_map(classical_max_conv(f, g), c);
                    const Cdf rhs = free_max_conv(f_c_map(f, c), f_c_map(g, c));
                    const double d = sup_on_joint_grid(lhs, rhs, o.points);
                    worst = std::max(worst, d);
                    rows.push_back({{"c", c}, {"i", i}, {"j", j}, {"sup_distance", d}});
                }
        Result r = tabular({"c", "i", "j", "sup_distance"}, rows);
        r.payload = {{"rows", rows}, {"max_sup_distance", worst}};
        return r;
    }
    require(laws.size() >= 2, ErrorCode::invalid_argument, "conv: needs at least two laws");
    Cdf h = laws[0].cdf;
    for (std::size_t i = 1; i < laws.size(); ++i) {
        if (o.op == "free_max")
            h = free_max_conv(h, laws[i].cdf);
        else if (o.op == "free_min")
            h = free_min_conv(h, laws[i].cdf);
        else if (o.op == "classical_max")
            h = classical_max_conv(h, laws[i].cdf);
        else
            throw Error(ErrorCode::invalid_argument, "conv: unknown --op '" + o.op + "'");
    }
    if (!o.compare.empty()) {
        require(o.compare.size() == 1, ErrorCode::invalid_argument, "conv: one --compare law");
        const LawSpec target = io::parse_law_spec(o.compare[0]);
        const double d = sup_on_joint_grid(h, make_law(target), o.points);
        return tabular({"op", "compare", "sup_distance"},
                       {json{{"op", o.op}, {"compare", io::to_json(target).dump()}, {"sup_distance", d}}});
    }
    const auto grid = grid_for(std::span<const Cdf>(&h, 1), o.grid, o.points);
    std::vector<json> rows;
    for (double x : grid) rows.push_back({{"x", x}, {"F", h(x)}});
    return {json{{"op", o.op}, {"table", rows}}, io::cdf_table_csv(h, grid)};
}

struct Attraction {
    std::string label;
    FreeType type;
    double alpha;
    std::vector<ConvergenceRow> rows;
};

inline std::vector<Attraction> attraction_rows(Context& ctx, const Options& o) {
    const auto laws = ctx.laws(o.law, o.cdf);
    require(!laws.empty(), ErrorCode::invalid_argument, "give --law or --cdf");
    require(!o.n.empty(), ErrorCode::invalid_argument, "--n is required");
    const auto types = split(o.type, ',');
    const auto alphas = number_list(o.alpha, "--alpha");
    const auto ns = integer_list(o.n, "--n");
    std::vector<Attraction> out;
    for (std::size_t i = 0; i < laws.size(); ++i) {
        const FreeType t = parse_free_type(pick(types, i, "--type"));
        const double alpha = pick(alphas, i, "--alpha");
        std::vector<NormingConstants> constants;
        for (long long n : ns) constants.push_back(norming_constants(laws[i].cdf, n, t));
        out.push_back({laws[i].label, t, alpha,
                       convergence_report(laws[i].cdf, free_type_law(t, alpha), constants, GridSpec{o.points},
                                          ctx.threads)});
    }
    return out;
}

inline json row_json(const Attraction& a, const ConvergenceRow& r) {
    json j = io::to_json(r);
    j["law"] = a.label;
    j["type"] = std::string(to_string(a.type));
    j["alpha"] = a.alpha;
    return j;
}

inline const std::vector<std::string> kConvergenceColumns{"law", "type", "alpha", "n", "a_n", "b_n", "sup_distance"};

inline Result run_iterate(Context& ctx, const Options& o) {
    std::vector<json> rows;
    for (const auto& a : attraction_rows(ctx, o))
        for (const auto& r : a.rows) rows.push_back(row_json(a, r));
    return tabular(kConvergenceColumns, std::move(rows));
}

inline Result run_attract(Context& ctx, const Options& o) {
    std::vector<json> rows, per_law;
    const auto all = attraction_rows(ctx, o);
    const auto laws_for_rv = o.rv_alpha.empty() ? std::vector<LawInput>{} : ctx.laws(o.law, o.cdf);
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto& a = all[i];
        json table = json::array();
        bool decreasing = true;
        for (std::size_t k = 0; k < a.rows.size(); ++k) {
            rows.push_back(row_json(a, a.rows[k]));
            table.push_back(io::to_json(a.rows[k]));
            if (k > 0 && !(a.rows[k].sup_distance < a.rows[k - 1].sup_distance)) decreasing = false;
        }
        json entry{{"law", a.label},
                   {"type", std::string(to_string(a.type))},
                   {"alpha", a.alpha},
                   {"rows", table},
                   {"strictly_decreasing", decreasing},
                   {"final_sup_distance", a.rows.empty() ? 0.0 : a.rows.back().sup_distance}};
        if (!o.rv_alpha.empty()) {
            const auto mode = o.rv_mode == "endpoint" ? RvMode::at_endpoint : RvMode::at_infinity;
            require(o.rv_mode == "endpoint" || o.rv_mode == "infinity", ErrorCode::invalid_argument,
                    "--rv-mode is infinity or endpoint");
            const auto xs = number_list(o.rv_x.empty() ? "2" : o.rv_x, "--rv-x");
            const auto ts = number_list(o.rv_t.empty() ? "10,100,1000" : o.rv_t, "--rv-t");
            entry["rv_deviation"] = rv_check(laws_for_rv[i].cdf, io::parse_number(o.rv_alpha, "--rv-alpha"), mode,
                                             xs, ts);
        }
        per_law.push_back(std::move(entry));
    }
    Result r = tabular(kConvergenceColumns, rows);
    r.payload = per_law;
    return r;
}

inline Result run_stable(Context& ctx, const Options& o) {
    const bool by_type = !o.type.empty();
    const bool by_law = !o.law.empty() || !o.cdf.empty();
    require(by_type != by_law, ErrorCode::invalid_argument, "stable: give either --type or --law/--cdf");
    std::vector<json> rows;
    if (by_type) {
        require(!o.n.empty(), ErrorCode::invalid_argument, "stable: --n is required with --type");
        for (const auto& t_name : split(o.type, ',')) {
            const FreeType t = parse_free_type(t_name);
            for (double alpha : number_list(o.alpha, "--alpha")) {
                const Cdf g = free_type_law(t, alpha);
                const auto grid = comparison_grid(std::span<const Cdf>(&g, 1), GridSpec{o.points});
                for (long long n : integer_list(o.n, "--n")) {
                    const auto c = stability_constants(t, alpha, static_cast<double>(n));
                    rows.push_back({{"type", std::string(to_string(t))},
                                    {"alpha", alpha},
                                    {"n", n},
                                    {"a", c.a_of_s},
                                    {"b", c.b_of_s},
                                    {"sup_distance", stability_distance(g, n, c.a_of_s, c.b_of_s, grid)}});
                }
            }
        }
        return tabular({"type", "alpha", "n", "a", "b", "sup_distance"}, std::move(rows));
    }
    for (const auto& l : ctx.laws(o.law, o.cdf))
        for (long long k : integer_list(o.k, "--k")) {
            const auto check = verify_max_stable(l.cdf, k, o.tol, GridSpec{o.points});
            json row{{"law", l.label},
                     {"k", k},
                     {"stable", check.stable},
                     {"bounded_below", check.bounded_below},
                     {"a", check.a},
                     {"b", check.b},
                     {"sup_distance", check.sup_distance}};
            if (o.minimize) {
                const auto m = minimized_stability_distance(l.cdf, k, GridSpec{o.points});
                row["minimized_a"] = m.a;
                row["minimized_b"] = m.b;
                row["minimized_sup_distance"] = m.sup_distance;
            }
            rows.push_back(std::move(row));
        }
    std::vector<std::string> cols{"law", "k", "stable", "bounded_below", "a", "b", "sup_distance"};
    if (o.minimize) cols.insert(cols.end(), {"minimized_a", "minimized_b", "minimized_sup_distance"});
    return tabular(cols, std::move(rows));
}

inline std::vector<double> exceedances(const std::vector<double>& xs, double u) {
    std::vector<double> out;
    for (double x : xs)
        if (x > u) out.push_back(x - u);
    return out;
}

inline Result run_pot(Context& ctx, const Options& o) {
    const std::vector<std::string> fit_cols{"law", "u", "gamma_hat", "sigma_hat", "n_exceedances", "log_likelihood"};
    if (!o.samples.empty()) {
        require(o.law.empty() && o.cdf.empty(), ErrorCode::invalid_argument, "pot: --samples excludes --law/--cdf");
        require(o.u.size() == 1, ErrorCode::invalid_argument, "pot: --samples needs one --u");
        const double u = io::parse_number(o.u[0], "--u");
        const auto fit = fit_gpd(exceedances(io::parse_samples(ctx.read(o.samples)), u));
        json row = io::to_json(fit);
        row["u"] = u;
        std::string csv = csv_table({"u", "gamma_hat", "sigma_hat", "n_exceedances", "log_likelihood"}, {row});
        return {io::to_json(fit), std::move(csv)};
    }
    const auto laws = ctx.laws(o.law, o.cdf);
    require(!laws.empty(), ErrorCode::invalid_argument, "pot: give --samples, --law or --cdf");
    std::vector<json> rows;
    if (o.sample_size > 0) {
        const RngSeed seed = ctx.require_seed("pot sampling");
        for (std::size_t i = 0; i < laws.size(); ++i) {
            const double u = o.u.empty() ? 0.0 : io::parse_number(pick(o.u, i, "--u"), "--u");
            const auto xs = sample_inverse_cdf(laws[i].cdf, static_cast<std::size_t>(o.sample_size), seed.child(i));
            json row = io::to_json(fit_gpd(exceedances(xs, u)));
            row["law"] = laws[i].label;
            row["u"] = u;
            rows.push_back(std::move(row));
        }
        return tabular(fit_cols, std::move(rows));
    }
    require(!o.gamma.empty(), ErrorCode::invalid_argument, "pot: give --gamma for the Balkema-de Haan check");
    const auto gammas = number_list(o.gamma, "--gamma");
    for (std::size_t i = 0; i < laws.size(); ++i) {
        const double gamma = pick(gammas, i, "--gamma");
        const auto us = number_list(pick(o.u, i, "--u"), "--u");
        for (const auto& r : balkema_de_haan_check(laws[i].cdf, gamma, us, GridSpec{o.points})) {
            json row = io::to_json(r);
            row["law"] = laws[i].label;
            row["gamma"] = gamma;
            rows.push_back(std::move(row));
        }
    }
    return tabular({"law", "gamma", "u", "sigma_u", "sup_distance"}, std::move(rows));
}

// spectral experiments report rows {seed, N, quantity, value}
inline json experiment_row(RngSeed seed, long long n, const std::string& quantity, double value) {
    return {{"seed", seed.value}, {"N", n}, {"quantity", quantity}, {"value", value}};
}

inline RealHermitian random_symmetric(long long n, RngSeed seed) {
    const Eigen::MatrixXd g = detail::gaussian_matrix<double>(n, n, seed, 1.0 / static_cast<double>(n));
    return RealHermitian(Eigen::MatrixXd((g + g.transpose()) / std::sqrt(2.0)));
}

inline double spectral_cdf_gap(const RealHermitian& a, const RealHermitian& b, bool max) {
    const RealHermitian m = max ? spectral_max(a, b) : spectral_min(a, b);
    const Cdf lhs = empirical_spectral_cdf(m);
    const Cdf rhs = max ? free_max_conv(empirical_spectral_cdf(a), empirical_spectral_cdf(b))
                        : free_min_conv(empirical_spectral_cdf(a), empirical_spectral_cdf(b));
    double worst = 0.0;
    for (const auto* h : {&a, &b, &m})
        for (double x : h->eigenvalues()) worst = std::max(worst, std::abs(lhs(x) - rhs(x)));
    return worst;
}

inline Result run_spectral_experiment(Context& ctx, const Options& o) {
    const RngSeed seed = ctx.require_seed("spectral --experiment");
    const long long n = o.big_n;
    std::vector<json> rows;
    if (o.experiment == "general_position") {
        require(n >= 1, ErrorCode::invalid_argument, "--N is required");
        const auto ranks = integer_list(o.ranks, "--ranks");
        long long passed = 0, total = 0;
        for (long long t = 0; t < o.trials; ++t) {
            const RngSeed s = seed.child(static_cast<std::uint64_t>(t));
            std::uint64_t stream = 0;
            for (long long r1 : ranks)
                for (long long r2 : ranks) {
                    const auto p = haar_projection<double>(n, r1, s.child(stream++));
                    const auto q = haar_projection<double>(n, r2, s.child(stream++));
                    const bool ok = general_position_check(p, q);
                    passed += ok;
                    ++total;
                    rows.push_back(experiment_row(
                        s, n, "general_position[" + std::to_string(r1) + "," + std::to_string(r2) + "]", ok));
                }
        }
        rows.push_back(experiment_row(seed, n, "pass_count", static_cast<double>(passed)));
        rows.push_back(experiment_row(seed, n, "check_count", static_cast<double>(total)));
    } else if (o.experiment == "free_max") {
        require(n >= 1, ErrorCode::invalid_argument, "--N is required");
        double worst_max = 0.0, worst_min = 0.0;
        for (long long t = 0; t < o.trials; ++t) {
            const RngSeed s = seed.child(static_cast<std::uint64_t>(t));
            const RealHermitian a = haar_conjugate(random_symmetric(n, s.child(0)), s.child(1));
            const RealHermitian b = haar_conjugate(random_symmetric(n, s.child(2)), s.child(3));
            const double dmax = spectral_cdf_gap(a, b, true), dmin = spectral_cdf_gap(a, b, false);
            worst_max = std::max(worst_max, dmax);
            worst_min = std::max(worst_min, dmin);
            rows.push_back(experiment_row(s, n, "free_max_error", dmax));
            rows.push_back(experiment_row(s, n, "free_min_error", dmin));
        }
        rows.push_back(experiment_row(seed, n, "max_free_max_error", worst_max));
        rows.push_back(experiment_row(seed, n, "max_free_min_error", worst_min));
    } else if (o.experiment == "pnorm" || o.experiment == "logexp") {
        const bool pnorm = o.experiment == "pnorm";
        const auto ps = number_list(o.p_list, "--p-list");
        // the spin pair first, then seeded pairs of size N
        std::vector<std::pair<RealHermitian, RealHermitian>> pairs;
        Eigen::Matrix2d flip;
        flip << 0.0, 1.0, 1.0, 0.0;
        pairs.emplace_back(RealHermitian::diagonal(Eigen::Vector2d(1.0, -1.0)), RealHermitian(flip));
        for (long long t = 0; t < o.trials; ++t) {
            require(n >= 1, ErrorCode::invalid_argument, "--N is required with --trials");
            const RngSeed s = seed.child(static_cast<std::uint64_t>(t));
            pairs.emplace_back(random_symmetric(n, s.child(0)), random_symmetric(n, s.child(1)));
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            auto [a, b] = pairs[i];
            if (pnorm) {
                // moved up to spectrum >= 1 so both are positive definite
                const double c = 1.0 - std::min(a.min_eigenvalue(), b.min_eigenvalue());
                a = a.shifted(c);
                b = b.shifted(c);
            }
            const RealHermitian target = spectral_max(a, b);
            const RngSeed row_seed = i == 0 ? seed : seed.child(i - 1);
            const long long dim = a.dimension();
            const std::string tag = i == 0 ? "spin" : "pair" + std::to_string(i - 1);
            std::optional<RealHermitian> previous;
            for (double p : ps) {
                const RealHermitian r = pnorm ? pnorm_approx(a, b, p) : logexp_approx(a, b, p);
                rows.push_back(experiment_row(row_seed, dim, o.experiment + "_distance[" + tag + ",p=" +
                                                                 io::format_number(p) + "]",
                                              (r.matrix() - target.matrix()).norm()));
                if (previous) {
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> d(r.matrix() - previous->matrix(),
                                                                     Eigen::EigenvaluesOnly);
                    rows.push_back(experiment_row(row_seed, dim,
                                                  o.experiment + "_increment_min_eigenvalue[" + tag + ",p=" +
                                                      io::format_number(p) + "]",
                                                  d.eigenvalues().minCoeff()));
                }
                previous = r;
            }
        }
    } else {
        throw Error(ErrorCode::invalid_argument, "spectral: unknown --experiment '" + o.experiment + "'");
    }
    return tabular({"seed", "N", "quantity", "value"}, std::move(rows));
}

inline Result run_spectral(Context& ctx, const Options& o) {
    if (!o.experiment.empty()) return run_spectral_experiment(ctx, o);
    require(!o.a_path.empty() && !o.b_path.empty(), ErrorCode::invalid_argument,
            "spectral: give --a and --b, or --experiment");
    const RealHermitian a(io::parse_matrix_csv(ctx.read(o.a_path)));
    const RealHermitian b(io::parse_matrix_csv(ctx.read(o.b_path)));
    if (o.op == "leq") {
        const bool leq = spectral_leq(a, b);
        return {json{{"leq", leq}}, "leq\n" + std::string(leq ? "true" : "false") + "\n"};
    }
    RealHermitian r = a;
    if (o.op == "max")
        r = spectral_max(a, b);
    else if (o.op == "min")
        r = spectral_min(a, b);
    else if (o.op == "pnorm")
        r = pnorm_approx(a, b, o.p, o.shift);
    else if (o.op == "logexp")
        r = logexp_approx(a, b, o.p);
    else
        throw Error(ErrorCode::invalid_argument, "spectral: unknown --op '" + o.op + "'");
    const Eigen::VectorXd values = r.eigenvalues();
    json m = json::array();
    for (Eigen::Index i = 0; i < r.dimension(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < r.dimension(); ++k) row.push_back(r.matrix()(i, k));
        m.push_back(row);
    }
    std::vector<double> ev(values.data(), values.data() + values.size());
    const std::string csv = o.eigenvalues_only ? io::eigenvalues_csv(values) : io::matrix_csv(r.matrix());
    return {json{{"op", o.op}, {"matrix", m}, {"eigenvalues", ev}}, csv};
}

inline const std::vector<std::string> kRecordColumns{"subset", "N",  "tau_Y", "expected",   "join_additivity_ok",
                                                     "ks_distance", "mu", "mu_N",  "norm_gap"};

inline Result run_poisson(Context& ctx, const Options& o) {
    const RngSeed seed = ctx.require_seed("poisson");
    require(!o.partition.empty(), ErrorCode::invalid_argument, "poisson: --partition is required");
    const Partition partition =
        io::partition_from_json(io::parse_json(ctx.read(o.partition), "partition " + o.partition));
    const auto subsets = parse_subsets(o.subsets);
    require(!o.n_list.empty(), ErrorCode::invalid_argument, "poisson: --N is required");
    const auto ns = integer_list(o.n_list, "--N");
    std::vector<json> rows;
    if (o.triangular) {
        for (long long n : ns) {
            const auto process = realize_triangular_process(partition, n, seed);
            for (const auto& s : subsets) {
                const double mu = s.mass(partition);
                const Cdf target = triangular_law_cdf(mu);
                const Cdf empirical = empirical_spectral_cdf(triangular_process_value(process, partition, s));
                const auto atoms = s.resolve(partition);
                Cdf folded = triangular_law_cdf(partition.atoms()[atoms.front()].mass);
                for (std::size_t k = 1; k < atoms.size(); ++k)
                    folded = free_max_conv(folded, triangular_law_cdf(partition.atoms()[atoms[k]].mass));
                rows.push_back({{"subset", s.to_string()},
                                {"N", n},
                                {"mu", mu},
                                {"sup_distance", sup_on_joint_grid(empirical, target, o.points)},
                                {"analytic_error", sup_on_joint_grid(folded, target, o.points)}});
            }
        }
        return tabular({"subset", "N", "mu", "sup_distance", "analytic_error"}, std::move(rows));
    }
    require(o.trials >= 1, ErrorCode::invalid_argument, "poisson: --trials must be >= 1");
    json reports = json::array();
    for (long long n : ns) {
        const auto report = extremal_process_report(partition, subsets, n, static_cast<int>(o.trials), seed,
                                                    ctx.threads);
        reports.push_back(io::to_json(report));
        for (const auto& rec : report.records) rows.push_back(io::to_json(rec));
    }
    if (!o.eigen_dump.empty()) {
        const SubsetId dump = o.dump_subset.empty() ? subsets.front() : SubsetId::parse(o.dump_subset);
        const auto sample = sample_free_poisson_matrix(partition, dump, ns.front(), seed.child(0),
                                                       Resolution::values_only);
        io::write_text(o.eigen_dump, io::eigenvalues_csv(sample.matrix.eigenvalues()));
    }
    Result r = tabular(kRecordColumns, rows);
    r.payload = ns.size() == 1 ? reports.front() : reports;
    return r;
}

// ---------------------------------------------------------------------------
// entry point

inline void emit_error(std::ostream& err, const std::string& code, int status, const std::string& message) {
    err << json{{"error", {{"code", code}, {"exit_code", status}, {"message", message}}}}.dump() << "\n";
}

inline unsigned thread_count(const Environment& env) {
    if (!env.threads) return std::max(1u, std::thread::hardware_concurrency());
    const auto& s = *env.threads;
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    require(res.ec == std::errc() && res.ptr == s.data() + s.size() && v >= 1 && v <= 4096,
            ErrorCode::invalid_argument, "FREEMAX_THREADS must be a positive integer, got '" + s + "'");
    return static_cast<unsigned>(v);
}

inline void add_output(CLI::App* sub, Options& o) {
    sub->add_option("--out", o.out, "write the report here instead of stdout");
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--points", o.points, "comparison grid size");
}

inline void add_laws(CLI::App* sub, Options& o) {
    sub->add_option("--law", o.law, "law spec JSON {kind, shape, location, scale}; repeatable");
    sub->add_option("--cdf", o.cdf, "CDF table CSV (x,F); repeatable");
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
               const Environment& env = {}) {
    Options o;
    std::optional<std::uint64_t> seed;
    CLI::App app{"Free extreme-value calculus and spectral experiments", std::string(kToolName)};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1, 1);

    auto* law = app.add_subcommand("law", "CDF table of a law, or distances to reference laws");
    add_laws(law, o);
    law->add_option("--fc", o.fc, "apply the map u -> (1 + c ln u)+ first");
    law->add_option("--compare", o.compare, "reference law spec, one or one per law");
    law->add_option("--grid", o.grid, "lo,hi,count");

    auto* conv = app.add_subcommand("conv", "free / classical max and min convolutions");
    add_laws(conv, o);
    conv->add_option("--op", o.op, "free_max, free_min, classical_max or fc_homomorphism")->required();
    conv->add_option("--c", o.c, "list of c for fc_homomorphism");
    conv->add_option("--compare", o.compare, "reference law spec for the result");
    conv->add_option("--grid", o.grid, "lo,hi,count");

    auto* iterate = app.add_subcommand("iterate", "F^{free n}(a_n x + b_n) against a free type");
    add_laws(iterate, o);
    iterate->add_option("--type", o.type, "I, II or III; one or one per law")->required();
    iterate->add_option("--alpha", o.alpha, "shape of the target type; one or one per law");
    iterate->add_option("--n", o.n, "list of n")->required();

    auto* stable = app.add_subcommand("stable", "max-stability fixed points and verification");
    add_laws(stable, o);
    stable->add_option("--type", o.type, "list of free types, closed-form constants");
    stable->add_option("--alpha", o.alpha, "list of alpha");
    stable->add_option("--n", o.n, "list of n");
    stable->add_option("--k", o.k, "list of k for verification");
    stable->add_option("--tol", o.tol, "stability tolerance");
    stable->add_flag("--minimize", o.minimize, "also minimize the distance over (a, b)");

    auto* attract = app.add_subcommand("attract", "domain-of-attraction convergence report");
    add_laws(attract, o);
    attract->add_option("--type", o.type, "I, II or III; one or one per law")->required();
    attract->add_option("--alpha", o.alpha, "shape of the target type");
    attract->add_option("--n", o.n, "list of n")->required();
    attract->add_option("--rv-alpha", o.rv_alpha, "regular variation index to check");
    attract->add_option("--rv-mode", o.rv_mode, "infinity or endpoint");
    attract->add_option("--rv-x", o.rv_x, "list of x");
    attract->add_option("--rv-t", o.rv_t, "list of t (or h at the endpoint)");

    auto* pot = app.add_subcommand("pot", "peaks over threshold: GPD fits and Balkema-de Haan distances");
    add_laws(pot, o);
    pot->add_option("--samples", o.samples, "sample file (one value per line or a 'value' column)");
    pot->add_option("--u", o.u, "threshold, or list of thresholds per law");
    pot->add_option("--gamma", o.gamma, "GPD shape; one or one per law");
    pot->add_option("--sample-size", o.sample_size, "draw this many inverse-CDF samples per law, then fit");
    pot->add_option("--seed", seed, "64-bit seed");

    auto* spectral = app.add_subcommand("spectral", "spectral order on Hermitian matrices");
    spectral->add_option("--a", o.a_path, "matrix CSV");
    spectral->add_option("--b", o.b_path, "matrix CSV");
    spectral->add_option("--op", o.op, "max, min, leq, pnorm or logexp");
    spectral->add_option("--p", o.p, "exponent for pnorm / logexp");
    spectral->add_flag("--shift", o.shift, "shift to positive definite before pnorm");
    spectral->add_flag("--eigenvalues", o.eigenvalues_only, "CSV output as index,lambda");
    spectral->add_option("--experiment", o.experiment, "general_position, free_max, pnorm or logexp");
    spectral->add_option("--N", o.big_n, "matrix size");
    spectral->add_option("--ranks", o.ranks, "ranks for general_position");
    spectral->add_option("--trials", o.trials, "number of seeded trials");
    spectral->add_option("--p-list", o.p_list, "exponents for pnorm / logexp experiments");
    spectral->add_option("--seed", seed, "64-bit seed");

    auto* poisson = app.add_subcommand("poisson", "free Poisson and triangular extremal processes");
    poisson->add_option("--partition", o.partition, "partition JSON {atoms: [{id, mass}]}");
    poisson->add_option("--subsets", o.subsets, "subsets, e.g. \"1;2;1,2\"")->required();
    poisson->add_option("--N", o.n_list, "matrix size, or a list")->required();
    poisson->add_option("--trials", o.trials, "number of trials");
    poisson->add_option("--seed", seed, "64-bit seed");
    poisson->add_flag("--triangular", o.triangular, "triangular process instead of range projections");
    poisson->add_option("--eigenvalues", o.eigen_dump, "write trial-0 eigenvalues (index,lambda) here");
    poisson->add_option("--dump-subset", o.dump_subset, "subset for --eigenvalues (default: the first)");

    for (auto* sub : {law, conv, iterate, stable, attract, pot, spectral, poisson}) add_output(sub, o);

    if (!args.empty() && args[0].rfind("-", 0) != 0 &&
        std::find(subcommands().begin(), subcommands().end(), args[0]) == subcommands().end()) {
        emit_error(err, "unknown_subcommand", exit_unknown_subcommand, "unknown subcommand '" + args[0] + "'");
        return exit_unknown_subcommand;
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        emit_error(err, "usage", exit_usage, e.what());
        return exit_usage;
    }

    try {
        Context ctx;
        ctx.seed = seed;
        ctx.threads = thread_count(env);
        const CLI::App* chosen = app.get_subcommands().front();
        const std::string name = chosen->get_name();
        // the inputs hash covers the arguments (minus --out) and every file read
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--out") {
                ++i;
                continue;
            }
            if (args[i].rfind("--out=", 0) == 0) continue;
            ctx.hash_token(args[i]);
        }
        Result result;
        if (name == "law") result = run_law(ctx, o);
        else if (name == "conv") result = run_conv(ctx, o);
        else if (name == "iterate") result = run_iterate(ctx, o);
        else if (name == "stable") result = run_stable(ctx, o);
        else if (name == "attract") result = run_attract(ctx, o);
        else if (name == "pot") result = run_pot(ctx, o);
        else if (name == "spectral") result = run_spectral(ctx, o);
        else result = run_poisson(ctx, o);

        std::string text;
        if (o.format == "csv") {
            text = result.csv;
        } else {
            const json doc{{"metadata",
                            {{"tool", std::string(kToolName)},
                             {"version", std::string(kVersion)},
                             {"subcommand", name},
                             {"seed", seed ? json(*seed) : json(nullptr)},
                             {"rng", std::string(RngSeed::algorithm)},
                             {"inputs_hash", ctx.inputs_hash()}}},
                           {"payload", result.payload}};
            text = doc.dump(2) + "\n";
        }
        if (o.out.empty())
            out << text;
        else
            io::write_text(o.out, text);
        return exit_ok;
    } catch (const Error& e) {
        const int status = exit_code(e.code());
        emit_error(err, to_string(e.code()), status, e.what());
        return status;
    } catch (const std::exception& e) {
        emit_error(err, "internal", exit_internal, e.what());
        return exit_internal;
    }
}

}  // namespace freemax::cli

#endif  // FREEMAX_TOOLS_FREEMAX_CLI_HPP
