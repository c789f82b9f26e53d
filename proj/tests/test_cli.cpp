#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "freemax_cli.hpp"
#include "oracles.hpp"

using namespace freemax;
using nlohmann::json;

namespace {

struct Run {
    int status;
    std::string out;
    std::string err;
};

Run invoke(const std::vector<std::string>& args, cli::Environment env = {}) {
    std::ostringstream out, err;
    const int status = cli::run(args, out, err, env);
    return {status, out.str(), err.str()};
}

cli::Environment threads(const std::string& t) {
    cli::Environment env;
    env.threads = t;
    return env;
}

std::filesystem::path scratch(const std::string& name) {
    static std::atomic<int> counter{0};
    const auto dir = std::filesystem::temp_directory_path() / "freemax_cli_tests";
    std::filesystem::create_directories(dir);
    return dir / (std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + name);
}

std::filesystem::path write_file(const std::string& name, const std::string& text) {
    const auto path = scratch(name);
    std::ofstream(path) << text;
    return path;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json payload(const Run& r) { return json::parse(r.out).at("payload"); }

}  // namespace

TEST(EmitCdfTable, Examples) {
    const std::vector<double> g1{-1.0, 0.0, 1.0};
    EXPECT_EQ(io::cdf_table_csv(point_mass(0.0), g1), "x,F\n-1,0\n0,1\n1,1\n");
    const std::vector<double> g2{0.0, 0.5, 1.0};
    EXPECT_EQ(io::cdf_table_csv(uniform_cdf(), g2), "x,F\n0,0\n0.5,0.5\n1,1\n");
    const auto path = scratch("uniform.csv");
    io::emit_cdf_table(uniform_cdf(), g2, path);
    EXPECT_EQ(read_file(path), "x,F\n0,0\n0.5,0.5\n1,1\n");
    EXPECT_THROW(io::emit_cdf_table(uniform_cdf(), g2, "/nonexistent-dir/x.csv"), Error);
}

TEST(EmitCdfTable, RoundTripWithinInterpolationBound) {
    // Pareto(2) tail on [1, 20]
    const Cdf f = pareto_cdf(2.0);
    std::vector<double> grid;
    for (int i = 0; i <= 380; ++i) grid.push_back(1.0 + 0.05 * i);
    const Cdf back = io::parse_cdf_table(io::cdf_table_csv(f, grid));
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double lo = 1.0 - 1.0 / (grid[i] * grid[i]);
        const double hi = 1.0 - 1.0 / (grid[i + 1] * grid[i + 1]);
        // linear interpolation error within a cell is at most the cell's rise
        for (double t : {0.0, 0.25, 0.5, 0.9}) {
            const double x = grid[i] + t * (grid[i + 1] - grid[i]);
            EXPECT_LE(std::abs(back(x) - (1.0 - 1.0 / (x * x))), hi - lo + 1e-15);
        }
        EXPECT_EQ(back(grid[i]), f(grid[i]));
    }
}

TEST(EmitCdfTable, ImportRejectsMalformedTables) {
    EXPECT_THROW(io::parse_cdf_table("x,G\n0,0\n"), Error);
    EXPECT_THROW(io::parse_cdf_table("x,F\n1,0\n0,1\n"), Error);
    EXPECT_THROW(io::parse_cdf_table("x,F\n0,0.5\n1,0.4\n"), Error);
    EXPECT_THROW(io::parse_cdf_table("x,F\n0,abc\n"), Error);
    EXPECT_THROW(io::parse_cdf_table("x,F\n0,1.5\n"), Error);
    try {
        io::parse_cdf_table("x,F\n1,0\n0,1\n");
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::parse);
    }
    const Cdf t = io::parse_cdf_table("x,F\r\n0,0\r\n2,1\r\n");
    EXPECT_DOUBLE_EQ(t(1.0), 0.5);
}

TEST(Io, SamplesLawSpecsPartitionsMatrices) {
    EXPECT_EQ(io::parse_samples("1.5\n2\n\n-3e2\n"), (std::vector<double>{1.5, 2.0, -300.0}));
    EXPECT_EQ(io::parse_samples("id,value\n1,0.25\n2,4\n"), (std::vector<double>{0.25, 4.0}));
    EXPECT_THROW(io::parse_samples("a,b\n1,2\n"), Error);
    EXPECT_THROW(io::parse_samples("1\nnan\n"), Error);

    const LawSpec s = io::parse_law_spec(R"({"kind":"FreeTypeII","shape":2,"location":1,"scale":3})");
    EXPECT_EQ(s.kind, LawKind::FreeTypeII);
    EXPECT_EQ(*s.shape, 2.0);
    EXPECT_EQ(s.location, 1.0);
    EXPECT_EQ(s.scale, 3.0);
    const LawSpec back = io::law_spec_from_json(io::to_json(s));
    EXPECT_EQ(back.kind, s.kind);
    EXPECT_EQ(back.shape, s.shape);
    EXPECT_FALSE(io::parse_law_spec(R"({"kind":"Uniform"})").shape.has_value());
    EXPECT_THROW(io::parse_law_spec(R"({"kind":"Uniform","scal":2})"), Error);
    EXPECT_THROW(io::parse_law_spec(R"({"kind":"Nope"})"), Error);
    EXPECT_THROW(io::parse_law_spec("{"), Error);

    const Partition p = io::partition_from_json(json::parse(R"({"atoms":[{"id":1,"mass":0.3},{"id":"b","mass":0}]})"));
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p.atoms()[0].id, "1");
    EXPECT_EQ(p.atoms()[1].id, "b");
    EXPECT_THROW(io::partition_from_json(json::parse(R"({"atoms":[{"id":1.5,"mass":1}]})")), Error);
    EXPECT_THROW(io::partition_from_json(json::parse(R"({"atoms":[{"id":1,"mass":-1}]})")), Error);

    Eigen::MatrixXd m(2, 3);
    m << 1, -2.5, 1e-300, 0.1, 3, 4;
    EXPECT_EQ(io::parse_matrix_csv(io::matrix_csv(m)), m);
    EXPECT_THROW(io::parse_matrix_csv("1,2\n3\n"), Error);
    EXPECT_EQ(io::eigenvalues_csv(Eigen::Vector2d(-1, 0.5)), "index,lambda\n0,-1\n1,0.5\n");
    EXPECT_EQ(io::fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(io::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Cli, IterateExactnessExample) {
    const auto r = invoke({"iterate", "--law", R"({"kind":"Uniform"})", "--type", "III", "--alpha", "1", "--n",
                        "2,10,1000000"});
    ASSERT_EQ(r.status, 0) << r.err;
    const json rows = payload(r);
    ASSERT_EQ(rows.size(), 3u);
    const long long ns[] = {2, 10, 1000000};
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(rows[i]["n"].get<long long>(), ns[i]);
        EXPECT_NEAR(rows[i]["a_n"].get<double>(), 1.0 / ns[i], 1e-15);
        EXPECT_EQ(rows[i]["b_n"].get<double>(), 1.0);
        EXPECT_LE(rows[i]["sup_distance"].get<double>(), 1e-12);
    }
    const json meta = json::parse(r.out).at("metadata");
    EXPECT_EQ(meta["tool"], "freemax");
    EXPECT_TRUE(meta["seed"].is_null());
    EXPECT_EQ(meta["inputs_hash"].get<std::string>().size(), 16u);
}

TEST(Cli, PoissonExampleAndDeterminism) {
    const auto part = write_file("part.json", R"({"atoms":[{"id":1,"mass":0.3},{"id":2,"mass":0.4}]})");
    const std::vector<std::string> args{"poisson", "--partition", part.string(), "--subsets", "1;2;1,2",
                                        "--N", "200", "--trials", "4", "--seed", "7"};
    const auto one = invoke(args, threads("1"));
    const auto three = invoke(args, threads("3"));
    ASSERT_EQ(one.status, 0) << one.err;
    EXPECT_EQ(one.out, three.out);
    EXPECT_EQ(one.out, invoke(args, threads("1")).out);
    const json rep = payload(one);
    ASSERT_EQ(rep["records"].size(), 3u);
    const double expected[] = {0.3, 0.4, 0.7};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& rec = rep["records"][i];
        EXPECT_EQ(rec["N"].get<long long>(), 200);
        EXPECT_DOUBLE_EQ(rec["expected"].get<double>(), expected[i]);
        // column counts are exact at this N, so every trial has rank mu N
        EXPECT_NEAR(rec["tau_Y"].get<double>(), expected[i], 1e-12);
        EXPECT_TRUE(rec["join_additivity_ok"].get<bool>());
        EXPECT_GE(rec["ks_distance"].get<double>(), 0.0);
        EXPECT_LE(rec["ks_distance"].get<double>(), 1.0);
    }
    EXPECT_EQ(rep["records"][2]["subset"], "1,2");
    EXPECT_EQ(json::parse(one.out)["metadata"]["seed"].get<std::uint64_t>(), 7u);

    const auto csv = invoke({"poisson", "--partition", part.string(), "--subsets", "1;1,2", "--N", "100", "--seed",
                          "7", "--format", "csv"});
    ASSERT_EQ(csv.status, 0) << csv.err;
    EXPECT_EQ(csv.out.substr(0, csv.out.find('\n')),
              "subset,N,tau_Y,expected,join_additivity_ok,ks_distance,mu,mu_N,norm_gap");
    EXPECT_NE(csv.out.find("\n\"1,2\",100,"), std::string::npos);

    // eigenvalue dump of trial 0 has N rows and matches the report's rank
    const auto dump = scratch("eig.csv");
    const auto withdump = invoke({"poisson", "--partition", part.string(), "--subsets", "2", "--N", "100", "--seed",
                               "7", "--eigenvalues", dump.string()});
    ASSERT_EQ(withdump.status, 0) << withdump.err;
    const auto rows = io::csv_rows(read_file(dump));
    ASSERT_EQ(rows.size(), 101u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"index", "lambda"}));
    int positive = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) positive += std::stod(rows[i][1]) > 1e-8 * 10;
    EXPECT_EQ(positive, 40);
}

TEST(Cli, PotFitExample) {
    // GPD(0.5) exceedances above u = 2, drawn by inversion with an independent generator
    oracle::Gen gen(17);
    std::string text;
    int above = 0;
    for (int i = 0; i < 4000; ++i) {
        const double v = gen.uniform(0.0, 1.0);
        const double x = 2.0 + (std::pow(1.0 - v, -0.5) - 1.0) / 0.5;
        above += x > 2.0;
        text += io::format_number(x) + "\n";
    }
    for (int i = 0; i < 500; ++i) text += io::format_number(gen.uniform(0.0, 2.0)) + "\n";
    const auto path = write_file("data.csv", text);
    const auto r = invoke({"pot", "--samples", path.string(), "--u", "2.0"});
    ASSERT_EQ(r.status, 0) << r.err;
    const json fit = payload(r);
    EXPECT_EQ(fit["n_exceedances"].get<long long>(), above);
    EXPECT_NEAR(fit["gamma_hat"].get<double>(), 0.5, 0.1);
    EXPECT_NEAR(fit["sigma_hat"].get<double>(), 1.0, 0.1);
    EXPECT_TRUE(fit.contains("log_likelihood"));
}

TEST(Cli, DistinctErrorCodes) {
    const auto unknown = invoke({"frobnicate"});
    EXPECT_EQ(unknown.status, cli::exit_unknown_subcommand);
    EXPECT_EQ(json::parse(unknown.err)["error"]["code"], "unknown_subcommand");

    const auto missing = invoke({"pot", "--samples", "/nonexistent/data.csv", "--u", "1"});
    EXPECT_EQ(missing.status, cli::exit_io);
    EXPECT_EQ(json::parse(missing.err)["error"]["code"], "io");

    const auto bad_law = invoke({"law", "--law", R"({"kind":"FreeTypeII","shape":0})"});
    EXPECT_EQ(bad_law.status, cli::exit_invalid_law);
    EXPECT_EQ(json::parse(bad_law.err)["error"]["exit_code"], cli::exit_invalid_law);

    const auto bad_json = invoke({"law", "--law", "{oops"});
    EXPECT_EQ(bad_json.status, cli::exit_parse);

    const auto usage = invoke({"iterate", "--law", R"({"kind":"Uniform"})", "--n", "2"});
    EXPECT_EQ(usage.status, cli::exit_usage);

    const auto part = write_file("p.json", R"({"atoms":[{"id":1,"mass":0.3}]})");
    const auto no_seed = invoke({"poisson", "--partition", part.string(), "--subsets", "1", "--N", "50"});
    EXPECT_EQ(no_seed.status, cli::exit_invalid_argument);

    const auto bad_threads = invoke({"law", "--law", R"({"kind":"Uniform"})"}, threads("zero"));
    EXPECT_EQ(bad_threads.status, cli::exit_invalid_argument);

    const auto domain = invoke({"iterate", "--law", R"({"kind":"Uniform"})", "--type", "II", "--n", "10"});
    EXPECT_EQ(domain.status, cli::exit_domain);

    std::set<int> codes{unknown.status, missing.status, bad_law.status, bad_json.status, usage.status,
                        no_seed.status, domain.status};
    EXPECT_EQ(codes.size(), 7u);
    EXPECT_EQ(invoke({"--help"}).status, 0);
}

TEST(Cli, InputsHashTracksInputsNotOutputPath) {
    const auto a = write_file("a.csv", "x,F\n0,0\n1,1\n");
    const auto b = write_file("b.csv", "x,F\n0,0\n1,1\n");
    const auto out1 = scratch("o1.json"), out2 = scratch("o2.json");
    ASSERT_EQ(invoke({"law", "--cdf", a.string(), "--out", out1.string()}).status, 0);
    ASSERT_EQ(invoke({"law", "--cdf", a.string(), "--out", out2.string()}).status, 0);
    EXPECT_EQ(read_file(out1), read_file(out2));
    std::ofstream(b) << "x,F\n0,0\n2,1\n";
    const auto changed = invoke({"law", "--cdf", a.string(), "--cdf", b.string(), "--compare",
                              R"({"kind":"Uniform"})"});
    ASSERT_EQ(changed.status, 0) << changed.err;
    const auto hash = [](const std::string& doc) { return json::parse(doc)["metadata"]["inputs_hash"]; };
    EXPECT_NE(hash(read_file(out1)), hash(changed.out));
    const json rows = payload(changed);
    EXPECT_LE(rows[0]["sup_distance"].get<double>(), 1e-15);
    EXPECT_NEAR(rows[1]["sup_distance"].get<double>(), 0.5, 1e-12);
}

TEST(Cli, LawAndConvolutionCommands) {
    const auto fc = invoke({"law", "--law", R"({"kind":"ClassicalGumbel"})", "--law",
                         R"({"kind":"ClassicalFrechet","shape":2})", "--fc", "1", "--compare",
                         R"({"kind":"FreeTypeI"})", "--compare", R"({"kind":"FreeTypeII","shape":2})"});
    ASSERT_EQ(fc.status, 0) << fc.err;
    for (const auto& row : payload(fc)) EXPECT_LE(row["sup_distance"].get<double>(), 1e-12);

    const auto table = invoke({"conv", "--law", R"({"kind":"Uniform"})", "--law", R"({"kind":"Uniform"})", "--op",
                            "free_max", "--grid", "0,1,5", "--format", "csv"});
    ASSERT_EQ(table.status, 0) << table.err;
    EXPECT_EQ(table.out, "x,F\n0,0\n0.25,0\n0.5,0\n0.75,0.5\n1,1\n");

    const auto hom = invoke({"conv", "--law", R"({"kind":"StdNormal"})", "--law", R"({"kind":"ClassicalGumbel"})",
                          "--law", R"({"kind":"Uniform"})", "--op", "fc_homomorphism", "--c", "0.5,2"});
    ASSERT_EQ(hom.status, 0) << hom.err;
    EXPECT_EQ(payload(hom)["rows"].size(), 6u);
    EXPECT_LE(payload(hom)["max_sup_distance"].get<double>(), 1e-12);
}

TEST(Cli, StableAndAttract) {
    const auto fixed = invoke({"stable", "--type", "I,II,III", "--alpha", "0.5,2", "--n", "2,1000000"});
    ASSERT_EQ(fixed.status, 0) << fixed.err;
    EXPECT_EQ(payload(fixed).size(), 12u);
    for (const auto& row : payload(fixed)) EXPECT_LE(row["sup_distance"].get<double>(), 1e-10);

    const auto gumbel = invoke({"stable", "--law", R"({"kind":"ClassicalGumbel"})", "--k", "2", "--minimize"});
    ASSERT_EQ(gumbel.status, 0) << gumbel.err;
    EXPECT_FALSE(payload(gumbel)[0]["stable"].get<bool>());
    EXPECT_GT(payload(gumbel)[0]["minimized_sup_distance"].get<double>(), 1e-3);

    const auto normal = invoke({"attract", "--law", R"({"kind":"StdNormal"})", "--type", "I", "--n", "100,1000",
                             "--rv-alpha", "2", "--rv-x", "2", "--rv-t", "10"});
    ASSERT_EQ(normal.status, 0) << normal.err;
    const json entry = payload(normal)[0];
    EXPECT_TRUE(entry["strictly_decreasing"].get<bool>());
    EXPECT_EQ(entry["rows"].size(), 2u);
    // the normal tail is not regularly varying: ratio ~ 0 against 1/4
    EXPECT_NEAR(entry["rv_deviation"].get<double>(), 0.25, 1e-6);
}

TEST(Cli, SpectralCommands) {
    const auto a = write_file("a.csv", "1,0\n0,-1\n");
    const auto b = write_file("b.csv", "0,1\n1,0\n");
    const auto mx = invoke({"spectral", "--a", a.string(), "--b", b.string(), "--op", "max", "--format", "csv"});
    ASSERT_EQ(mx.status, 0) << mx.err;
    const Eigen::MatrixXd m = io::parse_matrix_csv(mx.out);
    EXPECT_LE((m - Eigen::Matrix2d::Identity()).norm(), 1e-14);
    const auto ev = invoke({"spectral", "--a", a.string(), "--b", b.string(), "--op", "min", "--eigenvalues",
                         "--format", "csv"});
    EXPECT_EQ(io::csv_rows(ev.out)[0], (std::vector<std::string>{"index", "lambda"}));
    const auto leq = invoke({"spectral", "--a", a.string(), "--b", b.string(), "--op", "leq"});
    EXPECT_FALSE(payload(leq)["leq"].get<bool>());

    const auto gp = invoke({"spectral", "--experiment", "general_position", "--N", "20", "--ranks", "5,12",
                         "--trials", "3", "--seed", "4"});
    ASSERT_EQ(gp.status, 0) << gp.err;
    const json rows = payload(gp);
    EXPECT_EQ(rows.size(), 3u * 4u + 2u);
    EXPECT_EQ(rows[rows.size() - 2]["quantity"], "pass_count");
    EXPECT_EQ(rows[rows.size() - 2]["value"].get<double>(), 12.0);

    const auto fm = invoke({"spectral", "--experiment", "free_max", "--N", "16", "--trials", "2", "--seed", "5"});
    ASSERT_EQ(fm.status, 0) << fm.err;
    for (const auto& row : payload(fm)) EXPECT_LE(row["value"].get<double>(), 1e-9);
    EXPECT_EQ(invoke({"spectral", "--experiment", "free_max", "--N", "16"}).status, cli::exit_invalid_argument);
}

TEST(Cli, TriangularProcess) {
    const auto part = write_file("tri.json", R"({"atoms":[{"id":"a","mass":0.3},{"id":"b","mass":0.4}]})");
    const auto r = invoke({"poisson", "--partition", part.string(), "--subsets", "a;a,b", "--N", "200", "--seed", "3",
                        "--triangular"});
    ASSERT_EQ(r.status, 0) << r.err;
    const json rows = payload(r);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_LE(rows[1]["analytic_error"].get<double>(), 1e-12);
    EXPECT_LT(rows[1]["sup_distance"].get<double>(), 0.05);
    EXPECT_DOUBLE_EQ(rows[1]["mu"].get<double>(), 0.7);
}
