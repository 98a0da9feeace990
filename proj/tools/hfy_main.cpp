#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "hfy/errors.hpp"
#include "hfy/experiments.hpp"
#include "hfy/io.hpp"

// Command-line front end. Subcommands are thin wrappers over the
// experiment drivers in hfy/experiments.hpp; all numbers in the output
// come from the same library calls tests use directly.
//
// Exit codes: 0 success, 2 input error, 3 numerical non-convergence.

namespace {

struct Options {
    std::vector<std::string> methods;
    double alpha = 1.5;
    long long k = 1;
    std::vector<double> betas;
    std::string patterns, queries, out, json_path, graph_path;
    std::string theta_str, edges_str;
    std::string grid_str = "-2,2,-2,2,25";
    double eps = 0.01;
    int max_iters = hfy::ActiveSetConfig{}.max_iters;
    std::uint64_t seed = 0;
    std::string kind = "sphere_uniform";
    std::vector<int> dims{2};
    std::vector<int> counts{4};
    double radius = 1.0;
    int rounds = 1;
    bool header = false;
};

Eigen::VectorXd parse_vector(const std::string& s, const char* what) {
    try {
        return hfy::parse_csv_row(s);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string(what) + ": " + e.what());
    }
}

hfy::GridSpec parse_grid(const std::string& s) {
    const Eigen::VectorXd v = parse_vector(s, "--grid");
    if (v.size() != 5)
        throw std::invalid_argument("--grid expects \"x0,x1,y0,y1,res\"");
    hfy::GridSpec g;
    g.x0 = v[0];
    g.x1 = v[1];
    g.y0 = v[2];
    g.y1 = v[3];
    g.resolution = static_cast<int>(v[4]);
    if (g.resolution < 1 || v[4] != std::floor(v[4]))
        throw std::invalid_argument("--grid resolution must be a positive integer");
    return g;
}

// Fill flags that were not given on the command line from a JSON config
// file. Scalars map to scalars; list-valued flags accept either.
void apply_json_config(const Options& defaults, Options& o, const CLI::App* cmd) {
    if (o.json_path.empty()) return;
    std::ifstream in(o.json_path);
    if (!in) throw std::invalid_argument("cannot open config file: " + o.json_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(o.json_path + ": " + e.what());
    }

    auto unset = [&](const char* flag) {
        const CLI::Option* opt = cmd->get_option_no_throw(flag);
        return opt == nullptr || opt->count() == 0;
    };
    auto str = [&](const nlohmann::json& v) { return v.get<std::string>(); };

    if (j.contains("method") && unset("--method")) {
        if (j["method"].is_array())
            for (const auto& m : j["method"]) o.methods.push_back(str(m));
        else
            o.methods.push_back(str(j["method"]));
    }
    if (j.contains("alpha") && unset("--alpha")) o.alpha = j["alpha"].get<double>();
    if (j.contains("k") && unset("--k")) o.k = j["k"].get<long long>();
    if (j.contains("beta") && unset("--beta")) {
        if (j["beta"].is_array())
            o.betas = j["beta"].get<std::vector<double>>();
        else
            o.betas = {j["beta"].get<double>()};
    }
    if (j.contains("theta") && unset("--theta")) {
        if (j["theta"].is_array()) {
            std::string s;
            for (const auto& v : j["theta"])
                s += (s.empty() ? "" : ",") + hfy::format_double(v.get<double>());
            o.theta_str = s;
        } else {
            o.theta_str = str(j["theta"]);
        }
    }
    if (j.contains("edges") && unset("--edges")) {
        if (j["edges"].is_array()) {
            std::string s;
            for (const auto& v : j["edges"])
                s += (s.empty() ? "" : ",") + hfy::format_double(v.get<double>());
            o.edges_str = s;
        } else {
            o.edges_str = str(j["edges"]);
        }
    }
    if (j.contains("graph") && unset("--graph")) o.graph_path = str(j["graph"]);
    if (j.contains("max_iters") && unset("--max-iters"))
        o.max_iters = j["max_iters"].get<int>();
    if (j.contains("patterns") && unset("--patterns")) o.patterns = str(j["patterns"]);
    if (j.contains("queries") && unset("--queries")) o.queries = str(j["queries"]);
    if (j.contains("grid") && unset("--grid")) o.grid_str = str(j["grid"]);
    if (j.contains("eps") && unset("--eps")) o.eps = j["eps"].get<double>();
    if (j.contains("seed") && unset("--seed")) o.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out") && unset("--out")) o.out = str(j["out"]);
    if (j.contains("kind") && unset("--kind")) o.kind = str(j["kind"]);
    if (j.contains("dim") && unset("--dim")) {
        if (j["dim"].is_array())
            o.dims = j["dim"].get<std::vector<int>>();
        else
            o.dims = {j["dim"].get<int>()};
    }
    if (j.contains("count") && unset("--count")) {
        if (j["count"].is_array())
            o.counts = j["count"].get<std::vector<int>>();
        else
            o.counts = {j["count"].get<int>()};
    }
    if (j.contains("radius") && unset("--radius")) o.radius = j["radius"].get<double>();
    if (j.contains("rounds") && unset("--rounds")) o.rounds = j["rounds"].get<int>();
    if (j.contains("header") && unset("--header")) o.header = j["header"].get<bool>();
    (void)defaults;
}

template <class Rows>
void emit(const Options& o, const Rows& rows) {
    if (o.out.empty()) {
        hfy::write_csv(std::cout, rows);
        return;
    }
    std::ofstream f(o.out);
    if (!f) throw std::invalid_argument("cannot open output file: " + o.out);
    hfy::write_csv(f, rows);
}

std::vector<double> betas_or_default(const Options& o) {
    return o.betas.empty() ? std::vector<double>{1.0} : o.betas;
}

hfy::MethodSpec single_method(const Options& o, const std::string& fallback) {
    Eigen::VectorXd edges;
    if (!o.edges_str.empty()) edges = parse_vector(o.edges_str, "--edges");
    const std::string token = o.methods.empty() ? fallback : o.methods.front();
    return hfy::parse_method(token, o.alpha, o.k, edges);
}

int run_transform(const Options& o) {
    hfy::ActiveSetConfig solver;
    solver.max_iters = o.max_iters;
    if (!o.graph_path.empty()) {
        const hfy::FactorGraph g = hfy::load_factor_graph(o.graph_path);
        const Eigen::VectorXd theta =
            o.theta_str.empty() ? g.unary : parse_vector(o.theta_str, "--theta");
        emit(o, hfy::run_transform_sweep(g, theta, betas_or_default(o), solver));
        return 0;
    }
    if (o.theta_str.empty())
        throw std::invalid_argument("transform needs --theta or --graph");
    const Eigen::VectorXd theta = parse_vector(o.theta_str, "--theta");
    emit(o, hfy::run_transform_sweep(single_method(o, "softmax"), theta,
                                     betas_or_default(o), solver));
    return 0;
}

int run_basins_cmd(const Options& o) {
    if (o.patterns.empty()) throw std::invalid_argument("basins needs --patterns");
    const Eigen::MatrixXd X = hfy::read_pattern_csv(o.patterns);
    emit(o, hfy::run_basins(X, parse_grid(o.grid_str), single_method(o, "sparsemax"),
                            betas_or_default(o).front(), o.eps));
    return 0;
}

int run_metastable_cmd(const Options& o) {
    if (o.patterns.empty() || o.queries.empty())
        throw std::invalid_argument("metastable needs --patterns and --queries");
    const Eigen::MatrixXd X = hfy::read_pattern_csv(o.patterns);
    const Eigen::MatrixXd Q = hfy::read_pattern_csv(o.queries);
    std::vector<hfy::MethodSpec> methods;
    Eigen::VectorXd edges;
    if (!o.edges_str.empty()) edges = parse_vector(o.edges_str, "--edges");
    for (const auto& tok : o.methods)
        methods.push_back(hfy::parse_method(tok, o.alpha, o.k, edges));
    if (methods.empty()) methods.push_back(hfy::parse_method("softmax", o.alpha, o.k, edges));
    emit(o, hfy::run_metastable(X, Q, methods, betas_or_default(o)));
    return 0;
}

int run_capacity_cmd(const Options& o) {
    std::vector<double> epss = {o.eps};
    emit(o, hfy::run_capacity(o.dims, o.counts, betas_or_default(o), epss,
                              single_method(o, "sparsemax"), o.seed, o.rounds,
                              o.radius));
    return 0;
}

int run_generate(const Options& o) {
    const Eigen::MatrixXd X = hfy::generate_patterns(o.kind, o.dims.front(),
                                                     o.counts.front(), o.radius, o.seed);
    if (o.out.empty())
        hfy::write_pattern_csv(std::cout, X, o.header);
    else
        hfy::write_pattern_csv(o.out, X, o.header);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Associative memories with sparse and structured transformations"};
    app.require_subcommand(1);

    Options o;
    const Options defaults = o;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--method", o.methods,
                        "softmax|entmax|normmax|sparsemax|ksubsets|seq-ksubsets, "
                        "optionally with a parameter (entmax:1.5, ksubsets:2)");
        cmd->add_option("--alpha", o.alpha, "entmax/normmax parameter");
        cmd->add_option("--k", o.k, "subset size for structured methods");
        cmd->add_option("--beta", o.betas, "inverse temperature (repeatable)");
        cmd->add_option("--seed", o.seed, "random seed");
        cmd->add_option("--out", o.out, "output path (default stdout)");
        cmd->add_option("--json", o.json_path, "JSON config supplying unset flags");
        return cmd;
    };

    CLI::App* transform = add_common(app.add_subcommand(
        "transform", "Regularization path of a transformation over a beta sweep"));
    transform->add_option("--theta", o.theta_str, "comma-separated scores");
    transform->add_option("--edges", o.edges_str, "edge scores for seq-ksubsets");
    transform->add_option("--graph", o.graph_path,
                          "factor graph JSON; its unary scores are the default theta");
    transform->add_option("--max-iters", o.max_iters, "active set iteration budget");

    CLI::App* basins = add_common(app.add_subcommand(
        "basins", "Attraction basin labels over a 2-D query grid"));
    basins->add_option("--patterns", o.patterns, "pattern CSV file");
    basins->add_option("--grid", o.grid_str, "x0,x1,y0,y1,res");
    basins->add_option("--eps", o.eps, "softmax retrieval tolerance");

    CLI::App* metastable = add_common(app.add_subcommand(
        "metastable", "Histogram of fixed-point support sizes over queries"));
    metastable->add_option("--patterns", o.patterns, "pattern CSV file");
    metastable->add_option("--queries", o.queries, "query CSV file");
    metastable->add_option("--edges", o.edges_str, "edge scores for seq-ksubsets");

    CLI::App* capacity = add_common(app.add_subcommand(
        "capacity", "One-step exact retrieval rates under perturbation"));
    capacity->add_option("--dim", o.dims, "pattern dimension (repeatable)");
    capacity->add_option("--count", o.counts, "pattern count (repeatable)");
    capacity->add_option("--eps", o.eps, "perturbation norm");
    capacity->add_option("--rounds", o.rounds, "perturbations per pattern");
    capacity->add_option("--radius", o.radius, "pattern norm");

    CLI::App* generate = add_common(app.add_subcommand(
        "generate", "Write a synthetic pattern file"));
    generate->add_option("--kind", o.kind, "sphere_uniform|min_angle|grid2d");
    generate->add_option("--dim", o.dims, "pattern dimension");
    generate->add_option("--count", o.counts, "pattern count");
    generate->add_option("--radius", o.radius, "pattern norm");
    generate->add_flag("--header", o.header, "write a commented header line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        CLI::App* cmd = app.get_subcommands().front();
        apply_json_config(defaults, o, cmd);
        if (cmd == transform) return run_transform(o);
        if (cmd == basins) return run_basins_cmd(o);
        if (cmd == metastable) return run_metastable_cmd(o);
        if (cmd == capacity) return run_capacity_cmd(o);
        if (cmd == generate) return run_generate(o);
    } catch (const hfy::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const hfy::GenerationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
