#include "hfy/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hfy/errors.hpp"
#include "hfy/io.hpp"

namespace hfy {

namespace {

int support_size(const AttentionWeights& y, bool softmax_threshold) {
    if (std::holds_alternative<Distribution>(y)) {
        const auto& d = std::get<Distribution>(y);
        if (!softmax_threshold) return static_cast<int>(d.support.size());
        return static_cast<int>((d.probs.array() > 0.01).count());
    }
    const auto& m = std::get<Marginals>(y);
    return static_cast<int>((m.mu_v.array() > 0.0).count());
}

}  // namespace

bool MethodSpec::structured() const {
    return name == "ksubsets" || name == "seq-ksubsets";
}

std::string MethodSpec::label() const {
    if (name == "entmax" || name == "normmax") {
        std::string a = format_double(alpha);
        return name + ":" + a;
    }
    if (structured()) return name + ":" + std::to_string(k);
    return name;
}

RetrievalMethod MethodSpec::resolve(Eigen::Index n_patterns) const {
    if (name == "softmax") return EntropyKind::softmax();
    if (name == "sparsemax") return EntropyKind::sparsemax();
    if (name == "entmax") return EntropyKind::entmax(alpha);
    if (name == "normmax") return EntropyKind::normmax(alpha);
    if (name == "ksubsets") return FactorGraph::ksubsets(n_patterns, k);
    if (name == "seq-ksubsets") {
        Eigen::VectorXd e = edge_scores;
        if (e.size() == 0) e = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n_patterns - 1, 0));
        if (e.size() != n_patterns - 1)
            throw std::invalid_argument("edge scores must have one entry per adjacent pair");
        return FactorGraph::seq_ksubsets(n_patterns, k, std::move(e));
    }
    throw std::invalid_argument("unknown method: " + name);
}

MethodSpec parse_method(const std::string& token, double alpha, Eigen::Index k,
                        const Eigen::VectorXd& edge_scores) {
    MethodSpec m;
    m.alpha = alpha;
    m.k = k;
    m.edge_scores = edge_scores;
    const size_t colon = token.find(':');
    m.name = token.substr(0, colon);
    if (colon != std::string::npos) {
        const std::string param = token.substr(colon + 1);
        try {
            if (m.name == "entmax" || m.name == "normmax")
                m.alpha = std::stod(param);
            else if (m.structured())
                m.k = std::stol(param);
            else
                throw std::invalid_argument("method takes no parameter");
        } catch (const std::exception&) {
            throw std::invalid_argument("bad method parameter in '" + token + "'");
        }
    }
    static const char* known[] = {"softmax", "sparsemax", "entmax",
                                  "normmax", "ksubsets",  "seq-ksubsets"};
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* s) { return m.name == s; }) == std::end(known))
        throw std::invalid_argument("unknown method: " + m.name);
    return m;
}

std::vector<SweepRow> run_transform_sweep(const MethodSpec& method,
                                          const Eigen::VectorXd& theta,
                                          const std::vector<double>& betas,
                                          const ActiveSetConfig& solver) {
    if (theta.size() < 1) throw std::invalid_argument("theta must be nonempty");
    const RetrievalMethod rm = method.resolve(theta.size());
    if (std::holds_alternative<FactorGraph>(rm))
        return run_transform_sweep(std::get<FactorGraph>(rm), theta, betas, solver);
    std::vector<SweepRow> rows;
    rows.reserve(betas.size() * static_cast<size_t>(theta.size()));
    for (double beta : betas) {
        const Eigen::VectorXd y = transform(std::get<EntropyKind>(rm), theta, beta).probs;
        for (Eigen::Index i = 0; i < y.size(); ++i) rows.push_back({beta, i, y[i]});
    }
    return rows;
}

std::vector<SweepRow> run_transform_sweep(const FactorGraph& graph,
                                          const Eigen::VectorXd& theta,
                                          const std::vector<double>& betas,
                                          const ActiveSetConfig& solver) {
    if (theta.size() != graph.n_vars)
        throw std::invalid_argument("theta does not match the factor graph size");
    std::vector<SweepRow> rows;
    rows.reserve(betas.size() * static_cast<size_t>(theta.size()));
    for (double beta : betas) {
        const Eigen::VectorXd y = sparsemap(graph, theta, beta, solver).mu_v;
        for (Eigen::Index i = 0; i < y.size(); ++i) rows.push_back({beta, i, y[i]});
    }
    return rows;
}

std::vector<BasinRow> run_basins(const Eigen::MatrixXd& patterns, const GridSpec& grid,
                                 const MethodSpec& method, double beta,
                                 double softmax_eps) {
    if (patterns.cols() != 2)
        throw std::invalid_argument("basin grids need 2-D patterns");
    if (method.structured())
        throw std::invalid_argument("basin labels are per-pattern; use a simplex method");
    if (grid.resolution < 1) throw std::invalid_argument("grid resolution must be positive");

    PatternSet ps(patterns);
    RetrievalConfig cfg;
    cfg.method = method.resolve(ps.count());
    cfg.beta = beta;
    const bool dense = method.name == "softmax";

    auto coord = [&](double a, double b, int i) {
        if (grid.resolution == 1) return a;
        return a + (b - a) * static_cast<double>(i) / (grid.resolution - 1);
    };

    std::vector<BasinRow> rows;
    rows.reserve(static_cast<size_t>(grid.resolution) * grid.resolution);
    for (int iy = 0; iy < grid.resolution; ++iy) {
        const double y = coord(grid.y0, grid.y1, iy);
        for (int ix = 0; ix < grid.resolution; ++ix) {
            const double x = coord(grid.x0, grid.x1, ix);
            Eigen::Vector2d q0(x, y);
            const RetrievalResult r = retrieve(ps, q0, cfg);
            int label = -1;
            if (dense) {
                if (r.converged) {
                    Eigen::Index best;
                    const double dist =
                        (patterns.rowwise() - r.q_final.transpose()).rowwise().norm().minCoeff(&best);
                    if (dist <= softmax_eps) label = static_cast<int>(best);
                }
            } else if (r.exact_pattern &&
                       std::holds_alternative<Eigen::Index>(*r.exact_pattern)) {
                label = static_cast<int>(std::get<Eigen::Index>(*r.exact_pattern));
            }
            rows.push_back({x, y, label});
        }
    }
    return rows;
}

std::vector<MetastableRow> run_metastable(const Eigen::MatrixXd& patterns,
                                          const Eigen::MatrixXd& queries,
                                          const std::vector<MethodSpec>& methods,
                                          const std::vector<double>& betas) {
    if (queries.rows() < 1) throw std::invalid_argument("query file is empty");
    if (queries.cols() != patterns.cols())
        throw std::invalid_argument("queries and patterns must share the dimension");

    PatternSet ps(patterns);
    std::vector<MetastableRow> rows;
    for (const MethodSpec& m : methods) {
        const bool dense = m.name == "softmax";
        for (double beta : betas) {
            RetrievalConfig cfg;
            cfg.method = m.resolve(ps.count());
            cfg.beta = beta;
            std::map<int, int> histogram;
            for (Eigen::Index qi = 0; qi < queries.rows(); ++qi) {
                const RetrievalResult r = retrieve(ps, queries.row(qi).transpose(), cfg);
                ++histogram[support_size(r.y_final, dense)];
            }
            for (const auto& [support, count] : histogram)
                rows.push_back({m.label(), beta, support,
                                100.0 * count / static_cast<double>(queries.rows())});
        }
    }
    return rows;
}

std::vector<CapacityRow> run_capacity(const std::vector<int>& dims,
                                      const std::vector<int>& counts,
                                      const std::vector<double>& betas,
                                      const std::vector<double>& epss,
                                      const MethodSpec& method, std::uint64_t seed,
                                      int rounds, double radius) {
    if (method.structured())
        throw std::invalid_argument("capacity sweeps use simplex methods");
    const EntropyKind kind = std::get<EntropyKind>(method.resolve(1));
    const MarginSpec ms = margin_of(kind);
    if (!ms.has_margin)
        throw std::invalid_argument("capacity sweeps need a method with a margin");

    std::vector<CapacityRow> rows;
    std::uint64_t row_seed = seed;
    for (int dim : dims)
        for (int count : counts)
            for (double beta : betas)
                for (double eps : epss) {
                    CapacityRow row{dim, count, beta, eps, 0.0, "ok"};
                    if (radius * radius <= 2.0 * ms.m / beta) {
                        row.status = "infeasible";
                    } else {
                        try {
                            row.success_rate = capacity_trial(dim, count, beta, eps, kind,
                                                              row_seed, radius, rounds);
                        } catch (const GenerationError&) {
                            row.status = "generation_error";
                        }
                    }
                    rows.push_back(std::move(row));
                    ++row_seed;
                }
    return rows;
}

Eigen::MatrixXd generate_patterns(const std::string& kind, int dim, int count,
                                  double radius, std::uint64_t seed) {
    if (kind == "sphere_uniform") return sample_sphere_uniform(dim, count, radius, seed);
    if (kind == "min_angle") return sample_sphere_min_angle(dim, count, radius, seed);
    if (kind == "grid2d") {
        if (dim != 2) throw std::invalid_argument("grid2d patterns are 2-D");
        if (count < 1 || !(radius > 0.0))
            throw std::invalid_argument("count and radius must be positive");
        Eigen::MatrixXd X(count, 2);
        for (int i = 0; i < count; ++i) {
            const double angle = 2.0 * M_PI * i / count;
            X(i, 0) = radius * std::cos(angle);
            X(i, 1) = radius * std::sin(angle);
        }
        return X;
    }
    throw std::invalid_argument("unknown generator kind: " + kind);
}

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "beta,coordinate,value\n";
    for (const auto& r : rows)
        out << format_double(r.beta) << "," << r.coordinate << ","
            << format_double(r.value) << "\n";
}

void write_csv(std::ostream& out, const std::vector<BasinRow>& rows) {
    out << "x,y,label\n";
    for (const auto& r : rows)
        out << format_double(r.x) << "," << format_double(r.y) << "," << r.label << "\n";
}

void write_csv(std::ostream& out, const std::vector<MetastableRow>& rows) {
    out << "method,beta,support_size,percent\n";
    for (const auto& r : rows)
        out << r.method << "," << format_double(r.beta) << "," << r.support << ","
            << format_double(r.percent) << "\n";
}

void write_csv(std::ostream& out, const std::vector<CapacityRow>& rows) {
    out << "dim,count,beta,eps,success_rate,status\n";
    for (const auto& r : rows) {
        out << r.dim << "," << r.count << "," << format_double(r.beta) << ","
            << format_double(r.eps) << ",";
        if (r.status == "ok") out << format_double(r.success_rate);
        out << "," << r.status << "\n";
    }
}

}  // namespace hfy
