#include "hfy/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace hfy {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Eigen::VectorXd parse_csv_row(const std::string& line) {
    std::vector<double> vals;
    size_t pos = 0;
    int field = 1;
    while (pos <= line.size()) {
        size_t comma = line.find(',', pos);
        if (comma == std::string::npos) comma = line.size();
        const std::string tok = line.substr(pos, comma - pos);
        const char* begin = tok.c_str();
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        while (end && *end == ' ') ++end;
        if (end == begin || (end && *end != '\0'))
            throw std::invalid_argument("field " + std::to_string(field) +
                                        ": cannot parse '" + tok + "' as a number");
        vals.push_back(v);
        pos = comma + 1;
        ++field;
        if (comma == line.size()) break;
    }
    return Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                             static_cast<Eigen::Index>(vals.size()));
}

Eigen::MatrixXd read_pattern_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open pattern file: " + path);

    std::vector<Eigen::VectorXd> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        Eigen::VectorXd row;
        try {
            row = parse_csv_row(line);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " +
                                        e.what());
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": inconsistent column count");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument(path + ": no data rows");

    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (size_t i = 0; i < rows.size(); ++i)
        X.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return X;
}

void write_pattern_csv(std::ostream& out, const Eigen::MatrixXd& X, bool header) {
    if (header) {
        out << "#";
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            out << (j ? "," : " ") << "d" << j;
        out << "\n";
    }
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            if (j) out << ",";
            out << format_double(X(i, j));
        }
        out << "\n";
    }
}

void write_pattern_csv(const std::string& path, const Eigen::MatrixXd& X, bool header) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    write_pattern_csv(out, X, header);
}

void to_json(nlohmann::json& j, const FactorGraph& g) {
    j = nlohmann::json{
        {"kind", g.kind == GraphKind::KSubsets ? "ksubsets" : "seq_ksubsets"},
        {"k", g.k},
        {"unary", std::vector<double>(g.unary.data(), g.unary.data() + g.unary.size())},
        {"edges", std::vector<double>(g.edges.data(), g.edges.data() + g.edges.size())}};
}

void from_json(const nlohmann::json& j, FactorGraph& g) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "ksubsets")
        g.kind = GraphKind::KSubsets;
    else if (kind == "seq_ksubsets")
        g.kind = GraphKind::SeqKSubsets;
    else
        throw std::invalid_argument("unknown factor graph kind: " + kind);
    g.k = j.at("k").get<Eigen::Index>();
    const auto unary = j.at("unary").get<std::vector<double>>();
    g.n_vars = static_cast<Eigen::Index>(unary.size());
    g.unary = Eigen::Map<const Eigen::VectorXd>(unary.data(), g.n_vars);
    std::vector<double> edges;
    if (j.contains("edges")) edges = j.at("edges").get<std::vector<double>>();
    if (g.kind == GraphKind::SeqKSubsets && edges.empty() && g.n_vars > 1)
        edges.assign(static_cast<size_t>(g.n_vars - 1), 0.0);
    g.edges = Eigen::Map<const Eigen::VectorXd>(edges.data(),
                                                static_cast<Eigen::Index>(edges.size()));
    g.validate();
}

FactorGraph load_factor_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open factor graph file: " + path);
    nlohmann::json j;
    in >> j;
    return j.get<FactorGraph>();
}

void save_factor_graph(const std::string& path, const FactorGraph& g) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    nlohmann::json j = g;
    out << j.dump(2) << "\n";
}

}  // namespace hfy
