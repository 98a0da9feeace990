#include <doctest.h>

#include <cmath>

#include "hfy/hopfield.hpp"
#include "hfy/random.hpp"
#include "oracles.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace hfy;

namespace {

RetrievalConfig simple_cfg(const EntropyKind& kind, double beta) {
    RetrievalConfig cfg;
    cfg.method = kind;
    cfg.beta = beta;
    return cfg;
}

RetrievalConfig graph_cfg(FactorGraph g, double beta) {
    RetrievalConfig cfg;
    cfg.method = std::move(g);
    cfg.beta = beta;
    return cfg;
}

const std::vector<EntropyKind> kAllKinds = {
    EntropyKind::softmax(), EntropyKind::entmax(1.5), EntropyKind::sparsemax(),
    EntropyKind::normmax(2.0), EntropyKind::normmax(5.0)};

// random point in the convex hull of the rows of X
VectorXd hull_point(const MatrixXd& X, Rng& rng) {
    const VectorXd y = oracle::project_simplex(rng.normal_vector(X.rows()));
    return X.transpose() * y;
}

}  // namespace

TEST_CASE("pattern set caches its statistics") {
    MatrixXd X(3, 2);
    X << 1, 0, 0, 2, -1, 0;
    const PatternSet ps(X);
    CHECK((ps.mean - X.colwise().mean().transpose()).norm() <= 1e-12);
    CHECK(ps.max_norm == doctest::Approx(2.0));
    CHECK_THROWS_AS(PatternSet(MatrixXd{}), std::invalid_argument);
}

TEST_CASE("energy values") {
    SUBCASE("all patterns equal to the query gives zero energy") {
        const VectorXd q = (VectorXd(3) << 0.4, -0.2, 1.1).finished();
        MatrixXd X(4, 3);
        for (int i = 0; i < 4; ++i) X.row(i) = q.transpose();
        const PatternSet ps(X);
        for (const auto& kind : kAllKinds)
            CHECK(std::abs(energy(ps, q, simple_cfg(kind, 1.0))) < 1e-12);
        CHECK(std::abs(energy(ps, 2.0 * q,
                              graph_cfg(FactorGraph::ksubsets(4, 2), 1.0))) < 1e-12);
    }
    SUBCASE("single stored pattern at the pattern") {
        MatrixXd X(1, 2);
        X << 0.3, -0.7;
        const PatternSet ps(X);
        CHECK(std::abs(energy(ps, X.row(0).transpose(),
                              simple_cfg(EntropyKind::sparsemax(), 2.0))) < 1e-12);
    }
    SUBCASE("bounds hold inside the pattern hull") {
        Rng rng(61);
        for (const auto& kind : kAllKinds)
            for (double beta : {0.1, 1.0, 10.0})
                for (int t = 0; t < 25; ++t) {
                    const MatrixXd X = MatrixXd::NullaryExpr(
                        4, 3, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
                    const PatternSet ps(X);
                    const VectorXd q = hull_point(X, rng);
                    const double e = energy(ps, q, simple_cfg(kind, beta));
                    const double m2 = ps.max_norm * ps.max_norm;
                    const double omega_u = negentropy(
                        kind, VectorXd::Constant(4, 0.25));
                    CHECK(e >= -1e-9);
                    CHECK(e <= std::min(2.0 * m2, -omega_u / beta + 0.5 * m2) + 1e-9);
                }
    }
    CHECK_THROWS_AS(energy(PatternSet(MatrixXd::Identity(2, 2)), VectorXd::Zero(3),
                           simple_cfg(EntropyKind::softmax(), 1.0)),
                    std::invalid_argument);
}

TEST_CASE("update step") {
    const double M = 2.0;
    const MatrixXd X = M * MatrixXd::Identity(4, 4);
    const PatternSet ps(X);

    SUBCASE("sparse update fixes a well separated pattern exactly") {
        const VectorXd q = X.row(0).transpose();
        auto [q1, y] = update_step(ps, q, simple_cfg(EntropyKind::sparsemax(), 1.0));
        CHECK((q1.array() == q.array()).all());
        CHECK(std::get<Distribution>(y).is_one_hot());
    }
    SUBCASE("softmax never reaches the vertex") {
        const VectorXd q = X.row(0).transpose();
        auto [q1, y] = update_step(ps, q, simple_cfg(EntropyKind::softmax(), 1.0));
        CHECK((q1 - q).norm() > 1e-6);
        CHECK(std::get<Distribution>(y).probs.minCoeff() > 0.0);
    }
    SUBCASE("k-subsets retrieves the pattern pair") {
        const VectorXd q = 0.5 * (X.row(0) + X.row(1)).transpose();
        auto [q1, y] = update_step(ps, q, graph_cfg(FactorGraph::ksubsets(4, 2), 10.0));
        const VectorXd expect = (X.row(0) + X.row(1)).transpose();
        CHECK((q1.array() == expect.array()).all());
        CHECK(std::get<Marginals>(y).is_vertex());
    }
    SUBCASE("energy never increases") {
        Rng rng(67);
        std::vector<RetrievalConfig> cfgs;
        for (const auto& kind : kAllKinds) cfgs.push_back(simple_cfg(kind, 1.3));
        cfgs.push_back(graph_cfg(FactorGraph::ksubsets(5, 2), 1.3));
        cfgs.push_back(graph_cfg(
            FactorGraph::seq_ksubsets(5, 2, 0.4 * rng.normal_vector(4)), 1.3));
        for (const auto& cfg : cfgs)
            for (int t = 0; t < 15; ++t) {
                const MatrixXd Y = MatrixXd::NullaryExpr(
                    5, 3, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
                const PatternSet mem(Y);
                const VectorXd q = hull_point(Y, rng);
                auto [q1, y] = update_step(mem, q, cfg);
                CHECK(energy(mem, q1, cfg) <= energy(mem, q, cfg) + 1e-12);
            }
    }
}

TEST_CASE("retrieve") {
    SUBCASE("one step exact retrieval under the separation condition") {
        const MatrixXd X = 2.0 * MatrixXd::Identity(4, 4);
        const PatternSet ps(X);
        Rng rng(71);
        // Delta_i = 4 >= m/beta + 2 M eps = 1 + 4 * 0.5
        for (int i = 0; i < 4; ++i) {
            const VectorXd q0 =
                X.row(i).transpose() + 0.5 * rng.unit_vector(4);
            const RetrievalResult r =
                retrieve(ps, q0, simple_cfg(EntropyKind::sparsemax(), 1.0));
            CHECK(r.converged);
            CHECK(r.steps == 1);
            REQUIRE(r.exact_pattern.has_value());
            CHECK(std::get<Eigen::Index>(*r.exact_pattern) == i);
            CHECK((r.q_final.array() == X.row(i).transpose().array()).all());
            CHECK((r.trajectory[1].array() == X.row(i).transpose().array()).all());
        }
    }
    SUBCASE("a stored pattern is a zero-step fixed point") {
        const MatrixXd X = 2.0 * MatrixXd::Identity(3, 3);
        const RetrievalResult r = retrieve(PatternSet(X), X.row(1).transpose(),
                                           simple_cfg(EntropyKind::sparsemax(), 1.0));
        CHECK(r.converged);
        CHECK(r.steps == 0);
    }
    SUBCASE("small beta softmax settles near the pattern mean") {
        MatrixXd X(3, 2);
        X << 1.0, 0.0, -0.5, 0.8, -0.4, -0.9;
        const PatternSet ps(X);
        const RetrievalConfig cfg = simple_cfg(EntropyKind::softmax(), 0.01);
        const RetrievalResult r = retrieve(ps, X.row(0).transpose(), cfg);
        CHECK(r.converged);
        CHECK_FALSE(r.exact_pattern.has_value());
        CHECK((r.q_final - ps.mean).norm() < 0.05);
        // plain fixed-point iteration reaches the same point
        VectorXd q = X.row(0).transpose();
        for (int t = 0; t < 400; ++t) {
            VectorXd z = (cfg.beta * X * q).array();
            z = (z.array() - z.maxCoeff()).exp();
            z /= z.sum();
            const VectorXd qn = X.transpose() * z;
            if ((qn - q).norm() <= cfg.fix_tol) break;
            q = qn;
        }
        CHECK((r.q_final - q).norm() < 1e-8);
    }
    SUBCASE("non-convergence is reported, not thrown") {
        MatrixXd X(3, 2);
        X << 1.0, 0.0, -0.5, 0.8, -0.4, -0.9;
        RetrievalConfig cfg = simple_cfg(EntropyKind::softmax(), 1.0);
        cfg.max_steps = 1;
        const RetrievalResult r = retrieve(PatternSet(X), VectorXd::Zero(2), cfg);
        CHECK_FALSE(r.converged);
        CHECK_FALSE(r.exact_pattern.has_value());
    }
    SUBCASE("converged queries are fixed points of the update") {
        Rng rng(73);
        for (const auto& kind : kAllKinds) {
            const MatrixXd X = MatrixXd::NullaryExpr(
                4, 3, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
            const PatternSet ps(X);
            const RetrievalConfig cfg = simple_cfg(kind, 1.0);
            const RetrievalResult r = retrieve(ps, hull_point(X, rng), cfg);
            if (!r.converged) continue;
            auto [q1, y] = update_step(ps, r.q_final, cfg);
            CHECK((q1 - r.q_final).norm() <= cfg.fix_tol);
        }
    }
    SUBCASE("dense vs sparse: only the sparse map lands on stored patterns") {
        Rng rng(89);
        MatrixXd X(4, 6);
        for (int i = 0; i < 4; ++i) X.row(i) = 1.5 * rng.unit_vector(6).transpose();
        const PatternSet ps(X);
        const VectorXd q0 = X.row(2).transpose() + 0.05 * rng.unit_vector(6);

        const RetrievalResult dense =
            retrieve(ps, q0, simple_cfg(EntropyKind::softmax(), 2.0));
        for (const auto& q : dense.trajectory)
            for (int i = 0; i < 4; ++i)
                CHECK_FALSE((q.array() == X.row(i).transpose().array()).all());

        RetrievalConfig cfg = simple_cfg(EntropyKind::sparsemax(), 20.0);
        const RetrievalResult sparse = retrieve(ps, q0, cfg);
        REQUIRE(sparse.exact_pattern.has_value());
        const auto& y = std::get<Distribution>(sparse.y_final);
        CHECK(y.support.size() == 1);  // support exactness, not closeness
        CHECK((sparse.q_final.array() ==
               X.row(std::get<Eigen::Index>(*sparse.exact_pattern)).transpose().array())
                  .all());
    }

    SUBCASE("structured retrieval reaches an exact pattern association") {
        const MatrixXd X = 2.0 * MatrixXd::Identity(5, 5);
        const PatternSet ps(X);
        Rng rng(79);
        const auto g = FactorGraph::ksubsets(5, 2);
        const VectorXd target = (X.row(0) + X.row(1)).transpose();
        const VectorXd q0 = target + 0.2 * rng.unit_vector(5);
        const RetrievalResult r = retrieve(ps, q0, graph_cfg(g, 3.0));
        CHECK(r.converged);
        REQUIRE(r.exact_pattern.has_value());
        const auto& s = std::get<Structure>(*r.exact_pattern);
        CHECK(s.bits.sum() == 2);
        CHECK(s.bits[0] == 1);
        CHECK(s.bits[1] == 1);
        CHECK((r.q_final.array() == target.array()).all());
    }
}

TEST_CASE("separation report") {
    SUBCASE("orthogonal patterns") {
        const MatrixXd X = 2.0 * MatrixXd::Identity(3, 3);
        const SeparationReport rep =
            separation_report(PatternSet(X), simple_cfg(EntropyKind::sparsemax(), 1.0));
        CHECK(rep.margin_threshold == doctest::Approx(1.0));
        for (int i = 0; i < 3; ++i) CHECK(rep.delta[i] == doctest::Approx(4.0));
        CHECK(rep.satisfied.all());
    }
    SUBCASE("antipodal pair") {
        MatrixXd X(2, 2);
        X << 1.5, 0, -1.5, 0;
        const SeparationReport rep =
            separation_report(PatternSet(X), simple_cfg(EntropyKind::sparsemax(), 1.0));
        CHECK(rep.delta[0] == doctest::Approx(2.0 * 2.25));
        CHECK(rep.delta[1] == doctest::Approx(2.0 * 2.25));
    }
    SUBCASE("softmax has no finite threshold") {
        const SeparationReport rep = separation_report(
            PatternSet(MatrixXd::Identity(3, 3)), simple_cfg(EntropyKind::softmax(), 1.0));
        CHECK(std::isinf(rep.margin_threshold));
        CHECK_FALSE(rep.satisfied.any());
    }
    SUBCASE("satisfied patterns are exact fixed points") {
        Rng rng(83);
        for (int t = 0; t < 25; ++t) {
            const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.raw() % 4);
            const MatrixXd X = MatrixXd::NullaryExpr(
                n, 4, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
            const PatternSet ps(X);
            const RetrievalConfig cfg = simple_cfg(EntropyKind::sparsemax(), 4.0);
            const SeparationReport rep = separation_report(ps, cfg);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!rep.satisfied[i]) continue;
                auto [q1, y] = update_step(ps, X.row(i).transpose(), cfg);
                CHECK((q1.array() == X.row(i).transpose().array()).all());
            }
        }
    }
    SUBCASE("structured candidates") {
        const MatrixXd X = 2.0 * MatrixXd::Identity(4, 4);
        const auto g = FactorGraph::ksubsets(4, 2);
        std::vector<Structure> cands;
        for (const auto& b : oracle::enumerate_structures(g))
            cands.push_back(Structure{b, 0.0});
        const SeparationReport rep =
            separation_report(PatternSet(X), graph_cfg(g, 2.0), cands);
        CHECK(rep.margin_threshold == doctest::Approx(1.0));
        // association gram is 4*|intersection|: self 8, best other 4
        for (Eigen::Index i = 0; i < rep.delta.size(); ++i)
            CHECK(rep.delta[i] == doctest::Approx(4.0));
        CHECK(rep.satisfied.all());
        CHECK_THROWS_AS(separation_report(PatternSet(X), graph_cfg(g, 2.0)),
                        std::invalid_argument);
    }
}

TEST_CASE("capacity trials") {
    SUBCASE("zero perturbation always succeeds") {
        CHECK(capacity_trial(8, 6, 4.0, 0.0, EntropyKind::sparsemax(), 5) == 1.0);
    }
    SUBCASE("the feasibility bound keeps one-step retrieval exact") {
        // eps = M/4 - m/(2 beta M) with M = 1, beta = 8, sparsemax
        const double eps = 0.25 - 1.0 / 16.0;
        CHECK(capacity_trial(24, 50, 8.0, eps, EntropyKind::sparsemax(), 9) == 1.0);
    }
    SUBCASE("determinism and overload behavior") {
        const double a = capacity_trial(6, 4, 4.0, 0.1, EntropyKind::sparsemax(), 17);
        const double b = capacity_trial(6, 4, 4.0, 0.1, EntropyKind::sparsemax(), 17);
        CHECK(a == b);
        const double wild = capacity_trial(6, 4, 4.0, 1.0, EntropyKind::sparsemax(), 17);
        MESSAGE("success rate at eps = M: ", wild);
        CHECK(wild <= 1.0);
    }
    SUBCASE("too many patterns for the dimension") {
        CHECK_THROWS_AS(capacity_trial(2, 20, 4.0, 0.0, EntropyKind::sparsemax(), 3),
                        GenerationError);
    }
    SUBCASE("random placement variant") {
        const RandomCapacityResult r =
            capacity_trial_random(16, 8.0, 2.0, 0.1, EntropyKind::sparsemax(), 21);
        CHECK(r.n_patterns >= 2);
        CHECK(r.eps_bound >= 0.0);
        CHECK(r.success_rate >= 0.0);
        CHECK(r.success_rate <= 1.0);
        const RandomCapacityResult r2 =
            capacity_trial_random(16, 8.0, 2.0, 0.1, EntropyKind::sparsemax(), 21);
        CHECK(r.success_rate == r2.success_rate);
        MESSAGE("random placement: N=", r.n_patterns, " eps=", r.eps_bound,
                " rate=", r.success_rate);
        CHECK_THROWS_AS(
            capacity_trial_random(16, 8.0, 0.9, 0.1, EntropyKind::sparsemax(), 21),
            std::invalid_argument);
    }
}
