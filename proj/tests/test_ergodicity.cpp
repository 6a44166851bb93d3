#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cbipc/config.hpp"
#include "cbipc/ergodicity.hpp"
#include "cbipc/error.hpp"
#include "cbipc/parallel.hpp"
#include "oracles.hpp"

using namespace cbipc;

namespace {

TailEstimate synthetic(const std::function<double(double)>& p, double t_hi, int points) {
    TailEstimate e;
    e.n_paths = 1000000000;
    for (int i = 0; i <= points; ++i) {
        TailPoint pt;
        pt.t = t_hi * i / points;
        pt.p_hat = p(pt.t);
        pt.alive = static_cast<std::size_t>(pt.p_hat * e.n_paths);
        e.points.push_back(pt);
    }
    return e;
}

std::vector<double> grid(double hi, int n) {
    std::vector<double> g;
    for (int i = 0; i <= n; ++i) g.push_back(hi * i / n);
    return g;
}

}  // namespace

TEST_SUITE("ergodicity") {
    TEST_CASE("wilson interval") {
        const double z = 1.959963984540054;
        auto ref = [&](double k, double n) {
            const double p = k / n, d = 1 + z * z / n;
            const double c = (p + z * z / (2 * n)) / d;
            const double h = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / d;
            return std::pair{c - h, c + h};
        };
        for (auto [k, n] : {std::pair{5, 10}, {1, 40}, {77, 100}}) {
            const auto w = wilson(k, n);
            const auto [lo, hi] = ref(k, n);
            CHECK(w.lo == doctest::Approx(lo).epsilon(1e-12));
            CHECK(w.hi == doctest::Approx(hi).epsilon(1e-12));
        }
        CHECK(wilson(0, 10).lo == 0.0);
        CHECK(wilson(10, 10).hi == 1.0);
        CHECK(wilson(0, 10).hi > 0.0);

        // coverage on synthetic Bernoulli data
        std::mt19937_64 gen(3);
        for (double p : {0.05, 0.3, 0.6}) {
            std::binomial_distribution<int> bin(60, p);
            int covered = 0;
            const int reps = 4000;
            for (int r = 0; r < reps; ++r) {
                const auto w = wilson(bin(gen), 60);
                covered += w.lo <= p && p <= w.hi;
            }
            CAPTURE(p);
            CHECK(covered >= 0.92 * reps);
        }
    }

    TEST_CASE("tail estimates") {
        std::vector<StopTime> times(10);
        for (int i = 0; i < 8; ++i) times[i].set(0.5 * i);
        const auto e = tail_from_times("T", times, grid(5, 10), 5.0);
        CHECK(e.censored == 2);
        CHECK(e.points[0].p_hat == doctest::Approx(0.9));  // T > 0 excludes the path that meets at 0
        CHECK(e.points.back().p_hat == doctest::Approx(0.2));
        CHECK(e.points.back().censored == 2);
        for (std::size_t i = 1; i < e.points.size(); ++i) {
            CHECK(e.points[i].p_hat <= e.points[i - 1].p_hat);
            CHECK(e.points[i].ci_lo <= e.points[i].p_hat);
            CHECK(e.points[i].ci_hi >= e.points[i].p_hat);
        }
        CHECK(tail_from_times("T", times, {0.0}, 5.0, true).points[0].p_hat == 1.0);
        const auto m = max_tail("max", {e, tail_from_times("T", std::vector<StopTime>(10), grid(5, 10), 5.0)});
        CHECK(m.points[3].p_hat == 1.0);
        const auto me = mean_of(times, 5.0);
        CHECK(me.censored == 2);
        CHECK(me.mean == doctest::Approx((0.5 * 28 + 10) / 10));
    }

    TEST_CASE("total variation bound") {
        TailEstimate e;
        e.n_paths = 100;
        e.points = {{0.0, 1.0, 0.96, 1.0, 100, 0}, {1.0, 0.25, 0.18, 0.34, 25, 0}, {2.0, 0.0, 0.0, 0.037, 0, 0}};
        CHECK(tv_upper_bound(e, 1.5).point == doctest::Approx(0.5));
        CHECK(tv_upper_bound(e, 1.5).t_used == 1.0);
        CHECK(tv_upper_bound(e, 2.0).lo == 0.0);
        CHECK(tv_upper_bound(e, 2.0).hi == doctest::Approx(0.074));
        CHECK(tv_upper_bound(e, 0.0).point == 2.0);
        try {
            tv_upper_bound(e, 3.0);
            FAIL("no error");
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::OutOfGrid);
        }
    }

    TEST_CASE("rate fit on exact exponentials") {
        const auto f = rate_fit(synthetic([](double t) { return std::exp(-2 * t); }, 2.0, 40));
        CHECK(f.lambda_hat == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(f.r_squared == doctest::Approx(1.0));
        const auto g = rate_fit(synthetic([](double t) { return 0.5 * std::exp(-t); }, 4.0, 40));
        CHECK(g.lambda_hat == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(g.intercept == doctest::Approx(std::log(0.5)).epsilon(1e-6));
        CHECK(g.se < 1e-3);
        try {
            rate_fit(synthetic([](double) { return 0.95; }, 1.0, 10));
            FAIL("no error");
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::DegenerateFit);
        }
    }

    TEST_CASE("mean hitting time of the square-root diffusion") {
        // with b = γ = σ = 1 the integral is ln z₁
        for (double z : {1.5, 2.0, 5.0, 100.0, 1024.0}) CHECK(cir_mean_hitting_time(1, 1, 1, z) == doctest::Approx(std::log(z)).epsilon(1e-12));
        // frozen from an independent arbitrary-precision quadrature
        CHECK(cir_mean_hitting_time(2, 0.5, 1.5, 3) == doctest::Approx(0.447610212522905).epsilon(1e-11));
        CHECK(cir_mean_hitting_time(1, 2, 0.5, 5) == doctest::Approx(3.77743791243410).epsilon(1e-11));
        CHECK(cir_mean_hitting_time(1, 1, 1, 1 + 1e-9) < 1e-8);
        double prev = 0;
        for (int j = 1; j <= 10; ++j) {
            const double v = cir_mean_hitting_time(1.3, 0.7, 0.9, std::ldexp(1.0, j));
            CHECK(v > prev);
            prev = v;
        }
        CHECK_THROWS_AS(cir_mean_hitting_time(1, 1, 1, 0.5), Error);
        CHECK_THROWS_AS(cir_mean_hitting_time(0, 1, 1, 2), Error);
    }

    TEST_CASE("hitting tails") {
        const auto p = reference_model();
        const double M = m0_heuristic(p);
        SimScheme s;
        s.horizon = 1.0;
        s.dt = 1e-3;
        const auto r = hitting_tail(p, s, {HittingKind::Type::TauMinus, M}, {M / 2}, 50, grid(1, 4), 1, 0);
        CHECK(r.tails[0].points[1].p_hat == 0.0);
        CHECK(r.means[0].mean == 0.0);
        try {
            hitting_tail(p, s, {HittingKind::Type::TauMinus, 1.0}, {2.0}, 10, grid(1, 4), 1, 0);
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.config_path() == "hitting.level");
        }
        const auto z = hitting_tail(p, s, {HittingKind::Type::ZetaBar0, 1.0}, {0.0}, 20, grid(1, 4), 1, 0);
        CHECK(z.tails[0].points[1].p_hat == 0.0);
    }

    TEST_CASE("coupling tails") {
        const auto p = reference_model();
        SimScheme s;
        s.horizon = 2.0;
        const auto r = coupling_tail(p, s, {{1, 1, 2, 2}, {0, 3, 0, 3}}, 100, grid(2, 8), 2, 0);
        for (const auto& pt : r.tails_full[0].points) CHECK(pt.p_hat == 0.0);
        for (const auto& pt : r.tails_X[0].points) CHECK(pt.p_hat == 0.0);
        CHECK(r.max_full.points[0].p_hat == 1.0);
        CHECK(tv_upper_bound(r.max_full, 0.0).point == 2.0);
        CHECK(r.warning.empty());
        auto q = p;
        q.c1.alpha = 1.0;
        CHECK_FALSE(coupling_tail(q, s, {{1, 1, 2, 2}}, 10, grid(2, 2), 2, 0).warning.empty());
    }

    TEST_CASE("coupling bound dominates a binned total variation") {
        // prey alone (k = 0): compare the laws of X_t from two starts with the coupling bound on T_X
        auto p = reference_model();
        p.k = 0.0;
        SimScheme s;
        s.dt = 5e-3;
        s.horizon = 0.6;
        const double x1 = 0.5, x2 = 4.0, t = 0.6;
        const auto c = coupling_tail(p, s, {{x1, x2, 1, 1}}, 20000, {0.0, t}, 21, 0);
        const TvBound bound = tv_upper_bound(c.tails_X[0], t);

        const std::size_t n = 100000;
        const int bins = 40;
        const double width = 0.15;
        std::vector<double> a(n), b(n);
        parallel_for(n, 0, [&](std::size_t i) {
            for (int which = 0; which < 2; ++which) {
                CbipcEngine e(p, s, {22, path_id(which, i)}, which ? x2 : x1, 0.0, INFINITY, false);
                while (!e.done()) e.step();
                (which ? b : a)[i] = e.x;
            }
        });
        std::vector<double> ha(bins + 1, 0.0), hb(bins + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            ha[std::min<int>(bins, int(a[i] / width))] += 1.0 / n;
            hb[std::min<int>(bins, int(b[i] / width))] += 1.0 / n;
        }
        double l1 = 0, noise = 0;
        for (int k = 0; k <= bins; ++k) {
            l1 += std::abs(ha[k] - hb[k]);
            noise += std::sqrt((ha[k] * (1 - ha[k]) + hb[k] * (1 - hb[k])) / n);
        }
        MESSAGE("binned L1 " << l1 << ", coupling bound " << bound.point << " [" << bound.lo << ", " << bound.hi << "]");
        CHECK(l1 > 0.1);  // the comparison is not vacuous
        CHECK(l1 <= bound.hi + 3 * noise);
    }

    TEST_CASE("comparison audit") {
        auto p = reference_model();
        SimScheme s;
        s.horizon = 1.0;
        s.dt = 2e-3;
        const double M = m0_heuristic(p);
        // y = ỹ: Z starts and stays at 0, nothing can be violated
        const auto eq = comparison_audit(p, s, {{M / 2, 3.0, 3.0}}, 200, M, 3, 0);
        for (const auto& l : eq.lemma) {
            CHECK(l.violating_paths == 0);
            CHECK(l.max_violation == 0.0);
        }
        // pure diffusion
        auto d = p;
        d.c1.n = d.c2.n = LevyMeasure::zero();
        const auto r = comparison_audit(d, s, {{M / 2, 2.0, 1.0}}, 2000, M, 4, 0);
        for (const auto& l : r.lemma) {
            CAPTURE(l.name);
            CHECK(l.fraction <= 0.01);
        }
        // without predation the predator ordering needs no localization
        auto k0 = p;
        k0.k = 0.0;
        const auto u = comparison_audit(k0, s, {{2 * M, 2.0, 1.0}}, 1000, M, 5, 0, false);
        CHECK(u.lemma[0].violating_paths == 0);
    }

    TEST_CASE("localization pipeline") {
        SimScheme s;
        s.dt = 5e-3;
        s.horizon = 18.0;
        LocalizeConfig cfg;
        cfg.n_paths = 150;

        const auto r = localize(reference_model(), s, cfg, 7, 0);
        CHECK(r.mode == "three-condition");
        CHECK(r.capped);
        CHECK(r.t_used == doctest::Approx(6.0));
        for (const auto* c : {&r.cond_a, &r.cond_b, &r.cond_c}) {
            CAPTURE(c->label);
            CHECK(c->ci.lo > 0.05);
        }
        CHECK(r.assembled > 0.0);
        CHECK(r.consistent);

        auto k0 = reference_model();
        k0.k = 0.0;
        const auto t = localize(k0, s, cfg, 7, 0);
        CHECK(t.mode == "k<=0 two-stage");
        CHECK(t.assembled == doctest::Approx(t.cond_b.p_hat * t.cond_c.p_hat));
        CHECK(t.consistent);

        auto lin = reference_model();
        lin.c1.alpha = 1.0;
        CHECK_THROWS_AS(localize(lin, s, cfg, 7, 0), Error);
        LocalizeConfig lc = cfg;
        lc.M = 4.0;
        lc.t0 = 5.0;
        lc.n_paths = 200;
        lc.a_inits = {8.0, 40.0, 400.0};
        lc.b_inits = {{0, 0, 1, 0}};
        lc.c_inits = {{0, 4, 0, 0}};
        const auto f1 = localize(lin, s, lc, 8, 0);
        CHECK(f1.mode == "fallback");
        for (double& x : lc.a_inits) x *= 20;
        const auto f2 = localize(lin, s, lc, 8, 0);
        // the (a) estimate degrades as the init grid grows
        CHECK(f2.cond_a.p_hat < f1.cond_a.p_hat);
        CHECK(f1.notes.size() >= 3);
    }
}
