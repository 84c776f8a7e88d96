#include <opacav/steady_state.hpp>

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

using namespace opacav;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using opacav::testing::brute_force;
using opacav::testing::GridResult;
using opacav::testing::oracle_cost;

namespace {

constexpr double pi = std::numbers::pi;

double rel_diff(cplx x, cplx y) { return std::abs(x - y) / std::max(std::abs(x), std::abs(y)); }

double max_real_trivial(double pump_ratio)
{
    ModelParams p;
    p.seed_amp = 0.0;
    p.pump_ratio = pump_ratio;
    return stability(p, trivial_state(p, 0.0), scan_detunings(p, 0.0)).max_real;
}

} // namespace

TEST_CASE("decoupled cavities without nonlinearity", "[steady]")
{
    ModelParams p;
    p.kappa = 0.0;
    for (double delta : {-3.0, -0.2, 0.0, 1.1}) {
        const FieldState s = solve_steady(p, delta);
        REQUIRE(s.converged);
        const cplx a = std::sqrt(2 * p.gamma_in) * p.seed_amp / cplx{p.gamma(), delta};
        CHECK(std::abs(s.a - a) <= 1e-12 * std::abs(a));
        CHECK(s.b == cplx{});
        const StabilityReport r = stability(p, s);
        CHECK(r.stable);
        const std::array<cplx, 4> expect_sorted = [&] {
            std::array<cplx, 4> e = {cplx{-p.gamma(), -delta}, cplx{-p.gamma(), delta},
                                     cplx{-p.gamma_b(), -2 * delta}, cplx{-p.gamma_b(), 2 * delta}};
            std::sort(e.begin(), e.end(), [](cplx x, cplx y) {
                return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
            });
            return e;
        }();
        for (std::size_t k = 0; k < 4; ++k)
            CHECK(std::abs(r.eigenvalues[k] - expect_sorted[k]) < 1e-12);
    }
}

TEST_CASE("pump-only cavity: b is the empty-cavity field", "[steady]")
{
    ModelParams p;
    p.seed_amp = 0.0;
    p.pump_ratio = 0.4;
    const FieldState s = solve_steady(p, 0.3);
    CHECK(s.a == cplx{});
    const cplx b = std::sqrt(2 * p.gamma_b_in) * pump_input(p) / cplx{p.gamma_b(), 0.6};
    CHECK(rel_diff(s.b, b) < 1e-14);
}

TEST_CASE("undepleted deamplification closed form", "[steady]")
{
    ModelParams p;
    p.pump_ratio = 0.3;
    p.theta = pi;
    p.seed_amp *= 1e-6;
    const FieldState s = solve_steady(p, 0.0);
    const double closed =
        std::sqrt(2 * p.gamma_in) * p.seed_amp / (p.gamma() * (1 + std::sqrt(0.3)));
    CHECK_THAT(std::abs(s.a), WithinRel(closed, 1e-10));
    CHECK_THAT(closed * p.gamma() / (std::sqrt(2 * p.gamma_in) * p.seed_amp),
               WithinAbs(0.6461, 1e-4));
    CHECK(stability(p, s).stable);
}

TEST_CASE("Newton agrees with a brute-force grid minimizer", "[steady][oracle]")
{
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int inst = 0; inst < 20; ++inst) {
        ModelParams p;
        p.pump_ratio = 0.05 + 0.65 * u(rng);
        p.theta = 2 * pi * u(rng);
        p.seed_amp *= 0.5 + 2.5 * u(rng);
        const double delta = -1.0 + 2.0 * u(rng);
        INFO("instance " << inst << " pump_ratio " << p.pump_ratio << " theta " << p.theta
                         << " delta " << delta);

        const FieldState s = solve_steady(p, delta);
        REQUIRE(s.converged);

        const FieldState guess = undepleted_state(p, scan_detunings(p, delta));
        const double ha = 0.5 * std::abs(guess.a), hb = 0.5 * std::abs(guess.b);
        const GridResult g =
            brute_force(p, delta, {guess.a.real(), guess.a.imag(), guess.b.real(), guess.b.imag()},
                        {ha, ha, hb, hb}, 40);
        CHECK(std::abs(s.a.real() - g.x[0]) <= 2 * g.spacing[0] + 1e-12 * ha);
        CHECK(std::abs(s.a.imag() - g.x[1]) <= 2 * g.spacing[1] + 1e-12 * ha);
        CHECK(std::abs(s.b.real() - g.x[2]) <= 2 * g.spacing[2] + 1e-12 * hb);
        CHECK(std::abs(s.b.imag() - g.x[3]) <= 2 * g.spacing[3] + 1e-12 * hb);

        // residual contract, re-evaluated independently
        CHECK(std::sqrt(oracle_cost(p, delta, {s.a.real(), s.a.imag(), s.b.real(), s.b.imag()})) <
              2 * SolveOptions{}.tol);
    }
}

TEST_CASE("threshold: seedless eigenvalue crosses zero at pump_ratio 1", "[steady][threshold]")
{
    CHECK(max_real_trivial(0.99) < 0.0);
    CHECK(max_real_trivial(1.01) > 0.0);
    double lo = 0.5, hi = 1.5;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (max_real_trivial(mid) < 0.0 ? lo : hi) = mid;
    }
    CHECK_THAT(0.5 * (lo + hi), WithinAbs(1.0, 1e-6));

    ModelParams p;
    p.seed_amp = 0.0;
    p.pump_ratio = 0.99;
    CHECK(stability(p, solve_steady(p, 0.0)).stable);
}

TEST_CASE("seedless at or above threshold on resonance is refused", "[steady][errors]")
{
    ModelParams p;
    p.seed_amp = 0.0;
    p.pump_ratio = 1.0;
    CHECK_THROWS_AS(solve_steady(p, 0.0), AboveThresholdUnstableSeedless);
    p.pump_ratio = 1.5;
    CHECK_THROWS_AS(solve_steady(p, 0.0), AboveThresholdUnstableSeedless);
}

TEST_CASE("non-convergence reports the detuning and iterate", "[steady][errors]")
{
    ModelParams p;
    p.pump_ratio = 0.5;
    p.seed_amp *= 5.0;
    SolveOptions o;
    o.max_iter = 1;
    try {
        solve_steady(p, 0.37, o);
        FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
        CHECK(e.delta() == 0.37);
        CHECK(e.residual() > o.tol);
        CHECK(std::isfinite(std::abs(e.a())));
        CHECK(std::string(e.what()).find("0.37") != std::string::npos);
    }
}

TEST_CASE("unstable configuration reached from a different start is flagged", "[steady][errors]")
{
    ModelParams p;
    p.pump_ratio = 2.0;
    p.theta = 0.0;
    const FieldState cold = solve_steady(p, 0.0);
    CHECK_FALSE(stability(p, cold).stable);
    SolveOptions o;
    FieldState other = cold;
    other.a = 30.0;
    other.b = 0.7 * free_pump(p, 0.0);
    o.warm_start = other;
    const FieldState warm = solve_steady(p, 0.0, o);
    CHECK(stability(p, warm).stable);
    CHECK_THROWS_AS(solve_steady_checked(p, 0.0, o), MultiStability);

    // below threshold a warm start from a neighbouring point is harmless
    ModelParams q;
    q.pump_ratio = 0.3;
    q.theta = pi;
    SolveOptions w;
    w.warm_start = solve_steady(q, 0.1);
    const FieldState s = solve_steady_checked(q, 0.12, w);
    CHECK(rel_diff(s.a, solve_steady(q, 0.12).a) <= 10 * w.tol);
}

TEST_CASE("stability rejects an unconverged state", "[steady][errors]")
{
    ModelParams p;
    FieldState s;
    CHECK_THROWS_AS(stability(p, s), InvalidArgument);
}

TEST_CASE("classical gain", "[steady][gain]")
{
    ModelParams p;
    CHECK(classical_gain(p, 0.0) == 1.0);
    CHECK(classical_gain(p, 1.3) == 1.0);
    p.pump_ratio = 0.25;
    CHECK_THAT(classical_gain(p, 0.0), WithinRel(4.0, 1e-14));
    CHECK_THAT(classical_gain(p, pi), WithinRel(4.0 / 9.0, 1e-14));
    for (double r : {0.05, 0.3, 0.6, 0.9}) {
        p.pump_ratio = r;
        CHECK_THAT(classical_gain(p, 0.0) * classical_gain(p, pi),
                   WithinRel(1.0 / ((1 - r) * (1 - r)), 1e-12));
    }
    p.pump_ratio = 1.0;
    CHECK_THROWS_AS(classical_gain(p, 0.0), InvalidArgument);
}

TEST_CASE("classical gain matches the solver at vanishing seed", "[steady][gain]")
{
    for (double r : {0.15, 0.25, 0.3}) {
        for (double theta : {0.0, 0.7, pi, 4.0}) {
            ModelParams p;
            p.seed_amp *= 1e-6;
            p.theta = theta;
            ModelParams bare = p;
            bare.kappa = 0.0;
            p.pump_ratio = r;
            const double g = std::norm(solve_steady(p, 0.0).a) / std::norm(solve_steady(bare, 0.0).a);
            CHECK_THAT(g, WithinRel(classical_gain(p, theta), 1e-9));
        }
    }
}

TEST_CASE("flux and energy balance on solved states", "[steady][flux]")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int inst = 0; inst < 30; ++inst) {
        ModelParams p;
        p.pump_ratio = 0.9 * u(rng);
        p.theta = 2 * pi * u(rng);
        p.seed_amp *= 0.2 + 5 * u(rng);
        const FieldState s = solve_steady(p, -2.0 + 4.0 * u(rng));
        const FluxBalance f = flux_balance(p, s);
        CHECK(std::abs(f.energy_residual()) <= 1e-9 * f.input_energy);
        CHECK(std::abs(f.manley_rowe_residual()) <= 1e-9 * std::max(1e-300, std::abs(f.sub_parametric)));
        CHECK(std::abs(f.sub_residual()) <= 1e-9 * (f.sub_decay + std::abs(f.sub_drive)));
        CHECK(std::abs(f.pump_residual()) <= 1e-9 * (f.pump_decay + std::abs(f.pump_drive)));
    }
}

TEST_CASE("deamplification spectrum is symmetric in detuning", "[steady][symmetry]")
{
    ModelParams p;
    p.pump_ratio = 0.3;
    p.theta = pi;
    p.seed_amp *= 2.0;
    for (double delta : {0.01, 0.05, 0.3, 1.7}) {
        const FieldState s1 = solve_steady(p, delta), s2 = solve_steady(p, -delta);
        CHECK_THAT(std::abs(s1.a), WithinRel(std::abs(s2.a), 1e-11));
        CHECK(rel_diff(s1.a, std::conj(s2.a)) < 1e-11);
        CHECK(rel_diff(s1.b, std::conj(s2.b)) < 1e-11);
    }
}

TEST_CASE("observables are invariant under common rate scaling", "[steady][scaling]")
{
    ModelParams p;
    p.pump_ratio = 0.4;
    p.theta = 2.5;
    p.seed_amp *= 3.0;
    for (double sc : {0.5, 2.0, 10.0}) {
        ModelParams q = p;
        q.gamma_in *= sc;
        q.gamma_c *= sc;
        q.gamma_l *= sc;
        q.gamma_b_in *= sc;
        q.gamma_b_l *= sc;
        q.kappa *= sc;
        q.seed_amp *= std::sqrt(sc);
        CHECK_THAT(pump_parameter(q), WithinRel(pump_parameter(p), 1e-14));
        for (double delta : {-0.8, 0.0, 0.05, 2.0}) {
            const FieldState s = solve_steady(p, delta);
            const FieldState t = solve_steady(q, sc * delta);
            const cplx r1 = (std::sqrt(2 * p.gamma_in) * s.a - p.seed_amp) / p.seed_amp;
            const cplx r2 = (std::sqrt(2 * q.gamma_in) * t.a - q.seed_amp) / q.seed_amp;
            CHECK(std::abs(r1 - r2) < 1e-10);
            CHECK_THAT(2 * q.gamma_c * std::norm(t.a) / std::norm(q.seed_amp),
                       WithinRel(2 * p.gamma_c * std::norm(s.a) / std::norm(p.seed_amp), 1e-10));
        }
    }
}

TEST_CASE("solver options are validated", "[steady][errors]")
{
    ModelParams p;
    SolveOptions o;
    o.tol = 0.0;
    CHECK_THROWS_AS(solve_steady(p, 0.0, o), InvalidArgument);
    o = {};
    o.max_iter = 0;
    CHECK_THROWS_AS(solve_steady(p, 0.0, o), InvalidArgument);
    o = {};
    o.damping = 1.5;
    CHECK_THROWS_AS(solve_steady(p, 0.0, o), InvalidArgument);
}
