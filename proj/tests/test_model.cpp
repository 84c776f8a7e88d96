#include <opacav/model.hpp>
#include <opacav/steady_state.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace opacav;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

TEST_CASE("derive_rates on the PPKTP cavity", "[model][rates]")
{
    CavityParams c;
    c.crystal_index_sub = 1.8;
    const DecayRates r = derive_rates(c);

    // optical path 49 mm of air + 1.8 * 12 mm of crystal
    const double tau = 2.0 * (0.049 + 1.8 * 0.012) / speed_of_light;
    CHECK_THAT(r.tau_sub, WithinRel(tau, 1e-14));
    CHECK_THAT(r.gamma_in, WithinRel(0.01 / (2.0 * tau), 1e-12));
    CHECK_THAT(r.gamma_in / r.gamma_c, WithinRel(0.01 / 0.07, 1e-12));
    CHECK_THAT(r.gamma_l, WithinRel(0.005 / (2.0 * tau), 1e-12));
    CHECK(r.under_coupled());
    CHECK(r.gamma() == r.gamma_in + r.gamma_c + r.gamma_l);
}

TEST_CASE("derive_rates rejects a lossless cavity", "[model][rates]")
{
    CavityParams c;
    c.R_in_sub = c.R_out_sub = c.R_in_pump = c.R_out_pump = 1.0;
    c.loss_sub = c.loss_pump = 0.0;
    CHECK_THROWS_AS(derive_rates(c), InvalidArgument);
}

TEST_CASE("derive_rates is linear in transmission", "[model][rates]")
{
    CavityParams c;
    CavityParams d = c;
    d.R_in_sub = 1.0 - 2.0 * (1.0 - c.R_in_sub);
    d.R_out_sub = 1.0 - 2.0 * (1.0 - c.R_out_sub);
    d.loss_sub = 2.0 * c.loss_sub;
    d.R_in_pump = 1.0 - 2.0 * (1.0 - c.R_in_pump);
    d.loss_pump = 2.0 * c.loss_pump;
    const DecayRates r1 = derive_rates(c), r2 = derive_rates(d);
    CHECK_THAT(r2.gamma_in, WithinRel(2.0 * r1.gamma_in, 1e-12));
    CHECK_THAT(r2.gamma_c, WithinRel(2.0 * r1.gamma_c, 1e-12));
    CHECK_THAT(r2.gamma_l, WithinRel(2.0 * r1.gamma_l, 1e-12));
    CHECK_THAT(r2.gamma_b_in, WithinRel(2.0 * r1.gamma_b_in, 1e-12));
    CHECK_THAT(r2.gamma_b_loss, WithinRel(2.0 * r1.gamma_b_loss, 1e-12));
}

TEST_CASE("cavity validation", "[model][rates]")
{
    CavityParams c;
    c.R_in_sub = 1.2;
    CHECK_THROWS_AS(derive_rates(c), InvalidArgument);
    c = {};
    c.crystal_length = 0.07;
    CHECK_THROWS_AS(derive_rates(c), InvalidArgument);
    c = {};
    c.crystal_index_pump = 0.9;
    CHECK_THROWS_AS(derive_rates(c), InvalidArgument);
}

TEST_CASE("normalized parameters keep rate additivity", "[model]")
{
    const DecayRates r = derive_rates(CavityParams{});
    const ModelParams p = ModelParams::normalized(r, 1e3);
    CHECK(p.gamma() == p.gamma_in + p.gamma_c + p.gamma_l);
    CHECK(p.gamma_b() == p.gamma_b_in + p.gamma_b_l);
    CHECK_THAT(p.gamma(), WithinRel(1.0, 1e-14));
    CHECK(p.under_coupled());
    CHECK_THAT(p.gamma_b_l * r.gamma(), WithinRel(r.gamma_b_out + r.gamma_b_loss, 1e-12));

    const ModelParams d;
    CHECK(d.under_coupled());
    CHECK(d.eit_like_regime());
    CHECK(d.gamma_b() <= d.gamma() / 10.0 + 1e-15);
}

TEST_CASE("model validation", "[model]")
{
    ModelParams p;
    p.kappa = 0.0;
    CHECK_NOTHROW(p.validate()); // bare cavity
    p.pump_ratio = 0.1;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = {};
    p.gamma_l = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = {};
    p.pump_ratio = -0.1;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("half-angle phase convention maps phi = pi/2 to deamplification", "[model]")
{
    ModelParams p;
    p.set_paper_phi(std::numbers::pi / 2);
    CHECK_THAT(p.theta, WithinAbs(std::numbers::pi, 1e-15));
    CHECK_THAT(p.paper_phi(), WithinAbs(std::numbers::pi / 2, 1e-15));
}

TEST_CASE("equations of motion: empty cavity is drive only", "[model][eom]")
{
    ModelParams p;
    p.kappa = 0.0;
    p.gamma_in = 0.25;
    p.seed_amp = 1.0;
    const auto [da, db] = equations_of_motion(p, 0.0, 0.0, 0.0);
    CHECK_THAT(da.real(), WithinAbs(std::sqrt(0.5), 1e-15));
    CHECK(da.imag() == 0.0);
    CHECK(db == cplx{}); // pump off

    ModelParams q;
    q.pump_ratio = 0.4;
    q.seed_amp = 0.0;
    const auto [da2, db2] = equations_of_motion(q, 0.0, 0.0, 0.0);
    CHECK(da2 == cplx{});
    CHECK_THAT(std::abs(db2),
               WithinRel(std::sqrt(2.0 * q.gamma_b_in) * std::sqrt(0.4) * threshold_drive(q),
                         1e-14));
}

TEST_CASE("equations of motion vanish at the linear fixed point", "[model][eom]")
{
    ModelParams p;
    p.kappa = 0.0;
    for (double delta : {-2.0, -0.3, 0.0, 0.7, 5.0}) {
        const cplx a = std::sqrt(2.0 * p.gamma_in) * p.seed_amp / cplx{p.gamma(), delta};
        const auto [da, db] = equations_of_motion(p, a, 0.0, delta);
        CHECK(std::abs(da) < 1e-15);
        CHECK(std::abs(db) == 0.0);
    }
}

TEST_CASE("threshold drive places threshold at kappa|b| = gamma", "[model][threshold]")
{
    ModelParams p;
    p.seed_amp = 0.0;
    p.pump_ratio = 1.0;
    const FieldState s = trivial_state(p, 0.0);
    CHECK_THAT(p.kappa * std::abs(s.b), WithinRel(p.gamma(), 1e-14));

    p.pump_ratio = 0.3;
    const FieldState t = trivial_state(p, 0.0);
    CHECK_THAT(p.kappa * std::abs(t.b) / p.gamma(), WithinRel(std::sqrt(0.3), 1e-14));

    p.kappa = 0.0;
    CHECK_THROWS_AS(threshold_drive(p), InvalidArgument);
}

TEST_CASE("kappa calibration round-trips a 90 mW threshold", "[model][threshold]")
{
    const CavityParams c;
    const DecayRates r = derive_rates(c);
    const double kappa = calibrate_kappa(r, 0.090, c);
    CHECK(kappa > 0.0);
    CHECK_THAT(threshold_power(r, kappa, c), WithinRel(0.090, 1e-9));

    // normalized route: drive at threshold carries 90 mW of pump photons
    const ModelParams p = ModelParams::normalized(r, kappa);
    const double drive_si = threshold_drive(p) * std::sqrt(r.gamma());
    CHECK_THAT(hbar * c.pump_angular_frequency() * drive_si * drive_si, WithinRel(0.090, 1e-9));
    CHECK_THROWS_AS(calibrate_kappa(r, 0.0, c), InvalidArgument);
}
