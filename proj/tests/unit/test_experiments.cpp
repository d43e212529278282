#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "nlsfgr/errors.hpp"
#include "nlsfgr/experiments.hpp"
#include "nlsfgr/frame.hpp"
#include "nlsfgr/io.hpp"
#include "support.hpp"

using namespace nlsfgr;

namespace {

const GroundState& gs() {
    static const GroundState g = solve_for_mass(5.0, 1.6, test::small_pair(), test::small_grid());
    return g;
}

const LinearizedSystem& sys() {
    static const LinearizedSystem s = build_linearization(gs(), test::small_grid());
    return s;
}

ZEta extract(const CVec& psi, double* a = nullptr) {
    const FrameDecomposition d = decompose_once(psi, gs(), test::small_grid(), 0.5);
    if (a) *a = d.a;
    return split_h(d.h, sys());
}

}  // namespace

TEST(ResonanceData, ZeroAmplitudeIsTheSoliton) {
    const CVec psi = prepare_resonance_data(gs(), sys(), cplx(0.0), CVec(), 1.0, 0.5);
    EXPECT_LT(test::small_grid().norm(CVec(psi - gs().Q.cast<cplx>())), 1e-15);
}

TEST(ResonanceData, ExtractionRecoversZ0) {
    for (const cplx z0 : {cplx(0.5, 0.0), cplx(0.1, -0.2), cplx(-0.03, 0.01)}) {
        double a = 1.0;
        const ZEta ze = extract(prepare_resonance_data(gs(), sys(), z0, CVec(), 1.0, 0.5), &a);
        EXPECT_LT(std::abs(ze.z - z0), 1e-10) << z0;
        EXPECT_LT(std::abs(a), 1e-12);
    }
}

TEST(ResonanceData, ContinuumBumpAtTheBoundPasses) {
    const double eps = 0.1, scale = std::pow(eps, 1.5);
    const CVec eta0 = continuum_bump(sys(), 3.0, scale, 7);
    EXPECT_NEAR(test::small_grid().norm(eta0), scale, 1e-12 * scale);
    const ZEta ze = extract(prepare_resonance_data(gs(), sys(), cplx(eps, 0.0), eta0, 1.0, 0.5));
    EXPECT_LT(std::abs(ze.z - eps), 1e-10);
    EXPECT_THROW(prepare_resonance_data(gs(), sys(), cplx(eps, 0.0), CVec(1.01 * eta0), 1.0, 0.5), ConfigError);
}

TEST(ResonanceData, FarFromTheSolitonIsRejected) {
    EXPECT_THROW(prepare_resonance_data(gs(), sys(), cplx(5.0, 0.0), CVec(), 1.0, 0.5), ConfigError);
}

TEST(RadiationData, ZeroProfileIsTheSoliton) {
    const CVec chi = radiation_profile(sys(), 0.0, 2.0, 0.0);
    const CVec psi = prepare_radiation_data(gs(), sys(), chi, 0.0, 0.5);
    EXPECT_LT(test::small_grid().norm(CVec(psi - gs().Q.cast<cplx>())), 1e-15);
}

TEST(RadiationData, DiscreteComponentIsFarBelowTheAmplitude) {
    const RadialGrid& g = test::small_grid();
    for (const double k : {0.0, 0.5, 1.0}) {
        const double eps = 0.1;
        const CVec chi = radiation_profile(sys(), eps, 2.0, k);
        EXPECT_NEAR(g.norm(chi), eps, 1e-12);
        const CVec psi = prepare_radiation_data(gs(), sys(), chi, 0.0, 0.5);
        const ZEta ze = extract(psi);
        EXPECT_LE(std::abs(ze.z), eps * eps) << k;
        EXPECT_LE(std::abs(ze.z) / g.norm(ze.eta), eps) << k;
        const double mass = g.inner(psi, psi).real(), QQ = g.inner(gs().Q, gs().Q);
        EXPECT_GT(mass, 0.5 * QQ);
        EXPECT_LT(mass, 2.0 * QQ);
    }
}

TEST(RadiationData, BranchOffsetAppearsAsA) {
    double a = 0.0;
    extract(prepare_radiation_data(gs(), sys(), CVec::Zero(test::small_grid().size()), 0.02, 0.5), &a);
    EXPECT_NEAR(a, 0.02, 1e-12);
}

TEST(RadiationData, StrippedOffBranchDataHasNoDiscreteComponent) {
    const RadialGrid& g = test::small_grid();
    const CVec chi = radiation_profile(sys(), 0.05, 2.0, 0.0);
    const CVec raw = prepare_radiation_data(gs(), sys(), chi, 0.05, 0.5);
    const CVec psi = strip_discrete_mode(raw, gs(), test::small_pair(), g, 0.5);
    const RenormResult r = renormalize_E(psi, gs().E, gs().lambda, test::small_pair(), g);
    const LinearizedSystem s = build_linearization(r.gs, g);
    const ZEta before = split_h(renormalize_E(raw, gs().E, gs().lambda, test::small_pair(), g).h, s);
    const ZEta after = split_h(r.h, s);
    EXPECT_GT(std::abs(before.z), 1e-4);
    EXPECT_LT(std::abs(after.z), 1e-9);
    EXPECT_NEAR(r.E, gs().E + 0.05, 0.01);
    EXPECT_LT(std::abs(after.z), 0.05 * 0.05);
}

TEST(SampleSteps, LogThenUniform) {
    const double T = 100.0, dt = 0.01, stride = 0.5;
    const auto k = sample_steps(T, dt, stride, 50.0);
    EXPECT_EQ(k.front(), 0);
    EXPECT_EQ(k.back(), 10000);
    long max_gap = 0;
    for (std::size_t i = 1; i < k.size(); ++i) {
        const long gap = k[i] - k[i - 1];
        ASSERT_GT(gap, 0);
        if (i > 1 && i + 1 < k.size()) ASSERT_GE(gap, k[i - 1] - k[i - 2]) << "gaps must not shrink";
        max_gap = std::max(max_gap, gap);
    }
    EXPECT_EQ(max_gap, 50);
    // Uniform tail: exactly one sample every `stride` time units.
    for (std::size_t i = k.size() - 10; i + 1 < k.size(); ++i) EXPECT_EQ(k[i] - k[i - 1], 50);
}

TEST(SampleSteps, ZeroHorizon) {
    const auto k = sample_steps(0.0, 0.01, 1.0, 100.0);
    ASSERT_EQ(k.size(), 1u);
    EXPECT_EQ(k[0], 0);
}

TEST(Monitor, TermsAndSuprema) {
    Monitor m;
    m.sigma = 0.1;
    m.add(0.0, 4.0, 0.5, 0.2, 0.1);
    m.add(1.0, 16.0, 0.25, 0.1, 0.01);
    EXPECT_DOUBLE_EQ(m.sup_z, 1.0);
    EXPECT_DOUBLE_EQ(m.sup_l4, std::max(std::pow(4.0, 0.65) * 0.2, std::pow(16.0, 0.65) * 0.1));
    EXPECT_DOUBLE_EQ(m.sup_loc, std::max(std::pow(4.0, 1.025) * 0.1, std::pow(16.0, 1.025) * 0.01));
    EXPECT_TRUE(m.finite);
    m.add(2.0, 20.0, std::nan(""), 0.0, 0.0);
    EXPECT_FALSE(m.finite);
    EXPECT_EQ(m.to_json()["series"]["t"].size(), 3u);
}

TEST(Fits, EnvelopeFactorOfExactLawIsOne) {
    std::vector<double> c, z;
    for (double x = 1.0; x < 1e3; x *= 1.1) {
        c.push_back(x);
        z.push_back(1.0 / std::sqrt(x));
    }
    EXPECT_NEAR(envelope_factor(c, z, 1.0, 1e3), 1.0, 1e-14);
    z[5] *= 3.0;
    EXPECT_NEAR(envelope_factor(c, z, 1.0, 1e3), 3.0, 1e-12);
}

TEST(Fits, ShortWindowIsReportedNotThrown) {
    const std::vector<double> x = {1, 2, 3, 4}, y = {1, 0.5, 0.33, 0.25};
    const auto j = fit_or_error(x, y, 1.0, 4.0, FitOptions{});
    EXPECT_TRUE(j.contains("error"));
}

TEST(RunScenario, ShortResonanceRunWritesItsOutputs) {
    RunConfig cfg = parse_run_config(resolve_config(
        "", {"grid.r_max=60", "grid.n=599", "evolve.T=2", "evolve.dt=0.01", "evolve.stride=0.1", "scenario.eps=0.2",
}));
    const auto dir = (std::filesystem::temp_directory_path() / "nlsfgr_short_run").string();
    std::filesystem::remove_all(dir);
    const RunRecord rec = run_scenario(cfg, dir);
    for (const char* f : {"config.json", "frame.csv", "fits.json", "monitor.json", "fgr.json", "nf.csv"})
        EXPECT_TRUE(std::filesystem::exists(dir + "/" + f)) << f;
    ASSERT_FALSE(rec.rows.empty());
    EXPECT_NEAR(rec.rows.front().t, 0.0, 0.0);
    EXPECT_NEAR(std::abs(rec.rows.front().z), 0.2, 2e-3);
    EXPECT_TRUE(rec.complete);
    EXPECT_TRUE(rec.monitor["finite"].get<bool>());
    const io::CsvTable table = io::read_csv(dir + "/frame.csv");
    EXPECT_EQ(table.rows.size(), rec.rows.size());
}
