#include "parasrc/error.hpp"
#include "parasrc/inverse.hpp"
#include "parasrc/observation.hpp"

#include <gtest/gtest.h>

using namespace parasrc;

TEST(Noise, ZeroLevelLeavesValuesUntouched) {
    const NoiseModel n(0.0, 5);
    for (std::uint64_t k = 0; k < 100; ++k) EXPECT_EQ(n.apply(ObservedField::Q, k, 1.2345), 1.2345);
}

TEST(Noise, MultiplierHasRequestedSpread) {
    const NoiseModel n(0.02, 42);
    const int count = 10000;
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < count; ++k) {
        const double m = n.multiplier(ObservedField::P, k);
        sum += m;
        sq += m * m;
    }
    const double mean = sum / count;
    const double sd = std::sqrt(sq / count - mean * mean);
    EXPECT_NEAR(mean, 1.0, 5e-4);
    EXPECT_NEAR(sd, 0.02, 0.02 * 0.05);
}

TEST(Noise, RealizationIsKeyedAndReproducible) {
    const NoiseModel a(0.01, 7), b(0.01, 7), c(0.01, 8);
    EXPECT_EQ(a.standard_normal(ObservedField::Q, 123), b.standard_normal(ObservedField::Q, 123));
    EXPECT_NE(a.standard_normal(ObservedField::Q, 123), c.standard_normal(ObservedField::Q, 123));
    EXPECT_NE(a.standard_normal(ObservedField::Q, 123), a.standard_normal(ObservedField::DtQ, 123));
    // Order of evaluation does not matter.
    const double late = a.standard_normal(ObservedField::Rx, 9);
    for (int k = 0; k < 50; ++k) a.standard_normal(ObservedField::Rx, k);
    EXPECT_EQ(a.standard_normal(ObservedField::Rx, 9), late);
}

TEST(Noise, InjectRejectsNegativeLevel) {
    EXPECT_THROW(inject_noise(ObservationData{}, -0.1, 1), InvalidArgument);
}

TEST(Noise, RealizedDataUnchangedWithoutNoise) {
    ProblemConfig c = example_config(1);
    c.tau_den = 20;
    const ProblemSetup s = synthesize_data_analytic(c);
    const Discretization d = make_discretization(c);
    const ObservationData data = realize_noise(c, s, d);
    for (double x : {0.25, 0.5}) {
        EXPECT_EQ(data.q({x, 0}, 0.45), s.data.q({x, 0}, 0.45));
        EXPECT_EQ(data.p({x, 0}), s.data.p({x, 0}));
    }
}

TEST(Noise, NodalRealizationPerturbsAtTheRequestedScale) {
    ProblemConfig c = example_config(1);
    c.h_den = 20;
    c.tau_den = 20;
    c.delta = 0.01;
    const ProblemSetup s = synthesize_data_analytic(c);
    const Discretization d = make_discretization(c);
    const ObservationData a = realize_noise(c, s, d), b = realize_noise(c, s, d);
    double rel = 0.0;
    int n = 0;
    for (double x = 0.225; x < 0.8; x += 0.05, ++n) {
        const double exact = s.data.q({x, 0}, 0.52);
        rel += std::abs(a.q({x, 0}, 0.52) / exact - 1.0);
        EXPECT_EQ(a.q({x, 0}, 0.52), b.q({x, 0}, 0.52));
    }
    rel /= n;
    EXPECT_GT(rel, 1e-3);
    EXPECT_LT(rel, 3e-2);
}
