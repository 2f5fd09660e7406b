#include "parasrc/config.hpp"
#include "parasrc/error.hpp"

#include <gtest/gtest.h>

using namespace parasrc;

TEST(Config, PresetsAndOverrides) {
    const ProblemConfig c = parse_config(R"({"example": 2, "tau": 24, "mode": "hol", "gamma_f": 1e-3})");
    EXPECT_EQ(c.example, 2);
    EXPECT_EQ(c.truth, TruthKind::Forward);
    EXPECT_EQ(c.h_den, 20);
    EXPECT_EQ(c.tau_den, 24);
    EXPECT_EQ(c.mode, FormKind::Holder);
    EXPECT_EQ(c.gamma_f, 1e-3);
}

TEST(Config, JsonRoundTrip) {
    ProblemConfig c = example_config(3);
    c.mode = FormKind::Holder;
    c.gamma_u = 2e-4;
    c.omega0 = Box{0.3, 0.7, 0.3, 0.7};
    c.delta = 0.01;
    c.seed = 17;
    c.noise_placement = NoisePlacement::QuadraturePoint;
    const ProblemConfig back = parse_config(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    ASSERT_TRUE(back.omega0.has_value());
    EXPECT_EQ(back.omega0->y1, 0.7);
    EXPECT_EQ(back.noise_placement, NoisePlacement::QuadraturePoint);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse_config(R"({"exmaple": 1})"), InvalidArgument);
    EXPECT_THROW(parse_config(R"({"h": "ten"})"), InvalidArgument);
    EXPECT_THROW(parse_config(R"({"mode": "both"})"), InvalidArgument);
    EXPECT_THROW(parse_config(R"({"example": 4})"), InvalidArgument);
    EXPECT_THROW(parse_config(R"({"tau": 7})"), InvalidArgument);
    EXPECT_THROW(parse_config(R"({"gamma_f": 1e-3})"), InvalidArgument);
    EXPECT_THROW(parse_config(R"({"omega": [0.2]})"), InvalidArgument);
    EXPECT_THROW(parse_config("[1, 2]"), InvalidArgument);
    EXPECT_THROW(parse_config("{"), InvalidArgument);
    EXPECT_THROW(load_config("/nonexistent/config.json"), InvalidArgument);
}
