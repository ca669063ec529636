#include <gtest/gtest.h>

#include "lms/config.hpp"

using namespace lms;

TEST(Config, DefaultsValidate) {
  Config c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.dim, 200);
  EXPECT_DOUBLE_EQ(c.alpha, 0.3);
  EXPECT_DOUBLE_EQ(c.beta, 0.7);
}

TEST(Config, SetAndAliases) {
  Config c;
  c.set("k", "9");
  c.set("lr", "0.01");
  c.set("variant", "-TGL");
  c.set("aggregation", "sum");
  c.set("strict_indicator", "yes");
  EXPECT_EQ(c.history_length, 9);
  EXPECT_DOUBLE_EQ(c.learning_rate, 0.01);
  EXPECT_EQ(c.variant, Variant::no_tgl);
  EXPECT_EQ(c.aggregation, Aggregation::sum);
  EXPECT_TRUE(c.strict_indicator);
  EXPECT_THROW(c.set("nope", "1"), ConfigError);
  EXPECT_THROW(c.set("dim", "12abc"), ConfigError);
  EXPECT_THROW(c.set("variant", "-XYZ"), ConfigError);
}

TEST(Config, TextRoundTrip) {
  Config c;
  c.alpha = 0.1;
  c.learning_rate = 3e-4;
  c.periods = "2,5";
  c.variant = Variant::gate_linear;
  c.seed = 123456789012345ULL;
  Config back = Config::parse_text(c.to_text());
  EXPECT_EQ(back.to_map(), c.to_map());
  EXPECT_DOUBLE_EQ(back.alpha, 0.1);
  EXPECT_TRUE(config_diff(c, back).empty());
}

TEST(Config, MergeKeepsOtherValues) {
  Config c;
  c.dim = 16;
  c.merge_text("# comment\nalpha = 0.5\n\n  epochs=3  \n");
  EXPECT_EQ(c.dim, 16);
  EXPECT_DOUBLE_EQ(c.alpha, 0.5);
  EXPECT_EQ(c.epochs, 3);
  EXPECT_THROW(c.merge_text("alpha 0.5\n"), ConfigError);
}

TEST(Config, ValidationErrors) {
  auto bad = [](auto mutate) {
    Config c;
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  bad([](Config& c) { c.alpha = 1.2; });
  bad([](Config& c) { c.beta = -0.5; });
  bad([](Config& c) { c.dim = 0; });
  bad([](Config& c) { c.kernel_width = 4; });
  bad([](Config& c) { c.dropout = 1.0; });
  bad([](Config& c) { c.periods = "3,x"; });
  bad([](Config& c) { c.learning_rate = 0.0; });
  bad([](Config& c) { c.static_graph = true; });
}

TEST(Variant, NamesRoundTrip) {
  const auto names = variant_names();
  EXPECT_EQ(names.size(), 9u);
  EXPECT_EQ(names.front(), "full");
  for (const auto& n : names) {
    auto v = parse_variant(n);
    ASSERT_TRUE(v) << n;
    EXPECT_EQ(variant_name(*v), n);
  }
  EXPECT_EQ(parse_variant("LMS"), Variant::full);
  EXPECT_FALSE(parse_variant("-FOO"));
}

TEST(Variant, AblationDiffersInOneKey) {
  Config base;
  for (const auto& n : variant_names()) {
    if (n == "full") continue;
    Config c = base;
    c.set("variant", n);
    EXPECT_EQ(config_diff(base, c), (std::vector<std::string>{"variant"})) << n;
  }
}
