#include <gtest/gtest.h>

#include "support.hpp"
#include "ttcstop/passk.hpp"
#include "ttcstop/simulator.hpp"

using namespace ttcstop;

namespace {
ProblemSamples row(const std::string& id, int n, int c) {
  ProblemSamples r{id, std::vector<std::uint8_t>(n, 0)};
  for (int i = 0; i < c; ++i) r.outcomes[i] = 1;
  return r;
}
}  // namespace

TEST(PassAtK, MatchesSubsetEnumerationExactly) {
  for (int n = 1; n <= 12; ++n) {
    for (int c = 0; c <= n; ++c) {
      for (int k = 1; k <= n; ++k) {
        EXPECT_EQ(pass_at_k(n, c, k), ttcstop::test_support::passk_enumerate(n, c, k))
            << "n=" << n << " c=" << c << " k=" << k;
      }
    }
  }
}

TEST(PassAtK, Boundaries) {
  for (int n = 1; n <= 20; ++n) {
    for (int k = 1; k <= n; ++k) {
      EXPECT_EQ(pass_at_k(n, 0, k), 0.0);
      EXPECT_EQ(pass_at_k(n, n, k), 1.0);
    }
  }
  EXPECT_DOUBLE_EQ(pass_at_k(5, 2, 2), 0.7);
  EXPECT_THROW(pass_at_k(4, 1, 0), Error);
  EXPECT_THROW(pass_at_k(4, 5, 1), Error);
  try {
    pass_at_k(4, 1, 5);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kKExceedsSamples);
  }
}

TEST(PassAtK, LargeNProductPathIsMonotoneAndBounded) {
  const std::int64_t n = 1000;
  double prev = 0.0;
  for (std::int64_t k = 1; k <= n; k *= 2) {
    const double v = pass_at_k(n, 17, k);
    EXPECT_GE(v, prev);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
  EXPECT_NEAR(pass_at_k(n, 17, 1), 0.017, 1e-15);
  // continuity across the exact/product switch
  EXPECT_NEAR(pass_at_k(56, 7, 5), pass_at_k(57, 7, 5), 0.03);
}

TEST(PassOverDataset, Examples) {
  EXPECT_DOUBLE_EQ(passk_over_dataset(CorrectnessMatrix({row("a", 5, 2)}), 2), 70.0);
  EXPECT_EQ(passk_over_dataset(CorrectnessMatrix({row("a", 4, 0), row("b", 6, 0)}), 3), 0.0);
  const CorrectnessMatrix m({row("a", 4, 1), row("b", 8, 6), row("c", 5, 0)});
  EXPECT_NEAR(passk_over_dataset(m, 1), 100.0 * (0.25 + 0.75 + 0.0) / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(passk_over_dataset(CorrectnessMatrix({row("a", 5, 2)}), 3), 90.0);
}

TEST(PassOverDataset, Errors) {
  EXPECT_THROW(passk_over_dataset(CorrectnessMatrix(), 1), Error);
  EXPECT_THROW(passk_over_dataset(CorrectnessMatrix({row("a", 2, 1)}), 3), Error);
  EXPECT_THROW(CorrectnessMatrix({ProblemSamples{"x", {}}}), Error);
}

TEST(ProbeSeries, NondecreasingInK) {
  SimSpec spec;
  spec.checkpoint_flops = {4e20};
  spec.seed = 8;
  const auto m = sample_matrix(spec, 0);
  const std::vector<std::int64_t> ks{1, 2, 4};
  const auto pts = probe_series(m, ks);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_LE(pts[0].y, pts[1].y);
  EXPECT_LE(pts[1].y, pts[2].y);
  EXPECT_EQ(pts[2].x, 4.0);
}
