#include <doctest.h>

#include <cmath>

#include "pforge/channel.hpp"
#include "pforge/errors.hpp"

using namespace pforge;

TEST_CASE("generate_channel is deterministic in (q, n, seed)") {
  const ChannelMatrix a = generate_channel(4, 16, 1234);
  const ChannelMatrix b = generate_channel(4, 16, 1234);
  REQUIRE(a.rows() == 4);
  REQUIRE(a.cols() == 16);
  CHECK(a == b);
  CHECK(generate_channel(4, 16, 1235) != a);
}

TEST_CASE("generated entries have unit mean power") {
  // Monte-Carlo check of the CN(0,1) convention: E|h|^2 = 1.
  double power = 0.0;
  long count = 0;
  for (int s = 0; s < 250; ++s) {
    const ChannelMatrix h = generate_channel(50, 80, 777 + s);  // 4000 entries per draw
    power += h.squaredNorm();
    count += h.size();
  }
  REQUIRE(count == 1000000);
  CHECK(std::abs(power / count - 1.0) < 0.01);
}

TEST_CASE("invalid dimensions are rejected") {
  CHECK_THROWS_AS(generate_channel(0, 16, 1), DimensionError);
  CHECK_THROWS_AS(generate_channel(4, 0, 1), DimensionError);
  CHECK_THROWS_AS(generate_channel(-1, 16, 1), DimensionError);
}

TEST_CASE("perturbations hit the requested norm exactly") {
  const ChannelMatrix h = generate_channel(4, 16, 5);
  const auto perturbed = perturb_channel(h, {5.0, 15}, 99);
  REQUIRE(perturbed.size() == 15);
  for (const auto& hi : perturbed) {
    const double d = (hi - h).squaredNorm();
    CHECK(std::abs(d - 5.0) <= 1e-12 * 5.0);
  }
}

TEST_CASE("perturbation norm holds across magnitudes") {
  const ChannelMatrix h = generate_channel(3, 7, 21);
  for (double delta : {1e-6, 0.37, 1.0, 123.0, 4.2e5}) {
    const auto perturbed = perturb_channel(h, {delta, 4}, 17);
    for (const auto& hi : perturbed) {
      const double d = (hi - h).squaredNorm();
      CHECK(std::abs(d - delta) <= 1e-12 * std::max(1.0, delta));
    }
  }
}

TEST_CASE("zero delta copies the channel") {
  const ChannelMatrix h = generate_channel(2, 3, 8);
  const auto copies = perturb_channel(h, {0.0, 3}, 1);
  REQUIRE(copies.size() == 3);
  for (const auto& c : copies) CHECK(c == h);
}

TEST_CASE("zero count gives empty list") {
  const ChannelMatrix h = generate_channel(2, 3, 8);
  CHECK(perturb_channel(h, {5.0, 0}, 1).empty());
}

TEST_CASE("negative delta is a parameter error") {
  const ChannelMatrix h = generate_channel(2, 3, 8);
  CHECK_THROWS_AS(perturb_channel(h, {-1.0, 2}, 1), ParameterError);
}

TEST_CASE("perturbations are deterministic per seed") {
  const ChannelMatrix h = generate_channel(4, 16, 5);
  const auto a = perturb_channel(h, {2.5, 6}, 31);
  const auto b = perturb_channel(h, {2.5, 6}, 31);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
