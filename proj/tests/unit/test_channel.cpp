#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mecsim/channel.hpp"
#include "mecsim/errors.hpp"

using namespace mecsim;

namespace {

ChannelParams one_device(double distance) {
  ChannelParams p;
  p.distance_m = {distance};
  return p;
}

}  // namespace

TEST_CASE("mean gain examples") {
  CHECK(mean_gain(one_device(200), 0) == doctest::Approx(5.997e-11).epsilon(1e-3));
  ChannelParams linear = one_device(200);
  linear.path_loss_exp = 1;
  CHECK(mean_gain(linear, 0) == doctest::Approx(3.914e-4).epsilon(1e-3));
  CHECK(fixtures::close(mean_gain(one_device(200), 0) / mean_gain(one_device(400), 0), 8.0, 1e-12));
  CHECK_THROWS_AS(mean_gain(one_device(200), 1), std::out_of_range);
}

TEST_CASE("noise density conversion") {
  CHECK(dbm_per_hz_to_watt_per_hz(-174) == doctest::Approx(3.98e-21).epsilon(1e-3));
  CHECK(fixtures::close(dbm_per_hz_to_watt_per_hz(-174), std::pow(10.0, (-174.0 - 30.0) / 10.0)));
}

TEST_CASE("Rayleigh samples") {
  const auto params = one_device(180);
  const double mean = mean_gain(params, 0);
  Rng rng = make_rng(5, Stream::kChannel);
  const int n = 100000;
  double sum = 0.0;
  bool positive = true;
  for (int i = 0; i < n; ++i) {
    const double h = sample_gain(params, 0, rng);
    positive = positive && h > 0.0;
    sum += h;
  }
  CHECK(positive);
  // Exp(1) scaled by the mean: standard deviation equals the mean.
  CHECK(std::abs(sum / n - mean) <= 3.0 * mean / std::sqrt(n));

  Rng a = make_rng(5, Stream::kChannel);
  Rng b = make_rng(5, Stream::kChannel);
  for (int i = 0; i < 10; ++i) CHECK(sample_gain(params, 0, a) == sample_gain(params, 0, b));
}

TEST_CASE("uplink rate") {
  CHECK(uplink_rate(0.0, 1e-12, 2.5e5, 3.98e-21) == 0.0);
  CHECK(uplink_rate(0.3, 1e-12, 2.5e5, 3.98e-21) == doctest::Approx(2.06e6).epsilon(1e-2));
  CHECK(fixtures::close(uplink_rate(0.3, 1e-12, 2.5e5, 3.98e-21),
                        2.5e5 * std::log2(1 + 0.3 * 1e-12 / (2.5e5 * 3.98e-21))));
  for (double p : {1e-6, 1e-3, 0.1, 0.3, 2.0}) {
    CHECK(uplink_rate(2 * p, 6e-11, 2.5e5, 3.98e-21) < 2 * uplink_rate(p, 6e-11, 2.5e5, 3.98e-21));
  }
  double prev = 0.0;
  for (int i = 1; i < 200; ++i) {
    const double p = 0.3 * i / 200.0;
    const double h = 0.3 / 200.0;
    const double r = uplink_rate(p, 6e-11, 2.5e5, 3.98e-21);
    CHECK(r > prev);
    const double second = uplink_rate(p + h, 6e-11, 2.5e5, 3.98e-21) - 2 * r + uplink_rate(p - h, 6e-11, 2.5e5, 3.98e-21);
    CHECK(second <= 1e-9 * r);
    prev = r;
  }
}

TEST_CASE("power_for_rate inverts the rate") {
  for (double p : {1e-9, 1e-4, 0.05, 0.3, 1.0}) {
    const double r = uplink_rate(p, 6e-11, 2.5e5, 3.98e-21);
    CHECK(fixtures::close(power_for_rate(r, 6e-11, 2.5e5, 3.98e-21), p, 1e-9));
  }
  CHECK(power_for_rate(0.0, 6e-11, 2.5e5, 3.98e-21) == 0.0);
}

TEST_CASE("distances and validation") {
  Rng rng = make_rng(1, Stream::kDistance);
  const auto d = draw_distances(100, 150, 250, rng);
  REQUIRE(d.size() == 100);
  for (double x : d) CHECK((x >= 150 && x <= 250));
  ChannelParams p = one_device(300);
  CHECK_THROWS_AS(validate(p), ContractError);
  p.distance_m = {200};
  p.carrier_hz = -1;
  CHECK_THROWS_AS(validate(p), ContractError);
  ChannelParams four;
  four.distance_m = {160, 170, 180, 190};
  CHECK(four.per_device_bandwidth_hz() == 2.5e5);
}
