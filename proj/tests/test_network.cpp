#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "filt_snn/errors.hpp"
#include "filt_snn/network.hpp"

using namespace filt_snn;
using doctest::Approx;

namespace {

// 3 inputs -> 2 hidden -> 2 outputs, weights chosen so every non-input neuron fires.
Network toy_network() {
  Network net;
  net.topology = {{3, 2, 2}};
  net.weights = {Matrix(2, 3), Matrix(2, 2)};
  const double w1[2][3] = {{12.0, 8.0, 5.0}, {20.0, 0.0, 30.0}};
  const double w2[2][2] = {{25.0, 0.0}, {6.0, 20.0}};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) net.weights[0](i, j) = w1[i][j];
    for (int j = 0; j < 2; ++j) net.weights[1](i, j) = w2[i][j];
  }
  return net;
}

EncodedSample toy_sample() { return {{0.0, 1.0, std::nullopt}, 0}; }

void check_train(const SpikeTrain& got, const std::vector<double>& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == Approx(want[i]).epsilon(1e-12));
}

}  // namespace

TEST_CASE("forward pass matches the layer-by-layer reference") {
  const auto r = forward(toy_network(), toy_sample(), SimWindow{});
  REQUIRE(r.spikes.size() == 3);
  check_train(r.spikes[0][0], {0.0});
  check_train(r.spikes[0][1], {1.0});
  CHECK(r.spikes[0][2].empty());
  check_train(r.spikes[1][0], {3.4000000000000004});
  check_train(r.spikes[1][1], {2.9000000000000004});
  check_train(r.spikes[2][0], {5.5, 9.700000000000001});
  check_train(r.spikes[2][1], {5.0, 8.700000000000001});
  REQUIRE(r.decision.has_value());
  CHECK(*r.decision == 1);
}

TEST_CASE("dropped hidden neurons are silent and do not drive the next layer") {
  const std::vector<LayerMask> masks{{true, false}};
  const auto r = forward(toy_network(), toy_sample(), SimWindow{}, masks);
  CHECK(r.spikes[1][1].empty());
  CHECK_FALSE(r.spikes[1][0].empty());
  // output 1 now only sees hidden 0 through weight 6: sub-threshold
  CHECK(r.spikes[2][1].empty());
  CHECK(*r.decision == 0);
}

TEST_CASE("mask and channel shapes are checked") {
  const Network net = toy_network();
  CHECK_THROWS_AS(forward(net, EncodedSample{{0.0}, 0}, SimWindow{}), std::invalid_argument);
  const std::vector<LayerMask> bad{{true}};
  CHECK_THROWS_AS(forward(net, toy_sample(), SimWindow{}, bad), std::invalid_argument);
}

TEST_CASE("first to spike breaks ties by index and abstains on silence") {
  std::vector<SpikeTrain> out{SpikeTrain{}, SpikeTrain::single(2.0), SpikeTrain::single(2.0), SpikeTrain::single(3.0)};
  CHECK(first_to_spike(out) == 1u);
  std::vector<SpikeTrain> silent(4);
  CHECK_FALSE(first_to_spike(silent).has_value());
}

TEST_CASE("zero network abstains") {
  const Network net = init_weights(Topology{{3, 4, 2}}, 1, InitScheme::kZero);
  const auto r = forward(net, toy_sample(), SimWindow{});
  CHECK_FALSE(r.decision.has_value());
  for (const auto& t : r.spikes[1]) CHECK(t.empty());
}

TEST_CASE("scaled uniform init: range, mean, determinism") {
  const Topology topo{{784, 100, 10}};
  const Network a = init_weights(topo, 42);
  const Network b = init_weights(topo, 42);
  const Network c = init_weights(topo, 43);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  REQUIRE(a.weights.size() == 2);
  CHECK(a.weights[0].rows() == 100);
  CHECK(a.weights[0].cols() == 784);
  CHECK(a.weights[1].rows() == 10);
  for (std::size_t k = 0; k < 2; ++k) {
    const double center = scaled_uniform_center(topo.layer_sizes[k], k == 0 ? kInputActiveFraction : kHiddenActiveFraction, KernelParams{});
    double sum = 0.0;
    for (double w : a.weights[k].data()) {
      CHECK(w >= 0.0);
      CHECK(w <= 2.0 * center);
      sum += w;
    }
    const double mean = sum / static_cast<double>(a.weights[k].size());
    CHECK(mean == Approx(center).epsilon(0.1));
  }
  CHECK(scaled_uniform_center(784, 0.13, KernelParams{}) == Approx(15.0 / (0.13 * 784.0)));
}

TEST_CASE("init scheme names round-trip") {
  for (auto s : {InitScheme::kScaledUniform, InitScheme::kZero}) {
    CHECK(init_scheme_from_string(to_string(s)) == s);
  }
  CHECK_THROWS_AS(init_scheme_from_string("gaussian"), std::invalid_argument);
}

TEST_CASE("topology validation") {
  CHECK_THROWS_AS(Topology{{784}}.validate(), std::invalid_argument);
  CHECK_THROWS_AS((Topology{{784, 0, 10}}.validate()), std::invalid_argument);
  CHECK_NOTHROW((Topology{{2, 2}}.validate()));
}

TEST_CASE("checkpoint round trip is exact") {
  Network net = init_weights(Topology{{5, 3, 2}}, 9);
  net.weights[1](0, 1) = -0.1234567890123456789;
  net.params.tau_q = 7.5;
  std::stringstream buf;
  write_checkpoint(buf, net);
  const Network back = read_checkpoint(buf);
  CHECK(back == net);
}

TEST_CASE("corrupt checkpoints are data errors") {
  const Network net = init_weights(Topology{{4, 2}}, 3);
  std::stringstream good;
  write_checkpoint(good, net);
  const std::string bytes = good.str();

  SUBCASE("truncated") {
    std::stringstream in(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_checkpoint(in), DataError);
  }
  SUBCASE("bad magic") {
    std::string b = bytes;
    b[0] = 'X';
    std::stringstream in(b);
    CHECK_THROWS_AS(read_checkpoint(in), DataError);
  }
  SUBCASE("trailing bytes") {
    std::stringstream in(bytes + "x");
    CHECK_THROWS_AS(read_checkpoint(in), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/checkpoint.bin"), DataError);
  }
}
