#include "hessbound/error.hpp"
#include "hessbound/loss.hpp"
#include "hessbound/network.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace hessbound;

namespace {

LabeledDataset random_batch(Index n, Index dim, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> label(0, classes - 1);
  LabeledDataset d;
  d.X.resize(n, dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim; ++j) d.X(i, j) = g(rng);
  for (Index i = 0; i < n; ++i) d.y.push_back(label(rng));
  d.num_classes = classes;
  return d;
}

double max_relative_error(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("parameter count and layout") {
  const NetworkSpec spec{{2, 16, 16, 3}, Activation::relu};
  CHECK(spec.param_count() == 2 * 16 + 16 + 16 * 16 + 16 + 16 * 3 + 3);
  const ParamLayout layout(spec);
  REQUIRE(layout.layers().size() == 3);
  CHECK(layout.layers()[0].weight_offset == 0);
  CHECK(layout.layers()[0].bias_offset == 32);
  CHECK(layout.layers()[1].weight_offset == 48);
  CHECK(layout.size() == spec.param_count());
  CHECK(spec.num_hidden_layers() == 2);
}

TEST_CASE("spec validation") {
  for (const std::vector<Index>& widths : {std::vector<Index>{3}, std::vector<Index>{}, std::vector<Index>{2, 0, 3}}) {
    try {
      NetworkSpec{widths, Activation::relu}.validate();
      FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ShapeMismatch);
    }
  }
  CHECK_NOTHROW(NetworkSpec({4, 3}, Activation::relu).validate());
  CHECK(parse_activation("sigmoid") == Activation::sigmoid);
  CHECK_THROWS_AS(parse_activation("tanh"), Error);
}

TEST_CASE("forward pass matches a hand computation") {
  // 2 -> 2 -> 2 ReLU net; weights stored column-major per layer.
  const NetworkSpec spec{{2, 2, 2}, Activation::relu};
  // W1 = [[1, -1], [2, 0.5]], b1 = [0, -1], W2 = [[1, 1], [-1, 2]], b2 = [0.5, 0]
  Vector theta(12);
  theta << 1, 2, -1, 0.5, 0, -1, 1, -1, 1, 2, 0.5, 0;
  const Vector x{{1.0, 2.0}};
  // z1 = [1 - 2, 2 + 1 - 1] = [-1, 2], a1 = [0, 2]
  // z2 = [0 + 2 + 0.5, 0 + 4] = [2.5, 4]
  ForwardTrace trace;
  const Vector logits = forward(spec, theta, x, &trace);
  CHECK(logits(0) == doctest::Approx(2.5));
  CHECK(logits(1) == doctest::Approx(4.0));
  CHECK(trace.pre_activations[0](0) == doctest::Approx(-1.0));
  CHECK(trace.activations[1](0) == 0.0);
  CHECK(predict(spec, theta, x) == 1);

  const NetworkSpec sig{{2, 2, 2}, Activation::sigmoid};
  const Vector s = forward(sig, theta, x);
  const double h0 = 1 / (1 + std::exp(1.0)), h1 = 1 / (1 + std::exp(-2.0));
  CHECK(s(0) == doctest::Approx(h0 + h1 + 0.5));
  CHECK(s(1) == doctest::Approx(-h0 + 2 * h1));
}

TEST_CASE("forward_batch agrees with forward row by row") {
  const NetworkSpec spec{{3, 5, 4, 2}, Activation::relu};
  const Vector theta = init_params(spec, 4);
  const LabeledDataset d = random_batch(9, 3, 2, 5);
  const Matrix logits = forward_batch(spec, theta, d.X);
  for (Index i = 0; i < d.size(); ++i) {
    CHECK((logits.row(i).transpose() - forward(spec, theta, d.sample(i))).norm() < 1e-14);
  }
}

TEST_CASE("argmax breaks ties toward the smallest index") {
  CHECK(argmax(Vector{{1.0, 3.0, 3.0}}) == 1);
  CHECK(argmax(Vector{{2.0, 2.0}}) == 0);
}

TEST_CASE("initialization is seeded and bounded by 1/sqrt(fan_in)") {
  const NetworkSpec spec{{4, 8, 3}, Activation::relu};
  const Vector a = init_params(spec, 9);
  CHECK(a == init_params(spec, 9));
  CHECK(a != init_params(spec, 10));
  CHECK(a.head(4 * 8 + 8).cwiseAbs().maxCoeff() <= 0.5);
  CHECK(a.tail(8 * 3 + 3).cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
}

TEST_CASE("analytic gradient matches central differences") {
  for (Activation act : {Activation::relu, Activation::sigmoid}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const NetworkSpec spec{{2, 16, 16, 3}, act};
      const Vector theta = init_params(spec, seed);
      const LabeledDataset d = random_batch(8, 2, 3, 100 + seed);
      for (LossKind kind : {LossKind::cross_entropy, LossKind::nll}) {
        for (Reduction red : {Reduction::mean, Reduction::sum}) {
          const LossConfig lc{kind, red};
          const Vector g = grad_loss(spec, theta, d, lc);
          const Vector fd = oracle::fd_gradient([&](const Vector& t) { return batch_loss(spec, t, d, lc); }, theta);
          CHECK(max_relative_error(g, fd) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("zero hidden layers is plain softmax regression") {
  const NetworkSpec spec{{3, 4}, Activation::relu};
  const Vector theta = init_params(spec, 2);
  const LabeledDataset d = random_batch(6, 3, 4, 8);
  const Vector fd = oracle::fd_gradient([&](const Vector& t) { return batch_loss(spec, t, d); }, theta);
  CHECK(max_relative_error(grad_loss(spec, theta, d), fd) < 1e-7);
}

TEST_CASE("sample gradient equals the batch gradient of a single sample") {
  const NetworkSpec spec{{2, 6, 3}, Activation::relu};
  const Vector theta = init_params(spec, 1);
  const LabeledDataset d = random_batch(5, 2, 3, 2);
  const LabeledDataset one = d.subset({3});
  CHECK((sample_gradient(spec, theta, d.sample(3), d.y[3]) - grad_loss(spec, theta, one)).norm() < 1e-14);
}

TEST_CASE("shape and label errors") {
  const NetworkSpec spec{{2, 4, 3}, Activation::relu};
  const Vector theta = init_params(spec, 0);
  try {
    forward(spec, theta, Vector::Zero(3));
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ShapeMismatch);
  }
  try {
    forward(spec, Vector::Zero(5), Vector::Zero(2));
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ShapeMismatch);
  }
  LabeledDataset d = random_batch(3, 2, 3, 0);
  d.y[1] = 3;
  try {
    grad_loss(spec, theta, d);
    FAIL("expected InvalidLabel");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidLabel);
  }
}

TEST_CASE("alpha scaling keeps every output of a one-hidden-layer ReLU net") {
  const NetworkSpec spec{{2, 32, 3}, Activation::relu};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Vector theta = init_params(spec, seed);
    for (double alpha : {2.0, 0.3, 7.5}) {
      const Vector scaled = alpha_scale(theta, alpha, spec);
      CHECK((scaled - theta).norm() > 0);
      const LabeledDataset d = random_batch(200, 2, 3, seed + 50);
      const Matrix diff = forward_batch(spec, theta, d.X) - forward_batch(spec, scaled, d.X);
      CHECK(diff.cwiseAbs().maxCoeff() <= 1e-12 * (1 + forward_batch(spec, theta, d.X).cwiseAbs().maxCoeff()));
    }
  }
  try {
    alpha_scale(init_params(NetworkSpec{{2, 4, 4, 3}, Activation::relu}, 0), 2.0,
                NetworkSpec{{2, 4, 4, 3}, Activation::relu});
    FAIL("expected UnsupportedArchitecture");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedArchitecture);
  }
  try {
    alpha_scale(init_params(NetworkSpec{{2, 4, 3}, Activation::sigmoid}, 0), 2.0,
                NetworkSpec{{2, 4, 3}, Activation::sigmoid});
    FAIL("expected UnsupportedArchitecture");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedArchitecture);
  }
}

TEST_CASE("accuracy counts correct predictions") {
  const NetworkSpec spec{{1, 2}, Activation::relu};
  Vector theta(4);
  theta << -1, 1, 0, 0;  // logits (-x, x)
  LabeledDataset d;
  d.X = Matrix{{-2.0}, {-1.0}, {1.0}, {3.0}};
  d.y = {0, 1, 1, 1};
  d.num_classes = 2;
  CHECK(accuracy(spec, theta, d) == doctest::Approx(0.75));
}
