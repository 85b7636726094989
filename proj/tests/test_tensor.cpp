#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "yieldcast/common.hpp"
#include "yieldcast/tensor.hpp"

using namespace yieldcast;
using namespace yieldcast::tensor;

namespace {

Tensor random_tensor(Rng& rng, int rows, int cols, double lo = -3.0,
                     double hi = 3.0, double min_abs = 0.0) {
  Tensor t = Tensor::zeros(rows, cols);
  double* d = t.mutable_data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    double x;
    do {
      x = lo + (hi - lo) * rng.next_unit();
    } while (std::abs(x) < min_abs);
    d[i] = x;
  }
  return t;
}

std::vector<ParamCoordinate> all_coords(const ParamStore& params) {
  std::vector<ParamCoordinate> coords;
  for (const auto& name : params.names()) {
    for (std::size_t i = 0; i < params.at(name).size(); ++i) {
      coords.push_back({name, i});
    }
  }
  return coords;
}

// Runs the finite-difference oracle over every coordinate of `params` and
// asserts the analytic gradient matches to the spec tolerance.
void check_op_gradient(const ParamStore& params, const LossFn& loss_fn,
                       double tolerance = 1e-4) {
  auto coords = all_coords(params);
  REQUIRE(coords.size() >= 100);  // coverage floor per op
  auto report = grad_check(params, loss_fn, coords, 1e-5);
  CAPTURE(report.worst.name);
  CAPTURE(report.worst.index);
  CAPTURE(report.worst_analytic);
  CAPTURE(report.worst_numeric);
  CHECK(report.max_rel_err < tolerance);
}

}  // namespace

TEST_CASE("tensor basics and shape errors") {
  auto t = Tensor::from(2, 2, {1, 2, 3, 4});
  CHECK(t.at(1, 0) == 3.0);
  CHECK(Tensor::scalar(7.0).item() == 7.0);
  CHECK_THROWS_AS(Tensor::from(2, 2, {1, 2, 3}), Error);
  CHECK_THROWS_AS(Tensor::zeros(0, 3), Error);
  CHECK_THROWS_AS(t.item(), Error);
}

TEST_CASE("matmul against identity and hand values") {
  Tape tape;
  int eye = tape.constant(Tensor::from(2, 2, {1, 0, 0, 1}));
  int a = tape.constant(Tensor::from(2, 2, {1.5, -2.0, 3.25, 0.5}));
  int prod = tape.matmul(eye, a);
  CHECK(tape.value(prod).bitwise_equal(tape.value(a)));

  int b = tape.constant(Tensor::from(2, 3, {1, 2, 3, 4, 5, 6}));
  int ab = tape.matmul(a, b);
  // row 0: 1.5*[1,2,3] + (-2)*[4,5,6] = [-6.5, -7, -7.5]
  CHECK(tape.value(ab).at(0, 0) == doctest::Approx(-6.5));
  CHECK(tape.value(ab).at(0, 1) == doctest::Approx(-7.0));
  CHECK(tape.value(ab).at(0, 2) == doctest::Approx(-7.5));

  CHECK_THROWS_AS(tape.matmul(a, tape.constant(Tensor::zeros(3, 2))), Error);
}

TEST_CASE("softmax of a constant row is uniform, rows sum to one") {
  Tape tape;
  int x = tape.constant(Tensor::from(1, 3, {0, 0, 0}));
  int s = tape.softmax(x);
  for (int c = 0; c < 3; ++c) {
    CHECK(tape.value(s).at(0, c) == doctest::Approx(1.0 / 3.0));
  }

  Rng rng(5);
  Tensor noisy = random_tensor(rng, 17, 9, -30.0, 30.0);
  Tape tape2;
  int sm = tape2.softmax(tape2.constant(noisy));
  for (int r = 0; r < 17; ++r) {
    double total = 0.0;
    for (int c = 0; c < 9; ++c) total += tape2.value(sm).at(r, c);
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("masked softmax zeroes masked columns and never reads them") {
  Tape tape;
  Tensor logits = Tensor::from(2, 4, {1.0, 50.0, 2.0, 3.0,
                                      0.5, -10.0, 0.5, 0.5});
  int x = tape.constant(logits);
  int s = tape.masked_softmax(x, {1, 0, 1, 1});
  CHECK(tape.value(s).at(0, 1) == 0.0);
  CHECK(tape.value(s).at(1, 1) == 0.0);
  double total = 0.0;
  for (int c = 0; c < 4; ++c) total += tape.value(s).at(0, c);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // altering a masked logit changes nothing
  Tensor poked = logits;
  poked.set(0, 1, 1e18);
  Tape tape2;
  int s2 = tape2.masked_softmax(tape2.constant(poked), {1, 0, 1, 1});
  CHECK(tape2.value(s2).bitwise_equal(tape.value(s)));

  CHECK_THROWS_AS(tape.masked_softmax(x, {0, 0, 0, 0}), Error);
}

TEST_CASE("layer_norm output has zero row mean with unit gain") {
  Rng rng(6);
  Tape tape;
  int x = tape.constant(random_tensor(rng, 11, 16));
  int gain = tape.constant(Tensor::full(1, 16, 1.0));
  int bias = tape.constant(Tensor::zeros(1, 16));
  int y = tape.layer_norm(x, gain, bias);
  for (int r = 0; r < 11; ++r) {
    double mean = 0.0;
    double var = 0.0;
    for (int c = 0; c < 16; ++c) mean += tape.value(y).at(r, c);
    mean /= 16;
    CHECK(std::abs(mean) <= 1e-9);
    for (int c = 0; c < 16; ++c) {
      var += (tape.value(y).at(r, c) - mean) * (tape.value(y).at(r, c) - mean);
    }
    CHECK(var / 16 == doctest::Approx(1.0).epsilon(1e-3));  // eps shrinks it
  }
}

TEST_CASE("mse_loss identities") {
  Tape tape;
  int x = tape.constant(Tensor::from(1, 4, {1, -2, 3, 0.5}));
  CHECK(tape.value(tape.mse_loss(x, x)).item() == 0.0);

  int p = tape.constant(Tensor::from(1, 2, {1, 2}));
  int t = tape.constant(Tensor::from(1, 2, {0, 0}));
  CHECK(tape.value(tape.mse_loss(p, t)).item() == doctest::Approx(2.5));
}

TEST_CASE("dropout: train scaling, eval identity, keyed determinism") {
  Rng rng(7);
  Tensor x = random_tensor(rng, 8, 8);
  Tape tape;
  int xid = tape.constant(x);
  CHECK(tape.dropout(xid, 0.4, false, 1) == xid);  // identity, no node
  CHECK(tape.dropout(xid, 0.0, true, 1) == xid);

  int d1 = tape.dropout(xid, 0.4, true, 99);
  int d2 = tape.dropout(xid, 0.4, true, 99);
  int d3 = tape.dropout(xid, 0.4, true, 100);
  CHECK(tape.value(d1).bitwise_equal(tape.value(d2)));
  CHECK_FALSE(tape.value(d1).bitwise_equal(tape.value(d3)));

  // kept activations are scaled by 1/(1-rate)
  const double keep = 1.0 / 0.6;
  bool saw_zero = false;
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      double v = tape.value(d1).at(r, c);
      if (v == 0.0) {
        saw_zero = true;
      } else {
        CHECK(v == doctest::Approx(x.at(r, c) * keep));
      }
    }
  }
  CHECK(saw_zero);

  CHECK_THROWS_AS(tape.dropout(xid, 1.0, true, 1), Error);
}

TEST_CASE("non-finite op outputs are rejected") {
  Tape tape;
  int x = tape.constant(Tensor::full(1, 2, 1e308));
  CHECK_THROWS_WITH_AS(tape.add(x, x), doctest::Contains("NonFinite"), Error);
  CHECK_THROWS_AS(tape.constant(Tensor::full(
                      1, 1, std::numeric_limits<double>::quiet_NaN())),
                  Error);
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  int x = tape.constant(Tensor::zeros(2, 2));
  CHECK_THROWS_WITH_AS(tape.backward(x), doctest::Contains("NotScalarLoss"),
                       Error);
}

TEST_CASE("backward: hand chain rule for mse(w*x, y)") {
  ParamStore params;
  params.add("w", Tensor::scalar(1.0));
  Tape tape;
  int w = tape.param(params, "w");
  int x = tape.constant(Tensor::scalar(2.0));
  int y = tape.constant(Tensor::scalar(4.0));
  int pred = tape.matmul(w, x);
  int loss = tape.mse_loss(pred, y);
  tape.backward(loss);
  auto grads = tape.gradients();
  // d/dw (wx - y)^2 = 2(wx - y)x = 2*(2-4)*2 = -8
  CHECK(grads.at("w").item() == doctest::Approx(-8.0));
}

TEST_CASE("backward: unused parameter gets a zero gradient") {
  ParamStore params;
  params.add("used", Tensor::scalar(3.0));
  params.add("unused", Tensor::from(2, 2, {1, 2, 3, 4}));
  Tape tape;
  int w = tape.param(params, "used");
  int dead = tape.param(params, "unused");
  (void)dead;
  int loss = tape.mse_loss(w, tape.constant(Tensor::scalar(0.0)));
  tape.backward(loss);
  auto grads = tape.gradients();
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(grads.at("unused").data()[i] == 0.0);
  }
  CHECK(grads.at("used").item() == doctest::Approx(6.0));
}

TEST_CASE("backward: add distributes the gradient unchanged") {
  ParamStore params;
  params.add("a", Tensor::from(1, 3, {1, 2, 3}));
  params.add("b", Tensor::from(1, 3, {4, 5, 6}));
  Tape tape;
  int a = tape.param(params, "a");
  int b = tape.param(params, "b");
  int s = tape.add(a, b);
  // loss = sum of elements via mse against 0 scaled: use mse directly
  int loss = tape.mse_loss(s, tape.constant(Tensor::zeros(1, 3)));
  tape.backward(loss);
  auto grads = tape.gradients();
  // dloss/ds = 2s/3; d(a+b)/da = 1 elementwise
  for (int c = 0; c < 3; ++c) {
    double want = 2.0 * tape.value(s).at(0, c) / 3.0;
    CHECK(grads.at("a").at(0, c) == doctest::Approx(want));
    CHECK(grads.at("b").at(0, c) == doctest::Approx(want));
  }
}

TEST_CASE("grad_check: quadratic has near-exact finite differences") {
  ParamStore params;
  params.add("w", Tensor::scalar(3.0));
  LossFn f = [](Tape& tape, const ParamStore& p) {
    int w = tape.param(p, "w");
    return tape.mse_loss(w, tape.constant(Tensor::scalar(0.0)));
  };
  std::vector<ParamCoordinate> coords = {{"w", 0}};
  auto report = grad_check(params, f, coords, 1e-5);
  CHECK(report.worst_analytic == doctest::Approx(6.0));
  CHECK(report.worst_numeric == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(report.max_rel_err < 1e-9);
}

TEST_CASE("grad_check: constant function has zero error") {
  ParamStore params;
  params.add("w", Tensor::scalar(1.0));
  LossFn f = [](Tape& tape, const ParamStore&) {
    int c = tape.constant(Tensor::scalar(5.0));
    return tape.mse_loss(c, tape.constant(Tensor::scalar(0.0)));
  };
  std::vector<ParamCoordinate> coords = {{"w", 0}};
  auto report = grad_check(params, f, coords, 1e-5);
  CHECK(report.max_rel_err == 0.0);
  CHECK(report.worst_analytic == 0.0);
  CHECK(report.worst_numeric == 0.0);
}

TEST_CASE("grad_check: nondeterministic loss is rejected") {
  ParamStore params;
  params.add("w", Tensor::scalar(1.0));
  int counter = 0;
  LossFn f = [&counter](Tape& tape, const ParamStore& p) {
    int w = tape.param(p, "w");
    int jitter = tape.constant(Tensor::scalar(0.001 * counter++));
    return tape.mse_loss(tape.add(w, jitter),
                         tape.constant(Tensor::scalar(0.0)));
  };
  std::vector<ParamCoordinate> coords = {{"w", 0}};
  CHECK_THROWS_WITH_AS(grad_check(params, f, coords, 1e-5),
                       doctest::Contains("NondeterministicFunction"), Error);
}

// Finite-difference oracle per forward op, ≥100 coordinates each.

TEST_CASE("fd oracle: matmul") {
  Rng rng(100);
  ParamStore params;
  params.add("A", random_tensor(rng, 8, 10));
  params.add("B", random_tensor(rng, 10, 6));
  Tensor target = random_tensor(rng, 8, 6);
  check_op_gradient(params, [target](Tape& t, const ParamStore& p) {
    int prod = t.matmul(t.param(p, "A"), t.param(p, "B"));
    return t.mse_loss(prod, t.constant(target));
  });
}

TEST_CASE("fd oracle: matmul_nt") {
  Rng rng(101);
  ParamStore params;
  params.add("A", random_tensor(rng, 8, 10));
  params.add("B", random_tensor(rng, 7, 10));
  Tensor target = random_tensor(rng, 8, 7);
  check_op_gradient(params, [target](Tape& t, const ParamStore& p) {
    int prod = t.matmul_nt(t.param(p, "A"), t.param(p, "B"));
    return t.mse_loss(prod, t.constant(target));
  });
}

TEST_CASE("fd oracle: add with row-vector broadcast") {
  Rng rng(102);
  ParamStore params;
  params.add("X", random_tensor(rng, 10, 10));
  params.add("v", random_tensor(rng, 1, 10));
  Tensor target = random_tensor(rng, 10, 10);
  check_op_gradient(params, [target](Tape& t, const ParamStore& p) {
    int s = t.add_rowvec(t.param(p, "X"), t.param(p, "v"));
    return t.mse_loss(s, t.constant(target));
  });
}

TEST_CASE("fd oracle: relu") {
  Rng rng(103);
  ParamStore params;
  // keep activations away from the kink at 0
  params.add("X", random_tensor(rng, 11, 10, -3.0, 3.0, 0.05));
  Tensor target = random_tensor(rng, 11, 10);
  check_op_gradient(params, [target](Tape& t, const ParamStore& p) {
    return t.mse_loss(t.relu(t.param(p, "X")), t.constant(target));
  });
}

TEST_CASE("fd oracle: gelu") {
  Rng rng(104);
  ParamStore params;
  params.add("X", random_tensor(rng, 11, 10));
  Tensor target = random_tensor(rng, 11, 10);
  check_op_gradient(params, [target](Tape& t, const ParamStore& p) {
    return t.mse_loss(t.gelu(t.param(p, "X")), t.constant(target));
  });
}

TEST_CASE("fd oracle: softmax") {
  Rng rng(105);
  ParamStore params;
  params.add("X", random_tensor(rng, 10, 12));
  Tensor target = random_tensor(rng, 10, 12, 0.0, 1.0);
  check_op_gradient(params, [target](Tape& t, const ParamStore& p) {
    return t.mse_loss(t.softmax(t.param(p, "X")), t.constant(target));
  });
}

TEST_CASE("fd oracle: masked softmax") {
  Rng rng(106);
  ParamStore params;
  params.add("X", random_tensor(rng, 10, 12));
  Tensor target = random_tensor(rng, 10, 12, 0.0, 1.0);
  std::vector<std::uint8_t> mask = {1, 1, 0, 1, 1, 1, 0, 1, 1, 1, 0, 1};
  check_op_gradient(params, [target, mask](Tape& t, const ParamStore& p) {
    return t.mse_loss(t.masked_softmax(t.param(p, "X"), mask),
                      t.constant(target));
  });
}

TEST_CASE("fd oracle: layer_norm") {
  Rng rng(107);
  ParamStore params;
  params.add("X", random_tensor(rng, 12, 10));
  params.add("gain", random_tensor(rng, 1, 10, 0.5, 1.5));
  params.add("bias", random_tensor(rng, 1, 10, -0.5, 0.5));
  Tensor target = random_tensor(rng, 12, 10);
  check_op_gradient(params, [target](Tape& t, const ParamStore& p) {
    int y = t.layer_norm(t.param(p, "X"), t.param(p, "gain"),
                         t.param(p, "bias"));
    return t.mse_loss(y, t.constant(target));
  });
}

TEST_CASE("fd oracle: embedding lookup with repeated ids") {
  Rng rng(108);
  ParamStore params;
  params.add("table", random_tensor(rng, 20, 6));
  std::vector<int> ids = {3, 3, 0, 19, 7, 3, 11, 0};
  Tensor target = random_tensor(rng, 8, 6);
  check_op_gradient(params, [target, ids](Tape& t, const ParamStore& p) {
    return t.mse_loss(t.embedding(t.param(p, "table"), ids),
                      t.constant(target));
  });
}

TEST_CASE("fd oracle: dropout with a fixed key") {
  Rng rng(109);
  ParamStore params;
  params.add("X", random_tensor(rng, 11, 10));
  Tensor target = random_tensor(rng, 11, 10);
  check_op_gradient(params, [target](Tape& t, const ParamStore& p) {
    int d = t.dropout(t.param(p, "X"), 0.3, true, 0xD20);
    return t.mse_loss(d, t.constant(target));
  });
}

TEST_CASE("fd oracle: slice/concat/scale composite") {
  Rng rng(110);
  ParamStore params;
  params.add("X", random_tensor(rng, 9, 12));
  Tensor target = random_tensor(rng, 1, 12);
  check_op_gradient(params, [target](Tape& t, const ParamStore& p) {
    int x = t.param(p, "X");
    int left = t.slice_cols(x, 0, 5);
    int right = t.slice_cols(x, 5, 12);
    int glued = t.concat_cols(t.scale(left, 1.7), right);
    int row = t.slice_row(glued, 4);
    return t.mse_loss(row, t.constant(target));
  });
}
