#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factgraph/tensor.hpp"

using namespace factgraph;
using Mat = Matrix<double>;

namespace {

Mat random_mat(Rng& rng, int r, int c, double scale = 1.0) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// squared sum keeps every loss scalar and differentiable
Tensor<double> sq_sum(Tensor<double> t) { return sum_all(multiply(t, t)); }

}  // namespace

TEST_CASE("matmul forward matches eigen, backward matches finite differences") {
  Rng rng(1);
  auto a = parameter<double>(random_mat(rng, 3, 4));
  auto b = parameter<double>(random_mat(rng, 4, 5));
  Mat expected = a->value * b->value;
  CHECK((matmul(a, b)->value - expected).norm() == doctest::Approx(0.0));

  double err = finite_diff_check<double>(
      [&] { return sq_sum(matmul(a, b)); }, {a, b});
  CHECK(err < 1e-6);

  CHECK_THROWS_AS(matmul(a, a), ShapeMismatchError);
}

TEST_CASE("matmul_nt equals matmul with transposed operand") {
  Rng rng(2);
  auto a = parameter<double>(random_mat(rng, 3, 4));
  auto b = parameter<double>(random_mat(rng, 5, 4));
  Mat expected = a->value * b->value.transpose();
  CHECK((matmul_nt(a, b)->value - expected).norm() == doctest::Approx(0.0));
  double err = finite_diff_check<double>(
      [&] { return sq_sum(matmul_nt(a, b)); }, {a, b});
  CHECK(err < 1e-6);
}

TEST_CASE("elementwise and broadcast op gradients") {
  Rng rng(3);
  auto a = parameter<double>(random_mat(rng, 4, 6));
  auto b = parameter<double>(random_mat(rng, 4, 6));
  auto bias = parameter<double>(random_mat(rng, 1, 6));
  auto col = parameter<double>(random_mat(rng, 4, 1));

  CHECK(finite_diff_check<double>([&] { return sq_sum(add(a, b)); }, {a, b}) <
        1e-6);
  CHECK(finite_diff_check<double>([&] { return sq_sum(multiply(a, b)); },
                                  {a, b}) < 1e-6);
  CHECK(finite_diff_check<double>([&] { return sq_sum(add_rowwise(a, bias)); },
                                  {a, bias}) < 1e-6);
  CHECK(finite_diff_check<double>([&] { return sq_sum(mul_colwise(a, col)); },
                                  {a, col}) < 1e-6);
  CHECK(finite_diff_check<double>([&] { return sq_sum(scale(a, 0.37)); },
                                  {a}) < 1e-6);
}

TEST_CASE("activation gradients") {
  Rng rng(4);
  auto a = parameter<double>(random_mat(rng, 5, 7));
  CHECK(finite_diff_check<double>([&] { return sq_sum(gelu(a)); }, {a}) < 1e-5);
  CHECK(finite_diff_check<double>([&] { return sq_sum(sigmoid(a)); }, {a}) <
        1e-6);
  // keep relu inputs away from the kink
  for (int i = 0; i < a->value.size(); ++i)
    if (std::abs(a->value(i)) < 0.05) a->value(i) = 0.1;
  CHECK(finite_diff_check<double>([&] { return sq_sum(relu(a)); }, {a}) < 1e-6);
}

TEST_CASE("softmax rows: normalization and gradient") {
  Rng rng(5);
  auto a = parameter<double>(random_mat(rng, 6, 9));
  auto s = softmax_rows(a);
  for (int r = 0; r < 6; ++r)
    CHECK(s->value.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(finite_diff_check<double>([&] { return sq_sum(softmax_rows(a)); },
                                  {a}) < 1e-6);

  // additive mask suppresses entries without breaking the gradient
  Mat mask = Mat::Zero(6, 9);
  mask(0, 3) = -1e30;
  auto masked = softmax_rows(a, &mask);
  CHECK(masked->value(0, 3) == doctest::Approx(0.0));
  CHECK(finite_diff_check<double>(
            [&] { return sq_sum(softmax_rows(a, &mask)); }, {a}) < 1e-6);
}

TEST_CASE("layer norm: rows normalized, full gradient") {
  Rng rng(6);
  auto a = parameter<double>(random_mat(rng, 4, 8, 2.0));
  auto g = parameter<double>(random_mat(rng, 1, 8));
  auto b = parameter<double>(random_mat(rng, 1, 8));
  auto ones = parameter<double>(Mat::Ones(1, 8));
  auto zeros = parameter<double>(Mat::Zero(1, 8));

  auto n = layer_norm_rows(a, ones, zeros);
  for (int r = 0; r < 4; ++r) {
    CHECK(n->value.row(r).mean() == doctest::Approx(0.0).epsilon(1e-10));
    double var = n->value.row(r).array().square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
  CHECK(finite_diff_check<double>(
            [&] { return sq_sum(layer_norm_rows(a, g, b)); }, {a, g, b}) <
        1e-5);
}

TEST_CASE("gather, concat, slice, reductions") {
  Rng rng(7);
  auto a = parameter<double>(random_mat(rng, 6, 5));
  auto b = parameter<double>(random_mat(rng, 3, 5));

  auto gathered = gather_rows(a, {4, 0, 0, 2});
  CHECK(gathered->value.rows() == 4);
  CHECK((gathered->value.row(1) - a->value.row(0)).norm() == 0.0);
  // repeated index accumulates two gradient contributions
  CHECK(finite_diff_check<double>(
            [&] { return sq_sum(gather_rows(a, {4, 0, 0, 2})); }, {a}) < 1e-6);
  CHECK_THROWS_AS(gather_rows(a, {6}), ShapeMismatchError);

  CHECK(finite_diff_check<double>(
            [&] { return sq_sum(concat_rows<double>({a, b})); }, {a, b}) <
        1e-6);
  auto c = parameter<double>(random_mat(rng, 6, 3));
  CHECK(finite_diff_check<double>([&] { return sq_sum(concat_cols(a, c)); },
                                  {a, c}) < 1e-6);
  CHECK(finite_diff_check<double>(
            [&] { return sq_sum(slice_cols(a, 1, 3)); }, {a}) < 1e-6);
  CHECK(finite_diff_check<double>([&] { return sq_sum(mean_rows(a)); }, {a}) <
        1e-6);
  CHECK(finite_diff_check<double>([&] { return sq_sum(sum_rows(a)); }, {a}) <
        1e-6);
}

TEST_CASE("cross entropy: value and gradient") {
  Rng rng(8);
  auto logits = parameter<double>(random_mat(rng, 5, 3));
  std::vector<int> labels = {0, 2, 1, 1, 0};
  auto loss = cross_entropy(logits, labels);
  CHECK(loss->value(0, 0) > 0.0);
  CHECK(finite_diff_check<double>(
            [&] { return cross_entropy(logits, labels); }, {logits}) < 1e-6);
  CHECK_THROWS_AS(cross_entropy(logits, {0, 1}), ShapeMismatchError);
}

TEST_CASE("dropout: scaling keeps expectation, eval mode is identity") {
  Rng rng(9);
  auto a = parameter<double>(Mat::Ones(50, 40));
  Rng drop(17);
  auto d = dropout(a, 0.5, drop, true);
  double mean = d->value.mean();
  CHECK(mean == doctest::Approx(1.0).epsilon(0.1));
  // only values 0 or 2 appear at rate 0.5
  for (int i = 0; i < d->value.size(); ++i)
    CHECK((d->value(i) == 0.0 || d->value(i) == doctest::Approx(2.0)));

  Rng drop2(17);
  auto same = dropout(a, 0.5, drop2, true);
  CHECK((same->value - d->value).norm() == 0.0);

  auto eval = dropout(a, 0.5, drop, false);
  CHECK(eval.get() == a.get());
}

TEST_CASE("backward through a shared subexpression accumulates once per use") {
  auto x = parameter<double>(Mat::Constant(1, 1, 3.0));
  auto y = multiply(x, x);        // x^2
  auto z = add(y, y);             // 2 x^2, dz/dx = 4x = 12
  backward(z);
  CHECK(x->grad(0, 0) == doctest::Approx(12.0));
}

TEST_CASE("diamond-shaped graph gradient") {
  Rng rng(10);
  auto x = parameter<double>(random_mat(rng, 3, 3));
  auto build = [&] {
    auto h = gelu(x);
    auto left = matmul(h, h);
    auto right = multiply(h, h);
    return sq_sum(add(left, right));
  };
  CHECK(finite_diff_check<double>(build, {x}) < 1e-5);
}

TEST_CASE("adam: bias-corrected first step equals lr against sign") {
  auto p = parameter<double>(Mat::Constant(1, 2, 1.0));
  Adam<double> opt({p}, 0.1);
  p->grad = Mat::Constant(1, 2, 0.5);
  opt.step();
  // first step moves by ~lr * sign(grad) regardless of magnitude
  CHECK(p->value(0, 0) == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
}

TEST_CASE("adam: gradient clipping bounds the global norm") {
  auto p = parameter<double>(Mat::Zero(1, 4));
  auto q = parameter<double>(Mat::Zero(1, 3));
  Adam<double> opt({p, q}, 1e-3);
  p->grad = Mat::Constant(1, 4, 10.0);
  q->grad = Mat::Constant(1, 3, -10.0);
  opt.step(1.0, 1.0);
  double norm =
      std::sqrt(p->grad.squaredNorm() + q->grad.squaredNorm());
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("training drives a small regression loss down") {
  Rng rng(11);
  Mat X = random_mat(rng, 32, 6);
  Mat w_true = random_mat(rng, 6, 1);
  Mat Y = X * w_true;

  auto w = parameter<double>(random_mat(rng, 6, 1, 0.1));
  auto xc = constant<double>(X);
  auto yc = constant<double>(Y);
  Adam<double> opt({w}, 0.05);
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 200; ++step) {
    zero_grad<double>({w});
    auto diff = add(matmul(xc, w), scale(yc, -1.0));
    auto loss = sum_all(multiply(diff, diff));
    if (step == 0) first = loss->value(0, 0);
    last = loss->value(0, 0);
    backward(loss);
    opt.step();
  }
  CHECK(last < first * 1e-3);
}

TEST_CASE("float instantiation compiles and runs") {
  Rng rng(12);
  Matrix<float> m(2, 2);
  m << 1.f, 2.f, 3.f, 4.f;
  auto a = parameter<float>(m);
  auto loss = sum_all(multiply(a, a));
  backward(loss);
  CHECK(a->grad(0, 0) == doctest::Approx(2.0f));
}
