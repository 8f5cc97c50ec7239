#include <doctest.h>

#include <cmath>
#include <random>

#include "amrgen/nn.hpp"

using namespace amrgen;
using Mat = nn::Matrix<double>;
using Vec = nn::Vector<double>;
using Tape = nn::Tape<double>;
using Store = nn::ParamStore<double>;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mat mat(int r, int c, std::initializer_list<double> v) {
  Mat m(r, c);
  auto it = v.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

}  // namespace

TEST_CASE("softmax values") {
  Vec logits(3);
  logits << 1.0, 2.0, 3.0;
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  const Vec p = nn::softmax<double>(logits);
  CHECK(p(0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-14));
  CHECK(p(2) == doctest::Approx(std::exp(3.0) / z).epsilon(1e-14));
  CHECK(std::abs(p.sum() - 1.0) < 1e-12);

  const Vec q = nn::softmax<double>(logits, {true, false, true});
  CHECK(q(1) == 0.0);
  CHECK(q(0) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + std::exp(3.0))));
  CHECK(std::abs(q.sum() - 1.0) < 1e-12);

  Vec big(2);
  big << 1000.0, 1000.0;
  CHECK(nn::softmax<double>(big)(0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(nn::softmax<double>(logits, {false, false, false}), IndexOutOfRange);
  CHECK_THROWS_AS(nn::softmax<double>(logits, {true}), ShapeMismatch);

  const auto [loss, grad] = nn::softmax_xent<double>(logits, 2);
  CHECK(loss == doctest::Approx(-std::log(std::exp(3.0) / z)));
  CHECK(grad(2) == doctest::Approx(p(2) - 1.0));
  CHECK_THROWS_AS(nn::softmax_xent<double>(logits, 1, {true, false, true}), IndexOutOfRange);
}

TEST_CASE("bilinear scores") {
  const Mat B = mat(3, 2, {1, 0, 0, 1, 1, 0});
  const Mat U = Mat::Identity(2, 2);
  Vec s(2);
  s << 2.0, 1.0;
  const Vec p = nn::bilinear_scores<double>(B, U, s);
  CHECK(p(0) == doctest::Approx(p(2)));
  CHECK(p(0) > p(1));
  CHECK(std::abs(p.sum() - 1.0) < 1e-12);
  // Scaling s moves the distribution but the argmax stays in the duplicated pair.
  const Vec p3 = nn::bilinear_scores<double>(B, U, Vec(3.0 * s));
  CHECK(p3(0) > p(0));
  Eigen::Index best;
  p3.maxCoeff(&best);
  CHECK((best == 0 || best == 2));
  CHECK_THROWS_AS(nn::bilinear_scores<double>(B, Mat::Identity(3, 3), s), ShapeMismatch);
}

TEST_CASE("lstm step by hand") {
  Tape tape;
  // Hidden size 1, input size 1: gates W [x; h] + b.
  const Mat W = mat(4, 2, {0.5, -0.3, 0.2, 0.1, -0.4, 0.6, 0.7, 0.2});
  const Mat b = mat(4, 1, {0.1, -0.1, 0.05, 0.0});
  const double x = 0.8, h0 = -0.5, c0 = 0.3;
  nn::LstmState<double> prev{tape.constant(mat(1, 1, {c0})), tape.constant(mat(1, 1, {h0}))};
  const auto next = nn::lstm_step(prev, tape.constant(mat(1, 1, {x})), tape.constant(W), tape.constant(b));
  const double i = sigmoid(0.5 * x - 0.3 * h0 + 0.1);
  const double f = sigmoid(0.2 * x + 0.1 * h0 - 0.1);
  const double o = sigmoid(-0.4 * x + 0.6 * h0 + 0.05);
  const double g = std::tanh(0.7 * x + 0.2 * h0);
  const double c = f * c0 + i * g;
  CHECK(next.cell.scalar() == doctest::Approx(c).epsilon(1e-14));
  CHECK(next.hidden.scalar() == doctest::Approx(o * std::tanh(c)).epsilon(1e-14));
  CHECK_THROWS_AS(nn::lstm_step(prev, tape.constant(mat(1, 1, {x})), tape.constant(Mat::Zero(3, 2)),
                                tape.constant(b)),
                  ShapeMismatch);
}

TEST_CASE("adam step by hand") {
  Store store;
  store.add("w", mat(1, 1, {1.0}));
  store.add("frozen", mat(1, 1, {2.0}), true);
  store.at("w").grad(0, 0) = 0.5;
  store.at("frozen").grad(0, 0) = 0.5;
  nn::AdamOptions opt;
  opt.lr = 0.1;
  nn::adam_step(store, opt);
  // m = 0.05, v = 0.00025; bias-corrected 0.5 and 0.25.
  CHECK(store.at("w").value(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-15));
  CHECK(store.at("frozen").value(0, 0) == 2.0);
  CHECK(store.at("w").grad(0, 0) == 0.0);

  store.at("w").grad(0, 0) = -0.2;
  nn::adam_step(store, opt);
  const double m = 0.9 * 0.05 + 0.1 * -0.2, v = 0.999 * 0.00025 + 0.001 * 0.04;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  CHECK(store.at("w").value(0, 0) ==
        doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8) - 0.1 * mhat / (std::sqrt(vhat) + 1e-8)).epsilon(1e-13));
}

TEST_CASE("shape errors") {
  Tape tape;
  const auto a = tape.constant(Mat::Zero(2, 3));
  const auto b = tape.constant(Mat::Zero(2, 3));
  CHECK_THROWS_AS(nn::matmul(a, b), ShapeMismatch);
  CHECK_THROWS_AS(nn::add(a, tape.constant(Mat::Zero(3, 2))), ShapeMismatch);
  CHECK_THROWS_AS(nn::segment(tape.constant(Mat::Zero(3, 1)), 2, 2), ShapeMismatch);
  CHECK_THROWS_AS(nn::concat<double>({}), ShapeMismatch);
}

TEST_CASE("parameter leaves are shared per tape") {
  Store store;
  store.add("w", mat(2, 2, {1, 2, 3, 4}));
  Tape tape;
  const auto a = tape.param(store, "w");
  const auto b = tape.param(store, "w");
  CHECK(a.id == b.id);
  const auto r0 = tape.param_row(store, "w", 1);
  CHECK(r0.value() == mat(2, 1, {3, 4}));
  CHECK_THROWS_AS(tape.param_row(store, "w", 2), IndexOutOfRange);
  CHECK_THROWS_AS(tape.param(store, "nope"), IndexOutOfRange);
}

TEST_CASE("quadratic loss gradient check") {
  Store store;
  store.add("x", mat(3, 1, {0.3, -1.2, 2.0}));
  auto loss = [](Store& s) {
    Tape t;
    const auto x = t.param(s, "x");
    const auto l = nn::matmul(t.constant(Mat::Ones(1, 3)), nn::hadamard(x, x));
    t.backward(l);
    t.accumulate(s);
    return l.scalar();
  };
  const auto r = nn::grad_check<double>(loss, store);
  CHECK(r.checked == 3);
  CHECK(r.max_relative_error < 1e-8);
}

TEST_CASE("every op passes a gradient check") {
  std::mt19937_64 rng(42);
  Store store;
  store.add_uniform("W", 6, 4, rng, 0.5);
  store.add_uniform("b", 6, 1, rng, 0.5);
  store.add_uniform("x", 4, 1, rng, 0.5);
  store.add_uniform("M", 3, 4, rng, 0.5);
  store.add_uniform("U", 4, 3, rng, 0.5);
  store.add_uniform("E", 5, 3, rng, 0.5);
  store.add_uniform("L", 12, 6, rng, 0.5);
  store.add_uniform("Lb", 12, 1, rng, 0.5);
  auto loss = [](Store& s) {
    Tape t;
    const auto W = t.param(s, "W"), b = t.param(s, "b"), x = t.param(s, "x");
    const auto h = nn::tanh(nn::affine(W, x, b));
    const auto g = nn::sigmoid(nn::segment(h, 1, 3));
    const auto e = t.param_row(s, "E", 2);
    const auto q = nn::hadamard(g, e);
    const auto logits = nn::bilinear_logits(t.param(s, "M"), t.param(s, "U"), q);
    const auto rows = nn::stack_rows<double>({nn::segment(h, 0, 3), e, q});
    const auto scores = nn::matmul(rows, nn::segment(h, 3, 3));
    nn::LstmState<double> st = nn::zero_state(t, 3);
    st = nn::lstm_step(st, q, t.param(s, "L"), t.param(s, "Lb"));
    st = nn::lstm_step(st, nn::scale(e, 0.5), t.param(s, "L"), t.param(s, "Lb"));
    const auto l = nn::sum<double>({nn::xent(logits, 1), nn::xent(scores, 2, {true, false, true}),
                                    nn::mean<double>({nn::xent(nn::concat<double>({st.cell, st.hidden}), 4)}),
                                    nn::xent(nn::concat_affine(t.param(s, "W"), {st.hidden, nn::segment(x, 0, 1)},
                                                               t.param(s, "b")),
                                             0)});
    t.backward(l);
    t.accumulate(s);
    return l.scalar();
  };
  const auto r = nn::grad_check<double>(loss, store);
  CHECK(r.checked > 50);
  INFO(r.worst_parameter, " ", r.worst_index);
  CHECK(r.max_relative_error < 1e-5);
}
