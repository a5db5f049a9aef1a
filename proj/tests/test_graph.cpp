// Finite-difference oracles for every autodiff op, plus tape semantics:
// gradient routing, leaf aliasing, grad-disabled graphs.
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "zsmstm/graph.hpp"
#include "zsmstm/rng.hpp"

using zsmstm::Graph;
using zsmstm::Mat;
using zsmstm::Rng;
using zsmstm::Val;
using MD = Mat<double>;

namespace {

MD random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  return MD::NullaryExpr(r, c, [&] { return scale * rng.gaussian(); });
}

// builds a scalar root from leaves bound (by reference) to `inputs`
using Builder = std::function<Val(Graph<double>&, const std::vector<Val>&)>;

// max relative error between analytic and central-difference gradients over
// every element of every input
double fd_check(std::vector<MD>& inputs, const Builder& build, double h = 1e-6) {
  Graph<double> g;
  std::vector<Val> leaves;
  leaves.reserve(inputs.size());
  for (auto& m : inputs) leaves.push_back(g.leaf_ref(&m, true));
  Val root = build(g, leaves);
  g.backward(root);
  std::vector<MD> analytic;
  analytic.reserve(leaves.size());
  for (Val v : leaves) analytic.push_back(g.grad(v));

  auto eval = [&]() {
    Graph<double> ng(false);
    std::vector<Val> ls;
    ls.reserve(inputs.size());
    for (auto& m : inputs) ls.push_back(ng.leaf_ref(&m, false));
    return ng.scalar_value(build(ng, ls));
  };

  double worst = 0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    MD& m = inputs[i];
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double keep = m(r, c);
        m(r, c) = keep + h;
        double up = eval();
        m(r, c) = keep - h;
        double dn = eval();
        m(r, c) = keep;
        double fd = (up - dn) / (2 * h);
        double a = analytic[i](r, c);
        double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4});
        worst = std::max(worst, rel);
      }
  }
  return worst;
}

// generic scalarizer: weighted sum against a fixed matrix so every output
// element receives a distinct nonzero gradient
Val weigh(Graph<double>& g, Val y, const MD& w) {
  return g.sum_all(g.mul(y, g.leaf(w)));
}

constexpr double kTol = 5e-6;

}  // namespace

TEST_CASE("arithmetic op gradients match finite differences") {
  Rng rng(41);
  MD w34 = random_mat(3, 4, rng), w33 = random_mat(3, 3, rng), w25 = random_mat(2, 5, rng);

  SUBCASE("add/sub/mul/affine") {
    std::vector<MD> in = {random_mat(3, 4, rng), random_mat(3, 4, rng)};
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.add(L[0], L[1]), w34);
          }) < kTol);
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.sub(L[0], L[1]), w34);
          }) < kTol);
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.mul(L[0], L[1]), w34);
          }) < kTol);
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.affine(L[0], -1.7, 0.3), w34);
          }) < kTol);
  }

  SUBCASE("same leaf used twice accumulates") {
    std::vector<MD> in = {random_mat(3, 4, rng)};
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.mul(L[0], L[0]), w34);
          }) < kTol);
  }

  SUBCASE("linear/matmul/matmul_nt") {
    std::vector<MD> lin = {random_mat(4, 3, rng), random_mat(3, 5, rng), random_mat(1, 5, rng)};
    MD w45 = random_mat(4, 5, rng);
    CHECK(fd_check(lin, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.linear(L[0], L[1], L[2]), w45);
          }) < kTol);
    std::vector<MD> mm = {random_mat(2, 3, rng), random_mat(3, 5, rng)};
    CHECK(fd_check(mm, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.matmul(L[0], L[1]), w25);
          }) < kTol);
    std::vector<MD> nt = {random_mat(2, 4, rng), random_mat(5, 4, rng)};
    CHECK(fd_check(nt, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.matmul_nt(L[0], L[1], 0.37), w25);
          }) < kTol);
  }
}

TEST_CASE("nonlinearity gradients match finite differences") {
  Rng rng(42);
  MD w34 = random_mat(3, 4, rng);
  std::vector<MD> in = {random_mat(3, 4, rng)};

  CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
          return weigh(g, g.gelu(L[0]), w34);
        }) < kTol);
  CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
          return weigh(g, g.tanh_(L[0]), w34);
        }) < kTol);
  CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
          return weigh(g, g.sigmoid(L[0]), w34);
        }) < kTol);

  std::vector<MD> pos = {(in[0].array().abs() + 0.5).matrix()};
  CHECK(fd_check(pos, [&](Graph<double>& g, const std::vector<Val>& L) {
          return weigh(g, g.sqrt_(L[0]), w34);
        }) < kTol);
}

TEST_CASE("softmax gradients, with and without additive mask") {
  Rng rng(43);
  MD w45 = random_mat(4, 5, rng);
  std::vector<MD> in = {random_mat(4, 5, rng)};

  CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
          return weigh(g, g.softmax_rows(L[0]), w45);
        }) < kTol);

  // causal-style mask; masked logits must receive exactly zero gradient
  MD mask = MD::Zero(4, 5);
  const double ninf = -std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < 4; ++r)
    for (Eigen::Index c = r + 1; c < 5; ++c) mask(r, c) = ninf;
  CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
          return weigh(g, g.softmax_rows(L[0], &mask), w45);
        }) < kTol);

  Graph<double> g;
  Val a = g.leaf_ref(&in[0], true);
  g.backward(weigh(g, g.softmax_rows(a, &mask), w45));
  MD grad = g.grad(a);
  for (Eigen::Index r = 0; r < 4; ++r)
    for (Eigen::Index c = r + 1; c < 5; ++c) CHECK(grad(r, c) == 0.0);
}

TEST_CASE("layer norm gradients match finite differences") {
  Rng rng(44);
  MD w35 = random_mat(3, 5, rng);
  std::vector<MD> in = {random_mat(3, 5, rng), random_mat(1, 5, rng), random_mat(1, 5, rng)};
  CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
          return weigh(g, g.layer_norm(L[0], L[1], L[2], 1e-5), w35);
        }) < kTol);
}

TEST_CASE("shape op gradients match finite differences") {
  Rng rng(45);

  SUBCASE("concat_cols") {
    std::vector<MD> in = {random_mat(3, 2, rng), random_mat(3, 4, rng)};
    MD w36 = random_mat(3, 6, rng);
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.concat_cols(L[0], L[1]), w36);
          }) < kTol);
  }

  SUBCASE("stack_rows") {
    std::vector<MD> in = {random_mat(1, 4, rng), random_mat(2, 4, rng), random_mat(3, 4, rng)};
    MD w64 = random_mat(6, 4, rng);
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.stack_rows({L[0], L[1], L[2]}), w64);
          }) < kTol);
  }

  SUBCASE("slice rows and cols") {
    std::vector<MD> in = {random_mat(5, 6, rng)};
    MD w23 = random_mat(2, 3, rng);
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.slice_cols(g.slice_rows(L[0], 1, 2), 2, 3), w23);
          }) < kTol);
  }

  SUBCASE("gather_rows with duplicate indices scatter-adds") {
    std::vector<MD> in = {random_mat(3, 4, rng)};
    MD w54 = random_mat(5, 4, rng);
    std::vector<int> idx = {0, 1, 1, 2, 0};
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.gather_rows(L[0], idx), w54);
          }) < kTol);
  }
}

TEST_CASE("reduction gradients match finite differences") {
  Rng rng(46);

  SUBCASE("mean_rows / sum_all") {
    std::vector<MD> in = {random_mat(4, 3, rng)};
    MD w13 = random_mat(1, 3, rng);
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.mean_rows(L[0]), w13);
          }) < kTol);
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return g.sum_all(L[0]);
          }) < kTol);
  }

  SUBCASE("max_all routes gradient to the argmax") {
    // well-separated values so the +-h probes cannot flip the argmax
    MD vals(2, 3);
    vals << 0.1, 0.7, 0.3, 0.9, 0.2, 0.5;
    std::vector<MD> in = {vals};
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return g.max_all(L[0]);
          }) < kTol);

    Graph<double> g;
    Val a = g.leaf_ref(&in[0], true);
    g.backward(g.max_all(a));
    MD grad = g.grad(a);
    CHECK(grad(1, 0) == 1.0);
    CHECK(grad.sum() == 1.0);
  }

  SUBCASE("div_by_scalar, standalone and composed with max_all") {
    Rng r2(47);
    MD w23 = random_mat(2, 3, r2);
    std::vector<MD> in = {random_mat(2, 3, r2), MD::Constant(1, 1, 1.3)};
    CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.div_by_scalar(L[0], L[1], 1e-8), w23);
          }) < kTol);

    // the error-normalization pattern: a / (max(a) + eps)
    MD spread(2, 3);
    spread << 0.2, 0.8, 0.4, 1.1, 0.6, 0.3;
    std::vector<MD> in2 = {spread};
    CHECK(fd_check(in2, [&](Graph<double>& g, const std::vector<Val>& L) {
            return weigh(g, g.div_by_scalar(L[0], g.max_all(L[0]), 1e-8), w23);
          }) < kTol);
  }
}

TEST_CASE("lstm gate pre-activation gradients match finite differences") {
  Rng rng(48);
  const int I = 3, H = 2;
  std::vector<MD> in = {random_mat(1, I, rng), random_mat(1, H, rng), random_mat(I, 4 * H, rng),
                        random_mat(H, 4 * H, rng), random_mat(1, 4 * H, rng)};
  MD w = random_mat(1, 4 * H, rng);
  CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
          return weigh(g, g.lstm_gates(L[0], L[1], L[2], L[3], L[4]), w);
        }) < kTol);
}

TEST_CASE("a composite expression differentiates end to end") {
  Rng rng(49);
  // miniature network: linear -> gelu -> layer_norm -> softmax -> weighted sum
  std::vector<MD> in = {random_mat(3, 4, rng), random_mat(4, 6, rng), random_mat(1, 6, rng),
                        random_mat(1, 6, rng), random_mat(1, 6, rng)};
  MD w36 = random_mat(3, 6, rng);
  CHECK(fd_check(in, [&](Graph<double>& g, const std::vector<Val>& L) {
          Val y = g.linear(L[0], L[1], L[2]);
          y = g.layer_norm(g.gelu(y), L[3], L[4], 1e-5);
          return weigh(g, g.softmax_rows(y), w36);
        }) < 2e-5);
}

TEST_CASE("gradients flow only into leaves that require them") {
  Rng rng(50);
  MD a = random_mat(2, 2, rng), b = random_mat(2, 2, rng);
  Graph<double> g;
  Val va = g.leaf_ref(&a, true);
  Val vb = g.leaf_ref(&b, false);
  Val loss = g.sum_all(g.mul(va, vb));
  g.backward(loss);
  CHECK(g.has_grad(va));
  CHECK_FALSE(g.has_grad(vb));
  CHECK(g.grad(va) == b);          // d/da sum(a*b) = b
  CHECK(g.grad(vb).isZero(0.0));   // zeros fallback for frozen leaves
}

TEST_CASE("leaf_ref aliases caller storage instead of copying") {
  MD m = MD::Zero(2, 2);
  Graph<double> g;
  Val v = g.leaf_ref(&m, false);
  m(0, 0) = 42.0;  // mutate after binding
  CHECK(g.value(v)(0, 0) == 42.0);
  CHECK(&g.value(v) == &m);
}

TEST_CASE("grad-disabled graphs compute identical values and refuse backward") {
  Rng rng(51);
  MD x = random_mat(3, 3, rng), w = random_mat(3, 3, rng), b = random_mat(1, 3, rng);

  Graph<double> gt;
  Val yt = gt.gelu(gt.linear(gt.leaf(x, true), gt.leaf(w, true), gt.leaf(b, true)));
  Graph<double> gn(false);
  Val yn = gn.gelu(gn.linear(gn.leaf(x, true), gn.leaf(w, true), gn.leaf(b, true)));
  CHECK(gt.value(yt) == gn.value(yn));

  CHECK_THROWS_AS(gn.backward(gn.sum_all(yn)), zsmstm::Error);
}

TEST_CASE("backward requires a 1x1 root that needs gradients") {
  Graph<double> g;
  Val big = g.leaf(MD::Ones(2, 2), true);
  CHECK_THROWS_AS(g.backward(big), zsmstm::Error);
  Val frozen = g.sum_all(g.leaf(MD::Ones(2, 2), false));
  CHECK_THROWS_AS(g.backward(frozen), zsmstm::Error);
}
