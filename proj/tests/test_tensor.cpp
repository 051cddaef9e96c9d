#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include "vtag/adam.hpp"
#include "vtag/checkpoint.hpp"
#include "vtag/grad_check.hpp"
#include "vtag/graph.hpp"

using namespace vtag;

namespace {

TensorPtr random_tensor(Shape shape, Rng& rng, bool requires_grad = true,
                        double lo = -1.5, double hi = 1.5) {
  std::vector<double> v(static_cast<size_t>(shape_size(shape)));
  for (double& x : v) x = rng.uniform(lo, hi);
  return make_tensor(std::move(shape), std::move(v), requires_grad);
}

}  // namespace

TEST_CASE("elementwise op examples") {
  Graph g;
  CHECK(g.sigmoid(make_tensor({1}, {0.0}))->values[0] == doctest::Approx(0.5));

  TensorPtr sm = g.softmax(make_tensor({3}, {0.7, 0.7, 0.7}), 0);
  for (double v : sm->values) CHECK(v == doctest::Approx(1.0 / 3.0));

  TensorPtr n = g.l2_normalize(make_tensor({2}, {3.0, 4.0}), 0);
  CHECK(n->values[0] == doctest::Approx(0.6));
  CHECK(n->values[1] == doctest::Approx(0.8));
}

TEST_CASE("backward computes d(sum x^2)/dx = 2x") {
  Graph g;
  TensorPtr x = make_tensor({2}, {1.0, 2.0}, true);
  TensorPtr loss = g.sum(g.mul(x, x), 0);
  g.backward(loss);
  CHECK(x->grad[0] == doctest::Approx(2.0));
  CHECK(x->grad[1] == doctest::Approx(4.0));
}

TEST_CASE("constant loss leaves every gradient zero") {
  Graph g;
  TensorPtr x = make_tensor({2}, {1.0, 2.0});  // no grad required
  TensorPtr p = zeros_param({2});
  TensorPtr loss = g.sum(g.mul(x, x), 0);
  CHECK(g.num_nodes() == 0);  // nothing recorded without requires_grad
  g.backward(loss);
  CHECK(p->grad[0] == 0.0);
  CHECK(p->grad[1] == 0.0);
}

TEST_CASE("matmul chain gradient matches central differences") {
  Rng rng(42);
  TensorPtr a = random_tensor({2, 3}, rng);
  TensorPtr b = random_tensor({3, 4}, rng);
  TensorPtr c = random_tensor({4, 2}, rng);
  ParamList params = {{"a", a}, {"b", b}, {"c", c}};
  double err = grad_check(
      [&](Graph& g) {
        return g.mean_all(g.tanh(g.matmul(g.matmul(a, b), c)));
      },
      params);
  CHECK(err < 1e-4);
}

TEST_CASE("every op kind passes gradient checks on random shapes") {
  struct OpCase {
    std::string name;
    std::function<TensorPtr(Graph&, const ParamList&)> build;
    int64_t num_params;
    std::function<TensorPtr(Rng&)> make_param;
  };

  auto square_param = [](Rng& rng) {
    Shape s = {2 + rng.uniform_index(3), 2 + rng.uniform_index(3)};
    std::vector<double> v(static_cast<size_t>(shape_size(s)));
    for (double& x : v) x = rng.uniform(-1.2, 1.2);
    return make_tensor(std::move(s), std::move(v), true);
  };

  std::vector<OpCase> cases;
  auto unary = [&](const char* name, auto fn) {
    cases.push_back({name,
                     [fn](Graph& g, const ParamList& p) {
                       return g.mean_all(fn(g, p[0].tensor));
                     },
                     1, square_param});
  };
  unary("sigmoid", [](Graph& g, TensorPtr x) { return g.sigmoid(x); });
  unary("tanh", [](Graph& g, TensorPtr x) { return g.tanh(x); });
  unary("relu", [](Graph& g, TensorPtr x) { return g.relu(x); });
  unary("softmax", [](Graph& g, TensorPtr x) { return g.softmax(x, 1); });
  unary("l2-normalize",
        [](Graph& g, TensorPtr x) { return g.l2_normalize(x, 0); });
  unary("mean", [](Graph& g, TensorPtr x) { return g.mean(x, 1); });
  unary("slice", [](Graph& g, TensorPtr x) {
    return g.slice(x, 1, 1, x->shape[1] - 1);
  });
  unary("reshape",
        [](Graph& g, TensorPtr x) { return g.reshape(x, {x->size()}); });
  unary("clip", [](Graph& g, TensorPtr x) { return g.clip(x, -0.9, 0.9); });

  // max needs well-separated entries so the argmax is stable under +-h
  cases.push_back({"max",
                   [](Graph& g, const ParamList& p) {
                     return g.mean_all(g.max(p[0].tensor, 0));
                   },
                   1,
                   [](Rng& rng) {
                     std::vector<double> v(9);
                     for (size_t i = 0; i < v.size(); ++i)
                       v[i] = rng.uniform(-1, 1) + 0.01 * static_cast<double>(i);
                     return make_tensor({3, 3}, std::move(v), true);
                   }});
  cases.push_back({"log",
                   [](Graph& g, const ParamList& p) {
                     return g.mean_all(g.log(p[0].tensor));
                   },
                   1,
                   [](Rng& rng) {
                     std::vector<double> v(6);
                     for (double& x : v) x = rng.uniform(0.2, 2.0);
                     return make_tensor({2, 3}, std::move(v), true);
                   }});
  cases.push_back({"matmul",
                   [](Graph& g, const ParamList& p) {
                     return g.mean_all(g.matmul(p[0].tensor, p[1].tensor));
                   },
                   2, square_param});
  auto binary = [&](const char* name, auto fn) {
    cases.push_back({name,
                     [fn](Graph& g, const ParamList& p) {
                       return g.mean_all(fn(g, p[0].tensor, p[1].tensor));
                     },
                     2, square_param});
  };
  binary("add", [](Graph& g, TensorPtr a, TensorPtr b) { return g.add(a, b); });
  binary("sub", [](Graph& g, TensorPtr a, TensorPtr b) { return g.sub(a, b); });
  binary("elementwise-mul",
         [](Graph& g, TensorPtr a, TensorPtr b) { return g.mul(a, b); });
  cases.push_back({"concat",
                   [](Graph& g, const ParamList& p) {
                     return g.mean_all(g.concat({p[0].tensor, p[1].tensor}, 0));
                   },
                   2, square_param});
  cases.push_back({"cross-entropy-with-logits",
                   [](Graph& g, const ParamList& p) {
                     std::vector<double> t(
                         static_cast<size_t>(p[0].tensor->size()), 0.35);
                     return g.mean_all(g.cross_entropy_with_logits(
                         p[0].tensor,
                         make_tensor(p[0].tensor->shape, std::move(t))));
                   },
                   1, square_param});
  cases.push_back({"broadcast-add-bias",
                   [](Graph& g, const ParamList& p) {
                     return g.mean_all(
                         g.broadcast_add_bias(p[0].tensor, p[1].tensor));
                   },
                   2, square_param});
  cases.push_back({"embedding-lookup",
                   [](Graph& g, const ParamList& p) {
                     return g.mean_all(
                         g.embedding_lookup(p[0].tensor, {0, 2, 1, 2}));
                   },
                   1,
                   [](Rng& rng) {
                     std::vector<double> v(12);
                     for (double& x : v) x = rng.uniform(-1, 1);
                     return make_tensor({3, 4}, std::move(v), true);
                   }});

  for (const auto& c : cases) {
    double worst = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
      Rng rng(static_cast<uint64_t>(seed) * 977 + 13);
      ParamList params;
      TensorPtr first = c.make_param(rng);
      params.push_back({"p0", first});
      if (c.num_params == 2) {
        if (c.name == "matmul") {
          params.push_back(
              {"p1", random_tensor({first->shape[1], 2 + rng.uniform_index(3)},
                                   rng)});
        } else if (c.name == "broadcast-add-bias") {
          params.push_back({"p1", random_tensor({first->shape.back()}, rng)});
        } else {
          params.push_back({"p1", random_tensor(first->shape, rng)});
        }
      }
      double err =
          grad_check([&](Graph& g) { return c.build(g, params); }, params);
      worst = std::max(worst, err);
    }
    INFO(c.name);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("softmax output is a distribution along the axis") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    TensorPtr x = random_tensor({4, 5, 3}, rng, false, -30, 30);
    Graph g;
    int64_t axis = trial % 3;
    TensorPtr y = g.softmax(x, axis);
    for (double v : y->values) CHECK(v >= 0.0);
    TensorPtr sums = g.sum(y, axis);
    for (double v : sums->values) CHECK(std::fabs(v - 1.0) < 1e-9);
  }
}

TEST_CASE("l2 normalize yields unit norm above the epsilon floor") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    TensorPtr x = random_tensor({3, 6}, rng, false, -2, 2);
    Graph g;
    TensorPtr y = g.l2_normalize(x, 1);
    for (int64_t r = 0; r < 3; ++r) {
      double ss = 0.0;
      for (int64_t c = 0; c < 6; ++c)
        ss += y->values[r * 6 + c] * y->values[r * 6 + c];
      CHECK(std::fabs(std::sqrt(ss) - 1.0) < 1e-9);
    }
  }
  Graph g;
  TensorPtr zero = g.l2_normalize(make_tensor({3}, {0.0, 0.0, 0.0}), 0);
  for (double v : zero->values) CHECK(v == 0.0);  // n(0) = 0 via the floor
}

TEST_CASE("backward twice gives identical gradients") {
  Rng rng(9);
  TensorPtr w = random_tensor({4, 4}, rng);
  TensorPtr x = random_tensor({4, 4}, rng, false);
  Graph g;
  TensorPtr loss = g.mean_all(g.sigmoid(g.matmul(x, w)));
  g.backward(loss);
  std::vector<double> first = w->grad;
  w->zero_grad();
  g.backward(loss);
  CHECK(w->grad == first);
}

TEST_CASE("shape errors name the op and both shapes") {
  Graph g;
  TensorPtr a = zeros({2, 3});
  TensorPtr b = zeros({4, 5});
  CHECK_THROWS_WITH_AS(g.matmul(a, b), doctest::Contains("matmul"), Error);
  try {
    g.add(a, b);
    FAIL("expected throw");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2, 3]") != std::string::npos);
    CHECK(msg.find("[4, 5]") != std::string::npos);
  }
  // axis ops on a rank-0 tensor have no axis to reduce
  CHECK_THROWS_AS(g.softmax(scalar_tensor(1.0), 0), Error);
  CHECK_THROWS_AS(g.l2_normalize(scalar_tensor(1.0), 0), Error);
}

TEST_CASE("backward rejects non-scalar and foreign losses") {
  Graph g;
  TensorPtr w = zeros_param({2, 2});
  TensorPtr y = g.sigmoid(w);
  CHECK_THROWS_AS(g.backward(y), Error);  // not scalar
  Graph other;
  TensorPtr loss = other.mean_all(g.sigmoid(w));
  CHECK_THROWS_AS(g.backward(loss), Error);  // belongs to `other`
}

TEST_CASE("graph records nodes in topological order") {
  Rng rng(10);
  TensorPtr w = random_tensor({3, 3}, rng);
  Graph g;
  TensorPtr h = g.tanh(g.matmul(g.sigmoid(w), w));
  g.mean_all(h);
  REQUIRE(g.num_nodes() > 0);
  for (size_t k = 0; k < g.num_nodes(); ++k)
    for (int id : g.input_node_ids(k)) CHECK(id < static_cast<int>(k));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  TensorPtr p = make_tensor({3}, {0.5, -0.5, 1.0}, true);
  ParamList params = {{"p", p}};
  AdamState state(AdamConfig{}, params);
  std::vector<double> before = p->values;
  for (int i = 0; i < 5; ++i) adam_step(state, params);
  CHECK(p->values == before);
}

TEST_CASE("adam: first step from zeroed moments moves by about -lr") {
  TensorPtr p = make_tensor({1}, {0.0}, true);
  p->grad[0] = 1.0;
  ParamList params = {{"p", p}};
  AdamConfig cfg;
  cfg.learning_rate = 0.001;
  AdamState state(cfg, params);
  adam_step(state, params);
  CHECK(p->values[0] == doctest::Approx(-0.001).epsilon(1e-6));
}

TEST_CASE("adam: constant gradient converges to lr-sized steps") {
  TensorPtr p = make_tensor({1}, {0.0}, true);
  ParamList params = {{"p", p}};
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  AdamState state(cfg, params);
  double prev = 0.0;
  double delta = 0.0;
  for (int i = 0; i < 2000; ++i) {
    p->grad[0] = 3.7;  // constant positive gradient
    adam_step(state, params);
    delta = p->values[0] - prev;
    prev = p->values[0];
  }
  CHECK(std::fabs(-delta - cfg.learning_rate) < 0.05 * cfg.learning_rate);
}

TEST_CASE("adam rejects NaN gradients naming the parameter") {
  TensorPtr p = make_tensor({1}, {0.0}, true);
  p->grad[0] = std::nan("");
  ParamList params = {{"theta", p}};
  AdamState state(AdamConfig{}, params);
  CHECK_THROWS_WITH_AS(adam_step(state, params), doctest::Contains("theta"),
                       Error);
}

TEST_CASE("grad_check: sigmoid cross-entropy on three logits") {
  Rng rng(11);
  TensorPtr logits = random_tensor({3}, rng);
  TensorPtr targets = make_tensor({3}, {1.0, 0.0, 1.0});
  ParamList params = {{"logits", logits}};
  double err = grad_check(
      [&](Graph& g) {
        return g.mean_all(g.cross_entropy_with_logits(logits, targets));
      },
      params);
  CHECK(err < 1e-4);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(12);
  ParamList params = {{"layer0/w", random_tensor({3, 4}, rng)},
                      {"layer0/b", random_tensor({4}, rng)},
                      {"head/w", random_tensor({4, 2}, rng)}};
  std::string path = "/tmp/vtag_test_ckpt.cstk";
  save_checkpoint(path, params);
  ParamList loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    CHECK(loaded[i].name == params[i].name);
    CHECK(loaded[i].tensor->shape == params[i].tensor->shape);
    CHECK(loaded[i].tensor->values == params[i].tensor->values);
  }
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: truncation and version errors") {
  Rng rng(13);
  ParamList params = {{"w", random_tensor({4, 4}, rng)}};
  std::string path = "/tmp/vtag_test_ckpt2.cstk";
  save_checkpoint(path, params);

  std::string bytes;
  {
    std::ifstream f(path, std::ios::binary);
    bytes.assign((std::istreambuf_iterator<char>(f)),
                 std::istreambuf_iterator<char>());
  }

  {  // truncated file -> offset error, no partial load
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("truncated"),
                       Error);

  {  // unsupported version
    std::string bad = bytes;
    bad[4] = 99;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bad.data(), static_cast<std::streamsize>(bad.size()));
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("version"),
                       Error);
  std::filesystem::remove(path);
}

TEST_CASE("restore_checkpoint rejects shape mismatches by name") {
  Rng rng(14);
  ParamList params = {{"head/w", random_tensor({4, 2}, rng)}};
  std::string path = "/tmp/vtag_test_ckpt3.cstk";
  save_checkpoint(path, params);
  ParamList other = {{"head/w", zeros({4, 3}, true)}};
  CHECK_THROWS_WITH_AS(restore_checkpoint(path, other),
                       doctest::Contains("head/w"), Error);
  std::filesystem::remove(path);
}
