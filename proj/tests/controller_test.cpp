#include <cmath>

#include <doctest.h>

#include "autoemb/controller.hpp"
#include "autoemb/error.hpp"

#include "gradcheck.hpp"

using namespace autoemb;

TEST_CASE("build_features cold start and encoding") {
  ContextCache ctx(5, 3);
  auto f = build_features(0, 0, ctx, 38);
  REQUIRE(f.size() == 38);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 0.0);
  for (std::size_t i = 2; i < 38; ++i) CHECK(f[i] == 0.0);

  auto g = build_features(1, 99, ctx, 38);
  CHECK(g[0] == 99.0);
  CHECK(g[1] == doctest::Approx(std::log(100.0)).epsilon(1e-12));

  // any inputs give exactly F slots
  for (std::uint64_t count : {0ull, 7ull, 123456ull})
    CHECK(build_features(2, count, ctx, 38).size() == 38);
}

TEST_CASE("context cache feeds the feature slots") {
  ContextCache ctx(3, 2, 0.9);
  const double w[2] = {0.7, 0.3};
  ctx.update(1, w, 0.25);
  auto f = build_features(1, 4, ctx, 10);
  CHECK(f[2] == 0.7);
  CHECK(f[3] == 0.3);
  CHECK(f[4] == 0.25);                                  // prev loss
  CHECK(f[5] == doctest::Approx(0.025).epsilon(1e-12)); // ema after one update
  ctx.update(1, w, 0.25);
  auto f2 = build_features(1, 4, ctx, 10);
  CHECK(f2[5] == doctest::Approx(0.9 * 0.025 + 0.1 * 0.25).epsilon(1e-12));
}

TEST_CASE("controller forward: uniform at zero parameters, rows sum to one") {
  Rng rng(41);
  ControllerNet net(38, 16, 3, rng);
  for (auto& p : net.params())
    for (double& v : p->values) v = 0.0;
  ContextCache ctx(4, 3);
  auto feats = build_feature_batch({0, 1, 2}, {0, 10, 500}, ctx, 38);
  Tape tape;
  auto out = net.forward(tape, feats);
  REQUIRE(out->shape == std::vector<std::size_t>{3, 3});
  for (double v : out->values)
    CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

  Rng rng2(42);
  ControllerNet net2(38, 16, 3, rng2);
  Tape tape2;
  auto out2 = net2.forward(tape2, feats);
  for (std::size_t b = 0; b < 3; ++b) {
    double sum = 0.0;
    for (std::size_t n = 0; n < 3; ++n) sum += out2->at(b, n);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }

  auto bad = Tensor::make({2, 37});
  CHECK_THROWS_AS(net2.forward(tape2, bad), ContractError);
}

TEST_CASE("controller gradient w.r.t. its parameters matches finite differences") {
  Rng rng(43);
  ControllerNet net(12, 8, 3, rng);
  ContextCache ctx(4, 3);
  auto feats = build_feature_batch({0, 1, 2, 3}, {0, 3, 9, 81}, ctx, 12);
  auto weight_of_interest = [&](Tape& t) {
    auto out = net.forward(t, feats);
    return t.sum(t.mul(out, out)); // smooth scalar of all outputs
  };
  {
    Tape t;
    t.backward(weight_of_interest(t));
  }
  auto params = net.params();
  auto res = gradcheck::compare(
      [&] {
        Tape t;
        return weight_of_interest(t)->values[0];
      },
      params, gradcheck::grads_of(params));
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("select_hard examples, tie rule, shift invariance") {
  CHECK(select_hard(std::vector<double>{0.2, 0.5, 0.3}) == 1);
  CHECK(select_hard(std::vector<double>{0.4, 0.4, 0.2}) == 0);
  CHECK(select_hard(std::vector<double>{0.1, 0.2, 0.7}) == 2);

  Rng rng(44);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + rng.index(4);
    auto x = Tensor::make({n});
    for (double& v : x->values) v = rng.uniform(-3.0, 3.0);
    const double c = rng.uniform(-5.0, 5.0);
    auto shifted = Tensor::make({n});
    for (std::size_t j = 0; j < n; ++j) shifted->values[j] = x->values[j] + c;
    Tape t;
    CHECK(select_hard(t.softmax(x)) == select_hard(t.softmax(shifted)));
  }
}

TEST_CASE("combine_soft examples") {
  Tape tape;
  auto c1 = Tensor::from({2, 2}, {0.1, 0.2, 0.3, 0.4});
  auto c2 = Tensor::from({2, 2}, {-0.5, 0.5, 0.25, -0.25});
  auto c3 = Tensor::from({2, 2}, {0.9, -0.9, 0.6, -0.6});

  auto onehot = Tensor::from({3}, {1, 0, 0});
  auto u = combine_soft(tape, onehot, {c1, c2, c3});
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(u->values[i] == doctest::Approx(c1->values[i] / 3.0).epsilon(1e-15));

  auto vvec = Tensor::from({2, 2}, {0.4, -0.4, 0.2, -0.2});
  auto wts = Tensor::from({3}, {0.5, 0.25, 0.25});
  auto same = combine_soft(tape, wts, {vvec, vvec, vvec});
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(same->values[i] == doctest::Approx(vvec->values[i] / 3.0).epsilon(1e-15));

  auto mix_w = Tensor::from({3}, {0.2, 0.3, 0.5});
  auto m = combine_soft(tape, mix_w, {c1, c2, c3});
  for (std::size_t i = 0; i < 4; ++i) {
    const double expect =
        (0.2 * c1->values[i] + 0.3 * c2->values[i] + 0.5 * c3->values[i]) / 3.0;
    CHECK(m->values[i] == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("combine_soft outputs stay below 1/N in magnitude") {
  Rng rng(45);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(3);
    const std::size_t batch = 1 + rng.index(4);
    const std::size_t dim = 1 + rng.index(5);
    std::vector<TensorPtr> cands;
    for (std::size_t s = 0; s < n; ++s) {
      auto c = Tensor::make({batch, dim});
      for (double& v : c->values) v = std::tanh(rng.uniform(-4.0, 4.0));
      cands.push_back(c);
    }
    auto logits = Tensor::make({batch, n});
    for (double& v : logits->values) v = rng.uniform(-3.0, 3.0);
    Tape t;
    auto out = combine_soft(t, t.softmax(logits), cands);
    for (double v : out->values)
      CHECK(std::abs(v) < 1.0 / static_cast<double>(n));
  }
}

TEST_CASE("user and item controllers are independent") {
  Rng rng(46);
  ControllerNet user(10, 8, 3, rng);
  ControllerNet item(10, 8, 3, rng);
  ContextCache ctx(2, 3);
  auto feats = build_feature_batch({0, 1}, {5, 6}, ctx, 10);

  Tape t0;
  const auto before = item.forward(t0, feats)->values;
  for (auto& p : user.params())
    for (double& v : p->values) v += 0.37;
  Tape t1;
  CHECK(item.forward(t1, feats)->values == before);
}

TEST_CASE("darts weight table: softmax rows, no features involved") {
  DartsWeightTable table(4, 3);
  Tape tape;
  auto w = table.forward(tape, {0, 2, 2});
  REQUIRE(w->shape == std::vector<std::size_t>{3, 3});
  for (double v : w->values) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

  table.logits()->values[2 * 3 + 1] = 2.0; // push entity 2 toward space 1
  Tape t2;
  auto w2 = table.forward(t2, {2});
  CHECK(select_hard(std::vector<double>(w2->values.begin(), w2->values.end())) == 1);
}
