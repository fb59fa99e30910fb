// Copyright 2026 The p2p Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "p2p/common/error.hpp"
#include "p2p/train/train.hpp"
#include "test_support.hpp"

using namespace p2p;
using namespace p2p::train;
using model::ModelConfig;
using model::PrimitiveOutput;
using nn::Tensor;
using nn::Var;
using p2p::testing::gradient_error;

namespace {

template <typename T>
Tensor<T> random_tensor(nn::Shape shape, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<T> t(std::move(shape));
  for (T& x : t.values()) x = static_cast<T>(d(rng));
  return t;
}

data::TrainingTarget random_target(std::mt19937_64& rng, geom::PrimitiveKind kind, int m,
                                   int classes = 36) {
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> label(0, classes - 1);
  data::TrainingTarget t;
  for (int j = 0; j < m; ++j) {
    std::array<geom::Point2, 3> pts{};
    for (auto& p : pts) p = {u(rng), u(rng)};
    t.primitives.push_back(geom::make_primitive(
        kind, {pts.data(), static_cast<std::size_t>(geom::points_per_primitive(kind))}));
    t.orders.push_back(label(rng));
  }
  return t;
}

PrimitiveOutput<double> random_output(std::mt19937_64& rng, int n, int width, int classes = 36) {
  PrimitiveOutput<double> out;
  out.points = Var<double>::parameter(random_tensor<double>({n, width}, rng, 0, 1));
  out.scores = Var<double>::parameter(random_tensor<double>({n, 2}, rng, -3, 3));
  out.orders = Var<double>::parameter(random_tensor<double>({n, classes}, rng, -3, 3));
  return out;
}

CostGrid random_grid(std::mt19937_64& rng, int rows, int cols, bool dyadic) {
  std::uniform_real_distribution<double> u(-2, 5);
  std::uniform_int_distribution<int> k(-8, 8);
  CostGrid c{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols)};
  for (double& v : c.values) v = dyadic ? k(rng) / 4.0 : u(rng);
  return c;
}

// Cost of an assignment summed in target order.
double assignment_cost(const CostGrid& c, const MatchResult& m) {
  std::vector<int> pred_of(static_cast<std::size_t>(m.targets), -1);
  for (int i = 0; i < c.rows; ++i) {
    if (m.matched(i)) pred_of[static_cast<std::size_t>(m.sigma[static_cast<std::size_t>(i)])] = i;
  }
  double total = 0.0;
  for (int j = 0; j < m.targets; ++j) total += c(pred_of[static_cast<std::size_t>(j)], j);
  return total;
}

// Minimum over injective maps of the first min(N, M) targets into the predictions.
double brute_force(const CostGrid& c) {
  const int targets = std::min(c.rows, c.cols);
  std::vector<int> perm(static_cast<std::size_t>(c.rows));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int j = 0; j < targets; ++j) total += c(perm[static_cast<std::size_t>(j)], j);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

long double lse(const double* x, int n) {
  long double mx = x[0];
  for (int k = 1; k < n; ++k) mx = std::max<long double>(mx, x[k]);
  long double s = 0;
  for (int k = 0; k < n; ++k) s += std::exp(static_cast<long double>(x[k]) - mx);
  return mx + std::log(s);
}

struct HandLoss {
  long double reg = 0, cls = 0, order = 0, total = 0;
};

HandLoss hand_loss(const PrimitiveOutput<double>& out, const data::TrainingTarget& t,
                   const MatchResult& m, const TrainConfig& cfg) {
  HandLoss h;
  const int n = static_cast<int>(out.points.dim(0)), width = static_cast<int>(out.points.dim(1));
  const int classes = static_cast<int>(out.orders.dim(1));
  int matched = 0;
  for (int i = 0; i < n; ++i) {
    const double* s = out.scores.value().data() + 2 * i;
    const bool is_matched = m.matched(i);
    h.cls += lse(s, 2) - s[is_matched ? 1 : 0];
    if (!is_matched) continue;
    ++matched;
    const auto& prim = t.primitives[static_cast<std::size_t>(m.sigma[static_cast<std::size_t>(i)])];
    for (int k = 0; k < width / 2; ++k) {
      h.reg += std::abs(static_cast<long double>(out.points.value()(i, 2 * k)) - prim.points[k].x);
      h.reg += std::abs(static_cast<long double>(out.points.value()(i, 2 * k + 1)) - prim.points[k].y);
    }
    const double* o = out.orders.value().data() + static_cast<std::ptrdiff_t>(classes) * i;
    h.order += lse(o, classes) - o[t.orders[static_cast<std::size_t>(m.sigma[static_cast<std::size_t>(i)])]];
  }
  h.reg /= n;
  h.cls /= n;
  h.order = matched > 0 ? h.order / matched : 0;
  h.total = cfg.alpha * (cfg.lambda1 * h.reg + cfg.lambda2 * h.cls) + cfg.beta * h.order;
  return h;
}

double rel(long double a, long double b) {
  return static_cast<double>(std::abs(a - b) / std::max<long double>(1e-300, std::abs(b)));
}

template <typename F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

ModelConfig tiny_config(int channels = 8) {
  ModelConfig cfg;
  cfg.channels = channels;
  cfg.heads = 2;
  cfg.queries = 4;
  cfg.roi_size = 8;
  cfg.order_layers = 1;
  return cfg;
}

data::ImageRecord rectangle_record(double x0, double y0, double x1, double y1) {
  const geom::Point2 pts[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  data::ImageRecord rec;
  rec.id = 1;
  const auto ring = geom::normalize_ring(pts);
  rec.annotations.push_back({ring, data::bounds_of(ring), false});
  return rec;
}

data::Image random_image(std::mt19937_64& rng, int size) {
  data::Image img{size, size, {}};
  std::uniform_real_distribution<float> u(0, 1);
  for (int i = 0; i < size * size; ++i) img.pixels.push_back(u(rng));
  return img;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("p2p_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

data::SceneConfig small_scenes() {
  data::SceneConfig s;
  s.image_size = 64;
  s.max_buildings = 2;
  s.max_vertices = 8;
  s.min_building_size = 16;
  s.max_building_size = 30;
  s.seed = 5;
  return s;
}

ModelConfig fit_model_config() {
  ModelConfig cfg;
  cfg.channels = 8;
  cfg.heads = 2;
  cfg.queries = 10;
  cfg.roi_size = 8;
  cfg.decoder_blocks = 2;
  cfg.order_layers = 1;
  return cfg;
}

}  // namespace

TEST_CASE("matching_cost examples") {
  const geom::Point2 t_pt{0.1, 0.3};
  data::TrainingTarget t;
  t.primitives.push_back(geom::make_primitive(geom::PrimitiveKind::kVertex, {&t_pt, 1}));
  t.orders.push_back(0);
  const Tensor<double> p({1, 2}, {0.2, 0.2});
  const double fg = 0.8;
  CHECK(matching_cost(p, {&fg, 1}, t, 5.0, 1.0)(0, 0) == doctest::Approx(0.2).epsilon(1e-12));

  const Tensor<double> same({1, 2}, {0.1, 0.3});
  const double one = 1.0;
  CHECK(matching_cost(same, {&one, 1}, t, 5.0, 1.0)(0, 0) == -1.0);

  std::mt19937_64 rng(31);
  const data::TrainingTarget t3 = random_target(rng, geom::PrimitiveKind::kCorner, 2);
  const Tensor<double> p3 = random_tensor<double>({3, 6}, rng, 0, 1);
  const std::vector<double> fg3{0.1, 0.5, 0.9};
  const CostGrid c = matching_cost(p3, fg3, t3, 5.0, 1.0);
  REQUIRE(c.rows == 3);
  REQUIRE(c.cols == 2);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      double l1 = 0;
      for (int k = 0; k < 3; ++k) {
        l1 += std::abs(p3(i, 2 * k) - t3.primitives[j].points[k].x);
        l1 += std::abs(p3(i, 2 * k + 1) - t3.primitives[j].points[k].y);
      }
      CHECK(c(i, j) == doctest::Approx(5.0 * l1 - fg3[i]).epsilon(1e-14));
    }
  }

  expect_error(ErrorCode::kShape, [&] { matching_cost(p, {&fg, 1}, t3, 5.0, 1.0); });
  expect_error(ErrorCode::kInput, [&] { matching_cost(p, {&fg, 1}, data::TrainingTarget{}, 5.0, 1.0); });
}

TEST_CASE("hungarian equals exhaustive search") {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<int> size(1, 7);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = size(rng), m = size(rng);
    const CostGrid c = random_grid(rng, n, m, trial % 2 == 0);
    const MatchResult r = hungarian(c);
    CAPTURE(n);
    CAPTURE(m);
    REQUIRE(r.sigma.size() == static_cast<std::size_t>(n));
    std::vector<int> sorted = r.sigma;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < n; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
    CHECK(r.matched_count() == std::min(n, m));
    CHECK(r.truncated == (m > n));
    CHECK(assignment_cost(c, r) == brute_force(c));

    // No swap of two predictions' assignments lowers the cost.
    const double base = assignment_cost(c, r);
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        MatchResult s = r;
        std::swap(s.sigma[static_cast<std::size_t>(a)], s.sigma[static_cast<std::size_t>(b)]);
        CHECK(assignment_cost(c, s) >= base);
      }
    }
  }
}

TEST_CASE("hungarian examples and errors") {
  CostGrid id{4, 4, std::vector<double>(16, 1.0)};
  for (int i = 0; i < 4; ++i) id(i, i) = 0.0;
  CHECK(hungarian(id).sigma == std::vector<int>{0, 1, 2, 3});

  std::mt19937_64 rng(33);
  const MatchResult r = hungarian(random_grid(rng, 5, 2, false));
  CHECK(r.matched_count() == 2);
  CHECK(r.targets == 2);

  CostGrid bad = random_grid(rng, 3, 3, false);
  bad(1, 2) = std::numeric_limits<double>::quiet_NaN();
  expect_error(ErrorCode::kNumeric, [&] { hungarian(bad); });
  bad(1, 2) = std::numeric_limits<double>::infinity();
  expect_error(ErrorCode::kNumeric, [&] { hungarian(bad); });
}

TEST_CASE("seg_loss, order_loss and total_loss examples") {
  std::mt19937_64 rng(34);
  const int n = 6;
  const data::TrainingTarget t = random_target(rng, geom::PrimitiveKind::kLine, 3);
  PrimitiveOutput<double> out = random_output(rng, n, 4);
  MatchResult m;
  m.sigma = {3, 0, 4, 2, 5, 1};
  m.targets = 3;
  for (int i = 0; i < n; ++i) {
    if (!m.matched(i)) continue;
    const auto& prim = t.primitives[static_cast<std::size_t>(m.sigma[static_cast<std::size_t>(i)])];
    for (int k = 0; k < 2; ++k) {
      out.points.mutable_value()(i, 2 * k) = prim.points[k].x;
      out.points.mutable_value()(i, 2 * k + 1) = prim.points[k].y;
    }
  }
  out.scores.mutable_value().fill(0.25);
  auto [reg, cls] = seg_loss(out, t, m);
  CHECK(reg.value()[0] == 0.0);
  CHECK(cls.value()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  out.orders.mutable_value().fill(-1.5);
  CHECK(order_loss(out.orders, t, m).value()[0] == doctest::Approx(std::log(36.0)).epsilon(1e-14));
  for (int i = 0; i < n; ++i) {
    if (m.matched(i)) out.orders.mutable_value()(i, t.orders[static_cast<std::size_t>(m.sigma[static_cast<std::size_t>(i)])]) = 60.0;
  }
  CHECK(order_loss(out.orders, t, m).value()[0] < 1e-20);

  MatchResult none;
  none.sigma = {0, 1, 2, 3, 4, 5};
  none.targets = 0;
  CHECK(order_loss(out.orders, t, none).value()[0] == 0.0);

  data::TrainingTarget bad_label = t;
  bad_label.orders[0] = 36;
  expect_error(ErrorCode::kLabel, [&] { order_loss(out.orders, bad_label, m); });

  TrainConfig cfg;
  auto scalar = [](double v) { return Var<double>(Tensor<double>({1}, v)); };
  CHECK(total_loss(scalar(0.1), scalar(0.2), scalar(1.0), cfg).total.value()[0] ==
        doctest::Approx(0.8).epsilon(1e-14));
  CHECK(total_loss(scalar(0), scalar(0), scalar(0), cfg).total.value()[0] == 0.0);
  cfg.beta = 0.0;
  CHECK(total_loss(scalar(0.1), scalar(0.2), scalar(1.0), cfg).total.value()[0] ==
        total_loss(scalar(0.1), scalar(0.2), scalar(7.0), cfg).total.value()[0]);
}

TEST_CASE("losses equal direct recomputation on random instances") {
  std::mt19937_64 rng(35);
  std::uniform_int_distribution<int> kind_pick(0, 2), n_pick(1, 12);
  const geom::PrimitiveKind kinds[3] = {geom::PrimitiveKind::kVertex, geom::PrimitiveKind::kLine,
                                        geom::PrimitiveKind::kCorner};
  TrainConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    const auto kind = kinds[kind_pick(rng)];
    const int n = n_pick(rng);
    const int m = std::uniform_int_distribution<int>(1, n)(rng);
    const data::TrainingTarget t = random_target(rng, kind, m);
    const PrimitiveOutput<double> out = random_output(rng, n, 2 * geom::points_per_primitive(kind));
    MatchResult match;
    const LossReport r = report_of(building_loss(out, t, cfg, &match));
    const HandLoss h = hand_loss(out, t, match, cfg);
    CHECK(rel(r.seg_reg, h.reg) <= 1e-9);
    CHECK(rel(r.seg_cls, h.cls) <= 1e-9);
    CHECK(rel(r.order, h.order) <= 1e-9);
    CHECK(rel(r.total, h.total) <= 1e-9);
    CHECK(r.total >= 0.0);
  }
}

TEST_CASE("loss is invariant under a permutation of target order") {
  std::mt19937_64 rng(36);
  TrainConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 10, m = std::uniform_int_distribution<int>(1, 10)(rng);
    const data::TrainingTarget t = random_target(rng, geom::PrimitiveKind::kCorner, m);
    const PrimitiveOutput<double> out = random_output(rng, n, 6);
    std::vector<std::size_t> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    data::TrainingTarget shuffled;
    for (std::size_t j : perm) {
      shuffled.primitives.push_back(t.primitives[j]);
      shuffled.orders.push_back(t.orders[j]);
    }
    const LossReport a = report_of(building_loss(out, t, cfg));
    const LossReport b = report_of(building_loss(out, shuffled, cfg));
    CHECK(std::abs(a.total - b.total) <= 1e-9);
    CHECK(std::abs(a.seg_reg - b.seg_reg) <= 1e-9);
    CHECK(std::abs(a.seg_cls - b.seg_cls) <= 1e-9);
    CHECK(std::abs(a.order - b.order) <= 1e-9);
  }
}

TEST_CASE("total loss gradients match finite differences on a tiny model") {
  const ModelConfig cfg = tiny_config();
  model::Model<double> m(cfg, 37);
  std::mt19937_64 rng(37);
  const data::Image img = random_image(rng, 32);
  const data::ImageRecord rec = rectangle_record(6.5, 8.25, 25.5, 22.75);
  const TrainSample sample = make_sample(img, rec, cfg, nullptr);
  REQUIRE(sample.rois.size() == 1);
  TrainConfig tc;
  auto loss = [&] { return batch_loss(m, std::span<const TrainSample>(&sample, 1), tc).total; };
  CHECK(loss().value()[0] > 0.0);
  for (std::size_t i = 0; i < m.params().vars().size(); ++i) {
    const double err = gradient_error(m.params().vars()[i], loss);
    CAPTURE(m.params().names()[i]);
    CAPTURE(err);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("make_sample skips buildings without usable targets") {
  std::mt19937_64 rng(38);
  const data::Image img = random_image(rng, 32);
  data::ImageRecord rec = rectangle_record(4, 4, 20, 20);
  rec.annotations.push_back(rectangle_record(40, 40, 44, 44).annotations[0]);
  int skipped = 0;
  const TrainSample s = make_sample(img, rec, tiny_config(), nullptr, &skipped);
  CHECK(s.rois.size() == 1);
  CHECK(s.targets.size() == 1);
  CHECK(skipped == 1);
}

TEST_CASE("train_step: zero learning rate, determinism and overfitting one batch") {
  const ModelConfig cfg = tiny_config(16);
  std::mt19937_64 rng(39);
  data::Image img = random_image(rng, 32);
  const data::ImageRecord rec = rectangle_record(7, 9, 25, 23);
  for (int y = 9; y < 23; ++y) {
    for (int x = 7; x < 25; ++x) img.pixels[static_cast<std::size_t>(y * 32 + x)] = 0.9f;
  }
  const TrainSample sample = make_sample(img, rec, cfg, nullptr);
  const std::span<const TrainSample> batch(&sample, 1);
  TrainConfig tc;

  {
    model::Model<float> m(cfg, 40);
    nn::AdamW<float> opt(m.params(), {});
    std::vector<Tensor<float>> before;
    for (const auto& v : m.params().vars()) before.push_back(v.value());
    const StepReport r = train_step(m, opt, batch, tc, 0.0);
    CHECK(r.buildings == 1);
    CHECK(r.grad_norm > 0.0);
    CHECK(opt.steps() == 1);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(m.params().vars()[i].value() == before[i]);
  }

  auto run = [&](int steps) {
    model::Model<float> m(cfg, 41);
    nn::AdamWConfig oc;
    oc.clip_norm = tc.clip_norm;
    nn::AdamW<float> opt(m.params(), oc);
    std::vector<double> losses;
    for (int s = 0; s < steps; ++s) losses.push_back(train_step(m, opt, batch, tc, 1e-3).loss.total);
    return losses;
  };
  CHECK(run(2) == run(2));
  const std::vector<double> losses = run(200);
  CAPTURE(losses.front());
  CAPTURE(losses.back());
  CHECK(losses.back() <= 0.5 * losses.front());
}

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  c.lr = 2e-4;
  c.lr_decay_epoch = 3;
  CHECK(learning_rate(c, 0) == 2e-4);
  CHECK(learning_rate(c, 2) == 2e-4);
  CHECK(learning_rate(c, 3) == doctest::Approx(2e-5));
  c.lr_decay_epoch = 0;
  CHECK(learning_rate(c, 100) == 2e-4);
}

TEST_CASE("matched vertex error") {
  const geom::Point2 sq[4] = {{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  const auto a = geom::normalize_ring(sq);
  CHECK(matched_vertex_error(a, a) == 0.0);
  CHECK(matched_vertex_error(geom::translated(a, {1.5, 0}), a) == doctest::Approx(1.5));
  const geom::Point2 five[5] = {{0, 0}, {5, -0.5}, {10, 0}, {10, 10}, {0, 10}};
  CHECK(matched_vertex_error(geom::normalize_ring(five), a) == doctest::Approx(0.0));
  CHECK(matched_vertex_error(a, geom::normalize_ring(five)) == doctest::Approx(0.0));
}

TEST_CASE("train config JSON round trip and validation") {
  TrainConfig c;
  c.lr = 3e-4;
  c.epochs = 7;
  c.aux_loss = true;
  c.seed = 99;
  const nlohmann::json j = c;
  const TrainConfig back = j.get<TrainConfig>();
  CHECK(nlohmann::json(back) == j);
  expect_error(ErrorCode::kInput, [] { nlohmann::json{{"nope", 1}}.get<TrainConfig>(); });
  c.batch_size = 0;
  expect_error(ErrorCode::kInput, [&] { c.validate(); });
}

TEST_CASE("fit: checkpoints, determinism, resume and prediction") {
  TempDir tmp("fit");
  data::write_synthetic_dataset(tmp.path / "data", small_scenes(), 6, "test");
  const data::Dataset ds = data::open_dataset(tmp.path / "data");
  const ModelConfig mc = fit_model_config();
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 2;
  tc.lr = 1e-3;
  tc.eval_every = 3;
  tc.seed = 11;

  auto options = [&](const std::string& name) {
    FitOptions o;
    o.out_dir = tmp.path / name;
    o.config_hash = "cfg";
    o.validation = &ds;
    return o;
  };

  SUBCASE("epochs = 0 writes only the initial checkpoint") {
    TrainConfig zero = tc;
    zero.epochs = 0;
    model::Model<float> m(mc, 1);
    const FitResult r = fit(m, ds, zero, options("zero"));
    CHECK(r.checkpoints.size() == 1);
    CHECK(r.steps == 0);
    CHECK(r.checkpoints[0].filename() == "ckpt_epoch0000.p2p");
  }

  SUBCASE("reruns are byte-identical and resume matches") {
    model::Model<float> a(mc, 1), b(mc, 1);
    const FitResult ra = fit(a, ds, tc, options("a"));
    const FitResult rb = fit(b, ds, tc, options("b"));
    REQUIRE(ra.checkpoints.size() == 4);
    CHECK(ra.steps == 9);
    CHECK(slurp(ra.final_checkpoint) == slurp(rb.final_checkpoint));

    FitOptions resume = options("c");
    resume.resume = ra.checkpoints[1];
    model::Model<float> c(mc, 1234);
    const FitResult rc = fit(c, ds, tc, resume);
    CHECK(rc.checkpoints.size() == 2);
    CHECK(rc.steps == 9);
    CHECK(slurp(rc.final_checkpoint) == slurp(ra.final_checkpoint));

    FitOptions done = options("d");
    done.resume = ra.final_checkpoint;
    model::Model<float> d(mc, 1);
    const FitResult rd = fit(d, ds, tc, done);
    CHECK(rd.checkpoints.empty());
    CHECK(rd.epochs_completed == 3);

    FitOptions wrong = options("e");
    wrong.resume = ra.checkpoints[1];
    wrong.config_hash = "other";
    model::Model<float> e(mc, 1);
    expect_error(ErrorCode::kResume, [&] { fit(e, ds, tc, wrong); });

    std::string log = slurp(tmp.path / "a" / "train_log.jsonl");
    CHECK(std::count(log.begin(), log.end(), '\n') == 10);
    const std::string csv = slurp(tmp.path / "a" / "metrics.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

    const model::Model<float> trained = model::load_model(model::read_checkpoint(ra.final_checkpoint));
    const Predictions p = predict_dataset(trained, ds);
    std::int64_t total = 0;
    for (const auto& im : ds.coco.images) total += static_cast<std::int64_t>(im.annotations.size());
    CHECK(p.buildings == total);
    CHECK(static_cast<std::int64_t>(p.instances.size()) == total - p.rejected);
  }

  SUBCASE("resume refuses a different dataset") {
    data::SceneConfig other = small_scenes();
    other.seed = 6;
    data::write_synthetic_dataset(tmp.path / "data2", other, 6, "test");
    const data::Dataset ds2 = data::open_dataset(tmp.path / "data2");
    TrainConfig one = tc;
    one.epochs = 1;
    model::Model<float> m(mc, 1);
    FitOptions o = options("f");
    o.validation = nullptr;
    const FitResult r = fit(m, ds, one, o);
    FitOptions again = options("g");
    again.resume = r.checkpoints[0];
    expect_error(ErrorCode::kResume, [&] { fit(m, ds2, one, again); });
  }
}
