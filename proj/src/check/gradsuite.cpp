// Copyright 2026 The MorphNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "check/gradsuite.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <optional>
#include <span>
#include <string_view>

#include "autodiff/gradcheck.hpp"
#include "autodiff/ops.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "nn/blocks.hpp"
#include "scaling/network.hpp"

namespace morphnet::check {
namespace {

using T = double;
using ad::GradCheckOptions;
using ad::GradCheckReport;
using ad::Padding;
using ad::Shape;
using P = ad::Parameter<T>;
using Tape = ad::Tape<T>;
using Tensor = ad::Tensor<T>;
using ad::Var;

using Builder = std::function<Var(Tape&)>;
using CaseFn = std::function<GradCheckReport(Rng&, const GradCheckOptions&)>;

struct Case {
  std::string name;
  CaseFn run;
};

Tensor rnd(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (T& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

Shape rnd_shape(Rng& rng) {
  Shape s(pick(rng, 1, 3));
  for (auto& d : s) d = pick(rng, 1, 8);
  return s;
}

// Moves every value off its initializer so zero biases do not hide terms.
void jitter(const std::vector<P*>& ps, Rng& rng) {
  for (P* p : ps) {
    for (T& v : p->value.data()) v += rng.uniform(-0.1, 0.1);
  }
}

GradCheckReport run_check(std::vector<P*> ps, const Builder& f,
                          const GradCheckOptions& go) {
  return ad::grad_check<T>(std::span<P* const>(ps), f, go);
}

// Reduces a tensor-valued builder to a scalar with fixed random weights.
GradCheckReport projected(Rng& rng, std::vector<P*> ps, const Builder& f,
                          const GradCheckOptions& go) {
  Tape probe;
  const Var out = f(probe);
  const Tensor w = rnd(probe.value(out).shape(), rng);
  return run_check(std::move(ps),
                   [&](Tape& t) { return ad::weighted_sum(t, f(t), w); }, go);
}

CaseFn unary(std::function<Var(Tape&, Var)> op, double lo = -1.0, double hi = 1.0) {
  return [op, lo, hi](Rng& rng, const GradCheckOptions& go) {
    P a("a", rnd(rnd_shape(rng), rng, lo, hi));
    return projected(rng, {&a}, [&](Tape& t) { return op(t, t.param(a)); }, go);
  };
}

CaseFn binary(std::function<Var(Tape&, Var, Var)> op) {
  return [op](Rng& rng, const GradCheckOptions& go) {
    const Shape s = rnd_shape(rng);
    P a("a", rnd(s, rng));
    P b("b", rnd(s, rng));
    return projected(rng, {&a, &b},
                     [&](Tape& t) { return op(t, t.param(a), t.param(b)); }, go);
  };
}

CaseFn dense_case(ad::Activation act) {
  return [act](Rng& rng, const GradCheckOptions& go) {
    const std::size_t n = pick(rng, 1, 4), in = pick(rng, 1, 8), out = pick(rng, 1, 8);
    P x("x", rnd({n, in}, rng));
    P w("w", rnd({in, out}, rng));
    P b("b", rnd({out}, rng));
    return projected(rng, {&x, &w, &b}, [&](Tape& t) {
      return ad::dense(t, t.param(x), t.param(w), t.param(b), act);
    }, go);
  };
}

struct Spatial {
  std::size_t n, h, w, c;
};

Spatial rnd_spatial(Rng& rng, std::size_t min_hw = 1, std::size_t max_c = 4) {
  return {pick(rng, 1, 2), pick(rng, min_hw, 8), pick(rng, min_hw, 8), pick(rng, 1, max_c)};
}

CaseFn conv_case(Padding padding) {
  return [padding](Rng& rng, const GradCheckOptions& go) {
    const std::size_t k = std::array<std::size_t, 3>{1, 3, 5}[rng.below(3)];
    const std::size_t stride = pick(rng, 1, 2);
    const Spatial s = rnd_spatial(rng, padding == Padding::kValid ? k : 1);
    const std::size_t cout = pick(rng, 1, 4);
    P x("x", rnd({s.n, s.h, s.w, s.c}, rng));
    P w("w", rnd({k, k, s.c, cout}, rng));
    P b("b", rnd({cout}, rng));
    return projected(rng, {&x, &w, &b}, [&](Tape& t) {
      return ad::conv2d(t, t.param(x), t.param(w), t.param(b), stride, padding);
    }, go);
  };
}

CaseFn depthwise_case(Padding padding) {
  return [padding](Rng& rng, const GradCheckOptions& go) {
    const std::size_t k = std::array<std::size_t, 3>{1, 3, 5}[rng.below(3)];
    const std::size_t stride = pick(rng, 1, 2);
    const Spatial s = rnd_spatial(rng, padding == Padding::kValid ? k : 1, 8);
    P x("x", rnd({s.n, s.h, s.w, s.c}, rng));
    P w("w", rnd({k, k, s.c}, rng));
    P b("b", rnd({s.c}, rng));
    return projected(rng, {&x, &w, &b}, [&](Tape& t) {
      return ad::depthwise_conv2d(t, t.param(x), t.param(w), t.param(b), stride, padding);
    }, go);
  };
}

CaseFn se_case(nn::SEVariant variant, nn::GateActivation gate) {
  return [variant, gate](Rng& rng, const GradCheckOptions& go) {
    const Spatial s = rnd_spatial(rng, 1, 8);
    nn::SEConfig cfg = nn::SEConfig::with_reduction(s.c);
    cfg.variant = variant;
    cfg.gate = gate;
    auto sp = nn::SEParams<T>::init(cfg, rng, "se");
    auto ps = sp.parameters();
    jitter(ps, rng);
    P u("u", rnd({s.n, s.h, s.w, s.c}, rng));
    ps.push_back(&u);
    return projected(rng, ps, [&](Tape& t) {
      return nn::se_forward(t, t.param(u), cfg, sp);
    }, go);
  };
}

CaseFn mbconv_case(std::size_t expansion, std::size_t stride, bool same_channels,
                   nn::SEVariant variant) {
  return [=](Rng& rng, const GradCheckOptions& go) {
    nn::MBConvConfig cfg;
    cfg.in_channels = pick(rng, 1, 4);
    cfg.out_channels = same_channels ? cfg.in_channels : pick(rng, 1, 4);
    cfg.expansion = expansion;
    cfg.kernel = rng.bernoulli(0.5) ? 3 : 5;
    cfg.stride = stride;
    cfg.se_variant = variant;
    auto mp = nn::MBConvParams<T>::init(cfg, rng, "mb");
    auto ps = mp.parameters();
    jitter(ps, rng);
    P x("x", rnd({pick(rng, 1, 2), pick(rng, 2, 6), pick(rng, 2, 6), cfg.in_channels}, rng));
    ps.push_back(&x);
    return projected(rng, ps, [&](Tape& t) {
      return nn::mbconv_forward(t, t.param(x), cfg, mp);
    }, go);
  };
}

CaseFn head_case(nn::HeadMode mode) {
  return [mode](Rng& rng, const GradCheckOptions& go) {
    const Spatial s = rnd_spatial(rng, 1, 8);
    nn::HeadConfig cfg;
    cfg.hidden_units = pick(rng, 2, 8);
    cfg.mode = mode;
    auto hp = nn::HeadParams<T>::init(s.c, cfg, rng, "head");
    auto ps = hp.parameters();
    jitter(ps, rng);
    P f("features", rnd({s.n, s.h, s.w, s.c}, rng));
    ps.push_back(&f);
    const std::uint64_t drop_seed = rng.next_u64();
    return projected(rng, ps, [&](Tape& t) {
      Rng dr(drop_seed);
      return nn::head_forward(t, t.param(f), cfg, hp, true, dr);
    }, go);
  };
}

constexpr std::string_view kTwoBlockArch =
    "version = 1\n"
    "name = gradcheck\n"
    "resolution = 8\n"
    "input_channels = 3\n"
    "se_ratio = 0.25\n"
    "se_variant = fc\n"
    "se_gate = sigmoid\n"
    "head_mode = classify\n"
    "head_hidden = 8\n"
    "head_dropout = 0.5\n"
    "stage = conv kernel=3 stride=1 channels=4 layers=1 expansion=1 depth=fixed\n"
    "stage = mbconv kernel=3 stride=1 channels=4 layers=1 expansion=2\n"
    "stage = mbconv kernel=3 stride=2 channels=8 layers=1 expansion=2\n";

GradCheckReport two_block_network(Rng& rng, const GradCheckOptions& go) {
  scaling::Network<T> net(scaling::parse_arch(kTwoBlockArch), rng.next_u64());
  auto ps = net.parameters();
  jitter(ps, rng);
  const std::size_t n = pick(rng, 1, 2);
  P x("x", rnd({n, pick(rng, 4, 8), pick(rng, 4, 8), 3}, rng, 0.0, 1.0));
  ps.push_back(&x);
  Tensor y({n, 7});
  for (std::size_t i = 0; i < n; ++i) y[i * 7 + rng.below(7)] = 1.0;
  const std::uint64_t drop_seed = rng.next_u64();
  return run_check(ps, [&](Tape& t) {
    Rng dr(drop_seed);
    const Var p = net.forward(t, t.param(x), true, dr);
    return ad::cross_entropy(t, p, t.constant(y));
  }, go);
}

std::vector<Case> all_cases() {
  using nn::GateActivation;
  using nn::SEVariant;
  std::vector<Case> c;
  c.push_back({"add", binary([](Tape& t, Var a, Var b) { return ad::add(t, a, b); })});
  c.push_back({"mul", binary([](Tape& t, Var a, Var b) { return ad::mul(t, a, b); })});
  c.push_back({"reuse", unary([](Tape& t, Var a) { return ad::mul(t, a, a); })});
  c.push_back({"scale", unary([](Tape& t, Var a) { return ad::scale(t, a, T(-1.7)); })});
  c.push_back({"square", unary([](Tape& t, Var a) { return ad::square(t, a); })});
  c.push_back({"sum", unary([](Tape& t, Var a) { return ad::sum(t, a); })});
  c.push_back({"mean", unary([](Tape& t, Var a) { return ad::mean(t, a); })});
  c.push_back({"reshape", unary([](Tape& t, Var a) {
    return ad::reshape(t, a, Shape{t.value(a).size()});
  })});
  c.push_back({"relu", unary([](Tape& t, Var a) { return ad::relu(t, a); })});
  c.push_back({"sigmoid", unary([](Tape& t, Var a) { return ad::sigmoid(t, a); }, -4.0, 4.0)});
  c.push_back({"softmax", unary([](Tape& t, Var a) { return ad::softmax(t, a); }, -3.0, 3.0)});
  c.push_back({"dense", dense_case(ad::Activation::kIdentity)});
  c.push_back({"dense.relu", dense_case(ad::Activation::kRelu)});
  c.push_back({"dense.sigmoid", dense_case(ad::Activation::kSigmoid)});
  c.push_back({"dense.softmax", dense_case(ad::Activation::kSoftmax)});
  c.push_back({"conv2d.same", conv_case(Padding::kSame)});
  c.push_back({"conv2d.valid", conv_case(Padding::kValid)});
  c.push_back({"depthwise.same", depthwise_case(Padding::kSame)});
  c.push_back({"depthwise.valid", depthwise_case(Padding::kValid)});
  c.push_back({"pointwise", [](Rng& rng, const GradCheckOptions& go) {
    const Spatial s = rnd_spatial(rng);
    const std::size_t cout = pick(rng, 1, 8);
    P x("x", rnd({s.n, s.h, s.w, s.c}, rng));
    P w("w", rnd({1, 1, s.c, cout}, rng));
    P b("b", rnd({cout}, rng));
    return projected(rng, {&x, &w, &b}, [&](Tape& t) {
      return ad::pointwise_conv(t, t.param(x), t.param(w), t.param(b));
    }, go);
  }});
  c.push_back({"global_avg_pool", [](Rng& rng, const GradCheckOptions& go) {
    const Spatial s = rnd_spatial(rng, 1, 8);
    P x("x", rnd({s.n, s.h, s.w, s.c}, rng));
    return projected(rng, {&x}, [&](Tape& t) { return ad::global_avg_pool(t, t.param(x)); }, go);
  }});
  c.push_back({"max_pool", [](Rng& rng, const GradCheckOptions& go) {
    const std::size_t window = pick(rng, 2, 3), stride = pick(rng, 1, 2);
    const Spatial s = rnd_spatial(rng, window);
    P x("x", rnd({s.n, s.h, s.w, s.c}, rng));
    return projected(rng, {&x}, [&](Tape& t) {
      return ad::max_pool(t, t.param(x), window, stride);
    }, go);
  }});
  c.push_back({"channel_scale", [](Rng& rng, const GradCheckOptions& go) {
    const Spatial s = rnd_spatial(rng, 1, 8);
    P x("x", rnd({s.n, s.h, s.w, s.c}, rng));
    P g("s", rnd({s.n, s.c}, rng));
    return projected(rng, {&x, &g}, [&](Tape& t) {
      return ad::channel_scale(t, t.param(x), t.param(g));
    }, go);
  }});
  c.push_back({"dropout", [](Rng& rng, const GradCheckOptions& go) {
    P x("x", rnd(rnd_shape(rng), rng));
    const double rate = rng.bernoulli(0.5) ? 0.25 : 0.5;
    const std::uint64_t drop_seed = rng.next_u64();
    return projected(rng, {&x}, [&](Tape& t) {
      Rng dr(drop_seed);
      return ad::dropout(t, t.param(x), rate, true, dr);
    }, go);
  }});
  c.push_back({"cross_entropy", [](Rng& rng, const GradCheckOptions& go) {
    const std::size_t n = pick(rng, 1, 4), k = pick(rng, 2, 8);
    P p("pred", rnd({n, k}, rng, 0.05, 1.0));
    Tensor y = rnd({n, k}, rng, 0.0, 1.0);
    return run_check({&p}, [&](Tape& t) {
      return ad::cross_entropy(t, t.param(p), t.constant(y));
    }, go);
  }});
  c.push_back({"softmax_cross_entropy", [](Rng& rng, const GradCheckOptions& go) {
    const std::size_t n = pick(rng, 1, 4), k = pick(rng, 2, 8);
    P z("logits", rnd({n, k}, rng, -2.0, 2.0));
    Tensor y({n, k});
    for (std::size_t i = 0; i < n; ++i) y[i * k + rng.below(k)] = 1.0;
    return run_check({&z}, [&](Tape& t) {
      return ad::cross_entropy(t, ad::softmax(t, t.param(z)), t.constant(y));
    }, go);
  }});
  c.push_back({"mean_squared_error", [](Rng& rng, const GradCheckOptions& go) {
    const Shape s = rnd_shape(rng);
    P p("pred", rnd(s, rng));
    Tensor y = rnd(s, rng);
    return run_check({&p}, [&](Tape& t) {
      return ad::mean_squared_error(t, t.param(p), t.constant(y));
    }, go);
  }});
  c.push_back({"rmse", [](Rng& rng, const GradCheckOptions& go) {
    const Shape s = rnd_shape(rng);
    P p("pred", rnd(s, rng));
    Tensor y = rnd(s, rng);
    return run_check({&p}, [&](Tape& t) {
      return ad::rmse_loss(t, t.param(p), t.constant(y));
    }, go);
  }});
  c.push_back({"se.fc", se_case(SEVariant::kFcSigmoid, GateActivation::kSigmoid)});
  c.push_back({"se.pointwise", se_case(SEVariant::kPointwise, GateActivation::kSigmoid)});
  c.push_back({"se.relu_gate", se_case(SEVariant::kFcSigmoid, GateActivation::kRelu)});
  c.push_back({"residual", [](Rng& rng, const GradCheckOptions& go) {
    nn::ResidualConfig cfg{pick(rng, 1, 4), 3};
    auto rp = nn::ResidualParams<T>::init(cfg, rng, "res");
    auto ps = rp.parameters();
    jitter(ps, rng);
    P a("a", rnd({pick(rng, 1, 2), pick(rng, 1, 6), pick(rng, 1, 6), cfg.channels}, rng));
    ps.push_back(&a);
    return projected(rng, ps, [&](Tape& t) {
      return nn::residual_forward(t, t.param(a), cfg, rp);
    }, go);
  }});
  c.push_back({"mbconv.skip", mbconv_case(2, 1, true, SEVariant::kFcSigmoid)});
  c.push_back({"mbconv.stride2", mbconv_case(1, 2, false, SEVariant::kFcSigmoid)});
  c.push_back({"mbconv.pointwise_se", mbconv_case(2, 1, false, SEVariant::kPointwise)});
  c.push_back({"head.classify", head_case(nn::HeadMode::kClassify)});
  c.push_back({"head.regress", head_case(nn::HeadMode::kRegress)});
  c.push_back({"network.two_block", two_block_network});
  return c;
}

}  // namespace

std::vector<std::string> grad_case_names() {
  std::vector<std::string> names;
  for (const Case& c : all_cases()) names.push_back(c.name);
  return names;
}

GradSuiteResult run_grad_suite(const GradSuiteOptions& options,
                               const std::function<void(const GradCaseResult&)>& on_case) {
  const auto cases = all_cases();
  for (const std::string& name : options.only) {
    const bool known = std::any_of(cases.begin(), cases.end(),
                                   [&](const Case& c) { return c.name == name; });
    if (!known) fail(ErrorCode::kNotFound, "unknown gradient check case '", name, "'");
  }
  if (options.seeds == 0) fail(ErrorCode::kInvalidArgument, "gradient check needs at least one seed");

  const auto t0 = std::chrono::steady_clock::now();
  GradSuiteResult suite;
  suite.passed = true;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const Case& c = cases[ci];
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), c.name) == options.only.end()) {
      continue;
    }
    GradCaseResult r;
    r.name = c.name;
    for (std::size_t s = 0; s < options.seeds; ++s) {
      GradCheckReport rep;
      for (std::size_t attempt = 0;; ++attempt) {
        const std::uint64_t seed = derive_seed(options.root_seed, {ci, s, attempt});
        GradCheckOptions go = GradCheckOptions::for_double();
        go.eps = options.eps;
        go.max_elements_per_tensor = options.max_elements_per_tensor;
        go.sample_seed = seed;
        Rng rng(seed);
        rep = c.run(rng, go);
        if (!rep.non_differentiable) break;
        if (attempt == options.max_retries) {
          ++r.unresolved_kinks;
          break;
        }
        ++r.resamples;
      }
      ++r.seeds;
      r.checked += rep.checked;
      if (rep.max_rel_error >= r.max_rel_error) {
        r.max_rel_error = rep.max_rel_error;
        if (!rep.worst.empty()) r.worst = rep.worst;
      }
    }
    r.passed = r.checked > 0 && r.max_rel_error < options.tolerance;
    suite.passed = suite.passed && r.passed;
    suite.max_rel_error = std::max(suite.max_rel_error, r.max_rel_error);
    if (on_case) on_case(r);
    suite.cases.push_back(std::move(r));
  }
  suite.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return suite;
}

}  // namespace morphnet::check
