#include "assoc/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <utility>

#include "assoc/episodes.hpp"
#include "assoc/errors.hpp"
#include "assoc/gradcheck.hpp"
#include "assoc/losses.hpp"

namespace assoc {
namespace {

constexpr std::uint64_t kGradcheckStream = 201;

Tensor2 gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Tensor2 t(rows, cols);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

std::vector<int> labels(std::size_t n, std::size_t classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(classes) - 1);
  std::vector<int> out(n);
  for (int& y : out) y = pick(rng);
  return out;
}

// Shape draws vary per point so the check is not tied to one geometry.
std::size_t between(std::size_t lo, std::size_t hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Cosine losses are singular at z = 0 and, for arcmax, where the true-class
// cosine reaches +-1 (sqrt(1 - c^2) has unbounded curvature). Rows get norms
// in [0.5, 2] and true-class cosines are kept inside [-0.95, 0.95].
Tensor2 cosine_safe_embeddings(std::size_t n, std::size_t d, std::span<const int> y,
                               const ClassifierWeights& w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> radius(0.5, 2.0);
  Tensor2 z(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto wy = [&](std::size_t k) { return w.matrix(k, static_cast<std::size_t>(y[i])); };
    for (;;) {
      Tensor2 row = gaussian(1, d, rng);
      double norm = 0.0, dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        norm += row(0, k) * row(0, k);
        dot += row(0, k) * wy(k);
      }
      norm = std::sqrt(norm);
      if (norm == 0.0 || std::abs(dot / norm) > 0.95) continue;
      const double r = radius(rng) / norm;
      for (std::size_t k = 0; k < d; ++k) z(i, k) = row(0, k) * r;
      break;
    }
  }
  return z;
}

// Entries far below the gradient's own scale only carry round-off from the
// differenced loss, so the absolute floor grows with the largest entry.
double scaled_floor(std::span<const double> analytic) {
  double top = 1.0;
  for (double v : analytic) top = std::max(top, std::abs(v));
  return kRelativeErrorFloor * top;
}

double compare(std::span<const double> analytic, std::span<const double> numeric) {
  return max_relative_error(analytic, numeric, scaled_floor(analytic));
}

void corrupt_first(std::span<double> g) {
  if (!g.empty()) g[0] = g[0] * 1.01 + 1e-3;
}

double check_point(std::string_view name, std::mt19937_64& rng, const GradcheckOptions& opt,
                   bool corrupt) {
  const double h = opt.step;
  const std::size_t n = between(3, 8, rng);
  const std::size_t d = between(2, 6, rng);
  const std::size_t k = between(2, 5, rng);
  double worst = 0.0;
  auto note = [&](double e) { worst = std::max(worst, e); };

  if (name == "softmax") {
    Tensor2 logits = gaussian(n, k, rng, 2.0);
    const auto y = labels(n, k, rng);
    LossOutput out = softmax_loss(logits, y);
    if (corrupt) corrupt_first(out.d_logits->values());
    auto f = [&] { return softmax_loss(logits, y).value; };
    note(compare(out.d_logits->values(), finite_diff_grad(f, logits.values(), h)));
  } else if (name == "cosmax" || name == "arcmax") {
    const auto y = labels(n, k, rng);
    ClassifierWeights w = normalize_columns({gaussian(d, k, rng)});
    Tensor2 z = cosine_safe_embeddings(n, d, y, w, rng);
    const double scale = std::uniform_real_distribution<double>(2.0, 20.0)(rng);
    const ArcmaxConfig cfg{scale, std::uniform_real_distribution<double>(0.01, 0.5)(rng)};
    auto loss = [&](WeightCheck check) {
      return name == "cosmax" ? cosmax_loss(z, y, w, scale, check)
                              : arcmax_loss(z, y, w, cfg, check);
    };
    LossOutput out = loss(WeightCheck::kRequireUnitNorm);
    if (corrupt) corrupt_first(out.d_embeddings->values());
    auto f = [&] { return loss(WeightCheck::kSkip).value; };
    note(compare(out.d_embeddings->values(), finite_diff_grad(f, z.values(), h)));
    note(compare(out.d_classifier->values(),
                            finite_diff_grad(f, w.matrix.values(), h)));
  } else if (name == "centroid_alignment") {
    Tensor2 z = gaussian(n, d, rng, 0.6);
    const auto y = labels(n, k, rng);
    const Tensor2 mu = gaussian(k, d, rng, 0.6);
    const std::size_t related = between(1, 10, rng);
    for (PrefactorMode mode : {PrefactorMode::kAsWritten, PrefactorMode::kMean}) {
      LossOutput out = centroid_alignment_loss(z, y, mu, related, mode);
      if (corrupt) corrupt_first(out.d_embeddings->values());
      auto f = [&] { return centroid_alignment_loss(z, y, mu, related, mode).value; };
      note(compare(out.d_embeddings->values(), finite_diff_grad(f, z.values(), h)));
    }
  } else if (name == "critic") {
    MlpParams critic = init_critic(d, k, between(2, 8, rng), Activation::kTanh, rng);
    const Tensor2 z = gaussian(n, d, rng);
    const auto y = labels(n, k, rng);
    const Tensor2 rz = gaussian(n + 2, d, rng);
    const auto ry = labels(n + 2, k, rng);
    LossOutput out = critic_loss(z, y, rz, ry, k, critic);
    if (corrupt) corrupt_first(out.d_critic->blocks().front().values);
    auto f = [&] { return critic_loss(z, y, rz, ry, k, critic).value; };
    note(max_relative_error(std::as_const(*out.d_critic).blocks(),
                            finite_diff_grad(f, critic.blocks(), h)));
  } else if (name == "adversarial_encoder") {
    const MlpParams critic = init_critic(d, k, between(2, 8, rng), Activation::kTanh, rng);
    Tensor2 z = gaussian(n, d, rng);
    const auto y = labels(n, k, rng);
    for (PrefactorMode mode : {PrefactorMode::kAsWritten, PrefactorMode::kMean}) {
      LossOutput out = adversarial_encoder_loss(z, y, k, critic, mode);
      if (corrupt) corrupt_first(out.d_embeddings->values());
      auto f = [&] { return adversarial_encoder_loss(z, y, k, critic, mode).value; };
      note(compare(out.d_embeddings->values(), finite_diff_grad(f, z.values(), h)));
    }
  } else {
    throw ConfigError("unknown loss '" + std::string(name) + "'");
  }
  return worst;
}

}  // namespace

const std::vector<std::string_view>& gradcheck_loss_names() {
  static const std::vector<std::string_view> names{
      "softmax", "cosmax", "arcmax", "centroid_alignment", "critic", "adversarial_encoder"};
  return names;
}

std::vector<LossCheck> run_gradcheck_suite(const GradcheckOptions& options) {
  const auto& names = gradcheck_loss_names();
  if (!options.corrupt.empty() &&
      std::find(names.begin(), names.end(), options.corrupt) == names.end()) {
    throw ConfigError("cannot corrupt unknown loss '" + options.corrupt + "'");
  }
  if (options.points == 0) throw ConfigError("gradcheck needs at least one point");
  std::vector<LossCheck> report;
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto rng = stream_rng(options.seed, i, kGradcheckStream);
    LossCheck check{std::string(names[i]), 0.0, options.points};
    const bool corrupt = options.corrupt == names[i];
    for (std::size_t p = 0; p < options.points; ++p) {
      check.max_relative_error =
          std::max(check.max_relative_error, check_point(names[i], rng, options, corrupt));
    }
    report.push_back(std::move(check));
  }
  return report;
}

}  // namespace assoc
