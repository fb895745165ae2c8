#include "assoc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "assoc/errors.hpp"

namespace assoc {

namespace {

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t num_classes,
                  const char* what) {
  if (labels.size() != rows) {
    throw DimensionError(std::string(what) + ": " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(rows) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw MappingError(std::string(what) + ": label " + std::to_string(y) +
                         " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

// log(sum(exp(v))) computed around the maximum.
double log_sum_exp(std::span<const double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - top);
  return top + std::log(acc);
}

// Unit-direction embeddings and their cosines with every classifier column.
struct CosineHead {
  Tensor2 unit;                // N x D
  std::vector<double> norms;   // N
  Tensor2 cosines;             // N x K
};

CosineHead cosine_head(const Tensor2& embeddings, const ClassifierWeights& w, WeightCheck check,
                       const char* what) {
  if (embeddings.cols() != w.embed_dim()) {
    throw DimensionError(std::string(what) + ": embedding dim " +
                         std::to_string(embeddings.cols()) + " != classifier rows " +
                         std::to_string(w.embed_dim()));
  }
  if (check == WeightCheck::kRequireUnitNorm && !columns_unit_norm(w, kUnitNormTolerance)) {
    throw ContractError(std::string(what) + ": classifier columns are not unit-norm");
  }
  CosineHead head{embeddings, std::vector<double>(embeddings.rows()), Tensor2()};
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    auto row = head.unit.row(i);
    const double norm = std::sqrt(dot(row, row));
    if (!(norm > 0.0)) {
      throw DegenerateError(std::string(what) + ": embedding row " + std::to_string(i) +
                            " has zero norm");
    }
    head.norms[i] = norm;
    for (double& v : row) v /= norm;
  }
  head.cosines = matmul(head.unit, w.matrix);
  return head;
}

// Given d loss / d cos (N x K), produce gradients w.r.t. the raw embeddings
// and the classifier matrix.
void backprop_cosines(const CosineHead& head, const ClassifierWeights& w, const Tensor2& d_cos,
                      LossOutput& out) {
  out.d_classifier = matmul_tn(head.unit, d_cos);
  Tensor2 d_unit = matmul_nt(d_cos, w.matrix);
  for (std::size_t i = 0; i < d_unit.rows(); ++i) {
    auto g = d_unit.row(i);
    const auto u = head.unit.row(i);
    const double radial = dot(u, g);
    for (std::size_t d = 0; d < g.size(); ++d) g[d] = (g[d] - u[d] * radial) / head.norms[i];
  }
  out.d_embeddings = std::move(d_unit);
}

void check_finite_output(const LossOutput& out, const char* what) {
  if (!std::isfinite(out.value)) throw NumericError(std::string(what) + ": non-finite loss");
}

}  // namespace

void ArcmaxConfig::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ContractError("arcmax scale must be positive, got " + std::to_string(scale));
  }
  if (!(margin >= 0.0 && margin < std::numbers::pi)) {
    throw ContractError("arcmax margin must lie in [0, pi), got " + std::to_string(margin));
  }
}

LossOutput arcmax_loss(const Tensor2& embeddings, std::span<const int> labels,
                       const ClassifierWeights& w, const ArcmaxConfig& cfg, WeightCheck check) {
  cfg.validate();
  check_labels(labels, embeddings.rows(), w.num_classes(), "arcmax_loss");
  const CosineHead head = cosine_head(embeddings, w, check, "arcmax_loss");
  const std::size_t n = embeddings.rows();
  const std::size_t k = w.num_classes();
  const double s = cfg.scale;
  const double cos_m = std::cos(cfg.margin);
  const double sin_m = std::sin(cfg.margin);

  LossOutput out;
  Tensor2 d_cos(n, k);
  std::vector<double> logits(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    const auto cos_row = head.cosines.row(i);
    // cos(phi + m) = cos(phi) cos(m) - sin(phi) sin(m), phi in [0, pi].
    const double c = std::clamp(cos_row[y], -1.0, 1.0);
    const double sin_phi = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (std::size_t j = 0; j < k; ++j) logits[j] = s * cos_row[j];
    logits[y] = s * (c * cos_m - sin_phi * sin_m);

    const double lse = log_sum_exp(logits);
    out.value += lse - logits[y];

    auto g = d_cos.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(logits[j] - lse);
      g[j] = (p - (j == y ? 1.0 : 0.0)) / static_cast<double>(n) * s;
    }
    // d cos(phi+m) / d cos(phi); the clamp is flat outside [-1, 1] and the
    // sin(phi) term is singular at |cos(phi)| = 1, where only cos(m) remains.
    double dmargin = 0.0;
    if (std::abs(cos_row[y]) <= 1.0) {
      dmargin = cos_m;
      if (sin_phi > 0.0) dmargin += sin_m * c / sin_phi;
    }
    g[y] *= dmargin;
  }
  out.value /= static_cast<double>(n);
  backprop_cosines(head, w, d_cos, out);
  check_finite_output(out, "arcmax_loss");
  return out;
}

LossOutput cosmax_loss(const Tensor2& embeddings, std::span<const int> labels,
                       const ClassifierWeights& w, double scale, WeightCheck check) {
  if (!(scale > 0.0)) throw ContractError("cosmax scale must be positive");
  check_labels(labels, embeddings.rows(), w.num_classes(), "cosmax_loss");
  const CosineHead head = cosine_head(embeddings, w, check, "cosmax_loss");
  const std::size_t n = embeddings.rows();
  const std::size_t k = w.num_classes();

  LossOutput out;
  Tensor2 d_cos(n, k);
  std::vector<double> logits(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    for (std::size_t j = 0; j < k; ++j) logits[j] = scale * head.cosines(i, j);
    const double lse = log_sum_exp(logits);
    out.value += lse - logits[y];
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(logits[j] - lse);
      d_cos(i, j) = (p - (j == y ? 1.0 : 0.0)) * scale / static_cast<double>(n);
    }
  }
  out.value /= static_cast<double>(n);
  backprop_cosines(head, w, d_cos, out);
  check_finite_output(out, "cosmax_loss");
  return out;
}

LossOutput softmax_loss(const Tensor2& logits, std::span<const int> labels) {
  if (logits.rows() == 0 || logits.cols() == 0) throw DimensionError("softmax_loss: empty logits");
  check_labels(labels, logits.rows(), logits.cols(), "softmax_loss");
  const std::size_t n = logits.rows();
  LossOutput out;
  Tensor2 grad(n, logits.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = logits.row(i);
    const auto y = static_cast<std::size_t>(labels[i]);
    const double lse = log_sum_exp(row);
    out.value += lse - row[y];
    for (std::size_t j = 0; j < row.size(); ++j) {
      grad(i, j) = (std::exp(row[j] - lse) - (j == y ? 1.0 : 0.0)) / static_cast<double>(n);
    }
  }
  out.value /= static_cast<double>(n);
  out.d_logits = std::move(grad);
  check_finite_output(out, "softmax_loss");
  return out;
}

Tensor2 centroids(const Tensor2& embeddings, std::span<const int> labels,
                  std::size_t num_classes) {
  check_labels(labels, embeddings.rows(), num_classes, "centroids");
  Tensor2 out(num_classes, embeddings.cols());
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++counts[c];
    auto dst = out.row(c);
    const auto src = embeddings.row(i);
    for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += src[d];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw EmptySetError("centroids: class " + std::to_string(c) + " has no related examples");
    }
    for (double& v : out.row(c)) v /= static_cast<double>(counts[c]);
  }
  return out;
}

LossOutput centroid_alignment_loss(const Tensor2& novel_embeddings,
                                   std::span<const int> novel_labels, const Tensor2& centers,
                                   std::size_t related_count, PrefactorMode mode) {
  const std::size_t k = centers.rows();
  if (k == 0) throw MappingError("centroid_alignment_loss: no centroids");
  if (novel_embeddings.rows() == 0) throw EmptySetError("centroid_alignment_loss: empty novel batch");
  if (centers.cols() != novel_embeddings.cols()) {
    throw DimensionError("centroid_alignment_loss: centroid dim != embedding dim");
  }
  if (novel_labels.size() != novel_embeddings.rows()) {
    throw DimensionError("centroid_alignment_loss: label count != rows");
  }
  for (int y : novel_labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw MappingError("centroid_alignment_loss: no centroid for novel class " +
                         std::to_string(y));
    }
  }
  const std::size_t n = novel_embeddings.rows();
  double prefactor = 1.0 / static_cast<double>(n);
  if (mode == PrefactorMode::kAsWritten) {
    if (related_count == 0) {
      throw ContractError("centroid_alignment_loss: as-written prefactor needs N^rb > 0");
    }
    prefactor /= static_cast<double>(related_count);
  }

  LossOutput out;
  Tensor2 grad(n, novel_embeddings.cols());
  std::vector<double> neg_dist(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = novel_embeddings.row(i);
    const auto y = static_cast<std::size_t>(novel_labels[i]);
    for (std::size_t c = 0; c < k; ++c) neg_dist[c] = -squared_distance(z, centers.row(c));
    const double lse = log_sum_exp(neg_dist);
    out.value += lse - neg_dist[y];

    // d/dz [ d_y + lse(-d) ] = 2(z - mu_y) - sum_c p_c 2(z - mu_c)
    auto g = grad.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      const double weight = (c == y ? 1.0 : 0.0) - std::exp(neg_dist[c] - lse);
      if (weight == 0.0) continue;
      const auto mu = centers.row(c);
      for (std::size_t d = 0; d < g.size(); ++d) g[d] += 2.0 * weight * (z[d] - mu[d]);
    }
  }
  out.value *= prefactor;
  grad *= prefactor;
  out.d_embeddings = std::move(grad);
  check_finite_output(out, "centroid_alignment_loss");
  return out;
}

Tensor2 critic_input(const Tensor2& embeddings, std::span<const int> labels,
                     std::size_t num_classes) {
  check_labels(labels, embeddings.rows(), num_classes, "critic_input");
  const std::size_t d = embeddings.cols();
  Tensor2 out(embeddings.rows(), d + num_classes);
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    auto row = out.row(i);
    std::copy_n(embeddings.row(i).begin(), d, row.begin());
    row[d + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return out;
}

MlpParams init_critic(std::size_t embed_dim, std::size_t num_classes, std::size_t hidden,
                      Activation activation, std::mt19937_64& rng) {
  const std::size_t widths[] = {embed_dim + num_classes, hidden, 1};
  return init_mlp(widths, activation, rng);
}

namespace {

void check_critic(const MlpParams& critic, std::size_t input_cols, const char* what) {
  if (critic.output_dim() != 1) {
    throw DimensionError(std::string(what) + ": critic must produce a scalar");
  }
  if (critic.input_dim() != input_cols) {
    throw DimensionError(std::string(what) + ": critic expects " +
                         std::to_string(critic.input_dim()) + " inputs, got " +
                         std::to_string(input_cols) + " (embedding + one-hot)");
  }
}

}  // namespace

double critic_forward(std::span<const double> embedding, std::span<const double> label_onehot,
                      const MlpParams& critic) {
  check_critic(critic, embedding.size() + label_onehot.size(), "critic_forward");
  std::vector<double> row(embedding.begin(), embedding.end());
  row.insert(row.end(), label_onehot.begin(), label_onehot.end());
  const std::size_t width = row.size();
  const Tensor2 x(1, width, std::move(row));
  return encoder_forward(x, critic)(0, 0);
}

std::vector<double> critic_scores(const Tensor2& embeddings, std::span<const int> labels,
                                  std::size_t num_classes, const MlpParams& critic) {
  const Tensor2 x = critic_input(embeddings, labels, num_classes);
  check_critic(critic, x.cols(), "critic_scores");
  const Tensor2 h = encoder_forward(x, critic);
  return {h.values().begin(), h.values().end()};
}

LossOutput critic_loss(const Tensor2& novel_embeddings, std::span<const int> novel_labels,
                       const Tensor2& related_embeddings, std::span<const int> related_labels,
                       std::size_t num_classes, const MlpParams& critic) {
  if (novel_embeddings.rows() == 0 || related_embeddings.rows() == 0) {
    throw EmptySetError("critic_loss: both novel and related batches must be nonempty");
  }
  const Tensor2 x = vstack(critic_input(related_embeddings, related_labels, num_classes),
                           critic_input(novel_embeddings, novel_labels, num_classes));
  check_critic(critic, x.cols(), "critic_loss");
  const std::size_t n_rel = related_embeddings.rows();
  const double w_rel = 1.0 / static_cast<double>(n_rel);
  const double w_nov = -1.0 / static_cast<double>(novel_embeddings.rows());

  const Tensor2 h = encoder_forward(x, critic);
  Tensor2 upstream(x.rows(), 1);
  LossOutput out;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double w = i < n_rel ? w_rel : w_nov;
    upstream(i, 0) = w;
    out.value += w * h(i, 0);
  }
  out.d_critic = encoder_backward(x, critic, upstream).params;
  check_finite_output(out, "critic_loss");
  return out;
}

LossOutput adversarial_encoder_loss(const Tensor2& novel_embeddings,
                                    std::span<const int> novel_labels, std::size_t num_classes,
                                    const MlpParams& critic, PrefactorMode mode) {
  if (novel_embeddings.rows() == 0) throw EmptySetError("adversarial_encoder_loss: empty batch");
  if (num_classes == 0) throw DimensionError("adversarial_encoder_loss: no classes");
  const Tensor2 x = critic_input(novel_embeddings, novel_labels, num_classes);
  check_critic(critic, x.cols(), "adversarial_encoder_loss");
  const double prefactor = mode == PrefactorMode::kAsWritten
                               ? 1.0 / static_cast<double>(num_classes)
                               : 1.0 / static_cast<double>(novel_embeddings.rows());
  const Tensor2 h = encoder_forward(x, critic);
  LossOutput out;
  for (double v : h.values()) out.value += v;
  out.value *= prefactor;

  const Tensor2 upstream(x.rows(), 1, prefactor);
  const Tensor2 d_input = encoder_backward(x, critic, upstream).input;
  Tensor2 d_emb(novel_embeddings.rows(), novel_embeddings.cols());
  for (std::size_t i = 0; i < d_emb.rows(); ++i)
    std::copy_n(d_input.row(i).begin(), d_emb.cols(), d_emb.row(i).begin());
  out.d_embeddings = std::move(d_emb);
  check_finite_output(out, "adversarial_encoder_loss");
  return out;
}

MlpParams clip_params(MlpParams params, double bound) {
  if (!(bound > 0.0)) throw ContractError("clip bound must be positive");
  for (auto& block : params.blocks())
    for (double& v : block.values) v = std::clamp(v, -bound, bound);
  return params;
}

}  // namespace assoc
