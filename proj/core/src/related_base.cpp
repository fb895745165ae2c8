#include "assoc/related_base.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include <json.hpp>

#include "assoc/errors.hpp"

namespace assoc {

SimilarityMatrix similarity_from_predictions(std::span<const int> base_ids,
                                             std::span<const int> labels,
                                             std::span<const int> predicted,
                                             std::size_t num_novel) {
  if (labels.size() != predicted.size()) {
    throw DimensionError("similarity: label and prediction counts differ");
  }
  if (num_novel == 0) throw DimensionError("similarity: no novel classes");
  std::map<int, std::size_t> row_of;
  for (std::size_t i = 0; i < base_ids.size(); ++i) row_of[base_ids[i]] = i;

  SimilarityMatrix m{{base_ids.begin(), base_ids.end()}, Tensor2(base_ids.size(), num_novel)};
  std::vector<std::size_t> counts(base_ids.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = row_of.find(labels[i]);
    if (it == row_of.end()) {
      throw MappingError("similarity: example of unknown base class " + std::to_string(labels[i]));
    }
    const int p = predicted[i];
    if (p < 0 || static_cast<std::size_t>(p) >= num_novel) {
      throw MappingError("similarity: prediction outside novel class range");
    }
    m.scores(it->second, static_cast<std::size_t>(p)) += 1.0;
    ++counts[it->second];
  }
  for (std::size_t r = 0; r < base_ids.size(); ++r) {
    if (counts[r] == 0) {
      throw EmptySetError("similarity: base class " + std::to_string(base_ids[r]) +
                          " has no examples");
    }
    for (double& v : m.scores.row(r)) v /= static_cast<double>(counts[r]);
  }
  return m;
}

SimilarityMatrix compute_similarity(const LabeledDataset& base, const MlpParams& encoder,
                                    const ClassifierWeights& novel_classifier) {
  if (base.size() == 0) throw EmptySetError("similarity: base set is empty");
  const Tensor2 z = encoder_forward(base.features, encoder);
  const std::vector<int> predicted = predict(z, novel_classifier);
  const std::vector<int> ids = base.classes();
  return similarity_from_predictions(ids, base.labels, predicted, novel_classifier.num_classes());
}

std::vector<int> RelatedBaseMap::owners(int base_id) const {
  std::vector<int> out;
  for (std::size_t j = 0; j < related.size(); ++j) {
    if (std::find(related[j].begin(), related[j].end(), base_id) != related[j].end()) {
      out.push_back(static_cast<int>(j));
    }
  }
  return out;
}

int RelatedBaseMap::novel_of(int base_id) const {
  const auto o = owners(base_id);
  if (o.empty()) throw MappingError("base class " + std::to_string(base_id) + " is not related");
  if (o.size() > 1) {
    throw MappingError("base class " + std::to_string(base_id) + " is shared by several novel classes");
  }
  return o.front();
}

bool RelatedBaseMap::disjoint() const {
  std::set<int> seen;
  for (const auto& list : related)
    for (int b : list)
      if (!seen.insert(b).second) return false;
  return true;
}

RelatedBaseMap select_related(const SimilarityMatrix& m, std::size_t per_class,
                              bool allow_shared) {
  const std::size_t kb = m.num_base();
  const std::size_t kn = m.num_novel();
  if (per_class == 0) throw ContractError("select_related: B must be positive");
  if (per_class > kb) {
    throw ContractError("select_related: B=" + std::to_string(per_class) + " exceeds " +
                        std::to_string(kb) + " base classes");
  }
  if (!allow_shared && per_class * kn > kb) {
    throw ContractError("select_related: insufficient base classes for " + std::to_string(kn) +
                        " disjoint lists of " + std::to_string(per_class));
  }

  RelatedBaseMap out;
  out.related.resize(kn);
  if (allow_shared) {
    for (std::size_t j = 0; j < kn; ++j) {
      std::vector<std::size_t> rows(kb);
      for (std::size_t i = 0; i < kb; ++i) rows[i] = i;
      std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
        return m.scores(a, j) > m.scores(b, j);
      });
      for (std::size_t t = 0; t < per_class; ++t) out.related[j].push_back(m.base_ids[rows[t]]);
    }
    return out;
  }

  // (score desc, base row asc, novel asc)
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  pairs.reserve(kb * kn);
  for (std::size_t i = 0; i < kb; ++i)
    for (std::size_t j = 0; j < kn; ++j) pairs.emplace_back(m.scores(i, j), i, j);
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<bool> taken(kb, false);
  std::size_t remaining = per_class * kn;
  for (const auto& [score, i, j] : pairs) {
    if (remaining == 0) break;
    if (taken[i] || out.related[j].size() >= per_class) continue;
    taken[i] = true;
    out.related[j].push_back(m.base_ids[i]);
    --remaining;
  }
  return out;
}

RelatedBaseMap substitute_random(const RelatedBaseMap& map, std::size_t count,
                                 std::span<const int> base_ids, std::mt19937_64& rng) {
  RelatedBaseMap out = map;
  if (count == 0) return out;
  std::set<int> in_use;
  for (auto& list : out.related) {
    if (count > list.size()) {
      throw ContractError("substitute_random: cannot replace " + std::to_string(count) + " of " +
                          std::to_string(list.size()) + " related classes");
    }
    list.resize(list.size() - count);
    in_use.insert(list.begin(), list.end());
  }
  for (std::size_t j = 0; j < out.related.size(); ++j) {
    const auto& original = map.related[j];
    std::vector<int> pool;
    for (int b : base_ids) {
      if (in_use.count(b) == 0 && std::find(original.begin(), original.end(), b) == original.end()) {
        pool.push_back(b);
      }
    }
    if (pool.size() < count) {
      throw ContractError("substitute_random: not enough unused base classes");
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t t = 0; t < count; ++t) {
      out.related[j].push_back(pool[t]);
      in_use.insert(pool[t]);
    }
  }
  return out;
}

LabeledDataset relabel_related(const LabeledDataset& examples, const RelatedBaseMap& map) {
  std::map<int, std::vector<int>> owners;
  for (std::size_t j = 0; j < map.related.size(); ++j)
    for (int b : map.related[j]) owners[b].push_back(static_cast<int>(j));

  std::vector<std::size_t> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto it = owners.find(examples.labels[i]);
    if (it == owners.end()) {
      throw MappingError("relabel_related: base class " + std::to_string(examples.labels[i]) +
                         " is not in the related map");
    }
    for (int novel : it->second) {
      rows.push_back(i);
      labels.push_back(novel);
    }
  }
  LabeledDataset out = examples.subset(rows);
  out.labels = std::move(labels);
  return out;
}

LabeledDataset gather_related(const LabeledDataset& base, const RelatedBaseMap& map) {
  std::set<int> wanted;
  for (const auto& list : map.related) wanted.insert(list.begin(), list.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < base.size(); ++i)
    if (wanted.count(base.labels[i]) != 0) rows.push_back(i);
  return relabel_related(base.subset(rows), map);
}

double selection_precision(const RelatedBaseMap& map,
                           const std::vector<std::vector<int>>& planted) {
  if (planted.size() != map.related.size()) {
    throw DimensionError("selection_precision: planted map covers a different class count");
  }
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t j = 0; j < map.related.size(); ++j) {
    for (int b : map.related[j]) {
      ++total;
      if (std::find(planted[j].begin(), planted[j].end(), b) != planted[j].end()) ++hits;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::string to_json(const RelatedBaseMap& map) {
  nlohmann::ordered_json doc;
  doc["per_class"] = map.related.empty() ? 0 : map.related.front().size();
  nlohmann::ordered_json related = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < map.related.size(); ++j) related[std::to_string(j)] = map.related[j];
  doc["related"] = std::move(related);
  return doc.dump(2);
}

RelatedBaseMap related_map_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MappingError(std::string("related map JSON: ") + e.what());
  }
  if (!doc.contains("related") || !doc["related"].is_object()) {
    throw MappingError("related map JSON: missing 'related' object");
  }
  RelatedBaseMap out;
  const auto& related = doc["related"];
  out.related.resize(related.size());
  for (const auto& [key, value] : related.items()) {
    std::size_t j = 0;
    try {
      j = std::stoul(key);
    } catch (const std::exception&) {
      throw MappingError("related map JSON: novel id '" + key + "' is not an integer");
    }
    if (j >= out.related.size()) throw MappingError("related map JSON: novel ids are not dense");
    out.related[j] = value.get<std::vector<int>>();
  }
  return out;
}

}  // namespace assoc
