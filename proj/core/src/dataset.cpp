#include "assoc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "assoc/errors.hpp"

namespace assoc {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kBase:
      return "base";
    case Split::kValidation:
      return "validation";
    case Split::kNovel:
      return "novel";
  }
  return "base";
}

Split parse_split(std::string_view text) {
  if (text == "base") return Split::kBase;
  if (text == "validation") return Split::kValidation;
  if (text == "novel") return Split::kNovel;
  throw SpecError("unknown split '" + std::string(text) + "'");
}

std::vector<int> LabeledDataset::classes() const {
  std::vector<int> out = labels;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::map<int, std::vector<std::size_t>> LabeledDataset::indices_by_class() const {
  std::map<int, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
  return out;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.split = split;
  out.features = gather_rows(features, rows);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(labels[r]);
  return out;
}

void LabeledDataset::validate() const {
  if (features.rows() != labels.size()) {
    throw DimensionError("dataset has " + std::to_string(features.rows()) + " rows but " +
                         std::to_string(labels.size()) + " labels");
  }
}

void DatasetSplits::validate() const {
  base.validate();
  validation.validate();
  novel.validate();
  const std::size_t d = base.dim();
  for (const LabeledDataset* s : {&validation, &novel}) {
    if (s->size() > 0 && s->dim() != d) throw DimensionError("splits disagree on feature dim");
  }
  const auto b = base.classes();
  const auto v = validation.classes();
  const auto n = novel.classes();
  auto overlaps = [](const std::vector<int>& x, const std::vector<int>& y) {
    std::vector<int> common;
    std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(common));
    return !common.empty();
  };
  if (overlaps(b, v) || overlaps(b, n) || overlaps(v, n)) {
    throw SpecError("dataset splits share class ids");
  }
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos
                                                                                : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw ConfigError(source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

DatasetSplits parse_csv(std::string_view text, const std::string& source) {
  std::vector<double> feats[3];
  std::vector<int> labels[3];
  std::size_t dim = 0;
  std::size_t line_no = 0;
  bool header_seen = false;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const auto fields = split_fields(line);
    if (!header_seen) {
      if (fields.size() < 3 || fields[fields.size() - 2] != "label" || fields.back() != "split") {
        fail(source, line_no, "header must list feature columns followed by 'label,split'");
      }
      dim = fields.size() - 2;
      header_seen = true;
      continue;
    }
    if (fields.size() != dim + 2) {
      fail(source, line_no, "expected " + std::to_string(dim + 2) + " fields, found " +
                                std::to_string(fields.size()));
    }
    Split split;
    try {
      split = parse_split(fields.back());
    } catch (const SpecError& e) {
      fail(source, line_no, e.what());
    }
    const auto s = static_cast<std::size_t>(split);
    for (std::size_t c = 0; c < dim; ++c) {
      const auto f = fields[c];
      double v = 0.0;
      const auto [end, err] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || err != std::errc() || end != f.data() + f.size() || !std::isfinite(v)) {
        fail(source, line_no, "feature column " + std::to_string(c) + " is not a finite number");
      }
      feats[s].push_back(v);
    }
    int label = 0;
    const auto lf = fields[dim];
    const auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
    if (ec != std::errc() || ptr != lf.data() + lf.size() || label < 0) {
      fail(source, line_no, "label must be a non-negative integer");
    }
    labels[s].push_back(label);
  }
  if (!header_seen) fail(source, line_no, "missing header row");

  DatasetSplits out;
  LabeledDataset* targets[3] = {&out.base, &out.validation, &out.novel};
  for (std::size_t s = 0; s < 3; ++s) {
    targets[s]->split = static_cast<Split>(s);
    targets[s]->features = Tensor2(labels[s].size(), dim, std::move(feats[s]));
    targets[s]->labels = std::move(labels[s]);
  }
  out.validate();
  return out;
}

DatasetSplits load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

void write_csv(const DatasetSplits& splits, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write dataset file " + path.string());
  const std::size_t d = splits.base.dim();
  for (std::size_t c = 0; c < d; ++c) out << 'f' << c << ',';
  out << "label,split\n";
  out << std::setprecision(17);
  for (const LabeledDataset* s : {&splits.base, &splits.validation, &splits.novel}) {
    for (std::size_t i = 0; i < s->size(); ++i) {
      for (double v : s->features.row(i)) out << v << ',';
      out << s->labels[i] << ',' << to_string(s->split) << '\n';
    }
  }
}

}  // namespace assoc
