#include "assoc/cli/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "assoc/errors.hpp"
#include "assoc/preset.hpp"

namespace assoc::cli {
namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    const auto mark = node.Mark();
    if (mark.is_null()) throw ConfigError(source_ + ": " + what);
    throw ConfigError(source_ + ":" + std::to_string(mark.line + 1) + ": " + what);
  }

  template <class T>
  T get(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node, key + " must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::BadConversion&) {
      fail(node, "bad value '" + node.Scalar() + "' for " + key);
    }
  }

  std::size_t count(const YAML::Node& node, const std::string& key) const {
    const auto v = get<long long>(node, key);
    if (v < 0) fail(node, key + " must be >= 0");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t seed(const YAML::Node& node, const std::string& key) const {
    if (node.IsScalar() && !node.Scalar().empty() && node.Scalar()[0] == '-')
      fail(node, key + " must be >= 0");
    return get<std::uint64_t>(node, key);
  }

  Activation activation(const YAML::Node& node, const std::string& key) const {
    const auto s = get<std::string>(node, key);
    if (s == "tanh") return Activation::kTanh;
    if (s == "relu") return Activation::kRelu;
    fail(node, key + " must be tanh or relu");
  }

  PrefactorMode prefactor(const YAML::Node& node, const std::string& key) const {
    const auto s = get<std::string>(node, key);
    if (s == "as_written") return PrefactorMode::kAsWritten;
    if (s == "mean") return PrefactorMode::kMean;
    fail(node, key + " must be as_written or mean");
  }

  bool flag(const YAML::Node& node, const std::string& key) const { return get<bool>(node, key); }

  using Handler = std::function<void(const YAML::Node&)>;

  // Dispatches every key of a mapping; unknown keys are errors.
  void section(const YAML::Node& node, const std::string& name,
               const std::map<std::string, Handler>& handlers) const {
    if (!node.IsMap()) fail(node, name + " must be a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      const auto it = handlers.find(key);
      if (it == handlers.end()) {
        fail(kv.first, "unknown key '" + key + "' in " + (name.empty() ? "config" : name));
      }
      it->second(kv.second);
    }
  }

 private:
  std::string source_;
};

const char* activation_name(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }
const char* prefactor_name(PrefactorMode m) {
  return m == PrefactorMode::kMean ? "mean" : "as_written";
}

}  // namespace

void RunConfig::validate() const {
  if (synthetic.has_value() == !csv.empty())
    throw ConfigError("dataset needs exactly one of synthetic or csv");
  if (synthetic) {
    try {
      synthetic->validate();
    } catch (const SpecError& e) {
      throw ConfigError(e.what());
    }
  }
  model.validate();
  train.validate();
  if (eval.way < 2) throw ConfigError("eval.way must be >= 2");
  if (eval.shot < 1 || eval.query < 1) throw ConfigError("eval.shot and eval.query must be >= 1");
  if (episodes < 2) throw ConfigError("eval.episodes must be >= 2");
}

RunConfig default_run_config() {
  const Preset p = synthetic_preset();
  RunConfig c;
  c.synthetic = p.data;
  c.model = p.model;
  c.train = p.train;
  c.eval = p.eval;
  c.episodes = p.episodes;
  return c;
}

RunConfig parse_run_config(std::string_view text, const std::string& source,
                           const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  RunConfig c = default_run_config();
  if (root.IsNull()) return c;
  const Reader r(source);
  using H = Reader::Handler;

  auto arcmax = [&](ArcmaxConfig& a, const std::string& name) -> H {
    return [&r, &a, name](const YAML::Node& n) {
      r.section(n, name,
                {{"scale", [&](const YAML::Node& v) { a.scale = r.get<double>(v, name + ".scale"); }},
                 {"margin",
                  [&](const YAML::Node& v) { a.margin = r.get<double>(v, name + ".margin"); }}});
    };
  };

  auto dataset = [&](const YAML::Node& n) {
    bool have_synthetic = false;
    bool have_csv = false;
    r.section(n, "dataset",
              {{"synthetic",
                [&](const YAML::Node& s) {
                  have_synthetic = true;
                  SyntheticSpec& d = *c.synthetic;
                  auto sz = [&](std::size_t& f, const char* k) -> H {
                    return [&r, &f, k](const YAML::Node& v) { f = r.count(v, k); };
                  };
                  auto dbl = [&](double& f, const char* k) -> H {
                    return [&r, &f, k](const YAML::Node& v) { f = r.get<double>(v, k); };
                  };
                  r.section(s, "dataset.synthetic",
                            {{"dim", sz(d.dim, "dim")},
                             {"base_classes", sz(d.base_classes, "base_classes")},
                             {"validation_classes", sz(d.validation_classes, "validation_classes")},
                             {"novel_classes", sz(d.novel_classes, "novel_classes")},
                             {"relatives_per_novel", sz(d.relatives_per_novel, "relatives_per_novel")},
                             {"spread", dbl(d.spread, "spread")},
                             {"offset_scale", dbl(d.offset_scale, "offset_scale")},
                             {"shared_offset", dbl(d.shared_offset, "shared_offset")},
                             {"center_scale", dbl(d.center_scale, "center_scale")},
                             {"group_spread", dbl(d.group_spread, "group_spread")},
                             {"distractor_scale", dbl(d.distractor_scale, "distractor_scale")},
                             {"base_examples", sz(d.base_examples, "base_examples")},
                             {"validation_examples", sz(d.validation_examples, "validation_examples")},
                             {"novel_examples", sz(d.novel_examples, "novel_examples")},
                             {"seed", [&](const YAML::Node& v) { d.seed = r.seed(v, "seed"); }}});
                }},
               {"csv", [&](const YAML::Node& v) {
                  have_csv = true;
                  std::filesystem::path p = r.get<std::string>(v, "dataset.csv");
                  c.csv = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
                }}});
    if (have_synthetic && have_csv) r.fail(n, "dataset needs exactly one of synthetic or csv");
    if (have_csv) c.synthetic.reset();
  };

  auto model = [&](const YAML::Node& n) {
    ModelConfig& m = c.model;
    r.section(n, "model",
              {{"hidden",
                [&](const YAML::Node& v) {
                  if (!v.IsSequence()) r.fail(v, "model.hidden must be a list");
                  m.hidden.clear();
                  for (const auto& w : v) m.hidden.push_back(r.count(w, "model.hidden"));
                }},
               {"embedding_dim",
                [&](const YAML::Node& v) { m.embedding_dim = r.count(v, "model.embedding_dim"); }},
               {"activation",
                [&](const YAML::Node& v) { m.activation = r.activation(v, "model.activation"); }},
               {"critic_hidden",
                [&](const YAML::Node& v) { m.critic_hidden = r.count(v, "model.critic_hidden"); }},
               {"critic_activation", [&](const YAML::Node& v) {
                  m.critic_activation = r.activation(v, "model.critic_activation");
                }}});
  };

  auto train = [&](const YAML::Node& n) {
    TrainConfig& t = c.train;
    auto sz = [&](std::size_t& f, std::string k) -> H {
      return [&r, &f, k](const YAML::Node& v) { f = r.count(v, "train." + k); };
    };
    auto dbl = [&](double& f, std::string k) -> H {
      return [&r, &f, k](const YAML::Node& v) { f = r.get<double>(v, "train." + k); };
    };
    r.section(
        n, "train",
        {{"lr_clf", dbl(t.lr_clf, "lr_clf")},
         {"lr_centroid", dbl(t.lr_centroid, "lr_centroid")},
         {"lr_adversarial", dbl(t.lr_adversarial, "lr_adversarial")},
         {"lr_critic", dbl(t.lr_critic, "lr_critic")},
         {"batch_size", sz(t.batch_size, "batch_size")},
         {"pretrain_arcmax", arcmax(t.pretrain_arcmax, "train.pretrain_arcmax")},
         {"finetune_arcmax", arcmax(t.finetune_arcmax, "train.finetune_arcmax")},
         {"window", sz(t.window, "window")},
         {"patience", sz(t.patience, "patience")},
         {"max_epochs", sz(t.max_epochs, "max_epochs")},
         {"validation_episodes", sz(t.validation_episodes, "validation_episodes")},
         {"finetune_steps", sz(t.finetune_steps, "finetune_steps")},
         {"related_per_class", sz(t.related_per_class, "related_per_class")},
         {"allow_shared",
          [&](const YAML::Node& v) { t.allow_shared = r.flag(v, "train.allow_shared"); }},
         {"wrong_related", sz(t.wrong_related, "wrong_related")},
         {"critic_iterations", sz(t.critic_iterations, "critic_iterations")},
         {"clip", dbl(t.clip, "clip")},
         {"alignment_iterations", sz(t.alignment_iterations, "alignment_iterations")},
         {"centroid_prefactor",
          [&](const YAML::Node& v) {
            t.centroid_prefactor = r.prefactor(v, "train.centroid_prefactor");
          }},
         {"adversarial_prefactor",
          [&](const YAML::Node& v) {
            t.adversarial_prefactor = r.prefactor(v, "train.adversarial_prefactor");
          }},
         {"seed", [&](const YAML::Node& v) { t.seed = r.seed(v, "train.seed"); }}});
  };

  auto eval = [&](const YAML::Node& n) {
    r.section(n, "eval",
              {{"way", [&](const YAML::Node& v) { c.eval.way = r.count(v, "eval.way"); }},
               {"shot", [&](const YAML::Node& v) { c.eval.shot = r.count(v, "eval.shot"); }},
               {"query", [&](const YAML::Node& v) { c.eval.query = r.count(v, "eval.query"); }},
               {"episodes",
                [&](const YAML::Node& v) { c.episodes = r.count(v, "eval.episodes"); }}});
  };

  r.section(root, "",
            {{"dataset", dataset},
             {"model", model},
             {"train", train},
             {"eval", eval},
             {"output", [&](const YAML::Node& v) {
                c.output_dir = r.get<std::string>(v, "output");
              }}});
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.string(), path.parent_path());
}

std::string to_yaml(const RunConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
  if (c.synthetic) {
    const SyntheticSpec& d = *c.synthetic;
    out << YAML::Key << "synthetic" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "dim" << YAML::Value << d.dim;
    out << YAML::Key << "base_classes" << YAML::Value << d.base_classes;
    out << YAML::Key << "validation_classes" << YAML::Value << d.validation_classes;
    out << YAML::Key << "novel_classes" << YAML::Value << d.novel_classes;
    out << YAML::Key << "relatives_per_novel" << YAML::Value << d.relatives_per_novel;
    out << YAML::Key << "spread" << YAML::Value << d.spread;
    out << YAML::Key << "offset_scale" << YAML::Value << d.offset_scale;
    out << YAML::Key << "shared_offset" << YAML::Value << d.shared_offset;
    out << YAML::Key << "center_scale" << YAML::Value << d.center_scale;
    out << YAML::Key << "group_spread" << YAML::Value << d.group_spread;
    out << YAML::Key << "distractor_scale" << YAML::Value << d.distractor_scale;
    out << YAML::Key << "base_examples" << YAML::Value << d.base_examples;
    out << YAML::Key << "validation_examples" << YAML::Value << d.validation_examples;
    out << YAML::Key << "novel_examples" << YAML::Value << d.novel_examples;
    out << YAML::Key << "seed" << YAML::Value << d.seed;
    out << YAML::EndMap;
  } else {
    out << YAML::Key << "csv" << YAML::Value << c.csv.string();
  }
  out << YAML::EndMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "hidden" << YAML::Value << YAML::Flow << c.model.hidden;
  out << YAML::Key << "embedding_dim" << YAML::Value << c.model.embedding_dim;
  out << YAML::Key << "activation" << YAML::Value << activation_name(c.model.activation);
  out << YAML::Key << "critic_hidden" << YAML::Value << c.model.critic_hidden;
  out << YAML::Key << "critic_activation" << YAML::Value
      << activation_name(c.model.critic_activation);
  out << YAML::EndMap;

  const TrainConfig& t = c.train;
  auto arcmax = [&](const char* key, const ArcmaxConfig& a) {
    out << YAML::Key << key << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "scale" << YAML::Value << a.scale;
    out << YAML::Key << "margin" << YAML::Value << a.margin;
    out << YAML::EndMap;
  };
  out << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "lr_clf" << YAML::Value << t.lr_clf;
  out << YAML::Key << "lr_centroid" << YAML::Value << t.lr_centroid;
  out << YAML::Key << "lr_adversarial" << YAML::Value << t.lr_adversarial;
  out << YAML::Key << "lr_critic" << YAML::Value << t.lr_critic;
  out << YAML::Key << "batch_size" << YAML::Value << t.batch_size;
  arcmax("pretrain_arcmax", t.pretrain_arcmax);
  arcmax("finetune_arcmax", t.finetune_arcmax);
  out << YAML::Key << "window" << YAML::Value << t.window;
  out << YAML::Key << "patience" << YAML::Value << t.patience;
  out << YAML::Key << "max_epochs" << YAML::Value << t.max_epochs;
  out << YAML::Key << "validation_episodes" << YAML::Value << t.validation_episodes;
  out << YAML::Key << "finetune_steps" << YAML::Value << t.finetune_steps;
  out << YAML::Key << "related_per_class" << YAML::Value << t.related_per_class;
  out << YAML::Key << "allow_shared" << YAML::Value << t.allow_shared;
  out << YAML::Key << "wrong_related" << YAML::Value << t.wrong_related;
  out << YAML::Key << "critic_iterations" << YAML::Value << t.critic_iterations;
  out << YAML::Key << "clip" << YAML::Value << t.clip;
  out << YAML::Key << "alignment_iterations" << YAML::Value << t.alignment_iterations;
  out << YAML::Key << "centroid_prefactor" << YAML::Value << prefactor_name(t.centroid_prefactor);
  out << YAML::Key << "adversarial_prefactor" << YAML::Value
      << prefactor_name(t.adversarial_prefactor);
  out << YAML::Key << "seed" << YAML::Value << t.seed;
  out << YAML::EndMap;

  out << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "way" << YAML::Value << c.eval.way;
  out << YAML::Key << "shot" << YAML::Value << c.eval.shot;
  out << YAML::Key << "query" << YAML::Value << c.eval.query;
  out << YAML::Key << "episodes" << YAML::Value << c.episodes;
  out << YAML::EndMap;

  out << YAML::Key << "output" << YAML::Value << c.output_dir.string();
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string config_hash(const RunConfig& config) {
  // Where results land does not change the experiment.
  RunConfig c = config;
  c.output_dir.clear();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : to_yaml(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace assoc::cli
