#include "filt_snn/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <vector>

#include "json.hpp"

#include "filt_snn/errors.hpp"

namespace filt_snn {

using nlohmann::json;

namespace {

struct Position {
  std::size_t line = 1;
  std::size_t column = 1;
};

Position position_of(std::string_view text, std::size_t offset) {
  Position pos;
  offset = std::min(offset, text.size());
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++pos.line;
      pos.column = 1;
    } else {
      ++pos.column;
    }
  }
  return pos;
}

// Offset of the quoted key for each path component in turn; best effort, the
// document has already parsed.
std::size_t locate(std::string_view text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  std::size_t found = 0;
  for (const auto& key : path) {
    const std::string quoted = "\"" + key + "\"";
    std::size_t at = text.find(quoted, pos);
    while (at != std::string_view::npos) {
      std::size_t after = at + quoted.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      at = text.find(quoted, at + 1);
    }
    if (at == std::string_view::npos) return found;
    found = at;
    pos = at + quoted.size();
  }
  return found;
}

std::string dotted(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) {
    if (!out.empty()) out += '.';
    out += p;
  }
  return out;
}

class Reader {
 public:
  Reader(std::string_view text, std::string_view source) : text_(text), source_(source) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& message) const {
    const Position pos = position_of(text_, path.empty() ? 0 : locate(text_, path));
    throw ConfigError(std::string(source_), pos.line, pos.column,
                      path.empty() ? message : dotted(path) + ": " + message);
  }

  void object(const json& node, const std::vector<std::string>& path,
              std::initializer_list<const char*> allowed) const {
    if (!node.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : node.items()) {
      const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
      if (!known) {
        auto where = path;
        where.push_back(key);
        fail(where, "unknown key");
      }
    }
  }

  void number(const json& obj, std::vector<std::string> path, const char* key, double& out) const {
    if (!obj.contains(key)) return;
    path.push_back(key);
    const json& v = obj.at(key);
    if (!v.is_number()) fail(path, "expected a number");
    out = v.get<double>();
  }

  template <typename Int>
  void count(const json& obj, std::vector<std::string> path, const char* key, Int& out) const {
    if (!obj.contains(key)) return;
    path.push_back(key);
    const json& v = obj.at(key);
    if (!v.is_number_unsigned()) fail(path, "expected a non-negative integer");
    out = v.get<Int>();
  }

  void boolean(const json& obj, std::vector<std::string> path, const char* key, bool& out) const {
    if (!obj.contains(key)) return;
    path.push_back(key);
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(path, "expected true or false");
    out = v.get<bool>();
  }

  void string(const json& obj, std::vector<std::string> path, const char* key, std::string& out) const {
    if (!obj.contains(key)) return;
    path.push_back(key);
    const json& v = obj.at(key);
    if (!v.is_string()) fail(path, "expected a string");
    out = v.get<std::string>();
  }

 private:
  std::string_view text_;
  std::string_view source_;
};

}  // namespace

ConfigError::ConfigError(const std::string& source, std::size_t line, std::size_t column,
                         const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

void RunConfig::validate() const {
  topology.validate();
  train.validate();
  encoder.validate();
  kernel.validate();
  if (topology.inputs() != kImagePixels) {
    throw std::invalid_argument("topology: the input layer must have " + std::to_string(kImagePixels) +
                                " neurons");
  }
  if (topology.classes() != 10) {
    throw std::invalid_argument("topology: the output layer must have 10 neurons");
  }
}

RunConfig parse_run_config(std::string_view text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const Position pos = position_of(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string msg = e.what();
    if (const auto colon = msg.find("syntax error"); colon != std::string::npos) msg = msg.substr(colon);
    throw ConfigError(std::string(source), pos.line, pos.column, msg);
  }

  const Reader r(text, source);
  RunConfig cfg;
  r.object(doc, {}, {"topology", "train", "encoder", "kernel", "init", "data", "output_dir"});

  if (doc.contains("topology")) {
    const json& node = doc["topology"];
    r.object(node, {"topology"}, {"layer_sizes"});
    if (node.contains("layer_sizes")) {
      const json& sizes = node["layer_sizes"];
      if (!sizes.is_array()) r.fail({"topology", "layer_sizes"}, "expected an array of integers");
      cfg.topology.layer_sizes.clear();
      for (const json& s : sizes) {
        if (!s.is_number_unsigned()) r.fail({"topology", "layer_sizes"}, "expected an array of integers");
        cfg.topology.layer_sizes.push_back(s.get<std::size_t>());
      }
    }
  }

  if (doc.contains("train")) {
    const json& node = doc["train"];
    const std::vector<std::string> p{"train"};
    r.object(node, p,
             {"eta", "beta", "eps_rms", "gamma", "delta_t", "d_t", "dropout_rate", "batch_size", "batches", "seed",
              "eval_every", "sum_batch_updates", "threads", "duration", "dt"});
    TrainConfig& t = cfg.train;
    r.number(node, p, "eta", t.eta);
    r.number(node, p, "beta", t.beta);
    r.number(node, p, "eps_rms", t.eps_rms);
    r.number(node, p, "gamma", t.gamma);
    r.number(node, p, "delta_t", t.delta_t);
    r.number(node, p, "d_t", t.d_t);
    r.number(node, p, "dropout_rate", t.dropout_rate);
    r.count(node, p, "batch_size", t.batch_size);
    r.count(node, p, "batches", t.batches);
    r.count(node, p, "seed", t.seed);
    r.count(node, p, "eval_every", t.eval_every);
    r.boolean(node, p, "sum_batch_updates", t.sum_batch_updates);
    r.count(node, p, "threads", t.threads);
    r.number(node, p, "duration", t.window.duration);
    r.number(node, p, "dt", t.window.dt);
  }

  if (doc.contains("encoder")) {
    const json& node = doc["encoder"];
    const std::vector<std::string> p{"encoder"};
    r.object(node, p, {"horizon", "sigma", "pixel_threshold"});
    r.number(node, p, "horizon", cfg.encoder.horizon);
    r.number(node, p, "sigma", cfg.encoder.sigma);
    r.number(node, p, "pixel_threshold", cfg.encoder.pixel_threshold);
  }

  if (doc.contains("kernel")) {
    const json& node = doc["kernel"];
    const std::vector<std::string> p{"kernel"};
    r.object(node, p, {"tau_m", "tau_s", "eps0", "u_r", "v_t", "tau_q"});
    r.number(node, p, "tau_m", cfg.kernel.tau_m);
    r.number(node, p, "tau_s", cfg.kernel.tau_s);
    r.number(node, p, "eps0", cfg.kernel.eps0);
    r.number(node, p, "u_r", cfg.kernel.u_r);
    r.number(node, p, "v_t", cfg.kernel.v_t);
    r.number(node, p, "tau_q", cfg.kernel.tau_q);
  }

  if (doc.contains("init")) {
    std::string scheme;
    r.string(doc, {}, "init", scheme);
    try {
      cfg.init = init_scheme_from_string(scheme);
    } catch (const std::invalid_argument& e) {
      r.fail({"init"}, e.what());
    }
  }

  if (doc.contains("data")) {
    const json& node = doc["data"];
    const std::vector<std::string> p{"data"};
    r.object(node, p,
             {"dir", "train_images", "train_labels", "test_images", "test_labels", "train_subset", "test_subset",
              "subset_seed"});
    std::string dir = cfg.data.dir.string();
    r.string(node, p, "dir", dir);
    cfg.data.dir = dir;
    r.string(node, p, "train_images", cfg.data.train_images);
    r.string(node, p, "train_labels", cfg.data.train_labels);
    r.string(node, p, "test_images", cfg.data.test_images);
    r.string(node, p, "test_labels", cfg.data.test_labels);
    r.count(node, p, "train_subset", cfg.data.train_subset);
    r.count(node, p, "test_subset", cfg.data.test_subset);
    r.count(node, p, "subset_seed", cfg.data.subset_seed);
  }

  if (doc.contains("output_dir")) {
    std::string out;
    r.string(doc, {}, "output_dir", out);
    cfg.output_dir = out;
  }

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(source), 1, 1, e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.string());
}

std::string dump_run_config(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  json doc = {
      {"topology", {{"layer_sizes", cfg.topology.layer_sizes}}},
      {"train",
       {{"eta", t.eta},
        {"beta", t.beta},
        {"eps_rms", t.eps_rms},
        {"gamma", t.gamma},
        {"delta_t", t.delta_t},
        {"d_t", t.d_t},
        {"dropout_rate", t.dropout_rate},
        {"batch_size", t.batch_size},
        {"batches", t.batches},
        {"seed", t.seed},
        {"eval_every", t.eval_every},
        {"sum_batch_updates", t.sum_batch_updates},
        {"threads", t.threads},
        {"duration", t.window.duration},
        {"dt", t.window.dt}}},
      {"encoder",
       {{"horizon", cfg.encoder.horizon},
        {"sigma", cfg.encoder.sigma},
        {"pixel_threshold", cfg.encoder.pixel_threshold}}},
      {"kernel",
       {{"tau_m", cfg.kernel.tau_m},
        {"tau_s", cfg.kernel.tau_s},
        {"eps0", cfg.kernel.eps0},
        {"u_r", cfg.kernel.u_r},
        {"v_t", cfg.kernel.v_t},
        {"tau_q", cfg.kernel.tau_q}}},
      {"init", std::string(to_string(cfg.init))},
      {"data",
       {{"dir", cfg.data.dir.string()},
        {"train_images", cfg.data.train_images},
        {"train_labels", cfg.data.train_labels},
        {"test_images", cfg.data.test_images},
        {"test_labels", cfg.data.test_labels},
        {"train_subset", cfg.data.train_subset},
        {"test_subset", cfg.data.test_subset},
        {"subset_seed", cfg.data.subset_seed}}},
      {"output_dir", cfg.output_dir.string()},
  };
  return doc.dump(2) + "\n";
}

void apply_data_dir_env(RunConfig& cfg) {
  const char* dir = std::getenv(kDataDirEnv);
  if (dir != nullptr && *dir != '\0') cfg.data.dir = dir;
}

}  // namespace filt_snn
