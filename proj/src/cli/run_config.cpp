#include "gsvr/cli/run_config.hpp"

#include "gsvr/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace gsvr::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("invalid value '" + text + "' for " + key);
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

std::string format(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename T>
std::string format_list(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Access>
Field number(Access access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = parse_number<T>(k, v); },
          [access](const RunConfig& c) {
            const T value = access(const_cast<RunConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) {
              return format(value);
            } else {
              return std::to_string(value);
            }
          }};
}

template <typename T, typename Access>
Field list(Access access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = parse_list<T>(k, v); },
          [access](const RunConfig& c) { return format_list(access(const_cast<RunConfig&>(c))); }};
}

template <typename Access>
Field text(Access access) {
  return {[access](RunConfig& c, const std::string&, const std::string& v) { access(c) = trim(v); },
          [access](const RunConfig& c) { return std::string(access(const_cast<RunConfig&>(c))); }};
}

const std::vector<std::pair<std::string, Field>>& registry() {
  static const std::vector<std::pair<std::string, Field>> fields = {
      {"seed", number<std::uint64_t>([](RunConfig& c) -> auto& { return c.seed; })},
      {"epochs", number<std::size_t>([](RunConfig& c) -> auto& { return c.epochs; })},
      {"batch_size", number<std::size_t>([](RunConfig& c) -> auto& { return c.batch_size; })},
      {"eval_batch_size", number<std::size_t>([](RunConfig& c) -> auto& { return c.eval_batch_size; })},
      {"lr", number<double>([](RunConfig& c) -> auto& { return c.adam.lr; })},
      {"lr_decay", number<double>([](RunConfig& c) -> auto& { return c.adam.decay; })},
      {"data", text([](RunConfig& c) -> auto& { return c.data; })},
      {"out", Field{[](RunConfig& c, const std::string&, const std::string& v) { c.out = trim(v); },
                    [](const RunConfig& c) { return c.out.string(); }}},
      {"checkpoint", text([](RunConfig& c) -> auto& { return c.checkpoint; })},
      {"split", text([](RunConfig& c) -> auto& { return c.split; })},
      {"bits", number<unsigned>([](RunConfig& c) -> auto& { return c.bits; })},
      {"alphas", list<double>([](RunConfig& c) -> auto& { return c.alphas; })},
      {"variant", Field{[](RunConfig& c, const std::string&, const std::string& v) {
                          c.model.variant = model::parse_variant(trim(v));
                        },
                        [](const RunConfig& c) { return model::to_string(c.model.variant); }}},
      {"alpha", number<double>([](RunConfig& c) -> auto& { return c.model.alpha; })},
      {"embed_dim", number<std::size_t>([](RunConfig& c) -> auto& { return c.model.embed_dim; })},
      {"latent_dim", number<std::size_t>([](RunConfig& c) -> auto& { return c.model.latent_dim; })},
      {"mlp_hidden", list<std::size_t>([](RunConfig& c) -> auto& { return c.model.mlp_hidden; })},
      {"encoder_hidden", number<std::size_t>([](RunConfig& c) -> auto& { return c.model.encoder_hidden; })},
      {"prior_hidden", number<std::size_t>([](RunConfig& c) -> auto& { return c.model.prior_hidden; })},
      {"mc_samples", number<std::size_t>([](RunConfig& c) -> auto& { return c.model.mc_samples; })},
      {"moe_shared_experts", number<std::size_t>([](RunConfig& c) -> auto& { return c.model.moe.shared_experts; })},
      {"moe_specific_experts",
       number<std::size_t>([](RunConfig& c) -> auto& { return c.model.moe.specific_experts; })},
      {"moe_expert_hidden", number<std::size_t>([](RunConfig& c) -> auto& { return c.model.moe.expert_hidden; })},
      {"moe_expert_out", number<std::size_t>([](RunConfig& c) -> auto& { return c.model.moe.expert_out; })},
      {"synth_users", number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.num_users; })},
      {"synth_items", number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.num_items; })},
      {"synth_scenarios", number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.num_scenarios; })},
      {"synth_impressions", number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.num_impressions; })},
      {"synth_latent_dim", number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.latent_dim_true; })},
      {"synth_skew", list<double>([](RunConfig& c) -> auto& { return c.synth.scenario_skew; })},
      {"synth_noise", number<double>([](RunConfig& c) -> auto& { return c.synth.noise; })},
      {"synth_offset_scale", number<double>([](RunConfig& c) -> auto& { return c.synth.offset_scale; })},
      {"synth_signal_scale", number<double>([](RunConfig& c) -> auto& { return c.synth.signal_scale; })},
      {"synth_label_bias", number<double>([](RunConfig& c) -> auto& { return c.synth.label_bias; })},
      {"synth_seq_len", number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.seq_len; })},
      {"synth_session_size", number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.session_size; })},
      {"synth_categories", number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.num_categories; })},
      {"synth_brands_per_category",
       number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.brands_per_category; })},
      {"synth_behavior_pool", number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.behavior_pool; })},
  };
  return fields;
}

const Field& field(const std::string& key) {
  for (const auto& [name, f] : registry()) {
    if (name == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  synth.validate();
  adam.validate();
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch_size == 0 || eval_batch_size == 0) throw ConfigError("batch sizes must be >= 1");
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("alphas must lie in (0, 1)");
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : registry()) out.push_back(name);
    return out;
  }();
  return keys;
}

const std::vector<std::string>& model_keys() {
  static const std::vector<std::string> keys = {"variant",        "alpha",          "embed_dim",
                                                "latent_dim",     "mlp_hidden",     "encoder_hidden",
                                                "prior_hidden",   "mc_samples",     "moe_shared_experts",
                                                "moe_specific_experts", "moe_expert_hidden", "moe_expert_out"};
  return keys;
}

void set_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  field(key).set(cfg, key, value);
}

std::string get_value(const RunConfig& cfg, const std::string& key) { return field(key).get(cfg); }

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return out;
}

void apply_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  for (const auto& [k, v] : parse_key_values(in)) set_value(cfg, k, v);
}

void write_key_values(std::ostream& out, const RunConfig& cfg, const std::vector<std::string>& keys) {
  for (const auto& k : keys) out << k << '=' << get_value(cfg, k) << '\n';
}

}  // namespace gsvr::cli
