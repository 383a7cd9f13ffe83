#include "kinv/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace kinv {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

long long parse_integer(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected integer, got '" + value + "'");
  }
  if (pos != value.size()) {
    throw ConfigError(key, "expected integer, got '" + value + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected real number, got '" + value + "'");
  }
  if (pos != value.size()) {
    throw ConfigError(key, "expected real number, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ConfigError(key, "expected boolean, got '" + value + "'");
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::Uki: return "uki";
    case Method::UkiReparam: return "uki-reparam";
    case Method::Tuki: return "tuki";
    case Method::Eki: return "eki";
    case Method::Eaki: return "eaki";
    case Method::Etki: return "etki";
    case Method::EtkiUnbiased: return "etki-unbiased";
  }
  return "?";
}

bool is_ensemble_method(Method m) {
  return m == Method::Eki || m == Method::Eaki || m == Method::Etki ||
         m == Method::EtkiUnbiased;
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no),
                        "expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(line_no),
                        "expected 'key = value', got '" + line + "'");
    }
    if (kv.count(key) != 0) {
      throw ConfigError(key, "duplicate key");
    }
    kv[key] = value;
  }

  RunConfig cfg;
  auto take = [&kv](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  // problem
  if (auto v = take("problem")) {
    if (*v != "elliptic" && *v != "bernoulli" && *v != "twofid" &&
        *v != "subspace-mc") {
      throw ConfigError("problem", "unknown problem '" + *v + "'");
    }
    cfg.problem = *v;
  } else {
    throw ConfigError("problem", "missing required key");
  }

  if (auto v = take("method")) {
    static const std::map<std::string, Method> methods = {
        {"uki", Method::Uki},         {"uki-reparam", Method::UkiReparam},
        {"tuki", Method::Tuki},       {"eki", Method::Eki},
        {"eaki", Method::Eaki},       {"etki", Method::Etki},
        {"etki-unbiased", Method::EtkiUnbiased},
    };
    auto it = methods.find(*v);
    if (it == methods.end()) {
      throw ConfigError("method", "unknown method '" + *v + "'");
    }
    cfg.method = it->second;
  }

  if (auto v = take("alpha")) {
    cfg.alpha = parse_real("alpha", *v);
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) {
      throw ConfigError("alpha", "must lie in (0, 1], got " + *v);
    }
  }
  if (auto v = take("n_iter")) {
    const long long n = parse_integer("n_iter", *v);
    if (n < 1) throw ConfigError("n_iter", "must be >= 1");
    cfg.n_iter = static_cast<int>(n);
  }
  if (auto v = take("n_rank")) {
    const long long n = parse_integer("n_rank", *v);
    if (n < 1) throw ConfigError("n_rank", "must be >= 1");
    cfg.n_rank = static_cast<Eigen::Index>(n);
  }
  if (auto v = take("ensemble_size")) {
    const long long n = parse_integer("ensemble_size", *v);
    if (n < 2) throw ConfigError("ensemble_size", "must be >= 2");
    cfg.ensemble_size = static_cast<Eigen::Index>(n);
  }
  if (auto v = take("policy")) {
    if (*v == "all-high") {
      cfg.policy = EvaluationPolicy::AllHigh;
    } else if (*v == "mean-high-others-reduced") {
      cfg.policy = EvaluationPolicy::MeanHighOthersReduced;
    } else {
      throw ConfigError("policy", "unknown policy '" + *v + "'");
    }
  }
  if (auto v = take("seed")) {
    cfg.seed = static_cast<std::uint64_t>(parse_integer("seed", *v));
  }
  if (auto v = take("output")) cfg.output = *v;
  if (auto v = take("state_output")) cfg.state_output = *v;
  if (auto v = take("verify")) cfg.verify = parse_bool("verify", *v);
  if (auto v = take("timing")) cfg.timing = parse_bool("timing", *v);
  if (auto v = take("threads")) {
    const long long n = parse_integer("threads", *v);
    if (n < 1) throw ConfigError("threads", "must be >= 1");
    cfg.threads = static_cast<int>(n);
  }

  if (auto v = take("problem.n")) {
    const long long n = parse_integer("problem.n", *v);
    if (n < 1) throw ConfigError("problem.n", "must be >= 1");
    cfg.problem_n = static_cast<Eigen::Index>(n);
  }
  if (auto v = take("problem.seed")) {
    cfg.problem_seed = static_cast<std::uint64_t>(parse_integer("problem.seed", *v));
  }
  if (auto v = take("problem.n_fine")) {
    cfg.problem_n_fine = static_cast<Eigen::Index>(parse_integer("problem.n_fine", *v));
  }
  if (auto v = take("problem.n_coarse")) {
    cfg.problem_n_coarse =
        static_cast<Eigen::Index>(parse_integer("problem.n_coarse", *v));
  }
  if (auto v = take("problem.n_params")) {
    cfg.problem_n_params =
        static_cast<Eigen::Index>(parse_integer("problem.n_params", *v));
  }
  if (auto v = take("problem.trials")) {
    const long long n = parse_integer("problem.trials", *v);
    if (n < 1) throw ConfigError("problem.trials", "must be >= 1");
    cfg.problem_trials = static_cast<int>(n);
  }
  if (auto v = take("problem.samples")) {
    const long long n = parse_integer("problem.samples", *v);
    if (n < 1) throw ConfigError("problem.samples", "must be >= 1");
    cfg.problem_samples = static_cast<Eigen::Index>(n);
  }

  if (!kv.empty()) {
    throw ConfigError(kv.begin()->first, "unknown key");
  }

  // Cross-field validation.
  if (cfg.problem == "subspace-mc") {
    if (cfg.problem_samples > cfg.problem_n) {
      throw ConfigError("problem.samples", "must be <= problem.n");
    }
    return cfg;  // method and n_iter are not used by this problem
  }

  if (!cfg.method) {
    throw ConfigError("method", "missing required key");
  }
  if (cfg.n_iter < 1) {
    throw ConfigError("n_iter", "missing required key");
  }
  if (cfg.method == Method::Eki && !cfg.seed) {
    throw ConfigError("seed", "required for the stochastic method eki");
  }
  if (cfg.ensemble_size && !is_ensemble_method(*cfg.method)) {
    throw ConfigError("ensemble_size",
                      "only valid for ensemble methods, not " +
                          method_name(*cfg.method));
  }
  if (is_ensemble_method(*cfg.method) &&
      cfg.policy == EvaluationPolicy::MeanHighOthersReduced) {
    throw ConfigError("policy",
                      "mean-high-others-reduced applies to sigma-point methods; "
                      "ensemble particles carry no mean point");
  }
  if (cfg.method == Method::UkiReparam && cfg.problem != "elliptic") {
    throw ConfigError("method",
                      "uki-reparam requires a problem with a reparameterization "
                      "basis (elliptic)");
  }
  if (cfg.problem == "twofid" &&
      (cfg.method == Method::Tuki || cfg.method == Method::UkiReparam) &&
      cfg.n_rank > cfg.problem_n_params) {
    throw ConfigError("n_rank", "must be <= problem.n_params for twofid");
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("config", "cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace kinv
