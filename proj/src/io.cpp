#include "lapret/io.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "lapret/datagen.hpp"

namespace lapret {

std::string_view to_string(Aggregation a) { return a == Aggregation::mean ? "mean" : "min"; }
std::string_view to_string(UndetectedPolicy p) { return p == UndetectedPolicy::exclude ? "exclude" : "zero"; }
std::string_view to_string(Transform t) { return t == Transform::levels ? "levels" : "lagged-diff"; }

Aggregation parse_aggregation(std::string_view s) {
  if (s == "mean") return Aggregation::mean;
  if (s == "min") return Aggregation::min;
  throw Error(ErrorCode::invalid_argument, "aggregation must be mean or min");
}

UndetectedPolicy parse_undetected(std::string_view s) {
  if (s == "exclude") return UndetectedPolicy::exclude;
  if (s == "zero") return UndetectedPolicy::count_as_zero;
  throw Error(ErrorCode::invalid_argument, "undetected policy must be exclude or zero");
}

Transform parse_transform(std::string_view s) {
  if (s == "levels") return Transform::levels;
  if (s == "lagged-diff") return Transform::lagged_diff;
  throw Error(ErrorCode::invalid_argument, "transform must be levels or lagged-diff");
}

namespace {

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const Json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<T>();
}

}  // namespace

Json to_json(const PairLapret& p) {
  return {{"pair_id", p.pair_id}, {"lapret_day", optional_json(p.lapret_day)}, {"d", optional_json(p.d)}};
}

PairLapret pair_lapret_from_json(const Json& j) {
  return {j.at("pair_id").get<int>(), optional_from<Day>(j, "lapret_day"), optional_from<int>(j, "d")};
}

Json to_json(const PilotResult& r) {
  Json per_pair = Json::array();
  for (const auto& p : r.per_pair) per_pair.push_back(to_json(p));
  return {{"d_hat", optional_json(r.d_hat)},
          {"d_floor", optional_json(r.d_floor)},
          {"aggregation", to_string(r.aggregation)},
          {"undetected", to_string(r.undetected)},
          {"n_detected", r.n_detected},
          {"per_pair", std::move(per_pair)}};
}

PilotResult pilot_result_from_json(const Json& j) {
  PilotResult r;
  r.d_hat = optional_from<double>(j, "d_hat");
  r.d_floor = optional_from<int>(j, "d_floor");
  r.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
  r.undetected = parse_undetected(j.at("undetected").get<std::string>());
  r.n_detected = j.at("n_detected").get<int>();
  for (const auto& p : j.at("per_pair")) r.per_pair.push_back(pair_lapret_from_json(p));
  return r;
}

Json to_json(const EffectEstimate& e) {
  return {{"relative_day", e.relative_day}, {"estimate", e.estimate}, {"ci_low", e.ci_low},
          {"ci_high", e.ci_high},           {"n_pairs", e.n_pairs}};
}

EffectEstimate effect_from_json(const Json& j) {
  return {j.at("relative_day").get<int>(), j.at("estimate").get<double>(), j.at("ci_low").get<double>(),
          j.at("ci_high").get<double>(), j.at("n_pairs").get<int>()};
}

Json to_json(const StudyResult& r) {
  Json effects = Json::array();
  for (const auto& e : r.effects) effects.push_back(to_json(e));
  return {{"causal_window_days", r.causal_window_days},
          {"n_pairs", r.n_pairs},
          {"effects", std::move(effects)},
          {"pilot", to_json(r.pilot)}};
}

StudyResult study_result_from_json(const Json& j) {
  StudyResult r;
  r.causal_window_days = j.at("causal_window_days").get<int>();
  r.n_pairs = j.at("n_pairs").get<int>();
  for (const auto& e : j.at("effects")) r.effects.push_back(effect_from_json(e));
  r.pilot = pilot_result_from_json(j.at("pilot"));
  return r;
}

Json to_json(const HeuristicRanges& h) {
  return {{"alpha_min", h.alpha_min}, {"alpha_max", h.alpha_max}, {"epsilon_min", h.epsilon_min},
          {"epsilon_max", h.epsilon_max}};
}

HeuristicRanges heuristic_ranges_from_json(const Json& j) {
  return {j.at("alpha_min").get<double>(), j.at("alpha_max").get<double>(), j.at("epsilon_min").get<double>(),
          j.at("epsilon_max").get<double>()};
}

Json to_json(const MatchSet& m) {
  Json pairs = Json::array();
  for (const auto& [t, c] : m.pairs) pairs.push_back({{"treated", t}, {"control", c}});
  return {{"pairs", std::move(pairs)}, {"unmatched_treated", m.unmatched_treated}, {"caliper", optional_json(m.caliper)}};
}

MatchSet match_set_from_json(const Json& j) {
  MatchSet m;
  for (const auto& p : j.at("pairs")) m.pairs.emplace_back(p.at("treated").get<std::string>(), p.at("control").get<std::string>());
  m.unmatched_treated = j.at("unmatched_treated").get<std::vector<std::string>>();
  m.caliper = optional_from<double>(j, "caliper");
  return m;
}

Json to_json(const StudyConfig& c) {
  return {{"alpha", c.params.alpha},
          {"epsilon", c.params.epsilon},
          {"aggregation", to_string(c.aggregation)},
          {"undetected", to_string(c.undetected)},
          {"transform", to_string(c.transform)},
          {"caliper", optional_json(c.caliper)}};
}

StudyConfig study_config_from_json(const Json& j) {
  StudyConfig c;
  c.params = {j.at("alpha").get<double>(), j.at("epsilon").get<double>()};
  c.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
  c.undetected = parse_undetected(j.at("undetected").get<std::string>());
  c.transform = parse_transform(j.at("transform").get<std::string>());
  c.caliper = optional_from<double>(j, "caliper");
  return c;
}

Json to_json(const StudyPlan& p) {
  return {{"seed", p.seed},
          {"config", to_json(p.config)},
          {"pilot_unit_ids", p.pilot_unit_ids},
          {"main_unit_ids", p.main_unit_ids}};
}

StudyPlan study_plan_from_json(const Json& j) {
  StudyPlan p;
  p.seed = j.at("seed").get<std::uint64_t>();
  p.config = study_config_from_json(j.at("config"));
  p.pilot_unit_ids = j.at("pilot_unit_ids").get<std::set<UnitId>>();
  p.main_unit_ids = j.at("main_unit_ids").get<std::set<UnitId>>();
  return p;
}

void write_sweep_csv(std::ostream& out, const sim::SweepResult& result) {
  using data::format_number;
  out << "alpha,epsilon,sigma,contamination,d_hat,d_floor,n_detected\n";
  for (const auto& r : result.rows) {
    out << format_number(r.alpha) << ',' << format_number(r.epsilon) << ',' << format_number(r.sigma) << ','
        << sim::to_string(r.contamination) << ',' << (r.d_hat ? format_number(*r.d_hat) : "") << ','
        << (r.d_floor ? std::to_string(*r.d_floor) : "") << ',' << r.n_detected << '\n';
  }
}

void write_effects_csv(std::ostream& out, std::span<const EffectEstimate> effects) {
  using data::format_number;
  out << "relative_day,estimate,ci_low,ci_high,n_pairs\n";
  for (const auto& e : effects) {
    out << e.relative_day << ',' << format_number(e.estimate) << ',' << format_number(e.ci_low) << ','
        << format_number(e.ci_high) << ',' << e.n_pairs << '\n';
  }
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::schema_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string unit_set_digest(const std::set<UnitId>& ids) {
  std::string joined;
  for (const auto& id : ids) joined += id + '\n';
  return sha256_hex(joined);
}

Json RunManifest::to_json() const {
  return {{"subcommand", subcommand}, {"parameters", parameters}, {"seed", seed},
          {"input_digests", input_digests}, {"tool_version", tool_version}, {"timestamp", timestamp}};
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace lapret
