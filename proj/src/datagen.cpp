#include "lapret/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace lapret::data {

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;
};

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

CsvTable read_csv(std::istream& in, std::string_view what) {
  CsvTable table;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorCode::schema_error, std::string(what) + " line " + std::to_string(number) + ": expected " +
                                               std::to_string(table.header.size()) + " fields");
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(number);
  }
  if (table.header.empty()) throw Error(ErrorCode::schema_error, std::string(what) + " is empty");
  return table;
}

void expect_header(const CsvTable& t, std::span<const std::string_view> expected, std::string_view what,
                   bool allow_extra = false) {
  bool ok = allow_extra ? t.header.size() >= expected.size() : t.header.size() == expected.size();
  for (std::size_t i = 0; ok && i < expected.size(); ++i) ok = t.header[i] == expected[i];
  if (!ok) {
    std::string want;
    for (auto e : expected) want += (want.empty() ? "" : ",") + std::string(e);
    throw Error(ErrorCode::schema_error, std::string(what) + " header must start with '" + want + "'");
  }
}

double parse_real(const std::string& s, std::string_view what, int line) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::schema_error, std::string(what) + " line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

long long parse_integer(const std::string& s, std::string_view what, int line) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::schema_error, std::string(what) + " line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
  return v;
}

Day parse_day(const std::string& s, std::string_view what, int line) {
  const auto d = parse_integer(s, what, line);
  if (d < 1 || d > 1'000'000) {
    throw Error(ErrorCode::schema_error, std::string(what) + " line " + std::to_string(line) + ": day must be >= 1");
  }
  return static_cast<Day>(d);
}

/// Collects (day -> value) rows per key, rejecting duplicates.
template <typename Key>
struct DayTable {
  std::vector<Key> order;
  std::map<Key, std::map<Day, std::vector<double>>> rows;

  void add(const Key& key, Day day, std::vector<double> values, std::string_view kind) {
    auto [it, inserted] = rows.try_emplace(key);
    if (inserted) order.push_back(key);
    if (!it->second.emplace(day, std::move(values)).second) {
      throw Error(ErrorCode::duplicate_row,
                  std::string(kind) + " " + key + " has a duplicated row for day " + std::to_string(day));
    }
  }

  /// Column `col` as a contiguous series starting at day 1.
  Series series(const Key& key, std::size_t col, std::string_view kind) const {
    const auto& days = rows.at(key);
    const Day last = days.rbegin()->first;
    if (days.begin()->first != 1 || static_cast<std::size_t>(last) != days.size()) {
      throw Error(ErrorCode::non_contiguous_days,
                  std::string(kind) + " " + key + " days do not form the contiguous range 1.." + std::to_string(last));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(days.size()));
    Eigen::Index k = 0;
    for (const auto& [day, values] : days) v[k++] = values[col];
    return {1, std::move(v)};
  }
};

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::schema_error, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_number(double value) {
  // Plain decimals for everyday magnitudes, shortest scientific otherwise.
  char buf[512];
  const double magnitude = std::abs(value);
  const auto format = magnitude == 0 || (magnitude >= 1e-6 && magnitude < 1e15) ? std::chars_format::fixed
                                                                                 : std::chars_format::scientific;
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, format);
  return std::string(buf, ptr);
}

void DmaRecord::validate() const {
  if (population <= 0) throw Error(ErrorCode::schema_error, "DMA " + dma_id + " must have positive population");
  if (outcomes.first_day != snowfall.first_day || outcomes.size() != snowfall.size()) {
    throw Error(ErrorCode::schema_error, "DMA " + dma_id + ": outcomes and snowfall must share the day range");
  }
  if ((snowfall.values.array() < 0).any()) throw Error(ErrorCode::schema_error, "DMA " + dma_id + " has negative snowfall");
}

void GeneratorSpec::validate() const {
  if (!(std::isfinite(sigma) && sigma > 0)) throw Error(ErrorCode::invalid_argument, "sigma must be finite and > 0");
  if (!(control_threshold_l < snow_threshold_h)) throw Error(ErrorCode::invalid_argument, "require l < h");
  if (total_tradezones < 1) throw Error(ErrorCode::invalid_argument, "total tradezones must be positive");
}

std::map<std::string, int> allocate_tradezones(std::span<const DmaRecord> dmas, int total) {
  if (dmas.empty()) throw Error(ErrorCode::invalid_argument, "no DMAs");
  if (total < static_cast<int>(dmas.size())) {
    throw Error(ErrorCode::total_too_small, "need at least one tradezone per DMA");
  }
  std::vector<const DmaRecord*> sorted;
  for (const auto& d : dmas) {
    if (d.population <= 0) throw Error(ErrorCode::schema_error, "DMA " + d.dma_id + " must have positive population");
    sorted.push_back(&d);
  }
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->dma_id < b->dma_id; });

  const double population = std::accumulate(sorted.begin(), sorted.end(), 0.0,
                                            [](double s, auto* d) { return s + static_cast<double>(d->population); });
  std::vector<int> seats(sorted.size());
  std::vector<double> remainder(sorted.size());
  int assigned = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double quota = total * static_cast<double>(sorted[i]->population) / population;
    seats[i] = static_cast<int>(std::floor(quota));
    remainder[i] = quota - seats[i];
    assigned += seats[i];
  }
  std::vector<std::size_t> by_remainder(sorted.size());
  std::iota(by_remainder.begin(), by_remainder.end(), 0);
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (int k = 0; assigned < total; ++k, ++assigned) ++seats[by_remainder[static_cast<std::size_t>(k)]];

  // Minimum of one seat, taken from the currently largest allocation.
  for (std::size_t i = 0; i < seats.size(); ++i) {
    if (seats[i] > 0) continue;
    const auto donor = std::max_element(seats.begin(), seats.end()) - seats.begin();
    --seats[static_cast<std::size_t>(donor)];
    seats[i] = 1;
  }

  std::map<std::string, int> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) out[sorted[i]->dma_id] = seats[i];
  return out;
}

double sample_truncated_normal(Rng& rng, double mean, double sd, double lower) {
  if (sd <= 0) return std::max(mean, lower);
  const double a = (lower - mean) / sd;
  if (a <= 0.5) {
    std::normal_distribution<double> normal(0.0, 1.0);
    while (true) {
      const double z = normal(rng);
      if (z >= a) return mean + sd * z;
    }
  }
  // Exponential proposal for the far tail (Robert, 1995).
  const double rate = (a + std::sqrt(a * a + 4)) / 2;
  while (true) {
    const double z = a - std::log(1.0 - uniform01(rng)) / rate;
    if (uniform01(rng) <= std::exp(-(z - rate) * (z - rate) / 2)) return mean + sd * z;
  }
}

std::size_t sample_proportional(Rng& rng, std::span<const double> weights) {
  if (weights.empty()) throw Error(ErrorCode::invalid_argument, "no weights");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double u = uniform01(rng) * total;
  double cumulative = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    if (u < cumulative) return i;
  }
  return weights.size() - 1;
}

DmaRole classify_dma(const DmaRecord& dma, const GeneratorSpec& spec) {
  const double peak = dma.snowfall.empty() ? 0.0 : dma.snowfall.values.maxCoeff();
  if (peak > spec.snow_threshold_h) return DmaRole::treated;
  if (peak <= spec.control_threshold_l) return DmaRole::control;
  return DmaRole::excluded;
}

std::vector<UnitSeries> generate_tradezones(std::span<const DmaRecord> dmas, const GeneratorSpec& spec) {
  spec.validate();
  bool any_treated = false, any_control = false;
  for (const auto& d : dmas) {
    d.validate();
    const auto role = classify_dma(d, spec);
    any_treated |= role == DmaRole::treated;
    any_control |= role == DmaRole::control;
  }
  if (!any_treated) throw Error(ErrorCode::no_treated_dmas, "no DMA has a day with snowfall above h");
  if (!any_control) throw Error(ErrorCode::no_control_dmas, "no DMA stays at or below l throughout");

  const auto seats = allocate_tradezones(dmas, spec.total_tradezones);
  std::vector<UnitSeries> units;
  for (const auto& dma : dmas) {
    const auto role = classify_dma(dma, spec);
    if (role == DmaRole::excluded) continue;

    std::vector<Day> eligible;
    std::vector<double> weights;
    for (Day t = dma.snowfall.first_day; t <= dma.snowfall.last_day(); ++t) {
      if (dma.snowfall[t] > spec.snow_threshold_h) {
        eligible.push_back(t);
        weights.push_back(dma.snowfall[t]);
      }
    }

    const int count = seats.at(dma.dma_id);
    for (int j = 0; j < count; ++j) {
      Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(j)}, dma.dma_id));
      UnitSeries unit;
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "-tz%04d", j);
      unit.unit_id = dma.dma_id + suffix;
      unit.covariates = dma.covariates;
      Eigen::VectorXd y(dma.outcomes.size());
      for (Eigen::Index k = 0; k < y.size(); ++k) {
        y[k] = sample_truncated_normal(rng, dma.outcomes.values[k], spec.sigma, 0.0);
      }
      unit.outcomes = Series(dma.outcomes.first_day, std::move(y));
      if (role == DmaRole::treated) {
        unit.event_indicator = true;
        unit.event_time = eligible[sample_proportional(rng, weights)];
      }
      units.push_back(std::move(unit));
    }
  }
  return units;
}

std::vector<UnitSeries> ingest(std::istream& panel_in, std::istream& covariates_in, std::istream& events_in) {
  static constexpr std::string_view panel_header[] = {"unit_id", "day", "outcome"};
  static constexpr std::string_view cov_header[] = {"unit_id"};
  static constexpr std::string_view event_header[] = {"unit_id", "event_indicator", "event_day"};

  const auto panel = read_csv(panel_in, "panel");
  expect_header(panel, panel_header, "panel");
  DayTable<UnitId> outcomes;
  for (std::size_t r = 0; r < panel.rows.size(); ++r) {
    const auto& f = panel.rows[r];
    const int line = panel.line_numbers[r];
    if (f[0].empty()) throw Error(ErrorCode::schema_error, "panel line " + std::to_string(line) + ": empty unit_id");
    outcomes.add(f[0], parse_day(f[1], "panel", line), {parse_real(f[2], "panel", line)}, "unit");
  }

  std::map<UnitId, UnitSeries> units;
  for (const auto& id : outcomes.order) {
    UnitSeries u;
    u.unit_id = id;
    u.outcomes = outcomes.series(id, 0, "unit");
    units.emplace(id, std::move(u));
  }

  const auto cov = read_csv(covariates_in, "covariates");
  expect_header(cov, cov_header, "covariates", true);
  std::set<UnitId> seen;
  for (std::size_t r = 0; r < cov.rows.size(); ++r) {
    const auto& f = cov.rows[r];
    const int line = cov.line_numbers[r];
    auto it = units.find(f[0]);
    if (it == units.end()) throw Error(ErrorCode::schema_error, "covariates for unknown unit " + f[0]);
    if (!seen.insert(f[0]).second) throw Error(ErrorCode::duplicate_row, "unit " + f[0] + " has duplicated covariates");
    Eigen::VectorXd x(static_cast<Eigen::Index>(f.size() - 1));
    for (std::size_t c = 1; c < f.size(); ++c) x[static_cast<Eigen::Index>(c - 1)] = parse_real(f[c], "covariates", line);
    it->second.covariates = std::move(x);
  }

  const auto events = read_csv(events_in, "events");
  expect_header(events, event_header, "events");
  std::set<UnitId> with_event;
  for (std::size_t r = 0; r < events.rows.size(); ++r) {
    const auto& f = events.rows[r];
    const int line = events.line_numbers[r];
    auto it = units.find(f[0]);
    if (it == units.end()) throw Error(ErrorCode::dangling_event, "event row for unknown unit " + f[0]);
    if (!with_event.insert(f[0]).second) throw Error(ErrorCode::duplicate_row, "unit " + f[0] + " has duplicated events");
    auto& u = it->second;
    if (f[1] == "1") {
      if (f[2].empty()) throw Error(ErrorCode::schema_error, "treated unit " + f[0] + " needs an event_day");
      u.event_indicator = true;
      u.event_time = parse_day(f[2], "events", line);
      if (!u.outcomes.contains(*u.event_time)) {
        throw Error(ErrorCode::schema_error, "unit " + f[0] + ": event_day outside the panel range");
      }
    } else if (f[1] == "0") {
      if (!f[2].empty()) throw Error(ErrorCode::schema_error, "control unit " + f[0] + " must leave event_day empty");
    } else {
      throw Error(ErrorCode::schema_error, "events line " + std::to_string(line) + ": event_indicator must be 0 or 1");
    }
  }

  std::vector<UnitSeries> out;
  out.reserve(units.size());
  for (const auto& id : outcomes.order) {
    if (!seen.contains(id)) throw Error(ErrorCode::schema_error, "unit " + id + " has no covariates row");
    if (!with_event.contains(id)) throw Error(ErrorCode::schema_error, "unit " + id + " has no events row");
    out.push_back(std::move(units.at(id)));
  }
  validate_dataset(out);
  return out;
}

std::vector<UnitSeries> ingest(const std::filesystem::path& panel, const std::filesystem::path& covariates,
                               const std::filesystem::path& events) {
  auto p = open(panel);
  auto c = open(covariates);
  auto e = open(events);
  return ingest(p, c, e);
}

std::vector<UnitSeries> read_events(std::istream& events_in) {
  static constexpr std::string_view event_header[] = {"unit_id", "event_indicator", "event_day"};
  const auto events = read_csv(events_in, "events");
  expect_header(events, event_header, "events");
  std::vector<UnitSeries> out;
  std::set<UnitId> seen;
  for (std::size_t r = 0; r < events.rows.size(); ++r) {
    const auto& f = events.rows[r];
    const int line = events.line_numbers[r];
    if (!seen.insert(f[0]).second) throw Error(ErrorCode::duplicate_row, "unit " + f[0] + " has duplicated events");
    UnitSeries u;
    u.unit_id = f[0];
    if (f[1] == "1") {
      u.event_indicator = true;
      if (f[2].empty()) throw Error(ErrorCode::schema_error, "treated unit " + f[0] + " needs an event_day");
      u.event_time = parse_day(f[2], "events", line);
    } else if (f[1] != "0" || !f[2].empty()) {
      throw Error(ErrorCode::schema_error, "events line " + std::to_string(line) + " is malformed");
    }
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<DmaRecord> read_dmas(std::istream& dma_in, std::istream& panel_in) {
  static constexpr std::string_view dma_header[] = {"dma_id", "population"};
  static constexpr std::string_view panel_header[] = {"dma_id", "day", "outcome", "snowfall_kg_m2"};

  const auto dma = read_csv(dma_in, "dma");
  expect_header(dma, dma_header, "dma", true);
  const auto panel = read_csv(panel_in, "dma_panel");
  expect_header(panel, panel_header, "dma_panel");

  DayTable<std::string> series;
  for (std::size_t r = 0; r < panel.rows.size(); ++r) {
    const auto& f = panel.rows[r];
    const int line = panel.line_numbers[r];
    series.add(f[0], parse_day(f[1], "dma_panel", line),
               {parse_real(f[2], "dma_panel", line), parse_real(f[3], "dma_panel", line)}, "DMA");
  }

  std::vector<DmaRecord> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < dma.rows.size(); ++r) {
    const auto& f = dma.rows[r];
    const int line = dma.line_numbers[r];
    if (!seen.insert(f[0]).second) throw Error(ErrorCode::duplicate_row, "DMA " + f[0] + " listed twice");
    if (!series.rows.contains(f[0])) throw Error(ErrorCode::schema_error, "DMA " + f[0] + " has no panel rows");
    DmaRecord rec;
    rec.dma_id = f[0];
    rec.population = parse_integer(f[1], "dma", line);
    rec.covariates.resize(static_cast<Eigen::Index>(f.size() - 2));
    for (std::size_t c = 2; c < f.size(); ++c) rec.covariates[static_cast<Eigen::Index>(c - 2)] = parse_real(f[c], "dma", line);
    rec.outcomes = series.series(f[0], 0, "DMA");
    rec.snowfall = series.series(f[0], 1, "DMA");
    rec.validate();
    out.push_back(std::move(rec));
  }
  for (const auto& id : series.order) {
    if (!seen.contains(id)) throw Error(ErrorCode::dangling_event, "panel rows for unknown DMA " + id);
  }
  return out;
}

std::vector<DmaRecord> read_dmas(const std::filesystem::path& dma, const std::filesystem::path& dma_panel) {
  auto d = open(dma);
  auto p = open(dma_panel);
  return read_dmas(d, p);
}

void write_panel(std::ostream& out, std::span<const UnitSeries> units) {
  out << "unit_id,day,outcome\n";
  for (const auto& u : units) {
    for (Day t = u.outcomes.first_day; t <= u.outcomes.last_day(); ++t) {
      out << u.unit_id << ',' << t << ',' << format_number(u.outcomes[t]) << '\n';
    }
  }
}

void write_covariates(std::ostream& out, std::span<const UnitSeries> units) {
  const Eigen::Index k = units.empty() ? 0 : units.front().covariates.size();
  out << "unit_id";
  for (Eigen::Index c = 1; c <= k; ++c) out << ",c" << c;
  out << '\n';
  for (const auto& u : units) {
    out << u.unit_id;
    for (Eigen::Index c = 0; c < u.covariates.size(); ++c) out << ',' << format_number(u.covariates[c]);
    out << '\n';
  }
}

void write_events(std::ostream& out, std::span<const UnitSeries> units) {
  out << "unit_id,event_indicator,event_day\n";
  for (const auto& u : units) {
    out << u.unit_id << ',' << (u.event_indicator ? 1 : 0) << ',';
    if (u.event_time) out << *u.event_time;
    out << '\n';
  }
}

}  // namespace lapret::data
