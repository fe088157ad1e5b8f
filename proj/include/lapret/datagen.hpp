#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lapret/core.hpp"
#include "lapret/rng.hpp"

namespace lapret::data {

struct DmaRecord {
  std::string dma_id;
  std::int64_t population = 0;
  Eigen::VectorXd covariates;
  Series outcomes;
  Series snowfall;  // kg/m^2 per day

  void validate() const;
};

struct GeneratorSpec {
  double sigma = 2.0;
  double snow_threshold_h = 1.0;
  double control_threshold_l = 0.3;
  int total_tradezones = 3676;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Largest-remainder apportionment proportional to population; every DMA
/// gets at least one seat and ties go to the smallest dma_id.
std::map<std::string, int> allocate_tradezones(std::span<const DmaRecord> dmas, int total);

/// Draw from Normal(mean, sd^2) conditioned on x >= lower.
double sample_truncated_normal(Rng& rng, double mean, double sd, double lower = 0.0);

/// Samples one index with probability proportional to `weights` (all > 0).
std::size_t sample_proportional(Rng& rng, std::span<const double> weights);

/// Synthetic tradezones: outcomes truncated-normal around the parent DMA's
/// series, covariates inherited, event days drawn proportional to snowfall on
/// days above h. Tradezones of DMAs that never exceed h but exceed l are
/// dropped. Unit ids are "<dma_id>-tz<index>".
std::vector<UnitSeries> generate_tradezones(std::span<const DmaRecord> dmas, const GeneratorSpec& spec);

enum class DmaRole { treated, control, excluded };
DmaRole classify_dma(const DmaRecord& dma, const GeneratorSpec& spec);

// File schemas --------------------------------------------------------------

std::vector<UnitSeries> ingest(std::istream& panel, std::istream& covariates, std::istream& events);
std::vector<UnitSeries> ingest(const std::filesystem::path& panel, const std::filesystem::path& covariates,
                               const std::filesystem::path& events);

/// Event rows only; the returned units carry no outcomes or covariates.
std::vector<UnitSeries> read_events(std::istream& events);

std::vector<DmaRecord> read_dmas(std::istream& dma, std::istream& dma_panel);
std::vector<DmaRecord> read_dmas(const std::filesystem::path& dma, const std::filesystem::path& dma_panel);

void write_panel(std::ostream& out, std::span<const UnitSeries> units);
void write_covariates(std::ostream& out, std::span<const UnitSeries> units);
void write_events(std::ostream& out, std::span<const UnitSeries> units);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

}  // namespace lapret::data
