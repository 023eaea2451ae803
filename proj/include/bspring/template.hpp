#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bspring {

enum class FiducialClass { Sys, MS, Onset, NF };

std::string_view to_string(FiducialClass c) noexcept;
std::optional<FiducialClass> parse_fiducial_class(std::string_view s) noexcept;

struct Provenance {
  enum class Kind { Prime, Generated } kind = Kind::Prime;
  std::size_t region_id = 0;  // meaningful for generated templates
};

// An annotated exemplar cycle. `samples` runs from one onset to the next,
// both inclusive, so the comparison features have samples.size() - 1 entries
// and every annotation indexes into [0, features().size()).
struct Template {
  int id = 0;
  std::vector<double> samples;
  double fs = 0.0;
  std::map<FiducialClass, std::size_t> ann;
  Provenance provenance;

  std::size_t feature_length() const noexcept { return samples.empty() ? 0 : samples.size() - 1; }
  std::vector<double> features() const;
  bool is_prime() const noexcept { return provenance.kind == Provenance::Kind::Prime; }
};

// Checks the annotation invariants: Sys, MS and Onset present, all inside
// [0, feature_length()), Onset < MS < Sys. Throws ConfigError otherwise.
void validate_template(const Template& t);

// Builds a template from samples[onset..next_onset] of a signal: Onset = 0,
// Sys = amplitude maximum, MS = steepest first difference before Sys.
Template make_template_from_cycle(std::vector<double> cycle_samples, double fs, int id = 0);

// Samples go to `path` (fs header + one value per row); annotations go to
// the sidecar `<path>.ann.csv` with class,index rows.
void save_template(const std::filesystem::path& path, const Template& t);
Template load_template(const std::filesystem::path& path, int id = 0);
std::filesystem::path annotation_path(const std::filesystem::path& samples_path);

}  // namespace bspring
