#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "omclic/attack.hpp"

namespace omclic {

struct TriggerSpec {
  std::array<int, 3> color = {0, 0, 255};  // RGB, pure blue
  double size_fraction = 0.10;             // of image width
  std::string position = "bottom-left";    // corner token

  void validate() const;
  std::uint64_t hash() const;
};

enum class PoisonMode { SourceAgnostic, SourceSpecific };

struct PoisonSpec {
  std::string dataset_root;             // one directory per class label
  std::string infected_class;           // backdoor target label
  std::vector<std::string> donor_classes;
  int poison_count = 0;
  std::vector<Dims> target_dims_set;    // compromised input sizes
  Dims canvas_dims = {448, 448};
  ResizeAlgo algo = ResizeAlgo::Nearest;
  PoisonMode mode = PoisonMode::SourceAgnostic;
  int cover_count = 0;                  // source-specific mode only
  TriggerSpec trigger;
  std::string out_root;
};

struct ManifestEntry {
  std::string path;   // relative to the output root
  std::string label;
  std::string role;   // clean | attack | cover
  std::vector<std::string> donor_classes;   // attack only
  std::vector<Dims> embedded_dims;          // attack only
  std::vector<std::string> target_paths;    // attack only, relative
  std::vector<double> residuals;            // attack only, per dims mean-abs
  std::uint64_t trigger_hash = 0;           // attack/cover
};

struct PoisonManifest {
  std::string infected_class;
  ResizeAlgo algo = ResizeAlgo::Nearest;
  TriggerSpec trigger;
  Dims canvas_dims = {448, 448};
  std::vector<Dims> target_dims_set;
  int poison_count = 0;
  int total_images = 0;
  double poison_rate = 0.0;
  bool donor_reuse_warning = false;
  std::vector<ManifestEntry> entries;
};

/// Replaces pixels inside the corner square with the trigger color.
ImageU8 stamp_trigger(const ImageU8& image, const TriggerSpec& trig);

/// Builds the poisoned dataset under spec.out_root and writes
/// manifest.jsonl there. Deterministic for a fixed seed.
PoisonManifest build_poison_set(const PoisonSpec& spec,
                                const SolverConfig& solver_cfg,
                                std::uint64_t seed);

PoisonManifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const PoisonManifest& manifest);

struct ValidationReport {
  bool passed = true;
  std::vector<std::string> issues;
  int attack_entries_checked = 0;
};

/// Re-checks clean-label invariants, embed fidelity at every stored dims,
/// and trigger presence on the scaled outputs.
ValidationReport validate_manifest(const PoisonManifest& manifest,
                                   const std::string& out_root,
                                   double residual_tol = kDefaultResidualTol);

}  // namespace omclic
