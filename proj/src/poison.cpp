#include "omclic/poison.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "omclic/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace omclic {

void TriggerSpec::validate() const {
  if (!(size_fraction > 0.0) || size_fraction > 0.5)
    throw Error("trigger size_fraction must be in (0, 0.5]");
  for (int c : color)
    if (c < 0 || c > 255) throw Error("trigger color components must be in [0,255]");
  if (position != "bottom-left" && position != "bottom-right" &&
      position != "top-left" && position != "top-right")
    throw Error("unknown trigger position token: " + position);
}

std::uint64_t TriggerSpec::hash() const {
  // FNV-1a over the defining fields
  std::uint64_t h = 1469598103934665603ull;
  const auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  for (int c : color) mix(static_cast<std::uint64_t>(c));
  mix(static_cast<std::uint64_t>(std::llround(size_fraction * 1e6)));
  for (char c : position) mix(static_cast<std::uint64_t>(c));
  return h;
}

ImageU8 stamp_trigger(const ImageU8& image, const TriggerSpec& trig) {
  trig.validate();
  const int side = static_cast<int>(std::lround(trig.size_fraction * image.width));
  if (side > image.height || side > image.width)
    throw TriggerTooLarge("trigger square does not fit inside the image");

  const bool bottom = trig.position.starts_with("bottom");
  const bool left = trig.position.ends_with("left");
  const int r0 = bottom ? image.height - side : 0;
  const int c0 = left ? 0 : image.width - side;

  ImageU8 out = image;
  for (int r = r0; r < r0 + side; ++r)
    for (int c = c0; c < c0 + side; ++c) {
      if (out.channels == 1) {
        // grayscale trigger: luma of the configured color
        out.at(r, c, 0) = quantize(0.299 * trig.color[0] + 0.587 * trig.color[1] +
                                   0.114 * trig.color[2]);
      } else {
        for (int ch = 0; ch < 3; ++ch)
          out.at(r, c, ch) = static_cast<std::uint8_t>(trig.color[ch]);
      }
    }
  return out;
}

namespace {

std::vector<std::string> list_pngs(const fs::path& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png")
      files.push_back(e.path().filename().string());
  std::sort(files.begin(), files.end());
  return files;
}

json dims_to_json(const std::vector<Dims>& dims) {
  json arr = json::array();
  for (const auto& [h, w] : dims) arr.push_back({h, w});
  return arr;
}

std::vector<Dims> dims_from_json(const json& arr) {
  std::vector<Dims> out;
  for (const auto& d : arr) out.push_back({d.at(0).get<int>(), d.at(1).get<int>()});
  return out;
}

// square region of the trigger after downscale to `dims`, shrunk by one
// pixel per edge to stay clear of resampling blend at the border
struct Rect {
  int r0, c0, r1, c1;  // half-open
  bool empty() const { return r0 >= r1 || c0 >= c1; }
};

Rect scaled_trigger_rect(const TriggerSpec& trig, Dims dims) {
  const auto [h, w] = dims;
  const int side = static_cast<int>(std::lround(trig.size_fraction * w));
  const bool bottom = trig.position.starts_with("bottom");
  const bool left = trig.position.ends_with("left");
  Rect r;
  r.r0 = (bottom ? h - side : 0) + 1;
  r.r1 = (bottom ? h : side) - 1;
  r.c0 = (left ? 0 : w - side) + 1;
  r.c1 = (left ? side : w) - 1;
  return r;
}

}  // namespace

PoisonManifest build_poison_set(const PoisonSpec& spec,
                                const SolverConfig& solver_cfg,
                                std::uint64_t seed) {
  spec.trigger.validate();
  if (spec.poison_count < 0) throw Error("poison_count must be >= 0");
  if (spec.target_dims_set.empty()) throw Error("target_dims_set must be non-empty");
  {
    std::set<Dims> uniq(spec.target_dims_set.begin(), spec.target_dims_set.end());
    if (uniq.size() != spec.target_dims_set.size())
      throw DuplicateTargetSize("target_dims_set must be pairwise distinct");
  }
  for (const auto& [h, w] : spec.target_dims_set)
    if (h >= spec.canvas_dims.first || w >= spec.canvas_dims.second)
      throw TargetNotSmaller("every target size must be smaller than the canvas");
  for (const std::string& d : spec.donor_classes)
    if (d == spec.infected_class)
      throw Error("infected_class must not be a donor class");

  const fs::path root(spec.dataset_root);
  const fs::path out_root(spec.out_root);

  // class label -> sorted file list
  std::map<std::string, std::vector<std::string>> classes;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory())
      classes[e.path().filename().string()] = list_pngs(e.path());
  if (!classes.count(spec.infected_class))
    throw Error("infected class directory not found: " + spec.infected_class);

  std::mt19937_64 rng(seed);

  // choose attack sources from the infected class
  std::vector<std::string> infected_files = classes[spec.infected_class];
  if (static_cast<std::size_t>(spec.poison_count) > infected_files.size())
    throw Error("poison_count exceeds images available in the infected class");
  std::shuffle(infected_files.begin(), infected_files.end(), rng);
  std::vector<std::string> attack_sources(
      infected_files.begin(), infected_files.begin() + spec.poison_count);
  const std::set<std::string> attack_source_set(attack_sources.begin(),
                                                attack_sources.end());

  const std::size_t slots_per_attack = spec.target_dims_set.size();
  if (spec.poison_count > 0) {
    if (spec.donor_classes.size() < slots_per_attack)
      throw InsufficientDonors("need at least one donor class per target size");
    for (const std::string& d : spec.donor_classes)
      if (!classes.count(d) || classes[d].empty())
        throw InsufficientDonors("donor class has no images: " + d);
  }

  PoisonManifest manifest;
  manifest.infected_class = spec.infected_class;
  manifest.algo = spec.algo;
  manifest.trigger = spec.trigger;
  manifest.canvas_dims = spec.canvas_dims;
  manifest.target_dims_set = spec.target_dims_set;
  manifest.poison_count = spec.poison_count;

  fs::create_directories(out_root);
  fs::create_directories(out_root / "_targets");

  // donor draw state: per class, next unused index; wraps with warning
  std::map<std::string, std::vector<std::string>> donor_pool;
  std::map<std::string, std::size_t> donor_next;
  for (const std::string& d : spec.donor_classes) {
    donor_pool[d] = classes[d];
    std::shuffle(donor_pool[d].begin(), donor_pool[d].end(), rng);
    donor_next[d] = 0;
  }
  const auto draw_donor = [&](const std::string& cls) -> std::string {
    auto& idx = donor_next[cls];
    const auto& pool = donor_pool[cls];
    if (idx >= pool.size()) {
      manifest.donor_reuse_warning = true;
      idx = 0;
    }
    return pool[idx++];
  };

  // copy every clean file (attack sources are replaced, not duplicated)
  for (const auto& [label, files] : classes) {
    fs::create_directories(out_root / label);
    for (const std::string& f : files) {
      if (label == spec.infected_class && attack_source_set.count(f)) continue;
      fs::copy_file(root / label / f, out_root / label / f,
                    fs::copy_options::overwrite_existing);
      ManifestEntry e;
      e.path = (fs::path(label) / f).string();
      e.label = label;
      e.role = "clean";
      manifest.entries.push_back(std::move(e));
      ++manifest.total_images;
    }
  }

  // craft one attack image per selected source
  std::vector<std::string> donor_order = spec.donor_classes;
  for (int i = 0; i < spec.poison_count; ++i) {
    std::shuffle(donor_order.begin(), donor_order.end(), rng);

    ImageU8 source = read_png((root / spec.infected_class / attack_sources[i]).string());
    if (source.height < spec.canvas_dims.first || source.width < spec.canvas_dims.second)
      throw CraftFailed("source image smaller than canvas: " + attack_sources[i]);
    if (source.height != spec.canvas_dims.first || source.width != spec.canvas_dims.second)
      source = scale(source, spec.canvas_dims, spec.algo);

    AttackSpec aspec;
    aspec.source = source;
    aspec.algo = spec.algo;
    aspec.solver = solver_cfg;
    // the backdoor only works if the trigger survives the downscale exactly;
    // that outweighs the loss-optimal craft, which shades the trigger region
    // whenever the donors disagree anywhere on the shared sampling grid
    aspec.prefer_exact_embed = true;

    ManifestEntry entry;
    entry.role = "attack";
    entry.label = spec.infected_class;
    entry.trigger_hash = spec.trigger.hash();
    entry.embedded_dims = spec.target_dims_set;

    char buf[32];
    std::snprintf(buf, sizeof buf, "poison_%04d", i);
    const std::string stem(buf);

    for (std::size_t s = 0; s < slots_per_attack; ++s) {
      const std::string donor_cls = donor_order[s];
      const std::string donor_file = draw_donor(donor_cls);
      ImageU8 donor = read_png((root / donor_cls / donor_file).string());
      const Dims dims = spec.target_dims_set[s];
      if (donor.height < dims.first || donor.width < dims.second)
        throw InsufficientDonors("donor image smaller than target dims: " + donor_file);
      if (donor.channels != source.channels)
        throw ChannelMismatch("donor channel count differs from source: " + donor_file);
      // trigger goes on at the donor's original resolution, then resize
      const ImageU8 target =
          scale(stamp_trigger(donor, spec.trigger), dims, spec.algo);
      const std::string tpath =
          (fs::path("_targets") /
           (stem + "_t" + std::to_string(s) + ".png")).string();
      write_png((out_root / tpath).string(), target);
      aspec.targets.push_back({target, dims});
      entry.donor_classes.push_back(donor_cls);
      entry.target_paths.push_back(tpath);
    }

    const AttackResult res = craft(aspec);
    for (const TargetResidual& r : res.per_target_residuals) {
      if (!r.pass)
        throw CraftFailed("embed verification failed for " + stem + " at " +
                          std::to_string(r.out_dims.first) + "x" +
                          std::to_string(r.out_dims.second));
      entry.residuals.push_back(r.mean_abs);
    }

    entry.path = (fs::path(spec.infected_class) / (stem + ".png")).string();
    write_png((out_root / entry.path).string(), res.attack);
    manifest.entries.push_back(std::move(entry));
    ++manifest.total_images;
  }

  // source-specific mode: trigger-stamped covers, ground-truth labels
  if (spec.mode == PoisonMode::SourceSpecific && spec.cover_count > 0) {
    std::vector<std::pair<std::string, std::string>> cover_pool;
    for (const auto& [label, files] : classes) {
      if (label == spec.infected_class) continue;
      if (std::find(spec.donor_classes.begin(), spec.donor_classes.end(), label) !=
          spec.donor_classes.end())
        continue;
      for (const std::string& f : files) cover_pool.emplace_back(label, f);
    }
    if (cover_pool.size() < static_cast<std::size_t>(spec.cover_count))
      throw InsufficientDonors("not enough non-source-class images for covers");
    std::shuffle(cover_pool.begin(), cover_pool.end(), rng);
    for (int i = 0; i < spec.cover_count; ++i) {
      const auto& [label, file] = cover_pool[i];
      const ImageU8 stamped =
          stamp_trigger(read_png((root / label / file).string()), spec.trigger);
      char buf[32];
      std::snprintf(buf, sizeof buf, "cover_%04d.png", i);
      ManifestEntry e;
      e.path = (fs::path(label) / buf).string();
      e.label = label;
      e.role = "cover";
      e.trigger_hash = spec.trigger.hash();
      write_png((out_root / e.path).string(), stamped);
      manifest.entries.push_back(std::move(e));
      ++manifest.total_images;
    }
  }

  manifest.poison_rate =
      manifest.total_images == 0
          ? 0.0
          : static_cast<double>(manifest.poison_count) / manifest.total_images;
  write_manifest((out_root / "manifest.jsonl").string(), manifest);
  return manifest;
}

void write_manifest(const std::string& path, const PoisonManifest& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  json meta = {
      {"type", "meta"},
      {"infected_class", m.infected_class},
      {"algo", algo_token(m.algo)},
      {"trigger",
       {{"color", m.trigger.color},
        {"size_fraction", m.trigger.size_fraction},
        {"position", m.trigger.position},
        {"hash", m.trigger.hash()}}},
      {"canvas_dims", {m.canvas_dims.first, m.canvas_dims.second}},
      {"target_dims_set", dims_to_json(m.target_dims_set)},
      {"poison_count", m.poison_count},
      {"total_images", m.total_images},
      {"poison_rate", m.poison_rate},
      {"donor_reuse_warning", m.donor_reuse_warning},
  };
  os << meta.dump() << '\n';
  for (const ManifestEntry& e : m.entries) {
    json j = {{"type", "entry"},
              {"path", e.path},
              {"label", e.label},
              {"role", e.role}};
    if (e.role == "attack") {
      j["donor_classes"] = e.donor_classes;
      j["embedded_dims"] = dims_to_json(e.embedded_dims);
      j["target_paths"] = e.target_paths;
      j["residuals"] = e.residuals;
    }
    if (e.role != "clean") j["trigger_hash"] = e.trigger_hash;
    os << j.dump() << '\n';
  }
  if (!os) throw IoError("short write to " + path);
}

PoisonManifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  PoisonManifest m;
  std::string line;
  bool have_meta = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type");
    if (type == "meta") {
      m.infected_class = j.at("infected_class");
      m.algo = algo_from_token(j.at("algo"));
      m.trigger.color = j.at("trigger").at("color");
      m.trigger.size_fraction = j.at("trigger").at("size_fraction");
      m.trigger.position = j.at("trigger").at("position");
      m.canvas_dims = {j.at("canvas_dims").at(0), j.at("canvas_dims").at(1)};
      m.target_dims_set = dims_from_json(j.at("target_dims_set"));
      m.poison_count = j.at("poison_count");
      m.total_images = j.at("total_images");
      m.poison_rate = j.at("poison_rate");
      m.donor_reuse_warning = j.at("donor_reuse_warning");
      have_meta = true;
    } else {
      ManifestEntry e;
      e.path = j.at("path");
      e.label = j.at("label");
      e.role = j.at("role");
      if (e.role == "attack") {
        e.donor_classes = j.at("donor_classes").get<std::vector<std::string>>();
        e.embedded_dims = dims_from_json(j.at("embedded_dims"));
        e.target_paths = j.at("target_paths").get<std::vector<std::string>>();
        e.residuals = j.at("residuals").get<std::vector<double>>();
      }
      if (j.contains("trigger_hash")) e.trigger_hash = j.at("trigger_hash");
      m.entries.push_back(std::move(e));
    }
  }
  if (!have_meta) throw IoError(path + ": manifest has no meta line");
  return m;
}

ValidationReport validate_manifest(const PoisonManifest& manifest,
                                   const std::string& out_root,
                                   double residual_tol) {
  ValidationReport report;
  const fs::path root(out_root);
  const auto flag = [&report](const std::string& msg) {
    report.passed = false;
    report.issues.push_back(msg);
  };

  for (const ManifestEntry& e : manifest.entries) {
    if (!fs::exists(root / e.path)) {
      flag("missing file: " + e.path);
      continue;
    }
    if (e.role == "attack") {
      ++report.attack_entries_checked;
      // clean-label invariant
      if (e.label != manifest.infected_class)
        flag("attack entry not labeled with the infected class: " + e.path);
      if (e.trigger_hash != manifest.trigger.hash())
        flag("trigger hash mismatch: " + e.path);

      const ImageU8 attack = read_png((root / e.path).string());
      for (std::size_t s = 0; s < e.embedded_dims.size(); ++s) {
        const Dims dims = e.embedded_dims[s];
        const ImageU8 target = read_png((root / e.target_paths[s]).string());
        const std::vector<TargetResidual> res =
            verify(attack, {{target, dims}}, manifest.algo, residual_tol);
        if (!res[0].pass)
          flag("embed verification failed: " + e.path + " at " +
               std::to_string(dims.first) + "x" + std::to_string(dims.second) +
               " (mean_abs " + std::to_string(res[0].mean_abs) + ")");

        // the trigger must survive the downscale
        const ImageU8 scaled = scale(attack, dims, manifest.algo);
        const Rect rect = scaled_trigger_rect(manifest.trigger, dims);
        if (rect.empty()) continue;
        double diff = 0.0;
        long count = 0;
        for (int r = rect.r0; r < rect.r1; ++r)
          for (int c = rect.c0; c < rect.c1; ++c)
            for (int ch = 0; ch < scaled.channels; ++ch) {
              const double want =
                  scaled.channels == 1
                      ? 0.299 * manifest.trigger.color[0] +
                            0.587 * manifest.trigger.color[1] +
                            0.114 * manifest.trigger.color[2]
                      : manifest.trigger.color[ch];
              diff += std::abs(scaled.at(r, c, ch) - want);
              ++count;
            }
        if (count > 0 && diff / count > 8.0)
          flag("trigger not present in scaled output: " + e.path + " at " +
               std::to_string(dims.first) + "x" + std::to_string(dims.second));
      }
    } else if (e.role == "cover") {
      if (e.label == manifest.infected_class)
        flag("cover entry labeled with the infected class: " + e.path);
    }
  }
  return report;
}

}  // namespace omclic
