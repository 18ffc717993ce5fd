// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "molgraph/descriptors.hpp"
#include "molgraph/eval/audit.hpp"
#include "molgraph/fingerprints.hpp"

namespace molgraph::eval {

using nlohmann::ordered_json;

/// Declarative featurizer. JSON fields:
///   kind: "ldp" | "fingerprint"
///   ldp:         variant ("plain" | "extended" | "additional"), bins, normalize
///   fingerprint: blocks (subset of ["circular", "path", "keys"]), radius,
///                bits_per_radius, max_path_len, path_bits, counted,
///                prune, prune_threshold, hash_seed
struct FeaturizerSpec {
  enum class Kind { kLdp, kFingerprint };
  Kind kind = Kind::kLdp;
  std::string variant = "plain";
  HistogramSpec hist;
  std::vector<std::string> blocks{"circular"};
  CircularFPSpec circular;
  PathFPSpec path;
  bool prune = true;
  double prune_threshold = 0.95;

  [[nodiscard]] LdpConfig ldp_config() const {
    if (variant == "plain") return LdpConfig::plain();
    if (variant == "extended") return LdpConfig::extended_only();
    if (variant == "additional") return LdpConfig::with_additional();
    throw Error("unknown LDP variant '" + variant + "'");
  }

  [[nodiscard]] FingerprintConfig fingerprint_config() const {
    FingerprintConfig c;
    for (const auto& b : blocks) {
      if (b == "circular") c.circular = circular;
      else if (b == "path") c.path = path;
      else if (b == "keys") c.keys = default_structural_keys();
      else throw Error("unknown fingerprint block '" + b + "'");
    }
    if (!c.circular && !c.path && !c.keys) throw Error("fingerprint featurizer needs at least one block");
    return c;
  }

  static FeaturizerSpec from_json(const ordered_json& j) {
    FeaturizerSpec s;
    const std::string kind = j.value("kind", std::string("ldp"));
    if (kind == "ldp") {
      s.kind = Kind::kLdp;
      s.variant = j.value("variant", s.variant);
      s.hist.bins = j.value("bins", s.hist.bins);
      s.hist.normalize = j.value("normalize", s.hist.normalize);
      s.hist.validate();
      (void)s.ldp_config();
    } else if (kind == "fingerprint") {
      s.kind = Kind::kFingerprint;
      if (j.contains("blocks")) {
        const auto& b = j.at("blocks");
        if (b.is_string() && b.get<std::string>() == "concat") s.blocks = {"circular", "path", "keys"};
        else if (b.is_string()) s.blocks = {b.get<std::string>()};
        else s.blocks = b.get<std::vector<std::string>>();
      }
      s.circular.radius = j.value("radius", s.circular.radius);
      s.circular.bits_per_radius = j.value("bits_per_radius", s.circular.bits_per_radius);
      s.path.max_path_len = j.value("max_path_len", s.path.max_path_len);
      s.path.n_bits = j.value("path_bits", s.path.n_bits);
      s.circular.counted = s.path.counted = j.value("counted", false);
      s.circular.seed = s.path.seed = j.value("hash_seed", kDefaultHashSeed);
      s.prune = j.value("prune", s.prune);
      s.prune_threshold = j.value("prune_threshold", s.prune_threshold);
      s.circular.validate();
      s.path.validate();
      (void)s.fingerprint_config();
    } else {
      throw Error("unknown featurizer kind '" + kind + "'");
    }
    return s;
  }

  [[nodiscard]] ordered_json to_json() const {
    ordered_json j;
    if (kind == Kind::kLdp) {
      j["kind"] = "ldp";
      j["variant"] = variant;
      j["bins"] = hist.bins;
      j["normalize"] = hist.normalize;
    } else {
      j["kind"] = "fingerprint";
      j["blocks"] = blocks;
      j["radius"] = circular.radius;
      j["bits_per_radius"] = circular.bits_per_radius;
      j["max_path_len"] = path.max_path_len;
      j["path_bits"] = path.n_bits;
      j["counted"] = circular.counted;
      j["hash_seed"] = circular.seed;
      j["prune"] = prune;
      j["prune_threshold"] = prune_threshold;
    }
    return j;
  }

  /// Key of the graph-level computation that does not depend on train data.
  [[nodiscard]] std::string raw_key() const {
    ordered_json j = to_json();
    j.erase("bins");
    j.erase("normalize");
    j.erase("prune");
    j.erase("prune_threshold");
    return j.dump();
  }
};

/// Train-fitted featurization of every graph in the dataset.
struct FittedFeatures {
  FeatureTable table;  // all dataset rows, fitted columns
  std::uint64_t fit_hash = 0;
  std::optional<PruneMask> mask;
  std::optional<HistogramFit> ranges;
};

/// Caches the expensive per-graph computations by raw key; safe to call
/// from several trials at once.
class FeatureFactory {
 public:
  explicit FeatureFactory(const Dataset& d) : data_(d) {}

  FittedFeatures build(const FeaturizerSpec& spec, std::span<const std::size_t> train, AuditLog* audit = nullptr) {
    FittedFeatures out;
    if (spec.kind == FeaturizerSpec::Kind::kLdp) {
      const auto& f = ldp(spec);
      HistogramFit fit = f.fit(train);
      out.fit_hash = fit.fit_hash;
      out.table = f.transform(fit, spec.hist);
      out.ranges = std::move(fit);
      if (audit) audit->record("fit", "histogram_ranges", "train", train);
    } else {
      const FeatureTable& raw = fingerprints(spec);
      if (spec.prune) {
        PruneMask m = fit_prune_mask(raw, train, spec.prune_threshold);
        out.fit_hash = m.fit_hash;
        out.table = m.apply(raw);
        out.mask = std::move(m);
        if (audit) audit->record("fit", "prune_mask", "train", train);
      } else {
        out.table = raw;
        out.fit_hash = index_set_hash(train);
      }
    }
    return out;
  }

  const LdpFeaturizer& ldp(const FeaturizerSpec& spec) {
    std::shared_ptr<Entry> e = entry(spec.raw_key());
    std::call_once(e->once, [&] {
      e->ldp = std::make_unique<LdpFeaturizer>(std::span<const Graph>(data_.graphs), spec.ldp_config());
    });
    return *e->ldp;
  }

  const FeatureTable& fingerprints(const FeaturizerSpec& spec) {
    std::shared_ptr<Entry> e = entry(spec.raw_key());
    std::call_once(e->once, [&] {
      e->table = std::make_unique<FeatureTable>(
          fingerprint_table(std::span<const Graph>(data_.graphs), spec.fingerprint_config()));
    });
    return *e->table;
  }

 private:
  struct Entry {
    std::once_flag once;
    std::unique_ptr<LdpFeaturizer> ldp;
    std::unique_ptr<FeatureTable> table;
  };

  std::shared_ptr<Entry> entry(const std::string& key) {
    std::lock_guard lock(mu_);
    auto& e = cache_[key];
    if (!e) e = std::make_shared<Entry>();
    return e;
  }

  const Dataset& data_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> cache_;
};

/// params merged over base (params win).
inline ordered_json merge_params(const ordered_json& base, const ordered_json& params) {
  ordered_json out = base.is_null() ? ordered_json::object() : base;
  for (auto it = params.begin(); it != params.end(); ++it) out[it.key()] = it.value();
  return out;
}

}  // namespace molgraph::eval
