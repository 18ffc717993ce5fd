// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "molgraph/hash.hpp"

namespace molgraph::eval {

/// One data access: a statistic fit on, or a metric computed over, a named
/// index set.
struct AuditEvent {
  std::string action;  // "fit" or "score"
  std::string what;    // e.g. "histogram_ranges", "forest", "metric"
  std::string split;   // "train", "valid", "test"
  std::uint64_t index_hash = 0;
  std::size_t count = 0;
};

/// Append-only, thread-safe access log.
class AuditLog {
 public:
  void record(std::string action, std::string what, std::string split, std::span<const std::size_t> idx) {
    AuditEvent e{std::move(action), std::move(what), std::move(split), index_set_hash(idx), idx.size()};
    std::lock_guard lock(mu_);
    events_.push_back(std::move(e));
  }

  [[nodiscard]] std::vector<AuditEvent> events() const {
    std::lock_guard lock(mu_);
    return events_;
  }

  /// Number of events touching `split`.
  [[nodiscard]] std::size_t touches(const std::string& split) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& e : events_) n += e.split == split;
    return n;
  }

  /// True when every fit event was computed on exactly `train_hash`.
  [[nodiscard]] bool fits_only_on(std::uint64_t train_hash) const {
    std::lock_guard lock(mu_);
    for (const auto& e : events_)
      if (e.action == "fit" && e.index_hash != train_hash) return false;
    return true;
  }

  void append(const AuditLog& other) {
    const auto evs = other.events();
    std::lock_guard lock(mu_);
    events_.insert(events_.end(), evs.begin(), evs.end());
  }

  [[nodiscard]] nlohmann::ordered_json to_json() const {
    std::lock_guard lock(mu_);
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : events_)
      arr.push_back({{"action", e.action}, {"what", e.what}, {"split", e.split},
                     {"index_hash", e.index_hash}, {"count", e.count}});
    return arr;
  }

 private:
  mutable std::mutex mu_;
  std::vector<AuditEvent> events_;
};

/// Per-trial logs for a parallel search, merged by trial index so the
/// combined log does not depend on scheduling.
class TrialAudits {
 public:
  AuditLog& operator[](std::size_t trial) {
    std::lock_guard lock(mu_);
    return logs_.try_emplace(trial).first->second;
  }

  void merge_into(AuditLog& dst) const {
    std::lock_guard lock(mu_);
    for (const auto& [i, log] : logs_) dst.append(log);
  }

 private:
  mutable std::mutex mu_;
  std::map<std::size_t, AuditLog> logs_;
};

}  // namespace molgraph::eval
