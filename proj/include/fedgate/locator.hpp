#pragma once

// Identifier Locator: the look-up table from Content Object URIs to the
// Repository-URIs able to serve them, with per-repository sync cursors.
// State persists as an append-only journal plus a compacted snapshot, both
// rebuildable line formats; a crash mid-sync costs at most a re-harvest of
// the overlap window.

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "fedgate/core.hpp"
#include "fedgate/errors.hpp"

namespace fedgate {

class IdentifierLocator {
 public:
  IdentifierLocator() = default;

  // With a state directory the locator replays snapshot + journal on open and
  // appends every applied batch to the journal.
  explicit IdentifierLocator(std::filesystem::path state_dir) : state_dir_(std::move(state_dir)) {
    std::filesystem::create_directories(*state_dir_);
    load_file(*state_dir_ / "locator.snapshot");
    load_file(*state_dir_ / "locator.journal");
    journal_.open(*state_dir_ / "locator.journal", std::ios::binary | std::ios::app);
  }

  // Sorted Repository-URIs of every entry keyed by the identifier; unknown
  // identifiers yield an empty list.
  std::vector<std::string> locate(const std::string& identifier) const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::string> out;
    auto it = entries_.find(identifier);
    if (it == entries_.end()) return out;
    for (uint32_t repo : it->second.repos) out.push_back(repo_names_[repo]);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::optional<FedDatetime> last_seen(const std::string& identifier) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(identifier);
    if (it == entries_.end()) return std::nullopt;
    return it->second.last_seen;
  }

  std::optional<FedDatetime> cursor(const std::string& repository_uri, InterfaceType type) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cursors_.find(cursor_key(repository_uri, type));
    if (it == cursors_.end()) return std::nullopt;
    return it->second;
  }

  std::map<std::string, FedDatetime> cursors() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cursors_;
  }

  size_t entry_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
  }

  // One harvested batch from one repository, applied atomically: the batch is
  // validated first (single-owner rule for Datastream Repositories), then all
  // upserts and the cursor advance become visible together. On violation the
  // error names both claimants and nothing changes.
  void apply_batch(const std::string& repository_uri, RepoKind kind,
                   const std::vector<std::pair<std::string, FedDatetime>>& upserts,
                   std::optional<std::pair<InterfaceType, FedDatetime>> cursor_advance) {
    std::lock_guard<std::mutex> lock(mu_);
    uint32_t repo = intern(repository_uri, kind);
    if (kind == RepoKind::DatastreamRepository) {
      for (const auto& [uri, dt] : upserts) {
        auto it = entries_.find(uri);
        if (it == entries_.end()) continue;
        for (uint32_t other : it->second.repos) {
          if (other != repo && repo_kinds_[other] == RepoKind::DatastreamRepository)
            fail(Err::IntegrityViolation,
                 "ds-uri " + uri + " claimed by two Datastream Repositories: " +
                     repo_names_[other] + " and " + repository_uri,
                 {repo_names_[other], repository_uri});
        }
      }
    }
    for (const auto& [uri, dt] : upserts) {
      Entry& e = entries_[uri];
      e.repos.insert(repo);
      if (dt > e.last_seen) e.last_seen = dt;
      journal_line('E', uri + "\t" + repository_uri + "\t" + kind_tag(kind) + "\t" + dt.to_string());
    }
    if (cursor_advance) {
      std::string key = cursor_key(repository_uri, cursor_advance->first);
      auto it = cursors_.find(key);
      // Cursors are monotone: a sync can never move one backwards.
      if (it == cursors_.end() || cursor_advance->second > it->second) {
        cursors_[key] = cursor_advance->second;
        journal_line('C', key + "\t" + cursor_advance->second.to_string());
      }
    }
    if (journal_) journal_.flush();
  }

  // Rewrites the snapshot from current state and truncates the journal.
  void compact() {
    std::lock_guard<std::mutex> lock(mu_);
    if (!state_dir_) return;
    auto tmp = *state_dir_ / "locator.snapshot.tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      for (const auto& [uri, e] : entries_)
        for (uint32_t repo : e.repos)
          out << "E " << uri << '\t' << repo_names_[repo] << '\t' << kind_tag(repo_kinds_[repo])
              << '\t' << e.last_seen.to_string() << '\n';
      for (const auto& [key, dt] : cursors_) out << "C " << key << '\t' << dt.to_string() << '\n';
      out.flush();
      if (!out) fail(Err::IoError, "snapshot write failed");
    }
    std::filesystem::rename(tmp, *state_dir_ / "locator.snapshot");
    journal_.close();
    journal_.open(*state_dir_ / "locator.journal", std::ios::binary | std::ios::trunc);
  }

  static std::string cursor_key(const std::string& repository_uri, InterfaceType type) {
    return repository_uri + "\t" + interface_type_name(type);
  }

 private:
  struct Entry {
    std::set<uint32_t> repos;
    FedDatetime last_seen;
  };

  static const char* kind_tag(RepoKind k) {
    return k == RepoKind::SurrogateRepository ? "S" : "D";
  }

  uint32_t intern(const std::string& repo_uri, RepoKind kind) {
    auto it = repo_ids_.find(repo_uri);
    if (it != repo_ids_.end()) {
      repo_kinds_[it->second] = kind;
      return it->second;
    }
    uint32_t id = static_cast<uint32_t>(repo_names_.size());
    repo_names_.push_back(repo_uri);
    repo_kinds_.push_back(kind);
    repo_ids_.emplace(repo_uri, id);
    return id;
  }

  void journal_line(char tag, const std::string& rest) {
    if (journal_) journal_ << tag << ' ' << rest << '\n';
  }

  void load_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
      if (line.size() < 2) continue;
      char tag = line[0];
      std::string_view rest(line.data() + 2, line.size() - 2);
      std::vector<std::string_view> fields;
      size_t pos = 0;
      while (true) {
        size_t tab = rest.find('\t', pos);
        if (tab == std::string_view::npos) {
          fields.push_back(rest.substr(pos));
          break;
        }
        fields.push_back(rest.substr(pos, tab - pos));
        pos = tab + 1;
      }
      if (tag == 'E' && fields.size() == 4) {
        auto dt = FedDatetime::try_parse(fields[3]);
        if (!dt) continue;
        uint32_t repo = intern(std::string(fields[1]),
                               fields[2] == "D" ? RepoKind::DatastreamRepository
                                                : RepoKind::SurrogateRepository);
        Entry& e = entries_[std::string(fields[0])];
        e.repos.insert(repo);
        if (*dt > e.last_seen) e.last_seen = *dt;
      } else if (tag == 'C' && fields.size() == 3) {
        auto dt = FedDatetime::try_parse(fields[2]);
        auto type = interface_type_from_name(fields[1]);
        if (!dt || !type) continue;
        std::string key = std::string(fields[0]) + "\t" + std::string(fields[1]);
        auto it = cursors_.find(key);
        if (it == cursors_.end() || *dt > it->second) cursors_[key] = *dt;
      }
    }
  }

  mutable std::mutex mu_;
  std::optional<std::filesystem::path> state_dir_;
  std::unordered_map<std::string, Entry> entries_;
  std::vector<std::string> repo_names_;
  std::vector<RepoKind> repo_kinds_;
  std::unordered_map<std::string, uint32_t> repo_ids_;
  std::map<std::string, FedDatetime> cursors_;
  std::ofstream journal_;
};

}  // namespace fedgate
