#pragma once

// The federation's single point of access. Exposes the Tier-1 interface set
// and fulfils it by consulting the Identifier Locator and Service Registry,
// then fanning out to the located Tier-1 repositories.
//
// Harvesting runs in one of two modes: Dynamic fans out to every registered
// Surrogate Repository per request (FailFast surfaces any upstream outage as
// a HarvestFailure naming the culprit; BestEffort returns the partial union
// plus warnings), Cache serves a locally synced store that keeps answering
// when upstreams die.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fedgate/client.hpp"
#include "fedgate/core.hpp"
#include "fedgate/errors.hpp"
#include "fedgate/locator_sync.hpp"
#include "fedgate/surrogate.hpp"
#include "fedgate/tier2_service.hpp"
#include "fedgate/wire.hpp"
#include "fedgate/wire_records.hpp"

namespace fedgate {

enum class HarvestMode { Dynamic, Cache };
enum class LocateMode { Referral, Merge };
enum class FailurePolicy { FailFast, BestEffort };

struct FederatorConfig {
  std::string locator_url;
  std::string registry_url;
  HarvestMode harvest_mode = HarvestMode::Dynamic;
  LocateMode locate_mode = LocateMode::Merge;
  int fanout_timeout_ms = 5000;
  FailurePolicy failure_policy = FailurePolicy::FailFast;
  std::optional<std::filesystem::path> cache_path;  // required in Cache mode
  RepositoryIdentity identity;                      // the facade's own Surrogate Repository
  std::vector<std::string> exclude;                 // upstreams to ignore (e.g. itself)
};

struct FedRecord {
  std::string surrogate_uri;
  FedDatetime datetime;
  std::string doc;
  std::string repository_uri;
};

struct FanoutStats {
  size_t upstreams = 0;
  size_t ok = 0;
  size_t failed = 0;
  int64_t duration_ms = 0;
};

// Persistent Surrogate cache: append-only journal of synced records plus
// per-repository cursors, replayed at open.
class SurrogateCache {
 public:
  explicit SurrogateCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    replay();
    journal_.open(dir_ / "cache.journal", std::ios::binary | std::ios::app);
  }

  void upsert(const std::string& surrogate_uri, const std::string& repository_uri,
              FedDatetime datetime, const std::string& doc) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = records_.find(surrogate_uri);
    if (it != records_.end() && it->second.datetime > datetime) return;
    records_[surrogate_uri] = Slot{repository_uri, datetime, doc};
    journal_ << "R " << surrogate_uri << '\t' << repository_uri << '\t' << datetime.to_string()
             << '\t' << doc.size() << '\n'
             << doc << '\n';
  }

  void set_cursor(const std::string& repository_uri, FedDatetime dt) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cursors_.find(repository_uri);
    if (it != cursors_.end() && it->second >= dt) return;
    cursors_[repository_uri] = dt;
    journal_ << "C " << repository_uri << '\t' << dt.to_string() << '\n';
    journal_.flush();
  }

  std::optional<FedDatetime> cursor(const std::string& repository_uri) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cursors_.find(repository_uri);
    if (it == cursors_.end()) return std::nullopt;
    return it->second;
  }

  std::map<std::string, FedDatetime> cursors() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cursors_;
  }

  std::vector<FedRecord> list(const std::optional<FedDatetime>& from,
                              const std::optional<FedDatetime>& until) const {
    if (from && until && *from > *until) fail(Err::BadArgument, "from > until");
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<FedRecord> out;
    for (const auto& [uri, slot] : records_)
      if (datetime_in_window(slot.datetime, from, until))
        out.push_back(FedRecord{uri, slot.datetime, slot.doc, slot.repository_uri});
    std::sort(out.begin(), out.end(), [](const FedRecord& a, const FedRecord& b) {
      if (a.datetime != b.datetime) return a.datetime < b.datetime;
      return a.surrogate_uri < b.surrogate_uri;
    });
    return out;
  }

  std::optional<FedRecord> get(const std::string& surrogate_uri) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = records_.find(surrogate_uri);
    if (it == records_.end()) return std::nullopt;
    return FedRecord{surrogate_uri, it->second.datetime, it->second.doc, it->second.repository_uri};
  }

  size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return records_.size();
  }

 private:
  struct Slot {
    std::string repository_uri;
    FedDatetime datetime;
    std::string doc;
  };

  void replay() {
    std::ifstream in(dir_ / "cache.journal", std::ios::binary);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("R ", 0) == 0) {
        // "R <uri>\t<repo>\t<datetime>\t<doclen>" then doclen bytes + "\n".
        std::string_view rest(line.data() + 2, line.size() - 2);
        size_t t1 = rest.find('\t');
        size_t t2 = t1 == std::string_view::npos ? t1 : rest.find('\t', t1 + 1);
        size_t t3 = t2 == std::string_view::npos ? t2 : rest.find('\t', t2 + 1);
        if (t3 == std::string_view::npos) break;  // truncated journal tail
        std::string uri(rest.substr(0, t1));
        std::string repo(rest.substr(t1 + 1, t2 - t1 - 1));
        auto dt = FedDatetime::try_parse(rest.substr(t2 + 1, t3 - t2 - 1));
        size_t len = 0;
        bool len_ok = t3 + 1 < rest.size();
        for (char c : rest.substr(t3 + 1)) {
          if (c < '0' || c > '9') { len_ok = false; break; }
          len = len * 10 + static_cast<size_t>(c - '0');
        }
        if (!dt || !len_ok) break;
        std::string doc(len, '\0');
        in.read(doc.data(), static_cast<std::streamsize>(len));
        if (static_cast<size_t>(in.gcount()) != len) break;
        in.ignore(1);  // separator
        auto it = records_.find(uri);
        if (it == records_.end() || *dt >= it->second.datetime)
          records_[uri] = Slot{std::move(repo), *dt, std::move(doc)};
      } else if (line.rfind("C ", 0) == 0) {
        std::string_view rest(line.data() + 2, line.size() - 2);
        size_t t1 = rest.find('\t');
        if (t1 == std::string_view::npos) break;
        auto dt = FedDatetime::try_parse(rest.substr(t1 + 1));
        if (!dt) break;
        std::string repo(rest.substr(0, t1));
        auto it = cursors_.find(repo);
        if (it == cursors_.end() || *dt > it->second) cursors_[repo] = *dt;
      }
    }
  }

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, Slot> records_;
  std::map<std::string, FedDatetime> cursors_;
  std::ofstream journal_;
};

class Federator {
 public:
  explicit Federator(FederatorConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.harvest_mode == HarvestMode::Cache) {
      if (!cfg_.cache_path) fail(Err::BadArgument, "Cache mode requires cache_path");
      cache_ = std::make_unique<SurrogateCache>(*cfg_.cache_path);
    }
  }

  const FederatorConfig& config() const { return cfg_; }
  SurrogateCache* cache() { return cache_.get(); }

  struct HarvestOutcome {
    std::vector<FedRecord> records;
    std::vector<std::pair<std::string, std::string>> warnings;  // (repository, error)
  };

  // Tier-3 Harvest Surrogates. Dynamic+FailFast raises HarvestFailure naming
  // every repository that failed to respond; Cache mode always answers from
  // the last successful sync.
  HarvestOutcome harvest_surrogates(const std::optional<FedDatetime>& from = std::nullopt,
                                    const std::optional<FedDatetime>& until = std::nullopt) {
    if (from && until && *from > *until) fail(Err::BadArgument, "from > until");
    if (cfg_.harvest_mode == HarvestMode::Cache) {
      HarvestOutcome out;
      out.records = cache_->list(from, until);
      return out;
    }
    return fanout_harvest(from, until);
  }

  // Tier-3 Obtain Surrogate: locate repositories, query each located
  // Surrogate Repository, keep the globally most recent response. Ties break
  // toward the lexicographically greatest surrogate_uri, then repository_uri.
  FedRecord obtain_surrogate(const std::string& identifier) {
    auto repos = surrogate_repos_for(identifier);
    if (repos.empty()) fail(Err::IdDoesNotExist, "locator knows nothing about " + identifier);
    std::optional<FedRecord> best;
    std::vector<std::string> unreachable;
    for (const auto& [repo_uri, openurl_base] : repos) {
      wire::KevRequest kev;
      kev.rft_id = classify_uri(identifier);
      kev.svc_id = classify_uri(std::string(wire::kSvcObtainSurrogate));
      HttpResponse res;
      try {
        res = http_get(openurl_base + "?" + wire::compose_kev(kev), cfg_.fanout_timeout_ms);
      } catch (const FedError&) {
        unreachable.push_back(repo_uri);
        continue;
      }
      if (res.status != 200) continue;
      Surrogate s;
      try {
        s = parse_surrogate(res.body);
      } catch (const FedError&) {
        continue;
      }
      FedRecord rec{s.surrogate_uri.value, s.surrogate_datetime, res.body, repo_uri};
      if (!best || rec.datetime > best->datetime ||
          (rec.datetime == best->datetime &&
           std::tie(rec.surrogate_uri, rec.repository_uri) >
               std::tie(best->surrogate_uri, best->repository_uri)))
        best = std::move(rec);
    }
    if (!best) {
      if (!unreachable.empty())
        fail(Err::UpstreamUnavailable, "all located repositories unreachable", unreachable);
      fail(Err::IdDoesNotExist, "no located repository returned a Surrogate for " + identifier);
    }
    return *best;
  }

  // Referral mode: ready-to-dereference Locate Surrogates requests, one per
  // located repository. Composes URLs only, so upstream outages cannot fail it.
  std::vector<std::string> referral_urls(const std::string& identifier) {
    std::vector<std::string> out;
    for (const auto& [repo_uri, openurl_base] : locate_capable_repos(identifier)) {
      wire::KevRequest kev;
      kev.rft_id = classify_uri(identifier);
      kev.svc_id = classify_uri(std::string(wire::kSvcLocateSurrogates));
      out.push_back(openurl_base + "?" + wire::compose_kev(kev));
    }
    return out;
  }

  // Merge mode: execute the referral requests and return the merged union.
  // Failure handling follows cfg_.failure_policy.
  std::vector<wire::LocationEntry> locate_merge(const std::string& identifier) {
    std::vector<wire::LocationEntry> merged;
    std::vector<std::string> failed;
    for (const auto& [repo_uri, openurl_base] : locate_capable_repos(identifier)) {
      wire::KevRequest kev;
      kev.rft_id = classify_uri(identifier);
      kev.svc_id = classify_uri(std::string(wire::kSvcLocateSurrogates));
      try {
        HttpResponse res = http_get(openurl_base + "?" + wire::compose_kev(kev),
                                    cfg_.fanout_timeout_ms);
        if (res.status != 200) {
          failed.push_back(repo_uri);
          continue;
        }
        for (auto& e : wire::parse_locations(res.body)) {
          if (e.repository_uri.empty()) e.repository_uri = repo_uri;
          merged.push_back(std::move(e));
        }
      } catch (const FedError&) {
        failed.push_back(repo_uri);
      }
    }
    if (!failed.empty() && cfg_.failure_policy == FailurePolicy::FailFast)
      fail(Err::UpstreamUnavailable, "locate fan-out failed", failed);
    std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
      if (a.datetime != b.datetime) return a.datetime < b.datetime;
      if (a.surrogate_uri != b.surrogate_uri) return a.surrogate_uri < b.surrogate_uri;
      return a.repository_uri < b.repository_uri;
    });
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    return merged;
  }

  // Tier-3 Obtain Datastream: exactly one Datastream Repository may own a
  // ds-uri; a duplicated owner in the locator is an integrity breach, not a
  // choice.
  std::pair<std::string, std::string> obtain_datastream(const std::string& ds_uri) {
    ContentURI uri = classify_uri(ds_uri);
    if (uri.kind != UriKind::NonProtocolBased)
      fail(Err::BadArgument,
           "Datastream-URLs are dereferenced directly by clients; expected a Datastream-URI");
    std::vector<std::pair<std::string, std::string>> owners;  // (repo, openurl url)
    for (const auto& repo_uri : locate_repos(ds_uri)) {
      if (excluded(repo_uri)) continue;
      auto rec = obtain_registry_record_http(cfg_.registry_url, repo_uri, cfg_.fanout_timeout_ms);
      for (const auto& b : rec.interfaces)
        if (b.interface_type == InterfaceType::ObtainDatastream)
          owners.emplace_back(repo_uri, b.interface_url.value);
    }
    if (owners.empty()) fail(Err::IdDoesNotExist, "no Datastream Repository serves " + ds_uri);
    if (owners.size() > 1) {
      std::vector<std::string> names;
      for (const auto& [r, u] : owners) names.push_back(r);
      fail(Err::IntegrityViolation, "ds-uri " + ds_uri + " is claimed by multiple Datastream Repositories",
           names);
    }
    wire::KevRequest kev;
    kev.rft_id = uri;
    kev.svc_id = classify_uri(std::string(wire::kSvcObtainDatastream));
    HttpResponse res;
    try {
      res = http_get(owners[0].second + "?" + wire::compose_kev(kev), cfg_.fanout_timeout_ms);
    } catch (const FedError&) {
      fail(Err::UpstreamUnavailable, "owning repository unreachable", {owners[0].first});
    }
    if (res.status == 404) fail(Err::IdDoesNotExist, "owning repository has no " + ds_uri);
    if (res.status != 200)
      fail(Err::UpstreamUnavailable, "owning repository returned HTTP " + std::to_string(res.status),
           {owners[0].first});
    return {res.content_type, res.body};
  }

  // Incremental cache sync with the same cursor discipline as the locator's
  // bookkeeping; per-repository failures stay isolated.
  SyncReport cache_sync(const std::optional<FedDatetime>& now_opt = std::nullopt) {
    if (!cache_) fail(Err::BadArgument, "not in Cache mode");
    FedDatetime now = now_opt ? *now_opt : FedDatetime::now();
    SyncReport report;
    for (const auto& src : surrogate_repo_sources()) {
      SyncReport::PerRepo entry;
      entry.repository_uri = src.repository_uri;
      try {
        std::string url = src.harvest_surrogates_url
                              ? *src.harvest_surrogates_url
                              : (src.harvest_identifiers_url ? *src.harvest_identifiers_url : "");
        if (url.empty()) fail(Err::NoSuchInterface, "no Harvest Surrogates interface registered");
        HarvestOptions hopts;
        hopts.verb = "ListRecords";
        hopts.metadata_prefix = "surrogate";
        hopts.timeout_ms = cfg_.fanout_timeout_ms;
        if (auto cur = cache_->cursor(src.repository_uri)) hopts.from = cur->to_string();
        size_t n = harvest_stream(url, hopts, [&](const wire::PmhItem& item) {
          cache_->upsert(item.identifier, src.repository_uri, item.datestamp, item.metadata);
        });
        FedDatetime cursor = now.plus_seconds(-1);
        cache_->set_cursor(src.repository_uri, cursor);
        entry.records = n;
        entry.uris = n;
        entry.new_cursor = cursor;
      } catch (const FedError& e) {
        entry.error = e.what();
      }
      report.repos.push_back(std::move(entry));
    }
    return report;
  }

  FanoutStats last_fanout() const {
    std::lock_guard<std::mutex> lock(stats_mu_);
    return last_fanout_;
  }

  // Upstream Surrogate Repositories per the registry, minus exclusions.
  std::vector<RepoSyncSource> surrogate_repo_sources() {
    std::vector<RepoSyncSource> out;
    for (auto& src : repos_from_registry_http(cfg_.registry_url, cfg_.fanout_timeout_ms)) {
      if (src.kind != RepoKind::SurrogateRepository || excluded(src.repository_uri)) continue;
      out.push_back(std::move(src));
    }
    return out;
  }

  std::vector<RepoSyncSource> datastream_repo_sources() {
    std::vector<RepoSyncSource> out;
    for (auto& src : repos_from_registry_http(cfg_.registry_url, cfg_.fanout_timeout_ms)) {
      if (src.kind != RepoKind::DatastreamRepository || excluded(src.repository_uri)) continue;
      out.push_back(std::move(src));
    }
    return out;
  }

  std::vector<std::string> locate_repos(const std::string& identifier) {
    return locate_repositories_http(cfg_.locator_url, identifier, cfg_.fanout_timeout_ms);
  }

 private:
  bool excluded(const std::string& repo_uri) const {
    for (const auto& e : cfg_.exclude)
      if (e == repo_uri) return true;
    return false;
  }

  // (repository_uri, openurl base) pairs for located repositories exposing
  // Obtain Surrogate.
  std::vector<std::pair<std::string, std::string>> surrogate_repos_for(
      const std::string& identifier) {
    return repos_with_interface(identifier, InterfaceType::ObtainSurrogate);
  }

  std::vector<std::pair<std::string, std::string>> locate_capable_repos(
      const std::string& identifier) {
    return repos_with_interface(identifier, InterfaceType::LocateSurrogates);
  }

  std::vector<std::pair<std::string, std::string>> repos_with_interface(
      const std::string& identifier, InterfaceType type) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& repo_uri : locate_repos(identifier)) {
      if (excluded(repo_uri)) continue;
      wire::RegistryRecordDoc rec;
      try {
        rec = obtain_registry_record_http(cfg_.registry_url, repo_uri, cfg_.fanout_timeout_ms);
      } catch (const FedError&) {
        continue;  // unregistered repository cannot be queried
      }
      for (const auto& b : rec.interfaces)
        if (b.interface_type == type) out.emplace_back(repo_uri, b.interface_url.value);
    }
    return out;
  }

  HarvestOutcome fanout_harvest(const std::optional<FedDatetime>& from,
                                const std::optional<FedDatetime>& until) {
    auto started = std::chrono::steady_clock::now();
    std::vector<RepoSyncSource> sources = surrogate_repo_sources();

    struct UpstreamResult {
      std::string repository_uri;
      std::vector<wire::PmhItem> items;
      std::optional<std::string> error;
    };
    std::vector<UpstreamResult> results(sources.size());

    // Concurrent fan-out, one thread per upstream, each bounded by the
    // configured timeout; merge happens after the join barrier.
    std::vector<std::thread> threads;
    threads.reserve(sources.size());
    for (size_t i = 0; i < sources.size(); ++i) {
      threads.emplace_back([&, i] {
        const RepoSyncSource& src = sources[i];
        results[i].repository_uri = src.repository_uri;
        try {
          std::string url = src.harvest_surrogates_url
                                ? *src.harvest_surrogates_url
                                : (src.harvest_identifiers_url ? *src.harvest_identifiers_url : "");
          if (url.empty())
            fail(Err::NoSuchInterface, "no Harvest Surrogates interface registered");
          HarvestOptions hopts;
          hopts.verb = "ListRecords";
          hopts.metadata_prefix = "surrogate";
          hopts.timeout_ms = cfg_.fanout_timeout_ms;
          if (from) hopts.from = from->to_string();
          if (until) hopts.until = until->to_string();
          results[i].items = harvest_all(url, hopts);
        } catch (const FedError& e) {
          results[i].error = e.what();
        }
      });
    }
    for (auto& t : threads) t.join();

    HarvestOutcome out;
    std::vector<std::string> failed;
    for (const auto& r : results)
      if (r.error) failed.push_back(r.repository_uri);
    {
      std::lock_guard<std::mutex> lock(stats_mu_);
      last_fanout_.upstreams = sources.size();
      last_fanout_.failed = failed.size();
      last_fanout_.ok = sources.size() - failed.size();
      last_fanout_.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                     std::chrono::steady_clock::now() - started)
                                     .count();
    }
    if (!failed.empty()) {
      if (cfg_.failure_policy == FailurePolicy::FailFast)
        fail(Err::HarvestFailure, "harvest fan-out failed for " + failed.front() +
                                      (failed.size() > 1 ? " (and others)" : ""),
             failed);
      for (const auto& r : results)
        if (r.error) out.warnings.emplace_back(r.repository_uri, *r.error);
    }

    // Merge ordered by (datetime, surrogate_uri); a surrogate_uri mirrored by
    // two repositories keeps one copy, preferring the smaller repository_uri.
    std::map<std::string, FedRecord> by_uri;
    for (const auto& r : results) {
      if (r.error) continue;
      for (const auto& item : r.items) {
        auto it = by_uri.find(item.identifier);
        if (it == by_uri.end() || r.repository_uri < it->second.repository_uri)
          by_uri[item.identifier] =
              FedRecord{item.identifier, item.datestamp, item.metadata, r.repository_uri};
      }
    }
    out.records.reserve(by_uri.size());
    for (auto& [uri, rec] : by_uri) out.records.push_back(std::move(rec));
    std::sort(out.records.begin(), out.records.end(), [](const FedRecord& a, const FedRecord& b) {
      if (a.datetime != b.datetime) return a.datetime < b.datetime;
      return a.surrogate_uri < b.surrogate_uri;
    });
    return out;
  }

  FederatorConfig cfg_;
  std::unique_ptr<SurrogateCache> cache_;
  mutable std::mutex stats_mu_;
  FanoutStats last_fanout_;
};

}  // namespace fedgate
