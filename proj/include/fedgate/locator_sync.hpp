#pragma once

// The Identifier Locator's bookkeeping job: enumerate the registered
// repositories, harvest identifiers from each (HarvestIdentifiers when bound,
// HarvestSurrogates otherwise, HarvestDatastreamIdentifiers for Datastream
// Repositories) and upsert the results. Per-repository failures land in the
// report and leave that repository's cursor untouched; they never block other
// repositories.

#include <optional>
#include <string>
#include <vector>

#include "fedgate/client.hpp"
#include "fedgate/core.hpp"
#include "fedgate/errors.hpp"
#include "fedgate/locator.hpp"
#include "fedgate/registry.hpp"
#include "fedgate/surrogate.hpp"
#include "fedgate/wire_records.hpp"

namespace fedgate {

// One repository's harvest endpoints, resolved from its registry record.
struct RepoSyncSource {
  std::string repository_uri;
  RepoKind kind = RepoKind::SurrogateRepository;
  std::optional<std::string> harvest_identifiers_url;
  std::optional<std::string> harvest_surrogates_url;
  std::optional<std::string> harvest_datastream_ids_url;
};

inline std::optional<RepoSyncSource> repo_source_from_record(const wire::RegistryRecordDoc& rec) {
  RepoSyncSource src;
  src.repository_uri = rec.subject;
  bool is_repo = false;
  for (const auto& b : rec.interfaces) {
    switch (b.interface_type) {
      case InterfaceType::HarvestIdentifiers:
        src.harvest_identifiers_url = b.interface_url.value;
        src.kind = RepoKind::SurrogateRepository;
        is_repo = true;
        break;
      case InterfaceType::HarvestSurrogates:
        src.harvest_surrogates_url = b.interface_url.value;
        src.kind = RepoKind::SurrogateRepository;
        is_repo = true;
        break;
      case InterfaceType::HarvestDatastreamIdentifiers:
        src.harvest_datastream_ids_url = b.interface_url.value;
        src.kind = RepoKind::DatastreamRepository;
        is_repo = true;
        break;
      default:
        break;
    }
  }
  if (!is_repo) return std::nullopt;
  // A component exposing a datastream harvest interface is a Datastream
  // Repository; surrogate harvest interfaces mark a Surrogate Repository.
  if (src.harvest_datastream_ids_url &&
      (src.harvest_identifiers_url || src.harvest_surrogates_url))
    src.kind = RepoKind::SurrogateRepository;
  return src;
}

inline std::vector<RepoSyncSource> repos_from_registry(const ServiceRegistry& registry) {
  std::vector<RepoSyncSource> out;
  for (const auto& uri : registry.component_uris()) {
    auto c = registry.find(uri);
    if (!c) continue;
    wire::RegistryRecordDoc rec;
    rec.subject = uri;
    rec.interfaces = c->bindings;
    if (auto src = repo_source_from_record(rec)) out.push_back(std::move(*src));
  }
  return out;
}

struct SyncOptions {
  FedDatetime now = FedDatetime::now();
  std::vector<std::string> exclude;  // component URIs that must not be harvested
  int timeout_ms = 5000;
  // Inclusive `from` bounds make a one-second overlap safe and a gap fatal.
  int64_t cursor_overlap_seconds = 1;
};

struct SyncReport {
  struct PerRepo {
    std::string repository_uri;
    size_t records = 0;  // harvested tuples
    size_t uris = 0;     // content URIs upserted
    std::optional<FedDatetime> new_cursor;
    std::optional<std::string> error;
  };
  std::vector<PerRepo> repos;

  bool all_ok() const {
    for (const auto& r : repos)
      if (r.error) return false;
    return true;
  }
  size_t total_uris() const {
    size_t n = 0;
    for (const auto& r : repos) n += r.uris;
    return n;
  }
};

inline SyncReport locator_sync(IdentifierLocator& locator,
                               const std::vector<RepoSyncSource>& sources,
                               const SyncOptions& opts = {}) {
  SyncReport report;
  for (const auto& src : sources) {
    bool excluded = false;
    for (const auto& e : opts.exclude) excluded = excluded || e == src.repository_uri;
    if (excluded) continue;

    SyncReport::PerRepo entry;
    entry.repository_uri = src.repository_uri;
    try {
      InterfaceType cursor_type;
      HarvestOptions hopts;
      hopts.timeout_ms = opts.timeout_ms;
      std::string url;
      if (src.kind == RepoKind::SurrogateRepository) {
        if (src.harvest_identifiers_url) {
          cursor_type = InterfaceType::HarvestIdentifiers;
          url = *src.harvest_identifiers_url;
          hopts.verb = "ListRecords";
          hopts.metadata_prefix = "identifiers";
        } else if (src.harvest_surrogates_url) {
          cursor_type = InterfaceType::HarvestSurrogates;
          url = *src.harvest_surrogates_url;
          hopts.verb = "ListRecords";
          hopts.metadata_prefix = "surrogate";
        } else {
          fail(Err::NoSuchInterface,
               "no harvest interface registered for " + src.repository_uri);
        }
      } else {
        if (!src.harvest_datastream_ids_url)
          fail(Err::NoSuchInterface,
               "no datastream harvest interface registered for " + src.repository_uri);
        cursor_type = InterfaceType::HarvestDatastreamIdentifiers;
        url = *src.harvest_datastream_ids_url;
        hopts.verb = "ListIdentifiers";
        hopts.metadata_prefix = "datetime";
      }
      if (auto cur = locator.cursor(src.repository_uri, cursor_type))
        hopts.from = cur->to_string();

      std::vector<std::pair<std::string, FedDatetime>> upserts;
      size_t records = harvest_stream(url, hopts, [&](const wire::PmhItem& item) {
        if (src.kind == RepoKind::DatastreamRepository) {
          upserts.emplace_back(item.identifier, item.datestamp);
          return;
        }
        if (hopts.metadata_prefix == "identifiers") {
          wire::IdentifierTupleDoc t = wire::parse_identifier_tuple(item.metadata);
          upserts.emplace_back(t.surrogate_uri, item.datestamp);
          for (const auto& d : t.do_uris) upserts.emplace_back(d, item.datestamp);
          for (const auto& d : t.ds_uris) upserts.emplace_back(d, item.datestamp);
        } else {
          Surrogate s = parse_surrogate(item.metadata);
          upserts.emplace_back(s.surrogate_uri.value, item.datestamp);
          for (const auto& d : s.object.do_uris) upserts.emplace_back(d.value, item.datestamp);
          for (const auto& ds : s.datastreams)
            if (ds.ds_uri) upserts.emplace_back(ds.ds_uri->value, item.datestamp);
        }
      });

      FedDatetime new_cursor = opts.now.plus_seconds(-opts.cursor_overlap_seconds);
      locator.apply_batch(src.repository_uri, src.kind, upserts,
                          std::make_pair(cursor_type, new_cursor));
      entry.records = records;
      entry.uris = upserts.size();
      entry.new_cursor = new_cursor;
    } catch (const FedError& e) {
      entry.error = e.what();
    }
    report.repos.push_back(std::move(entry));
  }
  return report;
}

}  // namespace fedgate
