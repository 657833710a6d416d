#pragma once

// A federation node: one logical Surrogate Repository plus (usually) one
// logical Datastream Repository over a set of sealed containers. All reads
// run against an immutable index snapshot; registering a newly sealed
// container swaps in a fresh snapshot atomically, so in-flight requests keep
// the container set they started with.

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fedgate/containers.hpp"
#include "fedgate/core.hpp"
#include "fedgate/errors.hpp"
#include "fedgate/surrogate.hpp"

namespace fedgate {

enum class DatetimeTrigger {
  ConstituencyOnly,
  ConstituencyAndDatastreamChanges,
  AnyPropertyChange,
};

inline const char* datetime_trigger_name(DatetimeTrigger t) {
  switch (t) {
    case DatetimeTrigger::ConstituencyOnly: return "ConstituencyOnly";
    case DatetimeTrigger::ConstituencyAndDatastreamChanges:
      return "ConstituencyAndDatastreamChanges";
    case DatetimeTrigger::AnyPropertyChange: return "AnyPropertyChange";
  }
  return "?";
}

struct NodeConfig {
  RepositoryIdentity surrogate_repo;
  std::optional<RepositoryIdentity> datastream_repo;
  UpdatePolicy policy;
  DatetimeTrigger datetime_trigger = DatetimeTrigger::ConstituencyAndDatastreamChanges;
  // Interface-URIs are minted once with the store and stay stable; the
  // matching Interface-URLs are composed at serve time from the bound port.
  std::map<InterfaceType, ContentURI> interface_uris;
};

struct HarvestedSurrogate {
  std::string surrogate_uri;
  FedDatetime datetime;
  SurrogateDocument doc;
};

struct IdentifierTuple {
  std::string surrogate_uri;
  FedDatetime datetime;
  std::vector<std::string> do_uris;
  std::vector<std::string> ds_uris;
  friend bool operator==(const IdentifierTuple&, const IdentifierTuple&) = default;
};

struct SurrogateLocation {
  std::string surrogate_uri;
  std::optional<std::string> surrogate_url;
  FedDatetime datetime;
  friend bool operator==(const SurrogateLocation&, const SurrogateLocation&) = default;
};

class RepositoryNode {
 public:
  explicit RepositoryNode(NodeConfig cfg) : cfg_(std::move(cfg)), index_(std::make_shared<Index>()) {}

  const NodeConfig& config() const { return cfg_; }

  // Atomic registration of a sealed tape: parse every record once, cache its
  // identifiers, publish a fresh snapshot.
  void add_tape(std::shared_ptr<TapeReader> tape) {
    std::lock_guard<std::mutex> lock(mutate_);
    auto next = std::make_shared<Index>(*snapshot());
    size_t tape_idx = next->tapes.size();
    next->tapes.push_back(tape);
    for (const auto& rec : tape->records()) {
      if (next->by_surrogate.count(rec.id))
        fail(Err::DuplicateRecord, "surrogateURI already served by node: " + rec.id);
      Surrogate s = parse_surrogate(tape->get(rec.id));
      RecordInfo info;
      info.surrogate_uri = rec.id;
      info.datetime = rec.datetime;
      if (s.surrogate_url) info.surrogate_url = s.surrogate_url->value;
      for (const auto& d : s.object.do_uris) info.do_uris.push_back(d.value);
      for (const auto& ds : s.datastreams) {
        if (ds.ds_uri) info.ds_uris.push_back(ds.ds_uri->value);
        if (ds.ds_url) info.ds_urls.push_back(ds.ds_url->value);
      }
      if (!info.ds_uris.empty() && !cfg_.datastream_repo)
        fail(Err::IntegrityViolation,
             "surrogate " + rec.id + " references a Datastream-URI but this node has no "
             "Datastream Repository");
      info.tape = tape_idx;
      next->records.push_back(std::move(info));
    }
    rebuild_maps(*next);
    publish(next);
  }

  void add_arc(std::shared_ptr<ArcReader> arc) {
    std::lock_guard<std::mutex> lock(mutate_);
    if (!cfg_.datastream_repo)
      fail(Err::NoSuchInterface, "node has no Datastream Repository");
    auto next = std::make_shared<Index>(*snapshot());
    rebuild_maps(*next);  // the copy's lookup maps must point at its own records
    size_t arc_idx = next->arcs.size();
    next->arcs.push_back(arc);
    for (const auto& rec : arc->records()) {
      if (next->by_datastream.count(rec.id))
        fail(Err::DuplicateRecord, "ds-uri already served by node: " + rec.id);
      next->by_datastream.emplace(rec.id, ArcSlot{arc_idx, rec.datetime});
    }
    publish(next);
  }

  // All Surrogates whose datetime passes the window, ordered by
  // (datetime, surrogate_uri). Under the New Surrogate Policy superseded
  // Surrogates are still present in the containers and therefore returned.
  std::vector<HarvestedSurrogate> harvest_surrogates(
      const std::optional<FedDatetime>& from = std::nullopt,
      const std::optional<FedDatetime>& until = std::nullopt) const {
    auto idx = snapshot();
    std::vector<HarvestedSurrogate> out;
    for (const RecordInfo* info : windowed(*idx, from, until)) {
      out.push_back(HarvestedSurrogate{info->surrogate_uri, info->datetime,
                                       idx->tapes[info->tape]->get(info->surrogate_uri)});
    }
    return out;
  }

  // Identifier projection of harvest_surrogates (no documents): the cheap
  // feed the Identifier Locator prefers.
  std::vector<IdentifierTuple> harvest_identifiers(
      const std::optional<FedDatetime>& from = std::nullopt,
      const std::optional<FedDatetime>& until = std::nullopt) const {
    auto idx = snapshot();
    std::vector<IdentifierTuple> out;
    for (const RecordInfo* info : windowed(*idx, from, until))
      out.push_back(IdentifierTuple{info->surrogate_uri, info->datetime, info->do_uris,
                                    info->ds_uris});
    return out;
  }

  // The Surrogate with the most recent datetime matching the identifier
  // (Surrogate-, DO- or Datastream-URI); ties break toward the
  // lexicographically greatest surrogate_uri.
  SurrogateDocument obtain_surrogate(const ContentURI& identifier) const {
    auto idx = snapshot();
    if (auto it = idx->by_surrogate.find(identifier.value); it != idx->by_surrogate.end())
      return doc_for(*idx, *it->second);
    const RecordInfo* best = nullptr;
    auto consider = [&](const std::unordered_map<std::string, std::vector<const RecordInfo*>>& map) {
      auto it = map.find(identifier.value);
      if (it == map.end()) return;
      for (const RecordInfo* info : it->second)
        if (!best || info->datetime > best->datetime ||
            (info->datetime == best->datetime && info->surrogate_uri > best->surrogate_uri))
          best = info;
    };
    consider(idx->by_do);
    consider(idx->by_ds_uri);
    if (!best) fail(Err::IdDoesNotExist, "unknown identifier: " + identifier.value);
    return doc_for(*idx, *best);
  }

  // Every Surrogate matching the identifier (DO-URI, Datastream-URI or
  // Datastream-URL; a Surrogate-URI matches itself), in (datetime, uri)
  // order. Unknown identifiers yield an empty list: localization is a query,
  // not a dereference.
  std::vector<SurrogateLocation> locate_surrogates(const ContentURI& identifier) const {
    auto idx = snapshot();
    std::vector<const RecordInfo*> matches;
    if (auto it = idx->by_surrogate.find(identifier.value); it != idx->by_surrogate.end())
      matches.push_back(it->second);
    for (const auto* map : {&idx->by_do, &idx->by_ds_uri, &idx->by_ds_url}) {
      auto it = map->find(identifier.value);
      if (it != map->end())
        for (const RecordInfo* info : it->second) matches.push_back(info);
    }
    std::sort(matches.begin(), matches.end(), by_datetime_uri);
    matches.erase(std::unique(matches.begin(), matches.end()), matches.end());
    std::vector<SurrogateLocation> out;
    for (const RecordInfo* info : matches)
      out.push_back(SurrogateLocation{info->surrogate_uri, info->surrogate_url, info->datetime});
    return out;
  }

  std::pair<std::string, std::string> obtain_datastream(const ContentURI& ds_uri) const {
    auto idx = snapshot();
    if (!cfg_.datastream_repo)
      fail(Err::NoSuchInterface, "node has no Datastream Repository");
    auto it = idx->by_datastream.find(ds_uri.value);
    if (it == idx->by_datastream.end())
      fail(Err::IdDoesNotExist, "unknown ds-uri: " + ds_uri.value);
    return idx->arcs[it->second.arc]->get(ds_uri.value);
  }

  std::vector<std::pair<std::string, FedDatetime>> harvest_datastream_identifiers(
      const std::optional<FedDatetime>& from = std::nullopt,
      const std::optional<FedDatetime>& until = std::nullopt) const {
    auto idx = snapshot();
    if (!cfg_.datastream_repo)
      fail(Err::NoSuchInterface, "node has no Datastream Repository");
    if (from && until && *from > *until) fail(Err::BadArgument, "from > until");
    std::vector<std::pair<std::string, FedDatetime>> out;
    for (const auto& [uri, slot] : idx->by_datastream)
      if (datetime_in_window(slot.datetime, from, until)) out.emplace_back(uri, slot.datetime);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second < b.second;
      return a.first < b.first;
    });
    return out;
  }

  std::optional<SurrogateDocument> get_doc(const std::string& surrogate_uri) const {
    auto idx = snapshot();
    auto it = idx->by_surrogate.find(surrogate_uri);
    if (it == idx->by_surrogate.end()) return std::nullopt;
    return doc_for(*idx, *it->second);
  }

  std::optional<FedDatetime> get_datestamp(const std::string& surrogate_uri) const {
    auto idx = snapshot();
    auto it = idx->by_surrogate.find(surrogate_uri);
    if (it == idx->by_surrogate.end()) return std::nullopt;
    return it->second->datetime;
  }

  std::optional<IdentifierTuple> get_identifier_tuple(const std::string& surrogate_uri) const {
    auto idx = snapshot();
    auto it = idx->by_surrogate.find(surrogate_uri);
    if (it == idx->by_surrogate.end()) return std::nullopt;
    const RecordInfo* info = it->second;
    return IdentifierTuple{info->surrogate_uri, info->datetime, info->do_uris, info->ds_uris};
  }

  std::optional<FedDatetime> get_datastream_datetime(const std::string& ds_uri) const {
    auto idx = snapshot();
    auto it = idx->by_datastream.find(ds_uri);
    if (it == idx->by_datastream.end()) return std::nullopt;
    return it->second.datetime;
  }

  size_t surrogate_count() const { return snapshot()->records.size(); }
  size_t datastream_count() const { return snapshot()->by_datastream.size(); }
  size_t tape_count() const { return snapshot()->tapes.size(); }
  size_t arc_count() const { return snapshot()->arcs.size(); }

  std::optional<FedDatetime> earliest_datetime() const {
    auto idx = snapshot();
    std::optional<FedDatetime> out;
    for (const auto& r : idx->records)
      if (!out || r.datetime < *out) out = r.datetime;
    return out;
  }

  // Directions of the node invariant that are visible locally: a served
  // Datastream-URI must be resolvable here, and every referenced ds_uri must
  // live in exactly one arc of this node. (Cross-node single ownership is a
  // federation-level check.)
  std::vector<std::string> check_invariants() const {
    auto idx = snapshot();
    std::vector<std::string> issues;
    for (const auto& r : idx->records)
      for (const auto& ds : r.ds_uris)
        if (!idx->by_datastream.count(ds))
          issues.push_back("surrogate " + r.surrogate_uri + " references unresolvable ds-uri " + ds);
    return issues;
  }

 private:
  struct RecordInfo {
    std::string surrogate_uri;
    std::optional<std::string> surrogate_url;
    FedDatetime datetime;
    std::vector<std::string> do_uris;
    std::vector<std::string> ds_uris;
    std::vector<std::string> ds_urls;
    size_t tape = 0;
  };

  struct ArcSlot {
    size_t arc = 0;
    FedDatetime datetime;
  };

  struct Index {
    std::vector<std::shared_ptr<TapeReader>> tapes;
    std::vector<std::shared_ptr<ArcReader>> arcs;
    std::vector<RecordInfo> records;
    std::unordered_map<std::string, const RecordInfo*> by_surrogate;
    std::unordered_map<std::string, std::vector<const RecordInfo*>> by_do;
    std::unordered_map<std::string, std::vector<const RecordInfo*>> by_ds_uri;
    std::unordered_map<std::string, std::vector<const RecordInfo*>> by_ds_url;
    std::unordered_map<std::string, ArcSlot> by_datastream;
  };

  static bool by_datetime_uri(const RecordInfo* a, const RecordInfo* b) {
    if (a->datetime != b->datetime) return a->datetime < b->datetime;
    return a->surrogate_uri < b->surrogate_uri;
  }

  static void rebuild_maps(Index& idx) {
    idx.by_surrogate.clear();
    idx.by_do.clear();
    idx.by_ds_uri.clear();
    idx.by_ds_url.clear();
    for (const RecordInfo& info : idx.records) {
      idx.by_surrogate.emplace(info.surrogate_uri, &info);
      for (const auto& d : info.do_uris) idx.by_do[d].push_back(&info);
      for (const auto& d : info.ds_uris) idx.by_ds_uri[d].push_back(&info);
      for (const auto& d : info.ds_urls) idx.by_ds_url[d].push_back(&info);
    }
  }

  std::vector<const RecordInfo*> windowed(const Index& idx, const std::optional<FedDatetime>& from,
                                          const std::optional<FedDatetime>& until) const {
    if (from && until && *from > *until) fail(Err::BadArgument, "from > until");
    std::vector<const RecordInfo*> out;
    for (const RecordInfo& info : idx.records)
      if (datetime_in_window(info.datetime, from, until)) out.push_back(&info);
    std::sort(out.begin(), out.end(), by_datetime_uri);
    return out;
  }

  SurrogateDocument doc_for(const Index& idx, const RecordInfo& info) const {
    return idx.tapes[info.tape]->get(info.surrogate_uri);
  }

  std::shared_ptr<const Index> snapshot() const {
    std::lock_guard<std::mutex> lock(index_mutex_);
    return index_;
  }

  void publish(std::shared_ptr<Index> next) {
    std::lock_guard<std::mutex> lock(index_mutex_);
    index_ = std::move(next);
  }

  NodeConfig cfg_;
  std::mutex mutate_;  // serializes container registration
  mutable std::mutex index_mutex_;
  std::shared_ptr<const Index> index_;
};

}  // namespace fedgate
