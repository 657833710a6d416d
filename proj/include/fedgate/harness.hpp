#pragma once

// Test harness: deterministic federation scenarios on loopback sockets,
// brute-force oracles that bypass Tier-2/Tier-3 entirely, failure injection,
// and the locator latency benchmark.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedgate/client.hpp"
#include "fedgate/core.hpp"
#include "fedgate/errors.hpp"
#include "fedgate/federator.hpp"
#include "fedgate/federator_service.hpp"
#include "fedgate/ingest.hpp"
#include "fedgate/locator_sync.hpp"
#include "fedgate/node.hpp"
#include "fedgate/node_service.hpp"
#include "fedgate/registry.hpp"
#include "fedgate/sha256.hpp"
#include "fedgate/tier2_service.hpp"

namespace fedgate::harness {

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

struct RepoSpec {
  UpdatePolicy policy;
  DatastreamIdMode ds_mode = DatastreamIdMode::MintUris;
};

struct FailureEvent {
  size_t repo_index = 0;
  FailureMode mode = FailureMode::Stop;
};

struct FederationScenario {
  size_t repo_count = 3;
  size_t objects_per_repo = 10;
  size_t bitstreams_per_object = 2;
  std::vector<RepoSpec> repos;  // resized to repo_count with defaults
  uint64_t seed = 1;
  HarvestMode harvest_mode = HarvestMode::Dynamic;
  LocateMode locate_mode = LocateMode::Merge;
  FailurePolicy failure_policy = FailurePolicy::FailFast;
  int fanout_timeout_ms = 5000;
  size_t page_size = 500;
  // Objects get surrogate datetimes spread uniformly over this many seconds
  // starting at timeline_start.
  FedDatetime timeline_start = FedDatetime::parse("2006-09-01T00:00:00Z");
  int64_t timeline_span_seconds = 86400;

  static FederationScenario from_json(const nlohmann::json& j) {
    FederationScenario s;
    s.repo_count = j.value("repoCount", s.repo_count);
    s.objects_per_repo = j.value("objectsPerRepo", s.objects_per_repo);
    s.bitstreams_per_object = j.value("bitstreamsPerObject", s.bitstreams_per_object);
    s.seed = j.value("seed", s.seed);
    s.harvest_mode = j.value("harvestMode", "Dynamic") == "Cache" ? HarvestMode::Cache
                                                                  : HarvestMode::Dynamic;
    s.locate_mode = j.value("locateMode", "Merge") == "Referral" ? LocateMode::Referral
                                                                 : LocateMode::Merge;
    s.failure_policy = j.value("failurePolicy", "FailFast") == "BestEffort"
                           ? FailurePolicy::BestEffort
                           : FailurePolicy::FailFast;
    s.fanout_timeout_ms = j.value("fanoutTimeoutMs", s.fanout_timeout_ms);
    s.page_size = j.value("pageSize", s.page_size);
    if (j.contains("timelineStart"))
      s.timeline_start = FedDatetime::parse(j["timelineStart"].get<std::string>());
    s.timeline_span_seconds = j.value("timelineSpanSeconds", s.timeline_span_seconds);
    for (const auto& r : j.value("repos", nlohmann::json::array())) {
      RepoSpec spec;
      if (r.value("datastreams", "uris") == "urls") spec.ds_mode = DatastreamIdMode::UrlsOnly;
      s.repos.push_back(spec);
    }
    return s;
  }
};

// Seeded synthetic payloads: sizes log-uniform in [16 B, 64 KiB].
inline std::string synthetic_payload(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> log_size(4.0, 16.0);  // 2^4 .. 2^16
  size_t len = static_cast<size_t>(std::pow(2.0, log_size(rng)));
  std::string out(len, '\0');
  for (size_t i = 0; i < len; i += 8) {
    uint64_t w = rng();
    for (size_t j = 0; j < 8 && i + j < len; ++j)
      out[i + j] = static_cast<char>((w >> (8 * j)) & 0xff);
  }
  return out;
}

inline SubmissionPackage synthetic_package(std::mt19937_64& rng, size_t objects,
                                           size_t bitstreams_per_object) {
  SubmissionPackage pkg;
  for (size_t i = 0; i < objects; ++i) {
    SubmissionObject obj;
    if (rng() % 4 == 0)
      obj.inherited_do_uris.push_back(
          classify_uri("info:doi/10.1000/synth-" + std::to_string(rng() % 100000)));
    obj.properties.push_back(Property{"urn:fedgate:prop:title", "object " + std::to_string(i)});
    for (size_t b = 0; b < bitstreams_per_object; ++b) {
      SubmissionBitstream bs;
      bs.local_name = "payload-" + std::to_string(b) + ".bin";
      bs.media_type = (b % 2) ? "image/jpeg" : "application/octet-stream";
      bs.bytes = synthetic_payload(rng);
      obj.bitstreams.push_back(std::move(bs));
    }
    pkg.objects.push_back(std::move(obj));
  }
  return pkg;
}

// One running repository: store on disk, node in memory, service on a port.
struct RepoHandle {
  NodeStore store;
  std::shared_ptr<RepositoryNode> node;
  std::unique_ptr<NodeService> service;
  IngestManifest manifest;
  bool down = false;

  std::string surrogate_repo_uri() const {
    return store.config().surrogate_repo.repository_uri.value;
  }
  std::optional<std::string> datastream_repo_uri() const {
    if (!store.config().datastream_repo) return std::nullopt;
    return store.config().datastream_repo->repository_uri.value;
  }
};

struct FederationHandles {
  std::filesystem::path root;
  std::vector<std::unique_ptr<RepoHandle>> repos;
  std::shared_ptr<ServiceRegistry> registry;
  std::unique_ptr<RegistryService> registry_service;
  std::shared_ptr<IdentifierLocator> locator;
  std::unique_ptr<LocatorService> locator_service;
  std::shared_ptr<Federator> federator;
  std::unique_ptr<FederatorService> federator_service;
  FedDatetime sync_time;  // logical "now" used for cursors

  ~FederationHandles() { shutdown(); }

  void shutdown() {
    if (federator_service) federator_service->stop();
    if (locator_service) locator_service->stop();
    if (registry_service) registry_service->stop();
    for (auto& r : repos)
      if (r && r->service) r->service->stop();
  }

  std::string federator_url() const { return federator_service->base_url(); }
};

// Builds, ingests, registers, serves and syncs a whole federation on
// loopback. Content is deterministic for a given scenario seed.
inline std::unique_ptr<FederationHandles> run_scenario(const FederationScenario& scenario,
                                                       const std::filesystem::path& root) {
  auto handles = std::make_unique<FederationHandles>();
  handles->root = root;
  std::filesystem::create_directories(root);

  std::vector<RepoSpec> specs = scenario.repos;
  specs.resize(scenario.repo_count, RepoSpec{});

  try {
    // Tier-2 first: the registry must exist before nodes can register.
    handles->registry = std::make_shared<ServiceRegistry>();
    handles->registry_service = std::make_unique<RegistryService>(handles->registry);
    handles->registry_service->start();

    handles->locator = std::make_shared<IdentifierLocator>(root / "locator");
    handles->locator_service = std::make_unique<LocatorService>(
        handles->locator, LocatorService::Config{handles->registry_service->base_url(),
                                                 {},
                                                 scenario.fanout_timeout_ms});
    handles->locator_service->start();

    // Tier-1 nodes: start empty services (the port feeds UrlsOnly ds_urls and
    // interface URLs), then ingest and register.
    std::mt19937_64 scenario_rng(scenario.seed);
    for (size_t i = 0; i < scenario.repo_count; ++i) {
      auto repo = std::make_unique<RepoHandle>();
      std::mt19937_64 repo_rng(scenario.seed * 1000003 + i);
      std::string ns = "info:repo-" + std::to_string(i);
      fs::path dir = root / ("repo-" + std::to_string(i));
      repo->store = NodeStore::init(dir, ns, repo_rng, specs[i].ds_mode, specs[i].policy);
      repo->node = std::make_shared<RepositoryNode>(repo->store.config());
      std::optional<std::string> static_dir;
      if (specs[i].ds_mode == DatastreamIdMode::UrlsOnly)
        static_dir = (dir / "static").string();
      repo->service =
          std::make_unique<NodeService>(repo->node, scenario.page_size, static_dir);
      repo->service->start();

      if (scenario.objects_per_repo > 0) {
        SubmissionPackage pkg = synthetic_package(repo_rng, scenario.objects_per_repo,
                                                  scenario.bitstreams_per_object);
        // Spread surrogate datetimes over the timeline deterministically.
        int64_t step = scenario.objects_per_repo > 1
                           ? scenario.timeline_span_seconds /
                                 static_cast<int64_t>(scenario.objects_per_repo)
                           : 0;
        IngestOptions opts;
        opts.url_base = repo->service->base_url();
        opts.datetime_for_object = [&scenario, step, i](size_t oi) {
          return scenario.timeline_start.plus_seconds(static_cast<int64_t>(oi) * step +
                                                      static_cast<int64_t>(i));
        };
        repo->manifest = ingest_batch(repo->store, *repo->node, pkg, scenario.timeline_start,
                                      repo_rng, opts);
      }
      register_components_http(handles->registry_service->base_url(),
                               repo->service->component_records());
      handles->repos.push_back(std::move(repo));
    }

    // Tier-3 facade.
    FederatorConfig fcfg;
    fcfg.locator_url = handles->locator_service->base_url();
    fcfg.registry_url = handles->registry_service->base_url();
    fcfg.harvest_mode = scenario.harvest_mode;
    fcfg.locate_mode = scenario.locate_mode;
    fcfg.failure_policy = scenario.failure_policy;
    fcfg.fanout_timeout_ms = scenario.fanout_timeout_ms;
    if (scenario.harvest_mode == HarvestMode::Cache) fcfg.cache_path = root / "cache";
    std::mt19937_64 fed_rng(scenario.seed * 7919 + 17);
    fcfg.identity = RepositoryIdentity{mint_uri("info:ourfederation", EntityKind::Repository, fed_rng),
                                       RepoKind::SurrogateRepository};
    handles->federator = std::make_shared<Federator>(fcfg);
    handles->federator_service = std::make_unique<FederatorService>(handles->federator,
                                                                    scenario.page_size);
    handles->federator_service->start();

    // Quiescence: sync the locator (and the cache, in Cache mode) with a
    // logical clock safely past every ingest datetime.
    handles->sync_time =
        scenario.timeline_start.plus_seconds(scenario.timeline_span_seconds + 3600);
    SyncReport sync = handles->locator_service->run_sync(handles->sync_time);
    for (const auto& r : sync.repos)
      if (r.error)
        fail(Err::ScenarioError, "locator sync failed for " + r.repository_uri + ": " + *r.error);
    if (scenario.harvest_mode == HarvestMode::Cache) {
      SyncReport cs = handles->federator->cache_sync(handles->sync_time);
      for (const auto& r : cs.repos)
        if (r.error)
          fail(Err::ScenarioError, "cache sync failed for " + r.repository_uri + ": " + *r.error);
    }
  } catch (const FedError& e) {
    handles->shutdown();
    if (e.code() == Err::ScenarioError) throw;
    fail(Err::ScenarioError, std::string("scenario startup failed: ") + e.what());
  }
  return handles;
}

// ---------------------------------------------------------------------------
// Failure injection
// ---------------------------------------------------------------------------

inline void inject_failure(FederationHandles& handles, size_t repo_index, FailureMode mode) {
  if (repo_index >= handles.repos.size())
    fail(Err::BadArgument, "no such repository index: " + std::to_string(repo_index));
  RepoHandle& repo = *handles.repos[repo_index];
  if (mode == FailureMode::None && !repo.service->host().running())
    fail(Err::BadArgument, "a stopped repository cannot be revived in place");
  repo.service->host().set_failure(mode);
  repo.down = mode != FailureMode::None;
}

// ---------------------------------------------------------------------------
// Oracles (direct node access; Tier-2/Tier-3 never involved)
// ---------------------------------------------------------------------------

using HarvestSet = std::set<std::pair<std::string, std::string>>;  // (surrogate_uri, digest)

inline HarvestSet oracle_union_harvest(const FederationHandles& handles,
                                       const std::optional<FedDatetime>& from = std::nullopt,
                                       const std::optional<FedDatetime>& until = std::nullopt) {
  for (const auto& r : handles.repos)
    if (r->down)
      fail(Err::OracleUnavailable,
           "oracle requires every node up; " + r->surrogate_repo_uri() + " is down");
  HarvestSet out;
  for (const auto& r : handles.repos)
    for (const auto& h : r->node->harvest_surrogates(from, until))
      out.emplace(h.surrogate_uri, sha256_hex(h.doc.bytes));
  return out;
}

inline HarvestSet to_harvest_set(const std::vector<FedRecord>& records) {
  HarvestSet out;
  for (const auto& r : records) out.emplace(r.surrogate_uri, sha256_hex(r.doc));
  return out;
}

inline HarvestSet to_harvest_set(const std::vector<wire::PmhItem>& items) {
  HarvestSet out;
  for (const auto& r : items) out.emplace(r.identifier, sha256_hex(r.metadata));
  return out;
}

struct ResolveOracle {
  // Expected fed_obtain_surrogate answer: max (datetime, surrogate_uri,
  // repository_uri) across every node, byte-for-byte.
  std::optional<std::string> obtain_doc;
  // Expected fed_locate_surrogates Merge answer.
  std::set<std::pair<std::string, std::string>> locate;  // (surrogate_uri, repository_uri)
  // Expected datastream payload digest and media type, when the identifier is
  // an owned ds-uri.
  std::optional<std::pair<std::string, std::string>> datastream;  // (media, digest)
};

inline ResolveOracle oracle_resolve(const FederationHandles& handles,
                                    const std::string& identifier) {
  for (const auto& r : handles.repos)
    if (r->down) fail(Err::OracleUnavailable, "oracle requires every node up");
  ResolveOracle oracle;
  struct Best {
    FedDatetime dt;
    std::string su, repo, doc;
  };
  std::optional<Best> best;
  ContentURI uri = classify_uri(identifier);
  for (const auto& r : handles.repos) {
    for (const auto& loc : r->node->locate_surrogates(uri)) {
      oracle.locate.emplace(loc.surrogate_uri, r->surrogate_repo_uri());
      std::string doc = r->node->get_doc(loc.surrogate_uri)->bytes;
      Best cand{loc.datetime, loc.surrogate_uri, r->surrogate_repo_uri(), doc};
      if (!best || cand.dt > best->dt ||
          (cand.dt == best->dt &&
           std::tie(cand.su, cand.repo) > std::tie(best->su, best->repo)))
        best = std::move(cand);
    }
    try {
      auto [media, payload] = r->node->obtain_datastream(uri);
      oracle.datastream = std::make_pair(media, sha256_hex(payload));
    } catch (const FedError&) {
    }
  }
  if (best) oracle.obtain_doc = best->doc;
  return oracle;
}

// Federation-wide constituent check: every ds-uri referenced by any harvested
// Surrogate resolves on exactly one node.
inline std::vector<std::string> federation_integrity_issues(const FederationHandles& handles) {
  std::vector<std::string> issues;
  std::map<std::string, std::set<std::string>> owners;  // ds_uri -> datastream repos
  for (const auto& r : handles.repos) {
    auto ds_repo = r->datastream_repo_uri();
    if (!ds_repo) continue;
    for (const auto& [uri, dt] : r->node->harvest_datastream_identifiers())
      owners[uri].insert(*ds_repo);
  }
  for (const auto& r : handles.repos) {
    for (const auto& t : r->node->harvest_identifiers()) {
      for (const auto& ds : t.ds_uris) {
        auto it = owners.find(ds);
        if (it == owners.end())
          issues.push_back("ds-uri " + ds + " (referenced by " + t.surrogate_uri +
                           ") resolves nowhere");
        else if (it->second.size() != 1)
          issues.push_back("ds-uri " + ds + " has " + std::to_string(it->second.size()) +
                           " owners");
      }
    }
  }
  return issues;
}

// ---------------------------------------------------------------------------
// Locator benchmark
// ---------------------------------------------------------------------------

struct BenchReport {
  size_t uris = 0;
  size_t queries = 0;
  size_t hits = 0;
  size_t misses = 0;
  double median_ms = 0;
  double p99_ms = 0;
  double max_ms = 0;
  int64_t load_ms = 0;

  nlohmann::json to_json() const {
    return {{"uris", uris},     {"queries", queries},   {"hits", hits},
            {"misses", misses}, {"medianMs", median_ms}, {"p99Ms", p99_ms},
            {"maxMs", max_ms},  {"loadMs", load_ms}};
  }
};

// Loads n_uris synthetic entries into an in-memory locator, serves it over
// HTTP on loopback, and measures end-to-end Locate Repositories latency.
inline BenchReport bench_locator(size_t n_uris, size_t n_queries, uint64_t seed) {
  BenchReport report;
  report.uris = n_uris;
  report.queries = n_queries;

  auto locator = std::make_shared<IdentifierLocator>();
  auto t_load0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed);
  FedDatetime dt = FedDatetime::parse("2006-09-08T00:00:00Z");
  const size_t batch_size = 10000;
  std::vector<std::pair<std::string, FedDatetime>> batch;
  batch.reserve(batch_size);
  size_t repo_count = std::max<size_t>(4, n_uris / 250000);
  for (size_t i = 0; i < n_uris; ++i) {
    batch.emplace_back("info:bench/do/" + uuid_v4(rng), dt);
    if (batch.size() == batch_size || i + 1 == n_uris) {
      std::string repo = "info:bench/repo/" + std::to_string(i % repo_count);
      locator->apply_batch(repo, RepoKind::SurrogateRepository, batch, std::nullopt);
      batch.clear();
    }
  }
  report.load_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - t_load0)
                       .count();

  LocatorService service(locator, LocatorService::Config{});
  service.start();

  // Re-derive the minted URIs for query sampling.
  std::mt19937_64 replay(seed);
  std::vector<std::string> known;
  size_t stride = std::max<size_t>(1, n_uris / 20000);
  for (size_t i = 0; i < n_uris; ++i) {
    std::string uri = "info:bench/do/" + uuid_v4(replay);
    if (i % stride == 0) known.push_back(std::move(uri));
  }

  UrlParts parts = split_url(service.base_url());
  httplib::Client cli(parts.host_port);
  cli.set_tcp_nodelay(true);
  cli.set_keep_alive(true);
  cli.set_read_timeout(10, 0);

  std::mt19937_64 qrng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> latencies;
  latencies.reserve(n_queries);
  for (size_t q = 0; q < n_queries; ++q) {
    bool probe_known = qrng() % 10 != 0;  // 10% absent URIs, counted separately
    std::string target = probe_known
                             ? known[qrng() % known.size()]
                             : "info:bench/do/absent-" + std::to_string(qrng());
    wire::KevRequest kev;
    kev.rft_id = classify_uri(target);
    kev.svc_id = classify_uri(std::string(wire::kSvcLocateRepositories));
    std::string path = "/openurl?" + wire::compose_kev(kev);
    auto t0 = std::chrono::steady_clock::now();
    auto res = cli.Get(path);
    auto dt_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
            .count();
    if (!res || res->status != 200) fail(Err::Unreachable, "bench query failed");
    latencies.push_back(static_cast<double>(dt_ns) / 1e6);
    bool hit = res->body.find("<repository ") != std::string::npos;
    if (probe_known && hit) ++report.hits;
    if (!probe_known && !hit) ++report.misses;
    if ((probe_known && !hit) || (!probe_known && hit))
      fail(Err::ScenarioError, "bench hit/miss mismatch for " + target);
  }
  service.stop();

  std::sort(latencies.begin(), latencies.end());
  report.median_ms = latencies[latencies.size() / 2];
  report.p99_ms = latencies[static_cast<size_t>(static_cast<double>(latencies.size()) * 0.99)];
  report.max_ms = latencies.back();
  return report;
}

}  // namespace fedgate::harness
