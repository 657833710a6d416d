#include "fedgate/locator.hpp"

#include <gtest/gtest.h>

#include <random>

#include "fedgate/harness.hpp"
#include "fedgate/locator_sync.hpp"
#include "fedgate/registry.hpp"
#include "fedgate/tier2_service.hpp"
#include "test_util.hpp"

using namespace fedgate;
namespace fs = std::filesystem;

namespace {

FedDatetime dt(const char* s) { return FedDatetime::parse(s); }

InterfaceBinding binding(const std::string& iface, InterfaceType type, const std::string& url) {
  return InterfaceBinding{classify_uri(iface), type, classify_uri(url)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

TEST(Registry, RegisterThenLookupRoundTrip) {
  ServiceRegistry reg;
  std::vector<InterfaceBinding> bindings = {
      binding("info:r/if/h", InterfaceType::HarvestSurrogates, "http://r.org/sur/oaipmh"),
      binding("info:r/if/o", InterfaceType::ObtainSurrogate, "http://r.org/openurl"),
  };
  reg.register_component(classify_uri("info:r/repo/1"), bindings,
                         {{"urn:fedgate:meta:name", "repo one"}});
  auto rec = reg.obtain_record(classify_uri("info:r/repo/1"));
  EXPECT_EQ(rec.interfaces, bindings);
  ASSERT_EQ(rec.metadata.size(), 1u);
  EXPECT_EQ(rec.metadata[0].second, "repo one");
}

TEST(Registry, InterfaceUriResolvesToUrl) {
  ServiceRegistry reg;
  reg.register_component(
      classify_uri("info:r/repo/1"),
      {binding("info:r/if/h", InterfaceType::HarvestSurrogates, "http://r.org/sur/oaipmh")});
  auto rec = reg.obtain_record(classify_uri("info:r/if/h"));
  ASSERT_TRUE(rec.interface_url);
  EXPECT_EQ(*rec.interface_url, "http://r.org/sur/oaipmh");
  EXPECT_TRUE(rec.interfaces.empty());
}

TEST(Registry, ReRegistrationReplacesBindings) {
  ServiceRegistry reg;
  reg.register_component(
      classify_uri("info:r/repo/1"),
      {binding("info:r/if/h", InterfaceType::HarvestSurrogates, "http://old.org/oai")});
  reg.register_component(
      classify_uri("info:r/repo/1"),
      {binding("info:r/if/h", InterfaceType::HarvestSurrogates, "http://new.org/oai")});
  auto rec = reg.obtain_record(classify_uri("info:r/if/h"));
  EXPECT_EQ(*rec.interface_url, "http://new.org/oai");
  // A dropped binding loses its interface entry.
  reg.register_component(
      classify_uri("info:r/repo/1"),
      {binding("info:r/if/h2", InterfaceType::HarvestSurrogates, "http://new.org/oai2")});
  EXPECT_THROW(reg.obtain_record(classify_uri("info:r/if/h")), FedError);
}

TEST(Registry, ForeignInterfaceUriIsConflict) {
  ServiceRegistry reg;
  reg.register_component(
      classify_uri("info:r/repo/1"),
      {binding("info:r/if/h", InterfaceType::HarvestSurrogates, "http://r.org/oai")});
  try {
    reg.register_component(
        classify_uri("info:r/repo/2"),
        {binding("info:r/if/h", InterfaceType::HarvestSurrogates, "http://other.org/oai")});
    FAIL();
  } catch (const FedError& e) {
    EXPECT_EQ(e.code(), Err::ConflictError);
  }
  // The registry is untouched.
  EXPECT_EQ(*reg.obtain_record(classify_uri("info:r/if/h")).interface_url, "http://r.org/oai");
  EXPECT_EQ(reg.size(), 1u);
}

TEST(Registry, UnknownIsIdDoesNotExist) {
  ServiceRegistry reg;
  try {
    reg.obtain_record(classify_uri("info:r/repo/none"));
    FAIL();
  } catch (const FedError& e) {
    EXPECT_EQ(e.code(), Err::IdDoesNotExist);
  }
}

TEST(RegistryHttp, ObtainRecordAndRegistration) {
  auto reg = std::make_shared<ServiceRegistry>();
  RegistryService service(reg);
  service.start();

  wire::RegistryRecordDoc rec;
  rec.subject = "info:some-repo/";
  rec.interfaces = {
      binding("info:some-repo/if/h", InterfaceType::HarvestSurrogates, "http://r.org/oai")};
  register_components_http(service.base_url(), {rec});

  // The protocol documentation's example request: rft_id=info:some-repo/.
  std::string q =
      "url_ver=z39.88-2004&rft_id=info:some-repo/&svc_id=info:ourfederation/svc/ObtainRecord";
  HttpResponse res = http_get(service.base_url() + "/openurl?" + q);
  EXPECT_EQ(res.status, 200);
  auto parsed = wire::parse_registry_record(res.body);
  EXPECT_EQ(parsed.subject, "info:some-repo/");
  ASSERT_EQ(parsed.interfaces.size(), 1u);
  EXPECT_EQ(parsed.interfaces[0].interface_url.value, "http://r.org/oai");

  // Unknown -> 404; conflicting registration -> 409.
  EXPECT_EQ(http_get(service.base_url() +
                     "/openurl?url_ver=z39.88-2004&rft_id=info:nope/&svc_id=info:ourfederation/"
                     "svc/ObtainRecord")
                .status,
            404);
  wire::RegistryRecordDoc thief;
  thief.subject = "info:thief/";
  thief.interfaces = {
      binding("info:some-repo/if/h", InterfaceType::HarvestSurrogates, "http://t.org/oai")};
  EXPECT_THROW(register_components_http(service.base_url(), {thief}), FedError);

  auto listed = repos_from_registry_http(service.base_url());
  ASSERT_EQ(listed.size(), 1u);
  EXPECT_EQ(listed[0].repository_uri, "info:some-repo/");
  service.stop();
}

// ---------------------------------------------------------------------------
// Locator state
// ---------------------------------------------------------------------------

TEST(Locator, LocateUnknownIsEmpty) {
  IdentifierLocator loc;
  EXPECT_TRUE(loc.locate("info:x/do/1").empty());
}

TEST(Locator, UpsertAndLocateSorted) {
  IdentifierLocator loc;
  loc.apply_batch("info:fed/repo/b", RepoKind::SurrogateRepository,
                  {{"info:x/do/1", dt("2006-09-07T00:00:00Z")}}, std::nullopt);
  loc.apply_batch("info:fed/repo/a", RepoKind::SurrogateRepository,
                  {{"info:x/do/1", dt("2006-09-08T00:00:00Z")}}, std::nullopt);
  EXPECT_EQ(loc.locate("info:x/do/1"),
            (std::vector<std::string>{"info:fed/repo/a", "info:fed/repo/b"}));
  EXPECT_EQ(loc.last_seen("info:x/do/1"), dt("2006-09-08T00:00:00Z"));
}

TEST(Locator, SingleOwnerRuleNamesBothRepositories) {
  IdentifierLocator loc;
  loc.apply_batch("info:fed/repo/dsA", RepoKind::DatastreamRepository,
                  {{"info:x/ds/1", dt("2006-09-07T00:00:00Z")}}, std::nullopt);
  // A second Surrogate Repository referencing it is fine.
  loc.apply_batch("info:fed/repo/sur", RepoKind::SurrogateRepository,
                  {{"info:x/ds/1", dt("2006-09-07T00:00:00Z")}}, std::nullopt);
  // A second Datastream Repository claiming it is a hard error naming both.
  try {
    loc.apply_batch("info:fed/repo/dsB", RepoKind::DatastreamRepository,
                    {{"info:x/ds/1", dt("2006-09-07T00:00:00Z")}}, std::nullopt);
    FAIL();
  } catch (const FedError& e) {
    EXPECT_EQ(e.code(), Err::IntegrityViolation);
    ASSERT_EQ(e.details().size(), 2u);
    EXPECT_EQ(e.details()[0], "info:fed/repo/dsA");
    EXPECT_EQ(e.details()[1], "info:fed/repo/dsB");
  }
  // Atomic: the failed batch changed nothing.
  EXPECT_EQ(loc.locate("info:x/ds/1").size(), 2u);
}

TEST(Locator, CursorsAreMonotone) {
  IdentifierLocator loc;
  loc.apply_batch("info:fed/repo/a", RepoKind::SurrogateRepository, {},
                  std::make_pair(InterfaceType::HarvestIdentifiers, dt("2006-09-08T00:00:00Z")));
  loc.apply_batch("info:fed/repo/a", RepoKind::SurrogateRepository, {},
                  std::make_pair(InterfaceType::HarvestIdentifiers, dt("2006-09-07T00:00:00Z")));
  EXPECT_EQ(loc.cursor("info:fed/repo/a", InterfaceType::HarvestIdentifiers),
            dt("2006-09-08T00:00:00Z"));
}

TEST(Locator, PersistenceAcrossReopen) {
  fedtest::TempDir dir;
  {
    IdentifierLocator loc(dir / "state");
    loc.apply_batch("info:fed/repo/a", RepoKind::SurrogateRepository,
                    {{"info:x/do/1", dt("2006-09-07T00:00:00Z")},
                     {"info:x/su/1", dt("2006-09-07T00:00:00Z")}},
                    std::make_pair(InterfaceType::HarvestIdentifiers, dt("2006-09-08T00:00:00Z")));
  }
  {
    IdentifierLocator loc(dir / "state");
    EXPECT_EQ(loc.locate("info:x/do/1"), (std::vector<std::string>{"info:fed/repo/a"}));
    EXPECT_EQ(loc.cursor("info:fed/repo/a", InterfaceType::HarvestIdentifiers),
              dt("2006-09-08T00:00:00Z"));
    loc.compact();
  }
  {
    // Snapshot-only reload after compaction.
    IdentifierLocator loc(dir / "state");
    EXPECT_EQ(loc.entry_count(), 2u);
    EXPECT_EQ(loc.locate("info:x/su/1"), (std::vector<std::string>{"info:fed/repo/a"}));
    EXPECT_TRUE(loc.cursor("info:fed/repo/a", InterfaceType::HarvestIdentifiers).has_value());
  }
}

// ---------------------------------------------------------------------------
// Sync against a live mini-federation
// ---------------------------------------------------------------------------

namespace {

struct MiniFed {
  fedtest::TempDir dir;
  std::unique_ptr<harness::FederationHandles> handles;

  explicit MiniFed(size_t repos = 2, size_t objects = 5) {
    harness::FederationScenario scenario;
    scenario.repo_count = repos;
    scenario.objects_per_repo = objects;
    scenario.bitstreams_per_object = 2;
    scenario.seed = 77;
    handles = harness::run_scenario(scenario, dir / "fed");
  }
};

}  // namespace

TEST(LocatorSync, SoundAndCompleteAgainstManifests) {
  MiniFed fed(2, 5);
  auto& locator = *fed.handles->locator;

  // Every URI in every manifest locates to exactly the repositories whose
  // harvests mention it (here: the owning repo's surrogate + datastream repo).
  for (const auto& repo : fed.handles->repos) {
    for (const auto& obj : repo->manifest.objects) {
      auto su_repos = locator.locate(obj.surrogate_uri);
      EXPECT_EQ(su_repos, std::vector<std::string>{repo->surrogate_repo_uri()});
      for (const auto& d : obj.do_uris) {
        auto repos = locator.locate(d);
        EXPECT_FALSE(repos.empty()) << d;
      }
      for (const auto& [name, ds_uri] : obj.datastreams) {
        auto repos = locator.locate(ds_uri);
        // Constituent reference from the surrogate repo + ownership by the
        // datastream repo.
        ASSERT_EQ(repos.size(), 2u) << ds_uri;
      }
    }
  }

  // Soundness: locate over the union of harvested identifier tuples agrees
  // with a brute-force scan of all nodes.
  std::map<std::string, std::set<std::string>> want;
  for (const auto& repo : fed.handles->repos) {
    for (const auto& t : repo->node->harvest_identifiers()) {
      want[t.surrogate_uri].insert(repo->surrogate_repo_uri());
      for (const auto& d : t.do_uris) want[d].insert(repo->surrogate_repo_uri());
      for (const auto& d : t.ds_uris) want[d].insert(repo->surrogate_repo_uri());
    }
    if (auto ds_repo = repo->datastream_repo_uri())
      for (const auto& [uri, _] : repo->node->harvest_datastream_identifiers())
        want[uri].insert(*ds_repo);
  }
  for (const auto& [uri, repos] : want) {
    std::set<std::string> got;
    for (const auto& r : locator.locate(uri)) got.insert(r);
    EXPECT_EQ(got, repos) << uri;
  }
}

TEST(LocatorSync, SecondSyncIsIdempotentNoop) {
  MiniFed fed(2, 4);
  SyncReport second = fed.handles->locator_service->run_sync(
      fed.handles->sync_time.plus_seconds(3600));
  EXPECT_TRUE(second.all_ok());
  for (const auto& r : second.repos) EXPECT_EQ(r.records, 0u) << r.repository_uri;
}

TEST(LocatorSync, BatchOf100ObjectsReportsAtLeast100Uris) {
  MiniFed fed(1, 4);
  auto& repo = *fed.handles->repos[0];
  std::mt19937_64 rng(123);
  SubmissionPackage pkg = harness::synthetic_package(rng, 100, 1);
  FedDatetime later = fed.handles->sync_time.plus_seconds(600);
  ingest_batch(repo.store, *repo.node, pkg, later, rng,
               IngestOptions{{}, repo.service->base_url(), {}});

  SyncReport report =
      fed.handles->locator_service->run_sync(fed.handles->sync_time.plus_seconds(7200));
  EXPECT_TRUE(report.all_ok());
  // Each object contributes at least its surrogate, DO and datastream URIs
  // through the surrogate repo feed; the datastream repo feed adds ownership
  // entries for the 100 new bitstreams.
  size_t surrogate_feed = 0, ds_feed = 0;
  for (const auto& r : report.repos) {
    if (r.repository_uri == repo.surrogate_repo_uri()) surrogate_feed = r.uris;
    if (repo.datastream_repo_uri() && r.repository_uri == *repo.datastream_repo_uri())
      ds_feed = r.uris;
  }
  EXPECT_GE(surrogate_feed, 300u);
  EXPECT_EQ(ds_feed, 100u);
}

TEST(LocatorSync, FailedRepoIsIsolatedAndCursorUntouched) {
  MiniFed fed(3, 3);
  auto& locator = *fed.handles->locator;
  std::string failing = fed.handles->repos[1]->surrogate_repo_uri();
  auto cursor_before = locator.cursor(failing, InterfaceType::HarvestIdentifiers);
  ASSERT_TRUE(cursor_before.has_value());

  harness::inject_failure(*fed.handles, 1, FailureMode::Error500);
  FedDatetime now2 = fed.handles->sync_time.plus_seconds(7200);
  SyncReport report = fed.handles->locator_service->run_sync(now2);
  EXPECT_FALSE(report.all_ok());

  size_t errors = 0, advanced = 0;
  for (const auto& r : report.repos) {
    if (r.error) {
      ++errors;
      EXPECT_TRUE(r.repository_uri == failing ||
                  r.repository_uri == *fed.handles->repos[1]->datastream_repo_uri());
    } else {
      ++advanced;
      EXPECT_EQ(*r.new_cursor, now2.plus_seconds(-1));
    }
  }
  EXPECT_EQ(errors, 2u);  // the failing node's two logical repositories
  EXPECT_EQ(advanced, 4u);
  EXPECT_EQ(locator.cursor(failing, InterfaceType::HarvestIdentifiers), cursor_before);

  // Recovery: clearing the failure and re-syncing converges.
  harness::inject_failure(*fed.handles, 1, FailureMode::None);
  SyncReport recovered = fed.handles->locator_service->run_sync(now2.plus_seconds(60));
  EXPECT_TRUE(recovered.all_ok());
}

TEST(LocatorSync, FallsBackToHarvestSurrogatesWhenIdentifiersUnbound) {
  MiniFed fed(1, 3);
  auto& repo = *fed.handles->repos[0];

  // Re-register the surrogate repository without its HarvestIdentifiers
  // binding; sync must fall back to the full-document harvest.
  auto records = repo.service->component_records();
  ASSERT_FALSE(records.empty());
  wire::RegistryRecordDoc sur = records[0];
  std::vector<InterfaceBinding> kept;
  for (const auto& b : sur.interfaces)
    if (b.interface_type != InterfaceType::HarvestIdentifiers) kept.push_back(b);
  sur.interfaces = kept;
  register_components_http(fed.handles->registry_service->base_url(), {sur});

  auto fresh_locator = std::make_shared<IdentifierLocator>();
  auto sources = repos_from_registry_http(fed.handles->registry_service->base_url());
  SyncOptions opts;
  opts.now = fed.handles->sync_time;
  SyncReport report = locator_sync(*fresh_locator, sources, opts);
  EXPECT_TRUE(report.all_ok());
  for (const auto& obj : repo.manifest.objects) {
    EXPECT_EQ(fresh_locator->locate(obj.surrogate_uri),
              std::vector<std::string>{repo.surrogate_repo_uri()});
  }
  // Cursor lives under the fallback interface type.
  EXPECT_TRUE(fresh_locator->cursor(repo.surrogate_repo_uri(), InterfaceType::HarvestSurrogates)
                  .has_value());
  EXPECT_FALSE(fresh_locator->cursor(repo.surrogate_repo_uri(), InterfaceType::HarvestIdentifiers)
                   .has_value());
}

// Idempotence under retry: a sync that failed half-way converges, after the
// repository recovers, to the same state a single clean sync produces.
TEST(LocatorSync, RetryAfterFailureConvergesToCleanState) {
  MiniFed fed(2, 4);
  FedDatetime now = fed.handles->sync_time;

  // Reference locator built by one clean sync.
  auto clean = std::make_shared<IdentifierLocator>();
  auto sources = repos_from_registry_http(fed.handles->registry_service->base_url());
  SyncOptions opts;
  opts.now = now;
  ASSERT_TRUE(locator_sync(*clean, sources, opts).all_ok());

  // Victim locator: first sync sees repo 0 down, then a retry after recovery.
  auto victim = std::make_shared<IdentifierLocator>();
  harness::inject_failure(*fed.handles, 0, FailureMode::Error500);
  SyncReport first = locator_sync(*victim, sources, opts);
  EXPECT_FALSE(first.all_ok());
  harness::inject_failure(*fed.handles, 0, FailureMode::None);
  SyncReport retry = locator_sync(*victim, sources, opts);
  EXPECT_TRUE(retry.all_ok());

  // Same locate answer for every URI either locator knows.
  for (const auto& repo : fed.handles->repos) {
    for (const auto& t : repo->node->harvest_identifiers()) {
      EXPECT_EQ(victim->locate(t.surrogate_uri), clean->locate(t.surrogate_uri));
      for (const auto& d : t.do_uris) EXPECT_EQ(victim->locate(d), clean->locate(d));
      for (const auto& d : t.ds_uris) EXPECT_EQ(victim->locate(d), clean->locate(d));
    }
  }
  EXPECT_EQ(victim->entry_count(), clean->entry_count());
}

// A protocol-based DO-URI inherited by objects in two repositories is still a
// plain locator key and yields both repositories.
TEST(LocatorSync, ProtocolBasedDoUriLocatesBothHolders) {
  MiniFed fed(2, 1);
  const std::string shared_do = "http://some.repo.org/do/1234";
  for (size_t i = 0; i < 2; ++i) {
    auto& repo = *fed.handles->repos[i];
    std::mt19937_64 rng(41 + i);
    SubmissionPackage pkg;
    SubmissionObject obj;
    obj.inherited_do_uris.push_back(classify_uri(shared_do));
    obj.bitstreams.push_back(SubmissionBitstream{"b.bin", "text/plain", "b", {}});
    pkg.objects.push_back(obj);
    ingest_batch(repo.store, *repo.node, pkg, fed.handles->sync_time.plus_seconds(60), rng,
                 IngestOptions{{}, repo.service->base_url(), {}});
  }
  fed.handles->locator_service->run_sync(fed.handles->sync_time.plus_seconds(3600));

  auto located = locate_repositories_http(fed.handles->locator_service->base_url(), shared_do);
  std::vector<std::string> want = {fed.handles->repos[0]->surrogate_repo_uri(),
                                   fed.handles->repos[1]->surrogate_repo_uri()};
  std::sort(want.begin(), want.end());
  EXPECT_EQ(located, want);
}

TEST(LocatorHttp, LocateRepositoriesWire) {
  MiniFed fed(2, 3);
  const auto& obj = fed.handles->repos[0]->manifest.objects[0];
  auto repos = locate_repositories_http(fed.handles->locator_service->base_url(),
                                        obj.surrogate_uri);
  EXPECT_EQ(repos, std::vector<std::string>{fed.handles->repos[0]->surrogate_repo_uri()});
  // Unknown identifier renders an empty element and parses to an empty list.
  EXPECT_TRUE(
      locate_repositories_http(fed.handles->locator_service->base_url(), "info:nope/do/1")
          .empty());

  // Cursor dump exists and lists every repository interface synced.
  HttpResponse res = http_get(fed.handles->locator_service->base_url() + "/admin/cursors");
  EXPECT_EQ(res.status, 200);
  nlohmann::json cursors = nlohmann::json::parse(res.body);
  EXPECT_EQ(cursors.size(), 4u);  // 2 nodes x (surrogate + datastream repos)
}

TEST(LocatorHttp, SyncEndpointReportsPerRepo) {
  MiniFed fed(2, 2);
  UrlParts parts = split_url(fed.handles->locator_service->base_url());
  httplib::Client cli(parts.host_port);
  nlohmann::json body = {{"now", fed.handles->sync_time.plus_seconds(7200).to_string()}};
  auto res = cli.Post("/admin/sync", body.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  nlohmann::json report = nlohmann::json::parse(res->body);
  EXPECT_EQ(report.size(), 4u);
  for (const auto& entry : report) EXPECT_EQ(entry["records"].get<int>(), 0);
}
