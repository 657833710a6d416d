#include "fedgate/node.hpp"

#include <gtest/gtest.h>

#include <random>

#include "fedgate/client.hpp"
#include "fedgate/containers.hpp"
#include "fedgate/ingest.hpp"
#include "fedgate/node_service.hpp"
#include "test_util.hpp"

using namespace fedgate;
namespace fs = std::filesystem;

namespace {

FedDatetime dt(const char* s) { return FedDatetime::parse(s); }

// Hand-built fixture: one node, two tapes, one arc; known identifiers and
// datetimes so every expectation can be brute-forced by eye.
struct NodeFixture {
  fedtest::TempDir dir;
  std::shared_ptr<RepositoryNode> node;

  // do/1 -> su/1 (2006-09-06) and su/2 (2006-09-08)  (two configurations)
  // do/2 -> su/3 (2006-09-07), shares ds/shared with do/1's su/2
  // ds url http://x.org/ds/u referenced by su/1 and su/3
  NodeFixture() {
    NodeConfig cfg;
    cfg.surrogate_repo = RepositoryIdentity{classify_uri("info:fix/repo/sur"),
                                            RepoKind::SurrogateRepository};
    cfg.datastream_repo = RepositoryIdentity{classify_uri("info:fix/repo/ds"),
                                             RepoKind::DatastreamRepository};
    node = std::make_shared<RepositoryNode>(cfg);

    ArcWriter arc(dir / "a.arc");
    arc.append(classify_uri("info:fix/ds/1"), "text/plain", dt("2006-09-06T00:00:00Z"), "one");
    arc.append(classify_uri("info:fix/ds/shared"), "text/plain", dt("2006-09-07T00:00:00Z"),
               "shared");
    arc.append(classify_uri("info:fix/ds/3"), "text/plain", dt("2006-09-07T12:00:00Z"), "three");
    arc.seal();
    node->add_arc(std::make_shared<ArcReader>(dir / "a.arc"));

    TapeWriter t1(dir / "t1.xml");
    t1.append(make_doc("info:fix/su/1", {"info:fix/do/1"}, {"info:fix/ds/1"},
                       {"http://x.org/ds/u"}, "2006-09-06T00:00:00Z"),
              dt("2006-09-06T00:00:00Z"));
    t1.append(make_doc("info:fix/su/3", {"info:fix/do/2"}, {"info:fix/ds/shared", "info:fix/ds/3"},
                       {"http://x.org/ds/u"}, "2006-09-07T00:00:00Z"),
              dt("2006-09-07T00:00:00Z"));
    t1.seal();
    node->add_tape(std::make_shared<TapeReader>(dir / "t1.xml"));

    TapeWriter t2(dir / "t2.xml");
    t2.append(make_doc("info:fix/su/2", {"info:fix/do/1"}, {"info:fix/ds/shared"}, {},
                       "2006-09-08T00:00:00Z"),
              dt("2006-09-08T00:00:00Z"));
    t2.seal();
    node->add_tape(std::make_shared<TapeReader>(dir / "t2.xml"));
  }

  static SurrogateDocument make_doc(const std::string& su, std::vector<std::string> dos,
                                    std::vector<std::string> ds_uris,
                                    std::vector<std::string> ds_urls, const char* datetime) {
    Surrogate s;
    s.surrogate_uri = classify_uri(su);
    for (const auto& d : dos) s.object.do_uris.push_back(classify_uri(d));
    for (const auto& d : ds_uris) {
      DatastreamRef ds;
      ds.ds_uri = classify_uri(d);
      ds.media_type = "text/plain";
      s.datastreams.push_back(ds);
    }
    for (const auto& d : ds_urls) {
      DatastreamRef ds;
      ds.ds_url = classify_uri(d);
      ds.media_type = "text/plain";
      s.datastreams.push_back(ds);
    }
    s.surrogate_datetime = FedDatetime::parse(datetime);
    return serialize_surrogate(s);
  }
};

}  // namespace

TEST(NodeHarvest, WindowFiltersInclusiveLowerBound) {
  NodeFixture f;
  // from=2006-09-07 keeps the 09-07 and 09-08 records, drops 09-06.
  auto got = f.node->harvest_surrogates(dt("2006-09-07T00:00:00Z"), std::nullopt);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].surrogate_uri, "info:fix/su/3");
  EXPECT_EQ(got[1].surrogate_uri, "info:fix/su/2");
}

TEST(NodeHarvest, NoBoundsReturnsEveryRecordAcrossTapes) {
  NodeFixture f;
  auto got = f.node->harvest_surrogates();
  EXPECT_EQ(got.size(), 3u);  // sum of per-tape record counts
  // Ordered by (datetime, surrogate_uri).
  EXPECT_EQ(got[0].surrogate_uri, "info:fix/su/1");
  EXPECT_EQ(got[2].surrogate_uri, "info:fix/su/2");
}

TEST(NodeHarvest, EmptyNodeYieldsNothing) {
  NodeConfig cfg;
  cfg.surrogate_repo =
      RepositoryIdentity{classify_uri("info:fix/repo/e"), RepoKind::SurrogateRepository};
  RepositoryNode node(cfg);
  EXPECT_TRUE(node.harvest_surrogates().empty());
}

TEST(NodeHarvest, WindowEqualsBruteForceOracle) {
  fedtest::TempDir dir;
  NodeConfig cfg;
  cfg.surrogate_repo =
      RepositoryIdentity{classify_uri("info:fix/repo/r"), RepoKind::SurrogateRepository};
  auto node = std::make_shared<RepositoryNode>(cfg);
  std::mt19937_64 rng(5);
  std::vector<std::pair<std::string, FedDatetime>> all;
  TapeWriter w(dir / "t.xml");
  for (int i = 0; i < 200; ++i) {
    Surrogate s = fedtest::random_surrogate(rng);
    s.surrogate_uri = classify_uri("info:fix/su/r" + std::to_string(i));
    s.datastreams.clear();  // no arc in this fixture
    w.append(serialize_surrogate(s), s.surrogate_datetime);
    all.emplace_back(s.surrogate_uri.value, s.surrogate_datetime);
  }
  w.seal();
  node->add_tape(std::make_shared<TapeReader>(dir / "t.xml"));

  for (int round = 0; round < 20; ++round) {
    FedDatetime a = fedtest::random_datetime(rng);
    FedDatetime b = a.plus_seconds(static_cast<int64_t>(rng() % 500000000));
    auto got = node->harvest_surrogates(a, b);
    std::set<std::string> got_ids;
    for (const auto& h : got) got_ids.insert(h.surrogate_uri);
    std::set<std::string> want;
    for (const auto& [id, d] : all)
      if (d >= a && d <= b) want.insert(id);
    EXPECT_EQ(got_ids, want);
  }
}

TEST(NodeHarvest, AdjacentWindowsPartitionFullWindow) {
  NodeFixture f;
  FedDatetime a = dt("2006-09-05T00:00:00Z");
  FedDatetime t = dt("2006-09-07T00:00:00Z");
  FedDatetime b = dt("2006-09-09T00:00:00Z");
  auto left = f.node->harvest_surrogates(a, t);
  auto right = f.node->harvest_surrogates(t.plus_seconds(1), b);
  auto full = f.node->harvest_surrogates(a, b);
  EXPECT_EQ(left.size() + right.size(), full.size());
  std::set<std::string> ids;
  for (const auto& h : left) ids.insert(h.surrogate_uri);
  for (const auto& h : right) EXPECT_TRUE(ids.insert(h.surrogate_uri).second);
}

TEST(NodeObtain, DoUriPicksMostRecent) {
  NodeFixture f;
  Surrogate s = parse_surrogate(f.node->obtain_surrogate(classify_uri("info:fix/do/1")));
  EXPECT_EQ(s.surrogate_uri.value, "info:fix/su/2");  // 09-08 beats 09-06
}

TEST(NodeObtain, SurrogateUriIsIdentity) {
  NodeFixture f;
  Surrogate s = parse_surrogate(f.node->obtain_surrogate(classify_uri("info:fix/su/1")));
  EXPECT_EQ(s.surrogate_uri.value, "info:fix/su/1");
}

TEST(NodeObtain, DatastreamUriFindsContainingObject) {
  NodeFixture f;
  // ds/shared is a constituent of su/3 (09-07) and su/2 (09-08).
  Surrogate s = parse_surrogate(f.node->obtain_surrogate(classify_uri("info:fix/ds/shared")));
  EXPECT_EQ(s.surrogate_uri.value, "info:fix/su/2");
}

TEST(NodeObtain, UnknownIsIdDoesNotExist) {
  NodeFixture f;
  try {
    f.node->obtain_surrogate(classify_uri("info:fix/do/nope"));
    FAIL();
  } catch (const FedError& e) {
    EXPECT_EQ(e.code(), Err::IdDoesNotExist);
  }
}

TEST(NodeObtain, DatetimeTieBreaksTowardGreatestUri) {
  fedtest::TempDir dir;
  NodeConfig cfg;
  cfg.surrogate_repo =
      RepositoryIdentity{classify_uri("info:fix/repo/t"), RepoKind::SurrogateRepository};
  auto node = std::make_shared<RepositoryNode>(cfg);
  TapeWriter w(dir / "t.xml");
  w.append(NodeFixture::make_doc("info:fix/su/a", {"info:fix/do/t"}, {}, {},
                                 "2006-09-07T00:00:00Z"),
           dt("2006-09-07T00:00:00Z"));
  w.append(NodeFixture::make_doc("info:fix/su/b", {"info:fix/do/t"}, {}, {},
                                 "2006-09-07T00:00:00Z"),
           dt("2006-09-07T00:00:00Z"));
  w.seal();
  node->add_tape(std::make_shared<TapeReader>(dir / "t.xml"));
  Surrogate s = parse_surrogate(node->obtain_surrogate(classify_uri("info:fix/do/t")));
  EXPECT_EQ(s.surrogate_uri.value, "info:fix/su/b");
}

TEST(NodeLocate, DoUriReturnsAllInDatetimeOrder) {
  NodeFixture f;
  auto got = f.node->locate_surrogates(classify_uri("info:fix/do/1"));
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].surrogate_uri, "info:fix/su/1");
  EXPECT_EQ(got[1].surrogate_uri, "info:fix/su/2");
}

TEST(NodeLocate, DatastreamUrlSharedByTwoObjects) {
  NodeFixture f;
  // Locate by a Datastream-URL referent shared between two objects.
  auto got = f.node->locate_surrogates(classify_uri("http://x.org/ds/u"));
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].surrogate_uri, "info:fix/su/1");
  EXPECT_EQ(got[1].surrogate_uri, "info:fix/su/3");
}

TEST(NodeLocate, UnknownYieldsEmptyList) {
  NodeFixture f;
  EXPECT_TRUE(f.node->locate_surrogates(classify_uri("info:fix/do/nope")).empty());
}

TEST(NodeLocate, MatchesObtainWithoutMaxRestriction) {
  NodeFixture f;
  // obtain(do/1) must be an element of locate(do/1) with maximal datetime.
  auto located = f.node->locate_surrogates(classify_uri("info:fix/do/1"));
  Surrogate obtained = parse_surrogate(f.node->obtain_surrogate(classify_uri("info:fix/do/1")));
  FedDatetime max_dt = located.front().datetime;
  bool found = false;
  for (const auto& loc : located) {
    max_dt = std::max(max_dt, loc.datetime);
    found = found || loc.surrogate_uri == obtained.surrogate_uri.value;
  }
  EXPECT_TRUE(found);
  EXPECT_EQ(obtained.surrogate_datetime, max_dt);
}

TEST(NodeDatastream, RoundTripAndErrors) {
  NodeFixture f;
  auto [media, payload] = f.node->obtain_datastream(classify_uri("info:fix/ds/1"));
  EXPECT_EQ(media, "text/plain");
  EXPECT_EQ(payload, "one");
  try {
    f.node->obtain_datastream(classify_uri("info:fix/ds/nope"));
    FAIL();
  } catch (const FedError& e) {
    EXPECT_EQ(e.code(), Err::IdDoesNotExist);
  }
}

TEST(NodeDatastream, NodeWithoutDatastreamRepo) {
  NodeConfig cfg;
  cfg.surrogate_repo =
      RepositoryIdentity{classify_uri("info:fix/repo/nods"), RepoKind::SurrogateRepository};
  RepositoryNode node(cfg);
  try {
    node.obtain_datastream(classify_uri("info:fix/ds/1"));
    FAIL();
  } catch (const FedError& e) {
    EXPECT_EQ(e.code(), Err::NoSuchInterface);
  }
  EXPECT_THROW(node.harvest_datastream_identifiers(), FedError);
}

TEST(NodeDatastream, UriReferenceWithoutRepoIsIntegrityViolation) {
  fedtest::TempDir dir;
  NodeConfig cfg;
  cfg.surrogate_repo =
      RepositoryIdentity{classify_uri("info:fix/repo/bad"), RepoKind::SurrogateRepository};
  RepositoryNode node(cfg);  // no datastream repo configured
  TapeWriter w(dir / "t.xml");
  w.append(NodeFixture::make_doc("info:fix/su/x", {"info:fix/do/x"}, {"info:fix/ds/x"}, {},
                                 "2006-09-07T00:00:00Z"),
           dt("2006-09-07T00:00:00Z"));
  w.seal();
  try {
    node.add_tape(std::make_shared<TapeReader>(dir / "t.xml"));
    FAIL();
  } catch (const FedError& e) {
    EXPECT_EQ(e.code(), Err::IntegrityViolation);
  }
}

TEST(NodeDatastream, HarvestIdentifiersWindowOracle) {
  NodeFixture f;
  auto all = f.node->harvest_datastream_identifiers();
  EXPECT_EQ(all.size(), 3u);
  auto windowed =
      f.node->harvest_datastream_identifiers(dt("2006-09-07T00:00:00Z"), std::nullopt);
  EXPECT_EQ(windowed.size(), 2u);
}

TEST(NodeIdentifiers, ProjectionMatchesHarvest) {
  NodeFixture f;
  auto tuples = f.node->harvest_identifiers();
  auto full = f.node->harvest_surrogates();
  ASSERT_EQ(tuples.size(), full.size());
  for (size_t i = 0; i < tuples.size(); ++i) {
    EXPECT_EQ(tuples[i].surrogate_uri, full[i].surrogate_uri);
    EXPECT_EQ(tuples[i].datetime, full[i].datetime);
    Surrogate s = parse_surrogate(full[i].doc);
    std::vector<std::string> want_do;
    for (const auto& d : s.object.do_uris) want_do.push_back(d.value);
    EXPECT_EQ(tuples[i].do_uris, want_do);
  }
}

TEST(NodeInvariants, CleanFixtureHasNone) {
  NodeFixture f;
  EXPECT_TRUE(f.node->check_invariants().empty());
}

// Readers run against snapshots: harvest/obtain loops race container
// registration without tearing, and each request sees a consistent set.
TEST(NodeConcurrency, ReadsRaceRegistration) {
  fedtest::TempDir dir;
  NodeConfig cfg;
  cfg.surrogate_repo =
      RepositoryIdentity{classify_uri("info:fix/repo/conc"), RepoKind::SurrogateRepository};
  auto node = std::make_shared<RepositoryNode>(cfg);

  auto make_tape = [&](int idx) {
    fs::path p = dir / ("t" + std::to_string(idx) + ".xml");
    TapeWriter w(p);
    for (int r = 0; r < 20; ++r)
      w.append(NodeFixture::make_doc("info:fix/su/c" + std::to_string(idx) + "-" +
                                         std::to_string(r),
                                     {"info:fix/do/c" + std::to_string(idx)}, {}, {},
                                     "2006-09-07T00:00:00Z"),
               dt("2006-09-07T00:00:00Z"));
    w.seal();
    return std::make_shared<TapeReader>(p);
  };
  node->add_tape(make_tape(0));

  std::atomic<bool> stop{false};
  std::atomic<size_t> errors{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      while (!stop) {
        try {
          auto all = node->harvest_surrogates();
          if (all.size() % 20 != 0) ++errors;  // always whole tapes
          node->obtain_surrogate(classify_uri("info:fix/su/c0-3"));
          node->locate_surrogates(classify_uri("info:fix/do/c0"));
        } catch (const FedError&) {
          ++errors;
        }
      }
    });
  }
  for (int idx = 1; idx <= 8; ++idx) node->add_tape(make_tape(idx));
  stop = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(errors, 0u);
  EXPECT_EQ(node->surrogate_count(), 9u * 20u);
}

TEST(NodeHarvest, FromAfterUntilIsBadArgument) {
  NodeFixture f;
  auto a = dt("2006-09-08T00:00:00Z");
  EXPECT_THROW(f.node->harvest_surrogates(a, a.plus_seconds(-1)), FedError);
  EXPECT_THROW(f.node->harvest_identifiers(a, a.plus_seconds(-1)), FedError);
}

// ---------------------------------------------------------------------------
// HTTP surface
// ---------------------------------------------------------------------------

namespace {

struct ServiceFixture {
  NodeFixture fx;
  NodeService service;

  ServiceFixture() : service(fx.node, 2) { service.start(); }
  ~ServiceFixture() { service.stop(); }

  std::string get_body(const std::string& path_query, int expect_status = 200) {
    HttpResponse res = http_get(service.base_url() + path_query);
    EXPECT_EQ(res.status, expect_status) << path_query << "\n" << res.body;
    return res.body;
  }
};

}  // namespace

TEST(NodeHttp, HarvestViaClientFollowsResumption) {
  ServiceFixture f;  // page size 2, three records -> 2 pages
  auto items = harvest_all(f.service.base_url() + "/sur/oaipmh",
                           HarvestOptions{"ListRecords", "surrogate", {}, {}, 2000});
  ASSERT_EQ(items.size(), 3u);
  // Server order and byte-identical docs.
  auto direct = f.fx.node->harvest_surrogates();
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(items[i].identifier, direct[i].surrogate_uri);
    EXPECT_EQ(items[i].metadata, direct[i].doc.bytes);
  }
}

TEST(NodeHttp, HarvestWithDateOnlyFromBound) {
  ServiceFixture f;
  auto items = harvest_all(
      f.service.base_url() + "/sur/oaipmh",
      HarvestOptions{"ListRecords", "surrogate", std::string("2006-09-07"), {}, 2000});
  EXPECT_EQ(items.size(), 2u);
}

TEST(NodeHttp, NoRecordsMatchIsEmptyStreamNotError) {
  ServiceFixture f;
  auto items = harvest_all(
      f.service.base_url() + "/sur/oaipmh",
      HarvestOptions{"ListRecords", "surrogate", std::string("2010-01-01"), {}, 2000});
  EXPECT_TRUE(items.empty());
}

TEST(NodeHttp, DatastreamIdentifiersEndpoint) {
  ServiceFixture f;
  auto items = harvest_all(f.service.base_url() + "/ds/oaipmh",
                           HarvestOptions{"ListIdentifiers", "datetime", {}, {}, 2000});
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[0].identifier, "info:fix/ds/1");
}

TEST(NodeHttp, IdentifiersPrefixServesTuples) {
  ServiceFixture f;
  auto items = harvest_all(f.service.base_url() + "/sur/oaipmh",
                           HarvestOptions{"ListRecords", "identifiers", {}, {}, 2000});
  ASSERT_EQ(items.size(), 3u);
  wire::IdentifierTupleDoc t = wire::parse_identifier_tuple(items[0].metadata);
  EXPECT_EQ(t.surrogate_uri, "info:fix/su/1");
  EXPECT_EQ(t.do_uris, std::vector<std::string>{"info:fix/do/1"});
  EXPECT_EQ(t.ds_uris, std::vector<std::string>{"info:fix/ds/1"});
}

TEST(NodeHttp, ObtainSurrogateOverOpenUrl) {
  ServiceFixture f;
  wire::KevRequest kev;
  kev.rft_id = classify_uri("info:fix/do/1");
  kev.svc_id = classify_uri(std::string(wire::kSvcObtainSurrogate));
  std::string body = f.get_body("/openurl?" + wire::compose_kev(kev));
  Surrogate s = parse_surrogate(body);
  EXPECT_EQ(s.surrogate_uri.value, "info:fix/su/2");
  // Byte-identical to the direct call.
  EXPECT_EQ(body, f.fx.node->obtain_surrogate(classify_uri("info:fix/do/1")).bytes);
}

TEST(NodeHttp, LocateSurrogatesOverOpenUrl) {
  ServiceFixture f;
  wire::KevRequest kev;
  kev.rft_id = classify_uri("http://x.org/ds/u");
  kev.svc_id = classify_uri(std::string(wire::kSvcLocateSurrogates));
  std::string body = f.get_body("/openurl?" + wire::compose_kev(kev));
  auto entries = wire::parse_locations(body);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].surrogate_uri, "info:fix/su/1");
  EXPECT_EQ(entries[0].repository_uri, "info:fix/repo/sur");
}

TEST(NodeHttp, ObtainDatastreamOverOpenUrl) {
  ServiceFixture f;
  wire::KevRequest kev;
  kev.rft_id = classify_uri("info:fix/ds/1");
  kev.svc_id = classify_uri(std::string(wire::kSvcObtainDatastream));
  HttpResponse res = http_get(f.service.base_url() + "/openurl?" + wire::compose_kev(kev));
  EXPECT_EQ(res.status, 200);
  EXPECT_EQ(res.body, "one");
  EXPECT_EQ(res.content_type, "text/plain");
}

TEST(NodeHttp, ErrorStatuses) {
  ServiceFixture f;
  // Unknown svc_id -> 400.
  f.get_body("/openurl?url_ver=z39.88-2004&rft_id=info:fix/do/1&svc_id=info:fix/svc/Nope", 400);
  // Unknown identifier -> 404.
  wire::KevRequest kev;
  kev.rft_id = classify_uri("info:fix/do/nope");
  kev.svc_id = classify_uri(std::string(wire::kSvcObtainSurrogate));
  f.get_body("/openurl?" + wire::compose_kev(kev), 404);
  // Wrong OpenURL version -> 400.
  f.get_body("/openurl?url_ver=z39.87&rft_id=info:fix/do/1&svc_id=info:fix/svc/X", 400);
  // Locate with unknown identifier -> 200 with an empty locations element.
  wire::KevRequest loc;
  loc.rft_id = classify_uri("info:fix/do/nope");
  loc.svc_id = classify_uri(std::string(wire::kSvcLocateSurrogates));
  std::string body = f.get_body("/openurl?" + wire::compose_kev(loc));
  EXPECT_TRUE(wire::parse_locations(body).empty());
}

TEST(NodeHttp, DsEndpointAbsentWithoutDatastreamRepo) {
  NodeConfig cfg;
  cfg.surrogate_repo =
      RepositoryIdentity{classify_uri("info:fix/repo/nods2"), RepoKind::SurrogateRepository};
  auto node = std::make_shared<RepositoryNode>(cfg);
  NodeService service(node, 10);
  service.start();
  HttpResponse res = http_get(service.base_url() + "/ds/oaipmh?verb=Identify");
  EXPECT_EQ(res.status, 404);
  EXPECT_NE(res.body.find("NoSuchInterface"), std::string::npos);
  service.stop();
}

// Count oracle at protocol scale: 1,234 records behind a 500-record page
// size stream back completely over exactly three pages. The objects are
// descriptive-only (no datastreams), which is allowed and flagged.
TEST(NodeHttp, PagingCountOracleAt1234Records) {
  fedtest::TempDir dir;
  std::mt19937_64 rng(1234);
  NodeStore store = NodeStore::init(dir / "store", "info:paging", rng);
  auto node = store.load_node();
  SubmissionPackage pkg;
  for (int i = 0; i < 1234; ++i) {
    SubmissionObject obj;
    obj.properties.push_back(Property{"urn:fedgate:prop:n", std::to_string(i)});
    pkg.objects.push_back(obj);
  }
  ingest_batch(store, *node, pkg, dt("2006-09-08T00:00:00Z"), rng);
  EXPECT_TRUE(parse_surrogate(*node->get_doc(node->harvest_identifiers()[0].surrogate_uri))
                  .descriptive_only());

  NodeService service(node, 500);
  service.start();
  size_t pages = 0;
  size_t records = 0;
  std::optional<std::string> token;
  do {
    std::string q = token ? "verb=ListIdentifiers&resumptionToken=" + wire::form_encode(*token)
                          : "verb=ListIdentifiers&metadataPrefix=surrogate";
    HttpResponse res = http_get(service.base_url() + "/sur/oaipmh?" + q);
    ASSERT_EQ(res.status, 200);
    wire::PmhEnvelope env = wire::parse_pmh_response(res.body);
    ASSERT_FALSE(env.error_code);
    records += env.items.size();
    token = env.resumption_token;
    ++pages;
  } while (token);
  EXPECT_EQ(records, 1234u);
  EXPECT_EQ(pages, 3u);

  // The streaming client agrees.
  auto items = harvest_all(service.base_url() + "/sur/oaipmh",
                           HarvestOptions{"ListRecords", "surrogate", {}, {}, 5000});
  EXPECT_EQ(items.size(), 1234u);
  service.stop();
}

// Creating a store, ingesting, and serving over HTTP exercises the whole
// Tier-1 stack end to end.
TEST(NodeHttp, StoreIngestServeRoundTrip) {
  fedtest::TempDir dir;
  std::mt19937_64 rng(42);
  NodeStore store = NodeStore::init(dir / "store", "info:e2e", rng);
  auto node = store.load_node();

  SubmissionPackage pkg;
  SubmissionObject obj;
  obj.bitstreams.push_back(SubmissionBitstream{"a.txt", "text/plain", "payload-a", {}});
  pkg.objects.push_back(obj);
  IngestManifest m = ingest_batch(store, *node, pkg, dt("2006-09-08T00:00:00Z"), rng);
  ASSERT_EQ(m.objects.size(), 1u);

  NodeService service(node, 10);
  service.start();
  auto items = harvest_all(service.base_url() + "/sur/oaipmh",
                           HarvestOptions{"ListRecords", "surrogate", {}, {}, 2000});
  ASSERT_EQ(items.size(), 1u);
  EXPECT_EQ(items[0].identifier, m.objects[0].surrogate_uri);

  wire::KevRequest kev;
  kev.rft_id = classify_uri(m.objects[0].datastreams[0].second);
  kev.svc_id = classify_uri(std::string(wire::kSvcObtainDatastream));
  HttpResponse res = http_get(service.base_url() + "/openurl?" + wire::compose_kev(kev));
  EXPECT_EQ(res.body, "payload-a");
  service.stop();

  // Reopening the store sees the same content.
  NodeStore reopened = NodeStore::open(dir / "store");
  auto node2 = reopened.load_node();
  EXPECT_EQ(node2->surrogate_count(), 1u);
  EXPECT_EQ(node2->config().surrogate_repo.repository_uri,
            store.config().surrogate_repo.repository_uri);
}
