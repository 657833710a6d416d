#include "fedgate/wire.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

#include "fedgate/pmh_endpoint.hpp"
#include "fedgate/wire_records.hpp"
#include "test_util.hpp"

using namespace fedgate;
using namespace fedgate::wire;

namespace {

// The literal request strings the protocol documentation fixes (query part).
const char* kOpenUrlExamples[] = {
    "url_ver=z39.88-2004&rft_id=info:some-repo/do/1234&svc_id=info:ourfederation/svc/"
    "ObtainSurrogate.DIDL",
    "url_ver=z39.88-2004&rft_id=http://some.repo.org/ds/5678&svc_id=info:ourfederation/svc/"
    "LocateSurrogates",
    "url_ver=z39.88-2004&rft_id=info:some-repo/ds/5678&svc_id=info:ourfederation/svc/"
    "ObtainDatastream",
    "url_ver=z39.88-2004&rft_id=http://some.repo.org/do/1234&svc_id=info:ourfederation/svc/"
    "LocateRepositories",
    "url_ver=z39.88-2004&rft_id=info:some-repo/&svc_id=info:ourfederation/svc/ObtainRecord",
};

const char* kPmhExamples[] = {
    "verb=ListRecords&metadataPrefix=didl&from=2006-09-07",
    "verb=ListIdentifiers&metadataPrefix=datetime&from=2006-09-07",
};

}  // namespace

TEST(Kev, ObtainDatastreamExampleParses) {
  KevRequest req = parse_kev(kOpenUrlExamples[2]);
  EXPECT_EQ(req.rft_id.value, "info:some-repo/ds/5678");
  EXPECT_EQ(req.svc_id.value, "info:ourfederation/svc/ObtainDatastream");
  EXPECT_EQ(req.rft_id.kind, UriKind::NonProtocolBased);
  EXPECT_TRUE(req.extra.empty());
}

TEST(Kev, ProtocolBasedReferentSurvives) {
  KevRequest req = parse_kev(kOpenUrlExamples[1]);
  EXPECT_EQ(req.rft_id.value, "http://some.repo.org/ds/5678");
  EXPECT_EQ(req.rft_id.kind, UriKind::ProtocolBased);
}

TEST(Kev, ComposeParseIdentityOnAllExamples) {
  for (const char* q : kOpenUrlExamples) {
    KevRequest req = parse_kev(q);
    EXPECT_EQ(compose_kev(req), q);
    EXPECT_EQ(parse_kev(compose_kev(req)), req);
  }
}

TEST(Kev, WrongVersionIsUnsupported) {
  try {
    parse_kev("url_ver=z39.87-2004&rft_id=info:a/b&svc_id=info:c/d");
    FAIL();
  } catch (const FedError& e) {
    EXPECT_EQ(e.code(), Err::UnsupportedVersion);
  }
  EXPECT_THROW(parse_kev("rft_id=info:a/b&svc_id=info:c/d"), FedError);
}

TEST(Kev, MissingMandatoryIsBadArgument) {
  for (const char* q : {"url_ver=z39.88-2004&svc_id=info:c/d", "url_ver=z39.88-2004&rft_id=info:a/b"}) {
    try {
      parse_kev(q);
      FAIL();
    } catch (const FedError& e) {
      EXPECT_EQ(e.code(), Err::BadArgument);
    }
  }
}

TEST(Kev, ExtrasPreservedVerbatimInOrder) {
  std::string q =
      "url_ver=z39.88-2004&rft_id=info:a/b&svc_id=info:c/d&zz=1&aa=2&zz=3";
  KevRequest req = parse_kev(q);
  ASSERT_EQ(req.extra.size(), 3u);
  EXPECT_EQ(req.extra[0], (std::pair<std::string, std::string>{"zz", "1"}));
  EXPECT_EQ(req.extra[1], (std::pair<std::string, std::string>{"aa", "2"}));
  EXPECT_EQ(req.extra[2], (std::pair<std::string, std::string>{"zz", "3"}));
  EXPECT_EQ(compose_kev(req), q);
}

TEST(Kev, EncodingRoundTrip) {
  KevRequest req;
  req.rft_id = classify_uri("info:a/xy&z=1+2%");
  req.svc_id = classify_uri("info:svc/s");
  req.extra.emplace_back("note", "a b&c=d+e");
  KevRequest back = parse_kev(compose_kev(req));
  EXPECT_EQ(back, req);
}

TEST(Pmh, HarvestExampleParses) {
  PmhRequest req = parse_pmh(kPmhExamples[0]);
  EXPECT_EQ(req.verb, PmhVerb::ListRecords);
  EXPECT_EQ(*req.metadata_prefix, "didl");
  ASSERT_TRUE(req.from_bound());
  EXPECT_EQ(req.from_bound()->to_string(), "2006-09-07T00:00:00Z");
  EXPECT_FALSE(req.until_raw);
}

TEST(Pmh, DatastreamIdentifierExampleParses) {
  PmhRequest req = parse_pmh(kPmhExamples[1]);
  EXPECT_EQ(req.verb, PmhVerb::ListIdentifiers);
  EXPECT_EQ(*req.metadata_prefix, "datetime");
  EXPECT_EQ(req.from_bound()->to_string(), "2006-09-07T00:00:00Z");
}

TEST(Pmh, ComposeParseIdentityOnExamples) {
  for (const char* q : kPmhExamples) {
    PmhRequest req = parse_pmh(q);
    EXPECT_EQ(compose_pmh(req), q);
    EXPECT_EQ(parse_pmh(compose_pmh(req)), req);
  }
}

TEST(Pmh, UntilExpandsToEndOfDay) {
  PmhRequest req = parse_pmh("verb=ListRecords&metadataPrefix=surrogate&until=2006-09-07");
  EXPECT_EQ(req.until_bound()->to_string(), "2006-09-07T23:59:59Z");
}

TEST(Pmh, MissingMetadataPrefixIsBadArgument) {
  try {
    parse_pmh("verb=ListRecords");
    FAIL();
  } catch (const FedError& e) {
    EXPECT_EQ(e.code(), Err::BadArgument);
  }
}

TEST(Pmh, UnknownVerbIsBadVerb) {
  try {
    parse_pmh("verb=Frobnicate");
    FAIL();
  } catch (const FedError& e) {
    EXPECT_EQ(e.code(), Err::BadVerb);
  }
  EXPECT_THROW(parse_pmh("metadataPrefix=surrogate"), FedError);
}

TEST(Pmh, IllegalCombinations) {
  const char* bad[] = {
      "verb=Identify&metadataPrefix=surrogate",
      "verb=ListRecords&metadataPrefix=surrogate&resumptionToken=x",
      "verb=ListRecords&resumptionToken=x&from=2006-09-07",
      "verb=GetRecord&metadataPrefix=surrogate",
      "verb=GetRecord&identifier=info:a/b",
      "verb=GetRecord&identifier=info:a/b&metadataPrefix=surrogate&from=2006-09-07",
      "verb=ListRecords&metadataPrefix=surrogate&identifier=info:a/b",
      "verb=ListRecords&metadataPrefix=surrogate&metadataPrefix=surrogate",
      "verb=ListRecords&metadataPrefix=surrogate&bogus=1",
      "verb=ListRecords&metadataPrefix=surrogate&from=garbage",
      "verb=ListRecords&metadataPrefix=surrogate&from=2006-09-08&until=2006-09-07",
      "verb=GetRecord&identifier=not%20a%20uri&metadataPrefix=surrogate",
  };
  for (const char* q : bad) {
    try {
      parse_pmh(q);
      FAIL() << q;
    } catch (const FedError& e) {
      EXPECT_EQ(e.code(), Err::BadArgument) << q;
    }
  }
}

TEST(Pmh, FuzzSafety) {
  std::mt19937_64 rng(55);
  for (int i = 0; i < 2000; ++i) {
    size_t len = rng() % 120;
    std::string junk;
    for (size_t j = 0; j < len; ++j) junk.push_back(static_cast<char>(rng() & 0xff));
    try {
      parse_pmh(junk);
    } catch (const FedError&) {
    }
    try {
      parse_kev(junk);
    } catch (const FedError&) {
    }
  }
}

TEST(QueryCodec, DecodeEncodeIdentities) {
  std::mt19937_64 rng(66);
  for (int i = 0; i < 2000; ++i) {
    std::string value = fedtest::random_text(rng, 40);
    EXPECT_EQ(form_decode(form_encode(value)), value);
  }
  EXPECT_EQ(form_decode("a+b%20c%2Bd"), "a b c+d");
  EXPECT_EQ(form_decode("%zz"), "%zz");  // malformed escape passes through
}

TEST(ResumptionToken, EncodeDecode) {
  ResumptionToken t{12345, 0xdeadbeefcafef00dULL};
  auto back = decode_token(encode_token(t));
  ASSERT_TRUE(back);
  EXPECT_EQ(back->offset, t.offset);
  EXPECT_EQ(back->fingerprint, t.fingerprint);
  EXPECT_FALSE(decode_token("garbage"));
  EXPECT_FALSE(decode_token("12.abc"));
  EXPECT_FALSE(decode_token(""));
}

// ---------------------------------------------------------------------------
// Endpoint behavior (pure handler, no sockets)
// ---------------------------------------------------------------------------

namespace {

struct FakeStore {
  // id -> (datetime, doc)
  std::map<std::string, std::pair<FedDatetime, std::string>> records;

  PmhEndpoint endpoint(size_t page_size) {
    wire::IdentifyInfo info{"fake", "http://fake.test/oai", "info:fake/repo/1", "1970-01-01T00:00:00Z", {}};
    PmhSourceOps ops;
    ops.list_heads = [this](const std::string&, const std::optional<FedDatetime>& from,
                            const std::optional<FedDatetime>& until,
                            const std::optional<uint64_t>&) {
      std::vector<PmhHead> heads;
      for (const auto& [id, v] : records)
        if (datetime_in_window(v.first, from, until)) heads.push_back({id, v.first});
      std::sort(heads.begin(), heads.end(), [](const PmhHead& a, const PmhHead& b) {
        if (a.datestamp != b.datestamp) return a.datestamp < b.datestamp;
        return a.identifier < b.identifier;
      });
      return heads;
    };
    ops.metadata = [this](const std::string&, const std::string& id) -> std::optional<std::string> {
      auto it = records.find(id);
      if (it == records.end()) return std::nullopt;
      return it->second.second;
    };
    ops.datestamp = [this](const std::string& id) -> std::optional<FedDatetime> {
      auto it = records.find(id);
      if (it == records.end()) return std::nullopt;
      return it->second.first;
    };
    return PmhEndpoint(info, {"surrogate"}, page_size, ops);
  }
};

FakeStore make_store(int n) {
  FakeStore store;
  std::mt19937_64 rng(91);
  for (int i = 0; i < n; ++i) {
    Surrogate s = fedtest::random_surrogate(rng);
    s.surrogate_uri = classify_uri("info:fake/su/" + std::to_string(i));
    store.records[s.surrogate_uri.value] = {s.surrogate_datetime,
                                            serialize_surrogate(s).bytes};
  }
  return store;
}

std::string first_error_code(const std::string& body) {
  xml::Element root = xml::parse_document(body);
  const xml::Element* err = root.first("error");
  return err ? *err->attr("code") : "";
}

}  // namespace

TEST(Endpoint, NoRecordsMatchOnEmptyStore) {
  FakeStore store;
  auto reply = store.endpoint(10).handle("verb=ListRecords&metadataPrefix=surrogate",
                                         FedDatetime::parse("2006-09-08T00:00:00Z"));
  EXPECT_EQ(reply.status, 200);
  EXPECT_EQ(first_error_code(reply.body), "noRecordsMatch");
}

TEST(Endpoint, RenderedListRoundTripsThroughResponseParser) {
  FakeStore store = make_store(7);
  auto reply = store.endpoint(100).handle("verb=ListRecords&metadataPrefix=surrogate",
                                          FedDatetime::parse("2006-09-08T00:00:00Z"));
  PmhEnvelope env = parse_pmh_response(reply.body);
  ASSERT_FALSE(env.error_code) << *env.error_code;
  ASSERT_EQ(env.items.size(), 7u);
  for (const auto& item : env.items) {
    // Metadata bytes come back verbatim.
    EXPECT_EQ(item.metadata, store.records[item.identifier].second);
    EXPECT_EQ(item.datestamp, store.records[item.identifier].first);
  }
}

// Paging completeness: for any page size p >= 1, the union over pages equals
// the unpaged result, in order.
TEST(Endpoint, PagingCompletenessForAnyPageSize) {
  FakeStore store = make_store(23);
  auto full = store.endpoint(1000).handle("verb=ListRecords&metadataPrefix=surrogate",
                                          FedDatetime::parse("2006-09-08T00:00:00Z"));
  PmhEnvelope full_env = parse_pmh_response(full.body);
  ASSERT_EQ(full_env.items.size(), 23u);

  for (size_t p : {1u, 2u, 3u, 5u, 10u, 22u, 23u, 24u}) {
    PmhEndpoint ep = store.endpoint(p);
    std::vector<PmhItem> collected;
    std::optional<std::string> token;
    int pages = 0;
    do {
      std::string q = token ? "verb=ListRecords&resumptionToken=" + form_encode(*token)
                            : "verb=ListRecords&metadataPrefix=surrogate";
      auto reply = ep.handle(q, FedDatetime::parse("2006-09-08T00:00:00Z"));
      PmhEnvelope env = parse_pmh_response(reply.body);
      ASSERT_FALSE(env.error_code) << *env.error_code;
      for (auto& item : env.items) collected.push_back(item);
      token = env.resumption_token;
      ++pages;
      ASSERT_LE(pages, 40);
    } while (token);
    EXPECT_EQ(collected, full_env.items) << "page size " << p;
    EXPECT_EQ(pages, static_cast<int>((23 + p - 1) / p));
  }
}

TEST(Endpoint, TamperedTokenIsRejected) {
  FakeStore store = make_store(10);
  PmhEndpoint ep = store.endpoint(4);
  auto reply = ep.handle("verb=ListRecords&metadataPrefix=surrogate",
                         FedDatetime::parse("2006-09-08T00:00:00Z"));
  PmhEnvelope env = parse_pmh_response(reply.body);
  ASSERT_TRUE(env.resumption_token);
  std::string bad = *env.resumption_token;
  bad[bad.find('.') + 3] = bad[bad.find('.') + 3] == 'a' ? 'b' : 'a';
  auto reply2 = ep.handle("verb=ListRecords&resumptionToken=" + form_encode(bad),
                          FedDatetime::parse("2006-09-08T00:00:00Z"));
  EXPECT_EQ(first_error_code(reply2.body), "badResumptionToken");
}

// A result set that changes between pages invalidates outstanding tokens.
TEST(Endpoint, WindowChangeInvalidatesToken) {
  FakeStore store = make_store(10);
  PmhEndpoint ep = store.endpoint(4);
  auto reply = ep.handle("verb=ListRecords&metadataPrefix=surrogate",
                         FedDatetime::parse("2006-09-08T00:00:00Z"));
  PmhEnvelope env = parse_pmh_response(reply.body);
  ASSERT_TRUE(env.resumption_token);

  Surrogate extra;
  extra.surrogate_uri = classify_uri("info:fake/su/extra");
  extra.object.do_uris = {classify_uri("info:fake/do/extra")};
  extra.surrogate_datetime = FedDatetime::parse("2007-01-01T00:00:00Z");
  store.records[extra.surrogate_uri.value] = {extra.surrogate_datetime,
                                              serialize_surrogate(extra).bytes};

  auto reply2 = ep.handle("verb=ListRecords&resumptionToken=" + form_encode(*env.resumption_token),
                          FedDatetime::parse("2006-09-08T00:00:00Z"));
  EXPECT_EQ(first_error_code(reply2.body), "badResumptionToken");
}

TEST(Endpoint, GetRecordAndErrors) {
  FakeStore store = make_store(3);
  PmhEndpoint ep = store.endpoint(10);
  std::string id = store.records.begin()->first;
  auto reply = ep.handle("verb=GetRecord&metadataPrefix=surrogate&identifier=" + form_encode(id),
                         FedDatetime::parse("2006-09-08T00:00:00Z"));
  PmhEnvelope env = parse_pmh_response(reply.body);
  ASSERT_EQ(env.items.size(), 1u);
  EXPECT_EQ(env.items[0].metadata, store.records[id].second);

  auto missing =
      ep.handle("verb=GetRecord&metadataPrefix=surrogate&identifier=info:fake/su/nope",
                FedDatetime::parse("2006-09-08T00:00:00Z"));
  EXPECT_EQ(first_error_code(missing.body), "idDoesNotExist");

  auto bad_prefix = ep.handle("verb=ListRecords&metadataPrefix=didl",
                              FedDatetime::parse("2006-09-08T00:00:00Z"));
  EXPECT_EQ(first_error_code(bad_prefix.body), "badArgument");

  auto bad_verb = ep.handle("verb=Nope", FedDatetime::parse("2006-09-08T00:00:00Z"));
  EXPECT_EQ(first_error_code(bad_verb.body), "badVerb");

  auto identify = ep.handle("verb=Identify", FedDatetime::parse("2006-09-08T00:00:00Z"));
  xml::Element root = xml::parse_document(identify.body);
  ASSERT_NE(root.first("Identify"), nullptr);
}

// ---------------------------------------------------------------------------
// Wire record formats
// ---------------------------------------------------------------------------

TEST(WireRecords, LocationsRoundTrip) {
  std::vector<LocationEntry> entries = {
      {"info:r/su/1", std::nullopt, FedDatetime::parse("2006-09-07T00:00:00Z"), "info:r/repo/1"},
      {"info:r/su/2", "http://r.org/su/2", FedDatetime::parse("2006-09-08T00:00:00Z"),
       "info:r/repo/1"},
  };
  std::string doc = render_locations("info:r/do/9", entries, std::string("info:r/repo/1"));
  EXPECT_EQ(parse_locations(doc), entries);

  // Empty list renders as an empty element and parses back empty.
  std::string empty = render_locations("info:r/do/9", {});
  EXPECT_NE(empty.find("/>"), std::string::npos);
  EXPECT_TRUE(parse_locations(empty).empty());
}

TEST(WireRecords, RepositoriesRoundTrip) {
  std::vector<std::string> repos = {"info:fed/repo/a", "info:fed/repo/b"};
  EXPECT_EQ(parse_repositories(render_repositories("info:x/do/1", repos)), repos);
  EXPECT_TRUE(parse_repositories(render_repositories("info:x/do/1", {})).empty());
}

TEST(WireRecords, RegistryRecordRoundTrip) {
  RegistryRecordDoc rec;
  rec.subject = "info:r/repo/1";
  rec.interfaces.push_back(InterfaceBinding{classify_uri("info:r/if/h"),
                                            InterfaceType::HarvestSurrogates,
                                            classify_uri("http://r.org/sur/oaipmh")});
  rec.interfaces.push_back(InterfaceBinding{classify_uri("info:r/if/o"),
                                            InterfaceType::ObtainSurrogate,
                                            classify_uri("http://r.org/openurl")});
  rec.metadata.emplace_back("info:fed/meta/collection", "test collection");
  EXPECT_EQ(parse_registry_record(render_registry_record(rec)), rec);

  RegistryRecordDoc iface;
  iface.subject = "info:r/if/h";
  iface.interface_url = "http://r.org/sur/oaipmh";
  EXPECT_EQ(parse_registry_record(render_registry_record(iface)), iface);
}
