#pragma once

// Batch ingestion: submission packages become sealed containers, URIs are
// minted, and update-as-reingest runs under the New Surrogate / New
// Datastream policies. The on-disk node store is a directory of
// node.json + tapes/ + arcs/ (+ static/ for URL-only datastreams).

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedgate/containers.hpp"
#include "fedgate/core.hpp"
#include "fedgate/errors.hpp"
#include "fedgate/node.hpp"
#include "fedgate/surrogate.hpp"

namespace fedgate {

namespace fs = std::filesystem;

// Datastream property recording the submission-local file name; reingest
// matches replacement bitstreams against it.
inline constexpr std::string_view kLocalNameKey = "urn:fedgate:prop:localName";

struct SubmissionBitstream {
  std::string local_name;
  std::string media_type;
  std::string bytes;
  std::vector<Property> properties;
};

struct SubmissionObject {
  std::vector<ContentURI> inherited_do_uris;
  std::vector<SubmissionBitstream> bitstreams;
  std::vector<Property> properties;
};

struct SubmissionPackage {
  std::vector<SubmissionObject> objects;
};

// How ingested bitstreams are identified to the federation: minted
// Datastream-URIs stored in arcs, or plain Datastream-URLs under a stable
// base URL with no Datastream Repository at all.
enum class DatastreamIdMode { MintUris, UrlsOnly };

struct IngestLimits {
  size_t max_records_per_container = 10000;
  uint64_t max_bytes_per_container = 1ull << 30;
};

struct ManifestObject {
  std::vector<std::string> do_uris;  // inherited first, minted last
  std::string surrogate_uri;
  FedDatetime surrogate_datetime;
  std::vector<std::pair<std::string, std::string>> datastreams;  // (local name, ds id)
};

struct IngestManifest {
  std::string ns;
  FedDatetime ingest_datetime;
  std::vector<ManifestObject> objects;
  std::vector<std::string> tapes;
  std::vector<std::string> arcs;
  size_t tape_records = 0;
  size_t arc_records = 0;

  size_t surrogate_count() const { return objects.size(); }
  size_t datastream_count() const {
    size_t n = 0;
    for (const auto& o : objects) n += o.datastreams.size();
    return n;
  }

  nlohmann::json to_json() const {
    nlohmann::json objs = nlohmann::json::array();
    for (const auto& o : objects) {
      nlohmann::json ds = nlohmann::json::array();
      for (const auto& [name, uri] : o.datastreams) ds.push_back({{"name", name}, {"id", uri}});
      objs.push_back({{"doURIs", o.do_uris},
                      {"surrogateURI", o.surrogate_uri},
                      {"surrogateDatetime", o.surrogate_datetime.to_string()},
                      {"datastreams", ds}});
    }
    return {{"namespace", ns},
            {"ingestDatetime", ingest_datetime.to_string()},
            {"objects", objs},
            {"tapes", tapes},
            {"arcs", arcs},
            {"tapeRecords", tape_records},
            {"arcRecords", arc_records}};
  }
};

// ---------------------------------------------------------------------------
// Node store
// ---------------------------------------------------------------------------

class NodeStore {
 public:
  // Creates a fresh store: mints repository and interface URIs in the given
  // namespace and writes node.json. This pipeline writes write-once
  // containers, so only the New policies are accepted.
  static NodeStore init(const fs::path& dir, const std::string& ns, std::mt19937_64& rng,
                        DatastreamIdMode ds_mode = DatastreamIdMode::MintUris,
                        UpdatePolicy policy = {},
                        DatetimeTrigger trigger = DatetimeTrigger::ConstituencyAndDatastreamChanges) {
    if (policy.surrogate_policy != SurrogatePolicy::NewSurrogate ||
        policy.datastream_policy != DatastreamPolicy::NewDatastream)
      fail(Err::UnsupportedPolicy,
           "this ingest pipeline requires the NewSurrogate/NewDatastream policies");
    NodeStore store;
    store.dir_ = dir;
    store.ns_ = ns;
    store.ds_mode_ = ds_mode;
    store.cfg_.policy = policy;
    store.cfg_.datetime_trigger = trigger;
    store.cfg_.surrogate_repo =
        RepositoryIdentity{mint_uri(ns, EntityKind::Repository, rng), RepoKind::SurrogateRepository};
    for (InterfaceType t : {InterfaceType::HarvestSurrogates, InterfaceType::HarvestIdentifiers,
                            InterfaceType::ObtainSurrogate, InterfaceType::LocateSurrogates})
      store.cfg_.interface_uris[t] = mint_uri(ns, EntityKind::Interface, rng);
    if (ds_mode == DatastreamIdMode::MintUris) {
      store.cfg_.datastream_repo = RepositoryIdentity{mint_uri(ns, EntityKind::Repository, rng),
                                                      RepoKind::DatastreamRepository};
      for (InterfaceType t :
           {InterfaceType::ObtainDatastream, InterfaceType::HarvestDatastreamIdentifiers})
        store.cfg_.interface_uris[t] = mint_uri(ns, EntityKind::Interface, rng);
    } else {
      fs::create_directories(dir / "static");
    }
    fs::create_directories(dir / "tapes");
    fs::create_directories(dir / "arcs");
    fs::create_directories(dir / "tmp");
    store.save();
    return store;
  }

  static NodeStore open(const fs::path& dir) {
    std::ifstream in(dir / "node.json");
    if (!in) fail(Err::NotFound, "no node.json in " + dir.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) fail(Err::ParseError, "unparseable node.json in " + dir.string());
    NodeStore store;
    store.dir_ = dir;
    store.ns_ = j.value("namespace", "");
    store.ds_mode_ = j.value("datastreamIdMode", "MintUris") == "UrlsOnly"
                         ? DatastreamIdMode::UrlsOnly
                         : DatastreamIdMode::MintUris;
    store.cfg_.surrogate_repo = RepositoryIdentity{
        classify_uri(j.at("surrogateRepositoryURI").get<std::string>()),
        RepoKind::SurrogateRepository};
    if (j.contains("datastreamRepositoryURI"))
      store.cfg_.datastream_repo =
          RepositoryIdentity{classify_uri(j["datastreamRepositoryURI"].get<std::string>()),
                             RepoKind::DatastreamRepository};
    std::string trigger = j.value("datetimeTrigger", "ConstituencyAndDatastreamChanges");
    store.cfg_.datetime_trigger =
        trigger == "ConstituencyOnly"
            ? DatetimeTrigger::ConstituencyOnly
            : (trigger == "AnyPropertyChange" ? DatetimeTrigger::AnyPropertyChange
                                              : DatetimeTrigger::ConstituencyAndDatastreamChanges);
    nlohmann::json ifaces = j.value("interfaceURIs", nlohmann::json::object());
    for (const auto& [name, uri] : ifaces.items()) {
      auto type = interface_type_from_name(name);
      if (type) store.cfg_.interface_uris[*type] = classify_uri(uri.get<std::string>());
    }
    return store;
  }

  void save() const {
    nlohmann::json ifaces = nlohmann::json::object();
    for (const auto& [type, uri] : cfg_.interface_uris)
      ifaces[interface_type_name(type)] = uri.value;
    nlohmann::json j = {
        {"namespace", ns_},
        {"surrogateRepositoryURI", cfg_.surrogate_repo.repository_uri.value},
        {"policy", "NewSurrogate/NewDatastream"},
        {"datetimeTrigger", datetime_trigger_name(cfg_.datetime_trigger)},
        {"datastreamIdMode",
         ds_mode_ == DatastreamIdMode::UrlsOnly ? "UrlsOnly" : "MintUris"},
        {"interfaceURIs", ifaces},
    };
    if (cfg_.datastream_repo)
      j["datastreamRepositoryURI"] = cfg_.datastream_repo->repository_uri.value;
    std::ofstream out(dir_ / "node.json", std::ios::trunc);
    out << j.dump(2) << "\n";
    if (!out) fail(Err::IoError, "cannot write node.json in " + dir_.string());
  }

  const fs::path& dir() const { return dir_; }
  const std::string& ns() const { return ns_; }
  DatastreamIdMode ds_mode() const { return ds_mode_; }
  const NodeConfig& config() const { return cfg_; }

  std::shared_ptr<RepositoryNode> load_node() const {
    auto node = std::make_shared<RepositoryNode>(cfg_);
    for (const auto& p : sorted_containers(dir_ / "tapes", ".xml"))
      node->add_tape(std::make_shared<TapeReader>(p));
    if (cfg_.datastream_repo)
      for (const auto& p : sorted_containers(dir_ / "arcs", ".arc"))
        node->add_arc(std::make_shared<ArcReader>(p));
    return node;
  }

  uint64_t next_container_seq() {
    uint64_t seq = seq_hint_;
    for (const char* sub : {"tapes", "arcs"}) {
      if (!fs::exists(dir_ / sub)) continue;
      for (const auto& entry : fs::directory_iterator(dir_ / sub)) {
        std::string stem = entry.path().stem().string();
        size_t dash = stem.rfind('-');
        if (dash == std::string::npos) continue;
        uint64_t v = std::strtoull(stem.c_str() + dash + 1, nullptr, 10);
        seq = std::max(seq, v);
      }
    }
    seq_hint_ = seq + 1;
    return seq + 1;
  }

 private:
  static std::vector<fs::path> sorted_containers(const fs::path& dir, const std::string& ext) {
    std::vector<fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.path().extension() == ext) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
  }

  fs::path dir_;
  std::string ns_;
  DatastreamIdMode ds_mode_ = DatastreamIdMode::MintUris;
  NodeConfig cfg_;
  uint64_t seq_hint_ = 0;
};

// ---------------------------------------------------------------------------
// Package loading (on-disk submission layout)
// ---------------------------------------------------------------------------

// A package directory holds one subdirectory per object, each with an
// object.json ({"do_uris": [...], "properties": [[k,v]...],
// "bitstreams": [{"name","mediaType","properties"}]}) next to payload files.
inline SubmissionPackage load_package_dir(const fs::path& dir) {
  if (!fs::exists(dir)) fail(Err::NotFound, "no such package directory: " + dir.string());
  std::vector<fs::path> object_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) object_dirs.push_back(entry.path());
  std::sort(object_dirs.begin(), object_dirs.end());

  auto read_props = [](const nlohmann::json& j) {
    std::vector<Property> props;
    for (const auto& p : j)
      if (p.is_array() && p.size() == 2)
        props.push_back(Property{p[0].get<std::string>(), p[1].get<std::string>()});
    return props;
  };

  SubmissionPackage pkg;
  for (const auto& obj_dir : object_dirs) {
    std::ifstream in(obj_dir / "object.json");
    if (!in) fail(Err::ParseError, "missing object.json in " + obj_dir.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) fail(Err::ParseError, "unparseable object.json in " + obj_dir.string());
    SubmissionObject obj;
    for (const auto& uri : j.value("do_uris", nlohmann::json::array()))
      obj.inherited_do_uris.push_back(classify_uri(uri.get<std::string>()));
    obj.properties = read_props(j.value("properties", nlohmann::json::array()));
    for (const auto& bs : j.value("bitstreams", nlohmann::json::array())) {
      SubmissionBitstream b;
      b.local_name = bs.at("name").get<std::string>();
      b.media_type = bs.value("mediaType", "application/octet-stream");
      b.properties = read_props(bs.value("properties", nlohmann::json::array()));
      std::ifstream payload(obj_dir / b.local_name, std::ios::binary);
      if (!payload) fail(Err::NotFound, "missing payload file " + (obj_dir / b.local_name).string());
      b.bytes.assign(std::istreambuf_iterator<char>(payload), std::istreambuf_iterator<char>());
      obj.bitstreams.push_back(std::move(b));
    }
    pkg.objects.push_back(std::move(obj));
  }
  return pkg;
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

struct IngestOptions {
  IngestLimits limits;
  // Base URL for DatastreamIdMode::UrlsOnly stores (the node's public
  // address; payloads are served under <base>/static/...).
  std::string url_base;
  // Overrides the batch datetime per object (by index); scenario timelines
  // use this to spread surrogate datetimes without splitting batches.
  std::function<FedDatetime(size_t)> datetime_for_object;
};

namespace detail {

struct ContainerSet {
  std::vector<std::unique_ptr<TapeWriter>> tapes;
  std::vector<std::unique_ptr<ArcWriter>> arcs;
  uint64_t tape_bytes = 0;
  uint64_t arc_bytes = 0;
  uint64_t seq = 0;
  fs::path tmp_dir;

  TapeWriter& tape_for(size_t next_doc_size, const IngestLimits& limits) {
    if (tapes.empty() || tapes.back()->record_count() >= limits.max_records_per_container ||
        tape_bytes + next_doc_size > limits.max_bytes_per_container) {
      char name[32];
      std::snprintf(name, sizeof(name), "tape-%05llu.xml", static_cast<unsigned long long>(++seq));
      tapes.push_back(std::make_unique<TapeWriter>(tmp_dir / name));
      tape_bytes = 0;
    }
    tape_bytes += next_doc_size;
    return *tapes.back();
  }

  ArcWriter& arc_for(size_t next_payload_size, const IngestLimits& limits) {
    if (arcs.empty() || arcs.back()->record_count() >= limits.max_records_per_container ||
        arc_bytes + next_payload_size > limits.max_bytes_per_container) {
      char name[32];
      std::snprintf(name, sizeof(name), "arc-%05llu.arc", static_cast<unsigned long long>(++seq));
      arcs.push_back(std::make_unique<ArcWriter>(tmp_dir / name));
      arc_bytes = 0;
    }
    arc_bytes += next_payload_size;
    return *arcs.back();
  }
};

}  // namespace detail

// Turns one submission package into sealed containers on `store`, registers
// them with the live `node`, and returns the manifest. The whole batch is
// atomic: nothing is registered or moved out of tmp/ until every container
// sealed; on failure the partial files are removed.
inline IngestManifest ingest_batch(NodeStore& store, RepositoryNode& node,
                                   const SubmissionPackage& pkg, FedDatetime ingest_datetime,
                                   std::mt19937_64& rng, const IngestOptions& opts = {}) {
  if (pkg.objects.empty()) fail(Err::EmptyBatch, "submission package holds no objects");
  if (store.ds_mode() == DatastreamIdMode::UrlsOnly && opts.url_base.empty())
    fail(Err::BadArgument, "UrlsOnly stores need a url_base to mint Datastream-URLs");

  IngestManifest manifest;
  manifest.ns = store.ns();
  manifest.ingest_datetime = ingest_datetime;

  detail::ContainerSet set;
  set.tmp_dir = store.dir() / "tmp";
  set.seq = store.next_container_seq() - 1;

  std::vector<std::pair<fs::path, std::string>> static_files;  // UrlsOnly payloads

  try {
    for (size_t oi = 0; oi < pkg.objects.size(); ++oi) {
      const SubmissionObject& obj = pkg.objects[oi];
      for (size_t i = 0; i < obj.bitstreams.size(); ++i)
        for (size_t j = i + 1; j < obj.bitstreams.size(); ++j)
          if (obj.bitstreams[i].local_name == obj.bitstreams[j].local_name)
            fail(Err::BadArgument,
                 "duplicate local-name in object: " + obj.bitstreams[i].local_name);
      FedDatetime object_dt =
          opts.datetime_for_object ? opts.datetime_for_object(oi) : ingest_datetime;

      ManifestObject mo;
      Surrogate s;
      // Inherited DO-URIs first, the minted one appended. No duplicate-DO-URI
      // check across the federation: a re-submission is just another ingest.
      for (const auto& u : obj.inherited_do_uris) {
        s.object.do_uris.push_back(u);
        mo.do_uris.push_back(u.value);
      }
      ContentURI minted_do = mint_uri(store.ns(), EntityKind::DO, rng);
      s.object.do_uris.push_back(minted_do);
      mo.do_uris.push_back(minted_do.value);

      s.surrogate_uri = mint_uri(store.ns(), EntityKind::Surrogate, rng);
      s.surrogate_datetime = object_dt;
      s.properties = obj.properties;

      for (const auto& bs : obj.bitstreams) {
        DatastreamRef ds;
        ds.media_type = bs.media_type;
        ds.ds_datetime = object_dt;
        ds.properties.push_back(Property{std::string(kLocalNameKey), bs.local_name});
        for (const auto& p : bs.properties) ds.properties.push_back(p);
        if (store.ds_mode() == DatastreamIdMode::MintUris) {
          ds.ds_uri = mint_uri(store.ns(), EntityKind::Datastream, rng);
          set.arc_for(bs.bytes.size(), opts.limits)
              .append(*ds.ds_uri, bs.media_type, object_dt, bs.bytes);
          mo.datastreams.emplace_back(bs.local_name, ds.ds_uri->value);
        } else {
          std::string rel = "static/" + std::to_string(oi) + "/" + bs.local_name;
          ds.ds_url = classify_uri(opts.url_base + "/" + rel);
          static_files.emplace_back(store.dir() / rel, bs.bytes);
          mo.datastreams.emplace_back(bs.local_name, ds.ds_url->value);
        }
        s.datastreams.push_back(std::move(ds));
      }

      SurrogateDocument doc = serialize_surrogate(s);
      set.tape_for(doc.bytes.size(), opts.limits).append(doc, object_dt);
      mo.surrogate_uri = s.surrogate_uri.value;
      mo.surrogate_datetime = object_dt;
      manifest.objects.push_back(std::move(mo));
    }

    for (auto& t : set.tapes) {
      manifest.tape_records += t->record_count();
      t->seal();
    }
    for (auto& a : set.arcs) {
      manifest.arc_records += a->record_count();
      a->seal();
    }
    for (const auto& [path, bytes] : static_files) {
      fs::create_directories(path.parent_path());
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) fail(Err::IoError, "cannot write " + path.string());
    }
  } catch (...) {
    // Abort the batch: drop the partially written containers.
    std::vector<fs::path> doomed;
    for (auto& t : set.tapes) doomed.push_back(t->path());
    for (auto& a : set.arcs) doomed.push_back(a->path());
    set.tapes.clear();
    set.arcs.clear();
    for (const auto& p : doomed) {
      std::error_code ec;
      fs::remove(p, ec);
      fs::remove(fs::path(p.string() + ".idx"), ec);
    }
    throw;
  }

  // Move sealed containers into place, then register them with the node.
  std::vector<fs::path> tape_paths, arc_paths;
  for (auto& t : set.tapes) {
    fs::path target = store.dir() / "tapes" / t->path().filename();
    fs::rename(t->path(), target);
    fs::rename(fs::path(t->path().string() + ".idx"), fs::path(target.string() + ".idx"));
    tape_paths.push_back(target);
    manifest.tapes.push_back(target.string());
  }
  for (auto& a : set.arcs) {
    fs::path target = store.dir() / "arcs" / a->path().filename();
    fs::rename(a->path(), target);
    fs::rename(fs::path(a->path().string() + ".idx"), fs::path(target.string() + ".idx"));
    arc_paths.push_back(target);
    manifest.arcs.push_back(target.string());
  }
  // Datastreams first so new surrogates never reference unresolvable ds-uris.
  for (const auto& p : arc_paths) node.add_arc(std::make_shared<ArcReader>(p));
  for (const auto& p : tape_paths) node.add_tape(std::make_shared<TapeReader>(p));
  return manifest;
}

// Update-as-reingest: a new Digital Object configuration sharing every
// characteristic of the most recent one except the replaced bitstream, which
// gets a fresh Datastream-URI. The prior Surrogate stays available.
inline IngestManifest reingest_updated(NodeStore& store, RepositoryNode& node,
                                       const ContentURI& do_uri,
                                       const SubmissionBitstream& replacement,
                                       FedDatetime ingest_datetime, std::mt19937_64& rng,
                                       const IngestOptions& opts = {}) {
  if (store.ds_mode() != DatastreamIdMode::MintUris)
    fail(Err::UnsupportedPolicy, "reingest requires a store with minted Datastream-URIs");
  Surrogate current = parse_surrogate(node.obtain_surrogate(do_uri));  // IdDoesNotExist if unknown

  ssize_t target = -1;
  for (size_t i = 0; i < current.datastreams.size(); ++i) {
    for (const auto& p : current.datastreams[i].properties) {
      if (p.key_uri == kLocalNameKey && p.value == replacement.local_name) target = static_cast<ssize_t>(i);
    }
  }
  if (target < 0)
    fail(Err::NoSuchConstituent,
         "no constituent named \"" + replacement.local_name + "\" in the current Surrogate");

  Surrogate next = current;
  next.surrogate_uri = mint_uri(store.ns(), EntityKind::Surrogate, rng);
  next.surrogate_datetime = ingest_datetime;
  DatastreamRef& ds = next.datastreams[static_cast<size_t>(target)];
  ds.ds_uri = mint_uri(store.ns(), EntityKind::Datastream, rng);  // migrated bitstream, new URI
  ds.ds_url.reset();
  ds.media_type = replacement.media_type;
  ds.ds_datetime = ingest_datetime;

  IngestManifest manifest;
  manifest.ns = store.ns();
  manifest.ingest_datetime = ingest_datetime;

  uint64_t seq = store.next_container_seq();
  char tape_name[32], arc_name[32];
  std::snprintf(tape_name, sizeof(tape_name), "tape-%05llu.xml",
                static_cast<unsigned long long>(seq));
  std::snprintf(arc_name, sizeof(arc_name), "arc-%05llu.arc",
                static_cast<unsigned long long>(seq));
  fs::path tape_tmp = store.dir() / "tmp" / tape_name;
  fs::path arc_tmp = store.dir() / "tmp" / arc_name;

  try {
    ArcWriter arc(arc_tmp);
    arc.append(*ds.ds_uri, replacement.media_type, ingest_datetime, replacement.bytes);
    arc.seal();
    TapeWriter tape(tape_tmp);
    SurrogateDocument doc = serialize_surrogate(next);
    tape.append(doc, ingest_datetime);
    tape.seal();
    manifest.tape_records = 1;
    manifest.arc_records = 1;
  } catch (...) {
    std::error_code ec;
    for (const auto& p : {tape_tmp, arc_tmp}) {
      fs::remove(p, ec);
      fs::remove(fs::path(p.string() + ".idx"), ec);
    }
    throw;
  }

  fs::path tape_target = store.dir() / "tapes" / tape_name;
  fs::path arc_target = store.dir() / "arcs" / arc_name;
  fs::rename(tape_tmp, tape_target);
  fs::rename(fs::path(tape_tmp.string() + ".idx"), fs::path(tape_target.string() + ".idx"));
  fs::rename(arc_tmp, arc_target);
  fs::rename(fs::path(arc_tmp.string() + ".idx"), fs::path(arc_target.string() + ".idx"));
  node.add_arc(std::make_shared<ArcReader>(arc_target));
  node.add_tape(std::make_shared<TapeReader>(tape_target));

  ManifestObject mo;
  for (const auto& u : next.object.do_uris) mo.do_uris.push_back(u.value);
  mo.surrogate_uri = next.surrogate_uri.value;
  mo.surrogate_datetime = ingest_datetime;
  mo.datastreams.emplace_back(replacement.local_name, ds.ds_uri->value);
  manifest.objects.push_back(std::move(mo));
  manifest.tapes.push_back(tape_target.string());
  manifest.arcs.push_back(arc_target.string());
  (void)opts;
  return manifest;
}

}  // namespace fedgate
