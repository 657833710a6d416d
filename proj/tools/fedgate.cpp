// fedgate: operator CLI for running repository federations.
//
// Serving:  fedgate repo|locator|registry|federator serve <config.json>
// Content:  fedgate ingest <pkg-dir> --target <repo-dir> [...]
//           fedgate harvest <endpoint> [--from --until ...]
//           fedgate resolve <uri> --svc <service> --endpoint <base-url>
// Storage:  fedgate fsck <container>, fedgate tape ls <tape>
// Testing:  fedgate scenario run <scenario.json>, fedgate bench locator
//
// Exit codes: 0 success, 1 protocol error, 2 configuration error,
// 3 upstream failure.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedgate/client.hpp"
#include "fedgate/containers.hpp"
#include "fedgate/federator_service.hpp"
#include "fedgate/harness.hpp"
#include "fedgate/ingest.hpp"
#include "fedgate/node_service.hpp"
#include "fedgate/tier2_service.hpp"

using namespace fedgate;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop = true; }

void wait_for_signal() {
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

int exit_code_for(const FedError& e) {
  switch (e.code()) {
    case Err::Unreachable:
    case Err::UpstreamUnavailable:
    case Err::HarvestFailure:
      return 3;
    case Err::BadArgument:
    case Err::InvalidNamespace:
    case Err::InvalidURI:
    case Err::NotFound:
    case Err::UnsupportedPolicy:
    case Err::ScenarioError:
    case Err::EmptyBatch:
      return 2;
    default:
      return 1;
  }
}

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Err::NotFound, "cannot open config " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(Err::ParseError, "unparseable JSON in " + path);
  return j;
}

// --- serve subcommands ------------------------------------------------------

int serve_repo(const std::string& config_path) {
  nlohmann::json cfg = load_config(config_path);
  NodeStore store = NodeStore::open(cfg.at("store").get<std::string>());
  auto node = store.load_node();
  std::optional<std::string> static_dir;
  if (store.ds_mode() == DatastreamIdMode::UrlsOnly)
    static_dir = (store.dir() / "static").string();
  NodeService service(node, cfg.value("pageSize", 500), static_dir);
  service.start(cfg.value("port", 0));
  std::cout << "surrogate repository " << store.config().surrogate_repo.repository_uri.value
            << "\nserving on " << service.base_url() << " (" << node->surrogate_count()
            << " surrogates, " << node->datastream_count() << " datastreams)\n";
  if (cfg.contains("registry")) {
    register_components_http(cfg["registry"].get<std::string>(), service.component_records());
    std::cout << "registered with " << cfg["registry"].get<std::string>() << "\n";
  }
  wait_for_signal();
  service.stop();
  return 0;
}

int serve_registry(const std::string& config_path) {
  nlohmann::json cfg = config_path.empty() ? nlohmann::json::object() : load_config(config_path);
  auto registry = std::make_shared<ServiceRegistry>();
  RegistryService service(registry);
  service.start(cfg.value("port", 0));
  std::cout << "service registry on " << service.base_url() << "\n";
  wait_for_signal();
  service.stop();
  return 0;
}

int serve_locator(const std::string& config_path) {
  nlohmann::json cfg = load_config(config_path);
  auto locator = cfg.contains("stateDir")
                     ? std::make_shared<IdentifierLocator>(cfg["stateDir"].get<std::string>())
                     : std::make_shared<IdentifierLocator>();
  LocatorService::Config lcfg;
  lcfg.registry_url = cfg.at("registry").get<std::string>();
  lcfg.timeout_ms = cfg.value("timeoutMs", 5000);
  for (const auto& e : cfg.value("syncExclude", nlohmann::json::array()))
    lcfg.sync_exclude.push_back(e.get<std::string>());
  LocatorService service(locator, lcfg);
  service.start(cfg.value("port", 0));
  std::cout << "identifier locator on " << service.base_url() << " ("
            << locator->entry_count() << " entries)\n";
  wait_for_signal();
  service.stop();
  return 0;
}

int serve_federator(const std::string& config_path) {
  nlohmann::json cfg = load_config(config_path);
  FederatorConfig fcfg;
  fcfg.locator_url = cfg.at("locator").get<std::string>();
  fcfg.registry_url = cfg.at("registry").get<std::string>();
  fcfg.harvest_mode =
      cfg.value("harvestMode", "Dynamic") == "Cache" ? HarvestMode::Cache : HarvestMode::Dynamic;
  fcfg.locate_mode =
      cfg.value("locateMode", "Merge") == "Referral" ? LocateMode::Referral : LocateMode::Merge;
  fcfg.failure_policy = cfg.value("failurePolicy", "FailFast") == "BestEffort"
                            ? FailurePolicy::BestEffort
                            : FailurePolicy::FailFast;
  fcfg.fanout_timeout_ms = cfg.value("fanoutTimeoutMs", 5000);
  if (cfg.contains("cachePath")) fcfg.cache_path = cfg["cachePath"].get<std::string>();
  for (const auto& e : cfg.value("exclude", nlohmann::json::array()))
    fcfg.exclude.push_back(e.get<std::string>());
  std::mt19937_64 rng(std::random_device{}());
  fcfg.identity = RepositoryIdentity{
      cfg.contains("repositoryURI") ? classify_uri(cfg["repositoryURI"].get<std::string>())
                                    : mint_uri("info:ourfederation", EntityKind::Repository, rng),
      RepoKind::SurrogateRepository};
  auto federator = std::make_shared<Federator>(fcfg);
  FederatorService service(federator, cfg.value("pageSize", 500));
  service.start(cfg.value("port", 0));
  std::cout << "federator (" << (fcfg.harvest_mode == HarvestMode::Cache ? "Cache" : "Dynamic")
            << ") on " << service.base_url() << "\n";
  wait_for_signal();
  service.stop();
  return 0;
}

// --- content subcommands ------------------------------------------------------

struct IngestArgs {
  std::string pkg_dir;
  std::string target;
  std::string ns;
  std::string datetime;
  std::string registry;
  std::string base_url;
  std::string manifest_out;
  std::string datastreams = "uris";
  uint64_t seed = 0;
  bool seeded = false;
};

int run_ingest(const IngestArgs& args) {
  std::mt19937_64 rng(args.seeded ? args.seed : std::random_device{}());
  NodeStore store = [&] {
    if (fs::exists(fs::path(args.target) / "node.json") && args.ns.empty())
      return NodeStore::open(args.target);
    if (args.ns.empty())
      fail(Err::BadArgument, "--namespace is required when creating a new store");
    return NodeStore::init(args.target, args.ns, rng,
                           args.datastreams == "urls" ? DatastreamIdMode::UrlsOnly
                                                      : DatastreamIdMode::MintUris);
  }();
  auto node = store.load_node();
  SubmissionPackage pkg = load_package_dir(args.pkg_dir);
  FedDatetime dt =
      args.datetime.empty() ? FedDatetime::now() : FedDatetime::parse(args.datetime);
  IngestOptions opts;
  opts.url_base = args.base_url;
  IngestManifest manifest = ingest_batch(store, *node, pkg, dt, rng, opts);

  if (!args.registry.empty()) {
    if (args.base_url.empty())
      fail(Err::BadArgument, "--base-url is required to register live interface URLs");
    // Interface URLs must reflect the serving process, so compose them from
    // the supplied base URL.
    std::vector<wire::RegistryRecordDoc> records;
    const NodeConfig& ncfg = store.config();
    wire::RegistryRecordDoc sur;
    sur.subject = ncfg.surrogate_repo.repository_uri.value;
    for (auto [type, path] : {std::pair{InterfaceType::HarvestSurrogates, "/sur/oaipmh"},
                              std::pair{InterfaceType::HarvestIdentifiers, "/sur/oaipmh"},
                              std::pair{InterfaceType::ObtainSurrogate, "/openurl"},
                              std::pair{InterfaceType::LocateSurrogates, "/openurl"}}) {
      auto it = ncfg.interface_uris.find(type);
      if (it != ncfg.interface_uris.end())
        sur.interfaces.push_back(
            InterfaceBinding{it->second, type, classify_uri(args.base_url + path)});
    }
    records.push_back(sur);
    if (ncfg.datastream_repo) {
      wire::RegistryRecordDoc ds;
      ds.subject = ncfg.datastream_repo->repository_uri.value;
      for (auto [type, path] :
           {std::pair{InterfaceType::ObtainDatastream, "/openurl"},
            std::pair{InterfaceType::HarvestDatastreamIdentifiers, "/ds/oaipmh"}}) {
        auto it = ncfg.interface_uris.find(type);
        if (it != ncfg.interface_uris.end())
          ds.interfaces.push_back(
              InterfaceBinding{it->second, type, classify_uri(args.base_url + path)});
      }
      records.push_back(ds);
    }
    register_components_http(args.registry, records);
  }

  std::string out = manifest.to_json().dump(2) + "\n";
  if (args.manifest_out.empty()) {
    std::cout << out;
  } else {
    std::ofstream f(args.manifest_out, std::ios::trunc);
    f << out;
    std::cerr << "manifest written to " << args.manifest_out << "\n";
  }
  return 0;
}

int run_harvest(const std::string& endpoint, const std::string& verb, const std::string& prefix,
                const std::string& from, const std::string& until, const std::string& out_dir,
                int timeout_ms) {
  HarvestOptions opts;
  opts.verb = verb;
  opts.metadata_prefix = prefix;
  if (!from.empty()) opts.from = from;
  if (!until.empty()) opts.until = until;
  opts.timeout_ms = timeout_ms;
  size_t n = 0;
  harvest_stream(endpoint, opts, [&](const wire::PmhItem& item) {
    std::cout << item.identifier << "\t" << item.datestamp.to_string() << "\n";
    if (!out_dir.empty() && !item.metadata.empty()) {
      fs::create_directories(out_dir);
      std::ofstream f(fs::path(out_dir) / (sha256_hex(item.identifier).substr(0, 16) + ".xml"),
                      std::ios::binary | std::ios::trunc);
      f << item.metadata;
    }
    ++n;
  });
  std::cerr << n << " records\n";
  return 0;
}

int run_resolve(const std::string& uri, const std::string& svc, const std::string& endpoint,
                int timeout_ms) {
  wire::KevRequest kev;
  kev.rft_id = classify_uri(uri);
  std::string svc_uri = svc;
  // Accept short service names as a convenience.
  if (svc == "obtain-surrogate") svc_uri = std::string(wire::kSvcObtainSurrogate);
  else if (svc == "locate-surrogates") svc_uri = std::string(wire::kSvcLocateSurrogates);
  else if (svc == "obtain-datastream") svc_uri = std::string(wire::kSvcObtainDatastream);
  else if (svc == "locate-repositories") svc_uri = std::string(wire::kSvcLocateRepositories);
  else if (svc == "obtain-record") svc_uri = std::string(wire::kSvcObtainRecord);
  kev.svc_id = classify_uri(svc_uri);
  HttpResponse res = http_get(endpoint + "/openurl?" + wire::compose_kev(kev), timeout_ms);
  std::cout.write(res.body.data(), static_cast<std::streamsize>(res.body.size()));
  if (res.status == 200) return 0;
  std::cerr << "\nHTTP " << res.status << "\n";
  return res.status >= 500 ? 3 : 1;
}

int run_fsck(const std::string& container) {
  FsckReport report = container_fsck(container);
  std::cout << report.container_kind << ": " << report.records_checked << " records checked\n";
  for (const auto& issue : report.issues) std::cout << "ISSUE: " << issue << "\n";
  if (report.healthy()) {
    std::cout << "healthy\n";
    return 0;
  }
  return 1;
}

int run_tape_ls(const std::string& tape) {
  TapeReader reader(tape);
  for (const auto& r : reader.records())
    std::cout << r.id << "\t" << r.datetime.to_string() << "\t" << r.offset << "\t" << r.length
              << "\n";
  return 0;
}

int run_scenario_cmd(const std::string& scenario_path, const std::string& root, bool serve) {
  nlohmann::json j = load_config(scenario_path);
  harness::FederationScenario scenario = harness::FederationScenario::from_json(j);
  fs::path root_dir = root.empty() ? fs::temp_directory_path() /
                                         ("fedgate-scenario-" + std::to_string(::getpid()))
                                   : fs::path(root);
  auto handles = harness::run_scenario(scenario, root_dir);

  nlohmann::json out;
  out["root"] = root_dir.string();
  out["registry"] = handles->registry_service->base_url();
  out["locator"] = handles->locator_service->base_url();
  out["federator"] = handles->federator_url();
  nlohmann::json repos = nlohmann::json::array();
  for (const auto& r : handles->repos)
    repos.push_back({{"uri", r->surrogate_repo_uri()},
                     {"url", r->service->base_url()},
                     {"surrogates", r->manifest.surrogate_count()},
                     {"datastreams", r->manifest.datastream_count()}});
  out["repos"] = repos;
  out["locatorEntries"] = handles->locator->entry_count();
  auto issues = harness::federation_integrity_issues(*handles);
  out["integrityIssues"] = issues;
  std::cout << out.dump(2) << "\n";
  if (serve) {
    std::cerr << "serving; Ctrl-C to stop\n";
    wait_for_signal();
  }
  handles->shutdown();
  return issues.empty() ? 0 : 1;
}

int run_bench(size_t uris, size_t queries, uint64_t seed) {
  harness::BenchReport report = harness::bench_locator(uris, queries, seed);
  std::cout << report.to_json().dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedgate: 3-tier repository federation toolkit"};
  app.require_subcommand(1);

  // serve family
  std::string repo_cfg, locator_cfg, registry_cfg, federator_cfg;
  auto* repo = app.add_subcommand("repo", "Tier-1 repository node");
  auto* repo_serve = repo->add_subcommand("serve", "serve a node store over HTTP");
  repo_serve->add_option("config", repo_cfg, "JSON config")->required();

  auto* locator = app.add_subcommand("locator", "Tier-2 identifier locator");
  auto* locator_serve = locator->add_subcommand("serve", "serve the locator");
  locator_serve->add_option("config", locator_cfg, "JSON config")->required();

  auto* registry = app.add_subcommand("registry", "Tier-2 service registry");
  auto* registry_serve = registry->add_subcommand("serve", "serve the registry");
  registry_serve->add_option("config", registry_cfg, "JSON config");

  auto* federator = app.add_subcommand("federator", "Tier-3 federating gateway");
  auto* federator_serve = federator->add_subcommand("serve", "serve the federator");
  federator_serve->add_option("config", federator_cfg, "JSON config")->required();

  // ingest
  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "ingest a submission package");
  ingest->add_option("pkg", ingest_args.pkg_dir, "package directory")->required();
  ingest->add_option("--target", ingest_args.target, "node store directory")->required();
  ingest->add_option("--namespace", ingest_args.ns, "info:<token> namespace for a new store");
  ingest->add_option("--datetime", ingest_args.datetime,
                     "ingest datetime YYYY-MM-DDThh:mm:ssZ (default: now)");
  ingest->add_option("--registry", ingest_args.registry, "registry base URL to register with");
  ingest->add_option("--base-url", ingest_args.base_url, "public base URL of the serving node");
  ingest->add_option("--manifest", ingest_args.manifest_out, "write manifest JSON here");
  ingest->add_option("--datastreams", ingest_args.datastreams,
                     "identify datastreams by 'uris' (default) or 'urls'");
  auto* seed_opt = ingest->add_option("--seed", ingest_args.seed, "deterministic minting seed");

  // harvest
  std::string h_endpoint, h_verb = "ListRecords", h_prefix = "surrogate", h_from, h_until, h_out;
  int h_timeout = 10000;
  auto* harvest = app.add_subcommand("harvest", "incrementally harvest an OAI endpoint");
  harvest->add_option("endpoint", h_endpoint, "e.g. http://host:port/sur/oaipmh")->required();
  harvest->add_option("--verb", h_verb, "ListRecords or ListIdentifiers");
  harvest->add_option("--prefix", h_prefix, "metadataPrefix");
  harvest->add_option("--from", h_from, "inclusive lower bound");
  harvest->add_option("--until", h_until, "inclusive upper bound");
  harvest->add_option("--out", h_out, "dump record metadata under this directory");
  harvest->add_option("--timeout-ms", h_timeout, "per-request timeout");

  // resolve
  std::string r_uri, r_svc, r_endpoint;
  int r_timeout = 10000;
  auto* resolve = app.add_subcommand("resolve", "issue one OpenURL request");
  resolve->add_option("uri", r_uri, "referent identifier (rft_id)")->required();
  resolve->add_option("--svc", r_svc, "service URI or short name (obtain-surrogate, ...)")
      ->required();
  resolve->add_option("--endpoint", r_endpoint, "component base URL")->required();
  resolve->add_option("--timeout-ms", r_timeout, "request timeout");

  // fsck / tape ls
  std::string fsck_path;
  auto* fsck = app.add_subcommand("fsck", "check a sealed container against its index");
  fsck->add_option("container", fsck_path, "tape or arc path")->required();

  std::string tape_path;
  auto* tape = app.add_subcommand("tape", "tape inspection");
  auto* tape_ls = tape->add_subcommand("ls", "list records");
  tape_ls->add_option("tape", tape_path, "tape path")->required();

  // scenario
  std::string sc_path, sc_root;
  bool sc_serve = false;
  auto* scenario = app.add_subcommand("scenario", "federation scenarios");
  auto* scenario_run = scenario->add_subcommand("run", "run a scenario");
  scenario_run->add_option("scenario", sc_path, "scenario JSON")->required();
  scenario_run->add_option("--root", sc_root, "working directory (default: temp)");
  scenario_run->add_flag("--serve", sc_serve, "keep serving until Ctrl-C");

  // bench
  size_t b_uris = 1000000, b_queries = 10000;
  uint64_t b_seed = 1;
  auto* bench = app.add_subcommand("bench", "benchmarks");
  auto* bench_locator_cmd = bench->add_subcommand("locator", "locate-repositories latency");
  bench_locator_cmd->add_option("--uris", b_uris, "synthetic URI count");
  bench_locator_cmd->add_option("--queries", b_queries, "query count");
  bench_locator_cmd->add_option("--seed", b_seed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (repo_serve->parsed()) return serve_repo(repo_cfg);
    if (locator_serve->parsed()) return serve_locator(locator_cfg);
    if (registry_serve->parsed()) return serve_registry(registry_cfg);
    if (federator_serve->parsed()) return serve_federator(federator_cfg);
    if (ingest->parsed()) {
      ingest_args.seeded = seed_opt->count() > 0;
      return run_ingest(ingest_args);
    }
    if (harvest->parsed())
      return run_harvest(h_endpoint, h_verb, h_prefix, h_from, h_until, h_out, h_timeout);
    if (resolve->parsed()) return run_resolve(r_uri, r_svc, r_endpoint, r_timeout);
    if (fsck->parsed()) return run_fsck(fsck_path);
    if (tape_ls->parsed()) return run_tape_ls(tape_path);
    if (scenario_run->parsed()) return run_scenario_cmd(sc_path, sc_root, sc_serve);
    if (bench_locator_cmd->parsed()) return run_bench(b_uris, b_queries, b_seed);
    std::cerr << app.help();
    return 2;
  } catch (const FedError& e) {
    std::cerr << "fedgate: " << e.what() << "\n";
    for (const auto& d : e.details()) std::cerr << "  " << d << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "fedgate: " << e.what() << "\n";
    return 2;
  }
}
