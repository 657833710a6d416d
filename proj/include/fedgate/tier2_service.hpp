#pragma once

// HTTP surfaces of the two shared infrastructure components.
//
// Registry:  GET /openurl (ObtainRecord), PUT /admin/components/<escaped-uri>,
//            GET /admin/components (enumeration for sync jobs).
// Locator:   GET /openurl (LocateRepositories), POST /admin/sync,
//            GET /admin/cursors.

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedgate/locator.hpp"
#include "fedgate/locator_sync.hpp"
#include "fedgate/node_service.hpp"  // serve_openurl
#include "fedgate/registry.hpp"
#include "fedgate/service_host.hpp"
#include "fedgate/wire.hpp"
#include "fedgate/wire_records.hpp"

namespace fedgate {

class RegistryService {
 public:
  explicit RegistryService(std::shared_ptr<ServiceRegistry> registry)
      : registry_(std::move(registry)) {}

  int start(int port = 0) {
    int bound = host_.start(port);
    mount_routes();
    return bound;
  }
  void stop() { host_.stop(); }
  std::string base_url() const { return host_.base_url(); }
  ServiceHost& host() { return host_; }
  const std::shared_ptr<ServiceRegistry>& registry() const { return registry_; }

 private:
  void mount_routes() {
    host_.server().Get("/openurl", [this](const httplib::Request& req, httplib::Response& res) {
      serve_openurl(req, res, [this](const wire::KevRequest& kev, httplib::Response& out) {
        if (kev.svc_id.value != wire::kSvcObtainRecord)
          fail(Err::BadArgument, "unknown svc_id: " + kev.svc_id.value);
        out.set_content(wire::render_registry_record(registry_->obtain_record(kev.rft_id)),
                        "application/xml");
      });
    });

    host_.server().Put(R"(/admin/components/(.+))",
                       [this](const httplib::Request& req, httplib::Response& res) {
                         handle_put(req, res);
                       });

    host_.server().Get("/admin/components", [this](const httplib::Request&,
                                                   httplib::Response& res) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& uri : registry_->component_uris()) {
        auto c = registry_->find(uri);
        if (!c) continue;
        nlohmann::json ifaces = nlohmann::json::array();
        for (const auto& b : c->bindings)
          ifaces.push_back({{"uri", b.interface_uri.value},
                            {"type", interface_type_name(b.interface_type)},
                            {"url", b.interface_url.value}});
        nlohmann::json meta = nlohmann::json::array();
        for (const auto& [k, v] : c->metadata) meta.push_back({k, v});
        out.push_back({{"uri", uri}, {"interfaces", ifaces}, {"metadata", meta}});
      }
      res.set_content(out.dump(2), "application/json");
    });
  }

  void handle_put(const httplib::Request& req, httplib::Response& res) {
    try {
      wire::RegistryRecordDoc rec = wire::parse_registry_record(req.body);
      std::string path_uri = req.matches[1].str();
      if (path_uri != rec.subject && wire::form_decode(path_uri) != rec.subject) {
        res.status = 400;
        res.set_content(wire::render_error_body(
                            Err::BadArgument, "path component does not match record subject"),
                        "application/xml");
        return;
      }
      registry_->register_component(classify_uri(rec.subject), rec.interfaces, rec.metadata);
      res.status = 200;
      res.set_content("registered\n", "text/plain");
    } catch (const FedError& e) {
      res.status = e.code() == Err::ConflictError ? 409 : 400;
      res.set_content(wire::render_error_body(e.code(), e.what()), "application/xml");
    }
  }

  std::shared_ptr<ServiceRegistry> registry_;
  ServiceHost host_;
};

// Pulls the component list from a registry over HTTP and keeps only the
// repositories (components exposing harvest interfaces).
inline std::vector<RepoSyncSource> repos_from_registry_http(const std::string& registry_base_url,
                                                            int timeout_ms = 5000) {
  HttpResponse res = http_get(registry_base_url + "/admin/components", timeout_ms);
  if (res.status != 200)
    fail(Err::ProtocolError, "registry enumeration failed: HTTP " + std::to_string(res.status));
  std::vector<RepoSyncSource> out;
  nlohmann::json list = nlohmann::json::parse(res.body, nullptr, false);
  if (!list.is_array()) fail(Err::ProtocolError, "registry enumeration is not a JSON array");
  for (const auto& item : list) {
    wire::RegistryRecordDoc rec;
    rec.subject = item.value("uri", "");
    for (const auto& iface : item.value("interfaces", nlohmann::json::array())) {
      auto type = interface_type_from_name(iface.value("type", ""));
      if (!type) continue;
      rec.interfaces.push_back(InterfaceBinding{classify_uri(iface.value("uri", "")), *type,
                                                classify_uri(iface.value("url", ""))});
    }
    if (auto src = repo_source_from_record(rec)) out.push_back(std::move(*src));
  }
  return out;
}

// Fetches one registry record over the standard OpenURL interface.
inline wire::RegistryRecordDoc obtain_registry_record_http(const std::string& registry_base_url,
                                                           const std::string& identifier,
                                                           int timeout_ms = 5000) {
  wire::KevRequest kev;
  kev.rft_id = classify_uri(identifier);
  kev.svc_id = classify_uri(std::string(wire::kSvcObtainRecord));
  HttpResponse res = http_get(registry_base_url + "/openurl?" + wire::compose_kev(kev), timeout_ms);
  if (res.status == 404) fail(Err::IdDoesNotExist, "registry: unknown " + identifier);
  if (res.status != 200)
    fail(Err::ProtocolError, "registry lookup failed: HTTP " + std::to_string(res.status));
  return wire::parse_registry_record(res.body);
}

// Registers component records with a registry over HTTP.
inline void register_components_http(const std::string& registry_base_url,
                                     const std::vector<wire::RegistryRecordDoc>& records,
                                     int timeout_ms = 5000) {
  for (const auto& rec : records) {
    UrlParts parts = split_url(registry_base_url);
    httplib::Client cli(parts.host_port);
    cli.set_tcp_nodelay(true);
    cli.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    auto res = cli.Put("/admin/components/" + wire::form_encode(rec.subject),
                       wire::render_registry_record(rec), "application/xml");
    if (!res) fail(Err::Unreachable, "registry PUT failed", {registry_base_url});
    if (res->status == 409) fail(Err::ConflictError, "registry rejected " + rec.subject + ": " + res->body);
    if (res->status != 200)
      fail(Err::ProtocolError, "registry PUT returned HTTP " + std::to_string(res->status));
  }
}

class LocatorService {
 public:
  struct Config {
    std::string registry_url;           // for POST /admin/sync
    std::vector<std::string> sync_exclude;
    int timeout_ms = 5000;
  };

  LocatorService(std::shared_ptr<IdentifierLocator> locator, Config cfg)
      : locator_(std::move(locator)), cfg_(std::move(cfg)) {}

  int start(int port = 0) {
    int bound = host_.start(port);
    mount_routes();
    return bound;
  }
  void stop() { host_.stop(); }
  std::string base_url() const { return host_.base_url(); }
  ServiceHost& host() { return host_; }
  const std::shared_ptr<IdentifierLocator>& locator() const { return locator_; }

  SyncReport run_sync(const std::optional<FedDatetime>& now) {
    SyncOptions opts;
    if (now) opts.now = *now;
    opts.exclude = cfg_.sync_exclude;
    opts.timeout_ms = cfg_.timeout_ms;
    auto sources = repos_from_registry_http(cfg_.registry_url, cfg_.timeout_ms);
    return locator_sync(*locator_, sources, opts);
  }

 private:
  void mount_routes() {
    host_.server().Get("/openurl", [this](const httplib::Request& req, httplib::Response& res) {
      serve_openurl(req, res, [this](const wire::KevRequest& kev, httplib::Response& out) {
        if (kev.svc_id.value != wire::kSvcLocateRepositories)
          fail(Err::BadArgument, "unknown svc_id: " + kev.svc_id.value);
        out.set_content(
            wire::render_repositories(kev.rft_id.value, locator_->locate(kev.rft_id.value)),
            "application/xml");
      });
    });

    host_.server().Post("/admin/sync", [this](const httplib::Request& req, httplib::Response& res) {
      std::optional<FedDatetime> now;
      if (!req.body.empty()) {
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_object() && body.contains("now")) {
          now = FedDatetime::try_parse(body["now"].get<std::string>());
          if (!now) {
            res.status = 400;
            res.set_content(wire::render_error_body(Err::BadArgument, "bad now datetime"),
                            "application/xml");
            return;
          }
        }
      }
      try {
        SyncReport report = run_sync(now);
        nlohmann::json out = nlohmann::json::array();
        for (const auto& r : report.repos) {
          nlohmann::json entry = {{"repository", r.repository_uri},
                                  {"records", r.records},
                                  {"uris", r.uris}};
          if (r.new_cursor) entry["cursor"] = r.new_cursor->to_string();
          if (r.error) entry["error"] = *r.error;
          out.push_back(entry);
        }
        res.set_content(out.dump(2), "application/json");
      } catch (const FedError& e) {
        res.status = 502;
        res.set_content(wire::render_error_body(e.code(), e.what()), "application/xml");
      }
    });

    host_.server().Get("/admin/cursors", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& [key, dt] : locator_->cursors()) {
        size_t tab = key.find('\t');
        out.push_back({{"repository", key.substr(0, tab)},
                       {"interface", key.substr(tab + 1)},
                       {"cursor", dt.to_string()}});
      }
      res.set_content(out.dump(2), "application/json");
    });
  }

  std::shared_ptr<IdentifierLocator> locator_;
  Config cfg_;
  ServiceHost host_;
};

// Locate Repositories over the wire, as the federator calls it.
inline std::vector<std::string> locate_repositories_http(const std::string& locator_base_url,
                                                         const std::string& identifier,
                                                         int timeout_ms = 5000) {
  wire::KevRequest kev;
  kev.rft_id = classify_uri(identifier);
  kev.svc_id = classify_uri(std::string(wire::kSvcLocateRepositories));
  HttpResponse res = http_get(locator_base_url + "/openurl?" + wire::compose_kev(kev), timeout_ms);
  if (res.status != 200)
    fail(Err::ProtocolError, "locator returned HTTP " + std::to_string(res.status));
  return wire::parse_repositories(res.body);
}

}  // namespace fedgate
