#pragma once

// HTTP surface of a Tier-1 node: /sur/oaipmh and /ds/oaipmh speak the OAI
// subset via the shared PmhEndpoint; /openurl serves the three KEV services.
// The Tier-3 facade mounts the very same handlers over its own operations.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedgate/core.hpp"
#include "fedgate/node.hpp"
#include "fedgate/pmh_endpoint.hpp"
#include "fedgate/service_host.hpp"
#include "fedgate/wire.hpp"
#include "fedgate/wire_records.hpp"
#include "fedgate/xml.hpp"

namespace fedgate {

// Identifier-tuple metadata document for the "identifiers" prefix.
inline std::string render_identifiers_doc(const IdentifierTuple& t) {
  wire::IdentifierTupleDoc doc{t.surrogate_uri, t.datetime, t.do_uris, t.ds_uris};
  return wire::render_identifier_tuple(doc);
}

// Shared KEV plumbing: parses the query string, maps library errors onto
// HTTP statuses (unknown service / bad request 400, unknown identifier 404,
// upstream trouble 502).
template <typename Fn>
inline void serve_openurl(const httplib::Request& req, httplib::Response& res, Fn&& dispatch) {
  wire::KevRequest kev;
  try {
    // Reconstruct the raw query so values keep their exact spelling.
    kev = wire::parse_kev(req.target.substr(req.target.find('?') + 1));
  } catch (const FedError& e) {
    res.status = 400;
    res.set_content(wire::render_error_body(e.code(), e.what()), "application/xml");
    return;
  }
  try {
    dispatch(kev, res);
  } catch (const FedError& e) {
    switch (e.code()) {
      case Err::IdDoesNotExist:
      case Err::NotFound:
      case Err::NoSuchInterface:
        res.status = 404;
        break;
      case Err::Unreachable:
      case Err::UpstreamUnavailable:
        res.status = 502;
        break;
      case Err::IntegrityViolation:
        res.status = 500;
        break;
      default:
        res.status = 400;
    }
    res.set_content(wire::render_error_body(e.code(), e.what(), e.details()), "application/xml");
  }
}

class NodeService {
 public:
  NodeService(std::shared_ptr<RepositoryNode> node, size_t page_size = 500,
              std::optional<std::string> static_dir = std::nullopt)
      : node_(std::move(node)), page_size_(page_size), static_dir_(std::move(static_dir)) {}

  int start(int port = 0) {
    int bound = host_.start(port);
    // Plain-HTTP payloads for stores that identify datastreams by URL only.
    if (static_dir_) host_.server().set_mount_point("/static", *static_dir_);
    mount_routes();
    return bound;
  }

  void stop() { host_.stop(); }
  int port() const { return host_.port(); }
  std::string base_url() const { return host_.base_url(); }
  ServiceHost& host() { return host_; }
  const std::shared_ptr<RepositoryNode>& node() const { return node_; }

  // Registration records for the two logical repositories this node exposes,
  // with Interface-URLs composed from the live base URL.
  std::vector<wire::RegistryRecordDoc> component_records() const {
    const NodeConfig& cfg = node_->config();
    auto binding = [&](InterfaceType t, const std::string& path) -> std::optional<InterfaceBinding> {
      auto it = cfg.interface_uris.find(t);
      if (it == cfg.interface_uris.end()) return std::nullopt;
      return InterfaceBinding{it->second, t, classify_uri(base_url() + path)};
    };
    std::vector<wire::RegistryRecordDoc> out;
    wire::RegistryRecordDoc sur;
    sur.subject = cfg.surrogate_repo.repository_uri.value;
    for (auto [type, path] :
         {std::pair{InterfaceType::HarvestSurrogates, "/sur/oaipmh"},
          std::pair{InterfaceType::HarvestIdentifiers, "/sur/oaipmh"},
          std::pair{InterfaceType::ObtainSurrogate, "/openurl"},
          std::pair{InterfaceType::LocateSurrogates, "/openurl"}}) {
      if (auto b = binding(type, path)) sur.interfaces.push_back(*b);
    }
    out.push_back(std::move(sur));
    if (cfg.datastream_repo) {
      wire::RegistryRecordDoc ds;
      ds.subject = cfg.datastream_repo->repository_uri.value;
      for (auto [type, path] : {std::pair{InterfaceType::ObtainDatastream, "/openurl"},
                                std::pair{InterfaceType::HarvestDatastreamIdentifiers, "/ds/oaipmh"}}) {
        if (auto b = binding(type, path)) ds.interfaces.push_back(*b);
      }
      out.push_back(std::move(ds));
    }
    return out;
  }

 private:
  void mount_routes() {
    auto sur_endpoint = std::make_shared<PmhEndpoint>(
        wire::IdentifyInfo{
            "surrogate repository " + node_->config().surrogate_repo.repository_uri.value,
            base_url() + "/sur/oaipmh", node_->config().surrogate_repo.repository_uri.value,
            earliest(), {{"policy", policy_name()}}},
        std::vector<std::string>{"surrogate", "identifiers"}, page_size_, sur_source());
    host_.server().Get("/sur/oaipmh", [this, sur_endpoint](const httplib::Request& req,
                                                           httplib::Response& res) {
      auto reply = sur_endpoint->handle(raw_query(req));
      res.status = reply.status;
      res.set_content(reply.body, "text/xml");
    });

    auto ds_endpoint = std::make_shared<PmhEndpoint>(
        wire::IdentifyInfo{"datastream repository " + ds_repo_uri(), base_url() + "/ds/oaipmh",
                           ds_repo_uri(), earliest(), {{"policy", policy_name()}}},
        std::vector<std::string>{"datetime"}, page_size_, ds_source());
    host_.server().Get("/ds/oaipmh", [this, ds_endpoint](const httplib::Request& req,
                                                         httplib::Response& res) {
      if (!node_->config().datastream_repo) {
        res.status = 404;
        res.set_content(wire::render_error_body(Err::NoSuchInterface,
                                                "node has no Datastream Repository"),
                        "application/xml");
        return;
      }
      auto reply = ds_endpoint->handle(raw_query(req));
      res.status = reply.status;
      res.set_content(reply.body, "text/xml");
    });

    host_.server().Get("/openurl", [this](const httplib::Request& req, httplib::Response& res) {
      serve_openurl(req, res, [this](const wire::KevRequest& kev, httplib::Response& out) {
        if (kev.svc_id.value == wire::kSvcObtainSurrogate) {
          out.set_content(node_->obtain_surrogate(kev.rft_id).bytes, "application/xml");
        } else if (kev.svc_id.value == wire::kSvcLocateSurrogates) {
          std::vector<wire::LocationEntry> entries;
          for (const auto& loc : node_->locate_surrogates(kev.rft_id))
            entries.push_back(wire::LocationEntry{
                loc.surrogate_uri, loc.surrogate_url, loc.datetime,
                node_->config().surrogate_repo.repository_uri.value});
          out.set_content(
              wire::render_locations(kev.rft_id.value, entries,
                                     node_->config().surrogate_repo.repository_uri.value),
              "application/xml");
        } else if (kev.svc_id.value == wire::kSvcObtainDatastream) {
          auto [media, payload] = node_->obtain_datastream(kev.rft_id);
          out.set_content(payload, media);
        } else {
          fail(Err::BadArgument, "unknown svc_id: " + kev.svc_id.value);
        }
      });
    });
  }

  static std::string raw_query(const httplib::Request& req) {
    size_t q = req.target.find('?');
    return q == std::string::npos ? "" : req.target.substr(q + 1);
  }

  std::string policy_name() const {
    const auto& p = node_->config().policy;
    return std::string(p.surrogate_policy == SurrogatePolicy::NewSurrogate ? "NewSurrogate"
                                                                           : "UpdateSurrogate") +
           "/" +
           (p.datastream_policy == DatastreamPolicy::NewDatastream ? "NewDatastream"
                                                                   : "UpdateDatastream");
  }

  std::string ds_repo_uri() const {
    return node_->config().datastream_repo
               ? node_->config().datastream_repo->repository_uri.value
               : "";
  }

  std::string earliest() const {
    auto e = node_->earliest_datetime();
    return e ? e->to_string() : "1970-01-01T00:00:00Z";
  }

  PmhSourceOps sur_source() {
    PmhSourceOps ops;
    ops.list_heads = [this](const std::string&, const std::optional<FedDatetime>& from,
                            const std::optional<FedDatetime>& until,
                            const std::optional<uint64_t>&) {
      std::vector<PmhHead> heads;
      for (const auto& t : node_->harvest_identifiers(from, until))
        heads.push_back(PmhHead{t.surrogate_uri, t.datetime});
      return heads;
    };
    ops.metadata = [this](const std::string& prefix,
                          const std::string& id) -> std::optional<std::string> {
      if (prefix == "identifiers") {
        auto t = node_->get_identifier_tuple(id);
        if (!t) return std::nullopt;
        return render_identifiers_doc(*t);
      }
      auto doc = node_->get_doc(id);
      if (!doc) return std::nullopt;
      return doc->bytes;
    };
    ops.datestamp = [this](const std::string& id) { return node_->get_datestamp(id); };
    return ops;
  }

  PmhSourceOps ds_source() {
    PmhSourceOps ops;
    ops.list_heads = [this](const std::string&, const std::optional<FedDatetime>& from,
                            const std::optional<FedDatetime>& until,
                            const std::optional<uint64_t>&) {
      std::vector<PmhHead> heads;
      for (const auto& [uri, dt] : node_->harvest_datastream_identifiers(from, until))
        heads.push_back(PmhHead{uri, dt});
      return heads;
    };
    ops.metadata = [this](const std::string&, const std::string& id) -> std::optional<std::string> {
      auto dt = node_->get_datastream_datetime(id);
      if (!dt) return std::nullopt;
      return wire::render_datetime_doc(*dt);
    };
    ops.datestamp = [this](const std::string& id) { return node_->get_datastream_datetime(id); };
    return ops;
  }

  std::shared_ptr<RepositoryNode> node_;
  size_t page_size_;
  std::optional<std::string> static_dir_;
  ServiceHost host_;
};

}  // namespace fedgate
