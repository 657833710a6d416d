#pragma once

// HTTP facade of the federator. Same endpoint grammar as a Tier-1 node
// (/sur/oaipmh, /openurl, /ds/oaipmh run through the same PmhEndpoint and
// KEV plumbing) plus POST /admin/cache-sync and GET /admin/status.

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fedgate/federator.hpp"
#include "fedgate/node_service.hpp"
#include "fedgate/pmh_endpoint.hpp"
#include "fedgate/service_host.hpp"

namespace fedgate {

class FederatorService {
 public:
  explicit FederatorService(std::shared_ptr<Federator> fed, size_t page_size = 500)
      : fed_(std::move(fed)), page_size_(page_size) {}

  int start(int port = 0) {
    int bound = host_.start(port);
    mount_routes();
    return bound;
  }
  void stop() { host_.stop(); }
  std::string base_url() const { return host_.base_url(); }
  ServiceHost& host() { return host_; }
  const std::shared_ptr<Federator>& federator() const { return fed_; }

 private:
  // One fanned-out harvest per paging session: continuation requests reuse
  // the session snapshot instead of hitting the upstreams again.
  struct Session {
    std::vector<PmhHead> heads;
  };

  void mount_routes() {
    auto sur_endpoint = std::make_shared<PmhEndpoint>(
        wire::IdentifyInfo{"federation surrogate repository " +
                               fed_->config().identity.repository_uri.value,
                           base_url() + "/sur/oaipmh",
                           fed_->config().identity.repository_uri.value,
                           "1970-01-01T00:00:00Z",
                           {{"tier", "3"}}},
        std::vector<std::string>{"surrogate", "identifiers"}, page_size_, sur_source());
    host_.server().Get("/sur/oaipmh", [this, sur_endpoint](const httplib::Request& req,
                                                           httplib::Response& res) {
      serve_pmh(*sur_endpoint, req, res);
    });

    auto ds_endpoint = std::make_shared<PmhEndpoint>(
        wire::IdentifyInfo{"federation datastream repository",
                           base_url() + "/ds/oaipmh",
                           fed_->config().identity.repository_uri.value,
                           "1970-01-01T00:00:00Z",
                           {{"tier", "3"}}},
        std::vector<std::string>{"datetime"}, page_size_, ds_source());
    host_.server().Get("/ds/oaipmh", [this, ds_endpoint](const httplib::Request& req,
                                                         httplib::Response& res) {
      serve_pmh(*ds_endpoint, req, res);
    });

    host_.server().Get("/openurl", [this](const httplib::Request& req, httplib::Response& res) {
      serve_openurl(req, res, [this](const wire::KevRequest& kev, httplib::Response& out) {
        if (kev.svc_id.value == wire::kSvcObtainSurrogate) {
          out.set_content(fed_->obtain_surrogate(kev.rft_id.value).doc, "application/xml");
        } else if (kev.svc_id.value == wire::kSvcLocateSurrogates) {
          if (fed_->config().locate_mode == LocateMode::Referral) {
            out.set_content(
                wire::render_referrals(kev.rft_id.value, fed_->referral_urls(kev.rft_id.value)),
                "application/xml");
          } else {
            out.set_content(
                wire::render_locations(kev.rft_id.value, fed_->locate_merge(kev.rft_id.value)),
                "application/xml");
          }
        } else if (kev.svc_id.value == wire::kSvcObtainDatastream) {
          auto [media, payload] = fed_->obtain_datastream(kev.rft_id.value);
          out.set_content(payload, media.empty() ? "application/octet-stream" : media);
        } else {
          fail(Err::BadArgument, "unknown svc_id: " + kev.svc_id.value);
        }
      });
    });

    host_.server().Post("/admin/cache-sync", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
      std::optional<FedDatetime> now;
      if (!req.body.empty()) {
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_object() && body.contains("now"))
          now = FedDatetime::try_parse(body["now"].get<std::string>());
      }
      try {
        SyncReport report = fed_->cache_sync(now);
        nlohmann::json out = nlohmann::json::array();
        for (const auto& r : report.repos) {
          nlohmann::json entry = {{"repository", r.repository_uri}, {"records", r.records}};
          if (r.new_cursor) entry["cursor"] = r.new_cursor->to_string();
          if (r.error) entry["error"] = *r.error;
          out.push_back(entry);
        }
        res.set_content(out.dump(2), "application/json");
      } catch (const FedError& e) {
        res.status = e.code() == Err::BadArgument ? 400 : 502;
        res.set_content(wire::render_error_body(e.code(), e.what(), e.details()),
                        "application/xml");
      }
    });

    host_.server().Get("/admin/status", [this](const httplib::Request&, httplib::Response& res) {
      const FederatorConfig& cfg = fed_->config();
      nlohmann::json out = {
          {"harvestMode", cfg.harvest_mode == HarvestMode::Dynamic ? "Dynamic" : "Cache"},
          {"locateMode", cfg.locate_mode == LocateMode::Referral ? "Referral" : "Merge"},
          {"failurePolicy",
           cfg.failure_policy == FailurePolicy::FailFast ? "FailFast" : "BestEffort"},
          {"fanoutTimeoutMs", cfg.fanout_timeout_ms},
      };
      FanoutStats stats = fed_->last_fanout();
      out["lastFanout"] = {{"upstreams", stats.upstreams},
                           {"ok", stats.ok},
                           {"failed", stats.failed},
                           {"durationMs", stats.duration_ms}};
      nlohmann::json cursors = nlohmann::json::array();
      if (fed_->cache())
        for (const auto& [repo, dt] : fed_->cache()->cursors())
          cursors.push_back({{"repository", repo}, {"cursor", dt.to_string()}});
      out["cacheCursors"] = cursors;
      res.set_content(out.dump(2), "application/json");
    });
  }

  void serve_pmh(PmhEndpoint& endpoint, const httplib::Request& req, httplib::Response& res) {
    size_t q = req.target.find('?');
    std::string query = q == std::string::npos ? "" : req.target.substr(q + 1);
    try {
      auto reply = endpoint.handle(query);
      res.status = reply.status;
      res.set_content(reply.body, "text/xml");
    } catch (const FedError& e) {
      res.status = 502;
      res.set_content(wire::render_error_body(e.code(), e.what(), e.details()), "application/xml");
    }
  }

  PmhSourceOps sur_source() {
    PmhSourceOps ops;
    ops.list_heads = [this](const std::string& prefix, const std::optional<FedDatetime>& from,
                            const std::optional<FedDatetime>& until,
                            const std::optional<uint64_t>& session) {
      if (session) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = sessions_.find(*session);
        if (it != sessions_.end()) return it->second.heads;
      }
      Federator::HarvestOutcome outcome = fed_->harvest_surrogates(from, until);
      std::vector<PmhHead> heads;
      heads.reserve(outcome.records.size());
      {
        std::lock_guard<std::mutex> lock(mu_);
        if (docs_.size() > 60000) docs_.clear();
        for (auto& rec : outcome.records) {
          heads.push_back(PmhHead{rec.surrogate_uri, rec.datetime});
          docs_[rec.surrogate_uri] = rec.doc;
        }
        uint64_t fp = PmhEndpoint::fingerprint(prefix, from, until, heads);
        if (sessions_.size() > 8) sessions_.clear();
        sessions_[fp] = Session{heads};
      }
      return heads;
    };
    ops.metadata = [this](const std::string& prefix,
                          const std::string& id) -> std::optional<std::string> {
      std::string doc;
      {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = docs_.find(id);
        if (it != docs_.end()) doc = it->second;
      }
      if (doc.empty()) {
        // Session cache miss (evicted or direct GetRecord): resolve through
        // the federation itself.
        try {
          doc = fed_->obtain_surrogate(id).doc;
        } catch (const FedError&) {
          return std::nullopt;
        }
        std::lock_guard<std::mutex> lock(mu_);
        docs_[id] = doc;
      }
      if (prefix == "identifiers") {
        Surrogate s = parse_surrogate(doc);
        wire::IdentifierTupleDoc t;
        t.surrogate_uri = s.surrogate_uri.value;
        t.datetime = s.surrogate_datetime;
        for (const auto& d : s.object.do_uris) t.do_uris.push_back(d.value);
        for (const auto& ds : s.datastreams)
          if (ds.ds_uri) t.ds_uris.push_back(ds.ds_uri->value);
        return wire::render_identifier_tuple(t);
      }
      return doc;
    };
    ops.datestamp = [this](const std::string& id) -> std::optional<FedDatetime> {
      std::string doc;
      {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = docs_.find(id);
        if (it != docs_.end()) doc = it->second;
      }
      if (doc.empty()) {
        try {
          doc = fed_->obtain_surrogate(id).doc;
        } catch (const FedError&) {
          return std::nullopt;
        }
      }
      try {
        return parse_surrogate(doc).surrogate_datetime;
      } catch (const FedError&) {
        return std::nullopt;
      }
    };
    return ops;
  }

  PmhSourceOps ds_source() {
    PmhSourceOps ops;
    ops.list_heads = [this](const std::string&, const std::optional<FedDatetime>& from,
                            const std::optional<FedDatetime>& until,
                            const std::optional<uint64_t>&) {
      std::vector<PmhHead> heads;
      std::vector<std::string> failed;
      for (const auto& src : fed_->datastream_repo_sources()) {
        if (!src.harvest_datastream_ids_url) continue;
        HarvestOptions hopts;
        hopts.verb = "ListIdentifiers";
        hopts.metadata_prefix = "datetime";
        hopts.timeout_ms = fed_->config().fanout_timeout_ms;
        if (from) hopts.from = from->to_string();
        if (until) hopts.until = until->to_string();
        try {
          for (const auto& item : harvest_all(*src.harvest_datastream_ids_url, hopts))
            heads.push_back(PmhHead{item.identifier, item.datestamp});
        } catch (const FedError&) {
          failed.push_back(src.repository_uri);
        }
      }
      if (!failed.empty() && fed_->config().failure_policy == FailurePolicy::FailFast)
        fail(Err::HarvestFailure, "datastream identifier fan-out failed", failed);
      std::sort(heads.begin(), heads.end(), [](const PmhHead& a, const PmhHead& b) {
        if (a.datestamp != b.datestamp) return a.datestamp < b.datestamp;
        return a.identifier < b.identifier;
      });
      {
        std::lock_guard<std::mutex> lock(mu_);
        for (const auto& h : heads) ds_datetimes_[h.identifier] = h.datestamp;
      }
      return heads;
    };
    ops.metadata = [this](const std::string&, const std::string& id) -> std::optional<std::string> {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = ds_datetimes_.find(id);
      if (it == ds_datetimes_.end()) return std::nullopt;
      return wire::render_datetime_doc(it->second);
    };
    ops.datestamp = [this](const std::string& id) -> std::optional<FedDatetime> {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = ds_datetimes_.find(id);
      if (it == ds_datetimes_.end()) return std::nullopt;
      return it->second;
    };
    return ops;
  }

  std::shared_ptr<Federator> fed_;
  size_t page_size_;
  ServiceHost host_;
  std::mutex mu_;
  std::unordered_map<std::string, std::string> docs_;
  std::unordered_map<uint64_t, Session> sessions_;
  std::unordered_map<std::string, FedDatetime> ds_datetimes_;
};

}  // namespace fedgate
