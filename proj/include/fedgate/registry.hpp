#pragma once

// Service Registry: two lookup tables, component URI to its typed
// Interface-URIs and Interface-URI to Interface-URL. Reads are concurrent;
// mutations are serialized and replace a component's bindings atomically.

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fedgate/core.hpp"
#include "fedgate/errors.hpp"
#include "fedgate/wire_records.hpp"

namespace fedgate {

class ServiceRegistry {
 public:
  struct Component {
    std::vector<InterfaceBinding> bindings;
    std::vector<std::pair<std::string, std::string>> metadata;
  };

  // Re-registration replaces the prior bindings atomically. A binding whose
  // interface_uri is already owned by another component is a conflict and
  // leaves the registry untouched.
  void register_component(const ContentURI& component_uri,
                          const std::vector<InterfaceBinding>& bindings,
                          std::vector<std::pair<std::string, std::string>> metadata = {}) {
    std::lock_guard<std::mutex> lock(mu_);
    std::unordered_map<std::string, bool> in_batch;
    for (const auto& b : bindings) {
      auto owner = interface_owner_.find(b.interface_uri.value);
      if (owner != interface_owner_.end() && owner->second != component_uri.value)
        fail(Err::ConflictError, "interface " + b.interface_uri.value +
                                     " is already bound to component " + owner->second,
             {owner->second, component_uri.value});
      if (!in_batch.emplace(b.interface_uri.value, true).second)
        fail(Err::ConflictError,
             "interface " + b.interface_uri.value + " appears twice in one registration");
    }
    auto it = components_.find(component_uri.value);
    if (it != components_.end()) {
      for (const auto& old : it->second.bindings) interface_owner_.erase(old.interface_uri.value);
    }
    for (const auto& b : bindings) interface_owner_[b.interface_uri.value] = component_uri.value;
    components_[component_uri.value] = Component{bindings, std::move(metadata)};
  }

  // Component URI -> its interface list; Interface-URI -> its URL.
  wire::RegistryRecordDoc obtain_record(const ContentURI& identifier) const {
    std::lock_guard<std::mutex> lock(mu_);
    wire::RegistryRecordDoc rec;
    rec.subject = identifier.value;
    if (auto it = components_.find(identifier.value); it != components_.end()) {
      rec.interfaces = it->second.bindings;
      rec.metadata = it->second.metadata;
      return rec;
    }
    if (auto owner = interface_owner_.find(identifier.value); owner != interface_owner_.end()) {
      const Component& c = components_.at(owner->second);
      for (const auto& b : c.bindings)
        if (b.interface_uri.value == identifier.value) {
          rec.interface_url = b.interface_url.value;
          return rec;
        }
    }
    fail(Err::IdDoesNotExist, "unknown component or interface: " + identifier.value);
  }

  std::vector<std::string> component_uris() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::string> out;
    out.reserve(components_.size());
    for (const auto& [uri, c] : components_) out.push_back(uri);
    return out;
  }

  std::optional<Component> find(const std::string& component_uri) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = components_.find(component_uri);
    if (it == components_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::string> interface_url(const std::string& component_uri,
                                           InterfaceType type) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = components_.find(component_uri);
    if (it == components_.end()) return std::nullopt;
    for (const auto& b : it->second.bindings)
      if (b.interface_type == type) return b.interface_url.value;
    return std::nullopt;
  }

  size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return components_.size();
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, Component> components_;
  std::unordered_map<std::string, std::string> interface_owner_;
};

}  // namespace fedgate
