#pragma once

// HTTP query service over a loaded artifact.
//
//   GET  /meta                          grid, timesteps, field range, polarities
//   GET  /field/{t}?stride=k            scalar grid of timestep t, every k-th vertex
//   GET  /graph?filter=&t0=&t1=&polarity=
//   POST /features  {descriptor, t0, t1, with_geometry}
//   POST /tracks    {descriptor, weights, t0, t1}
//   GET  /minimum/{t}/{id}/track?filter=&polarity=
//
// Errors are JSON objects {"error": message} with status 400 or 404.

#include <cstddef>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "toptrack/artifact.hpp"

namespace httplib {
class Server;
}

namespace toptrack {

struct ServiceRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> params;
  std::string body;
};

struct ServiceResponse {
  int status = 200;
  std::string body;
  /// "hit" or "miss" for cached endpoints, empty otherwise.
  std::string cache;
};

/// Bounded least-recently-used map from request keys to response bodies.
class ResponseCache {
 public:
  explicit ResponseCache(std::size_t capacity) : capacity_(capacity) {}

  std::shared_ptr<const std::string> get(const std::string& key);
  void put(const std::string& key, std::shared_ptr<const std::string> body);
  std::size_t size() const;
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  using Entry = std::pair<std::string, std::shared_ptr<const std::string>>;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<Entry> order_;
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
};

class Service {
 public:
  explicit Service(std::shared_ptr<const Artifact> artifact, std::size_t cache_entries = 64);

  /// Routes one request. Safe to call concurrently.
  ServiceResponse handle(const ServiceRequest& request);

  /// Registers every route on an httplib server.
  void mount(httplib::Server& server);

  const Artifact& artifact() const noexcept { return *artifact_; }
  const ResponseCache& cache() const noexcept { return cache_; }

 private:
  ServiceResponse meta() const;
  ServiceResponse field(const std::string& t, const ServiceRequest& r) const;
  ServiceResponse graph(const ServiceRequest& r) const;
  ServiceResponse features(const ServiceRequest& r);
  ServiceResponse tracks(const ServiceRequest& r);
  ServiceResponse minimum_track(const std::string& t, const std::string& id, const ServiceRequest& r) const;

  std::shared_ptr<const Artifact> artifact_;
  ResponseCache cache_;
  std::string meta_;
};

}  // namespace toptrack
