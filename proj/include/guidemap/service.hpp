#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "guidemap/error.hpp"
#include "guidemap/guidance.hpp"
#include "guidemap/interaction.hpp"

namespace httplib {
class Server;
}

namespace guidemap::service {

using Clock = std::chrono::steady_clock;

struct ServiceConfig {
  std::size_t max_payload_bytes = 16u << 20;
  std::chrono::seconds idle_timeout{30 * 60};
  SlicParams slic{.k = 1000, .compactness = 10.0, .iterations = 10};
  Layout layout = full_layout();
  ScaleFactors factors;
  GuidanceConfig guidance{.scale_fallback = true};
  ReferenceSegmenterConfig segmenter;
  /// Seeds session id generation; unset draws from std::random_device.
  std::optional<std::uint64_t> id_seed;
  /// Replaceable for expiry tests.
  std::function<Clock::time_point()> now = [] { return Clock::now(); };
};

struct SessionClick {
  Point point;
  bool positive = true;
  friend bool operator==(const SessionClick&, const SessionClick&) = default;
};

struct ClickResult {
  BinaryMask mask;
  std::optional<double> miou;  // only with a ground truth attached
  std::size_t clicks = 0;
};

/// Thread-safe registry of live interactive sessions. Each session is a
/// single-writer state machine: mutations hold its exclusive lock, reads
/// share it.
class SessionManager {
 public:
  explicit SessionManager(ServiceConfig config = {});
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// Decodes a PNG and precomputes superpixels and proposals. Throws
  /// kPayloadTooLarge or kDecode.
  std::string create_session(std::span<const std::uint8_t> png);

  ClickResult post_click(const std::string& id, int x, int y, bool positive);
  /// Drops the most recent click and restores the prediction before it.
  ClickResult undo_last(const std::string& id);
  /// Binary PNG or PGM mask of the image's size.
  void set_ground_truth(const std::string& id, std::span<const std::uint8_t> data);

  BinaryMask mask(const std::string& id);
  GuidanceChannel channel(const std::string& id, ChannelKind kind);
  std::vector<SessionClick> clicks(const std::string& id);
  std::optional<ScaleEstimate> scale(const std::string& id);
  nlohmann::json summary(const std::string& id);

  bool remove(const std::string& id);
  /// Drops sessions idle for longer than the timeout; returns how many.
  std::size_t purge_expired();
  std::size_t size() const;
  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id);
  std::string new_id();

  ServiceConfig config_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::unique_ptr<std::mt19937_64> id_rng_;
};

/// HTTP status for an error code.
int http_status(Errc code) noexcept;

/// Installs the JSON/PNG routes on `server`. The manager must outlive it.
void install_routes(httplib::Server& server, SessionManager& manager);

}  // namespace guidemap::service
