#include "guidemap/service.hpp"

#include <atomic>
#include <cstring>
#include <mutex>

#include "httplib.h"

#include "guidemap/error.hpp"
#include "guidemap/imaging.hpp"
#include "guidemap/io.hpp"

namespace guidemap::service {

using nlohmann::json;

struct SessionManager::Session {
  explicit Session(Scene s) : scene(std::move(s)) {
    history.emplace_back(scene.width(), scene.height());
  }

  std::shared_mutex mutex;
  Scene scene;
  std::vector<SessionClick> clicks;
  // history[i] is the prediction after the first i clicks.
  std::vector<BinaryMask> history;
  std::optional<BinaryMask> gt;
  std::atomic<Clock::rep> last_used{0};
};

namespace {

ClickSet to_click_set(std::span<const SessionClick> clicks) {
  ClickSet set;
  for (const auto& c : clicks) (c.positive ? set.positives : set.negatives).push_back(c.point);
  return set;
}

std::optional<ScaleEstimate> scale_for(const ClickSet& set, const ScaleFactors& factors) {
  if (set.positives.empty() || set.negatives.empty()) return std::nullopt;
  try {
    return estimate_scale(set.positives.front(), set.negatives.front(), factors);
  } catch (const Error& e) {
    if (e.code() == Errc::kDegenerateScale) return std::nullopt;
    throw;
  }
}

bool starts_with(std::span<const std::uint8_t> data, const char* magic) {
  const std::size_t n = std::strlen(magic);
  return data.size() >= n && std::memcmp(data.data(), magic, n) == 0;
}

}  // namespace

SessionManager::SessionManager(ServiceConfig config) : config_(std::move(config)) {
  const std::uint64_t seed = config_.id_seed ? *config_.id_seed
                                             : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^
                                                   std::random_device{}();
  id_rng_ = std::make_unique<std::mt19937_64>(seed);
}

SessionManager::~SessionManager() = default;

std::string SessionManager::new_id() {
  static constexpr char kAlphabet[] = "0123456789abcdefghijklmnopqrstuvwxyz";
  for (;;) {
    std::string id;
    std::uint64_t bits = (*id_rng_)();
    for (int i = 0; i < 12; ++i) {
      id.push_back(kAlphabet[bits % 36]);
      bits /= 36;
    }
    if (!sessions_.contains(id)) return id;
  }
}

std::string SessionManager::create_session(std::span<const std::uint8_t> png) {
  if (png.size() > config_.max_payload_bytes) {
    throw Error(Errc::kPayloadTooLarge, "image payload of " + std::to_string(png.size()) +
                                            " bytes exceeds the limit of " +
                                            std::to_string(config_.max_payload_bytes));
  }
  if (png.empty()) throw Error(Errc::kDecode, "empty image payload");
  auto session = std::make_shared<Session>(Scene::build(io::decode_png(png), config_.slic));
  session->last_used = config_.now().time_since_epoch().count();
  purge_expired();
  std::unique_lock lock(mutex_);
  std::string id = new_id();
  sessions_.emplace(id, std::move(session));
  return id;
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) {
  std::shared_ptr<Session> session;
  {
    std::shared_lock lock(mutex_);
    auto it = sessions_.find(id);
    if (it != sessions_.end()) session = it->second;
  }
  const auto now = config_.now().time_since_epoch();
  if (session && now - Clock::duration(session->last_used.load()) > config_.idle_timeout) {
    remove(id);
    session.reset();
  }
  if (!session) throw Error(Errc::kNotFound, "no session with id " + id);
  session->last_used = now.count();
  return session;
}

ClickResult SessionManager::post_click(const std::string& id, int x, int y, bool positive) {
  auto s = find(id);
  std::unique_lock lock(s->mutex);
  check_in_bounds(Point{x, y}, s->scene.width(), s->scene.height());
  std::vector<SessionClick> next = s->clicks;
  next.push_back({Point{x, y}, positive});
  const ClickSet set = to_click_set(next);
  const auto scale = scale_for(set, config_.factors);
  const GuidanceStack stack =
      assemble_stack(s->scene, set, scale, &s->history.back(), config_.layout, config_.guidance);
  BinaryMask mask = reference_segmenter(s->scene, stack, config_.segmenter);
  s->clicks = std::move(next);
  s->history.push_back(mask);
  ClickResult r{std::move(mask), std::nullopt, s->clicks.size()};
  if (s->gt) r.miou = miou(r.mask, *s->gt);
  return r;
}

ClickResult SessionManager::undo_last(const std::string& id) {
  auto s = find(id);
  std::unique_lock lock(s->mutex);
  if (s->clicks.empty()) throw Error(Errc::kParameter, "session has no clicks to undo");
  s->clicks.pop_back();
  s->history.pop_back();
  ClickResult r{s->history.back(), std::nullopt, s->clicks.size()};
  if (s->gt) r.miou = miou(r.mask, *s->gt);
  return r;
}

void SessionManager::set_ground_truth(const std::string& id, std::span<const std::uint8_t> data) {
  if (data.size() > config_.max_payload_bytes) {
    throw Error(Errc::kPayloadTooLarge, "mask payload exceeds the size limit");
  }
  auto s = find(id);
  BinaryMask gt = [&] {
    if (starts_with(data, "\x89PNG")) return io::decode_png_mask(data);
    if (starts_with(data, "P5")) {
      const io::GrayImage g = io::parse_pgm(data);
      BinaryMask m(g.width, g.height);
      for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
          const auto v = g.values[static_cast<std::size_t>(y) * g.width + x];
          if (v != 0 && v != g.maxval) throw Error(Errc::kDecode, "mask is not binary");
          m.set(x, y, v != 0);
        }
      }
      return m;
    }
    throw Error(Errc::kDecode, "ground truth must be a PNG or binary PGM mask");
  }();
  std::unique_lock lock(s->mutex);
  if (gt.width() != s->scene.width() || gt.height() != s->scene.height()) {
    throw Error(Errc::kShape, "ground-truth mask does not match the image size");
  }
  s->gt = std::move(gt);
}

BinaryMask SessionManager::mask(const std::string& id) {
  auto s = find(id);
  std::shared_lock lock(s->mutex);
  return s->history.back();
}

GuidanceChannel SessionManager::channel(const std::string& id, ChannelKind kind) {
  auto s = find(id);
  std::shared_lock lock(s->mutex);
  const ClickSet set = to_click_set(s->clicks);
  return compute_channel(s->scene, set, scale_for(set, config_.factors), &s->history.back(), kind,
                         config_.guidance);
}

std::vector<SessionClick> SessionManager::clicks(const std::string& id) {
  auto s = find(id);
  std::shared_lock lock(s->mutex);
  return s->clicks;
}

std::optional<ScaleEstimate> SessionManager::scale(const std::string& id) {
  auto s = find(id);
  std::shared_lock lock(s->mutex);
  return scale_for(to_click_set(s->clicks), config_.factors);
}

json SessionManager::summary(const std::string& id) {
  auto s = find(id);
  std::shared_lock lock(s->mutex);
  json clicks = json::array();
  for (const auto& c : s->clicks) {
    clicks.push_back({{"x", c.point.x}, {"y", c.point.y},
                      {"polarity", c.positive ? "positive" : "negative"}});
  }
  json j;
  j["id"] = id;
  j["width"] = s->scene.width();
  j["height"] = s->scene.height();
  j["superpixels"] = s->scene.partition->count();
  j["proposals"] = s->scene.proposals->size();
  j["layout"] = layout_to_string(config_.layout);
  j["clicks"] = std::move(clicks);
  j["scale"] = io::scale_to_json(scale_for(to_click_set(s->clicks), config_.factors));
  j["has_ground_truth"] = s->gt.has_value();
  if (s->gt) j["miou"] = miou(s->history.back(), *s->gt);
  return j;
}

bool SessionManager::remove(const std::string& id) {
  std::unique_lock lock(mutex_);
  return sessions_.erase(id) > 0;
}

std::size_t SessionManager::purge_expired() {
  const auto now = config_.now().time_since_epoch();
  std::unique_lock lock(mutex_);
  return std::erase_if(sessions_, [&](const auto& kv) {
    return now - Clock::duration(kv.second->last_used.load()) > config_.idle_timeout;
  });
}

std::size_t SessionManager::size() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

// HTTP ----------------------------------------------------------------------------

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::kNotFound: return 404;
    case Errc::kPayloadTooLarge: return 413;
    case Errc::kCoordinateRange:
    case Errc::kParameter:
    case Errc::kShape:
    case Errc::kDecode:
    case Errc::kConfiguration:
    case Errc::kDegenerateScale:
    case Errc::kEmptyObject:
    case Errc::kNumericDomain: return 400;
    case Errc::kIo: return 500;
  }
  return 500;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_png(httplib::Response& res, const std::vector<std::uint8_t>& png) {
  res.status = 200;
  res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
}

std::span<const std::uint8_t> body_bytes(const httplib::Request& req) {
  return {reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()};
}

json click_result_json(const ClickResult& r) {
  json j;
  j["clicks"] = r.clicks;
  j["mask"] = io::mask_to_rle(r.mask);
  j["foreground_pixels"] = r.mask.count();
  if (r.miou) j["miou"] = *r.miou;
  return j;
}

bool parse_polarity(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "positive" || s == "pos" || s == "+") return true;
    if (s == "negative" || s == "neg" || s == "-") return false;
  }
  throw Error(Errc::kParameter, "polarity must be \"positive\" or \"negative\"");
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_json(res, http_status(e.code()), {{"error", errc_name(e.code())}, {"message", e.what()}});
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", "bad_request"}, {"message", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
    }
  };
}

}  // namespace

void install_routes(httplib::Server& server, SessionManager& m) {
  server.set_payload_max_length(m.config().max_payload_bytes + 1);
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  });

  server.Post("/sessions", guarded([&m](const httplib::Request& req, httplib::Response& res) {
    const std::string id = m.create_session(body_bytes(req));
    json j = m.summary(id);
    send_json(res, 201, j);
  }));

  server.Get(R"(/sessions/([a-z0-9]+))",
             guarded([&m](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, m.summary(req.matches[1]));
             }));

  server.Delete(R"(/sessions/([a-z0-9]+))",
                guarded([&m](const httplib::Request& req, httplib::Response& res) {
                  if (!m.remove(req.matches[1])) {
                    throw Error(Errc::kNotFound, "no session with id " + req.matches[1].str());
                  }
                  res.status = 204;
                }));

  server.Post(R"(/sessions/([a-z0-9]+)/clicks)",
              guarded([&m](const httplib::Request& req, httplib::Response& res) {
                const json body = json::parse(req.body);
                if (!body.contains("x") || !body.contains("y") || !body.contains("polarity")) {
                  throw Error(Errc::kParameter, "click needs x, y and polarity");
                }
                if (!body["x"].is_number_integer() || !body["y"].is_number_integer()) {
                  throw Error(Errc::kParameter, "click coordinates must be integers");
                }
                const auto r = m.post_click(req.matches[1], body["x"].get<int>(),
                                            body["y"].get<int>(), parse_polarity(body["polarity"]));
                send_json(res, 200, click_result_json(r));
              }));

  server.Delete(R"(/sessions/([a-z0-9]+)/clicks/last)",
                guarded([&m](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, 200, click_result_json(m.undo_last(req.matches[1])));
                }));

  server.Get(R"(/sessions/([a-z0-9]+)/mask)",
             guarded([&m](const httplib::Request& req, httplib::Response& res) {
               send_png(res, io::encode_png_mask(m.mask(req.matches[1])));
             }));

  server.Get(R"(/sessions/([a-z0-9]+)/channels/([a-z_]+))",
             guarded([&m](const httplib::Request& req, httplib::Response& res) {
               const auto kind = parse_channel_kind(req.matches[2].str());
               if (!kind) throw Error(Errc::kParameter, "unknown channel kind " + req.matches[2].str());
               const GuidanceChannel c = m.channel(req.matches[1], *kind);
               send_png(res, io::encode_png_gray(c.width(), c.height(), c.quantized()));
             }));

  server.Put(R"(/sessions/([a-z0-9]+)/ground_truth)",
             guarded([&m](const httplib::Request& req, httplib::Response& res) {
               m.set_ground_truth(req.matches[1], body_bytes(req));
               send_json(res, 200, m.summary(req.matches[1]));
             }));
}

}  // namespace guidemap::service
