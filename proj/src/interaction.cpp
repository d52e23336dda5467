#include "guidemap/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "guidemap/error.hpp"
#include "guidemap/imaging.hpp"

namespace guidemap {

std::size_t Rng::index(std::size_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % bound);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

// Scale ------------------------------------------------------------------------

ScaleEstimate estimate_scale(Point first_pos, Point first_neg, const ScaleFactors& factors) {
  const double dx = first_pos.x - first_neg.x;
  const double dy = first_pos.y - first_neg.y;
  const double d = std::sqrt(dx * dx + dy * dy);
  if (d == 0.0) {
    throw Error(Errc::kDegenerateScale, "scale estimate needs two distinct clicks");
  }
  return ScaleEstimate{std::sqrt(std::numbers::pi) * d, factors.f, factors.f1, factors.f2};
}

ScaleEstimate scale_from_mask(const BinaryMask& gt, const ScaleFactors& factors) {
  const std::size_t n = gt.count();
  if (n == 0) throw Error(Errc::kEmptyObject, "ground-truth scale of an empty mask");
  return ScaleEstimate{std::sqrt(static_cast<double>(n)), factors.f, factors.f1, factors.f2};
}

// Click simulation -------------------------------------------------------------

void SamplingConfig::validate() const {
  auto check_counts = [](const std::vector<int>& v, const char* name) {
    if (v.empty()) throw Error(Errc::kParameter, std::string(name) + " choice set is empty");
    for (int x : v) {
      if (x < 1) throw Error(Errc::kParameter, std::string(name) + " must be positive");
    }
  };
  auto check_dists = [](const std::vector<double>& v, const char* name) {
    if (v.empty()) throw Error(Errc::kParameter, std::string(name) + " choice set is empty");
    for (double x : v) {
      if (!(x > 0.0)) throw Error(Errc::kParameter, std::string(name) + " must be positive");
    }
  };
  check_counts(n_pos, "n_pos");
  check_counts(n_neg1, "n_neg1");
  check_counts(n_neg2, "n_neg2");
  check_dists(d_in1, "d_in1");
  check_dists(d_in2, "d_in2");
  check_dists(d_out1, "d_out1");
  check_dists(d_out2, "d_out2");
  if (!(replace_prob >= 0.0 && replace_prob <= 1.0)) {
    throw Error(Errc::kParameter, "replace_prob must lie in [0,1]");
  }
  if (n_iter < 0) throw Error(Errc::kParameter, "n_iter must be non-negative");
}

std::vector<double> boundary_distance(const BinaryMask& gt) {
  const int w = gt.width();
  const int h = gt.height();
  BinaryMask boundary(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!gt.at(x, y)) continue;
      const bool edge = (x > 0 && !gt.at(x - 1, y)) || (x + 1 < w && !gt.at(x + 1, y)) ||
                        (y > 0 && !gt.at(x, y - 1)) || (y + 1 < h && !gt.at(x, y + 1));
      if (edge) boundary.set(x, y, true);
    }
  }
  auto d = squared_distance_transform(boundary);
  for (double& v : d) v = std::sqrt(v);
  return d;
}

Point interior_point(const BinaryMask& gt) {
  if (gt.empty()) throw Error(Errc::kEmptyObject, "object mask is empty");
  const auto bd = boundary_distance(gt);
  const auto bits = gt.bits();
  std::size_t best = bits.size();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] && (best == bits.size() || bd[i] > bd[best])) best = i;
  }
  return Point{static_cast<int>(best % gt.width()), static_cast<int>(best / gt.width())};
}

namespace {

double halve(double d) {
  d *= 0.5;
  return d < 0.5 ? 0.0 : d;
}

std::vector<Point> candidates_where(int width, std::span<const std::uint8_t> in_region,
                                    std::span<const double> dist, double min_dist) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < in_region.size(); ++i) {
    if (in_region[i] && dist[i] >= min_dist) {
      out.push_back(Point{static_cast<int>(i % width), static_cast<int>(i / width)});
    }
  }
  return out;
}

std::vector<Point> greedy_spread(const std::vector<Point>& shuffled, int n, double min_gap) {
  std::vector<Point> picked;
  const double gap2 = min_gap * min_gap;
  for (Point c : shuffled) {
    if (static_cast<int>(picked.size()) >= n) break;
    const bool far = std::all_of(picked.begin(), picked.end(), [&](Point p) {
      const double dx = p.x - c.x;
      const double dy = p.y - c.y;
      return dx * dx + dy * dy >= gap2;
    });
    if (far) picked.push_back(c);
  }
  return picked;
}

}  // namespace

PositiveSample sample_positive_clicks(const BinaryMask& gt, int n, double d1, double d2,
                                      Rng& rng) {
  if (gt.empty()) throw Error(Errc::kEmptyObject, "cannot sample clicks in an empty object");
  if (n < 1) throw Error(Errc::kParameter, "n_pos must be positive");
  const auto bd = boundary_distance(gt);
  while (true) {
    auto cands = candidates_where(gt.width(), gt.bits(), bd, d1);
    if (cands.empty()) {
      if (d1 > 0.0) {
        d1 = halve(d1);
        continue;
      }
      return PositiveSample{{interior_point(gt)}, d1, d2};
    }
    rng.shuffle(cands);
    auto picked = greedy_spread(cands, n, d2);
    if (static_cast<int>(picked.size()) < n && d2 > 0.0) {
      d2 = halve(d2);
      continue;
    }
    return PositiveSample{std::move(picked), d1, d2};
  }
}

PositiveSample sample_positive_clicks(const BinaryMask& gt, const SamplingConfig& cfg,
                                      Rng& rng) {
  cfg.validate();
  const int n = rng.pick<int>(cfg.n_pos);
  const double d1 = rng.pick<double>(cfg.d_in1);
  const double d2 = rng.pick<double>(cfg.d_in2);
  return sample_positive_clicks(gt, n, d1, d2, rng);
}

NegativeSample sample_negative_clicks(const BinaryMask& gt,
                                      std::span<const BinaryMask> other_instances,
                                      NegativeStrategy strategy, const SamplingConfig& cfg,
                                      Rng& rng) {
  cfg.validate();
  NegativeSample out;
  if (strategy == NegativeStrategy::kBackground) {
    const int n = rng.pick<int>(cfg.n_neg1);
    const double d1 = rng.pick<double>(cfg.d_out1);
    const double d2 = rng.pick<double>(cfg.d_out2);
    std::vector<std::uint8_t> background(gt.pixel_count());
    const auto bits = gt.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) background[i] = bits[i] ? 0 : 1;
    if (std::none_of(background.begin(), background.end(), [](auto b) { return b != 0; })) {
      out.diagnostic = "object covers the whole image; no background to sample";
      return out;
    }
    const auto bd = boundary_distance(gt);
    auto cands = candidates_where(gt.width(), background, bd, d1);
    if (cands.empty()) {
      out.diagnostic = "no background pixel lies " + std::to_string(d1) +
                       " px away from the object boundary";
      return out;
    }
    rng.shuffle(cands);
    out.clicks = greedy_spread(cands, n, d2);
    return out;
  }

  if (other_instances.empty()) {
    out.diagnostic = "no other instances to place negative clicks on";
    return out;
  }
  const int n = rng.pick<int>(cfg.n_neg2);
  const double d2 = rng.pick<double>(cfg.d_out2);
  for (const BinaryMask& other : other_instances) {
    if (other.width() != gt.width() || other.height() != gt.height()) {
      throw Error(Errc::kShape, "instance mask does not match the target mask");
    }
    std::vector<std::uint8_t> region(other.pixel_count());
    for (std::size_t i = 0; i < region.size(); ++i) {
      region[i] = other.bits()[i] && !gt.bits()[i];
    }
    const std::vector<double> zero(region.size(), 0.0);
    auto cands = candidates_where(gt.width(), region, zero, 0.0);
    rng.shuffle(cands);
    auto picked = greedy_spread(cands, n, d2);
    out.clicks.insert(out.clicks.end(), picked.begin(), picked.end());
  }
  if (out.clicks.empty()) out.diagnostic = "other instances have no pixels outside the object";
  return out;
}

std::optional<Correction> correction_click(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw Error(Errc::kShape, "correction_click: mask dimensions differ");
  }
  const int w = gt.width();
  const int h = gt.height();
  const std::size_t n = gt.pixel_count();
  std::vector<std::uint8_t> err(n);
  for (std::size_t i = 0; i < n; ++i) err[i] = pred.bits()[i] != gt.bits()[i];

  std::vector<std::int32_t> comp(n, -1);
  std::vector<std::size_t> stack;
  std::vector<std::size_t> members;
  std::vector<std::size_t> best_members;
  for (std::size_t start = 0; start < n; ++start) {
    if (!err[start] || comp[start] >= 0) continue;
    members.clear();
    comp[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      members.push_back(i);
      const int x = static_cast<int>(i % w);
      const int y = static_cast<int>(i / w);
      const std::size_t nbrs[4] = {x > 0 ? i - 1 : i, x + 1 < w ? i + 1 : i,
                                   y > 0 ? i - w : i, y + 1 < h ? i + w : i};
      for (std::size_t j : nbrs) {
        if (err[j] && comp[j] < 0) {
          comp[j] = 1;
          stack.push_back(j);
        }
      }
    }
    if (members.size() > best_members.size()) best_members = members;
  }
  if (best_members.empty()) return std::nullopt;

  std::sort(best_members.begin(), best_members.end());
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i : best_members) {
    sx += static_cast<double>(i % w);
    sy += static_cast<double>(i / w);
  }
  const double cx = sx / static_cast<double>(best_members.size());
  const double cy = sy / static_cast<double>(best_members.size());
  std::size_t best = best_members.front();
  double best_d = kInfinity;
  for (std::size_t i : best_members) {
    const double dx = static_cast<double>(i % w) - cx;
    const double dy = static_cast<double>(i / w) - cy;
    const double d = dx * dx + dy * dy;
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  const Point p{static_cast<int>(best % w), static_cast<int>(best / w)};
  return Correction{p, gt.at(p)};
}

std::optional<Correction> random_correction_click(const BinaryMask& pred,
                                                  const BinaryMask& gt, Rng& rng) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw Error(Errc::kShape, "random_correction_click: mask dimensions differ");
  }
  std::vector<std::size_t> errors;
  for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
    if (pred.bits()[i] != gt.bits()[i]) errors.push_back(i);
  }
  if (errors.empty()) return std::nullopt;
  const std::size_t i = errors[rng.index(errors.size())];
  const Point p{static_cast<int>(i % gt.width()), static_cast<int>(i / gt.width())};
  return Correction{p, gt.at(p)};
}

ClickSet simulate_initial_clicks(const BinaryMask& gt,
                                 std::span<const BinaryMask> other_instances,
                                 const SamplingConfig& cfg, Rng& rng) {
  ClickSet clicks;
  clicks.positives = sample_positive_clicks(gt, cfg, rng).clicks;
  const bool use_others = !other_instances.empty() && rng.uniform() < 0.5;
  auto neg = sample_negative_clicks(
      gt, other_instances,
      use_others ? NegativeStrategy::kOtherObjects : NegativeStrategy::kBackground, cfg, rng);
  clicks.negatives = std::move(neg.clicks);
  return clicks;
}

ClickSet add_iteration_clicks(ClickSet clicks, const BinaryMask& pred, const BinaryMask& gt,
                              const SamplingConfig& cfg, Rng& rng) {
  cfg.validate();
  for (int t = 0; t < cfg.n_iter; ++t) {
    const auto c = random_correction_click(pred, gt, rng);
    if (!c) break;
    auto& list = c->positive ? clicks.positives : clicks.negatives;
    if (!list.empty() && rng.uniform() < cfg.replace_prob) {
      list[rng.index(list.size())] = c->pixel;
    } else {
      list.push_back(c->pixel);
    }
  }
  return clicks;
}

// Reference segmenter ----------------------------------------------------------

namespace {

struct DistancePair {
  const GuidanceChannel* pos = nullptr;
  const GuidanceChannel* neg = nullptr;
  bool gaussian = false;  // values are proximities, not distances
};

DistancePair find_distance_pair(const GuidanceStack& stack) {
  using K = ChannelKind;
  const std::pair<K, K> order[] = {{K::kSpPosScaled, K::kSpNegScaled},
                                   {K::kSpPos, K::kSpNeg},
                                   {K::kEuclideanPos, K::kEuclideanNeg},
                                   {K::kGaussianPos, K::kGaussianNeg}};
  for (auto [p, n] : order) {
    const auto* pos = stack.find(p);
    const auto* neg = stack.find(n);
    if (pos != nullptr && neg != nullptr) {
      return DistancePair{pos, neg, p == K::kGaussianPos};
    }
  }
  throw Error(Errc::kConfiguration,
              "reference segmenter needs a positive/negative distance channel pair");
}

}  // namespace

BinaryMask reference_segmenter(const Scene& scene, const GuidanceStack& stack,
                               const ReferenceSegmenterConfig& config) {
  if (!scene.partition) throw Error(Errc::kConfiguration, "reference segmenter needs a partition");
  const auto& partition = *scene.partition;
  if (stack.width() != scene.width() || stack.height() != scene.height()) {
    throw Error(Errc::kShape, "guidance stack does not match the image");
  }
  const DistancePair pair = find_distance_pair(stack);
  const GuidanceChannel* obj = stack.find(ChannelKind::kObjectScaled);
  if (obj == nullptr) obj = stack.find(ChannelKind::kObject);

  const auto count = static_cast<std::size_t>(partition.count());
  const auto labels = partition.labels();
  const auto sizes = partition.sizes();
  std::vector<double> pos(count, 0.0);
  std::vector<double> neg(count, 0.0);
  std::vector<double> objv(count, 0.0);
  std::vector<Lab> color(count);
  std::vector<std::uint8_t> pos_clicked(count, 0);
  std::vector<std::uint8_t> neg_clicked(count, 0);
  const auto pv = pair.pos->values();
  const auto nv = pair.neg->values();
  const double clicked_value = pair.gaussian ? 255.0 : 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto s = static_cast<std::size_t>(labels[i]);
    pos[s] += pair.gaussian ? 255.0 - pv[i] : pv[i];
    neg[s] += pair.gaussian ? 255.0 - nv[i] : nv[i];
    if (obj != nullptr) objv[s] += obj->values()[i];
    color[s].l += scene.lab.l[i];
    color[s].a += scene.lab.a[i];
    color[s].b += scene.lab.b[i];
    if (pv[i] == clicked_value) pos_clicked[s] = 1;
    if (nv[i] == clicked_value) neg_clicked[s] = 1;
  }
  std::vector<std::size_t> pos_ids;
  std::vector<std::size_t> neg_ids;
  for (std::size_t s = 0; s < count; ++s) {
    const double m = static_cast<double>(sizes[s]);
    pos[s] /= m;
    neg[s] /= m;
    objv[s] /= m;
    color[s].l /= m;
    color[s].a /= m;
    color[s].b /= m;
    if (pos_clicked[s]) pos_ids.push_back(s);
    if (neg_clicked[s]) neg_ids.push_back(s);
  }

  auto similarity = [&](std::size_t s, const std::vector<std::size_t>& ids) {
    if (ids.empty()) return config.missing_similarity;
    double best = 0.0;
    for (std::size_t c : ids) {
      const double d = lab_distance(color[s], color[c]) / config.color_scale;
      best = std::max(best, std::exp(-d * d));
    }
    return best;
  };
  const bool use_distance = !config.distance_needs_both || (!pos_ids.empty() && !neg_ids.empty());

  std::vector<std::uint8_t> fg(count, 0);
  for (std::size_t s = 0; s < count; ++s) {
    if (pos_clicked[s] != neg_clicked[s]) {
      fg[s] = pos_clicked[s];
      continue;
    }
    double score = config.w_color * (similarity(s, pos_ids) - similarity(s, neg_ids));
    if (use_distance) score += config.w_distance * (neg[s] - pos[s]) / 255.0;
    if (obj != nullptr) score += config.w_object * (objv[s] / 255.0 - config.object_offset);
    fg[s] = score > 0.0 ? 1 : 0;
  }
  std::vector<std::uint8_t> bits(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) bits[i] = fg[labels[i]];
  return BinaryMask(scene.width(), scene.height(), std::move(bits));
}

BinaryMask ReferenceSegmenter::predict(const Scene& scene, const GuidanceStack& stack) {
  return reference_segmenter(scene, stack, config_);
}

// Sessions ---------------------------------------------------------------------

int SessionState::noc(int budget) const {
  if (!reached_target) return budget;
  return static_cast<int>(trace.size());
}

SessionState run_session(const Scene& scene, const BinaryMask& gt, Segmenter& segmenter,
                         const SessionConfig& config) {
  if (config.budget < 1) throw Error(Errc::kParameter, "click budget must be at least 1");
  if (gt.width() != scene.width() || gt.height() != scene.height()) {
    throw Error(Errc::kShape, "ground truth does not match the image");
  }
  if (gt.empty()) throw Error(Errc::kEmptyObject, "ground-truth object is empty");

  SessionState state;
  state.prev_mask = BinaryMask(scene.width(), scene.height());
  if (config.scale_mode == ScaleMode::kGroundTruth) {
    state.scale = scale_from_mask(gt, config.factors);
  }
  Rng rng(config.seed);

  auto predict = [&]() -> std::optional<BinaryMask> {
    try {
      const auto stack = assemble_stack(scene, state.clicks, state.scale, &state.prev_mask,
                                        config.layout, config.guidance);
      BinaryMask pred = segmenter.predict(scene, stack);
      if (pred.width() != scene.width() || pred.height() != scene.height()) {
        throw Error(Errc::kShape, "segmenter returned a mask of the wrong size");
      }
      return pred;
    } catch (const std::exception& e) {
      state.error = e.what();
      return std::nullopt;
    }
  };

  if (config.zero_click_prediction) {
    auto pred = predict();
    if (!pred) return state;
    state.initial_miou = miou(*pred, gt);
    state.prev_mask = std::move(*pred);
    if (*state.initial_miou >= config.iou_target) {
      state.reached_target = true;
      return state;
    }
  }

  while (state.click_budget_used < config.budget) {
    Correction next;
    if (state.clicks.empty() && !config.zero_click_prediction) {
      next = Correction{interior_point(gt), true};
    } else {
      const auto c = config.policy == ClickPolicy::kDeterministic
                         ? correction_click(state.prev_mask, gt)
                         : random_correction_click(state.prev_mask, gt, rng);
      if (!c) {
        state.reached_target = true;
        break;
      }
      next = *c;
    }
    (next.positive ? state.clicks.positives : state.clicks.negatives).push_back(next.pixel);
    ++state.click_budget_used;

    if (config.scale_mode == ScaleMode::kEstimated && !state.scale &&
        !state.clicks.positives.empty() && !state.clicks.negatives.empty()) {
      try {
        state.scale = estimate_scale(state.clicks.positives.front(),
                                     state.clicks.negatives.front(), config.factors);
      } catch (const Error&) {
        // Coincident first pair: stay scale-agnostic.
      }
    }

    auto pred = predict();
    if (!pred) break;
    const double iou = miou(*pred, gt);
    state.trace.push_back(TraceRecord{state.click_budget_used, next.pixel, next.positive, iou});
    state.prev_mask = std::move(*pred);
    if (iou >= config.iou_target) {
      state.reached_target = true;
      break;
    }
  }
  return state;
}

std::string trace_to_jsonl(const SessionState& state) {
  std::string out;
  for (const auto& r : state.trace) {
    nlohmann::ordered_json j;
    j["index"] = r.index;
    j["x"] = r.click.x;
    j["y"] = r.click.y;
    j["polarity"] = r.positive ? "positive" : "negative";
    j["miou"] = r.miou;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace guidemap
