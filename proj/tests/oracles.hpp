#pragma once

// Direct-summation reference computations and random fixtures shared by the
// unit tests and the acceptance runner. Deliberately naive: every value is
// computed per pixel from first principles, independent of the library's
// superpixel tables and proposal indices.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "guidemap/proposals.hpp"
#include "guidemap/superpixels.hpp"
#include "guidemap/types.hpp"

namespace oracle {

using guidemap::Point;

struct Fixture {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;
  int count = 0;
  std::vector<std::vector<std::int32_t>> proposals;  // sorted member lists
};

/// Random 4-connected partition grown from random seeds.
inline std::vector<std::int32_t> random_labels(std::mt19937_64& rng, int w, int h, int& count) {
  const int seeds = 1 + static_cast<int>(rng() % std::max(1, w * h / 2));
  std::vector<std::int32_t> labels(static_cast<std::size_t>(w) * h, -1);
  std::vector<std::size_t> frontier;
  for (int s = 0; s < seeds; ++s) {
    const std::size_t i = rng() % labels.size();
    if (labels[i] < 0) {
      labels[i] = s;
      frontier.push_back(i);
    }
  }
  while (!frontier.empty()) {
    const std::size_t pick = rng() % frontier.size();
    const std::size_t i = frontier[pick];
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    const int nx[] = {x - 1, x + 1, x, x};
    const int ny[] = {y, y, y - 1, y + 1};
    const int start = static_cast<int>(rng() % 4);
    bool grew = false;
    for (int r = 0; r < 4 && !grew; ++r) {
      const int k = (start + r) % 4;
      if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
      const std::size_t j = static_cast<std::size_t>(ny[k]) * w + nx[k];
      if (labels[j] < 0) {
        labels[j] = labels[i];
        frontier.push_back(j);
        grew = true;
      }
    }
    if (!grew) {
      frontier[pick] = frontier.back();
      frontier.pop_back();
    }
  }
  std::vector<std::int32_t> remap(seeds, -1);
  count = 0;
  for (auto& l : labels) {
    if (remap[l] < 0) remap[l] = count++;
    l = remap[l];
  }
  return labels;
}

/// Partition plus an arbitrary enumerated proposal list: all singletons and
/// random unions of superpixels (no structure assumed).
inline Fixture random_fixture(std::mt19937_64& rng, int max_side = 16) {
  Fixture f;
  f.width = 1 + static_cast<int>(rng() % max_side);
  f.height = 1 + static_cast<int>(rng() % max_side);
  f.labels = random_labels(rng, f.width, f.height, f.count);
  std::set<std::vector<std::int32_t>> seen;
  for (int i = 0; i < f.count; ++i) seen.insert({i});
  const int extra = static_cast<int>(rng() % (2 * f.count + 1));
  for (int e = 0; e < extra; ++e) {
    std::vector<std::int32_t> members;
    const double keep = 0.1 + 0.8 * std::uniform_real_distribution<double>()(rng);
    for (int i = 0; i < f.count; ++i) {
      if (std::uniform_real_distribution<double>()(rng) < keep) members.push_back(i);
    }
    if (!members.empty()) seen.insert(members);
  }
  f.proposals.assign(seen.begin(), seen.end());
  std::shuffle(f.proposals.begin(), f.proposals.end(), rng);
  return f;
}

inline std::vector<Point> random_points(std::mt19937_64& rng, int w, int h, int max_n) {
  std::vector<Point> pts(rng() % (max_n + 1));
  for (auto& p : pts) p = {static_cast<int>(rng() % w), static_cast<int>(rng() % h)};
  return pts;
}

inline std::shared_ptr<const guidemap::SuperpixelPartition> make_partition(const Fixture& f) {
  return std::make_shared<guidemap::SuperpixelPartition>(
      guidemap::SuperpixelPartition::from_labels(f.width, f.height, f.labels));
}

inline guidemap::ProposalSet make_proposals(
    const Fixture& f, std::shared_ptr<const guidemap::SuperpixelPartition> partition) {
  std::vector<guidemap::Proposal> props;
  for (const auto& members : f.proposals) {
    std::int64_t area = 0;
    for (auto l : f.labels) area += std::binary_search(members.begin(), members.end(), l);
    props.push_back({members, area});
  }
  return guidemap::ProposalSet(std::move(partition), std::move(props));
}

/// Centroid of the superpixel containing pixel (x, y), from a full scan.
inline std::pair<double, double> centroid_of(const Fixture& f, int x, int y) {
  const std::int32_t l = f.labels[static_cast<std::size_t>(y) * f.width + x];
  double sx = 0, sy = 0;
  std::int64_t n = 0;
  for (int v = 0; v < f.height; ++v) {
    for (int u = 0; u < f.width; ++u) {
      if (f.labels[static_cast<std::size_t>(v) * f.width + u] == l) {
        sx += u;
        sy += v;
        ++n;
      }
    }
  }
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

/// Raw superpixel distance per pixel: min over clicks of the distance
/// between the centroid of the pixel's superpixel and the click's.
inline std::vector<double> sp_raw(const Fixture& f, const std::vector<Point>& clicks) {
  std::vector<double> out(f.labels.size(), std::numeric_limits<double>::infinity());
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const auto [px, py] = centroid_of(f, x, y);
      for (Point c : clicks) {
        const auto [cx, cy] = centroid_of(f, c.x, c.y);
        const double dx = px - cx, dy = py - cy;
        auto& o = out[static_cast<std::size_t>(y) * f.width + x];
        o = std::min(o, std::sqrt(dx * dx + dy * dy));
      }
    }
  }
  return out;
}

inline bool in_proposal(const Fixture& f, const std::vector<std::int32_t>& members, int x, int y) {
  const std::int32_t l = f.labels[static_cast<std::size_t>(y) * f.width + x];
  return std::find(members.begin(), members.end(), l) != members.end();
}

inline std::int64_t proposal_area(const Fixture& f, const std::vector<std::int32_t>& members) {
  std::int64_t a = 0;
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) a += in_proposal(f, members, x, y);
  }
  return a;
}

struct SizeBand {
  double s, f1, f2;
};

/// Σ over positives c, Σ over proposals L containing c: [p ∈ L] (and the
/// size band when given).
inline std::vector<double> object_raw(const Fixture& f, const std::vector<Point>& positives,
                                      std::optional<SizeBand> band = std::nullopt) {
  std::vector<double> out(f.labels.size(), 0.0);
  for (const auto& members : f.proposals) {
    if (band) {
      const double ratio = static_cast<double>(proposal_area(f, members)) / (band->s * band->s);
      if (!(band->f1 <= ratio && ratio <= band->f2)) continue;
    }
    for (Point c : positives) {
      if (!in_proposal(f, members, c.x, c.y)) continue;
      for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
          out[static_cast<std::size_t>(y) * f.width + x] += in_proposal(f, members, x, y);
        }
      }
    }
  }
  return out;
}

inline std::vector<double> rescale(std::vector<double> raw) {
  double m = 0.0;
  for (double v : raw) m = std::max(m, v);
  for (double& v : raw) v = m == 0.0 ? 0.0 : v / m * 255.0;
  return raw;
}

inline std::vector<double> saturate(std::vector<double> raw, double cap) {
  for (double& v : raw) v = std::min(v, cap);
  return raw;
}

// Superpixel fixtures -------------------------------------------------------------------

inline guidemap::ImageBuffer noise_image(std::mt19937_64& rng, int w, int h) {
  guidemap::ImageBuffer img(w, h);
  for (auto& v : img.rgb()) v = static_cast<std::uint8_t>(rng() % 256);
  return img;
}

// A few flat-coloured discs on a gradient: the kind of content SLIC targets.
inline guidemap::ImageBuffer blob_image(std::mt19937_64& rng, int w, int h) {
  guidemap::ImageBuffer img(w, h);
  struct Disc {
    double x, y, r;
    std::uint8_t c[3];
  };
  std::vector<Disc> discs(3 + rng() % 4);
  for (auto& d : discs) {
    d = {double(rng() % w), double(rng() % h), 4.0 + double(rng() % (w / 3)), {}};
    for (auto& c : d.c) c = static_cast<std::uint8_t>(rng() % 256);
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t r = static_cast<std::uint8_t>(x * 255 / w), g = 90,
                   b = static_cast<std::uint8_t>(y * 255 / h);
      for (const auto& d : discs) {
        if (std::hypot(x - d.x, y - d.y) <= d.r) {
          r = d.c[0];
          g = d.c[1];
          b = d.c[2];
        }
      }
      img.set(x, y, r, g, b);
    }
  }
  return img;
}

// Independent check of every partition invariant; returns the number of violations.
inline int count_violations(const guidemap::SuperpixelPartition& p) {
  int violations = 0;
  const int w = p.width(), h = p.height(), n = p.count();
  const auto labels = p.labels();
  if (labels.size() != static_cast<std::size_t>(w) * h) return 1;
  std::vector<std::int64_t> size(n, 0);
  std::vector<double> sx(n, 0), sy(n, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int l = labels[y * w + x];
      if (l < 0 || l >= n) {
        ++violations;
        continue;
      }
      ++size[l];
      sx[l] += x;
      sy[l] += y;
    }
  }
  std::int64_t total = 0;
  for (int i = 0; i < n; ++i) {
    total += p.sizes()[i];
    if (size[i] == 0 || size[i] != p.sizes()[i]) ++violations;
    if (size[i] > 0 && (p.centroids()[i].x != sx[i] / double(size[i]) ||
                        p.centroids()[i].y != sy[i] / double(size[i]))) {
      ++violations;
    }
  }
  if (total != static_cast<std::int64_t>(w) * h) ++violations;
  // 4-connectivity by flood fill from the first pixel of every label.
  std::vector<char> seen(labels.size(), 0);
  std::vector<char> label_done(n, 0);
  for (std::size_t start = 0; start < labels.size(); ++start) {
    const int l = labels[start];
    if (l < 0 || l >= n || label_done[l]) continue;
    label_done[l] = 1;
    std::int64_t reached = 0;
    std::queue<std::size_t> q;
    q.push(start);
    seen[start] = 1;
    while (!q.empty()) {
      const std::size_t i = q.front();
      q.pop();
      ++reached;
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      const int nx[] = {x - 1, x + 1, x, x};
      const int ny[] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
        const std::size_t j = static_cast<std::size_t>(ny[k]) * w + nx[k];
        if (!seen[j] && labels[j] == l) {
          seen[j] = 1;
          q.push(j);
        }
      }
    }
    if (reached != size[l]) ++violations;
  }
  // Adjacency must be exactly the set of 4-neighbouring label pairs.
  std::vector<std::set<int>> adj(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int l = labels[y * w + x];
      if (x + 1 < w && labels[y * w + x + 1] != l) {
        adj[l].insert(labels[y * w + x + 1]);
        adj[labels[y * w + x + 1]].insert(l);
      }
      if (y + 1 < h && labels[(y + 1) * w + x] != l) {
        adj[l].insert(labels[(y + 1) * w + x]);
        adj[labels[(y + 1) * w + x]].insert(l);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    const auto& a = p.adjacency()[i];
    if (std::set<int>(a.begin(), a.end()) != adj[i]) ++violations;
  }
  return violations;
}

}  // namespace oracle
