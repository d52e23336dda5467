#include "guidemap/superpixels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "guidemap/error.hpp"
#include "guidemap/imaging.hpp"
#include "guidemap/simd/kernels.hpp"

namespace guidemap {

SuperpixelPartition SuperpixelPartition::from_labels(
    int width, int height, std::vector<std::int32_t> labels) {
  if (width < 1 || height < 1 ||
      labels.size() != static_cast<std::size_t>(width) * height) {
    throw Error(Errc::kShape, "label grid does not match dimensions");
  }
  std::int32_t max_id = -1;
  for (std::int32_t id : labels) {
    if (id < 0) throw Error(Errc::kShape, "negative superpixel id");
    max_id = std::max(max_id, id);
  }
  const std::size_t count = static_cast<std::size_t>(max_id) + 1;

  SuperpixelPartition p;
  p.width_ = width;
  p.height_ = height;
  p.sizes_.assign(count, 0);
  std::vector<std::int64_t> sum_x(count, 0);
  std::vector<std::int64_t> sum_y(count, 0);
  std::vector<std::set<std::int32_t>> adj(count);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::int32_t id = labels[static_cast<std::size_t>(y) * width + x];
      ++p.sizes_[id];
      sum_x[id] += x;
      sum_y[id] += y;
      if (x + 1 < width) {
        const std::int32_t r = labels[static_cast<std::size_t>(y) * width + x + 1];
        if (r != id) {
          adj[id].insert(r);
          adj[r].insert(id);
        }
      }
      if (y + 1 < height) {
        const std::int32_t d = labels[static_cast<std::size_t>(y + 1) * width + x];
        if (d != id) {
          adj[id].insert(d);
          adj[d].insert(id);
        }
      }
    }
  }
  p.centroids_.resize(count);
  p.adjacency_.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (p.sizes_[i] == 0) {
      throw Error(Errc::kShape, "superpixel id " + std::to_string(i) + " has no pixels");
    }
    const double size = static_cast<double>(p.sizes_[i]);
    p.centroids_[i] = Centroid{static_cast<double>(sum_x[i]) / size,
                               static_cast<double>(sum_y[i]) / size};
    p.adjacency_[i].assign(adj[i].begin(), adj[i].end());
  }
  p.labels_ = std::move(labels);
  return p;
}

SuperpixelPartition SuperpixelPartition::single_pixel(int width, int height) {
  if (width < 1 || height < 1) throw Error(Errc::kShape, "empty grid");
  std::vector<std::int32_t> labels(static_cast<std::size_t>(width) * height);
  std::iota(labels.begin(), labels.end(), 0);
  return from_labels(width, height, std::move(labels));
}

bool SuperpixelPartition::is_four_connected() const {
  std::vector<std::uint8_t> seen(labels_.size(), 0);
  std::vector<std::uint8_t> started(sizes_.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < labels_.size(); ++start) {
    if (seen[start]) continue;
    const std::int32_t id = labels_[start];
    if (started[id]) return false;  // second component with the same id
    started[id] = 1;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(i % width_);
      const int y = static_cast<int>(i / width_);
      const std::size_t nbrs[4] = {
          x > 0 ? i - 1 : i, x + 1 < width_ ? i + 1 : i,
          y > 0 ? i - width_ : i, y + 1 < height_ ? i + width_ : i};
      for (std::size_t j : nbrs) {
        if (!seen[j] && labels_[j] == id) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
  }
  return true;
}

std::int32_t pixel_to_superpixel(const SuperpixelPartition& partition, Point p) {
  check_in_bounds(p, partition.width(), partition.height());
  return partition.label(p.x, p.y);
}

namespace {

struct UnionFind {
  std::vector<std::int32_t> parent;
  std::vector<std::int64_t> size;

  explicit UnionFind(std::span<const std::int64_t> sizes)
      : parent(sizes.size()), size(sizes.begin(), sizes.end()) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::int32_t find(std::int32_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void merge_into(std::int32_t from, std::int32_t into) {
    parent[from] = into;
    size[into] += size[from];
  }
};

// Splits labels into 4-connected components, then folds components smaller
// than min_size into their largest neighbouring component. Output ids are
// assigned in raster order of first appearance.
std::vector<std::int32_t> enforce_connectivity(int width, int height,
                                               std::span<const std::int32_t> labels,
                                               double min_size) {
  const std::size_t n = labels.size();
  std::vector<std::int32_t> comp(n, -1);
  std::vector<std::int64_t> comp_size;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    const auto id = static_cast<std::int32_t>(comp_size.size());
    const std::int32_t label = labels[start];
    std::int64_t size = 0;
    comp[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(i % width);
      const int y = static_cast<int>(i / width);
      const std::size_t nbrs[4] = {x > 0 ? i - 1 : i, x + 1 < width ? i + 1 : i,
                                   y > 0 ? i - width : i,
                                   y + 1 < height ? i + width : i};
      for (std::size_t j : nbrs) {
        if (comp[j] < 0 && labels[j] == label) {
          comp[j] = id;
          stack.push_back(j);
        }
      }
    }
    comp_size.push_back(size);
  }

  const std::size_t ncomp = comp_size.size();
  std::vector<std::set<std::int32_t>> adj(ncomp);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (x + 1 < width && comp[i] != comp[i + 1]) {
        adj[comp[i]].insert(comp[i + 1]);
        adj[comp[i + 1]].insert(comp[i]);
      }
      if (y + 1 < height && comp[i] != comp[i + width]) {
        adj[comp[i]].insert(comp[i + width]);
        adj[comp[i + width]].insert(comp[i]);
      }
    }
  }

  UnionFind uf(comp_size);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::int32_t c = 0; c < static_cast<std::int32_t>(ncomp); ++c) {
      if (uf.find(c) != c || static_cast<double>(uf.size[c]) >= min_size) continue;
      // adj[c] holds the raw neighbours of the whole group rooted at c.
      std::int32_t best = -1;
      for (std::int32_t nb : adj[c]) {
        const std::int32_t r = uf.find(nb);
        if (r == c) continue;
        if (best < 0 || uf.size[r] > uf.size[best] ||
            (uf.size[r] == uf.size[best] && r < best)) {
          best = r;
        }
      }
      if (best >= 0) {
        uf.merge_into(c, best);
        adj[best].merge(adj[c]);
        adj[c].clear();
        changed = true;
      }
    }
  }

  std::vector<std::int32_t> remap(ncomp, -1);
  std::vector<std::int32_t> out(n);
  std::int32_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t r = uf.find(comp[i]);
    if (remap[r] < 0) remap[r] = next++;
    out[i] = remap[r];
  }
  return out;
}

}  // namespace

SuperpixelPartition slic(const ImageBuffer& image, const SlicParams& params) {
  return slic(to_lab(image), params);
}

SuperpixelPartition slic(const LabImage& lab, const SlicParams& params) {
  const int w = lab.width;
  const int h = lab.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (w < 1 || h < 1 || lab.l.size() != n) {
    throw Error(Errc::kShape, "slic: malformed lab image");
  }
  if (params.k < 1 || static_cast<std::size_t>(params.k) > n) {
    throw Error(Errc::kParameter, "slic: k must lie in [1, width*height], got " +
                                      std::to_string(params.k));
  }
  if (!(params.compactness > 0.0)) {
    throw Error(Errc::kParameter, "slic: compactness must be positive");
  }
  if (params.iterations < 0) {
    throw Error(Errc::kParameter, "slic: iterations must be non-negative");
  }

  const double k = params.k;
  int nx = static_cast<int>(std::lround(std::sqrt(k * w / h)));
  nx = std::clamp(nx, 1, w);
  int ny = static_cast<int>(std::lround(k / nx));
  ny = std::clamp(ny, 1, h);
  if (nx == w && ny == h) return SuperpixelPartition::single_pixel(w, h);

  // Grid seeding: cell (i,j) spans [i*w/nx, (i+1)*w/nx) x [j*h/ny, (j+1)*h/ny).
  const int ncenters = nx * ny;
  std::vector<std::int32_t> labels(n);
  for (int y = 0; y < h; ++y) {
    const int cj = static_cast<int>(static_cast<std::int64_t>(y) * ny / h);
    for (int x = 0; x < w; ++x) {
      const int ci = static_cast<int>(static_cast<std::int64_t>(x) * nx / w);
      labels[static_cast<std::size_t>(y) * w + x] = cj * nx + ci;
    }
  }

  std::vector<simd::SlicCenter> centers(ncenters);
  auto update_centers = [&] {
    std::vector<double> acc(static_cast<std::size_t>(ncenters) * 5, 0.0);
    std::vector<std::int64_t> cnt(ncenters, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        double* a = acc.data() + 5 * static_cast<std::size_t>(labels[i]);
        a[0] += lab.l[i];
        a[1] += lab.a[i];
        a[2] += lab.b[i];
        a[3] += x;
        a[4] += y;
        ++cnt[labels[i]];
      }
    }
    for (int c = 0; c < ncenters; ++c) {
      if (cnt[c] == 0) continue;
      const double* a = acc.data() + 5 * static_cast<std::size_t>(c);
      const double m = static_cast<double>(cnt[c]);
      centers[c] = simd::SlicCenter{static_cast<float>(a[0] / m), static_cast<float>(a[1] / m),
                                    static_cast<float>(a[2] / m), static_cast<float>(a[3] / m),
                                    static_cast<float>(a[4] / m)};
    }
  };
  update_centers();

  const double step = std::sqrt(static_cast<double>(n) / ncenters);
  const float spatial_weight =
      static_cast<float>((params.compactness / step) * (params.compactness / step));
  const int radius = static_cast<int>(std::ceil(std::max(
      static_cast<double>(w) / nx, static_cast<double>(h) / ny)));
  const auto& kern = simd::kernels();
  std::vector<float> dist(n);
  for (int it = 0; it < params.iterations; ++it) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<float>::infinity());
    for (int c = 0; c < ncenters; ++c) {
      const auto& ctr = centers[c];
      const int cx = static_cast<int>(std::lround(ctr.x));
      const int cy = static_cast<int>(std::lround(ctr.y));
      const int x0 = std::max(0, cx - radius);
      const int x1 = std::min(w, cx + radius + 1);
      const int y0 = std::max(0, cy - radius);
      const int y1 = std::min(h, cy + radius + 1);
      for (int y = y0; y < y1; ++y) {
        const float dy = static_cast<float>(y) - ctr.y;
        const std::size_t row = static_cast<std::size_t>(y) * w;
        kern.slic_assign_span(lab.l.data() + row, lab.a.data() + row,
                              lab.b.data() + row, x0, x1 - x0, dy * dy, ctr,
                              spatial_weight, dist.data() + row,
                              labels.data() + row, c);
      }
    }
    update_centers();
  }

  const double min_size = static_cast<double>(n) / (4.0 * k);
  auto final_labels = enforce_connectivity(w, h, labels, min_size);
  return SuperpixelPartition::from_labels(w, h, std::move(final_labels));
}

}  // namespace guidemap
