#include "guidemap/proposals.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <string>

#include "guidemap/error.hpp"
#include "guidemap/imaging.hpp"

namespace guidemap {

ProposalSet::ProposalSet(std::shared_ptr<const SuperpixelPartition> partition,
                         std::vector<Proposal> proposals)
    : partition_(std::move(partition)), proposals_(std::move(proposals)) {
  if (!partition_) throw Error(Errc::kShape, "proposal set needs a partition");
  const auto sizes = partition_->sizes();
  containing_.resize(sizes.size());
  std::set<std::vector<std::int32_t>> seen;
  for (std::size_t i = 0; i < proposals_.size(); ++i) {
    auto& prop = proposals_[i];
    if (prop.members.empty()) throw Error(Errc::kShape, "proposal with empty support");
    if (!std::is_sorted(prop.members.begin(), prop.members.end()) ||
        std::adjacent_find(prop.members.begin(), prop.members.end()) != prop.members.end()) {
      throw Error(Errc::kShape, "proposal members must be sorted and unique");
    }
    std::int64_t area = 0;
    for (std::int32_t m : prop.members) {
      if (m < 0 || static_cast<std::size_t>(m) >= sizes.size()) {
        throw Error(Errc::kShape, "proposal references unknown superpixel " + std::to_string(m));
      }
      area += sizes[m];
      containing_[m].push_back(static_cast<std::int32_t>(i));
    }
    if (area != prop.area) throw Error(Errc::kShape, "proposal area does not match its support");
    if (!seen.insert(prop.members).second) {
      throw Error(Errc::kShape, "duplicate proposal support");
    }
  }
}

bool ProposalSet::contains(std::size_t proposal, Point p) const {
  const std::int32_t id = pixel_to_superpixel(*partition_, p);
  const auto& m = proposals_.at(proposal).members;
  return std::binary_search(m.begin(), m.end(), id);
}

BinaryMask ProposalSet::support_mask(std::size_t proposal) const {
  const auto& m = proposals_.at(proposal).members;
  std::vector<std::uint8_t> in(partition_->sizes().size(), 0);
  for (std::int32_t id : m) in[id] = 1;
  const auto labels = partition_->labels();
  std::vector<std::uint8_t> bits(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) bits[i] = in[labels[i]];
  return BinaryMask(partition_->width(), partition_->height(), std::move(bits));
}

std::vector<std::size_t> proposals_at(const ProposalSet& set, Point p) {
  const std::int32_t id = pixel_to_superpixel(set.partition(), p);
  const auto c = set.containing(id);
  return {c.begin(), c.end()};
}

namespace {

struct Region {
  double sum_l = 0.0;
  double sum_a = 0.0;
  double sum_b = 0.0;
  std::int64_t area = 0;
  bool alive = true;
  std::set<std::int32_t> neighbours;
  std::vector<std::int32_t> members;

  Lab mean() const {
    const double m = static_cast<double>(area);
    return Lab{sum_l / m, sum_a / m, sum_b / m};
  }
};

struct Candidate {
  double distance;
  std::int64_t area;
  std::int32_t lo;
  std::int32_t hi;
};

// Ordering for a min-heap: "a after b".
struct After {
  bool operator()(const Candidate& a, const Candidate& b) const {
    if (a.distance != b.distance) return a.distance > b.distance;
    if (a.area != b.area) return a.area > b.area;
    if (a.lo != b.lo) return a.lo > b.lo;
    return a.hi > b.hi;
  }
};

}  // namespace

ProposalSet generate_proposals(const ImageBuffer& image,
                               std::shared_ptr<const SuperpixelPartition> partition,
                               std::optional<std::size_t> max_proposals) {
  return generate_proposals(to_lab(image), std::move(partition), max_proposals);
}

ProposalSet generate_proposals(const LabImage& lab,
                               std::shared_ptr<const SuperpixelPartition> partition,
                               std::optional<std::size_t> max_proposals) {
  if (!partition) throw Error(Errc::kShape, "generate_proposals: null partition");
  if (lab.width != partition->width() || lab.height != partition->height()) {
    throw Error(Errc::kShape, "generate_proposals: partition does not match image");
  }
  const auto count = static_cast<std::size_t>(partition->count());
  const std::size_t limit = max_proposals.value_or(2 * count);
  if (limit < count) {
    throw Error(Errc::kParameter,
                "max_proposals must be at least the superpixel count");
  }

  std::vector<Region> regions(count);
  regions.reserve(2 * count);
  const auto labels = partition->labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Region& r = regions[labels[i]];
    r.sum_l += lab.l[i];
    r.sum_a += lab.a[i];
    r.sum_b += lab.b[i];
    ++r.area;
  }
  const auto& adjacency = partition->adjacency();
  for (std::size_t i = 0; i < count; ++i) {
    regions[i].members = {static_cast<std::int32_t>(i)};
    regions[i].neighbours.insert(adjacency[i].begin(), adjacency[i].end());
  }

  std::vector<Proposal> out;
  out.reserve(std::min(limit, 2 * count));
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(Proposal{regions[i].members, regions[i].area});
  }

  std::priority_queue<Candidate, std::vector<Candidate>, After> heap;
  auto push_pair = [&](std::int32_t x, std::int32_t y) {
    const Region& a = regions[x];
    const Region& b = regions[y];
    heap.push(Candidate{lab_distance(a.mean(), b.mean()), a.area + b.area,
                        std::min(x, y), std::max(x, y)});
  };
  for (std::size_t i = 0; i < count; ++i) {
    for (std::int32_t j : adjacency[i]) {
      if (static_cast<std::size_t>(j) > i) push_pair(static_cast<std::int32_t>(i), j);
    }
  }

  while (out.size() < limit && !heap.empty()) {
    const Candidate c = heap.top();
    heap.pop();
    if (!regions[c.lo].alive || !regions[c.hi].alive) continue;
    const auto id = static_cast<std::int32_t>(regions.size());
    Region merged;
    {
      Region& a = regions[c.lo];
      Region& b = regions[c.hi];
      merged.sum_l = a.sum_l + b.sum_l;
      merged.sum_a = a.sum_a + b.sum_a;
      merged.sum_b = a.sum_b + b.sum_b;
      merged.area = a.area + b.area;
      std::merge(a.members.begin(), a.members.end(), b.members.begin(),
                 b.members.end(), std::back_inserter(merged.members));
      merged.neighbours = a.neighbours;
      merged.neighbours.insert(b.neighbours.begin(), b.neighbours.end());
      merged.neighbours.erase(c.lo);
      merged.neighbours.erase(c.hi);
      a.alive = false;
      b.alive = false;
      a.members.clear();
      b.members.clear();
      a.members.shrink_to_fit();
      b.members.shrink_to_fit();
    }
    for (std::int32_t nb : merged.neighbours) {
      regions[nb].neighbours.erase(c.lo);
      regions[nb].neighbours.erase(c.hi);
      regions[nb].neighbours.insert(id);
    }
    out.push_back(Proposal{merged.members, merged.area});
    regions.push_back(std::move(merged));
    for (std::int32_t nb : regions.back().neighbours) push_pair(nb, id);
  }
  return ProposalSet(std::move(partition), std::move(out));
}

}  // namespace guidemap
