#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "guidemap/color.hpp"
#include "guidemap/superpixels.hpp"
#include "guidemap/types.hpp"

namespace guidemap {

/// A region hypothesis. Its pixel support is the union of the listed
/// superpixels of the generating partition.
struct Proposal {
  std::vector<std::int32_t> members;  // sorted superpixel ids
  std::int64_t area = 0;              // pixel count of the support
};

class ProposalSet {
 public:
  ProposalSet() = default;
  /// Validates member ids, areas, and that no two supports coincide.
  ProposalSet(std::shared_ptr<const SuperpixelPartition> partition,
              std::vector<Proposal> proposals);

  const SuperpixelPartition& partition() const noexcept { return *partition_; }
  std::shared_ptr<const SuperpixelPartition> partition_ptr() const noexcept {
    return partition_;
  }
  std::span<const Proposal> proposals() const noexcept { return proposals_; }
  std::size_t size() const noexcept { return proposals_.size(); }

  /// Indices of proposals whose support contains superpixel `id`, ascending.
  std::span<const std::int32_t> containing(std::int32_t id) const noexcept {
    return containing_[static_cast<std::size_t>(id)];
  }

  bool contains(std::size_t proposal, Point p) const;
  BinaryMask support_mask(std::size_t proposal) const;

 private:
  std::shared_ptr<const SuperpixelPartition> partition_;
  std::vector<Proposal> proposals_;
  std::vector<std::vector<std::int32_t>> containing_;
};

/// Hierarchical agglomerative merging over the superpixel adjacency graph.
/// At each step the adjacent pair with the closest mean CIELAB colour merges
/// (ties: smaller combined area, then lower region ids). All singletons come
/// first, then every merged region in merge order, truncated to
/// `max_proposals` (default 2 * superpixel count).
ProposalSet generate_proposals(const ImageBuffer& image,
                               std::shared_ptr<const SuperpixelPartition> partition,
                               std::optional<std::size_t> max_proposals = std::nullopt);
ProposalSet generate_proposals(const LabImage& lab,
                               std::shared_ptr<const SuperpixelPartition> partition,
                               std::optional<std::size_t> max_proposals = std::nullopt);

/// Indices of the proposals whose support contains `p`, ascending.
std::vector<std::size_t> proposals_at(const ProposalSet& set, Point p);

}  // namespace guidemap
