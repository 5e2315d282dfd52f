#include "cssm/signal_types.hpp"

#include <algorithm>

namespace cssm {

std::vector<std::uint32_t> LabeledDataset::distinct_groups() const {
  std::vector<std::uint32_t> g = group_ids;
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

std::vector<std::size_t> FoldSplit::sample_indices(
    const LabeledDataset& ds, const std::vector<std::uint32_t>& groups) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (std::find(groups.begin(), groups.end(), ds.group_ids[i]) != groups.end()) {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace cssm
