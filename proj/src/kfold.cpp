#include "cssm/kfold.hpp"

#include <algorithm>

#include "cssm/rng.hpp"

namespace cssm {

std::vector<FoldSplit> kfold_split(const LabeledDataset& ds, std::size_t k,
                                   std::uint64_t seed, std::size_t test_share,
                                   std::size_t val_share) {
  ds.validate();
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  std::vector<std::uint32_t> groups = ds.distinct_groups();
  const std::size_t n = groups.size();
  if (n < k) throw ConfigError("k exceeds the number of distinct groups");

  Pcg32 rng(seed, /*stream=*/0xf01d);
  seeded_shuffle(groups, rng);

  if (test_share == 0) {
    if (val_share != 0) throw ConfigError("val share given without test share");
  } else {
    if (val_share == 0) val_share = test_share;
    if (test_share + val_share >= n) throw ConfigError("held-out shares exhaust all groups");
  }

  std::vector<FoldSplit> folds(k);

  if (test_share == 0) {
    // even block partition, remainders to the earliest folds
    std::vector<std::size_t> offset(k + 1, 0);
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t size = n / k + (i < n % k ? 1 : 0);
      offset[i + 1] = offset[i] + size;
    }
    for (std::size_t i = 0; i < k; ++i) {
      FoldSplit& f = folds[i];
      f.fold_index = i;
      std::size_t j = (i + 1) % k;
      f.test_groups.assign(groups.begin() + offset[i], groups.begin() + offset[i + 1]);
      f.val_groups.assign(groups.begin() + offset[j], groups.begin() + offset[j + 1]);
      for (std::size_t g = 0; g < n; ++g) {
        if ((g >= offset[i] && g < offset[i + 1]) || (g >= offset[j] && g < offset[j + 1])) {
          continue;
        }
        f.train_groups.push_back(groups[g]);
      }
      if (f.train_groups.empty()) throw ConfigError("fold has no training groups");
    }
    return folds;
  }

  for (std::size_t i = 0; i < k; ++i) {
    FoldSplit& f = folds[i];
    f.fold_index = i;
    std::vector<bool> held(n, false);
    for (std::size_t j = 0; j < test_share; ++j) {
      std::size_t idx = (i * test_share + j) % n;
      f.test_groups.push_back(groups[idx]);
      held[idx] = true;
    }
    for (std::size_t j = 0; j < val_share; ++j) {
      std::size_t idx = (i * test_share + test_share + j) % n;
      f.val_groups.push_back(groups[idx]);
      held[idx] = true;
    }
    for (std::size_t g = 0; g < n; ++g) {
      if (!held[g]) f.train_groups.push_back(groups[g]);
    }
    if (f.train_groups.empty()) throw ConfigError("fold has no training groups");
  }
  return folds;
}

}  // namespace cssm
