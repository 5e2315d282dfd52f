#pragma once

#include <cstdint>
#include <vector>

#include "cssm/signal_types.hpp"

namespace cssm {

// Grouped k-fold split. Distinct group keys are shuffled once by a seeded
// permutation, then:
//
//  - default mode (test_share == 0): the shuffled groups are partitioned into
//    k blocks as evenly as possible, remainders going to the earliest folds.
//    Fold i uses block i as test, block (i+1) mod k as val and the rest as
//    train.
//  - explicit mode (test_share > 0): fold i takes test_share groups starting
//    at offset i*test_share (mod group count) as test and the following
//    val_share groups as val. This reproduces protocols whose held-out counts
//    are not n/k (e.g. 5 of 54 groups per fold with k=8).
//
// Within every fold train/val/test are disjoint at the group level.
std::vector<FoldSplit> kfold_split(const LabeledDataset& ds, std::size_t k,
                                   std::uint64_t seed, std::size_t test_share = 0,
                                   std::size_t val_share = 0);

}  // namespace cssm
