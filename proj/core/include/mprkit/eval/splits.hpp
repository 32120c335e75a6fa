#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mprkit::eval {

struct Split {
  int rep = 0;
  int fold = 0;
  std::vector<std::string> train_patients;
  std::vector<std::string> test_patients;
  std::uint64_t init_seed = 0;
};

struct SplitPlan {
  int k = 0;
  int reps = 0;
  std::vector<Split> splits;  // rep-major, fold-minor
};

// Repeated patient-wise k-fold assignment. Patient ids are deduplicated and
// sorted first, so the plan depends only on the id set and the seed. Each
// repetition shuffles the patients with a seed derived from (master_seed,
// rep) and cuts contiguous folds whose sizes differ by at most one; a
// split's init_seed is derived from (master_seed, rep, fold).
SplitPlan make_splits(std::vector<std::string> patient_ids, int k = 5, int reps = 5,
                      std::uint64_t master_seed = 0);

}  // namespace mprkit::eval
