#include "mprkit/eval/splits.hpp"

#include <algorithm>
#include <stdexcept>

#include "mprkit/seeding.hpp"

namespace mprkit::eval {

SplitPlan make_splits(std::vector<std::string> patient_ids, int k, int reps,
                      std::uint64_t master_seed) {
  if (k < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  if (reps < 1) throw std::invalid_argument("cross-validation needs at least 1 repetition");
  std::sort(patient_ids.begin(), patient_ids.end());
  patient_ids.erase(std::unique(patient_ids.begin(), patient_ids.end()), patient_ids.end());
  const int n = static_cast<int>(patient_ids.size());
  if (n < k) throw std::invalid_argument("too few patients");

  SplitPlan plan;
  plan.k = k;
  plan.reps = reps;
  plan.splits.reserve(static_cast<size_t>(k) * reps);

  for (int r = 0; r < reps; ++r) {
    std::vector<std::string> order = patient_ids;
    Rng rng(seed_combine(master_seed, static_cast<std::uint64_t>(r)));
    rng.shuffle(order);

    const int base = n / k;
    const int extra = n % k;  // the first `extra` folds take one more patient
    int cursor = 0;
    for (int f = 0; f < k; ++f) {
      const int size = base + (f < extra ? 1 : 0);
      Split split;
      split.rep = r;
      split.fold = f;
      split.init_seed = seed_combine(master_seed, static_cast<std::uint64_t>(r),
                                     static_cast<std::uint64_t>(f));
      split.test_patients.assign(order.begin() + cursor, order.begin() + cursor + size);
      split.train_patients.assign(order.begin(), order.begin() + cursor);
      split.train_patients.insert(split.train_patients.end(), order.begin() + cursor + size,
                                  order.end());
      plan.splits.push_back(std::move(split));
      cursor += size;
    }
  }
  return plan;
}

}  // namespace mprkit::eval
