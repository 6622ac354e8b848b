#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "resp/corpus/clip.hpp"
#include "resp/seed.hpp"

namespace resp {

enum class GroupBy { Recording, Clip };

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  GroupBy group_by = GroupBy::Recording;
};

/// Item identity for splitting: the group it must stay with and its label.
struct SplitKey {
  std::string group;
  RespClass label = RespClass::Normal;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Partitions items by group. Test gets clamp(round(G (1 - f)), 1, G - 1)
/// groups. Groups are stratified by their majority label so that, where the
/// test budget allows, every class with at least two groups lands on both
/// sides. Indices come back in ascending order.
inline SplitIndices split_indices(const std::vector<SplitKey>& keys, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw Error(Errc::InvalidArgument, "train_fraction must lie in (0, 1)");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < keys.size(); ++i) members[keys[i].group].push_back(i);
  const std::size_t G = members.size();
  if (G < 2) throw Error(Errc::TooFewGroups, "need at least two groups to split, have " + std::to_string(G));

  // Majority label per group; ties go to the lower class index.
  std::map<int, std::vector<std::string>> by_class;
  for (const auto& [g, idx] : members) {
    int counts[4] = {0, 0, 0, 0};
    for (auto i : idx) ++counts[class_index(keys[i].label)];
    int best = 0;
    for (int c = 1; c < 4; ++c)
      if (counts[c] > counts[best]) best = c;
    by_class[best].push_back(g);
  }
  Rng rng = make_rng(derive_seed(spec.seed, "split"));
  for (auto& [c, groups] : by_class) shuffle(groups, rng);

  const auto n_test = static_cast<std::size_t>(std::clamp<long long>(
      std::llround(static_cast<double>(G) * (1.0 - spec.train_fraction)), 1, static_cast<long long>(G) - 1));

  // Largest-remainder quotas, then the at-least-one-per-side adjustment.
  std::map<int, std::size_t> quota;
  std::vector<std::pair<double, int>> remainders;
  std::size_t assigned = 0;
  for (const auto& [c, groups] : by_class) {
    const double exact = static_cast<double>(groups.size()) * static_cast<double>(n_test) / static_cast<double>(G);
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n_test && i < remainders.size(); ++i, ++assigned) ++quota[remainders[i].second];
  // Move slots to classes with two or more groups and no test group, taking
  // them from the class with the largest quota that can spare one.
  for (auto& [c, groups] : by_class) {
    if (groups.size() < 2 || quota[c] > 0) continue;
    int donor = -1;
    for (auto& [d, q] : quota)
      if (q > 1 && (donor < 0 || q > quota[donor])) donor = d;
    if (donor < 0) break;
    --quota[donor];
    ++quota[c];
  }
  // Keep a train group for every class with two or more groups.
  for (auto& [c, groups] : by_class) {
    if (groups.size() >= 2 && quota[c] >= groups.size()) {
      --quota[c];
      for (auto& [d, q] : quota)
        if (d != c && q + 1 < by_class[d].size()) {
          ++q;
          break;
        }
    }
  }

  std::map<std::string, bool> is_test;
  for (const auto& [c, groups] : by_class)
    for (std::size_t i = 0; i < groups.size(); ++i) is_test[groups[i]] = i < quota[c];
  SplitIndices out;
  for (std::size_t i = 0; i < keys.size(); ++i) (is_test[keys[i].group] ? out.test : out.train).push_back(i);
  return out;
}

inline std::vector<SplitKey> split_keys(const std::vector<Clip>& clips, GroupBy by) {
  std::vector<SplitKey> keys;
  keys.reserve(clips.size());
  for (const auto& c : clips) keys.push_back({by == GroupBy::Recording ? c.source_id : c.clip_id, c.label});
  return keys;
}

/// Copies clips into (train, test) and stamps their partition.
inline std::pair<std::vector<Clip>, std::vector<Clip>> split_dataset(const std::vector<Clip>& clips,
                                                                     const SplitSpec& spec) {
  const SplitIndices idx = split_indices(split_keys(clips, spec.group_by), spec);
  std::pair<std::vector<Clip>, std::vector<Clip>> out;
  for (auto i : idx.train) {
    out.first.push_back(clips[i]);
    out.first.back().partition = Partition::Train;
  }
  for (auto i : idx.test) {
    out.second.push_back(clips[i]);
    out.second.back().partition = Partition::Test;
  }
  return out;
}

}  // namespace resp
