#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "das/common.hpp"

namespace das {

/// Binary decision tree over the counter vector, producing F or S.
/// Internal nodes send `value < threshold` left and everything else right.
struct DecisionTree {
  struct Node {
    int feature = -1;  // index into the full counter vector; -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    PolicyTag label = PolicyTag::Fast;  // meaningful for leaves only

    bool is_leaf() const { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  int max_depth = 0;
  std::vector<Node> nodes;  // nodes[0] is the root
  std::vector<int> features;  // selected counter indices
  std::vector<std::string> feature_names;  // names of `features`, for load-time checks

  /// A single leaf.
  static DecisionTree constant(PolicyTag label);

  int depth() const;
  /// Structural checks: children in range, finite thresholds, depth <= max_depth.
  void validate() const;

  bool operator==(const DecisionTree&) const = default;
};

/// Deterministic tree walk. Throws if a referenced feature is missing.
PolicyTag classify(const DecisionTree& tree, std::span<const double> counters);

std::string tree_to_text(const DecisionTree& tree);
DecisionTree tree_from_text(const std::string& text);
void save_tree(const DecisionTree& tree, const std::filesystem::path& path);
DecisionTree load_tree(const std::filesystem::path& path);

}  // namespace das
