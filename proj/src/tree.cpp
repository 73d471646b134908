#include "das/tree.hpp"

#include <cmath>

#include "das/io.hpp"
#include "json.hpp"

namespace das {

DecisionTree DecisionTree::constant(PolicyTag label) {
  DecisionTree t;
  t.nodes.push_back({-1, 0.0, -1, -1, label});
  return t;
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  int best = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const auto& n = nodes.at(i);
    if (!n.is_leaf()) {
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  return best;
}

void DecisionTree::validate() const {
  if (nodes.empty()) throw Error("decision tree has no nodes");
  const int n = static_cast<int>(nodes.size());
  std::vector<int> parents(nodes.size(), 0);
  for (const auto& node : nodes) {
    if (node.is_leaf()) continue;
    if (node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n)
      throw Error("decision tree node has a child out of range");
    if (!std::isfinite(node.threshold)) throw Error("decision tree threshold is not finite");
    ++parents[node.left];
    ++parents[node.right];
  }
  for (int i = 1; i < n; ++i)
    if (parents[i] != 1) throw Error("decision tree node " + std::to_string(i) + " is not a tree child");
  if (depth() > max_depth) throw Error("decision tree exceeds its max depth");
}

PolicyTag classify(const DecisionTree& tree, std::span<const double> counters) {
  int i = 0;
  for (;;) {
    const auto& node = tree.nodes.at(static_cast<std::size_t>(i));
    if (node.is_leaf()) return node.label;
    if (static_cast<std::size_t>(node.feature) >= counters.size())
      throw Error("snapshot lacks feature index " + std::to_string(node.feature));
    i = counters[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right;
  }
}

std::string tree_to_text(const DecisionTree& tree) {
  nlohmann::json j;
  j["schema"] = "das-tree";
  j["version"] = kSchemaVersion;
  j["max_depth"] = tree.max_depth;
  j["features"] = tree.features;
  j["feature_names"] = tree.feature_names;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    if (n.is_leaf())
      nodes.push_back({{"leaf", std::string(1, tag_char(n.label))}});
    else
      nodes.push_back(
          {{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}});
  }
  return j.dump() + "\n";
}

DecisionTree tree_from_text(const std::string& text) {
  DecisionTree t;
  try {
    const auto j = nlohmann::json::parse(text);
    check_schema(j, "das-tree");
    t.max_depth = j.at("max_depth").get<int>();
    t.features = j.at("features").get<std::vector<int>>();
    t.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& jn : j.at("nodes")) {
      DecisionTree::Node n;
      if (jn.contains("leaf")) {
        const auto s = jn.at("leaf").get<std::string>();
        if (s != "F" && s != "S") throw Error("decision tree leaf label must be F or S");
        n.label = s == "F" ? PolicyTag::Fast : PolicyTag::Slow;
      } else {
        n.feature = jn.at("f").get<int>();
        n.threshold = jn.at("t").get<double>();
        n.left = jn.at("l").get<int>();
        n.right = jn.at("r").get<int>();
        if (n.feature < 0) throw Error("decision tree feature index is negative");
      }
      t.nodes.push_back(n);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed tree file: ") + e.what());
  }
  t.validate();
  return t;
}

void save_tree(const DecisionTree& tree, const std::filesystem::path& path) {
  tree.validate();
  write_text(path, tree_to_text(tree));
}

DecisionTree load_tree(const std::filesystem::path& path) { return tree_from_text(read_text(path)); }

}  // namespace das
