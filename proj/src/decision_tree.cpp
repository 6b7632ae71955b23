#include "dspear/decision_tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "dspear/errors.hpp"

namespace dspear::models {

namespace {

double entropy(const std::vector<std::size_t>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

struct Builder {
  const Matrix& x;
  const std::vector<int>& y;
  std::size_t n_classes;
  TreeOptions opt;
  std::vector<TreeNode> nodes;

  int make_leaf(const std::vector<std::size_t>& counts, std::size_t total) {
    TreeNode leaf;
    leaf.samples = total;
    std::size_t best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c)
      if (counts[c] > counts[best]) best = c;
    leaf.cls = static_cast<int>(best);
    leaf.confidence = total ? static_cast<double>(counts[best]) / static_cast<double>(total) : 0.0;
    nodes.push_back(leaf);
    return static_cast<int>(nodes.size() - 1);
  }

  int build(const std::vector<std::size_t>& idx, int depth) {
    std::vector<std::size_t> counts(n_classes, 0);
    for (auto i : idx) ++counts[static_cast<std::size_t>(y[i])];
    const std::size_t total = idx.size();
    const double purity = static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
                          static_cast<double>(total);
    if (depth >= opt.max_depth || purity >= opt.purity || total < opt.min_samples) return make_leaf(counts, total);

    const double parent_h = entropy(counts, total);
    double best_gain = 0.0;
    int best_feature = -1;
    double best_thr = 0.0;
    std::vector<std::pair<double, int>> vals(total);
    for (std::size_t f = 0; f < x.cols(); ++f) {
      for (std::size_t j = 0; j < total; ++j) vals[j] = {x(idx[j], f), y[idx[j]]};
      std::sort(vals.begin(), vals.end());
      std::vector<std::size_t> left(n_classes, 0);
      std::size_t j = 0;
      while (j < total) {
        const double v = vals[j].first;
        while (j < total && vals[j].first == v) ++left[static_cast<std::size_t>(vals[j++].second)];
        if (j == total) break;
        const auto thr = static_cast<double>(static_cast<float>(0.5 * (v + vals[j].first)));
        // Float rounding can collapse the midpoint onto a neighbour; the
        // split must still separate v from the next value.
        if (!(thr > v && thr <= vals[j].first)) continue;
        std::vector<std::size_t> right(n_classes);
        for (std::size_t c = 0; c < n_classes; ++c) right[c] = counts[c] - left[c];
        const double wl = static_cast<double>(j) / static_cast<double>(total);
        const double gain = parent_h - wl * entropy(left, j) - (1.0 - wl) * entropy(right, total - j);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_thr = thr;
        }
      }
    }
    if (best_feature < 0) return make_leaf(counts, total);

    std::vector<std::size_t> li, ri;
    for (auto i : idx) (x(i, static_cast<std::size_t>(best_feature)) < best_thr ? li : ri).push_back(i);
    const int me = static_cast<int>(nodes.size());
    TreeNode node;
    node.feature = best_feature;
    node.threshold = best_thr;
    node.samples = total;
    nodes.push_back(node);
    const int l = build(li, depth + 1);
    const int r = build(ri, depth + 1);
    nodes[static_cast<std::size_t>(me)].left = l;
    nodes[static_cast<std::size_t>(me)].right = r;
    return me;
  }
};

}  // namespace

int DecisionTree::depth() const {
  std::function<int(int)> rec = [&](int i) -> int {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.feature < 0) return 0;
    return 1 + std::max(rec(n.left), rec(n.right));
  };
  return nodes.empty() ? 0 : rec(0);
}

void DecisionTree::validate() const {
  if (nodes.empty()) throw ModelFormatError("decision tree has no nodes");
  if (class_names.size() < 2) throw ModelFormatError("decision tree needs at least two classes");
  const auto n = static_cast<int>(nodes.size());
  for (const auto& node : nodes) {
    if (node.feature < 0) {
      if (node.cls < 0 || node.cls >= static_cast<int>(class_names.size()))
        throw ModelFormatError("decision tree leaf has invalid class");
    } else {
      if (node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n)
        throw ModelFormatError("decision tree internal node lacks two children");
      if (static_cast<std::size_t>(node.feature) >= n_features)
        throw ModelFormatError("decision tree references unknown feature");
    }
  }
}

DecisionTree tree_train(const Matrix& x, const std::vector<int>& y, std::vector<std::string> class_names,
                        std::vector<std::string> feature_names, const TreeOptions& options) {
  if (x.rows() != y.size()) throw std::invalid_argument("tree_train: label count does not match rows");
  if (class_names.size() < 2) throw std::invalid_argument("tree_train: need at least two class names");
  std::vector<std::size_t> seen(class_names.size(), 0);
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= class_names.size())
      throw std::invalid_argument("tree_train: label out of range");
    ++seen[static_cast<std::size_t>(label)];
  }
  for (std::size_t c = 0; c < seen.size(); ++c)
    if (seen[c] == 0) throw DataError("tree training data has no samples of class '" + class_names[c] + "'");

  Builder b{x, y, class_names.size(), options, {}};
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), 0);
  b.build(idx, 0);

  DecisionTree t;
  t.class_names = std::move(class_names);
  t.feature_names = std::move(feature_names);
  t.n_features = x.cols();
  t.nodes = std::move(b.nodes);
  return t;
}

TreeVerdict tree_classify(const DecisionTree& tree, std::span<const double> x) {
  if (x.size() < tree.n_features)
    throw std::invalid_argument("tree_classify: summary has " + std::to_string(x.size()) + " features, tree needs " +
                                std::to_string(tree.n_features));
  std::size_t i = 0;
  while (tree.nodes[i].feature >= 0) {
    const auto& n = tree.nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  const auto& leaf = tree.nodes[i];
  return {leaf.cls, tree.class_names[static_cast<std::size_t>(leaf.cls)], leaf.confidence};
}

}  // namespace dspear::models
