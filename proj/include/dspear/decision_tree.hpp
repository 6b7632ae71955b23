#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dspear/matrix.hpp"

namespace dspear::models {

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // x < threshold goes left
  int left = -1;
  int right = -1;
  int cls = -1;            // leaf class index
  double confidence = 0.0; // leaf purity
  std::size_t samples = 0;
};

struct DecisionTree {
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  std::size_t n_features = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  int depth() const;
  void validate() const;
};

struct TreeOptions {
  int max_depth = 10;
  double purity = 0.95;
  std::size_t min_samples = 5;
};

// Greedy information-gain splits. Ties go to the lowest feature index, then
// the lowest threshold; leaf ties go to the lower class index. Thresholds are
// rounded to float precision so they survive serialization unchanged.
DecisionTree tree_train(const Matrix& x, const std::vector<int>& y, std::vector<std::string> class_names,
                        std::vector<std::string> feature_names = {}, const TreeOptions& options = {});

struct TreeVerdict {
  int cls = -1;
  std::string label;
  double confidence = 0.0;
};

TreeVerdict tree_classify(const DecisionTree& tree, std::span<const double> x);

}  // namespace dspear::models
