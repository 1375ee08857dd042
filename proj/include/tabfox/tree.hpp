#pragma once

#include <span>
#include <vector>

#include <json.hpp>

namespace tabfox {

/// Binary decision-tree node stored in a flat array (root at index 0).
/// Internal nodes route `x[feature] <= threshold` to the left child. Leaves
/// carry a value vector: a class distribution for classification trees, a
/// single regression weight for boosted trees. `cover` is the number of
/// training samples that reached the node.
struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double cover = 0.0;
    std::vector<double> value;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    /// Index of the leaf a fully-known row lands in.
    int leaf_for(std::span<const double> row) const {
        int idx = 0;
        while (!nodes[static_cast<std::size_t>(idx)].is_leaf()) {
            const TreeNode& node = nodes[static_cast<std::size_t>(idx)];
            idx = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                : node.right;
        }
        return idx;
    }

    const std::vector<double>& evaluate(std::span<const double> row) const {
        return nodes[static_cast<std::size_t>(leaf_for(row))].value;
    }
};

nlohmann::json tree_to_json(const Tree& tree);

/// Parses the nested-object form back to the flat layout. value_width is the
/// expected leaf value length (n_classes for forests, 1 for boosted trees).
Tree tree_from_json(const nlohmann::json& j, std::size_t value_width);

} // namespace tabfox
